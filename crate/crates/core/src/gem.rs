//! Gradient echo memory propagation solver.
//!
//! Cross-propagation scheme for the adiabatically eliminated Lambda system:
//! the signal envelope A obeys a linear spatial ODE at every instant while
//! the ground-state coherence rho_gh evolves in time at every position,
//!
//!   dA/dz      = -n(z) * (OD*Gamma / 2L) * (A + Omega_C*rho) / q
//!   drho/dt    = -(Omega_C/2) * (A + Omega_C*rho) / q + i*delta(z)*rho - gamma_gh*rho
//!
//! with q = Gamma - 2i*Delta and delta(z) the gradient-induced two-photon
//! detuning. Both right-hand sides share the eliminated polarization
//! (A + Omega_C*rho)/q, which keeps the pair passive: the optical energy
//! entering at z = 0 bounds the energy leaving at z = L plus what is stored
//! in the spin wave.
//!
//! Time stepping is classical RK4 with the field re-marched at every stage;
//! storage intervals with the coupling off are advanced analytically as a
//! pure phase winding.

use crate::density::DensityProfile;
use crate::error::SolverError;
use crate::grid::SimGrid;
use crate::params::PhysicalParams;
use crate::ramp::CouplingRamp;
use crate::record::{FieldRecord, RecordSpec};
use crate::trace::{C64, ComplexTrace};

/// Maximum allowed phase advance per step for the explicit integrator.
pub const STEP_CONTROL_LIMIT: f64 = 0.1;
/// Coherence magnitude beyond which the solver declares blow-up.
pub const RHO_BLOWUP_LIMIT: f64 = 10.0;

/// Ground-state coherence field at one instant.
#[derive(Debug, Clone)]
pub struct GemState {
    pub rho: Vec<C64>,
    pub t_now: f64,
}

impl GemState {
    pub fn zeros(nz: usize) -> Self {
        Self {
            rho: vec![C64::new(0.0, 0.0); nz],
            t_now: 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.rho.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Instantaneous drive values seen by the solver.
#[derive(Debug, Clone, Copy)]
pub struct GemDrive {
    /// Coupling Rabi frequency, rad/s.
    pub omega_c: f64,
    /// Single-photon detuning, rad/s.
    pub delta: f64,
    /// Gradient polarity: +1, -1 or 0.
    pub gradient_sign: f64,
    /// Gradient strength, rad/(s*m).
    pub beta: f64,
    /// Two-photon resonance offset, rad/s.
    pub omega0: f64,
    /// Boundary amplitude A(t, z=0).
    pub input: C64,
}

impl GemDrive {
    /// Two-photon detuning at position z (gradient centered on the cloud).
    pub fn delta_z(&self, z: f64, length: f64) -> f64 {
        self.gradient_sign * self.beta * (z - 0.5 * length) + self.omega0
    }
}

/// One piecewise element of a GEM run schedule.
#[derive(Debug, Clone)]
pub struct GemSegment {
    pub duration: f64,
    pub gradient_sign: f64,
    pub omega_c: CouplingRamp,
    pub delta: f64,
    pub input_open: bool,
}

#[derive(Debug)]
pub struct GemRunOutput {
    /// A(t, z = L) over the run.
    pub exit: ComplexTrace,
    pub final_state: GemState,
    pub fields: Option<FieldRecord>,
}

/// Cubic-interpolated value of `values` at half-integer index `i + 1/2`.
fn midpoint(values: &[C64], i: usize) -> C64 {
    let n = values.len();
    if n == 2 {
        return (values[0] + values[1]) * 0.5;
    }
    if n == 3 {
        // quadratic through all three points
        let u = i as f64 + 0.5;
        let l0 = (u - 1.0) * (u - 2.0) / 2.0;
        let l1 = -u * (u - 2.0);
        let l2 = u * (u - 1.0) / 2.0;
        return values[0] * l0 + values[1] * l1 + values[2] * l2;
    }
    let base = (i as isize - 1).clamp(0, n as isize - 4) as usize;
    let u = i as f64 + 0.5 - base as f64;
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    values[base] * l0 + values[base + 1] * l1 + values[base + 2] * l2 + values[base + 3] * l3
}

/// Integrates the spatial field ODE left-to-right (RK4 per cell) for a frozen
/// coherence row, returning A on all grid points.
pub fn spatial_march(
    rho_row: &[C64],
    drive: &GemDrive,
    density: &DensityProfile,
    params: &PhysicalParams,
    grid: &SimGrid,
) -> Result<Vec<C64>, SolverError> {
    debug_assert_eq!(rho_row.len(), grid.nz);
    let q = C64::new(params.gamma, -2.0 * drive.delta);
    let kappa = params.od * params.gamma / (2.0 * params.length);
    let coeff = -kappa / q; // times n(z): dA/dz = coeff*n*(A + Omega*rho)
    let omega = drive.omega_c;
    let dz = grid.dz;

    // A is in Rabi-frequency-like units; the retrieval source scales as
    // Omega*rho, so the runaway threshold must too.
    let rho_max = rho_row.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let limit = 1e6 * drive.input.norm().max(omega.abs() * rho_max).max(1e-12);

    let mut a = vec![C64::new(0.0, 0.0); grid.nz];
    a[0] = drive.input;
    for i in 0..grid.nz - 1 {
        let z0 = grid.z(i);
        let zm = z0 + 0.5 * dz;
        let n0 = density.samples[i];
        let nm = density.value(zm);
        let n1 = density.samples[i + 1];
        let rho0 = rho_row[i];
        let rhom = midpoint(rho_row, i);
        let rho1 = rho_row[i + 1];

        let f = |n: f64, rho: C64, av: C64| coeff * n * (av + rho * omega);
        let k1 = f(n0, rho0, a[i]);
        let k2 = f(nm, rhom, a[i] + k1 * (0.5 * dz));
        let k3 = f(nm, rhom, a[i] + k2 * (0.5 * dz));
        let k4 = f(n1, rho1, a[i] + k3 * dz);
        let next = a[i] + (k1 + (k2 + k3) * 2.0 + k4) * (dz / 6.0);
        if !next.re.is_finite() || !next.im.is_finite() {
            return Err(SolverError::NonFinite {
                t: 0.0,
                field: "A (spatial march)",
            });
        }
        if next.norm() > limit {
            return Err(SolverError::FieldBlowUp {
                t: 0.0,
                max_abs: next.norm(),
                limit,
            });
        }
        a[i + 1] = next;
    }
    Ok(a)
}

/// Full semi-discrete time derivative of the coherence row: the field is
/// marched from the boundary input first, then eliminated. Useful as a
/// probing point for dense linear-algebra cross-checks.
pub fn semi_discrete_rhs(
    rho_row: &[C64],
    drive: &GemDrive,
    density: &DensityProfile,
    params: &PhysicalParams,
    grid: &SimGrid,
) -> Result<Vec<C64>, SolverError> {
    let field = spatial_march(rho_row, drive, density, params, grid)?;
    let mut out = Vec::new();
    matter_rhs(rho_row, &field, drive, params, grid, &mut out);
    Ok(out)
}

/// Time derivative of the coherence row for a frozen field row.
fn matter_rhs(
    rho: &[C64],
    field: &[C64],
    drive: &GemDrive,
    params: &PhysicalParams,
    grid: &SimGrid,
    out: &mut Vec<C64>,
) {
    let q = C64::new(params.gamma, -2.0 * drive.delta);
    let omega = drive.omega_c;
    let half_omega_over_q = -C64::new(0.5 * omega, 0.0) / q;
    out.clear();
    out.extend((0..grid.nz).map(|i| {
        let delta_z = drive.delta_z(grid.z(i), params.length);
        half_omega_over_q * (field[i] + rho[i] * omega)
            + rho[i] * C64::new(-params.gamma_gh, delta_z)
    }));
}

/// Fastest rate present in the GEM matter dynamics, rad/s.
fn fastest_rate(drive: &GemDrive, params: &PhysicalParams) -> f64 {
    let delta_max = drive.beta.abs() * 0.5 * params.length * drive.gradient_sign.abs()
        + drive.omega0.abs();
    let omega2 = drive.omega_c * drive.omega_c;
    let power = omega2 / (2.0 * params.gamma);
    let q2 = params.gamma * params.gamma + 4.0 * drive.delta * drive.delta;
    // collective (field-mediated) rate surrogate
    let collective = params.od * params.gamma * omega2 / (2.0 * q2);
    delta_max.max(power).max(collective)
}

fn check_step(dt: f64, rate: f64) -> Result<(), SolverError> {
    let phase = dt * rate;
    if phase > STEP_CONTROL_LIMIT {
        return Err(SolverError::StepControl {
            dt,
            rate,
            phase,
            limit: STEP_CONTROL_LIMIT,
        });
    }
    Ok(())
}

fn check_state(state: &GemState) -> Result<(), SolverError> {
    let m = state.max_abs();
    if !m.is_finite() {
        return Err(SolverError::NonFinite {
            t: state.t_now,
            field: "rho_gh",
        });
    }
    if m > RHO_BLOWUP_LIMIT {
        return Err(SolverError::CoherenceBlowUp {
            t: state.t_now,
            max_abs: m,
        });
    }
    Ok(())
}

/// Advances the coherence by `dt` with the field and drive held fixed.
///
/// With the coupling off the dynamics are diagonal and the update is the
/// exact phase factor exp((i*delta(z) - gamma_gh) * dt); otherwise a classical
/// RK4 step is taken.
pub fn coherence_advance(
    state: &GemState,
    field: &[C64],
    drive: &GemDrive,
    params: &PhysicalParams,
    grid: &SimGrid,
    dt: f64,
) -> Result<GemState, SolverError> {
    check_state(state)?;
    let mut next = state.clone();
    if drive.omega_c == 0.0 {
        for (i, r) in next.rho.iter_mut().enumerate() {
            let delta_z = drive.delta_z(grid.z(i), params.length);
            *r *= C64::new(-params.gamma_gh * dt, delta_z * dt).exp();
        }
    } else {
        check_step(dt, fastest_rate(drive, params))?;
        let mut k1 = Vec::new();
        let mut k2 = Vec::new();
        let mut k3 = Vec::new();
        let mut k4 = Vec::new();
        let mut tmp: Vec<C64>;
        matter_rhs(&next.rho, field, drive, params, grid, &mut k1);
        tmp = add_scaled(&next.rho, &k1, 0.5 * dt);
        matter_rhs(&tmp, field, drive, params, grid, &mut k2);
        tmp = add_scaled(&next.rho, &k2, 0.5 * dt);
        matter_rhs(&tmp, field, drive, params, grid, &mut k3);
        tmp = add_scaled(&next.rho, &k3, dt);
        matter_rhs(&tmp, field, drive, params, grid, &mut k4);
        for i in 0..next.rho.len() {
            next.rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    next.t_now += dt;
    check_state(&next)?;
    Ok(next)
}

fn add_scaled(base: &[C64], dir: &[C64], s: f64) -> Vec<C64> {
    base.iter().zip(dir).map(|(b, d)| b + d * s).collect()
}

/// One full RK4 step of the coupled system: the field is re-marched at every
/// stage. Returns the field row at the step start.
fn gem_rk4_step(
    state: &mut GemState,
    dt: f64,
    drive_at: &dyn Fn(f64) -> GemDrive,
    density: &DensityProfile,
    params: &PhysicalParams,
    grid: &SimGrid,
) -> Result<Vec<C64>, SolverError> {
    let t = state.t_now;
    let d1 = drive_at(t);
    let dm = drive_at(t + 0.5 * dt);
    let d4 = drive_at(t + dt);

    let a1 = spatial_march(&state.rho, &d1, density, params, grid)?;
    let mut k1 = Vec::new();
    matter_rhs(&state.rho, &a1, &d1, params, grid, &mut k1);

    let r2 = add_scaled(&state.rho, &k1, 0.5 * dt);
    let a2 = spatial_march(&r2, &dm, density, params, grid)?;
    let mut k2 = Vec::new();
    matter_rhs(&r2, &a2, &dm, params, grid, &mut k2);

    let r3 = add_scaled(&state.rho, &k2, 0.5 * dt);
    let a3 = spatial_march(&r3, &dm, density, params, grid)?;
    let mut k3 = Vec::new();
    matter_rhs(&r3, &a3, &dm, params, grid, &mut k3);

    let r4 = add_scaled(&state.rho, &k3, dt);
    let a4 = spatial_march(&r4, &d4, density, params, grid)?;
    let mut k4 = Vec::new();
    matter_rhs(&r4, &a4, &d4, params, grid, &mut k4);

    for i in 0..state.rho.len() {
        state.rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
    }
    state.t_now += dt;
    check_state(state)?;
    Ok(a1)
}

fn segment_steps(duration: f64, dt: f64) -> Result<usize, SolverError> {
    let exact = duration / dt;
    let steps = exact.round().max(1.0);
    if (exact - steps).abs() > 1e-3 {
        return Err(SolverError::BadSchedule {
            reason: format!(
                "segment duration {duration:.6e} s is not a multiple of dt = {dt:.6e} s"
            ),
        });
    }
    Ok(steps as usize)
}

/// Runs a full GEM schedule, alternating the spatial march and the coherence
/// advance per time step, and records A(t, z = L).
pub fn gem_run(
    initial: GemState,
    segments: &[GemSegment],
    grid: &SimGrid,
    density: &DensityProfile,
    params: &PhysicalParams,
    input: Option<&ComplexTrace>,
    record: Option<RecordSpec>,
) -> Result<GemRunOutput, SolverError> {
    if segments.is_empty() {
        return Err(SolverError::BadSchedule {
            reason: "empty segment list".into(),
        });
    }
    let dt = grid.dt;
    let mut state = initial;
    check_state(&state)?;

    let total_steps: usize = segments
        .iter()
        .map(|s| segment_steps(s.duration, dt))
        .sum::<Result<usize, _>>()?;
    let t_start = state.t_now;
    let mut exit = Vec::with_capacity(total_steps + 1);
    let mut fields = record.map(|_| FieldRecord::new(grid.z_axis().collect()));
    let stride = record.map(|r| r.stride.max(1)).unwrap_or(1);
    let mut step_index = 0usize;

    for seg in segments {
        let steps = segment_steps(seg.duration, dt)?;
        let seg_t0 = state.t_now;
        let drive_at = |t: f64| -> GemDrive {
            let input_amp = if seg.input_open {
                input.map(|tr| tr.interp(t)).unwrap_or(C64::new(0.0, 0.0))
            } else {
                C64::new(0.0, 0.0)
            };
            GemDrive {
                omega_c: seg.omega_c.value(t - seg_t0),
                delta: seg.delta,
                gradient_sign: seg.gradient_sign,
                beta: params.beta,
                omega0: params.omega0,
                input: input_amp,
            }
        };

        let dark = seg.omega_c.max_value() == 0.0 && !seg.input_open;
        if dark && fields.is_none() {
            // Diagonal dynamics: advance the whole segment analytically.
            let drive = drive_at(seg_t0);
            for (i, r) in state.rho.iter_mut().enumerate() {
                let delta_z = drive.delta_z(grid.z(i), params.length);
                *r *= C64::new(-params.gamma_gh * seg.duration, delta_z * seg.duration).exp();
            }
            state.t_now = seg_t0 + steps as f64 * dt;
            exit.extend(std::iter::repeat(C64::new(0.0, 0.0)).take(steps));
            step_index += steps;
            continue;
        }

        check_step(dt, fastest_rate(&drive_at(seg_t0), params))?;
        check_step(dt, fastest_rate(&drive_at(seg_t0 + seg.duration), params))?;
        for _ in 0..steps {
            let a_row = if dark {
                vec![C64::new(0.0, 0.0); grid.nz]
            } else {
                gem_rk4_step(&mut state, dt, &drive_at, density, params, grid)?
            };
            if dark {
                let drive = drive_at(state.t_now);
                for (i, r) in state.rho.iter_mut().enumerate() {
                    let delta_z = drive.delta_z(grid.z(i), params.length);
                    *r *= C64::new(-params.gamma_gh * dt, delta_z * dt).exp();
                }
                state.t_now += dt;
            }
            exit.push(*a_row.last().unwrap());
            if let Some(rec) = fields.as_mut() {
                if step_index % stride == 0 {
                    rec.push(
                        state.t_now - dt,
                        a_row.clone(),
                        state.rho.iter().map(|v| v.norm()).collect(),
                    );
                }
            }
            step_index += 1;
        }
    }

    // Field at the final instant.
    let last_seg = segments.last().unwrap();
    let seg_t0 = state.t_now - last_seg.duration;
    let final_drive = GemDrive {
        omega_c: last_seg.omega_c.value(state.t_now - seg_t0),
        delta: last_seg.delta,
        gradient_sign: last_seg.gradient_sign,
        beta: params.beta,
        omega0: params.omega0,
        input: C64::new(0.0, 0.0),
    };
    let a_final = if last_seg.omega_c.max_value() == 0.0 {
        vec![C64::new(0.0, 0.0); grid.nz]
    } else {
        spatial_march(&state.rho, &final_drive, density, params, grid)?
    };
    exit.push(*a_final.last().unwrap());
    if let Some(rec) = fields.as_mut() {
        rec.push(
            state.t_now,
            a_final,
            state.rho.iter().map(|v| v.norm()).collect(),
        );
    }

    Ok(GemRunOutput {
        exit: ComplexTrace {
            values: exit,
            dt,
            t0: t_start,
        },
        final_state: state,
        fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::flat_density;
    use crate::grid::make_grid;
    use crate::params::ParamsInConfigUnits;
    use crate::units::mhz_to_rad;

    fn params() -> PhysicalParams {
        ParamsInConfigUnits::default().convert().unwrap()
    }

    fn drive_off(input: C64) -> GemDrive {
        GemDrive {
            omega_c: 0.0,
            delta: 0.0,
            gradient_sign: 0.0,
            beta: 0.0,
            omega0: 0.0,
            input,
        }
    }

    #[test]
    fn march_beer_lambert_at_resonance() {
        let p = params();
        let grid = make_grid(&p, 401, 1e-6, 1e-8).unwrap();
        let density = flat_density(&grid);
        let rho = vec![C64::new(0.0, 0.0); grid.nz];
        let a = spatial_march(&rho, &drive_off(C64::new(1.0, 0.0)), &density, &p, &grid).unwrap();
        // |A(L)|^2 = e^{-OD} with OD = 80
        let trans = a.last().unwrap().norm_sqr();
        let expect = (-p.od).exp();
        assert!(
            (trans.ln() - expect.ln()).abs() < 1e-3,
            "ln T = {} vs {}",
            trans.ln(),
            expect.ln()
        );
    }

    #[test]
    fn march_zero_input_zero_coherence() {
        let p = params();
        let grid = make_grid(&p, 64, 1e-6, 1e-8).unwrap();
        let density = flat_density(&grid);
        let rho = vec![C64::new(0.0, 0.0); grid.nz];
        let a = spatial_march(&rho, &drive_off(C64::new(0.0, 0.0)), &density, &p, &grid).unwrap();
        assert!(a.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn march_retrieval_source_emits() {
        let p = params();
        let grid = make_grid(&p, 201, 1e-6, 1e-8).unwrap();
        let density = flat_density(&grid);
        let rho: Vec<C64> = grid
            .z_axis()
            .map(|z| {
                let u = (z - 0.5 * p.length) / (0.1 * p.length);
                C64::new(0.05 * (-u * u / 2.0).exp(), 0.0)
            })
            .collect();
        let drive = GemDrive {
            omega_c: p.omega_c_max,
            delta: p.delta,
            gradient_sign: 0.0,
            beta: 0.0,
            omega0: 0.0,
            input: C64::new(0.0, 0.0),
        };
        let a = spatial_march(&rho, &drive, &density, &p, &grid).unwrap();
        assert!(a.last().unwrap().norm() > 0.0);
    }

    #[test]
    fn march_self_convergence() {
        // Coarse-grid march vs a 16x finer reference, compared at shared points.
        let p = params();
        let coarse = make_grid(&p, 101, 1e-6, 1e-8).unwrap();
        let fine = make_grid(&p, 1601, 1e-6, 1e-8).unwrap();
        let rho_at = |z: f64| {
            let u = (z - 0.4 * p.length) / (0.12 * p.length);
            C64::new(0.03 * (-u * u / 2.0).exp(), 0.01 * (-u * u).exp())
        };
        let rho_c: Vec<C64> = coarse.z_axis().map(rho_at).collect();
        let rho_f: Vec<C64> = fine.z_axis().map(rho_at).collect();
        let drive = GemDrive {
            omega_c: p.omega_c_max,
            delta: p.delta,
            gradient_sign: 0.0,
            beta: 0.0,
            omega0: 0.0,
            input: C64::new(0.3, 0.1),
        };
        let dc = flat_density(&coarse);
        let df = flat_density(&fine);
        let ac = spatial_march(&rho_c, &drive, &dc, &p, &coarse).unwrap();
        let af = spatial_march(&rho_f, &drive, &df, &p, &fine).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..coarse.nz {
            let diff = ac[i] - af[i * 16];
            num += diff.norm_sqr();
            den += af[i * 16].norm_sqr();
        }
        let rel = (num / den).sqrt();
        assert!(rel < 1e-4, "relative L2 error {rel}");
    }

    #[test]
    fn coherence_phase_winding_when_coupling_off() {
        let p = params();
        let grid = make_grid(&p, 64, 1e-6, 1e-8).unwrap();
        let rho0: Vec<C64> = (0..grid.nz)
            .map(|i| C64::new(0.1 + i as f64 * 1e-3, -0.05))
            .collect();
        let state = GemState {
            rho: rho0.clone(),
            t_now: 0.0,
        };
        let beta = p.beta;
        // delta(z) = beta*z realized by a +L/2 offset of omega0
        let drive = GemDrive {
            omega_c: 0.0,
            delta: 0.0,
            gradient_sign: 1.0,
            beta,
            omega0: beta * 0.5 * p.length,
            input: C64::new(0.0, 0.0),
        };
        let field = vec![C64::new(0.0, 0.0); grid.nz];
        let dt = 50e-9;
        let next = coherence_advance(&state, &field, &drive, &p, &grid, dt).unwrap();
        for i in 0..grid.nz {
            let expect = rho0[i] * C64::new(0.0, beta * grid.z(i) * dt).exp();
            assert!((next.rho[i] - expect).norm() < 1e-12);
            assert!((next.rho[i].norm() - rho0[i].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn coherence_identity_when_everything_off() {
        let p = params();
        let grid = make_grid(&p, 16, 1e-6, 1e-8).unwrap();
        let rho0: Vec<C64> = (0..grid.nz).map(|i| C64::new(0.02 * i as f64, 0.3)).collect();
        let state = GemState {
            rho: rho0.clone(),
            t_now: 0.0,
        };
        let field = vec![C64::new(0.0, 0.0); grid.nz];
        let next =
            coherence_advance(&state, &field, &drive_off(C64::new(0.0, 0.0)), &p, &grid, 1e-7)
                .unwrap();
        for i in 0..grid.nz {
            assert!((next.rho[i] - rho0[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn coherence_advance_matches_exact_diagonal_solution() {
        // With the field and drive frozen the per-z dynamics are a scalar
        // linear ODE drho/dt = lambda*rho + s with the exact solution
        // rho(dt) = e^{lambda dt} rho0 + (e^{lambda dt}-1)/lambda * s.
        let p = params();
        let grid = make_grid(&p, 16, 1e-6, 1e-8).unwrap();
        let rho0: Vec<C64> = (0..grid.nz)
            .map(|i| C64::new(0.05 * (i as f64 * 0.7).sin(), 0.04 * (i as f64).cos()))
            .collect();
        let field: Vec<C64> = (0..grid.nz)
            .map(|i| C64::new(0.2 * (i as f64 * 0.3).cos(), 0.1))
            .collect();
        let drive = GemDrive {
            omega_c: mhz_to_rad(3.0),
            delta: mhz_to_rad(30.0),
            gradient_sign: 1.0,
            beta: p.beta,
            omega0: 0.0,
            input: C64::new(0.0, 0.0),
        };
        let state = GemState {
            rho: rho0.clone(),
            t_now: 0.0,
        };
        let dt = 2e-9;
        let mut s = state;
        for _ in 0..64 {
            let next = coherence_advance(&s, &field, &drive, &p, &grid, dt).unwrap();
            s = next;
        }
        let q = C64::new(p.gamma, -2.0 * drive.delta);
        let t_tot = 64.0 * dt;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..grid.nz {
            let delta_z = drive.delta_z(grid.z(i), p.length);
            let lambda = -C64::new(drive.omega_c * drive.omega_c / 2.0, 0.0) / q
                + C64::new(0.0, delta_z);
            let src = -C64::new(0.5 * drive.omega_c, 0.0) / q * field[i];
            let e = (lambda * t_tot).exp();
            let exact = e * rho0[i] + (e - 1.0) / lambda * src;
            num += (s.rho[i] - exact).norm_sqr();
            den += exact.norm_sqr();
        }
        let rel = (num / den).sqrt();
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn step_control_rejects_coarse_dt() {
        let p = params();
        let grid = make_grid(&p, 16, 1e-6, 1e-8).unwrap();
        let drive = GemDrive {
            omega_c: p.omega_c_max,
            delta: 0.0,
            gradient_sign: 1.0,
            beta: p.beta,
            omega0: 0.0,
            input: C64::new(0.0, 0.0),
        };
        let state = GemState::zeros(grid.nz);
        let field = vec![C64::new(0.0, 0.0); grid.nz];
        let err = coherence_advance(&state, &field, &drive, &p, &grid, 1e-5);
        assert!(matches!(err, Err(SolverError::StepControl { .. })));
    }

    #[test]
    fn run_zero_input_stays_zero() {
        let p = params();
        let grid = make_grid(&p, 32, 4e-6, 2e-9).unwrap();
        let density = flat_density(&grid);
        let segs = vec![GemSegment {
            duration: 4e-6,
            gradient_sign: 1.0,
            omega_c: CouplingRamp::constant(p.omega_c_max),
            delta: p.delta,
            input_open: true,
        }];
        let out = gem_run(
            GemState::zeros(grid.nz),
            &segs,
            &grid,
            &density,
            &p,
            None,
            None,
        )
        .unwrap();
        assert!(out.exit.max_abs() == 0.0);
        assert!(out.final_state.max_abs() == 0.0);
    }

    #[test]
    fn run_rejects_untiled_segments() {
        let p = params();
        let grid = make_grid(&p, 16, 4e-6, 4e-9).unwrap();
        let density = flat_density(&grid);
        let segs = vec![GemSegment {
            duration: 4.00801e-6, // 1002.0025 steps: off by 0.25% of a step
            gradient_sign: 1.0,
            omega_c: CouplingRamp::constant(0.0),
            delta: 0.0,
            input_open: false,
        }];
        let r = gem_run(
            GemState::zeros(grid.nz),
            &segs,
            &grid,
            &density,
            &p,
            None,
            None,
        );
        assert!(matches!(r, Err(SolverError::BadSchedule { .. })));
    }
}
