//! Slow-light polariton solver.
//!
//! Integrates the three-field system in the retarded frame tau = t - z/c,
//! which removes the stiff vacuum advection of the raw equations
//! (CFL would demand femtosecond steps) and leaves the same
//! cross-propagation structure as the GEM solver:
//!
//!   dA/dz = i g(z)/(2c) * P                (spatial quadrature per instant)
//!   dP/dt = -Gamma/2 P + i g(z)/2 A + i Omega_C(t)/2 S
//!   dS/dt = i Omega_C(t)/2 P
//!
//! with the local collective coupling g(z) = sqrt(c*Gamma*OD*n(z)/L), which
//! reduces to the uniform g_P for a flat density. The retardation L/c
//! (~33 ps for a 1 cm cloud) is reported in run metadata rather than
//! resolved.

use num_complex::Complex64;

use crate::density::DensityProfile;
use crate::error::SolverError;
use crate::gem::{RHO_BLOWUP_LIMIT, STEP_CONTROL_LIMIT};
use crate::grid::SimGrid;
use crate::params::PhysicalParams;
use crate::ramp::CouplingRamp;
use crate::record::{FieldRecord, RecordSpec};
use crate::trace::{C64, ComplexTrace};

/// Signal, polarization and spin-wave fields at one instant.
#[derive(Debug, Clone)]
pub struct EitState {
    /// Signal field over z (slaved to P; kept for diagnostics/hand-off checks).
    pub a: Vec<C64>,
    /// Scaled polarization P = g(z) * rho_ge.
    pub p: Vec<C64>,
    /// Scaled spin wave S = g(z) * rho_gh.
    pub s: Vec<C64>,
    pub t_now: f64,
}

impl EitState {
    pub fn zeros(nz: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); nz];
        Self {
            a: z.clone(),
            p: z.clone(),
            s: z,
            t_now: 0.0,
        }
    }

    pub fn max_abs_p(&self) -> f64 {
        self.p.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_a(&self) -> f64 {
        self.a.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// One element of an EIT coupling schedule.
#[derive(Debug, Clone)]
pub struct EitSegment {
    pub duration: f64,
    pub omega_c: CouplingRamp,
    /// Whether the boundary input trace feeds this segment.
    pub input_open: bool,
}

#[derive(Debug)]
pub struct EitRunOutput {
    /// A(t, z = L) over the run (retarded time).
    pub exit: ComplexTrace,
    pub final_state: EitState,
    /// (time, |S(z)|) captured at the first instant the coupling reaches 0.
    pub stop_snapshot: Option<(f64, Vec<f64>)>,
    pub fields: Option<FieldRecord>,
    /// Unresolved vacuum retardation L/c, s.
    pub retardation: f64,
}

/// Group velocity of the dark-state polariton: v_g = c * W^2 / (W^2 + g_P^2).
pub fn group_velocity(params: &PhysicalParams, omega_c: f64) -> f64 {
    if omega_c == 0.0 {
        return 0.0;
    }
    let w2 = omega_c * omega_c;
    let gp2 = params.c_light * params.gamma * params.od / params.length;
    params.c_light * w2 / (w2 + gp2)
}

/// Local collective coupling g(z) over the grid.
pub fn coupling_profile(density: &DensityProfile, params: &PhysicalParams, grid: &SimGrid) -> Vec<f64> {
    let scale = params.c_light * params.gamma * params.od / params.length;
    (0..grid.nz)
        .map(|i| (scale * density.samples[i].max(0.0)).sqrt())
        .collect()
}

fn midpoint_c(values: &[C64], i: usize) -> C64 {
    let n = values.len();
    if n < 4 {
        return (values[i] + values[i + 1]) * 0.5;
    }
    let base = (i as isize - 1).clamp(0, n as isize - 4) as usize;
    let u = i as f64 + 0.5 - base as f64;
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    values[base] * l0 + values[base + 1] * l1 + values[base + 2] * l2 + values[base + 3] * l3
}

/// Slaved field: A(z) = input + (i/2c) * integral of g(z')P(z') dz', by
/// composite Simpson with cubic midpoints.
fn field_march(
    p_row: &[C64],
    input: C64,
    g: &[f64],
    density: &DensityProfile,
    params: &PhysicalParams,
    grid: &SimGrid,
) -> Vec<C64> {
    let nz = grid.nz;
    let dz = grid.dz;
    let scale = params.c_light * params.gamma * params.od / params.length;
    let half_i_over_c = Complex64::new(0.0, 0.5 / params.c_light);
    let mut a = vec![Complex64::new(0.0, 0.0); nz];
    a[0] = input;
    for i in 0..nz - 1 {
        let zm = grid.z(i) + 0.5 * dz;
        let gm = (scale * density.value(zm).max(0.0)).sqrt();
        let f0 = p_row[i] * g[i];
        let fm = midpoint_c(p_row, i) * gm;
        let f1 = p_row[i + 1] * g[i + 1];
        a[i + 1] = a[i] + half_i_over_c * ((f0 + fm * 4.0 + f1) * (dz / 6.0));
    }
    a
}

pub struct EitRhs {
    pub dp: Vec<C64>,
    pub ds: Vec<C64>,
}

/// Full semi-discrete time derivative of (P, S) with the optical field
/// slaved to P and the boundary input. Probing point for dense
/// linear-algebra cross-checks.
pub fn semi_discrete_rhs(
    p_row: &[C64],
    s_row: &[C64],
    input: C64,
    omega_c: f64,
    density: &DensityProfile,
    params: &PhysicalParams,
    grid: &SimGrid,
) -> EitRhs {
    let g = coupling_profile(density, params, grid);
    let a = field_march(p_row, input, &g, density, params, grid);
    eit_rhs(p_row, s_row, &a, omega_c, &g, params)
}

fn eit_rhs(
    p_row: &[C64],
    s_row: &[C64],
    a_row: &[C64],
    omega_c: f64,
    g: &[f64],
    params: &PhysicalParams,
) -> EitRhs {
    let half_gamma = 0.5 * params.gamma;
    let half_omega_i = Complex64::new(0.0, 0.5 * omega_c);
    let nz = p_row.len();
    let mut dp = Vec::with_capacity(nz);
    let mut ds = Vec::with_capacity(nz);
    for i in 0..nz {
        let half_g_i = Complex64::new(0.0, 0.5 * g[i]);
        dp.push(p_row[i] * (-half_gamma) + a_row[i] * half_g_i + s_row[i] * half_omega_i);
        ds.push(p_row[i] * half_omega_i);
    }
    EitRhs { dp, ds }
}

/// Finiteness plus a divergence brake: |S|/g_P and |P|/g_P play the role of
/// atomic coherences and are bounded like the GEM rho_gh, relative to the
/// largest coherence scale seen at run start.
fn check_eit_state(state: &EitState, g_p: f64, ref_rho: f64) -> Result<(), SolverError> {
    for (name, row) in [("A", &state.a), ("P", &state.p), ("S", &state.s)] {
        let m = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !m.is_finite() {
            return Err(SolverError::NonFinite {
                t: state.t_now,
                field: name,
            });
        }
        if name != "A" && m / g_p > RHO_BLOWUP_LIMIT * ref_rho {
            return Err(SolverError::CoherenceBlowUp {
                t: state.t_now,
                max_abs: m / g_p,
            });
        }
    }
    Ok(())
}

fn fastest_rate(params: &PhysicalParams, omega_max: f64, nz: usize) -> f64 {
    let collective = params.od * params.gamma / (4.0 * nz as f64);
    (0.5 * params.gamma).max(0.5 * omega_max).max(collective)
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

/// Runs the EIT system over a coupling schedule, recording A(t, z = L).
pub fn eit_run(
    initial: EitState,
    input: Option<&ComplexTrace>,
    segments: &[EitSegment],
    grid: &SimGrid,
    density: &DensityProfile,
    params: &PhysicalParams,
    record: Option<RecordSpec>,
) -> Result<EitRunOutput, SolverError> {
    if segments.is_empty() {
        return Err(SolverError::BadSchedule {
            reason: "empty segment list".into(),
        });
    }
    let dt = grid.dt;
    let g = coupling_profile(density, params, grid);
    let input_scale = input.map(|t| t.max_abs()).unwrap_or(0.0);
    let g_p = params.g_p();
    let mut state = initial;
    let ref_rho = (state.s.iter().chain(state.p.iter()))
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        / g_p;
    let ref_rho = ref_rho.max(input_scale).max(1.0);
    check_eit_state(&state, g_p, ref_rho)?;

    let total_steps: usize = segments
        .iter()
        .map(|s| segment_steps(s.duration, dt))
        .sum::<Result<usize, _>>()?;
    let t_start = state.t_now;
    let mut exit = Vec::with_capacity(total_steps + 1);
    let mut fields = record.map(|_| FieldRecord::new(grid.z_axis().collect()));
    let stride = record.map(|r| r.stride.max(1)).unwrap_or(1);
    let mut stop_snapshot: Option<(f64, Vec<f64>)> = None;
    let mut step_index = 0usize;

    for seg in segments {
        let steps = segment_steps(seg.duration, dt)?;
        let seg_t0 = state.t_now;
        let seg_step0 = step_index;
        let omega_at = |t: f64| seg.omega_c.value(t - seg_t0);
        let input_at = |t: f64| -> C64 {
            if seg.input_open {
                input.map(|tr| tr.interp(t)).unwrap_or(Complex64::new(0.0, 0.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        };

        let rate = fastest_rate(params, seg.omega_c.max_value(), grid.nz);
        if dt * rate > STEP_CONTROL_LIMIT {
            return Err(SolverError::StepControl {
                dt,
                rate,
                phase: dt * rate,
                limit: STEP_CONTROL_LIMIT,
            });
        }

        for _ in 0..steps {
            let t = state.t_now;
            // stage 1
            let a1 = field_march(&state.p, input_at(t), &g, density, params, grid);
            let w1 = omega_at(t);
            let k1 = eit_rhs(&state.p, &state.s, &a1, w1, &g, params);
            // stage 2/3 at midpoint
            let tm = t + 0.5 * dt;
            let wm = omega_at(tm);
            let im = input_at(tm);
            let p2 = add_scaled(&state.p, &k1.dp, 0.5 * dt);
            let s2 = add_scaled(&state.s, &k1.ds, 0.5 * dt);
            let a2 = field_march(&p2, im, &g, density, params, grid);
            let k2 = eit_rhs(&p2, &s2, &a2, wm, &g, params);
            let p3 = add_scaled(&state.p, &k2.dp, 0.5 * dt);
            let s3 = add_scaled(&state.s, &k2.ds, 0.5 * dt);
            let a3 = field_march(&p3, im, &g, density, params, grid);
            let k3 = eit_rhs(&p3, &s3, &a3, wm, &g, params);
            // stage 4 (time rebuilt from the step count so sample instants
            // stay exactly on the input grid)
            let t4 = seg_t0 + (step_index - seg_step0 + 1) as f64 * dt;
            let w4 = omega_at(t4);
            let p4 = add_scaled(&state.p, &k3.dp, dt);
            let s4 = add_scaled(&state.s, &k3.ds, dt);
            let a4 = field_march(&p4, input_at(t4), &g, density, params, grid);
            let k4 = eit_rhs(&p4, &s4, &a4, w4, &g, params);

            for i in 0..grid.nz {
                state.p[i] += (k1.dp[i] + (k2.dp[i] + k3.dp[i]) * 2.0 + k4.dp[i]) * (dt / 6.0);
                state.s[i] += (k1.ds[i] + (k2.ds[i] + k3.ds[i]) * 2.0 + k4.ds[i]) * (dt / 6.0);
            }
            exit.push(*a1.last().unwrap());
            state.a = a1;
            state.t_now = t4;
            check_eit_state(&state, g_p, ref_rho)?;

            if stop_snapshot.is_none() && w4 == 0.0 && w1 > 0.0 {
                stop_snapshot = Some((
                    state.t_now,
                    state.s.iter().map(|v| v.norm() / g_p).collect(),
                ));
            }
            if let Some(rec) = fields.as_mut() {
                if step_index % stride == 0 {
                    rec.push(
                        t,
                        state.a.clone(),
                        state.s.iter().map(|v| v.norm() / g_p).collect(),
                    );
                }
            }
            step_index += 1;
        }
    }

    // Final instant (boundary input still applies if the last segment is open).
    let final_input = if segments.last().map(|s| s.input_open).unwrap_or(false) {
        input
            .map(|tr| tr.interp(state.t_now))
            .unwrap_or(Complex64::new(0.0, 0.0))
    } else {
        Complex64::new(0.0, 0.0)
    };
    let a_final = field_march(&state.p, final_input, &g, density, params, grid);
    exit.push(*a_final.last().unwrap());
    if let Some(rec) = fields.as_mut() {
        rec.push(
            state.t_now,
            a_final.clone(),
            state.s.iter().map(|v| v.norm() / g_p).collect(),
        );
    }
    state.a = a_final;

    Ok(EitRunOutput {
        exit: ComplexTrace {
            values: exit,
            dt,
            t0: t_start,
        },
        final_state: state,
        stop_snapshot,
        fields,
        retardation: params.length / params.c_light,
    })
}

/// |S(z)|/g_P profile captured when the coupling first reached zero.
pub fn stopped_spinwave_profile(output: &EitRunOutput) -> Result<&[f64], SolverError> {
    output
        .stop_snapshot
        .as_ref()
        .map(|(_, prof)| prof.as_slice())
        .ok_or_else(|| SolverError::BadSchedule {
            reason: "coupling never reached zero during the run".into(),
        })
}

fn add_scaled(base: &[C64], dir: &[C64], s: f64) -> Vec<C64> {
    base.iter().zip(dir).map(|(b, d)| b + d * s).collect()
}
