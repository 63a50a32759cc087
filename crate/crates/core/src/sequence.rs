//! Protocol composition: pure GEM echo, pure EIT storage, and the two
//! hybrid sequences (GEM write-in with EIT readout and the reverse), plus
//! the coherence hand-off between the two solver representations.
//!
//! Timing convention for the hybrid sequences: the gradient impulse
//! integral(sign*beta dt), accumulated from the input pulse centroid, must
//! return to zero at readout start so the stored spin wave carries no
//! residual wavevector. The unwind duration is derived from that balance
//! when not set explicitly, and an imbalance beyond 1% is reported as a
//! run warning.

use std::collections::BTreeMap;

use num_complex::Complex64;
use crate::density::DensityProfile;
use crate::eit::{coupling_profile, eit_run, group_velocity, EitSegment, EitState};
use crate::error::SolverError;
use crate::gem::{gem_run, GemSegment, GemState};
use crate::grid::SimGrid;
use crate::params::PhysicalParams;
use crate::ramp::CouplingRamp;
use crate::record::{FieldRecord, RecordSpec};
use crate::trace::{C64, ComplexTrace};
use crate::units::TWO_PI;

/// Which stored-light sequence to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    /// Gradient write, reversed-gradient echo readout.
    GemOnly,
    /// Gradient write, slow-light readout (frequency-to-time conversion).
    GemWriteEitRead,
    /// Slow-light write, gradient readout (time-to-frequency conversion).
    EitWriteGemRead,
    /// Slow-light storage and release.
    EitOnly,
}

/// Solver mode of one timeline segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentMode {
    Gem,
    Eit,
    Dark,
}

/// Timings and drive levels of a protocol run. All durations are snapped to
/// whole time steps before execution.
#[derive(Debug, Clone)]
pub struct SequenceSettings {
    pub protocol: ProtocolKind,
    /// Write/hold gradient interval, s.
    pub t1: f64,
    /// Unwind interval, s; derived from the impulse balance when `None`.
    pub t2: Option<f64>,
    pub read_duration: f64,
    /// Readout coupling on-ramp (tanh), s.
    pub read_ramp: f64,
    /// Slow-light write-in coupling off-ramp (tanh), s.
    pub stop_ramp: f64,
    /// Dark settling interval after stopping, letting residual P decay
    /// before a hand-off, s.
    pub settle: f64,
    /// Coupling Rabi frequency during write-in, rad/s.
    pub omega_write: f64,
    /// Coupling Rabi frequency during readout, rad/s.
    pub omega_read: f64,
    /// Single-photon detuning used in GEM segments, rad/s.
    pub delta_gem: f64,
    /// Gradient polarity during write (reversed for unwind/readout).
    pub gradient_sign: f64,
    pub record: Option<RecordSpec>,
}

impl SequenceSettings {
    pub fn defaults(protocol: ProtocolKind, params: &PhysicalParams) -> Self {
        Self {
            protocol,
            t1: 10e-6,
            t2: None,
            read_duration: 15e-6,
            read_ramp: 0.5e-6,
            stop_ramp: 1e-6,
            settle: 0.2e-6,
            omega_write: params.omega_c_max,
            omega_read: params.omega_c_max,
            delta_gem: params.delta,
            gradient_sign: 1.0,
            record: None,
        }
    }
}

/// Executed-segment bookkeeping.
#[derive(Debug, Clone)]
pub struct SegmentMeta {
    pub mode: SegmentMode,
    pub t_start: f64,
    pub duration: f64,
}

/// Everything a protocol run produces.
#[derive(Debug)]
pub struct RunResult {
    pub input_trace: ComplexTrace,
    pub exit_trace: ComplexTrace,
    /// |rho_gh|-scale coherence over z at the end of the run.
    pub final_coherence: Vec<C64>,
    pub segments: Vec<SegmentMeta>,
    pub metrics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub fields: Option<FieldRecord>,
    /// Start of the readout segment on the run clock, s.
    pub read_start: f64,
}

impl RunResult {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Exit trace restricted to the readout interval.
    pub fn read_window(&self) -> ComplexTrace {
        let end = self.exit_trace.t(self.exit_trace.len().saturating_sub(1));
        self.exit_trace.window(self.read_start, end)
    }
}

/// Converts a stored GEM coherence into the slow-light representation:
/// S(z) = g(z) rho_gh(z); the optical and polarization fields start dark.
pub fn handoff_gem_to_eit(gem: &GemState, g: &[f64]) -> EitState {
    let nz = gem.rho.len();
    let mut s = Vec::with_capacity(nz);
    for i in 0..nz {
        s.push(gem.rho[i] * g[i]);
    }
    EitState {
        a: vec![Complex64::new(0.0, 0.0); nz],
        p: vec![Complex64::new(0.0, 0.0); nz],
        s,
        t_now: gem.t_now,
    }
}

/// Converts a stopped slow-light state back to the GEM representation:
/// rho_gh(z) = S(z)/g(z). Rejected when optical or polarization amplitude
/// is still live relative to the largest values seen during the run.
pub fn handoff_eit_to_gem(
    eit: &EitState,
    g: &[f64],
    max_a_seen: f64,
    max_p_seen: f64,
) -> Result<GemState, SolverError> {
    let res_a = eit.max_abs_a();
    let res_p = eit.max_abs_p();
    if res_a > 1e-6 * max_a_seen.max(1e-300) || res_p > 1e-6 * max_p_seen.max(1e-300) {
        return Err(SolverError::HandoffRejected {
            reason: format!(
                "residual optical/polarization excitation still live \
                 (|A| = {res_a:.3e} of {max_a_seen:.3e}, |P| = {res_p:.3e} of {max_p_seen:.3e})"
            ),
        });
    }
    let g_floor = 1e-6 * g.iter().copied().fold(0.0, f64::max);
    let rho = eit
        .s
        .iter()
        .zip(g)
        .map(|(s, &gi)| {
            if gi > g_floor {
                s / gi
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(GemState {
        rho,
        t_now: eit.t_now,
    })
}

fn snap(duration: f64, dt: f64) -> f64 {
    (duration / dt).round().max(1.0) * dt
}

/// Appends `tail` to `acc`, replacing the duplicated boundary sample (each
/// solver run emits both its first and final instants).
fn chain_exit(acc: &mut Vec<C64>, tail: &ComplexTrace, first: bool) {
    if first {
        acc.extend_from_slice(&tail.values);
    } else {
        if !acc.is_empty() {
            acc.pop();
        }
        acc.extend_from_slice(&tail.values);
    }
}

struct Timeline {
    exit: Vec<C64>,
    segments: Vec<SegmentMeta>,
    fields: Option<FieldRecord>,
    t: f64,
}

impl Timeline {
    fn new(record: bool) -> Self {
        Self {
            exit: Vec::new(),
            segments: Vec::new(),
            fields: record.then(FieldRecord::default),
            t: 0.0,
        }
    }

    fn push(&mut self, mode: SegmentMode, duration: f64, exit: &ComplexTrace, fields: Option<FieldRecord>) {
        chain_exit(&mut self.exit, exit, self.segments.is_empty());
        self.segments.push(SegmentMeta {
            mode,
            t_start: self.t,
            duration,
        });
        self.t += duration;
        if let (Some(acc), Some(f)) = (self.fields.as_mut(), fields) {
            acc.merge(f);
        }
    }
}

/// Runs the selected protocol on a synthesized input envelope.
pub fn run_protocol(
    settings: &SequenceSettings,
    input: &ComplexTrace,
    grid: &SimGrid,
    density: &DensityProfile,
    params: &PhysicalParams,
) -> Result<RunResult, SolverError> {
    match settings.protocol {
        ProtocolKind::GemOnly => run_gem_only(settings, input, grid, density, params),
        ProtocolKind::GemWriteEitRead => run_gem_eit(settings, input, grid, density, params),
        ProtocolKind::EitWriteGemRead => run_eit_gem(settings, input, grid, density, params),
        ProtocolKind::EitOnly => run_eit_only(settings, input, grid, density, params),
    }
}

fn base_metrics(
    settings: &SequenceSettings,
    params: &PhysicalParams,
    input: &ComplexTrace,
    result: &mut RunResult,
) {
    let read_window = result.read_window();
    let m = &mut result.metrics;
    m.insert(
        "memory_bandwidth_mhz".into(),
        params.beta * params.length / TWO_PI / 1e6,
    );
    m.insert(
        "group_velocity_read_m_per_s".into(),
        group_velocity(params, settings.omega_read),
    );
    if let Ok(eff) = crate::analysis::efficiency(input, &read_window) {
        m.insert("efficiency".into(), eff);
    }
    if let (Some(c_in), Some(c_out)) = (input.centroid(), read_window.centroid()) {
        m.insert("input_centroid_us".into(), c_in * 1e6);
        m.insert("readout_centroid_us".into(), c_out * 1e6);
        m.insert("delay_us".into(), (c_out - c_in) * 1e6);
    }
}

fn impulse_warning(
    beta: f64,
    legs: &[(f64, f64)], // (sign, duration) from the input centroid to readout
    warnings: &mut Vec<String>,
) -> f64 {
    let net: f64 = legs.iter().map(|(s, d)| s * d).sum::<f64>() * beta;
    let total: f64 = legs.iter().map(|(_, d)| d.abs()).sum::<f64>() * beta;
    if total > 0.0 && net.abs() > 0.01 * total {
        warnings.push(format!(
            "gradient impulse imbalance at readout start: residual k_z = {net:.3e} rad/m \
             ({:.1}% of the accumulated winding)",
            100.0 * net.abs() / total
        ));
    }
    net
}

fn run_gem_only(
    settings: &SequenceSettings,
    input: &ComplexTrace,
    grid: &SimGrid,
    density: &DensityProfile,
    params: &PhysicalParams,
) -> Result<RunResult, SolverError> {
    let dt = grid.dt;
    let t1 = snap(settings.t1, dt);
    let read = snap(settings.read_duration, dt);
    let sign = settings.gradient_sign;
    let segments = vec![
        GemSegment {
            duration: t1,
            gradient_sign: sign,
            omega_c: CouplingRamp::constant(settings.omega_write),
            delta: settings.delta_gem,
            input_open: true,
        },
        GemSegment {
            duration: read,
            gradient_sign: -sign,
            omega_c: CouplingRamp::constant(settings.omega_read),
            delta: settings.delta_gem,
            input_open: false,
        },
    ];
    let out = gem_run(
        GemState::zeros(grid.nz),
        &segments,
        grid,
        density,
        params,
        Some(input),
        settings.record,
    )?;
    let mut timeline = Timeline::new(settings.record.is_some());
    timeline.push(SegmentMode::Gem, t1 + read, &out.exit, out.fields);
    let mut result = RunResult {
        input_trace: input.clone(),
        exit_trace: ComplexTrace {
            values: timeline.exit,
            dt,
            t0: 0.0,
        },
        final_coherence: out.final_state.rho,
        segments: vec![
            SegmentMeta {
                mode: SegmentMode::Gem,
                t_start: 0.0,
                duration: t1,
            },
            SegmentMeta {
                mode: SegmentMode::Gem,
                t_start: t1,
                duration: read,
            },
        ],
        metrics: BTreeMap::new(),
        warnings: Vec::new(),
        fields: timeline.fields,
        read_start: t1,
    };
    base_metrics(settings, params, input, &mut result);
    if let Ok(ov) = crate::analysis::time_mirror_overlap(input, &result.read_window()) {
        result.metrics.insert("mirror_overlap".into(), ov);
    }
    Ok(result)
}

fn run_gem_eit(
    settings: &SequenceSettings,
    input: &ComplexTrace,
    grid: &SimGrid,
    density: &DensityProfile,
    params: &PhysicalParams,
) -> Result<RunResult, SolverError> {
    let dt = grid.dt;
    let t1 = snap(settings.t1, dt);
    let centroid = input.centroid().unwrap_or(0.5 * t1);
    // Unwind until the net gradient impulse accumulated since the pulse
    // centroid vanishes: t2 = t1 - centroid.
    let t2 = snap(settings.t2.unwrap_or(t1 - centroid), dt);
    let read = snap(settings.read_duration, dt);
    let sign = settings.gradient_sign;

    let gem_segments = vec![
        GemSegment {
            duration: t1,
            gradient_sign: sign,
            omega_c: CouplingRamp::constant(settings.omega_write),
            delta: settings.delta_gem,
            input_open: true,
        },
        GemSegment {
            duration: t2,
            gradient_sign: -sign,
            omega_c: CouplingRamp::constant(0.0),
            delta: settings.delta_gem,
            input_open: false,
        },
    ];
    let gem_out = gem_run(
        GemState::zeros(grid.nz),
        &gem_segments,
        grid,
        density,
        params,
        Some(input),
        settings.record,
    )?;

    let g = coupling_profile(density, params, grid);
    let eit_init = handoff_gem_to_eit(&gem_out.final_state, &g);
    let eit_segments = vec![EitSegment {
        duration: read,
        omega_c: CouplingRamp::tanh(0.0, settings.omega_read, snap(settings.read_ramp, dt)),
        input_open: false,
    }];
    let eit_out = eit_run(
        eit_init,
        None,
        &eit_segments,
        grid,
        density,
        params,
        settings.record,
    )?;

    let mut timeline = Timeline::new(settings.record.is_some());
    timeline.push(SegmentMode::Gem, t1, &gem_out.exit, gem_out.fields);
    timeline.segments.last_mut().unwrap().duration = t1; // write part
    timeline.segments.push(SegmentMeta {
        mode: SegmentMode::Dark,
        t_start: t1,
        duration: t2,
    });
    timeline.t += t2;
    chain_exit(&mut timeline.exit, &eit_out.exit, false);
    timeline.segments.push(SegmentMeta {
        mode: SegmentMode::Eit,
        t_start: t1 + t2,
        duration: read,
    });

    let mut warnings = Vec::new();
    let residual_k =
        impulse_warning(params.beta, &[(sign, t1 - centroid), (-sign, t2)], &mut warnings);

    let g_p = params.g_p();
    let final_coherence = eit_out
        .final_state
        .s
        .iter()
        .map(|v| v / g_p)
        .collect();
    let mut result = RunResult {
        input_trace: input.clone(),
        exit_trace: ComplexTrace {
            values: timeline.exit,
            dt,
            t0: 0.0,
        },
        final_coherence,
        segments: timeline.segments,
        metrics: BTreeMap::new(),
        warnings,
        fields: timeline.fields,
        read_start: t1 + t2,
    };
    result
        .metrics
        .insert("residual_kz_rad_per_m".into(), residual_k);
    base_metrics(settings, params, input, &mut result);
    Ok(result)
}

fn run_eit_gem(
    settings: &SequenceSettings,
    input: &ComplexTrace,
    grid: &SimGrid,
    density: &DensityProfile,
    params: &PhysicalParams,
) -> Result<RunResult, SolverError> {
    let dt = grid.dt;
    let centroid = input.centroid().ok_or(SolverError::BadSchedule {
        reason: "slow-light write-in requires a non-zero input pulse".into(),
    })?;
    let v_g = group_velocity(params, settings.omega_write);
    if v_g <= 0.0 {
        return Err(SolverError::BadSchedule {
            reason: "write coupling must be non-zero for slow-light write-in".into(),
        });
    }
    // Extinguish the coupling when the pulse center reaches the middle of
    // the cloud.
    let t_stop = centroid + 0.5 * params.length / v_g;
    let ramp = snap(settings.stop_ramp, dt);
    let hold = snap((t_stop - 0.5 * ramp).max(dt), dt);
    let settle = snap(settings.settle, dt);
    let t1 = snap(settings.t1, dt);
    let t2 = snap(settings.t2.unwrap_or(t1), dt);
    let read = snap(settings.read_duration, dt);
    let sign = settings.gradient_sign;

    let eit_segments = vec![
        EitSegment {
            duration: hold,
            omega_c: CouplingRamp::constant(settings.omega_write),
            input_open: true,
        },
        EitSegment {
            duration: ramp,
            omega_c: CouplingRamp::tanh(settings.omega_write, 0.0, ramp),
            input_open: true,
        },
        EitSegment {
            duration: settle,
            omega_c: CouplingRamp::constant(0.0),
            input_open: false,
        },
    ];
    let eit_out = eit_run(
        EitState::zeros(grid.nz),
        Some(input),
        &eit_segments,
        grid,
        density,
        params,
        settings.record,
    )?;

    let g = coupling_profile(density, params, grid);
    // Conservative "seen" scales for the residual-light check: the boundary
    // input itself and the polarization it can sustain.
    let max_a = input.max_abs().max(eit_out.final_state.max_abs_a());
    let max_p = params.g_p() * input.max_abs();
    let gem_init = handoff_eit_to_gem(&eit_out.final_state, &g, max_a, max_p)?;

    let gem_segments = vec![
        GemSegment {
            duration: t1,
            gradient_sign: sign,
            omega_c: CouplingRamp::constant(0.0),
            delta: settings.delta_gem,
            input_open: false,
        },
        GemSegment {
            duration: t2,
            gradient_sign: -sign,
            omega_c: CouplingRamp::constant(0.0),
            delta: settings.delta_gem,
            input_open: false,
        },
        GemSegment {
            duration: read,
            gradient_sign: -sign,
            omega_c: CouplingRamp::constant(settings.omega_read),
            delta: settings.delta_gem,
            input_open: false,
        },
    ];
    let gem_out = gem_run(
        gem_init,
        &gem_segments,
        grid,
        density,
        params,
        None,
        settings.record,
    )?;

    let write_total = hold + ramp + settle;
    let mut timeline = Timeline::new(settings.record.is_some());
    timeline.push(SegmentMode::Eit, write_total, &eit_out.exit, eit_out.fields);
    chain_exit(&mut timeline.exit, &gem_out.exit, false);
    timeline.segments.push(SegmentMeta {
        mode: SegmentMode::Dark,
        t_start: write_total,
        duration: t1 + t2,
    });
    timeline.segments.push(SegmentMeta {
        mode: SegmentMode::Gem,
        t_start: write_total + t1 + t2,
        duration: read,
    });

    let mut warnings = Vec::new();
    let residual_k = impulse_warning(params.beta, &[(sign, t1), (-sign, t2)], &mut warnings);

    let mut result = RunResult {
        input_trace: input.clone(),
        exit_trace: ComplexTrace {
            values: timeline.exit,
            dt,
            t0: 0.0,
        },
        final_coherence: gem_out.final_state.rho,
        segments: timeline.segments,
        metrics: BTreeMap::new(),
        warnings,
        fields: timeline.fields,
        read_start: write_total + t1 + t2,
    };
    result
        .metrics
        .insert("residual_kz_rad_per_m".into(), residual_k);
    result
        .metrics
        .insert("stop_time_us".into(), (hold + 0.5 * ramp) * 1e6);
    base_metrics(settings, params, input, &mut result);
    Ok(result)
}

fn run_eit_only(
    settings: &SequenceSettings,
    input: &ComplexTrace,
    grid: &SimGrid,
    density: &DensityProfile,
    params: &PhysicalParams,
) -> Result<RunResult, SolverError> {
    let dt = grid.dt;
    let centroid = input.centroid().ok_or(SolverError::BadSchedule {
        reason: "slow-light write-in requires a non-zero input pulse".into(),
    })?;
    let v_g = group_velocity(params, settings.omega_write);
    if v_g <= 0.0 {
        return Err(SolverError::BadSchedule {
            reason: "write coupling must be non-zero for slow-light write-in".into(),
        });
    }
    let t_stop = centroid + 0.5 * params.length / v_g;
    let ramp = snap(settings.stop_ramp, dt);
    let hold = snap((t_stop - 0.5 * ramp).max(dt), dt);
    let dark = snap(settings.t1, dt);
    let read_ramp = snap(settings.read_ramp, dt);
    let read = snap(settings.read_duration, dt);

    let segments = vec![
        EitSegment {
            duration: hold,
            omega_c: CouplingRamp::constant(settings.omega_write),
            input_open: true,
        },
        EitSegment {
            duration: ramp,
            omega_c: CouplingRamp::tanh(settings.omega_write, 0.0, ramp),
            input_open: true,
        },
        EitSegment {
            duration: dark,
            omega_c: CouplingRamp::constant(0.0),
            input_open: false,
        },
        EitSegment {
            duration: read,
            omega_c: CouplingRamp::tanh(0.0, settings.omega_read, read_ramp),
            input_open: false,
        },
    ];
    let out = eit_run(
        EitState::zeros(grid.nz),
        Some(input),
        &segments,
        grid,
        density,
        params,
        settings.record,
    )?;
    let write_total = hold + ramp;
    let read_start = write_total + dark;
    let g_p = params.g_p();
    let mut result = RunResult {
        input_trace: input.clone(),
        exit_trace: out.exit,
        final_coherence: out.final_state.s.iter().map(|v| v / g_p).collect(),
        segments: vec![
            SegmentMeta {
                mode: SegmentMode::Eit,
                t_start: 0.0,
                duration: write_total,
            },
            SegmentMeta {
                mode: SegmentMode::Dark,
                t_start: write_total,
                duration: dark,
            },
            SegmentMeta {
                mode: SegmentMode::Eit,
                t_start: read_start,
                duration: read,
            },
        ],
        metrics: BTreeMap::new(),
        warnings: Vec::new(),
        fields: out.fields,
        read_start,
    };
    result
        .metrics
        .insert("stop_time_us".into(), (hold + 0.5 * ramp) * 1e6);
    base_metrics(settings, params, input, &mut result);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::flat_density;
    use crate::grid::make_grid;
    use crate::params::ParamsInConfigUnits;

    fn params() -> PhysicalParams {
        ParamsInConfigUnits::default().convert().unwrap()
    }

    #[test]
    fn handoff_round_trip_preserves_the_coherence() {
        let p = params();
        let grid = make_grid(&p, 64, 1e-6, 2e-9).unwrap();
        let density = flat_density(&grid);
        let g = coupling_profile(&density, &p, &grid);
        let mut gem = GemState::zeros(grid.nz);
        for (i, r) in gem.rho.iter_mut().enumerate() {
            let u = (grid.z(i) - 0.3 * p.length) / (0.1 * p.length);
            *r = Complex64::new(0.1 * (-0.5 * u * u).exp(), 0.02);
        }
        gem.t_now = 3e-6;
        let eit = handoff_gem_to_eit(&gem, &g);
        // peak scales by g_P on a flat profile
        let peak_s = eit.s.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let peak_r = gem.rho.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((peak_s / peak_r - p.g_p()).abs() / p.g_p() < 1e-12);
        assert_eq!(eit.t_now, gem.t_now);
        let back = handoff_eit_to_gem(&eit, &g, 1.0, p.g_p()).unwrap();
        for i in 0..grid.nz {
            assert!((back.rho[i] - gem.rho[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn handoff_rejects_live_light() {
        let p = params();
        let grid = make_grid(&p, 16, 1e-6, 2e-9).unwrap();
        let density = flat_density(&grid);
        let g = coupling_profile(&density, &p, &grid);
        let mut eit = EitState::zeros(grid.nz);
        eit.a[4] = Complex64::new(0.5, 0.0);
        assert!(matches!(
            handoff_eit_to_gem(&eit, &g, 1.0, 1.0),
            Err(SolverError::HandoffRejected { .. })
        ));
    }

    #[test]
    fn zero_coherence_hands_off_to_zero() {
        let p = params();
        let grid = make_grid(&p, 16, 1e-6, 2e-9).unwrap();
        let density = flat_density(&grid);
        let g = coupling_profile(&density, &p, &grid);
        let eit = handoff_gem_to_eit(&GemState::zeros(grid.nz), &g);
        assert!(eit.s.iter().all(|v| v.norm() == 0.0));
        let gem = handoff_eit_to_gem(&eit, &g, 1.0, 1.0).unwrap();
        assert!(gem.rho.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn gem_only_timeline_adds_up() {
        let mut p = params();
        p.beta = crate::units::mhz_per_mm_to_rad_per_m(0.2);
        let grid = make_grid(&p, 48, 30e-6, 2e-9).unwrap();
        let density = flat_density(&grid);
        let input = ComplexTrace {
            values: (0..grid.nt)
                .map(|k| {
                    let u = (grid.t(k) - 5e-6) / 1.0e-6;
                    Complex64::new(0.01 * (-0.5 * u * u).exp(), 0.0)
                })
                .collect(),
            dt: grid.dt,
            t0: 0.0,
        };
        let mut settings = SequenceSettings::defaults(ProtocolKind::GemOnly, &p);
        settings.t1 = 10e-6;
        settings.read_duration = 12e-6;
        let result = run_protocol(&settings, &input, &grid, &density, &p).unwrap();
        let total = result.total_duration();
        assert!((total - 22e-6).abs() < 1e-12);
        // one exit sample per step plus the final instant
        let expect_len = (total / grid.dt).round() as usize + 1;
        assert_eq!(result.exit_trace.len(), expect_len);
        assert!(result.metrics.contains_key("efficiency"));
        assert!(result.metrics["efficiency"] > 0.0);
    }
}
