//! Parameter sweeps: Cartesian expansion of the configured axes, parallel
//! execution of the independent runs, and a deterministic ordered
//! aggregation regardless of completion order.

use rayon::prelude::*;

use crate::analysis::{fit_gaussian_envelope, peak_find, spectrum_padded, SpectralWindow};
use crate::config::{apply_sweep_value, RunConfig};
use crate::error::DomainError;
use crate::output::SweepRow;
use crate::sequence::{run_protocol, RunResult};
use crate::signal::synthesize_input;
use crate::units::TWO_PI;

/// Aggregated outcome of a sweep.
#[derive(Debug)]
pub struct SweepOutcome {
    pub axis_names: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub n_failed: usize,
}

/// All grid points of the sweep, in row-major order (last axis fastest).
pub fn expand_grid(config: &RunConfig) -> Vec<Vec<f64>> {
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &config.sweep {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for p in &points {
            for &v in &axis.values {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

/// Summary observables of one finished run.
pub fn summarize(result: &RunResult) -> SweepRow {
    let window = result.read_window();
    let mag = window.magnitude();
    let sigma_us = fit_gaussian_envelope(window.t0 * 1e6, window.dt * 1e6, &mag)
        .ok()
        .map(|f| f.sigma);
    let peak_freqs_mhz = spectrum_padded(&window, SpectralWindow::None, 8)
        .map(|sp| {
            let m = sp.magnitude();
            let top = m.iter().copied().fold(0.0, f64::max);
            peak_find(sp.omega[0], sp.domega(), &m, TWO_PI * 0.1e6, 0.2 * top)
                .into_iter()
                .map(|(w, _)| w / TWO_PI / 1e6)
                .collect()
        })
        .unwrap_or_default();
    SweepRow {
        axis_values: Vec::new(),
        delay_us: result.metrics.get("delay_us").copied(),
        sigma_us,
        efficiency: result.metrics.get("efficiency").copied(),
        peak_freqs_mhz,
        error: None,
    }
}

fn run_point(config: &RunConfig, point: &[f64]) -> Result<SweepRow, String> {
    let mut cfg = config.clone();
    for (axis, &v) in config.sweep.iter().zip(point) {
        apply_sweep_value(&mut cfg, &axis.param, v).map_err(|e| e.to_string())?;
    }
    let run = cfg.resolve().map_err(|e| e.to_string())?;
    let input = synthesize_input(&run.pulse, &run.grid).map_err(|e| e.to_string())?;
    let result = run_protocol(
        &run.settings,
        &input.trace,
        &run.grid,
        &run.density,
        &run.params,
    )
    .map_err(|e| e.to_string())?;
    Ok(summarize(&result))
}

/// Executes every grid point; failures are recorded per-row and do not stop
/// the sweep.
pub fn run_sweep(config: &RunConfig) -> Result<SweepOutcome, DomainError> {
    if config.sweep.is_empty() {
        return Err(DomainError::InvalidParameter {
            name: "sweep",
            reason: "no sweep axes configured".into(),
        });
    }
    // validate once up front so bad configs fail fast with a clear message
    config.resolve()?;
    let points = expand_grid(config);
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|point| match run_point(config, point) {
            Ok(mut row) => {
                row.axis_values = point.clone();
                row
            }
            Err(e) => SweepRow {
                axis_values: point.clone(),
                delay_us: None,
                sigma_us: None,
                efficiency: None,
                peak_freqs_mhz: Vec::new(),
                error: Some(e),
            },
        })
        .collect();
    let n_failed = rows.iter().filter(|r| r.error.is_some()).count();
    Ok(SweepOutcome {
        axis_names: config.sweep.iter().map(|a| a.param.clone()).collect(),
        rows,
        n_failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn grid_expansion_is_a_cartesian_product() {
        let cfg = parse_config(
            "[[sweep]]\nparam = \"pulse.detuning_mhz\"\nvalues = [1.0, 2.0, 3.0]\n\
             [[sweep]]\nparam = \"schedule.t1_us\"\nvalues = [8.0, 12.0]\n",
        )
        .unwrap();
        let points = expand_grid(&cfg);
        assert_eq!(points.len(), 6);
        assert_eq!(points[0], vec![1.0, 8.0]);
        assert_eq!(points[1], vec![1.0, 12.0]);
        assert_eq!(points[5], vec![3.0, 12.0]);
    }

    #[test]
    fn sweep_without_axes_is_rejected() {
        let cfg = parse_config("").unwrap();
        assert!(run_sweep(&cfg).is_err());
    }
}
