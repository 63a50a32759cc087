//! Plot-ready CSV emission and the run manifest.
//!
//! All floating-point values are serialized with 17 significant digits so
//! identical runs produce byte-identical files; the manifest additionally
//! carries a wall-clock timestamp and is therefore excluded from bytewise
//! regression comparisons.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::Spectrum;
use crate::config::ResolvedRun;
use crate::eit::group_velocity;
use crate::record::FieldRecord;
use crate::sequence::RunResult;
use crate::signal::RealTrace;
use crate::trace::ComplexTrace;
use crate::units::TWO_PI;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace_csv(path: &Path, trace: &ComplexTrace) -> std::io::Result<()> {
    let mut out = String::with_capacity(trace.len() * 64 + 16);
    out.push_str("time_us,re,im\n");
    for (k, v) in trace.values.iter().enumerate() {
        out.push_str(&fmt(trace.t(k) * 1e6));
        out.push(',');
        out.push_str(&fmt(v.re));
        out.push(',');
        out.push_str(&fmt(v.im));
        out.push('\n');
    }
    fs::write(path, out)
}

pub fn write_real_trace_csv(path: &Path, trace: &RealTrace) -> std::io::Result<()> {
    let mut out = String::with_capacity(trace.len() * 44 + 16);
    out.push_str("time_us,volts\n");
    for (k, v) in trace.values.iter().enumerate() {
        out.push_str(&fmt(trace.t(k) * 1e6));
        out.push(',');
        out.push_str(&fmt(*v));
        out.push('\n');
    }
    fs::write(path, out)
}

pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum) -> std::io::Result<()> {
    let mut out = String::with_capacity(spectrum.omega.len() * 80 + 24);
    out.push_str("freq_MHz,re,im,mag\n");
    for (w, v) in spectrum.omega.iter().zip(&spectrum.amplitude) {
        out.push_str(&fmt(w / TWO_PI / 1e6));
        out.push(',');
        out.push_str(&fmt(v.re));
        out.push(',');
        out.push_str(&fmt(v.im));
        out.push(',');
        out.push_str(&fmt(v.norm()));
        out.push('\n');
    }
    fs::write(path, out)
}

/// Dense space-time record: one row per (t, z) pair, time-major.
pub fn write_fields_csv(path: &Path, record: &FieldRecord) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str("t_us,z_mm,re,im,coherence_abs\n");
    for (row, t) in record.t.iter().enumerate() {
        for (col, z) in record.z.iter().enumerate() {
            let v = record.field[row][col];
            out.push_str(&fmt(t * 1e6));
            out.push(',');
            out.push_str(&fmt(z * 1e3));
            out.push(',');
            out.push_str(&fmt(v.re));
            out.push(',');
            out.push_str(&fmt(v.im));
            out.push(',');
            out.push_str(&fmt(record.coherence[row][col]));
            out.push('\n');
        }
    }
    fs::write(path, out)
}

pub fn write_metrics_csv(path: &Path, result: &RunResult) -> std::io::Result<()> {
    let mut out = String::from("metric,value\n");
    for (k, v) in &result.metrics {
        out.push_str(k);
        out.push(',');
        out.push_str(&fmt(*v));
        out.push('\n');
    }
    fs::write(path, out)
}

/// One aggregate row of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    pub delay_us: Option<f64>,
    pub sigma_us: Option<f64>,
    pub efficiency: Option<f64>,
    pub peak_freqs_mhz: Vec<f64>,
    pub error: Option<String>,
}

pub fn write_aggregate_csv(
    path: &Path,
    axis_names: &[String],
    rows: &[SweepRow],
) -> std::io::Result<()> {
    let mut out = String::new();
    for name in axis_names {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("delay_us,sigma_us,efficiency,n_peaks,peak_freqs_MHz,error\n");
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    for row in rows {
        for v in &row.axis_values {
            out.push_str(&fmt(*v));
            out.push(',');
        }
        out.push_str(&opt(row.delay_us));
        out.push(',');
        out.push_str(&opt(row.sigma_us));
        out.push(',');
        out.push_str(&opt(row.efficiency));
        out.push(',');
        out.push_str(&row.peak_freqs_mhz.len().to_string());
        out.push(',');
        out.push_str(
            &row.peak_freqs_mhz
                .iter()
                .map(|v| fmt(*v))
                .collect::<Vec<_>>()
                .join(";"),
        );
        out.push(',');
        if let Some(e) = &row.error {
            out.push_str(&e.replace([',', '\n'], ";"));
        }
        out.push('\n');
    }
    fs::write(path, out)
}

#[derive(Debug, Serialize)]
struct ManifestParams {
    od: f64,
    gamma_rad_per_s: f64,
    length_m: f64,
    beta_rad_per_s_per_m: f64,
    delta_rad_per_s: f64,
    omega_c_rad_per_s: f64,
    omega0_rad_per_s: f64,
    gamma_gh_per_s: f64,
}

#[derive(Debug, Serialize)]
struct ManifestDerived {
    g_p_rad_per_s: f64,
    group_velocity_m_per_s: f64,
    memory_bandwidth_mhz: f64,
    expected_slow_light_delay_us: f64,
    retardation_ps: f64,
}

#[derive(Debug, Serialize)]
struct ManifestFile {
    name: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    version: String,
    created_unix_s: u64,
    seed: u64,
    protocol: String,
    params: ManifestParams,
    derived: ManifestDerived,
    defaulted_keys: Vec<String>,
    warnings: Vec<String>,
    files: Vec<ManifestFile>,
}

fn sha256_hex(path: &Path) -> std::io::Result<String> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Writes `manifest.toml` describing the run and checksumming the emitted
/// files.
pub fn write_manifest(
    out_dir: &Path,
    run: &ResolvedRun,
    result: &RunResult,
    emitted: &[PathBuf],
) -> std::io::Result<()> {
    let p = &run.params;
    let v_g = group_velocity(p, p.omega_c_max);
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed: run.detection.seed,
        protocol: format!("{:?}", run.protocol),
        params: ManifestParams {
            od: p.od,
            gamma_rad_per_s: p.gamma,
            length_m: p.length,
            beta_rad_per_s_per_m: p.beta,
            delta_rad_per_s: p.delta,
            omega_c_rad_per_s: p.omega_c_max,
            omega0_rad_per_s: p.omega0,
            gamma_gh_per_s: p.gamma_gh,
        },
        derived: ManifestDerived {
            g_p_rad_per_s: p.g_p(),
            group_velocity_m_per_s: v_g,
            memory_bandwidth_mhz: p.beta * p.length / TWO_PI / 1e6,
            expected_slow_light_delay_us: if p.omega_c_max > 0.0 {
                p.gamma * p.od / (p.omega_c_max * p.omega_c_max) * 1e6
            } else {
                f64::INFINITY
            },
            retardation_ps: p.length / p.c_light * 1e12,
        },
        defaulted_keys: run.defaulted.clone(),
        warnings: result.warnings.clone(),
        files: emitted
            .iter()
            .map(|f| {
                Ok(ManifestFile {
                    name: f
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default(),
                    sha256: sha256_hex(f)?,
                })
            })
            .collect::<std::io::Result<_>>()?,
    };
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e))?;
    let mut file = fs::File::create(out_dir.join("manifest.toml"))?;
    file.write_all(text.as_bytes())
}
