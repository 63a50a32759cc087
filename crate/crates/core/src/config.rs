//! Run configuration: a strict TOML document in laboratory units (MHz, µs,
//! mm) resolved into SI quantities plus a ready-to-run protocol bundle.
//!
//! Unknown keys are rejected so a typo cannot silently fall back to a
//! default; every key the user did not set is reported so the manifest can
//! list the defaults that actually applied.

use serde::Deserialize;

use crate::density::{flat_density, sample_density, DensityProfile};
use crate::error::DomainError;
use crate::grid::{make_grid, SimGrid};
use crate::params::{ParamsInConfigUnits, PhysicalParams};
use crate::sequence::{ProtocolKind, SequenceSettings};
use crate::signal::{DetectionSpec, PulseSpec};
use crate::units::{mhz_to_rad, us_to_s};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub pulse: PulseSection,
    #[serde(default)]
    pub detection: DetectionSection,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub kind: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub od: Option<f64>,
    pub gamma_mhz: Option<f64>,
    pub length_mm: Option<f64>,
    pub gradient_mhz_per_mm: Option<f64>,
    pub delta_mhz: Option<f64>,
    pub omega_c_mhz: Option<f64>,
    pub omega0_mhz: Option<f64>,
    pub gamma_gh_khz: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nz: Option<usize>,
    pub duration_us: Option<f64>,
    pub dt_ns: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    /// "flat" or "super_gaussian".
    pub kind: Option<String>,
    pub order: Option<f64>,
    pub width_mm: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub t1_us: Option<f64>,
    pub t2_us: Option<f64>,
    pub read_us: Option<f64>,
    pub read_ramp_us: Option<f64>,
    pub stop_ramp_us: Option<f64>,
    pub settle_us: Option<f64>,
    pub omega_write_mhz: Option<f64>,
    pub omega_read_mhz: Option<f64>,
    pub gradient_sign: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    /// "gaussian", "two_tone" or "double_pulse".
    pub kind: Option<String>,
    pub sigma_us: Option<f64>,
    pub center_us: Option<f64>,
    pub detuning_mhz: Option<f64>,
    pub detuning2_mhz: Option<f64>,
    pub amplitude: Option<f64>,
    pub amplitude2: Option<f64>,
    pub phase: Option<f64>,
    pub phase2: Option<f64>,
    pub separation_us: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub lo_mhz: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub n_sequences: Option<usize>,
    pub seed: Option<u64>,
}

/// One sweep dimension: a parameter path and the values it takes.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<f64>,
}

/// Everything needed to execute one run.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub protocol: ProtocolKind,
    pub params: PhysicalParams,
    pub grid: SimGrid,
    pub density: DensityProfile,
    pub pulse: PulseSpec,
    pub detection: DetectionSpec,
    pub settings: SequenceSettings,
    /// Keys that fell back to defaults, in "section.key" form.
    pub defaulted: Vec<String>,
}

pub fn parse_config(text: &str) -> Result<RunConfig, DomainError> {
    toml::from_str(text).map_err(|e| DomainError::InvalidParameter {
        name: "config",
        reason: e.to_string(),
    })
}

fn pick<T: Copy>(
    value: Option<T>,
    default: T,
    key: &str,
    defaulted: &mut Vec<String>,
) -> T {
    match value {
        Some(v) => v,
        None => {
            defaulted.push(key.to_string());
            default
        }
    }
}

impl RunConfig {
    /// Applies defaults, validates and converts to SI.
    pub fn resolve(&self) -> Result<ResolvedRun, DomainError> {
        let mut defaulted = Vec::new();
        let d = &mut defaulted;

        let kind_str = self
            .protocol
            .kind
            .clone()
            .unwrap_or_else(|| {
                d.push("protocol.kind".into());
                "gem_eit".into()
            });
        let protocol = match kind_str.as_str() {
            "gem_eit" => ProtocolKind::GemWriteEitRead,
            "eit_gem" => ProtocolKind::EitWriteGemRead,
            "gem_only" => ProtocolKind::GemOnly,
            "eit_only" => ProtocolKind::EitOnly,
            other => {
                return Err(DomainError::InvalidParameter {
                    name: "protocol.kind",
                    reason: format!(
                        "unknown protocol `{other}` (expected gem_eit, eit_gem, gem_only or eit_only)"
                    ),
                })
            }
        };

        let base = ParamsInConfigUnits::default();
        let cu = ParamsInConfigUnits {
            od: pick(self.params.od, base.od, "params.od", d),
            gamma_mhz: pick(self.params.gamma_mhz, base.gamma_mhz, "params.gamma_mhz", d),
            length_mm: pick(self.params.length_mm, base.length_mm, "params.length_mm", d),
            gradient_mhz_per_mm: pick(
                self.params.gradient_mhz_per_mm,
                base.gradient_mhz_per_mm,
                "params.gradient_mhz_per_mm",
                d,
            ),
            delta_mhz: pick(self.params.delta_mhz, base.delta_mhz, "params.delta_mhz", d),
            omega_c_mhz: pick(
                self.params.omega_c_mhz,
                base.omega_c_mhz,
                "params.omega_c_mhz",
                d,
            ),
            omega0_mhz: pick(self.params.omega0_mhz, base.omega0_mhz, "params.omega0_mhz", d),
            gamma_gh_khz: pick(
                self.params.gamma_gh_khz,
                base.gamma_gh_khz,
                "params.gamma_gh_khz",
                d,
            ),
        };
        let params = cu.convert()?;

        let nz = pick(self.grid.nz, 200, "grid.nz", d);
        let duration = us_to_s(pick(self.grid.duration_us, 40.0, "grid.duration_us", d));
        let dt = 1e-9 * pick(self.grid.dt_ns, 2.0, "grid.dt_ns", d);
        let grid = make_grid(&params, nz, duration, dt)?;

        let density_kind = self.density.kind.clone().unwrap_or_else(|| {
            d.push("density.kind".into());
            "flat".into()
        });
        let density = match density_kind.as_str() {
            "flat" => flat_density(&grid),
            "super_gaussian" => {
                let order = pick(self.density.order, 4.0, "density.order", d);
                let width =
                    1e-3 * pick(self.density.width_mm, 0.8 * params.length * 1e3, "density.width_mm", d);
                sample_density(order, width, &grid)?
            }
            other => {
                return Err(DomainError::InvalidParameter {
                    name: "density.kind",
                    reason: format!("unknown density `{other}` (expected flat or super_gaussian)"),
                })
            }
        };

        let pulse_kind = self.pulse.kind.clone().unwrap_or_else(|| {
            d.push("pulse.kind".into());
            "gaussian".into()
        });
        let sigma_t = us_to_s(pick(self.pulse.sigma_us, 2.5, "pulse.sigma_us", d));
        let center_t = us_to_s(pick(self.pulse.center_us, 5.0, "pulse.center_us", d));
        let det1 = mhz_to_rad(pick(self.pulse.detuning_mhz, 0.0, "pulse.detuning_mhz", d));
        let amp1 = pick(self.pulse.amplitude, 1.0, "pulse.amplitude", d);
        let ph1 = pick(self.pulse.phase, 0.0, "pulse.phase", d);
        let pulse = match pulse_kind.as_str() {
            "gaussian" => PulseSpec::Gaussian {
                sigma_t,
                center_t,
                detuning: det1,
                amplitude: amp1,
                phase: ph1,
            },
            "two_tone" => PulseSpec::TwoTone {
                sigma_t,
                center_t,
                detunings: [
                    det1,
                    mhz_to_rad(pick(self.pulse.detuning2_mhz, 1.0, "pulse.detuning2_mhz", d)),
                ],
                amplitudes: [amp1, pick(self.pulse.amplitude2, amp1, "pulse.amplitude2", d)],
                phases: [ph1, pick(self.pulse.phase2, 0.0, "pulse.phase2", d)],
            },
            "double_pulse" => PulseSpec::DoublePulse {
                sigma_t,
                center_t,
                separation: us_to_s(pick(self.pulse.separation_us, 1.0, "pulse.separation_us", d)),
                detuning: det1,
                amplitudes: [amp1, pick(self.pulse.amplitude2, amp1, "pulse.amplitude2", d)],
                phases: [ph1, pick(self.pulse.phase2, 0.0, "pulse.phase2", d)],
            },
            other => {
                return Err(DomainError::InvalidParameter {
                    name: "pulse.kind",
                    reason: format!(
                        "unknown pulse `{other}` (expected gaussian, two_tone or double_pulse)"
                    ),
                })
            }
        };
        pulse.validate()?;

        let detection = DetectionSpec {
            lo_offset: mhz_to_rad(pick(self.detection.lo_mhz, 5.0, "detection.lo_mhz", d)),
            noise_sigma: pick(self.detection.noise_sigma, 0.0, "detection.noise_sigma", d),
            n_sequences: pick(self.detection.n_sequences, 1, "detection.n_sequences", d),
            seed: pick(self.detection.seed, 0, "detection.seed", d),
        };
        detection.validate()?;

        let base_settings = SequenceSettings::defaults(protocol, &params);
        let settings = SequenceSettings {
            protocol,
            t1: us_to_s(pick(self.schedule.t1_us, base_settings.t1 * 1e6, "schedule.t1_us", d)),
            t2: self.schedule.t2_us.map(us_to_s),
            read_duration: us_to_s(pick(
                self.schedule.read_us,
                base_settings.read_duration * 1e6,
                "schedule.read_us",
                d,
            )),
            read_ramp: us_to_s(pick(
                self.schedule.read_ramp_us,
                base_settings.read_ramp * 1e6,
                "schedule.read_ramp_us",
                d,
            )),
            stop_ramp: us_to_s(pick(
                self.schedule.stop_ramp_us,
                base_settings.stop_ramp * 1e6,
                "schedule.stop_ramp_us",
                d,
            )),
            settle: us_to_s(pick(
                self.schedule.settle_us,
                base_settings.settle * 1e6,
                "schedule.settle_us",
                d,
            )),
            omega_write: mhz_to_rad(pick(
                self.schedule.omega_write_mhz,
                cu.omega_c_mhz,
                "schedule.omega_write_mhz",
                d,
            )),
            omega_read: mhz_to_rad(pick(
                self.schedule.omega_read_mhz,
                cu.omega_c_mhz,
                "schedule.omega_read_mhz",
                d,
            )),
            delta_gem: params.delta,
            gradient_sign: pick(self.schedule.gradient_sign, 1.0, "schedule.gradient_sign", d),
            record: None,
        };
        if self.schedule.t2_us.is_none() {
            d.push("schedule.t2_us".into());
        }

        for (name, v, positive) in [
            ("schedule.t1_us", settings.t1, true),
            ("schedule.read_us", settings.read_duration, true),
            ("schedule.read_ramp_us", settings.read_ramp, false),
            ("schedule.stop_ramp_us", settings.stop_ramp, true),
            ("schedule.settle_us", settings.settle, false),
            ("schedule.omega_write_mhz", settings.omega_write, false),
            ("schedule.omega_read_mhz", settings.omega_read, false),
        ] {
            if !v.is_finite() || (positive && v <= 0.0) || (!positive && v < 0.0) {
                return Err(DomainError::InvalidParameter {
                    name: Box::leak(name.to_string().into_boxed_str()),
                    reason: format!("invalid value {v}"),
                });
            }
        }
        if settings.gradient_sign.abs() != 1.0 {
            return Err(DomainError::InvalidParameter {
                name: "schedule.gradient_sign",
                reason: format!("must be +1 or -1, got {}", settings.gradient_sign),
            });
        }

        for axis in &self.sweep {
            if axis.values.is_empty() {
                return Err(DomainError::InvalidParameter {
                    name: "sweep.values",
                    reason: format!("axis `{}` has an empty value list", axis.param),
                });
            }
            // fail early on unknown parameter paths
            let mut probe = self.clone();
            apply_sweep_value(&mut probe, &axis.param, axis.values[0])?;
        }

        Ok(ResolvedRun {
            protocol,
            params,
            grid,
            density,
            pulse,
            detection,
            settings,
            defaulted,
        })
    }

    /// Total number of runs the sweep grid expands to (1 when no axes).
    pub fn sweep_cardinality(&self) -> usize {
        self.sweep.iter().map(|a| a.values.len().max(1)).product()
    }
}

/// Overrides one swept parameter in a config copy. The supported paths are
/// the numeric scalars a sweep can meaningfully vary.
pub fn apply_sweep_value(
    config: &mut RunConfig,
    param: &str,
    value: f64,
) -> Result<(), DomainError> {
    match param {
        "params.od" => config.params.od = Some(value),
        "params.gamma_mhz" => config.params.gamma_mhz = Some(value),
        "params.gradient_mhz_per_mm" => config.params.gradient_mhz_per_mm = Some(value),
        "params.delta_mhz" => config.params.delta_mhz = Some(value),
        "params.omega_c_mhz" => config.params.omega_c_mhz = Some(value),
        "params.omega0_mhz" => config.params.omega0_mhz = Some(value),
        "pulse.sigma_us" => config.pulse.sigma_us = Some(value),
        "pulse.center_us" => config.pulse.center_us = Some(value),
        "pulse.detuning_mhz" => config.pulse.detuning_mhz = Some(value),
        "pulse.detuning2_mhz" => config.pulse.detuning2_mhz = Some(value),
        "pulse.amplitude" => config.pulse.amplitude = Some(value),
        "pulse.separation_us" => config.pulse.separation_us = Some(value),
        "schedule.t1_us" => config.schedule.t1_us = Some(value),
        "schedule.t2_us" => config.schedule.t2_us = Some(value),
        "schedule.read_us" => config.schedule.read_us = Some(value),
        "schedule.omega_write_mhz" => config.schedule.omega_write_mhz = Some(value),
        "schedule.omega_read_mhz" => config.schedule.omega_read_mhz = Some(value),
        "detection.noise_sigma" => config.detection.noise_sigma = Some(value),
        other => {
            return Err(DomainError::InvalidParameter {
                name: "sweep.param",
                reason: format!("unknown sweep parameter `{other}`"),
            })
        }
    }
    Ok(())
}
