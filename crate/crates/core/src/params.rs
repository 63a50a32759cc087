//! Atomic and optical constants of a single run, in SI units with angular
//! frequencies (rad/s) throughout.

use crate::error::DomainError;
use crate::units;

/// Physical constants of the memory medium and the driving fields.
///
/// The two-photon detuning gradient is centered on the cloud:
/// `delta(z) = sign * beta * (z - length/2) + omega0`, so the memory
/// bandwidth `beta * length` spans symmetrically around `omega0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Resonant optical depth of the ensemble (dimensionless).
    pub od: f64,
    /// Excited-state decay rate, rad/s.
    pub gamma: f64,
    /// Medium length, m.
    pub length: f64,
    /// Gradient strength, rad/(s*m): two-photon detuning per unit length.
    pub beta: f64,
    /// Single-photon detuning of the signal, rad/s.
    pub delta: f64,
    /// Peak coupling Rabi frequency, rad/s.
    pub omega_c_max: f64,
    /// Speed of light, m/s.
    pub c_light: f64,
    /// Two-photon resonance offset, rad/s.
    pub omega0: f64,
    /// Ground-state coherence decay rate, rad/s (0 = no decoherence).
    pub gamma_gh: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        let checks: [(&'static str, f64, bool); 9] = [
            ("od", self.od, self.od > 0.0),
            ("gamma", self.gamma, self.gamma > 0.0),
            ("length", self.length, self.length > 0.0),
            ("beta", self.beta, true),
            ("delta", self.delta, true),
            ("omega_c_max", self.omega_c_max, self.omega_c_max >= 0.0),
            ("c_light", self.c_light, self.c_light > 0.0),
            ("omega0", self.omega0, true),
            ("gamma_gh", self.gamma_gh, self.gamma_gh >= 0.0),
        ];
        for (name, value, in_range) in checks {
            if !value.is_finite() {
                return Err(DomainError::NonFinite { name });
            }
            if !in_range {
                return Err(DomainError::InvalidParameter {
                    name,
                    reason: format!("out of range: {value}"),
                });
            }
        }
        Ok(())
    }

    /// Collective coupling rate g_P = sqrt(c * Gamma * OD / L), rad/s.
    pub fn g_p(&self) -> f64 {
        (self.c_light * self.gamma * self.od / self.length).sqrt()
    }

    /// Two-photon detuning at position `z` for a given gradient sign.
    pub fn delta_two_photon(&self, z: f64, gradient_sign: f64) -> f64 {
        gradient_sign * self.beta * (z - 0.5 * self.length) + self.omega0
    }

    /// Memory bandwidth beta*L expressed in rad/s.
    pub fn memory_bandwidth(&self) -> f64 {
        self.beta.abs() * self.length
    }
}

/// Builds [`PhysicalParams`] from config-unit values (MHz, mm, MHz/mm).
#[derive(Debug, Clone, Copy)]
pub struct ParamsInConfigUnits {
    pub od: f64,
    pub gamma_mhz: f64,
    pub length_mm: f64,
    pub gradient_mhz_per_mm: f64,
    pub delta_mhz: f64,
    pub omega_c_mhz: f64,
    pub omega0_mhz: f64,
    pub gamma_gh_khz: f64,
}

impl ParamsInConfigUnits {
    pub fn convert(&self) -> Result<PhysicalParams, DomainError> {
        let p = PhysicalParams {
            od: self.od,
            gamma: units::try_mhz_to_rad("gamma_mhz", self.gamma_mhz)?,
            length: units::mm_to_m(self.length_mm),
            beta: units::mhz_per_mm_to_rad_per_m(self.gradient_mhz_per_mm),
            delta: units::try_mhz_to_rad("delta_mhz", self.delta_mhz)?,
            omega_c_max: units::try_mhz_to_rad("omega_c_mhz", self.omega_c_mhz)?,
            c_light: units::C_LIGHT,
            omega0: units::try_mhz_to_rad("omega0_mhz", self.omega0_mhz)?,
            gamma_gh: units::try_mhz_to_rad("gamma_gh_khz", self.gamma_gh_khz)? * 1e-3,
        };
        if !self.length_mm.is_finite() {
            return Err(DomainError::NonFinite { name: "length_mm" });
        }
        p.validate()?;
        Ok(p)
    }
}

/// Paper-scale defaults: OD 80, Gamma = 2*pi*5.75 MHz (Rb D1 linewidth,
/// external constant not taken from the source data), L = 10 mm,
/// Omega_C = 2*pi*6.9 MHz, Delta = 2*pi*30 MHz, bandwidth 2 MHz over the cloud.
impl Default for ParamsInConfigUnits {
    fn default() -> Self {
        Self {
            od: 80.0,
            gamma_mhz: 5.75,
            length_mm: 10.0,
            gradient_mhz_per_mm: 0.2,
            delta_mhz: 30.0,
            omega_c_mhz: 6.9,
            omega0_mhz: 0.0,
            gamma_gh_khz: 0.0,
        }
    }
}
