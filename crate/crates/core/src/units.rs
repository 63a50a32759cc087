//! Conversions between the human-readable config units (MHz, us, mm) and the
//! internal unit system (SI with angular frequencies in rad/s).

use crate::error::DomainError;

pub const TWO_PI: f64 = std::f64::consts::TAU;
/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;

fn check_finite(name: &'static str, x: f64) -> Result<f64, DomainError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(DomainError::NonFinite { name })
    }
}

/// Ordinary frequency in MHz -> angular frequency in rad/s.
pub fn mhz_to_rad(f_mhz: f64) -> f64 {
    TWO_PI * f_mhz * 1e6
}

/// Angular frequency in rad/s -> ordinary frequency in MHz.
pub fn rad_to_mhz(w: f64) -> f64 {
    w / (TWO_PI * 1e6)
}

pub fn us_to_s(t_us: f64) -> f64 {
    t_us * 1e-6
}

pub fn s_to_us(t_s: f64) -> f64 {
    t_s * 1e6
}

pub fn mm_to_m(l_mm: f64) -> f64 {
    l_mm * 1e-3
}

pub fn m_to_mm(l_m: f64) -> f64 {
    l_m * 1e3
}

/// Gradient in MHz per mm (ordinary frequency per length) -> rad/(s*m).
pub fn mhz_per_mm_to_rad_per_m(g: f64) -> f64 {
    TWO_PI * g * 1e6 / 1e-3
}

pub fn rad_per_m_to_mhz_per_mm(b: f64) -> f64 {
    b * 1e-3 / (TWO_PI * 1e6)
}

/// Checked variant of [`mhz_to_rad`] used on config ingestion.
pub fn try_mhz_to_rad(name: &'static str, f_mhz: f64) -> Result<f64, DomainError> {
    Ok(mhz_to_rad(check_finite(name, f_mhz)?))
}
