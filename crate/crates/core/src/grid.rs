//! Discretization of the (t, z) simulation domain.

use crate::error::DomainError;
use crate::params::PhysicalParams;

/// Uniform space-time grid: z in [0, L] with `nz` points, t in
/// [t0, t0 + (nt-1)*dt] with `nt` points.
#[derive(Debug, Clone, PartialEq)]
pub struct SimGrid {
    pub nz: usize,
    pub nt: usize,
    pub dz: f64,
    pub dt: f64,
    pub t0: f64,
    pub length: f64,
}

impl SimGrid {
    pub fn z(&self, i: usize) -> f64 {
        i as f64 * self.dz
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn z_index(&self, z: f64) -> usize {
        ((z / self.dz).round() as isize).clamp(0, self.nz as isize - 1) as usize
    }

    pub fn duration(&self) -> f64 {
        (self.nt - 1) as f64 * self.dt
    }

    pub fn z_axis(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nz).map(|i| self.z(i))
    }
}

/// Builds a grid covering z in [0, L] and t in [0, duration].
///
/// `nt` is chosen so that (nt-1)*dt >= duration with (nt-2)*dt < duration;
/// an exact multiple yields duration/dt + 1 points.
pub fn make_grid(
    params: &PhysicalParams,
    nz: usize,
    duration: f64,
    dt: f64,
) -> Result<SimGrid, DomainError> {
    if nz < 2 {
        return Err(DomainError::InvalidParameter {
            name: "nz",
            reason: format!("need nz >= 2, got {nz}"),
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(DomainError::InvalidParameter {
            name: "dt",
            reason: format!("need dt > 0, got {dt}"),
        });
    }
    if !(duration > dt) || !duration.is_finite() {
        return Err(DomainError::InvalidParameter {
            name: "duration",
            reason: format!("need duration > dt, got {duration}"),
        });
    }
    let steps = (duration / dt - 1e-9).ceil().max(1.0) as usize;
    Ok(SimGrid {
        nz,
        nt: steps + 1,
        dz: params.length / (nz - 1) as f64,
        dt,
        t0: 0.0,
        length: params.length,
    })
}
