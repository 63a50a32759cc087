//! Complex envelope traces sampled uniformly in time.

use num_complex::Complex64;

use crate::error::AnalysisError;

pub type C64 = Complex64;

/// A uniformly sampled complex amplitude trace (normalized field units).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrace {
    pub values: Vec<C64>,
    /// Sample spacing, s.
    pub dt: f64,
    /// Time of the first sample, s.
    pub t0: f64,
}

impl ComplexTrace {
    pub fn zeros(n: usize, dt: f64, t0: f64) -> Self {
        Self {
            values: vec![C64::new(0.0, 0.0); n],
            dt,
            t0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn check_finite(&self) -> Result<(), AnalysisError> {
        if self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(())
        } else {
            Err(AnalysisError::NonFinite)
        }
    }

    /// Pulse energy, integral of |A|^2 dt.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dt
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Energy-weighted temporal centroid, s.
    pub fn centroid(&self) -> Option<f64> {
        let w: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if w <= 0.0 {
            return None;
        }
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| self.t(k) * v.norm_sqr())
            .sum();
        Some(s / w)
    }

    /// Value at arbitrary time by 4-point (cubic) Lagrange interpolation;
    /// zero outside the sampled support.
    pub fn interp(&self, t: f64) -> C64 {
        let n = self.len();
        if n == 0 {
            return C64::new(0.0, 0.0);
        }
        let x = (t - self.t0) / self.dt;
        if x < -0.5 || x > (n - 1) as f64 + 0.5 {
            return C64::new(0.0, 0.0);
        }
        if n < 4 {
            let k = (x.round() as isize).clamp(0, n as isize - 1) as usize;
            return self.values[k];
        }
        let i1 = (x.floor() as isize).clamp(0, n as isize - 2) as usize;
        let i0 = i1.saturating_sub(1);
        let base = i0.min(n - 4);
        let u = x - base as f64;
        // Lagrange basis on nodes 0,1,2,3.
        let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
        let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
        let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
        let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
        self.values[base] * l0
            + self.values[base + 1] * l1
            + self.values[base + 2] * l2
            + self.values[base + 3] * l3
    }

    /// Sub-trace covering [t_start, t_end] (inclusive of overlapping samples).
    pub fn window(&self, t_start: f64, t_end: f64) -> ComplexTrace {
        let k0 = ((((t_start - self.t0) / self.dt) - 1e-9).ceil().max(0.0)) as usize;
        let k1 = ((((t_end - self.t0) / self.dt) + 1e-9).floor() as isize)
            .clamp(0, self.len() as isize - 1) as usize;
        let values = if k0 <= k1 {
            self.values[k0..=k1].to_vec()
        } else {
            Vec::new()
        };
        ComplexTrace {
            values,
            dt: self.dt,
            t0: self.t(k0),
        }
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}
