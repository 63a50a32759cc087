//! Optional dense space-time field records for `--emit fields`.

use crate::trace::C64;

/// Decimated snapshots of the optical field and the coherence magnitude.
#[derive(Debug, Clone, Default)]
pub struct FieldRecord {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    /// Signal field A(t_k, z_i), one row per recorded instant.
    pub field: Vec<Vec<C64>>,
    /// |rho_gh| (GEM) or |S|/g_P (EIT) per recorded instant.
    pub coherence: Vec<Vec<f64>>,
}

impl FieldRecord {
    pub fn new(z: Vec<f64>) -> Self {
        Self {
            t: Vec::new(),
            z,
            field: Vec::new(),
            coherence: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, field: Vec<C64>, coherence: Vec<f64>) {
        self.t.push(t);
        self.field.push(field);
        self.coherence.push(coherence);
    }

    pub fn merge(&mut self, other: FieldRecord) {
        if self.z.is_empty() {
            self.z = other.z;
        }
        self.t.extend(other.t);
        self.field.extend(other.field);
        self.coherence.extend(other.coherence);
    }
}

/// Recording request: keep every `stride`-th time step.
#[derive(Debug, Clone, Copy)]
pub struct RecordSpec {
    pub stride: usize,
}
