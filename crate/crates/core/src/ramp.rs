//! Time profiles for the coupling Rabi frequency within a schedule segment.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampShape {
    Constant,
    Linear,
    Tanh,
}

/// Coupling amplitude ramp: moves from `start` to `end` over `duration`,
/// then holds `end`. All values in rad/s, duration in s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingRamp {
    pub shape: RampShape,
    pub start: f64,
    pub end: f64,
    pub duration: f64,
}

impl CouplingRamp {
    pub fn constant(value: f64) -> Self {
        Self {
            shape: RampShape::Constant,
            start: value,
            end: value,
            duration: 0.0,
        }
    }

    pub fn tanh(start: f64, end: f64, duration: f64) -> Self {
        Self {
            shape: RampShape::Tanh,
            start,
            end,
            duration,
        }
    }

    pub fn linear(start: f64, end: f64, duration: f64) -> Self {
        Self {
            shape: RampShape::Linear,
            start,
            end,
            duration,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.start >= 0.0 && self.end >= 0.0 && self.duration >= 0.0
    }

    /// Coupling value at time `t` measured from the segment start.
    pub fn value(&self, t: f64) -> f64 {
        if self.shape == RampShape::Constant {
            return self.end;
        }
        if self.duration <= 0.0 || t >= self.duration {
            return self.end;
        }
        if t <= 0.0 {
            return self.start;
        }
        let x = t / self.duration;
        let frac = match self.shape {
            RampShape::Constant => unreachable!(),
            RampShape::Linear => x,
            RampShape::Tanh => {
                // Normalized so the endpoints are hit exactly.
                let s = 8.0;
                let y = (s * (x - 0.5)).tanh();
                let y0 = (-s / 2.0_f64).tanh();
                (y - y0) / (-2.0 * y0)
            }
        };
        self.start + (self.end - self.start) * frac
    }

    pub fn max_value(&self) -> f64 {
        self.start.max(self.end)
    }
}
