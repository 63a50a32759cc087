//! Observable extraction: spectra, Gaussian fits, peak lists, efficiency
//! and time-mirror overlap.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::AnalysisError;
use crate::trace::{C64, ComplexTrace};

/// Result of a least-squares fit of a*exp(-(x-x0)^2/(2 sigma^2)) + b.
#[derive(Debug, Clone, Copy)]
pub struct GaussianFit {
    pub amplitude: f64,
    /// Center, in the units of the fitted axis (s or rad/s).
    pub center: f64,
    pub sigma: f64,
    pub baseline: f64,
    /// Root-sum-square residual relative to the data norm.
    pub residual_l2: f64,
}

/// Discrete spectrum on a uniform, monotonically increasing rad/s axis
/// (negative frequencies first).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub amplitude: Vec<C64>,
}

impl Spectrum {
    pub fn magnitude(&self) -> Vec<f64> {
        self.amplitude.iter().map(|v| v.norm()).collect()
    }

    /// Axis spacing, rad/s.
    pub fn domega(&self) -> f64 {
        if self.omega.len() < 2 {
            0.0
        } else {
            self.omega[1] - self.omega[0]
        }
    }
}

/// Spectral window applied before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralWindow {
    None,
    Hann,
}

/// Unnormalized forward DFT with the bins reordered to a monotonic axis:
/// sum|x|^2 = (1/N) sum|X|^2 holds exactly (up to rounding).
pub fn spectrum(trace: &ComplexTrace, window: SpectralWindow) -> Result<Spectrum, AnalysisError> {
    spectrum_padded(trace, window, 1)
}

/// Like [`spectrum`] but zero-pads the trace to `pad_factor` times its
/// length first, refining the bin spacing for peak localization.
pub fn spectrum_padded(
    trace: &ComplexTrace,
    window: SpectralWindow,
    pad_factor: usize,
) -> Result<Spectrum, AnalysisError> {
    let n = trace.len();
    if n < 8 {
        return Err(AnalysisError::TooShort { len: n, min: 8 });
    }
    trace.check_finite()?;
    let m = n * pad_factor.max(1);
    let mut buf: Vec<C64> = Vec::with_capacity(m);
    match window {
        SpectralWindow::None => buf.extend_from_slice(&trace.values),
        SpectralWindow::Hann => {
            let denom = (n - 1) as f64;
            buf.extend(trace.values.iter().enumerate().map(|(k, v)| {
                let w = 0.5 * (1.0 - (std::f64::consts::TAU * k as f64 / denom).cos());
                v * w
            }));
        }
    }
    buf.resize(m, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);

    // Reorder to negative-first and attach the rad/s axis.
    let dw = std::f64::consts::TAU / (m as f64 * trace.dt);
    let half = m.div_ceil(2); // bins [0, half) are non-negative frequencies
    let neg = m - half;
    let mut amplitude = Vec::with_capacity(m);
    amplitude.extend_from_slice(&buf[half..]);
    amplitude.extend_from_slice(&buf[..half]);
    let omega = (0..m).map(|j| (j as f64 - neg as f64) * dw).collect();
    Ok(Spectrum { omega, amplitude })
}

fn median(data: &[f64]) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Solves the 4x4 normal equations in place; returns None when singular.
fn solve4(mut m: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for c in 0..4 {
        let (pivot, max) = (c..4)
            .map(|r| (r, m[r][c].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if max < 1e-300 {
            return None;
        }
        m.swap(c, pivot);
        b.swap(c, pivot);
        let inv = 1.0 / m[c][c];
        for r in 0..4 {
            if r == c {
                continue;
            }
            let f = m[r][c] * inv;
            for k in c..4 {
                m[r][k] -= f * m[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    Some([b[0] / m[0][0], b[1] / m[1][1], b[2] / m[2][2], b[3] / m[3][3]])
}

/// Fits a Gaussian plus baseline to single-lobe magnitude data on the axis
/// x_k = x0 + k*dx. Levenberg-Marquardt with a moment-based initial guess.
pub fn fit_gaussian_envelope(x0: f64, dx: f64, y: &[f64]) -> Result<GaussianFit, AnalysisError> {
    let n = y.len();
    if n < 8 {
        return Err(AnalysisError::TooShort { len: n, min: 8 });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let peak = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let med = median(y);
    if peak <= 0.0 {
        return Err(AnalysisError::ZeroEnergy);
    }
    let ratio = if med > 0.0 { peak / med } else { f64::INFINITY };
    if ratio < 3.0 {
        return Err(AnalysisError::MultiLobe { ratio });
    }

    // Moment-based start: baseline = data floor, centroid and second moment
    // of the excess over baseline.
    let floor = y.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w_sum = 0.0;
    let mut c_sum = 0.0;
    for (k, &v) in y.iter().enumerate() {
        let w = (v - floor).max(0.0);
        w_sum += w;
        c_sum += w * (x0 + k as f64 * dx);
    }
    let center0 = c_sum / w_sum;
    let mut v_sum = 0.0;
    for (k, &v) in y.iter().enumerate() {
        let w = (v - floor).max(0.0);
        let d = x0 + k as f64 * dx - center0;
        v_sum += w * d * d;
    }
    let sigma0 = (v_sum / w_sum).sqrt().max(dx.abs());
    let mut p = [peak - floor, center0, sigma0, floor]; // a, x0, sigma, b

    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut lambda = 1e-3;
    let max_iters = 200;
    let mut chi2 = f64::INFINITY;
    for iter in 0..max_iters {
        // residuals and Jacobian of r_k = model_k - y_k
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        let mut c2 = 0.0;
        for (k, &yv) in y.iter().enumerate() {
            let x = x0 + k as f64 * dx;
            let u = (x - p[1]) / p[2];
            let e = (-0.5 * u * u).exp();
            let r = p[0] * e + p[3] - yv;
            let j = [e, p[0] * e * u / p[2], p[0] * e * u * u / p[2], 1.0];
            for a in 0..4 {
                jtr[a] += j[a] * r;
                for b in a..4 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
            c2 += r * r;
        }
        for a in 0..4 {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }
        let grad_norm = jtr.iter().map(|v| v * v).sum::<f64>().sqrt();
        if grad_norm < 1e-10 * y_norm.max(1.0) && iter > 0 {
            chi2 = c2;
            break;
        }
        chi2 = c2;
        // damped step, retried with stronger damping until chi2 improves
        let mut accepted = false;
        for _ in 0..12 {
            let mut m = jtj;
            for d in 0..4 {
                m[d][d] += lambda * jtj[d][d].max(1e-300);
            }
            let Some(step) = solve4(m, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let cand = [
                p[0] - step[0],
                p[1] - step[1],
                (p[2] - step[2]).abs().max(1e-3 * dx.abs()),
                p[3] - step[3],
            ];
            let mut c2_new = 0.0;
            for (k, &yv) in y.iter().enumerate() {
                let x = x0 + k as f64 * dx;
                let u = (x - cand[1]) / cand[2];
                let r = cand[0] * (-0.5 * u * u).exp() + cand[3] - yv;
                c2_new += r * r;
            }
            if c2_new <= chi2 {
                p = cand;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted && iter == max_iters - 1 {
            return Err(AnalysisError::NoConvergence { iters: max_iters });
        }
    }
    if !p.iter().all(|v| v.is_finite()) {
        return Err(AnalysisError::NoConvergence { iters: max_iters });
    }
    Ok(GaussianFit {
        amplitude: p[0],
        center: p[1],
        sigma: p[2].abs(),
        baseline: p[3],
        residual_l2: chi2.sqrt() / y_norm,
    })
}

/// Local maxima above a prominence floor, greedily thinned to a minimum
/// separation and returned sorted by location (x = x0 + index*dx).
pub fn peak_find(
    x0: f64,
    dx: f64,
    y: &[f64],
    min_separation: f64,
    min_prominence: f64,
) -> Vec<(f64, f64)> {
    let n = y.len();
    if n < 3 || min_separation <= 0.0 {
        return Vec::new();
    }
    let mut candidates: Vec<(usize, f64)> = (1..n - 1)
        .filter(|&k| y[k] > y[k - 1] && y[k] >= y[k + 1])
        .map(|k| (k, y[k]))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));

    let prominence = |k: usize, h: f64| -> f64 {
        // lowest point on the way to higher terrain, on each side
        let mut left = f64::INFINITY;
        let mut found_left = false;
        for j in (0..k).rev() {
            left = left.min(y[j]);
            if y[j] > h {
                found_left = true;
                break;
            }
        }
        let mut right = f64::INFINITY;
        let mut found_right = false;
        for &v in &y[k + 1..] {
            right = right.min(v);
            if v > h {
                found_right = true;
                break;
            }
        }
        let saddle = match (found_left, found_right) {
            (true, true) => left.max(right),
            (true, false) => left,
            (false, true) => right,
            (false, false) => left.min(right), // global max: drop to the floor
        };
        h - saddle
    };

    let mut accepted: Vec<(usize, f64)> = Vec::new();
    for (k, h) in candidates {
        if accepted
            .iter()
            .any(|&(ka, _)| ((ka as f64 - k as f64) * dx).abs() < min_separation)
        {
            continue;
        }
        if prominence(k, h) >= min_prominence {
            accepted.push((k, h));
        }
    }
    accepted.sort_by_key(|&(k, _)| k);
    accepted
        .into_iter()
        .map(|(k, h)| (x0 + k as f64 * dx, h))
        .collect()
}

/// Energy ratio of the retrieved window to the input window.
pub fn efficiency(input: &ComplexTrace, output: &ComplexTrace) -> Result<f64, AnalysisError> {
    input.check_finite()?;
    output.check_finite()?;
    let e_in = input.energy();
    if e_in <= 0.0 {
        return Err(AnalysisError::ZeroEnergy);
    }
    Ok(output.energy() / e_in)
}

/// Best normalized magnitude correlation between the output and the
/// time-reversed input, maximized over the relative shift (global phase and
/// delay do not matter, shape does).
pub fn time_mirror_overlap(
    input: &ComplexTrace,
    output: &ComplexTrace,
) -> Result<f64, AnalysisError> {
    input.check_finite()?;
    output.check_finite()?;
    let ni = input.len();
    let no = output.len();
    if ni == 0 || no == 0 || input.energy() <= 0.0 || output.energy() <= 0.0 {
        return Err(AnalysisError::ZeroEnergy);
    }
    // sum_t out(t) conj(in(tau - t)) is a linear convolution: compute it by
    // FFT on a zero-padded common grid.
    let m = ni + no;
    let mut fa: Vec<C64> = output.values.clone();
    fa.resize(m, Complex64::new(0.0, 0.0));
    let mut fb: Vec<C64> = input.values.iter().map(|v| v.conj()).collect();
    fb.resize(m, Complex64::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut fa);
    fft.process(&mut fb);
    for (a, b) in fa.iter_mut().zip(&fb) {
        *a *= b;
    }
    planner.plan_fft_inverse(m).process(&mut fa);
    let peak = fa.iter().map(|v| v.norm()).fold(0.0, f64::max) / m as f64;
    let norm_i = input.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let norm_o = output.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    Ok((peak / (norm_i * norm_o)).min(1.0))
}
