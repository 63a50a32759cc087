//! Acceptance suite: one criterion per test, each ending in a single
//! PASS/FAIL line (run with `--nocapture` to see them alongside the test
//! harness output).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use nalgebra::DMatrix;
use num_complex::Complex64;

use qmemsim::analysis::{peak_find, spectrum_padded, time_mirror_overlap, SpectralWindow};
use qmemsim::density::flat_density;
use qmemsim::eit::{eit_run, group_velocity, EitSegment, EitState};
use qmemsim::gem::{gem_run, GemDrive, GemSegment, GemState};
use qmemsim::grid::make_grid;
use qmemsim::params::{ParamsInConfigUnits, PhysicalParams};
use qmemsim::ramp::CouplingRamp;
use qmemsim::sequence::{
    handoff_eit_to_gem, run_protocol, ProtocolKind, SequenceSettings,
};
use qmemsim::signal::{
    demodulate, detect_averaged, synthesize_input, DetectionSpec, PulseSpec,
};
use qmemsim::trace::{C64, ComplexTrace};
use qmemsim::units::{mhz_per_mm_to_rad_per_m, mhz_to_rad, TWO_PI};

fn check(name: &str, ok: bool, detail: &str) {
    println!(
        "acceptance {name}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "{name} failed: {detail}");
}

fn defaults() -> PhysicalParams {
    ParamsInConfigUnits::default().convert().unwrap()
}

fn gaussian(sigma_us: f64, center_us: f64, detuning_mhz: f64) -> PulseSpec {
    PulseSpec::Gaussian {
        sigma_t: sigma_us * 1e-6,
        center_t: center_us * 1e-6,
        detuning: mhz_to_rad(detuning_mhz),
        amplitude: 1.0,
        phase: 0.0,
    }
}

/// Coupling light shift of the ground-state coherence,
/// W^2*Delta/(Gamma^2+4*Delta^2); compensated via the two-photon offset
/// where a symmetric memory band matters.
fn light_shift(p: &PhysicalParams) -> f64 {
    let w2 = p.omega_c_max * p.omega_c_max;
    p.delta * w2 / (p.gamma * p.gamma + 4.0 * p.delta * p.delta)
}

/// 1. Slow-light transit delay against the analytic value Gamma*OD/W^2 on a
/// production-size grid.
#[test]
fn slow_light_delay_matches_analytic_transit() {
    let p = defaults();
    let duration = 20e-6;
    let dt = 1e-9; // nt = 2e4
    let grid = make_grid(&p, 400, duration, dt).unwrap();
    let density = flat_density(&grid);
    let input = synthesize_input(&gaussian(2.5, 6.0, 0.0), &grid).unwrap().trace;
    let segments = vec![EitSegment {
        duration,
        omega_c: CouplingRamp::constant(p.omega_c_max),
        input_open: true,
    }];
    let out = eit_run(
        EitState::zeros(grid.nz),
        Some(&input),
        &segments,
        &grid,
        &density,
        &p,
        None,
    )
    .unwrap();
    let delay = out.exit.centroid().unwrap() - input.centroid().unwrap();
    let expected = p.gamma * p.od / (p.omega_c_max * p.omega_c_max);
    let ok = (delay - expected).abs() <= 0.10 * expected;
    check(
        "slow-light delay oracle",
        ok,
        &format!(
            "delay {:.4} us vs analytic {:.4} us",
            delay * 1e6,
            expected * 1e6
        ),
    );
}

/// 2. Frequency-to-position mapping: argmax_z of the stored coherence is
/// linear in the input detuning with slope 1/beta.
#[test]
fn gradient_memory_frequency_to_position_mapping() {
    let p = defaults();
    let duration = 12e-6;
    let dt = 2e-9;
    let grid = make_grid(&p, 400, duration, dt).unwrap();
    let density = flat_density(&grid);

    // 7 detunings across the central half of the memory band beta*L
    let half_band_mhz = p.memory_bandwidth() / TWO_PI / 1e6 / 2.0; // 1 MHz
    let n = 7;
    let detunings_mhz: Vec<f64> = (0..n)
        .map(|k| -0.5 * half_band_mhz + k as f64 * half_band_mhz / (n - 1) as f64)
        .collect();

    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for &f in &detunings_mhz {
        let input = synthesize_input(&gaussian(2.5, 5.0, f), &grid).unwrap().trace;
        let segments = vec![GemSegment {
            duration,
            gradient_sign: 1.0,
            omega_c: CouplingRamp::constant(p.omega_c_max),
            delta: p.delta,
            input_open: true,
        }];
        let out = gem_run(
            GemState::zeros(grid.nz),
            &segments,
            &grid,
            &density,
            &p,
            Some(&input),
            None,
        )
        .unwrap();
        let (imax, _) = out
            .final_state
            .rho
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        xs.push(mhz_to_rad(f));
        zs.push(grid.z(imax));
    }

    let nf = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let mz = zs.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxz: f64 = xs.iter().zip(&zs).map(|(x, z)| (x - mx) * (z - mz)).sum();
    let slope = sxz / sxx;
    let ss_tot: f64 = zs.iter().map(|z| (z - mz).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&zs)
        .map(|(x, z)| {
            let fit = mz + slope * (x - mx);
            (z - fit).powi(2)
        })
        .sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let ok = (slope - 1.0 / p.beta).abs() <= 0.05 / p.beta && r2 > 0.999;
    check(
        "frequency-to-position mapping",
        ok,
        &format!(
            "slope {:.4e} m.s/rad vs 1/beta {:.4e}, R^2 = {:.6}",
            slope,
            1.0 / p.beta,
            r2
        ),
    );
}

/// 3. Full gradient cycle on a spectrally asymmetric double-Gaussian input:
/// the readout is the time mirror of the input (frequency inverted), so the
/// mirror overlap is high while the plain correlation is low.
#[test]
fn gradient_echo_time_mirror_fidelity() {
    let mut p = defaults();
    p.delta = mhz_to_rad(30.0);
    p.omega_c_max = mhz_to_rad(4.5);
    p.omega0 = light_shift(&p); // two-photon resonance calibrated with coupling on
    let dt = 2e-9;
    let grid = make_grid(&p, 64, 25e-6, dt).unwrap();
    let density = flat_density(&grid);
    // two Gaussian lobes in the spectrum (-0.2 and +0.6 MHz, unequal
    // weight); total extent ~0.87 MHz <= half the 2 MHz memory band
    let input = synthesize_input(
        &PulseSpec::TwoTone {
            sigma_t: 1.5e-6,
            center_t: 5.0e-6,
            detunings: [mhz_to_rad(-0.2), mhz_to_rad(0.6)],
            amplitudes: [1.0, 0.55],
            phases: [0.0, 0.0],
        },
        &grid,
    )
    .unwrap()
    .trace;

    let mut settings = SequenceSettings::defaults(ProtocolKind::GemOnly, &p);
    settings.t1 = 10e-6;
    settings.read_duration = 13e-6;
    let result = run_protocol(&settings, &input, &grid, &density, &p).unwrap();
    let mirror = result.metrics["mirror_overlap"];
    let reversed = ComplexTrace {
        values: input.values.iter().rev().copied().collect(),
        dt: input.dt,
        t0: input.t0,
    };
    let plain = time_mirror_overlap(&reversed, &result.read_window()).unwrap();
    let ok = mirror >= 0.9 && plain <= 0.7;
    check(
        "gradient echo time-mirror fidelity",
        ok,
        &format!("mirror overlap {mirror:.4}, plain overlap {plain:.4}"),
    );
}

/// 4. Frequency-to-time conversion regime contrast: the readout delay of a
/// narrow-bandwidth pulse tracks its detuning across the band, while a
/// broad-bandwidth pulse fills the band and its delay barely moves.
#[test]
fn bandwidth_regime_contrast_in_frequency_to_time_conversion() {
    let mut p = defaults();
    p.beta = mhz_per_mm_to_rad_per_m(0.05); // beta*L = 2*pi*0.5 MHz
    p.omega0 = light_shift(&p);
    let dt = 2e-9;
    let grid = make_grid(&p, 128, 25e-6, dt).unwrap();
    let density = flat_density(&grid);

    let mut settings = SequenceSettings::defaults(ProtocolKind::GemWriteEitRead, &p);
    settings.t1 = 10e-6;
    settings.read_duration = 8e-6;

    let half_band_mhz = p.memory_bandwidth() / TWO_PI / 1e6 / 2.0; // 0.25 MHz
    let detunings_mhz: Vec<f64> = (0..5)
        .map(|k| -0.5 * half_band_mhz + k as f64 * half_band_mhz / 4.0)
        .collect();

    let series = |sigma_us: f64| -> Vec<f64> {
        detunings_mhz
            .iter()
            .map(|&f| {
                let input = synthesize_input(&gaussian(sigma_us, 5.0, f), &grid)
                    .unwrap()
                    .trace;
                let result = run_protocol(&settings, &input, &grid, &density, &p).unwrap();
                result.metrics["delay_us"]
            })
            .collect()
    };
    let long = series(2.5);
    let short = series(0.5);

    let span = |d: &[f64]| {
        d.iter().copied().fold(f64::MIN, f64::max) - d.iter().copied().fold(f64::MAX, f64::min)
    };
    let monotonic = |d: &[f64]| {
        d.windows(2).all(|w| w[1] < w[0]) || d.windows(2).all(|w| w[1] > w[0])
    };
    let ok = span(&long) >= 3.0 * span(&short) && monotonic(&long) && monotonic(&short);
    check(
        "bandwidth regime contrast",
        ok,
        &format!(
            "delay span narrowband {:.3} us vs broadband {:.3} us; monotonic {}/{}",
            span(&long),
            span(&short),
            monotonic(&long),
            monotonic(&short)
        ),
    );
}

/// 5. Time-to-frequency conversion of a double pulse: slow-light write-in
/// freezes the pair a distance v_g*dt apart, and the gradient readout turns
/// that into two spectral peaks separated by beta*v_g*dt.
#[test]
fn time_to_frequency_conversion_of_a_double_pulse() {
    let p = ParamsInConfigUnits {
        od: 600.0,
        omega_c_mhz: 13.5,
        ..ParamsInConfigUnits::default()
    }
    .convert()
    .unwrap();
    let dt = 1e-9;
    let grid = make_grid(&p, 128, 24e-6, dt).unwrap();
    let density = flat_density(&grid);
    let delta_t = 1.0e-6;
    let v_g = group_velocity(&p, p.omega_c_max);
    // weak readout coupling keeps the collective rate integrable at OD=600
    let omega_read = mhz_to_rad(4.5);

    // fixed write schedule so that shifting the arrival moves the frozen
    // pair inside the cloud
    let run_pair = |center_us: f64| -> Vec<f64> {
        let input = synthesize_input(
            &PulseSpec::DoublePulse {
                sigma_t: 0.25e-6,
                center_t: center_us * 1e-6,
                separation: delta_t,
                detuning: 0.0,
                amplitudes: [1.0, 1.0],
                phases: [0.0, 0.0],
            },
            &grid,
        )
        .unwrap()
        .trace;
        let eit_segments = vec![
            EitSegment {
                duration: 3.0e-6,
                omega_c: CouplingRamp::constant(p.omega_c_max),
                input_open: true,
            },
            EitSegment {
                duration: 0.35e-6,
                omega_c: CouplingRamp::tanh(p.omega_c_max, 0.0, 0.3e-6),
                input_open: true,
            },
            EitSegment {
                // long dark settle so the residual polarization dies before
                // the hand-off residual-light check
                duration: 0.6e-6,
                omega_c: CouplingRamp::constant(0.0),
                input_open: false,
            },
        ];
        let eit_out = eit_run(
            EitState::zeros(grid.nz),
            Some(&input),
            &eit_segments,
            &grid,
            &density,
            &p,
            None,
        )
        .unwrap();
        let g = qmemsim::eit::coupling_profile(&density, &p, &grid);
        let gem_init = handoff_eit_to_gem(
            &eit_out.final_state,
            &g,
            input.max_abs(),
            p.g_p() * input.max_abs(),
        )
        .unwrap();
        let read = 12e-6;
        let gem_segments = vec![
            GemSegment {
                duration: 2e-6,
                gradient_sign: 1.0,
                omega_c: CouplingRamp::constant(0.0),
                delta: p.delta,
                input_open: false,
            },
            GemSegment {
                duration: 2e-6,
                gradient_sign: -1.0,
                omega_c: CouplingRamp::constant(0.0),
                delta: p.delta,
                input_open: false,
            },
            GemSegment {
                duration: read,
                gradient_sign: -1.0,
                omega_c: CouplingRamp::constant(omega_read),
                delta: p.delta,
                input_open: false,
            },
        ];
        let gem_out = gem_run(gem_init, &gem_segments, &grid, &density, &p, None, None).unwrap();
        let end = gem_out.exit.t(gem_out.exit.len() - 1);
        let window = gem_out.exit.window(end - read, end);
        let sp = spectrum_padded(&window, SpectralWindow::None, 8).unwrap();
        let mag = sp.magnitude();
        let top = mag.iter().copied().fold(0.0, f64::max);
        // the deeper-stored peak is reabsorbed on the way out and rides on a
        // pedestal, so use a moderate prominence threshold
        peak_find(sp.omega[0], sp.domega(), &mag, mhz_to_rad(0.25), 0.06 * top)
            .into_iter()
            .map(|(w, _)| w)
            .collect()
    };

    let peaks_a = run_pair(1.6);
    let peaks_b = run_pair(2.1);
    let expected_sep = p.beta * v_g * delta_t;

    let mut ok = peaks_a.len() == 2 && peaks_b.len() == 2;
    let mut detail = format!("{} and {} peaks", peaks_a.len(), peaks_b.len());
    if ok {
        let sep = (peaks_a[1] - peaks_a[0]).abs();
        let shift0 = peaks_b[0] - peaks_a[0];
        let shift1 = peaks_b[1] - peaks_a[1];
        ok = (sep - expected_sep).abs() <= 0.25 * expected_sep
            && shift0 * shift1 > 0.0;
        detail = format!(
            "separation {:.3} MHz vs beta*v_g*dt {:.3} MHz; arrival shift moves peaks by \
             {:+.3} and {:+.3} MHz",
            sep / TWO_PI / 1e6,
            expected_sep / TWO_PI / 1e6,
            shift0 / TWO_PI / 1e6,
            shift1 / TWO_PI / 1e6
        );
    }
    check("time-to-frequency double pulse", ok, &detail);
}

/// 6. Linearity and passivity: scaling the input scales all field outputs;
/// efficiency never exceeds unity.
#[test]
fn linearity_and_passivity_across_protocols() {
    let alphas = [
        Complex64::new(0.5, 0.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    // slow-light write-in needs a higher optical depth to hold the pulse
    let protocols = [
        (ProtocolKind::GemOnly, 80.0),
        (ProtocolKind::GemWriteEitRead, 80.0),
        (ProtocolKind::EitWriteGemRead, 300.0),
        (ProtocolKind::EitOnly, 300.0),
    ];
    let dt = 1e-9;

    let mut worst = 0.0f64;
    let mut worst_eff = 0.0f64;
    for (kind, od) in protocols {
        let p = ParamsInConfigUnits {
            od,
            ..ParamsInConfigUnits::default()
        }
        .convert()
        .unwrap();
        let grid = make_grid(&p, 48, 16e-6, dt).unwrap();
        let density = flat_density(&grid);
        let input = synthesize_input(&gaussian(0.5, 1.5, 0.2), &grid).unwrap().trace;
        let mut settings = SequenceSettings::defaults(kind, &p);
        settings.t1 = match kind {
            ProtocolKind::EitWriteGemRead => 2e-6,
            _ => 4e-6,
        };
        settings.read_duration = 6e-6;
        settings.settle = 0.5e-6;
        let base = run_protocol(&settings, &input, &grid, &density, &p).unwrap();
        worst_eff = worst_eff.max(base.metrics["efficiency"]);
        for alpha in alphas {
            let scaled_input = ComplexTrace {
                values: input.values.iter().map(|v| v * alpha).collect(),
                dt: input.dt,
                t0: input.t0,
            };
            let scaled = run_protocol(&settings, &scaled_input, &grid, &density, &p).unwrap();
            worst_eff = worst_eff.max(scaled.metrics["efficiency"]);
            let rel = |a: &[C64], b: &[C64]| -> f64 {
                let num: f64 = a.iter().zip(b).map(|(x, y)| (x * alpha - y).norm_sqr()).sum();
                let den: f64 = a.iter().map(|x| (x * alpha).norm_sqr()).sum();
                (num / den).sqrt()
            };
            worst = worst.max(rel(&base.exit_trace.values, &scaled.exit_trace.values));
            worst = worst.max(rel(&base.final_coherence, &scaled.final_coherence));
        }
    }
    let ok = worst < 1e-10 && worst_eff <= 1.0 + 1e-6;
    check(
        "linearity and passivity",
        ok,
        &format!("worst scaling deviation {worst:.3e}, max efficiency {worst_eff:.6}"),
    );
}

fn rel_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// 7. Small-instance oracle: both solvers against dense matrix-exponential
/// propagation of their semi-discrete linear systems.
#[test]
fn solvers_match_dense_matrix_exponential() {
    let start = std::time::Instant::now();
    // gradient-memory system, nz = 14
    let mut p = defaults();
    p.beta = mhz_per_mm_to_rad_per_m(0.2);
    let nz = 14;
    let dt = 1e-9;
    let steps = 64;
    let duration = steps as f64 * dt;
    let grid = make_grid(&p, nz, duration, dt).unwrap();
    let density = flat_density(&grid);
    let drive = GemDrive {
        omega_c: p.omega_c_max,
        delta: p.delta,
        gradient_sign: 1.0,
        beta: p.beta,
        omega0: 0.0,
        input: Complex64::new(0.0, 0.0),
    };
    let mut m = DMatrix::<Complex64>::zeros(nz, nz);
    for j in 0..nz {
        let mut e = vec![Complex64::new(0.0, 0.0); nz];
        e[j] = Complex64::new(1.0, 0.0);
        let col = qmemsim::gem::semi_discrete_rhs(&e, &drive, &density, &p, &grid).unwrap();
        for i in 0..nz {
            m[(i, j)] = col[i];
        }
    }
    let mut init = GemState::zeros(nz);
    for (i, r) in init.rho.iter_mut().enumerate() {
        let u = (grid.z(i) - 0.45 * p.length) / (0.15 * p.length);
        *r = Complex64::new(0.1 * (-0.5 * u * u).exp(), 0.05 * (2.0 * u).sin());
    }
    let y0 = DMatrix::<Complex64>::from_column_slice(nz, 1, &init.rho);
    let expected = (m * Complex64::new(duration, 0.0)).exp() * y0;
    let segs = vec![GemSegment {
        duration,
        gradient_sign: 1.0,
        omega_c: CouplingRamp::constant(p.omega_c_max),
        delta: p.delta,
        input_open: false,
    }];
    let out = gem_run(init, &segs, &grid, &density, &p, None, None).unwrap();
    let expected_vec: Vec<C64> = expected.iter().copied().collect();
    let gem_err = rel_l2(&out.final_state.rho, &expected_vec);

    // slow-light system, 2*nz state [P; S], nz = 12
    let p = defaults();
    let nz = 12;
    let dim = 2 * nz;
    let grid = make_grid(&p, nz, duration, dt).unwrap();
    let density = flat_density(&grid);
    let zero_in = Complex64::new(0.0, 0.0);
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for j in 0..dim {
        let mut pv = vec![Complex64::new(0.0, 0.0); nz];
        let mut sv = vec![Complex64::new(0.0, 0.0); nz];
        if j < nz {
            pv[j] = Complex64::new(1.0, 0.0);
        } else {
            sv[j - nz] = Complex64::new(1.0, 0.0);
        }
        let rhs = qmemsim::eit::semi_discrete_rhs(
            &pv, &sv, zero_in, p.omega_c_max, &density, &p, &grid,
        );
        for i in 0..nz {
            m[(i, j)] = rhs.dp[i];
            m[(nz + i, j)] = rhs.ds[i];
        }
    }
    let mut init = EitState::zeros(nz);
    for i in 0..nz {
        let u = (grid.z(i) - 0.4 * p.length) / (0.12 * p.length);
        init.s[i] = Complex64::new((-0.5 * u * u).exp(), 0.0) * p.g_p();
        init.p[i] = Complex64::new(0.0, 0.02 * (-u * u).exp()) * p.g_p();
    }
    let mut y0 = DMatrix::<Complex64>::zeros(dim, 1);
    for i in 0..nz {
        y0[(i, 0)] = init.p[i];
        y0[(nz + i, 0)] = init.s[i];
    }
    let expected = (m * Complex64::new(duration, 0.0)).exp() * y0;
    let segs = vec![EitSegment {
        duration,
        omega_c: CouplingRamp::constant(p.omega_c_max),
        input_open: false,
    }];
    let out = eit_run(init, None, &segs, &grid, &density, &p, None).unwrap();
    let mut got = out.final_state.p.clone();
    got.extend_from_slice(&out.final_state.s);
    let expected_vec: Vec<C64> = expected.iter().copied().collect();
    let eit_err = rel_l2(&got, &expected_vec);

    let elapsed = start.elapsed().as_secs_f64();
    let ok = gem_err < 1e-6 && eit_err < 1e-6 && elapsed < 5.0;
    check(
        "small-instance matrix-exponential oracle",
        ok,
        &format!("relative L2 {gem_err:.2e} / {eit_err:.2e}, {elapsed:.2} s"),
    );
}

/// 8. Detection chain: heterodyne/demodulate round trip, and coherent
/// averaging of 200 noisy sequences recovering sqrt(200) in SNR.
#[test]
fn detection_chain_round_trip_and_averaging() {
    let dt = 2e-9;
    let n = 5000; // 10 us
    let sigma = 1.0e-6;
    let center = 5.0e-6;
    let detuning = mhz_to_rad(0.3);
    let values: Vec<C64> = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let u = (t - center) / sigma;
            Complex64::from_polar((-0.5 * u * u).exp(), detuning * t)
        })
        .collect();
    let field = ComplexTrace { values, dt, t0: 0.0 };

    let clean_det = DetectionSpec::default();
    let clean = detect_averaged(&field, &clean_det).unwrap();
    let recovered = demodulate(&clean, &clean_det, sigma).unwrap();
    let round_trip = rel_l2(&recovered.values, &field.values);

    let noise_rms = |det: &DetectionSpec| -> f64 {
        let noisy = detect_averaged(&field, det).unwrap();
        let acc: f64 = noisy
            .values
            .iter()
            .zip(&clean.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (acc / noisy.len() as f64).sqrt()
    };
    let single = noise_rms(&DetectionSpec {
        noise_sigma: 0.1,
        n_sequences: 1,
        seed: 11,
        ..DetectionSpec::default()
    });
    let averaged = noise_rms(&DetectionSpec {
        noise_sigma: 0.1,
        n_sequences: 200,
        seed: 12,
        ..DetectionSpec::default()
    });
    let gain = single / averaged;
    let expected_gain = 200.0f64.sqrt();
    let ok = round_trip < 1e-3 && (gain - expected_gain).abs() <= 0.2 * expected_gain;
    check(
        "detection chain",
        ok,
        &format!(
            "round trip {round_trip:.2e}, averaging gain {gain:.2} vs sqrt(200) = {expected_gain:.2}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 9. Determinism and golden snapshots
// ---------------------------------------------------------------------------

const RUN_CONFIG: &str = r#"
[protocol]
kind = "gem_eit"

[params]
od = 80.0
gamma_mhz = 5.75
length_mm = 10.0
gradient_mhz_per_mm = 0.2
delta_mhz = 30.0
omega_c_mhz = 6.9
omega0_mhz = 0.0
gamma_gh_khz = 0.0

[grid]
nz = 64
duration_us = 18.0
dt_ns = 2.0

[density]
kind = "flat"

[pulse]
kind = "gaussian"
sigma_us = 1.0
center_us = 3.0
detuning_mhz = 0.2
amplitude = 1.0
phase = 0.0

[schedule]
t1_us = 6.0
read_us = 8.0

[detection]
lo_mhz = 5.0
noise_sigma = 0.05
n_sequences = 20
seed = 42
"#;

fn run_cli(config: &Path, out_dir: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_qmemsim"))
        .args([
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--quiet",
        ])
        .status()
        .unwrap();
    assert!(status.success(), "run exited with {status}");
}

fn golden_runs() -> Vec<(&'static str, ComplexTrace, BTreeMap<String, f64>)> {
    let dt = 2e-9;
    let mut out = Vec::new();
    for (name, kind, od) in [
        ("gem_only", ProtocolKind::GemOnly, 80.0),
        ("gem_eit", ProtocolKind::GemWriteEitRead, 80.0),
        ("eit_gem", ProtocolKind::EitWriteGemRead, 150.0),
        ("eit_only", ProtocolKind::EitOnly, 150.0),
    ] {
        let p = ParamsInConfigUnits {
            od,
            ..ParamsInConfigUnits::default()
        }
        .convert()
        .unwrap();
        let grid = make_grid(&p, 48, 8e-6, dt).unwrap();
        let density = flat_density(&grid);
        let input = synthesize_input(&gaussian(0.5, 1.5, 0.1), &grid).unwrap().trace;
        let mut settings = SequenceSettings::defaults(kind, &p);
        settings.t1 = match kind {
            ProtocolKind::EitWriteGemRead => 1e-6,
            ProtocolKind::EitOnly => 2e-6,
            _ => 3e-6,
        };
        settings.read_duration = 4e-6;
        settings.settle = 0.6e-6;
        let result = run_protocol(&settings, &input, &grid, &density, &p).unwrap();
        out.push((name, result.exit_trace, result.metrics));
    }
    out
}

#[test]
fn deterministic_outputs_and_golden_snapshots() {
    // identical config + seed twice through the binary: byte-identical CSVs
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(&config, RUN_CONFIG).unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    run_cli(&config, &dir_a);
    run_cli(&config, &dir_b);
    let mut compared = 0usize;
    let mut identical = true;
    for entry in std::fs::read_dir(&dir_a).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue; // the manifest carries a wall-clock timestamp
        }
        let other = dir_b.join(path.file_name().unwrap());
        identical &= std::fs::read(&path).unwrap() == std::fs::read(&other).unwrap();
        compared += 1;
    }

    // golden snapshots: one small run of each protocol
    let golden_root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let bless = std::env::var("QMEMSIM_BLESS").is_ok();
    let mut golden_ok = true;
    let mut mismatches = Vec::new();
    for (name, exit, metrics) in golden_runs() {
        let dir = golden_root.join(name);
        std::fs::create_dir_all(&dir).unwrap();
        let scratch = tmp.path().join(format!("{name}_exit.csv"));
        qmemsim::output::write_trace_csv(&scratch, &exit).unwrap();
        let mut metrics_text = String::from("metric,value\n");
        for (k, v) in &metrics {
            metrics_text.push_str(&format!("{k},{v:.16e}\n"));
        }
        for (file, bytes) in [
            ("exit.csv", std::fs::read(&scratch).unwrap()),
            ("metrics.csv", metrics_text.into_bytes()),
        ] {
            let golden_path = dir.join(file);
            if bless {
                std::fs::write(&golden_path, &bytes).unwrap();
            } else {
                let stored = std::fs::read(&golden_path).unwrap_or_default();
                if stored != bytes {
                    golden_ok = false;
                    mismatches.push(format!("{name}/{file}"));
                }
            }
        }
    }

    let ok = identical && compared >= 5 && (bless || golden_ok);
    check(
        "determinism and golden snapshots",
        ok,
        &format!(
            "{compared} CSVs byte-identical: {identical}; golden mismatches: [{}]",
            mismatches.join(", ")
        ),
    );
}
