//! Acceptance gate: one test per criterion, each printing a pass/fail line.
//!
//! Criterion 7 is expected to stay red: its stated QBER target of 25% under
//! the constant-remap detector-control adversary contradicts the protocol's
//! own decoding rule. With every announced outcome forced to a single Bell
//! state, Bob's decoded bit is a deterministic function of his own state
//! choice and is therefore independent of Alice's uniformly random bit, so
//! the sifted error rate is 50%, not 25%. The secrecy half of the criterion
//! (uniform conditional bit distribution, negligible mutual information)
//! holds and is asserted; the 25% figure is asserted as written and fails
//! honestly.

use std::process::Command;
use std::time::Instant;

use ddiqkd_core::analysis::{phase_grid, phase_scan, rate_curves, rate_eta_loglog_slope};
use ddiqkd_core::bell::{bell_probabilities, decoded_bit, phase_for, BellState, BsmOutcome};
use ddiqkd_core::fock::{click_pattern_distribution, fixed_state_audit, polarized_sector_input, FockDensity};
use ddiqkd_core::noise::{ChannelParams, DetectorParams, SourceParams};
use ddiqkd_core::protocol::{
    analytic_bit_given_outcome, mutual_information_bits, run_session, secret_fraction,
    AdversaryModel, RemapTable,
};
use ddiqkd_core::quantum::{bb84_vector, Basis, Bb84State};

const BIN: &str = env!("CARGO_BIN_EXE_ddiqkd");

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {id:>2} {name}: {verdict} ({detail})");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

/// Theoretical Table pattern from the decoding rule: crossed bases are flat
/// at 1/4; matched bases put 1/2 on each Bell state whose decoded bit equals
/// Alice's bit and 0 elsewhere.
fn expected_cell(alice: Bb84State, bob: Bb84State) -> [f64; 4] {
    let mut out = [0.25; 4];
    if alice.basis() == bob.basis() {
        for (k, bell) in BellState::ALL.iter().enumerate() {
            out[k] = if decoded_bit(bob, *bell) == alice.bit() { 0.5 } else { 0.0 };
        }
    }
    out
}

#[test]
fn criterion_01_analytic_table_pattern() {
    let start = Instant::now();
    let mut max_dev: f64 = 0.0;
    for alice in Bb84State::ALL {
        for bob in Bb84State::ALL {
            let got = bell_probabilities(alice, phase_for(bob));
            let want = expected_cell(alice, bob);
            for k in 0..4 {
                max_dev = max_dev.max((got[k] - want[k]).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        "analytic table pattern",
        max_dev < 1e-12 && elapsed.as_secs_f64() < 1.0,
        &format!("max abs dev {max_dev:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_monte_carlo_table() {
    let start = Instant::now();
    let dir = std::env::temp_dir().join(format!("ddiqkd_acc2_{}", std::process::id()));
    let n = 10_000u64;
    let status = Command::new(BIN)
        .args([
            "table",
            "--ideal",
            "--n-per-cell",
            &n.to_string(),
            "--seed",
            "12",
            "--out",
        ])
        .arg(&dir)
        .status()
        .expect("run table subcommand");
    assert!(status.success());

    let order = Bb84State::ALL;
    let mut worst_sigmas: f64 = 0.0;
    for (k, bell) in BellState::ALL.iter().enumerate() {
        let path = dir.join(format!("table_{}.csv", bell.label()));
        let mut rdr = csv::Reader::from_path(&path).expect("read table csv");
        for (ai, row) in rdr.records().enumerate() {
            let row = row.unwrap();
            for bi in 0..4 {
                let got: f64 = row[bi + 1].parse().unwrap();
                let want = expected_cell(order[ai], order[bi])[k];
                let sigma = (want * (1.0 - want) / n as f64).sqrt().max(1e-9);
                worst_sigmas = worst_sigmas.max((got - want).abs() / sigma);
            }
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    let elapsed = start.elapsed();
    report(
        2,
        "Monte-Carlo table within 4 sigma",
        worst_sigmas <= 4.0 && elapsed.as_secs_f64() < 10.0,
        &format!("worst cell {worst_sigmas:.2} sigma, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_03_qber_calibration() {
    let channel = ChannelParams { depolarization: 0.03, ..ChannelParams::ideal() };
    let (stats, _) = run_session(
        1_000_000,
        &SourceParams::SinglePhoton,
        &channel,
        &DetectorParams::ideal(),
        &AdversaryModel::None,
        101,
        false,
    )
    .unwrap();
    let q = stats.qber_total;
    report(
        3,
        "QBER calibration 1.5% +- 0.1%",
        (q - 0.015).abs() <= 0.001,
        &format!("QBER {q:.5}"),
    );
}

#[test]
fn criterion_04_visibility() {
    let det = DetectorParams::ideal();
    let ideal = phase_scan(
        Bb84State::Plus,
        &phase_grid(24),
        0,
        &ChannelParams::ideal(),
        &det,
        1,
    )
    .unwrap();
    let ideal_ok = ideal
        .fits
        .iter()
        .all(|f| f.visibility.map(|v| (v - 1.0).abs() <= 0.005).unwrap_or(false));
    let ideal_v = ideal.fits[0].visibility.unwrap_or(f64::NAN);

    // calibrated noise: the depolarization that reproduces the observed QBER
    let noisy_channel = ChannelParams { depolarization: 0.03, ..ChannelParams::ideal() };
    let noisy = phase_scan(Bb84State::Plus, &phase_grid(24), 20_000, &noisy_channel, &det, 2)
        .unwrap();
    let vs: Vec<f64> = noisy.fits.iter().filter_map(|f| f.visibility).collect();
    let mean_v = vs.iter().sum::<f64>() / vs.len() as f64;
    report(
        4,
        "phase-scan visibility",
        ideal_ok && vs.len() == 4 && (0.94..=1.0).contains(&mean_v),
        &format!("ideal V {ideal_v:.4}, calibrated mean V {mean_v:.4}"),
    );
}

#[test]
fn criterion_05_security_audit() {
    let start = Instant::now();
    let audit = fixed_state_audit(&[1, 2, 3, 4], 50, 4, 7).unwrap();
    let elapsed = start.elapsed();
    let low_ok = audit
        .sectors
        .iter()
        .filter(|s| s.sector <= 3)
        .all(|s| s.max_trace_distance < 1e-10 && s.family_size == 50);
    let max_low_td = audit
        .sectors
        .iter()
        .filter(|s| s.sector <= 3)
        .map(|s| s.max_trace_distance)
        .fold(0.0f64, f64::max);
    let four = audit.sectors.iter().find(|s| s.sector == 4).unwrap();
    let four_ok = four.surviving_deltas == vec![4] && four.coherence_by_delta[&4] > 0.01;
    report(
        5,
        "fixed-state security audit",
        low_ok && four_ok && elapsed.as_secs_f64() < 30.0,
        &format!(
            "N<=3 max TD {max_low_td:.2e}, N=4 delta-4 coherence {:.4}, {elapsed:.2?}",
            four.coherence_by_delta[&4]
        ),
    );
}

#[test]
fn criterion_06_double_clicks() {
    let ideal = DetectorParams::ideal();
    let plus = bb84_vector(Bb84State::Plus);
    let one = click_pattern_distribution(
        &polarized_sector_input(&plus, 1).unwrap(),
        std::f64::consts::FRAC_PI_2,
        &ideal,
    )
    .unwrap();
    let two = click_pattern_distribution(
        &polarized_sector_input(&plus, 2).unwrap(),
        std::f64::consts::FRAC_PI_2,
        &ideal,
    )
    .unwrap();
    let dark = click_pattern_distribution(
        &FockDensity::vacuum(),
        0.0,
        &DetectorParams { efficiency: 0.25, dark_count: 1e-6 },
    )
    .unwrap();
    report(
        6,
        "double-click behavior",
        one.double_click == 0.0 && two.double_click > 0.0 && dark.double_click < 1e-6,
        &format!(
            "P(double): N=1 {:.1e}, N=2 {:.3}, dark-only {:.1e}",
            one.double_click, two.double_click, dark.double_click
        ),
    );
}

#[test]
fn criterion_07_detector_control_secrecy() {
    let uniform = Basis::X;
    let mut max_dev: f64 = 0.0;
    for basis in [uniform, Basis::Y] {
        for outcome in BsmOutcome::ALL {
            if let Some(p0) = analytic_bit_given_outcome(basis, outcome) {
                max_dev = max_dev.max((p0 - 0.5).abs());
            }
        }
    }

    let adversary = AdversaryModel::DetectorControl {
        remap: RemapTable::constant(BsmOutcome::PhiPlus),
    };
    let (stats, _) = run_session(
        1_000_000,
        &SourceParams::SinglePhoton,
        &ChannelParams::ideal(),
        &DetectorParams::ideal(),
        &adversary,
        303,
        false,
    )
    .unwrap();
    let mi = mutual_information_bits(&stats.joint_counts);
    let q = stats.qber_total;
    // NOTE: the 25% target below is not reachable; the constant remap makes
    // Bob's decode independent of Alice's bit, which pins the QBER at 50%.
    // Kept as written so the defect stays visible; see the module docs.
    report(
        7,
        "detector-control secrecy",
        max_dev < 1e-12 && mi <= 1e-3 && (q - 0.25).abs() <= 0.005,
        &format!("max |P(bit|outcome)-1/2| {max_dev:.1e}, MI {mi:.2e} bits, QBER {q:.4}"),
    );
}

#[test]
fn criterion_08_intercept_resend() {
    let (stats, _) = run_session(
        1_000_000,
        &SourceParams::SinglePhoton,
        &ChannelParams::ideal(),
        &DetectorParams::ideal(),
        &AdversaryModel::InterceptResend { probability: 1.0 },
        404,
        false,
    )
    .unwrap();
    let q = stats.qber_total;
    report(
        8,
        "intercept-resend QBER 25% +- 0.5%",
        (q - 0.25).abs() <= 0.005,
        &format!("QBER {q:.5}"),
    );
}

#[test]
fn criterion_09_rate_scaling() {
    let grid = [20.0];
    let ddi = |eta: f64| rate_curves(0.5, eta, &grid, 1.0, 0.015).unwrap()[0].rate_ddi;
    let mdi = |eta: f64| rate_curves(0.5, eta, &grid, 1.0, 0.015).unwrap()[0].rate_mdi;
    let s1 = rate_eta_loglog_slope(ddi, 0.25);
    let s2 = rate_eta_loglog_slope(mdi, 0.25);
    report(
        9,
        "rate scaling slopes",
        (s1 - 1.0).abs() < 1e-6 && (s2 - 2.0).abs() < 1e-6,
        &format!("ddi slope {s1:.8}, mdi slope {s2:.8}"),
    );
}

#[test]
fn criterion_10_secret_fraction_root() {
    let at_zero = secret_fraction(0.0).unwrap();
    // bisect the positive part of 1 - 2h(q) down to its root
    let f = |q: f64| 1.0 - 2.0 * ddiqkd_core::protocol::binary_entropy(q);
    let (mut lo, mut hi) = (0.05, 0.3);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    report(
        10,
        "secret fraction endpoints and root",
        at_zero == 1.0 && (root - 0.110).abs() <= 0.0005,
        &format!("f(0) = {at_zero}, root at Q = {root:.5}"),
    );
}
