//! Experiment orchestration: phase scans with sinusoid fits, correlation
//! tables, and asymptotic rate curves.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::bell::{bell_probabilities, phase_for, port_probabilities, port_to_bell, BellState, BsmOutcome, DetectorPort};
use crate::error::{QkdError, Result};
use crate::noise::{depolarize, detect, ChannelParams, DetectorParams};
use crate::protocol::secret_fraction;
use crate::quantum::{bb84_vector, Bb84State, DensityMatrix};

/// Least-squares fit of P(phi) = offset + amplitude * cos(phi - phase).
#[derive(Debug, Clone, Serialize)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset_se: f64,
    pub amplitude_se: f64,
    /// amplitude / offset; `None` when the fit is degenerate (flat curve).
    pub visibility: Option<f64>,
}

/// Fits a + b cos(phi - c) by linear least squares on the regressors
/// 1, cos(phi), sin(phi).
pub fn sinusoid_fit(points: &[(f64, f64)]) -> Result<SinusoidFit> {
    if points.len() < 4 {
        return Err(QkdError::invalid("fit.points", "need at least 4 points"));
    }
    let m = points.len();
    let design = DMatrix::<f64>::from_fn(m, 3, |i, j| match j {
        0 => 1.0,
        1 => points[i].0.cos(),
        _ => points[i].0.sin(),
    });
    let y = DVector::<f64>::from_fn(m, |i, _| points[i].1);
    let gram = design.transpose() * &design;
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| QkdError::invalid("fit.grid", "singular design matrix"))?;
    let coef = &gram_inv * design.transpose() * &y;
    let (a, b_cos, b_sin) = (coef[0], coef[1], coef[2]);
    let amplitude = (b_cos * b_cos + b_sin * b_sin).sqrt();
    let phase = b_sin.atan2(b_cos);

    let residuals = &design * &coef - &y;
    let dof = (m - 3) as f64;
    let sigma2 = residuals.norm_squared() / dof;
    let offset_se = (sigma2 * gram_inv[(0, 0)]).sqrt();
    let amplitude_se = if amplitude > 0.0 {
        let var = (b_cos * b_cos * gram_inv[(1, 1)]
            + b_sin * b_sin * gram_inv[(2, 2)]
            + 2.0 * b_cos * b_sin * gram_inv[(1, 2)])
            * sigma2
            / (amplitude * amplitude);
        var.max(0.0).sqrt()
    } else {
        (sigma2 * gram_inv[(1, 1)].max(gram_inv[(2, 2)])).sqrt()
    };

    // a flat curve has no meaningful visibility
    let visibility = if a > 0.0 && amplitude > 3.0 * amplitude_se + 1e-9 {
        Some(amplitude / a)
    } else {
        None
    };

    Ok(SinusoidFit { offset: a, amplitude, phase, offset_se, amplitude_se, visibility })
}

#[derive(Debug, Clone, Serialize)]
pub struct PhasePoint {
    pub phi: f64,
    /// Normalized Bell-outcome frequencies at this phase (per-phi
    /// normalization over the four Bell outcomes).
    pub probs: [f64; 4],
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseScanResult {
    pub alice: Bb84State,
    pub points: Vec<PhasePoint>,
    /// One fit per Bell outcome, indexed by `BellState::ALL`.
    pub fits: Vec<SinusoidFit>,
}

/// Normalized Bell-outcome distribution at a single (alice, phi) setting
/// under the given noise, analytically.
fn analytic_bell_distribution(
    alice: Bb84State,
    phi: f64,
    channel: &ChannelParams,
) -> Result<[f64; 4]> {
    let rho = depolarize(
        &DensityMatrix::pure(&bb84_vector(alice)),
        channel.depolarization,
    )?;
    let ports = port_probabilities(&rho, phi + channel.phase_misalignment)?;
    let mut bells = [0.0; 4];
    for port in DetectorPort::ALL {
        let bell = port_to_bell(port);
        let k = BellState::ALL.iter().position(|&b| b == bell).unwrap();
        bells[k] += ports[port.index()];
    }
    let total: f64 = bells.iter().sum();
    for b in &mut bells {
        *b /= total;
    }
    Ok(bells)
}

/// Monte-Carlo Bell-outcome frequencies at one setting: `n` detection gates,
/// normalized over the announced Bell outcomes.
fn sampled_bell_distribution<R: Rng + ?Sized>(
    alice: Bb84State,
    phi: f64,
    n: u64,
    channel: &ChannelParams,
    det: &DetectorParams,
    rng: &mut R,
) -> Result<[f64; 4]> {
    let rho = depolarize(
        &DensityMatrix::pure(&bb84_vector(alice)),
        channel.depolarization,
    )?;
    let ports = port_probabilities(&rho, phi + channel.phase_misalignment)?;
    let mut counts = [0u64; 4];
    for _ in 0..n {
        let lost = rng.random::<f64>() >= channel.transmittance;
        let outcome = if lost {
            detect(&[0.0; 4], det, rng)
        } else {
            detect(&ports, det, rng)
        };
        if let Some(bell) = outcome.bell() {
            counts[BellState::ALL.iter().position(|&b| b == bell).unwrap()] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(QkdError::invalid("phase_scan", "no announced outcomes at a grid point"));
    }
    let mut freqs = [0.0; 4];
    for (f, &c) in freqs.iter_mut().zip(&counts) {
        *f = c as f64 / total as f64;
    }
    Ok(freqs)
}

/// Scans Bob's phase for a fixed Alice state and fits the Bell-outcome
/// curves. `n_per_point = 0` uses exact analytic probabilities.
pub fn phase_scan(
    alice: Bb84State,
    phis: &[f64],
    n_per_point: u64,
    channel: &ChannelParams,
    det: &DetectorParams,
    seed: u64,
) -> Result<PhaseScanResult> {
    if phis.len() < 8 {
        return Err(QkdError::invalid("phase_scan.grid", "need at least 8 phase points"));
    }
    channel.validate()?;
    det.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(phis.len());
    for &phi in phis {
        let probs = if n_per_point == 0 {
            analytic_bell_distribution(alice, phi, channel)?
        } else {
            sampled_bell_distribution(alice, phi, n_per_point, channel, det, &mut rng)?
        };
        points.push(PhasePoint { phi, probs });
    }
    let fits = (0..4)
        .map(|k| {
            sinusoid_fit(
                &points
                    .iter()
                    .map(|p| (p.phi, p.probs[k]))
                    .collect::<Vec<_>>(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseScanResult { alice, points, fits })
}

/// Uniform grid of `n` phases over [0, 2 pi).
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64)
        .collect()
}

/// One 4x4 probability table per Bell outcome: P(outcome | alice row,
/// bob column), normalized per (alice, bob) cell over the Bell outcomes.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationTable {
    /// tables[bell][alice][bob], indexed by `BellState::ALL` and
    /// `Bb84State::ALL`.
    pub tables: [[[f64; 4]; 4]; 4],
    pub n_per_cell: u64,
    pub normalization: &'static str,
}

/// Estimates the correlation tables. `n_per_cell = 0` computes them
/// analytically.
pub fn correlation_table(
    n_per_cell: u64,
    channel: &ChannelParams,
    det: &DetectorParams,
    seed: u64,
) -> Result<CorrelationTable> {
    channel.validate()?;
    det.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut tables = [[[0.0; 4]; 4]; 4];
    for (ai, &alice) in Bb84State::ALL.iter().enumerate() {
        for (bi, &bob) in Bb84State::ALL.iter().enumerate() {
            let probs = if n_per_cell == 0 {
                if channel.depolarization == 0.0 && channel.phase_misalignment == 0.0 {
                    bell_probabilities(alice, phase_for(bob))
                } else {
                    analytic_bell_distribution(alice, phase_for(bob), channel)?
                }
            } else {
                sampled_bell_distribution(
                    alice,
                    phase_for(bob),
                    n_per_cell,
                    channel,
                    det,
                    &mut rng,
                )?
            };
            for (k, &p) in probs.iter().enumerate() {
                tables[k][ai][bi] = p;
            }
        }
    }
    Ok(CorrelationTable {
        tables,
        n_per_cell,
        normalization: "per (alice, bob) cell over the four Bell outcomes",
    })
}

/// One point of the asymptotic rate comparison.
#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub loss_db: f64,
    pub transmittance: f64,
    pub rate_ddi: f64,
    pub rate_mdi: f64,
}

/// Asymptotic toy rate models. ddiQKD detects one photon, so its rate is
/// linear in the detector efficiency; mdiQKD needs a coincidence and an at
/// most 50% efficient two-photon BSM, so it scales with the square.
pub fn rate_curves(
    mu: f64,
    eta_det: f64,
    loss_grid_db: &[f64],
    clock_hz: f64,
    qber: f64,
) -> Result<Vec<RatePoint>> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(QkdError::invalid("rates.mu", "must be > 0"));
    }
    if !(0.0..=1.0).contains(&eta_det) {
        return Err(QkdError::invalid("rates.eta_det", "must be in [0, 1]"));
    }
    if clock_hz.is_nan() || clock_hz <= 0.0 {
        return Err(QkdError::invalid("rates.clock_hz", "must be > 0"));
    }
    let fraction = secret_fraction(qber)?;
    let p1 = mu * (-mu).exp();
    Ok(loss_grid_db
        .iter()
        .map(|&loss_db| {
            let t = 10f64.powf(-loss_db / 10.0);
            RatePoint {
                loss_db,
                transmittance: t,
                rate_ddi: clock_hz * t * eta_det * p1 * fraction,
                // each photon sees half the channel: sqrt(t) per photon
                rate_mdi: clock_hz
                    * 0.5
                    * (t.sqrt() * eta_det * p1).powi(2)
                    * fraction,
            }
        })
        .collect())
}

/// Log-log slope of a rate model in eta_det at fixed loss, by central
/// finite differences. Used to audit the scaling claim.
pub fn rate_eta_loglog_slope(model: impl Fn(f64) -> f64, eta: f64) -> f64 {
    let h = 1e-4;
    let (lo, hi) = (eta * (1.0 - h), eta * (1.0 + h));
    (model(hi).ln() - model(lo).ln()) / (hi.ln() - lo.ln())
}

/// Keeps BsmOutcome in the public surface of this module for callers that
/// inspect scan outcomes.
pub type ScanOutcome = BsmOutcome;
