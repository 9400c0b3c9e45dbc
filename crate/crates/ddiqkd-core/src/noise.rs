//! Stochastic models of the quantum channel and measurement imperfections.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{port_to_bell, BsmOutcome, DetectorPort};
use crate::error::{QkdError, Result};
use crate::quantum::DensityMatrix;

/// Channel between Alice's source and Bob's encoder.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Probability the photon survives the channel.
    pub transmittance: f64,
    /// Depolarization probability: rho -> (1-p) rho + p I/2.
    pub depolarization: f64,
    /// Additive phase error in Bob's interferometer (radians).
    pub phase_misalignment: f64,
}

impl ChannelParams {
    pub fn ideal() -> Self {
        Self { transmittance: 1.0, depolarization: 0.0, phase_misalignment: 0.0 }
    }

    /// Derives the transmittance from fiber loss: t = 10^(-loss*length/10).
    pub fn from_fiber(
        loss_db_per_km: f64,
        length_km: f64,
        depolarization: f64,
        phase_misalignment: f64,
    ) -> Result<Self> {
        if loss_db_per_km < 0.0 {
            return Err(QkdError::invalid("channel.loss_db_per_km", "must be >= 0"));
        }
        if length_km < 0.0 {
            return Err(QkdError::invalid("channel.length_km", "must be >= 0"));
        }
        let params = Self {
            transmittance: 10f64.powf(-loss_db_per_km * length_km / 10.0),
            depolarization,
            phase_misalignment,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.transmittance > 0.0 && self.transmittance <= 1.0) {
            return Err(QkdError::invalid("channel.transmittance", "must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.depolarization) {
            return Err(QkdError::invalid("channel.depolarization", "must be in [0, 1]"));
        }
        if !self.phase_misalignment.is_finite() {
            return Err(QkdError::invalid("channel.phase_misalignment", "must be finite"));
        }
        Ok(())
    }
}

/// Threshold single-photon detector model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectorParams {
    pub efficiency: f64,
    /// Dark-count probability per port per gate.
    pub dark_count: f64,
}

impl DetectorParams {
    pub fn ideal() -> Self {
        Self { efficiency: 1.0, dark_count: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(QkdError::invalid("detector.efficiency", "must be in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.dark_count) {
            return Err(QkdError::invalid("detector.dark_count", "must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Photon source model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceParams {
    SinglePhoton,
    /// Phase-randomized weak coherent state with mean photon number mu.
    Wcs { mu: f64 },
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if let SourceParams::Wcs { mu } = self {
            if mu.is_nan() || *mu <= 0.0 {
                return Err(QkdError::invalid("source.mu", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Transmits a polarization state: lost with probability 1-t, otherwise
/// depolarized.
pub fn apply_channel<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<Option<DensityMatrix>> {
    params.validate()?;
    if rho.dim() != 2 {
        return Err(QkdError::DimensionMismatch { expected: 2, got: rho.dim() });
    }
    if rng.random::<f64>() >= params.transmittance {
        return Ok(None);
    }
    Ok(Some(depolarize(rho, params.depolarization)?))
}

/// rho -> (1-p) rho + p I/2
pub fn depolarize(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    DensityMatrix::mixture(&[
        (1.0 - p, rho.clone()),
        (p, DensityMatrix::maximally_mixed(rho.dim())),
    ])
}

/// Classifies the click pattern of one detection gate. The photon (if any)
/// registers at its port with probability eta; every port independently
/// dark-fires with probability p_dc.
pub fn detect<R: Rng + ?Sized>(
    port_probs: &[f64; 4],
    det: &DetectorParams,
    rng: &mut R,
) -> BsmOutcome {
    let mut clicks = [false; 4];

    // where (and whether) the photon lands
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (port, &p) in port_probs.iter().enumerate() {
        acc += p;
        if u < acc {
            if rng.random::<f64>() < det.efficiency {
                clicks[port] = true;
            }
            break;
        }
    }

    if det.dark_count > 0.0 {
        for click in clicks.iter_mut() {
            if rng.random::<f64>() < det.dark_count {
                *click = true;
            }
        }
    }

    match clicks.iter().filter(|&&x| x).count() {
        0 => BsmOutcome::NoClick,
        1 => {
            let port = clicks.iter().position(|&x| x).unwrap();
            port_to_bell(DetectorPort::from_index(port)).into()
        }
        _ => BsmOutcome::DoubleClick,
    }
}

/// Poissonian photon-number weights P_n = e^{-mu} mu^n / n! for n = 0..n_max,
/// with a final tail-mass entry so the list sums to 1.
pub fn poisson_sector_weights(mu: f64, n_max: usize) -> Result<Vec<f64>> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(QkdError::invalid("source.mu", "must be > 0"));
    }
    let mut weights = Vec::with_capacity(n_max + 2);
    let mut term = (-mu).exp();
    let mut sum = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            term *= mu / n as f64;
        }
        weights.push(term);
        sum += term;
    }
    weights.push((1.0 - sum).max(0.0));
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use crate::quantum::{bb84_vector, trace_distance, Bb84State, DensityMatrix};

    #[test]
    fn fiber_loss_converts_to_transmittance() {
        let p = ChannelParams::from_fiber(0.2, 50.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(p.transmittance, 0.1, epsilon = 1e-12);
        assert!(ChannelParams::from_fiber(-0.1, 10.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn validation_names_the_offending_field() {
        let bad = ChannelParams { transmittance: 0.0, depolarization: 0.0, phase_misalignment: 0.0 };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("transmittance"), "{msg}");
        let bad_det = DetectorParams { efficiency: 1.5, dark_count: 0.0 };
        assert!(bad_det.validate().unwrap_err().to_string().contains("efficiency"));
        assert!(SourceParams::Wcs { mu: 0.0 }.validate().is_err());
    }

    #[test]
    fn depolarization_limits() {
        let rho = DensityMatrix::pure(&bb84_vector(Bb84State::PlusI));
        let same = depolarize(&rho, 0.0).unwrap();
        assert_abs_diff_eq!(trace_distance(&rho, &same).unwrap(), 0.0, epsilon = 1e-12);
        let mixed = depolarize(&rho, 1.0).unwrap();
        assert_abs_diff_eq!(
            trace_distance(&mixed, &DensityMatrix::maximally_mixed(2)).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn channel_loss_statistics() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let rho = DensityMatrix::pure(&bb84_vector(Bb84State::Plus));
        let params = ChannelParams { transmittance: 0.3, depolarization: 0.0, phase_misalignment: 0.0 };
        let n = 20_000;
        let survived = (0..n)
            .filter(|_| apply_channel(&rho, &params, &mut rng).unwrap().is_some())
            .count();
        let rate = survived as f64 / n as f64;
        assert!((rate - 0.3).abs() < 0.02, "survival rate {rate}");
    }

    #[test]
    fn ideal_detection_reports_the_landed_port() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let det = DetectorParams::ideal();
        // all mass on port 0 (H1 -> PsiPlus)
        assert_eq!(detect(&[1.0, 0.0, 0.0, 0.0], &det, &mut rng), BsmOutcome::PsiPlus);
        assert_eq!(detect(&[0.0, 0.0, 1.0, 0.0], &det, &mut rng), BsmOutcome::PhiPlus);
        // a lost photon with no dark counts never clicks
        assert_eq!(detect(&[0.0; 4], &det, &mut rng), BsmOutcome::NoClick);
    }

    #[test]
    fn inefficiency_and_dark_counts_shift_outcomes() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let det = DetectorParams { efficiency: 0.5, dark_count: 0.0 };
        let n = 20_000;
        let clicks = (0..n)
            .filter(|_| detect(&[1.0, 0.0, 0.0, 0.0], &det, &mut rng) != BsmOutcome::NoClick)
            .count();
        let rate = clicks as f64 / n as f64;
        assert!((rate - 0.5).abs() < 0.02, "click rate {rate}");

        let dark = DetectorParams { efficiency: 1.0, dark_count: 0.4 };
        let doubles = (0..n)
            .filter(|_| detect(&[1.0, 0.0, 0.0, 0.0], &dark, &mut rng) == BsmOutcome::DoubleClick)
            .count();
        assert!(doubles > 0);
    }

    #[test]
    fn poisson_weights_sum_to_one_with_correct_single_photon_mass() {
        let mu = 0.5;
        let w = poisson_sector_weights(mu, 4).unwrap();
        assert_eq!(w.len(), 6);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], mu * (-mu).exp(), epsilon = 1e-12);
        assert!(poisson_sector_weights(0.0, 4).is_err());
    }
}
