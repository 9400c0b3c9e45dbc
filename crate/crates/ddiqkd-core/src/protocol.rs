//! End-to-end Monte-Carlo execution of the ddiQKD protocol: state
//! preparation, transmission, BSM, classical announcements, sifting and key
//! accounting, plus adversary models.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{decode_bit, phase_for, port_probabilities, BsmOutcome};
use crate::error::{QkdError, Result};
use crate::fock::{click_pattern_distribution, polarized_sector_input, ClickDistribution, DEFAULT_N_MAX};
use crate::noise::{depolarize, detect, poisson_sector_weights, ChannelParams, DetectorParams, SourceParams};
use crate::quantum::{bb84_vector, Basis, Bb84State, DensityMatrix, StateVector};

/// Fixed per-session relabeling of announced outcomes, modeling an adversary
/// who controls the detectors' response functions. Acts only on the
/// announced `BsmOutcome`, never on bases or bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemapTable([BsmOutcome; 6]);

impl RemapTable {
    pub fn identity() -> Self {
        Self(BsmOutcome::ALL)
    }

    pub fn constant(target: BsmOutcome) -> Self {
        let mut table = BsmOutcome::ALL;
        for (i, slot) in table.iter_mut().enumerate() {
            // clicks are remapped; the absence of a click cannot be forged
            if BsmOutcome::ALL[i] != BsmOutcome::NoClick {
                *slot = target;
            }
        }
        Self(table)
    }

    /// Swaps PhiPlus <-> PsiPlus and PhiMinus <-> PsiMinus.
    pub fn swap_phi_psi() -> Self {
        let mut table = BsmOutcome::ALL;
        table[BsmOutcome::PhiPlus.index()] = BsmOutcome::PsiPlus;
        table[BsmOutcome::PsiPlus.index()] = BsmOutcome::PhiPlus;
        table[BsmOutcome::PhiMinus.index()] = BsmOutcome::PsiMinus;
        table[BsmOutcome::PsiMinus.index()] = BsmOutcome::PhiMinus;
        Self(table)
    }

    pub fn apply(&self, outcome: BsmOutcome) -> BsmOutcome {
        self.0[outcome.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryModel {
    None,
    /// Eve measures Alice's polarization qubit in a random BB84 basis and
    /// forwards the eigenstate.
    InterceptResend { probability: f64 },
    DetectorControl { remap: RemapTable },
}

impl AdversaryModel {
    pub fn validate(&self) -> Result<()> {
        if let AdversaryModel::InterceptResend { probability } = self {
            if !(0.0..=1.0).contains(probability) {
                return Err(QkdError::invalid(
                    "adversary.probability",
                    "must be in [0, 1]",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: u64,
    pub alice_state: Bb84State,
    pub bob_state: Bb84State,
    pub outcome: BsmOutcome,
    pub announced: bool,
    pub sifted: bool,
    pub alice_bit: Option<u8>,
    pub bob_bit: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub n_rounds: u64,
    pub n_announced: u64,
    pub n_sifted: u64,
    pub n_sifted_x: u64,
    pub n_sifted_y: u64,
    pub errors_x: u64,
    pub errors_y: u64,
    pub qber_x: f64,
    pub qber_y: f64,
    pub qber_total: f64,
    pub secret_fraction: f64,
    /// Announced-outcome counts (NoClick counts silently discarded rounds).
    pub outcome_histogram: BTreeMap<String, u64>,
    /// Sifted-round counts indexed [announced outcome][basis][alice bit];
    /// basis 0 = X, 1 = Y. Feeds the mutual-information estimate.
    pub joint_counts: [[[u64; 2]; 2]; 6],
}

/// Uniform choice among the four BB84 states.
fn random_bb84<R: Rng + ?Sized>(rng: &mut R) -> Bb84State {
    Bb84State::ALL[rng.random_range(0..4)]
}

fn eve_measure<R: Rng + ?Sized>(alice: Bb84State, basis: Basis, rng: &mut R) -> Bb84State {
    let (zero, one) = match basis {
        Basis::X => (Bb84State::Plus, Bb84State::Minus),
        Basis::Y => (Bb84State::PlusI, Bb84State::MinusI),
    };
    let p0 = bb84_vector(zero)
        .inner(&bb84_vector(alice))
        .expect("2-dim")
        .norm_sqr();
    if rng.random::<f64>() < p0 {
        zero
    } else {
        one
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum PolKey {
    Bb84(Bb84State),
    H,
    V,
}

impl PolKey {
    fn vector(self) -> StateVector {
        match self {
            PolKey::Bb84(s) => bb84_vector(s),
            PolKey::H => StateVector::basis(2, 0),
            PolKey::V => StateVector::basis(2, 1),
        }
    }
}

/// Round-level simulation machinery with memoized analytic distributions.
struct Engine {
    channel: ChannelParams,
    det: DetectorParams,
    /// Port probabilities for the depolarized single-photon mixture,
    /// keyed by (effective Alice state, Bob state index).
    mixed_port_probs: HashMap<(Bb84State, u8), [f64; 4]>,
    /// Port probabilities for a pure polarization (WCS rounds sample the
    /// depolarization instead of mixing it in).
    pure_port_probs: HashMap<(PolKey, u8), [f64; 4]>,
    /// Click distributions for multi-photon inputs, keyed by
    /// (polarization, photon number, Bob state index).
    click_dists: HashMap<(PolKey, u8, u8), ClickDistribution>,
}

impl Engine {
    fn new(channel: ChannelParams, det: DetectorParams) -> Self {
        Self {
            channel,
            det,
            mixed_port_probs: HashMap::new(),
            pure_port_probs: HashMap::new(),
            click_dists: HashMap::new(),
        }
    }

    fn bob_phase(&self, bob: Bb84State) -> f64 {
        phase_for(bob) + self.channel.phase_misalignment
    }

    fn mixed_probs(&mut self, state: Bb84State, bob: Bb84State) -> Result<[f64; 4]> {
        let key = (state, bob_index(bob));
        if let Some(p) = self.mixed_port_probs.get(&key) {
            return Ok(*p);
        }
        let rho = depolarize(
            &DensityMatrix::pure(&bb84_vector(state)),
            self.channel.depolarization,
        )?;
        let p = port_probabilities(&rho, self.bob_phase(bob))?;
        self.mixed_port_probs.insert(key, p);
        Ok(p)
    }

    fn pure_probs(&mut self, pol: PolKey, bob: Bb84State) -> Result<[f64; 4]> {
        let key = (pol, bob_index(bob));
        if let Some(p) = self.pure_port_probs.get(&key) {
            return Ok(*p);
        }
        let rho = DensityMatrix::pure(&pol.vector());
        let p = port_probabilities(&rho, self.bob_phase(bob))?;
        self.pure_port_probs.insert(key, p);
        Ok(p)
    }

    fn click_dist(&mut self, pol: PolKey, n: usize, bob: Bb84State) -> Result<ClickDistribution> {
        let key = (pol, n as u8, bob_index(bob));
        if let Some(d) = self.click_dists.get(&key) {
            return Ok(d.clone());
        }
        let input = polarized_sector_input(&pol.vector(), n)?;
        let d = click_pattern_distribution(&input, self.bob_phase(bob), &self.det)?;
        self.click_dists.insert(key, d.clone());
        Ok(d)
    }
}

fn bob_index(bob: Bb84State) -> u8 {
    Bb84State::ALL.iter().position(|&s| s == bob).unwrap() as u8
}

fn sample_click<R: Rng + ?Sized>(dist: &ClickDistribution, rng: &mut R) -> BsmOutcome {
    let mut u: f64 = rng.random::<f64>() * dist.total();
    if u < dist.no_click {
        return BsmOutcome::NoClick;
    }
    u -= dist.no_click;
    for (port, &p) in dist.single.iter().enumerate() {
        if u < p {
            return crate::bell::port_to_bell(crate::bell::DetectorPort::from_index(port)).into();
        }
        u -= p;
    }
    BsmOutcome::DoubleClick
}

/// Runs a full session: Alice picks a BB84 state uniformly, the state
/// traverses the channel (the adversary may intercept), Bob encodes a
/// uniform phase choice and performs the BSM, click/double-click rounds are
/// announced, matched-basis rounds are sifted and decoded. Deterministic
/// given the seed.
pub fn run_session(
    n_rounds: u64,
    source: &SourceParams,
    channel: &ChannelParams,
    det: &DetectorParams,
    adversary: &AdversaryModel,
    seed: u64,
    keep_records: bool,
) -> Result<(SessionStats, Option<Vec<RoundRecord>>)> {
    if n_rounds == 0 {
        return Err(QkdError::invalid("run.rounds", "must be >= 1"));
    }
    source.validate()?;
    channel.validate()?;
    det.validate()?;
    adversary.validate()?;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut engine = Engine::new(*channel, *det);
    let wcs_weights = match source {
        SourceParams::Wcs { mu } => Some(poisson_sector_weights(*mu, DEFAULT_N_MAX)?),
        SourceParams::SinglePhoton => None,
    };

    let mut records = keep_records.then(Vec::new);
    let mut histogram: BTreeMap<String, u64> = BTreeMap::new();
    let mut joint = [[[0u64; 2]; 2]; 6];
    let (mut n_announced, mut n_sifted) = (0u64, 0u64);
    let (mut n_sifted_x, mut n_sifted_y) = (0u64, 0u64);
    let (mut errors_x, mut errors_y) = (0u64, 0u64);

    for index in 0..n_rounds {
        let alice = random_bb84(&mut rng);

        let mut effective = alice;
        if let AdversaryModel::InterceptResend { probability } = adversary {
            if rng.random::<f64>() < *probability {
                let basis = if rng.random::<f64>() < 0.5 { Basis::X } else { Basis::Y };
                effective = eve_measure(alice, basis, &mut rng);
            }
        }

        let bob = random_bb84(&mut rng);

        let true_outcome = match &wcs_weights {
            None => {
                // single-photon round: loss sampled, depolarization mixed in
                let lost = rng.random::<f64>() >= channel.transmittance;
                let port_probs = if lost {
                    [0.0; 4]
                } else {
                    engine.mixed_probs(effective, bob)?
                };
                detect(&port_probs, det, &mut rng)
            }
            Some(weights) => {
                simulate_wcs_round(weights, effective, bob, channel, det, &mut engine, &mut rng)?
            }
        };

        let announced_outcome = match (adversary, true_outcome) {
            (_, BsmOutcome::NoClick) => BsmOutcome::NoClick,
            (AdversaryModel::DetectorControl { remap }, o) => remap.apply(o),
            (_, o) => o,
        };

        let announced = announced_outcome != BsmOutcome::NoClick;
        let sifted = announced && alice.basis() == bob.basis();
        *histogram
            .entry(announced_outcome.label().to_string())
            .or_insert(0) += 1;
        if announced {
            n_announced += 1;
        }

        let mut alice_bit = None;
        let mut bob_bit = None;
        if sifted {
            n_sifted += 1;
            let a = alice.bit();
            let b = decode_bit(bob, announced_outcome, &mut rng)?;
            alice_bit = Some(a);
            bob_bit = Some(b);
            let basis_idx = match alice.basis() {
                Basis::X => 0,
                Basis::Y => 1,
            };
            joint[announced_outcome.index()][basis_idx][a as usize] += 1;
            match alice.basis() {
                Basis::X => {
                    n_sifted_x += 1;
                    if a != b {
                        errors_x += 1;
                    }
                }
                Basis::Y => {
                    n_sifted_y += 1;
                    if a != b {
                        errors_y += 1;
                    }
                }
            }
        }

        if let Some(recs) = records.as_mut() {
            recs.push(RoundRecord {
                index,
                alice_state: alice,
                bob_state: bob,
                outcome: announced_outcome,
                announced,
                sifted,
                alice_bit,
                bob_bit,
            });
        }
    }

    let ratio = |e: u64, n: u64| if n == 0 { 0.0 } else { e as f64 / n as f64 };
    let qber_total = ratio(errors_x + errors_y, n_sifted);
    let stats = SessionStats {
        n_rounds,
        n_announced,
        n_sifted,
        n_sifted_x,
        n_sifted_y,
        errors_x,
        errors_y,
        qber_x: ratio(errors_x, n_sifted_x),
        qber_y: ratio(errors_y, n_sifted_y),
        qber_total,
        secret_fraction: secret_fraction(qber_total.min(0.5))?,
        outcome_histogram: histogram,
        joint_counts: joint,
    };
    Ok((stats, records))
}

/// One WCS round: sample the photon number, thin it through the channel,
/// then route by the surviving count. Sectors above the truncation are
/// assigned a pessimistic DoubleClick.
fn simulate_wcs_round<R: Rng + ?Sized>(
    weights: &[f64],
    effective: Bb84State,
    bob: Bb84State,
    channel: &ChannelParams,
    det: &DetectorParams,
    engine: &mut Engine,
    rng: &mut R,
) -> Result<BsmOutcome> {
    let mut u: f64 = rng.random();
    let mut n = weights.len() - 1; // tail entry
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            n = k;
            break;
        }
        u -= w;
    }
    if n == weights.len() - 1 {
        return Ok(BsmOutcome::DoubleClick);
    }

    let n_eff = (0..n)
        .filter(|_| rng.random::<f64>() < channel.transmittance)
        .count();

    // depolarization is sampled per round: I/2 = (|H><H| + |V><V|)/2
    let pol = if rng.random::<f64>() < channel.depolarization {
        if rng.random::<f64>() < 0.5 { PolKey::H } else { PolKey::V }
    } else {
        PolKey::Bb84(effective)
    };

    Ok(match n_eff {
        0 => detect(&[0.0; 4], det, rng),
        1 => {
            let probs = engine.pure_probs(pol, bob)?;
            detect(&probs, det, rng)
        }
        _ => {
            let dist = engine.click_dist(pol, n_eff, bob)?;
            sample_click(&dist, rng)
        }
    })
}

/// Binary entropy in bits, with h(0) = h(1) = 0 by continuity.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Asymptotic secret key fraction max(0, 1 - 2 h(Q)).
pub fn secret_fraction(q: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&q) {
        return Err(QkdError::invalid("qber", "must be in [0, 0.5]"));
    }
    Ok((1.0 - 2.0 * binary_entropy(q)).max(0.0))
}

/// Plug-in mutual information I(announced outcome, basis ; Alice bit) in
/// bits over the sifted rounds, with Miller-Madow bias correction.
pub fn mutual_information_bits(joint: &[[[u64; 2]; 2]; 6]) -> f64 {
    let total: u64 = joint
        .iter()
        .flat_map(|o| o.iter().flat_map(|b| b.iter()))
        .sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;

    let mut h_xy = 0.0;
    let mut k_xy = 0usize;
    let mut x_marg = [0.0f64; 12];
    let mut y_marg = [0.0f64; 2];
    for (o, per_outcome) in joint.iter().enumerate() {
        for (b, per_basis) in per_outcome.iter().enumerate() {
            for (bit, &count) in per_basis.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let p = count as f64 / n;
                h_xy -= p * p.log2();
                k_xy += 1;
                x_marg[2 * o + b] += p;
                y_marg[bit] += p;
            }
        }
    }
    let entropy = |probs: &[f64]| -> (f64, usize) {
        let mut h = 0.0;
        let mut k = 0;
        for &p in probs {
            if p > 0.0 {
                h -= p * p.log2();
                k += 1;
            }
        }
        (h, k)
    };
    let (h_x, k_x) = entropy(&x_marg);
    let (h_y, k_y) = entropy(&y_marg);

    let mi = h_x + h_y - h_xy;
    let bias = (k_xy as f64 - k_x as f64 - k_y as f64 + 1.0) / (2.0 * n * std::f64::consts::LN_2);
    mi + bias
}

/// Exact P(Alice bit = 0 | announced outcome, matched bases) computed from
/// the analytic Bell probabilities, for the detector-control secrecy check.
pub fn analytic_bit_given_outcome(basis: Basis, outcome: BsmOutcome) -> Option<f64> {
    let bell = outcome.bell()?;
    let states: [Bb84State; 2] = match basis {
        Basis::X => [Bb84State::Plus, Bb84State::Minus],
        Basis::Y => [Bb84State::PlusI, Bb84State::MinusI],
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for alice in states {
        for bob in states {
            let p = crate::bell::bell_probabilities(alice, phase_for(bob))
                [crate::bell::BellState::ALL.iter().position(|&b| b == bell).unwrap()];
            den += p;
            if alice.bit() == 0 {
                num += p;
            }
        }
    }
    Some(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ideal() -> (SourceParams, ChannelParams, DetectorParams) {
        (SourceParams::SinglePhoton, ChannelParams::ideal(), DetectorParams::ideal())
    }

    #[test]
    fn sessions_are_deterministic_in_the_seed() {
        let (src, ch, det) = ideal();
        let (a, _) = run_session(2_000, &src, &ch, &det, &AdversaryModel::None, 42, false).unwrap();
        let (b, _) = run_session(2_000, &src, &ch, &det, &AdversaryModel::None, 42, false).unwrap();
        let (c, _) = run_session(2_000, &src, &ch, &det, &AdversaryModel::None, 43, false).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ideal_session_is_error_free() {
        let (src, ch, det) = ideal();
        let (stats, _) = run_session(20_000, &src, &ch, &det, &AdversaryModel::None, 1, false).unwrap();
        assert_eq!(stats.n_announced, stats.n_rounds);
        assert_eq!(stats.errors_x + stats.errors_y, 0);
        assert_abs_diff_eq!(stats.qber_total, 0.0);
        assert_abs_diff_eq!(stats.secret_fraction, 1.0);
        // roughly half the rounds survive basis sifting
        let sift_rate = stats.n_sifted as f64 / stats.n_rounds as f64;
        assert!((sift_rate - 0.5).abs() < 0.02, "sift rate {sift_rate}");
    }

    #[test]
    fn depolarization_calibrates_to_half_its_strength() {
        let (src, _, det) = ideal();
        let ch = ChannelParams { depolarization: 0.06, ..ChannelParams::ideal() };
        let (stats, _) = run_session(200_000, &src, &ch, &det, &AdversaryModel::None, 2, false).unwrap();
        assert!((stats.qber_total - 0.03).abs() < 0.003, "qber {}", stats.qber_total);
    }

    #[test]
    fn loss_reduces_announcements_not_errors() {
        let (src, _, det) = ideal();
        let ch = ChannelParams { transmittance: 0.25, ..ChannelParams::ideal() };
        let (stats, _) = run_session(40_000, &src, &ch, &det, &AdversaryModel::None, 3, false).unwrap();
        let rate = stats.n_announced as f64 / stats.n_rounds as f64;
        assert!((rate - 0.25).abs() < 0.02, "announce rate {rate}");
        assert_eq!(stats.errors_x + stats.errors_y, 0);
    }

    #[test]
    fn intercept_resend_induces_quarter_qber() {
        let (src, ch, det) = ideal();
        let eve = AdversaryModel::InterceptResend { probability: 1.0 };
        let (stats, _) = run_session(200_000, &src, &ch, &det, &eve, 4, false).unwrap();
        assert!((stats.qber_total - 0.25).abs() < 0.005, "qber {}", stats.qber_total);
    }

    #[test]
    fn constant_remap_randomizes_the_key() {
        let (src, ch, det) = ideal();
        let eve = AdversaryModel::DetectorControl {
            remap: RemapTable::constant(BsmOutcome::PhiPlus),
        };
        let (stats, _) = run_session(200_000, &src, &ch, &det, &eve, 5, false).unwrap();
        assert!((stats.qber_total - 0.5).abs() < 0.005, "qber {}", stats.qber_total);
        // announced outcome plus bases carry no information about the key bit
        let mi = mutual_information_bits(&stats.joint_counts);
        assert!(mi.abs() < 1e-3, "mi {mi}");
    }

    #[test]
    fn swap_remap_flips_only_the_y_basis() {
        let (src, ch, det) = ideal();
        let eve = AdversaryModel::DetectorControl { remap: RemapTable::swap_phi_psi() };
        let (stats, _) = run_session(100_000, &src, &ch, &det, &eve, 6, false).unwrap();
        assert_abs_diff_eq!(stats.qber_x, 0.0);
        assert_abs_diff_eq!(stats.qber_y, 1.0);
    }

    #[test]
    fn no_click_is_never_announced_or_forged() {
        let (src, _, det) = ideal();
        let ch = ChannelParams { transmittance: 0.5, ..ChannelParams::ideal() };
        let eve = AdversaryModel::DetectorControl {
            remap: RemapTable::constant(BsmOutcome::PhiPlus),
        };
        let (stats, records) = run_session(5_000, &src, &ch, &det, &eve, 7, true).unwrap();
        let recs = records.unwrap();
        assert_eq!(recs.len(), 5_000);
        let no_clicks = recs.iter().filter(|r| r.outcome == BsmOutcome::NoClick).count();
        assert_eq!(stats.n_rounds - stats.n_announced, no_clicks as u64);
        assert!(no_clicks > 1_000); // lost rounds stay lost
        assert!(recs.iter().all(|r| r.announced == (r.outcome != BsmOutcome::NoClick)));
    }

    #[test]
    fn wcs_source_runs_and_keeps_qber_low() {
        let (_, ch, det) = ideal();
        let src = SourceParams::Wcs { mu: 0.2 };
        let (stats, _) = run_session(50_000, &src, &ch, &det, &AdversaryModel::None, 8, false).unwrap();
        // multi-photon double clicks decode to random bits, so a small
        // nonzero error floor is expected
        assert!(stats.qber_total < 0.06, "qber {}", stats.qber_total);
        let p_vacuum = (-0.2f64).exp();
        let announce_rate = stats.n_announced as f64 / stats.n_rounds as f64;
        assert!((announce_rate - (1.0 - p_vacuum)).abs() < 0.02, "rate {announce_rate}");
    }

    #[test]
    fn secret_fraction_endpoints_and_root_bracket() {
        assert_abs_diff_eq!(secret_fraction(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(secret_fraction(0.5).unwrap(), 0.0);
        assert!(secret_fraction(0.109).unwrap() > 0.0);
        assert_abs_diff_eq!(secret_fraction(0.112).unwrap(), 0.0);
        assert!(secret_fraction(0.6).is_err());
    }

    #[test]
    fn binary_entropy_reference_points() {
        assert_abs_diff_eq!(binary_entropy(0.5), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(binary_entropy(0.0), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.11), 0.4999, epsilon = 5e-4);
    }

    #[test]
    fn mutual_information_estimator_extremes() {
        // perfectly correlated: outcome PhiPlus in basis X determines the bit
        let mut corr = [[[0u64; 2]; 2]; 6];
        corr[0][0][0] = 5_000;
        corr[2][0][1] = 5_000;
        assert!((mutual_information_bits(&corr) - 1.0).abs() < 1e-3);

        // independent: every outcome sees both bits equally
        let mut indep = [[[0u64; 2]; 2]; 6];
        for outcome in indep.iter_mut().take(4) {
            for cell in outcome.iter_mut() {
                cell[0] = 2_500;
                cell[1] = 2_500;
            }
        }
        assert!(mutual_information_bits(&indep).abs() < 1e-3);
    }

    #[test]
    fn analytic_conditional_is_uniform() {
        for basis in [Basis::X, Basis::Y] {
            for outcome in BsmOutcome::ALL {
                if let Some(p0) = analytic_bit_given_outcome(basis, outcome) {
                    assert_abs_diff_eq!(p0, 0.5, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn remap_table_semantics() {
        let id = RemapTable::identity();
        for o in BsmOutcome::ALL {
            assert_eq!(id.apply(o), o);
        }
        let constant = RemapTable::constant(BsmOutcome::PsiMinus);
        assert_eq!(constant.apply(BsmOutcome::PhiPlus), BsmOutcome::PsiMinus);
        assert_eq!(constant.apply(BsmOutcome::NoClick), BsmOutcome::NoClick);
        let swap = RemapTable::swap_phi_psi();
        assert_eq!(swap.apply(BsmOutcome::PhiPlus), BsmOutcome::PsiPlus);
        assert_eq!(swap.apply(BsmOutcome::PsiMinus), BsmOutcome::PhiMinus);
        assert_eq!(swap.apply(BsmOutcome::DoubleClick), BsmOutcome::DoubleClick);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let (src, ch, det) = ideal();
        assert!(run_session(0, &src, &ch, &det, &AdversaryModel::None, 1, false).is_err());
        let eve = AdversaryModel::InterceptResend { probability: 1.5 };
        assert!(run_session(10, &src, &ch, &det, &eve, 1, false).is_err());
    }
}
