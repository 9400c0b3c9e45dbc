//! Bell states, the linear-optical BSM circuit, outcome probabilities and
//! the bit-decoding rule.
//!
//! The measurement circuit applies a half-wave plate on the upper arm
//! (|Hu> <-> |Vu>), recombines the arms on a 50/50 beam splitter with the
//! real Hadamard convention out1 = (u + l)/sqrt(2), out2 = (u - l)/sqrt(2),
//! and resolves polarization at each output arm. Each of the four detector
//! ports then projects onto exactly one Bell state.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};
use crate::quantum::{bb84_vector, c, Bb84State, DensityMatrix, StateVector, UnitaryMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    One,
    Two,
}

/// One of the four single-photon detectors after the BSM optics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectorPort {
    pub arm: Arm,
    pub polarization: Polarization,
}

impl DetectorPort {
    pub const ALL: [DetectorPort; 4] = [
        DetectorPort { arm: Arm::One, polarization: Polarization::H },
        DetectorPort { arm: Arm::Two, polarization: Polarization::H },
        DetectorPort { arm: Arm::One, polarization: Polarization::V },
        DetectorPort { arm: Arm::Two, polarization: Polarization::V },
    ];

    /// Index in the output basis ordering |H1>, |H2>, |V1>, |V2>.
    pub fn index(self) -> usize {
        let p = match self.polarization {
            Polarization::H => 0,
            Polarization::V => 1,
        };
        let a = match self.arm {
            Arm::One => 0,
            Arm::Two => 1,
        };
        2 * p + a
    }

    pub fn from_index(i: usize) -> DetectorPort {
        DetectorPort::ALL
            .into_iter()
            .find(|p| p.index() == i)
            .expect("port index < 4")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Vector in the global |Hu>, |Hl>, |Vu>, |Vl> ordering.
    pub fn vector(self) -> StateVector {
        let r = FRAC_1_SQRT_2;
        let amps = match self {
            BellState::PhiPlus => vec![c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0)],
            BellState::PhiMinus => vec![c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-r, 0.0)],
            BellState::PsiPlus => vec![c(0.0, 0.0), c(r, 0.0), c(r, 0.0), c(0.0, 0.0)],
            BellState::PsiMinus => vec![c(0.0, 0.0), c(r, 0.0), c(-r, 0.0), c(0.0, 0.0)],
        };
        StateVector::new(amps).expect("bell states are normalized")
    }

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi_plus",
            BellState::PhiMinus => "phi_minus",
            BellState::PsiPlus => "psi_plus",
            BellState::PsiMinus => "psi_minus",
        }
    }
}

/// Per-round measurement result; DoubleClick and NoClick are the terminal
/// non-Bell outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsmOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
    DoubleClick,
    NoClick,
}

impl BsmOutcome {
    pub const ALL: [BsmOutcome; 6] = [
        BsmOutcome::PhiPlus,
        BsmOutcome::PhiMinus,
        BsmOutcome::PsiPlus,
        BsmOutcome::PsiMinus,
        BsmOutcome::DoubleClick,
        BsmOutcome::NoClick,
    ];

    pub fn index(self) -> usize {
        BsmOutcome::ALL.iter().position(|&o| o == self).unwrap()
    }

    pub fn label(self) -> &'static str {
        match self {
            BsmOutcome::PhiPlus => "phi_plus",
            BsmOutcome::PhiMinus => "phi_minus",
            BsmOutcome::PsiPlus => "psi_plus",
            BsmOutcome::PsiMinus => "psi_minus",
            BsmOutcome::DoubleClick => "double_click",
            BsmOutcome::NoClick => "no_click",
        }
    }

    pub fn bell(self) -> Option<BellState> {
        match self {
            BsmOutcome::PhiPlus => Some(BellState::PhiPlus),
            BsmOutcome::PhiMinus => Some(BellState::PhiMinus),
            BsmOutcome::PsiPlus => Some(BellState::PsiPlus),
            BsmOutcome::PsiMinus => Some(BellState::PsiMinus),
            _ => None,
        }
    }
}

impl From<BellState> for BsmOutcome {
    fn from(b: BellState) -> Self {
        match b {
            BellState::PhiPlus => BsmOutcome::PhiPlus,
            BellState::PhiMinus => BsmOutcome::PhiMinus,
            BellState::PsiPlus => BsmOutcome::PsiPlus,
            BellState::PsiMinus => BsmOutcome::PsiMinus,
        }
    }
}

/// Bob's interferometer phase for each BB84 label.
pub fn phase_for(s: Bb84State) -> f64 {
    match s {
        Bb84State::Plus => 0.0,
        Bb84State::Minus => PI,
        Bb84State::PlusI => PI / 2.0,
        Bb84State::MinusI => 3.0 * PI / 2.0,
    }
}

/// (|u> + e^{i phi} |l>)/sqrt(2) in the {|u>, |l>} basis. The protocol-legal
/// settings are the BB84 grid {0, pi/2, pi, 3pi/2}; general angles are
/// accepted for phase scans.
pub fn bob_spatial_state(phi: f64) -> StateVector {
    let r = FRAC_1_SQRT_2;
    StateVector::new(vec![c(r, 0.0), c(r * phi.cos(), r * phi.sin())])
        .expect("normalized by construction")
}

/// The single-photon BSM circuit HWP(upper) followed by arm recombination,
/// mapping the |Hu>, |Hl>, |Vu>, |Vl> basis to the detector-port basis
/// |H1>, |H2>, |V1>, |V2>.
pub fn bsm_unitary() -> UnitaryMatrix {
    let r = FRAC_1_SQRT_2;
    // HWP on the upper arm: Hu <-> Vu.
    let w = DMatrix::<C64>::from_row_slice(4, 4, &[
        c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
        c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
    ]);
    // 50/50 recombination per polarization: out1 = (u+l)/sqrt2, out2 = (u-l)/sqrt2.
    let b = DMatrix::<C64>::from_row_slice(4, 4, &[
        c(r, 0.0), c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        c(r, 0.0), c(-r, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0), c(r, 0.0),
        c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0), c(-r, 0.0),
    ]);
    UnitaryMatrix::new(b * w).expect("composition of unitaries")
}

/// Detector port <-> Bell state bijection fixed by `bsm_unitary`.
pub fn port_to_bell(port: DetectorPort) -> BellState {
    match (port.arm, port.polarization) {
        (Arm::One, Polarization::V) => BellState::PhiPlus,
        (Arm::Two, Polarization::V) => BellState::PhiMinus,
        (Arm::One, Polarization::H) => BellState::PsiPlus,
        (Arm::Two, Polarization::H) => BellState::PsiMinus,
    }
}

pub fn bell_to_port(bell: BellState) -> DetectorPort {
    DetectorPort::ALL
        .into_iter()
        .find(|&p| port_to_bell(p) == bell)
        .expect("bijection")
}

/// Bell-state projection probabilities for |psi_A> (x) |psi_B(phi)>,
/// indexed by `BellState::ALL`.
pub fn bell_probabilities(alice: Bb84State, phi: f64) -> [f64; 4] {
    let joint = bb84_vector(alice)
        .tensor(&bob_spatial_state(phi))
        .expect("4-dim product");
    let mut p = [0.0; 4];
    for (k, bell) in BellState::ALL.iter().enumerate() {
        p[k] = bell.vector().inner(&joint).expect("same dim").norm_sqr();
    }
    p
}

/// Photon arrival probability at each detector port for a (possibly mixed)
/// polarization input and Bob phase `phi`. Indexed by `DetectorPort::index`.
pub fn port_probabilities(alice_pol: &DensityMatrix, phi: f64) -> Result<[f64; 4]> {
    if alice_pol.dim() != 2 {
        return Err(QkdError::DimensionMismatch { expected: 2, got: alice_pol.dim() });
    }
    let spatial = DensityMatrix::pure(&bob_spatial_state(phi));
    let mut joint = DMatrix::<C64>::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    joint[(2 * i + k, 2 * j + l)] =
                        alice_pol.entry(i, j) * spatial.entry(k, l);
                }
            }
        }
    }
    let u = bsm_unitary();
    let out = u.matrix() * joint * u.matrix().adjoint();
    let mut p = [0.0; 4];
    for (i, v) in p.iter_mut().enumerate() {
        *v = out[(i, i)].re;
    }
    Ok(p)
}

/// Bit assigned to a Bell outcome given Bob's (private) state choice.
pub fn decoded_bit(bob: Bb84State, bell: BellState) -> u8 {
    use BellState::*;
    let zero_class: [BellState; 2] = match bob {
        Bb84State::Plus => [PhiPlus, PsiPlus],
        Bb84State::Minus => [PhiMinus, PsiMinus],
        Bb84State::PlusI => [PsiPlus, PhiMinus],
        Bb84State::MinusI => [PhiPlus, PsiMinus],
    };
    if zero_class.contains(&bell) {
        0
    } else {
        1
    }
}

/// Full decoding rule: Bell outcomes use the table, a double click yields a
/// uniformly random bit, and NoClick is a contract violation (sifting must
/// have excluded it).
pub fn decode_bit<R: Rng + ?Sized>(
    bob: Bb84State,
    outcome: BsmOutcome,
    rng: &mut R,
) -> Result<u8> {
    match outcome {
        BsmOutcome::NoClick => Err(QkdError::NoClickDecode),
        BsmOutcome::DoubleClick => Ok(rng.random_range(0..2) as u8),
        other => Ok(decoded_bit(bob, other.bell().expect("bell outcome"))),
    }
}
