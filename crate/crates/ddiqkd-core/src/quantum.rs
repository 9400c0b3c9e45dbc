//! Complex linear algebra and qubit-state primitives.
//!
//! Everything downstream works in a single fixed convention: the two-qubit
//! (polarization x path) basis is ordered |Hu>, |Hl>, |Vu>, |Vl>, i.e. the
//! polarization index is the slower-varying one.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};

pub type C64 = Complex64;

/// Absolute tolerance for state validity checks (normalization, hermiticity,
/// trace, unitarity). Double precision leaves ample headroom at dim <= 256.
pub const STATE_TOL: f64 = 1e-12;

/// Largest vector dimension `tensor` may produce.
pub const MAX_DIM: usize = 256;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Normalized complex amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    /// Builds a state from amplitudes, normalizing away rounding error.
    /// Fails if the vector is zero or farther than 1e-6 from unit norm.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(QkdError::invalid("amplitudes", "empty amplitude vector"));
        }
        let v = DVector::from_vec(amps);
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(QkdError::NotNormalized(norm));
        }
        Ok(Self { amps: v / c(norm, 0.0) })
    }

    /// Basis vector |i> of the given dimension.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[i] = c(1.0, 0.0);
        Self { amps: v }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amp(&self, i: usize) -> C64 {
        self.amps[i]
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn is_normalized(&self) -> bool {
        (self.amps.norm() - 1.0).abs() < STATE_TOL
    }

    /// <self|other>
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(QkdError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// Kronecker product; `self` carries the slower-varying index.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let dim = self.dim() * other.dim();
        if dim > MAX_DIM {
            return Err(QkdError::Capacity(dim, MAX_DIM));
        }
        let mut amps = Vec::with_capacity(dim);
        for i in 0..self.dim() {
            for j in 0..other.dim() {
                amps.push(self.amps[i] * other.amps[j]);
            }
        }
        Ok(StateVector { amps: DVector::from_vec(amps) })
    }

    /// |<a|b>| = 1 up to tolerance, i.e. equality up to a global phase.
    pub fn equals_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        match self.inner(other) {
            Ok(ip) => (ip.norm() - 1.0).abs() < tol,
            Err(_) => false,
        }
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(QkdError::NotDensity(format!(
                "not square: {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm_dev = (&m - m.adjoint()).camax();
        if herm_dev > STATE_TOL {
            return Err(QkdError::NotDensity(format!(
                "not Hermitian (max dev {herm_dev:.3e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(QkdError::NotDensity(format!("trace = {tr}")));
        }
        let min_ev = hermitian_eigenvalues(&m)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_ev < -1e-10 {
            return Err(QkdError::NotDensity(format!(
                "negative eigenvalue {min_ev:.3e}"
            )));
        }
        Ok(Self { m })
    }

    pub fn pure(state: &StateVector) -> Self {
        let v = state.amplitudes();
        Self { m: v * v.adjoint() }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim) / c(dim as f64, 0.0),
        }
    }

    /// Convex mixture sum w_i rho_i. Weights must sum to 1.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(QkdError::invalid("mixture", "no components"));
        }
        let dim = parts[0].1.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(QkdError::DimensionMismatch { expected: dim, got: rho.dim() });
            }
            m += &rho.m * c(*w, 0.0);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }
}

/// Matrix U with U^dag U = I within `STATE_TOL`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    m: DMatrix<C64>,
}

impl UnitaryMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        let dim = m.nrows();
        let dev = (m.adjoint() * &m - DMatrix::<C64>::identity(dim, dim)).camax();
        if dev > STATE_TOL {
            return Err(QkdError::NotUnitary(dev));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(QkdError::DimensionMismatch {
                expected: self.dim(),
                got: state.dim(),
            });
        }
        Ok(StateVector { amps: &self.m * state.amplitudes() })
    }

    /// U rho U^dag
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(QkdError::DimensionMismatch {
                expected: self.dim(),
                got: rho.dim(),
            });
        }
        Ok(DensityMatrix { m: &self.m * &rho.m * self.m.adjoint() })
    }

    pub fn compose(&self, rhs: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        if rhs.dim() != self.dim() {
            return Err(QkdError::DimensionMismatch {
                expected: self.dim(),
                got: rhs.dim(),
            });
        }
        Ok(UnitaryMatrix { m: &self.m * &rhs.m })
    }
}

/// Measurement basis of the BB84 set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
}

/// The four BB84 polarization states; |+> and |+i> encode bit 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bb84State {
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl Bb84State {
    pub const ALL: [Bb84State; 4] = [
        Bb84State::Plus,
        Bb84State::Minus,
        Bb84State::PlusI,
        Bb84State::MinusI,
    ];

    pub fn basis(self) -> Basis {
        match self {
            Bb84State::Plus | Bb84State::Minus => Basis::X,
            Bb84State::PlusI | Bb84State::MinusI => Basis::Y,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Bb84State::Plus | Bb84State::PlusI => 0,
            Bb84State::Minus | Bb84State::MinusI => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bb84State::Plus => "plus",
            Bb84State::Minus => "minus",
            Bb84State::PlusI => "plus_i",
            Bb84State::MinusI => "minus_i",
        }
    }
}

/// 2-dim vector in the {|H>, |V>} basis.
pub fn bb84_vector(s: Bb84State) -> StateVector {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let second = match s {
        Bb84State::Plus => c(r, 0.0),
        Bb84State::Minus => c(-r, 0.0),
        Bb84State::PlusI => c(0.0, r),
        Bb84State::MinusI => c(0.0, -r),
    };
    StateVector::new(vec![c(r, 0.0), second]).expect("bb84 states are normalized")
}

/// Kronecker product of two normalized states.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    a.tensor(b)
}

/// Traces out the subsystems not listed in `keep`.
///
/// `subsystem_dims` factors the total dimension, slowest index first (the
/// same convention as `tensor`). `keep` lists the subsystem indices to
/// retain, in their original order.
pub fn partial_trace(
    rho: &DensityMatrix,
    subsystem_dims: &[usize],
    keep: &[usize],
) -> Result<DensityMatrix> {
    let dim: usize = subsystem_dims.iter().product();
    if dim != rho.dim() || subsystem_dims.contains(&0) {
        return Err(QkdError::ShapeError {
            dims: subsystem_dims.to_vec(),
            dim: rho.dim(),
        });
    }
    let n = subsystem_dims.len();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.iter().any(|&k| k >= n) || keep_sorted.len() != keep.len() {
        return Err(QkdError::invalid("keep", "indices out of range or repeated"));
    }
    let traced: Vec<usize> = (0..n).filter(|i| !keep_sorted.contains(i)).collect();

    // strides of each subsystem in the flat index
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * subsystem_dims[i + 1];
    }

    let keep_dim: usize = keep_sorted.iter().map(|&k| subsystem_dims[k]).product();
    let trace_dim: usize = traced.iter().map(|&k| subsystem_dims[k]).product();
    let mut out = DMatrix::<C64>::zeros(keep_dim, keep_dim);

    let flat = |multi: &[usize], subsys: &[usize]| -> usize {
        multi
            .iter()
            .zip(subsys)
            .map(|(&v, &s)| v * strides[s])
            .sum()
    };
    let unflatten = |mut idx: usize, subsys: &[usize]| -> Vec<usize> {
        let mut multi = vec![0usize; subsys.len()];
        for (slot, &s) in subsys.iter().enumerate().rev() {
            multi[slot] = idx % subsystem_dims[s];
            idx /= subsystem_dims[s];
        }
        multi
    };

    for a in 0..keep_dim {
        let ka = flat(&unflatten(a, &keep_sorted), &keep_sorted);
        for b in 0..keep_dim {
            let kb = flat(&unflatten(b, &keep_sorted), &keep_sorted);
            let mut acc = c(0.0, 0.0);
            for t in 0..trace_dim {
                let tt = flat(&unflatten(t, &traced), &traced);
                acc += rho.m[(ka + tt, kb + tt)];
            }
            out[(a, b)] = acc;
        }
    }
    DensityMatrix::new(out)
}

/// (1/2) sum of |eigenvalues| of (a - b).
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(QkdError::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let diff = &a.m - &b.m;
    Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum::<f64>())
}

/// Eigenvalues of a Hermitian matrix (input assumed self-adjoint).
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect()
}
