//! Multi-photon (Fock-space) simulation of Bob's encoder and BSM circuit.
//!
//! States live in fixed-total-photon-number sectors over the 4 optical modes
//! (H-upper, H-lower, V-upper, V-lower). The security audit checks that the
//! encoding stage (input beam splitter + phase modulator), averaged over the
//! four phase settings, delivers a spatial state that is independent of the
//! input light state; the optics after the phase modulator are
//! phase-independent and do not affect that condition. The 4-point phase
//! average erases coherences between lower-arm photon numbers differing by
//! anything other than a multiple of 4, so sectors N <= 3 are fully dephased
//! while N = 4 retains a delta = 4 coherence.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand::SeedableRng;
use serde::Serialize;

use crate::bell::bsm_unitary;
use crate::error::{QkdError, Result};
use crate::noise::DetectorParams;
use crate::quantum::{c, DensityMatrix, StateVector, UnitaryMatrix, C64};

/// Default photon-number truncation: the smallest value exhibiting both the
/// erasure rule (N <= 3) and its first violation (N = 4).
pub const DEFAULT_N_MAX: usize = 4;

/// Hard cap on sector size regardless of configuration.
const MAX_SECTOR: usize = 8;

/// Bob's phase settings.
pub const PHASE_GRID: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

fn factorial(n: u8) -> f64 {
    (1..=n as u64).map(|k| k as f64).product()
}

/// All occupation tuples of `modes` modes with total photon number `n`,
/// in a deterministic (lexicographic) order.
pub fn sector_basis(modes: usize, n: usize) -> Vec<Vec<u8>> {
    fn rec(modes: usize, n: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if modes == 1 {
            let mut full = prefix.clone();
            full.push(n as u8);
            out.push(full);
            return;
        }
        for k in (0..=n).rev() {
            prefix.push(k as u8);
            rec(modes - 1, n - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(modes, n, &mut Vec::new(), &mut out);
    out
}

pub fn sector_dim(modes: usize, n: usize) -> usize {
    sector_basis(modes, n).len()
}

/// Density operator over a fixed-N occupation basis.
#[derive(Debug, Clone)]
pub struct FockDensity {
    modes: usize,
    sector: usize,
    matrix: DMatrix<C64>,
}

impl FockDensity {
    pub fn new(modes: usize, sector: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = sector_dim(modes, sector);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QkdError::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        let herm = (&matrix - matrix.adjoint()).camax();
        let tr = matrix.trace();
        if herm > 1e-10 || (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(QkdError::NotDensity(format!(
                "hermiticity dev {herm:.3e}, trace {tr}"
            )));
        }
        let min_ev = crate::quantum::hermitian_eigenvalues(&matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_ev < -1e-10 {
            return Err(QkdError::NotDensity(format!("negative eigenvalue {min_ev:.3e}")));
        }
        Ok(Self { modes, sector, matrix })
    }

    /// Pure state from amplitudes over the sector basis.
    pub fn from_amplitudes(modes: usize, sector: usize, amps: &[C64]) -> Result<Self> {
        let dim = sector_dim(modes, sector);
        if amps.len() != dim {
            return Err(QkdError::DimensionMismatch { expected: dim, got: amps.len() });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(QkdError::NotNormalized(norm));
        }
        let v = nalgebra::DVector::from_row_slice(amps) / c(norm, 0.0);
        Ok(Self { modes, sector, matrix: &v * v.adjoint() })
    }

    pub fn vacuum() -> Self {
        Self {
            modes: 4,
            sector: 0,
            matrix: DMatrix::from_element(1, 1, c(1.0, 0.0)),
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn sector(&self) -> usize {
        self.sector
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        DensityMatrix::new(self.matrix.clone()).expect("valid by construction")
    }
}

/// 4x4 mode transform together with its encoding phase.
#[derive(Debug, Clone)]
pub struct LinearCircuit {
    pub mode_transform: UnitaryMatrix,
    pub phi: f64,
}

fn beamsplitter4() -> UnitaryMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    UnitaryMatrix::new(DMatrix::<C64>::from_row_slice(4, 4, &[
        c(r, 0.0), c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        c(r, 0.0), c(-r, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0), c(r, 0.0),
        c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0), c(-r, 0.0),
    ]))
    .expect("hadamard is unitary")
}

fn phase4(phi: f64) -> UnitaryMatrix {
    let e = C64::from_polar(1.0, phi);
    let mut m = DMatrix::<C64>::identity(4, 4);
    m[(1, 1)] = e;
    m[(3, 3)] = e;
    UnitaryMatrix::new(m).expect("diagonal phases are unitary")
}

/// Encoding stage only: input beam splitter followed by the phase modulator
/// on the lower arm. This is the part of Bob's device parameterized by phi.
pub fn encoder_circuit(phi: f64) -> LinearCircuit {
    LinearCircuit {
        mode_transform: phase4(phi).compose(&beamsplitter4()).expect("4x4"),
        phi,
    }
}

/// Full circuit: encoder, then HWP on the upper arm and arm recombination
/// (the single-photon `bsm_unitary`). Output mode i is detector port i.
pub fn bob_circuit(phi: f64) -> LinearCircuit {
    LinearCircuit {
        mode_transform: bsm_unitary()
            .compose(&encoder_circuit(phi).mode_transform)
            .expect("4x4"),
        phi,
    }
}

/// Second-quantization lift of a mode unitary to the fixed-N sector.
pub fn lift_unitary(u: &UnitaryMatrix, sector: usize, n_max: usize) -> Result<UnitaryMatrix> {
    if sector > n_max {
        return Err(QkdError::SectorTooLarge(sector, n_max));
    }
    if sector > MAX_SECTOR {
        return Err(QkdError::Capacity(sector, MAX_SECTOR));
    }
    let m = u.dim();
    let basis = sector_basis(m, sector);
    let index: HashMap<Vec<u8>, usize> =
        basis.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
    let mut lifted = DMatrix::<C64>::zeros(basis.len(), basis.len());
    for (col, n) in basis.iter().enumerate() {
        // expand prod_j (sum_i U_ij a_i^dag)^{n_j} |0> as a polynomial in
        // creation-operator monomials
        let mut poly: HashMap<Vec<u8>, C64> = HashMap::new();
        poly.insert(vec![0u8; m], c(1.0, 0.0));
        for (j, &occ) in n.iter().enumerate() {
            for _ in 0..occ {
                let mut next: HashMap<Vec<u8>, C64> = HashMap::new();
                for (mono, coeff) in &poly {
                    for i in 0..m {
                        let uij = u.entry(i, j);
                        if uij.norm_sqr() == 0.0 {
                            continue;
                        }
                        let mut grown = mono.clone();
                        grown[i] += 1;
                        *next.entry(grown).or_insert_with(|| c(0.0, 0.0)) += coeff * uij;
                    }
                }
                poly = next;
            }
        }
        let prefactor = 1.0 / n.iter().map(|&k| factorial(k)).product::<f64>().sqrt();
        for (mono, coeff) in poly {
            let weight = mono.iter().map(|&k| factorial(k)).product::<f64>().sqrt();
            lifted[(index[&mono], col)] = coeff * c(prefactor * weight, 0.0);
        }
    }
    UnitaryMatrix::new(lifted)
}

/// N-photon input with every photon in the upper input port carrying the
/// same polarization state.
pub fn polarized_sector_input(pol: &StateVector, sector: usize) -> Result<FockDensity> {
    if pol.dim() != 2 {
        return Err(QkdError::DimensionMismatch { expected: 2, got: pol.dim() });
    }
    upper_port_input(
        &(0..=sector)
            .map(|k| {
                let binom = factorial(sector as u8)
                    / (factorial(k as u8) * factorial((sector - k) as u8));
                pol.amp(0).powu(k as u32) * pol.amp(1).powu((sector - k) as u32)
                    * c(binom.sqrt(), 0.0)
            })
            .collect::<Vec<_>>(),
        sector,
    )
}

/// N-photon input in the upper input port from amplitudes over the
/// occupation basis |k photons H, N-k photons V>, indexed by k = 0..N.
pub fn upper_port_input(amps: &[C64], sector: usize) -> Result<FockDensity> {
    if amps.len() != sector + 1 {
        return Err(QkdError::DimensionMismatch { expected: sector + 1, got: amps.len() });
    }
    let basis = sector_basis(4, sector);
    let mut full = vec![c(0.0, 0.0); basis.len()];
    for (i, occ) in basis.iter().enumerate() {
        if occ[1] == 0 && occ[3] == 0 {
            // occ = (k, 0, N-k, 0)
            full[i] = amps[occ[0] as usize];
        }
    }
    FockDensity::from_amplitudes(4, sector, &full)
}

/// Haar-ish random N-photon polarization state in the upper input port.
pub fn random_polarized_input<R: Rng + ?Sized>(sector: usize, rng: &mut R) -> FockDensity {
    let mut amps: Vec<C64> = (0..=sector)
        .map(|_| c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
        .collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= c(norm, 0.0);
    }
    upper_port_input(&amps, sector).expect("normalized by construction")
}

/// (1/4) sum over the four phase settings of U_phi rho U_phi^dag, where
/// U_phi is the lifted encoding stage.
pub fn phase_averaged_channel(input: &FockDensity, n_max: usize) -> Result<FockDensity> {
    if input.modes != 4 {
        return Err(QkdError::DimensionMismatch { expected: 4, got: input.modes });
    }
    let dim = input.matrix.nrows();
    let mut acc = DMatrix::<C64>::zeros(dim, dim);
    for phi in PHASE_GRID {
        let lifted = lift_unitary(&encoder_circuit(phi).mode_transform, input.sector, n_max)?;
        acc += lifted.matrix() * &input.matrix * lifted.matrix().adjoint();
    }
    FockDensity::new(4, input.sector, acc / c(4.0, 0.0))
}

/// Spatial (arm) state of an N-photon 4-mode density operator, obtained by
/// tracing the polarization of every photon in first quantization. The
/// result lives on N arm qubits (dimension 2^N).
pub fn spatial_marginal(fd: &FockDensity) -> Result<DensityMatrix> {
    if fd.modes != 4 {
        return Err(QkdError::DimensionMismatch { expected: 4, got: fd.modes });
    }
    let n = fd.sector;
    if n == 0 {
        return DensityMatrix::new(DMatrix::from_element(1, 1, c(1.0, 0.0)));
    }
    let basis = sector_basis(4, n);
    let index: HashMap<Vec<u8>, usize> =
        basis.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
    let fq_dim = 4usize.pow(n as u32);

    // isometry from the occupation basis to symmetrized first-quantized vectors
    let mut iso = DMatrix::<f64>::zeros(fq_dim, basis.len());
    for seq_idx in 0..fq_dim {
        let mut occ = vec![0u8; 4];
        let mut rest = seq_idx;
        for _ in 0..n {
            occ[rest % 4] += 1;
            rest /= 4;
        }
        iso[(seq_idx, index[&occ])] = 1.0;
    }
    for mut col in iso.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    let iso_c = iso.map(|x| c(x, 0.0));
    let fq = &iso_c * &fd.matrix * iso_c.transpose();

    // trace the polarization bit of each particle; mode digit d = 2*pol + arm
    let arm_dim = 2usize.pow(n as u32);
    let mut out = DMatrix::<C64>::zeros(arm_dim, arm_dim);
    let interleave = |pol: usize, arm: usize| -> usize {
        let mut idx = 0usize;
        for k in 0..n {
            let p = (pol >> k) & 1;
            let a = (arm >> k) & 1;
            idx += (2 * p + a) * 4usize.pow(k as u32);
        }
        idx
    };
    for a in 0..arm_dim {
        for b in 0..arm_dim {
            let mut acc = c(0.0, 0.0);
            for p in 0..arm_dim {
                acc += fq[(interleave(p, a), interleave(p, b))];
            }
            out[(a, b)] = acc;
        }
    }
    DensityMatrix::new(out)
}

/// Outcome distribution of threshold detectors over the four output ports.
#[derive(Debug, Clone, Serialize)]
pub struct ClickDistribution {
    pub no_click: f64,
    /// Single-click probability per detector port (indexed by port index).
    pub single: [f64; 4],
    pub double_click: f64,
}

impl ClickDistribution {
    pub fn total(&self) -> f64 {
        self.no_click + self.single.iter().sum::<f64>() + self.double_click
    }
}

/// Click-pattern distribution for an input state passed through Bob's full
/// circuit at phase `phi`, with threshold detectors of the given efficiency
/// and dark-count probability.
pub fn click_pattern_distribution(
    input: &FockDensity,
    phi: f64,
    det: &DetectorParams,
) -> Result<ClickDistribution> {
    if input.modes != 4 {
        return Err(QkdError::DimensionMismatch { expected: 4, got: input.modes });
    }
    let lifted = lift_unitary(&bob_circuit(phi).mode_transform, input.sector, MAX_SECTOR)?;
    let out = lifted.matrix() * &input.matrix * lifted.matrix().adjoint();
    let basis = sector_basis(4, input.sector);

    let mut dist = ClickDistribution { no_click: 0.0, single: [0.0; 4], double_click: 0.0 };
    for (i, occ) in basis.iter().enumerate() {
        let p_pattern = out[(i, i)].re;
        if p_pattern <= 0.0 {
            continue;
        }
        // each port clicks iff >= 1 photon survives efficiency thinning
        // there, or a dark count fires
        let click_p: Vec<f64> = occ
            .iter()
            .map(|&n_i| 1.0 - (1.0 - det.efficiency).powi(n_i as i32) * (1.0 - det.dark_count))
            .collect();
        for mask in 0..16u32 {
            let mut p = p_pattern;
            let mut clicks = 0;
            let mut which = 0usize;
            for (port, &cp) in click_p.iter().enumerate() {
                if mask & (1 << port) != 0 {
                    p *= cp;
                    clicks += 1;
                    which = port;
                } else {
                    p *= 1.0 - cp;
                }
            }
            if p == 0.0 {
                continue;
            }
            match clicks {
                0 => dist.no_click += p,
                1 => dist.single[which] += p,
                _ => dist.double_click += p,
            }
        }
    }
    Ok(dist)
}

/// Per-sector findings of the fixed-state security audit.
#[derive(Debug, Clone, Serialize)]
pub struct SectorAudit {
    pub sector: usize,
    pub family_size: usize,
    /// Max trace distance between the phase-averaged spatial states of any
    /// two inputs in the family.
    pub max_trace_distance: f64,
    /// Max |coherence| in the phase-averaged 4-mode state between occupation
    /// pairs whose lower-arm photon numbers differ by the keyed delta,
    /// probed with the maximal-coherence (all one polarization) input.
    pub coherence_by_delta: BTreeMap<usize, f64>,
    /// Deltas whose coherence survives the 4-point phase average (> 0.01).
    pub surviving_deltas: Vec<usize>,
    /// Double-click probability at unit efficiency, zero dark counts,
    /// phi = pi/2, all photons polarized |+>.
    pub double_click_probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub n_max: usize,
    pub sectors: Vec<SectorAudit>,
}

/// Audits the security condition that the phase-averaged output of the
/// encoding stage is a fixed state, sector by sector, over a family of
/// random polarization inputs in the upper input port.
pub fn fixed_state_audit(
    sectors: &[usize],
    family_size: usize,
    n_max: usize,
    seed: u64,
) -> Result<AuditReport> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut report = AuditReport { n_max, sectors: Vec::new() };
    let plus = crate::quantum::bb84_vector(crate::quantum::Bb84State::Plus);
    for &sector in sectors {
        if sector > n_max {
            return Err(QkdError::SectorTooLarge(sector, n_max));
        }
        let mut family: Vec<FockDensity> = Vec::with_capacity(family_size);
        // deterministic extremes first, then random fill
        let h = StateVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let v = StateVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        for pol in [&h, &v, &plus] {
            if family.len() < family_size {
                family.push(polarized_sector_input(pol, sector)?);
            }
        }
        while family.len() < family_size {
            family.push(random_polarized_input(sector, &mut rng));
        }

        let marginals: Vec<DensityMatrix> = family
            .iter()
            .map(|f| spatial_marginal(&phase_averaged_channel(f, n_max)?))
            .collect::<Result<_>>()?;
        let mut max_td: f64 = 0.0;
        for i in 0..marginals.len() {
            for j in 0..i {
                max_td = max_td.max(crate::quantum::trace_distance(&marginals[i], &marginals[j])?);
            }
        }

        let probe = phase_averaged_channel(&polarized_sector_input(&h, sector)?, n_max)?;
        let basis = sector_basis(4, sector);
        let mut coherence_by_delta: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, oi) in basis.iter().enumerate() {
            for (j, oj) in basis.iter().enumerate() {
                let li = (oi[1] + oi[3]) as isize;
                let lj = (oj[1] + oj[3]) as isize;
                let delta = (li - lj).unsigned_abs();
                if delta == 0 {
                    continue;
                }
                let mag = probe.matrix[(i, j)].norm();
                let entry = coherence_by_delta.entry(delta).or_insert(0.0);
                *entry = entry.max(mag);
            }
        }
        let surviving_deltas: Vec<usize> = coherence_by_delta
            .iter()
            .filter(|(_, &m)| m > 0.01)
            .map(|(&d, _)| d)
            .collect();

        let double_click_probability = click_pattern_distribution(
            &polarized_sector_input(&plus, sector)?,
            FRAC_PI_2,
            &DetectorParams { efficiency: 1.0, dark_count: 0.0 },
        )?
        .double_click;

        report.sectors.push(SectorAudit {
            sector,
            family_size,
            max_trace_distance: max_td,
            coherence_by_delta,
            surviving_deltas,
            double_click_probability,
        });
    }
    Ok(report)
}
