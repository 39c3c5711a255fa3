//! Single-transmon spectra: exact diagonalization of the charge-basis
//! Hamiltonian `4 E_C n̂² − E_J cos(φ̂)` and calibration of `(E_C, E_J)`
//! against target qubit frequency and anharmonicity.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{eig_real_symmetric, HermitianOperator};
use crate::units;

/// Converged cutoff requirement: doubling the charge cutoff may move the
/// kept levels by at most this much (rad/ns).
const CUTOFF_SENSITIVITY: f64 = 1e-6 * std::f64::consts::TAU;

/// One transmon: charging/Josephson energies plus its exact kept spectrum.
///
/// `energies` holds the `levels_kept` lowest eigenvalues with the ground
/// state shifted to zero; `n_op` is the charge operator projected into the
/// kept eigenbasis with the sign gauge `⟨i|n̂|i+1⟩ > 0`.
#[derive(Debug, Clone)]
pub struct TransmonSpec {
    e_c: f64,
    e_j: f64,
    charge_cutoff: usize,
    levels_kept: usize,
    energies: DVector<f64>,
    n_op: DMatrix<f64>,
}

impl TransmonSpec {
    /// Builds a transmon from given `(E_C, E_J)`, enforcing the transmon regime
    /// `E_J/E_C >= 20` and `levels_kept >= 3`.
    pub fn from_energies(e_c: f64, e_j: f64, charge_cutoff: usize, levels_kept: usize) -> Result<Self> {
        if !(e_c > 0.0 && e_j > 0.0) {
            return Err(Error::InvalidConfig {
                reason: format!("E_C and E_J must be positive, got {e_c}, {e_j}"),
            });
        }
        if e_j / e_c < 20.0 {
            return Err(Error::InvalidConfig {
                reason: format!("E_J/E_C = {:.2} below the transmon regime (>= 20)", e_j / e_c),
            });
        }
        if levels_kept < 3 {
            return Err(Error::InvalidConfig {
                reason: format!("levels_kept must be >= 3, got {levels_kept}"),
            });
        }
        if charge_cutoff < 10 {
            return Err(Error::InvalidConfig {
                reason: format!("charge_cutoff must be >= 10, got {charge_cutoff}"),
            });
        }
        if 2 * charge_cutoff + 1 < levels_kept {
            return Err(Error::InvalidConfig {
                reason: "charge basis smaller than the number of kept levels".into(),
            });
        }
        let (energies, n_op) = diagonalize(e_c, e_j, charge_cutoff, levels_kept);
        Ok(Self { e_c, e_j, charge_cutoff, levels_kept, energies, n_op })
    }

    pub fn e_c(&self) -> f64 {
        self.e_c
    }

    pub fn e_j(&self) -> f64 {
        self.e_j
    }

    pub fn charge_cutoff(&self) -> usize {
        self.charge_cutoff
    }

    pub fn levels_kept(&self) -> usize {
        self.levels_kept
    }

    /// Kept eigenenergies, ground state at zero.
    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// Charge operator in the kept eigenbasis.
    pub fn n_op(&self) -> &DMatrix<f64> {
        &self.n_op
    }

    /// Qubit transition `E₁ − E₀`.
    pub fn omega01(&self) -> f64 {
        self.energies[1]
    }

    /// Anharmonicity `(E₂ − E₁) − (E₁ − E₀)`.
    pub fn alpha(&self) -> f64 {
        self.energies[2] - 2.0 * self.energies[1]
    }
}

/// Charge-basis matrix of `4E_C n̂² − E_J cos(φ̂)`: tridiagonal with
/// diagonal `4 E_C k²` and off-diagonal `−E_J/2`, `k ∈ [−cutoff, cutoff]`.
pub fn charge_basis_matrix(e_c: f64, e_j: f64, charge_cutoff: usize) -> DMatrix<f64> {
    let dim = 2 * charge_cutoff + 1;
    let mut m = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let q = k as f64 - charge_cutoff as f64;
        m[(k, k)] = 4.0 * e_c * q * q;
        if k + 1 < dim {
            m[(k, k + 1)] = -e_j / 2.0;
            m[(k + 1, k)] = -e_j / 2.0;
        }
    }
    m
}

/// The bare transmon Hamiltonian of a spec, as an operator in the charge
/// basis.
pub fn single_transmon_hamiltonian(spec: &TransmonSpec) -> HermitianOperator {
    HermitianOperator::from_real(&charge_basis_matrix(spec.e_c, spec.e_j, spec.charge_cutoff))
        .expect("charge-basis matrix is symmetric by construction")
}

fn diagonalize(e_c: f64, e_j: f64, cutoff: usize, levels: usize) -> (DVector<f64>, DMatrix<f64>) {
    let m = charge_basis_matrix(e_c, e_j, cutoff);
    let (vals, mut vecs) = eig_real_symmetric(&m);
    let dim = 2 * cutoff + 1;
    // gauge: make ⟨i|n̂|i+1⟩ positive, so dressed couplings come out positive
    for i in 0..levels.saturating_sub(1) {
        let mut elem = 0.0;
        for k in 0..dim {
            let q = k as f64 - cutoff as f64;
            elem += vecs[(k, i)] * q * vecs[(k, i + 1)];
        }
        if elem < 0.0 {
            vecs.column_mut(i + 1).neg_mut();
        }
    }
    let energies = DVector::from_iterator(levels, (0..levels).map(|i| vals[i] - vals[0]));
    let mut n_op = DMatrix::zeros(levels, levels);
    for i in 0..levels {
        for j in 0..levels {
            let mut elem = 0.0;
            for k in 0..dim {
                let q = k as f64 - cutoff as f64;
                elem += vecs[(k, i)] * q * vecs[(k, j)];
            }
            n_op[(i, j)] = elem;
        }
    }
    (energies, n_op)
}

/// Closed-form seed for calibration: `α ≈ −E_C`,
/// `ω₀₁ ≈ √(8 E_C E_J) − E_C`.
pub fn analytic_seed(target_omega01: f64, target_alpha: f64) -> (f64, f64) {
    let e_c = -target_alpha;
    let e_j = (target_omega01 + e_c).powi(2) / (8.0 * e_c);
    (e_c, e_j)
}

/// Finds `(E_C, E_J)` whose exact charge-basis spectrum reproduces the
/// requested `ω₀₁` and `α`, by a damped 2-D Newton iteration from the
/// analytic seed.
pub fn calibrate_transmon(
    target_omega01: f64,
    target_alpha: f64,
    charge_cutoff: usize,
    levels_kept: usize,
) -> Result<TransmonSpec> {
    if !(target_omega01 > 0.0) || !(target_alpha < 0.0) {
        return Err(Error::InvalidConfig {
            reason: format!(
                "calibration targets need ω01 > 0 and α < 0, got {target_omega01}, {target_alpha}"
            ),
        });
    }
    let residual = |e_c: f64, e_j: f64| -> (f64, f64) {
        let (energies, _) = diagonalize(e_c, e_j, charge_cutoff, 3);
        (
            energies[1] - target_omega01,
            (energies[2] - 2.0 * energies[1]) - target_alpha,
        )
    };
    let (mut e_c, mut e_j) = analytic_seed(target_omega01, target_alpha);
    let tol = units::ghz(1e-10);
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        let (r0, r1) = residual(e_c, e_j);
        last = r0.abs().max(r1.abs());
        if last < tol {
            return TransmonSpec::from_energies(e_c, e_j, charge_cutoff, levels_kept);
        }
        let hc = e_c * 1e-7;
        let hj = e_j * 1e-7;
        let (rc0, rc1) = residual(e_c + hc, e_j);
        let (rj0, rj1) = residual(e_c, e_j + hj);
        let j00 = (rc0 - r0) / hc;
        let j01 = (rj0 - r0) / hj;
        let j10 = (rc1 - r1) / hc;
        let j11 = (rj1 - r1) / hj;
        let det = j00 * j11 - j01 * j10;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let mut dc = -(j11 * r0 - j01 * r1) / det;
        let mut dj = -(-j10 * r0 + j00 * r1) / det;
        // keep the iterate in the physical quadrant
        while e_c + dc <= 0.0 || e_j + dj <= 0.0 {
            dc *= 0.5;
            dj *= 0.5;
        }
        e_c += dc;
        e_j += dj;
    }
    Err(Error::CalibrationDiverged { iterations: 100, residual: last })
}

/// Verifies that the charge cutoff is large enough: doubling it must move
/// every kept level by less than 2π×1e-6 rad/ns. On failure the error names
/// a cutoff that does converge.
pub fn check_cutoff_convergence(spec: &TransmonSpec) -> Result<()> {
    let base = diagonalize(spec.e_c, spec.e_j, spec.charge_cutoff, spec.levels_kept).0;
    let doubled = diagonalize(spec.e_c, spec.e_j, 2 * spec.charge_cutoff, spec.levels_kept).0;
    let moved = (base - doubled).abs().max();
    if moved < CUTOFF_SENSITIVITY {
        return Ok(());
    }
    let mut cutoff = 2 * spec.charge_cutoff;
    for _ in 0..6 {
        let a = diagonalize(spec.e_c, spec.e_j, cutoff, spec.levels_kept).0;
        let b = diagonalize(spec.e_c, spec.e_j, 2 * cutoff, spec.levels_kept).0;
        if (a - b).abs().max() < CUTOFF_SENSITIVITY {
            return Err(Error::CutoffTooSmall { cutoff: spec.charge_cutoff, required: cutoff });
        }
        cutoff *= 2;
    }
    Err(Error::CutoffTooSmall { cutoff: spec.charge_cutoff, required: cutoff })
}
