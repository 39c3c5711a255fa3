//! Two coupled transmons: the full product-basis Hamiltonian, the six-level
//! effective model, dressed coupling strengths, and the Schrieffer-Wolff
//! reduction of the three-level subspace that yields the Stark shift on
//! `|11⟩`.
//!
//! Basis conventions: the product basis is ordered with the first transmon's
//! level as the major index, so `|i j⟩ = |i⟩_a ⊗ |j⟩_b` sits at `i·L + j`.
//! The effective model uses the fixed order
//! `(|00⟩, |01⟩, |10⟩, |02⟩, |11⟩, |20⟩)`.

use nalgebra::{DMatrix, DMatrixView, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::HermitianOperator;
use crate::propagation::TimeDependentHamiltonian;
use crate::transmon::{calibrate_transmon, TransmonSpec};
use crate::units;

/// Kept-level truncation requirement on the six lowest coupled levels.
const TRUNCATION_SENSITIVITY: f64 = 1e-6 * std::f64::consts::TAU;

/// Calibration targets for a two-transmon device, all in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    pub omega_a: f64,
    pub alpha_a: f64,
    pub omega_b: f64,
    pub alpha_b: f64,
    /// Maximum coupling `J_M`.
    pub j_max: f64,
    pub charge_cutoff: usize,
    pub levels_kept: usize,
}

impl DeviceParams {
    /// The shipped defaults: ω_a = 2π×6.00 GHz, ω_b = 2π×5.67 GHz,
    /// α = −2π×0.33 GHz on both qubits, J_M = 2π×16 MHz.
    pub fn standard() -> Self {
        Self {
            omega_a: units::ghz(6.00),
            alpha_a: -units::ghz(0.33),
            omega_b: units::ghz(5.67),
            alpha_b: -units::ghz(0.33),
            j_max: units::mhz(16.0),
            charge_cutoff: 20,
            levels_kept: 8,
        }
    }

    /// Same device with qubit b retargeted to `ω_b = ω_a + α_a + Δ`.
    pub fn with_detuning(&self, delta: f64) -> Self {
        Self { omega_b: self.omega_a + self.alpha_a + delta, ..*self }
    }
}

/// How dressed couplings were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMethod {
    ExactMatrixElement,
    FirstOrderPerturbative,
}

/// Dimensionless ratios `J̃_i / J` for the three near-degenerate pairs
/// `(|01⟩,|10⟩)`, `(|11⟩,|02⟩)`, `(|11⟩,|20⟩)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedCouplings {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub method: CouplingMethod,
}

/// Stark shift data from the Schrieffer-Wolff reduction of the three-level
/// subspace: energy shift `δΩ` of `|11⟩`, coupling correction `δJ̃₃`, and
/// the generator coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkShiftData {
    pub delta_omega: f64,
    pub delta_j3: f64,
    pub a1: f64,
    pub a2: f64,
}

/// A calibrated two-transmon device.
#[derive(Debug, Clone)]
pub struct DeviceSpec {
    qubit_a: TransmonSpec,
    qubit_b: TransmonSpec,
    j_max: f64,
    delta: f64,
    coupling_scale: f64,
    dressed: DressedCouplings,
}

impl DeviceSpec {
    /// Calibrates both transmons against the targets, derives the coupling
    /// scale and dressed couplings, and verifies kept-level truncation.
    pub fn calibrate(params: &DeviceParams) -> Result<Self> {
        let spec = Self::calibrate_without_truncation_check(params)?;
        spec.check_truncation()?;
        Ok(spec)
    }

    /// Calibration without the (expensive) truncation check; used when
    /// re-deriving a device from an already-verified one at a slightly
    /// different detuning.
    fn calibrate_without_truncation_check(params: &DeviceParams) -> Result<Self> {
        let qubit_a = calibrate_transmon(params.omega_a, params.alpha_a, params.charge_cutoff, params.levels_kept)?;
        let qubit_b = calibrate_transmon(params.omega_b, params.alpha_b, params.charge_cutoff, params.levels_kept)?;
        if !(params.j_max > 0.0) {
            return Err(Error::InvalidConfig { reason: "J_M must be positive".into() });
        }
        let delta = qubit_b.omega01() - qubit_a.omega01() - qubit_a.alpha();
        if delta.abs() >= params.j_max / 4.0 {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "detuning 2π×{:.4} MHz too large; |Δ| must stay below J_M/4 = 2π×{:.4} MHz",
                    units::to_mhz(delta),
                    units::to_mhz(params.j_max / 4.0)
                ),
            });
        }
        let coupling_scale = 2.0
            * (qubit_a.e_j() * qubit_b.e_j() / (64.0 * qubit_a.e_c() * qubit_b.e_c())).powf(-0.25);
        let mut spec = Self {
            qubit_a,
            qubit_b,
            j_max: params.j_max,
            delta,
            coupling_scale,
            dressed: DressedCouplings { r1: 0.0, r2: 0.0, r3: 0.0, method: CouplingMethod::ExactMatrixElement },
        };
        spec.dressed = dressed_couplings(&spec);
        let sqrt2 = std::f64::consts::SQRT_2;
        let d = spec.dressed;
        if !(0.8 < d.r1 && d.r1 < 1.2 && 0.8 * sqrt2 < d.r2 && d.r2 < 1.2 * sqrt2 && 0.8 * sqrt2 < d.r3 && d.r3 < 1.2 * sqrt2) {
            return Err(Error::InvalidConfig {
                reason: format!("dressed couplings out of the transmon-regime window: r1 {} r2 {} r3 {}", d.r1, d.r2, d.r3),
            });
        }
        Ok(spec)
    }

    /// Rederives the device with qubit b moved to `ω_b = ω_a + α_a + Δ`.
    ///
    /// Truncation convergence is inherited from this device: the sensitivity
    /// is continuous in Δ and the allowed |Δ| < J_M/4 cannot flip it.
    pub fn with_detuning(&self, delta: f64) -> Result<Self> {
        let params = DeviceParams {
            omega_a: self.qubit_a.omega01(),
            alpha_a: self.qubit_a.alpha(),
            omega_b: self.qubit_a.omega01() + self.qubit_a.alpha() + delta,
            alpha_b: self.qubit_b.alpha(),
            j_max: self.j_max,
            charge_cutoff: self.qubit_a.charge_cutoff(),
            levels_kept: self.levels_kept(),
        };
        Self::calibrate_without_truncation_check(&params)
    }

    fn check_truncation(&self) -> Result<()> {
        let kept = self.levels_kept();
        let base = self.six_lowest_coupled(self.j_max, kept)?;
        let refined = self.six_lowest_coupled(self.j_max, kept + 2)?;
        let sensitivity = (base - refined).abs().max();
        if sensitivity > TRUNCATION_SENSITIVITY {
            return Err(Error::TruncationNotConverged { sensitivity });
        }
        Ok(())
    }

    fn six_lowest_coupled(&self, j: f64, levels: usize) -> Result<DVector<f64>> {
        let qa = TransmonSpec::from_energies(self.qubit_a.e_c(), self.qubit_a.e_j(), self.qubit_a.charge_cutoff(), levels)?;
        let qb = TransmonSpec::from_energies(self.qubit_b.e_c(), self.qubit_b.e_j(), self.qubit_b.charge_cutoff(), levels)?;
        let dim = levels * levels;
        let mut m = DMatrix::zeros(dim, dim);
        for ia in 0..levels {
            for ib in 0..levels {
                m[(ia * levels + ib, ia * levels + ib)] = qa.energies()[ia] + qb.energies()[ib];
            }
        }
        let g = self.coupling_scale * j;
        for ia in 0..levels {
            for ka in 0..levels {
                let na = qa.n_op()[(ia, ka)];
                if na == 0.0 {
                    continue;
                }
                for ib in 0..levels {
                    for kb in 0..levels {
                        m[(ia * levels + ib, ka * levels + kb)] += g * na * qb.n_op()[(ib, kb)];
                    }
                }
            }
        }
        let (vals, _) = crate::operators::eig_real_symmetric(&m);
        Ok(DVector::from_iterator(6, vals.iter().take(6).copied()))
    }

    pub fn qubit_a(&self) -> &TransmonSpec {
        &self.qubit_a
    }

    pub fn qubit_b(&self) -> &TransmonSpec {
        &self.qubit_b
    }

    pub fn j_max(&self) -> f64 {
        self.j_max
    }

    /// Detuning of ω_b from the ω_a + α_a resonance.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Ratio `g_C / J` fixed by the transmon impedances.
    pub fn coupling_scale(&self) -> f64 {
        self.coupling_scale
    }

    pub fn dressed(&self) -> DressedCouplings {
        self.dressed
    }

    pub fn levels_kept(&self) -> usize {
        self.qubit_a.levels_kept()
    }

    pub fn omega_a(&self) -> f64 {
        self.qubit_a.omega01()
    }

    pub fn alpha_a(&self) -> f64 {
        self.qubit_a.alpha()
    }

    pub fn omega_b(&self) -> f64 {
        self.qubit_b.omega01()
    }

    pub fn alpha_b(&self) -> f64 {
        self.qubit_b.alpha()
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alpha_a() + self.alpha_b()
    }

    /// Effective splitting seen by the `(|01⟩, |10⟩)` pair: `α_a + Δ`.
    pub fn alpha_eff(&self) -> f64 {
        self.alpha_a() + self.delta
    }
}

/// Exact dressed couplings from charge matrix elements:
/// `r_i = (g_C/J) · ⟨bra|n̂_a n̂_b|ket⟩` for the three pairs.
pub fn dressed_couplings(device: &DeviceSpec) -> DressedCouplings {
    let na = device.qubit_a.n_op();
    let nb = device.qubit_b.n_op();
    let g = device.coupling_scale;
    DressedCouplings {
        r1: g * na[(0, 1)] * nb[(1, 0)],
        r2: g * na[(1, 0)] * nb[(1, 2)],
        r3: g * na[(1, 2)] * nb[(1, 0)],
        method: CouplingMethod::ExactMatrixElement,
    }
}

/// First-order perturbative dressed couplings, the validation oracle for
/// [`dressed_couplings`]. Accurate to `O(α²/ω²)`.
pub fn perturbative_couplings(device: &DeviceSpec) -> DressedCouplings {
    let (wa, aa) = (device.omega_a(), device.alpha_a());
    let (wb, ab) = (device.omega_b(), device.alpha_b());
    let sqrt2 = std::f64::consts::SQRT_2;
    let r1 = 1.0 + 2.0 * aa / (3.0 * (2.0 * wa + aa)) + 2.0 * ab / (3.0 * (2.0 * wb + ab));
    let r2 = sqrt2
        * (1.0 - ab / (3.0 * (2.0 * wb + ab))
            + 5.0 * ab / (2.0 * (2.0 * wb + 3.0 * ab))
            + 2.0 * aa / (3.0 * (2.0 * wa + aa)));
    let r3 = sqrt2
        * (1.0 - aa / (3.0 * (2.0 * wa + aa))
            + 5.0 * aa / (2.0 * (2.0 * wa + 3.0 * aa))
            + 2.0 * ab / (3.0 * (2.0 * wb + ab)));
    DressedCouplings { r1, r2, r3, method: CouplingMethod::FirstOrderPerturbative }
}

/// The full coupled Hamiltonian at coupling `J`, in the truncated product
/// eigenbasis with the ground energy at zero.
pub fn coupled_hamiltonian(device: &DeviceSpec, j: f64) -> Result<HermitianOperator> {
    let model = CoupledOperator::new(device);
    model.hamiltonian(j)
}

/// The six-level effective Hamiltonian at coupling `J`, basis
/// `(|00⟩, |01⟩, |10⟩, |02⟩, |11⟩, |20⟩)`.
pub fn effective_hamiltonian(device: &DeviceSpec, j: f64) -> HermitianOperator {
    let model = EffectiveOperator::new(device, false);
    HermitianOperator::from_real(&model.matrix(j)).expect("effective model is symmetric")
}

/// Schrieffer-Wolff reduction of the three-level subspace at couplings
/// `(J̃₂, J̃₃)`, using the device detuning Δ.
///
/// The generator solves `[S, H₀] = -V` exactly, giving
/// `a₁ = -J̃₂ s₂/den`, `a₂ = -J̃₂ J̃₃/den` with
/// `den = J̃₃² - s₁ s₂`, `s₁ = α_a+α_b+Δ`, `s₂ = α_a+α_b+2Δ`; the induced
/// corrections are `δΩ = J̃₂² s₂/den` and `δJ̃₃ = ½ J̃₂² J̃₃/den`, both
/// verified against exact second-order perturbation theory of the
/// three-level block.
pub fn sw_reduction(device: &DeviceSpec, j2: f64, j3: f64) -> Result<StarkShiftData> {
    let s1 = device.alpha_sum() + device.delta;
    let s2 = device.alpha_sum() + 2.0 * device.delta;
    let den = j3 * j3 - s1 * s2;
    if den.abs() < 1e-6 {
        return Err(Error::SwResonance { denominator: den });
    }
    Ok(StarkShiftData {
        delta_omega: j2 * j2 * s2 / den,
        delta_j3: 0.5 * j2 * j2 * j3 / den,
        a1: -j2 * s2 / den,
        a2: -j2 * j3 / den,
    })
}

/// The three-level subspace Hamiltonian in basis `(|02⟩, |11⟩, |20⟩)` with
/// the `|20⟩` energy shifted to zero.
pub fn s3_hamiltonian(device: &DeviceSpec, j2: f64, j3: f64) -> DMatrix<f64> {
    let s2 = device.alpha_sum() + 2.0 * device.delta;
    DMatrix::from_row_slice(3, 3, &[s2, j2, 0.0, j2, device.delta, j3, 0.0, j3, 0.0])
}

/// The Schrieffer-Wolff generator built from [`StarkShiftData`], same basis
/// as [`s3_hamiltonian`].
pub fn sw_generator(data: &StarkShiftData) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[0.0, data.a1, data.a2, -data.a1, 0.0, 0.0, -data.a2, 0.0, 0.0],
    )
}

/// The block-diagonalized three-level Hamiltonian: decoupled `|02⟩` plus the
/// Stark-shifted two-level block on `(|11⟩, |20⟩)`.
pub fn sw_effective_3x3(device: &DeviceSpec, j2: f64, j3: f64) -> Result<DMatrix<f64>> {
    let data = sw_reduction(device, j2, j3)?;
    let s2 = device.alpha_sum() + 2.0 * device.delta;
    Ok(DMatrix::from_row_slice(
        3,
        3,
        &[
            s2 - data.delta_omega, 0.0, 0.0,
            0.0, device.delta + data.delta_omega, j3 + data.delta_j3,
            0.0, j3 + data.delta_j3, 0.0,
        ],
    ))
}

/// One point of the full-vs-effective spectrum comparison.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumPoint {
    pub j: f64,
    /// Six lowest eigenvalues of the full coupled model, ascending.
    pub full: [f64; 6],
    /// Six eigenvalues of the effective model, ascending.
    pub effective: [f64; 6],
    /// Largest level deviation at this coupling.
    pub max_dev: f64,
}

/// Eigenvalues of both models over an inclusive grid of `n_points`
/// couplings spanning `[0, J_M]`.
pub fn spectrum_comparison(device: &DeviceSpec, n_points: usize) -> Result<Vec<SpectrumPoint>> {
    assert!(n_points >= 2);
    let full_model = CoupledOperator::new(device);
    let eff_model = EffectiveOperator::new(device, false);
    let mut points = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let j = device.j_max() * k as f64 / (n_points - 1) as f64;
        let (fv, _) = crate::operators::eig_real_symmetric(&full_model.real_matrix(j));
        let (ev, _) = crate::operators::eig_real_symmetric(&eff_model.matrix(j));
        let mut full = [0.0; 6];
        let mut effective = [0.0; 6];
        let mut max_dev: f64 = 0.0;
        for i in 0..6 {
            full[i] = fv[i];
            effective[i] = ev[i];
            max_dev = max_dev.max((fv[i] - ev[i]).abs());
        }
        points.push(SpectrumPoint { j, full, effective, max_dev });
    }
    Ok(points)
}

/// Matrix exponential of a small real matrix by scaled Taylor series; used
/// for the Schrieffer-Wolff frame `e^{±S}`.
pub fn expm_real(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let squarings = norm.log2().ceil().max(0.0) as u32;
    let scaled = m / 2f64.powi(squarings as i32);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled / k as f64;
        result += &term;
        if term.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Full-model operator `H(J) = H₀ + J · g_C/J · n̂_a ⊗ n̂_b` with fast
/// Kronecker-structured application for propagation.
pub struct CoupledOperator {
    levels: usize,
    diag: DVector<f64>,
    na_c: DMatrix<Complex64>,
    nb_c: DMatrix<Complex64>,
    scale: f64,
    j_max: f64,
}

impl CoupledOperator {
    pub fn new(device: &DeviceSpec) -> Self {
        let levels = device.levels_kept();
        let mut diag = DVector::zeros(levels * levels);
        for ia in 0..levels {
            for ib in 0..levels {
                diag[ia * levels + ib] = device.qubit_a.energies()[ia] + device.qubit_b.energies()[ib];
            }
        }
        Self {
            levels,
            diag,
            na_c: device.qubit_a.n_op().map(|x| Complex64::new(x, 0.0)),
            nb_c: device.qubit_b.n_op().map(|x| Complex64::new(x, 0.0)),
            scale: device.coupling_scale,
            j_max: device.j_max,
        }
    }

    pub fn dim(&self) -> usize {
        self.levels * self.levels
    }

    /// Product-basis positions of `(|00⟩, |01⟩, |10⟩, |11⟩)`.
    pub fn computational_indices(&self) -> [usize; 4] {
        [0, 1, self.levels, self.levels + 1]
    }

    /// Product-basis positions of the six effective-model states, in the
    /// effective ordering `(|00⟩, |01⟩, |10⟩, |02⟩, |11⟩, |20⟩)`.
    pub fn effective_state_indices(&self) -> [usize; 6] {
        let l = self.levels;
        [0, 1, l, 2, l + 1, 2 * l]
    }

    /// Dense Hamiltonian, checking `J ∈ [0, 1.5 J_M]`.
    pub fn hamiltonian(&self, j: f64) -> Result<HermitianOperator> {
        if !(0.0..=1.5 * self.j_max).contains(&j) {
            return Err(Error::InvalidConfig {
                reason: format!("coupling J = {j} rad/ns outside [0, 1.5 J_M]"),
            });
        }
        Ok(HermitianOperator::from_real(&self.real_matrix(j)).expect("symmetric by construction"))
    }

    pub(crate) fn real_matrix(&self, j: f64) -> DMatrix<f64> {
        let l = self.levels;
        let dim = l * l;
        let g = self.scale * j;
        let mut m = DMatrix::zeros(dim, dim);
        for ia in 0..l {
            for ka in 0..l {
                let na = self.na_c[(ia, ka)].re;
                if na == 0.0 && ia != ka {
                    continue;
                }
                for ib in 0..l {
                    for kb in 0..l {
                        let mut v = g * na * self.nb_c[(ib, kb)].re;
                        if ia == ka && ib == kb {
                            v += self.diag[ia * l + ib];
                        }
                        m[(ia * l + ib, ka * l + kb)] = v;
                    }
                }
            }
        }
        m
    }

    /// Hamiltonian drive wrapper for propagation.
    pub fn driven<'a, F: Fn(f64) -> f64 + Sync>(&'a self, drive: F) -> DrivenCoupled<'a, F> {
        DrivenCoupled { op: self, drive }
    }
}

/// Time-dependent full model `H(t) = H₀ + J(t)·(g_C/J)·n̂_a⊗n̂_b`.
pub struct DrivenCoupled<'a, F: Fn(f64) -> f64 + Sync> {
    op: &'a CoupledOperator,
    drive: F,
}

impl<'a, F: Fn(f64) -> f64 + Sync> TimeDependentHamiltonian for DrivenCoupled<'a, F> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn matrix_at(&self, t: f64) -> DMatrix<Complex64> {
        self.op.real_matrix((self.drive)(t)).map(|x| Complex64::new(x, 0.0))
    }

    fn schrodinger_rhs(&self, t: f64, cols: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let l = self.op.levels;
        let g = Complex64::new(self.op.scale * (self.drive)(t), 0.0);
        let minus_i = Complex64::new(0.0, -1.0);
        for (col, mut out_col) in cols.column_iter().zip(out.column_iter_mut()) {
            // column i·L+j of the product basis read as an L×L matrix lets
            // the Kronecker product act as nb · M · naᵀ
            let mt: DMatrixView<Complex64> = DMatrixView::from_slice(col.as_slice(), l, l);
            let y = &self.op.nb_c * mt * self.op.na_c.transpose();
            for (k, ((o, x), yk)) in out_col
                .iter_mut()
                .zip(col.iter())
                .zip(y.as_slice().iter())
                .enumerate()
            {
                *o = minus_i * (self.op.diag[k] * x + g * yk);
            }
        }
    }
}

/// Six-level effective model `H(J)`; with `drop_s3_leak = true` the
/// `J̃₂`-coupling to `|02⟩` is removed, giving the block-factorized model in
/// which the gate design is exact.
pub struct EffectiveOperator {
    diag: DVector<f64>,
    r: [f64; 3],
}

impl EffectiveOperator {
    pub fn new(device: &DeviceSpec, drop_s3_leak: bool) -> Self {
        let (wa, aa) = (device.omega_a(), device.alpha_a());
        let (wb, ab) = (device.omega_b(), device.alpha_b());
        let d = device.dressed();
        Self {
            diag: DVector::from_vec(vec![
                0.0,
                wb,
                wa,
                2.0 * wb + ab,
                wa + wb,
                2.0 * wa + aa,
            ]),
            r: [d.r1, if drop_s3_leak { 0.0 } else { d.r2 }, d.r3],
        }
    }

    pub fn dim(&self) -> usize {
        6
    }

    pub fn computational_indices(&self) -> [usize; 4] {
        [0, 1, 2, 4]
    }

    pub fn matrix(&self, j: f64) -> DMatrix<f64> {
        let mut m = DMatrix::from_diagonal(&self.diag);
        m[(1, 2)] = self.r[0] * j;
        m[(2, 1)] = self.r[0] * j;
        m[(3, 4)] = self.r[1] * j;
        m[(4, 3)] = self.r[1] * j;
        m[(4, 5)] = self.r[2] * j;
        m[(5, 4)] = self.r[2] * j;
        m
    }

    pub fn driven<'a, F: Fn(f64) -> f64 + Sync>(&'a self, drive: F) -> DrivenEffective<'a, F> {
        DrivenEffective { op: self, drive }
    }
}

/// Time-dependent six-level model.
pub struct DrivenEffective<'a, F: Fn(f64) -> f64 + Sync> {
    op: &'a EffectiveOperator,
    drive: F,
}

impl<'a, F: Fn(f64) -> f64 + Sync> TimeDependentHamiltonian for DrivenEffective<'a, F> {
    fn dim(&self) -> usize {
        6
    }

    fn matrix_at(&self, t: f64) -> DMatrix<Complex64> {
        self.op.matrix((self.drive)(t)).map(|x| Complex64::new(x, 0.0))
    }

    fn schrodinger_rhs(&self, t: f64, cols: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let j = (self.drive)(t);
        let minus_i = Complex64::new(0.0, -1.0);
        let [r1, r2, r3] = self.op.r;
        let d = &self.op.diag;
        for (x, mut o) in cols.column_iter().zip(out.column_iter_mut()) {
            o[0] = minus_i * d[0] * x[0];
            o[1] = minus_i * (d[1] * x[1] + r1 * j * x[2]);
            o[2] = minus_i * (d[2] * x[2] + r1 * j * x[1]);
            o[3] = minus_i * (d[3] * x[3] + r2 * j * x[4]);
            o[4] = minus_i * (d[4] * x[4] + r2 * j * x[3] + r3 * j * x[5]);
            o[5] = minus_i * (d[5] * x[5] + r3 * j * x[4]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ghz, mhz, to_mhz};

    fn standard_device() -> DeviceSpec {
        DeviceSpec::calibrate(&DeviceParams::standard()).unwrap()
    }

    /// Plain cyclic Jacobi eigensolver; independent of the nalgebra path,
    /// used as the brute-force oracle for eigenvalues and matrix elements.
    fn jacobi_eig(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
        let n = m.nrows();
        let mut a = m.clone();
        let mut v = DMatrix::<f64>::identity(n, n);
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[(p, q)].abs() < 1e-30 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut vals: Vec<(f64, usize)> = (0..n).map(|i| (a[(i, i)], i)).collect();
        vals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut vecs = DMatrix::zeros(n, n);
        for (k, &(_, i)) in vals.iter().enumerate() {
            vecs.column_mut(k).copy_from(&v.column(i));
        }
        (vals.into_iter().map(|(x, _)| x).collect(), vecs)
    }

    #[test]
    fn uncoupled_levels_are_bare_sums() {
        let dev = standard_device();
        let h = coupled_hamiltonian(&dev, 0.0).unwrap();
        let (vals, _) = crate::operators::eig_hermitian(&h);
        let (wa, aa) = (dev.omega_a(), dev.alpha_a());
        let (wb, ab) = (dev.omega_b(), dev.alpha_b());
        let mut expect = [0.0, wb, wa, 2.0 * wb + ab, wa + wb, 2.0 * wa + aa];
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, &e) in expect.iter().enumerate() {
            assert!((vals[k] - e).abs() < 1e-9, "level {k}: {} vs {e}", vals[k]);
        }
        // resonance at Δ ≈ 0 makes |11⟩ and |20⟩ degenerate
        assert!((vals[4] - vals[5]).abs() < ghz(2e-4));
    }

    #[test]
    fn effective_diag_and_blocks() {
        let dev = standard_device();
        let h = effective_hamiltonian(&dev, 0.0);
        let m = h.matrix();
        let expect = [
            0.0,
            dev.omega_b(),
            dev.omega_a(),
            2.0 * dev.omega_b() + dev.alpha_b(),
            dev.omega_a() + dev.omega_b(),
            2.0 * dev.omega_a() + dev.alpha_a(),
        ];
        for (k, &e) in expect.iter().enumerate() {
            assert!((m[(k, k)].re - e).abs() < 1e-10);
        }
        // Δ = 0 (within calibration tolerance): both S₃ outer energies equal Ω₁
        assert!((m[(4, 4)].re - m[(5, 5)].re).abs() < ghz(2e-4));

        // cross-subspace entries are identically zero for any J
        let m = effective_hamiltonian(&dev, dev.j_max()).into_matrix();
        let blocks = [vec![0usize], vec![1, 2], vec![3, 4, 5]];
        for (bi, rows) in blocks.iter().enumerate() {
            for (bj, cols) in blocks.iter().enumerate() {
                if bi == bj {
                    continue;
                }
                for &r in rows {
                    for &c in cols {
                        assert_eq!(m[(r, c)], Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn coupling_bounds_enforced() {
        let dev = standard_device();
        assert!(coupled_hamiltonian(&dev, 1.6 * dev.j_max()).is_err());
        assert!(coupled_hamiltonian(&dev, -0.1).is_err());
    }

    #[test]
    fn dressed_couplings_against_perturbative() {
        let dev = standard_device();
        let exact = dressed_couplings(&dev);
        let pert = perturbative_couplings(&dev);
        // first-order corrections represent 5-10% of the bare coupling and
        // the two routes agree within 10% relative
        for (e, p) in [(exact.r1, pert.r1), (exact.r2, pert.r2), (exact.r3, pert.r3)] {
            assert!((e - p).abs() / e.abs() < 0.10, "exact {e} vs perturbative {p}");
        }
        assert!(exact.r1 < 1.0 && exact.r1 > 0.9);
        let sqrt2 = std::f64::consts::SQRT_2;
        assert!(exact.r2 < sqrt2 && exact.r3 < sqrt2);
    }

    #[test]
    fn dressed_couplings_harmonic_limit() {
        // inflating E_J/E_C pushes the matrix elements to the oscillator
        // values: r1 → 1, r2 = r3 → √2
        let params = DeviceParams {
            omega_a: ghz(6.0),
            alpha_a: -ghz(0.004),
            omega_b: ghz(5.998),
            alpha_b: -ghz(0.004),
            j_max: mhz(16.0),
            charge_cutoff: 90,
            levels_kept: 5,
        };
        let qa = calibrate_transmon(params.omega_a, params.alpha_a, 90, 5).unwrap();
        let qb = calibrate_transmon(params.omega_b, params.alpha_b, 90, 5).unwrap();
        let coupling_scale =
            2.0 * (qa.e_j() * qb.e_j() / (64.0 * qa.e_c() * qb.e_c())).powf(-0.25);
        let g = coupling_scale;
        let r1 = g * qa.n_op()[(0, 1)] * qb.n_op()[(1, 0)];
        let r2 = g * qa.n_op()[(1, 0)] * qb.n_op()[(1, 2)];
        let r3 = g * qa.n_op()[(1, 2)] * qb.n_op()[(1, 0)];
        let sqrt2 = std::f64::consts::SQRT_2;
        assert!((r1 - 1.0).abs() < 0.01, "r1 {r1}");
        assert!((r2 - sqrt2).abs() < 0.01, "r2 {r2}");
        assert!((r3 - sqrt2).abs() < 0.01, "r3 {r3}");
    }

    #[test]
    fn dressed_couplings_against_jacobi_oracle() {
        // recompute ⟨1|n̂|0⟩, ⟨1|n̂|2⟩ with an independent eigensolver
        let dev = standard_device();
        let exact = dressed_couplings(&dev);
        let mut oracle_r = [0.0; 3];
        let elems = |spec: &TransmonSpec| -> (f64, f64) {
            let m = crate::transmon::charge_basis_matrix(spec.e_c(), spec.e_j(), spec.charge_cutoff());
            let (_, vecs) = jacobi_eig(&m);
            let dim = m.nrows();
            let cutoff = spec.charge_cutoff() as f64;
            let elem = |i: usize, j: usize| -> f64 {
                (0..dim).map(|k| vecs[(k, i)] * (k as f64 - cutoff) * vecs[(k, j)]).sum()
            };
            (elem(0, 1).abs(), elem(1, 2).abs())
        };
        let (na01, na12) = elems(dev.qubit_a());
        let (nb01, nb12) = elems(dev.qubit_b());
        oracle_r[0] = dev.coupling_scale() * na01 * nb01;
        oracle_r[1] = dev.coupling_scale() * na01 * nb12;
        oracle_r[2] = dev.coupling_scale() * na12 * nb01;
        assert!((exact.r1.abs() - oracle_r[0]).abs() < 1e-8);
        assert!((exact.r2.abs() - oracle_r[1]).abs() < 1e-8);
        assert!((exact.r3.abs() - oracle_r[2]).abs() < 1e-8);
    }

    #[test]
    fn effective_vs_full_spectrum_deviation() {
        // six lowest levels of the full model track the effective model over
        // the whole coupling range to well below 2π×1 MHz
        let dev = standard_device();
        let points = spectrum_comparison(&dev, 21).unwrap();
        let max_dev = points.iter().map(|p| p.max_dev).fold(0.0, f64::max);
        assert!(max_dev < mhz(1.0), "max deviation 2π×{:.4} MHz", to_mhz(max_dev));
        // both models coincide exactly at J = 0
        assert!(points[0].max_dev < ghz(2e-9));
    }

    #[test]
    fn effective_eigenvalues_against_jacobi_oracle() {
        // six-level model at maximum coupling: eigenvalues cross-checked
        // with the independent Jacobi solver
        let dev = standard_device();
        let m = effective_hamiltonian(&dev, dev.j_max()).into_matrix().map(|z| z.re);
        let (oracle, _) = jacobi_eig(&m);
        let (vals, _) = crate::operators::eig_real_symmetric(&m);
        for k in 0..6 {
            assert!((vals[k] - oracle[k]).abs() < 1e-10 * ghz(12.0), "level {k}");
        }
    }

    #[test]
    fn avoided_crossing_splitting() {
        let dev = standard_device();
        let h = coupled_hamiltonian(&dev, dev.j_max()).unwrap();
        let (vals, _) = crate::operators::eig_hermitian(&h);
        let j3 = dev.dressed().r3 * dev.j_max();
        let split = vals[5] - vals[4];
        assert!((split - 2.0 * j3).abs() / (2.0 * j3) < 0.05, "split {} vs 2J̃₃ {}", split, 2.0 * j3);
    }

    #[test]
    fn s3_gap_matches_stark_corrected_coupling() {
        // at Δ = 0 the dressed |11⟩/|20⟩ gap of the three-level block equals
        // 2(J̃₃ + δJ̃₃) up to O(δΩ²/J̃₃)
        let dev = standard_device();
        let d = dev.dressed();
        let (j2, j3) = (d.r2 * dev.j_max(), d.r3 * dev.j_max());
        let h3 = s3_hamiltonian(&dev, j2, j3);
        let (vals, _) = crate::operators::eig_real_symmetric(&h3);
        let sw = sw_reduction(&dev, j2, j3).unwrap();
        // the two dressed levels bracket zero; |02⟩ sits far below at αΣ
        let gap = vals[2] - vals[1];
        let expect = 2.0 * (j3 + sw.delta_j3);
        let den = j3 * j3 - (dev.alpha_sum() + dev.delta()) * (dev.alpha_sum() + 2.0 * dev.delta());
        // SW truncation accuracy O(J̃₂³/gap²) plus the δΩ² gap broadening
        let budget = j2.powi(3) / den.abs() + 4.0 * dev.delta().abs() + 1e-7;
        assert!((gap - expect).abs() < budget, "gap {} vs {} (budget {budget:.3e})", gap, expect);
    }

    #[test]
    fn sw_reduction_values() {
        // Δ = 0, J̃₂ = J̃₃ = 2π×0.0226 rad/ns, α_a + α_b = −2π×0.66:
        // δΩ ≈ +2π×0.7748 MHz and |δJ̃₃| ≈ 2π×0.013266 MHz. The sign of
        // δJ̃₃ is negative: the exact |11⟩/|20⟩ gap of the three-level block
        // is *smaller* than 2J̃₃ (second-order level repulsion from |02⟩
        // pushes the upper dressed state down harder).
        let dev = standard_device();
        let j = ghz(0.0226);
        let sw = sw_reduction(&dev, j, j).unwrap();
        assert!((to_mhz(sw.delta_omega) - 0.7748).abs() < 2e-3, "δΩ = 2π×{} MHz", to_mhz(sw.delta_omega));
        assert!((to_mhz(sw.delta_j3) + 0.013266).abs() < 5e-5, "δJ̃₃ = 2π×{} MHz", to_mhz(sw.delta_j3));
        assert!(sw.delta_omega > 0.0);

        // both corrections vanish with the |02⟩ coupling
        let sw0 = sw_reduction(&dev, 0.0, j).unwrap();
        assert_eq!(sw0.delta_omega, 0.0);
        assert_eq!(sw0.delta_j3, 0.0);
        assert_eq!(sw0.a1, 0.0);
        assert_eq!(sw0.a2, 0.0);

        // sign of δΩ follows J̃₂²(α_a+α_b+2Δ)/denominator
        let s2 = dev.alpha_sum() + 2.0 * dev.delta();
        let den = j * j - (dev.alpha_sum() + dev.delta()) * s2;
        assert_eq!(sw.delta_omega.signum(), (s2 / den).signum());
    }

    #[test]
    fn sw_resonance_rejected() {
        let dev = standard_device();
        let s1 = dev.alpha_sum() + dev.delta();
        let s2 = dev.alpha_sum() + 2.0 * dev.delta();
        let j3 = (s1 * s2).sqrt();
        match sw_reduction(&dev, ghz(0.02), j3) {
            Err(Error::SwResonance { .. }) => {}
            other => panic!("expected SwResonance, got {other:?}"),
        }
    }

    #[test]
    fn sw_two_level_propagation_tracks_three_level() {
        // propagate |11⟩ under the constant 3×3 block and under the
        // Schrieffer-Wolff factorization e^{-S} e^{-iH't} e^{S}; populations
        // agree to the SW truncation error
        let dev = standard_device();
        let d = dev.dressed();
        let (j2, j3) = (d.r2 * dev.j_max(), d.r3 * dev.j_max());
        let h3 = s3_hamiltonian(&dev, j2, j3);
        let heff = sw_effective_3x3(&dev, j2, j3).unwrap();
        let s = sw_generator(&sw_reduction(&dev, j2, j3).unwrap());
        let es = expm_real(&s);
        let esm = expm_real(&(-&s));
        let period = std::f64::consts::PI / j3;
        let (v3, w3) = crate::operators::eig_real_symmetric(&h3);
        let (ve, we) = crate::operators::eig_real_symmetric(&heff);
        let mut worst: f64 = 0.0;
        for k in 0..=200 {
            let t = period * k as f64 / 200.0;
            let u3 = propagator_from_eig(&v3, &w3, t);
            let ue = propagator_from_eig(&ve, &we, t);
            let esm_c = esm.map(|x| Complex64::new(x, 0.0));
            let es_c = es.map(|x| Complex64::new(x, 0.0));
            let usw = esm_c * ue * es_c;
            let p3 = u3[(1, 1)].norm_sqr();
            let psw = usw[(1, 1)].norm_sqr();
            worst = worst.max((p3 - psw).abs());
        }
        assert!(worst < 1e-3, "worst population deviation {worst:.3e}");

        // without the frame transform the |02⟩ admixture shows up as a fast
        // population wiggle of a few times 1e-3
        let mut bare: f64 = 0.0;
        for k in 0..=200 {
            let t = period * k as f64 / 200.0;
            let u3 = propagator_from_eig(&v3, &w3, t);
            let ue = propagator_from_eig(&ve, &we, t);
            bare = bare.max((u3[(1, 1)].norm_sqr() - ue[(1, 1)].norm_sqr()).abs());
        }
        assert!(bare > 1e-3, "bare-frame deviation unexpectedly small: {bare:.3e}");
    }

    fn propagator_from_eig(vals: &DVector<f64>, vecs: &DMatrix<f64>, t: f64) -> DMatrix<Complex64> {
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            vals.len(),
            vals.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
        ));
        let v = vecs.map(|x| Complex64::new(x, 0.0));
        &v * phases * v.transpose()
    }

    #[test]
    fn truncation_failure_detected() {
        let params = DeviceParams { levels_kept: 3, ..DeviceParams::standard() };
        match DeviceSpec::calibrate(&params) {
            Err(Error::TruncationNotConverged { sensitivity }) => {
                assert!(sensitivity > TRUNCATION_SENSITIVITY);
            }
            other => panic!("expected TruncationNotConverged, got {other:?}"),
        }
    }

    #[test]
    fn truncation_monotone_convergence() {
        let dev = standard_device();
        let e6 = dev.six_lowest_coupled(dev.j_max(), 6).unwrap();
        let e8 = dev.six_lowest_coupled(dev.j_max(), 8).unwrap();
        let e10 = dev.six_lowest_coupled(dev.j_max(), 10).unwrap();
        let d1 = (e6 - &e8).abs().max();
        let d2 = (e8 - e10).abs().max();
        assert!(d2 < d1, "sensitivities {d1:.3e} then {d2:.3e} should shrink");
    }

    #[test]
    fn driven_rhs_matches_dense_matrix() {
        let dev = standard_device();
        let model = CoupledOperator::new(&dev);
        let driven = model.driven(|t: f64| dev.j_max() * (0.5 + 0.3 * (t).sin()));
        let dim = model.dim();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let cols = DMatrix::from_fn(dim, 2, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let mut fast = DMatrix::zeros(dim, 2);
        driven.schrodinger_rhs(1.3, &cols, &mut fast);
        let dense = driven.matrix_at(1.3);
        let slow = &dense * &cols * Complex64::new(0.0, -1.0);
        let dev_max = (&fast - &slow).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev_max < 1e-12 * dense.iter().map(|z| z.norm()).fold(0.0, f64::max), "deviation {dev_max:.3e}");
    }

    #[test]
    fn detuned_device_recalibration() {
        let dev = standard_device();
        let delta = mhz(0.8);
        let moved = dev.with_detuning(delta).unwrap();
        assert!((moved.delta() - delta).abs() < ghz(1e-6));
        assert!((moved.omega_b() - (dev.omega_a() + dev.alpha_a() + delta)).abs() < ghz(1e-6));
        // α_b target unchanged
        assert!((moved.alpha_b() - dev.alpha_b()).abs() < ghz(2e-4));
    }
}
