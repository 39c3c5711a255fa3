//! Time-dependent Schrödinger propagation.
//!
//! Two interchangeable backends solve `i dψ/dt = H(t) ψ`:
//!
//! - an adaptive embedded Runge-Kutta integrator of order 9(8) (Verner's
//!   efficient pair), the default, and
//! - a piecewise-exponential propagator that diagonalizes `H` at each slice
//!   midpoint; slower, but structurally independent of the integrator, so it
//!   doubles as a cross-check oracle.
//!
//! Both preserve the norm to the requested tolerance; neither renormalizes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::StateVector;

/// Propagation backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Adaptive embedded Runge-Kutta, order 9(8).
    Adaptive,
    /// Midpoint matrix exponentials on fixed slices of width `max_step`.
    PiecewiseExponential,
}

/// Tolerances and stepping limits for [`propagate`] and friends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    /// Absolute amplitude tolerance, in `(0, 1e-6]`.
    pub abs_tol: f64,
    /// Relative amplitude tolerance, in `(0, 1e-6]`.
    pub rel_tol: f64,
    /// Largest accepted step (adaptive) or slice width (piecewise), ns.
    pub max_step: f64,
    pub method: Method,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_step: 0.5,
            method: Method::Adaptive,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| t > 0.0 && t <= 1e-6;
        if !ok(self.abs_tol) || !ok(self.rel_tol) {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "tolerances must lie in (0, 1e-6], got abs {} rel {}",
                    self.abs_tol, self.rel_tol
                ),
            });
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidConfig {
                reason: format!("max_step must be positive, got {}", self.max_step),
            });
        }
        Ok(())
    }
}

/// A time-dependent Hermitian generator `H(t)`.
///
/// Implementors provide the dense matrix; performance-critical models
/// override [`schrodinger_rhs`](TimeDependentHamiltonian::schrodinger_rhs)
/// with a structured product.
pub trait TimeDependentHamiltonian: Sync {
    fn dim(&self) -> usize;

    /// The dense matrix of `H(t)` in rad/ns.
    fn matrix_at(&self, t: f64) -> DMatrix<Complex64>;

    /// Writes `out = -i H(t) cols`, one column per propagated state.
    fn schrodinger_rhs(&self, t: f64, cols: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let h = self.matrix_at(t);
        out.gemm(Complex64::new(0.0, -1.0), &h, cols, Complex64::new(0.0, 0.0));
    }
}

/// Wraps a closure `t -> H(t)` as a [`TimeDependentHamiltonian`].
pub struct MatrixFn<F: Fn(f64) -> DMatrix<Complex64> + Sync> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64) -> DMatrix<Complex64> + Sync> MatrixFn<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64) -> DMatrix<Complex64> + Sync> TimeDependentHamiltonian for MatrixFn<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn matrix_at(&self, t: f64) -> DMatrix<Complex64> {
        (self.f)(t)
    }
}

/// Propagates `ψ0` from `t0` to `t1 >= t0` under `H(t)`.
pub fn propagate(
    h: &dyn TimeDependentHamiltonian,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    cfg: &PropagationConfig,
) -> Result<StateVector> {
    cfg.validate()?;
    if t1 < t0 {
        return Err(Error::InvalidConfig {
            reason: format!("propagate requires t1 >= t0, got [{t0}, {t1}]"),
        });
    }
    let cols = DMatrix::from_columns(&[psi0.amplitudes().clone()]);
    let out = evolve_columns(h, cols, t0, t1, cfg)?;
    StateVector::new(out.column(0).into_owned())
        .map_err(|e| e.in_context(format!("norm check after propagation over [{t0}, {t1}] ns")))
}

/// The full propagator matrix `U(t1 <- t0)`; column `i` is the evolution of
/// basis state `i`. Unitary within integrator tolerance.
pub fn propagator_matrix(
    h: &dyn TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    cfg: &PropagationConfig,
) -> Result<DMatrix<Complex64>> {
    cfg.validate()?;
    if t1 < t0 {
        return Err(Error::InvalidConfig {
            reason: format!("propagator_matrix requires t1 >= t0, got [{t0}, {t1}]"),
        });
    }
    let eye = DMatrix::identity(h.dim(), h.dim());
    evolve_columns(h, eye, t0, t1, cfg)
}

/// Evolves a block of column states from `t0` to `t1` (either direction).
pub(crate) fn evolve_columns(
    h: &dyn TimeDependentHamiltonian,
    cols: DMatrix<Complex64>,
    t0: f64,
    t1: f64,
    cfg: &PropagationConfig,
) -> Result<DMatrix<Complex64>> {
    if t0 == t1 {
        return Ok(cols);
    }
    match cfg.method {
        Method::Adaptive => rk98_adaptive(h, cols, t0, t1, cfg),
        Method::PiecewiseExponential => Ok(piecewise_exponential(h, cols, t0, t1, cfg.max_step)),
    }
}

/// Applies `exp(-i H dt)` to each column given a precomputed Hermitian
/// eigensystem.
pub(crate) fn apply_eig_exponential(
    vals: &DVector<f64>,
    vecs: &DMatrix<Complex64>,
    cols: &DMatrix<Complex64>,
    dt: f64,
) -> DMatrix<Complex64> {
    let mut proj = vecs.adjoint() * cols;
    for mut col in proj.column_iter_mut() {
        for (k, amp) in col.iter_mut().enumerate() {
            *amp *= Complex64::from_polar(1.0, -vals[k] * dt);
        }
    }
    vecs * proj
}

fn piecewise_exponential(
    h: &dyn TimeDependentHamiltonian,
    mut cols: DMatrix<Complex64>,
    t0: f64,
    t1: f64,
    max_step: f64,
) -> DMatrix<Complex64> {
    let span = t1 - t0;
    let n = (span.abs() / max_step).ceil().max(1.0) as usize;
    let dt = span / n as f64;
    for k in 0..n {
        let tm = t0 + (k as f64 + 0.5) * dt;
        let m = h.matrix_at(tm);
        let es = nalgebra::SymmetricEigen::new(m);
        cols = apply_eig_exponential(&es.eigenvalues, &es.eigenvectors, &cols, dt);
    }
    cols
}

// Verner's "efficient" embedded pair of orders 9 and 8, 16 stages.
const STAGES: usize = 16;

#[rustfmt::skip]
const RK_C: [f64; STAGES] = [
    0.0,
    0.3571e-1,
    9.906_028_091_267_415e-2,
    0.148_590_421_369_011_2,
    0.6134,
    0.232_735_947_360_562_7,
    0.553_864_052_639_437_3,
    0.6555,
    0.491625,
    0.6858e-1,
    0.253,
    0.662_064_179_541_204_6,
    0.8309,
    0.8998,
    1.0,
    1.0,
];

#[rustfmt::skip]
const RK_A: [[f64; STAGES]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.3571e-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-3.833_735_636_677_017e-2, 0.137_397_637_279_444_32, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.714_760_534_225_28e-2, 0.0, 0.111_442_816_026_758_42, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.674_764_429_871_505, 0.0, -9.982_382_134_885_293, 7.921_017_705_013_789, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.242_104_050_577_351e-2, 0.0, 0.0, 0.179_691_118_917_595_32, 6.237_879_371_938_568e-4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.159_249_222_364_763_22, 0.0, 0.0, -0.429_842_987_724_108_7, 6.665_266_542_726_088e-2, 0.757_805_152_571_522, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [7.283_333_333_333_333e-2, 0.0, 0.0, 0.0, 0.0, 0.335_934_459_066_510_37, 0.246_732_207_600_156_3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.729755859375e-1, 0.0, 0.0, 0.0, 0.0, 0.334_800_972_969_933_33, 0.118_415_823_905_066_65, -0.345673828125e-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [4.911_213_663_452_096_4e-2, 0.0, 0.0, 0.0, 0.0, 3.983_857_361_308_652e-2, 0.106_967_528_893_935_49, -2.174_259_165_458_647_7e-2, -0.105_595_647_486_956_49, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-2.707_988_818_641_280_5e-2, 0.0, 0.0, 0.0, 0.0, 0.333e-1, -0.164_552_607_003_605_72, 3.428_266_306_497_39e-2, 0.158_526_406_443_922_1, 0.218_523_425_681_122_5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.584_657_769_108_862_5e-2, 0.0, 0.0, 0.0, 0.0, 9.166_533_166_672_539e-2, 0.239_239_965_552_362_7, 1.023_834_712_248_415e-2, -2.679_331_322_859_542_6e-3, 4.235_624_181_474_284_5e-2, 0.225_397_047_016_660_4, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-0.480_251_051_272_519_6, 0.0, 0.0, 0.0, 0.0, -6.359_610_162_555_930_5, -0.276_231_389_804_084_1, -6.500_796_633_979_847, 0.573_476_587_704_095_7, 1.347_125_994_868_138_9, 5.936_840_409_706_221, 6.590_346_245_333_925, 0.0, 0.0, 0.0, 0.0],
    [0.330_753_306_767_140_1, 0.0, 0.0, 0.0, 0.0, 5.956_207_776_829_962, -0.486_831_640_048_152_77, 4.462_055_288_206_771, 0.741_025_823_144_207_2, -0.711_819_203_457_591_3, -5.454_619_594_516_665, -4.140_803_729_244_71, 0.203_831_972_319_038_66, 0.0, 0.0, 0.0],
    [-0.584_711_112_299_894_5, 0.0, 0.0, 0.0, 0.0, -12.412_684_171_162_67, 1.360_245_445_660_928, -22.426_105_311_118_683, -0.882_885_705_586_545_8, 1.770_155_128_538_230_4, 12.158_096_519_185_339, 22.230_375_204_077_607, -0.663_448_376_020_124_9, 0.450_962_378_725_813_74, 0.0, 0.0],
    [1.940_575_549_810_648_7, 0.0, 0.0, 0.0, 0.0, 21.977_984_081_145_564, 0.823_074_732_698_472_9, 68.164_416_836_263_54, -3.117_097_463_620_267, -4.568_841_021_822_44, -18.741_909_871_262_65, -66.577_118_396_378_32, 1.098_915_553_165_441_8, 0.0, 0.0, 0.0],
];

#[rustfmt::skip]
const RK_B9: [f64; STAGES] = [
    1.500_669_014_979_724_7e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    -1.055_180_992_746_381_3, 0.238_494_726_378_218_3, 0.128_815_177_428_299_15,
    0.227_662_311_104_621_57, 1.229_532_587_437_517_4, 4.624_976_662_810_384e-2,
    0.138_619_631_936_629_38, 3.080_010_168_319_435_5e-2, 0.0,
];

#[rustfmt::skip]
const RK_B8: [f64; STAGES] = [
    1.897_210_532_481_101_4e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    3.408_110_314_549_493_8, 0.126_032_388_382_092_1, 0.118_837_506_345_114_97,
    0.249_104_199_783_868_75, -3.269_966_219_928_978_3, 0.302_379_810_022_888_3,
    0.0, 0.0, 4.652_989_552_070_924e-2,
];

fn axpy_mat(y: &mut DMatrix<Complex64>, a: f64, x: &DMatrix<Complex64>) {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += xi * a;
    }
}

fn rk98_adaptive(
    h: &dyn TimeDependentHamiltonian,
    mut y: DMatrix<Complex64>,
    t0: f64,
    t1: f64,
    cfg: &PropagationConfig,
) -> Result<DMatrix<Complex64>> {
    let span = t1 - t0;
    let dir = span.signum();
    let (nrows, ncols) = (y.nrows(), y.ncols());
    let mut k: Vec<DMatrix<Complex64>> = (0..STAGES).map(|_| DMatrix::zeros(nrows, ncols)).collect();
    let mut ytmp = DMatrix::zeros(nrows, ncols);
    let mut ynew = DMatrix::zeros(nrows, ncols);
    let mut yerr = DMatrix::zeros(nrows, ncols);
    let db: Vec<f64> = RK_B9.iter().zip(RK_B8.iter()).map(|(a, b)| a - b).collect();

    let mut t = t0;
    let mut dt = dir * span.abs().min(cfg.max_step).min(5e-2);
    let min_dt = 1e-14 * t0.abs().max(t1.abs()).max(1.0);

    loop {
        let remaining = t1 - t;
        if remaining == 0.0 || remaining.abs() <= min_dt {
            return Ok(y);
        }
        if dt.abs() > remaining.abs() {
            dt = remaining;
        }
        if dt.abs() < min_dt {
            return Err(Error::StepSizeUnderflow { t });
        }

        // stages
        h.schrodinger_rhs(t, &y, &mut k[0]);
        for i in 1..STAGES {
            ytmp.copy_from(&y);
            for j in 0..i {
                let a = RK_A[i][j];
                if a != 0.0 {
                    axpy_mat(&mut ytmp, dt * a, &k[j]);
                }
            }
            h.schrodinger_rhs(t + RK_C[i] * dt, &ytmp, &mut k[i]);
        }

        // 9th-order solution and embedded error estimate
        ynew.copy_from(&y);
        yerr.fill(Complex64::new(0.0, 0.0));
        for i in 0..STAGES {
            if RK_B9[i] != 0.0 {
                axpy_mat(&mut ynew, dt * RK_B9[i], &k[i]);
            }
            if db[i] != 0.0 {
                axpy_mat(&mut yerr, dt * db[i], &k[i]);
            }
        }

        let mut sum_sq = 0.0;
        for ((e, yo), yn) in yerr.iter().zip(y.iter()).zip(ynew.iter()) {
            let scale = cfg.abs_tol + cfg.rel_tol * yo.norm().max(yn.norm());
            let r = e.norm() / scale;
            sum_sq += r * r;
        }
        let err = (sum_sq / (nrows * ncols) as f64).sqrt();

        if err.is_finite() && err <= 1.0 {
            t += dt;
            std::mem::swap(&mut y, &mut ynew);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-1.0 / 9.0)).clamp(0.2, 5.0) };
            dt = dir * (dt.abs() * factor).min(cfg.max_step);
        } else {
            let factor = if err.is_finite() { (0.9 * err.powf(-1.0 / 9.0)).clamp(0.1, 0.9) } else { 0.25 };
            dt *= factor;
        }
    }
}

#[cfg(test)]
fn rk98_fixed_steps(
    h: &dyn TimeDependentHamiltonian,
    mut y: DMatrix<Complex64>,
    t0: f64,
    t1: f64,
    n: usize,
) -> DMatrix<Complex64> {
    let dt = (t1 - t0) / n as f64;
    let (nrows, ncols) = (y.nrows(), y.ncols());
    let mut k: Vec<DMatrix<Complex64>> = (0..STAGES).map(|_| DMatrix::zeros(nrows, ncols)).collect();
    let mut ytmp = DMatrix::zeros(nrows, ncols);
    for step in 0..n {
        let t = t0 + step as f64 * dt;
        h.schrodinger_rhs(t, &y, &mut k[0]);
        for i in 1..STAGES {
            ytmp.copy_from(&y);
            for j in 0..i {
                if RK_A[i][j] != 0.0 {
                    axpy_mat(&mut ytmp, dt * RK_A[i][j], &k[j]);
                }
            }
            h.schrodinger_rhs(t + RK_C[i] * dt, &ytmp, &mut k[i]);
        }
        for i in 0..STAGES {
            if RK_B9[i] != 0.0 {
                axpy_mat(&mut y, dt * RK_B9[i], &k[i]);
            }
        }
    }
    y
}
