//! Dense Hermitian operators, normalized state vectors and the Hermitian
//! eigensolver everything else is built on.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance on `|H - H†|` accepted at construction.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// A dense Hermitian operator. Entries are angular frequencies in rad/ns.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<Complex64>,
}

impl HermitianOperator {
    /// Validates Hermiticity (`|H - H†| <= 1e-12 · max|H|` elementwise) and
    /// wraps the matrix. Rejects non-square or empty input.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidConfig {
                reason: format!("operator must be square and non-empty, got {}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        let n = matrix.nrows();
        let mut scale: f64 = 0.0;
        let mut asym: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                scale = scale.max(matrix[(i, j)].norm());
                let d = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                asym = asym.max(d);
            }
        }
        if asym > HERMITICITY_TOL * scale.max(1.0) {
            return Err(Error::NonHermitian { max_asymmetry: asym });
        }
        Ok(Self { matrix })
    }

    /// Builds from a real symmetric matrix.
    pub fn from_real(matrix: &DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|x| Complex64::new(x, 0.0)))
    }

    /// Builds a diagonal operator from real entries.
    pub fn from_diagonal(diag: &DVector<f64>) -> Self {
        Self {
            matrix: DMatrix::from_diagonal(&diag.map(|x| Complex64::new(x, 0.0))),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    /// Largest entry magnitude; used for scale-relative tolerances.
    pub fn max_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Eigendecomposition of a Hermitian operator.
///
/// Returns eigenvalues in ascending order and the matching unitary of column
/// eigenvectors, so `H V = V diag(λ)`.
pub fn eig_hermitian(op: &HermitianOperator) -> (DVector<f64>, DMatrix<Complex64>) {
    let es = nalgebra::SymmetricEigen::new(op.matrix.clone());
    sort_eigenpairs(es.eigenvalues, es.eigenvectors)
}

/// Eigendecomposition of a real symmetric matrix (no complex arithmetic).
pub fn eig_real_symmetric(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let es = nalgebra::SymmetricEigen::new(m.clone());
    sort_eigenpairs(es.eigenvalues, es.eigenvectors)
}

fn sort_eigenpairs<T: nalgebra::Scalar + Copy>(
    values: DVector<f64>,
    vectors: DMatrix<T>,
) -> (DVector<f64>, DMatrix<T>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("NaN eigenvalue"));
    let sorted_values = DVector::from_iterator(values.len(), order.iter().map(|&i| values[i]));
    let mut sorted_vectors = vectors.clone();
    for (k, &i) in order.iter().enumerate() {
        sorted_vectors.column_mut(k).copy_from(&vectors.column(i));
    }
    (sorted_values, sorted_vectors)
}

/// A normalized complex state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Wraps an amplitude vector, requiring unit norm within 1e-10.
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidConfig {
                reason: format!("state vector norm {norm} deviates from 1 by more than 1e-10"),
            });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn normalized(mut amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::InvalidConfig {
                reason: "cannot normalize the zero vector".into(),
            });
        }
        amplitudes /= Complex64::new(norm, 0.0);
        Ok(Self { amplitudes })
    }

    /// The computational basis state `|index⟩` in a `dim`-dimensional space.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨index|self⟩|²`.
    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }
}

/// Maximum amplitude distance between two states after removing one global
/// phase (the phase aligning the largest component of `a` with `b`).
pub fn distance_up_to_global_phase(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    assert_eq!(a.len(), b.len());
    let phase = a
        .iter()
        .zip(b.iter())
        .max_by(|(x, _), (y, _)| x.norm().partial_cmp(&y.norm()).unwrap())
        .map(|(x, y)| {
            let z = y * x.conj();
            if z.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                z / z.norm()
            }
        })
        .unwrap_or(Complex64::new(1.0, 0.0));
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x * phase - y).norm())
        .fold(0.0, f64::max)
}
