use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative jitter ladder applied to the diagonal, in units of trace/dim.
const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-6;

/// Lower-triangular factor `L` with `L·Lᵀ = A + jitter·I`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    lower: DMatrix<f64>,
    jitter: f64,
}

impl CholeskyFactor {
    /// Factor a symmetric positive semidefinite matrix.
    ///
    /// If the plain factorization fails, `1e-12·trace/dim` is added to the
    /// diagonal and escalated tenfold up to `1e-6·trace/dim`. The zero matrix
    /// factors to the zero matrix.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let dim = a.nrows();
        if a.ncols() != dim {
            return Err(Error::dimension(format!(
                "cannot factor a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("matrix has non-finite entries"));
        }
        let scale = a.amax();
        for i in 0..dim {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-10 * scale.max(1.0) {
                    return Err(Error::domain(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        if dim == 0 || scale == 0.0 {
            return Ok(Self {
                lower: DMatrix::zeros(dim, dim),
                jitter: 0.0,
            });
        }
        if let Some(c) = a.clone().cholesky() {
            return Ok(Self {
                lower: c.unpack(),
                jitter: 0.0,
            });
        }

        let base = a.trace() / dim as f64;
        if base <= 0.0 {
            return Err(Error::numeric("matrix is not positive semidefinite (trace <= 0)"));
        }
        let mut rel = JITTER_START;
        let mut last = 0.0;
        while rel <= JITTER_MAX * (1.0 + 1e-9) {
            let jitter = rel * base;
            last = jitter;
            let mut shifted = a.clone();
            for i in 0..dim {
                shifted[(i, i)] += jitter;
            }
            if let Some(c) = shifted.cholesky() {
                return Ok(Self {
                    lower: c.unpack(),
                    jitter,
                });
            }
            rel *= 10.0;
        }
        Err(Error::numeric(format!(
            "Cholesky factorization failed after diagonal jitter up to {last:e}"
        )))
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Diagonal shift that was needed, zero if none.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `L · z`
    pub fn mul_lower(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.lower * z
    }

    /// `L · Lᵀ`
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.lower * self.lower.transpose()
    }

    /// Solve `L·Lᵀ x = b`. Fails when the factor is singular.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let y = self
            .lower
            .solve_lower_triangular(b)
            .ok_or_else(|| Error::numeric("singular Cholesky factor"))?;
        self.lower
            .transpose()
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::numeric("singular Cholesky factor"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statkit::RngStream;
    use rand::Rng;

    fn random_psd(dim: usize, rank: usize, rng: &mut RngStream) -> DMatrix<f64> {
        let b = DMatrix::from_fn(dim, rank, |_, _| rng.random_range(-1.0..1.0));
        &b * b.transpose()
    }

    fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn reconstructs_random_pd_matrices() {
        let mut rng = RngStream::new(99, 0);
        for dim in 1..=16 {
            for _ in 0..5 {
                let a = random_psd(dim, dim + 2, &mut rng);
                let f = CholeskyFactor::new(&a).unwrap();
                assert_eq!(f.jitter(), 0.0);
                assert!(rel_frobenius(&f.reconstruct(), &a) <= 1e-10);
            }
        }
    }

    #[test]
    fn singular_psd_gets_jitter() {
        let mut rng = RngStream::new(5, 0);
        for dim in 2..=16 {
            let a = random_psd(dim, 1, &mut rng);
            let f = CholeskyFactor::new(&a).unwrap();
            assert!(f.jitter() <= 1e-6 * a.trace() / dim as f64);
            assert!(rel_frobenius(&f.reconstruct(), &a) <= 1e-5);
        }
    }

    #[test]
    fn zero_matrix_factors_to_zero() {
        let f = CholeskyFactor::new(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(f.lower(), &DMatrix::<f64>::zeros(3, 3));
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
        let err = CholeskyFactor::new(&a).unwrap_err();
        assert!(matches!(err, Error::Numeric(ref m) if m.contains("jitter")), "{err}");
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(CholeskyFactor::new(&a), Err(Error::Domain(_))));
    }

    #[test]
    fn solve_inverts() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = CholeskyFactor::new(&a).unwrap().solve(&b).unwrap();
        assert!((&a * x - b).norm() < 1e-12);
    }
}
