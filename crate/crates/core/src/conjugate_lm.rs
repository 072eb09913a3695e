//! Conjugate normal / inverse-gamma linear regression and the credibility
//! decision for `H: uᵀβ > C`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statkit::{sample_inverse_gamma, std_normal_quantile, CholeskyFactor};

/// Inverse-gamma prior on σ², shape `a` and scale `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseGamma {
    pub shape: f64,
    pub scale: f64,
}

impl InverseGamma {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!(
                "inverse gamma parameters must be positive, got ({shape}, {scale})"
            )));
        }
        Ok(Self { shape, scale })
    }

    /// Concentrated at `sigma2`: shape `a`, scale `(a - 1)·sigma2`.
    pub fn concentrated(sigma2: f64, shape: f64) -> Result<Self> {
        Self::new(shape, (shape - 1.0) * sigma2)
    }
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::dimension(format!("{what} must be square")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!("{what} has non-finite entries")));
    }
    let tol = 1e-10 * m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(Error::domain(format!("{what} is not symmetric")));
            }
        }
    }
    Ok(())
}

/// Analysis-stage prior in precision form. Zero precision is the vague prior.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisPrior {
    pub mu: DVector<f64>,
    pub precision: DMatrix<f64>,
    pub ig: Option<InverseGamma>,
}

impl AnalysisPrior {
    pub fn new(mu: DVector<f64>, precision: DMatrix<f64>, ig: Option<InverseGamma>) -> Result<Self> {
        if precision.nrows() != mu.len() {
            return Err(Error::dimension(format!(
                "analysis prior mean has length {} but precision is {}x{}",
                mu.len(),
                precision.nrows(),
                precision.ncols()
            )));
        }
        check_symmetric(&precision, "analysis prior precision")?;
        CholeskyFactor::new(&precision)?;
        Ok(Self { mu, precision, ig })
    }

    /// Zero-precision prior on `p` coefficients.
    pub fn vague(p: usize) -> Self {
        Self {
            mu: DVector::zeros(p),
            precision: DMatrix::zeros(p, p),
            ig: None,
        }
    }

    pub fn with_ig(mut self, ig: InverseGamma) -> Self {
        self.ig = Some(ig);
        self
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Design-stage prior in covariance form, relative to σ².
#[derive(Clone, Debug, PartialEq)]
pub struct DesignPrior {
    pub mu: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub ig: Option<InverseGamma>,
}

impl DesignPrior {
    pub fn new(mu: DVector<f64>, cov: DMatrix<f64>, ig: Option<InverseGamma>) -> Result<Self> {
        if cov.nrows() != mu.len() {
            return Err(Error::dimension(format!(
                "design prior mean has length {} but covariance is {}x{}",
                mu.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        check_symmetric(&cov, "design prior covariance")?;
        CholeskyFactor::new(&cov)?;
        Ok(Self { mu, cov, ig })
    }

    /// Point mass at `mu`.
    pub fn point(mu: DVector<f64>) -> Self {
        let p = mu.len();
        Self {
            mu,
            cov: DMatrix::zeros(p, p),
            ig: None,
        }
    }

    pub fn with_ig(mut self, ig: InverseGamma) -> Self {
        self.ig = Some(ig);
        self
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

#[derive(Clone, Debug)]
enum Noise {
    Identity,
    Diagonal { var: DVector<f64>, sd: DVector<f64> },
    Block(Vec<CholeskyFactor>),
    Dense(CholeskyFactor),
}

/// Noise correlation `Vₙ`. Structured forms keep every product linear in the
/// number of rows.
#[derive(Clone, Debug)]
pub struct NoiseCorrelation {
    rows: usize,
    kind: Noise,
}

impl NoiseCorrelation {
    pub fn identity(rows: usize) -> Self {
        Self {
            rows,
            kind: Noise::Identity,
        }
    }

    pub fn diagonal(diag: Vec<f64>) -> Result<Self> {
        if let Some(v) = diag.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::domain(format!("noise variance {v} is not positive")));
        }
        Ok(Self {
            rows: diag.len(),
            kind: Noise::Diagonal {
                sd: DVector::from_iterator(diag.len(), diag.iter().map(|v| v.sqrt())),
                var: DVector::from_vec(diag),
            },
        })
    }

    pub fn block_diagonal(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let mut rows = 0;
        let mut factors = Vec::with_capacity(blocks.len());
        for b in &blocks {
            check_symmetric(b, "noise block")?;
            factors.push(Self::pd_factor(b)?);
            rows += b.nrows();
        }
        Ok(Self {
            rows,
            kind: Noise::Block(factors),
        })
    }

    pub fn dense(v: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&v, "noise correlation")?;
        Ok(Self {
            rows: v.nrows(),
            kind: Noise::Dense(Self::pd_factor(&v)?),
        })
    }

    fn pd_factor(v: &DMatrix<f64>) -> Result<CholeskyFactor> {
        let f = CholeskyFactor::new(v)?;
        if (0..f.dim()).any(|i| f.lower()[(i, i)] <= 0.0) {
            return Err(Error::numeric("noise correlation is not positive definite"));
        }
        Ok(f)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.kind, Noise::Identity | Noise::Diagonal { .. })
    }

    /// Per-row noise SDs when `Vₙ` is diagonal.
    pub fn diagonal_sd(&self) -> Option<DVector<f64>> {
        match &self.kind {
            Noise::Identity => Some(DVector::from_element(self.rows, 1.0)),
            Noise::Diagonal { sd, .. } => Some(sd.clone()),
            _ => None,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.kind {
            Noise::Identity => DMatrix::identity(self.rows, self.rows),
            Noise::Diagonal { var, .. } => DMatrix::from_diagonal(var),
            Noise::Block(fs) => {
                let mut out = DMatrix::zeros(self.rows, self.rows);
                let mut at = 0;
                for f in fs {
                    let k = f.dim();
                    out.view_mut((at, at), (k, k)).copy_from(&f.reconstruct());
                    at += k;
                }
                out
            }
            Noise::Dense(f) => f.reconstruct(),
        }
    }

    /// `Vₙ⁻¹ A`
    pub fn solve_mat(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(a.nrows())?;
        let mut out = a.clone();
        for mut col in out.column_iter_mut() {
            let v = self.solve(&col.clone_owned())?;
            col.copy_from(&v);
        }
        Ok(out)
    }

    /// `Vₙ⁻¹ v`
    pub fn solve(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_rows(v.len())?;
        Ok(match &self.kind {
            Noise::Identity => v.clone(),
            Noise::Diagonal { var, .. } => v.component_div(var),
            Noise::Block(fs) => {
                let mut out = DVector::zeros(v.len());
                let mut at = 0;
                for f in fs {
                    let k = f.dim();
                    let x = f.solve(&v.rows(at, k).into_owned())?;
                    out.rows_mut(at, k).copy_from(&x);
                    at += k;
                }
                out
            }
            Noise::Dense(f) => f.solve(v)?,
        })
    }

    /// `vᵀ Vₙ⁻¹ v`
    pub fn inv_quad(&self, v: &DVector<f64>) -> Result<f64> {
        match &self.kind {
            Noise::Identity => {
                self.check_rows(v.len())?;
                Ok(v.norm_squared())
            }
            Noise::Diagonal { var, .. } => {
                self.check_rows(v.len())?;
                Ok(v.iter().zip(var.iter()).map(|(x, w)| x * x / w).sum())
            }
            _ => Ok(v.dot(&self.solve(v)?)),
        }
    }

    /// Map iid standard normals `z` in place to a draw from `N(0, Vₙ)`.
    pub fn correlate(&self, z: &mut DVector<f64>) {
        match &self.kind {
            Noise::Identity => {}
            Noise::Diagonal { sd, .. } => z.component_mul_assign(sd),
            Noise::Block(fs) => {
                let mut at = 0;
                for f in fs {
                    let k = f.dim();
                    let v = f.mul_lower(&z.rows(at, k).into_owned());
                    z.rows_mut(at, k).copy_from(&v);
                    at += k;
                }
            }
            Noise::Dense(f) => *z = f.mul_lower(z),
        }
    }

    fn check_rows(&self, got: usize) -> Result<()> {
        if got != self.rows {
            return Err(Error::dimension(format!(
                "expected {} rows, got {got}",
                self.rows
            )));
        }
        Ok(())
    }
}

/// Design matrix, noise correlation and the design size `n`.
///
/// `row_groups` partitions the rows into consecutive groups that each grow
/// with `n`; random noise is drawn per group so that designs of different
/// size share their leading draws.
#[derive(Clone, Debug)]
pub struct ModelDesign {
    pub x: DMatrix<f64>,
    pub noise: NoiseCorrelation,
    pub n: usize,
    row_groups: Vec<usize>,
}

impl ModelDesign {
    pub fn new(x: DMatrix<f64>, noise: NoiseCorrelation, n: usize) -> Result<Self> {
        if x.nrows() != noise.rows() {
            return Err(Error::dimension(format!(
                "X has {} rows but Vn has {}",
                x.nrows(),
                noise.rows()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("design matrix has non-finite entries"));
        }
        let rows = x.nrows();
        Ok(Self {
            x,
            noise,
            n,
            row_groups: vec![rows],
        })
    }

    /// `n` observations of a single mean: `X = 1ₙ`, `Vₙ = Iₙ`.
    pub fn scalar(n: usize) -> Self {
        Self {
            x: DMatrix::from_element(n, 1, 1.0),
            noise: NoiseCorrelation::identity(n),
            n,
            row_groups: vec![n],
        }
    }

    pub fn with_row_groups(mut self, groups: Vec<usize>) -> Result<Self> {
        if groups.iter().sum::<usize>() != self.rows() {
            return Err(Error::dimension(format!(
                "row groups sum to {} but the design has {} rows",
                groups.iter().sum::<usize>(),
                self.rows()
            )));
        }
        self.row_groups = groups;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn row_groups(&self) -> &[usize] {
        &self.row_groups
    }
}

/// `H: uᵀβ > C` at credibility level `alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub u: DVector<f64>,
    pub c: f64,
    pub alpha: f64,
}

impl Hypothesis {
    pub fn new(u: DVector<f64>, c: f64, alpha: f64) -> Result<Self> {
        if u.iter().all(|v| *v == 0.0) || u.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("contrast vector must be finite and nonzero"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {alpha} is not in (0, 1)")));
        }
        if c.is_nan() {
            return Err(Error::domain("threshold is NaN"));
        }
        Ok(Self { u, c, alpha })
    }
}

/// Posterior `β | σ², y ~ N(Mm, σ²M)`, `σ² | y ~ IG(a*, b*)`.
#[derive(Clone, Debug)]
pub struct Posterior {
    pub m_matrix: DMatrix<f64>,
    pub m: DVector<f64>,
    pub a_star: f64,
    pub b_star: f64,
    mean: DVector<f64>,
}

impl Posterior {
    /// Posterior mean `Mm`.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }
}

/// Everything in the posterior update that does not depend on `y`.
#[derive(Clone, Debug)]
pub struct PosteriorKernel {
    x: DMatrix<f64>,
    noise: NoiseCorrelation,
    vinv_x: DMatrix<f64>,
    m_matrix: DMatrix<f64>,
    prior_m: DVector<f64>,
    prior: AnalysisPrior,
}

impl PosteriorKernel {
    pub fn new(design: &ModelDesign, prior: &AnalysisPrior) -> Result<Self> {
        if prior.dim() != design.p() {
            return Err(Error::dimension(format!(
                "prior has {} coefficients but X has {} columns",
                prior.dim(),
                design.p()
            )));
        }
        let vinv_x = design.noise.solve_mat(&design.x)?;
        let mut precision = design.x.tr_mul(&vinv_x);
        precision += &prior.precision;
        precision = (&precision + precision.transpose()) * 0.5;
        let m_matrix = precision
            .cholesky()
            .ok_or_else(|| {
                Error::Rank("posterior precision is singular; X is rank deficient under this prior".into())
            })?
            .inverse();
        let prior_m = &prior.precision * &prior.mu;
        Ok(Self {
            x: design.x.clone(),
            noise: design.noise.clone(),
            vinv_x,
            m_matrix,
            prior_m,
            prior: prior.clone(),
        })
    }

    pub fn m_matrix(&self) -> &DMatrix<f64> {
        &self.m_matrix
    }

    /// `m = Pμ + XᵀVₙ⁻¹y`
    pub fn m_vector(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.x.nrows() {
            return Err(Error::dimension(format!(
                "y has length {} but X has {} rows",
                y.len(),
                self.x.nrows()
            )));
        }
        Ok(&self.prior_m + self.vinv_x.tr_mul(y))
    }

    /// Posterior mean `Mm` only.
    pub fn mean(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.m_matrix * self.m_vector(y)?)
    }

    pub fn update(&self, y: &DVector<f64>) -> Result<Posterior> {
        let m = self.m_vector(y)?;
        let mean = &self.m_matrix * &m;
        // μᵀPμ + yᵀVₙ⁻¹y − mᵀMm rewritten as a sum of two nonnegative
        // quadratic forms around the posterior mean.
        let resid = y - &self.x * &mean;
        let shift = &mean - &self.prior.mu;
        let quad = self.noise.inv_quad(&resid)? + shift.dot(&(&self.prior.precision * &shift));
        let (a, b) = self.prior.ig.map_or((0.0, 0.0), |g| (g.shape, g.scale));
        Ok(Posterior {
            m_matrix: self.m_matrix.clone(),
            m,
            a_star: a + y.len() as f64 / 2.0,
            b_star: b + 0.5 * quad.max(0.0),
            mean,
        })
    }
}

pub fn posterior_update(
    y: &DVector<f64>,
    design: &ModelDesign,
    prior: &AnalysisPrior,
) -> Result<Posterior> {
    PosteriorKernel::new(design, prior)?.update(y)
}

/// Favour `H` when `(C − uᵀMm)/(σ√(uᵀMu)) < Z_α`.
pub fn decide_known_var(post: &Posterior, hyp: &Hypothesis, sigma: f64) -> Result<bool> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma = {sigma} must be positive")));
    }
    let spread = hyp.u.dot(&(&post.m_matrix * &hyp.u));
    if !(spread > 0.0) {
        return Err(Error::numeric(format!("uᵀMu = {spread} is not positive")));
    }
    let z = (hyp.c - hyp.u.dot(&post.mean)) / (sigma * spread.sqrt());
    Ok(z < std_normal_quantile(hyp.alpha)?)
}

/// Favour `H` when at most a fraction `α` of `j` joint posterior draws have
/// `uᵀβ ≤ C`.
pub fn decide_unknown_var<R: Rng + ?Sized>(
    post: &Posterior,
    hyp: &Hypothesis,
    j: usize,
    rng: &mut R,
) -> Result<bool> {
    if j == 0 {
        return Err(Error::domain("inner sample count must be at least 1"));
    }
    let factor = CholeskyFactor::new(&post.m_matrix)?;
    let p = post.mean.len();
    let mut below = 0usize;
    let mut z = DVector::zeros(p);
    for _ in 0..j {
        let s2 = sample_inverse_gamma(post.a_star, post.b_star, rng)?;
        for v in z.iter_mut() {
            *v = crate::statkit::standard_normal(rng);
        }
        let beta = &post.mean + factor.mul_lower(&z) * s2.sqrt();
        if hyp.u.dot(&beta) <= hyp.c {
            below += 1;
        }
    }
    Ok((below as f64) <= hyp.alpha * j as f64)
}
