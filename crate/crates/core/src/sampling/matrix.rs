//! Dense square matrices, the Cholesky factorization and the covariance /
//! correlation constructors used by the samplers.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use rand::Rng;
use rand_distr::{Beta, Distribution, Uniform};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("matrix has no rows"));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("matrix is not square"));
        }
        Ok(Self { n, data: rows.concat() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Symmetric up to `tol` relative to the largest entry.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1.0);
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

/// Lower-triangular `L` with `L L^T` equal to the factored matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyFactor(Matrix);

impl CholeskyFactor {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.n
    }

    /// `out = L z`.
    pub fn mul_vec(&self, z: &[f64], out: &mut [f64]) {
        let n = self.0.n;
        debug_assert_eq!(z.len(), n);
        debug_assert_eq!(out.len(), n);
        for (i, slot) in out.iter_mut().enumerate() {
            let row = &self.0.row(i)[..=i];
            *slot = row.iter().zip(&z[..=i]).map(|(a, b)| a * b).sum();
        }
    }

    /// `L L^T`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.0.n;
        Matrix::from_fn(n, |i, j| {
            let k = i.min(j);
            (0..=k).map(|t| self.0[(i, t)] * self.0[(j, t)]).sum()
        })
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
pub fn cholesky(m: &Matrix) -> Result<CholeskyFactor> {
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::invalid("matrix is not symmetric"));
    }
    let n = m.n;
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let row_j = &l.data[j * n..j * n + j];
        let pivot = m[(j, j)] - row_j.iter().map(|v| v * v).sum::<f64>();
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: pivot });
        }
        let diag = libm::sqrt(pivot);
        l.set(j, j, diag);
        for i in j + 1..n {
            let dot: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
            l.set(i, j, (m[(i, j)] - dot) / diag);
        }
    }
    Ok(CholeskyFactor(l))
}

/// Symmetric positive-definite covariance matrix together with its factor.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    entries: Matrix,
    factor: CholeskyFactor,
}

impl CovarianceMatrix {
    pub fn new(entries: Matrix) -> Result<Self> {
        let factor = cholesky(&entries)?;
        Ok(Self { entries, factor })
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.entries.n
    }
}

/// Positive-definite matrix with unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    entries: Matrix,
    factor: CholeskyFactor,
}

impl CorrelationMatrix {
    pub fn new(entries: Matrix) -> Result<Self> {
        if (0..entries.n).any(|i| (entries[(i, i)] - 1.0).abs() > SYMMETRY_TOL) {
            return Err(Error::invalid("correlation matrix must have a unit diagonal"));
        }
        let factor = cholesky(&entries)?;
        Ok(Self { entries, factor })
    }

    pub fn identity(p: usize) -> Self {
        Self::new(Matrix::identity(p)).expect("identity is a correlation matrix")
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.entries.n
    }
}

/// `C_ij = min(i,j)/max(i,j) * s_i * s_j` with `s_i = c0 + (i-1)/(p-1)`.
pub fn covariance_structured(p: usize, c0: f64) -> Result<CovarianceMatrix> {
    if p < 2 {
        return Err(Error::invalid("structured covariance needs p >= 2"));
    }
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::invalid("c0 must be positive"));
    }
    let sigma: Vec<f64> = (0..p).map(|i| c0 + i as f64 / (p - 1) as f64).collect();
    let entries = Matrix::from_fn(p, |i, j| {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        (lo + 1) as f64 / (hi + 1) as f64 * sigma[lo] * sigma[hi]
    });
    CovarianceMatrix::new(entries)
}

/// Standardizes a covariance matrix: `R_ij = C_ij / sqrt(C_ii C_jj)`.
pub fn correlation_from_covariance(c: &Matrix) -> Result<CorrelationMatrix> {
    let n = c.dim();
    if (0..n).any(|i| !(c[(i, i)] > 0.0)) {
        return Err(Error::invalid("covariance has a nonpositive diagonal entry"));
    }
    let scale: Vec<f64> = (0..n).map(|i| libm::sqrt(c[(i, i)])).collect();
    let mut r = Matrix::zeros(n);
    for i in 0..n {
        r.set(i, i, 1.0);
        for j in 0..i {
            let v = c[(i, j)] / (scale[i] * scale[j]);
            r.set(i, j, v);
            r.set(j, i, v);
        }
    }
    CorrelationMatrix::new(r)
}

/// Random correlation matrix from a C-vine: every partial correlation is
/// drawn as `2 Beta(alpha_d, alpha_d) - 1` and folded back into a full
/// correlation through the vine recursion.
pub fn random_correlation<R: Rng + ?Sized>(
    p: usize,
    alpha_d: f64,
    rng: &mut R,
) -> Result<CorrelationMatrix> {
    if p < 2 {
        return Err(Error::invalid("random correlation needs p >= 2"));
    }
    let beta = Beta::new(alpha_d, alpha_d)
        .map_err(|_| Error::invalid("alpha_d must be positive and finite"))?;

    // partial[k][i]: partial correlation of (k, i) given variables 0..k.
    let mut partial = Matrix::zeros(p);
    let mut r = Matrix::identity(p);
    for k in 0..p - 1 {
        for i in k + 1..p {
            let pk = 2.0 * beta.sample(rng) - 1.0;
            partial.set(k, i, pk);
            let mut rho = pk;
            for l in (0..k).rev() {
                let a = partial[(l, i)];
                let b = partial[(l, k)];
                rho = rho * libm::sqrt((1.0 - a * a) * (1.0 - b * b)) + a * b;
            }
            r.set(k, i, rho);
            r.set(i, k, rho);
        }
    }
    CorrelationMatrix::new(r)
}

/// Parameters of a random covariance draw: per-coordinate variances uniform
/// on `(var_lo, var_hi)` around a C-vine correlation with parameter `alpha_d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomCovarianceSpec {
    pub p: usize,
    pub var_lo: f64,
    pub var_hi: f64,
    pub alpha_d: f64,
}

impl RandomCovarianceSpec {
    pub fn new(p: usize, var_lo: f64, var_hi: f64, alpha_d: f64) -> Result<Self> {
        let spec = Self { p, var_lo, var_hi, alpha_d };
        spec.validate()?;
        Ok(spec)
    }

    /// Small variances: range (0.1, 0.5), `alpha_d = 1.5`.
    pub fn case_one(p: usize) -> Self {
        Self { p, var_lo: 0.1, var_hi: 0.5, alpha_d: 1.5 }
    }

    /// Large variances: range (1.5, 2.5), `alpha_d = 1.5`.
    pub fn case_two(p: usize) -> Self {
        Self { p, var_lo: 1.5, var_hi: 2.5, alpha_d: 1.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::invalid("random covariance needs p >= 2"));
        }
        if !(self.var_lo > 0.0 && self.var_lo < self.var_hi && self.var_hi.is_finite()) {
            return Err(Error::invalid("variance range must satisfy 0 < var_lo < var_hi"));
        }
        if !(self.alpha_d > 0.0) || !self.alpha_d.is_finite() {
            return Err(Error::invalid("alpha_d must be positive"));
        }
        Ok(())
    }
}

/// `C = D R D` with `R` from [`random_correlation`] and
/// `D = diag(sqrt(v_i))`, `v_i ~ Uniform(var_lo, var_hi)`.
pub fn random_pd_covariance<R: Rng + ?Sized>(
    spec: &RandomCovarianceSpec,
    rng: &mut R,
) -> Result<CovarianceMatrix> {
    spec.validate()?;
    let corr = random_correlation(spec.p, spec.alpha_d, rng)?;
    let uniform = Uniform::new(spec.var_lo, spec.var_hi)
        .map_err(|_| Error::invalid("bad variance range"))?;
    let sd: Vec<f64> = (0..spec.p).map(|_| libm::sqrt(uniform.sample(rng))).collect();
    let r = corr.entries();
    let mut c = Matrix::zeros(spec.p);
    for i in 0..spec.p {
        c.set(i, i, sd[i] * sd[i]);
        for j in 0..i {
            let v = sd[i] * r[(i, j)] * sd[j];
            c.set(i, j, v);
            c.set(j, i, v);
        }
    }
    CovarianceMatrix::new(c)
}
