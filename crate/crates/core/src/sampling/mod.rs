//! Seed-reproducible samplers for the in-control and shifted process laws.

mod matrix;

pub use matrix::{
    cholesky, correlation_from_covariance, covariance_structured, random_correlation,
    random_pd_covariance, CholeskyFactor, CorrelationMatrix, CovarianceMatrix, Matrix,
    RandomCovarianceSpec,
};

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::stat::l2_norm_unchecked;

/// Generator behind every [`RngStream`].
pub type StreamRng = ChaCha12Rng;

/// A `(seed, substream)` pair naming one independent, platform-stable
/// random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub substream: u64,
}

impl RngStream {
    pub fn new(seed: u64, substream: u64) -> Self {
        Self { seed, substream }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.substream);
        rng
    }
}

/// Dependence structure of an exponential-marginal copula law.
#[derive(Clone, Debug, PartialEq)]
pub enum Copula {
    Gaussian(CorrelationMatrix),
    Clayton { xi: f64 },
}

/// A sampling law for the observation stream.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    Normal {
        mean: Vec<f64>,
        cov: CovarianceMatrix,
    },
    /// Zero-location multivariate t; `df = 1` is the Cauchy law.
    StudentT {
        df: f64,
        scale: CovarianceMatrix,
    },
    /// Exponential marginals with rates `rates` joined by `copula`.
    ExponentialCopula {
        copula: Copula,
        rates: Vec<f64>,
    },
    /// i.i.d. Uniform(0, 1) scalars used directly as norms.
    UniformNorms,
}

impl DistributionSpec {
    pub fn normal(mean: Vec<f64>, cov: CovarianceMatrix) -> Result<Self> {
        let spec = DistributionSpec::Normal { mean, cov };
        spec.validate()?;
        Ok(spec)
    }

    pub fn student_t(df: f64, scale: CovarianceMatrix) -> Result<Self> {
        let spec = DistributionSpec::StudentT { df, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exponential_copula(copula: Copula, rates: Vec<f64>) -> Result<Self> {
        let spec = DistributionSpec::ExponentialCopula { copula, rates };
        spec.validate()?;
        Ok(spec)
    }

    /// Normal law with the structured covariance and every coordinate of the
    /// mean equal to `mean_shift`.
    pub fn structured_normal(p: usize, c0: f64, mean_shift: f64) -> Result<Self> {
        Self::normal(vec![mean_shift; p], covariance_structured(p, c0)?)
    }

    /// Exponential marginals with a common `rate` joined by a Gaussian copula
    /// whose correlation is the standardized structured covariance.
    pub fn structured_gaussian_copula(p: usize, c0: f64, rate: f64) -> Result<Self> {
        let corr = correlation_from_covariance(covariance_structured(p, c0)?.entries())?;
        Self::exponential_copula(Copula::Gaussian(corr), vec![rate; p])
    }

    pub fn clayton_copula(p: usize, xi: f64, rate: f64) -> Result<Self> {
        Self::exponential_copula(Copula::Clayton { xi }, vec![rate; p])
    }

    /// Number of coordinates of each observation (1 for `UniformNorms`).
    pub fn dimension(&self) -> usize {
        match self {
            DistributionSpec::Normal { mean, .. } => mean.len(),
            DistributionSpec::StudentT { scale, .. } => scale.dim(),
            DistributionSpec::ExponentialCopula { rates, .. } => rates.len(),
            DistributionSpec::UniformNorms => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::Normal { mean, cov } => {
                if mean.len() != cov.dim() {
                    return Err(Error::invalid("mean and covariance dimensions differ"));
                }
                if mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::invalid("mean must be finite"));
                }
            }
            DistributionSpec::StudentT { df, .. } => {
                if !(*df > 0.0) || !df.is_finite() {
                    return Err(Error::invalid("degrees of freedom must be positive"));
                }
            }
            DistributionSpec::ExponentialCopula { copula, rates } => {
                if rates.is_empty() {
                    return Err(Error::invalid("copula law needs at least one coordinate"));
                }
                if rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                    return Err(Error::invalid("exponential rates must be positive"));
                }
                match copula {
                    Copula::Gaussian(corr) if corr.dim() != rates.len() => {
                        return Err(Error::invalid("copula correlation and rates dimensions differ"));
                    }
                    Copula::Clayton { xi } if !(*xi > 0.0) || !xi.is_finite() => {
                        return Err(Error::invalid("Clayton parameter must be positive"));
                    }
                    _ => {}
                }
            }
            DistributionSpec::UniformNorms => {}
        }
        Ok(())
    }
}

/// Standard normal CDF.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Repeated draws from one [`DistributionSpec`] with reusable scratch space.
#[derive(Clone, Debug)]
pub struct Sampler<'a> {
    spec: &'a DistributionSpec,
    chi2: Option<ChiSquared<f64>>,
    gamma: Option<Gamma<f64>>,
    z: Vec<f64>,
    out: Vec<f64>,
}

impl<'a> Sampler<'a> {
    pub fn new(spec: &'a DistributionSpec) -> Result<Self> {
        spec.validate()?;
        let p = spec.dimension();
        let chi2 = match spec {
            DistributionSpec::StudentT { df, .. } => Some(
                ChiSquared::new(*df).map_err(|_| Error::invalid("bad degrees of freedom"))?,
            ),
            _ => None,
        };
        let gamma = match spec {
            DistributionSpec::ExponentialCopula { copula: Copula::Clayton { xi }, .. } => Some(
                Gamma::new(1.0 / xi, 1.0).map_err(|_| Error::invalid("bad Clayton parameter"))?,
            ),
            _ => None,
        };
        Ok(Self { spec, chi2, gamma, z: vec![0.0; p], out: vec![0.0; p] })
    }

    pub fn spec(&self) -> &DistributionSpec {
        self.spec
    }

    /// Draws one observation; the slice is valid until the next draw.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        match self.spec {
            DistributionSpec::Normal { mean, cov } => {
                self.fill_standard_normal(rng);
                cov.factor().mul_vec(&self.z, &mut self.out);
                for (x, m) in self.out.iter_mut().zip(mean) {
                    *x += m;
                }
            }
            DistributionSpec::StudentT { df, scale } => {
                self.fill_standard_normal(rng);
                scale.factor().mul_vec(&self.z, &mut self.out);
                let g: f64 = self.chi2.as_ref().expect("set for t laws").sample(rng);
                let inv = 1.0 / libm::sqrt(g / df);
                for x in &mut self.out {
                    *x *= inv;
                }
            }
            DistributionSpec::ExponentialCopula { copula: Copula::Gaussian(corr), rates } => {
                self.fill_standard_normal(rng);
                corr.factor().mul_vec(&self.z, &mut self.out);
                for (x, rate) in self.out.iter_mut().zip(rates) {
                    // 1 - Phi(z) = Phi(-z), kept in the tail for precision.
                    let survival = standard_normal_cdf(-*x);
                    *x = -libm::log(survival) / rate;
                }
            }
            DistributionSpec::ExponentialCopula { copula: Copula::Clayton { xi }, rates } => {
                let v: f64 = self.gamma.as_ref().expect("set for Clayton laws").sample(rng);
                for (x, rate) in self.out.iter_mut().zip(rates) {
                    let e: f64 = Exp1.sample(rng);
                    let u = libm::pow(1.0 + e / v, -1.0 / xi);
                    *x = -libm::log1p(-u) / rate;
                }
            }
            DistributionSpec::UniformNorms => {
                self.out[0] = rng.sample(Open01);
            }
        }
        &self.out
    }

    /// Draws one observation and returns its norm. For `UniformNorms` the
    /// scalar itself is the norm.
    pub fn draw_norm<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if let DistributionSpec::UniformNorms = self.spec {
            return rng.sample(Open01);
        }
        let y = self.draw(rng);
        l2_norm_unchecked(y)
    }

    fn fill_standard_normal<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for z in &mut self.z {
            *z = StandardNormal.sample(rng);
        }
    }
}

/// One observation from `spec`.
pub fn sample<R: Rng + ?Sized>(spec: &DistributionSpec, rng: &mut R) -> Result<Vec<f64>> {
    let mut sampler = Sampler::new(spec)?;
    Ok(sampler.draw(rng).to_vec())
}

/// `n` consecutive norms drawn from `spec`.
pub fn norm_stream<R: Rng + ?Sized>(
    spec: &DistributionSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("norm stream length must be at least 1"));
    }
    let mut sampler = Sampler::new(spec)?;
    Ok((0..n).map(|_| sampler.draw_norm(rng)).collect())
}
