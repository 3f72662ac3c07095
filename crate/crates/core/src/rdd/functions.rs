//! Densities and piecewise-constant response functions used by scenarios.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

pub(crate) fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2))
}

/// Latent-score density `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    Gaussian { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl DensitySpec {
    pub(crate) fn validate(&self, field: &'static str) -> Result<()> {
        let ok = match *self {
            DensitySpec::Gaussian { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            DensitySpec::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
        };
        if !ok {
            return Err(Error::invalid(field, format!("bad density parameters {self:?}")));
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            DensitySpec::Gaussian { mean, sd } => normal_pdf(x, mean, sd),
            DensitySpec::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DensitySpec::Gaussian { mean, sd } => normal_cdf(x, mean, sd),
            DensitySpec::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// Interval holding all but a negligible part of the mass.
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            DensitySpec::Gaussian { mean, sd } => (mean - 10.0 * sd, mean + 10.0 * sd),
            DensitySpec::Uniform { lo, hi } => (lo, hi),
        }
    }

    pub(crate) fn sampler(&self) -> Sampler {
        match *self {
            DensitySpec::Gaussian { mean, sd } => Sampler::Normal(Normal::new(mean, sd).expect("validated")),
            DensitySpec::Uniform { lo, hi } => Sampler::Uniform { lo, width: hi - lo },
        }
    }
}

/// Exogenous measurement-noise density `g`, centred at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSpec {
    Gaussian { sd: f64 },
    Uniform { half_width: f64 },
}

impl NoiseSpec {
    pub fn scale(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sd } => sd,
            NoiseSpec::Uniform { half_width } => half_width,
        }
    }

    pub fn as_density(&self) -> DensitySpec {
        match *self {
            NoiseSpec::Gaussian { sd } => DensitySpec::Gaussian { mean: 0.0, sd },
            NoiseSpec::Uniform { half_width } => DensitySpec::Uniform { lo: -half_width, hi: half_width },
        }
    }
}

pub(crate) enum Sampler {
    Normal(Normal<f64>),
    Uniform { lo: f64, width: f64 },
}

impl Sampler {
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Normal(n) => n.sample(rng),
            Sampler::Uniform { lo, width } => lo + width * rng.random::<f64>(),
        }
    }
}

/// A value on the half-open latent interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

/// Piecewise-constant function of the latent score. The first band
/// containing `u` wins; `default` applies elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFunction {
    pub default: f64,
    #[serde(default)]
    pub bands: Vec<Band>,
}

impl StepFunction {
    pub fn constant(value: f64) -> Self {
        StepFunction { default: value, bands: Vec::new() }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.bands.iter().find(|b| u >= b.lo && u < b.hi).map_or(self.default, |b| b.value)
    }

    pub(crate) fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.bands.iter().flat_map(|b| [b.lo, b.hi])
    }

    pub(crate) fn validate(&self, field: &'static str) -> Result<()> {
        if !self.default.is_finite() {
            return Err(Error::invalid(field, "default must be finite"));
        }
        for b in &self.bands {
            if !(b.lo < b.hi && b.value.is_finite()) {
                return Err(Error::invalid(field, format!("bad band {b:?}")));
            }
        }
        Ok(())
    }
}

/// Trapezoid rule over an increasing grid.
pub(crate) fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// `points` evenly spaced values from `lo` to `hi`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn densities_integrate_to_one() {
        for d in [DensitySpec::Gaussian { mean: 3.0, sd: 2.0 }, DensitySpec::Uniform { lo: -1.0, hi: 4.0 }] {
            let (lo, hi) = d.effective_support();
            let xs = linspace(lo, hi, 2001);
            let ys: Vec<f64> = xs.iter().map(|&x| d.pdf(x)).collect();
            assert!((trapezoid(&xs, &ys) - 1.0).abs() < 1e-6, "{d:?}");
        }
        assert!(DensitySpec::Gaussian { mean: 0.0, sd: 0.0 }.validate("h").is_err());
        assert!(DensitySpec::Uniform { lo: 1.0, hi: 1.0 }.validate("h").is_err());
    }

    #[test]
    fn step_function_lookup() {
        let f = StepFunction {
            default: 0.0,
            bands: vec![Band { lo: -1.0, hi: 1.0, value: 2.0 }, Band { lo: 0.0, hi: 3.0, value: 5.0 }],
        };
        assert_eq!(f.eval(-2.0), 0.0);
        assert_eq!(f.eval(0.5), 2.0);
        assert_eq!(f.eval(1.0), 5.0);
        assert_eq!(f.eval(3.0), 0.0);
        assert!(StepFunction { default: 0.0, bands: vec![Band { lo: 1.0, hi: 0.0, value: 0.0 }] }
            .validate("effect")
            .is_err());
    }

    #[test]
    fn cdf_matches_pdf() {
        let d = DensitySpec::Gaussian { mean: 0.0, sd: 1.0 };
        assert!((d.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((d.cdf(1.96) - 0.975).abs() < 1e-4);
    }
}
