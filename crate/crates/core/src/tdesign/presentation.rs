//! Per-individual presentation-time distributions on a study window.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Study window `[t_s, t_e]` in study time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    pub t_s: f64,
    pub t_e: f64,
}

impl TimeWindow {
    pub fn new(t_s: f64, t_e: f64) -> Result<Self> {
        if !(t_s.is_finite() && t_e.is_finite() && t_s < t_e) {
            return Err(Error::invalid("window", format!("need t_s < t_e, got [{t_s}, {t_e}]")));
        }
        Ok(TimeWindow { t_s, t_e })
    }

    pub fn length(&self) -> f64 {
        self.t_e - self.t_s
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.t_s && t <= self.t_e
    }
}

/// Declarative description of one member's presentation-time law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MemberSpec {
    /// Normal with the given pre-truncation mean and standard deviation,
    /// truncated to the study window.
    TruncatedNormal {
        mean: f64,
        sd: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Piecewise-linear quantile function through `(probability, time)`
    /// knots; probabilities run from 0 to 1, times strictly increase.
    QuantileTable {
        points: Vec<(f64, f64)>,
    },
}

/// A validated presentation-time distribution bound to a window.
#[derive(Debug, Clone, PartialEq)]
pub enum PresentationDist {
    TruncatedNormal(TruncatedNormal),
    Uniform { lo: f64, hi: f64 },
    QuantileTable { probs: Vec<f64>, times: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
    // standardised truncation points and their CDF values
    alpha: f64,
    beta: f64,
    cdf_alpha: f64,
    cdf_beta: f64,
    // sampling works on the reflected law when the window sits in the upper tail
    reflected: bool,
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Smallest probability mass a truncated normal may place on its window
/// before inverse-CDF sampling becomes unreliable.
const MIN_TRUNCATED_MASS: f64 = 1e-12;

impl TruncatedNormal {
    pub fn new(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::invalid("sd", format!("must be positive, got {sd}")));
        }
        if !mean.is_finite() || lo >= hi {
            return Err(Error::invalid("mean", "mean must be finite and lo < hi"));
        }
        let alpha = (lo - mean) / sd;
        let beta = (hi - mean) / sd;
        let reflected = alpha > 0.0;
        let (a, b) = if reflected { (-beta, -alpha) } else { (alpha, beta) };
        let (cdf_alpha, cdf_beta) = (std_normal_cdf(a), std_normal_cdf(b));
        if cdf_beta - cdf_alpha < MIN_TRUNCATED_MASS {
            return Err(Error::invalid(
                "mean",
                format!("normal({mean}, {sd}) puts negligible mass on [{lo}, {hi}]"),
            ));
        }
        Ok(TruncatedNormal { mean, sd, lo, hi, alpha, beta, cdf_alpha, cdf_beta, reflected })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let p = self.cdf_alpha + u * (self.cdf_beta - self.cdf_alpha);
        let mut z = std_normal_quantile(p);
        if self.reflected {
            z = -z;
        }
        (self.mean + self.sd * z).clamp(self.lo, self.hi)
    }

    /// Variance after truncation.
    pub fn variance(&self) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        if b - a < 1.0 {
            // nearly flat on the window: the closed form cancels badly
            return self.variance_by_quadrature();
        }
        let mass = std_normal_cdf(b) - std_normal_cdf(a);
        let mass = if mass > 0.0 { mass } else { self.cdf_beta - self.cdf_alpha };
        let (pa, pb) = (std_normal_pdf(a), std_normal_pdf(b));
        let ta = if a.is_finite() { a * pa } else { 0.0 };
        let tb = if b.is_finite() { b * pb } else { 0.0 };
        let shift = (pa - pb) / mass;
        self.sd * self.sd * (1.0 + (ta - tb) / mass - shift * shift)
    }

    fn variance_by_quadrature(&self) -> f64 {
        let pdf = |t: f64| std_normal_pdf((t - self.mean) / self.sd);
        let (m0, m1, m2) = simpson3(self.lo, self.hi, 4000, |t| {
            let w = pdf(t);
            (w, w * t, w * t * t)
        });
        let mean = m1 / m0;
        (m2 / m0 - mean * mean).max(0.0)
    }
}

/// Composite Simpson rule for three integrands at once.
fn simpson3(a: f64, b: f64, intervals: usize, f: impl Fn(f64) -> (f64, f64, f64)) -> (f64, f64, f64) {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = (0.0, 0.0, 0.0);
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let (x, y, z) = f(a + i as f64 * h);
        acc.0 += w * x;
        acc.1 += w * y;
        acc.2 += w * z;
    }
    (acc.0 * h / 3.0, acc.1 * h / 3.0, acc.2 * h / 3.0)
}

impl PresentationDist {
    /// Validate `spec` against `window`. `member` is used in error messages.
    pub fn from_spec(spec: &MemberSpec, window: &TimeWindow, member: usize) -> Result<Self> {
        match spec {
            MemberSpec::TruncatedNormal { mean, sd } => Ok(PresentationDist::TruncatedNormal(
                TruncatedNormal::new(*mean, *sd, window.t_s, window.t_e)?,
            )),
            MemberSpec::Uniform { lo, hi } => {
                if !(lo < hi && window.contains(*lo) && window.contains(*hi)) {
                    return Err(Error::invalid(
                        "members",
                        format!("member {member}: uniform [{lo}, {hi}] must be a proper sub-interval of the window"),
                    ));
                }
                Ok(PresentationDist::Uniform { lo: *lo, hi: *hi })
            }
            MemberSpec::QuantileTable { points } => {
                let bad = |reason: &str| Error::VarianceUnavailable { member, reason: reason.to_string() };
                if points.len() < 2 {
                    return Err(bad("quantile table needs at least two knots"));
                }
                let (probs, times): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
                if probs[0] != 0.0 || probs[probs.len() - 1] != 1.0 {
                    return Err(bad("probabilities must start at 0 and end at 1"));
                }
                if probs.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(bad("probabilities must strictly increase"));
                }
                if times.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(bad("times must strictly increase"));
                }
                if !times.iter().all(|&t| window.contains(t)) {
                    return Err(bad("times must lie inside the window"));
                }
                Ok(PresentationDist::QuantileTable { probs, times })
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            PresentationDist::TruncatedNormal(tn) => tn.sample(rng),
            PresentationDist::Uniform { lo, hi } => {
                let u: f64 = rng.random();
                lo + u * (hi - lo)
            }
            PresentationDist::QuantileTable { probs, times } => {
                let u: f64 = rng.random();
                let i = probs.partition_point(|&p| p <= u).clamp(1, probs.len() - 1);
                let frac = (u - probs[i - 1]) / (probs[i] - probs[i - 1]);
                times[i - 1] + frac * (times[i] - times[i - 1])
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            PresentationDist::TruncatedNormal(tn) => tn.variance(),
            PresentationDist::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            PresentationDist::QuantileTable { probs, times } => {
                // exact moments of a piecewise-linear quantile function
                let mut m1 = 0.0;
                let mut m2 = 0.0;
                for i in 1..probs.len() {
                    let dp = probs[i] - probs[i - 1];
                    let (a, b) = (times[i - 1], times[i]);
                    m1 += dp * (a + b) / 2.0;
                    m2 += dp * (a * a + a * b + b * b) / 3.0;
                }
                (m2 - m1 * m1).max(0.0)
            }
        }
    }
}
