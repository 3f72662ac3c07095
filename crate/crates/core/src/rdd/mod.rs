//! Noise-induced discontinuity designs.
//!
//! Individuals carry a latent score `U ~ h`; what gets measured is
//! `Z = U + e` with exogenous noise `e ~ g`, and treatment goes to everyone
//! with `Z >= c`. Near the cutoff, assignment is as good as random, but the
//! people found there have latent scores distributed proportionally to
//! `h(u) g(c - u)`. Unless `g` is uniform this is not the population of any
//! latent window, so a heterogeneous effect can be estimated consistently
//! while the window's average effect is something else entirely.
//!
//! Outcomes are binary: an untreated individual succeeds with probability
//! `baseline(u)`, a treated one with `baseline(u) + effect(u)`.

mod adversarial;
mod functions;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{batches, map_ordered, Execution};
use crate::stream::SeededStream;

pub use adversarial::{
    adversarial_scenario, adversarial_scenario_with_noise, AdversarialScenario, ADVERSARIAL_BASELINE,
    ADVERSARIAL_MAGNITUDE, CALIBRATION_MAX_ITER, CALIBRATION_TOLERANCE,
};
use functions::trapezoid;
pub use functions::{linspace, Band, DensitySpec, NoiseSpec, StepFunction};

/// Default resolution of density grids.
pub const GRID_POINTS: usize = 2001;

/// Below this population size `mc_se` carries a warning.
pub const MIN_RELIABLE_POPULATION: u64 = 1000;

const POPULATION_BATCH: u64 = 65_536;

/// Declarative scenario, as read from config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RddScenarioSpec {
    pub cutoff: f64,
    pub delta: f64,
    pub latent: DensitySpec,
    pub noise: NoiseSpec,
    pub baseline: StepFunction,
    pub effect: StepFunction,
    /// Latent interval whose average effect is reported; defaults to
    /// `(cutoff - delta, cutoff + delta)`.
    #[serde(default)]
    pub latent_window: Option<(f64, f64)>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RddScenario {
    pub cutoff: f64,
    pub delta: f64,
    pub latent: DensitySpec,
    pub noise: NoiseSpec,
    pub baseline: StepFunction,
    pub effect: StepFunction,
    pub latent_window: (f64, f64),
}

impl RddScenario {
    pub fn new(spec: RddScenarioSpec) -> Result<Self> {
        if !spec.cutoff.is_finite() {
            return Err(Error::invalid("cutoff", "must be finite"));
        }
        if !(spec.delta.is_finite() && spec.delta > 0.0) {
            return Err(Error::invalid("delta", format!("must be positive, got {}", spec.delta)));
        }
        spec.latent.validate("latent")?;
        spec.noise.as_density().validate("noise")?;
        spec.baseline.validate("baseline")?;
        spec.effect.validate("effect")?;
        let latent_window =
            spec.latent_window.unwrap_or((spec.cutoff - spec.delta, spec.cutoff + spec.delta));
        if !(latent_window.0 < latent_window.1) {
            return Err(Error::invalid("latent_window", "need lo < hi"));
        }
        for (field, d) in [("latent", spec.latent), ("noise", spec.noise.as_density())] {
            let (lo, hi) = d.effective_support();
            let xs = linspace(lo, hi, GRID_POINTS);
            let ys: Vec<f64> = xs.iter().map(|&x| d.pdf(x)).collect();
            let mass = trapezoid(&xs, &ys);
            if (mass - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(field, format!("density integrates to {mass}")));
            }
        }
        let sc = RddScenario {
            cutoff: spec.cutoff,
            delta: spec.delta,
            latent: spec.latent,
            noise: spec.noise,
            baseline: spec.baseline,
            effect: spec.effect,
            latent_window,
        };
        sc.check_probabilities()?;
        Ok(sc)
    }

    /// `baseline` and `baseline + effect` must be probabilities on every
    /// piece of the latent support.
    fn check_probabilities(&self) -> Result<()> {
        let (lo, hi) = self.latent.effective_support();
        let mut cuts: Vec<f64> = self
            .baseline
            .breakpoints()
            .chain(self.effect.breakpoints())
            .filter(|x| (lo..=hi).contains(x))
            .chain([lo, hi])
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let probes = cuts.iter().copied().chain(cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        for u in probes {
            let b = self.baseline.eval(u);
            let t = b + self.effect.eval(u);
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::invalid("baseline", format!("value {b} at u = {u} is not a probability")));
            }
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid(
                    "effect",
                    format!("baseline + effect = {t} at u = {u} is not a probability"),
                ));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> RddScenarioSpec {
        RddScenarioSpec {
            cutoff: self.cutoff,
            delta: self.delta,
            latent: self.latent,
            noise: self.noise,
            baseline: self.baseline.clone(),
            effect: self.effect.clone(),
            latent_window: Some(self.latent_window),
        }
    }

    /// Grid of [`GRID_POINTS`] points covering the support of
    /// `h(u) g(z - u)`.
    pub fn default_grid(&self, z: f64) -> Vec<f64> {
        let (nlo, nhi) = self.noise.as_density().effective_support();
        let (hlo, hhi) = self.latent.effective_support();
        let lo = (z - nhi).max(hlo);
        let hi = (z - nlo).min(hhi);
        if lo < hi {
            linspace(lo, hi, GRID_POINTS)
        } else {
            linspace(z - nhi, z - nlo, GRID_POINTS)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RddResult {
    /// Treated-minus-control outcome rate among `|Z - c| < delta`.
    pub window_estimate: f64,
    /// Mean of `effect(u)` over individuals whose latent score lies in the
    /// scenario's latent window.
    pub true_window_ate: f64,
    pub rate_above: f64,
    pub rate_below: f64,
    /// Monte Carlo standard error of `window_estimate`.
    pub mc_se: f64,
    pub n_window: u64,
    pub n_above: u64,
    pub n_below: u64,
    pub n_latent_window: u64,
    pub n_pop: u64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Tally {
    above: u64,
    above_success: u64,
    below: u64,
    below_success: u64,
    latent: u64,
    effect_sum: f64,
}

impl Tally {
    fn add(&mut self, other: Tally) {
        self.above += other.above;
        self.above_success += other.above_success;
        self.below += other.below;
        self.below_success += other.below_success;
        self.latent += other.latent;
        self.effect_sum += other.effect_sum;
    }
}

/// Simulate `n_pop` individuals and estimate the effect at the cutoff.
pub fn simulate_rdd(sc: &RddScenario, n_pop: u64, stream: SeededStream) -> Result<RddResult> {
    simulate_rdd_with(sc, n_pop, stream, Execution::default())
}

pub fn simulate_rdd_with(
    sc: &RddScenario,
    n_pop: u64,
    stream: SeededStream,
    exec: Execution,
) -> Result<RddResult> {
    if n_pop == 0 {
        return Err(Error::invalid("n_pop", "must be positive"));
    }
    let latent = sc.latent.sampler();
    let noise = sc.noise.as_density().sampler();
    let (wlo, whi) = sc.latent_window;

    let parts = map_ordered(exec, batches(n_pop, POPULATION_BATCH), |(index, len)| {
        let mut rng = stream.fork(index).rng();
        let mut t = Tally::default();
        for _ in 0..len {
            let u = latent.sample(&mut rng);
            let z = u + noise.sample(&mut rng);
            let effect = sc.effect.eval(u);
            if u > wlo && u < whi {
                t.latent += 1;
                t.effect_sum += effect;
            }
            if (z - sc.cutoff).abs() < sc.delta {
                let treated = z >= sc.cutoff;
                let mut prob = sc.baseline.eval(u);
                if treated {
                    prob += effect;
                }
                let success = rand::Rng::random::<f64>(&mut rng) < prob;
                if treated {
                    t.above += 1;
                    t.above_success += u64::from(success);
                } else {
                    t.below += 1;
                    t.below_success += u64::from(success);
                }
            }
        }
        t
    });

    let mut t = Tally::default();
    for part in parts {
        t.add(part);
    }
    if t.above == 0 {
        return Err(Error::DegenerateWindow { side: "treated (Z >= c)" });
    }
    if t.below == 0 {
        return Err(Error::DegenerateWindow { side: "control (Z < c)" });
    }
    if t.latent == 0 {
        return Err(Error::invalid("latent_window", "no simulated latent score falls inside"));
    }
    let rate_above = t.above_success as f64 / t.above as f64;
    let rate_below = t.below_success as f64 / t.below as f64;
    let mc_se = (rate_above * (1.0 - rate_above) / t.above as f64
        + rate_below * (1.0 - rate_below) / t.below as f64)
        .sqrt();
    let warning = (n_pop < MIN_RELIABLE_POPULATION)
        .then(|| format!("n_pop = {n_pop} is below {MIN_RELIABLE_POPULATION}; mc_se is unreliable"));
    Ok(RddResult {
        window_estimate: rate_above - rate_below,
        true_window_ate: t.effect_sum / t.latent as f64,
        rate_above,
        rate_below,
        mc_se,
        n_window: t.above + t.below,
        n_above: t.above,
        n_below: t.below,
        n_latent_window: t.latent,
        n_pop,
        warning,
    })
}

/// Density of `U` given `Z = z`: `h(u) g(z - u)` normalised over `grid` by
/// the trapezoid rule.
pub fn conditional_latent_density(sc: &RddScenario, z: f64, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("grid", "need at least two strictly increasing points"));
    }
    let g = sc.noise.as_density();
    let raw: Vec<f64> = grid.iter().map(|&u| sc.latent.pdf(u) * g.pdf(z - u)).collect();
    let mass = trapezoid(grid, &raw);
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::ZeroMass);
    }
    Ok(grid.iter().zip(raw).map(|(&u, d)| (u, d / mass)).collect())
}
