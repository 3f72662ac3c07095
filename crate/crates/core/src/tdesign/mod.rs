//! Temporal-discontinuity designs.
//!
//! A clinic treats the temporally latter fraction `p` of a clinical sample:
//! each member presents at an independent random time on `[t_s, t_e]` and the
//! `m = p n` latest presenters form the treated subsample. Whether that
//! subsample is distributed like a uniformly randomized one is an empirical
//! question answered here by simulation; the design parameter
//! `K = sigma^2_min / (t_e - t_s)` summarises how much presentation noise the
//! design has to work with.

mod presentation;
mod subsets;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Proportion;
use crate::error::{Error, Result};
use crate::exec::{batches, map_ordered, Execution};
use crate::stats::spearman;
use crate::stream::SeededStream;

pub use presentation::{MemberSpec, PresentationDist, TimeWindow, TruncatedNormal};
pub use subsets::binomial;
use subsets::{rank, unrank, Binomials};

/// Largest subset space tracked with exact bookkeeping.
pub const ENUMERATION_CAP: u64 = 10_000;

const DRAW_BATCH: u64 = 8_192;

/// Declarative cohort description (the shape read from config files).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    pub window: TimeWindow,
    pub p: f64,
    pub members: Vec<MemberSpec>,
}

/// A validated cohort of independent presentation-time distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct PresentationCohort {
    window: TimeWindow,
    members: Vec<PresentationDist>,
    specs: Vec<MemberSpec>,
    p: Proportion,
    m: usize,
}

impl PresentationCohort {
    pub fn new(window: TimeWindow, members: Vec<MemberSpec>, p: f64) -> Result<Self> {
        let window = TimeWindow::new(window.t_s, window.t_e)?;
        let n = members.len();
        if n < 2 {
            return Err(Error::invalid("members", format!("need at least 2 members, got {n}")));
        }
        let p = Proportion::named("p", p)?;
        let scaled = p.value() * n as f64;
        let m = scaled.round();
        if (scaled - m).abs() > 1e-9 || m < 1.0 {
            return Err(Error::invalid("p", format!("p * n = {scaled} must be a positive integer")));
        }
        let dists = members
            .iter()
            .enumerate()
            .map(|(i, spec)| PresentationDist::from_spec(spec, &window, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(PresentationCohort { window, members: dists, specs: members, p, m: m as usize })
    }

    pub fn from_spec(spec: &CohortSpec) -> Result<Self> {
        Self::new(spec.window, spec.members.clone(), spec.p)
    }

    pub fn n(&self) -> usize {
        self.members.len()
    }

    /// Treated subsample size `p n`.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> Proportion {
        self.p
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn members(&self) -> &[PresentationDist] {
        &self.members
    }

    pub fn specs(&self) -> &[MemberSpec] {
        &self.specs
    }

    /// Draw one presentation time per member into `times`, then move the
    /// indices of the `m` latest presenters to the front of `order`.
    fn draw_top<R: Rng + ?Sized>(&self, rng: &mut R, times: &mut [f64], order: &mut [usize]) {
        for (t, d) in times.iter_mut().zip(&self.members) {
            *t = d.sample(rng);
        }
        for (i, o) in order.iter_mut().enumerate() {
            *o = i;
        }
        // later first; equal times resolve to the lower index
        let later = |a: &usize, b: &usize| times[*b].total_cmp(&times[*a]).then(a.cmp(b));
        if self.m < order.len() {
            order.select_nth_unstable_by(self.m - 1, later);
        }
        order[..self.m].sort_unstable();
    }
}

/// Design parameter `K = sigma^2_min / (t_e - t_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignK {
    /// Smallest member variance, squared time units.
    pub sigma2_min: f64,
    pub length: f64,
    pub k: f64,
}

pub fn compute_k(cohort: &PresentationCohort) -> Result<DesignK> {
    let mut sigma2_min = f64::INFINITY;
    for (i, d) in cohort.members.iter().enumerate() {
        let v = d.variance();
        if !v.is_finite() || v < 0.0 {
            return Err(Error::VarianceUnavailable { member: i, reason: format!("computed variance {v}") });
        }
        sigma2_min = sigma2_min.min(v);
    }
    let length = cohort.window.length();
    Ok(DesignK { sigma2_min, length, k: sigma2_min / length })
}

/// Draw one treated subsample: the 0-based indices of the `p n` members with
/// the latest presentation times, ascending.
pub fn sample_td_subsample(cohort: &PresentationCohort, stream: SeededStream) -> Vec<usize> {
    let mut rng = stream.rng();
    let mut times = vec![0.0; cohort.n()];
    let mut order = vec![0; cohort.n()];
    cohort.draw_top(&mut rng, &mut times, &mut order);
    order.truncate(cohort.m);
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionKind {
    Exact,
    Empirical,
}

/// A probability distribution over the size-`m` subsets of `0..n`.
///
/// Masses are stored in colexicographic subset order; see
/// [`SubsampleDistribution::subsets`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsampleDistribution {
    pub n: usize,
    pub m: usize,
    pub kind: DistributionKind,
    pub masses: Vec<f64>,
    /// Number of simulated draws (empirical only).
    pub draws: Option<u64>,
}

impl SubsampleDistribution {
    /// All subsets in storage order, paired with their mass.
    pub fn subsets(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let table = Binomials::new(self.n);
        self.masses.iter().enumerate().map(move |(r, &mass)| (unrank(r, self.m, &table), mass))
    }

    /// Mass of the subset with the given (unordered, distinct) indices.
    pub fn mass_of(&self, subset: &[usize]) -> Option<f64> {
        if subset.len() != self.m || subset.iter().any(|&i| i >= self.n) {
            return None;
        }
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.m {
            return None;
        }
        let table = Binomials::new(self.n);
        self.masses.get(rank(&sorted, &table)).copied()
    }
}

fn check_space(n: usize, m: usize) -> Result<usize> {
    let size = binomial(n, m);
    if size > ENUMERATION_CAP as u128 {
        return Err(Error::SpaceTooLarge { n, m, size, cap: ENUMERATION_CAP });
    }
    Ok(size as usize)
}

/// Exact uniform distribution over all size-`m` subsets of `n` individuals.
pub fn randomized_distribution(n: usize, m: usize) -> Result<SubsampleDistribution> {
    if m > n || n == 0 {
        return Err(Error::invalid("m", format!("subset size {m} does not fit in n = {n}")));
    }
    let size = check_space(n, m)?;
    Ok(SubsampleDistribution {
        n,
        m,
        kind: DistributionKind::Exact,
        masses: vec![1.0 / size as f64; size],
        draws: None,
    })
}

/// Total-variation distance `(1/2) sum |a - b|` over the common subset space.
pub fn tv_distance(a: &SubsampleDistribution, b: &SubsampleDistribution) -> Result<f64> {
    if a.n != b.n || a.m != b.m || a.masses.len() != b.masses.len() {
        return Err(Error::ShapeMismatch { left_n: a.n, left_m: a.m, right_n: b.n, right_m: b.m });
    }
    let sum: f64 = a.masses.iter().zip(&b.masses).map(|(x, y)| (x - y).abs()).sum();
    Ok((0.5 * sum).min(1.0))
}

/// Raw counts from repeated treated-subsample draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdTally {
    pub draws: u64,
    /// Times each member landed in the treated subsample.
    pub inclusion: Vec<u64>,
    /// Per-subset counts in colex order, when tracked.
    pub subsets: Option<Vec<u64>>,
}

/// Simulate `draws` treated subsamples, batch-parallel under `exec`.
/// Subset counts are kept only when `track_subsets` is set (the space must be
/// under [`ENUMERATION_CAP`]).
pub fn td_tally(
    cohort: &PresentationCohort,
    draws: u64,
    stream: SeededStream,
    track_subsets: bool,
    exec: Execution,
) -> Result<TdTally> {
    let n = cohort.n();
    let m = cohort.m;
    let space = if track_subsets { Some(check_space(n, m)?) } else { None };
    let table = Binomials::new(n);

    let parts = map_ordered(exec, batches(draws, DRAW_BATCH), |(index, len)| {
        let mut rng = stream.fork(index).rng();
        let mut times = vec![0.0; n];
        let mut order = vec![0; n];
        let mut inclusion = vec![0u64; n];
        let mut subsets = space.map(|s| vec![0u64; s]);
        for _ in 0..len {
            cohort.draw_top(&mut rng, &mut times, &mut order);
            let top = &order[..m];
            for &i in top {
                inclusion[i] += 1;
            }
            if let Some(counts) = subsets.as_mut() {
                counts[rank(top, &table)] += 1;
            }
        }
        (inclusion, subsets)
    });

    let mut inclusion = vec![0u64; n];
    let mut subsets = space.map(|s| vec![0u64; s]);
    for (inc, sub) in parts {
        for (a, b) in inclusion.iter_mut().zip(inc) {
            *a += b;
        }
        if let (Some(total), Some(sub)) = (subsets.as_mut(), sub) {
            for (a, b) in total.iter_mut().zip(sub) {
                *a += b;
            }
        }
    }
    Ok(TdTally { draws, inclusion, subsets })
}

impl TdTally {
    pub fn distribution(&self, n: usize, m: usize) -> Option<SubsampleDistribution> {
        let counts = self.subsets.as_ref()?;
        let d = self.draws.max(1) as f64;
        Some(SubsampleDistribution {
            n,
            m,
            kind: DistributionKind::Empirical,
            masses: counts.iter().map(|&c| c as f64 / d).collect(),
            draws: Some(self.draws),
        })
    }

    pub fn inclusion_summary(&self, p: Proportion) -> InclusionSummary {
        let d = self.draws.max(1) as f64;
        let probs: Vec<f64> = self.inclusion.iter().map(|&c| c as f64 / d).collect();
        let max_deviation = probs.iter().map(|pi| (pi - p.value()).abs()).fold(0.0, f64::max);
        InclusionSummary { probs, max_deviation, draws: self.draws }
    }
}

/// Empirical treated-subsample distribution from `draws` simulated cohorts.
pub fn td_distribution(
    cohort: &PresentationCohort,
    draws: u64,
    stream: SeededStream,
) -> Result<SubsampleDistribution> {
    td_distribution_with(cohort, draws, stream, Execution::default())
}

pub fn td_distribution_with(
    cohort: &PresentationCohort,
    draws: u64,
    stream: SeededStream,
    exec: Execution,
) -> Result<SubsampleDistribution> {
    if draws == 0 {
        return Err(Error::invalid("draws", "must be positive"));
    }
    let tally = td_tally(cohort, draws, stream, true, exec)?;
    Ok(tally.distribution(cohort.n(), cohort.m).expect("subsets tracked"))
}

/// Per-member probability of being treated. Under uniform randomization
/// every entry equals `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionSummary {
    pub probs: Vec<f64>,
    /// `max_i |pi_i - p|`.
    pub max_deviation: f64,
    pub draws: u64,
}

pub fn td_inclusion_probs(
    cohort: &PresentationCohort,
    draws: u64,
    stream: SeededStream,
) -> Result<InclusionSummary> {
    if draws == 0 {
        return Err(Error::invalid("draws", "must be positive"));
    }
    let tally = td_tally(cohort, draws, stream, false, Execution::default())?;
    Ok(tally.inclusion_summary(cohort.p))
}

/// Which distance a sweep point reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMetric {
    /// Total variation to the uniform subset distribution.
    TotalVariation,
    /// `max_i |pi_i - p|`, used when the subset space is too large.
    MaxInclusionDeviation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub sigma: f64,
    pub k: f64,
    pub distance: f64,
    pub metric: DistanceMetric,
}

/// Distance from uniform randomization for one cohort.
pub fn td_diagnostic(
    cohort: &PresentationCohort,
    draws: u64,
    stream: SeededStream,
    exec: Execution,
) -> Result<(f64, DistanceMetric, TdTally)> {
    let enumerable = binomial(cohort.n(), cohort.m) <= ENUMERATION_CAP as u128;
    let tally = td_tally(cohort, draws, stream, enumerable, exec)?;
    if enumerable {
        let empirical = tally.distribution(cohort.n(), cohort.m).expect("tracked");
        let uniform = randomized_distribution(cohort.n(), cohort.m)?;
        Ok((tv_distance(&empirical, &uniform)?, DistanceMetric::TotalVariation, tally))
    } else {
        let dev = tally.inclusion_summary(cohort.p).max_deviation;
        Ok((dev, DistanceMetric::MaxInclusionDeviation, tally))
    }
}

/// Rebuild `base` with every member's standard deviation set to each of
/// `sigmas` in turn and report `K` with the distance from randomization.
///
/// Members must be truncated normals; their means are kept. Point `i` draws
/// from `stream.fork(i)`.
pub fn k_sweep(
    base: &PresentationCohort,
    sigmas: &[f64],
    draws: u64,
    stream: SeededStream,
) -> Result<Vec<SweepPoint>> {
    k_sweep_with(base, sigmas, draws, stream, Execution::default())
}

pub fn k_sweep_with(
    base: &PresentationCohort,
    sigmas: &[f64],
    draws: u64,
    stream: SeededStream,
    exec: Execution,
) -> Result<Vec<SweepPoint>> {
    if sigmas.is_empty() {
        return Err(Error::invalid("sigmas", "empty list"));
    }
    if sigmas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("sigmas", "must be strictly increasing"));
    }
    if draws == 0 {
        return Err(Error::invalid("draws", "must be positive"));
    }
    let means = base
        .specs
        .iter()
        .enumerate()
        .map(|(i, s)| match s {
            MemberSpec::TruncatedNormal { mean, .. } => Ok(*mean),
            _ => {
                Err(Error::invalid("members", format!("member {i}: k-sweep needs truncated-normal members")))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    sigmas
        .iter()
        .enumerate()
        .map(|(i, &sigma)| {
            let members = means.iter().map(|&mean| MemberSpec::TruncatedNormal { mean, sd: sigma }).collect();
            let cohort = PresentationCohort::new(base.window, members, base.p.value())?;
            let k = compute_k(&cohort)?.k;
            let (distance, metric, _) = td_diagnostic(&cohort, draws, stream.fork(i as u64), exec)?;
            Ok(SweepPoint { sigma, k, distance, metric })
        })
        .collect()
}

/// Spearman correlation between `K` and distance along a sweep.
pub fn sweep_trend(points: &[SweepPoint]) -> f64 {
    let k: Vec<f64> = points.iter().map(|p| p.k).collect();
    let d: Vec<f64> = points.iter().map(|p| p.distance).collect();
    spearman(&k, &d)
}
