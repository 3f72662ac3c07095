//! One function per subcommand: call into the library, build a report.

use std::path::Path;

use trialkit::rdd::{
    adversarial_scenario_with_noise, conditional_latent_density, simulate_rdd_with, RddResult, RddScenario,
};
use trialkit::sensitivity::{
    alpha_domain, bounds_unconstrained, bounds_with_alpha, check_conditional_no_confounding,
    feasible_alpha_domain, lower_bound, oracle_bounds, upper_bound, PotentialOutcomeCohort,
    DEFAULT_TOLERANCE,
};
use trialkit::tdesign::{
    compute_k, k_sweep_with, randomized_distribution, td_diagnostic, PresentationCohort,
};
use trialkit::transport::{
    dominance_check, min_nstar_for_dominance, opposites_cells, randomized_cells, CellSizes, TransportScenario,
};
use trialkit::{Error, Execution, Proportion, RatePair, SeededStream};

use crate::config::{
    BoundsParams, ConfoundingParams, KSweepParams, OracleParams, Params, RddSimParams, TdSimParams,
    TransportParams,
};
use crate::report::{num, Report, Section, Value};

const DIGITS: usize = 6;

pub fn execute(params: &Params, seed: u64) -> trialkit::Result<Report> {
    let stream = SeededStream::from_seed(seed);
    match params {
        Params::Bounds(p) => bounds(p),
        Params::Oracle(p) => oracle(p),
        Params::Transport(p) => transport(p),
        Params::TdSim(p) => td_sim(p, stream),
        Params::KSweep(p) => k_sweep(p, stream),
        Params::RddSim(p) => rdd_sim(p, stream),
        Params::Confounding(p) => confounding(p),
    }
}

fn bounds(p: &BoundsParams) -> trialkit::Result<Report> {
    let rates = RatePair::new(p.rj, p.rk)?;
    let result = match p.alpha {
        None => bounds_unconstrained(rates),
        Some(a) => bounds_with_alpha(rates, Proportion::named("alpha", a)?)?,
    };
    let stated = alpha_domain(rates);
    let feasible = feasible_alpha_domain(rates);
    let alpha = match result.alpha_used {
        Some(a) => num(a.value(), 3),
        None => "none".into(),
    };
    let summary = Section::key_values(
        "bounds",
        vec![
            ("rj", num(p.rj, 3)),
            ("rk", num(p.rk, 3)),
            ("alpha", alpha),
            ("upper", num(result.upper.value(), 3)),
            ("lower", num(result.lower.value(), 3)),
            ("alpha_domain_lo", num(stated.lo.value(), 3)),
            ("alpha_domain_hi", num(stated.hi.value(), 3)),
            ("alpha_feasible_hi", num(feasible.hi.value(), 3)),
        ],
    );
    Ok(Report::new("bounds").with(summary))
}

fn oracle(p: &OracleParams) -> trialkit::Result<Report> {
    let rates = RatePair::new(p.rj, p.rk)?;
    let alpha = p.alpha.map(|a| Proportion::named("alpha", a)).transpose()?;
    let out = oracle_bounds(p.n, rates, alpha)?;
    let (cu, cl) = (upper_bound(p.rj, p.rk, p.alpha), lower_bound(p.rj, p.rk, p.alpha));
    let alpha_cell = match p.alpha {
        Some(a) => num(a, 3),
        None => "none".into(),
    };
    let summary = Section::key_values(
        "oracle",
        vec![
            ("n", p.n.into()),
            ("rj", num(p.rj, 3)),
            ("rk", num(p.rk, 3)),
            ("alpha", alpha_cell),
            ("upper", num(out.bounds.upper.value(), DIGITS)),
            ("lower", num(out.bounds.lower.value(), DIGITS)),
            ("upper_exact", out.upper_exact.to_string().into()),
            ("lower_exact", out.lower_exact.to_string().into()),
            ("feasible_tables", out.feasible_tables.into()),
            ("closed_form_upper", num(cu, DIGITS)),
            ("closed_form_lower", num(cl, DIGITS)),
        ],
    );
    Ok(Report::new("oracle").with(summary))
}

fn cell_rows(section: &mut Section, design: &str, cells: &CellSizes) {
    let diag = |x: Option<f64>| match x {
        Some(v) => num(v, 3),
        None => "external".into(),
    };
    section.push(vec![design.into(), "j".into(), "j".into(), diag(cells.n_jj)]);
    section.push(vec![design.into(), "j".into(), "k".into(), num(cells.n_jk, 3)]);
    section.push(vec![design.into(), "k".into(), "j".into(), num(cells.n_kj, 3)]);
    section.push(vec![design.into(), "k".into(), "k".into(), diag(cells.n_kk)]);
}

fn transport(p: &TransportParams) -> trialkit::Result<Report> {
    let probe = TransportScenario::new(p.n, p.p, p.q.unwrap_or(0.5), p.n_star)?;
    let min_star = min_nstar_for_dominance(p.n, probe.p);
    let n_star = p.n_star.unwrap_or(min_star);
    let sc = TransportScenario::new(p.n, p.p, p.q.unwrap_or(0.5), Some(n_star))?;
    let randomized = randomized_cells(&sc);
    let opposites = opposites_cells(&sc)?;
    let dominates = dominance_check(&randomized, &opposites)?;
    let summary = Section::key_values(
        "transport",
        vec![
            ("n", p.n.into()),
            ("p", num(sc.p.value(), 3)),
            ("q", num(sc.q.value(), 3)),
            ("min_n_star", min_star.into()),
            ("n_star", n_star.into()),
            ("dominates", dominates.into()),
        ],
    );
    let mut cells = Section::new("cells", &["design", "assigned", "preferred", "expected_count"]);
    cell_rows(&mut cells, "randomized", &randomized);
    cell_rows(&mut cells, "opposites", &opposites);
    Ok(Report::new("transport").with(summary).with(cells))
}

fn td_sim(p: &TdSimParams, stream: SeededStream) -> trialkit::Result<Report> {
    if p.draws == 0 {
        return Err(Error::Invalid { field: "draws", reason: "must be positive".into() });
    }
    let cohort = PresentationCohort::from_spec(&p.cohort)?;
    let k = compute_k(&cohort)?;
    let (distance, metric, tally) = td_diagnostic(&cohort, p.draws, stream, Execution::default())?;
    let metric_name = match metric {
        trialkit::tdesign::DistanceMetric::TotalVariation => "total-variation",
        trialkit::tdesign::DistanceMetric::MaxInclusionDeviation => "max-inclusion-deviation",
    };
    let summary = Section::key_values(
        "td-sim",
        vec![
            ("n", cohort.n().into()),
            ("m", cohort.m().into()),
            ("p", num(cohort.p().value(), 3)),
            ("draws", p.draws.into()),
            ("sigma2_min", num(k.sigma2_min, DIGITS)),
            ("window_length", num(k.length, DIGITS)),
            ("k", num(k.k, DIGITS)),
            ("metric", metric_name.into()),
            ("distance", num(distance, DIGITS)),
        ],
    );
    let inc = tally.inclusion_summary(cohort.p());
    let mut inclusion = Section::new("inclusion", &["member", "inclusion_prob", "deviation"]);
    for (i, &pi) in inc.probs.iter().enumerate() {
        inclusion.push(vec![i.into(), num(pi, DIGITS), num(pi - cohort.p().value(), DIGITS)]);
    }
    let mut report = Report::new("td-sim").with(summary).with(inclusion);
    if let Some(empirical) = tally.distribution(cohort.n(), cohort.m()) {
        let uniform = randomized_distribution(cohort.n(), cohort.m())?;
        let mut subsets = Section::new("subsets", &["subset", "empirical_mass", "uniform_mass"]);
        for ((subset, mass), (_, u)) in empirical.subsets().zip(uniform.subsets()) {
            let label = subset.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
            subsets.push(vec![label.into(), num(mass, DIGITS), num(u, DIGITS)]);
        }
        report = report.with(subsets);
    }
    Ok(report)
}

fn k_sweep(p: &KSweepParams, stream: SeededStream) -> trialkit::Result<Report> {
    let cohort = PresentationCohort::from_spec(&p.cohort)?;
    let points = k_sweep_with(&cohort, &p.sigmas, p.draws, stream, Execution::default())?;
    let mut sweep = Section::new("k-sweep", &["sigma", "k", "distance", "metric"]);
    for pt in points {
        let metric = match pt.metric {
            trialkit::tdesign::DistanceMetric::TotalVariation => "total-variation",
            trialkit::tdesign::DistanceMetric::MaxInclusionDeviation => "max-inclusion-deviation",
        };
        sweep.push(vec![num(pt.sigma, DIGITS), num(pt.k, DIGITS), num(pt.distance, DIGITS), metric.into()]);
    }
    Ok(Report::new("k-sweep").with(sweep))
}

fn rdd_result_section(r: &RddResult) -> Section {
    Section::key_values(
        "rdd-sim",
        vec![
            ("n_pop", r.n_pop.into()),
            ("window_estimate", num(r.window_estimate, DIGITS)),
            ("mc_se", num(r.mc_se, DIGITS)),
            ("true_window_ate", num(r.true_window_ate, DIGITS)),
            ("rate_above", num(r.rate_above, DIGITS)),
            ("rate_below", num(r.rate_below, DIGITS)),
            ("n_window", r.n_window.into()),
            ("n_above", r.n_above.into()),
            ("n_below", r.n_below.into()),
            ("n_latent_window", r.n_latent_window.into()),
            ("warning", r.warning.clone().unwrap_or_else(|| "none".into()).into()),
        ],
    )
}

/// The scenario a config describes, plus calibration details when built
/// adversarially.
pub fn rdd_scenario(p: &RddSimParams) -> trialkit::Result<(RddScenario, Option<Section>)> {
    match (&p.scenario, &p.adversarial) {
        (Some(spec), None) => Ok((RddScenario::new(spec.clone())?, None)),
        (None, Some(adv)) => {
            let built = adversarial_scenario_with_noise(adv.cutoff, adv.latent_window, adv.noise)?;
            let section = Section::key_values(
                "calibration",
                vec![
                    ("central_fraction", num(built.central_fraction, DIGITS)),
                    ("latent_integral", num(built.latent_integral, 9)),
                    ("reweighted_integral", num(built.reweighted_integral, DIGITS)),
                    ("delta", num(built.scenario.delta, DIGITS)),
                    ("iterations", built.iterations.into()),
                ],
            );
            Ok((built.scenario, Some(section)))
        }
        _ => Err(Error::Invalid {
            field: "scenario",
            reason: "exactly one of `scenario` or `adversarial` is required".into(),
        }),
    }
}

fn rdd_sim(p: &RddSimParams, stream: SeededStream) -> trialkit::Result<Report> {
    let (scenario, calibration) = rdd_scenario(p)?;
    let result = simulate_rdd_with(&scenario, p.n_pop, stream, Execution::default())?;
    let mut report = Report::new("rdd-sim").with(rdd_result_section(&result));
    if let Some(c) = calibration {
        report = report.with(c);
    }
    Ok(report)
}

/// The conditional density of the latent score at the cutoff.
pub fn density_report(p: &RddSimParams) -> trialkit::Result<Report> {
    let (scenario, _) = rdd_scenario(p)?;
    let grid = scenario.default_grid(scenario.cutoff);
    let density = conditional_latent_density(&scenario, scenario.cutoff, &grid)?;
    let mut section = Section::new("density", &["u", "density"]);
    for (u, d) in density {
        section.push(vec![num(u, DIGITS), num(d, DIGITS)]);
    }
    Ok(Report::new("density").with(section))
}

fn confounding(p: &ConfoundingParams) -> trialkit::Result<Report> {
    let outcomes = p
        .outcomes
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .map(|&y| match y {
                    0 => Ok(Some(false)),
                    1 => Ok(Some(true)),
                    -1 => Ok(None),
                    other => Err(Error::Invalid {
                        field: "outcomes",
                        reason: format!("individual {i}: {other} is not 0, 1 or -1"),
                    }),
                })
                .collect::<trialkit::Result<Vec<_>>>()
        })
        .collect::<trialkit::Result<Vec<_>>>()?;
    let tolerance = p.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::Invalid {
            field: "tolerance",
            reason: format!("{tolerance} is not a non-negative number"),
        });
    }
    let cohort = PotentialOutcomeCohort::new(p.arms, outcomes, Some(p.assigned.clone()))?;
    let v = check_conditional_no_confounding(&cohort, tolerance)?;
    let summary = Section::key_values(
        "confounding",
        vec![
            ("individuals", cohort.len().into()),
            ("arms", cohort.arms().into()),
            ("marginal_holds", v.marginal_holds.into()),
            ("conditional_holds", v.conditional_holds.into()),
        ],
    );
    let mut marginal = Section::new("marginal", &["arm", "interventional", "observational", "holds"]);
    for m in &v.marginal {
        marginal.push(vec![
            m.arm.into(),
            num(m.interventional, DIGITS),
            num(m.observational, DIGITS),
            m.holds.into(),
        ]);
    }
    let mut disc = Section::new("discrepancies", &["condition", "shift", "left", "right", "holds"]);
    for d in &v.discrepancies {
        disc.push(vec![
            d.condition.into(),
            Value::Int(d.shift),
            num(d.left, DIGITS),
            num(d.right, DIGITS),
            d.holds.into(),
        ]);
    }
    Ok(Report::new("confounding").with(summary).with(marginal).with(disc))
}

/// Write `report` as CSV to `path` (used for density grids).
pub fn write_csv(report: &Report, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, report.render(crate::report::Format::Csv))
}
