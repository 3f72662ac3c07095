//! A scenario where the effect at the cutoff is real and positive but the
//! average effect over the latent window around the cutoff is zero.
//!
//! The effect is `+M` on a central band around `c` and `-M` on the flanks
//! out to the edges of the latent window. The central band's width is tuned
//! so the `h`-weighted integral over the window vanishes. Gaussian noise
//! over-samples the centre among people measured near `c`, so the estimate at
//! the cutoff comes out positive anyway.

use serde::Serialize;

use super::functions::{linspace, normal_cdf, trapezoid, Band, DensitySpec, NoiseSpec, StepFunction};
use super::{RddScenario, RddScenarioSpec, GRID_POINTS};
use crate::error::{Error, Result};

/// Magnitude of the benefit (centre) and harm (flanks).
pub const ADVERSARIAL_MAGNITUDE: f64 = 0.2;
/// Untreated success probability everywhere.
pub const ADVERSARIAL_BASELINE: f64 = 0.5;
/// Absolute tolerance on the latent-window integral of `effect * h`.
pub const CALIBRATION_TOLERANCE: f64 = 1e-6;
pub const CALIBRATION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversarialScenario {
    pub scenario: RddScenario,
    /// Fraction of each half of the latent window taken by the central band.
    pub central_fraction: f64,
    /// `int effect(u) h(u) du` over the latent window (calibrated to zero).
    pub latent_integral: f64,
    /// `int effect(u) h(u) g(c - u) du` over the latent window.
    pub reweighted_integral: f64,
    pub iterations: usize,
}

fn effect_for(c: f64, lo: f64, hi: f64, fraction: f64) -> StepFunction {
    let left = c - fraction * (c - lo);
    let right = c + fraction * (hi - c);
    StepFunction {
        default: 0.0,
        bands: vec![
            Band { lo: left, hi: right, value: ADVERSARIAL_MAGNITUDE },
            Band { lo, hi: left, value: -ADVERSARIAL_MAGNITUDE },
            Band { lo: right, hi, value: -ADVERSARIAL_MAGNITUDE },
        ],
    }
}

/// Calibrated scenario with Gaussian noise of standard deviation
/// `noise_scale`. Fails when the reweighted effect is not positive, which
/// includes noise too narrow to resolve on the density grid.
pub fn adversarial_scenario(
    c: f64,
    latent_window: (f64, f64),
    noise_scale: f64,
) -> Result<AdversarialScenario> {
    let built = adversarial_scenario_with_noise(c, latent_window, NoiseSpec::Gaussian { sd: noise_scale })?;
    if !(built.reweighted_integral > 0.0) {
        return Err(Error::CalibrationFailed(format!(
            "reweighted effect {} is not positive",
            built.reweighted_integral
        )));
    }
    Ok(built)
}

/// Same construction with any noise family. With uniform noise covering the
/// latent window the reweighted integral is zero up to grid error.
///
/// The latent density is Gaussian, centred on `c` with standard deviation
/// equal to the window width. The Z-window half-width `delta` is a tenth of
/// a Gaussian noise scale, or a fiftieth of a uniform half-width.
pub fn adversarial_scenario_with_noise(
    c: f64,
    latent_window: (f64, f64),
    noise: NoiseSpec,
) -> Result<AdversarialScenario> {
    let (lo, hi) = latent_window;
    if !(lo < c && c < hi) {
        return Err(Error::invalid("latent_window", format!("({lo}, {hi}) must contain the cutoff {c}")));
    }
    let scale = noise.scale();
    let spacing = (hi - lo) / (GRID_POINTS - 1) as f64;
    if !(scale.is_finite() && scale > spacing) {
        return Err(Error::CalibrationFailed(format!(
            "noise scale {scale} does not exceed the grid spacing {spacing}; assignment is deterministic in the latent score"
        )));
    }
    let h_sd = hi - lo;
    let h = DensitySpec::Gaussian { mean: c, sd: h_sd };
    let mass = |a: f64, b: f64| normal_cdf(b, c, h_sd) - normal_cdf(a, c, h_sd);
    // effect-weighted latent integral as a function of the central fraction
    let integral = |f: f64| {
        let left = c - f * (c - lo);
        let right = c + f * (hi - c);
        ADVERSARIAL_MAGNITUDE * (mass(left, right) - mass(lo, left) - mass(right, hi))
    };

    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut fraction = 0.5;
    let mut value = integral(fraction);
    let mut iterations = 0;
    while value.abs() > CALIBRATION_TOLERANCE {
        if iterations == CALIBRATION_MAX_ITER {
            return Err(Error::CalibrationFailed(format!(
                "bisection did not converge in {CALIBRATION_MAX_ITER} iterations (residual {value})"
            )));
        }
        if value > 0.0 {
            b = fraction;
        } else {
            a = fraction;
        }
        fraction = 0.5 * (a + b);
        value = integral(fraction);
        iterations += 1;
    }

    let effect = effect_for(c, lo, hi, fraction);
    let g = noise.as_density();
    let grid = linspace(lo, hi, GRID_POINTS);
    let weighted: Vec<f64> = grid.iter().map(|&u| effect.eval(u) * h.pdf(u) * g.pdf(c - u)).collect();
    let reweighted_integral = trapezoid(&grid, &weighted);

    let delta = match noise {
        NoiseSpec::Gaussian { sd } => sd / 10.0,
        NoiseSpec::Uniform { half_width } => half_width / 50.0,
    };
    let scenario = RddScenario::new(RddScenarioSpec {
        cutoff: c,
        delta,
        latent: h,
        noise,
        baseline: StepFunction::constant(ADVERSARIAL_BASELINE),
        effect,
        latent_window: Some(latent_window),
    })?;
    Ok(AdversarialScenario {
        scenario,
        central_fraction: fraction,
        latent_integral: value,
        reweighted_integral,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrates_to_zero_latent_effect() {
        let adv = adversarial_scenario(1500.0, (1499.0, 1501.0), 0.5).unwrap();
        assert!(adv.latent_integral.abs() <= CALIBRATION_TOLERANCE);
        assert!(adv.reweighted_integral > 0.0);
        assert!(adv.central_fraction > 0.0 && adv.central_fraction < 0.5);

        // independent check of the calibration on a fine grid
        let sc = &adv.scenario;
        let xs = linspace(1499.0, 1501.0, 200_001);
        let ys: Vec<f64> = xs.iter().map(|&u| sc.effect.eval(u) * sc.latent.pdf(u)).collect();
        assert!(trapezoid(&xs, &ys).abs() < 1e-5);
    }

    #[test]
    fn uniform_noise_removes_reweighting() {
        let adv =
            adversarial_scenario_with_noise(1500.0, (1499.0, 1501.0), NoiseSpec::Uniform { half_width: 1.0 })
                .unwrap();
        assert!(adv.reweighted_integral.abs() < 1e-4, "{}", adv.reweighted_integral);
    }

    #[test]
    fn vanishing_noise_fails() {
        assert!(matches!(
            adversarial_scenario(1500.0, (1499.0, 1501.0), 1e-9),
            Err(Error::CalibrationFailed(_))
        ));
        assert!(matches!(
            adversarial_scenario(1500.0, (1499.0, 1501.0), 0.0),
            Err(Error::CalibrationFailed(_))
        ));
    }

    #[test]
    fn window_must_contain_cutoff() {
        assert!(adversarial_scenario(1500.0, (1501.0, 1502.0), 0.5).is_err());
    }
}
