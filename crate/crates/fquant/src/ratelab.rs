//! Rate fitting and mean-regularity estimation: fits measured distortion
//! curves to `C (log N)^{-b}` or `C exp(-c sqrt(log N log log N))` and
//! estimates the regularity modulus exponent from simulated increments.

use rayon::prelude::*;

use crate::allocation::Modulus;
use crate::cppq::{cpp_distortion_curve, CppqParams};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::math::{ols, ols_slope_stderr};
use crate::procsim::{PathSimulator, ProcessSpec};
use crate::product::{distortion_curve, DistortionReport, TrainParams};
use crate::streams::{SeedStreams, StreamKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `e ~ C (log N)^{-b}`
    PolyLog,
    /// `e ~ C exp(-c sqrt(log N log log N))`
    SubExp,
}

/// Least-squares fit of a distortion curve to one of the two models.
#[derive(Debug, Clone)]
pub struct RateFit {
    pub model: FitModel,
    /// `b` (PolyLog) or `c` (SubExp).
    pub rate: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub n_range: (u64, u64),
}

fn check_curve(curve: &[(u64, f64)], min_n: u64) -> Result<()> {
    if curve.len() < 4 {
        return Err(Error::InsufficientPoints { required: 4, actual: curve.len() });
    }
    for &(n, e) in curve {
        if n < min_n {
            return Err(Error::Domain(format!("budget {n} below the fit minimum {min_n}")));
        }
        if !(e > 0.0) {
            return Err(Error::Domain(format!("distortion must be positive, got {e} at N={n}")));
        }
    }
    Ok(())
}

/// OLS of `log e` on `log log N`; `rate` is the polylog exponent `b`.
pub fn fit_polylog(curve: &[(u64, f64)]) -> Result<RateFit> {
    check_curve(curve, 3)?;
    let x: Vec<f64> = curve.iter().map(|&(n, _)| (n as f64).ln().ln()).collect();
    let y: Vec<f64> = curve.iter().map(|&(_, e)| e.ln()).collect();
    let (slope, intercept, r2, residuals) = ols(&x, &y);
    Ok(RateFit {
        model: FitModel::PolyLog,
        rate: -slope,
        amplitude: intercept.exp(),
        r_squared: r2,
        residuals,
        n_range: (curve[0].0, curve[curve.len() - 1].0),
    })
}

/// OLS of `log e` on `sqrt(log N log log N)`; `rate` is the decay
/// constant `c`.
pub fn fit_subexp(curve: &[(u64, f64)]) -> Result<RateFit> {
    check_curve(curve, 16)?;
    let x: Vec<f64> = curve
        .iter()
        .map(|&(n, _)| {
            let ln_n = (n as f64).ln();
            (ln_n * ln_n.ln()).sqrt()
        })
        .collect();
    let y: Vec<f64> = curve.iter().map(|&(_, e)| e.ln()).collect();
    let (slope, intercept, r2, residuals) = ols(&x, &y);
    Ok(RateFit {
        model: FitModel::SubExp,
        rate: -slope,
        amplitude: intercept.exp(),
        r_squared: r2,
        residuals,
        n_range: (curve[0].0, curve[curve.len() - 1].0),
    })
}

/// Estimated regularity modulus: `phi_hat(h) = (E|X_{t+h} - X_t|^rho)^{1/rho}`
/// averaged over base points, one row per ladder rung.
#[derive(Debug, Clone)]
pub struct RegularityEstimate {
    /// Fitted log-log slope `b_hat`.
    pub exponent: f64,
    /// Two standard errors of the fitted slope.
    pub half_width: f64,
    pub rho: f64,
    pub samples: Vec<(f64, f64)>,
}

const REGULARITY_BASE_POINTS: usize = 32;

/// Measures `phi_hat` on a dyadic `h` ladder and fits the log-log slope.
/// For `rho >= 1` plain increments are used; for `rho < 1` the windowed
/// supremum over `[t, t+h]` (on the grid) replaces the increment.
pub fn estimate_regularity(
    spec: ProcessSpec,
    grid: TimeGrid,
    rho: f64,
    h_ladder: &[f64],
    n_paths: usize,
    streams: &SeedStreams,
) -> Result<RegularityEstimate> {
    if h_ladder.len() < 4 {
        return Err(Error::InsufficientPoints { required: 4, actual: h_ladder.len() });
    }
    if !(rho > 0.0) {
        return Err(Error::Domain("rho must be positive".into()));
    }
    let horizon = grid.horizon();
    let step = grid.step();
    let mut h_steps = Vec::with_capacity(h_ladder.len());
    for &h in h_ladder {
        if h < horizon * 2f64.powi(-14) - 1e-12 || h > horizon / 4.0 + 1e-12 {
            return Err(Error::Domain(format!(
                "ladder rung {h} outside [2^-14 T, T/4] for T={horizon}"
            )));
        }
        let steps = (h / step).round();
        if (h - steps * step).abs() > 1e-9 * horizon || steps < 1.0 {
            return Err(Error::Domain(format!(
                "ladder rung {h} is not a multiple of the grid step {step}"
            )));
        }
        h_steps.push(steps as usize);
    }

    let sim = PathSimulator::new(spec, grid)?;
    let m = grid.intervals();
    // per-path, per-rung mean of |X_{t+h} - X_t|^rho over the base points
    let per_path: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(StreamKind::Regularity, i);
            let path = sim.sample_path(&mut rng);
            let v = path.values();
            h_steps
                .iter()
                .map(|&hs| {
                    let mut acc = 0.0;
                    for b in 0..REGULARITY_BASE_POINTS {
                        let t_idx = b * (m - hs) / REGULARITY_BASE_POINTS;
                        let inc = if rho >= 1.0 {
                            (v[t_idx + hs] - v[t_idx]).abs()
                        } else {
                            let mut sup = 0.0f64;
                            for s in t_idx..=t_idx + hs {
                                sup = sup.max((v[s] - v[t_idx]).abs());
                            }
                            sup
                        };
                        acc += inc.powf(rho);
                    }
                    acc / REGULARITY_BASE_POINTS as f64
                })
                .collect()
        })
        .collect();

    let mut samples = Vec::with_capacity(h_ladder.len());
    for (j, &h) in h_ladder.iter().enumerate() {
        let mean: f64 = per_path.iter().map(|row| row[j]).sum::<f64>() / n_paths as f64;
        samples.push((h, mean.powf(1.0 / rho)));
    }
    let x: Vec<f64> = samples.iter().map(|&(h, _)| h.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|&(_, phi)| phi.ln()).collect();
    let (slope, _, _, residuals) = ols(&x, &y);
    let half_width = 2.0 * ols_slope_stderr(&x, &residuals);
    Ok(RegularityEstimate { exponent: slope, half_width, rho, samples })
}

/// The modulus exponent the theory attaches to each family (`None` for
/// jump families, whose quantization rate is not regularity-driven).
pub fn natural_modulus(spec: ProcessSpec, p: f64) -> Option<Modulus> {
    let b = match spec {
        ProcessSpec::Brownian => 0.5,
        ProcessSpec::Fbm { hurst } => hurst,
        ProcessSpec::Stable { alpha } => 1.0 / alpha,
        ProcessSpec::GammaSubordinator { .. } => 1.0 / p,
        ProcessSpec::Poisson { .. } | ProcessSpec::CompoundPoisson { .. } => return None,
    };
    Some(Modulus::power(1.0, b).expect("valid exponent"))
}

/// Side-by-side regularity and rate measurement for one process family.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub family: String,
    pub rho: f64,
    pub r: f64,
    pub p: f64,
    pub b_regularity: f64,
    pub b_rate: f64,
    pub c_subexp: f64,
    pub r2_polylog: f64,
    pub r2_subexp: f64,
    /// `|b_regularity - b_rate| <= 0.15`.
    pub agreement: bool,
    pub curve: Vec<DistortionReport>,
    pub regularity: RegularityEstimate,
}

/// Knobs of [`regularity_rate_report`].
#[derive(Debug, Clone)]
pub struct ReportParams {
    pub budgets: Vec<u64>,
    pub h_ladder: Vec<f64>,
    pub n_regularity_paths: usize,
    pub n_eval_paths: usize,
    pub train: TrainParams,
    pub cppq: CppqParams,
}

/// Runs the regularity estimate and the family's distortion curve, and
/// flags whether the fitted rate exponent matches the regularity
/// exponent. Jump families get the explicit Poisson quantizer curve;
/// everything else the Haar product curve with its natural modulus.
pub fn regularity_rate_report(
    spec: ProcessSpec,
    grid: TimeGrid,
    r: f64,
    p: f64,
    rho: f64,
    params: &ReportParams,
    streams: &SeedStreams,
) -> Result<RateReport> {
    let regularity = estimate_regularity(
        spec,
        grid,
        rho,
        &params.h_ladder,
        params.n_regularity_paths,
        streams,
    )?;
    let curve: Vec<DistortionReport> = match spec {
        ProcessSpec::Poisson { lambda } => cpp_distortion_curve(
            lambda,
            grid.horizon(),
            None,
            r,
            p,
            &params.budgets,
            params.n_eval_paths,
            grid,
            &params.cppq,
            streams,
        )?
        .into_iter()
        .map(|(_, rep)| rep)
        .collect(),
        ProcessSpec::CompoundPoisson { lambda, jump_law } => cpp_distortion_curve(
            lambda,
            grid.horizon(),
            Some(jump_law),
            r,
            p,
            &params.budgets,
            params.n_eval_paths,
            grid,
            &params.cppq,
            streams,
        )?
        .into_iter()
        .map(|(_, rep)| rep)
        .collect(),
        _ => {
            let modulus = natural_modulus(spec, p)
                .ok_or_else(|| Error::InvalidParameter("no modulus for this family".into()))?;
            distortion_curve(
                spec,
                grid,
                modulus,
                r,
                p,
                &params.budgets,
                params.n_eval_paths,
                &params.train,
                streams,
            )?
            .into_iter()
            .map(|(_, rep)| rep)
            .collect()
        }
    };
    let points: Vec<(u64, f64)> = curve.iter().map(|rep| (rep.budget, rep.estimate)).collect();
    let polylog = fit_polylog(&points)?;
    let subexp = fit_subexp(&points)?;
    let agreement = (regularity.exponent - polylog.rate).abs() <= 0.15;
    Ok(RateReport {
        family: spec.label(),
        rho,
        r,
        p,
        b_regularity: regularity.exponent,
        b_rate: polylog.rate,
        c_subexp: subexp.rate,
        r2_polylog: polylog.r_squared,
        r2_subexp: subexp.r_squared,
        agreement,
        curve,
        regularity,
    })
}
