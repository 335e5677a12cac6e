//! Config-driven experiment execution and threshold checking.
//!
//! `run` executes one experiment end to end and writes CSVs, persisted
//! quantizers and a manifest under the output directory, deterministic
//! given `(config, seed)` and independent of the thread count. `check`
//! re-evaluates the experiment against the embedded thresholds and
//! produces one pass/fail row per criterion.

use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Normal, StandardUniform};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::cppq::{cpp_distortion_curve, CppqParams};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::persist;
use crate::procsim::{PathSimulator, ProcessSpec};
use crate::product::{curve_depth, default_grid_levels, distortion_curve, TrainParams};
use crate::quant1d::{distortion, pierce_curve, train_dp_oracle, train_lloyd, PierceCurve, SampleSet};
use crate::ratelab::{
    estimate_regularity, fit_polylog, fit_subexp, regularity_rate_report, ReportParams,
};
use crate::streams::{SeedStreams, StreamKind};

/// Thresholds pinned for `check`; the same numbers gate the acceptance
/// suite.
pub mod thresholds {
    /// Polylog slope window for Brownian motion.
    pub const BROWNIAN_SLOPE: (f64, f64) = (0.35, 0.65);
    /// Slope tolerance around the Hurst index / stable index.
    pub const SLOPE_TOL: f64 = 0.15;
    /// Measured Brownian error at N = 2^12 must stay below twice the
    /// sharp constant `sqrt(2) T / (pi sqrt(log N))`.
    pub const SHARP_BAND_FACTOR: f64 = 2.0;
    /// Relative tolerance of `N e_N` against the Zador constant at the
    /// largest size.
    pub const ZADOR_REL_TOL: f64 = 0.10;
    /// Lloyd vs exact-DP distortion agreement on small Gaussian books.
    pub const DP_REL_TOL: f64 = 0.005;
    /// Relative tolerance of the uniform closed form `1/(N sqrt(12))`.
    pub const UNIFORM_REL_TOL: f64 = 0.01;
    /// Sub-exponential fit quality floor for jump families.
    pub const SUBEXP_R2_MIN: f64 = 0.9;
    /// Regularity windows (half-widths) per family.
    pub const REG_TOL_BROWNIAN: f64 = 0.05;
    pub const REG_TOL_FBM: f64 = 0.05;
    pub const REG_TOL_STABLE: f64 = 0.07;
    pub const REG_TOL_POISSON: f64 = 0.10;
    /// Informational window for families the suite does not pin.
    pub const REG_TOL_OTHER: f64 = 0.15;
}

/// One pass/fail line of `check`.
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Sharp Brownian constant `sqrt(2) T / (pi sqrt(log N))`.
pub fn brownian_sharp_rate(horizon: f64, n: u64) -> f64 {
    2f64.sqrt() * horizon / (std::f64::consts::PI * (n as f64).ln().sqrt())
}

/// Zador limit of `N e_{N,2}` for the standard Gaussian:
/// `(1/sqrt(12)) (int g^{1/3})^{3/2}`, with the integral evaluated by
/// Simpson quadrature.
pub fn gaussian_zador_constant() -> f64 {
    let f = |x: f64| (2.0 * std::f64::consts::PI).powf(-1.0 / 6.0) * (-x * x / 6.0).exp();
    let (a, b, n) = (-16.0, 16.0, 4096);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        sum += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = sum * h / 3.0;
    integral.powf(1.5) / 12f64.sqrt()
}

fn grid_for_curve(config: &ExperimentConfig) -> Result<TimeGrid> {
    let level = match config.grid.level {
        Some(l) => l,
        None => default_grid_levels(curve_depth(config.modulus()?, &config.budget_list()?)?),
    };
    TimeGrid::new(config.horizon(), level)
}

fn grid_for_jumps(config: &ExperimentConfig) -> Result<TimeGrid> {
    TimeGrid::new(config.horizon(), config.grid.level.unwrap_or(12))
}

fn grid_for_regularity(config: &ExperimentConfig) -> Result<TimeGrid> {
    let ladder = config.h_ladder()?;
    let horizon = config.horizon();
    let min_h = ladder.first().copied().unwrap_or(horizon / 8.0);
    let needed = (horizon / min_h).log2().ceil() as u32 + 1;
    TimeGrid::new(horizon, config.grid.level.unwrap_or(needed.max(10)))
}

fn scalar_sizes(config: &ExperimentConfig) -> Vec<usize> {
    config.scalar.sizes.clone().unwrap_or_else(|| vec![1, 2, 4, 8, 16, 32, 64])
}

fn run_pierce(config: &ExperimentConfig, streams: &SeedStreams) -> Result<(String, PierceCurve)> {
    let law = config.scalar.law.clone().unwrap_or_else(|| "gaussian".into());
    let sizes = scalar_sizes(config);
    let r = config.exponents.r;
    let delta = config.exponents.delta;
    let mut train_rng = streams.rng(StreamKind::PierceTrain, 0);
    let mut eval_rng = streams.rng(StreamKind::PierceEval, 0);
    let curve = match law.as_str() {
        "gaussian" => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            pierce_curve(
                |rng| normal.sample(rng),
                r,
                delta,
                &sizes,
                config.paths.train,
                config.paths.eval,
                &mut train_rng,
                &mut eval_rng,
            )?
        }
        "uniform" => pierce_curve(
            |rng| StandardUniform.sample(rng),
            r,
            delta,
            &sizes,
            config.paths.train,
            config.paths.eval,
            &mut train_rng,
            &mut eval_rng,
        )?,
        other => return Err(Error::Config(format!("scalar.law: unknown law {other:?}"))),
    };
    Ok((law, curve))
}

fn dump_eval_paths(
    sim: &PathSimulator,
    streams: &SeedStreams,
    dir: &Path,
    count: u64,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    for i in 0..count {
        let mut rng = streams.rng(StreamKind::Eval, i);
        let path = sim.sample_path(&mut rng);
        let mut out = String::from("t,value\n");
        for (j, v) in path.values().iter().enumerate() {
            out.push_str(&format!("{},{v}\n", path.grid().time(j)));
        }
        let file = dir.join(format!("path{i}.csv"));
        fs::write(&file, out)?;
        files.push(file);
    }
    Ok(())
}

/// Executes the configured experiment, writing all artifacts under
/// `out_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    config_echo: &str,
    out_dir: &Path,
    dump_paths: bool,
) -> Result<RunOutput> {
    fs::create_dir_all(out_dir)?;
    let streams = SeedStreams::new(config.seed);
    let mut files = Vec::new();
    match config.kind {
        ExperimentKind::ScalarPierce => {
            let (law, curve) = run_pierce(config, &streams)?;
            let path = out_dir.join("pierce.csv");
            persist::write_pierce_csv(&path, &law, &curve)?;
            files.push(path);
        }
        ExperimentKind::HaarCurve => {
            let spec = config.process_spec()?;
            let grid = grid_for_curve(config)?;
            let params = TrainParams {
                samples_per_coeff: config.paths.train,
                ..TrainParams::default()
            };
            let curve = distortion_curve(
                spec,
                grid,
                config.modulus()?,
                config.exponents.r,
                config.exponents.p,
                &config.budget_list()?,
                config.paths.eval,
                &params,
                &streams,
            )?;
            let reports: Vec<_> = curve.iter().map(|(_, rep)| rep.clone()).collect();
            let csv = out_dir.join("curve.csv");
            persist::write_distortion_csv(&csv, &reports)?;
            files.push(csv);
            for (q, _) in &curve {
                let dir = out_dir.join("quantizers").join(format!("N{}", q.plan().budget()));
                files.extend(persist::write_product_quantizer(&dir, q)?);
            }
            if dump_paths {
                let sim = PathSimulator::new(spec, grid)?;
                dump_eval_paths(&sim, &streams, &out_dir.join("paths"), 8, &mut files)?;
            }
        }
        ExperimentKind::CppCurve => {
            let spec = config.process_spec()?;
            let grid = grid_for_jumps(config)?;
            let (lambda, jump_law) = match spec {
                ProcessSpec::Poisson { lambda } => (lambda, None),
                ProcessSpec::CompoundPoisson { lambda, jump_law } => (lambda, Some(jump_law)),
                _ => unreachable!("validated in config"),
            };
            let params = CppqParams {
                delta: config.exponents.delta,
                train_draws: config.paths.train,
                ..CppqParams::default()
            };
            let curve = cpp_distortion_curve(
                lambda,
                grid.horizon(),
                jump_law,
                config.exponents.r,
                config.exponents.p,
                &config.budget_list()?,
                config.paths.eval,
                grid,
                &params,
                &streams,
            )?;
            let reports: Vec<_> = curve.iter().map(|(_, rep)| rep.clone()).collect();
            let csv = out_dir.join("curve.csv");
            persist::write_distortion_csv(&csv, &reports)?;
            files.push(csv);
            for (q, _) in &curve {
                let dir = out_dir.join("cppq").join(format!("N{}", q.budget()));
                files.extend(persist::write_poisson_quantizer(&dir, q)?);
            }
            if dump_paths {
                let sim = PathSimulator::new(spec, grid)?;
                dump_eval_paths(&sim, &streams, &out_dir.join("paths"), 8, &mut files)?;
            }
        }
        ExperimentKind::Regularity => {
            let spec = config.process_spec()?;
            let grid = grid_for_regularity(config)?;
            let est = estimate_regularity(
                spec,
                grid,
                config.exponents.rho,
                &config.h_ladder()?,
                config.paths.regularity,
                &streams,
            )?;
            let csv = out_dir.join("regularity.csv");
            persist::write_regularity_csv(&csv, &spec.label(), &est)?;
            files.push(csv);
            let summary = out_dir.join("regularity_summary.csv");
            fs::write(
                &summary,
                format!(
                    "family,rho,b_hat,half_width\n{},{},{},{}\n",
                    spec.label(),
                    est.rho,
                    est.exponent,
                    est.half_width
                ),
            )?;
            files.push(summary);
        }
        ExperimentKind::Report => {
            let spec = config.process_spec()?;
            let jumpy = matches!(
                spec,
                ProcessSpec::Poisson { .. } | ProcessSpec::CompoundPoisson { .. }
            );
            let grid =
                if jumpy { grid_for_jumps(config)? } else { grid_for_curve(config)? };
            let params = ReportParams {
                budgets: config.budget_list()?,
                h_ladder: config.h_ladder()?,
                n_regularity_paths: config.paths.regularity,
                n_eval_paths: config.paths.eval,
                train: TrainParams {
                    samples_per_coeff: config.paths.train,
                    ..TrainParams::default()
                },
                cppq: CppqParams {
                    delta: config.exponents.delta,
                    train_draws: config.paths.train,
                    ..CppqParams::default()
                },
            };
            let report = regularity_rate_report(
                spec,
                grid,
                config.exponents.r,
                config.exponents.p,
                config.exponents.rho,
                &params,
                &streams,
            )?;
            let report_csv = out_dir.join("report.csv");
            persist::write_report_csv(&report_csv, std::slice::from_ref(&report))?;
            files.push(report_csv);
            let curve_csv = out_dir.join("curve.csv");
            persist::write_distortion_csv(&curve_csv, &report.curve)?;
            files.push(curve_csv);
            let reg_csv = out_dir.join("regularity.csv");
            persist::write_regularity_csv(&reg_csv, &report.family, &report.regularity)?;
            files.push(reg_csv);
        }
    }
    let manifest = persist::write_manifest(out_dir, config_echo, &files)?;
    files.push(manifest);
    Ok(RunOutput { out_dir: out_dir.to_path_buf(), files })
}

fn window_row(name: &str, value: f64, center: f64, tol: f64) -> CheckRow {
    let pass = (value - center).abs() <= tol;
    CheckRow {
        name: name.into(),
        pass,
        detail: format!("{value:.4} vs {center:.4} ± {tol:.3}"),
    }
}

/// Evaluates the thresholds relevant to the configured experiment kind.
pub fn check_experiment(config: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let streams = SeedStreams::new(config.seed);
    let mut rows = Vec::new();
    match config.kind {
        ExperimentKind::ScalarPierce => {
            let (law, curve) = run_pierce(config, &streams)?;
            match law.as_str() {
                "gaussian" => {
                    let zador = gaussian_zador_constant();
                    let bounded = curve
                        .points
                        .iter()
                        .all(|pt| pt.scaled <= zador * (1.0 + thresholds::ZADOR_REL_TOL));
                    rows.push(CheckRow {
                        name: "pierce: N e_N bounded by Zador".into(),
                        pass: bounded,
                        detail: format!(
                            "max N e_N = {:.4}, limit {:.4}",
                            curve.points.iter().map(|p| p.scaled).fold(0.0, f64::max),
                            zador
                        ),
                    });
                    let last = curve.points.last().expect("nonempty curve");
                    rows.push(CheckRow {
                        name: "pierce: N e_N approaches Zador".into(),
                        pass: (last.scaled / zador - 1.0).abs() <= thresholds::ZADOR_REL_TOL,
                        detail: format!(
                            "N={}: {:.4} vs {:.4}",
                            last.size, last.scaled, zador
                        ),
                    });
                    rows.push(dp_cross_check(config, &streams)?);
                }
                _ => {
                    let mut worst = 0.0f64;
                    for pt in &curve.points {
                        let want = 1.0 / (pt.size as f64 * 12f64.sqrt());
                        worst = worst.max((pt.error / want - 1.0).abs());
                    }
                    rows.push(CheckRow {
                        name: "pierce: uniform closed form".into(),
                        pass: worst <= thresholds::UNIFORM_REL_TOL,
                        detail: format!("worst relative error {worst:.4}"),
                    });
                }
            }
        }
        ExperimentKind::HaarCurve => {
            let spec = config.process_spec()?;
            let grid = grid_for_curve(config)?;
            let params = TrainParams {
                samples_per_coeff: config.paths.train,
                ..TrainParams::default()
            };
            let curve = distortion_curve(
                spec,
                grid,
                config.modulus()?,
                config.exponents.r,
                config.exponents.p,
                &config.budget_list()?,
                config.paths.eval,
                &params,
                &streams,
            )?;
            let points: Vec<(u64, f64)> =
                curve.iter().map(|(q, rep)| (q.plan().budget(), rep.estimate)).collect();
            let fit = fit_polylog(&points)?;
            match spec {
                ProcessSpec::Brownian => {
                    let (lo, hi) = thresholds::BROWNIAN_SLOPE;
                    rows.push(CheckRow {
                        name: "haar-curve: brownian slope".into(),
                        pass: (lo..=hi).contains(&fit.rate),
                        detail: format!("b_hat = {:.4} in [{lo}, {hi}]", fit.rate),
                    });
                    if let Some(&(n, e)) = points.iter().find(|&&(n, _)| n == 1 << 12) {
                        let band =
                            thresholds::SHARP_BAND_FACTOR * brownian_sharp_rate(grid.horizon(), n);
                        rows.push(CheckRow {
                            name: "haar-curve: brownian sharp-rate band".into(),
                            pass: e <= band,
                            detail: format!("e(2^12) = {e:.4} <= {band:.4}"),
                        });
                    }
                }
                ProcessSpec::Fbm { hurst } => {
                    rows.push(window_row(
                        "haar-curve: fbm slope",
                        fit.rate,
                        hurst,
                        thresholds::SLOPE_TOL,
                    ));
                }
                ProcessSpec::Stable { alpha } => {
                    rows.push(window_row(
                        "haar-curve: stable slope",
                        fit.rate,
                        1.0 / alpha,
                        thresholds::SLOPE_TOL,
                    ));
                }
                _ => {
                    rows.push(CheckRow {
                        name: "haar-curve: slope (informational)".into(),
                        pass: true,
                        detail: format!("b_hat = {:.4}", fit.rate),
                    });
                }
            }
        }
        ExperimentKind::CppCurve => {
            let spec = config.process_spec()?;
            let grid = grid_for_jumps(config)?;
            let (lambda, jump_law) = match spec {
                ProcessSpec::Poisson { lambda } => (lambda, None),
                ProcessSpec::CompoundPoisson { lambda, jump_law } => (lambda, Some(jump_law)),
                _ => unreachable!("validated in config"),
            };
            let params = CppqParams {
                delta: config.exponents.delta,
                train_draws: config.paths.train,
                ..CppqParams::default()
            };
            let curve = cpp_distortion_curve(
                lambda,
                grid.horizon(),
                jump_law,
                config.exponents.r,
                config.exponents.p,
                &config.budget_list()?,
                config.paths.eval,
                grid,
                &params,
                &streams,
            )?;
            let points: Vec<(u64, f64)> =
                curve.iter().map(|(q, rep)| (q.budget(), rep.estimate)).collect();
            let fit = fit_subexp(&points)?;
            rows.push(CheckRow {
                name: "cpp-curve: subexp decay constant".into(),
                pass: fit.rate > 0.0,
                detail: format!("c_hat = {:.4}", fit.rate),
            });
            rows.push(CheckRow {
                name: "cpp-curve: subexp fit quality".into(),
                pass: fit.r_squared > thresholds::SUBEXP_R2_MIN,
                detail: format!(
                    "R^2 = {:.4} > {}",
                    fit.r_squared,
                    thresholds::SUBEXP_R2_MIN
                ),
            });
        }
        ExperimentKind::Regularity => {
            let spec = config.process_spec()?;
            let grid = grid_for_regularity(config)?;
            let rho = config.exponents.rho;
            let est = estimate_regularity(
                spec,
                grid,
                rho,
                &config.h_ladder()?,
                config.paths.regularity,
                &streams,
            )?;
            let (center, tol) = match spec {
                ProcessSpec::Brownian => (0.5, thresholds::REG_TOL_BROWNIAN),
                ProcessSpec::Fbm { hurst } => (hurst, thresholds::REG_TOL_FBM),
                ProcessSpec::Stable { alpha } => (1.0 / alpha, thresholds::REG_TOL_STABLE),
                ProcessSpec::Poisson { .. } | ProcessSpec::CompoundPoisson { .. } => {
                    (1.0 / rho, thresholds::REG_TOL_POISSON)
                }
                ProcessSpec::GammaSubordinator { .. } => (1.0 / rho, thresholds::REG_TOL_OTHER),
            };
            rows.push(window_row(
                &format!("regularity: {} slope", spec.label()),
                est.exponent,
                center,
                tol,
            ));
        }
        ExperimentKind::Report => {
            let spec = config.process_spec()?;
            let jumpy = matches!(
                spec,
                ProcessSpec::Poisson { .. } | ProcessSpec::CompoundPoisson { .. }
            );
            let grid = if jumpy { grid_for_jumps(config)? } else { grid_for_curve(config)? };
            let params = ReportParams {
                budgets: config.budget_list()?,
                h_ladder: config.h_ladder()?,
                n_regularity_paths: config.paths.regularity,
                n_eval_paths: config.paths.eval,
                train: TrainParams {
                    samples_per_coeff: config.paths.train,
                    ..TrainParams::default()
                },
                cppq: CppqParams {
                    delta: config.exponents.delta,
                    train_draws: config.paths.train,
                    ..CppqParams::default()
                },
            };
            let report = regularity_rate_report(
                spec,
                grid,
                config.exponents.r,
                config.exponents.p,
                config.exponents.rho,
                &params,
                &streams,
            )?;
            // jump families decay faster than any regularity-driven rate,
            // so their agreement flag must come out false
            let expect_agreement = !jumpy;
            rows.push(CheckRow {
                name: format!("report: {} regularity/rate agreement", report.family),
                pass: report.agreement == expect_agreement,
                detail: format!(
                    "b_reg = {:.4}, b_rate = {:.4}, agreement = {}",
                    report.b_regularity, report.b_rate, report.agreement
                ),
            });
        }
    }
    Ok(rows)
}

/// Lloyd-vs-exact agreement on a small Gaussian sample (the exact side
/// is the interval dynamic program).
fn dp_cross_check(config: &ExperimentConfig, streams: &SeedStreams) -> Result<CheckRow> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = streams.rng(StreamKind::Aux, 17);
    let samples =
        SampleSet::new((0..10_000).map(|_| normal.sample(&mut rng)).collect(), "gauss")?;
    let r = config.exponents.r;
    let mut worst = 0.0f64;
    for n in [2usize, 4, 8] {
        let dp = train_dp_oracle(&samples, n, r)?;
        let lloyd = train_lloyd(&samples, n, r, 1e-10, 2000)?;
        let d_dp = distortion(&dp, &samples, r);
        let d_lloyd = distortion(&lloyd, &samples, r);
        worst = worst.max((d_lloyd - d_dp) / d_dp);
    }
    Ok(CheckRow {
        name: "pierce: Lloyd matches DP oracle".into(),
        pass: worst <= thresholds::DP_REL_TOL,
        detail: format!("worst relative gap {worst:.5}"),
    })
}
