//! Haar product quantizers: per-coefficient scalar codebooks under an
//! allocation plan, path quantization, and Monte Carlo distortion
//! estimation in `L^r(P)` of the `L^p[0,T]` path distance.

use rayon::prelude::*;
use std::time::Instant;

use crate::allocation::{allocate_phi, AllocationPlan, Modulus, WeightSequence};
use crate::error::{Error, Result};
use crate::grid::{PathSample, TimeGrid};
use crate::haar::{forward_transform, reconstruct, HaarCoeffTree};
use crate::math::Kahan;
use crate::procsim::{PathSimulator, ProcessSpec};
use crate::quant1d::{train_lloyd, Codebook1D, SampleSet};
use crate::streams::{SeedStreams, StreamKind};

/// Monte Carlo estimate of `|| |X - Xhat|_{L^p_T} ||_r`.
#[derive(Debug, Clone)]
pub struct DistortionReport {
    pub budget: u64,
    pub r: f64,
    pub p: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub wall_seconds: f64,
}

/// Codebook training knobs.
#[derive(Debug, Clone, Copy)]
pub struct TrainParams {
    pub samples_per_coeff: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Off by default: size-1 slots are the fixed point {0}; when set,
    /// they use the empirical `L^r`-center instead.
    pub center_unit_slots: bool,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self { samples_per_coeff: 100_000, tol: 1e-10, max_iter: 2000, center_unit_slots: false }
    }
}

/// Smallest Haar level `n_max` whose flat index range `[0, 2^{n_max+1})`
/// covers `depth` coefficients.
pub fn required_max_level(depth: usize) -> u32 {
    let mut n_max = 0u32;
    while (1usize << (n_max + 1)) < depth {
        n_max += 1;
    }
    n_max
}

/// Grid level used by default for curve evaluation: three levels finer
/// than the coarsest grid that resolves the quantizer.
pub fn default_grid_levels(depth: usize) -> u32 {
    (required_max_level(depth) + 1 + 3).clamp(6, 26)
}

/// Lloyd training that falls back to the distinct sample values when the
/// coefficient law is (empirically) supported on fewer points than the
/// allocated size.
fn train_or_distinct(
    samples: &SampleSet,
    size: usize,
    r: f64,
    params: &TrainParams,
) -> Result<Codebook1D> {
    match train_lloyd(samples, size, r, params.tol, params.max_iter) {
        Ok(cb) => Ok(cb),
        Err(Error::DegenerateSamples { .. }) => {
            let mut vals = samples.values().to_vec();
            vals.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
            vals.dedup();
            Codebook1D::new(vals, r, None)
        }
        Err(e) => Err(e),
    }
}

/// A product quantizer over Haar coordinates: coefficient `j` is
/// quantized by `codebooks[j]` for `j < depth` and to 0 beyond.
#[derive(Debug, Clone)]
pub struct ProductQuantizer {
    plan: AllocationPlan,
    codebooks: Vec<Codebook1D>,
    horizon: f64,
    r: f64,
}

impl ProductQuantizer {
    /// Trains one codebook per coefficient slot of the plan.
    pub fn build(
        plan: AllocationPlan,
        coeff_samples: &[SampleSet],
        horizon: f64,
        r: f64,
        params: &TrainParams,
    ) -> Result<Self> {
        if coeff_samples.len() < plan.depth() {
            return Err(Error::InvalidParameter(format!(
                "need samples for {} coefficients, got {}",
                plan.depth(),
                coeff_samples.len()
            )));
        }
        let mut codebooks = Vec::with_capacity(plan.depth());
        for (j, &size) in plan.sizes().iter().enumerate() {
            let size = size as usize;
            let cb = if size == 1 && !params.center_unit_slots {
                Codebook1D::new(vec![0.0], r, None)?
            } else {
                train_or_distinct(&coeff_samples[j], size, r, params)?
            };
            codebooks.push(cb);
        }
        Self::from_parts(plan, codebooks, horizon, r)
    }

    /// Assembles a quantizer from pre-built codebooks (sizes may fall
    /// short of the plan when a coefficient law is degenerate; they can
    /// never exceed it).
    pub fn from_parts(
        plan: AllocationPlan,
        codebooks: Vec<Codebook1D>,
        horizon: f64,
        r: f64,
    ) -> Result<Self> {
        if codebooks.len() != plan.depth() {
            return Err(Error::InvalidParameter("one codebook per plan slot required".into()));
        }
        for (j, cb) in codebooks.iter().enumerate() {
            if cb.size() as u64 > plan.sizes()[j] {
                return Err(Error::InvalidParameter(format!(
                    "codebook {j} has {} points, plan allows {}",
                    cb.size(),
                    plan.sizes()[j]
                )));
            }
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        Ok(Self { plan, codebooks, horizon, r })
    }

    pub fn plan(&self) -> &AllocationPlan {
        &self.plan
    }

    pub fn codebooks(&self) -> &[Codebook1D] {
        &self.codebooks
    }

    pub fn depth(&self) -> usize {
        self.plan.depth()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Haar level the transform must reach to feed every codebook.
    pub fn max_level(&self) -> u32 {
        required_max_level(self.depth())
    }

    /// Coarsest grid level a path must have to be quantized.
    pub fn min_grid_levels(&self) -> u32 {
        self.max_level() + 1
    }

    /// `sum_j log |codebook_j|`; at most `log N` by construction.
    pub fn log_cardinality(&self) -> f64 {
        let mut acc = Kahan::new();
        for cb in &self.codebooks {
            acc.add((cb.size() as f64).ln());
        }
        acc.total()
    }

    /// Nearest-neighbor projection of a coefficient tree; coefficients
    /// beyond the trained depth map to 0.
    pub fn quantize_tree(&self, tree: &HaarCoeffTree) -> (HaarCoeffTree, Vec<usize>) {
        let mut coeffs = vec![0.0; tree.coeffs().len()];
        let mut indices = Vec::with_capacity(self.depth());
        for (j, cb) in self.codebooks.iter().enumerate() {
            let (idx, point) = cb.nearest(tree.coeff(j));
            coeffs[j] = point;
            indices.push(idx);
        }
        let quantized = HaarCoeffTree::from_coeffs(tree.horizon(), tree.max_level(), coeffs)
            .expect("same shape as input tree");
        (quantized, indices)
    }

    /// Forward transform, per-coefficient nearest neighbor, reconstruct.
    pub fn quantize_path(&self, path: &PathSample) -> Result<(PathSample, Vec<usize>)> {
        if (path.grid().horizon() - self.horizon).abs() > 0.0 {
            return Err(Error::Domain("path horizon differs from quantizer horizon".into()));
        }
        let tree = forward_transform(path, self.max_level())?;
        let (qtree, indices) = self.quantize_tree(&tree);
        let qpath = reconstruct(&qtree, path.grid())?;
        Ok((qpath, indices))
    }
}

/// Simulates a training batch and returns per-coefficient sample sets
/// for flat indices `0..depth`, using the `Train` stream namespace.
pub fn collect_coeff_samples(
    sim: &PathSimulator,
    depth: usize,
    n_train: usize,
    streams: &SeedStreams,
) -> Result<Vec<SampleSet>> {
    let n_max = required_max_level(depth);
    if sim.grid().levels() < n_max + 1 {
        return Err(Error::InsufficientResolution {
            required: n_max + 1,
            actual: sim.grid().levels(),
        });
    }
    let rows: Vec<Vec<f64>> = (0..n_train as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(StreamKind::Train, i);
            let path = sim.sample_path(&mut rng);
            let tree = forward_transform(&path, n_max).expect("resolution checked");
            tree.coeffs()[..depth].to_vec()
        })
        .collect();
    let label = sim.spec().label();
    (0..depth)
        .map(|j| {
            SampleSet::new(rows.iter().map(|row| row[j]).collect(), format!("{label}-coeff{j}"))
        })
        .collect()
}

/// Monte Carlo distortion on fresh paths from the `Eval` stream
/// namespace: `estimate = (mean |X - Xhat|_{L^p}^r)^{1/r}`, standard
/// error by the delta method on the r-th-power mean.
pub fn estimate_distortion(
    quantizer: &ProductQuantizer,
    sim: &PathSimulator,
    r: f64,
    p: f64,
    n_paths: usize,
    streams: &SeedStreams,
) -> Result<DistortionReport> {
    if sim.grid().levels() < quantizer.min_grid_levels() {
        return Err(Error::InsufficientResolution {
            required: quantizer.min_grid_levels(),
            actual: sim.grid().levels(),
        });
    }
    let start = Instant::now();
    let powers: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(StreamKind::Eval, i);
            let path = sim.sample_path(&mut rng);
            let (qpath, _) = quantizer.quantize_path(&path)?;
            Ok(path.lp_distance(&qpath, p)?.powf(r))
        })
        .collect::<Result<_>>()?;
    Ok(report_from_powers(&powers, quantizer.plan().budget(), r, p, start.elapsed().as_secs_f64()))
}

pub(crate) fn report_from_powers(
    powers: &[f64],
    budget: u64,
    r: f64,
    p: f64,
    wall_seconds: f64,
) -> DistortionReport {
    let n = powers.len();
    let mut acc = Kahan::new();
    for &y in powers {
        acc.add(y);
    }
    let mean = acc.total() / n as f64;
    let mut var = Kahan::new();
    for &y in powers {
        var.add((y - mean) * (y - mean));
    }
    let se_mean = if n > 1 { (var.total() / (n as f64 * (n - 1) as f64)).sqrt() } else { 0.0 };
    let estimate = mean.max(0.0).powf(1.0 / r);
    let std_error = if mean > 0.0 { mean.powf(1.0 / r - 1.0) / r * se_mean } else { 0.0 };
    DistortionReport { budget, r, p, estimate, std_error, n_paths: n, wall_seconds }
}

/// Allocate, train and measure one budget after another; training
/// samples are collected once at the deepest plan.
pub fn distortion_curve(
    spec: ProcessSpec,
    grid: TimeGrid,
    modulus: Modulus,
    r: f64,
    p: f64,
    budgets: &[u64],
    n_eval: usize,
    params: &TrainParams,
    streams: &SeedStreams,
) -> Result<Vec<(ProductQuantizer, DistortionReport)>> {
    if budgets.is_empty() {
        return Err(Error::InvalidParameter("budget list cannot be empty".into()));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("budgets must be strictly increasing".into()));
    }
    let weights = WeightSequence::phi(modulus);
    let plans: Vec<AllocationPlan> =
        budgets.iter().map(|&n| allocate_phi(&weights, n)).collect::<Result<_>>()?;
    let depth_max = plans.iter().map(|pl| pl.depth()).max().unwrap_or(1);
    let sim = PathSimulator::new(spec, grid)?;
    let samples = collect_coeff_samples(&sim, depth_max, params.samples_per_coeff, streams)?;
    let mut out = Vec::with_capacity(plans.len());
    for plan in plans {
        let quantizer = ProductQuantizer::build(plan, &samples, grid.horizon(), r, params)?;
        let report = estimate_distortion(&quantizer, &sim, r, p, n_eval, streams)?;
        out.push((quantizer, report));
    }
    Ok(out)
}

/// Depth of the deepest plan over a budget list, for grid sizing.
pub fn curve_depth(modulus: Modulus, budgets: &[u64]) -> Result<usize> {
    let weights = WeightSequence::phi(modulus);
    let mut depth = 1;
    for &n in budgets {
        depth = depth.max(allocate_phi(&weights, n)?.depth());
    }
    Ok(depth)
}
