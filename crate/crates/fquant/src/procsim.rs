//! Path simulation on the dyadic grid for every process family under
//! study: Brownian motion, fractional Brownian motion, symmetric
//! alpha-stable processes, Gamma subordinators and (compound) Poisson
//! processes.
//!
//! Jump processes keep the paper's internal clock: unit-rate arrivals
//! `S_n = Z_1 + ... + Z_n` are retained while `S_n <= lambda T`, and a
//! retained arrival jumps at physical time `S_n / lambda`. Paths are
//! projected to the grid cadlag (the value at a grid point includes a
//! jump landing exactly there).

use rand_distr::{Distribution, Exp, Gamma, Normal, StandardUniform};
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{PathSample, TimeGrid};
use crate::streams::PathRng;

/// Jump-size law of a compound Poisson process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpLaw {
    Gaussian { mean: f64, std: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    TwoPoint { lo: f64, hi: f64, prob_hi: f64 },
}

impl JumpLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            JumpLaw::Gaussian { std, .. } => *std > 0.0,
            JumpLaw::Uniform { lo, hi } => lo < hi,
            JumpLaw::Exponential { rate } => *rate > 0.0,
            JumpLaw::TwoPoint { prob_hi, .. } => (0.0..=1.0).contains(prob_hi),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid jump law {self:?}")))
        }
    }

    pub fn sample(&self, rng: &mut PathRng) -> f64 {
        match *self {
            JumpLaw::Gaussian { mean, std } => {
                Normal::new(mean, std).expect("validated").sample(rng)
            }
            JumpLaw::Uniform { lo, hi } => {
                let u: f64 = StandardUniform.sample(rng);
                lo + (hi - lo) * u
            }
            JumpLaw::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
            JumpLaw::TwoPoint { lo, hi, prob_hi } => {
                let u: f64 = StandardUniform.sample(rng);
                if u < prob_hi {
                    hi
                } else {
                    lo
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            JumpLaw::Gaussian { mean, std } => format!("gaussian({mean},{std})"),
            JumpLaw::Uniform { lo, hi } => format!("uniform({lo},{hi})"),
            JumpLaw::Exponential { rate } => format!("exponential({rate})"),
            JumpLaw::TwoPoint { lo, hi, prob_hi } => format!("twopoint({lo},{hi};{prob_hi})"),
        }
    }
}

/// Process family with parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessSpec {
    Brownian,
    /// Fractional Brownian motion with Hurst index in (0, 1).
    Fbm { hurst: f64 },
    /// Symmetric alpha-stable, alpha in (0, 2).
    Stable { alpha: f64 },
    /// Gamma subordinator: X_t ~ Gamma(shape t, rate alpha).
    GammaSubordinator { rate: f64 },
    Poisson { lambda: f64 },
    CompoundPoisson { lambda: f64, jump_law: JumpLaw },
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::Brownian => Ok(()),
            ProcessSpec::Fbm { hurst } => {
                if (0.0..1.0).contains(hurst) && *hurst > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("hurst must be in (0,1), got {hurst}")))
                }
            }
            ProcessSpec::Stable { alpha } => {
                if *alpha > 0.0 && *alpha < 2.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("alpha must be in (0,2), got {alpha}")))
                }
            }
            ProcessSpec::GammaSubordinator { rate } => {
                if *rate > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("gamma rate must be > 0, got {rate}")))
                }
            }
            ProcessSpec::Poisson { lambda } => {
                if *lambda > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")))
                }
            }
            ProcessSpec::CompoundPoisson { lambda, jump_law } => {
                if *lambda <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "lambda must be > 0, got {lambda}"
                    )));
                }
                jump_law.validate()
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProcessSpec::Brownian => "brownian".into(),
            ProcessSpec::Fbm { hurst } => format!("fbm(H={hurst})"),
            ProcessSpec::Stable { alpha } => format!("stable(alpha={alpha})"),
            ProcessSpec::GammaSubordinator { rate } => format!("gamma(rate={rate})"),
            ProcessSpec::Poisson { lambda } => format!("poisson(lambda={lambda})"),
            ProcessSpec::CompoundPoisson { lambda, jump_law } => {
                format!("cpp(lambda={lambda},{})", jump_law.label())
            }
        }
    }
}

/// Censored arrival clock and jump sizes of one (compound) Poisson path.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    /// Unit-rate arrivals `S_n <= lambda T`, strictly increasing.
    pub arrivals: Vec<f64>,
    /// Jump sizes, aligned with `arrivals` (all 1 for a standard Poisson).
    pub sizes: Vec<f64>,
    pub lambda: f64,
    pub horizon: f64,
}

impl JumpRecord {
    pub fn clock_cap(&self) -> f64 {
        self.lambda * self.horizon
    }

    /// Physical jump times `S_n / lambda`.
    pub fn physical_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.arrivals.iter().map(move |s| s / self.lambda)
    }

    /// Grid projection `X(t_i) = sum_{S_n/lambda <= t_i} U_n`, cadlag.
    pub fn to_grid_path(&self, grid: TimeGrid) -> Result<PathSample> {
        let mut values = Vec::with_capacity(grid.points());
        let mut acc = 0.0;
        let mut next = 0usize;
        for i in 0..grid.points() {
            let t = grid.time(i);
            while next < self.arrivals.len() && self.arrivals[next] / self.lambda <= t {
                acc += self.sizes[next];
                next += 1;
            }
            values.push(acc);
        }
        PathSample::new(grid, values)
    }
}

/// Unit-exponential partial sums retained while `S_n <= lambda T`, with
/// i.i.d. sizes from `law` (or 1 for the standard Poisson).
pub fn simulate_jumps(
    lambda: f64,
    horizon: f64,
    law: Option<&JumpLaw>,
    rng: &mut PathRng,
) -> JumpRecord {
    let cap = lambda * horizon;
    let exp = Exp::new(1.0f64).expect("unit rate");
    let mut arrivals = Vec::new();
    let mut sizes = Vec::new();
    let mut s = 0.0;
    loop {
        s += exp.sample(rng);
        if s > cap {
            break;
        }
        arrivals.push(s);
        sizes.push(match law {
            Some(l) => l.sample(rng),
            None => 1.0,
        });
    }
    JumpRecord { arrivals, sizes, lambda, horizon }
}

/// One draw of the n-th unit-rate arrival `S_n ~ Gamma(n, 1)`. The
/// censoring indicator `1{S_n <= lambda T}` is applied by the codebook
/// trainer, which is why the draw is returned as-is; the exact tail
/// probability is [`crate::math::erlang_cdf`].
pub fn erlang_truncated_sampler(n: u64, rng: &mut PathRng) -> f64 {
    let exp = Exp::new(1.0f64).expect("unit rate");
    (0..n).map(|_| exp.sample(rng)).sum()
}

enum SimKind {
    Brownian { step_std: f64 },
    Fbm(FbmSampler),
    Stable { alpha: f64, step_scale: f64 },
    Gamma { increment: Gamma<f64> },
    Jump { lambda: f64, law: Option<JumpLaw> },
}

/// Reusable per-(spec, grid) sampler; construction does the expensive
/// precomputation (fBm embedding), sampling is cheap and thread-safe.
pub struct PathSimulator {
    spec: ProcessSpec,
    grid: TimeGrid,
    kind: SimKind,
}

impl PathSimulator {
    pub fn new(spec: ProcessSpec, grid: TimeGrid) -> Result<Self> {
        spec.validate()?;
        let h = grid.step();
        let kind = match spec {
            ProcessSpec::Brownian => SimKind::Brownian { step_std: h.sqrt() },
            ProcessSpec::Fbm { hurst } => SimKind::Fbm(FbmSampler::new(hurst, grid)?),
            ProcessSpec::Stable { alpha } => {
                SimKind::Stable { alpha, step_scale: h.powf(1.0 / alpha) }
            }
            ProcessSpec::GammaSubordinator { rate } => SimKind::Gamma {
                increment: Gamma::new(h, 1.0 / rate)
                    .map_err(|e| Error::InvalidParameter(format!("gamma increment: {e}")))?,
            },
            ProcessSpec::Poisson { lambda } => SimKind::Jump { lambda, law: None },
            ProcessSpec::CompoundPoisson { lambda, jump_law } => {
                SimKind::Jump { lambda, law: Some(jump_law) }
            }
        };
        Ok(Self { spec, grid, kind })
    }

    pub fn spec(&self) -> ProcessSpec {
        self.spec
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn sample_path(&self, rng: &mut PathRng) -> PathSample {
        match &self.kind {
            SimKind::Brownian { step_std } => {
                let normal = Normal::new(0.0, *step_std).expect("positive std");
                let mut values = Vec::with_capacity(self.grid.points());
                let mut acc = 0.0;
                values.push(0.0);
                for _ in 0..self.grid.intervals() {
                    acc += normal.sample(rng);
                    values.push(acc);
                }
                PathSample::new(self.grid, values).expect("finite increments")
            }
            SimKind::Fbm(sampler) => sampler.sample_path(self.grid, rng),
            SimKind::Stable { alpha, step_scale } => {
                let mut values = Vec::with_capacity(self.grid.points());
                let mut acc = 0.0;
                values.push(0.0);
                for _ in 0..self.grid.intervals() {
                    acc += step_scale * sample_symmetric_stable(*alpha, rng);
                    values.push(acc);
                }
                PathSample::new(self.grid, values).expect("finite increments")
            }
            SimKind::Gamma { increment } => {
                let mut values = Vec::with_capacity(self.grid.points());
                let mut acc = 0.0;
                values.push(0.0);
                for _ in 0..self.grid.intervals() {
                    acc += increment.sample(rng);
                    values.push(acc);
                }
                PathSample::new(self.grid, values).expect("finite increments")
            }
            SimKind::Jump { lambda, law } => {
                let record = simulate_jumps(*lambda, self.grid.horizon(), law.as_ref(), rng);
                record.to_grid_path(self.grid).expect("finite jumps")
            }
        }
    }
}

/// One-shot simulation; build a [`PathSimulator`] for Monte Carlo loops.
pub fn simulate(spec: ProcessSpec, grid: TimeGrid, rng: &mut PathRng) -> Result<PathSample> {
    Ok(PathSimulator::new(spec, grid)?.sample_path(rng))
}

/// Chambers-Mallows-Stuck draw of a standard symmetric alpha-stable
/// variable (for alpha = 2 this is N(0, 2)).
pub fn sample_symmetric_stable(alpha: f64, rng: &mut PathRng) -> f64 {
    let u: f64 = StandardUniform.sample(rng);
    let v = std::f64::consts::PI * (u - 0.5);
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    let e: f64 = Exp::new(1.0f64).expect("unit rate").sample(rng);
    let t = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let s = ((1.0 - alpha) * v).cos() / e;
    t * s.powf((1.0 - alpha) / alpha)
}

/// Autocovariance of unit-step fractional Gaussian noise.
pub(crate) fn fgn_autocov(hurst: f64, k: usize) -> f64 {
    let k = k as f64;
    0.5 * ((k + 1.0).powf(2.0 * hurst) + (k - 1.0).abs().powf(2.0 * hurst)
        - 2.0 * k.powf(2.0 * hurst))
}

enum FbmMethod {
    /// sqrt(eigenvalue / 2M) factors of the circulant embedding.
    CirculantEmbedding { fft: Arc<dyn Fft<f64>>, factors: Vec<f64> },
    /// Packed lower-triangular Cholesky factor of the fGn covariance.
    Cholesky { factor: Vec<f64>, dim: usize },
}

struct FbmSampler {
    method: FbmMethod,
    increments: usize,
    /// h^H converts unit-step fGn to step-h increments.
    step_scale: f64,
}

const CHOLESKY_MAX_LEVEL: u32 = 12;

impl FbmSampler {
    fn new(hurst: f64, grid: TimeGrid) -> Result<Self> {
        let m = grid.intervals();
        let step_scale = grid.step().powf(hurst);
        // circulant row c_j = gamma(min(j, 2M - j))
        let two_m = 2 * m;
        let mut row: Vec<Complex<f64>> = (0..two_m)
            .map(|j| Complex::new(fgn_autocov(hurst, j.min(two_m - j)), 0.0))
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(two_m);
        fft.process(&mut row);
        let min_eig = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        let max_eig = row.iter().map(|c| c.re).fold(0.0f64, f64::max);
        if min_eig >= -1e-9 * max_eig {
            let factors =
                row.iter().map(|c| (c.re.max(0.0) / two_m as f64).sqrt()).collect();
            return Ok(Self {
                method: FbmMethod::CirculantEmbedding { fft, factors },
                increments: m,
                step_scale,
            });
        }
        if grid.levels() > CHOLESKY_MAX_LEVEL {
            return Err(Error::EmbeddingFailed(grid.levels()));
        }
        Ok(Self {
            method: FbmMethod::Cholesky { factor: cholesky_fgn(hurst, m)?, dim: m },
            increments: m,
            step_scale,
        })
    }

    fn sample_fgn(&self, rng: &mut PathRng) -> Vec<f64> {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        match &self.method {
            FbmMethod::CirculantEmbedding { fft, factors } => {
                let m = self.increments;
                let two_m = 2 * m;
                let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
                let mut w = vec![Complex::new(0.0, 0.0); two_m];
                w[0] = Complex::new(factors[0] * normal.sample(rng), 0.0);
                w[m] = Complex::new(factors[m] * normal.sample(rng), 0.0);
                for j in 1..m {
                    let re = normal.sample(rng) * inv_sqrt2;
                    let im = normal.sample(rng) * inv_sqrt2;
                    w[j] = Complex::new(factors[j] * re, factors[j] * im);
                    w[two_m - j] = Complex::new(factors[j] * re, -(factors[j] * im));
                }
                fft.process(&mut w);
                w[..m].iter().map(|c| c.re).collect()
            }
            FbmMethod::Cholesky { factor, dim } => {
                let z: Vec<f64> = (0..*dim).map(|_| normal.sample(rng)).collect();
                let mut out = vec![0.0; *dim];
                for i in 0..*dim {
                    let base = i * (i + 1) / 2;
                    let mut acc = 0.0;
                    for j in 0..=i {
                        acc += factor[base + j] * z[j];
                    }
                    out[i] = acc;
                }
                out
            }
        }
    }

    fn sample_path(&self, grid: TimeGrid, rng: &mut PathRng) -> PathSample {
        let fgn = self.sample_fgn(rng);
        let mut values = Vec::with_capacity(grid.points());
        let mut acc = 0.0;
        values.push(0.0);
        for g in fgn {
            acc += self.step_scale * g;
            values.push(acc);
        }
        PathSample::new(grid, values).expect("finite increments")
    }
}

/// Packed lower-triangular Cholesky factor of the fGn covariance matrix.
fn cholesky_fgn(hurst: f64, dim: usize) -> Result<Vec<f64>> {
    let mut factor = vec![0.0f64; dim * (dim + 1) / 2];
    for i in 0..dim {
        let row_i = i * (i + 1) / 2;
        for j in 0..=i {
            let row_j = j * (j + 1) / 2;
            let mut sum = fgn_autocov(hurst, i - j);
            for k in 0..j {
                sum -= factor[row_i + k] * factor[row_j + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "fGn covariance not positive definite".into(),
                    ));
                }
                factor[row_i + j] = sum.sqrt();
            } else {
                factor[row_i + j] = sum / factor[row_j + j];
            }
        }
    }
    Ok(factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::erlang_cdf;
    use crate::streams::{SeedStreams, StreamKind};

    fn grid(levels: u32) -> TimeGrid {
        TimeGrid::new(1.0, levels).unwrap()
    }

    #[test]
    fn brownian_terminal_moments() {
        let streams = SeedStreams::new(101);
        let sim = PathSimulator::new(ProcessSpec::Brownian, grid(6)).unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..n {
            let mut rng = streams.rng(StreamKind::Eval, i);
            let x_t = *sim.sample_path(&mut rng).values().last().unwrap();
            sum += x_t;
            sum_sq += x_t * x_t;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        // 4 sigma band for the mean, 3% for the variance
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn poisson_count_mean() {
        let streams = SeedStreams::new(102);
        let sim = PathSimulator::new(ProcessSpec::Poisson { lambda: 3.0 }, grid(5)).unwrap();
        let n = 100_000;
        let mut total = 0.0;
        for i in 0..n {
            let mut rng = streams.rng(StreamKind::Eval, i);
            total += *sim.sample_path(&mut rng).values().last().unwrap();
        }
        let mean = total / n as f64;
        assert!((mean - 3.0).abs() < 0.09, "mean {mean}");
    }

    #[test]
    fn fbm_half_is_white_increments() {
        assert!((fgn_autocov(0.5, 0) - 1.0).abs() < 1e-10);
        for k in 1..10 {
            assert!(fgn_autocov(0.5, k).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn fbm_increment_correlations_match_covariance() {
        let streams = SeedStreams::new(103);
        let hurst = 0.75;
        let g = grid(6);
        let sim = PathSimulator::new(ProcessSpec::Fbm { hurst }, g).unwrap();
        let n = 40_000;
        let h = g.step();
        let mut var = 0.0;
        let mut lag1 = 0.0;
        for i in 0..n {
            let mut rng = streams.rng(StreamKind::Eval, i);
            let path = sim.sample_path(&mut rng);
            let v = path.values();
            let d0 = v[1] - v[0];
            let d1 = v[2] - v[1];
            var += d0 * d0;
            lag1 += d0 * d1;
        }
        let scale = h.powf(2.0 * hurst);
        let var_hat = var / n as f64 / scale;
        let corr_hat = lag1 / var;
        let want_corr = fgn_autocov(hurst, 1);
        assert!((var_hat - 1.0).abs() < 0.05, "var {var_hat}");
        assert!((corr_hat - want_corr).abs() < 0.05, "lag1 {corr_hat} vs {want_corr}");
    }

    #[test]
    fn stable_self_similarity_ks() {
        // quantiles of X_t / t^{1/alpha} match those of X_1
        let streams = SeedStreams::new(104);
        let alpha = 1.5;
        let g = grid(4);
        let sim = PathSimulator::new(ProcessSpec::Stable { alpha }, g).unwrap();
        let n = 100_000u64;
        let t = 0.25;
        let idx = (g.intervals() as f64 * t) as usize;
        let mut at_t = Vec::with_capacity(n as usize);
        let mut at_one = Vec::with_capacity(n as usize);
        for i in 0..n {
            let mut rng = streams.rng(StreamKind::Eval, i);
            let path = sim.sample_path(&mut rng);
            at_t.push(path.values()[idx] / t.powf(1.0 / alpha));
            let mut rng = streams.rng(StreamKind::Aux, i);
            let path = sim.sample_path(&mut rng);
            at_one.push(*path.values().last().unwrap());
        }
        at_t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        at_one.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = two_sample_ks(&at_t, &at_one);
        assert!(ks < 0.02, "KS distance {ks}");
    }

    fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
        let (mut i, mut j) = (0usize, 0usize);
        let mut d = 0.0f64;
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            let fa = i as f64 / a.len() as f64;
            let fb = j as f64 / b.len() as f64;
            d = d.max((fa - fb).abs());
        }
        d
    }

    #[test]
    fn gamma_small_time_moment_growth() {
        // E|X_t|^rho / t -> Gamma(rho) / alpha^rho as t -> 0
        let streams = SeedStreams::new(105);
        let rate = 1.0;
        let rho = 0.5;
        let t = 2f64.powi(-10);
        let gamma_inc = Gamma::new(t, 1.0 / rate).unwrap();
        let n = 200_000;
        let mut sum = 0.0;
        let mut rng = streams.rng(StreamKind::Aux, 0);
        for _ in 0..n {
            let x: f64 = gamma_inc.sample(&mut rng);
            sum += x.powf(rho);
        }
        let ratio = sum / n as f64 / t;
        // Gamma(1/2) = sqrt(pi)
        let want = std::f64::consts::PI.sqrt() / rate.powf(rho);
        assert!((ratio / want - 1.0).abs() < 0.10, "ratio {ratio} want {want}");
    }

    #[test]
    fn compound_poisson_absolute_moment() {
        // E sum_{k<=K_t} |U_k| = t lambda E|U_1| (lambda = 1 here)
        let streams = SeedStreams::new(106);
        let law = JumpLaw::Gaussian { mean: 0.3, std: 1.0 };
        let n = 100_000u64;
        let mut total = 0.0;
        for i in 0..n {
            let mut rng = streams.rng(StreamKind::Eval, i);
            let rec = simulate_jumps(1.0, 1.0, Some(&law), &mut rng);
            total += rec.sizes.iter().map(|u| u.abs()).sum::<f64>();
        }
        let mean = total / n as f64;
        // E|N(m, 1)| = sqrt(2/pi) e^{-m^2/2} + m (1 - 2 P(Z > m))
        let m: f64 = 0.3;
        let want = (2.0 / std::f64::consts::PI).sqrt() * (-m * m / 2.0f64).exp()
            + m * (1.0 - 2.0 * normal_tail(m));
        assert!((mean / want - 1.0).abs() < 0.03, "mean {mean} want {want}");
    }

    // P(Z > m) for the folded-normal mean above
    fn normal_tail(m: f64) -> f64 {
        // Abramowitz-Stegun 7.1.26 rational approximation, |err| < 1.5e-7
        let x = m / 2f64.sqrt();
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let poly = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        0.5 * poly * (-x * x).exp()
    }

    #[test]
    fn jump_simulation_edge_cases() {
        let streams = SeedStreams::new(107);
        let mut rng = streams.rng(StreamKind::Aux, 1);
        // lambda T = 0 (horizon -> 0): always empty
        let rec = simulate_jumps(1.0, 0.0, None, &mut rng);
        assert!(rec.arrivals.is_empty());

        // P(at least one jump) = 1 - e^{-1} at lambda T = 1
        let n = 100_000u64;
        let mut nonempty = 0u64;
        let mut count_total = 0usize;
        for i in 0..n {
            let mut rng = streams.rng(StreamKind::Eval, i);
            let rec = simulate_jumps(1.0, 1.0, None, &mut rng);
            nonempty += u64::from(!rec.arrivals.is_empty());
            count_total += rec.arrivals.len();
        }
        let p_hat = nonempty as f64 / n as f64;
        assert!((p_hat - (1.0 - (-1.0f64).exp())).abs() < 0.01, "p {p_hat}");
        let mean = count_total as f64 / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean count {mean}");
    }

    #[test]
    fn erlang_sampler_matches_cdf() {
        let streams = SeedStreams::new(108);
        let mut rng = streams.rng(StreamKind::Aux, 2);
        let n = 100_000;
        let mut below = 0u64;
        for _ in 0..n {
            below += u64::from(erlang_truncated_sampler(2, &mut rng) <= 1.0);
        }
        let p_hat = below as f64 / n as f64;
        let want = erlang_cdf(2, 1.0); // 1 - 2/e
        assert!((p_hat - want).abs() < 0.01, "p {p_hat} vs {want}");
    }

    #[test]
    fn identical_seed_is_bit_identical() {
        let streams = SeedStreams::new(109);
        for spec in [
            ProcessSpec::Brownian,
            ProcessSpec::Fbm { hurst: 0.3 },
            ProcessSpec::Stable { alpha: 1.2 },
            ProcessSpec::GammaSubordinator { rate: 2.0 },
            ProcessSpec::CompoundPoisson {
                lambda: 2.0,
                jump_law: JumpLaw::Uniform { lo: -1.0, hi: 1.0 },
            },
        ] {
            let sim = PathSimulator::new(spec, grid(5)).unwrap();
            let a = sim.sample_path(&mut streams.rng(StreamKind::Eval, 7));
            let b = sim.sample_path(&mut streams.rng(StreamKind::Eval, 7));
            assert_eq!(a.values(), b.values(), "{}", spec.label());
        }
    }

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        assert!(ProcessSpec::Fbm { hurst: 1.0 }.validate().is_err());
        assert!(ProcessSpec::Stable { alpha: 2.0 }.validate().is_err());
        assert!(ProcessSpec::Poisson { lambda: 0.0 }.validate().is_err());
        assert!(JumpLaw::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
    }

    #[test]
    fn cadlag_projection_keeps_jump_at_grid_point() {
        let g = TimeGrid::new(1.0, 2).unwrap();
        let rec = JumpRecord {
            arrivals: vec![0.25, 0.6],
            sizes: vec![2.0, -1.0],
            lambda: 1.0,
            horizon: 1.0,
        };
        let path = rec.to_grid_path(g).unwrap();
        // t = 0.25 carries the first jump (cadlag), t = 0.5 unchanged,
        // t = 0.75 carries the second
        assert_eq!(path.values(), &[0.0, 2.0, 2.0, 1.0, 1.0]);
    }
}
