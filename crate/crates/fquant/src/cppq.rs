//! Explicit quantizer for (compound) Poisson paths.
//!
//! The n-th unit-rate arrival `S_n` is quantized by a censored codebook
//! `alpha_n = alpha'_n ∪ {lambda T}`: `alpha'_n` is an `L^{r/p}`-optimal
//! book trained on draws of the censored variable
//! `S_n 1{S_n <= lambda T}`, and the sentinel `lambda T` means "no jump
//! before the horizon". Codebook sizes come from the factorial-weight
//! allocation with `A = (lambda T)^{1/(r+delta)}`; in the compound case
//! the total budget is split `N^(1) * N^(2) <= N` between jump times and
//! jump sizes, and each size `U_n` gets its own `L^r`-optimal book.
//!
//! A quantized path carries a jump of size `Uhat_n` at physical time
//! `Shat_n / lambda` for every non-sentinel `Shat_n`; sentinels carry no
//! jump, so `{S_n > lambda T} ⊆ {Shat_n = lambda T}` maps censored
//! arrivals to "nothing happens".

use rayon::prelude::*;
use std::collections::BTreeMap;
use std::time::Instant;

use crate::allocation::{allocate_factorial, AllocationPlan, WeightSequence};
use crate::error::{Error, Result};
use crate::grid::{PathSample, TimeGrid};
use crate::math::erlang_cdf;
use crate::procsim::{erlang_truncated_sampler, simulate_jumps, JumpLaw, JumpRecord};
use crate::product::{report_from_powers, DistortionReport};
use crate::quant1d::{train_lloyd, Codebook1D, SampleSet};
use crate::streams::{PathRng, SeedStreams, StreamKind};

/// Build-time knobs of the Poisson quantizer.
#[derive(Debug, Clone, Copy)]
pub struct CppqParams {
    /// Pierce moment slack `delta > 0` in `mu p = r + delta`.
    pub delta: f64,
    /// The split constant is `c = 1/sqrt(p r) - epsilon`.
    pub split_epsilon: f64,
    /// Training draws per codebook.
    pub train_draws: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CppqParams {
    fn default() -> Self {
        Self { delta: 0.5, split_epsilon: 0.05, train_draws: 100_000, tol: 1e-10, max_iter: 2000 }
    }
}

/// Censored jump-time books plus (for the compound case) jump-size books.
#[derive(Debug, Clone)]
pub struct PoissonQuantizer {
    lambda: f64,
    horizon: f64,
    r: f64,
    p: f64,
    delta: f64,
    budget: u64,
    time_budget: u64,
    size_budget: u64,
    time_books: Vec<Codebook1D>,
    size_books: Vec<Codebook1D>,
    /// One-point `L^r`-center book for size slots past the allocation
    /// depth (compound case only).
    default_size_book: Option<Codebook1D>,
    jump_law: Option<JumpLaw>,
    /// `P(S_n <= lambda T)` for `n = 1..=time_books.len()`.
    tail_probs: Vec<f64>,
}

/// One quantized jump path.
#[derive(Debug, Clone)]
pub struct QuantizedJumpPath {
    /// `Shat_n` for `n = 1..=max(depth, observed jumps)`; censored slots
    /// hold `lambda T`.
    pub hat_arrivals: Vec<f64>,
    /// `Uhat_n` for each observed jump.
    pub hat_sizes: Vec<f64>,
    pub path: PathSample,
}

fn floor_power(n: u64, exponent: f64) -> u64 {
    ((n as f64).powf(exponent) + 1e-9).floor().max(1.0) as u64
}

/// Trains `alpha'_n` on censored draws and appends the sentinel.
fn train_time_book(
    n: u64,
    size: u64,
    cap: f64,
    r_prime: f64,
    params: &CppqParams,
    rng: &mut PathRng,
) -> Result<Codebook1D> {
    if size <= 1 {
        return Codebook1D::new(vec![cap], r_prime, Some(cap));
    }
    let draws: Vec<f64> = (0..params.train_draws)
        .map(|_| {
            let s = erlang_truncated_sampler(n, rng);
            if s <= cap {
                s
            } else {
                0.0
            }
        })
        .collect();
    let samples = SampleSet::new(draws, format!("erlang{n}-censored"))?;
    let free =
        match train_lloyd(&samples, (size - 1) as usize, r_prime, params.tol, params.max_iter) {
            Ok(cb) => cb.points().to_vec(),
            Err(Error::DegenerateSamples { .. }) => {
                let mut vals = samples.values().to_vec();
                vals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                vals.dedup();
                vals
            }
            Err(e) => return Err(e),
        };
    let mut points: Vec<f64> = free.into_iter().filter(|&x| x < cap).collect();
    points.push(cap);
    Codebook1D::new(points, r_prime, Some(cap))
}

/// Builds the quantizer: budget split, factorial allocations, censored
/// time books, and (compound case) per-size jump books.
#[allow(clippy::too_many_arguments)]
pub fn build_poisson_quantizer(
    lambda: f64,
    horizon: f64,
    r: f64,
    p: f64,
    budget: u64,
    jump_law: Option<JumpLaw>,
    params: &CppqParams,
    streams: &SeedStreams,
) -> Result<PoissonQuantizer> {
    if !(lambda > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidParameter("lambda and horizon must be positive".into()));
    }
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("r must be >= 1, got {r}")));
    }
    if !(p >= 1.0 && p <= r) {
        return Err(Error::InvalidParameter(format!("p must satisfy 1 <= p <= r, got p={p}")));
    }
    if !(params.delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    if budget < 1 {
        return Err(Error::BudgetTooSmall("budget must be >= 1".into()));
    }
    if let Some(law) = &jump_law {
        law.validate()?;
    }
    let cap = lambda * horizon;
    let mu_p = r + params.delta;

    // budget split N^(1) N^(2) <= N
    let (time_budget, size_budget) = if jump_law.is_none() {
        (budget, 1)
    } else {
        let c = 1.0 / (p * r).sqrt() - params.split_epsilon;
        if c <= 0.0 {
            return Err(Error::InvalidParameter(
                "split constant 1/sqrt(pr) - epsilon must be positive".into(),
            ));
        }
        let rc2 = r * c * c;
        let mut n1 = floor_power(budget, rc2 / (1.0 + rc2));
        let mut n2 = floor_power(budget, 1.0 / (1.0 + rc2));
        while n1 * n2 > budget {
            if n2 > 1 {
                n2 -= 1;
            } else if n1 > 1 {
                n1 -= 1;
            } else {
                break;
            }
        }
        (n1, n2)
    };
    if time_budget < 1 || size_budget < 1 {
        return Err(Error::BudgetTooSmall(format!(
            "budget {budget} splits into ({time_budget}, {size_budget})"
        )));
    }

    // jump-time allocation
    let time_plan = if time_budget >= 3 {
        let weights = WeightSequence::factorial(cap.powf(1.0 / mu_p), mu_p)?;
        allocate_factorial(&weights, time_budget, p)?
    } else {
        AllocationPlan::new(vec![time_budget], time_budget, p, false)?
    };
    let r_prime = r / p;
    let mut time_books = Vec::with_capacity(time_plan.depth());
    for (i, &size) in time_plan.sizes().iter().enumerate() {
        let n = (i + 1) as u64;
        let mut rng = streams.rng(StreamKind::Train, n);
        time_books.push(train_time_book(n, size, cap, r_prime, params, &mut rng)?);
    }
    let tail_probs = (1..=time_books.len() as u64).map(|n| erlang_cdf(n, cap)).collect();

    // jump-size allocation (compound case)
    let (size_books, default_size_book) = if let Some(law) = &jump_law {
        let mut rng = streams.rng(StreamKind::Aux, 0);
        let draws: Vec<f64> = (0..params.train_draws).map(|_| law.sample(&mut rng)).collect();
        let samples = SampleSet::new(draws, law.label())?;
        let size_plan = if size_budget >= 3 {
            // formally mu p = r and p = 1 for the size books
            let weights = WeightSequence::factorial(cap.powf(1.0 / r), r)?;
            allocate_factorial(&weights, size_budget, 1.0)?
        } else {
            AllocationPlan::new(vec![size_budget], size_budget, 1.0, false)?
        };
        // sizes are i.i.d., so books depend only on the allocated size
        let mut by_size: BTreeMap<u64, Codebook1D> = BTreeMap::new();
        let train_size = |s: u64| -> Result<Codebook1D> {
            match train_lloyd(&samples, s as usize, r, params.tol, params.max_iter) {
                Ok(cb) => Ok(cb),
                Err(Error::DegenerateSamples { .. }) => {
                    let mut vals = samples.values().to_vec();
                    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                    vals.dedup();
                    Codebook1D::new(vals, r, None)
                }
                Err(e) => Err(e),
            }
        };
        let mut books = Vec::with_capacity(size_plan.depth());
        for &s in size_plan.sizes() {
            if !by_size.contains_key(&s) {
                let cb = train_size(s)?;
                by_size.insert(s, cb);
            }
            books.push(by_size[&s].clone());
        }
        let default = match by_size.get(&1) {
            Some(cb) => cb.clone(),
            None => train_size(1)?,
        };
        (books, Some(default))
    } else {
        (Vec::new(), None)
    };

    Ok(PoissonQuantizer {
        lambda,
        horizon,
        r,
        p,
        delta: params.delta,
        budget,
        time_budget,
        size_budget,
        time_books,
        size_books,
        default_size_book,
        jump_law,
        tail_probs,
    })
}

impl PoissonQuantizer {
    /// Reassembles a quantizer from persisted books; validates the
    /// sentinel invariant and recomputes the Erlang tail probabilities.
    #[allow(clippy::too_many_arguments)]
    pub fn from_books(
        lambda: f64,
        horizon: f64,
        r: f64,
        p: f64,
        delta: f64,
        budget: u64,
        time_budget: u64,
        size_budget: u64,
        time_books: Vec<Codebook1D>,
        size_books: Vec<Codebook1D>,
        default_size_book: Option<Codebook1D>,
        jump_law: Option<JumpLaw>,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !(horizon > 0.0) {
            return Err(Error::InvalidParameter("lambda and horizon must be positive".into()));
        }
        let cap = lambda * horizon;
        if time_books.is_empty() {
            return Err(Error::InvalidParameter("need at least one time book".into()));
        }
        for (i, cb) in time_books.iter().enumerate() {
            if cb.points().last() != Some(&cap) {
                return Err(Error::InvalidParameter(format!(
                    "time book {} does not end at the sentinel {cap}",
                    i + 1
                )));
            }
        }
        if jump_law.is_some() && default_size_book.is_none() {
            return Err(Error::InvalidParameter(
                "compound quantizer needs a default size book".into(),
            ));
        }
        let tail_probs = (1..=time_books.len() as u64).map(|n| erlang_cdf(n, cap)).collect();
        Ok(Self {
            lambda,
            horizon,
            r,
            p,
            delta,
            budget,
            time_budget,
            size_budget,
            time_books,
            size_books,
            default_size_book,
            jump_law,
            tail_probs,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn budgets_split(&self) -> (u64, u64) {
        (self.time_budget, self.size_budget)
    }

    pub fn time_books(&self) -> &[Codebook1D] {
        &self.time_books
    }

    pub fn size_books(&self) -> &[Codebook1D] {
        &self.size_books
    }

    pub fn default_size_book(&self) -> Option<&Codebook1D> {
        self.default_size_book.as_ref()
    }

    pub fn jump_law(&self) -> Option<JumpLaw> {
        self.jump_law
    }

    pub fn clock_cap(&self) -> f64 {
        self.lambda * self.horizon
    }

    /// `P(S_n <= lambda T)` for the n-th trained arrival.
    pub fn tail_probability(&self, n: usize) -> Option<f64> {
        self.tail_probs.get(n - 1).copied()
    }

    /// `sum_n log(|alpha_n^{(1)}| |alpha_n^{(2)}|)`; at most `log N`.
    pub fn log_cardinality(&self) -> f64 {
        let mut acc = 0.0;
        for cb in &self.time_books {
            acc += (cb.size() as f64).ln();
        }
        for cb in &self.size_books {
            acc += (cb.size() as f64).ln();
        }
        acc
    }

    fn quantized_size(&self, n_index: usize, u: f64) -> f64 {
        if self.jump_law.is_none() {
            return 1.0;
        }
        let book = self
            .size_books
            .get(n_index)
            .or(self.default_size_book.as_ref())
            .expect("compound quantizer has a default size book");
        book.nearest(u).1
    }

    /// Quantizes arrivals and sizes and reconstructs the grid path.
    pub fn quantize_jump_path(
        &self,
        jumps: &JumpRecord,
        grid: TimeGrid,
    ) -> Result<QuantizedJumpPath> {
        if (grid.horizon() - self.horizon).abs() > 0.0 {
            return Err(Error::Domain("grid horizon differs from quantizer horizon".into()));
        }
        let cap = self.clock_cap();
        let n_eff = self.time_books.len().max(jumps.arrivals.len());
        let mut hat_arrivals = Vec::with_capacity(n_eff);
        let mut hat_sizes = Vec::with_capacity(jumps.arrivals.len());
        let mut events: Vec<(f64, f64)> = Vec::new();
        for idx in 0..n_eff {
            let s = jumps.arrivals.get(idx).copied().unwrap_or(f64::INFINITY);
            let s_hat = match self.time_books.get(idx) {
                Some(book) => book.nearest(s.min(cap)).1,
                None => cap,
            };
            hat_arrivals.push(s_hat);
            if idx < jumps.arrivals.len() {
                hat_sizes.push(self.quantized_size(idx, jumps.sizes[idx]));
            }
            if s_hat < cap {
                // a non-sentinel quantized arrival implies the jump was
                // observed, so its quantized size exists
                let u_hat = hat_sizes[idx];
                events.push((s_hat / self.lambda, u_hat));
            }
        }
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
        let mut values = Vec::with_capacity(grid.points());
        let mut acc = 0.0;
        let mut next = 0usize;
        for i in 0..grid.points() {
            let t = grid.time(i);
            while next < events.len() && events[next].0 <= t {
                acc += events[next].1;
                next += 1;
            }
            values.push(acc);
        }
        Ok(QuantizedJumpPath { hat_arrivals, hat_sizes, path: PathSample::new(grid, values)? })
    }

    /// Pathwise decoupling: `(full, size_leg, time_leg)` distances where
    /// `size_leg` uses true times with quantized sizes and `time_leg`
    /// compares quantized sizes at true vs quantized times. For
    /// `p, r >= 1`, `full <= size_leg + time_leg` path by path.
    pub fn decoupling_legs(&self, jumps: &JumpRecord, grid: TimeGrid) -> Result<(f64, f64, f64)> {
        let x = jumps.to_grid_path(grid)?;
        let quantized = self.quantize_jump_path(jumps, grid)?;
        let mid = JumpRecord {
            arrivals: jumps.arrivals.clone(),
            sizes: quantized.hat_sizes.clone(),
            lambda: self.lambda,
            horizon: self.horizon,
        }
        .to_grid_path(grid)?;
        let full = x.lp_distance(&quantized.path, self.p)?;
        let size_leg = x.lp_distance(&mid, self.p)?;
        let time_leg = mid.lp_distance(&quantized.path, self.p)?;
        Ok((full, size_leg, time_leg))
    }
}

/// Monte Carlo `|| |X - Xhat|_{L^p_T} ||_r` over fresh jump paths.
pub fn estimate_cpp_distortion(
    quantizer: &PoissonQuantizer,
    grid: TimeGrid,
    n_paths: usize,
    streams: &SeedStreams,
) -> Result<DistortionReport> {
    let start = Instant::now();
    let law = quantizer.jump_law();
    let powers: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(StreamKind::Eval, i);
            let jumps =
                simulate_jumps(quantizer.lambda(), quantizer.horizon(), law.as_ref(), &mut rng);
            let x = jumps.to_grid_path(grid)?;
            let q = quantizer.quantize_jump_path(&jumps, grid)?;
            Ok(x.lp_distance(&q.path, quantizer.p())?.powf(quantizer.r()))
        })
        .collect::<Result<_>>()?;
    Ok(report_from_powers(
        &powers,
        quantizer.budget(),
        quantizer.r(),
        quantizer.p(),
        start.elapsed().as_secs_f64(),
    ))
}

/// Builds quantizers per budget and measures them on fresh paths.
#[allow(clippy::too_many_arguments)]
pub fn cpp_distortion_curve(
    lambda: f64,
    horizon: f64,
    jump_law: Option<JumpLaw>,
    r: f64,
    p: f64,
    budgets: &[u64],
    n_paths: usize,
    grid: TimeGrid,
    params: &CppqParams,
    streams: &SeedStreams,
) -> Result<Vec<(PoissonQuantizer, DistortionReport)>> {
    if budgets.is_empty() {
        return Err(Error::InvalidParameter("budget list cannot be empty".into()));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("budgets must be strictly increasing".into()));
    }
    let mut out = Vec::with_capacity(budgets.len());
    for &n in budgets {
        let q = build_poisson_quantizer(lambda, horizon, r, p, n, jump_law, params, streams)?;
        let report = estimate_cpp_distortion(&q, grid, n_paths, streams)?;
        out.push((q, report));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::ln_factorial;

    fn unit_grid(levels: u32) -> TimeGrid {
        TimeGrid::new(1.0, levels).unwrap()
    }

    fn standard(budget: u64, streams: &SeedStreams) -> PoissonQuantizer {
        build_poisson_quantizer(
            1.0,
            1.0,
            1.0,
            1.0,
            budget,
            None,
            &CppqParams { train_draws: 20_000, ..CppqParams::default() },
            streams,
        )
        .unwrap()
    }

    #[test]
    fn unit_budget_quantizes_to_zero_and_known_distortion() {
        let streams = SeedStreams::new(300);
        let q = standard(1, &streams);
        assert_eq!(q.time_books().len(), 1);
        assert_eq!(q.time_books()[0].points(), &[1.0]);
        // E int_0^1 K_t dt = 1/2 for the unit-rate Poisson
        let report = estimate_cpp_distortion(&q, unit_grid(10), 40_000, &streams).unwrap();
        assert!((report.estimate - 0.5).abs() < 0.015, "estimate {}", report.estimate);
    }

    #[test]
    fn sentinel_caps_every_time_book() {
        let streams = SeedStreams::new(301);
        let q = standard(1 << 10, &streams);
        assert!(q.time_books().len() > 1);
        for book in q.time_books() {
            assert_eq!(*book.points().last().unwrap(), 1.0);
            assert_eq!(book.censor(), Some(1.0));
        }
        assert!(q.log_cardinality() <= ((1u64 << 10) as f64).ln() + 1e-9);
    }

    #[test]
    fn sentinel_semantics_per_path() {
        let streams = SeedStreams::new(302);
        let q = standard(256, &streams);
        let g = unit_grid(8);
        for i in 0..200u64 {
            let mut rng = streams.rng(StreamKind::Eval, i);
            let jumps = simulate_jumps(1.0, 1.0, None, &mut rng);
            let out = q.quantize_jump_path(&jumps, g).unwrap();
            for (idx, &s_hat) in out.hat_arrivals.iter().enumerate() {
                if idx >= jumps.arrivals.len() {
                    // S_n > lambda T implies the sentinel
                    assert_eq!(s_hat, q.clock_cap(), "slot {idx}");
                }
                assert!(s_hat <= q.clock_cap());
            }
        }
    }

    #[test]
    fn single_jump_nearest_and_lp_identity() {
        let q = PoissonQuantizer {
            lambda: 1.0,
            horizon: 1.0,
            r: 1.0,
            p: 1.0,
            delta: 0.5,
            budget: 2,
            time_budget: 2,
            size_budget: 1,
            time_books: vec![Codebook1D::new(vec![0.35, 1.0], 1.0, Some(1.0)).unwrap()],
            size_books: Vec::new(),
            default_size_book: None,
            jump_law: None,
            tail_probs: vec![erlang_cdf(1, 1.0)],
        };
        let g = unit_grid(12);
        let jumps =
            JumpRecord { arrivals: vec![0.4], sizes: vec![1.0], lambda: 1.0, horizon: 1.0 };
        let out = q.quantize_jump_path(&jumps, g).unwrap();
        assert_eq!(out.hat_arrivals[0], 0.35);
        // |1{S<=t} - 1{Shat<=t}|_{L^p}^p = |S - Shat| / lambda, up to
        // grid resolution
        let x = jumps.to_grid_path(g).unwrap();
        let d = x.lp_distance(&out.path, 1.0).unwrap();
        assert!((d - 0.05).abs() <= 2.0 * g.step(), "d = {d}");
    }

    #[test]
    fn empty_record_maps_to_zero_path() {
        let streams = SeedStreams::new(303);
        let q = standard(64, &streams);
        let g = unit_grid(8);
        let jumps = JumpRecord { arrivals: vec![], sizes: vec![], lambda: 1.0, horizon: 1.0 };
        let out = q.quantize_jump_path(&jumps, g).unwrap();
        assert!(out.path.values().iter().all(|&v| v == 0.0));
        assert!(out.hat_arrivals.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn erlang_tail_bound_reported() {
        let streams = SeedStreams::new(304);
        let q = standard(1 << 12, &streams);
        let cap = q.clock_cap();
        for n in 1..=q.time_books().len() {
            let p = q.tail_probability(n).unwrap();
            let bound = (n as f64 * cap.ln() - ln_factorial(n as u64)).exp();
            assert!(p <= bound + 1e-12, "n={n}: {p} > {bound}");
        }
    }

    #[test]
    fn censored_first_arrival_free_point_matches_dp_oracle() {
        // size-2 time book = one free point + sentinel; the free point is
        // the L^1 center of Exp(1) censored at 1 (zero mass included),
        // cross-checked against the exact DP program on the same draws
        let streams = SeedStreams::new(310);
        let mut rng = streams.rng(StreamKind::Train, 77);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| {
                let s = erlang_truncated_sampler(1, &mut rng);
                if s <= 1.0 {
                    s
                } else {
                    0.0
                }
            })
            .collect();
        let samples = SampleSet::new(draws, "s1-censored").unwrap();
        let lloyd = train_lloyd(&samples, 1, 1.0, 1e-10, 2000).unwrap();
        let dp = crate::quant1d::train_dp_oracle(&samples, 1, 1.0).unwrap();
        let d_lloyd = crate::quant1d::distortion(&lloyd, &samples, 1.0);
        let d_dp = crate::quant1d::distortion(&dp, &samples, 1.0);
        assert!((d_lloyd / d_dp - 1.0).abs() < 0.01, "{d_lloyd} vs {d_dp}");
        // the one-point L^1 center is the sample median
        let mut sorted = samples.values().to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = sorted[sorted.len() / 2];
        assert!((lloyd.points()[0] - med).abs() < 0.02, "{} vs {med}", lloyd.points()[0]);
    }

    #[test]
    fn compound_build_splits_budget() {
        let streams = SeedStreams::new(305);
        let law = JumpLaw::Gaussian { mean: 0.0, std: 1.0 };
        let q = build_poisson_quantizer(
            1.0,
            1.0,
            2.0,
            1.0,
            1 << 10,
            Some(law),
            &CppqParams { train_draws: 20_000, ..CppqParams::default() },
            &streams,
        )
        .unwrap();
        let (n1, n2) = q.budgets_split();
        assert!(n1 >= 1 && n2 >= 1);
        assert!(n1 * n2 <= 1 << 10);
        assert!(!q.size_books().is_empty());
        assert!(q.default_size_book().is_some());
        assert!(q.log_cardinality() <= ((1u64 << 10) as f64).ln() + 1e-9);
    }

    #[test]
    fn compound_decoupling_triangle_per_path() {
        let streams = SeedStreams::new(306);
        let law = JumpLaw::Uniform { lo: -1.0, hi: 2.0 };
        let q = build_poisson_quantizer(
            1.0,
            1.0,
            1.0,
            1.0,
            256,
            Some(law),
            &CppqParams { train_draws: 20_000, ..CppqParams::default() },
            &streams,
        )
        .unwrap();
        let g = unit_grid(9);
        for i in 0..300u64 {
            let mut rng = streams.rng(StreamKind::Eval, i);
            let jumps = simulate_jumps(1.0, 1.0, Some(&law), &mut rng);
            let (full, size_leg, time_leg) = q.decoupling_legs(&jumps, g).unwrap();
            assert!(
                full <= size_leg + time_leg + 1e-12,
                "path {i}: {full} > {size_leg} + {time_leg}"
            );
        }
    }

    #[test]
    fn invalid_exponents_rejected() {
        let streams = SeedStreams::new(307);
        let err = build_poisson_quantizer(
            1.0,
            1.0,
            1.0,
            2.0, // p > r
            64,
            None,
            &CppqParams::default(),
            &streams,
        );
        assert!(matches!(err, Err(Error::InvalidParameter(msg)) if msg.contains('p')));
    }

    #[test]
    fn curve_decreases_with_budget() {
        let streams = SeedStreams::new(308);
        let g = unit_grid(10);
        let curve = cpp_distortion_curve(
            1.0,
            1.0,
            None,
            1.0,
            1.0,
            &[4, 64, 1024],
            20_000,
            g,
            &CppqParams { train_draws: 20_000, ..CppqParams::default() },
            &streams,
        )
        .unwrap();
        for w in curve.windows(2) {
            let (_, ref a) = w[0];
            let (_, ref b) = w[1];
            assert!(
                b.estimate <= a.estimate + 2.0 * (a.std_error + b.std_error),
                "{} -> {}",
                a.estimate,
                b.estimate
            );
        }
    }

    #[test]
    fn quantization_reproducible_and_order_insensitive() {
        let streams = SeedStreams::new(309);
        let q = standard(512, &streams);
        let g = unit_grid(9);
        let jumps = JumpRecord {
            arrivals: vec![0.2, 0.5, 0.9],
            sizes: vec![1.0, 1.0, 1.0],
            lambda: 1.0,
            horizon: 1.0,
        };
        let a = q.quantize_jump_path(&jumps, g).unwrap();
        let b = q.quantize_jump_path(&jumps, g).unwrap();
        assert_eq!(a.path.values(), b.path.values());
        assert_eq!(a.hat_arrivals, b.hat_arrivals);
        // the reconstruction is a step function with one unit step per
        // non-sentinel arrival
        let steps = a.hat_arrivals.iter().filter(|&&s| s < 1.0).count();
        assert!((a.path.values().last().unwrap() - steps as f64).abs() < 1e-12);
    }
}
