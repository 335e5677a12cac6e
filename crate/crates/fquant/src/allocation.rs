//! Codebook-size allocation under a multiplicative budget.
//!
//! Two weight families drive the allocation:
//!
//! * `nu_k = Phi(1/k)` with `Phi(x) = x phi(x)` for a regularity modulus
//!   `phi` — the choice behind the Haar product quantizers, with depth
//!   `m*(N)` the largest `m` such that
//!   `N^{1/m} nu_m (prod_{j<=m} nu_j)^{-1/m} >= 1` and sizes
//!   `N_{k-1} = [N^{1/m} nu_k (prod nu_j)^{-1/m}]`;
//! * factorial weights `a(x) = A^x / Gamma(x+1)^{1/(mu p)}`, monotonized
//!   past their peak — the jump-time allocation of the Poisson quantizer,
//!   with depth `ceil(2 sqrt(mu log N / log log N))` and sizes
//!   `N_n = [a_n^p N^{1/m} / (prod a_k)^{p/m}]`.
//!
//! Everything is evaluated in the log domain with compensated sums; the
//! raw products overflow near `N ~ 2^60`. Budget feasibility is checked
//! as `sum log N_k <= log N + 1e-9`.

use crate::error::{Error, Result};
use crate::math::{ln_factorial, Kahan};

/// Regularity modulus `phi(u) = c u^b`. Only power moduli appear in the
/// experiments; `b` is the regular-variation index at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    coeff: f64,
    exponent: f64,
}

impl Modulus {
    pub fn power(coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff > 0.0) || !(exponent >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "modulus needs coeff > 0 and exponent >= 0, got c={coeff}, b={exponent}"
            )));
        }
        Ok(Self { coeff, exponent })
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.coeff * u.powf(self.exponent)
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }
}

/// A positive weight sequence in log form.
#[derive(Debug, Clone)]
pub enum WeightSequence {
    /// `nu_k = Phi(1/k) = phi(1/k)/k`, `k >= 1`.
    Phi { modulus: Modulus },
    /// Monotonized factorial weights `a_0(n)`, `n >= 1`.
    Factorial {
        log_a_cap: f64,
        mu_p: f64,
        /// Integer peak of `a`; the increasing stretch before it is
        /// capped at the peak value so the sequence is non-increasing.
        peak: u64,
        log_peak_value: f64,
    },
}

impl WeightSequence {
    pub fn phi(modulus: Modulus) -> Self {
        WeightSequence::Phi { modulus }
    }

    /// Builds `a(x) = A^x / Gamma(x+1)^{1/(mu p)}` weights; the peak is
    /// located by integer scan (the sequence is unimodal).
    pub fn factorial(a_cap: f64, mu_p: f64) -> Result<Self> {
        if !(a_cap > 0.0) || !(mu_p > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "factorial weights need A > 0 and mu*p > 0, got A={a_cap}, mu_p={mu_p}"
            )));
        }
        let log_a_cap = a_cap.ln();
        let raw = |n: u64| n as f64 * log_a_cap - ln_factorial(n) / mu_p;
        let mut peak = 0u64;
        while peak < 1_000_000 && raw(peak + 1) >= raw(peak) {
            peak += 1;
        }
        Ok(WeightSequence::Factorial { log_a_cap, mu_p, peak, log_peak_value: raw(peak) })
    }

    /// `log` of the k-th weight, `k >= 1`.
    pub fn log_weight(&self, k: u64) -> f64 {
        debug_assert!(k >= 1);
        match self {
            WeightSequence::Phi { modulus } => {
                // log(phi(1/k)/k)
                let u = 1.0 / k as f64;
                modulus.eval(u).ln() + u.ln()
            }
            WeightSequence::Factorial { log_a_cap, mu_p, peak, log_peak_value } => {
                if k <= *peak {
                    *log_peak_value
                } else {
                    k as f64 * log_a_cap - ln_factorial(k) / mu_p
                }
            }
        }
    }

    pub fn weight(&self, k: u64) -> f64 {
        self.log_weight(k).exp()
    }
}

/// Per-coefficient codebook sizes under a product budget.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    sizes: Vec<u64>,
    budget: u64,
    /// Exponent of the factorial-allocation objective; 1 for plans built
    /// from `allocate_phi`.
    exponent_p: f64,
    /// Set when the requested depth had to be clamped.
    degenerate: bool,
}

impl AllocationPlan {
    pub fn new(sizes: Vec<u64>, budget: u64, exponent_p: f64, degenerate: bool) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidParameter("plan needs at least one size".into()));
        }
        if sizes.iter().any(|&s| s < 1) {
            return Err(Error::InvalidParameter("all sizes must be >= 1".into()));
        }
        if sizes.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("sizes must be non-increasing".into()));
        }
        let log_product: f64 = {
            let mut acc = Kahan::new();
            for &s in &sizes {
                acc.add((s as f64).ln());
            }
            acc.total()
        };
        if log_product > (budget as f64).ln() + 1e-9 {
            return Err(Error::BudgetTooSmall(format!(
                "product of sizes exceeds budget {budget} (log excess {:.3e})",
                log_product - (budget as f64).ln()
            )));
        }
        Ok(Self { sizes, budget, exponent_p, degenerate })
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn depth(&self) -> usize {
        self.sizes.len()
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn exponent_p(&self) -> f64 {
        self.exponent_p
    }

    pub fn degenerate(&self) -> bool {
        self.degenerate
    }

    /// `sum log N_k`, for budget audits.
    pub fn log_product(&self) -> f64 {
        let mut acc = Kahan::new();
        for &s in &self.sizes {
            acc.add((s as f64).ln());
        }
        acc.total()
    }
}

const MSTAR_SLACK: f64 = 1e-12;

fn mstar_scan_cap(n: u64) -> u64 {
    (4.0 * ((n as f64).ln() + 10.0)) as u64 + 64
}

/// Largest `m >= 1` with `N^{1/m} nu_m (prod_{j<=m} nu_j)^{-1/m} >= 1`
/// (log-domain scan). `m = 1` always qualifies.
pub fn depth_mstar(weights: &WeightSequence, n: u64) -> Result<usize> {
    if n < 1 {
        return Err(Error::InvalidParameter("budget must be >= 1".into()));
    }
    let log_n = (n as f64).ln();
    let cap = mstar_scan_cap(n);
    let mut log_prod = Kahan::new();
    let mut best = 1u64;
    for m in 1..=cap {
        let lw = weights.log_weight(m);
        log_prod.add(lw);
        let cond = (log_n - log_prod.total()) / m as f64 + lw;
        if cond >= -MSTAR_SLACK {
            best = m;
        }
    }
    Ok(best as usize)
}

/// Floor guard: absorbs downward floating noise on exact-integer
/// boundaries without admitting genuinely fractional values.
fn floor_guarded(x: f64) -> u64 {
    (x + 1e-9).floor().max(0.0) as u64
}

/// Sizes `N_{k-1} = [N^{1/m} nu_k (prod_{j<=m} nu_j)^{-1/m}]` at the
/// depth chosen by [`depth_mstar`].
pub fn allocate_phi(weights: &WeightSequence, n: u64) -> Result<AllocationPlan> {
    if !matches!(weights, WeightSequence::Phi { .. }) {
        return Err(Error::InvalidParameter("allocate_phi needs Phi weights".into()));
    }
    let m = depth_mstar(weights, n)? as u64;
    let log_n = (n as f64).ln();
    let mut log_prod = Kahan::new();
    for j in 1..=m {
        log_prod.add(weights.log_weight(j));
    }
    let factor = (log_n - log_prod.total()) / m as f64;
    let mut sizes = Vec::with_capacity(m as usize);
    let mut degenerate = false;
    for k in 1..=m {
        let s = floor_guarded((factor + weights.log_weight(k)).exp());
        if s == 0 {
            degenerate = true;
        }
        sizes.push(s.max(1));
    }
    AllocationPlan::new(sizes, n, 1.0, degenerate)
}

/// Depth `ceil(2 sqrt(mu log N / log log N))` of the factorial
/// allocation, clamped down when the tail sizes would drop below 1.
pub fn allocate_factorial(weights: &WeightSequence, n: u64, p: f64) -> Result<AllocationPlan> {
    let (mu_p,) = match weights {
        WeightSequence::Factorial { mu_p, .. } => (*mu_p,),
        _ => {
            return Err(Error::InvalidParameter(
                "allocate_factorial needs Factorial weights".into(),
            ))
        }
    };
    if !(p > 0.0) {
        return Err(Error::InvalidParameter("exponent p must be positive".into()));
    }
    if n < 3 {
        return Err(Error::BudgetTooSmall(format!(
            "factorial allocation needs N >= 3 (log log N > 0), got {n}"
        )));
    }
    let log_n = (n as f64).ln();
    let mu = mu_p / p;
    let formula_depth = (2.0 * (mu * log_n / log_n.ln()).sqrt()).ceil().max(1.0) as u64;

    let try_depth = |m: u64| -> Option<Vec<u64>> {
        let mut log_prod = Kahan::new();
        for k in 1..=m {
            log_prod.add(weights.log_weight(k));
        }
        let factor = (log_n - p * log_prod.total()) / m as f64;
        let mut sizes = Vec::with_capacity(m as usize);
        for k in 1..=m {
            let s = floor_guarded((p * weights.log_weight(k) + factor).exp());
            if s < 1 {
                return None;
            }
            sizes.push(s);
        }
        Some(sizes)
    };

    let mut depth = formula_depth;
    let sizes = loop {
        if let Some(sizes) = try_depth(depth) {
            break sizes;
        }
        depth -= 1;
        if depth == 0 {
            return Err(Error::BudgetTooSmall(format!(
                "no feasible factorial depth for budget {n}"
            )));
        }
    };
    AllocationPlan::new(sizes, n, p, depth < formula_depth)
}

/// Truncated allocation objective: the weighted head
/// `sum_{k<=m} nu_k / N_{k-1}^{1/p}` plus the tail `sum_{m<k<=K} nu_k`
/// (`p = 1` for Phi plans).
pub fn allocation_cost(plan: &AllocationPlan, weights: &WeightSequence, tail_to: u64) -> f64 {
    let m = plan.depth() as u64;
    assert!(tail_to >= m, "tail_to must be >= plan depth");
    let inv_p = 1.0 / plan.exponent_p;
    let mut acc = Kahan::new();
    for k in 1..=m {
        let nk = plan.sizes[(k - 1) as usize] as f64;
        acc.add(weights.weight(k) / nk.powf(inv_p));
    }
    for k in (m + 1)..=tail_to {
        acc.add(weights.weight(k));
    }
    acc.total()
}
