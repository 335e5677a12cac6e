//! Small numerical helpers shared across modules.

/// Compensated (Kahan) accumulator.
///
/// Deterministic reductions over Monte Carlo batches use this so that
/// results do not depend on summation order tricks by the optimizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum
    }
}

/// Sum of a slice with compensation.
pub fn ksum(values: &[f64]) -> f64 {
    let mut acc = Kahan::new();
    for &v in values {
        acc.add(v);
    }
    acc.total()
}

/// ln(n!) by direct summation; exact enough for the factorial weights
/// (n stays below a few hundred in every allocation).
pub fn ln_factorial(n: u64) -> f64 {
    let mut acc = Kahan::new();
    for k in 2..=n {
        acc.add((k as f64).ln());
    }
    acc.total()
}

/// P(S_n <= x) for S_n ~ Gamma(n, 1), n >= 1, computed as the Poisson
/// tail e^{-x} sum_{k>=n} x^k/k!. Stable when the probability is tiny.
pub fn erlang_cdf(n: u64, x: f64) -> f64 {
    assert!(n >= 1, "erlang_cdf needs n >= 1");
    if x <= 0.0 {
        return 0.0;
    }
    // log of first term x^n/n! * e^{-x}
    let mut log_term = n as f64 * x.ln() - ln_factorial(n) - x;
    if log_term > 700.0 {
        return 1.0;
    }
    let mut term = log_term.exp();
    let mut acc = Kahan::new();
    let mut k = n;
    loop {
        acc.add(term);
        k += 1;
        term *= x / k as f64;
        if term < 1e-18 * (acc.total() + 1e-300) || k > n + 10_000 {
            break;
        }
    }
    // Guard against accumulation slightly above 1 for large x.
    log_term = acc.total().min(1.0).ln();
    log_term.exp().min(1.0)
}

/// Ordinary least squares of y on x. Returns (slope, intercept, r_squared,
/// residuals).
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64, Vec<f64>) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = ksum(x) / n;
    let my = ksum(y) / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut residuals = Vec::with_capacity(x.len());
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - (slope * xi + intercept);
        residuals.push(r);
        ss_res += r * r;
        ss_tot += (yi - my) * (yi - my);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2.clamp(0.0, 1.0), residuals)
}

/// Standard error of the OLS slope.
pub fn ols_slope_stderr(x: &[f64], residuals: &[f64]) -> f64 {
    let n = x.len();
    if n <= 2 {
        return f64::INFINITY;
    }
    let mx = ksum(x) / n as f64;
    let sxx: f64 = x.iter().map(|&xi| (xi - mx) * (xi - mx)).sum();
    let s2: f64 = residuals.iter().map(|r| r * r).sum::<f64>() / (n - 2) as f64;
    (s2 / sxx).sqrt()
}

/// Golden-section minimization of a unimodal function on [lo, hi].
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    if hi - lo <= tol {
        return 0.5 * (lo + hi);
    }
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erlang_cdf_matches_closed_forms() {
        // P(S_1 <= 1) = 1 - e^{-1}
        assert!((erlang_cdf(1, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        // P(S_2 <= 1) = 1 - 2 e^{-1}
        assert!((erlang_cdf(2, 1.0) - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-14);
        assert_eq!(erlang_cdf(3, 0.0), 0.0);
    }

    #[test]
    fn erlang_cdf_respects_factorial_bound() {
        // P(S_n <= x) <= x^n / n!
        for n in 1..40u64 {
            let x = 1.0f64;
            let bound = (n as f64 * x.ln() - ln_factorial(n)).exp();
            assert!(erlang_cdf(n, x) <= bound + 1e-12, "n={n}");
        }
    }

    #[test]
    fn ln_factorial_small_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - 120.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let (slope, intercept, r2, _) = ols(&x, &y);
        assert!((slope + 2.0).abs() < 1e-12);
        assert!((intercept - 3.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn golden_section_finds_parabola_min() {
        let m = golden_section(|x| (x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-12);
        assert!((m - 0.3).abs() < 1e-9);
    }
}
