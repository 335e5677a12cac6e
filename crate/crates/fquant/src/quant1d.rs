//! Optimal scalar quantization: codebook training, nearest-neighbor
//! projection and empirical distortion.
//!
//! [`train_lloyd`] is the workhorse (fixed-point iteration on Voronoi
//! cells of the sorted sample set); [`train_dp_oracle`] is an exact
//! dynamic program over the empirical measure, kept independent of the
//! Lloyd path so it can serve as a correctness oracle.

use crate::error::{Error, Result};
use crate::math::{golden_section, Kahan};
use crate::streams::PathRng;

/// A sorted finite set of codepoints with a distortion exponent and an
/// optional censor sentinel (used by jump-time books).
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook1D {
    points: Vec<f64>,
    r: f64,
    censor: Option<f64>,
}

impl Codebook1D {
    pub fn new(points: Vec<f64>, r: f64, censor: Option<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("codebook cannot be empty".into()));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("exponent r must be positive, got {r}")));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("codepoints must be finite".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("codepoints must be strictly increasing".into()));
        }
        Ok(Self { points, r, censor })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn censor(&self) -> Option<f64> {
        self.censor
    }

    /// Nearest codepoint; ties break toward the smaller index.
    pub fn nearest(&self, x: f64) -> (usize, f64) {
        let pts = &self.points;
        let idx = pts.partition_point(|&p| p < x);
        if idx == 0 {
            (0, pts[0])
        } else if idx == pts.len() {
            (idx - 1, pts[idx - 1])
        } else {
            let lo = idx - 1;
            if x - pts[lo] <= pts[idx] - x {
                (lo, pts[lo])
            } else {
                (idx, pts[idx])
            }
        }
    }
}

/// Empirical values standing in for the law of one coefficient.
#[derive(Debug, Clone)]
pub struct SampleSet {
    values: Vec<f64>,
    law: String,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, law: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("sample set cannot be empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("samples must be finite".into()));
        }
        Ok(Self { values, law: law.into() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn law(&self) -> &str {
        &self.law
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `(mean over samples of min_a |x-a|^r)^{1/r}`.
pub fn distortion(cb: &Codebook1D, samples: &SampleSet, r: f64) -> f64 {
    let mut acc = Kahan::new();
    for &x in samples.values() {
        let (_, a) = cb.nearest(x);
        acc.add((x - a).abs().powf(r));
    }
    (acc.total() / samples.len() as f64).powf(1.0 / r)
}

fn count_distinct(sorted: &[f64]) -> usize {
    1 + sorted.windows(2).filter(|w| w[0] < w[1]).count()
}

/// `L^r` center of a sorted cell: mean for r = 2, median for r = 1,
/// golden-section minimization otherwise (r >= 1; the within-cell
/// objective is convex there).
fn cell_center(sorted: &[f64], prefix: &[f64], start: usize, end: usize, r: f64) -> f64 {
    debug_assert!(end > start);
    let cnt = end - start;
    if r == 2.0 {
        (prefix[end] - prefix[start]) / cnt as f64
    } else if r == 1.0 {
        if cnt % 2 == 1 {
            sorted[start + cnt / 2]
        } else {
            0.5 * (sorted[start + cnt / 2 - 1] + sorted[start + cnt / 2])
        }
    } else {
        let cell = &sorted[start..end];
        if cell[0] == cell[cnt - 1] {
            return cell[0];
        }
        golden_section(
            |c| cell.iter().map(|x| (x - c).abs().powf(r)).sum::<f64>(),
            cell[0],
            cell[cnt - 1],
            1e-10,
        )
    }
}

/// Voronoi cell boundaries of `points` over the sorted samples: cell `i`
/// is `sorted[bounds[i]..bounds[i+1]]`. A sample exactly midway joins the
/// lower cell, matching the nearest-neighbor tie rule.
fn cell_bounds(sorted: &[f64], points: &[f64]) -> Vec<usize> {
    let mut bounds = Vec::with_capacity(points.len() + 1);
    bounds.push(0);
    for w in points.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        bounds.push(sorted.partition_point(|&x| x <= mid));
    }
    bounds.push(sorted.len());
    bounds
}

fn empirical_distortion_r(sorted: &[f64], bounds: &[usize], points: &[f64], r: f64) -> f64 {
    let mut acc = Kahan::new();
    for i in 0..points.len() {
        for &x in &sorted[bounds[i]..bounds[i + 1]] {
            acc.add((x - points[i]).abs().powf(r));
        }
    }
    acc.total() / sorted.len() as f64
}

/// Lloyd training with deterministic quantile initialization and a
/// per-iteration distortion history (non-increasing up to the center
/// tolerance).
pub fn train_lloyd_history(
    samples: &SampleSet,
    n: usize,
    r: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Codebook1D, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("codebook size must be >= 1".into()));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent r must be positive, got {r}")));
    }
    let mut sorted = samples.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let distinct = count_distinct(&sorted);
    if distinct < n {
        return Err(Error::DegenerateSamples { distinct, requested: n });
    }

    let mut prefix = Vec::with_capacity(sorted.len() + 1);
    prefix.push(0.0);
    let mut acc = Kahan::new();
    for &x in &sorted {
        acc.add(x);
        prefix.push(acc.total());
    }

    // quantile levels (2i-1)/(2N), deduplicated against atoms
    let mut points = Vec::with_capacity(n);
    for i in 1..=n {
        let q = (2 * i - 1) as f64 / (2 * n) as f64;
        let idx = ((q * sorted.len() as f64) as usize).min(sorted.len() - 1);
        let cand = sorted[idx];
        if points.last().map_or(true, |&p| cand > p) {
            points.push(cand);
        }
    }
    if points.len() < n {
        // fill from distinct values not yet used
        let mut extra = Vec::new();
        let mut prev = f64::NEG_INFINITY;
        for &x in &sorted {
            if x > prev {
                prev = x;
                if points.binary_search_by(|p| p.partial_cmp(&x).unwrap()).is_err() {
                    extra.push(x);
                }
            }
        }
        for x in extra {
            if points.len() >= n {
                break;
            }
            let pos = points.partition_point(|&p| p < x);
            points.insert(pos, x);
        }
    }

    let mut history = Vec::new();
    for _ in 0..max_iter {
        let bounds = cell_bounds(&sorted, &points);
        if let Some(empty) = (0..points.len()).find(|&i| bounds[i] == bounds[i + 1]) {
            repair_empty_cell(&sorted, &bounds, &mut points, empty)?;
            continue;
        }
        history.push(empirical_distortion_r(&sorted, &bounds, &points, r));
        let mut moved = 0.0f64;
        for i in 0..points.len() {
            let c = cell_center(&sorted, &prefix, bounds[i], bounds[i + 1], r);
            moved = moved.max((c - points[i]).abs());
            points[i] = c;
        }
        if moved < tol {
            break;
        }
    }
    let bounds = cell_bounds(&sorted, &points);
    history.push(empirical_distortion_r(&sorted, &bounds, &points, r));
    Ok((Codebook1D::new(points, r, None)?, history))
}

fn repair_empty_cell(
    sorted: &[f64],
    bounds: &[usize],
    points: &mut [f64],
    empty: usize,
) -> Result<()> {
    // steal the midpoint of the widest occupied cell
    let mut widest = None;
    let mut width = -1.0;
    for i in 0..points.len() {
        if bounds[i + 1] > bounds[i] {
            let w = sorted[bounds[i + 1] - 1] - sorted[bounds[i]];
            if w > width {
                width = w;
                widest = Some(i);
            }
        }
    }
    let j = widest.ok_or_else(|| Error::InvalidParameter("all cells empty".into()))?;
    let (lo, hi) = (sorted[bounds[j]], sorted[bounds[j + 1] - 1]);
    for cand in [
        0.5 * (lo + hi),
        0.75 * lo + 0.25 * hi,
        0.25 * lo + 0.75 * hi,
    ] {
        if points.iter().all(|&p| p != cand) {
            points[empty] = cand;
            points.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return Ok(());
        }
    }
    Err(Error::DegenerateSamples { distinct: points.len() - 1, requested: points.len() })
}

/// Lloyd training; see [`train_lloyd_history`].
pub fn train_lloyd(
    samples: &SampleSet,
    n: usize,
    r: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Codebook1D> {
    train_lloyd_history(samples, n, r, tol, max_iter).map(|(cb, _)| cb)
}

/// Exact interval cost for the dynamic program.
struct IntervalCost<'a> {
    sorted: &'a [f64],
    prefix: Vec<f64>,
    prefix_sq: Vec<f64>,
    r: f64,
}

impl<'a> IntervalCost<'a> {
    fn new(sorted: &'a [f64], r: f64) -> Self {
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        let mut prefix_sq = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        prefix_sq.push(0.0);
        let mut a = Kahan::new();
        let mut b = Kahan::new();
        for &x in sorted {
            a.add(x);
            b.add(x * x);
            prefix.push(a.total());
            prefix_sq.push(b.total());
        }
        Self { sorted, prefix, prefix_sq, r }
    }

    /// min over c of sum_{l=i..=j} |x_l - c|^r
    fn cost(&self, i: usize, j: usize) -> f64 {
        let cnt = (j - i + 1) as f64;
        if self.r == 2.0 {
            let s = self.prefix[j + 1] - self.prefix[i];
            let s2 = self.prefix_sq[j + 1] - self.prefix_sq[i];
            (s2 - s * s / cnt).max(0.0)
        } else if self.r == 1.0 {
            let m = i + (j - i) / 2;
            let med = self.sorted[m];
            let left = med * (m - i + 1) as f64 - (self.prefix[m + 1] - self.prefix[i]);
            let right = (self.prefix[j + 1] - self.prefix[m + 1]) - med * (j - m) as f64;
            left + right
        } else {
            let c = cell_center(self.sorted, &self.prefix, i, j + 1, self.r);
            self.sorted[i..=j].iter().map(|x| (x - c).abs().powf(self.r)).sum()
        }
    }

    fn center(&self, i: usize, j: usize) -> f64 {
        cell_center(self.sorted, &self.prefix, i, j + 1, self.r)
    }
}

/// Globally optimal codebook for the empirical measure, by interval
/// dynamic programming with divide-and-conquer argmin.
///
/// Guards: `samples.len() <= 10^4` and `n <= 64` for `r` in {1, 2};
/// other exponents (`r >= 1`) use the slow generic cell cost and are
/// capped at 512 samples, 16 points.
pub fn train_dp_oracle(samples: &SampleSet, n: usize, r: f64) -> Result<Codebook1D> {
    if n == 0 {
        return Err(Error::InvalidParameter("codebook size must be >= 1".into()));
    }
    if r < 1.0 {
        return Err(Error::InvalidParameter("dp oracle needs r >= 1".into()));
    }
    let exact = r == 1.0 || r == 2.0;
    let (max_len, max_n) = if exact { (10_000, 64) } else { (512, 16) };
    if samples.len() > max_len || n > max_n {
        return Err(Error::SizeGuard(format!(
            "dp oracle limits: {} samples (got {}), {} points (got {})",
            max_len,
            samples.len(),
            max_n,
            n
        )));
    }
    let mut sorted = samples.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let distinct = count_distinct(&sorted);
    if distinct < n {
        return Err(Error::DegenerateSamples { distinct, requested: n });
    }
    let len = sorted.len();
    let cost = IntervalCost::new(&sorted, r);

    let mut prev: Vec<f64> = (0..len).map(|j| cost.cost(0, j)).collect();
    let mut args: Vec<Vec<u32>> = Vec::with_capacity(n);
    args.push(vec![0; len]);

    for layer in 1..n {
        let mut cur = vec![f64::INFINITY; len];
        let mut arg = vec![0u32; len];
        // cur[j] = min_{k in layer..=j} prev[k-1] + cost(k, j), argmin
        // nondecreasing in j
        dandc(
            &mut cur,
            &mut arg,
            &prev,
            &cost,
            layer,
            layer,
            len - 1,
            layer,
            len - 1,
        );
        args.push(arg);
        prev = cur;
    }

    // backtrack cell boundaries
    let mut cells = Vec::with_capacity(n);
    let mut j = len - 1;
    for layer in (0..n).rev() {
        let k = if layer == 0 { 0 } else { args[layer][j] as usize };
        cells.push((k, j));
        if layer > 0 {
            j = k - 1;
        }
    }
    cells.reverse();
    let mut points: Vec<f64> = cells.iter().map(|&(a, b)| cost.center(a, b)).collect();
    points.dedup();
    Codebook1D::new(points, r, None)
}

#[allow(clippy::too_many_arguments)]
fn dandc(
    cur: &mut [f64],
    arg: &mut [u32],
    prev: &[f64],
    cost: &IntervalCost<'_>,
    layer: usize,
    jlo: usize,
    jhi: usize,
    klo: usize,
    khi: usize,
) {
    if jlo > jhi {
        return;
    }
    let j = jlo + (jhi - jlo) / 2;
    let mut best = f64::INFINITY;
    let mut best_k = klo;
    for k in klo..=khi.min(j) {
        let v = prev[k - 1] + cost.cost(k, j);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    cur[j] = best;
    arg[j] = best_k as u32;
    if j > jlo {
        dandc(cur, arg, prev, cost, layer, jlo, j - 1, klo, best_k);
    }
    if j < jhi {
        dandc(cur, arg, prev, cost, layer, j + 1, jhi, best_k, khi);
    }
}

/// One row of a Pierce curve: the trained size-`n` error and its product
/// with `n`.
#[derive(Debug, Clone, Copy)]
pub struct PiercePoint {
    pub size: usize,
    pub error: f64,
    pub scaled: f64,
}

#[derive(Debug, Clone)]
pub struct PierceCurve {
    pub r: f64,
    /// Moment slack of the finiteness assumption; recorded, not enforced.
    pub delta: f64,
    pub points: Vec<PiercePoint>,
}

/// Trains codebooks at each size and reports `N * e_N`; the products
/// stay bounded when the law has a finite `(r+delta)`-moment.
pub fn pierce_curve<F>(
    mut sample: F,
    r: f64,
    delta: f64,
    sizes: &[usize],
    n_train: usize,
    n_eval: usize,
    rng_train: &mut PathRng,
    rng_eval: &mut PathRng,
) -> Result<PierceCurve>
where
    F: FnMut(&mut PathRng) -> f64,
{
    let train =
        SampleSet::new((0..n_train).map(|_| sample(rng_train)).collect(), "pierce-train")?;
    let eval = SampleSet::new((0..n_eval).map(|_| sample(rng_eval)).collect(), "pierce-eval")?;
    let mut points = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let cb = train_lloyd(&train, n, r, 1e-10, 2000)?;
        let e = distortion(&cb, &eval, r);
        points.push(PiercePoint { size: n, error: e, scaled: n as f64 * e });
    }
    Ok(PierceCurve { r, delta, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::{SeedStreams, StreamKind};
    use rand_distr::{Distribution, Normal, Uniform};

    fn book(points: &[f64], r: f64) -> Codebook1D {
        Codebook1D::new(points.to_vec(), r, None).unwrap()
    }

    #[test]
    fn nearest_tie_breaks_low() {
        let cb = book(&[-1.0, 1.0], 2.0);
        assert_eq!(cb.nearest(0.0), (0, -1.0));
        let cb = book(&[0.0], 2.0);
        assert_eq!(cb.nearest(123.0), (0, 0.0));
        assert_eq!(cb.nearest(-5.0), (0, 0.0));
        let cb = book(&[0.0, 2.0, 5.0], 2.0);
        assert_eq!(cb.nearest(4.0), (2, 5.0));
    }

    #[test]
    fn nearest_is_idempotent_on_codepoints() {
        let cb = book(&[-2.0, -0.5, 0.1, 3.0], 1.0);
        for (i, &p) in cb.points().iter().enumerate() {
            assert_eq!(cb.nearest(p), (i, p));
        }
    }

    #[test]
    fn codebook_rejects_unsorted() {
        assert!(Codebook1D::new(vec![1.0, 1.0], 2.0, None).is_err());
        assert!(Codebook1D::new(vec![2.0, 1.0], 2.0, None).is_err());
        assert!(Codebook1D::new(vec![], 2.0, None).is_err());
    }

    #[test]
    fn distortion_trivial_cases() {
        let cb = book(&[0.0], 2.0);
        let s = SampleSet::new(vec![-1.0, 1.0], "pm1").unwrap();
        assert!((distortion(&cb, &s, 2.0) - 1.0).abs() < 1e-15);
        let cb = book(&[-1.0, 1.0], 2.0);
        assert_eq!(distortion(&cb, &s, 2.0), 0.0);
    }

    #[test]
    fn distortion_scaling_and_translation_exact() {
        let streams = SeedStreams::new(7);
        let mut rng = streams.rng(StreamKind::Aux, 0);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let vals: Vec<f64> = (0..2000).map(|_| normal.sample(&mut rng)).collect();
        let s = SampleSet::new(vals.clone(), "gauss").unwrap();
        let cb = book(&[-0.9, -0.1, 0.4, 1.3], 2.0);
        let d = distortion(&cb, &s, 2.0);

        // lambda = 2 is exact in binary floating point
        let s2 = SampleSet::new(vals.iter().map(|v| 2.0 * v).collect(), "").unwrap();
        let cb2 = book(&[-1.8, -0.2, 0.8, 2.6], 2.0);
        assert_eq!(distortion(&cb2, &s2, 2.0), 2.0 * d);

        // generic shift within 1e-12 relative
        let c = 0.7318;
        let s3 = SampleSet::new(vals.iter().map(|v| v + c).collect(), "").unwrap();
        let cb3 = book(
            &cb.points().iter().map(|p| p + c).collect::<Vec<_>>(),
            2.0,
        );
        let d3 = distortion(&cb3, &s3, 2.0);
        assert!((d3 - d).abs() <= 1e-12 * d.max(1.0));
    }

    #[test]
    fn monotone_under_codebook_inclusion() {
        let streams = SeedStreams::new(8);
        let mut rng = streams.rng(StreamKind::Aux, 1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let s = SampleSet::new((0..5000).map(|_| normal.sample(&mut rng)).collect(), "").unwrap();
        let small = book(&[-0.8, 0.8], 2.0);
        let big = book(&[-0.8, 0.0, 0.8], 2.0);
        assert!(distortion(&big, &s, 2.0) <= distortion(&small, &s, 2.0));
    }

    #[test]
    fn lloyd_one_point_is_mean() {
        let s = SampleSet::new(vec![-2.0, -1.0, 1.0, 2.0], "sym").unwrap();
        let cb = train_lloyd(&s, 1, 2.0, 1e-12, 100).unwrap();
        assert!((cb.points()[0]).abs() < 1e-12);
    }

    #[test]
    fn lloyd_two_points_on_gaussian() {
        let streams = SeedStreams::new(9);
        let mut rng = streams.rng(StreamKind::Aux, 2);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let s = SampleSet::new((0..1_000_000).map(|_| normal.sample(&mut rng)).collect(), "")
            .unwrap();
        let cb = train_lloyd(&s, 2, 2.0, 1e-10, 300).unwrap();
        let c = (2.0 / std::f64::consts::PI).sqrt();
        assert!((cb.points()[0] + c).abs() < 0.02, "{:?}", cb.points());
        assert!((cb.points()[1] - c).abs() < 0.02, "{:?}", cb.points());
        // E min over {-c, c} of (Z - a)^2 = 1 - 2/pi
        let d = distortion(&cb, &s, 2.0);
        assert!((d - (1.0 - 2.0 / std::f64::consts::PI).sqrt()).abs() < 0.01);
    }

    #[test]
    fn lloyd_four_points_on_uniform() {
        let streams = SeedStreams::new(10);
        let mut rng = streams.rng(StreamKind::Aux, 3);
        let uni = Uniform::new(0.0, 1.0).unwrap();
        let s =
            SampleSet::new((0..1_000_000).map(|_| uni.sample(&mut rng)).collect(), "").unwrap();
        let cb = train_lloyd(&s, 4, 2.0, 1e-10, 300).unwrap();
        for (p, want) in cb.points().iter().zip([0.125, 0.375, 0.625, 0.875]) {
            assert!((p - want).abs() < 0.01, "{p} vs {want}");
        }
    }

    #[test]
    fn lloyd_descent_is_monotone() {
        let streams = SeedStreams::new(11);
        let mut rng = streams.rng(StreamKind::Aux, 4);
        let normal = Normal::new(0.3, 1.7).unwrap();
        let s = SampleSet::new((0..20_000).map(|_| normal.sample(&mut rng)).collect(), "")
            .unwrap();
        for &r in &[1.0, 2.0] {
            let (_, hist) = train_lloyd_history(&s, 6, r, 1e-10, 200).unwrap();
            for w in hist.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9), "descent violated: {w:?}");
            }
        }
    }

    #[test]
    fn lloyd_degenerate_samples_error() {
        let s = SampleSet::new(vec![1.0, 1.0, 1.0, 2.0], "atoms").unwrap();
        assert!(matches!(
            train_lloyd(&s, 3, 2.0, 1e-10, 100),
            Err(Error::DegenerateSamples { distinct: 2, requested: 3 })
        ));
    }

    #[test]
    fn dp_oracle_tiny_cases() {
        let s = SampleSet::new(vec![0.0, 1.0], "").unwrap();
        let cb = train_dp_oracle(&s, 2, 2.0).unwrap();
        assert_eq!(cb.points(), &[0.0, 1.0]);
        assert_eq!(distortion(&cb, &s, 2.0), 0.0);

        // {0,1,2} with 2 points: optimal groups two adjacent values,
        // mean-square distortion 1/6
        let s = SampleSet::new(vec![0.0, 1.0, 2.0], "").unwrap();
        let cb = train_dp_oracle(&s, 2, 2.0).unwrap();
        let d = distortion(&cb, &s, 2.0);
        assert!((d * d - 1.0 / 6.0).abs() < 1e-12, "d^2 = {}", d * d);
        let pts = cb.points();
        let match_a = (pts[0] - 0.5).abs() < 1e-12 && (pts[1] - 2.0).abs() < 1e-12;
        let match_b = (pts[0]).abs() < 1e-12 && (pts[1] - 1.5).abs() < 1e-12;
        assert!(match_a || match_b, "{pts:?}");
    }

    #[test]
    fn dp_oracle_dominates_lloyd() {
        let streams = SeedStreams::new(12);
        let mut rng = streams.rng(StreamKind::Aux, 5);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let s = SampleSet::new((0..10_000).map(|_| normal.sample(&mut rng)).collect(), "")
            .unwrap();
        for &(n, r) in &[(4usize, 2.0), (8, 2.0), (5, 1.0)] {
            let dp = train_dp_oracle(&s, n, r).unwrap();
            let lloyd = train_lloyd(&s, n, r, 1e-10, 300).unwrap();
            let d_dp = distortion(&dp, &s, r);
            let d_lloyd = distortion(&lloyd, &s, r);
            assert!(d_dp <= d_lloyd + 1e-12, "n={n} r={r}: {d_dp} > {d_lloyd}");
            // and Lloyd lands close to the optimum
            assert!(d_lloyd <= d_dp * 1.005, "n={n} r={r}: {d_lloyd} vs {d_dp}");
        }
    }

    #[test]
    fn dp_oracle_size_guard() {
        let s = SampleSet::new(vec![0.0; 2], "").unwrap();
        assert!(matches!(train_dp_oracle(&s, 65, 2.0), Err(Error::SizeGuard(_))));
        let big = SampleSet::new((0..10_001).map(|i| i as f64).collect(), "").unwrap();
        assert!(matches!(train_dp_oracle(&big, 2, 2.0), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn pierce_point_mass_is_exact() {
        let streams = SeedStreams::new(13);
        let mut tr = streams.rng(StreamKind::PierceTrain, 0);
        let mut ev = streams.rng(StreamKind::PierceEval, 0);
        let curve =
            pierce_curve(|_| 4.2, 2.0, 0.5, &[1, 2, 3], 100, 100, &mut tr, &mut ev);
        // point mass has a single distinct value: only N = 1 trains
        assert!(curve.is_err());
        let curve = pierce_curve(|_| 4.2, 2.0, 0.5, &[1], 100, 100, &mut tr, &mut ev).unwrap();
        assert_eq!(curve.points[0].error, 0.0);
    }

    #[test]
    fn pierce_uniform_matches_closed_form() {
        let streams = SeedStreams::new(14);
        let mut tr = streams.rng(StreamKind::PierceTrain, 1);
        let mut ev = streams.rng(StreamKind::PierceEval, 1);
        let uni = Uniform::new(0.0, 1.0).unwrap();
        let curve = pierce_curve(
            |rng| uni.sample(rng),
            2.0,
            0.5,
            &[4, 8, 16],
            400_000,
            400_000,
            &mut tr,
            &mut ev,
        )
        .unwrap();
        for pt in &curve.points {
            let want = 1.0 / (pt.size as f64 * 12f64.sqrt());
            assert!(
                (pt.error - want).abs() < 0.01 * want,
                "N={} got {} want {want}",
                pt.size,
                pt.error
            );
        }
    }
}
