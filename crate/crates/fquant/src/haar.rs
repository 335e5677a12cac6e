//! Haar basis on `[0, T]`: pointwise evaluation, forward coefficient
//! transform of grid paths and truncated reconstruction.
//!
//! Flat indexing follows the classical enumeration: index `0` is the
//! scaling function `e_0 = T^{-1/2} 1_{[0,T]}`, index `2^n + k`
//! (`0 <= k < 2^n`) is the dilate `2^{n/2} e_1(2^n t - kT)` of the mother
//! function `e_1 = T^{-1/2}(1_{[0,T/2)} - 1_{[T/2,T]})`.
//!
//! Conventions fixed here once and for all:
//!
//! * [`haar_function`] evaluates the literal definitions, with closed
//!   right endpoints (`e_1(T) = -T^{-1/2}`).
//! * Coefficient integrals use the grid's left-endpoint rule, so every
//!   identity below is exact (up to rounding) on dyadic step paths.
//! * [`reconstruct`] returns the cadlag representative of the partial
//!   sum: on each finest dyadic block the block value, right-continuous
//!   at block boundaries, with the final grid point carrying the last
//!   block value. This is the version whose left-endpoint quadrature
//!   reproduces the `L^p` norm of the partial sum exactly.

use crate::error::{Error, Result};
use crate::grid::{PathSample, TimeGrid};
use crate::math::Kahan;

/// Haar coefficients `(X|e_j)` of a path, `j < 2^{max_level+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarCoeffTree {
    horizon: f64,
    max_level: u32,
    coeffs: Vec<f64>,
}

impl HaarCoeffTree {
    pub fn from_coeffs(horizon: f64, max_level: u32, coeffs: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Domain("horizon must be positive".into()));
        }
        if max_level > 24 {
            return Err(Error::Domain(format!("max_level {max_level} too large")));
        }
        let expect = 1usize << (max_level + 1);
        if coeffs.len() != expect {
            return Err(Error::Domain(format!(
                "coefficient tree of max_level {max_level} needs {expect} entries, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { horizon, max_level, coeffs })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs[j]
    }
}

/// Level of flat index `j >= 1`, i.e. `n` with `2^n <= j < 2^{n+1}`.
pub fn level_of(j: usize) -> u32 {
    debug_assert!(j >= 1);
    usize::BITS - 1 - j.leading_zeros()
}

#[inline]
fn amplitude(n: u32, horizon: f64) -> f64 {
    2f64.powi(n as i32 / 2) * if n % 2 == 1 { std::f64::consts::SQRT_2 } else { 1.0 }
        / horizon.sqrt()
}

/// Pointwise evaluation of `e_j(t)` per the literal definitions.
pub fn haar_function(j: usize, t: f64, horizon: f64) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {horizon}]")));
    }
    let inv_sqrt_t = 1.0 / horizon.sqrt();
    if j == 0 {
        return Ok(inv_sqrt_t);
    }
    let n = level_of(j);
    let k = j - (1usize << n);
    // e_{2^n+k}(t) = 2^{n/2} e_1(2^n t - kT), e_1 supported on [0, T]
    // with a closed right endpoint.
    let s = 2f64.powi(n as i32) * t - k as f64 * horizon;
    let e1 = if s < 0.0 || s > horizon {
        0.0
    } else if s < horizon / 2.0 {
        inv_sqrt_t
    } else {
        -inv_sqrt_t
    };
    Ok(2f64.powi(n as i32 / 2) * if n % 2 == 1 { std::f64::consts::SQRT_2 } else { 1.0 } * e1)
}

/// Haar coefficients of `path` up to level `n_max`, by difference of
/// half-block integrals under the left-endpoint rule.
pub fn forward_transform(path: &PathSample, n_max: u32) -> Result<HaarCoeffTree> {
    let grid = path.grid();
    if grid.levels() < n_max + 1 {
        return Err(Error::InsufficientResolution {
            required: n_max + 1,
            actual: grid.levels(),
        });
    }
    let levels = grid.levels();
    let m = grid.intervals();
    let h = grid.step();
    let horizon = grid.horizon();

    // prefix[i] = integral of the step path over [0, t_i]
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(0.0);
    let mut acc = Kahan::new();
    for &v in &path.values()[..m] {
        acc.add(v * h);
        prefix.push(acc.total());
    }

    let mut coeffs = vec![0.0; 1usize << (n_max + 1)];
    coeffs[0] = prefix[m] / horizon.sqrt();
    for n in 0..=n_max {
        let amp = amplitude(n, horizon);
        let width = 1usize << (levels - n);
        let half = width >> 1;
        for k in 0..(1usize << n) {
            let start = k * width;
            let left = prefix[start + half] - prefix[start];
            let right = prefix[start + width] - prefix[start + half];
            coeffs[(1usize << n) + k] = amp * (left - right);
        }
    }
    HaarCoeffTree::from_coeffs(horizon, n_max, coeffs)
}

/// Values of the partial sum on the `2^{max_level+1}` finest dyadic blocks.
fn block_values(tree: &HaarCoeffTree) -> Vec<f64> {
    let top = tree.max_level;
    let nb = 1usize << (top + 1);
    let base = tree.coeffs[0] / tree.horizon.sqrt();
    let amps: Vec<f64> = (0..=top).map(|n| amplitude(n, tree.horizon)).collect();
    let mut blocks = vec![0.0; nb];
    for (b, slot) in blocks.iter_mut().enumerate() {
        let mut v = base;
        for n in 0..=top {
            let k = b >> (top + 1 - n);
            let sign_bit = (b >> (top - n)) & 1;
            let c = tree.coeffs[(1usize << n) + k] * amps[n as usize];
            v += if sign_bit == 0 { c } else { -c };
        }
        *slot = v;
    }
    blocks
}

/// Evaluates the partial sum `sum_j coeff[j] e_j` on `grid` (cadlag
/// representative; see the module docs).
pub fn reconstruct(tree: &HaarCoeffTree, grid: TimeGrid) -> Result<PathSample> {
    if grid.levels() < tree.max_level + 1 {
        return Err(Error::InsufficientResolution {
            required: tree.max_level + 1,
            actual: grid.levels(),
        });
    }
    if (grid.horizon() - tree.horizon).abs() > 0.0 {
        return Err(Error::Domain("grid horizon differs from tree horizon".into()));
    }
    let blocks = block_values(tree);
    let shift = grid.levels() - (tree.max_level + 1);
    let m = grid.intervals();
    let mut values = Vec::with_capacity(m + 1);
    for i in 0..m {
        values.push(blocks[i >> shift]);
    }
    values.push(*blocks.last().expect("nonempty"));
    PathSample::new(grid, values)
}

/// Both sides of the level-`n` norm identity
/// `int |sum_k (f|e_{2^n+k}) e_{2^n+k}|^p = 2^{n(p/2-1)} T^{1-p/2} sum_k |(f|e_{2^n+k})|^p`:
/// the left side by quadrature of the level-`n` sum on a finer grid, the
/// right side in closed form.
pub fn level_norm_identity(tree: &HaarCoeffTree, n: u32, p: f64) -> Result<(f64, f64)> {
    if n > tree.max_level {
        return Err(Error::Domain(format!(
            "level {n} exceeds tree max_level {}",
            tree.max_level
        )));
    }
    if !(p > 0.0) {
        return Err(Error::Domain("p must be positive".into()));
    }
    let horizon = tree.horizon;
    let q = (n + 2).min(26);
    let grid = TimeGrid::new(horizon, q)?;
    let amp = amplitude(n, horizon);
    let h = grid.step();
    let mut acc = Kahan::new();
    for i in 0..grid.intervals() {
        let k = i >> (q - n);
        let sign_bit = (i >> (q - n - 1)) & 1;
        let v = tree.coeffs[(1usize << n) + k] * amp * if sign_bit == 0 { 1.0 } else { -1.0 };
        acc.add(v.abs().powf(p) * h);
    }
    let direct = acc.total();

    let mut csum = Kahan::new();
    for k in 0..(1usize << n) {
        csum.add(tree.coeffs[(1usize << n) + k].abs().powf(p));
    }
    let closed =
        2f64.powf(n as f64 * (p / 2.0 - 1.0)) * horizon.powf(1.0 - p / 2.0) * csum.total();
    Ok((direct, closed))
}
