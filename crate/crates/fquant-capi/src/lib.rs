//! C ABI over the fquant library: opaque handles, status codes and a
//! thread-local last-error message. The header is generated by cbindgen
//! into `include/fquant.h`.
//!
//! Conventions: every fallible function returns [`FqStatus`]; output
//! parameters are written only on `FQ_OK`; handles are freed with the
//! matching `_free` function and must not be used afterwards. Paths are
//! `2^levels + 1` samples on the uniform dyadic grid over `[0, horizon]`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use fquant::allocation::{allocate_phi, Modulus, WeightSequence};
use fquant::cppq::{build_poisson_quantizer, estimate_cpp_distortion, CppqParams, PoissonQuantizer};
use fquant::grid::{PathSample, TimeGrid};
use fquant::haar::{forward_transform, reconstruct, HaarCoeffTree};
use fquant::procsim::{JumpLaw, PathSimulator, ProcessSpec};
use fquant::product::{
    collect_coeff_samples, estimate_distortion, ProductQuantizer, TrainParams,
};
use fquant::quant1d::{distortion, train_dp_oracle, train_lloyd, Codebook1D, SampleSet};
use fquant::streams::SeedStreams;
use fquant::Error;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqStatus {
    FqOk = 0,
    FqNullPointer = 1,
    FqInvalidArgument = 2,
    FqDomainError = 3,
    FqInsufficientResolution = 4,
    FqDegenerateSamples = 5,
    FqBudgetTooSmall = 6,
    FqRuntimeError = 7,
}

/// Process family selector for simulation-backed calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqProcessFamily {
    /// `param` ignored.
    FqProcessBrownian = 0,
    /// `param` = Hurst index in (0, 1).
    FqProcessFbm = 1,
    /// `param` = stability index in (0, 2).
    FqProcessStable = 2,
    /// `param` = subordinator rate > 0.
    FqProcessGamma = 3,
}

/// Jump-size law of a compound Poisson quantizer.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqJumpLaw {
    /// Standard Poisson (unit jumps); parameters ignored.
    FqJumpsNone = 0,
    /// Gaussian(mean = param_a, std = param_b).
    FqJumpsGaussian = 1,
    /// Uniform(lo = param_a, hi = param_b).
    FqJumpsUniform = 2,
    /// Exponential(rate = param_a); param_b ignored.
    FqJumpsExponential = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&ch| ch != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> FqStatus {
    match err {
        Error::Domain(_) => FqStatus::FqDomainError,
        Error::InsufficientResolution { .. } => FqStatus::FqInsufficientResolution,
        Error::DegenerateSamples { .. } => FqStatus::FqDegenerateSamples,
        Error::BudgetTooSmall(_) => FqStatus::FqBudgetTooSmall,
        Error::InvalidParameter(_) | Error::Config(_) => FqStatus::FqInvalidArgument,
        _ => FqStatus::FqRuntimeError,
    }
}

fn fail(err: Error) -> FqStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Runs a closure, translating panics into `FQ_RUNTIME_ERROR` so they
/// never unwind across the boundary.
fn guarded<F: FnOnce() -> FqStatus>(f: F) -> FqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            FqStatus::FqRuntimeError
        }
    }
}

/// Message of the most recent error on this thread; valid until the next
/// failing call. Never null.
#[no_mangle]
pub extern "C" fn fq_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(ptr, len))
    }
}

fn spec_of(family: FqProcessFamily, param: f64) -> ProcessSpec {
    match family {
        FqProcessFamily::FqProcessBrownian => ProcessSpec::Brownian,
        FqProcessFamily::FqProcessFbm => ProcessSpec::Fbm { hurst: param },
        FqProcessFamily::FqProcessStable => ProcessSpec::Stable { alpha: param },
        FqProcessFamily::FqProcessGamma => ProcessSpec::GammaSubordinator { rate: param },
    }
}

fn jump_law_of(law: FqJumpLaw, a: f64, b: f64) -> Option<JumpLaw> {
    match law {
        FqJumpLaw::FqJumpsNone => None,
        FqJumpLaw::FqJumpsGaussian => Some(JumpLaw::Gaussian { mean: a, std: b }),
        FqJumpLaw::FqJumpsUniform => Some(JumpLaw::Uniform { lo: a, hi: b }),
        FqJumpLaw::FqJumpsExponential => Some(JumpLaw::Exponential { rate: a }),
    }
}

// ------------------------------------------------------------- haar

/// Haar coefficients of a sampled path. `values` holds `2^levels + 1`
/// grid samples; `out_coeffs` must hold `2^(n_max + 1)` entries.
///
/// # Safety
/// `values` and `out_coeffs` must point to buffers of the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn fq_haar_forward(
    values: *const f64,
    values_len: usize,
    horizon: f64,
    levels: u32,
    n_max: u32,
    out_coeffs: *mut f64,
    out_len: usize,
) -> FqStatus {
    guarded(|| {
        let Some(values) = slice_arg(values, values_len) else {
            set_error("values is null");
            return FqStatus::FqNullPointer;
        };
        if out_coeffs.is_null() {
            set_error("out_coeffs is null");
            return FqStatus::FqNullPointer;
        }
        let expect = 1usize << (n_max + 1);
        if out_len != expect {
            set_error(&format!("out_len must be {expect} for n_max {n_max}"));
            return FqStatus::FqInvalidArgument;
        }
        let grid = match TimeGrid::new(horizon, levels) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        let path = match PathSample::new(grid, values.to_vec()) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        match forward_transform(&path, n_max) {
            Ok(tree) => {
                let out = slice::from_raw_parts_mut(out_coeffs, out_len);
                out.copy_from_slice(tree.coeffs());
                FqStatus::FqOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Evaluates the partial sum of `2^(n_max+1)` Haar coefficients on the
/// grid; `out_values` must hold `2^levels + 1` entries.
///
/// # Safety
/// `coeffs` and `out_values` must point to buffers of the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn fq_haar_reconstruct(
    coeffs: *const f64,
    coeffs_len: usize,
    horizon: f64,
    levels: u32,
    out_values: *mut f64,
    out_len: usize,
) -> FqStatus {
    guarded(|| {
        let Some(coeffs) = slice_arg(coeffs, coeffs_len) else {
            set_error("coeffs is null");
            return FqStatus::FqNullPointer;
        };
        if out_values.is_null() {
            set_error("out_values is null");
            return FqStatus::FqNullPointer;
        }
        if !coeffs_len.is_power_of_two() || coeffs_len < 2 {
            set_error("coeffs_len must be a power of two >= 2");
            return FqStatus::FqInvalidArgument;
        }
        let n_max = coeffs_len.trailing_zeros() - 1;
        let grid = match TimeGrid::new(horizon, levels) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        if out_len != grid.points() {
            set_error(&format!("out_len must be {} for level {levels}", grid.points()));
            return FqStatus::FqInvalidArgument;
        }
        let tree = match HaarCoeffTree::from_coeffs(horizon, n_max, coeffs.to_vec()) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        match reconstruct(&tree, grid) {
            Ok(path) => {
                let out = slice::from_raw_parts_mut(out_values, out_len);
                out.copy_from_slice(path.values());
                FqStatus::FqOk
            }
            Err(e) => fail(e),
        }
    })
}

// --------------------------------------------------------- codebooks

/// Opaque scalar codebook.
pub struct FqCodebook(Codebook1D);

/// Trains an `L^r`-optimal codebook of `size` points on the samples
/// (Lloyd fixed point, deterministic quantile initialization).
///
/// # Safety
/// `samples` must point to `samples_len` doubles; `out` must be a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn fq_codebook_train(
    samples: *const f64,
    samples_len: usize,
    size: usize,
    r: f64,
    out: *mut *mut FqCodebook,
) -> FqStatus {
    guarded(|| {
        let Some(values) = slice_arg(samples, samples_len) else {
            set_error("samples is null");
            return FqStatus::FqNullPointer;
        };
        if out.is_null() {
            set_error("out is null");
            return FqStatus::FqNullPointer;
        }
        let set = match SampleSet::new(values.to_vec(), "capi") {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        match train_lloyd(&set, size, r, 1e-10, 2000) {
            Ok(cb) => {
                *out = Box::into_raw(Box::new(FqCodebook(cb)));
                FqStatus::FqOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Exact globally optimal codebook for the empirical measure (interval
/// dynamic programming; guarded to 10^4 samples and 64 points).
///
/// # Safety
/// Same contracts as [`fq_codebook_train`].
#[no_mangle]
pub unsafe extern "C" fn fq_codebook_train_exact(
    samples: *const f64,
    samples_len: usize,
    size: usize,
    r: f64,
    out: *mut *mut FqCodebook,
) -> FqStatus {
    guarded(|| {
        let Some(values) = slice_arg(samples, samples_len) else {
            set_error("samples is null");
            return FqStatus::FqNullPointer;
        };
        if out.is_null() {
            set_error("out is null");
            return FqStatus::FqNullPointer;
        }
        let set = match SampleSet::new(values.to_vec(), "capi") {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        match train_dp_oracle(&set, size, r) {
            Ok(cb) => {
                *out = Box::into_raw(Box::new(FqCodebook(cb)));
                FqStatus::FqOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of codepoints.
///
/// # Safety
/// `cb` must be a live codebook handle.
#[no_mangle]
pub unsafe extern "C" fn fq_codebook_size(cb: *const FqCodebook) -> usize {
    if cb.is_null() {
        return 0;
    }
    (*cb).0.size()
}

/// Copies the sorted codepoints into `out` (capacity `out_len` >= size).
///
/// # Safety
/// `cb` must be live; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fq_codebook_points(
    cb: *const FqCodebook,
    out: *mut f64,
    out_len: usize,
) -> FqStatus {
    guarded(|| {
        if cb.is_null() || out.is_null() {
            set_error("null handle or buffer");
            return FqStatus::FqNullPointer;
        }
        let points = (*cb).0.points();
        if out_len < points.len() {
            set_error(&format!("buffer holds {out_len}, need {}", points.len()));
            return FqStatus::FqInvalidArgument;
        }
        slice::from_raw_parts_mut(out, points.len()).copy_from_slice(points);
        FqStatus::FqOk
    })
}

/// Nearest codepoint of `x` (ties toward the smaller index).
///
/// # Safety
/// `cb` must be live; output pointers may be null to skip them.
#[no_mangle]
pub unsafe extern "C" fn fq_codebook_nearest(
    cb: *const FqCodebook,
    x: f64,
    out_index: *mut usize,
    out_point: *mut f64,
) -> FqStatus {
    guarded(|| {
        if cb.is_null() {
            set_error("null handle");
            return FqStatus::FqNullPointer;
        }
        let (idx, point) = (*cb).0.nearest(x);
        if !out_index.is_null() {
            *out_index = idx;
        }
        if !out_point.is_null() {
            *out_point = point;
        }
        FqStatus::FqOk
    })
}

/// Empirical distortion `(mean_k min_a |x_k - a|^r)^{1/r}`.
///
/// # Safety
/// `cb` must be live; `samples` must hold `samples_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fq_codebook_distortion(
    cb: *const FqCodebook,
    samples: *const f64,
    samples_len: usize,
    r: f64,
    out: *mut f64,
) -> FqStatus {
    guarded(|| {
        if cb.is_null() || out.is_null() {
            set_error("null handle or output");
            return FqStatus::FqNullPointer;
        }
        let Some(values) = slice_arg(samples, samples_len) else {
            set_error("samples is null");
            return FqStatus::FqNullPointer;
        };
        let set = match SampleSet::new(values.to_vec(), "capi") {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        *out = distortion(&(*cb).0, &set, r);
        FqStatus::FqOk
    })
}

/// Releases a codebook handle.
///
/// # Safety
/// `cb` must come from a train call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fq_codebook_free(cb: *mut FqCodebook) {
    if !cb.is_null() {
        drop(Box::from_raw(cb));
    }
}

// ------------------------------------------------- product quantizer

/// Opaque Haar product quantizer.
pub struct FqProductQuantizer {
    inner: ProductQuantizer,
    spec: ProcessSpec,
    grid: TimeGrid,
}

/// Trains a Haar product quantizer for the process family under a total
/// budget: allocates per-coefficient codebook sizes from the modulus
/// exponent `phi_exponent`, simulates `train_paths` training paths and
/// fits one codebook per coefficient.
///
/// # Safety
/// `out` must be a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn fq_product_quantizer_train(
    family: FqProcessFamily,
    param: f64,
    horizon: f64,
    grid_levels: u32,
    phi_exponent: f64,
    budget: u64,
    r: f64,
    train_paths: usize,
    seed: u64,
    out: *mut *mut FqProductQuantizer,
) -> FqStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null");
            return FqStatus::FqNullPointer;
        }
        let spec = spec_of(family, param);
        let build = || -> Result<FqProductQuantizer, Error> {
            let grid = TimeGrid::new(horizon, grid_levels)?;
            let modulus = Modulus::power(1.0, phi_exponent)?;
            let plan = allocate_phi(&WeightSequence::phi(modulus), budget)?;
            let sim = PathSimulator::new(spec, grid)?;
            let streams = SeedStreams::new(seed);
            let params = TrainParams { samples_per_coeff: train_paths, ..TrainParams::default() };
            let samples = collect_coeff_samples(&sim, plan.depth(), train_paths, &streams)?;
            let inner = ProductQuantizer::build(plan, &samples, horizon, r, &params)?;
            Ok(FqProductQuantizer { inner, spec, grid })
        };
        match build() {
            Ok(q) => {
                *out = Box::into_raw(Box::new(q));
                FqStatus::FqOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Quantizes one sampled path (`2^levels + 1` values on the quantizer's
/// grid) and writes the quantized path.
///
/// # Safety
/// `q` must be live; the buffers must hold the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn fq_product_quantizer_quantize(
    q: *const FqProductQuantizer,
    values: *const f64,
    values_len: usize,
    out_values: *mut f64,
    out_len: usize,
) -> FqStatus {
    guarded(|| {
        if q.is_null() || out_values.is_null() {
            set_error("null handle or buffer");
            return FqStatus::FqNullPointer;
        }
        let Some(values) = slice_arg(values, values_len) else {
            set_error("values is null");
            return FqStatus::FqNullPointer;
        };
        let handle = &*q;
        if values_len != handle.grid.points() || out_len != handle.grid.points() {
            set_error(&format!("buffers must hold {} values", handle.grid.points()));
            return FqStatus::FqInvalidArgument;
        }
        let run = || -> Result<PathSample, Error> {
            let path = PathSample::new(handle.grid, values.to_vec())?;
            Ok(handle.inner.quantize_path(&path)?.0)
        };
        match run() {
            Ok(path) => {
                slice::from_raw_parts_mut(out_values, out_len).copy_from_slice(path.values());
                FqStatus::FqOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Monte Carlo distortion of the quantizer on fresh paths of its own
/// process family.
///
/// # Safety
/// `q` must be live; output pointers may be null to skip them.
#[no_mangle]
pub unsafe extern "C" fn fq_product_quantizer_distortion(
    q: *const FqProductQuantizer,
    r: f64,
    p: f64,
    n_paths: usize,
    seed: u64,
    out_estimate: *mut f64,
    out_std_error: *mut f64,
) -> FqStatus {
    guarded(|| {
        if q.is_null() {
            set_error("null handle");
            return FqStatus::FqNullPointer;
        }
        let handle = &*q;
        let run = || -> Result<(f64, f64), Error> {
            let sim = PathSimulator::new(handle.spec, handle.grid)?;
            let report = estimate_distortion(
                &handle.inner,
                &sim,
                r,
                p,
                n_paths,
                &SeedStreams::new(seed),
            )?;
            Ok((report.estimate, report.std_error))
        };
        match run() {
            Ok((estimate, std_error)) => {
                if !out_estimate.is_null() {
                    *out_estimate = estimate;
                }
                if !out_std_error.is_null() {
                    *out_std_error = std_error;
                }
                FqStatus::FqOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a product quantizer handle.
///
/// # Safety
/// `q` must come from the train call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fq_product_quantizer_free(q: *mut FqProductQuantizer) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

// ------------------------------------------------- Poisson quantizer

/// Opaque censored-jump-time quantizer for (compound) Poisson paths.
pub struct FqPoissonQuantizer(PoissonQuantizer);

/// Builds the explicit (compound) Poisson quantizer under a total
/// budget; `FQ_JUMPS_NONE` selects the standard Poisson process.
///
/// # Safety
/// `out` must be a valid destination pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn fq_poisson_quantizer_build(
    lambda: f64,
    horizon: f64,
    r: f64,
    p: f64,
    delta: f64,
    budget: u64,
    jump_law: FqJumpLaw,
    jump_param_a: f64,
    jump_param_b: f64,
    train_draws: usize,
    seed: u64,
    out: *mut *mut FqPoissonQuantizer,
) -> FqStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null");
            return FqStatus::FqNullPointer;
        }
        let params = CppqParams { delta, train_draws, ..CppqParams::default() };
        match build_poisson_quantizer(
            lambda,
            horizon,
            r,
            p,
            budget,
            jump_law_of(jump_law, jump_param_a, jump_param_b),
            &params,
            &SeedStreams::new(seed),
        ) {
            Ok(q) => {
                *out = Box::into_raw(Box::new(FqPoissonQuantizer(q)));
                FqStatus::FqOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Monte Carlo distortion of the Poisson quantizer on fresh jump paths.
///
/// # Safety
/// `q` must be live; output pointers may be null to skip them.
#[no_mangle]
pub unsafe extern "C" fn fq_poisson_quantizer_distortion(
    q: *const FqPoissonQuantizer,
    grid_levels: u32,
    n_paths: usize,
    seed: u64,
    out_estimate: *mut f64,
    out_std_error: *mut f64,
) -> FqStatus {
    guarded(|| {
        if q.is_null() {
            set_error("null handle");
            return FqStatus::FqNullPointer;
        }
        let handle = &*q;
        let run = || -> Result<(f64, f64), Error> {
            let grid = TimeGrid::new(handle.0.horizon(), grid_levels)?;
            let report =
                estimate_cpp_distortion(&handle.0, grid, n_paths, &SeedStreams::new(seed))?;
            Ok((report.estimate, report.std_error))
        };
        match run() {
            Ok((estimate, std_error)) => {
                if !out_estimate.is_null() {
                    *out_estimate = estimate;
                }
                if !out_std_error.is_null() {
                    *out_std_error = std_error;
                }
                FqStatus::FqOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of jump-time codebooks (the trained depth).
///
/// # Safety
/// `q` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fq_poisson_quantizer_depth(q: *const FqPoissonQuantizer) -> usize {
    if q.is_null() {
        return 0;
    }
    (*q).0.time_books().len()
}

/// Releases a Poisson quantizer handle.
///
/// # Safety
/// `q` must come from the build call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fq_poisson_quantizer_free(q: *mut FqPoissonQuantizer) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}
