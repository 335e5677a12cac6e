//! Exercises the C ABI through the exported functions, the way a foreign
//! binding would.

use fquant_capi::*;

#[test]
fn haar_round_trip_through_the_abi() {
    let horizon = 1.0;
    let levels = 8u32;
    let points = (1usize << levels) + 1;
    // dyadic step path: exactly representable at n_max = 2
    let values: Vec<f64> = (0..points)
        .map(|i| {
            let t = i as f64 / (1 << levels) as f64;
            match (t * 8.0) as usize {
                0 | 1 => 1.5,
                2 | 3 => -0.5,
                4 | 5 => 2.0,
                _ => 0.25,
            }
        })
        .collect();
    let n_max = 2u32;
    let mut coeffs = vec![0.0; 1 << (n_max + 1)];
    let status = unsafe {
        fq_haar_forward(
            values.as_ptr(),
            values.len(),
            horizon,
            levels,
            n_max,
            coeffs.as_mut_ptr(),
            coeffs.len(),
        )
    };
    assert_eq!(status, FqStatus::FqOk);

    let mut back = vec![0.0; points];
    let status = unsafe {
        fq_haar_reconstruct(
            coeffs.as_ptr(),
            coeffs.len(),
            horizon,
            levels,
            back.as_mut_ptr(),
            back.len(),
        )
    };
    assert_eq!(status, FqStatus::FqOk);
    for i in 0..points - 1 {
        assert!((values[i] - back[i]).abs() < 1e-12, "mismatch at {i}");
    }
}

#[test]
fn codebook_train_nearest_distortion_free() {
    let samples: Vec<f64> = (0..10_000).map(|i| (i % 100) as f64 / 100.0).collect();
    let mut cb: *mut FqCodebook = std::ptr::null_mut();
    let status = unsafe { fq_codebook_train(samples.as_ptr(), samples.len(), 4, 2.0, &mut cb) };
    assert_eq!(status, FqStatus::FqOk);
    assert_eq!(unsafe { fq_codebook_size(cb) }, 4);

    let mut points = vec![0.0; 4];
    assert_eq!(
        unsafe { fq_codebook_points(cb, points.as_mut_ptr(), points.len()) },
        FqStatus::FqOk
    );
    for (p, want) in points.iter().zip([0.125, 0.375, 0.625, 0.875]) {
        assert!((p - want).abs() < 0.02, "{p} vs {want}");
    }

    let mut idx = 0usize;
    let mut point = 0.0f64;
    assert_eq!(
        unsafe { fq_codebook_nearest(cb, 0.9, &mut idx, &mut point) },
        FqStatus::FqOk
    );
    assert_eq!(idx, 3);

    let mut d = 0.0f64;
    assert_eq!(
        unsafe { fq_codebook_distortion(cb, samples.as_ptr(), samples.len(), 2.0, &mut d) },
        FqStatus::FqOk
    );
    assert!((d - 1.0 / (4.0 * 12f64.sqrt())).abs() < 0.01, "d = {d}");

    unsafe { fq_codebook_free(cb) };
}

#[test]
fn error_paths_set_messages_and_codes() {
    let mut cb: *mut FqCodebook = std::ptr::null_mut();
    // degenerate samples: fewer distinct values than codepoints
    let samples = [1.0, 1.0, 1.0, 2.0];
    let status =
        unsafe { fq_codebook_train(samples.as_ptr(), samples.len(), 3, 2.0, &mut cb) };
    assert_eq!(status, FqStatus::FqDegenerateSamples);
    let msg = unsafe { std::ffi::CStr::from_ptr(fq_last_error()) };
    assert!(msg.to_str().unwrap().contains("distinct"));

    // null pointers
    let status = unsafe { fq_codebook_train(std::ptr::null(), 0, 1, 2.0, &mut cb) };
    assert_eq!(status, FqStatus::FqNullPointer);
}

#[test]
fn product_quantizer_over_the_abi() {
    let mut q: *mut FqProductQuantizer = std::ptr::null_mut();
    let status = unsafe {
        fq_product_quantizer_train(
            FqProcessFamily::FqProcessBrownian,
            0.0,
            1.0,
            8,
            0.5,
            256,
            2.0,
            20_000,
            42,
            &mut q,
        )
    };
    assert_eq!(status, FqStatus::FqOk);

    let points = (1usize << 8) + 1;
    let path: Vec<f64> = (0..points).map(|i| (i as f64 / 256.0).sin()).collect();
    let mut quantized = vec![0.0; points];
    let status = unsafe {
        fq_product_quantizer_quantize(
            q,
            path.as_ptr(),
            path.len(),
            quantized.as_mut_ptr(),
            quantized.len(),
        )
    };
    assert_eq!(status, FqStatus::FqOk);
    assert!(quantized.iter().any(|&v| v != 0.0));

    let (mut est, mut se) = (0.0f64, 0.0f64);
    let status =
        unsafe { fq_product_quantizer_distortion(q, 2.0, 2.0, 4_000, 42, &mut est, &mut se) };
    assert_eq!(status, FqStatus::FqOk);
    assert!(est > 0.0 && se > 0.0);

    unsafe { fq_product_quantizer_free(q) };
}

#[test]
fn poisson_quantizer_over_the_abi() {
    let mut q: *mut FqPoissonQuantizer = std::ptr::null_mut();
    let status = unsafe {
        fq_poisson_quantizer_build(
            1.0,
            1.0,
            1.0,
            1.0,
            0.5,
            1 << 10,
            FqJumpLaw::FqJumpsNone,
            0.0,
            0.0,
            20_000,
            42,
            &mut q,
        )
    };
    assert_eq!(status, FqStatus::FqOk);
    assert!(unsafe { fq_poisson_quantizer_depth(q) } >= 1);

    let (mut est, mut se) = (0.0f64, 0.0f64);
    let status =
        unsafe { fq_poisson_quantizer_distortion(q, 10, 10_000, 42, &mut est, &mut se) };
    assert_eq!(status, FqStatus::FqOk);
    assert!(est > 0.0 && est < 0.2, "est = {est}");

    // p > r must be rejected with a message naming p
    let mut q2: *mut FqPoissonQuantizer = std::ptr::null_mut();
    let status = unsafe {
        fq_poisson_quantizer_build(
            1.0,
            1.0,
            1.0,
            2.0,
            0.5,
            64,
            FqJumpLaw::FqJumpsNone,
            0.0,
            0.0,
            1_000,
            42,
            &mut q2,
        )
    };
    assert_eq!(status, FqStatus::FqInvalidArgument);

    unsafe { fq_poisson_quantizer_free(q) };
}

#[test]
fn generated_header_exists_with_expected_symbols() {
    let header = include_str!("../include/fquant.h");
    for symbol in [
        "fq_haar_forward",
        "fq_codebook_train",
        "fq_product_quantizer_train",
        "fq_poisson_quantizer_build",
        "fq_last_error",
        "FqStatus",
    ] {
        assert!(header.contains(symbol), "header missing {symbol}");
    }
}
