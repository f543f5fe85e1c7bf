//! One pass/fail line per acceptance criterion, with its runtime budget.
//! Oracles here are written independently of the code under test.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cvkit_cli::fixture::synthetic_pair;
use cvkit_core::geometry::{read_ply, write_ply, PlyFormat, PointCloud, RigidTransform};
use cvkit_core::icp::{fit_rigid_svd, icp_point_to_point, ICPConfig, ICPResult, KdTree3};
use cvkit_core::image::{to_float_scaled, Image, ImageSize};
use cvkit_core::imgproc::color::gray_from_rgb;
use cvkit_core::imgproc::filter::sobel;
use cvkit_core::imgproc::flip::{flip_horizontal, flip_vertical};
use cvkit_core::imgproc::resize::{resize_bilinear, resize_nearest};
use cvkit_core::io::{decode_jpeg, decode_png, encode_jpeg, encode_png};
use cvkit_core::tensor::{CountingAllocator, CpuAllocator, Tensor};
use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const JPEG_DECODE_TOLERANCE: u8 = 2;
const JPEG_ROUNDTRIP_TOLERANCE: u8 = 4;
const F32_TOLERANCE: f64 = 1e-5;
const IDENTITY_TOLERANCE: f32 = 1e-6;
const GRAY_F32_TOLERANCE: f64 = 1e-6;
const SVD_TOLERANCE: f64 = 1e-9;
const ICP_ROTATION_TOLERANCE: f64 = 1e-3;
const ICP_TRANSLATION_FRACTION: f64 = 1e-4;
const ICP_RMSE_TOLERANCE: f64 = 1e-8;
const ICP_MAX_ITERATIONS: usize = 20;
/// The trace reaches round-off level once the fit is exact; monotonicity is
/// checked to this resolution (relative to the cloud extent).
const ICP_ROUNDOFF_SLACK: f64 = 1e-12;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn size(w: usize, h: usize) -> ImageSize {
    ImageSize::new(w, h).unwrap()
}

fn random_u8<const C: usize>(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image<u8, C> {
    let mut data = vec![0u8; w * h * C];
    rng.fill(&mut data[..]);
    Image::from_size_slice(size(w, h), &data).unwrap()
}

fn random_f32<const C: usize>(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image<f32, C> {
    let data: Vec<f32> = (0..w * h * C).map(|_| rng.random::<f32>()).collect();
    Image::from_size_slice(size(w, h), &data).unwrap()
}

fn at<T: Copy>(data: &[T], w: usize, c: usize, x: usize, y: usize, ch: usize) -> T {
    data[(y * w + x) * c + ch]
}

// ---------------------------------------------------------------- tensors

fn listing_pipeline() -> Check {
    let start = Instant::now();
    let x = Tensor::<f64, 2>::from_shape_slice([2, 2], &[1.0, 2.0, 3.0, 4.0], CpuAllocator).map_err(|e| e.to_string())?;
    let ones = Tensor::<f64, 2>::from_shape_val([2, 2], 1.0, CpuAllocator).map_err(|e| e.to_string())?;
    let mean = x
        .sub(&ones)
        .and_then(|d| d.powf(2.0))
        .and_then(|d| d.mean())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(mean == 3.5, || format!("mean = {mean}"))?;
    ensure(elapsed < Duration::from_millis(1), || format!("pipeline took {elapsed:?}"))?;
    Ok(format!("mean = {mean}, pipeline {elapsed:?}"))
}

// ---------------------------------------------------------------- kernels

fn zero_allocation() -> Check {
    const ITERS: usize = 1000;
    let alloc = CountingAllocator::new(CpuAllocator);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (w, h) = (64, 48);
    let rgb = random_u8::<3>(&mut rng, w, h);
    let rgb_f = random_f32::<1>(&mut rng, w, h);
    let rgb = Image::<u8, 3, _>::from_size_slice_in(size(w, h), rgb.as_slice(), alloc.clone()).unwrap();
    let gray_f = Image::<f32, 1, _>::from_size_slice_in(size(w, h), rgb_f.as_slice(), alloc.clone()).unwrap();
    let mut gray = Image::<u8, 1, _>::from_size_val_in(size(w, h), 0, alloc.clone()).unwrap();
    let mut flipped = Image::<u8, 3, _>::from_size_val_in(size(w, h), 0, alloc.clone()).unwrap();
    let mut small = Image::<u8, 3, _>::from_size_val_in(size(37, 21), 0, alloc.clone()).unwrap();
    let mut big_f = Image::<f32, 1, _>::from_size_val_in(size(101, 77), 0.0, alloc.clone()).unwrap();
    let mut edges = Image::<f32, 1, _>::from_size_val_in(size(w, h), 0.0, alloc.clone()).unwrap();

    let mut report = Vec::new();
    let mut run = |name: &str, f: &mut dyn FnMut()| -> Result<(), String> {
        let before = alloc.acquire_count();
        for _ in 0..ITERS {
            f();
        }
        let grown = alloc.acquire_count() - before;
        report.push(format!("{name}+{grown}"));
        ensure(grown == 0, || format!("{name} acquired {grown} regions"))
    };
    run("gray_from_rgb", &mut || gray_from_rgb(&rgb, &mut gray).unwrap())?;
    run("flip_horizontal", &mut || flip_horizontal(&rgb, &mut flipped).unwrap())?;
    run("resize_nearest", &mut || resize_nearest(&rgb, &mut small).unwrap())?;
    run("resize_bilinear", &mut || resize_bilinear(&gray_f, &mut big_f).unwrap())?;
    run("sobel", &mut || sobel(&gray_f, &mut edges, 3).unwrap())?;
    Ok(format!("{ITERS} iterations each: {}", report.join(" ")))
}

/// Nearest source index: pixel centers aligned, exact ties to the lower index.
fn nearest_oracle(d: usize, src: usize, dst: usize) -> usize {
    let center = (d as f64 + 0.5) * src as f64 / dst as f64 - 0.5;
    let lower = center.floor();
    let idx = if center - lower > 0.5 { lower + 1.0 } else { lower };
    (idx.max(0.0) as usize).min(src - 1)
}

fn bilinear_oracle(src: &[f32], w: usize, h: usize, c: usize, dw: usize, dh: usize, x: usize, y: usize, ch: usize) -> f64 {
    let sx = ((x as f64 + 0.5) * w as f64 / dw as f64 - 0.5).clamp(0.0, (w - 1) as f64);
    let sy = ((y as f64 + 0.5) * h as f64 / dh as f64 - 0.5).clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
    let p = |x, y| at(src, w, c, x, y, ch) as f64;
    (1.0 - fy) * ((1.0 - fx) * p(x0, y0) + fx * p(x1, y0)) + fy * ((1.0 - fx) * p(x0, y1) + fx * p(x1, y1))
}

fn sobel_oracle(src: &[f32], w: usize, h: usize, c: usize, x: usize, y: usize, ch: usize) -> f64 {
    let p = |dx: isize, dy: isize| {
        let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
        let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
        at(src, w, c, sx, sy, ch) as f64
    };
    let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
    let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
    (gx * gx + gy * gy).sqrt()
}

fn kernel_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_f32 = 0.0f64;
    let mut pixels = 0usize;
    for case in 0..100 {
        let (w, h) = match case {
            0 => (1, 1),
            1 => (256, 256),
            _ => (rng.random_range(1..=256), rng.random_range(1..=256)),
        };
        let (dw, dh) = (rng.random_range(1..=256), rng.random_range(1..=256));
        pixels += w * h;
        let fail = |what: &str, x: usize, y: usize| format!("case {case} ({w}x{h}): {what} at ({x}, {y})");

        let rgb = random_u8::<3>(&mut rng, w, h);
        let s = rgb.as_slice();
        let mut gray = Image::<u8, 1>::from_size_val(size(w, h), 0).unwrap();
        gray_from_rgb(&rgb, &mut gray).unwrap();
        let mut fh = Image::<u8, 3>::from_size_val(size(w, h), 0).unwrap();
        let mut fv = fh.clone();
        flip_horizontal(&rgb, &mut fh).unwrap();
        flip_vertical(&rgb, &mut fv).unwrap();
        let mut rgb_f = Image::<f32, 3>::from_size_val(size(w, h), 0.0).unwrap();
        to_float_scaled(&rgb, &mut rgb_f).unwrap();
        let mut gray_f = Image::<f32, 1>::from_size_val(size(w, h), 0.0).unwrap();
        gray_from_rgb(&rgb_f, &mut gray_f).unwrap();
        for y in 0..h {
            for x in 0..w {
                let px = |ch| at(s, w, 3, x, y, ch) as f64;
                let luma = ((299.0 * px(0) + 587.0 * px(1) + 114.0 * px(2)) / 1000.0).round() as u8;
                if at(gray.as_slice(), w, 1, x, y, 0) != luma {
                    return Err(fail("gray_from_rgb u8", x, y));
                }
                let luma_f = (0.299 * px(0) + 0.587 * px(1) + 0.114 * px(2)) / 255.0;
                let d = (at(gray_f.as_slice(), w, 1, x, y, 0) as f64 - luma_f).abs();
                worst_f32 = worst_f32.max(d);
                if d > GRAY_F32_TOLERANCE {
                    return Err(fail("gray_from_rgb f32", x, y));
                }
                for ch in 0..3 {
                    if at(fh.as_slice(), w, 3, x, y, ch) != at(s, w, 3, w - 1 - x, y, ch)
                        || at(fv.as_slice(), w, 3, x, y, ch) != at(s, w, 3, x, h - 1 - y, ch)
                    {
                        return Err(fail("flip", x, y));
                    }
                    let scaled = (at(rgb_f.as_slice(), w, 3, x, y, ch) as f64 - px(ch) / 255.0).abs();
                    if scaled > F32_TOLERANCE {
                        return Err(fail("to_float_scaled", x, y));
                    }
                }
            }
        }

        let mut near = Image::<u8, 3>::from_size_val(size(dw, dh), 0).unwrap();
        resize_nearest(&rgb, &mut near).unwrap();
        for y in 0..dh {
            let sy = nearest_oracle(y, h, dh);
            for x in 0..dw {
                let sx = nearest_oracle(x, w, dw);
                for ch in 0..3 {
                    if at(near.as_slice(), dw, 3, x, y, ch) != at(s, w, 3, sx, sy, ch) {
                        return Err(fail("resize_nearest", x, y));
                    }
                }
            }
        }

        let src_f = random_f32::<2>(&mut rng, w, h);
        let mut bil = Image::<f32, 2>::from_size_val(size(dw, dh), 0.0).unwrap();
        resize_bilinear(&src_f, &mut bil).unwrap();
        for y in 0..dh {
            for x in 0..dw {
                for ch in 0..2 {
                    let d = (at(bil.as_slice(), dw, 2, x, y, ch) as f64
                        - bilinear_oracle(src_f.as_slice(), w, h, 2, dw, dh, x, y, ch))
                        .abs();
                    worst_f32 = worst_f32.max(d);
                    if d > F32_TOLERANCE {
                        return Err(fail("resize_bilinear", x, y));
                    }
                }
            }
        }

        let mut edges = Image::<f32, 2>::from_size_val(size(w, h), 0.0).unwrap();
        sobel(&src_f, &mut edges, 3).unwrap();
        for y in 0..h {
            for x in 0..w {
                for ch in 0..2 {
                    let d = (at(edges.as_slice(), w, 2, x, y, ch) as f64
                        - sobel_oracle(src_f.as_slice(), w, h, 2, x, y, ch))
                        .abs();
                    worst_f32 = worst_f32.max(d);
                    if d > F32_TOLERANCE {
                        return Err(fail("sobel", x, y));
                    }
                }
            }
        }
    }
    Ok(format!(
        "100 images ({pixels} source pixels): u8 paths exact, worst f32 |Δ| = {worst_f32:.2e}"
    ))
}

fn involutions() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let (w, h) = (rng.random_range(1..=64), rng.random_range(1..=64));
        let fail = |what: &str| format!("case {case} ({w}x{h}): {what}");
        let img = random_u8::<3>(&mut rng, w, h);
        let mut a = Image::<u8, 3>::from_size_val(size(w, h), 0).unwrap();
        let mut b = a.clone();
        flip_horizontal(&img, &mut a).unwrap();
        flip_horizontal(&a, &mut b).unwrap();
        ensure(b == img, || fail("flip_horizontal twice"))?;
        flip_vertical(&img, &mut a).unwrap();
        flip_vertical(&a, &mut b).unwrap();
        ensure(b == img, || fail("flip_vertical twice"))?;
        resize_nearest(&img, &mut a).unwrap();
        ensure(a == img, || fail("same-size resize_nearest"))?;

        let f = random_f32::<3>(&mut rng, w, h);
        let mut g = Image::<f32, 3>::from_size_val(size(w, h), -1.0).unwrap();
        resize_bilinear(&f, &mut g).unwrap();
        let worst = f.as_slice().iter().zip(g.as_slice()).map(|(p, q)| (p - q).abs()).fold(0.0f32, f32::max);
        ensure(worst <= IDENTITY_TOLERANCE, || fail(&format!("same-size resize_bilinear |Δ| = {worst}")))?;

        let crop = img.crop_view(0, 0, w, h).unwrap().to_image().unwrap();
        ensure(crop == img, || fail("full-frame crop"))?;

        let flat = img.tensor().clone().reshape([w * h * 3]).unwrap();
        let back = flat.reshape([h, w, 3]).unwrap();
        ensure(back.as_slice() == img.as_slice() && back.shape() == [h, w, 3], || fail("reshape round trip"))?;
    }
    Ok("1000 cases: flips, same-size resizes, full crop, reshape".into())
}

// ---------------------------------------------------------------- codecs

fn png_lossless() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bytes_total = 0usize;
    for case in 0..200 {
        let (w, h) = match case {
            0 => (1, 1),
            1 => (512, 512),
            _ => (rng.random_range(1..=512), rng.random_range(1..=512)),
        };
        let channels = [1, 3, 4][case % 3];
        let ok = match channels {
            1 => roundtrip::<1>(&mut rng, w, h, &mut bytes_total),
            3 => roundtrip::<3>(&mut rng, w, h, &mut bytes_total),
            _ => roundtrip::<4>(&mut rng, w, h, &mut bytes_total),
        };
        ensure(ok?, || format!("case {case}: {w}x{h}x{channels} differs after round trip"))?;
    }
    Ok(format!("200 images, C in {{1,3,4}}, {bytes_total} encoded bytes, all identical"))
}

fn roundtrip<const C: usize>(rng: &mut ChaCha8Rng, w: usize, h: usize, total: &mut usize) -> Result<bool, String> {
    let img = random_u8::<C>(rng, w, h);
    let bytes = encode_png(&img).map_err(|e| e.to_string())?;
    *total += bytes.len();
    let back = decode_png(&bytes).map_err(|e| e.to_string())?;
    Ok(back.into_u8::<C>().map_err(|e| e.to_string())? == img)
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn max_abs_diff(a: &[u8], b: &[u8]) -> u8 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0)
}

fn jpeg_fidelity() -> Check {
    let corpus = [
        "astronaut_q90_420",
        "astronaut_q95_444",
        "astronaut_q75_422",
        "astronaut_q85_440_rst",
        "astronaut_q85_411",
        "astronaut_gray_q85",
        "gradient_q90_420_131x97",
    ];
    let mut worst_decode = 0;
    for name in corpus {
        let read = |ext: &str| std::fs::read(fixture_dir().join(format!("{name}{ext}"))).map_err(|e| format!("{name}{ext}: {e}"));
        let ours = decode_jpeg(&read(".jpg")?).map_err(|e| format!("{name}: {e}"))?;
        let reference = decode_png(&read(".ref.png")?).map_err(|e| format!("{name}: {e}"))?;
        ensure(ours.size() == reference.size() && ours.channels() == reference.channels(), || {
            format!("{name}: layout differs from reference")
        })?;
        let d = max_abs_diff(ours.as_u8_slice().unwrap(), reference.as_u8_slice().unwrap());
        worst_decode = worst_decode.max(d);
        ensure(d <= JPEG_DECODE_TOLERANCE, || format!("{name}: |Δ| = {d}"))?;
    }

    let mut worst_roundtrip = 0;
    for (w, h) in [(256, 256), (131, 97), (640, 48)] {
        let mut rgb = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                rgb.extend([(x * 255 / (w - 1)) as u8, (y * 255 / (h - 1)) as u8, ((x + y) * 255 / (w + h - 2)) as u8]);
            }
        }
        let img = Image::<u8, 3>::from_size_slice(size(w, h), &rgb).unwrap();
        let back = decode_jpeg(&encode_jpeg(&img, 95).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let d = max_abs_diff(back.as_u8_slice().unwrap(), &rgb);
        let luma: Vec<u8> = rgb.chunks(3).map(|p| p[0] / 2 + p[1] / 2).collect();
        let gray = Image::<u8, 1>::from_size_slice(size(w, h), &luma).unwrap();
        let back = decode_jpeg(&encode_jpeg(&gray, 95).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let dg = max_abs_diff(back.as_u8_slice().unwrap(), &luma);
        worst_roundtrip = worst_roundtrip.max(d).max(dg);
        ensure(d.max(dg) <= JPEG_ROUNDTRIP_TOLERANCE, || format!("{w}x{h}: round trip |Δ| rgb {d} gray {dg}"))?;
    }
    Ok(format!(
        "decode vs reference max |Δ| = {worst_decode} (≤ {JPEG_DECODE_TOLERANCE}) on {} fixtures; q95 round trip max |Δ| = {worst_roundtrip} (≤ {JPEG_ROUNDTRIP_TOLERANCE})",
        corpus.len()
    ))
}

// ---------------------------------------------------------------- registration

fn kdtree_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ties = 0usize;
    for set in 0..1000 {
        let n = rng.random_range(1..=2000);
        // every third set lives on a coarse lattice so duplicates and exact ties occur
        let lattice = set % 3 == 0;
        let coord = |rng: &mut ChaCha8Rng| {
            let v: f64 = rng.random_range(-10.0..10.0);
            if lattice { v.round() } else { v }
        };
        let points: Vec<[f64; 3]> = (0..n).map(|_| [coord(&mut rng), coord(&mut rng), coord(&mut rng)]).collect();
        let tree = KdTree3::build(&points).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let q = if lattice {
                [coord(&mut rng) + 0.5, coord(&mut rng), coord(&mut rng) + 0.5]
            } else {
                [coord(&mut rng) * 1.2, coord(&mut rng) * 1.2, coord(&mut rng) * 1.2]
            };
            let mut best = (usize::MAX, f64::INFINITY);
            let mut count_at_best = 0;
            for (i, p) in points.iter().enumerate() {
                let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                if d < best.1 {
                    best = (i, d);
                    count_at_best = 1;
                } else if d == best.1 {
                    count_at_best += 1;
                }
            }
            if count_at_best > 1 {
                ties += 1;
            }
            let (idx, d) = tree.nearest(&q);
            ensure(idx == best.0 && d == best.1, || {
                format!("set {set} (n = {n}), query {q:?}: tree ({idx}, {d}) vs scan {best:?}")
            })?;
        }
    }
    Ok(format!("100000 queries over 1000 sets match the linear scan ({ties} with ties)"))
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    loop {
        let q = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 1e-3 && n <= 1.0 {
            return *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix();
        }
    }
}

fn svd_recovery() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_r, mut worst_t) = (0.0f64, 0.0f64);
    for case in 0..500 {
        let r0 = random_rotation(&mut rng);
        let t0 = Vector3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let source: Vec<[f64; 3]> = (0..100)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let target: Vec<[f64; 3]> = source
            .iter()
            .map(|p| {
                let q = r0 * Vector3::from(*p) + t0;
                [q.x, q.y, q.z]
            })
            .collect();
        let fit = fit_rigid_svd(&source, &target).map_err(|e| format!("case {case}: {e}"))?;
        let dr = (fit.rotation() - r0).norm();
        let dt = (fit.translation() - t0).norm();
        worst_r = worst_r.max(dr);
        worst_t = worst_t.max(dt);
        ensure(dr <= SVD_TOLERANCE && dt <= SVD_TOLERANCE, || format!("case {case}: ‖ΔR‖_F = {dr:e}, ‖Δt‖ = {dt:e}"))?;
    }
    Ok(format!("500 instances: worst ‖ΔR‖_F = {worst_r:.1e}, worst ‖Δt‖ = {worst_t:.1e}"))
}

fn result_bits(r: &ICPResult) -> Vec<u64> {
    r.transform
        .rotation()
        .iter()
        .chain(r.transform.translation().iter())
        .chain(&r.rmse_trace)
        .map(|v| v.to_bits())
        .chain([r.iterations as u64, r.converged as u64])
        .collect()
}

fn icp_recovery() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut max_iters, mut worst_rot, mut worst_trans, mut worst_rmse) = (0, 0.0f64, 0.0f64, 0.0f64);
    let mut slowest = Duration::ZERO;
    for seed in 0..20 {
        let rot_deg = rng.random_range(0.0..=10.0);
        let trans = rng.random_range(0.0..=0.1);
        let pair = synthetic_pair(1000, rot_deg, trans, seed).map_err(|e| e.to_string())?;
        let tag = format!("seed {seed} ({rot_deg:.2}°, {trans:.3}·extent)");
        let start = Instant::now();
        let result = icp_point_to_point(&pair.source, &pair.target, &ICPConfig::default(), &RigidTransform::identity())
            .map_err(|e| format!("{tag}: {e}"))?;
        slowest = slowest.max(start.elapsed());
        let again = icp_point_to_point(&pair.source, &pair.target, &ICPConfig::default(), &RigidTransform::identity())
            .map_err(|e| format!("{tag}: {e}"))?;
        ensure(result_bits(&result) == result_bits(&again), || format!("{tag}: runs differ"))?;

        let rot_err = result.transform.rotation_angle_to(&pair.truth);
        let trans_err = (result.transform.translation() - pair.truth.translation()).norm() / pair.extent;
        let rmse = result.final_rmse();
        ensure(result.converged, || format!("{tag}: not converged after {} iterations", result.iterations))?;
        ensure(result.iterations < ICP_MAX_ITERATIONS, || format!("{tag}: {} iterations", result.iterations))?;
        ensure(rot_err < ICP_ROTATION_TOLERANCE, || format!("{tag}: rotation error {rot_err:e} rad"))?;
        ensure(trans_err < ICP_TRANSLATION_FRACTION, || format!("{tag}: translation error {trans_err:e}·extent"))?;
        ensure(rmse < ICP_RMSE_TOLERANCE, || format!("{tag}: final RMSE {rmse:e}"))?;
        let slack = ICP_ROUNDOFF_SLACK * pair.extent;
        ensure(result.rmse_trace.windows(2).all(|w| w[1] <= w[0] + slack), || {
            format!("{tag}: trace increases {:?}", result.rmse_trace)
        })?;
        ensure(slowest < Duration::from_secs(5), || format!("{tag}: took {slowest:?}"))?;
        max_iters = max_iters.max(result.iterations);
        worst_rot = worst_rot.max(rot_err);
        worst_trans = worst_trans.max(trans_err);
        worst_rmse = worst_rmse.max(rmse);
    }
    Ok(format!(
        "20 clouds of 1000 points: ≤ {max_iters} iterations, rotation error ≤ {worst_rot:.1e} rad, translation error ≤ {worst_trans:.1e}·extent, RMSE ≤ {worst_rmse:.1e}, slowest run {slowest:?}, repeat runs bit-identical"
    ))
}

fn random_cloud(rng: &mut ChaCha8Rng) -> PointCloud {
    let n = rng.random_range(0..=500);
    let scale = 10f64.powi(rng.random_range(-6..=6));
    let mut v = || rng.random_range(-1.0..1.0) * scale;
    let points: Vec<[f64; 3]> = (0..n).map(|_| [v(), v(), v()]).collect();
    let colors = rng.random_bool(0.5).then(|| (0..n).map(|_| rng.random::<[u8; 3]>()).collect());
    let normals = rng
        .random_bool(0.5)
        .then(|| (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect());
    PointCloud::new(points, colors, normals).unwrap()
}

fn ply_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut worst_rel = 0.0f64;
    let bits = |v: &[[f64; 3]]| v.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
    for case in 0..100 {
        let pc = random_cloud(&mut rng);
        let bin = dir.path().join(format!("{case}.bin.ply"));
        let txt = dir.path().join(format!("{case}.txt.ply"));
        write_ply(&pc, &bin, PlyFormat::BinaryLittleEndian).map_err(|e| e.to_string())?;
        write_ply(&pc, &txt, PlyFormat::Ascii).map_err(|e| e.to_string())?;

        let back = read_ply(&bin).map_err(|e| format!("case {case}: {e}"))?;
        ensure(bits(back.points()) == bits(pc.points()), || format!("case {case}: binary points differ"))?;
        ensure(back.colors() == pc.colors(), || format!("case {case}: binary colors differ"))?;
        ensure(back.normals().map(bits) == pc.normals().map(bits), || format!("case {case}: binary normals differ"))?;

        let back = read_ply(&txt).map_err(|e| format!("case {case}: {e}"))?;
        ensure(back.colors() == pc.colors(), || format!("case {case}: ascii colors differ"))?;
        ensure(back.normals().is_some() == pc.normals().is_some(), || format!("case {case}: ascii normals missing"))?;
        let pairs = pc.points().iter().zip(back.points()).chain(pc.normals().unwrap_or(&[]).iter().zip(back.normals().unwrap_or(&[])));
        for (a, b) in pairs {
            for k in 0..3 {
                // 9 significant digits: half a unit in the 9th digit
                let rel = if a[k] == 0.0 { b[k].abs() } else { ((a[k] - b[k]) / a[k]).abs() };
                worst_rel = worst_rel.max(rel);
                ensure(rel <= 5e-9, || format!("case {case}: ascii {} read back as {}", a[k], b[k]))?;
            }
        }
    }
    Ok(format!("100 clouds: binary bit-exact, ascii worst relative error {worst_rel:.1e}"))
}

// ---------------------------------------------------------------- command line

fn bench_cli() -> Check {
    let out = Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(["--op", "gray_from_rgb", "--width", "1024", "--height", "1024", "--iters", "100", "--format", "json"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(0), || format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| format!("invalid JSON: {e}"))?;
    let reports = json.as_array().ok_or("top level is not an array")?;
    ensure(reports.len() == 1, || format!("{} reports", reports.len()))?;
    let r = reports[0].as_object().ok_or("report is not an object")?;
    let mut keys: Vec<&str> = r.keys().map(String::as_str).collect();
    keys.sort_unstable();
    let mut expected = vec![
        "op", "width", "height", "iterations", "mean_ns", "median_ns", "p95_ns", "stddev_ns",
        "throughput_megapixels_per_s", "timestamp", "build_profile",
    ];
    expected.sort_unstable();
    ensure(keys == expected, || format!("fields {keys:?}"))?;
    let num = |k: &str| r[k].as_f64().ok_or_else(|| format!("{k} is not a number"));
    ensure(r["op"] == "gray_from_rgb", || "op field".into())?;
    ensure(r["width"] == 1024 && r["height"] == 1024 && r["iterations"] == 100, || "size fields".into())?;
    ensure(r["build_profile"].is_string() && r["timestamp"].is_u64(), || "profile or timestamp".into())?;
    let (mean, median, p95, stddev) = (num("mean_ns")?, num("median_ns")?, num("p95_ns")?, num("stddev_ns")?);
    ensure(mean > 0.0 && median > 0.0 && p95 > 0.0 && stddev >= 0.0, || "non-positive timing".into())?;
    ensure(median <= p95, || format!("median {median} > p95 {p95}"))?;
    let throughput = num("throughput_megapixels_per_s")?;
    let expected_tp = 1024.0 * 1024.0 * 100.0 / (mean * 100.0 / 1e9) / 1e6;
    let rel = (throughput - expected_tp).abs() / expected_tp;
    ensure(rel < 1e-9, || format!("throughput {throughput} vs {expected_tp} from the mean"))?;
    Ok(format!("exit 0, schema valid, median {median:.0} ns ≤ p95 {p95:.0} ns, throughput {throughput:.1} MP/s (rel. error {rel:.1e})"))
}

fn icp_cli() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (src, dst, aligned) = (dir.path().join("s.ply"), dir.path().join("t.ply"), dir.path().join("a.ply"));
    let run = |args: &[&str]| -> Result<serde_json::Value, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_icp")).args(args).output().map_err(|e| e.to_string())?;
        ensure(out.status.code() == Some(0), || {
            format!("{args:?}: exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
        })?;
        serde_json::from_slice(&out.stdout).map_err(|e| format!("{args:?}: invalid JSON: {e}"))
    };
    let p = |path: &Path| path.to_str().unwrap().to_string();
    let truth = run(&[
        "make-fixture", "--n", "1000", "--rot-deg", "10", "--trans", "0.1", "--seed", "11",
        "--out-src", &p(&src), "--out-dst", &p(&dst),
    ])?;
    let result = run(&["align", "--source", &p(&src), "--target", &p(&dst), "--out", &p(&aligned)])?;

    let arr = |v: &serde_json::Value, k: &str, n: usize| -> Result<Vec<f64>, String> {
        let a: Vec<f64> = v[k].as_array().ok_or(format!("{k} missing"))?.iter().filter_map(|x| x.as_f64()).collect();
        ensure(a.len() == n, || format!("{k} has {} entries", a.len()))?;
        Ok(a)
    };
    let to_transform = |v: &serde_json::Value| -> Result<RigidTransform, String> {
        let r = arr(v, "rotation", 9)?;
        let t = arr(v, "translation", 3)?;
        RigidTransform::new(Matrix3::from_row_slice(&r), Vector3::new(t[0], t[1], t[2])).map_err(|e| e.to_string())
    };
    let (expected, got) = (to_transform(&truth)?, to_transform(&result)?);
    let extent = truth["extent"].as_f64().ok_or("extent missing")?;
    let rot_err = got.rotation_angle_to(&expected);
    let trans_err = (got.translation() - expected.translation()).norm() / extent;
    ensure(result["converged"] == true, || "not converged".into())?;
    ensure(rot_err < ICP_ROTATION_TOLERANCE, || format!("rotation error {rot_err:e}"))?;
    ensure(trans_err < ICP_TRANSLATION_FRACTION, || format!("translation error {trans_err:e}·extent"))?;
    let moved = read_ply(&aligned).map_err(|e| e.to_string())?;
    let target = read_ply(&dst).map_err(|e| e.to_string())?;
    let worst = moved
        .points()
        .iter()
        .zip(target.points())
        .map(|(a, b)| (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    ensure(worst < ICP_TRANSLATION_FRACTION * extent, || format!("aligned cloud off by {worst:e}"))?;
    Ok(format!(
        "exit 0, {} iterations, rotation error {rot_err:.1e} rad, translation error {trans_err:.1e}·extent",
        result["iterations"]
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Option<Duration>, fn() -> Check); 12] = [
        ("listing pipeline mean == 3.5", None, listing_pipeline),
        ("zero-allocation kernels", None, zero_allocation),
        ("kernel oracle equivalence", Some(Duration::from_secs(30)), kernel_oracles),
        ("involution and identity suite", Some(Duration::from_secs(10)), involutions),
        ("PNG losslessness", Some(Duration::from_secs(60)), png_lossless),
        ("JPEG fidelity", None, jpeg_fidelity),
        ("kd-tree exactness", Some(Duration::from_secs(30)), kdtree_exactness),
        ("fit_rigid_svd recovery", Some(Duration::from_secs(10)), svd_recovery),
        ("ICP recovery", None, icp_recovery),
        ("PLY round trip", Some(Duration::from_secs(30)), ply_round_trip),
        ("bench CLI contract", None, bench_cli),
        ("icp CLI end to end", None, icp_cli),
    ];
    let mut failures = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(_), Some(limit)) if elapsed >= limit => Err(format!("took {elapsed:.2?}, budget {limit:?}")),
            (o, _) => o,
        };
        let budget = budget.map(|b| format!(" / {b:?}")).unwrap_or_default();
        match outcome {
            Ok(detail) => println!("PASS  {name} [{elapsed:.2?}{budget}]: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name} [{elapsed:.2?}{budget}]: {detail}");
            }
        }
    }
    println!("{} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
