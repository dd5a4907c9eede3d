use ndarray::Array2;
use proptest::prelude::*;

use fpmp::fracgrad::{frac_grad, frac_grad_adjoint, gl_coeffs, GradPair};
use fpmp::framelet::{fpmp, framelet_analysis, framelet_synthesis, split_by_mask};
use fpmp::image::{conv2_periodic, conv2_periodic_adjoint, ImageField, Kernel};
use fpmp::metrics::{psnr, rel_change, ssim};
use fpmp::solver::{update_m, update_v, update_z, Norm};

fn plane(m: usize, n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(lo..hi, m * n).prop_map(move |v| Array2::from_shape_vec((m, n), v).unwrap())
}

fn sized_plane(lo: f64, hi: f64) -> impl Strategy<Value = Array2<f64>> {
    (4usize..12, 4usize..12).prop_flat_map(move |(m, n)| plane(m, n, lo, hi))
}

fn kernel() -> impl Strategy<Value = Kernel> {
    (1usize..4, 1usize..4)
        .prop_flat_map(|(l, s)| plane(l, s, 0.01, 1.0))
        .prop_map(|a| Kernel::normalized(a).unwrap())
}

fn direct_conv(x: &Array2<f64>, k: &Array2<f64>) -> Array2<f64> {
    let (m, n) = x.dim();
    let (l, s) = k.dim();
    Array2::from_shape_fn((m, n), |(i, j)| {
        let mut acc = 0.0;
        for a in 0..l {
            for b in 0..s {
                let si = (i as isize - a as isize + (l / 2) as isize).rem_euclid(m as isize) as usize;
                let sj = (j as isize - b as isize + (s / 2) as isize).rem_euclid(n as isize) as usize;
                acc += k[[a, b]] * x[[si, sj]];
            }
        }
        acc
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_convolution_matches_direct_sum(x in sized_plane(-1.0, 1.0), k in kernel()) {
        let out = conv2_periodic(&ImageField::gray(x.clone()), &k).unwrap();
        let oracle = direct_conv(&x, k.data());
        for (a, b) in out.plane(0).iter().zip(oracle.iter()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn convolution_adjoint_identity(x in plane(8, 9, -1.0, 1.0), y in plane(8, 9, -1.0, 1.0), k in kernel()) {
        let (x, y) = (ImageField::gray(x), ImageField::gray(y));
        let lhs = conv2_periodic(&x, &k).unwrap().dot(&y);
        let rhs = x.dot(&conv2_periodic_adjoint(&y, &k).unwrap());
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn convolution_is_linear(x in plane(6, 7, -1.0, 1.0), y in plane(6, 7, -1.0, 1.0), a in -3.0..3.0f64, k in kernel()) {
        let (x, y) = (ImageField::gray(x), ImageField::gray(y));
        let lhs = conv2_periodic(&(&(&x * a) + &y), &k).unwrap();
        let rhs = &(&conv2_periodic(&x, &k).unwrap() * a) + &conv2_periodic(&y, &k).unwrap();
        for (p, q) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn framelet_is_tight(x in sized_plane(-10.0, 10.0)) {
        let img = ImageField::gray(x);
        let c = framelet_analysis(&img);
        let back = framelet_synthesis(&c).unwrap();
        for (a, b) in back.iter().zip(img.iter()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let e = img.dot(&img);
        prop_assert!((c.energy() - e).abs() <= 1e-10 * e.max(1.0));
    }

    #[test]
    fn mask_split_is_exact(x in plane(9, 10, 0.0, 5.0), r in 1usize..5) {
        let img = ImageField::gray(x);
        let (_, mask) = fpmp(&img, r).unwrap();
        let (p, q) = split_by_mask(&img, &mask).unwrap();
        for ((a, b), c) in p.iter().zip(q.iter()).zip(img.iter()) {
            prop_assert!((a + b - c).abs() < 1e-10);
        }
    }

    #[test]
    fn fractional_gradient_adjoint(x in plane(10, 11, -1.0, 1.0), h in plane(10, 11, -1.0, 1.0),
                                   v in plane(10, 11, -1.0, 1.0), alpha in 0.05..1.5f64, len in 1usize..10) {
        let c = gl_coeffs(alpha, len).unwrap();
        let x = ImageField::gray(x);
        let g = GradPair { h: ImageField::gray(h), v: ImageField::gray(v) };
        let lhs = frac_grad(&x, &c).unwrap().dot(&g);
        let rhs = x.dot(&frac_grad_adjoint(&g, &c).unwrap());
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn v_update_is_stationary(kx in 0.0..300.0f64, p1 in -20.0..20.0f64, y in 0.1..300.0f64,
                              mu in 1.0..300.0f64, gamma in 1e-4..1.0f64) {
        let one = |v| ImageField::filled(1, 1, 1, v);
        let v = update_v(&one(kx), &one(p1), &one(y), mu, gamma).plane(0)[[0, 0]];
        prop_assert!(v > 0.0);
        let r = mu * (1.0 - y / v) + gamma * (v - kx) - p1;
        prop_assert!(r.abs() < 1e-8);
    }

    #[test]
    fn z_update_is_prox(w in -10.0..10.0f64, beta in 0.01..5.0f64, t in -10.0..10.0f64) {
        let g = GradPair { h: ImageField::filled(1, 1, 1, w), v: ImageField::filled(1, 1, 1, w) };
        let zero = GradPair::zeros_like(&g.h);
        let l1 = update_z(&g, &zero, beta, Norm::L1).h.plane(0)[[0, 0]];
        let f1 = |z: f64| z.abs() + beta / 2.0 * (w - z).powi(2);
        prop_assert!(f1(l1) <= f1(t) + 1e-12);
        let l0 = update_z(&g, &zero, beta, Norm::L0).h.plane(0)[[0, 0]];
        let f0 = |z: f64| if z != 0.0 { 1.0 } else { 0.0 } + beta / 2.0 * (w - z).powi(2);
        prop_assert!(f0(l0) <= f0(t) + 1e-12);
        prop_assert!(f0(l0) <= f0(w) + 1e-12 && f0(l0) <= f0(0.0) + 1e-12);
    }

    #[test]
    fn m_update_is_nonnegative(x in plane(5, 5, -10.0, 10.0), p in plane(5, 5, -10.0, 10.0), eta in 0.25..4.0f64) {
        let m = update_m(&ImageField::gray(x), &ImageField::gray(p), eta);
        prop_assert!(m.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn metrics_symmetry(a in plane(6, 6, 0.0, 255.0), b in plane(6, 6, 0.0, 255.0)) {
        let (a, b) = (ImageField::gray(a), ImageField::gray(b));
        prop_assert_eq!(psnr(&a, &b, 255.0).unwrap(), psnr(&b, &a, 255.0).unwrap());
        let (s1, s2) = (ssim(&a, &b, 255.0).unwrap(), ssim(&b, &a, 255.0).unwrap());
        prop_assert!((s1 - s2).abs() < 1e-14);
        prop_assert!(s1 <= 1.0 + 1e-12);
    }

    #[test]
    fn rel_change_scale_invariant(a in plane(5, 6, -5.0, 5.0), b in plane(5, 6, 0.5, 5.0), c in 0.01..100.0f64) {
        let (a, b) = (ImageField::gray(a), ImageField::gray(b));
        let base = rel_change(&a, &b).unwrap();
        let scaled = rel_change(&(&a * c), &(&b * c)).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-12 * base.max(1.0));
    }
}
