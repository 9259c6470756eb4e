//! GP posterior, kernel derivatives and factorization checked against
//! finite differences and dense nalgebra reference computations.

use approx::assert_abs_diff_eq;
use gibo_core::gp::{
    posterior_jacobian, posterior_value, se_kernel, se_kernel_grad1, se_kernel_hess12, CholeskyFactor, Dataset,
    KernelParams,
};
use gibo_core::rng::seeded;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn k_ref(a: &[f64], b: &[f64], p: &KernelParams) -> f64 {
    let r2: f64 = a.iter().zip(b).zip(&p.lengthscales).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
    p.signal_variance * (-0.5 * r2).exp()
}

/// Posterior covariance between two query points via a dense inverse.
fn post_cov(x: &[f64], y: &[f64], pts: &[Vec<f64>], p: &KernelParams) -> f64 {
    let n = pts.len();
    let k = DMatrix::from_fn(n, n, |i, j| k_ref(&pts[i], &pts[j], p) + if i == j { p.noise_variance } else { 0.0 });
    let kx = DVector::from_fn(n, |i, _| k_ref(&pts[i], x, p));
    let ky = DVector::from_fn(n, |i, _| k_ref(&pts[i], y, p));
    let sol = k.cholesky().unwrap().solve(&ky);
    k_ref(x, y, p) - kx.dot(&sol)
}

fn random_case(rng: &mut impl Rng, d: usize, n: usize) -> (Dataset, KernelParams) {
    let ls: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..1.2)).collect();
    let params = KernelParams::new(ls, rng.random_range(0.5..2.0), rng.random_range(0.01..0.1)).unwrap();
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (Dataset::from_parts(pts, ys).unwrap(), params)
}

#[test]
fn kernel_gradient_and_mixed_hessian_match_finite_differences() {
    let mut rng = seeded(11);
    let h = 1e-5;
    for _ in 0..20 {
        let d = rng.random_range(1..=4);
        let p = KernelParams::new((0..d).map(|_| rng.random_range(0.2..1.5)).collect(), 1.3, 0.0).unwrap();
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        assert_abs_diff_eq!(se_kernel(&a, &b, &p).unwrap(), k_ref(&a, &b, &p), epsilon = 1e-14);
        let g = se_kernel_grad1(&a, &b, &p).unwrap();
        let hm = se_kernel_hess12(&a, &b, &p).unwrap();
        for i in 0..d {
            let (mut ap, mut am) = (a.clone(), a.clone());
            ap[i] += h;
            am[i] -= h;
            let fd = (k_ref(&ap, &b, &p) - k_ref(&am, &b, &p)) / (2.0 * h);
            assert_abs_diff_eq!(g[i], fd, epsilon = 1e-8);
            for j in 0..d {
                let (mut bp, mut bm) = (b.clone(), b.clone());
                bp[j] += h;
                bm[j] -= h;
                let gp = se_kernel_grad1(&a, &bp, &p).unwrap();
                let gm = se_kernel_grad1(&a, &bm, &p).unwrap();
                assert_abs_diff_eq!(hm[(i, j)], (gp[i] - gm[i]) / (2.0 * h), epsilon = 1e-7);
            }
        }
    }
}

#[test]
fn value_posterior_matches_dense_solve() {
    let mut rng = seeded(3);
    for _ in 0..20 {
        let d = rng.random_range(1..=5);
        let n = rng.random_range(1..=20);
        let (ds, p) = random_case(&mut rng, d, n);
        let q: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        let k = DMatrix::from_fn(n, n, |i, j| {
            k_ref(&ds.points()[i], &ds.points()[j], &p) + if i == j { p.noise_variance } else { 0.0 }
        });
        let alpha = k.cholesky().unwrap().solve(&DVector::from_column_slice(ds.targets()));
        let kq = DVector::from_fn(n, |i, _| k_ref(&ds.points()[i], &q, &p));
        let post = posterior_value(&q, &ds, &p).unwrap();
        assert_abs_diff_eq!(post.mean, kq.dot(&alpha), epsilon = 1e-10);
        assert_abs_diff_eq!(post.variance, post_cov(&q, &q, ds.points(), &p), epsilon = 1e-10);
    }
}

#[test]
fn jacobian_posterior_matches_finite_differences() {
    let mut rng = seeded(5);
    let h = 1e-4;
    for case in 0..50 {
        let d = [1, 2, 5][case % 3];
        let n = rng.random_range(1..=20);
        let (ds, p) = random_case(&mut rng, d, n);
        let q: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        let jac = posterior_jacobian(&q, &ds, &p).unwrap();
        let shift = |i: usize, s: f64| {
            let mut v = q.clone();
            v[i] += s;
            v
        };
        for i in 0..d {
            let fd = (posterior_value(&shift(i, h), &ds, &p).unwrap().mean
                - posterior_value(&shift(i, -h), &ds, &p).unwrap().mean)
                / (2.0 * h);
            assert!((jac.mean[i] - fd).abs() < 1e-4, "mean[{i}]: {} vs {fd}", jac.mean[i]);
            for j in 0..d {
                let c = |si: f64, sj: f64| post_cov(&shift(i, si), &shift(j, sj), ds.points(), &p);
                let fd = (c(h, h) - c(h, -h) - c(-h, h) + c(-h, -h)) / (4.0 * h * h);
                assert!((jac.covariance[(i, j)] - fd).abs() < 1e-3, "cov[{i},{j}]: {} vs {fd}", jac.covariance[(i, j)]);
            }
        }
    }
}

#[test]
fn incremental_cholesky_matches_batch_factor() {
    let mut rng = seeded(9);
    let p = KernelParams::isotropic(3, 0.4, 1.0, 0.01).unwrap();
    let pts: Vec<Vec<f64>> = (0..50).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let mut inc = CholeskyFactor::empty();
    for (i, x) in pts.iter().enumerate() {
        let cross: Vec<f64> = pts[..i].iter().map(|y| k_ref(y, x, &p)).collect();
        inc.push(&cross, k_ref(x, x, &p) + p.noise_variance).unwrap();
    }
    let full = DMatrix::from_fn(50, 50, |i, j| k_ref(&pts[i], &pts[j], &p) + if i == j { 0.01 } else { 0.0 });
    let batch = full.clone().cholesky().unwrap().l();
    let diff = (inc.to_matrix() - &batch).abs().max();
    assert!(diff < 1e-10, "max abs diff {diff}");
    let own = CholeskyFactor::factorize(&full).unwrap();
    assert!((own.to_matrix() - batch).abs().max() < 1e-10);
}

#[test]
fn cholesky_rejects_indefinite_append() {
    let mut f = CholeskyFactor::factorize(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0])).unwrap();
    assert!(f.push(&[1.0, 1.0], 1.0).is_err());
    assert_eq!(f.len(), 2);
}
