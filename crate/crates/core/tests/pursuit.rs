//! Subspace pursuit against an exhaustive support search, plus residual
//! invariants over random problems.

use css_core::pursuit::{subspace_pursuit, DenseMatrix, PursuitOptions, PursuitProblem, SensingMatrix};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DenseMatrix {
    let scale = 1.0 / (m as f64).sqrt();
    DenseMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal) * scale)
}

fn residual(a: &DenseMatrix, y: &[Complex64], alpha: &[Complex64]) -> Vec<Complex64> {
    let fit = a.mul_vec(alpha);
    y.iter().zip(&fit).map(|(u, v)| u - v).collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Least-squares residual norm of `y` on the columns in `support`, by the
/// normal equations (tiny systems only).
fn subset_residual(a: &DenseMatrix, y: &[Complex64], support: &[usize]) -> f64 {
    let k = support.len();
    let mut g = vec![0.0; k * k];
    let mut b = vec![Complex64::default(); k];
    for (p, &i) in support.iter().enumerate() {
        for (q, &j) in support.iter().enumerate() {
            g[p * k + q] = a.column(i).iter().zip(a.column(j)).map(|(u, v)| u * v).sum();
        }
        b[p] = a.column(i).iter().zip(y).map(|(u, v)| v * *u).sum();
    }
    // Gaussian elimination, no pivoting needed for a positive definite Gram.
    for c in 0..k {
        for r in c + 1..k {
            let f = g[r * k + c] / g[c * k + c];
            for q in c..k {
                g[r * k + q] -= f * g[c * k + q];
            }
            let bc = b[c];
            b[r] -= bc * f;
        }
    }
    let mut x = vec![Complex64::default(); k];
    for c in (0..k).rev() {
        let mut acc = b[c];
        for q in c + 1..k {
            acc -= x[q] * g[c * k + q];
        }
        x[c] = acc / g[c * k + c];
    }
    let mut alpha = vec![Complex64::default(); a.cols()];
    for (p, &j) in support.iter().enumerate() {
        alpha[j] = x[p];
    }
    norm(&residual(a, y, &alpha))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for mut rest in subsets(n, k - 1) {
            if rest.first().is_none_or(|&r| r > first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
    }
    out
}

fn random_problem(seed: u64, m: usize, n: usize, s: usize, noise: f64) -> (DenseMatrix, Vec<usize>, Vec<Complex64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(&mut rng, m, n);
    let mut support: Vec<usize> = rand::seq::index::sample(&mut rng, n, s).into_vec();
    support.sort_unstable();
    let mut alpha = vec![Complex64::default(); n];
    for &j in &support {
        let re = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let im = if rng.random::<bool>() { 1.0 } else { -1.0 };
        alpha[j] = Complex64::new(re, im);
    }
    let mut y = a.mul_vec(&alpha);
    for v in &mut y {
        *v += Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * noise;
    }
    (a, support, y)
}

#[test]
fn support_matches_exhaustive_search_when_residuals_agree() {
    let (m, n, s) = (4, 8, 2);
    let mut agreed = 0;
    for seed in 0..40 {
        let noise = if seed % 2 == 0 { 0.0 } else { 0.05 };
        let (a, _, y) = random_problem(seed, m, n, s, noise);
        let (best, support) = subsets(n, s)
            .into_iter()
            .map(|t| (subset_residual(&a, &y, &t), t))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap();
        let out = subspace_pursuit(&PursuitProblem { a: &a, y: &y, sparsity: s }, &PursuitOptions::default()).unwrap();
        let got = norm(&residual(&a, &y, &out.alpha_hat));
        if (got - best).abs() <= 1e-9 * norm(&y) {
            assert_eq!(out.support, support, "seed {seed}");
            agreed += 1;
        }
    }
    assert!(agreed >= 10, "pursuit reached the optimum in only {agreed} of 40 problems");
}

#[test]
fn never_beats_the_exhaustive_optimum() {
    let (m, n, s) = (8, 14, 3);
    for seed in 100..130 {
        let (a, _, y) = random_problem(seed, m, n, s, 0.3);
        let best = subsets(n, s)
            .iter()
            .map(|t| subset_residual(&a, &y, t))
            .fold(f64::INFINITY, f64::min);
        let out = subspace_pursuit(&PursuitProblem { a: &a, y: &y, sparsity: s }, &PursuitOptions::default()).unwrap();
        let got = norm(&residual(&a, &y, &out.alpha_hat));
        assert!(got >= best - 1e-9, "seed {seed}: {got} < {best}");
        assert!((got - subset_residual(&a, &y, &out.support)).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residuals_fall_and_end_orthogonal(
        seed in any::<u64>(),
        m in 12usize..40,
        extra in 4usize..40,
        s_frac in 0.05f64..0.4,
        noise in prop_oneof![Just(0.0), 0.01f64..1.0],
    ) {
        let n = m + extra;
        let s = ((s_frac * m as f64) as usize).max(1);
        let (a, _, y) = random_problem(seed, m, n, s, noise);
        let out = subspace_pursuit(&PursuitProblem { a: &a, y: &y, sparsity: s }, &PursuitOptions::default()).unwrap();

        prop_assert_eq!(out.support.len(), s);
        prop_assert!(out.support.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(!out.residual_norms.is_empty() && out.residual_norms.len() <= out.iterations + 1);
        for w in out.residual_norms.windows(2) {
            prop_assert!(w[1] < w[0], "residual rose: {:?}", out.residual_norms);
        }
        prop_assert!(out.iterations <= PursuitOptions::default().iteration_cap(s));

        let r = residual(&a, &y, &out.alpha_hat);
        let back = a.correlate(&r);
        let scale = norm(&y).max(1e-12);
        for &j in &out.support {
            prop_assert!(back[j].norm() <= 1e-8 * scale, "column {} not orthogonal: {}", j, back[j]);
        }
        for (j, v) in out.alpha_hat.iter().enumerate() {
            if out.support.binary_search(&j).is_err() {
                prop_assert_eq!(*v, Complex64::default());
            }
        }
    }
}
