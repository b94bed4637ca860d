//! Second-order statistics of the noise paths.

use css_core::baseband::{add_awgn, complex_gaussian, energy};
use css_core::sampling::{build_operator, build_prewhitener, OperatorKind};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sample covariance `E[v v^H]` of the vectors produced by `draw`.
fn covariance(m: usize, trials: usize, mut draw: impl FnMut() -> Vec<Complex64>) -> Vec<Complex64> {
    let mut c = vec![Complex64::default(); m * m];
    for _ in 0..trials {
        let v = draw();
        for i in 0..m {
            for j in 0..m {
                c[i * m + j] += v[i] * v[j].conj();
            }
        }
    }
    c.iter().map(|x| x / trials as f64).collect()
}

#[test]
fn prewhitened_rademacher_noise_is_white() {
    let (n, kappa, sigma2, trials) = (63, 2, 0.7, 20_000);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let op = build_operator(OperatorKind::Rademacher, n, kappa, &mut rng).unwrap();
    let p = build_prewhitener(&op).unwrap().expect("rademacher needs prewhitening");
    let m = op.rows();

    let raw = covariance(m, trials, || op.apply(&complex_gaussian(&mut rng, n, sigma2)).unwrap());
    let diag_raw: f64 = (0..m).map(|i| raw[i * m + i].re).sum::<f64>() / m as f64;
    let off_raw = (0..m * m).filter(|k| k / m != k % m).map(|k| raw[k].norm()).fold(0.0, f64::max);
    assert!(off_raw > 0.1 * diag_raw, "raw noise should be coloured");

    let white = covariance(m, trials, || p.apply(&op.apply(&complex_gaussian(&mut rng, n, sigma2)).unwrap()));
    let diag: f64 = (0..m).map(|i| white[i * m + i].re).sum::<f64>() / m as f64;
    assert!((diag / sigma2 - 1.0).abs() < 0.05, "diagonal {diag} vs {sigma2}");
    for i in 0..m {
        assert!((white[i * m + i].re / sigma2 - 1.0).abs() < 0.05, "entry {i}: {}", white[i * m + i].re);
        for j in 0..m {
            if i != j {
                assert!(white[i * m + j].norm() < 0.05 * sigma2, "({i},{j}) = {}", white[i * m + j]);
            }
        }
    }
}

#[test]
fn awgn_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<Complex64> = (0..200_000).map(|k| Complex64::new((k % 3) as f64 - 1.0, 1.0)).collect();
    let obs = add_awgn(&x, -6.0, &mut rng);
    let expect = energy(&x) / (x.len() as f64 * 10f64.powf(-0.6));
    assert!((obs.sigma2 / expect - 1.0).abs() < 1e-12);

    let w: Vec<Complex64> = obs.y.iter().zip(&x).map(|(y, s)| y - s).collect();
    let n = w.len() as f64;
    let mean = w.iter().sum::<Complex64>() / n;
    let re2 = w.iter().map(|v| v.re * v.re).sum::<f64>() / n;
    let im2 = w.iter().map(|v| v.im * v.im).sum::<f64>() / n;
    let cross = w.iter().map(|v| v.re * v.im).sum::<f64>() / n;
    let tol = 4.0 * (obs.sigma2 / n).sqrt();
    assert!(mean.norm() < tol, "mean {mean}");
    assert!(((re2 + im2) / obs.sigma2 - 1.0).abs() < 0.01);
    assert!((re2 - im2).abs() / obs.sigma2 < 0.02, "{re2} vs {im2}");
    assert!(cross.abs() / obs.sigma2 < 0.01);
    let realized_db = 10.0 * obs.snr.log10();
    assert!((realized_db + 6.0).abs() < 0.05, "{realized_db}");
}
