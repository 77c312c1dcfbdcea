//! Independent oracles: Monte-Carlo expectations, adaptive quadrature,
//! finite differences and brute-force ranking metrics.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Gamma};

use vacuity_core::dirichlet::DirichletState;
use vacuity_core::forge::{generate_toy_classification, LabeledPoint};
use vacuity_core::losses::{
    edl_mse_loss, kl_to_uniform, loss_gradient, one_hot, total_loss, Example, Mode, Objective,
    Phase, ToyModelParams,
};
use vacuity_core::metrics::{aupr, aupr_reference, auroc, auroc_bruteforce, ScoredSample};

fn sample_dirichlet(rng: &mut StdRng, alpha: &[f64]) -> Vec<f64> {
    let g: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).unwrap().sample(rng))
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

/// Mean and standard error of `f(p)` for `p ~ Dir(alpha)`.
fn mc_expectation(
    rng: &mut StdRng,
    alpha: &[f64],
    n: usize,
    f: impl Fn(&[f64]) -> f64,
) -> (f64, f64) {
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..n {
        let v = f(&sample_dirichlet(rng, alpha));
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / n as f64;
    let var = (sum2 / n as f64 - mean * mean).max(0.0) * n as f64 / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

fn squared_error(y: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |p| y.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `ln Dir(p | alpha) - ln Dir(p | 1)` using libm's lgamma.
fn log_density_ratio(alpha: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |p| {
        let s: f64 = alpha.iter().sum();
        let mut v = libm::lgamma(s) - libm::lgamma(alpha.len() as f64);
        for (&a, &pi) in alpha.iter().zip(p) {
            v += -libm::lgamma(a) + (a - 1.0) * pi.ln();
        }
        v
    }
}

#[test]
fn mse_matches_monte_carlo_examples() {
    let mut rng = StdRng::seed_from_u64(11);
    for (alpha, expected) in [([1.0, 1.0], 2.0 / 3.0), ([3.0, 1.0], 0.2)] {
        let y = one_hot(0, 2);
        let (mean, se) = mc_expectation(&mut rng, &alpha, 100_000, squared_error(&y));
        let analytic =
            edl_mse_loss(&DirichletState::from_alpha(alpha.to_vec()).unwrap(), &y).unwrap();
        assert!((analytic - expected).abs() < 1e-15);
        assert!(
            (mean - analytic).abs() < 3.0 * se,
            "alpha {alpha:?}: mc {mean} +- {se}, analytic {analytic}"
        );
    }
}

#[test]
fn kl_two_one_matches_monte_carlo() {
    let mut rng = StdRng::seed_from_u64(12);
    let alpha = [2.0, 1.0];
    let (mean, se) = mc_expectation(&mut rng, &alpha, 1_000_000, log_density_ratio(&alpha));
    let kl = kl_to_uniform(&alpha).unwrap();
    assert!((kl - (std::f64::consts::LN_2 - 0.5)).abs() < 1e-9);
    assert!((mean - kl).abs() < 3.0 * se, "mc {mean} +- {se} vs {kl}");
}

/// Adaptive Simpson on `[a, b]`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 40)
}

#[test]
fn kl_two_two_two_matches_simplex_quadrature() {
    // Dir(2,2,2) density 120 p1 p2 p3; Dir(1,1,1) density 2.
    let integrand = |p1: f64, p2: f64| {
        let p3 = 1.0 - p1 - p2;
        if p1 <= 0.0 || p2 <= 0.0 || p3 <= 0.0 {
            return 0.0;
        }
        let f = 120.0 * p1 * p2 * p3;
        f * (f / 2.0).ln()
    };
    let outer = |p1: f64| adaptive_simpson(&|p2| integrand(p1, p2), 0.0, 1.0 - p1, 1e-12);
    let quad = adaptive_simpson(&outer, 0.0, 1.0, 1e-11);
    let kl = kl_to_uniform(&[2.0, 2.0, 2.0]).unwrap();
    assert!(
        (quad - kl).abs() < 1e-8,
        "quadrature {quad} vs closed form {kl}"
    );
}

#[test]
fn mse_matches_monte_carlo_random_states() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..20 {
        let k = rng.random_range(2..=8);
        let alpha: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..50.0)).collect();
        let y = one_hot(rng.random_range(0..k), k);
        let analytic =
            edl_mse_loss(&DirichletState::from_alpha(alpha.clone()).unwrap(), &y).unwrap();
        let (mean, se) = mc_expectation(&mut rng, &alpha, 100_000, squared_error(&y));
        assert!(
            (mean - analytic).abs() < 3.0 * se,
            "alpha {alpha:?}: {mean} +- {se} vs {analytic}"
        );
    }
}

#[test]
fn kl_matches_monte_carlo_random_states() {
    let mut rng = StdRng::seed_from_u64(14);
    for _ in 0..5 {
        let k = rng.random_range(2..=5);
        let alpha: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..6.0)).collect();
        let kl = kl_to_uniform(&alpha).unwrap();
        let (mean, se) = mc_expectation(&mut rng, &alpha, 200_000, log_density_ratio(&alpha));
        assert!(
            (mean - kl).abs() < 3.0 * se,
            "alpha {alpha:?}: {mean} +- {se} vs {kl}"
        );
    }
}

pub fn random_problem(rng: &mut StdRng, mode: Mode) -> (ToyModelParams, Vec<Example>, Objective) {
    let k = rng.random_range(2..=5);
    let dim = rng.random_range(1..=4);
    let mut params = ToyModelParams::zeros(mode, k, dim);
    let flat: Vec<f64> = params
        .to_flat()
        .iter()
        .map(|_| rng.random_range(-1.5..1.5))
        .collect();
    params.set_flat(&flat);
    let n = rng.random_range(1..=5);
    let batch = (0..n)
        .map(|_| Example {
            features: (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect(),
            label: rng.random_range(0..k),
        })
        .collect();
    let obj = Objective {
        lambda: rng.random_range(0.0..2.0),
        beta: rng.random_range(0.0..2.0),
        seed: rng.random(),
        phase: Phase::Train,
    };
    (params, batch, obj)
}

/// Central differences with step `h` on every flattened parameter.
fn finite_difference(
    params: &ToyModelParams,
    batch: &[Example],
    obj: &Objective,
    h: f64,
) -> Vec<f64> {
    let base = params.to_flat();
    (0..base.len())
        .map(|i| {
            let mut p = params.clone();
            let mut v = base.clone();
            v[i] = base[i] + h;
            p.set_flat(&v);
            let up = total_loss(&p, batch, obj).unwrap().total;
            v[i] = base[i] - h;
            p.set_flat(&v);
            let down = total_loss(&p, batch, obj).unwrap().total;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|, 1e-6)`.
fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = StdRng::seed_from_u64(15);
    let mut worst: f64 = 0.0;
    for trial in 0..40 {
        let mode = if trial % 2 == 0 {
            Mode::Edl
        } else {
            Mode::IbEdl
        };
        let (params, batch, obj) = random_problem(&mut rng, mode);
        let analytic = loss_gradient(&params, &batch, &obj).unwrap().to_flat();
        let numeric = finite_difference(&params, &batch, &obj, 1e-5);
        for (a, n) in analytic.iter().zip(&numeric) {
            worst = worst.max(relative_error(*a, *n));
        }
    }
    assert!(worst < 1e-5, "worst relative error {worst}");
}

#[test]
fn descent_reduces_mse_and_gradient() {
    let mut rng = StdRng::seed_from_u64(16);
    let (mut params, batch, mut obj) = random_problem(&mut rng, Mode::Edl);
    obj.lambda = 0.0;
    let mut last_loss = total_loss(&params, &batch, &obj).unwrap().total;
    let first_norm = loss_gradient(&params, &batch, &obj).unwrap().norm();
    for _ in 0..200 {
        let g = loss_gradient(&params, &batch, &obj).unwrap().to_flat();
        let step: Vec<f64> = params
            .to_flat()
            .iter()
            .zip(&g)
            .map(|(p, g)| p - 0.05 * g)
            .collect();
        params.set_flat(&step);
        let loss = total_loss(&params, &batch, &obj).unwrap().total;
        assert!(loss <= last_loss + 1e-15);
        last_loss = loss;
    }
    assert!(loss_gradient(&params, &batch, &obj).unwrap().norm() < first_norm);
}

fn ranking_instance(rng: &mut StdRng) -> Vec<ScoredSample> {
    let n = rng.random_range(2..=50);
    let levels = rng.random_range(1..=8);
    let mut s: Vec<ScoredSample> = (0..n)
        .map(|_| ScoredSample {
            // coarse levels inject ties
            score: if rng.random_bool(0.5) {
                rng.random_range(0..levels) as f64 / levels as f64
            } else {
                rng.random::<f64>()
            },
            positive: rng.random_bool(0.5),
        })
        .collect();
    s[0].positive = true;
    s[1].positive = false;
    s
}

#[test]
fn ranking_metrics_match_reference_oracles() {
    let mut rng = StdRng::seed_from_u64(17);
    for _ in 0..200 {
        let s = ranking_instance(&mut rng);
        let fast = auroc(&s).unwrap();
        let slow = auroc_bruteforce(&s).unwrap();
        assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
        let fast = aupr(&s).unwrap();
        let slow = aupr_reference(&s).unwrap();
        assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
    }
}

/// A perceptron that converges on the data proves linear separability; the
/// margin is the smallest signed distance to the learnt hyperplane.
fn perceptron_margin(points: &[LabeledPoint], epochs: usize) -> Option<f64> {
    let mut w = [0.0f64; 3];
    for _ in 0..epochs {
        let mut mistakes = 0;
        for p in points {
            let y = if p.label == 1 { 1.0 } else { -1.0 };
            let act = w[0] * p.x[0] + w[1] * p.x[1] + w[2];
            if y * act <= 0.0 {
                w[0] += y * p.x[0];
                w[1] += y * p.x[1];
                w[2] += y;
                mistakes += 1;
            }
        }
        if mistakes == 0 {
            let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
            return points
                .iter()
                .map(|p| {
                    let y = if p.label == 1 { 1.0 } else { -1.0 };
                    y * (w[0] * p.x[0] + w[1] * p.x[1] + w[2]) / norm
                })
                .reduce(f64::min);
        }
    }
    None
}

#[test]
fn well_separated_blobs_are_linearly_separable() {
    let points = generate_toy_classification(250, 10.0, 3).unwrap();
    assert_eq!(points.len(), 500);
    let margin = perceptron_margin(&points, 1000).expect("perceptron did not converge");
    assert!(margin > 0.0);
}
