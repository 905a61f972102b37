use fenc_core::hilbert::{
    logit_inner_product, logit_to_probability, mc_inner_product, norm, probability_to_logit, simplex_add,
    simplex_scale, HilbertSpace, LogitVector, SimplexPoint,
};
use fenc_core::numerics::Tensor;
use proptest::collection::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn values(m: usize, d: usize) -> impl Strategy<Value = Tensor> {
    vec(-5.0f64..5.0, m * d).prop_map(move |v| Tensor::new(vec![m, d], v).unwrap())
}

fn triple() -> impl Strategy<Value = (Tensor, Tensor, Tensor, HilbertSpace)> {
    (1usize..20, 0usize..2, 2usize..5).prop_flat_map(|(m, which, classes)| {
        let (d, space) = if which == 0 {
            (classes - 1, HilbertSpace::EuclideanL2MC)
        } else {
            (classes, HilbertSpace::LogitSpace { classes })
        };
        (values(m, d), values(m, d), values(m, d), Just(space))
    })
}

fn simplex_point(d: usize) -> impl Strategy<Value = SimplexPoint> {
    vec(0.01f64..1.0, d).prop_map(|w| SimplexPoint::normalize(w).unwrap())
}

/// Differs from a constant vector by at most `tol` entrywise.
fn is_constant_shift(a: &[f64], b: &[f64], tol: f64) -> bool {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    d.iter().all(|v| (v - d[0]).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn inner_product_is_bilinear_and_symmetric((f, g, h, space) in triple(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let combo = f.scale(a).add(&h.scale(b)).unwrap();
        let lhs = mc_inner_product(&combo, &g, space).unwrap();
        let rhs = a * mc_inner_product(&f, &g, space).unwrap() + b * mc_inner_product(&h, &g, space).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10, "{} vs {}", lhs, rhs);
        prop_assert_eq!(mc_inner_product(&f, &g, space).unwrap(), mc_inner_product(&g, &f, space).unwrap());
    }

    #[test]
    fn cauchy_schwarz((f, g, _h, space) in triple()) {
        let ip = mc_inner_product(&f, &g, space).unwrap();
        prop_assert!(ip.abs() <= norm(&f, space).unwrap() * norm(&g, space).unwrap() + 1e-10);
    }

    #[test]
    fn probability_logit_round_trip(p in (2usize..8).prop_flat_map(simplex_point)) {
        let back = logit_to_probability(&probability_to_logit(&p));
        for (a, b) in back.probabilities().iter().zip(p.probabilities()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbation_and_powering_are_logit_operations(
        (x, y) in (2usize..6).prop_flat_map(|d| (simplex_point(d), simplex_point(d))),
        alpha in -3.0f64..3.0,
    ) {
        let lx = probability_to_logit(&x);
        let ly = probability_to_logit(&y);
        let sum: Vec<f64> = lx.logits().iter().zip(ly.logits()).map(|(a, b)| a + b).collect();
        let via_simplex = probability_to_logit(&simplex_add(&x, &y).unwrap());
        prop_assert!(is_constant_shift(via_simplex.logits(), &sum, 1e-10));
        let scaled: Vec<f64> = lx.logits().iter().map(|a| alpha * a).collect();
        let via_power = probability_to_logit(&simplex_scale(alpha, &x).unwrap());
        prop_assert!(is_constant_shift(via_power.logits(), &scaled, 1e-10));

        // the logit inner product cannot tell the two routes apart
        let z = ly.clone();
        let a = logit_inner_product(&via_simplex, &z).unwrap();
        let b = logit_inner_product(&LogitVector::new(sum).unwrap(), &z).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn logit_inner_product_ignores_shifts(
        (a, b) in (2usize..6).prop_flat_map(|d| (vec(-5.0f64..5.0, d), vec(-5.0f64..5.0, d))),
        s in -10.0f64..10.0,
        t in -10.0f64..10.0,
    ) {
        let x = LogitVector::new(a.clone()).unwrap();
        let y = LogitVector::new(b.clone()).unwrap();
        let xs = LogitVector::new(a.iter().map(|v| v + s).collect()).unwrap();
        let ys = LogitVector::new(b.iter().map(|v| v + t).collect()).unwrap();
        let base = logit_inner_product(&x, &y).unwrap();
        prop_assert!((logit_inner_product(&xs, &ys).unwrap() - base).abs() < 1e-10);
    }
}

/// `⟨x², x²⟩` under uniform samples of [-1, 1] estimates `∫x⁴ dx / 2 = 1/5`.
#[test]
fn monte_carlo_error_shrinks_with_samples() {
    let exact = 0.2;
    let mut medians = Vec::new();
    for &m in &[100usize, 10_000, 1_000_000] {
        let mut errs: Vec<f64> = (0..20)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let xs: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
                let sq = Tensor::new(vec![m, 1], xs.iter().map(|x| x * x).collect()).unwrap();
                (mc_inner_product(&sq, &sq, HilbertSpace::EuclideanL2MC).unwrap() - exact).abs()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        medians.push(0.5 * (errs[9] + errs[10]));
    }
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
    // roughly 1/sqrt(m): two decades of m per step, one decade of error
    assert!(medians[2] < 1e-3, "{medians:?}");
}
