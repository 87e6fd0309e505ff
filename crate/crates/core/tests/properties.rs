use proptest::prelude::*;

use pk_laplace::energy::{energy, g_sum, gradient, hessian, j_term, mu1, mu2, residual};
use pk_laplace::grid::{h_norm, sup_norm, GridFunction, NormPair};
use pk_laplace::nonlinearity::{example1_pair, GVariant};
use pk_laplace::{ExponentProfile, ProblemSpec};

fn spec(p: Vec<f64>, gamma: f64, lambda: f64) -> ProblemSpec {
    let t = p.len() - 2;
    let (f, g) = example1_pair(GVariant::CorrectedOddG, vec![1.3; t], vec![0.7; t]).unwrap();
    ProblemSpec::new(ExponentProfile::new(p).unwrap(), f, g, gamma, lambda).unwrap()
}

/// Interior values and an exponent profile of matching length.
fn problem() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=12).prop_flat_map(|t| {
        (
            prop::collection::vec(-3.0f64..3.0, t),
            prop::collection::vec(2.0f64..3.0, t + 2),
        )
    })
}

fn away_from_breaks(x: &[f64]) -> bool {
    let breaks = [0.0, 2.0, 4.0, 6.0, 8.0];
    x.iter().all(|v| breaks.iter().all(|b| (v.abs() - b).abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gradient_matches_central_differences((x, p) in problem(), gamma in 0.01f64..1.0, lambda in 0.01f64..5.0) {
        prop_assume!(away_from_breaks(&x));
        let s = spec(p, gamma, lambda);
        let g = gradient(&GridFunction::from_interior(&x).unwrap(), &s);
        for j in 0..x.len() {
            let h = 1e-6;
            let mut a = x.clone();
            let mut b = x.clone();
            a[j] += h;
            b[j] -= h;
            let fd = (energy(&GridFunction::from_interior(&a).unwrap(), &s)
                - energy(&GridFunction::from_interior(&b).unwrap(), &s)) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0), "j={j} fd={fd} g={}", g[j]);
        }
    }

    #[test]
    fn weak_and_strong_forms_agree((x, p) in problem(), gamma in 0.01f64..1.0, lambda in 0.01f64..5.0) {
        let s = spec(p, gamma, lambda);
        let u = GridFunction::from_interior(&x).unwrap();
        for (a, b) in gradient(&u, &s).iter().zip(residual(&u, &s)) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn hessian_matches_gradient_differences((x, p) in problem()) {
        prop_assume!(away_from_breaks(&x));
        // |t|^{p-2} is not smooth at 0 for p < 3
        prop_assume!(GridFunction::from_interior(&x).unwrap().values().windows(2).all(|w| (w[1] - w[0]).abs() > 1e-3));
        let s = spec(p, 0.3, 1.5);
        let hm = hessian(&GridFunction::from_interior(&x).unwrap(), &s);
        for j in 0..x.len() {
            let h = 1e-6;
            let mut a = x.clone();
            let mut b = x.clone();
            a[j] += h;
            b[j] -= h;
            let ga = gradient(&GridFunction::from_interior(&a).unwrap(), &s);
            let gb = gradient(&GridFunction::from_interior(&b).unwrap(), &s);
            for i in 0..x.len() {
                let fd = (ga[i] - gb[i]) / (2.0 * h);
                prop_assert!((fd - hm[(i, j)]).abs() <= 1e-5 * hm[(i, j)].abs().max(1.0));
            }
        }
        prop_assert!(hm.clone().transpose() == hm);
    }

    #[test]
    fn energy_decomposes((x, p) in problem(), gamma in 0.01f64..1.0, lambda in 0.01f64..5.0) {
        let s = spec(p, gamma, lambda);
        let u = GridFunction::from_interior(&x).unwrap();
        let e = energy(&u, &s);
        let parts = mu2(&u, &s) + lambda * j_term(&u, &s) + gamma * g_sum(&u, &s);
        prop_assert!((e - parts).abs() <= 1e-12 * e.abs().max(1.0));
        prop_assert!((mu1(&u, &s) - mu2(&u, &s) - gamma * g_sum(&u, &s)).abs() <= 1e-12 * e.abs().max(1.0));
        prop_assert!(mu2(&u, &s) >= 0.0);
    }

    #[test]
    fn norm_equivalence(x in prop::collection::vec(-100.0f64..100.0, 1..50)) {
        let u = GridFunction::from_interior(&x).unwrap();
        let (lo, hi) = NormPair::equivalence_constants(x.len());
        let (h, c) = (h_norm(&u), sup_norm(&u));
        let slack = 8.0 * f64::EPSILON * h.max(1e-300);
        prop_assert!(lo * c <= h + slack);
        prop_assert!(h <= hi * c + slack);
    }

    #[test]
    fn reflection_preserves_energy_for_mirrored_data(x in prop::collection::vec(-3.0f64..3.0, 2..10), p in 2.0f64..3.0) {
        // constant exponents and uniform coefficients are symmetric under k -> T+1-k
        let s = spec(vec![p; x.len() + 2], 0.4, 2.0);
        let u = GridFunction::from_interior(&x).unwrap();
        let e = energy(&u, &s);
        prop_assert!((e - energy(&u.reflected(), &s)).abs() <= 1e-12 * e.abs().max(1.0));
    }
}

#[test]
fn zero_is_critical_for_odd_terms() {
    let s = spec(vec![2.5; 6], 0.2, 1.0);
    let u = GridFunction::zeros(4);
    assert!(residual(&u, &s).iter().all(|r| *r == 0.0));
    assert_eq!(energy(&u, &s), 0.0);
}
