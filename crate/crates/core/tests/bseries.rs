mod common;

use common::{lie_derivative_mismatch, q, random_field, random_map};
use num_traits::{One, Zero};
use oscerr::bseries::*;
use oscerr::rk::{builtin, builtin_methods, design_tuned_3stage, ButcherTableau};
use oscerr::trees::named::*;
use oscerr::trees::{catalog, RootedTree};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `a = e^{∂_b}` applied to the identity: `a(τ) = Σ_{j≥1} ∂_b^{j−1} b(τ) / j!`.
fn re_expand(b: &CoefficientMap) -> CoefficientMap {
    let order = b.max_order();
    let mut power = b.clone();
    let mut fact = Rational::one();
    let mut acc = b.clone();
    for j in 2..=order {
        power = lie_derivative(b, &power).unwrap();
        fact *= q(j as i64, 1);
        acc = CoefficientMap::from_fn(order, Rational::zero(), |t| acc.get(t).unwrap() + power.get(t).unwrap() / &fact).unwrap();
    }
    let mut out = acc;
    out.set_empty_value(Rational::one());
    out
}

#[test]
fn lie_derivative_matches_symbolic_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for trial in 0..3 {
        let f = random_field(&mut rng, 2 + trial % 2);
        let b = random_map(&mut rng, 4, Rational::zero(), None);
        let c_empty = q(3, 2);
        let c = random_map(&mut rng, 4, c_empty.clone(), None);
        let lie = lie_derivative(&b, &c).unwrap();
        assert_eq!(lie_derivative_mismatch(&f, &b, &c, &c_empty, &lie, 4), None, "trial {trial}");
    }
}

#[test]
fn symbolic_oracle_detects_a_wrong_coefficient() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = random_field(&mut rng, 2);
    let b = random_map(&mut rng, 4, Rational::zero(), None);
    let c = random_map(&mut rng, 4, Rational::one(), None);
    let mut lie = lie_derivative(&b, &c).unwrap();
    let t = tau4b();
    let v = lie.get(&t).unwrap() + q(1, 7);
    lie.set(&t, v).unwrap();
    assert_eq!(lie_derivative_mismatch(&f, &b, &c, &Rational::one(), &lie, 4), Some(4));
}

#[test]
fn re_expansion_reproduces_every_library_method() {
    for tab in builtin_methods() {
        let a = rk_bseries(&tab, 6).unwrap();
        let b = modified_equation_coeffs(&a, 6).unwrap();
        assert_eq!(re_expand(&b), a, "{}", tab.name());
    }
}

#[test]
fn modified_coefficients_vanish_up_to_the_order() {
    for (name, p) in [("runge2", 2), ("heun3", 3), ("tuned3", 3), ("rk4", 4)] {
        let a = rk_bseries(&builtin(name).unwrap(), 6).unwrap();
        assert_eq!(method_order(&a).unwrap(), p);
        let b = modified_equation_coeffs(&a, 6).unwrap();
        assert!(b.get(&RootedTree::leaf()).unwrap().is_one());
        for id in catalog().count_up_to(1)..catalog().count_up_to(p) {
            assert!(b.get(catalog().tree(id)).unwrap().is_zero(), "{name} {}", catalog().tree(id));
        }
        assert!(catalog().ids_of_order(p + 1).any(|id| !b.get(catalog().tree(id)).unwrap().is_zero()));
    }
}

#[test]
fn tuned_combination_values() {
    let b = |name: &str| modified_equation_coeffs(&rk_bseries(&builtin(name).unwrap(), 4).unwrap(), 4).unwrap();
    assert!(order4_combination(&b("tuned3")).unwrap().is_zero());
    assert_eq!(order4_combination(&b("runge2")).unwrap(), q(-21, 2));
    assert_eq!(b("runge2").get(&tau4c()).unwrap(), &q(3, 2));
    assert_eq!(b("runge2").get(&blt(4)).unwrap(), &q(3, 1));
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| q(n, d))
}

fn tableau3() -> impl Strategy<Value = ButcherTableau> {
    (small_rational(), small_rational(), small_rational(), small_rational(), small_rational()).prop_map(|(a21, a31, a32, b2, b3)| {
        let z = Rational::zero();
        let a = vec![
            vec![z.clone(), z.clone(), z.clone()],
            vec![a21.clone(), z.clone(), z.clone()],
            vec![a31.clone(), a32.clone(), z.clone()],
        ];
        // consistent: the weights sum to one
        let b1 = Rational::one() - &b2 - &b3;
        ButcherTableau::new("random", a, vec![b1, b2, b3], vec![z, a21, a31 + a32]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn re_expansion_round_trips(tab in tableau3()) {
        let a = rk_bseries(&tab, 5).unwrap();
        let b = modified_equation_coeffs(&a, 5).unwrap();
        prop_assert_eq!(re_expand(&b), a);
    }

    #[test]
    fn lie_derivative_is_local(seed in any::<u64>(), k in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_map(&mut rng, 5, Rational::zero(), None);
        let c = random_map(&mut rng, 5, q(2, 3), None);
        let base = lie_derivative(&b, &c).unwrap();

        // c on orders ≥ k and b on orders > k do not reach order k
        let b2 = CoefficientMap::from_fn(5, Rational::zero(), |t| {
            if t.order() > k { b.get(t).unwrap() + q(1, 3) } else { b.get(t).unwrap().clone() }
        }).unwrap();
        let c2 = CoefficientMap::from_fn(5, q(2, 3), |t| {
            if t.order() >= k { c.get(t).unwrap() - q(5, 2) } else { c.get(t).unwrap().clone() }
        }).unwrap();
        let moved = lie_derivative(&b2, &c2).unwrap();
        for id in 0..catalog().count_up_to(k) {
            let t = catalog().tree(id);
            prop_assert_eq!(moved.get(t).unwrap(), base.get(t).unwrap());
        }

        // b(θ) alone moves (∂_b c)(θ) and nothing else of the same order
        let theta = catalog().tree(catalog().ids_of_order(k).start).clone();
        let mut b3 = b.clone();
        b3.set(&theta, b.get(&theta).unwrap() + Rational::one()).unwrap();
        let single = lie_derivative(&b3, &c).unwrap();
        for id in 0..catalog().count_up_to(k) {
            let t = catalog().tree(id);
            if *t == theta {
                prop_assert_eq!(single.get(t).unwrap() - base.get(t).unwrap(), q(2, 3));
            } else {
                prop_assert_eq!(single.get(t).unwrap(), base.get(t).unwrap());
            }
        }
    }

    #[test]
    fn tuned_family_satisfies_the_condition(n in 1i64..40, d in 1i64..12) {
        let c2 = q(n, d);
        if let Ok(tab) = design_tuned_3stage(&c2) {
            let b = modified_equation_coeffs(&rk_bseries(&tab, 4).unwrap(), 4).unwrap();
            prop_assert!(order4_combination(&b).unwrap().is_zero());
            prop_assert_eq!(method_order(&rk_bseries(&tab, 4).unwrap()).unwrap(), 3);
        }
    }
}
