use num_traits::One;
use oscerr::bseries::{rk_bseries, Rational};
use oscerr::oscillators::{ef_system, EmdenFowlerProblem};
use oscerr::rk::{builtin, builtin_methods, integrate};
use oscerr::trees::catalog;

fn endpoint_error(name: &str, h: f64) -> f64 {
    let p = EmdenFowlerProblem::cubic();
    let sys = ef_system(&p);
    let end = |tab, h: f64| {
        let steps = (10.0 / h).round() as usize;
        let run = integrate(&tab, &sys, &p.initial_state(), 0.0, h, 10.0, steps).unwrap();
        run.states.last().unwrap().clone()
    };
    let (a, e) = (end(builtin(name).unwrap(), h), end(builtin("rk4").unwrap(), 1e-4));
    (a[0] - e[0]).hypot(a[1] - e[1])
}

#[test]
fn order_conditions_hold_exactly() {
    for tab in builtin_methods() {
        let p = tab.order().unwrap();
        let a = rk_bseries(&tab, p + 1).unwrap();
        for id in 0..catalog().count_up_to(p) {
            assert_eq!(a.get(catalog().tree(id)).unwrap(), &Rational::one(), "{} {}", tab.name(), catalog().tree(id));
        }
        assert!(catalog().ids_of_order(p + 1).any(|id| !a.get(catalog().tree(id)).unwrap().is_one()));
    }
}

#[test]
fn halving_the_step_divides_the_error_by_two_to_the_order() {
    for (name, p, h) in [("runge2", 2, 0.01), ("heun3", 3, 0.01), ("tuned3", 3, 0.01), ("rk4", 4, 0.02)] {
        let ratio = endpoint_error(name, h) / endpoint_error(name, h / 2.0);
        let expect = 2f64.powi(p);
        assert!((ratio / expect - 1.0).abs() < 0.1, "{name}: ratio {ratio}, expected {expect}");
    }
}
