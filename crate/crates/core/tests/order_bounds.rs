use proptest::prelude::*;

use spinrestrict::bounds::{erfc, erfc_inv, exp_integral, strict_ceiling};
use spinrestrict::normflow::{leaked_fraction, NormFlowParams};
use spinrestrict::{required_order, short_time_horizon, BoundQuery, RelaxationLaw};

const LAWS: [RelaxationLaw; 3] = [RelaxationLaw::Linear, RelaxationLaw::Sqrt, RelaxationLaw::Constant];

fn order(h: f64, r: f64, xi: f64, law: RelaxationLaw) -> f64 {
    required_order(&BoundQuery::new(h, r, xi, law).unwrap()).unwrap().k_real
}

#[test]
fn published_nmr_and_esr_orders() {
    let nmr = required_order(&BoundQuery::new(5.0, 1.0, 0.01, RelaxationLaw::Linear).unwrap()).unwrap();
    assert!((8.3..=8.6).contains(&nmr.k_real));
    assert!([8, 9].contains(&nmr.k_int));
    // 10 G at 2.8025 MHz/G against a 10 MHz relaxation rate
    let esr = required_order(&BoundQuery::new(28.025, 10.0, 0.01, RelaxationLaw::Linear).unwrap()).unwrap();
    assert_eq!(esr.k_int, 7);
}

#[test]
fn bound_sits_where_the_profile_leaks_xi() {
    for law in LAWS {
        for (h, r) in [(5.0, 1.0), (28.025, 10.0), (1.0, 4.0), (100.0, 1.0)] {
            for xi in [0.5, 0.05, 0.01, 1e-4] {
                let k = order(h, r, xi, law);
                let p = NormFlowParams::new(h, r, 1.0, 2, law).unwrap();
                let leaked = leaked_fraction(&p, k).unwrap();
                assert!(((leaked - xi) / xi).abs() < 1e-6, "{law} h={h} r={r} xi={xi}: {leaked}");
            }
        }
    }
}

#[test]
fn constant_law_closed_form() {
    let k = order(5.0, 1.0, 0.01, RelaxationLaw::Constant);
    assert!((k - (10.0 * 100f64.ln() + 1.0)).abs() < 1e-9);
}

#[test]
fn special_function_reference_values() {
    assert!((erfc(0.5) - 0.479_500_122_2).abs() < 1e-9);
    assert!((erfc_inv(erfc(1.3)).unwrap() - 1.3).abs() < 1e-10);
    assert!((exp_integral(1.0, 1.0).unwrap() - 0.219_383_934_4).abs() < 1e-9);
}

#[test]
fn horizon_scales_inversely_with_coupling() {
    let k = strict_ceiling(order(5.0, 1.0, 0.01, RelaxationLaw::Linear));
    assert!((short_time_horizon(k, 5.0) - (k - 1) as f64 / 10.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn order_grows_as_tolerance_tightens(hr in 0.1f64..200.0, xi in 1e-6f64..0.9, law_ix in 0usize..3) {
        let law = LAWS[law_ix];
        let loose = order(hr, 1.0, xi, law);
        let tight = order(hr, 1.0, xi / 2.0, law);
        prop_assert!(tight > loose);
        prop_assert!(loose >= 1.0);
    }

    #[test]
    fn order_grows_with_coupling(hr in 0.1f64..200.0, xi in 1e-6f64..0.9, law_ix in 0usize..3) {
        let law = LAWS[law_ix];
        prop_assert!(order(hr * 1.5, 1.0, xi, law) > order(hr, 1.0, xi, law));
    }

    #[test]
    fn integer_order_is_strictly_above(hr in 0.1f64..200.0, xi in 1e-6f64..0.9, law_ix in 0usize..3) {
        let b = required_order(&BoundQuery::new(hr, 1.0, xi, LAWS[law_ix]).unwrap()).unwrap();
        prop_assert!(b.k_int as f64 > b.k_real);
        prop_assert!((b.k_int as f64) <= b.k_real + 1.0);
    }
}
