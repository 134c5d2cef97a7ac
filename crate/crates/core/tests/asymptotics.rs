//! Exact coefficients against their leading asymptotics at large n.

use std::f64::consts::PI;

use treewalk::exact::{first_return_catalan, pn_return_dp, Arithmetic};
use treewalk::genfun::{
    darboux_report, f_asymptotic_scaled, f_asymptotic_stirling_scaled, p_asymptotic_scaled,
    p_asymptotic_singularity_scaled,
};
use treewalk::make_params;

#[test]
fn singularity_constant_is_the_limit_of_step_returns() {
    for (d, lambda) in [(3, 1.0), (4, 0.5), (5, 2.0), (3, 1.5)] {
        let p = make_params(d, lambda).unwrap();
        let table = pn_return_dp(&p, 6400, Arithmetic::ScaledFloat).unwrap();
        let dev: Vec<f64> = [200u64, 800, 3200]
            .iter()
            .map(|&n| {
                let exact = table.get(2 * n as usize).unwrap().to_scaled();
                let asym = p_asymptotic_singularity_scaled(&p, n).unwrap();
                (exact.ln() - asym.ln()).exp() - 1.0
            })
            .collect();
        // O(1/n) correction: quadrupling n cuts the deviation by well over half
        assert!(
            dev[1].abs() < dev[0].abs() / 2.5,
            "d={d} lambda={lambda}: {dev:?}"
        );
        assert!(
            dev[2].abs() < dev[1].abs() / 2.5,
            "d={d} lambda={lambda}: {dev:?}"
        );
        assert!(dev[2].abs() < 0.03, "d={d} lambda={lambda}: {dev:?}");
    }
}

#[test]
fn contract_p_constant_is_off_by_a_fixed_factor() {
    let p = make_params(3, 1.0).unwrap();
    let r = darboux_report(&p).unwrap();
    let factor = r.p_const_singularity / r.p_const;
    assert!((factor - 6.0 / PI.sqrt() / r.p_const).abs() < 1e-9);
    let table = pn_return_dp(&p, 3200, Arithmetic::ScaledFloat).unwrap();
    let ratio = |n: u64| {
        let exact = table.get(2 * n as usize).unwrap().to_scaled();
        (exact.ln() - p_asymptotic_scaled(&p, n).unwrap().ln()).exp()
    };
    // the ratio settles near the factor, far from 1
    assert!((ratio(1600) / factor - 1.0).abs() < 0.02);
}

#[test]
fn stirling_constant_is_the_limit_of_first_returns() {
    for lambda in [1.0, 2.0, 4.0, 0.3] {
        let p = make_params(3, lambda).unwrap();
        let ratio = |n: u64| {
            let exact = first_return_catalan(&p, n, Arithmetic::ScaledFloat)
                .unwrap()
                .to_scaled();
            (exact.ln() - f_asymptotic_stirling_scaled(&p, n).unwrap().ln()).exp()
        };
        let (r400, r1600) = (ratio(400), ratio(1600));
        assert!((r1600 - 1.0).abs() < (r400 - 1.0).abs());
        assert!((r1600 - 1.0).abs() < 1e-3, "lambda={lambda}: {r1600}");
    }
}

#[test]
fn pi_normalised_f_ratio_tends_to_a_quarter_of_the_degree_ratio() {
    for lambda in [1.0, 2.0, 4.0] {
        let p = make_params(3, lambda).unwrap();
        let exact = first_return_catalan(&p, 1600, Arithmetic::ScaledFloat)
            .unwrap()
            .to_scaled();
        let r = (exact.ln() - f_asymptotic_scaled(&p, 1600).unwrap().ln()).exp();
        let limit = (2.0 + lambda) / 8.0;
        assert!(
            (r / limit - 1.0).abs() < 1e-3,
            "lambda={lambda}: {r} vs {limit}"
        );
    }
}
