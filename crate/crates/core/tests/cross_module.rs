use disclosure_core::equilibrium::{trend_sparing, trend_with_switch};
use disclosure_core::switching::{c_bar, theta, theta_sparing_charge};
use disclosure_core::zone::{classify, reference_params};
use disclosure_core::{
    selftest, LiabilitySchedule, ModelParams, SwitchRegime, ZoneLabel, ZoneReport,
};

fn params(lambda: f64, sigma: f64) -> ModelParams {
    ModelParams::new(lambda, sigma, 0.7, 1.0).unwrap()
}

#[test]
fn switched_trend_is_continuous_at_theta() {
    let schedule = LiabilitySchedule::Charge(0.2);
    for regime in [SwitchRegime::SparingFirst, SwitchRegime::CandidFirst] {
        for lambda in [2.0, 3.0, 5.0] {
            let p = params(lambda, 3.0);
            let sol = theta(regime, &p, &schedule).unwrap();
            let eps = 1e-9;
            let th = sol.theta.clamp(eps, 1.0 - eps);
            let before = trend_with_switch(th - eps, sol.theta, regime, &p, &schedule).unwrap();
            let after = trend_with_switch(th + eps, sol.theta, regime, &p, &schedule).unwrap();
            assert!((before - after).abs() < 1e-6, "{regime} lambda={lambda}");
        }
    }
}

#[test]
fn switched_trend_never_exceeds_start() {
    let p = params(3.0, 3.0);
    let schedule = LiabilitySchedule::Constant(0.3);
    for regime in [SwitchRegime::SparingFirst, SwitchRegime::CandidFirst] {
        let sol = theta(regime, &p, &schedule).unwrap();
        for k in 0..=50 {
            let t = k as f64 / 50.0;
            let g = trend_with_switch(t, sol.theta, regime, &p, &schedule).unwrap();
            assert!(g > 0.0 && g <= 1.0 + 1e-12);
            assert!(g >= trend_sparing(t, &p, &schedule).unwrap() - 1e-12);
        }
    }
}

#[test]
fn zone_rows_agree_with_switching_and_classification() {
    let p = reference_params();
    let report = ZoneReport::build(&p, 0.05, 0.1).unwrap();
    assert!((report.c_bar - c_bar(&p).unwrap()).abs() < 1e-12);
    assert!(report.rows.iter().any(|r| r.c > report.c_bar));
    for row in &report.rows {
        if row.c >= report.c_bar {
            assert_eq!(row.label, ZoneLabel::CandidOnly);
        } else if let Some(th) = row.theta {
            assert!((th - theta_sparing_charge(row.c, &p).unwrap()).abs() < 1e-10);
        }
        assert_eq!(row.label, classify(row.c, &p).unwrap());
    }
}

#[test]
fn charges_beyond_ceiling_are_candid_only() {
    let p = reference_params();
    let ceiling = c_bar(&p).unwrap();
    assert_eq!(classify(ceiling + 0.05, &p).unwrap(), ZoneLabel::CandidOnly);
    assert_eq!(classify(0.5 * ceiling, &p).unwrap(), ZoneLabel::Goldilocks);
}

#[test]
fn fast_selftest_checks_pass() {
    for (id, _) in selftest::checks().filter(|&(id, _)| id != 9) {
        let report = selftest::run(id).unwrap();
        assert!(report.passed, "{}", report.line());
    }
    assert!(selftest::run(0).is_none());
}
