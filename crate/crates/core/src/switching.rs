//! Optimal switching times between candid and sparing disclosure.
//!
//! With `B = ρ₁S₁/β` the expected-damages weight at `t = 1`:
//!
//! * candid-first switches at `θ` solving `γ^{sp}(θ) = κ − B`, where `γ^{sp}`
//!   is the sparing path of the schedule;
//! * sparing-first switches at `θ` solving
//!   `λ(1 − ρ_θ)h(θ)(1 − θ) = (κ⁻¹ − 1) + B/(κγ_θ)`.
//!
//! Both left sides fall monotonically in `θ` while the right sides do not,
//! so each FOC has at most one root and is solved on a bracket.

use std::fmt;

use crate::equilibrium::{
    gamma1_selfconsistent, Law, LiabilitySchedule, ModelParams, SwitchRegime,
};
use crate::error::{Error, Result};
use crate::mathkit::{find_root, Tolerance};
use crate::valuation::shortfall_from_gamma1;

/// Root-finding tolerance for switching times and charges.
pub const SOLVER_TOL: f64 = 1e-14;

/// Default step, in charge units, for [`theta_prime`].
pub const THETA_PRIME_STEP: f64 = 1e-4;

fn solver_tolerance() -> Tolerance {
    Tolerance::absolute(SOLVER_TOL).with_max_iter(200)
}

/// The boundary an FOC without interior root points to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    /// `θ = 0`: the first mode is never used.
    Start,
    /// `θ = 1`: the switch never occurs.
    End,
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corner::Start => "theta=0",
            Corner::End => "theta=1",
        })
    }
}

/// A solved switching problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchSolution {
    pub theta: f64,
    pub regime: SwitchRegime,
    pub foc_residual: f64,
    pub exists: bool,
    /// Set when `exists` is false.
    pub corner: Option<Corner>,
    pub schedule: LiabilitySchedule,
    pub params: ModelParams,
}

impl SwitchSolution {
    pub fn beta(&self) -> f64 {
        self.params.beta()
    }

    /// The switching time, or [`Error::NoSwitch`] at a corner.
    pub fn interior(&self) -> Result<f64> {
        if self.exists {
            Ok(self.theta)
        } else {
            Err(Error::NoSwitch {
                what: format!(
                    "{} under {} (FOC selects {})",
                    self.regime,
                    self.schedule,
                    self.corner
                        .map_or_else(|| "no corner".into(), |c| c.to_string())
                ),
            })
        }
    }
}

/// `ρ₁`, the liability share at `t = 1` on the sparing path.
pub fn rho1(p: &ModelParams, s: &LiabilitySchedule) -> Result<f64> {
    s.validate()?;
    Ok(match *s {
        LiabilitySchedule::Zero => 0.0,
        LiabilitySchedule::Constant(rho) => rho,
        LiabilitySchedule::Charge(c) => c / (c + (1.0 - c) * (-p.lambda_g1()).exp()),
        LiabilitySchedule::SelfConsistent => gamma1_selfconsistent(p)?,
    })
}

/// `B = ρ₁S₁/β`.
pub fn damages_weight(p: &ModelParams, s: &LiabilitySchedule) -> Result<f64> {
    let law = Law::of(s, p)?;
    let gamma1 = law.value(p.lambda_g1());
    let s1 = shortfall_from_gamma1(gamma1, p.sigma())?;
    Ok(rho1(p, s)? * s1 / p.beta())
}

/// Both sides of a first-order condition, bound to one configuration.
#[derive(Debug, Clone, Copy)]
pub struct Foc {
    regime: SwitchRegime,
    law: Law,
    params: ModelParams,
    weight: f64,
}

impl Foc {
    pub fn new(regime: SwitchRegime, p: &ModelParams, s: &LiabilitySchedule) -> Result<Self> {
        Ok(Self {
            regime,
            law: Law::of(s, p)?,
            params: *p,
            weight: damages_weight(p, s)?,
        })
    }

    /// `(falling side, rising side)` at `θ`.
    pub fn sides(&self, theta: f64) -> (f64, f64) {
        let p = &self.params;
        let k = p.kernel();
        let gamma = self.law.value(p.lambda() * k.g(theta));
        match self.regime {
            SwitchRegime::CandidFirst => (gamma, p.kappa() - self.weight),
            SwitchRegime::SparingFirst => {
                let rho = self.law.share(gamma);
                let lhs = p.lambda() * (1.0 - rho) * k.h(theta) * (1.0 - theta);
                let rhs = (1.0 / p.kappa() - 1.0) + self.weight / (p.kappa() * gamma);
                (lhs, rhs)
            }
        }
    }

    pub fn residual(&self, theta: f64) -> f64 {
        let (lhs, rhs) = self.sides(theta);
        lhs - rhs
    }

    fn solve(&self, schedule: LiabilitySchedule) -> Result<SwitchSolution> {
        let tol = solver_tolerance();
        let f = |theta: f64| self.residual(theta);
        // The candid FOC is positive at θ = 0 and the sparing FOC negative at θ = 1,
        // so only the opposite endpoint can fail to bracket.
        let corner = match self.regime {
            SwitchRegime::CandidFirst if f(1.0) > tol.abs_tol => Some(Corner::End),
            SwitchRegime::SparingFirst if f(0.0) < -tol.abs_tol => Some(Corner::Start),
            _ => None,
        };
        let (theta, exists) = match corner {
            Some(Corner::End) => (1.0, false),
            Some(Corner::Start) => (0.0, false),
            None => (find_root(f, 0.0, 1.0, tol)?, true),
        };
        Ok(SwitchSolution {
            theta,
            regime: self.regime,
            foc_residual: f(theta),
            exists,
            corner,
            schedule,
            params: self.params,
        })
    }
}

/// Candid-first switching time.
pub fn theta_candid_first(p: &ModelParams, s: &LiabilitySchedule) -> Result<SwitchSolution> {
    Foc::new(SwitchRegime::CandidFirst, p, s)?.solve(*s)
}

/// Sparing-first switching time.
pub fn theta_sparing_first(p: &ModelParams, s: &LiabilitySchedule) -> Result<SwitchSolution> {
    Foc::new(SwitchRegime::SparingFirst, p, s)?.solve(*s)
}

/// Either switching time.
pub fn theta(
    regime: SwitchRegime,
    p: &ModelParams,
    s: &LiabilitySchedule,
) -> Result<SwitchSolution> {
    Foc::new(regime, p, s)?.solve(*s)
}

/// Sparing-first switching time under `Charge(c)`, failing when no interior switch exists.
pub fn theta_sparing_charge(c: f64, p: &ModelParams) -> Result<f64> {
    theta_sparing_first(p, &LiabilitySchedule::Charge(c))?.interior()
}

fn require_switching_regime(p: &ModelParams) -> Result<()> {
    let lambda_h0 = p.lambda_h0();
    let threshold = 1.0 / p.kappa() - 1.0;
    if lambda_h0 > threshold {
        Ok(())
    } else {
        Err(Error::NoSwitchingRegime {
            lambda_h0,
            threshold,
        })
    }
}

/// The charge quadratic `Q(c)`, equal to `γ₁(c)` times the sparing-first FOC at `θ = 0`.
///
/// ```text
/// Q(c) = λh(0)[c²(E−1) + c(1−2E)] − c(κ⁻¹−1)(1−E) − cκ⁻¹S₁(c)/β + [λh(0) − (κ⁻¹−1)]E
/// ```
///
/// with `E = e^{−λg(1)}` and `S₁(c)` the shortfall under `Charge(c)`.
pub fn charge_quadratic(c: f64, p: &ModelParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::domain("charge", c, "must lie in [0,1]"));
    }
    let e = (-p.lambda_g1()).exp();
    let lh0 = p.lambda_h0();
    let inv = 1.0 / p.kappa() - 1.0;
    let s1 = shortfall_from_gamma1(c + (1.0 - c) * e, p.sigma())?;
    Ok(lh0 * (c * c * (e - 1.0) + c * (1.0 - 2.0 * e))
        - c * inv * (1.0 - e)
        - c * s1 / (p.kappa() * p.beta())
        + (lh0 - inv) * e)
}

/// `c̄`, the largest charge under which a sparing-first switch exists.
pub fn c_bar(p: &ModelParams) -> Result<f64> {
    require_switching_regime(p)?;
    let q = |c: f64| charge_quadratic(c, p).expect("charge inside [0,1]");
    find_root(q, 0.0, 1.0, solver_tolerance())
}

/// `dθ/dc` of the sparing-first switching time by central difference.
pub fn theta_prime(c: f64, p: &ModelParams, step: f64) -> Result<f64> {
    if !(step > 0.0 && c - step > 0.0 && c + step < 1.0) {
        return Err(Error::domain("charge", c, "c ± step must lie in (0,1)"));
    }
    let up = theta_sparing_charge(c + step, p)?;
    let down = theta_sparing_charge(c - step, p)?;
    Ok((up - down) / (2.0 * step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::trend_with_switch;
    use crate::mathkit::{integrate, Kernel};
    use proptest::prelude::*;

    fn params(lambda: f64, sigma: f64, kappa: f64, beta: f64) -> ModelParams {
        ModelParams::new(lambda, sigma, kappa, beta).unwrap()
    }

    fn g_quad(t: f64, sigma: f64) -> f64 {
        let k = Kernel::new(sigma).unwrap();
        integrate(|u| k.h(u), 0.0, t, Tolerance::absolute(1e-13)).unwrap()
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let f_lo = f(lo);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (f_lo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn candid_first_boundary_and_interior() {
        let kappa: f64 = 0.7;
        let g1 = Kernel::new(3.0).unwrap().g1();
        let edge = params(-kappa.ln() / g1, 3.0, kappa, 1.0);
        let sol = theta_candid_first(&edge, &LiabilitySchedule::Zero).unwrap();
        assert!((sol.theta - 1.0).abs() <= 1e-6, "{sol:?}");

        let p = params(-2.0 * kappa.ln() / g1, 3.0, kappa, 1.0);
        let sol = theta_candid_first(&p, &LiabilitySchedule::Zero).unwrap();
        assert!(sol.exists);
        let half = 0.5 * g_quad(1.0, 3.0);
        let oracle = bisect(|t| g_quad(t, 3.0) - half, 0.0, 1.0);
        assert!((sol.theta - oracle).abs() < 1e-9);

        let below = params(0.5 * -kappa.ln() / g1, 3.0, kappa, 1.0);
        let sol = theta_candid_first(&below, &LiabilitySchedule::Zero).unwrap();
        assert!(!sol.exists);
        assert_eq!(sol.corner, Some(Corner::End));
        assert!(sol.interior().is_err());
    }

    #[test]
    fn sparing_first_boundary() {
        let kappa: f64 = 0.7;
        let h0 = Kernel::new(3.0).unwrap().h(0.0);
        let edge = params((1.0 / kappa - 1.0) / h0, 3.0, kappa, 1.0);
        let sol = theta_sparing_first(&edge, &LiabilitySchedule::Zero).unwrap();
        assert!(sol.theta.abs() <= 1e-6, "{sol:?}");

        let below = params(0.9 * (1.0 / kappa - 1.0) / h0, 3.0, kappa, 1.0);
        let sol = theta_sparing_first(&below, &LiabilitySchedule::Zero).unwrap();
        assert_eq!(sol.corner, Some(Corner::Start));

        // Zero schedule reduces to (1−θ)h(θ) = (κ⁻¹−1)/λ.
        let p = params(3.0, 3.0, kappa, 1.0);
        let sol = theta_sparing_first(&p, &LiabilitySchedule::Zero).unwrap();
        let k = p.kernel();
        let oracle = bisect(|t| (1.0 - t) * k.h(t) - (1.0 / kappa - 1.0) / 3.0, 0.0, 1.0);
        assert!((sol.theta - oracle).abs() < 1e-10);
    }

    #[test]
    fn litigation_orderings() {
        for &lambda in &[1.0, 2.0, 3.0, 5.0] {
            let p = params(lambda, 3.0, 0.7, 1.0);
            let zero_c = theta_candid_first(&p, &LiabilitySchedule::Zero).unwrap();
            let charge_c = theta_candid_first(&p, &LiabilitySchedule::Charge(0.2)).unwrap();
            if zero_c.exists && charge_c.exists {
                assert!(charge_c.theta > zero_c.theta, "lambda {lambda}");
            }
            let zero_s = theta_sparing_first(&p, &LiabilitySchedule::Zero).unwrap();
            let charge_s = theta_sparing_first(&p, &LiabilitySchedule::Charge(0.2)).unwrap();
            assert!(zero_s.exists);
            assert!(charge_s.theta < zero_s.theta, "lambda {lambda}");
            for sol in [zero_c, charge_c, zero_s, charge_s] {
                if sol.exists {
                    assert!(sol.foc_residual.abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn reference_charges_ordered() {
        let p = params(2.0, 4.0, 0.7, 1.0);
        let t2 = theta_sparing_charge(0.2, &p).unwrap();
        let t3 = theta_sparing_charge(0.3, &p).unwrap();
        assert!(t3 < t2);
    }

    #[test]
    fn c_bar_properties() {
        let p = params(2.0, 4.0, 0.7, 1.0);
        assert!(charge_quadratic(0.0, &p).unwrap() > 0.0);
        let e = (-p.lambda_g1()).exp();
        let expected = (p.lambda_h0() - (1.0 / 0.7 - 1.0)) * e;
        assert!((charge_quadratic(0.0, &p).unwrap() - expected).abs() < 1e-15);
        assert!(charge_quadratic(1.0, &p).unwrap() < 0.0);

        let cb = c_bar(&p).unwrap();
        assert!(cb > 0.0 && cb < 1.0);
        assert!(
            theta_sparing_first(&p, &LiabilitySchedule::Charge(cb - 1e-3))
                .unwrap()
                .exists
        );
        assert!(
            !theta_sparing_first(&p, &LiabilitySchedule::Charge(cb + 1e-3))
                .unwrap()
                .exists
        );

        let mut last = 0.0;
        for beta in [0.5, 1.0, 2.0, 4.0] {
            let cb = c_bar(&p.with_beta(beta).unwrap()).unwrap();
            assert!(cb > last, "beta {beta}");
            last = cb;
        }

        let weak = params(0.4, 4.0, 0.7, 1.0);
        assert!(matches!(c_bar(&weak), Err(Error::NoSwitchingRegime { .. })));
    }

    #[test]
    fn quadratic_is_scaled_foc_at_zero() {
        let p = params(2.0, 4.0, 0.7, 1.0);
        for &c in &[0.05, 0.2, 0.4, 0.7] {
            let s = LiabilitySchedule::Charge(c);
            let foc = Foc::new(SwitchRegime::SparingFirst, &p, &s).unwrap();
            let gamma1 = c + (1.0 - c) * (-p.lambda_g1()).exp();
            let q = charge_quadratic(c, &p).unwrap();
            assert!((q - gamma1 * foc.residual(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_prime_properties() {
        let p = params(2.0, 4.0, 0.7, 1.0);
        let step = THETA_PRIME_STEP;
        let d1 = theta_prime(0.2, &p, step).unwrap();
        let d2 = theta_prime(0.2, &p, step / 2.0).unwrap();
        assert!(d1 < 0.0);
        assert!((d1 - d2).abs() <= 1e-6);

        let zero = theta_sparing_first(&p, &LiabilitySchedule::Zero)
            .unwrap()
            .theta;
        let near = theta_sparing_charge(1e-7, &p).unwrap();
        assert!((near - zero).abs() < 1e-5);
        assert!(theta_prime(0.999_95, &p, step).is_err());
    }

    #[test]
    fn sparing_foc_sides_are_monotone() {
        for s in [
            LiabilitySchedule::Zero,
            LiabilitySchedule::Charge(0.2),
            LiabilitySchedule::Constant(0.3),
            LiabilitySchedule::SelfConsistent,
        ] {
            let foc =
                Foc::new(SwitchRegime::SparingFirst, &params(3.0, 3.0, 0.7, 2.0), &s).unwrap();
            let sides: Vec<(f64, f64)> = (0..=200).map(|i| foc.sides(i as f64 / 200.0)).collect();
            for w in sides.windows(2) {
                assert!(w[1].0 < w[0].0, "{s}");
                assert!(w[1].1 >= w[0].1, "{s}");
            }
        }
    }

    #[test]
    fn constant_share_raises_terminal_value() {
        let p = params(3.0, 3.0, 0.7, 1.0);
        for regime in [SwitchRegime::CandidFirst, SwitchRegime::SparingFirst] {
            let g1 = |rho: f64| {
                let s = LiabilitySchedule::Constant(rho);
                let sol = theta(regime, &p, &s).unwrap();
                trend_with_switch(1.0, sol.theta, regime, &p, &s).unwrap()
            };
            assert!(g1(0.2) < g1(0.4), "{regime}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn strict_orderings_on_a_grid(
            lambda in 1.0f64..8.0,
            sigma in 2.0f64..5.0,
            kappa in 0.5f64..0.9,
            beta in 0.5f64..4.0,
            lo in 0.05f64..0.3,
            gap in 0.05f64..0.2,
        ) {
            let p = params(lambda, sigma, kappa, beta);
            let hi = lo + gap;
            let solve = |r, s| theta(r, &p, &s).unwrap();
            let cz = solve(SwitchRegime::CandidFirst, LiabilitySchedule::Zero);
            let cl = solve(SwitchRegime::CandidFirst, LiabilitySchedule::Constant(lo));
            let ch = solve(SwitchRegime::CandidFirst, LiabilitySchedule::Constant(hi));
            if cz.exists && cl.exists {
                prop_assert!(cl.theta > cz.theta);
            }
            if cl.exists && ch.exists {
                prop_assert!(cl.theta < ch.theta);
            }
            let sz = solve(SwitchRegime::SparingFirst, LiabilitySchedule::Zero);
            let sl = solve(SwitchRegime::SparingFirst, LiabilitySchedule::Constant(lo));
            let sh = solve(SwitchRegime::SparingFirst, LiabilitySchedule::Constant(hi));
            if sz.exists && sl.exists {
                prop_assert!(sl.theta < sz.theta);
            }
            if sl.exists && sh.exists {
                prop_assert!(sh.theta < sl.theta);
            }
            for sol in [cz, cl, ch, sz, sl, sh] {
                if sol.exists {
                    prop_assert!(sol.foc_residual.abs() <= 1e-8);
                }
            }
        }
    }
}
