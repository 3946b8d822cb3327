//! Lognormal option building blocks and the damages arithmetic.
//!
//! The public signal `Y_t` is a driftless geometric Brownian motion with
//! volatility σ normalised so that `Y₀ = 1`. At `t = 1` damages of
//! `ρ(γ₁ − Y₁)⁺` are awarded against a firm that withheld a signal below
//! `γ₁`, and limited liability caps them at `Y₁`.

use crate::equilibrium::{trend_sparing, LiabilitySchedule, ModelParams};
use crate::error::{Error, Result};
use crate::mathkit::normal_cdf;

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(name, v, "must be finite and > 0"))
    }
}

fn share(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::domain("rho", rho, "must lie in [0,1]"))
    }
}

/// `E[(Y_T − K)⁺ | Y_t = y]` with `T − t = ttm`.
pub fn call_value(y: f64, strike: f64, ttm: f64, sigma: f64) -> Result<f64> {
    positive("y", y)?;
    positive("strike", strike)?;
    positive("sigma", sigma)?;
    if !(ttm >= 0.0 && ttm.is_finite()) {
        return Err(Error::domain("ttm", ttm, "must be finite and >= 0"));
    }
    if ttm == 0.0 {
        return Ok((y - strike).max(0.0));
    }
    let vol = sigma * ttm.sqrt();
    let d_plus = ((y / strike).ln() + 0.5 * vol * vol) / vol;
    let d_minus = d_plus - vol;
    Ok((y * normal_cdf(d_plus) - strike * normal_cdf(d_minus)).max(0.0))
}

/// `E[(K − Y_T)⁺ | Y_t = y]` by put-call parity.
pub fn put_value(y: f64, strike: f64, ttm: f64, sigma: f64) -> Result<f64> {
    let call = call_value(y, strike, ttm, sigma)?;
    Ok((call + strike - y).max(0.0))
}

/// `E[Y₁ 1{Y₁ < γ₁}] = Φ(η − σ)` with `η = σ/2 + ln(γ₁)/σ`.
pub fn partial_expectation_below(gamma1: f64, sigma: f64) -> Result<f64> {
    positive("gamma1", gamma1)?;
    positive("sigma", sigma)?;
    let eta = 0.5 * sigma + gamma1.ln() / sigma;
    Ok(normal_cdf(eta - sigma))
}

/// `S₁ = γ₁ − Φ(η − σ)` for a given terminal trend value.
pub fn shortfall_from_gamma1(gamma1: f64, sigma: f64) -> Result<f64> {
    Ok((gamma1 - partial_expectation_below(gamma1, sigma)?).max(0.0))
}

/// `S₁` for the schedule's terminal trend value on the standard `[0, 1]` problem.
pub fn expected_shortfall_s1(p: &ModelParams, s: &LiabilitySchedule) -> Result<f64> {
    let gamma1 = trend_sparing(1.0, p, s)?;
    shortfall_from_gamma1(gamma1, p.sigma())
}

/// Terminal firm value net of damages, `y − ρ(γ₁ − y)⁺`, floored at zero.
pub fn net_of_damages(y: f64, rho: f64, gamma1: f64) -> Result<f64> {
    positive("y", y)?;
    share(rho)?;
    positive("gamma1", gamma1)?;
    Ok((y - rho * (gamma1 - y).max(0.0)).max(0.0))
}

/// `ȳ₁ = ργ₁/(1 + ρ)`, below which damages exhaust the firm.
pub fn bankruptcy_threshold(rho: f64, gamma1: f64) -> Result<f64> {
    share(rho)?;
    positive("gamma1", gamma1)?;
    Ok(rho * gamma1 / (1.0 + rho))
}

/// The amount by which withholding `y < γ₁` at time `t` lowers the firm's value:
/// `ρ(γ₁ + E_t[(Y₁ − γ₁)⁺] − y)`.
pub fn nondisclosure_gap(y: f64, t: f64, rho: f64, gamma1: f64, sigma: f64) -> Result<f64> {
    positive("y", y)?;
    share(rho)?;
    if y.is_nan() || y >= gamma1 {
        return Err(Error::domain("y", y, "must lie below gamma1"));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(Error::domain("t", t, "must lie in [0, 1)"));
    }
    let call = call_value(y, gamma1, 1.0 - t, sigma)?;
    Ok(rho * (gamma1 + call - y))
}

/// A signal observed at `t` together with the damages regime it would face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamagesQuote {
    rho: f64,
    gamma1: f64,
    y: f64,
    t: f64,
}

impl DamagesQuote {
    pub fn new(rho: f64, gamma1: f64, y: f64, t: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::domain("rho", rho, "must lie in [0,1)"));
        }
        if !(gamma1 > 0.0 && gamma1 <= 1.0) {
            return Err(Error::domain("gamma1", gamma1, "must lie in (0,1]"));
        }
        positive("y", y)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain("t", t, "must lie in [0, 1]"));
        }
        Ok(Self { rho, gamma1, y, t })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn bankruptcy_threshold(&self) -> f64 {
        self.rho * self.gamma1 / (1.0 + self.rho)
    }

    /// Value at `t = 1` if the signal were the terminal one.
    pub fn net_value(&self) -> f64 {
        (self.y - self.rho * (self.gamma1 - self.y).max(0.0)).max(0.0)
    }

    pub fn nondisclosure_gap(&self, sigma: f64) -> Result<f64> {
        nondisclosure_gap(self.y, self.t, self.rho, self.gamma1, sigma)
    }
}
