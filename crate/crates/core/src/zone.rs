//! Incremental aggregate disclosure when the litigation charge rises from `c` to `d`.
//!
//! Aggregate voluntary disclosure is read off the bond yield `∫γ_t dt` of a
//! sparing-first firm. Raising the charge lifts the sparing curve on `[0, θ_d]`
//! (a loss `A_L`, less is disclosed) and moves the switch earlier from `θ_c` to
//! `θ_d` (a gain `A_G`, candid disclosure starts sooner). For small `Δc = d − c`
//!
//! ```text
//! A_L − A_G ≈ Δc · M(c),   M(c) = ∫₀^{θ(c)} (1 − e^{−λg(t)}) dt + γ_c(θ(c)) θ′(c)
//! ```
//!
//! and the sign change of `M` on `(0, c̄)`, if any, is the lower zone boundary `c̲`.

use std::fmt;

use rayon::prelude::*;

use crate::equilibrium::{Law, ModelParams};
use crate::error::{Error, Result};
use crate::mathkit::{find_root, integrate, Tolerance};
use crate::switching::{c_bar, theta_prime, theta_sparing_charge, THETA_PRIME_STEP};

/// Points in the sign scan that precedes the root search for `c̲`.
const SCAN_POINTS: usize = 64;

/// λ of the reference charge comparison at β = 1, σ = 4.
pub const REFERENCE_LAMBDA: f64 = 2.0;

/// `(λ, σ, κ, β) = (2, 4, 0.7, 1)`, under which charges 0.2 and 0.3 both admit a switch.
pub fn reference_params() -> ModelParams {
    ModelParams::new(REFERENCE_LAMBDA, 4.0, 0.7, 1.0).expect("valid constants")
}

fn area_tolerance() -> Tolerance {
    Tolerance::absolute(1e-13).with_max_iter(1000)
}

/// Two charge levels `c ≤ d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargePair {
    c: f64,
    d: f64,
}

impl ChargePair {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::domain("c", c, "must lie in (0,1)"));
        }
        if !(d >= c && d < 1.0) {
            return Err(Error::domain("d", d, "must lie in [c, 1)"));
        }
        Ok(Self { c, d })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }
}

fn sparing_gamma(c: f64, p: &ModelParams) -> impl Fn(f64) -> f64 {
    let law = Law::Charge { c };
    let (lambda, kernel) = (p.lambda(), p.kernel());
    move |t| law.value(lambda * kernel.g(t))
}

/// `∫₀^θ (1 − e^{−λg(t)}) dt`.
fn uncovered_yield(theta: f64, p: &ModelParams) -> Result<f64> {
    let (lambda, kernel) = (p.lambda(), p.kernel());
    integrate(
        |t| -(-lambda * kernel.g(t)).exp_m1(),
        0.0,
        theta,
        area_tolerance(),
    )
}

fn loss_between(c: f64, d: f64, theta_d: f64, p: &ModelParams) -> Result<f64> {
    let (gc, gd) = (sparing_gamma(c, p), sparing_gamma(d, p));
    integrate(|t| gd(t) - gc(t), 0.0, theta_d, area_tolerance())
}

fn gain_between(c: f64, theta_d: f64, theta_c: f64, p: &ModelParams) -> Result<f64> {
    if theta_d > theta_c {
        return Err(Error::domain("theta_d", theta_d, "must not exceed theta_c"));
    }
    integrate(sparing_gamma(c, p), theta_d, theta_c, area_tolerance())
}

/// `A_L = ∫₀^{θ_d} (γ_d − γ_c) dt`.
pub fn incremental_loss(pair: ChargePair, p: &ModelParams) -> Result<f64> {
    let theta_d = theta_sparing_charge(pair.d, p)?;
    loss_between(pair.c, pair.d, theta_d, p)
}

/// `A_L` through the convex-combination form, `(d − c)∫₀^{θ_d}(1 − e^{−λg}) dt`.
pub fn incremental_loss_reduced(pair: ChargePair, p: &ModelParams) -> Result<f64> {
    let theta_d = theta_sparing_charge(pair.d, p)?;
    Ok((pair.d - pair.c) * uncovered_yield(theta_d, p)?)
}

/// `A_G = ∫_{θ_d}^{θ_c} γ_c dt`.
pub fn incremental_gain(pair: ChargePair, p: &ModelParams) -> Result<f64> {
    let theta_c = theta_sparing_charge(pair.c, p)?;
    let theta_d = theta_sparing_charge(pair.d, p)?;
    gain_between(pair.c, theta_d, theta_c, p)
}

/// `M(c) = ∫₀^{θ(c)} (1 − e^{−λg}) dt + γ_c(θ(c)) θ′(c)`.
pub fn mean_value_bracket(c: f64, p: &ModelParams) -> Result<f64> {
    let theta = theta_sparing_charge(c, p)?;
    let slope = theta_prime(c, p, THETA_PRIME_STEP)?;
    Ok(uncovered_yield(theta, p)? + sparing_gamma(c, p)(theta) * slope)
}

/// `c̲`: the sign change of [`mean_value_bracket`] on `(0, c̄)`, absent when there is none.
pub fn underline_c(p: &ModelParams) -> Result<Option<f64>> {
    let cb = c_bar(p)?;
    underline_c_below(p, cb)
}

fn underline_c_below(p: &ModelParams, cb: f64) -> Result<Option<f64>> {
    let margin = 2.0 * THETA_PRIME_STEP;
    let (lo, hi) = (margin, cb - margin);
    if hi <= lo {
        return Ok(None);
    }
    let xs: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let ms = xs
        .iter()
        .map(|&c| mean_value_bracket(c, p))
        .collect::<Result<Vec<_>>>()?;
    let Some(i) = (0..SCAN_POINTS - 1).find(|&i| (ms[i] > 0.0) != (ms[i + 1] > 0.0)) else {
        return Ok(None);
    };
    let f = |c: f64| mean_value_bracket(c, p).unwrap_or(f64::NAN);
    let tol = Tolerance::absolute(1e-12).with_max_iter(200);
    find_root(f, xs[i], xs[i + 1], tol).map(Some)
}

/// Where a charge level falls relative to the zone boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZoneLabel {
    /// Raising the charge reduces aggregate disclosure.
    DyeReduction,
    /// Raising the charge increases aggregate disclosure while sparing is still used.
    Goldilocks,
    /// Sparing is never optimal; the firm is candid throughout.
    CandidOnly,
}

impl ZoneLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DyeReduction => "dye-reduction",
            Self::Goldilocks => "goldilocks",
            Self::CandidOnly => "candid-only",
        }
    }
}

impl fmt::Display for ZoneLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `c̲` and `c̄` for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneBounds {
    pub c_bar: f64,
    pub c_under: Option<f64>,
}

impl ZoneBounds {
    pub fn compute(p: &ModelParams) -> Result<Self> {
        let cb = c_bar(p)?;
        Ok(Self {
            c_bar: cb,
            c_under: underline_c_below(p, cb)?,
        })
    }

    /// Ties go to the lower label: `c = c̲` is a reduction, `c = c̄` is Goldilocks.
    pub fn classify(&self, c: f64) -> ZoneLabel {
        match self.c_under {
            _ if c > self.c_bar => ZoneLabel::CandidOnly,
            Some(cu) if c <= cu => ZoneLabel::DyeReduction,
            _ => ZoneLabel::Goldilocks,
        }
    }
}

/// The zone of charge `c ∈ (0, 1]`. Without any switching regime every charge is candid-only.
pub fn classify(c: f64, p: &ModelParams) -> Result<ZoneLabel> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::domain("c", c, "must lie in (0,1]"));
    }
    match ZoneBounds::compute(p) {
        Ok(bounds) => Ok(bounds.classify(c)),
        Err(Error::NoSwitchingRegime { .. }) => Ok(ZoneLabel::CandidOnly),
        Err(e) => Err(e),
    }
}

/// One charge level of a [`ZoneReport`], compared against `d = c + pair_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneRow {
    pub c: f64,
    pub theta: Option<f64>,
    pub a_loss: Option<f64>,
    pub a_gain: Option<f64>,
    pub label: ZoneLabel,
    pub note: Option<String>,
}

/// Zone boundaries and a table of switching times and incremental areas over a charge grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneReport {
    pub c_bar: f64,
    pub c_under: Option<f64>,
    pub params: ModelParams,
    pub charge_step: f64,
    pub pair_step: f64,
    pub rows: Vec<ZoneRow>,
}

impl ZoneReport {
    /// Rows at `c = k·charge_step < 1`, each comparing `c` with `c + pair_step`.
    pub fn build(p: &ModelParams, charge_step: f64, pair_step: f64) -> Result<Self> {
        if !(charge_step > 0.0 && charge_step < 1.0) {
            return Err(Error::domain(
                "charge_step",
                charge_step,
                "must lie in (0,1)",
            ));
        }
        if !(0.0..1.0).contains(&pair_step) {
            return Err(Error::domain("pair_step", pair_step, "must lie in [0,1)"));
        }
        let bounds = ZoneBounds::compute(p)?;
        let count = ((1.0 - 1e-9) / charge_step).floor() as usize;
        let rows = (1..=count)
            .into_par_iter()
            .map(|k| zone_row(k as f64 * charge_step, pair_step, &bounds, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            c_bar: bounds.c_bar,
            c_under: bounds.c_under,
            params: *p,
            charge_step,
            pair_step,
            rows,
        })
    }

    pub fn bounds(&self) -> ZoneBounds {
        ZoneBounds {
            c_bar: self.c_bar,
            c_under: self.c_under,
        }
    }
}

fn switch_or_none(c: f64, p: &ModelParams) -> Result<Option<f64>> {
    match theta_sparing_charge(c, p) {
        Ok(theta) => Ok(Some(theta)),
        Err(Error::NoSwitch { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn zone_row(c: f64, pair_step: f64, bounds: &ZoneBounds, p: &ModelParams) -> Result<ZoneRow> {
    let mut row = ZoneRow {
        c,
        theta: None,
        a_loss: None,
        a_gain: None,
        label: bounds.classify(c),
        note: None,
    };
    if row.label == ZoneLabel::CandidOnly {
        return Ok(row);
    }
    let Some(theta_c) = switch_or_none(c, p)? else {
        row.label = ZoneLabel::CandidOnly;
        row.note = Some("no sparing-first switch found below c_bar".into());
        return Ok(row);
    };
    row.theta = Some(theta_c);

    let d = c + pair_step;
    let theta_d = if d < 1.0 { switch_or_none(d, p)? } else { None };
    let theta_d = theta_d.unwrap_or_else(|| {
        row.note = Some(format!("d={d:.6} is candid-only; theta_d taken as 0"));
        0.0
    });
    let d = d.min(1.0);
    row.a_loss = Some(loss_between(c, d, theta_d, p)?.max(0.0));
    row.a_gain = Some(gain_between(c, theta_d, theta_c, p)?.max(0.0));
    Ok(row)
}
