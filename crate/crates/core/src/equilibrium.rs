//! Model primitives, liability schedules and equilibrium trend values.
//!
//! A silent firm's valuation `γ_t` solves `γ′ = −λ γ (1 − ρ_t) h(t)` with
//! `γ₀ = 1`. Every schedule admits a closed form in the variable
//! `x = λ[g(t) − g(t₀)]` measured from the start `t₀` of the sparing segment:
//!
//! | schedule          | `γ` as a function of `x`         |
//! |-------------------|----------------------------------|
//! | `Zero`            | `e^{−x}`                         |
//! | `Constant(ρ)`     | `e^{−(1−ρ)x}`                    |
//! | `Charge(c)`       | `c + (1−c)e^{−x}`                |
//! | `SelfConsistent`  | `Charge(γ₁²)` with `γ₁ = 1/(e^{λg(1)} − 1)` |
//!
//! Under a charge the liability share is `ρ_t = c/γ_t`, so `(1 − ρ_t)γ_t = γ_t − c`
//! and the ODE becomes linear in `γ − c`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mathkit::Kernel;

/// The firm's primitives: observation intensity λ, volatility σ,
/// pay-for-performance ratio κ and penalty weight β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    lambda: f64,
    sigma: f64,
    kappa: f64,
    beta: f64,
}

impl ModelParams {
    /// `λ ≥ 0` (λ = 0 is the no-observation limit), `σ > 0`, `0 < κ < 1`, `β > 0`.
    pub fn new(lambda: f64, sigma: f64, kappa: f64, beta: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::domain("lambda", lambda, "must be finite and >= 0"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain("sigma", sigma, "must be finite and > 0"));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::domain("kappa", kappa, "must lie in (0,1)"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain("beta", beta, "must be finite and > 0"));
        }
        Ok(Self {
            lambda,
            sigma,
            kappa,
            beta,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `α = (1 − κ)β`.
    pub fn alpha(&self) -> f64 {
        (1.0 - self.kappa) * self.beta
    }

    pub fn kernel(&self) -> Kernel {
        Kernel::new(self.sigma).expect("sigma validated on construction")
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.sigma, self.kappa, self.beta)
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.lambda, sigma, self.kappa, self.beta)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.lambda, self.sigma, kappa, self.beta)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.lambda, self.sigma, self.kappa, beta)
    }

    /// `λ g(1)`.
    pub fn lambda_g1(&self) -> f64 {
        self.lambda * self.kernel().g1()
    }

    /// `λ h(0)`.
    pub fn lambda_h0(&self) -> f64 {
        self.lambda * self.kernel().h(0.0)
    }
}

/// The rule generating the liability share `ρ_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiabilitySchedule {
    /// No litigation.
    Zero,
    /// A fixed share `ρ ∈ [0, 1)`.
    Constant(f64),
    /// A time-invariant charge `c = ρ_t γ_t ∈ (0, 1)`.
    Charge(f64),
    /// The charge pinned by `ρ₁ = γ₁`.
    SelfConsistent,
}

impl LiabilitySchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Zero | Self::SelfConsistent => Ok(()),
            Self::Constant(rho) if (0.0..1.0).contains(&rho) => Ok(()),
            Self::Constant(rho) => Err(Error::domain("rho", rho, "must lie in [0,1)")),
            Self::Charge(c) if c > 0.0 && c < 1.0 => Ok(()),
            Self::Charge(c) => Err(Error::domain("charge", c, "must lie in (0,1)")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Constant(_) => "constant",
            Self::Charge(_) => "charge",
            Self::SelfConsistent => "selfconsistent",
        }
    }
}

impl fmt::Display for LiabilitySchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(rho) => write!(f, "constant({rho})"),
            Self::Charge(c) => write!(f, "charge({c})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Which pure mode is followed before the switching time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwitchRegime {
    CandidFirst,
    SparingFirst,
}

impl SwitchRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CandidFirst => "candid-first",
            Self::SparingFirst => "sparing-first",
        }
    }
}

impl fmt::Display for SwitchRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SwitchRegime {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "candid-first" => Ok(Self::CandidFirst),
            "sparing-first" => Ok(Self::SparingFirst),
            other => Err(format!(
                "unknown regime '{other}' (expected candid-first or sparing-first)"
            )),
        }
    }
}

/// The disclosure regime a [`TrendCurve`] was sampled under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Sparing,
    CandidFirst(f64),
    SparingFirst(f64),
}

impl Regime {
    pub fn switch(regime: SwitchRegime, theta: f64) -> Self {
        match regime {
            SwitchRegime::CandidFirst => Self::CandidFirst(theta),
            SwitchRegime::SparingFirst => Self::SparingFirst(theta),
        }
    }
}

/// Closed-form decay law of a sparing segment, as a function of `x = λ[g(t) − g(t₀)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Law {
    /// `e^{−scale·x}`, liability share `1 − scale`.
    Exp { scale: f64 },
    /// `c + (1−c)e^{−x}`, liability share `c/γ`.
    Charge { c: f64 },
}

impl Law {
    pub(crate) fn of(schedule: &LiabilitySchedule, p: &ModelParams) -> Result<Self> {
        schedule.validate()?;
        Ok(match *schedule {
            LiabilitySchedule::Zero => Law::Exp { scale: 1.0 },
            LiabilitySchedule::Constant(rho) => Law::Exp { scale: 1.0 - rho },
            LiabilitySchedule::Charge(c) => Law::Charge { c },
            LiabilitySchedule::SelfConsistent => {
                let g1 = gamma1_selfconsistent(p)?;
                Law::Charge { c: g1 * g1 }
            }
        })
    }

    pub(crate) fn value(&self, x: f64) -> f64 {
        match *self {
            Law::Exp { scale } => (-scale * x).exp(),
            Law::Charge { c } => c + (1.0 - c) * (-x).exp(),
        }
    }

    /// `ρ` at valuation `γ` on a sparing segment.
    pub(crate) fn share(&self, gamma: f64) -> f64 {
        match *self {
            Law::Exp { scale } => 1.0 - scale,
            Law::Charge { c } => c / gamma,
        }
    }

    /// `(1 − ρ)γ`, the rate at which `γ` declines per unit of `λh`.
    fn decline(&self, gamma: f64) -> f64 {
        match *self {
            Law::Exp { scale } => scale * gamma,
            Law::Charge { c } => gamma - c,
        }
    }
}

fn check_time(name: &'static str, t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::domain(name, t, "must lie in [0, 1]"))
    }
}

/// `γ₁ = 1/(e^{λg(1)} − 1)` for the self-consistent schedule `ρ₁ = γ₁`.
///
/// Requires `λg(1) > ln 2`; below it the formula exceeds one.
pub fn gamma1_selfconsistent(p: &ModelParams) -> Result<f64> {
    let lg1 = p.lambda_g1();
    if lg1 <= std::f64::consts::LN_2 {
        return Err(Error::InfeasibleSchedule { lambda_g1: lg1 });
    }
    Ok(1.0 / lg1.exp_m1())
}

/// The equilibrium trend value `γ_t` when sparing throughout.
pub fn trend_sparing(t: f64, p: &ModelParams, s: &LiabilitySchedule) -> Result<f64> {
    check_time("t", t)?;
    let law = Law::of(s, p)?;
    Ok(law.value(p.lambda() * p.kernel().g(t)))
}

/// The liability share `ρ_t` along the sparing path.
pub fn liability_share(s: &LiabilitySchedule, t: f64, p: &ModelParams) -> Result<f64> {
    check_time("t", t)?;
    let law = Law::of(s, p)?;
    let gamma = law.value(p.lambda() * p.kernel().g(t));
    Ok(law.share(gamma))
}

/// `γ_t` under a single switch at `θ`.
///
/// Sparing-first follows the sparing path up to `θ` and is flat afterwards.
/// Candid-first is flat at 1 up to `θ`, then the sparing dynamics restart from
/// `γ_θ = 1` so that `γ_t = law(λ[g(t) − g(θ)])`.
pub fn trend_with_switch(
    t: f64,
    theta: f64,
    regime: SwitchRegime,
    p: &ModelParams,
    s: &LiabilitySchedule,
) -> Result<f64> {
    check_time("t", t)?;
    check_time("theta", theta)?;
    let curve = SwitchedLaw::new(Regime::switch(regime, theta), p, s)?;
    Ok(curve.value(t))
}

/// A schedule's closed form bound to a regime, cheap to evaluate repeatedly.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SwitchedLaw {
    law: Law,
    regime: Regime,
    lambda: f64,
    kernel: Kernel,
}

impl SwitchedLaw {
    pub(crate) fn new(regime: Regime, p: &ModelParams, s: &LiabilitySchedule) -> Result<Self> {
        Ok(Self {
            law: Law::of(s, p)?,
            regime,
            lambda: p.lambda(),
            kernel: p.kernel(),
        })
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        let g = |u: f64| self.kernel.g(u);
        let x = match self.regime {
            Regime::Sparing => self.lambda * g(t),
            Regime::SparingFirst(theta) => self.lambda * g(t.min(theta)),
            Regime::CandidFirst(theta) if t <= theta => 0.0,
            Regime::CandidFirst(theta) => self.lambda * (g(t) - g(theta)),
        };
        self.law.value(x)
    }
}

/// A sampled equilibrium valuation path.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendCurve {
    regime: Regime,
    schedule: LiabilitySchedule,
    samples: Vec<(f64, f64)>,
    gamma1: f64,
}

impl TrendCurve {
    /// Samples the closed form on `grid` equally spaced points of `[0, 1]`.
    pub fn sample(
        p: &ModelParams,
        s: &LiabilitySchedule,
        regime: Regime,
        grid: usize,
    ) -> Result<Self> {
        check_grid(grid)?;
        if let Regime::CandidFirst(theta) | Regime::SparingFirst(theta) = regime {
            check_time("theta", theta)?;
        }
        let law = SwitchedLaw::new(regime, p, s)?;
        let samples = unit_grid(grid).map(|t| (t, law.value(t))).collect();
        Ok(Self {
            regime,
            schedule: *s,
            samples,
            gamma1: law.value(1.0),
        })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn schedule(&self) -> LiabilitySchedule {
        self.schedule
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// The terminal value `γ₁`, also the lower disclosure cutoff.
    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    /// Largest absolute difference in `γ` against another curve on the same grid.
    pub fn max_abs_diff(&self, other: &TrendCurve) -> Option<f64> {
        if self.samples.len() != other.samples.len() {
            return None;
        }
        Some(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| (a.1 - b.1).abs())
                .fold(0.0, f64::max),
        )
    }
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 2 {
        return Err(Error::domain("grid", grid as f64, "must be at least 2"));
    }
    Ok(())
}

fn unit_grid(grid: usize) -> impl Iterator<Item = f64> {
    let last = (grid - 1) as f64;
    (0..grid).map(move |i| i as f64 / last)
}

/// Substeps per grid interval for the oracle integrator.
const ODE_SUBSTEPS: usize = 8;

/// Fixed-step RK4 integration of `γ′ = −λ(1−ρ_t)γ h(t)`, `γ₀ = 1`, on the sparing path.
///
/// Integrates in `s = √(1−t)`, where `dγ/ds = 2λ s (1−ρ)γ h(1−s²)` is smooth up to
/// `t = 1` even though `h` has an infinite slope there. Intended as an oracle
/// for the closed forms; it knows only the schedule's definition of `ρ`.
pub fn trend_ode_oracle(p: &ModelParams, s: &LiabilitySchedule, grid: usize) -> Result<TrendCurve> {
    check_grid(grid)?;
    let law = Law::of(s, p)?;
    let kernel = p.kernel();
    let lambda = p.lambda();
    let rhs =
        |sv: f64, gamma: f64| 2.0 * lambda * sv * law.decline(gamma) * kernel.h(1.0 - sv * sv);

    let times: Vec<f64> = unit_grid(grid).collect();
    let mut samples = Vec::with_capacity(grid);
    let mut gamma = 1.0;
    samples.push((0.0, gamma));
    for w in times.windows(2) {
        let (s0, s1) = ((1.0 - w[0]).sqrt(), (1.0 - w[1]).max(0.0).sqrt());
        let step = (s1 - s0) / ODE_SUBSTEPS as f64;
        for k in 0..ODE_SUBSTEPS {
            let sv = s0 + k as f64 * step;
            let k1 = rhs(sv, gamma);
            let k2 = rhs(sv + 0.5 * step, gamma + 0.5 * step * k1);
            let k3 = rhs(sv + 0.5 * step, gamma + 0.5 * step * k2);
            let k4 = rhs(sv + step, gamma + step * k3);
            gamma += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !gamma.is_finite() {
                return Err(Error::StepFailure { t: 1.0 - sv * sv });
            }
        }
        samples.push((w[1], gamma));
    }
    Ok(TrendCurve {
        regime: Regime::Sparing,
        schedule: *s,
        samples,
        gamma1: gamma,
    })
}
