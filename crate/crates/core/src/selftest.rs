//! End-to-end numerical checks of the library against independent oracles.
//!
//! Each check returns a [`CheckReport`]; [`run_all`] runs them in order.
//! The oracles here deliberately avoid the code paths they check: the ODE
//! integrator instead of the closed forms, quadrature instead of the
//! antiderivative, a fine-grid Brownian walk instead of the reflection law,
//! and brute-force area scans instead of the derivative condition.

use std::time::{Duration, Instant};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::equilibrium::{
    trend_ode_oracle, trend_with_switch, LiabilitySchedule, ModelParams, Regime, SwitchRegime,
    TrendCurve,
};
use crate::error::Result;
use crate::mathkit::{antiderivative_half_h, integrate, normal_pdf, Kernel, Tolerance};
use crate::stochastic::{
    lambda_grid, mills_ratio_bc, min_cdf_drifted, scienter_curve, scienter_prob_closed,
    scienter_prob_mc, stream_rng, SimConfig,
};
use crate::switching::{
    c_bar, charge_quadratic, theta, theta_candid_first, theta_sparing_charge, theta_sparing_first,
    Corner,
};
use crate::valuation::{call_value, nondisclosure_gap};
use crate::zone::{
    incremental_gain, incremental_loss, mean_value_bracket, reference_params, underline_c,
    ChargePair,
};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckReport {
    /// `PASS [ 3] name: detail (0.12 s)`.
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: [(u8, &str, Check); 11] = [
    (1, "closed form vs ODE", closed_form_vs_ode),
    (2, "g antiderivative", g_identity),
    (3, "nondisclosure gap and parity", gap_and_parity),
    (4, "litigation orderings of theta", theta_orderings),
    (5, "no-litigation boundary switches", boundary_switches),
    (6, "charge ceiling c_bar", charge_ceiling),
    (7, "legal-consistency zone", consistency_zone),
    (8, "mean-value identity", mean_value_identity),
    (9, "stochastic layer", stochastic_layer),
    (10, "Mills ratio", mills_ratio),
    (
        11,
        "constant-share terminal values",
        constant_share_terminal,
    ),
];

/// Identifiers and names of all checks, in run order.
pub fn checks() -> impl Iterator<Item = (u8, &'static str)> {
    CHECKS.iter().map(|&(id, name, _)| (id, name))
}

/// Runs check `id`, or returns `None` for an unknown id.
pub fn run(id: u8) -> Option<CheckReport> {
    CHECKS.iter().find(|c| c.0 == id).map(|&(id, name, check)| {
        let start = Instant::now();
        let (passed, detail) = match check() {
            Ok(outcome) => outcome,
            Err(e) => (false, format!("error: {e}")),
        };
        CheckReport {
            id,
            name,
            passed,
            detail,
            elapsed: start.elapsed(),
        }
    })
}

pub fn run_all() -> Vec<CheckReport> {
    checks().filter_map(|(id, _)| run(id)).collect()
}

fn params(lambda: f64, sigma: f64, kappa: f64, beta: f64) -> Result<ModelParams> {
    ModelParams::new(lambda, sigma, kappa, beta)
}

fn closed_form_vs_ode() -> Result<(bool, String)> {
    let start = Instant::now();
    let schedules = [
        LiabilitySchedule::Zero,
        LiabilitySchedule::Constant(0.3),
        LiabilitySchedule::Charge(0.2),
    ];
    let mut worst: f64 = 0.0;
    for s in &schedules {
        for lambda in [2.0, 3.0] {
            for sigma in [3.0, 4.0] {
                let p = params(lambda, sigma, 0.7, 1.0)?;
                let ode = trend_ode_oracle(&p, s, 401)?;
                let closed = TrendCurve::sample(&p, s, Regime::Sparing, 401)?;
                worst = worst.max(ode.max_abs_diff(&closed).unwrap_or(f64::INFINITY));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = worst <= 1e-7 && elapsed < 1.0;
    Ok((
        passed,
        format!("max |closed - ode| = {worst:.2e} (<= 1e-7), {elapsed:.3} s (< 1 s)"),
    ))
}

fn g_identity() -> Result<(bool, String)> {
    let tol = Tolerance::absolute(1e-13);
    let (mut worst_q, mut worst_d): (f64, f64) = (0.0, 0.0);
    for sigma in [0.5, 1.0, 2.0, 3.0, 4.0] {
        let k = Kernel::new(sigma)?;
        let a = 0.5 * sigma;
        for i in 1..=10 {
            let t = i as f64 / 10.0;
            let quad = integrate(|u| k.h(u), 0.0, t, tol)?;
            worst_q = worst_q.max((2.0 * antiderivative_half_h(t, a) - quad).abs());
            let tm = t - 0.05;
            let step = 1e-5;
            let slope = (antiderivative_half_h(tm + step, a) - antiderivative_half_h(tm - step, a))
                / (2.0 * step);
            worst_d = worst_d.max((slope - 0.5 * k.h(tm)).abs());
        }
    }
    let passed = worst_q <= 1e-9 && worst_d <= 1e-6;
    Ok((
        passed,
        format!("50 pairs: max |2H - quad| = {worst_q:.2e} (<= 1e-9), max |dH/dt - h/2| = {worst_d:.2e} (<= 1e-6)"),
    ))
}

/// `E[(K − Y_T)⁺]` by quadrature over the Gaussian driver of the lognormal.
fn put_by_quadrature(y: f64, strike: f64, ttm: f64, sigma: f64) -> Result<f64> {
    let vol = sigma * ttm.sqrt();
    let z_star = ((strike / y).ln() + 0.5 * vol * vol) / vol;
    let payoff = |z: f64| (strike - y * (vol * z - 0.5 * vol * vol).exp()).max(0.0) * normal_pdf(z);
    integrate(
        payoff,
        z_star.min(0.0) - 40.0,
        z_star,
        Tolerance::absolute(1e-15),
    )
}

fn gap_and_parity() -> Result<(bool, String)> {
    let (gamma1, sigma) = (0.5, 3.0);
    let mut min_gap = f64::INFINITY;
    for i in 0..20 {
        let y = gamma1 * (i as f64 + 1.0) / 21.0;
        for j in 0..20 {
            let t = j as f64 / 20.0;
            for rho in [0.1, 0.5, 0.9] {
                min_gap = min_gap.min(nondisclosure_gap(y, t, rho, gamma1, sigma)?);
            }
        }
    }
    let mut parity: f64 = 0.0;
    for y in [0.1, 0.3, 0.5, 0.8, 1.5] {
        for strike in [0.2, 0.5, 1.0] {
            for ttm in [0.1, 0.5, 1.0] {
                let call = call_value(y, strike, ttm, sigma)?;
                let put = put_by_quadrature(y, strike, ttm, sigma)?;
                parity = parity.max((put + y - call - strike).abs());
            }
        }
    }
    let passed = min_gap > 0.0 && parity <= 1e-12;
    Ok((
        passed,
        format!("min gap over 20x20x3 grid = {min_gap:.3e} (> 0), parity residual vs quadrature = {parity:.2e} (<= 1e-12)"),
    ))
}

fn theta_orderings() -> Result<(bool, String)> {
    let (sigma, kappa) = (3.0, 0.7);
    let bound = (1.0 / kappa - 1.0) / Kernel::new(sigma)?.h(0.0);
    let lambdas = [bound * 1.001, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0];
    let charge = LiabilitySchedule::Charge(0.2);
    let (mut ok, mut worst_res): (bool, f64) = (true, 0.0);
    let mut failures = Vec::new();
    for lambda in lambdas {
        let p = params(lambda, sigma, kappa, 1.0)?;
        let cz = theta_candid_first(&p, &LiabilitySchedule::Zero)?;
        let cc = theta_candid_first(&p, &charge)?;
        let sz = theta_sparing_first(&p, &LiabilitySchedule::Zero)?;
        let sc = theta_sparing_first(&p, &charge)?;
        // Below the candid-first bound neither schedule switches; both sit at the θ = 1 corner.
        // Above it a charge corner at θ = 1 still orders above the interior no-litigation θ.
        let candid_ok = if cz.exists {
            cc.theta > cz.theta
        } else {
            cc.corner == Some(Corner::End) && cz.corner == Some(Corner::End)
        };
        let sparing_ok = sc.theta < sz.theta;
        if !(candid_ok && sparing_ok) {
            ok = false;
            failures.push(format!("lambda={lambda:.3}"));
        }
        for sol in [cz, cc, sz, sc] {
            if sol.exists {
                worst_res = worst_res.max(sol.foc_residual.abs());
            }
        }
    }
    let passed = ok && worst_res <= 1e-8;
    let detail = if failures.is_empty() {
        format!(
            "orderings hold at {} lambdas, max FOC residual = {worst_res:.2e} (<= 1e-8)",
            lambdas.len()
        )
    } else {
        format!("ordering fails at {}", failures.join(", "))
    };
    Ok((passed, detail))
}

fn boundary_switches() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for sigma in [3.0, 4.0] {
        let kappa: f64 = 0.7;
        let k = Kernel::new(sigma)?;
        let sparing = params((1.0 / kappa - 1.0) / k.h(0.0), sigma, kappa, 1.0)?;
        worst = worst.max(
            theta_sparing_first(&sparing, &LiabilitySchedule::Zero)?
                .theta
                .abs(),
        );
        let candid = params(-kappa.ln() / k.g1(), sigma, kappa, 1.0)?;
        worst =
            worst.max((theta_candid_first(&candid, &LiabilitySchedule::Zero)?.theta - 1.0).abs());
    }
    Ok((
        worst <= 1e-6,
        format!("max |theta - boundary| = {worst:.2e} (<= 1e-6)"),
    ))
}

fn charge_ceiling() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut cases = 0;
    for sigma in [3.0, 4.0] {
        for lambda in [1.0, 2.0, 3.0, 5.0] {
            let p = params(lambda, sigma, 0.7, 1.0)?;
            if p.lambda_h0() <= 1.0 / p.kappa() - 1.0 {
                continue;
            }
            cases += 1;
            let signs = charge_quadratic(0.0, &p)? > 0.0 && charge_quadratic(1.0, &p)? < 0.0;
            let cb = c_bar(&p)?;
            let below = theta_sparing_first(&p, &LiabilitySchedule::Charge(cb - 1e-3))?.exists;
            let above = cb + 1e-3 >= 1.0
                || !theta_sparing_first(&p, &LiabilitySchedule::Charge(cb + 1e-3))?.exists;
            if !(signs && below && above) {
                ok = false;
                notes.push(format!("lambda={lambda} sigma={sigma}"));
            }
        }
    }
    let base = reference_params();
    let bars = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&b| c_bar(&base.with_beta(b)?))
        .collect::<Result<Vec<_>>>()?;
    let increasing = bars.windows(2).all(|w| w[1] > w[0]);
    let passed = ok && increasing && cases > 0;
    let detail = format!(
        "{cases} configurations: signs and existence {}; c_bar(beta) = [{}] {}",
        if ok {
            "hold".to_string()
        } else {
            format!("fail at {}", notes.join(", "))
        },
        bars.iter()
            .map(|b| format!("{b:.4}"))
            .collect::<Vec<_>>()
            .join(", "),
        if increasing {
            "increasing"
        } else {
            "NOT increasing"
        }
    );
    Ok((passed, detail))
}

/// `A_L − A_G` for the pair `(c, c + dc)` at each grid charge whose pair stays below `c̄`.
fn area_scan(p: &ModelParams, dc: f64) -> Result<Vec<(f64, f64)>> {
    let cb = c_bar(p)?;
    let count = ((cb - dc) / dc).floor() as usize;
    (1..=count)
        .into_par_iter()
        .map(|k| k as f64 * dc)
        .filter(|&c| c + dc < cb)
        .map(|c| {
            let pair = ChargePair::new(c, c + dc)?;
            Ok((c, incremental_loss(pair, p)? - incremental_gain(pair, p)?))
        })
        .collect()
}

fn consistency_zone() -> Result<(bool, String)> {
    let start = Instant::now();
    let dc = 0.01;
    let p = reference_params();
    let t2 = theta_sparing_charge(0.2, &p)?;
    let t3 = theta_sparing_charge(0.3, &p)?;
    let pair = ChargePair::new(0.2, 0.3)?;
    let (loss, gain) = (incremental_loss(pair, &p)?, incremental_gain(pair, &p)?);
    let pair_ok = t3 < t2 && loss > 0.0 && gain > 0.0;
    let mut detail =
        format!("beta=1: theta(0.3)={t3:.4} < theta(0.2)={t2:.4}, A_L={loss:.3e}, A_G={gain:.3e}");

    let mut zone_ok = true;
    let mut absent_seen = false;
    let mut present_seen = false;
    for beta in [1.0, 32.0] {
        let p = p.with_beta(beta)?;
        let scan = area_scan(&p, dc)?;
        match underline_c(&p)? {
            None => {
                absent_seen = true;
                let all_gain = scan.iter().all(|&(_, diff)| diff < 0.0);
                zone_ok &= all_gain;
                detail += &format!(
                    "; beta={beta}: underline c absent, A_G > A_L at {} of {} grid charges",
                    scan.iter().filter(|&&(_, d)| d < 0.0).count(),
                    scan.len()
                );
            }
            Some(cu) => {
                present_seen = true;
                let cell = scan
                    .windows(2)
                    .find(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0))
                    .map(|w| (w[0].0, w[1].0));
                match cell {
                    Some((lo, hi)) => {
                        let distance = if cu < lo {
                            lo - cu
                        } else if cu > hi {
                            cu - hi
                        } else {
                            0.0
                        };
                        zone_ok &= distance <= dc;
                        detail += &format!(
                            "; beta={beta}: underline c = {cu:.4}, scan crossing in [{lo:.2}, {hi:.2}]"
                        );
                    }
                    None => {
                        zone_ok = false;
                        detail += &format!(
                            "; beta={beta}: underline c = {cu:.4} but the scan shows no crossing"
                        );
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    detail += &format!(", {elapsed:.1} s (< 30 s)");
    let passed = pair_ok && zone_ok && absent_seen && present_seen && elapsed < 30.0;
    Ok((passed, detail))
}

fn mean_value_identity() -> Result<(bool, String)> {
    let p = reference_params();
    let c = 0.2;
    let m = mean_value_bracket(c, &p)?;
    let errs = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dc| {
            let pair = ChargePair::new(c, c + dc)?;
            let diff = incremental_loss(pair, &p)? - incremental_gain(pair, &p)?;
            Ok((diff / dc - m).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = errs[1] < errs[0] && errs[2] < errs[1] && errs[2] < 0.5 * errs[0];
    Ok((
        passed,
        format!(
            "M(0.2) = {m:.5e}; |(A_L - A_G)/dc - M| = {:.2e}, {:.2e}, {:.2e} for dc = 4e-3, 2e-3, 1e-3",
            errs[0], errs[1], errs[2]
        ),
    ))
}

/// `P[min (μτ + W_τ) ≤ a]` from exact Gaussian steps on a fine grid, with the
/// Brownian-bridge crossing probability between grid points taken in expectation.
/// Returns the mean and its standard error.
fn min_cdf_walk(a: f64, mu: f64, t: f64, steps: usize, paths: usize, seed: u64) -> (f64, f64) {
    const CHUNK: usize = 1000;
    let dt = t / steps as f64;
    let sd = dt.sqrt();
    let chunks = paths.div_ceil(CHUNK);
    let (sum, sq) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk as u64);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..CHUNK.min(paths - chunk * CHUNK) {
                let (mut x, mut survive) = (0.0f64, 1.0f64);
                for _ in 0..steps {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let next = x + mu * dt + sd * z;
                    if next <= a {
                        survive = 0.0;
                        break;
                    }
                    let exponent = -2.0 * (x - a) * (next - a) / dt;
                    if exponent > -40.0 {
                        survive *= -exponent.exp_m1();
                    }
                    x = next;
                }
                let v = 1.0 - survive;
                sum += v;
                sq += v * v;
            }
            (sum, sq)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = paths as f64;
    let mean = sum / n;
    (mean, ((sq / n - mean * mean).max(0.0) / n).sqrt())
}

fn stochastic_layer() -> Result<(bool, String)> {
    let start = Instant::now();
    let exact_one = [(-1.5, 1.0), (0.0, 0.3), (2.0, 4.0)]
        .iter()
        .map(|&(mu, t)| min_cdf_drifted(0.0, mu, t))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .all(|&v| v == 1.0);

    let mut walk_ok = true;
    let mut walk_notes = Vec::new();
    for (i, &(mu, a, t)) in [(-1.5, -0.8, 1.0), (-1.0, -0.5, 1.0), (-0.5, -1.0, 2.0)]
        .iter()
        .enumerate()
    {
        let closed = min_cdf_drifted(a, mu, t)?;
        let (mc, se) = min_cdf_walk(a, mu, t, 10_000, 100_000, 1000 + i as u64);
        let z = (mc - closed) / se;
        walk_ok &= z.abs() <= 3.0;
        walk_notes.push(format!("{z:+.2}"));
    }

    let base = params(1.0, 3.0, 0.7, 1.0)?;
    let mut dominated = true;
    let mut points = 0;
    let mut worst_z = f64::NEG_INFINITY;
    for mode in [SwitchRegime::SparingFirst, SwitchRegime::CandidFirst] {
        let cfg = SimConfig::new(100_000, 42, mode, base)?;
        for pt in scienter_curve(&cfg, &lambda_grid(mode, &base))? {
            points += 1;
            if pt.mc.stderr > 0.0 {
                worst_z = worst_z.max((pt.mc.estimate - pt.closed) / pt.mc.stderr);
            }
            dominated &= pt.mc.estimate <= pt.closed + 3.0 * pt.mc.stderr;
        }
    }

    let far = base.with_lambda(50.0)?;
    let mut tail: f64 = 0.0;
    for mode in [SwitchRegime::SparingFirst, SwitchRegime::CandidFirst] {
        tail = tail.max(scienter_prob_closed(mode, &far)?);
        tail = tail.max(scienter_prob_mc(&SimConfig::new(100_000, 42, mode, far)?)?.estimate);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = exact_one && walk_ok && dominated && tail <= 0.02 && elapsed < 60.0;
    Ok((
        passed,
        format!(
            "min law at a=0 exact: {exact_one}; walk z-scores [{}]; MC <= closed + 3 se at {points} lambdas (max z {worst_z:+.2}); max at lambda=50: {tail:.2e} (<= 0.02); {elapsed:.1} s (< 60 s)",
            walk_notes.join(", ")
        ),
    ))
}

fn mills_ratio() -> Result<(bool, String)> {
    let sigma = 3.0;
    let g1 = Kernel::new(sigma)?.g1();
    let at_one = mills_ratio_bc(&params(0.5 * sigma * sigma / g1, sigma, 0.7, 1.0)?);
    let by_lambda = [1.0, 2.0, 4.0]
        .iter()
        .map(|&l| Ok(mills_ratio_bc(&params(l, sigma, 0.7, 1.0)?)))
        .collect::<Result<Vec<_>>>()?;
    let by_sigma = [2.0, 3.0, 4.0]
        .iter()
        .map(|&s| Ok(mills_ratio_bc(&params(2.0, s, 0.7, 1.0)?)))
        .collect::<Result<Vec<_>>>()?;
    let dec = by_lambda.windows(2).all(|w| w[1] < w[0]);
    let inc = by_sigma.windows(2).all(|w| w[1] > w[0]);
    let passed = (at_one - 1.0).abs() <= 1e-12 && dec && inc;
    Ok((
        passed,
        format!(
            "ratio at lambda g(1)/sigma = sigma/2: {at_one:.15}; lambda in {{1,2,4}}: {by_lambda:.4?}; sigma in {{2,3,4}}: {by_sigma:.4?}"
        ),
    ))
}

fn constant_share_terminal() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for lambda in [2.0, 3.0, 5.0] {
        let p = params(lambda, 3.0, 0.7, 1.0)?;
        for regime in [SwitchRegime::CandidFirst, SwitchRegime::SparingFirst] {
            let terminal = |rho: f64| -> Result<f64> {
                let s = LiabilitySchedule::Constant(rho);
                let sol = theta(regime, &p, &s)?;
                trend_with_switch(1.0, sol.theta, regime, &p, &s)
            };
            let (lo, hi) = (terminal(0.2)?, terminal(0.4)?);
            ok &= lo < hi;
            notes.push(format!("lambda={lambda} {regime}: {lo:.4} < {hi:.4}"));
        }
    }
    Ok((ok, notes.join("; ")))
}
