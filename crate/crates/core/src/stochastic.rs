//! Extreme-value laws of drifted Brownian motion and scienter probabilities.
//!
//! In log-signal units a silent firm's signal is `X_τ = μτ + W_τ` with
//! `μ = −σ/2`, and the withheld signal sits below the damages threshold when
//! `X` falls under `a = −λ[g(end) − g(start)]/σ` over the sparing window. The
//! closed form assumes continuous monitoring. The Monte Carlo estimator
//! observes `X` only at the Poisson arrival times of private information, so
//! it is dominated by the closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::equilibrium::{LiabilitySchedule, ModelParams, SwitchRegime};
use crate::error::{Error, Result};
use crate::mathkit::{log_normal_cdf, normal_cdf};
use crate::switching::{theta_candid_first, theta_sparing_first, Corner};

/// Samples drawn from one RNG stream.
pub const CHUNK_SIZE: usize = 4096;

fn horizon(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("T", t, "must be finite and > 0"))
    }
}

/// `P[min_{τ≤T} (μτ + W_τ) ≤ a]` for `a ≤ 0`.
pub fn min_cdf_drifted(a: f64, mu: f64, t: f64) -> Result<f64> {
    if a.is_nan() || a > 0.0 {
        return Err(Error::domain("a", a, "must be <= 0"));
    }
    horizon(t)?;
    if a == 0.0 {
        return Ok(1.0);
    }
    let root = t.sqrt();
    let direct = normal_cdf((a - mu * t) / root);
    let reflected = (2.0 * mu * a + log_normal_cdf((a + mu * t) / root)).exp();
    Ok((direct + reflected).clamp(0.0, 1.0))
}

/// `P[max_{τ≤T} (μτ + W_τ) ≤ a]` for `a ≥ 0`.
pub fn max_cdf_drifted(a: f64, mu: f64, t: f64) -> Result<f64> {
    if a.is_nan() || a < 0.0 {
        return Err(Error::domain("a", a, "must be >= 0"));
    }
    horizon(t)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    let root = t.sqrt();
    let direct = normal_cdf((a - mu * t) / root);
    let reflected = (2.0 * mu * a + log_normal_cdf((-a - mu * t) / root)).exp();
    Ok((direct - reflected).clamp(0.0, 1.0))
}

/// Ratio of silent firms ending below to those ending above `γ₁`,
/// `Φ(σ/2 − λg(1)/σ) / Φ(λg(1)/σ − σ/2)`.
pub fn mills_ratio_bc(p: &ModelParams) -> f64 {
    let x = p.lambda_g1() / p.sigma() - 0.5 * p.sigma();
    (log_normal_cdf(-x) - log_normal_cdf(x)).exp()
}

/// Minimum of `μτ + W_τ` over the arrivals of a rate-λ Poisson process on `[0, T]`.
///
/// `None` when no arrival occurs, or when `λT` is not a usable Poisson mean.
pub fn poisson_min_sample<R: Rng + ?Sized>(
    mu: f64,
    t: f64,
    lambda: f64,
    rng: &mut R,
) -> Option<f64> {
    let count = Poisson::new(lambda * t).ok()?.sample(rng) as usize;
    if count == 0 {
        return None;
    }
    let mut arrivals: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * t).collect();
    arrivals.sort_by(f64::total_cmp);
    Some(walk_minimum(mu, 0.0, 0.0, &arrivals, rng))
}

/// Running minimum of the walk started at `(t0, x0)` and observed at `times`.
fn walk_minimum<R: Rng + ?Sized>(mu: f64, t0: f64, x0: f64, times: &[f64], rng: &mut R) -> f64 {
    let (mut last, mut x, mut low) = (t0, x0, f64::INFINITY);
    for &tau in times {
        let dt = tau - last;
        let z: f64 = StandardNormal.sample(rng);
        x += mu * dt + dt.sqrt() * z;
        low = low.min(x);
        last = tau;
    }
    low
}

/// The same minimum conditional on at least one arrival.
fn conditional_min_sample<R: Rng + ?Sized>(mu: f64, t: f64, lambda: f64, rng: &mut R) -> f64 {
    // First arrival from the exponential law truncated to [0, T], the rest a Poisson process after it.
    let mass = -(-lambda * t).exp_m1();
    let u: f64 = rng.random();
    let first = (-(-u * mass).ln_1p() / lambda).min(t);
    let z: f64 = StandardNormal.sample(rng);
    let x = mu * first + first.sqrt() * z;
    let rest = lambda * (t - first);
    let count = if rest > 0.0 {
        Poisson::new(rest).map_or(0, |d| d.sample(rng) as usize)
    } else {
        0
    };
    let mut arrivals: Vec<f64> = (0..count)
        .map(|_| first + rng.random::<f64>() * (t - first))
        .collect();
    arrivals.sort_by(f64::total_cmp);
    x.min(walk_minimum(mu, first, x, &arrivals, rng))
}

/// How the Poisson factor `1 − e^{−λT}` enters a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Draws without arrivals count as non-events.
    #[default]
    Direct,
    /// Sample conditional on an arrival and multiply by `1 − e^{−λT}`.
    Conditional,
}

/// Inputs of a scienter simulation. The liability schedule is `Zero`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    samples: usize,
    seed: u64,
    mode: SwitchRegime,
    params: ModelParams,
    estimator: Estimator,
}

impl SimConfig {
    pub fn new(samples: usize, seed: u64, mode: SwitchRegime, params: ModelParams) -> Result<Self> {
        if samples == 0 {
            return Err(Error::domain("samples", 0.0, "must be at least 1"));
        }
        Ok(Self {
            samples,
            seed,
            mode,
            params,
            estimator: Estimator::Direct,
        })
    }

    pub fn with_estimator(self, estimator: Estimator) -> Self {
        Self { estimator, ..self }
    }

    pub fn with_params(self, params: ModelParams) -> Self {
        Self { params, ..self }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> SwitchRegime {
        self.mode
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }
}

/// A Monte Carlo probability with its sample-proportion standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// The RNG for stream `stream` of a seeded run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Counts `hit` over `samples` draws split into fixed chunks, one RNG stream per chunk.
///
/// The total is independent of how rayon schedules the chunks.
pub fn count_hits<F>(samples: usize, seed: u64, hit: F) -> usize
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let chunks = samples.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk as u64);
            let n = CHUNK_SIZE.min(samples - chunk * CHUNK_SIZE);
            (0..n).filter(|_| hit(&mut rng)).count()
        })
        .sum()
}

/// Smallest λ at which the regime's switching time exists with the `Zero` schedule.
pub fn lambda_lower_bound(mode: SwitchRegime, p: &ModelParams) -> f64 {
    let k = p.kernel();
    match mode {
        SwitchRegime::SparingFirst => (1.0 / p.kappa() - 1.0) / k.h(0.0),
        SwitchRegime::CandidFirst => -p.kappa().ln() / k.g1(),
    }
}

/// Default λ grid: 100 points 1/8 apart (sparing-first) or 10 points 1 apart
/// (candid-first), starting at the admissibility bound.
pub fn lambda_grid(mode: SwitchRegime, p: &ModelParams) -> Vec<f64> {
    let start = lambda_lower_bound(mode, p);
    let (count, spacing) = match mode {
        SwitchRegime::SparingFirst => (100, 0.125),
        SwitchRegime::CandidFirst => (10, 1.0),
    };
    (0..count).map(|k| start + spacing * k as f64).collect()
}

/// The sparing window length `T` and threshold `a` of the scienter event.
pub fn scienter_window(mode: SwitchRegime, p: &ModelParams) -> Result<(f64, f64)> {
    let schedule = LiabilitySchedule::Zero;
    let k = p.kernel();
    let (lambda, sigma) = (p.lambda(), p.sigma());
    match mode {
        SwitchRegime::SparingFirst => {
            let sol = theta_sparing_first(p, &schedule)?;
            if sol.corner == Some(Corner::Start) {
                return Err(Error::domain(
                    "lambda",
                    lambda,
                    "must be >= (1/kappa - 1)/h(0) for a sparing-first switch",
                ));
            }
            Ok((sol.theta, -lambda * k.g(sol.theta) / sigma))
        }
        SwitchRegime::CandidFirst => {
            let sol = theta_candid_first(p, &schedule)?;
            if sol.corner == Some(Corner::End) {
                return Err(Error::domain(
                    "lambda",
                    lambda,
                    "must be >= -ln(kappa)/g(1) for a candid-first switch",
                ));
            }
            Ok((1.0 - sol.theta, -lambda * (k.g1() - k.g(sol.theta)) / sigma))
        }
    }
}

/// Probability that a signal observed at a Poisson arrival in the sparing window
/// lies below the damages threshold, under continuous monitoring of the minimum.
pub fn scienter_prob_closed(mode: SwitchRegime, p: &ModelParams) -> Result<f64> {
    let (t, a) = scienter_window(mode, p)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let arrival = -(-p.lambda() * t).exp_m1();
    Ok(min_cdf_drifted(a.min(0.0), -0.5 * p.sigma(), t)? * arrival)
}

/// Monte Carlo estimate of the scienter probability under Poisson monitoring.
pub fn scienter_prob_mc(cfg: &SimConfig) -> Result<SimResult> {
    let p = cfg.params;
    let (t, a) = scienter_window(cfg.mode, &p)?;
    let n = cfg.samples;
    let done = |estimate: f64, stderr: f64| SimResult {
        estimate,
        stderr,
        samples: n,
        seed: cfg.seed,
    };
    if t <= 0.0 {
        return Ok(done(0.0, 0.0));
    }
    let (mu, lambda) = (-0.5 * p.sigma(), p.lambda());
    let proportion = |hits: usize| hits as f64 / n as f64;
    let se = |q: f64| (q * (1.0 - q) / n as f64).sqrt();
    Ok(match cfg.estimator {
        Estimator::Direct => {
            let hits = count_hits(n, cfg.seed, |rng| {
                poisson_min_sample(mu, t, lambda, rng).is_some_and(|m| m < a)
            });
            let q = proportion(hits);
            done(q, se(q))
        }
        Estimator::Conditional => {
            let hits = count_hits(n, cfg.seed, |rng| {
                conditional_min_sample(mu, t, lambda, rng) < a
            });
            let q = proportion(hits);
            let arrival = -(-lambda * t).exp_m1();
            done(arrival * q, arrival * se(q))
        }
    })
}

/// One λ of a scienter curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScienterPoint {
    pub lambda: f64,
    pub mc: SimResult,
    pub closed: f64,
}

/// Monte Carlo and closed-form scienter probabilities over `lambdas`.
pub fn scienter_curve(cfg: &SimConfig, lambdas: &[f64]) -> Result<Vec<ScienterPoint>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let cfg = cfg.with_params(cfg.params.with_lambda(lambda)?);
            Ok(ScienterPoint {
                lambda,
                mc: scienter_prob_mc(&cfg)?,
                closed: scienter_prob_closed(cfg.mode, &cfg.params)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn params(lambda: f64, sigma: f64) -> ModelParams {
        ModelParams::new(lambda, sigma, 0.7, 1.0).unwrap()
    }

    /// Exact-increment walk on a fine grid with the Brownian-bridge crossing
    /// probability between grid points folded in as a conditional expectation.
    fn min_cdf_bridge_mc(
        a: f64,
        mu: f64,
        t: f64,
        steps: usize,
        paths: usize,
        seed: u64,
    ) -> (f64, f64) {
        let dt = t / steps as f64;
        let (mut sum, mut sq) = (0.0, 0.0);
        let mut rng = stream_rng(seed, 0);
        for _ in 0..paths {
            let (mut x, mut survive) = (0.0f64, 1.0f64);
            for _ in 0..steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                let next = x + mu * dt + dt.sqrt() * z;
                if next <= a {
                    survive = 0.0;
                    break;
                }
                let exponent = -2.0 * (x - a) * (next - a) / dt;
                if exponent > -40.0 {
                    survive *= 1.0 - exponent.exp();
                }
                x = next;
            }
            let v = 1.0 - survive;
            sum += v;
            sq += v * v;
        }
        let mean = sum / paths as f64;
        (
            mean,
            ((sq / paths as f64 - mean * mean).max(0.0) / paths as f64).sqrt(),
        )
    }

    #[test]
    fn min_law_examples() {
        assert_eq!(min_cdf_drifted(0.0, -1.5, 1.0).unwrap(), 1.0);
        assert!((min_cdf_drifted(-1.0, 0.0, 1.0).unwrap() - 2.0 * normal_cdf(-1.0)).abs() < 1e-15);
        let (mc, se) = min_cdf_bridge_mc(-0.8, -1.5, 1.0, 1000, 20_000, 3);
        assert!((min_cdf_drifted(-0.8, -1.5, 1.0).unwrap() - mc).abs() <= 3.0 * se + 1e-3);
        assert!(min_cdf_drifted(0.1, 0.0, 1.0).is_err());
        assert!(min_cdf_drifted(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn max_law_examples() {
        assert_eq!(max_cdf_drifted(0.0, 0.5, 1.0).unwrap(), 0.0);
        // max of μτ + W_τ ≤ a  ⇔  min of the mirrored walk > −a
        let (mc, se) = min_cdf_bridge_mc(-1.0, -0.5, 1.0, 1000, 20_000, 5);
        assert!((max_cdf_drifted(1.0, 0.5, 1.0).unwrap() - (1.0 - mc)).abs() <= 3.0 * se + 1e-3);
        assert!(max_cdf_drifted(-0.1, 0.0, 1.0).is_err());
        for &a in &[0.1, 0.5, 2.0] {
            for &mu in &[-1.0, 0.0, 0.7] {
                for &t in &[0.3, 1.0, 4.0] {
                    let lhs = max_cdf_drifted(a, mu, t).unwrap();
                    let rhs = 1.0 - min_cdf_drifted(-a, -mu, t).unwrap();
                    assert!((lhs - rhs).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn mills_ratio_examples() {
        let k = crate::mathkit::Kernel::new(3.0).unwrap();
        let p = params(4.5 / k.g1(), 3.0);
        assert!((mills_ratio_bc(&p) - 1.0).abs() < 1e-12);
        let r: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&l| mills_ratio_bc(&params(l, 3.0)))
            .collect();
        assert!(r[0] > r[1] && r[1] > r[2]);
        let r: Vec<f64> = [2.0, 3.0, 4.0]
            .iter()
            .map(|&s| mills_ratio_bc(&params(2.0, s)))
            .collect();
        assert!(r[0] < r[1] && r[1] < r[2]);
    }

    #[test]
    fn poisson_sampler_examples() {
        let mut rng = stream_rng(1, 0);
        let empty = (0..10_000)
            .filter(|_| poisson_min_sample(-1.5, 1.0, 1e-6, &mut rng).is_none())
            .count();
        assert!(empty >= 9_990);

        let draw = |seed| {
            let mut rng = stream_rng(seed, 0);
            (0..100)
                .map(|_| poisson_min_sample(-1.5, 0.6, 4.0, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));

        let (a, mu, t, lambda) = (-0.5, -1.5, 0.6, 4.0);
        let n = 100_000;
        let hits = count_hits(n, 17, |rng| {
            poisson_min_sample(mu, t, lambda, rng).is_some_and(|m| m <= a)
        });
        let q = hits as f64 / n as f64;
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!(q <= min_cdf_drifted(a, mu, t).unwrap() + 3.0 * se);
    }

    #[test]
    fn chunked_counts_are_deterministic() {
        let f = |rng: &mut ChaCha8Rng| rng.random::<f64>() < 0.3;
        let a = count_hits(50_000, 5, f);
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| count_hits(50_000, 5, f));
        assert_eq!(a, b);
    }

    #[test]
    fn scienter_boundaries() {
        let base = params(1.0, 3.0);
        for mode in [SwitchRegime::SparingFirst, SwitchRegime::CandidFirst] {
            let bound = lambda_lower_bound(mode, &base);
            let p = base.with_lambda(bound).unwrap();
            assert_eq!(scienter_prob_closed(mode, &p).unwrap(), 0.0);
            let cfg = SimConfig::new(10_000, 42, mode, p).unwrap();
            assert_eq!(scienter_prob_mc(&cfg).unwrap().estimate, 0.0);
            let below = base.with_lambda(0.5 * bound).unwrap();
            assert!(matches!(
                scienter_prob_closed(mode, &below),
                Err(Error::Domain { name: "lambda", .. })
            ));
        }
    }

    #[test]
    fn scienter_vanishes_for_large_lambda() {
        let p = params(50.0, 3.0);
        for mode in [SwitchRegime::SparingFirst, SwitchRegime::CandidFirst] {
            assert!(scienter_prob_closed(mode, &p).unwrap() <= 0.02);
            let cfg = SimConfig::new(100_000, 42, mode, p).unwrap();
            assert!(scienter_prob_mc(&cfg).unwrap().estimate <= 0.02);
        }
    }

    #[test]
    fn scienter_closed_form_is_hump_shaped() {
        let base = params(1.0, 3.0);
        let lambdas = lambda_grid(SwitchRegime::SparingFirst, &base);
        assert_eq!(lambdas.len(), 100);
        let probs: Vec<f64> = lambdas
            .iter()
            .map(|&l| {
                scienter_prob_closed(SwitchRegime::SparingFirst, &base.with_lambda(l).unwrap())
                    .unwrap()
            })
            .collect();
        let peak = probs
            .iter()
            .cloned()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        assert!(peak > 0 && peak < probs.len() - 1);
        assert!(probs[..=peak].windows(2).all(|w| w[1] >= w[0]));
        assert!(probs[peak..].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn scienter_mc_dominated_and_estimators_agree() {
        let base = params(1.0, 3.0);
        for mode in [SwitchRegime::SparingFirst, SwitchRegime::CandidFirst] {
            let p = base
                .with_lambda(lambda_lower_bound(mode, &base) + 2.0)
                .unwrap();
            let closed = scienter_prob_closed(mode, &p).unwrap();
            let cfg = SimConfig::new(100_000, 42, mode, p).unwrap();
            let direct = scienter_prob_mc(&cfg).unwrap();
            let cond = scienter_prob_mc(&cfg.with_estimator(Estimator::Conditional)).unwrap();
            assert!(direct.estimate <= closed + 3.0 * direct.stderr, "{mode}");
            let spread = 3.0 * (direct.stderr.powi(2) + cond.stderr.powi(2)).sqrt();
            assert!((direct.estimate - cond.estimate).abs() <= spread, "{mode}");
            assert_eq!(direct, scienter_prob_mc(&cfg).unwrap());
        }
    }

    #[test]
    fn sim_config_validation() {
        assert!(SimConfig::new(0, 1, SwitchRegime::SparingFirst, params(3.0, 3.0)).is_err());
    }

    proptest! {
        #[test]
        fn min_law_is_a_distribution(a1 in -5.0f64..0.0, a2 in -5.0f64..0.0, mu in -3.0f64..3.0, t in 0.01f64..5.0) {
            let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            let p_lo = min_cdf_drifted(lo, mu, t).unwrap();
            let p_hi = min_cdf_drifted(hi, mu, t).unwrap();
            prop_assert!((0.0..=1.0).contains(&p_lo));
            prop_assert!(p_lo <= p_hi + 1e-15);
        }
    }
}
