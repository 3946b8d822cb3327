//! Numerical kernels shared by every model layer.
//!
//! * the standard normal law (Φ, φ and a tail-safe log Φ),
//! * the observation kernel `h(t) = 2Φ((σ/2)√(1−t)) − 1`, which is the
//!   instantaneous decline rate of a silent firm's valuation per unit of
//!   observation intensity, and its integral `g(t) = ∫₀ᵗ h`,
//! * adaptive Gauss–Kronrod quadrature,
//! * Brent's bracketing root finder.
//!
//! `g` is evaluated in closed form. With `a = σ/2`, `q = a√(1−t)` and
//! `E(x) = Φ(x) − ½` the antiderivative of `h/2` vanishing at `t = 0` is
//!
//! ```text
//! H(t, a) = E(a) − (1−t)E(q) + [E(q) − E(a) + aφ(a) − qφ(q)] / a²
//! ```
//!
//! which is the textbook `Φ(a) + (aφ(a) − Φ(a))/a² − ((q²−1)Φ(q) + qφ(q))/a² − t/2`
//! with the constant halves cancelled. Differentiating, `d/dq[(q²−1)Φ(q) + qφ(q)] = 2qΦ(q)`
//! and `dq/dt = −a²/(2q)`, so `dH/dt = Φ(q) − ½ = h(t)/2`.

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Below this kernel scale the closed form for `g` loses digits to the `1/a²` division.
const G_CLOSED_FORM_MIN_SCALE: f64 = 1e-2;

/// Convergence controls for [`integrate`] and [`find_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol >= 0.0 && abs_tol.is_finite()) {
            return Err(Error::domain("abs_tol", abs_tol, "must be finite and >= 0"));
        }
        if !(rel_tol >= 0.0 && rel_tol.is_finite()) {
            return Err(Error::domain("rel_tol", rel_tol, "must be finite and >= 0"));
        }
        if abs_tol == 0.0 && rel_tol == 0.0 {
            return Err(Error::domain(
                "abs_tol",
                abs_tol,
                "must be > 0 when rel_tol is 0",
            ));
        }
        if max_iter == 0 {
            return Err(Error::domain("max_iter", 0.0, "must be at least 1"));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_iter,
        })
    }

    /// Absolute tolerance only.
    pub fn absolute(abs_tol: f64) -> Self {
        Self::new(abs_tol, 0.0, Self::default().max_iter).expect("positive absolute tolerance")
    }

    pub fn with_max_iter(self, max_iter: usize) -> Self {
        Self {
            max_iter: max_iter.max(1),
            ..self
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

impl Default for Tolerance {
    /// 1e−10 absolute, 500 subdivisions / iterations.
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_iter: 500,
        }
    }
}

/// Standard normal density φ(x).
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function Φ(x).
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Φ(x) − ½, accurate near the origin where Φ(x) − 0.5 would cancel.
#[inline]
pub fn normal_cdf_centered(x: f64) -> f64 {
    0.5 * libm::erf(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// ln Φ(x), finite far into the lower tail.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-normal_cdf(-x)).ln_1p()
    } else if x > -35.0 {
        normal_cdf(x).ln()
    } else {
        // Mills-ratio asymptotic series; the first omitted term is below 1e-12 relative here.
        let z = 1.0 / (x * x);
        let series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z)));
        -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
    }
}

/// The observation kernel, parameterised by the aggregate volatility σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    sigma: f64,
}

impl Kernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain("sigma", sigma, "must be finite and > 0"));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `h(t)` with `t` clamped into `[0, 1]`.
    pub fn h(&self, t: f64) -> f64 {
        let q = 0.5 * self.sigma * (1.0 - t.clamp(0.0, 1.0)).sqrt();
        libm::erf(q * std::f64::consts::FRAC_1_SQRT_2)
    }

    /// `g(t) = ∫₀ᵗ h` with `t` clamped into `[0, 1]`.
    pub fn g(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        if t == 0.0 {
            return 0.0;
        }
        let a = 0.5 * self.sigma;
        if a < G_CLOSED_FORM_MIN_SCALE {
            return self.g_by_quadrature(t);
        }
        2.0 * antiderivative_half_h(t, a)
    }

    /// `g(1)`, the mean decline over the whole silent period.
    pub fn g1(&self) -> f64 {
        self.g(1.0)
    }

    fn g_by_quadrature(&self, t: f64) -> f64 {
        let tol = Tolerance::new(1e-15, 1e-13, 1000).expect("valid tolerance");
        match integrate(|u| self.h(u), 0.0, t, tol) {
            Ok(v) => v,
            Err(Error::NonConvergence { estimate, .. }) => estimate,
            Err(e) => unreachable!("quadrature of a bounded kernel failed: {e}"),
        }
    }
}

/// `H(t, a)` with `dH/dt = h(t)/2` and `H(0, a) = 0`, for `a = σ/2 > 0`.
pub fn antiderivative_half_h(t: f64, a: f64) -> f64 {
    let q = a * (1.0 - t).max(0.0).sqrt();
    let ea = normal_cdf_centered(a);
    let eq = normal_cdf_centered(q);
    let bracket = eq - ea + a * normal_pdf(a) - q * normal_pdf(q);
    ea - (1.0 - t) * eq + bracket / (a * a)
}

fn check_unit_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::domain("t", t, "must lie in [0, 1]"))
    }
}

/// `h(t) = 2Φ((σ/2)√(1−t)) − 1`.
pub fn h_rate(t: f64, kernel: &Kernel) -> Result<f64> {
    check_unit_time(t)?;
    Ok(kernel.h(t))
}

/// `g(t) = ∫₀ᵗ h(u) du`.
pub fn g_cum(t: f64, kernel: &Kernel) -> Result<f64> {
    check_unit_time(t)?;
    Ok(kernel.g(t))
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// Bisects the segment with the largest error estimate until the summed
/// estimate is within `max(abs_tol, rel_tol·|value|)`. Running out of
/// subdivisions yields [`Error::NonConvergence`] carrying the best estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("a", a, "integration limits must be finite"));
    }
    if a > b {
        return Err(Error::domain("a", a, "must not exceed the upper limit"));
    }
    if a == b {
        return Ok(0.0);
    }

    let mut segments = vec![gauss_kronrod_15(&f, a, b)];
    for _ in 0..tol.max_iter {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(Error::domain(
                "f",
                value,
                "integrand must be finite on [a, b]",
            ));
        }
        if error <= tol.target(value) {
            return Ok(value);
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Segment is at floating-point resolution; keep it and stop refining.
            segments.push(seg);
            break;
        }
        segments.push(gauss_kronrod_15(&f, seg.a, mid));
        segments.push(gauss_kronrod_15(&f, mid, seg.b));
    }

    let value: f64 = segments.iter().map(|s| s.value).sum();
    let error: f64 = segments.iter().map(|s| s.error).sum();
    if error <= tol.target(value) {
        return Ok(value);
    }
    Err(Error::NonConvergence {
        estimate: value,
        error_bound: error,
        iterations: tol.max_iter,
    })
}

/// Brent's method on a sign-changing bracket `[lo, hi]`.
///
/// Returns an endpoint directly when `|f(endpoint)| ≤ abs_tol`. Otherwise
/// iterates until the bracket is narrower than `max(abs_tol, rel_tol·|x|)`
/// or `f` vanishes. Without a sign change the result is [`Error::NoBracket`].
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::domain(
            "lo",
            lo,
            "bracket must be finite with lo <= hi",
        ));
    }
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_nan() {
            Err(Error::domain("x", x, "must not make the function NaN"))
        } else {
            Ok(y)
        }
    };

    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (eval(a)?, eval(b)?);
    if fa.abs() <= tol.abs_tol {
        return Ok(a);
    }
    if fb.abs() <= tol.abs_tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let (mut c, mut fc) = (b, fb);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.target(b);
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = eval(b)?;
    }
    Err(Error::NonConvergence {
        estimate: b,
        error_bound: (c - b).abs(),
        iterations: tol.max_iter,
    })
}
