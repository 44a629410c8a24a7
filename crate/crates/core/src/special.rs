//! Gamma and Mittag-Leffler functions.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::quad::{exp_sinh, tanh_sinh};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    let mut a = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// `sin(πx)` with exact argument reduction.
pub fn sin_pi(x: f64) -> f64 {
    let r = x % 2.0;
    let r = if r < 0.0 { r + 2.0 } else { r };
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r <= 0.5 {
        (PI * r).sin()
    } else if r <= 1.5 {
        (PI * (1.0 - r)).sin()
    } else {
        (PI * (r - 2.0)).sin()
    }
}

/// Gamma function (Lanczos approximation with reflection).
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let xm = x - 1.0;
    let t = xm + LANCZOS_G + 0.5;
    let a = lanczos_sum(xm);
    if x < 140.0 {
        (2.0 * PI).sqrt() * t.powf(xm + 0.5) * (-t).exp() * a
    } else {
        // split the power to stay in range
        let half = t.powf(0.5 * (xm + 0.5));
        (2.0 * PI).sqrt() * half * ((-t).exp() * half) * a
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        return (PI / sin_pi(x)).ln() - ln_gamma(1.0 - x);
    }
    let xm = x - 1.0;
    let t = xm + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (xm + 0.5) * t.ln() - t + lanczos_sum(xm).ln()
}

/// `1/Γ(x)`, zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x < 0.5 {
        return sin_pi(x) * gamma(1.0 - x) / PI;
    }
    1.0 / gamma(x)
}

/// `(ln |1/Γ(x)|, sign)`, or `None` at a pole of Γ.
fn ln_abs_rgamma(x: f64) -> Option<(f64, f64)> {
    if x <= 0.0 && x == x.floor() {
        return None;
    }
    if x > 0.0 {
        return Some((-ln_gamma(x), 1.0));
    }
    // 1/Γ(x) = sin(πx) Γ(1-x) / π
    let s = sin_pi(x);
    Some((s.abs().ln() + ln_gamma(1.0 - x) - PI.ln(), s.signum()))
}

/// Parameters of the two-parameter Mittag-Leffler function `E_{α,β}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
    pub tol: f64,
}

impl MLParams {
    pub const DEFAULT_TOL: f64 = 1e-12;

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Self::with_tol(alpha, beta, Self::DEFAULT_TOL)
    }

    pub fn with_tol(alpha: f64, beta: f64, tol: f64) -> Result<Self> {
        let p = MLParams { alpha, beta, tol };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha must lie in (0,1], got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(invalid(format!("tolerance must lie in (0,1), got {}", self.tol)));
        }
        Ok(())
    }
}

/// Switch between the power series and the asymptotic expansions.
pub const ML_SWITCH: f64 = 40.0;

/// Mittag-Leffler function `E_{α,β}(z) = Σ z^k / Γ(αk+β)` for real `z`.
///
/// `|z| ≤ 40` uses the power series with compensated summation. When the
/// series is ill-conditioned (negative `z`, terms much larger than the sum)
/// and `α < 1`, the value comes from the Laplace-inversion integral along
/// the branch cut instead. Beyond `|z| = 40` the algebraic (`z < 0`) or
/// exponential (`z > 0`) asymptotic expansion is used.
pub fn mittag_leffler(p: MLParams, z: f64) -> Result<f64> {
    p.validate()?;
    if !z.is_finite() {
        return Err(invalid(format!("argument must be finite, got {z}")));
    }
    let MLParams { alpha, beta, tol } = p;
    if z == 0.0 {
        return Ok(rgamma(beta));
    }
    if alpha == 1.0 {
        if let Some(v) = ml_alpha_one(beta, z)? {
            return Ok(v);
        }
    }
    if z < -ML_SWITCH {
        return Ok(ml_asymptotic_algebraic(alpha, beta, z, tol));
    }
    if z > ML_SWITCH {
        return ml_asymptotic_exponential(alpha, beta, z, tol);
    }
    // Σ|terms| grows like exp(|z|^{1/α}); past that point the series is useless
    if z < 0.0 && alpha < 1.0 && (-z).powf(1.0 / alpha) > 30.0 {
        return Ok(ml_negative_integral(alpha, beta, -z, tol));
    }
    let (sum, abs_sum) = ml_series(alpha, beta, z, tol);
    if !sum.is_finite() {
        return Err(Error::Overflow(format!(
            "E_{{{alpha},{beta}}}({z}) exceeds the floating range"
        )));
    }
    let rounding = abs_sum * 4.0 * f64::EPSILON;
    if z < 0.0 && alpha < 1.0 && rounding > 0.01 * tol * sum.abs() {
        return Ok(ml_negative_integral(alpha, beta, -z, tol));
    }
    Ok(sum)
}

/// Closed forms for `α = 1` where they exist (`β` a positive integer).
fn ml_alpha_one(beta: f64, z: f64) -> Result<Option<f64>> {
    if beta == 1.0 {
        let v = z.exp();
        if v.is_infinite() {
            return Err(Error::Overflow(format!("exp({z}) exceeds the floating range")));
        }
        return Ok(Some(v));
    }
    if beta == 2.0 {
        let v = z.exp_m1() / z;
        if v.is_infinite() {
            return Err(Error::Overflow(format!("E_{{1,2}}({z}) exceeds the floating range")));
        }
        return Ok(Some(v));
    }
    // E_{1,β+1}(z) = (E_{1,β}(z) - 1/Γ(β)) / z is stable for |z| > 1.
    if beta > 2.0 && beta == beta.floor() && z < -1.0 && beta < 60.0 {
        let mut v = z.exp_m1() / z;
        let mut b = 2.0;
        while b < beta {
            v = (v - rgamma(b)) / z;
            b += 1.0;
        }
        return Ok(Some(v));
    }
    Ok(None)
}

/// Power series; returns the compensated sum and the sum of magnitudes.
fn ml_series(alpha: f64, beta: f64, z: f64, tol: f64) -> (f64, f64) {
    let ln_z = z.abs().ln();
    let negative = z < 0.0;
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut abs_sum = 0.0;
    let mut prev_ln = f64::INFINITY;
    for k in 0..20_000usize {
        let arg = alpha * k as f64 + beta;
        let mag = if arg < 170.0 && k < 200 {
            z.abs().powi(k as i32) / gamma(arg)
        } else {
            (k as f64 * ln_z - ln_gamma(arg)).exp()
        };
        let term = if negative && k % 2 == 1 { -mag } else { mag };
        // Neumaier summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        abs_sum += mag;
        if !abs_sum.is_finite() {
            return (f64::INFINITY, f64::INFINITY);
        }
        let ln_mag = mag.ln();
        let decreasing = ln_mag < prev_ln;
        prev_ln = ln_mag;
        if k > 2 && decreasing && mag <= 1e-3 * tol * f64::EPSILON.max((sum + comp).abs()) {
            break;
        }
        if mag == 0.0 && k > 2 {
            break;
        }
    }
    (sum + comp, abs_sum)
}

/// `-Σ_{k≥1} z^{-k} / Γ(β - αk)`, truncated at the smallest term.
fn ml_algebraic_tail(alpha: f64, beta: f64, z: f64, tol: f64) -> f64 {
    let ln_z = z.abs().ln();
    let mut sum = 0.0;
    let mut prev_env = f64::INFINITY;
    for k in 1..400usize {
        // |1/Γ(β-αk)| ≤ Γ(1-β+αk)/π, a log-convex envelope in k
        let arg = 1.0 - beta + alpha * k as f64;
        let env = if arg > 0.0 { ln_gamma(arg) - PI.ln() } else { 0.0 } - k as f64 * ln_z;
        if env > prev_env && k > 2 {
            break;
        }
        prev_env = env;
        if let Some((ln_r, sign)) = ln_abs_rgamma(beta - alpha * k as f64) {
            let mag = (ln_r - k as f64 * ln_z).exp();
            // z^{-k} carries the sign of z^k
            let zsign = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
            sum -= sign * zsign * mag;
        }
        if env.exp() <= 1e-3 * tol * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    sum
}

fn ml_asymptotic_algebraic(alpha: f64, beta: f64, z: f64, tol: f64) -> f64 {
    ml_algebraic_tail(alpha, beta, z, tol)
}

fn ml_asymptotic_exponential(alpha: f64, beta: f64, z: f64, tol: f64) -> Result<f64> {
    let root = z.powf(1.0 / alpha);
    let ln_lead = (1.0 - beta) / alpha * z.ln() + root - alpha.ln();
    if ln_lead > 709.0 {
        return Err(Error::Overflow(format!(
            "E_{{{alpha},{beta}}}({z}): z^(1/alpha) = {root:.3e} exceeds the floating range"
        )));
    }
    Ok(ln_lead.exp() + ml_algebraic_tail(alpha, beta, z, tol))
}

/// `E_{α,β}(-x)` for `x > 0`, `0 < α < 1`, from the branch-cut integral of
/// the Laplace inversion of `s^{α-β}/(s^α + x)`:
///
/// ```text
/// E_{α,β}(-x) = 1/π ∫_0^∞ e^{-r} r^{α-β} (r^α sin βπ - x sin (α-β)π)
///                           / (r^{2α} + 2 x r^α cos απ + x²) dr
/// ```
///
/// valid for `β < 1 + α` (the pole at `r = 0` adds `1/x` when `β = 1 + α`);
/// every `β > 1` is first reduced with
/// `E_{α,β}(z) = (E_{α,β-α}(z) - 1/Γ(β-α)) / z`.
fn ml_negative_integral(alpha: f64, beta: f64, x: f64, tol: f64) -> f64 {
    if beta > 1.0 {
        let lower = ml_negative_integral(alpha, beta - alpha, x, tol);
        return (lower - rgamma(beta - alpha)) / (-x);
    }
    let sb = sin_pi(beta);
    let sab = sin_pi(alpha - beta);
    let (sa, ca) = (sin_pi(alpha), sin_pi(alpha + 0.5));
    let integrand = |r: f64| -> f64 {
        let ra = r.powf(alpha);
        let re = ra + x * ca;
        let im = x * sa;
        let den = re * re + im * im;
        (-r).exp() * r.powf(alpha - beta) * (ra * sb - x * sab) / den
    };
    let q_tol = (tol * 1e-2).max(1e-15);
    let peak = x.powf(1.0 / alpha);
    let value = if peak < 30.0 {
        tanh_sinh(integrand, 0.0, peak, q_tol) + exp_sinh(integrand, peak, q_tol)
    } else {
        exp_sinh(integrand, 0.0, q_tol)
    };
    value / PI
}

/// Convenience wrapper for the one-parameter function `E_α(z)` at default
/// tolerance.
pub fn ml1(alpha: f64, z: f64) -> Result<f64> {
    mittag_leffler(MLParams::new(alpha, 1.0)?, z)
}

/// Riemann `ζ(s)` for `s > 1` by Euler–Maclaurin summation.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(invalid(format!("zeta needs s > 1, got {s}")));
    }
    // B_{2k} / (2k)!
    const B: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30_240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
        -691.0 / 1_307_674_368_000.0,
    ];
    let n = 12.0f64;
    let mut sum: f64 = (1..12).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising product s(s+1)...(s+2k-2) times N^{-s-2k+1}
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (k, b) in B.iter().enumerate() {
        sum += b * rising * power;
        let j = 2.0 * k as f64;
        rising *= (s + j + 1.0) * (s + j + 2.0);
        power /= n * n;
    }
    Ok(sum)
}

/// `ζ(−a)` for `0 < a < 1` through the functional equation.
pub fn zeta_negative(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid(format!("zeta_negative needs 0 < a < 1, got {a}")));
    }
    let s = 1.0 + a;
    Ok(2.0 * (2.0 * PI).powf(-s) * (0.5 * PI * s).cos() * gamma(s) * zeta(s)?)
}
