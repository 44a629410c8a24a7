//! One-dimensional quadrature rules: Gauss–Legendre nodes and the
//! double-exponential (tanh-sinh / exp-sinh) rules used for integrals with
//! algebraic endpoint singularities.

use std::f64::consts::{FRAC_PI_2, PI};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const MAX_LEVEL: usize = 9;

/// Tanh-sinh rule on a finite interval `[a, b]`.
///
/// Abscissae next to the endpoints are formed from the distance to the
/// endpoint so that integrable singularities such as `(x - a)^(-0.7)` are
/// resolved without cancellation.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let mid = a + half;
    let t_max = 4.5;
    let eval = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * u.abs()).exp();
        let dist = half * 2.0 * e / (1.0 + e);
        let w = half * FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        if dist <= 0.0 || w < 1e-300 {
            return 0.0;
        }
        let x = if t > 0.0 { b - dist } else { a + dist };
        if x <= a || x >= b {
            return 0.0;
        }
        w * f(x)
    };

    let mut h = 1.0;
    let mut sum = half * FRAC_PI_2 * f(mid);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = h * sum;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = h * sum;
        let diff = (next - estimate).abs();
        estimate = next;
        if level >= 3 && diff <= rel_tol * next.abs() {
            break;
        }
    }
    estimate
}

/// Exp-sinh rule on the half line `[a, ∞)`; the integrand must decay at
/// least exponentially.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64) -> f64 {
    let (t_lo, t_hi): (f64, f64) = (-6.0, 3.5);
    let eval = |t: f64| -> f64 {
        let s = (FRAC_PI_2 * t.sinh()).exp();
        let w = FRAC_PI_2 * t.cosh() * s;
        let x = a + s;
        if !x.is_finite() || x <= a {
            return 0.0;
        }
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            w * v
        }
    };
    let mut h = 0.5;
    let mut sum = 0.0;
    let mut k = (t_lo / h).ceil() as i64;
    while k as f64 * h <= t_hi {
        sum += eval(k as f64 * h);
        k += 1;
    }
    let mut estimate = h * sum;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = (t_lo / h).ceil() as i64;
        if k % 2 == 0 {
            k += 1;
        }
        while k as f64 * h <= t_hi {
            sum += eval(k as f64 * h);
            k += 2;
        }
        let next = h * sum;
        let diff = (next - estimate).abs();
        estimate = next;
        if level >= 3 && diff <= rel_tol * next.abs() {
            break;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        // ∫_0^1 x^{-0.7} dx = 1/0.3
        let v = tanh_sinh(|x| x.powf(-0.7), 0.0, 1.0, 1e-14);
        assert!((v - 1.0 / 0.3).abs() < 1e-11, "{v}");
        // ∫_1^3 √(3-x) dx = (2/3)·2^{3/2}
        let v = tanh_sinh(|x| (3.0 - x).sqrt(), 1.0, 3.0, 1e-14);
        assert!((v - 2.0 / 3.0 * 2f64.powf(1.5)).abs() < 1e-13, "{v}");
    }

    #[test]
    fn exp_sinh_gamma_integral() {
        // ∫_0^∞ x^{-0.5} e^{-x} dx = √π
        let v = exp_sinh(|x| x.powf(-0.5) * (-x).exp(), 0.0, 1e-14);
        assert!((v - PI.sqrt()).abs() < 1e-11, "{v}");
        let v = exp_sinh(|x| (-x).exp(), 3.0, 1e-14);
        assert!((v - (-3f64).exp()).abs() < 1e-14);
    }
}
