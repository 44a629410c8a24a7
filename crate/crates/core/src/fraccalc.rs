//! Discrete fractional calculus on uniform grids.
//!
//! Every singular convolution is evaluated by product integration: the
//! sampled function is reconstructed piecewise-linearly and the kernel is
//! integrated exactly against each linear piece. For power kernels this
//! gives the classical trapezoidal product weights; for Mittag-Leffler
//! kernels the exact antiderivatives `∫ s^{β-1}E_{α,β}(-λs^α) ds =
//! x^β E_{α,β+1}(-λx^α)` supply the moments.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::grid::{trapezoid, GridSeries, TimeGrid};
use crate::quad::gauss_legendre;
use crate::special::{gamma, mittag_leffler, zeta_negative, MLParams};

fn check_order(alpha: f64, allow_one: bool) -> Result<()> {
    let upper_ok = if allow_one { alpha <= 1.0 } else { alpha < 1.0 };
    if !(alpha > 0.0 && upper_ok) {
        let range = if allow_one { "(0,1]" } else { "(0,1)" };
        return Err(invalid(format!("order must lie in {range}, got {alpha}")));
    }
    Ok(())
}

/// `(k+1)^p - 2k^p + (k-1)^p` without the `k²` cancellation of the naive form.
fn second_difference_power(k: f64, p: f64) -> f64 {
    if k < 8.0 {
        return (k + 1.0).powf(p) - 2.0 * k.powf(p) + (k - 1.0).powf(p);
    }
    let a = p * (1.0 / k).ln_1p();
    let b = p * (-1.0 / k).ln_1p();
    k.powf(p) * (a.exp_m1() + b.exp_m1())
}

/// Product-trapezoidal weights for `(1/Γ(μ)) ∫_0^{t_m} (t_m-τ)^{μ-1} x(τ) dτ`.
///
/// `I_m = start[m]·x_0 + Σ_{j=1}^{m-1} interior[m-j]·x_j + last·x_m`.
#[derive(Debug, Clone)]
pub struct PowerWeights {
    order: f64,
    start: Vec<f64>,
    interior: Vec<f64>,
    last: f64,
}

impl PowerWeights {
    pub fn new(order: f64, grid: &TimeGrid) -> Self {
        let m_max = grid.steps();
        let p = order + 1.0;
        let c = grid.dt().powf(order) / gamma(order + 2.0);
        let mut start = vec![0.0; m_max + 1];
        let mut interior = vec![0.0; m_max + 1];
        for m in 1..=m_max {
            let mf = m as f64;
            start[m] = c * ((mf - 1.0).powf(p) - (mf - 1.0 - order) * mf.powf(order));
            interior[m] = c * second_difference_power(mf, p);
        }
        PowerWeights {
            order,
            start,
            interior,
            last: c,
        }
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    /// Weight of node `j` in the value at node `m` (`j ≤ m`).
    pub fn weight(&self, m: usize, j: usize) -> f64 {
        debug_assert!(j <= m);
        if m == 0 {
            0.0
        } else if j == m {
            self.last
        } else if j == 0 {
            self.start[m]
        } else {
            self.interior[m - j]
        }
    }

    /// Weight of node `m` in its own value.
    pub fn diagonal(&self) -> f64 {
        self.last
    }

    /// Contribution of nodes `0..m` (history) to the value at node `m`.
    pub fn history(&self, values: &[f64], m: usize) -> f64 {
        if m == 0 {
            return 0.0;
        }
        let mut s = self.start[m] * values[0];
        for j in 1..m {
            s += self.interior[m - j] * values[j];
        }
        s
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        (0..values.len())
            .map(|m| {
                if m == 0 {
                    0.0
                } else {
                    self.history(values, m) + self.last * values[m]
                }
            })
            .collect()
    }
}

/// Right-handed Riemann–Liouville integral `I^α_{0+} x` at every node.
pub fn rl_integral(x: &GridSeries, alpha: f64) -> Result<GridSeries> {
    check_order(alpha, true)?;
    let w = PowerWeights::new(alpha, x.grid());
    Ok(GridSeries::from_raw(*x.grid(), w.apply(x.values())))
}

/// Left-handed Riemann–Liouville integral `I^α_{T-} x`, the mirror image of
/// [`rl_integral`] about `T/2`.
pub fn rl_integral_left(x: &GridSeries, alpha: f64) -> Result<GridSeries> {
    Ok(rl_integral(&x.reflect(), alpha)?.reflect())
}

/// L1 weights `b_j = (j+1)^{1-α} - j^{1-α}` and the scale `Δt^{-α}/Γ(2-α)`.
#[derive(Debug, Clone)]
pub struct L1Weights {
    pub scale: f64,
    pub b: Vec<f64>,
}

impl L1Weights {
    pub fn new(alpha: f64, grid: &TimeGrid) -> Self {
        let q = 1.0 - alpha;
        let b = (0..=grid.steps())
            .map(|j| {
                let jf = j as f64;
                if j < 8 {
                    (jf + 1.0).powf(q) - jf.powf(q)
                } else {
                    jf.powf(q) * (q * (1.0 / jf).ln_1p()).exp_m1()
                }
            })
            .collect();
        L1Weights {
            scale: grid.dt().powf(-alpha) / gamma(2.0 - alpha),
            b,
        }
    }

    /// `Σ_{j=1}^{m-1} b_j (x_{m-j} - x_{m-j-1})`, the part of the L1 sum
    /// not involving `x_m`.
    pub fn history(&self, x: &[f64], m: usize) -> f64 {
        let mut s = 0.0;
        for j in 1..m {
            s += self.b[j] * (x[m - j] - x[m - j - 1]);
        }
        s
    }

    pub fn apply_at(&self, x: &[f64], m: usize) -> f64 {
        self.scale * (self.b[0] * (x[m] - x[m - 1]) + self.history(x, m))
    }
}

/// Caputo derivative by the L1 scheme. Node 0 carries the node-1 value.
pub fn caputo_derivative(x: &GridSeries, alpha: f64) -> Result<GridSeries> {
    check_order(alpha, false)?;
    let grid = *x.grid();
    if grid.steps() < 2 {
        return Err(invalid("the L1 scheme needs at least two steps"));
    }
    let w = L1Weights::new(alpha, &grid);
    let v = x.values();
    let mut out: Vec<f64> = (0..=grid.steps())
        .map(|m| if m == 0 { 0.0 } else { w.apply_at(v, m) })
        .collect();
    out[0] = out[1];
    Ok(GridSeries::from_raw(grid, out))
}

/// Riemann–Liouville derivative: Caputo part plus `x(0) t^{-α}/Γ(1-α)`.
/// Node 0 carries the node-1 value.
pub fn rl_derivative(x: &GridSeries, alpha: f64) -> Result<GridSeries> {
    let caputo = caputo_derivative(x, alpha)?;
    let grid = *x.grid();
    let x0 = x.at(0);
    let g = gamma(1.0 - alpha);
    let mut out: Vec<f64> = caputo
        .values()
        .iter()
        .enumerate()
        .map(|(m, &c)| {
            if m == 0 {
                0.0
            } else {
                c + x0 * grid.t(m).powf(-alpha) / g
            }
        })
        .collect();
    out[0] = out[1];
    Ok(GridSeries::from_raw(grid, out))
}

/// Convolution kernels appearing in the uniqueness argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// `k(t) = t^{-α}/Γ(1-α)`
    K,
    /// `l(t) = t^{α-1}/Γ(α)`
    L,
    /// Yosida kernel `k_n(t) = n E_α(-n t^α)`
    KN(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub kind: KernelKind,
    pub alpha: f64,
}

impl Kernel {
    pub fn new(kind: KernelKind, alpha: f64) -> Result<Self> {
        check_order(alpha, false)?;
        if let KernelKind::KN(0) = kind {
            return Err(invalid("Yosida index n must be at least 1"));
        }
        Ok(Kernel { kind, alpha })
    }

    pub fn k(alpha: f64) -> Result<Self> {
        Self::new(KernelKind::K, alpha)
    }

    pub fn l(alpha: f64) -> Result<Self> {
        Self::new(KernelKind::L, alpha)
    }

    pub fn yosida(n: u32, alpha: f64) -> Result<Self> {
        Self::new(KernelKind::KN(n), alpha)
    }

    /// Pointwise value for `t > 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let a = self.alpha;
        Ok(match self.kind {
            KernelKind::K => t.powf(-a) / gamma(1.0 - a),
            KernelKind::L => t.powf(a - 1.0) / gamma(a),
            KernelKind::KN(n) => {
                let n = n as f64;
                n * mittag_leffler(MLParams::new(a, 1.0)?, -n * t.powf(a))?
            }
        })
    }
}

/// A kernel `scale · s^{β-1} E_{α,β}(-λ s^α)` integrated exactly against
/// piecewise-linear data through its first two antiderivative moments.
#[derive(Debug, Clone)]
pub struct MlKernelWeights {
    /// weight of `f_{m-k}` for lag `k ≥ 1`
    far: Vec<f64>,
    /// weight of `f_{m-k+1}` for lag `k ≥ 1`
    near: Vec<f64>,
}

impl MlKernelWeights {
    pub fn new(alpha: f64, beta: f64, lambda: f64, scale: f64, grid: &TimeGrid) -> Result<Self> {
        let dt = grid.dt();
        let m_max = grid.steps();
        let p1 = MLParams::new(alpha, beta + 1.0)?;
        let p2 = MLParams::new(alpha, beta + 2.0)?;
        // G0(x) = ∫_0^x g,  G1(x) = ∫_0^x s g(s) ds = x G0(x) - ∫_0^x G0
        let mut g0 = vec![0.0; m_max + 1];
        let mut g1 = vec![0.0; m_max + 1];
        for k in 1..=m_max {
            let x = k as f64 * dt;
            let z = -lambda * x.powf(alpha);
            let e1 = mittag_leffler(p1, z)?;
            let e2 = mittag_leffler(p2, z)?;
            let xb = x.powf(beta);
            g0[k] = scale * xb * e1;
            g1[k] = scale * xb * x * (e1 - e2);
        }
        let mut far = vec![0.0; m_max + 1];
        let mut near = vec![0.0; m_max + 1];
        for k in 1..=m_max {
            let s_lo = (k - 1) as f64 * dt;
            let s_hi = k as f64 * dt;
            let d0 = g0[k] - g0[k - 1];
            let d1 = g1[k] - g1[k - 1];
            far[k] = (d1 - s_lo * d0) / dt;
            near[k] = (s_hi * d0 - d1) / dt;
        }
        Ok(MlKernelWeights { far, near })
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        (0..values.len())
            .map(|m| {
                let mut s = 0.0;
                for k in 1..=m {
                    s += self.far[k] * values[m - k] + self.near[k] * values[m - k + 1];
                }
                s
            })
            .collect()
    }
}

/// `(g ∗ f)(t_m) = ∫_0^{t_m} g(t_m - τ) f(τ) dτ` at every node.
pub fn convolve(f: &GridSeries, g: &Kernel) -> Result<GridSeries> {
    let grid = *f.grid();
    let values = match g.kind {
        KernelKind::L => PowerWeights::new(g.alpha, &grid).apply(f.values()),
        KernelKind::K => PowerWeights::new(1.0 - g.alpha, &grid).apply(f.values()),
        KernelKind::KN(n) => {
            let n = n as f64;
            MlKernelWeights::new(g.alpha, 1.0, n, n, &grid)?.apply(f.values())
        }
    };
    Ok(GridSeries::from_raw(grid, values))
}

/// `|∫ (I^α_{0+} f) g − ∫ f (I^α_{T-} g)|`. The outer integrals use the
/// trapezoidal rule with the leading endpoint correction for the `t^α`
/// (resp. `(T−t)^α`) factor: `∫ ≈ T_h − ζ(−α) h^{1+α} φ(endpoint)`.
pub fn integration_by_parts_residual(f: &GridSeries, g: &GridSeries, alpha: f64) -> Result<f64> {
    f.grid().ensure_same(g.grid())?;
    let dt = f.grid().dt();
    let right = rl_integral(f, alpha)?;
    let left = rl_integral_left(g, alpha)?;
    let lhs: Vec<f64> = right.values().iter().zip(g.values()).map(|(a, b)| a * b).collect();
    let rhs: Vec<f64> = f.values().iter().zip(left.values()).map(|(a, b)| a * b).collect();
    let m = f.grid().steps();
    let corr = if alpha < 1.0 {
        zeta_negative(alpha)? * dt.powf(1.0 + alpha) / gamma(1.0 + alpha)
    } else {
        0.0
    };
    let lhs_int = trapezoid(&lhs, dt) - corr * f.at(0) * g.at(0);
    let rhs_int = trapezoid(&rhs, dt) - corr * f.at(m) * g.at(m);
    Ok((lhs_int - rhs_int).abs())
}

/// Weights of `f(a)` and `f(b)` in `(1/Γ(μ)) ∫_a^b (t-τ)^{μ-1} f_lin(τ) dτ`
/// for `b ≤ t`.
fn segment_weights(t: f64, a: f64, b: f64, order: f64, gamma_order: f64, gl: &(Vec<f64>, Vec<f64>)) -> (f64, f64) {
    let h = b - a;
    let far_end = t - a;
    let near_end = t - b;
    if h < 1e-3 * near_end {
        // the kernel is smooth across a short segment well away from t
        let (mut wa, mut wb) = (0.0, 0.0);
        for (x, w) in gl.0.iter().zip(&gl.1) {
            let tau = a + 0.5 * (x + 1.0) * h;
            let k = (t - tau).powf(order - 1.0) * w * 0.5 * h;
            wa += k * (b - tau) / h;
            wb += k * (tau - a) / h;
        }
        return (wa / gamma_order, wb / gamma_order);
    }
    let i0 = (far_end.powf(order) - near_end.powf(order)) / order;
    let i1 = (far_end.powf(order + 1.0) - near_end.powf(order + 1.0)) / (order + 1.0);
    // ∫ (t-τ)^{μ-1} (τ-a) dτ with τ - a = (t-a) - (t-τ)
    let ja = far_end * i0 - i1;
    let wb = ja / h;
    let wa = i0 - wb;
    (wa / gamma_order, wb / gamma_order)
}

/// `I^α_{0+} f` at the nodes of `grid` for a function known in closed form,
/// using a composite grid that adds geometric nodes `Δt·10^{-14}·q^i` to
/// the uniform ones (`q = 1 + 50/M`). Resolves boundary layers at `t = 0`
/// that are much thinner than `Δt`.
pub fn rl_integral_graded<F: Fn(f64) -> f64>(f: F, grid: &TimeGrid, alpha: f64) -> Result<GridSeries> {
    check_order(alpha, true)?;
    let dt = grid.dt();
    let horizon = grid.horizon();
    let ratio = 1.0 + 50.0 / grid.steps() as f64;
    let mut nodes = vec![0.0];
    let mut x = dt * 1e-14;
    while x < horizon {
        nodes.push(x);
        x *= ratio;
    }
    nodes.extend(grid.nodes().into_iter().skip(1));
    nodes.sort_by(|a, b| a.total_cmp(b));
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));
    let values: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
    let gl = gauss_legendre(4);
    let gamma_order = gamma(alpha);

    let mut out = vec![0.0; grid.len()];
    for (m, slot) in out.iter_mut().enumerate().skip(1) {
        let t = grid.t(m);
        let mut acc = 0.0;
        for i in 0..nodes.len() - 1 {
            let (a, b) = (nodes[i], nodes[i + 1]);
            if b > t * (1.0 + 1e-14) {
                break;
            }
            let (wa, wb) = segment_weights(t, a, b, alpha, gamma_order, &gl);
            acc += wa * values[i] + wb * values[i + 1];
        }
        *slot = acc;
    }
    Ok(GridSeries::from_raw(*grid, out))
}

/// `2x·D^α x − D^α(x²)` on the grid with the L1 operator; nonnegative for
/// every sequence (discrete convexity inequality).
pub fn convexity_defect(x: &GridSeries, alpha: f64) -> Result<GridSeries> {
    let dx = caputo_derivative(x, alpha)?;
    let dx2 = caputo_derivative(&x.map(|v| v * v), alpha)?;
    let vals = x
        .values()
        .iter()
        .zip(dx.values())
        .zip(dx2.values())
        .map(|((v, d), d2)| 2.0 * v * d - d2)
        .collect();
    Ok(GridSeries::from_raw(*x.grid(), vals))
}

/// `B(α, 1-α) / (Γ(α)Γ(1-α))`; equals one, so `l ∗ k ≡ 1`.
pub fn beta_identity(alpha: f64) -> f64 {
    (PI / crate::special::sin_pi(alpha)) / (gamma(alpha) * gamma(1.0 - alpha))
}
