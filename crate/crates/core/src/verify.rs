//! A-priori estimates evaluated on computed solutions, Galerkin and
//! time-grid convergence studies, the Yosida-kernel study and the
//! Gronwall uniqueness check.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::expr::SUP_SAFETY;
use crate::fode::{FractionalIVP, Gamma, ModalTrajectory, PicardConfig, Provenance};
use crate::fraccalc::{rl_integral, rl_integral_graded, MlKernelWeights, PowerWeights};
use crate::grid::{trapezoid, GridSeries, TimeGrid};
use crate::problem::{ProblemSpec, Scheme};
use crate::special::{mittag_leffler, ml1, MLParams};
use crate::spectral::{continuity_constant, garding_constants, GardingConstants, SpectralBasis};

/// Relative slack used when deciding pass/fail: `margin ≥ −10⁻⁹·|rhs|`.
pub const REPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    pub constants: BTreeMap<String, f64>,
}

impl EstimateCheck {
    pub fn new(name: &str, lhs: f64, rhs: f64, constants: BTreeMap<String, f64>) -> Self {
        let margin = rhs - lhs;
        EstimateCheck {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            pass: margin >= -REPORT_TOL * rhs.abs() && margin.is_finite(),
            constants,
        }
    }
}

fn constants(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn norms_sq(basis: &SpectralBasis, traj: &ModalTrajectory) -> (Vec<f64>, Vec<f64>) {
    let lam = basis.eigenvalues();
    traj.values
        .iter()
        .map(|c| {
            let l2: f64 = c.iter().map(|x| x * x).sum();
            let h1: f64 = c.iter().zip(&lam).map(|(x, l)| l * x * x).sum();
            (l2, h1)
        })
        .unzip()
}

fn check_basis(basis: &SpectralBasis, traj: &ModalTrajectory) -> Result<()> {
    if basis.len() != traj.dim() {
        return Err(invalid(format!(
            "trajectory has {} modes but the basis has {}",
            traj.dim(),
            basis.len()
        )));
    }
    Ok(())
}

/// `sup_t ‖u‖²_{L²} ≤ T^α E_{α,α+1}(2νT^α) ‖f‖²_{L∞(H⁻¹)} / (2β)`.
pub fn energy_bound_check(
    traj: &ModalTrajectory,
    basis: &SpectralBasis,
    garding: GardingConstants,
    f_norm: f64,
) -> Result<EstimateCheck> {
    check_basis(basis, traj)?;
    let (l2, _) = norms_sq(basis, traj);
    let lhs = l2.iter().copied().fold(0.0, f64::max);
    let (alpha, t) = (traj.alpha, traj.grid.horizon());
    let ta = t.powf(alpha);
    let growth = mittag_leffler(MLParams::new(alpha, alpha + 1.0)?, 2.0 * garding.nu * ta)?;
    let rhs = ta * growth * f_norm * f_norm / (2.0 * garding.beta);
    Ok(EstimateCheck::new(
        "energy",
        lhs,
        rhs,
        constants(&[("beta", garding.beta), ("nu", garding.nu), ("f_norm", f_norm)]),
    ))
}

/// `β ∫‖u‖²_{H¹₀} ≤ T‖f‖²/β + 2ν ∫‖u‖²_{L²}`.
pub fn h1_bound_check(
    traj: &ModalTrajectory,
    basis: &SpectralBasis,
    garding: GardingConstants,
    f_norm: f64,
) -> Result<EstimateCheck> {
    check_basis(basis, traj)?;
    let (l2, h1) = norms_sq(basis, traj);
    let dt = traj.grid.dt();
    let t = traj.grid.horizon();
    let lhs = garding.beta * trapezoid(&h1, dt);
    let rhs = t * f_norm * f_norm / garding.beta + 2.0 * garding.nu * trapezoid(&l2, dt);
    Ok(EstimateCheck::new(
        "h1",
        lhs,
        rhs,
        constants(&[("beta", garding.beta), ("nu", garding.nu), ("f_norm", f_norm)]),
    ))
}

/// `‖∂^α u‖_{H⁻¹} = ‖f − Ac⃗‖_{H⁻¹} ≤ C₂‖u‖_{H¹₀} + ‖f‖_{H⁻¹}`, checked at
/// the worst node and in `L²(0,T)`.
pub fn dual_derivative_checks(
    traj: &ModalTrajectory,
    ivp: &FractionalIVP,
    basis: &SpectralBasis,
    c2: f64,
) -> Result<[EstimateCheck; 2]> {
    check_basis(basis, traj)?;
    traj.grid.ensure_same(ivp.grid())?;
    let lam = basis.eigenvalues();
    let hm1 = |v: &nalgebra::DVector<f64>| -> f64 { v.iter().zip(&lam).map(|(x, l)| x * x / l).sum::<f64>().sqrt() };
    let mut lhs = Vec::with_capacity(traj.values.len());
    let mut rhs = Vec::with_capacity(traj.values.len());
    for (m, c) in traj.values.iter().enumerate() {
        let f = &ivp.loads()[m];
        let a = &ivp.matrices()[m];
        let h1: f64 = c.iter().zip(&lam).map(|(x, l)| l * x * x).sum::<f64>().sqrt();
        lhs.push(hm1(&(f - a * c)));
        rhs.push(c2 * h1 + hm1(f));
    }
    let worst = (0..lhs.len())
        .min_by(|&i, &j| (rhs[i] - lhs[i]).total_cmp(&(rhs[j] - lhs[j])))
        .unwrap_or(0);
    let consts = constants(&[("c2", c2), ("t_worst", traj.grid.t(worst))]);
    let pointwise = EstimateCheck::new("dual_derivative_pointwise", lhs[worst], rhs[worst], consts);

    let dt = traj.grid.dt();
    let l2 = |v: Vec<f64>| trapezoid(&v, dt).sqrt();
    let u_h1: Vec<f64> = norms_sq(basis, traj).1;
    let f_sq: Vec<f64> = ivp.loads().iter().map(|f| hm1(f).powi(2)).collect();
    let lhs_l2 = l2(lhs.iter().map(|x| x * x).collect());
    let rhs_l2 = c2 * l2(u_h1) + l2(f_sq);
    let aggregate = EstimateCheck::new("dual_derivative_l2", lhs_l2, rhs_l2, constants(&[("c2", c2)]));
    Ok([pointwise, aggregate])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallResult {
    pub check: EstimateCheck,
    /// `sup_t ‖u_a − u_b‖²_{L²}`
    pub defect: f64,
}

/// `w = ‖u_a − u_b‖²_{L²}` must satisfy `w ≤ 2ν (l ∗ w) + ε` at every node;
/// the reported node is the one with the smallest margin.
pub fn gronwall_check(a: &ModalTrajectory, b: &ModalTrajectory, nu: f64, eps: f64) -> Result<GronwallResult> {
    a.grid.ensure_same(&b.grid)?;
    let n = a.dim().max(b.dim());
    let (ra, rb) = (a.resized(n), b.resized(n));
    let w: Vec<f64> = ra
        .values
        .iter()
        .zip(&rb.values)
        .map(|(x, y)| (x - y).norm_squared())
        .collect();
    let lw = rl_integral(&GridSeries::new(a.grid, w.clone())?, a.alpha)?;
    let rhs: Vec<f64> = lw.values().iter().map(|v| 2.0 * nu * v + eps).collect();
    let worst = (0..w.len())
        .min_by(|&i, &j| (rhs[i] - w[i]).total_cmp(&(rhs[j] - w[j])))
        .unwrap_or(0);
    let defect = w.iter().copied().fold(0.0, f64::max);
    Ok(GronwallResult {
        check: EstimateCheck::new(
            "gronwall",
            w[worst],
            rhs[worst],
            constants(&[("nu", nu), ("eps", eps), ("t_worst", a.grid.t(worst))]),
        ),
        defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub modes: usize,
    pub next_modes: usize,
    /// `‖u_{N'} − u_N‖_{L²(0,T;L²)}`
    pub distance: f64,
}

/// Galerkin solutions for each entry of `modes` on a common time grid and
/// the `L²(0,T;L²)` distance between consecutive ones.
pub fn galerkin_convergence(spec: &ProblemSpec, modes: &[usize], steps: usize) -> Result<Vec<ConvergenceRow>> {
    if modes.len() < 2 {
        return Err(invalid("need at least two mode counts"));
    }
    let sols: Vec<ModalTrajectory> = modes
        .iter()
        .map(|&n| {
            let sys = spec.with_discretization(n, steps).galerkin_system()?;
            Ok(sys.solve(Scheme::L1, &PicardConfig::default())?.0)
        })
        .collect::<Result<_>>()?;
    modes
        .windows(2)
        .zip(sols.windows(2))
        .map(|(n, s)| {
            Ok(ConvergenceRow {
                modes: n[0],
                next_modes: n[1],
                distance: l2_time_distance(&s[0], &s[1])?,
            })
        })
        .collect()
}

/// `‖u_a − u_b‖_{L²(0,T;L²)}` (trapezoidal in time) after zero-padding to
/// a common mode count.
pub fn l2_time_distance(a: &ModalTrajectory, b: &ModalTrajectory) -> Result<f64> {
    a.grid.ensure_same(&b.grid)?;
    let k = a.dim().max(b.dim());
    let (a, b) = (a.resized(k), b.resized(k));
    let d: Vec<f64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).norm_squared())
        .collect();
    Ok(trapezoid(&d, a.grid.dt()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YosidaRow {
    pub n: u32,
    /// `sup_t |s_n + n (l ∗ s_n) − 1|`, `s_n(t) = E_α(−n t^α)`
    pub kernel_residual: f64,
    /// `‖d/dt((k_n − k) ∗ u)‖_{L²(0,T;H⁻¹)}`
    pub d_n: f64,
    /// `∫ |⟨d/dt((k_n − k) ∗ u), u⟩| dt`
    pub h_n: f64,
}

/// Kernel residual of the Yosida approximation `k_n = n E_α(−n t^α)` of
/// `k(t) = t^{−α}/Γ(1−α)`, and the convergence of `d/dt(k_n ∗ u)` to the
/// Caputo derivative of `u`. Convolutions of the piecewise-linear
/// interpolant are exact; the time derivative is a centered difference.
pub fn yosida_study(traj: &ModalTrajectory, eigenvalues: &[f64], ns: &[u32]) -> Result<Vec<YosidaRow>> {
    if eigenvalues.len() != traj.dim() {
        return Err(invalid("one eigenvalue per mode is required"));
    }
    let grid = traj.grid;
    let alpha = traj.alpha;
    let modes: Vec<Vec<f64>> = (0..traj.dim()).map(|i| traj.mode(i).into_values()).collect();
    let k_conv: Vec<Vec<f64>> = {
        let pw = PowerWeights::new(1.0 - alpha, &grid);
        modes.iter().map(|v| pw.apply(v)).collect()
    };
    ns.par_iter()
        .map(|&n| {
            let nf = f64::from(n);
            if n == 0 {
                return Err(invalid("Yosida index starts at 1"));
            }
            let ls = rl_integral_graded(|t| ml1(alpha, -nf * t.powf(alpha)).unwrap_or(f64::NAN), &grid, alpha)?;
            let mut kernel_residual = 0.0f64;
            for m in 0..grid.len() {
                let s = ml1(alpha, -nf * grid.t(m).powf(alpha))?;
                kernel_residual = kernel_residual.max((s + nf * ls.at(m) - 1.0).abs());
            }

            let kn = MlKernelWeights::new(alpha, 1.0, nf, nf, &grid)?;
            let g: Vec<Vec<f64>> = modes
                .iter()
                .zip(&k_conv)
                .map(|(v, kc)| {
                    let diff: Vec<f64> = kn.apply(v).iter().zip(kc).map(|(a, b)| a - b).collect();
                    centered_derivative(&diff, grid.dt())
                })
                .collect();
            let mut hm1_sq = vec![0.0; grid.len()];
            let mut pairing = vec![0.0; grid.len()];
            for m in 0..grid.len() {
                for i in 0..modes.len() {
                    hm1_sq[m] += g[i][m] * g[i][m] / eigenvalues[i];
                    pairing[m] += g[i][m] * modes[i][m];
                }
                pairing[m] = pairing[m].abs();
            }
            Ok(YosidaRow {
                n,
                kernel_residual,
                d_n: trapezoid(&hm1_sq, grid.dt()).sqrt(),
                h_n: trapezoid(&pairing, grid.dt()),
            })
        })
        .collect()
}

/// [`yosida_study`] for a scalar function, paired with itself in `ℝ`.
pub fn yosida_study_scalar(u: &GridSeries, alpha: f64, ns: &[u32]) -> Result<Vec<YosidaRow>> {
    let traj = ModalTrajectory {
        grid: *u.grid(),
        alpha,
        values: u
            .values()
            .iter()
            .map(|&v| nalgebra::DVector::from_element(1, v))
            .collect(),
        provenance: Provenance::Oracle,
    };
    yosida_study(&traj, &[1.0], ns)
}

fn centered_derivative(v: &[f64], dt: f64) -> Vec<f64> {
    let m = v.len() - 1;
    (0..=m)
        .map(|i| match i {
            0 => (v[1] - v[0]) / dt,
            i if i == m => (v[m] - v[m - 1]) / dt,
            i => (v[i + 1] - v[i - 1]) / (2.0 * dt),
        })
        .collect()
}

/// `sup_t ‖f(t)‖_{H⁻¹}` of the full (untruncated) forcing, sampled on the
/// time grid refined eightfold.
pub fn forcing_hm1_sup(spec: &ProblemSpec, grid: &TimeGrid) -> Result<f64> {
    let top = spec.forcing.highest_mode();
    if top == 0 {
        return Ok(0.0);
    }
    let full = SpectralBasis::new(spec.geometry.clone(), top)?;
    let lam = full.eigenvalues();
    let fine = TimeGrid::new(grid.horizon(), 8 * grid.steps())?;
    let mut worst = 0.0f64;
    for t in fine.nodes() {
        let f = spec.forcing.vector(top, t)?;
        let s: f64 = f.iter().zip(&lam).map(|(x, l)| x * x / l).sum();
        worst = worst.max(s.sqrt());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub alpha: f64,
    pub horizon: f64,
    pub modes: usize,
    pub steps: usize,
    pub scheme: Scheme,
    pub constants: BTreeMap<String, f64>,
    pub checks: Vec<EstimateCheck>,
    /// observed ratios `lhs / ‖f‖²` (or `lhs / ‖f‖`) standing in for the
    /// unspecified constants of the estimates
    pub measured: BTreeMap<String, f64>,
    /// `sup_t ‖u_picard − u_l1‖²_{L²}`
    pub cross_scheme_defect: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VerifyOptions {
    /// replaces the computed Gårding shift `ν`
    pub nu: Option<f64>,
    pub picard: PicardConfig,
}

/// Solves the problem with its configured scheme and evaluates every
/// estimate on the result. The Gronwall check compares two Picard runs
/// with different weights (`ε = (2·tol)²`); the cross-scheme distance is
/// reported separately.
pub fn verify_problem(spec: &ProblemSpec, opts: &VerifyOptions) -> Result<EstimateReport> {
    let report = spec.validate()?;
    let sys = spec.galerkin_system()?;
    let cfg = opts.picard;
    let (traj, _) = sys.solve(spec.discretization.scheme, &cfg)?;

    let theta = report.theta_hat / SUP_SAFETY;
    let mut garding = garding_constants(&spec.coefficients, theta)?;
    if let Some(nu) = opts.nu {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(invalid(format!("nu must be nonnegative, got {nu}")));
        }
        garding.nu = nu;
    }
    let c2 = continuity_constant(&spec.coefficients, &sys.basis)?;
    let f_norm = forcing_hm1_sup(spec, sys.ivp.grid())?;

    let mut checks = vec![
        energy_bound_check(&traj, &sys.basis, garding, f_norm)?,
        h1_bound_check(&traj, &sys.basis, garding, f_norm)?,
    ];
    checks.extend(dual_derivative_checks(&traj, &sys.ivp, &sys.basis, c2)?);

    let (p1, _) = sys.solve(Scheme::Picard, &cfg)?;
    let gamma = cfg.resolve_gamma(&sys.ivp);
    let doubled = PicardConfig {
        gamma: Gamma::Value(2.0 * gamma),
        ..cfg
    };
    let (p2, _) = crate::fode::picard_solve(&sys.ivp, &doubled)?;
    let eps = (2.0 * cfg.tol).powi(2);
    checks.push(gronwall_check(&p1, &p2, garding.nu, eps)?.check);
    let other = match spec.discretization.scheme {
        Scheme::L1 => p1,
        Scheme::Picard => sys.solve(Scheme::L1, &cfg)?.0,
    };
    let cross = traj.sup_distance(&other)?.powi(2);

    let f2 = f_norm * f_norm;
    let ratio = |x: f64, d: f64| if d > 0.0 { x / d } else { 0.0 };
    let measured = constants(&[
        ("energy", ratio(checks[0].lhs, f2)),
        ("h1", ratio(checks[1].lhs, f2)),
        ("dual_derivative", ratio(checks[3].lhs, f_norm * spec.horizon.sqrt())),
    ]);
    Ok(EstimateReport {
        alpha: spec.alpha,
        horizon: spec.horizon,
        modes: spec.discretization.modes,
        steps: spec.discretization.steps,
        scheme: spec.discretization.scheme,
        constants: constants(&[
            ("theta_hat", report.theta_hat),
            ("theta", theta),
            ("beta", garding.beta),
            ("nu", garding.nu),
            ("c2", c2),
            ("f_norm", f_norm),
        ]),
        passed: checks.iter().all(|c| c.pass),
        checks,
        measured,
        cross_scheme_defect: cross,
    })
}
