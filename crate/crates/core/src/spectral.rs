//! Dirichlet-Laplacian sine bases on intervals and rectangles, composite
//! Gauss–Legendre quadrature and assembly of the Galerkin matrices.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::expr::{CoefficientField, Expr, Var, SUP_SAFETY};
use crate::quad::gauss_legendre;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainGeometry {
    lengths: Vec<f64>,
}

impl DomainGeometry {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 2 {
            return Err(invalid(format!("dimension must be 1 or 2, got {}", lengths.len())));
        }
        if let Some(l) = lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(invalid(format!("side lengths must be positive, got {l}")));
        }
        Ok(DomainGeometry { lengths })
    }

    pub fn interval(length: f64) -> Result<Self> {
        Self::new(vec![length])
    }

    pub fn rectangle(l1: f64, l2: f64) -> Result<Self> {
        Self::new(vec![l1, l2])
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }
}

/// One eigenpair, indexed by its per-axis mode numbers (`l = 0` in 1D).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: [usize; 2],
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    geometry: DomainGeometry,
    modes: Vec<Mode>,
}

impl SpectralBasis {
    /// First `n` eigenpairs in nondecreasing eigenvalue order; 2D ties are
    /// broken by the lexicographic mode pair.
    pub fn new(geometry: DomainGeometry, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("mode count must be at least 1"));
        }
        let ls = geometry.lengths().to_vec();
        let modes = if ls.len() == 1 {
            (1..=n)
                .map(|k| Mode {
                    index: [k, 0],
                    eigenvalue: (k as f64 * PI / ls[0]).powi(2),
                })
                .collect()
        } else {
            let mut all = Vec::with_capacity(n * n);
            for k in 1..=n {
                for l in 1..=n {
                    all.push(Mode {
                        index: [k, l],
                        eigenvalue: (k as f64 * PI / ls[0]).powi(2) + (l as f64 * PI / ls[1]).powi(2),
                    });
                }
            }
            all.sort_by(|a, b| {
                let tie = 1e-12 * a.eigenvalue.max(b.eigenvalue);
                if (a.eigenvalue - b.eigenvalue).abs() <= tie {
                    a.index.cmp(&b.index)
                } else {
                    a.eigenvalue.total_cmp(&b.eigenvalue)
                }
            });
            all.truncate(n);
            all
        };
        Ok(SpectralBasis { geometry, modes })
    }

    pub fn geometry(&self) -> &DomainGeometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    /// Largest per-axis mode number in the basis.
    pub fn max_axis_index(&self) -> usize {
        self.modes.iter().map(|m| m.index[0].max(m.index[1])).max().unwrap_or(1)
    }

    /// `e_i(p)` and `∇e_i(p)`.
    pub fn eval(&self, i: usize, p: &[f64]) -> (f64, [f64; 2]) {
        let ls = self.geometry.lengths();
        let m = &self.modes[i];
        let w0 = m.index[0] as f64 * PI / ls[0];
        let (s0, c0) = (w0 * p[0]).sin_cos();
        if ls.len() == 1 {
            let norm = (2.0 / ls[0]).sqrt();
            (norm * s0, [norm * w0 * c0, 0.0])
        } else {
            let norm = 2.0 / (ls[0] * ls[1]).sqrt();
            let w1 = m.index[1] as f64 * PI / ls[1];
            let (s1, c1) = (w1 * p[1]).sin_cos();
            (norm * s0 * s1, [norm * w0 * c0 * s1, norm * w1 * s0 * c1])
        }
    }

    /// Poincaré constant `1/√λ₁`.
    pub fn poincare_constant(&self) -> f64 {
        1.0 / self.modes[0].eigenvalue.sqrt()
    }
}

/// Composite Gauss–Legendre rule: `panels` per axis, `points` per panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub panels: usize,
    pub points: usize,
}

impl QuadratureRule {
    pub fn new(panels: usize, points: usize) -> Result<Self> {
        if panels == 0 || points == 0 {
            return Err(invalid("quadrature needs at least one panel and one point"));
        }
        Ok(QuadratureRule { panels, points })
    }

    /// Four panels per half-wave of the most oscillatory axis mode, four
    /// points per panel.
    pub fn default_for(basis: &SpectralBasis) -> Self {
        QuadratureRule {
            panels: 4 * basis.max_axis_index(),
            points: 4,
        }
    }

    fn axis(&self, length: f64) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(self.points);
        let h = length / self.panels as f64;
        let mut nodes = Vec::with_capacity(self.panels * self.points);
        let mut weights = Vec::with_capacity(self.panels * self.points);
        for p in 0..self.panels {
            let a = p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(a + 0.5 * h * (xi + 1.0));
                weights.push(0.5 * h * wi);
            }
        }
        (nodes, weights)
    }

    /// Tensor-product nodes (x fastest within y) and weights on the domain.
    pub fn grid(&self, geometry: &DomainGeometry) -> QuadGrid {
        let ls = geometry.lengths();
        let (x, wx) = self.axis(ls[0]);
        if ls.len() == 1 {
            return QuadGrid {
                points: x.iter().map(|&x| [x, 0.0]).collect(),
                weights: wx,
                dim: 1,
            };
        }
        let (y, wy) = self.axis(ls[1]);
        let mut points = Vec::with_capacity(x.len() * y.len());
        let mut weights = Vec::with_capacity(x.len() * y.len());
        for (yj, wj) in y.iter().zip(&wy) {
            for (xi, wi) in x.iter().zip(&wx) {
                points.push([*xi, *yj]);
                weights.push(wi * wj);
            }
        }
        QuadGrid {
            points,
            weights,
            dim: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadGrid {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    dim: usize,
}

impl QuadGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, q: usize) -> &[f64] {
        &self.points[q][..self.dim]
    }
}

/// `a_ij` (upper triangle, row-major: `a11`, or `a11, a12, a22`), `b_j`, `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub a: Vec<CoefficientField>,
    pub b: Vec<CoefficientField>,
    pub c: CoefficientField,
}

impl Coefficients {
    /// Identity diffusion, no transport, no reaction.
    pub fn laplacian(geometry: &DomainGeometry, horizon: f64) -> Self {
        let ls = geometry.lengths().to_vec();
        let field = |v: f64| CoefficientField::constant(v, ls.clone(), horizon);
        let a = if ls.len() == 1 {
            vec![field(1.0)]
        } else {
            vec![field(1.0), field(0.0), field(1.0)]
        };
        Coefficients {
            a,
            b: (0..ls.len()).map(|_| field(0.0)).collect(),
            c: field(0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `a_kl` with `a_lk` read from the upper triangle.
    pub fn a(&self, k: usize, l: usize) -> &CoefficientField {
        let (i, j) = if k <= l { (k, l) } else { (l, k) };
        match (self.dim(), i, j) {
            (1, _, _) => &self.a[0],
            (_, 0, 0) => &self.a[0],
            (_, 0, 1) => &self.a[1],
            _ => &self.a[2],
        }
    }

    fn check_shape(&self) -> Result<()> {
        let d = self.dim();
        let expected = if d == 1 { 1 } else { 3 };
        if !(d == 1 || d == 2) || self.a.len() != expected {
            return Err(invalid(format!(
                "expected {expected} diffusion entries for dimension {d}, got {}",
                self.a.len()
            )));
        }
        Ok(())
    }

    pub fn depends_on_time(&self) -> bool {
        self.all().any(|f| f.expr.uses(Var::T))
    }

    fn all(&self) -> impl Iterator<Item = &CoefficientField> {
        self.a.iter().chain(self.b.iter()).chain(std::iter::once(&self.c))
    }

    fn diffusion_at(&self, t: f64, p: &[f64]) -> Result<[f64; 3]> {
        if self.dim() == 1 {
            let v = self.a[0].eval(t, p)?;
            Ok([v, 0.0, 0.0])
        } else {
            Ok([self.a[0].eval(t, p)?, self.a[1].eval(t, p)?, self.a[2].eval(t, p)?])
        }
    }

    fn min_eigenvalue(&self, entries: [f64; 3]) -> f64 {
        if self.dim() == 1 {
            entries[0]
        } else {
            let [a, b, c] = entries;
            let mean = 0.5 * (a + c);
            let half = 0.5 * (a - c);
            mean - half.hypot(b)
        }
    }
}

/// Modal forcing `f(t) = Σ_j f^j(t) e_j`, modes numbered from 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModalForcing {
    pub terms: Vec<(usize, Expr)>,
}

impl ModalForcing {
    pub fn new(terms: Vec<(usize, Expr)>) -> Result<Self> {
        for (j, e) in &terms {
            if *j == 0 {
                return Err(invalid("forcing modes are numbered from 1"));
            }
            if e.uses(Var::X) || e.uses(Var::Y) {
                return Err(invalid(format!("forcing amplitude of mode {j} may depend on t only")));
            }
        }
        Ok(ModalForcing { terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(_, e)| *e == Expr::Num(0.0))
    }

    pub fn highest_mode(&self) -> usize {
        self.terms.iter().map(|(j, _)| *j).max().unwrap_or(0)
    }

    /// `f⃗(t)` truncated to `n` modes.
    pub fn vector(&self, n: usize, t: f64) -> Result<DVector<f64>> {
        let mut f = DVector::zeros(n);
        for (j, e) in &self.terms {
            if *j <= n {
                f[j - 1] += e.eval(t, &[])?;
            }
        }
        Ok(f)
    }

    /// `sup_t (Σ_{j>n} f^j(t)²/λ_j)^{1/2}` over `times`: the H⁻¹ size of the
    /// discarded part of the forcing.
    pub fn truncation_hm1(&self, geometry: &DomainGeometry, n: usize, times: &[f64]) -> Result<f64> {
        let top = self.highest_mode();
        if top <= n {
            return Ok(0.0);
        }
        let full = SpectralBasis::new(geometry.clone(), top)?;
        let mut worst = 0.0f64;
        for &t in times {
            let f = self.vector(top, t)?;
            let s: f64 = (n..top).map(|k| f[k] * f[k] / full.modes[k].eigenvalue).sum();
            worst = worst.max(s.sqrt());
        }
        Ok(worst)
    }
}

/// `A(t)` with `A_ij = a(e_j, e_i; t)` and the load `f⃗(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledForm {
    pub t: f64,
    pub a: DMatrix<f64>,
    pub f: DVector<f64>,
}

/// Basis values and gradients tabulated at the quadrature nodes, plus the
/// time-independent coefficient samples.
pub struct Assembler<'a> {
    basis: &'a SpectralBasis,
    coeffs: &'a Coefficients,
    forcing: &'a ModalForcing,
    grid: QuadGrid,
    phi: DMatrix<f64>,
    grads: Vec<DMatrix<f64>>,
    frozen: Option<DMatrix<f64>>,
}

impl<'a> Assembler<'a> {
    pub fn new(
        basis: &'a SpectralBasis,
        coeffs: &'a Coefficients,
        forcing: &'a ModalForcing,
        rule: QuadratureRule,
    ) -> Result<Self> {
        coeffs.check_shape()?;
        let d = basis.geometry().dim();
        if coeffs.dim() != d {
            return Err(invalid(format!(
                "coefficients are for dimension {}, domain has dimension {d}",
                coeffs.dim()
            )));
        }
        let grid = rule.grid(basis.geometry());
        let (q, n) = (grid.len(), basis.len());
        let mut phi = DMatrix::zeros(q, n);
        let mut grads = vec![DMatrix::zeros(q, n); d];
        for (qi, p) in grid.points.iter().enumerate() {
            for i in 0..n {
                let (v, g) = basis.eval(i, p);
                phi[(qi, i)] = v;
                for (k, gk) in grads.iter_mut().enumerate() {
                    gk[(qi, i)] = g[k];
                }
            }
        }
        let mut asm = Assembler {
            basis,
            coeffs,
            forcing,
            grid,
            phi,
            grads,
            frozen: None,
        };
        if let Some(diag) = asm.separable_diagonal()? {
            asm.frozen = Some(diag);
        } else if !coeffs.depends_on_time() {
            asm.frozen = Some(asm.matrix(0.0)?);
        }
        Ok(asm)
    }

    /// Constant diagonal diffusion, no advection, constant reaction: the
    /// basis diagonalizes the form, `A_ii = Σ_k a_kk (n_k π/L_k)² + c`.
    fn separable_diagonal(&self) -> Result<Option<DMatrix<f64>>> {
        let co = self.coeffs;
        let zero = Expr::Num(0.0);
        let off_diagonal_free = co.dim() == 1 || co.a[1].expr == zero;
        if !off_diagonal_free || co.b.iter().any(|f| f.expr != zero) || !co.all().all(|f| f.expr.is_constant()) {
            return Ok(None);
        }
        let diag: Vec<f64> = (0..co.dim())
            .map(|k| co.a(k, k).eval(0.0, &[0.0; 2][..co.dim()]))
            .collect::<Result<_, _>>()?;
        if let Some(&lam) = diag.iter().find(|&&v| v <= 0.0) {
            return Err(Error::Assumption {
                assumption: "(a3)",
                detail: format!("constant diffusion coefficient {lam:.6e} is not positive"),
            });
        }
        let c = co.c.eval(0.0, &[0.0; 2][..co.dim()])?;
        let ls = self.basis.geometry().lengths();
        let entries = self.basis.modes().iter().map(|m| {
            let mut v = c;
            for k in 0..co.dim() {
                v += diag[k] * (m.index[k] as f64 * PI / ls[k]).powi(2);
            }
            v
        });
        Ok(Some(DMatrix::from_diagonal(&DVector::from_iterator(
            self.basis.len(),
            entries,
        ))))
    }

    pub fn quad_grid(&self) -> &QuadGrid {
        &self.grid
    }

    pub fn time_dependent(&self) -> bool {
        self.frozen.is_none()
    }

    fn matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        let d = self.basis.geometry().dim();
        let q = self.grid.len();
        let n = self.basis.len();
        let mut diff = vec![DVector::zeros(q); d * d];
        let mut adv = vec![DVector::zeros(q); d];
        let mut react = DVector::zeros(q);
        for qi in 0..q {
            let p = self.grid.point(qi);
            let w = self.grid.weights[qi];
            let entries = self.coeffs.diffusion_at(t, p)?;
            let lam = self.coeffs.min_eigenvalue(entries);
            if lam <= 0.0 {
                return Err(Error::Assumption {
                    assumption: "(a3)",
                    detail: format!("diffusion matrix has eigenvalue {lam:.6e} at t = {t}, point {p:?}"),
                });
            }
            for k in 0..d {
                for l in 0..d {
                    diff[k * d + l][qi] = w * self.coeffs.a(k, l).eval(t, p)?;
                }
                adv[k][qi] = w * self.coeffs.b[k].eval(t, p)?;
            }
            react[qi] = w * self.coeffs.c.eval(t, p)?;
        }
        let mut a = DMatrix::zeros(n, n);
        let scaled = |m: &DMatrix<f64>, w: &DVector<f64>| {
            let mut s = m.clone();
            for (qi, mut row) in s.row_iter_mut().enumerate() {
                row *= w[qi];
            }
            s
        };
        for l in 0..d {
            for k in 0..d {
                let wg = scaled(&self.grads[l], &diff[k * d + l]);
                a.gemm_tr(1.0, &self.grads[k], &wg, 1.0);
            }
            let wb = scaled(&self.grads[l], &adv[l]);
            a.gemm_tr(1.0, &self.phi, &wb, 1.0);
        }
        let wc = scaled(&self.phi, &react);
        a.gemm_tr(1.0, &self.phi, &wc, 1.0);
        Ok(a)
    }

    pub fn assemble(&self, t: f64) -> Result<AssembledForm> {
        let a = match &self.frozen {
            Some(m) => m.clone(),
            None => self.matrix(t)?,
        };
        Ok(AssembledForm {
            t,
            a,
            f: self.forcing.vector(self.basis.len(), t)?,
        })
    }

    /// `c_i = ∫ u e_i` for `u` sampled at [`Self::quad_grid`] points.
    pub fn project(&self, samples: &[f64]) -> Result<ModalVector> {
        project(samples, self.basis, &self.grid)
    }
}

/// One-shot assembly at time `t`.
pub fn assemble(
    basis: &SpectralBasis,
    coeffs: &Coefficients,
    forcing: &ModalForcing,
    t: f64,
    rule: QuadratureRule,
) -> Result<AssembledForm> {
    Assembler::new(basis, coeffs, forcing, rule)?.assemble(t)
}

/// Modal coefficients of a function in span(e_1..e_N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalVector {
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalNorms {
    pub l2: f64,
    pub h10: f64,
    pub hminus1: f64,
}

/// `‖v‖_{L²}`, `‖Dv‖_{L²}` and the dual norm `(Σ c_k²/λ_k)^{1/2}`.
pub fn modal_norms(basis: &SpectralBasis, coeffs: &[f64]) -> Result<ModalNorms> {
    if coeffs.len() != basis.len() {
        return Err(invalid(format!(
            "{} coefficients for a basis of {} modes",
            coeffs.len(),
            basis.len()
        )));
    }
    let (mut l2, mut h1, mut hm1) = (0.0, 0.0, 0.0);
    for (c, m) in coeffs.iter().zip(basis.modes()) {
        l2 += c * c;
        h1 += m.eigenvalue * c * c;
        hm1 += c * c / m.eigenvalue;
    }
    Ok(ModalNorms {
        l2: l2.sqrt(),
        h10: h1.sqrt(),
        hminus1: hm1.sqrt(),
    })
}

pub fn project(samples: &[f64], basis: &SpectralBasis, grid: &QuadGrid) -> Result<ModalVector> {
    if samples.len() != grid.len() {
        return Err(invalid(format!(
            "{} samples for a quadrature grid of {} nodes",
            samples.len(),
            grid.len()
        )));
    }
    let mut coeffs = vec![0.0; basis.len()];
    for (q, (u, w)) in samples.iter().zip(&grid.weights).enumerate() {
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c += w * u * basis.eval(i, &grid.points[q]).0;
        }
    }
    Ok(ModalVector { coeffs })
}

/// Samples per axis used by [`check_ellipticity`].
pub const ELLIPTICITY_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    /// smallest sampled eigenvalue of `(a_ij)`
    pub theta_hat: f64,
    pub theta_min: f64,
    pub passed: bool,
    pub worst_t: f64,
    pub worst_point: Vec<f64>,
}

/// Samples `(t, x)` on a tensor grid (endpoints included) and records the
/// smallest eigenvalue of the symmetric diffusion matrix.
pub fn check_ellipticity(
    coeffs: &Coefficients,
    geometry: &DomainGeometry,
    horizon: f64,
    theta_min: f64,
) -> Result<EllipticityReport> {
    coeffs.check_shape()?;
    let n = ELLIPTICITY_SAMPLES;
    let lin = |len: f64| -> Vec<f64> { (0..n).map(|i| len * i as f64 / (n - 1) as f64).collect() };
    let ls = geometry.lengths();
    let ts = if coeffs.a.iter().any(|f| f.expr.uses(Var::T)) {
        lin(horizon)
    } else {
        vec![0.0]
    };
    let xs = lin(ls[0]);
    let ys = if ls.len() == 2 { lin(ls[1]) } else { vec![0.0] };
    let mut best = (f64::INFINITY, 0.0, vec![]);
    for &t in &ts {
        for &y in &ys {
            for &x in &xs {
                let p = [x, y];
                let p = &p[..ls.len()];
                let lam = coeffs.min_eigenvalue(coeffs.diffusion_at(t, p)?);
                if lam < best.0 {
                    best = (lam, t, p.to_vec());
                }
            }
        }
    }
    Ok(EllipticityReport {
        theta_hat: best.0,
        theta_min,
        passed: best.0 >= theta_min,
        worst_t: best.1,
        worst_point: best.2,
    })
}

/// `1.05 · sup |(b_1, .., b_d)|` over the sampling grid of
/// [`CoefficientField::sup_bound`].
pub fn advection_sup(coeffs: &Coefficients) -> Result<f64> {
    if coeffs.b.iter().all(|f| f.expr == Expr::Num(0.0)) {
        return Ok(0.0);
    }
    let sum = coeffs.b.iter().fold(Expr::Num(0.0), |acc, f| {
        let sq = Expr::Binary(
            crate::expr::BinOp::Mul,
            Box::new(f.expr.clone()),
            Box::new(f.expr.clone()),
        );
        Expr::Binary(crate::expr::BinOp::Add, Box::new(acc), Box::new(sq))
    });
    let field = CoefficientField::new(sum, coeffs.c.lengths.clone(), coeffs.c.horizon);
    // sup √g = √(sup g); undo the inner factor and apply it once
    Ok(SUP_SAFETY * (field.sup_bound()? / SUP_SAFETY).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GardingConstants {
    pub beta: f64,
    pub nu: f64,
}

/// `β = θ/2`, `ν = ‖b‖²_∞/(2θ) + ‖c‖_∞` from
/// `a(u,u) ≥ θ‖Du‖² − ‖b‖_∞‖Du‖‖u‖ − ‖c‖_∞‖u‖²` and Young's inequality.
pub fn garding_constants(coeffs: &Coefficients, theta: f64) -> Result<GardingConstants> {
    if !(theta > 0.0) {
        return Err(Error::Assumption {
            assumption: "(a3)",
            detail: format!("ellipticity constant must be positive, got {theta}"),
        });
    }
    let b = advection_sup(coeffs)?;
    let c = coeffs.c.sup_bound()?;
    Ok(GardingConstants {
        beta: 0.5 * theta,
        nu: b * b / (2.0 * theta) + c,
    })
}

/// `C₂ = Σ‖a_ij‖_∞ + C_Ω Σ‖b_j‖_∞ + C_Ω²‖c‖_∞`, `C_Ω = 1/√λ₁`.
pub fn continuity_constant(coeffs: &Coefficients, basis: &SpectralBasis) -> Result<f64> {
    let d = coeffs.dim();
    let mut sum_a = 0.0;
    for k in 0..d {
        for l in 0..d {
            sum_a += coeffs.a(k, l).sup_bound()?;
        }
    }
    let mut sum_b = 0.0;
    for f in &coeffs.b {
        sum_b += f.sup_bound()?;
    }
    let cp = basis.poincare_constant();
    Ok(sum_a + cp * sum_b + cp * cp * coeffs.c.sup_bound()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn field(s: &str, ls: &[f64]) -> CoefficientField {
        CoefficientField::new(parse(s).unwrap(), ls.to_vec(), 1.0)
    }

    #[test]
    fn eigenvalues_1d() {
        let b = SpectralBasis::new(DomainGeometry::interval(1.0).unwrap(), 1).unwrap();
        assert!((b.modes()[0].eigenvalue - 9.869_604_401_089_358).abs() < 1e-12);
        let b = SpectralBasis::new(DomainGeometry::interval(2.0).unwrap(), 3).unwrap();
        let q = (PI / 2.0).powi(2);
        for (m, k) in b.modes().iter().zip([1.0, 4.0, 9.0]) {
            assert!((m.eigenvalue - q * k).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_2d_with_ties() {
        let b = SpectralBasis::new(DomainGeometry::rectangle(1.0, 1.0).unwrap(), 4).unwrap();
        let idx: Vec<_> = b.modes().iter().map(|m| m.index).collect();
        assert_eq!(idx, vec![[1, 1], [1, 2], [2, 1], [2, 2]]);
        let p2 = PI * PI;
        for (m, k) in b.modes().iter().zip([2.0, 5.0, 5.0, 8.0]) {
            assert!((m.eigenvalue - p2 * k).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(DomainGeometry::interval(0.0).is_err());
        assert!(DomainGeometry::new(vec![1.0, 1.0, 1.0]).is_err());
        assert!(SpectralBasis::new(DomainGeometry::interval(1.0).unwrap(), 0).is_err());
    }

    fn gram(basis: &SpectralBasis) -> (f64, f64) {
        let grid = QuadratureRule::default_for(basis).grid(basis.geometry());
        let n = basis.len();
        let (mut mass, mut stiff) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                let (mut m, mut s) = (0.0, 0.0);
                for (p, w) in grid.points.iter().zip(&grid.weights) {
                    let (vi, gi) = basis.eval(i, p);
                    let (vj, gj) = basis.eval(j, p);
                    m += w * vi * vj;
                    s += w * (gi[0] * gj[0] + gi[1] * gj[1]);
                }
                let delta = if i == j { 1.0 } else { 0.0 };
                mass = mass.max((m - delta).abs());
                stiff = stiff.max((s - delta * basis.modes()[i].eigenvalue).abs() / basis.modes()[i].eigenvalue);
            }
        }
        (mass, stiff)
    }

    #[test]
    fn orthonormal_under_default_quadrature() {
        let b = SpectralBasis::new(DomainGeometry::interval(1.7).unwrap(), 64).unwrap();
        let (m, s) = gram(&b);
        assert!(m < 1e-10 && s < 1e-10, "{m} {s}");
        let b = SpectralBasis::new(DomainGeometry::rectangle(1.0, 2.0).unwrap(), 12).unwrap();
        let (m, s) = gram(&b);
        assert!(m < 1e-10 && s < 1e-10, "{m} {s}");
    }

    #[test]
    fn laplacian_assembles_to_eigenvalues() {
        let g = DomainGeometry::interval(1.0).unwrap();
        let b = SpectralBasis::new(g.clone(), 5).unwrap();
        let mut c = Coefficients::laplacian(&g, 1.0);
        let f = ModalForcing::default();
        let form = assemble(&b, &c, &f, 0.0, QuadratureRule::default_for(&b)).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let exact = if i == j { b.modes()[i].eigenvalue } else { 0.0 };
                assert!((form.a[(i, j)] - exact).abs() < 1e-10);
            }
        }
        c.c = CoefficientField::constant(1.0, vec![1.0], 1.0);
        let form = assemble(&b, &c, &f, 0.0, QuadratureRule::default_for(&b)).unwrap();
        assert!((form.a[(2, 2)] - b.modes()[2].eigenvalue - 1.0).abs() < 1e-10);
    }

    #[test]
    fn variable_diffusion_entry_against_dense_sum() {
        let g = DomainGeometry::interval(1.0).unwrap();
        let b = SpectralBasis::new(g.clone(), 2).unwrap();
        let mut c = Coefficients::laplacian(&g, 1.0);
        c.a[0] = field("1 + 0.5*sin(pi*x)*t", &[1.0]);
        let form = assemble(&b, &c, &ModalForcing::default(), 1.0, QuadratureRule::default_for(&b)).unwrap();
        // midpoint sum with 10^6 cells
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            let d = 2f64.sqrt() * PI * (PI * x).cos();
            s += (1.0 + 0.5 * (PI * x).sin()) * d * d * h;
        }
        assert!((form.a[(0, 0)] - s).abs() < 1e-8, "{} vs {s}", form.a[(0, 0)]);
        assert!((s - PI * PI * (1.0 + 2.0 / (3.0 * PI))).abs() < 1e-8);
    }

    #[test]
    fn symmetric_without_advection() {
        let g = DomainGeometry::rectangle(1.0, 1.5).unwrap();
        let b = SpectralBasis::new(g.clone(), 6).unwrap();
        let mut c = Coefficients::laplacian(&g, 1.0);
        c.a[0] = field("2 + x*y", &[1.0, 1.5]);
        c.a[1] = field("0.3*sin(x+y)", &[1.0, 1.5]);
        c.c = field("x - y", &[1.0, 1.5]);
        let form = assemble(&b, &c, &ModalForcing::default(), 0.0, QuadratureRule::default_for(&b)).unwrap();
        let asym = (&form.a - form.a.transpose()).abs().max();
        assert!(asym < 1e-10);
    }

    #[test]
    fn ellipticity_checks() {
        let g = DomainGeometry::interval(1.0).unwrap();
        let c = Coefficients::laplacian(&g, 1.0);
        let r = check_ellipticity(&c, &g, 1.0, 1e-3).unwrap();
        assert_eq!(r.theta_hat, 1.0);
        let mut c2 = c.clone();
        c2.a[0] = field("1 + 0.5*sin(pi*x)*t", &[1.0]);
        let r = check_ellipticity(&c2, &g, 1.0, 1e-3).unwrap();
        assert!((r.theta_hat - 1.0).abs() < 1e-15);
        c2.a[0] = field("x - 0.5", &[1.0]);
        assert!(!check_ellipticity(&c2, &g, 1.0, 1e-3).unwrap().passed);
        let b = SpectralBasis::new(g, 3).unwrap();
        let err = assemble(&b, &c2, &ModalForcing::default(), 0.0, QuadratureRule::default_for(&b));
        assert!(matches!(err, Err(Error::Assumption { assumption: "(a3)", .. })));
    }

    #[test]
    fn garding_examples() {
        let g = DomainGeometry::interval(1.0).unwrap();
        let mut c = Coefficients::laplacian(&g, 1.0);
        assert_eq!(
            garding_constants(&c, 1.0).unwrap(),
            GardingConstants { beta: 0.5, nu: 0.0 }
        );
        c.c = CoefficientField::constant(-1.0, vec![1.0], 1.0);
        let k = garding_constants(&c, 1.0).unwrap();
        assert!((k.nu - 1.05).abs() < 1e-15);
        c.c = CoefficientField::constant(0.0, vec![1.0], 1.0);
        c.b[0] = CoefficientField::constant(1.0, vec![1.0], 1.0);
        let k = garding_constants(&c, 1.0).unwrap();
        assert!((k.nu - 1.05 * 1.05 / 2.0).abs() < 1e-15);
        assert!(garding_constants(&c, 0.0).is_err());
    }

    #[test]
    fn norms_of_simple_vectors() {
        let b = SpectralBasis::new(DomainGeometry::interval(1.0).unwrap(), 2).unwrap();
        let n = modal_norms(&b, &[1.0, 0.0]).unwrap();
        assert!((n.l2 - 1.0).abs() < 1e-15 && (n.h10 - PI).abs() < 1e-14 && (n.hminus1 - 1.0 / PI).abs() < 1e-15);
        let n = modal_norms(&b, &[1.0, 1.0]).unwrap();
        assert!((n.l2 - 2f64.sqrt()).abs() < 1e-15);
        assert!((n.h10 - PI * 5f64.sqrt()).abs() < 1e-13);
        assert!((n.hminus1 - (1.0 + 0.25f64).sqrt() / PI).abs() < 1e-15);
        assert_eq!(modal_norms(&b, &[0.0, 0.0]).unwrap().l2, 0.0);
        assert!(modal_norms(&b, &[1.0]).is_err());
    }

    #[test]
    fn projection_of_polynomial() {
        let g = DomainGeometry::interval(1.0).unwrap();
        let b = SpectralBasis::new(g.clone(), 3).unwrap();
        let grid = QuadratureRule::default_for(&b).grid(&g);
        let samples: Vec<f64> = grid.points.iter().map(|p| p[0] * (1.0 - p[0])).collect();
        let v = project(&samples, &b, &grid).unwrap();
        for (k, c) in v.coeffs.iter().enumerate() {
            let k = (k + 1) as f64;
            let exact = if k as usize % 2 == 1 {
                4.0 * 2f64.sqrt() / (k * PI).powi(3)
            } else {
                0.0
            };
            assert!((c - exact).abs() < 1e-10, "{c} vs {exact}");
        }
        let e2: Vec<f64> = grid.points.iter().map(|p| b.eval(1, p).0).collect();
        let v = project(&e2, &b, &grid).unwrap();
        assert!((v.coeffs[1] - 1.0).abs() < 1e-10 && v.coeffs[0].abs() < 1e-10);
    }
}
