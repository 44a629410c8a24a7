//! Problem files and the path from a problem to a discretized Galerkin system.
//!
//! ```text
//! format = 1
//!
//! [problem]
//! alpha = 0.5
//! T = 1
//!
//! [domain]
//! dim = 1
//! lengths = 1
//!
//! [coefficients]
//! a11 = 1 + 0.5*sin(pi*x)*t
//! b1 = 0
//! c = 0
//!
//! [forcing]
//! 1 = 1
//!
//! [discretization]
//! modes = 8
//! steps = 256
//! scheme = l1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, CoefficientField, Expr, Var};
use crate::fode::{l1_solve, picard_solve, FractionalIVP, ModalTrajectory, PicardConfig, PicardLog};
use crate::grid::TimeGrid;
use crate::spectral::{
    check_ellipticity, Assembler, Coefficients, DomainGeometry, EllipticityReport, ModalForcing, QuadratureRule,
    SpectralBasis,
};

/// Smallest sampled ellipticity accepted at load time.
pub const THETA_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Picard,
    L1,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "picard" => Ok(Scheme::Picard),
            "l1" => Ok(Scheme::L1),
            other => Err(Error::ProblemFile(format!(
                "unknown scheme `{other}` (expected picard or l1)"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Picard => "picard",
            Scheme::L1 => "l1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discretization {
    pub modes: usize,
    pub steps: usize,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub horizon: f64,
    pub geometry: DomainGeometry,
    pub coefficients: Coefficients,
    pub forcing: ModalForcing,
    pub discretization: Discretization,
}

type Sections = BTreeMap<String, Vec<(usize, String, String)>>;

fn file_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::ProblemFile(format!("line {line}: {msg}"))
}

fn split_sections(text: &str) -> Result<Sections> {
    const KNOWN: [&str; 6] = ["", "problem", "domain", "coefficients", "forcing", "discretization"];
    let mut out: Sections = BTreeMap::new();
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| file_err(line_no, "unterminated section header"))?
                .trim();
            if !KNOWN.contains(&name) {
                return Err(file_err(line_no, format!("unknown section [{name}]")));
            }
            if out.contains_key(name) {
                return Err(file_err(line_no, format!("section [{name}] appears twice")));
            }
            current = name.to_string();
            out.insert(current.clone(), Vec::new());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| file_err(line_no, "expected `key = value`"))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        let entries = out.entry(current.clone()).or_default();
        if entries.iter().any(|(_, k, _)| *k == key) {
            return Err(file_err(line_no, format!("duplicate key `{key}`")));
        }
        entries.push((line_no, key, value));
    }
    Ok(out)
}

struct Section<'a> {
    name: &'static str,
    entries: Vec<&'a (usize, String, String)>,
}

impl<'a> Section<'a> {
    fn new(sections: &'a Sections, name: &'static str, allowed: &[&str]) -> Result<Self> {
        let entries: Vec<_> = sections.get(name).map(|v| v.iter().collect()).unwrap_or_default();
        for (line, key, _) in &entries {
            if !allowed.is_empty() && !allowed.contains(&key.as_str()) {
                return Err(file_err(*line, format!("unknown key `{key}` in [{name}]")));
            }
        }
        Ok(Section { name, entries })
    }

    fn get(&self, key: &str) -> Option<(usize, &'a str)> {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(l, _, v)| (*l, v.as_str()))
    }

    fn require(&self, key: &str) -> Result<(usize, &'a str)> {
        self.get(key)
            .ok_or_else(|| Error::ProblemFile(format!("missing key `{key}` in [{}]", self.name)))
    }

    fn number<T: FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.require(key)?;
        v.parse()
            .map_err(|_| file_err(line, format!("`{key}` must be a number, got `{v}`")))
    }
}

fn expression(line: usize, key: &str, src: &str) -> Result<Expr> {
    parse(src).map_err(|e| file_err(line, format!("`{key}`: {e}")))
}

impl ProblemSpec {
    /// Parses a problem file and runs the load-time checks of
    /// [`ProblemSpec::validate`].
    pub fn parse(text: &str) -> Result<Self> {
        let spec = Self::parse_unchecked(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn parse_unchecked(text: &str) -> Result<Self> {
        let sections = split_sections(text)?;
        let top = Section::new(&sections, "", &["format"])?;
        let (line, fmt) = top.require("format")?;
        if fmt != "1" {
            return Err(file_err(line, format!("unsupported format `{fmt}` (expected 1)")));
        }

        let prob = Section::new(&sections, "problem", &["alpha", "T"])?;
        let alpha: f64 = prob.number("alpha")?;
        let horizon: f64 = prob.number("T")?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::ProblemFile(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::ProblemFile(format!("T must be positive, got {horizon}")));
        }

        let dom = Section::new(&sections, "domain", &["dim", "lengths"])?;
        let dim: usize = dom.number("dim")?;
        let (line, lengths_src) = dom.require("lengths")?;
        let lengths: Vec<f64> = lengths_src
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| file_err(line, format!("bad length `{s}`"))))
            .collect::<Result<_>>()?;
        if lengths.len() != dim {
            return Err(file_err(
                line,
                format!("{} lengths given for dimension {dim}", lengths.len()),
            ));
        }
        let geometry = DomainGeometry::new(lengths.clone()).map_err(|e| file_err(line, e))?;

        let allowed: &[&str] = if dim == 1 {
            &["a11", "b1", "c"]
        } else {
            &["a11", "a12", "a22", "b1", "b2", "c"]
        };
        let co = Section::new(&sections, "coefficients", allowed)?;
        let field = |key: &str, required: bool| -> Result<CoefficientField> {
            let expr = match co.get(key) {
                Some((line, src)) => {
                    let e = expression(line, key, src)?;
                    if dim == 1 && e.uses(Var::Y) {
                        return Err(file_err(line, format!("`{key}` uses y on a one-dimensional domain")));
                    }
                    e
                }
                None if required => return Err(Error::ProblemFile(format!("missing key `{key}` in [coefficients]"))),
                None => Expr::Num(0.0),
            };
            Ok(CoefficientField::new(expr, lengths.clone(), horizon))
        };
        let coefficients = if dim == 1 {
            Coefficients {
                a: vec![field("a11", true)?],
                b: vec![field("b1", false)?],
                c: field("c", false)?,
            }
        } else {
            Coefficients {
                a: vec![field("a11", true)?, field("a12", false)?, field("a22", true)?],
                b: vec![field("b1", false)?, field("b2", false)?],
                c: field("c", false)?,
            }
        };

        let fo = Section::new(&sections, "forcing", &[])?;
        let mut terms = Vec::new();
        for (line, key, src) in &fo.entries {
            let j: usize = key
                .parse()
                .map_err(|_| file_err(*line, format!("forcing keys are mode numbers, got `{key}`")))?;
            if j == 0 {
                return Err(file_err(*line, "forcing modes are numbered from 1"));
            }
            terms.push((j, expression(*line, key, src)?));
        }
        let forcing = ModalForcing { terms };

        let di = Section::new(&sections, "discretization", &["modes", "steps", "scheme"])?;
        let modes: usize = di.number("modes")?;
        let steps: usize = di.number("steps")?;
        if modes == 0 || steps < 2 {
            return Err(Error::ProblemFile("need modes ≥ 1 and steps ≥ 2".into()));
        }
        let scheme = match di.get("scheme") {
            Some((_, s)) => s.parse()?,
            None => Scheme::L1,
        };

        Ok(ProblemSpec {
            alpha,
            horizon,
            geometry,
            coefficients,
            forcing,
            discretization: Discretization { modes, steps, scheme },
        })
    }

    /// Load-time realization of the standing hypotheses: bounded coefficients
    /// (a1), sampled uniform ellipticity (a3) and a bounded forcing depending
    /// on time only (a4). Symmetry (a2) holds by construction since only the
    /// upper triangle is stored.
    pub fn validate(&self) -> Result<EllipticityReport> {
        let co = &self.coefficients;
        for (name, f) in
            co.a.iter()
                .map(|f| ("diffusion", f))
                .chain(co.b.iter().map(|f| ("advection", f)))
                .chain([("reaction", &co.c)])
        {
            f.sup_bound().map_err(|e| Error::Assumption {
                assumption: "(a1)",
                detail: format!("{name} coefficient `{}` is not bounded on the domain: {e}", f.expr),
            })?;
        }
        let report = check_ellipticity(co, &self.geometry, self.horizon, THETA_MIN)?;
        if !report.passed {
            return Err(Error::Assumption {
                assumption: "(a3)",
                detail: format!(
                    "smallest sampled eigenvalue of (a_ij) is {:.6e} at t = {}, x = {:?}",
                    report.theta_hat, report.worst_t, report.worst_point
                ),
            });
        }
        let times: Vec<f64> = (0..=64).map(|i| self.horizon * i as f64 / 64.0).collect();
        for (j, e) in &self.forcing.terms {
            if e.uses(Var::X) || e.uses(Var::Y) {
                return Err(Error::Assumption {
                    assumption: "(a4)",
                    detail: format!("forcing amplitude of mode {j} must depend on t only"),
                });
            }
            for &t in &times {
                e.eval(t, &[]).map_err(|err| Error::Assumption {
                    assumption: "(a4)",
                    detail: format!("forcing amplitude of mode {j} is not bounded on [0, T]: {err}"),
                })?;
            }
        }
        Ok(report)
    }

    /// Canonical text form; parsing it yields an equal problem.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        let d = self.geometry.dim();
        let lengths: Vec<String> = self.geometry.lengths().iter().map(|l| format!("{l:?}")).collect();
        let _ = writeln!(
            s,
            "format = 1\n\n[problem]\nalpha = {:?}\nT = {:?}\n",
            self.alpha, self.horizon
        );
        let _ = writeln!(s, "[domain]\ndim = {d}\nlengths = {}\n", lengths.join(", "));
        let _ = writeln!(s, "[coefficients]");
        let co = &self.coefficients;
        if d == 1 {
            let _ = writeln!(s, "a11 = {}\nb1 = {}", co.a[0].expr, co.b[0].expr);
        } else {
            let _ = writeln!(
                s,
                "a11 = {}\na12 = {}\na22 = {}\nb1 = {}\nb2 = {}",
                co.a[0].expr, co.a[1].expr, co.a[2].expr, co.b[0].expr, co.b[1].expr
            );
        }
        let _ = writeln!(s, "c = {}\n\n[forcing]", co.c.expr);
        for (j, e) in &self.forcing.terms {
            let _ = writeln!(s, "{j} = {e}");
        }
        let di = &self.discretization;
        let _ = writeln!(
            s,
            "\n[discretization]\nmodes = {}\nsteps = {}\nscheme = {}",
            di.modes, di.steps, di.scheme
        );
        s
    }

    pub fn with_discretization(&self, modes: usize, steps: usize) -> ProblemSpec {
        let mut p = self.clone();
        p.discretization.modes = modes;
        p.discretization.steps = steps;
        p
    }

    /// Basis, quadrature and the assembled fractional ODE system.
    pub fn galerkin_system(&self) -> Result<GalerkinSystem> {
        let Discretization { modes, steps, .. } = self.discretization;
        let basis = SpectralBasis::new(self.geometry.clone(), modes)?;
        let grid = TimeGrid::new(self.horizon, steps)?;
        let rule = QuadratureRule::default_for(&basis);
        let asm = Assembler::new(&basis, &self.coefficients, &self.forcing, rule)?;
        let forms: Vec<_> = grid
            .nodes()
            .into_par_iter()
            .map(|t| asm.assemble(t))
            .collect::<Result<_>>()?;
        let (a, f): (Vec<_>, Vec<_>) = forms.into_iter().map(|form| (form.a, form.f)).unzip();
        let ivp = FractionalIVP::new(self.alpha, grid, a, f)?;
        drop(asm);
        Ok(GalerkinSystem { basis, ivp })
    }
}

pub struct GalerkinSystem {
    pub basis: SpectralBasis,
    pub ivp: FractionalIVP,
}

impl GalerkinSystem {
    pub fn solve(&self, scheme: Scheme, cfg: &PicardConfig) -> Result<(ModalTrajectory, Option<PicardLog>)> {
        match scheme {
            Scheme::L1 => Ok((l1_solve(&self.ivp)?, None)),
            Scheme::Picard => {
                let (traj, log) = picard_solve(&self.ivp, cfg)?;
                Ok((traj, Some(log)))
            }
        }
    }
}
