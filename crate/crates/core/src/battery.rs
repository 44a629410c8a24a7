//! Seeded battery of random well-posed problems with smooth data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::expr::{parse, CoefficientField};
use crate::problem::{Discretization, ProblemSpec, Scheme};
use crate::spectral::{Coefficients, DomainGeometry, ModalForcing};

pub const BATTERY_SEED: u64 = 0x5eed_f7ac;
pub const BATTERY_SIZE: usize = 20;

/// Forced modes `j = 1..=FORCED_MODES` with amplitudes of size `j^{-2}`.
pub const FORCED_MODES: usize = 8;

/// Problem `index` of the battery. Every fifth problem is posed on a
/// rectangle with time-independent coefficients; the others on an interval
/// with coefficients varying in `(t, x)`. Diffusion stays in `[a₀/2, 3a₀/2]`.
pub fn battery_problem(seed: u64, index: usize) -> Result<ProblemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let alpha = rng.random_range(0.5..=0.8);
    let horizon = rng.random_range(0.5..=2.0);
    let two_d = index % 5 == 4;
    let a0 = rng.random_range(1.0..2.0);
    let a1 = 0.5 * a0 * rng.random_range(-1.0..1.0);
    let k = rng.random_range(1..=3);
    let b0 = rng.random_range(-1.0..1.0);
    let c0 = rng.random_range(-0.5..1.0);
    let c1 = rng.random_range(-0.5..0.5);

    let (geometry, a, b, c) = if two_d {
        let (l1, l2) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let a12 = 0.2 * a0 * rng.random_range(-1.0..1.0);
        (
            DomainGeometry::rectangle(l1, l2)?,
            vec![
                format!("{a0:?} + {a1:?}*sin({k}*pi*x/{l1:?})*cos(pi*y/{l2:?})"),
                format!("{a12:?}"),
                format!("{a0:?} - {a1:?}*cos(pi*x/{l1:?})"),
            ],
            vec![format!("{b0:?}*y/{l2:?}"), format!("{b0:?}*sin(pi*x/{l1:?})")],
            format!("{c0:?} + {c1:?}*x*y"),
        )
    } else {
        let l = rng.random_range(0.5..2.0);
        (
            DomainGeometry::interval(l)?,
            vec![format!("{a0:?} + {a1:?}*sin({k}*pi*x/{l:?})*cos(t)")],
            vec![format!("{b0:?}*cos(pi*x/{l:?})*exp(-t)")],
            format!("{c0:?} + {c1:?}*x*t/{l:?}"),
        )
    };
    let lengths = geometry.lengths().to_vec();
    let field =
        |s: &str| -> Result<CoefficientField> { Ok(CoefficientField::new(parse(s)?, lengths.clone(), horizon)) };
    let coefficients = Coefficients {
        a: a.iter().map(|s| field(s)).collect::<Result<_>>()?,
        b: b.iter().map(|s| field(s)).collect::<Result<_>>()?,
        c: field(&c)?,
    };

    let mut terms = Vec::with_capacity(FORCED_MODES);
    for j in 1..=FORCED_MODES {
        let amp = rng.random_range(0.5..1.5) / (j * j) as f64;
        let omega = rng.random_range(0.5..3.0);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        terms.push((j, parse(&format!("{amp:?}*(1 + 0.5*sin({omega:?}*t + {phase:?}))"))?));
    }
    let spec = ProblemSpec {
        alpha,
        horizon,
        geometry,
        coefficients,
        forcing: ModalForcing::new(terms)?,
        discretization: Discretization {
            modes: 8,
            steps: 256,
            scheme: Scheme::L1,
        },
    };
    spec.validate()?;
    Ok(spec)
}

pub fn battery(seed: u64) -> Result<Vec<ProblemSpec>> {
    (0..BATTERY_SIZE).map(|i| battery_problem(seed, i)).collect()
}
