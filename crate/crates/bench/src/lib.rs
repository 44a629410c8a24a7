//! Workloads shared by the criterion benches.

use fracgal_core::battery::{battery_problem, BATTERY_SEED};
use fracgal_core::{FractionalIVP, GridSeries, ProblemSpec, TimeGrid};

/// Battery problem `index` at the given discretization.
pub fn problem(index: usize, modes: usize, steps: usize) -> ProblemSpec {
    battery_problem(BATTERY_SEED, index)
        .expect("battery problem")
        .with_discretization(modes, steps)
}

/// `D^{1/2} c + c = 1` on `[0, 1]`.
pub fn scalar_ivp(steps: usize) -> FractionalIVP {
    let grid = TimeGrid::new(1.0, steps).expect("grid");
    FractionalIVP::scalar(0.5, 1.0, &grid.sample(|_| 1.0)).expect("scalar problem")
}

pub fn smooth_series(steps: usize) -> GridSeries {
    TimeGrid::new(1.0, steps)
        .expect("grid")
        .sample(|t| (3.0 * t).sin() + t * t)
}
