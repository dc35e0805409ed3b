//! Numerical laboratory for cavity enclosure estimation in a heat-conducting
//! ball.
//!
//! A concentric spherical cavity of radius `r_cavity` hides inside a ball of
//! radius `r_omega`. The boundary is driven by a special flux: the normal
//! derivative of a diffusion-scaled free wave launched from a probe shell of
//! radius `eta`, run backwards in time so that the wave refocuses onto the
//! probe at the final time. The exponentially weighted time transform of the
//! resulting temperature trace, compared against the same transform of the
//! free-space wave, yields a boundary indicator whose growth rate in the
//! spectral parameter tau reveals `r_cavity + eta` — without ever solving an
//! inverse problem iteration.
//!
//! Module map:
//!
//! * [`geometry`] — probe/body descriptions and admissibility checks.
//! * [`quad`] — Gauss-Legendre rules, trapezoids, uniform-grid gradients.
//! * [`wave`] — closed-form spherical means of the tent profile, the
//!   time-reversed boundary flux, and a brute-force surface-quadrature
//!   oracle.
//! * [`forms`] — the boundary-sum exponential identities, the spectral
//!   density of the tent, and the screened volume transform with its
//!   independent quadrature check.
//! * [`heat`] — Crank-Nicolson radial solver with ghost-node flux rows,
//!   zone-aligned time meshes, and on-the-fly weighted transforms.
//! * [`transform`] — the scaled indicator: the reflected-field shell solve
//!   that evaluates the bracket without catastrophic cancellation,
//!   Richardson extrapolation, energy decomposition.
//! * [`extract`] — rate fitting, the one-point reading, and the terminal
//!   behavior classifier.
//! * [`config`] / [`sweep`] — TOML run configuration, parallel tau sweeps,
//!   CSV/JSON artifacts.
//! * [`verify`] — self-contained verification suites shared with the CLI.

pub mod config;
pub mod error;
pub mod extract;
pub mod forms;
pub mod geometry;
pub mod heat;
pub mod quad;
pub mod sweep;
pub mod transform;
pub mod verify;
pub mod wave;

pub use config::{load_config, parse_config, reference_config, RunConfig};
pub use error::{CoreError, Result};
pub use extract::{
    classify_terminal, estimate_enclosure, naive_estimator, EnclosureFit, TerminalBehavior,
};
pub use geometry::{BodySpec, Discretization, ProbeBall, Vec3};
pub use heat::{solve_radial_heat, CnOptions, HeatSolution};
pub use transform::{indicator_auto, IndicatorOptions, IndicatorSample};
pub use wave::{kirchhoff_radial, WaveEval};
