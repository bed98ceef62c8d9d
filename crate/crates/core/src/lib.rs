//! Numerical check of Levinson's theorem for the two-dimensional Dirac
//! equation with a radial potential.
//!
//! For each partial wave `j` the crate counts bound states in the gap
//! `(−M, M)`, computes the threshold phase shifts `η_j(±M)` and compares
//! `η_j(M) + η_j(−M)` with `n_j π`, including the half-bound corrections at
//! `j = ±1/2, ±3/2` and the modified statement for `r⁻²` tails.
//!
//! ```
//! use levinson2d::{verify, Classification, ExecMode, PotentialModel, Tolerances};
//!
//! let well = PotentialModel::square_well(-0.5, 5.0).unwrap();
//! let report = verify(&well, 1.0, 0.5, &Tolerances::default(), ExecMode::Sequential).unwrap();
//! assert_eq!(report.classification, Classification::Verified);
//! assert_eq!(report.n_j, 2);
//! ```

pub mod error;
pub mod exec;
pub mod levinson;
pub mod ode;
pub mod potential;
pub mod radial;
pub mod report;
pub mod scattering;
pub mod special;
pub mod spectrum;

pub use error::{Result, SolverError};
pub use exec::ExecMode;
pub use levinson::{
    symmetry_map, tail_exponents, verify, Classification, LevinsonReport, TailExponents, Tolerances,
};
pub use potential::{PotentialModel, ProblemSpec, Tail};
pub use radial::{Energy, MatchRatio, SolverOptions, Threshold};
pub use spectrum::{HalfBound, SpectrumReport};
