//! First-order Lindstedt series for the fixed-end FPU-β lattice.
//!
//! The crate provides
//!
//! * [`lattice`]: spectrum, sine transform, coupling tensor, energies and the
//!   mode-space equations of motion;
//! * [`series`]: amplitude-dependent frequency shifts and the closed-form
//!   first-order correction built from the restricted source-term table;
//! * [`integrator`]: fixed-step RK4 and leapfrog reference integrators, plus a
//!   driven-oscillator integrator used to check the first-order correction;
//! * [`compare`]: series-versus-numerical metrics and the N = 2 reproduction.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`.

pub mod compare;
pub mod error;
pub mod integrator;
pub mod io;
pub mod lattice;
mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use scalar::Real;

pub use compare::{repro_n2, run_compare, CompareOptions, Comparison, ComparisonReport, ReproN2};
pub use integrator::{integrate, integrate_driven, IntegratorConfig, Method, RestrictedForcing, Trajectory};
pub use lattice::{coupling, delta, omega, Lattice, LatticeConfig, ModeState, SineTransform, SiteState, Spectrum};
pub use series::{
    restricted_terms, rho_first_order, rho_self_consistent, FrequencyShift, ResonanceReport, SeriesSolution,
    ShiftMethod, TermTable,
};

pub type Lattice64 = Lattice<f64>;
pub type Lattice32 = Lattice<f32>;
pub type LatticeConfig64 = LatticeConfig<f64>;
pub type ModeState64 = ModeState<f64>;
pub type SiteState64 = SiteState<f64>;
pub type FrequencyShift64 = FrequencyShift<f64>;
pub type SeriesSolution64 = SeriesSolution<f64>;
pub type SeriesSolution32 = SeriesSolution<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type ComparisonReport64 = ComparisonReport<f64>;
