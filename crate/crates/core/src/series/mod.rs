//! First-order Lindstedt series: frequency shifts, restricted source terms
//! and the assembled solution.

mod shift;
mod solution;
mod terms;

pub use shift::{
    rho_first_order, rho_self_consistent, FrequencyShift, ShiftMethod,
    DEFAULT_SELF_CONSISTENT_MAX_ITER, DEFAULT_SELF_CONSISTENT_TOL,
};
pub use solution::{zeroth_order, SeriesSolution};
pub use terms::{
    restricted_terms, write_term_dump, Channel, Combination, Harmonic, ModeResponse,
    NearResonance, ResonanceKind, ResonanceReport, ResonantTerm, SourceTerm, TermTable,
    NEAR_RESONANCE_THRESHOLD,
};
