//! Amplitude-dependent frequency shifts `β_k = 1 + ε ρ_k`.

use crate::error::{Error, Result};
use crate::lattice::{Lattice, ModeState};
use crate::scalar::Real;

pub const DEFAULT_SELF_CONSISTENT_TOL: f64 = 1e-12;
pub const DEFAULT_SELF_CONSISTENT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftMethod {
    /// `ρ_k` evaluated with `ε = 0` inside the secularity condition.
    FirstOrder,
    /// Fixed point of the coupled secularity conditions.
    SelfConsistent,
}

/// Frequency corrections `ρ_k` (units of `1/ε`) and stretch factors `β_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyShift<T> {
    pub rho: Vec<T>,
    pub beta: Vec<T>,
    pub method: ShiftMethod,
}

impl<T: Real> FrequencyShift<T> {
    fn from_rho(rho: Vec<T>, epsilon: T, method: ShiftMethod) -> Self {
        let beta = rho.iter().map(|&r| T::one() + epsilon * r).collect();
        Self { rho, beta, method }
    }

    /// Shifted frequencies `β_k ω_k`.
    pub fn shifted_omega(&self, omega: &[T]) -> Vec<T> {
        self.beta.iter().zip(omega).map(|(&b, &w)| b * w).collect()
    }
}

/// Right-hand side of the secularity condition. `velocity_scale[m]` divides
/// `Q̇_m(0)`; it is one for the first-order shift and `1/β_m` otherwise.
fn secular_rho<T: Real>(lattice: &Lattice<T>, ics: &ModeState<T>, velocity_scale: &[T]) -> Vec<T> {
    let n = lattice.n();
    let omega = lattice.spectrum().as_slice();
    let np1 = T::from_count(n + 1);
    let diag_pref = T::lit(3.0) / (T::lit(16.0) * np1);
    let pair_pref = T::lit(3.0) / (T::lit(8.0) * np1);

    // Q_m(0)^2 + (Q̇_m(0) / (β_m ω_m))^2
    let action: Vec<T> = (0..n)
        .map(|m| {
            let v = ics.qdot[m] * velocity_scale[m] / omega[m];
            ics.q[m] * ics.q[m] + v * v
        })
        .collect();

    (0..n)
        .map(|k| {
            let ckkkk = T::from_i32(lattice.coupling(k + 1, k + 1, k + 1, k + 1).unwrap()).unwrap();
            let mut rho = diag_pref * omega[k] * omega[k] * ckkkk * action[k];
            for m in (0..n).filter(|&m| m != k) {
                let ckkmm =
                    T::from_i32(lattice.coupling(k + 1, k + 1, m + 1, m + 1).unwrap()).unwrap();
                rho = rho + pair_pref * omega[m] * omega[m] * ckkmm * action[m];
            }
            rho
        })
        .collect()
}

fn check_ics<T: Real>(lattice: &Lattice<T>, ics: &ModeState<T>) -> Result<()> {
    for len in [ics.q.len(), ics.qdot.len()] {
        if len != lattice.n() {
            return Err(Error::LengthMismatch {
                expected: lattice.n(),
                got: len,
            });
        }
    }
    Ok(())
}

/// First-order frequency shifts.
pub fn rho_first_order<T: Real>(lattice: &Lattice<T>, ics: &ModeState<T>) -> Result<FrequencyShift<T>> {
    check_ics(lattice, ics)?;
    let ones = vec![T::one(); lattice.n()];
    let rho = secular_rho(lattice, ics, &ones);
    Ok(FrequencyShift::from_rho(rho, lattice.epsilon(), ShiftMethod::FirstOrder))
}

/// Self-consistent shifts by plain fixed-point iteration seeded with the
/// first-order values. Stops when successive iterates differ by less than
/// `tol` in the max norm.
pub fn rho_self_consistent<T: Real>(
    lattice: &Lattice<T>,
    ics: &ModeState<T>,
    max_iter: usize,
    tol: T,
) -> Result<FrequencyShift<T>> {
    check_ics(lattice, ics)?;
    if !(tol > T::zero()) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let eps = lattice.epsilon();
    let mut rho = rho_first_order(lattice, ics)?.rho;
    let mut residual = T::infinity();
    for _ in 0..max_iter {
        let scale: Vec<T> = rho.iter().map(|&r| (T::one() + eps * r).recip()).collect();
        let next = secular_rho(lattice, ics, &scale);
        residual = next
            .iter()
            .zip(&rho)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        rho = next;
        if !residual.is_finite() {
            break;
        }
        if residual < tol {
            return Ok(FrequencyShift::from_rho(rho, eps, ShiftMethod::SelfConsistent));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: residual.as_f64(),
        last: rho.iter().map(|r| r.as_f64()).collect(),
    })
}
