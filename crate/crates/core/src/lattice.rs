//! The fixed-end FPU-β chain in site and normal-mode coordinates.
//!
//! Mode indices in the public API are one-based (`1..=N`), matching the
//! usual labelling of the sine modes. Vectors are stored zero-based.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default absolute tolerance for classifying a combination frequency as resonant.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-9;

/// Problem instance: chain length, quartic coupling and resonance tolerance.
///
/// The endpoints `q_0 = q_{N+1} = 0` are implied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig<T> {
    pub n: usize,
    pub epsilon: T,
    pub resonance_tol: T,
}

impl<T: Real> LatticeConfig<T> {
    pub fn new(n: usize, epsilon: T) -> Result<Self> {
        let cfg = Self {
            n,
            epsilon,
            resonance_tol: T::lit(DEFAULT_RESONANCE_TOL),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_resonance_tol(mut self, tol: T) -> Result<Self> {
        self.resonance_tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("lattice size must be at least 1".into()));
        }
        if !(self.epsilon >= T::zero()) || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.resonance_tol > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "resonance tolerance must be positive, got {}",
                self.resonance_tol
            )));
        }
        Ok(())
    }
}

/// Selection-rule delta: 1 at `r = 0`, -1 at `r = ±2(n+1)`, 0 otherwise.
pub fn delta(r: i64, n: usize) -> i32 {
    let umklapp = 2 * (n as i64 + 1);
    if r == 0 {
        1
    } else if r.abs() == umklapp {
        -1
    } else {
        0
    }
}

fn check_mode(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::ModeIndex { index: k, n })
    } else {
        Ok(())
    }
}

fn coupling_unchecked(k: i64, l: i64, m: i64, nn: i64, n: usize) -> i32 {
    delta(k + l + m + nn, n)
        + delta(k - l + m + nn, n)
        + delta(k + l - m + nn, n)
        + delta(k + l + m - nn, n)
        + delta(k - l - m + nn, n)
        + delta(k + l - m - nn, n)
        + delta(k - l + m - nn, n)
        + delta(k - l - m - nn, n)
}

/// Quartic coupling coefficient `C_klmn` for a chain of `n` particles.
pub fn coupling(k: usize, l: usize, m: usize, nn: usize, n: usize) -> Result<i32> {
    for idx in [k, l, m, nn] {
        check_mode(idx, n)?;
    }
    Ok(coupling_unchecked(
        k as i64, l as i64, m as i64, nn as i64, n,
    ))
}

/// Harmonic frequency `ω_k = 2 sin(πk / (2(N+1)))`.
pub fn omega<T: Real>(k: usize, n: usize) -> Result<T> {
    check_mode(k, n)?;
    let arg = T::PI() * T::from_count(k) / T::from_count(2 * (n + 1));
    Ok(T::lit(2.0) * arg.sin())
}

/// Harmonic spectrum, strictly increasing in `k` and contained in `(0, 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    omega: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("lattice size must be at least 1".into()));
        }
        let omega = (1..=n).map(|k| omega(k, n)).collect::<Result<Vec<T>>>()?;
        Ok(Self { omega })
    }

    /// Frequency of mode `k` (one-based).
    pub fn get(&self, k: usize) -> Result<T> {
        check_mode(k, self.omega.len())?;
        Ok(self.omega[k - 1])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// Site displacements and momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteState<T> {
    pub q: Vec<T>,
    pub p: Vec<T>,
}

impl<T: Real> SiteState<T> {
    pub fn new(q: Vec<T>, p: Vec<T>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::LengthMismatch {
                expected: q.len(),
                got: p.len(),
            });
        }
        Ok(Self { q, p })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            q: vec![T::zero(); n],
            p: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// Normal-mode amplitudes `Q_k` and velocities `Q̇_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState<T> {
    pub q: Vec<T>,
    pub qdot: Vec<T>,
}

impl<T: Real> ModeState<T> {
    pub fn new(q: Vec<T>, qdot: Vec<T>) -> Result<Self> {
        if q.len() != qdot.len() {
            return Err(Error::LengthMismatch {
                expected: q.len(),
                got: qdot.len(),
            });
        }
        Ok(Self { q, qdot })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            q: vec![T::zero(); n],
            qdot: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        for len in [self.q.len(), self.qdot.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, got: len });
            }
        }
        Ok(())
    }
}

/// Orthogonal sine transform `A_ij = sqrt(2/(N+1)) sin(πij/(N+1))`.
///
/// `A` is symmetric and `A² = I`, so the same matrix maps modes to sites and back.
#[derive(Debug, Clone, PartialEq)]
pub struct SineTransform<T> {
    n: usize,
    matrix: Vec<T>,
}

impl<T: Real> SineTransform<T> {
    pub fn new(n: usize) -> Self {
        let np1 = T::from_count(n + 1);
        let norm = (T::lit(2.0) / np1).sqrt();
        let mut matrix = Vec::with_capacity(n * n);
        for i in 1..=n {
            for j in 1..=n {
                // reduce i*j mod 2(N+1) before scaling so large N keeps full precision
                let ij = (i * j) % (2 * (n + 1));
                matrix.push(norm * (T::PI() * T::from_count(ij) / np1).sin());
            }
        }
        Self { n, matrix }
    }

    /// Element `A_ij` (one-based).
    pub fn element(&self, i: usize, j: usize) -> Result<T> {
        check_mode(i, self.n)?;
        check_mode(j, self.n)?;
        Ok(self.matrix[(i - 1) * self.n + (j - 1)])
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self
            .matrix
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(&a, &v)| a * v).sum())
            .collect())
    }
}

/// One nonzero `C_klmn` for a fixed `k`; indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct CouplingEntry {
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub c: i32,
}

/// Nonzero support of the coupling tensor, grouped by the first index.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CouplingSupport {
    per_mode: Vec<Vec<CouplingEntry>>,
}

impl CouplingSupport {
    fn build(n: usize) -> Self {
        let umklapp = 2 * (n as i64 + 1);
        let mut per_mode = Vec::with_capacity(n);
        let mut candidates = Vec::with_capacity(24);
        for k in 1..=n as i64 {
            let mut entries = Vec::new();
            for l in 1..=n as i64 {
                for m in 1..=n as i64 {
                    // C_klmn can only be nonzero when s ± n hits 0 or ±2(N+1)
                    candidates.clear();
                    for s in [k + l + m, k - l + m, k + l - m, k - l - m] {
                        for target in [0, umklapp, -umklapp] {
                            candidates.push(target - s);
                            candidates.push(s - target);
                        }
                    }
                    candidates.retain(|&c| c >= 1 && c <= n as i64);
                    candidates.sort_unstable();
                    candidates.dedup();
                    for &nn in &candidates {
                        let c = coupling_unchecked(k, l, m, nn, n);
                        if c != 0 {
                            entries.push(CouplingEntry {
                                l: (l - 1) as usize,
                                m: (m - 1) as usize,
                                n: (nn - 1) as usize,
                                c,
                            });
                        }
                    }
                }
            }
            per_mode.push(entries);
        }
        Self { per_mode }
    }

    /// Entries with first index `k` (zero-based).
    pub fn entries(&self, k: usize) -> &[CouplingEntry] {
        &self.per_mode[k]
    }

    pub fn len(&self) -> usize {
        self.per_mode.iter().map(Vec::len).sum()
    }
}

/// A fully built lattice: configuration, spectrum, transform and coupling support.
///
/// Immutable after construction and safe to share between threads.
#[derive(Debug, Clone)]
pub struct Lattice<T> {
    config: LatticeConfig<T>,
    spectrum: Spectrum<T>,
    transform: SineTransform<T>,
    support: CouplingSupport,
}

impl<T: Real> Lattice<T> {
    pub fn new(config: LatticeConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            spectrum: Spectrum::new(config.n)?,
            transform: SineTransform::new(config.n),
            support: CouplingSupport::build(config.n),
            config,
        })
    }

    /// Same chain with a different quartic coupling; reuses the precomputed tables.
    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        let config = LatticeConfig {
            epsilon,
            ..self.config
        };
        config.validate()?;
        Ok(Self {
            config,
            ..self.clone()
        })
    }

    pub fn config(&self) -> &LatticeConfig<T> {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn epsilon(&self) -> T {
        self.config.epsilon
    }

    pub fn spectrum(&self) -> &Spectrum<T> {
        &self.spectrum
    }

    pub fn transform(&self) -> &SineTransform<T> {
        &self.transform
    }

    pub(crate) fn support(&self) -> &CouplingSupport {
        &self.support
    }

    /// Number of nonzero `C_klmn` entries over all `k`.
    pub fn coupling_nnz(&self) -> usize {
        self.support.len()
    }

    /// Frequency of mode `k` (one-based).
    pub fn omega(&self, k: usize) -> Result<T> {
        self.spectrum.get(k)
    }

    pub fn coupling(&self, k: usize, l: usize, m: usize, nn: usize) -> Result<i32> {
        coupling(k, l, m, nn, self.config.n)
    }

    /// Nonzero couplings as one-based `(k, l, m, n, C)` tuples in lexicographic order.
    pub fn nonzero_couplings(&self) -> Vec<(usize, usize, usize, usize, i32)> {
        let mut out: Vec<_> = (0..self.n())
            .flat_map(|k| {
                self.support
                    .entries(k)
                    .iter()
                    .map(move |e| (k + 1, e.l + 1, e.m + 1, e.n + 1, e.c))
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn mode_to_site(&self, state: &ModeState<T>) -> Result<SiteState<T>> {
        state.check_len(self.n())?;
        Ok(SiteState {
            q: self.transform.apply(&state.q)?,
            p: self.transform.apply(&state.qdot)?,
        })
    }

    pub fn site_to_mode(&self, state: &SiteState<T>) -> Result<ModeState<T>> {
        if state.q.len() != self.n() || state.p.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                got: if state.q.len() != self.n() {
                    state.q.len()
                } else {
                    state.p.len()
                },
            });
        }
        Ok(ModeState {
            q: self.transform.apply(&state.q)?,
            qdot: self.transform.apply(&state.p)?,
        })
    }

    /// Hamiltonian in site coordinates with fixed ends.
    pub fn energy_site(&self, state: &SiteState<T>) -> Result<T> {
        let n = self.n();
        if state.q.len() != n || state.p.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: state.q.len().min(state.p.len()),
            });
        }
        let half = T::lit(0.5);
        let kinetic: T = state.p.iter().map(|&p| p * p).sum::<T>() * half;
        let mut harmonic = T::zero();
        let mut quartic = T::zero();
        let mut prev = T::zero();
        for i in 0..=n {
            let cur = if i < n { state.q[i] } else { T::zero() };
            let d2 = (cur - prev) * (cur - prev);
            harmonic = harmonic + d2;
            quartic = quartic + d2 * d2;
            prev = cur;
        }
        Ok(kinetic + half * harmonic + self.epsilon() / T::lit(4.0) * quartic)
    }

    /// `Σ_k ω_k Q_k Σ_{lmn} C_klmn ω_l ω_m ω_n Q_l Q_m Q_n`, the bare quartic sum.
    fn quartic_sum(&self, q: &[T]) -> T {
        let wq = self.weighted(q);
        (0..self.n())
            .map(|k| wq[k] * self.cubic_sum(k, &wq))
            .sum()
    }

    fn weighted(&self, q: &[T]) -> Vec<T> {
        self.spectrum
            .as_slice()
            .iter()
            .zip(q)
            .map(|(&w, &x)| w * x)
            .collect()
    }

    fn cubic_sum(&self, k: usize, wq: &[T]) -> T {
        self.support
            .entries(k)
            .iter()
            .map(|e| T::from_i32(e.c).unwrap() * wq[e.l] * wq[e.m] * wq[e.n])
            .sum()
    }

    /// Hamiltonian in normal-mode coordinates.
    pub fn energy_mode(&self, state: &ModeState<T>) -> Result<T> {
        state.check_len(self.n())?;
        let half = T::lit(0.5);
        let harmonic: T = state
            .q
            .iter()
            .zip(&state.qdot)
            .zip(self.spectrum.as_slice())
            .map(|((&q, &v), &w)| half * (v * v + w * w * q * q))
            .sum();
        let prefactor = self.epsilon() / (T::lit(8.0) * T::from_count(self.n() + 1));
        Ok(harmonic + prefactor * self.quartic_sum(&state.q))
    }

    /// Mode accelerations `Q̈_k` for amplitudes `q`.
    pub fn eom_rhs(&self, q: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.n()];
        self.accelerations_into(q, &mut out)?;
        Ok(out)
    }

    pub fn accelerations_into(&self, q: &[T], out: &mut [T]) -> Result<()> {
        let n = self.n();
        if q.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: q.len() });
        }
        if out.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: out.len() });
        }
        let wq = self.weighted(q);
        let prefactor = self.epsilon() / (T::lit(2.0) * T::from_count(n + 1));
        let omega = self.spectrum.as_slice();
        for k in 0..n {
            out[k] = -omega[k] * omega[k] * q[k] - prefactor * omega[k] * self.cubic_sum(k, &wq);
        }
        Ok(())
    }

    /// Coefficients of `ε Q_l Q_m Q_n` in the equation for `Q̈_k`, keyed by
    /// the sorted one-based monomial `[l, m, n]`.
    pub fn cubic_coefficients(&self, k: usize) -> Result<BTreeMap<[usize; 3], T>> {
        check_mode(k, self.n())?;
        let omega = self.spectrum.as_slice();
        let prefactor = -omega[k - 1] / (T::lit(2.0) * T::from_count(self.n() + 1));
        let mut out = BTreeMap::new();
        for e in self.support.entries(k - 1) {
            let mut key = [e.l + 1, e.m + 1, e.n + 1];
            key.sort_unstable();
            let term =
                prefactor * T::from_i32(e.c).unwrap() * omega[e.l] * omega[e.m] * omega[e.n];
            let slot = out.entry(key).or_insert_with(T::zero);
            *slot = *slot + term;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lattice(n: usize, eps: f64) -> Lattice<f64> {
        Lattice::new(LatticeConfig::new(n, eps).unwrap()).unwrap()
    }

    #[test]
    fn delta_values() {
        assert_eq!(delta(0, 2), 1);
        assert_eq!(delta(6, 2), -1);
        assert_eq!(delta(-6, 2), -1);
        assert_eq!(delta(3, 2), 0);
    }

    #[test]
    fn coupling_n2() {
        assert_eq!(coupling(1, 1, 1, 1, 2).unwrap(), 3);
        assert_eq!(coupling(2, 2, 2, 2, 2).unwrap(), 3);
        assert_eq!(coupling(1, 1, 2, 2, 2).unwrap(), 1);
        assert_eq!(coupling(2, 1, 1, 1, 2).unwrap(), 0);
    }

    #[test]
    fn coupling_rejects_bad_index() {
        assert_eq!(
            coupling(0, 1, 1, 1, 2),
            Err(Error::ModeIndex { index: 0, n: 2 })
        );
        assert!(coupling(1, 1, 3, 1, 2).is_err());
    }

    #[test]
    fn support_matches_dense_tensor() {
        for n in 1..=7 {
            let lat = lattice(n, 0.0);
            let mut dense = Vec::new();
            for k in 1..=n {
                for l in 1..=n {
                    for m in 1..=n {
                        for nn in 1..=n {
                            let c = coupling(k, l, m, nn, n).unwrap();
                            if c != 0 {
                                dense.push((k, l, m, nn, c));
                            }
                        }
                    }
                }
            }
            assert_eq!(lat.nonzero_couplings(), dense, "N = {n}");
        }
    }

    #[test]
    fn coupling_values_bounded() {
        for n in 1..=10 {
            for (_, _, _, _, c) in lattice(n, 0.0).nonzero_couplings() {
                assert!((-2..=3).contains(&c), "N = {n}: C = {c}");
            }
        }
    }

    #[test]
    fn omega_examples() {
        assert_relative_eq!(omega::<f64>(1, 2).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(omega::<f64>(2, 2).unwrap(), 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(omega::<f64>(1, 1).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert!(omega::<f64>(3, 2).is_err());
    }

    #[test]
    fn spectrum_increasing_and_bounded() {
        for n in 1..=64 {
            let s = Spectrum::<f64>::new(n).unwrap();
            let w = s.as_slice();
            assert!(w.iter().all(|&x| x > 0.0 && x < 2.0));
            assert!(w.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn transform_elements() {
        let t1 = SineTransform::<f64>::new(1);
        assert_relative_eq!(t1.element(1, 1).unwrap(), 1.0, epsilon = 1e-15);
        let t2 = SineTransform::<f64>::new(2);
        assert_relative_eq!(
            t2.element(1, 1).unwrap(),
            1.0 / 2f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(t2.apply(&[1.0]).is_err());
    }

    #[test]
    fn energy_examples() {
        let lat = lattice(2, 0.0);
        assert_eq!(lat.energy_mode(&ModeState::zeros(2)).unwrap(), 0.0);
        assert_eq!(lat.energy_site(&SiteState::zeros(2)).unwrap(), 0.0);
        let s = ModeState::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_relative_eq!(lat.energy_mode(&s).unwrap(), 0.5, epsilon = 1e-15);

        let lat = lattice(2, 0.1);
        let s = ModeState::new(vec![0.1, 1.0], vec![0.1, 0.0]).unwrap();
        let e_mode = lat.energy_mode(&s).unwrap();
        let e_site = lat.energy_site(&lat.mode_to_site(&s).unwrap()).unwrap();
        assert!((e_mode - e_site).abs() < 1e-12, "{e_mode} vs {e_site}");
    }

    #[test]
    fn eom_examples() {
        for eps in [0.0, 0.1, 0.7] {
            let lat = lattice(2, eps);
            let a = lat.eom_rhs(&[1.0, 0.0]).unwrap();
            assert_relative_eq!(a[0], -1.0 - eps / 2.0, epsilon = 1e-14);
            assert_eq!(a[1], 0.0);
            let a = lat.eom_rhs(&[0.0, 1.0]).unwrap();
            assert_relative_eq!(a[1], -3.0 - 4.5 * eps, epsilon = 1e-13);
        }
        let lat = lattice(5, 0.0);
        let q = [0.3, -0.2, 0.5, 0.1, -0.7];
        let a = lat.eom_rhs(&q).unwrap();
        for k in 0..5 {
            let w = lat.spectrum().as_slice()[k];
            assert_eq!(a[k], -w * w * q[k]);
        }
    }

    #[test]
    fn cubic_coefficients_n2() {
        let lat = lattice(2, 0.1);
        let c1 = lat.cubic_coefficients(1).unwrap();
        assert_eq!(c1.len(), 2);
        assert!((c1[&[1, 1, 1]] + 0.5).abs() < 1e-14);
        assert!((c1[&[1, 2, 2]] + 1.5).abs() < 1e-14);
        let c2 = lat.cubic_coefficients(2).unwrap();
        assert_eq!(c2.len(), 2);
        assert!((c2[&[2, 2, 2]] + 4.5).abs() < 1e-14);
        assert!((c2[&[1, 1, 2]] + 1.5).abs() < 1e-14);
    }

    #[test]
    fn config_validation() {
        assert!(LatticeConfig::new(0, 0.1).is_err());
        assert!(LatticeConfig::new(2, -0.1).is_err());
        assert!(LatticeConfig::new(2, f64::NAN).is_err());
        assert!(LatticeConfig::new(2, 0.1)
            .unwrap()
            .with_resonance_tol(0.0)
            .is_err());
    }

    #[test]
    fn single_precision_lattice() {
        let lat = Lattice::new(LatticeConfig::<f32>::new(2, 0.1).unwrap()).unwrap();
        let a = lat.eom_rhs(&[1.0, 0.0]).unwrap();
        assert!((a[0] + 1.05).abs() < 1e-6);
    }
}
