use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeConfig, ModeState};
use crate::scalar::Real;
use crate::series::shift::{
    rho_first_order, rho_self_consistent, FrequencyShift, ShiftMethod,
    DEFAULT_SELF_CONSISTENT_MAX_ITER, DEFAULT_SELF_CONSISTENT_TOL,
};
use crate::series::terms::{restricted_terms, ModeResponse, ResonanceReport, TermTable};

/// Harmonic motion with initial data `(q0, v0)` at angular frequency `freq`.
/// Returns value and derivative.
pub fn zeroth_order<T: Real>(q0: T, v0: T, freq: T, t: T) -> (T, T) {
    let (s, c) = (freq * t).sin_cos();
    (q0 * c + v0 / freq * s, v0 * c - q0 * freq * s)
}

/// First-order Lindstedt solution `Q_k(t) = Q_{k,0}(β_k t) + ε Q_{k,1}(t)`.
///
/// The zeroth order runs at the shifted frequencies `β_k ω_k`; the
/// correction `Q_{k,1}` is the zero-initial-data response to the restricted
/// forcing built from the unshifted harmonic modes.
#[derive(Debug, Clone)]
pub struct SeriesSolution<T> {
    config: LatticeConfig<T>,
    omega: Vec<T>,
    ics: ModeState<T>,
    shift: FrequencyShift<T>,
    tables: Vec<TermTable<T>>,
    responses: Vec<ModeResponse<T>>,
    resonances: ResonanceReport<T>,
}

impl<T: Real> SeriesSolution<T> {
    pub fn new(lattice: &Lattice<T>, ics: ModeState<T>, method: ShiftMethod) -> Result<Self> {
        let shift = match method {
            ShiftMethod::FirstOrder => rho_first_order(lattice, &ics)?,
            ShiftMethod::SelfConsistent => rho_self_consistent(
                lattice,
                &ics,
                DEFAULT_SELF_CONSISTENT_MAX_ITER,
                T::lit(DEFAULT_SELF_CONSISTENT_TOL),
            )?,
        };
        Self::with_shift(lattice, ics, shift)
    }

    pub fn with_shift(lattice: &Lattice<T>, ics: ModeState<T>, shift: FrequencyShift<T>) -> Result<Self> {
        let n = lattice.n();
        if shift.rho.len() != n || shift.beta.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: shift.rho.len(),
            });
        }
        let omega = lattice.spectrum().as_slice().to_vec();
        assert!(omega.iter().all(|&w| w > T::zero()), "fixed-end spectrum has no zero mode");
        let mut tables = Vec::with_capacity(n);
        let mut resonances = ResonanceReport::default();
        for k in 1..=n {
            let (table, report) = restricted_terms(lattice, &ics, k)?;
            tables.push(table);
            resonances.extend(report);
        }
        let responses = tables.iter().map(ModeResponse::from_table).collect();
        Ok(Self {
            config: *lattice.config(),
            omega,
            ics,
            shift,
            tables,
            responses,
            resonances,
        })
    }

    pub fn config(&self) -> &LatticeConfig<T> {
        &self.config
    }

    pub fn ics(&self) -> &ModeState<T> {
        &self.ics
    }

    pub fn shift(&self) -> &FrequencyShift<T> {
        &self.shift
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn resonances(&self) -> &ResonanceReport<T> {
        &self.resonances
    }

    pub fn term_tables(&self) -> &[TermTable<T>] {
        &self.tables
    }

    pub fn term_table(&self, k: usize) -> Result<&TermTable<T>> {
        self.check(k)?;
        Ok(&self.tables[k - 1])
    }

    pub fn response(&self, k: usize) -> Result<&ModeResponse<T>> {
        self.check(k)?;
        Ok(&self.responses[k - 1])
    }

    fn check(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n() {
            Err(Error::ModeIndex { index: k, n: self.n() })
        } else {
            Ok(())
        }
    }

    /// Shifted zeroth order `Q_{k,0}(β_k t)` and its derivative.
    pub fn q0_eval(&self, k: usize, t: T) -> Result<(T, T)> {
        self.check(k)?;
        let i = k - 1;
        let freq = self.omega[i] * self.shift.beta[i];
        Ok(zeroth_order(self.ics.q[i], self.ics.qdot[i], freq, t))
    }

    /// First-order correction `Q_{k,1}(t)` and its derivative.
    pub fn q1_eval(&self, k: usize, t: T) -> Result<(T, T)> {
        self.check(k)?;
        Ok(self.responses[k - 1].eval(t))
    }

    /// Full series state at time `t`.
    pub fn eval(&self, t: T) -> ModeState<T> {
        let eps = self.config.epsilon;
        let n = self.n();
        let mut q = Vec::with_capacity(n);
        let mut qdot = Vec::with_capacity(n);
        for k in 1..=n {
            let (x0, v0) = self.q0_eval(k, t).unwrap();
            let (x1, v1) = self.responses[k - 1].eval(t);
            q.push(x0 + eps * x1);
            qdot.push(v0 + eps * v1);
        }
        ModeState { q, qdot }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solution(n: usize, eps: f64, q: Vec<f64>, v: Vec<f64>) -> SeriesSolution<f64> {
        let lat = Lattice::new(LatticeConfig::new(n, eps).unwrap()).unwrap();
        SeriesSolution::new(&lat, ModeState::new(q, v).unwrap(), ShiftMethod::FirstOrder).unwrap()
    }

    #[test]
    fn initial_data_reproduced() {
        let q = vec![0.3, -0.5, 0.2, 0.8];
        let v = vec![-0.1, 0.4, 0.0, 0.25];
        let sol = solution(4, 0.15, q.clone(), v.clone());
        let s0 = sol.eval(0.0);
        for k in 0..4 {
            assert!((s0.q[k] - q[k]).abs() < 1e-12);
            assert!((s0.qdot[k] - v[k]).abs() < 1e-12);
            assert_eq!(sol.q0_eval(k + 1, 0.0).unwrap(), (q[k], v[k]));
        }
    }

    #[test]
    fn harmonic_limit() {
        let sol = solution(3, 0.0, vec![0.5, 0.1, -0.3], vec![0.2, 0.0, 0.7]);
        for &t in &[0.5, 3.0, 17.25] {
            let s = sol.eval(t);
            for k in 0..3 {
                let w = sol.omega()[k];
                let exact = sol.ics().q[k] * (w * t).cos() + sol.ics().qdot[k] / w * (w * t).sin();
                assert!((s.q[k] - exact).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn mode2_leading_frequency() {
        let sol = solution(2, 0.1, vec![0.1, 1.0], vec![0.1, 0.0]);
        let freq = 2113.0 / 1000.0 * (std::f64::consts::PI / 3.0).sin();
        for &t in &[0.0, 1.0, 7.5, 40.0] {
            let (x, _) = sol.q0_eval(2, t).unwrap();
            assert!((x - (freq * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_correction_matches_closed_form_expansion() {
        // ε Q_{k,1} for the N = 2 example, transcribed term by term
        let sol = solution(2, 0.1, vec![0.1, 1.0], vec![0.1, 0.0]);
        let s3 = 3f64.sqrt();
        let mode1 = |t: f64| {
            let c = |f: f64| (f * t).cos();
            let s = |f: f64| (f * t).sin();
            -1.0 / 2400.0 * (c(1.0) - c(2.0 * s3 - 1.0)) * s3 / (-2.0 + 2.0 * s3)
                + 1.0 / 320000.0 * c(1.0)
                - 1.0 / 320000.0 * c(3.0)
                - 1.0 / 1600.0 * (c(1.0) - c(2.0 * s3 + 1.0)) * s3 / (2.0 * s3 + 2.0)
                + 1.0 / 4800.0 * s3 * (c(1.0) - c(1.0 - 2.0 * s3)) / (2.0 - 2.0 * s3)
                + 1.0 / 2400.0 * (s(1.0) * (2.0 * s3 - 1.0) - s(2.0 * s3 - 1.0)) * s3 / (-2.0 + 2.0 * s3)
                + 1.0 / 4800.0 * s3 * (s(1.0) * (1.0 - 2.0 * s3) - s(1.0 - 2.0 * s3)) / (2.0 - 2.0 * s3)
                - 3.0 / 320000.0 * s(1.0)
                + 1.0 / 320000.0 * s(3.0)
                - 1.0 / 1600.0 * (s(1.0) * (2.0 * s3 + 1.0) - s(2.0 * s3 + 1.0)) * s3 / (2.0 * s3 + 2.0)
        };
        let mode2 = |t: f64| {
            let c = |f: f64| (f * t).cos();
            let s = |f: f64| (f * t).sin();
            -3.0 / 640.0 * c(s3) + 3.0 / 640.0 * c(3.0 * s3)
                - 1.0 / 12000.0 * s3 * (s(s3) * (2.0 - s3) - s(2.0 - s3) * s3) / (2.0 - 2.0 * s3)
                - 1.0 / 24000.0 * s3 * (s(s3) * (s3 - 2.0) - s(s3 - 2.0) * s3) / (-2.0 + 2.0 * s3)
                - 1.0 / 8000.0 * s3 * (s(s3) * (s3 + 2.0) - s(s3 + 2.0) * s3) / (2.0 * s3 + 2.0)
        };
        for i in 0..200 {
            let t = 0.37 * i as f64;
            let (x1, _) = sol.q1_eval(1, t).unwrap();
            assert!((0.1 * x1 - mode1(t)).abs() < 1e-13, "mode 1 at t = {t}");
            let (x2, _) = sol.q1_eval(2, t).unwrap();
            assert!((0.1 * x2 - mode2(t)).abs() < 1e-13, "mode 2 at t = {t}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let sol = solution(3, 0.2, vec![0.4, -0.2, 0.3], vec![0.1, 0.3, -0.2]);
        let h = 1e-5;
        for k in 1..=3 {
            for &t in &[0.3, 5.0, 12.7] {
                let (_, d) = sol.q1_eval(k, t).unwrap();
                let fd = (sol.q1_eval(k, t + h).unwrap().0 - sol.q1_eval(k, t - h).unwrap().0) / (2.0 * h);
                assert!((d - fd).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn bad_mode_index() {
        let sol = solution(2, 0.1, vec![0.1, 1.0], vec![0.1, 0.0]);
        assert!(sol.q0_eval(0, 1.0).is_err());
        assert!(sol.q1_eval(3, 1.0).is_err());
    }
}
