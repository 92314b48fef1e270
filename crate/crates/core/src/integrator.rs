//! Fixed-step reference integrators for the mode-space equations of motion
//! and for the driven harmonic oscillator.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, ModeState};
use crate::scalar::Real;
use crate::series::{rho_first_order, zeroth_order, Channel, ResonantTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    /// Kick-drift-kick velocity Verlet; symplectic for the separable Hamiltonian.
    Leapfrog,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub dt: T,
    pub t_max: T,
    pub sample_every: usize,
    pub method: Method,
    pub energy_monitor: bool,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn rk4(dt: T, t_max: T) -> Self {
        Self {
            dt,
            t_max,
            sample_every: 1,
            method: Method::Rk4,
            energy_monitor: false,
        }
    }

    pub fn leapfrog(dt: T, t_max: T) -> Self {
        Self {
            method: Method::Leapfrog,
            ..Self::rk4(dt, t_max)
        }
    }

    pub fn sample_every(mut self, stride: usize) -> Self {
        self.sample_every = stride;
        self
    }

    pub fn with_energy(mut self) -> Self {
        self.energy_monitor = true;
        self
    }

    /// Number of steps; `t_max` must be an integer multiple of `dt` and the
    /// sample stride must divide the step count.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > T::zero()) || !(self.t_max > T::zero()) {
            return Err(Error::InvalidConfig("dt and t_max must be positive".into()));
        }
        if self.dt > self.t_max {
            return Err(Error::InvalidConfig("dt exceeds t_max".into()));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidConfig("sample stride must be positive".into()));
        }
        let ratio = self.t_max / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > T::lit(1e-6) * steps {
            return Err(Error::InvalidConfig(format!(
                "t_max = {} is not a multiple of dt = {}",
                self.t_max, self.dt
            )));
        }
        let steps = steps.to_usize().unwrap();
        if steps % self.sample_every != 0 {
            return Err(Error::InvalidConfig(format!(
                "sample stride {} does not divide {} steps",
                self.sample_every, steps
            )));
        }
        Ok(steps)
    }
}

/// Sampled numerical solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<ModeState<T>>,
    pub energy: Option<Vec<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&ModeState<T>> {
        self.states.last()
    }

    /// Amplitude of mode `k` (zero-based) at every sample.
    pub fn mode_series(&self, k: usize) -> Vec<T> {
        self.states.iter().map(|s| s.q[k]).collect()
    }

    /// Largest relative deviation of the recorded energy from its initial value.
    pub fn max_relative_energy_drift(&self) -> Option<T> {
        let energy = self.energy.as_ref()?;
        let e0 = *energy.first()?;
        Some(
            energy
                .iter()
                .map(|&e| ((e - e0) / e0).abs())
                .fold(T::zero(), T::max),
        )
    }

    /// Comma-separated dump: `t,Q1..QN,Qdot1..QdotN[,H]`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.states.first().map_or(0, ModeState::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|k| format!("Q{k}")));
        header.extend((1..=n).map(|k| format!("Qdot{k}")));
        if self.energy.is_some() {
            header.push("H".into());
        }
        writeln!(out, "{}", header.join(","))?;
        for (i, (t, s)) in self.times.iter().zip(&self.states).enumerate() {
            let mut row = vec![crate::io::fmt_sig(t.as_f64())];
            row.extend(s.q.iter().chain(&s.qdot).map(|x| crate::io::fmt_sig(x.as_f64())));
            if let Some(e) = &self.energy {
                row.push(crate::io::fmt_sig(e[i].as_f64()));
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

struct Rk4Scratch<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Real> Rk4Scratch<T> {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![T::zero(); dim],
            k2: vec![T::zero(); dim],
            k3: vec![T::zero(); dim],
            k4: vec![T::zero(); dim],
            tmp: vec![T::zero(); dim],
        }
    }
}

/// Classic fourth-order Runge-Kutta step for `y' = f(t, y)`.
fn rk4_step<T: Real, F>(f: &mut F, t: T, y: &mut [T], h: T, s: &mut Rk4Scratch<T>)
where
    F: FnMut(T, &[T], &mut [T]),
{
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);

    f(t, y, &mut s.k1);
    for i in 0..y.len() {
        s.tmp[i] = y[i] + half * h * s.k1[i];
    }
    f(t + half * h, &s.tmp, &mut s.k2);
    for i in 0..y.len() {
        s.tmp[i] = y[i] + half * h * s.k2[i];
    }
    f(t + half * h, &s.tmp, &mut s.k3);
    for i in 0..y.len() {
        s.tmp[i] = y[i] + h * s.k3[i];
    }
    f(t + h, &s.tmp, &mut s.k4);
    for i in 0..y.len() {
        y[i] = y[i] + h * sixth * (s.k1[i] + two * s.k2[i] + two * s.k3[i] + s.k4[i]);
    }
}

fn check_finite<T: Real>(y: &[T], t: T) -> Result<()> {
    if y.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::BlowUp { time: t.as_f64() })
    }
}

/// Integrates the full nonlinear mode equations from `ics`.
pub fn integrate<T: Real>(
    lattice: &Lattice<T>,
    ics: &ModeState<T>,
    icfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    let steps = icfg.steps()?;
    let n = lattice.n();
    if ics.q.len() != n || ics.qdot.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: ics.q.len(),
        });
    }
    let samples = steps / icfg.sample_every + 1;
    let mut times = Vec::with_capacity(samples);
    let mut states = Vec::with_capacity(samples);
    let mut energy = icfg.energy_monitor.then(|| Vec::with_capacity(samples));

    let mut record = |t: T, q: &[T], v: &[T]| -> Result<()> {
        let s = ModeState {
            q: q.to_vec(),
            qdot: v.to_vec(),
        };
        if let Some(e) = energy.as_mut() {
            e.push(lattice.energy_mode(&s)?);
        }
        times.push(t);
        states.push(s);
        Ok(())
    };

    let dt = icfg.dt;
    match icfg.method {
        Method::Rk4 => {
            let mut y: Vec<T> = ics.q.iter().chain(&ics.qdot).copied().collect();
            let mut scratch = Rk4Scratch::new(2 * n);
            let mut rhs = |_t: T, y: &[T], dy: &mut [T]| {
                dy[..n].copy_from_slice(&y[n..]);
                lattice.accelerations_into(&y[..n], &mut dy[n..]).unwrap();
            };
            record(T::zero(), &y[..n], &y[n..])?;
            for step in 1..=steps {
                let t = T::from_count(step - 1) * dt;
                rk4_step(&mut rhs, t, &mut y, dt, &mut scratch);
                let t_new = T::from_count(step) * dt;
                check_finite(&y, t_new)?;
                if step % icfg.sample_every == 0 {
                    record(t_new, &y[..n], &y[n..])?;
                }
            }
        }
        Method::Leapfrog => {
            let half = T::lit(0.5) * dt;
            let mut q = ics.q.clone();
            let mut v = ics.qdot.clone();
            let mut acc = lattice.eom_rhs(&q)?;
            record(T::zero(), &q, &v)?;
            for step in 1..=steps {
                for i in 0..n {
                    v[i] = v[i] + half * acc[i];
                    q[i] = q[i] + dt * v[i];
                }
                lattice.accelerations_into(&q, &mut acc)?;
                for i in 0..n {
                    v[i] = v[i] + half * acc[i];
                }
                let t_new = T::from_count(step) * dt;
                check_finite(&q, t_new)?;
                check_finite(&v, t_new)?;
                if step % icfg.sample_every == 0 {
                    record(t_new, &q, &v)?;
                }
            }
        }
    }
    Ok(Trajectory { times, states, energy })
}

/// Integrates `x'' + ω² x = f(t)` from `x(0) = x'(0) = 0` with RK4.
///
/// The returned trajectory has a single component. `icfg.method` and
/// `icfg.energy_monitor` are ignored.
pub fn integrate_driven<T: Real, F>(
    forcing: F,
    omega: T,
    icfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>>
where
    F: Fn(T) -> T,
{
    let steps = icfg.steps()?;
    let w2 = omega * omega;
    let mut rhs = |t: T, y: &[T], dy: &mut [T]| {
        dy[0] = y[1];
        dy[1] = forcing(t) - w2 * y[0];
    };
    let mut y = [T::zero(), T::zero()];
    let mut scratch = Rk4Scratch::new(2);
    let samples = steps / icfg.sample_every + 1;
    let mut times = Vec::with_capacity(samples);
    let mut states = Vec::with_capacity(samples);
    times.push(T::zero());
    states.push(ModeState {
        q: vec![T::zero()],
        qdot: vec![T::zero()],
    });
    for step in 1..=steps {
        let t = T::from_count(step - 1) * icfg.dt;
        rk4_step(&mut rhs, t, &mut y, icfg.dt, &mut scratch);
        let t_new = T::from_count(step) * icfg.dt;
        check_finite(&y, t_new)?;
        if step % icfg.sample_every == 0 {
            times.push(t_new);
            states.push(ModeState {
                q: vec![y[0]],
                qdot: vec![y[1]],
            });
        }
    }
    Ok(Trajectory {
        times,
        states,
        energy: None,
    })
}

/// Forcing of the first-order equation for mode `k`, assembled directly from
/// products of unshifted harmonic modes:
/// `2ρ_k ω_k² Q_{k,0}(t) - ω_k/(2(N+1)) Σ ω_l ω_m ω_n C_klmn Q_{l,0} Q_{m,0} Q_{n,0}`.
///
/// With first-order `ρ_k` the diagonal and pair resonances cancel between the
/// two pieces, leaving the restricted sum. Any accidental resonances passed
/// in are subtracted explicitly.
#[derive(Debug, Clone)]
pub struct RestrictedForcing<T> {
    k: usize,
    omega: Vec<T>,
    q0: Vec<T>,
    v0: Vec<T>,
    shift_coeff: T,
    cubic_prefactor: T,
    entries: Vec<(usize, usize, usize, T)>,
    accidental: Vec<ResonantTerm<T>>,
}

impl<T: Real> RestrictedForcing<T> {
    pub fn new(
        lattice: &Lattice<T>,
        ics: &ModeState<T>,
        k: usize,
        accidental: &[ResonantTerm<T>],
    ) -> Result<Self> {
        let n = lattice.n();
        if k == 0 || k > n {
            return Err(Error::ModeIndex { index: k, n });
        }
        let rho = rho_first_order(lattice, ics)?.rho;
        let omega = lattice.spectrum().as_slice().to_vec();
        let wk = omega[k - 1];
        let entries = lattice
            .support()
            .entries(k - 1)
            .iter()
            .map(|e| {
                let w = omega[e.l] * omega[e.m] * omega[e.n] * T::from_i32(e.c).unwrap();
                (e.l, e.m, e.n, w)
            })
            .collect();
        Ok(Self {
            k,
            shift_coeff: T::lit(2.0) * rho[k - 1] * wk * wk,
            cubic_prefactor: -wk / (T::lit(2.0) * T::from_count(n + 1)),
            omega,
            q0: ics.q.clone(),
            v0: ics.qdot.clone(),
            entries,
            accidental: accidental.iter().filter(|r| r.term.k == k).copied().collect(),
        })
    }

    pub fn omega_k(&self) -> T {
        self.omega[self.k - 1]
    }

    pub fn eval(&self, t: T) -> T {
        let modes: Vec<T> = (0..self.omega.len())
            .map(|j| zeroth_order(self.q0[j], self.v0[j], self.omega[j], t).0)
            .collect();
        let cubic: T = self
            .entries
            .iter()
            .map(|&(l, m, n, w)| w * modes[l] * modes[m] * modes[n])
            .sum();
        let mut f = self.shift_coeff * modes[self.k - 1] + self.cubic_prefactor * cubic;
        for r in &self.accidental {
            let phase = r.term.alpha * t;
            let s = match r.term.channel {
                Channel::Cos => phase.cos(),
                Channel::Sin => phase.sin(),
            };
            f = f - r.term.forcing_amplitude() * s;
        }
        f
    }
}
