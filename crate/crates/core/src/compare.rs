//! Series-versus-numerical comparison and the N = 2 reproduction run.

use std::fmt;
use std::io::{self, Write};

use serde_json::json;

use crate::error::Result;
use crate::integrator::{integrate, IntegratorConfig, Method, Trajectory};
use crate::io::fmt_sig;
use crate::lattice::{Lattice, LatticeConfig, ModeState};
use crate::scalar::Real;
use crate::series::{SeriesSolution, ShiftMethod};

pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions<T> {
    pub horizon: T,
    pub threshold: T,
    pub dt: T,
    pub sample_every: usize,
    pub shift: ShiftMethod,
}

impl<T: Real> CompareOptions<T> {
    pub fn new(horizon: T) -> Self {
        Self {
            horizon,
            threshold: T::lit(DEFAULT_DIVERGENCE_THRESHOLD),
            dt: T::lit(1e-3),
            sample_every: 10,
            shift: ShiftMethod::FirstOrder,
        }
    }

    pub fn threshold(mut self, threshold: T) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }

    pub fn sample_every(mut self, stride: usize) -> Self {
        self.sample_every = stride;
        self
    }

    pub fn shift(mut self, shift: ShiftMethod) -> Self {
        self.shift = shift;
        self
    }
}

/// Linear fit of zero-crossing offsets `t_series - t_num` against time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseFit<T> {
    /// Zero-based mode the crossings were taken from.
    pub mode: usize,
    pub crossings: usize,
    pub intercept: T,
    pub slope: T,
    pub r_squared: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport<T> {
    pub max_abs_err: Vec<T>,
    pub rms: Vec<T>,
    /// Phase of the series minus phase of the numerical solution, per unit
    /// time, for the largest-amplitude mode.
    pub phase_drift_rate: T,
    pub phase_fit: Option<PhaseFit<T>>,
    /// First sample where some mode differs by more than `threshold`.
    pub divergence_time: Option<T>,
    pub threshold: T,
    pub horizon: T,
    pub rho: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Real> ComparisonReport<T> {
    pub fn to_json(&self) -> serde_json::Value {
        let v = |xs: &[T]| xs.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
        json!({
            "max_abs_err": v(&self.max_abs_err),
            "rms": v(&self.rms),
            "phase_drift_rate": self.phase_drift_rate.as_f64(),
            "phase_fit_r2": self.phase_fit.map(|f| f.r_squared.as_f64()),
            "divergence_time": self.divergence_time.map(|t| t.as_f64()),
            "threshold": self.threshold.as_f64(),
            "horizon": self.horizon.as_f64(),
            "rho": v(&self.rho),
            "beta": v(&self.beta),
        })
    }

    /// Long-format `metric,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "metric,value")?;
        for (k, (m, r)) in self.max_abs_err.iter().zip(&self.rms).enumerate() {
            writeln!(out, "max_abs_err{},{}", k + 1, fmt_sig(m.as_f64()))?;
            writeln!(out, "rms{},{}", k + 1, fmt_sig(r.as_f64()))?;
        }
        writeln!(out, "phase_drift_rate,{}", fmt_sig(self.phase_drift_rate.as_f64()))?;
        match self.divergence_time {
            Some(t) => writeln!(out, "divergence_time,{}", fmt_sig(t.as_f64()))?,
            None => writeln!(out, "divergence_time,not reached")?,
        }
        writeln!(out, "horizon,{}", fmt_sig(self.horizon.as_f64()))?;
        for (k, (r, b)) in self.rho.iter().zip(&self.beta).enumerate() {
            writeln!(out, "rho{},{}", k + 1, fmt_sig(r.as_f64()))?;
            writeln!(out, "beta{},{}", k + 1, fmt_sig(b.as_f64()))?;
        }
        Ok(())
    }
}

/// Series and numerical solution on a shared grid, plus metrics.
#[derive(Debug, Clone)]
pub struct Comparison<T> {
    pub solution: SeriesSolution<T>,
    pub numeric: Trajectory<T>,
    pub series: Vec<ModeState<T>>,
    pub report: ComparisonReport<T>,
}

impl<T: Real> Comparison<T> {
    pub fn times(&self) -> &[T] {
        &self.numeric.times
    }

    /// Data file: `t,Q1_series..QN_series,Q1_num..QN_num,diff1..diffN`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.solution.n();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|k| format!("Q{k}_series")));
        header.extend((1..=n).map(|k| format!("Q{k}_num")));
        header.extend((1..=n).map(|k| format!("diff{k}")));
        writeln!(out, "{}", header.join(","))?;
        for ((t, s), num) in self.numeric.times.iter().zip(&self.series).zip(&self.numeric.states) {
            let mut row = Vec::with_capacity(3 * n + 1);
            row.push(fmt_sig(t.as_f64()));
            row.extend(s.q.iter().map(|x| fmt_sig(x.as_f64())));
            row.extend(num.q.iter().map(|x| fmt_sig(x.as_f64())));
            row.extend(s.q.iter().zip(&num.q).map(|(a, b)| fmt_sig((*a - *b).as_f64())));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Sign changes of a sampled signal, linearly interpolated; `true` marks an
/// upward crossing.
/// Equation-of-motion residual `Q̈ - F(Q)` of the series at `t`, with `Q̈`
/// from a five-point central difference of step `h`.
pub fn series_residual<T: Real>(lattice: &Lattice<T>, solution: &SeriesSolution<T>, t: T, h: T) -> Result<Vec<T>> {
    let q = |s: T| solution.eval(s).q;
    let two = T::lit(2.0);
    let (a, b, c, d, e) = (q(t + two * h), q(t + h), q(t), q(t - h), q(t - two * h));
    let force = lattice.eom_rhs(&c)?;
    let denom = T::lit(12.0) * h * h;
    Ok((0..c.len())
        .map(|k| {
            let qdd = (-a[k] + T::lit(16.0) * b[k] - T::lit(30.0) * c[k] + T::lit(16.0) * d[k] - e[k]) / denom;
            qdd - force[k]
        })
        .collect())
}

/// Largest `|r_k(t)|` over modes and over the uniform grid `t = 0, dt, .., t_max`.
pub fn max_series_residual<T: Real>(
    lattice: &Lattice<T>,
    solution: &SeriesSolution<T>,
    t_max: T,
    dt: T,
    h: T,
) -> Result<T> {
    let steps = (t_max / dt).round().to_usize().unwrap_or(0);
    let mut worst = T::zero();
    for i in 0..=steps {
        let r = series_residual(lattice, solution, T::from_count(i) * dt, h)?;
        worst = r.into_iter().fold(worst, |w, x| w.max(x.abs()));
    }
    Ok(worst)
}

pub fn zero_crossings<T: Real>(times: &[T], values: &[T]) -> Vec<(T, bool)> {
    let mut out = Vec::new();
    for i in 1..values.len() {
        let (a, b) = (values[i - 1], values[i]);
        if (a < T::zero() && b >= T::zero()) || (a > T::zero() && b <= T::zero()) {
            if b == T::zero() && i + 1 < values.len() && values[i + 1] == T::zero() {
                continue;
            }
            let frac = a / (a - b);
            let t = times[i - 1] + frac * (times[i] - times[i - 1]);
            out.push((t, b > a));
        }
    }
    out
}

/// Least-squares line through `(x, y)`; returns intercept, slope and R².
pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> Option<(T, T, T)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = T::from_count(n);
    let mx = x.iter().copied().sum::<T>() / nf;
    let my = y.iter().copied().sum::<T>() / nf;
    let sxx: T = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: T = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    if sxx == T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: T = y.iter().map(|&v| (v - my) * (v - my)).sum();
    let ss_res: T = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let r2 = if ss_tot == T::zero() {
        T::one()
    } else {
        T::one() - ss_res / ss_tot
    };
    Some((intercept, slope, r2))
}

/// Matches each numerical zero crossing of `mode` to the nearest series
/// crossing of the same direction within half a period and fits the offsets.
pub fn phase_fit<T: Real>(
    times: &[T],
    series: &[T],
    numeric: &[T],
    mode: usize,
    shifted_omega: T,
) -> Option<PhaseFit<T>> {
    let half_period = T::PI() / shifted_omega;
    let sc = zero_crossings(times, series);
    let nc = zero_crossings(times, numeric);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(tn, up) in &nc {
        let best = sc
            .iter()
            .filter(|c| c.1 == up)
            .map(|c| c.0 - tn)
            .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
        if let Some(d) = best {
            if d.abs() < half_period {
                xs.push(tn);
                ys.push(d);
            }
        }
    }
    if xs.len() < 3 {
        return None;
    }
    let (intercept, slope, r_squared) = linear_fit(&xs, &ys)?;
    Some(PhaseFit {
        mode,
        crossings: xs.len(),
        intercept,
        slope,
        r_squared,
    })
}

/// Runs the series and the RK4 reference on a shared grid and compares them.
pub fn run_compare<T: Real>(
    lattice: &Lattice<T>,
    ics: &ModeState<T>,
    opts: &CompareOptions<T>,
) -> Result<Comparison<T>> {
    let solution = SeriesSolution::new(lattice, ics.clone(), opts.shift)?;
    let icfg = IntegratorConfig {
        dt: opts.dt,
        t_max: opts.horizon,
        sample_every: opts.sample_every,
        method: Method::Rk4,
        energy_monitor: false,
    };
    let numeric = integrate(lattice, ics, &icfg)?;
    let series: Vec<ModeState<T>> = numeric.times.iter().map(|&t| solution.eval(t)).collect();

    let n = lattice.n();
    let samples = T::from_count(numeric.len());
    let mut max_abs_err = vec![T::zero(); n];
    let mut sq = vec![T::zero(); n];
    let mut divergence_time = None;
    for ((t, s), num) in numeric.times.iter().zip(&series).zip(&numeric.states) {
        let mut worst = T::zero();
        for k in 0..n {
            let d = (s.q[k] - num.q[k]).abs();
            max_abs_err[k] = max_abs_err[k].max(d);
            sq[k] = sq[k] + d * d;
            worst = worst.max(d);
        }
        if divergence_time.is_none() && worst > opts.threshold {
            divergence_time = Some(*t);
        }
    }
    let rms = sq.iter().map(|&s| (s / samples).sqrt()).collect();

    // dominant mode: largest numerical amplitude
    let dominant = (0..n)
        .max_by(|&a, &b| {
            let amp = |k: usize| numeric.states.iter().map(|s| s.q[k].abs()).fold(T::zero(), T::max);
            amp(a).partial_cmp(&amp(b)).unwrap()
        })
        .unwrap_or(0);
    let shifted = solution.shift().beta[dominant] * solution.omega()[dominant];
    let fit = phase_fit(
        &numeric.times,
        &series.iter().map(|s| s.q[dominant]).collect::<Vec<_>>(),
        &numeric.mode_series(dominant),
        dominant,
        shifted,
    );
    // a series crossing that comes late means its phase lags
    let phase_drift_rate = fit.map_or(T::zero(), |f| -f.slope * shifted);

    let report = ComparisonReport {
        max_abs_err,
        rms,
        phase_drift_rate,
        phase_fit: fit,
        divergence_time,
        threshold: opts.threshold,
        horizon: opts.horizon,
        rho: solution.shift().rho.clone(),
        beta: solution.shift().beta.clone(),
    };
    Ok(Comparison {
        solution,
        numeric,
        series,
        report,
    })
}

/// The two-particle example: `N = 2`, `ε = 1/10`, `Q(0) = (1/10, 1)`,
/// `Q̇(0) = (1/10, 0)`.
pub fn n2_example() -> (Lattice<f64>, ModeState<f64>) {
    let lattice = Lattice::new(LatticeConfig::new(2, 0.1).unwrap()).unwrap();
    let ics = ModeState::new(vec![0.1, 1.0], vec![0.1, 0.0]).unwrap();
    (lattice, ics)
}

#[derive(Debug, Clone)]
pub struct ReproN2 {
    pub comparison: Comparison<f64>,
}

impl ReproN2 {
    pub fn solution(&self) -> &SeriesSolution<f64> {
        &self.comparison.solution
    }

    pub fn report(&self) -> &ComparisonReport<f64> {
        &self.comparison.report
    }
}

/// Reproduces the N = 2 example over a horizon of 100 with RK4 at `dt = 1e-3`.
pub fn repro_n2() -> Result<ReproN2> {
    let (lattice, ics) = n2_example();
    let opts = CompareOptions::new(100.0);
    Ok(ReproN2 {
        comparison: run_compare(&lattice, &ics, &opts)?,
    })
}

impl fmt::Display for ReproN2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sol = self.solution();
        let eps = sol.config().epsilon;
        let shift = sol.shift();
        writeln!(f, "N = {}, epsilon = {}", sol.n(), fmt_sig(eps))?;
        writeln!(
            f,
            "Q(0) = ({}), Qdot(0) = ({})",
            join(&sol.ics().q),
            join(&sol.ics().qdot)
        )?;
        for k in 0..sol.n() {
            writeln!(
                f,
                "rho_{} = {}  beta_{} = {}  omega_{} = {}  beta_{}*omega_{} = {}",
                k + 1,
                fmt_sig(shift.rho[k]),
                k + 1,
                fmt_sig(shift.beta[k]),
                k + 1,
                fmt_sig(sol.omega()[k]),
                k + 1,
                k + 1,
                fmt_sig(shift.beta[k] * sol.omega()[k]),
            )?;
        }
        for k in 1..=sol.n() {
            let resp = sol.response(k).unwrap();
            writeln!(f, "retained harmonics of epsilon*Q_{k},1 (freq, cos amp, sin amp):")?;
            writeln!(
                f,
                "  {}  {}  {}  (homogeneous)",
                fmt_sig(resp.omega_k),
                fmt_sig(eps * resp.cos_k),
                fmt_sig(eps * resp.sin_k)
            )?;
            for h in &resp.harmonics {
                writeln!(
                    f,
                    "  {}  {}  {}",
                    fmt_sig(h.freq),
                    fmt_sig(eps * h.cos),
                    fmt_sig(eps * h.sin)
                )?;
            }
        }
        let r = self.report();
        writeln!(f, "comparison against RK4 (dt = 1e-3) over t in [0, {}]:", fmt_sig(r.horizon))?;
        writeln!(f, "  max_abs_err = ({})", join(&r.max_abs_err))?;
        writeln!(f, "  rms = ({})", join(&r.rms))?;
        match r.divergence_time {
            Some(t) => writeln!(f, "  divergence_time (threshold {}) = {}", fmt_sig(r.threshold), fmt_sig(t))?,
            None => writeln!(f, "  divergence_time (threshold {}) = not reached", fmt_sig(r.threshold))?,
        }
        write!(f, "  phase_drift_rate = {}", fmt_sig(r.phase_drift_rate))?;
        if let Some(fit) = r.phase_fit {
            write!(
                f,
                " rad/unit time (mode {}, {} crossings, R^2 = {})",
                fit.mode + 1,
                fit.crossings,
                fmt_sig(fit.r_squared)
            )?;
        }
        writeln!(f)
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_sig(x)).collect::<Vec<_>>().join(", ")
}
