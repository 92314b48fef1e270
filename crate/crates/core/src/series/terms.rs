//! Harmonic source terms of the first-order equation and their
//! zero-initial-condition responses.
//!
//! For fixed `(l, m, n)` the product of three zeroth-order modes splits into
//! four combination frequencies `ω_l ± ω_m ± ω_n`, each in a cosine and a
//! sine channel. Writing `Q_{j,0}(t) = Re(c_j e^{iω_j t})` with
//! `c_j = Q_j(0) - i Q̇_j(0)/ω_j`, the product is
//! `(1/4) Σ Re(c_l c_m^± c_n^± e^{i(ω_l ± ω_m ± ω_n)t})`, where `c^-` is the
//! complex conjugate. The cosine bracket is the real part of that product,
//! the sine bracket minus its imaginary part.

use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, ModeState};
use crate::scalar::Real;

/// Detuning below which a retained term is flagged as near-resonant.
pub const NEAR_RESONANCE_THRESHOLD: f64 = 1e-4;

/// Signs carried by `ω_m` and `ω_n` in the combination frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Combination {
    /// `ω_l + ω_m - ω_n`
    PlusMinus,
    /// `ω_l + ω_m + ω_n`
    PlusPlus,
    /// `ω_l - ω_m - ω_n`
    MinusMinus,
    /// `ω_l - ω_m + ω_n`
    MinusPlus,
}

impl Combination {
    pub const ALL: [Combination; 4] = [
        Combination::PlusMinus,
        Combination::PlusPlus,
        Combination::MinusMinus,
        Combination::MinusPlus,
    ];

    pub fn signs(self) -> (bool, bool) {
        match self {
            Combination::PlusMinus => (true, false),
            Combination::PlusPlus => (true, true),
            Combination::MinusMinus => (false, false),
            Combination::MinusPlus => (false, true),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Combination::PlusMinus => "l+m-n",
            Combination::PlusPlus => "l+m+n",
            Combination::MinusMinus => "l-m-n",
            Combination::MinusPlus => "l-m+n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Cos,
    Sin,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Cos => "cos",
            Channel::Sin => "sin",
        })
    }
}

/// One sinusoidal forcing term `prefactor · bracket · cos|sin(α t)` in the
/// equation for `Q_{k,1}`. Mode labels are one-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceTerm<T> {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub combination: Combination,
    pub channel: Channel,
    /// Signed combination frequency.
    pub alpha: T,
    pub bracket: T,
    /// `-ω_k ω_l ω_m ω_n C_klmn / (8(N+1))`
    pub prefactor: T,
}

impl<T: Real> SourceTerm<T> {
    pub fn forcing_amplitude(&self) -> T {
        self.prefactor * self.bracket
    }

    /// Forcing value at time `t`.
    pub fn forcing(&self, t: T) -> T {
        let phase = self.alpha * t;
        let s = match self.channel {
            Channel::Cos => phase.cos(),
            Channel::Sin => phase.sin(),
        };
        self.forcing_amplitude() * s
    }

    /// Coefficients `(a, b, c)` of the particular solution
    /// `a cos(ω_k t) + b sin(ω_k t) + c cos|sin(α t)` with zero initial data.
    fn response(&self, omega_k: T) -> (T, T, T) {
        let f = self.forcing_amplitude();
        let denom = (self.alpha + omega_k) * (self.alpha - omega_k);
        match self.channel {
            Channel::Cos => (f / denom, T::zero(), -f / denom),
            Channel::Sin => (T::zero(), f * self.alpha / (omega_k * denom), -f / denom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceKind {
    /// Diagonal `(k,k,k)` or pair `(k,m,m)` pattern, absorbed into `ρ_k`.
    Absorbed,
    /// Any other exact resonance; excluded but not accounted for by `ρ_k`.
    Accidental,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantTerm<T> {
    pub term: SourceTerm<T>,
    pub kind: ResonanceKind,
}

/// Retained term whose combination frequency lies close to `±ω_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearResonance<T> {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub combination: Combination,
    pub alpha: T,
    /// `|α| - ω_k`
    pub detuning: T,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResonanceReport<T> {
    pub exact: Vec<ResonantTerm<T>>,
    pub near: Vec<NearResonance<T>>,
}

impl<T: Real> ResonanceReport<T> {
    pub fn accidental(&self) -> impl Iterator<Item = &ResonantTerm<T>> {
        self.exact
            .iter()
            .filter(|r| r.kind == ResonanceKind::Accidental)
    }

    pub fn has_warnings(&self) -> bool {
        self.accidental().next().is_some() || !self.near.is_empty()
    }

    pub fn extend(&mut self, other: ResonanceReport<T>) {
        self.exact.extend(other.exact);
        self.near.extend(other.near);
    }

    /// Human-readable warning lines, one per accidental or near resonance.
    pub fn warnings(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .accidental()
            .filter(|r| r.term.channel == Channel::Cos)
            .map(|r| {
                let t = &r.term;
                format!(
                    "accidental resonance in mode {}: ({},{},{}) {} = {} excluded",
                    t.k,
                    t.l,
                    t.m,
                    t.n,
                    t.combination.label(),
                    t.alpha
                )
            })
            .collect();
        out.extend(self.near.iter().map(|r| {
            format!(
                "near resonance in mode {}: ({},{},{}) {} detuning {:e}",
                r.k,
                r.l,
                r.m,
                r.n,
                r.combination.label(),
                r.detuning.as_f64()
            )
        }));
        out
    }
}

/// Retained (non-resonant) source terms for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TermTable<T> {
    pub k: usize,
    pub omega_k: T,
    pub terms: Vec<SourceTerm<T>>,
}

impl<T: Real> TermTable<T> {
    /// Restricted-sum forcing at time `t`.
    pub fn forcing(&self, t: T) -> T {
        self.terms.iter().map(|s| s.forcing(t)).sum()
    }

    /// Distinct `|α|` values among terms with nonzero amplitude, ascending.
    pub fn harmonics(&self, rel_tol: T) -> Vec<T> {
        let mut freqs: Vec<T> = self
            .terms
            .iter()
            .filter(|s| s.forcing_amplitude() != T::zero())
            .map(|s| s.alpha.abs())
            .collect();
        freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        freqs.dedup_by(|a, b| (*a - *b).abs() <= rel_tol * T::one().max(b.abs()));
        freqs
    }
}

pub(crate) fn mode_pattern(k: usize, l: usize, m: usize, n: usize) -> bool {
    let mut idx = [l, m, n];
    idx.sort_unstable();
    let hits = idx.iter().filter(|&&i| i == k).count();
    match hits {
        3 => true,
        1 => {
            let others: Vec<usize> = idx.iter().copied().filter(|&i| i != k).collect();
            others[0] == others[1]
        }
        _ => false,
    }
}

/// Cosine and sine brackets for one `(l, m, n)` and combination, from
/// amplitudes `a = Q(0)` and reduced velocities `b = Q̇(0)/ω`.
pub(crate) fn brackets<T: Real>(a: [T; 3], b: [T; 3], comb: Combination) -> (T, T) {
    let (plus_m, plus_n) = comb.signs();
    let factor = |j: usize, plus: bool| -> (T, T) {
        if plus {
            (a[j], -b[j])
        } else {
            (a[j], b[j])
        }
    };
    let mul = |x: (T, T), y: (T, T)| (x.0 * y.0 - x.1 * y.1, x.0 * y.1 + x.1 * y.0);
    let prod = mul(mul(factor(0, true), factor(1, plus_m)), factor(2, plus_n));
    (prod.0, -prod.1)
}

/// Builds the restricted source-term table for mode `k` (one-based) and
/// reports every excluded or near-resonant sub-term.
pub fn restricted_terms<T: Real>(
    lattice: &Lattice<T>,
    ics: &ModeState<T>,
    k: usize,
) -> Result<(TermTable<T>, ResonanceReport<T>)> {
    let n = lattice.n();
    if k == 0 || k > n {
        return Err(Error::ModeIndex { index: k, n });
    }
    for len in [ics.q.len(), ics.qdot.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    let omega = lattice.spectrum().as_slice();
    let omega_k = omega[k - 1];
    let tol = lattice.config().resonance_tol;
    let near_tol = T::lit(NEAR_RESONANCE_THRESHOLD);
    let base = -omega_k / (T::lit(8.0) * T::from_count(n + 1));
    let reduced: Vec<T> = ics.qdot.iter().zip(omega).map(|(&v, &w)| v / w).collect();

    let mut terms = Vec::new();
    let mut report = ResonanceReport::default();
    for e in lattice.support().entries(k - 1) {
        let (l, m, nn) = (e.l, e.m, e.n);
        let prefactor =
            base * omega[l] * omega[m] * omega[nn] * T::from_i32(e.c).unwrap();
        let a = [ics.q[l], ics.q[m], ics.q[nn]];
        let b = [reduced[l], reduced[m], reduced[nn]];
        for comb in Combination::ALL {
            let (plus_m, plus_n) = comb.signs();
            let sm = if plus_m { omega[m] } else { -omega[m] };
            let sn = if plus_n { omega[nn] } else { -omega[nn] };
            let alpha = omega[l] + sm + sn;
            let (cos_b, sin_b) = brackets(a, b, comb);
            let make = |channel, bracket| SourceTerm {
                k,
                l: l + 1,
                m: m + 1,
                n: nn + 1,
                combination: comb,
                channel,
                alpha,
                bracket,
                prefactor,
            };
            let cos_term = make(Channel::Cos, cos_b);
            let sin_term = make(Channel::Sin, sin_b);
            let detuning = alpha.abs() - omega_k;
            if detuning.abs() < tol {
                let kind = if mode_pattern(k, l + 1, m + 1, nn + 1) {
                    ResonanceKind::Absorbed
                } else {
                    ResonanceKind::Accidental
                };
                report.exact.push(ResonantTerm { term: cos_term, kind });
                report.exact.push(ResonantTerm { term: sin_term, kind });
                continue;
            }
            if detuning.abs() < near_tol {
                report.near.push(NearResonance {
                    k,
                    l: l + 1,
                    m: m + 1,
                    n: nn + 1,
                    combination: comb,
                    alpha,
                    detuning,
                });
            }
            terms.push(cos_term);
            terms.push(sin_term);
        }
    }
    Ok((TermTable { k, omega_k, terms }, report))
}

/// One harmonic of the compiled response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic<T> {
    pub freq: T,
    pub cos: T,
    pub sin: T,
}

/// Closed-form `Q_{k,1}(t)` collected by frequency:
/// `cos_k cos(ω_k t) + sin_k sin(ω_k t) + Σ (cos_h cos(f_h t) + sin_h sin(f_h t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeResponse<T> {
    pub omega_k: T,
    pub cos_k: T,
    pub sin_k: T,
    pub harmonics: Vec<Harmonic<T>>,
}

impl<T: Real> ModeResponse<T> {
    pub fn from_table(table: &TermTable<T>) -> Self {
        let omega_k = table.omega_k;
        let mut cos_k = T::zero();
        let mut sin_k = T::zero();
        let mut raw: Vec<Harmonic<T>> = Vec::with_capacity(table.terms.len());
        for term in &table.terms {
            let (a, b, c) = term.response(omega_k);
            cos_k = cos_k + a;
            sin_k = sin_k + b;
            let freq = term.alpha.abs();
            let sign = if term.alpha < T::zero() { -T::one() } else { T::one() };
            raw.push(match term.channel {
                Channel::Cos => Harmonic { freq, cos: c, sin: T::zero() },
                Channel::Sin => Harmonic { freq, cos: T::zero(), sin: sign * c },
            });
        }
        raw.sort_by(|x, y| x.freq.partial_cmp(&y.freq).unwrap());
        let merge_tol = T::lit(1e-13);
        let mut harmonics: Vec<Harmonic<T>> = Vec::new();
        for h in raw {
            match harmonics.last_mut() {
                Some(last) if (h.freq - last.freq).abs() <= merge_tol * T::one().max(last.freq) => {
                    last.cos = last.cos + h.cos;
                    last.sin = last.sin + h.sin;
                }
                _ => harmonics.push(h),
            }
        }
        Self { omega_k, cos_k, sin_k, harmonics }
    }

    /// Value and time derivative at `t`.
    pub fn eval(&self, t: T) -> (T, T) {
        let (s, c) = (self.omega_k * t).sin_cos();
        let mut value = self.cos_k * c + self.sin_k * s;
        let mut deriv = self.omega_k * (self.sin_k * c - self.cos_k * s);
        for h in &self.harmonics {
            let (s, c) = (h.freq * t).sin_cos();
            value = value + h.cos * c + h.sin * s;
            deriv = deriv + h.freq * (h.sin * c - h.cos * s);
        }
        (value, deriv)
    }
}

/// Writes retained terms as comma-separated records with a header row.
pub fn write_term_dump<T: Real, W: Write>(tables: &[TermTable<T>], mut out: W) -> io::Result<()> {
    writeln!(out, "k,l,m,n,channel,alpha,bracket,prefactor")?;
    for table in tables {
        for s in &table.terms {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.k,
                s.l,
                s.m,
                s.n,
                s.channel,
                crate::io::fmt_sig(s.alpha.as_f64()),
                crate::io::fmt_sig(s.bracket.as_f64()),
                crate::io::fmt_sig(s.prefactor.as_f64()),
            )?;
        }
    }
    Ok(())
}
