//! Text formats: number formatting and initial-condition files.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::ModeState;
use crate::scalar::Real;

/// Formats `x` with 15 significant digits, plain decimal where the exponent
/// is moderate and scientific otherwise. Trailing zeros are dropped.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.14e}", x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_zeros(&fixed)
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Parses an initial-condition file: one line per mode holding `Q_k(0)` and
/// `Q̇_k(0)`, separated by whitespace or a comma. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_ics<T: Real>(text: &str) -> Result<ModeState<T>> {
    let mut q = Vec::new();
    let mut qdot = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("line {}: expected 2 columns, found {}", i + 1, fields.len()),
            });
        }
        let parse = |f: &str| -> Result<T> {
            let v = f64::from_str(f).map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("line {}: {f:?}: {e}", i + 1),
            })?;
            Ok(T::lit(v))
        };
        q.push(parse(fields[0])?);
        qdot.push(parse(fields[1])?);
    }
    if q.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no modes found".into(),
        });
    }
    ModeState::new(q, qdot)
}

/// Parses a comma-separated list of reals.
pub fn parse_list<T: Real>(text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|e| Error::Parse {
                    line: 0,
                    message: format!("{f:?}: {e}"),
                })
        })
        .collect()
}
