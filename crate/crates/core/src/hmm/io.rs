//! Plain-text model, lower-bound and observation files.
//!
//! Model file: line 1 `X Y`, then `X` rows of `P`, `X` rows of `B` and one
//! row holding `π₀`. Lower-bound file: line 1 `X X`, then `X` rows of `L`.
//! Observation file: one 1-based label per line. Everywhere `#` starts a
//! comment and blank lines are ignored.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{HmmModel, ObservationSequence};
use crate::{Error, Result, STOCHASTIC_TOL};

struct DataLines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last_line: usize,
}

impl<'a> DataLines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last_line: 0,
        }
    }

    /// Next non-empty line with comments stripped, with its 1-based number.
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            let content = raw.split('#').next().unwrap_or("").trim();
            self.last_line = i + 1;
            if !content.is_empty() {
                return Some((i + 1, content));
            }
        }
        None
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let last = self.last_line;
        self.next_line().ok_or_else(|| Error::Parse {
            line: last + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn numbers(&mut self, what: &str, count: usize) -> Result<(usize, Vec<f64>)> {
        let (line, content) = self.expect_line(what)?;
        let values = content
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("`{tok}` is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != count {
            return Err(Error::Parse {
                line,
                msg: format!("{what}: expected {count} values, found {}", values.len()),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                msg: format!("{what}: non-finite value {v}"),
            });
        }
        Ok((line, values))
    }

    fn expect_end(&mut self) -> Result<()> {
        match self.next_line() {
            Some((line, _)) => Err(Error::Parse {
                line,
                msg: "unexpected trailing data".into(),
            }),
            None => Ok(()),
        }
    }
}

fn parse_dims(lines: &mut DataLines<'_>) -> Result<(usize, usize)> {
    let (line, content) = lines.expect_line("header `X Y`")?;
    parse_dims_at(line, content)
}

fn parse_dims_at(line: usize, content: &str) -> Result<(usize, usize)> {
    let dims: Vec<usize> = content
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse {
            line,
            msg: format!("header `{content}` must be two positive integers"),
        })?;
    match dims.as_slice() {
        [x, y] if *x > 0 && *y > 0 => Ok((*x, *y)),
        _ => Err(Error::Parse {
            line,
            msg: format!("header `{content}` must be two positive integers"),
        }),
    }
}

fn check_probability_row(line: usize, what: &str, row: &[f64]) -> Result<()> {
    if row.iter().any(|v| *v < 0.0) {
        return Err(Error::Parse {
            line,
            msg: format!("{what} has a negative entry"),
        });
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::Parse {
            line,
            msg: format!("{what} sums to {s}, expected 1"),
        });
    }
    Ok(())
}

fn read_rows(
    lines: &mut DataLines<'_>,
    name: &str,
    rows: usize,
    cols: usize,
    stochastic: bool,
) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let what = format!("{name} row {}", i + 1);
        let (line, values) = lines.numbers(&what, cols)?;
        if stochastic {
            check_probability_row(line, &what, &values)?;
        } else if values.iter().any(|v| *v < 0.0) {
            return Err(Error::Parse {
                line,
                msg: format!("{what} has a negative entry"),
            });
        }
        m.row_mut(i).copy_from_slice(&values);
    }
    Ok(m)
}

pub fn parse_model(text: &str) -> Result<HmmModel> {
    let mut lines = DataLines::new(text);
    let (x, y) = parse_dims(&mut lines)?;
    let p = read_rows(&mut lines, "P", x, x, true)?;
    let b = read_rows(&mut lines, "B", x, y, true)?;
    let (line, pi0) = lines.numbers("pi0", x)?;
    check_probability_row(line, "pi0", &pi0)?;
    lines.expect_end()?;
    HmmModel::new(p, b, DVector::from_vec(pi0))
}

/// Lower-bound matrix `L` for the polytope construction.
pub fn parse_lower_bound(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = DataLines::new(text);
    let (line, content) = lines.expect_line("header `X X`")?;
    let (x, y) = parse_dims_at(line, content)?;
    if x != y {
        return Err(Error::Parse {
            line,
            msg: format!("lower-bound matrix must be square, header says {x}x{y}"),
        });
    }
    let l = read_rows(&mut lines, "L", x, x, false)?;
    lines.expect_end()?;
    Ok(l)
}

fn push_row(out: &mut String, values: impl Iterator<Item = f64>) {
    let row: Vec<String> = values.map(|v| format!("{v}")).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

/// Serializes with shortest round-trip float formatting, so
/// `parse_model(&write_model(m)) == m` exactly.
pub fn write_model(model: &HmmModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", model.num_states(), model.num_outputs());
    out.push_str("# P\n");
    for row in model.p().row_iter() {
        push_row(&mut out, row.iter().copied());
    }
    out.push_str("# B\n");
    for row in model.b().row_iter() {
        push_row(&mut out, row.iter().copied());
    }
    out.push_str("# pi0\n");
    push_row(&mut out, model.pi0().iter().copied());
    out
}

pub fn parse_observations(text: &str, num_outputs: usize) -> Result<ObservationSequence> {
    let mut lines = DataLines::new(text);
    let mut labels = Vec::new();
    while let Some((line, content)) = lines.next_line() {
        let label: usize = content.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("`{content}` is not a label"),
        })?;
        if label == 0 || label > num_outputs {
            return Err(Error::Parse {
                line,
                msg: format!("label {label} outside 1..={num_outputs}"),
            });
        }
        labels.push(label - 1);
    }
    ObservationSequence::new(labels, num_outputs)
}

pub fn write_observations(obs: &ObservationSequence) -> String {
    let mut out = String::with_capacity(obs.len() * 3);
    for y in obs.labels() {
        let _ = writeln!(out, "{}", y + 1);
    }
    out
}
