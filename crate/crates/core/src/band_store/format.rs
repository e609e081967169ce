//! Text formats.
//!
//! `.bnd`: header `n bw tw precision`, then one line per storage column with
//! `bw + 2*tw + 1` space-separated values in storage-row order.
//!
//! `.mtx` (dense): header `n n`, then `n` lines of `n` values.

use std::io::{BufRead, Write};

use half::f16;

use super::{BandError, BandedMatrix, DenseMatrix};
use crate::scalar::{Precision, Scalar};

/// A banded matrix whose precision is only known at run time.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyBanded {
    Half(BandedMatrix<f16>),
    Single(BandedMatrix<f32>),
    Double(BandedMatrix<f64>),
}

impl AnyBanded {
    pub fn precision(&self) -> Precision {
        match self {
            AnyBanded::Half(_) => Precision::Half,
            AnyBanded::Single(_) => Precision::Single,
            AnyBanded::Double(_) => Precision::Double,
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> BandError {
    BandError::Parse { line, msg: msg.into() }
}

fn parse_count(tok: &str, line: usize, what: &str) -> Result<usize, BandError> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("{what} `{tok}` is not a nonnegative integer")))
}

fn parse_values(text: &str, line: usize, expected: usize) -> Result<Vec<f64>, BandError> {
    let vals = text
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| parse_err(line, format!("`{t}` is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if vals.len() != expected {
        return Err(parse_err(
            line,
            format!("expected {expected} values, found {}", vals.len()),
        ));
    }
    Ok(vals)
}

/// Non-blank lines with their 1-based line numbers.
fn numbered_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), BandError>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(BandError::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

pub fn read_bnd<R: BufRead>(reader: R) -> Result<AnyBanded, BandError> {
    let mut lines = numbered_lines(reader);
    let (hline, header) = lines.next().transpose()?.ok_or_else(|| parse_err(1, "empty file"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 4 {
        return Err(parse_err(hline, "header must be `n bw tw precision`"));
    }
    let n = parse_count(toks[0], hline, "n")?;
    let bw = parse_count(toks[1], hline, "bw")?;
    let tw = parse_count(toks[2], hline, "tw")?;
    let precision: Precision = toks[3].parse().map_err(|e| parse_err(hline, format!("{e}")))?;
    if bw == 0 || tw == 0 {
        return Err(parse_err(hline, "bw and tw must be at least 1"));
    }
    let ld = bw + 2 * tw + 1;
    let mut data = Vec::with_capacity(n * ld);
    let mut last_line = hline;
    for col in 0..n {
        let (ln, text) = lines
            .next()
            .transpose()?
            .ok_or_else(|| parse_err(last_line + 1, format!("missing storage column {col}")))?;
        data.extend(parse_values(&text, ln, ld)?);
        last_line = ln;
    }
    if let Some(extra) = lines.next() {
        let (ln, _) = extra?;
        return Err(parse_err(ln, "trailing data after the last storage column"));
    }
    let wrap = |e: BandError| match e {
        BandError::BadParameter(msg) => parse_err(hline, msg),
        other => other,
    };
    Ok(match precision {
        Precision::Half => AnyBanded::Half(
            BandedMatrix::from_storage(n, bw, tw, data.into_iter().map(f16::from_f64).collect()).map_err(wrap)?,
        ),
        Precision::Single => AnyBanded::Single(
            BandedMatrix::from_storage(n, bw, tw, data.into_iter().map(|v| v as f32).collect()).map_err(wrap)?,
        ),
        Precision::Double => AnyBanded::Double(BandedMatrix::from_storage(n, bw, tw, data).map_err(wrap)?),
    })
}

pub fn write_bnd<T: Scalar, W: Write>(b: &BandedMatrix<T>, mut w: W) -> Result<(), BandError> {
    writeln!(w, "{} {} {} {}", b.n(), b.bw(), b.tw_scratch(), T::PRECISION)?;
    for j in 0..b.n() {
        let line: Vec<String> = b.column(j).iter().map(|v| v.to_f64().to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_mtx<R: BufRead>(reader: R) -> Result<DenseMatrix<f64>, BandError> {
    let mut lines = numbered_lines(reader);
    let (hline, header) = lines.next().transpose()?.ok_or_else(|| parse_err(1, "empty file"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(parse_err(hline, "header must be `n n`"));
    }
    let rows = parse_count(toks[0], hline, "rows")?;
    let cols = parse_count(toks[1], hline, "cols")?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut last_line = hline;
    for r in 0..rows {
        let (ln, text) = lines
            .next()
            .transpose()?
            .ok_or_else(|| parse_err(last_line + 1, format!("missing row {r}")))?;
        data.extend(parse_values(&text, ln, cols)?);
        last_line = ln;
    }
    if let Some(extra) = lines.next() {
        let (ln, _) = extra?;
        return Err(parse_err(ln, "trailing data after the last row"));
    }
    DenseMatrix::from_row_major(rows, cols, data)
}

pub fn write_mtx<T: Scalar, W: Write>(m: &DenseMatrix<T>, mut w: W) -> Result<(), BandError> {
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| v.to_f64().to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}
