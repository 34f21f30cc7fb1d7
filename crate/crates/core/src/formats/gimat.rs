//! GIMAT v1: a text matrix.
//!
//! ```text
//! GIMAT v1
//! <rows> <cols>
//! <row 0 values ...>
//! ...
//! ```
//!
//! Values are written in scientific notation with 17 significant digits,
//! which round-trips every finite binary64 exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{utf8, Cursor};
use crate::error::{Error, Result};
use crate::linalg::Mat;

pub(crate) const MAGIC: &str = "GIMAT v1";

pub fn format_gimat(m: &Mat) -> String {
    let mut s = String::with_capacity(24 * m.data().len() + 32);
    push_gimat(&mut s, m);
    s
}

pub(crate) fn push_gimat(s: &mut String, m: &Mat) {
    let _ = writeln!(s, "{MAGIC}\n{} {}", m.rows(), m.cols());
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{v:.16e}");
        }
        s.push('\n');
    }
}

fn parse_dim(c: &mut Cursor, what: &str) -> Result<usize> {
    let (at, tok) = c.token().ok_or_else(|| Error::format(c.pos(), format!("missing {what}")))?;
    match tok.parse::<usize>() {
        Ok(0) => Err(Error::format(at, format!("{what} must be positive"))),
        Ok(n) => Ok(n),
        Err(_) => Err(Error::format(at, format!("{what} `{tok}` is not a count"))),
    }
}

/// Reads one matrix starting at the magic line. `standalone` decides
/// whether surplus values are a count mismatch or left for the caller.
pub(crate) fn take_gimat(c: &mut Cursor, standalone: bool) -> Result<Mat> {
    c.expect_line(MAGIC)?;
    let rows = parse_dim(c, "row count")?;
    let cols = parse_dim(c, "column count")?;
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Size(format!("{rows}x{cols} matrix is too large")))?;
    let mut data = Vec::with_capacity(expected.min(1 << 24));
    for k in 0..expected {
        let Some((at, tok)) = c.token() else {
            return Err(Error::Dimension(format!("{rows}x{cols} matrix needs {expected} values, found {k}")));
        };
        let v: f64 = tok.parse().map_err(|_| Error::format(at, format!("`{tok}` is not a number")))?;
        if !v.is_finite() {
            return Err(Error::format(at, format!("non-finite value `{tok}`")));
        }
        data.push(v);
    }
    if standalone {
        let mut extra = 0;
        while c.token().is_some() {
            extra += 1;
        }
        if extra > 0 {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {expected} values, found {}",
                expected + extra
            )));
        }
    }
    Mat::new(rows, cols, data)
}

pub fn parse_gimat(bytes: &[u8]) -> Result<Mat> {
    take_gimat(&mut Cursor::new(utf8(bytes)?), true)
}

pub fn read_gimat(path: impl AsRef<Path>) -> Result<Mat> {
    parse_gimat(&std::fs::read(path)?)
}

pub fn write_gimat(m: &Mat, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_gimat(m))?;
    Ok(())
}
