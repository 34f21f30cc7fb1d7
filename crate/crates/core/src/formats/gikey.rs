//! GIKEY v1: a complete key bundle as text.
//!
//! ```text
//! GIKEY v1
//! variant: 2
//! seed: 7
//! L:
//! GIMAT v1
//! ...
//! R:
//! GIMAT v1
//! ...
//! P1: 3 0 2 1
//! P2: ...
//! ```
//!
//! Permutation indices are 0-based columns, one per row.

use std::fmt::Write as _;
use std::path::Path;

use super::gimat::{push_gimat, take_gimat};
use super::{utf8, Cursor};
use crate::error::{Error, Result};
use crate::keys::{KeyBundle, PermutationVec, Variant};

const MAGIC: &str = "GIKEY v1";

pub fn format_gikey(key: &KeyBundle) -> String {
    let mut s = format!("{MAGIC}\nvariant: {}\nseed: {}\nL:\n", key.variant(), key.seed());
    push_gimat(&mut s, key.l());
    s.push_str("R:\n");
    push_gimat(&mut s, key.r());
    for (name, p) in [("P1", key.p1()), ("P2", key.p2())] {
        let _ = write!(s, "{name}:");
        for j in p.as_slice() {
            let _ = write!(s, " {j}");
        }
        s.push('\n');
    }
    s
}

/// Next line, which must read `<name>: <value>`. Returns the value's offset and text.
fn field<'a>(c: &mut Cursor<'a>, name: &str) -> Result<(usize, &'a str)> {
    let (at, line) = c.line().ok_or_else(|| Error::format(c.pos(), format!("missing `{name}:` line")))?;
    match line.split_once(':') {
        Some((k, v)) if k.trim() == name => {
            let lead = v.len() - v.trim_start().len();
            Ok((at + k.len() + 1 + lead, v.trim()))
        }
        _ => Err(Error::format(at, format!("expected `{name}:`, found `{line}`"))),
    }
}

fn permutation(c: &mut Cursor, name: &str) -> Result<PermutationVec> {
    let (at, text) = field(c, name)?;
    let mut pi = Vec::new();
    let mut inner = Cursor::new(text);
    while let Some((off, tok)) = inner.token() {
        let j = tok
            .parse::<usize>()
            .map_err(|_| Error::format(at + off, format!("{name} index `{tok}` is not a count")))?;
        pi.push(j);
    }
    PermutationVec::new(pi).map_err(|e| match e {
        Error::Invariant(msg) => Error::Invariant(format!("{name}: {msg}")),
        other => other,
    })
}

pub fn parse_gikey(bytes: &[u8]) -> Result<KeyBundle> {
    let mut c = Cursor::new(utf8(bytes)?);
    c.expect_line(MAGIC)?;
    let (at, v) = field(&mut c, "variant")?;
    let v: i64 = v.parse().map_err(|_| Error::format(at, format!("variant `{v}` is not an integer")))?;
    let variant = Variant::try_from(v)?;
    let (at, s) = field(&mut c, "seed")?;
    let seed: u64 = s.parse().map_err(|_| Error::format(at, format!("seed `{s}` is not a u64")))?;
    expect_label(&mut c, "L")?;
    let l = take_gimat(&mut c, false)?;
    expect_label(&mut c, "R")?;
    let r = take_gimat(&mut c, false)?;
    let p1 = permutation(&mut c, "P1")?;
    let p2 = permutation(&mut c, "P2")?;
    c.expect_end()?;
    KeyBundle::new(l, r, p1, p2, variant, seed)
}

fn expect_label(c: &mut Cursor, name: &str) -> Result<()> {
    let (at, rest) = field(c, name)?;
    if !rest.is_empty() {
        return Err(Error::format(at, format!("unexpected `{rest}` after `{name}:`")));
    }
    Ok(())
}

pub fn read_gikey(path: impl AsRef<Path>) -> Result<KeyBundle> {
    parse_gikey(&std::fs::read(path)?)
}

pub fn write_gikey(key: &KeyBundle, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_gikey(key))?;
    Ok(())
}
