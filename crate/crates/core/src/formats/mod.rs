//! On-disk formats: PGM images, GIMAT matrices and GIKEY key files.
//!
//! Every reader works on an in-memory buffer (`parse_*`) with a thin
//! path-based wrapper (`read_*`); writers mirror that with `format_*` or
//! `encode_*` and `write_*`.

mod gikey;
mod gimat;
mod pgm;

pub use gikey::{format_gikey, parse_gikey, read_gikey, write_gikey};
pub use gimat::{format_gimat, parse_gimat, read_gimat, write_gimat};
pub use pgm::{encode_pgm, parse_pgm, read_pgm, write_pgm};

use crate::error::{Error, Result};

/// Forward-only scanner over UTF-8 text that remembers byte offsets for
/// error messages.
pub(crate) struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    fn skip_whitespace(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Next whitespace-delimited token, crossing line breaks.
    pub(crate) fn token(&mut self) -> Option<(usize, &'a str)> {
        self.skip_whitespace();
        let rest = &self.text[self.pos..];
        if rest.is_empty() {
            return None;
        }
        let len = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let start = self.pos;
        self.pos += len;
        Some((start, &rest[..len]))
    }

    /// Next non-blank line with surrounding whitespace trimmed.
    pub(crate) fn line(&mut self) -> Option<(usize, &'a str)> {
        self.skip_whitespace();
        let rest = &self.text[self.pos..];
        if rest.is_empty() {
            return None;
        }
        let len = rest.find('\n').unwrap_or(rest.len());
        let start = self.pos;
        self.pos += len;
        Some((start, rest[..len].trim_end()))
    }

    /// Fails unless the next line is exactly `expected`.
    pub(crate) fn expect_line(&mut self, expected: &str) -> Result<()> {
        match self.line() {
            Some((_, l)) if l == expected => Ok(()),
            Some((at, l)) => Err(Error::format(at, format!("expected `{expected}`, found `{l}`"))),
            None => Err(Error::format(self.pos, format!("missing `{expected}`"))),
        }
    }

    /// Fails unless only whitespace remains.
    pub(crate) fn expect_end(&mut self) -> Result<()> {
        match self.token() {
            None => Ok(()),
            Some((at, t)) => Err(Error::format(at, format!("unexpected trailing `{t}`"))),
        }
    }
}

pub(crate) fn utf8(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| Error::format(e.valid_up_to(), "file is not valid UTF-8"))
}
