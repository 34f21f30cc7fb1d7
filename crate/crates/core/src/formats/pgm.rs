//! Netpbm graymaps: P5 (binary) and P2 (ASCII) in, P5 at 8 bits out.

use std::path::Path;

use crate::error::{Error, Result};
use crate::forward::ImageGray;

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    /// Offset of the byte after the header.
    end: usize,
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    /// Skips whitespace and `#` comments running to end of line.
    fn skip_blank(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n' && b != b'\r') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn word(&mut self, what: &str) -> Result<(usize, &'a [u8])> {
        self.skip_blank();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start, format!("missing {what}")));
        }
        Ok((start, &self.bytes[start..self.pos]))
    }

    fn number(&mut self, what: &str) -> Result<(usize, u64)> {
        let (at, w) = self.word(what)?;
        let n = std::str::from_utf8(w)
            .ok()
            .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| Error::format(at, format!("{what} is not a decimal number")))?;
        Ok((at, n))
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut s = Scanner { bytes, pos: 0 };
    let binary = match s.word("magic number")? {
        (_, b"P5") => true,
        (_, b"P2") => false,
        (at, _) => return Err(Error::format(at, "expected magic number P5 or P2")),
    };
    let (at, width) = s.number("width")?;
    if width == 0 {
        return Err(Error::format(at, "width must be positive"));
    }
    let (at, height) = s.number("height")?;
    if height == 0 {
        return Err(Error::format(at, "height must be positive"));
    }
    let (at, maxval) = s.number("maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(Error::format(at, format!("maxval {maxval} outside 1..=65535")));
    }
    // Exactly one whitespace byte separates the header from binary samples.
    let end = match bytes.get(s.pos) {
        Some(b) if b.is_ascii_whitespace() => s.pos + 1,
        Some(_) => return Err(Error::format(s.pos, "expected whitespace after maxval")),
        None if binary => return Err(Error::format(s.pos, "missing whitespace after maxval")),
        None => s.pos,
    };
    let too_big = || Error::format(0, format!("{width}x{height} image is too large"));
    let width = usize::try_from(width).map_err(|_| too_big())?;
    let height = usize::try_from(height).map_err(|_| too_big())?;
    width.checked_mul(height).ok_or_else(too_big)?;
    Ok(Header { binary, width, height, maxval: maxval as u32, end })
}

pub fn parse_pgm(bytes: &[u8]) -> Result<ImageGray> {
    let h = parse_header(bytes)?;
    let n = h.width * h.height;
    let scale = f64::from(h.maxval);
    let out_of_range = |at: usize, v: u32| Error::format(at, format!("sample {v} exceeds maxval {}", h.maxval));
    let mut pixels = Vec::with_capacity(n.min(1 << 26));
    if h.binary {
        let wide = h.maxval > 255;
        let bps = if wide { 2 } else { 1 };
        let needed = n.checked_mul(bps).and_then(|b| b.checked_add(h.end));
        let available = bytes.len();
        if needed.is_none_or(|need| need > available) {
            return Err(Error::format(
                available,
                format!("pixel data truncated: need {n} samples of {bps} byte(s)"),
            ));
        }
        for k in 0..n {
            let at = h.end + k * bps;
            let v = if wide {
                u32::from(u16::from_be_bytes([bytes[at], bytes[at + 1]]))
            } else {
                u32::from(bytes[at])
            };
            if v > h.maxval {
                return Err(out_of_range(at, v));
            }
            pixels.push(f64::from(v) / scale);
        }
    } else {
        let mut s = Scanner { bytes, pos: h.end };
        for k in 0..n {
            let (at, v) = s.number(&format!("sample {k} of {n}"))?;
            let v = u32::try_from(v).unwrap_or(u32::MAX);
            if v > h.maxval {
                return Err(out_of_range(at, v));
            }
            pixels.push(f64::from(v) / scale);
        }
    }
    ImageGray::new(h.height, h.width, pixels)
}

/// Binary P5 at maxval 255. Pixels are scaled by 255 and rounded half away
/// from zero.
pub fn encode_pgm(img: &ImageGray) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|p| (p * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<ImageGray> {
    parse_pgm(&std::fs::read(path)?)
}

pub fn write_pgm(img: &ImageGray, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_pgm(img))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn format_message(r: Result<ImageGray>) -> (usize, String) {
        match r {
            Err(Error::Format { offset, message }) => (offset, message),
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn ascii_hand_decode() {
        let img = parse_pgm(b"P2 2 2 255 0 255 128 64").unwrap();
        assert_eq!(img.pixels(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
        assert_eq!((img.height(), img.width()), (2, 2));
    }

    #[test]
    fn comments_are_skipped() {
        let img = parse_pgm(b"P2\n# made by hand\n3 1 # width height\n10\n0 5 10\n").unwrap();
        assert_eq!(img.pixels(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn binary_eight_and_sixteen_bit() {
        let img = parse_pgm(b"P5 3 1 255\n\x00\x80\xff").unwrap();
        assert_eq!(img.pixels(), &[0.0, 128.0 / 255.0, 1.0]);
        let img = parse_pgm(b"P5 2 1 65535\n\x00\x01\xff\xff").unwrap();
        assert_eq!(img.pixels(), &[1.0 / 65535.0, 1.0]);
    }

    #[test]
    fn eight_bit_round_trip() {
        let raw: Vec<u8> = (0..=255).collect();
        let mut file = b"P5\n16 16\n255\n".to_vec();
        file.extend(&raw);
        let img = parse_pgm(&file).unwrap();
        let again = parse_pgm(&encode_pgm(&img)).unwrap();
        assert_eq!(img, again);
        assert_eq!(encode_pgm(&img), file);
    }

    #[test]
    fn writer_rounds_half_away_from_zero() {
        let img = ImageGray::new(1, 3, vec![0.5 / 255.0, 1.5 / 255.0, 0.49 / 255.0]).unwrap();
        assert_eq!(&encode_pgm(&img)[b"P5\n3 1\n255\n".len()..], &[1, 2, 0]);
    }

    #[test]
    fn truncated_headers_name_the_missing_token() {
        assert_eq!(format_message(parse_pgm(b"")), (0, "missing magic number".into()));
        assert_eq!(format_message(parse_pgm(b"P5\n")).1, "missing width");
        assert_eq!(format_message(parse_pgm(b"P5 4")).1, "missing height");
        assert_eq!(format_message(parse_pgm(b"P5 4 4 ")), (7, "missing maxval".into()));
    }

    #[test]
    fn malformed_bodies() {
        let (off, _) = format_message(parse_pgm(b"P6 1 1 255\n\x00"));
        assert_eq!(off, 0);
        format_message(parse_pgm(b"P5 2 2 255\n\x00\x00\x00"));
        format_message(parse_pgm(b"P2 2 1 10 3 11"));
        format_message(parse_pgm(b"P2 2 1 10 3"));
        format_message(parse_pgm(b"P2 2 1 10 3 x"));
        format_message(parse_pgm(b"P5 1 1 70000\n\x00"));
        format_message(parse_pgm(b"P5 1 1 0\n\x00"));
        format_message(parse_pgm(b"P5 0 1 255\n"));
        format_message(parse_pgm(b"P5 1 -1 255\n\x00"));
        format_message(parse_pgm(b"P5 1 1 255"));
        let (off, _) = format_message(parse_pgm(b"P5 1 1 255\n\x00\x00\x00\x05"[..11].as_ref()));
        assert_eq!(off, 11);
        format_message(parse_pgm(b"P5 1 1 200\n\xc9"));
    }
}
