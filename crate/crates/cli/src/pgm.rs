//! PGM (portable graymap) reader and writer, binary `P5` and ASCII `P2`.
//!
//! Headers may carry `#` comments anywhere between tokens. Only 8-bit files
//! (`maxval <= 255`) are accepted. Written values are rounded half away from
//! zero and clamped to `[0, 255]`, so integer-valued in-range grids
//! round-trip exactly.

use glad_core::Grid;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic number at byte 0: expected P2 or P5")]
    BadMagic,
    #[error("malformed header at byte {offset}: {what}")]
    Header { what: String, offset: usize },
    #[error("maxval {maxval} at byte {offset} exceeds 255")]
    MaxvalTooLarge { maxval: u64, offset: usize },
    #[error("truncated payload at byte {offset}: expected {expected} samples, found {found}")]
    Truncated {
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("sample {value} at byte {offset} exceeds maxval {maxval}")]
    SampleOutOfRange {
        value: u64,
        maxval: u64,
        offset: usize,
    },
}

struct Tokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_separators(&mut self) {
        while self.pos < self.data.len() {
            let b = self.data[self.pos];
            if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_number(&mut self, what: &str) -> Result<(u64, usize), PgmError> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(PgmError::Header {
                what: format!("expected {what}"),
                offset: start,
            });
        }
        let text = std::str::from_utf8(&self.data[start..self.pos]).expect("digits are ascii");
        let value = text.parse().map_err(|_| PgmError::Header {
            what: format!("{what} out of range"),
            offset: start,
        })?;
        Ok((value, start))
    }
}

pub fn parse_pgm(data: &[u8]) -> Result<Grid, PgmError> {
    if data.len() < 2 {
        return Err(PgmError::BadMagic);
    }
    let binary = match &data[..2] {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(PgmError::BadMagic),
    };
    let mut t = Tokens { data, pos: 2 };
    let (width, woff) = t.next_number("width")?;
    let (height, hoff) = t.next_number("height")?;
    if width == 0 || height == 0 {
        return Err(PgmError::Header {
            what: "zero dimension".into(),
            offset: if width == 0 { woff } else { hoff },
        });
    }
    let (maxval, moff) = t.next_number("maxval")?;
    if maxval == 0 {
        return Err(PgmError::Header {
            what: "zero maxval".into(),
            offset: moff,
        });
    }
    if maxval > 255 {
        return Err(PgmError::MaxvalTooLarge {
            maxval,
            offset: moff,
        });
    }
    let expected = (width * height) as usize;
    let mut samples = Vec::with_capacity(expected);
    if binary {
        // exactly one whitespace byte separates the header from the payload
        if t.pos >= data.len() || !data[t.pos].is_ascii_whitespace() {
            return Err(PgmError::Header {
                what: "expected whitespace before binary payload".into(),
                offset: t.pos,
            });
        }
        t.pos += 1;
        let available = data.len() - t.pos;
        if available < expected {
            return Err(PgmError::Truncated {
                expected,
                found: available,
                offset: data.len(),
            });
        }
        for (i, &b) in data[t.pos..t.pos + expected].iter().enumerate() {
            if b as u64 > maxval {
                return Err(PgmError::SampleOutOfRange {
                    value: b as u64,
                    maxval,
                    offset: t.pos + i,
                });
            }
            samples.push(b as f64);
        }
    } else {
        for i in 0..expected {
            t.skip_separators();
            if t.pos >= data.len() {
                return Err(PgmError::Truncated {
                    expected,
                    found: i,
                    offset: t.pos,
                });
            }
            let (value, offset) = t.next_number("sample")?;
            if value > maxval {
                return Err(PgmError::SampleOutOfRange {
                    value,
                    maxval,
                    offset,
                });
            }
            samples.push(value as f64);
        }
    }
    Ok(Grid::from_data(width as usize, height as usize, 1.0, samples)
        .expect("sample count matches the header"))
}

pub fn read_pgm(path: &Path) -> Result<Grid, PgmError> {
    let data = std::fs::read(path).map_err(|source| PgmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_pgm(&data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmMode {
    #[default]
    Binary,
    Ascii,
}

fn quantize(v: f64) -> u8 {
    // round half away from zero, then clamp
    v.round().clamp(0.0, 255.0) as u8
}

pub fn encode_pgm(grid: &Grid, mode: PgmMode) -> Vec<u8> {
    let mut out = Vec::new();
    match mode {
        PgmMode::Binary => {
            out.extend_from_slice(format!("P5\n{} {}\n255\n", grid.width(), grid.height()).as_bytes());
            out.extend(grid.data().iter().map(|&v| quantize(v)));
        }
        PgmMode::Ascii => {
            out.extend_from_slice(format!("P2\n{} {}\n255\n", grid.width(), grid.height()).as_bytes());
            // keep lines comfortably under the conventional 70-char limit
            for chunk in grid.data().chunks(16) {
                let line: Vec<String> = chunk.iter().map(|&v| quantize(v).to_string()).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    out
}

pub fn write_pgm(grid: &Grid, path: &Path, mode: PgmMode) -> Result<(), PgmError> {
    let bytes = encode_pgm(grid, mode);
    let mut file = std::fs::File::create(path).map_err(|source| PgmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(&bytes).map_err(|source| PgmError::Io {
        path: path.display().to_string(),
        source,
    })
}
