//! On-disk formats: number rendering, the `GOPP v1` instance file, and
//! serde helpers for matrices.
//!
//! Instance file layout (UTF-8, one record per line, fields separated by a
//! single space):
//!
//! ```text
//! GOPP v1
//! n m d sigma seed kappa
//! A           d lines of m numbers
//! O           n*d lines of d numbers (block i = lines i*d .. i*d+d)
//! W           n*d lines of m numbers
//! fnv1a64:<16 hex digits>
//! ```
//!
//! The checksum is FNV-1a (64 bit) over the canonical rendering of
//! `D = O A + sigma W`: each row's entries rendered with [`fmt_f64`], joined
//! by single spaces, each row terminated by `\n`. Loading recomputes `D` and
//! rejects the file when the checksum differs.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::linalg::{BlockStack, Matrix};
use crate::model::{Instance, ModelError, Planted, SignalSpec};

pub const INSTANCE_MAGIC: &str = "GOPP v1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("checksum mismatch: file says {stored}, data hashes to {computed}")]
    Checksum { stored: String, computed: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl FormatError {
    fn malformed(line: usize, msg: impl Into<String>) -> Self {
        FormatError::Malformed {
            line,
            msg: msg.into(),
        }
    }
}

/// Shortest decimal that round-trips to the same `f64` (at most 17
/// significant digits). Plain notation for magnitudes in `[1e-4, 1e15)`,
/// scientific otherwise; `inf`, `-inf` and `nan` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn push_rows(out: &mut String, m: &Matrix) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&fmt_f64(m[(i, j)]));
        }
        out.push('\n');
    }
}

/// Checksum line (without newline) for a data matrix.
pub fn data_checksum(dm: &Matrix) -> String {
    let mut canon = String::new();
    push_rows(&mut canon, dm);
    format!("fnv1a64:{:016x}", fnv1a64(canon.as_bytes()))
}

pub fn render_instance(inst: &Instance) -> String {
    let spec = inst.spec();
    let mut out = String::new();
    out.push_str(INSTANCE_MAGIC);
    out.push('\n');
    let _ = writeln!(
        out,
        "{} {} {} {} {} {}",
        spec.n,
        spec.m,
        spec.d,
        fmt_f64(inst.sigma()),
        spec.seed,
        fmt_f64(spec.kappa)
    );
    push_rows(&mut out, inst.signal());
    push_rows(&mut out, inst.planted().as_matrix());
    push_rows(&mut out, inst.noise());
    out.push_str(&data_checksum(inst.data()));
    out.push('\n');
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str), FormatError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(FormatError::malformed(
                self.last + 1,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    fn matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<Matrix, FormatError> {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let (ln, line) = self.next(what)?;
            let mut count = 0;
            for (j, tok) in line.split_whitespace().enumerate() {
                if j >= cols {
                    return Err(FormatError::malformed(
                        ln,
                        format!("{what} row has more than {cols} entries"),
                    ));
                }
                let v: f64 = tok
                    .parse()
                    .map_err(|_| FormatError::malformed(ln, format!("bad number `{tok}` in {what}")))?;
                if !v.is_finite() {
                    return Err(FormatError::malformed(ln, format!("non-finite entry in {what}")));
                }
                m[(i, j)] = v;
                count += 1;
            }
            if count != cols {
                return Err(FormatError::malformed(
                    ln,
                    format!("{what} row has {count} entries, expected {cols}"),
                ));
            }
        }
        Ok(m)
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, name: &str) -> Result<T, FormatError> {
    let tok = tok.ok_or_else(|| FormatError::malformed(line, format!("header is missing `{name}`")))?;
    tok.parse()
        .map_err(|_| FormatError::malformed(line, format!("header field `{name}` has bad value `{tok}`")))
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (ln, magic) = lines.next("the `GOPP v1` magic line")?;
    if magic.trim_end() != INSTANCE_MAGIC {
        return Err(FormatError::malformed(ln, format!("expected `{INSTANCE_MAGIC}`, found `{magic}`")));
    }
    let (ln, header) = lines.next("the header line")?;
    let mut toks = header.split_whitespace();
    let n: usize = field(toks.next(), ln, "n")?;
    let m: usize = field(toks.next(), ln, "m")?;
    let d: usize = field(toks.next(), ln, "d")?;
    let sigma: f64 = field(toks.next(), ln, "sigma")?;
    let seed: u64 = field(toks.next(), ln, "seed")?;
    let kappa: f64 = field(toks.next(), ln, "kappa")?;
    if toks.next().is_some() {
        return Err(FormatError::malformed(ln, "header has more than 6 fields"));
    }
    let mut spec = SignalSpec::new(n, m, d, kappa, seed);
    spec.validate()
        .map_err(|e| FormatError::malformed(ln, e.to_string()))?;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(FormatError::malformed(ln, format!("sigma must be >= 0, got {sigma}")));
    }

    let a = lines.matrix(d, m, "A")?;
    let o = lines.matrix(n * d, d, "O")?;
    let w = lines.matrix(n * d, m, "W")?;
    let (ln, sum_line) = lines.next("the checksum line")?;
    let stored = sum_line.trim_end();
    if !stored.starts_with("fnv1a64:") {
        return Err(FormatError::malformed(ln, "expected `fnv1a64:<hex>` checksum line"));
    }
    for (i, rest) in lines.inner.by_ref() {
        if !rest.trim().is_empty() {
            return Err(FormatError::malformed(i + 1, "trailing content after checksum"));
        }
    }

    let o = BlockStack::new(n, d, o).expect("shape read from header");
    if o.blocks().any(|b| b != Matrix::identity(d, d)) {
        spec.planted = Planted::RandomOrthogonal;
    }
    let inst = Instance::from_parts(spec, sigma, a, o, w)?;
    let computed = data_checksum(inst.data());
    if computed != stored {
        return Err(FormatError::Checksum {
            stored: stored.to_string(),
            computed,
        });
    }
    Ok(inst)
}

pub fn write_instance(path: &Path, inst: &Instance) -> Result<(), FormatError> {
    std::fs::write(path, render_instance(inst)).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_instance(path: &Path) -> Result<Instance, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text)
}

/// Matrix as a list of rows.
pub mod serde_matrix {
    use super::Matrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn from_rows<E: serde::de::Error>(rows: Vec<Vec<f64>>) -> Result<Matrix, E> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(E::custom("ragged matrix rows"));
        }
        Ok(Matrix::from_row_iterator(r, c, rows.into_iter().flatten()))
    }

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        from_rows(Vec::<Vec<f64>>::deserialize(d)?)
    }
}

/// A list of matrices, each as a list of rows.
pub mod serde_blocks {
    use super::{serde_matrix, Matrix};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(blocks: &[Matrix], s: S) -> Result<S::Ok, S::Error> {
        blocks
            .iter()
            .map(serde_matrix::to_rows)
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Matrix>, D::Error> {
        Vec::<Vec<Vec<f64>>>::deserialize(d)?
            .into_iter()
            .map(serde_matrix::from_rows)
            .collect()
    }
}

/// `f64` that may be non-finite: JSON numbers when finite, otherwise the
/// strings `"inf"`, `"-inf"`, `"nan"`.
pub mod serde_extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::fmt_f64(*x))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => t
                .parse()
                .map_err(|_| serde::de::Error::custom(format!("bad number `{t}`"))),
        }
    }
}
