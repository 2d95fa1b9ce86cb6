//! Frame file serialization and config fingerprinting.
//!
//! The frame format is line oriented: a header, then either the recipe
//! (`rows:` and `perm:` lines) for frames built from a base matrix, or a
//! literal `matrix` section for frames that only exist as entries. Floats are
//! printed in shortest round-trip form, so write/read cycles are bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::erasure::BlockModel;
use crate::frames::{construct_frame, Base, Frame, FrameSpec};
use crate::linalg::CMat;
use crate::{Error, Result};

/// First 16 hex chars of the SHA-256 of the value's JSON form; used to stamp
/// artifacts and to pair checkpoints with their originating configuration.
pub fn fingerprint<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("fingerprint serialization cannot fail");
    let digest = Sha256::digest(json.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in &digest[..8] {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Parsed frame file: always the header geometry, then either a spec recipe
/// or explicit matrix entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFile {
    pub base: Base,
    pub n: usize,
    pub m: usize,
    pub nb: usize,
    pub rows: Option<Vec<usize>>,
    pub perm: Option<Vec<usize>>,
    pub matrix: Option<CMat>,
}

fn format_complex(z: Complex64) -> String {
    // Sign-bit test so -0.0 lands in the negative branch and never prints +-0.
    if z.im.is_sign_negative() {
        format!("{}-{}j", z.re, -z.im)
    } else {
        format!("{}+{}j", z.re, z.im)
    }
}

fn parse_complex(s: &str) -> Result<Complex64> {
    let body = s
        .trim()
        .strip_suffix('j')
        .ok_or_else(|| Error::Parse(format!("complex entry {s:?} does not end in j")))?;
    // The split sign is the last +/- not directly after an exponent marker.
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'e' && bytes[i - 1] != b'E' {
            split = Some(i);
            break;
        }
    }
    let i = split.ok_or_else(|| Error::Parse(format!("complex entry {s:?} has no imaginary part")))?;
    let re: f64 = body[..i]
        .parse()
        .map_err(|_| Error::Parse(format!("bad real part in {s:?}")))?;
    let im: f64 = match &body[i..i + 1] {
        "+" => body[i + 1..].parse(),
        _ => body[i..].parse(),
    }
    .map_err(|_| Error::Parse(format!("bad imaginary part in {s:?}")))?;
    Ok(Complex64::new(re, im))
}

/// Serialize a frame. Frames with a spec store the recipe; frames without
/// one store their entries, with the base tag a best-effort label.
pub fn frame_to_string(frame: &Frame) -> String {
    let mut out = String::new();
    match frame.spec() {
        Some(spec) => {
            let _ = writeln!(
                out,
                "frame v1 base={} N={} M={} NB={}",
                base_tag(spec.base),
                spec.n(),
                spec.m(),
                spec.blocks.num_blocks()
            );
            let _ = writeln!(out, "rows: {}", join(&spec.rows));
            let _ = writeln!(out, "perm: {}", join(&spec.perm));
        }
        None => {
            let entries = frame.entries();
            let all_real = (0..entries.nrows())
                .all(|i| (0..entries.ncols()).all(|j| entries[(i, j)].im == 0.0));
            let tag = if all_real { "hadamard" } else { "dft" };
            let _ = writeln!(
                out,
                "frame v1 base={} N={} M={} NB={}",
                tag,
                frame.n(),
                frame.m(),
                frame.blocks().num_blocks()
            );
            let _ = writeln!(out, "matrix");
            for i in 0..entries.nrows() {
                let line: Vec<String> =
                    (0..entries.ncols()).map(|j| format_complex(entries[(i, j)])).collect();
                let _ = writeln!(out, "{}", line.join(","));
            }
        }
    }
    out
}

pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    std::fs::write(path, frame_to_string(frame))?;
    Ok(())
}

fn base_tag(base: Base) -> &'static str {
    match base {
        Base::Dft => "dft",
        Base::Hadamard => "hadamard",
    }
}

fn join(values: &[usize]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad {what} entry {t:?}")))
        })
        .collect()
}

pub fn parse_frame_file(text: &str) -> Result<FrameFile> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty frame file".into()))?;
    let mut base = None;
    let mut n = None;
    let mut m = None;
    let mut nb = None;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("frame") || fields.next() != Some("v1") {
        return Err(Error::Parse("line 1: expected header `frame v1 ...`".into()));
    }
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line 1: bad header field {field:?}")))?;
        match key {
            "base" => {
                base = Some(match value {
                    "dft" => Base::Dft,
                    "hadamard" => Base::Hadamard,
                    other => return Err(Error::Parse(format!("line 1: unknown base {other:?}"))),
                })
            }
            "N" | "M" | "NB" => {
                let parsed: usize = value
                    .parse()
                    .map_err(|_| Error::Parse(format!("line 1: bad integer for {key}")))?;
                match key {
                    "N" => n = Some(parsed),
                    "M" => m = Some(parsed),
                    _ => nb = Some(parsed),
                }
            }
            other => return Err(Error::Parse(format!("line 1: unknown header key {other:?}"))),
        }
    }
    let (base, n, m, nb) = match (base, n, m, nb) {
        (Some(b), Some(n), Some(m), Some(nb)) => (b, n, m, nb),
        _ => return Err(Error::Parse("line 1: header must carry base, N, M and NB".into())),
    };
    if nb == 0 || n % nb != 0 {
        return Err(Error::Parse(format!("line 1: N={n} is not divisible into NB={nb} blocks")));
    }

    let mut rows = None;
    let mut perm = None;
    let mut matrix: Option<Vec<Vec<Complex64>>> = None;
    let mut in_matrix = false;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if in_matrix {
            let row: Result<Vec<Complex64>> = line.split(',').map(parse_complex).collect();
            let row = row.map_err(|e| Error::Parse(format!("line {lineno}: {e}")))?;
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "line {lineno}: matrix row has {} entries, expected {n}",
                    row.len()
                )));
            }
            matrix.as_mut().unwrap().push(row);
            continue;
        }
        if let Some(rest) = line.strip_prefix("rows:") {
            rows = Some(parse_usize_list(rest, "row").map_err(|e| Error::Parse(format!("line {lineno}: {e}")))?);
        } else if let Some(rest) = line.strip_prefix("perm:") {
            perm = Some(parse_usize_list(rest, "perm").map_err(|e| Error::Parse(format!("line {lineno}: {e}")))?);
        } else if line == "matrix" {
            in_matrix = true;
            matrix = Some(Vec::new());
        } else {
            return Err(Error::Parse(format!("line {lineno}: unexpected content {line:?}")));
        }
    }

    let matrix = match matrix {
        Some(rows_vec) => {
            if rows_vec.len() != m {
                return Err(Error::Parse(format!(
                    "matrix section has {} rows, header says M={m}",
                    rows_vec.len()
                )));
            }
            let mut mat = CMat::zeros(m, n);
            for (i, row) in rows_vec.iter().enumerate() {
                for (j, &z) in row.iter().enumerate() {
                    mat[(i, j)] = z;
                }
            }
            Some(mat)
        }
        None => None,
    };

    match (&rows, &perm, &matrix) {
        (Some(_), Some(_), None) | (None, None, Some(_)) => {}
        _ => {
            return Err(Error::Parse(
                "frame file needs either rows: and perm: lines or a matrix section, not a mix".into(),
            ))
        }
    }
    if let Some(r) = &rows {
        if r.len() != m {
            return Err(Error::Parse(format!("rows line has {} entries, header says M={m}", r.len())));
        }
    }
    if let Some(p) = &perm {
        if p.len() != n {
            return Err(Error::Parse(format!("perm line has {} entries, header says N={n}", p.len())));
        }
    }
    Ok(FrameFile { base, n, m, nb, rows, perm, matrix })
}

pub fn read_frame_file(path: &Path) -> Result<FrameFile> {
    let text = std::fs::read_to_string(path)?;
    parse_frame_file(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Materialize a frame from a parsed file. `blocks` overrides the erasure
/// geometry; by default the file's block count is used with all blocks
/// active (evaluators typically supply their own model).
pub fn frame_from_file(file: &FrameFile, blocks: Option<BlockModel>) -> Result<Frame> {
    let blocks = match blocks {
        Some(b) => {
            if b.total_columns() != file.n {
                return Err(Error::Validation(format!(
                    "block model spans {} columns but the frame has {}",
                    b.total_columns(),
                    file.n
                )));
            }
            b
        }
        None => BlockModel::new(file.nb, file.n / file.nb, file.nb)?,
    };
    match (&file.rows, &file.perm, &file.matrix) {
        (Some(rows), Some(perm), None) => {
            let spec = FrameSpec::new(file.base, rows.clone(), perm.clone(), blocks)?;
            construct_frame(&spec)
        }
        (None, None, Some(matrix)) => Frame::new(matrix.clone(), None, blocks),
        _ => Err(Error::Parse("frame file carries neither a recipe nor a matrix".into())),
    }
}
