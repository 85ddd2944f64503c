//! Matrix Market reader and writer for the real matrices an instance carries.
//!
//! Supports the `coordinate` and `array` formats with `general` or
//! `symmetric` storage. Symmetric files hold the lower triangle only and are
//! mirrored on read. Values are written with 17 significant digits so a
//! write/read round trip reproduces every `f64` bit-for-bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ipmqp_core::MatrixStore;

use crate::CliError;

/// Parsed matrix data: dimensions plus triplets (already mirrored for
/// symmetric files).
#[derive(Debug, Clone)]
pub struct MmMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl MmMatrix {
    pub fn into_store(self) -> MatrixStore {
        MatrixStore::from_triplets_auto(self.nrows, self.ncols, &self.triplets)
    }
}

/// Writes `m` in coordinate format, lower triangle only when `symmetric`.
pub fn write_matrix(path: &Path, m: &MatrixStore, symmetric: bool) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let kind = if symmetric { "symmetric" } else { "general" };
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    match m {
        MatrixStore::Dense(d) => {
            for j in 0..d.ncols() {
                for i in 0..d.nrows() {
                    let v = d[(i, j)];
                    if v != 0.0 && (!symmetric || i >= j) {
                        entries.push((i, j, v));
                    }
                }
            }
        }
        MatrixStore::Sparse(s) => {
            for (i, j, v) in s.iter() {
                if !symmetric || i >= j {
                    entries.push((i, j, v));
                }
            }
        }
    }
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
        writeln!(w, "{} {} {}", m.nrows(), m.ncols(), entries.len())?;
        for (i, j, v) in &entries {
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
        w.flush()
    };
    emit().map_err(|e| CliError::io(path, e))
}

struct Header {
    coordinate: bool,
    symmetric: bool,
}

fn parse_header(path: &Path, line: &str) -> Result<Header, CliError> {
    let err = |msg: &str| CliError::Parse { path: path.to_path_buf(), line: 1, msg: msg.into() };
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "%%MatrixMarket" {
        return Err(err("expected '%%MatrixMarket matrix <format> real <symmetry>'"));
    }
    if fields[1] != "matrix" {
        return Err(err("second header field must be 'matrix'"));
    }
    let coordinate = match fields[2] {
        "coordinate" => true,
        "array" => false,
        other => return Err(err(&format!("unsupported format '{other}'"))),
    };
    if fields[3] != "real" {
        return Err(err(&format!("unsupported field type '{}'", fields[3])));
    }
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(err(&format!("unsupported symmetry '{other}'"))),
    };
    Ok(Header { coordinate, symmetric })
}

/// Reads a Matrix Market file; parse failures carry the 1-based line number.
pub fn read_matrix(path: &Path) -> Result<MmMatrix, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let reader = BufReader::new(file);
    let parse_err = |line: usize, msg: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut lines = reader.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let first = first.map_err(|e| CliError::io(path, e))?;
    let header = parse_header(path, &first)?;

    // Dimensions: first non-comment, non-blank line.
    let mut dims: Option<(usize, Vec<usize>)> = None;
    for (idx, line) in &mut lines {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let nums: Result<Vec<usize>, _> =
            trimmed.split_whitespace().map(|t| t.parse::<usize>()).collect();
        let nums = nums.map_err(|e| parse_err(idx + 1, format!("bad size line: {e}")))?;
        dims = Some((idx + 1, nums));
        break;
    }
    let (dims_line, nums) = dims.ok_or_else(|| parse_err(1, "missing size line".into()))?;

    if header.coordinate {
        if nums.len() != 3 {
            return Err(parse_err(dims_line, "coordinate size line needs 'rows cols nnz'".into()));
        }
        let (nrows, ncols, nnz) = (nums[0], nums[1], nums[2]);
        if header.symmetric && nrows != ncols {
            return Err(parse_err(dims_line, "symmetric matrix must be square".into()));
        }
        let mut triplets = Vec::with_capacity(nnz * if header.symmetric { 2 } else { 1 });
        let mut seen = 0usize;
        for (idx, line) in &mut lines {
            let line = line.map_err(|e| CliError::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let lineno = idx + 1;
            let i: usize = parts
                .next()
                .ok_or_else(|| parse_err(lineno, "missing row index".into()))?
                .parse()
                .map_err(|e| parse_err(lineno, format!("bad row index: {e}")))?;
            let j: usize = parts
                .next()
                .ok_or_else(|| parse_err(lineno, "missing column index".into()))?
                .parse()
                .map_err(|e| parse_err(lineno, format!("bad column index: {e}")))?;
            let v: f64 = parts
                .next()
                .ok_or_else(|| parse_err(lineno, "missing value".into()))?
                .parse()
                .map_err(|e| parse_err(lineno, format!("bad value: {e}")))?;
            if parts.next().is_some() {
                return Err(parse_err(lineno, "trailing tokens".into()));
            }
            if i == 0 || j == 0 || i > nrows || j > ncols {
                return Err(parse_err(lineno, format!("index ({i}, {j}) out of bounds")));
            }
            if header.symmetric && j > i {
                return Err(parse_err(
                    lineno,
                    "symmetric storage holds the lower triangle (need row >= column)".into(),
                ));
            }
            triplets.push((i - 1, j - 1, v));
            if header.symmetric && i != j {
                triplets.push((j - 1, i - 1, v));
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(dims_line, format!("expected {nnz} entries, found {seen}")));
        }
        Ok(MmMatrix { nrows, ncols, triplets })
    } else {
        if nums.len() != 2 {
            return Err(parse_err(dims_line, "array size line needs 'rows cols'".into()));
        }
        let (nrows, ncols) = (nums[0], nums[1]);
        if header.symmetric && nrows != ncols {
            return Err(parse_err(dims_line, "symmetric matrix must be square".into()));
        }
        let expected = if header.symmetric {
            nrows * (nrows + 1) / 2
        } else {
            nrows * ncols
        };
        let mut values = Vec::with_capacity(expected);
        for (idx, line) in &mut lines {
            let line = line.map_err(|e| CliError::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            for tok in trimmed.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|e| parse_err(idx + 1, format!("bad value '{tok}': {e}")))?;
                values.push(v);
            }
        }
        if values.len() != expected {
            return Err(parse_err(
                dims_line,
                format!("expected {expected} array values, found {}", values.len()),
            ));
        }
        // Column-major (lower triangle per column when symmetric).
        let mut triplets = Vec::new();
        let mut k = 0usize;
        for j in 0..ncols {
            let start_row = if header.symmetric { j } else { 0 };
            for i in start_row..nrows {
                let v = values[k];
                k += 1;
                if v == 0.0 {
                    continue;
                }
                triplets.push((i, j, v));
                if header.symmetric && i != j {
                    triplets.push((j, i, v));
                }
            }
        }
        Ok(MmMatrix { nrows, ncols, triplets })
    }
}
