//! MatrixMarket coordinate format (`real general`), for dumping assembled
//! operators and cross-checking them with external tools.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{csr_from_triplets, SparseMatrix};

pub fn write_matrix_market<W: Write>(a: &SparseMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads `coordinate real {general|symmetric}` matrices. Symmetric files
/// store the lower triangle and are expanded.
pub fn read_matrix_market(text: &str) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, banner) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let banner: Vec<String> = banner
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if banner.len() != 5 || banner[0] != "%%matrixmarket" || banner[1] != "matrix" {
        return Err(parse_err(1, "missing %%MatrixMarket matrix banner"));
    }
    if banner[2] != "coordinate" || banner[3] != "real" {
        return Err(parse_err(1, "only coordinate real matrices are supported"));
    }
    let symmetric = match banner[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut last_line = 1;
    for (k, line) in lines {
        let line_no = k + 1;
        last_line = line_no;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if toks.len() != 3 {
                    return Err(parse_err(line_no, "expected `rows cols nnz`"));
                }
                let p = |t: &str| {
                    t.parse::<usize>()
                        .map_err(|_| parse_err(line_no, format!("bad size `{t}`")))
                };
                let (r, c, nnz) = (p(toks[0])?, p(toks[1])?, p(toks[2])?);
                if symmetric && r != c {
                    return Err(parse_err(line_no, "symmetric matrix must be square"));
                }
                // entries are read lazily; cap preallocation against hostile headers
                triplets.reserve(nnz.min(1 << 20));
                size = Some((r, c, nnz));
            }
            Some((r, c, _)) => {
                if toks.len() != 3 {
                    return Err(parse_err(line_no, "expected `row col value`"));
                }
                let i: usize = toks[0]
                    .parse()
                    .map_err(|_| parse_err(line_no, "bad row index"))?;
                let j: usize = toks[1]
                    .parse()
                    .map_err(|_| parse_err(line_no, "bad column index"))?;
                let v: f64 = toks[2]
                    .parse()
                    .map_err(|_| parse_err(line_no, "bad value"))?;
                if i == 0 || j == 0 || i > r || j > c {
                    return Err(parse_err(line_no, format!("entry ({i}, {j}) out of range")));
                }
                if symmetric && j > i {
                    return Err(parse_err(line_no, "symmetric file has upper-triangle entry"));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (r, c, nnz) = size.ok_or_else(|| parse_err(last_line, "missing size line"))?;
    let stored = if symmetric {
        triplets.iter().filter(|(i, j, _)| i >= j).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(parse_err(
            last_line,
            format!("header announces {nnz} entries, found {stored}"),
        ));
    }
    csr_from_triplets(r, c, &triplets)
}
