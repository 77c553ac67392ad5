//! Positions-only sparse matrices in coordinate (COO) form.
//!
//! The on-disk format is line oriented text:
//!
//! ```text
//! nrows ncols nnz
//! row col
//! row col
//! ...
//! ```
//!
//! Entries are written sorted row-major, so equal patterns always produce
//! byte-identical files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Nonzero positions of a sparse matrix. No values are stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CooPattern {
    rows: Vec<usize>,
    cols: Vec<usize>,
    shape: (usize, usize),
}

impl CooPattern {
    /// Builds a pattern from parallel index lists, checking every invariant.
    pub fn new(rows: Vec<usize>, cols: Vec<usize>, shape: (usize, usize)) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(Error::invalid(format!(
                "row and column lists differ in length ({} vs {})",
                rows.len(),
                cols.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for (&r, &c) in rows.iter().zip(&cols) {
            if r >= shape.0 || c >= shape.1 {
                return Err(Error::invalid(format!(
                    "entry ({r}, {c}) outside {}x{} shape",
                    shape.0, shape.1
                )));
            }
            if !seen.insert((r, c)) {
                return Err(Error::invalid(format!("duplicate entry ({r}, {c})")));
            }
        }
        Ok(Self { rows, cols, shape })
    }

    /// Builds a pattern from positions, dropping duplicates and sorting row-major.
    pub fn from_positions<I>(shape: (usize, usize), positions: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let set: BTreeSet<(usize, usize)> = positions.into_iter().collect();
        if let Some(&(r, c)) = set.iter().find(|&&(r, c)| r >= shape.0 || c >= shape.1) {
            return Err(Error::invalid(format!(
                "entry ({r}, {c}) outside {}x{} shape",
                shape.0, shape.1
            )));
        }
        let (rows, cols) = set.into_iter().unzip();
        Ok(Self { rows, cols, shape })
    }

    /// Square n×n identity pattern.
    pub fn identity(n: usize) -> Self {
        Self {
            rows: (0..n).collect(),
            cols: (0..n).collect(),
            shape: (n, n),
        }
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    pub fn is_square(&self) -> bool {
        self.shape.0 == self.shape.1
    }

    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().copied().zip(self.cols.iter().copied())
    }

    /// Positions as a sorted set.
    pub fn position_set(&self) -> BTreeSet<(usize, usize)> {
        self.positions().collect()
    }

    /// Copy of this pattern with entries sorted row-major.
    pub fn sorted(&self) -> Self {
        let mut pairs: Vec<_> = self.positions().collect();
        pairs.sort_unstable();
        let (rows, cols) = pairs.into_iter().unzip();
        Self {
            rows,
            cols,
            shape: self.shape,
        }
    }

    /// Serializes to the text pattern format.
    pub fn to_text(&self) -> String {
        let sorted = self.sorted();
        let mut out = String::with_capacity(16 + 12 * self.nnz());
        let _ = writeln!(out, "{} {} {}", self.shape.0, self.shape.1, self.nnz());
        for (r, c) in sorted.positions() {
            let _ = writeln!(out, "{r} {c}");
        }
        out
    }

    /// Parses the text pattern format. `path` is used for error messages only.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| perr(1, "missing header line".into()))?;
        let fields = parse_fields(header).map_err(|m| perr(hline + 1, m))?;
        let [nrows, ncols, nnz] = fields[..] else {
            return Err(perr(
                hline + 1,
                format!("header needs 3 fields, found {}", fields.len()),
            ));
        };
        let mut rows = Vec::with_capacity(nnz);
        let mut cols = Vec::with_capacity(nnz);
        for (idx, line) in lines {
            let fields = parse_fields(line).map_err(|m| perr(idx + 1, m))?;
            let [r, c] = fields[..] else {
                return Err(perr(
                    idx + 1,
                    format!("entry needs 2 fields, found {}", fields.len()),
                ));
            };
            if r >= nrows || c >= ncols {
                return Err(perr(
                    idx + 1,
                    format!("entry ({r}, {c}) outside {nrows}x{ncols}"),
                ));
            }
            rows.push(r);
            cols.push(c);
        }
        if rows.len() != nnz {
            return Err(perr(
                hline + 1,
                format!("header declares {nnz} entries, found {}", rows.len()),
            ));
        }
        Self::new(rows, cols, (nrows, ncols)).map_err(|e| perr(0, e.to_string()))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn parse_fields(line: &str) -> std::result::Result<Vec<usize>, String> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| format!("expected a non-negative integer, found {tok:?}"))
        })
        .collect()
}
