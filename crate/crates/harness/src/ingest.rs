//! Real-pair ingestion: parse two-column numeric text, drop non-finite rows,
//! subsample to a cap, standardize.

use std::path::Path;

use bidd_core::dgp::{Direction, PairDataset};
use bidd_core::numerics::Rng;

use crate::error::{Error, Result};

/// Default subsample cap for real pairs.
pub const DEFAULT_SUBSAMPLE_CAP: usize = 3000;

const MIN_USABLE_ROWS: usize = 50;

/// One ingested real-world pair.
#[derive(Debug, Clone)]
pub struct RealPair {
    pub name: String,
    /// Standardized columns, at most `cap` rows.
    pub data: PairDataset,
    pub truth: Option<Direction>,
    /// Rows dropped because a value was NaN or infinite.
    pub dropped_non_finite: usize,
    pub warnings: Vec<String>,
}

/// Parse a whitespace- or comma-separated two-column numeric file (optional
/// header), drop non-finite rows, subsample without replacement to `cap`, and
/// standardize.
///
/// Files with more than two columns are accepted with a warning; the first two
/// columns are used. Unparsable rows after the (optional) header, fewer than
/// two columns, or fewer than 50 usable rows are ingestion errors carrying the
/// offending line number.
pub fn ingest_pair_file(path: &Path, cap: usize, rng: &mut Rng) -> Result<RealPair> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Ingestion {
        path: display.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| display.clone());

    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut dropped_non_finite = 0usize;
    let mut warnings = Vec::new();
    let mut warned_extra_columns = false;
    let mut saw_data = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() > 2 && !warned_extra_columns {
            warnings.push(format!(
                "{display}: {} columns found, using the first two",
                fields.len()
            ));
            warned_extra_columns = true;
        }
        if fields.len() < 2 {
            if !saw_data {
                continue; // header line
            }
            return Err(Error::Ingestion {
                path: display,
                line: line_no,
                message: format!("expected two numeric columns, found {}", fields.len()),
            });
        }
        match (fields[0].parse::<f64>(), fields[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                saw_data = true;
                if x.is_finite() && y.is_finite() {
                    a.push(x);
                    b.push(y);
                } else {
                    dropped_non_finite += 1;
                }
            }
            _ if !saw_data => continue, // header line
            _ => {
                return Err(Error::Ingestion {
                    path: display,
                    line: line_no,
                    message: format!("unparsable numeric row: {line:?}"),
                });
            }
        }
    }

    if a.len() < MIN_USABLE_ROWS {
        return Err(Error::Ingestion {
            path: display,
            line: text.lines().count(),
            message: format!("only {} usable rows (need {MIN_USABLE_ROWS})", a.len()),
        });
    }

    if a.len() > cap {
        let mut idx: Vec<usize> = (0..a.len()).collect();
        rng.shuffle(&mut idx);
        let mut keep: Vec<usize> = idx[..cap].to_vec();
        keep.sort_unstable();
        a = keep.iter().map(|&i| a[i]).collect();
        b = keep.iter().map(|&i| b[i]).collect();
    }

    let mut data = PairDataset::new(a, b, None).map_err(|e| Error::Ingestion {
        path: name.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    data.standardize().map_err(|e| Error::Ingestion {
        path: name.clone(),
        line: 0,
        message: format!("cannot standardize: {e}"),
    })?;

    Ok(RealPair {
        name,
        data,
        truth: None,
        dropped_non_finite,
        warnings,
    })
}
