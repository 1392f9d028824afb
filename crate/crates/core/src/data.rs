//! Count-data input: CSV datasets and comma-separated vectors.

use serde::Serialize;

use crate::distribution::CountVector;
use crate::error::{Error, Result};

/// Rows of nonnegative integer counts with named columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<CountVector>,
}

impl Dataset {
    pub fn new(columns: Vec<String>, rows: Vec<CountVector>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidParameter("dataset needs at least one column".into()));
        }
        if rows.is_empty() {
            return Err(Error::InvalidParameter("dataset has no rows".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != columns.len()) {
            return Err(Error::DimensionMismatch {
                expected: columns.len(),
                found: bad.len(),
            });
        }
        Ok(Self { columns, rows })
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn stats(&self) -> SufficientStats {
        SufficientStats::from_rows(self.dim(), &self.rows)
    }
}

/// Per-coordinate sums and the histogram of row totals; the likelihood
/// depends on the data only through these.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficientStats {
    pub n: usize,
    pub coord_sums: Vec<u64>,
    /// `(total, multiplicity)` sorted by total.
    pub totals: Vec<(u64, usize)>,
}

impl SufficientStats {
    pub fn from_rows(r: usize, rows: &[CountVector]) -> Self {
        let mut coord_sums = vec![0u64; r];
        let mut totals = std::collections::BTreeMap::<u64, usize>::new();
        for row in rows {
            for (acc, &x) in coord_sums.iter_mut().zip(row.as_slice()) {
                *acc = acc.saturating_add(x);
            }
            *totals.entry(row.total()).or_default() += 1;
        }
        Self {
            n: rows.len(),
            coord_sums,
            totals: totals.into_iter().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coord_sums.len()
    }

    pub fn means(&self) -> Vec<f64> {
        self.coord_sums.iter().map(|&s| s as f64 / self.n as f64).collect()
    }
}

/// Largest accepted count; keeps row totals exact in `u64` and `f64`.
pub const MAX_COUNT: u64 = 1 << 40;

/// Parses a CSV file with a header row and one observation per line.
///
/// Lines starting with `#` are skipped. Errors carry the 1-based line number.
pub fn parse_count_csv(text: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| Error::Csv {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    };
    let header = rdr.headers().map_err(csv_err)?.clone();
    let header_line = header.position().map_or(1, |p| p.line());
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Csv {
            line: header_line,
            message: "missing header row".into(),
        });
    }
    let columns: Vec<String> = header.iter().map(str::to_owned).collect();
    for (i, name) in columns.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::Csv {
                line: header_line,
                message: format!("column {} has an empty name", i + 1),
            });
        }
        if name.parse::<f64>().is_ok() {
            return Err(Error::Csv {
                line: header_line,
                message: format!("header expected, found numeric field {name:?}"),
            });
        }
    }

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != columns.len() {
            return Err(Error::Csv {
                line,
                message: format!("expected {} fields, found {}", columns.len(), rec.len()),
            });
        }
        let mut row = Vec::with_capacity(columns.len());
        let mut total = 0u64;
        for (field, name) in rec.iter().zip(&columns) {
            let x = parse_count(field).map_err(|m| Error::Csv {
                line,
                message: format!("column {name}: {m}"),
            })?;
            total = total.checked_add(x).filter(|&t| t <= MAX_COUNT).ok_or_else(|| Error::Csv {
                line,
                message: format!("row total exceeds {MAX_COUNT}"),
            })?;
            row.push(x);
        }
        rows.push(CountVector::new(row));
    }
    if rows.is_empty() {
        return Err(Error::Csv {
            line: header_line,
            message: "no observations after header".into(),
        });
    }
    Dataset::new(columns, rows)
}

fn parse_count(field: &str) -> std::result::Result<u64, String> {
    if field.is_empty() {
        return Err("empty field".into());
    }
    if field.starts_with('-') {
        return Err(format!("negative count {field:?}"));
    }
    match field.parse::<u64>() {
        Ok(x) if x <= MAX_COUNT => Ok(x),
        Ok(_) => Err(format!("count {field} exceeds {MAX_COUNT}")),
        Err(_) => Err(format!("not a nonnegative integer: {field:?}")),
    }
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim)
}

/// `"3,0,2"` to a count vector.
pub fn parse_count_vector(text: &str) -> Result<CountVector> {
    if text.trim().is_empty() {
        return Err(Error::InvalidParameter("empty count vector".into()));
    }
    let coords = split_list(text)
        .map(|f| parse_count(f).map_err(Error::InvalidParameter))
        .collect::<Result<Vec<u64>>>()?;
    let total = coords.iter().try_fold(0u64, |acc, &x| acc.checked_add(x));
    if total.is_none_or(|t| t > MAX_COUNT) {
        return Err(Error::InvalidParameter(format!("total exceeds {MAX_COUNT}")));
    }
    Ok(CountVector::new(coords))
}

/// `"0.3, 0.4"` to finite reals.
pub fn parse_real_list(text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Err(Error::InvalidParameter("empty list".into()));
    }
    split_list(text)
        .map(|f| match f.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::InvalidParameter(format!("not a finite number: {f:?}"))),
        })
        .collect()
}
