//! CSV dataset ingestion and plot-ready table output.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::svm::LabeledDataset;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Skip the first non-comment row.
    pub has_header: bool,
    /// The last column holds an integer label.
    pub has_labels: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<f64>>,
}

impl Dataset {
    pub fn into_labeled(self) -> Result<LabeledDataset> {
        let labels = self
            .labels
            .ok_or_else(|| Error::Parse("dataset has no label column".into()))?;
        LabeledDataset::new(self.rows, labels)
    }
}

/// Reads one vector per row; lines starting with `#` are comments.
pub fn read_dataset_from<R: std::io::Read>(reader: R, opts: CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut fields: Vec<&str> = rec.iter().collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if opts.has_labels {
            let raw = fields
                .pop()
                .ok_or_else(|| Error::Parse(format!("row {line}: missing label")))?;
            let label: i64 = raw
                .parse()
                .map_err(|_| Error::Parse(format!("row {line}: label `{raw}` is not an integer")))?;
            labels.push(label as f64);
        }
        let row = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {line}: `{f}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.is_empty() {
            return Err(Error::Parse(format!("row {line}: no feature columns")));
        }
        if let Some(first) = rows.first() {
            let expected = Vec::len(first);
            if row.len() != expected {
                return Err(Error::Parse(format!(
                    "row {line}: expected {expected} columns, found {}",
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("dataset has no rows".into()));
    }
    Ok(Dataset {
        rows,
        labels: opts.has_labels.then_some(labels),
    })
}

pub fn read_dataset(path: &Path, opts: CsvOptions) -> Result<Dataset> {
    read_dataset_from(File::open(path)?, opts)
}

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `# key: value` comment lines.
pub fn write_comments<W: Write + ?Sized>(w: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

pub fn write_matrix_csv<W: Write + ?Sized>(w: &mut W, k: &DMatrix<f64>, comments: &[String]) -> Result<()> {
    write_comments(w, comments)?;
    for i in 0..k.nrows() {
        let row: Vec<String> = (0..k.ncols()).map(|j| fmt_f64(k[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_table_csv<W: Write + ?Sized>(
    w: &mut W,
    header: &[&str],
    rows: &[Vec<String>],
    comments: &[String],
) -> Result<()> {
    write_comments(w, comments)?;
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    Ok(())
}

/// Reads a numeric matrix written by `write_matrix_csv`.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let ds = read_dataset(path, CsvOptions::default())?;
    let n = ds.rows.len();
    let m = ds.rows[0].len();
    Ok(DMatrix::from_row_iterator(n, m, ds.rows.into_iter().flatten()))
}
