use std::path::Path;

use sha2::{Digest, Sha256};

use crate::data::{Cell, Dataset, Prepared};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Column holding the transformed target in prepared fold files.
pub const PREPARED_TARGET_COLUMN: &str = "__target__";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Shortest text that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Writes through a sibling temporary file so readers never see a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn csv_text(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("cannot encode CSV: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::InvalidArgument(format!("cannot encode CSV: {e}")))
}

/// Matrix with named columns as CSV bytes.
pub fn matrix_csv(names: &[String], x: &Matrix) -> Result<Vec<u8>> {
    x.check_width(names.len())?;
    csv_text(names, x.rows_iter().map(|r| r.iter().map(|&v| fmt_f64(v)).collect()))
}

pub fn prepared_csv(p: &Prepared) -> Result<Vec<u8>> {
    let mut header = p.feature_names.clone();
    header.push(PREPARED_TARGET_COLUMN.to_string());
    let rows = p.x.rows_iter().zip(&p.y).map(|(r, &y)| {
        let mut out: Vec<String> = r.iter().map(|&v| fmt_f64(v)).collect();
        out.push(fmt_f64(y));
        out
    });
    csv_text(&header, rows)
}

pub fn read_prepared_csv(path: &Path) -> Result<Prepared> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.last().map(String::as_str) != Some(PREPARED_TARGET_COLUMN) {
        return Err(Error::Schema(format!("{}: last column must be `{PREPARED_TARGET_COLUMN}`", path.display())));
    }
    let d = header.len() - 1;
    let mut data = Vec::new();
    let mut y = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Schema(format!("{}: non-numeric value `{field}`", path.display())))?;
            if j == d {
                y.push(v);
            } else {
                data.push(v);
            }
        }
    }
    Ok(Prepared {
        feature_names: header[..d].to_vec(),
        x: Matrix::from_vec(y.len(), d, data)?,
        y,
        clamped_targets: 0,
    })
}

/// Raw dataset as CSV with the target in a final column named `target`.
pub fn dataset_csv(ds: &Dataset, target: &str) -> Result<Vec<u8>> {
    let mut header = ds.features.names.clone();
    header.push(target.to_string());
    let rows = ds.features.rows.iter().zip(&ds.target).map(|(row, &y)| {
        let mut out: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Numeric(v) => fmt_f64(*v),
                Cell::Category(s) => s.clone(),
                Cell::Missing => String::new(),
            })
            .collect();
        out.push(if y.is_nan() { String::new() } else { fmt_f64(y) });
        out
    });
    csv_text(&header, rows)
}

/// Schema TOML matching [`dataset_csv`] output.
pub fn dataset_schema_toml(ds: &Dataset, target: &str) -> String {
    let mut s = format!("target = \"{target}\"\n\n[columns]\n");
    for (n, k) in ds.features.names.iter().zip(&ds.features.kinds) {
        let role = match k {
            crate::data::ColumnKind::Numeric => "numeric",
            crate::data::ColumnKind::Categorical => "categorical",
        };
        s.push_str(&format!("\"{n}\" = \"{role}\"\n"));
    }
    s.push_str(&format!("\"{target}\" = \"numeric\"\n"));
    s
}
