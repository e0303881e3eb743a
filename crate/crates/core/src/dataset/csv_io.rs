use std::io::{Read, Write};

use super::{Dimension, Subject, VasDataSet};
use crate::error::{ForgeError, Result};

/// Parses a score matrix. The header row holds dimension ids after a leading
/// subject-column cell; each following row starts with the subject id.
/// Empty cells (or `NA`) are missing values.
pub fn ingest_csv<R: Read>(raw: R) -> Result<VasDataSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(raw);
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(ForgeError::Empty("csv input has no header row".into())),
    };
    let dimensions: Vec<Dimension> = header.iter().skip(1).map(Dimension::bare).collect();
    let width = header.len();

    let mut subjects = Vec::new();
    let mut values = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(ForgeError::RaggedRow {
                row,
                expected: width,
                found: record.len(),
            });
        }
        let id = record[0].to_string();
        let mut scores = Vec::with_capacity(dimensions.len());
        for (k, cell) in record.iter().skip(1).enumerate() {
            scores.push(parse_cell(cell, row, &dimensions[k].id)?);
        }
        subjects.push(Subject {
            label: id.clone(),
            id,
        });
        values.push(scores);
    }
    VasDataSet::new(subjects, dimensions, values)
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<Option<f64>> {
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    let v: f64 = cell.parse().map_err(|_| ForgeError::Cell {
        row,
        column: column.to_string(),
        message: format!("{cell:?} is not a number"),
    })?;
    if !(0.0..=1.0).contains(&v) {
        return Err(ForgeError::Cell {
            row,
            column: column.to_string(),
            message: format!("value {v} outside [0, 1]"),
        });
    }
    Ok(Some(v))
}

impl VasDataSet {
    /// Writes the matrix in the same layout `ingest_csv` reads.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["subject".to_string()];
        header.extend(self.dimensions().iter().map(|d| d.id.clone()));
        w.write_record(&header)?;
        for (subject, row) in self.subjects().iter().zip(self.rows()) {
            let mut rec = vec![subject.id.clone()];
            rec.extend(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv writer emits utf-8"))
    }
}

/// Reads dimension metadata: columns `id,label,left,right` with a header row.
pub fn read_dimension_catalog<R: Read>(raw: R) -> Result<Vec<Dimension>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(raw);
    let mut out = Vec::new();
    for rec in reader.deserialize() {
        let dim: Dimension = rec?;
        out.push(dim);
    }
    Ok(out)
}
