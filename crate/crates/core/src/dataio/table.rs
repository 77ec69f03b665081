//! Comma-separated tables with a header row and one label column.
//!
//! Lines starting with `#` are metadata comments and are skipped on read.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::LabelMap;
use crate::error::{Error, Result};
use crate::transform::LabeledDataset;

/// Numeric feature columns plus an optional label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub label_name: Option<String>,
    pub labels: Option<Vec<String>>,
}

impl Table {
    /// Remaps labels to class indices in first-appearance order.
    pub fn to_dataset(&self) -> Result<(LabeledDataset, LabelMap)> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Data("table has no label column".into()))?;
        let (map, idx) = LabelMap::from_labels(labels);
        let data = LabeledDataset::new(self.features.clone(), idx, map.len())?;
        Ok((data, map))
    }

    /// Writes the table with `comments` as leading `# ` lines. The label
    /// column, if any, comes last.
    pub fn write<W: Write>(&self, out: W, comments: &[String]) -> Result<()> {
        let mut out = out;
        for c in comments {
            writeln!(out, "# {c}").map_err(|e| Error::io("<output>", e))?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.feature_names.clone();
        if let Some(name) = &self.label_name {
            header.push(name.clone());
        }
        w.write_record(&header)?;
        for (i, row) in self.features.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            if let Some(labels) = &self.labels {
                rec.push(labels[i].clone());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }
}

/// Reads a table from any reader. `source` names it in error messages.
pub fn read_csv<R: Read>(reader: R, source: &Path, label_column: Option<&str>) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Data(format!("{}: missing header row", source.display())));
    }
    let label_idx = match label_column {
        Some(name) => Some(header.iter().position(|h| h == name).ok_or_else(|| {
            Error::Data(format!("{}: no column named `{name}`", source.display()))
        })?),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&i| Some(i) != label_idx).collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                path: source.to_owned(),
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let values = feature_cols
            .iter()
            .map(|&c| {
                rec[c].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    path: source.to_owned(),
                    row,
                    column: header[c].clone(),
                    message: format!("`{}` is not a finite number", &rec[c]),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        features.push(values);
        if let Some(li) = label_idx {
            labels.push(rec[li].to_owned());
        }
    }
    Ok(Table {
        feature_names: feature_cols.iter().map(|&c| header[c].clone()).collect(),
        features,
        label_name: label_idx.map(|i| header[i].clone()),
        labels: label_idx.map(|_| labels),
    })
}

/// Reads a labeled dataset from a file.
pub fn load_csv(path: &Path, label_column: &str) -> Result<(LabeledDataset, LabelMap, Table)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let table = read_csv(file, path, Some(label_column))?;
    if table.features.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let (data, map) = table.to_dataset()?;
    Ok((data, map, table))
}

/// Writes a table to a file.
pub fn write_csv(path: &Path, table: &Table, comments: &[String]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    table.write(std::io::BufWriter::new(file), comments)
}
