//! Feature-set cache: CSV with header `id,y,x1..xN`, floats written with 17
//! significant digits so every value round-trips exactly.

use std::io::{Read, Write};

use crate::error::{invalid, Error, Result};
use crate::statevector::FeatureVector;

/// Seventeen significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<u64>,
    pub labels: Vec<f64>,
    pub points: Vec<FeatureVector>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

fn csv_error(e: csv::Error) -> Error {
    invalid("feature cache", e.to_string())
}

pub fn write_feature_csv<W: Write>(out: W, table: &FeatureTable) -> Result<()> {
    let width = table.points.first().map_or(0, FeatureVector::len);
    if table.labels.len() != table.len() || table.points.len() != table.len() {
        return Err(invalid("feature table", "ids, labels and points differ in length"));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "y".to_string()];
    header.extend((1..=width).map(|k| format!("x{k}")));
    w.write_record(&header).map_err(csv_error)?;
    for ((id, y), x) in table.ids.iter().zip(&table.labels).zip(&table.points) {
        if x.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                actual: x.len(),
            });
        }
        let mut record = vec![id.to_string(), format_float(*y)];
        record.extend(x.as_slice().iter().map(|&v| format_float(v)));
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush().map_err(|e| invalid("feature cache", e.to_string()))?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<FeatureTable> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?.clone();
    let width = header.len().saturating_sub(2);
    let expected: Vec<String> = ["id".to_string(), "y".to_string()]
        .into_iter()
        .chain((1..=width).map(|k| format!("x{k}")))
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(invalid("feature cache", format!("unexpected header {header:?}")));
    }
    let mut table = FeatureTable {
        ids: Vec::new(),
        labels: Vec::new(),
        points: Vec::new(),
    };
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let field = |k: usize| -> Result<f64> {
            record[k].parse().map_err(|_| {
                invalid("feature cache", format!("row {}: bad number {:?}", row + 1, &record[k]))
            })
        };
        let id = record[0]
            .parse()
            .map_err(|_| invalid("feature cache", format!("row {}: bad id", row + 1)))?;
        table.ids.push(id);
        table.labels.push(field(1)?);
        table
            .points
            .push(FeatureVector::new((2..2 + width).map(field).collect::<Result<_>>()?));
    }
    Ok(table)
}
