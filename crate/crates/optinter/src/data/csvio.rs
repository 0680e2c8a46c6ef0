use std::path::Path;

use super::schema::FeatureSchema;
use super::DataError;

/// One unencoded sample: the label column plus the M field values, all as
/// text. Multivalent values are '|'-joined inside a single cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawRow {
    pub label: String,
    pub fields: Vec<String>,
}

/// Reads `label,f1,...,fM` CSV. The header must match the schema's field
/// names in order.
pub fn read_csv(path: &Path, schema: &FeatureSchema) -> Result<Vec<RawRow>, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let expected: Vec<&str> = std::iter::once("label")
        .chain(schema.fields().iter().map(|f| f.name.as_str()))
        .collect();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(DataError::SchemaMismatch(format!(
            "csv header {:?} does not match schema header {:?}",
            got, expected
        )));
    }
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != schema.num_fields() + 1 {
            return Err(DataError::Format {
                row: r + 1,
                msg: format!("{} columns, expected {}", record.len(), schema.num_fields() + 1),
            });
        }
        rows.push(RawRow {
            label: record[0].to_string(),
            fields: record.iter().skip(1).map(|s| s.to_string()).collect(),
        });
    }
    if rows.is_empty() {
        return Err(DataError::EmptyInput);
    }
    Ok(rows)
}

pub fn write_csv(path: &Path, schema: &FeatureSchema, rows: &[RawRow]) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(path)?;
    let header: Vec<&str> = std::iter::once("label")
        .chain(schema.fields().iter().map(|f| f.name.as_str()))
        .collect();
    writer.write_record(&header)?;
    for row in rows {
        let mut record = Vec::with_capacity(row.fields.len() + 1);
        record.push(row.label.as_str());
        record.extend(row.fields.iter().map(|s| s.as_str()));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
