//! File formats: dataset CSV and JSON, and result CSVs for rank matrices
//! and object distributions.
//!
//! Dataset CSV carries one instance per row under the header
//! `object_id,probability,c1,…,cd`; dimensionality is inferred from the
//! header and each instance's id is its 0-based row position within its
//! object. The JSON mirror is
//! `{"dims": d, "objects": [{"id": …, "instances": [{"p": …, "pos": […]}]}]}`.
//!
//! Result CSVs are `row,object_id,instance_id,distance,p_rank_1,…,p_rank_k`
//! (instance level) and `object_id,p_rank_1,…,p_rank_k` (object level). All
//! floating-point values are printed with 17 significant digits, so a
//! read-back reproduces the written values bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{UncertainDatabase, UncertainObject, VectorInstance};
use crate::engine::{InstanceRankMatrix, MatrixRow, ObjectRankDistribution, PRankVector};

/// Errors from reading or writing any of the file formats.
#[derive(Debug, Error)]
pub enum IoError {
    /// Underlying file or stream failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// Malformed CSV framing.
    #[error(transparent)]
    Csv(#[from] csv::Error),
    /// Malformed JSON.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    /// Structurally valid file with contents violating the format.
    #[error("format error at record {record}: {message}")]
    Format { record: u64, message: String },
}

fn format_err(record: u64, message: impl Into<String>) -> IoError {
    IoError::Format {
        record,
        message: message.into(),
    }
}

/// Formats a float with 17 significant digits (lossless for `f64`).
fn full_precision(value: f64) -> String {
    format!("{value:.16e}")
}

fn parse_f64(field: &str, record: u64, what: &str) -> Result<f64, IoError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| format_err(record, format!("{what} `{field}` is not a number")))
}

fn parse_i64(field: &str, record: u64, what: &str) -> Result<i64, IoError> {
    field
        .trim()
        .parse::<i64>()
        .map_err(|_| format_err(record, format!("{what} `{field}` is not an integer")))
}

// ---------------------------------------------------------------------
// Dataset CSV
// ---------------------------------------------------------------------

/// Writes a database as dataset CSV.
pub fn write_dataset_csv<W: Write>(writer: W, db: &UncertainDatabase) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["object_id".to_owned(), "probability".to_owned()];
    header.extend((1..=db.dimensionality()).map(|i| format!("c{i}")));
    out.write_record(&header)?;
    for object in db.objects() {
        for instance in &object.instances {
            let mut record = vec![
                object.object_id.to_string(),
                full_precision(instance.probability),
            ];
            record.extend(instance.position.iter().map(|&c| full_precision(c)));
            out.write_record(&record)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes dataset CSV to a file path.
pub fn write_dataset_csv_file(path: impl AsRef<Path>, db: &UncertainDatabase) -> Result<(), IoError> {
    write_dataset_csv(BufWriter::new(File::create(path)?), db)
}

/// Reads a database from dataset CSV.
///
/// Rows of one object may appear anywhere in the file; they are grouped by
/// object id in first-appearance order and instance ids are assigned by
/// 0-based position within the object.
pub fn read_dataset_csv<R: Read>(reader: R) -> Result<UncertainDatabase, IoError> {
    let mut input = csv::Reader::from_reader(reader);
    let header = input.headers()?.clone();
    if header.len() < 3 || &header[0] != "object_id" || &header[1] != "probability" {
        return Err(format_err(
            0,
            "header must be object_id,probability,c1,…,cd",
        ));
    }
    let dims = header.len() - 2;
    for (i, field) in header.iter().skip(2).enumerate() {
        let expected = format!("c{}", i + 1);
        if field != expected {
            return Err(format_err(
                0,
                format!("coordinate column {} is named `{field}`, expected `{expected}`", i + 3),
            ));
        }
    }

    let mut order: Vec<i64> = Vec::new();
    let mut grouped: BTreeMap<i64, Vec<VectorInstance>> = BTreeMap::new();
    for (index, record) in input.records().enumerate() {
        let record = record?;
        let record_number = index as u64 + 1;
        if record.len() != dims + 2 {
            return Err(format_err(
                record_number,
                format!("expected {} fields, found {}", dims + 2, record.len()),
            ));
        }
        let object_id = parse_i64(&record[0], record_number, "object id")?;
        let probability = parse_f64(&record[1], record_number, "probability")?;
        let position = record
            .iter()
            .skip(2)
            .map(|f| parse_f64(f, record_number, "coordinate"))
            .collect::<Result<Vec<f64>, IoError>>()?;
        let instances = grouped.entry(object_id).or_insert_with(|| {
            order.push(object_id);
            Vec::new()
        });
        instances.push(VectorInstance {
            instance_id: instances.len() as u32,
            position,
            probability,
        });
    }

    let objects = order
        .into_iter()
        .map(|object_id| UncertainObject {
            object_id,
            instances: grouped.remove(&object_id).expect("grouped by appearance"),
        })
        .collect();
    Ok(UncertainDatabase::new(dims, objects))
}

/// Reads dataset CSV from a file path.
pub fn read_dataset_csv_file(path: impl AsRef<Path>) -> Result<UncertainDatabase, IoError> {
    read_dataset_csv(BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------
// Dataset JSON
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct JsonDataset {
    dims: usize,
    objects: Vec<JsonObject>,
}

#[derive(Serialize, Deserialize)]
struct JsonObject {
    id: i64,
    instances: Vec<JsonInstance>,
}

#[derive(Serialize, Deserialize)]
struct JsonInstance {
    p: f64,
    pos: Vec<f64>,
}

/// Writes a database in the JSON mirror format.
pub fn write_dataset_json<W: Write>(writer: W, db: &UncertainDatabase) -> Result<(), IoError> {
    let doc = JsonDataset {
        dims: db.dimensionality(),
        objects: db
            .objects()
            .iter()
            .map(|o| JsonObject {
                id: o.object_id,
                instances: o
                    .instances
                    .iter()
                    .map(|i| JsonInstance {
                        p: i.probability,
                        pos: i.position.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(writer, &doc)?;
    Ok(())
}

/// Writes dataset JSON to a file path.
pub fn write_dataset_json_file(
    path: impl AsRef<Path>,
    db: &UncertainDatabase,
) -> Result<(), IoError> {
    write_dataset_json(BufWriter::new(File::create(path)?), db)
}

/// Reads a database from the JSON mirror format; instance ids are assigned
/// by position within each object.
pub fn read_dataset_json<R: Read>(reader: R) -> Result<UncertainDatabase, IoError> {
    let doc: JsonDataset = serde_json::from_reader(reader)?;
    let objects = doc
        .objects
        .into_iter()
        .map(|o| UncertainObject {
            object_id: o.id,
            instances: o
                .instances
                .into_iter()
                .enumerate()
                .map(|(index, i)| VectorInstance {
                    instance_id: index as u32,
                    position: i.pos,
                    probability: i.p,
                })
                .collect(),
        })
        .collect();
    Ok(UncertainDatabase::new(doc.dims, objects))
}

/// Reads dataset JSON from a file path.
pub fn read_dataset_json_file(path: impl AsRef<Path>) -> Result<UncertainDatabase, IoError> {
    read_dataset_json(BufReader::new(File::open(path)?))
}

/// Reads a dataset file, choosing the format by extension: `.json` is the
/// JSON mirror, anything else is CSV.
pub fn read_dataset_file(path: impl AsRef<Path>) -> Result<UncertainDatabase, IoError> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        read_dataset_json_file(path)
    } else {
        read_dataset_csv_file(path)
    }
}

// ---------------------------------------------------------------------
// Result CSVs
// ---------------------------------------------------------------------

fn rank_header(prefix: &[&str], k: usize) -> Vec<String> {
    let mut header: Vec<String> = prefix.iter().map(|s| (*s).to_owned()).collect();
    header.extend((1..=k).map(|i| format!("p_rank_{i}")));
    header
}

/// Writes an instance-level rank matrix as CSV.
pub fn write_matrix_csv<W: Write>(writer: W, matrix: &InstanceRankMatrix) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(rank_header(
        &["row", "object_id", "instance_id", "distance"],
        matrix.depth(),
    ))?;
    for (index, row) in matrix.rows.iter().enumerate() {
        let mut record = vec![
            index.to_string(),
            row.object_id.to_string(),
            row.instance_id.to_string(),
            full_precision(row.distance),
        ];
        record.extend(row.p_rank.values().iter().map(|&v| full_precision(v)));
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a rank matrix CSV to a file path.
pub fn write_matrix_csv_file(
    path: impl AsRef<Path>,
    matrix: &InstanceRankMatrix,
) -> Result<(), IoError> {
    write_matrix_csv(BufWriter::new(File::create(path)?), matrix)
}

/// Reads an instance-level rank matrix from CSV.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<InstanceRankMatrix, IoError> {
    let mut input = csv::Reader::from_reader(reader);
    let header = input.headers()?.clone();
    let expected = ["row", "object_id", "instance_id", "distance"];
    if header.len() < expected.len()
        || header.iter().take(expected.len()).ne(expected.iter().copied())
    {
        return Err(format_err(
            0,
            "header must be row,object_id,instance_id,distance,p_rank_1,…,p_rank_k",
        ));
    }
    let k = header.len() - expected.len();
    let mut rows = Vec::new();
    for (index, record) in input.records().enumerate() {
        let record = record?;
        let record_number = index as u64 + 1;
        if record.len() != expected.len() + k {
            return Err(format_err(
                record_number,
                format!("expected {} fields, found {}", expected.len() + k, record.len()),
            ));
        }
        let values = record
            .iter()
            .skip(expected.len())
            .map(|f| parse_f64(f, record_number, "rank probability"))
            .collect::<Result<Vec<f64>, IoError>>()?;
        rows.push(MatrixRow {
            object_id: parse_i64(&record[1], record_number, "object id")?,
            instance_id: parse_i64(&record[2], record_number, "instance id")? as u32,
            distance: parse_f64(&record[3], record_number, "distance")?,
            p_rank: PRankVector::from_values(values),
        });
    }
    InstanceRankMatrix::from_rows(k, rows)
        .ok_or_else(|| format_err(0, "inconsistent row widths"))
}

/// Reads a rank matrix CSV from a file path.
pub fn read_matrix_csv_file(path: impl AsRef<Path>) -> Result<InstanceRankMatrix, IoError> {
    read_matrix_csv(BufReader::new(File::open(path)?))
}

/// Writes an object-level rank distribution as CSV, ascending object id.
pub fn write_objects_csv<W: Write>(
    writer: W,
    objects: &ObjectRankDistribution,
) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(rank_header(&["object_id"], objects.depth()))?;
    for (object_id, values) in objects.iter() {
        let mut record = vec![object_id.to_string()];
        record.extend(values.iter().map(|&v| full_precision(v)));
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes an object distribution CSV to a file path.
pub fn write_objects_csv_file(
    path: impl AsRef<Path>,
    objects: &ObjectRankDistribution,
) -> Result<(), IoError> {
    write_objects_csv(BufWriter::new(File::create(path)?), objects)
}

/// Reads an object-level rank distribution from CSV.
pub fn read_objects_csv<R: Read>(reader: R) -> Result<ObjectRankDistribution, IoError> {
    let mut input = csv::Reader::from_reader(reader);
    let header = input.headers()?.clone();
    if header.is_empty() || &header[0] != "object_id" {
        return Err(format_err(0, "header must be object_id,p_rank_1,…,p_rank_k"));
    }
    let k = header.len() - 1;
    let mut rows = BTreeMap::new();
    for (index, record) in input.records().enumerate() {
        let record = record?;
        let record_number = index as u64 + 1;
        if record.len() != k + 1 {
            return Err(format_err(
                record_number,
                format!("expected {} fields, found {}", k + 1, record.len()),
            ));
        }
        let object_id = parse_i64(&record[0], record_number, "object id")?;
        let values = record
            .iter()
            .skip(1)
            .map(|f| parse_f64(f, record_number, "rank probability"))
            .collect::<Result<Vec<f64>, IoError>>()?;
        if rows.insert(object_id, values).is_some() {
            return Err(format_err(
                record_number,
                format!("duplicate object id {object_id}"),
            ));
        }
    }
    ObjectRankDistribution::from_rows(k, rows)
        .ok_or_else(|| format_err(0, "inconsistent row widths"))
}

/// Reads an object distribution CSV from a file path.
pub fn read_objects_csv_file(path: impl AsRef<Path>) -> Result<ObjectRankDistribution, IoError> {
    read_objects_csv(BufReader::new(File::open(path)?))
}
