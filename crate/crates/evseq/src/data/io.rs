use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::schema::FeatureSchema;
use crate::data::sequence::{Dataset, EventSequence, Split};
use crate::error::{Error, Result};

/// Wire form of one JSON-lines record.
///
/// Numeric values are `Option<f64>` because JSON has no NaN; a `null` entry
/// round-trips as NaN (a missing measurement).
#[derive(Serialize, Deserialize)]
struct RawRecord {
    id: String,
    t: Vec<f64>,
    #[serde(default)]
    cat: BTreeMap<String, Vec<u32>>,
    #[serde(default)]
    num: BTreeMap<String, Vec<Option<f64>>>,
    target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
}

fn record_to_sequence(raw: RawRecord, schema: &FeatureSchema, line: usize) -> Result<EventSequence> {
    let mut cat_values = Vec::with_capacity(schema.n_categorical());
    for feature in &schema.categorical {
        let col = raw.cat.get(&feature.name).ok_or_else(|| Error::MalformedRecord {
            line,
            msg: format!("missing categorical feature `{}`", feature.name),
        })?;
        cat_values.push(col.clone());
    }
    let mut num_values = Vec::with_capacity(schema.n_numeric());
    for feature in &schema.numeric {
        let col = raw.num.get(&feature.name).ok_or_else(|| Error::MalformedRecord {
            line,
            msg: format!("missing numeric feature `{}`", feature.name),
        })?;
        num_values.push(col.iter().map(|v| v.unwrap_or(f64::NAN)).collect());
    }
    Ok(EventSequence {
        id: raw.id,
        times: raw.t,
        cat_values,
        num_values,
        target: raw.target,
    })
}

fn sequence_to_record(seq: &EventSequence, schema: &FeatureSchema, split: Option<Split>) -> RawRecord {
    let cat = schema
        .categorical
        .iter()
        .zip(&seq.cat_values)
        .map(|(f, col)| (f.name.clone(), col.clone()))
        .collect();
    let num = schema
        .numeric
        .iter()
        .zip(&seq.num_values)
        .map(|(f, col)| {
            let wire: Vec<Option<f64>> = col.iter().map(|&v| if v.is_nan() { None } else { Some(v) }).collect();
            (f.name.clone(), wire)
        })
        .collect();
    RawRecord {
        id: seq.id.clone(),
        t: seq.times.clone(),
        cat,
        num,
        target: seq.target,
        split,
    }
}

/// Loads a JSON-lines dataset and validates every sequence against `schema`.
///
/// An empty file yields an empty dataset.
pub fn load_dataset(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Dataset> {
    schema.validate()?;
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut sequences = Vec::new();
    let mut splits = Vec::new();
    let mut any_split = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: line_no,
            msg: e.to_string(),
        })?;
        if let Some(s) = raw.split {
            any_split = true;
            splits.push(s);
        } else {
            splits.push(Split::Train);
        }
        let seq = record_to_sequence(raw, schema, line_no)?;
        seq.validate(schema)?;
        sequences.push(seq);
    }
    let mut dataset = Dataset {
        schema: schema.clone(),
        sequences,
        split_tags: None,
    };
    if any_split {
        dataset.split_tags = Some(splits);
    }
    Ok(dataset)
}

/// Writes a dataset as JSON lines, one sequence per line.
pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut writer = BufWriter::new(file);
    for (i, seq) in dataset.sequences.iter().enumerate() {
        let split = dataset.split_tags.as_ref().map(|tags| tags[i]);
        let record = sequence_to_record(seq, &dataset.schema, split);
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Sidecar schema file: the schema itself plus free-form metadata
/// (generator settings, config hash).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaFile {
    #[serde(flatten)]
    pub schema: FeatureSchema,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub meta: serde_json::Map<String, serde_json::Value>,
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<SchemaFile> {
    let file = File::open(path.as_ref())?;
    let parsed: SchemaFile = serde_json::from_reader(BufReader::new(file))?;
    parsed.schema.validate()?;
    Ok(parsed)
}

pub fn save_schema(schema: &FeatureSchema, meta: serde_json::Map<String, serde_json::Value>, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut writer = BufWriter::new(file);
    let payload = SchemaFile {
        schema: schema.clone(),
        meta,
    };
    serde_json::to_writer_pretty(&mut writer, &payload)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

/// Imports a flat CSV event table: columns `id,time,<feature names...>`.
///
/// Rows are grouped by id (first-appearance order) and sorted by time within
/// each id. Categorical cells are looked up in the schema's string vocabulary
/// when one is declared, otherwise parsed as integer codes. Empty numeric
/// cells become NaN. Targets, if any, go in a `target` column and must agree
/// across rows of one id.
pub fn import_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let col_index = |name: &str| headers.iter().position(|h| h == name);

    let id_col = col_index("id").ok_or_else(|| Error::InvalidSchema("csv missing `id` column".into()))?;
    let time_col = col_index("time").ok_or_else(|| Error::InvalidSchema("csv missing `time` column".into()))?;
    let target_col = col_index("target");

    let mut cat_cols = Vec::new();
    for f in &schema.categorical {
        cat_cols.push(col_index(&f.name).ok_or_else(|| {
            Error::InvalidSchema(format!("csv missing categorical column `{}`", f.name))
        })?);
    }
    let mut num_cols = Vec::new();
    for f in &schema.numeric {
        num_cols.push(col_index(&f.name).ok_or_else(|| {
            Error::InvalidSchema(format!("csv missing numeric column `{}`", f.name))
        })?);
    }

    struct Builder {
        times: Vec<f64>,
        cat: Vec<Vec<u32>>,
        num: Vec<Vec<f64>>,
        target: Option<f64>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Builder> = BTreeMap::new();

    for (row_idx, row) in reader.records().enumerate() {
        let line = row_idx + 2; // header is line 1
        let row = row?;
        let id = row.get(id_col).unwrap_or_default().to_owned();
        if id.is_empty() {
            return Err(Error::MalformedRecord {
                line,
                msg: "empty id".into(),
            });
        }
        let time: f64 = row
            .get(time_col)
            .unwrap_or_default()
            .parse()
            .map_err(|_| Error::MalformedRecord {
                line,
                msg: format!("unparseable time `{}`", row.get(time_col).unwrap_or_default()),
            })?;
        if !groups.contains_key(&id) {
            order.push(id.clone());
            groups.insert(
                id.clone(),
                Builder {
                    times: Vec::new(),
                    cat: vec![Vec::new(); schema.n_categorical()],
                    num: vec![Vec::new(); schema.n_numeric()],
                    target: None,
                },
            );
        }
        let builder = groups.get_mut(&id).unwrap();
        builder.times.push(time);
        for (k, (&col, feature)) in cat_cols.iter().zip(&schema.categorical).enumerate() {
            let cell = row.get(col).unwrap_or_default();
            let code = match &feature.values {
                Some(values) => match values.iter().position(|v| v == cell) {
                    Some(pos) => pos as u32 + 1,
                    None => {
                        return Err(Error::CodeOutOfVocab {
                            id: id.clone(),
                            feature: feature.name.clone(),
                            code: u32::MAX,
                            vocab_size: feature.vocab_size,
                        })
                    }
                },
                None => cell.parse().map_err(|_| Error::MalformedRecord {
                    line,
                    msg: format!("unparseable code `{cell}` for `{}`", feature.name),
                })?,
            };
            builder.cat[k].push(code);
        }
        for (k, &col) in num_cols.iter().enumerate() {
            let cell = row.get(col).unwrap_or_default();
            let value = if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse().map_err(|_| Error::MalformedRecord {
                    line,
                    msg: format!("unparseable number `{cell}`"),
                })?
            };
            builder.num[k].push(value);
        }
        if let Some(col) = target_col {
            let cell = row.get(col).unwrap_or_default();
            if !cell.is_empty() {
                let t: f64 = cell.parse().map_err(|_| Error::MalformedRecord {
                    line,
                    msg: format!("unparseable target `{cell}`"),
                })?;
                builder.target = Some(t);
            }
        }
    }

    let mut sequences = Vec::with_capacity(order.len());
    for id in order {
        let builder = groups.remove(&id).unwrap();
        let mut indices: Vec<usize> = (0..builder.times.len()).collect();
        indices.sort_by(|&a, &b| builder.times[a].partial_cmp(&builder.times[b]).unwrap());
        let seq = EventSequence {
            id,
            times: indices.iter().map(|&j| builder.times[j]).collect(),
            cat_values: builder
                .cat
                .iter()
                .map(|col| indices.iter().map(|&j| col[j]).collect())
                .collect(),
            num_values: builder
                .num
                .iter()
                .map(|col| indices.iter().map(|&j| col[j]).collect())
                .collect(),
            target: builder.target,
        };
        seq.validate(schema)?;
        sequences.push(seq);
    }
    Dataset::new(schema.clone(), sequences)
}
