use std::collections::HashMap;
use std::io::{Read, Write};

use super::{HiddenSample, MetaColumn, MetaKind, PoolError, SourcePool};

pub(super) fn read_pool<R: Read>(reader: R, schema: &[MetaColumn]) -> Result<SourcePool, PoolError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let id_col = find("id").ok_or_else(|| PoolError::MissingColumn("id".into()))?;
    let label_col = find("label").ok_or_else(|| PoolError::MissingColumn("label".into()))?;

    let mut meta_cols = Vec::with_capacity(schema.len());
    for col in schema {
        let header = format!("meta:{}", col.name);
        meta_cols.push(find(&header).ok_or(PoolError::MissingColumn(header))?);
    }
    for h in headers.iter().filter_map(|h| h.strip_prefix("meta:")) {
        if !schema.iter().any(|c| c.name == h) {
            return Err(PoolError::Schema(format!("metadata column `{h}` has no declared kind")));
        }
    }

    let mut feat_cols: Vec<(usize, usize)> = Vec::new();
    for (pos, h) in headers.iter().enumerate() {
        if let Some(k) = h.strip_prefix("feat:") {
            let k: usize = k
                .parse()
                .map_err(|_| PoolError::Schema(format!("bad feature header `{h}`")))?;
            feat_cols.push((k, pos));
        }
    }
    feat_cols.sort_unstable();
    for (expected, &(k, _)) in feat_cols.iter().enumerate() {
        if k != expected {
            return Err(PoolError::MissingColumn(format!("feat:{expected}")));
        }
    }

    let mut schema = schema.to_vec();
    let mut codes: Vec<HashMap<String, usize>> = schema
        .iter()
        .map(|c| c.categories.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect())
        .collect();

    let mut samples = Vec::new();
    let mut seen: HashMap<u64, usize> = HashMap::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let cell = |pos: usize, column: &str| -> Result<&str, PoolError> {
            match record.get(pos) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(PoolError::Cell {
                    row,
                    column: column.to_string(),
                    message: "missing value".into(),
                }),
            }
        };
        let number = |pos: usize, column: &str| -> Result<f64, PoolError> {
            let raw = cell(pos, column)?;
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(PoolError::Cell {
                    row,
                    column: column.to_string(),
                    message: format!("`{raw}` is not a finite number"),
                }),
            }
        };

        let raw_id = cell(id_col, "id")?;
        let id: u64 = raw_id.parse().map_err(|_| PoolError::Cell {
            row,
            column: "id".into(),
            message: format!("`{raw_id}` is not a non-negative integer id"),
        })?;
        if seen.insert(id, row).is_some() {
            return Err(PoolError::DuplicateId { row, id });
        }
        let label = number(label_col, "label")?;

        let mut meta = Vec::with_capacity(schema.len());
        for (j, col) in schema.iter_mut().enumerate() {
            let header = format!("meta:{}", col.name);
            let value = match col.kind {
                MetaKind::Numeric => number(meta_cols[j], &header)?,
                MetaKind::Categorical => {
                    let raw = cell(meta_cols[j], &header)?;
                    let next = codes[j].len();
                    let code = *codes[j].entry(raw.to_string()).or_insert_with(|| {
                        col.categories.push(raw.to_string());
                        next
                    });
                    code as f64
                }
            };
            meta.push(value);
        }

        let features = feat_cols
            .iter()
            .map(|&(k, pos)| number(pos, &format!("feat:{k}")))
            .collect::<Result<Vec<_>, _>>()?;
        samples.push(HiddenSample::new(id, meta, features, label));
    }

    let mut pool = SourcePool::new(schema, samples)?;
    pool.feature_dim = feat_cols.len();
    Ok(pool)
}

pub(super) fn write_pool<W: Write>(pool: &SourcePool, writer: W) -> Result<(), PoolError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend(pool.schema.iter().map(|c| format!("meta:{}", c.name)));
    header.extend((0..pool.feature_dim).map(|k| format!("feat:{k}")));
    wtr.write_record(&header)?;

    let mut record = Vec::with_capacity(header.len());
    for s in &pool.samples {
        record.clear();
        record.push(s.id.to_string());
        record.push(s.hidden_label.to_string());
        for (col, &v) in pool.schema.iter().zip(&s.meta) {
            record.push(col.display_value(v));
        }
        record.extend(s.hidden_features.iter().map(f64::to_string));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}
