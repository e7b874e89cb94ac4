//! The source pool of hidden samples.
//!
//! A [`HiddenSample`] carries features and a label that stay sealed until
//! [`SourcePool::reveal`] is called for it. Metadata is always readable. The
//! pool counts reveals; that counter is the cost unit of every experiment.

mod csv_io;
mod synthetic;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learner::Dataset;

pub use synthetic::{generate_synthetic, PseudoDataset, SyntheticConfig};

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("{0} column missing")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },
    #[error("row {row}: duplicate id {id}")]
    DuplicateId { row: usize, id: u64 },
    #[error("unknown sample id {0}")]
    UnknownId(u64),
    #[error("sample {0} was already revealed")]
    AlreadyRevealed(u64),
    #[error("sample {0} is hidden; reveal it first")]
    NotRevealed(u64),
    #[error("unknown metadata column `{0}`")]
    UnknownColumn(String),
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaKind {
    Categorical,
    Numeric,
}

/// One metadata column. Categorical values are stored as integer codes that
/// index into `categories`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaColumn {
    pub name: String,
    pub kind: MetaKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl MetaColumn {
    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: MetaKind::Categorical,
            categories: Vec::new(),
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: MetaKind::Numeric,
            categories: Vec::new(),
        }
    }

    /// Human-readable form of a stored value.
    pub fn display_value(&self, value: f64) -> String {
        match self.kind {
            MetaKind::Categorical => {
                let code = value as usize;
                self.categories
                    .get(code)
                    .cloned()
                    .unwrap_or_else(|| format!("{code}"))
            }
            MetaKind::Numeric => format!("{value}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenSample {
    id: u64,
    meta: Vec<f64>,
    hidden_features: Vec<f64>,
    hidden_label: f64,
    revealed: bool,
}

impl HiddenSample {
    pub fn new(id: u64, meta: Vec<f64>, features: Vec<f64>, label: f64) -> Self {
        Self {
            id,
            meta,
            hidden_features: features,
            hidden_label: label,
            revealed: false,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn meta(&self) -> &[f64] {
        &self.meta
    }

    pub fn is_revealed(&self) -> bool {
        self.revealed
    }

    pub fn features(&self) -> Result<&[f64], PoolError> {
        if self.revealed {
            Ok(&self.hidden_features)
        } else {
            Err(PoolError::NotRevealed(self.id))
        }
    }

    pub fn label(&self) -> Result<f64, PoolError> {
        if self.revealed {
            Ok(self.hidden_label)
        } else {
            Err(PoolError::NotRevealed(self.id))
        }
    }
}

/// The source set of hidden samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcePool {
    schema: Vec<MetaColumn>,
    samples: Vec<HiddenSample>,
    index: HashMap<u64, usize>,
    feature_dim: usize,
    reveal_count: usize,
}

impl SourcePool {
    /// Builds a pool from unrevealed samples. Ids must be unique and every
    /// sample must agree with the schema width and the feature dimension.
    pub fn new(schema: Vec<MetaColumn>, samples: Vec<HiddenSample>) -> Result<Self, PoolError> {
        let feature_dim = samples.first().map_or(0, |s| s.hidden_features.len());
        let mut index = HashMap::with_capacity(samples.len());
        let mut reveal_count = 0;
        for (row, s) in samples.iter().enumerate() {
            if index.insert(s.id, row).is_some() {
                return Err(PoolError::DuplicateId { row: row + 1, id: s.id });
            }
            if s.meta.len() != schema.len() {
                return Err(PoolError::Schema(format!(
                    "sample {} has {} metadata values, schema has {}",
                    s.id,
                    s.meta.len(),
                    schema.len()
                )));
            }
            if s.hidden_features.len() != feature_dim {
                return Err(PoolError::Schema(format!(
                    "sample {} has {} features, expected {feature_dim}",
                    s.id,
                    s.hidden_features.len()
                )));
            }
            if s.revealed {
                reveal_count += 1;
            }
        }
        Ok(Self {
            schema,
            samples,
            index,
            feature_dim,
            reveal_count,
        })
    }

    pub fn schema(&self) -> &[MetaColumn] {
        &self.schema
    }

    pub fn column_index(&self, name: &str) -> Result<usize, PoolError> {
        self.schema
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| PoolError::UnknownColumn(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn reveal_count(&self) -> usize {
        self.reveal_count
    }

    /// Sample ids in pool order.
    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.samples.iter().map(|s| s.id)
    }

    pub fn samples(&self) -> &[HiddenSample] {
        &self.samples
    }

    pub fn sample(&self, id: u64) -> Result<&HiddenSample, PoolError> {
        self.index
            .get(&id)
            .map(|&i| &self.samples[i])
            .ok_or(PoolError::UnknownId(id))
    }

    pub fn meta(&self, id: u64) -> Result<&[f64], PoolError> {
        self.sample(id).map(HiddenSample::meta)
    }

    pub fn is_revealed(&self, id: u64) -> Result<bool, PoolError> {
        self.sample(id).map(HiddenSample::is_revealed)
    }

    /// Unseals one sample and returns its features and label. Each sample can
    /// be revealed once.
    pub fn reveal(&mut self, id: u64) -> Result<(Vec<f64>, f64), PoolError> {
        let &i = self.index.get(&id).ok_or(PoolError::UnknownId(id))?;
        let s = &mut self.samples[i];
        if s.revealed {
            return Err(PoolError::AlreadyRevealed(id));
        }
        s.revealed = true;
        self.reveal_count += 1;
        Ok((s.hidden_features.clone(), s.hidden_label))
    }

    /// Reveals the given samples and stacks them into a dataset, in order.
    pub fn reveal_dataset(&mut self, ids: &[u64]) -> Result<Dataset, PoolError> {
        let mut rows = Vec::with_capacity(ids.len());
        let mut labels = Vec::with_capacity(ids.len());
        for &id in ids {
            let (x, y) = self.reveal(id)?;
            rows.push(x);
            labels.push(y);
        }
        Ok(Dataset::from_rows(&rows, labels, self.feature_dim))
    }

    /// A new pool holding copies of the given samples, in the given order.
    pub fn subset(&self, ids: &[u64]) -> Result<SourcePool, PoolError> {
        let samples = ids
            .iter()
            .map(|&id| self.sample(id).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let mut pool = SourcePool::new(self.schema.clone(), samples)?;
        pool.feature_dim = self.feature_dim;
        Ok(pool)
    }

    pub fn load_csv(
        path: impl AsRef<std::path::Path>,
        schema: &[MetaColumn],
    ) -> Result<SourcePool, PoolError> {
        let file = std::fs::File::open(path)?;
        csv_io::read_pool(file, schema)
    }

    pub fn read_csv<R: std::io::Read>(reader: R, schema: &[MetaColumn]) -> Result<SourcePool, PoolError> {
        csv_io::read_pool(reader, schema)
    }

    /// Writes the full pool, hidden fields included, in the ingestion format.
    /// This is a data export and does not count as a reveal.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), PoolError> {
        csv_io::write_pool(self, writer)
    }
}
