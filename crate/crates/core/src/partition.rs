//! Metadata partitions and the merged cluster set.
//!
//! Each metadata column splits the unrevealed pool into disjoint clusters:
//! one per observed value for categorical columns, `eta` bins for numeric
//! ones. The clusters of all requested columns are concatenated into one
//! [`ClusterSet`] whose positions are the bandit's arm indices. Positions never
//! move; a cluster whose members have all been consumed stays in place and is
//! marked exhausted.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use indexmap::IndexSet;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pool::{MetaKind, PoolError, SourcePool};

/// Bin count used for numeric columns when a spec leaves `eta` unset.
pub const DEFAULT_NUMERIC_BINS: usize = 7;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error("numeric column `{0}` needs at least one bin")]
    ZeroBins(String),
    #[error("at least one partition spec is required")]
    NoSpecs,
    #[error("sample {0} is not in any cluster")]
    UnknownId(u64),
    #[error("cluster {0} is exhausted")]
    Exhausted(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    #[default]
    EqualWidth,
    EqualFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub column: String,
    /// Bin count for numeric columns; ignored for categorical ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<usize>,
    #[serde(default)]
    pub binning: Binning,
}

impl PartitionSpec {
    pub fn new(column: impl Into<String>) -> Self {
        Self {
            column: column.into(),
            eta: None,
            binning: Binning::EqualWidth,
        }
    }

    pub fn with_eta(column: impl Into<String>, eta: usize) -> Self {
        Self {
            eta: Some(eta),
            ..Self::new(column)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabel {
    pub column: String,
    pub bin: usize,
    pub value: String,
}

impl fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.column, self.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub label: ClusterLabel,
    members: IndexSet<u64>,
}

impl Cluster {
    pub fn new(label: ClusterLabel, members: impl IntoIterator<Item = u64>) -> Self {
        Self {
            label,
            members: members.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_exhausted(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.members.contains(&id)
    }

    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        self.members.iter().copied()
    }

    /// A uniformly random member. The cluster is left unchanged.
    pub fn draw_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64, PartitionError> {
        if self.members.is_empty() {
            return Err(PartitionError::Exhausted(self.label.to_string()));
        }
        let i = rng.random_range(0..self.members.len());
        Ok(self.members[i])
    }
}

pub fn draw_uniform<R: Rng + ?Sized>(cluster: &Cluster, rng: &mut R) -> Result<u64, PartitionError> {
    cluster.draw_uniform(rng)
}

fn fmt_edge(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Upper edges (exclusive, except the last bin which is closed) for numeric
/// binning over `values`. Returns an empty vector for a degenerate range.
fn bin_edges(values: &[f64], eta: usize, binning: Binning) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Vec::new();
    }
    match binning {
        Binning::EqualWidth => {
            let width = (hi - lo) / eta as f64;
            (1..eta).map(|k| lo + width * k as f64).collect()
        }
        Binning::EqualFrequency => {
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            (1..eta).map(|k| sorted[k * n / eta]).collect()
        }
    }
}

fn bin_of(value: f64, lo: f64, eta: usize, edges: &[f64], binning: Binning) -> usize {
    if edges.is_empty() {
        return 0;
    }
    match binning {
        Binning::EqualWidth => {
            let width = edges[0] - lo;
            (((value - lo) / width).floor().max(0.0) as usize).min(eta - 1)
        }
        Binning::EqualFrequency => edges.partition_point(|&e| e <= value),
    }
}

/// Clusters of the unrevealed samples for one metadata column, in bin order.
/// Numeric bin edges span the metadata of the whole pool; empty bins are
/// dropped.
pub fn build_partition(pool: &SourcePool, spec: &PartitionSpec) -> Result<Vec<Cluster>, PartitionError> {
    let j = pool.column_index(&spec.column)?;
    let column = &pool.schema()[j];
    let unrevealed = pool.samples().iter().filter(|s| !s.is_revealed());

    match column.kind {
        MetaKind::Categorical => {
            let mut groups: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
            for s in unrevealed {
                groups.entry(s.meta()[j] as usize).or_default().push(s.id());
            }
            Ok(groups
                .into_iter()
                .map(|(code, ids)| {
                    let label = ClusterLabel {
                        column: column.name.clone(),
                        bin: code,
                        value: column.display_value(code as f64),
                    };
                    Cluster::new(label, ids)
                })
                .collect())
        }
        MetaKind::Numeric => {
            let eta = spec.eta.unwrap_or(DEFAULT_NUMERIC_BINS);
            if eta == 0 {
                return Err(PartitionError::ZeroBins(column.name.clone()));
            }
            let values: Vec<f64> = pool.samples().iter().map(|s| s.meta()[j]).collect();
            let edges = bin_edges(&values, eta, spec.binning);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

            let mut bins: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
            for s in unrevealed {
                bins.entry(bin_of(s.meta()[j], lo, eta, &edges, spec.binning))
                    .or_default()
                    .push(s.id());
            }
            let nbins = edges.len() + 1;
            Ok(bins
                .into_iter()
                .map(|(b, ids)| {
                    let left = if b == 0 { lo } else { edges[b - 1] };
                    let (right, close) = if b + 1 == nbins { (hi, ']') } else { (edges[b], ')') };
                    let label = ClusterLabel {
                        column: column.name.clone(),
                        bin: b,
                        value: format!("[{},{}{close}", fmt_edge(left), fmt_edge(right)),
                    };
                    Cluster::new(label, ids)
                })
                .collect())
        }
    }
}

/// The merged cluster set over one or more metadata columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    clusters: Vec<Cluster>,
    membership: HashMap<u64, Vec<usize>>,
    /// Column of each partition, with the cluster position range it occupies.
    columns: Vec<(String, std::ops::Range<usize>)>,
}

impl ClusterSet {
    pub fn from_partitions(partitions: Vec<(String, Vec<Cluster>)>) -> Self {
        let mut clusters = Vec::new();
        let mut membership: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut columns = Vec::new();
        for (name, part) in partitions {
            let start = clusters.len();
            for c in part {
                for id in c.members() {
                    membership.entry(id).or_default().push(clusters.len());
                }
                clusters.push(c);
            }
            columns.push((name, start..clusters.len()));
        }
        Self {
            clusters,
            membership,
            columns,
        }
    }

    /// One cluster holding every unrevealed sample in pool order.
    pub fn single(pool: &SourcePool, name: &str) -> Self {
        let label = ClusterLabel {
            column: name.to_string(),
            bin: 0,
            value: "all".into(),
        };
        let ids = pool.samples().iter().filter(|s| !s.is_revealed()).map(|s| s.id());
        Self::from_partitions(vec![(name.to_string(), vec![Cluster::new(label, ids)])])
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, index: usize) -> &Cluster {
        &self.clusters[index]
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Number of partitions merged into the set.
    pub fn partition_count(&self) -> usize {
        self.columns.len()
    }

    pub fn exhausted_mask(&self) -> Vec<bool> {
        self.clusters.iter().map(Cluster::is_exhausted).collect()
    }

    pub fn is_exhausted(&self) -> bool {
        self.clusters.iter().all(Cluster::is_exhausted)
    }

    pub fn remaining(&self) -> usize {
        self.membership.len()
    }

    pub fn clusters_of(&self, id: u64) -> Option<&[usize]> {
        self.membership.get(&id).map(Vec::as_slice)
    }

    /// Removes a consumed sample from every cluster that holds it.
    pub fn remove_sample(&mut self, id: u64) -> Result<(), PartitionError> {
        let positions = self.membership.remove(&id).ok_or(PartitionError::UnknownId(id))?;
        for p in positions {
            self.clusters[p].members.swap_remove(&id);
        }
        Ok(())
    }

    /// Checks the partition invariants against the pool's unrevealed samples.
    pub fn check_invariants(&self, pool: &SourcePool) -> Result<(), String> {
        let mut unrevealed: Vec<u64> = pool.samples().iter().filter(|s| !s.is_revealed()).map(|s| s.id()).collect();
        unrevealed.sort_unstable();
        for (name, range) in &self.columns {
            let mut ids: Vec<u64> = self.clusters[range.clone()].iter().flat_map(|c| c.members()).collect();
            ids.sort_unstable();
            if ids.windows(2).any(|w| w[0] == w[1]) {
                return Err(format!("clusters of `{name}` overlap"));
            }
            if ids != unrevealed {
                return Err(format!("clusters of `{name}` do not cover the unrevealed pool"));
            }
        }
        let d = self.columns.len();
        for &id in &unrevealed {
            let positions = self.membership.get(&id).ok_or_else(|| format!("sample {id} missing from index"))?;
            if positions.len() != d {
                return Err(format!("sample {id} is in {} clusters, expected {d}", positions.len()));
            }
            if positions.iter().any(|&p| !self.clusters[p].contains(id)) {
                return Err(format!("index entry of sample {id} is stale"));
            }
        }
        if self.membership.len() != unrevealed.len() {
            return Err("membership index holds consumed samples".into());
        }
        Ok(())
    }
}

pub fn build_cluster_set(pool: &SourcePool, specs: &[PartitionSpec]) -> Result<ClusterSet, PartitionError> {
    if specs.is_empty() {
        return Err(PartitionError::NoSpecs);
    }
    let partitions = specs
        .iter()
        .map(|spec| Ok((spec.column.clone(), build_partition(pool, spec)?)))
        .collect::<Result<Vec<_>, PartitionError>>()?;
    Ok(ClusterSet::from_partitions(partitions))
}
