//! Graph containers and degree/normalization algebra.
//!
//! The input adjacency is kept as sorted neighbour lists (it is sparse and
//! immutable); the learnable structure lives in a dense [`StructureMatrix`].

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to degrees before they are inverted.
pub const DEFAULT_DEGREE_FLOOR: f64 = 1e-8;

/// Which normalized adjacency the smoothing term is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `D^-1 S`, rows sum to one.
    #[default]
    Rw,
    /// `D^-1/2 S D^-1/2`.
    Sym,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Rw => "rw",
            Normalization::Sym => "sym",
        })
    }
}

impl FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rw" => Ok(Normalization::Rw),
            "sym" => Ok(Normalization::Sym),
            other => Err(format!("unknown normalization `{other}` (expected rw or sym)")),
        }
    }
}

/// Train/validation/test node index sets.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Checks disjointness, range, and that every index carries a label.
    pub fn validate(&self, labels: &[Option<usize>]) -> Result<()> {
        let mut seen = vec![false; labels.len()];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= labels.len() {
                return Err(Error::InvalidSplit {
                    index: i,
                    reason: "index out of range",
                });
            }
            if seen[i] {
                return Err(Error::InvalidSplit {
                    index: i,
                    reason: "index appears in more than one split",
                });
            }
            if labels[i].is_none() {
                return Err(Error::InvalidSplit {
                    index: i,
                    reason: "node is unlabeled",
                });
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// Immutable undirected graph with node features and labels.
#[derive(Debug, Clone)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    features: Array2<f64>,
    labels: Vec<Option<usize>>,
    n_classes: usize,
    self_loops: bool,
    splits: Option<Splits>,
    original_ids: Vec<usize>,
}

// The id map is bookkeeping for reports, not part of the graph's value.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.neighbors == other.neighbors
            && self.features == other.features
            && self.labels == other.labels
            && self.n_classes == other.n_classes
            && self.self_loops == other.self_loops
            && self.splits == other.splits
    }
}

impl Graph {
    /// Builds a graph from an undirected edge list.
    ///
    /// Both orientations and repeats of a pair are merged. Pairs `(i, i)` in
    /// the list are ignored; `self_loops` alone decides whether the diagonal
    /// is set.
    pub fn build(
        edges: &[(usize, usize)],
        features: Array2<f64>,
        labels: Vec<Option<usize>>,
        n_classes: usize,
        self_loops: bool,
    ) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n {
            return Err(Error::ShapeMismatch {
                context: "labels",
                expected: (n, 1),
                found: (labels.len(), 1),
            });
        }
        for (node, label) in labels.iter().enumerate() {
            if let Some(l) = *label {
                if l >= n_classes {
                    return Err(Error::LabelOutOfRange {
                        node,
                        label: l,
                        n_classes,
                    });
                }
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in edges {
            for index in [i, j] {
                if index >= n {
                    return Err(Error::NodeOutOfRange { index, n_nodes: n });
                }
            }
            if i != j {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
        if self_loops {
            for (i, list) in neighbors.iter_mut().enumerate() {
                list.push(i);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph {
            neighbors,
            features,
            labels,
            n_classes,
            self_loops,
            splits: None,
            original_ids: (0..n).collect(),
        })
    }

    /// Same as [`Graph::build`] but takes features as rows, rejecting ragged input.
    pub fn from_rows(
        edges: &[(usize, usize)],
        rows: &[Vec<f64>],
        labels: Vec<Option<usize>>,
        n_classes: usize,
        self_loops: bool,
    ) -> Result<Self> {
        Self::build(edges, features_from_rows(rows)?, labels, n_classes, self_loops)
    }

    pub fn n_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn has_self_loops(&self) -> bool {
        self.self_loops
    }

    pub fn splits(&self) -> Option<&Splits> {
        self.splits.as_ref()
    }

    /// Original node id for each node, after any LCC relabeling.
    pub fn original_ids(&self) -> &[usize] {
        &self.original_ids
    }

    /// Sorted neighbours of `i`, including `i` itself when self-loops are on.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Number of neighbours of `i` excluding the self-loop.
    pub fn degree(&self, i: usize) -> usize {
        let list = &self.neighbors[i];
        list.len() - usize::from(list.binary_search(&i).is_ok())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Undirected non-loop edges as `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, list) in self.neighbors.iter().enumerate() {
            out.extend(list.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors
            .iter()
            .enumerate()
            .map(|(i, list)| list.iter().filter(|&&j| j > i).count())
            .sum()
    }

    /// Dense 0/1 adjacency, diagonal included.
    pub fn adjacency(&self) -> Array2<f64> {
        let n = self.n_nodes();
        let mut a = Array2::zeros((n, n));
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                a[[i, j]] = 1.0;
            }
        }
        a
    }

    /// The adjacency as the starting structure matrix.
    pub fn structure(&self) -> StructureMatrix {
        StructureMatrix(self.adjacency())
    }

    pub fn with_splits(mut self, splits: Splits) -> Result<Self> {
        splits.validate(&self.labels)?;
        self.splits = Some(splits);
        Ok(self)
    }

    pub fn without_splits(mut self) -> Self {
        self.splits = None;
        self
    }

    /// Replaces the edge set, keeping nodes, features, labels and splits.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::build(
            edges,
            self.features.clone(),
            self.labels.clone(),
            self.n_classes,
            self.self_loops,
        )?;
        g.splits = self.splits.clone();
        g.original_ids = self.original_ids.clone();
        Ok(g)
    }

    /// Replaces the feature matrix, keeping everything else.
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        if features.nrows() != self.n_nodes() {
            return Err(Error::ShapeMismatch {
                context: "features",
                expected: (self.n_nodes(), features.ncols()),
                found: features.dim(),
            });
        }
        let mut g = self.clone();
        g.features = features;
        Ok(g)
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in &self.neighbors[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on the largest connected component.
    ///
    /// Ties go to the component holding the smallest node id. Surviving nodes
    /// keep their relative order; split entries outside the component are dropped.
    pub fn largest_connected_component(&self) -> Graph {
        let keep = self
            .components()
            .into_iter()
            .fold(Vec::new(), |best, c| if c.len() > best.len() { c } else { best });
        self.induced(&keep)
    }

    /// Induced subgraph on `keep` (sorted ascending), ids compacted.
    pub fn induced(&self, keep: &[usize]) -> Graph {
        let mut new_id = vec![usize::MAX; self.n_nodes()];
        for (k, &old) in keep.iter().enumerate() {
            new_id[old] = k;
        }
        let neighbors = keep
            .iter()
            .map(|&old| {
                self.neighbors[old]
                    .iter()
                    .filter_map(|&v| (new_id[v] != usize::MAX).then_some(new_id[v]))
                    .collect()
            })
            .collect();
        let features = self.features.select(Axis(0), keep);
        let labels = keep.iter().map(|&old| self.labels[old]).collect();
        let remap = |ids: &[usize]| -> Vec<usize> {
            ids.iter()
                .filter_map(|&i| (new_id[i] != usize::MAX).then_some(new_id[i]))
                .collect()
        };
        let splits = self.splits.as_ref().map(|s| Splits {
            train: remap(&s.train),
            val: remap(&s.val),
            test: remap(&s.test),
        });
        Graph {
            neighbors,
            features,
            labels,
            n_classes: self.n_classes,
            self_loops: self.self_loops,
            splits,
            original_ids: keep.iter().map(|&old| self.original_ids[old]).collect(),
        }
    }

    /// Applies the node permutation `perm` (new node `k` is old node `perm[k]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.n_nodes();
        let mut inverse = vec![usize::MAX; n];
        for (k, &old) in perm.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(Error::InvalidParameter {
                    name: "perm",
                    value: old as f64,
                    reason: "not a permutation of the node ids",
                });
            }
            inverse[old] = k;
        }
        if perm.len() != n {
            return Err(Error::ShapeMismatch {
                context: "permutation",
                expected: (n, 1),
                found: (perm.len(), 1),
            });
        }
        let edges: Vec<_> = self
            .edges()
            .into_iter()
            .map(|(i, j)| (inverse[i], inverse[j]))
            .collect();
        let mut g = Graph::build(
            &edges,
            self.features.select(Axis(0), perm),
            perm.iter().map(|&old| self.labels[old]).collect(),
            self.n_classes,
            self.self_loops,
        )?;
        g.original_ids = perm.iter().map(|&old| self.original_ids[old]).collect();
        Ok(g)
    }
}

/// Stacks feature rows into a matrix, rejecting rows of unequal length.
pub fn features_from_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let m = rows.first().map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(rows.len() * m);
    for (row, values) in rows.iter().enumerate() {
        if values.len() != m {
            return Err(Error::RaggedFeatures {
                row,
                found: values.len(),
                expected: m,
            });
        }
        flat.extend_from_slice(values);
    }
    Ok(Array2::from_shape_vec((rows.len(), m), flat).expect("length checked"))
}

/// Dense square matrix with every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix(Array2<f64>);

impl StructureMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c {
            return Err(Error::ShapeMismatch {
                context: "structure matrix",
                expected: (r, r),
                found: (r, c),
            });
        }
        for ((row, col), &value) in values.indexed_iter() {
            // NaN fails both comparisons, so it is rejected here too.
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutsideBox { row, col, value });
            }
        }
        Ok(StructureMatrix(values))
    }

    /// Wraps values already known to lie in the box (prox output).
    pub(crate) fn from_box(values: Array2<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        StructureMatrix(values)
    }

    pub fn identity(n: usize) -> Self {
        StructureMatrix(Array2::eye(n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn degrees(&self, floor: f64) -> DegreeView {
        DegreeView::new(self.0.view(), floor)
    }

    /// Number of entries exactly at 0 and exactly at 1.
    pub fn count_at_bounds(&self) -> (usize, usize) {
        self.0.iter().fold((0, 0), |(z, o), &v| {
            (z + usize::from(v == 0.0), o + usize::from(v == 1.0))
        })
    }
}

/// Row sums of a nonnegative matrix together with the inversion floor.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeView {
    degrees: Array1<f64>,
    floor: f64,
}

impl DegreeView {
    pub fn new(m: ArrayView2<'_, f64>, floor: f64) -> Self {
        DegreeView {
            degrees: m.sum_axis(Axis(1)),
            floor,
        }
    }

    pub fn raw(&self) -> &Array1<f64> {
        &self.degrees
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// `max(d_i, floor)` for every node.
    pub fn effective(&self) -> Array1<f64> {
        self.degrees.mapv(|d| d.max(self.floor))
    }

    pub fn min_effective(&self) -> f64 {
        self.degrees
            .iter()
            .map(|d| d.max(self.floor))
            .fold(f64::INFINITY, f64::min)
    }

    /// Rows whose degree is at or below the floor.
    pub fn zero_rows(&self) -> Vec<usize> {
        self.degrees
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= self.floor)
            .map(|(i, _)| i)
            .collect()
    }
}

/// `D^-1 M` (rw) or `D^-1/2 M D^-1/2` (sym) with degrees floored at `floor`.
pub fn normalize(m: ArrayView2<'_, f64>, mode: Normalization, floor: f64) -> Array2<f64> {
    let d = DegreeView::new(m, floor).effective();
    let mut out = m.to_owned();
    match mode {
        Normalization::Rw => {
            for (mut row, &di) in out.outer_iter_mut().zip(d.iter()) {
                row.mapv_inplace(|v| v / di);
            }
        }
        Normalization::Sym => {
            let u = d.mapv(|x| 1.0 / x.sqrt());
            for ((i, j), v) in out.indexed_iter_mut() {
                *v *= u[i] * u[j];
            }
        }
    }
    out
}

/// `I - normalize(m)`.
pub fn laplacian(m: ArrayView2<'_, f64>, mode: Normalization, floor: f64) -> Array2<f64> {
    let mut l = normalize(m, mode, floor);
    l.mapv_inplace(|v| -v);
    for i in 0..l.nrows() {
        l[[i, i]] += 1.0;
    }
    l
}
