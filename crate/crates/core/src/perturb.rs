//! Stochastic block model graphs and random edge perturbations.

use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Block model with Gaussian features around per-block means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    /// One mean vector per block, all of the same length.
    pub means: Vec<Vec<f64>>,
    /// Standard deviation of the isotropic feature noise.
    pub noise: f64,
    pub seed: u64,
}

impl SbmSpec {
    /// Means `sep * e_b` for block `b` in `dims` dimensions.
    pub fn one_hot_means(n_blocks: usize, dims: usize, sep: f64) -> Vec<Vec<f64>> {
        (0..n_blocks)
            .map(|b| (0..dims).map(|d| if d == b { sep } else { 0.0 }).collect())
            .collect()
    }

    pub fn n_nodes(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::InvalidSpec("every block must be non-empty".into()));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidSpec(format!("{name} = {p} is not a probability")));
            }
        }
        if self.means.len() != self.block_sizes.len() {
            return Err(Error::InvalidSpec(format!(
                "{} mean vectors for {} blocks",
                self.means.len(),
                self.block_sizes.len()
            )));
        }
        let dims = self.means[0].len();
        if dims == 0 || self.means.iter().any(|m| m.len() != dims) {
            return Err(Error::InvalidSpec(
                "mean vectors must be non-empty and equally long".into(),
            ));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::InvalidSpec(format!("noise = {} is invalid", self.noise)));
        }
        Ok(())
    }
}

/// Samples the graph; labels are block ids, self-loops on, no splits.
pub fn generate_sbm(spec: &SbmSpec) -> Result<Graph> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let block: Vec<usize> = spec
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = block.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if block[i] == block[j] { spec.p_in } else { spec.p_out };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let dims = spec.means[0].len();
    let features = Array2::from_shape_fn((n, dims), |(i, d)| {
        let z: f64 = rng.sample(StandardNormal);
        spec.means[block[i]][d] + spec.noise * z
    });
    let labels = block.iter().map(|&b| Some(b)).collect();
    Graph::build(&edges, features, labels, spec.block_sizes.len(), true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbKind {
    /// Flip `ceil(rate * |E|)` undirected slots anywhere in the graph.
    GlobalRandom { rate: f64 },
    /// Flip `per_node` slots incident to each target.
    TargetedRandom { per_node: usize, targets: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub kind: PerturbKind,
    /// Fraction of flips that add an edge; the rest remove one.
    pub add_remove_mix: f64,
    pub seed: u64,
}

impl PerturbSpec {
    pub fn global(rate: f64, add_remove_mix: f64, seed: u64) -> Self {
        PerturbSpec {
            kind: PerturbKind::GlobalRandom { rate },
            add_remove_mix,
            seed,
        }
    }

    pub fn targeted(per_node: usize, targets: Vec<usize>, add_remove_mix: f64, seed: u64) -> Self {
        PerturbSpec {
            kind: PerturbKind::TargetedRandom { per_node, targets },
            add_remove_mix,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.add_remove_mix) {
            return Err(Error::InvalidParameter {
                name: "add_remove_mix",
                value: self.add_remove_mix,
                reason: "must lie in [0, 1]",
            });
        }
        if let PerturbKind::GlobalRandom { rate } = self.kind {
            if !(rate >= 0.0) || !rate.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "rate",
                    value: rate,
                    reason: "must be finite and nonnegative",
                });
            }
        }
        Ok(())
    }
}

/// Number of slots a global perturbation at `rate` flips on `n_edges` edges.
pub fn global_flip_count(rate: f64, n_edges: usize) -> usize {
    // The epsilon keeps exact products such as 0.15 * 200 from rounding up.
    (rate * n_edges as f64 - 1e-9).ceil().max(0.0) as usize
}

fn split_count(total: usize, mix: f64) -> (usize, usize) {
    let add = ((mix * total as f64).round() as usize).min(total);
    (add, total - add)
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Applies the perturbation; self-loops, features, labels and splits are untouched.
pub fn perturb(g: &Graph, spec: &PerturbSpec) -> Result<Graph> {
    spec.validate()?;
    let flips = match &spec.kind {
        PerturbKind::GlobalRandom { rate } => global_flips(g, *rate, spec)?,
        PerturbKind::TargetedRandom { per_node, targets } => {
            targeted_flips(g, *per_node, targets, spec)?
        }
    };
    let mut edges: HashSet<(usize, usize)> = g.edges().into_iter().collect();
    for slot in flips {
        if !edges.remove(&slot) {
            edges.insert(slot);
        }
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    g.with_edges(&edges)
}

fn global_flips(g: &Graph, rate: f64, spec: &PerturbSpec) -> Result<Vec<(usize, usize)>> {
    let n = g.n_nodes();
    let existing = g.edges();
    let k = global_flip_count(rate, existing.len());
    let (n_add, n_remove) = split_count(k, spec.add_remove_mix);
    let pairs = n * n.saturating_sub(1) / 2;
    let non_edges = pairs - existing.len();
    if n_remove > existing.len() {
        return Err(Error::InfeasiblePerturbation(format!(
            "{n_remove} removals requested but the graph has {} edges",
            existing.len()
        )));
    }
    if n_add > non_edges {
        return Err(Error::InfeasiblePerturbation(format!(
            "{n_add} additions requested but only {non_edges} non-edges exist"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out: Vec<(usize, usize)> = rand::seq::index::sample(&mut rng, existing.len(), n_remove)
        .into_iter()
        .map(|i| existing[i])
        .collect();
    out.sort_unstable();
    let mut added = Vec::with_capacity(n_add);
    if 2 * n_add <= non_edges {
        let mut chosen = HashSet::new();
        while added.len() < n_add {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            let slot = ordered(i, j);
            if i != j && !g.has_edge(i, j) && chosen.insert(slot) {
                added.push(slot);
            }
        }
    } else {
        let mut candidates: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.has_edge(i, j))
            .collect();
        candidates.shuffle(&mut rng);
        added.extend_from_slice(&candidates[..n_add]);
    }
    out.extend(added);
    Ok(out)
}

fn targeted_flips(
    g: &Graph,
    per_node: usize,
    targets: &[usize],
    spec: &PerturbSpec,
) -> Result<Vec<(usize, usize)>> {
    let n = g.n_nodes();
    let (n_add, n_remove) = split_count(per_node, spec.add_remove_mix);
    let mut flipped: HashSet<(usize, usize)> = HashSet::new();
    let mut out = Vec::new();
    for &t in targets {
        if t >= n {
            return Err(Error::NodeOutOfRange { index: t, n_nodes: n });
        }
        // Per-target stream: the candidate order does not depend on
        // `per_node`, so smaller budgets flip a prefix of larger ones.
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut remove: Vec<usize> = g.neighbors(t).iter().copied().filter(|&u| u != t).collect();
        let mut add: Vec<usize> = (0..n).filter(|&u| u != t && !g.has_edge(t, u)).collect();
        remove.shuffle(&mut rng);
        add.shuffle(&mut rng);
        for (pool, want, what) in [(remove, n_remove, "removals"), (add, n_add, "additions")] {
            let picked: Vec<_> = pool
                .into_iter()
                .map(|u| ordered(t, u))
                .filter(|slot| !flipped.contains(slot))
                .take(want)
                .collect();
            if picked.len() < want {
                return Err(Error::InfeasiblePerturbation(format!(
                    "target {t} admits only {} of {want} {what}",
                    picked.len()
                )));
            }
            flipped.extend(picked.iter().copied());
            out.extend(picked);
        }
    }
    Ok(out)
}

/// Nodes of `split` whose degree, self-loop excluded, exceeds `threshold`; ascending.
pub fn select_targets(g: &Graph, degree_threshold: usize, split: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = split
        .iter()
        .copied()
        .filter(|&i| i < g.n_nodes() && g.degree(i) > degree_threshold)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}
