//! Graph bundles on disk and train/val/test split generation.
//!
//! A bundle is a directory holding:
//!
//! | file          | content                                                   |
//! |---------------|-----------------------------------------------------------|
//! | `edges.tsv`   | `i<TAB>j` per undirected non-loop edge, `i < j`, ascending |
//! | `features.csv`| `N` rows of `M` comma-separated `%.17g` floats             |
//! | `labels.txt`  | one class id per line, `-1` when unlabeled                 |
//! | `splits.json` | optional `{"train": [...], "val": [...], "test": [...]}`   |
//! | `meta.json`   | `{"n": N, "m": M, "classes": C, "lcc": bool}`              |

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::g17;
use crate::graph::{Graph, Splits};

pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.txt";
pub const SPLITS_FILE: &str = "splits.json";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub n: usize,
    pub m: usize,
    pub classes: usize,
    #[serde(default = "default_lcc")]
    pub lcc: bool,
}

fn default_lcc() -> bool {
    true
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::io(path, e)
        }
    })
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

/// Lines with the final empty line (after a trailing newline) dropped; 1-based numbers.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l))
}

fn parse_edges(text: &str, n: usize) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (line_no, line) in numbered_lines(text) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(parse_err(EDGES_FILE, line_no, format!("expected 2 columns, found {}", cols.len())));
        }
        let mut ends = [0usize; 2];
        for (slot, col) in ends.iter_mut().zip(&cols) {
            *slot = col
                .parse()
                .map_err(|_| parse_err(EDGES_FILE, line_no, format!("`{col}` is not a node index")))?;
            if *slot >= n {
                return Err(parse_err(EDGES_FILE, line_no, format!("node {} out of range for n = {n}", *slot)));
            }
        }
        edges.push((ends[0], ends[1]));
    }
    Ok(edges)
}

fn parse_features(text: &str, n: usize, m: usize) -> Result<Array2<f64>> {
    let lines: Vec<_> = numbered_lines(text).collect();
    if lines.len() != n {
        return Err(Error::CountMismatch(format!(
            "{FEATURES_FILE} has {} rows but meta.json declares n = {n}",
            lines.len()
        )));
    }
    let mut flat = Vec::with_capacity(n * m);
    for (line_no, line) in lines {
        let before = flat.len();
        if !line.is_empty() {
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| {
                    parse_err(FEATURES_FILE, line_no, format!("`{field}` is not a number"))
                })?;
                flat.push(v);
            }
        }
        if flat.len() - before != m {
            return Err(parse_err(
                FEATURES_FILE,
                line_no,
                format!("expected {m} columns, found {}", flat.len() - before),
            ));
        }
    }
    Ok(Array2::from_shape_vec((n, m), flat).expect("row lengths checked"))
}

fn parse_labels(text: &str, n: usize) -> Result<Vec<Option<usize>>> {
    let lines: Vec<_> = numbered_lines(text).collect();
    if lines.len() != n {
        return Err(Error::CountMismatch(format!(
            "{LABELS_FILE} has {} lines but meta.json declares n = {n}",
            lines.len()
        )));
    }
    lines
        .into_iter()
        .map(|(line_no, line)| match line.trim().parse::<i64>() {
            Ok(-1) => Ok(None),
            Ok(v) if v >= 0 => Ok(Some(v as usize)),
            _ => Err(parse_err(LABELS_FILE, line_no, format!("`{line}` is not a class id or -1"))),
        })
        .collect()
}

/// Reads a bundle; keeps only the largest connected component unless
/// `meta.json` sets `"lcc": false`.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<Graph> {
    let dir = dir.as_ref();
    let meta_text = read(dir, META_FILE)?;
    let meta: BundleMeta = serde_json::from_str(&meta_text)
        .map_err(|e| parse_err(META_FILE, e.line(), e.to_string()))?;
    let edges = parse_edges(&read(dir, EDGES_FILE)?, meta.n)?;
    let features = parse_features(&read(dir, FEATURES_FILE)?, meta.n, meta.m)?;
    let labels = parse_labels(&read(dir, LABELS_FILE)?, meta.n)?;
    let mut g = Graph::build(&edges, features, labels, meta.classes, true)?;
    let splits_path = dir.join(SPLITS_FILE);
    if splits_path.exists() {
        let text = read(dir, SPLITS_FILE)?;
        let splits: Splits = serde_json::from_str(&text)
            .map_err(|e| parse_err(SPLITS_FILE, e.line(), e.to_string()))?;
        g = g.with_splits(splits)?;
    }
    Ok(if meta.lcc { g.largest_connected_component() } else { g })
}

fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    let path: PathBuf = dir.join(name);
    fs::write(&path, content).map_err(|e| Error::io(path, e))
}

/// Writes `g` in canonical form. `lcc` is recorded as false so that loading
/// returns exactly `g`.
pub fn save_bundle(g: &Graph, dir: impl AsRef<Path>) -> Result<()> {
    save_bundle_with_lcc(g, dir, false)
}

/// Like [`save_bundle`], but records `lcc` so a later load can reduce the
/// graph to its largest component. Used for freshly converted datasets.
pub fn save_bundle_with_lcc(g: &Graph, dir: impl AsRef<Path>, lcc: bool) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut edges = String::new();
    for (i, j) in g.edges() {
        edges.push_str(&format!("{i}\t{j}\n"));
    }
    let mut features = String::new();
    for row in g.features().rows() {
        let fields: Vec<String> = row.iter().map(|&v| g17(v)).collect();
        features.push_str(&fields.join(","));
        features.push('\n');
    }
    let mut labels = String::new();
    for l in g.labels() {
        match l {
            Some(c) => labels.push_str(&format!("{c}\n")),
            None => labels.push_str("-1\n"),
        }
    }
    let meta = BundleMeta {
        n: g.n_nodes(),
        m: g.n_features(),
        classes: g.n_classes(),
        lcc,
    };
    write(dir, EDGES_FILE, &edges)?;
    write(dir, FEATURES_FILE, &features)?;
    write(dir, LABELS_FILE, &labels)?;
    write(dir, META_FILE, &serde_json::to_string(&meta).expect("plain struct"))?;
    let splits_path = dir.join(SPLITS_FILE);
    match g.splits() {
        Some(s) => write(dir, SPLITS_FILE, &serde_json::to_string(s).expect("plain struct"))?,
        None if splits_path.exists() => {
            fs::remove_file(&splits_path).map_err(|e| Error::io(splits_path, e))?
        }
        None => {}
    }
    Ok(())
}

/// Split fractions over labeled nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.1,
            val: 0.1,
            test: 0.8,
            seed: 0,
        }
    }
}

const FRACTION_EPS: f64 = 1e-9;

/// Shuffles the labeled nodes and cuts train, val and test from the front.
///
/// Train and val get `floor(f * L)` nodes for `L` labeled nodes. Test gets the
/// full remainder when the fractions sum to one, and `floor(f_test * L)` otherwise.
pub fn make_splits(g: &Graph, spec: &SplitSpec) -> Result<Splits> {
    let fractions = [("train", spec.train), ("val", spec.val), ("test", spec.test)];
    for (name, f) in fractions {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                value: f,
                reason: "split fraction must be positive",
            });
        }
    }
    let sum = spec.train + spec.val + spec.test;
    if sum > 1.0 + FRACTION_EPS {
        return Err(Error::InvalidParameter {
            name: "split fractions",
            value: sum,
            reason: "fractions must sum to at most 1",
        });
    }
    let mut pool: Vec<usize> = (0..g.n_nodes()).filter(|&i| g.labels()[i].is_some()).collect();
    let total = pool.len();
    let count = |f: f64| (f * total as f64 + FRACTION_EPS).floor() as usize;
    let n_train = count(spec.train);
    let n_val = count(spec.val);
    let n_test = if sum >= 1.0 - FRACTION_EPS {
        total.saturating_sub(n_train + n_val)
    } else {
        count(spec.test)
    };
    if n_train + n_val + n_test > total {
        return Err(Error::NotEnoughLabeled {
            available: total,
            requested: n_train + n_val + n_test,
        });
    }
    for (name, size) in [("train", n_train), ("val", n_val), ("test", n_test)] {
        if size == 0 {
            return Err(Error::EmptySplit(name));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    pool.shuffle(&mut rng);
    let take = |range: std::ops::Range<usize>| {
        let mut v = pool[range].to_vec();
        v.sort_unstable();
        v
    };
    Ok(Splits {
        train: take(0..n_train),
        val: take(n_train..n_train + n_val),
        test: take(n_train + n_val..n_train + n_val + n_test),
    })
}
