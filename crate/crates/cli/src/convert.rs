//! Bundles from outside sources: citation datasets in the two-file
//! `.content` / `.cites` layout, and the block-model generator.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use asmp_core::graph::features_from_rows;
use asmp_core::io::{make_splits, SplitSpec};
use asmp_core::perturb::generate_sbm;
use asmp_core::Graph;
use clap::Subcommand;
use log::warn;

use crate::config::RunConfig;
use crate::output::Output;
use crate::CliError;

#[derive(Debug, Subcommand)]
pub enum Source {
    /// `<id> <feature>... <class>` lines plus `<cited> <citing>` lines.
    Citation {
        #[arg(long)]
        content: PathBuf,
        #[arg(long)]
        cites: PathBuf,
    },
    /// Sample a block model from the config's `sbm_*` keys and attach splits.
    Sbm,
}

pub fn run(source: &Source, cfg: &RunConfig) -> Result<Output, CliError> {
    let mut out = Output::default();
    match source {
        Source::Citation { content, cites } => {
            let g = citation(content, cites)?;
            out.bundle("bundle", g, true);
        }
        Source::Sbm => {
            let g = generate_sbm(&cfg.sbm_spec())?;
            let spec = SplitSpec {
                train: cfg.train_fraction,
                val: cfg.val_fraction,
                test: cfg.test_fraction,
                seed: cfg.seed,
            };
            let splits = make_splits(&g, &spec)?;
            out.bundle("bundle", g.with_splits(splits)?, false);
        }
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn citation(content: &Path, cites: &Path) -> Result<Graph, CliError> {
    let bad = |file: &Path, line: usize, msg: &str| {
        CliError::Config(format!("{}:{}: {msg}", file.display(), line + 1))
    };
    let mut ids = HashMap::new();
    let mut rows = Vec::new();
    let mut class_names = Vec::new();
    for (i, line) in read(content)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(bad(content, i, "expected an id, features and a class"));
        }
        if ids.insert(fields[0].to_string(), rows.len()).is_some() {
            return Err(bad(content, i, "duplicate node id"));
        }
        let row = fields[1..fields.len() - 1]
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| bad(content, i, "feature is not a number")))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
        class_names.push(fields[fields.len() - 1].to_string());
    }
    // Classes are numbered in sorted name order.
    let classes: BTreeMap<&str, usize> = class_names
        .iter()
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(k, name)| (name, k))
        .collect();
    let labels = class_names.iter().map(|c| Some(classes[c.as_str()])).collect();

    let mut edges = BTreeSet::new();
    let mut dangling = 0usize;
    for (i, line) in read(cites)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [a, b] = fields[..] else {
            return Err(bad(cites, i, "expected two node ids"));
        };
        match (ids.get(a), ids.get(b)) {
            (Some(&u), Some(&v)) if u != v => {
                edges.insert((u.min(v), u.max(v)));
            }
            (Some(_), Some(_)) => {}
            _ => dangling += 1,
        }
    }
    if dangling > 0 {
        warn!("skipped {dangling} citation lines naming unknown nodes");
    }
    let edges: Vec<_> = edges.into_iter().collect();
    let features = features_from_rows(&rows)?;
    Ok(Graph::build(&edges, features, labels, classes.len(), true)?)
}
