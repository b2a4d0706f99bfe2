use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use asmp_core::io::{load_bundle, make_splits, SplitSpec};
use asmp_core::model::{
    accuracy, checkpoint_to_text, clean_graph_loss_probe, evaluate, load_checkpoint, train, ClassifierModel,
};
use asmp_core::perturb::{perturb, select_targets, PerturbSpec};
use asmp_core::solver::run_asmp;
use asmp_core::{Graph, Problem, SolverOptions};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AttackKind, RunConfig};
use crate::output::{matrix_csv, Output};
use crate::CliError;

pub fn denoise(bundle: &Path, cfg: &RunConfig) -> Result<Output, CliError> {
    let g = load_bundle(bundle)?;
    let a = g.adjacency();
    let prob = Problem::new(g.features().view(), a.view(), cfg.normalization)?;
    let opts = SolverOptions {
        policy: cfg.step_policy,
        update_structure: cfg.update_structure,
        symmetrize: cfg.symmetrize,
        early_stop: cfg.early_stop,
        keep_propagators: false,
        trace_energy: true,
    };
    let run = run_asmp(&prob, &cfg.asmp(), &opts)?;
    info!("denoise: {} iterations, final objective {}", run.trace.len(), run.trace.totals().last().unwrap());

    let s = run.s.values();
    let mut edges = Vec::new();
    for i in 0..s.nrows() {
        for j in i + 1..s.ncols() {
            if 0.5 * (s[[i, j]] + s[[j, i]]) >= cfg.edge_threshold {
                edges.push((i, j));
            }
        }
    }
    let denoised = g.with_edges(&edges)?.with_features(run.h.clone())?;

    let mut out = Output::default();
    out.file("trace.csv", run.trace.to_csv());
    out.file("h.csv", matrix_csv(&run.h));
    out.file("s.csv", matrix_csv(s));
    out.bundle("denoised", denoised, false);
    Ok(out)
}

fn trial_graph(g: &Graph, cfg: &RunConfig, seed: u64) -> Result<Graph, CliError> {
    if g.splits().is_some() && !cfg.resplit {
        return Ok(g.clone());
    }
    let spec = SplitSpec {
        train: cfg.train_fraction,
        val: cfg.val_fraction,
        test: cfg.test_fraction,
        seed,
    };
    let splits = make_splits(g, &spec)?;
    Ok(g.clone().with_splits(splits)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModelKind {
    Asgnn,
    Baseline,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            ModelKind::Asgnn => "asgnn",
            ModelKind::Baseline => "baseline",
        }
    }
}

fn model_kinds(cfg: &RunConfig) -> Vec<ModelKind> {
    if cfg.baseline {
        vec![ModelKind::Asgnn, ModelKind::Baseline]
    } else {
        vec![ModelKind::Asgnn]
    }
}

#[derive(Debug, Clone, Serialize)]
struct TrialResult {
    trial: usize,
    seed: u64,
    model: ModelKind,
    test_accuracy: f64,
    test_loss: f64,
    val_accuracy: f64,
    best_epoch: usize,
    epochs_run: usize,
    gamma: f64,
    lambda: f64,
    mu1: f64,
    mu2: f64,
    eta1: f64,
    eta2: f64,
}

struct Fitted {
    model: ClassifierModel,
    result: TrialResult,
}

/// Trains one model on `g` and evaluates it on the test split.
fn fit(g: &Graph, cfg: &RunConfig, kind: ModelKind, trial: usize, seed: u64) -> Result<Fitted, CliError> {
    let update = kind == ModelKind::Asgnn && cfg.update_structure;
    let tc = cfg.train_config();
    let mut model = ClassifierModel::new(
        g.n_features(),
        tc.hidden,
        g.n_classes(),
        cfg.asmp(),
        cfg.normalization,
        update,
        seed,
    );
    model.policy = cfg.model_step_policy;
    model.center_logits = cfg.center_logits;
    let (model, history) = train(&model, g, &tc)?;
    let splits = g.splits().expect("trial graphs carry splits");
    let (test_accuracy, test_loss) = evaluate(&model, g, &splits.test)?;
    let val_accuracy = match history.best_epoch {
        0 => evaluate(&model, g, &splits.val)?.0,
        e => history.val_acc[e - 1],
    };
    let p = model.asmp;
    info!("trial {trial} {}: test accuracy {test_accuracy:.4}", kind.name());
    Ok(Fitted {
        result: TrialResult {
            trial,
            seed,
            model: kind,
            test_accuracy,
            test_loss,
            val_accuracy,
            best_epoch: history.best_epoch,
            epochs_run: history.train_loss.len(),
            gamma: p.gamma,
            lambda: p.lambda,
            mu1: p.mu1,
            mu2: p.mu2,
            eta1: p.eta1,
            eta2: p.eta2,
        },
        model,
    })
}

#[derive(Debug, Serialize)]
struct Summary {
    trials: usize,
    mean_accuracy: f64,
    std_accuracy: f64,
    mean_loss: f64,
    std_loss: f64,
}

/// Mean and population standard deviation.
fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn summarize(results: &[TrialResult], kind: ModelKind) -> Summary {
    let acc: Vec<f64> = results.iter().filter(|r| r.model == kind).map(|r| r.test_accuracy).collect();
    let loss: Vec<f64> = results.iter().filter(|r| r.model == kind).map(|r| r.test_loss).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&acc);
    let (mean_loss, std_loss) = mean_std(&loss);
    Summary {
        trials: acc.len(),
        mean_accuracy,
        std_accuracy,
        mean_loss,
        std_loss,
    }
}

pub fn train_eval(bundle: &Path, cfg: &RunConfig) -> Result<Output, CliError> {
    let g = load_bundle(bundle)?;
    let kinds = model_kinds(cfg);
    let cells: Vec<(usize, ModelKind)> = (0..cfg.trials)
        .flat_map(|t| kinds.iter().map(move |&k| (t, k)))
        .collect();
    let fitted = cells
        .par_iter()
        .map(|&(trial, kind)| {
            let seed = cfg.trial_seed(trial);
            fit(&trial_graph(&g, cfg, seed)?, cfg, kind, trial, seed)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = Output::default();
    let results: Vec<TrialResult> = fitted.iter().map(|f| f.result.clone()).collect();
    for f in &fitted {
        let name = format!("checkpoints/{}_trial{}.txt", f.result.model.name(), f.result.trial);
        out.file(name, checkpoint_to_text(&f.model));
    }
    let summary: BTreeMap<&str, Summary> = kinds.iter().map(|&k| (k.name(), summarize(&results, k))).collect();
    let json = serde_json::json!({ "trials": results, "summary": summary });
    out.file("metrics.json", serde_json::to_string_pretty(&json).expect("serializable") + "\n");
    Ok(out)
}

const SWEEP_HEADER: &str = "level,model,trial,seed,flips,test_accuracy,test_loss,target_accuracy,probe_loss";

pub fn attack_sweep(bundle: &Path, cfg: &RunConfig) -> Result<Output, CliError> {
    let g = load_bundle(bundle)?;
    let levels: Vec<String> = match cfg.attack {
        AttackKind::Global => cfg.global_rates.iter().map(|r| format!("{r:?}")).collect(),
        AttackKind::Targeted => cfg.targeted_counts.iter().map(|c| c.to_string()).collect(),
    };
    let kinds = model_kinds(cfg);
    let cells: Vec<(usize, ModelKind, usize)> = (0..levels.len())
        .flat_map(|l| kinds.iter().flat_map(move |&k| (0..cfg.trials).map(move |t| (l, k, t))))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(level, kind, trial)| -> Result<String, CliError> {
            let seed = cfg.trial_seed(trial);
            let clean = trial_graph(&g, cfg, seed)?;
            let test = &clean.splits().expect("trial graphs carry splits").test;
            let targets = select_targets(&clean, cfg.degree_threshold, test);
            let spec = match cfg.attack {
                AttackKind::Global => PerturbSpec::global(cfg.global_rates[level], cfg.add_remove_mix, seed),
                AttackKind::Targeted => PerturbSpec::targeted(
                    cfg.targeted_counts[level],
                    targets.clone(),
                    cfg.add_remove_mix,
                    seed,
                ),
            };
            let attacked = perturb(&clean, &spec)?;
            let flips = symmetric_difference(&clean, &attacked);
            let fitted = fit(&attacked, cfg, kind, trial, seed)?;
            let probe = clean_graph_loss_probe(&fitted.model, &attacked, &clean)?;
            let target_accuracy = match cfg.attack {
                AttackKind::Targeted if !targets.is_empty() => {
                    let scores = fitted.model.forward(&attacked, attacked.features().view())?;
                    format!("{:?}", accuracy(scores.view(), attacked.labels(), &targets, "targets")?)
                }
                _ => String::new(),
            };
            let r = &fitted.result;
            Ok(format!(
                "{},{},{},{},{},{:?},{:?},{},{:?}",
                levels[level],
                kind.name(),
                trial,
                seed,
                flips,
                r.test_accuracy,
                r.test_loss,
                target_accuracy,
                probe
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for row in rows {
        writeln!(csv, "{row}").unwrap();
    }
    let mut out = Output::default();
    out.file("sweep.csv", csv);
    Ok(out)
}

fn symmetric_difference(a: &Graph, b: &Graph) -> usize {
    let ea: std::collections::BTreeSet<_> = a.edges().into_iter().collect();
    let eb: std::collections::BTreeSet<_> = b.edges().into_iter().collect();
    ea.symmetric_difference(&eb).count()
}

#[derive(Debug, Serialize)]
struct ConvergenceSummary {
    policy: String,
    source: &'static str,
    layers: usize,
    monotone: bool,
    non_monotone_layers: Vec<usize>,
}

pub fn convergence_report(bundle: &Path, cfg: &RunConfig) -> Result<Output, CliError> {
    let g = load_bundle(bundle)?;
    let (x, mut asmp, normalization, policy, update_structure, source) = match &cfg.checkpoint {
        Some(path) => {
            let m = load_checkpoint(path)?;
            if m.mlp.n_in() != g.n_features() {
                return Err(CliError::Config(format!(
                    "checkpoint expects {} features, bundle has {}",
                    m.mlp.n_in(),
                    g.n_features()
                )));
            }
            let x = m.transform(g.features().view());
            (x, m.asmp, m.normalization, m.policy, m.update_structure, "checkpoint")
        }
        None => (
            g.features().clone(),
            cfg.asmp(),
            cfg.normalization,
            cfg.step_policy,
            cfg.update_structure,
            "config",
        ),
    };
    asmp.k_layers = cfg.extended_layers;
    let a = g.adjacency();
    let prob = Problem::new(x.view(), a.view(), normalization)?;
    let opts = SolverOptions {
        policy,
        update_structure,
        symmetrize: cfg.symmetrize,
        ..SolverOptions::default()
    };
    let run = run_asmp(&prob, &asmp, &opts)?;

    let totals: Vec<f64> = run.trace.records.iter().map(|r| r.energy.total).collect();
    let mut csv = String::from("layer,objective,normalized,increase\n");
    let mut flagged = Vec::new();
    let mut prev = f64::NAN;
    for (i, &t) in totals.iter().enumerate() {
        let normalized = t / totals[0];
        let increase = i > 0 && normalized > prev + cfg.monotone_slack;
        if increase {
            flagged.push(i + 1);
        }
        writeln!(csv, "{},{:?},{:?},{}", i + 1, t, normalized, u8::from(increase)).unwrap();
        prev = normalized;
    }
    let summary = ConvergenceSummary {
        policy: policy.to_string(),
        source,
        layers: totals.len(),
        monotone: flagged.is_empty(),
        non_monotone_layers: flagged,
    };
    let mut out = Output::default();
    out.file("convergence.csv", csv);
    out.file("convergence.json", serde_json::to_string_pretty(&summary).expect("serializable") + "\n");
    Ok(out)
}
