//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero if any fail.
//!
//! Run with `cargo test -p asmp-cli --test acceptance` (add `--release` for
//! timings that mean something).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use asmp_core::energy::{grad_h, grad_s, objective};
use asmp_core::graph::normalize;
use asmp_core::io::{load_bundle, make_splits, save_bundle, SplitSpec};
use asmp_core::model::{
    checkpoint_from_text, checkpoint_to_text, clean_graph_loss_probe, evaluate, load_checkpoint,
    save_checkpoint, train, ClassifierModel, TrainConfig,
};
use asmp_core::ndarray::{Array2, Zip};
use asmp_core::perturb::{generate_sbm, perturb, select_targets, PerturbSpec, SbmSpec};
use asmp_core::solver::{h_step, prox_box_l1, rate_check, run_asmp, run_joint};
use asmp_core::{AsmpParams, Graph, Normalization, Problem, SolverOptions, StepSizePolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fro(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn within(limit_s: f64, t: Instant) -> (bool, f64) {
    let secs = t.elapsed().as_secs_f64();
    (secs < limit_s, secs)
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

/// Symmetric 0/1 adjacency with a unit diagonal.
fn random_adjacency(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Array2<f64> {
    let mut a = Array2::eye(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                a[[i, j]] = 1.0;
                a[[j, i]] = 1.0;
            }
        }
    }
    a
}

fn small_sbm(seed: u64) -> Graph {
    generate_sbm(&SbmSpec {
        block_sizes: vec![25, 25],
        p_in: 0.3,
        p_out: 0.05,
        means: SbmSpec::one_hot_means(2, 4, 1.0),
        noise: 0.5,
        seed,
    })
    .unwrap()
}

fn prox_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid: Vec<f64> = (0..=10_000).map(|i| i as f64 * 1e-4).collect();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.random_range(-1.5..2.5);
        let kappa = rng.random_range(0.0..1.0);
        let got = prox_box_l1(Array2::from_elem((1, 1), m).view(), kappa).unwrap()[[0, 0]];
        let f = |s: f64| 0.5 * (s - m) * (s - m) + kappa * s.abs();
        let best = grid
            .iter()
            .copied()
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        worst = worst.max((got - best).abs());
    }
    let (fast, secs) = within(1.0, t);
    outcome(worst <= 1e-4 && fast, format!("max_err={worst:.2e} time={secs:.2}s"))
}

/// Central differences of `f` over every entry of `at`.
fn central_differences(at: &Array2<f64>, step: f64, f: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
    let mut out = Array2::zeros(at.dim());
    let mut probe = at.clone();
    for idx in 0..at.len() {
        let (i, j) = (idx / at.ncols(), idx % at.ncols());
        let orig = probe[[i, j]];
        probe[[i, j]] = orig + step;
        let up = f(&probe);
        probe[[i, j]] = orig - step;
        let down = f(&probe);
        probe[[i, j]] = orig;
        out[[i, j]] = (up - down) / (2.0 * step);
    }
    out
}

fn gradient_oracles() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for inst in 0..50 {
        let n = rng.random_range(2..=10);
        let m = rng.random_range(1..=4);
        let norm = if inst % 2 == 0 { Normalization::Rw } else { Normalization::Sym };
        let x = uniform(&mut rng, n, m, -1.0, 1.0);
        let a = random_adjacency(&mut rng, n, 0.4);
        let h = uniform(&mut rng, n, m, -1.0, 1.0);
        let s = uniform(&mut rng, n, n, 0.05, 0.95);
        let p = AsmpParams {
            gamma: rng.random_range(0.0..2.0),
            lambda: rng.random_range(0.0..3.0),
            // The l1 term is handled by the prox, not the gradient.
            mu1: 0.0,
            mu2: rng.random_range(0.0..1.0),
            ..AsmpParams::default()
        };
        let prob = Problem::new(x.view(), a.view(), norm).unwrap();
        let total = |hh: &Array2<f64>, ss: &Array2<f64>| objective(&prob, hh.view(), ss.view(), &p).unwrap().total;
        let fd_h = central_differences(&h, 1e-6, |hh| total(hh, &s));
        let fd_s = central_differences(&s, 1e-6, |ss| total(&h, ss));
        let gh = grad_h(&prob, h.view(), s.view(), &p).unwrap();
        let gs = grad_s(&prob, h.view(), s.view(), &p).unwrap();
        let rel = |g: &Array2<f64>, fd: &Array2<f64>| fro(&(g - fd)) / fro(fd).max(1e-8);
        worst = worst.max(rel(&gh, &fd_h)).max(rel(&gs, &fd_s));
    }
    let (fast, secs) = within(10.0, t);
    outcome(worst <= 1e-4 && fast, format!("max_rel_err={worst:.2e} time={secs:.2}s"))
}

fn descent_and_feasibility() -> Outcome {
    let t = Instant::now();
    let p = AsmpParams { k_layers: 30, ..AsmpParams::default() };
    let mut bad = Vec::new();
    for seed in 0..20 {
        let g = small_sbm(seed);
        let a = g.adjacency();
        let prob = Problem::new(g.features().view(), a.view(), Normalization::Rw).unwrap();
        let run = run_asmp(&prob, &p, &SolverOptions::default()).unwrap();
        let monotone = run.trace.increases(1e-10).is_empty();
        let boxed = run.s.values().iter().all(|v| (0.0..=1.0).contains(v));
        let rate = rate_check(&run.trace, run.trace.min_rho(), run.trace.best_total()).unwrap();
        if !(monotone && boxed && rate.holds()) {
            bad.push(format!("seed {seed}: monotone={monotone} box={boxed} rate_violations={}", rate.violations.len()));
        }
    }
    let (fast, secs) = within(30.0, t);
    outcome(bad.is_empty() && fast, format!("failing={bad:?} time={secs:.2}s"))
}

fn special_cases() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 30;
    let a = random_adjacency(&mut rng, n, 0.15);
    let x = uniform(&mut rng, n, 3, -1.0, 1.0);
    let prob = Problem::new(x.view(), a.view(), Normalization::Sym).unwrap();

    // Propagation with teleport back to the input, written out by hand.
    let deg: Vec<f64> = a.rows().into_iter().map(|r| r.sum()).collect();
    let a_hat = Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] / (deg[i] * deg[j]).sqrt());
    let lambda = 2.0;
    let alpha = 1.0 / (1.0 + lambda);
    let opts = SolverOptions { policy: StepSizePolicy::Fixed, update_structure: false, ..SolverOptions::default() };
    let mut reference = x.clone();
    let mut worst = 0.0f64;
    for k in 1..=16 {
        reference = a_hat.dot(&reference) * (1.0 - alpha) + &x * alpha;
        let p = AsmpParams { lambda, eta1: 1.0 / (2.0 + 2.0 * lambda), k_layers: k, ..AsmpParams::default() };
        let h = run_asmp(&prob, &p, &opts).unwrap().h;
        Zip::from(&h).and(&reference).for_each(|u, v| worst = worst.max((u - v).abs()));
    }

    let lambda = 1e6;
    let p = AsmpParams { lambda, ..AsmpParams::default() };
    let h = uniform(&mut rng, n, 3, -1.0, 1.0);
    let stepped = h_step(&prob, h.view(), a.view(), &p, 1.0 / (2.0 + 2.0 * lambda)).unwrap();
    let aggregated = normalize(a.view(), Normalization::Sym, prob.degree_floor).dot(&h);
    let rel = fro(&(&stepped - &aggregated)) / fro(&aggregated);

    outcome(
        worst <= 1e-10 && rel <= 1e-5,
        format!("recursion_max_err={worst:.2e} aggregation_rel_err={rel:.2e}"),
    )
}

/// First index of `totals` at or below `threshold`.
fn reach(totals: &[f64], threshold: f64) -> Option<usize> {
    totals.iter().position(|&v| v <= threshold)
}

fn alternating_vs_joint() -> Outcome {
    let p = AsmpParams { k_layers: 200, ..AsmpParams::default() };
    let mut wins = 0;
    let mut counts = Vec::new();
    for seed in 0..20 {
        let g = small_sbm(100 + seed);
        let a = g.adjacency();
        let prob = Problem::new(g.features().view(), a.view(), Normalization::Rw).unwrap();
        let alt = run_asmp(&prob, &p, &SolverOptions::default()).unwrap().trace;
        let joint = run_joint(&prob, &p, &SolverOptions::default()).unwrap().trace;
        let threshold = alt.best_total().min(joint.best_total()) + 1e-3;
        let (ka, kj) = (reach(&alt.totals(), threshold), reach(&joint.totals(), threshold));
        let win = match (ka, kj) {
            (Some(x), Some(y)) => x <= y,
            (Some(_), None) => true,
            _ => false,
        };
        wins += usize::from(win);
        counts.push(format!("{}/{}", fmt_opt(ka), fmt_opt(kj)));
    }
    outcome(wins >= 15, format!("wins={wins}/20 iterations(alt/joint)=[{}]", counts.join(" ")))
}

fn fmt_opt(k: Option<usize>) -> String {
    k.map_or("-".into(), |v| v.to_string())
}

// Settings for the robustness comparisons. Chosen on seeds 1000 and up,
// which the checks below never touch.
const ROBUST_SEEDS: std::ops::Range<u64> = 0..10;
const FEATURE_DIMS: usize = 8;

fn robust_params() -> AsmpParams {
    let lambda = 4.0;
    AsmpParams {
        gamma: 0.1,
        lambda,
        mu1: 0.1,
        mu2: 0.01,
        eta1: 0.9 * 2.0 / (2.0 + 4.0 * lambda),
        eta2: 0.005,
        k_layers: 8,
        h_steps_per_iter: 1,
        s_steps_per_iter: 1,
    }
}

fn robust_train_config() -> TrainConfig {
    TrainConfig { hidden: 32, ..TrainConfig::default() }
}

fn robust_graph(seed: u64) -> Graph {
    let g = generate_sbm(&SbmSpec {
        block_sizes: vec![100, 100],
        p_in: 0.1,
        p_out: 0.01,
        means: SbmSpec::one_hot_means(2, FEATURE_DIMS, 1.0),
        noise: 1.0,
        seed,
    })
    .unwrap();
    let splits = make_splits(&g, &SplitSpec { seed, ..SplitSpec::default() }).unwrap();
    g.with_splits(splits).unwrap()
}

struct Fit {
    accuracy: f64,
    probe: f64,
}

/// Trains both models on `perturbed`; ASGNN first.
fn fit_pair(perturbed: &Graph, clean: &Graph, seed: u64) -> [Fit; 2] {
    let cfg = robust_train_config();
    [true, false].map(|update| {
        let mut m = ClassifierModel::new(
            FEATURE_DIMS,
            cfg.hidden,
            2,
            robust_params(),
            Normalization::Rw,
            update,
            seed,
        );
        m.center_logits = true;
        let (m, _) = train(&m, perturbed, &cfg).unwrap();
        let test = &perturbed.splits().unwrap().test;
        let (accuracy, _) = evaluate(&m, perturbed, test).unwrap();
        let probe = clean_graph_loss_probe(&m, perturbed, clean).unwrap();
        Fit { accuracy, probe }
    })
}

fn robustness_trend() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for rate in [0.15, 0.2, 0.25] {
        let (mut wins, mut sum_a, mut sum_b) = (0, 0.0, 0.0);
        for seed in ROBUST_SEEDS {
            let g = robust_graph(seed);
            let pg = perturb(&g, &PerturbSpec::global(rate, 0.5, seed)).unwrap();
            let [asgnn, base] = fit_pair(&pg, &g, seed);
            wins += usize::from(asgnn.accuracy > base.accuracy);
            sum_a += asgnn.accuracy;
            sum_b += base.accuracy;
        }
        let n = ROBUST_SEEDS.count() as f64;
        pass &= wins >= 7;
        parts.push(format!("rate {rate}: wins={wins}/10 mean={:.4} vs {:.4}", sum_a / n, sum_b / n));
    }
    let (fast, secs) = within(600.0, t);
    outcome(pass && fast, format!("{} time={secs:.1}s", parts.join("; ")))
}

fn clean_loss_trend() -> Outcome {
    let counts = [3usize, 4, 5];
    let mut wins = [0usize; 3];
    let mut ordered = [0usize; 2];
    for seed in ROBUST_SEEDS {
        let g = robust_graph(seed);
        let targets = select_targets(&g, 10, &g.splits().unwrap().test);
        let mut probes = [[0.0; 3]; 2];
        for (c, &count) in counts.iter().enumerate() {
            let pg = perturb(&g, &PerturbSpec::targeted(count, targets.clone(), 0.5, seed)).unwrap();
            let fits = fit_pair(&pg, &g, seed);
            wins[c] += usize::from(fits[0].probe <= fits[1].probe);
            probes[0][c] = fits[0].probe;
            probes[1][c] = fits[1].probe;
        }
        for (model, row) in probes.iter().enumerate() {
            ordered[model] += usize::from(row.windows(2).all(|w| w[0] <= w[1]));
        }
    }
    let pass = wins.iter().all(|&w| w >= 7) && ordered.iter().all(|&o| o >= 7);
    outcome(
        pass,
        format!(
            "probe wins at 3/4/5={}/{}/{} of 10, non-decreasing asgnn={}/10 baseline={}/10",
            wins[0], wins[1], wins[2], ordered[0], ordered[1]
        ),
    )
}

fn asmp(dir: &Path, config: &str, args: &[&str]) -> Result<(), String> {
    let cfg_path = dir.join(format!("config-{}.txt", args.join("-").replace('/', "_")));
    fs::write(&cfg_path, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_asmp"))
        .arg("--config")
        .arg(&cfg_path)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn write_sbm_bundle(dir: &Path, seed: u64) -> PathBuf {
    let out = dir.join(format!("sbm{seed}"));
    let cfg = format!("seed = {seed}\nsbm_block_sizes = 30,30\nsbm_dims = 4\n");
    asmp(dir, &cfg, &["--out", out.to_str().unwrap(), "convert", "sbm"]).unwrap();
    out.join("bundle")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn convergence_reports() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut failures = Vec::new();
    for seed in 0..5 {
        let bundle = write_sbm_bundle(dir, seed);
        let out = dir.join(format!("conv{seed}"));
        let cfg = "step_policy = theorem_safe\nextended_layers = 20\n";
        asmp(dir, cfg, &["--out", out.to_str().unwrap(), "convergence-report", bundle.to_str().unwrap()]).unwrap();
        let report = json(&out.join("convergence.json"));
        if report["monotone"] != true || report["layers"] != 20 {
            failures.push(format!("theorem_safe seed {seed}: {report}"));
        }
    }

    // A model trained with learned step sizes, then its report.
    let bundle = dir.join("sbm0/bundle");
    let trained = dir.join("learned");
    let cfg = "trials = 1\nepochs = 30\nk_layers = 4\nhidden = 16\nmodel_step_policy = learned\nhyperparam_mode = learned_fd\n";
    asmp(dir, cfg, &["--out", trained.to_str().unwrap(), "train-eval", bundle.to_str().unwrap()]).unwrap();
    let ckpt = trained.join("checkpoints/asgnn_trial0.txt");
    let out = dir.join("conv-learned");
    let cfg = format!("checkpoint = {}\nextended_layers = 20\n", ckpt.display());
    asmp(dir, &cfg, &["--out", out.to_str().unwrap(), "convergence-report", bundle.to_str().unwrap()]).unwrap();
    let report = json(&out.join("convergence.json"));
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let flagged_rows: Vec<u64> = csv
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",1"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    let listed: Vec<u64> = report["non_monotone_layers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    let consistent = report["policy"] == "learned"
        && report["layers"] == 20
        && listed == flagged_rows
        && report["monotone"] == listed.is_empty();
    if !consistent {
        failures.push(format!("learned report inconsistent: {report}"));
    }
    outcome(
        failures.is_empty(),
        format!("theorem_safe monotone on 5/5 bundles required; learned flags={listed:?}; failures={failures:?}"),
    )
}

/// Every file under `dir`, relative path and contents, sorted by path.
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let bundle = write_sbm_bundle(dir, 7);
    let b = bundle.to_str().unwrap().to_string();
    let common = "seed = 3\nthreads = 2\ntrials = 2\nepochs = 15\nk_layers = 3\nhidden = 8\n";
    let runs: Vec<(&str, String, Vec<String>)> = vec![
        ("convert", format!("{common}sbm_block_sizes = 20,20\n"), vec!["convert".into(), "sbm".into()]),
        ("denoise", common.to_string(), vec!["denoise".into(), b.clone()]),
        ("train-eval", common.to_string(), vec!["train-eval".into(), b.clone()]),
        (
            "attack-global",
            format!("{common}global_rates = 0,0.1\n"),
            vec!["attack-sweep".into(), b.clone()],
        ),
        (
            "attack-targeted",
            format!("{common}attack = targeted\ntargeted_counts = 0,2\ndegree_threshold = 3\n"),
            vec!["attack-sweep".into(), b.clone()],
        ),
        ("convergence", common.to_string(), vec!["convergence-report".into(), b.clone()]),
    ];
    let mut differing = Vec::new();
    for (name, cfg, args) in &runs {
        let mut snaps = Vec::new();
        for rep in 0..2 {
            let out = dir.join(format!("{name}-{rep}"));
            let mut full = vec!["--out".to_string(), out.to_str().unwrap().to_string()];
            full.extend(args.iter().cloned());
            let refs: Vec<&str> = full.iter().map(String::as_str).collect();
            if let Err(e) = asmp(dir, cfg, &refs) {
                differing.push(format!("{name}: {e}"));
                break;
            }
            snaps.push(snapshot(&out));
        }
        if snaps.len() == 2 && (snaps[0] != snaps[1] || snaps[0].is_empty()) {
            differing.push(name.to_string());
        }
    }
    outcome(
        differing.is_empty(),
        format!("commands={} differing={differing:?}", runs.len()),
    )
}

fn awkward(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..6) {
        0 => 0.0,
        1 => -0.0,
        2 => rng.random_range(-1e-300..1e-300),
        3 => rng.random_range(-1e300..1e300),
        4 => 1.0 / 3.0,
        _ => rng.random_range(-10.0..10.0),
    }
}

fn random_graph(rng: &mut ChaCha8Rng) -> Graph {
    let n = rng.random_range(1..=30);
    let m = rng.random_range(1..=5);
    let classes = rng.random_range(1..=4);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.2) {
                edges.push((i, j));
            }
        }
    }
    let features = Array2::from_shape_fn((n, m), |_| awkward(rng));
    let labels = (0..n)
        .map(|_| rng.random_bool(0.8).then(|| rng.random_range(0..classes)))
        .collect();
    // Bundles always carry the unit diagonal.
    let g = Graph::build(&edges, features, labels, classes, true).unwrap();
    if rng.random_bool(0.5) {
        let spec = SplitSpec { seed: rng.random(), ..SplitSpec::default() };
        if let Ok(splits) = make_splits(&g, &spec) {
            return g.with_splits(splits).unwrap();
        }
    }
    g
}

fn random_model(rng: &mut ChaCha8Rng) -> ClassifierModel {
    let p = AsmpParams {
        gamma: rng.random_range(0.0..5.0),
        lambda: rng.random_range(-1.0..5.0),
        mu1: rng.random_range(0.0..1.0),
        mu2: rng.random_range(0.0..1.0),
        eta1: rng.random_range(1e-6..1.0),
        eta2: rng.random_range(1e-9..1.0),
        k_layers: rng.random_range(0..20),
        h_steps_per_iter: rng.random_range(1..4),
        s_steps_per_iter: rng.random_range(1..4),
    };
    let norm = if rng.random_bool(0.5) { Normalization::Rw } else { Normalization::Sym };
    let mut m = ClassifierModel::new(
        rng.random_range(1..8),
        rng.random_range(1..8),
        rng.random_range(1..5),
        p,
        norm,
        rng.random_bool(0.5),
        rng.random(),
    );
    m.policy = [StepSizePolicy::TheoremSafe, StepSizePolicy::Fixed, StepSizePolicy::Learned][rng.random_range(0..3)];
    m.center_logits = rng.random_bool(0.5);
    let params: Vec<f64> = (0..m.mlp.n_params()).map(|_| awkward(rng)).collect();
    m.mlp.set_params(&params);
    m
}

fn bits(m: &ClassifierModel) -> Vec<u64> {
    m.mlp.params().iter().map(|v| v.to_bits()).collect()
}

fn round_trips() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = Vec::new();
    for i in 0..50 {
        let g = random_graph(&mut rng);
        let dir = tmp.path().join(format!("g{i}"));
        save_bundle(&g, &dir).unwrap();
        let back = load_bundle(&dir).unwrap();
        let feature_bits = |g: &Graph| g.features().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        if back != g || feature_bits(&back) != feature_bits(&g) {
            failures.push(format!("bundle {i}"));
        }

        let m = random_model(&mut rng);
        let path = tmp.path().join(format!("m{i}.txt"));
        save_checkpoint(&m, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        let text = checkpoint_to_text(&m);
        let reparsed = checkpoint_from_text(&text).unwrap();
        if back != m || bits(&back) != bits(&m) || checkpoint_to_text(&reparsed) != text {
            failures.push(format!("checkpoint {i}"));
        }
    }
    outcome(failures.is_empty(), format!("instances=50 failures={failures:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("prox oracle", prox_oracle),
        ("gradient oracles", gradient_oracles),
        ("descent and feasibility", descent_and_feasibility),
        ("special cases", special_cases),
        ("alternating vs joint", alternating_vs_joint),
        ("robustness trend", robustness_trend),
        ("clean-graph-loss trend", clean_loss_trend),
        ("convergence report", convergence_reports),
        ("determinism", determinism),
        ("round trips", round_trips),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let r = check();
        failed += usize::from(!r.pass);
        println!("{} criterion {:>2} {name}: {}", if r.pass { "PASS" } else { "FAIL" }, i + 1, r.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
