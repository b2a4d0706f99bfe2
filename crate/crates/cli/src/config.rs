//! `key = value` run configuration. Every key has a default; unknown or
//! repeated keys are errors. `#` starts a comment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use asmp_core::graph::Normalization;
use asmp_core::model::{HyperparamMode, TrainConfig};
use asmp_core::perturb::SbmSpec;
use asmp_core::solver::StepSizePolicy;
use asmp_core::AsmpParams;

use crate::CliError;

pub trait Value: Sized {
    fn parse_value(s: &str) -> Result<Self, String>;
    fn render(&self) -> String;
}

macro_rules! from_str_value {
    ($($t:ty),*) => {$(
        impl Value for $t {
            fn parse_value(s: &str) -> Result<Self, String> {
                s.parse().map_err(|e| format!("{e}"))
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

from_str_value!(usize, u64, bool, Normalization, StepSizePolicy, HyperparamMode, AttackKind);

impl Value for f64 {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("{e}"))
    }
    // Debug formatting is the shortest string that parses back to the same bits.
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

impl<T: Value> Value for Vec<T> {
    fn parse_value(s: &str) -> Result<Self, String> {
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|p| T::parse_value(p.trim())).collect()
    }
    fn render(&self) -> String {
        self.iter().map(Value::render).collect::<Vec<_>>().join(",")
    }
}

impl<T: Value> Value for Option<T> {
    fn parse_value(s: &str) -> Result<Self, String> {
        if s == "none" {
            Ok(None)
        } else {
            T::parse_value(s).map(Some)
        }
    }
    fn render(&self) -> String {
        self.as_ref().map_or_else(|| "none".to_string(), Value::render)
    }
}

impl Value for PathBuf {
    fn parse_value(s: &str) -> Result<Self, String> {
        Ok(PathBuf::from(s))
    }
    fn render(&self) -> String {
        self.display().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    Global,
    Targeted,
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttackKind::Global => "global",
            AttackKind::Targeted => "targeted",
        })
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "global" => Ok(AttackKind::Global),
            "targeted" => Ok(AttackKind::Targeted),
            other => Err(format!("unknown attack `{other}` (expected global or targeted)")),
        }
    }
}

macro_rules! run_config {
    ($($(#[doc = $doc:literal])* $key:ident : $t:ty = $default:expr;)*) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $($(#[doc = $doc])* pub $key: $t,)*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                RunConfig { $($key: $default,)* }
            }
        }

        impl RunConfig {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($key)),*];

            fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
                match key {
                    $(stringify!($key) => {
                        self.$key = <$t as Value>::parse_value(value)?;
                        Ok(())
                    })*
                    _ => Err(format!("unknown key `{key}`")),
                }
            }

            /// One `key = value` line per key, in declaration order.
            pub fn render(&self) -> String {
                let mut out = String::new();
                $(writeln!(out, "{} = {}", stringify!($key), Value::render(&self.$key)).unwrap();)*
                out
            }
        }
    };
}

run_config! {
    seed: u64 = 0;
    /// Worker threads for trials and sweep cells.
    threads: usize = 1;

    gamma: f64 = 1.0;
    lambda: f64 = 1.0;
    mu1: f64 = 0.01;
    mu2: f64 = 0.01;
    eta1: f64 = 0.3;
    eta2: f64 = 0.01;
    k_layers: usize = 10;
    h_steps_per_iter: usize = 1;
    s_steps_per_iter: usize = 1;
    normalization: Normalization = Normalization::Rw;
    /// Step policy of `denoise` and a fresh `convergence-report`.
    step_policy: StepSizePolicy = StepSizePolicy::TheoremSafe;
    /// Step policy of the classifier's propagation.
    model_step_policy: StepSizePolicy = StepSizePolicy::Fixed;
    symmetrize: bool = false;
    /// Center the perceptron's outputs per node before propagation.
    center_logits: bool = false;
    update_structure: bool = true;
    early_stop: Option<f64> = None;

    epochs: usize = 200;
    lr: f64 = 0.01;
    weight_decay: f64 = 5e-4;
    dropout: f64 = 0.5;
    hidden: usize = 64;
    hyperparam_mode: HyperparamMode = HyperparamMode::Fixed;
    fd_step: f64 = 1e-3;
    hyper_lr: f64 = 0.01;
    patience: usize = 100;
    trials: usize = 10;
    /// Trial `t` uses seed `seed + trial_seed_stride * t`.
    trial_seed_stride: u64 = 1;
    baseline: bool = true;
    train_fraction: f64 = 0.1;
    val_fraction: f64 = 0.1;
    test_fraction: f64 = 0.8;
    /// Draw fresh splits per trial even when the bundle carries some.
    resplit: bool = false;

    attack: AttackKind = AttackKind::Global;
    global_rates: Vec<f64> = vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25];
    targeted_counts: Vec<usize> = vec![0, 1, 2, 3, 4, 5];
    degree_threshold: usize = 10;
    add_remove_mix: f64 = 0.5;

    sbm_block_sizes: Vec<usize> = vec![100, 100];
    sbm_p_in: f64 = 0.1;
    sbm_p_out: f64 = 0.01;
    sbm_dims: usize = 8;
    sbm_separation: f64 = 1.0;
    sbm_noise: f64 = 1.0;

    extended_layers: usize = 20;
    monotone_slack: f64 = 1e-10;
    /// Classifier whose perceptron produces the report's input features.
    checkpoint: Option<PathBuf> = None;
    /// Symmetrized structure weight at or above which `denoise` keeps an edge.
    edge_threshold: f64 = 0.5;
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| CliError::Config(format!("line {}: {msg}", i + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) && Self::KEYS.contains(&key) {
                return Err(bad(format!("key `{key}` given twice")));
            }
            cfg.set(key, value).map_err(|e| bad(format!("{key}: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.asmp().validate()?;
        self.train_config().validate()?;
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.add_remove_mix) {
            return bad("add_remove_mix must lie in [0, 1]");
        }
        if self.global_rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return bad("global_rates must be finite and nonnegative");
        }
        if !(self.monotone_slack >= 0.0) {
            return bad("monotone_slack must be nonnegative");
        }
        if self.early_stop.is_some_and(|t| !(t >= 0.0)) {
            return bad("early_stop must be nonnegative or none");
        }
        Ok(())
    }

    pub fn asmp(&self) -> AsmpParams {
        AsmpParams {
            gamma: self.gamma,
            lambda: self.lambda,
            mu1: self.mu1,
            mu2: self.mu2,
            eta1: self.eta1,
            eta2: self.eta2,
            k_layers: self.k_layers,
            h_steps_per_iter: self.h_steps_per_iter,
            s_steps_per_iter: self.s_steps_per_iter,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            weight_decay: self.weight_decay,
            dropout: self.dropout,
            hidden: self.hidden,
            hyperparam_mode: self.hyperparam_mode,
            fd_step: self.fd_step,
            hyper_lr: self.hyper_lr,
            patience: self.patience,
        }
    }

    pub fn sbm_spec(&self) -> SbmSpec {
        SbmSpec {
            block_sizes: self.sbm_block_sizes.clone(),
            p_in: self.sbm_p_in,
            p_out: self.sbm_p_out,
            means: SbmSpec::one_hot_means(self.sbm_block_sizes.len(), self.sbm_dims, self.sbm_separation),
            noise: self.sbm_noise,
            seed: self.seed,
        }
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(self.trial_seed_stride.wrapping_mul(trial as u64))
    }
}
