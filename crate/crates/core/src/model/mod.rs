//! The ASGNN classifier: a perceptron `g` maps raw node features to class
//! scores `X = g(Z)`, and `K` solver iterations propagate them over a
//! structure that is denoised along the way.
//!
//! Training backpropagates exactly through `g` and through the feature
//! recursion with the sequence of structures held fixed. The six solver
//! scalars are optionally trained by central finite differences.

mod adam;
mod checkpoint;
mod loss;
mod mlp;

use ndarray::{Array2, ArrayView2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use checkpoint::{
    from_text as checkpoint_from_text, load_checkpoint, save_checkpoint, to_text as checkpoint_to_text,
};
pub use loss::{accuracy, argmax, cross_entropy, cross_entropy_grad};
pub use mlp::{Dense, Mlp, MlpCache};

use crate::energy::{AsmpParams, Problem};
use crate::error::{Error, Result};
use crate::graph::{Graph, Normalization, Splits};
use crate::solver::{run_asmp, SolverOptions, SolverOutput, StepSizePolicy};

/// Perceptron weights plus the propagation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub mlp: Mlp,
    pub asmp: AsmpParams,
    pub normalization: Normalization,
    pub policy: StepSizePolicy,
    /// False gives the fixed-structure baseline (`S` stays at `A`).
    pub update_structure: bool,
    /// Subtract each node's mean score before propagation. Class
    /// probabilities do not change, but inner products between nodes no
    /// longer carry an offset shared by all nodes.
    pub center_logits: bool,
    pub seed: u64,
}

fn center_rows(mut m: Array2<f64>) -> Array2<f64> {
    for mut row in m.rows_mut() {
        let mean = row.mean().unwrap_or(0.0);
        row.mapv_inplace(|v| v - mean);
    }
    m
}

impl ClassifierModel {
    pub fn new(
        n_features: usize,
        hidden: usize,
        n_classes: usize,
        asmp: AsmpParams,
        normalization: Normalization,
        update_structure: bool,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ClassifierModel {
            mlp: Mlp::new(n_features, hidden, n_classes, &mut rng),
            asmp,
            normalization,
            policy: StepSizePolicy::Fixed,
            update_structure,
            center_logits: false,
            seed,
        }
    }

    fn options(&self, keep_propagators: bool) -> SolverOptions {
        SolverOptions {
            policy: self.policy,
            update_structure: self.update_structure,
            symmetrize: false,
            early_stop: None,
            keep_propagators,
            trace_energy: false,
        }
    }

    fn check_dims(&self, n: usize, z: ArrayView2<'_, f64>) -> Result<()> {
        if z.dim() != (n, self.mlp.n_in()) {
            return Err(Error::ShapeMismatch {
                context: "model input features",
                expected: (n, self.mlp.n_in()),
                found: z.dim(),
            });
        }
        Ok(())
    }

    /// Initial features `X = g(z)` of the propagation.
    pub fn transform(&self, z: ArrayView2<'_, f64>) -> Array2<f64> {
        let x = self.mlp.forward(z);
        if self.center_logits {
            center_rows(x)
        } else {
            x
        }
    }

    /// Runs the solver on `x = g(z)` over adjacency `a` (dense).
    pub fn propagate(&self, a: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>, keep: bool) -> Result<SolverOutput> {
        let prob = Problem::new(x, a, self.normalization)?;
        run_asmp(&prob, &self.asmp, &self.options(keep))
    }

    /// Class scores for every node, inference mode.
    pub fn forward(&self, g: &Graph, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let a = g.adjacency();
        self.forward_dense(a.view(), z)
    }

    pub fn forward_dense(&self, a: ArrayView2<'_, f64>, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_dims(a.nrows(), z)?;
        let x = self.transform(z);
        Ok(self.propagate(a, x.view(), false)?.h)
    }

    /// Training loss on `idx` and its gradient in the perceptron parameters,
    /// with the structure sequence of this forward pass held fixed.
    pub fn loss_and_gradient(
        &self,
        a: ArrayView2<'_, f64>,
        z: ArrayView2<'_, f64>,
        labels: &[Option<usize>],
        idx: &[usize],
        dropout: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(f64, Vec<f64>)> {
        self.check_dims(a.nrows(), z)?;
        let (x, cache) = self.mlp.forward_train(z, dropout, rng);
        let x = if self.center_logits { center_rows(x) } else { x };
        let out = self.propagate(a, x.view(), true)?;
        let (loss, d_scores) = cross_entropy_grad(out.h.view(), labels, idx, "train")?;
        let frozen = FrozenPropagation::from_output(&out, &self.asmp);
        let d_x = frozen.backward(d_scores);
        // Centering is an orthogonal projection, so it is its own adjoint.
        let d_x = if self.center_logits { center_rows(d_x) } else { d_x };
        Ok((loss, self.mlp.backward(&cache, d_x)))
    }

    /// The propagation of one forward pass, linearized with the structures fixed.
    pub fn frozen_propagation(&self, a: ArrayView2<'_, f64>, z: ArrayView2<'_, f64>) -> Result<FrozenPropagation> {
        self.check_dims(a.nrows(), z)?;
        let x = self.transform(z);
        let out = self.propagate(a, x.view(), true)?;
        Ok(FrozenPropagation::from_output(&out, &self.asmp))
    }
}

/// The feature recursion of a finished solver run with its structures fixed:
/// each step is `H <- keep H + mix (P + P') H + pull X`.
#[derive(Debug, Clone)]
pub struct FrozenPropagation {
    /// Normalized structure of each feature step.
    pub propagators: Vec<Array2<f64>>,
    /// Feature step size of each feature step.
    pub eta1: Vec<f64>,
    pub lambda: f64,
}

impl FrozenPropagation {
    pub fn from_output(out: &SolverOutput, p: &AsmpParams) -> Self {
        let eta1 = out
            .trace
            .records
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.eta1, p.h_steps_per_iter))
            .collect();
        FrozenPropagation {
            propagators: out.propagators.clone(),
            eta1,
            lambda: p.lambda,
        }
    }

    fn coefficients(&self, step: usize) -> (f64, f64, f64) {
        let eta = self.eta1[step];
        (1.0 - 2.0 * eta - 2.0 * eta * self.lambda, eta * self.lambda, 2.0 * eta)
    }

    /// Pulls a gradient in the final features back to the initial features.
    pub fn backward(&self, d_h: Array2<f64>) -> Array2<f64> {
        let mut g = d_h;
        let mut d_x = Array2::zeros(g.dim());
        for step in (0..self.propagators.len()).rev() {
            let (keep, mix, pull) = self.coefficients(step);
            d_x.scaled_add(pull, &g);
            // The step operator is symmetric, so its adjoint is itself.
            let next = if mix == 0.0 {
                &g * keep
            } else {
                let p = &self.propagators[step];
                let pg = p.dot(&g);
                let ptg = p.t().dot(&g);
                let mut next = Array2::zeros(g.dim());
                Zip::from(&mut next)
                    .and(&g)
                    .and(&pg)
                    .and(&ptg)
                    .for_each(|o, &gv, &a, &b| *o = keep * gv + mix * (a + b));
                next
            };
            g = next;
        }
        d_x + g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HyperparamMode {
    /// Solver scalars stay at their initial values.
    #[default]
    Fixed,
    /// Solver scalars follow central finite differences of the training loss.
    LearnedFd,
}

impl std::fmt::Display for HyperparamMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HyperparamMode::Fixed => "fixed",
            HyperparamMode::LearnedFd => "learned_fd",
        })
    }
}

impl std::str::FromStr for HyperparamMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(HyperparamMode::Fixed),
            "learned_fd" => Ok(HyperparamMode::LearnedFd),
            other => Err(format!("unknown hyperparameter mode `{other}` (expected fixed or learned_fd)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub hidden: usize,
    pub hyperparam_mode: HyperparamMode,
    /// Step of the central differences, taken in the reparameterized space.
    pub fd_step: f64,
    pub hyper_lr: f64,
    /// Stop after this many epochs without a better validation loss; 0 disables.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            lr: 0.01,
            weight_decay: 5e-4,
            dropout: 0.5,
            hidden: 64,
            hyperparam_mode: HyperparamMode::Fixed,
            fd_step: 1e-3,
            hyper_lr: 0.01,
            patience: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value: f64, reason| Err(Error::InvalidParameter { name, value, reason });
        if self.epochs == 0 {
            return bad("epochs", 0.0, "must be at least 1");
        }
        if !(self.fd_step > 0.0) || !self.fd_step.is_finite() {
            return bad("fd_step", self.fd_step, "must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout", self.dropout, "must lie in [0, 1)");
        }
        for (name, v) in [("lr", self.lr), ("weight_decay", self.weight_decay), ("hyper_lr", self.hyper_lr)] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(name, v, "must be finite and nonnegative");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Inference-mode training loss before the first update.
    pub initial_train_loss: f64,
    /// Inference-mode losses and accuracy after each epoch.
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_acc: Vec<f64>,
    /// 1-based epoch whose parameters were kept (0: the initial model).
    pub best_epoch: usize,
}

/// Solver scalars in the space they are trained in: logs of the nonnegative
/// weights and step sizes, `lambda` as is.
fn hyper_vector(p: &AsmpParams) -> [f64; 6] {
    [p.gamma.ln(), p.lambda, p.mu1.ln(), p.mu2.ln(), p.eta1.ln(), p.eta2.ln()]
}

fn with_hyper(p: &AsmpParams, phi: &[f64; 6]) -> AsmpParams {
    AsmpParams {
        gamma: phi[0].exp(),
        lambda: phi[1],
        mu1: phi[2].exp(),
        mu2: phi[3].exp(),
        eta1: phi[4].exp(),
        eta2: phi[5].exp(),
        ..*p
    }
}

/// Which scalars can move: zero weights have no log and stay at zero, and
/// structure scalars are inert when the structure is fixed.
fn hyper_frozen(model: &ClassifierModel) -> [bool; 6] {
    let p = &model.asmp;
    let no_s = !model.update_structure;
    let no_eta = model.policy == StepSizePolicy::TheoremSafe;
    [
        no_s || p.gamma <= 0.0,
        false,
        no_s || p.mu1 <= 0.0,
        no_s || p.mu2 <= 0.0,
        no_eta,
        no_s || no_eta,
    ]
}

fn train_split(g: &Graph) -> Result<&Splits> {
    let s = g.splits().ok_or(Error::EmptySplit("train"))?;
    if s.train.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if s.val.is_empty() {
        return Err(Error::EmptySplit("val"));
    }
    Ok(s)
}

/// Trains on the graph's train split and returns the parameters with the
/// lowest validation loss.
pub fn train(model: &ClassifierModel, g: &Graph, cfg: &TrainConfig) -> Result<(ClassifierModel, TrainHistory)> {
    cfg.validate()?;
    let splits = train_split(g)?;
    let a = g.adjacency();
    let z = g.features();
    let labels = g.labels();
    let mut model = model.clone();
    if cfg.hyperparam_mode == HyperparamMode::LearnedFd && model.policy == StepSizePolicy::Fixed {
        model.policy = StepSizePolicy::Learned;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed.wrapping_add(0x5EED));
    let mut opt = Adam::new(model.mlp.n_params(), cfg.lr, cfg.weight_decay);
    let mut hyper_opt = Adam::new(6, cfg.hyper_lr, 0.0);
    let frozen = hyper_frozen(&model);

    let eval = |m: &ClassifierModel, epoch: usize| -> Result<(f64, f64, f64)> {
        let scores = m.forward_dense(a.view(), z.view()).map_err(|e| diverged(e, epoch))?;
        let tl = cross_entropy(scores.view(), labels, &splits.train, "train")?;
        let vl = cross_entropy(scores.view(), labels, &splits.val, "val")?;
        let va = accuracy(scores.view(), labels, &splits.val, "val")?;
        for loss in [tl, vl] {
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
        }
        Ok((tl, vl, va))
    };

    let (tl0, vl0, _) = eval(&model, 0)?;
    let mut history = TrainHistory {
        initial_train_loss: tl0,
        ..TrainHistory::default()
    };
    let mut best = (vl0, model.clone());
    let mut since_best = 0;
    for epoch in 1..=cfg.epochs {
        let (loss, grad) = model
            .loss_and_gradient(a.view(), z.view(), labels, &splits.train, cfg.dropout, &mut rng)
            .map_err(|e| diverged(e, epoch))?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        let mut params = model.mlp.params();
        opt.step(&mut params, &grad, None);
        model.mlp.set_params(&params);

        if cfg.hyperparam_mode == HyperparamMode::LearnedFd {
            hyper_step(&mut model, &mut hyper_opt, &frozen, cfg.fd_step, a.view(), z.view(), labels, &splits.train)?;
        }

        let (tl, vl, va) = eval(&model, epoch)?;
        history.train_loss.push(tl);
        history.val_loss.push(vl);
        history.val_acc.push(va);
        if vl < best.0 {
            best = (vl, model.clone());
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.patience > 0 && since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok((best.1, history))
}

fn diverged(e: Error, epoch: usize) -> Error {
    match e {
        Error::NonFinite { .. } => Error::Diverged { epoch, loss: f64::NAN },
        other => other,
    }
}

#[allow(clippy::too_many_arguments)]
fn hyper_step(
    model: &mut ClassifierModel,
    opt: &mut Adam,
    frozen: &[bool; 6],
    step: f64,
    a: ArrayView2<'_, f64>,
    z: ArrayView2<'_, f64>,
    labels: &[Option<usize>],
    idx: &[usize],
) -> Result<()> {
    let mut phi = hyper_vector(&model.asmp);
    let loss_at = |phi: &[f64; 6]| -> f64 {
        let mut probe = model.clone();
        probe.asmp = with_hyper(&model.asmp, phi);
        probe
            .forward_dense(a, z)
            .and_then(|s| cross_entropy(s.view(), labels, idx, "train"))
            .unwrap_or(f64::NAN)
    };
    let mut grad = [0.0; 6];
    for i in 0..6 {
        if frozen[i] {
            continue;
        }
        let (mut up, mut down) = (phi, phi);
        up[i] += step;
        down[i] -= step;
        let g = (loss_at(&up) - loss_at(&down)) / (2.0 * step);
        // A probe that blows up carries no usable slope; leave that scalar alone.
        grad[i] = if g.is_finite() { g } else { 0.0 };
    }
    opt.step(&mut phi, &grad, Some(frozen));
    let old = model.asmp;
    let mut new = with_hyper(&old, &phi);
    // Frozen scalars are copied back: exp(ln(x)) need not round-trip, and a
    // zero weight has no finite log.
    let fields: [(fn(&mut AsmpParams) -> &mut f64, f64); 6] = [
        (|p| &mut p.gamma, old.gamma),
        (|p| &mut p.lambda, old.lambda),
        (|p| &mut p.mu1, old.mu1),
        (|p| &mut p.mu2, old.mu2),
        (|p| &mut p.eta1, old.eta1),
        (|p| &mut p.eta2, old.eta2),
    ];
    for (i, (field, value)) in fields.into_iter().enumerate() {
        if frozen[i] {
            *field(&mut new) = value;
        }
    }
    model.asmp = new;
    Ok(())
}

/// Accuracy and mean loss on `idx`.
pub fn evaluate(model: &ClassifierModel, g: &Graph, idx: &[usize]) -> Result<(f64, f64)> {
    let scores = model.forward(g, g.features().view())?;
    Ok((
        accuracy(scores.view(), g.labels(), idx, "evaluation")?,
        cross_entropy(scores.view(), g.labels(), idx, "evaluation")?,
    ))
}

/// Test loss of `model` evaluated on the clean graph.
///
/// `perturbed` is the graph the model was trained on; it must share nodes,
/// features, labels and splits with `clean`.
pub fn clean_graph_loss_probe(model: &ClassifierModel, perturbed: &Graph, clean: &Graph) -> Result<f64> {
    if perturbed.n_nodes() != clean.n_nodes() {
        return Err(Error::IncompatibleGraphs(format!(
            "{} vs {} nodes",
            perturbed.n_nodes(),
            clean.n_nodes()
        )));
    }
    if perturbed.features() != clean.features() || perturbed.labels() != clean.labels() {
        return Err(Error::IncompatibleGraphs("features or labels differ".into()));
    }
    if perturbed.splits() != clean.splits() {
        return Err(Error::IncompatibleGraphs("splits differ".into()));
    }
    let test = &clean.splits().ok_or(Error::EmptySplit("test"))?.test;
    let scores = model.forward(clean, clean.features().view())?;
    cross_entropy(scores.view(), clean.labels(), test, "test")
}
