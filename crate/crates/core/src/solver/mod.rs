//! The alternating iteration: a gradient step on `H`, then a proximal-gradient
//! step on `S`, repeated for a fixed number of outer iterations.

mod prox;
mod trace;

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

pub use prox::{prox_box_l1, prox_scalar};
pub use trace::{rate_check, IterationRecord, RateReport, SolverTrace, CSV_HEADER, RATE_SLACK};

use crate::energy::{
    grad_s, lipschitz_h, lipschitz_joint, lipschitz_s, max_row_norm, objective, AsmpParams,
    EnergyBreakdown, Problem,
};
use crate::error::{Error, Result};
use crate::graph::{normalize, DegreeView, StructureMatrix};

/// Fraction of the theoretical step-size bound used by [`StepSizePolicy::TheoremSafe`].
pub const THEOREM_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepSizePolicy {
    /// `0.9 * 2 / L`, with `L` recomputed from the current iterates every outer iteration.
    #[default]
    TheoremSafe,
    /// `eta1`, `eta2` taken from [`AsmpParams`] as given.
    Fixed,
    /// As `Fixed`, but the step sizes are trained parameters; reported separately.
    Learned,
}

impl std::fmt::Display for StepSizePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StepSizePolicy::TheoremSafe => "theorem_safe",
            StepSizePolicy::Fixed => "fixed",
            StepSizePolicy::Learned => "learned",
        })
    }
}

impl std::str::FromStr for StepSizePolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "theorem_safe" => Ok(StepSizePolicy::TheoremSafe),
            "fixed" => Ok(StepSizePolicy::Fixed),
            "learned" => Ok(StepSizePolicy::Learned),
            other => Err(format!(
                "unknown step policy `{other}` (expected theorem_safe, fixed or learned)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub policy: StepSizePolicy,
    /// When false, `S` stays at `A` and only `H` is updated.
    pub update_structure: bool,
    /// Replace `S` by `(S + S')/2` after every structure step.
    pub symmetrize: bool,
    /// Stop once the residual drops below this value.
    pub early_stop: Option<f64>,
    /// Keep the normalized structure used by every feature step.
    pub keep_propagators: bool,
    /// Evaluate the objective after every iteration. When off, records carry
    /// NaN energies and only finiteness of the iterates is checked.
    pub trace_energy: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            policy: StepSizePolicy::TheoremSafe,
            update_structure: true,
            symmetrize: false,
            early_stop: None,
            keep_propagators: false,
            trace_energy: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub h: Array2<f64>,
    pub s: StructureMatrix,
    pub trace: SolverTrace,
    /// One normalized structure per feature step, in order; empty unless requested.
    pub propagators: Vec<Array2<f64>>,
}

/// Strict upper bounds `(eta1_max, eta2_max) = (2 / L_H, 2 / L_S)`.
pub fn theorem_step_bounds(p: &AsmpParams, n: usize, b: f64, c: f64) -> Result<(f64, f64)> {
    Ok((2.0 / lipschitz_h(p)?, 2.0 / lipschitz_s(p, n, b, c)?))
}

/// One gradient step on `H` with the structure held at `s`.
pub fn h_step(
    prob: &Problem<'_>,
    h: ArrayView2<'_, f64>,
    s: ArrayView2<'_, f64>,
    p: &AsmpParams,
    eta1: f64,
) -> Result<Array2<f64>> {
    prob.check(h, s)?;
    let prop = normalize(s, prob.normalization, prob.degree_floor);
    Ok(h_step_with(prob.x, h, prop.view(), p.lambda, eta1))
}

/// `H - eta1 * grad_h` written as
/// `(1 - 2 eta1 - 2 eta1 lambda) H + eta1 lambda (P + P') H + 2 eta1 X`.
pub(crate) fn h_step_with(
    x: ArrayView2<'_, f64>,
    h: ArrayView2<'_, f64>,
    prop: ArrayView2<'_, f64>,
    lambda: f64,
    eta1: f64,
) -> Array2<f64> {
    let keep = 1.0 - 2.0 * eta1 - 2.0 * eta1 * lambda;
    let mix = eta1 * lambda;
    let pull = 2.0 * eta1;
    let mut out = Array2::zeros(h.dim());
    if mix == 0.0 {
        Zip::from(&mut out)
            .and(&h)
            .and(&x)
            .for_each(|o, &hv, &xv| *o = keep * hv + pull * xv);
    } else {
        let ph = prop.dot(&h);
        let pth = prop.t().dot(&h);
        Zip::from(&mut out)
            .and(&h)
            .and(&ph)
            .and(&pth)
            .and(&x)
            .for_each(|o, &hv, &a, &b, &xv| *o = keep * hv + mix * (a + b) + pull * xv);
    }
    out
}

/// One proximal-gradient step on `S` with the features held at `h`.
pub fn s_step(
    prob: &Problem<'_>,
    h: ArrayView2<'_, f64>,
    s: ArrayView2<'_, f64>,
    p: &AsmpParams,
    eta2: f64,
    symmetrize: bool,
) -> Result<StructureMatrix> {
    let t = grad_s(prob, h, s, p)?;
    let mut m = t;
    Zip::from(&mut m).and(&s).for_each(|mv, &sv| *mv = sv - eta2 * *mv);
    let mut next = prox_box_l1(m.view(), eta2 * p.mu1)?;
    if symmetrize {
        let sym = (&next + &next.t()) * 0.5;
        next = sym;
    }
    Ok(StructureMatrix::from_box(next))
}

fn sq_dist(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    Zip::from(&a).and(&b).fold(0.0, |acc, &x, &y| acc + (x - y) * (x - y))
}

const UNTRACKED: EnergyBreakdown = EnergyBreakdown {
    feature_fidelity: f64::NAN,
    smoothing: f64::NAN,
    structure_fidelity: f64::NAN,
    l1: f64::NAN,
    fro: f64::NAN,
    total: f64::NAN,
};

fn checked_energy(
    prob: &Problem<'_>,
    h: &Array2<f64>,
    s: &Array2<f64>,
    p: &AsmpParams,
    iteration: usize,
    tracked: bool,
) -> Result<EnergyBreakdown> {
    if !tracked {
        if !h.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { iteration, term: "features" });
        }
        if !s.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { iteration, term: "structure" });
        }
        return Ok(UNTRACKED);
    }
    let e = objective(prob, h.view(), s.view(), p)?;
    match e.first_non_finite() {
        Some(term) => Err(Error::NonFinite { iteration, term }),
        None => Ok(e),
    }
}

fn make_record(
    k: usize,
    energy: EnergyBreakdown,
    residual: f64,
    h: &Array2<f64>,
    s: &Array2<f64>,
    floor: f64,
    steps: (f64, f64),
    rho: f64,
) -> IterationRecord {
    let (n_at_zero, n_at_one) = s.iter().fold((0, 0), |(z, o), &v| {
        (z + usize::from(v == 0.0), o + usize::from(v == 1.0))
    });
    IterationRecord {
        k,
        energy,
        residual,
        min_degree: DegreeView::new(s.view(), floor).min_effective(),
        max_rownorm: max_row_norm(h.view()),
        n_at_zero,
        n_at_one,
        eta1: steps.0,
        eta2: steps.1,
        rho,
    }
}

fn start(
    prob: &Problem<'_>,
    p: &AsmpParams,
    opts: &SolverOptions,
) -> Result<(Array2<f64>, Array2<f64>, EnergyBreakdown)> {
    p.validate()?;
    let h = prob.x.to_owned();
    let s = prob.a.to_owned();
    if let Some(((row, col), &value)) = s.indexed_iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutsideBox { row, col, value });
    }
    let initial = checked_energy(prob, &h, &s, p, 0, opts.trace_energy)?;
    Ok((h, s, initial))
}

/// Runs `p.k_layers` alternating iterations from `H = X`, `S = A`.
pub fn run_asmp(prob: &Problem<'_>, p: &AsmpParams, opts: &SolverOptions) -> Result<SolverOutput> {
    let (mut h, mut s, initial) = start(prob, p, opts)?;
    let n = prob.n();
    let safe = opts.policy == StepSizePolicy::TheoremSafe;
    let mut trace = SolverTrace {
        initial,
        records: Vec::with_capacity(p.k_layers),
    };
    let mut propagators = Vec::new();
    for k in 1..=p.k_layers {
        let h_prev = h.clone();
        let l_h = lipschitz_h(p).ok();
        let eta1 = if safe { THEOREM_MARGIN * 2.0 / lipschitz_h(p)? } else { p.eta1 };
        let prop = normalize(s.view(), prob.normalization, prob.degree_floor);
        for _ in 0..p.h_steps_per_iter {
            h = h_step_with(prob.x, h.view(), prop.view(), p.lambda, eta1);
            if opts.keep_propagators {
                propagators.push(prop.clone());
            }
        }
        let mut residual = sq_dist(h.view(), h_prev.view());
        let mut rho = l_h.map_or(f64::NAN, |l| 1.0 / eta1 - l / 2.0);
        let mut eta2 = f64::NAN;
        if opts.update_structure {
            let s_prev = s.clone();
            let b = max_row_norm(h_prev.view()).max(max_row_norm(h.view()));
            let c = DegreeView::new(s.view(), prob.degree_floor).min_effective();
            let l_s = lipschitz_s(p, n, b, c).ok();
            eta2 = if safe { THEOREM_MARGIN * 2.0 / lipschitz_s(p, n, b, c)? } else { p.eta2 };
            for _ in 0..p.s_steps_per_iter {
                s = s_step(prob, h.view(), s.view(), p, eta2, opts.symmetrize)?.into_inner();
            }
            residual += sq_dist(s.view(), s_prev.view());
            rho = l_s.map_or(f64::NAN, |l| rho.min(1.0 / eta2 - l / 2.0));
        }
        let energy = checked_energy(prob, &h, &s, p, k, opts.trace_energy)?;
        trace.records.push(make_record(
            k,
            energy,
            residual,
            &h,
            &s,
            prob.degree_floor,
            (eta1, eta2),
            rho,
        ));
        if opts.early_stop.is_some_and(|tol| residual < tol) {
            break;
        }
    }
    Ok(SolverOutput {
        h,
        s: StructureMatrix::from_box(s),
        trace,
        propagators,
    })
}

/// Simultaneous gradient step on `(H, S)` from the same iterate, followed by
/// the structure prox. Theorem-safe steps share `0.9 * 2 / L_joint`.
pub fn run_joint(prob: &Problem<'_>, p: &AsmpParams, opts: &SolverOptions) -> Result<SolverOutput> {
    let (mut h, mut s, initial) = start(prob, p, opts)?;
    let n = prob.n();
    let mut trace = SolverTrace {
        initial,
        records: Vec::with_capacity(p.k_layers),
    };
    for k in 1..=p.k_layers {
        let (eta1, eta2, rho) = if opts.policy == StepSizePolicy::TheoremSafe {
            let b = max_row_norm(h.view());
            let c = DegreeView::new(s.view(), prob.degree_floor).min_effective();
            let l = lipschitz_joint(p, n, b, c)?;
            let eta = THEOREM_MARGIN * 2.0 / l;
            (eta, eta, 1.0 / eta - l / 2.0)
        } else {
            (p.eta1, p.eta2, f64::NAN)
        };
        let h_next = h_step(prob, h.view(), s.view(), p, eta1)?;
        let s_next = if opts.update_structure {
            s_step(prob, h.view(), s.view(), p, eta2, opts.symmetrize)?.into_inner()
        } else {
            s.clone()
        };
        let residual = sq_dist(h_next.view(), h.view()) + sq_dist(s_next.view(), s.view());
        h = h_next;
        s = s_next;
        let energy = checked_energy(prob, &h, &s, p, k, opts.trace_energy)?;
        trace.records.push(make_record(
            k,
            energy,
            residual,
            &h,
            &s,
            prob.degree_floor,
            (eta1, eta2),
            rho,
        ));
        if opts.early_stop.is_some_and(|tol| residual < tol) {
            break;
        }
    }
    Ok(SolverOutput {
        h,
        s: StructureMatrix::from_box(s),
        trace,
        propagators: Vec::new(),
    })
}
