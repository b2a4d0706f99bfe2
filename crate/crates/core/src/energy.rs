//! The joint objective over features `H` and structure `S`:
//!
//! ```text
//! p(H, S) = |H - X|^2 + lambda tr(H' L H) + gamma |S - A|^2 + mu1 |S|_1 + mu2 |S|^2
//! ```
//!
//! with `L = I - normalize(S)` and Frobenius norms throughout, plus its
//! gradients and the smoothness constants that bound admissible step sizes.

use ndarray::{Array1, Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalize, DegreeView, Graph, Normalization, DEFAULT_DEGREE_FLOOR};

/// Weights, step sizes and iteration counts for one solver run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsmpParams {
    /// Structure fidelity weight.
    pub gamma: f64,
    /// Smoothing weight; may be negative for heterophilous graphs.
    pub lambda: f64,
    /// Sparsity (entrywise l1) weight on the structure.
    pub mu1: f64,
    /// Frobenius weight on the structure.
    pub mu2: f64,
    /// Feature step size.
    pub eta1: f64,
    /// Structure step size.
    pub eta2: f64,
    /// Outer iterations (propagation layers).
    pub k_layers: usize,
    pub h_steps_per_iter: usize,
    pub s_steps_per_iter: usize,
}

impl Default for AsmpParams {
    fn default() -> Self {
        AsmpParams {
            gamma: 1.0,
            lambda: 1.0,
            mu1: 0.01,
            mu2: 0.01,
            eta1: 0.3,
            eta2: 0.01,
            k_layers: 10,
            h_steps_per_iter: 1,
            s_steps_per_iter: 1,
        }
    }
}

impl AsmpParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("gamma", self.gamma),
            ("lambda", self.lambda),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        for (name, value) in [("gamma", self.gamma), ("mu1", self.mu1), ("mu2", self.mu2)] {
            if value < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be nonnegative",
                });
            }
        }
        for (name, value) in [("eta1", self.eta1), ("eta2", self.eta2)] {
            if value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive",
                });
            }
        }
        for (name, value) in [
            ("h_steps_per_iter", self.h_steps_per_iter),
            ("s_steps_per_iter", self.s_steps_per_iter),
        ] {
            if value == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    value: 0.0,
                    reason: "must be at least 1",
                });
            }
        }
        Ok(())
    }
}

/// The fixed data of a solve: noisy features, input adjacency, normalization.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub x: ArrayView2<'a, f64>,
    pub a: ArrayView2<'a, f64>,
    pub normalization: Normalization,
    pub degree_floor: f64,
}

impl<'a> Problem<'a> {
    pub fn new(
        x: ArrayView2<'a, f64>,
        a: ArrayView2<'a, f64>,
        normalization: Normalization,
    ) -> Result<Self> {
        let n = x.nrows();
        if a.dim() != (n, n) {
            return Err(Error::ShapeMismatch {
                context: "adjacency",
                expected: (n, n),
                found: a.dim(),
            });
        }
        Ok(Problem {
            x,
            a,
            normalization,
            degree_floor: DEFAULT_DEGREE_FLOOR,
        })
    }

    /// Uses `x` against the dense adjacency `a` of `g`.
    pub fn for_graph(
        g: &Graph,
        x: ArrayView2<'a, f64>,
        a: ArrayView2<'a, f64>,
        normalization: Normalization,
    ) -> Result<Self> {
        if x.nrows() != g.n_nodes() {
            return Err(Error::ShapeMismatch {
                context: "features",
                expected: (g.n_nodes(), x.ncols()),
                found: x.dim(),
            });
        }
        Self::new(x, a, normalization)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub(crate) fn check(&self, h: ArrayView2<'_, f64>, s: ArrayView2<'_, f64>) -> Result<()> {
        if h.dim() != self.x.dim() {
            return Err(Error::ShapeMismatch {
                context: "features iterate",
                expected: self.x.dim(),
                found: h.dim(),
            });
        }
        if s.dim() != self.a.dim() {
            return Err(Error::ShapeMismatch {
                context: "structure iterate",
                expected: self.a.dim(),
                found: s.dim(),
            });
        }
        Ok(())
    }
}

/// The objective split into its five terms, each already weighted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub feature_fidelity: f64,
    pub smoothing: f64,
    pub structure_fidelity: f64,
    pub l1: f64,
    pub fro: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    /// Value of the structure subproblem (every term that depends on `S`).
    pub fn structure_part(&self) -> f64 {
        self.smoothing + self.structure_fidelity + self.l1 + self.fro
    }

    /// Value of the feature subproblem (every term that depends on `H`).
    pub fn feature_part(&self) -> f64 {
        self.feature_fidelity + self.smoothing
    }

    pub fn is_finite(&self) -> bool {
        [
            self.feature_fidelity,
            self.smoothing,
            self.structure_fidelity,
            self.l1,
            self.fro,
            self.total,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// Name of the first non-finite term, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        [
            ("feature_fidelity", self.feature_fidelity),
            ("smoothing", self.smoothing),
            ("structure_fidelity", self.structure_fidelity),
            ("l1", self.l1),
            ("fro", self.fro),
            ("total", self.total),
        ]
        .into_iter()
        .find(|(_, v)| !v.is_finite())
        .map(|(name, _)| name)
    }
}

/// `tr(H' L H)` for the Laplacian of `s` under `mode`.
pub fn smoothing_trace(
    h: ArrayView2<'_, f64>,
    s: ArrayView2<'_, f64>,
    mode: Normalization,
    floor: f64,
) -> Result<f64> {
    if s.dim() != (h.nrows(), h.nrows()) {
        return Err(Error::ShapeMismatch {
            context: "smoothing_trace",
            expected: (h.nrows(), h.nrows()),
            found: s.dim(),
        });
    }
    let ph = normalize(s, mode, floor).dot(&h);
    Ok(Zip::from(&h).and(&ph).fold(0.0, |acc, &hv, &pv| acc + hv * (hv - pv)))
}

pub fn objective(
    prob: &Problem<'_>,
    h: ArrayView2<'_, f64>,
    s: ArrayView2<'_, f64>,
    p: &AsmpParams,
) -> Result<EnergyBreakdown> {
    prob.check(h, s)?;
    let feature_fidelity = sq_dist(h, prob.x);
    let smoothing = if p.lambda == 0.0 {
        0.0
    } else {
        p.lambda * smoothing_trace(h, s, prob.normalization, prob.degree_floor)?
    };
    let structure_fidelity = p.gamma * sq_dist(s, prob.a);
    let l1 = p.mu1 * s.iter().map(|v| v.abs()).sum::<f64>();
    let fro = p.mu2 * s.iter().map(|v| v * v).sum::<f64>();
    Ok(EnergyBreakdown {
        feature_fidelity,
        smoothing,
        structure_fidelity,
        l1,
        fro,
        total: feature_fidelity + smoothing + structure_fidelity + l1 + fro,
    })
}

/// Gradient in `H` of `|H - X|^2 + lambda tr(H' L H)`, i.e.
/// `2(H - X) + lambda (L + L') H`.
///
/// For the symmetric normalization, or a random-walk normalization of a
/// regular graph, `L' = L` and this is `2(H - X) + 2 lambda L H`.
pub fn grad_h(
    prob: &Problem<'_>,
    h: ArrayView2<'_, f64>,
    s: ArrayView2<'_, f64>,
    p: &AsmpParams,
) -> Result<Array2<f64>> {
    prob.check(h, s)?;
    let mut g = (&h - &prob.x) * 2.0;
    if p.lambda != 0.0 {
        let prop = normalize(s, prob.normalization, prob.degree_floor);
        let ph = prop.dot(&h);
        let pth = prop.t().dot(&h);
        Zip::from(&mut g)
            .and(&h)
            .and(&ph)
            .and(&pth)
            .for_each(|gv, &hv, &a, &b| *gv += p.lambda * (2.0 * hv - a - b));
    }
    Ok(g)
}

/// Gradient in `S` of the smooth part
/// `lambda tr(H' L H) + gamma |S - A|^2 + mu2 |S|^2`,
/// with the degrees treated as functions of `S`.
pub fn grad_s(
    prob: &Problem<'_>,
    h: ArrayView2<'_, f64>,
    s: ArrayView2<'_, f64>,
    p: &AsmpParams,
) -> Result<Array2<f64>> {
    prob.check(h, s)?;
    let mut out = Array2::zeros(s.dim());
    Zip::from(&mut out)
        .and(&s)
        .and(&prob.a)
        .for_each(|o, &sv, &av| *o = 2.0 * p.gamma * (sv - av) + 2.0 * p.mu2 * sv);
    if p.lambda == 0.0 {
        return Ok(out);
    }
    let gram = h.dot(&h.t());
    let d = DegreeView::new(s, prob.degree_floor).effective();
    let lam = p.lambda;
    match prob.normalization {
        Normalization::Rw => {
            // r_a = sum_j S_aj G_aj / d_a^2, the diagonal of D^-1 S G D^-1.
            let r: Array1<f64> = Zip::from(s.rows())
                .and(gram.rows())
                .and(&d)
                .map_collect(|srow, grow, &da| srow.dot(&grow) / (da * da));
            for (a, (mut orow, grow)) in out.outer_iter_mut().zip(gram.outer_iter()).enumerate() {
                let (inv, ra) = (1.0 / d[a], r[a]);
                Zip::from(&mut orow)
                    .and(&grow)
                    .for_each(|o, &gv| *o -= lam * (gv * inv - ra));
            }
        }
        Normalization::Sym => {
            let u = d.mapv(|x| 1.0 / x.sqrt());
            // Row and column sums of S o G weighted by u on the far index.
            let mut q = Array1::<f64>::zeros(d.len());
            let mut w = Array1::<f64>::zeros(d.len());
            for ((i, j), &sv) in s.indexed_iter() {
                let sg = sv * gram[[i, j]];
                q[i] += sg * u[j];
                w[j] += sg * u[i];
            }
            for ((a, b), o) in out.indexed_iter_mut() {
                let shift = 0.5 * u[a] * u[a] * u[a] * (q[a] + w[a]);
                *o -= lam * (gram[[a, b]] * u[a] * u[b] - shift);
            }
        }
    }
    Ok(out)
}

fn theory_lambda(p: &AsmpParams, what: &'static str) -> Result<f64> {
    if p.lambda < 0.0 || !p.lambda.is_finite() {
        return Err(Error::TheoryOutOfRange(what));
    }
    Ok(p.lambda)
}

fn check_bounds(b: f64, c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "degree lower bound must be positive and finite",
        });
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            reason: "feature row-norm bound must be nonnegative and finite",
        });
    }
    Ok(())
}

/// Smoothness constant of the feature subproblem: `2 + 4 lambda`.
pub fn lipschitz_h(p: &AsmpParams) -> Result<f64> {
    Ok(2.0 + 4.0 * theory_lambda(p, "lipschitz_h")?)
}

/// Smoothness constant of the structure subproblem for `n` nodes, feature
/// row norms at most `b` and degrees at least `c`.
pub fn lipschitz_s(p: &AsmpParams, n: usize, b: f64, c: f64) -> Result<f64> {
    let lam = theory_lambda(p, "lipschitz_s")?;
    check_bounds(b, c)?;
    let n = n as f64;
    let b2 = b * b;
    Ok(2.0 * p.gamma
        + 2.0 * p.mu2
        + 2.0 * lam / (c * c) * n * n * b2
        + 2.0 * lam / (c * c * c) * n * n * n * n.sqrt() * b2)
}

/// Smoothness constant of the joint problem in `(H, S)`.
pub fn lipschitz_joint(p: &AsmpParams, n: usize, b: f64, c: f64) -> Result<f64> {
    let lh = lipschitz_h(p)?;
    let ls = lipschitz_s(p, n, b, c)?;
    let lam = p.lambda;
    let nf = n as f64;
    let cross = 4.0 * lam * lam / (c * c) * nf * b * b;
    let via_h = (lh * lh + (1.0 + nf * nf.sqrt() / c).powi(2) * cross).sqrt();
    let via_s = (ls * ls + (1.0 + nf * nf / c).powi(2) * cross).sqrt();
    Ok(via_h.max(via_s))
}

/// Largest row 2-norm of `h`.
pub fn max_row_norm(h: ArrayView2<'_, f64>) -> f64 {
    h.rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .fold(0.0, f64::max)
}

/// `(B, c)`: the largest feature row norm and the smallest effective degree
/// over all recorded iterates.
pub fn estimate_bounds<'h, 's>(
    h_iterates: impl IntoIterator<Item = ArrayView2<'h, f64>>,
    s_iterates: impl IntoIterator<Item = ArrayView2<'s, f64>>,
    floor: f64,
) -> (f64, f64) {
    let b = h_iterates.into_iter().map(max_row_norm).fold(0.0, f64::max);
    let c = s_iterates
        .into_iter()
        .map(|s| DegreeView::new(s, floor).min_effective())
        .fold(f64::INFINITY, f64::min);
    (b, c)
}

fn sq_dist(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    Zip::from(&a).and(&b).fold(0.0, |acc, &x, &y| acc + (x - y) * (x - y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(gamma: f64, lambda: f64, mu1: f64, mu2: f64) -> AsmpParams {
        AsmpParams {
            gamma,
            lambda,
            mu1,
            mu2,
            ..AsmpParams::default()
        }
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> [Array2<f64>; 4] {
        let x = Array2::from_shape_fn((n, m), |_| rng.random_range(-1.0..1.0));
        let h = Array2::from_shape_fn((n, m), |_| rng.random_range(-1.0..1.0));
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j || rng.random_bool(0.4) { 1.0 } else { 0.0 }
        });
        let s = Array2::from_shape_fn((n, n), |_| rng.random_range(0.05..1.0));
        [x, h, a, s]
    }

    /// Scalar-loop evaluation of every objective term.
    fn loop_objective(x: &Array2<f64>, h: &Array2<f64>, a: &Array2<f64>, s: &Array2<f64>,
                      p: &AsmpParams, mode: Normalization) -> [f64; 5] {
        let (n, m) = h.dim();
        let mut ff = 0.0;
        for i in 0..n { for k in 0..m { ff += (h[[i, k]] - x[[i, k]]).powi(2); } }
        let d: Vec<f64> = (0..n).map(|i| (0..n).map(|j| s[[i, j]]).sum::<f64>().max(1e-8)).collect();
        let mut tr = 0.0;
        for i in 0..n {
            for j in 0..n {
                let pij = match mode {
                    Normalization::Rw => s[[i, j]] / d[i],
                    Normalization::Sym => s[[i, j]] / (d[i] * d[j]).sqrt(),
                };
                let lij = if i == j { 1.0 } else { 0.0 } - pij;
                for k in 0..m { tr += h[[i, k]] * lij * h[[j, k]]; }
            }
        }
        let (mut sf, mut l1, mut fro) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                sf += (s[[i, j]] - a[[i, j]]).powi(2);
                l1 += s[[i, j]].abs();
                fro += s[[i, j]] * s[[i, j]];
            }
        }
        [ff, p.lambda * tr, p.gamma * sf, p.mu1 * l1, p.mu2 * fro]
    }

    fn rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        let diff = (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = a.iter().chain(b.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
        diff / scale
    }

    #[test]
    fn params_validation() {
        assert!(AsmpParams::default().validate().is_ok());
        assert!(AsmpParams { eta1: 0.0, ..AsmpParams::default() }.validate().is_err());
        assert!(AsmpParams { gamma: -1.0, ..AsmpParams::default() }.validate().is_err());
        assert!(AsmpParams { lambda: f64::NAN, ..AsmpParams::default() }.validate().is_err());
        assert!(AsmpParams { lambda: -2.0, ..AsmpParams::default() }.validate().is_ok());
        assert!(AsmpParams { k_layers: 0, ..AsmpParams::default() }.validate().is_ok());
    }

    #[test]
    fn smoothing_trace_examples() {
        let n = 4;
        let full = Array2::<f64>::ones((n, n));
        let constant = Array2::from_elem((n, 2), 3.0);
        let t = smoothing_trace(constant.view(), full.view(), Normalization::Rw, 1e-8).unwrap();
        assert!(t.abs() < 1e-10);
        let zero = Array2::zeros((n, 2));
        assert_eq!(smoothing_trace(zero.view(), full.view(), Normalization::Sym, 1e-8).unwrap(), 0.0);
        assert!(smoothing_trace(zero.view(), Array2::zeros((3, 3)).view(), Normalization::Rw, 1e-8).is_err());
    }

    #[test]
    fn smoothing_trace_sym_matches_pairwise_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let [_, h, a, _] = random_instance(&mut rng, n, 3);
        let a = (&a + &a.t()).mapv(|v: f64| v.min(1.0));
        let d: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
        let mut pairwise = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut sq = 0.0;
                for k in 0..h.ncols() {
                    sq += (h[[i, k]] / d[i].sqrt() - h[[j, k]] / d[j].sqrt()).powi(2);
                }
                pairwise += 0.5 * a[[i, j]] * sq;
            }
        }
        let t = smoothing_trace(h.view(), a.view(), Normalization::Sym, 1e-8).unwrap();
        assert_relative_eq!(t, pairwise, max_relative = 1e-10);
    }

    #[test]
    fn objective_examples() {
        let x = array![[1.0, 2.0], [3.0, -1.0]];
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let prob = Problem::new(x.view(), a.view(), Normalization::Rw).unwrap();
        let e = objective(&prob, x.view(), a.view(), &params(2.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(e.total, 0.0);

        let z = Array2::zeros((2, 2));
        let zprob = Problem::new(z.view(), z.view(), Normalization::Rw).unwrap();
        let e = objective(&zprob, z.view(), z.view(), &params(2.0, 3.0, 1.0, 1.0)).unwrap();
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn objective_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for mode in [Normalization::Rw, Normalization::Sym] {
            let [x, h, a, s] = random_instance(&mut rng, 5, 3);
            let p = params(0.7, 1.3, 0.2, 0.4);
            let prob = Problem::new(x.view(), a.view(), mode).unwrap();
            let e = objective(&prob, h.view(), s.view(), &p).unwrap();
            let o = loop_objective(&x, &h, &a, &s, &p, mode);
            let got = [e.feature_fidelity, e.smoothing, e.structure_fidelity, e.l1, e.fro];
            for (g, w) in got.iter().zip(o.iter()) {
                assert_relative_eq!(g, w, max_relative = 1e-10);
            }
            assert_relative_eq!(e.total, o.iter().sum::<f64>(), max_relative = 1e-10);
        }
    }

    #[test]
    fn grad_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let [x, h, a, s] = random_instance(&mut rng, 5, 2);
        let prob = Problem::new(x.view(), a.view(), Normalization::Rw).unwrap();
        let p = params(0.5, 0.0, 0.1, 0.3);
        assert_eq!(grad_h(&prob, h.view(), s.view(), &p).unwrap(), (&h - &x) * 2.0);
        assert_eq!(grad_h(&prob, x.view(), s.view(), &p).unwrap(), Array2::<f64>::zeros(x.dim()));
        let expected = (&s - &a) * (2.0 * p.gamma) + &s * (2.0 * p.mu2);
        assert_eq!(grad_s(&prob, h.view(), s.view(), &p).unwrap(), expected);
        let p0 = params(0.5, 0.0, 0.1, 0.0);
        assert_eq!(grad_s(&prob, h.view(), a.view(), &p0).unwrap(), Array2::<f64>::zeros(a.dim()));
    }

    fn fd_grads(x: &Array2<f64>, h: &Array2<f64>, a: &Array2<f64>, s: &Array2<f64>,
                p: &AsmpParams, mode: Normalization) -> (Array2<f64>, Array2<f64>) {
        let step = 1e-5;
        let f_h = |h: &Array2<f64>| { let o = loop_objective(x, h, a, s, p, mode); o[0] + o[1] };
        let f_s = |s: &Array2<f64>| { let o = loop_objective(x, h, a, s, p, mode); o[1] + o[2] + o[4] };
        let mut gh = Array2::zeros(h.dim());
        for idx in ndarray::indices(h.dim()) {
            let (mut hp, mut hm) = (h.clone(), h.clone());
            hp[idx] += step;
            hm[idx] -= step;
            gh[idx] = (f_h(&hp) - f_h(&hm)) / (2.0 * step);
        }
        let mut gs = Array2::zeros(s.dim());
        for idx in ndarray::indices(s.dim()) {
            let (mut sp, mut sm) = (s.clone(), s.clone());
            sp[idx] += step;
            sm[idx] -= step;
            gs[idx] = (f_s(&sp) - f_s(&sm)) / (2.0 * step);
        }
        (gh, gs)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..6 {
            let mode = if trial % 2 == 0 { Normalization::Rw } else { Normalization::Sym };
            let [x, h, a, s] = random_instance(&mut rng, 7, 3);
            let p = params(0.8, if trial < 4 { 1.7 } else { -0.6 }, 0.1, 0.25);
            let prob = Problem::new(x.view(), a.view(), mode).unwrap();
            let (fh, fs) = fd_grads(&x, &h, &a, &s, &p, mode);
            assert!(rel_err(&grad_h(&prob, h.view(), s.view(), &p).unwrap(), &fh) <= 1e-4);
            assert!(rel_err(&grad_s(&prob, h.view(), s.view(), &p).unwrap(), &fs) <= 1e-4);
        }
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(lipschitz_h(&params(0.0, 1.0, 0.0, 0.0)).unwrap(), 6.0);
        assert_eq!(lipschitz_h(&params(0.0, 0.0, 0.0, 0.0)).unwrap(), 2.0);
        assert_eq!(lipschitz_h(&params(0.0, 0.25, 0.0, 0.0)).unwrap(), 3.0);
        assert!(matches!(lipschitz_h(&params(0.0, -1.0, 0.0, 0.0)), Err(Error::TheoryOutOfRange(_))));

        assert_eq!(lipschitz_s(&params(1.5, 0.0, 0.0, 0.5), 10, 3.0, 0.5).unwrap(), 4.0);
        assert_eq!(lipschitz_s(&params(0.0, 1.0, 0.0, 0.0), 1, 1.0, 1.0).unwrap(), 4.0);
        assert_relative_eq!(
            lipschitz_s(&params(1.0, 2.0, 0.0, 1.0), 4, 0.5, 2.0).unwrap(),
            24.0,
            max_relative = 1e-14
        );
        assert!(lipschitz_s(&params(1.0, 1.0, 0.0, 1.0), 4, 0.5, 0.0).is_err());

        assert_eq!(lipschitz_joint(&params(1.5, 0.0, 0.0, 0.5), 5, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(lipschitz_joint(&params(0.0, 0.0, 0.0, 0.0), 5, 1.0, 1.0).unwrap(), 2.0);
        assert_relative_eq!(
            lipschitz_joint(&params(0.0, 1.0, 0.0, 0.0), 1, 1.0, 1.0).unwrap(),
            52f64.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn bounds_from_iterates() {
        let h = array![[1.0, 0.0], [0.0, 2.0], [0.3, 0.4]];
        let eye = Array2::<f64>::eye(3);
        assert_eq!(estimate_bounds([h.view()], [eye.view()], 1e-8), (2.0, 1.0));
    }

    proptest! {
        #[test]
        fn joint_constant_dominates(
            gamma in 0.0f64..5.0, lambda in 0.0f64..5.0, mu2 in 0.0f64..5.0,
            n in 1usize..200, b in 0.0f64..10.0, c in 0.01f64..50.0,
        ) {
            let p = params(gamma, lambda, 0.0, mu2);
            let l = lipschitz_joint(&p, n, b, c).unwrap();
            prop_assert!(l >= lipschitz_h(&p).unwrap());
            prop_assert!(l >= lipschitz_s(&p, n, b, c).unwrap());
        }

        #[test]
        fn objective_permutation_invariant(seed in any::<u64>(), sym in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 6;
            let [x, h, a, s] = random_instance(&mut rng, n, 2);
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() { perm.swap(i, rng.random_range(0..=i)); }
            let rows = |m: &Array2<f64>| m.select(ndarray::Axis(0), &perm);
            let both = |m: &Array2<f64>| rows(m).select(ndarray::Axis(1), &perm);
            let mode = if sym { Normalization::Sym } else { Normalization::Rw };
            let p = params(0.9, 1.4, 0.3, 0.2);
            let prob = Problem::new(x.view(), a.view(), mode).unwrap();
            let e = objective(&prob, h.view(), s.view(), &p).unwrap();
            let (px, pa, ph, ps) = (rows(&x), both(&a), rows(&h), both(&s));
            let pprob = Problem::new(px.view(), pa.view(), mode).unwrap();
            let pe = objective(&pprob, ph.view(), ps.view(), &p).unwrap();
            for (u, v) in [(e.feature_fidelity, pe.feature_fidelity), (e.smoothing, pe.smoothing),
                           (e.structure_fidelity, pe.structure_fidelity), (e.l1, pe.l1),
                           (e.fro, pe.fro), (e.total, pe.total)] {
                prop_assert!((u - v).abs() <= 1e-10 * u.abs().max(1.0));
            }
        }
    }
}
