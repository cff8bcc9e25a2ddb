//! Maximal-margin classification with kernels.
//!
//! Training solves the dual problem
//!
//! ```text
//! maximize  sum_i a_i - 1/2 sum_ij a_i a_j c_i c_j K(x_i, x_j)
//! s.t.      0 <= a_i <= C,  sum_i a_i c_i = 0
//! ```
//!
//! by pairwise coordinate ascent: each step picks the maximal violating
//! index, pairs it by second-order gain, and solves the two-variable
//! subproblem in closed form. When progress stalls, a conjugate-gradient
//! pass over the free multipliers takes the long flat steps that pair
//! updates cannot. Labels are `+1.0` / `-1.0`.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use log::warn;
use thiserror::Error;

use crate::dataset::Dataset;

pub const DEFAULT_BOX_C: f64 = 1000.0;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_SV_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100_000;

// Curvature floor for pairs with a flat objective (duplicate points).
const TAU: f64 = 1e-12;

// Relative distance from a bound under which a multiplier is put on it.
const BOUND_EPS: f64 = 1e-12;

// Pair steps between progress checks; a check that finds the violation
// not yet halved triggers a conjugate-gradient pass on the free set.
const STALL_WINDOW: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("need two classes")]
    SingleClass,
    #[error("label {0:?} is not +1 or -1")]
    BadLabel(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("solver did not converge after {iterations} iterations (gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },
    #[error("model line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    /// `(x.y + 1)^degree`
    Polynomial { degree: u32 },
    /// `exp(-gamma |x - y|^2)`
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn polynomial(degree: u32) -> Result<Kernel, SvmError> {
        let k = Kernel::Polynomial { degree };
        k.validate()?;
        Ok(k)
    }

    pub fn rbf(gamma: f64) -> Result<Kernel, SvmError> {
        let k = Kernel::Rbf { gamma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            Kernel::Polynomial { degree } if degree < 1 => Err(SvmError::InvalidKernel(
                "polynomial degree must be >= 1".into(),
            )),
            Kernel::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(
                SvmError::InvalidKernel(format!("rbf gamma must be positive, got {gamma}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, SvmError> {
        if x.len() != y.len() {
            return Err(SvmError::Dimension {
                expected: x.len(),
                found: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(x, y),
            Kernel::Polynomial { degree } => (dot(x, y) + 1.0).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// Dense Gram matrix of a point set.
    pub fn gram(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = points.len();
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval_unchecked(&points[i], &points[j]);
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        g
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Linear => write!(f, "linear"),
            Kernel::Polynomial { degree } => write!(f, "polynomial {degree}"),
            Kernel::Rbf { gamma } => write!(f, "rbf {gamma}"),
        }
    }
}

impl FromStr for Kernel {
    type Err = SvmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        let bad = || SvmError::InvalidKernel(format!("cannot parse {s:?}"));
        let k = match toks.as_slice() {
            ["linear"] => Kernel::Linear,
            ["polynomial", d] => Kernel::Polynomial {
                degree: d.parse().map_err(|_| bad())?,
            },
            ["rbf", g] => Kernel::Rbf {
                gamma: g.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        k.validate()?;
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub box_c: f64,
    /// Stopping threshold on the maximal KKT violation.
    pub tol: f64,
    pub sv_tolerance: f64,
    pub max_iter: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            box_c: DEFAULT_BOX_C,
            tol: DEFAULT_TOL,
            sv_tolerance: DEFAULT_SV_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl TrainParams {
    pub fn with_box_c(mut self, box_c: f64) -> Self {
        self.box_c = box_c;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_sv_tolerance(mut self, sv_tolerance: f64) -> Self {
        self.sv_tolerance = sv_tolerance;
        self
    }

    fn validate(&self) -> Result<(), SvmError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.box_c) {
            return Err(SvmError::InvalidParam(format!("box_c must be positive, got {}", self.box_c)));
        }
        if !positive(self.tol) {
            return Err(SvmError::InvalidParam(format!("tol must be positive, got {}", self.tol)));
        }
        if !positive(self.sv_tolerance) {
            return Err(SvmError::InvalidParam(format!(
                "sv_tolerance must be positive, got {}",
                self.sv_tolerance
            )));
        }
        Ok(())
    }
}

/// Maps a class token to `+1.0` / `-1.0`.
pub fn parse_label(token: &str) -> Result<f64, SvmError> {
    match token {
        "+1" | "1" | "1.0" | "+1.0" => Ok(1.0),
        "-1" | "-1.0" => Ok(-1.0),
        other => Err(SvmError::BadLabel(other.to_string())),
    }
}

pub fn format_label(label: f64) -> &'static str {
    if label > 0.0 {
        "+1"
    } else {
        "-1"
    }
}

/// A trained classifier. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    alphas: Vec<f64>,
    bias: f64,
    kernel: Kernel,
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
    sv_tolerance: f64,
    box_c: f64,
    tol: f64,
}

/// Trains on a dataset whose labels are `+1`/`-1` tokens.
pub fn train(ds: &Dataset, kernel: Kernel, params: &TrainParams) -> Result<SvmModel, SvmError> {
    let labels = ds
        .examples()
        .iter()
        .map(|e| parse_label(&e.label))
        .collect::<Result<Vec<_>, _>>()?;
    let points = ds.examples().iter().map(|e| e.features.clone()).collect();
    train_points(points, labels, kernel, params)
}

/// Trains on raw points and `+1.0`/`-1.0` labels.
pub fn train_points(
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
    kernel: Kernel,
    params: &TrainParams,
) -> Result<SvmModel, SvmError> {
    kernel.validate()?;
    params.validate()?;
    if points.len() != labels.len() {
        return Err(SvmError::InvalidParam(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&c| c != 1.0 && c != -1.0) {
        return Err(SvmError::BadLabel(bad.to_string()));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(SvmError::SingleClass);
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(SvmError::Dimension {
            expected: dim,
            found: p.len(),
        });
    }

    let gram = kernel.gram(&points);
    let mut solver = Solver::new(&gram, &labels, params.box_c);
    solver.solve(params.tol, params.max_iter)?;
    let bias = solver.bias();

    Ok(SvmModel {
        alphas: solver.alpha,
        bias,
        kernel,
        points,
        labels,
        sv_tolerance: params.sv_tolerance,
        box_c: params.box_c,
        tol: params.tol,
    })
}

struct Solver<'a> {
    gram: &'a [Vec<f64>],
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    /// Gradient of the minimization form `1/2 a'Qa - e'a`.
    grad: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(gram: &'a [Vec<f64>], y: &'a [f64], c: f64) -> Self {
        let n = y.len();
        Solver {
            gram,
            y,
            c,
            alpha: vec![0.0; n],
            grad: vec![-1.0; n],
        }
    }

    fn q(&self, i: usize, j: usize) -> f64 {
        self.y[i] * self.y[j] * self.gram[i][j]
    }

    fn in_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn in_low(&self, t: usize) -> bool {
        (self.y[t] < 0.0 && self.alpha[t] < self.c) || (self.y[t] > 0.0 && self.alpha[t] > 0.0)
    }

    fn score(&self, t: usize) -> f64 {
        -self.y[t] * self.grad[t]
    }

    /// Working pair `(i, j)` and the maximal violation `m - M`.
    ///
    /// `i` is the most violating index in the up set. `j` is the violating
    /// partner with the largest second-order gain `b^2 / a`; plain
    /// first-order pairing zig-zags for thousands of steps on degenerate
    /// linear problems with a large box.
    fn select_pair(&self) -> Option<(usize, usize, f64)> {
        let n = self.y.len();
        let mut up: Option<(usize, f64)> = None;
        for t in 0..n {
            let s = self.score(t);
            if self.in_up(t) && up.is_none_or(|(_, best)| s > best) {
                up = Some((t, s));
            }
        }
        let (i, m) = up?;
        let mut big_m = f64::INFINITY;
        let mut best: Option<(usize, f64)> = None;
        for t in 0..n {
            if !self.in_low(t) {
                continue;
            }
            let s = self.score(t);
            big_m = big_m.min(s);
            let b = m - s;
            if b > 0.0 {
                let a = (self.gram[i][i] + self.gram[t][t] - 2.0 * self.gram[i][t]).max(TAU);
                let gain = b * b / a;
                if best.is_none_or(|(_, g)| gain > g) {
                    best = Some((t, gain));
                }
            }
        }
        if !big_m.is_finite() {
            return None;
        }
        let j = match best {
            Some((j, _)) => j,
            // No violating partner: the gap is non-positive.
            None => return Some((i, i, m - big_m)),
        };
        Some((i, j, m - big_m))
    }

    fn solve(&mut self, tol: f64, max_iter: usize) -> Result<(), SvmError> {
        let mut iterations = 0;
        loop {
            let mut checkpoint = f64::INFINITY;
            while iterations < max_iter {
                match self.select_pair() {
                    Some((i, j, gap)) if gap > tol => {
                        iterations += 1;
                        if iterations % STALL_WINDOW == 0 {
                            let stalled = gap > 0.5 * checkpoint;
                            checkpoint = gap;
                            if stalled && self.polish() {
                                continue;
                            }
                        }
                        self.step(i, j);
                    }
                    _ => break,
                }
            }
            // Incremental gradient updates drift; re-derive and re-check.
            self.restore_equality();
            self.recompute_gradient();
            let gap = self.select_pair().map_or(0.0, |(_, _, g)| g);
            if gap <= tol {
                return Ok(());
            }
            if iterations >= max_iter {
                return Err(SvmError::NotConverged { iterations, gap });
            }
        }
    }

    fn step(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let qii = self.q(i, i);
        let qjj = self.q(j, j);
        let qij = self.q(i, j);
        let (mut ai, mut aj);
        if self.y[i] != self.y[j] {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = old_i - old_j;
            ai = old_i + delta;
            aj = old_j + delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = old_i + old_j;
            ai = old_i - delta;
            aj = old_j + delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        // Clipping arithmetic such as `sum - c` leaves values an ulp off a
        // bound; left alone they re-enter the violating sets and the solver
        // cycles on zero-length steps.
        let snap = |a: f64| {
            if a <= BOUND_EPS * c {
                0.0
            } else if a >= c - BOUND_EPS * c {
                c
            } else {
                a
            }
        };
        let (ai, aj) = (snap(ai), snap(aj));
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for k in 0..self.y.len() {
            self.grad[k] += self.q(i, k) * di + self.q(j, k) * dj;
        }
    }

    /// Repeated [`Solver::cg_pass`] until a pass stops moving, at most once
    /// per multiplier. Returns whether anything moved.
    fn polish(&mut self) -> bool {
        let mut moved = false;
        for _ in 0..self.y.len() {
            if !self.cg_pass() {
                break;
            }
            moved = true;
        }
        moved
    }

    /// Projected conjugate gradient over the free multipliers, holding the
    /// bounded ones and the equality constraint fixed. Each step is an exact
    /// line search truncated at the box, so the objective never gets worse;
    /// it stops at the first bound hit. Pair steps crawl along directions of
    /// near-zero curvature, which this follows in a few iterations.
    /// Returns whether any multiplier moved.
    fn cg_pass(&mut self) -> bool {
        let c = self.c;
        let free: Vec<usize> = (0..self.y.len()).filter(|&t| self.alpha[t] > 0.0 && self.alpha[t] < c).collect();
        let m = free.len();
        if m < 2 {
            return false;
        }
        let mut moved = false;
        let project = |v: &mut Vec<f64>, y: &[f64]| {
            let mean = free.iter().zip(v.iter()).map(|(&t, x)| y[t] * x).sum::<f64>() / m as f64;
            for (x, &t) in v.iter_mut().zip(&free) {
                *x -= mean * y[t];
            }
        };
        let mut r: Vec<f64> = free.iter().map(|&t| -self.grad[t]).collect();
        project(&mut r, self.y);
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|x| x * x).sum();
        for _ in 0..m {
            if rr <= 1e-24 {
                return moved;
            }
            let qp: Vec<f64> = free
                .iter()
                .map(|&a| free.iter().zip(&p).map(|(&b, pb)| self.q(a, b) * pb).sum())
                .collect();
            let curv: f64 = p.iter().zip(&qp).map(|(x, y)| x * y).sum();
            let pr: f64 = p.iter().zip(&r).map(|(x, y)| x * y).sum();
            if pr <= 0.0 {
                return moved;
            }
            let mut t_max = f64::INFINITY;
            let mut blocking = None;
            for (k, &t) in free.iter().enumerate() {
                let room = if p[k] > 0.0 {
                    (c - self.alpha[t]) / p[k]
                } else if p[k] < 0.0 {
                    -self.alpha[t] / p[k]
                } else {
                    continue;
                };
                if room < t_max {
                    t_max = room;
                    blocking = Some(k);
                }
            }
            let flat = curv <= TAU * p.iter().map(|x| x * x).sum::<f64>();
            let step = if flat { t_max } else { (pr / curv).min(t_max) };
            if !step.is_finite() || step <= 0.0 {
                return moved;
            }
            for (k, &t) in free.iter().enumerate() {
                self.alpha[t] += step * p[k];
            }
            moved = true;
            let hit = step >= t_max;
            if hit {
                let k = blocking.expect("finite step has a blocking index");
                self.alpha[free[k]] = if p[k] > 0.0 { c } else { 0.0 };
            }
            for t in 0..self.y.len() {
                let g: f64 = free.iter().zip(&p).map(|(&b, pb)| self.q(t, b) * pb).sum();
                self.grad[t] += step * g;
            }
            if hit {
                return moved;
            }
            let mut r_next: Vec<f64> = free.iter().map(|&t| -self.grad[t]).collect();
            project(&mut r_next, self.y);
            let rr_next: f64 = r_next.iter().map(|x| x * x).sum();
            let beta = rr_next / rr;
            for (pk, rk) in p.iter_mut().zip(&r_next) {
                *pk = rk + beta * *pk;
            }
            r = r_next;
            rr = rr_next;
        }
        moved
    }

    /// Pushes the rounding residue of `sum a_i y_i` onto the free
    /// multiplier with the most room.
    fn restore_equality(&mut self) {
        let residue: f64 = self.alpha.iter().zip(self.y).map(|(a, y)| a * y).sum();
        if residue == 0.0 {
            return;
        }
        let c = self.c;
        let target = (0..self.y.len())
            .filter(|&t| {
                // Multipliers on a bound stay there: nudging one an ulp off
                // fabricates a violation that the next pair step undoes.
                let a = self.alpha[t] - self.y[t] * residue;
                self.alpha[t] > 0.0 && self.alpha[t] < c && a > 0.0 && a < c
            })
            .max_by(|&s, &t| {
                let room = |k: usize| self.alpha[k].min(c - self.alpha[k]);
                room(s).total_cmp(&room(t)).then(t.cmp(&s))
            });
        if let Some(t) = target {
            self.alpha[t] -= self.y[t] * residue;
        }
    }

    fn recompute_gradient(&mut self) {
        let n = self.y.len();
        for i in 0..n {
            let mut g = -1.0;
            for j in 0..n {
                if self.alpha[j] != 0.0 {
                    g += self.q(i, j) * self.alpha[j];
                }
            }
            self.grad[i] = g;
        }
    }

    fn bias(&self) -> f64 {
        let free: Vec<f64> = (0..self.y.len())
            .filter(|&t| self.alpha[t] > 0.0 && self.alpha[t] < self.c)
            .map(|t| self.score(t))
            .collect();
        if !free.is_empty() {
            return free.iter().sum::<f64>() / free.len() as f64;
        }
        let n = self.y.len();
        let lower = (0..n)
            .filter(|&t| self.in_up(t))
            .map(|t| self.score(t))
            .fold(f64::NEG_INFINITY, f64::max);
        let upper = (0..n)
            .filter(|&t| self.in_low(t))
            .map(|t| self.score(t))
            .fold(f64::INFINITY, f64::min);
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => 0.5 * (lower + upper),
            (true, false) => lower,
            (false, true) => upper,
            (false, false) => 0.0,
        }
    }
}

impl SvmModel {
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn box_c(&self) -> f64 {
        self.box_c
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn sv_tolerance(&self) -> f64 {
        self.sv_tolerance
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same multipliers and data, different membership threshold.
    pub fn with_sv_tolerance(mut self, sv_tolerance: f64) -> Self {
        self.sv_tolerance = sv_tolerance;
        self
    }

    pub fn is_support_vector(&self, i: usize) -> bool {
        self.alphas[i] > self.sv_tolerance
    }

    pub fn support_vectors(&self) -> Vec<usize> {
        (0..self.alphas.len())
            .filter(|&i| self.is_support_vector(i))
            .collect()
    }

    pub fn sv_count(&self) -> usize {
        self.alphas.iter().filter(|&&a| a > self.sv_tolerance).count()
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.dim() {
            return Err(SvmError::Dimension {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.decision_unchecked(x))
    }

    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.alphas
            .iter()
            .zip(&self.labels)
            .zip(&self.points)
            .filter(|((a, _), _)| **a != 0.0)
            .map(|((a, c), p)| a * c * self.kernel.eval_unchecked(p, x))
            .sum::<f64>()
            + self.bias
    }

    /// Sign of the decision value; an exact zero maps to `+1`.
    pub fn predict(&self, x: &[f64]) -> Result<f64, SvmError> {
        Ok(if self.decision_value(x)? >= 0.0 { 1.0 } else { -1.0 })
    }

    /// `#SV / l`, the observable counterpart of the expected-support-vector
    /// bound on the error probability.
    pub fn loo_bound(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let sv = self.sv_count();
        if sv == 0 {
            warn!(
                "no multiplier exceeds sv_tolerance {}; support-vector set is empty",
                self.sv_tolerance
            );
        }
        sv as f64 / self.len() as f64
    }

    pub fn dual_objective(&self) -> f64 {
        let gram = self.kernel.gram(&self.points);
        dual_objective(&gram, &self.labels, &self.alphas)
    }

    /// Largest violation of the optimality conditions, measured on the
    /// margins `c_i f(x_i)`.
    pub fn kkt_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, (&a, &c)) in self.alphas.iter().zip(&self.labels).enumerate() {
            let r = c * self.decision_unchecked(&self.points[i]) - 1.0;
            let v = if a <= 0.0 {
                (-r).max(0.0)
            } else if a >= self.box_c {
                r.max(0.0)
            } else {
                r.abs()
            };
            worst = worst.max(v);
        }
        worst
    }

    /// `|sum_i a_i c_i|`
    pub fn equality_residual(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.labels)
            .map(|(a, c)| a * c)
            .sum::<f64>()
            .abs()
    }

    /// Line-oriented text: kernel line, parameter line, then one line per
    /// training example with label, multiplier and features.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kernel {}", self.kernel);
        let _ = writeln!(
            out,
            "box_c {} tol {} sv_tolerance {} bias {}",
            self.box_c, self.tol, self.sv_tolerance, self.bias
        );
        for ((a, c), p) in self.alphas.iter().zip(&self.labels).zip(&self.points) {
            let _ = write!(out, "{} {}", format_label(*c), a);
            for v in p {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<SvmModel, SvmError> {
        let perr = |line: usize, reason: String| SvmError::Parse { line, reason };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, kline) = lines.next().ok_or_else(|| perr(1, "empty model".into()))?;
        let kernel: Kernel = kline
            .strip_prefix("kernel ")
            .ok_or_else(|| perr(1, "expected `kernel ...`".into()))?
            .parse()
            .map_err(|e: SvmError| perr(1, e.to_string()))?;

        let (_, pline) = lines
            .next()
            .ok_or_else(|| perr(2, "missing parameter line".into()))?;
        let toks: Vec<&str> = pline.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| perr(2, format!("bad number {s:?}")));
        let (box_c, tol, sv_tolerance, bias) = match toks.as_slice() {
            ["box_c", c, "tol", t, "sv_tolerance", s, "bias", b] => {
                (num(c)?, num(t)?, num(s)?, num(b)?)
            }
            _ => return Err(perr(2, "expected `box_c C tol T sv_tolerance S bias B`".into())),
        };

        let (mut alphas, mut labels, mut points) = (Vec::new(), Vec::new(), Vec::new());
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let label = toks
                .next()
                .map(parse_label)
                .transpose()
                .map_err(|e| perr(n, e.to_string()))?
                .ok_or_else(|| perr(n, "missing label".into()))?;
            let alpha = toks
                .next()
                .ok_or_else(|| perr(n, "missing multiplier".into()))?
                .parse::<f64>()
                .map_err(|_| perr(n, "bad multiplier".into()))?;
            let feats = toks
                .map(|t| t.parse::<f64>().map_err(|_| perr(n, format!("bad feature {t:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(first) = points.first() {
                let first: &Vec<f64> = first;
                if first.len() != feats.len() {
                    return Err(perr(n, "ragged feature vector".into()));
                }
            }
            labels.push(label);
            alphas.push(alpha);
            points.push(feats);
        }
        Ok(SvmModel {
            alphas,
            bias,
            kernel,
            points,
            labels,
            sv_tolerance,
            box_c,
            tol,
        })
    }
}

/// `sum a - 1/2 a'Qa` for a precomputed Gram matrix.
pub fn dual_objective(gram: &[Vec<f64>], labels: &[f64], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * labels[i] * labels[j] * gram[i][j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}
