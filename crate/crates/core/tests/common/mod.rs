//! Generators and independent reference solvers shared by the integration
//! tests. Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

pub mod golden;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use learnkit::dataset::Dataset;
use learnkit::svm::Kernel;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gram matrix computed directly from the kernel definitions.
pub fn reference_gram(kernel: Kernel, points: &[Vec<f64>]) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        let (x, y) = (&points[i], &points[j]);
        let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        match kernel {
            Kernel::Linear => dot,
            Kernel::Polynomial { degree } => (dot + 1.0).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
                (-gamma * d2).exp()
            }
        }
    })
}

/// Maximum of the box-constrained dual by enumerating every face of the
/// feasible box: each multiplier is pinned to 0, pinned to `c`, or free.
/// On each face the stationarity conditions with the equality constraint
/// form a bordered linear system; faces where it is singular are skipped
/// (the optimum is always attained at a face where it is not).
pub fn brute_force_dual(gram: &DMatrix<f64>, labels: &[f64], c: f64) -> f64 {
    let n = labels.len();
    assert!(n <= 10, "enumeration is 3^n");
    let q = DMatrix::from_fn(n, n, |i, j| labels[i] * labels[j] * gram[(i, j)]);
    let objective = |a: &DVector<f64>| a.sum() - 0.5 * (a.transpose() * &q * a)[(0, 0)];
    let feas_tol = 1e-9;
    let mut best = f64::NEG_INFINITY;
    let faces = 3usize.pow(n as u32);
    for code in 0..faces {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha = DVector::from_fn(n, |i, _| if state[i] == 1 { c } else { 0.0 });
        if free.is_empty() {
            let eq: f64 = (0..n).map(|i| alpha[i] * labels[i]).sum();
            if eq.abs() <= feas_tol {
                best = best.max(objective(&alpha));
            }
            continue;
        }
        let m = free.len();
        let mut sys = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                sys[(r, s)] = q[(i, j)];
            }
            sys[(r, m)] = labels[i];
            sys[(m, r)] = labels[i];
            let bound: f64 = (0..n).filter(|k| state[*k] != 2).map(|k| q[(i, k)] * alpha[k]).sum();
            rhs[r] = 1.0 - bound;
        }
        rhs[m] = -(0..n).filter(|k| state[*k] != 2).map(|k| labels[k] * alpha[k]).sum::<f64>();
        let svd = sys.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 1e-10 * smax.max(1.0) {
            continue;
        }
        let Ok(sol) = svd.solve(&rhs, 1e-14) else { continue };
        if free.iter().enumerate().any(|(r, _)| sol[r] < -feas_tol || sol[r] > c + feas_tol) {
            continue;
        }
        for (r, &i) in free.iter().enumerate() {
            alpha[i] = sol[r].clamp(0.0, c);
        }
        best = best.max(objective(&alpha));
    }
    best
}

/// Random labeled points with both classes present.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    loop {
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        if labels.contains(&1.0) && labels.contains(&-1.0) {
            return (points, labels);
        }
    }
}

pub fn random_kernel(rng: &mut ChaCha8Rng) -> Kernel {
    match rng.gen_range(0..3) {
        0 => Kernel::Linear,
        1 => Kernel::Polynomial {
            degree: rng.gen_range(1..=3),
        },
        _ => Kernel::Rbf {
            gamma: rng.gen_range(0.3..3.0),
        },
    }
}

/// Points labeled by a random hyperplane, with a gap of `margin` on both
/// sides and at least two points per class.
pub fn separable_points(rng: &mut ChaCha8Rng, n: usize, margin: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let w = [angle.cos(), angle.sin()];
    let offset: f64 = rng.gen_range(-0.3..0.3);
    loop {
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        while points.len() < n {
            let p = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let s = w[0] * p[0] + w[1] * p[1] + offset;
            if s.abs() < margin {
                continue;
            }
            labels.push(if s > 0.0 { 1.0 } else { -1.0 });
            points.push(p);
        }
        let pos = labels.iter().filter(|&&c| c > 0.0).count();
        if pos >= 2 && n - pos >= 2 {
            return (points, labels);
        }
    }
}

/// Two Gaussian clusters centred at `(-d, 0)` (label +1) and `(d, 0)`
/// (label -1).
pub fn clusters(rng: &mut ChaCha8Rng, per_class: usize, d: f64, sd: f64) -> Dataset {
    let mut rows = Vec::new();
    for (centre, label) in [(-d, "+1"), (d, "-1")] {
        for _ in 0..per_class {
            let x = centre + sd * gaussian(rng);
            let y = sd * gaussian(rng);
            rows.push((vec![x, y], label.to_string()));
        }
    }
    Dataset::from_rows(rows).unwrap()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// A random forest as network text, with node lines in a random order.
/// Returns the text and the node names with their state counts.
pub struct RandomForest {
    pub text: String,
    pub names: Vec<String>,
    pub states: Vec<usize>,
}

pub fn random_forest(rng: &mut ChaCha8Rng, max_nodes: usize, allow_zeros: bool) -> RandomForest {
    let n = rng.gen_range(1..=max_nodes);
    let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
    let states: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3)).collect();
    let parents: Vec<Option<usize>> = (0..n)
        .map(|i| {
            if i == 0 || rng.gen_bool(0.25) {
                None
            } else {
                Some(rng.gen_range(0..i))
            }
        })
        .collect();
    let row = |rng: &mut ChaCha8Rng, k: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..k)
            .map(|_| {
                if allow_zeros && rng.gen_bool(0.1) {
                    0.0
                } else {
                    rng.gen_range(0.05..1.0)
                }
            })
            .collect();
        if v.iter().all(|&x| x == 0.0) {
            v[0] = 1.0;
        }
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    };
    let state_label = |i: usize, s: usize| format!("s{i}_{s}");
    let mut blocks: Vec<String> = Vec::new();
    for i in 0..n {
        let list: Vec<String> = (0..states[i]).map(|s| state_label(i, s)).collect();
        blocks.push(format!("node {} states {}\n", names[i], list.join(",")));
    }
    let mut cpts = String::new();
    for i in 0..n {
        cpts.push_str(&format!("cpt {}\n", names[i]));
        let givens: Vec<String> = match parents[i] {
            None => vec!["-".into()],
            Some(p) => (0..states[p]).map(|s| state_label(p, s)).collect(),
        };
        for g in givens {
            let r: Vec<String> = row(rng, states[i]).iter().map(|p| p.to_string()).collect();
            cpts.push_str(&format!("given {g} : {}\n", r.join(",")));
        }
    }
    let mut parent_lines: Vec<String> = (0..n)
        .filter_map(|i| parents[i].map(|p| format!("parent {} {}\n", names[i], names[p])))
        .collect();
    blocks.shuffle(rng);
    parent_lines.shuffle(rng);
    let text = format!("# random forest\n{}{}{}", blocks.concat(), parent_lines.concat(), cpts);
    RandomForest { text, names, states }
}

/// Up to `max` distinct evidence nodes with random states.
pub fn random_evidence(rng: &mut ChaCha8Rng, forest: &RandomForest, max: usize) -> Vec<(String, String)> {
    let mut idx: Vec<usize> = (0..forest.names.len()).collect();
    idx.shuffle(rng);
    let k = rng.gen_range(0..=max.min(idx.len()));
    idx[..k]
        .iter()
        .map(|&i| {
            let s = rng.gen_range(0..forest.states[i]);
            (forest.names[i].clone(), format!("s{i}_{s}"))
        })
        .collect()
}

/// Experts with fixed Bernoulli probabilities and a stream of outcomes.
pub struct BernoulliStream {
    pub probs: Vec<f64>,
    pub outcomes: Vec<f64>,
}

pub fn bernoulli_stream(rng: &mut ChaCha8Rng, k: usize, len: usize) -> BernoulliStream {
    let probs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..0.95)).collect();
    let truth = rng.gen_range(0.1..0.9);
    let outcomes = (0..len).map(|_| if rng.gen_bool(truth) { 1.0 } else { 0.0 }).collect();
    BernoulliStream { probs, outcomes }
}

/// Posterior over experts by Bayes' rule, multiplying likelihoods directly.
pub fn bayes_posterior(prior: &[f64], probs: &[f64], outcomes: &[f64]) -> Vec<f64> {
    let mut post: Vec<f64> = prior.to_vec();
    for &o in outcomes {
        for (w, &p) in post.iter_mut().zip(probs) {
            *w *= if o == 1.0 { p } else { 1.0 - p };
        }
    }
    let z: f64 = post.iter().sum();
    post.iter().map(|w| w / z).collect()
}

/// Posterior over classes for binary features by building the full smoothed
/// joint table from raw counts and conditioning on `x`.
pub fn nb_joint_posterior(ds: &Dataset, smoothing: f64, x: &[f64]) -> Vec<(String, f64)> {
    let classes: Vec<String> = ds.class_set().iter().cloned().collect();
    let d = ds.dim();
    let n = ds.len() as f64;
    let mut joint: HashMap<(String, Vec<u8>), f64> = HashMap::new();
    for class in &classes {
        let rows: Vec<&Vec<f64>> = ds
            .examples()
            .iter()
            .filter(|e| &e.label == class)
            .map(|e| &e.features)
            .collect();
        let cnt = rows.len() as f64;
        let prior = (cnt + smoothing) / (n + smoothing * classes.len() as f64);
        for code in 0..(1u32 << d) {
            let bits: Vec<u8> = (0..d).map(|i| ((code >> i) & 1) as u8).collect();
            let mut p = prior;
            for i in 0..d {
                let ones = rows.iter().filter(|r| r[i] == 1.0).count() as f64;
                let p1 = (ones + smoothing) / (cnt + 2.0 * smoothing);
                p *= if bits[i] == 1 { p1 } else { 1.0 - p1 };
            }
            joint.insert((class.clone(), bits), p);
        }
    }
    let key: Vec<u8> = x.iter().map(|&v| v as u8).collect();
    let marginal: f64 = classes.iter().map(|c| joint[&(c.clone(), key.clone())]).sum();
    classes
        .iter()
        .map(|c| (c.clone(), joint[&(c.clone(), key.clone())] / marginal))
        .collect()
}

/// Wilson score interval written out independently, with a fixed z.
pub fn wilson(successes: f64, n: f64, z: f64) -> (f64, f64) {
    let p = successes / n;
    let a = p + z * z / (2.0 * n);
    let b = z * ((p * (1.0 - p) + z * z / (4.0 * n)) / n).sqrt();
    let c = 1.0 + z * z / n;
    (((a - b) / c).max(0.0), ((a + b) / c).min(1.0))
}

pub const Z95: f64 = 1.959_963_984_540_054;

/// Training and test sets drawn from one margin-separated half-plane.
pub fn halfplane_split(seed: u64, n_train: usize, n_test: usize) -> (Dataset, Dataset) {
    let mut rng = rng(seed);
    let (points, labels) = separable_points(&mut rng, n_train + n_test, 0.3);
    let to_ds = |range: std::ops::Range<usize>| {
        let rows = range
            .map(|i| (points[i].clone(), if labels[i] > 0.0 { "+1" } else { "-1" }.to_string()))
            .collect();
        Dataset::from_rows(rows).unwrap()
    };
    (to_ds(0..n_train), to_ds(n_train..n_train + n_test))
}

fn binary_dataset(names: &[&str], rows: &[(&[u8], &str)]) -> Dataset {
    use learnkit::dataset::Example;
    let examples = rows
        .iter()
        .map(|(bits, label)| Example::new(bits.iter().map(|&b| b as f64).collect(), *label))
        .collect();
    Dataset::new(names.iter().map(|s| s.to_string()).collect(), "class", examples).unwrap()
}

/// Eight cases where `A1` alone decides membership in `D`; `A2` and `A3`
/// are balanced noise with zero chi-square.
pub fn gt_perfect_predictor() -> Dataset {
    binary_dataset(
        &["A1", "A2", "A3"],
        &[
            (&[1, 1, 0], "D"),
            (&[1, 0, 1], "D"),
            (&[1, 1, 1], "D"),
            (&[1, 0, 0], "D"),
            (&[0, 1, 0], "N"),
            (&[0, 0, 1], "N"),
            (&[0, 1, 1], "N"),
            (&[0, 0, 0], "N"),
        ],
    )
}

/// All eight patterns of three attributes, `D` iff `A1 and A2`. At the
/// root `A1` and `A2` tie on chi-square (8/3 each); under `+A1` the
/// attribute `A2` separates perfectly.
pub fn gt_conjunction() -> Dataset {
    let mut rows: Vec<(Vec<u8>, &str)> = Vec::new();
    for code in 0..8u8 {
        let bits = vec![(code >> 2) & 1, (code >> 1) & 1, code & 1];
        let label = if bits[0] == 1 && bits[1] == 1 { "D" } else { "N" };
        rows.push((bits, label));
    }
    let borrowed: Vec<(&[u8], &str)> = rows.iter().map(|(b, l)| (b.as_slice(), *l)).collect();
    binary_dataset(&["A1", "A2", "A3"], &borrowed)
}

/// Six cases, two attributes. Add-one counts: P(A1|a)=3/5, P(A2|a)=2/5,
/// P(A1|b)=2/5, P(A2|b)=3/5, priors 1/2.
pub fn nb_fixture() -> Dataset {
    binary_dataset(
        &["A1", "A2"],
        &[
            (&[1, 0], "a"),
            (&[1, 1], "a"),
            (&[0, 0], "a"),
            (&[0, 1], "b"),
            (&[0, 0], "b"),
            (&[1, 1], "b"),
        ],
    )
}

pub const CHAIN_NETWORK: &str = "\
node A states 0,1
node B states 0,1
parent B A
cpt A
given - : 0.7,0.3
cpt B
given 0 : 0.8,0.2
given 1 : 0.1,0.9
";

/// Random binary dataset with `k` classes named `c0..`.
pub fn random_binary(rng: &mut ChaCha8Rng, n: usize, d: usize, k: usize) -> Dataset {
    let rows = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
            (x, format!("c{}", rng.gen_range(0..k)))
        })
        .collect();
    Dataset::from_rows(rows).unwrap()
}
