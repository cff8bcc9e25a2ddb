//! Discrete Bayesian belief networks restricted to trees and forests.
//!
//! Exact posteriors come from two local message passes: likelihood
//! (lambda) messages flow from children to parents, prior (pi) messages
//! from parents to children, and each node fuses the two into its belief.
//! [`enumerate_joint`] sums the full joint distribution and serves as the
//! reference for small networks.
//!
//! Text format:
//!
//! ```text
//! # comment
//! node A states 0,1
//! node B states 0,1
//! parent B A
//! cpt A
//! given - : 0.7,0.3
//! cpt B
//! given 0 : 0.8,0.2
//! given 1 : 0.1,0.9
//! ```

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

const NORMALIZATION_TOL: f64 = 1e-9;
pub const MAX_JOINT_STATES: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum BbnError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("node {node}: unknown parent {parent}")]
    UnknownParent { node: String, parent: String },
    #[error("node {0}: tree restriction violated (more than one parent)")]
    TwoParents(String),
    #[error("cycle detected through node {0}")]
    Cycle(String),
    #[error("node {0}: needs at least two states")]
    TooFewStates(String),
    #[error("node {node}: missing conditional probability table")]
    MissingCpt { node: String },
    #[error("node {node}: {reason}")]
    BadCpt { node: String, reason: String },
    #[error("node {node}: CPT row given {given} sums to {sum}, not 1")]
    Unnormalized { node: String, given: String, sum: f64 },
    #[error("node {node}: unknown state {state}")]
    UnknownState { node: String, state: String },
    #[error("evidence item {0:?} is not NODE=STATE")]
    BadEvidence(String),
    #[error("impossible evidence")]
    ImpossibleEvidence,
    #[error("joint state space of {0} configurations exceeds the enumeration limit")]
    StateSpaceTooLarge(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub states: Vec<String>,
    pub parent: Option<usize>,
    /// `cpt[u][x] = P(x | parent = u)`; a root has a single row.
    pub cpt: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<Node>,
    children: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

/// Observed states, keyed by node name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evidence {
    assignments: BTreeMap<String, String>,
}

impl Evidence {
    pub fn new() -> Self {
        Evidence::default()
    }

    pub fn with(mut self, node: &str, state: &str) -> Self {
        self.assignments.insert(node.to_string(), state.to_string());
        self
    }

    pub fn insert(&mut self, node: &str, state: &str) {
        self.assignments.insert(node.to_string(), state.to_string());
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Parses `Node=state,Node=state`.
    pub fn parse(text: &str) -> Result<Evidence, BbnError> {
        let mut ev = Evidence::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (node, state) = item
                .split_once('=')
                .ok_or_else(|| BbnError::BadEvidence(item.to_string()))?;
            ev.insert(node.trim(), state.trim());
        }
        Ok(ev)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignments.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Posterior distribution per node, keyed by node name.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub beliefs: BTreeMap<String, Vec<f64>>,
}

impl BeliefState {
    pub fn get(&self, node: &str) -> Option<&[f64]> {
        self.beliefs.get(node).map(Vec::as_slice)
    }

    /// Largest absolute difference over all nodes and states. Both states
    /// must cover the same nodes.
    pub fn max_abs_diff(&self, other: &BeliefState) -> f64 {
        self.beliefs
            .iter()
            .map(|(name, b)| {
                let o = &other.beliefs[name];
                b.iter().zip(o).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

struct RawCpt {
    line: usize,
    rows: Vec<(String, Vec<f64>)>,
}

pub fn parse_network(text: &str) -> Result<Network, BbnError> {
    let mut names: Vec<String> = Vec::new();
    let mut states: Vec<Vec<String>> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut parents: HashMap<String, Vec<String>> = HashMap::new();
    let mut cpts: HashMap<String, RawCpt> = HashMap::new();
    let mut current: Option<String> = None;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |reason: &str| BbnError::Syntax {
            line,
            reason: reason.to_string(),
        };
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "node" => {
                let [_, name, "states", list] = toks.as_slice() else {
                    return Err(syntax("expected `node NAME states s1,s2,...`"));
                };
                if index.contains_key(*name) {
                    return Err(BbnError::DuplicateNode(name.to_string()));
                }
                let s: Vec<String> = list.split(',').map(|s| s.trim().to_string()).collect();
                if s.iter().any(String::is_empty) {
                    return Err(syntax("empty state label"));
                }
                if s.len() < 2 {
                    return Err(BbnError::TooFewStates(name.to_string()));
                }
                index.insert(name.to_string(), names.len());
                names.push(name.to_string());
                states.push(s);
                current = None;
            }
            "parent" => {
                if toks.len() < 3 {
                    return Err(syntax("expected `parent NAME PARENT`"));
                }
                parents
                    .entry(toks[1].to_string())
                    .or_default()
                    .extend(toks[2..].iter().map(|s| s.to_string()));
                current = None;
            }
            "cpt" => {
                let [_, name] = toks.as_slice() else {
                    return Err(syntax("expected `cpt NAME`"));
                };
                if cpts.contains_key(*name) {
                    return Err(BbnError::BadCpt {
                        node: name.to_string(),
                        reason: "declared twice".into(),
                    });
                }
                cpts.insert(name.to_string(), RawCpt { line, rows: vec![] });
                current = Some(name.to_string());
            }
            "given" => {
                let Some(name) = &current else {
                    return Err(syntax("`given` outside a cpt block"));
                };
                let rest = content["given".len()..].trim();
                let (given, probs) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax("expected `given STATE : p1,p2,...`"))?;
                let probs = probs
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| syntax("bad probability literal"))?;
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(BbnError::BadCpt {
                        node: name.clone(),
                        reason: "probabilities must be nonnegative".into(),
                    });
                }
                if let Some(cpt) = cpts.get_mut(name) {
                    cpt.rows.push((given.trim().to_string(), probs));
                }
            }
            other => return Err(syntax(&format!("unknown directive {other:?}"))),
        }
    }

    let mut parent_of: Vec<Option<usize>> = vec![None; names.len()];
    for (child, ps) in &parents {
        let &c = index
            .get(child)
            .ok_or_else(|| BbnError::UnknownNode(child.clone()))?;
        if ps.len() > 1 {
            return Err(BbnError::TwoParents(child.clone()));
        }
        let &p = index.get(&ps[0]).ok_or_else(|| BbnError::UnknownParent {
            node: child.clone(),
            parent: ps[0].clone(),
        })?;
        parent_of[c] = Some(p);
    }
    check_acyclic(&names, &parent_of)?;

    if let Some(name) = cpts.keys().find(|n| !index.contains_key(*n)) {
        return Err(BbnError::UnknownNode(name.clone()));
    }
    let mut nodes = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        let raw = cpts.remove(name).ok_or_else(|| BbnError::MissingCpt { node: name.clone() })?;
        let cpt = resolve_cpt(name, &states[i], parent_of[i].map(|p| &states[p]), raw)?;
        nodes.push(Node {
            name: name.clone(),
            states: states[i].clone(),
            parent: parent_of[i],
            cpt,
        });
    }
    Ok(Network::from_nodes(nodes))
}

fn check_acyclic(names: &[String], parent_of: &[Option<usize>]) -> Result<(), BbnError> {
    for start in 0..names.len() {
        let mut steps = 0;
        let mut at = start;
        while let Some(p) = parent_of[at] {
            steps += 1;
            if p == start || steps > names.len() {
                return Err(BbnError::Cycle(names[start].clone()));
            }
            at = p;
        }
    }
    Ok(())
}

fn resolve_cpt(
    name: &str,
    states: &[String],
    parent_states: Option<&Vec<String>>,
    raw: RawCpt,
) -> Result<Vec<Vec<f64>>, BbnError> {
    let bad = |reason: String| BbnError::BadCpt {
        node: name.to_string(),
        reason,
    };
    let givens: Vec<String> = match parent_states {
        None => vec!["-".to_string()],
        Some(ps) => ps.clone(),
    };
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; givens.len()];
    for (given, probs) in raw.rows {
        let u = givens
            .iter()
            .position(|g| *g == given)
            .ok_or_else(|| bad(format!("line {}: unknown parent state {given:?}", raw.line)))?;
        if rows[u].is_some() {
            return Err(bad(format!("row given {given} repeated")));
        }
        if probs.len() != states.len() {
            return Err(bad(format!(
                "row given {given} has {} entries, node has {} states",
                probs.len(),
                states.len()
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(BbnError::Unnormalized {
                node: name.to_string(),
                given,
                sum,
            });
        }
        rows[u] = Some(probs);
    }
    rows.into_iter()
        .zip(&givens)
        .map(|(r, g)| r.ok_or_else(|| bad(format!("missing row given {g}"))))
        .collect()
}

impl Network {
    /// Builds a network from already-validated nodes.
    fn from_nodes(nodes: Vec<Node>) -> Network {
        let mut children = vec![Vec::new(); nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                children[p].push(i);
            }
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), i))
            .collect();
        Network {
            nodes,
            children,
            index,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.index.get(name).map(|&i| &self.nodes[i])
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of joint configurations, saturating at `u64::MAX`.
    pub fn state_space(&self) -> u64 {
        self.nodes
            .iter()
            .fold(1u64, |acc, n| acc.saturating_mul(n.states.len() as u64))
    }

    /// Per-node indicator vectors for the evidence.
    fn indicators(&self, ev: &Evidence) -> Result<Vec<Vec<f64>>, BbnError> {
        let mut ind: Vec<Vec<f64>> = self.nodes.iter().map(|n| vec![1.0; n.states.len()]).collect();
        for (name, state) in ev.iter() {
            let &i = self
                .index
                .get(name)
                .ok_or_else(|| BbnError::UnknownNode(name.to_string()))?;
            let s = self.nodes[i]
                .states
                .iter()
                .position(|x| x == state)
                .ok_or_else(|| BbnError::UnknownState {
                    node: name.to_string(),
                    state: state.to_string(),
                })?;
            ind[i].iter_mut().enumerate().for_each(|(k, v)| *v = (k == s) as u8 as f64);
        }
        Ok(ind)
    }

    /// Parents before children; within a tree, breadth-first.
    fn topological_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut queue: VecDeque<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].parent.is_none())
            .collect();
        while let Some(i) = queue.pop_front() {
            order.push(i);
            queue.extend(self.children[i].iter().copied());
        }
        order
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let _ = writeln!(out, "node {} states {}", n.name, n.states.join(","));
        }
        for n in &self.nodes {
            if let Some(p) = n.parent {
                let _ = writeln!(out, "parent {} {}", n.name, self.nodes[p].name);
            }
        }
        for n in &self.nodes {
            let _ = writeln!(out, "cpt {}", n.name);
            let givens: Vec<&str> = match n.parent {
                None => vec!["-"],
                Some(p) => self.nodes[p].states.iter().map(String::as_str).collect(),
            };
            for (g, row) in givens.iter().zip(&n.cpt) {
                let row: Vec<String> = row.iter().map(|p| p.to_string()).collect();
                let _ = writeln!(out, "given {g} : {}", row.join(","));
            }
        }
        out
    }
}

fn normalize(v: &mut [f64]) -> Result<(), BbnError> {
    let s: f64 = v.iter().sum();
    if s.is_nan() || s <= 0.0 {
        return Err(BbnError::ImpossibleEvidence);
    }
    v.iter_mut().for_each(|x| *x /= s);
    Ok(())
}

/// Exact posteriors by lambda/pi message passing.
pub fn propagate(net: &Network, ev: &Evidence) -> Result<BeliefState, BbnError> {
    let n = net.len();
    let evidence = net.indicators(ev)?;
    let order = net.topological_order();

    // Upward pass: lambda(x) = e(x) * prod_children lambda_c(x), and the
    // message lambda_X(u) = sum_x lambda(x) P(x|u) sent to the parent.
    let mut lambda: Vec<Vec<f64>> = evidence.clone();
    let mut lambda_msg: Vec<Vec<f64>> = vec![Vec::new(); n];
    for &x in order.iter().rev() {
        for &c in &net.children[x] {
            for (l, m) in lambda[x].iter_mut().zip(&lambda_msg[c]) {
                *l *= m;
            }
        }
        normalize(&mut lambda[x])?;
        if net.nodes[x].parent.is_some() {
            let mut msg: Vec<f64> = net.nodes[x]
                .cpt
                .iter()
                .map(|row| row.iter().zip(&lambda[x]).map(|(p, l)| p * l).sum())
                .collect();
            normalize(&mut msg)?;
            lambda_msg[x] = msg;
        }
    }

    // Downward pass: pi(x) = sum_u P(x|u) pi_X(u), where the parent sends
    // pi_X(u) = pi(u) e(u) prod_{siblings k} lambda_k(u).
    let mut pi: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut beliefs = BTreeMap::new();
    for &x in &order {
        let node = &net.nodes[x];
        let mut px = match node.parent {
            None => node.cpt[0].clone(),
            Some(u) => {
                let mut msg: Vec<f64> = pi[u].iter().zip(&evidence[u]).map(|(p, e)| p * e).collect();
                for &k in net.children[u].iter().filter(|&&k| k != x) {
                    for (m, l) in msg.iter_mut().zip(&lambda_msg[k]) {
                        *m *= l;
                    }
                }
                normalize(&mut msg)?;
                (0..node.states.len())
                    .map(|s| node.cpt.iter().zip(&msg).map(|(row, m)| row[s] * m).sum())
                    .collect()
            }
        };
        normalize(&mut px)?;
        let mut bel: Vec<f64> = px.iter().zip(&lambda[x]).map(|(p, l)| p * l).collect();
        normalize(&mut bel)?;
        pi[x] = px;
        beliefs.insert(node.name.clone(), bel);
    }
    Ok(BeliefState { beliefs })
}

/// Exact posteriors by summing the joint over every configuration
/// consistent with the evidence.
pub fn enumerate_joint(net: &Network, ev: &Evidence) -> Result<BeliefState, BbnError> {
    let space = net.state_space();
    if space > MAX_JOINT_STATES {
        return Err(BbnError::StateSpaceTooLarge(space));
    }
    let evidence = net.indicators(ev)?;
    let n = net.len();
    let mut marginals: Vec<Vec<f64>> = net.nodes.iter().map(|nd| vec![0.0; nd.states.len()]).collect();
    let mut config = vec![0usize; n];
    let mut total = 0.0;
    'outer: loop {
        let consistent = config.iter().enumerate().all(|(i, &s)| evidence[i][s] > 0.0);
        if consistent {
            let p: f64 = net
                .nodes
                .iter()
                .enumerate()
                .map(|(i, nd)| {
                    let row = nd.parent.map_or(0, |u| config[u]);
                    nd.cpt[row][config[i]]
                })
                .product();
            total += p;
            for (i, &s) in config.iter().enumerate() {
                marginals[i][s] += p;
            }
        }
        for (slot, node) in config.iter_mut().zip(&net.nodes) {
            *slot += 1;
            if *slot < node.states.len() {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    if total.is_nan() || total <= 0.0 {
        return Err(BbnError::ImpossibleEvidence);
    }
    let beliefs = net
        .nodes
        .iter()
        .zip(marginals)
        .map(|(nd, m)| (nd.name.clone(), m.into_iter().map(|v| v / total).collect()))
        .collect();
    Ok(BeliefState { beliefs })
}
