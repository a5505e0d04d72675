//! Sequential local decimation driven by an ordering vector and an internal
//! vector.
//!
//! With `(instance, Z, U)` fixed the algorithm is deterministic: variables
//! are taken in decreasing `(Z_i, -i)` order, the local rule is queried on
//! the radius-`R` ball of the residual instance around the selected
//! variable, and the variable is set to 1 iff `U < p`. The entry of `U`
//! consumed when `x_i` is assigned is `U_i`, so perturbing one entry only
//! touches the outputs inside that variable's influence range.

use std::cmp::Ordering;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{BallBuilder, FactorGraph, Neighborhood, XorView};
use crate::instance::{Assignment, Instance, VarId};

/// Tolerance for calling a floating-point rule output "one half".
pub const FLOAT_HALF_TOL: f64 = 1.0 / (1u64 << 40) as f64;

fn check_unit_interval(xs: &[f64], what: &str) -> Result<()> {
    match xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        Some(x) => Err(Error::InvalidParameters(format!("{what} entry {x} outside [0,1]"))),
        None => Ok(()),
    }
}

/// `Z`: fixes the order in which variables are decimated.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingVector(Vec<f64>);

impl OrderingVector {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        check_unit_interval(&z, "ordering vector")?;
        Ok(OrderingVector(z))
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        OrderingVector((0..n).map(|_| rng.random::<f64>()).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Variables sorted by decreasing `(Z_i, -i)`.
    pub fn selection_order(&self) -> Vec<VarId> {
        let z = &self.0;
        let mut idx: Vec<VarId> = (0..z.len()).collect();
        idx.sort_by(|&a, &b| z[b].partial_cmp(&z[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
        idx
    }
}

/// `U`: the coin flips, one per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalVector(Vec<f64>);

impl InternalVector {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        check_unit_interval(&u, "internal vector")?;
        Ok(InternalVector(u))
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        InternalVector((0..n).map(|_| rng.random::<f64>()).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(W_0..W_{i-1}, V_i..V_{n-1})`.
    pub fn spliced(v: &InternalVector, w: &InternalVector, i: usize) -> InternalVector {
        let mut u = v.0.clone();
        u[..i].copy_from_slice(&w.0[..i]);
        InternalVector(u)
    }
}

/// Output of a local rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Prob {
    /// Exact `num / den`.
    Exact { num: u64, den: u64 },
    Float(f64),
}

impl Prob {
    pub const HALF: Prob = Prob::Exact { num: 1, den: 2 };
    pub const ZERO: Prob = Prob::Exact { num: 0, den: 1 };
    pub const ONE: Prob = Prob::Exact { num: 1, den: 1 };

    pub fn value(&self) -> f64 {
        match *self {
            Prob::Exact { num, den } => num as f64 / den as f64,
            Prob::Float(p) => p,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Prob::Exact { .. })
    }

    pub fn is_half(&self) -> bool {
        match *self {
            Prob::Exact { num, den } => 2 * num == den,
            Prob::Float(p) => (p - 0.5).abs() < FLOAT_HALF_TOL,
        }
    }
}

/// A rule's answer, with a flag for fallbacks (e.g. an unsatisfiable ball).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleValue {
    pub p: Prob,
    pub fallback: bool,
}

impl From<Prob> for RuleValue {
    fn from(p: Prob) -> Self {
        RuleValue { p, fallback: false }
    }
}

/// A map from rooted balls of even radius to `[0, 1]`.
pub trait LocalRule: Sync {
    fn radius(&self) -> usize;
    fn name(&self) -> &'static str;
    fn evaluate(&self, nb: &Neighborhood) -> RuleValue;
}

/// Unit clause propagation: the rhs of the lowest-index unit clause on the
/// root, else 1/2.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitClause;

impl LocalRule for UnitClause {
    fn radius(&self) -> usize {
        2
    }

    fn name(&self) -> &'static str {
        "uc"
    }

    fn evaluate(&self, nb: &Neighborhood) -> RuleValue {
        rule_uc(nb).into()
    }
}

pub fn rule_uc(nb: &Neighborhood) -> Prob {
    match nb.root_clauses().filter(|c| c.vars.len() == 1).min_by_key(|c| c.index) {
        Some(c) if c.rhs => Prob::ONE,
        Some(_) => Prob::ZERO,
        None => Prob::HALF,
    }
}

/// Exact marginal of the root in the sub-instance induced by the ball. On a
/// tree this is the belief-propagation fixed point; on an unsatisfiable ball
/// it falls back to 1/2 and raises the fallback flag.
#[derive(Debug, Clone, Copy)]
pub struct TreeMarginal {
    pub radius: usize,
}

impl Default for TreeMarginal {
    fn default() -> Self {
        TreeMarginal { radius: 4 }
    }
}

impl LocalRule for TreeMarginal {
    fn radius(&self) -> usize {
        self.radius
    }

    fn name(&self) -> &'static str {
        "marginal"
    }

    fn evaluate(&self, nb: &Neighborhood) -> RuleValue {
        rule_tree_marginal(nb)
    }
}

pub fn rule_tree_marginal(nb: &Neighborhood) -> RuleValue {
    if nb.clauses.is_empty() {
        return Prob::HALF.into();
    }
    let m = nb.to_system().eliminate().marginal(0);
    match m.reduced() {
        (_, 0) => RuleValue { p: Prob::HALF, fallback: true },
        (num, den) => Prob::Exact { num, den }.into(),
    }
}

/// The partially decimated instance.
#[derive(Debug, Clone)]
pub struct Residual<'a> {
    graph: &'a FactorGraph,
    assigned: Vec<bool>,
    width: Vec<u32>,
    rhs: Vec<bool>,
    violated_on_removal: usize,
}

impl<'a> Residual<'a> {
    pub fn new(graph: &'a FactorGraph) -> Self {
        let width = (0..graph.m()).map(|c| graph.eq_adj(c).len() as u32).collect();
        let rhs = (0..graph.m()).map(|c| graph.rhs(c)).collect();
        Residual { graph, assigned: vec![false; graph.n()], width, rhs, violated_on_removal: 0 }
    }

    /// Removes `v` with value `bit`, folding it into its clauses' rhs;
    /// clauses that become empty are dropped.
    pub fn assign(&mut self, v: VarId, bit: bool) {
        debug_assert!(!self.assigned[v]);
        self.assigned[v] = true;
        for &c in self.graph.var_adj(v) {
            self.width[c] -= 1;
            self.rhs[c] ^= bit;
            if self.width[c] == 0 && self.rhs[c] {
                self.violated_on_removal += 1;
            }
        }
    }

    pub fn clause_width(&self, c: usize) -> usize {
        self.width[c] as usize
    }

    pub fn violated_on_removal(&self) -> usize {
        self.violated_on_removal
    }

    /// Number of live clauses of each width `0..=k`.
    pub fn width_histogram(&self, k: usize) -> Vec<usize> {
        let mut h = vec![0usize; k + 1];
        for &w in &self.width {
            h[(w as usize).min(k)] += 1;
        }
        h[0] = 0;
        h
    }
}

impl XorView for Residual<'_> {
    fn num_vars(&self) -> usize {
        self.graph.n()
    }

    fn num_clauses(&self) -> usize {
        self.graph.m()
    }

    fn var_alive(&self, v: VarId) -> bool {
        !self.assigned[v]
    }

    fn clauses_of(&self, v: VarId, out: &mut Vec<usize>) {
        out.extend(self.graph.var_adj(v).iter().copied().filter(|&c| self.width[c] > 0));
    }

    fn vars_of(&self, c: usize, out: &mut Vec<VarId>) {
        out.extend(self.graph.eq_adj(c).iter().copied().filter(|&u| !self.assigned[u]));
    }

    fn rhs(&self, c: usize) -> bool {
        self.rhs[c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step {
    pub t: usize,
    pub var: VarId,
    /// Internal-vector entry consumed by this step.
    pub u: f64,
    pub p: Prob,
    pub free: bool,
    pub bit: bool,
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct DecimationTrace {
    pub steps: Vec<Step>,
    pub output: Assignment,
    /// Clauses dropped with a non-zero rhs, i.e. already violated.
    pub violated_on_removal: usize,
    /// Some rule output was a float, so `free` used a tolerance.
    pub inexact: bool,
}

impl DecimationTrace {
    pub fn free_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.free).count()
    }

    /// Fraction of free steps; 1 for an empty run.
    pub fn free_fraction(&self) -> f64 {
        if self.steps.is_empty() {
            1.0
        } else {
            self.free_steps() as f64 / self.steps.len() as f64
        }
    }

    pub fn fallbacks(&self) -> usize {
        self.steps.iter().filter(|s| s.fallback).count()
    }

    /// One JSON object per step, then a summary line.
    pub fn to_json_lines(&self, inst: &Instance) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let (p_num, p_den, p) = match s.p {
                Prob::Exact { num, den } => (Some(num), Some(den), None),
                Prob::Float(p) => (None, None, Some(p)),
            };
            let mut rec = serde_json::json!({
                "t": s.t, "var": s.var, "p_num": p_num, "p_den": p_den,
                "free": s.free, "bit": u8::from(s.bit),
            });
            if let Some(p) = p {
                rec["p"] = serde_json::json!(p);
            }
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        let summary = serde_json::json!({
            "free_fraction": self.free_fraction(),
            "satisfied": inst.is_satisfied_by(&self.output),
            "violated_on_removal": self.violated_on_removal,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

pub fn free_fraction(trace: &DecimationTrace) -> f64 {
    trace.free_fraction()
}

/// Reusable decimation engine for one `(instance, Z)` pair.
pub struct Decimator<'a, R: LocalRule + ?Sized> {
    inst: &'a Instance,
    graph: FactorGraph,
    rule: &'a R,
    order: Vec<VarId>,
    balls: BallBuilder,
}

impl<'a, R: LocalRule + ?Sized> Decimator<'a, R> {
    pub fn new(inst: &'a Instance, rule: &'a R, z: &OrderingVector) -> Result<Self> {
        if z.len() != inst.n() {
            return Err(Error::DimensionMismatch { expected: inst.n(), got: z.len() });
        }
        if !rule.radius().is_multiple_of(2) {
            return Err(Error::InvalidParameters(format!("rule radius must be even, got {}", rule.radius())));
        }
        let graph = FactorGraph::build(inst);
        let balls = BallBuilder::new(inst.n(), inst.m());
        Ok(Decimator { inst, graph, rule, order: z.selection_order(), balls })
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn run(&mut self, u: &InternalVector) -> Result<DecimationTrace> {
        self.run_observed(u, |_, _| {})
    }

    /// Runs and calls `observe(t, residual)` before each step `t` and once
    /// more with `t = n` at the end.
    pub fn run_observed<F>(&mut self, u: &InternalVector, mut observe: F) -> Result<DecimationTrace>
    where
        F: FnMut(usize, &Residual<'_>),
    {
        let n = self.inst.n();
        if u.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: u.len() });
        }
        let mut residual = Residual::new(&self.graph);
        let mut output = Assignment::zeros(n);
        let mut steps = Vec::with_capacity(n);
        let mut inexact = false;
        for (t, &v) in self.order.iter().enumerate() {
            observe(t, &residual);
            let nb = self.balls.build(&residual, v, self.rule.radius());
            let RuleValue { p, fallback } = self.rule.evaluate(&nb);
            inexact |= !p.is_exact();
            let uv = u.as_slice()[v];
            let bit = uv < p.value();
            residual.assign(v, bit);
            output.set(v, bit);
            steps.push(Step { t, var: v, u: uv, p, free: p.is_half(), bit, fallback });
        }
        observe(n, &residual);
        Ok(DecimationTrace { steps, output, violated_on_removal: residual.violated_on_removal(), inexact })
    }
}

pub fn run_decimation<R: LocalRule + ?Sized>(
    inst: &Instance,
    rule: &R,
    z: &OrderingVector,
    u: &InternalVector,
) -> Result<DecimationTrace> {
    Decimator::new(inst, rule, z)?.run(u)
}

/// Outputs `sigma_i` for each checkpoint `i`, where `sigma_i` is decimated
/// with `U^i = (W_0..W_{i-1}, V_i..V_{n-1})`.
pub fn rerandomization_sequence<R: LocalRule + ?Sized>(
    inst: &Instance,
    rule: &R,
    z: &OrderingVector,
    v: &InternalVector,
    w: &InternalVector,
    checkpoints: &[usize],
) -> Result<Vec<(usize, Assignment)>> {
    let n = inst.n();
    for vec in [v.len(), w.len()] {
        if vec != n {
            return Err(Error::DimensionMismatch { expected: n, got: vec });
        }
    }
    if checkpoints.windows(2).any(|p| p[0] >= p[1]) || checkpoints.last().is_some_and(|&i| i > n) {
        return Err(Error::InvalidParameters("checkpoints must be strictly increasing within 0..=n".into()));
    }
    let mut dec = Decimator::new(inst, rule, z)?;
    checkpoints
        .iter()
        .map(|&i| Ok((i, dec.run(&InternalVector::spliced(v, w, i))?.output)))
        .collect()
}

/// `count` evenly spaced checkpoints in `0..=n`, always including both ends.
pub fn even_checkpoints(n: usize, count: usize) -> Vec<usize> {
    if count < 2 || n == 0 {
        return if n == 0 { vec![0] } else { vec![0, n] };
    }
    let mut out: Vec<usize> = (0..count).map(|j| (j * n + (count - 1) / 2) / (count - 1)).collect();
    out.dedup();
    out
}
