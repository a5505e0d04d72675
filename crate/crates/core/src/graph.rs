//! Factor-graph view of an instance.
//!
//! Variable nodes and equation nodes alternate, so every variable sits at an
//! even distance from a variable root and every equation at an odd one. A
//! ball of even radius `R` therefore contains every equation within distance
//! `R - 1` of the root together with all of its variables.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf2::LinearSystem;
use crate::instance::{Instance, VarId};

/// Read access to a (possibly partially decimated) XOR system, as used by
/// neighbourhood extraction. Dead variables and clauses are skipped.
pub trait XorView {
    fn num_vars(&self) -> usize;
    fn num_clauses(&self) -> usize;
    fn var_alive(&self, v: VarId) -> bool;
    /// Live clauses incident to `v`, appended to `out`.
    fn clauses_of(&self, v: VarId, out: &mut Vec<usize>);
    /// Live variables of clause `c`, appended to `out`.
    fn vars_of(&self, c: usize, out: &mut Vec<VarId>);
    fn rhs(&self, c: usize) -> bool;
}

/// Bipartite variable/equation adjacency.
#[derive(Debug, Clone)]
pub struct FactorGraph {
    var_adj: Vec<Vec<usize>>,
    eq_adj: Vec<Vec<VarId>>,
    rhs: Vec<bool>,
}

impl FactorGraph {
    pub fn build(inst: &Instance) -> Self {
        let mut var_adj = vec![Vec::new(); inst.n()];
        let mut eq_adj = Vec::with_capacity(inst.m());
        let mut rhs = Vec::with_capacity(inst.m());
        for (j, c) in inst.clauses().iter().enumerate() {
            for &v in c.vars() {
                var_adj[v].push(j);
            }
            eq_adj.push(c.vars().to_vec());
            rhs.push(c.rhs());
        }
        FactorGraph { var_adj, eq_adj, rhs }
    }

    pub fn n(&self) -> usize {
        self.var_adj.len()
    }

    pub fn m(&self) -> usize {
        self.eq_adj.len()
    }

    pub fn var_adj(&self, v: VarId) -> &[usize] {
        &self.var_adj[v]
    }

    pub fn eq_adj(&self, c: usize) -> &[VarId] {
        &self.eq_adj[c]
    }

    pub fn var_degree(&self, v: VarId) -> usize {
        self.var_adj[v].len()
    }

    pub fn num_edges(&self) -> usize {
        self.eq_adj.iter().map(Vec::len).sum()
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let var_degrees: Vec<usize> = self.var_adj.iter().map(Vec::len).collect();
        let eq_degrees: Vec<usize> = self.eq_adj.iter().map(Vec::len).collect();
        DegreeProfile::from_degrees(&var_degrees, &eq_degrees)
    }

    /// Variables sharing at least one clause with `v`, excluding `v`.
    pub fn var_neighbors(&self, v: VarId) -> Vec<VarId> {
        let mut out: Vec<VarId> = self.var_adj[v]
            .iter()
            .flat_map(|&c| self.eq_adj[c].iter().copied())
            .filter(|&u| u != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn neighborhood(&self, root: VarId, radius: usize) -> Result<Neighborhood> {
        if root >= self.n() {
            return Err(Error::VarOutOfRange { var: root, n: self.n() });
        }
        if !radius.is_multiple_of(2) {
            return Err(Error::InvalidParameters(format!("radius must be even, got {radius}")));
        }
        Ok(BallBuilder::new(self.n(), self.m()).build(self, root, radius))
    }

    /// Variables influenced by `i` under ordering `z`: those reachable by a
    /// chain of hops of length at most `hop` in the variable-to-variable
    /// graph along which the ordering key strictly decreases. Always
    /// contains `i`.
    pub fn influence_range(&self, z: &[f64], i: VarId, hop: usize) -> Result<Vec<VarId>> {
        if z.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: z.len() });
        }
        if i >= self.n() {
            return Err(Error::VarOutOfRange { var: i, n: self.n() });
        }
        let below = |a: VarId, b: VarId| order_key(z, a) < order_key(z, b);
        let mut in_range = vec![false; self.n()];
        in_range[i] = true;
        let mut stack = vec![i];
        let mut ball = VarBall::new(self.n());
        while let Some(y) = stack.pop() {
            for w in ball.within(self, y, hop) {
                if !in_range[w] && below(w, y) {
                    in_range[w] = true;
                    stack.push(w);
                }
            }
        }
        Ok((0..self.n()).filter(|&v| in_range[v]).collect())
    }
}

/// Ordering key with ties broken towards the smaller index: `(z_i, -i)`.
pub fn order_key(z: &[f64], i: VarId) -> (f64, std::cmp::Reverse<VarId>) {
    (z[i], std::cmp::Reverse(i))
}

impl XorView for FactorGraph {
    fn num_vars(&self) -> usize {
        self.n()
    }

    fn num_clauses(&self) -> usize {
        self.m()
    }

    fn var_alive(&self, _v: VarId) -> bool {
        true
    }

    fn clauses_of(&self, v: VarId, out: &mut Vec<usize>) {
        out.extend_from_slice(&self.var_adj[v]);
    }

    fn vars_of(&self, c: usize, out: &mut Vec<VarId>) {
        out.extend_from_slice(&self.eq_adj[c]);
    }

    fn rhs(&self, c: usize) -> bool {
        self.rhs[c]
    }
}

/// Breadth-first ball in the variable-to-variable graph, with reusable marks.
struct VarBall {
    mark: Vec<u32>,
    epoch: u32,
}

impl VarBall {
    fn new(n: usize) -> Self {
        VarBall { mark: vec![0; n], epoch: 0 }
    }

    fn within(&mut self, g: &FactorGraph, root: VarId, radius: usize) -> Vec<VarId> {
        self.epoch += 1;
        let epoch = self.epoch;
        self.mark[root] = epoch;
        let mut frontier = vec![root];
        let mut out = Vec::new();
        for _ in 0..radius {
            let mut next = Vec::new();
            for &y in &frontier {
                for &c in g.var_adj(y) {
                    for &u in g.eq_adj(c) {
                        if self.mark[u] != epoch {
                            self.mark[u] = epoch;
                            next.push(u);
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            out.extend_from_slice(&next);
            frontier = next;
        }
        out
    }
}

/// Empirical degree distributions, node and edge perspective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeProfile {
    /// Fraction of variable nodes with each degree.
    pub lambda_nodes: Vec<f64>,
    /// Fraction of equation nodes with each degree.
    pub p_nodes: Vec<f64>,
    /// Edge-perspective variable distribution; `None` without edges.
    pub lambda_edges: Option<Vec<f64>>,
    /// Edge-perspective equation distribution; `None` without edges.
    pub rho_edges: Option<Vec<f64>>,
}

fn histogram(degrees: &[usize]) -> Vec<usize> {
    let max = degrees.iter().copied().max().unwrap_or(0);
    let mut h = vec![0usize; max + 1];
    for &d in degrees {
        h[d] += 1;
    }
    h
}

fn node_fractions(h: &[usize], total: usize) -> Vec<f64> {
    if total == 0 {
        return vec![1.0];
    }
    h.iter().map(|&c| c as f64 / total as f64).collect()
}

fn edge_fractions(h: &[usize]) -> Option<Vec<f64>> {
    let edges: usize = h.iter().enumerate().map(|(d, &c)| d * c).sum();
    (edges > 0).then(|| h.iter().enumerate().map(|(d, &c)| (d * c) as f64 / edges as f64).collect())
}

impl DegreeProfile {
    pub fn from_degrees(var_degrees: &[usize], eq_degrees: &[usize]) -> Self {
        let hv = histogram(var_degrees);
        let he = histogram(eq_degrees);
        DegreeProfile {
            lambda_nodes: node_fractions(&hv, var_degrees.len()),
            p_nodes: node_fractions(&he, eq_degrees.len()),
            lambda_edges: edge_fractions(&hv),
            rho_edges: edge_fractions(&he),
        }
    }

    /// `degree,fraction` rows for the variable-node distribution.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("degree,fraction\n");
        for (d, f) in self.lambda_nodes.iter().enumerate() {
            s.push_str(&format!("{d},{f:.9}\n"));
        }
        s
    }
}

/// A clause inside a neighbourhood.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallClause {
    /// Index of the clause in the originating instance.
    pub index: usize,
    /// Positions into [`Neighborhood::vars`].
    pub vars: Vec<usize>,
    pub rhs: bool,
    /// Distance from the root (always odd).
    pub depth: usize,
}

/// The sub-instance induced by all nodes within distance `radius` of a root.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub root: VarId,
    pub radius: usize,
    /// Original variable ids, root first, in BFS order.
    pub vars: Vec<VarId>,
    /// Distance of each entry of `vars` from the root.
    pub var_depth: Vec<usize>,
    /// Clauses in BFS discovery order.
    pub clauses: Vec<BallClause>,
}

impl Neighborhood {
    pub fn num_edges(&self) -> usize {
        self.clauses.iter().map(|c| c.vars.len()).sum()
    }

    /// A ball is connected, so it is a tree iff `edges = nodes - 1`.
    pub fn is_tree(&self) -> bool {
        self.num_edges() + 1 == self.vars.len() + self.clauses.len()
    }

    /// The ball as a linear system over local variable positions.
    pub fn to_system(&self) -> LinearSystem {
        let mut sys = LinearSystem::new(self.vars.len());
        for c in &self.clauses {
            sys.push(&c.vars, c.rhs);
        }
        sys
    }

    pub fn var_set(&self) -> HashSet<VarId> {
        self.vars.iter().copied().collect()
    }

    /// Clauses containing the root.
    pub fn root_clauses(&self) -> impl Iterator<Item = &BallClause> {
        self.clauses.iter().filter(|c| c.depth == 1)
    }
}

/// Builds balls repeatedly over one view without per-call `O(n)` allocation.
#[derive(Debug, Clone)]
pub struct BallBuilder {
    var_mark: Vec<u32>,
    var_local: Vec<u32>,
    clause_mark: Vec<u32>,
    epoch: u32,
    scratch_c: Vec<usize>,
    scratch_v: Vec<VarId>,
}

impl BallBuilder {
    pub fn new(n: usize, m: usize) -> Self {
        BallBuilder {
            var_mark: vec![0; n],
            var_local: vec![0; n],
            clause_mark: vec![0; m],
            epoch: 0,
            scratch_c: Vec::new(),
            scratch_v: Vec::new(),
        }
    }

    pub fn build<V: XorView + ?Sized>(&mut self, view: &V, root: VarId, radius: usize) -> Neighborhood {
        debug_assert!(radius.is_multiple_of(2));
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.var_mark.fill(0);
            self.clause_mark.fill(0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let mut vars = vec![root];
        let mut var_depth = vec![0];
        let mut clauses = Vec::new();
        self.var_mark[root] = epoch;
        self.var_local[root] = 0;

        let mut head = 0;
        while head < vars.len() {
            let y = vars[head];
            let d = var_depth[head];
            head += 1;
            if d >= radius {
                continue;
            }
            self.scratch_c.clear();
            view.clauses_of(y, &mut self.scratch_c);
            for ci in 0..self.scratch_c.len() {
                let c = self.scratch_c[ci];
                if self.clause_mark[c] == epoch {
                    continue;
                }
                self.clause_mark[c] = epoch;
                self.scratch_v.clear();
                view.vars_of(c, &mut self.scratch_v);
                let mut local = Vec::with_capacity(self.scratch_v.len());
                for &u in &self.scratch_v {
                    if self.var_mark[u] != epoch {
                        self.var_mark[u] = epoch;
                        self.var_local[u] = vars.len() as u32;
                        vars.push(u);
                        var_depth.push(d + 2);
                    }
                    local.push(self.var_local[u] as usize);
                }
                clauses.push(BallClause { index: c, vars: local, rhs: view.rhs(c), depth: d + 1 });
            }
        }
        Neighborhood { root, radius, vars, var_depth, clauses }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{sample_instance, Clause};
    use crate::rng::{self, Purpose};
    use rand::Rng;

    fn inst(n: usize, k: usize, cl: &[&[usize]]) -> Instance {
        let clauses = cl.iter().map(|v| Clause::new(v.to_vec(), false).unwrap()).collect();
        Instance::new(n, k, clauses).unwrap()
    }

    #[test]
    fn build_graph_degrees() {
        let g = FactorGraph::build(&inst(3, 3, &[&[0, 1, 2]]));
        assert_eq!((0..3).map(|v| g.var_degree(v)).collect::<Vec<_>>(), vec![1, 1, 1]);
        assert_eq!(g.eq_adj(0).len(), 3);
        let g = FactorGraph::build(&Instance::empty(4, 3));
        assert!((0..4).all(|v| g.var_degree(v) == 0));
        let g = FactorGraph::build(&sample_instance(3, 30, 20, 1).unwrap());
        assert_eq!((0..30).map(|v| g.var_degree(v)).sum::<usize>(), 60);
        assert_eq!(g.num_edges(), 60);
    }

    #[test]
    fn degree_profile_basics() {
        let g = FactorGraph::build(&sample_instance(3, 200, 150, 2).unwrap());
        let p = g.degree_profile();
        assert_eq!(p.p_nodes, vec![0.0, 0.0, 0.0, 1.0]);
        assert!((p.lambda_nodes.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p.lambda_edges.as_ref().unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let single = FactorGraph::build(&inst(3, 3, &[&[0, 1, 2]])).degree_profile();
        assert_eq!(single.lambda_edges.unwrap()[1], 1.0);

        let empty = FactorGraph::build(&Instance::empty(5, 3)).degree_profile();
        assert_eq!(empty.lambda_nodes, vec![1.0]);
        assert!(empty.lambda_edges.is_none() && empty.rho_edges.is_none());
    }

    #[test]
    fn variable_degrees_are_poisson() {
        // kr = 2.7
        let n = 100_000;
        let g = FactorGraph::build(&sample_instance(3, n, 90_000, 3).unwrap());
        let p = g.degree_profile();
        let mut pmf = (-2.7f64).exp();
        for i in 0..10 {
            if i > 0 {
                pmf *= 2.7 / i as f64;
            }
            let got = p.lambda_nodes.get(i).copied().unwrap_or(0.0);
            assert!((got - pmf).abs() <= 0.01, "degree {i}: {got} vs {pmf}");
        }
    }

    #[test]
    fn neighborhood_radius_zero_and_chain() {
        // x0 - e0 - x1 - e1 - x2 with width-2 clauses
        let g = FactorGraph::build(&inst(3, 2, &[&[0, 1], &[1, 2]]));
        let b0 = g.neighborhood(0, 0).unwrap();
        assert_eq!(b0.vars, vec![0]);
        assert!(b0.clauses.is_empty());
        let b2 = g.neighborhood(0, 2).unwrap();
        assert_eq!(b2.vars, vec![0, 1]);
        assert_eq!(b2.clauses.iter().map(|c| c.index).collect::<Vec<_>>(), vec![0]);
        let b8 = g.neighborhood(0, 8).unwrap();
        assert_eq!(b8.vars.len(), 3);
        assert_eq!(b8.clauses.len(), 2);
        assert!(g.neighborhood(0, 3).is_err());
        assert!(g.neighborhood(7, 2).is_err());
    }

    #[test]
    fn tree_checks() {
        let g = FactorGraph::build(&Instance::empty(1, 3));
        assert!(g.neighborhood(0, 4).unwrap().is_tree());
        let cyc = FactorGraph::build(&inst(2, 2, &[&[0, 1], &[0, 1]]));
        assert!(!cyc.neighborhood(0, 4).unwrap().is_tree());
        let path = FactorGraph::build(&inst(4, 2, &[&[0, 1], &[1, 2], &[2, 3]]));
        assert!(path.neighborhood(1, 10).unwrap().is_tree());
    }

    #[test]
    fn neighborhoods_grow_with_radius() {
        let g = FactorGraph::build(&sample_instance(3, 300, 270, 4).unwrap());
        for root in [0, 17, 123] {
            let mut prev = g.neighborhood(root, 0).unwrap().var_set();
            for r in (2..=8).step_by(2) {
                let cur = g.neighborhood(root, r).unwrap().var_set();
                assert!(prev.is_subset(&cur));
                prev = cur;
            }
        }
    }

    #[test]
    fn ball_contains_all_edges_between_members() {
        let g = FactorGraph::build(&sample_instance(3, 200, 180, 5).unwrap());
        let b = g.neighborhood(3, 4).unwrap();
        for c in &b.clauses {
            assert_eq!(c.vars.len(), 3);
            assert!(c.depth % 2 == 1 && c.depth < 4);
        }
        assert!(b.var_depth.iter().all(|&d| d <= 4 && d % 2 == 0));
    }

    #[test]
    fn influence_range_examples() {
        let g = FactorGraph::build(&Instance::empty(3, 3));
        assert_eq!(g.influence_range(&[0.5, 0.2, 0.9], 1, 2).unwrap(), vec![1]);

        let g = FactorGraph::build(&inst(3, 2, &[&[0, 1]]));
        let z = [0.8, 0.3, 0.1];
        assert_eq!(g.influence_range(&z, 0, 1).unwrap(), vec![0, 1]);
        assert_eq!(g.influence_range(&z, 1, 1).unwrap(), vec![1]);
        // ties: equal z, smaller index ranks higher
        let g = FactorGraph::build(&inst(2, 2, &[&[0, 1]]));
        assert_eq!(g.influence_range(&[0.5, 0.5], 0, 1).unwrap(), vec![0, 1]);
        assert_eq!(g.influence_range(&[0.5, 0.5], 1, 1).unwrap(), vec![1]);
    }

    #[test]
    fn influence_range_is_z_monotone() {
        let mut rng = rng::stream(9, Purpose::Ordering);
        for seed in 0..10 {
            let g = FactorGraph::build(&sample_instance(3, 200, 120, seed).unwrap());
            let z: Vec<f64> = (0..200).map(|_| rng.random()).collect();
            for i in [0, 50, 199] {
                let ir = g.influence_range(&z, i, 2).unwrap();
                assert!(ir.contains(&i));
                assert!(ir.iter().all(|&j| z[i] >= z[j]));
            }
        }
    }
}
