//! Peeling to the 2-core and back-substitution.
//!
//! Repeatedly removing a variable of degree at most one (together with its
//! only clause, if any) ends at the 2-core regardless of the order in which
//! candidates are taken. Solving the instance reduces to solving the core:
//! a core solution extends by replaying the removals backwards.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::instance::{Assignment, Clause, Instance, VarId};

/// One removal: the variable and the clause removed with it, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PeelStep {
    pub var: VarId,
    pub clause: Option<usize>,
}

/// Order in which degree-≤1 candidates are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeelOrder {
    /// FIFO work queue; O(n + m).
    Queue,
    /// Always the lowest-index candidate.
    LowestIndex,
    /// A uniformly random candidate, from the given seed.
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct CoreResult {
    /// Core instance over dense ids `0..kept.len()`.
    pub core: Instance,
    /// `kept[i]` is the original id of core variable `i`, ascending.
    pub kept: Vec<VarId>,
    /// Original indices of the core clauses, ascending.
    pub core_clauses: Vec<usize>,
    pub peel_order: Vec<PeelStep>,
    /// Variable count of the peeled instance.
    pub original_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreStats {
    pub core_var_fraction: f64,
    pub core_clause_fraction: f64,
    /// Fraction of core variables of each degree.
    pub core_degree_hist: Vec<f64>,
}

enum Candidates {
    Queue(std::collections::VecDeque<VarId>),
    Heap(BinaryHeap<Reverse<VarId>>),
    Random(Vec<VarId>, Box<rand_chacha::ChaCha8Rng>),
}

impl Candidates {
    fn push(&mut self, v: VarId) {
        match self {
            Candidates::Queue(q) => q.push_back(v),
            Candidates::Heap(h) => h.push(Reverse(v)),
            Candidates::Random(pool, _) => pool.push(v),
        }
    }

    fn pop(&mut self) -> Option<VarId> {
        match self {
            Candidates::Queue(q) => q.pop_front(),
            Candidates::Heap(h) => h.pop().map(|Reverse(v)| v),
            Candidates::Random(pool, rng) => {
                if pool.is_empty() {
                    None
                } else {
                    let i = rng.random_range(0..pool.len());
                    Some(pool.swap_remove(i))
                }
            }
        }
    }
}

/// Peels with the fast queue order.
pub fn peel(inst: &Instance) -> CoreResult {
    peel_with(inst, PeelOrder::Queue)
}

pub fn peel_with(inst: &Instance, order: PeelOrder) -> CoreResult {
    let n = inst.n();
    let m = inst.m();
    let mut var_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, c) in inst.clauses().iter().enumerate() {
        for &v in c.vars() {
            var_adj[v].push(j);
        }
    }
    let mut degree: Vec<usize> = var_adj.iter().map(Vec::len).collect();
    let mut clause_alive = vec![true; m];
    let mut removed = vec![false; n];
    let mut queued = vec![false; n];

    let mut cand = match order {
        PeelOrder::Queue => Candidates::Queue(Default::default()),
        PeelOrder::LowestIndex => Candidates::Heap(BinaryHeap::new()),
        PeelOrder::Random(seed) => {
            Candidates::Random(Vec::new(), Box::new(crate::rng::stream(seed, crate::rng::Purpose::PeelOrder)))
        }
    };
    for v in 0..n {
        if degree[v] <= 1 {
            queued[v] = true;
            cand.push(v);
        }
    }

    let mut peel_order = Vec::new();
    while let Some(v) = cand.pop() {
        debug_assert!(!removed[v] && degree[v] <= 1);
        removed[v] = true;
        let clause = if degree[v] == 1 {
            let c = *var_adj[v].iter().find(|&&c| clause_alive[c]).expect("live clause");
            clause_alive[c] = false;
            for &u in inst.clause(c).vars() {
                degree[u] -= 1;
                if !removed[u] && !queued[u] && degree[u] <= 1 {
                    queued[u] = true;
                    cand.push(u);
                }
            }
            Some(c)
        } else {
            None
        };
        peel_order.push(PeelStep { var: v, clause });
    }

    let kept: Vec<VarId> = (0..n).filter(|&v| !removed[v]).collect();
    let mut new_id = vec![usize::MAX; n];
    for (i, &v) in kept.iter().enumerate() {
        new_id[v] = i;
    }
    let core_clauses: Vec<usize> = (0..m).filter(|&j| clause_alive[j]).collect();
    let clauses = core_clauses
        .iter()
        .map(|&j| {
            let c = inst.clause(j);
            // monotone relabelling keeps the variable list sorted
            let vars = c.vars().iter().map(|&v| new_id[v]).collect();
            Clause::new(vars, c.rhs()).expect("relabelled clause stays sorted")
        })
        .collect();
    let core = Instance::new(kept.len(), inst.k(), clauses).expect("core is a valid instance");
    CoreResult { core, kept, core_clauses, peel_order, original_n: n }
}

impl CoreResult {
    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    /// Restriction of a full assignment to the core variables.
    pub fn project(&self, a: &Assignment) -> Result<Assignment> {
        if a.len() != self.original_n {
            return Err(Error::InvalidAssignment { expected: self.original_n, got: a.len() });
        }
        Ok(Assignment::from_bits(self.kept.iter().map(|&v| a.get(v)).collect()))
    }

    /// Extends a core solution to a solution of `original` by replaying the
    /// peel order backwards: a variable removed with a clause is forced by
    /// that clause, an isolated one gets a fair coin.
    pub fn extend_core_solution<R: Rng + ?Sized>(
        &self,
        original: &Instance,
        core_sol: &Assignment,
        rng: &mut R,
    ) -> Result<Assignment> {
        if original.n() != self.original_n {
            return Err(Error::DimensionMismatch { expected: self.original_n, got: original.n() });
        }
        match self.core.evaluate(core_sol) {
            Ok((true, _)) => {}
            Ok((false, bad)) => {
                return Err(Error::PreconditionViolation(format!(
                    "core assignment violates {bad} core clauses"
                )))
            }
            Err(e) => return Err(e),
        }
        let mut full = Assignment::zeros(self.original_n);
        for (i, &v) in self.kept.iter().enumerate() {
            full.set(v, core_sol.get(i));
        }
        for step in self.peel_order.iter().rev() {
            let bit = match step.clause {
                Some(c) => {
                    let clause = original.clause(c);
                    clause
                        .vars()
                        .iter()
                        .filter(|&&u| u != step.var)
                        .fold(clause.rhs(), |acc, &u| acc ^ full.get(u))
                }
                None => rng.random::<bool>(),
            };
            full.set(step.var, bit);
        }
        Ok(full)
    }

    /// Empirical core size and degree distribution; sizes relative to `n`.
    pub fn stats(&self, n: usize) -> CoreStats {
        if self.is_empty() || n == 0 {
            return CoreStats { core_var_fraction: 0.0, core_clause_fraction: 0.0, core_degree_hist: Vec::new() };
        }
        let mut deg = vec![0usize; self.core.n()];
        for c in self.core.clauses() {
            for &v in c.vars() {
                deg[v] += 1;
            }
        }
        let max = deg.iter().copied().max().unwrap_or(0);
        let mut hist = vec![0usize; max + 1];
        for d in deg {
            hist[d] += 1;
        }
        let nc = self.core.n() as f64;
        CoreStats {
            core_var_fraction: self.core.n() as f64 / n as f64,
            core_clause_fraction: self.core.m() as f64 / n as f64,
            core_degree_hist: hist.into_iter().map(|c| c as f64 / nc).collect(),
        }
    }

    /// The core in the instance text format, with a provenance comment
    /// `core-of <hash> kept <ids...>` naming the source instance.
    pub fn to_text(&self, original: &Instance) -> String {
        let digest = Sha256::digest(original.to_string().as_bytes());
        let hash: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        let kept: Vec<String> = self.kept.iter().map(usize::to_string).collect();
        self.core.to_text_with_comments(&[format!("core-of {hash} kept {}", kept.join(" "))])
    }
}

/// Empirical statistics of a core relative to an `n`-variable instance.
pub fn core_stats(cr: &CoreResult, n: usize) -> CoreStats {
    cr.stats(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::eliminate;
    use crate::instance::sample_instance;
    use crate::rng::{self, Purpose};

    fn inst(n: usize, k: usize, cl: &[(&[usize], bool)]) -> Instance {
        let clauses = cl.iter().map(|(v, b)| Clause::new(v.to_vec(), *b).unwrap()).collect();
        Instance::new(n, k, clauses).unwrap()
    }

    #[test]
    fn tree_instance_peels_to_nothing() {
        // two 3-clauses sharing one variable
        let i = inst(5, 3, &[(&[0, 1, 2], true), (&[2, 3, 4], false)]);
        let cr = peel(&i);
        assert!(cr.is_empty());
        assert_eq!(cr.peel_order.len(), 5);
        assert_eq!(cr.project(&Assignment::zeros(5)).unwrap().len(), 0);
        let mut g = rng::stream(0, Purpose::Extension);
        let full = cr.extend_core_solution(&i, &Assignment::zeros(0), &mut g).unwrap();
        assert!(i.is_satisfied_by(&full));
        assert_eq!(cr.stats(5).core_var_fraction, 0.0);
    }

    #[test]
    fn two_regular_instance_is_its_own_core() {
        // every variable in exactly two clauses
        let i = inst(3, 2, &[(&[0, 1], true), (&[1, 2], false), (&[0, 2], true)]);
        let cr = peel(&i);
        assert_eq!(cr.kept, vec![0, 1, 2]);
        assert_eq!(cr.core, i);
        let a: Assignment = "101".parse().unwrap();
        assert_eq!(cr.project(&a).unwrap(), a);
        let sol: Assignment = "011".parse().unwrap();
        assert!(i.is_satisfied_by(&sol));
        let mut g = rng::stream(0, Purpose::Extension);
        assert_eq!(cr.extend_core_solution(&i, &sol, &mut g).unwrap(), sol);
    }

    #[test]
    fn bad_core_solution_is_rejected() {
        let i = inst(3, 2, &[(&[0, 1], true), (&[1, 2], false), (&[0, 2], true)]);
        let cr = peel(&i);
        let mut g = rng::stream(0, Purpose::Extension);
        let err = cr.extend_core_solution(&i, &"000".parse().unwrap(), &mut g).unwrap_err();
        assert!(matches!(err, Error::PreconditionViolation(_)));
    }

    #[test]
    fn core_variables_have_degree_two() {
        let i = sample_instance(3, 2000, 1800, 1).unwrap();
        let cr = peel(&i);
        let stats = cr.stats(2000);
        assert!(stats.core_degree_hist.iter().take(2).all(|&f| f == 0.0));
        assert!(!cr.is_empty());
    }

    #[test]
    fn orders_agree() {
        for seed in 0..20 {
            let i = sample_instance(3, 300, 260, seed).unwrap();
            let a = peel_with(&i, PeelOrder::Queue);
            let b = peel_with(&i, PeelOrder::LowestIndex);
            let c = peel_with(&i, PeelOrder::Random(seed));
            assert_eq!(a.kept, b.kept);
            assert_eq!(a.kept, c.kept);
            assert_eq!(a.core, c.core);
        }
    }

    #[test]
    fn lowest_index_takes_smallest_candidate_first() {
        let i = inst(5, 3, &[(&[0, 1, 2], true), (&[2, 3, 4], false)]);
        let cr = peel_with(&i, PeelOrder::LowestIndex);
        assert_eq!(cr.peel_order[0], PeelStep { var: 0, clause: Some(0) });
    }

    #[test]
    fn projection_and_extension_preserve_solutions() {
        for seed in 0..10 {
            let i = sample_instance(3, 500, 450, seed).unwrap();
            let cr = peel(&i);
            let full = eliminate(&i);
            let core = eliminate(&cr.core);
            assert_eq!(full.is_consistent(), core.is_consistent());
            if !full.is_consistent() {
                continue;
            }
            let mut g = rng::stream(seed, Purpose::Solution);
            let sigma = full.sample_solution(&mut g).unwrap();
            assert!(cr.core.is_satisfied_by(&cr.project(&sigma).unwrap()));
            let cs = core.sample_solution(&mut g).unwrap();
            let ext = cr.extend_core_solution(&i, &cs, &mut g).unwrap();
            assert!(i.is_satisfied_by(&ext));
            assert_eq!(cr.project(&ext).unwrap(), cs);
        }
    }

    #[test]
    fn core_text_carries_provenance() {
        let i = sample_instance(3, 100, 95, 4).unwrap();
        let cr = peel(&i);
        let text = cr.to_text(&i);
        assert!(text.starts_with("# core-of "));
        let back: Instance = text.parse().unwrap();
        assert_eq!(back, cr.core);
    }
}
