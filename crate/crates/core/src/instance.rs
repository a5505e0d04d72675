//! k-XORSAT instances, assignments and the random ensemble.
//!
//! An instance is a system `Ax = b` over GF(2) in which every row of `A` has
//! exactly `k` ones. Variables are dense 0-based ids. Clause order is
//! preserved because clause index is used for tie-breaking elsewhere.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Dense 0-based variable id.
pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    vars: Vec<VarId>,
    rhs: bool,
}

impl Clause {
    /// Builds a clause; `vars` must be strictly increasing.
    pub fn new(vars: Vec<VarId>, rhs: bool) -> Result<Self> {
        if let Some(w) = vars.windows(2).find(|w| w[0] >= w[1]) {
            let msg = if w[0] == w[1] {
                format!("duplicate variable {}", w[0])
            } else {
                format!("variables not sorted ({} before {})", w[0], w[1])
            };
            return Err(Error::InvalidParameters(msg));
        }
        Ok(Clause { vars, rhs })
    }

    /// Sorts and deduplicates-checks an arbitrary variable list.
    pub fn from_unsorted(mut vars: Vec<VarId>, rhs: bool) -> Result<Self> {
        vars.sort_unstable();
        Clause::new(vars, rhs)
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn rhs(&self) -> bool {
        self.rhs
    }

    pub fn width(&self) -> usize {
        self.vars.len()
    }

    /// XOR of the assigned bits of this clause's variables.
    pub fn parity(&self, a: &Assignment) -> bool {
        self.vars.iter().fold(false, |acc, &v| acc ^ a.get(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    n: usize,
    k: usize,
    clauses: Vec<Clause>,
}

impl Instance {
    pub fn new(n: usize, k: usize, clauses: Vec<Clause>) -> Result<Self> {
        for (j, c) in clauses.iter().enumerate() {
            if c.width() != k {
                return Err(Error::InvalidParameters(format!(
                    "clause {j} has width {}, expected {k}",
                    c.width()
                )));
            }
            if let Some(&v) = c.vars.last() {
                if v >= n {
                    return Err(Error::VarOutOfRange { var: v, n });
                }
            }
        }
        Ok(Instance { n, k, clauses })
    }

    /// Instance with no clauses.
    pub fn empty(n: usize, k: usize) -> Self {
        Instance { n, k, clauses: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, j: usize) -> &Clause {
        &self.clauses[j]
    }

    /// Clause density `m / n`.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m() as f64 / self.n as f64
        }
    }

    /// Returns `(satisfied, violated_count)`.
    pub fn evaluate(&self, a: &Assignment) -> Result<(bool, usize)> {
        if a.len() != self.n {
            return Err(Error::InvalidAssignment { expected: self.n, got: a.len() });
        }
        let violated = self.clauses.iter().filter(|c| c.parity(a) != c.rhs).count();
        Ok((violated == 0, violated))
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        matches!(self.evaluate(a), Ok((true, _)))
    }

    /// Serialises to the text format, prefixed by the given `#` comment lines.
    pub fn to_text_with_comments(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.to_string());
        out
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p xor {} {} {}", self.n, self.m(), self.k)?;
        for c in &self.clauses {
            for v in &c.vars {
                write!(f, "{v} ")?;
            }
            writeln!(f, "= {}", u8::from(c.rhs))?;
        }
        Ok(())
    }
}

impl FromStr for Instance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let mut header: Option<(usize, usize, usize)> = None;
        let mut clauses = Vec::new();

        for (idx, raw) in s.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((n, m, k)) = header else {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 5 || toks[0] != "p" || toks[1] != "xor" {
                    return Err(perr(lineno, "expected header `p xor <n> <m> <k>`"));
                }
                let num = |t: &str| t.parse::<usize>().map_err(|_| perr(lineno, "bad header number"));
                let (n, m, k) = (num(toks[2])?, num(toks[3])?, num(toks[4])?);
                if k == 0 {
                    return Err(perr(lineno, "k must be positive"));
                }
                header = Some((n, m, k));
                clauses.reserve(m);
                continue;
            };
            if clauses.len() == m {
                return Err(perr(lineno, "more clauses than declared in header"));
            }
            let (lhs, rhs) = line.split_once('=').ok_or_else(|| perr(lineno, "missing `=`"))?;
            let rhs = match rhs.trim() {
                "0" => false,
                "1" => true,
                _ => return Err(perr(lineno, "right-hand side must be 0 or 1")),
            };
            let vars = lhs
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| perr(lineno, "bad variable id")))
                .collect::<Result<Vec<_>>>()?;
            if vars.len() != k {
                return Err(perr(lineno, &format!("clause has {} variables, expected {k}", vars.len())));
            }
            if vars.iter().any(|&v| v >= n) {
                return Err(perr(lineno, "variable id out of range"));
            }
            let clause = Clause::new(vars, rhs).map_err(|e| perr(lineno, &e.to_string()))?;
            clauses.push(clause);
        }

        let (n, m, k) = header.ok_or_else(|| perr(0, "missing header"))?;
        if clauses.len() != m {
            return Err(perr(
                s.lines().count(),
                &format!("header declares {m} clauses, found {}", clauses.len()),
            ));
        }
        Instance::new(n, k, clauses)
    }
}

/// Samples a uniform `k`-subset of `0..n` with Floyd's algorithm, sorted.
pub fn sample_k_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<VarId> {
    debug_assert!(k <= n);
    let mut chosen: Vec<VarId> = Vec::with_capacity(k);
    for j in (n - k)..n {
        let t = rng.random_range(0..=j);
        if chosen.contains(&t) {
            chosen.push(j);
        } else {
            chosen.push(t);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Draws from the ensemble of `m` independent uniform k-clauses with
/// Bernoulli(1/2) right-hand sides.
pub fn sample_instance(k: usize, n: usize, m: usize, seed: u64) -> Result<Instance> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameters(format!("need 0 < k <= n, got k={k}, n={n}")));
    }
    let mut rng = rng::stream(seed, Purpose::Instance);
    let clauses = (0..m)
        .map(|_| {
            let vars = sample_k_subset(&mut rng, n, k);
            let rhs = rng.random::<bool>();
            Clause { vars, rhs }
        })
        .collect();
    Ok(Instance { n, k, clauses })
}

/// Samples with `m = round(r n)` clauses.
pub fn sample_with_density(k: usize, n: usize, r: f64, seed: u64) -> Result<Instance> {
    sample_instance(k, n, (r * n as f64).round() as usize, seed)
}

/// A full assignment of Boolean values to `n` variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment(vec![false; n])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Assignment(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: VarId) -> bool {
        self.0[v]
    }

    pub fn set(&mut self, v: VarId, bit: bool) {
        self.0[v] = bit;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.0
    }

    /// Positions where `self` and `other` differ.
    pub fn diff(&self, other: &Assignment) -> Result<Vec<VarId>> {
        check_same_len(self, other)?;
        Ok((0..self.len()).filter(|&i| self.0[i] != other.0[i]).collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse { line: 1, msg: format!("unexpected character {c:?} in assignment") }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Assignment)
    }
}

fn check_same_len(a: &Assignment, b: &Assignment) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidAssignment { expected: a.len(), got: b.len() });
    }
    Ok(())
}

/// Hamming distance between two assignments of equal length.
pub fn hamming(a: &Assignment, b: &Assignment) -> Result<usize> {
    check_same_len(a, b)?;
    Ok(a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count())
}

/// Set of variables appearing in at least one clause.
pub fn used_vars(inst: &Instance) -> HashSet<VarId> {
    inst.clauses.iter().flat_map(|c| c.vars.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn asg(s: &str) -> Assignment {
        s.parse().unwrap()
    }

    #[test]
    fn only_subset_when_k_equals_n() {
        let inst = sample_instance(3, 3, 1, 99).unwrap();
        assert_eq!(inst.clause(0).vars(), &[0, 1, 2]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_instance(3, 50, 40, 5).unwrap();
        let b = sample_instance(3, 50, 40, 5).unwrap();
        assert_eq!(a.to_string(), b.to_string());
        assert_ne!(a, sample_instance(3, 50, 40, 6).unwrap());
    }

    #[test]
    fn rhs_is_balanced() {
        let inst = sample_instance(3, 100, 10_000, 11).unwrap();
        let ones = inst.clauses().iter().filter(|c| c.rhs()).count() as f64;
        let mean = ones / 10_000.0;
        assert!((0.48..=0.52).contains(&mean), "mean rhs {mean}");
    }

    #[test]
    fn k_larger_than_n_is_rejected() {
        assert!(matches!(sample_instance(4, 3, 1, 0), Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn floyd_subsets_are_uniform() {
        // C(6,3) = 20 subsets, 40k draws: expected 2000 each.
        let mut rng = rng::stream(3, Purpose::Misc);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..40_000 {
            *counts.entry(sample_k_subset(&mut rng, 6, 3)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 20);
        let chi2: f64 = counts.values().map(|&c| (c as f64 - 2000.0).powi(2) / 2000.0).sum();
        // 19 dof, 99.9% quantile is about 43.8
        assert!(chi2 < 43.8, "chi2 = {chi2}");
    }

    #[test]
    fn evaluate_examples() {
        let inst = Instance::new(3, 3, vec![Clause::new(vec![0, 1, 2], false).unwrap()]).unwrap();
        assert_eq!(inst.evaluate(&asg("000")).unwrap(), (true, 0));
        assert_eq!(inst.evaluate(&asg("100")).unwrap(), (false, 1));
        assert!(matches!(inst.evaluate(&asg("10")), Err(Error::InvalidAssignment { .. })));
        let empty = Instance::empty(4, 3);
        assert_eq!(empty.evaluate(&asg("1011")).unwrap(), (true, 0));
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(&asg("000"), &asg("000")).unwrap(), 0);
        assert_eq!(hamming(&asg("000"), &asg("111")).unwrap(), 3);
        assert_eq!(hamming(&asg("0101"), &asg("0011")).unwrap(), 2);
        assert!(hamming(&asg("01"), &asg("011")).is_err());
    }

    #[test]
    fn text_round_trip_example() {
        let text = "p xor 3 1 3\n0 1 2 = 0\n";
        let inst: Instance = text.parse().unwrap();
        assert_eq!(inst.m(), 1);
        assert_eq!(inst.to_string(), text);
    }

    #[test]
    fn parse_errors() {
        let e = "p xor 3 2 3\n0 1 2 = 0\n".parse::<Instance>().unwrap_err();
        assert!(matches!(e, Error::Parse { .. }), "{e}");
        let e = "p xor 3 1 3\n0 1 1 = 0\n".parse::<Instance>().unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        assert!("p xor 3 1 3\n0 1 5 = 0\n".parse::<Instance>().is_err());
        assert!("p xor 3 1 3\n0 1 2 = 2\n".parse::<Instance>().is_err());
        assert!("0 1 2 = 0\n".parse::<Instance>().is_err());
    }

    #[test]
    fn comments_are_ignored() {
        let inst: Instance = "# hello\np xor 4 1 3\n# mid\n1 2 3 = 1\n".parse().unwrap();
        assert_eq!(inst.clause(0).vars(), &[1, 2, 3]);
        assert!(inst.clause(0).rhs());
    }

    proptest! {
        #[test]
        fn parse_serialize_round_trip(seed in any::<u64>(), n in 3usize..40, m in 0usize..40, k in 3usize..6) {
            prop_assume!(k <= n);
            let inst = sample_instance(k, n, m, seed).unwrap();
            let text = inst.to_string();
            let back: Instance = text.parse().unwrap();
            prop_assert_eq!(&back, &inst);
            prop_assert_eq!(back.to_string(), text);
        }

        #[test]
        fn satisfied_is_order_invariant(seed in any::<u64>(), bits in proptest::collection::vec(any::<bool>(), 12)) {
            let inst = sample_instance(3, 12, 10, seed).unwrap();
            let mut rev = inst.clauses().to_vec();
            rev.reverse();
            let rev = Instance::new(12, 3, rev).unwrap();
            let a = Assignment::from_bits(bits);
            prop_assert_eq!(inst.evaluate(&a).unwrap().0, rev.evaluate(&a).unwrap().0);
        }

        #[test]
        fn hamming_triangle(a in proptest::collection::vec(any::<bool>(), 16),
                            b in proptest::collection::vec(any::<bool>(), 16),
                            c in proptest::collection::vec(any::<bool>(), 16)) {
            let (a, b, c) = (Assignment::from_bits(a), Assignment::from_bits(b), Assignment::from_bits(c));
            let ab = hamming(&a, &b).unwrap();
            prop_assert_eq!(ab, hamming(&b, &a).unwrap());
            prop_assert!(hamming(&a, &c).unwrap() <= ab + hamming(&b, &c).unwrap());
            prop_assert_eq!(ab == 0, a == b);
        }
    }
}
