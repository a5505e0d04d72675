//! Exact linear algebra over GF(2).
//!
//! Rows are bit-packed into `u64` words and reduced to reduced row echelon
//! form with pivot columns taken in ascending variable order. Everything
//! downstream (counting, sampling, marginals) reads off the RREF.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance, VarId};

const WORD: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

#[inline]
fn get_bit(row: &[u64], i: usize) -> bool {
    (row[i / WORD] >> (i % WORD)) & 1 == 1
}

#[inline]
fn flip_bit(row: &mut [u64], i: usize) {
    row[i / WORD] ^= 1 << (i % WORD);
}

/// A system of XOR equations of arbitrary width over `n` variables.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    n: usize,
    rows: Vec<Vec<u64>>,
    rhs: Vec<bool>,
}

impl LinearSystem {
    pub fn new(n: usize) -> Self {
        LinearSystem { n, rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let mut sys = LinearSystem::new(inst.n());
        for c in inst.clauses() {
            sys.push(c.vars(), c.rhs());
        }
        sys
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends `x_{v_1} + ... + x_{v_j} = rhs`. Repeated variables cancel.
    pub fn push(&mut self, vars: &[VarId], rhs: bool) {
        let mut row = vec![0u64; words_for(self.n)];
        for &v in vars {
            assert!(v < self.n, "variable {v} out of range for n = {}", self.n);
            flip_bit(&mut row, v);
        }
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn eliminate(self) -> EliminationResult {
        let LinearSystem { n, mut rows, mut rhs } = self;
        let nwords = words_for(n);
        let m = rows.len();
        let mut pivots = Vec::new();
        let mut rank = 0;

        for col in 0..n {
            if rank == m {
                break;
            }
            let Some(p) = (rank..m).find(|&r| get_bit(&rows[r], col)) else {
                continue;
            };
            rows.swap(rank, p);
            rhs.swap(rank, p);
            // Rows at or below `rank` are zero left of `col`, so XORs can
            // start at the pivot's word.
            let w0 = col / WORD;
            let (before, rest) = rows.split_at_mut(rank);
            let (pivot, after) = rest.split_first_mut().expect("pivot row");
            let prhs = rhs[rank];
            for (r, row) in before.iter_mut().enumerate() {
                if get_bit(row, col) {
                    xor_from(row, pivot, w0, nwords);
                    rhs[r] ^= prhs;
                }
            }
            for (off, row) in after.iter_mut().enumerate() {
                if get_bit(row, col) {
                    xor_from(row, pivot, w0, nwords);
                    rhs[rank + 1 + off] ^= prhs;
                }
            }
            pivots.push(col);
            rank += 1;
        }

        let consistent = rhs[rank..].iter().all(|&b| !b);
        rows.truncate(rank);
        rhs.truncate(rank);
        EliminationResult { n, rank, consistent, pivots, rows, rhs }
    }
}

#[inline]
fn xor_from(dst: &mut [u64], src: &[u64], start: usize, end: usize) {
    for (d, s) in dst[start..end].iter_mut().zip(&src[start..end]) {
        *d ^= *s;
    }
}

/// Reduced row echelon form of a system, plus consistency.
#[derive(Debug, Clone)]
pub struct EliminationResult {
    n: usize,
    rank: usize,
    consistent: bool,
    /// Pivot column of each retained row, ascending.
    pivots: Vec<usize>,
    rows: Vec<Vec<u64>>,
    rhs: Vec<bool>,
}

/// Gaussian elimination of an instance's system `Ax = b`.
pub fn eliminate(inst: &Instance) -> EliminationResult {
    LinearSystem::from_instance(inst).eliminate()
}

impl EliminationResult {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    pub fn nullity(&self) -> usize {
        self.n - self.rank
    }

    /// `log2` of the number of solutions, `None` when there are none.
    pub fn solution_count_log2(&self) -> Option<usize> {
        self.consistent.then(|| self.nullity())
    }

    /// Exact solution count; `None` if it does not fit in a `u128`.
    pub fn solution_count(&self) -> Option<u128> {
        match self.solution_count_log2() {
            None => Some(0),
            Some(e) if e < 128 => Some(1u128 << e),
            Some(_) => None,
        }
    }

    /// The solution with every free variable set to 0.
    pub fn particular(&self) -> Option<Assignment> {
        if !self.consistent {
            return None;
        }
        let mut a = Assignment::zeros(self.n);
        for (&p, &b) in self.pivots.iter().zip(&self.rhs) {
            a.set(p, b);
        }
        Some(a)
    }

    pub fn free_columns(&self) -> Vec<VarId> {
        let mut is_pivot = vec![false; self.n];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        (0..self.n).filter(|&v| !is_pivot[v]).collect()
    }

    /// A basis of the kernel of `A`, one vector per free column.
    pub fn nullspace_basis(&self) -> Vec<Assignment> {
        self.free_columns()
            .into_iter()
            .map(|f| {
                let mut v = Assignment::zeros(self.n);
                v.set(f, true);
                for (row, &p) in self.rows.iter().zip(&self.pivots) {
                    if get_bit(row, f) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect()
    }

    /// Uniform random solution: free variables are fair coins, pivot
    /// variables are back-substituted. Equivalent to the particular solution
    /// plus a uniformly random kernel vector.
    pub fn sample_solution<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Assignment> {
        if !self.consistent {
            return Err(Error::NoSolution);
        }
        let mut free = vec![0u64; words_for(self.n)];
        let mut a = Assignment::zeros(self.n);
        for f in self.free_columns() {
            if rng.random::<bool>() {
                flip_bit(&mut free, f);
                a.set(f, true);
            }
        }
        for ((row, &p), &b) in self.rows.iter().zip(&self.pivots).zip(&self.rhs) {
            let dot = row.iter().zip(&free).map(|(x, y)| (x & y).count_ones()).sum::<u32>() & 1;
            a.set(p, b ^ (dot == 1));
        }
        Ok(a)
    }

    /// `Some(bit)` when every solution has `x_v = bit`, `None` when `x_v` is
    /// unconstrained. Equivalent to appending `x_v = 0` and `x_v = 1` and
    /// testing which extended system stays consistent: in RREF, `e_v` lies in
    /// the row space exactly when `v` is a pivot whose row has no other bit.
    /// Meaningless for an inconsistent system.
    pub fn fixed_value(&self, v: VarId) -> Option<bool> {
        let r = self.pivots.binary_search(&v).ok()?;
        let row = &self.rows[r];
        let ones: u32 = row.iter().map(|w| w.count_ones()).sum();
        (ones == 1).then_some(self.rhs[r])
    }

    pub fn marginal(&self, v: VarId) -> MarginalValue {
        if !self.consistent {
            return MarginalValue { num_log2: None, den_log2: None };
        }
        let den = self.nullity();
        let num = match self.fixed_value(v) {
            Some(true) => Some(den),
            Some(false) => None,
            None => Some(den - 1),
        };
        MarginalValue { num_log2: num, den_log2: Some(den) }
    }
}

/// Fraction of solutions with a given variable set to 1, kept exact.
///
/// Both counts are powers of two or zero; `None` encodes zero. A zero
/// denominator means the system is unsatisfiable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalValue {
    pub num_log2: Option<usize>,
    pub den_log2: Option<usize>,
}

impl MarginalValue {
    pub fn is_defined(&self) -> bool {
        self.den_log2.is_some()
    }

    pub fn is_half(&self) -> bool {
        matches!((self.num_log2, self.den_log2), (Some(a), Some(b)) if a + 1 == b)
    }

    /// The marginal as a reduced fraction: one of 0/1, 1/2, 1/1; `(0, 0)`
    /// when undefined.
    pub fn reduced(&self) -> (u64, u64) {
        match (self.num_log2, self.den_log2) {
            (_, None) => (0, 0),
            (None, Some(_)) => (0, 1),
            (Some(a), Some(b)) if a == b => (1, 1),
            (Some(a), Some(b)) => {
                debug_assert_eq!(a + 1, b);
                (1, 2)
            }
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        let (p, q) = self.reduced();
        (q != 0).then(|| p as f64 / q as f64)
    }
}

impl EliminationResult {
    /// Packed sampler for drawing many solutions of one system.
    pub fn sampler(&self) -> Result<SolutionSampler> {
        if !self.consistent {
            return Err(Error::NoSolution);
        }
        let nwords = words_for(self.n);
        let mut particular = vec![0u64; nwords];
        for (&p, &b) in self.pivots.iter().zip(&self.rhs) {
            if b {
                flip_bit(&mut particular, p);
            }
        }
        let free = self.free_columns();
        let mut slot = vec![usize::MAX; self.n];
        for (j, &f) in free.iter().enumerate() {
            slot[f] = j;
        }
        let mut basis: Vec<Vec<u64>> = free
            .iter()
            .map(|&f| {
                let mut v = vec![0u64; nwords];
                flip_bit(&mut v, f);
                v
            })
            .collect();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            for (w, &word) in row.iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let col = w * WORD + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    if slot[col] != usize::MAX {
                        flip_bit(&mut basis[slot[col]], p);
                    }
                }
            }
        }
        Ok(SolutionSampler { n: self.n, particular, basis })
    }
}

/// Uniform solutions as `particular + random kernel combination`, packed.
#[derive(Debug, Clone)]
pub struct SolutionSampler {
    n: usize,
    particular: Vec<u64>,
    basis: Vec<Vec<u64>>,
}

impl SolutionSampler {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kernel_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn sample_words<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let mut x = self.particular.clone();
        for b in &self.basis {
            if rng.random::<bool>() {
                xor_from(&mut x, b, 0, b.len());
            }
        }
        x
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Assignment {
        unpack(&self.sample_words(rng), self.n)
    }
}

pub fn unpack(words: &[u64], n: usize) -> Assignment {
    Assignment::from_bits((0..n).map(|i| get_bit(words, i)).collect())
}

/// Hamming distance between packed vectors of equal length.
pub fn packed_distance(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as usize).sum()
}

/// Marginal of `v` over the uniform distribution on solutions of `inst`.
pub fn exact_marginal(inst: &Instance, v: VarId) -> Result<MarginalValue> {
    if v >= inst.n() {
        return Err(Error::VarOutOfRange { var: v, n: inst.n() });
    }
    Ok(eliminate(inst).marginal(v))
}
