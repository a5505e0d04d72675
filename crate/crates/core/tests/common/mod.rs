#![allow(dead_code)]

use xorsat_core::graph::Neighborhood;
use xorsat_core::Instance;

/// Exhaustive count of solutions and of solutions with each bit set.
#[derive(Debug, Clone, PartialEq)]
pub struct Brute {
    pub count: u64,
    pub ones: Vec<u64>,
}

impl Brute {
    /// Marginal of `v` as a reduced fraction; `(0, 0)` with no solutions.
    pub fn marginal(&self, v: usize) -> (u64, u64) {
        if self.count == 0 {
            return (0, 0);
        }
        let g = gcd(self.ones[v], self.count);
        (self.ones[v] / g, self.count / g)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Gray-code enumeration of all `2^n` assignments of arbitrary-width XOR
/// clauses. Repeated variables in a clause cancel.
pub fn brute(n: usize, clauses: &[(Vec<usize>, bool)]) -> Brute {
    assert!(n <= 24);
    let mut touches = vec![Vec::new(); n];
    for (c, (vars, _)) in clauses.iter().enumerate() {
        for &v in vars {
            touches[v].push(c);
        }
    }
    let mut parity = vec![false; clauses.len()];
    let mut violated = clauses.iter().filter(|(_, b)| *b).count();
    let mut x: u64 = 0;
    let mut out = Brute { count: 0, ones: vec![0; n] };
    let record = |x: u64, out: &mut Brute| {
        out.count += 1;
        let mut bits = x;
        while bits != 0 {
            out.ones[bits.trailing_zeros() as usize] += 1;
            bits &= bits - 1;
        }
    };
    if violated == 0 {
        record(x, &mut out);
    }
    for s in 1u64..(1u64 << n) {
        let j = s.trailing_zeros() as usize;
        x ^= 1 << j;
        for &c in &touches[j] {
            let was_ok = parity[c] == clauses[c].1;
            parity[c] = !parity[c];
            if was_ok {
                violated += 1;
            } else {
                violated -= 1;
            }
        }
        if violated == 0 {
            record(x, &mut out);
        }
    }
    out
}

pub fn brute_instance(inst: &Instance) -> Brute {
    let cl: Vec<_> = inst.clauses().iter().map(|c| (c.vars().to_vec(), c.rhs())).collect();
    brute(inst.n(), &cl)
}

pub fn brute_ball(nb: &Neighborhood) -> Brute {
    let cl: Vec<_> = nb.clauses.iter().map(|c| (c.vars.clone(), c.rhs)).collect();
    brute(nb.vars.len(), &cl)
}
