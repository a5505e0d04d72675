//! Closed-form thresholds, freeness constants and the small numerical
//! toolkit (lnΓ, incomplete gamma, adaptive Simpson) they need.
//!
//! Everything here is a pure function of its arguments.

use serde::Serialize;

use crate::error::{Error, Result};

/// Grid used by [`solve_q`] to bracket the largest root.
pub const Q_GRID: usize = 10_000;
/// `solve_q` values below this count as "no positive fixed point".
pub const Q_POSITIVE: f64 = 1e-9;
pub const QUAD_TOL: f64 = 1e-8;
pub const QUAD_DEPTH: u32 = 40;
/// Recursion depth standing in for the `l -> infinity` limit of `S_l`.
pub const S_LIMIT_LEVELS: usize = 100;

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut s = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

/// Lower incomplete gamma `γ(a, x) = ∫_0^x t^{a-1} e^{-t} dt`.
pub fn lower_gamma(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "lower_gamma needs a > 0, x >= 0");
    if x == 0.0 {
        return 0.0;
    }
    const EPS: f64 = 1e-16;
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        for n in 1..10_000 {
            term *= x / (a + n as f64);
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        sum * (a * x.ln() - x).exp()
    } else {
        // Lentz continued fraction for the regularized upper tail
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        let ln_ga = ln_gamma(a);
        let upper_reg = (a * x.ln() - x - ln_ga).exp() * h;
        ln_ga.exp() * (1.0 - upper_reg)
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(&f, a, b, fa, fm, fb, whole, tol, max_depth)
}

pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    adaptive_simpson(f, a, b, QUAD_TOL, QUAD_DEPTH)
}

fn bisect(mut lo: f64, mut hi: f64, iters: usize, mut pred_hi: impl FnMut(f64) -> bool) -> f64 {
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if pred_hi(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn kr_exponent(k: usize, r: f64, q: f64) -> f64 {
    k as f64 * r * q.powi(k as i32 - 1)
}

/// Largest `Q` in `[0, 1)` with `Q = 1 - exp(-k r Q^{k-1})`, or 0 if only
/// the trivial root exists.
pub fn solve_q(k: usize, r: f64) -> f64 {
    solve_q_grid(k, r, Q_GRID)
}

pub fn solve_q_grid(k: usize, r: f64, grid: usize) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let g = |q: f64| 1.0 - (-kr_exponent(k, r, q)).exp() - q;
    // g(1) < 0; walk down to the first point where g >= 0
    let mut prev = 1.0;
    for j in 1..grid {
        let q = 1.0 - j as f64 / grid as f64;
        if g(q) >= 0.0 {
            let mut lo = q;
            let mut hi = prev;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if g(mid) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            return if root < Q_POSITIVE { 0.0 } else { root };
        }
        prev = q;
    }
    0.0
}

/// Core-emergence threshold: the smallest `r` with a positive fixed point.
pub fn r_core(k: usize) -> f64 {
    bisect(0.0, 1.0, 60, |r| solve_q(k, r) > Q_POSITIVE)
}

fn a_of(k: usize, r: f64) -> f64 {
    kr_exponent(k, r, solve_q(k, r))
}

/// Asymptotic fraction of variables in the 2-core.
pub fn v_core(k: usize, r: f64) -> f64 {
    let a = a_of(k, r);
    1.0 - (-a).exp() - a * (-a).exp()
}

/// Asymptotic fraction of core variables with degree `l >= 2`.
pub fn lambda_hat(k: usize, r: f64, l: usize) -> f64 {
    let a = a_of(k, r);
    if l < 2 || a == 0.0 {
        return 0.0;
    }
    (l as f64 * a.ln() - ln_gamma(l as f64 + 1.0)).exp() / (a.exp() - 1.0 - a)
}

/// Asymptotic fraction of clauses in the 2-core, `r Q^k`.
pub fn core_clause_fraction(k: usize, r: f64) -> f64 {
    r * solve_q(k, r).powi(k as i32)
}

pub fn mu(k: usize, r: f64) -> f64 {
    let a = a_of(k, r);
    (-a).exp() * (1.0 + a)
}

pub fn mu_u(k: usize) -> f64 {
    let c = 1.0 - (-1.0 / k as f64).exp();
    c - c * c.ln()
}

/// Expected fraction of free steps of unit-clause decimation.
pub fn w1(k: usize, r: f64) -> f64 {
    if r <= 0.0 {
        return 1.0;
    }
    let km1 = (k - 1) as f64;
    let kr = k as f64 * r;
    kr.powf(-1.0 / km1) / km1 * lower_gamma(1.0 / km1, kr)
}

pub fn w1_star(k: usize) -> f64 {
    let kf = k as f64;
    let km1 = kf - 1.0;
    kf.powf(-1.0 / km1) / km1 * lower_gamma(1.0 / km1, kf * (kf / (kf + 1.0)).powf(km1))
}

/// `S_0 = 1`, `S_l(x) = exp(-k r [(1-x)(1-S_{l-1}(x)) + x]^{k-1})`.
pub fn s_l(x: f64, k: usize, r: f64, l: usize) -> f64 {
    let mut s = 1.0;
    for _ in 0..l {
        s = (-(k as f64) * r * ((1.0 - x) * (1.0 - s) + x).powi(k as i32 - 1)).exp();
    }
    s
}

/// `∫_0^1 S_R(x) dx`.
pub fn w_e(k: usize, r: f64, radius: usize) -> f64 {
    integrate(|x| s_l(x, k, r, radius), 0.0, 1.0)
}

/// The two roots `x^-` and `x^+`.
pub fn x_pm(k: usize, r: f64) -> Result<(f64, f64)> {
    if k < 3 {
        return Err(Error::Domain { k, r, msg: "x_pm needs k >= 3".into() });
    }
    let kr = k as f64 * r;
    let disc = 1.0 - 4.0 * kr.powi(-2) * (kr.powf(1.0 / (k as f64 - 1.0)) - 1.0);
    if disc.is_nan() || disc < 0.0 {
        return Err(Error::Domain { k, r, msg: format!("negative discriminant {disc}") });
    }
    let e = 1.0 / (k as f64 - 2.0);
    let s = disc.sqrt();
    if s > 1.0 {
        return Err(Error::Domain { k, r, msg: format!("x^- base {} is negative", (1.0 - s) / 2.0) });
    }
    Ok((((1.0 - s) / 2.0).powf(e), ((1.0 + s) / 2.0).powf(e)))
}

pub fn w_e_star(k: usize, r: f64) -> Result<f64> {
    let (xm, _) = x_pm(k, r)?;
    Ok(xm - k as f64 * r * r * xm.powi(k as i32))
}

/// Binary entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    h(p) + h(1.0 - p)
}

/// First-moment growth rate of pairs of solutions at distance `alpha n`.
pub fn first_moment_f(k: usize, r: f64, alpha: f64) -> f64 {
    let xlx = |x: f64| if x <= 0.0 { 1.0 } else { x.powf(x) };
    let base = (1.0 + (1.0 - 2.0 * alpha).powi(k as i32)) / 4.0;
    2.0 / (xlx(alpha) * xlx(1.0 - alpha)) * base.powf(r)
}

pub fn r_star(k: usize, alpha: f64) -> f64 {
    (1.0 + binary_entropy(alpha)) / (2.0 - (1.0 + (1.0 - 2.0 * alpha).powi(k as i32)).log2())
}

/// `min_{alpha in [0, 1/2]} r_star(k, alpha)`, with its argmin.
pub fn r_1(k: usize) -> (f64, f64) {
    const GRID: usize = 2000;
    let f = |a: f64| r_star(k, a);
    let step = 0.5 / GRID as f64;
    let best = (0..=GRID).min_by(|&i, &j| f(i as f64 * step).total_cmp(&f(j as f64 * step))).unwrap_or(0);
    let mut lo = (best as f64 - 1.0).max(0.0) * step;
    let mut hi = ((best + 1) as f64 * step).min(0.5);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-12 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    let alpha = 0.5 * (lo + hi);
    (f(alpha), alpha)
}

/// Estimated satisfiability threshold: the density at which the core has
/// as many clauses as variables, `r Q^k = V(k, r)`. A criterion-based
/// estimate, not an exact threshold.
pub fn r_sat_estimate(k: usize) -> f64 {
    let lo = r_core(k);
    bisect(lo, 1.0, 60, |r| core_clause_fraction(k, r) - v_core(k, r) >= 0.0)
}

/// Predicted residual degree profile after a fraction `x` of the variables
/// has been decimated: `z_i` (variables of degree `i`, per `n`, for
/// `i <= max_deg`) and `y_i` (clauses of width `i`, per `n`, `i <= k`).
pub fn degree_profile_prediction(k: usize, r: f64, x: f64, max_deg: usize) -> (Vec<f64>, Vec<f64>) {
    let lam = k as f64 * r;
    let z = (0..=max_deg).map(|i| poisson_pmf(lam, i) * (1.0 - x)).collect();
    let y = (0..=k).map(|i| r * binom(k, i) * x.powi((k - i) as i32) * (1.0 - x).powi(i as i32)).collect();
    (z, y)
}

pub fn poisson_pmf(lam: f64, i: usize) -> f64 {
    if lam == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    (-lam + i as f64 * lam.ln() - ln_gamma(i as f64 + 1.0)).exp()
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub k: usize,
    pub r_core: f64,
    pub r_1: f64,
    pub alpha_1: f64,
    /// Criterion-based estimate, see [`r_sat_estimate`].
    pub r_sat_est: f64,
    pub r_sat_note: &'static str,
}

impl ThresholdReport {
    pub fn compute(k: usize) -> Self {
        let (r1, alpha1) = r_1(k);
        ThresholdReport {
            k,
            r_core: r_core(k),
            r_1: r1,
            alpha_1: alpha1,
            r_sat_est: r_sat_estimate(k),
            r_sat_note: "criterion-based estimate: r Q^k = V(k,r)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreenessReport {
    pub k: usize,
    pub r: f64,
    pub q: f64,
    pub mu: f64,
    pub mu_u: f64,
    pub w1: f64,
    pub w1_star: f64,
    pub radius: usize,
    pub w_e: f64,
    pub w_e_limit: f64,
    /// `None` outside the domain of `x_pm`.
    pub w_e_star: Option<f64>,
    pub x_minus: Option<f64>,
}

impl FreenessReport {
    pub fn compute(k: usize, r: f64, radius: usize) -> Self {
        let x_minus = x_pm(k, r).ok().map(|p| p.0);
        FreenessReport {
            k,
            r,
            q: solve_q(k, r),
            mu: mu(k, r),
            mu_u: mu_u(k),
            w1: w1(k, r),
            w1_star: w1_star(k),
            radius,
            w_e: w_e(k, r, radius),
            w_e_limit: w_e(k, r, S_LIMIT_LEVELS),
            w_e_star: w_e_star(k, r).ok(),
            x_minus,
        }
    }
}
