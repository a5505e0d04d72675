//! Batch drivers tying simulation to theory.
//!
//! Each `cmd_*` function takes an [`ExperimentConfig`] and returns a
//! [`Report`]: a table, scalar summaries, JSON-only details, and a list of
//! checks. Trials run on a rayon pool capped by `XORSAT_LAB_THREADS`; every
//! trial derives its own seed from the master seed and its index, and
//! results are collected in trial order, so output bytes do not depend on
//! the thread count.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::decimation::{
    even_checkpoints, Decimator, InternalVector, LocalRule, OrderingVector, TreeMarginal, UnitClause,
};
use crate::error::{Error, Result};
use crate::gf2::{self, packed_distance};
use crate::instance::{hamming, sample_with_density, Instance};
use crate::peeling::peel;
use crate::rng::{self, Purpose};
use crate::theory;

pub const THREADS_ENV: &str = "XORSAT_LAB_THREADS";
pub const OGP_MAX_RESAMPLES: usize = 100;
pub const HIST_BINS: usize = 100;
/// Distances below this belong to the near-zero band of an OGP scan.
pub const NEAR_ZERO_BAND: f64 = 0.05;
pub const SIG_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Uc,
    Marginal,
}

impl std::str::FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uc" => Ok(RuleKind::Uc),
            "marginal" => Ok(RuleKind::Marginal),
            _ => Err(Error::InvalidParameters(format!("unknown rule {s:?} (expected uc or marginal)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OgpTarget {
    Whole,
    Core,
}

impl std::str::FromStr for OgpTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whole" => Ok(OgpTarget::Whole),
            "core" => Ok(OgpTarget::Core),
            _ => Err(Error::InvalidParameters(format!("unknown target {s:?} (expected whole or core)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Every parameter of a run. Serialized verbatim into output headers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub k: Vec<usize>,
    pub r: Vec<f64>,
    pub n: Vec<usize>,
    pub trials: usize,
    pub rule: RuleKind,
    /// Radius of the marginal rule; unit clause always uses 2.
    pub radius: usize,
    /// Number of evenly spaced walk checkpoints (ignored with `full_walk`).
    pub checkpoints: usize,
    pub full_walk: bool,
    pub pairs: usize,
    pub target: OgpTarget,
    pub build_id: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            k: vec![3],
            r: vec![0.9],
            n: vec![10_000],
            trials: 20,
            rule: RuleKind::Uc,
            radius: 4,
            checkpoints: 101,
            full_walk: false,
            pairs: 1000,
            target: OgpTarget::Core,
            build_id: concat!("xorsat-core ", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameters(m));
        if self.k.is_empty() || self.k.iter().any(|&k| k < 3) {
            return bad(format!("k must be >= 3, got {:?}", self.k));
        }
        if self.r.iter().any(|&r| !(r.is_finite() && r >= 0.0)) {
            return bad(format!("r must be finite and >= 0, got {:?}", self.r));
        }
        if let Some(&n) = self.n.iter().find(|&&n| n < self.k[0]) {
            return bad(format!("n = {n} is smaller than k = {}", self.k[0]));
        }
        if !self.radius.is_multiple_of(2) {
            return bad(format!("radius must be even, got {}", self.radius));
        }
        Ok(())
    }

    pub fn rule_radius(&self) -> usize {
        match self.rule {
            RuleKind::Uc => 2,
            RuleKind::Marginal => self.radius,
        }
    }

    pub fn local_rule(&self) -> Box<dyn LocalRule> {
        match self.rule {
            RuleKind::Uc => Box::new(UnitClause),
            RuleKind::Marginal => Box::new(TreeMarginal { radius: self.radius }),
        }
    }

    fn k0(&self) -> usize {
        self.k[0]
    }

    fn first<T: Copy>(xs: &[T], what: &str) -> Result<T> {
        xs.first().copied().ok_or_else(|| Error::InvalidParameters(format!("missing {what}")))
    }

    fn r0(&self) -> Result<f64> {
        Self::first(&self.r, "--r")
    }

    fn n0(&self) -> Result<usize> {
        Self::first(&self.n, "--n")
    }
}

/// Rayon pool sized by `XORSAT_LAB_THREADS` when set.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::InvalidParameters(format!("{THREADS_ENV} must be a positive integer, got {s:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameters(format!("thread pool: {e}")))
}

/// Runs `f(0..trials)` on the pool; results come back in trial order.
pub fn run_trials<T, F>(pool: &rayon::ThreadPool, trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    pool.install(|| (0..trials).into_par_iter().map(f).collect())
}

/// Seed of trial `t` at parameter point `p`.
pub fn point_seed(master: u64, p: usize, t: usize) -> u64 {
    rng::trial_seed(rng::trial_seed(master, p as u64), t as u64)
}

/// Formats `x` with [`SIG_DIGITS`] significant digits, trailing zeros
/// trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if !(-6..=15).contains(&e) {
        return format!("{:.*e}", SIG_DIGITS - 1, x);
    }
    let decimals = (SIG_DIGITS as i32 - 1 - e).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_sig(*x),
            Cell::Bool(b) => u8::from(*b).to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

/// A named check. Only checks marked `assertion` influence the exit code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub assertion: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub config: ExperimentConfig,
    pub summary: Map<String, Value>,
    /// JSON-only structured output.
    pub details: Map<String, Value>,
    pub checks: Vec<Check>,
    pub table: Table,
}

impl Report {
    fn new(command: &str, cfg: &ExperimentConfig, table: Table) -> Self {
        Report {
            command: command.into(),
            config: cfg.clone(),
            summary: Map::new(),
            details: Map::new(),
            checks: Vec::new(),
            table,
        }
    }

    fn put(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.into(), v.into());
    }

    fn check(&mut self, name: &str, passed: bool, assertion: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, assertion, detail: detail.into() });
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    /// False iff an assertion-tagged check failed.
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.assertion)
    }

    pub fn header_lines(&self) -> Vec<String> {
        let config = serde_json::to_string(&self.config).unwrap_or_default();
        vec![
            format!("# xorsat-lab {} build={}", self.command, self.config.build_id),
            format!("# config {config}"),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in self.header_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        for (k, v) in &self.summary {
            let v = match v {
                Value::Number(x) if x.is_f64() => fmt_sig(x.as_f64().unwrap_or(f64::NAN)),
                other => other.to_string(),
            };
            out.push_str(&format!("# {k} = {v}\n"));
        }
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("# check {} {tag} {}\n", c.name, c.detail));
        }
        out.push_str(&self.table.to_csv());
        out
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).unwrap_or(Value::Null);
        if let Value::Object(o) = &mut v {
            o.insert("header".into(), json!(self.header_lines()));
        }
        serde_json::to_string_pretty(&v).unwrap_or_default() + "\n"
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn vectors_for(seed: u64, n: usize) -> (OrderingVector, InternalVector, InternalVector) {
    (
        OrderingVector::random(n, &mut rng::stream(seed, Purpose::Ordering)),
        InternalVector::random(n, &mut rng::stream(seed, Purpose::InternalV)),
        InternalVector::random(n, &mut rng::stream(seed, Purpose::InternalW)),
    )
}

/// Thresholds per `k` (`r_core`, `r_1`, `r_sat_est`) and freeness constants.
pub fn cmd_theory(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let mut table = Table::new(&["k", "r_core", "r_1", "alpha_1", "r_sat_est"]);
    let mut thresholds = Vec::new();
    let mut freeness = Vec::new();
    let pool = worker_pool()?;
    let reports = run_trials(&pool, cfg.k.len(), |i| theory::ThresholdReport::compute(cfg.k[i]));
    let mut ordered = true;
    for t in reports {
        ordered &= t.r_core < t.r_1 && t.r_core < t.r_sat_est;
        table.push(vec![t.k.into(), t.r_core.into(), t.r_1.into(), t.alpha_1.into(), t.r_sat_est.into()]);
        let rs: Vec<f64> = if cfg.r.is_empty() { vec![0.5 * (t.r_core + t.r_sat_est)] } else { cfg.r.clone() };
        for r in rs {
            freeness.push(theory::FreenessReport::compute(t.k, r, cfg.radius));
        }
        thresholds.push(t);
    }
    let mut rep = Report::new("theory", cfg, table);
    rep.put("two_mu_u_9", 2.0 * theory::mu_u(9));
    rep.put("w1_star_9", theory::w1_star(9));
    rep.put("two_mu_u_13", 2.0 * theory::mu_u(13));
    let r13 = theory::r_sat_estimate(13);
    rep.put("r_sat_est_13", r13);
    rep.put("w_e_star_13", theory::w_e_star(13, r13)?);
    rep.put("r_sat_note", "r_sat_est is a criterion-based estimate: r Q^k = V(k,r)");
    rep.details.insert("thresholds".into(), json!(thresholds));
    rep.details.insert("freeness".into(), json!(freeness));
    rep.check("r_core_below_r1_and_r_sat", ordered, true, "r_core < r_1 and r_core < r_sat_est for every k");
    Ok(rep)
}

pub const CORE_DEGREES: std::ops::RangeInclusive<usize> = 2..=6;

/// Empirical 2-core sizes and degree fractions against theory.
pub fn cmd_core_stats(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let (k, r, n) = (cfg.k0(), cfg.r0()?, cfg.n0()?);
    let pool = worker_pool()?;
    let results = run_trials(&pool, cfg.trials, |t| -> Result<_> {
        let inst = sample_with_density(k, n, r, point_seed(cfg.seed, 0, t))?;
        Ok(peel(&inst).stats(n))
    });
    let mut cols = vec!["trial".to_string(), "core_var_fraction".into(), "core_clause_fraction".into()];
    cols.extend(CORE_DEGREES.map(|l| format!("deg{l}")));
    let mut table = Table { columns: cols, rows: Vec::new() };
    let mut fracs = Vec::new();
    let mut degs = vec![Vec::new(); *CORE_DEGREES.end() + 1];
    let mut min_degree_ok = true;
    for (t, res) in results.into_iter().enumerate() {
        let s = res?;
        let at = |l: usize| s.core_degree_hist.get(l).copied().unwrap_or(0.0);
        min_degree_ok &= at(0) == 0.0 && at(1) == 0.0;
        let mut row: Vec<Cell> = vec![t.into(), s.core_var_fraction.into(), s.core_clause_fraction.into()];
        for l in CORE_DEGREES {
            row.push(at(l).into());
            if s.core_var_fraction > 0.0 {
                degs[l].push(at(l));
            }
        }
        fracs.push(s.core_var_fraction);
        table.push(row);
    }
    let mut rep = Report::new("core-stats", cfg, table);
    let (m, se) = mean_stderr(&fracs);
    rep.put("mean_core_var_fraction", m);
    rep.put("stderr_core_var_fraction", se);
    rep.put("theory_V", theory::v_core(k, r));
    rep.put("theory_core_clause_fraction", theory::core_clause_fraction(k, r));
    for l in CORE_DEGREES {
        rep.put(&format!("mean_deg{l}"), mean_stderr(&degs[l]).0);
        rep.put(&format!("theory_lambda_hat_{l}"), theory::lambda_hat(k, r, l));
    }
    rep.check("core_min_degree_2", min_degree_ok, true, "no core variable of degree < 2");
    Ok(rep)
}

/// Free-step fractions of decimation runs.
pub fn cmd_freeness(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let (k, r, n) = (cfg.k0(), cfg.r0()?, cfg.n0()?);
    let rule = cfg.local_rule();
    let pool = worker_pool()?;
    let results = run_trials(&pool, cfg.trials, |t| -> Result<_> {
        let seed = point_seed(cfg.seed, 0, t);
        let inst = sample_with_density(k, n, r, seed)?;
        let (z, u, _) = vectors_for(seed, n);
        let tr = Decimator::new(&inst, rule.as_ref(), &z)?.run(&u)?;
        Ok((tr.steps.len(), tr.free_fraction(), inst.is_satisfied_by(&tr.output), tr.violated_on_removal, tr.fallbacks()))
    });
    let mut table =
        Table::new(&["trial", "free_fraction", "satisfied", "violated_on_removal", "fallbacks"]);
    let mut fr = Vec::new();
    let mut informative = Vec::new();
    let mut steps_ok = true;
    for (t, res) in results.into_iter().enumerate() {
        let (steps, f, sat, viol, fb) = res?;
        steps_ok &= steps == n;
        fr.push(f);
        informative.push(f - fb as f64 / n as f64);
        table.push(vec![t.into(), f.into(), sat.into(), viol.into(), fb.into()]);
    }
    let mut rep = Report::new("freeness", cfg, table);
    let (m, se) = mean_stderr(&fr);
    let two_mu = 2.0 * theory::mu(k, r);
    rep.put("mean_free_fraction", m);
    rep.put("stderr_free_fraction", se);
    // free steps caused by an unsatisfiable ball do not reflect the rule
    rep.put("mean_free_fraction_without_fallbacks", mean_stderr(&informative).0);
    rep.put("theory_w1", theory::w1(k, r));
    rep.put("theory_w_e", theory::w_e(k, r, cfg.rule_radius()));
    rep.put("two_mu", two_mu);
    rep.put("margin_over_two_mu", m - two_mu);
    rep.check("n_steps_per_run", steps_ok, true, "every trace has exactly n steps");
    Ok(rep)
}

/// Distance curves along the re-randomization sequence.
pub fn cmd_walk(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let (k, r, n) = (cfg.k0(), cfg.r0()?, cfg.n0()?);
    let cps = if cfg.full_walk { (0..=n).collect() } else { even_checkpoints(n, cfg.checkpoints) };
    let rule = cfg.local_rule();
    let pool = worker_pool()?;
    type WalkRow = (usize, f64, Option<f64>, bool);
    let walks = run_trials(&pool, cfg.trials, |t| -> Result<(f64, Vec<WalkRow>)> {
        let seed = point_seed(cfg.seed, 0, t);
        let inst = sample_with_density(k, n, r, seed)?;
        let core = peel(&inst);
        let (z, v, w) = vectors_for(seed, n);
        let mut dec = Decimator::new(&inst, rule.as_ref(), &z)?;
        let first = dec.run(&v)?;
        let sigma0 = &first.output;
        let pi0 = core.project(sigma0)?;
        let sat0 = inst.is_satisfied_by(sigma0);
        let mut rows = Vec::with_capacity(cps.len());
        for &i in &cps {
            let sigma = if i == 0 { first.output.clone() } else { dec.run(&InternalVector::spliced(&v, &w, i))?.output };
            let d = hamming(sigma0, &sigma)? as f64 / n as f64;
            let dc = (!core.is_empty())
                .then(|| hamming(&pi0, &core.project(&sigma)?).map(|d| d as f64 / core.kept.len() as f64))
                .transpose()?;
            rows.push((i, d, dc, sat0 && inst.is_satisfied_by(&sigma)));
        }
        Ok((first.free_fraction(), rows))
    });
    let mut table = Table::new(&["walk", "i", "d_whole", "d_core", "both_solve"]);
    let mut free = Vec::new();
    let mut finals = Vec::new();
    let mut origin_ok = true;
    for (t, res) in walks.into_iter().enumerate() {
        let (f, rows) = res?;
        free.push(f);
        for &(i, d, dc, both) in &rows {
            if i == 0 {
                origin_ok &= d == 0.0;
            }
            table.push(vec![t.into(), i.into(), d.into(), dc.into(), both.into()]);
        }
        if let Some(&(i, d, _, _)) = rows.last() {
            if i == n {
                finals.push(d);
            }
        }
    }
    let mut rep = Report::new("walk", cfg, table);
    let mf = mean_stderr(&free).0;
    rep.put("checkpoints", cps.len());
    rep.put("mean_free_fraction", mf);
    rep.put("mean_final_distance", mean_stderr(&finals).0);
    rep.put("delta_far_bound", mf / 2.0 - 0.02);
    rep.check("checkpoint_zero_distance", origin_ok, true, "d(sigma_0, sigma_0) = 0");
    Ok(rep)
}

/// Normalized Hamming distances of distinct solution pairs in 0.01 bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceHistogram {
    pub counts: Vec<usize>,
    pub sample_size: usize,
    pub target: OgpTarget,
}

impl DistanceHistogram {
    pub fn new(target: OgpTarget) -> Self {
        DistanceHistogram { counts: vec![0; HIST_BINS], sample_size: 0, target }
    }

    /// Adds distance `d` out of `n`; the last bin is closed on the right.
    pub fn add(&mut self, d: usize, n: usize) {
        self.counts[(d * HIST_BINS / n).min(HIST_BINS - 1)] += 1;
        self.sample_size += 1;
    }

    pub fn bin_edges(i: usize) -> (f64, f64) {
        (i as f64 / HIST_BINS as f64, (i + 1) as f64 / HIST_BINS as f64)
    }
}

/// Gap between the near-zero band (which always contains the distance 0
/// of identical pairs) and the bulk: `(lower anchor, bulk edge)`, or `None`
/// with no distances at or above [`NEAR_ZERO_BAND`].
pub fn ogp_gap(normalized: &[f64]) -> Option<(f64, f64)> {
    let lower = normalized.iter().copied().filter(|&d| d < NEAR_ZERO_BAND).fold(0.0, f64::max);
    let bulk = normalized.iter().copied().filter(|&d| d >= NEAR_ZERO_BAND).min_by(f64::total_cmp)?;
    Some((lower, bulk))
}

/// Samples uniform solution pairs of the instance or its core.
pub fn cmd_ogp_scan(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let (k, r, n) = (cfg.k0(), cfg.r0()?, cfg.n0()?);
    let mut table = Table::new(&["bin_lo", "bin_hi", "count"]);
    let mut hist = DistanceHistogram::new(cfg.target);
    let mut resamples = 0;
    let mut outcome = "unsatisfiable";
    let mut target_n = 0;
    let mut kernel_dim = 0;
    let mut identical = 0;
    let mut normalized = Vec::new();
    for attempt in 0..=OGP_MAX_RESAMPLES {
        let seed = point_seed(cfg.seed, 0, attempt);
        let inst = sample_with_density(k, n, r, seed)?;
        let target: Instance = match cfg.target {
            OgpTarget::Whole => inst,
            OgpTarget::Core => {
                let cr = peel(&inst);
                if cr.is_empty() {
                    outcome = "empty_core";
                    break;
                }
                cr.core
            }
        };
        let Ok(sampler) = gf2::eliminate(&target).sampler() else {
            resamples += 1;
            continue;
        };
        outcome = "ok";
        target_n = target.n();
        kernel_dim = sampler.kernel_dim();
        let mut g = rng::stream(seed, Purpose::Solution);
        for _ in 0..cfg.pairs {
            let a = sampler.sample_words(&mut g);
            let b = sampler.sample_words(&mut g);
            match packed_distance(&a, &b) {
                0 => identical += 1,
                d => {
                    hist.add(d, target_n);
                    normalized.push(d as f64 / target_n as f64);
                }
            }
        }
        break;
    }
    for (i, &c) in hist.counts.iter().enumerate() {
        let (lo, hi) = DistanceHistogram::bin_edges(i);
        table.push(vec![lo.into(), hi.into(), c.into()]);
    }
    let gap = ogp_gap(&normalized);
    let mut rep = Report::new("ogp-scan", cfg, table);
    rep.put("outcome", outcome);
    rep.put("target_n", target_n);
    rep.put("kernel_dim", kernel_dim);
    rep.put("resamples", resamples);
    rep.put("distinct_pairs", hist.sample_size);
    rep.put("identical_pairs", identical);
    if let Some((lo, hi)) = gap {
        rep.put("gap_lower_anchor", lo);
        rep.put("gap_bulk_edge", hi);
        rep.put("gap_width", hi - lo);
    }
    let sum: usize = hist.counts.iter().sum();
    rep.check("histogram_counts_sum", sum == hist.sample_size, true, format!("{sum} of {}", hist.sample_size));
    rep.details.insert("histogram".into(), json!(hist));
    Ok(rep)
}

/// Success probability of decimation over an `r` grid and `n` list.
pub fn cmd_success(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let k = cfg.k0();
    if cfg.r.is_empty() || cfg.n.is_empty() {
        return Err(Error::InvalidParameters("success needs at least one r and one n".into()));
    }
    let rule = cfg.local_rule();
    let pool = worker_pool()?;
    let mut table = Table::new(&["r", "n", "trials", "successes", "fraction", "stderr", "mean_free_fraction"]);
    let mut consistent = true;
    let mut p = 0;
    for &r in &cfg.r {
        for &n in &cfg.n {
            let results = run_trials(&pool, cfg.trials, |t| -> Result<_> {
                let seed = point_seed(cfg.seed, p, t);
                let inst = sample_with_density(k, n, r, seed)?;
                let (z, u, _) = vectors_for(seed, n);
                let tr = Decimator::new(&inst, rule.as_ref(), &z)?.run(&u)?;
                Ok((inst.is_satisfied_by(&tr.output), tr.violated_on_removal, tr.free_fraction()))
            });
            let mut succ = 0;
            let mut free = Vec::new();
            for res in results {
                let (sat, viol, f) = res?;
                consistent &= !(viol > 0 && sat);
                succ += usize::from(sat);
                free.push(f);
            }
            let frac = if cfg.trials == 0 { f64::NAN } else { succ as f64 / cfg.trials as f64 };
            let se = (frac * (1.0 - frac) / cfg.trials.max(1) as f64).sqrt();
            table.push(vec![
                r.into(),
                n.into(),
                cfg.trials.into(),
                succ.into(),
                frac.into(),
                se.into(),
                mean_stderr(&free).0.into(),
            ]);
            p += 1;
        }
    }
    let mut rep = Report::new("success", cfg, table);
    rep.put("r_core", theory::r_core(k));
    rep.put("r_sat_est", theory::r_sat_estimate(k));
    rep.check(
        "violation_means_failure",
        consistent,
        true,
        "violated_on_removal > 0 implies the output is not a solution",
    );
    Ok(rep)
}
