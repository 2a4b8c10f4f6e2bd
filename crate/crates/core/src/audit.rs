//! Closed-form rates, the rate-comparison theorems, and privacy audits.
//!
//! Privacy is audited two ways. The non-repetition census checks every plan
//! over many seeds and demands. The distribution audit compares what the
//! server sees under different demands: exactly, by enumerating every
//! random choice of the generator, when the choice tree is small enough,
//! and otherwise by Monte Carlo on per-query, per-class marginals.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::query::{find_repetition, generate, seeded_chooser, Chooser, Demands, Preconditions, Query, QueryError, Repetition, ServerView};
use crate::scenario::{rotation_hits, Mode, Scenario};

/// Largest choice tree [`query_distribution`] will walk.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditError {
    #[error("choice tree has more than {limit} leaves")]
    TooLargeToEnumerate { limit: u64 },
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// The numbers the rate formulas depend on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateParams {
    pub eta: usize,
    pub mu: Vec<usize>,
    /// `k[u-1][i-1]` = k_i^u.
    pub k: Vec<Vec<usize>>,
}

impl RateParams {
    pub fn single(eta: usize, mu: Vec<usize>, k: Vec<usize>) -> Self {
        Self { eta, mu, k: vec![k] }
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let gamma = s.gamma();
        Self {
            eta: s.eta(),
            mu: (1..=gamma).map(|i| s.mu(i)).collect(),
            k: (1..=s.user_count()).map(|u| (1..=gamma).map(|i| s.k(u, i)).collect()).collect(),
        }
    }

    pub fn gamma(&self) -> usize {
        self.mu.len()
    }

    pub fn users(&self) -> usize {
        self.k.len()
    }

    pub fn k_un(&self) -> usize {
        self.k.iter().flat_map(|k| k[self.eta..].iter().copied()).max().unwrap_or(0)
    }

    pub fn eta_prime(&self) -> usize {
        (self.eta - 1).div_ceil(self.users())
    }
}

fn reciprocal(d: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(d))
}

/// 1 / ((k_un+1)(Γ-η+1)).
pub fn rate_isi(p: &RateParams) -> BigRational {
    reciprocal((p.k_un() + 1) * (p.gamma() - p.eta + 1))
}

/// 1 / Σ min(k_i+1, μ_i-k_i) for a single user; `None` otherwise.
pub fn rate_usi(p: &RateParams) -> Option<BigRational> {
    let [k] = p.k.as_slice() else { return None };
    Some(reciprocal(usi_download(&p.mu, k)))
}

fn usi_download(mu: &[usize], k: &[usize]) -> usize {
    mu.iter().zip(k).map(|(&m, &k)| (k + 1).min(m - k)).sum()
}

/// 1 / ((k_un+1)(Γ-η')).
pub fn rate_multi(p: &RateParams) -> BigRational {
    reciprocal((p.k_un() + 1) * (p.gamma() - p.eta_prime()))
}

/// Rate of serving U users one after another with the single-user scheme:
/// 1 / (U(k_un+1)(Γ-η+1)).
pub fn rate_naive_multi(p: &RateParams) -> BigRational {
    reciprocal(p.users() * (p.k_un() + 1) * (p.gamma() - p.eta + 1))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    NotApplicable { reason: String },
    Fails { witnesses: Vec<String> },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    fn from_witnesses(witnesses: Vec<String>) -> Self {
        if witnesses.is_empty() {
            Verdict::Holds
        } else {
            Verdict::Fails { witnesses }
        }
    }
}

/// Hypotheses of the three sufficient conditions for R_isi >= R_usi.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TheoremFlags {
    /// k_i+1 <= μ_i-k_i everywhere and k_i = k_un on unidentifiable classes.
    pub t2: Verdict,
    /// Uniform k, k_un and μ with k_i+1 >= μ-k_i and
    /// μ >= k + ceil((Γ-η+1)(k_un+1)/Γ).
    pub t3: Verdict,
    /// η = 1 and k_i+1 >= μ_i-k_i everywhere.
    pub t4: Verdict,
}

impl TheoremFlags {
    pub fn any_holds(&self) -> bool {
        self.t2.holds() || self.t3.holds() || self.t4.holds()
    }
}

fn base_preconditions(p: &RateParams, k: &[usize]) -> Vec<String> {
    let k_un = p.k_un();
    let margin = (k_un + 1).div_ceil(p.eta);
    let queries = k_un + 1;
    let mut out = Vec::new();
    for i in 0..p.eta {
        let need = k_un.max(queries - rotation_hits(i + 1, p.eta, queries)).max(usize::from(p.eta > 1));
        if k[i] < need {
            out.push(format!("class {}: k={} < {need}", i + 1, k[i]));
        }
    }
    for (i, (&m, &k)) in p.mu.iter().zip(k).enumerate() {
        if m < k + margin {
            out.push(format!("class {}: mu-k={} < {margin}", i + 1, m - k.min(m)));
        }
    }
    out
}

pub fn theorem_conditions(p: &RateParams) -> TheoremFlags {
    let [k] = p.k.as_slice() else {
        let reason = format!("{} users; the comparison is for a single user", p.users());
        let na = Verdict::NotApplicable { reason };
        return TheoremFlags { t2: na.clone(), t3: na.clone(), t4: na };
    };
    let pre = base_preconditions(p, k);
    if !pre.is_empty() {
        let na = Verdict::NotApplicable { reason: format!("scheme preconditions fail: {}", pre.join("; ")) };
        return TheoremFlags { t2: na.clone(), t3: na.clone(), t4: na };
    }
    let gamma = p.gamma();
    let eta = p.eta;
    let k_un = p.k_un();
    let mu = &p.mu;

    let mut w = Vec::new();
    for i in 0..gamma {
        if k[i] + 1 > mu[i] - k[i] {
            w.push(format!("class {}: k+1={} > mu-k={}", i + 1, k[i] + 1, mu[i] - k[i]));
        }
    }
    for i in eta..gamma {
        if k[i] != k_un {
            w.push(format!("class {}: k={} != k_un={k_un}", i + 1, k[i]));
        }
    }
    let t2 = Verdict::from_witnesses(w);

    let uniform_k = k[..eta].iter().all(|&x| x == k[0]);
    let uniform_un = k[eta..].iter().all(|&x| x == k_un);
    let uniform_mu = mu.iter().all(|&m| m == mu[0]);
    let t3 = if !(uniform_k && uniform_un && uniform_mu) {
        Verdict::NotApplicable { reason: "needs uniform k, k_un and mu".into() }
    } else {
        let (kk, m) = (k[0], mu[0]);
        let mut w = Vec::new();
        for i in 0..gamma {
            if k[i] + 1 < m - k[i] {
                w.push(format!("class {}: k+1={} < mu-k={}", i + 1, k[i] + 1, m - k[i]));
            }
        }
        let bound = kk + ((gamma - eta + 1) * (k_un + 1)).div_ceil(gamma);
        if m < bound {
            w.push(format!("mu={m} < {bound}"));
        }
        Verdict::from_witnesses(w)
    };

    let mut w = Vec::new();
    if eta != 1 {
        w.push(format!("eta={eta} != 1"));
    }
    for i in 0..gamma {
        if k[i] + 1 < mu[i] - k[i] {
            w.push(format!("class {}: k+1={} < mu-k={}", i + 1, k[i] + 1, mu[i] - k[i]));
        }
    }
    let t4 = Verdict::from_witnesses(w);

    TheoremFlags { t2, t3, t4 }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonReport {
    pub r_isi: BigRational,
    pub r_usi: Option<BigRational>,
    pub r_multi: BigRational,
    pub r_naive_multi: BigRational,
    pub theorems: TheoremFlags,
}

impl ComparisonReport {
    pub fn new(p: &RateParams) -> Self {
        Self {
            r_isi: rate_isi(p),
            r_usi: rate_usi(p),
            r_multi: rate_multi(p),
            r_naive_multi: rate_naive_multi(p),
            theorems: theorem_conditions(p),
        }
    }

    /// False only if some theorem's hypothesis holds while R_isi < R_usi.
    pub fn conclusions_consistent(&self) -> bool {
        match &self.r_usi {
            Some(usi) if self.theorems.any_holds() => self.r_isi >= *usi,
            _ => true,
        }
    }
}

/// `Err` with the first repeated pair, if any.
pub fn audit_non_repetition(queries: &[Query]) -> Result<(), Repetition> {
    find_repetition(queries).map_or(Ok(()), Err)
}

/// Replays a fixed prefix of choices and then always picks 0, recording
/// every branching factor it was asked for.
#[derive(Debug, Default)]
struct ScriptedChooser {
    script: Vec<usize>,
    sizes: Vec<usize>,
}

impl Chooser for ScriptedChooser {
    fn pick(&mut self, n: usize) -> usize {
        let pos = self.sizes.len();
        self.sizes.push(n);
        if pos >= self.script.len() {
            self.script.push(0);
        }
        self.script[pos]
    }
}

/// Exact distribution of the server view.
pub type Distribution = BTreeMap<ServerView, BigRational>;

/// Walks every branch of the generator's choice tree for `demands` and
/// weights each leaf by the product of its uniform choice probabilities.
pub fn query_distribution(s: &Scenario, demands: &Demands, limit: u64) -> Result<Distribution, AuditError> {
    let mut dist = Distribution::new();
    let mut script: Vec<usize> = Vec::new();
    let mut leaves = 0u64;
    loop {
        let mut chooser = ScriptedChooser { script, sizes: Vec::new() };
        let plan = generate(s, demands, &mut chooser, Preconditions::Enforce)?;
        let ScriptedChooser { script: mut next, sizes } = chooser;

        if leaves == 0 {
            let estimate = sizes.iter().try_fold(1u64, |acc, &n| acc.checked_mul(n as u64));
            if estimate.is_none_or(|e| e > limit) {
                return Err(AuditError::TooLargeToEnumerate { limit });
            }
        }
        leaves += 1;
        if leaves > limit {
            return Err(AuditError::TooLargeToEnumerate { limit });
        }

        let denom = sizes.iter().fold(BigInt::one(), |acc, &n| acc * BigInt::from(n));
        *dist.entry(plan.server_view().clone()).or_insert_with(BigRational::zero) += BigRational::new(BigInt::one(), denom);

        let Some(p) = (0..sizes.len()).rev().find(|&p| next[p] + 1 < sizes[p]) else {
            return Ok(dist);
        };
        next.truncate(p + 1);
        next[p] += 1;
        script = next;
    }
}

/// Half the L1 distance between two exact distributions.
pub fn tv_distance(a: &Distribution, b: &Distribution) -> BigRational {
    let zero = BigRational::zero();
    let mut total = BigRational::zero();
    for (key, pa) in a {
        total += (pa - b.get(key).unwrap_or(&zero)).abs();
    }
    for (key, pb) in b {
        if !a.contains_key(key) {
            total += pb;
        }
    }
    total / BigRational::from_integer(BigInt::from(2))
}

/// Half the L1 distance between two empirical or approximate distributions.
pub fn tv_distance_f64<K: Ord>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let mut total = 0.0;
    for (key, pa) in a {
        total += (pa - b.get(key).copied().unwrap_or(0.0)).abs();
    }
    for (key, pb) in b {
        if !a.contains_key(key) {
            total += pb;
        }
    }
    total / 2.0
}

pub fn to_f64(d: &Distribution) -> BTreeMap<ServerView, f64> {
    d.iter().map(|(k, v)| (k.clone(), v.to_f64().unwrap_or(f64::NAN))).collect()
}

/// Server views of `runs` plans with seeds `base_seed..base_seed+runs`.
pub fn sample_views(s: &Scenario, demands: &Demands, runs: u64, base_seed: u64) -> Result<Vec<ServerView>, QueryError> {
    (0..runs)
        .into_par_iter()
        .map(|k| {
            let seed = base_seed.wrapping_add(k);
            generate(s, demands, &mut seeded_chooser(seed), Preconditions::Enforce).map(|p| p.server_view().clone())
        })
        .collect()
}

/// Empirical joint distribution of the server view.
pub fn empirical(views: &[ServerView]) -> BTreeMap<ServerView, f64> {
    let mut counts: BTreeMap<ServerView, u64> = BTreeMap::new();
    for v in views {
        *counts.entry(v.clone()).or_default() += 1;
    }
    let n = views.len() as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
}

/// Monte Carlo estimate of the joint server-view distribution.
pub fn sample_distribution(
    s: &Scenario,
    demands: &Demands,
    samples: u64,
    base_seed: u64,
) -> Result<BTreeMap<ServerView, f64>, QueryError> {
    Ok(empirical(&sample_views(s, demands, samples, base_seed)?))
}

/// Empirical law of β_i^(j) for every query position j and class i.
pub type Marginals = BTreeMap<(usize, usize), BTreeMap<usize, f64>>;

pub fn marginals(views: &[ServerView]) -> Marginals {
    let mut counts: BTreeMap<(usize, usize), BTreeMap<usize, u64>> = BTreeMap::new();
    for v in views {
        for q in &v.queries {
            for (i, b) in q.pairs() {
                *counts.entry((q.j, i)).or_default().entry(b).or_default() += 1;
            }
        }
    }
    let n = views.len() as f64;
    counts
        .into_iter()
        .map(|(key, c)| (key, c.into_iter().map(|(b, x)| (b, x as f64 / n)).collect()))
        .collect()
}

/// Largest TV distance between matching marginals. A lower bound on the TV
/// distance between the joint laws, up to sampling error.
pub fn marginal_tv(a: &Marginals, b: &Marginals) -> f64 {
    let empty = BTreeMap::new();
    a.keys()
        .chain(b.keys())
        .map(|key| tv_distance_f64(a.get(key).unwrap_or(&empty), b.get(key).unwrap_or(&empty)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusFailure {
    pub demands: Vec<usize>,
    pub seed: u64,
    pub reason: String,
}

/// Non-repetition over `runs` seeds for every demand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub runs_per_demand: u64,
    pub demand_choices: usize,
    pub plans: u64,
    pub passed: u64,
    pub failures: Vec<CensusFailure>,
}

impl Census {
    /// `None` when nothing was run.
    pub fn pass_rate(&self) -> Option<f64> {
        (self.plans > 0).then(|| self.passed as f64 / self.plans as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TvMethod {
    Exact,
    /// Max over per-(query, class) marginals, `samples` plans per demand.
    MonteCarloMarginal { samples: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvEntry {
    pub a: Demands,
    pub b: Demands,
    pub value: f64,
    pub exact: Option<BigRational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyReport {
    pub mode: Mode,
    pub census: Census,
    pub tv_method: Option<TvMethod>,
    pub tv: Vec<TvEntry>,
}

/// Runs the census and attaches TV distances between every pair of demands.
pub fn privacy_report(s: &Scenario, mode: Mode, runs: u64, base_seed: u64) -> PrivacyReport {
    let demands = Demands::all(s, mode);
    let jobs: Vec<(usize, u64)> = (0..demands.len()).flat_map(|d| (0..runs).map(move |k| (d, k))).collect();
    let results: Vec<Result<ServerView, String>> = jobs
        .par_iter()
        .map(|&(d, k)| {
            let seed = base_seed.wrapping_add(k);
            let plan = generate(s, &demands[d], &mut seeded_chooser(seed), Preconditions::Enforce)
                .map_err(|e| e.to_string())?;
            audit_non_repetition(plan.queries()).map_err(|r| {
                format!("class {} index {} repeated in queries {} and {}", r.class, r.subclass, r.first_query, r.second_query)
            })?;
            Ok(plan.server_view().clone())
        })
        .collect();

    let mut failures = Vec::new();
    let mut per_demand: Vec<Vec<ServerView>> = vec![Vec::new(); demands.len()];
    for (&(d, k), r) in jobs.iter().zip(results) {
        match r {
            Ok(view) => per_demand[d].push(view),
            Err(reason) => failures.push(CensusFailure { demands: demands[d].to_vec(), seed: base_seed.wrapping_add(k), reason }),
        }
    }
    let plans = jobs.len() as u64;
    let census = Census {
        runs_per_demand: runs,
        demand_choices: demands.len(),
        plans,
        passed: plans - failures.len() as u64,
        failures,
    };

    let pairs: Vec<(usize, usize)> =
        (0..demands.len()).flat_map(|a| (a + 1..demands.len()).map(move |b| (a, b))).collect();
    let exact: Result<Vec<Distribution>, AuditError> =
        demands.iter().map(|d| query_distribution(s, d, ENUMERATION_LIMIT)).collect();
    let (tv_method, tv) = match exact {
        Ok(dists) => {
            let tv = pairs
                .iter()
                .map(|&(a, b)| {
                    let x = tv_distance(&dists[a], &dists[b]);
                    TvEntry { a: demands[a].clone(), b: demands[b].clone(), value: x.to_f64().unwrap_or(f64::NAN), exact: Some(x) }
                })
                .collect();
            (Some(TvMethod::Exact), tv)
        }
        Err(_) if runs > 0 && census.failures.is_empty() => {
            let m: Vec<Marginals> = per_demand.iter().map(|v| marginals(v)).collect();
            let tv = pairs
                .iter()
                .map(|&(a, b)| TvEntry {
                    a: demands[a].clone(),
                    b: demands[b].clone(),
                    value: marginal_tv(&m[a], &m[b]),
                    exact: None,
                })
                .collect();
            (Some(TvMethod::MonteCarloMarginal { samples: runs }), tv)
        }
        Err(_) => (None, vec![]),
    };

    PrivacyReport { mode, census, tv_method, tv }
}
