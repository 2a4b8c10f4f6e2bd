//! Query plan generation for the single-user and collaborative multi-user
//! schemes, and a structural validator that accepts any plan the generators
//! could have produced.
//!
//! A plan is `k_un + 1` queries, each naming one subclass index per class.
//! Queries are numbered `j = 1..=k_un+1` in both schemes. Every "pick an
//! element of this set" step is a uniform draw through a [`Chooser`], in a
//! fixed order, so a plan is a pure function of scenario, demands and the
//! chooser's answers.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{Mode, Scenario, UserView};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("scenario violates the scheme's preconditions: {0}")]
    AssumptionViolated(String),
    #[error("query {query}: no admissible subclass index left for class {class}")]
    ExhaustedIndices { query: usize, class: usize },
    #[error("eta - 1 = {} is not a multiple of U = {users}; the known-pair partition cannot be formed", eta - 1)]
    PartitionInfeasible { eta: usize, users: usize },
    #[error("demand {demand} is not a class in 1..={classes}")]
    BadDemand { demand: usize, classes: usize },
    #[error("expected {expected} demands (one per user), got {got}")]
    DemandCount { expected: usize, got: usize },
}

/// Source of uniform choices. `pick(n)` returns an index in `0..n`, `n >= 1`.
pub trait Chooser {
    fn pick(&mut self, n: usize) -> usize;
}

/// Uniform choices from a random number generator.
#[derive(Debug, Clone)]
pub struct RngChooser<R>(pub R);

impl<R: Rng> Chooser for RngChooser<R> {
    fn pick(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }
}

/// The reproducible chooser used everywhere a seed is given.
pub fn seeded_chooser(seed: u64) -> RngChooser<ChaCha8Rng> {
    RngChooser(ChaCha8Rng::seed_from_u64(seed))
}

/// Whether generation first checks the scheme's preconditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditions {
    #[default]
    Enforce,
    /// Generate anyway; may fail with `ExhaustedIndices` or produce plans
    /// without recovery guarantees.
    Skip,
}

/// Desired classes: one for the single-user scheme, one per user otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Demands {
    Single(usize),
    Multi(Vec<usize>),
}

impl Demands {
    pub fn mode(&self) -> Mode {
        match self {
            Demands::Single(_) => Mode::Single,
            Demands::Multi(_) => Mode::Multi,
        }
    }

    /// Desired class of user `u` (1-based).
    pub fn of_user(&self, user: usize) -> usize {
        match self {
            Demands::Single(v) => *v,
            Demands::Multi(vs) => vs[user - 1],
        }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            Demands::Single(v) => vec![*v],
            Demands::Multi(vs) => vs.clone(),
        }
    }

    /// Every possible demand for `s` under `mode`: `1..=Γ`, or all U-tuples.
    pub fn all(s: &Scenario, mode: Mode) -> Vec<Demands> {
        let gamma = s.gamma();
        match mode {
            Mode::Single => (1..=gamma).map(Demands::Single).collect(),
            Mode::Multi => {
                let mut out = vec![vec![]];
                for _ in 0..s.user_count() {
                    out = out
                        .into_iter()
                        .flat_map(|prefix: Vec<usize>| {
                            (1..=gamma).map(move |v| {
                                let mut p = prefix.clone();
                                p.push(v);
                                p
                            })
                        })
                        .collect();
                }
                out.into_iter().map(Demands::Multi).collect()
            }
        }
    }
}

impl std::fmt::Display for Demands {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.to_vec().iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `Q^(j)`: one subclass index per class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Query {
    pub j: usize,
    /// `subclass[i-1]` is β_i^(j).
    pub subclass: Vec<usize>,
}

impl Query {
    /// `(class, subclass)` pairs in ascending class order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.subclass.iter().enumerate().map(|(i, &b)| (i + 1, b))
    }

    pub fn beta(&self, class: usize) -> usize {
        self.subclass[class - 1]
    }
}

/// Everything the server receives: the queries and the code parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ServerView {
    pub disclosed: usize,
    pub queries: Vec<Query>,
}

/// Choices made for one query of the multi-user scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundChoice {
    pub j: usize,
    /// φ(j).
    pub user: usize,
    /// The class that contributed an index unknown to `user`.
    pub target: usize,
    /// `blocks[w-1]` = Z_w, the classes whose index user `w` knows.
    pub blocks: Vec<Vec<usize>>,
}

/// Client-side state that never leaves the users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanSecrets {
    pub demands: Demands,
    /// The designated query r (single user, identifiable demand).
    pub designated: Option<usize>,
    pub rounds: Vec<RoundChoice>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPlan {
    view: ServerView,
    secrets: PlanSecrets,
}

impl QueryPlan {
    pub fn queries(&self) -> &[Query] {
        &self.view.queries
    }

    pub fn disclosed(&self) -> usize {
        self.view.disclosed
    }

    pub fn server_view(&self) -> &ServerView {
        &self.view
    }

    pub fn secrets(&self) -> &PlanSecrets {
        &self.secrets
    }

    pub fn mode(&self) -> Mode {
        self.secrets.demands.mode()
    }
}

/// φ(j) for U users: `j mod U`, or `U` when that is zero.
pub fn phi(j: usize, users: usize) -> usize {
    match j % users {
        0 => users,
        r => r,
    }
}

struct Builder<'a> {
    scenario: &'a Scenario,
    used: Vec<BTreeSet<usize>>,
    rows: Vec<Vec<usize>>,
}

impl<'a> Builder<'a> {
    fn new(scenario: &'a Scenario) -> Self {
        let gamma = scenario.gamma();
        Self {
            scenario,
            used: vec![BTreeSet::new(); gamma],
            rows: vec![vec![0; gamma]; scenario.query_count()],
        }
    }

    /// Unused indices of `class`, optionally restricted to or away from `known`.
    fn candidates(&self, class: usize, known: Option<&BTreeSet<usize>>, inside: bool) -> Vec<usize> {
        let used = &self.used[class - 1];
        (1..=self.scenario.mu(class))
            .filter(|b| !used.contains(b))
            .filter(|b| known.map_or(true, |k| k.contains(b) == inside))
            .collect()
    }

    fn assign(&mut self, chooser: &mut dyn Chooser, j: usize, class: usize, cands: Vec<usize>) -> Result<(), QueryError> {
        if cands.is_empty() {
            return Err(QueryError::ExhaustedIndices { query: j, class });
        }
        let beta = cands[chooser.pick(cands.len())];
        self.used[class - 1].insert(beta);
        self.rows[j - 1][class - 1] = beta;
        Ok(())
    }

    fn finish(self, disclosed: usize, secrets: PlanSecrets) -> QueryPlan {
        let queries = self.rows.into_iter().enumerate().map(|(j, subclass)| Query { j: j + 1, subclass }).collect();
        QueryPlan { view: ServerView { disclosed, queries }, secrets }
    }
}

fn known<'a>(view: &UserView<'a>, class: usize) -> &'a BTreeSet<usize> {
    view.known_indices(class).expect("identifiable class")
}

fn enforce(s: &Scenario, mode: Mode, pre: Preconditions) -> Result<(), QueryError> {
    if pre == Preconditions::Enforce {
        let report = s.validate(mode);
        if !report.passed() {
            return Err(QueryError::AssumptionViolated(report.summary()));
        }
    }
    Ok(())
}

/// Single-user plan for desired class `v`.
///
/// Identifiable `v`: the designated query `r` (uniform in `1..=k_un+1`) is
/// built first and carries an index of class `v` outside the side
/// information plus side-information indices of every other identifiable
/// class; the remaining queries take fresh indices everywhere.
///
/// Unidentifiable `v`: in query `j` class `t = ((j-1) mod η) + 1` takes an
/// index outside the side information, the other identifiable classes take
/// side-information indices and unidentifiable classes take fresh ones.
///
/// No subclass index is ever reused within a class.
pub fn gen_single_user(
    s: &Scenario,
    v: usize,
    chooser: &mut dyn Chooser,
    pre: Preconditions,
) -> Result<QueryPlan, QueryError> {
    let gamma = s.gamma();
    if v < 1 || v > gamma {
        return Err(QueryError::BadDemand { demand: v, classes: gamma });
    }
    if s.user_count() != 1 && pre == Preconditions::Skip {
        return Err(QueryError::DemandCount { expected: s.user_count(), got: 1 });
    }
    enforce(s, Mode::Single, pre)?;

    let view = s.view(1);
    let eta = s.eta();
    let nq = s.query_count();
    let mut b = Builder::new(s);
    let mut designated = None;

    if view.is_identifiable(v) {
        let r = chooser.pick(nq) + 1;
        designated = Some(r);
        for i in 1..=gamma {
            let cands = if i == v {
                b.candidates(i, Some(known(&view, i)), false)
            } else if view.is_identifiable(i) {
                b.candidates(i, Some(known(&view, i)), true)
            } else {
                b.candidates(i, None, true)
            };
            b.assign(chooser, r, i, cands)?;
        }
        for j in (1..=nq).filter(|&j| j != r) {
            for i in 1..=gamma {
                let cands = b.candidates(i, None, true);
                b.assign(chooser, j, i, cands)?;
            }
        }
    } else {
        for j in 1..=nq {
            let t = (j - 1) % eta + 1;
            for i in 1..=gamma {
                let cands = if !view.is_identifiable(i) {
                    b.candidates(i, None, true)
                } else {
                    b.candidates(i, Some(known(&view, i)), i != t)
                };
                b.assign(chooser, j, i, cands)?;
            }
        }
    }

    Ok(b.finish(eta - 1, PlanSecrets { demands: Demands::Single(v), designated, rounds: vec![] }))
}

/// Collaborative plan for U users with desired classes `demands[u-1]`.
///
/// Query `j` is attributed to user `u = φ(j)`. Its target class is `v_j`
/// when `j <= U` and `v_j` is identifiable, otherwise an identifiable class
/// drawn uniformly among those with the most indices still unknown to `u`.
/// The target contributes an index unknown to `u`; a uniformly drawn
/// ordered subset `Z` of the other identifiable classes, cut into U blocks of
/// η' = ceil((η-1)/U), contributes indices known to the block's user; every
/// other class contributes a fresh index.
pub fn gen_multi_user(
    s: &Scenario,
    demands: &[usize],
    chooser: &mut dyn Chooser,
    pre: Preconditions,
) -> Result<QueryPlan, QueryError> {
    let gamma = s.gamma();
    let users = s.user_count();
    let eta = s.eta();
    if demands.len() != users {
        return Err(QueryError::DemandCount { expected: users, got: demands.len() });
    }
    if let Some(&bad) = demands.iter().find(|&&v| v < 1 || v > gamma) {
        return Err(QueryError::BadDemand { demand: bad, classes: gamma });
    }
    if (eta - 1) % users != 0 {
        return Err(QueryError::PartitionInfeasible { eta, users });
    }
    enforce(s, Mode::Multi, pre)?;

    let eta_p = s.eta_prime();
    let nq = s.query_count();
    let views: Vec<UserView<'_>> = (1..=users).map(|u| s.view(u)).collect();
    let mut b = Builder::new(s);
    let mut rounds = Vec::with_capacity(nq);

    for j in 1..=nq {
        let u = phi(j, users);
        let view = &views[u - 1];
        let target = match demands.get(j - 1) {
            Some(&vj) if j <= users && vj <= eta => vj,
            _ => {
                let pools: Vec<usize> =
                    (1..=eta).map(|c| b.candidates(c, Some(known(view, c)), false).len()).collect();
                let best = pools.iter().copied().max().unwrap_or(0);
                let tied: Vec<usize> = (1..=eta).filter(|&c| pools[c - 1] == best).collect();
                tied[chooser.pick(tied.len())]
            }
        };
        let cands = b.candidates(target, Some(known(view, target)), false);
        b.assign(chooser, j, target, cands)?;

        let mut pool: Vec<usize> = (1..=eta).filter(|&c| c != target).collect();
        let mut z = Vec::with_capacity(eta_p * users);
        for _ in 0..eta_p * users {
            z.push(pool.remove(chooser.pick(pool.len())));
        }
        let blocks: Vec<Vec<usize>> = if eta_p == 0 {
            vec![vec![]; users]
        } else {
            z.chunks(eta_p).map(<[usize]>::to_vec).collect()
        };
        let mut owner = vec![None; gamma];
        for (w, block) in blocks.iter().enumerate() {
            for &t in block {
                owner[t - 1] = Some(w + 1);
            }
        }

        for i in (1..=gamma).filter(|&i| i != target) {
            let cands = match owner[i - 1] {
                Some(w) => b.candidates(i, Some(known(&views[w - 1], i)), true),
                None => b.candidates(i, None, true),
            };
            b.assign(chooser, j, i, cands)?;
        }
        rounds.push(RoundChoice { j, user: u, target, blocks });
    }

    let secrets = PlanSecrets { demands: Demands::Multi(demands.to_vec()), designated: None, rounds };
    Ok(b.finish(eta_p, secrets))
}

/// Generates a plan for `demands` with the matching scheme.
pub fn generate(
    s: &Scenario,
    demands: &Demands,
    chooser: &mut dyn Chooser,
    pre: Preconditions,
) -> Result<QueryPlan, QueryError> {
    match demands {
        Demands::Single(v) => gen_single_user(s, *v, chooser, pre),
        Demands::Multi(vs) => gen_multi_user(s, vs, chooser, pre),
    }
}

/// A subclass index used twice within one class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Repetition {
    pub class: usize,
    pub subclass: usize,
    pub first_query: usize,
    pub second_query: usize,
}

/// First repeated `(class, subclass)` pair across the queries, if any.
pub fn find_repetition(queries: &[Query]) -> Option<Repetition> {
    let classes = queries.first().map_or(0, |q| q.subclass.len());
    for class in 1..=classes {
        for (a, qa) in queries.iter().enumerate() {
            for qb in &queries[a + 1..] {
                if qa.beta(class) == qb.beta(class) {
                    return Some(Repetition {
                        class,
                        subclass: qa.beta(class),
                        first_query: qa.j,
                        second_query: qb.j,
                    });
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleResult {
    pub rule: &'static str,
    pub passed: bool,
    pub detail: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanValidity {
    pub rules: Vec<RuleResult>,
}

impl PlanValidity {
    pub fn is_valid(&self) -> bool {
        self.rules.iter().all(|r| r.passed)
    }

    pub fn rule(&self, name: &str) -> Option<&RuleResult> {
        self.rules.iter().find(|r| r.rule == name)
    }
}

fn rule(name: &'static str, detail: Vec<String>) -> RuleResult {
    RuleResult { rule: name, passed: detail.is_empty(), detail }
}

/// Checks `view` against every structural rule of the scheme matching
/// `demands`: plan length, disclosed parameter, index ranges, no repeated
/// pair within a class, and the per-query known/unknown selection rules.
/// Choices the generator makes privately (r, the target class, Z) are
/// searched for rather than required.
pub fn validate_plan(s: &Scenario, demands: &Demands, view: &ServerView) -> PlanValidity {
    let gamma = s.gamma();
    let eta = s.eta();
    let mode = demands.mode();
    let queries = &view.queries;
    let mut rules = Vec::new();

    rules.push(rule(
        "plan-length",
        if queries.len() == s.query_count() {
            vec![]
        } else {
            vec![format!("{} queries, expected {}", queries.len(), s.query_count())]
        },
    ));
    let expected = s.disclosed_parameter(mode);
    rules.push(rule(
        "disclosed-parameter",
        if view.disclosed == expected { vec![] } else { vec![format!("got {}, expected {expected}", view.disclosed)] },
    ));
    let mut ranges = Vec::new();
    for q in queries {
        if q.subclass.len() != gamma {
            ranges.push(format!("query {} has {} pairs", q.j, q.subclass.len()));
            continue;
        }
        for (i, b) in q.pairs() {
            if b < 1 || b > s.mu(i) {
                ranges.push(format!("query {}: ({i}, {b}) out of range", q.j));
            }
        }
    }
    let shape_ok = ranges.is_empty();
    rules.push(rule("pair-ranges", ranges));
    rules.push(rule(
        "non-repetition",
        find_repetition(queries)
            .map(|r| {
                vec![format!(
                    "class {} index {} in queries {} and {}",
                    r.class, r.subclass, r.first_query, r.second_query
                )]
            })
            .unwrap_or_default(),
    ));
    if !shape_ok {
        return PlanValidity { rules };
    }

    match demands {
        Demands::Single(v) => {
            let si = s.side_information(1);
            let v = *v;
            if v <= eta {
                let ok = queries.iter().any(|q| {
                    !si.holds(v, q.beta(v)) && (1..=eta).filter(|&i| i != v).all(|i| si.holds(i, q.beta(i)))
                });
                rules.push(rule(
                    "designated-query",
                    if ok { vec![] } else { vec![format!("no query pairs a new class-{v} index with known indices")] },
                ));
            } else {
                let mut detail = Vec::new();
                for (pos, q) in queries.iter().enumerate() {
                    let t = pos % eta + 1;
                    if si.holds(t, q.beta(t)) {
                        detail.push(format!("query {}: class {t} index is in the side information", q.j));
                    }
                    for i in (1..=eta).filter(|&i| i != t) {
                        if !si.holds(i, q.beta(i)) {
                            detail.push(format!("query {}: class {i} index is not in the side information", q.j));
                        }
                    }
                }
                rules.push(rule("unidentifiable-rotation", detail));
            }
        }
        Demands::Multi(vs) => {
            let users = s.user_count();
            let eta_p = s.eta_prime();
            let mut target_detail = Vec::new();
            let mut partition_detail = Vec::new();
            if vs.len() != users {
                target_detail.push(format!("{} demands for {users} users", vs.len()));
            } else {
                for (pos, q) in queries.iter().enumerate() {
                    let j = pos + 1;
                    let u = phi(j, users);
                    let targets: Vec<usize> = match vs.get(j - 1) {
                        Some(&vj) if j <= users && vj <= eta => vec![vj],
                        _ => (1..=eta).collect(),
                    };
                    let admissible: Vec<usize> = targets
                        .into_iter()
                        .filter(|&t| !s.side_information(u).holds(t, q.beta(t)))
                        .collect();
                    if admissible.is_empty() {
                        target_detail.push(format!("query {j}: no admissible class unknown to user {u}"));
                    } else if !admissible.iter().any(|&t| partition_exists(s, q, t, eta_p)) {
                        partition_detail.push(format!("query {j}: known pairs cannot be split into {users} blocks of {eta_p}"));
                    }
                }
            }
            rules.push(rule("target-selection", target_detail));
            rules.push(rule("known-partition", partition_detail));
        }
    }
    PlanValidity { rules }
}

/// Is there a choice of disjoint blocks Z_1..Z_U of size `eta_p` inside
/// `[η] \ {target}` with every index in Z_w known to user w?
fn partition_exists(s: &Scenario, q: &Query, target: usize, eta_p: usize) -> bool {
    let classes: Vec<usize> = (1..=s.eta()).filter(|&c| c != target).collect();
    let mut taken = vec![false; classes.len()];
    fn fill(s: &Scenario, q: &Query, classes: &[usize], taken: &mut [bool], user: usize, need: usize, eta_p: usize, from: usize) -> bool {
        if user > s.user_count() {
            return true;
        }
        if need == 0 {
            return fill(s, q, classes, taken, user + 1, eta_p, eta_p, 0);
        }
        for idx in from..classes.len() {
            let c = classes[idx];
            if !taken[idx] && s.side_information(user).holds(c, q.beta(c)) {
                taken[idx] = true;
                if fill(s, q, classes, taken, user, need - 1, eta_p, idx + 1) {
                    return true;
                }
                taken[idx] = false;
            }
        }
        false
    }
    fill(s, q, &classes, &mut taken, 1, eta_p, eta_p, 0)
}
