use serde::Serialize;

use super::{Mode, Scenario};

/// One precondition and whether it holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub statement: String,
    pub passed: bool,
    /// Human-readable witnesses for each violation.
    pub offenders: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub mode: Mode,
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Names of the failing checks, comma separated.
    pub fn summary(&self) -> String {
        self.failures().map(|c| c.name).collect::<Vec<_>>().join(", ")
    }
}

fn check(name: &'static str, statement: String, offenders: Vec<String>) -> AssumptionCheck {
    AssumptionCheck { name, statement, passed: offenders.is_empty(), offenders }
}

/// Number of queries among `queries` in which identifiable class `i` is the
/// rotating unknown class when the demand is unidentifiable.
pub fn rotation_hits(i: usize, eta: usize, queries: usize) -> usize {
    if i > queries {
        0
    } else {
        (queries - i) / eta + 1
    }
}

// Every class contributes k_un+1 distinct subclass indices to a plan.
fn capacity(s: &Scenario, gamma: usize, k_un: usize) -> AssumptionCheck {
    let offenders = (1..=gamma)
        .filter(|&i| s.mu(i) < k_un + 1)
        .map(|i| format!("class {i}: mu={} < {}", s.mu(i), k_un + 1))
        .collect();
    check("class-capacity", format!("mu_i >= k_un+1 = {}", k_un + 1), offenders)
}

pub(super) fn validate(s: &Scenario, mode: Mode) -> ValidationReport {
    let gamma = s.gamma();
    let eta = s.eta();
    let k_un = s.k_un();
    let users = 1..=s.user_count();
    let mut checks = Vec::new();

    if mode == Mode::Single {
        checks.push(check(
            "single-user",
            "the single-user scheme serves exactly one user".into(),
            if s.user_count() == 1 { vec![] } else { vec![format!("{} users", s.user_count())] },
        ));
    }

    let mut offenders = Vec::new();
    match mode {
        Mode::Single => {
            let queries = k_un + 1;
            for i in 1..=eta {
                let k = s.k(1, i);
                let need = k_un.max(queries - rotation_hits(i, eta, queries)).max(usize::from(eta > 1));
                if k < need {
                    offenders.push(format!("class {i}: k={k} < {need}"));
                }
            }
        }
        Mode::Multi => {
            for u in users.clone() {
                for i in 1..=eta {
                    if s.k(u, i) <= k_un {
                        offenders.push(format!("user {u} class {i}: k={} <= k_un={k_un}", s.k(u, i)));
                    }
                }
            }
        }
    }
    let statement = match mode {
        Mode::Single => "k_i >= k_un and k_i covers every query where class i must be known",
        Mode::Multi => "k_i^u > k_un for every identifiable class and user",
    };
    checks.push(check("identifiable-exceeds-k_un", statement.into(), offenders));

    match mode {
        Mode::Single => {
            let margin = (k_un + 1).div_ceil(eta);
            let offenders = (1..=gamma)
                .filter(|&i| s.mu(i) - s.k(1, i) < margin)
                .map(|i| format!("class {i}: mu-k={} < {margin}", s.mu(i) - s.k(1, i)))
                .collect();
            checks.push(check("unknown-margin", format!("mu_i - k_i >= ceil((k_un+1)/eta) = {margin}"), offenders));

            checks.push(capacity(s, gamma, k_un));
        }
        Mode::Multi => {
            checks.push(check(
                "enough-queries",
                "k_un + 1 >= U".into(),
                if k_un + 1 >= s.user_count() {
                    vec![]
                } else {
                    vec![format!("k_un+1={} < U={}", k_un + 1, s.user_count())]
                },
            ));
            // A fixed target is drawn in query j = u, after u - 1 draws.
            let mut offenders = Vec::new();
            for u in users.clone() {
                for i in 1..=eta {
                    if s.mu(i) - s.k(u, i) < u {
                        offenders.push(format!("user {u} class {i}: mu-k={} < {u}", s.mu(i) - s.k(u, i)));
                    }
                }
            }
            checks.push(check("target-capacity", "mu_i - k_i^u >= u for identifiable i".into(), offenders));

            // Other targets go to the identifiable class with the largest pool.
            let offenders = users
                .clone()
                .filter_map(|u| {
                    let best = (1..=eta).map(|i| s.mu(i) - s.k(u, i)).max().unwrap_or(0);
                    (best < k_un + 1).then(|| format!("user {u}: largest mu-k={best} < {}", k_un + 1))
                })
                .collect();
            checks.push(check(
                "target-pool",
                format!("some identifiable class has mu_i - k_i^u >= k_un+1 = {} for every user", k_un + 1),
                offenders,
            ));
            checks.push(capacity(s, gamma, k_un));
        }
    }

    let (n, k) = s.code_shape(mode);
    let q = s.field().order();
    checks.push(check(
        "field-supports-code",
        format!("q >= n = {n}"),
        if q >= n as u64 { vec![] } else { vec![format!("q={q} < {n}")] },
    ));
    if let Some(g) = s.explicit_generator() {
        checks.push(check(
            "generator-shape",
            format!("explicit generator is [{n}, {k}]"),
            if (g.n(), g.k()) == (n, k) { vec![] } else { vec![format!("got [{}, {}]", g.n(), g.k())] },
        ));
    }

    ValidationReport { mode, checks }
}
