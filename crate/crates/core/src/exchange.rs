//! Server answers, client decoding, and end-to-end sessions.
//!
//! The server sees a [`ServerView`] and nothing else. For query `j` it stacks
//! the selected messages into a `Γ x L` matrix, encodes every column with
//! the `[2Γ - d, Γ]` code for the disclosed parameter `d`, and returns the
//! `Γ - d` parity rows. A client that knows the contents of at least `d`
//! selected messages erasure-decodes all Γ of them.

use num::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::field::FieldElement;
use crate::mds::{CodeError, Generator};
use crate::query::{generate, seeded_chooser, Demands, Preconditions, Query, QueryError, QueryPlan, ServerView};
use crate::scenario::{ClassMap, MessageStore, Scenario, ScenarioError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExchangeError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("query {j}: {what}")]
    DimensionMismatch { j: usize, what: String },
    #[error("query {j}: user {user} knows {known} selected messages, needs {needed}")]
    InsufficientKnowns { j: usize, user: usize, known: usize, needed: usize },
    #[error("user {user} did not recover a new message of class {demand}")]
    RecoveryFailed { user: usize, demand: usize },
}

/// Parities for one query; `parities[p][l]` is parity `p` of symbol `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub j: usize,
    pub parities: Vec<Vec<FieldElement>>,
}

impl Answer {
    pub fn values(&self) -> Vec<Vec<u64>> {
        self.parities.iter().map(|row| row.iter().map(FieldElement::value).collect()).collect()
    }

    /// Downloaded symbols.
    pub fn size(&self) -> usize {
        self.parities.iter().map(Vec::len).sum()
    }
}

/// What the server does with one query. Takes no client state.
pub fn server_answer(
    store: &MessageStore,
    classes: &ClassMap,
    query: &Query,
    disclosed: usize,
    generator: &Generator,
) -> Result<Answer, ExchangeError> {
    let gamma = classes.class_count();
    let j = query.j;
    if query.subclass.len() != gamma {
        return Err(ExchangeError::DimensionMismatch { j, what: format!("{} pairs for {gamma} classes", query.subclass.len()) });
    }
    if generator.k() != gamma || generator.n() + disclosed != 2 * gamma {
        return Err(ExchangeError::DimensionMismatch {
            j,
            what: format!("[{}, {}] code for {gamma} classes and disclosed {disclosed}", generator.n(), generator.k()),
        });
    }
    let selected = query
        .pairs()
        .map(|(i, b)| {
            let f = classes.pair_to_global(i, b)?;
            store.message(f).ok_or_else(|| ScenarioError::OutOfRange(format!("message {f}")))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let symbols = store.symbols_per_message();
    let mut parities = vec![Vec::with_capacity(symbols); gamma - disclosed];
    for l in 0..symbols {
        let column: Vec<FieldElement> = selected.iter().map(|m| m[l]).collect();
        let word = generator.encode(&column)?;
        for (row, &p) in parities.iter_mut().zip(word.parity(gamma)) {
            row.push(p);
        }
    }
    Ok(Answer { j, parities })
}

/// Answers every query of a server view.
pub fn answer_all(s: &Scenario, view: &ServerView, generator: &Generator) -> Result<Vec<Answer>, ExchangeError> {
    view.queries.iter().map(|q| server_answer(s.store(), s.classes(), q, view.disclosed, generator)).collect()
}

/// Contents of the identifiable side-information messages of one user,
/// addressed by `(class, subclass)`.
#[derive(Debug, Clone)]
pub struct ClientKnowledge<'a> {
    user: usize,
    scenario: &'a Scenario,
}

impl<'a> ClientKnowledge<'a> {
    pub fn of(scenario: &'a Scenario, user: usize) -> Self {
        Self { user, scenario }
    }

    pub fn user(&self) -> usize {
        self.user
    }

    /// Contents of `(class, subclass)` if the user holds it with its label.
    pub fn lookup(&self, class: usize, subclass: usize) -> Option<&'a [FieldElement]> {
        let view = self.scenario.view(self.user);
        if !view.known_indices(class)?.contains(&subclass) {
            return None;
        }
        let f = self.scenario.classes().pair_to_global(class, subclass).ok()?;
        self.scenario.store().message(f)
    }
}

/// Recovers all Γ selected messages of `query` from the answer and the
/// user's labelled side information. `result[i-1]` is the message of class i.
pub fn client_decode(
    knowledge: &ClientKnowledge<'_>,
    query: &Query,
    answer: &Answer,
    generator: &Generator,
) -> Result<Vec<Vec<FieldElement>>, ExchangeError> {
    let gamma = generator.k();
    let parity_count = generator.n() - gamma;
    let needed = gamma - parity_count;
    let j = query.j;
    if answer.parities.len() != parity_count {
        return Err(ExchangeError::DimensionMismatch {
            j,
            what: format!("{} parity rows, expected {parity_count}", answer.parities.len()),
        });
    }
    let known: Vec<(usize, &[FieldElement])> = query
        .pairs()
        .filter_map(|(i, b)| knowledge.lookup(i, b).map(|m| (i - 1, m)))
        .take(needed)
        .collect();
    if known.len() < needed {
        return Err(ExchangeError::InsufficientKnowns { j, user: knowledge.user(), known: known.len(), needed });
    }

    let mut positions: Vec<usize> = known.iter().map(|&(p, _)| p).collect();
    positions.extend(gamma..generator.n());
    let decoder = generator.erasure_decoder(&positions)?;
    let symbols = answer.parities.first().map_or(0, Vec::len);
    let mut out = vec![Vec::with_capacity(symbols); gamma];
    for l in 0..symbols {
        let mut values: Vec<FieldElement> = known.iter().map(|(_, m)| m[l]).collect();
        values.extend(answer.parities.iter().map(|row| row[l]));
        for (msg, x) in out.iter_mut().zip(decoder.decode(&values)?) {
            msg.push(x);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodedMessage {
    pub class: usize,
    pub subclass: usize,
    pub message: usize,
    pub symbols: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedQuery {
    pub j: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserOutcome {
    pub user: usize,
    pub demand: usize,
    /// Queries the user could decode, with every message it learned.
    pub decoded: Vec<(usize, Vec<DecodedMessage>)>,
    pub skipped: Vec<SkippedQuery>,
    /// A decoded message of the desired class outside the user's side
    /// information.
    pub retrieved: Option<DecodedMessage>,
}

#[derive(Debug, Clone)]
pub struct SessionTrace {
    pub plan: QueryPlan,
    pub answers: Vec<Answer>,
    pub outcomes: Vec<UserOutcome>,
    /// Total downloaded symbols.
    pub download: usize,
    /// Message length over download.
    pub rate: BigRational,
}

impl SessionTrace {
    pub fn projection(&self) -> &ServerView {
        self.plan.server_view()
    }

    pub fn all_recovered(&self) -> bool {
        self.outcomes.iter().all(|o| o.retrieved.is_some())
    }
}

/// Runs plan generation, answering and decoding for one demand vector.
pub fn run_session(
    s: &Scenario,
    demands: &Demands,
    seed: u64,
    pre: Preconditions,
) -> Result<SessionTrace, ExchangeError> {
    let mode = demands.mode();
    let plan = generate(s, demands, &mut seeded_chooser(seed), pre)?;
    let generator = s.generator(mode)?;
    let answers = answer_all(s, plan.server_view(), &generator)?;

    let users = match demands {
        Demands::Single(_) => 1,
        Demands::Multi(vs) => vs.len(),
    };
    let mut outcomes = Vec::with_capacity(users);
    for user in 1..=users {
        let demand = demands.of_user(user);
        let knowledge = ClientKnowledge::of(s, user);
        let mut outcome = UserOutcome { user, demand, decoded: vec![], skipped: vec![], retrieved: None };
        for (q, a) in plan.queries().iter().zip(&answers) {
            match client_decode(&knowledge, q, a, &generator) {
                Ok(contents) => {
                    let msgs: Vec<DecodedMessage> = q
                        .pairs()
                        .zip(contents)
                        .map(|((class, subclass), c)| {
                            Ok(DecodedMessage {
                                class,
                                subclass,
                                message: s.classes().pair_to_global(class, subclass)?,
                                symbols: c.iter().map(FieldElement::value).collect(),
                            })
                        })
                        .collect::<Result<_, ScenarioError>>()?;
                    if outcome.retrieved.is_none() {
                        outcome.retrieved = msgs
                            .iter()
                            .find(|m| m.class == demand && !s.side_information(user).holds(demand, m.subclass))
                            .cloned();
                    }
                    outcome.decoded.push((q.j, msgs));
                }
                Err(ExchangeError::InsufficientKnowns { j, known, needed, .. }) => {
                    outcome.skipped.push(SkippedQuery { j, reason: format!("knows {known} of {needed} needed") });
                }
                Err(e) => return Err(e),
            }
        }
        if outcome.retrieved.is_none() {
            return Err(ExchangeError::RecoveryFailed { user, demand });
        }
        outcomes.push(outcome);
    }

    let download: usize = answers.iter().map(Answer::size).sum();
    let rate = BigRational::new(s.store().symbols_per_message().into(), download.into());
    Ok(SessionTrace { plan, answers, outcomes, download, rate })
}
