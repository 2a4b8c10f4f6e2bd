//! The database and user model.
//!
//! Messages are addressed globally by `1..=F` and locally by class-subclass
//! pairs `(i, beta)` with `i in 1..=Γ` and `beta in 1..=μ_i`. All indices in
//! this module are 1-based, matching scenario files and traces.
//!
//! Identifiable classes always occupy internal positions `1..=η`. When the
//! input names a different set of identifiable classes the loader moves them
//! to the front and keeps the permutation in [`Scenario::class_order`].

mod synth;
mod validate;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::field::{FieldElement, FieldError, PrimeField};
use crate::mds::{CodeError, Generator};

pub use synth::{synthesize, SynthConfig};
pub use validate::{rotation_hits, AssumptionCheck, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("a scenario needs at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("a scenario needs at least two messages, got {0}")]
    TooFewMessages(usize),
    #[error("class {0} is empty")]
    EmptyClass(usize),
    #[error("messages need at least one symbol")]
    NoSymbols,
    #[error("identifiable class count {eta} must lie in 1..={classes}")]
    BadEta { eta: usize, classes: usize },
    #[error("identifiable class list is invalid: {0}")]
    BadIdentifiableList(String),
    #[error("message ids must be given for all messages or for none")]
    MixedMessageIds,
    #[error("message ids must be exactly 1..={count}; problem with id {id}")]
    BadMessageId { id: usize, count: usize },
    #[error("message {message} has {got} symbols, expected {expected}")]
    SymbolCount { message: usize, expected: usize, got: usize },
    #[error("a scenario needs at least one user")]
    NoUsers,
    #[error("user {user} lists side information for {got} classes, expected {expected}")]
    SideInfoShape { user: usize, expected: usize, got: usize },
    #[error("user {user}: subclass index {index} is out of range for class {class}")]
    SideInfoIndex { user: usize, class: usize, index: usize },
    #[error("user {user}: subclass index {index} of class {class} is listed twice")]
    DuplicateSideInfo { user: usize, class: usize, index: usize },
    #[error("explicit generator: {0}")]
    Generator(#[from] CodeError),
    #[error("explicit generator is {got_n}x{got_k}-shaped but the {mode} scheme needs [{n}, {k}]")]
    GeneratorShape { mode: Mode, n: usize, k: usize, got_n: usize, got_k: usize },
    #[error("index out of range: {0}")]
    OutOfRange(String),
}

/// Which scheme a scenario is run under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Multi,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::Multi => "multi",
        })
    }
}

/// `F` messages of `L` symbols each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageStore {
    field: PrimeField,
    symbols_per_message: usize,
    messages: Vec<Vec<FieldElement>>,
}

impl MessageStore {
    pub fn new(field: PrimeField, messages: Vec<Vec<FieldElement>>) -> Result<Self, ScenarioError> {
        if messages.len() < 2 {
            return Err(ScenarioError::TooFewMessages(messages.len()));
        }
        let l = messages[0].len();
        if l == 0 {
            return Err(ScenarioError::NoSymbols);
        }
        for (f, m) in messages.iter().enumerate() {
            if m.len() != l {
                return Err(ScenarioError::SymbolCount { message: f + 1, expected: l, got: m.len() });
            }
            if let Some(bad) = m.iter().find(|x| x.field() != field) {
                return Err(FieldError::FieldMismatch { left: field.order(), right: bad.field().order() }.into());
            }
        }
        Ok(Self { field, symbols_per_message: l, messages })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn message_count(&self) -> usize {
        self.messages.len()
    }

    pub fn symbols_per_message(&self) -> usize {
        self.symbols_per_message
    }

    /// Message `W^(f)`, `f` 1-based.
    pub fn message(&self, f: usize) -> Option<&[FieldElement]> {
        f.checked_sub(1).and_then(|i| self.messages.get(i)).map(Vec::as_slice)
    }
}

/// The partition of `1..=F` into Γ ordered classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    classes: Vec<Vec<usize>>,
    // lookup[f - 1] = (class, subclass)
    lookup: Vec<(usize, usize)>,
}

impl ClassMap {
    /// `classes[i-1]` lists the global indices of class `i` in subclass order.
    pub fn new(classes: Vec<Vec<usize>>) -> Result<Self, ScenarioError> {
        if classes.len() < 2 {
            return Err(ScenarioError::TooFewClasses(classes.len()));
        }
        let total: usize = classes.iter().map(Vec::len).sum();
        let mut lookup = vec![(0, 0); total];
        for (ci, members) in classes.iter().enumerate() {
            if members.is_empty() {
                return Err(ScenarioError::EmptyClass(ci + 1));
            }
            for (si, &f) in members.iter().enumerate() {
                if f == 0 || f > total || lookup[f - 1] != (0, 0) {
                    return Err(ScenarioError::BadMessageId { id: f, count: total });
                }
                lookup[f - 1] = (ci + 1, si + 1);
            }
        }
        Ok(Self { classes, lookup })
    }

    /// Γ.
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// μ_i.
    pub fn class_size(&self, class: usize) -> usize {
        self.classes.get(class.wrapping_sub(1)).map_or(0, Vec::len)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    pub fn message_count(&self) -> usize {
        self.lookup.len()
    }

    /// Members of class `i` in subclass order.
    pub fn members(&self, class: usize) -> Option<&[usize]> {
        class.checked_sub(1).and_then(|c| self.classes.get(c)).map(Vec::as_slice)
    }

    pub fn pair_to_global(&self, class: usize, subclass: usize) -> Result<usize, ScenarioError> {
        self.members(class)
            .and_then(|m| subclass.checked_sub(1).and_then(|s| m.get(s)))
            .copied()
            .ok_or_else(|| ScenarioError::OutOfRange(format!("pair ({class}, {subclass})")))
    }

    pub fn global_to_pair(&self, f: usize) -> Result<(usize, usize), ScenarioError> {
        f.checked_sub(1)
            .and_then(|i| self.lookup.get(i))
            .copied()
            .ok_or_else(|| ScenarioError::OutOfRange(format!("message {f}")))
    }
}

/// Ground-truth side information of one user: per class, the subclass
/// indices of the messages it holds. The query engine must go through
/// [`UserView`], which hides indices of unidentifiable classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideInformation {
    sets: Vec<BTreeSet<usize>>,
}

impl SideInformation {
    pub fn new(sets: Vec<BTreeSet<usize>>) -> Self {
        Self { sets }
    }

    /// k_i.
    pub fn count(&self, class: usize) -> usize {
        self.sets.get(class.wrapping_sub(1)).map_or(0, BTreeSet::len)
    }

    /// κ.
    pub fn total(&self) -> usize {
        self.sets.iter().map(BTreeSet::len).sum()
    }

    /// Ground truth membership test, for the simulator only.
    pub fn holds(&self, class: usize, subclass: usize) -> bool {
        self.sets.get(class.wrapping_sub(1)).is_some_and(|s| s.contains(&subclass))
    }

    /// Ground-truth subclass indices held from `class`.
    pub fn indices(&self, class: usize) -> Option<&BTreeSet<usize>> {
        self.sets.get(class.wrapping_sub(1))
    }
}

/// What a user itself knows about its side information.
#[derive(Debug, Clone, Copy)]
pub struct UserView<'a> {
    side_info: &'a SideInformation,
    identifiable: usize,
}

impl<'a> UserView<'a> {
    pub fn is_identifiable(&self, class: usize) -> bool {
        class >= 1 && class <= self.identifiable
    }

    /// `I_{S_i}` for an identifiable class; `None` for unidentifiable ones.
    pub fn known_indices(&self, class: usize) -> Option<&'a BTreeSet<usize>> {
        if self.is_identifiable(class) {
            self.side_info.sets.get(class - 1)
        } else {
            None
        }
    }

    /// k_i, visible for every class.
    pub fn count(&self, class: usize) -> usize {
        self.side_info.count(class)
    }
}

/// Content of one message in a [`ScenarioInput`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageContent {
    Explicit(Vec<u64>),
    /// Filled by [`random_symbol`] from the scenario seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageInput {
    /// Global message index. Either every message has one or none does; in
    /// the latter case messages are numbered in listing order.
    pub id: Option<usize>,
    pub content: MessageContent,
}

/// Unvalidated description of a scenario, as read from a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioInput {
    pub field_order: u64,
    pub symbols_per_message: usize,
    pub classes: Vec<Vec<MessageInput>>,
    /// η.
    pub eta: usize,
    /// Input-order class numbers (1-based) of the identifiable classes. When
    /// absent the first η classes are identifiable.
    pub identifiable_classes: Option<Vec<usize>>,
    /// Per user, per input class: side-information subclass indices.
    pub users: Vec<Vec<Vec<usize>>>,
    pub explicit_generator: Option<Vec<Vec<u64>>>,
    pub seed: u64,
}

/// Deterministic pseudo-random symbol for message `message` (1-based),
/// position `symbol` (1-based): a SplitMix64 finalizer over the seed mixed
/// with both indices, reduced mod q.
pub fn random_symbol(seed: u64, message: usize, symbol: usize, field: PrimeField) -> FieldElement {
    let mut z = seed
        ^ (message as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (symbol as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    field.reduce(z)
}

/// A validated, immutable scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    store: MessageStore,
    classes: ClassMap,
    users: Vec<SideInformation>,
    eta: usize,
    seed: u64,
    generator: Option<Generator>,
    class_order: Vec<usize>,
}

impl Scenario {
    /// Builds a scenario, checking every structural invariant. Theorem
    /// preconditions are not checked here; see [`Scenario::validate`].
    pub fn from_input(input: &ScenarioInput) -> Result<Self, ScenarioError> {
        let field = PrimeField::new(input.field_order)?;
        let gamma = input.classes.len();
        if gamma < 2 {
            return Err(ScenarioError::TooFewClasses(gamma));
        }
        if input.eta < 1 || input.eta > gamma {
            return Err(ScenarioError::BadEta { eta: input.eta, classes: gamma });
        }
        if input.symbols_per_message == 0 {
            return Err(ScenarioError::NoSymbols);
        }
        let class_order = identifiable_first(input, gamma)?;

        // global numbering
        let total: usize = input.classes.iter().map(Vec::len).sum();
        let with_ids = input.classes.iter().flatten().filter(|m| m.id.is_some()).count();
        if with_ids != 0 && with_ids != total {
            return Err(ScenarioError::MixedMessageIds);
        }
        let mut next = 0;
        let numbered: Vec<Vec<usize>> = input
            .classes
            .iter()
            .map(|class| {
                class
                    .iter()
                    .map(|m| {
                        next += 1;
                        m.id.unwrap_or(next)
                    })
                    .collect()
            })
            .collect();
        for (ci, class) in numbered.iter().enumerate() {
            if class.is_empty() {
                return Err(ScenarioError::EmptyClass(ci + 1));
            }
        }

        let mut messages: Vec<Option<Vec<FieldElement>>> = vec![None; total];
        for (class, ids) in input.classes.iter().zip(&numbered) {
            for (m, &id) in class.iter().zip(ids) {
                let slot = id
                    .checked_sub(1)
                    .and_then(|i| messages.get_mut(i))
                    .ok_or(ScenarioError::BadMessageId { id, count: total })?;
                if slot.is_some() {
                    return Err(ScenarioError::BadMessageId { id, count: total });
                }
                let symbols = match &m.content {
                    MessageContent::Explicit(values) => {
                        if values.len() != input.symbols_per_message {
                            return Err(ScenarioError::SymbolCount {
                                message: id,
                                expected: input.symbols_per_message,
                                got: values.len(),
                            });
                        }
                        field.vector(values)?
                    }
                    MessageContent::Random => (1..=input.symbols_per_message)
                        .map(|l| random_symbol(input.seed, id, l, field))
                        .collect(),
                };
                *slot = Some(symbols);
            }
        }
        let messages = messages.into_iter().map(|m| m.expect("ids cover 1..=F")).collect();
        let store = MessageStore::new(field, messages)?;
        let classes = ClassMap::new(class_order.iter().map(|&c| numbered[c - 1].clone()).collect())?;

        if input.users.is_empty() {
            return Err(ScenarioError::NoUsers);
        }
        let users = input
            .users
            .iter()
            .enumerate()
            .map(|(u, lists)| {
                if lists.len() != gamma {
                    return Err(ScenarioError::SideInfoShape { user: u + 1, expected: gamma, got: lists.len() });
                }
                let sets = class_order
                    .iter()
                    .enumerate()
                    .map(|(ci, &orig)| {
                        let mut set = BTreeSet::new();
                        for &index in &lists[orig - 1] {
                            if index == 0 || index > classes.class_size(ci + 1) {
                                return Err(ScenarioError::SideInfoIndex { user: u + 1, class: orig, index });
                            }
                            if !set.insert(index) {
                                return Err(ScenarioError::DuplicateSideInfo { user: u + 1, class: orig, index });
                            }
                        }
                        Ok(set)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(SideInformation::new(sets))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let generator = input
            .explicit_generator
            .as_ref()
            .map(|rows| Generator::from_explicit(rows, field))
            .transpose()?;

        Ok(Self { store, classes, users, eta: input.eta, seed: input.seed, generator, class_order })
    }

    pub fn field(&self) -> PrimeField {
        self.store.field()
    }

    pub fn store(&self) -> &MessageStore {
        &self.store
    }

    pub fn classes(&self) -> &ClassMap {
        &self.classes
    }

    /// Γ.
    pub fn gamma(&self) -> usize {
        self.classes.class_count()
    }

    /// η.
    pub fn eta(&self) -> usize {
        self.eta
    }

    /// U.
    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `class_order[i-1]` is the input class number of internal class `i`.
    pub fn class_order(&self) -> &[usize] {
        &self.class_order
    }

    pub fn explicit_generator(&self) -> Option<&Generator> {
        self.generator.as_ref()
    }

    /// μ_i.
    pub fn mu(&self, class: usize) -> usize {
        self.classes.class_size(class)
    }

    /// Ground-truth side information of user `u` (1-based).
    pub fn side_information(&self, user: usize) -> &SideInformation {
        &self.users[user - 1]
    }

    pub fn view(&self, user: usize) -> UserView<'_> {
        UserView { side_info: &self.users[user - 1], identifiable: self.eta }
    }

    /// k_i^u.
    pub fn k(&self, user: usize, class: usize) -> usize {
        self.users[user - 1].count(class)
    }

    /// k_un^u: largest side-information count over unidentifiable classes.
    pub fn k_un_of(&self, user: usize) -> usize {
        (self.eta + 1..=self.gamma()).map(|i| self.k(user, i)).max().unwrap_or(0)
    }

    /// k_un, maximised over users.
    pub fn k_un(&self) -> usize {
        (1..=self.user_count()).map(|u| self.k_un_of(u)).max().unwrap_or(0)
    }

    /// Number of queries in a plan: k_un + 1.
    pub fn query_count(&self) -> usize {
        self.k_un() + 1
    }

    /// η' = ceil((η - 1) / U).
    pub fn eta_prime(&self) -> usize {
        (self.eta - 1).div_ceil(self.user_count())
    }

    /// The value sent to the server with the plan: η - 1 or η'.
    pub fn disclosed_parameter(&self, mode: Mode) -> usize {
        match mode {
            Mode::Single => self.eta - 1,
            Mode::Multi => self.eta_prime(),
        }
    }

    /// `(n, k)` of the code the server encodes with.
    pub fn code_shape(&self, mode: Mode) -> (usize, usize) {
        let gamma = self.gamma();
        (2 * gamma - self.disclosed_parameter(mode), gamma)
    }

    /// The explicit generator when it has the right shape, otherwise the
    /// default systematic Reed-Solomon code.
    pub fn generator(&self, mode: Mode) -> Result<Generator, ScenarioError> {
        let (n, k) = self.code_shape(mode);
        match &self.generator {
            Some(g) if g.n() == n && g.k() == k => Ok(g.clone()),
            Some(g) => Err(ScenarioError::GeneratorShape { mode, n, k, got_n: g.n(), got_k: g.k() }),
            None => Ok(Generator::systematic_rs(n, k, self.field())?),
        }
    }

    /// Checks the theorem preconditions for `mode`. Never fails; violations
    /// are entries in the report.
    pub fn validate(&self, mode: Mode) -> ValidationReport {
        validate::validate(self, mode)
    }
}

fn identifiable_first(input: &ScenarioInput, gamma: usize) -> Result<Vec<usize>, ScenarioError> {
    let Some(list) = &input.identifiable_classes else {
        return Ok((1..=gamma).collect());
    };
    if list.len() != input.eta {
        return Err(ScenarioError::BadIdentifiableList(format!(
            "{} classes listed but eta = {}",
            list.len(),
            input.eta
        )));
    }
    let mut chosen = BTreeSet::new();
    for &c in list {
        if c == 0 || c > gamma || !chosen.insert(c) {
            return Err(ScenarioError::BadIdentifiableList(format!("class {c} is invalid or repeated")));
        }
    }
    let mut order: Vec<usize> = (1..=gamma).filter(|c| chosen.contains(c)).collect();
    order.extend((1..=gamma).filter(|c| !chosen.contains(c)));
    Ok(order)
}
