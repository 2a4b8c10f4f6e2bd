//! On-disk JSON formats: scenario input, session trace, audit report.

use num::BigRational;
use ppir_core::audit::{Census, TheoremFlags, TvMethod};
use ppir_core::query::{Demands, Query, ServerView};
use ppir_core::scenario::{Mode, MessageContent, MessageInput, Scenario, ScenarioError, ScenarioInput};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("malformed scenario file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("user {user}: identifiable flags {flags:?} disagree with the identifiable classes {expected:?}")]
    IdentifiableFlags { user: usize, flags: Vec<bool>, expected: Vec<usize> },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Either `"random"` or explicit symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Symbols {
    Explicit(Vec<u64>),
    Keyword(RandomKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomKeyword {
    Random,
}

impl Default for Symbols {
    fn default() -> Self {
        Symbols::Keyword(RandomKeyword::Random)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MessageDescriptor {
    Bare(Symbols),
    Numbered {
        id: usize,
        #[serde(default)]
        symbols: Symbols,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    /// Per input class, subclass indices of held messages.
    pub side_information: Vec<Vec<usize>>,
    /// Per input class, whether the user knows the indices. Checked against
    /// the identifiable classes when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifiable: Option<Vec<bool>>,
}

/// A known-good plan kept alongside a scenario, for self-tests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferencePlan {
    pub mode: Mode,
    pub demands: Vec<usize>,
    pub disclosed: usize,
    pub queries: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub field_order: u64,
    pub symbols_per_message: usize,
    pub classes: Vec<Vec<MessageDescriptor>>,
    pub eta: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifiable_classes: Option<Vec<usize>>,
    pub users: Vec<UserEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_generator: Option<Vec<Vec<u64>>>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference_plans: Vec<ReferencePlan>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, LoadError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_input(&self) -> ScenarioInput {
        let classes = self
            .classes
            .iter()
            .map(|class| {
                class
                    .iter()
                    .map(|d| {
                        let (id, symbols) = match d {
                            MessageDescriptor::Bare(s) => (None, s),
                            MessageDescriptor::Numbered { id, symbols } => (Some(*id), symbols),
                        };
                        let content = match symbols {
                            Symbols::Explicit(v) => MessageContent::Explicit(v.clone()),
                            Symbols::Keyword(RandomKeyword::Random) => MessageContent::Random,
                        };
                        MessageInput { id, content }
                    })
                    .collect()
            })
            .collect();
        ScenarioInput {
            field_order: self.field_order,
            symbols_per_message: self.symbols_per_message,
            classes,
            eta: self.eta,
            identifiable_classes: self.identifiable_classes.clone(),
            users: self.users.iter().map(|u| u.side_information.clone()).collect(),
            explicit_generator: self.explicit_generator.clone(),
            seed: self.seed,
        }
    }

    pub fn load(&self) -> Result<Scenario, LoadError> {
        let s = Scenario::from_input(&self.to_input())?;
        let expected: Vec<usize> = s.class_order()[..s.eta()].to_vec();
        for (u, user) in self.users.iter().enumerate() {
            if let Some(flags) = &user.identifiable {
                let ok = flags.len() == s.gamma() && flags.iter().enumerate().all(|(c, &f)| f == expected.contains(&(c + 1)));
                if !ok {
                    return Err(LoadError::IdentifiableFlags { user: u + 1, flags: flags.clone(), expected });
                }
            }
        }
        Ok(s)
    }
}

/// Parses and loads in one step.
pub fn load_scenario(text: &str) -> Result<(ScenarioFile, Scenario), LoadError> {
    let file = ScenarioFile::parse(text)?;
    let s = file.load()?;
    Ok((file, s))
}

/// `"num/den"`, always with a denominator.
pub fn fraction(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Translation between file class numbers and the scenario's internal order,
/// where identifiable classes come first.
#[derive(Debug, Clone, Copy)]
pub struct ClassOrder<'a>(pub &'a [usize]);

impl ClassOrder<'_> {
    pub fn of(s: &Scenario) -> ClassOrder<'_> {
        ClassOrder(s.class_order())
    }

    pub fn to_internal(&self, input_class: usize) -> Option<usize> {
        self.0.iter().position(|&c| c == input_class).map(|p| p + 1)
    }

    pub fn to_input(&self, internal: usize) -> usize {
        self.0[internal - 1]
    }

    /// Reorders a per-internal-class vector into file order.
    pub fn permute<T: Clone>(&self, per_internal: &[T]) -> Vec<T> {
        let mut out = per_internal.to_vec();
        for (i, item) in per_internal.iter().enumerate() {
            out[self.0[i] - 1] = item.clone();
        }
        out
    }

    /// Inverse of [`ClassOrder::permute`].
    pub fn unpermute<T: Clone>(&self, per_input: &[T]) -> Vec<T> {
        self.0.iter().map(|&c| per_input[c - 1].clone()).collect()
    }

    pub fn demands_to_input(&self, d: &Demands) -> Vec<usize> {
        d.to_vec().into_iter().map(|c| self.to_input(c)).collect()
    }

    pub fn query_to_input(&self, q: &Query) -> TraceQuery {
        TraceQuery { j: q.j, subclass: self.permute(&q.subclass) }
    }

    /// A reference plan in file numbering to a server view in internal numbering.
    pub fn view_from_plan(&self, plan: &ReferencePlan) -> ServerView {
        ServerView {
            disclosed: plan.disclosed,
            queries: plan
                .queries
                .iter()
                .enumerate()
                .map(|(j, row)| Query { j: j + 1, subclass: self.unpermute(row) })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceQuery {
    pub j: usize,
    /// Subclass index per class, in file class order.
    pub subclass: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceView {
    pub disclosed: usize,
    pub queries: Vec<TraceQuery>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceAnswer {
    pub j: usize,
    /// One row per parity symbol, `L` columns.
    pub parities: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceMessage {
    pub class: usize,
    pub subclass: usize,
    pub message: usize,
    pub symbols: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceDecoded {
    pub j: usize,
    pub messages: Vec<TraceMessage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceSkipped {
    pub j: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceUser {
    pub user: usize,
    pub demand: usize,
    pub decoded: Vec<TraceDecoded>,
    pub skipped: Vec<TraceSkipped>,
    pub new_message: TraceMessage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceFile {
    pub mode: Mode,
    pub demands: Vec<usize>,
    pub seed: u64,
    pub forced: bool,
    /// Precondition checks that failed; only non-empty for forced runs.
    pub failed_checks: Vec<String>,
    pub code: CodeShape,
    pub server_view: TraceView,
    pub answers: Vec<TraceAnswer>,
    pub users: Vec<TraceUser>,
    pub download: usize,
    pub rate: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CodeShape {
    pub n: usize,
    pub k: usize,
    pub explicit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioSummary {
    pub field_order: u64,
    pub classes: usize,
    pub eta: usize,
    pub identifiable_classes: Vec<usize>,
    pub users: usize,
    /// μ per class, file order.
    pub mu: Vec<usize>,
    /// Side-information counts per user and class, file order.
    pub k: Vec<Vec<usize>>,
    pub k_un: usize,
    pub queries: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RateTable {
    pub r_isi: String,
    pub r_usi: Option<String>,
    pub r_multi: String,
    pub r_naive_multi: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub offenders: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationSummary {
    pub mode: Mode,
    pub passed: bool,
    pub failed: Vec<CheckSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvRow {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub value: f64,
    pub exact: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivacySection {
    pub mode: Mode,
    pub base_seed: u64,
    pub pass_rate: Option<f64>,
    pub census: Census,
    pub tv_method: Option<TvMethod>,
    pub tv: Vec<TvRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportFile {
    pub scenario: ScenarioSummary,
    pub rates: RateTable,
    pub theorems: TheoremFlags,
    pub validation: Vec<ValidationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub privacy: Option<PrivacySection>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_forms() {
        let d: Vec<MessageDescriptor> = serde_json::from_str(r#"["random", [1, 2], {"id": 3}, {"id": 4, "symbols": [0, 0]}]"#).unwrap();
        assert_eq!(d[0], MessageDescriptor::Bare(Symbols::default()));
        assert_eq!(d[1], MessageDescriptor::Bare(Symbols::Explicit(vec![1, 2])));
        assert_eq!(d[2], MessageDescriptor::Numbered { id: 3, symbols: Symbols::default() });
        assert_eq!(d[3], MessageDescriptor::Numbered { id: 4, symbols: Symbols::Explicit(vec![0, 0]) });
        assert!(serde_json::from_str::<MessageDescriptor>(r#""randomly""#).is_err());
    }

    #[test]
    fn fractions_keep_denominator() {
        assert_eq!(fraction(&BigRational::new(2.into(), 24.into())), "1/12");
        assert_eq!(fraction(&BigRational::new(3.into(), 3.into())), "1/1");
    }

    #[test]
    fn class_order_round_trip() {
        let order = ClassOrder(&[2, 4, 1, 3]);
        assert_eq!(order.to_internal(4), Some(2));
        assert_eq!(order.to_internal(5), None);
        let internal = vec!['b', 'd', 'a', 'c'];
        let input = order.permute(&internal);
        assert_eq!(input, vec!['a', 'b', 'c', 'd']);
        assert_eq!(order.unpermute(&input), internal);
    }

    #[test]
    fn flags_must_match_identifiable_classes() {
        let text = r#"{"field_order": 5, "symbols_per_message": 1, "classes": [["random", "random"], ["random", "random"]],
            "eta": 1, "users": [{"side_information": [[1], []], "identifiable": [false, true]}], "seed": 0}"#;
        assert!(matches!(load_scenario(text), Err(LoadError::IdentifiableFlags { user: 1, .. })));
        let fixed = text.replace("[false, true]", "[true, false]");
        assert!(load_scenario(&fixed).is_ok());
    }
}
