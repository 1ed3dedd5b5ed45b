use serde::{Deserialize, Serialize};

/// Detection-model state of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MState {
    /// High prediction entropy.
    #[serde(rename = "M-lc")]
    LowConfidence,
    #[serde(rename = "M-consistent")]
    Consistent,
    #[serde(rename = "M-inconsistent")]
    Inconsistent,
}

/// Social-context state of an instance, relative to its working label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SState {
    #[serde(rename = "S-unk")]
    Unknown,
    #[serde(rename = "S-consistent")]
    Consistent,
    #[serde(rename = "S-inconsistent")]
    Inconsistent,
}

impl MState {
    pub const ALL: [MState; 3] = [MState::LowConfidence, MState::Consistent, MState::Inconsistent];
}

impl SState {
    pub const ALL: [SState; 3] = [SState::Unknown, SState::Consistent, SState::Inconsistent];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ActionKind {
    Retain,
    Flip,
    Query,
    Remove,
}

impl ActionKind {
    /// Whether the action marks the weak label as possibly wrong.
    pub fn is_detection(self) -> bool {
        !matches!(self, ActionKind::Retain)
    }

    /// QUERY or its unattended stand-in REMOVE.
    pub fn is_query(self) -> bool {
        matches!(self, ActionKind::Query | ActionKind::Remove)
    }
}

/// Why an action was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    /// Model and social context agree.
    Reinforced,
    /// Confident model and social context disagree.
    Contrasting,
    /// No social signal; the model decides alone.
    ModelOnly,
    /// The model is not confident.
    EntropyFilter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub value: ActionKind,
    pub reason: Reason,
}

impl Action {
    const fn new(value: ActionKind, reason: Reason) -> Self {
        Action { value, reason }
    }
}

/// The RETAIN / FLIP / QUERY policy over `(model state, social state)`.
pub fn assign_action(m: MState, s: SState) -> Action {
    use ActionKind::*;
    match (m, s) {
        (MState::Consistent, SState::Consistent) => Action::new(Retain, Reason::Reinforced),
        (MState::Inconsistent, SState::Inconsistent) => Action::new(Flip, Reason::Reinforced),
        (MState::Consistent, SState::Inconsistent) | (MState::Inconsistent, SState::Consistent) => {
            Action::new(Query, Reason::Contrasting)
        }
        (MState::Consistent, SState::Unknown) => Action::new(Retain, Reason::ModelOnly),
        (MState::Inconsistent, SState::Unknown) => Action::new(Flip, Reason::ModelOnly),
        (MState::LowConfidence, _) => Action::new(Query, Reason::EntropyFilter),
    }
}
