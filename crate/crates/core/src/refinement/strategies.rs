use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::pipeline::Decision;
use super::policy::{ActionKind, MState, SState};
use crate::metrics::{noise_detection, NoiseDetectionReport};
use crate::{Error, Result};

/// Noise-detection strategies compared on the same instance states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Query every instance.
    Naive,
    /// Remove everything the entropy filter or the model disputes.
    SelfTraining,
    /// Remove posts whose label contradicts the author's community.
    SocialOnly,
    /// The action policy with FLIP turned into QUERY.
    SocialDetection,
    /// The full action policy.
    SocialDetectionFlip,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Naive,
        Strategy::SelfTraining,
        Strategy::SocialOnly,
        Strategy::SocialDetection,
        Strategy::SocialDetectionFlip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Naive => "Naive",
            Strategy::SelfTraining => "Self-training",
            Strategy::SocialOnly => "Social-context only",
            Strategy::SocialDetection => "Social+Detection model",
            Strategy::SocialDetectionFlip => "Social+Detection (+label flipping)",
        }
    }

    pub fn action(self, d: &Decision) -> ActionKind {
        match self {
            Strategy::Naive => ActionKind::Query,
            Strategy::SelfTraining if d.m_state == MState::Consistent => ActionKind::Retain,
            Strategy::SelfTraining => ActionKind::Remove,
            Strategy::SocialOnly if d.s_state == SState::Inconsistent => ActionKind::Remove,
            Strategy::SocialOnly => ActionKind::Retain,
            Strategy::SocialDetection if d.action.value == ActionKind::Flip => ActionKind::Query,
            Strategy::SocialDetection | Strategy::SocialDetectionFlip => d.action.value,
        }
    }
}

pub fn strategy_actions(strategy: Strategy, decisions: &[Decision]) -> Vec<ActionKind> {
    decisions.iter().map(|d| strategy.action(d)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: Strategy,
    pub name: String,
    pub report: NoiseDetectionReport,
}

/// Noise detection of every strategy over the instances that have ground
/// truth. `weak` and `truth` are keyed by cascade id.
pub fn evaluate_strategies(
    decisions: &[Decision],
    weak: &HashMap<String, u8>,
    truth: &HashMap<String, u8>,
) -> Result<Vec<StrategyReport>> {
    let evaluated: Vec<&Decision> = decisions.iter().filter(|d| truth.contains_key(&d.cascade_id)).collect();
    if evaluated.is_empty() {
        return Err(Error::Empty("instances with ground truth"));
    }
    let mut w = Vec::with_capacity(evaluated.len());
    let mut t = Vec::with_capacity(evaluated.len());
    for d in &evaluated {
        let Some(&wl) = weak.get(&d.cascade_id) else {
            return Err(Error::InvalidInput(format!("no weak label for {}", d.cascade_id)));
        };
        w.push(wl);
        t.push(truth[&d.cascade_id]);
    }
    Strategy::ALL
        .iter()
        .map(|&strategy| {
            let actions: Vec<ActionKind> = evaluated.iter().map(|d| strategy.action(d)).collect();
            Ok(StrategyReport {
                strategy,
                name: strategy.name().to_string(),
                report: noise_detection(&actions, &w, &t)?,
            })
        })
        .collect()
}
