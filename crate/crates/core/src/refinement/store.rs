use std::collections::BTreeMap;
use std::time::Duration;

use parking_lot::{Condvar, Mutex, RwLock, RwLockReadGuard, RwLockWriteGuard};
use serde::{Deserialize, Serialize};

use super::policy::{Action, ActionKind, MState, SState};
use crate::finegrained::FineLabel;
use crate::social::CommunityLabel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    Removed,
    QueriedPending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelState {
    pub cascade_id: String,
    pub weak_label: u8,
    pub working_label: u8,
    pub fine_label_human: Option<FineLabel>,
    pub action_history: Vec<HistoryEntry>,
    pub status: Status,
}

impl LabelState {
    pub fn new(cascade_id: impl Into<String>, weak_label: u8) -> Self {
        LabelState {
            cascade_id: cascade_id.into(),
            weak_label,
            working_label: weak_label,
            fine_label_human: None,
            action_history: Vec::new(),
            status: Status::Active,
        }
    }

    /// Single action summarizing the history: REMOVE or QUERY if the
    /// instance was ever removed or queued, FLIP if it was ever flipped,
    /// RETAIN otherwise.
    pub fn summary_action(&self) -> ActionKind {
        let kinds = || self.action_history.iter().map(|h| h.action.value);
        if kinds().any(|k| k == ActionKind::Remove) {
            ActionKind::Remove
        } else if kinds().any(|k| k == ActionKind::Query) {
            ActionKind::Query
        } else if kinds().any(|k| k == ActionKind::Flip) {
            ActionKind::Flip
        } else {
            ActionKind::Retain
        }
    }
}

/// What an annotator sees for a queued instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueItem {
    pub cascade_id: String,
    pub text: String,
    pub source_domain: Option<String>,
    pub source_class: Option<String>,
    pub timestamp: i64,
    pub cascade_size: usize,
    pub unique_users: usize,
    pub weak_label: u8,
    pub prob_misinfo: f64,
    pub entropy: f64,
    pub community_label: Option<CommunityLabel>,
    pub m_state: MState,
    pub s_state: SState,
    pub iteration: usize,
    pub guidelines_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub fine_label: FineLabel,
    pub annotator_id: String,
    /// Unix seconds.
    pub answered_at: i64,
}

/// Pending queries ordered by descending entropy, plus recorded answers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryQueue {
    pending: Vec<QueueItem>,
    answered: BTreeMap<String, Answer>,
}

impl QueryQueue {
    pub fn pending(&self) -> &[QueueItem] {
        &self.pending
    }

    pub fn answered(&self) -> &BTreeMap<String, Answer> {
        &self.answered
    }

    pub fn is_pending(&self, cascade_id: &str) -> bool {
        self.pending.iter().any(|p| p.cascade_id == cascade_id)
    }

    fn push(&mut self, item: QueueItem) {
        let pos = self
            .pending
            .partition_point(|p| p.entropy > item.entropy || (p.entropy == item.entropy && p.cascade_id < item.cascade_id));
        self.pending.insert(pos, item);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Progress {
    pub pending: usize,
    pub answered: usize,
    pub retained: usize,
    pub flipped: usize,
    pub removed: usize,
    pub iteration: usize,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AnswerError {
    #[error("unknown cascade id {0}")]
    Unknown(String),
    #[error("cascade {0} is not awaiting a label")]
    NotPending(String),
    #[error("cascade {0} was already labeled")]
    AlreadyAnswered(String),
}

/// Label states of every instance and the query queue.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelStore {
    states: BTreeMap<String, LabelState>,
    queue: QueryQueue,
    iteration: usize,
    proceed: bool,
}

impl LabelStore {
    pub fn new(instances: impl IntoIterator<Item = (String, u8)>) -> Self {
        LabelStore {
            states: instances
                .into_iter()
                .map(|(id, weak)| (id.clone(), LabelState::new(id, weak)))
                .collect(),
            ..Default::default()
        }
    }

    pub fn get(&self, cascade_id: &str) -> Option<&LabelState> {
        self.states.get(cascade_id)
    }

    pub fn states(&self) -> impl Iterator<Item = &LabelState> {
        self.states.values()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn queue(&self) -> &QueryQueue {
        &self.queue
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn set_iteration(&mut self, iteration: usize) {
        self.iteration = iteration;
        self.proceed = false;
    }

    pub fn request_proceed(&mut self) {
        self.proceed = true;
    }

    pub fn proceed_requested(&self) -> bool {
        self.proceed
    }

    pub fn progress(&self) -> Progress {
        let mut p = Progress {
            pending: self.queue.pending.len(),
            answered: self.queue.answered.len(),
            iteration: self.iteration,
            ..Default::default()
        };
        for s in self.states.values() {
            match s.status {
                Status::Removed => p.removed += 1,
                Status::Active if s.working_label != s.weak_label => p.flipped += 1,
                Status::Active => p.retained += 1,
                Status::QueriedPending => {}
            }
        }
        p
    }

    /// Applies one iteration's actions as a single transaction. QUERY items
    /// are queued (built by `item`) when `interactive`, otherwise recorded
    /// as REMOVE. Fails without changes if an id is unknown, inactive, or
    /// repeated.
    pub fn apply_actions(
        &mut self,
        iteration: usize,
        actions: &[(String, Action)],
        interactive: bool,
        mut item: impl FnMut(&str) -> QueueItem,
    ) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (id, _) in actions {
            let id = id.as_str();
            if !seen.insert(id) {
                return Err(Error::Internal(format!("more than one action for {id} in iteration {iteration}")));
            }
            match self.states.get(id) {
                None => return Err(Error::Internal(format!("action for unknown cascade {id}"))),
                Some(s) if s.status != Status::Active => {
                    return Err(Error::Internal(format!("action for inactive cascade {id}")))
                }
                Some(_) => {}
            }
        }
        for (id, action) in actions {
            let action = *action;
            let state = self.states.get_mut(id).expect("checked above");
            let recorded = match action.value {
                ActionKind::Retain => action,
                ActionKind::Flip => {
                    state.working_label = 1 - state.working_label;
                    action
                }
                ActionKind::Query if interactive => {
                    state.status = Status::QueriedPending;
                    self.queue.push(item(id));
                    action
                }
                ActionKind::Query | ActionKind::Remove => {
                    state.status = Status::Removed;
                    Action {
                        value: ActionKind::Remove,
                        reason: action.reason,
                    }
                }
            };
            state.action_history.push(HistoryEntry {
                iteration,
                action: recorded,
            });
        }
        Ok(())
    }

    /// Records a human label for a pending item. The first answer wins.
    pub fn answer(&mut self, cascade_id: &str, fine_label: FineLabel, annotator_id: &str, answered_at: i64) -> std::result::Result<u8, AnswerError> {
        let Some(state) = self.states.get_mut(cascade_id) else {
            return Err(AnswerError::Unknown(cascade_id.to_string()));
        };
        if self.queue.answered.contains_key(cascade_id) {
            return Err(AnswerError::AlreadyAnswered(cascade_id.to_string()));
        }
        let Some(pos) = self.queue.pending.iter().position(|p| p.cascade_id == cascade_id) else {
            return Err(AnswerError::NotPending(cascade_id.to_string()));
        };
        self.queue.pending.remove(pos);
        let binary = fine_label.binarize();
        state.fine_label_human = Some(fine_label);
        state.working_label = binary;
        state.status = Status::Active;
        self.queue.answered.insert(
            cascade_id.to_string(),
            Answer {
                fine_label,
                annotator_id: annotator_id.to_string(),
                answered_at,
            },
        );
        Ok(binary)
    }
}

/// Label store shared between the refinement loop and the annotation
/// service: one writer at a time, any number of readers.
#[derive(Debug, Default)]
pub struct SharedStore {
    store: RwLock<LabelStore>,
    changed: Mutex<u64>,
    signal: Condvar,
}

impl SharedStore {
    pub fn new(store: LabelStore) -> Self {
        SharedStore {
            store: RwLock::new(store),
            ..Default::default()
        }
    }

    pub fn read(&self) -> RwLockReadGuard<'_, LabelStore> {
        self.store.read()
    }

    /// Runs `f` under the write lock and wakes anyone waiting for changes.
    pub fn update<T>(&self, f: impl FnOnce(&mut LabelStore) -> T) -> T {
        let out = {
            let mut guard: RwLockWriteGuard<'_, LabelStore> = self.store.write();
            f(&mut guard)
        };
        *self.changed.lock() += 1;
        self.signal.notify_all();
        out
    }

    /// Blocks until `done` holds for the store, re-checking on every update
    /// and at least every `poll`.
    pub fn wait_until(&self, poll: Duration, mut done: impl FnMut(&LabelStore) -> bool) {
        loop {
            let generation = *self.changed.lock();
            if done(&self.read()) {
                return;
            }
            let mut g = self.changed.lock();
            if *g == generation {
                self.signal.wait_for(&mut g, poll);
            }
        }
    }

    pub fn into_inner(self) -> LabelStore {
        self.store.into_inner()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refinement::Reason;

    fn item(id: &str, entropy: f64) -> QueueItem {
        QueueItem {
            cascade_id: id.into(),
            text: String::new(),
            source_domain: None,
            source_class: None,
            timestamp: 0,
            cascade_size: 1,
            unique_users: 1,
            weak_label: 1,
            prob_misinfo: 0.5,
            entropy,
            community_label: None,
            m_state: MState::LowConfidence,
            s_state: SState::Unknown,
            iteration: 1,
            guidelines_version: String::new(),
        }
    }

    fn act(value: ActionKind) -> Action {
        Action {
            value,
            reason: Reason::EntropyFilter,
        }
    }

    fn apply(s: &mut LabelStore, iteration: usize, actions: &[(&str, ActionKind, f64)], interactive: bool) -> Result<()> {
        let entropy: std::collections::HashMap<&str, f64> = actions.iter().map(|a| (a.0, a.2)).collect();
        let list: Vec<(String, Action)> = actions.iter().map(|a| (a.0.to_string(), act(a.1))).collect();
        s.apply_actions(iteration, &list, interactive, |id| item(id, entropy[id]))
    }

    fn store() -> LabelStore {
        LabelStore::new([("a".to_string(), 1), ("b".to_string(), 0), ("c".to_string(), 1)])
    }

    #[test]
    fn flip_toggles_and_twice_restores() {
        let mut s = store();
        apply(&mut s, 1, &[("a", ActionKind::Flip, 0.1)], false).unwrap();
        assert_eq!(s.get("a").unwrap().working_label, 0);
        apply(&mut s, 2, &[("a", ActionKind::Flip, 0.1)], false).unwrap();
        assert_eq!(s.get("a").unwrap().working_label, 1);
    }

    #[test]
    fn autonomous_query_becomes_remove() {
        let mut s = store();
        apply(&mut s, 1, &[("b", ActionKind::Query, 0.6)], false).unwrap();
        let b = s.get("b").unwrap();
        assert_eq!(b.status, Status::Removed);
        assert_eq!(b.action_history[0].action.value, ActionKind::Remove);
        assert!(apply(&mut s, 2, &[("b", ActionKind::Retain, 0.6)], false).is_err());
    }

    #[test]
    fn repeated_action_in_one_iteration_is_rejected_atomically() {
        let mut s = store();
        let err = apply(&mut s, 1, &[("a", ActionKind::Flip, 0.1), ("a", ActionKind::Flip, 0.1)], false);
        assert!(matches!(err, Err(Error::Internal(_))));
        assert_eq!(s.get("a").unwrap().working_label, 1);
        assert!(s.get("a").unwrap().action_history.is_empty());
    }

    #[test]
    fn queue_orders_by_entropy_and_answers_binarize() {
        let mut s = store();
        let queries = [("a", ActionKind::Query, 0.3), ("b", ActionKind::Query, 0.6), ("c", ActionKind::Query, 0.5)];
        apply(&mut s, 1, &queries, true).unwrap();
        let order: Vec<&str> = s.queue().pending().iter().map(|p| p.cascade_id.as_str()).collect();
        assert_eq!(order, ["b", "c", "a"]);
        assert_eq!(s.answer("b", FineLabel::False, "x", 0), Ok(1));
        assert_eq!(s.get("b").unwrap().working_label, 1);
        assert_eq!(s.answer("a", FineLabel::MostlyTrue, "x", 0), Ok(0));
        assert_eq!(s.get("a").unwrap().status, Status::Active);
        assert_eq!(s.answer("a", FineLabel::False, "y", 1), Err(AnswerError::AlreadyAnswered("a".into())));
        assert_eq!(s.get("a").unwrap().fine_label_human, Some(FineLabel::MostlyTrue));
        assert_eq!(s.answer("zz", FineLabel::False, "y", 1), Err(AnswerError::Unknown("zz".into())));
        let p = s.progress();
        assert_eq!((p.pending, p.answered), (1, 2));
        assert_eq!(p.pending + p.retained + p.flipped + p.removed, s.len());
    }

    #[test]
    fn summary_prefers_queries_over_flips() {
        let mut s = store();
        apply(&mut s, 1, &[("a", ActionKind::Flip, 0.1)], false).unwrap();
        assert_eq!(s.get("a").unwrap().summary_action(), ActionKind::Flip);
        apply(&mut s, 2, &[("a", ActionKind::Query, 0.1)], false).unwrap();
        assert_eq!(s.get("a").unwrap().summary_action(), ActionKind::Remove);
        assert_eq!(s.get("b").unwrap().summary_action(), ActionKind::Retain);
    }
}
