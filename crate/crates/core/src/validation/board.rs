use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::task::{AnnotationTask, TaskState};
use super::verdict::{FieldError, Verdict};
use super::ValidationError;
use crate::repository::CountryCode;

/// Annotator id → the one country they validate for.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatorRegistry {
    pub annotators: BTreeMap<String, CountryCode>,
}

impl AnnotatorRegistry {
    pub fn load(path: &Path) -> Result<Self, ValidationError> {
        let text = fs::read_to_string(path).map_err(|e| ValidationError::io(path, e))?;
        toml::from_str(&text).map_err(|e| ValidationError::Registry(format!("{}: {e}", path.display())))
    }

    pub fn country_of(&self, annotator: &str) -> Option<&CountryCode> {
        self.annotators.get(annotator)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoardError {
    #[error("annotator {0:?} is not registered")]
    UnknownAnnotator(String),
    #[error("annotator {annotator:?} is registered for {registered}, not {requested}")]
    WrongCountry {
        annotator: String,
        registered: String,
        requested: String,
    },
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("annotator {annotator:?} already answered {task_id}")]
    Duplicate { task_id: String, annotator: String },
    #[error("task {0} was never leased to this annotator")]
    NotLeased(String),
    #[error("task {0} already has all required verdicts")]
    TaskComplete(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone)]
struct Slot {
    task: AnnotationTask,
    /// annotator → lease expiry
    leases: HashMap<String, DateTime<Utc>>,
    answered: BTreeSet<String>,
    verdicts: Vec<Verdict>,
}

impl Slot {
    fn active_leases(&self, now: DateTime<Utc>) -> usize {
        self.leases.values().filter(|exp| **exp > now).count()
    }

    fn is_complete(&self) -> bool {
        self.answered.len() as u32 >= self.task.required_verdicts
    }

    fn state(&self, now: DateTime<Utc>) -> TaskState {
        if self.is_complete() {
            TaskState::Complete
        } else if self.active_leases(now) > 0 {
            TaskState::Leased
        } else {
            TaskState::Open
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Receipt {
    pub count: u32,
    pub required: u32,
    pub complete: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PartitionProgress {
    pub country: String,
    pub concept: String,
    pub tasks: usize,
    pub complete: usize,
    pub verdicts: usize,
}

/// Leasing and verdict bookkeeping over a fixed task set.
///
/// A task is offered only while answered verdicts plus live leases stay below
/// its quorum, so concurrent annotators never overfill it.
#[derive(Debug, Clone)]
pub struct TaskBoard {
    slots: BTreeMap<String, Slot>,
    registry: AnnotatorRegistry,
    lease_ttl: Duration,
}

impl TaskBoard {
    pub fn new(tasks: Vec<AnnotationTask>, registry: AnnotatorRegistry, lease_ttl: Duration) -> Self {
        let slots = tasks
            .into_iter()
            .map(|task| {
                (
                    task.task_id.clone(),
                    Slot {
                        task,
                        leases: HashMap::new(),
                        answered: BTreeSet::new(),
                        verdicts: Vec::new(),
                    },
                )
            })
            .collect();
        TaskBoard { slots, registry, lease_ttl }
    }

    /// Rebuilds answer state from a verdict log. Verdicts for unknown tasks
    /// and repeated (task, annotator) pairs are skipped with a warning.
    pub fn replay(&mut self, verdicts: impl IntoIterator<Item = Verdict>) {
        for v in verdicts {
            let Some(slot) = self.slots.get_mut(&v.task_id) else {
                log::warn!("verdict log references unknown task {}", v.task_id);
                continue;
            };
            if slot.answered.insert(v.annotator_id.clone()) {
                slot.verdicts.push(v);
            } else {
                log::warn!("duplicate verdict in log for {} by {}", v.task_id, v.annotator_id);
            }
        }
    }

    fn authorize(&self, annotator: &str) -> Result<&CountryCode, BoardError> {
        self.registry
            .country_of(annotator)
            .ok_or_else(|| BoardError::UnknownAnnotator(annotator.to_string()))
    }

    /// Next task for `annotator` in `country`, leased until now + TTL.
    /// An annotator already holding a live lease gets that task back.
    pub fn lease(
        &mut self,
        annotator: &str,
        country: &CountryCode,
        now: DateTime<Utc>,
    ) -> Result<Option<AnnotationTask>, BoardError> {
        let registered = self.authorize(annotator)?;
        if registered != country {
            return Err(BoardError::WrongCountry {
                annotator: annotator.to_string(),
                registered: registered.to_string(),
                requested: country.to_string(),
            });
        }
        let held = self.slots.values().find(|s| {
            &s.task.country == country
                && !s.answered.contains(annotator)
                && s.leases.get(annotator).is_some_and(|exp| *exp > now)
        });
        let id = match held {
            Some(s) => Some(s.task.task_id.clone()),
            None => self
                .slots
                .values()
                .find(|s| {
                    &s.task.country == country
                        && !s.answered.contains(annotator)
                        && (s.answered.len() + s.active_leases(now)) < s.task.required_verdicts as usize
                })
                .map(|s| s.task.task_id.clone()),
        };
        let Some(id) = id else { return Ok(None) };
        let ttl = self.lease_ttl;
        let slot = self.slots.get_mut(&id).expect("slot exists");
        slot.leases.insert(annotator.to_string(), now + ttl);
        let mut task = slot.task.clone();
        task.state = slot.state(now);
        Ok(Some(task))
    }

    /// Validates and records a verdict without persisting it; callers append
    /// to the log first and then call [`TaskBoard::commit`].
    pub fn check_submission(&self, v: &Verdict) -> Result<(), BoardError> {
        v.check()?;
        self.authorize(&v.annotator_id)?;
        let slot = self
            .slots
            .get(&v.task_id)
            .ok_or_else(|| BoardError::UnknownTask(v.task_id.clone()))?;
        if slot.answered.contains(&v.annotator_id) {
            return Err(BoardError::Duplicate {
                task_id: v.task_id.clone(),
                annotator: v.annotator_id.clone(),
            });
        }
        if !slot.leases.contains_key(&v.annotator_id) {
            return Err(BoardError::NotLeased(v.task_id.clone()));
        }
        if slot.is_complete() {
            return Err(BoardError::TaskComplete(v.task_id.clone()));
        }
        Ok(())
    }

    pub fn commit(&mut self, v: Verdict) -> Receipt {
        let slot = self.slots.get_mut(&v.task_id).expect("checked task");
        slot.leases.remove(&v.annotator_id);
        slot.answered.insert(v.annotator_id.clone());
        slot.verdicts.push(v);
        Receipt {
            count: slot.answered.len() as u32,
            required: slot.task.required_verdicts,
            complete: slot.is_complete(),
        }
    }

    /// In-memory submit for callers that persist separately.
    pub fn submit(&mut self, v: Verdict) -> Result<Receipt, BoardError> {
        self.check_submission(&v)?;
        Ok(self.commit(v))
    }

    pub fn task(&self, task_id: &str, now: DateTime<Utc>) -> Option<AnnotationTask> {
        self.slots.get(task_id).map(|s| {
            let mut t = s.task.clone();
            t.state = s.state(now);
            t
        })
    }

    pub fn verdicts(&self, task_id: &str) -> &[Verdict] {
        self.slots.get(task_id).map(|s| s.verdicts.as_slice()).unwrap_or(&[])
    }

    /// Completed tasks with their verdicts, in task-id order.
    pub fn completed(&self) -> impl Iterator<Item = (&AnnotationTask, &[Verdict])> {
        self.slots
            .values()
            .filter(|s| s.is_complete())
            .map(|s| (&s.task, s.verdicts.as_slice()))
    }

    /// (answered, total) tasks for one annotator's country.
    pub fn annotator_progress(&self, annotator: &str) -> Option<(usize, usize)> {
        let country = self.registry.country_of(annotator)?;
        let mine: Vec<_> = self.slots.values().filter(|s| &s.task.country == country).collect();
        Some((mine.iter().filter(|s| s.answered.contains(annotator)).count(), mine.len()))
    }

    pub fn progress(&self) -> Vec<PartitionProgress> {
        let mut map: BTreeMap<(String, String), PartitionProgress> = BTreeMap::new();
        for s in self.slots.values() {
            let key = (s.task.country.to_string(), s.task.concept.as_str().to_string());
            let p = map.entry(key.clone()).or_insert_with(|| PartitionProgress {
                country: key.0,
                concept: key.1,
                ..Default::default()
            });
            p.tasks += 1;
            p.verdicts += s.verdicts.len();
            if s.is_complete() {
                p.complete += 1;
            }
        }
        map.into_values().collect()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}
