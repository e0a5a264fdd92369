//! Core data model: sensing tasks, bidders, campaigns, and the spatial
//! generator that places both uniformly at random over a square region.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::DomainError;

/// Index of a task within a campaign. Ids are contiguous, starting at 0.
pub type TaskId = usize;
/// Index of a participant within a campaign. Ids are contiguous, starting at 0.
pub type ParticipantId = usize;

/// Lower clamp for sampled per-task bids. The sampling interval
/// `[value - alpha, value + alpha]` can dip below zero for cheap tasks;
/// bids must stay positive.
pub const MIN_PER_TASK_BID: f64 = 0.01;

/// Planar point in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A sensing job with a location and a positive value to the platform.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub location: Point,
    pub value: f64,
}

/// A bidder: holds an area of interest, the task set inside it, one
/// collective bid for the whole set, and one descriptive (per-task) bid
/// for each interested task.
#[derive(Debug, Clone, PartialEq)]
pub struct Participant {
    pub id: ParticipantId,
    pub location: Point,
    pub radius: f64,
    /// Interested task ids, ascending. Always nonempty.
    pub interested_tasks: Vec<TaskId>,
    /// Single price asked for performing the whole interested set.
    pub collective_bid: f64,
    /// Per-task price list; keys are exactly `interested_tasks`.
    pub descriptive_bids: BTreeMap<TaskId, f64>,
    /// In (0, 1]. Fixed at 1 in reputation-unaware campaigns.
    pub reputation: f64,
    /// True cost of performing the interested set. Equals the collective
    /// bid under the truthful-bidding default.
    pub private_cost: f64,
}

/// Whether bids and values are scaled by participant reputation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    ReputationAware,
    ReputationUnaware,
}

/// One auction instance: the task set, the bidder set, and the mode the
/// bidders were generated under. Immutable once built; mechanisms never
/// mutate it.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub tasks: Vec<Task>,
    pub participants: Vec<Participant>,
    pub mode: Mode,
}

impl Campaign {
    /// Sum of all task values.
    pub fn total_task_value(&self) -> f64 {
        self.tasks.iter().map(|t| t.value).sum()
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn n_participants(&self) -> usize {
        self.participants.len()
    }

    /// Checks the structural invariants of a hand-built campaign.
    pub fn validate(&self) -> Result<(), DomainError> {
        for (i, t) in self.tasks.iter().enumerate() {
            if t.id != i {
                return Err(DomainError::NonContiguousTaskIds);
            }
            if t.value <= 0.0 {
                return Err(DomainError::NonPositiveValue { task: t.id });
            }
        }
        for (i, p) in self.participants.iter().enumerate() {
            if p.id != i {
                return Err(DomainError::NonContiguousParticipantIds);
            }
            if p.interested_tasks.is_empty() {
                return Err(DomainError::EmptyInterestSet { participant: p.id });
            }
            if p.collective_bid <= 0.0 || p.private_cost <= 0.0 {
                return Err(DomainError::NonPositiveBid { participant: p.id });
            }
            if !(p.reputation > 0.0 && p.reputation <= 1.0) {
                return Err(DomainError::ReputationOutOfRange {
                    participant: p.id,
                    value: p.reputation,
                });
            }
            if self.mode == Mode::ReputationUnaware && p.reputation != 1.0 {
                return Err(DomainError::ReputationOutOfRange {
                    participant: p.id,
                    value: p.reputation,
                });
            }
            if !p.interested_tasks.windows(2).all(|w| w[0] < w[1]) {
                return Err(DomainError::UnsortedInterestSet { participant: p.id });
            }
            for &j in &p.interested_tasks {
                if j >= self.tasks.len() {
                    return Err(DomainError::UnknownTask { task: j });
                }
            }
            if p.descriptive_bids.len() != p.interested_tasks.len()
                || !p
                    .interested_tasks
                    .iter()
                    .all(|j| p.descriptive_bids.get(j).is_some_and(|b| *b > 0.0))
            {
                return Err(DomainError::DescriptiveBidMismatch { participant: p.id });
            }
        }
        Ok(())
    }
}

/// Parameters for random campaign generation. Defaults follow the common
/// simulation setup: a 1000 m square, 30 m interest radius, task values in
/// [1, 5], collective bids in [1, 10], per-task bids within `alpha` = 2 of
/// the task value, reputations in [0.6, 0.9].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GenConfig {
    pub n_tasks: usize,
    pub n_participants: usize,
    pub area_side: f64,
    pub interest_radius: f64,
    pub value_range: (f64, f64),
    pub collective_bid_range: (f64, f64),
    /// Half-width of the per-task bid interval around the task value.
    pub alpha: f64,
    pub reputation_range: (f64, f64),
    pub seed: u64,
    pub mode: Mode,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_tasks: 100,
            n_participants: 100,
            area_side: 1000.0,
            interest_radius: 30.0,
            value_range: (1.0, 5.0),
            collective_bid_range: (1.0, 10.0),
            alpha: 2.0,
            reputation_range: (0.6, 0.9),
            seed: 0,
            mode: Mode::ReputationUnaware,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.n_tasks < 1 || self.n_participants < 1 {
            return Err(DomainError::InvalidConfig(
                "need at least one task and one participant".into(),
            ));
        }
        if !(self.area_side > 0.0) {
            return Err(DomainError::InvalidConfig("area_side must be positive".into()));
        }
        if !(self.interest_radius > 0.0) {
            return Err(DomainError::InvalidConfig(
                "interest_radius must be positive; relocation cannot terminate otherwise".into(),
            ));
        }
        if !(self.alpha >= 0.0) {
            return Err(DomainError::InvalidConfig("alpha must be nonnegative".into()));
        }
        for (name, (lo, hi)) in [
            ("value_range", self.value_range),
            ("collective_bid_range", self.collective_bid_range),
            ("reputation_range", self.reputation_range),
        ] {
            if !(lo > 0.0 && lo <= hi) {
                return Err(DomainError::InvalidConfig(format!(
                    "{name} must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        if self.reputation_range.1 > 1.0 {
            return Err(DomainError::InvalidConfig(
                "reputation_range upper bound must be <= 1".into(),
            ));
        }
        if self.value_range.0 + self.alpha < MIN_PER_TASK_BID {
            return Err(DomainError::InvalidConfig(
                "value_range.lo + alpha below the minimum per-task bid; \
                 the bid interval would be empty"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Generates a campaign from `cfg`. Deterministic: the same config
/// (including seed) yields a field-for-field identical campaign.
///
/// The RNG is ChaCha8 seeded with `cfg.seed`, consumed in a fixed order:
/// first every task (location x, y, then value), then every participant
/// (location x, y — redrawn until the interest set is nonempty — then
/// reputation, collective bid, then one per-task bid per interested task
/// in ascending task-id order). Reputation-unaware campaigns consume the
/// reputation draw but fix the stored value at 1, so both modes place
/// tasks and participants identically for a given seed.
pub fn generate_campaign(cfg: &GenConfig) -> Result<Campaign, DomainError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let side = cfg.area_side;

    let tasks: Vec<Task> = (0..cfg.n_tasks)
        .map(|id| {
            let location = Point {
                x: rng.gen_range(0.0..=side),
                y: rng.gen_range(0.0..=side),
            };
            let value = rng.gen_range(cfg.value_range.0..=cfg.value_range.1);
            Task { id, location, value }
        })
        .collect();

    let mut participants = Vec::with_capacity(cfg.n_participants);
    for id in 0..cfg.n_participants {
        // Relocate until the interest set is nonempty: every bidder must
        // hold at least one task.
        let (location, interested_tasks) = loop {
            let location = Point {
                x: rng.gen_range(0.0..=side),
                y: rng.gen_range(0.0..=side),
            };
            let interested: Vec<TaskId> = tasks
                .iter()
                .filter(|t| t.location.distance(&location) <= cfg.interest_radius)
                .map(|t| t.id)
                .collect();
            if !interested.is_empty() {
                break (location, interested);
            }
        };
        let rep_draw = rng.gen_range(cfg.reputation_range.0..=cfg.reputation_range.1);
        let reputation = match cfg.mode {
            Mode::ReputationAware => rep_draw,
            Mode::ReputationUnaware => 1.0,
        };
        let collective_bid =
            rng.gen_range(cfg.collective_bid_range.0..=cfg.collective_bid_range.1);
        let descriptive_bids: BTreeMap<TaskId, f64> = interested_tasks
            .iter()
            .map(|&j| {
                let v = tasks[j].value;
                let lo = (v - cfg.alpha).max(MIN_PER_TASK_BID);
                let hi = v + cfg.alpha;
                (j, rng.gen_range(lo..=hi))
            })
            .collect();
        participants.push(Participant {
            id,
            location,
            radius: cfg.interest_radius,
            interested_tasks,
            collective_bid,
            descriptive_bids,
            reputation,
            private_cost: collective_bid,
        });
    }

    Ok(Campaign {
        tasks,
        participants,
        mode: cfg.mode,
    })
}

/// Sum of the participant's descriptive bids over `subset`.
///
/// Errors if `subset` contains a task the participant did not bid on.
pub fn sum_descriptive_bids(p: &Participant, subset: &[TaskId]) -> Result<f64, DomainError> {
    let mut total = 0.0;
    for &j in subset {
        match p.descriptive_bids.get(&j) {
            Some(b) => total += b,
            None => {
                return Err(DomainError::NotInterested {
                    participant: p.id,
                    task: j,
                })
            }
        }
    }
    Ok(total)
}

/// Reputational marginal value of `p` against an already-covered task set:
/// the participant's reputation times the summed values of its interested
/// tasks not yet covered. With `reputation_aware` false the reputation
/// factor is fixed at 1.
///
/// The sum runs over interested tasks in ascending id order and is scaled
/// by the reputation afterwards; every caller that needs bit-identical
/// scores recomputes it the same way.
pub fn marginal_value(
    p: &Participant,
    covered: &[bool],
    tasks: &[Task],
    reputation_aware: bool,
) -> f64 {
    let mut sum = 0.0;
    for &j in &p.interested_tasks {
        if !covered[j] {
            sum += tasks[j].value;
        }
    }
    let r = if reputation_aware { p.reputation } else { 1.0 };
    r * sum
}
