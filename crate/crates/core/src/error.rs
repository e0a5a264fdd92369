use thiserror::Error;

use crate::domain::{ParticipantId, TaskId};

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("task ids must be contiguous from 0")]
    NonContiguousTaskIds,
    #[error("participant ids must be contiguous from 0")]
    NonContiguousParticipantIds,
    #[error("task {task} has nonpositive value")]
    NonPositiveValue { task: TaskId },
    #[error("participant {participant} has an empty interest set")]
    EmptyInterestSet { participant: ParticipantId },
    #[error("participant {participant} has a nonpositive bid or cost")]
    NonPositiveBid { participant: ParticipantId },
    #[error("participant {participant} reputation {value} outside (0, 1]")]
    ReputationOutOfRange { participant: ParticipantId, value: f64 },
    #[error("participant {participant} interest set is not strictly ascending")]
    UnsortedInterestSet { participant: ParticipantId },
    #[error("reference to unknown task {task}")]
    UnknownTask { task: TaskId },
    #[error("participant {participant} descriptive bids do not match its interest set")]
    DescriptiveBidMismatch { participant: ParticipantId },
    #[error("participant {participant} did not bid on task {task}")]
    NotInterested { participant: ParticipantId, task: TaskId },
}

#[derive(Debug, Error, PartialEq)]
pub enum MechanismError {
    #[error("winner {participant} is not a campaign participant")]
    UnknownWinner { participant: ParticipantId },
    #[error("reputation policy returned {value} for participant {participant}; must be in (0, 1]")]
    InvalidReputationUpdate { participant: ParticipantId, value: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("clearance rate undefined for a campaign with zero tasks")]
    ZeroTasks,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("head-to-head comparison requires identical generation configs and seeds: {0}")]
    MismatchedComparison(String),
}
