//! Tiny hand-built campaigns with fully traced outcomes, shared by unit,
//! property, and acceptance tests.

use std::collections::BTreeMap;

use crate::domain::{Campaign, Mode, Participant, Point, Task, TaskId};

fn task(id: TaskId, x: f64, value: f64) -> Task {
    Task {
        id,
        location: Point { x, y: 0.0 },
        value,
    }
}

fn participant(
    id: usize,
    interested: &[TaskId],
    collective_bid: f64,
    descriptive: &[(TaskId, f64)],
) -> Participant {
    Participant {
        id,
        location: Point { x: id as f64, y: 1.0 },
        radius: 100.0,
        interested_tasks: interested.to_vec(),
        collective_bid,
        descriptive_bids: descriptive.iter().copied().collect::<BTreeMap<_, _>>(),
        reputation: 1.0,
        private_cost: collective_bid,
    }
}

/// Three tasks of value 3 in a chain of overlapping bidders:
/// participant 0 holds {0, 1} at collective bid 4, participant 1 holds
/// {1, 2} at 5, participant 2 holds {2} at 2. Stage-one selection admits
/// 0 then 2 and pays them 6 and 3.
pub fn campaign_a() -> Campaign {
    let c = Campaign {
        tasks: vec![task(0, 0.0, 3.0), task(1, 10.0, 3.0), task(2, 20.0, 3.0)],
        participants: vec![
            participant(0, &[0, 1], 4.0, &[(0, 2.0), (1, 2.0)]),
            participant(1, &[1, 2], 5.0, &[(1, 2.5), (2, 2.5)]),
            participant(2, &[2], 2.0, &[(2, 1.5)]),
        ],
        mode: Mode::ReputationUnaware,
    };
    debug_assert!(c.validate().is_ok());
    c
}

/// `campaign_a` plus an isolated task 3 (value 3) whose only bidder,
/// participant 3, asks a collective 10 but a descriptive 2. Stage one
/// never admits participant 3; the second stage picks it up.
pub fn campaign_b() -> Campaign {
    let mut c = campaign_a();
    c.tasks.push(task(3, 30.0, 3.0));
    c.participants.push(participant(3, &[3], 10.0, &[(3, 2.0)]));
    debug_assert!(c.validate().is_ok());
    c
}
