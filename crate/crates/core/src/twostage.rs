//! The two-stage mechanism: stage one over collective bids, then a
//! budget-funded second stage that buys still-uncovered tasks at the
//! bidders' descriptive prices.

use std::collections::{BTreeMap, BTreeSet};

use crate::domain::{Campaign, Mode, ParticipantId, TaskId};
use crate::error::MechanismError;
use crate::greedy::{run_primary, PrimaryResult};

/// Full outcome of a two-stage auction.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageOutcome {
    pub primary: PrimaryResult,
    /// Secondary winners in admission order. Disjoint from the primary set.
    pub secondary_winners: Vec<ParticipantId>,
    /// Tasks assigned to each secondary winner; pairwise disjoint and
    /// disjoint from primary coverage.
    pub secondary_assignments: BTreeMap<ParticipantId, BTreeSet<TaskId>>,
    /// Each secondary winner is paid its descriptive-bid sum over its
    /// assigned tasks.
    pub secondary_payments: BTreeMap<ParticipantId, f64>,
    /// Remaining budget: the entry 0 is total task value minus primary
    /// payments, followed by the balance after each secondary admission.
    pub budget_trace: Vec<f64>,
    pub covered_final: BTreeSet<TaskId>,
}

impl TwoStageOutcome {
    pub fn total_payment(&self) -> f64 {
        self.primary.total_payment + self.secondary_payments.values().sum::<f64>()
    }
}

/// Residual platform budget after stage one: the sum of all task values
/// minus the total primary payments. May be negative, in which case the
/// second stage never runs.
pub fn compute_budget(c: &Campaign, primary: &PrimaryResult) -> f64 {
    c.total_task_value() - primary.total_payment
}

/// Runs both stages.
///
/// The second stage runs only when tasks remain uncovered and the budget
/// is positive. Candidates are the non-winners still holding at least one
/// uncovered task, each pruned down to its live (uncovered) tasks. The
/// greedy picks the candidate maximizing reputational live value minus the
/// reputation-scaled descriptive sum, and admits it only while the updated
/// budget `B*R_h - B_h/R_h` stays nonnegative. On admission the candidate
/// receives exactly its live tasks, is paid its descriptive sum over them,
/// and every other candidate is pruned accordingly.
pub fn run_2sb(c: &Campaign) -> TwoStageOutcome {
    let aware = c.mode == Mode::ReputationAware;
    let primary = run_primary(c);
    let m = c.tasks.len();
    let mut covered = vec![false; m];
    for &j in &primary.covered {
        covered[j] = true;
    }
    let mut budget = compute_budget(c, &primary);
    let mut budget_trace = vec![budget];
    let mut secondary_winners = Vec::new();
    let mut secondary_assignments = BTreeMap::new();
    let mut secondary_payments = BTreeMap::new();
    let mut n_covered = primary.covered.len();

    if n_covered < m && budget > 0.0 {
        let is_primary: Vec<bool> = {
            let mut v = vec![false; c.participants.len()];
            for &w in &primary.winners {
                v[w] = true;
            }
            v
        };
        // Live task sets for the candidate pool, pruned to uncovered tasks.
        let mut live: BTreeMap<ParticipantId, Vec<TaskId>> = c
            .participants
            .iter()
            .filter(|p| !is_primary[p.id])
            .map(|p| {
                let tasks: Vec<TaskId> = p
                    .interested_tasks
                    .iter()
                    .copied()
                    .filter(|&j| !covered[j])
                    .collect();
                (p.id, tasks)
            })
            .filter(|(_, tasks)| !tasks.is_empty())
            .collect();

        while n_covered < m {
            // Argmax of live reputational value minus scaled descriptive
            // sum; candidates with empty live sets are skipped. Ties go to
            // the higher id.
            let mut best: Option<(ParticipantId, f64, f64)> = None;
            for (&id, tasks) in &live {
                if tasks.is_empty() {
                    continue;
                }
                let p = &c.participants[id];
                let r = if aware { p.reputation } else { 1.0 };
                let value: f64 = r * tasks.iter().map(|&j| c.tasks[j].value).sum::<f64>();
                let bid_sum: f64 = tasks.iter().map(|&j| p.descriptive_bids[&j]).sum();
                let s = value - bid_sum / r;
                match best {
                    Some((_, bs, _)) if s < bs => {}
                    _ => best = Some((id, s, bid_sum)),
                }
            }
            let Some((h, _, bid_sum)) = best else { break };
            let r_h = if aware { c.participants[h].reputation } else { 1.0 };
            let updated = budget * r_h - bid_sum / r_h;
            if updated < 0.0 {
                break;
            }
            let assigned = live.remove(&h).unwrap();
            for &j in &assigned {
                covered[j] = true;
            }
            n_covered += assigned.len();
            for tasks in live.values_mut() {
                tasks.retain(|&j| !covered[j]);
            }
            secondary_assignments.insert(h, assigned.into_iter().collect::<BTreeSet<_>>());
            secondary_payments.insert(h, bid_sum);
            secondary_winners.push(h);
            budget = updated;
            budget_trace.push(budget);
        }
    }

    let covered_final = covered
        .iter()
        .enumerate()
        .filter_map(|(j, &v)| v.then_some(j))
        .collect();
    TwoStageOutcome {
        primary,
        secondary_winners,
        secondary_assignments,
        secondary_payments,
        budget_trace,
        covered_final,
    }
}

/// Reputation update rule applied to auction winners. Maps a winner id and
/// the finished outcome to the winner's new reputation.
pub trait ReputationPolicy {
    fn update(&self, winner: ParticipantId, outcome: &TwoStageOutcome, current: f64) -> f64;
}

/// Default post-auction policy: reputations are left unchanged.
pub struct IdentityPolicy;

impl ReputationPolicy for IdentityPolicy {
    fn update(&self, _winner: ParticipantId, _outcome: &TwoStageOutcome, current: f64) -> f64 {
        current
    }
}

impl<F> ReputationPolicy for F
where
    F: Fn(ParticipantId, &TwoStageOutcome, f64) -> f64,
{
    fn update(&self, winner: ParticipantId, outcome: &TwoStageOutcome, current: f64) -> f64 {
        self(winner, outcome, current)
    }
}

/// Applies `policy` to every winner (primary and secondary) of a finished
/// auction and returns the full updated reputation vector. Rejects
/// policies that step outside (0, 1].
pub fn reputation_hook(
    c: &Campaign,
    outcome: &TwoStageOutcome,
    policy: &dyn ReputationPolicy,
) -> Result<Vec<f64>, MechanismError> {
    let mut reputations: Vec<f64> = c.participants.iter().map(|p| p.reputation).collect();
    let winners = outcome
        .primary
        .winners
        .iter()
        .chain(&outcome.secondary_winners);
    for &w in winners {
        let updated = policy.update(w, outcome, reputations[w]);
        if !(updated > 0.0 && updated <= 1.0) {
            return Err(MechanismError::InvalidReputationUpdate {
                participant: w,
                value: updated,
            });
        }
        reputations[w] = updated;
    }
    Ok(reputations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn budget_from_chain_fixtures() {
        let a = fixtures::campaign_a();
        let pa = run_primary(&a);
        assert_eq!(compute_budget(&a, &pa), 0.0); // 9 - 9

        let b = fixtures::campaign_b();
        let pb = run_primary(&b);
        assert_eq!(compute_budget(&b, &pb), 3.0); // 12 - 9
    }

    #[test]
    fn budget_equals_total_value_without_winners() {
        let mut c = fixtures::campaign_a();
        for p in &mut c.participants {
            p.collective_bid = 100.0;
            p.private_cost = 100.0;
        }
        let primary = run_primary(&c);
        assert!(primary.winners.is_empty());
        assert_eq!(compute_budget(&c, &primary), 9.0);
    }

    #[test]
    fn second_stage_buys_the_isolated_task() {
        let c = fixtures::campaign_b();
        let out = run_2sb(&c);
        assert_eq!(out.secondary_winners, vec![3]);
        assert_eq!(out.secondary_assignments[&3], BTreeSet::from([3]));
        assert_eq!(out.secondary_payments[&3], 2.0);
        assert_eq!(out.budget_trace, vec![3.0, 1.0]);
        assert_eq!(out.covered_final, BTreeSet::from([0, 1, 2, 3]));
    }

    #[test]
    fn exhausted_pool_yields_no_secondary_winners() {
        let c = fixtures::campaign_a();
        let out = run_2sb(&c);
        assert!(out.secondary_winners.is_empty());
        assert_eq!(out.budget_trace, vec![0.0]);
        assert_eq!(out.covered_final, BTreeSet::from([0, 1, 2]));
    }

    #[test]
    fn fully_covered_stage_one_skips_stage_two() {
        let mut c = fixtures::campaign_a();
        // One cheap participant interested in everything.
        c.participants[0].interested_tasks = vec![0, 1, 2];
        c.participants[0].descriptive_bids =
            [(0, 1.0), (1, 1.0), (2, 1.0)].into_iter().collect();
        c.participants[0].collective_bid = 1.0;
        c.participants[0].private_cost = 1.0;
        let out = run_2sb(&c);
        assert_eq!(out.covered_final.len(), 3);
        assert!(out.secondary_winners.is_empty());
        assert_eq!(out.budget_trace.len(), 1);
    }

    #[test]
    fn hook_identity_and_constant_policies() {
        let c = fixtures::campaign_b();
        let out = run_2sb(&c);
        let unchanged = reputation_hook(&c, &out, &IdentityPolicy).unwrap();
        assert_eq!(unchanged, vec![1.0; 4]);

        let constant = |_: ParticipantId, _: &TwoStageOutcome, _: f64| 0.7;
        let updated = reputation_hook(&c, &out, &constant).unwrap();
        // Winners 0, 2 (primary) and 3 (secondary) move; 1 lost.
        assert_eq!(updated, vec![0.7, 1.0, 0.7, 0.7]);
    }

    #[test]
    fn hook_halving_only_hits_empty_assignments() {
        let c = fixtures::campaign_b();
        let out = run_2sb(&c);
        let halve_idle = |w: ParticipantId, o: &TwoStageOutcome, r: f64| {
            let idle = o.secondary_winners.contains(&w)
                && o.secondary_assignments.get(&w).is_none_or(|t| t.is_empty());
            if idle {
                r / 2.0
            } else {
                r
            }
        };
        // No secondary winner has an empty assignment, so nothing changes.
        let updated = reputation_hook(&c, &out, &halve_idle).unwrap();
        assert_eq!(updated, vec![1.0; 4]);
    }

    #[test]
    fn hook_rejects_out_of_range_updates() {
        let c = fixtures::campaign_b();
        let out = run_2sb(&c);
        let bad = |_: ParticipantId, _: &TwoStageOutcome, _: f64| 1.5;
        assert!(reputation_hook(&c, &out, &bad).is_err());
        let zero = |_: ParticipantId, _: &TwoStageOutcome, _: f64| 0.0;
        assert!(reputation_hook(&c, &out, &zero).is_err());
    }
}
