//! Stage-one winner selection and critical-payment determination over
//! collective bids. Parameterized by the campaign's reputation mode, this
//! is the whole auction for the single-stage baselines and the first stage
//! of the two-stage mechanism.

use std::collections::{BTreeMap, BTreeSet};

use crate::domain::{marginal_value, Campaign, Mode, ParticipantId, TaskId};
use crate::error::MechanismError;

/// Outcome of stage one: winners in selection order, the tasks they cover,
/// and the critical payment owed to each winner.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimaryResult {
    pub winners: Vec<ParticipantId>,
    pub covered: BTreeSet<TaskId>,
    /// Critical payments, keyed by winner id. Non-winners are paid nothing
    /// and carry no entry.
    pub payments: BTreeMap<ParticipantId, f64>,
    pub total_payment: f64,
    /// How many rival bidders the payment loop examined per winner. A
    /// winner with zero examined rivals (no other participant exists) is
    /// paid zero; callers that reason about individual rationality must
    /// treat that case separately.
    pub examined_rivals: BTreeMap<ParticipantId, usize>,
}

impl PrimaryResult {
    pub fn payment(&self, id: ParticipantId) -> f64 {
        self.payments.get(&id).copied().unwrap_or(0.0)
    }
}

/// Marginal utility the platform sees for `p` against `covered`:
/// reputational marginal value minus the reputation-scaled collective bid.
fn score(c: &Campaign, aware: bool, p: ParticipantId, covered: &[bool]) -> f64 {
    let p = &c.participants[p];
    let r = if aware { p.reputation } else { 1.0 };
    marginal_value(p, covered, &c.tasks, aware) - p.collective_bid / r
}

/// Best remaining candidate by marginal utility. Ties go to the higher
/// participant id.
fn best_candidate(
    c: &Campaign,
    aware: bool,
    covered: &[bool],
    excluded: &[bool],
) -> Option<(ParticipantId, f64)> {
    let mut best: Option<(ParticipantId, f64)> = None;
    for id in 0..c.participants.len() {
        if excluded[id] {
            continue;
        }
        let s = score(c, aware, id, covered);
        match best {
            Some((_, bs)) if s < bs => {}
            _ => best = Some((id, s)),
        }
    }
    best
}

/// Greedy winner selection: repeatedly admit the unselected participant
/// with the highest marginal utility while that utility is strictly
/// positive. Coverage accumulates by union over admitted interest sets.
pub fn select_primary(c: &Campaign) -> (Vec<ParticipantId>, BTreeSet<TaskId>) {
    let aware = c.mode == Mode::ReputationAware;
    let mut covered = vec![false; c.tasks.len()];
    let mut excluded = vec![false; c.participants.len()];
    let mut winners = Vec::new();
    while let Some((h, s)) = best_candidate(c, aware, &covered, &excluded) {
        if s <= 0.0 {
            break;
        }
        winners.push(h);
        excluded[h] = true;
        for &j in &c.participants[h].interested_tasks {
            covered[j] = true;
        }
    }
    let covered_set = covered
        .iter()
        .enumerate()
        .filter_map(|(j, &v)| v.then_some(j))
        .collect();
    (winners, covered_set)
}

/// Critical payment for each winner: the greedy is replayed over all other
/// participants, and at every pick `q` the winner's payment rises to the
/// bid level at which it would still have beaten `q`, capped by the
/// winner's own reputational value at that point. The replay stops after
/// the first pick with nonpositive marginal utility or when everyone has
/// been picked.
pub fn compute_payments(
    c: &Campaign,
    winners: &[ParticipantId],
) -> Result<(BTreeMap<ParticipantId, f64>, BTreeMap<ParticipantId, usize>), MechanismError> {
    let aware = c.mode == Mode::ReputationAware;
    let n = c.participants.len();
    for &w in winners {
        if w >= n {
            return Err(MechanismError::UnknownWinner { participant: w });
        }
    }
    let mut payments = BTreeMap::new();
    let mut examined_rivals = BTreeMap::new();
    for &i in winners {
        let mut excluded = vec![false; n];
        excluded[i] = true;
        let mut covered = vec![false; c.tasks.len()];
        let mut payment: f64 = 0.0;
        let mut examined = 0usize;
        while let Some((q, util_q)) = best_candidate(c, aware, &covered, &excluded) {
            examined += 1;
            let vi = marginal_value(&c.participants[i], &covered, &c.tasks, aware);
            payment = payment.max((vi - util_q).min(vi));
            excluded[q] = true;
            for &j in &c.participants[q].interested_tasks {
                covered[j] = true;
            }
            if util_q <= 0.0 {
                break;
            }
        }
        payments.insert(i, payment);
        examined_rivals.insert(i, examined);
    }
    Ok((payments, examined_rivals))
}

/// Runs selection and payment determination together.
pub fn run_primary(c: &Campaign) -> PrimaryResult {
    let (winners, covered) = select_primary(c);
    let (payments, examined_rivals) =
        compute_payments(c, &winners).expect("selected winners are participants");
    let total_payment = payments.values().sum();
    PrimaryResult {
        winners,
        covered,
        payments,
        total_payment,
        examined_rivals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn chain_fixture_selection() {
        let c = fixtures::campaign_a();
        let (winners, covered) = select_primary(&c);
        assert_eq!(winners, vec![0, 2]);
        assert_eq!(covered, BTreeSet::from([0, 1, 2]));
    }

    #[test]
    fn isolated_expensive_bidder_never_admitted() {
        let c = fixtures::campaign_b();
        let (winners, covered) = select_primary(&c);
        assert_eq!(winners, vec![0, 2]);
        assert_eq!(covered, BTreeSet::from([0, 1, 2]));
    }

    #[test]
    fn no_winners_when_bids_exceed_values() {
        let mut c = fixtures::campaign_a();
        for p in &mut c.participants {
            p.collective_bid = 100.0;
            p.private_cost = 100.0;
        }
        let (winners, covered) = select_primary(&c);
        assert!(winners.is_empty());
        assert!(covered.is_empty());
    }

    #[test]
    fn chain_fixture_payments() {
        let c = fixtures::campaign_a();
        let r = run_primary(&c);
        assert_eq!(r.payment(0), 6.0);
        assert_eq!(r.payment(2), 3.0);
        assert_eq!(r.total_payment, 9.0);
        assert_eq!(r.examined_rivals[&0], 2);
    }

    #[test]
    fn payments_unchanged_by_isolated_loser() {
        let c = fixtures::campaign_b();
        let r = run_primary(&c);
        assert_eq!(r.payment(0), 6.0);
        assert_eq!(r.payment(2), 3.0);
        assert_eq!(r.total_payment, 9.0);
    }

    #[test]
    fn sole_participant_is_paid_nothing() {
        let mut c = fixtures::campaign_a();
        c.participants.truncate(1);
        let r = run_primary(&c);
        assert_eq!(r.winners, vec![0]);
        assert_eq!(r.payment(0), 0.0);
        assert_eq!(r.examined_rivals[&0], 0);
    }

    #[test]
    fn unknown_winner_rejected() {
        let c = fixtures::campaign_a();
        assert!(compute_payments(&c, &[17]).is_err());
    }

    #[test]
    fn winner_with_one_hopeless_rival_is_paid_full_value() {
        // The rival's utility is nonpositive from the start, so the first
        // replay pick immediately caps the payment at the winner's value.
        let mut c = fixtures::campaign_a();
        c.participants.truncate(2);
        c.participants[1].collective_bid = 50.0;
        c.participants[1].private_cost = 50.0;
        let r = run_primary(&c);
        assert_eq!(r.winners, vec![0]);
        assert_eq!(r.payment(0), 6.0);
        assert_eq!(r.examined_rivals[&0], 1);
    }
}
