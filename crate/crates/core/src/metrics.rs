//! Clearance rate and user-utility accounting.

use std::collections::BTreeMap;

use crate::domain::{Campaign, ParticipantId};
use crate::error::MetricsError;
use crate::greedy::PrimaryResult;
use crate::pertask::PerTaskOutcome;
use crate::twostage::TwoStageOutcome;

/// Per-auction metrics. Primary winners earn payment minus private cost;
/// secondary winners earn their descriptive payment minus a cost resolved
/// against their collective bid.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionMetrics {
    pub clearance_rate: f64,
    pub primary_utils: BTreeMap<ParticipantId, f64>,
    pub secondary_utils: BTreeMap<ParticipantId, f64>,
    pub overall_utility: f64,
    pub avg_user_utility: f64,
    pub total_payments: f64,
    pub n_primary: usize,
    pub n_secondary: usize,
}

/// Fraction of campaign tasks covered. Rejects empty campaigns.
pub fn clearance_rate(n_covered: usize, n_tasks: usize) -> Result<f64, MetricsError> {
    if n_tasks == 0 {
        return Err(MetricsError::ZeroTasks);
    }
    Ok(n_covered as f64 / n_tasks as f64)
}

/// Primary-winner utility: payment minus private cost.
pub fn primary_utility(payment: f64, cost: f64) -> f64 {
    payment - cost
}

/// Secondary-winner utility. The winner's cost is its collective bid when
/// the descriptive payment reaches it, otherwise the descriptive payment
/// itself (and the utility collapses to zero).
pub fn secondary_utility(descriptive_payment: f64, collective_bid: f64) -> f64 {
    if descriptive_payment >= collective_bid {
        descriptive_payment - collective_bid
    } else {
        0.0
    }
}

/// Overall utility (plain sum of both classes) and average user utility
/// (per-class means summed; an empty class contributes zero).
pub fn overall_and_average(
    primary_utils: &BTreeMap<ParticipantId, f64>,
    secondary_utils: &BTreeMap<ParticipantId, f64>,
) -> (f64, f64) {
    let sum_p: f64 = primary_utils.values().sum();
    let sum_s: f64 = secondary_utils.values().sum();
    let overall = sum_p + sum_s;
    let mut avg = 0.0;
    if !primary_utils.is_empty() {
        avg += sum_p / primary_utils.len() as f64;
    }
    if !secondary_utils.is_empty() {
        avg += sum_s / secondary_utils.len() as f64;
    }
    (overall, avg)
}

fn assemble(
    c: &Campaign,
    n_covered: usize,
    primary_utils: BTreeMap<ParticipantId, f64>,
    secondary_utils: BTreeMap<ParticipantId, f64>,
    total_payments: f64,
) -> AuctionMetrics {
    let clearance =
        clearance_rate(n_covered, c.tasks.len()).expect("campaigns have at least one task");
    let (overall_utility, avg_user_utility) =
        overall_and_average(&primary_utils, &secondary_utils);
    AuctionMetrics {
        clearance_rate: clearance,
        n_primary: primary_utils.len(),
        n_secondary: secondary_utils.len(),
        primary_utils,
        secondary_utils,
        overall_utility,
        avg_user_utility,
        total_payments,
    }
}

/// Metrics for a stage-one-only auction.
pub fn metrics_for_primary(c: &Campaign, r: &PrimaryResult) -> AuctionMetrics {
    let primary_utils: BTreeMap<ParticipantId, f64> = r
        .winners
        .iter()
        .map(|&w| (w, primary_utility(r.payment(w), c.participants[w].private_cost)))
        .collect();
    assemble(c, r.covered.len(), primary_utils, BTreeMap::new(), r.total_payment)
}

/// Metrics for a two-stage auction.
pub fn metrics_for_two_stage(c: &Campaign, out: &TwoStageOutcome) -> AuctionMetrics {
    let primary_utils: BTreeMap<ParticipantId, f64> = out
        .primary
        .winners
        .iter()
        .map(|&w| {
            (w, primary_utility(out.primary.payment(w), c.participants[w].private_cost))
        })
        .collect();
    let secondary_utils: BTreeMap<ParticipantId, f64> = out
        .secondary_winners
        .iter()
        .map(|&w| {
            (
                w,
                secondary_utility(
                    out.secondary_payments[&w],
                    c.participants[w].collective_bid,
                ),
            )
        })
        .collect();
    assemble(
        c,
        out.covered_final.len(),
        primary_utils,
        secondary_utils,
        out.total_payment(),
    )
}

/// Metrics for a per-task auction. There is a single winner class, kept in
/// the primary slot; a winner's cost is its descriptive sum over the tasks
/// it was actually assigned.
pub fn metrics_for_ptb(c: &Campaign, out: &PerTaskOutcome) -> AuctionMetrics {
    let primary_utils: BTreeMap<ParticipantId, f64> = out
        .winners
        .iter()
        .map(|&w| {
            let cost: f64 = out.assignments[&w]
                .iter()
                .map(|j| c.participants[w].descriptive_bids[j])
                .sum();
            (w, primary_utility(out.payments[&w], cost))
        })
        .collect();
    assemble(
        c,
        out.covered_final.len(),
        primary_utils,
        BTreeMap::new(),
        out.total_payment(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::greedy::run_primary;
    use crate::twostage::run_2sb;

    #[test]
    fn clearance_rates_on_fixture() {
        let c = fixtures::campaign_b();
        let two_stage = run_2sb(&c);
        assert_eq!(metrics_for_two_stage(&c, &two_stage).clearance_rate, 1.0);

        let stage_one = run_primary(&c);
        assert_eq!(metrics_for_primary(&c, &stage_one).clearance_rate, 0.75);

        assert_eq!(clearance_rate(0, 4).unwrap(), 0.0);
        assert!(clearance_rate(0, 0).is_err());
    }

    #[test]
    fn utility_formulas() {
        assert_eq!(primary_utility(6.0, 4.0), 2.0);
        assert_eq!(primary_utility(3.0, 2.0), 1.0);
        assert_eq!(primary_utility(5.0, 5.0), 0.0);

        // Payment below the collective bid: cost collapses to the payment.
        assert_eq!(secondary_utility(2.0, 10.0), 0.0);
        assert_eq!(secondary_utility(7.0, 5.0), 2.0);
    }

    #[test]
    fn overall_and_average_fixture() {
        let c = fixtures::campaign_b();
        let m = metrics_for_two_stage(&c, &run_2sb(&c));
        assert_eq!(m.overall_utility, 3.0);
        assert_eq!(m.avg_user_utility, 1.5);
        assert_eq!(m.n_primary, 2);
        assert_eq!(m.n_secondary, 1);
        assert_eq!(m.total_payments, 11.0);
        assert_eq!(m.secondary_utils[&3], 0.0);
    }

    #[test]
    fn empty_classes_average_to_zero() {
        let (overall, avg) = overall_and_average(&BTreeMap::new(), &BTreeMap::new());
        assert_eq!((overall, avg), (0.0, 0.0));

        let one: BTreeMap<_, _> = [(0, 4.0)].into_iter().collect();
        let (overall, avg) = overall_and_average(&one, &BTreeMap::new());
        assert_eq!((overall, avg), (4.0, 4.0));
    }

    #[test]
    fn overall_is_exact_sum_of_classes() {
        let c = fixtures::campaign_b();
        let m = metrics_for_two_stage(&c, &run_2sb(&c));
        let expected: f64 =
            m.primary_utils.values().sum::<f64>() + m.secondary_utils.values().sum::<f64>();
        assert_eq!(m.overall_utility, expected);
    }
}
