//! Monte-Carlo scenario runner: derives one child seed per auction,
//! generates the campaign, runs the requested mechanism, and collects
//! per-auction metric rows. Everything except wall time is a pure
//! function of the scenario, so repeated runs produce identical bytes.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::domain::{generate_campaign, Campaign, GenConfig, Mode};
use crate::error::ScenarioError;
use crate::greedy::run_primary;
use crate::metrics::{metrics_for_primary, metrics_for_ptb, metrics_for_two_stage, AuctionMetrics};
use crate::pertask::{run_ptb, PtbPaymentRule};
use crate::twostage::run_2sb;

/// The six mechanisms under study. The single-stage baselines are the
/// reputation-unaware and reputation-aware specializations of stage one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    Msensing,
    Tscm,
    #[serde(rename = "2sb-ru")]
    TwoStageRu,
    #[serde(rename = "2sb-ra")]
    TwoStageRa,
    PtbRu,
    PtbRa,
}

impl Mechanism {
    pub const ALL: [Mechanism; 6] = [
        Mechanism::Msensing,
        Mechanism::Tscm,
        Mechanism::TwoStageRu,
        Mechanism::TwoStageRa,
        Mechanism::PtbRu,
        Mechanism::PtbRa,
    ];

    /// Reputation mode this mechanism requires of its campaigns.
    pub fn mode(self) -> Mode {
        match self {
            Mechanism::Msensing | Mechanism::TwoStageRu | Mechanism::PtbRu => {
                Mode::ReputationUnaware
            }
            Mechanism::Tscm | Mechanism::TwoStageRa | Mechanism::PtbRa => Mode::ReputationAware,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Msensing => "msensing",
            Mechanism::Tscm => "tscm",
            Mechanism::TwoStageRu => "2sb-ru",
            Mechanism::TwoStageRa => "2sb-ra",
            Mechanism::PtbRu => "ptb-ru",
            Mechanism::PtbRa => "ptb-ra",
        }
    }

    pub fn from_name(s: &str) -> Option<Mechanism> {
        Mechanism::ALL.iter().copied().find(|m| m.name() == s)
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which generation parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Tasks,
    Participants,
    Auctions,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Tasks => "tasks",
            SweepAxis::Participants => "participants",
            SweepAxis::Auctions => "auctions",
        }
    }

    pub fn from_name(s: &str) -> Option<SweepAxis> {
        match s {
            "tasks" => Some(SweepAxis::Tasks),
            "participants" => Some(SweepAxis::Participants),
            "auctions" => Some(SweepAxis::Auctions),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<u64>,
}

/// One batch of auctions for a single mechanism, optionally swept along
/// one axis. The base seed lives in `gen.seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mechanism: Mechanism,
    pub gen: GenConfig,
    pub n_auctions: usize,
    pub sweep: Option<Sweep>,
    pub ptb_rule: PtbPaymentRule,
}

impl Scenario {
    /// Builds a scenario, forcing the generation mode to match the
    /// mechanism (reputation-aware mechanisms sample reputations,
    /// reputation-unaware ones pin them at 1).
    pub fn new(mechanism: Mechanism, mut gen: GenConfig, n_auctions: usize) -> Scenario {
        gen.mode = mechanism.mode();
        Scenario {
            mechanism,
            gen,
            n_auctions,
            sweep: None,
            ptb_rule: PtbPaymentRule::default(),
        }
    }

    pub fn with_sweep(mut self, axis: SweepAxis, values: Vec<u64>) -> Scenario {
        self.sweep = Some(Sweep { axis, values });
        self
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.gen.mode != self.mechanism.mode() {
            return Err(ScenarioError::Invalid(format!(
                "mechanism {} requires {:?} campaigns",
                self.mechanism,
                self.mechanism.mode()
            )));
        }
        if self.n_auctions == 0 && self.sweep.as_ref().map_or(true, |s| s.axis != SweepAxis::Auctions)
        {
            return Err(ScenarioError::Invalid("n_auctions must be positive".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(ScenarioError::Invalid("sweep grid is empty".into()));
            }
            if sweep.values.iter().any(|&v| v == 0) {
                return Err(ScenarioError::Invalid("sweep grid values must be positive".into()));
            }
        }
        self.gen.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))
    }

    /// Generation config at one grid point.
    fn gen_at(&self, axis: Option<SweepAxis>, value: u64) -> GenConfig {
        let mut gen = self.gen.clone();
        match axis {
            Some(SweepAxis::Tasks) => gen.n_tasks = value as usize,
            Some(SweepAxis::Participants) => gen.n_participants = value as usize,
            Some(SweepAxis::Auctions) | None => {}
        }
        gen
    }

    /// Auctions to run at one grid point. Sweeping the auction axis makes
    /// the grid value itself the auction count.
    fn auctions_at(&self, axis: Option<SweepAxis>, value: u64) -> usize {
        match axis {
            Some(SweepAxis::Auctions) => value as usize,
            _ => self.n_auctions,
        }
    }

    fn grid(&self) -> (Option<SweepAxis>, Vec<u64>) {
        match &self.sweep {
            Some(sweep) => (Some(sweep.axis), sweep.values.clone()),
            None => (None, vec![0]),
        }
    }
}

/// One result row per (grid point, auction index).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub auction: usize,
    pub grid_axis: &'static str,
    pub grid_value: u64,
    pub seed: u64,
    pub cr: f64,
    pub avg_user_utility: f64,
    pub n_primary: usize,
    pub n_secondary: usize,
    pub total_payment: f64,
    /// Wall time of this auction; informational only, never serialized.
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub rows: Vec<ResultRow>,
}

pub const CSV_HEADER: &str =
    "auction,grid_axis,grid_value,seed,cr,avg_user_utility,n_primary,n_secondary,total_payment";

/// Formats with six significant digits, plain decimal notation.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let digits_before = x.abs().log10().floor() as i32 + 1;
    let decimals = (6 - digits_before).max(0) as usize;
    format!("{x:.decimals$}")
}

impl ScenarioResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.auction,
                r.grid_axis,
                r.grid_value,
                r.seed,
                fmt_sig6(r.cr),
                fmt_sig6(r.avg_user_utility),
                r.n_primary,
                r.n_secondary,
                fmt_sig6(r.total_payment),
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())
    }

    /// Sidecar manifest recording the full configuration that produced a
    /// result file.
    pub fn manifest_toml(&self) -> String {
        #[derive(serde::Serialize)]
        struct Manifest<'a> {
            mechanism: Mechanism,
            n_auctions: usize,
            sweep: Option<&'a Sweep>,
            ptb_payment_rule: &'static str,
            generation: &'a GenConfig,
            notes: &'static str,
        }
        let manifest = Manifest {
            mechanism: self.scenario.mechanism,
            n_auctions: self.scenario.n_auctions,
            sweep: self.scenario.sweep.as_ref(),
            ptb_payment_rule: match self.scenario.ptb_rule {
                PtbPaymentRule::Critical => "critical",
                PtbPaymentRule::BidEqual => "bid-equal",
            },
            generation: &self.scenario.gen,
            notes: "generation parameters not set on the command line are \
                    built-in defaults of the simulation setup",
        };
        toml::to_string(&manifest).expect("manifest serializes")
    }

    pub fn write_manifest(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.manifest_toml())
    }

    pub fn mean_cr(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.cr))
    }

    /// Mean clearance rate per grid point, in grid order.
    pub fn mean_cr_by_grid(&self) -> Vec<(u64, f64)> {
        let (_, values) = self.scenario.grid();
        values
            .iter()
            .map(|&v| {
                (v, mean(self.rows.iter().filter(|r| r.grid_value == v).map(|r| r.cr)))
            })
            .collect()
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for one auction: a SplitMix64 chain over the base seed, the
/// grid value, and the auction index. Mechanism-independent, so two
/// mechanisms compared under the same scenario consume identical
/// campaigns.
pub fn child_seed(base: u64, grid_value: u64, auction: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ grid_value) ^ auction)
}

/// Runs one auction under `mechanism` and reduces it to metrics.
pub fn run_auction(c: &Campaign, mechanism: Mechanism, ptb_rule: PtbPaymentRule) -> AuctionMetrics {
    match mechanism {
        Mechanism::Msensing | Mechanism::Tscm => metrics_for_primary(c, &run_primary(c)),
        Mechanism::TwoStageRu | Mechanism::TwoStageRa => metrics_for_two_stage(c, &run_2sb(c)),
        Mechanism::PtbRu | Mechanism::PtbRa => metrics_for_ptb(c, &run_ptb(c, ptb_rule)),
    }
}

/// Runs the whole scenario. Auctions execute in parallel; rows come back
/// ordered by (grid point, auction index) regardless of execution order.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioResult, ScenarioError> {
    s.validate()?;
    let (axis, grid_values) = s.grid();
    let axis_name = axis.map_or("none", SweepAxis::name);
    let mut jobs: Vec<(u64, usize)> = Vec::new();
    for &gv in &grid_values {
        for a in 0..s.auctions_at(axis, gv) {
            jobs.push((gv, a));
        }
    }
    let rows: Vec<ResultRow> = jobs
        .par_iter()
        .map(|&(gv, auction)| {
            let seed = child_seed(s.gen.seed, gv, auction as u64);
            let mut gen = s.gen_at(axis, gv);
            gen.seed = seed;
            let campaign = generate_campaign(&gen)
                .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
            let start = Instant::now();
            let m = run_auction(&campaign, s.mechanism, s.ptb_rule);
            Ok(ResultRow {
                auction,
                grid_axis: axis_name,
                grid_value: gv,
                seed,
                cr: m.clearance_rate,
                avg_user_utility: m.avg_user_utility,
                n_primary: m.n_primary,
                n_secondary: m.n_secondary,
                total_payment: m.total_payments,
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect::<Result<_, ScenarioError>>()?;
    Ok(ScenarioResult { scenario: s.clone(), rows })
}

/// Paired per-auction clearance rates of two mechanisms on identical
/// campaigns.
#[derive(Debug, Clone)]
pub struct Comparison {
    /// Fraction of auctions where mechanism B strictly beats mechanism A
    /// on clearance rate.
    pub frequency: f64,
    /// (auction, seed, cr_a, cr_b) per auction, auction-ordered.
    pub rows: Vec<(usize, u64, f64, f64)>,
}

/// Head-to-head comparison. Both scenarios must share generation config,
/// seeds, sweep, and auction count; only the mechanism differs. Returns
/// the fraction of auctions where `b`'s clearance rate strictly exceeds
/// `a`'s.
pub fn compare_head_to_head(a: &Scenario, b: &Scenario) -> Result<Comparison, ScenarioError> {
    if a.mechanism == b.mechanism {
        return Err(ScenarioError::MismatchedComparison(
            "mechanisms must differ".into(),
        ));
    }
    if a.gen != b.gen {
        return Err(ScenarioError::MismatchedComparison(
            "generation configs differ (note: mechanisms of different \
             reputation modes cannot share campaigns)"
                .into(),
        ));
    }
    if a.n_auctions != b.n_auctions || a.sweep != b.sweep {
        return Err(ScenarioError::MismatchedComparison(
            "auction counts and sweeps must match".into(),
        ));
    }
    let ra = run_scenario(a)?;
    let rb = run_scenario(b)?;
    let mut wins = 0usize;
    let rows: Vec<(usize, u64, f64, f64)> = ra
        .rows
        .iter()
        .zip(&rb.rows)
        .map(|(x, y)| {
            debug_assert_eq!(x.seed, y.seed);
            if y.cr > x.cr {
                wins += 1;
            }
            (x.auction, x.seed, x.cr, y.cr)
        })
        .collect();
    let frequency = if rows.is_empty() { 0.0 } else { wins as f64 / rows.len() as f64 };
    Ok(Comparison { frequency, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(mechanism: Mechanism, seed: u64) -> Scenario {
        let gen = GenConfig {
            n_tasks: 20,
            n_participants: 20,
            area_side: 300.0,
            seed,
            ..GenConfig::default()
        };
        Scenario::new(mechanism, gen, 5)
    }

    #[test]
    fn row_counts_follow_the_grid() {
        let s = tiny(Mechanism::TwoStageRu, 1)
            .with_sweep(SweepAxis::Participants, (1..=6).map(|k| k * 10).collect());
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.rows.len(), 30); // 6 grid points x 5 auctions
        let s2 = tiny(Mechanism::Msensing, 1);
        assert_eq!(run_scenario(&s2).unwrap().rows.len(), 5);
    }

    #[test]
    fn csv_is_deterministic() {
        let s = tiny(Mechanism::TwoStageRa, 9);
        let a = run_scenario(&s).unwrap().to_csv();
        let b = run_scenario(&s).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with(CSV_HEADER));
    }

    #[test]
    fn comparison_requires_matching_configs() {
        let a = tiny(Mechanism::TwoStageRu, 1);
        let mut b = tiny(Mechanism::PtbRu, 1);
        assert!(compare_head_to_head(&a, &b).is_ok());
        b.gen.seed = 2;
        assert!(compare_head_to_head(&a, &b).is_err());
        let c = tiny(Mechanism::TwoStageRu, 1);
        assert!(compare_head_to_head(&a, &c).is_err());
        // Different reputation modes can never share campaigns.
        let d = tiny(Mechanism::PtbRa, 1);
        assert!(compare_head_to_head(&a, &d).is_err());
    }

    #[test]
    fn self_comparison_strictly_wins_nothing() {
        let a = tiny(Mechanism::TwoStageRu, 3);
        let b = tiny(Mechanism::Msensing, 3);
        let cmp = compare_head_to_head(&b, &a).unwrap();
        // Two-stage dominates its own stage one, never the reverse.
        let reverse = compare_head_to_head(&a, &b).unwrap();
        assert_eq!(reverse.frequency, 0.0);
        assert!(cmp.frequency >= 0.0);
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.0), "0.00000");
        assert_eq!(fmt_sig6(0.24), "0.240000");
        assert_eq!(fmt_sig6(123.456), "123.456");
        assert_eq!(fmt_sig6(1234567.0), "1234567");
    }

    #[test]
    fn seeds_are_mechanism_independent() {
        assert_eq!(child_seed(1, 0, 5), child_seed(1, 0, 5));
        assert_ne!(child_seed(1, 0, 5), child_seed(1, 0, 6));
        assert_ne!(child_seed(1, 10, 5), child_seed(1, 20, 5));
        assert_ne!(child_seed(1, 0, 5), child_seed(2, 0, 5));
    }
}
