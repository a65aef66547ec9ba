//! Micro-level shift metrics between consecutive snapshots: classification,
//! EPOC decomposition, curves over the friends' average, movement maps and
//! neighborhood composition.

mod curves;
mod epoc;
mod homophily;
mod shift;

use serde::{Deserialize, Serialize};

pub use curves::{
    is_radicalizing_transition, magnitude_curves, movement_map, movement_probability_curves, movement_zone,
    pos_neg_ratio, radicalization_curves, strata_labels, MovementMap, Zone,
};
pub use epoc::{
    distance_curves, epoc_by_neighbor_stability, epoc_curves, epoc_decomposition, eq3_inequalities, group_pair_epoc, EpocCell,
    EpocDecomposition, InequalityResult, Relation, Verdict, CROSS_GROUP_ORDERINGS,
};
pub use homophily::{homophily_table, NULL_ROW};
pub use shift::{
    classify_shifts, mirror_record, Direction, ShiftClass, ShiftOutcome, ShiftRecord, SkipClass,
    NEIGHBOR_STABILITY_THRESHOLD, REMARKABLE_THRESHOLD,
};

use crate::error::Result;
use crate::graph::SocialGraph;
use crate::model::{IdeologicalGroup, OpinionSnapshot};
use crate::table::MetricTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    /// Width of the friends'-average bins; must divide 1.
    pub bin_width: f64,
    /// Keep only agents whose friends' average moved by less than 0.05.
    pub require_neighbor_stable: bool,
    /// Cells with fewer samples are flagged.
    pub support_floor: u64,
    /// Inner edges of the friends'-deviation strata.
    pub sigma_strata: Vec<f64>,
    /// Inner edges of the degree strata for neighborhood composition.
    pub degree_strata: Vec<usize>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            bin_width: 0.05,
            require_neighbor_stable: true,
            support_floor: 20,
            sigma_strata: Vec::new(),
            degree_strata: Vec::new(),
        }
    }
}

impl AnalysisOptions {
    pub fn validate(&self) -> Result<()> {
        crate::table::Binning::new(self.bin_width)?;
        let ascending = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !ascending(&self.sigma_strata) || self.sigma_strata.iter().any(|s| !(*s > 0.0 && *s <= 0.5)) {
            return Err(crate::Error::InvalidParameter(
                "sigma strata must be ascending values in (0, 0.5]".into(),
            ));
        }
        if !self.degree_strata.windows(2).all(|w| w[0] < w[1]) || self.degree_strata.first() == Some(&0) {
            return Err(crate::Error::InvalidParameter(
                "degree strata must be ascending positive integers".into(),
            ));
        }
        Ok(())
    }
}

/// The two transitions that move an agent with a clear bias to the edge.
pub const RADICALIZATION_TRANSITIONS: [(IdeologicalGroup, IdeologicalGroup); 2] = [
    (IdeologicalGroup::L, IdeologicalGroup::SL),
    (IdeologicalGroup::C, IdeologicalGroup::SC),
];

/// Headline numbers for one snapshot pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairSummary {
    pub time_before: u32,
    pub time_after: u32,
    pub agents: usize,
    pub neighbor_stable_agents: usize,
    /// Over every agent.
    pub all_agents: EpocDecomposition,
    /// Over agents with a stable neighborhood, when any.
    pub stable_agents: Option<EpocDecomposition>,
    pub cross_group_orderings: Vec<InequalityResult>,
    pub mean_sigma_skipping: Option<f64>,
    pub mean_sigma_nonskipping: Option<f64>,
    pub group_populations_before: [usize; 5],
    pub group_populations_after: [usize; 5],
}

/// Records, summary and every metric table for one snapshot pair.
#[derive(Debug, Clone)]
pub struct PairAnalysis {
    pub records: Vec<ShiftRecord>,
    pub summary: PairSummary,
    pub epoc_curves: MetricTable,
    pub epoc_by_stability: MetricTable,
    pub distance_curves: MetricTable,
    pub radicalization: MetricTable,
    pub magnitude: MetricTable,
    pub pos_neg_ratio: MetricTable,
    pub movement_map: MovementMap,
    pub movement_probability: MetricTable,
}

impl PairAnalysis {
    pub fn tables(&self) -> Vec<MetricTable> {
        vec![
            self.epoc_curves.clone(),
            self.epoc_by_stability.clone(),
            self.distance_curves.clone(),
            self.radicalization.clone(),
            self.magnitude.clone(),
            self.pos_neg_ratio.clone(),
            self.movement_map.table(),
            self.movement_probability.clone(),
        ]
    }
}

fn mean_sigma<'a>(it: impl Iterator<Item = &'a ShiftRecord>) -> Option<f64> {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), r| (s + r.stats_before.std, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Runs the whole measurement pipeline on one snapshot pair.
pub fn analyze_pair(
    graph: &SocialGraph,
    before: &OpinionSnapshot,
    after: &OpinionSnapshot,
    opts: &AnalysisOptions,
) -> Result<PairAnalysis> {
    opts.validate()?;
    let records = classify_shifts(graph, before, after)?;
    let all_agents = epoc_decomposition(&records, false)?;
    let stable_agents = epoc_decomposition(&records, true).ok();
    let positive = || {
        records
            .iter()
            .filter(|r| (!opts.require_neighbor_stable || r.neighbor_stable) && r.is_positive())
    };
    let summary = PairSummary {
        time_before: before.time_index(),
        time_after: after.time_index(),
        agents: records.len(),
        neighbor_stable_agents: records.iter().filter(|r| r.neighbor_stable).count(),
        all_agents,
        stable_agents,
        cross_group_orderings: eq3_inequalities(&records, opts),
        mean_sigma_skipping: mean_sigma(positive().filter(|r| r.skip_class == SkipClass::Skipping)),
        mean_sigma_nonskipping: mean_sigma(positive().filter(|r| r.skip_class == SkipClass::NonSkipping)),
        group_populations_before: before.group_populations(),
        group_populations_after: after.group_populations(),
    };
    Ok(PairAnalysis {
        epoc_curves: epoc_curves(&records, opts)?,
        epoc_by_stability: epoc_by_neighbor_stability(&records, opts)?,
        distance_curves: distance_curves(&records, opts)?,
        radicalization: radicalization_curves(&records, &RADICALIZATION_TRANSITIONS, opts)?,
        magnitude: magnitude_curves(&records, opts)?,
        pos_neg_ratio: pos_neg_ratio(&records, opts)?,
        movement_map: movement_map(&records),
        movement_probability: movement_probability_curves(&records, opts)?,
        summary,
        records,
    })
}
