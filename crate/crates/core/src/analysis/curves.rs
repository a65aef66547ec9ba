use serde::Serialize;

use super::epoc::{filtered, pos_neg};
use super::shift::{Direction, ShiftRecord};
use super::AnalysisOptions;
use crate::error::{Error, Result};
use crate::model::IdeologicalGroup;
use crate::table::{Binning, MetricTable};

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// Labels for friends'-deviation strata given ascending inner edges.
pub fn strata_labels(edges: &[f64]) -> Vec<String> {
    let mut labels = Vec::with_capacity(edges.len() + 1);
    let mut lo = "0".to_string();
    for e in edges {
        labels.push(format!("[{lo},{e})"));
        lo = e.to_string();
    }
    labels.push(if edges.is_empty() { "all".to_string() } else { format!("[{lo},inf)") });
    labels
}

fn stratum(edges: &[f64], x: f64) -> usize {
    edges.iter().take_while(|&&e| x >= e).count()
}

/// A move one group outward, toward the nearer edge of the opinion space.
pub fn is_radicalizing_transition(from: IdeologicalGroup, to: IdeologicalGroup) -> bool {
    let (f, t, m) = (from.index() as i32, to.index() as i32, IdeologicalGroup::M.index() as i32);
    (f - t).abs() == 1 && (t - m).abs() > (f - m).abs()
}

/// Probability of each named group transition per friends'-average bin,
/// optionally split by the spread of friends' opinions. Everyone who starts
/// in the source group counts in the denominator, static or not.
pub fn radicalization_curves(
    records: &[ShiftRecord],
    transitions: &[(IdeologicalGroup, IdeologicalGroup)],
    opts: &AnalysisOptions,
) -> Result<MetricTable> {
    let bins = Binning::new(opts.bin_width)?;
    for &(f, t) in transitions {
        if !is_radicalizing_transition(f, t) {
            return Err(Error::InvalidParameter(format!(
                "{f} -> {t} is not an adjacent move toward an edge"
            )));
        }
    }
    let edges = &opts.sigma_strata;
    let labels = strata_labels(edges);
    let mut table = MetricTable::new(
        "radicalization",
        &["transition", "sigma_stratum"],
        &["probability"],
        &["n_transition", "n_total"],
        true,
        opts.support_floor,
    );
    for &(from, to) in transitions {
        // [stratum][bin] -> (moved, total)
        let mut cells = vec![vec![[0u64; 2]; bins.count]; labels.len()];
        for r in filtered(records, opts.require_neighbor_stable).filter(|r| r.group_before == from) {
            let cell = &mut cells[stratum(edges, r.stats_before.std)][bins.index(r.neighbor_mean())];
            cell[1] += 1;
            if r.group_after == to {
                cell[0] += 1;
            }
        }
        for (s, label) in labels.iter().enumerate() {
            for bin in bins.bins() {
                let [k, n] = cells[s][bin.index];
                table.push(vec![format!("{from}->{to}"), label.clone()], Some(bin), vec![ratio(k, n)], vec![k, n], n);
            }
        }
    }
    Ok(table)
}

/// Mean shift magnitude of remarkable positive and negative moves.
pub fn magnitude_curves(records: &[ShiftRecord], opts: &AnalysisOptions) -> Result<MetricTable> {
    let bins = Binning::new(opts.bin_width)?;
    // [bin][group][direction] -> (sum, n)
    let mut cells = vec![[[(0.0f64, 0u64); 2]; 5]; bins.count];
    for r in filtered(records, opts.require_neighbor_stable) {
        let d = match r.direction {
            Some(Direction::Positive) => 0,
            Some(Direction::Negative) => 1,
            _ => continue,
        };
        let cell = &mut cells[bins.index(r.neighbor_mean())][r.group_before.index()][d];
        cell.0 += r.magnitude();
        cell.1 += 1;
    }
    let mut table = MetricTable::new(
        "magnitude",
        &["xi_group", "direction"],
        &["mean_magnitude"],
        &["n"],
        true,
        opts.support_floor,
    );
    for g in IdeologicalGroup::ALL {
        for (d, dir) in [Direction::Positive, Direction::Negative].into_iter().enumerate() {
            for bin in bins.bins() {
                let (sum, n) = cells[bin.index][g.index()][d];
                let mean = if n == 0 { f64::NAN } else { sum / n as f64 };
                table.push(vec![g.label().into(), dir.label().into()], Some(bin), vec![mean], vec![n], n);
            }
        }
    }
    Ok(table)
}

/// Positive/negative count ratio; `+inf` where there are positives but no
/// negatives, undefined where there are neither.
pub fn pos_neg_ratio(records: &[ShiftRecord], opts: &AnalysisOptions) -> Result<MetricTable> {
    let bins = Binning::new(opts.bin_width)?;
    let mut cells = vec![[[0u64; 2]; 5]; bins.count];
    for r in filtered(records, opts.require_neighbor_stable) {
        let cell = &mut cells[bins.index(r.neighbor_mean())][r.group_before.index()];
        if r.is_positive() {
            cell[0] += 1;
        } else if r.is_negative() {
            cell[1] += 1;
        }
    }
    let mut table = MetricTable::new(
        "pos_neg_ratio",
        &["xi_group"],
        &["ratio"],
        &["n_pos", "n_neg"],
        true,
        opts.support_floor,
    );
    for g in IdeologicalGroup::ALL {
        for bin in bins.bins() {
            let [p, q] = cells[bin.index][g.index()];
            table.push(vec![g.label().into()], Some(bin), vec![pos_neg(p, q)], vec![p, q], p + q);
        }
    }
    Ok(table)
}

/// Group-to-group movement counts with income and outcome margins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MovementMap {
    /// `counts[from][to]`, diagonal included.
    pub counts: [[u64; 5]; 5],
}

impl MovementMap {
    /// Arrivals from other groups: column sum without the diagonal.
    pub fn income(&self, g: IdeologicalGroup) -> u64 {
        let j = g.index();
        (0..5).filter(|&i| i != j).map(|i| self.counts[i][j]).sum()
    }

    /// Departures to other groups: row sum without the diagonal.
    pub fn outcome(&self, g: IdeologicalGroup) -> u64 {
        let i = g.index();
        (0..5).filter(|&j| j != i).map(|j| self.counts[i][j]).sum()
    }

    pub fn get(&self, from: IdeologicalGroup, to: IdeologicalGroup) -> u64 {
        self.counts[from.index()][to.index()]
    }

    pub fn table(&self) -> MetricTable {
        let mut table = MetricTable::new(
            "movement_map",
            &["from_group"],
            &[],
            &["to_SL", "to_L", "to_M", "to_C", "to_SC", "income", "outcome"],
            false,
            0,
        );
        for g in IdeologicalGroup::ALL {
            let mut counts = self.counts[g.index()].to_vec();
            counts.push(self.income(g));
            counts.push(self.outcome(g));
            let support = self.counts[g.index()].iter().sum();
            table.push(vec![g.label().into()], None, vec![], counts, support);
        }
        table
    }
}

/// Counts every agent, remarkable or not and regardless of neighborhood
/// stability.
pub fn movement_map(records: &[ShiftRecord]) -> MovementMap {
    let mut counts = [[0u64; 5]; 5];
    for r in records {
        counts[r.group_before.index()][r.group_after.index()] += 1;
    }
    MovementMap { counts }
}

/// Where the friends' average sits relative to a group-to-group move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    /// Source and target group coincide.
    Static,
    /// Friends sit on the far side of the source group from the target.
    Negative,
    /// Friends sit strictly between source and target groups.
    Skipping,
    /// Friends sit in or beyond the target group.
    NonSkipping,
    /// Friends sit in the source group itself.
    Undefined,
}

impl Zone {
    pub fn label(self) -> &'static str {
        match self {
            Zone::Static => "static",
            Zone::Negative => "negative",
            Zone::Skipping => "skipping",
            Zone::NonSkipping => "nonskipping",
            Zone::Undefined => "undefined",
        }
    }
}

/// Zone of a move `from -> to` when the friends' average is in `neighbors`.
/// Adjacent groups have no skipping zone.
pub fn movement_zone(from: IdeologicalGroup, to: IdeologicalGroup, neighbors: IdeologicalGroup) -> Zone {
    if from == to {
        return Zone::Static;
    }
    // orient so the move is rightward
    let (f, t, x) = if from < to {
        (from.index(), to.index(), neighbors.index())
    } else {
        (4 - from.index(), 4 - to.index(), 4 - neighbors.index())
    };
    if x < f {
        Zone::Negative
    } else if x == f {
        Zone::Undefined
    } else if x < t {
        Zone::Skipping
    } else {
        Zone::NonSkipping
    }
}

/// Probability of each of the 25 group moves per friends'-average bin,
/// with the bin's zone. Denominators include static agents.
pub fn movement_probability_curves(records: &[ShiftRecord], opts: &AnalysisOptions) -> Result<MetricTable> {
    let bins = Binning::new(opts.bin_width)?;
    // [bin][from][to]
    let mut cells = vec![[[0u64; 5]; 5]; bins.count];
    for r in filtered(records, opts.require_neighbor_stable) {
        cells[bins.index(r.neighbor_mean())][r.group_before.index()][r.group_after.index()] += 1;
    }
    let mut table = MetricTable::new(
        "movement_probability",
        &["from_group", "to_group", "zone"],
        &["probability"],
        &["n_moves", "n_total"],
        true,
        opts.support_floor,
    );
    for from in IdeologicalGroup::ALL {
        for to in IdeologicalGroup::ALL {
            for bin in bins.bins() {
                let row = &cells[bin.index][from.index()];
                let total: u64 = row.iter().sum();
                let k = row[to.index()];
                let zone = movement_zone(from, to, IdeologicalGroup::of(bin.center()));
                table.push(
                    vec![from.label().into(), to.label().into(), zone.label().into()],
                    Some(bin),
                    vec![ratio(k, total)],
                    vec![k, total],
                    total,
                );
            }
        }
    }
    Ok(table)
}
