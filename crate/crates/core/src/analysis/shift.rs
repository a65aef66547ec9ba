use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::graph::SocialGraph;
use crate::model::{IdeologicalGroup, NeighborhoodStats, OpinionSnapshot};

/// Shifts strictly larger than this are remarkable.
pub const REMARKABLE_THRESHOLD: f64 = 0.05;

/// Friends' average must move by strictly less than this for the agent to
/// count as having a stable neighborhood.
pub const NEIGHBOR_STABILITY_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Toward the friends' average.
    Positive,
    /// Away from the friends' average.
    Negative,
    /// The agent sat exactly on the friends' average.
    Unaligned,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Positive => "positive",
            Direction::Negative => "negative",
            Direction::Unaligned => "unaligned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipClass {
    Skipping,
    NonSkipping,
    NotApplicable,
}

/// The classification part of a [`ShiftRecord`], derived from the two
/// opinions and the friends' prior average alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShiftClass {
    pub remarkable: bool,
    pub direction: Option<Direction>,
    pub skip: SkipClass,
    pub radicalized: bool,
}

impl ShiftClass {
    pub fn of(x_before: f64, x_after: f64, neighbor_mean: f64) -> Self {
        let delta = x_after - x_before;
        let remarkable = delta.abs() > REMARKABLE_THRESHOLD;
        if !remarkable {
            return ShiftClass {
                remarkable,
                direction: None,
                skip: SkipClass::NotApplicable,
                radicalized: false,
            };
        }
        // signs rather than the product, which could underflow
        let toward = neighbor_mean - x_before;
        let direction = if toward == 0.0 {
            Direction::Unaligned
        } else if (delta > 0.0) == (toward > 0.0) {
            Direction::Positive
        } else {
            Direction::Negative
        };
        let skip = if direction == Direction::Positive {
            let (lo, hi) = (x_before.min(neighbor_mean), x_before.max(neighbor_mean));
            if (lo..=hi).contains(&x_after) {
                SkipClass::NonSkipping
            } else {
                SkipClass::Skipping
            }
        } else {
            SkipClass::NotApplicable
        };
        let radicalized = (x_before > 0.5 && x_after > x_before) || (x_before < 0.5 && x_after < x_before);
        ShiftClass {
            remarkable,
            direction: Some(direction),
            skip,
            radicalized,
        }
    }

    /// The mutually exclusive outcome used by decompositions.
    pub fn outcome(&self) -> ShiftOutcome {
        match (self.direction, self.skip) {
            (None, _) => ShiftOutcome::Unremarkable,
            (Some(Direction::Positive), SkipClass::Skipping) => ShiftOutcome::PositiveSkip,
            (Some(Direction::Positive), _) => ShiftOutcome::PositiveNonSkip,
            (Some(Direction::Negative), _) => ShiftOutcome::Negative,
            (Some(Direction::Unaligned), _) => ShiftOutcome::Unaligned,
        }
    }
}

/// Partition of all shifts into one of five outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftOutcome {
    Unremarkable,
    PositiveNonSkip,
    PositiveSkip,
    Negative,
    Unaligned,
}

impl ShiftOutcome {
    pub const ALL: [ShiftOutcome; 5] = [
        ShiftOutcome::Unremarkable,
        ShiftOutcome::PositiveNonSkip,
        ShiftOutcome::PositiveSkip,
        ShiftOutcome::Negative,
        ShiftOutcome::Unaligned,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ShiftOutcome::Unremarkable => "unremarkable",
            ShiftOutcome::PositiveNonSkip => "positive_nonskip",
            ShiftOutcome::PositiveSkip => "positive_skip",
            ShiftOutcome::Negative => "negative",
            ShiftOutcome::Unaligned => "unaligned",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One agent's move between two consecutive snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftRecord {
    pub agent: u32,
    pub x_before: f64,
    pub x_after: f64,
    pub stats_before: NeighborhoodStats,
    pub neighbor_mean_after: f64,
    pub remarkable: bool,
    pub direction: Option<Direction>,
    pub skip_class: SkipClass,
    pub radicalized: bool,
    pub group_before: IdeologicalGroup,
    pub group_after: IdeologicalGroup,
    pub neighbor_stable: bool,
}

impl ShiftRecord {
    pub fn new(
        agent: u32,
        x_before: f64,
        x_after: f64,
        stats_before: NeighborhoodStats,
        neighbor_mean_after: f64,
    ) -> Self {
        let class = ShiftClass::of(x_before, x_after, stats_before.mean);
        ShiftRecord {
            agent,
            x_before,
            x_after,
            stats_before,
            neighbor_mean_after,
            remarkable: class.remarkable,
            direction: class.direction,
            skip_class: class.skip,
            radicalized: class.radicalized,
            group_before: IdeologicalGroup::of(x_before),
            group_after: IdeologicalGroup::of(x_after),
            neighbor_stable: (neighbor_mean_after - stats_before.mean).abs() < NEIGHBOR_STABILITY_THRESHOLD,
        }
    }

    #[inline]
    pub fn neighbor_mean(&self) -> f64 {
        self.stats_before.mean
    }

    #[inline]
    pub fn neighbor_group(&self) -> IdeologicalGroup {
        IdeologicalGroup::of(self.stats_before.mean)
    }

    #[inline]
    pub fn magnitude(&self) -> f64 {
        (self.x_after - self.x_before).abs()
    }

    /// `|x_i - x_{-i}|` before the move.
    #[inline]
    pub fn distance(&self) -> f64 {
        (self.x_before - self.stats_before.mean).abs()
    }

    pub fn outcome(&self) -> ShiftOutcome {
        ShiftClass {
            remarkable: self.remarkable,
            direction: self.direction,
            skip: self.skip_class,
            radicalized: self.radicalized,
        }
        .outcome()
    }

    pub fn is_positive(&self) -> bool {
        self.direction == Some(Direction::Positive)
    }

    pub fn is_negative(&self) -> bool {
        self.direction == Some(Direction::Negative)
    }
}

/// One record per agent with at least one friend. Neighborhood statistics
/// come from `before`; the stability flag compares both snapshots.
pub fn classify_shifts(
    graph: &SocialGraph,
    before: &OpinionSnapshot,
    after: &OpinionSnapshot,
) -> Result<Vec<ShiftRecord>> {
    before.check_matches(graph)?;
    after.check_matches(graph)?;
    let xb = before.opinions();
    let xa = after.opinions();
    let records = (0..graph.len() as u32)
        .into_par_iter()
        .filter_map(|i| {
            let nbrs = graph.neighbors(i);
            let stats = NeighborhoodStats::from_values(nbrs.iter().map(|&j| xb[j as usize]))?;
            let after_mean = NeighborhoodStats::from_values(nbrs.iter().map(|&j| xa[j as usize]))?.mean;
            Some(ShiftRecord::new(i, xb[i as usize], xa[i as usize], stats, after_mean))
        })
        .collect();
    Ok(records)
}

/// `x -> 1 - x` applied to every opinion in a record.
pub fn mirror_record(r: &ShiftRecord) -> ShiftRecord {
    let stats = NeighborhoodStats {
        mean: 1.0 - r.stats_before.mean,
        ..r.stats_before
    };
    ShiftRecord::new(r.agent, 1.0 - r.x_before, 1.0 - r.x_after, stats, 1.0 - r.neighbor_mean_after)
}
