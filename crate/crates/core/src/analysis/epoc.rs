use serde::Serialize;

use super::shift::{ShiftOutcome, ShiftRecord};
use super::AnalysisOptions;
use crate::error::{Error, Result};
use crate::model::IdeologicalGroup;
use crate::table::{Binning, MetricTable};

/// Counts and rates of the EPOC decomposition over one population.
///
/// The identity `remarkable = positive_skip + positive_nonskip + negative +
/// unaligned` holds exactly on the counts; every rate is its count divided
/// by `population`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpocDecomposition {
    pub population: u64,
    pub remarkable: u64,
    pub positive_skip: u64,
    pub positive_nonskip: u64,
    pub negative: u64,
    pub unaligned: u64,
    pub epoc: f64,
    pub epoc_pos: f64,
    pub epoc_neg: f64,
    pub epoc_pos_skip: f64,
    pub epoc_pos_nonskip: f64,
    pub unaligned_rate: f64,
}

impl EpocDecomposition {
    pub fn positive(&self) -> u64 {
        self.positive_skip + self.positive_nonskip
    }

    /// Share of remarkable shifts that are positive.
    pub fn positive_share(&self) -> f64 {
        self.positive() as f64 / self.remarkable as f64
    }

    /// Share of positive shifts that skip over the friends' average.
    pub fn skip_share(&self) -> f64 {
        self.positive_skip as f64 / self.positive() as f64
    }
}

pub(crate) fn filtered<'a>(records: &'a [ShiftRecord], require_stable: bool) -> impl Iterator<Item = &'a ShiftRecord> + 'a {
    records.iter().filter(move |r| !require_stable || r.neighbor_stable)
}

pub fn epoc_decomposition(records: &[ShiftRecord], require_neighbor_stable: bool) -> Result<EpocDecomposition> {
    let mut counts = [0u64; 5];
    for r in filtered(records, require_neighbor_stable) {
        counts[r.outcome().index()] += 1;
    }
    let population: u64 = counts.iter().sum();
    if population == 0 {
        return Err(Error::EmptyPopulation);
    }
    let c = |o: ShiftOutcome| counts[o.index()];
    let remarkable = population - c(ShiftOutcome::Unremarkable);
    let n = population as f64;
    Ok(EpocDecomposition {
        population,
        remarkable,
        positive_skip: c(ShiftOutcome::PositiveSkip),
        positive_nonskip: c(ShiftOutcome::PositiveNonSkip),
        negative: c(ShiftOutcome::Negative),
        unaligned: c(ShiftOutcome::Unaligned),
        epoc: remarkable as f64 / n,
        epoc_pos: (c(ShiftOutcome::PositiveSkip) + c(ShiftOutcome::PositiveNonSkip)) as f64 / n,
        epoc_neg: c(ShiftOutcome::Negative) as f64 / n,
        epoc_pos_skip: c(ShiftOutcome::PositiveSkip) as f64 / n,
        epoc_pos_nonskip: c(ShiftOutcome::PositiveNonSkip) as f64 / n,
        unaligned_rate: c(ShiftOutcome::Unaligned) as f64 / n,
    })
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// Positive and negative EPOC per (agent group, friends'-average bin).
pub fn epoc_curves(records: &[ShiftRecord], opts: &AnalysisOptions) -> Result<MetricTable> {
    let bins = Binning::new(opts.bin_width)?;
    // [group][bin] -> (pos, neg, total)
    let mut cells = vec![[[0u64; 3]; 5]; bins.count];
    for r in filtered(records, opts.require_neighbor_stable) {
        let cell = &mut cells[bins.index(r.neighbor_mean())][r.group_before.index()];
        cell[2] += 1;
        if r.is_positive() {
            cell[0] += 1;
        } else if r.is_negative() {
            cell[1] += 1;
        }
    }
    let mut table = MetricTable::new(
        "epoc_curves",
        &["xi_group"],
        &["epoc_pos", "epoc_neg"],
        &["n_pos", "n_neg", "n_total"],
        true,
        opts.support_floor,
    );
    for g in IdeologicalGroup::ALL {
        for bin in bins.bins() {
            let [p, q, n] = cells[bin.index][g.index()];
            table.push(vec![g.label().into()], Some(bin), vec![ratio(p, n), ratio(q, n)], vec![p, q, n], n);
        }
    }
    Ok(table)
}

/// EPOC per (agent group, friends'-average bin), split by whether the
/// friends' average stayed within the stability threshold.
pub fn epoc_by_neighbor_stability(records: &[ShiftRecord], opts: &AnalysisOptions) -> Result<MetricTable> {
    let bins = Binning::new(opts.bin_width)?;
    // [bin][group] -> (stable remarkable, stable total, unstable remarkable, unstable total)
    let mut cells = vec![[[0u64; 4]; 5]; bins.count];
    for r in records {
        let cell = &mut cells[bins.index(r.neighbor_mean())][r.group_before.index()];
        let off = if r.neighbor_stable { 0 } else { 2 };
        cell[off + 1] += 1;
        if r.remarkable {
            cell[off] += 1;
        }
    }
    let mut table = MetricTable::new(
        "epoc_by_neighbor_stability",
        &["xi_group"],
        &["epoc_stable", "epoc_unstable"],
        &["n_stable", "n_unstable"],
        true,
        opts.support_floor,
    );
    for g in IdeologicalGroup::ALL {
        for bin in bins.bins() {
            let [rs, ns, ru, nu] = cells[bin.index][g.index()];
            table.push(
                vec![g.label().into()],
                Some(bin),
                vec![ratio(rs, ns), ratio(ru, nu)],
                vec![ns, nu],
                ns.min(nu),
            );
        }
    }
    Ok(table)
}

/// EPOC, positive EPOC, magnitude and positive/negative ratio as functions
/// of the distance `|x_i - x_{-i}|`, per agent group.
pub fn distance_curves(records: &[ShiftRecord], opts: &AnalysisOptions) -> Result<MetricTable> {
    let bins = Binning::new(opts.bin_width)?;
    // [bin][group] -> (pos, neg, total), pos magnitude sum
    let mut cells = vec![[[0u64; 3]; 5]; bins.count];
    let mut mag = vec![[0.0f64; 5]; bins.count];
    for r in filtered(records, opts.require_neighbor_stable) {
        let b = bins.index(r.distance());
        let g = r.group_before.index();
        cells[b][g][2] += 1;
        if r.is_positive() {
            cells[b][g][0] += 1;
            mag[b][g] += r.magnitude();
        } else if r.is_negative() {
            cells[b][g][1] += 1;
        }
    }
    let mut table = MetricTable::new(
        "distance_curves",
        &["xi_group"],
        &["epoc_pos", "epoc_neg", "pos_magnitude", "pos_neg_ratio"],
        &["n_pos", "n_neg", "n_total"],
        true,
        opts.support_floor,
    );
    for g in IdeologicalGroup::ALL {
        for bin in bins.bins() {
            let [p, q, n] = cells[bin.index][g.index()];
            table.push(
                vec![g.label().into()],
                Some(bin),
                vec![
                    ratio(p, n),
                    ratio(q, n),
                    if p == 0 { f64::NAN } else { mag[bin.index][g.index()] / p as f64 },
                    pos_neg(p, q),
                ],
                vec![p, q, n],
                n,
            );
        }
    }
    Ok(table)
}

pub(crate) fn pos_neg(p: u64, q: u64) -> f64 {
    match (p, q) {
        (0, 0) => f64::NAN,
        (_, 0) => f64::INFINITY,
        _ => p as f64 / q as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Less,
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Undetermined,
}

/// One side of an ordering claim: EPOC+ for agents in `xi` whose friends'
/// average falls in `neighbors`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpocCell {
    pub xi: IdeologicalGroup,
    pub neighbors: IdeologicalGroup,
    pub epoc_pos: f64,
    pub positive: u64,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityResult {
    pub id: u8,
    pub lhs: EpocCell,
    pub relation: Relation,
    pub rhs: EpocCell,
    pub verdict: Verdict,
}

/// The six cross-group orderings of positive EPOC, in order:
/// `(lhs_xi, lhs_neighbors, relation, rhs_xi, rhs_neighbors)`.
pub const CROSS_GROUP_ORDERINGS: [(IdeologicalGroup, IdeologicalGroup, Relation, IdeologicalGroup, IdeologicalGroup); 6] = {
    use IdeologicalGroup::*;
    [
        (SL, L, Relation::Less, L, SL),
        (SL, M, Relation::Less, M, SL),
        (L, M, Relation::Less, M, L),
        (C, M, Relation::Greater, M, C),
        (M, SC, Relation::Greater, SC, M),
        (C, SC, Relation::Greater, SC, C),
    ]
};

/// Evaluates the six cross-group orderings of positive EPOC. An ordering
/// is undetermined when either cell is empty or neither side has any
/// positive shift.
pub fn eq3_inequalities(records: &[ShiftRecord], opts: &AnalysisOptions) -> Vec<InequalityResult> {
    let mut pos = [[0u64; 5]; 5];
    let mut tot = [[0u64; 5]; 5];
    for r in filtered(records, opts.require_neighbor_stable) {
        let (a, b) = (r.group_before.index(), r.neighbor_group().index());
        tot[a][b] += 1;
        if r.is_positive() {
            pos[a][b] += 1;
        }
    }
    let cell = |xi: IdeologicalGroup, nb: IdeologicalGroup| EpocCell {
        xi,
        neighbors: nb,
        epoc_pos: ratio(pos[xi.index()][nb.index()], tot[xi.index()][nb.index()]),
        positive: pos[xi.index()][nb.index()],
        n: tot[xi.index()][nb.index()],
    };
    CROSS_GROUP_ORDERINGS
        .iter()
        .enumerate()
        .map(|(k, &(lx, ln, rel, rx, rn))| {
            let lhs = cell(lx, ln);
            let rhs = cell(rx, rn);
            let verdict = if lhs.n == 0 || rhs.n == 0 || (lhs.positive == 0 && rhs.positive == 0) {
                Verdict::Undetermined
            } else {
                let holds = match rel {
                    Relation::Less => lhs.epoc_pos < rhs.epoc_pos,
                    Relation::Greater => lhs.epoc_pos > rhs.epoc_pos,
                };
                if holds {
                    Verdict::Holds
                } else {
                    Verdict::Fails
                }
            };
            InequalityResult {
                id: k as u8 + 1,
                lhs,
                relation: rel,
                rhs,
                verdict,
            }
        })
        .collect()
}

/// Positive EPOC for every (agent group, friends'-average group) pair.
pub fn group_pair_epoc(records: &[ShiftRecord], opts: &AnalysisOptions) -> MetricTable {
    let mut cells = [[[0u64; 2]; 5]; 5];
    for r in filtered(records, opts.require_neighbor_stable) {
        let cell = &mut cells[r.group_before.index()][r.neighbor_group().index()];
        cell[1] += 1;
        if r.is_positive() {
            cell[0] += 1;
        }
    }
    let mut table = MetricTable::new(
        "group_pair_epoc",
        &["xi_group", "neighbor_group"],
        &["epoc_pos"],
        &["n_pos", "n_total"],
        false,
        opts.support_floor,
    );
    for g in IdeologicalGroup::ALL {
        for h in IdeologicalGroup::ALL {
            let [p, n] = cells[g.index()][h.index()];
            table.push(vec![g.label().into(), h.label().into()], None, vec![ratio(p, n)], vec![p, n], n);
        }
    }
    table
}
