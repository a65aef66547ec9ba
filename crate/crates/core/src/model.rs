//! Opinions, snapshots, ideological groups and neighborhood statistics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SocialGraph;

/// A scalar opinion on the closed unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Opinion(f64);

impl Opinion {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Opinion(value))
        } else {
            Err(Error::OpinionOutOfRange(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<Opinion> for f64 {
    fn from(o: Opinion) -> f64 {
        o.0
    }
}

/// Per-agent opinions at one observation time.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionSnapshot {
    time_index: u32,
    opinions: Vec<f64>,
}

impl OpinionSnapshot {
    pub fn new(time_index: u32, opinions: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = opinions.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::OpinionOutOfRange(bad));
        }
        Ok(OpinionSnapshot {
            time_index,
            opinions,
        })
    }

    /// For callers that already guarantee the range invariant.
    pub(crate) fn new_unchecked(time_index: u32, opinions: Vec<f64>) -> Self {
        debug_assert!(opinions.iter().all(|x| (0.0..=1.0).contains(x)));
        OpinionSnapshot {
            time_index,
            opinions,
        }
    }

    pub fn time_index(&self) -> u32 {
        self.time_index
    }

    pub fn opinions(&self) -> &[f64] {
        &self.opinions
    }

    pub fn into_opinions(self) -> Vec<f64> {
        self.opinions
    }

    pub fn len(&self) -> usize {
        self.opinions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opinions.is_empty()
    }

    #[inline]
    pub fn get(&self, agent: u32) -> f64 {
        self.opinions[agent as usize]
    }

    pub fn with_time_index(mut self, time_index: u32) -> Self {
        self.time_index = time_index;
        self
    }

    pub fn check_matches(&self, graph: &SocialGraph) -> Result<()> {
        if self.len() != graph.len() {
            return Err(Error::SnapshotSizeMismatch {
                expected: graph.len(),
                got: self.len(),
            });
        }
        Ok(())
    }

    /// Agents per ideological group, indexed by [`IdeologicalGroup::index`].
    pub fn group_populations(&self) -> [usize; 5] {
        let mut counts = [0usize; 5];
        for &x in &self.opinions {
            counts[IdeologicalGroup::of(x).index()] += 1;
        }
        counts
    }
}

/// The five ideological groups, ordered from left to right.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum IdeologicalGroup {
    /// Strong liberals, `[0, 0.2)`.
    SL,
    /// Liberals, `[0.2, 0.4)`.
    L,
    /// Moderates, `[0.4, 0.6)`.
    M,
    /// Conservatives, `[0.6, 0.8)`.
    C,
    /// Strong conservatives, `[0.8, 1]`.
    SC,
}

impl IdeologicalGroup {
    pub const ALL: [IdeologicalGroup; 5] = [
        IdeologicalGroup::SL,
        IdeologicalGroup::L,
        IdeologicalGroup::M,
        IdeologicalGroup::C,
        IdeologicalGroup::SC,
    ];

    /// Checked group assignment.
    pub fn assign(opinion: f64) -> Result<Self> {
        Opinion::new(opinion).map(|o| Self::of(o.get()))
    }

    /// Group of an opinion already known to be in `[0, 1]`. Boundaries
    /// belong to the right-hand group; 1.0 is SC.
    #[inline]
    pub fn of(x: f64) -> Self {
        if x < 0.2 {
            IdeologicalGroup::SL
        } else if x < 0.4 {
            IdeologicalGroup::L
        } else if x < 0.6 {
            IdeologicalGroup::M
        } else if x < 0.8 {
            IdeologicalGroup::C
        } else {
            IdeologicalGroup::SC
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// `[low, high)`; the last group also includes 1.0.
    pub fn interval(self) -> (f64, f64) {
        let i = self.index() as f64;
        (i * 0.2, if self == IdeologicalGroup::SC { 1.0 } else { (i + 1.0) * 0.2 })
    }

    pub fn label(self) -> &'static str {
        match self {
            IdeologicalGroup::SL => "SL",
            IdeologicalGroup::L => "L",
            IdeologicalGroup::M => "M",
            IdeologicalGroup::C => "C",
            IdeologicalGroup::SC => "SC",
        }
    }

    /// Image under the reflection `x -> 1 - x`.
    pub fn mirror(self) -> Self {
        Self::ALL[4 - self.index()]
    }
}

impl fmt::Display for IdeologicalGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for IdeologicalGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|g| g.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown ideological group {s:?}")))
    }
}

/// Mean and population standard deviation of an agent's friends' opinions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeighborhoodStats {
    pub mean: f64,
    pub std: f64,
    pub degree: usize,
}

impl NeighborhoodStats {
    /// Statistics of a non-empty set of opinions. A constant set yields its
    /// value and a zero deviation exactly.
    pub fn from_values<I>(values: I) -> Option<Self>
    where
        I: IntoIterator<Item = f64>,
        I::IntoIter: Clone,
    {
        let iter = values.into_iter();
        let mut degree = 0usize;
        let mut sum = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in iter.clone() {
            degree += 1;
            sum += x;
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if degree == 0 {
            return None;
        }
        if lo == hi {
            return Some(NeighborhoodStats {
                mean: lo,
                std: 0.0,
                degree,
            });
        }
        let mean = (sum / degree as f64).clamp(lo, hi);
        let ss: f64 = iter.map(|x| (x - mean) * (x - mean)).sum();
        let std = (ss / degree as f64).sqrt().min(0.5);
        Some(NeighborhoodStats { mean, std, degree })
    }
}

/// Friends' average opinion and its spread for one agent.
pub fn neighborhood_stats(
    graph: &SocialGraph,
    snapshot: &OpinionSnapshot,
    agent: u32,
) -> Result<NeighborhoodStats> {
    snapshot.check_matches(graph)?;
    if agent as usize >= graph.len() {
        return Err(Error::AgentOutOfRange {
            agent: agent as u64,
            n: graph.len(),
        });
    }
    let opinions = snapshot.opinions();
    NeighborhoodStats::from_values(graph.neighbors(agent).iter().map(|&j| opinions[j as usize]))
        .ok_or(Error::IsolatedAgent(agent))
}

/// Friends' average opinion only; the hot path of the simulator. Clamped into
/// the neighbors' range so rounding never leaves their convex hull.
#[inline]
pub(crate) fn neighborhood_mean(graph: &SocialGraph, opinions: &[f64], agent: u32) -> Option<f64> {
    let nbrs = graph.neighbors(agent);
    if nbrs.is_empty() {
        return None;
    }
    let mut sum = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &j in nbrs {
        let x = opinions[j as usize];
        sum += x;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if lo == hi {
        return Some(lo);
    }
    Some((sum / nbrs.len() as f64).clamp(lo, hi))
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::UndefinedCorrelation("sequences differ in length"));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn star(values: &[f64]) -> (SocialGraph, OpinionSnapshot) {
        // agent 0 is the hub; its neighbors carry `values`
        let n = values.len() + 1;
        let g = SocialGraph::from_edges(n, (1..n as u32).map(|j| (0, j))).unwrap();
        let mut ops = vec![0.5];
        ops.extend_from_slice(values);
        (g, OpinionSnapshot::new(1, ops).unwrap())
    }

    #[test]
    fn stats_two_point() {
        let (g, s) = star(&[0.2, 0.4]);
        let st = neighborhood_stats(&g, &s, 0).unwrap();
        assert!((st.mean - 0.3).abs() < 1e-15);
        assert!((st.std - 0.1).abs() < 1e-15);
        assert_eq!(st.degree, 2);
    }

    #[test]
    fn stats_constant_neighborhood() {
        let (g, s) = star(&[0.7, 0.7, 0.7]);
        let st = neighborhood_stats(&g, &s, 0).unwrap();
        assert_eq!(st.mean, 0.7);
        assert_eq!(st.std, 0.0);
    }

    #[test]
    fn stats_three_point() {
        // oracle: ((0.5^2 + 0 + 0.5^2) / 3)^0.5 = sqrt(1/6)
        let (g, s) = star(&[0.0, 0.5, 1.0]);
        let st = neighborhood_stats(&g, &s, 0).unwrap();
        assert_eq!(st.mean, 0.5);
        assert!((st.std - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
        assert!((st.std - 0.40825).abs() < 1e-5);
    }

    #[test]
    fn stats_isolated_agent_errors() {
        let g = SocialGraph::from_edges(3, vec![(0, 1)]).unwrap();
        let s = OpinionSnapshot::new(1, vec![0.1, 0.2, 0.3]).unwrap();
        assert!(matches!(neighborhood_stats(&g, &s, 2), Err(Error::IsolatedAgent(2))));
    }

    #[test]
    fn group_boundaries() {
        assert_eq!(IdeologicalGroup::assign(0.19).unwrap(), IdeologicalGroup::SL);
        assert_eq!(IdeologicalGroup::assign(0.2).unwrap(), IdeologicalGroup::L);
        assert_eq!(IdeologicalGroup::assign(0.4).unwrap(), IdeologicalGroup::M);
        assert_eq!(IdeologicalGroup::assign(0.6).unwrap(), IdeologicalGroup::C);
        assert_eq!(IdeologicalGroup::assign(0.8).unwrap(), IdeologicalGroup::SC);
        assert_eq!(IdeologicalGroup::assign(1.0).unwrap(), IdeologicalGroup::SC);
        assert_eq!(IdeologicalGroup::assign(0.0).unwrap(), IdeologicalGroup::SL);
        assert!(IdeologicalGroup::assign(1.0001).is_err());
        assert!(IdeologicalGroup::assign(-0.1).is_err());
        assert!(IdeologicalGroup::assign(f64::NAN).is_err());
    }

    #[test]
    fn group_order_and_mirror() {
        use IdeologicalGroup::*;
        assert!(SL < L && L < M && M < C && C < SC);
        assert_eq!(SL.mirror(), SC);
        assert_eq!(L.mirror(), C);
        assert_eq!(M.mirror(), M);
        assert_eq!("sc".parse::<IdeologicalGroup>().unwrap(), SC);
    }

    #[test]
    fn snapshot_rejects_out_of_range() {
        assert!(OpinionSnapshot::new(0, vec![0.1, 1.5]).is_err());
        assert!(OpinionSnapshot::new(0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson_correlation(&[1., 2., 3.], &[1., 2., 3.]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson_correlation(&[1., 2., 3.], &[3., 2., 1.]).unwrap() + 1.0).abs() < 1e-15);
        // sxy = 4 * 0.75 = 3, sxx = syy = 5 -> 0.6 (numpy.corrcoef agrees)
        let r = pearson_correlation(&[0., 1., 2., 3.], &[1., 0., 3., 2.]).unwrap();
        assert!((r - 0.6).abs() < 1e-15);
        assert!(pearson_correlation(&[1., 1., 1.], &[1., 2., 3.]).is_err());
        assert!(pearson_correlation(&[1.], &[1.]).is_err());
        assert!(pearson_correlation(&[1., 2.], &[1.]).is_err());
    }

    proptest! {
        #[test]
        fn mean_is_permutation_invariant(mut vals in prop::collection::vec(0.0f64..=1.0, 1..30), seed in any::<u64>()) {
            let a = NeighborhoodStats::from_values(vals.iter().copied()).unwrap();
            // deterministic shuffle
            let mut s = seed | 1;
            for i in (1..vals.len()).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                vals.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let b = NeighborhoodStats::from_values(vals.iter().copied()).unwrap();
            prop_assert!((a.mean - b.mean).abs() < 1e-12);
            prop_assert!(a.std <= 0.5);
        }

        #[test]
        fn std_zero_iff_constant(vals in prop::collection::vec(prop::sample::select(vec![0.0, 0.25, 0.3, 1.0]), 1..12)) {
            let st = NeighborhoodStats::from_values(vals.iter().copied()).unwrap();
            let constant = vals.iter().all(|&v| v == vals[0]);
            prop_assert_eq!(st.std == 0.0, constant);
        }

        #[test]
        fn groups_partition_population(vals in prop::collection::vec(0.0f64..=1.0, 0..200)) {
            let snap = OpinionSnapshot::new(0, vals.clone()).unwrap();
            prop_assert_eq!(snap.group_populations().iter().sum::<usize>(), vals.len());
        }
    }
}
