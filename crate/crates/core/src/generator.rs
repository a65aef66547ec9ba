//! Synthetic friendship graphs with group-structured opinions and tunable
//! homophily, built by configuration-model stub matching.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::model::{IdeologicalGroup, OpinionSnapshot};
use crate::rng::{self, purpose, StreamRng};

/// Global group shares used by the random-tie null model
/// (SL, L, M, C, SC).
pub const NULL_MODEL_FRACTIONS: [f64; 5] = [0.08, 0.19, 0.53, 0.16, 0.04];

/// Average friend counts per group in the reference population.
pub const REFERENCE_MEAN_DEGREES: [f64; 5] = [25.68, 21.2, 17.13, 13.03, 10.43];

const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub n: usize,
    pub group_fractions: [f64; 5],
    pub mean_degree: [f64; 5],
}

impl PopulationSpec {
    pub fn new(n: usize, group_fractions: [f64; 5], mean_degree: f64) -> Self {
        PopulationSpec {
            n,
            group_fractions,
            mean_degree: [mean_degree; 5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter("population needs at least 2 agents".into()));
        }
        if self.group_fractions.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::InvalidParameter("group fractions must be non-negative".into()));
        }
        let total: f64 = self.group_fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("group fractions sum to {total}, not 1")));
        }
        if let Some(d) = self.mean_degree.iter().find(|d| !(**d >= 1.0)) {
            return Err(Error::InvalidParameter(format!("mean degree {d} is below 1")));
        }
        if let Some(d) = self.mean_degree.iter().find(|d| **d > (self.n - 1) as f64) {
            return Err(Error::InfeasibleDegreeSequence(format!(
                "mean degree {d} exceeds n - 1 = {}",
                self.n - 1
            )));
        }
        Ok(())
    }

    /// Agents per group by largest remainder, so shares are as exact as
    /// the population size allows.
    pub fn group_counts(&self) -> [usize; 5] {
        let raw: Vec<f64> = self.group_fractions.iter().map(|f| f * self.n as f64).collect();
        let mut counts = [0usize; 5];
        for (c, r) in counts.iter_mut().zip(&raw) {
            *c = r.floor() as usize;
        }
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|&a, &b| {
            let fa = raw[a] - raw[a].floor();
            let fb = raw[b] - raw[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        let missing = self.n - counts.iter().sum::<usize>();
        for &g in order.iter().take(missing) {
            counts[g] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomophilySpec {
    /// Probability that a stub is matched within its own group.
    pub bias: f64,
    pub target_assortativity: Option<f64>,
}

impl HomophilySpec {
    pub fn random_mixing() -> Self {
        HomophilySpec {
            bias: 0.0,
            target_assortativity: None,
        }
    }

    pub fn with_bias(bias: f64) -> Self {
        HomophilySpec {
            bias,
            target_assortativity: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.bias) {
            return Err(Error::InvalidParameter(format!("homophily bias {} not in [0, 1)", self.bias)));
        }
        if let Some(t) = self.target_assortativity {
            if !(-1.0..=1.0).contains(&t) {
                return Err(Error::InvalidParameter(format!("target assortativity {t} not in [-1, 1]")));
            }
        }
        Ok(())
    }
}

/// Unmatched stubs, addressable both globally and per group.
struct StubPools {
    global: Vec<usize>,
    by_group: [Vec<usize>; 5],
    pos_global: Vec<usize>,
    pos_group: Vec<usize>,
}

impl StubPools {
    fn new(stub_group: &[usize]) -> Self {
        let mut by_group: [Vec<usize>; 5] = Default::default();
        let mut pos_group = vec![0; stub_group.len()];
        for (s, &g) in stub_group.iter().enumerate() {
            pos_group[s] = by_group[g].len();
            by_group[g].push(s);
        }
        StubPools {
            global: (0..stub_group.len()).collect(),
            by_group,
            pos_global: (0..stub_group.len()).collect(),
            pos_group,
        }
    }

    fn remove(&mut self, stub: usize, group: usize) {
        let p = self.pos_global[stub];
        self.global.swap_remove(p);
        if let Some(&moved) = self.global.get(p) {
            self.pos_global[moved] = p;
        }
        let pool = &mut self.by_group[group];
        let p = self.pos_group[stub];
        pool.swap_remove(p);
        if let Some(&moved) = pool.get(p) {
            self.pos_group[moved] = p;
        }
    }
}

fn degree_sample(mean: f64, cap: usize, rng: &mut StreamRng) -> usize {
    let extra = if mean > 1.0 {
        Poisson::new(mean - 1.0).expect("positive rate").sample(rng) as usize
    } else {
        0
    };
    (1 + extra).min(cap)
}

/// Generates a graph and an initial opinion snapshot.
///
/// Each agent gets `1 + Poisson(mean_degree - 1)` stubs. Stubs are taken in
/// random order; a stub is paired within its own group with probability
/// `bias`, otherwise with any free stub. Self-loops and repeated edges are
/// redrawn up to 100 times, after which the stub is dropped. Agents left
/// without any friend are attached to a random partner.
pub fn generate(pop: &PopulationSpec, hom: &HomophilySpec, seed: u64) -> Result<(SocialGraph, OpinionSnapshot)> {
    pop.validate()?;
    hom.validate()?;
    let n = pop.n;
    let mut rng = rng::stream(seed, purpose::GENERATOR, 0, 0);

    let counts = pop.group_counts();
    let mut groups: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(g, &c)| std::iter::repeat_n(g, c))
        .collect();
    groups.shuffle(&mut rng);

    let opinions: Vec<f64> = groups
        .iter()
        .map(|&g| {
            let group = IdeologicalGroup::ALL[g];
            let (lo, hi) = group.interval();
            if group == IdeologicalGroup::SC {
                rng.random_range(lo..=hi)
            } else {
                rng.random_range(lo..hi)
            }
        })
        .collect();

    let mut stub_owner = Vec::new();
    for (agent, &g) in groups.iter().enumerate() {
        let d = degree_sample(pop.mean_degree[g], n - 1, &mut rng);
        stub_owner.extend(std::iter::repeat_n(agent as u32, d));
    }
    let stub_group: Vec<usize> = stub_owner.iter().map(|&a| groups[a as usize]).collect();

    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut pools = StubPools::new(&stub_group);
    while !pools.global.is_empty() {
        let s = pools.global[rng.random_range(0..pools.global.len())];
        let g = stub_group[s];
        pools.remove(s, g);
        let a = stub_owner[s];
        for _ in 0..MAX_ATTEMPTS {
            let within = hom.bias > 0.0 && !pools.by_group[g].is_empty() && rng.random::<f64>() < hom.bias;
            let pool = if within { &pools.by_group[g] } else { &pools.global };
            if pool.is_empty() {
                break;
            }
            let c = pool[rng.random_range(0..pool.len())];
            let b = stub_owner[c];
            if a == b || adjacency[a as usize].contains(&b) {
                continue;
            }
            pools.remove(c, stub_group[c]);
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
            break;
        }
    }

    // attach anyone whose stubs were all dropped
    let mut by_group: [Vec<u32>; 5] = Default::default();
    for (a, &g) in groups.iter().enumerate() {
        by_group[g].push(a as u32);
    }
    for a in 0..n as u32 {
        if !adjacency[a as usize].is_empty() {
            continue;
        }
        let g = groups[a as usize];
        let mut attached = false;
        for _ in 0..MAX_ATTEMPTS {
            let b = if hom.bias > 0.0 && by_group[g].len() > 1 && rng.random::<f64>() < hom.bias {
                by_group[g][rng.random_range(0..by_group[g].len())]
            } else {
                rng.random_range(0..n as u32)
            };
            if b != a {
                adjacency[a as usize].push(b);
                adjacency[b as usize].push(a);
                attached = true;
                break;
            }
        }
        if !attached {
            return Err(Error::InfeasibleDegreeSequence(format!("could not attach isolated agent {a}")));
        }
    }

    let edges = adjacency
        .iter()
        .enumerate()
        .flat_map(|(a, nbrs)| nbrs.iter().filter(move |&&b| (a as u32) < b).map(move |&b| (a as u32, b)));
    let graph = SocialGraph::from_edges(n, edges)?;
    let snapshot = OpinionSnapshot::new_unchecked(0, opinions);
    Ok((graph, snapshot))
}

/// Newman's discrete assortativity coefficient over the five groups.
pub fn assortativity(graph: &SocialGraph, snapshot: &OpinionSnapshot) -> Result<f64> {
    snapshot.check_matches(graph)?;
    if graph.edge_count() == 0 {
        return Err(Error::UndefinedAssortativity("graph has no edges"));
    }
    let group: Vec<usize> = snapshot.opinions().iter().map(|&x| IdeologicalGroup::of(x).index()).collect();
    let mut mixing = [[0u64; 5]; 5];
    for (a, b) in graph.edges() {
        let (ga, gb) = (group[a as usize], group[b as usize]);
        mixing[ga][gb] += 1;
        mixing[gb][ga] += 1;
    }
    let total = 2.0 * graph.edge_count() as f64;
    let mut trace = 0.0;
    let mut sum_sq = 0.0;
    for (i, row) in mixing.iter().enumerate() {
        trace += row[i] as f64 / total;
        let a: f64 = row.iter().map(|&c| c as f64).sum::<f64>() / total;
        sum_sq += a * a;
    }
    let denom = 1.0 - sum_sq;
    if denom <= 0.0 {
        return Err(Error::UndefinedAssortativity("all edge endpoints fall in one group"));
    }
    Ok((trace - sum_sq) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub bias: f64,
    pub assortativity: f64,
    pub evaluations: usize,
}

/// Bisects the homophily bias until the generated graph's assortativity is
/// within `tolerance` of `target` (or the bracket is exhausted). Every
/// evaluation uses the same seed.
pub fn calibrate_homophily(pop: &PopulationSpec, target: f64, tolerance: f64, seed: u64) -> Result<Calibration> {
    let eval = |bias: f64| -> Result<f64> {
        let (g, s) = generate(pop, &HomophilySpec::with_bias(bias), seed)?;
        assortativity(&g, &s)
    };
    let mut lo = 0.0;
    let mut hi = 0.95;
    let mut best = Calibration {
        bias: lo,
        assortativity: eval(lo)?,
        evaluations: 1,
    };
    if best.assortativity >= target {
        return Ok(best);
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let r = eval(mid)?;
        best.evaluations += 1;
        if (r - target).abs() < (best.assortativity - target).abs() {
            best.bias = mid;
            best.assortativity = r;
        }
        if (r - target).abs() <= tolerance {
            break;
        }
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_counts_are_exact_when_possible() {
        let pop = PopulationSpec::new(10_000, NULL_MODEL_FRACTIONS, 10.0);
        assert_eq!(pop.group_counts(), [800, 1900, 5300, 1600, 400]);
        let pop = PopulationSpec::new(7, NULL_MODEL_FRACTIONS, 2.0);
        assert_eq!(pop.group_counts().iter().sum::<usize>(), 7);
    }

    #[test]
    fn validation() {
        let mut pop = PopulationSpec::new(100, NULL_MODEL_FRACTIONS, 5.0);
        pop.validate().unwrap();
        pop.group_fractions[0] = 0.5;
        assert!(pop.validate().is_err());
        let pop = PopulationSpec::new(1, NULL_MODEL_FRACTIONS, 1.0);
        assert!(pop.validate().is_err());
        let pop = PopulationSpec::new(10, NULL_MODEL_FRACTIONS, 0.5);
        assert!(pop.validate().is_err());
        let pop = PopulationSpec::new(10, NULL_MODEL_FRACTIONS, 20.0);
        assert!(matches!(pop.validate(), Err(Error::InfeasibleDegreeSequence(_))));
        assert!(HomophilySpec::with_bias(1.0).validate().is_err());
    }

    #[test]
    fn generated_graph_is_simple_and_covered() {
        for seed in 0..5 {
            let pop = PopulationSpec::new(500, NULL_MODEL_FRACTIONS, 6.0);
            let (g, s) = generate(&pop, &HomophilySpec::with_bias(0.5), seed).unwrap();
            g.validate().unwrap();
            assert!(g.min_degree() >= 1);
            assert_eq!(s.len(), 500);
            assert_eq!(s.group_populations(), pop.group_counts());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let pop = PopulationSpec::new(300, NULL_MODEL_FRACTIONS, 5.0);
        let a = generate(&pop, &HomophilySpec::with_bias(0.3), 11).unwrap();
        let b = generate(&pop, &HomophilySpec::with_bias(0.3), 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn assortativity_extremes() {
        // two groups, edges only within groups
        let g = SocialGraph::from_edges(4, vec![(0, 1), (2, 3)]).unwrap();
        let s = OpinionSnapshot::new(0, vec![0.1, 0.1, 0.9, 0.9]).unwrap();
        assert!((assortativity(&g, &s).unwrap() - 1.0).abs() < 1e-12);
        // bipartite between the two groups
        let g = SocialGraph::from_edges(4, vec![(0, 2), (1, 3), (0, 3)]).unwrap();
        assert!((assortativity(&g, &s).unwrap() + 1.0).abs() < 1e-12);
        // single group
        let s = OpinionSnapshot::new(0, vec![0.5; 4]).unwrap();
        assert!(assortativity(&g, &s).is_err());
        let empty = SocialGraph::from_edges(4, Vec::new()).unwrap();
        assert!(assortativity(&empty, &s).is_err());
    }

    #[test]
    fn degree_heterogeneity_by_group() {
        let pop = PopulationSpec {
            n: 4000,
            group_fractions: NULL_MODEL_FRACTIONS,
            mean_degree: REFERENCE_MEAN_DEGREES,
        };
        let (g, s) = generate(&pop, &HomophilySpec::random_mixing(), 5).unwrap();
        let mut sum = [0.0; 5];
        let mut cnt = [0.0; 5];
        for i in 0..g.len() as u32 {
            let k = IdeologicalGroup::of(s.get(i)).index();
            sum[k] += g.degree(i) as f64;
            cnt[k] += 1.0;
        }
        let means: Vec<f64> = (0..5).map(|k| sum[k] / cnt[k]).collect();
        for k in 0..5 {
            assert!((means[k] - REFERENCE_MEAN_DEGREES[k]).abs() < 1.5, "{means:?}");
        }
        assert!(means[0] > means[4]);
    }
}
