//! Subscription-based opinion estimation: latent agents follow biased
//! information sources, an observer reads opinions off those subscriptions
//! with error, and the shift analysis is rerun on what the observer sees.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{classify_shifts, epoc_decomposition, EpocDecomposition, ShiftOutcome};
use crate::dynamics::{Dynamics, Trajectory};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::model::OpinionSnapshot;
use crate::rng::{self, purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationSource {
    pub id: u32,
    pub bias: f64,
}

/// `points` evenly spaced biases on `[0, 1]`, each repeated `copies` times.
pub fn source_grid(points: usize, copies: usize) -> Result<Vec<InformationSource>> {
    if points < 2 || copies == 0 {
        return Err(Error::InvalidParameter(
            "source grid needs at least two points and one copy".into(),
        ));
    }
    let step = 1.0 / (points - 1) as f64;
    Ok((0..points * copies)
        .map(|k| InformationSource {
            id: k as u32,
            bias: ((k / copies) as f64 * step).min(1.0),
        })
        .collect())
}

pub fn sources_from_biases(biases: &[f64]) -> Result<Vec<InformationSource>> {
    biases
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            if (0.0..=1.0).contains(&b) {
                Ok(InformationSource { id: k as u32, bias: b })
            } else {
                Err(Error::InvalidParameter(format!("source bias {b} outside [0, 1]")))
            }
        })
        .collect()
}

/// Parameters of the follow rule
/// `p = logistic(alpha * (threshold - |bias - x|) + beta * (f - contagion_midpoint))`
/// where `f` is the fraction of friends already following the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubscriptionParams {
    pub alpha: f64,
    pub beta: f64,
    pub threshold: f64,
    pub contagion_midpoint: f64,
    /// Chance that an agent reconsiders its subscriptions in a round;
    /// otherwise it keeps them unchanged.
    pub revision_probability: f64,
}

impl Default for SubscriptionParams {
    fn default() -> Self {
        SubscriptionParams {
            alpha: 40.0,
            beta: 0.0,
            threshold: 0.15,
            contagion_midpoint: 0.0,
            revision_probability: 1.0,
        }
    }
}

impl SubscriptionParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.alpha.is_nan() || self.alpha < 0.0 || self.beta.is_nan() || self.beta < 0.0 {
            return bad("subscription alpha and beta must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("subscription threshold must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.contagion_midpoint) {
            return bad("contagion midpoint must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.revision_probability) {
            return bad("revision probability must lie in [0, 1]");
        }
        Ok(())
    }
}

// 0 * inf is taken as 0 so that the infinite-gain limits stay well defined.
fn scaled(gain: f64, u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        gain * u
    }
}

/// Follow probability for one (agent, source) pair.
pub fn follow_probability(params: &SubscriptionParams, bias: f64, latent: f64, friend_fraction: f64) -> f64 {
    let z = scaled(params.alpha, params.threshold - (bias - latent).abs())
        + scaled(params.beta, friend_fraction - params.contagion_midpoint);
    if z.is_nan() {
        0.5
    } else {
        1.0 / (1.0 + (-z).exp())
    }
}

/// Sorted source indices followed by each agent.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SubscriptionState {
    follows: Vec<Vec<u32>>,
}

impl SubscriptionState {
    pub fn empty(n: usize) -> Self {
        SubscriptionState {
            follows: vec![Vec::new(); n],
        }
    }

    /// Sorts and deduplicates each list.
    pub fn from_lists(mut lists: Vec<Vec<u32>>) -> Self {
        for l in &mut lists {
            l.sort_unstable();
            l.dedup();
        }
        SubscriptionState { follows: lists }
    }

    pub fn len(&self) -> usize {
        self.follows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.follows.is_empty()
    }

    pub fn follows(&self, agent: u32) -> &[u32] {
        &self.follows[agent as usize]
    }

    fn check(&self, n: usize, sources: usize) -> Result<()> {
        if self.follows.len() != n {
            return Err(Error::SnapshotSizeMismatch {
                expected: n,
                got: self.follows.len(),
            });
        }
        if let Some(&s) = self.follows.iter().flatten().find(|&&s| s as usize >= sources) {
            return Err(Error::InvalidParameter(format!("subscription to unknown source {s}")));
        }
        Ok(())
    }
}

/// One round of follow/unfollow decisions. Each revising agent redraws
/// every source independently with the follow probability, which also
/// drops sources that have become misaligned. Probabilities use latent
/// opinions and the friends' subscriptions from `prev`.
pub fn subscription_step(
    latent: &OpinionSnapshot,
    sources: &[InformationSource],
    graph: &SocialGraph,
    params: &SubscriptionParams,
    prev: &SubscriptionState,
    seed: u64,
    round: u64,
) -> Result<SubscriptionState> {
    if sources.is_empty() {
        return Err(Error::InvalidParameter("at least one information source is required".into()));
    }
    latent.check_matches(graph)?;
    prev.check(graph.len(), sources.len())?;
    params.validate()?;
    let x = latent.opinions();
    let follows = (0..graph.len() as u32)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, purpose::SUBSCRIPTIONS, round, i as u64);
            if params.revision_probability < 1.0 && !r.random_bool(params.revision_probability) {
                return prev.follows(i).to_vec();
            }
            let nbrs = graph.neighbors(i);
            let mut friends = vec![0u32; sources.len()];
            for &j in nbrs {
                for &s in prev.follows(j) {
                    friends[s as usize] += 1;
                }
            }
            let deg = nbrs.len().max(1) as f64;
            let mut chosen = Vec::new();
            for (s, src) in sources.iter().enumerate() {
                let p = follow_probability(params, src.bias, x[i as usize], friends[s] as f64 / deg);
                if r.random::<f64>() < p {
                    chosen.push(s as u32);
                }
            }
            chosen
        })
        .collect();
    Ok(SubscriptionState { follows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObserverSpec {
    /// Standard deviation of the Gaussian estimation error.
    pub noise: f64,
    pub min_subscriptions: usize,
    pub max_subscriptions: usize,
}

impl Default for ObserverSpec {
    fn default() -> Self {
        ObserverSpec {
            noise: 0.0,
            min_subscriptions: 10,
            max_subscriptions: 200,
        }
    }
}

impl ObserverSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidParameter("observer noise must be finite and non-negative".into()));
        }
        if self.min_subscriptions == 0 || self.min_subscriptions > self.max_subscriptions {
            return Err(Error::InvalidParameter(
                "subscription bounds need 1 <= min <= max".into(),
            ));
        }
        Ok(())
    }
}

/// Observer estimates; `None` marks an agent outside the subscription bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservedSnapshot {
    pub time_index: u32,
    pub estimates: Vec<Option<f64>>,
}

impl ObservedSnapshot {
    pub fn observable(&self) -> usize {
        self.estimates.iter().filter(|e| e.is_some()).count()
    }
}

/// Mean bias of followed sources plus clamped Gaussian error.
pub fn observe(
    subs: &SubscriptionState,
    sources: &[InformationSource],
    spec: &ObserverSpec,
    seed: u64,
    time_index: u32,
) -> Result<ObservedSnapshot> {
    spec.validate()?;
    subs.check(subs.len(), sources.len())?;
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let estimates = (0..subs.len() as u32)
        .into_par_iter()
        .map(|i| {
            let f = subs.follows(i);
            if f.len() < spec.min_subscriptions || f.len() > spec.max_subscriptions {
                return None;
            }
            let mean = if f.len() == 1 {
                sources[f[0] as usize].bias
            } else {
                f.iter().map(|&s| sources[s as usize].bias).sum::<f64>() / f.len() as f64
            };
            let e = if spec.noise > 0.0 {
                let mut r = rng::stream(seed, purpose::OBSERVER_NOISE, time_index as u64, i as u64);
                mean + noise.sample(&mut r)
            } else {
                mean
            };
            Some(e.clamp(0.0, 1.0))
        })
        .collect();
    Ok(ObservedSnapshot { time_index, estimates })
}

/// Pull of radical latent opinions back toward the centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentDrive {
    /// Agents with `|x - 0.5| > radius` are affected.
    pub radius: f64,
    /// Fraction of the gap to 0.5 closed per step.
    pub rate: f64,
}

impl LatentDrive {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.radius) || !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::InvalidParameter(
                "drive radius must lie in [0, 0.5] and rate in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, x: f64) -> f64 {
        if (x - 0.5).abs() > self.radius {
            x + self.rate * (0.5 - x)
        } else {
            x
        }
    }
}

/// How information sources are laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourcePlan {
    Grid { points: usize, copies: usize },
    Explicit { biases: Vec<f64> },
    /// One private source per agent sitting at its latent opinion, followed
    /// by that agent alone.
    TrackLatent,
}

impl Default for SourcePlan {
    fn default() -> Self {
        SourcePlan::Grid { points: 61, copies: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct ObservedExperiment {
    pub dynamics: Dynamics,
    pub subscriptions: SubscriptionParams,
    pub observer: ObserverSpec,
    pub sources: SourcePlan,
    /// Shift applied to every source bias between observations.
    pub bias_drift: f64,
    pub drive: Option<LatentDrive>,
    /// Subscription rounds run on the initial opinions before the first
    /// observation.
    pub warmup_rounds: u32,
    pub seed: u64,
}

/// Latent and observed trajectories together with the agents the analysis
/// could use.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub latent: Trajectory,
    pub observed: Vec<ObservedSnapshot>,
    /// Subgraph induced by agents observable at every observation.
    pub analysis_graph: SocialGraph,
    /// Original ids of the subgraph's agents.
    pub analysis_agents: Vec<u32>,
    pub latent_snapshots: Vec<OpinionSnapshot>,
    pub observed_snapshots: Vec<OpinionSnapshot>,
    pub pairs: Vec<PairComparison>,
}

/// Latent versus observed classification for one snapshot pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairComparison {
    pub time_before: u32,
    pub time_after: u32,
    pub latent: Option<EpocDecomposition>,
    pub observed: Option<EpocDecomposition>,
    /// `confusion[latent outcome][observed outcome]`, indexed by
    /// [`ShiftOutcome::index`].
    pub confusion: [[u64; 5]; 5],
}

impl PairComparison {
    pub fn agreement(&self) -> u64 {
        (0..5).map(|k| self.confusion[k][k]).sum()
    }
}

impl ObservedExperiment {
    pub fn validate_for(&self, graph: &SocialGraph) -> Result<()> {
        self.dynamics.validate_for(graph)?;
        self.subscriptions.validate()?;
        self.observer.validate()?;
        if let Some(d) = &self.drive {
            d.validate()?;
        }
        if !self.bias_drift.is_finite() || self.bias_drift.abs() > 1.0 {
            return Err(Error::InvalidParameter("bias drift must lie in [-1, 1]".into()));
        }
        match &self.sources {
            SourcePlan::Grid { points, copies } => {
                source_grid(*points, *copies)?;
            }
            SourcePlan::Explicit { biases } => {
                if biases.is_empty() {
                    return Err(Error::InvalidParameter("explicit source list is empty".into()));
                }
                sources_from_biases(biases)?;
            }
            SourcePlan::TrackLatent => {}
        }
        Ok(())
    }

    fn initial_sources(&self, latent: &[f64]) -> Result<Vec<InformationSource>> {
        match &self.sources {
            SourcePlan::Grid { points, copies } => source_grid(*points, *copies),
            SourcePlan::Explicit { biases } => sources_from_biases(biases),
            SourcePlan::TrackLatent => sources_from_biases(latent),
        }
    }

    fn tracking_state(n: usize) -> SubscriptionState {
        SubscriptionState {
            follows: (0..n as u32).map(|i| vec![i]).collect(),
        }
    }

    /// Runs `observations` observation intervals after the initial one.
    pub fn run(&self, graph: &SocialGraph, initial: &OpinionSnapshot, observations: usize) -> Result<ExperimentResult> {
        if observations == 0 {
            return Err(Error::InvalidParameter("observations must be at least 1".into()));
        }
        initial.check_matches(graph)?;
        self.validate_for(graph)?;
        let n = graph.len();
        let tracking = matches!(self.sources, SourcePlan::TrackLatent);
        let mut state = initial.opinions().to_vec();
        let mut sources = self.initial_sources(&state)?;
        let mut round = 0u64;
        let mut subs = if tracking {
            Self::tracking_state(n)
        } else {
            let mut s = SubscriptionState::empty(n);
            let warm = SubscriptionParams {
                revision_probability: 1.0,
                ..self.subscriptions
            };
            for _ in 0..self.warmup_rounds.max(1) {
                s = subscription_step(initial, &sources, graph, &warm, &s, self.seed, round)?;
                round += 1;
            }
            s
        };
        let t0 = initial.time_index();
        let mut latent = vec![initial.clone()];
        let mut observed = vec![observe(&subs, &sources, &self.observer, self.seed, t0)?];
        let spo = self.dynamics.schedule.steps_per_observation as u64;
        for obs in 0..observations as u64 {
            for s in 0..spo {
                state = self.dynamics.step_values(graph, &state, obs * spo + s);
                if let Some(d) = &self.drive {
                    state.iter_mut().for_each(|x| *x = d.apply(*x));
                }
            }
            let t = t0 + obs as u32 + 1;
            let snap = OpinionSnapshot::new(t, state.clone())?;
            if tracking {
                sources = sources_from_biases(&state)?;
            } else {
                if self.bias_drift != 0.0 {
                    for src in &mut sources {
                        src.bias = (src.bias + self.bias_drift).clamp(0.0, 1.0);
                    }
                }
                subs = subscription_step(&snap, &sources, graph, &self.subscriptions, &subs, self.seed, round)?;
                round += 1;
            }
            observed.push(observe(&subs, &sources, &self.observer, self.seed, t)?);
            latent.push(snap);
        }
        let keep: Vec<bool> = (0..n).map(|i| observed.iter().all(|o| o.estimates[i].is_some())).collect();
        let (analysis_graph, analysis_agents) = graph.induced_subgraph(&keep);
        let restrict = |values: &dyn Fn(usize) -> f64, t: u32| {
            OpinionSnapshot::new(t, analysis_agents.iter().map(|&i| values(i as usize)).collect())
        };
        let latent_snapshots = latent
            .iter()
            .map(|s| restrict(&|i| s.opinions()[i], s.time_index()))
            .collect::<Result<Vec<_>>>()?;
        let observed_snapshots = observed
            .iter()
            .map(|o| restrict(&|i| o.estimates[i].unwrap_or(0.0), o.time_index))
            .collect::<Result<Vec<_>>>()?;
        let pairs = (0..observations)
            .map(|k| {
                compare_pair(
                    &analysis_graph,
                    (&latent_snapshots[k], &latent_snapshots[k + 1]),
                    (&observed_snapshots[k], &observed_snapshots[k + 1]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentResult {
            latent: Trajectory {
                snapshots: latent,
                provenance: self.dynamics.provenance(graph),
            },
            observed,
            analysis_graph,
            analysis_agents,
            latent_snapshots,
            observed_snapshots,
            pairs,
        })
    }
}

/// Classifies both pairs on the same graph and cross-tabulates outcomes.
pub fn compare_pair(
    graph: &SocialGraph,
    latent: (&OpinionSnapshot, &OpinionSnapshot),
    observed: (&OpinionSnapshot, &OpinionSnapshot),
) -> Result<PairComparison> {
    let lr = classify_shifts(graph, latent.0, latent.1)?;
    let or = classify_shifts(graph, observed.0, observed.1)?;
    let mut confusion = [[0u64; 5]; 5];
    for (a, b) in lr.iter().zip(&or) {
        debug_assert_eq!(a.agent, b.agent);
        confusion[a.outcome().index()][b.outcome().index()] += 1;
    }
    Ok(PairComparison {
        time_before: observed.0.time_index(),
        time_after: observed.1.time_index(),
        latent: epoc_decomposition(&lr, false).ok(),
        observed: epoc_decomposition(&or, false).ok(),
        confusion,
    })
}

/// Row labels for confusion-matrix output.
pub fn outcome_labels() -> [&'static str; 5] {
    ShiftOutcome::ALL.map(|o| o.label())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{Direction, ShiftRecord, SkipClass};
    use crate::dynamics::Schedule;
    use crate::kernels::{ActivationModel, InfluenceKernel, KernelShape};
    use crate::model::{neighborhood_stats, IdeologicalGroup};
    use proptest::prelude::*;

    fn params(alpha: f64, beta: f64, threshold: f64, mid: f64) -> SubscriptionParams {
        SubscriptionParams {
            alpha,
            beta,
            threshold,
            contagion_midpoint: mid,
            revision_probability: 1.0,
        }
    }

    #[test]
    fn logistic_midpoint() {
        let p = params(8.0, 4.0, 0.2, 0.0);
        assert!((follow_probability(&p, 0.5, 0.3, 0.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn alignment_limit_is_deterministic() {
        let g = SocialGraph::complete(4);
        let x = OpinionSnapshot::new(0, vec![0.1, 0.4, 0.6, 0.93]).unwrap();
        let sources = source_grid(11, 1).unwrap();
        let p = params(f64::INFINITY, 0.0, 0.12, 0.0);
        let s = subscription_step(&x, &sources, &g, &p, &SubscriptionState::empty(4), 1, 0).unwrap();
        for i in 0..4u32 {
            let want: Vec<u32> = sources
                .iter()
                .filter(|src| (src.bias - x.get(i)).abs() < 0.12)
                .map(|src| src.id)
                .collect();
            assert_eq!(s.follows(i), &want[..]);
        }
    }

    #[test]
    fn contagion_limit_follows_majority() {
        // agent 0 has friends 1, 2, 3; two of them follow source 0, one follows source 1
        let g = SocialGraph::from_edges(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        let x = OpinionSnapshot::new(0, vec![0.5; 4]).unwrap();
        let sources = sources_from_biases(&[0.0, 1.0]).unwrap();
        let prev = SubscriptionState::from_lists(vec![vec![], vec![0], vec![0], vec![1]]);
        let p = params(0.0, f64::INFINITY, 0.2, 0.5);
        for seed in 0..20 {
            let s = subscription_step(&x, &sources, &g, &p, &prev, seed, 0).unwrap();
            assert_eq!(s.follows(0), &[0]);
        }
    }

    #[test]
    fn estimate_is_mean_of_biases() {
        let sources = sources_from_biases(&[0.1, 0.3, 0.8]).unwrap();
        let subs = SubscriptionState::from_lists(vec![vec![0, 1], vec![2], vec![]]);
        let spec = ObserverSpec {
            noise: 0.0,
            min_subscriptions: 1,
            max_subscriptions: 200,
        };
        let o = observe(&subs, &sources, &spec, 0, 1).unwrap();
        assert!((o.estimates[0].unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(o.estimates[1], Some(0.8));
        assert_eq!(o.estimates[2], None);
        assert_eq!(o.observable(), 2);
    }

    #[test]
    fn bounds_mark_unobservable() {
        let sources = source_grid(21, 1).unwrap();
        let subs = SubscriptionState::from_lists(vec![(0..9).collect(), (0..10).collect(), (0..21).collect()]);
        let spec = ObserverSpec {
            noise: 0.0,
            min_subscriptions: 10,
            max_subscriptions: 20,
        };
        let o = observe(&subs, &sources, &spec, 0, 1).unwrap();
        assert_eq!(o.estimates.iter().map(Option::is_some).collect::<Vec<_>>(), vec![false, true, false]);
    }

    #[test]
    fn friend_dropping_a_source_yields_a_skip() {
        // agent 0 sits at M on one centrist source; its only friend sits at C
        // on three sources including a strongly conservative one. The friend
        // drops that source, the agent picks it up alone.
        let g = SocialGraph::from_edges(2, vec![(0, 1)]).unwrap();
        let sources = sources_from_biases(&[0.5, 0.45, 0.7, 0.95]).unwrap();
        let spec = ObserverSpec {
            noise: 0.0,
            min_subscriptions: 1,
            max_subscriptions: 200,
        };
        let before = SubscriptionState::from_lists(vec![vec![0], vec![1, 2, 3]]);
        let after = SubscriptionState::from_lists(vec![vec![3], vec![1, 2]]);
        let ob = observe(&before, &sources, &spec, 0, 1).unwrap();
        let oa = observe(&after, &sources, &spec, 0, 2).unwrap();
        let sb = OpinionSnapshot::new(1, ob.estimates.iter().map(|e| e.unwrap()).collect()).unwrap();
        let sa = OpinionSnapshot::new(2, oa.estimates.iter().map(|e| e.unwrap()).collect()).unwrap();
        assert_eq!(IdeologicalGroup::of(sb.get(0)), IdeologicalGroup::M);
        assert_eq!(IdeologicalGroup::of(sb.get(1)), IdeologicalGroup::C);
        let stats = neighborhood_stats(&g, &sb, 0).unwrap();
        let r = ShiftRecord::new(0, sb.get(0), sa.get(0), stats, sa.get(1));
        assert_eq!(r.direction, Some(Direction::Positive));
        assert_eq!(r.skip_class, SkipClass::Skipping);
        assert!(sa.get(0) > sb.get(1));
        assert_eq!(r.group_after, IdeologicalGroup::SC);
    }

    fn experiment(kernel: KernelShape, sources: SourcePlan, noise: f64) -> ObservedExperiment {
        ObservedExperiment {
            dynamics: Dynamics::new(
                InfluenceKernel::new(kernel).unwrap(),
                ActivationModel::AlwaysActive,
                Schedule::synchronous(3),
            ),
            subscriptions: SubscriptionParams::default(),
            observer: ObserverSpec {
                noise,
                min_subscriptions: 1,
                max_subscriptions: 200,
            },
            sources,
            bias_drift: 0.0,
            drive: None,
            warmup_rounds: 1,
            seed: 11,
        }
    }

    fn ring(n: usize) -> SocialGraph {
        SocialGraph::from_edges(n, (0..n as u32).flat_map(|i| [(i, (i + 1) % n as u32), (i, (i + 2) % n as u32)])).unwrap()
    }

    #[test]
    fn perfect_observer_is_identity() {
        let n = 60;
        let g = ring(n);
        let x0 = OpinionSnapshot::new(0, (0..n).map(|i| (i as f64 * 0.618).fract()).collect()).unwrap();
        let e = experiment(KernelShape::LinearPositive { gain: 0.4 }, SourcePlan::TrackLatent, 0.0);
        let res = e.run(&g, &x0, 3).unwrap();
        assert_eq!(res.analysis_agents.len(), n);
        for (l, o) in res.latent.snapshots.iter().zip(&res.observed) {
            let est: Vec<f64> = o.estimates.iter().map(|e| e.unwrap()).collect();
            assert_eq!(l.opinions(), &est[..]);
        }
        for p in &res.pairs {
            let total: u64 = p.confusion.iter().flatten().sum();
            assert_eq!(p.agreement(), total);
        }
    }

    #[test]
    fn common_stimulus_produces_positive_shifts() {
        let n = 200;
        let g = ring(n);
        let x0 = OpinionSnapshot::new(0, (0..n).map(|i| 0.1 + 0.5 * (i as f64 * 0.618).fract()).collect()).unwrap();
        let mut e = experiment(KernelShape::LinearPositive { gain: 0.5 }, SourcePlan::default(), 0.0);
        // no latent peer influence at all
        e.dynamics.kernel = e.dynamics.kernel.clone().with_stubborn(0..n as u32);
        e.bias_drift = 0.1;
        e.subscriptions.revision_probability = 0.0;
        let res = e.run(&g, &x0, 1).unwrap();
        assert_eq!(res.latent.snapshots[0].opinions(), res.latent.snapshots[1].opinions());
        let p = &res.pairs[0];
        assert_eq!(p.latent.unwrap().remarkable, 0);
        assert!(p.observed.unwrap().epoc_pos > 0.0);
    }

    #[test]
    fn experiment_is_deterministic() {
        let n = 80;
        let g = ring(n);
        let x0 = OpinionSnapshot::new(0, (0..n).map(|i| (i as f64 * 0.377).fract()).collect()).unwrap();
        let e = experiment(KernelShape::LinearPositive { gain: 0.3 }, SourcePlan::default(), 0.05);
        let a = e.run(&g, &x0, 2).unwrap();
        let b = e.run(&g, &x0, 2).unwrap();
        assert_eq!(a.observed, b.observed);
        assert_eq!(a.analysis_agents, b.analysis_agents);
    }

    #[test]
    fn drive_pulls_radicals_in() {
        let d = LatentDrive { radius: 0.3, rate: 0.5 };
        assert_eq!(d.apply(0.9), 0.7);
        assert_eq!(d.apply(0.7), 0.7);
        assert_eq!(d.apply(0.0), 0.25);
    }

    #[test]
    fn empty_sources_rejected() {
        let g = SocialGraph::complete(2);
        let x = OpinionSnapshot::new(0, vec![0.1, 0.2]).unwrap();
        let r = subscription_step(&x, &[], &g, &SubscriptionParams::default(), &SubscriptionState::empty(2), 0, 0);
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn estimates_stay_in_range(biases in prop::collection::vec(0.0..=1.0f64, 1..30), noise in 0.0..3.0f64, seed in any::<u64>()) {
            let sources = sources_from_biases(&biases).unwrap();
            let m = biases.len() as u32;
            let subs = SubscriptionState::from_lists((0..m).map(|k| (0..=k).collect()).collect());
            let spec = ObserverSpec { noise, min_subscriptions: 1, max_subscriptions: 200 };
            let o = observe(&subs, &sources, &spec, seed, 0).unwrap();
            for e in o.estimates {
                let e = e.unwrap();
                prop_assert!((0.0..=1.0).contains(&e));
            }
        }

        #[test]
        fn follow_probability_in_unit_interval(b in 0.0..=1.0f64, x in 0.0..=1.0f64, f in 0.0..=1.0f64,
                                               a in prop_oneof![0.0..100.0f64, Just(f64::INFINITY)],
                                               be in prop_oneof![0.0..100.0f64, Just(f64::INFINITY)]) {
            let p = follow_probability(&params(a, be, 0.2, 0.5), b, x, f);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
