//! Advancing opinions over a graph under a kernel and an update schedule.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::kernels::{ActivationModel, InfluenceKernel, KernelShape};
use crate::model::{neighborhood_mean, OpinionSnapshot};
use crate::rng::{self, purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Every agent reads the same pre-step state.
    Synchronous,
    /// `n` single-agent updates per step, agents drawn uniformly with
    /// replacement, each reading the current state.
    AsynchronousUniform,
}

/// Where an updating agent takes its influence from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceMode {
    /// Average opinion of all friends.
    NeighborhoodMean,
    /// One friend drawn uniformly per activation.
    RandomNeighbor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub steps_per_observation: u32,
    pub seed: u64,
}

impl Schedule {
    pub fn synchronous(seed: u64) -> Self {
        Schedule {
            kind: ScheduleKind::Synchronous,
            steps_per_observation: 1,
            seed,
        }
    }

    pub fn asynchronous(seed: u64) -> Self {
        Schedule {
            kind: ScheduleKind::AsynchronousUniform,
            steps_per_observation: 1,
            seed,
        }
    }

    pub fn with_steps_per_observation(mut self, steps: u32) -> Self {
        self.steps_per_observation = steps;
        self
    }
}

/// Kernel, activation, schedule and source mode bundled for a run.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub kernel: InfluenceKernel,
    pub activation: ActivationModel,
    pub schedule: Schedule,
    pub source: SourceMode,
    pub clamp: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub kernel: KernelShape,
    pub stubborn_agents: usize,
    pub prejudiced: bool,
    pub activation: &'static str,
    pub schedule: Schedule,
    pub source: SourceMode,
    pub clamp: bool,
    pub graph_hash: String,
}

/// Snapshots at every observation, starting with the initial one.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<OpinionSnapshot>,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn last(&self) -> &OpinionSnapshot {
        self.snapshots.last().expect("trajectory always holds the initial snapshot")
    }
}

impl Dynamics {
    pub fn new(kernel: InfluenceKernel, activation: ActivationModel, schedule: Schedule) -> Self {
        Dynamics {
            kernel,
            activation,
            schedule,
            source: SourceMode::NeighborhoodMean,
            clamp: true,
        }
    }

    pub fn with_source(mut self, source: SourceMode) -> Self {
        self.source = source;
        self
    }

    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp = clamp;
        self
    }

    pub fn validate_for(&self, graph: &SocialGraph) -> Result<()> {
        self.kernel.validate_for(graph.len())?;
        self.activation.validate(Some(graph.len()))?;
        if self.schedule.steps_per_observation == 0 {
            return Err(Error::InvalidParameter("steps_per_observation must be positive".into()));
        }
        Ok(())
    }

    fn needs_rng(&self) -> bool {
        !self.activation.is_always() || self.source == SourceMode::RandomNeighbor
    }

    /// New opinion of one agent given the state it reads.
    #[inline]
    fn update_agent<R: Rng>(&self, graph: &SocialGraph, state: &[f64], agent: u32, rng: Option<&mut R>) -> f64 {
        let xi = state[agent as usize];
        if self.kernel.is_stubborn(agent) {
            return xi;
        }
        let mut rng = rng;
        let src = match self.source {
            SourceMode::NeighborhoodMean => neighborhood_mean(graph, state, agent),
            SourceMode::RandomNeighbor => {
                let nbrs = graph.neighbors(agent);
                if nbrs.is_empty() {
                    None
                } else {
                    let r = rng.as_deref_mut().expect("pairwise mode draws a neighbor");
                    Some(state[nbrs[r.random_range(0..nbrs.len())] as usize])
                }
            }
        };
        let Some(src) = src else { return xi };
        if !self.activation.is_always() {
            let p = self.activation.probability(&self.kernel, agent, xi, src);
            let r = rng.as_deref_mut().expect("activation draws a uniform");
            if r.random::<f64>() >= p {
                return xi;
            }
        }
        let y = self.kernel.update(agent, xi, src);
        if self.clamp {
            y.clamp(0.0, 1.0)
        } else {
            y
        }
    }

    /// One micro-step on raw opinion values. `step_index` keys the random
    /// streams, so equal indices give equal results.
    pub fn step_values(&self, graph: &SocialGraph, state: &[f64], step_index: u64) -> Vec<f64> {
        let seed = self.schedule.seed;
        match self.schedule.kind {
            ScheduleKind::Synchronous => {
                let use_rng = self.needs_rng();
                (0..graph.len() as u32)
                    .into_par_iter()
                    .map(|i| {
                        if use_rng {
                            let mut r = rng::stream(seed, purpose::DYNAMICS, step_index, i as u64);
                            self.update_agent(graph, state, i, Some(&mut r))
                        } else {
                            self.update_agent::<rng::StreamRng>(graph, state, i, None)
                        }
                    })
                    .collect()
            }
            ScheduleKind::AsynchronousUniform => {
                let mut next = state.to_vec();
                let n = graph.len();
                if n == 0 {
                    return next;
                }
                let mut r = rng::stream(seed, purpose::ASYNC_SCHEDULE, step_index, 0);
                for _ in 0..n {
                    let i = r.random_range(0..n) as u32;
                    next[i as usize] = self.update_agent(graph, &next, i, Some(&mut r));
                }
                next
            }
        }
    }

    /// One micro-step on a snapshot. Fails if clamping is off and an
    /// opinion leaves `[0, 1]`.
    pub fn step(&self, graph: &SocialGraph, snapshot: &OpinionSnapshot, step_index: u64) -> Result<OpinionSnapshot> {
        snapshot.check_matches(graph)?;
        let next = self.step_values(graph, snapshot.opinions(), step_index);
        OpinionSnapshot::new(snapshot.time_index() + 1, next)
    }

    /// `observations` snapshots after the initial one, each
    /// `steps_per_observation` micro-steps apart.
    pub fn run(&self, graph: &SocialGraph, initial: &OpinionSnapshot, observations: usize) -> Result<Trajectory> {
        if observations == 0 {
            return Err(Error::InvalidParameter("observations must be at least 1".into()));
        }
        initial.check_matches(graph)?;
        self.validate_for(graph)?;
        let spo = self.schedule.steps_per_observation as u64;
        let mut snapshots = Vec::with_capacity(observations + 1);
        snapshots.push(initial.clone());
        let mut state = initial.opinions().to_vec();
        for obs in 0..observations as u64 {
            for s in 0..spo {
                state = self.step_values(graph, &state, obs * spo + s);
            }
            let t = initial.time_index() + obs as u32 + 1;
            snapshots.push(OpinionSnapshot::new(t, state.clone())?);
        }
        Ok(Trajectory {
            snapshots,
            provenance: self.provenance(graph),
        })
    }

    pub fn provenance(&self, graph: &SocialGraph) -> Provenance {
        Provenance {
            kernel: self.kernel.shape.clone(),
            stubborn_agents: self.kernel.stubborn().len(),
            prejudiced: self.kernel.prejudice.is_some(),
            activation: match self.activation {
                ActivationModel::AlwaysActive => "always_active",
                ActivationModel::AbsKernelProportional { .. } => "abs_kernel_proportional",
                ActivationModel::ConfidenceWeighted { .. } => "confidence_weighted",
            },
            schedule: self.schedule,
            source: self.source,
            clamp: self.clamp,
            graph_hash: graph.content_hash(),
        }
    }
}

/// Max minus min opinion.
pub fn spread(snapshot: &OpinionSnapshot) -> f64 {
    spread_of(snapshot.opinions())
}

pub fn spread_of(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> (SocialGraph, OpinionSnapshot) {
        let g = SocialGraph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap();
        (g, OpinionSnapshot::new(1, vec![0.0, 0.5, 1.0]).unwrap())
    }

    fn linear(gain: f64) -> InfluenceKernel {
        InfluenceKernel::new(KernelShape::LinearPositive { gain }).unwrap()
    }

    #[test]
    fn path_graph_half_step() {
        // oracle: x0' = 0 + 0.5 * (0.5 - 0) = 0.25; x1' = 0.5 + 0.5 * (0.5 - 0.5); x2' = 0.75
        let (g, s) = path3();
        let d = Dynamics::new(linear(0.5), ActivationModel::AlwaysActive, Schedule::synchronous(1));
        let next = d.step(&g, &s, 0).unwrap();
        assert_eq!(next.opinions(), &[0.25, 0.5, 0.75]);
        assert_eq!(next.time_index(), 2);
    }

    #[test]
    fn full_averaging_moves_to_neighbor_mean() {
        let g = SocialGraph::from_edges(4, vec![(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
        let s = OpinionSnapshot::new(0, vec![0.1, 0.4, 0.9, 0.3]).unwrap();
        let d = Dynamics::new(linear(1.0), ActivationModel::AlwaysActive, Schedule::synchronous(1));
        let next = d.step(&g, &s, 0).unwrap();
        for i in 0..4 {
            let m = neighborhood_mean(&g, s.opinions(), i).unwrap();
            assert_eq!(next.get(i), m);
        }
    }

    #[test]
    fn zero_kernel_is_identity() {
        let (g, s) = path3();
        let k = InfluenceKernel::new(KernelShape::BoundedConfidence { epsilon: 0.0, gain: 0.5 }).unwrap();
        let d = Dynamics::new(k, ActivationModel::AlwaysActive, Schedule::synchronous(1));
        assert_eq!(d.step(&g, &s, 0).unwrap().opinions(), s.opinions());
    }

    #[test]
    fn all_stubborn_is_identity() {
        let (g, s) = path3();
        let k = InfluenceKernel::new(KernelShape::LinearNegative { gain: -0.8 })
            .unwrap()
            .with_stubborn(0..3);
        for kind in [Schedule::synchronous(3), Schedule::asynchronous(3)] {
            let d = Dynamics::new(k.clone(), ActivationModel::AlwaysActive, kind);
            let t = d.run(&g, &s, 5).unwrap();
            assert!(t.snapshots.iter().all(|x| x.opinions() == s.opinions()));
        }
    }

    #[test]
    fn single_observation_applies_one_step() {
        let (g, s) = path3();
        let d = Dynamics::new(linear(0.5), ActivationModel::AlwaysActive, Schedule::synchronous(1));
        let t = d.run(&g, &s, 1).unwrap();
        assert_eq!(t.snapshots.len(), 2);
        assert_eq!(t.snapshots[1].opinions(), d.step(&g, &s, 0).unwrap().opinions());
        assert!(d.run(&g, &s, 0).is_err());
    }

    #[test]
    fn steps_per_observation_compose() {
        let (g, s) = path3();
        let d = Dynamics::new(linear(0.5), ActivationModel::AlwaysActive, Schedule::synchronous(1));
        let fine = d.run(&g, &s, 4).unwrap();
        let coarse = Dynamics::new(
            linear(0.5),
            ActivationModel::AlwaysActive,
            Schedule::synchronous(1).with_steps_per_observation(2),
        )
        .run(&g, &s, 2)
        .unwrap();
        assert_eq!(coarse.snapshots[2].opinions(), fine.snapshots[4].opinions());
        assert_eq!(coarse.snapshots[2].time_index(), 3);
    }

    #[test]
    fn unclamped_negative_run_leaves_unit_interval() {
        let (g, s) = path3();
        let k = InfluenceKernel::new(KernelShape::LinearNegative { gain: -1.0 }).unwrap();
        let d = Dynamics::new(k, ActivationModel::AlwaysActive, Schedule::synchronous(1)).with_clamp(false);
        let v = d.step_values(&g, s.opinions(), 0);
        assert!(v[0] < 0.0 && v[2] > 1.0);
        assert!(d.step(&g, &s, 0).is_err());
        let clamped = Dynamics { clamp: true, ..d };
        assert_eq!(clamped.step(&g, &s, 0).unwrap().opinions(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn prejudice_pins_fully_prejudiced_agents() {
        let (g, s) = path3();
        let k = linear(0.5).with_prejudice(crate::kernels::Prejudice {
            anchors: vec![0.3, 0.3, 0.3],
            susceptibility: vec![0.0, 1.0, 1.0],
        });
        let d = Dynamics::new(k, ActivationModel::AlwaysActive, Schedule::synchronous(1));
        let t = d.run(&g, &s, 3).unwrap();
        assert!(t.snapshots[1..].iter().all(|x| x.get(0) == 0.3));
    }

    #[test]
    fn spread_examples() {
        assert_eq!(spread(&OpinionSnapshot::new(0, vec![0.4; 3]).unwrap()), 0.0);
        assert_eq!(spread(&OpinionSnapshot::new(0, vec![0.0, 0.3, 1.0]).unwrap()), 1.0);
        assert_eq!(spread(&OpinionSnapshot::new(0, vec![0.25, 0.5, 0.75]).unwrap()), 0.5);
    }
}
