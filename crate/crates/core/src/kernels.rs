//! Influence kernels: the response coefficient `l` in
//! `x' = x + l * (source - x)` and the matching activation models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the response coefficient as a function of the two opinions.
///
/// All variants except the linear ones depend only on the distance
/// `|x - source|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelShape {
    /// Constant positive coefficient; `0 < gain <= 1` rules out skips.
    LinearPositive { gain: f64 },
    /// Inverted-U coefficient: zero at distance 0 and `2 * peak_distance`,
    /// `peak_gain` at `peak_distance`, zero beyond.
    ModeratedPositive { peak_distance: f64, peak_gain: f64 },
    /// `gain` while the distance is within `epsilon` (inclusive), else zero.
    BoundedConfidence { epsilon: f64, gain: f64 },
    /// Like bounded confidence but with a weaker nonzero `gain_outside`.
    RelaxedBoundedConfidence {
        epsilon: f64,
        gain_inside: f64,
        gain_outside: f64,
    },
    /// Constant negative coefficient.
    LinearNegative { gain: f64 },
    /// Mirror image of [`KernelShape::ModeratedPositive`].
    ModeratedNegative { peak_distance: f64, peak_gain: f64 },
    /// Positive hump below `crossover`, negative hump between `crossover`
    /// and `cutoff`, zero beyond. Each hump is a parabola with its vertex at
    /// the given peak and a root at `crossover`, clipped to its sign.
    CombinedPositiveNegative {
        crossover: f64,
        positive_peak_distance: f64,
        positive_peak_gain: f64,
        negative_peak_distance: f64,
        negative_peak_gain: f64,
        cutoff: f64,
    },
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

/// Inverted-U hump: zero at 0 and `2 * peak`, `gain` at `peak`.
#[inline]
fn hump(distance: f64, peak: f64, gain: f64) -> f64 {
    if distance >= 2.0 * peak {
        return 0.0;
    }
    let u = distance / peak;
    gain * u * (2.0 - u)
}

impl KernelShape {
    pub fn validate(&self) -> Result<()> {
        use KernelShape::*;
        match *self {
            LinearPositive { gain } => {
                check(gain > 0.0 && gain <= 1.0, || format!("linear positive gain {gain} not in (0, 1]"))
            }
            ModeratedPositive {
                peak_distance,
                peak_gain,
            } => {
                check(peak_distance > 0.0 && peak_distance <= 0.5, || {
                    format!("peak distance {peak_distance} not in (0, 0.5]")
                })?;
                check(peak_gain > 0.0 && peak_gain <= 1.0, || {
                    format!("moderated positive peak gain {peak_gain} not in (0, 1]")
                })
            }
            BoundedConfidence { epsilon, gain } => {
                check((0.0..=1.0).contains(&epsilon), || format!("epsilon {epsilon} not in [0, 1]"))?;
                check(gain > 0.0 && gain <= 1.0, || format!("gain {gain} not in (0, 1]"))
            }
            RelaxedBoundedConfidence {
                epsilon,
                gain_inside,
                gain_outside,
            } => {
                check((0.0..=1.0).contains(&epsilon), || format!("epsilon {epsilon} not in [0, 1]"))?;
                check(gain_inside > 0.0 && gain_inside <= 1.0, || {
                    format!("inside gain {gain_inside} not in (0, 1]")
                })?;
                check(gain_outside > 0.0 && gain_outside < gain_inside, || {
                    format!("outside gain {gain_outside} not in (0, {gain_inside})")
                })
            }
            LinearNegative { gain } => {
                check((-1.0..0.0).contains(&gain), || format!("linear negative gain {gain} not in [-1, 0)"))
            }
            ModeratedNegative {
                peak_distance,
                peak_gain,
            } => {
                check(peak_distance > 0.0 && peak_distance <= 0.5, || {
                    format!("peak distance {peak_distance} not in (0, 0.5]")
                })?;
                check((-1.0..0.0).contains(&peak_gain), || {
                    format!("moderated negative peak gain {peak_gain} not in [-1, 0)")
                })
            }
            CombinedPositiveNegative {
                crossover,
                positive_peak_distance,
                positive_peak_gain,
                negative_peak_distance,
                negative_peak_gain,
                cutoff,
            } => {
                check(crossover > 0.0 && crossover < cutoff && cutoff <= 1.0, || {
                    format!("need 0 < crossover ({crossover}) < cutoff ({cutoff}) <= 1")
                })?;
                check(positive_peak_distance > 0.0 && positive_peak_distance < crossover, || {
                    format!("positive peak distance {positive_peak_distance} not in (0, crossover)")
                })?;
                check(
                    negative_peak_distance > crossover && negative_peak_distance < cutoff,
                    || format!("negative peak distance {negative_peak_distance} not in (crossover, cutoff)"),
                )?;
                check(positive_peak_gain > 0.0 && positive_peak_gain <= 1.0, || {
                    format!("positive peak gain {positive_peak_gain} not in (0, 1]")
                })?;
                check((-1.0..0.0).contains(&negative_peak_gain), || {
                    format!("negative peak gain {negative_peak_gain} not in [-1, 0)")
                })
            }
        }
    }

    /// Response coefficient `l` for an agent at `xi` facing a source at `x_src`.
    #[inline]
    pub fn value(&self, xi: f64, x_src: f64) -> f64 {
        use KernelShape::*;
        let d = (xi - x_src).abs();
        match *self {
            LinearPositive { gain } | LinearNegative { gain } => gain,
            ModeratedPositive {
                peak_distance,
                peak_gain,
            }
            | ModeratedNegative {
                peak_distance,
                peak_gain,
            } => hump(d, peak_distance, peak_gain),
            BoundedConfidence { epsilon, gain } => {
                if d <= epsilon {
                    gain
                } else {
                    0.0
                }
            }
            RelaxedBoundedConfidence {
                epsilon,
                gain_inside,
                gain_outside,
            } => {
                if d <= epsilon {
                    gain_inside
                } else {
                    gain_outside
                }
            }
            CombinedPositiveNegative {
                crossover,
                positive_peak_distance: pd,
                positive_peak_gain: pg,
                negative_peak_distance: nd,
                negative_peak_gain: ng,
                cutoff,
            } => {
                if d < crossover {
                    let u = (d - pd) / (crossover - pd);
                    (pg * (1.0 - u * u)).max(0.0)
                } else if d < cutoff {
                    let u = (d - nd) / (nd - crossover);
                    (ng * (1.0 - u * u)).min(0.0)
                } else {
                    0.0
                }
            }
        }
    }

    /// True for shapes that never push an agent away from its source and
    /// never overshoot it.
    pub fn is_positive_family(&self) -> bool {
        matches!(
            self,
            KernelShape::LinearPositive { .. }
                | KernelShape::ModeratedPositive { .. }
                | KernelShape::BoundedConfidence { .. }
                | KernelShape::RelaxedBoundedConfidence { .. }
        )
    }

    /// The shape reflected on the horizontal axis, for the shapes that have
    /// a counterpart in the other family.
    pub fn mirrored(&self) -> Option<KernelShape> {
        use KernelShape::*;
        match *self {
            LinearPositive { gain } => Some(LinearNegative { gain: -gain }),
            LinearNegative { gain } => Some(LinearPositive { gain: -gain }),
            ModeratedPositive {
                peak_distance,
                peak_gain,
            } => Some(ModeratedNegative {
                peak_distance,
                peak_gain: -peak_gain,
            }),
            ModeratedNegative {
                peak_distance,
                peak_gain,
            } => Some(ModeratedPositive {
                peak_distance,
                peak_gain: -peak_gain,
            }),
            _ => None,
        }
    }
}

/// Prejudiced agents in the Friedkin-Johnsen sense: each agent keeps a
/// fixed anchor and blends it in with weight `1 - susceptibility`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prejudice {
    pub anchors: Vec<f64>,
    pub susceptibility: Vec<f64>,
}

impl Prejudice {
    pub fn validate(&self, n: usize) -> Result<()> {
        check(self.anchors.len() == n && self.susceptibility.len() == n, || {
            format!("prejudice arrays must have {n} entries")
        })?;
        check(self.anchors.iter().all(|g| (0.0..=1.0).contains(g)), || {
            "prejudice anchors must lie in [0, 1]".into()
        })?;
        check(self.susceptibility.iter().all(|l| (0.0..=1.0).contains(l)), || {
            "susceptibilities must lie in [0, 1]".into()
        })
    }
}

/// A kernel shape together with the agent-level modifiers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceKernel {
    pub shape: KernelShape,
    /// Sorted, distinct ids of agents that never update.
    stubborn: Vec<u32>,
    pub prejudice: Option<Prejudice>,
}

impl InfluenceKernel {
    pub fn new(shape: KernelShape) -> Result<Self> {
        shape.validate()?;
        Ok(InfluenceKernel {
            shape,
            stubborn: Vec::new(),
            prejudice: None,
        })
    }

    pub fn with_stubborn(mut self, agents: impl IntoIterator<Item = u32>) -> Self {
        self.stubborn = agents.into_iter().collect();
        self.stubborn.sort_unstable();
        self.stubborn.dedup();
        self
    }

    pub fn with_prejudice(mut self, prejudice: Prejudice) -> Self {
        self.prejudice = Some(prejudice);
        self
    }

    pub fn stubborn(&self) -> &[u32] {
        &self.stubborn
    }

    /// Checks agent-indexed modifiers against a population size.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        self.shape.validate()?;
        if let Some(&last) = self.stubborn.last() {
            if last as usize >= n {
                return Err(Error::AgentOutOfRange {
                    agent: last as u64,
                    n,
                });
            }
        }
        if let Some(p) = &self.prejudice {
            p.validate(n)?;
        }
        Ok(())
    }

    #[inline]
    pub fn is_stubborn(&self, agent: u32) -> bool {
        !self.stubborn.is_empty() && self.stubborn.binary_search(&agent).is_ok()
    }

    /// Coefficient for a specific agent; stubborn agents always get zero.
    #[inline]
    pub fn coefficient(&self, agent: u32, xi: f64, x_src: f64) -> f64 {
        if self.is_stubborn(agent) {
            0.0
        } else {
            self.shape.value(xi, x_src)
        }
    }

    /// Full update for one agent, including the prejudice blend.
    #[inline]
    pub fn update(&self, agent: u32, xi: f64, x_src: f64) -> f64 {
        if self.is_stubborn(agent) {
            return xi;
        }
        match &self.prejudice {
            Some(p) => fj_update(
                &self.shape,
                xi,
                x_src,
                p.anchors[agent as usize],
                p.susceptibility[agent as usize],
            ),
            None => apply_shift(xi, x_src, self.shape.value(xi, x_src)),
        }
    }
}

/// Opinion-shift rule `xi + l * (x_src - xi)`. When `0 <= l <= 1` the
/// result is kept inside the closed interval spanned by the two opinions.
#[inline]
pub fn apply_shift(xi: f64, x_src: f64, l: f64) -> f64 {
    let y = (1.0 - l) * xi + l * x_src;
    if (0.0..=1.0).contains(&l) {
        y.clamp(xi.min(x_src), xi.max(x_src))
    } else {
        y
    }
}

/// Friedkin-Johnsen blend of the kernel update with a fixed anchor.
pub fn fj_update(shape: &KernelShape, xi: f64, x_src: f64, anchor: f64, susceptibility: f64) -> f64 {
    let moved = apply_shift(xi, x_src, shape.value(xi, x_src));
    susceptibility * moved + (1.0 - susceptibility) * anchor
}

/// Probability that an agent acts on the influence it receives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActivationModel {
    AlwaysActive,
    /// `min(1, scale * |l(d) * d|)` with `d = x_src - x`: proportional to
    /// the size of the shift the kernel asks for.
    AbsKernelProportional { scale: f64 },
    /// `1 - confidence[i]`: confident agents rarely move.
    ConfidenceWeighted { confidence: Vec<f64> },
}

impl ActivationModel {
    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        match self {
            ActivationModel::AlwaysActive => Ok(()),
            ActivationModel::AbsKernelProportional { scale } => {
                check(scale.is_finite() && *scale >= 0.0, || format!("activation scale {scale} must be >= 0"))
            }
            ActivationModel::ConfidenceWeighted { confidence } => {
                if let Some(n) = n {
                    check(confidence.len() == n, || format!("confidence must have {n} entries"))?;
                }
                check(confidence.iter().all(|c| (0.0..=1.0).contains(c)), || {
                    "confidence values must lie in [0, 1]".into()
                })
            }
        }
    }

    pub fn is_always(&self) -> bool {
        matches!(self, ActivationModel::AlwaysActive)
    }

    #[inline]
    pub fn probability(&self, kernel: &InfluenceKernel, agent: u32, xi: f64, x_src: f64) -> f64 {
        match self {
            ActivationModel::AlwaysActive => 1.0,
            ActivationModel::AbsKernelProportional { scale } => {
                (scale * (kernel.coefficient(agent, xi, x_src) * (x_src - xi)).abs()).min(1.0)
            }
            ActivationModel::ConfidenceWeighted { confidence } => 1.0 - confidence[agent as usize],
        }
    }
}

/// Activation probability for agent 0 under a bare kernel shape.
pub fn activation_probability(model: &ActivationModel, shape: &KernelShape, xi: f64, x_src: f64) -> f64 {
    match model {
        ActivationModel::AlwaysActive => 1.0,
        ActivationModel::AbsKernelProportional { scale } => {
            (scale * (shape.value(xi, x_src) * (x_src - xi)).abs()).min(1.0)
        }
        ActivationModel::ConfidenceWeighted { confidence } => 1.0 - confidence[0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn combined_example() -> KernelShape {
        KernelShape::CombinedPositiveNegative {
            crossover: 0.4,
            positive_peak_distance: 0.2,
            positive_peak_gain: 0.5,
            negative_peak_distance: 0.6,
            negative_peak_gain: -0.3,
            cutoff: 0.9,
        }
    }

    #[test]
    fn linear_positive_is_constant() {
        let k = KernelShape::LinearPositive { gain: 0.5 };
        for (a, b) in [(0.0, 1.0), (0.3, 0.31), (0.9, 0.1)] {
            assert_eq!(k.value(a, b), 0.5);
        }
    }

    #[test]
    fn bounded_confidence_cuts_off() {
        let k = KernelShape::BoundedConfidence { epsilon: 0.2, gain: 0.5 };
        assert_eq!(k.value(0.1, 0.9), 0.0);
        assert_eq!(k.value(0.1, 0.25), 0.5);
        // closed boundary
        assert_eq!(k.value(0.0, 0.2), 0.5);
    }

    #[test]
    fn relaxed_bounded_confidence_keeps_weak_influence() {
        let k = KernelShape::RelaxedBoundedConfidence {
            epsilon: 0.2,
            gain_inside: 0.5,
            gain_outside: 0.05,
        };
        assert_eq!(k.value(0.1, 0.9), 0.05);
        assert_eq!(k.value(0.1, 0.2), 0.5);
    }

    #[test]
    fn combined_kernel_regions() {
        let k = combined_example();
        k.validate().unwrap();
        assert_eq!(k.value(0.0, 0.95), 0.0);
        assert!((k.value(0.0, 0.2) - 0.5).abs() < 1e-12);
        assert!((k.value(0.0, 0.6) + 0.3).abs() < 1e-12);
        assert_eq!(k.value(0.0, 0.4), 0.0);
        assert_eq!(k.value(0.0, 0.0), 0.0);
        assert!(k.value(0.0, 0.1) > 0.0);
        assert!(k.value(0.0, 0.5) < 0.0);
        // the negative hump closes at 0.8, before the cutoff
        assert_eq!(k.value(0.0, 0.85), 0.0);
    }

    #[test]
    fn moderated_positive_peak() {
        let k = KernelShape::ModeratedPositive {
            peak_distance: 0.3,
            peak_gain: 0.5,
        };
        assert_eq!(k.value(0.2, 0.2), 0.0);
        assert!((k.value(0.0, 0.3) - 0.5).abs() < 1e-15);
        assert_eq!(k.value(0.0, 0.6), 0.0);
        assert_eq!(k.value(0.0, 0.9), 0.0);
    }

    #[test]
    fn validation_rejects_skipping_gain() {
        assert!(KernelShape::LinearPositive { gain: 1.2 }.validate().is_err());
        assert!(KernelShape::LinearPositive { gain: 0.0 }.validate().is_err());
        assert!(KernelShape::LinearNegative { gain: 0.2 }.validate().is_err());
        assert!(KernelShape::BoundedConfidence { epsilon: 1.5, gain: 0.5 }.validate().is_err());
        let mut bad = combined_example();
        if let KernelShape::CombinedPositiveNegative { ref mut cutoff, .. } = bad {
            *cutoff = 0.3;
        }
        assert!(bad.validate().is_err());
    }

    #[test]
    fn activation_examples() {
        let k = KernelShape::LinearPositive { gain: 0.3 };
        assert_eq!(activation_probability(&ActivationModel::AlwaysActive, &k, 0.2, 0.9), 1.0);
        // full-width discrepancy: the curve value equals l
        let p = activation_probability(&ActivationModel::AbsKernelProportional { scale: 2.0 }, &k, 0.0, 1.0);
        assert!((p - 0.6).abs() < 1e-15);
        let p = activation_probability(&ActivationModel::AbsKernelProportional { scale: 2.0 }, &k, 0.2, 0.7);
        assert!((p - 0.3).abs() < 1e-15);
        let k = KernelShape::LinearPositive { gain: 0.5 };
        let p = activation_probability(&ActivationModel::AbsKernelProportional { scale: 10.0 }, &k, 0.2, 0.9);
        assert_eq!(p, 1.0);
        let c = ActivationModel::ConfidenceWeighted { confidence: vec![0.75] };
        assert_eq!(activation_probability(&c, &k, 0.2, 0.9), 0.25);
    }

    #[test]
    fn fj_examples() {
        let k = KernelShape::LinearPositive { gain: 0.5 };
        assert_eq!(fj_update(&k, 0.9, 0.1, 0.3, 0.0), 0.3);
        assert_eq!(fj_update(&k, 0.4, 0.8, 0.2, 1.0), apply_shift(0.4, 0.8, 0.5));
        // 0.5 * (0.4 + 0.5 * 0.4) + 0.5 * 0.2
        assert!((fj_update(&k, 0.4, 0.8, 0.2, 0.5) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn stubborn_agents_are_vetoed() {
        let k = InfluenceKernel::new(KernelShape::LinearPositive { gain: 1.0 })
            .unwrap()
            .with_stubborn([3, 1, 3]);
        assert_eq!(k.stubborn(), &[1, 3]);
        assert_eq!(k.coefficient(1, 0.0, 1.0), 0.0);
        assert_eq!(k.update(3, 0.2, 0.9), 0.2);
        assert_eq!(k.update(0, 0.2, 0.9), 0.9);
        assert!(k.validate_for(3).is_err());
        k.validate_for(4).unwrap();
    }

    fn positive_shapes() -> impl Strategy<Value = KernelShape> {
        prop_oneof![
            (0.01f64..=1.0).prop_map(|gain| KernelShape::LinearPositive { gain }),
            (0.01f64..=0.5, 0.01f64..=1.0).prop_map(|(peak_distance, peak_gain)| {
                KernelShape::ModeratedPositive { peak_distance, peak_gain }
            }),
            (0.0f64..=1.0, 0.01f64..=1.0).prop_map(|(epsilon, gain)| KernelShape::BoundedConfidence { epsilon, gain }),
            (0.0f64..=1.0, 0.5f64..=1.0, 0.01f64..0.5).prop_map(|(epsilon, gain_inside, gain_outside)| {
                KernelShape::RelaxedBoundedConfidence { epsilon, gain_inside, gain_outside }
            }),
        ]
    }

    proptest! {
        #[test]
        fn positive_updates_never_skip(shape in positive_shapes(), xi in 0.0f64..=1.0, xs in 0.0f64..=1.0) {
            prop_assert!(shape.validate().is_ok());
            let y = apply_shift(xi, xs, shape.value(xi, xs));
            prop_assert!(y >= xi.min(xs) && y <= xi.max(xs));
        }

        #[test]
        fn distance_only_dependence(shape in positive_shapes(), xi in 0.0f64..=0.5, d in 0.0f64..=0.5) {
            // same distance on either side of the agent gives the same coefficient
            let left = shape.value(xi + d, xi);
            let right = shape.value(xi, xi + d);
            prop_assert_eq!(left, right);
        }

        #[test]
        fn mirrored_shapes_negate(gain in 0.01f64..=1.0, pd in 0.01f64..=0.5, xi in 0.0f64..=1.0, xs in 0.0f64..=1.0) {
            for shape in [
                KernelShape::LinearPositive { gain },
                KernelShape::ModeratedPositive { peak_distance: pd, peak_gain: gain },
            ] {
                let m = shape.mirrored().unwrap();
                prop_assert!(m.validate().is_ok());
                prop_assert_eq!(m.value(xi, xs), -shape.value(xi, xs));
                prop_assert_eq!(m.mirrored().unwrap(), shape);
            }
        }

        #[test]
        fn combined_sign_pattern(d in 0.0f64..=1.0) {
            let k = combined_example();
            let v = k.value(0.0, d);
            if d < 0.4 { prop_assert!(v >= 0.0); }
            else if d < 0.9 { prop_assert!(v <= 0.0); }
            else { prop_assert_eq!(v, 0.0); }
        }

        #[test]
        fn abs_activation_in_unit_interval(scale in 0.0f64..50.0, xi in 0.0f64..=1.0, xs in 0.0f64..=1.0) {
            let p = activation_probability(&ActivationModel::AbsKernelProportional { scale }, &combined_example(), xi, xs);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
