//! Gibbs policy over linear state-action features.
//!
//! `pi(a | s) = exp(theta . phi_sa) / sum_b exp(theta . phi_sb)` where the
//! sum runs over the legal actions only and `phi_sa` places the state
//! features in the block of action `a`. Since only one block is nonzero,
//! `theta . phi_sa` is the dot product of the state features with the
//! `a`-th block of `theta`; the full `4k` vector is never materialized.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::env::{Action, ActionSet};
use crate::error::{Error, Result};
use crate::features::FeatureDesign;
use crate::math;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "PolicyRepr"))]
pub struct Policy {
    design: FeatureDesign,
    theta: Vec<f64>,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct PolicyRepr {
    design: FeatureDesign,
    theta: Vec<f64>,
}

#[cfg(feature = "serde")]
impl TryFrom<PolicyRepr> for Policy {
    type Error = Error;

    fn try_from(repr: PolicyRepr) -> Result<Self> {
        Policy::from_parts(repr.design, repr.theta)
    }
}

/// Action probabilities in canonical order; illegal actions hold zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDistribution {
    probs: [f64; Action::COUNT],
    legal: ActionSet,
}

impl ActionDistribution {
    pub fn prob(&self, a: Action) -> f64 {
        self.probs[a.index()]
    }

    pub fn probs(&self) -> &[f64; Action::COUNT] {
        &self.probs
    }

    pub fn legal(&self) -> ActionSet {
        self.legal
    }
}

impl Policy {
    /// Uniform policy: all parameters zero.
    pub fn zeros(design: FeatureDesign) -> Self {
        Policy { design, theta: vec![0.0; Action::COUNT * design.k] }
    }

    pub fn from_parts(design: FeatureDesign, theta: Vec<f64>) -> Result<Self> {
        design.validate()?;
        if theta.len() != Action::COUNT * design.k {
            return Err(Error::DimensionMismatch { expected: Action::COUNT * design.k, found: theta.len() });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("policy parameters must be finite"));
        }
        Ok(Policy { design, theta })
    }

    pub fn design(&self) -> &FeatureDesign {
        &self.design
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn check_phi(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.design.k {
            return Err(Error::DesignMismatch { expected: self.design.k, found: phi.len() });
        }
        Ok(())
    }

    fn block(&self, a: Action) -> &[f64] {
        let k = self.design.k;
        &self.theta[a.index() * k..(a.index() + 1) * k]
    }

    /// `theta . phi_sa` for every action.
    pub fn logits(&self, phi: &[f64]) -> [f64; Action::COUNT] {
        Action::ALL.map(|a| self.block(a).iter().zip(phi).map(|(t, f)| t * f).sum())
    }

    pub fn action_probs(&self, phi: &[f64], legal: ActionSet) -> Result<ActionDistribution> {
        self.check_phi(phi)?;
        if legal.is_empty() {
            return Err(Error::EmptyActionSet);
        }
        let logits = self.logits(phi);
        let max = legal.iter().map(|a| logits[a.index()]).fold(f64::NEG_INFINITY, f64::max);
        let mut probs = [0.0; Action::COUNT];
        let mut z = 0.0;
        for a in legal.iter() {
            let e = math::exp(logits[a.index()] - max);
            probs[a.index()] = e;
            z += e;
        }
        for p in &mut probs {
            *p /= z;
        }
        Ok(ActionDistribution { probs, legal })
    }

    /// Score function `phi_sa - sum_b pi(b|s) phi_sb` as a `4k` vector.
    pub fn grad_log_pi(&self, phi: &[f64], action: Action, legal: ActionSet) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.theta.len()];
        self.add_scaled_score(phi, action, legal, 1.0, &mut out)?;
        Ok(out)
    }

    /// `out += weight * grad_log_pi(phi, action, legal)`.
    pub fn add_scaled_score(
        &self,
        phi: &[f64],
        action: Action,
        legal: ActionSet,
        weight: f64,
        out: &mut [f64],
    ) -> Result<()> {
        if !legal.contains(action) {
            return Err(Error::IllegalAction { x: 0, y: 0, action: action.name() });
        }
        let dist = self.action_probs(phi, legal)?;
        self.add_scaled_score_with(phi, action, &dist, weight, out);
        Ok(())
    }

    pub(crate) fn add_scaled_score_with(
        &self,
        phi: &[f64],
        action: Action,
        dist: &ActionDistribution,
        weight: f64,
        out: &mut [f64],
    ) {
        let k = self.design.k;
        for b in dist.legal().iter() {
            let indicator = if b == action { 1.0 } else { 0.0 };
            let coef = weight * (indicator - dist.prob(b));
            if coef == 0.0 {
                continue;
            }
            let block = &mut out[b.index() * k..(b.index() + 1) * k];
            for (o, f) in block.iter_mut().zip(phi) {
                *o += coef * f;
            }
        }
    }

    /// Inverse-CDF draw over the legal actions in canonical order.
    pub fn sample_action_with<R: Rng + ?Sized>(
        &self,
        phi: &[f64],
        legal: ActionSet,
        rng: &mut R,
    ) -> Result<Action> {
        let dist = self.action_probs(phi, legal)?;
        let u: f64 = rng.gen();
        let mut cumulative = 0.0;
        let mut last = None;
        for a in legal.iter() {
            cumulative += dist.prob(a);
            if u < cumulative {
                return Ok(a);
            }
            last = Some(a);
        }
        last.ok_or(Error::EmptyActionSet)
    }

    pub fn sample_action(&self, phi: &[f64], legal: ActionSet, seed: u64) -> Result<Action> {
        self.sample_action_with(phi, legal, &mut rng_from_seed(seed))
    }

    /// Most probable legal action; ties go to the earliest in canonical
    /// order.
    pub fn argmax_action(&self, phi: &[f64], legal: ActionSet) -> Result<Action> {
        self.check_phi(phi)?;
        let logits = self.logits(phi);
        let mut best: Option<Action> = None;
        for a in legal.iter() {
            if best.is_none_or(|b| logits[a.index()] > logits[b.index()]) {
                best = Some(a);
            }
        }
        best.ok_or(Error::EmptyActionSet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_sa_features;
    use crate::features::StateFeatures;
    use crate::rng::SearchRng;
    use rand::SeedableRng;
    use std::vec::Vec;

    fn design(k: usize) -> FeatureDesign {
        // AllGrid descriptors are the only ones with arbitrary (odd square) k.
        let r = match k {
            1 => 0,
            9 => 1,
            25 => 2,
            _ => panic!("unsupported k"),
        };
        FeatureDesign { kind: crate::features::FeatureKind::AllGrid, k, window_radius: Some(r) }
    }

    fn random_policy(rng: &mut SearchRng, d: FeatureDesign, scale: f64) -> (Policy, Vec<f64>) {
        let theta = (0..4 * d.k).map(|_| (rng.gen::<f64>() - 0.5) * 2.0 * scale).collect();
        let phi = (0..d.k).map(|_| rng.gen::<f64>()).collect();
        (Policy::from_parts(d, theta).unwrap(), phi)
    }

    fn legal_sets() -> Vec<ActionSet> {
        (1u8..16)
            .map(|bits| Action::ALL.into_iter().filter(|a| bits & (1 << a.index()) != 0).collect())
            .collect()
    }

    #[test]
    fn zero_parameters_give_uniform_probabilities() {
        let p = Policy::zeros(FeatureDesign::multires());
        let phi = [0.3; 24];
        let d = p.action_probs(&phi, ActionSet::ALL).unwrap();
        assert!(d.probs().iter().all(|x| *x == 0.25));
        let corner: ActionSet = [Action::East, Action::South].into_iter().collect();
        let d = p.action_probs(&phi, corner).unwrap();
        assert_eq!(d.prob(Action::East), 0.5);
        assert_eq!(d.prob(Action::South), 0.5);
        assert_eq!(d.prob(Action::North), 0.0);
        assert_eq!(p.action_probs(&phi, ActionSet::EMPTY), Err(Error::EmptyActionSet));
    }

    #[test]
    fn probabilities_match_direct_gibbs_formula() {
        let mut rng = SearchRng::seed_from_u64(5);
        for _ in 0..100 {
            let (p, phi) = random_policy(&mut rng, design(25), 3.0);
            let phi_s = StateFeatures(phi.clone());
            for legal in legal_sets() {
                let d = p.action_probs(&phi, legal).unwrap();
                let weights: Vec<f64> = legal
                    .iter()
                    .map(|a| {
                        let sa = extract_sa_features(&phi_s, a);
                        sa.iter().zip(p.theta()).map(|(f, t)| f * t).sum::<f64>().exp()
                    })
                    .collect();
                let z: f64 = weights.iter().sum();
                for (a, w) in legal.iter().zip(&weights) {
                    assert!((d.prob(a) - w / z).abs() < 1e-12);
                }
                let total: f64 = d.probs().iter().sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn large_parameters_do_not_overflow() {
        let mut rng = SearchRng::seed_from_u64(6);
        let (p, phi) = random_policy(&mut rng, design(9), 500.0);
        let phi: Vec<f64> = phi.iter().map(|x| x * 10.0).collect();
        let d = p.action_probs(&phi, ActionSet::ALL).unwrap();
        assert!(d.probs().iter().all(|x| x.is_finite()));
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let g = p.grad_log_pi(&phi, Action::East, ActionSet::ALL).unwrap();
        assert!(g.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn uniform_score_blocks() {
        let p = Policy::zeros(design(9));
        let phi: Vec<f64> = (0..9).map(|i| i as f64 * 0.1).collect();
        let g = p.grad_log_pi(&phi, Action::South, ActionSet::ALL).unwrap();
        for a in Action::ALL {
            let coef = if a == Action::South { 0.75 } else { -0.25 };
            for i in 0..9 {
                assert!((g[a.index() * 9 + i] - coef * phi[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn score_has_zero_expectation() {
        let mut rng = SearchRng::seed_from_u64(7);
        for _ in 0..100 {
            let (p, phi) = random_policy(&mut rng, design(9), 2.0);
            for legal in legal_sets() {
                let d = p.action_probs(&phi, legal).unwrap();
                let mut acc = std::vec![0.0; 36];
                for a in legal.iter() {
                    p.add_scaled_score(&phi, a, legal, d.prob(a), &mut acc).unwrap();
                }
                assert!(acc.iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn score_matches_central_differences() {
        let mut rng = SearchRng::seed_from_u64(8);
        let h = 1e-5;
        for _ in 0..100 {
            let (p, phi) = random_policy(&mut rng, design(9), 1.0);
            let legal = legal_sets()[rng.gen_range(0..15)];
            let action = legal.iter().nth(rng.gen_range(0..legal.len())).unwrap();
            let g = p.grad_log_pi(&phi, action, legal).unwrap();
            for i in 0..p.theta().len() {
                let log_prob = |delta: f64| {
                    let mut q = p.clone();
                    q.theta_mut()[i] += delta;
                    q.action_probs(&phi, legal).unwrap().prob(action).ln()
                };
                let fd = (log_prob(h) - log_prob(-h)) / (2.0 * h);
                let tol = 1e-6 * g[i].abs().max(1e-3);
                assert!((fd - g[i]).abs() <= tol, "component {i}: fd {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn score_rejects_illegal_action() {
        let p = Policy::zeros(design(1));
        let legal: ActionSet = [Action::East].into_iter().collect();
        assert!(p.grad_log_pi(&[1.0], Action::West, legal).is_err());
    }

    #[test]
    fn common_logit_shift_leaves_probabilities() {
        // Append a constant feature c to every block: identical offsets on
        // all logits when the matching theta entries are equal.
        let mut rng = SearchRng::seed_from_u64(9);
        let (p, phi) = random_policy(&mut rng, design(9), 2.0);
        let mut theta = p.theta().to_vec();
        for a in 0..4 {
            theta[a * 9 + 8] = 0.7;
        }
        let base = Policy::from_parts(design(9), theta).unwrap();
        let mut shifted_phi = phi.clone();
        shifted_phi[8] += 5.0;
        let d0 = base.action_probs(&phi, ActionSet::ALL).unwrap();
        let d1 = base.action_probs(&shifted_phi, ActionSet::ALL).unwrap();
        for a in Action::ALL {
            assert!((d0.prob(a) - d1.prob(a)).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_seeded_and_argmax_breaks_ties_canonically() {
        let p = Policy::zeros(design(1));
        assert_eq!(
            p.sample_action(&[1.0], ActionSet::ALL, 3).unwrap(),
            p.sample_action(&[1.0], ActionSet::ALL, 3).unwrap()
        );
        assert_eq!(p.argmax_action(&[1.0], ActionSet::ALL).unwrap(), Action::North);
        let sw: ActionSet = [Action::South, Action::West].into_iter().collect();
        assert_eq!(p.argmax_action(&[1.0], sw).unwrap(), Action::South);

        // logits ln(0.7), ln(0.1), ln(0.1), ln(0.1) -> probs (0.7, 0.1, 0.1, 0.1)
        let theta = std::vec![0.7f64.ln(), 0.1f64.ln(), 0.1f64.ln(), 0.1f64.ln()];
        let p = Policy::from_parts(design(1), theta).unwrap();
        let d = p.action_probs(&[1.0], ActionSet::ALL).unwrap();
        assert!((d.prob(Action::North) - 0.7).abs() < 1e-12);
        assert_eq!(p.argmax_action(&[1.0], ActionSet::ALL).unwrap(), Action::North);
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let p = Policy::zeros(design(1));
        let mut rng = SearchRng::seed_from_u64(10);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[p.sample_action_with(&[1.0], ActionSet::ALL, &mut rng).unwrap().index()] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * 0.25).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn parameter_length_is_validated() {
        assert!(matches!(
            Policy::from_parts(FeatureDesign::multires(), std::vec![0.0; 95]),
            Err(Error::DimensionMismatch { expected: 96, found: 95 })
        ));
        let p = Policy::zeros(FeatureDesign::multires());
        assert!(matches!(p.action_probs(&[0.0; 23], ActionSet::ALL), Err(Error::DesignMismatch { .. })));
    }
}
