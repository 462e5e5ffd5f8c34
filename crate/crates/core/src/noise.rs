//! The synthetic state-heteroskedastic perception-noise oracle.
//!
//! Perception is modeled as the true position plus noise whose amplitude
//! is a piecewise-linear function of position: `y = p + a(p) * zeta` with
//! `zeta` supported on `[-1, 1]`.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::sample_std_normal;
use crate::traj::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    Uniform,
    TruncatedGaussian,
}

/// Position-dependent noise amplitude profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    /// `(position, amplitude)` pairs with strictly increasing positions
    /// spanning the position range.
    pub breakpoints: Vec<(f64, f64)>,
    pub distribution: NoiseDistribution,
}

impl NoiseProfile {
    /// The built-in profile: large noise on the left hill, small near the
    /// goal.
    pub fn default_heteroskedastic() -> Self {
        Self {
            breakpoints: alloc::vec![
                (-1.2, 0.05),
                (-0.6, 0.05),
                (-0.3, 0.017),
                (0.0, 0.007),
                (0.6, 0.007),
            ],
            distribution: NoiseDistribution::Uniform,
        }
    }

    /// A profile with no noise anywhere.
    pub fn zero() -> Self {
        Self {
            breakpoints: alloc::vec![(-1.2, 0.0), (0.6, 0.0)],
            distribution: NoiseDistribution::Uniform,
        }
    }

    /// Linear interpolation of the breakpoint amplitudes, clamped to the
    /// end amplitudes outside the breakpoint span.
    pub fn amplitude(&self, position: f64) -> f64 {
        let bp = &self.breakpoints;
        if bp.is_empty() {
            return 0.0;
        }
        if position <= bp[0].0 {
            return bp[0].1;
        }
        if position >= bp[bp.len() - 1].0 {
            return bp[bp.len() - 1].1;
        }
        for pair in bp.windows(2) {
            let ((x0, a0), (x1, a1)) = (pair[0], pair[1]);
            if position <= x1 {
                let t = (position - x0) / (x1 - x0);
                return a0 + t * (a1 - a0);
            }
        }
        bp[bp.len() - 1].1
    }

    /// Draw `zeta` from the profile distribution, scaled to `[-1, 1]`
    /// support. The truncated gaussian uses sigma = 1/3 so that the
    /// truncation point sits at 3 sigma.
    fn sample_zeta<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.distribution {
            NoiseDistribution::Uniform => rng.random_range(-1.0..=1.0),
            NoiseDistribution::TruncatedGaussian => loop {
                let z = sample_std_normal(rng) / 3.0;
                if (-1.0..=1.0).contains(&z) {
                    return z;
                }
            },
        }
    }
}

/// Perceived position: true position plus amplitude-scaled noise.
pub fn perceive<R: Rng + ?Sized>(state: &State, profile: &NoiseProfile, rng: &mut R) -> f64 {
    state.position + profile.amplitude(state.position) * profile.sample_zeta(rng)
}
