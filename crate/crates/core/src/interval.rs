//! Closed interval arithmetic over f64 and the two-dimensional box sets
//! used as the reachability representation.
//!
//! Operations compute tight endpoint arithmetic in round-to-nearest.
//! Callers that want strict outward rounding apply [`Interval::widen_ulp`]
//! after each composite operation (see `dynamics::StepOptions`).

use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// A closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval::new(self.lo + other.lo, self.hi + other.hi)
    }

    /// Scale by a constant; endpoints swap when `c < 0`.
    pub fn scale(&self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval::new(c * self.lo, c * self.hi)
        } else {
            Interval::new(c * self.hi, c * self.lo)
        }
    }

    /// Tight range of `cos` over the interval.
    ///
    /// Endpoints are evaluated and the result is widened to +1 (resp. -1)
    /// whenever an even (resp. odd) multiple of pi lies inside.
    pub fn cos(&self) -> Interval {
        let (cl, ch) = (libm::cos(self.lo), libm::cos(self.hi));
        let mut lo = if cl < ch { cl } else { ch };
        let mut hi = if cl > ch { cl } else { ch };
        let k0 = libm::ceil(self.lo / PI) as i64;
        let k1 = libm::floor(self.hi / PI) as i64;
        let mut k = k0;
        while k <= k1 {
            if k.rem_euclid(2) == 0 {
                hi = 1.0;
            } else {
                lo = -1.0;
            }
            if hi == 1.0 && lo == -1.0 {
                break;
            }
            k += 1;
        }
        Interval::new(lo.max(-1.0), hi.min(1.0))
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(Interval::new(lo, hi))
        } else {
            None
        }
    }

    /// Clamp both endpoints into `bounds` (the interval image of a scalar clamp).
    pub fn clamp_to(&self, bounds: &Interval) -> Interval {
        let clamp = |x: f64| x.max(bounds.lo).min(bounds.hi);
        Interval::new(clamp(self.lo), clamp(self.hi))
    }

    /// Widen each endpoint by one unit in the last place.
    pub fn widen_ulp(&self) -> Interval {
        Interval::new(self.lo.next_down(), self.hi.next_up())
    }
}

/// The product of a position interval and a velocity interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub position: Interval,
    pub velocity: Interval,
}

impl BoxSet {
    pub fn new(position: Interval, velocity: Interval) -> Self {
        Self { position, velocity }
    }

    pub fn point(position: f64, velocity: f64) -> Self {
        Self {
            position: Interval::point(position),
            velocity: Interval::point(velocity),
        }
    }

    /// True iff `inner` is fully contained in `self` on both axes.
    pub fn contains(&self, inner: &BoxSet) -> bool {
        self.position.contains_interval(&inner.position)
            && self.velocity.contains_interval(&inner.velocity)
    }

    pub fn contains_point(&self, position: f64, velocity: f64) -> bool {
        self.position.contains(position) && self.velocity.contains(velocity)
    }

    pub fn hull(&self, other: &BoxSet) -> BoxSet {
        BoxSet {
            position: self.position.hull(&other.position),
            velocity: self.velocity.hull(&other.velocity),
        }
    }
}
