use serde::Serialize;

/// Closed real interval `[lo, hi]`; endpoint conventions of the partitions
/// only matter on null sets and are handled where the branches are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Image under `x ↦ slope·x - offset` with `slope > 0`.
    pub fn affine(&self, slope: f64, offset: f64) -> Interval {
        Interval::new(slope * self.lo - offset, slope * self.hi - offset)
    }

    /// Preimage under `x ↦ slope·x - offset` with `slope > 0`.
    pub fn affine_preimage(&self, slope: f64, offset: f64) -> Interval {
        Interval::new((self.lo + offset) / slope, (self.hi + offset) / slope)
    }
}
