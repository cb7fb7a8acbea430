//! Compensated accumulation.
//!
//! All integral-type reductions in this crate run in a fixed (cell-index)
//! order through [`Neumaier`], so results are bitwise reproducible across runs
//! and immune to the worst cancellation patterns of naive summation.

/// Neumaier's variant of Kahan summation: tracks a running compensation that
/// also survives the case `|term| > |sum|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: f64) {
        let t = self.sum + term;
        if crate::fp::abs(self.sum) >= crate::fp::abs(term) {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = Neumaier::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}
