//! Kahan–Neumaier compensated summation.
//!
//! Running clock integrals accumulate up to ~10^7 terms and are then
//! inverted near a threshold; plain summation would drift by more than the
//! 1e-12 relative tolerance the inversion round-trip is held to.

/// Compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum a slice with compensation.
pub fn kahan_sum(values: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_tail() {
        let mut s = KahanSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(0.1);
        }
        s.add(-1e16);
        assert!((s.value() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn matches_naive_on_benign_input() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.25).collect();
        let naive: f64 = xs.iter().sum();
        assert_eq!(kahan_sum(&xs), naive);
    }
}
