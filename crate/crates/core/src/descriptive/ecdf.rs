use serde::Serialize;

/// Empirical cumulative distribution of a finite sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ecdf {
    sorted_values: Vec<f64>,
}

impl Ecdf {
    /// NaNs are dropped; infinities are kept and sort to the ends.
    pub fn new(values: impl IntoIterator<Item = f64>) -> Self {
        let mut sorted_values: Vec<f64> = values.into_iter().filter(|v| !v.is_nan()).collect();
        sorted_values.sort_by(f64::total_cmp);
        Ecdf { sorted_values }
    }

    pub fn len(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_values.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    /// Fraction of the sample `<= x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        if self.sorted_values.is_empty() {
            return 0.0;
        }
        let k = self.sorted_values.partition_point(|v| *v <= x);
        k as f64 / self.sorted_values.len() as f64
    }

    /// Lower empirical quantile: smallest sample value with `evaluate >= p`.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        if self.sorted_values.is_empty() {
            return None;
        }
        let n = self.sorted_values.len();
        let k = ((p.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        Some(self.sorted_values[k - 1])
    }

    /// Median as the midpoint of the two central order statistics.
    pub fn median(&self) -> Option<f64> {
        let n = self.sorted_values.len();
        match n {
            0 => None,
            _ if n % 2 == 1 => Some(self.sorted_values[n / 2]),
            _ => Some(0.5 * (self.sorted_values[n / 2 - 1] + self.sorted_values[n / 2])),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.is_empty())
            .then(|| self.sorted_values.iter().sum::<f64>() / self.sorted_values.len() as f64)
    }

    /// Step points `(value, cumulative_fraction)`, one per distinct value.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.sorted_values.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted_values.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = f,
                _ => out.push((v, f)),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_steps() {
        let e = Ecdf::new([3.0, 1.0, 2.0, 2.0]);
        assert_eq!(e.evaluate(0.5), 0.0);
        assert_eq!(e.evaluate(1.0), 0.25);
        assert_eq!(e.evaluate(2.0), 0.75);
        assert_eq!(e.evaluate(3.0), 1.0);
        assert_eq!(e.points(), vec![(1.0, 0.25), (2.0, 0.75), (3.0, 1.0)]);
        assert_eq!(e.median(), Some(2.0));
        assert_eq!(e.quantile(0.5), Some(2.0));
        assert_eq!(e.quantile(1.0), Some(3.0));
    }

    #[test]
    fn empty() {
        let e = Ecdf::new(std::iter::empty());
        assert_eq!(e.evaluate(1.0), 0.0);
        assert!(e.median().is_none());
    }

    proptest! {
        #[test]
        fn nondecreasing_and_bounded(
            xs in proptest::collection::vec(-1e6f64..1e6, 1..200),
            probes in proptest::collection::vec(-2e6f64..2e6, 2..50),
        ) {
            let e = Ecdf::new(xs.iter().copied());
            let mut p = probes.clone();
            p.sort_by(f64::total_cmp);
            let vals: Vec<f64> = p.iter().map(|&x| e.evaluate(x)).collect();
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
            let max = xs.iter().copied().fold(f64::MIN, f64::max);
            let min = xs.iter().copied().fold(f64::MAX, f64::min);
            prop_assert_eq!(e.evaluate(max), 1.0);
            prop_assert_eq!(e.evaluate(min - 1.0), 0.0);
        }
    }
}
