//! Walker/Vose alias tables for O(1) draws from a fixed discrete distribution.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// Builds a table from non-negative masses. Returns `None` when the
    /// masses are empty or sum to zero.
    pub fn new(masses: &[f64]) -> Option<Self> {
        let n = masses.len();
        let total: f64 = masses.iter().sum();
        if n == 0 || total <= 0.0 || !total.is_finite() {
            return None;
        }
        let mut scaled: Vec<f64> = masses.iter().map(|&m| m * n as f64 / total).collect();
        let mut prob = vec![0.0; n];
        let mut alias = vec![0u32; n];
        let mut small = Vec::with_capacity(n);
        let mut large = Vec::with_capacity(n);
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
            alias[i] = i as u32;
        }
        Some(Self { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Draws an index. Consumes exactly one `usize` range draw and one `f64`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.prob.len());
        let u: f64 = rng.random();
        if u < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }

    /// Exact probability the table assigns to each index.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.prob.len() as f64;
        let mut out = vec![0.0; self.prob.len()];
        for (i, (&p, &a)) in self.prob.iter().zip(&self.alias).enumerate() {
            out[i] += p / n;
            out[a as usize] += (1.0 - p) / n;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_and_empty() {
        assert!(AliasTable::new(&[]).is_none());
        assert!(AliasTable::new(&[0.0, 0.0]).is_none());
        let t = AliasTable::new(&[3.0]).unwrap();
        let mut rng = crate::rng::seeded(1);
        for _ in 0..100 {
            assert_eq!(t.sample(&mut rng), 0);
        }
    }

    #[test]
    fn zero_mass_never_drawn() {
        let t = AliasTable::new(&[1.0, 0.0, 2.0]).unwrap();
        let mut rng = crate::rng::seeded(9);
        for _ in 0..10_000 {
            assert_ne!(t.sample(&mut rng), 1);
        }
    }

    proptest! {
        #[test]
        fn table_reproduces_masses(masses in proptest::collection::vec(0.0f64..10.0, 1..20)) {
            let total: f64 = masses.iter().sum();
            prop_assume!(total > 1e-9);
            let t = AliasTable::new(&masses).unwrap();
            for (p, m) in t.probabilities().iter().zip(&masses) {
                prop_assert!((p - m / total).abs() < 1e-12);
            }
        }
    }
}
