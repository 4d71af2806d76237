//! Eigenvalues of a diagonal matrix plus a symmetric rank-one term,
//! `diag(d) + rho * z z^T`, from the secular equation
//! `1 + rho * sum_k z_k^2 / (d_k - mu) = 0`.
//!
//! Between consecutive poles the secular function is monotone and crosses zero
//! exactly once, so plain bisection is robust even for clustered or repeated
//! poles. Components with a vanishing weight are deflated: their `d_k` is an
//! eigenvalue as is.

/// Weight below which (relative to the total) a component is treated as zero.
const DEFLATION_TOL: f64 = 1e-32;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone)]
pub struct RankOneUpdate {
    /// Non-deflated poles, ascending, with their weights `z_k^2`.
    poles: Vec<f64>,
    weights: Vec<f64>,
    /// Deflated diagonal entries, ascending.
    deflated: Vec<f64>,
    rho: f64,
    total_weight: f64,
}

impl RankOneUpdate {
    /// `diagonal` must be sorted ascending; `weights` are the squared components `z_k^2`.
    pub fn new(diagonal: &[f64], weights: &[f64], rho: f64) -> Self {
        debug_assert_eq!(diagonal.len(), weights.len());
        debug_assert!(diagonal.windows(2).all(|w| w[0] <= w[1]), "diagonal must be sorted");
        let total: f64 = weights.iter().sum();
        let mut poles = Vec::with_capacity(diagonal.len());
        let mut kept = Vec::with_capacity(diagonal.len());
        let mut deflated = Vec::new();
        for (&d, &w) in diagonal.iter().zip(weights) {
            if rho == 0.0 || w <= DEFLATION_TOL * total {
                deflated.push(d);
            } else {
                poles.push(d);
                kept.push(w);
            }
        }
        let total_weight = kept.iter().sum();
        RankOneUpdate { poles, weights: kept, deflated, rho, total_weight }
    }

    fn secular(&self, mu: f64) -> f64 {
        1.0 + self.rho * self.poles.iter().zip(&self.weights).map(|(d, w)| w / (d - mu)).sum::<f64>()
    }

    /// Root of the secular equation in the `i`-th interval (0-based, ascending).
    fn root(&self, i: usize) -> f64 {
        let m = self.poles.len();
        let (mut lo, mut hi) = if self.rho > 0.0 {
            let hi = if i + 1 < m { self.poles[i + 1] } else { self.poles[m - 1] + self.rho * self.total_weight };
            (self.poles[i], hi)
        } else {
            let lo = if i == 0 { self.poles[0] + self.rho * self.total_weight } else { self.poles[i - 1] };
            (lo, self.poles[i])
        };
        // f increases across the interval when rho > 0 and decreases when rho < 0.
        let increasing = self.rho > 0.0;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f = self.secular(mid);
            if f == 0.0 {
                return mid;
            }
            if (f < 0.0) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The `count` smallest eigenvalues, ascending.
    pub fn smallest(&self, count: usize) -> Vec<f64> {
        let roots = (0..count.min(self.poles.len())).map(|i| self.root(i));
        let mut values: Vec<f64> = roots.chain(self.deflated.iter().take(count).copied()).collect();
        values.sort_by(f64::total_cmp);
        values.truncate(count);
        values
    }

    pub fn largest(&self) -> f64 {
        let root = (!self.poles.is_empty()).then(|| self.root(self.poles.len() - 1));
        root.into_iter().chain(self.deflated.last().copied()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// All eigenvalues, ascending.
    pub fn all(&self) -> Vec<f64> {
        let mut values: Vec<f64> = (0..self.poles.len()).map(|i| self.root(i)).chain(self.deflated.iter().copied()).collect();
        values.sort_by(f64::total_cmp);
        values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn dense_eigenvalues(d: &[f64], z: &[f64], rho: f64) -> Vec<f64> {
        let zv = DVector::from_column_slice(z);
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(d)) + (&zv * zv.transpose()) * rho;
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn projector_downdate() {
        // I - u u^T with u uniform: eigenvalues {0, 1, 1, 1}.
        let w = vec![0.25; 4];
        let r = RankOneUpdate::new(&[1.0; 4], &w, -1.0);
        let all = r.all();
        assert!(all[0].abs() < 1e-15);
        assert!(all[1..].iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn zero_weights_deflate() {
        let r = RankOneUpdate::new(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], 3.0);
        let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14);
        assert!(close(&r.all(), &[0.0, 2.0, 4.0]));
        assert!(close(&r.smallest(2), &[0.0, 2.0]));
        assert!((r.largest() - 4.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn matches_dense_solver(
            mut d in proptest::collection::vec(-3.0f64..3.0, 2..12),
            z_raw in proptest::collection::vec(-1.0f64..1.0, 12),
            rho in prop_oneof![-4.0f64..-0.01, 0.01f64..4.0],
        ) {
            d.sort_by(f64::total_cmp);
            let z: Vec<f64> = z_raw[..d.len()].to_vec();
            let w: Vec<f64> = z.iter().map(|x| x * x).collect();
            let r = RankOneUpdate::new(&d, &w, rho);
            let dense = dense_eigenvalues(&d, &z, rho);
            let ours = r.all();
            for (a, b) in ours.iter().zip(&dense) {
                prop_assert!((a - b).abs() < 1e-10, "{ours:?} vs {dense:?}");
            }
            prop_assert!((r.largest() - dense[dense.len() - 1]).abs() < 1e-10);
            let two = r.smallest(2);
            prop_assert!((two[0] - dense[0]).abs() < 1e-10 && (two[1] - dense[1]).abs() < 1e-10);
        }
    }
}
