//! Accuracy metrics for approximate marginals.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::factor::VarId;
use crate::model::Distribution;

/// Hellinger distance `sqrt(sum (sqrt p - sqrt q)^2) / sqrt 2`, in `[0, 1]`.
pub fn hellinger(p: &Distribution, q: &Distribution) -> Result<f64> {
    hellinger_slices(p.probs(), q.probs())
}

pub(crate) fn hellinger_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Input(format!(
            "distributions over {} and {} states",
            p.len(),
            q.len()
        )));
    }
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
        .sum();
    Ok((s / 2.0).sqrt().min(1.0))
}

/// Mean and maximum Hellinger distance over a common set of variables.
pub fn hd_summary(
    exact: &BTreeMap<VarId, Distribution>,
    approx: &BTreeMap<VarId, Distribution>,
) -> Result<(f64, f64)> {
    if exact.is_empty() {
        return Err(Error::Input("no variables to compare".into()));
    }
    if exact.len() != approx.len() || exact.keys().any(|k| !approx.contains_key(k)) {
        return Err(Error::Input("exact and approximate marginals cover different variables".into()));
    }
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for (v, p) in exact {
        let d = hellinger(p, &approx[v])?;
        sum += d;
        max = max.max(d);
    }
    Ok((sum / exact.len() as f64, max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(p: &[f64]) -> Distribution {
        Distribution::from_weights(p.to_vec()).unwrap()
    }

    #[test]
    fn hellinger_examples() {
        let p = dist(&[0.3, 0.7]);
        assert_eq!(hellinger(&p, &p).unwrap(), 0.0);
        assert!((hellinger(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
        // (sqrt .5 - sqrt .9)^2 + (sqrt .5 - sqrt .1)^2 = 0.211146, /2, sqrt
        let h = hellinger(&dist(&[0.5, 0.5]), &dist(&[0.9, 0.1])).unwrap();
        assert!((h - 0.3249).abs() < 1e-4, "{h}");
        assert!(hellinger(&dist(&[1.0]), &dist(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn summary_examples() {
        let a = dist(&[0.5, 0.5]);
        let mut exact = BTreeMap::new();
        let mut approx = BTreeMap::new();
        exact.insert(0, a.clone());
        approx.insert(0, a.clone());
        assert_eq!(hd_summary(&exact, &approx).unwrap(), (0.0, 0.0));

        // Distributions at prescribed distances: for [p, 1-p] vs [.5, .5].
        let at = |d: f64| {
            // solve 1 - (sqrt(p)+sqrt(1-p))/sqrt2 = d^2 by bisection
            let (mut lo, mut hi) = (0.5f64, 1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let h = hellinger(&dist(&[mid, 1.0 - mid]), &a).unwrap();
                if h < d {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            dist(&[lo, 1.0 - lo])
        };
        approx.insert(0, at(0.1));
        exact.insert(1, a.clone());
        approx.insert(1, at(0.3));
        let (avg, max) = hd_summary(&exact, &approx).unwrap();
        assert!((avg - 0.2).abs() < 1e-9 && (max - 0.3).abs() < 1e-9);

        let mut single_e = BTreeMap::new();
        let mut single_a = BTreeMap::new();
        single_e.insert(3, a.clone());
        single_a.insert(3, at(0.2));
        let (avg, max) = hd_summary(&single_e, &single_a).unwrap();
        assert!((avg - 0.2).abs() < 1e-9 && (max - 0.2).abs() < 1e-9);

        assert!(hd_summary(&BTreeMap::new(), &BTreeMap::new()).is_err());
    }

    fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..10.0, n).prop_filter("positive mass", |w| w.iter().sum::<f64>() > 1e-6)
    }

    proptest! {
        #[test]
        fn hellinger_is_a_bounded_symmetric_metric(p in weights(4), q in weights(4)) {
            let (p, q) = (dist(&p), dist(&q));
            let pq = hellinger(&p, &q).unwrap();
            let qp = hellinger(&q, &p).unwrap();
            prop_assert!((pq - qp).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&pq));
            prop_assert!(hellinger(&p, &p).unwrap() < 1e-12);
            let same = p.probs().iter().zip(q.probs()).all(|(a, b)| (a - b).abs() < 1e-15);
            if !same {
                prop_assert!(pq > 0.0);
            }
        }
    }
}
