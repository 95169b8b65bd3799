//! Dense factor tables over ordered variable scopes.
//!
//! Tables are row-major over the scope order (last variable fastest). Each
//! factor carries a base-10 exponent so that long chains of products keep
//! their magnitude without overflowing: the represented value of entry `i`
//! is `values[i] * 10^log10_scale`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub type VarId = usize;

/// Range the largest raw entry is kept in; leaving it triggers a rescale.
const RAW_MAX: f64 = 1e100;
const RAW_MIN: f64 = 1e-100;

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
    log10_scale: f64,
}

pub(crate) fn strides_of(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * cards[i + 1];
    }
    strides
}

/// Visits every assignment of `cards` in row-major order, passing the linear
/// offset of each operand. `strides[j][axis]` is operand `j`'s stride along
/// `axis` (zero when the operand does not depend on that axis).
fn walk(cards: &[usize], strides: &[Vec<usize>], mut visit: impl FnMut(&[usize])) {
    let mut offsets = vec![0usize; strides.len()];
    if cards.iter().any(|&c| c == 0) {
        return;
    }
    let mut counter = vec![0usize; cards.len()];
    loop {
        visit(&offsets);
        let mut axis = cards.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            counter[axis] += 1;
            for (off, st) in offsets.iter_mut().zip(strides) {
                *off += st[axis];
            }
            if counter[axis] < cards[axis] {
                break;
            }
            for (off, st) in offsets.iter_mut().zip(strides) {
                *off -= st[axis] * cards[axis];
            }
            counter[axis] = 0;
        }
    }
}

impl Factor {
    pub fn new(scope: Vec<VarId>, cards: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if scope.len() != cards.len() {
            return Err(Error::Input(format!(
                "scope has {} variables but {} cardinalities",
                scope.len(),
                cards.len()
            )));
        }
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].contains(v) {
                return Err(Error::Input(format!("variable {v} repeated in scope")));
            }
        }
        if let Some(&c) = cards.iter().find(|&&c| c == 0) {
            return Err(Error::Input(format!("cardinality {c} is not positive")));
        }
        let expected: usize = cards.iter().product();
        if values.len() != expected {
            return Err(Error::Input(format!(
                "table has {} entries, expected {expected}",
                values.len()
            )));
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::Input(format!("table entry {x} is not a finite nonnegative real")));
        }
        let mut f = Factor {
            scope,
            cards,
            values,
            log10_scale: 0.0,
        };
        f.rescale();
        Ok(f)
    }

    pub fn scalar(value: f64) -> Self {
        let mut f = Factor {
            scope: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
            log10_scale: 0.0,
        };
        f.rescale();
        f
    }

    pub fn ones(scope: Vec<VarId>, cards: Vec<usize>) -> Self {
        let n = cards.iter().product();
        Factor {
            scope,
            cards,
            values: vec![1.0; n],
            log10_scale: 0.0,
        }
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    /// Raw table entries; multiply by `10^log10_scale()` for true values.
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn log10_scale(&self) -> f64 {
        self.log10_scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn card_of(&self, v: VarId) -> Option<usize> {
        self.scope.iter().position(|&s| s == v).map(|i| self.cards[i])
    }

    /// True entries in linear space; may overflow for extreme exponents.
    pub fn values(&self) -> Vec<f64> {
        let s = 10f64.powf(self.log10_scale);
        self.values.iter().map(|x| x * s).collect()
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    /// log10 of the sum of all entries (`-inf` for an all-zero table).
    pub fn log10_sum(&self) -> f64 {
        self.values.iter().sum::<f64>().log10() + self.log10_scale
    }

    /// Entries divided by their total; all zeros if the total is zero.
    pub fn normalized(&self) -> Vec<f64> {
        let z: f64 = self.values.iter().sum();
        if z > 0.0 {
            self.values.iter().map(|x| x / z).collect()
        } else {
            vec![0.0; self.values.len()]
        }
    }

    fn rescale(&mut self) {
        let max = self.values.iter().cloned().fold(0.0, f64::max);
        if max > 0.0 && !(RAW_MIN..=RAW_MAX).contains(&max) {
            let e = max.log10().floor();
            let k = 10f64.powf(-e);
            for x in &mut self.values {
                *x *= k;
            }
            self.log10_scale += e;
        }
    }

    /// Multiplies every entry by `10^log10`.
    pub fn scaled(mut self, log10: f64) -> Self {
        self.log10_scale += log10;
        self
    }

    fn position(&self, v: VarId) -> Option<usize> {
        self.scope.iter().position(|&s| s == v)
    }

    /// Strides of `self` expressed along the axes of `out_scope`.
    fn strides_along(&self, out_scope: &[VarId]) -> Vec<usize> {
        let own = strides_of(&self.cards);
        out_scope
            .iter()
            .map(|&v| self.position(v).map_or(0, |i| own[i]))
            .collect()
    }

    fn check_alignment(&self, other: &Factor) -> Result<()> {
        for (i, &v) in other.scope.iter().enumerate() {
            if let Some(c) = self.card_of(v) {
                if c != other.cards[i] {
                    return Err(Error::Input(format!(
                        "variable {v} has cardinality {c} in one factor and {} in another",
                        other.cards[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Pointwise product. Scope is `self`'s order followed by `other`'s new
    /// variables.
    pub fn product(&self, other: &Factor) -> Factor {
        debug_assert!(self.check_alignment(other).is_ok());
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (i, &v) in other.scope.iter().enumerate() {
            if !scope.contains(&v) {
                scope.push(v);
                cards.push(other.cards[i]);
            }
        }
        let strides = vec![self.strides_along(&scope), other.strides_along(&scope)];
        let n: usize = cards.iter().product();
        let mut values = Vec::with_capacity(n);
        walk(&cards, &strides, |off| {
            values.push(self.values[off[0]] * other.values[off[1]]);
        });
        let mut f = Factor {
            scope,
            cards,
            values,
            log10_scale: self.log10_scale + other.log10_scale,
        };
        f.rescale();
        f
    }

    /// Checked variant of [`Factor::product`].
    pub fn try_product(&self, other: &Factor) -> Result<Factor> {
        self.check_alignment(other)?;
        Ok(self.product(other))
    }

    /// Pointwise quotient by a factor whose scope is a subset of `self`'s.
    /// Division by zero yields zero.
    pub fn divide(&self, other: &Factor) -> Factor {
        debug_assert!(other.scope.iter().all(|v| self.scope.contains(v)));
        let strides = vec![self.strides_along(&self.scope), other.strides_along(&self.scope)];
        let mut values = Vec::with_capacity(self.values.len());
        walk(&self.cards, &strides, |off| {
            let d = other.values[off[1]];
            values.push(if d == 0.0 { 0.0 } else { self.values[off[0]] / d });
        });
        let mut f = Factor {
            scope: self.scope.clone(),
            cards: self.cards.clone(),
            values,
            log10_scale: self.log10_scale - other.log10_scale,
        };
        f.rescale();
        f
    }

    /// Sums out every variable not in `keep`; the result's scope is `keep`
    /// in the given order. Variables of `keep` outside the scope are an error.
    pub fn marginalize_onto(&self, keep: &[VarId]) -> Result<Factor> {
        let mut cards = Vec::with_capacity(keep.len());
        for &v in keep {
            match self.card_of(v) {
                Some(c) => cards.push(c),
                None => {
                    return Err(Error::Input(format!("variable {v} not in factor scope")));
                }
            }
        }
        let out_strides = strides_of(&cards);
        let along: Vec<usize> = self
            .scope
            .iter()
            .map(|v| keep.iter().position(|k| k == v).map_or(0, |i| out_strides[i]))
            .collect();
        let mut values = vec![0.0; cards.iter().product()];
        let mut src = 0usize;
        walk(&self.cards, &[along], |off| {
            values[off[0]] += self.values[src];
            src += 1;
        });
        let mut f = Factor {
            scope: keep.to_vec(),
            cards,
            values,
            log10_scale: self.log10_scale,
        };
        f.rescale();
        Ok(f)
    }

    /// Sums out the variables in `drop`, keeping the remaining scope order.
    pub fn marginalize(&self, drop: &[VarId]) -> Result<Factor> {
        if let Some(v) = drop.iter().find(|v| !self.scope.contains(v)) {
            return Err(Error::Input(format!("cannot drop variable {v}: not in scope")));
        }
        let keep: Vec<VarId> = self.scope.iter().copied().filter(|v| !drop.contains(v)).collect();
        self.marginalize_onto(&keep)
    }

    /// Restricts evidence variables to their observed states and removes
    /// them from the scope.
    pub fn reduce(&self, evidence: &BTreeMap<VarId, usize>) -> Result<Factor> {
        let own = strides_of(&self.cards);
        let mut base = 0usize;
        let mut scope = Vec::new();
        let mut cards = Vec::new();
        let mut along = Vec::new();
        for (i, &v) in self.scope.iter().enumerate() {
            match evidence.get(&v) {
                Some(&s) if s >= self.cards[i] => {
                    return Err(Error::Input(format!(
                        "evidence state {s} out of range for variable {v} with {} states",
                        self.cards[i]
                    )));
                }
                Some(&s) => base += s * own[i],
                None => {
                    scope.push(v);
                    cards.push(self.cards[i]);
                    along.push(own[i]);
                }
            }
        }
        if scope.len() == self.scope.len() {
            return Ok(self.clone());
        }
        let mut values = Vec::with_capacity(cards.iter().product());
        walk(&cards, &[along], |off| values.push(self.values[base + off[0]]));
        let mut f = Factor {
            scope,
            cards,
            values,
            log10_scale: self.log10_scale,
        };
        f.rescale();
        Ok(f)
    }

    /// Same table with axes reordered to `order` (a permutation of the scope).
    pub fn permuted(&self, order: &[VarId]) -> Result<Factor> {
        if order.len() != self.scope.len() {
            return Err(Error::Input("permutation length differs from scope".into()));
        }
        self.marginalize_onto(order)
    }

    /// Largest absolute difference between the normalized tables of two
    /// factors over the same variable set (axis order may differ).
    pub fn max_normalized_diff(&self, other: &Factor) -> Result<f64> {
        let other = other.permuted(&self.scope)?;
        Ok(self
            .normalized()
            .iter()
            .zip(other.normalized())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Largest relative difference between true entries, after aligning axes.
    /// Entries are compared as `|a-b| / max(|a|,|b|)`, with 0 vs 0 equal.
    pub fn max_relative_diff(&self, other: &Factor) -> Result<f64> {
        let other = other.permuted(&self.scope)?;
        let shift = self.log10_scale.max(other.log10_scale);
        let sa = 10f64.powf(self.log10_scale - shift);
        let sb = 10f64.powf(other.log10_scale - shift);
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let (a, b) = (a * sa, b * sb);
                let m = a.abs().max(b.abs());
                if m == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / m
                }
            })
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(scope: &[VarId], cards: &[usize], values: &[f64]) -> Factor {
        Factor::new(scope.to_vec(), cards.to_vec(), values.to_vec()).unwrap()
    }

    #[test]
    fn product_same_variable() {
        let p = f(&[0], &[2], &[2.0, 3.0]).product(&f(&[0], &[2], &[5.0, 7.0]));
        assert_eq!(p.values(), vec![10.0, 21.0]);
    }

    #[test]
    fn product_with_scalar_is_identity() {
        let a = f(&[0], &[2], &[0.4, 0.6]);
        let p = a.product(&Factor::scalar(1.0));
        assert_eq!(p.scope(), &[0]);
        assert_eq!(p.values(), vec![0.4, 0.6]);
    }

    #[test]
    fn product_disjoint_scopes() {
        let p = f(&[0], &[2], &[1.0, 2.0]).product(&f(&[1], &[2], &[3.0, 4.0]));
        assert_eq!(p.scope(), &[0, 1]);
        assert_eq!(p.values(), vec![3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn marginalize_examples() {
        let xy = f(&[0, 1], &[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(xy.marginalize(&[1]).unwrap().values(), vec![3.0, 7.0]);
        assert_eq!(xy.marginalize(&[]).unwrap(), xy);
        let s = xy.marginalize(&[0, 1]).unwrap();
        assert!(s.scope().is_empty());
        assert_eq!(s.values(), vec![10.0]);
        assert!(xy.marginalize(&[5]).is_err());
    }

    #[test]
    fn reduce_examples() {
        let xy = f(&[0, 1], &[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let ev: BTreeMap<_, _> = [(1, 1)].into_iter().collect();
        let r = xy.reduce(&ev).unwrap();
        assert_eq!(r.scope(), &[0]);
        assert_eq!(r.values(), vec![2.0, 4.0]);

        let other: BTreeMap<_, _> = [(7, 0)].into_iter().collect();
        assert_eq!(xy.reduce(&other).unwrap(), xy);

        let x = f(&[0], &[2], &[0.3, 0.7]);
        let ev: BTreeMap<_, _> = [(0, 0)].into_iter().collect();
        assert_eq!(x.reduce(&ev).unwrap().values(), vec![0.3]);

        let bad: BTreeMap<_, _> = [(0, 2)].into_iter().collect();
        assert!(matches!(x.reduce(&bad), Err(Error::Input(_))));
    }

    #[test]
    fn divide_zero_over_zero_is_zero() {
        let a = f(&[0, 1], &[2, 2], &[0.0, 2.0, 3.0, 0.0]);
        let b = f(&[0], &[2], &[0.0, 3.0]);
        assert_eq!(a.divide(&b).values(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(Factor::new(vec![0], vec![2], vec![1.0]).is_err());
        assert!(Factor::new(vec![0, 0], vec![2, 2], vec![1.0; 4]).is_err());
        assert!(Factor::new(vec![0], vec![2], vec![1.0, -1.0]).is_err());
        assert!(Factor::new(vec![0], vec![2], vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn exponent_keeps_long_products_finite() {
        let big = f(&[0], &[2], &[1e80, 2e80]);
        let mut acc = Factor::scalar(1.0);
        for _ in 0..20 {
            acc = acc.product(&big);
        }
        assert!(acc.raw_values().iter().all(|x| x.is_finite()));
        let expected = 20.0 * 80.0 + (1.0f64 + 2f64.powi(20)).log10();
        assert!((acc.log10_sum() - expected).abs() < 1e-9);
    }

    #[test]
    fn marginalize_onto_reorders() {
        let xy = f(&[0, 1], &[2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let yx = xy.permuted(&[1, 0]).unwrap();
        assert_eq!(yx.values(), vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(xy.max_relative_diff(&yx).unwrap(), 0.0);
    }
}
