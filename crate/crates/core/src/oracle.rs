//! Reference answers: variable elimination and full enumeration.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::factor::{Factor, VarId};
use crate::metrics::hellinger;
use crate::model::{Distribution, Model};
use crate::triangulate::{self, Graph, Tie};

/// Largest elimination clique (in binary-variable units) the oracle accepts.
pub const DEFAULT_CAP: f64 = 25.0;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub per_var: BTreeMap<VarId, f64>,
    pub hd_avg: f64,
    pub hd_max: f64,
    pub delta_log10_pr: f64,
}

/// Reduced non-scalar factors plus the log10 total of the scalar ones.
fn prepared(model: &Model) -> Result<(Vec<Factor>, f64)> {
    let mut offset = 0.0;
    let mut out = Vec::new();
    for f in model.reduced_factors()? {
        if f.scope().is_empty() {
            offset += f.log10_sum();
        } else {
            out.push(f);
        }
    }
    Ok((out, offset))
}

fn elimination_order(model: &Model, factors: &[Factor], cap: f64) -> Result<Vec<VarId>> {
    let mut g = Graph::new();
    for f in factors {
        triangulate::add_clique(&mut g, f.scope());
    }
    let e = triangulate::min_fill(g, model.domains(), Tie::Degree);
    for c in &e.cliques {
        let size = model.domains().clique_size(c);
        if size > cap + 1e-9 {
            return Err(Error::OracleInfeasible { size, cap });
        }
    }
    Ok(e.order)
}

fn eliminate(mut factors: Vec<Factor>, order: &[VarId]) -> Result<Vec<Factor>> {
    for &v in order {
        let (with, without): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.scope().contains(&v));
        factors = without;
        let mut it = with.into_iter();
        if let Some(first) = it.next() {
            let joint = it.fold(first, |acc, f| acc.product(&f));
            factors.push(joint.marginalize(&[v])?);
        }
    }
    Ok(factors)
}

fn product_all(factors: Vec<Factor>) -> Factor {
    factors
        .into_iter()
        .fold(Factor::scalar(1.0), |acc, f| acc.product(&f))
}

/// Exact log10 partition function (probability of evidence for a Bayesian
/// network) by min-fill variable elimination.
pub fn ve_log_partition(model: &Model, cap: f64) -> Result<f64> {
    let (factors, offset) = prepared(model)?;
    let order = elimination_order(model, &factors, cap)?;
    let rest = eliminate(factors, &order)?;
    Ok(product_all(rest).log10_sum() + offset)
}

/// Exact posterior marginals of every variable; evidence variables get a
/// point mass.
pub fn ve_marginals(model: &Model, cap: f64) -> Result<BTreeMap<VarId, Distribution>> {
    let (factors, _) = prepared(model)?;
    let order = elimination_order(model, &factors, cap)?;
    let mut out = BTreeMap::new();
    for v in 0..model.num_vars() {
        if let Some(&s) = model.evidence().get(&v) {
            out.insert(v, Distribution::point_mass(model.domains().card(v), s));
            continue;
        }
        let others: Vec<VarId> = order.iter().copied().filter(|&u| u != v).collect();
        let rest = eliminate(factors.clone(), &others)?;
        let m = product_all(rest);
        let d = Distribution::from_weights(m.normalized())
            .map_err(|_| Error::Inconsistent("evidence has probability zero".into()))?;
        out.insert(v, d);
    }
    Ok(out)
}

/// Marginals and log10 partition function by summing the full joint.
/// Meant for models with at most a few million joint states.
pub fn enumerate(model: &Model) -> Result<(BTreeMap<VarId, Distribution>, f64)> {
    let (factors, offset) = prepared(model)?;
    let n = model.num_vars();
    let cards = model.domains().cards().to_vec();
    let free: Vec<VarId> = (0..n).filter(|v| !model.evidence().contains_key(v)).collect();
    let states: f64 = free.iter().map(|&v| cards[v] as f64).product();
    if states > 1e8 {
        return Err(Error::OracleInfeasible { size: states.log2(), cap: 1e8f64.log2() });
    }
    let tables: Vec<(Vec<VarId>, Vec<usize>, Vec<f64>, f64)> = factors
        .iter()
        .map(|f| {
            let strides = crate::factor::strides_of(f.cards());
            (f.scope().to_vec(), strides, f.raw_values().to_vec(), f.log10_scale())
        })
        .collect();
    let shift: f64 = tables.iter().map(|t| t.3).sum();
    let mut assign = vec![0usize; n];
    let mut weights: Vec<Vec<f64>> = cards.iter().map(|&c| vec![0.0; c]).collect();
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (scope, strides, values, _) in &tables {
            let idx: usize = scope.iter().zip(strides).map(|(&v, &s)| assign[v] * s).sum();
            w *= values[idx];
        }
        total += w;
        for &v in &free {
            weights[v][assign[v]] += w;
        }
        // odometer over the free variables, last fastest
        let mut i = free.len();
        loop {
            if i == 0 {
                let mut out = BTreeMap::new();
                for v in 0..n {
                    let d = match model.evidence().get(&v) {
                        Some(&s) => Distribution::point_mass(cards[v], s),
                        None => Distribution::from_weights(weights[v].clone())
                            .map_err(|_| Error::Inconsistent("evidence has probability zero".into()))?,
                    };
                    out.insert(v, d);
                }
                return Ok((out, total.log10() + shift + offset));
            }
            i -= 1;
            let v = free[i];
            assign[v] += 1;
            if assign[v] < cards[v] {
                break;
            }
            assign[v] = 0;
        }
    }
}

/// Scores approximate answers against the exact ones.
pub fn compare(
    model: &Model,
    approx: &BTreeMap<VarId, Distribution>,
    approx_log_pr: f64,
    cap: f64,
) -> Result<OracleReport> {
    let exact = ve_marginals(model, cap)?;
    let log_pr = ve_log_partition(model, cap)?;
    score(model, &exact, log_pr, approx, approx_log_pr)
}

/// As [`compare`] with the exact answers supplied by the caller.
pub fn score(
    model: &Model,
    exact: &BTreeMap<VarId, Distribution>,
    exact_log_pr: f64,
    approx: &BTreeMap<VarId, Distribution>,
    approx_log_pr: f64,
) -> Result<OracleReport> {
    let mut per_var = BTreeMap::new();
    for (&v, p) in exact {
        if model.evidence().contains_key(&v) {
            continue;
        }
        let q = approx.get(&v).ok_or(Error::UnknownVariable(v))?;
        per_var.insert(v, hellinger(p, q)?);
    }
    let hd_max = per_var.values().cloned().fold(0.0, f64::max);
    let hd_avg = if per_var.is_empty() {
        0.0
    } else {
        per_var.values().sum::<f64>() / per_var.len() as f64
    };
    Ok(OracleReport {
        per_var,
        hd_avg,
        hd_max,
        delta_log10_pr: (approx_log_pr - exact_log_pr).abs(),
    })
}
