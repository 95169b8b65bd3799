//! Variables, domains, and the factor-set model.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::factor::{Factor, VarId};

/// Observed states keyed by variable.
pub type Evidence = BTreeMap<VarId, usize>;

/// Per-variable cardinalities; variables are the dense ids `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Domains(Vec<usize>);

impl Domains {
    pub fn new(cards: Vec<usize>) -> Result<Self> {
        if let Some(v) = cards.iter().position(|&c| c == 0) {
            return Err(Error::Model(format!("variable {v} has an empty domain")));
        }
        Ok(Domains(cards))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn card(&self, v: VarId) -> usize {
        self.0[v]
    }

    pub fn cards(&self) -> &[usize] {
        &self.0
    }

    pub fn cards_of(&self, vars: &[VarId]) -> Vec<usize> {
        vars.iter().map(|&v| self.0[v]).collect()
    }

    /// Effective number of binary variables in a clique: log2 of the
    /// product of the member cardinalities.
    pub fn clique_size<'a>(&self, vars: impl IntoIterator<Item = &'a VarId>) -> f64 {
        vars.into_iter().map(|&v| (self.0[v] as f64).log2()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Markov,
    Bayes,
}

/// A normalized distribution over one variable's states.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Normalizes nonnegative weights; fails when they sum to zero.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let z: f64 = weights.iter().sum();
        if !(z > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Input("distribution weights must be nonnegative with positive sum".into()));
        }
        Ok(Distribution(weights.into_iter().map(|w| w / z).collect()))
    }

    pub fn point_mass(card: usize, state: usize) -> Self {
        let mut p = vec![0.0; card];
        p[state] = 1.0;
        Distribution(p)
    }

    pub fn uniform(card: usize) -> Self {
        Distribution(vec![1.0 / card as f64; card])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A discrete graphical model: a factor set plus optional evidence.
#[derive(Clone, Debug)]
pub struct Model {
    domains: Domains,
    factors: Vec<Factor>,
    kind: ModelKind,
    /// For Bayesian networks, the variable each CPD is conditional on.
    cpd_child: Vec<VarId>,
    evidence: Evidence,
}

impl Model {
    pub fn markov(domains: Domains, factors: Vec<Factor>) -> Result<Self> {
        let m = Model {
            domains,
            factors,
            kind: ModelKind::Markov,
            cpd_child: Vec::new(),
            evidence: Evidence::new(),
        };
        m.validate()?;
        Ok(m)
    }

    /// `cpd_child[i]` names the variable whose conditional distribution
    /// `factors[i]` encodes; every other scope variable is a parent.
    pub fn bayes(domains: Domains, factors: Vec<Factor>, cpd_child: Vec<VarId>) -> Result<Self> {
        let m = Model {
            domains,
            factors,
            kind: ModelKind::Bayes,
            cpd_child,
            evidence: Evidence::new(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_evidence(mut self, evidence: Evidence) -> Result<Self> {
        for (&v, &s) in &evidence {
            if v >= self.domains.len() {
                return Err(Error::Input(format!("evidence on unknown variable {v}")));
            }
            if s >= self.domains.card(v) {
                return Err(Error::Input(format!(
                    "evidence state {s} out of range for variable {v} with {} states",
                    self.domains.card(v)
                )));
            }
        }
        self.evidence = evidence;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.domains.len();
        let mut seen = vec![false; n];
        for (i, f) in self.factors.iter().enumerate() {
            for (&v, &c) in f.scope().iter().zip(f.cards()) {
                if v >= n {
                    return Err(Error::Model(format!("factor {i} mentions unknown variable {v}")));
                }
                if c != self.domains.card(v) {
                    return Err(Error::Model(format!(
                        "factor {i} gives variable {v} {c} states, domain says {}",
                        self.domains.card(v)
                    )));
                }
                seen[v] = true;
            }
            if f.is_all_zero() {
                return Err(Error::Model(format!("factor {i} is identically zero")));
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Model(format!("variable {v} appears in no factor")));
        }
        if self.kind == ModelKind::Bayes {
            if self.cpd_child.len() != self.factors.len() {
                return Err(Error::Model("one child variable per CPD required".into()));
            }
            let mut owner = vec![None; n];
            for (i, &c) in self.cpd_child.iter().enumerate() {
                if !self.factors[i].scope().contains(&c) {
                    return Err(Error::Model(format!("CPD {i} does not mention its child {c}")));
                }
                if owner[c].replace(i).is_some() {
                    return Err(Error::Model(format!("variable {c} has more than one CPD")));
                }
            }
            if let Some(v) = owner.iter().position(Option::is_none) {
                return Err(Error::Model(format!("variable {v} has no CPD")));
            }
            self.topological_variables()?;
        }
        Ok(())
    }

    pub fn domains(&self) -> &Domains {
        &self.domains
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    /// Child variable of CPD `i` (Bayesian networks only).
    pub fn cpd_child(&self, i: usize) -> Option<VarId> {
        self.cpd_child.get(i).copied()
    }

    pub fn parents(&self, v: VarId) -> Vec<VarId> {
        match self.cpd_child.iter().position(|&c| c == v) {
            Some(i) => self.factors[i].scope().iter().copied().filter(|&p| p != v).collect(),
            None => Vec::new(),
        }
    }

    /// Kahn ordering of the variables, smallest id first among ready ones.
    pub fn topological_variables(&self) -> Result<Vec<VarId>> {
        if self.kind != ModelKind::Bayes {
            return Err(Error::Model("topological order needs a Bayesian network".into()));
        }
        let n = self.num_vars();
        let mut indeg = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for (i, &c) in self.cpd_child.iter().enumerate() {
            for &p in self.factors[i].scope() {
                if p != c {
                    indeg[c] += 1;
                    children[p].push(c);
                }
            }
        }
        let mut ready: BTreeSet<VarId> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != n {
            return Err(Error::Model("parent relation contains a cycle".into()));
        }
        Ok(order)
    }

    /// Factors with the evidence sliced out.
    pub fn reduced_factors(&self) -> Result<Vec<Factor>> {
        self.factors.iter().map(|f| f.reduce(&self.evidence)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clique_size_examples() {
        let d = Domains::new(vec![2, 2, 2, 3, 4]).unwrap();
        assert_eq!(d.clique_size(&[0, 1, 2]), 3.0);
        assert!((d.clique_size(&[1, 3, 4]) - 24f64.log2()).abs() < 1e-12);
        assert_eq!(d.clique_size(&[0]), 1.0);
    }

    #[test]
    fn bayes_validation() {
        let d = Domains::new(vec![2, 2]).unwrap();
        let pa = Factor::new(vec![0], vec![2], vec![0.4, 0.6]).unwrap();
        let pba = Factor::new(vec![0, 1], vec![2, 2], vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        let m = Model::bayes(d.clone(), vec![pa.clone(), pba.clone()], vec![0, 1]).unwrap();
        assert_eq!(m.topological_variables().unwrap(), vec![0, 1]);
        assert_eq!(m.parents(1), vec![0]);
        assert!(Model::bayes(d.clone(), vec![pa.clone(), pba.clone()], vec![0, 0]).is_err());

        // a <-> b cycle
        let pab = Factor::new(vec![1, 0], vec![2, 2], vec![0.5; 4]).unwrap();
        assert!(Model::bayes(d, vec![pab, pba], vec![0, 1]).is_err());
    }

    #[test]
    fn rejects_orphan_variables_and_zero_factors() {
        let d = Domains::new(vec![2, 2]).unwrap();
        let a = Factor::new(vec![0], vec![2], vec![1.0, 1.0]).unwrap();
        assert!(Model::markov(d.clone(), vec![a]).is_err());
        let z = Factor::new(vec![0, 1], vec![2, 2], vec![0.0; 4]).unwrap();
        assert!(Model::markov(d, vec![z]).is_err());
    }

    #[test]
    fn evidence_range_checked() {
        let d = Domains::new(vec![2]).unwrap();
        let a = Factor::new(vec![0], vec![2], vec![1.0, 3.0]).unwrap();
        let m = Model::markov(d, vec![a]).unwrap();
        assert!(m.clone().with_evidence([(0, 2)].into_iter().collect()).is_err());
        assert!(m.with_evidence([(0, 1)].into_iter().collect()).is_ok());
    }
}
