//! Clique tree forests and two-pass belief propagation.
//!
//! Calibration uses the sepset-division (Hugin) form: cliques hold beliefs,
//! sepsets hold the last message product, and passing a message along an
//! edge multiplies the receiver by `mu_new / mu_old`. The same single pass
//! is reused to re-distribute after a clique belief is rescaled externally.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::factor::{Factor, VarId};
use crate::model::{Distribution, Domains};

pub type CliqueId = usize;

const SIZE_EPS: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Clique {
    vars: Vec<VarId>,
    factors: Vec<Factor>,
    divisors: Vec<Factor>,
    /// Model index of each entry in `factors`; `None` for seeded beliefs.
    sources: Vec<Option<usize>>,
    belief: Option<Factor>,
}

impl Clique {
    pub fn new(mut vars: Vec<VarId>) -> Self {
        vars.sort_unstable();
        vars.dedup();
        Clique {
            vars,
            factors: Vec::new(),
            divisors: Vec::new(),
            sources: Vec::new(),
            belief: None,
        }
    }

    /// Sorted member variables.
    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.vars.binary_search(&v).is_ok()
    }

    pub fn contains_all(&self, vars: &[VarId]) -> bool {
        vars.iter().all(|&v| self.contains(v))
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn divisors(&self) -> &[Factor] {
        &self.divisors
    }

    /// Indices (into the model's factor list) of the factors assigned here.
    pub fn factor_ids(&self) -> Vec<usize> {
        self.sources.iter().flatten().copied().collect()
    }

    pub fn belief(&self) -> Option<&Factor> {
        self.belief.as_ref()
    }

    pub(crate) fn set_vars(&mut self, vars: Vec<VarId>) {
        self.vars = vars;
    }

    pub(crate) fn set_belief(&mut self, belief: Option<Factor>) {
        self.belief = belief;
    }

    pub(crate) fn push_factor(&mut self, f: Factor, id: Option<usize>) {
        self.factors.push(f);
        self.sources.push(id);
    }

    pub(crate) fn push_divisor(&mut self, f: Factor) {
        self.divisors.push(f);
    }

    pub(crate) fn take_potentials(&mut self) -> (Vec<(Factor, Option<usize>)>, Vec<Factor>) {
        let fs = std::mem::take(&mut self.factors);
        let ids = std::mem::take(&mut self.sources);
        (fs.into_iter().zip(ids).collect(), std::mem::take(&mut self.divisors))
    }
}

#[derive(Clone, Debug)]
pub struct Sepset {
    vars: Vec<VarId>,
    belief: Option<Factor>,
}

impl Sepset {
    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn belief(&self) -> Option<&Factor> {
        self.belief.as_ref()
    }
}

/// Outcome of [`CliqueForest::verify_calibration`].
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationReport {
    /// Largest disagreement between the two sides of any sepset, relative to
    /// the largest entry of the sepset marginal.
    pub max_sepset_discrepancy: f64,
    /// Largest relative spread of normalization constants within one tree.
    pub max_nc_spread: f64,
    pub pass: bool,
}

fn edge_key(a: CliqueId, b: CliqueId) -> (CliqueId, CliqueId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn intersect(a: &[VarId], b: &[VarId]) -> Vec<VarId> {
    a.iter().copied().filter(|v| b.binary_search(v).is_ok()).collect()
}

pub(crate) fn is_subset(a: &[VarId], b: &[VarId]) -> bool {
    a.iter().all(|v| b.binary_search(v).is_ok())
}

/// A set of disjoint clique trees over one domain table.
#[derive(Clone, Debug)]
pub struct CliqueForest {
    domains: Domains,
    cliques: BTreeMap<CliqueId, Clique>,
    adj: BTreeMap<CliqueId, BTreeSet<CliqueId>>,
    sepsets: BTreeMap<(CliqueId, CliqueId), Sepset>,
    next_id: CliqueId,
    calibrated: bool,
    message_passes: u64,
}

impl CliqueForest {
    pub fn new(domains: Domains) -> Self {
        CliqueForest {
            domains,
            cliques: BTreeMap::new(),
            adj: BTreeMap::new(),
            sepsets: BTreeMap::new(),
            next_id: 0,
            calibrated: false,
            message_passes: 0,
        }
    }

    pub fn domains(&self) -> &Domains {
        &self.domains
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn is_calibrated(&self) -> bool {
        self.calibrated
    }

    pub(crate) fn set_calibrated(&mut self, c: bool) {
        self.calibrated = c;
    }

    /// Number of single-edge message passes performed on this forest.
    pub fn message_passes(&self) -> u64 {
        self.message_passes
    }

    pub fn reset_message_passes(&mut self) {
        self.message_passes = 0;
    }

    pub fn clique(&self, id: CliqueId) -> Option<&Clique> {
        self.cliques.get(&id)
    }

    pub(crate) fn clique_mut(&mut self, id: CliqueId) -> Option<&mut Clique> {
        self.cliques.get_mut(&id)
    }

    pub fn cliques(&self) -> impl Iterator<Item = (CliqueId, &Clique)> {
        self.cliques.iter().map(|(&id, c)| (id, c))
    }

    pub fn clique_ids(&self) -> Vec<CliqueId> {
        self.cliques.keys().copied().collect()
    }

    pub fn neighbors(&self, id: CliqueId) -> impl Iterator<Item = CliqueId> + '_ {
        self.adj.get(&id).into_iter().flatten().copied()
    }

    pub fn degree(&self, id: CliqueId) -> usize {
        self.adj.get(&id).map_or(0, BTreeSet::len)
    }

    pub fn edges(&self) -> impl Iterator<Item = (CliqueId, CliqueId)> + '_ {
        self.sepsets.keys().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.sepsets.len()
    }

    pub fn sepset(&self, a: CliqueId, b: CliqueId) -> Option<&Sepset> {
        self.sepsets.get(&edge_key(a, b))
    }

    pub fn add_clique(&mut self, vars: Vec<VarId>) -> CliqueId {
        let id = self.next_id;
        self.insert_clique(id, Clique::new(vars));
        id
    }

    pub(crate) fn insert_clique(&mut self, id: CliqueId, clique: Clique) {
        debug_assert!(!self.cliques.contains_key(&id));
        self.cliques.insert(id, clique);
        self.adj.insert(id, BTreeSet::new());
        self.next_id = self.next_id.max(id + 1);
        self.calibrated = false;
    }

    /// Removes a clique and all of its edges.
    pub(crate) fn remove_clique(&mut self, id: CliqueId) -> Option<Clique> {
        let clique = self.cliques.remove(&id)?;
        for n in self.adj.remove(&id).unwrap_or_default() {
            if let Some(s) = self.adj.get_mut(&n) {
                s.remove(&id);
            }
            self.sepsets.remove(&edge_key(id, n));
        }
        Some(clique)
    }

    pub(crate) fn connect(&mut self, a: CliqueId, b: CliqueId, belief: Option<Factor>) {
        let vars = intersect(&self.cliques[&a].vars, &self.cliques[&b].vars);
        self.adj.get_mut(&a).unwrap().insert(b);
        self.adj.get_mut(&b).unwrap().insert(a);
        self.sepsets.insert(edge_key(a, b), Sepset { vars, belief });
    }

    /// Recomputes a sepset's variable list after an endpoint changed.
    pub(crate) fn refresh_sepset(&mut self, a: CliqueId, b: CliqueId, belief: Option<Factor>) {
        let vars = intersect(&self.cliques[&a].vars, &self.cliques[&b].vars);
        if let Some(s) = self.sepsets.get_mut(&edge_key(a, b)) {
            s.vars = vars;
            s.belief = belief;
        }
    }

    pub fn variables(&self) -> BTreeSet<VarId> {
        self.cliques.values().flat_map(|c| c.vars.iter().copied()).collect()
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        self.cliques.values().any(|c| c.contains(v))
    }

    /// Cliques containing `v`, ascending by id.
    pub fn cliques_containing(&self, v: VarId) -> Vec<CliqueId> {
        self.cliques
            .iter()
            .filter(|(_, c)| c.contains(v))
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn clique_size(&self, id: CliqueId) -> f64 {
        self.domains.clique_size(&self.cliques[&id].vars)
    }

    pub fn max_clique_size(&self) -> f64 {
        self.cliques
            .keys()
            .map(|&id| self.clique_size(id))
            .fold(0.0, f64::max)
    }

    /// Connected trees, each listed in ascending id order; trees are ordered
    /// by their smallest clique id.
    pub fn components(&self) -> Vec<Vec<CliqueId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &id in self.cliques.keys() {
            if seen.contains(&id) {
                continue;
            }
            let mut comp = self.tree_of(id);
            comp.sort_unstable();
            seen.extend(comp.iter().copied());
            out.push(comp);
        }
        out
    }

    /// Cliques of the tree containing `id`, in breadth-first order from it.
    pub fn tree_of(&self, id: CliqueId) -> Vec<CliqueId> {
        let mut order = vec![id];
        let mut seen: BTreeSet<CliqueId> = [id].into_iter().collect();
        let mut i = 0;
        while i < order.len() {
            let c = order[i];
            for n in self.neighbors(c) {
                if seen.insert(n) {
                    order.push(n);
                }
            }
            i += 1;
        }
        order
    }

    /// Number of edges in the tree containing `id`.
    pub fn tree_edge_count(&self, id: CliqueId) -> usize {
        self.tree_of(id).len() - 1
    }

    /// Path of clique ids from `a` to `b` inclusive, if they share a tree.
    pub fn path(&self, a: CliqueId, b: CliqueId) -> Option<Vec<CliqueId>> {
        let mut parent = BTreeMap::new();
        let mut queue = VecDeque::from([a]);
        parent.insert(a, a);
        while let Some(c) = queue.pop_front() {
            if c == b {
                let mut path = vec![b];
                let mut x = b;
                while x != a {
                    x = parent[&x];
                    path.push(x);
                }
                path.reverse();
                return Some(path);
            }
            for n in self.neighbors(c) {
                if !parent.contains_key(&n) {
                    parent.insert(n, c);
                    queue.push_back(n);
                }
            }
        }
        None
    }

    /// Checks the structural invariants: acyclic, sepsets equal nonempty
    /// intersections, running intersection, family preservation, and that
    /// no clique is contained in a neighbour.
    pub fn validate(&self) -> Result<()> {
        let comps = self.components();
        if self.sepsets.len() + comps.len() != self.cliques.len() {
            return Err(Error::Internal("clique graph is not a forest".into()));
        }
        for (&(a, b), s) in &self.sepsets {
            let expect = intersect(&self.cliques[&a].vars, &self.cliques[&b].vars);
            if expect != s.vars {
                return Err(Error::Internal(format!("stale sepset on edge {a}-{b}")));
            }
            if s.vars.is_empty() {
                return Err(Error::Internal(format!("empty sepset on edge {a}-{b}")));
            }
            if is_subset(&self.cliques[&a].vars, &self.cliques[&b].vars)
                || is_subset(&self.cliques[&b].vars, &self.cliques[&a].vars)
            {
                return Err(Error::Internal(format!("non-maximal clique on edge {a}-{b}")));
            }
        }
        for v in self.variables() {
            let holders = self.cliques_containing(v);
            let mut seen: BTreeSet<CliqueId> = [holders[0]].into_iter().collect();
            let mut stack = vec![holders[0]];
            while let Some(c) = stack.pop() {
                for n in self.neighbors(c) {
                    if self.cliques[&n].contains(v) && seen.insert(n) {
                        stack.push(n);
                    }
                }
            }
            if seen.len() != holders.len() {
                return Err(Error::Internal(format!("running intersection broken for variable {v}")));
            }
        }
        for (id, c) in &self.cliques {
            for f in c.factors.iter().chain(&c.divisors) {
                if !c.contains_all(f.scope()) {
                    return Err(Error::Internal(format!("clique {id} holds a factor outside its scope")));
                }
            }
        }
        Ok(())
    }

    fn initial_potential(&self, id: CliqueId) -> Factor {
        let c = &self.cliques[&id];
        let mut psi = Factor::ones(c.vars.clone(), self.domains.cards_of(&c.vars));
        for f in &c.factors {
            psi = psi.product(f);
        }
        for d in &c.divisors {
            psi = psi.divide(d);
        }
        psi
    }

    fn tree_root(&self, comp: &[CliqueId]) -> CliqueId {
        let mut best = comp[0];
        for &id in comp {
            if self.clique_size(id) > self.clique_size(best) + SIZE_EPS {
                best = id;
            }
        }
        best
    }

    /// Parent-before-child traversal of the tree rooted at `root`.
    fn rooted_order(&self, root: CliqueId) -> Vec<(CliqueId, Option<CliqueId>)> {
        let mut order = vec![(root, None)];
        let mut seen: BTreeSet<CliqueId> = [root].into_iter().collect();
        let mut i = 0;
        while i < order.len() {
            let c = order[i].0;
            for n in self.neighbors(c) {
                if seen.insert(n) {
                    order.push((n, Some(c)));
                }
            }
            i += 1;
        }
        order
    }

    /// Passes a message from `from` to `to`, updating the sepset and the
    /// receiver by the ratio of new to old sepset beliefs.
    fn pass_message(&mut self, from: CliqueId, to: CliqueId) -> Result<()> {
        let key = edge_key(from, to);
        let svars = self.sepsets[&key].vars.clone();
        let new = self.cliques[&from]
            .belief
            .as_ref()
            .ok_or_else(|| Error::Internal(format!("clique {from} has no belief")))?
            .marginalize_onto(&svars)?;
        let receiver = self.cliques[&to]
            .belief
            .as_ref()
            .ok_or_else(|| Error::Internal(format!("clique {to} has no belief")))?;
        let updated = match &self.sepsets[&key].belief {
            Some(old) => receiver.product(&new.divide(old)),
            None => receiver.product(&new),
        };
        self.cliques.get_mut(&to).unwrap().belief = Some(updated);
        self.sepsets.get_mut(&key).unwrap().belief = Some(new);
        self.message_passes += 1;
        Ok(())
    }

    /// Calibrates the tree containing `member` from its assigned potentials.
    pub fn calibrate_tree(&mut self, member: CliqueId) -> Result<()> {
        let mut comp = self.tree_of(member);
        comp.sort_unstable();
        for &id in &comp {
            let psi = self.initial_potential(id);
            self.cliques.get_mut(&id).unwrap().belief = Some(psi);
            let ns: Vec<CliqueId> = self.neighbors(id).collect();
            for n in ns {
                self.sepsets.get_mut(&edge_key(id, n)).unwrap().belief = None;
            }
        }
        let root = self.tree_root(&comp);
        let order = self.rooted_order(root);
        for &(c, parent) in order.iter().rev() {
            if let Some(p) = parent {
                self.pass_message(c, p)?;
            }
        }
        for &(c, parent) in &order {
            if let Some(p) = parent {
                self.pass_message(p, c)?;
            }
        }
        if self.cliques[&root].belief.as_ref().unwrap().is_all_zero() {
            return Err(Error::Inconsistent(format!(
                "clique tree rooted at {root} has zero total mass"
            )));
        }
        Ok(())
    }

    /// Two-pass belief propagation on every tree; `2 * edges` message passes.
    pub fn calibrate(&mut self) -> Result<()> {
        for comp in self.components() {
            self.calibrate_tree(comp[0])?;
        }
        self.calibrated = true;
        Ok(())
    }

    /// One outward pass from `root` over its tree, re-establishing
    /// calibration after `root`'s belief was changed. Returns the number of
    /// messages passed.
    pub fn distribute_from(&mut self, root: CliqueId) -> Result<usize> {
        let order = self.rooted_order(root);
        let mut passes = 0;
        for &(c, parent) in &order {
            if let Some(p) = parent {
                self.pass_message(p, c)?;
                passes += 1;
            }
        }
        Ok(passes)
    }

    fn belief_of(&self, id: CliqueId) -> Result<&Factor> {
        self.cliques
            .get(&id)
            .and_then(|c| c.belief.as_ref())
            .ok_or_else(|| Error::Internal(format!("clique {id} is not calibrated")))
    }

    /// Marginal of `v` from the lowest-id clique containing it.
    pub fn clique_marginal(&self, v: VarId) -> Result<Distribution> {
        let id = *self
            .cliques_containing(v)
            .first()
            .ok_or(Error::UnknownVariable(v))?;
        self.marginal_from(id, v)
    }

    /// Marginal of `v` computed from one specific clique.
    pub fn marginal_from(&self, id: CliqueId, v: VarId) -> Result<Distribution> {
        let m = self.belief_of(id)?.marginalize_onto(&[v])?;
        Distribution::from_weights(m.normalized())
            .map_err(|_| Error::Inconsistent(format!("variable {v} has zero mass in clique {id}")))
    }

    /// Unnormalized joint belief over `vars` (a subset of clique `id`).
    pub fn clique_joint(&self, id: CliqueId, vars: &[VarId]) -> Result<Factor> {
        self.belief_of(id)?.marginalize_onto(vars)
    }

    /// log10 normalization constant of the tree containing `member`.
    pub fn tree_log_nc(&self, member: CliqueId) -> Result<f64> {
        Ok(self.belief_of(member)?.log10_sum())
    }

    /// Sum over trees of log10 of each tree's normalization constant.
    pub fn log_nc(&self) -> Result<f64> {
        self.components()
            .iter()
            .map(|c| self.tree_log_nc(c[0]))
            .sum()
    }

    pub fn verify_calibration(&self, tol: f64) -> Result<CalibrationReport> {
        let mut disc = 0.0f64;
        for (&(a, b), s) in &self.sepsets {
            let ma = self.belief_of(a)?.marginalize_onto(&s.vars)?;
            let mb = self.belief_of(b)?.marginalize_onto(&s.vars)?;
            disc = disc.max(scaled_discrepancy(&ma, &mb));
        }
        let mut spread = 0.0f64;
        for comp in self.components() {
            let ncs = comp
                .iter()
                .map(|&id| self.belief_of(id).map(Factor::log10_sum))
                .collect::<Result<Vec<_>>>()?;
            let hi = ncs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = ncs.iter().cloned().fold(f64::INFINITY, f64::min);
            if hi.is_finite() {
                spread = spread.max(1.0 - 10f64.powf(lo - hi));
            }
        }
        Ok(CalibrationReport {
            max_sepset_discrepancy: disc,
            max_nc_spread: spread,
            pass: disc <= tol && spread <= tol,
        })
    }

    /// Merges every clique whose variables are a subset of a neighbour's
    /// into that neighbour. Returns `(absorbed, into)` pairs in merge order.
    pub(crate) fn absorb_non_maximal(&mut self) -> Vec<(CliqueId, CliqueId)> {
        let mut merged = Vec::new();
        loop {
            let found = self.sepsets.keys().find_map(|&(a, b)| {
                let (va, vb) = (&self.cliques[&a].vars, &self.cliques[&b].vars);
                if is_subset(va, vb) {
                    Some((a, b))
                } else if is_subset(vb, va) {
                    Some((b, a))
                } else {
                    None
                }
            });
            let Some((small, big)) = found else { break };
            self.merge_into(small, big);
            merged.push((small, big));
        }
        merged
    }

    /// Moves `small`'s potentials and edges onto `big` (which must contain
    /// it and be adjacent) and deletes `small`.
    fn merge_into(&mut self, small: CliqueId, big: CliqueId) {
        let others: Vec<(CliqueId, Option<Factor>)> = self
            .neighbors(small)
            .filter(|&n| n != big)
            .map(|n| (n, self.sepsets[&edge_key(small, n)].belief.clone()))
            .collect();
        let mut gone = self.remove_clique(small).unwrap();
        let (fs, ds) = gone.take_potentials();
        let target = self.cliques.get_mut(&big).unwrap();
        for (f, id) in fs {
            target.push_factor(f, id);
        }
        target.divisors.extend(ds);
        for (n, belief) in others {
            self.connect(n, big, belief);
        }
    }

    /// Turns calibrated beliefs into potentials for a new build round: each
    /// clique belief becomes an assigned factor and each sepset belief a
    /// divisor on the higher-id endpoint, so the encoded distribution is
    /// `prod beta / prod mu`.
    pub fn into_seed(mut self) -> Result<CliqueForest> {
        let edges: Vec<((CliqueId, CliqueId), Option<Factor>)> = self
            .sepsets
            .iter_mut()
            .map(|(&k, s)| (k, s.belief.take()))
            .collect();
        for c in self.cliques.values_mut() {
            c.factors.clear();
            c.divisors.clear();
            c.sources.clear();
            let b = c
                .belief
                .take()
                .ok_or_else(|| Error::Internal("seed clique without belief".into()))?;
            c.push_factor(b, None);
        }
        for ((_, hi), mu) in edges {
            let mu = mu.ok_or_else(|| Error::Internal("seed sepset without belief".into()))?;
            self.cliques.get_mut(&hi).unwrap().divisors.push(mu);
        }
        self.calibrated = false;
        self.message_passes = 0;
        Ok(self)
    }

    /// Drops every assigned factor and divisor, keeping beliefs.
    pub(crate) fn clear_potentials(&mut self) {
        for c in self.cliques.values_mut() {
            c.take_potentials();
        }
    }

    /// Replaces a clique belief directly (diagnostics and tests).
    pub fn set_clique_belief(&mut self, id: CliqueId, belief: Factor) -> Result<()> {
        let c = self
            .cliques
            .get_mut(&id)
            .ok_or_else(|| Error::Input(format!("no clique {id}")))?;
        let aligned = belief.permuted(&c.vars)?;
        c.belief = Some(aligned);
        Ok(())
    }
}

/// `max |a - b| / max(max a, max b)` over aligned entries.
pub(crate) fn scaled_discrepancy(a: &Factor, b: &Factor) -> f64 {
    let b = b.permuted(a.scope()).expect("same variable set");
    let shift = a.log10_scale().max(b.log10_scale());
    let sa = 10f64.powf(a.log10_scale() - shift);
    let sb = 10f64.powf(b.log10_scale() - shift);
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for (x, y) in a.raw_values().iter().zip(b.raw_values()) {
        let (x, y) = (x * sa, y * sb);
        diff = diff.max((x - y).abs());
        scale = scale.max(x.abs()).max(y.abs());
    }
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn domains(n: usize) -> Domains {
        Domains::new(vec![2; n]).unwrap()
    }

    fn f(scope: &[VarId], values: &[f64]) -> Factor {
        Factor::new(scope.to_vec(), vec![2; scope.len()], values.to_vec()).unwrap()
    }

    /// x -- xy -- y with phi(x) = [1, 1], phi(x, y) = [1, 2, 3, 4].
    fn chain() -> (CliqueForest, CliqueId, CliqueId, CliqueId) {
        let mut ctf = CliqueForest::new(domains(2));
        let x = ctf.add_clique(vec![0]);
        let xy = ctf.add_clique(vec![0, 1]);
        let y = ctf.add_clique(vec![1]);
        ctf.clique_mut(x).unwrap().push_factor(f(&[0], &[1.0, 1.0]), Some(0));
        ctf.clique_mut(xy).unwrap().push_factor(f(&[0, 1], &[1.0, 2.0, 3.0, 4.0]), Some(1));
        ctf.connect(x, xy, None);
        ctf.connect(xy, y, None);
        (ctf, x, xy, y)
    }

    #[test]
    fn single_clique_belief_is_its_factor() {
        let mut ctf = CliqueForest::new(domains(1));
        let c = ctf.add_clique(vec![0]);
        ctf.clique_mut(c).unwrap().push_factor(f(&[0], &[1.0, 3.0]), Some(0));
        ctf.calibrate().unwrap();
        assert_eq!(ctf.clique(c).unwrap().belief().unwrap().values(), vec![1.0, 3.0]);
        assert!((ctf.log_nc().unwrap() - 4f64.log10()).abs() < 1e-15);
        assert_eq!(ctf.message_passes(), 0);
    }

    #[test]
    fn chain_calibration_matches_enumeration() {
        let (mut ctf, x, xy, y) = chain();
        ctf.calibrate().unwrap();
        assert_eq!(ctf.message_passes(), 4);
        let b = ctf.clique(xy).unwrap().belief().unwrap();
        assert_eq!(b.values(), vec![1.0, 2.0, 3.0, 4.0]);
        // joint over (x, y) is the table itself; P(x) = [3, 7] / 10
        for id in [x, xy] {
            let m = ctf.marginal_from(id, 0).unwrap();
            assert!((m.probs()[0] - 0.3).abs() < 1e-15);
            assert!((m.probs()[1] - 0.7).abs() < 1e-15);
        }
        let my = ctf.marginal_from(y, 1).unwrap();
        assert!((my.probs()[0] - 0.4).abs() < 1e-15);
        assert!(ctf.verify_calibration(1e-12).unwrap().pass);
    }

    #[test]
    fn uniform_single_clique_marginal() {
        let mut ctf = CliqueForest::new(domains(2));
        let c = ctf.add_clique(vec![0, 1]);
        ctf.clique_mut(c).unwrap().push_factor(f(&[0, 1], &[2.0; 4]), None);
        ctf.calibrate().unwrap();
        assert_eq!(ctf.clique_marginal(1).unwrap().probs(), &[0.5, 0.5]);
        assert!(matches!(ctf.clique_marginal(5), Err(Error::UnknownVariable(5))));
    }

    #[test]
    fn disjoint_trees_calibrate_independently() {
        let mut ctf = CliqueForest::new(domains(2));
        let a = ctf.add_clique(vec![0]);
        let b = ctf.add_clique(vec![1]);
        ctf.clique_mut(a).unwrap().push_factor(f(&[0], &[1.0, 1.0]), None);
        ctf.clique_mut(b).unwrap().push_factor(f(&[1], &[1.0, 4.0]), None);
        ctf.calibrate().unwrap();
        let before = ctf.clique(b).unwrap().belief().cloned();
        ctf.clique_mut(a).unwrap().push_factor(f(&[0], &[3.0, 1.0]), None);
        ctf.calibrate_tree(a).unwrap();
        assert_eq!(ctf.clique(b).unwrap().belief().cloned(), before);
        // NCs 4 and 5 multiply
        let ncs: Vec<f64> = ctf.components().iter().map(|c| ctf.tree_log_nc(c[0]).unwrap()).collect();
        assert!((ncs[0] - 4f64.log10()).abs() < 1e-15);
        assert!((ctf.log_nc().unwrap() - 20f64.log10()).abs() < 1e-15);
    }

    #[test]
    fn two_trees_with_nc_two_and_five() {
        let mut ctf = CliqueForest::new(domains(2));
        let a = ctf.add_clique(vec![0]);
        let b = ctf.add_clique(vec![1]);
        ctf.clique_mut(a).unwrap().push_factor(f(&[0], &[1.0, 1.0]), None);
        ctf.clique_mut(b).unwrap().push_factor(f(&[1], &[2.0, 3.0]), None);
        ctf.calibrate().unwrap();
        assert!((ctf.log_nc().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn perturbed_belief_fails_verification() {
        let (mut ctf, _, xy, _) = chain();
        ctf.calibrate().unwrap();
        let mut b = ctf.clique(xy).unwrap().belief().unwrap().values();
        b[0] *= 1.1;
        ctf.set_clique_belief(xy, f(&[0, 1], &b)).unwrap();
        assert!(!ctf.verify_calibration(1e-9).unwrap().pass);
    }

    #[test]
    fn isolated_cliques_pass_vacuously() {
        let mut ctf = CliqueForest::new(domains(3));
        for v in 0..3 {
            let c = ctf.add_clique(vec![v]);
            ctf.clique_mut(c).unwrap().push_factor(f(&[v], &[1.0, 2.0]), None);
        }
        ctf.calibrate().unwrap();
        let r = ctf.verify_calibration(1e-9).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_sepset_discrepancy, 0.0);
    }

    #[test]
    fn calibration_is_idempotent() {
        let (mut ctf, ..) = chain();
        ctf.calibrate().unwrap();
        let first: Vec<Factor> = ctf.cliques().map(|(_, c)| c.belief().unwrap().clone()).collect();
        ctf.calibrate().unwrap();
        for ((_, c), b) in ctf.cliques().zip(&first) {
            assert!(c.belief().unwrap().max_relative_diff(b).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn zero_mass_is_inconsistent() {
        let mut ctf = CliqueForest::new(domains(1));
        let a = ctf.add_clique(vec![0]);
        ctf.clique_mut(a).unwrap().push_factor(f(&[0], &[1.0, 0.0]), None);
        ctf.clique_mut(a).unwrap().push_factor(f(&[0], &[0.0, 1.0]), None);
        assert!(matches!(ctf.calibrate(), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn absorb_rewires_neighbours() {
        let mut ctf = CliqueForest::new(domains(4));
        let a = ctf.add_clique(vec![0, 1]);
        let b = ctf.add_clique(vec![0, 1, 2]);
        let c = ctf.add_clique(vec![1, 3]);
        ctf.connect(a, b, None);
        ctf.connect(a, c, None);
        assert!(ctf.validate().is_err());
        assert_eq!(ctf.absorb_non_maximal(), vec![(a, b)]);
        assert!(ctf.sepset(b, c).is_some());
        ctf.validate().unwrap();
    }

    #[test]
    fn validate_detects_rip_violation() {
        let mut ctf = CliqueForest::new(domains(3));
        let a = ctf.add_clique(vec![0, 1]);
        let b = ctf.add_clique(vec![1, 2]);
        let c = ctf.add_clique(vec![0, 2]);
        ctf.connect(a, b, None);
        ctf.connect(b, c, None);
        assert!(ctf.validate().is_err());
    }
}
