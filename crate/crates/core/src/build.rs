//! Incremental construction of clique tree forests under a clique-size bound.
//!
//! A factor whose scope already sits inside a clique is assigned there. A
//! factor over only new variables starts its own tree. Anything else edits
//! the forest locally: the subtree connecting the cliques that hold the
//! scope's existing variables is replaced by a min-fill retriangulation of
//! those cliques plus the new scope, and the rest of the forest is
//! reattached through the old boundary sepsets.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::factor::{Factor, VarId};
use crate::forest::{intersect, is_subset, Clique, CliqueForest, CliqueId};
use crate::model::{Model, ModelKind};
use crate::triangulate::{self, Graph, Tie};

const SIZE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorOrder {
    /// Parents before children; Bayesian networks only.
    Topological,
    /// Repeatedly take the factor sharing the most variables with those
    /// already taken, then the one adding the fewest new variables.
    Greedy,
    /// The model's own factor order.
    Given,
}

/// Order in which the model's factors are offered to the builder, as
/// indices into `model.factors()`. Evidence variables do not count as
/// shared or new for the greedy heuristic.
pub fn order_factors(model: &Model, order: FactorOrder) -> Result<Vec<usize>> {
    match order {
        FactorOrder::Topological => {
            if model.kind() != ModelKind::Bayes {
                return Err(Error::Config("topological order requires a Bayesian network".into()));
            }
            let mut cpd_of = vec![0; model.num_vars()];
            for i in 0..model.factors().len() {
                cpd_of[model.cpd_child(i).unwrap()] = i;
            }
            Ok(model.topological_variables()?.into_iter().map(|v| cpd_of[v]).collect())
        }
        FactorOrder::Given => Ok((0..model.factors().len()).collect()),
        FactorOrder::Greedy => {
            let scopes: Vec<BTreeSet<VarId>> = model
                .factors()
                .iter()
                .map(|f| {
                    f.scope()
                        .iter()
                        .copied()
                        .filter(|v| !model.evidence().contains_key(v))
                        .collect()
                })
                .collect();
            Ok(greedy_order(&scopes))
        }
    }
}

fn greedy_order(scopes: &[BTreeSet<VarId>]) -> Vec<usize> {
    let n = scopes.len();
    let mut out = Vec::with_capacity(n);
    let mut taken = vec![false; n];
    let mut seen: BTreeSet<VarId> = BTreeSet::new();
    for _ in 0..n {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            let shared = scopes[i].iter().filter(|v| seen.contains(v)).count();
            let fresh = scopes[i].len() - shared;
            let better = match best {
                None => true,
                Some((s, f, _)) => shared > s || (shared == s && fresh < f),
            };
            if better {
                best = Some((shared, fresh, i));
            }
        }
        let (_, _, i) = best.unwrap();
        taken[i] = true;
        seen.extend(scopes[i].iter().copied());
        out.push(i);
    }
    out
}

/// A factor offered to the builder: its model index and (reduced) table.
pub type Offered = (usize, Factor);

/// Seeds the first forest with pairwise-disjoint factors: a factor is taken
/// only if none of its variables appeared in any factor before it in
/// `factors`, so no later factor can precede it. Returns the forest and the
/// model indices taken.
pub fn init_ctf0(domains: &crate::model::Domains, factors: &[Offered]) -> (CliqueForest, Vec<usize>) {
    let mut ctf = CliqueForest::new(domains.clone());
    let mut scanned: BTreeSet<VarId> = BTreeSet::new();
    let mut taken = Vec::new();
    for (id, f) in factors {
        if f.scope().is_empty() {
            continue;
        }
        if f.scope().iter().all(|v| !scanned.contains(v)) {
            let c = ctf.add_clique(f.scope().to_vec());
            ctf.clique_mut(c).unwrap().push_factor(f.clone(), Some(*id));
            taken.push(*id);
        }
        scanned.extend(f.scope().iter().copied());
    }
    (ctf, taken)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Placement {
    /// Assigned; the id is the clique now holding the factor.
    Placed(CliqueId),
    /// Placing it would create a clique above the bound; forest unchanged.
    Deferred,
}

/// Adds one factor to the forest if the resulting cliques stay within
/// `mcs_p`. The forest is left uncalibrated when it changes.
pub fn insert_factor(
    ctf: &mut CliqueForest,
    f: Factor,
    source: Option<usize>,
    mcs_p: f64,
) -> Result<Placement> {
    let mut scope = f.scope().to_vec();
    scope.sort_unstable();
    if scope.is_empty() {
        return Err(Error::Input("cannot place a factor with empty scope".into()));
    }
    let home = ctf.cliques().find(|(_, c)| c.contains_all(&scope)).map(|(id, _)| id);
    if let Some(id) = home {
        ctf.clique_mut(id).unwrap().push_factor(f, source);
        ctf.set_calibrated(false);
        return Ok(Placement::Placed(id));
    }
    let domains = ctf.domains().clone();
    if domains.clique_size(&scope) > mcs_p + SIZE_EPS {
        return Ok(Placement::Deferred);
    }
    let old: Vec<VarId> = scope.iter().copied().filter(|&v| ctf.contains_var(v)).collect();
    if old.is_empty() {
        let id = ctf.add_clique(scope);
        ctf.clique_mut(id).unwrap().push_factor(f, source);
        ctf.set_calibrated(false);
        return Ok(Placement::Placed(id));
    }

    let mut region: BTreeSet<CliqueId> = BTreeSet::new();
    for comp in ctf.components() {
        let wanted: Vec<VarId> = old
            .iter()
            .copied()
            .filter(|&v| comp.iter().any(|&c| ctf.clique(c).unwrap().contains(v)))
            .collect();
        if !wanted.is_empty() {
            region.extend(connecting_subtree(ctf, &comp, &wanted));
        }
    }

    let mut g = Graph::new();
    for &c in &region {
        triangulate::add_clique(&mut g, ctf.clique(c).unwrap().vars());
    }
    triangulate::add_clique(&mut g, &scope);
    let elim = triangulate::min_fill(g, &domains, Tie::CliqueSize);
    let new_sets = triangulate::maximal(elim.cliques);
    if new_sets.iter().any(|c| domains.clique_size(c) > mcs_p + SIZE_EPS) {
        return Ok(Placement::Deferred);
    }

    // Boundary edges to the untouched part of the forest.
    let mut boundary: Vec<(CliqueId, Vec<VarId>, Option<Factor>)> = Vec::new();
    for &r in &region {
        for n in ctf.neighbors(r).filter(|n| !region.contains(n)).collect::<Vec<_>>() {
            let s = ctf.sepset(r, n).unwrap();
            boundary.push((n, s.vars().to_vec(), s.belief().cloned()));
        }
    }
    let mut potentials: Vec<(Factor, Option<usize>)> = Vec::new();
    let mut divisors: Vec<Factor> = Vec::new();
    let mut reusable: BTreeMap<Vec<VarId>, CliqueId> = BTreeMap::new();
    for &r in &region {
        let mut c = ctf.remove_clique(r).unwrap();
        let (fs, ds) = c.take_potentials();
        potentials.extend(fs);
        divisors.extend(ds);
        reusable.insert(c.vars().to_vec(), r);
    }
    potentials.push((f, source));

    let mut ids: Vec<CliqueId> = Vec::with_capacity(new_sets.len());
    for vars in &new_sets {
        if let Some(&id) = reusable.get(vars) {
            ctf.insert_clique(id, Clique::new(vars.clone()));
            ids.push(id);
        }
    }
    for vars in &new_sets {
        if !reusable.contains_key(vars) {
            ids.push(ctf.add_clique(vars.clone()));
        }
    }
    ids.sort_unstable();

    // Maximum spanning tree on sepset size; ties keep the lower id pair.
    let mut pairs = Vec::new();
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            let w = intersect(ctf.clique(a).unwrap().vars(), ctf.clique(b).unwrap().vars()).len();
            if w > 0 {
                pairs.push((w, a, b));
            }
        }
    }
    pairs.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut uf: BTreeMap<CliqueId, CliqueId> = ids.iter().map(|&i| (i, i)).collect();
    fn find(uf: &mut BTreeMap<CliqueId, CliqueId>, x: CliqueId) -> CliqueId {
        let p = uf[&x];
        if p == x {
            return x;
        }
        let r = find(uf, p);
        uf.insert(x, r);
        r
    }
    for (_, a, b) in pairs {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra != rb {
            uf.insert(ra, rb);
            ctf.connect(a, b, None);
        }
    }

    let home = |ctf: &CliqueForest, vars: &[VarId]| -> Result<CliqueId> {
        ids.iter()
            .copied()
            .find(|&id| is_subset(vars, ctf.clique(id).unwrap().vars()))
            .ok_or_else(|| Error::Internal("retriangulation lost a clique".into()))
    };
    for (n, svars, belief) in boundary {
        let target = home(ctf, &svars)?;
        ctf.connect(n, target, belief);
    }
    for (p, src) in potentials {
        let target = home(ctf, p.scope())?;
        ctf.clique_mut(target).unwrap().push_factor(p, src);
    }
    for d in divisors {
        let target = home(ctf, d.scope())?;
        ctf.clique_mut(target).unwrap().push_divisor(d);
    }
    ctf.absorb_non_maximal();
    ctf.set_calibrated(false);
    let holder = ctf
        .cliques()
        .find(|(_, c)| c.contains_all(&scope))
        .map(|(id, _)| id)
        .ok_or_else(|| Error::Internal("inserted scope not covered".into()))?;
    Ok(Placement::Placed(holder))
}

/// Greedy Steiner subtree of one tree covering `wanted`: start at the
/// clique holding most of them, then repeatedly add the shortest path to
/// the nearest clique holding an uncovered variable.
fn connecting_subtree(ctf: &CliqueForest, comp: &[CliqueId], wanted: &[VarId]) -> BTreeSet<CliqueId> {
    let count = |id: CliqueId, vars: &BTreeSet<VarId>| -> usize {
        let c = ctf.clique(id).unwrap();
        vars.iter().filter(|&&v| c.contains(v)).count()
    };
    let all: BTreeSet<VarId> = wanted.iter().copied().collect();
    let mut start = comp[0];
    for &id in comp {
        if count(id, &all) > count(start, &all) {
            start = id;
        }
    }
    let mut tree: BTreeSet<CliqueId> = [start].into_iter().collect();
    let mut uncovered: BTreeSet<VarId> = all
        .iter()
        .copied()
        .filter(|&v| !ctf.clique(start).unwrap().contains(v))
        .collect();
    while !uncovered.is_empty() {
        let mut parent: BTreeMap<CliqueId, CliqueId> = BTreeMap::new();
        let mut layer: Vec<CliqueId> = tree.iter().copied().collect();
        let found = loop {
            let mut next = Vec::new();
            for &c in &layer {
                for n in ctf.neighbors(c) {
                    if !tree.contains(&n) && !parent.contains_key(&n) {
                        parent.insert(n, c);
                        next.push(n);
                    }
                }
            }
            next.sort_unstable();
            let best = next
                .iter()
                .copied()
                .filter(|&n| count(n, &uncovered) > 0)
                .fold(None, |acc: Option<CliqueId>, n| match acc {
                    Some(b) if count(b, &uncovered) >= count(n, &uncovered) => Some(b),
                    _ => Some(n),
                });
            if let Some(b) = best {
                break b;
            }
            debug_assert!(!next.is_empty(), "wanted variables lie in this tree");
            layer = next;
        };
        let mut x = found;
        while !tree.contains(&x) {
            tree.insert(x);
            uncovered.retain(|&v| !ctf.clique(x).unwrap().contains(v));
            x = parent[&x];
        }
    }
    tree
}

#[derive(Clone, Debug)]
pub struct BuildConfig {
    pub mcs_p: f64,
    /// When a round would place nothing at all, place the first pending
    /// factor regardless of the bound so the caller always makes progress.
    pub force_progress: bool,
}

#[derive(Clone, Debug)]
pub struct BuildOutcome {
    pub ctf: CliqueForest,
    /// Model indices placed in this round, in placement order.
    pub added: Vec<usize>,
    /// Model indices left for later rounds, in offer order.
    pub deferred: Vec<usize>,
    /// Indices placed above the bound by `force_progress`.
    pub forced: Vec<usize>,
}

/// Adds `factors` (in order) to `seed`. A factor that does not fit is
/// deferred, and so is every later factor sharing a variable with a
/// deferred one, which keeps parents ahead of children. Passes repeat while
/// they place something.
pub fn build_ctf(seed: CliqueForest, factors: &[Offered], cfg: &BuildConfig) -> Result<BuildOutcome> {
    let domains = seed.domains().clone();
    for (id, f) in factors {
        let size = domains.clique_size(f.scope());
        if size > cfg.mcs_p + SIZE_EPS {
            return Err(Error::Config(format!(
                "factor {id} spans {size:.2} binary variables, above the clique bound {}",
                cfg.mcs_p
            )));
        }
    }
    let mut ctf = seed;
    let mut pending: VecDeque<usize> = (0..factors.len()).collect();
    let mut added = Vec::new();
    let mut forced = Vec::new();
    while !pending.is_empty() {
        let mut placed_any = false;
        let mut blocked: BTreeSet<VarId> = BTreeSet::new();
        let mut still = VecDeque::new();
        for pos in pending {
            let (id, f) = &factors[pos];
            let placed = !f.scope().iter().any(|v| blocked.contains(v))
                && insert_factor(&mut ctf, f.clone(), Some(*id), cfg.mcs_p)? != Placement::Deferred;
            if placed {
                added.push(*id);
                placed_any = true;
            } else {
                blocked.extend(f.scope().iter().copied());
                still.push_back(pos);
            }
        }
        pending = still;
        if !placed_any {
            if cfg.force_progress && added.is_empty() {
                let pos = pending.pop_front().unwrap();
                let (id, f) = &factors[pos];
                insert_factor(&mut ctf, f.clone(), Some(*id), f64::INFINITY)?;
                added.push(*id);
                forced.push(*id);
                continue;
            }
            break;
        }
    }
    Ok(BuildOutcome {
        ctf,
        added,
        deferred: pending.into_iter().map(|p| factors[p].0).collect(),
        forced,
    })
}
