//! Reducing a calibrated forest to bounded clique size.
//!
//! Variables that also occur in deferred factors (interface variables) are
//! kept. Everything else is summed out where the bound allows it: exactly,
//! by collapsing the subtree of cliques holding a variable, or locally, by
//! summing a variable out of single cliques and restoring the running
//! intersection property afterwards.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::factor::{Factor, VarId};
use crate::forest::{CliqueForest, CliqueId};

const SIZE_EPS: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InterfaceSets {
    pub ivs: BTreeSet<VarId>,
    pub nivs: BTreeSet<VarId>,
}

pub fn collect_interface_vars<'a>(
    ctf: &CliqueForest,
    deferred_scopes: impl IntoIterator<Item = &'a [VarId]>,
) -> InterfaceSets {
    let all = ctf.variables();
    let pending: BTreeSet<VarId> = deferred_scopes.into_iter().flatten().copied().collect();
    let (ivs, nivs) = all.into_iter().partition(|v| pending.contains(v));
    InterfaceSets { ivs, nivs }
}

#[derive(Clone, Debug)]
pub struct ApproxConfig {
    pub mcs_im: f64,
}

/// Where one clique of the approximate forest came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceEntry {
    pub mid: CliqueId,
    pub vars: Vec<VarId>,
    /// Cliques of the original forest the clique was derived from.
    pub sources: Vec<CliqueId>,
    /// True when the clique is the result of collapsing a subtree.
    pub collapsed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct InterfaceMap {
    pub entries: Vec<InterfaceEntry>,
}

impl InterfaceMap {
    pub fn get(&self, mid: CliqueId) -> Option<&InterfaceEntry> {
        self.entries.iter().find(|e| e.mid == mid)
    }
}

#[derive(Clone, Debug)]
pub struct Approximation {
    /// The reduced forest, calibrated.
    pub ctf: CliqueForest,
    pub map: InterfaceMap,
    /// log10 normalization constants of trees dropped for holding no
    /// interface variable.
    pub dropped_log_nc: f64,
    /// Bound actually met; above the requested one when it was relaxed.
    pub mcs_im_used: f64,
    pub exact_removals: usize,
    pub local_removals: usize,
}

#[derive(Clone, Debug)]
struct Origin {
    sources: BTreeSet<CliqueId>,
    collapsed: bool,
}

struct Work {
    ctf: CliqueForest,
    origin: BTreeMap<CliqueId, Origin>,
    ivs: BTreeSet<VarId>,
}

/// Drops trees without interface variables and repeatedly prunes leaf
/// cliques whose interface variables all appear in their neighbour. The
/// remaining forest keeps its beliefs; returns the dropped log-NC total.
pub fn init_approx_subgraph(ctf: &mut CliqueForest, ivs: &BTreeSet<VarId>) -> Result<f64> {
    let mut dropped = 0.0;
    for comp in ctf.components() {
        let has_iv = comp
            .iter()
            .any(|&c| ctf.clique(c).unwrap().vars().iter().any(|v| ivs.contains(v)));
        if !has_iv {
            dropped += ctf.tree_log_nc(comp[0])?;
            for c in comp {
                ctf.remove_clique(c);
            }
        }
    }
    loop {
        let leaf = ctf.clique_ids().into_iter().find(|&c| {
            if ctf.degree(c) != 1 {
                return false;
            }
            let n = ctf.neighbors(c).next().unwrap();
            let nb = ctf.clique(n).unwrap();
            ctf.clique(c)
                .unwrap()
                .vars()
                .iter()
                .filter(|v| ivs.contains(v))
                .all(|&v| nb.contains(v))
        });
        match leaf {
            Some(c) => {
                ctf.remove_clique(c);
            }
            None => break,
        }
    }
    Ok(dropped)
}

impl Work {
    fn size_of(&self, vars: &[VarId]) -> f64 {
        self.ctf.domains().clique_size(vars)
    }

    fn nivs(&self) -> Vec<VarId> {
        self.ctf
            .variables()
            .into_iter()
            .filter(|v| !self.ivs.contains(v))
            .collect()
    }

    /// Collapses the cliques holding `v` into one clique with `v` summed out,
    /// if the result fits. Returns whether it did.
    fn exact_marginalize(&mut self, v: VarId, bound: f64) -> Result<bool> {
        let st = self.ctf.cliques_containing(v);
        let mut union: BTreeSet<VarId> = BTreeSet::new();
        for &c in &st {
            union.extend(self.ctf.clique(c).unwrap().vars().iter().copied());
        }
        union.remove(&v);
        let vars: Vec<VarId> = union.into_iter().collect();
        if vars.is_empty() || self.size_of(&vars) > bound + SIZE_EPS {
            return Ok(false);
        }
        let inside: BTreeSet<CliqueId> = st.iter().copied().collect();
        let mut joint: Option<Factor> = None;
        for &c in &st {
            let b = self
                .ctf
                .clique(c)
                .unwrap()
                .belief()
                .ok_or_else(|| Error::Internal("approximating an uncalibrated forest".into()))?;
            joint = Some(match joint {
                None => b.clone(),
                Some(j) => j.product(b),
            });
        }
        let mut joint = joint.unwrap();
        let mut boundary: Vec<(CliqueId, Option<Factor>)> = Vec::new();
        for &c in &st {
            for n in self.ctf.neighbors(c).collect::<Vec<_>>() {
                let s = self.ctf.sepset(c, n).unwrap();
                if inside.contains(&n) {
                    // each internal edge is seen from both ends
                    if c < n {
                        joint = joint.divide(s.belief().unwrap());
                    }
                } else {
                    boundary.push((n, s.belief().cloned()));
                }
            }
        }
        let belief = joint.marginalize(&[v])?;
        let mut sources = BTreeSet::new();
        for &c in &st {
            self.ctf.remove_clique(c);
            sources.extend(self.origin.remove(&c).unwrap().sources);
        }
        let id = self.ctf.add_clique(vars);
        self.ctf.set_clique_belief(id, belief)?;
        self.origin.insert(id, Origin { sources, collapsed: true });
        for (n, b) in boundary {
            self.ctf.connect(n, id, b);
        }
        self.absorb();
        Ok(true)
    }

    fn absorb(&mut self) {
        for (small, _) in self.ctf.absorb_non_maximal() {
            self.origin.remove(&small);
        }
    }

    /// Tries every NIV in sweep order, restarting after each collapse.
    fn exact_sweep(&mut self, bound: f64) -> Result<usize> {
        let mut done = 0;
        'restart: loop {
            let mut order: Vec<(usize, VarId)> = self
                .nivs()
                .into_iter()
                .map(|v| (self.ctf.cliques_containing(v).len(), v))
                .collect();
            order.sort_unstable();
            for (_, v) in order {
                if self.exact_marginalize(v, bound)? {
                    done += 1;
                    continue 'restart;
                }
            }
            return Ok(done);
        }
    }

    /// Components of the cliques holding `v` once `without` is removed,
    /// connected through sepsets containing `v`.
    fn holder_components(&self, v: VarId, without: CliqueId) -> Vec<Vec<CliqueId>> {
        let holders: BTreeSet<CliqueId> = self
            .ctf
            .cliques_containing(v)
            .into_iter()
            .filter(|&c| c != without)
            .collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &h in &holders {
            if !seen.insert(h) {
                continue;
            }
            let mut comp = vec![h];
            let mut i = 0;
            while i < comp.len() {
                let c = comp[i];
                for n in self.ctf.neighbors(c) {
                    if holders.contains(&n) && seen.insert(n) {
                        comp.push(n);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Cliques from which `v` must be summed out if it is dropped from `c`,
    /// or `None` when that would empty a clique or a sepset.
    fn local_plan(&self, c: CliqueId, v: VarId) -> Option<Vec<CliqueId>> {
        let mut comps = self.holder_components(v, c);
        if self.ivs.contains(&v) && comps.is_empty() {
            return None;
        }
        comps.sort_by(|a, b| {
            let size = |x: &Vec<CliqueId>| -> f64 {
                x.iter().map(|&i| self.ctf.clique_size(i)).sum()
            };
            b.len()
                .cmp(&a.len())
                .then(size(b).partial_cmp(&size(a)).unwrap())
                .then(b.last().cmp(&a.last()))
        });
        let mut victims = vec![c];
        for comp in comps.into_iter().skip(1) {
            victims.extend(comp);
        }
        for &x in &victims {
            if self.ctf.clique(x).unwrap().vars().len() == 1 {
                return None;
            }
            for n in self.ctf.neighbors(x) {
                if self.ctf.sepset(x, n).unwrap().vars() == [v] {
                    return None;
                }
            }
        }
        Some(victims)
    }

    fn apply_local(&mut self, v: VarId, victims: &[CliqueId]) -> Result<()> {
        for &x in victims {
            let clique = self.ctf.clique(x).unwrap();
            let vars: Vec<VarId> = clique.vars().iter().copied().filter(|&u| u != v).collect();
            let belief = clique
                .belief()
                .ok_or_else(|| Error::Internal("approximating an uncalibrated forest".into()))?
                .marginalize(&[v])?;
            let cm = self.ctf.clique_mut(x).unwrap();
            cm.set_vars(vars);
            cm.set_belief(Some(belief));
            for n in self.ctf.neighbors(x).collect::<Vec<_>>() {
                let s = self.ctf.sepset(x, n).unwrap();
                let b = match s.belief() {
                    Some(b) if b.scope().contains(&v) => Some(b.marginalize(&[v])?),
                    other => other.cloned(),
                };
                self.ctf.refresh_sepset(x, n, b);
            }
        }
        self.absorb();
        Ok(())
    }

    /// One local marginalization on the largest oversized clique.
    /// Returns false if no candidate variable is admissible.
    fn local_step(&mut self, bound: f64) -> Result<Option<bool>> {
        let mut target: Option<(f64, CliqueId)> = None;
        for id in self.ctf.clique_ids() {
            let s = self.ctf.clique_size(id);
            if s > bound + SIZE_EPS && target.is_none_or(|(t, _)| s > t + SIZE_EPS) {
                target = Some((s, id));
            }
        }
        let Some((_, c)) = target else { return Ok(None) };
        let domains = self.ctf.domains().clone();
        let mut cands: Vec<(std::cmp::Reverse<usize>, bool, std::cmp::Reverse<usize>, VarId)> = self
            .ctf
            .clique(c)
            .unwrap()
            .vars()
            .iter()
            .copied()
            .filter_map(|v| {
                let holders = self.ctf.cliques_containing(v).len();
                let iv = self.ivs.contains(&v);
                if iv && holders < 2 {
                    return None;
                }
                Some((std::cmp::Reverse(domains.card(v)), iv, std::cmp::Reverse(holders), v))
            })
            .collect();
        cands.sort_unstable();
        for (.., v) in cands {
            if let Some(victims) = self.local_plan(c, v) {
                self.apply_local(v, &victims)?;
                return Ok(Some(true));
            }
        }
        Ok(Some(false))
    }
}

/// Reduces a calibrated forest so every clique is within `cfg.mcs_im`,
/// recording where each remaining clique came from. When no admissible
/// variable can shrink an oversized clique the bound is raised by one for
/// this forest and the attempt continues.
pub fn approximate_ctf<'a>(
    ctf: &CliqueForest,
    deferred_scopes: impl IntoIterator<Item = &'a [VarId]>,
    cfg: &ApproxConfig,
) -> Result<Approximation> {
    if !ctf.is_calibrated() {
        return Err(Error::Input("approximation needs a calibrated forest".into()));
    }
    let sets = collect_interface_vars(ctf, deferred_scopes);
    let mut work = Work {
        ctf: ctf.clone(),
        origin: ctf
            .clique_ids()
            .into_iter()
            .map(|c| {
                let o = Origin {
                    sources: [c].into_iter().collect(),
                    collapsed: false,
                };
                (c, o)
            })
            .collect(),
        ivs: sets.ivs,
    };
    work.ctf.clear_potentials();
    let dropped_log_nc = init_approx_subgraph(&mut work.ctf, &work.ivs)?;
    work.origin.retain(|id, _| work.ctf.clique(*id).is_some());
    let mut bound = cfg.mcs_im;
    let mut exact_removals = 0;
    let mut local_removals = 0;
    loop {
        // a collapse after a local step would join beliefs of an already
        // approximate forest, so sweeps stop once local steps begin
        if local_removals == 0 {
            exact_removals += work.exact_sweep(bound)?;
        }
        match work.local_step(bound)? {
            None => break,
            Some(true) => local_removals += 1,
            Some(false) => bound += 1.0,
        }
    }
    work.ctf.set_calibrated(true);
    let entries = work
        .ctf
        .cliques()
        .map(|(id, c)| {
            let o = &work.origin[&id];
            InterfaceEntry {
                mid: id,
                vars: c.vars().to_vec(),
                sources: o.sources.iter().copied().collect(),
                collapsed: o.collapsed,
            }
        })
        .collect();
    Ok(Approximation {
        ctf: work.ctf,
        map: InterfaceMap { entries },
        dropped_log_nc,
        mcs_im_used: bound,
        exact_removals,
        local_removals,
    })
}
