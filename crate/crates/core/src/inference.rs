//! Linked sequences of clique tree forests and the backward belief update.

use std::collections::{BTreeMap, BTreeSet};

use crate::approx::InterfaceMap;
use crate::error::{Error, Result};
use crate::factor::VarId;
use crate::forest::{intersect, is_subset, CalibrationReport, CliqueForest, CliqueId};
use crate::metrics::hellinger;
use crate::model::{Distribution, Domains, Evidence};

/// A link between a clique of one forest and a clique of the next, via the
/// approximate clique that was carried forward.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkTriplet {
    pub src: CliqueId,
    pub mid: CliqueId,
    pub dst: CliqueId,
    pub link_vars: Vec<VarId>,
}

/// The compiled sequence: calibrated forests plus links between neighbours.
#[derive(Clone, Debug)]
pub struct Slctf {
    pub(crate) domains: Domains,
    pub(crate) ctfs: Vec<CliqueForest>,
    pub(crate) links: Vec<Vec<LinkTriplet>>,
    /// Approximate forests, kept only when requested.
    pub(crate) approximations: Vec<CliqueForest>,
    /// Model factor indices added to each forest.
    pub(crate) added: Vec<Vec<usize>>,
    pub(crate) log_offset: f64,
    pub(crate) evidence: Evidence,
    pub(crate) evidence_horizon: Option<usize>,
}

impl Slctf {
    pub fn ctfs(&self) -> &[CliqueForest] {
        &self.ctfs
    }

    pub fn links(&self) -> &[Vec<LinkTriplet>] {
        &self.links
    }

    /// The approximate forest made from each forest but the last, if the
    /// build was asked to keep them.
    pub fn approximations(&self) -> &[CliqueForest] {
        &self.approximations
    }

    pub fn added(&self) -> &[Vec<usize>] {
        &self.added
    }

    pub fn domains(&self) -> &Domains {
        &self.domains
    }

    /// One-based index of the last forest holding an evidence-variable
    /// CPD, for Bayesian networks built in topological order.
    pub fn evidence_horizon(&self) -> Option<usize> {
        self.evidence_horizon
    }

    /// Zero-based index of the last forest containing `v`.
    pub fn last_ctf_of(&self, v: VarId) -> Option<usize> {
        self.ctfs.iter().rposition(|c| c.contains_var(v))
    }

    /// Boundaries visited by the belief update, last first.
    pub fn update_boundaries(&self) -> Vec<usize> {
        let n = self.ctfs.len();
        let top = match self.evidence_horizon {
            Some(h) => h.min(n),
            None => n,
        };
        (0..top.saturating_sub(1)).rev().collect()
    }
}

/// Builds one triplet per (source, approximate clique) pair.
pub fn find_links(ctf_k: &CliqueForest, map: &InterfaceMap, ctf_next: &CliqueForest) -> Result<Vec<LinkTriplet>> {
    let mut out = Vec::new();
    for e in &map.entries {
        let dst = ctf_next
            .cliques()
            .find(|(_, c)| is_subset(&e.vars, c.vars()))
            .map(|(id, _)| id)
            .ok_or_else(|| Error::Internal(format!("approximate clique {} has no home in the next forest", e.mid)))?;
        for &src in &e.sources {
            let c = ctf_k
                .clique(src)
                .ok_or_else(|| Error::Internal(format!("interface map names missing clique {src}")))?;
            let link_vars = intersect(c.vars(), &e.vars);
            if !link_vars.is_empty() {
                out.push(LinkTriplet {
                    src,
                    mid: e.mid,
                    dst,
                    link_vars,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct UpdateConfig {
    /// Link variables whose marginals differ by less than this (Hellinger)
    /// need no update.
    pub link_threshold: f64,
    pub max_links: Option<usize>,
    /// Check calibration and link agreement after every link update.
    pub verify: bool,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        UpdateConfig {
            link_threshold: 1e-3,
            max_links: None,
            verify: false,
        }
    }
}

/// Chooses the links to update across one boundary and their order.
pub fn select_and_order_links(
    links: &[LinkTriplet],
    ctf_k: &CliqueForest,
    ctf_next: &CliqueForest,
    cfg: &UpdateConfig,
) -> Result<Vec<LinkTriplet>> {
    let mut delta: BTreeMap<VarId, f64> = BTreeMap::new();
    for l in links {
        for &v in &l.link_vars {
            if !delta.contains_key(&v) {
                let d = hellinger(&ctf_k.clique_marginal(v)?, &ctf_next.clique_marginal(v)?)?;
                delta.insert(v, d);
            }
        }
    }
    let mut uncovered: BTreeSet<VarId> = delta
        .iter()
        .filter(|(_, &d)| d >= cfg.link_threshold)
        .map(|(&v, _)| v)
        .collect();
    let mut chosen: Vec<usize> = Vec::new();
    while !uncovered.is_empty() && cfg.max_links.is_none_or(|m| chosen.len() < m) {
        let mut best: Option<(usize, usize)> = None;
        for (i, l) in links.iter().enumerate() {
            let gain = l.link_vars.iter().filter(|v| uncovered.contains(v)).count();
            if gain == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((g, j)) => gain > g || (gain == g && (l.src, l.mid) < (links[j].src, links[j].mid)),
            };
            if better {
                best = Some((gain, i));
            }
        }
        let Some((_, i)) = best else { break };
        for v in &links[i].link_vars {
            uncovered.remove(v);
        }
        chosen.push(i);
    }
    for comp in ctf_k.components() {
        let inside = |i: &usize| comp.binary_search(&links[*i].src).is_ok();
        if chosen.iter().any(inside) {
            continue;
        }
        let mut best: Option<usize> = None;
        for i in (0..links.len()).filter(inside) {
            let better = match best {
                None => true,
                Some(j) => {
                    let (a, b) = (&links[i], &links[j]);
                    a.link_vars.len() > b.link_vars.len()
                        || (a.link_vars.len() == b.link_vars.len() && (a.src, a.mid) < (b.src, b.mid))
                }
            };
            if better {
                best = Some(i);
            }
        }
        chosen.extend(best);
    }
    let priority = |l: &LinkTriplet| -> f64 {
        let over = |keep: &dyn Fn(f64) -> bool| {
            l.link_vars
                .iter()
                .map(|v| delta[v])
                .filter(|&d| keep(d))
                .fold(f64::INFINITY, f64::min)
        };
        let covered = over(&|d| d >= cfg.link_threshold);
        if covered.is_finite() {
            covered
        } else {
            over(&|_| true)
        }
    };
    let mut out: Vec<LinkTriplet> = chosen.into_iter().map(|i| links[i].clone()).collect();
    out.sort_by(|a, b| priority(a).partial_cmp(&priority(b)).unwrap());
    Ok(out)
}

/// What one link update did.
#[derive(Clone, Debug)]
pub struct LinkUpdate {
    pub boundary: usize,
    pub link: LinkTriplet,
    /// Messages passed re-distributing from the source clique.
    pub passes: usize,
    /// Edges of the source clique's tree.
    pub tree_edges: usize,
    /// Largest normalized difference of the link-variable marginals after
    /// the update, when verification was requested.
    pub link_discrepancy: Option<f64>,
    pub calibration: Option<CalibrationReport>,
}

/// Rescales the source clique so its link-variable marginal matches the
/// destination's, then re-distributes over the source tree.
pub fn back_propagate_link(link: &LinkTriplet, ctf_k: &mut CliqueForest, ctf_next: &CliqueForest) -> Result<usize> {
    let belief = ctf_k
        .clique(link.src)
        .and_then(|c| c.belief())
        .ok_or_else(|| Error::Internal(format!("link source {} has no belief", link.src)))?;
    let target = ctf_next
        .clique(link.dst)
        .and_then(|c| c.belief())
        .ok_or_else(|| Error::Internal(format!("link destination {} has no belief", link.dst)))?
        .marginalize_onto(&link.link_vars)?;
    let current = belief.marginalize_onto(&link.link_vars)?;
    let target = target.permuted(current.scope())?;
    if current
        .raw_values()
        .iter()
        .zip(target.raw_values())
        .any(|(&c, &t)| c == 0.0 && t > 0.0)
    {
        return Err(Error::Inconsistent(format!(
            "clique {} gives zero weight to states the next forest supports",
            link.src
        )));
    }
    let updated = belief.product(&target.divide(&current));
    ctf_k.set_clique_belief(link.src, updated)?;
    ctf_k.distribute_from(link.src)
}

/// Walks the boundaries from the last toward the first, updating each
/// earlier forest through its selected links.
pub fn belief_update(slctf: &mut Slctf, cfg: &UpdateConfig) -> Result<Vec<LinkUpdate>> {
    let mut trace = Vec::new();
    for b in slctf.update_boundaries() {
        let (head, tail) = slctf.ctfs.split_at_mut(b + 1);
        let (ctf_k, ctf_next) = (&mut head[b], &tail[0]);
        let chosen = select_and_order_links(&slctf.links[b], ctf_k, ctf_next, cfg)?;
        for link in chosen {
            let passes = back_propagate_link(&link, ctf_k, ctf_next)?;
            let tree_edges = ctf_k.tree_edge_count(link.src);
            let (link_discrepancy, calibration) = if cfg.verify {
                let mut worst = 0.0f64;
                for &v in &link.link_vars {
                    let here = ctf_k.marginal_from(link.src, v)?;
                    let there = ctf_next.marginal_from(link.dst, v)?;
                    for (a, b) in here.probs().iter().zip(there.probs()) {
                        worst = worst.max((a - b).abs());
                    }
                }
                (Some(worst), Some(ctf_k.verify_calibration(1e-9)?))
            } else {
                (None, None)
            };
            trace.push(LinkUpdate {
                boundary: b,
                link,
                passes,
                tree_edges,
                link_discrepancy,
                calibration,
            });
        }
    }
    Ok(trace)
}

/// Marginal of every variable, read from the last forest containing it;
/// evidence variables get a point mass on their observed state.
pub fn infer_marginals(slctf: &Slctf) -> Result<BTreeMap<VarId, Distribution>> {
    let mut out = BTreeMap::new();
    for v in 0..slctf.domains.len() {
        out.insert(v, marginal(slctf, v)?);
    }
    Ok(out)
}

pub fn marginal(slctf: &Slctf, v: VarId) -> Result<Distribution> {
    if v >= slctf.domains.len() {
        return Err(Error::UnknownVariable(v));
    }
    if let Some(&s) = slctf.evidence.get(&v) {
        return Ok(Distribution::point_mass(slctf.domains.card(v), s));
    }
    let k = slctf.last_ctf_of(v).ok_or(Error::UnknownVariable(v))?;
    slctf.ctfs[k].clique_marginal(v)
}

/// log10 of the partition function (probability of evidence for Bayesian
/// networks): the last forest's normalization constant plus the constants
/// split off while building.
pub fn estimate_log_pr(slctf: &Slctf) -> Result<f64> {
    let last = match slctf.ctfs.last() {
        Some(c) => c.log_nc()?,
        None => 0.0,
    };
    Ok(last + slctf.log_offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::InterfaceEntry;
    use crate::factor::Factor;

    fn f(scope: &[VarId], values: &[f64]) -> Factor {
        Factor::new(scope.to_vec(), vec![2; scope.len()], values.to_vec()).unwrap()
    }

    fn single(scope: &[VarId], values: &[f64]) -> CliqueForest {
        let mut ctf = CliqueForest::new(Domains::new(vec![2; 3]).unwrap());
        let c = ctf.add_clique(scope.to_vec());
        ctf.clique_mut(c).unwrap().push_factor(f(scope, values), None);
        ctf.calibrate().unwrap();
        ctf
    }

    #[test]
    fn identity_update_changes_nothing() {
        let mut a = single(&[0, 1], &[1.0, 2.0, 3.0, 4.0]);
        let b = single(&[0, 2], &[1.0, 2.0, 2.0, 5.0]); // P(0) = .3 .7 in both
        let link = LinkTriplet { src: 0, mid: 0, dst: 0, link_vars: vec![0] };
        let before = a.clique(0).unwrap().belief().unwrap().clone();
        back_propagate_link(&link, &mut a, &b).unwrap();
        let after = a.clique(0).unwrap().belief().unwrap();
        assert!(after.max_relative_diff(&before).unwrap() < 1e-12);
    }

    #[test]
    fn single_clique_update_keeps_conditionals() {
        let mut a = single(&[0, 1], &[1.0, 2.0, 3.0, 4.0]);
        let b = single(&[0], &[9.0, 1.0]);
        let link = LinkTriplet { src: 0, mid: 0, dst: 0, link_vars: vec![0] };
        back_propagate_link(&link, &mut a, &b).unwrap();
        // P'(0) = [.9, .1]; P(1 | 0) unchanged: [1/3, 2/3] and [3/7, 4/7]
        let want = [0.9 / 3.0, 0.9 * 2.0 / 3.0, 0.1 * 3.0 / 7.0, 0.1 * 4.0 / 7.0];
        let got = a.clique(0).unwrap().belief().unwrap();
        let z: f64 = got.values().iter().sum();
        for (g, w) in got.values().iter().zip(want) {
            assert!((g / z - w).abs() < 1e-12);
        }
        // NC follows the destination
        assert!((a.log_nc().unwrap() - b.log_nc().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn unsupported_target_is_inconsistent() {
        let mut a = single(&[0], &[1.0, 0.0]);
        let b = single(&[0], &[0.5, 0.5]);
        let link = LinkTriplet { src: 0, mid: 0, dst: 0, link_vars: vec![0] };
        assert!(matches!(back_propagate_link(&link, &mut a, &b), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn links_follow_the_interface_map() {
        let d = Domains::new(vec![2; 4]).unwrap();
        let mut k = CliqueForest::new(d.clone());
        let hi = k.add_clique(vec![0, 1]);
        let il = k.add_clique(vec![1, 2]);
        k.connect(hi, il, None);
        let mut next = CliqueForest::new(d);
        next.add_clique(vec![3]);
        let home = next.add_clique(vec![0, 2, 3]);
        let map = InterfaceMap {
            entries: vec![InterfaceEntry { mid: 7, vars: vec![0, 2], sources: vec![hi, il], collapsed: true }],
        };
        let links = find_links(&k, &map, &next).unwrap();
        assert_eq!(
            links,
            vec![
                LinkTriplet { src: hi, mid: 7, dst: home, link_vars: vec![0] },
                LinkTriplet { src: il, mid: 7, dst: home, link_vars: vec![2] },
            ]
        );
        let lost = InterfaceMap {
            entries: vec![InterfaceEntry { mid: 7, vars: vec![0, 1], sources: vec![hi], collapsed: false }],
        };
        assert!(matches!(find_links(&k, &lost, &next), Err(Error::Internal(_))));
    }

    #[test]
    fn selection_orders_by_smallest_change() {
        // two separate trees in each forest; variable 0 moves a little,
        // variable 1 a lot
        let d = Domains::new(vec![2; 2]).unwrap();
        let build = |p0: [f64; 2], p1: [f64; 2]| {
            let mut c = CliqueForest::new(d.clone());
            let a = c.add_clique(vec![0]);
            let b = c.add_clique(vec![1]);
            c.clique_mut(a).unwrap().push_factor(f(&[0], &p0), None);
            c.clique_mut(b).unwrap().push_factor(f(&[1], &p1), None);
            c.calibrate().unwrap();
            c
        };
        let k = build([0.5, 0.5], [0.5, 0.5]);
        let next = build([0.52, 0.48], [0.9, 0.1]);
        let links = vec![
            LinkTriplet { src: 1, mid: 1, dst: 1, link_vars: vec![1] },
            LinkTriplet { src: 0, mid: 0, dst: 0, link_vars: vec![0] },
        ];
        let chosen = select_and_order_links(&links, &k, &next, &UpdateConfig::default()).unwrap();
        assert_eq!(chosen.iter().map(|l| l.src).collect::<Vec<_>>(), vec![0, 1]);

        // nothing moves: the floor still keeps one link per tree
        let same = select_and_order_links(&links, &k, &k, &UpdateConfig::default()).unwrap();
        assert_eq!(same.len(), 2);
    }
}
