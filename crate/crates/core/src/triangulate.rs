//! Greedy min-fill elimination on small undirected graphs.

use std::collections::{BTreeMap, BTreeSet};

use crate::factor::VarId;
use crate::forest::is_subset;
use crate::model::Domains;

pub(crate) type Graph = BTreeMap<VarId, BTreeSet<VarId>>;

/// Secondary key after the fill count; the variable id breaks what remains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Tie {
    /// Smaller elimination clique (in binary-variable units) first.
    CliqueSize,
    /// Fewer remaining neighbours first.
    Degree,
}

pub(crate) struct Elimination {
    pub order: Vec<VarId>,
    /// `{v} + N(v)` at the time each variable was eliminated, sorted.
    pub cliques: Vec<Vec<VarId>>,
}

pub(crate) fn add_clique(g: &mut Graph, vars: &[VarId]) {
    for &a in vars {
        let e = g.entry(a).or_default();
        for &b in vars {
            if a != b {
                e.insert(b);
            }
        }
    }
}

fn fill_of(g: &Graph, v: VarId) -> usize {
    let ns: Vec<VarId> = g[&v].iter().copied().collect();
    let mut fill = 0;
    for (i, a) in ns.iter().enumerate() {
        let na = &g[a];
        fill += ns[i + 1..].iter().filter(|b| !na.contains(b)).count();
    }
    fill
}

fn key(g: &Graph, v: VarId, domains: &Domains, tie: Tie) -> (usize, u64, VarId) {
    let second = match tie {
        // nonnegative floats order like their bit patterns
        Tie::CliqueSize => {
            let s = domains.clique_size(g[&v].iter().chain(std::iter::once(&v)));
            s.max(0.0).to_bits()
        }
        Tie::Degree => g[&v].len() as u64,
    };
    (fill_of(g, v), second, v)
}

/// Eliminates every vertex of `g`, always choosing the smallest
/// `(fill, tie, id)` key, and returns the order and elimination cliques.
pub(crate) fn min_fill(mut g: Graph, domains: &Domains, tie: Tie) -> Elimination {
    let mut keys: BTreeMap<VarId, (usize, u64, VarId)> = BTreeMap::new();
    let mut queue = BTreeSet::new();
    for &v in g.keys() {
        let k = key(&g, v, domains, tie);
        keys.insert(v, k);
        queue.insert(k);
    }
    let mut order = Vec::with_capacity(g.len());
    let mut cliques = Vec::with_capacity(g.len());
    while let Some((_, _, v)) = queue.pop_first() {
        keys.remove(&v);
        let ns: Vec<VarId> = g.remove(&v).unwrap().into_iter().collect();
        let mut clique = ns.clone();
        clique.push(v);
        clique.sort_unstable();
        cliques.push(clique);
        order.push(v);
        for &a in &ns {
            g.get_mut(&a).unwrap().remove(&v);
        }
        add_clique(&mut g, &ns);
        let mut touched: BTreeSet<VarId> = ns.iter().copied().collect();
        for &a in &ns {
            touched.extend(g[&a].iter().copied());
        }
        for u in touched {
            let k = key(&g, u, domains, tie);
            let old = keys.insert(u, k).unwrap();
            queue.remove(&old);
            queue.insert(k);
        }
    }
    Elimination { order, cliques }
}

/// Drops cliques contained in another one; keeps first occurrences.
pub(crate) fn maximal(cliques: Vec<Vec<VarId>>) -> Vec<Vec<VarId>> {
    let mut out: Vec<Vec<VarId>> = Vec::new();
    let mut sorted = cliques;
    // larger first so that subsets always meet their superset
    sorted.sort_by(|a, b| b.len().cmp(&a.len()));
    for c in sorted {
        if !out.iter().any(|o| is_subset(&c, o)) {
            out.push(c);
        }
    }
    out.sort();
    out
}
