#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use slctf::forest::CliqueForest;
use slctf::{Domains, Evidence, Factor, Model, VarId};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Variable names of the small ten-variable example, in id order.
pub const NAMES: &str = "dfhijklmno";

pub fn var(c: char) -> VarId {
    NAMES.find(c).unwrap()
}

pub fn name(vars: &[VarId]) -> String {
    vars.iter().map(|&v| NAMES.as_bytes()[v] as char).collect()
}

pub const EXAMPLE_SCOPES: [&str; 10] = ["dmo", "jh", "il", "fmn", "hi", "dhk", "fdh", "jm", "klo", "fo"];

/// The ten-factor example with binary variables and uniform(0, 1) tables.
pub fn example_model(rng: &mut ChaCha8Rng) -> Model {
    let factors = EXAMPLE_SCOPES
        .iter()
        .map(|s| {
            let scope: Vec<VarId> = s.chars().map(var).collect();
            let values = (0..1 << scope.len()).map(|_| rng.gen_range(0.01..1.0)).collect();
            Factor::new(scope.clone(), vec![2; scope.len()], values).unwrap()
        })
        .collect();
    Model::markov(Domains::new(vec![2; NAMES.len()]).unwrap(), factors).unwrap()
}

pub fn random_table(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(0.05..1.0)).collect()
}

/// Markov network with `n` variables and `m` factors of arity 1 to `max_arity`;
/// every variable gets a unary factor so none is orphaned.
pub fn random_markov(rng: &mut ChaCha8Rng, n: usize, m: usize, max_arity: usize, max_card: usize) -> Model {
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=max_card)).collect();
    let mut factors = Vec::new();
    for v in 0..n {
        factors.push(Factor::new(vec![v], vec![cards[v]], random_table(rng, cards[v])).unwrap());
    }
    let ids: Vec<VarId> = (0..n).collect();
    for _ in 0..if n > 1 { m } else { 0 } {
        let k = rng.gen_range(2..=max_arity.min(n));
        let scope: Vec<VarId> = ids.choose_multiple(rng, k).copied().collect();
        let c: Vec<usize> = scope.iter().map(|&v| cards[v]).collect();
        let len = c.iter().product();
        factors.push(Factor::new(scope, c, random_table(rng, len)).unwrap());
    }
    factors.shuffle(rng);
    Model::markov(Domains::new(cards).unwrap(), factors).unwrap()
}

/// Bayesian network over `n` variables; each node draws up to `max_parents`
/// parents among the `window` nodes before it in a hidden order, and ids
/// are shuffled so the topological order is not the id order.
pub fn random_bayes(rng: &mut ChaCha8Rng, n: usize, max_parents: usize, window: usize, max_card: usize) -> Model {
    let mut ids: Vec<VarId> = (0..n).collect();
    ids.shuffle(rng);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=max_card)).collect();
    let mut factors = Vec::new();
    let mut child = Vec::new();
    for pos in 0..n {
        let lo = pos.saturating_sub(window);
        let pool: Vec<VarId> = ids[lo..pos].to_vec();
        let k = rng.gen_range(0..=max_parents.min(pool.len()));
        let mut scope: Vec<VarId> = pool.choose_multiple(rng, k).copied().collect();
        let v = ids[pos];
        scope.push(v);
        let c: Vec<usize> = scope.iter().map(|&u| cards[u]).collect();
        let rows: usize = c[..k].iter().product();
        let mut values = Vec::new();
        for _ in 0..rows {
            let w = random_table(rng, cards[v]);
            let s: f64 = w.iter().sum();
            values.extend(w.iter().map(|x| x / s));
        }
        factors.push(Factor::new(scope, c, values).unwrap());
        child.push(v);
    }
    Model::bayes(Domains::new(cards).unwrap(), factors, child).unwrap()
}

/// `rows x cols` binary grid with Ising-style potentials: unary
/// `exp(h s)` and pairwise `exp(w s t)`, `s, t` in {-1, +1}, `h, w` uniform
/// on `(-1, 1)`.
pub fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Model {
    let id = |r: usize, c: usize| r * cols + c;
    let mut factors = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let h: f64 = rng.gen_range(-1.0..1.0);
            factors.push(Factor::new(vec![id(r, c)], vec![2], vec![(-h).exp(), h.exp()]).unwrap());
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            let mut pair = |a: VarId, b: VarId, rng: &mut ChaCha8Rng| {
                let w: f64 = rng.gen_range(-1.0..1.0);
                let t = vec![w.exp(), (-w).exp(), (-w).exp(), w.exp()];
                factors.push(Factor::new(vec![a, b], vec![2, 2], t).unwrap());
            };
            if c + 1 < cols {
                pair(id(r, c), id(r, c + 1), rng);
            }
            if r + 1 < rows {
                pair(id(r, c), id(r + 1, c), rng);
            }
        }
    }
    Model::markov(Domains::new(vec![2; rows * cols]).unwrap(), factors).unwrap()
}

/// Evidence on up to `max` distinct variables with uniform states.
pub fn random_evidence(rng: &mut ChaCha8Rng, model: &Model, max: usize) -> Evidence {
    let k = rng.gen_range(0..=max.min(model.num_vars()));
    let ids: Vec<VarId> = (0..model.num_vars()).collect();
    ids.choose_multiple(rng, k)
        .map(|&v| (v, rng.gen_range(0..model.domains().card(v))))
        .collect()
}

/// The distribution a calibrated forest encodes, `prod beta / prod mu`,
/// as one dense table over all its variables.
pub fn encoded_joint(ctf: &CliqueForest) -> Factor {
    let mut joint = Factor::scalar(1.0);
    for (_, c) in ctf.cliques() {
        joint = joint.product(c.belief().unwrap());
    }
    for (a, b) in ctf.edges() {
        joint = joint.divide(ctf.sepset(a, b).unwrap().belief().unwrap());
    }
    joint
}

pub fn product(factors: impl IntoIterator<Item = Factor>) -> Factor {
    factors.into_iter().fold(Factor::scalar(1.0), |a, f| a.product(&f))
}

/// Largest absolute difference between two sets of marginals.
pub fn max_abs_diff(a: &BTreeMap<VarId, slctf::Distribution>, b: &BTreeMap<VarId, slctf::Distribution>) -> f64 {
    let mut worst = 0.0f64;
    for (v, p) in a {
        for (x, y) in p.probs().iter().zip(b[v].probs()) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
