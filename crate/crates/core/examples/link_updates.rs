// Inspecting the forest sequence and the backward belief update: which
// links are chosen, what they cost, and how much they move the answers.
//
//     cargo run --example link_updates

use std::collections::BTreeMap;

use slctf::inference::{belief_update, Slctf, UpdateConfig};
use slctf::metrics::hellinger;
use slctf::oracle::{self, DEFAULT_CAP};
use slctf::{compile, Distribution, Domains, Factor, Model, RunConfig};

/// A Moebius ladder: a ring of `n` binary variables, each also coupled to
/// the variable opposite it.
pub fn moebius(n: usize) -> Model {
    let pair = |a, b, w: f64| Factor::new(vec![a, b], vec![2, 2], vec![w, 1.0, 1.0, w]).unwrap();
    let mut factors = Vec::new();
    for i in 0..n {
        factors.push(Factor::new(vec![i], vec![2], vec![1.0, 1.0 + i as f64 / n as f64]).unwrap());
        factors.push(pair(i, (i + 1) % n, if i % 3 == 0 { 0.4 } else { 2.5 }));
        if i < n / 2 {
            factors.push(pair(i, i + n / 2, 1.8));
        }
    }
    Model::markov(Domains::new(vec![2; n]).unwrap(), factors).unwrap()
}

/// Mean Hellinger distance to `exact` over the first forest's variables,
/// read from that forest alone.
fn first_forest_error(slctf: &Slctf, exact: &BTreeMap<usize, Distribution>) -> slctf::Result<f64> {
    let ctf = &slctf.ctfs()[0];
    let vars = ctf.variables();
    let mut sum = 0.0;
    for &v in &vars {
        sum += hellinger(&ctf.clique_marginal(v)?, &exact[&v])?;
    }
    Ok(sum / vars.len() as f64)
}

/// First-forest error before and after the belief update.
pub fn run_example() -> slctf::Result<(f64, f64)> {
    let model = moebius(16);
    let cfg = RunConfig::with_bounds(4.0, 3.0);
    let (mut slctf, diag) = compile(&model, &cfg)?;
    print!("{}", diag.to_text());
    for (k, links) in slctf.links().iter().enumerate() {
        println!("boundary {k}: {} links", links.len());
    }

    let exact = oracle::ve_marginals(&model, DEFAULT_CAP)?;
        let before = first_forest_error(&slctf, &exact)?;

    let ucfg = UpdateConfig { verify: true, ..UpdateConfig::default() };
    for u in belief_update(&mut slctf, &ucfg)? {
        println!(
            "boundary {}: clique {} -> {} over {:?}, {} messages (tree has {} edges), link error {:.1e}",
            u.boundary,
            u.link.src,
            u.link.dst,
            u.link.link_vars,
            u.passes,
            u.tree_edges,
            u.link_discrepancy.unwrap()
        );
    }
    let after = first_forest_error(&slctf, &exact)?;
    println!("first forest, mean hellinger to exact: before update {before:.6}, after {after:.6}");
    Ok((before, after))
}

fn main() -> slctf::Result<()> {
    run_example().map(|_| ())
}
