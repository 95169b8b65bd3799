// Accuracy against clique-size bound on a 10x10 binary grid with Ising
// potentials.
//
//     cargo run --release --example grid_markov

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slctf::oracle::{self, DEFAULT_CAP};
use slctf::{run_pipeline, Domains, Factor, Model, RunConfig};

pub fn grid(side: usize, seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |r: usize, c: usize| r * side + c;
    let mut factors = Vec::new();
    for v in 0..side * side {
        let h: f64 = rng.gen_range(-1.0..1.0);
        factors.push(Factor::new(vec![v], vec![2], vec![(-h).exp(), h.exp()]).unwrap());
    }
    for r in 0..side {
        for c in 0..side {
            let mut edges = Vec::new();
            if c + 1 < side {
                edges.push(id(r, c + 1));
            }
            if r + 1 < side {
                edges.push(id(r + 1, c));
            }
            for b in edges {
                let w: f64 = rng.gen_range(-1.0..1.0);
                let t = vec![w.exp(), (-w).exp(), (-w).exp(), w.exp()];
                factors.push(Factor::new(vec![id(r, c), b], vec![2, 2], t).unwrap());
            }
        }
    }
    Model::markov(Domains::new(vec![2; side * side]).unwrap(), factors).unwrap()
}

/// `(mcs_p, forests, HD_avg, HD_max, |log10 PR error|)` per bound.
pub fn run_example() -> slctf::Result<Vec<(f64, usize, f64, f64, f64)>> {
    let model = grid(10, 3);
    let exact = oracle::ve_marginals(&model, DEFAULT_CAP)?;
    let z = oracle::ve_log_partition(&model, DEFAULT_CAP)?;
    let mut rows = Vec::new();
    println!("mcs_p  forests  HD_avg   HD_max   |dlog10 Z|");
    for mcs_p in [6.0, 8.0, 10.0, 12.0] {
        let out = run_pipeline(&model, &RunConfig::with_bounds(mcs_p, mcs_p - 5.0))?;
        let r = oracle::score(&model, &exact, z, &out.marginals, out.log_pr)?;
        let n = out.diagnostics.ctf_count;
        println!("{mcs_p:5}  {n:7}  {:.5}  {:.5}  {:.5}", r.hd_avg, r.hd_max, r.delta_log10_pr);
        rows.push((mcs_p, n, r.hd_avg, r.hd_max, r.delta_log10_pr));
    }
    Ok(rows)
}

fn main() -> slctf::Result<()> {
    run_example().map(|_| ())
}
