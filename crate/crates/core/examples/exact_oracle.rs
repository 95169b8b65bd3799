// Exact reference answers by variable elimination and by enumeration, and
// scoring an approximation against them.
//
//     cargo run --example exact_oracle

use slctf::oracle::{self, OracleReport, DEFAULT_CAP};
use slctf::{run_pipeline, Domains, Factor, Model, RunConfig};

/// A ring of `n` binary variables with attractive pairwise factors and
/// chords between opposite variables.
pub fn ring(n: usize) -> Model {
    let mut factors = vec![Factor::new(vec![0], vec![2], vec![1.0, 3.0]).unwrap()];
    let pair = |a, b| Factor::new(vec![a, b], vec![2, 2], vec![2.0, 1.0, 1.0, 2.0]).unwrap();
    for v in 0..n {
        factors.push(pair(v, (v + 1) % n));
    }
    for v in 0..n / 2 {
        factors.push(pair(v, v + n / 2));
    }
    Model::markov(Domains::new(vec![2; n]).unwrap(), factors).unwrap()
}

pub fn run_example() -> slctf::Result<OracleReport> {
    let model = ring(12);
    let ve = oracle::ve_marginals(&model, DEFAULT_CAP)?;
    let z = oracle::ve_log_partition(&model, DEFAULT_CAP)?;
    let (brute, z_brute) = oracle::enumerate(&model)?;
    println!("log10 Z: elimination {z:.12}, enumeration {z_brute:.12}");
    println!("P(x0 = 1): elimination {:.12}, enumeration {:.12}", ve[&0].probs()[1], brute[&0].probs()[1]);

    let out = run_pipeline(&model, &RunConfig::with_bounds(4.0, 3.0))?;
    let report = oracle::score(&model, &ve, z, &out.marginals, out.log_pr)?;
    println!(
        "bounds 4/3, {} forests: HD_avg {:.4}, HD_max {:.4}, |dlog10 Z| {:.4}",
        out.diagnostics.ctf_count, report.hd_avg, report.hd_max, report.delta_log10_pr
    );
    Ok(report)
}

fn main() -> slctf::Result<()> {
    run_example().map(|_| ())
}
