// Building and calibrating a clique tree forest by hand with the
// incremental builder, then reading beliefs from it.
//
//     cargo run --example clique_forest

use slctf::build::{insert_factor, Placement};
use slctf::forest::CliqueForest;
use slctf::{Domains, Factor};

fn f(scope: &[usize], values: &[f64]) -> Factor {
    Factor::new(scope.to_vec(), vec![2; scope.len()], values.to_vec()).unwrap()
}

pub fn run_example() -> slctf::Result<CliqueForest> {
    let mut ctf = CliqueForest::new(Domains::new(vec![2; 6]).unwrap());
    let factors = [
        f(&[0, 1], &[4.0, 1.0, 1.0, 4.0]),
        f(&[1, 2], &[1.0, 2.0, 3.0, 1.0]),
        f(&[2, 0], &[2.0, 1.0, 1.0, 2.0]),
        f(&[3, 4], &[1.0, 1.0, 1.0, 5.0]),
        f(&[2, 3, 5], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]),
        f(&[0, 4, 5], &[1.0; 8]),
    ];
    for (i, factor) in factors.into_iter().enumerate() {
        let scope = factor.scope().to_vec();
        match insert_factor(&mut ctf, factor, Some(i), 3.0)? {
            Placement::Placed(c) => println!("factor {scope:?} placed in clique {c}"),
            Placement::Deferred => println!("factor {scope:?} would exceed the bound"),
        }
    }
    ctf.validate()?;
    ctf.calibrate()?;
    for (id, c) in ctf.cliques() {
        let nbrs: Vec<usize> = ctf.neighbors(id).collect();
        println!("clique {id}: vars {:?}, neighbours {nbrs:?}, factors {:?}", c.vars(), c.factor_ids());
    }
    let check = ctf.verify_calibration(1e-12)?;
    println!(
        "calibrated: {} (sepset error {:.1e}), {} messages over {} edges",
        check.pass,
        check.max_sepset_discrepancy,
        ctf.message_passes(),
        ctf.num_edges()
    );
    for v in ctf.variables() {
        println!("P(x{v}) = {:?}", ctf.clique_marginal(v)?.probs());
    }
    println!("log10 Z = {:.6}", ctf.log_nc()?);
    Ok(ctf)
}

fn main() -> slctf::Result<()> {
    run_example().map(|_| ())
}
