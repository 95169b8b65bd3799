// The ten-variable example: ten factors over binary variables d f h i j
// k l m n o, built with clique-size bounds 4 (forests) and 3 (carried over).
//
//     cargo run --example running_example

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slctf::build::FactorOrder;
use slctf::{run_pipeline, Domains, Factor, Model, RunConfig, RunOutput, VarId};

const NAMES: &str = "dfhijklmno";
const SCOPES: [&str; 10] = ["dmo", "jh", "il", "fmn", "hi", "dhk", "fdh", "jm", "klo", "fo"];

fn label(vars: &[VarId]) -> String {
    vars.iter().map(|&v| NAMES.as_bytes()[v] as char).collect()
}

pub fn model(seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = SCOPES
        .iter()
        .map(|s| {
            let scope: Vec<VarId> = s.chars().map(|c| NAMES.find(c).unwrap()).collect();
            let values = (0..1 << scope.len()).map(|_| rng.gen_range(0.01..1.0)).collect();
            Factor::new(scope.clone(), vec![2; scope.len()], values).unwrap()
        })
        .collect();
    Model::markov(Domains::new(vec![2; NAMES.len()]).unwrap(), factors).unwrap()
}

pub fn run_example() -> slctf::Result<RunOutput> {
    let model = model(7);
    let mut cfg = RunConfig::with_bounds(4.0, 3.0);
    cfg.order = Some(FactorOrder::Given);
    cfg.keep_approximations = true;
    cfg.compare = true;
    let out = run_pipeline(&model, &cfg)?;

    for (k, ctf) in out.slctf.ctfs().iter().enumerate() {
        let cliques: Vec<String> = ctf.cliques().map(|(_, c)| label(c.vars())).collect();
        let added: Vec<&str> = out.slctf.added()[k].iter().map(|&i| SCOPES[i]).collect();
        println!("forest {}: cliques {cliques:?}, factors {added:?}", k + 1);
        if let Some(a) = out.slctf.approximations().get(k) {
            let cliques: Vec<String> = a.cliques().map(|(_, c)| label(c.vars())).collect();
            println!("  carried forward: {cliques:?}");
        }
    }
    for u in &out.updates {
        println!("updated link on {:?}", label(&u.link.link_vars));
    }
    let r = out.report.as_ref().unwrap();
    for (v, d) in &out.marginals {
        println!("P({}) = {:.4}  (hellinger to exact {:.4})", label(&[*v]), d.probs()[1], r.per_var[v]);
    }
    println!("log10 Z = {:.6}, exact error {:.2e}", out.log_pr, r.delta_log10_pr);
    Ok(out)
}

fn main() -> slctf::Result<()> {
    run_example().map(|_| ())
}
