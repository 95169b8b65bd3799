// Posterior marginals and probability of evidence in a small Bayesian
// network: cloudy -> sprinkler, rain; sprinkler, rain -> wet grass;
// rain -> slippery road.
//
//     cargo run --example bayes_network

use std::collections::BTreeMap;

use slctf::{run_pipeline, Domains, Factor, Model, RunConfig, RunOutput};

const CLOUDY: usize = 0;
const SPRINKLER: usize = 1;
const RAIN: usize = 2;
const WET: usize = 3;
const SLIPPERY: usize = 4;

fn cpd(scope: &[usize], values: &[f64]) -> Factor {
    Factor::new(scope.to_vec(), vec![2; scope.len()], values.to_vec()).unwrap()
}

pub fn network() -> Model {
    let factors = vec![
        cpd(&[CLOUDY], &[0.5, 0.5]),
        cpd(&[CLOUDY, SPRINKLER], &[0.5, 0.5, 0.9, 0.1]),
        cpd(&[CLOUDY, RAIN], &[0.8, 0.2, 0.2, 0.8]),
        cpd(&[SPRINKLER, RAIN, WET], &[1.0, 0.0, 0.1, 0.9, 0.1, 0.9, 0.01, 0.99]),
        cpd(&[RAIN, SLIPPERY], &[1.0, 0.0, 0.3, 0.7]),
    ];
    // the child of each conditional table is its last scope variable
    let children = vec![CLOUDY, SPRINKLER, RAIN, WET, SLIPPERY];
    Model::bayes(Domains::new(vec![2; 5]).unwrap(), factors, children).unwrap()
}

pub fn run_example() -> slctf::Result<(RunOutput, RunOutput)> {
    let prior = run_pipeline(&network(), &RunConfig::default())?;
    println!("no evidence: log10 P = {:.6}, P(rain) = {:.4}", prior.log_pr, prior.marginals[&RAIN].probs()[1]);

    let evidence: BTreeMap<usize, usize> = [(WET, 1)].into();
    let model = network().with_evidence(evidence)?;
    let mut cfg = RunConfig::default();
    cfg.compare = true;
    let post = run_pipeline(&model, &cfg)?;
    println!(
        "grass is wet: P(evidence) = {:.4}, P(rain) = {:.4}, P(sprinkler) = {:.4}",
        10f64.powf(post.log_pr),
        post.marginals[&RAIN].probs()[1],
        post.marginals[&SPRINKLER].probs()[1],
    );
    println!("largest error against exact inference: {:.2e}", post.report.as_ref().unwrap().hd_max);
    Ok((prior, post))
}

fn main() -> slctf::Result<()> {
    run_example().map(|_| ())
}
