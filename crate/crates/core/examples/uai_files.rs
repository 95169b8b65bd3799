// Reading a model and evidence in UAI format and writing MAR and PR
// results.
//
//     cargo run --example uai_files

use slctf::uai::write_uai;
use slctf::{parse_evidence, parse_uai, run_pipeline, write_mar, write_pr, RunConfig};

const MODEL: &str = "\
BAYES
3
2 2 3
3
1 0
2 0 1
2 1 2

2
 0.6 0.4

4
 0.7 0.3
 0.2 0.8

6
 0.5 0.3 0.2
 0.1 0.1 0.8
";

const EVIDENCE: &str = "1 2 2";

pub fn run_example() -> slctf::Result<(String, String)> {
    let model = parse_uai(MODEL)?;
    let evidence = parse_evidence(EVIDENCE, model.domains())?;
    let model = model.with_evidence(evidence)?;
    let out = run_pipeline(&model, &RunConfig::default())?;
    let mar = write_mar(&out.marginals, model.domains());
    let pr = write_pr(out.log_pr);
    println!("{mar}\n{pr}");
    println!("--- model as written back ---\n{}", write_uai(&model));
    Ok((mar, pr))
}

fn main() -> slctf::Result<()> {
    run_example().map(|_| ())
}
