use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use slctf::build::FactorOrder;
use slctf::{parse_evidence, parse_uai, run_pipeline, write_mar, write_pr, Error, RunConfig, Task};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Mar,
    Pr,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrderArg {
    Topological,
    Greedy,
    Given,
}

/// Approximate marginals and partition function of a UAI model.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// Model file in UAI format (MARKOV or BAYES).
    model: PathBuf,
    /// Evidence file: a count followed by variable/state pairs.
    #[arg(long)]
    evidence: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    task: TaskArg,
    /// Clique-size bound for built forests (log2 of the state count).
    #[arg(long, default_value_t = 20.0)]
    mcs_p: f64,
    /// Clique-size bound after approximation [default: mcs-p - 5].
    #[arg(long)]
    mcs_im: Option<f64>,
    /// Factor order [default: topological for BAYES, greedy for MARKOV].
    #[arg(long, value_enum)]
    order: Option<OrderArg>,
    /// Hellinger change below which a link variable needs no update.
    #[arg(long, default_value_t = 1e-3)]
    link_threshold: f64,
    /// Also compute exact answers and report the errors.
    #[arg(long)]
    compare: bool,
    /// Write run statistics as key=value lines to this file.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

fn run(args: Args) -> Result<(), Error> {
    let text = fs::read_to_string(&args.model)?;
    let mut model = parse_uai(&text)?;
    if let Some(path) = &args.evidence {
        let ev = parse_evidence(&fs::read_to_string(path)?, model.domains())?;
        model = model.with_evidence(ev)?;
    }
    let cfg = RunConfig {
        task: match args.task {
            TaskArg::Mar => Task::Mar,
            TaskArg::Pr => Task::Pr,
            TaskArg::Both => Task::Both,
        },
        mcs_p: args.mcs_p,
        mcs_im: args.mcs_im,
        order: args.order.map(|o| match o {
            OrderArg::Topological => FactorOrder::Topological,
            OrderArg::Greedy => FactorOrder::Greedy,
            OrderArg::Given => FactorOrder::Given,
        }),
        link_threshold: args.link_threshold,
        compare: args.compare,
        ..RunConfig::default()
    };
    let out = run_pipeline(&model, &cfg)?;
    if cfg.task != Task::Pr {
        println!("{}", write_mar(&out.marginals, model.domains()));
    }
    if cfg.task != Task::Mar {
        println!("{}", write_pr(out.log_pr));
    }
    if let Some(r) = &out.report {
        eprintln!(
            "hd_avg={:.6} hd_max={:.6} delta_log10_pr={:.6}",
            r.hd_avg, r.hd_max, r.delta_log10_pr
        );
    }
    if let Some(path) = &args.diagnostics {
        let mut text = out.diagnostics.to_text();
        if let Some(r) = &out.report {
            text.push_str(&format!(
                "hd_avg={}\nhd_max={}\ndelta_log10_pr={}\n",
                r.hd_avg, r.hd_max, r.delta_log10_pr
            ));
        }
        fs::write(path, text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slctf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
