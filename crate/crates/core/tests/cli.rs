use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::{Command, Output};

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("slctf-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, text: &str) -> String {
        let p = self.0.join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn slctf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slctf")).args(args).output().unwrap()
}

const CHAIN: &str = "MARKOV\n2\n2 2\n2\n1 0\n2 0 1\n2\n1 1\n4\n1 2 3 4\n";

#[test]
fn prints_marginals_and_pr() {
    let dir = Scratch::new("ok");
    let model = dir.file("chain.uai", CHAIN);
    let out = slctf(&[&model]);
    assert_eq!(out.status.code(), Some(0));
    // P(0) = (3, 7)/10, P(1) = (4, 6)/10, Z = 10
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "MAR\n2 2 0.3 0.7 2 0.4 0.6\nPR\n1.000000\n"
    );
    let pr = slctf(&[&model, "--task", "pr"]);
    assert_eq!(String::from_utf8(pr.stdout).unwrap(), "PR\n1.000000\n");
}

#[test]
fn evidence_compare_and_diagnostics() {
    let dir = Scratch::new("ev");
    let model = dir.file("chain.uai", CHAIN);
    let ev = dir.file("chain.evid", "1 1 0\n");
    let diag = dir.0.join("diag.txt");
    let out = slctf(&[&model, "--evidence", &ev, "--compare", "--diagnostics", diag.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    // with variable 1 at state 0: weights 1 and 3 for variable 0
    assert!(text.starts_with("MAR\n2 2 0.25 0.75 2 1 0\nPR\n0.602060"), "{text}");
    assert!(String::from_utf8(out.stderr).unwrap().contains("hd_max=0.000000"));
    let d = std::fs::read_to_string(&diag).unwrap();
    assert!(d.contains("ctf_count=1\n") && d.contains("hd_avg=0\n"), "{d}");
}

#[test]
fn malformed_input_exits_2() {
    let dir = Scratch::new("parse");
    let short = dir.file("short.uai", "MARKOV\n1\n2\n1\n1 0\n3\n0.3 0.7 0.1\n");
    let out = slctf(&[&short]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 6"));
    let header = dir.file("header.uai", "MRF\n1\n2\n1\n1 0\n2\n0.3 0.7\n");
    assert_eq!(slctf(&[&header]).status.code(), Some(2));
    let model = dir.file("chain.uai", CHAIN);
    let range = dir.file("range.evid", "1 5 0\n");
    assert_eq!(slctf(&[&model, "--evidence", &range]).status.code(), Some(2));
    let dup = dir.file("dup.evid", "2 1 0 1 1\n");
    assert_eq!(slctf(&[&model, "--evidence", &dup]).status.code(), Some(2));
}

#[test]
fn bad_bounds_exit_3() {
    let dir = Scratch::new("cfg");
    let model = dir.file("chain.uai", CHAIN);
    assert_eq!(slctf(&[&model, "--mcs-p", "4", "--mcs-im", "4"]).status.code(), Some(3));
    // a factor over two binary variables does not fit a bound of one
    assert_eq!(slctf(&[&model, "--mcs-p", "1", "--mcs-im", "0.5"]).status.code(), Some(3));
}

#[test]
fn impossible_evidence_exits_4() {
    let dir = Scratch::new("inc");
    let model = dir.file(
        "det.uai",
        "BAYES\n2\n2 2\n2\n1 0\n2 0 1\n2\n1 0\n4\n1 0 0 1\n",
    );
    let ev = dir.file("det.evid", "1 1 1\n");
    assert_eq!(slctf(&[&model, "--evidence", &ev]).status.code(), Some(4));
}

#[test]
fn oracle_beyond_its_cap_exits_5() {
    // complete pairwise network on 27 binary variables: every elimination
    // order has a 27-variable clique
    let n = 27;
    let mut text = format!("MARKOV\n{n}\n{}\n{}\n", vec!["2"; n].join(" "), n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let _ = writeln!(text, "2 {a} {b}");
        }
    }
    for _ in 0..n * (n - 1) / 2 {
        text.push_str("4\n1 1.1 1.1 1\n");
    }
    let dir = Scratch::new("cap");
    let model = dir.file("k27.uai", &text);
    let out = slctf(&[&model, "--mcs-p", "6", "--mcs-im", "3", "--compare"]);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(slctf(&[&model, "--mcs-p", "6", "--mcs-im", "3"]).status.code(), Some(0));
}
