//! UAI model, evidence and result files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::factor::{Factor, VarId};
use crate::model::{Distribution, Domains, Evidence, Model, ModelKind};

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Tokens { items, pos: 0 }
    }

    fn line(&self) -> usize {
        match self.items.get(self.pos) {
            Some(&(l, _)) => l,
            None => self.items.last().map_or(1, |&(l, _)| l),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let line = self.line();
        let t = self
            .items
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::parse(line, format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let (line, t) = self.next(what)?;
        t.parse()
            .map_err(|_| Error::parse(line, format!("expected {what}, found {t:?}")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let (line, t) = self.next(what)?;
        t.parse()
            .map_err(|_| Error::parse(line, format!("expected {what}, found {t:?}")))
    }

    fn done(&self) -> bool {
        self.pos >= self.items.len()
    }
}

/// Parses a `MARKOV` or `BAYES` model. For `BAYES`, the last variable of
/// each scope line is the CPD's child.
pub fn parse_uai(text: &str) -> Result<Model> {
    let mut t = Tokens::new(text);
    let (line, head) = t.next("MARKOV or BAYES")?;
    let kind = match head {
        "MARKOV" => ModelKind::Markov,
        "BAYES" => ModelKind::Bayes,
        other => return Err(Error::parse(line, format!("unknown network type {other:?}"))),
    };
    let n = t.usize("variable count")?;
    let mut cards = Vec::with_capacity(n);
    for _ in 0..n {
        let line = t.line();
        let c = t.usize("cardinality")?;
        if c == 0 {
            return Err(Error::parse(line, "cardinality must be positive"));
        }
        cards.push(c);
    }
    let domains = Domains::new(cards).map_err(|e| Error::parse(line, e.to_string()))?;
    let m = t.usize("factor count")?;
    let mut scopes = Vec::with_capacity(m);
    for _ in 0..m {
        let line = t.line();
        let k = t.usize("scope size")?;
        let mut scope = Vec::with_capacity(k);
        for _ in 0..k {
            let line = t.line();
            let v = t.usize("variable index")?;
            if v >= n {
                return Err(Error::parse(line, format!("variable {v} out of range (n = {n})")));
            }
            scope.push(v);
        }
        if kind == ModelKind::Bayes && scope.is_empty() {
            return Err(Error::parse(line, "a CPD needs at least its child variable"));
        }
        scopes.push(scope);
    }
    let mut factors = Vec::with_capacity(m);
    for scope in &scopes {
        let line = t.line();
        let count = t.usize("table size")?;
        let cards = domains.cards_of(scope);
        let want: usize = cards.iter().product();
        if count != want {
            return Err(Error::parse(
                line,
                format!("table has {count} entries, scope needs {want}"),
            ));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(t.f64("table entry")?);
        }
        let f = Factor::new(scope.clone(), cards, values).map_err(|e| Error::parse(line, e.to_string()))?;
        factors.push(f);
    }
    if !t.done() {
        return Err(Error::parse(t.line(), "trailing tokens after the last table"));
    }
    let model = match kind {
        ModelKind::Markov => Model::markov(domains, factors),
        ModelKind::Bayes => {
            let children = scopes.iter().map(|s| *s.last().unwrap()).collect();
            Model::bayes(domains, factors, children)
        }
    };
    model.map_err(|e| match e {
        Error::Model(msg) => Error::parse(1, msg),
        other => other,
    })
}

/// Parses `count var state var state ...`, checking against `domains`.
pub fn parse_evidence(text: &str, domains: &Domains) -> Result<Evidence> {
    let mut t = Tokens::new(text);
    if t.done() {
        return Ok(Evidence::new());
    }
    let count = t.usize("evidence count")?;
    let mut ev = Evidence::new();
    for _ in 0..count {
        let line = t.line();
        let v = t.usize("evidence variable")?;
        let s = t.usize("evidence state")?;
        if v >= domains.len() {
            return Err(Error::parse(line, format!("evidence on unknown variable {v}")));
        }
        if s >= domains.card(v) {
            return Err(Error::parse(line, format!("state {s} out of range for variable {v}")));
        }
        if ev.insert(v, s).is_some() {
            return Err(Error::parse(line, format!("variable {v} observed twice")));
        }
    }
    if !t.done() {
        return Err(Error::parse(t.line(), "trailing tokens after evidence"));
    }
    Ok(ev)
}

/// Serializes a model back to UAI text (tables at full precision).
pub fn write_uai(model: &Model) -> String {
    let mut s = String::new();
    s.push_str(match model.kind() {
        ModelKind::Markov => "MARKOV\n",
        ModelKind::Bayes => "BAYES\n",
    });
    let cards: Vec<String> = model.domains().cards().iter().map(usize::to_string).collect();
    let _ = writeln!(s, "{}\n{}\n{}", model.num_vars(), cards.join(" "), model.factors().len());
    for (i, f) in model.factors().iter().enumerate() {
        // keep the child last for CPDs
        let scope: Vec<VarId> = match model.cpd_child(i) {
            Some(c) => f.scope().iter().copied().filter(|&v| v != c).chain([c]).collect(),
            None => f.scope().to_vec(),
        };
        let vs: Vec<String> = scope.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{} {}", scope.len(), vs.join(" "));
    }
    for (i, f) in model.factors().iter().enumerate() {
        let f = match model.cpd_child(i) {
            Some(c) => {
                let scope: Vec<VarId> = f.scope().iter().copied().filter(|&v| v != c).chain([c]).collect();
                f.permuted(&scope).expect("same variables")
            }
            None => f.clone(),
        };
        let vals: Vec<String> = f.values().iter().map(|x| format!("{x:e}")).collect();
        let _ = writeln!(s, "\n{}\n{}", vals.len(), vals.join(" "));
    }
    s
}

/// `%g`-style formatting with `sig` significant digits.
fn fmt_g(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mant), sign, exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    }
}

/// `MAR` result: variable count, then each variable's cardinality and
/// probabilities, in id order.
pub fn write_mar(marginals: &BTreeMap<VarId, Distribution>, domains: &Domains) -> String {
    let mut s = format!("MAR\n{}", domains.len());
    for v in 0..domains.len() {
        let _ = write!(s, " {}", domains.card(v));
        let uniform;
        let d = match marginals.get(&v) {
            Some(d) => d,
            None => {
                uniform = Distribution::uniform(domains.card(v));
                &uniform
            }
        };
        for &p in d.probs() {
            let _ = write!(s, " {}", fmt_g(p, 6));
        }
    }
    s
}

/// `PR` result with the log10 value to six decimals.
pub fn write_pr(log_pr: f64) -> String {
    let mut v = format!("{log_pr:.6}");
    if v == "-0.000000" {
        v = "0.000000".into();
    }
    format!("PR\n{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unary_markov() {
        let m = parse_uai("MARKOV\n1\n2\n1\n1 0\n2\n0.3 0.7\n").unwrap();
        assert_eq!(m.factors().len(), 1);
        assert_eq!(m.factors()[0].values(), vec![0.3, 0.7]);
    }

    #[test]
    fn bayes_child_is_last() {
        let m = parse_uai("BAYES\n2\n2 2\n2\n1 0\n2 0 1\n2\n0.4 0.6\n4\n0.9 0.1 0.2 0.8\n").unwrap();
        assert_eq!(m.cpd_child(1), Some(1));
        assert_eq!(m.parents(1), vec![0]);
    }

    #[test]
    fn malformed_models() {
        let bad_len = parse_uai("MARKOV\n1\n2\n1\n1 0\n3\n0.3 0.7 0.1\n");
        assert!(matches!(bad_len, Err(Error::Parse { line: 6, .. })));
        assert!(matches!(parse_uai("MRF\n1\n2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_uai("MARKOV\n1\n2\n1\n1 4\n"), Err(Error::Parse { line: 5, .. })));
        assert!(matches!(parse_uai("MARKOV\n1\n2\n1\n1 0\n2\n0.3"), Err(Error::Parse { .. })));
        assert!(matches!(parse_uai("MARKOV\n1\n2\n1\n1 0\n2\n0.3 x\n"), Err(Error::Parse { line: 7, .. })));
    }

    #[test]
    fn evidence() {
        let d = Domains::new(vec![2; 4]).unwrap();
        assert_eq!(parse_evidence("1 3 0", &d).unwrap(), [(3, 0)].into_iter().collect());
        assert!(parse_evidence("0", &d).unwrap().is_empty());
        assert!(matches!(parse_evidence("2 1 0 1 1", &d), Err(Error::Parse { .. })));
        assert!(matches!(parse_evidence("1 9 0", &d), Err(Error::Parse { .. })));
        assert!(matches!(parse_evidence("1 0 2", &d), Err(Error::Parse { .. })));
    }

    #[test]
    fn result_formats() {
        let d = Domains::new(vec![2]).unwrap();
        let m: BTreeMap<VarId, Distribution> =
            [(0, Distribution::from_weights(vec![0.25, 0.75]).unwrap())].into_iter().collect();
        assert_eq!(write_mar(&m, &d), "MAR\n1 2 0.25 0.75");
        assert_eq!(write_mar(&BTreeMap::new(), &Domains::new(vec![]).unwrap()), "MAR\n0");
        assert_eq!(write_pr(0.0), "PR\n0.000000");
        assert_eq!(write_pr(-0.0), "PR\n0.000000");
        assert_eq!(write_pr(4f64.log10()), "PR\n0.602060");
        assert_eq!(write_pr(-3.25), "PR\n-3.250000");
    }

    #[test]
    fn g_format() {
        assert_eq!(fmt_g(1.0 / 3.0, 6), "0.333333");
        assert_eq!(fmt_g(1.0, 6), "1");
        assert_eq!(fmt_g(0.99999999, 6), "1");
        assert_eq!(fmt_g(1.5e-7, 6), "1.5e-07");
        assert_eq!(fmt_g(0.0001234567, 6), "0.000123457");
    }

    #[test]
    fn round_trip() {
        let text = "BAYES\n3\n2 3 2\n3\n1 0\n2 0 1\n3 1 0 2\n2\n0.4 0.6\n6\n0.2 0.3 0.5 0.1 0.1 0.8\n12\n\
                    0.5 0.5 0.1 0.9 0.3 0.7 0.6 0.4 0.2 0.8 1 0\n";
        let m = parse_uai(text).unwrap();
        let again = parse_uai(&write_uai(&m)).unwrap();
        for (a, b) in m.factors().iter().zip(again.factors()) {
            assert_eq!(a.scope(), b.scope());
            assert!(a.max_relative_diff(b).unwrap() <= 1e-12);
        }
        assert_eq!(again.cpd_child(2), Some(2));
    }
}
