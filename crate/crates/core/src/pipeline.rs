//! End-to-end driver: build, calibrate and approximate forests until every
//! factor is placed, link them, update beliefs backwards, read answers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::approx::{approximate_ctf, ApproxConfig};
use crate::build::{build_ctf, init_ctf0, order_factors, BuildConfig, FactorOrder, Offered};
use crate::error::{Error, Result};
use crate::factor::VarId;
use crate::inference::{
    belief_update, estimate_log_pr, find_links, infer_marginals, LinkUpdate, Slctf, UpdateConfig,
};
use crate::model::{Distribution, Model, ModelKind};
use crate::oracle::{self, OracleReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Mar,
    Pr,
    Both,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub task: Task,
    pub mcs_p: f64,
    /// Defaults to `mcs_p - 5`.
    pub mcs_im: Option<f64>,
    /// Defaults to topological for Bayesian networks, greedy otherwise.
    pub order: Option<FactorOrder>,
    pub link_threshold: f64,
    pub max_links: Option<usize>,
    /// Score the answers against the exact oracle.
    pub compare: bool,
    pub oracle_cap: f64,
    /// Keep each approximate forest in the result (tests, inspection).
    pub keep_approximations: bool,
    /// Check calibration and link agreement after every link update.
    pub verify_updates: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: Task::Both,
            mcs_p: 20.0,
            mcs_im: None,
            order: None,
            link_threshold: 1e-3,
            max_links: None,
            compare: false,
            oracle_cap: oracle::DEFAULT_CAP,
            keep_approximations: false,
            verify_updates: false,
        }
    }
}

impl RunConfig {
    pub fn with_bounds(mcs_p: f64, mcs_im: f64) -> Self {
        RunConfig {
            mcs_p,
            mcs_im: Some(mcs_im),
            ..RunConfig::default()
        }
    }

    pub fn mcs_im(&self) -> f64 {
        self.mcs_im.unwrap_or(self.mcs_p - 5.0)
    }

    fn check(&self) -> Result<()> {
        if !(self.mcs_p > 0.0) {
            return Err(Error::Config(format!("mcs_p must be positive, got {}", self.mcs_p)));
        }
        let im = self.mcs_im();
        if !(im > 0.0 && im < self.mcs_p) {
            return Err(Error::Config(format!(
                "mcs_im must lie strictly between 0 and mcs_p = {}, got {im}",
                self.mcs_p
            )));
        }
        if !(self.link_threshold >= 0.0) {
            return Err(Error::Config("link threshold must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Run statistics, printable as `key=value` lines.
#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub ctf_count: usize,
    pub max_clique_size: Vec<f64>,
    pub added: Vec<usize>,
    pub deferred: Vec<usize>,
    /// `(ctf index, bound actually used)` where the approximation bound
    /// had to be raised.
    pub mcs_im_relaxations: Vec<(usize, f64)>,
    /// Factors placed above `mcs_p` to guarantee progress.
    pub forced_placements: Vec<usize>,
    pub calibration_passes: Vec<u64>,
    pub links: Vec<usize>,
    pub selected_links: usize,
    pub update_passes: usize,
    pub evidence_horizon: Option<usize>,
}

impl Diagnostics {
    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "ctf_count={}", self.ctf_count);
        let sizes: Vec<String> = self.max_clique_size.iter().map(|x| format!("{x:.3}")).collect();
        let _ = writeln!(s, "max_clique_size={}", sizes.join(","));
        let _ = writeln!(s, "factors_added={}", list(&self.added));
        let _ = writeln!(s, "factors_deferred={}", list(&self.deferred));
        let relax: Vec<String> = self
            .mcs_im_relaxations
            .iter()
            .map(|(k, b)| format!("{k}:{b}"))
            .collect();
        let _ = writeln!(s, "mcs_im_relaxations={}", relax.join(","));
        let _ = writeln!(s, "forced_placements={}", list(&self.forced_placements));
        let passes: Vec<String> = self.calibration_passes.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "calibration_passes={}", passes.join(","));
        let _ = writeln!(s, "links={}", list(&self.links));
        let _ = writeln!(s, "selected_links={}", self.selected_links);
        let _ = writeln!(s, "update_passes={}", self.update_passes);
        let horizon = self.evidence_horizon.map_or("none".to_string(), |h| h.to_string());
        let _ = writeln!(s, "evidence_horizon={horizon}");
        s
    }
}

/// Builds the linked sequence of calibrated forests for `model`.
pub fn compile(model: &Model, cfg: &RunConfig) -> Result<(Slctf, Diagnostics)> {
    cfg.check()?;
    let order = cfg.order.unwrap_or(match model.kind() {
        ModelKind::Bayes => FactorOrder::Topological,
        ModelKind::Markov => FactorOrder::Greedy,
    });
    let reduced = model.reduced_factors()?;
    let mut log_offset = 0.0;
    let mut offered: Vec<Offered> = Vec::new();
    for i in order_factors(model, order)? {
        let f = &reduced[i];
        if f.scope().is_empty() {
            if f.is_all_zero() {
                return Err(Error::Inconsistent(format!("factor {i} rules out the evidence")));
            }
            log_offset += f.log10_sum();
        } else {
            offered.push((i, f.clone()));
        }
    }

    let mut diag = Diagnostics::default();
    let (mut seed, taken) = init_ctf0(model.domains(), &offered);
    let mut pending: Vec<Offered> = offered.iter().filter(|(i, _)| !taken.contains(i)).cloned().collect();
    let mut ctfs = Vec::new();
    let mut links = Vec::new();
    let mut approximations = Vec::new();
    let mut added_per_ctf: Vec<Vec<usize>> = Vec::new();
    let mut pending_map = None;
    let mut first_added = taken;
    loop {
        let bcfg = BuildConfig {
            mcs_p: cfg.mcs_p,
            force_progress: !ctfs.is_empty(),
        };
        let out = build_ctf(seed, &pending, &bcfg)?;
        let mut ctf = out.ctf;
        ctf.calibrate()?;
        diag.calibration_passes.push(ctf.message_passes());
        let mut added = std::mem::take(&mut first_added);
        added.extend(out.added.iter().copied());
        diag.added.push(added.len());
        diag.deferred.push(out.deferred.len());
        diag.max_clique_size.push(ctf.max_clique_size());
        diag.forced_placements.extend(out.forced.iter().copied());
        if let Some(map) = pending_map.take() {
            let prev = ctfs.last().unwrap();
            let l = find_links(prev, &map, &ctf)?;
            diag.links.push(l.len());
            links.push(l);
        }
        added_per_ctf.push(added);
        pending = pending
            .into_iter()
            .filter(|(i, _)| out.deferred.contains(i))
            .collect();
        if pending.is_empty() {
            ctfs.push(ctf);
            break;
        }
        let scopes: Vec<&[VarId]> = pending.iter().map(|(_, f)| f.scope()).collect();
        let a = approximate_ctf(&ctf, scopes, &ApproxConfig { mcs_im: cfg.mcs_im() })?;
        if a.mcs_im_used > cfg.mcs_im() {
            diag.mcs_im_relaxations.push((ctfs.len(), a.mcs_im_used));
        }
        log_offset += a.dropped_log_nc;
        if cfg.keep_approximations {
            approximations.push(a.ctf.clone());
        }
        seed = a.ctf.into_seed()?;
        pending_map = Some(a.map);
        ctfs.push(ctf);
    }
    diag.ctf_count = ctfs.len();

    let evidence_horizon = if model.kind() == ModelKind::Bayes && order == FactorOrder::Topological {
        let mut h = 0;
        for &e in model.evidence().keys() {
            let cpd = (0..model.factors().len()).find(|&i| model.cpd_child(i) == Some(e)).unwrap();
            let k = added_per_ctf
                .iter()
                .position(|a| a.contains(&cpd))
                .map_or(1, |k| k + 1);
            h = h.max(k);
        }
        Some(h)
    } else {
        None
    };
    diag.evidence_horizon = evidence_horizon;

    Ok((
        Slctf {
            domains: model.domains().clone(),
            ctfs,
            links,
            approximations,
            added: added_per_ctf,
            log_offset,
            evidence: model.evidence().clone(),
            evidence_horizon,
        },
        diag,
    ))
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub marginals: BTreeMap<VarId, Distribution>,
    pub log_pr: f64,
    pub report: Option<OracleReport>,
    pub diagnostics: Diagnostics,
    pub slctf: Slctf,
    pub updates: Vec<LinkUpdate>,
}

/// Compiles the model, runs the belief update and reads off the answers.
pub fn run_pipeline(model: &Model, cfg: &RunConfig) -> Result<RunOutput> {
    let (mut slctf, mut diag) = compile(model, cfg)?;
    let log_pr = estimate_log_pr(&slctf)?;
    let updates = if cfg.task == Task::Pr {
        Vec::new()
    } else {
        let ucfg = UpdateConfig {
            link_threshold: cfg.link_threshold,
            max_links: cfg.max_links,
            verify: cfg.verify_updates,
        };
        belief_update(&mut slctf, &ucfg)?
    };
    diag.selected_links = updates.len();
    diag.update_passes = updates.iter().map(|u| u.passes).sum();
    let marginals = if cfg.task == Task::Pr {
        BTreeMap::new()
    } else {
        infer_marginals(&slctf)?
    };
    let report = if cfg.compare {
        let exact = oracle::ve_marginals(model, cfg.oracle_cap)?;
        let exact_pr = oracle::ve_log_partition(model, cfg.oracle_cap)?;
        let approx = if marginals.is_empty() { &exact } else { &marginals };
        Some(oracle::score(model, &exact, exact_pr, approx, log_pr)?)
    } else {
        None
    };
    Ok(RunOutput {
        marginals,
        log_pr,
        report,
        diagnostics: diag,
        slctf,
        updates,
    })
}
