//! Executes the operations of a config and renders their tables.

use std::fmt::Write as _;

use num_bigint::BigUint;

use rankone_core::bounds::{balancing_profile, brute_force_words, select_tau, word_count_bound, TauRule};
use rankone_core::entropy::{
    empirical_sequence_entropy, seq_entropy_upper_profile, Enumeration, EntropyOptions, ProfileStage,
};
use rankone_core::random::generic::{genericness_search, SearchConfig, SearchMode};
use rankone_core::random::hoeffding::hoeffding_mc;
use rankone_core::random::markov::{block_word, chain_limit, conditional_limit_mc, settling_lag, stationary_closed_form};
use rankone_core::random::{flexibility_bounds, MarkovModel, WindowProcess};
use rankone_core::rng::RNG_ALGORITHM;
use rankone_core::{CodingSpec, Error, SamplingSequence, Tower};

use crate::config::{ExperimentConfig, MarkovLimit, Operation, Resolved};
use crate::error::CliError;

/// One CSV table.
pub struct Table {
    pub name: String,
    pub header: &'static str,
    pub rows: Vec<String>,
}

impl Table {
    fn new(name: impl Into<String>, header: &'static str) -> Self {
        Table { name: name.into(), header, rows: Vec::new() }
    }

    pub fn render(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

/// Everything an experiment produces. `failure` is set when an operation
/// stopped the run after its partial results were recorded.
pub struct Report {
    pub tables: Vec<Table>,
    pub summary: String,
    pub failure: Option<CliError>,
}

pub fn fx(x: f64) -> String {
    // `+ 0.0` folds -0 into 0 so exact zeros never print a sign.
    format!("{:.12}", x + 0.0)
}

fn fe(x: f64) -> String {
    format!("{:.12e}", x + 0.0)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    tower: Option<Tower>,
    resolved: &'a Resolved,
    opts: EntropyOptions,
    workers: usize,
}

impl Ctx<'_> {
    fn tower(&self) -> &Tower {
        self.tower.as_ref().expect("validated")
    }

    fn sequence(&self) -> &SamplingSequence {
        self.cfg.sequence.as_ref().expect("validated")
    }

    fn terms(&self, count: usize) -> Result<Vec<u64>, CliError> {
        self.sequence().first(count).map_err(|e| CliError::field("sequence", e))
    }
}

pub fn execute(cfg: &ExperimentConfig, workers: usize) -> Result<Report, CliError> {
    let resolved = cfg.validate()?;
    let tower = match &resolved.stacking {
        Some(sd) => Some(Tower::new(sd.clone()).map_err(|e| CliError::field("stacking", e))?),
        None => None,
    };
    let ctx = Ctx {
        cfg,
        tower,
        resolved: &resolved,
        opts: EntropyOptions { workers: workers.max(1), word_cap: cfg.caps.words },
        workers: workers.max(1),
    };
    let mut report = Report { tables: Vec::new(), summary: String::new(), failure: None };
    let mut seen: Vec<&'static str> = Vec::new();
    for op in &cfg.operations {
        let name = op.name();
        let k = seen.iter().filter(|&&s| s == name).count();
        seen.push(name);
        let suffix = if k == 0 { String::new() } else { format!("-{}", k + 1) };
        let _ = writeln!(report.summary, "[{name}{suffix}]");
        match run_op(&ctx, op, &suffix, &mut report) {
            Ok(()) => {}
            Err(e) => {
                let _ = writeln!(report.summary, "error = {e}");
                report.failure = Some(e);
                break;
            }
        }
    }
    Ok(report)
}

fn run_op(ctx: &Ctx<'_>, op: &Operation, suffix: &str, report: &mut Report) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let out = &mut report.summary;
    match op {
        Operation::Entropy { stage, reference, mode, n_terms, samples } => {
            let tower = ctx.tower();
            let n = stage.unwrap_or(tower.num_towers());
            let spec = CodingSpec { reference: *reference, mode: *mode };
            let terms = ctx.terms(n_terms.iter().copied().max().unwrap_or(0))?;
            let enumeration = match samples {
                Some(count) => Enumeration::Sampled { count: *count, seed: cfg.seed },
                None => Enumeration::Exact,
            };
            let mut t = Table::new(format!("entropy{suffix}"), "N,stage,reference,mode,H_nats,H_bits,H_per_N,distinct_words,coverage,seed");
            for &nn in n_terms {
                if nn == 0 {
                    return Err(CliError::Validation("operations.entropy.n_terms: N must be at least 1".into()));
                }
                let (per_n, hist) = empirical_sequence_entropy(tower, spec, n, &terms[..nn], enumeration, ctx.opts)?;
                let h = hist.entropy();
                t.rows.push(format!(
                    "{nn},{n},{reference},{mode},{},{},{},{},{},{}",
                    fx(h),
                    fx(h / std::f64::consts::LN_2),
                    fx(per_n),
                    hist.distinct(),
                    fx(hist.meta.coverage),
                    cfg.seed
                ));
                let _ = writeln!(out, "N = {nn}: |K| = {}, H/N = {}", hist.meta.valid_levels, fx(per_n));
            }
            let _ = writeln!(out, "enumeration = {}", match enumeration {
                Enumeration::Exact => "exact".to_string(),
                Enumeration::Sampled { count, seed } => format!("sampled(count = {count}, seed = {seed})"),
            });
            report.tables.push(t);
        }
        Operation::Profile { n_terms, c, mode } => {
            let tower = ctx.tower();
            let max = n_terms.iter().copied().max().unwrap_or(0);
            let terms = ctx.terms(max)?;
            let heights = tower.heights().to_vec();
            let tau = |nn: usize| -> rankone_core::Result<usize> {
                let c_n = c.at(nn as u64)?;
                select_tau(&heights, terms[nn - 1], c_n, nn as u64, TauRule::Strict)
            };
            let rows = seq_entropy_upper_profile(tower, &terms, n_terms, tau, ProfileStage::Tau, *mode, Enumeration::Exact, ctx.opts)?;
            let mut t = Table::new(format!("profile{suffix}"), "N,t_N,tau,stage,reference,H_nats,H_per_N,distinct_words,coverage");
            for r in &rows {
                t.rows.push(format!(
                    "{},{},{},{},{},{},{},{},{}",
                    r.n_terms,
                    terms[r.n_terms - 1],
                    r.reference,
                    r.stage,
                    r.reference,
                    fx(r.h_nats),
                    fx(r.h_per_n),
                    r.distinct_words,
                    fx(r.coverage)
                ));
            }
            if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
                let _ = writeln!(out, "H/N at N = {}: {}", first.n_terms, fx(first.h_per_n));
                let _ = writeln!(out, "H/N at N = {}: {}", last.n_terms, fx(last.h_per_n));
            }
            report.tables.push(t);
        }
        Operation::Sequence { count, kvalue } => {
            let seq = ctx.sequence();
            let mut t = Table::new(format!("sequence{suffix}"), "index,value,gap");
            // The first term has no predecessor, so its gap cell stays empty.
            for (j, (i, v, g)) in seq.gaps(*count).map_err(|e| CliError::field("sequence", e))?.into_iter().enumerate() {
                let g = if j == 0 { String::new() } else { g.to_string() };
                t.rows.push(format!("{i},{v},{g}"));
            }
            let _ = writeln!(out, "start = {}", seq.start());
            if *count >= 2 {
                let _ = writeln!(out, "max_gap = {}", seq.max_gap(*count as u64)?);
                let d = seq.dilation_diagnostic(*count as u64)?;
                let _ = writeln!(out, "dilating_on_horizon (finite-horizon heuristic) = {}", d.dilating_on_horizon);
                let _ = writeln!(out, "decreasing_gaps = {}", d.decreasing_gaps.len());
            }
            if let Some(kv) = kvalue {
                let k = seq.k_estimate(kv.r, kv.n)?;
                let _ = writeln!(out, "K(r = {}, n = {}) = {} = {}", kv.r, kv.n, k, fx(k.to_f64()));
            }
            report.tables.push(t);
        }
        Operation::Markov { periods, limit } => {
            let mut t = Table::new(format!("markov{suffix}"), "H,state,power,exact,closed_form");
            for &p in periods {
                let model = MarkovModel::new(p).map_err(|e| CliError::field("operations.markov.periods", e))?;
                let rep = model.stationary_distribution()?;
                let closed = stationary_closed_form(p);
                for (i, (pw, ex)) in rep.power.iter().zip(&rep.exact).enumerate() {
                    t.rows.push(format!("{p},{i},{},{ex},{}", fx(*pw), closed[i]));
                }
                let _ = writeln!(out, "H = {p}: deviation = {:e}, residual = {:e}", rep.deviation, rep.residual);
            }
            report.tables.push(t);
            if let Some(l) = limit {
                report.tables.push(markov_limit(l, cfg.seed, ctx.workers, suffix, &mut report.summary)?);
            }
        }
        Operation::Hoeffding { processes, max_m, n, ts, trials } => {
            if *max_m == 0 {
                return Err(CliError::Validation("operations.hoeffding.max_m: must be at least 1".into()));
            }
            let mut t = Table::new(format!("hoeffding{suffix}"), "process,m,p,mean,n,t,empirical,bound,sigma,holds");
            let mut violations = 0;
            for i in 0..*processes {
                let m = 1 + (i % u64::from(*max_m)) as u32;
                let process = WindowProcess::random(m, cfg.seed, i)?;
                for c in hoeffding_mc(&process, *n, ts, *trials, cfg.seed.wrapping_add(i), ctx.workers)? {
                    violations += usize::from(!c.holds);
                    t.rows.push(format!(
                        "{i},{m},{},{},{n},{},{},{},{},{}",
                        fx(process.p),
                        fx(process.mean()),
                        fx(c.t),
                        fx(c.empirical),
                        fx(c.bound),
                        fx(c.sigma),
                        c.holds
                    ));
                }
            }
            let _ = writeln!(out, "violations = {violations}");
            report.tables.push(t);
        }
        Operation::Generic { q, n0, n_terms, alphabet, trial_cap, survey } => {
            let terms = ctx.terms(*n_terms)?;
            let base = ctx.resolved.stacking.as_ref().expect("validated");
            let search = SearchConfig {
                base,
                terms: &terms,
                n0: *n0,
                q: *q,
                alphabet: *alphabet,
                trial_cap: *trial_cap,
                seed: cfg.seed,
                mode: if *survey { SearchMode::Survey } else { SearchMode::FirstAccept },
            };
            let (rep, failure) = match genericness_search(&search, ctx.opts) {
                Ok(r) => (r, None),
                Err(Error::SearchExhausted(r)) => {
                    let r2 = (*r).clone();
                    (r2, Some(CliError::Core { field: Some("operations.generic"), error: Error::SearchExhausted(r) }))
                }
                Err(e) => return Err(e.into()),
            };
            let mut t = Table::new(format!("generic{suffix}"), "trial,accepted,valid_levels,worst_frequency,cap,worst_ratio,P_N");
            for tr in &rep.trials {
                t.rows.push(format!(
                    "{},{},{},{},{},{},{}",
                    tr.trial,
                    tr.accepted,
                    tr.valid_levels,
                    fx(tr.worst_frequency),
                    fx(tr.cap),
                    fx(tr.worst_ratio),
                    fe(rep.p_n)
                ));
            }
            let _ = writeln!(out, "trials_used = {}", rep.trials_used);
            let _ = writeln!(out, "empirical_failure_rate = {}", fx(rep.empirical_failure_rate));
            let _ = writeln!(out, "P_N = {}", fe(rep.p_n));
            match &rep.accepted {
                Some(a) => {
                    let s: Vec<String> = a.iter().map(|x| x.to_string()).collect();
                    let _ = writeln!(out, "accepted_trial = {}", rep.accepted_trial.unwrap_or_default());
                    let _ = writeln!(out, "accepted_spacers = {}", s.join(","));
                }
                None => {
                    let _ = writeln!(out, "accepted = none");
                    if let Some(m) = rep.nearest_miss {
                        let _ = writeln!(out, "nearest_miss_ratio = {}", fx(m));
                    }
                }
            }
            report.tables.push(t);
            if let Some(f) = failure {
                return Err(f);
            }
        }
        Operation::Bounds { phi, c, horizon } => {
            let heights = ctx.tower.as_ref().map(|t| t.heights().to_vec());
            let p = balancing_profile(ctx.sequence(), *phi, c.clone(), *horizon, heights.as_deref())
                .map_err(|e| CliError::field("operations.bounds", e))?;
            let mut t = Table::new(format!("bounds{suffix}"), "n,c_n,diag_balance,diag_phi,diag_binom,tau");
            for r in &p.rows {
                let tau = r.tau.map(|x| x.to_string()).unwrap_or_default();
                t.rows.push(format!("{},{},{},{},{},{tau}", r.n, r.c_n, fx(r.diag_balance), fx(r.diag_phi), fx(r.diag_binom)));
            }
            // Endpoint against 1% of the horizon.
            let early = p.row((*horizon / 100).max(2));
            let last = p.rows.last();
            if let (Some(e), Some(l)) = (early, last) {
                let _ = writeln!(out, "balance_trend_down = {}", l.diag_balance < e.diag_balance);
                let _ = writeln!(out, "phi_trend_down = {}", l.diag_phi < e.diag_phi);
                let _ = writeln!(out, "binom_trend_down = {}", l.diag_binom < e.diag_binom);
            }
            report.tables.push(t);
        }
        Operation::Words { n_terms, c } => {
            let tower = ctx.tower();
            let n = tower.num_towers();
            let terms = ctx.terms(n_terms.iter().copied().max().unwrap_or(0))?;
            let mut t = Table::new(format!("words{suffix}"), "N,t_N,c_N,tau,s_N,distinct_words,bound,holds");
            for &nn in n_terms {
                if nn == 0 {
                    return Err(CliError::Validation("operations.words.n_terms: N must be at least 1".into()));
                }
                let tt = &terms[..nn];
                let c_n = c.at(nn as u64)?;
                let t_n = tt[nn - 1];
                let tau = select_tau(tower.heights(), t_n, c_n, nn as u64, TauRule::Strict)?;
                let s_n = tt.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
                let words = brute_force_words(tower, CodingSpec::base(tau), n, tt)?;
                let bound = word_count_bound(nn as u64, c_n, tower.heights()[tau - 1], s_n);
                let holds = BigUint::from(words.len()) <= bound;
                t.rows.push(format!("{nn},{t_n},{c_n},{tau},{s_n},{},{bound},{holds}", words.len()));
            }
            report.tables.push(t);
        }
        Operation::Recipe => {
            let mut t = Table::new(
                format!("recipe{suffix}"),
                "stage,h,N0,N,q,m,t_N,delta,P_bound,P_with_m,approximate",
            );
            let opt = |x: Option<String>| x.unwrap_or_default();
            for (i, b) in ctx.resolved.bundles.iter().enumerate() {
                t.rows.push(format!(
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    i + 1,
                    b.h,
                    opt(b.n0.as_ref().map(|x| x.to_string())),
                    opt(b.n.map(|x| x.to_string())),
                    b.q,
                    opt(b.m.map(|x| x.to_string())),
                    opt(b.t_n.map(|x| x.to_string())),
                    opt(b.delta.map(fx)),
                    opt(b.p_bound.map(fe)),
                    opt(b.p_with_m.map(fe)),
                    b.approximate
                ));
            }
            if let Some(sd) = &ctx.resolved.stacking {
                let hs: Vec<String> = sd.heights_big()?.iter().map(|h| h.to_string()).collect();
                let _ = writeln!(out, "heights = {}", hs.join(", "));
            }
            report.tables.push(t);
        }
        Operation::Flexibility { l, beta, kappa } => {
            let mut t = Table::new(format!("flexibility{suffix}"), "L,beta,kappa,lower,upper,C1_logL,C2_logL");
            for &ll in l {
                for b in beta {
                    let bf = b.to_f64();
                    let k = match kappa {
                        Some(k) => k.to_f64(),
                        None => flexibility_bounds(ll, bf, 2.0)?.critical_kappa,
                    };
                    let f = flexibility_bounds(ll, bf, k).map_err(|e| CliError::field("operations.flexibility", e))?;
                    t.rows.push(format!(
                        "{ll},{b},{},{},{},{},{}",
                        fx(k),
                        fx(f.lower),
                        fx(f.upper),
                        fx(f.c1_log_l),
                        fx(f.c2_log_l)
                    ));
                }
            }
            report.tables.push(t);
        }
    }
    Ok(())
}

fn markov_limit(l: &MarkovLimit, seed: u64, workers: usize, suffix: &str, out: &mut String) -> Result<Table, CliError> {
    let w = block_word(l.h, &l.pattern).map_err(|e| CliError::field("operations.markov.limit", e))?;
    let s = match l.s {
        Some(s) => s,
        None => settling_lag(&w, 0, 1e-9)? as u64,
    };
    let targets: Vec<u32> = if l.l1.is_empty() { (0..=l.h).collect() } else { l.l1.clone() };
    let mut t = Table::new(
        format!("markov_limit{suffix}"),
        "H,l0,l1,n,s,samples,events,hits,estimate,std_error,chain_limit,chain_limit_exact",
    );
    for &l1 in &targets {
        let est = conditional_limit_mc(&w, l.l0, l1, l.n, s, l.samples, seed, workers)?;
        let exact = chain_limit(&w, l1)?;
        t.rows.push(format!(
            "{},{},{l1},{},{s},{},{},{},{},{},{},{exact}",
            w.len(),
            l.l0,
            l.n,
            l.samples,
            est.events,
            est.hits,
            fx(est.estimate),
            fx(est.std_error),
            fx(est.chain_limit)
        ));
        let _ = writeln!(out, "P(l1 = {l1} | l0 = {}) ~ {} +- {} (chain limit {exact})", l.l0, fx(est.estimate), fx(est.std_error));
    }
    let _ = writeln!(out, "rng = {RNG_ALGORITHM}");
    Ok(t)
}
