//! Argument parsing and dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankone_core::bounds::{CSchedule, Phi};
use rankone_core::random::{RecipeInput, Construction};
use rankone_core::{CodingMode, Rational, SamplingSequence, SequenceKind};

use crate::config::{Caps, ExperimentConfig, KValue, MarkovLimit, Operation, RecipeSource};
use crate::describe::describe;
use crate::error::CliError;
use crate::pipeline::{execute, Report};
use crate::report::{summary_text, verify, write_bundle};

#[derive(Debug, Parser)]
#[command(name = "rankone", version, about = "Rank-one tower laboratory: symbolic towers, sequence entropy and randomized constructions")]
pub struct Cli {
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the histogram cap on distinct words.
    #[arg(long = "cap-words", global = true)]
    pub cap_words: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print derived quantities (heights, |K|, recipe bundles) without running.
    Describe {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every operation of a config and write a report bundle.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sampling-sequence diagnostics.
    Seq {
        #[command(subcommand)]
        action: SeqAction,
    },
    /// Empirical sequence entropy.
    Entropy {
        #[command(subcommand)]
        action: EntropyAction,
    },
    /// Stationary vectors of the spacer chain and Monte Carlo conditional limits.
    Markov(MarkovArgs),
    /// Random spacer search with frequency caps.
    Generic(GenericArgs),
    /// Balancing diagnostics.
    Bounds(BoundsArgs),
    /// Parameter bundles of the randomized constructions.
    Recipe(RecipeArgs),
    /// Check a report bundle against its recorded config hash.
    Verify {
        #[arg(long)]
        out: PathBuf,
        /// Also require the bundle to come from this config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SeqSource {
    #[arg(long, conflicts_with = "sequence")]
    pub config: Option<PathBuf>,
    /// `poly:3/2`, `nlogn:C:alpha`, `linear:a:b`, `explicit:1,3,6`, or JSON.
    #[arg(long)]
    pub sequence: Option<String>,
    /// Horizon for generated sequences.
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SeqAction {
    /// Start index, maximal gap and the dilation heuristic.
    Describe {
        #[command(flatten)]
        src: SeqSource,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Finite-horizon K estimate at finite (r, n).
    Kvalue {
        #[command(flatten)]
        src: SeqSource,
        #[arg(long)]
        r: u64,
        #[arg(long)]
        n: u64,
    },
    /// CSV of index, value, gap.
    Gaps {
        #[command(flatten)]
        src: SeqSource,
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Base,
    Refined,
}

#[derive(Debug, Subcommand)]
pub enum EntropyAction {
    /// Entropy of the coded orbits; flags override the config's entropy operation.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        stage: Option<usize>,
        #[arg(long)]
        reference: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Comma-separated word lengths N.
        #[arg(long = "n-terms", value_delimiter = ',')]
        n_terms: Vec<usize>,
        /// Sample this many levels instead of enumerating K.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct MarkovArgs {
    /// Block periods H for the stationary vectors.
    #[arg(long, value_delimiter = ',')]
    pub periods: Vec<usize>,
    /// Block height h; enables the Monte Carlo limit.
    #[arg(long)]
    pub h: Option<u32>,
    /// Internal spacers of the block word, e.g. `0` or `1,0`.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub pattern: Vec<u8>,
    #[arg(long, default_value_t = 1)]
    pub l0: u32,
    #[arg(long, value_delimiter = ',')]
    pub l1: Vec<u32>,
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
    #[arg(long)]
    pub s: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenericArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub q: u64,
    #[arg(long)]
    pub n0: u64,
    #[arg(long = "n-terms")]
    pub n_terms: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, default_value_t = 2)]
    pub alphabet: u32,
    /// Run every trial instead of stopping at the first acceptance.
    #[arg(long)]
    pub survey: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub src: SeqSource,
    /// `log`, `power:beta` or `exp:beta`.
    #[arg(long, default_value = "log")]
    pub phi: String,
    /// `const:c`, `power:e`, `loglog`, or `case2:alpha:beta`.
    #[arg(long, default_value = "const:1")]
    pub c: String,
}

#[derive(Debug, Args)]
pub struct RecipeArgs {
    #[arg(long, conflicts_with = "construction")]
    pub config: Option<PathBuf>,
    /// `polynomial`, `log` or `flexibility`.
    #[arg(long)]
    pub construction: Option<String>,
    #[arg(long)]
    pub alpha: Option<Rational>,
    #[arg(long, default_value = "1")]
    pub beta: Rational,
    #[arg(long)]
    pub kappa: Option<Rational>,
    #[arg(long = "L", default_value_t = 2)]
    pub l: u32,
    #[arg(long, default_value = "3/2")]
    pub gamma: Rational,
    #[arg(long, default_value = "1/100")]
    pub eps: Rational,
    #[arg(long, default_value_t = 2)]
    pub h1: u64,
    #[arg(long, default_value_t = 1)]
    pub stages: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn bad(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {reason}"))
}

fn rational(field: &str, s: &str) -> Result<Rational, CliError> {
    s.parse().map_err(|e| bad(field, e))
}

/// Compact sequence syntax, or a JSON object.
pub fn parse_sequence(spec: &str, horizon: u64) -> Result<SamplingSequence, CliError> {
    let s = spec.trim();
    if s.starts_with('{') {
        let mut v: serde_json::Value = serde_json::from_str(s).map_err(|e| bad("--sequence", e))?;
        if v.get("horizon").is_none() && v.get("kind").and_then(|k| k.as_str()) != Some("explicit") {
            v["horizon"] = horizon.into();
        }
        return serde_json::from_value(v).map_err(|e| bad("--sequence", e));
    }
    let parts: Vec<&str> = s.split(':').collect();
    let int = |x: &str| x.parse::<u64>().map_err(|e| bad("--sequence", e));
    let kind = match parts.as_slice() {
        ["poly", a] => SequenceKind::Polynomial { alpha: rational("--sequence", a)? },
        ["nlogn", c, a] => SequenceKind::NLogN { c: rational("--sequence", c)?, alpha: rational("--sequence", a)? },
        ["linear", a, b] => SequenceKind::Linear { a: int(a)?, b: int(b)? },
        ["explicit", list] => {
            let terms = list.split(',').map(|x| int(x.trim())).collect::<Result<Vec<_>, _>>()?;
            return SamplingSequence::explicit(terms).map_err(|e| bad("--sequence", e));
        }
        _ => return Err(bad("--sequence", format!("cannot parse `{s}`"))),
    };
    SamplingSequence::new(kind, horizon).map_err(|e| bad("--sequence", e))
}

pub fn parse_phi(s: &str) -> Result<Phi, CliError> {
    match s.split_once(':') {
        None if s == "log" => Ok(Phi::Log),
        Some(("power", b)) => Ok(Phi::Power { beta: rational("--phi", b)? }),
        Some(("exp", b)) => Ok(Phi::ExpPower { beta: rational("--phi", b)? }),
        _ => Err(bad("--phi", format!("expected log, power:beta or exp:beta, got `{s}`"))),
    }
}

pub fn parse_schedule(s: &str) -> Result<CSchedule, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["const", c] => Ok(CSchedule::Constant { value: c.parse().map_err(|e| bad("--c", e))? }),
        ["power", e] => Ok(CSchedule::Power { exponent: rational("--c", e)? }),
        ["loglog"] => Ok(CSchedule::LogLog),
        ["case2", a, b] => CSchedule::polynomial_case(rational("--c", a)?, rational("--c", b)?).map_err(|e| bad("--c", e)),
        _ => Err(bad("--c", format!("expected const:c, power:e, loglog or case2:alpha:beta, got `{s}`"))),
    }
}

fn parse_construction(s: &str) -> Result<Construction, CliError> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| bad("--construction", "expected polynomial, log or flexibility"))
}

fn bare(operations: Vec<Operation>) -> ExperimentConfig {
    ExperimentConfig { stacking: None, recipe: None, sequence: None, seed: 0, caps: Caps::default(), operations }
}

fn seq_config(src: &SeqSource, op: Operation) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &src.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => bare(vec![]),
    };
    if let Some(s) = &src.sequence {
        cfg.sequence = Some(parse_sequence(s, src.horizon)?);
    }
    cfg.operations = vec![op];
    Ok(cfg)
}

struct Globals {
    workers: usize,
    seed: Option<u64>,
    cap_words: Option<usize>,
}

impl Globals {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(c) = self.cap_words {
            cfg.caps.words = c;
        }
    }
}

/// Runs `cfg` and either writes a bundle to `out` or prints to `stdout`.
fn finish(cfg: &ExperimentConfig, g: &Globals, out: Option<&Path>, stdout: &mut dyn Write, csv: bool) -> Result<(), CliError> {
    let report: Report = execute(cfg, g.workers)?;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match out {
        Some(dir) => {
            write_bundle(dir, cfg, &report, g.workers)?;
            writeln!(stdout, "wrote {}", dir.display()).map_err(io)?;
        }
        None => {
            if csv {
                let many = report.tables.len() > 1;
                for t in &report.tables {
                    if many {
                        writeln!(stdout, "# {}.csv", t.name).map_err(io)?;
                    }
                    write!(stdout, "{}", t.render()).map_err(io)?;
                }
            } else {
                write!(stdout, "{}", summary_text(cfg, &report)).map_err(io)?;
            }
        }
    }
    match report.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let g = Globals { workers: cli.workers.max(1), seed: cli.seed, cap_words: cli.cap_words };
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match cli.command {
        Command::Describe { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            g.apply(&mut cfg);
            write!(stdout, "{}", describe(&cfg)?).map_err(io)
        }
        Command::Run { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            g.apply(&mut cfg);
            finish(&cfg, &g, Some(&out), stdout, true)
        }
        Command::Seq { action } => {
            let (src, op, csv) = match action {
                SeqAction::Describe { src, count } => (src, Operation::Sequence { count, kvalue: None }, false),
                SeqAction::Kvalue { src, r, n } => {
                    (src, Operation::Sequence { count: n as usize, kvalue: Some(KValue { r, n }) }, false)
                }
                SeqAction::Gaps { src, count } => (src, Operation::Sequence { count, kvalue: None }, true),
            };
            let mut cfg = seq_config(&src, op)?;
            g.apply(&mut cfg);
            finish(&cfg, &g, src.out.as_deref(), stdout, csv)
        }
        Command::Entropy { action: EntropyAction::Run { config, stage, reference, mode, n_terms, samples, out } } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            g.apply(&mut cfg);
            let from_cfg = cfg.operations.iter().find_map(|op| match op {
                Operation::Entropy { stage, reference, mode, n_terms, samples } => {
                    Some((*stage, *reference, *mode, n_terms.clone(), *samples))
                }
                _ => None,
            });
            let (s0, r0, m0, n0, x0) = from_cfg.unwrap_or((None, 1, CodingMode::Base, vec![], None));
            let n_terms = if n_terms.is_empty() { n0 } else { n_terms };
            if n_terms.is_empty() {
                return Err(bad("--n-terms", "no word lengths given and none in the config"));
            }
            let mode = match mode {
                Some(ModeArg::Base) => CodingMode::Base,
                Some(ModeArg::Refined) => CodingMode::Refined,
                None => m0,
            };
            cfg.operations = vec![Operation::Entropy {
                stage: stage.or(s0),
                reference: reference.unwrap_or(r0),
                mode,
                n_terms,
                samples: samples.or(x0),
            }];
            finish(&cfg, &g, out.as_deref(), stdout, true)
        }
        Command::Markov(a) => {
            let limit = a.h.map(|h| MarkovLimit { h, pattern: a.pattern.clone(), l0: a.l0, l1: a.l1.clone(), n: a.n, s: a.s, samples: a.samples });
            if a.periods.is_empty() && limit.is_none() {
                return Err(bad("--periods", "give --periods and/or --h"));
            }
            let mut cfg = bare(vec![Operation::Markov { periods: a.periods, limit }]);
            g.apply(&mut cfg);
            finish(&cfg, &g, a.out.as_deref(), stdout, true)
        }
        Command::Generic(a) => {
            let mut cfg = ExperimentConfig::load(&a.config)?;
            g.apply(&mut cfg);
            cfg.operations = vec![Operation::Generic {
                q: a.q,
                n0: a.n0,
                n_terms: a.n_terms,
                alphabet: a.alphabet,
                trial_cap: a.trials,
                survey: a.survey,
            }];
            finish(&cfg, &g, a.out.as_deref(), stdout, true)
        }
        Command::Bounds(a) => {
            let op = Operation::Bounds { phi: parse_phi(&a.phi)?, c: parse_schedule(&a.c)?, horizon: a.src.horizon };
            let mut cfg = seq_config(&a.src, op)?;
            g.apply(&mut cfg);
            finish(&cfg, &g, a.src.out.as_deref(), stdout, true)
        }
        Command::Recipe(a) => {
            let mut cfg = match (&a.config, &a.construction) {
                (Some(p), _) => {
                    let mut cfg = ExperimentConfig::load(p)?;
                    cfg.operations = vec![Operation::Recipe];
                    cfg
                }
                (None, Some(t)) => {
                    let params = RecipeInput {
                        construction: parse_construction(t)?,
                        alpha: a.alpha,
                        beta: a.beta,
                        l: a.l,
                        kappa: a.kappa,
                        gamma: a.gamma,
                        eps: a.eps,
                    };
                    let mut cfg = bare(vec![Operation::Recipe]);
                    cfg.recipe = Some(RecipeSource { params, initial_height: a.h1, stages: a.stages, seed: None });
                    cfg
                }
                (None, None) => return Err(bad("--construction", "give --config or --construction")),
            };
            g.apply(&mut cfg);
            finish(&cfg, &g, a.out.as_deref(), stdout, true)
        }
        Command::Verify { out, config } => {
            let expected = match config {
                Some(p) => {
                    let mut cfg = ExperimentConfig::load(&p)?;
                    g.apply(&mut cfg);
                    Some(cfg)
                }
                None => None,
            };
            writeln!(stdout, "{}", verify(&out, expected.as_ref())?).map_err(io)
        }
    }
}
