use std::fmt::Write as _;

use rankone_core::Tower;

use crate::config::{ExperimentConfig, Operation};
use crate::error::CliError;

/// Derived quantities of a config, without running any operation.
pub fn describe(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let resolved = cfg.validate()?;
    let mut s = String::new();
    let _ = writeln!(s, "config_hash = {}", cfg.hash());
    let _ = writeln!(s, "seed = {}", cfg.seed);
    if let Some(sd) = &resolved.stacking {
        let heights: Vec<String> = sd.heights_big()?.iter().map(|h| h.to_string()).collect();
        let _ = writeln!(s, "heights = ({})", heights.join(", "));
        if let Some(l) = sd.spacer_cap {
            let _ = writeln!(s, "spacer_cap = {l}");
        }
    }
    for (i, b) in resolved.bundles.iter().enumerate() {
        let _ = writeln!(s, "recipe stage {}:", i + 1);
        for line in b.to_string().lines() {
            let _ = writeln!(s, "  {line}");
        }
        let _ = writeln!(s, "  q_{} = {}", i + 1, b.q);
    }
    if let Some(seq) = &cfg.sequence {
        let kind = serde_json::to_string(seq.kind()).unwrap_or_default();
        let _ = writeln!(s, "sequence = {kind}, start = {}, horizon = {}", seq.start(), seq.horizon());
    }
    let tower = match &resolved.stacking {
        Some(sd) => sd.heights().ok().and_then(|_| Tower::new(sd.clone()).ok()),
        None => None,
    };
    for op in &cfg.operations {
        let _ = write!(s, "operation {}", op.name());
        match (op, &tower, &cfg.sequence) {
            (Operation::Entropy { stage, n_terms, .. }, Some(t), Some(seq)) => {
                let n = stage.unwrap_or(t.num_towers());
                for &nn in n_terms {
                    let k = seq
                        .first(nn)
                        .ok()
                        .and_then(|terms| terms.last().copied())
                        .and_then(|t_n| t.valid_levels(n, t_n).ok())
                        .map_or_else(|| "empty".to_string(), |k| k.len().to_string());
                    let _ = write!(s, "; N = {nn}: |K| = {k}");
                }
            }
            (Operation::Generic { q, n_terms, .. }, Some(t), _) => {
                let _ = write!(s, "; q = {q}, N = {n_terms}, q*h_n = {}", q * t.heights().last().copied().unwrap_or(0));
            }
            _ => {}
        }
        s.push('\n');
    }
    Ok(s)
}
