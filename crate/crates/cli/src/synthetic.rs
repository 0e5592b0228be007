//! Synthetic trace specifications given on the command line.
//!
//! Inline grammar: `LAW[:KEY=VALUE[,KEY=VALUE]...]`.
//!
//! | law           | keys (defaults)                               |
//! |---------------|-----------------------------------------------|
//! | `unit`        | `n` (100)                                     |
//! | `pareto`      | `n` (1000), `shape` (1.1), `scale` (1)        |
//! | `large-small` | `large` (3), `weight` (1e6), `small` (1000)   |
//! | `table1-mix`  | `n` (10000)                                   |
//!
//! Every law also takes `seed`; without it the command's seed is used.
//! Anything naming an existing file is read as a JSON trace spec instead.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use priority_sampling::harness::{TraceSpec, WeightLaw};

pub fn parse_synthetic(text: &str, default_seed: u64) -> Result<TraceSpec> {
    if Path::new(text).is_file() {
        let raw = std::fs::read_to_string(text).with_context(|| format!("reading {text}"))?;
        return serde_json::from_str(&raw).with_context(|| format!("parsing trace spec {text}"));
    }
    let (law, rest) = text.split_once(':').unwrap_or((text, ""));
    let mut keys = BTreeMap::new();
    for pair in rest.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("expected KEY=VALUE in synthetic spec, got {pair:?}"))?;
        keys.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut take = |key: &str, default: f64| -> Result<f64> {
        match keys.remove(key) {
            Some(v) => v
                .parse()
                .map_err(|_| anyhow!("synthetic spec key {key}={v:?} is not a number")),
            None => Ok(default),
        }
    };
    let count = |x: f64, key: &str| -> Result<usize> {
        if x >= 0.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            bail!("synthetic spec key {key} must be a nonnegative integer")
        }
    };
    let seed = take("seed", default_seed as f64)? as u64;
    let spec = match law {
        "unit" => TraceSpec::new(
            WeightLaw::Unit {
                n: count(take("n", 100.0)?, "n")?,
            },
            seed,
        ),
        "pareto" => TraceSpec::new(
            WeightLaw::Pareto {
                n: count(take("n", 1000.0)?, "n")?,
                shape: take("shape", 1.1)?,
                scale: take("scale", 1.0)?,
            },
            seed,
        ),
        "large-small" => TraceSpec::new(
            WeightLaw::LargeSmall {
                large: count(take("large", 3.0)?, "large")?,
                weight: take("weight", 1e6)?,
                small: count(take("small", 1000.0)?, "small")?,
            },
            seed,
        ),
        "table1-mix" => TraceSpec::table1_mix(count(take("n", 10_000.0)?, "n")?, seed),
        other => bail!(
            "unknown synthetic law {other:?}; expected unit, pareto, large-small or table1-mix"
        ),
    };
    if let Some(key) = keys.keys().next() {
        bail!("synthetic law {law} has no key {key:?}");
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_forms() {
        let s = parse_synthetic("pareto:n=50,shape=1.5", 9).unwrap();
        assert_eq!(
            s,
            TraceSpec::new(
                WeightLaw::Pareto {
                    n: 50,
                    shape: 1.5,
                    scale: 1.0
                },
                9
            )
        );
        assert_eq!(parse_synthetic("unit:seed=4", 9).unwrap().seed, 4);
        assert_eq!(
            parse_synthetic("table1-mix:n=200", 1).unwrap(),
            TraceSpec::table1_mix(200, 1)
        );
    }

    #[test]
    fn rejects_unknowns() {
        assert!(parse_synthetic("zipf", 0).is_err());
        assert!(parse_synthetic("unit:m=3", 0).is_err());
        assert!(parse_synthetic("unit:n=2.5", 0).is_err());
        assert!(parse_synthetic("unit:n", 0).is_err());
    }
}
