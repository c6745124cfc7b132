//! Shared configuration parsing: group shorthands, prime lists, the
//! default cache directory.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clm_core::abelian::{GroupConfig, GroupSpec};
use clm_core::measure::ClmMeasure;
use clm_core::modules::RankVector;

/// Parsed group selection: the group plus whether the minus part (with
/// respect to the unique involution of a cyclic group) is selected.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GroupSelection {
    pub cyclic_orders: Vec<u64>,
    pub minus: bool,
}

/// Accepts shorthands like "C4", "C58minus", or "2x4" for the group
/// [2, 4]; the "minus" suffix selects the components on which the unique
/// involution of a cyclic group acts by -1.
pub fn parse_group(text: &str) -> Result<GroupSelection> {
    let lower = text.to_ascii_lowercase();
    let (body, minus) = match lower.strip_suffix("minus") {
        Some(b) => (b.to_string(), true),
        None => (lower, false),
    };
    let body = body.trim();
    let orders: Vec<u64> = if let Some(rest) = body.strip_prefix('c') {
        vec![rest
            .parse()
            .with_context(|| format!("cannot parse group '{text}'"))?]
    } else {
        body.split('x')
            .map(|t| t.trim().parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("cannot parse group '{text}'"))?
    };
    if minus && orders.len() != 1 {
        bail!("the minus shorthand needs a cyclic group");
    }
    if minus && orders[0] % 2 != 0 {
        bail!("a cyclic group of odd order has no involution");
    }
    Ok(GroupSelection {
        cyclic_orders: orders,
        minus,
    })
}

/// Comma-separated prime list; the set must be finite and explicit, so
/// wildcards are rejected here.
pub fn parse_primes(text: &str) -> Result<Vec<u64>> {
    if text.trim().eq_ignore_ascii_case("all") {
        bail!("the prime set S must be finite; list the primes explicitly");
    }
    let primes: Vec<u64> = text
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("cannot parse prime list '{text}'"))?;
    if primes.is_empty() {
        bail!("empty prime list");
    }
    for &p in &primes {
        if p < 2 || clm_core::arith::factorize(p).len() != 1 || !clm_core::arith::is_squarefree(p)
        {
            bail!("{p} is not prime");
        }
    }
    Ok(primes)
}

/// Builds the measure for a group selection with a uniform rank.
pub fn build_measure(sel: &GroupSelection, s: &[u64], u: u32) -> Result<ClmMeasure> {
    let group = GroupSpec::new(&sel.cyclic_orders)?;
    let comps = if sel.minus {
        let c = vec![group.order() / 2];
        group.minus_components(&c)?
    } else {
        group.components()
    };
    let ranks: RankVector = comps.iter().map(|c| (c.id, u)).collect();
    Ok(ClmMeasure::new(&comps, s, ranks)?)
}

/// Loads a group config JSON file of the documented shape.
pub fn load_group_config(path: &PathBuf) -> Result<GroupConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Default cache directory: CLM_LAB_CACHE_DIR, else ./clm-lab-cache.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os("CLM_LAB_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("clm-lab-cache"))
}

/// Parses scientific-or-plain positive integers like "1e6" or "1000000".
pub fn parse_magnitude(text: &str) -> Result<u64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = t
        .parse()
        .with_context(|| format!("cannot parse magnitude '{text}'"))?;
    if !f.is_finite() || f < 0.0 || f > 1.8e19 || f.fract() != 0.0 {
        bail!("magnitude '{text}' is not a nonnegative integer");
    }
    Ok(f as u64)
}
