//! Grid syntax for sweep flags.
//!
//! * `1,10,100` — explicit values
//! * `log:START:STOP:COUNT` — log-spaced, endpoints included
//! * `A..B` — integers `A` through `B` (relay counts only)

use anyhow::{bail, Context, Result};

use anc_core::sweep::log_grid;

pub fn parse_real_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            bail!("log grid must be log:START:STOP:COUNT, got {text:?}");
        };
        let start: f64 = start.parse().with_context(|| format!("bad grid start {start:?}"))?;
        let stop: f64 = stop.parse().with_context(|| format!("bad grid stop {stop:?}"))?;
        let count: usize = count.parse().with_context(|| format!("bad grid count {count:?}"))?;
        if count == 0 || !(start > 0.0 && stop > 0.0) {
            bail!("log grid needs positive endpoints and at least one point");
        }
        return Ok(log_grid(start, stop, count));
    }
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad grid value {s:?}")))
        .collect()
}

pub fn parse_count_grid(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().with_context(|| format!("bad range start {a:?}"))?;
        let b: usize = b.trim().parse().with_context(|| format!("bad range end {b:?}"))?;
        if a > b {
            bail!("empty range {text:?}");
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad relay count {s:?}")))
        .collect()
}
