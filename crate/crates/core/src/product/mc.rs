//! Monte Carlo estimate of `P(T > n)`.

use rayon::prelude::*;
use serde::Serialize;

use super::{simultaneous_return, Component, ProductState, TauTrace};
use crate::error::{Error, Result};
use crate::rates::{wilson, Provenance, SurvivalCurve};
use crate::rng;

/// Physical-time cap on a single trace.
pub const DEFAULT_CAP: usize = 1_000_000;

/// Half-width of the reported intervals, in standard deviations.
const Z: f64 = 3.0;

/// Structural checks run on every sampled trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceAudit {
    pub samples: u64,
    pub min_gap: usize,
    /// Every gap was at least `n₀`.
    pub gaps_ok: bool,
    /// Both factors were in their bases at `T` in every sample.
    pub stops_in_base: bool,
    pub max_t: usize,
}

#[derive(Debug, Clone)]
pub struct McOutcome {
    pub curve: SurvivalCurve,
    pub audit: TraceAudit,
    /// Exact counts of `T > n`, `n = 0..=N`.
    pub exceed: Vec<u64>,
}

/// Draws `samples` independent simultaneous return times. Replica `r` uses
/// stream `r` of the seeded generator, so the result does not depend on
/// thread scheduling.
pub fn product_tail_mc<A: Component, B: Component>(
    first: &A,
    second: &B,
    n0: usize,
    samples: u64,
    horizon: usize,
    seed: u64,
    cap: usize,
) -> Result<McOutcome> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let traces: Vec<std::result::Result<TauTrace, u64>> = (0..samples)
        .into_par_iter()
        .map(|replica| {
            let mut rng = rng::stream(seed, replica);
            let start = ProductState { first: first.fresh(&mut rng), second: second.fresh(&mut rng) };
            simultaneous_return(first, second, n0, start, cap, &mut rng).map_err(|_| replica)
        })
        .collect();

    let mut hist = vec![0u64; horizon + 2];
    let mut audit = TraceAudit { samples, min_gap: usize::MAX, gaps_ok: true, stops_in_base: true, max_t: 0 };
    for tr in traces {
        let tr = tr.map_err(|replica| Error::RunawayTrace { replica, cap: cap as u64 })?;
        audit.min_gap = audit.min_gap.min(tr.min_gap());
        audit.gaps_ok &= tr.min_gap() >= n0;
        audit.stops_in_base &= tr.both_in_base;
        audit.max_t = audit.max_t.max(tr.t);
        hist[tr.t.min(horizon + 1)] += 1;
    }
    // exceed[n] = #{T > n}
    let mut exceed = vec![0u64; horizon + 1];
    let mut acc = hist[horizon + 1];
    for n in (0..=horizon).rev() {
        exceed[n] = acc;
        acc += hist[n];
    }
    let values = exceed.iter().map(|&k| k as f64 / samples as f64).collect();
    let ci = exceed.iter().map(|&k| wilson(k, samples, Z)).collect();
    let curve = SurvivalCurve {
        values,
        ci: Some(ci),
        leak_bound: vec![0.0; horizon + 1],
        provenance: Provenance::Mc,
    };
    Ok(McOutcome { curve, audit, exceed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::TowerModel;

    #[test]
    fn single_sample_is_degenerate() {
        let m = TowerModel::from_columns(vec![(3, 0.5), (5, 0.5)]).unwrap();
        let out = product_tail_mc(&m, &m, 13, 1, 50, 9, DEFAULT_CAP).unwrap();
        assert!(out.curve.values.iter().all(|&v| v == 0.0 || v == 1.0));
        assert!(out.audit.gaps_ok && out.audit.stops_in_base);
    }

    #[test]
    fn seeded_runs_repeat() {
        let m = TowerModel::from_columns(vec![(3, 0.5), (5, 0.5)]).unwrap();
        let a = product_tail_mc(&m, &m, 13, 2000, 80, 42, DEFAULT_CAP).unwrap();
        let b = product_tail_mc(&m, &m, 13, 2000, 80, 42, DEFAULT_CAP).unwrap();
        assert_eq!(a.exceed, b.exceed);
    }

    #[test]
    fn runaway_is_reported() {
        let m = TowerModel::from_columns(vec![(3, 0.5), (5, 0.5)]).unwrap();
        let err = product_tail_mc(&m, &m, 13, 50, 10, 1, 5).unwrap_err();
        assert!(matches!(err, Error::RunawayTrace { cap: 5, .. }));
    }
}
