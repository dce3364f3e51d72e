use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{cross_distance_axis, Model, StripEdges, StripGeometry};
use crate::error::{check_probability, Error, Result};
use crate::parallel::replicate;

/// `D^K(n, 0)` in the standard model: breadth-first search over the open
/// horizontal and vertical edges of every materialized column, so paths may
/// overshoot column `n` and come back.
pub fn standard_distance(edges: &StripEdges, n: usize) -> Result<Option<u64>> {
    let geom = edges.geometry();
    if geom.model() != Model::Standard {
        return Err(Error::Contract("standard distance requires the standard model".into()));
    }
    if n > edges.last_column() {
        return Err(Error::param("n", format!("column {n} is not materialized (last is {})", edges.last_column())));
    }
    let rows = geom.rows();
    let origin = geom.k();
    if n == 0 {
        return Ok(Some(0));
    }
    let cols = edges.last_column() + 1;
    let mut dist = vec![u64::MAX; cols * rows];
    let mut queue = VecDeque::new();
    dist[origin] = 0;
    queue.push_back((0usize, origin));
    while let Some((i, r)) = queue.pop_front() {
        let du = dist[i * rows + r];
        if i == n && r == origin {
            return Ok(Some(du));
        }
        let mut visit = |i2: usize, r2: usize| {
            let slot = &mut dist[i2 * rows + r2];
            if *slot == u64::MAX {
                *slot = du + 1;
                queue.push_back((i2, r2));
            }
        };
        if i + 1 < cols && edges.horizontal_open(i, r) {
            visit(i + 1, r);
        }
        if i > 0 && edges.horizontal_open(i - 1, r) {
            visit(i - 1, r);
        }
        if r + 1 < rows && edges.vertical_open(i, r) {
            visit(i, r + 1);
        }
        if r > 0 && edges.vertical_open(i, r - 1) {
            visit(i, r - 1);
        }
    }
    Ok(None)
}

/// A box of unit squares: lower-left corners `(i, j)` with
/// `i0 <= i < i1` and `j0 <= j < j1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventABox {
    pub i0: usize,
    pub i1: usize,
    pub j0: i64,
    pub j1: i64,
}

impl EventABox {
    /// The box `[0, n] x [-K, K]`.
    pub fn full(geom: &StripGeometry, n: usize) -> Self {
        Self { i0: 0, i1: n, j0: -(geom.k() as i64), j1: geom.k() as i64 }
    }
}

/// Whether every unit square of `bx` has at most one closed side.
pub fn check_event_a(edges: &StripEdges, bx: EventABox) -> Result<bool> {
    let geom = edges.geometry();
    if bx.i1 > edges.last_column() || bx.i0 > bx.i1 {
        return Err(Error::param("box", "columns outside the materialized region"));
    }
    let (r0, r1) = match (geom.row_index(bx.j0), geom.row_index(bx.j1)) {
        (Some(a), Some(b)) if a <= b => (a, b),
        _ => return Err(Error::param("box", "rows outside the strip")),
    };
    for i in bx.i0..bx.i1 {
        for r in r0..r1 {
            let closed = [
                edges.horizontal_open(i, r),
                edges.horizontal_open(i, r + 1),
                edges.vertical_open(i, r),
                edges.vertical_open(i + 1, r),
            ]
            .iter()
            .filter(|&&open| !open)
            .count();
            if closed > 1 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAEstimate {
    pub k: usize,
    pub n: usize,
    pub eps: f64,
    pub samples: u64,
    pub failures: u64,
    pub p_hat: f64,
    pub stderr: f64,
    /// The union bound `22 K n eps^2`.
    pub bound: f64,
}

impl EventAEstimate {
    /// Whether the estimate is compatible with the bound at `sigmas` standard errors.
    pub fn within_bound(&self, sigmas: f64) -> bool {
        self.p_hat <= self.bound + sigmas * self.stderr
    }
}

/// Empirical probability that event A fails on `[0, n] x [-K, K]` in the
/// standard model.
pub fn estimate_event_a_failure(k: usize, n: usize, eps: f64, samples: u64, seed: u64) -> Result<EventAEstimate> {
    check_probability("eps", eps)?;
    let geom = StripGeometry::standard(k)?;
    if samples == 0 {
        return Err(Error::param("samples", "must be positive"));
    }
    let bx = EventABox::full(&geom, n);
    let outcomes = replicate(samples, seed, |_, rng| {
        let edges = StripEdges::sample(rng, geom, eps, n).expect("validated eps");
        !check_event_a(&edges, bx).expect("box inside the sample")
    });
    let failures = outcomes.iter().filter(|&&f| f).count() as u64;
    let p_hat = failures as f64 / samples as f64;
    Ok(EventAEstimate {
        k,
        n,
        eps,
        samples,
        failures,
        p_hat,
        stderr: (p_hat * (1.0 - p_hat) / samples as f64).sqrt(),
        bound: 22.0 * k as f64 * n as f64 * eps * eps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwiseBoundReport {
    pub k: usize,
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub attempts: u64,
    pub accepted: u64,
    /// Accepted samples with `D^K(n,0) > D^{K,d}(n,0) + 3K`.
    pub violations: u64,
    /// Accepted samples where the standard model was disconnected.
    pub disconnected: u64,
    /// Largest observed `D^K(n,0) - D^{K,d}(n,0)`.
    pub max_gap: Option<i64>,
    pub first_violation: Option<u64>,
}

/// Rejection-samples standard configurations on event A and compares the
/// standard distance with the Cross-model distance on the same horizontal
/// edges against the `3K` slack.
///
/// Attempts are processed in fixed batches of replica indices, so the
/// result depends only on the arguments.
pub fn event_a_pathwise_check(
    k: usize,
    n: usize,
    eps: f64,
    accepted_target: u64,
    max_attempts: u64,
    seed: u64,
) -> Result<PathwiseBoundReport> {
    check_probability("eps", eps)?;
    let geom = StripGeometry::standard(k)?;
    let bx = EventABox::full(&geom, n);
    const BATCH: u64 = 4096;
    let mut report = PathwiseBoundReport {
        k,
        n,
        eps,
        seed,
        attempts: 0,
        accepted: 0,
        violations: 0,
        disconnected: 0,
        max_gap: None,
        first_violation: None,
    };
    while report.accepted < accepted_target && report.attempts < max_attempts {
        let start = report.attempts;
        let len = BATCH.min(max_attempts - start);
        let outcomes = crate::parallel::replicate_range(start, len, seed, |_, rng| {
            let edges = StripEdges::sample(rng, geom, eps, n).expect("validated eps");
            if !check_event_a(&edges, bx).expect("box inside the sample") {
                return None;
            }
            let standard = standard_distance(&edges, n).expect("standard model");
            let cross = cross_distance_axis(&edges.to_cross()).expect("cross model");
            Some((standard, cross))
        });
        for (offset, outcome) in outcomes.into_iter().enumerate() {
            let Some((standard, cross)) = outcome else { continue };
            report.accepted += 1;
            match standard {
                None => {
                    report.disconnected += 1;
                    report.violations += 1;
                    report.first_violation.get_or_insert(start + offset as u64);
                }
                Some(d) => {
                    let gap = d as i64 - cross as i64;
                    report.max_gap = Some(report.max_gap.map_or(gap, |m| m.max(gap)));
                    if gap > 3 * k as i64 {
                        report.violations += 1;
                        report.first_violation.get_or_insert(start + offset as u64);
                    }
                }
            }
        }
        report.attempts = start + len;
    }
    Ok(report)
}
