//! Expected Cross-model distances `E[D(n, 0)]` on the strip.
//!
//! Along the axis `D(i+1, 0) - D(i, 0)` is 3 when site 0 holds a particle,
//! site 1 a hole and the row-0 horizontal edge is closed, so
//! `E[D(n, 0)] = n + 2 eps sum_{j<n} P(Y_j has the pair)` with `Y_0` the step
//! configuration. Started from the stationary law instead, the same sum is
//! exactly `n (1 + 2 eps nu)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::parallel::replicate;
use crate::plane::{diagonal_distances, plane_distance, PlaneWindow};
use crate::rng::replica_seed;
use crate::stats::Accumulator;
use crate::strip::{
    cross_distance_axis, cross_step_into, sample_column_unchecked, EdgeColumn, StripEdges, StripGeometry,
};
use crate::tasep::exact::{pair_indicator, EXACT_MAX_K};
use crate::tasep::rational::{nu_pair_exact_rational, IntegerChain, RATIONAL_PROPAGATE_MAX_K};
use crate::tasep::{stationary_exact, TasepRates, TasepState, TransitionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectationMethod {
    ExactChain,
    MonteCarlo,
    StationaryStart,
}

impl std::fmt::Display for ExpectationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExpectationMethod::ExactChain => "exact",
            ExpectationMethod::MonteCarlo => "monte-carlo",
            ExpectationMethod::StationaryStart => "stationary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripExpectation {
    pub k: usize,
    pub eps: f64,
    pub n: u64,
    pub value: f64,
    pub method: ExpectationMethod,
    pub stderr: Option<f64>,
}

fn check_open_eps(eps: f64) -> Result<()> {
    check_probability("eps", eps)?;
    if eps == 0.0 || eps == 1.0 {
        return Err(Error::Degenerate(format!("eps = {eps}: the exact chain needs eps in (0, 1)")));
    }
    Ok(())
}

fn check_exact_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::param("K", "must be at least 1"));
    }
    if k > EXACT_MAX_K {
        return Err(Error::Capacity(format!("K = {k} exceeds the exact limit K <= {EXACT_MAX_K}")));
    }
    Ok(())
}

/// `E[D(n, 0)]` for every `n` in `0..=n_max`, from the exact law of `Y_j`.
pub fn expected_distance_series(k: usize, eps: f64, n_max: u64) -> Result<Vec<f64>> {
    check_exact_k(k)?;
    check_open_eps(eps)?;
    let matrix = TransitionMatrix::build(k, &TasepRates::uniform(eps)?)?;
    let mut pi = vec![0.0; matrix.states()];
    pi[TasepState::step_configuration(k).to_index() as usize] = 1.0;
    let mut next = vec![0.0; pi.len()];
    let pairs: Vec<usize> = (0..pi.len()).filter(|&s| pair_indicator(k, s as u64)).collect();
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut sum = 0.0;
    out.push(0.0);
    for j in 0..n_max {
        sum += pairs.iter().map(|&s| pi[s]).sum::<f64>();
        out.push((j + 1) as f64 + 2.0 * eps * sum);
        if j + 1 < n_max {
            matrix.apply(&pi, &mut next);
            std::mem::swap(&mut pi, &mut next);
        }
    }
    Ok(out)
}

pub fn expected_distance_exact(k: usize, eps: f64, n: u64) -> Result<StripExpectation> {
    let value = *expected_distance_series(k, eps, n)?.last().expect("n + 1 entries");
    Ok(StripExpectation { k, eps, n, value, method: ExpectationMethod::ExactChain, stderr: None })
}

/// `E[D(n, 0)]` for `n` in `0..=n_max` as exact rationals.
pub fn expected_distance_series_rational(k: usize, eps: &BigRational, n_max: u64) -> Result<Vec<BigRational>> {
    let chain = IntegerChain::build(k, eps, RATIONAL_PROPAGATE_MAX_K)?;
    let start = TasepState::step_configuration(k).to_index() as usize;
    let probs = chain.pair_probabilities(start, n_max as usize);
    let two_eps = eps * BigRational::from_integer(BigInt::from(2));
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut sum = BigRational::zero();
    out.push(BigRational::zero());
    for (j, p) in probs.into_iter().enumerate() {
        sum += p;
        out.push(BigRational::from_integer(BigInt::from(j + 1)) + &two_eps * &sum);
    }
    Ok(out)
}

/// `n (1 + 2 eps nu)` with `nu` from the numerical stationary solve.
pub fn stationary_start_expectation(k: usize, eps: f64, n: u64) -> Result<StripExpectation> {
    check_exact_k(k)?;
    check_open_eps(eps)?;
    let nu = stationary_exact(k, &TasepRates::uniform(eps)?)?.nu_pair;
    Ok(StripExpectation {
        k,
        eps,
        n,
        value: n as f64 * (1.0 + 2.0 * eps * nu),
        method: ExpectationMethod::StationaryStart,
        stderr: None,
    })
}

/// Outcome of comparing `E[D(n, 0)]` with `n (1 + 2 eps nu)` for all
/// `n <= n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub k: usize,
    pub eps: f64,
    pub n_max: u64,
    pub nu: f64,
    /// Smallest and largest `E[D(n, 0)] - n (1 + 2 eps nu)` over `n`.
    pub min_gap: f64,
    pub max_gap: f64,
    /// `n` values with a gap outside `[0, 2K]`.
    pub violations: Vec<u64>,
    /// `n` values where `E[D(n+1, 0)] / (n+1) > E[D(n, 0)] / n`.
    pub monotonicity_breaks: Vec<u64>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.monotonicity_breaks.is_empty()
    }
}

/// The two-sided bound checked in exact rational arithmetic, with `nu` from
/// the rational stationary solve.
pub fn sandwich_check_rational(k: usize, eps: &BigRational, n_max: u64) -> Result<SandwichReport> {
    let nu = nu_pair_exact_rational(k, eps)?;
    let series = expected_distance_series_rational(k, eps, n_max)?;
    let one = BigRational::one();
    let slope = &one + BigRational::from_integer(BigInt::from(2)) * eps * &nu;
    let upper = BigRational::from_integer(BigInt::from(2 * k));
    let mut violations = Vec::new();
    let mut monotonicity_breaks = Vec::new();
    let (mut min_gap, mut max_gap) = (f64::INFINITY, f64::NEG_INFINITY);
    for (n, e) in series.iter().enumerate() {
        let nq = BigRational::from_integer(BigInt::from(n));
        let gap = e - &nq * &slope;
        if gap < BigRational::zero() || gap > upper {
            violations.push(n as u64);
        }
        let g = gap.to_f64().unwrap_or(f64::NAN);
        min_gap = min_gap.min(g);
        max_gap = max_gap.max(g);
        // E[n+1] / (n+1) <= E[n] / n  <=>  n E[n+1] <= (n+1) E[n].
        if n >= 1 && n + 1 < series.len() {
            let lhs = &nq * &series[n + 1];
            let rhs = (&nq + &one) * e;
            if lhs > rhs {
                monotonicity_breaks.push(n as u64);
            }
        }
    }
    Ok(SandwichReport {
        k,
        eps: eps.to_f64().unwrap_or(f64::NAN),
        n_max,
        nu: nu.to_f64().unwrap_or(f64::NAN),
        min_gap,
        max_gap,
        violations,
        monotonicity_breaks,
    })
}

/// The same check in floating point, for `K` up to the exact-solve limit.
/// Gaps are compared with an absolute slack of `tol`.
pub fn sandwich_check_float(k: usize, eps: f64, n_max: u64, tol: f64) -> Result<SandwichReport> {
    let series = expected_distance_series(k, eps, n_max)?;
    let nu = stationary_exact(k, &TasepRates::uniform(eps)?)?.nu_pair;
    let slope = 1.0 + 2.0 * eps * nu;
    let mut violations = Vec::new();
    let mut monotonicity_breaks = Vec::new();
    let (mut min_gap, mut max_gap) = (f64::INFINITY, f64::NEG_INFINITY);
    for (n, &e) in series.iter().enumerate() {
        let gap = e - n as f64 * slope;
        if gap < -tol || gap > 2.0 * k as f64 + tol {
            violations.push(n as u64);
        }
        min_gap = min_gap.min(gap);
        max_gap = max_gap.max(gap);
        if n >= 1 && n + 1 < series.len() && series[n + 1] / (n + 1) as f64 > e / n as f64 + tol {
            monotonicity_breaks.push(n as u64);
        }
    }
    Ok(SandwichReport { k, eps, n_max, nu, min_gap, max_gap, violations, monotonicity_breaks })
}

/// `D(n, 0)` for one sampled Cross strip, by the column sweep.
fn sampled_axis_distance(k: usize, eps: f64, n: u64, rng: &mut crate::rng::StreamRng) -> u64 {
    let geom = StripGeometry::cross(k).expect("K validated");
    let mut d: Vec<u64> = (-(k as i64)..=k as i64).map(|j| j.unsigned_abs()).collect();
    let mut next = Vec::with_capacity(d.len());
    for _ in 0..n {
        let col = sample_column_unchecked(rng, &geom, eps);
        cross_step_into(&d, &col.horizontal, &mut next);
        std::mem::swap(&mut d, &mut next);
    }
    d[k]
}

/// Mean and standard error of `D(n, 0)` over independent replicas.
pub fn monte_carlo_distance(k: usize, eps: f64, n: u64, replicas: u64, seed: u64) -> Result<StripExpectation> {
    StripGeometry::cross(k)?;
    check_probability("eps", eps)?;
    if replicas < 2 {
        return Err(Error::param("replicas", "need at least 2"));
    }
    let acc: Accumulator =
        replicate(replicas, seed, |_, rng| sampled_axis_distance(k, eps, n, rng) as f64).into_iter().collect();
    Ok(StripExpectation {
        k,
        eps,
        n,
        value: acc.mean(),
        method: ExpectationMethod::MonteCarlo,
        stderr: Some(acc.stderr()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub k: u64,
    pub eps: f64,
    pub seed: u64,
    pub replicas: u64,
    /// Replicas where the plane distance with forced verticals and
    /// diagonals differs from the strip sweep.
    pub equality_violations: u64,
    /// Replicas where that distance exceeds a finite plane distance.
    pub domination_violations: u64,
    /// Replicas where `n -> D^d(n, 0)` decreases somewhere in `0..=k`.
    pub monotonicity_violations: u64,
    /// Replicas with a finite plane distance to `(k, 0)`.
    pub plane_finite: u64,
    pub first_violation: Option<u64>,
}

impl LowerBoundReport {
    pub fn passed(&self) -> bool {
        self.equality_violations == 0 && self.domination_violations == 0 && self.monotonicity_violations == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LowerBoundOutcome {
    pub equal: bool,
    pub dominated: bool,
    pub monotone: bool,
    pub plane_finite: bool,
}

/// Compares the three distances on one plane window.
///
/// A path of length at most `2k` (the all-diagonal route) never leaves the
/// L1 ball of radius `2k`, so the window `[-2k-1, 3k+1] x [-2k-1, 2k+1]` is
/// large enough for the diagonal-augmented distance to be exact.
pub(crate) fn lower_bound_outcome(window: &PlaneWindow, k: u64) -> Result<LowerBoundOutcome> {
    let ki = k as i64;
    let diag = diagonal_distances(window, (0, 0))?;
    let at =
        |n: i64| diag[window.index((n, 0)).expect("axis inside the window")].expect("diagonals connect everything");
    let d_diag = at(ki);

    let geom = StripGeometry::cross(k as usize)?;
    let columns = (0..ki)
        .map(|i| EdgeColumn {
            horizontal: (-ki..=ki).map(|j| window.horizontal_open((i, j))).collect(),
            vertical: None,
        })
        .collect();
    let strip = StripEdges::new(geom, None, columns)?;
    let d_strip = cross_distance_axis(&strip)?;

    let plane = plane_distance(window, (0, 0), (ki, 0))?;
    Ok(LowerBoundOutcome {
        equal: d_diag == d_strip,
        dominated: plane.is_none_or(|d| d_diag <= d),
        monotone: (0..ki).all(|n| at(n) <= at(n + 1)),
        plane_finite: plane.is_some(),
    })
}

/// Plane window used by [`lower_bound_check`] for replica key `key`.
pub fn lower_bound_window(key: u64, eps: f64, k: u64) -> Result<PlaneWindow> {
    let r = 2 * k as i64 + 1;
    PlaneWindow::sample(key, eps, -r..=k as i64 + r, -r..=r)
}

/// For `replicas` plane configurations: the distance to `(k, 0)` with every
/// vertical and diagonal edge added equals the strip sweep of width `k` on
/// the same horizontals, is at most the plane distance, and is
/// nondecreasing along the axis.
pub fn lower_bound_check(k: u64, eps: f64, seed: u64, replicas: u64) -> Result<LowerBoundReport> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    check_probability("eps", eps)?;
    let outcomes = replicate(replicas, seed, |r, _| {
        let window = lower_bound_window(replica_seed(seed, r), eps, k)?;
        lower_bound_outcome(&window, k)
    });
    let mut report = LowerBoundReport {
        k,
        eps,
        seed,
        replicas,
        equality_violations: 0,
        domination_violations: 0,
        monotonicity_violations: 0,
        plane_finite: 0,
        first_violation: None,
    };
    for (r, outcome) in outcomes.into_iter().enumerate() {
        let o = outcome?;
        report.equality_violations += !o.equal as u64;
        report.domination_violations += !o.dominated as u64;
        report.monotonicity_violations += !o.monotone as u64;
        report.plane_finite += o.plane_finite as u64;
        if !(o.equal && o.dominated && o.monotone) {
            report.first_violation.get_or_insert(r as u64);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;

    #[test]
    fn zero_columns() {
        assert_eq!(expected_distance_exact(3, 0.2, 0).unwrap().value, 0.0);
        assert_eq!(expected_distance_series(2, 0.5, 0).unwrap(), vec![0.0]);
    }

    #[test]
    fn small_eps_tends_to_n() {
        let e = expected_distance_exact(3, 1e-9, 40).unwrap().value;
        assert!((e - 40.0).abs() < 1e-6);
    }

    #[test]
    fn first_steps_by_hand() {
        // The step configuration carries the pair, so E[D(1, 0)] = 1 + 2 eps.
        for eps in [0.1, 0.5, 0.9] {
            let s = expected_distance_series(3, eps, 1).unwrap();
            assert!((s[1] - (1.0 + 2.0 * eps)).abs() < 1e-14);
        }
    }

    #[test]
    fn rational_series_matches_float() {
        let q = BigRational::new(1.into(), 5.into());
        let exact = expected_distance_series_rational(3, &q, 60).unwrap();
        let float = expected_distance_series(3, 0.2, 60).unwrap();
        for (a, b) in exact.iter().zip(&float) {
            assert!((a.to_f64().unwrap() - b).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_start_is_linear() {
        let a = stationary_start_expectation(3, 0.2, 50).unwrap().value;
        let b = stationary_start_expectation(3, 0.2, 100).unwrap().value;
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn sandwich_small() {
        let q = BigRational::new(1.into(), 5.into());
        let r = sandwich_check_rational(2, &q, 80).unwrap();
        assert!(r.passed(), "{r:?}");
        let f = sandwich_check_float(2, 0.2, 80, 1e-9).unwrap();
        assert!(f.passed());
        assert!((f.max_gap - r.max_gap).abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_degenerate() {
        let zero = monte_carlo_distance(3, 0.0, 25, 10, 1).unwrap();
        assert_eq!((zero.value, zero.stderr), (25.0, Some(0.0)));
        for n in [24, 25] {
            let one = monte_carlo_distance(3, 1.0, n, 10, 1).unwrap();
            assert_eq!(one.value, (2 * n + n % 2) as f64);
            assert_eq!(one.stderr, Some(0.0));
        }
        assert!(monte_carlo_distance(3, 0.2, 10, 1, 1).is_err());
    }

    #[test]
    fn sweep_helper_matches_profiles() {
        let mut a = replica_rng(3, 0);
        let mut b = replica_rng(3, 0);
        let geom = StripGeometry::cross(2).unwrap();
        let edges = StripEdges::sample(&mut a, geom, 0.3, 30).unwrap();
        assert_eq!(sampled_axis_distance(2, 0.3, 30, &mut b), cross_distance_axis(&edges).unwrap());
    }

    #[test]
    fn exact_limits() {
        assert!(matches!(expected_distance_exact(8, 0.2, 3), Err(Error::Capacity(_))));
        assert!(matches!(expected_distance_exact(2, 0.0, 3), Err(Error::Degenerate(_))));
        assert!(expected_distance_exact(2, 1.2, 3).is_err());
    }

    #[test]
    fn lower_bound_all_open() {
        for k in [1u64, 5, 12] {
            let r = 2 * k as i64 + 1;
            let w = PlaneWindow::all_open(-r..=k as i64 + r, -r..=r).unwrap();
            let o = lower_bound_outcome(&w, k).unwrap();
            assert!(o.equal && o.dominated && o.monotone && o.plane_finite);
            assert_eq!(plane_distance(&w, (0, 0), (k as i64, 0)).unwrap(), Some(k));
        }
    }

    #[test]
    fn lower_bound_small_run() {
        let r = lower_bound_check(6, 0.4, 2, 200).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
