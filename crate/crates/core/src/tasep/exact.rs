//! Exact (floating-point) stationary solve of the synchronous TASEP.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{TasepRates, TasepState};
use crate::error::{Error, Result};

/// Largest half-width accepted by the exact solvers (`2^14` states).
pub const EXACT_MAX_K: usize = 7;
/// Largest state count for the dense direct-solve fallback.
const DIRECT_MAX_STATES: usize = 4096;
const SUM_TOL: f64 = 1e-12;
pub const RESIDUAL_TOL: f64 = 1e-10;
const POWER_TARGET: f64 = 1e-13;
const STALL_WINDOW: usize = 100;
const STALL_RATIO: f64 = 1e-14;
const MAX_POWER_ITERS: usize = 500_000;

/// Sparse row-stochastic transition matrix over all `2^{2K}` states.
///
/// From state `s` with `m` enabled events the chain moves to one of `2^m`
/// distinct states (each subset of events firing), so rows are enumerated
/// directly rather than by summing over all edge columns.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    k: usize,
    row_ptr: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

/// XOR mask realising event `e` on the occupation bits.
pub(crate) fn event_mask(e: usize, sites: usize) -> u64 {
    let mut m = 0;
    if e > 0 {
        m |= 1 << (e - 1);
    }
    if e < sites {
        m |= 1 << e;
    }
    m
}

/// Enabled edge rows of state `s` (bit `p` = position `p`).
pub(crate) fn enabled_events(s: u64, sites: usize) -> Vec<usize> {
    (0..=sites)
        .filter(|&e| {
            let left = e == 0 || s >> (e - 1) & 1 == 1;
            let right = e < sites && s >> e & 1 == 1;
            left && !right
        })
        .collect()
}

impl TransitionMatrix {
    pub fn build(k: usize, rates: &TasepRates) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("K", "must be at least 1"));
        }
        if k > EXACT_MAX_K {
            return Err(Error::Capacity(format!("K = {k} exceeds the exact-solve limit K <= {EXACT_MAX_K}")));
        }
        let sites = 2 * k;
        let n = 1usize << sites;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        row_ptr.push(0);
        for s in 0..n as u64 {
            let events = enabled_events(s, sites);
            for subset in 0..(1u64 << events.len()) {
                let mut t = s;
                let mut w = 1.0;
                for (b, &e) in events.iter().enumerate() {
                    let rate = rates.for_event(e, sites);
                    if subset >> b & 1 == 1 {
                        t ^= event_mask(e, sites);
                        w *= rate;
                    } else {
                        w *= 1.0 - rate;
                    }
                }
                if w > 0.0 {
                    targets.push(t as u32);
                    weights.push(w);
                }
            }
            row_ptr.push(targets.len());
        }
        Ok(Self { k, row_ptr, targets, weights })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn states(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[s]..self.row_ptr[s + 1];
        self.targets[range.clone()].iter().map(|&t| t as usize).zip(self.weights[range].iter().copied())
    }

    /// `out = pi P` for a row vector `pi`.
    pub fn apply(&self, pi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (s, &mass) in pi.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (t, w) in self.row(s) {
                out[t] += mass * w;
            }
        }
    }

    /// `|pi P - pi|_1`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let mut out = vec![0.0; pi.len()];
        self.apply(pi, &mut out);
        out.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Whether `reference` can be reached from every state, i.e. the chain
    /// has a single closed class.
    pub fn single_recurrent_class(&self, reference: usize) -> bool {
        let n = self.states();
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        for s in 0..n {
            for (t, _) in self.row(s) {
                preds[t].push(s as u32);
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![reference];
        seen[reference] = true;
        while let Some(t) = stack.pop() {
            for &s in &preds[t] {
                if !seen[s as usize] {
                    seen[s as usize] = true;
                    stack.push(s as usize);
                }
            }
        }
        seen.into_iter().all(|x| x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationaryMethod {
    ExactSolve,
    Simulation,
    ClosedForm,
}

impl std::fmt::Display for StationaryMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StationaryMethod::ExactSolve => "exact",
            StationaryMethod::Simulation => "simulation",
            StationaryMethod::ClosedForm => "formula",
        })
    }
}

/// A stationary measure, or the summary of one.
///
/// `probabilities` and `residual` are present for exact solves, `stderr`
/// and `samples` for simulations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub k: usize,
    pub rates: TasepRates,
    pub method: StationaryMethod,
    /// `nu(y^0 = particle, y^1 = hole)`.
    pub nu_pair: f64,
    pub probabilities: Option<Vec<f64>>,
    pub residual: Option<f64>,
    pub stderr: Option<f64>,
    pub samples: Option<u64>,
}

impl StationaryDistribution {
    pub fn probability(&self, state: &TasepState) -> Option<f64> {
        self.probabilities.as_ref().map(|p| p[state.to_index() as usize])
    }
}

/// Indicator mask of `{site 0 occupied, site 1 empty}` over state indices.
pub(crate) fn pair_indicator(k: usize, s: u64) -> bool {
    // Site 0 sits at position K - 1, site 1 at position K.
    s >> (k - 1) & 1 == 1 && s >> k & 1 == 0
}

pub(crate) fn nu_pair_of(k: usize, pi: &[f64]) -> f64 {
    pi.iter().enumerate().filter(|(s, _)| pair_indicator(k, *s as u64)).map(|(_, p)| p).sum()
}

fn check_rates_nondegenerate(rates: &TasepRates) -> Result<()> {
    for (name, r) in [("alpha", rates.alpha), ("beta", rates.beta), ("gamma", rates.gamma)] {
        if r <= 0.0 || r >= 1.0 {
            return Err(Error::Degenerate(format!("{name} = {r}: the exact solve needs every rate in (0, 1)")));
        }
    }
    Ok(())
}

/// Stationary distribution by power iteration on the sparse chain, falling
/// back to a dense direct solve when the iteration stalls.
pub fn stationary_exact(k: usize, rates: &TasepRates) -> Result<StationaryDistribution> {
    check_rates_nondegenerate(rates)?;
    let matrix = TransitionMatrix::build(k, rates)?;
    stationary_from_matrix(&matrix, rates)
}

pub fn stationary_from_matrix(matrix: &TransitionMatrix, rates: &TasepRates) -> Result<StationaryDistribution> {
    let k = matrix.k();
    let n = matrix.states();
    if !matrix.single_recurrent_class(0) {
        return Err(Error::Degenerate("the chain has more than one recurrent class".into()));
    }

    let mut pi = match power_iteration(matrix) {
        Some(pi) => pi,
        None => direct_solve(matrix)?,
    };
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    let residual = matrix.residual(&pi);
    let sum: f64 = pi.iter().sum();
    if residual > RESIDUAL_TOL || (sum - 1.0).abs() > SUM_TOL || pi.iter().any(|&x| x < -1e-15) {
        return Err(Error::Estimation(format!(
            "stationary solve for K = {k} did not meet tolerance (residual {residual:e}, sum {sum})"
        )));
    }
    pi.iter_mut().for_each(|x| *x = x.max(0.0));
    debug_assert_eq!(pi.len(), n);
    Ok(StationaryDistribution {
        k,
        rates: *rates,
        method: StationaryMethod::ExactSolve,
        nu_pair: nu_pair_of(k, &pi),
        probabilities: Some(pi),
        residual: Some(residual),
        stderr: None,
        samples: None,
    })
}

/// Returns `None` when the iteration stalls before reaching the target.
fn power_iteration(matrix: &TransitionMatrix) -> Option<Vec<f64>> {
    let n = matrix.states();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut history: Vec<f64> = Vec::new();
    for it in 0..MAX_POWER_ITERS {
        matrix.apply(&pi, &mut next);
        let residual: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if residual <= POWER_TARGET {
            return Some(pi);
        }
        if it % STALL_WINDOW == 0 {
            if let Some(&old) = history.last() {
                if (old - residual) / old < STALL_RATIO {
                    return None;
                }
            }
            history.push(residual);
        }
    }
    None
}

/// Solves `pi (P - I) = 0`, `sum(pi) = 1` with a dense LU factorisation.
fn direct_solve(matrix: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = matrix.states();
    if n > DIRECT_MAX_STATES {
        return Err(Error::Capacity(format!(
            "power iteration stalled and {n} states exceed the direct-solve limit {DIRECT_MAX_STATES}"
        )));
    }
    // Row t of A is the balance equation for state t: sum_s pi_s P[s][t] - pi_t.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        for (t, w) in matrix.row(s) {
            a[(t, s)] += w;
        }
        a[(s, s)] -= 1.0;
    }
    for s in 0..n {
        a[(n - 1, s)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or_else(|| Error::Estimation("singular balance system".into()))?;
    Ok(x.iter().copied().collect())
}

/// Dense direct solve, exposed for cross-checking the iterative path.
pub fn stationary_direct(k: usize, rates: &TasepRates) -> Result<Vec<f64>> {
    check_rates_nondegenerate(rates)?;
    let matrix = TransitionMatrix::build(k, rates)?;
    let mut pi = direct_solve(&matrix)?;
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    Ok(pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasep::tasep_step_with_draws;

    #[test]
    fn rows_are_stochastic() {
        let rates = TasepRates::new(0.3, 0.6, 0.2).unwrap();
        let m = TransitionMatrix::build(3, &rates).unwrap();
        for s in 0..m.states() {
            let total: f64 = m.row(s).map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn matrix_matches_step_enumeration() {
        // Each matrix row equals the law of tasep_step obtained by enumerating
        // every fire/no-fire pattern of the 2K+1 edge-row draws.
        let rates = TasepRates::new(0.3, 0.6, 0.2).unwrap();
        let k = 2;
        let m = TransitionMatrix::build(k, &rates).unwrap();
        for s in 0..m.states() {
            let state = TasepState::from_index(k, s as u64);
            let mut law = vec![0.0; m.states()];
            for pattern in 0..(1u32 << (2 * k + 1)) {
                let mut w = 1.0;
                let draws: Vec<f64> = (0..=2 * k)
                    .map(|e| {
                        let r = rates.for_event(e, 2 * k);
                        if pattern >> e & 1 == 1 {
                            w *= r;
                            0.0
                        } else {
                            w *= 1.0 - r;
                            1.0
                        }
                    })
                    .collect();
                let t = tasep_step_with_draws(&state, &rates, &draws).unwrap();
                law[t.to_index() as usize] += w;
            }
            let mut row = vec![0.0; m.states()];
            for (t, w) in m.row(s) {
                row[t] += w;
            }
            for t in 0..m.states() {
                assert!((law[t] - row[t]).abs() < 1e-14, "s={s} t={t}");
            }
        }
    }

    #[test]
    fn k1_stationary_residual_and_direct_agree() {
        let rates = TasepRates::uniform(0.5).unwrap();
        let st = stationary_exact(1, &rates).unwrap();
        let pi = st.probabilities.as_ref().unwrap();
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(st.residual.unwrap() <= 1e-10);
        let direct = stationary_direct(1, &rates).unwrap();
        for (a, b) in pi.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalised_for_several_sizes() {
        for k in 1..=5 {
            for eps in [0.05, 0.3, 0.9] {
                let st = stationary_exact(k, &TasepRates::uniform(eps).unwrap()).unwrap();
                let pi = st.probabilities.unwrap();
                assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(st.residual.unwrap() <= 1e-10);
                assert!((0.0..=1.0).contains(&st.nu_pair));
            }
        }
    }

    #[test]
    fn refuses_degenerate_and_large() {
        assert!(matches!(stationary_exact(2, &TasepRates::uniform(0.0).unwrap()), Err(Error::Degenerate(_))));
        assert!(matches!(stationary_exact(2, &TasepRates::uniform(1.0).unwrap()), Err(Error::Degenerate(_))));
        assert!(matches!(stationary_exact(8, &TasepRates::uniform(0.3).unwrap()), Err(Error::Capacity(_))));
    }

    #[test]
    fn direct_matches_iterative_k3() {
        let rates = TasepRates::uniform(0.2).unwrap();
        let a = stationary_exact(3, &rates).unwrap().probabilities.unwrap();
        let b = stationary_direct(3, &rates).unwrap();
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        assert!(diff < 1e-11, "{diff}");
    }
}
