//! Synchronous (parallel-update) TASEP on the `2K` sites `-K+1..=K`.
//!
//! Site `j` is stored at position `p = j + K - 1`, so position 0 is the
//! entry site `-K+1` and position `2K - 1` is the exit site `K`.
//!
//! Every possible event of one step is attached to an *edge row*
//! `e = 0..=2K` (lattice row `e - K` of the strip):
//!
//! * `e = 0`: entry at site `-K+1`, enabled when that site is empty, rate `beta`;
//! * `1 <= e <= 2K-1`: the particle at position `e - 1` jumps to position `e`,
//!   enabled when the target is empty, rate `alpha`;
//! * `e = 2K`: exit from site `K`, enabled when it is occupied, rate `gamma`.
//!
//! Equivalently, pad the occupation string with an always-occupied reservoir
//! on the left and an always-empty sink on the right; event `e` is then the
//! swap of the padded pair `(e, e + 1)` when it reads `(1, 0)`. Enabled events
//! never share a site, so all of them can fire simultaneously.

pub mod compare;
pub mod exact;
pub mod formula;
pub mod rational;
pub mod sim;

pub use compare::{nu_compare, Agreement, NuComparison};
pub use exact::{stationary_exact, StationaryDistribution, StationaryMethod, TransitionMatrix, EXACT_MAX_K};
pub use formula::{a_eps, a_eps_exact, nu_limit_k, nu_pair_formula, nu_pair_formula_exact, parse_ratio};
pub use sim::{nu_pair_simulated, SimulationConfig};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::strip::EdgeColumn;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TasepState {
    occ: Vec<bool>,
}

impl TasepState {
    pub fn new(occ: Vec<bool>) -> Result<Self> {
        if occ.len() < 2 || !occ.len().is_multiple_of(2) {
            return Err(Error::Contract(format!("state length {} is not 2K with K >= 1", occ.len())));
        }
        Ok(Self { occ })
    }

    pub fn empty(k: usize) -> Self {
        Self { occ: vec![false; 2 * k] }
    }

    pub fn full(k: usize) -> Self {
        Self { occ: vec![true; 2 * k] }
    }

    /// Occupied exactly on sites `j <= 0`: the state read off the initial
    /// profile `d[j] = |j|`.
    pub fn step_configuration(k: usize) -> Self {
        Self { occ: (0..2 * k).map(|p| p < k).collect() }
    }

    pub fn k(&self) -> usize {
        self.occ.len() / 2
    }

    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occ.is_empty()
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occ
    }

    /// Occupation of lattice site `j` in `-K+1..=K`.
    pub fn site(&self, j: i64) -> bool {
        self.occ[(j + self.k() as i64 - 1) as usize]
    }

    pub fn particles(&self) -> usize {
        self.occ.iter().filter(|&&o| o).count()
    }

    /// Bit `p` of the index is position `p`. Requires `2K <= 64`.
    pub fn to_index(&self) -> u64 {
        debug_assert!(self.occ.len() <= 64);
        self.occ.iter().enumerate().fold(0, |acc, (p, &o)| acc | ((o as u64) << p))
    }

    pub fn from_index(k: usize, index: u64) -> Self {
        Self { occ: (0..2 * k).map(|p| index >> p & 1 == 1).collect() }
    }

    /// Whether the padded pair at edge row `e` reads (particle, hole).
    pub fn event_enabled(&self, e: usize) -> bool {
        let n = self.occ.len();
        let left = if e == 0 { true } else { self.occ[e - 1] };
        let right = if e == n { false } else { self.occ[e] };
        left && !right
    }

    /// Edge rows whose event is enabled, in increasing order.
    pub fn enabled_events(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.occ.len()).filter(move |&e| self.event_enabled(e))
    }

    /// Fires every enabled event `e` with `fire(e)`, all decisions taken on `self`.
    pub fn apply_events(&self, mut fire: impl FnMut(usize) -> bool) -> TasepState {
        let n = self.occ.len();
        let mut next = self.occ.clone();
        for e in 0..=n {
            if self.event_enabled(e) && fire(e) {
                if e > 0 {
                    next[e - 1] = false;
                }
                if e < n {
                    debug_assert!(!self.occ[e], "exclusion violated at position {e}");
                    next[e] = true;
                }
            }
        }
        TasepState { occ: next }
    }
}

impl std::fmt::Display for TasepState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &o in &self.occ {
            f.write_str(if o { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Jump, entry and exit probabilities per step.
///
/// Naming follows the bullet list of the dynamics: `beta` is the entry rate
/// at site `-K+1` and `gamma` the exit rate at site `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TasepRates {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl TasepRates {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        check_probability("alpha", alpha)?;
        check_probability("beta", beta)?;
        check_probability("gamma", gamma)?;
        Ok(Self { alpha, beta, gamma })
    }

    /// All three rates equal to `eps`, the Cross-model coupling.
    pub fn uniform(eps: f64) -> Result<Self> {
        Self::new(eps, eps, eps)
    }

    /// The rate attached to edge row `e` for a system of `2K` sites.
    pub fn for_event(&self, e: usize, sites: usize) -> f64 {
        if e == 0 {
            self.beta
        } else if e == sites {
            self.gamma
        } else {
            self.alpha
        }
    }
}

/// One synchronous step driven by explicit uniforms, one per edge row
/// (`2K + 1` of them). Event `e` fires when enabled and `draws[e] < rate`.
pub fn tasep_step_with_draws(state: &TasepState, rates: &TasepRates, draws: &[f64]) -> Result<TasepState> {
    let n = state.len();
    if draws.len() != n + 1 {
        return Err(Error::Contract(format!("expected {} draws, got {}", n + 1, draws.len())));
    }
    Ok(state.apply_events(|e| draws[e] < rates.for_event(e, n)))
}

/// One synchronous step drawing `2K + 1` uniforms from `rng`.
pub fn tasep_step<R: Rng + ?Sized>(state: &TasepState, rates: &TasepRates, rng: &mut R) -> TasepState {
    let draws: Vec<f64> = (0..=state.len()).map(|_| rng.random::<f64>()).collect();
    tasep_step_with_draws(state, rates, &draws).expect("draw count matches")
}

/// The step driven by a Cross-model edge column: event `e` fires exactly
/// when the horizontal edge at row `e - K` is closed.
pub fn coupled_tasep_step(state: &TasepState, col: &EdgeColumn) -> Result<TasepState> {
    if col.horizontal.len() != state.len() + 1 {
        return Err(Error::Contract(format!(
            "edge column for K = {} does not match state with K = {}",
            col.horizontal.len() / 2,
            state.k()
        )));
    }
    if col.vertical.is_some() {
        return Err(Error::Contract("coupled step needs a cross-model column".into()));
    }
    Ok(state.apply_events(|e| !col.horizontal[e]))
}
