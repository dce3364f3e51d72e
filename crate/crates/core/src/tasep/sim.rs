//! Long-run simulation of the uniform-rate chain (`alpha = beta = gamma = eps`).
//!
//! The state is kept as a padded bit string `x` of length `2K + 2`: bit 0 is
//! an always-occupied reservoir, bits `1..=2K` are the sites, bit `2K + 1` an
//! always-empty sink. With `C` the mask of edge rows whose event is drawn to
//! fire, one step is
//!
//! ```text
//! M = x & !(x >> 1) & C;   x ^= M ^ (M << 1);   restore reservoir and sink
//! ```
//!
//! Closed edge rows are drawn by geometric skipping: each uniform `U` gives
//! the gap `floor(ln U / ln(1 - eps))` to the next closed row, so a step
//! consumes one uniform per closed row plus one.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::exact::{StationaryDistribution, StationaryMethod};
use super::{TasepRates, TasepState};
use crate::error::{check_probability, Error, Result};
use crate::rng::unit_f64;
use crate::stats::Accumulator;

pub const DEFAULT_BATCH: u64 = 1000;

/// Word-packed padded state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitTasep {
    k: usize,
    words: Vec<u64>,
    scratch_m: Vec<u64>,
}

impl BitTasep {
    pub fn new(state: &TasepState) -> Self {
        let k = state.k();
        let bits = 2 * k + 2;
        let mut words = vec![0u64; bits.div_ceil(64)];
        words[0] |= 1;
        for (p, &o) in state.occupancy().iter().enumerate() {
            if o {
                words[(p + 1) / 64] |= 1 << ((p + 1) % 64);
            }
        }
        let scratch_m = vec![0; words.len()];
        Self { k, words, scratch_m }
    }

    pub fn state(&self) -> TasepState {
        let occ = (1..=2 * self.k).map(|q| self.bit(q)).collect();
        TasepState::new(occ).expect("even length")
    }

    #[inline]
    fn bit(&self, q: usize) -> bool {
        self.words[q / 64] >> (q % 64) & 1 == 1
    }

    /// Whether site 0 is occupied and site 1 empty (padded bits `K`, `K + 1`).
    #[inline]
    pub fn pair(&self) -> bool {
        self.bit(self.k) && !self.bit(self.k + 1)
    }

    /// One step; `closed` has bit `e` set when event row `e` is drawn to fire.
    #[allow(clippy::needless_range_loop)]
    pub fn step(&mut self, closed: &[u64]) {
        let w = self.words.len();
        for i in 0..w {
            let next = if i + 1 < w { self.words[i + 1] } else { 0 };
            let shifted = (self.words[i] >> 1) | (next << 63);
            self.scratch_m[i] = self.words[i] & !shifted & closed[i];
        }
        let mut carry = 0u64;
        for i in 0..w {
            let m = self.scratch_m[i];
            self.words[i] ^= m ^ ((m << 1) | carry);
            carry = m >> 63;
        }
        let sink = 2 * self.k + 1;
        self.words[0] |= 1;
        self.words[sink / 64] &= !(1 << (sink % 64));
    }
}

/// Samples the closed-row mask over rows `0..=2K` by geometric skipping.
pub(crate) struct ClosedMaskSampler {
    rows: usize,
    eps: f64,
    ln_open: f64,
    mask: Vec<u64>,
}

impl ClosedMaskSampler {
    pub(crate) fn new(k: usize, eps: f64) -> Self {
        let rows = 2 * k + 1;
        Self { rows, eps, ln_open: (1.0 - eps).ln(), mask: vec![0; (rows + 1).div_ceil(64)] }
    }

    pub(crate) fn sample<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> &[u64] {
        self.mask.iter_mut().for_each(|w| *w = 0);
        if self.eps >= 1.0 {
            for e in 0..self.rows {
                self.mask[e / 64] |= 1 << (e % 64);
            }
        } else if self.eps > 0.0 {
            let mut pos: usize = 0;
            loop {
                let u = 1.0 - unit_f64(rng.next_u64());
                let gap = (u.ln() / self.ln_open).floor();
                if gap >= (self.rows - pos) as f64 {
                    break;
                }
                pos += gap as usize;
                self.mask[pos / 64] |= 1 << (pos % 64);
                pos += 1;
                if pos >= self.rows {
                    break;
                }
            }
        }
        &self.mask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub burn_in: u64,
    pub samples: u64,
    /// Batch length for the batch-means standard error.
    pub batch: u64,
}

impl SimulationConfig {
    pub fn new(burn_in: u64, samples: u64) -> Self {
        Self { burn_in, samples, batch: DEFAULT_BATCH }
    }
}

/// Empirical `nu(y^0 = particle, y^1 = hole)` from one long trajectory
/// started at the step configuration.
///
/// The estimate is the fraction of the `samples` post-burn-in states with the
/// pair present; the standard error comes from non-overlapping batch means.
pub fn nu_pair_simulated<R: Rng + ?Sized>(
    k: usize,
    eps: f64,
    config: SimulationConfig,
    rng: &mut R,
) -> Result<StationaryDistribution> {
    if k == 0 {
        return Err(Error::param("K", "must be at least 1"));
    }
    check_probability("eps", eps)?;
    if config.burn_in == 0 {
        return Err(Error::param("burn_in", "must be positive"));
    }
    if config.batch == 0 {
        return Err(Error::param("batch", "must be positive"));
    }
    if config.samples < 2 * config.batch {
        return Err(Error::param("samples", format!("need at least two batches of {}", config.batch)));
    }

    let mut chain = BitTasep::new(&TasepState::step_configuration(k));
    let mut sampler = ClosedMaskSampler::new(k, eps);
    for _ in 0..config.burn_in {
        chain.step(sampler.sample(rng));
    }
    let mut hits = 0u64;
    let mut batch_hits = 0u64;
    let mut batches = Accumulator::new();
    for t in 1..=config.samples {
        chain.step(sampler.sample(rng));
        if chain.pair() {
            hits += 1;
            batch_hits += 1;
        }
        if t % config.batch == 0 {
            batches.push(batch_hits as f64 / config.batch as f64);
            batch_hits = 0;
        }
    }
    Ok(StationaryDistribution {
        k,
        rates: TasepRates::uniform(eps)?,
        method: StationaryMethod::Simulation,
        nu_pair: hits as f64 / config.samples as f64,
        probabilities: None,
        residual: None,
        stderr: Some(batches.stderr()),
        samples: Some(config.samples),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;
    use crate::strip::{sample_column, EdgeColumn, StripGeometry};
    use crate::tasep::{coupled_tasep_step, stationary_exact};

    fn mask_of(col: &EdgeColumn) -> Vec<u64> {
        let mut m = vec![0u64; (col.horizontal.len() + 1).div_ceil(64)];
        for (e, &open) in col.horizontal.iter().enumerate() {
            if !open {
                m[e / 64] |= 1 << (e % 64);
            }
        }
        m
    }

    #[test]
    fn bit_step_matches_coupled_step() {
        for k in [1usize, 2, 5, 31, 32, 40] {
            let geom = StripGeometry::cross(k).unwrap();
            let mut rng = replica_rng(11, k as u64);
            let mut state = TasepState::step_configuration(k);
            let mut bits = BitTasep::new(&state);
            for _ in 0..2000 {
                let col = sample_column(&mut rng, &geom, 0.35).unwrap();
                state = coupled_tasep_step(&state, &col).unwrap();
                bits.step(&mask_of(&col));
                assert_eq!(bits.state(), state, "K={k}");
                assert_eq!(bits.pair(), state.site(0) && !state.site(1));
            }
        }
    }

    #[test]
    fn geometric_mask_has_right_density() {
        for eps in [0.01, 0.19, 0.7] {
            let k = 20;
            let mut sampler = ClosedMaskSampler::new(k, eps);
            let mut rng = replica_rng(5, 0);
            let mut per_row = vec![0u64; 2 * k + 1];
            let steps = 200_000;
            for _ in 0..steps {
                let m = sampler.sample(&mut rng).to_vec();
                for (e, slot) in per_row.iter_mut().enumerate() {
                    *slot += m[e / 64] >> (e % 64) & 1;
                }
                assert_eq!(m[(2 * k + 1) / 64] >> ((2 * k + 1) % 64), 0);
            }
            let se = (eps * (1.0 - eps) / steps as f64).sqrt();
            for (e, &c) in per_row.iter().enumerate() {
                let p = c as f64 / steps as f64;
                assert!((p - eps).abs() < 5.0 * se, "eps={eps} row={e} p={p}");
            }
        }
    }

    #[test]
    fn degenerate_masks() {
        let mut rng = replica_rng(0, 0);
        let mut none = ClosedMaskSampler::new(3, 0.0);
        assert!(none.sample(&mut rng).iter().all(|&w| w == 0));
        let mut all = ClosedMaskSampler::new(3, 1.0);
        assert_eq!(all.sample(&mut rng)[0], 0b111_1111);
    }

    #[test]
    fn simulation_matches_exact_small_k() {
        for (k, eps) in [(1usize, 0.5), (2, 0.3), (4, 0.4)] {
            let exact = stationary_exact(k, &TasepRates::uniform(eps).unwrap()).unwrap().nu_pair;
            let sim =
                nu_pair_simulated(k, eps, SimulationConfig::new(10_000, 2_000_000), &mut replica_rng(1, k as u64))
                    .unwrap();
            let se = sim.stderr.unwrap();
            assert!((sim.nu_pair - exact).abs() < 4.0 * se, "K={k}: {} vs {exact} (se {se})", sim.nu_pair);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut rng = replica_rng(0, 0);
        assert!(nu_pair_simulated(0, 0.1, SimulationConfig::new(10, 10_000), &mut rng).is_err());
        assert!(nu_pair_simulated(2, 0.1, SimulationConfig::new(0, 10_000), &mut rng).is_err());
        assert!(nu_pair_simulated(2, 0.1, SimulationConfig::new(10, 1500), &mut rng).is_err());
        assert!(nu_pair_simulated(2, 1.1, SimulationConfig::new(10, 10_000), &mut rng).is_err());
    }
}
