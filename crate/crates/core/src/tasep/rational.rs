//! Exact rational computations on the chain with all rates equal to a
//! rational `eps = p / q`.
//!
//! Every transition probability is written over the common denominator
//! `q^{2K+1}` (one factor per edge row), so distributions propagate with
//! integer numerators only.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::exact::{enabled_events, event_mask, pair_indicator};
use crate::error::{Error, Result};

/// Largest half-width for the rational stationary solve (64 states).
pub const RATIONAL_SOLVE_MAX_K: usize = 3;
/// Largest half-width for rational distribution propagation (256 states).
pub const RATIONAL_PROPAGATE_MAX_K: usize = 4;

/// Integer transition weights: `P[s][t] = weight / q^{2K+1}`.
#[derive(Debug, Clone)]
pub struct IntegerChain {
    k: usize,
    denominator: BigInt,
    rows: Vec<Vec<(usize, BigInt)>>,
}

fn split_eps(eps: &BigRational) -> Result<(BigInt, BigInt)> {
    if !eps.is_positive() || eps >= &BigRational::one() {
        return Err(Error::Degenerate(format!("eps = {eps} must lie strictly between 0 and 1")));
    }
    Ok((eps.numer().clone(), eps.denom().clone()))
}

impl IntegerChain {
    pub fn build(k: usize, eps: &BigRational, max_k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("K", "must be at least 1"));
        }
        if k > max_k {
            return Err(Error::Capacity(format!("K = {k} exceeds the rational limit K <= {max_k}")));
        }
        let (p, q) = split_eps(eps)?;
        let sites = 2 * k;
        let rows_count = 1usize << sites;
        let open = &q - &p;
        let mut rows = Vec::with_capacity(rows_count);
        for s in 0..rows_count as u64 {
            let events = enabled_events(s, sites);
            let m = events.len();
            let free = num_traits::pow(q.clone(), sites + 1 - m);
            let mut row = Vec::with_capacity(1 << m);
            for subset in 0..(1u64 << m) {
                let fired = subset.count_ones() as usize;
                let t = events
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| subset >> b & 1 == 1)
                    .fold(s, |t, (_, &e)| t ^ event_mask(e, sites));
                let w = num_traits::pow(p.clone(), fired) * num_traits::pow(open.clone(), m - fired) * &free;
                row.push((t as usize, w));
            }
            rows.push(row);
        }
        Ok(Self { k, denominator: num_traits::pow(q, sites + 1), rows })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn states(&self) -> usize {
        self.rows.len()
    }

    /// One step on integer numerators (the common denominator grows by `q^{2K+1}`).
    pub fn apply(&self, numerators: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); numerators.len()];
        for (s, mass) in numerators.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            for (t, w) in &self.rows[s] {
                out[*t] += mass * w;
            }
        }
        out
    }

    /// Exact `P(Y_j^0 = particle, Y_j^1 = hole)` for `j = 0..steps`, starting
    /// from the point mass at state index `start`.
    pub fn pair_probabilities(&self, start: usize, steps: usize) -> Vec<BigRational> {
        let mut num = vec![BigInt::zero(); self.states()];
        num[start] = BigInt::one();
        let mut den = BigInt::one();
        let mut out = Vec::with_capacity(steps);
        for j in 0..steps {
            let hits: BigInt =
                num.iter().enumerate().filter(|(s, _)| pair_indicator(self.k, *s as u64)).map(|(_, x)| x).sum();
            out.push(BigRational::new(hits, den.clone()));
            if j + 1 < steps {
                num = self.apply(&num);
                den *= &self.denominator;
            }
        }
        out
    }

    /// The stationary distribution by Gauss-Jordan elimination over the
    /// rationals on `pi (P - I) = 0`, `sum(pi) = 1`.
    pub fn stationary(&self) -> Result<Vec<BigRational>> {
        let n = self.states();
        let d = BigRational::from_integer(self.denominator.clone());
        let mut a = vec![vec![BigRational::zero(); n + 1]; n];
        for (s, row) in self.rows.iter().enumerate() {
            for (t, w) in row {
                a[*t][s] += BigRational::new(w.clone(), BigInt::one()) / &d;
            }
            a[s][s] -= BigRational::one();
        }
        for cell in a[n - 1].iter_mut().take(n) {
            *cell = BigRational::one();
        }
        a[n - 1][n] = BigRational::one();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a[r][col].is_zero())
                .ok_or_else(|| Error::Degenerate("singular balance system".into()))?;
            a.swap(col, pivot);
            let inv = a[col][col].recip();
            for x in &mut a[col][col..] {
                *x = &*x * &inv;
            }
            let pivot_row = a[col].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r == col || row[col].is_zero() {
                    continue;
                }
                let factor = row[col].clone();
                for c in col..=n {
                    if !pivot_row[c].is_zero() {
                        row[c] -= &factor * &pivot_row[c];
                    }
                }
            }
        }
        Ok(a.into_iter().map(|row| row[n].clone()).collect())
    }
}

/// Exact stationary `nu(y^0 = particle, y^1 = hole)` for a rational `eps`.
pub fn nu_pair_exact_rational(k: usize, eps: &BigRational) -> Result<BigRational> {
    let chain = IntegerChain::build(k, eps, RATIONAL_SOLVE_MAX_K)?;
    let pi = chain.stationary()?;
    Ok(pi.into_iter().enumerate().filter(|(s, _)| pair_indicator(k, *s as u64)).map(|(_, x)| x).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasep::{stationary_exact, TasepRates};
    use num_traits::ToPrimitive;

    #[test]
    fn k1_closed_form() {
        // K = 1 by hand, states (y^0, y^1):
        //   00 -> 10 (eps);  10 -> 01 (eps);  11 -> 10 (eps);
        //   01 -> 10 (eps^2), 11 (eps(1-eps)), 00 (eps(1-eps)).
        // Balance: pi_00 = pi_11 = (1-eps) c, pi_10 = (2-eps) c, pi_01 = c,
        // so nu = (2 - eps) / (5 - 3 eps).
        for (p, q) in [(1, 2), (1, 10), (3, 10), (7, 9)] {
            let eps = BigRational::new(p.into(), q.into());
            let two = BigRational::from_integer(2.into());
            let expect =
                (&two - &eps) / (BigRational::from_integer(5.into()) - BigRational::from_integer(3.into()) * &eps);
            assert_eq!(nu_pair_exact_rational(1, &eps).unwrap(), expect);
            let float = stationary_exact(1, &TasepRates::uniform(p as f64 / q as f64).unwrap()).unwrap().nu_pair;
            assert!((expect.to_f64().unwrap() - float).abs() < 1e-12);
        }
    }

    #[test]
    fn rational_matches_float_k3() {
        let eps = BigRational::new(1.into(), 5.into());
        let nu = nu_pair_exact_rational(3, &eps).unwrap().to_f64().unwrap();
        let float = stationary_exact(3, &TasepRates::uniform(0.2).unwrap()).unwrap().nu_pair;
        assert!((nu - float).abs() < 1e-11, "{nu} vs {float}");
    }

    #[test]
    fn stationary_is_invariant_exactly() {
        let eps = BigRational::new(3.into(), 10.into());
        let chain = IntegerChain::build(2, &eps, RATIONAL_SOLVE_MAX_K).unwrap();
        let pi = chain.stationary().unwrap();
        let total: BigRational = pi.iter().cloned().sum();
        assert!(total.is_one());
        // Invariance pi P = pi, checked on integer numerators.
        let den = pi.iter().fold(BigInt::one(), |acc, x| num_integer::lcm(acc, x.denom().clone()));
        let num: Vec<BigInt> = pi.iter().map(|x| x.numer() * (&den / x.denom())).collect();
        let next = chain.apply(&num);
        for (a, b) in next.iter().zip(&num) {
            assert_eq!(a, &(b * &chain.denominator));
        }
    }

    #[test]
    fn limits() {
        let half = BigRational::new(1.into(), 2.into());
        assert!(matches!(IntegerChain::build(4, &half, 3), Err(Error::Capacity(_))));
        assert!(matches!(IntegerChain::build(2, &BigRational::zero(), 3), Err(Error::Degenerate(_))));
        assert!(matches!(IntegerChain::build(2, &BigRational::one(), 3), Err(Error::Degenerate(_))));
    }
}
