//! Closed-form stationary quantities.
//!
//! `A_eps(K) = (1/K) sum_{k=1..K} C(K,k) C(K,k+1) (1-eps)^k`, the pair
//! density `nu = A_eps(K) / (eps A_eps(K) + A_eps(K+1))` and its large-`K`
//! limit `(1 - sqrt(1-eps)) / (2 eps)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{check_probability, Error, Result};

/// Row `K` of Pascal's triangle, built with the multiplicative recurrence
/// `C(K, k+1) = C(K, k) (K - k) / (k + 1)`.
pub fn binomial_row(k: u64) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(k as usize + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for j in 0..k {
        c = c * BigInt::from(k - j) / BigInt::from(j + 1);
        row.push(c.clone());
    }
    row
}

/// `A_eps(K)` as an exact rational.
pub fn a_eps_exact(k: u64, eps: &BigRational) -> Result<BigRational> {
    if k == 0 {
        return Err(Error::param("K", "must be at least 1"));
    }
    if eps.is_negative() || eps > &BigRational::one() {
        return Err(Error::param("eps", format!("{eps} is not in [0, 1]")));
    }
    let row = binomial_row(k);
    let q = BigRational::one() - eps;
    let mut power = BigRational::one();
    let mut sum = BigRational::zero();
    for j in 1..=k as usize {
        power *= &q;
        if j < k as usize {
            sum += BigRational::from_integer(&row[j] * &row[j + 1]) * &power;
        }
    }
    Ok(sum / BigRational::from_integer(BigInt::from(k)))
}

/// `ln A_eps(K)` in floating point; `-inf` when the sum vanishes.
fn ln_a_eps(k: u64, eps: f64) -> f64 {
    let ln_q = (1.0 - eps).ln();
    if k < 2 || ln_q == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let kf = k as f64;
    // ln C(K, j) and ln C(K, j+1) accumulated along the row.
    let mut ln_c = kf.ln();
    let mut terms = Vec::with_capacity(k as usize);
    for j in 1..k {
        let jf = j as f64;
        let ln_c_next = ln_c + (kf - jf).ln() - (jf + 1.0).ln();
        terms.push(ln_c + ln_c_next + jf * ln_q);
        ln_c = ln_c_next;
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln() - kf.ln()
}

/// `A_eps(K)` in floating point. Overflows to infinity for very large `K`;
/// [`nu_pair_formula`] works with logarithms and does not.
pub fn a_eps(k: u64, eps: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("K", "must be at least 1"));
    }
    check_probability("eps", eps)?;
    if (2..=60).contains(&k) {
        // Direct summation is exact enough here and avoids log round-off.
        let kf = k as f64;
        let q = 1.0 - eps;
        let mut c = kf; // C(K, 1)
        let mut power = 1.0;
        let mut sum = 0.0;
        for j in 1..k {
            let jf = j as f64;
            let c_next = c * (kf - jf) / (jf + 1.0);
            power *= q;
            sum += c * c_next * power;
            c = c_next;
        }
        return Ok(sum / kf);
    }
    Ok(ln_a_eps(k, eps).exp())
}

/// The closed-form pair density.
pub fn nu_pair_formula(k: u64, eps: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("K", "must be at least 1"));
    }
    check_probability("eps", eps)?;
    if eps == 1.0 {
        return Err(Error::Degenerate("eps = 1 makes every A_eps vanish (0/0)".into()));
    }
    let ln_a = ln_a_eps(k, eps);
    let ln_b = ln_a_eps(k + 1, eps);
    if ln_a == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok(1.0 / (eps + (ln_b - ln_a).exp()))
}

/// The closed-form pair density in exact rationals.
pub fn nu_pair_formula_exact(k: u64, eps: &BigRational) -> Result<BigRational> {
    let a = a_eps_exact(k, eps)?;
    let b = a_eps_exact(k + 1, eps)?;
    let den = eps * &a + b;
    if den.is_zero() {
        return Err(Error::Degenerate("eps = 1 makes every A_eps vanish (0/0)".into()));
    }
    Ok(a / den)
}

/// `lim_{K -> inf} nu = (1 - sqrt(1-eps)) / (2 eps)`, evaluated as the
/// algebraically equal `1 / (2 (1 + sqrt(1-eps)))`, which is free of
/// cancellation and gives the continuous extension `1/4` at `eps = 0`.
pub fn nu_limit_k(eps: f64) -> Result<f64> {
    check_probability("eps", eps)?;
    Ok(1.0 / (2.0 * (1.0 + (1.0 - eps).sqrt())))
}

/// Parses `p/q`, an integer, or a decimal such as `0.19` into an exact rational.
pub fn parse_ratio(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::param("eps", format!("`{text}` is not a decimal or p/q ratio"));
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && frac.is_empty()) || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    let value = BigRational::new(digits, scale);
    Ok(if neg { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn binomials() {
        let row = binomial_row(6);
        let expect = [1, 6, 15, 20, 15, 6, 1];
        assert_eq!(row, expect.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>());
        // C(64, 32) no longer fits in an i64 product with C(64, 33).
        let row = binomial_row(64);
        assert_eq!(row[32].to_string(), "1832624140942590534");
    }

    #[test]
    fn small_values() {
        for eps in [r(0, 1), r(1, 3), r(1, 1)] {
            assert!(a_eps_exact(1, &eps).unwrap().is_zero());
        }
        assert_eq!(a_eps_exact(2, &r(0, 1)).unwrap(), r(1, 1));
        let eps = r(2, 7);
        assert_eq!(a_eps_exact(2, &eps).unwrap(), r(5, 7));
        assert_eq!(a_eps_exact(3, &r(0, 1)).unwrap(), r(4, 1));
    }

    #[test]
    fn formula_values() {
        assert!(nu_pair_formula_exact(1, &r(3, 10)).unwrap().is_zero());
        assert_eq!(nu_pair_formula_exact(2, &r(0, 1)).unwrap(), r(1, 4));
        assert_eq!(nu_pair_formula(1, 0.4).unwrap(), 0.0);
        assert!((nu_pair_formula(2, 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(nu_pair_formula(3, 1.0), Err(Error::Degenerate(_))));
        assert!(matches!(nu_pair_formula_exact(3, &r(1, 1)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn float_agrees_with_exact() {
        for eps_text in ["0", "0.1", "0.19", "1/3", "0.5", "0.97"] {
            let eps_q = parse_ratio(eps_text).unwrap();
            let eps = eps_q.to_f64().unwrap();
            for k in 1..=60u64 {
                let exact = a_eps_exact(k, &eps_q).unwrap().to_f64().unwrap();
                let float = a_eps(k, eps).unwrap();
                if exact == 0.0 {
                    assert_eq!(float, 0.0);
                } else {
                    assert!(((float - exact) / exact).abs() < 1e-12, "K={k} eps={eps_text}");
                }
                let nu_exact = nu_pair_formula_exact(k, &eps_q).unwrap().to_f64().unwrap();
                let nu_float = nu_pair_formula(k, eps).unwrap();
                assert!((nu_exact - nu_float).abs() <= 1e-12 * nu_exact.max(1e-300), "K={k}");
            }
        }
    }

    #[test]
    fn limit_values() {
        assert!((nu_limit_k(0.19).unwrap() - 0.1 / 0.38).abs() < 1e-15);
        assert_eq!(nu_limit_k(1.0).unwrap(), 0.5);
        assert_eq!(nu_limit_k(0.0).unwrap(), 0.25);
        assert!(nu_limit_k(-0.01).is_err());
        assert!(nu_limit_k(1.01).is_err());
        let printed = |e: f64| (1.0 - (1.0 - e).sqrt()) / (2.0 * e);
        for e in [0.1, 0.3, 0.7] {
            assert!((nu_limit_k(e).unwrap() - printed(e)).abs() < 1e-15);
        }
    }

    #[test]
    fn formula_tends_to_limit() {
        for eps in [0.1, 0.19, 0.5] {
            let limit = nu_limit_k(eps).unwrap();
            let gaps: Vec<f64> = (150..=200).map(|k| (nu_pair_formula(k, eps).unwrap() - limit).abs()).collect();
            assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-15), "eps={eps} tail not monotone");
            assert!(gaps.last().unwrap() < &5e-3, "eps={eps}: {}", gaps.last().unwrap());
        }
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!(parse_ratio("0.2").unwrap(), r(1, 5));
        assert_eq!(parse_ratio("3/15").unwrap(), r(1, 5));
        assert_eq!(parse_ratio("1").unwrap(), r(1, 1));
        assert_eq!(parse_ratio(".5").unwrap(), r(1, 2));
        assert!(parse_ratio("abc").is_err());
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("").is_err());
    }
}
