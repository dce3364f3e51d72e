//! Closed-form pair density against the numerical stationary solve.

use serde::{Deserialize, Serialize};

use super::exact::{stationary_exact, EXACT_MAX_K};
use super::formula::nu_pair_formula;
use super::TasepRates;
use crate::error::{check_probability, Error, Result};

/// Absolute difference below which the two values count as agreeing.
pub const AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Agreement {
    Agree,
    Discrepant,
}

impl std::fmt::Display for Agreement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Agreement::Agree => "AGREE",
            Agreement::Discrepant => "DISCREPANT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuComparison {
    pub k: usize,
    pub eps: f64,
    pub formula: f64,
    pub exact: f64,
    /// `|pi P - pi|_1` of the solved distribution.
    pub residual: f64,
    pub abs_diff: f64,
    pub status: Agreement,
}

/// One row per `K` in `1..=k_max`.
pub fn nu_compare(eps: f64, k_max: usize) -> Result<Vec<NuComparison>> {
    check_probability("eps", eps)?;
    if k_max == 0 {
        return Err(Error::param("K_max", "must be at least 1"));
    }
    if k_max > EXACT_MAX_K {
        return Err(Error::Capacity(format!("K_max = {k_max} exceeds the exact limit {EXACT_MAX_K}")));
    }
    let rates = TasepRates::uniform(eps)?;
    (1..=k_max)
        .map(|k| {
            let formula = nu_pair_formula(k as u64, eps)?;
            let solved = stationary_exact(k, &rates)?;
            // The solver refuses distributions above RESIDUAL_TOL.
            let residual = solved.residual.unwrap_or(f64::NAN);
            let abs_diff = (formula - solved.nu_pair).abs();
            Ok(NuComparison {
                k,
                eps,
                formula,
                exact: solved.nu_pair,
                residual,
                abs_diff,
                status: if abs_diff <= AGREEMENT_TOL { Agreement::Agree } else { Agreement::Discrepant },
            })
        })
        .collect()
}
