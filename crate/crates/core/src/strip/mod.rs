//! Percolation on the strip `Z x [-K, K]`.
//!
//! Two models share the same edge layout:
//!
//! * **Cross**: horizontal edges are random, vertical edges (length 1) and
//!   both diagonals `(i, j) -> (i + 1, j +- 1)` (length 2) are always open.
//! * **Standard**: horizontal and vertical edges are random, no diagonals.
//!
//! Rows are stored by offset `r = j + K`, so row `-K` is index 0. Edge flags
//! are `true` when the edge is open.

mod format;
mod oracle;
mod standard;

pub use oracle::{oracle_distances, shortest_path_oracle, Vertex};
pub use standard::{
    check_event_a, estimate_event_a_failure, event_a_pathwise_check, standard_distance, EventABox, EventAEstimate,
    PathwiseBoundReport,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Cross,
    Standard,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Cross => "cross",
            Model::Standard => "standard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StripGeometry {
    k: usize,
    model: Model,
}

impl StripGeometry {
    pub fn new(k: usize, model: Model) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("K", "half-width must be at least 1"));
        }
        Ok(Self { k, model })
    }

    pub fn cross(k: usize) -> Result<Self> {
        Self::new(k, Model::Cross)
    }

    pub fn standard(k: usize) -> Result<Self> {
        Self::new(k, Model::Standard)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn model(&self) -> Model {
        self.model
    }

    /// Number of rows, `2K + 1`.
    pub fn rows(&self) -> usize {
        2 * self.k + 1
    }

    /// Row offset of lattice row `j`.
    pub fn row_index(&self, j: i64) -> Option<usize> {
        let r = j + self.k as i64;
        (0..self.rows() as i64).contains(&r).then_some(r as usize)
    }

    pub fn row_of(&self, index: usize) -> i64 {
        index as i64 - self.k as i64
    }

    pub fn with_model(&self, model: Model) -> Self {
        Self { k: self.k, model }
    }
}

/// The random edges between column `i` and column `i + 1`.
///
/// `horizontal[r]` is the edge `(i, j) -> (i + 1, j)`; `vertical[r]`, present
/// only in the standard model, is the edge `(i + 1, j) -> (i + 1, j + 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeColumn {
    pub horizontal: Vec<bool>,
    pub vertical: Option<Vec<bool>>,
}

impl EdgeColumn {
    pub fn all_open(geom: &StripGeometry) -> Self {
        Self::uniform(geom, true)
    }

    pub fn all_closed(geom: &StripGeometry) -> Self {
        Self::uniform(geom, false)
    }

    fn uniform(geom: &StripGeometry, open: bool) -> Self {
        Self {
            horizontal: vec![open; geom.rows()],
            vertical: match geom.model() {
                Model::Cross => None,
                Model::Standard => Some(vec![open; 2 * geom.k()]),
            },
        }
    }

    pub fn check(&self, geom: &StripGeometry) -> Result<()> {
        if self.horizontal.len() != geom.rows() {
            return Err(Error::Contract(format!(
                "edge column has {} horizontal flags, expected {}",
                self.horizontal.len(),
                geom.rows()
            )));
        }
        match (geom.model(), &self.vertical) {
            (Model::Cross, None) => Ok(()),
            (Model::Cross, Some(_)) => Err(Error::Contract("cross-model column carries vertical flags".into())),
            (Model::Standard, Some(v)) if v.len() == 2 * geom.k() => Ok(()),
            (Model::Standard, Some(v)) => {
                Err(Error::Contract(format!("edge column has {} vertical flags, expected {}", v.len(), 2 * geom.k())))
            }
            (Model::Standard, None) => Err(Error::Contract("standard-model column lacks vertical flags".into())),
        }
    }

    pub fn closed_count(&self) -> usize {
        self.horizontal.iter().filter(|&&o| !o).count() + self.vertical.iter().flatten().filter(|&&o| !o).count()
    }
}

/// Draws one edge column.
///
/// Consumes exactly one `f64` uniform per flag: the `2K + 1` horizontal
/// flags in row order, then (standard model) the `2K` vertical flags in row
/// order. A flag is closed when its uniform is below `eps`.
pub fn sample_column<R: Rng + ?Sized>(rng: &mut R, geom: &StripGeometry, eps: f64) -> Result<EdgeColumn> {
    check_probability("eps", eps)?;
    Ok(sample_column_unchecked(rng, geom, eps))
}

pub(crate) fn sample_column_unchecked<R: Rng + ?Sized>(rng: &mut R, geom: &StripGeometry, eps: f64) -> EdgeColumn {
    let horizontal = sample_flags(rng, geom.rows(), eps);
    let vertical = match geom.model() {
        Model::Cross => None,
        Model::Standard => Some(sample_flags(rng, 2 * geom.k(), eps)),
    };
    EdgeColumn { horizontal, vertical }
}

fn sample_flags<R: Rng + ?Sized>(rng: &mut R, len: usize, eps: f64) -> Vec<bool> {
    (0..len).map(|_| rng.random::<f64>() >= eps).collect()
}

/// A materialized strip segment: columns `0..=n` and the edges between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripEdges {
    geometry: StripGeometry,
    /// Vertical edges of column 0 (standard model only).
    column0_vertical: Option<Vec<bool>>,
    columns: Vec<EdgeColumn>,
}

impl StripEdges {
    pub fn new(geometry: StripGeometry, column0_vertical: Option<Vec<bool>>, columns: Vec<EdgeColumn>) -> Result<Self> {
        match (geometry.model(), &column0_vertical) {
            (Model::Cross, None) => {}
            (Model::Standard, Some(v)) if v.len() == 2 * geometry.k() => {}
            _ => return Err(Error::Contract("column-0 verticals do not match the model".into())),
        }
        for col in &columns {
            col.check(&geometry)?;
        }
        Ok(Self { geometry, column0_vertical, columns })
    }

    pub fn all_open(geometry: StripGeometry, n: usize) -> Self {
        Self::uniform(geometry, n, true)
    }

    pub fn all_closed(geometry: StripGeometry, n: usize) -> Self {
        Self::uniform(geometry, n, false)
    }

    fn uniform(geometry: StripGeometry, n: usize, open: bool) -> Self {
        let column0_vertical = match geometry.model() {
            Model::Cross => None,
            Model::Standard => Some(vec![open; 2 * geometry.k()]),
        };
        let columns = (0..n).map(|_| EdgeColumn::uniform(&geometry, open)).collect();
        Self { geometry, column0_vertical, columns }
    }

    /// Samples `n` columns. Standard model: the `2K` column-0 verticals are
    /// drawn first, then each column as in [`sample_column`].
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, geometry: StripGeometry, eps: f64, n: usize) -> Result<Self> {
        check_probability("eps", eps)?;
        let column0_vertical = match geometry.model() {
            Model::Cross => None,
            Model::Standard => Some(sample_flags(rng, 2 * geometry.k(), eps)),
        };
        let columns = (0..n).map(|_| sample_column_unchecked(rng, &geometry, eps)).collect();
        Ok(Self { geometry, column0_vertical, columns })
    }

    pub fn geometry(&self) -> &StripGeometry {
        &self.geometry
    }

    pub fn columns(&self) -> &[EdgeColumn] {
        &self.columns
    }

    pub fn columns_mut(&mut self) -> &mut [EdgeColumn] {
        &mut self.columns
    }

    pub fn column0_vertical(&self) -> Option<&[bool]> {
        self.column0_vertical.as_deref()
    }

    pub fn column0_vertical_mut(&mut self) -> Option<&mut Vec<bool>> {
        self.column0_vertical.as_mut()
    }

    /// Index of the last materialized vertex column.
    pub fn last_column(&self) -> usize {
        self.columns.len()
    }

    /// Whether the vertical edge `(i, j) -> (i, j + 1)` is open (row offset `r` of `j`).
    pub fn vertical_open(&self, i: usize, r: usize) -> bool {
        match self.geometry.model() {
            Model::Cross => true,
            Model::Standard => {
                let flags = if i == 0 { self.column0_vertical.as_ref() } else { self.columns[i - 1].vertical.as_ref() };
                flags.expect("standard model carries verticals")[r]
            }
        }
    }

    /// Whether the horizontal edge `(i, j) -> (i + 1, j)` is open.
    pub fn horizontal_open(&self, i: usize, r: usize) -> bool {
        self.columns[i].horizontal[r]
    }

    /// The Cross-model configuration sharing these horizontal edges.
    pub fn to_cross(&self) -> Self {
        let geometry = self.geometry.with_model(Model::Cross);
        let columns =
            self.columns.iter().map(|c| EdgeColumn { horizontal: c.horizontal.clone(), vertical: None }).collect();
        Self { geometry, column0_vertical: None, columns }
    }

    /// Truncates to the first `n` columns.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            geometry: self.geometry,
            column0_vertical: self.column0_vertical.clone(),
            columns: self.columns[..n.min(self.columns.len())].to_vec(),
        }
    }
}

/// Distances from the origin to every vertex of one column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub column: u64,
    pub d: Vec<u64>,
}

impl DistanceProfile {
    /// Column 0 seen from `(0, 0)` in the Cross model: `d[j] = |j|`.
    pub fn initial(k: usize) -> Self {
        let d = (0..=2 * k).map(|r| (r as i64 - k as i64).unsigned_abs()).collect();
        Self { column: 0, d }
    }

    pub fn k(&self) -> usize {
        self.d.len() / 2
    }

    /// Distance at lattice row `j`.
    pub fn at(&self, j: i64) -> u64 {
        self.d[(j + self.k() as i64) as usize]
    }

    /// Checks the Cross-model invariants: odd length, neighbours differ by
    /// exactly one, and `d[j] = column + j (mod 2)`.
    pub fn validate(&self) -> Result<()> {
        if self.d.len() < 3 || self.d.len().is_multiple_of(2) {
            return Err(Error::Contract(format!("profile length {} is not 2K+1 with K >= 1", self.d.len())));
        }
        let k = self.k() as i64;
        for (r, w) in self.d.windows(2).enumerate() {
            if w[0].abs_diff(w[1]) != 1 {
                return Err(Error::Contract(format!(
                    "profile at column {} rows {} and {} differ by {}",
                    self.column,
                    r as i64 - k,
                    r as i64 - k + 1,
                    w[0].abs_diff(w[1])
                )));
            }
        }
        let parity = (self.column as i64 - k).rem_euclid(2) as u64;
        if self.d[0] % 2 != parity {
            return Err(Error::Contract(format!(
                "profile at column {} has the wrong parity at row {}",
                self.column, -k
            )));
        }
        Ok(())
    }
}

/// One column of the Cross-model distance sweep.
///
/// `D(i + 1, j)` is the best of the horizontal step (when open) and the two
/// diagonals, then relaxed along the open verticals of column `i + 1` by an
/// upward and a downward pass.
pub fn cross_step(profile: &DistanceProfile, col: &EdgeColumn) -> Result<DistanceProfile> {
    profile.validate()?;
    let geom = StripGeometry::cross(profile.k())?;
    col.check(&geom)?;
    let mut next = Vec::with_capacity(profile.d.len());
    cross_step_into(&profile.d, &col.horizontal, &mut next);
    Ok(DistanceProfile { column: profile.column + 1, d: next })
}

pub(crate) fn cross_step_into(d: &[u64], horizontal: &[bool], next: &mut Vec<u64>) {
    let m = d.len();
    next.clear();
    next.extend((0..m).map(|r| {
        let mut best = u64::MAX;
        if horizontal[r] {
            best = d[r] + 1;
        }
        if r > 0 {
            best = best.min(d[r - 1] + 2);
        }
        if r + 1 < m {
            best = best.min(d[r + 1] + 2);
        }
        best
    }));
    for r in 1..m {
        next[r] = next[r].min(next[r - 1] + 1);
    }
    for r in (0..m - 1).rev() {
        next[r] = next[r].min(next[r + 1] + 1);
    }
}

/// Sweeps the Cross model from the source `(0, 0)`; returns the profiles of
/// columns `0..=n` where `n` is the number of materialized columns.
pub fn sweep_cross(edges: &StripEdges) -> Result<Vec<DistanceProfile>> {
    if edges.geometry().model() != Model::Cross {
        return Err(Error::Contract("cross sweep requires the cross model".into()));
    }
    let mut out = Vec::with_capacity(edges.columns().len() + 1);
    out.push(DistanceProfile::initial(edges.geometry().k()));
    for col in edges.columns() {
        let prev = out.last().expect("non-empty");
        let mut d = Vec::with_capacity(prev.d.len());
        cross_step_into(&prev.d, &col.horizontal, &mut d);
        out.push(DistanceProfile { column: prev.column + 1, d });
    }
    Ok(out)
}

/// `D^{K,d}(n, 0)` for the Cross model, `n` = number of materialized columns.
pub fn cross_distance_axis(edges: &StripEdges) -> Result<u64> {
    if edges.geometry().model() != Model::Cross {
        return Err(Error::Contract("cross sweep requires the cross model".into()));
    }
    let k = edges.geometry().k();
    let mut d = DistanceProfile::initial(k).d;
    let mut next = Vec::with_capacity(d.len());
    for col in edges.columns() {
        cross_step_into(&d, &col.horizontal, &mut next);
        std::mem::swap(&mut d, &mut next);
    }
    Ok(d[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;

    #[test]
    fn geometry_rejects_zero_width() {
        assert!(StripGeometry::cross(0).is_err());
        assert_eq!(StripGeometry::cross(3).unwrap().rows(), 7);
    }

    #[test]
    fn degenerate_sampling() {
        let geom = StripGeometry::standard(3).unwrap();
        for seed in 0..5 {
            let mut rng = replica_rng(seed, 0);
            let open = sample_column(&mut rng, &geom, 0.0).unwrap();
            assert_eq!(open, EdgeColumn::all_open(&geom));
            let closed = sample_column(&mut rng, &geom, 1.0).unwrap();
            assert_eq!(closed, EdgeColumn::all_closed(&geom));
        }
    }

    #[test]
    fn sampling_rejects_bad_eps() {
        let geom = StripGeometry::cross(2).unwrap();
        let mut rng = replica_rng(0, 0);
        assert!(matches!(sample_column(&mut rng, &geom, 1.5), Err(Error::Parameter { .. })));
        assert!(matches!(sample_column(&mut rng, &geom, -0.1), Err(Error::Parameter { .. })));
    }

    #[test]
    fn sampling_consumes_fixed_draws() {
        use rand::RngCore;
        let geom = StripGeometry::standard(2).unwrap();
        let mut a = replica_rng(9, 3);
        let mut b = replica_rng(9, 3);
        sample_column(&mut a, &geom, 0.4).unwrap();
        for _ in 0..(5 + 4) {
            b.next_u64();
        }
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn closed_fraction_matches_eps() {
        let geom = StripGeometry::cross(4).unwrap();
        let mut rng = replica_rng(17, 0);
        let eps = 0.3;
        let columns = 1_000_000usize;
        let closed: usize = (0..columns).map(|_| sample_column(&mut rng, &geom, eps).unwrap().closed_count()).sum();
        let flags = (columns * geom.rows()) as f64;
        let p = closed as f64 / flags;
        let se = (eps * (1.0 - eps) / flags).sqrt();
        assert!((p - eps).abs() < 4.0 * se, "closed fraction {p}");
    }

    #[test]
    fn initial_profile() {
        let p = DistanceProfile::initial(3);
        assert_eq!(p.d, vec![3, 2, 1, 0, 1, 2, 3]);
        p.validate().unwrap();
    }

    #[test]
    fn all_open_step() {
        let k = 3;
        let geom = StripGeometry::cross(k).unwrap();
        let mut p = DistanceProfile::initial(k);
        for i in 0..5u64 {
            p = cross_step(&p, &EdgeColumn::all_open(&geom)).unwrap();
            let expect: Vec<u64> = (-3i64..=3).map(|j| i + 1 + j.unsigned_abs()).collect();
            assert_eq!(p.d, expect);
        }
    }

    #[test]
    fn all_closed_axis_distance() {
        for k in 1..5 {
            let geom = StripGeometry::cross(k).unwrap();
            let mut p = DistanceProfile::initial(k);
            for n in 1..20u64 {
                p = cross_step(&p, &EdgeColumn::all_closed(&geom)).unwrap();
                assert_eq!(p.at(0), 2 * n + n % 2, "K={k} n={n}");
            }
        }
    }

    #[test]
    fn step_rejects_broken_profiles() {
        let geom = StripGeometry::cross(1).unwrap();
        let col = EdgeColumn::all_open(&geom);
        let bad_gap = DistanceProfile { column: 0, d: vec![1, 0, 2] };
        assert!(matches!(cross_step(&bad_gap, &col), Err(Error::Contract(_))));
        let bad_parity = DistanceProfile { column: 1, d: vec![1, 0, 1] };
        assert!(matches!(cross_step(&bad_parity, &col), Err(Error::Contract(_))));
        let std_col = EdgeColumn::all_open(&StripGeometry::standard(1).unwrap());
        assert!(cross_step(&DistanceProfile::initial(1), &std_col).is_err());
    }

    #[test]
    fn step_preserves_invariants() {
        let geom = StripGeometry::cross(5).unwrap();
        let mut rng = replica_rng(1, 1);
        let mut p = DistanceProfile::initial(5);
        for _ in 0..500 {
            let col = sample_column(&mut rng, &geom, 0.4).unwrap();
            p = cross_step(&p, &col).unwrap();
            p.validate().unwrap();
        }
    }
}
