//! Cross-model distance profiles as TASEP configurations.
//!
//! Reading a column profile from bottom to top, site `j` carries a particle
//! when the distance drops (`D(i, j) = D(i, j-1) - 1`) and is empty when it
//! rises. Under the coupling "event at edge row `e` fires iff the horizontal
//! edge at row `e - K` is closed", the column sweep and the coupled TASEP
//! step commute with this reading, and the distance increments are
//! recovered from consecutive configurations: `D(i+1, j) - D(i, j)` is 3
//! exactly when the event at row `j` fired, 1 otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::parallel::replicate;
use crate::rng::replica_rng;
use crate::strip::{cross_step_into, sample_column_unchecked, DistanceProfile, StripEdges, StripGeometry};
use crate::tasep::{coupled_tasep_step, TasepState};

/// The particle configuration of a profile.
pub fn extract_particles(profile: &DistanceProfile) -> Result<TasepState> {
    let d = &profile.d;
    if d.len() < 3 || d.len().is_multiple_of(2) {
        return Err(Error::Contract(format!("profile length {} is not 2K+1", d.len())));
    }
    let occ = d
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (a, b) if b + 1 == a => Ok(true),
            (a, b) if a + 1 == b => Ok(false),
            (a, b) => Err(Error::Contract(format!("neighbouring distances {a} and {b} do not differ by one"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    TasepState::new(occ)
}

/// Rebuilds the profile of column `column` from its bottom value `d[-K]`
/// and its particle configuration; inverse of [`extract_particles`].
pub fn profile_from_state(anchor: u64, column: u64, state: &TasepState) -> Result<DistanceProfile> {
    let mut d = Vec::with_capacity(state.len() + 1);
    let mut cur = anchor;
    d.push(cur);
    for &occupied in state.occupancy() {
        cur = if occupied {
            cur.checked_sub(1).ok_or_else(|| Error::Contract("reconstructed distance would be negative".into()))?
        } else {
            cur + 1
        };
        d.push(cur);
    }
    let profile = DistanceProfile { column, d };
    profile.validate()?;
    Ok(profile)
}

/// Which edge-row events fired between two consecutive configurations.
///
/// Fails when `next` cannot be produced from `now` in one step.
pub fn fired_events(now: &TasepState, next: &TasepState) -> Result<Vec<bool>> {
    if now.len() != next.len() {
        return Err(Error::Contract("configurations of different sizes".into()));
    }
    let n = now.len();
    let fired: Vec<bool> = (0..=n)
        .map(|e| {
            if !now.event_enabled(e) {
                return false;
            }
            // The source site empties (entry: the first site fills).
            if e == 0 {
                next.occupancy()[0]
            } else {
                !next.occupancy()[e - 1]
            }
        })
        .collect();
    let replay = now.apply_events(|e| fired[e]);
    if &replay != next {
        return Err(Error::Contract(format!("{next} is not reachable from {now} in one step")));
    }
    Ok(fired)
}

/// `D(i+1, j) - D(i, j)` for lattice row `j` in `-K..=K`, read off the two
/// configurations: 3 when the event at row `j` fired, else 1. In the bulk
/// this is the swap `(particle, hole) -> (hole, particle)` at `(j, j+1)`;
/// at row `-K` it is an entry and at row `K` an exit.
pub fn reconstruct_increment(now: &TasepState, next: &TasepState, j: i64) -> Result<u64> {
    let k = now.k() as i64;
    if !(-k..=k).contains(&j) {
        return Err(Error::param("j", format!("row {j} outside -{k}..={k}")));
    }
    let fired = fired_events(now, next)?;
    Ok(if fired[(j + k) as usize] { 3 } else { 1 })
}

/// All `2K + 1` increments at once.
pub fn reconstruct_increments(now: &TasepState, next: &TasepState) -> Result<Vec<u64>> {
    Ok(fired_events(now, next)?.into_iter().map(|f| if f { 3 } else { 1 }).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    /// Column index `i` of the configuration that disagreed.
    pub column: u64,
    pub row: i64,
    pub kind: MismatchKind,
    pub expected: i64,
    pub actual: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MismatchKind {
    /// Extracted occupation vs coupled TASEP occupation at a site.
    Occupation,
    /// Sweep distance vs distance rebuilt from increments at a row.
    Distance,
    /// The coupled pair was not a legal one-step transition.
    Transition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub k: usize,
    pub eps: f64,
    pub seed: u64,
    pub replicas: u64,
    pub steps_checked: u64,
    pub mismatches: u64,
    pub first_mismatch: Option<Mismatch>,
    /// Replica that produced `first_mismatch`.
    pub first_mismatch_replica: Option<u64>,
}

impl CouplingReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }

    /// Sums two reports of the same experiment; the earlier replica's first
    /// mismatch wins.
    pub fn merge(mut self, other: CouplingReport) -> CouplingReport {
        self.replicas += other.replicas;
        self.steps_checked += other.steps_checked;
        self.mismatches += other.mismatches;
        if self.first_mismatch.is_none() {
            self.first_mismatch = other.first_mismatch;
            self.first_mismatch_replica = other.first_mismatch_replica;
        }
        self
    }
}

/// Runs the sweep and the coupled TASEP side by side on given edges.
pub fn verify_coupling_on_edges(edges: &StripEdges, eps: f64, seed: u64) -> Result<CouplingReport> {
    let geom = edges.geometry();
    if geom.model() != crate::strip::Model::Cross {
        return Err(Error::Contract("coupling check needs cross-model edges".into()));
    }
    let k = geom.k();
    let mut check = CouplingCheck::new(k);
    for col in edges.columns() {
        check.advance(&col.horizontal);
    }
    Ok(check.into_report(eps, seed, 0))
}

/// Samples `n_columns` Cross-model columns from `seed` and checks the
/// correspondence at every column.
pub fn verify_coupling(k: usize, eps: f64, n_columns: u64, seed: u64) -> Result<CouplingReport> {
    verify_coupling_replica(k, eps, n_columns, seed, 0)
}

fn verify_coupling_replica(k: usize, eps: f64, n_columns: u64, seed: u64, replica: u64) -> Result<CouplingReport> {
    check_probability("eps", eps)?;
    let geom = StripGeometry::cross(k)?;
    let mut rng = replica_rng(seed, replica);
    let mut check = CouplingCheck::new(k);
    for _ in 0..n_columns {
        let col = sample_column_unchecked(&mut rng, &geom, eps);
        check.advance(&col.horizontal);
    }
    Ok(check.into_report(eps, seed, replica))
}

/// Independent replicas `0..replicas`, merged in replica order.
pub fn verify_coupling_replicas(
    k: usize,
    eps: f64,
    n_columns: u64,
    replicas: u64,
    seed: u64,
) -> Result<CouplingReport> {
    check_probability("eps", eps)?;
    StripGeometry::cross(k)?;
    if replicas == 0 {
        return Err(Error::param("replicas", "must be positive"));
    }
    let reports = replicate(replicas, seed, |r, _| verify_coupling_replica(k, eps, n_columns, seed, r));
    let mut iter = reports.into_iter();
    let mut total = iter.next().expect("at least one replica")?;
    for r in iter {
        total = total.merge(r?);
    }
    Ok(total)
}

struct CouplingCheck {
    profile: DistanceProfile,
    next_d: Vec<u64>,
    state: TasepState,
    rebuilt: Vec<u64>,
    steps: u64,
    mismatches: u64,
    first: Option<Mismatch>,
}

impl CouplingCheck {
    fn new(k: usize) -> Self {
        let profile = DistanceProfile::initial(k);
        let state = extract_particles(&profile).expect("initial profile is valid");
        let rebuilt = profile.d.clone();
        Self { profile, next_d: Vec::new(), state, rebuilt, steps: 0, mismatches: 0, first: None }
    }

    fn record(&mut self, m: Mismatch) {
        self.mismatches += 1;
        self.first.get_or_insert(m);
    }

    fn advance(&mut self, horizontal: &[bool]) {
        let k = self.state.k() as i64;
        cross_step_into(&self.profile.d, horizontal, &mut self.next_d);
        let next_profile = DistanceProfile { column: self.profile.column + 1, d: std::mem::take(&mut self.next_d) };
        let column = next_profile.column;
        let col = crate::strip::EdgeColumn { horizontal: horizontal.to_vec(), vertical: None };
        let next_state = coupled_tasep_step(&self.state, &col).expect("sizes match");
        self.steps += 1;

        match extract_particles(&next_profile) {
            Ok(extracted) => {
                let diffs: Vec<(usize, bool, bool)> = extracted
                    .occupancy()
                    .iter()
                    .zip(next_state.occupancy())
                    .enumerate()
                    .filter(|(_, (a, b))| a != b)
                    .map(|(p, (a, b))| (p, *a, *b))
                    .collect();
                for (p, ex, act) in diffs {
                    self.record(Mismatch {
                        column,
                        row: p as i64 - k + 1,
                        kind: MismatchKind::Occupation,
                        expected: ex as i64,
                        actual: act as i64,
                    });
                }
            }
            Err(_) => self.record(Mismatch { column, row: 0, kind: MismatchKind::Occupation, expected: 1, actual: 0 }),
        }

        match reconstruct_increments(&self.state, &next_state) {
            Ok(inc) => {
                for (r, step) in inc.into_iter().enumerate() {
                    self.rebuilt[r] += step;
                    if self.rebuilt[r] != next_profile.d[r] {
                        self.record(Mismatch {
                            column,
                            row: r as i64 - k,
                            kind: MismatchKind::Distance,
                            expected: next_profile.d[r] as i64,
                            actual: self.rebuilt[r] as i64,
                        });
                        self.rebuilt[r] = next_profile.d[r];
                    }
                }
            }
            Err(_) => {
                self.record(Mismatch { column, row: 0, kind: MismatchKind::Transition, expected: 1, actual: 0 });
                self.rebuilt.clone_from(&next_profile.d);
            }
        }

        self.next_d = std::mem::replace(&mut self.profile, next_profile).d;
        self.state = next_state;
    }

    fn into_report(self, eps: f64, seed: u64, replica: u64) -> CouplingReport {
        CouplingReport {
            k: self.state.k(),
            eps,
            seed,
            replicas: 1,
            steps_checked: self.steps,
            mismatches: self.mismatches,
            first_mismatch_replica: self.first.as_ref().map(|_| replica),
            first_mismatch: self.first,
        }
    }
}
