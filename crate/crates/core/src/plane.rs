//! Bond percolation on finite windows of `Z^2`.
//!
//! Edge states are a pure function of `(key, x, y, orientation)`: each edge
//! hashes its coordinates with the window key and is closed when the hashed
//! uniform falls below `eps`. Two windows sampled with the same key agree on
//! every edge they share, so enlarging a window keeps the inner
//! configuration fixed.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::rng::{replica_seed, splitmix64, unit_f64};
use crate::stats::Accumulator;

/// A lattice point `(x, y)`.
pub type Point = (i64, i64);

const HORIZONTAL: u64 = 0x68;
const VERTICAL: u64 = 0x76;

#[inline]
fn column_hash(key: u64, orientation: u64, x: i64) -> u64 {
    splitmix64(splitmix64(key ^ orientation) ^ x as u64)
}

#[inline]
fn edge_closed(column: u64, y: i64, eps: f64) -> bool {
    unit_f64(splitmix64(column ^ (y as u64).rotate_left(32))) < eps
}

/// Whether the edge starting at `(x, y)` (to `(x+1, y)` when `horizontal`,
/// else to `(x, y+1)`) is closed in the configuration keyed by `key`.
pub fn hashed_edge_closed(key: u64, eps: f64, x: i64, y: i64, horizontal: bool) -> bool {
    let orientation = if horizontal { HORIZONTAL } else { VERTICAL };
    edge_closed(column_hash(key, orientation, x), y, eps)
}

/// The open/closed state of every edge inside the rectangle
/// `[x0, x0 + width - 1] x [y0, y0 + height - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWindow {
    x0: i64,
    y0: i64,
    width: usize,
    height: usize,
    eps: f64,
    /// `h_open[v]`: edge from vertex `v` to its right neighbour.
    h_open: Vec<bool>,
    /// `v_open[v]`: edge from vertex `v` to its upper neighbour.
    v_open: Vec<bool>,
}

fn range_len(name: &'static str, r: &RangeInclusive<i64>) -> Result<usize> {
    if r.start() > r.end() {
        return Err(Error::param(name, format!("empty range {}..={}", r.start(), r.end())));
    }
    Ok((r.end() - r.start() + 1) as usize)
}

impl PlaneWindow {
    fn filled(xs: RangeInclusive<i64>, ys: RangeInclusive<i64>, eps: f64, open: bool) -> Result<Self> {
        let width = range_len("x", &xs)?;
        let height = range_len("y", &ys)?;
        let mut w = Self {
            x0: *xs.start(),
            y0: *ys.start(),
            width,
            height,
            eps,
            h_open: vec![open; width * height],
            v_open: vec![open; width * height],
        };
        w.clear_outside();
        Ok(w)
    }

    /// Edges leaving the window are never open.
    fn clear_outside(&mut self) {
        for y in 0..self.height {
            self.h_open[y * self.width + self.width - 1] = false;
        }
        for x in 0..self.width {
            self.v_open[(self.height - 1) * self.width + x] = false;
        }
    }

    pub fn all_open(xs: RangeInclusive<i64>, ys: RangeInclusive<i64>) -> Result<Self> {
        Self::filled(xs, ys, 0.0, true)
    }

    pub fn all_closed(xs: RangeInclusive<i64>, ys: RangeInclusive<i64>) -> Result<Self> {
        Self::filled(xs, ys, 1.0, false)
    }

    /// The hashed configuration for `key` restricted to the rectangle.
    pub fn sample(key: u64, eps: f64, xs: RangeInclusive<i64>, ys: RangeInclusive<i64>) -> Result<Self> {
        check_probability("eps", eps)?;
        let mut w = Self::filled(xs, ys, eps, true)?;
        for xi in 0..w.width {
            let x = w.x0 + xi as i64;
            let hc = column_hash(key, HORIZONTAL, x);
            let vc = column_hash(key, VERTICAL, x);
            for yi in 0..w.height {
                let y = w.y0 + yi as i64;
                let v = yi * w.width + xi;
                w.h_open[v] = !edge_closed(hc, y, eps);
                w.v_open[v] = !edge_closed(vc, y, eps);
            }
        }
        w.clear_outside();
        Ok(w)
    }

    /// `[-margin, n + margin] x [-margin, margin]`.
    pub fn around_axis(key: u64, eps: f64, n: u64, margin: u64) -> Result<Self> {
        let (n, m) = (n as i64, margin as i64);
        Self::sample(key, eps, -m..=n + m, -m..=m)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn vertices(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, (x, y): Point) -> Option<usize> {
        let xi = x.checked_sub(self.x0)?;
        let yi = y.checked_sub(self.y0)?;
        if (0..self.width as i64).contains(&xi) && (0..self.height as i64).contains(&yi) {
            Some(yi as usize * self.width + xi as usize)
        } else {
            None
        }
    }

    pub fn point(&self, v: usize) -> Point {
        (self.x0 + (v % self.width) as i64, self.y0 + (v / self.width) as i64)
    }

    pub fn on_boundary(&self, v: usize) -> bool {
        let (xi, yi) = (v % self.width, v / self.width);
        xi == 0 || yi == 0 || xi + 1 == self.width || yi + 1 == self.height
    }

    /// Edge `(x, y) -> (x + 1, y)`; `false` when it leaves the window.
    pub fn horizontal_open(&self, p: Point) -> bool {
        self.index(p).is_some_and(|v| self.h_open[v])
    }

    /// Edge `(x, y) -> (x, y + 1)`; `false` when it leaves the window.
    pub fn vertical_open(&self, p: Point) -> bool {
        self.index(p).is_some_and(|v| self.v_open[v])
    }

    pub fn set_horizontal(&mut self, p: Point, open: bool) -> Result<()> {
        let v = self.interior_edge(p, true)?;
        self.h_open[v] = open;
        Ok(())
    }

    pub fn set_vertical(&mut self, p: Point, open: bool) -> Result<()> {
        let v = self.interior_edge(p, false)?;
        self.v_open[v] = open;
        Ok(())
    }

    fn interior_edge(&self, p: Point, horizontal: bool) -> Result<usize> {
        let v = self.index(p).ok_or_else(|| Error::param("edge", format!("{p:?} outside the window")))?;
        let leaves = if horizontal { v % self.width + 1 == self.width } else { v / self.width + 1 == self.height };
        if leaves {
            return Err(Error::param("edge", format!("edge at {p:?} leaves the window")));
        }
        Ok(v)
    }

    /// Open neighbours of vertex `v`.
    #[inline]
    fn for_each_neighbor(&self, v: usize, mut f: impl FnMut(usize)) {
        let w = self.width;
        if self.h_open[v] {
            f(v + 1);
        }
        if !v.is_multiple_of(w) && self.h_open[v - 1] {
            f(v - 1);
        }
        if self.v_open[v] {
            f(v + w);
        }
        if v >= w && self.v_open[v - w] {
            f(v - w);
        }
    }
}

/// Connected components of the open subgraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<u32>,
    boundary_connected: Vec<bool>,
}

impl ClusterLabels {
    pub fn label(&self, v: usize) -> u32 {
        self.labels[v]
    }

    pub fn components(&self) -> usize {
        self.boundary_connected.len()
    }

    /// Whether the component with this label touches the window border.
    pub fn boundary_connected(&self, label: u32) -> bool {
        self.boundary_connected[label as usize]
    }

    pub fn connected(&self, a: usize, b: usize) -> bool {
        self.labels[a] == self.labels[b]
    }
}

fn find(parent: &mut [u32], mut v: u32) -> u32 {
    while parent[v as usize] != v {
        let gp = parent[parent[v as usize] as usize];
        parent[v as usize] = gp;
        v = gp;
    }
    v
}

/// Union-find over the open edges.
#[allow(clippy::needless_range_loop)]
pub fn label_clusters(window: &PlaneWindow) -> ClusterLabels {
    let n = window.vertices();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    let mut size = vec![1u32; n];
    let mut union = |a: usize, b: usize| {
        let (ra, rb) = (find(&mut parent, a as u32), find(&mut parent, b as u32));
        if ra != rb {
            let (big, small) = if size[ra as usize] >= size[rb as usize] { (ra, rb) } else { (rb, ra) };
            parent[small as usize] = big;
            size[big as usize] += size[small as usize];
        }
    };
    for v in 0..n {
        if window.h_open[v] {
            union(v, v + 1);
        }
        if window.v_open[v] {
            union(v, v + window.width);
        }
    }
    let mut compact = vec![u32::MAX; n];
    let mut labels = vec![0u32; n];
    let mut boundary_connected = Vec::new();
    for v in 0..n {
        let root = find(&mut parent, v as u32) as usize;
        if compact[root] == u32::MAX {
            compact[root] = boundary_connected.len() as u32;
            boundary_connected.push(false);
        }
        labels[v] = compact[root];
        if window.on_boundary(v) {
            boundary_connected[compact[root] as usize] = true;
        }
    }
    ClusterLabels { labels, boundary_connected }
}

/// BFS distances from `source` to every vertex (`None` when unreachable).
pub fn plane_distances(window: &PlaneWindow, source: Point) -> Result<Vec<Option<u64>>> {
    let s = window.index(source).ok_or_else(|| Error::param("source", format!("{source:?} outside the window")))?;
    let mut dist = vec![u32::MAX; window.vertices()];
    let mut queue = VecDeque::new();
    dist[s] = 0;
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v];
        window.for_each_neighbor(v, |u| {
            if dist[u] == u32::MAX {
                dist[u] = dv + 1;
                queue.push_back(u);
            }
        });
    }
    Ok(dist.into_iter().map(|d| (d != u32::MAX).then_some(d as u64)).collect())
}

/// Shortest open-path length between two vertices of the window.
pub fn plane_distance(window: &PlaneWindow, source: Point, target: Point) -> Result<Option<u64>> {
    let t = window.index(target).ok_or_else(|| Error::param("target", format!("{target:?} outside the window")))?;
    Ok(plane_distances(window, source)?[t])
}

/// Distances from `source` when every vertical edge is forced open and the
/// diagonals `(x, y) -> (x +- 1, y +- 1)` of length 2 are added; horizontal
/// edges keep their state.
pub fn diagonal_distances(window: &PlaneWindow, source: Point) -> Result<Vec<Option<u64>>> {
    let s = window.index(source).ok_or_else(|| Error::param("source", format!("{source:?} outside the window")))?;
    let (w, h) = (window.width, window.height);
    let mut dist = vec![u64::MAX; window.vertices()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0;
    heap.push(Reverse((0u64, s)));
    while let Some(Reverse((dv, v))) = heap.pop() {
        if dv > dist[v] {
            continue;
        }
        let (xi, yi) = ((v % w) as i64, (v / w) as i64);
        let mut relax = |u: usize, len: u64| {
            if dv + len < dist[u] {
                dist[u] = dv + len;
                heap.push(Reverse((dv + len, u)));
            }
        };
        if window.h_open[v] {
            relax(v + 1, 1);
        }
        if xi > 0 && window.h_open[v - 1] {
            relax(v - 1, 1);
        }
        for dy in [-1i64, 1] {
            let y2 = yi + dy;
            if !(0..h as i64).contains(&y2) {
                continue;
            }
            relax(y2 as usize * w + xi as usize, 1);
            for dx in [-1i64, 1] {
                let x2 = xi + dx;
                if (0..w as i64).contains(&x2) {
                    relax(y2 as usize * w + x2 as usize, 2);
                }
            }
        }
    }
    Ok(dist.into_iter().map(|d| (d != u64::MAX).then_some(d)).collect())
}

/// The `k`-th point among `(n, 0), (2n, 0), ...` inside the window whose
/// component reaches the border.
pub fn find_t(window: &PlaneWindow, labels: &ClusterLabels, n: u64, k: u64) -> Option<Point> {
    if n == 0 || k == 0 {
        return None;
    }
    let mut found = 0;
    for i in 1.. {
        let p = (i * n as i64, 0);
        let v = window.index(p)?;
        if labels.boundary_connected(labels.label(v)) {
            found += 1;
            if found == k {
                return Some(p);
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub eps: f64,
    pub n: u64,
    pub margin: u64,
    pub replicas: u64,
    pub admissible: u64,
    pub admissible_fraction: f64,
    /// Mean of `D(0, (n, 0)) / n` over admissible replicas.
    pub mu_hat: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Outcome of one window: `Some(distance)` when the origin and `(n, 0)` are
/// connected to each other and to the border.
fn admissible_distance(window: &PlaneWindow, n: u64) -> Option<u64> {
    let s = window.index((0, 0)).expect("origin inside");
    let t = window.index((n as i64, 0)).expect("target inside");
    let mut dist = vec![u32::MAX; window.vertices()];
    let mut queue = VecDeque::new();
    dist[s] = 0;
    queue.push_back(s);
    let mut border = window.on_boundary(s);
    let mut target = None;
    while let Some(v) = queue.pop_front() {
        if v == t {
            target = Some(dist[v] as u64);
        }
        border |= window.on_boundary(v);
        if border && target.is_some() {
            break;
        }
        let dv = dist[v];
        window.for_each_neighbor(v, |u| {
            if dist[u] == u32::MAX {
                dist[u] = dv + 1;
                queue.push_back(u);
            }
        });
    }
    let result = if border { target } else { None };
    if cfg!(debug_assertions) {
        let labels = label_clusters(window);
        let linked = labels.connected(s, t) && labels.boundary_connected(labels.label(s));
        debug_assert_eq!(linked, result.is_some(), "BFS and cluster labels disagree");
    }
    result
}

fn check_mu_parameters(eps: f64, n: u64, margin: u64, replicas: u64) -> Result<()> {
    let mut bad = Vec::new();
    if !(0.0..=1.0).contains(&eps) {
        bad.push(format!("eps = {eps} is not in [0, 1]"));
    }
    if n == 0 {
        bad.push("n must be positive".to_string());
    }
    if 2 * margin < n {
        bad.push(format!("margin = {margin} is below n/2"));
    }
    if replicas < 100 {
        bad.push(format!("replicas = {replicas} is below 100"));
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::param("mu", bad.join("; ")))
    }
}

/// Monte Carlo estimate of the time constant from independent windows
/// `[-margin, n + margin] x [-margin, margin]`.
///
/// Replica `r` uses the edge key `replica_seed(seed, r)`.
pub fn estimate_mu(eps: f64, n: u64, margin: u64, replicas: u64, seed: u64) -> Result<MuEstimate> {
    check_mu_parameters(eps, n, margin, replicas)?;
    let outcomes = crate::parallel::replicate(replicas, seed, |r, _| {
        let window = PlaneWindow::around_axis(replica_seed(seed, r), eps, n, margin).expect("validated");
        admissible_distance(&window, n)
    });
    let acc: Accumulator = outcomes.iter().flatten().map(|&d| d as f64 / n as f64).collect();
    if acc.count() == 0 {
        return Err(Error::Estimation(format!(
            "no admissible replica out of {replicas} at eps = {eps}; lower eps or enlarge the margin"
        )));
    }
    Ok(MuEstimate {
        eps,
        n,
        margin,
        replicas,
        admissible: acc.count(),
        admissible_fraction: acc.count() as f64 / replicas as f64,
        mu_hat: acc.mean(),
        stderr: if acc.count() > 1 { acc.stderr() } else { f64::NAN },
        seed,
    })
}

/// `estimate_mu` at `margin` and `2 * margin` on the same edge keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDoubling {
    pub base: MuEstimate,
    pub doubled: MuEstimate,
    pub shift: f64,
}

impl WindowDoubling {
    /// Shift below two standard errors of the base estimate.
    pub fn stable(&self) -> bool {
        self.shift == 0.0 || self.shift < 2.0 * self.base.stderr
    }
}

pub fn window_doubling(eps: f64, n: u64, margin: u64, replicas: u64, seed: u64) -> Result<WindowDoubling> {
    let base = estimate_mu(eps, n, margin, replicas, seed)?;
    let doubled = estimate_mu(eps, n, 2 * margin, replicas, seed)?;
    let shift = (doubled.mu_hat - base.mu_hat).abs();
    Ok(WindowDoubling { base, doubled, shift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strip::{shortest_path_oracle, EdgeColumn, StripEdges, StripGeometry};

    #[test]
    fn all_open_and_closed() {
        let w = PlaneWindow::all_open(-3..=7, -2..=2).unwrap();
        let labels = label_clusters(&w);
        assert_eq!(labels.components(), 1);
        assert!(labels.boundary_connected(0));
        assert_eq!(plane_distance(&w, (0, 0), (7, 0)).unwrap(), Some(7));
        assert_eq!(find_t(&w, &labels, 2, 3), Some((6, 0)));
        assert_eq!(find_t(&w, &labels, 2, 4), None);

        let c = PlaneWindow::all_closed(0..=4, 0..=3).unwrap();
        assert_eq!(label_clusters(&c).components(), 20);
        assert_eq!(plane_distance(&c, (1, 1), (2, 1)).unwrap(), None);
    }

    #[test]
    fn isolated_first_point() {
        let mut w = PlaneWindow::all_open(-4..=12, -4..=4).unwrap();
        for e in [((3, 0), true), ((4, 0), true), ((4, -1), false), ((4, 0), false)] {
            if e.1 {
                w.set_horizontal(e.0, false).unwrap();
            } else {
                w.set_vertical(e.0, false).unwrap();
            }
        }
        let labels = label_clusters(&w);
        assert_eq!(find_t(&w, &labels, 4, 1), Some((8, 0)));
        assert_eq!(plane_distance(&w, (0, 0), (4, 0)).unwrap(), None);
        assert!(w.set_horizontal((12, 0), true).is_err());
    }

    #[test]
    fn hashing_is_window_independent() {
        let small = PlaneWindow::sample(77, 0.4, -5..=5, -3..=3).unwrap();
        let big = PlaneWindow::sample(77, 0.4, -20..=30, -10..=10).unwrap();
        for x in -5..5 {
            for y in -3..=3 {
                assert_eq!(small.horizontal_open((x, y)), big.horizontal_open((x, y)));
                assert_eq!(small.horizontal_open((x, y)), !hashed_edge_closed(77, 0.4, x, y, true));
            }
        }
        for x in -5..=5 {
            for y in -3..3 {
                assert_eq!(small.vertical_open((x, y)), big.vertical_open((x, y)));
            }
        }
    }

    #[test]
    fn closed_fraction() {
        let w = PlaneWindow::sample(3, 0.3, 0..=400, 0..=400).unwrap();
        let (mut closed, mut total) = (0u64, 0u64);
        for x in 0..400 {
            for y in 0..400 {
                total += 2;
                closed += !w.horizontal_open((x, y)) as u64 + !w.vertical_open((x, y)) as u64;
            }
        }
        let p = closed as f64 / total as f64;
        let se = (0.3f64 * 0.7 / total as f64).sqrt();
        assert!((p - 0.3).abs() < 4.0 * se, "{p}");
    }

    /// A window `[0, W] x [-M, M]` is a standard strip segment.
    fn as_strip(w: &PlaneWindow, m: i64, cols: i64) -> StripEdges {
        let geom = StripGeometry::standard(m as usize).unwrap();
        let vert = |x: i64| (-m..m).map(|y| w.vertical_open((x, y))).collect::<Vec<_>>();
        let columns = (0..cols)
            .map(|x| EdgeColumn {
                horizontal: (-m..=m).map(|y| w.horizontal_open((x, y))).collect(),
                vertical: Some(vert(x + 1)),
            })
            .collect();
        StripEdges::new(geom, Some(vert(0)), columns).unwrap()
    }

    #[test]
    fn bfs_matches_dijkstra_oracle() {
        let (m, cols) = (4i64, 20i64);
        for key in 0..60 {
            let w = PlaneWindow::sample(key, 0.3, 0..=cols, -m..=m).unwrap();
            let strip = as_strip(&w, m, cols);
            let from_plane = plane_distances(&w, (0, 0)).unwrap();
            let labels = label_clusters(&w);
            let s = w.index((0, 0)).unwrap();
            for x in 0..=cols {
                for y in -m..=m {
                    let v = w.index((x, y)).unwrap();
                    let oracle = shortest_path_oracle(&strip, (0, 0), (x as usize, y)).unwrap();
                    assert_eq!(from_plane[v], oracle, "key {key} at ({x}, {y})");
                    assert_eq!(from_plane[v].is_some(), labels.connected(s, v));
                }
            }
        }
    }

    #[test]
    fn diagonal_distances_all_open() {
        let w = PlaneWindow::all_open(-10..=10, -10..=10).unwrap();
        let d = diagonal_distances(&w, (0, 0)).unwrap();
        assert_eq!(d[w.index((7, -3)).unwrap()], Some(10));
        let c = PlaneWindow::all_closed(-10..=10, -10..=10).unwrap();
        let d = diagonal_distances(&c, (0, 0)).unwrap();
        assert_eq!(d[c.index((7, 0)).unwrap()], Some(15));
        assert_eq!(d[c.index((7, 1)).unwrap()], Some(14));
    }

    #[test]
    fn mu_at_zero_eps() {
        let est = estimate_mu(0.0, 20, 10, 100, 1).unwrap();
        assert_eq!(est.mu_hat, 1.0);
        assert_eq!(est.admissible_fraction, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn mu_parameter_errors() {
        let err = estimate_mu(1.5, 20, 5, 10, 1).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("eps") && msg.contains("margin") && msg.contains("replicas"), "{msg}");
        assert!(matches!(estimate_mu(1.0, 20, 10, 100, 1), Err(Error::Estimation(_))));
    }

    #[test]
    fn admissibility_matches_labels() {
        for key in 0..40 {
            let w = PlaneWindow::around_axis(key, 0.45, 12, 6).unwrap();
            let labels = label_clusters(&w);
            let (s, t) = (w.index((0, 0)).unwrap(), w.index((12, 0)).unwrap());
            let linked = labels.connected(s, t) && labels.boundary_connected(labels.label(s));
            let d = admissible_distance(&w, 12);
            assert_eq!(d.is_some(), linked);
            if let Some(d) = d {
                assert_eq!(Some(d), plane_distance(&w, (0, 0), (12, 0)).unwrap());
                assert!(d >= 12);
            }
        }
    }
}
