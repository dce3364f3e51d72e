use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Model, StripEdges};
use crate::error::{Error, Result};

/// A vertex `(column, row)` of the strip.
pub type Vertex = (usize, i64);

/// Dijkstra on the explicit strip graph over columns `0..=n`.
///
/// Edge lengths are 1 (horizontal, vertical) and 2 (diagonal, cross model
/// only). Moves in every direction are allowed. `None` marks vertices with
/// no open path from `source`.
pub fn oracle_distances(edges: &StripEdges, source: Vertex) -> Result<Vec<Vec<Option<u64>>>> {
    let geom = edges.geometry();
    let rows = geom.rows();
    let cols = edges.last_column() + 1;
    let src_r = check_vertex(edges, source)?;

    let idx = |i: usize, r: usize| i * rows + r;
    let mut dist = vec![u64::MAX; cols * rows];
    let mut heap = BinaryHeap::new();
    dist[idx(source.0, src_r)] = 0;
    heap.push(Reverse((0u64, source.0, src_r)));

    while let Some(Reverse((du, i, r))) = heap.pop() {
        if du > dist[idx(i, r)] {
            continue;
        }
        let mut relax = |i2: usize, r2: usize, w: u64, heap: &mut BinaryHeap<Reverse<(u64, usize, usize)>>| {
            let nd = du + w;
            if nd < dist[idx(i2, r2)] {
                dist[idx(i2, r2)] = nd;
                heap.push(Reverse((nd, i2, r2)));
            }
        };
        if r + 1 < rows && edges.vertical_open(i, r) {
            relax(i, r + 1, 1, &mut heap);
        }
        if r > 0 && edges.vertical_open(i, r - 1) {
            relax(i, r - 1, 1, &mut heap);
        }
        if i + 1 < cols && edges.horizontal_open(i, r) {
            relax(i + 1, r, 1, &mut heap);
        }
        if i > 0 && edges.horizontal_open(i - 1, r) {
            relax(i - 1, r, 1, &mut heap);
        }
        if geom.model() == Model::Cross {
            for (di, dr) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
                let i2 = i as i64 + di;
                let r2 = r as i64 + dr;
                if (0..cols as i64).contains(&i2) && (0..rows as i64).contains(&r2) {
                    relax(i2 as usize, r2 as usize, 2, &mut heap);
                }
            }
        }
    }

    Ok((0..cols).map(|i| (0..rows).map(|r| Some(dist[idx(i, r)]).filter(|&d| d != u64::MAX)).collect()).collect())
}

/// Exact shortest-path length between two strip vertices, or `None` when
/// no open path exists inside the materialized segment.
pub fn shortest_path_oracle(edges: &StripEdges, source: Vertex, target: Vertex) -> Result<Option<u64>> {
    let tr = check_vertex(edges, target)?;
    let all = oracle_distances(edges, source)?;
    Ok(all[target.0][tr])
}

fn check_vertex(edges: &StripEdges, v: Vertex) -> Result<usize> {
    let r = edges
        .geometry()
        .row_index(v.1)
        .ok_or_else(|| Error::param("vertex", format!("row {} outside the strip", v.1)))?;
    if v.0 > edges.last_column() {
        return Err(Error::param(
            "vertex",
            format!("column {} beyond the materialized column {}", v.0, edges.last_column()),
        ));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strip::StripGeometry;

    #[test]
    fn all_open_cross() {
        let edges = StripEdges::all_open(StripGeometry::cross(3).unwrap(), 10);
        for n in 0..=10 {
            for j in -3..=3i64 {
                assert_eq!(shortest_path_oracle(&edges, (0, 0), (n, j)).unwrap(), Some(n as u64 + j.unsigned_abs()));
            }
        }
    }

    #[test]
    fn isolated_target_standard() {
        let geom = StripGeometry::standard(2).unwrap();
        let mut edges = StripEdges::all_open(geom, 6);
        // Isolate (3, 1): horizontals (2,1)->(3,1), (3,1)->(4,1); verticals (3,0)-(3,1), (3,1)-(3,2).
        let r = geom.row_index(1).unwrap();
        edges.columns_mut()[2].horizontal[r] = false;
        edges.columns_mut()[3].horizontal[r] = false;
        let v = edges.columns_mut()[2].vertical.as_mut().unwrap();
        v[r] = false;
        v[r - 1] = false;
        assert_eq!(shortest_path_oracle(&edges, (0, 0), (3, 1)).unwrap(), None);
        assert_eq!(shortest_path_oracle(&edges, (0, 0), (6, 0)).unwrap(), Some(6));
    }

    #[test]
    fn rejects_out_of_range() {
        let edges = StripEdges::all_open(StripGeometry::cross(1).unwrap(), 2);
        assert!(shortest_path_oracle(&edges, (0, 0), (3, 0)).is_err());
        assert!(shortest_path_oracle(&edges, (0, 2), (1, 0)).is_err());
    }
}
