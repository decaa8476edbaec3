//! Finite lattice graphs with finite-range couplings and deterministic
//! per-vertex edge orderings.

use crate::{CoreError, Result};
use std::collections::{BTreeMap, HashMap};

/// A lattice site in Z^d.
pub type Point = Vec<i64>;

/// Finite-range ferromagnetic coupling field J on Z^d.
///
/// Entries are stored symmetrically: J(x) = J(−x), J(0) is absent and every
/// stored coupling is strictly positive.  Offsets not stored mean J = 0.
#[derive(Debug, Clone)]
pub struct CouplingField {
    pub dimension: usize,
    entries: BTreeMap<Point, f64>,
    range: f64,
}

impl CouplingField {
    /// Build from a list of (offset, J) pairs; the symmetric closure is taken.
    pub fn new(dimension: usize, offsets: &[(Point, f64)]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (x, j) in offsets {
            if x.len() != dimension {
                return Err(CoreError::Invalid(format!(
                    "coupling offset {x:?} has wrong dimension (expected {dimension})"
                )));
            }
            if x.iter().all(|&c| c == 0) {
                return Err(CoreError::Invalid("coupling at zero offset".into()));
            }
            if !(*j > 0.0) {
                return Err(CoreError::Invalid(format!(
                    "coupling J{x:?} = {j} must be strictly positive"
                )));
            }
            let neg: Point = x.iter().map(|&c| -c).collect();
            if let Some(&prev) = entries.get(x) {
                if prev != *j {
                    return Err(CoreError::Invalid(format!("conflicting couplings at {x:?}")));
                }
            }
            entries.insert(x.clone(), *j);
            entries.insert(neg, *j);
        }
        if entries.is_empty() {
            return Err(CoreError::Invalid("no couplings".into()));
        }
        let range = entries
            .keys()
            .map(|x| x.iter().map(|&c| (c as f64).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Ok(CouplingField { dimension, entries, range })
    }

    /// Isotropic nearest-neighbour couplings of strength `j`.
    pub fn nearest_neighbour(dimension: usize, j: f64) -> Self {
        let mut offs = Vec::new();
        for axis in 0..dimension {
            let mut x = vec![0i64; dimension];
            x[axis] = 1;
            offs.push((x, j));
        }
        CouplingField::new(dimension, &offs).expect("valid nn couplings")
    }

    pub fn coupling(&self, offset: &[i64]) -> f64 {
        self.entries.get(offset).copied().unwrap_or(0.0)
    }

    /// Maximal Euclidean norm of a stored offset.
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn offsets(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.entries.iter().map(|(p, &j)| (p, j))
    }
}

/// An edge of the graph: endpoints as vertex indices (u < v) plus coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub j: f64,
}

impl Edge {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn touches(&self, x: usize) -> bool {
        self.u == x || self.v == x
    }
}

/// Finite graph (V_B, B) induced by a coupling field on a box of Z^d.
///
/// `order_at[x]` lists the edge ids incident to vertex x sorted
/// lexicographically by the coordinates of the other endpoint; this is the
/// fixed ordering used by line extraction.
#[derive(Debug, Clone)]
pub struct LatticeGraph {
    pub dimension: usize,
    pub vertices: Vec<Point>,
    pub edges: Vec<Edge>,
    index: HashMap<Point, usize>,
    order_at: Vec<Vec<usize>>,
}

/// All sites of the closed box `lo[k] ..= hi[k]` in lexicographic order.
pub fn box_sites(bounds: &[(i64, i64)]) -> Result<Vec<Point>> {
    if bounds.is_empty() || bounds.iter().any(|&(lo, hi)| hi < lo) {
        return Err(CoreError::EmptyRegion);
    }
    let mut sites = vec![Vec::new()];
    for &(lo, hi) in bounds {
        let mut next = Vec::new();
        for s in &sites {
            for c in lo..=hi {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        sites = next;
    }
    Ok(sites)
}

/// Build the graph of all coupled pairs inside a box.
pub fn build_graph(couplings: &CouplingField, bounds: &[(i64, i64)]) -> Result<LatticeGraph> {
    if bounds.len() != couplings.dimension {
        return Err(CoreError::Invalid("box dimension mismatch".into()));
    }
    let sites = box_sites(bounds)?;
    LatticeGraph::from_sites(couplings, &sites)
}

impl LatticeGraph {
    /// Graph on an explicit site set: all pairs (x, y) with J(x−y) > 0.
    pub fn from_sites(couplings: &CouplingField, sites: &[Point]) -> Result<Self> {
        if sites.is_empty() {
            return Err(CoreError::EmptyRegion);
        }
        let mut vertices: Vec<Point> = sites.to_vec();
        vertices.sort();
        vertices.dedup();
        let index: HashMap<Point, usize> =
            vertices.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();

        let mut edges = Vec::new();
        for (ui, up) in vertices.iter().enumerate() {
            for (off, j) in couplings.offsets() {
                let vp: Point = up.iter().zip(off).map(|(&a, &b)| a + b).collect();
                if let Some(&vi) = index.get(&vp) {
                    if ui < vi {
                        edges.push(Edge { u: ui, v: vi, j });
                    }
                }
            }
        }
        // Canonical edge order: lexicographic in (endpoint, endpoint).
        edges.sort_by(|a, b| {
            (&vertices[a.u], &vertices[a.v]).cmp(&(&vertices[b.u], &vertices[b.v]))
        });

        let mut order_at = vec![Vec::new(); vertices.len()];
        for x in 0..vertices.len() {
            let mut inc: Vec<usize> =
                (0..edges.len()).filter(|&e| edges[e].touches(x)).collect();
            inc.sort_by(|&a, &b| {
                vertices[edges[a].other(x)].cmp(&vertices[edges[b].other(x)])
            });
            order_at[x] = inc;
        }
        Ok(LatticeGraph { dimension: couplings.dimension, vertices, edges, index, order_at })
    }

    /// The subgraph spanned by an edge subset: vertices are the endpoints of
    /// the kept edges, orderings are rebuilt.
    pub fn subgraph(&self, edge_mask: u64) -> Result<LatticeGraph> {
        let kept: Vec<&Edge> =
            (0..self.edges.len()).filter(|&e| edge_mask & (1u64 << e) != 0).map(|e| &self.edges[e]).collect();
        if kept.is_empty() {
            return Err(CoreError::EmptyRegion);
        }
        let mut vertices: Vec<Point> = kept
            .iter()
            .flat_map(|e| [self.vertices[e.u].clone(), self.vertices[e.v].clone()])
            .collect();
        vertices.sort();
        vertices.dedup();
        let index: HashMap<Point, usize> =
            vertices.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let mut edges: Vec<Edge> = kept
            .iter()
            .map(|e| {
                let a = index[&self.vertices[e.u]];
                let b = index[&self.vertices[e.v]];
                Edge { u: a.min(b), v: a.max(b), j: e.j }
            })
            .collect();
        edges.sort_by(|a, b| {
            (&vertices[a.u], &vertices[a.v]).cmp(&(&vertices[b.u], &vertices[b.v]))
        });
        let mut order_at = vec![Vec::new(); vertices.len()];
        for x in 0..vertices.len() {
            let mut inc: Vec<usize> = (0..edges.len()).filter(|&e| edges[e].touches(x)).collect();
            inc.sort_by(|&a, &b| vertices[edges[a].other(x)].cmp(&vertices[edges[b].other(x)]));
            order_at[x] = inc;
        }
        Ok(LatticeGraph { dimension: self.dimension, vertices, edges, index, order_at })
    }

    /// Connectivity of the graph (every vertex reachable from the first).
    pub fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &e in self.incident(x) {
                let o = self.edges[e].other(x);
                if !seen[o] {
                    seen[o] = true;
                    stack.push(o);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Same graph with couplings remapped edge by edge (used by the
    /// interpolated-coupling identities).
    pub fn with_couplings<F: Fn(usize, &Edge) -> f64>(&self, f: F) -> LatticeGraph {
        let mut g = self.clone();
        for (i, e) in g.edges.iter_mut().enumerate() {
            e.j = f(i, &self.edges[i]);
        }
        g
    }

    pub fn vertex_index(&self, p: &[i64]) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Incident edges of x in the fixed ordering (B_x).
    pub fn incident(&self, x: usize) -> &[usize] {
        &self.order_at[x]
    }

    /// ind(x, S) = number of edges of S incident to x.
    pub fn vertex_degree_in(&self, x: usize, edge_set: u64) -> u32 {
        self.order_at[x]
            .iter()
            .filter(|&&e| edge_set & (1u64 << e) != 0)
            .count() as u32
    }

    /// ∂S: the vertices of odd index in the edge set S (as a bitmask).
    pub fn boundary(&self, edge_set: u64) -> Vec<usize> {
        let mut deg = vec![0u32; self.vertices.len()];
        for e in 0..self.edges.len() {
            if edge_set & (1u64 << e) != 0 {
                deg[self.edges[e].u] += 1;
                deg[self.edges[e].v] += 1;
            }
        }
        (0..self.vertices.len()).filter(|&x| deg[x] % 2 == 1).collect()
    }

    /// Difference vector vertices[b] − vertices[a].
    pub fn displacement(&self, a: usize, b: usize) -> Point {
        self.vertices[b]
            .iter()
            .zip(&self.vertices[a])
            .map(|(&x, &y)| x - y)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nn_graph_on_2x2_box_has_4_edges() {
        let j = CouplingField::nearest_neighbour(2, 1.0);
        let g = build_graph(&j, &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn nn_graph_on_1x2_box_has_1_edge() {
        let j = CouplingField::nearest_neighbour(2, 1.0);
        let g = build_graph(&j, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn diagonal_couplings_on_2x2_box() {
        // J(x) = J(−x) couples only the (0,0)-(1,1) diagonal here: the other
        // diagonal has difference (1,−1) which is not in the field.
        let j = CouplingField::new(
            2,
            &[(vec![1, 0], 1.0), (vec![0, 1], 1.0), (vec![1, 1], 1.0)],
        )
        .unwrap();
        let g = build_graph(&j, &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 5);

        // With both diagonal offsets the box carries 4 n.n. edges + 2 diagonals.
        let j = CouplingField::new(
            2,
            &[
                (vec![1, 0], 1.0),
                (vec![0, 1], 1.0),
                (vec![1, 1], 1.0),
                (vec![1, -1], 1.0),
            ],
        )
        .unwrap();
        let g = build_graph(&j, &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn empty_box_is_rejected() {
        let j = CouplingField::nearest_neighbour(2, 1.0);
        match build_graph(&j, &[(1, 0), (0, 1)]) {
            Err(CoreError::EmptyRegion) => {}
            other => panic!("expected empty-region error, got {other:?}"),
        }
    }

    #[test]
    fn boundary_of_single_edge_and_cycles() {
        let j = CouplingField::nearest_neighbour(2, 1.0);
        let g = build_graph(&j, &[(0, 1), (0, 1)]).unwrap();
        // single edge
        let b = g.boundary(1u64 << 0);
        assert_eq!(b.len(), 2);
        // the full 4-cycle has empty boundary
        let all = (1u64 << g.edge_count()) - 1;
        assert!(g.boundary(all).is_empty());
    }

    #[test]
    fn edge_order_deterministic_across_builds() {
        let j = CouplingField::nearest_neighbour(2, 0.7);
        let g1 = build_graph(&j, &[(0, 2), (0, 1)]).unwrap();
        let g2 = build_graph(&j, &[(0, 2), (0, 1)]).unwrap();
        for x in 0..g1.vertex_count() {
            assert_eq!(g1.incident(x), g2.incident(x));
        }
    }
}
