//! Exact two-point oracles: brute-force spin sums and the equivalent
//! even-subgraph (high-temperature) polynomials.
//!
//! The even-subgraph polynomial of an edge set A is
//!   Z̃(A) = Σ_{D ⊆ A, ∂D = ∅} Π_{e∈D} tanh βJ(e),
//! and the spin-sum partition function factors as
//!   Z(A) = 2^{|V|} Π_{e∈A} cosh βJ(e) · Z̃(A),
//! so two-point functions and line-weight ratios can be computed entirely
//! from Z̃.  The cancellation is verified against spin sums in the tests.

use crate::lattice::{LatticeGraph, Point};
use crate::{CoreError, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Brute,
    Strip,
    MonteCarlo,
    ToyModel,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::Strip => "strip",
            Method::MonteCarlo => "monte-carlo",
            Method::ToyModel => "toy-model",
        }
    }
}

/// Two-point function values g(x, y) with per-entry statistical errors
/// (zero for exact methods).  Keys are stored with the lexicographically
/// smaller point first; g(x, x) = 1 implicitly.
#[derive(Debug, Clone)]
pub struct CorrelationTable {
    pub beta: f64,
    pub method: Method,
    entries: BTreeMap<(Point, Point), (f64, f64)>,
}

impl CorrelationTable {
    pub fn new(beta: f64, method: Method) -> Self {
        CorrelationTable { beta, method, entries: BTreeMap::new() }
    }

    fn key(x: &[i64], y: &[i64]) -> (Point, Point) {
        if x <= y {
            (x.to_vec(), y.to_vec())
        } else {
            (y.to_vec(), x.to_vec())
        }
    }

    pub fn insert(&mut self, x: &[i64], y: &[i64], g: f64, stderr: f64) {
        self.entries.insert(Self::key(x, y), (g, stderr));
    }

    pub fn get(&self, x: &[i64], y: &[i64]) -> Option<(f64, f64)> {
        if x == y {
            return Some((1.0, 0.0));
        }
        self.entries.get(&Self::key(x, y)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Point, Point), &(f64, f64))> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `corr.csv` rows: displacement coordinates, value, stderr, method tag.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        let d = self
            .entries
            .keys()
            .next()
            .map(|(x, _)| x.len())
            .unwrap_or(0);
        let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},g,stderr,method", header.join(","))?;
        for ((x, y), (g, se)) in &self.entries {
            let disp: Vec<String> = y
                .iter()
                .zip(x)
                .map(|(&a, &b)| format!("{}", a - b))
                .collect();
            writeln!(
                w,
                "{},{:.16e},{:.16e},{}",
                disp.join(","),
                g,
                se,
                self.method.tag()
            )?;
        }
        Ok(())
    }
}

fn vertex_mask(vertices: &[usize]) -> u64 {
    vertices.iter().fold(0u64, |m, &v| m | (1u64 << v))
}

/// Σ over D ⊆ allowed with ∂D = target of Π tanh βJ(e); depth-first over the
/// allowed edges, exact products (no divisions).
pub fn even_subgraph_sum(graph: &LatticeGraph, beta: f64, allowed: u64, target: &[usize]) -> Result<f64> {
    if graph.edge_count() > 24 {
        return Err(CoreError::TooLarge("too many edges for subgraph enumeration".into()));
    }
    if graph.vertex_count() > 64 {
        return Err(CoreError::TooLarge("too many vertices for parity masks".into()));
    }
    let edges: Vec<usize> = (0..graph.edge_count())
        .filter(|&e| allowed & (1u64 << e) != 0)
        .collect();
    let tanhs: Vec<f64> = edges.iter().map(|&e| (beta * graph.edges[e].j).tanh()).collect();
    let masks: Vec<u64> = edges
        .iter()
        .map(|&e| (1u64 << graph.edges[e].u) | (1u64 << graph.edges[e].v))
        .collect();
    let target = vertex_mask(target);

    fn rec(i: usize, parity: u64, prod: f64, target: u64, tanhs: &[f64], masks: &[u64]) -> f64 {
        if i == tanhs.len() {
            return if parity == target { prod } else { 0.0 };
        }
        rec(i + 1, parity, prod, target, tanhs, masks)
            + rec(i + 1, parity ^ masks[i], prod * tanhs[i], target, tanhs, masks)
    }
    Ok(rec(0, 0, 1.0, target, &tanhs, &masks))
}

/// Z̃ of an edge subset (∂D = ∅).
pub fn even_polynomial(graph: &LatticeGraph, beta: f64, allowed: u64) -> Result<f64> {
    even_subgraph_sum(graph, beta, allowed, &[])
}

pub fn full_mask(graph: &LatticeGraph) -> u64 {
    if graph.edge_count() == 64 {
        u64::MAX
    } else {
        (1u64 << graph.edge_count()) - 1
    }
}

/// High-temperature expansion of the two-point function:
/// g(x,y) = Σ_{∂D={x,y}} Π tanh / Z̃(B).
pub fn ht_two_point(graph: &LatticeGraph, x: usize, y: usize, beta: f64) -> Result<f64> {
    let all = full_mask(graph);
    let num = even_subgraph_sum(graph, beta, all, &[x, y])?;
    let den = even_polynomial(graph, beta, all)?;
    Ok(num / den)
}

/// Exact ⟨σ_x σ_y⟩ for all vertex pairs by Gray-code spin enumeration,
/// with the ferromagnetic weight exp{+β Σ J σσ}.
pub fn exact_two_point(graph: &LatticeGraph, beta: f64) -> Result<CorrelationTable> {
    let n = graph.vertex_count();
    if n > 24 {
        return Err(CoreError::TooLarge("graph too large for enumeration".into()));
    }
    let mut spins = vec![1i8; n];
    let mut energy: f64 = graph.edges.iter().map(|e| e.j).sum();

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .collect();
    let mut z = 0.0f64;
    let mut num = vec![0.0f64; pairs.len()];

    let total: u64 = 1u64 << n;
    for k in 0..total {
        if k > 0 {
            let flip = (k.trailing_zeros()) as usize;
            let mut local = 0.0;
            for &eid in graph.incident(flip) {
                let e = &graph.edges[eid];
                local += e.j * spins[e.other(flip)] as f64;
            }
            energy -= 2.0 * spins[flip] as f64 * local;
            spins[flip] = -spins[flip];
        }
        let w = (beta * energy).exp();
        z += w;
        for (i, &(a, b)) in pairs.iter().enumerate() {
            num[i] += (spins[a] * spins[b]) as f64 * w;
        }
    }

    let mut table = CorrelationTable::new(beta, Method::Brute);
    for (i, &(a, b)) in pairs.iter().enumerate() {
        table.insert(&graph.vertices[a], &graph.vertices[b], num[i] / z, 0.0);
    }
    Ok(table)
}

/// Exact g for a single pair, by spin sums.
pub fn exact_pair(graph: &LatticeGraph, x: usize, y: usize, beta: f64) -> Result<f64> {
    let table = exact_two_point(graph, beta)?;
    Ok(table
        .get(&graph.vertices[x], &graph.vertices[y])
        .expect("pair present")
        .0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_graph, CouplingField, LatticeGraph};

    pub fn triangle(j: f64) -> LatticeGraph {
        let field = CouplingField::new(
            2,
            &[(vec![1, 0], j), (vec![0, 1], j), (vec![1, -1], j)],
        )
        .unwrap();
        LatticeGraph::from_sites(&field, &[vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap()
    }

    #[test]
    fn single_edge_is_tanh() {
        let field = CouplingField::nearest_neighbour(1, 1.0);
        let g = build_graph(&field, &[(0, 1)]).unwrap();
        let t = exact_two_point(&g, 0.5).unwrap();
        let got = t.get(&[0], &[1]).unwrap().0;
        assert!((got - 0.5f64.tanh()).abs() < 1e-12);
        assert!((got - 0.46211715726000974).abs() < 1e-8);
    }

    #[test]
    fn beta_zero_decouples() {
        let field = CouplingField::nearest_neighbour(2, 1.0);
        let g = build_graph(&field, &[(0, 1), (0, 2)]).unwrap();
        let t = exact_two_point(&g, 0.0).unwrap();
        for ((x, y), (v, _)) in t.iter() {
            if x != y {
                assert!(v.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn triangle_closed_form() {
        let beta = 0.37f64;
        let g = triangle(1.0);
        let u = beta.tanh();
        let expect = (u + u * u) / (1.0 + u * u * u);
        let x = g.vertex_index(&[0, 0]).unwrap();
        let y = g.vertex_index(&[1, 0]).unwrap();
        let spin = exact_pair(&g, x, y, beta).unwrap();
        assert!((spin - expect).abs() < 1e-12);
        let ht = ht_two_point(&g, x, y, beta).unwrap();
        assert!((ht - expect).abs() < 1e-12);
    }

    #[test]
    fn ht_identity_matches_spin_sums_on_2x3_grid() {
        let field = CouplingField::nearest_neighbour(2, 1.0);
        let g = build_graph(&field, &[(0, 1), (0, 2)]).unwrap();
        let t = exact_two_point(&g, 0.3).unwrap();
        for a in 0..g.vertex_count() {
            for b in (a + 1)..g.vertex_count() {
                let ht = ht_two_point(&g, a, b, 0.3).unwrap();
                let spin = t.get(&g.vertices[a], &g.vertices[b]).unwrap().0;
                assert!((ht - spin).abs() < 1e-12, "pair {a},{b}: {ht} vs {spin}");
            }
        }
    }

    #[test]
    fn griffiths_monotone_in_added_edges() {
        // adding an edge never decreases g: check on all ≤ 2×3 subgraph pairs
        let field = CouplingField::nearest_neighbour(2, 1.0);
        let g = build_graph(&field, &[(0, 1), (0, 2)]).unwrap();
        let beta = 0.4;
        let m = g.edge_count();
        for sub in 0u64..(1 << m) {
            for e in 0..m {
                if sub & (1 << e) != 0 {
                    continue;
                }
                let bigger = sub | (1 << e);
                // compare g on the same vertex set with couplings zeroed
                let small = g.with_couplings(|i, edge| {
                    if sub & (1 << i) != 0 {
                        edge.j
                    } else {
                        0.0
                    }
                });
                let large = g.with_couplings(|i, edge| {
                    if bigger & (1 << i) != 0 {
                        edge.j
                    } else {
                        0.0
                    }
                });
                // zero couplings are allowed here because with_couplings keeps
                // the edge list fixed; tanh(0) = 0 kills those edges in Z̃.
                let ts = exact_two_point(&small, beta).unwrap();
                let tl = exact_two_point(&large, beta).unwrap();
                for ((x, y), (gs, _)) in ts.iter() {
                    let gl = tl.get(x, y).unwrap().0;
                    assert!(gl >= *gs - 1e-12);
                }
            }
        }
    }
}
