//! The random-line representation of the two-point function.
//!
//! A subset D ⊆ B with ∂D = {x, y} determines a backward edge-self-avoiding
//! line λ(D) from x to y together with the consumed edge set Δ(λ); grouping
//! subsets by their line gives
//!
//!   g(x,y) = Σ_{λ: x→y} q(λ),   q(λ) = w(λ) · Z̃(B∖Δ(λ)) / Z̃(B),
//!
//! with w(λ) = Π_{e∈λ} tanh βJ(e) and Z̃ the even-subgraph polynomial.
//! Also here: splitting at last hits, concatenation, the BK inequality,
//! the decoupling ratio and the interpolated-coupling weight identity.

use crate::gibbs::{even_polynomial, full_mask};
use crate::lattice::LatticeGraph;
use crate::xi::gauss_legendre_01;
use crate::{CoreError, Result};
use std::collections::HashMap;

/// An edge-self-avoiding line: vertices t_0..t_n, edge ids e_1..e_n
/// (edges[i] joins verts[i] and verts[i+1]) and the consumed set Δ(λ).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Line {
    pub verts: Vec<usize>,
    pub edges: Vec<usize>,
    pub delta: u64,
}

impl Line {
    pub fn trivial(v: usize) -> Line {
        Line { verts: vec![v], edges: Vec::new(), delta: 0 }
    }

    pub fn is_trivial(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn start(&self) -> usize {
        *self.verts.first().unwrap()
    }

    pub fn end(&self) -> usize {
        *self.verts.last().unwrap()
    }

    pub fn edge_mask(&self) -> u64 {
        self.edges.iter().fold(0u64, |m, &e| m | (1u64 << e))
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.verts.contains(&v)
    }
}

/// Δ(λ) = ∪_i {e ∈ B_{t_i} : e ≤ e_i} in the fixed ordering at t_i.
pub fn delta_of(graph: &LatticeGraph, verts: &[usize], edges: &[usize]) -> u64 {
    let mut delta = 0u64;
    for i in 1..verts.len() {
        let at = verts[i];
        for &f in graph.incident(at) {
            delta |= 1u64 << f;
            if f == edges[i - 1] {
                break;
            }
        }
    }
    delta
}

/// Build a line from a vertex walk, deriving the edge ids and Δ.
/// Consecutive vertices must be adjacent and no edge may repeat.
pub fn line_from_walk(graph: &LatticeGraph, verts: &[usize]) -> Result<Line> {
    if verts.is_empty() {
        return Err(CoreError::Invalid("empty walk".into()));
    }
    if graph.edge_count() > 64 {
        return Err(CoreError::TooLarge("edge masks need ≤ 64 edges".into()));
    }
    let mut edges = Vec::with_capacity(verts.len() - 1);
    for i in 1..verts.len() {
        let (a, b) = (verts[i - 1], verts[i]);
        let eid = graph
            .incident(a)
            .iter()
            .copied()
            .find(|&e| graph.edges[e].other(a) == b)
            .ok_or_else(|| CoreError::Invalid(format!("no edge {a}-{b}")))?;
        if edges.contains(&eid) {
            return Err(CoreError::Invalid("walk repeats an edge".into()));
        }
        edges.push(eid);
    }
    let delta = delta_of(graph, verts, &edges);
    Ok(Line { verts: verts.to_vec(), edges, delta })
}

/// The extraction procedure: walk backward from y, always taking the first
/// unconsumed edge of the current vertex that lies in D, consuming every
/// edge up to it; stop at x and reverse.
pub fn extract_line(graph: &LatticeGraph, d: u64, x: usize, y: usize) -> Result<Line> {
    if graph.edge_count() > 64 {
        return Err(CoreError::TooLarge("edge masks need ≤ 64 edges".into()));
    }
    if x == y {
        return Err(CoreError::Invalid("boundary mismatch".into()));
    }
    let bd = graph.boundary(d);
    if bd.len() != 2 || !bd.contains(&x) || !bd.contains(&y) {
        return Err(CoreError::Invalid("boundary mismatch".into()));
    }
    let mut delta = 0u64;
    let mut back_verts = vec![y];
    let mut back_edges = Vec::new();
    let mut cur = y;
    let budget = graph.edge_count() + 1;
    for _ in 0..budget {
        let mut chosen = None;
        for &e in graph.incident(cur) {
            if delta & (1u64 << e) != 0 {
                continue;
            }
            if d & (1u64 << e) != 0 {
                chosen = Some(e);
                break;
            }
        }
        let e = chosen.ok_or_else(|| CoreError::Invalid("malformed D".into()))?;
        // consume everything up to and including e in the ordering at cur
        for &f in graph.incident(cur) {
            delta |= 1u64 << f;
            if f == e {
                break;
            }
        }
        cur = graph.edges[e].other(cur);
        back_verts.push(cur);
        back_edges.push(e);
        if cur == x {
            let verts: Vec<usize> = back_verts.into_iter().rev().collect();
            let edges: Vec<usize> = back_edges.into_iter().rev().collect();
            return Ok(Line { verts, edges, delta });
        }
    }
    Err(CoreError::Invalid("malformed D".into()))
}

/// λ(D) = λ  ⇔  λ ⊆ D and (Δ(λ)∖λ) ∩ D = ∅.
pub fn reconstructs(line: &Line, d: u64) -> bool {
    let lm = line.edge_mask();
    (lm & d == lm) && ((line.delta & !lm) & d == 0)
}

#[derive(Debug, Clone, Copy)]
pub struct LineWeight {
    /// Π tanh βJ over the line's edges
    pub w: f64,
    /// Z̃(B∖Δ(λ)) / Z̃(B)
    pub ratio: f64,
    pub q: f64,
}

pub fn line_weight(graph: &LatticeGraph, line: &Line, beta: f64) -> Result<LineWeight> {
    let all = full_mask(graph);
    let w: f64 = line
        .edges
        .iter()
        .map(|&e| (beta * graph.edges[e].j).tanh())
        .product();
    let zb = even_polynomial(graph, beta, all)?;
    let zrest = even_polynomial(graph, beta, all & !line.delta)?;
    let ratio = zrest / zb;
    Ok(LineWeight { w, ratio, q: w * ratio })
}

/// Conditional weight q_{β,λ}(γ) = q(γ ⨿ λ) / q(λ).
pub fn conditional_weight(graph: &LatticeGraph, gamma: &Line, lambda: &Line, beta: f64) -> Result<f64> {
    let joined = concat(graph, gamma, lambda)?;
    let qj = line_weight(graph, &joined, beta)?.q;
    let ql = line_weight(graph, lambda, beta)?.q;
    Ok(qj / ql)
}

/// Concatenation γ ⨿ λ: γ must end where λ starts and the union must remain
/// edge-self-avoiding.
pub fn concat(graph: &LatticeGraph, first: &Line, second: &Line) -> Result<Line> {
    if first.is_trivial() {
        return Ok(second.clone());
    }
    if second.is_trivial() {
        return Ok(first.clone());
    }
    if first.end() != second.start() {
        return Err(CoreError::Invalid("concatenation endpoints mismatch".into()));
    }
    if first.edge_mask() & second.edge_mask() != 0 {
        return Err(CoreError::Invalid("concatenation repeats an edge".into()));
    }
    let mut verts = first.verts.clone();
    verts.extend_from_slice(&second.verts[1..]);
    let mut edges = first.edges.clone();
    edges.extend_from_slice(&second.edges);
    let delta = delta_of(graph, &verts, &edges);
    Ok(Line { verts, edges, delta })
}

/// Split at the LAST visit of z: (λ_<(z), λ_>(z)).
pub fn split_at(graph: &LatticeGraph, line: &Line, z: usize) -> Result<(Line, Line)> {
    let pos = line
        .verts
        .iter()
        .rposition(|&v| v == z)
        .ok_or_else(|| CoreError::Invalid("split vertex not on line".into()))?;
    let before = &line.verts[..=pos];
    let after = &line.verts[pos..];
    let e_before = &line.edges[..pos];
    let e_after = &line.edges[pos..];
    let l1 = Line {
        verts: before.to_vec(),
        edges: e_before.to_vec(),
        delta: delta_of(graph, before, e_before),
    };
    let l2 = Line {
        verts: after.to_vec(),
        edges: e_after.to_vec(),
        delta: delta_of(graph, after, e_after),
    };
    Ok((l1, l2))
}

/// All lines x→y with their grouped weights
/// q(λ) = Σ_{D: λ(D)=λ} Π_{e∈D} tanh βJ(e) / Z̃(B).
pub fn enumerate_lines(graph: &LatticeGraph, x: usize, y: usize, beta: f64) -> Result<Vec<(Line, f64)>> {
    let m = graph.edge_count();
    if m > 20 {
        return Err(CoreError::TooLarge("too many edges to enumerate lines".into()));
    }
    if x == y {
        return Err(CoreError::Invalid("endpoints must differ".into()));
    }
    let edge_vmask: Vec<u64> = graph
        .edges
        .iter()
        .map(|e| (1u64 << e.u) | (1u64 << e.v))
        .collect();
    let tanhs: Vec<f64> = graph.edges.iter().map(|e| (beta * e.j).tanh()).collect();
    let target = (1u64 << x) | (1u64 << y);
    let zb = even_polynomial(graph, beta, full_mask(graph))?;

    let mut groups: HashMap<Line, f64> = HashMap::new();
    // Gray-code walk over subsets keeps the parity mask incremental.
    let mut parity = 0u64;
    let mut prev = 0u64;
    for k in 0u64..(1u64 << m) {
        let gray = k ^ (k >> 1);
        let flipped = gray ^ prev;
        if flipped != 0 {
            parity ^= edge_vmask[flipped.trailing_zeros() as usize];
        }
        prev = gray;
        if parity != target {
            continue;
        }
        let mut prod = 1.0f64;
        let mut bits = gray;
        while bits != 0 {
            let e = bits.trailing_zeros() as usize;
            prod *= tanhs[e];
            bits &= bits - 1;
        }
        let line = extract_line(graph, gray, x, y)?;
        debug_assert!(reconstructs(&line, gray));
        *groups.entry(line).or_insert(0.0) += prod;
    }
    let mut out: Vec<(Line, f64)> = groups
        .into_iter()
        .map(|(l, s)| (l, s / zb))
        .collect();
    out.sort_by(|a, b| a.0.verts.cmp(&b.0.verts));
    Ok(out)
}

/// Σ_λ q(λ) over all lines x→y; equals the exact two-point function.
pub fn representation_sum(graph: &LatticeGraph, x: usize, y: usize, beta: f64) -> Result<f64> {
    Ok(enumerate_lines(graph, x, y, beta)?.iter().map(|(_, q)| q).sum())
}

/// BK inequality: Σ_{λ: x→y, λ∋through} q ≤ g(x,through)·g(through,y).
pub fn bk_check(
    graph: &LatticeGraph,
    x: usize,
    y: usize,
    through: usize,
    beta: f64,
) -> Result<(f64, f64, bool)> {
    let lhs: f64 = enumerate_lines(graph, x, y, beta)?
        .iter()
        .filter(|(l, _)| l.contains_vertex(through))
        .map(|(_, q)| q)
        .sum();
    let rhs = if through == x || through == y {
        representation_sum(graph, x, y, beta)?
    } else {
        representation_sum(graph, x, through, beta)?
            * representation_sum(graph, through, y, beta)?
    };
    Ok((lhs, rhs, lhs <= rhs + 1e-12))
}

/// Ratio of conditional weights q_{β,η⨿λ1}(γ) / q_{β,η⨿λ2}(γ).
pub fn decoupling_ratio(
    graph: &LatticeGraph,
    gamma: &Line,
    eta: &Line,
    lambda1: &Line,
    lambda2: &Line,
    beta: f64,
) -> Result<f64> {
    if gamma.delta & (lambda1.delta | lambda2.delta) != 0 {
        return Err(CoreError::Invalid(
            "Δ(γ) must be disjoint from Δ(λ1) ∪ Δ(λ2)".into(),
        ));
    }
    let el1 = concat(graph, eta, lambda1)?;
    let el2 = concat(graph, eta, lambda2)?;
    let c1 = conditional_weight(graph, gamma, &el1, beta)?;
    let c2 = conditional_weight(graph, gamma, &el2, beta)?;
    Ok(c1 / c2)
}

/// The interpolated-coupling identity for the weight of a line:
///
///   q(λ) = w(λ) Π_{e=(t,t')∈Δ(λ)} cosh(βJ(e)) exp{−βJ(e)∫₀¹⟨σ_tσ_{t'}⟩^{J_s} ds},
///
/// where J_s scales every Δ(λ)-edge by s.  The integral is evaluated by
/// Gauss-Legendre quadrature with exact spin sums at each node.
pub fn explicit_weight_check(
    graph: &LatticeGraph,
    line: &Line,
    beta: f64,
    quad_points: usize,
) -> Result<(f64, f64, bool)> {
    if quad_points < 8 {
        return Err(CoreError::Invalid("need at least 8 quadrature points".into()));
    }
    let direct = line_weight(graph, line, beta)?.q;

    let delta_edges: Vec<usize> = (0..graph.edge_count())
        .filter(|&e| line.delta & (1u64 << e) != 0)
        .collect();
    let nodes = gauss_legendre_01(quad_points);
    // ⟨σ_t σ_t'⟩ under J_s for every Δ-edge, per node
    let mut integrals = vec![0.0f64; delta_edges.len()];
    for &(s, wq) in &nodes {
        let scaled = graph.with_couplings(|i, e| {
            if line.delta & (1u64 << i) != 0 {
                s * e.j
            } else {
                e.j
            }
        });
        let table = crate::gibbs::exact_two_point(&scaled, beta)?;
        for (k, &e) in delta_edges.iter().enumerate() {
            let (u, v) = (graph.edges[e].u, graph.edges[e].v);
            let g = table
                .get(&graph.vertices[u], &graph.vertices[v])
                .expect("edge pair present")
                .0;
            integrals[k] += wq * g;
        }
    }
    let w: f64 = line
        .edges
        .iter()
        .map(|&e| (beta * graph.edges[e].j).tanh())
        .product();
    let mut via = w;
    for (k, &e) in delta_edges.iter().enumerate() {
        let bj = beta * graph.edges[e].j;
        via *= bj.cosh() * (-bj * integrals[k]).exp();
    }
    Ok((direct, via, (direct - via).abs() <= 1e-6))
}
