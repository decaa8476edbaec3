//! Break points, (t,K,δ)-correctness and the irreducible decomposition
//! λ = μ ⨿ γ_1 ⨿ … ⨿ γ_m ⨿ η of a lattice path.
//!
//! A break point of λ is an interior vertex visited once whose t-height
//! strictly separates everything before from everything after; it is correct
//! when the whole suffix stays inside 2K·U_β + Y_δ(t) of it.  The path is
//! split at every correct break point; the middle pieces are then refined at
//! their own (standalone) correct break points until none remain, which makes
//! every emitted γ a member of the irreducible set S(t,K,δ).  Refinement
//! splits only at break points of λ, so the (P1)–(P4) structure is preserved,
//! and the regrouping of weights is exact for any deterministic splitting.

use crate::lattice::Point;
use crate::norm::{dot_i, in_forward_cone, DualVector, NormModel};
use crate::{CoreError, Result};

fn diff(a: &[i64], b: &[i64]) -> Point {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// V(λ) = t_n − t_0.
pub fn displacement(path: &[Point]) -> Point {
    if path.is_empty() {
        return Vec::new();
    }
    diff(path.last().unwrap(), path.first().unwrap())
}

/// Interior indices l with a unique visit and
/// max_{k<l}(i_k,t) < (i_l,t) < min_{k>l}(i_k,t).
pub fn find_break_points(path: &[Point], t: &DualVector) -> Vec<usize> {
    let n = path.len();
    if n < 3 {
        return Vec::new();
    }
    let h: Vec<f64> = path.iter().map(|p| dot_i(&t.t, p)).collect();
    (1..n - 1)
        .filter(|&l| {
            path.iter().enumerate().all(|(k, p)| k == l || p != &path[l])
                && (0..l).all(|k| h[k] < h[l])
                && ((l + 1)..n).all(|k| h[k] > h[l])
        })
        .collect()
}

/// v ∈ 2K·U_β + Y_δ(t), tested by sampled decompositions v = u + w with
/// ξ(u) ≤ 2K and w ∈ Y_δ(t); u ranges over the ball boundary samples plus
/// u = v and u = 0.  Exact for the sampled geometry within tolerance.
pub fn inflated_cone_member(
    v: &[i64],
    t: &DualVector,
    k: f64,
    delta: f64,
    norm: &NormModel,
) -> bool {
    let radius = 2.0 * k;
    if norm.xi_lattice(v) <= radius + 1e-9 {
        return true;
    }
    if in_forward_cone(t, delta, v, norm).unwrap_or(false) {
        return true;
    }
    if v.len() != 2 {
        return false;
    }
    let vf: Vec<f64> = v.iter().map(|&c| c as f64).collect();
    for s in 0..64 {
        let a = 2.0 * std::f64::consts::PI * s as f64 / 64.0;
        let dir = [a.cos(), a.sin()];
        let xi_dir = norm.xi(&dir);
        if xi_dir <= 0.0 {
            continue;
        }
        let u = [radius * dir[0] / xi_dir, radius * dir[1] / xi_dir];
        let w = [vf[0] - u[0], vf[1] - u[1]];
        if crate::norm::in_forward_cone_f(t, delta, &w, norm).unwrap_or(false) {
            return true;
        }
    }
    false
}

/// The break point at index l is (t,K,δ)-correct: every later vertex lies in
/// 2K·U_β(i_l) + Y_δ(t).
pub fn is_correct_break(
    path: &[Point],
    l: usize,
    t: &DualVector,
    k: f64,
    delta: f64,
    norm: &NormModel,
) -> bool {
    ((l + 1)..path.len()).all(|j| {
        let v = diff(&path[j], &path[l]);
        inflated_cone_member(&v, t, k, delta, norm)
    })
}

/// Membership in the basic irreducible set S(t,K,δ): the path starts at 0,
/// its interior heights lie strictly between the endpoint heights, it is
/// confined to 2K·U_β(0) + Y_δ(t), and it has no correct break points.
pub fn is_irreducible(
    path: &[Point],
    t: &DualVector,
    k: f64,
    delta: f64,
    norm: &NormModel,
) -> bool {
    if path.len() < 2 {
        return false;
    }
    if path[0].iter().any(|&c| c != 0) {
        return false;
    }
    let h: Vec<f64> = path.iter().map(|p| dot_i(&t.t, p)).collect();
    let h0 = h[0];
    let hn = *h.last().unwrap();
    if !(1..path.len() - 1).all(|l| h0 < h[l] && h[l] < hn) {
        return false;
    }
    if !path.iter().skip(1).all(|p| {
        let v = diff(p, &path[0]);
        inflated_cone_member(&v, t, k, delta, norm)
    }) {
        return false;
    }
    let breaks = find_break_points(path, t);
    breaks
        .iter()
        .all(|&l| !is_correct_break(path, l, t, k, delta, norm))
}

/// μ ⨿ γ_1 ⨿ … ⨿ γ_m ⨿ η as index ranges into the original path.
#[derive(Debug, Clone, PartialEq)]
pub struct IrreducibleDecomposition {
    /// split positions y_1 … y_{m+1} (path indices, strictly increasing)
    pub splits: Vec<usize>,
    pub degenerate: bool,
}

impl IrreducibleDecomposition {
    pub fn mu<'a>(&self, path: &'a [Point]) -> &'a [Point] {
        if self.degenerate {
            path
        } else {
            &path[..=self.splits[0]]
        }
    }

    pub fn eta<'a>(&self, path: &'a [Point]) -> &'a [Point] {
        if self.degenerate {
            &path[path.len() - 1..]
        } else {
            &path[*self.splits.last().unwrap()..]
        }
    }

    pub fn gammas<'a>(&self, path: &'a [Point]) -> Vec<&'a [Point]> {
        if self.degenerate {
            return Vec::new();
        }
        self.splits
            .windows(2)
            .map(|w| &path[w[0]..=w[1]])
            .collect()
    }

    pub fn m(&self) -> usize {
        self.splits.len().saturating_sub(1)
    }

    /// Re-concatenation of the pieces reproduces the path (index identity).
    pub fn reconstructs(&self, path: &[Point]) -> bool {
        if self.degenerate {
            return true;
        }
        let mut idx = Vec::new();
        idx.extend(0..=self.splits[0]);
        for w in self.splits.windows(2) {
            idx.extend(w[0] + 1..=w[1]);
        }
        idx.extend(self.splits.last().unwrap() + 1..path.len());
        idx == (0..path.len()).collect::<Vec<_>>()
    }
}

/// Split at every correct break point of λ, then refine the middle pieces at
/// their own standalone correct break points until every γ is irreducible.
pub fn irreducible_decompose(
    path: &[Point],
    t: &DualVector,
    k: f64,
    delta: f64,
    norm: &NormModel,
) -> IrreducibleDecomposition {
    let breaks = find_break_points(path, t);
    let correct: Vec<usize> = breaks
        .into_iter()
        .filter(|&l| is_correct_break(path, l, t, k, delta, norm))
        .collect();
    if correct.is_empty() {
        return IrreducibleDecomposition { splits: Vec::new(), degenerate: true };
    }
    let mut splits = correct;
    // refinement: inside each γ = path[a..=b], split at the first standalone
    // correct break of the (shifted) piece, repeatedly
    let mut i = 0;
    while i + 1 < splits.len() {
        let (a, b) = (splits[i], splits[i + 1]);
        let piece: Vec<Point> = path[a..=b]
            .iter()
            .map(|p| diff(p, &path[a]))
            .collect();
        let inner = find_break_points(&piece, t)
            .into_iter()
            .find(|&l| is_correct_break(&piece, l, t, k, delta, norm));
        match inner {
            Some(l) => splits.insert(i + 1, a + l),
            None => i += 1,
        }
    }
    IrreducibleDecomposition { splits, degenerate: false }
}

/// The (P4)/(P2) predicates for the boundary pieces, relative to the parent
/// path: no correct break points of λ inside μ or η, and η cone-confined
/// from its base.
pub fn mu_satisfies_p4(
    path: &[Point],
    dec: &IrreducibleDecomposition,
    t: &DualVector,
    k: f64,
    delta: f64,
    norm: &NormModel,
) -> bool {
    let limit = if dec.degenerate { path.len() } else { dec.splits[0] };
    find_break_points(path, t)
        .into_iter()
        .filter(|&l| l < limit)
        .all(|l| !is_correct_break(path, l, t, k, delta, norm))
}

pub fn eta_satisfies_p2(
    path: &[Point],
    dec: &IrreducibleDecomposition,
    t: &DualVector,
    k: f64,
    delta: f64,
    norm: &NormModel,
) -> bool {
    if dec.degenerate {
        return true;
    }
    let base = *dec.splits.last().unwrap();
    let confined = ((base + 1)..path.len()).all(|j| {
        let v = diff(&path[j], &path[base]);
        inflated_cone_member(&v, t, k, delta, norm)
    });
    let no_correct = find_break_points(path, t)
        .into_iter()
        .filter(|&l| l > base)
        .all(|l| !is_correct_break(path, l, t, k, delta, norm));
    confined && no_correct
}

/// Verification of the irreducible regrouping on a finite graph: the exact
/// two-point function equals the regrouped sum over non-degenerate lines plus
/// the (reported) degenerate mass.
#[derive(Debug, Clone)]
pub struct RegroupReport {
    pub lhs: f64,
    pub rhs: f64,
    pub degenerate_mass: f64,
    pub defect: f64,
    pub lines: usize,
    pub degenerate_lines: usize,
    /// x ∈ Y_{δ/2}(t) forward-direction guard (report only)
    pub forward_guard_ok: bool,
    /// tally of γ pieces by displacement
    pub gamma_displacements: std::collections::BTreeMap<Point, usize>,
}

pub fn verify_irreducible_representation(
    graph: &crate::lattice::LatticeGraph,
    x: usize,
    y: usize,
    beta: f64,
    t: &DualVector,
    k: f64,
    delta: f64,
    norm: &NormModel,
) -> Result<RegroupReport> {
    use std::collections::BTreeMap;
    let lhs = crate::gibbs::exact_pair(graph, x, y, beta)?;
    let lines = crate::line::enumerate_lines(graph, x, y, beta)?;
    let disp = graph.displacement(x, y);
    let forward_guard_ok = in_forward_cone(t, delta / 2.0, &disp, norm).unwrap_or(false);

    let mut rhs_groups: BTreeMap<Vec<Vec<Point>>, f64> = BTreeMap::new();
    let mut degenerate_mass = 0.0;
    let mut degenerate_lines = 0usize;
    let mut gamma_displacements: BTreeMap<Point, usize> = BTreeMap::new();
    let nlines = lines.len();
    for (line, q) in lines {
        let pts: Vec<Point> = line.verts.iter().map(|&v| graph.vertices[v].clone()).collect();
        let dec = irreducible_decompose(&pts, t, k, delta, norm);
        if !dec.reconstructs(&pts) {
            return Err(CoreError::Numerical("decomposition failed to reconstruct".into()));
        }
        if dec.degenerate {
            degenerate_mass += q;
            degenerate_lines += 1;
            continue;
        }
        for g in dec.gammas(&pts) {
            *gamma_displacements.entry(displacement(g)).or_insert(0) += 1;
        }
        let mut key: Vec<Vec<Point>> = Vec::with_capacity(dec.m() + 2);
        key.push(dec.mu(&pts).to_vec());
        for g in dec.gammas(&pts) {
            key.push(g.to_vec());
        }
        key.push(dec.eta(&pts).to_vec());
        *rhs_groups.entry(key).or_insert(0.0) += q;
    }
    let rhs: f64 = rhs_groups.values().sum();
    let defect = (lhs - rhs - degenerate_mass).abs();
    Ok(RegroupReport {
        lhs,
        rhs,
        degenerate_mass,
        defect,
        lines: nlines,
        degenerate_lines,
        forward_guard_ok,
        gamma_displacements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_graph, CouplingField};
    use crate::norm::dual_vector;

    fn setup(scale: f64) -> (NormModel, DualVector) {
        let norm = NormModel::euclidean(2, scale);
        let t = dual_vector(&norm, &[1.0, 0.0]).unwrap();
        (norm, t)
    }

    fn pts(coords: &[(i64, i64)]) -> Vec<Point> {
        coords.iter().map(|&(x, y)| vec![x, y]).collect()
    }

    #[test]
    fn monotone_staircase_all_breaks() {
        let (_, t) = setup(1.0);
        let path = pts(&[(0, 0), (1, 0), (2, 0), (3, 0)]);
        assert_eq!(find_break_points(&path, &t), vec![1, 2]);
    }

    #[test]
    fn backtrack_past_height_kills_break() {
        let (_, t) = setup(1.0);
        // goes to 2, returns to height 1, then on: the vertex at height 2
        // (first visit) is no longer a break point
        let path = pts(&[(0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (3, 1), (4, 1)]);
        let breaks = find_break_points(&path, &t);
        assert!(!breaks.contains(&2));
        assert!(!breaks.contains(&1)); // height 1 revisited at (1,1)
    }

    #[test]
    fn two_vertex_path_has_no_breaks() {
        let (_, t) = setup(1.0);
        assert!(find_break_points(&pts(&[(0, 0), (1, 0)]), &t).is_empty());
    }

    #[test]
    fn correctness_cases() {
        let (norm, t) = setup(1.0);
        // suffix inside the 2K ball: correct regardless of cone
        let path = pts(&[(0, 0), (1, 0), (2, 0), (2, 1)]);
        assert!(is_correct_break(&path, 1, &t, 2.0, 0.25, &norm));
        // suffix far along +t: correct
        let path = pts(&[(0, 0), (1, 0), (20, 0), (30, 0)]);
        assert!(is_correct_break(&path, 1, &t, 1.0, 0.25, &norm));
        // suffix far along −t from the break: not correct
        let path = pts(&[(0, 0), (30, 0), (5, 3), (2, 5)]);
        assert!(!is_correct_break(&path, 1, &t, 1.0, 0.25, &norm));
    }

    #[test]
    fn straight_line_decomposes_into_single_edges() {
        let (norm, t) = setup(1.0);
        let path: Vec<Point> = (0..=6i64).map(|x| vec![x, 0]).collect();
        // K small: every interior vertex is a correct break
        let dec = irreducible_decompose(&path, &t, 0.25, 0.25, &norm);
        assert!(!dec.degenerate);
        assert_eq!(dec.splits, vec![1, 2, 3, 4, 5]);
        assert_eq!(dec.m(), 4);
        for g in dec.gammas(&path) {
            let shifted: Vec<Point> =
                g.iter().map(|p| diff(p, &g[0])).collect();
            assert!(is_irreducible(&shifted, &t, 0.25, 0.25, &norm));
        }
        assert!(dec.reconstructs(&path));
        assert!(mu_satisfies_p4(&path, &dec, &t, 0.25, 0.25, &norm));
        assert!(eta_satisfies_p2(&path, &dec, &t, 0.25, 0.25, &norm));
    }

    #[test]
    fn no_correct_breaks_is_degenerate() {
        let (norm, t) = setup(1.0);
        // path dips below the start height: no break points at all
        let path = pts(&[(0, 0), (1, 0), (1, -1), (0, -1), (-1, -1), (2, -1), (2, 0), (3, 0)]);
        let breaks = find_break_points(&path, &t);
        let dec = irreducible_decompose(&path, &t, 1.0, 0.25, &norm);
        if breaks.is_empty() {
            assert!(dec.degenerate);
        }
        assert!(dec.reconstructs(&path));
    }

    #[test]
    fn irreducibility_conditions() {
        let (norm, t) = setup(1.0);
        // single edge along t
        assert!(is_irreducible(&pts(&[(0, 0), (1, 0)]), &t, 1.0, 0.25, &norm));
        // dips below height 0: violates condition 1
        assert!(!is_irreducible(&pts(&[(0, 0), (0, -1), (1, -1), (1, 0), (2, 0)]), &t, 1.0, 0.25, &norm));
        // two irreducibles joined at a correct break: violates condition 3
        let joined = pts(&[(0, 0), (1, 0), (2, 0)]);
        assert!(!is_irreducible(&joined, &t, 0.25, 0.25, &norm));
    }

    #[test]
    fn displacement_telescopes() {
        let path = pts(&[(0, 0), (1, 0), (1, 1)]);
        assert_eq!(displacement(&path), vec![1, 1]);
        let trivial = pts(&[(5, 5)]);
        assert_eq!(displacement(&trivial), vec![0, 0]);
        for cut in 1..path.len() {
            let a = displacement(&path[..cut]);
            let b = displacement(&path[cut - 1..]);
            let s: Point = a.iter().zip(&b).map(|(&u, &v)| u + v).collect();
            assert_eq!(s, displacement(&path));
        }
    }

    #[test]
    fn regrouping_exact_on_2x3_grid() {
        let field = CouplingField::nearest_neighbour(2, 1.0);
        let g = build_graph(&field, &[(0, 2), (0, 1)]).unwrap();
        let (norm, t) = setup(0.8);
        let x = g.vertex_index(&[0, 0]).unwrap();
        let y = g.vertex_index(&[2, 0]).unwrap();
        let rep =
            verify_irreducible_representation(&g, x, y, 0.3, &t, 1.0, 0.25, &norm).unwrap();
        assert!(rep.defect < 1e-12, "{rep:?}");
        assert!(rep.lhs > 0.0 && rep.rhs > 0.0);
    }

    #[test]
    fn emitted_gammas_are_irreducible_on_grid_lines() {
        let field = CouplingField::nearest_neighbour(2, 1.0);
        let g = build_graph(&field, &[(0, 2), (0, 1)]).unwrap();
        let (norm, t) = setup(0.8);
        let lines = crate::line::enumerate_lines(&g, 0, 4, 0.3).unwrap();
        for (line, _) in lines {
            let path: Vec<Point> =
                line.verts.iter().map(|&v| g.vertices[v].clone()).collect();
            let dec = irreducible_decompose(&path, &t, 1.0, 0.25, &norm);
            assert!(dec.reconstructs(&path));
            for gp in dec.gammas(&path) {
                let shifted: Vec<Point> = gp.iter().map(|p| diff(p, &gp[0])).collect();
                assert!(
                    is_irreducible(&shifted, &t, 1.0, 0.25, &norm),
                    "piece {shifted:?} of {path:?}"
                );
            }
            assert!(mu_satisfies_p4(&path, &dec, &t, 1.0, 0.25, &norm));
            assert!(eta_satisfies_p2(&path, &dec, &t, 1.0, 0.25, &norm));
            // determinism
            let dec2 = irreducible_decompose(&path, &t, 1.0, 0.25, &norm);
            assert_eq!(dec, dec2);
        }
    }
}
