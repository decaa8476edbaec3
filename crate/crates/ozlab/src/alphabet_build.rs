//! Building the irreducible-path alphabet of the 2d nearest-neighbour Ising
//! model: enumeration of irreducible paths, infinite-volume line weights by
//! padded-box transfer matrices, and the depth-m conditional potential
//! ψ(z | context) = log q_{β,context}(z) + (t, V(z)).
//!
//! Line weights use q(λ) = w(λ) Π_{e∈Δ(λ)} cosh(βJ) · Z(B∖Δ(λ))/Z(B) with
//! spin-sum partition functions on a padded box, which equals the
//! even-subgraph ratio (the cosh product restores the deleted edges'
//! normalisation); the identity is verified against subset enumeration on
//! tiny boxes in the tests.

use crate::{LabError, Result};
use oz_core::decomp::{displacement, is_irreducible};
use oz_core::lattice::Point;
use oz_core::norm::{dot_i, DualVector, NormModel};
use oz_core::strip::{log_partition, BoxGeom};
use oz_ruelle::{Alphabet, Potential, RuelleOperator};
use std::collections::BTreeSet;

pub type Site = [i64; 2];
pub type Bond = (Site, Site);

fn bond(a: Site, b: Site) -> Bond {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// The four neighbour offsets in the fixed lexicographic edge order.
const OFFSETS: [Site; 4] = [[-1, 0], [0, -1], [0, 1], [1, 0]];

/// Δ(λ) for a path on the infinite lattice: at each step into t_i over the
/// edge from t_{i−1}, consume every incident bond of t_i up to that edge in
/// the lexicographic order of the other endpoint.
pub fn delta_of_path(points: &[Site]) -> BTreeSet<Bond> {
    let mut delta = BTreeSet::new();
    for i in 1..points.len() {
        let at = points[i];
        let prev = points[i - 1];
        let mut nbs: Vec<Site> = OFFSETS.iter().map(|o| [at[0] + o[0], at[1] + o[1]]).collect();
        nbs.sort();
        for nb in nbs {
            delta.insert(bond(at, nb));
            if nb == prev {
                break;
            }
        }
    }
    delta
}

pub fn path_edges(points: &[Site]) -> Vec<Bond> {
    (1..points.len()).map(|i| bond(points[i - 1], points[i])).collect()
}

pub fn edge_self_avoiding(points: &[Site]) -> bool {
    let edges = path_edges(points);
    let set: BTreeSet<Bond> = edges.iter().copied().collect();
    set.len() == edges.len()
}

/// Concatenate translated pieces: each piece starts at the previous endpoint.
pub fn concat_paths(pieces: &[&[Site]]) -> Vec<Site> {
    let mut out: Vec<Site> = vec![[0, 0]];
    for piece in pieces {
        let base = *out.last().unwrap();
        let origin = piece[0];
        for p in &piece[1..] {
            out.push([base[0] + p[0] - origin[0], base[1] + p[1] - origin[1]]);
        }
    }
    out
}

/// log of the infinite-volume weight q_β(λ), approximated on the bounding box
/// of the path padded by `pad`:
/// log q = Σ log tanh βJ + Σ_{Δ} log cosh βJ + log Z(B∖Δ) − log Z(B).
pub fn log_weight_on_box(points: &[Site], beta: f64, j: f64, pad: i64) -> Result<f64> {
    if points.len() < 2 {
        return Ok(0.0);
    }
    if !edge_self_avoiding(points) {
        return Err(LabError::Invalid("path repeats an edge".into()));
    }
    let xs: Vec<i64> = points.iter().map(|p| p[0]).collect();
    let ys: Vec<i64> = points.iter().map(|p| p[1]).collect();
    let geom = BoxGeom {
        x0: xs.iter().min().unwrap() - pad,
        x1: xs.iter().max().unwrap() + pad,
        y0: ys.iter().min().unwrap() - pad,
        y1: ys.iter().max().unwrap() + pad,
    };
    let delta = delta_of_path(points);
    let n_edges = points.len() - 1;
    let w = (beta * j).tanh().ln() * n_edges as f64;
    let coshes = (beta * j).cosh().ln() * delta.len() as f64;
    let jd = |a: [i64; 2], b: [i64; 2]| -> f64 {
        if delta.contains(&bond(a, b)) {
            0.0
        } else {
            j
        }
    };
    let jf = move |_: [i64; 2], _: [i64; 2]| -> f64 { j };
    let z_minus = log_partition(&geom, beta, &jd).map_err(LabError::Core)?;
    let z_full = log_partition(&geom, beta, &jf).map_err(LabError::Core)?;
    Ok(w + coshes + z_minus - z_full)
}

/// log conditional weight q_{β,λ}(γ) = q(γ⨿λ)/q(λ), with both weights
/// computed on the common padded bounding box.
pub fn log_conditional_weight(
    gamma_then_rest: &[Site],
    rest: &[Site],
    beta: f64,
    j: f64,
    pad: i64,
) -> Result<f64> {
    // same box for numerator and denominator: the union's bbox
    let all = gamma_then_rest;
    let xs: Vec<i64> = all.iter().map(|p| p[0]).collect();
    let ys: Vec<i64> = all.iter().map(|p| p[1]).collect();
    let geom = BoxGeom {
        x0: xs.iter().min().unwrap() - pad,
        x1: xs.iter().max().unwrap() + pad,
        y0: ys.iter().min().unwrap() - pad,
        y1: ys.iter().max().unwrap() + pad,
    };
    let lw = |points: &[Site]| -> Result<f64> {
        if points.len() < 2 {
            return Ok(0.0);
        }
        let delta = delta_of_path(points);
        let n_edges = points.len() - 1;
        let w = (beta * j).tanh().ln() * n_edges as f64;
        let coshes = (beta * j).cosh().ln() * delta.len() as f64;
        let jd = |a: [i64; 2], b: [i64; 2]| -> f64 {
            if delta.contains(&bond(a, b)) {
                0.0
            } else {
                j
            }
        };
        let z_minus = log_partition(&geom, beta, &jd).map_err(LabError::Core)?;
        let jf = move |_: [i64; 2], _: [i64; 2]| -> f64 { j };
        let z_full = log_partition(&geom, beta, &jf).map_err(LabError::Core)?;
        Ok(w + coshes + z_minus - z_full)
    };
    Ok(lw(gamma_then_rest)? - lw(rest)?)
}

/// Enumerate irreducible paths from the origin: edge-self-avoiding walks of
/// at most `max_len` steps with interior strictly between the endpoint
/// heights along t, ξ-extent ≤ `e_extent`, transverse extent ≤ `y_max` in
/// the direction perpendicular to t, passing `is_irreducible` and strictly
/// advancing along t (which makes arbitrary concatenations of letters
/// edge-self-avoiding).
pub fn enumerate_irreducible(
    t: &DualVector,
    k: f64,
    delta: f64,
    norm: &NormModel,
    max_len: usize,
    e_extent: f64,
    y_max: i64,
) -> Vec<Vec<Site>> {
    struct Ctx<'a> {
        t: &'a DualVector,
        k: f64,
        delta: f64,
        norm: &'a NormModel,
        max_len: usize,
        e_extent: f64,
        w_max: f64,
        tdir: [f64; 2],
        tperp: [f64; 2],
    }
    let tlen = (t.t[0] * t.t[0] + t.t[1] * t.t[1]).sqrt();
    let ctx = Ctx {
        t,
        k,
        delta,
        norm,
        max_len,
        e_extent,
        w_max: y_max as f64 + 1e-9,
        tdir: [t.t[0] / tlen, t.t[1] / tlen],
        tperp: [-t.t[1] / tlen, t.t[0] / tlen],
    };

    fn dfs(stack: &mut Vec<Site>, edges: &mut BTreeSet<Bond>, out: &mut Vec<Vec<Site>>, c: &Ctx) {
        let last = *stack.last().unwrap();
        // candidate endpoint: must exceed every interior height along t
        if stack.len() >= 2 {
            let h_of = |p: &Site| c.t.t[0] * p[0] as f64 + c.t.t[1] * p[1] as f64;
            let h_last = h_of(&last);
            let interior_ok = stack[1..stack.len() - 1]
                .iter()
                .all(|p| h_of(p) > 0.0 && h_of(p) < h_last);
            if interior_ok && h_last > 0.0 {
                let pts: Vec<Point> = stack.iter().map(|p| vec![p[0], p[1]]).collect();
                if is_irreducible(&pts, c.t, c.k, c.delta, c.norm) {
                    let v = displacement(&pts);
                    if dot_i(&c.t.t, &v) > 1e-12 {
                        out.push(stack.clone());
                    }
                }
            }
        }
        if stack.len() > c.max_len {
            return;
        }
        for off in OFFSETS {
            let next = [last[0] + off[0], last[1] + off[1]];
            let advance = c.tdir[0] * next[0] as f64 + c.tdir[1] * next[1] as f64;
            let transverse = c.tperp[0] * next[0] as f64 + c.tperp[1] * next[1] as f64;
            if advance < 1e-9 {
                continue;
            }
            if transverse.abs() > c.w_max {
                continue;
            }
            if c.norm.xi_lattice(&[next[0], next[1]]) > c.e_extent {
                continue;
            }
            let b = bond(last, next);
            if edges.contains(&b) {
                continue;
            }
            edges.insert(b);
            stack.push(next);
            dfs(stack, edges, out, c);
            stack.pop();
            edges.remove(&b);
        }
    }
    let mut out: Vec<Vec<Site>> = Vec::new();
    let mut stack: Vec<Site> = vec![[0, 0]];
    let mut edges: BTreeSet<Bond> = BTreeSet::new();
    dfs(&mut stack, &mut edges, &mut out, &ctx);
    out.sort();
    out.dedup();
    out
}

/// The truncated renewal alphabet with its tilted conditional potential.
pub struct IrreducibleAlphabet {
    pub beta: f64,
    pub j: f64,
    pub t: Vec<f64>,
    pub paths: Vec<Vec<Site>>,
    pub displacements: Vec<Vec<i64>>,
    /// infinite-volume weights (outer padding)
    pub q_free: Vec<f64>,
    /// max relative difference between the two padded-box approximations
    pub cauchy_diff: f64,
    /// weight of enumerated-but-dropped letters
    pub dropped_weight: f64,
    /// sandwich constant: conditional/free ratios lie in [1/c2, c2]
    pub c2: f64,
    /// (C, θ) fitted from depth-table differences, when a depth-2 probe ran
    pub theta_fit: Option<(f64, f64)>,
    pub operator: RuelleOperator,
}

#[derive(Debug, Clone)]
pub struct AlphabetParams {
    pub beta: f64,
    pub j: f64,
    pub k: f64,
    pub delta: f64,
    pub depth: usize,
    pub max_len: usize,
    pub e_extent: f64,
    pub y_max: i64,
    pub max_symbols: usize,
    /// contexts use only the heaviest `ctx_symbols` letters at depth ≥ 1;
    /// lighter contexts fall back to the depth-0 value
    pub ctx_symbols: usize,
    pub pad: i64,
    /// probe the depth-2 tail on the heaviest few narrow letters
    pub theta_probe: usize,
}

impl Default for AlphabetParams {
    fn default() -> Self {
        AlphabetParams {
            beta: 0.3,
            j: 1.0,
            k: 1.0,
            delta: 0.25,
            depth: 1,
            max_len: 7,
            e_extent: 3.6,
            y_max: 2,
            max_symbols: 48,
            ctx_symbols: 12,
            pad: 2,
            theta_probe: 4,
        }
    }
}

pub fn build_alphabet(
    params: &AlphabetParams,
    t: &DualVector,
    norm: &NormModel,
) -> Result<IrreducibleAlphabet> {
    let candidates = enumerate_irreducible(
        t,
        params.k,
        params.delta,
        norm,
        params.max_len,
        params.e_extent,
        params.y_max,
    );
    if candidates.is_empty() {
        return Err(LabError::Numerical("empty irreducible alphabet".into()));
    }
    // free weights with the two-box Cauchy check
    let mut weighted: Vec<(Vec<Site>, f64, f64)> = Vec::with_capacity(candidates.len());
    for path in candidates {
        let q1 = log_weight_on_box(&path, params.beta, params.j, params.pad)?.exp();
        let q2 = log_weight_on_box(&path, params.beta, params.j, params.pad + 2)?.exp();
        weighted.push((path, q2, (q1 / q2 - 1.0).abs()));
    }
    weighted.sort_by(|a, b| b.1.total_cmp(&a.1));
    let kept = weighted.len().min(params.max_symbols);
    let dropped_weight: f64 = weighted[kept..].iter().map(|w| w.1).sum();
    let cauchy_diff = weighted[..kept].iter().map(|w| w.2).fold(0.0, f64::max);
    let paths: Vec<Vec<Site>> = weighted[..kept].iter().map(|w| w.0.clone()).collect();
    let q_free: Vec<f64> = weighted[..kept].iter().map(|w| w.1).collect();
    let displacements: Vec<Vec<i64>> = paths
        .iter()
        .map(|p| {
            let last = p.last().unwrap();
            vec![last[0], last[1]]
        })
        .collect();

    // depth-0 baseline: ψ0(z) = log q_free + (t, V)
    let tilt = |z: usize| -> f64 { dot_i(&t.t, &displacements[z]) };
    let psi0: Vec<f64> = (0..kept).map(|z| q_free[z].ln() + tilt(z)).collect();

    // depth-m table with contexts restricted to the heaviest ctx_symbols;
    // lighter contexts fall back to the depth-0 value
    let ctx_syms = params.ctx_symbols.min(kept);
    let contexts = oz_ruelle::ContextSet::new(kept, params.depth);
    let mut table = vec![0.0f64; kept * contexts.len()];
    let mut c2: f64 = 1.0;
    let mut d1_max = 0.0f64;
    for z in 0..kept {
        for c in 0..contexts.len() {
            let prefix = contexts.prefix(c);
            let val = if prefix.is_empty() || prefix.iter().any(|&s| s >= ctx_syms) {
                psi0[z]
            } else {
                let mut pieces: Vec<&[Site]> = vec![&paths[z]];
                for &s in &prefix {
                    pieces.push(&paths[s]);
                }
                let chain = concat_paths(&pieces);
                let rest = concat_paths(&pieces[1..]);
                let lc =
                    log_conditional_weight(&chain, &rest, params.beta, params.j, params.pad)?;
                c2 = c2.max((lc - q_free[z].ln()).abs().exp());
                let v = lc + tilt(z);
                d1_max = d1_max.max((v - psi0[z]).abs());
                v
            };
            table[z * contexts.len() + c] = val;
        }
    }
    let pot = Potential { depth: params.depth, theta: 0.5, table };

    // depth-2 probe on the narrowest heavy letters for the Hölder tail fit
    let theta_fit = if params.depth >= 1 && params.theta_probe >= 2 && d1_max > 0.0 {
        let probe: Vec<usize> = (0..kept)
            .filter(|&z| paths[z].iter().all(|p| p[1].abs() <= 1))
            .take(params.theta_probe)
            .collect();
        if probe.len() >= 2 {
            let mut d2_max = 0.0f64;
            for &z in &probe {
                for &c1 in &probe {
                    for &c2s in &probe {
                        let chain =
                            concat_paths(&[&paths[z], &paths[c1], &paths[c2s]]);
                        let rest = concat_paths(&[&paths[c1], &paths[c2s]]);
                        let lc2 = log_conditional_weight(
                            &chain,
                            &rest,
                            params.beta,
                            params.j,
                            params.pad,
                        )?;
                        // depth-1 value with the same first context symbol
                        let chain1 = concat_paths(&[&paths[z], &paths[c1]]);
                        let rest1 = concat_paths(&[&paths[c1]]);
                        let lc1 = log_conditional_weight(
                            &chain1,
                            &rest1,
                            params.beta,
                            params.j,
                            params.pad,
                        )?;
                        d2_max = d2_max.max((lc2 - lc1).abs());
                    }
                }
            }
            if d2_max > 0.0 {
                let theta = (d2_max / d1_max).min(0.999);
                Some((d1_max / theta, theta))
            } else {
                None
            }
        } else {
            None
        }
    } else {
        None
    };

    let alphabet = Alphabet::new(2, displacements.clone()).map_err(LabError::Ruelle)?;
    let operator = RuelleOperator::new(alphabet, &pot).map_err(LabError::Ruelle)?;
    Ok(IrreducibleAlphabet {
        beta: params.beta,
        j: params.j,
        t: t.t.clone(),
        paths,
        displacements,
        q_free,
        cauchy_diff,
        dropped_weight,
        c2,
        theta_fit,
        operator,
    })
}
