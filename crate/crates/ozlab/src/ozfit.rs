//! The OZ prefactor assembly Φ = Σ_{μ,η} φ_{μ,η} q(μ)q(η)e^{(t,V(μ)+V(η))},
//! the decay-exponent fit of correlation tables against
//! Φ·|x|^{−p}·e^{−ξ|x|}, and the strict triangle inequality of the norm.

use crate::{LabError, Result};
use oz_core::gibbs::CorrelationTable;
use oz_core::norm::NormModel;
use oz_core::xi::{least_squares, XiEstimate};

/// adj(A) = det(A)·A⁻¹, well defined also for singular A (d ≤ 3).
pub fn adjugate(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    match a.len() {
        1 => vec![vec![1.0]],
        2 => vec![
            vec![a[1][1], -a[0][1]],
            vec![-a[1][0], a[0][0]],
        ],
        3 => {
            let c = |i: usize, j: usize| -> f64 {
                let r: Vec<usize> = (0..3).filter(|&k| k != i).collect();
                let s: Vec<usize> = (0..3).filter(|&k| k != j).collect();
                let m = a[r[0]][s[0]] * a[r[1]][s[1]] - a[r[0]][s[1]] * a[r[1]][s[0]];
                if (i + j) % 2 == 0 {
                    m
                } else {
                    -m
                }
            };
            // transpose of the cofactor matrix
            (0..3)
                .map(|i| (0..3).map(|j| c(j, i)).collect())
                .collect()
        }
        n => panic!("adjugate supports d ≤ 3, got {n}"),
    }
}

/// One boundary-condition pair (μ, η): its total weight
/// q(μ)q(η)e^{(t,V(μ)+V(η))} and the projector value χ_{μ,η}(0).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPair {
    pub weight: f64,
    pub chi: f64,
}

/// φ_{μ,η} = χ · |v|^{(d−1)/2} / √((2π)^{d−1} · (adj(A)v, v)) with
/// v = ∇log ρ(0); the adjugate form of 𝒜(v)·det A stays finite when the
/// observable is confined to a hyperplane (degenerate toys).
pub fn oz_prefactor(pairs: &[BoundaryPair], a: &[Vec<f64>], drift: &[f64]) -> Result<f64> {
    let d = drift.len();
    let vlen: f64 = drift.iter().map(|x| x * x).sum::<f64>().sqrt();
    if vlen == 0.0 {
        return Err(LabError::Numerical("zero drift in prefactor".into()));
    }
    let adj = adjugate(a);
    let quad: f64 = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| adj[i][j] * drift[j])
                .sum::<f64>()
                * drift[i]
        })
        .sum();
    if !(quad > 0.0) {
        return Err(LabError::Numerical(format!(
            "adj(A)-form not positive ({quad:.3e}); observable fully degenerate"
        )));
    }
    let tau = 2.0 * std::f64::consts::PI;
    let geom = vlen.powf((d as f64 - 1.0) / 2.0) / (tau.powi(d as i32 - 1) * quad).sqrt();
    Ok(pairs.iter().map(|p| p.weight * p.chi * geom).sum())
}

#[derive(Debug, Clone)]
pub struct OzFit {
    pub direction: Vec<f64>,
    pub xi: f64,
    pub p_hat: f64,
    pub phi_hat: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub points: usize,
}

/// Least squares of log g(x) + ξ̂|x| against −p·log|x| + log Φ for table
/// entries along origin + k·step inside the window.
pub fn oz_fit(
    table: &CorrelationTable,
    xi: &XiEstimate,
    origin: &[i64],
    step: &[i64],
    window: (f64, f64),
) -> Result<OzFit> {
    let step_len = (step.iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt();
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    let mut k = 1i64;
    loop {
        let r = k as f64 * step_len;
        if r > window.1 {
            break;
        }
        if r >= window.0 {
            let x: Vec<i64> = origin.iter().zip(step).map(|(&o, &s)| o + k * s).collect();
            if let Some((g, _)) = table.get(origin, &x) {
                if g > 0.0 {
                    rows.push(vec![-r.ln(), 1.0]);
                    ys.push(g.ln() + xi.rate * r);
                }
            }
        }
        k += 1;
    }
    if rows.len() < 6 {
        return Err(LabError::Invalid("need at least 6 points in the fit window".into()));
    }
    let coef = least_squares(&rows, &ys).map_err(LabError::Core)?;
    let residual = (rows
        .iter()
        .zip(&ys)
        .map(|(row, &y)| (row[0] * coef[0] + row[1] * coef[1] - y).powi(2))
        .sum::<f64>()
        / ys.len() as f64)
        .sqrt();
    Ok(OzFit {
        direction: xi.direction.clone(),
        xi: xi.rate,
        p_hat: coef[0],
        phi_hat: coef[1].exp(),
        window,
        residual,
        points: rows.len(),
    })
}

#[derive(Debug, Clone)]
pub struct TriangleReport {
    pub min_slack: f64,
    pub worst_pair: (Vec<i64>, Vec<i64>),
    pub pairs: usize,
}

/// ξ(u) + ξ(v) − ξ(u+v) ≥ κ̄ (|u| + |v| − |u+v|) over a grid of pairs;
/// κ̄ is the 2d strict-triangle constant (minimal radius of curvature of
/// the traced boundary).
pub fn strict_triangle_check(
    norm: &NormModel,
    kappa_bar: f64,
    pairs: &[(Vec<i64>, Vec<i64>)],
) -> TriangleReport {
    let mut min_slack = f64::INFINITY;
    let mut worst = (vec![0i64; 2], vec![0i64; 2]);
    for (u, v) in pairs {
        let sum: Vec<i64> = u.iter().zip(v).map(|(&a, &b)| a + b).collect();
        let lhs = norm.xi_lattice(u) + norm.xi_lattice(v) - norm.xi_lattice(&sum);
        let eu = |x: &[i64]| (x.iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt();
        let rhs = kappa_bar * (eu(u) + eu(v) - eu(&sum));
        let slack = lhs - rhs;
        if slack < min_slack {
            min_slack = slack;
            worst = (u.clone(), v.clone());
        }
    }
    TriangleReport { min_slack, worst_pair: worst, pairs: pairs.len() }
}

/// A deterministic grid of lattice direction pairs for the triangle check.
pub fn triangle_pair_grid(radius: i64, max_pairs: usize) -> Vec<(Vec<i64>, Vec<i64>)> {
    let mut dirs = Vec::new();
    for x in -radius..=radius {
        for y in -radius..=radius {
            if x != 0 || y != 0 {
                dirs.push(vec![x, y]);
            }
        }
    }
    let mut pairs = Vec::new();
    'outer: for (i, u) in dirs.iter().enumerate() {
        for v in dirs.iter().skip(i) {
            pairs.push((u.clone(), v.clone()));
            if pairs.len() >= max_pairs {
                break 'outer;
            }
        }
    }
    pairs
}
