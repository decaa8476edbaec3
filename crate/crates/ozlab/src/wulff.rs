//! Tracing the local Wulff boundary {s : ρ^t_S(s) = 1}, curvature along the
//! traced curve and the duality direction ∇log ρ(0).

use crate::{LabError, Result};
use oz_ruelle::RuelleOperator;

const RHO_TOL: f64 = 1e-12;
const RHO_ITERS: usize = 500_000;

pub fn rho_at(op: &RuelleOperator, s: &[f64]) -> Result<f64> {
    Ok(op.tilted(s).rho(RHO_TOL, RHO_ITERS)?)
}

/// Newton step sequence from a warm start, falling back to the bracketing
/// solver when it leaves the basin; used by the long adaptive traces.
fn solve_warm(
    op: &RuelleOperator,
    tangent: [f64; 2],
    normal: [f64; 2],
    a: f64,
    b_start: f64,
) -> Result<(f64, f64)> {
    let f = |b: f64| -> Result<f64> {
        let s = [a * tangent[0] + b * normal[0], a * tangent[1] + b * normal[1]];
        Ok(rho_at(op, &s)? - 1.0)
    };
    let mut b = b_start;
    let h = 1e-7;
    for _ in 0..12 {
        let v = f(b)?;
        if v.abs() < 1e-13 {
            return Ok((b, v.abs()));
        }
        let dv = (f(b + h)? - f(b - h)?) / (2.0 * h);
        if !(dv.abs() > 1e-10) {
            break;
        }
        let step = v / dv;
        if !step.is_finite() || step.abs() > 0.5 {
            break;
        }
        b -= step;
    }
    let v = f(b)?;
    if v.abs() < 1e-11 {
        return Ok((b, v.abs()));
    }
    solve_normal_offset(op, tangent, normal, a, b_start)
}

/// ∇log ρ at the tilt s by central differences.
pub fn grad_log_rho(op: &RuelleOperator, s: &[f64], h: f64) -> Result<Vec<f64>> {
    let d = s.len();
    let mut g = vec![0.0; d];
    for a in 0..d {
        let mut p = s.to_vec();
        p[a] += h;
        let mut m = s.to_vec();
        m[a] -= h;
        g[a] = (rho_at(op, &p)?.ln() - rho_at(op, &m)?.ln()) / (2.0 * h);
    }
    Ok(g)
}

/// Normalised ∇log ρ(0): the direction dual to the base tilt.
pub fn duality_direction(op: &RuelleOperator) -> Result<Vec<f64>> {
    let g = grad_log_rho(op, &vec![0.0; op.alphabet.dimension], 1e-6)?;
    let n: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(LabError::Numerical("zero gradient of log rho".into()));
    }
    Ok(g.iter().map(|x| x / n).collect())
}

#[derive(Debug, Clone)]
pub struct WulffSample {
    /// tangential coordinate along the trace
    pub a: f64,
    /// the tilt s with ρ(s) = 1
    pub s: [f64; 2],
    /// |ρ(s) − 1|
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct WulffBoundary {
    /// base point in t-space; absolute boundary points are base + s
    pub base: Vec<f64>,
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
    pub samples: Vec<WulffSample>,
    /// tangential grid spacing (uniform)
    pub spacing: f64,
}

impl WulffBoundary {
    pub fn points(&self) -> Vec<[f64; 2]> {
        self.samples
            .iter()
            .map(|smp| [self.base[0] + smp.s[0], self.base[1] + smp.s[1]])
            .collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.residual).fold(0.0, f64::max)
    }
}

/// Root of ρ(a·tangent + b·normal) = 1 in b: bracket by doubling along the
/// outward normal, 60 bisection steps, then Newton polish.
fn solve_normal_offset(
    op: &RuelleOperator,
    tangent: [f64; 2],
    normal: [f64; 2],
    a: f64,
    b_start: f64,
) -> Result<(f64, f64)> {
    let f = |b: f64| -> Result<f64> {
        let s = [a * tangent[0] + b * normal[0], a * tangent[1] + b * normal[1]];
        Ok(rho_at(op, &s)? - 1.0)
    };
    let mut b_hi;
    let mut b_lo;
    let v0 = f(b_start)?;
    let mut step = 0.05f64.max(1e-3);
    if v0 >= 0.0 {
        // walk inward until ρ < 1
        b_hi = b_start;
        let mut b = b_start;
        loop {
            b -= step;
            step *= 2.0;
            let v = f(b)?;
            if v < 0.0 {
                b_lo = b;
                break;
            }
            if step > 1e6 {
                return Err(LabError::Numerical("bracket failure".into()));
            }
        }
    } else {
        b_lo = b_start;
        let mut b = b_start;
        loop {
            b += step;
            step *= 2.0;
            let v = f(b)?;
            if v >= 0.0 {
                b_hi = b;
                break;
            }
            if step > 1e6 {
                return Err(LabError::Numerical("bracket failure".into()));
            }
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (b_lo + b_hi);
        if f(mid)? < 0.0 {
            b_lo = mid;
        } else {
            b_hi = mid;
        }
    }
    let mut b = 0.5 * (b_lo + b_hi);
    let h = 1e-7;
    for _ in 0..5 {
        let v = f(b)?;
        let dv = (f(b + h)? - f(b - h)?) / (2.0 * h);
        if dv.abs() < 1e-300 {
            break;
        }
        b -= v / dv;
    }
    let residual = f(b)?.abs();
    Ok((b, residual))
}

/// Trace the boundary patch over a uniform tangential grid
/// a = −half..=half step `spacing`; normal/tangent frames from ∇ρ(0).
pub fn trace_boundary(
    op: &RuelleOperator,
    half_extent: f64,
    spacing: f64,
) -> Result<WulffBoundary> {
    if op.alphabet.dimension != 2 {
        return Err(LabError::Invalid("boundary tracing is 2d".into()));
    }
    let g = grad_log_rho(op, &[0.0, 0.0], 1e-6)?;
    let glen = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if glen == 0.0 {
        return Err(LabError::Numerical("zero gradient at base point".into()));
    }
    let normal = [g[0] / glen, g[1] / glen];
    let tangent = [-normal[1], normal[0]];
    let steps = (half_extent / spacing).round() as i64;

    let mut samples = Vec::with_capacity(2 * steps as usize + 1);
    // walk outward from the centre in both directions with warm starts
    let mut warm_pos = 0.0f64;
    let mut warm_neg = 0.0f64;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for k in 0..=steps {
        let a = k as f64 * spacing;
        let (b, residual) = solve_normal_offset(op, tangent, normal, a, warm_pos)?;
        warm_pos = b;
        pos.push(WulffSample {
            a,
            s: [a * tangent[0] + b * normal[0], a * tangent[1] + b * normal[1]],
            residual,
        });
        if k > 0 {
            let a = -(k as f64) * spacing;
            let (b, residual) = solve_normal_offset(op, tangent, normal, a, warm_neg)?;
            warm_neg = b;
            neg.push(WulffSample {
                a,
                s: [a * tangent[0] + b * normal[0], a * tangent[1] + b * normal[1]],
                residual,
            });
        }
    }
    neg.reverse();
    samples.extend(neg);
    samples.extend(pos);
    Ok(WulffBoundary {
        base: vec![0.0, 0.0],
        normal,
        tangent,
        samples,
        spacing,
    })
}

/// Adaptive variant of [`trace_boundary`]: walk outward in both directions
/// until the outward normal has rotated past `target_deg` on each side,
/// with warm-started Newton solves.  The angle is measured relative to the
/// base normal and probed every `check_every` samples.
pub fn trace_until_normal_angle(
    op: &RuelleOperator,
    spacing: f64,
    target_deg: f64,
    max_samples_per_side: usize,
) -> Result<WulffBoundary> {
    if op.alphabet.dimension != 2 {
        return Err(LabError::Invalid("boundary tracing is 2d".into()));
    }
    let g = grad_log_rho(op, &[0.0, 0.0], 1e-6)?;
    let glen = (g[0] * g[0] + g[1] * g[1]).sqrt();
    let normal = [g[0] / glen, g[1] / glen];
    let tangent = [-normal[1], normal[0]];
    let base_angle = normal[1].atan2(normal[0]);
    let check_every = 8usize;

    let angle_at = |s: [f64; 2]| -> Result<f64> {
        let g = grad_log_rho(op, &[s[0], s[1]], 1e-6)?;
        let a = g[1].atan2(g[0]) - base_angle;
        Ok(a.to_degrees())
    };

    let walk = |sign: f64| -> Result<Vec<WulffSample>> {
        let mut out = Vec::new();
        let mut warm = 0.0f64;
        for k in 1..=max_samples_per_side {
            let a = sign * k as f64 * spacing;
            let (b, residual) = solve_warm(op, tangent, normal, a, warm)?;
            warm = b;
            let s = [a * tangent[0] + b * normal[0], a * tangent[1] + b * normal[1]];
            out.push(WulffSample { a, s, residual });
            if k % check_every == 0 && angle_at(s)?.abs() >= target_deg {
                return Ok(out);
            }
        }
        Err(LabError::Numerical(
            "boundary trace failed to reach the target normal angle".into(),
        ))
    };

    let (b0, r0) = solve_warm(op, tangent, normal, 0.0, 0.0)?;
    let centre = WulffSample {
        a: 0.0,
        s: [b0 * normal[0], b0 * normal[1]],
        residual: r0,
    };
    let pos = walk(1.0)?;
    let mut neg = walk(-1.0)?;
    neg.reverse();
    let mut samples = neg;
    samples.push(centre);
    samples.extend(pos);
    Ok(WulffBoundary { base: vec![0.0, 0.0], normal, tangent, samples, spacing })
}

#[derive(Debug, Clone)]
pub struct BoundaryCurvature {
    /// curvature per sample (interior samples only; five-point stencils)
    pub kappas: Vec<(usize, f64)>,
    pub kappa_min: f64,
    pub kappa_max: f64,
    /// minimal radius of curvature 1/κ_max: the 2d strict-triangle constant
    pub radius_min: f64,
}

/// Curvature of a uniformly-parameterised planar curve by five-point
/// central stencils; needs at least 5 consecutive samples.
pub fn curvature(points: &[[f64; 2]], spacing: f64) -> Result<BoundaryCurvature> {
    if points.len() < 5 {
        return Err(LabError::Invalid("need at least 5 consecutive samples".into()));
    }
    let h = spacing;
    let mut kappas = Vec::new();
    for i in 2..points.len() - 2 {
        let d1 = |c: usize| {
            (-points[i + 2][c] + 8.0 * points[i + 1][c] - 8.0 * points[i - 1][c]
                + points[i - 2][c])
                / (12.0 * h)
        };
        let d2 = |c: usize| {
            (-points[i + 2][c] + 16.0 * points[i + 1][c] - 30.0 * points[i][c]
                + 16.0 * points[i - 1][c]
                - points[i - 2][c])
                / (12.0 * h * h)
        };
        let (xp, yp) = (d1(0), d1(1));
        let (xpp, ypp) = (d2(0), d2(1));
        let speed = (xp * xp + yp * yp).sqrt();
        let k = (xp * ypp - yp * xpp).abs() / speed.powi(3);
        kappas.push((i, k));
    }
    let kappa_min = kappas.iter().map(|&(_, k)| k).fold(f64::INFINITY, f64::min);
    let kappa_max = kappas.iter().map(|&(_, k)| k).fold(0.0f64, f64::max);
    if !(kappa_min > 0.0) {
        return Err(LabError::Numerical("non-positive curvature sample".into()));
    }
    Ok(BoundaryCurvature { kappas, kappa_min, kappa_max, radius_min: 1.0 / kappa_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toys::{diagonal_walk_dual, diagonal_walk_op};

    fn tilted_toy() -> RuelleOperator {
        let op = diagonal_walk_op(0.5);
        // already at ρ(0) = 1
        let t = diagonal_walk_dual(0.5);
        assert!(t[0].abs() < 1e-14);
        op
    }

    #[test]
    fn toy_boundary_matches_closed_form() {
        // ρ(s) = (e^{s1}+e^{s2})/2 = 1 ⇔ s2 = log(2 − e^{s1})
        let op = tilted_toy();
        let b = trace_boundary(&op, 0.9, 0.03).unwrap();
        assert!(b.max_residual() < 1e-12);
        for smp in &b.samples {
            let s1 = smp.s[0];
            let s2 = smp.s[1];
            assert!(s1 < 2f64.ln());
            let expect = (2.0 - s1.exp()).ln();
            assert!((s2 - expect).abs() < 1e-8, "a={} s=({s1},{s2})", smp.a);
        }
        // passes through the base point
        let centre = b
            .samples
            .iter()
            .min_by(|x, y| x.a.abs().total_cmp(&y.a.abs()))
            .unwrap();
        assert!(centre.s[0].abs() < 1e-9 && centre.s[1].abs() < 1e-9);
    }

    #[test]
    fn toy_boundary_symmetric_under_swap() {
        let op = tilted_toy();
        let b = trace_boundary(&op, 0.6, 0.05).unwrap();
        for smp in &b.samples {
            // the mirror point (s2, s1) also satisfies the closed form
            let r = rho_at(&op, &[smp.s[1], smp.s[0]]).unwrap();
            assert!((r - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn toy_curvature_at_base() {
        let op = tilted_toy();
        let b = trace_boundary(&op, 0.5, 0.02).unwrap();
        let c = curvature(&b.points(), b.spacing).unwrap();
        // curvature of e^{s1}+e^{s2} = 2 at the origin is 1/√2
        let mid = c
            .kappas
            .iter()
            .min_by(|x, y| {
                b.samples[x.0].a.abs().total_cmp(&b.samples[y.0].a.abs())
            })
            .unwrap();
        let expect = 1.0 / 2f64.sqrt();
        assert!(
            (mid.1 - expect).abs() < 0.01 * expect,
            "kappa {} vs {expect}",
            mid.1
        );
    }

    #[test]
    fn circle_curvature_is_constant() {
        let r = 0.63;
        let pts: Vec<[f64; 2]> = (0..200)
            .map(|k| {
                let th = 0.01 * k as f64;
                [r * th.cos(), r * th.sin()]
            })
            .collect();
        // uniform arclength spacing r·dθ
        let c = curvature(&pts, r * 0.01).unwrap();
        for &(_, k) in &c.kappas {
            assert!((k - 1.0 / r).abs() < 0.01 / r);
        }
        assert!((c.radius_min - r).abs() < 0.01);
    }

    #[test]
    fn duality_direction_toy() {
        let op = tilted_toy();
        let dir = duality_direction(&op).unwrap();
        let inv = 1.0 / 2f64.sqrt();
        assert!((dir[0] - inv).abs() < 1e-6 && (dir[1] - inv).abs() < 1e-6);
        // single-step walk points along its step
        let alphabet = oz_ruelle::Alphabet::new(2, vec![vec![1, 0]]).unwrap();
        let op = oz_ruelle::RuelleOperator::iid(alphabet, &[1.0]).unwrap();
        let dir = duality_direction(&op).unwrap();
        assert!((dir[0] - 1.0).abs() < 1e-8 && dir[1].abs() < 1e-8);
    }

    #[test]
    fn duality_roundtrip_with_core_dual() {
        // t from the lattice-core dual solver for direction n; the tilted
        // walk's duality direction returns n within a degree
        let w = 0.4;
        let op = diagonal_walk_op(w);
        let t = diagonal_walk_dual(w);
        let tilted = op.tilted(&t);
        let dir = duality_direction(&tilted).unwrap();
        let n = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let cosang = dir[0] * n[0] + dir[1] * n[1];
        assert!(cosang > (1f64.to_radians()).cos());
    }
}
