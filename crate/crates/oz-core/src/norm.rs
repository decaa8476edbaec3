//! The inverse correlation length as a norm on R^d, its unit ball U_β, the
//! dual Wulff body K_β with dual vectors t ∈ ∂K_β, surcharge functions and
//! forward cones.
//!
//! ξ is represented either in closed form (scaled Euclidean / ℓ1) or sampled:
//! on an angular grid with linear interpolation (d = 2), or as the support
//! function of a sampled convex body (optionally averaged over a symmetry
//! group, which keeps it exactly convex).

use crate::{CoreError, Result};

#[derive(Debug, Clone)]
pub enum NormKind {
    /// ξ(x) = scale · |x|₂
    Euclidean { scale: f64 },
    /// ξ(x) = scale · |x|₁
    L1 { scale: f64 },
    /// d = 2 only: values of ξ on the uniform angular grid θ_k = 2πk/n,
    /// extended by linear interpolation in the angle.
    Angular { values: Vec<f64> },
    /// ξ(x) = (1/|G|) Σ_{g∈G} max_i (t_i, g x): support function of the
    /// Minkowski average of a sampled convex body over a symmetry group
    /// (d = 2; the group is given as 2×2 matrices).
    Support { points: Vec<[f64; 2]>, group: Vec<[[f64; 2]; 2]> },
}

#[derive(Debug, Clone)]
pub struct NormModel {
    pub dimension: usize,
    pub kind: NormKind,
}

/// A dual vector t ∈ ∂K_β for a source direction n: (t,x) ≤ ξ(x) everywhere,
/// with equality (within tolerance) in direction n.
#[derive(Debug, Clone)]
pub struct DualVector {
    pub t: Vec<f64>,
    pub direction: Vec<f64>,
    /// max over the probe grid of (t,x) − ξ(x); ≈ 0 when t sits on ∂K̂.
    pub residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_i(a: &[f64], x: &[i64]) -> f64 {
    a.iter().zip(x).map(|(t, &c)| t * c as f64).sum()
}

pub fn euclid(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

impl NormModel {
    pub fn euclidean(dimension: usize, scale: f64) -> Self {
        NormModel { dimension, kind: NormKind::Euclidean { scale } }
    }

    pub fn l1(dimension: usize, scale: f64) -> Self {
        NormModel { dimension, kind: NormKind::L1 { scale } }
    }

    /// Sample a closed-form norm on `n` angles (d = 2).
    pub fn sampled_from<F: Fn(f64) -> f64>(n: usize, xi_of_angle: F) -> Self {
        let values = (0..n)
            .map(|k| xi_of_angle(2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        NormModel { dimension: 2, kind: NormKind::Angular { values } }
    }

    /// Support-function norm of the convex hull of `points`, averaged over a
    /// symmetry `group` (include the identity).
    pub fn support_of(points: Vec<[f64; 2]>, group: Vec<[[f64; 2]; 2]>) -> Self {
        NormModel { dimension: 2, kind: NormKind::Support { points, group } }
    }

    /// ξ(x) for real x, positively homogeneous with ξ(0) = 0.
    pub fn xi(&self, x: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Euclidean { scale } => scale * euclid(x),
            NormKind::L1 { scale } => scale * x.iter().map(|c| c.abs()).sum::<f64>(),
            NormKind::Angular { values } => {
                let r = euclid(x);
                if r == 0.0 {
                    return 0.0;
                }
                let n = values.len() as f64;
                let theta = x[1].atan2(x[0]).rem_euclid(2.0 * std::f64::consts::PI);
                let pos = theta / (2.0 * std::f64::consts::PI) * n;
                let k = pos.floor() as usize % values.len();
                let frac = pos - pos.floor();
                let v = values[k] * (1.0 - frac) + values[(k + 1) % values.len()] * frac;
                r * v
            }
            NormKind::Support { points, group } => {
                let mut acc = 0.0;
                for g in group {
                    let gx = [
                        g[0][0] * x[0] + g[0][1] * x[1],
                        g[1][0] * x[0] + g[1][1] * x[1],
                    ];
                    let m = points
                        .iter()
                        .map(|p| p[0] * gx[0] + p[1] * gx[1])
                        .fold(f64::NEG_INFINITY, f64::max);
                    acc += m;
                }
                acc / group.len() as f64
            }
        }
    }

    pub fn xi_lattice(&self, x: &[i64]) -> f64 {
        let xf: Vec<f64> = x.iter().map(|&c| c as f64).collect();
        self.xi(&xf)
    }

    /// Directional value on the unit sphere.
    pub fn xi_dir(&self, n: &[f64]) -> f64 {
        let r = euclid(n);
        assert!(r > 0.0, "direction must be nonzero");
        self.xi(n) / r
    }

    /// x ∈ K·U_β(center), i.e. ξ(x − center) ≤ K.
    pub fn ball_membership(&self, center: &[i64], k: f64, x: &[i64]) -> Result<bool> {
        if !(k > 0.0) {
            return Err(CoreError::Invalid("ball radius must be positive".into()));
        }
        let diff: Vec<i64> = x.iter().zip(center).map(|(&a, &b)| a - b).collect();
        Ok(self.xi_lattice(&diff) <= k)
    }

    /// Symmetrise-check helper: ξ(x) = ξ(−x) within tol on a probe set.
    pub fn is_symmetric(&self, probes: &[Vec<f64>], tol: f64) -> bool {
        probes.iter().all(|x| {
            let neg: Vec<f64> = x.iter().map(|c| -c).collect();
            (self.xi(x) - self.xi(&neg)).abs() <= tol
        })
    }

    /// Convexity check on triples: ξ(u) + ξ(v) ≥ ξ(u+v) − tol.
    pub fn check_subadditive(&self, pairs: &[(Vec<f64>, Vec<f64>)], tol: f64) -> bool {
        pairs.iter().all(|(u, v)| {
            let s: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
            self.xi(u) + self.xi(v) + tol >= self.xi(&s)
        })
    }
}

/// Surcharge s_t(x) = ξ(x) − (t, x).
pub fn surcharge(t: &DualVector, x: &[i64], norm: &NormModel) -> f64 {
    norm.xi_lattice(x) - dot_i(&t.t, x)
}

pub fn surcharge_f(t: &DualVector, x: &[f64], norm: &NormModel) -> f64 {
    norm.xi(x) - dot(&t.t, x)
}

/// x ∈ Y_δ(t) ⇔ s_t(x) < δ ξ(x).  Undefined at the origin.
pub fn in_forward_cone(
    t: &DualVector,
    delta: f64,
    x: &[i64],
    norm: &NormModel,
) -> Result<bool> {
    if x.iter().all(|&c| c == 0) {
        return Err(CoreError::Invalid("cone membership undefined at origin".into()));
    }
    Ok(surcharge(t, x, norm) < delta * norm.xi_lattice(x))
}

pub fn in_forward_cone_f(t: &DualVector, delta: f64, x: &[f64], norm: &NormModel) -> Result<bool> {
    if euclid(x) == 0.0 {
        return Err(CoreError::Invalid("cone membership undefined at origin".into()));
    }
    Ok(surcharge_f(t, x, norm) < delta * norm.xi(x))
}

/// Probe directions used by the generic dual solver and the support-inequality
/// reports: lattice points with |x|∞ ≤ radius, radius 20 by default.
pub fn lattice_probes(dimension: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut probes = Vec::new();
    let mut cur = vec![-radius; dimension];
    loop {
        if cur.iter().any(|&c| c != 0) {
            probes.push(cur.clone());
        }
        let mut i = 0;
        loop {
            if i == dimension {
                return probes;
            }
            cur[i] += 1;
            if cur[i] <= radius {
                break;
            }
            cur[i] = -radius;
            i += 1;
        }
    }
}

/// Construct the dual vector of a unit direction n: maximise (t, n) over
/// K̂ = ∩_x {(t,x) ≤ ξ(x)} for the probe constraints, by projected ascent.
///
/// Closed-form norms are special-cased; the generic branch is used for the
/// sampled/support kinds.
pub fn dual_vector(norm: &NormModel, direction: &[f64]) -> Result<DualVector> {
    let nlen = euclid(direction);
    if nlen == 0.0 {
        return Err(CoreError::Invalid("zero direction".into()));
    }
    let n: Vec<f64> = direction.iter().map(|c| c / nlen).collect();

    let t = match &norm.kind {
        NormKind::Euclidean { scale } => n.iter().map(|&c| scale * c).collect::<Vec<f64>>(),
        NormKind::L1 { scale } => {
            // K is the scale·ℓ∞ ball; the maximiser of (t, n) uses sign(n),
            // with ties at zero components resolved to the face centre.
            n.iter()
                .map(|&c| if c > 0.0 { *scale } else if c < 0.0 { -*scale } else { 0.0 })
                .collect()
        }
        _ => projected_ascent(norm, &n)?,
    };

    let probes = lattice_probes(norm.dimension, 20);
    let residual = probes
        .iter()
        .map(|x| dot_i(&t, x) - norm.xi_lattice(x))
        .fold(f64::NEG_INFINITY, f64::max)
        .abs();
    Ok(DualVector { t, direction: n, residual })
}

fn projected_ascent(norm: &NormModel, n: &[f64]) -> Result<Vec<f64>> {
    // Constraint directions: a fine angular fan (d=2) plus the lattice probes.
    let d = norm.dimension;
    if d != 2 {
        return Err(CoreError::Invalid("generic dual solver implemented for d = 2".into()));
    }
    let mut dirs: Vec<Vec<f64>> = (0..1440)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 1440.0;
            vec![a.cos(), a.sin()]
        })
        .collect();
    for p in lattice_probes(2, 20) {
        let pf: Vec<f64> = p.iter().map(|&c| c as f64).collect();
        let r = euclid(&pf);
        dirs.push(pf.iter().map(|c| c / r).collect());
    }
    let xi_vals: Vec<f64> = dirs.iter().map(|u| norm.xi(u)).collect();

    let project = |t: &mut Vec<f64>| {
        for _ in 0..200 {
            let mut worst = -1.0f64;
            let mut wk = 0;
            for (k, u) in dirs.iter().enumerate() {
                let v = dot(t, u) - xi_vals[k];
                if v > worst {
                    worst = v;
                    wk = k;
                }
            }
            if worst <= 1e-12 {
                break;
            }
            for (ti, ui) in t.iter_mut().zip(&dirs[wk]) {
                *ti -= worst * ui;
            }
        }
    };

    let mut t = vec![0.0; d];
    let mut step = norm.xi_dir(n);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..2000 {
        let mut cand: Vec<f64> = t.iter().zip(n).map(|(a, b)| a + step * b).collect();
        project(&mut cand);
        let v = dot(&cand, n);
        if v > best + 1e-14 {
            best = v;
            t = cand;
        } else {
            step *= 0.5;
            if step < 1e-9 {
                break;
            }
        }
    }
    Ok(t)
}
