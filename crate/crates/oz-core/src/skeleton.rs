//! K-skeletons of microscopic lines and the surcharge calculus: backtracks,
//! cone points, marked intervals, the δK/7 marked-point bound, and the
//! slab decomposition along a dual direction.

use crate::lattice::Point;
use crate::norm::{dot_i, in_forward_cone, surcharge, DualVector, NormModel};
use crate::{CoreError, Result};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub points: Vec<Point>,
    pub scale: f64,
}

impl Skeleton {
    pub fn increments(&self) -> Vec<Point> {
        (1..self.points.len())
            .map(|i| {
                self.points[i]
                    .iter()
                    .zip(&self.points[i - 1])
                    .map(|(&a, &b)| a - b)
                    .collect()
            })
            .collect()
    }

    /// N: number of increments (points are x_0..x_N).
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }
}

/// Coarse-grain a lattice path by exit points of K·U_β balls: x_0 = t_0;
/// while the remaining tail leaves K·U_β(x_k), jump to the first exit
/// (strictly ξ > K); the final point is always the path's endpoint.
pub fn build_skeleton(path: &[Point], k: f64, norm: &NormModel) -> Result<Skeleton> {
    if path.len() < 2 {
        return Err(CoreError::Invalid("skeleton needs a nontrivial path".into()));
    }
    if !(k > 0.0) {
        return Err(CoreError::Invalid("scale must be positive".into()));
    }
    let mut points = vec![path[0].clone()];
    let mut j = 0usize;
    loop {
        let anchor = points.last().unwrap().clone();
        let exit = (j + 1..path.len()).find(|&i| {
            let diff: Point = path[i].iter().zip(&anchor).map(|(&a, &b)| a - b).collect();
            norm.xi_lattice(&diff) > k
        });
        match exit {
            None => {
                // the endpoint may coincide with the last anchor; the
                // duplicate carries no geometry and is dropped
                if points.last() != path.last() {
                    points.push(path.last().unwrap().clone());
                }
                return Ok(Skeleton { points, scale: k });
            }
            Some(i) => {
                points.push(path[i].clone());
                j = i;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SkeletonClassification {
    /// per increment: x_{l+1} − x_l ∈ Y_δ(t)
    pub forward: Vec<bool>,
    pub n_back: usize,
    /// per point: {x_{l+1},…,x_N} ⊂ x_l + Y_δ(t)
    pub cone: Vec<bool>,
    /// half-open marked intervals [l_k, r_k)
    pub marked_intervals: Vec<(usize, usize)>,
    pub n_mark: usize,
}

impl SkeletonClassification {
    pub fn is_marked(&self, j: usize) -> bool {
        self.marked_intervals.iter().any(|&(l, r)| j >= l && j < r)
    }
}

pub fn classify(
    skeleton: &Skeleton,
    t: &DualVector,
    delta: f64,
    norm: &NormModel,
) -> Result<SkeletonClassification> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(CoreError::Invalid("delta must lie in (0, 1/2)".into()));
    }
    let pts = &skeleton.points;
    let n = skeleton.steps();
    let incs = skeleton.increments();
    let mut forward = Vec::with_capacity(n);
    for inc in &incs {
        // the final increment may be trivial (the path can end on the last
        // anchor); a zero increment is never inside the open cone
        if inc.iter().all(|&c| c == 0) {
            forward.push(false);
        } else {
            forward.push(in_forward_cone(t, delta, inc, norm)?);
        }
    }
    let n_back = forward.iter().filter(|&&f| !f).count();

    let in_cone_rel = |from: usize, to: usize| -> Result<bool> {
        let diff: Point = pts[to].iter().zip(&pts[from]).map(|(&a, &b)| a - b).collect();
        if diff.iter().all(|&c| c == 0) {
            // a later revisit of the same site is never strictly inside the cone
            return Ok(false);
        }
        in_forward_cone(t, delta, &diff, norm)
    };
    let mut cone = vec![true; n + 1];
    for l in 0..=n {
        for j in (l + 1)..=n {
            if !in_cone_rel(l, j)? {
                cone[l] = false;
                break;
            }
        }
    }

    // marked recursion: l_k = first non-cone point ≥ r_{k−1},
    // r_k = first j > l_k with x_j − x_{l_k} outside the cone
    let mut marked_intervals = Vec::new();
    let mut from = 0usize;
    loop {
        let lk = match (from..=n).find(|&j| !cone[j]) {
            Some(l) => l,
            None => break,
        };
        let rk = ((lk + 1)..=n)
            .find(|&j| !in_cone_rel(lk, j).unwrap_or(false))
            .expect("non-cone point has an exit");
        marked_intervals.push((lk, rk));
        from = rk;
    }
    let n_mark = marked_intervals.iter().map(|&(l, r)| r - l).sum();
    Ok(SkeletonClassification { forward, n_back, cone, marked_intervals, n_mark })
}

/// Total surcharge s_t(λ_K) = Σ s_t(x_{k+1} − x_k).
pub fn skeleton_surcharge(skeleton: &Skeleton, t: &DualVector, norm: &NormModel) -> f64 {
    skeleton
        .increments()
        .iter()
        .map(|inc| surcharge(t, inc, norm))
        .sum()
}

#[derive(Debug, Clone)]
pub struct SurchargeReport {
    pub surcharge: f64,
    pub n_back: usize,
    pub n_mark: usize,
    /// s_t(λ_K) ≥ δK(n_back − 1)
    pub backtrack_bound_ok: bool,
    /// s_t(λ_K) ≥ (δK/7)·n_mark
    pub marked_bound_ok: bool,
    /// q(λ_K) ≤ exp{−(t, x_N−x_0) − s_t(λ_K)} when a weight was supplied
    pub weight_bound_ok: Option<bool>,
}

const SURCHARGE_TOL: f64 = 1e-9;

/// The surcharge inequalities at scale K; requires the standing assumption
/// K ≫ R, enforced as K ≥ 8R.
pub fn surcharge_checks(
    skeleton: &Skeleton,
    t: &DualVector,
    delta: f64,
    interaction_range: f64,
    norm: &NormModel,
    weight: Option<f64>,
) -> Result<SurchargeReport> {
    if skeleton.scale < 8.0 * interaction_range {
        return Err(CoreError::Invalid("scale below range guard".into()));
    }
    let cls = classify(skeleton, t, delta, norm)?;
    let s = skeleton_surcharge(skeleton, t, norm);
    let k = skeleton.scale;
    let backtrack_bound_ok =
        s >= delta * k * (cls.n_back as f64 - 1.0) - SURCHARGE_TOL;
    let marked_bound_ok = s >= delta * k / 7.0 * cls.n_mark as f64 - SURCHARGE_TOL;
    let weight_bound_ok = weight.map(|q| {
        let disp: Point = skeleton
            .points
            .last()
            .unwrap()
            .iter()
            .zip(skeleton.points.first().unwrap())
            .map(|(&a, &b)| a - b)
            .collect();
        q <= (-(dot_i(&t.t, &disp)) - s).exp() * (1.0 + 1e-9) + 1e-15
    });
    Ok(SurchargeReport {
        surcharge: s,
        n_back: cls.n_back,
        n_mark: cls.n_mark,
        backtrack_bound_ok,
        marked_bound_ok,
        weight_bound_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlabLabel {
    Clean,
    Dirty,
    Untouched,
}

#[derive(Debug, Clone)]
pub struct SlabRow {
    pub index: i64,
    pub label: SlabLabel,
    /// first/last skeleton point index inside the slab (clean/dirty slabs)
    pub i_l: Option<usize>,
    pub j_l: Option<usize>,
    /// 3 ≤ j_l − i_l ≤ 8/(1−δ), checked for clean pass-through slabs
    pub bracket_ok: Option<bool>,
}

/// Slice R^d into slabs of width 8K along n(t) and label each slab touched
/// by the skeleton: clean if it contains only cone points.
pub fn slab_classify(
    skeleton: &Skeleton,
    t: &DualVector,
    delta: f64,
    interaction_range: f64,
    norm: &NormModel,
) -> Result<Vec<SlabRow>> {
    if skeleton.scale < 8.0 * interaction_range {
        return Err(CoreError::Invalid("scale below range guard".into()));
    }
    let cls = classify(skeleton, t, delta, norm)?;
    let k = skeleton.scale;
    let tlen = crate::norm::euclid(&t.t);
    let height = |p: &Point| dot_i(&t.t, p) / tlen;
    let slab_of = |p: &Point| (height(p) / (8.0 * k)).floor() as i64;

    let slabs: Vec<i64> = skeleton.points.iter().map(slab_of).collect();
    let lo = *slabs.iter().min().unwrap();
    let hi = *slabs.iter().max().unwrap();
    let mut rows = Vec::new();
    for idx in lo..=hi {
        let members: Vec<usize> =
            (0..skeleton.points.len()).filter(|&i| slabs[i] == idx).collect();
        if members.is_empty() {
            rows.push(SlabRow { index: idx, label: SlabLabel::Untouched, i_l: None, j_l: None, bracket_ok: None });
            continue;
        }
        let i_l = *members.first().unwrap();
        let j_l = *members.last().unwrap();
        let clean = members.iter().all(|&i| cls.cone[i]);
        let label = if clean { SlabLabel::Clean } else { SlabLabel::Dirty };
        // bracket applies to interior pass-through slabs
        let bracket_ok = if clean
            && i_l > 0
            && j_l + 1 < skeleton.points.len()
            && slabs[i_l - 1] < idx
            && slabs[j_l + 1] > idx
        {
            let len = j_l - i_l;
            Some(len >= 3 && (len as f64) <= 8.0 / (1.0 - delta))
        } else {
            None
        };
        rows.push(SlabRow { index: idx, label, i_l: Some(i_l), j_l: Some(j_l), bracket_ok });
    }
    Ok(rows)
}

/// Stress-test skeletons: lattice increments with ξ-norm in [K, 2K), drawn
/// forward (inside Y_δ(t)) or backtracking with probability `p_back`.
/// Stated for the scaled Euclidean norm with t along e₁.
pub fn random_admissible_skeleton<R: Rng>(
    rng: &mut R,
    k: f64,
    delta: f64,
    n_steps: usize,
    p_back: f64,
    norm: &NormModel,
    t: &DualVector,
) -> Skeleton {
    let d = t.t.len();
    assert_eq!(d, 2, "stress skeletons are 2d");
    let mut points: Vec<Point> = vec![vec![0; d]];
    while points.len() <= n_steps {
        let backtrack = rng.gen::<f64>() < p_back;
        // rejection-sample a lattice increment with the requested cone side
        let inc: Option<Point> = (0..200).find_map(|_| {
            let r = k * (1.0 + rng.gen::<f64>() * 0.85);
            let angle = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
            let scale = norm.xi(&[1.0, 0.0]).max(1e-12);
            let v = vec![
                (r / scale * angle.cos()).round() as i64,
                (r / scale * angle.sin()).round() as i64,
            ];
            let xi = norm.xi_lattice(&v);
            if xi < k || xi >= 2.0 * k {
                return None;
            }
            match in_forward_cone(t, delta, &v, norm) {
                Ok(fwd) if fwd != backtrack => Some(v),
                _ => None,
            }
        });
        if let Some(inc) = inc {
            let last = points.last().unwrap();
            points.push(last.iter().zip(&inc).map(|(&a, &b)| a + b).collect());
        }
    }
    Skeleton { points, scale: k }
}
