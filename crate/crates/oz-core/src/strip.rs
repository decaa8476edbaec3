//! Transfer-matrix spin sums on boxes of Z² with per-edge couplings.
//!
//! The column-to-column operator factorises over rows into 2×2 bond factors,
//! so a column step costs O(w·2^w) and arbitrary per-edge coupling maps
//! (including deleted edges, J = 0) come for free.  This is both the exact
//! strip oracle for the two-point function and the workhorse behind the
//! conditional line weights of the irreducible-path alphabet.

use crate::gibbs::{CorrelationTable, Method};
use crate::lattice::CouplingField;
use crate::{CoreError, Result};

/// Closed box [x0..x1] × [y0..y1].
#[derive(Debug, Clone, Copy)]
pub struct BoxGeom {
    pub x0: i64,
    pub x1: i64,
    pub y0: i64,
    pub y1: i64,
}

impl BoxGeom {
    pub fn width(&self) -> usize {
        (self.y1 - self.y0 + 1) as usize
    }

    pub fn length(&self) -> usize {
        (self.x1 - self.x0 + 1) as usize
    }

    pub fn contains(&self, p: [i64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

const MAX_WIDTH: usize = 20;

fn spin(state: usize, bit: usize) -> f64 {
    if state & (1 << bit) != 0 {
        -1.0
    } else {
        1.0
    }
}

/// Runs the transfer matrix with optional single-site σ insertions.
/// Returns (sign, log |value|); `j` maps a bond (site, site) to its coupling.
fn tm_sweep<F>(geom: &BoxGeom, beta: f64, j: &F, insertions: &[[i64; 2]]) -> Result<(f64, f64)>
where
    F: Fn([i64; 2], [i64; 2]) -> f64,
{
    let w = geom.width();
    if w == 0 || geom.length() == 0 {
        return Err(CoreError::EmptyRegion);
    }
    if w > MAX_WIDTH {
        return Err(CoreError::TooLarge(format!("strip width {w} exceeds {MAX_WIDTH}")));
    }
    for p in insertions {
        if !geom.contains(*p) {
            return Err(CoreError::Invalid(format!("insertion {p:?} outside box")));
        }
    }
    let states = 1usize << w;
    let mut u = vec![1.0f64; states];
    let mut logscale = 0.0f64;
    let mut sign = 1.0f64;

    let apply_intra = |u: &mut [f64], x: i64| {
        for (s, val) in u.iter_mut().enumerate() {
            let mut e = 0.0;
            for yb in 0..w.saturating_sub(1) {
                let y = geom.y0 + yb as i64;
                let jj = j([x, y], [x, y + 1]);
                if jj != 0.0 {
                    e += jj * spin(s, yb) * spin(s, yb + 1);
                }
            }
            *val *= (beta * e).exp();
        }
    };
    let apply_insertions = |u: &mut [f64], x: i64| {
        for p in insertions {
            if p[0] == x {
                let yb = (p[1] - geom.y0) as usize;
                for (s, val) in u.iter_mut().enumerate() {
                    *val *= spin(s, yb);
                }
            }
        }
    };

    apply_intra(&mut u, geom.x0);
    apply_insertions(&mut u, geom.x0);

    for x in geom.x0..geom.x1 {
        // horizontal bonds row by row: butterfly on each bit
        for yb in 0..w {
            let y = geom.y0 + yb as i64;
            let jj = j([x, y], [x + 1, y]);
            let a = (beta * jj).exp();
            let b = (-beta * jj).exp();
            let bit = 1usize << yb;
            for s in 0..states {
                if s & bit == 0 {
                    let u0 = u[s];
                    let u1 = u[s | bit];
                    u[s] = a * u0 + b * u1;
                    u[s | bit] = b * u0 + a * u1;
                }
            }
        }
        apply_intra(&mut u, x + 1);
        apply_insertions(&mut u, x + 1);
        let m = u.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if m == 0.0 {
            return Ok((0.0, f64::NEG_INFINITY));
        }
        for v in u.iter_mut() {
            *v /= m;
        }
        logscale += m.ln();
    }
    let total: f64 = u.iter().sum();
    if total == 0.0 {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    if total < 0.0 {
        sign = -sign;
    }
    Ok((sign, logscale + total.abs().ln()))
}

/// log Z of the box under β and the given coupling map (spin sums over every
/// site of the box; J = 0 bonds are simply absent).
pub fn log_partition<F>(geom: &BoxGeom, beta: f64, j: &F) -> Result<f64>
where
    F: Fn([i64; 2], [i64; 2]) -> f64,
{
    Ok(tm_sweep(geom, beta, j, &[])?.1)
}

/// ⟨σ_a σ_b⟩ on the box.
pub fn two_point<F>(geom: &BoxGeom, beta: f64, j: &F, a: [i64; 2], b: [i64; 2]) -> Result<f64>
where
    F: Fn([i64; 2], [i64; 2]) -> f64,
{
    if a == b {
        return Ok(1.0);
    }
    let (sign, lognum) = tm_sweep(geom, beta, j, &[a, b])?;
    let logden = log_partition(geom, beta, j)?;
    Ok(sign * (lognum - logden).exp())
}

/// Exact strip two-point oracle on [0..length−1] × [0..width−1] with
/// nearest-neighbour couplings.  For small boxes every pair is tabulated;
/// larger strips get axis pairs in the middle row, anchored a few columns in.
pub fn strip_two_point(
    width: usize,
    length: usize,
    beta: f64,
    couplings: &CouplingField,
) -> Result<CorrelationTable> {
    if width == 0 || width > 10 {
        return Err(CoreError::Invalid("strip width must be in 1..=10".into()));
    }
    if length < 2 {
        return Err(CoreError::Invalid("strip length must be at least 2".into()));
    }
    if couplings.dimension != 2 {
        return Err(CoreError::Invalid("strip expects a 2d coupling field".into()));
    }
    let mut jh = 0.0;
    let mut jv = 0.0;
    for (off, j) in couplings.offsets() {
        match off.as_slice() {
            [1, 0] | [-1, 0] => jh = j,
            [0, 1] | [0, -1] => jv = j,
            _ => {
                return Err(CoreError::Invalid("transfer matrix supports n.n. only".into()));
            }
        }
    }
    if jh == 0.0 {
        return Err(CoreError::Invalid("strip needs a horizontal coupling".into()));
    }
    let geom = BoxGeom { x0: 0, x1: length as i64 - 1, y0: 0, y1: width as i64 - 1 };
    let j = move |a: [i64; 2], b: [i64; 2]| -> f64 {
        if a[0] == b[0] {
            jv
        } else {
            jh
        }
    };

    let mut table = CorrelationTable::new(beta, Method::Strip);
    if width * length <= 20 {
        let mut sites = Vec::new();
        for x in 0..length as i64 {
            for y in 0..width as i64 {
                sites.push([x, y]);
            }
        }
        for i in 0..sites.len() {
            for k in (i + 1)..sites.len() {
                let g = two_point(&geom, beta, &j, sites[i], sites[k])?;
                table.insert(&sites[i].to_vec(), &sites[k].to_vec(), g, 0.0);
            }
        }
    } else {
        let ymid = (width / 2) as i64;
        let c0 = (length as i64 / 4).min(6);
        for x in (c0 + 1)..(length as i64) {
            let g = two_point(&geom, beta, &j, [c0, ymid], [x, ymid])?;
            table.insert(&vec![c0, ymid], &vec![x, ymid], g, 0.0);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::exact_two_point;
    use crate::lattice::build_graph;

    #[test]
    fn width_one_is_a_chain() {
        let field = CouplingField::new(2, &[(vec![1, 0], 1.0)]).unwrap();
        let t = strip_two_point(1, 8, 0.45, &field).unwrap();
        let u: f64 = 0.45f64.tanh();
        for x in 1..8i64 {
            let g = t.get(&[0, 0], &[x, 0]).unwrap().0;
            assert!((g - u.powi(x as i32)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn matches_brute_force_on_2x3() {
        let field = CouplingField::nearest_neighbour(2, 1.0);
        let strip = strip_two_point(2, 3, 0.3, &field).unwrap();
        // same box as a graph: [0..2] × [0..1]
        let g = build_graph(&field, &[(0, 2), (0, 1)]).unwrap();
        let brute = exact_two_point(&g, 0.3).unwrap();
        let mut checked = 0;
        for ((x, y), (gs, _)) in strip.iter() {
            let gb = brute.get(&[x[0], x[1]], &[y[0], y[1]]).unwrap().0;
            assert!((gs - gb).abs() < 1e-10, "{x:?}-{y:?}: {gs} vs {gb}");
            checked += 1;
        }
        assert_eq!(checked, 15);
    }

    #[test]
    fn beta_zero_vanishes() {
        let field = CouplingField::nearest_neighbour(2, 1.0);
        let t = strip_two_point(3, 4, 0.0, &field).unwrap();
        for ((x, y), (g, _)) in t.iter() {
            if x != y {
                assert!(g.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rejects_non_nn() {
        let field = CouplingField::new(2, &[(vec![1, 1], 0.5)]).unwrap();
        assert!(strip_two_point(3, 5, 0.3, &field).is_err());
    }
}
