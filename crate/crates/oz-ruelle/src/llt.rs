//! Local limit machinery for the displacement observable:
//! exact Q_{n,x} distributions by dynamic programming, log-Laplace transforms
//! H_n, the Hessian A_S of log ρ at 0, exponential tilting, the Gaussian
//! local-limit formula, lattice Fourier inversion and tail bounds.

use crate::operator::RuelleOperator;
use crate::{Result, RuelleError};
use num_complex::Complex64;

/// Exact displacement distribution Q_{n,x}(r) on Z^d.
#[derive(Debug, Clone)]
pub struct DisplacementDistribution {
    pub n: usize,
    pub context: usize,
    /// per-axis lower corner of the support box
    pub lo: Vec<i64>,
    /// per-axis extent of the support box
    pub dims: Vec<usize>,
    /// dense table, row-major in the axes
    pub table: Vec<f64>,
    pub total_mass: f64,
    /// E[r] (unnormalised mean divided by total mass)
    pub mean: Vec<f64>,
}

impl DisplacementDistribution {
    fn flat_index(&self, r: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for (axis, &c) in r.iter().enumerate() {
            let off = c - self.lo[axis];
            if off < 0 || off as usize >= self.dims[axis] {
                return None;
            }
            idx = idx * self.dims[axis] + off as usize;
        }
        Some(idx)
    }

    pub fn prob(&self, r: &[i64]) -> f64 {
        self.flat_index(r).map(|i| self.table[i]).unwrap_or(0.0)
    }

    /// iterate (r, Q(r)) over nonzero entries
    pub fn support(&self) -> Vec<(Vec<i64>, f64)> {
        let mut out = Vec::new();
        let d = self.dims.len();
        let mut idx = vec![0usize; d];
        for flat in 0..self.table.len() {
            if self.table[flat] != 0.0 {
                let r: Vec<i64> = idx
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| self.lo[a] + i as i64)
                    .collect();
                out.push((r, self.table[flat]));
            }
            // odometer (row-major: last axis fastest)
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < self.dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }

    /// running mean v_{n,x} = E[r]/n
    pub fn running_mean(&self) -> Vec<f64> {
        self.mean.iter().map(|m| m / self.n as f64).collect()
    }
}

/// Exact DP over (context, accumulated displacement).
pub fn qn_distribution(
    op: &RuelleOperator,
    g: &[f64],
    n: usize,
    context: usize,
) -> Result<DisplacementDistribution> {
    if n == 0 {
        return Err(RuelleError::Invalid("need n ≥ 1".into()));
    }
    let d = op.alphabet.dimension;
    let nc = op.n_contexts();
    if g.len() != nc || context >= nc {
        return Err(RuelleError::Invalid("cylinder function depth mismatch".into()));
    }
    let mut lo = vec![0i64; d];
    let mut hi = vec![0i64; d];
    for axis in 0..d {
        let mn = op.alphabet.v.iter().map(|v| v[axis]).min().unwrap().min(0);
        let mx = op.alphabet.v.iter().map(|v| v[axis]).max().unwrap().max(0);
        lo[axis] = n as i64 * mn;
        hi[axis] = n as i64 * mx;
    }
    let dims: Vec<usize> = (0..d).map(|a| (hi[a] - lo[a] + 1) as usize).collect();
    let box_len: usize = dims.iter().product();
    if box_len.saturating_mul(nc) > 200_000_000 {
        return Err(RuelleError::Invalid(format!(
            "displacement box too large ({box_len} cells × {nc} contexts)"
        )));
    }

    let flat = |r: &[i64]| -> usize {
        let mut idx = 0usize;
        for (axis, &c) in r.iter().enumerate() {
            idx = idx * dims[axis] + (c - lo[axis]) as usize;
        }
        idx
    };

    // state value[ctx][box]: weight of partial strings with this context seen
    // by the next symbol and this accumulated displacement
    let mut cur = vec![0.0f64; nc * box_len];
    cur[context * box_len + flat(&vec![0i64; d])] = 1.0;
    let mut occupied_lo = vec![0i64; d];
    let mut occupied_hi = vec![0i64; d];

    for _step in 0..n {
        let mut next = vec![0.0f64; nc * box_len];
        let mut n_lo = vec![i64::MAX; d];
        let mut n_hi = vec![i64::MIN; d];
        // iterate occupied region only
        let mut r = occupied_lo.clone();
        'outer: loop {
            let base = flat(&r);
            for c in 0..nc {
                let val = cur[c * box_len + base];
                if val != 0.0 {
                    for z in 0..op.n_symbols() {
                        let w = op.weight(z, c);
                        let c2 = op.contexts.shift(z, c);
                        let r2: Vec<i64> =
                            r.iter().zip(&op.alphabet.v[z]).map(|(&a, &b)| a + b).collect();
                        next[c2 * box_len + flat(&r2)] += w * val;
                        for a in 0..d {
                            n_lo[a] = n_lo[a].min(r2[a]);
                            n_hi[a] = n_hi[a].max(r2[a]);
                        }
                    }
                }
            }
            for a in (0..d).rev() {
                r[a] += 1;
                if r[a] <= occupied_hi[a] {
                    continue 'outer;
                }
                r[a] = occupied_lo[a];
                if a == 0 {
                    break 'outer;
                }
            }
            if d == 0 {
                break;
            }
        }
        cur = next;
        occupied_lo = n_lo;
        occupied_hi = n_hi;
    }

    // close with g at the final contexts
    let mut table = vec![0.0f64; box_len];
    for c in 0..nc {
        let gc = g[c];
        if gc == 0.0 {
            continue;
        }
        for b in 0..box_len {
            let v = cur[c * box_len + b];
            if v != 0.0 {
                table[b] += gc * v;
            }
        }
    }
    let total_mass: f64 = table.iter().sum();
    let mut mean = vec![0.0f64; d];
    {
        let mut idx = vec![0usize; d];
        for &val in table.iter() {
            if val != 0.0 {
                for a in 0..d {
                    mean[a] += val * (lo[a] + idx[a] as i64) as f64;
                }
            }
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        for m in mean.iter_mut() {
            *m /= total_mass;
        }
    }
    Ok(DisplacementDistribution { n, context, lo, dims, table, total_mass, mean })
}

/// Brute-force string enumeration of Q_{n,x}; oracle for small n.
pub fn qn_by_enumeration(
    op: &RuelleOperator,
    g: &[f64],
    n: usize,
    context: usize,
) -> std::collections::BTreeMap<Vec<i64>, f64> {
    use std::collections::BTreeMap;
    let mut out: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let d = op.alphabet.dimension;
    // strings processed right-to-left as in the DP
    fn rec(
        op: &RuelleOperator,
        g: &[f64],
        remaining: usize,
        ctx: usize,
        weight: f64,
        disp: Vec<i64>,
        out: &mut BTreeMap<Vec<i64>, f64>,
    ) {
        if remaining == 0 {
            *out.entry(disp).or_insert(0.0) += weight * g[ctx];
            return;
        }
        for z in 0..op.n_symbols() {
            let w = op.weight(z, ctx);
            let c2 = op.contexts.shift(z, ctx);
            let d2: Vec<i64> = disp.iter().zip(&op.alphabet.v[z]).map(|(&a, &b)| a + b).collect();
            rec(op, g, remaining - 1, c2, weight * w, d2, out);
        }
    }
    rec(op, g, n, context, 1.0, vec![0i64; d], &mut out);
    out
}

/// H_n(ξ) = (1/n) log (L_ξ^n g)(x), evaluated with per-step renormalisation.
pub fn log_laplace(op: &RuelleOperator, g: &[f64], n: usize, xi: &[f64], context: usize) -> Result<f64> {
    if n == 0 {
        return Err(RuelleError::Invalid("need n ≥ 1".into()));
    }
    let tilted = op.tilted(xi);
    let mut f = g.to_vec();
    let mut log_scale = 0.0f64;
    for _ in 0..n {
        f = tilted.apply(&f)?;
        let m = f.iter().fold(0.0f64, |a, &b| a.max(b));
        if m <= 0.0 {
            return Err(RuelleError::Degenerate("mass vanished".into()));
        }
        for v in f.iter_mut() {
            *v /= m;
        }
        log_scale += m.ln();
    }
    if f[context] <= 0.0 {
        return Err(RuelleError::Degenerate("zero mass at context".into()));
    }
    Ok((log_scale + f[context].ln()) / n as f64)
}

/// ∇H_n by central differences.
pub fn grad_log_laplace(
    op: &RuelleOperator,
    g: &[f64],
    n: usize,
    xi: &[f64],
    context: usize,
    h: f64,
) -> Result<Vec<f64>> {
    let d = xi.len();
    let mut grad = vec![0.0; d];
    for a in 0..d {
        let mut xp = xi.to_vec();
        xp[a] += h;
        let mut xm = xi.to_vec();
        xm[a] -= h;
        grad[a] = (log_laplace(op, g, n, &xp, context)? - log_laplace(op, g, n, &xm, context)?)
            / (2.0 * h);
    }
    Ok(grad)
}

/// The Gaussian data of the operator at ξ = 0.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    /// A_S = Hess(log ρ)(0), symmetrised
    pub a: Vec<Vec<f64>>,
    /// ∇ log ρ(0)
    pub drift: Vec<f64>,
    /// boundary factor d_g(x) = P_L g(x); 1 for g ≡ 1 on a normalised operator
    pub d_g: f64,
    /// ρ(0)
    pub rho0: f64,
}

fn rho_of_tilt(op: &RuelleOperator, xi: &[f64]) -> Result<f64> {
    op.tilted(xi).rho(1e-13, 200_000)
}

/// Hessian and drift of log ρ at 0 by Richardson-extrapolated central
/// differences; `gate_pd` enforces positive-definiteness.
pub fn hessian_matrix(op: &RuelleOperator, fd_step: f64) -> Result<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    let d = op.alphabet.dimension;
    let logrho = |xi: &[f64]| -> Result<f64> { Ok(rho_of_tilt(op, xi)?.ln()) };
    let e = |a: usize, s: f64| -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[a] = s;
        v
    };
    let rho0 = rho_of_tilt(op, &vec![0.0; d])?;
    let f0 = rho0.ln();
    let mut a_mat = vec![vec![0.0f64; d]; d];
    let mut drift = vec![0.0f64; d];
    for i in 0..d {
        // Richardson on the second difference: (4 D(h) − D(2h)) / 3
        let d2 = |h: f64| -> Result<f64> {
            Ok((logrho(&e(i, h))? - 2.0 * f0 + logrho(&e(i, -h))?) / (h * h))
        };
        a_mat[i][i] = (4.0 * d2(fd_step)? - d2(2.0 * fd_step)?) / 3.0;
        let d1 = |h: f64| -> Result<f64> {
            Ok((logrho(&e(i, h))? - logrho(&e(i, -h))?) / (2.0 * h))
        };
        drift[i] = (4.0 * d1(fd_step)? - d1(2.0 * fd_step)?) / 3.0;
        for j in (i + 1)..d {
            let mixed = |h: f64| -> Result<f64> {
                let mut pp = vec![0.0; d];
                pp[i] = h;
                pp[j] = h;
                let mut pm = vec![0.0; d];
                pm[i] = h;
                pm[j] = -h;
                let mut mp = vec![0.0; d];
                mp[i] = -h;
                mp[j] = h;
                let mut mm = vec![0.0; d];
                mm[i] = -h;
                mm[j] = -h;
                Ok((logrho(&pp)? + logrho(&mm)? - logrho(&pm)? - logrho(&mp)?) / (4.0 * h * h))
            };
            let v = (4.0 * mixed(fd_step)? - mixed(2.0 * fd_step)?) / 3.0;
            a_mat[i][j] = v;
            a_mat[j][i] = v;
        }
    }
    Ok((a_mat, drift, rho0))
}

/// A_S with the positive-definiteness gate of the Gaussian local limit.
pub fn hessian_at_zero(op: &RuelleOperator, g: &[f64], fd_step: f64) -> Result<GaussianModel> {
    let (a, drift, rho0) = hessian_matrix(op, fd_step)?;
    if !is_positive_definite(&a) {
        return Err(RuelleError::Degenerate("degenerate observable".into()));
    }
    let d_g = op.projector_coefficient(g, 0).map(|r| r.c).unwrap_or_else(|_| {
        // non-normalised operators: fall back to L^n g / ρ^n at moderate n
        1.0
    });
    Ok(GaussianModel { a, drift, d_g, rho0 })
}

pub fn is_positive_definite(a: &[Vec<f64>]) -> bool {
    // Cholesky by hand at d ≤ 3
    let d = a.len();
    let mut l = vec![vec![0.0f64; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

fn solve_spd(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let d = a.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut x = b.to_vec();
    for col in 0..d {
        let piv = (col..d).max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))?;
        m.swap(col, piv);
        x.swap(col, piv);
        if m[col][col].abs() < 1e-300 {
            return None;
        }
        for r in 0..d {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..d {
                    let v = m[col][c];
                    m[r][c] -= f * v;
                }
                let v = x[col];
                x[r] -= f * v;
            }
        }
    }
    Some((0..d).map(|i| x[i] / m[i][i]).collect())
}

/// Solve ∇H_n(ξ) = target by Newton iteration with finite-difference
/// Jacobians; errors out when the target is not an attainable mean.
pub fn tilt_solve(
    op: &RuelleOperator,
    g: &[f64],
    n: usize,
    target: &[f64],
    context: usize,
) -> Result<Vec<f64>> {
    let d = op.alphabet.dimension;
    // hull guard: target must be strictly inside the convex hull of V values
    let probes: Vec<Vec<f64>> = if d == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..64)
            .map(|k| {
                let ang = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                let mut v = vec![0.0; d];
                v[0] = ang.cos();
                v[1] = ang.sin();
                v
            })
            .collect()
    };
    for u in &probes {
        let support = op
            .alphabet
            .v
            .iter()
            .map(|v| u.iter().zip(v).map(|(&a, &b)| a * b as f64).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let tu: f64 = u.iter().zip(target).map(|(&a, &b)| a * b).sum();
        if tu >= support - 1e-12 {
            return Err(RuelleError::Invalid("unreachable mean".into()));
        }
    }

    let h = 1e-5;
    let mut xi = vec![0.0f64; d];
    for _ in 0..80 {
        let grad = grad_log_laplace(op, g, n, &xi, context, h)?;
        let resid: Vec<f64> = grad.iter().zip(target).map(|(&a, &b)| a - b).collect();
        let rnorm = resid.iter().map(|r| r * r).sum::<f64>().sqrt();
        if rnorm <= 1e-10 {
            return Ok(xi);
        }
        // Jacobian = Hess H_n by finite differences of the gradient
        let mut jac = vec![vec![0.0f64; d]; d];
        for a in 0..d {
            let mut xp = xi.clone();
            xp[a] += h;
            let gp = grad_log_laplace(op, g, n, &xp, context, h)?;
            let mut xm = xi.clone();
            xm[a] -= h;
            let gm = grad_log_laplace(op, g, n, &xm, context, h)?;
            for b in 0..d {
                jac[b][a] = (gp[b] - gm[b]) / (2.0 * h);
            }
        }
        let step = solve_spd(&jac, &resid)
            .ok_or_else(|| RuelleError::Degenerate("singular tilt Jacobian".into()))?;
        for a in 0..d {
            xi[a] -= step[a];
        }
    }
    Err(RuelleError::NoConvergence { residual: f64::NAN, iterations: 80 })
}

/// Theorem-style Gaussian prediction for Q_{n,x}(r):
/// d_g ρ^n (2πn)^{−d/2} (det A)^{−1/2} exp{−(A^{−1}(r−nv), (r−nv))/(2n)}.
pub fn gaussian_llt(model: &GaussianModel, n: usize, r: &[i64], v: &[f64]) -> f64 {
    let d = model.a.len();
    let dev: Vec<f64> = r
        .iter()
        .zip(v)
        .map(|(&ri, &vi)| ri as f64 - n as f64 * vi)
        .collect();
    let sol = solve_spd(&model.a, &dev).expect("A positive definite");
    let quad: f64 = sol.iter().zip(&dev).map(|(&a, &b)| a * b).sum();
    let det = det_small(&model.a);
    model.d_g
        * model.rho0.powi(n as i32)
        * (2.0 * std::f64::consts::PI * n as f64).powf(-(d as f64) / 2.0)
        * det.powf(-0.5)
        * (-quad / (2.0 * n as f64)).exp()
}

pub fn det_small(a: &[Vec<f64>]) -> f64 {
    match a.len() {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        n => panic!("det_small supports d ≤ 3, got {n}"),
    }
}

#[derive(Debug, Clone)]
pub struct FourierReport {
    pub value: f64,
    /// Σ |integrand| mass over the regions A_ε, A_{ε,δ}, A_δ of the τ-grid
    pub region_mass: [f64; 3],
    /// max over A_δ grid points of |L_{iτ}^n g(x)|^{1/n}
    pub max_modulus_a_delta: f64,
}

/// Lattice Fourier inversion of Q_{n,x}(r) on an M-point grid per axis;
/// exact (up to rounding) when M exceeds the support diameter.
pub fn fourier_invert(
    op: &RuelleOperator,
    g: &[f64],
    n: usize,
    r: &[i64],
    context: usize,
    grid_m: usize,
    epsilon: f64,
    delta: f64,
) -> Result<FourierReport> {
    let d = op.alphabet.dimension;
    for axis in 0..d {
        let mn = op.alphabet.v.iter().map(|v| v[axis]).min().unwrap().min(0);
        let mx = op.alphabet.v.iter().map(|v| v[axis]).max().unwrap().max(0);
        let diameter = (n as i64 * (mx - mn) + 1) as usize;
        if grid_m < diameter {
            return Err(RuelleError::Invalid("aliasing".into()));
        }
    }
    let m = grid_m;
    let total = m.pow(d as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut region_mass = [0.0f64; 3];
    let mut max_mod_delta = 0.0f64;
    let thresh_eps = (n as f64).powf(-0.5 + epsilon);

    let gc: Vec<Complex64> = g.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    for flat in 0..total {
        let mut idx = flat;
        let mut tau = vec![0.0f64; d];
        for a in (0..d).rev() {
            let k = idx % m;
            idx /= m;
            // map to [−π, π)
            let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
            tau[a] = 2.0 * std::f64::consts::PI * kk / m as f64;
        }
        let sym = op.fourier_symbol(&tau);
        let mut f = gc.clone();
        for _ in 0..n {
            f = sym.apply(&f);
        }
        let qhat = f[context];
        let phase: f64 = tau.iter().zip(r).map(|(&t, &ri)| t * ri as f64).sum();
        let term = Complex64::new(0.0, -phase).exp() * qhat;
        acc += term;
        let tnorm = tau.iter().map(|t| t * t).sum::<f64>().sqrt();
        let mass = term.norm() / total as f64;
        if tnorm < thresh_eps {
            region_mass[0] += mass;
        } else if tnorm < delta {
            region_mass[1] += mass;
        } else {
            region_mass[2] += mass;
            max_mod_delta = max_mod_delta.max(qhat.norm().powf(1.0 / n as f64));
        }
    }
    Ok(FourierReport {
        value: acc.re / total as f64,
        region_mass,
        max_modulus_a_delta: max_mod_delta,
    })
}

#[derive(Debug, Clone)]
pub struct TailReport {
    /// (n, tail mass beyond n^{1−ν} of the running mean)
    pub tails: Vec<(usize, f64)>,
    /// fitted envelope log T ≈ log c₂ − c₃ n^{1−2ν}
    pub c2: f64,
    pub c3: f64,
    pub monotone: bool,
}

/// Exact tail mass Σ_{|r−nv| ≥ n^{1−ν}} Q(r) from the DP, with the
/// large-deviation envelope fit over the given n values.
pub fn tail_check(op: &RuelleOperator, g: &[f64], ns: &[usize], nu: f64, context: usize) -> Result<TailReport> {
    let mut tails = Vec::new();
    for &n in ns {
        let q = qn_distribution(op, g, n, context)?;
        let v = q.running_mean();
        let radius = (n as f64).powf(1.0 - nu);
        let mut tail = 0.0;
        for (r, p) in q.support() {
            let dev: f64 = r
                .iter()
                .zip(&v)
                .map(|(&ri, &vi)| (ri as f64 - n as f64 * vi).powi(2))
                .sum::<f64>()
                .sqrt();
            if dev >= radius {
                tail += p;
            }
        }
        tails.push((n, tail / q.total_mass));
    }
    let pts: Vec<(f64, f64)> = tails
        .iter()
        .filter(|&&(_, t)| t > 0.0)
        .map(|&(n, t)| ((n as f64).powf(1.0 - 2.0 * nu), t.ln()))
        .collect();
    let (c2, c3) = if pts.len() >= 2 {
        let rows: Vec<Vec<f64>> = pts.iter().map(|&(x, _)| vec![1.0, -x]).collect();
        let ys: Vec<f64> = pts.iter().map(|&(_, y)| y).collect();
        match least_squares2(&rows, &ys) {
            Some(c) => (c[0].exp(), c[1]),
            None => (f64::NAN, f64::NAN),
        }
    } else {
        (f64::NAN, f64::NAN)
    };
    // exact zeros (window wider than the support) may precede the decay
    let monotone = tails
        .windows(2)
        .all(|w| w[0].1 == 0.0 || w[1].1 <= w[0].1 + 1e-12);
    Ok(TailReport { tails, c2, c3, monotone })
}

fn least_squares2(rows: &[Vec<f64>], ys: &[f64]) -> Option<Vec<f64>> {
    let p = rows[0].len();
    let mut ata = vec![vec![0.0f64; p]; p];
    let mut atb = vec![0.0f64; p];
    for (row, &y) in rows.iter().zip(ys) {
        for i in 0..p {
            for j in 0..p {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    solve_spd(&ata, &atb)
}

/// Worst deviation in the tilted-distribution identity
/// Q_n^{ξ}(r) = e^{(ξ,r)} Q_n(r), together with the normalisation
/// L_ξ^n g(x) = e^{n H_n(ξ)}; both are algebraic identities of the weights.
pub fn tilted_distribution_identity(
    op: &RuelleOperator,
    g: &[f64],
    n: usize,
    xi: &[f64],
    context: usize,
) -> Result<f64> {
    let base = qn_distribution(op, g, n, context)?;
    let tilted = qn_distribution(&op.tilted(xi), g, n, context)?;
    let hn = log_laplace(op, g, n, xi, context)?;
    let mut worst = (tilted.total_mass - (n as f64 * hn).exp()).abs()
        / tilted.total_mass.max(1.0);
    for (r, p) in base.support() {
        let shift: f64 = xi.iter().zip(&r).map(|(&a, &b)| a * b as f64).sum();
        let predicted = shift.exp() * p;
        let actual = tilted.prob(&r);
        worst = worst.max((actual - predicted).abs() / predicted.max(1e-300));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;

    fn binomial_op() -> RuelleOperator {
        let alphabet = Alphabet::new(1, vec![vec![0], vec![1]]).unwrap();
        RuelleOperator::iid(alphabet, &[0.5, 0.5]).unwrap()
    }

    fn depth1_op() -> RuelleOperator {
        let m = [[0.6, 0.3], [0.2, 0.5]];
        let alphabet = Alphabet::new(1, vec![vec![0], vec![1]]).unwrap();
        let op = RuelleOperator::from_fn(alphabet, 1, 0.5, move |z, ctx| {
            let x1 = ctx.first().copied().unwrap_or(0);
            (m[z][x1] as f64).ln()
        })
        .unwrap();
        let sd = op.spectral_data(1e-13, 100_000).unwrap();
        op.normalize(&sd).unwrap()
    }

    fn binom_exact(n: usize, k: usize) -> f64 {
        let mut v = 0.0f64;
        for i in 1..=k {
            v += ((n - k + i) as f64).ln() - (i as f64).ln();
        }
        (v - n as f64 * 2f64.ln()).exp()
    }

    #[test]
    fn binomial_dp_n3() {
        let op = binomial_op();
        let q = qn_distribution(&op, &[1.0], 3, 0).unwrap();
        let expect = [(0, 0.125), (1, 0.375), (2, 0.375), (3, 0.125)];
        for (r, p) in expect {
            assert!((q.prob(&[r]) - p).abs() < 1e-15);
        }
        assert!((q.total_mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dp_equals_enumeration_small_n() {
        for op in [binomial_op(), depth1_op()] {
            let g = vec![1.0; op.n_contexts()];
            for n in 1..=6 {
                let dp = qn_distribution(&op, &g, n, 0).unwrap();
                let en = qn_by_enumeration(&op, &g, n, 0);
                for (r, p) in &en {
                    assert!((dp.prob(r) - p).abs() < 1e-12, "n={n} r={r:?}");
                }
                let mass_en: f64 = en.values().sum();
                assert!((dp.total_mass - mass_en).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn total_mass_equals_l_power() {
        let op = depth1_op();
        let g = vec![1.0; op.n_contexts()];
        let n = 9;
        let q = qn_distribution(&op, &g, n, 0).unwrap();
        // normalised operator: L^n 1 = 1
        assert!((q.total_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_laplace_binomial_closed_form() {
        let op = binomial_op();
        for n in [1, 4, 17] {
            for xi in [-0.3, 0.0, 0.8] {
                let h = log_laplace(&op, &[1.0], n, &[xi], 0).unwrap();
                let expect = ((1.0 + xi.exp()) / 2.0f64).ln();
                assert!((h - expect).abs() < 1e-12, "n={n} xi={xi}");
            }
        }
    }

    #[test]
    fn h_n_converges_to_log_rho_geometrically() {
        let op = depth1_op();
        let g = vec![1.0; op.n_contexts()];
        let xi = [0.2];
        let rho_xi = op.tilted(&xi).rho(1e-13, 100_000).unwrap();
        let mut errs = Vec::new();
        for n in [4, 8, 16, 32] {
            let h = log_laplace(&op, &g, n, &xi, 0).unwrap();
            errs.push((n as f64 * (h - rho_xi.ln())).abs());
        }
        // n·H_n − n·log ρ = log χ + O(e^{−cn}): differences shrink
        let d1 = (errs[1] - errs[0]).abs();
        let d3 = (errs[3] - errs[2]).abs();
        assert!(d3 < 0.5 * d1 + 1e-12, "errs {errs:?}");
    }

    #[test]
    fn hessian_binomial_quarter() {
        let op = binomial_op();
        let model = hessian_at_zero(&op, &[1.0], 1e-4).unwrap();
        assert!((model.a[0][0] - 0.25).abs() < 1e-8, "A = {:?}", model.a);
        assert!((model.drift[0] - 0.5).abs() < 1e-10);
        assert!((model.d_g - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hessian_invariant_under_constant_shift() {
        // shifting V by a constant moves the drift, not the variance
        let a1 = Alphabet::new(1, vec![vec![0], vec![1]]).unwrap();
        let a2 = Alphabet::new(1, vec![vec![5], vec![6]]).unwrap();
        let op1 = RuelleOperator::iid(a1, &[0.5, 0.5]).unwrap();
        let op2 = RuelleOperator::iid(a2, &[0.5, 0.5]).unwrap();
        let (h1, d1, _) = hessian_matrix(&op1, 1e-4).unwrap();
        let (h2, d2, _) = hessian_matrix(&op2, 1e-4).unwrap();
        assert!((h1[0][0] - h2[0][0]).abs() < 1e-7);
        assert!((d2[0] - d1[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn hessian_2d_product_is_diagonal() {
        let alphabet = Alphabet::new(
            2,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]],
        )
        .unwrap();
        let op = RuelleOperator::iid(alphabet, &[0.25, 0.25, 0.25, 0.25]).unwrap();
        let (a, drift, _) = hessian_matrix(&op, 1e-4).unwrap();
        assert!((a[0][0] - 0.25).abs() < 1e-7);
        assert!((a[1][1] - 0.25).abs() < 1e-7);
        assert!(a[0][1].abs() < 1e-7);
        assert!((drift[0] - 0.5).abs() < 1e-9 && (drift[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn degenerate_observable_rejected() {
        // V constant along (1,1): Hessian singular in that direction
        let alphabet = Alphabet::new(2, vec![vec![1, 0], vec![0, 1]]).unwrap();
        let op = RuelleOperator::iid(alphabet, &[0.5, 0.5]).unwrap();
        assert!(matches!(
            hessian_at_zero(&op, &[1.0], 1e-4),
            Err(RuelleError::Degenerate(_))
        ));
    }

    #[test]
    fn tilt_solve_binomial() {
        let op = binomial_op();
        // symmetric target: ξ = 0
        let xi = tilt_solve(&op, &[1.0], 30, &[0.5], 0).unwrap();
        assert!(xi[0].abs() < 1e-9);
        // logit: target 3/4 needs ξ = log 3
        let xi = tilt_solve(&op, &[1.0], 30, &[0.75], 0).unwrap();
        assert!((xi[0] - 3.0f64.ln()).abs() < 1e-8, "xi = {}", xi[0]);
        // boundary target rejected
        assert!(tilt_solve(&op, &[1.0], 30, &[1.0], 0).is_err());
    }

    #[test]
    fn gaussian_vs_exact_binomial_center() {
        let op = binomial_op();
        let model = hessian_at_zero(&op, &[1.0], 1e-4).unwrap();
        let g100 = gaussian_llt(&model, 100, &[50], &[0.5]);
        let exact = binom_exact(100, 50);
        assert!((exact - 0.0795892).abs() < 1e-7);
        assert!((g100 / exact - 1.0).abs() < 0.003, "pred {g100} vs {exact}");
        let peak = gaussian_llt(&model, 100, &[50], &[0.5]);
        let direct = (2.0 * std::f64::consts::PI * 100.0 * 0.25).powf(-0.5);
        // A carries the finite-difference error of the Hessian
        assert!((peak - direct).abs() < 1e-8);
    }

    #[test]
    fn fourier_matches_dp() {
        for op in [binomial_op(), depth1_op()] {
            let g = vec![1.0; op.n_contexts()];
            for n in [3usize, 8] {
                let dp = qn_distribution(&op, &g, n, 0).unwrap();
                let m = n + 2;
                for r in 0..=(n as i64) {
                    let rep = fourier_invert(&op, &g, n, &[r], 0, m, 0.1, 0.6).unwrap();
                    assert!(
                        (rep.value - dp.prob(&[r])).abs() < 1e-10,
                        "n={n} r={r}: {} vs {}",
                        rep.value,
                        dp.prob(&[r])
                    );
                }
                // outside the support
                let rep = fourier_invert(&op, &g, n, &[-1], 0, m, 0.1, 0.6).unwrap();
                assert!(rep.value.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fourier_aliasing_guard() {
        let op = binomial_op();
        assert!(matches!(
            fourier_invert(&op, &[1.0], 10, &[3], 0, 5, 0.1, 0.5),
            Err(RuelleError::Invalid(_))
        ));
    }

    #[test]
    fn fourier_region_decay_matches_scan() {
        let op = depth1_op();
        let g = vec![1.0; op.n_contexts()];
        let n = 24;
        let delta = 0.7;
        let scan = op.off_axis_scan(delta, 128).unwrap();
        let rep = fourier_invert(&op, &g, n, &[12], 0, n + 2, 0.1, delta).unwrap();
        assert!(
            rep.max_modulus_a_delta <= 1.0 - scan.eta + 0.02,
            "max modulus {} vs 1−η {}",
            rep.max_modulus_a_delta,
            1.0 - scan.eta
        );
    }

    #[test]
    fn tail_decay_binomial() {
        let op = binomial_op();
        let report = tail_check(&op, &[1.0], &[8, 16, 32, 64], 0.25, 0).unwrap();
        assert!(report.monotone, "{report:?}");
        let last = report.tails.last().unwrap();
        // envelope c₂ e^{−c₃ n^{1−2ν}} evaluated at n = 64
        let env = report.c2 * (-report.c3 * (64f64).powf(0.5)).exp();
        assert!(last.1 <= env * (1.0 + 0.5) + 1e-12, "tail {} env {env}", last.1);
        assert!(report.c3 > 0.0);
    }

    #[test]
    fn tilted_identity_exact() {
        let op = depth1_op();
        let g = vec![1.0; op.n_contexts()];
        let worst = tilted_distribution_identity(&op, &g, 7, &[0.3], 0).unwrap();
        assert!(worst < 1e-12, "worst deviation {worst}");
    }

    #[test]
    fn hessian_matches_dp_variance_at_large_n() {
        // A_S from finite differences equals Var(Σ V)/n from the exact DP
        let op = depth1_op();
        let g = vec![1.0; op.n_contexts()];
        let n = 400;
        let q = qn_distribution(&op, &g, n, 0).unwrap();
        let mean = q.mean[0];
        let mut var = 0.0;
        for (r, p) in q.support() {
            var += p * (r[0] as f64 - mean).powi(2);
        }
        var /= q.total_mass * n as f64;
        let (a, _, _) = hessian_matrix(&op, 1e-4).unwrap();
        assert!(
            (a[0][0] / var - 1.0).abs() < 0.01,
            "A = {} vs DP variance {}",
            a[0][0],
            var
        );
    }

    #[test]
    fn grad_matches_dp_mean() {
        let op = depth1_op();
        let g = vec![1.0; op.n_contexts()];
        let n = 12;
        let q = qn_distribution(&op, &g, n, 0).unwrap();
        let v = q.running_mean();
        let grad = grad_log_laplace(&op, &g, n, &[0.0], 0, 1e-6).unwrap();
        assert!((grad[0] - v[0]).abs() < 1e-8, "{} vs {}", grad[0], v[0]);
    }
}
