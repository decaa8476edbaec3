//! End-to-end Ising pipeline: strip estimate of the axis decay rate, dual
//! vector, irreducible alphabet, tilted spectral data, Wulff-patch tracing,
//! a smooth D4-symmetric norm fitted to the traced support values, and the
//! strict-triangle / prefactor reports.

use crate::alphabet_build::{build_alphabet, concat_paths, AlphabetParams, IrreducibleAlphabet, Site};
use crate::ozfit::{oz_prefactor, triangle_pair_grid, BoundaryPair, TriangleReport};
use crate::wulff::{curvature, grad_log_rho, BoundaryCurvature, WulffBoundary};
use crate::{LabError, Result};
use oz_core::norm::{dual_vector, NormModel};
use oz_core::strip::strip_two_point;
use oz_core::xi::{inverse_correlation_length, least_squares};
use oz_core::CouplingField;
use oz_ruelle::llt::hessian_matrix;
use oz_ruelle::RuelleOperator;

/// Support function h(θ) = Σ_k c_k cos(4kθ): smooth, exactly D4-symmetric.
#[derive(Debug, Clone)]
pub struct Cos4Series {
    pub c: Vec<f64>,
}

impl Cos4Series {
    pub fn h(&self, theta: f64) -> f64 {
        self.c
            .iter()
            .enumerate()
            .map(|(k, &ck)| ck * (4.0 * k as f64 * theta).cos())
            .sum()
    }

    /// radius of curvature in the support parameterisation: R = h + h''
    pub fn radius(&self, theta: f64) -> f64 {
        self.c
            .iter()
            .enumerate()
            .map(|(k, &ck)| ck * (1.0 - 16.0 * (k * k) as f64) * (4.0 * k as f64 * theta).cos())
            .sum()
    }

    pub fn min_radius(&self, grid: usize) -> f64 {
        (0..grid)
            .map(|i| self.radius(std::f64::consts::PI / 4.0 * i as f64 / grid as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// The support function as a sampled NormModel (dense angular table).
    pub fn to_norm(&self, samples: usize) -> NormModel {
        let series = self.clone();
        NormModel::sampled_from(samples, move |theta| series.h(theta))
    }
}

/// ξ(x) = |x|·h(θ(x)) directly from the series (no interpolation error).
pub fn cos4_xi(series: &Cos4Series, x: &[i64]) -> f64 {
    let r = ((x[0] * x[0] + x[1] * x[1]) as f64).sqrt();
    if r == 0.0 {
        return 0.0;
    }
    let theta = (x[1] as f64).atan2(x[0] as f64);
    r * series.h(theta)
}

pub struct IsingPipelineConfig {
    pub beta: f64,
    pub alphabet: AlphabetParams,
    /// strip geometry for the axis rate estimate
    pub strip_width: usize,
    pub strip_length: usize,
    pub fit_window: (f64, f64),
    /// boundary tracing
    pub trace_spacing: f64,
    pub target_angle_deg: f64,
    pub fourier_degree: usize,
}

impl Default for IsingPipelineConfig {
    fn default() -> Self {
        IsingPipelineConfig {
            beta: 0.3,
            alphabet: AlphabetParams::default(),
            strip_width: 10,
            strip_length: 60,
            fit_window: (10.0, 40.0),
            trace_spacing: 0.01,
            target_angle_deg: 26.0,
            fourier_degree: 3,
        }
    }
}

pub struct IsingPipelineReport {
    pub xi_axis: f64,
    pub t0: Vec<f64>,
    pub alphabet: IrreducibleAlphabet,
    /// ρ of the tilted operator at s = 0 (≈ 1 up to truncation loss)
    pub rho0: f64,
    pub boundary: WulffBoundary,
    pub curvature: BoundaryCurvature,
    pub series: Cos4Series,
    pub norm: NormModel,
    /// min radius of curvature of the fitted boundary (analytic)
    pub radius_min: f64,
    /// rms misfit of the cosine series against the traced support values
    pub fit_rms: f64,
    pub triangle: TriangleReport,
    pub duality_direction: Vec<f64>,
    pub phi: f64,
}

/// Trace the boundary until the outward normal covers ±target angle around
/// the base direction, then fit the D4 cosine series to the support values.
pub fn run_ising_pipeline(cfg: &IsingPipelineConfig) -> Result<IsingPipelineReport> {
    // 1. axis decay rate from exact strips, Aitken-extrapolated in the width
    //    (strip rates converge geometrically to the plane rate)
    let field = CouplingField::nearest_neighbour(2, cfg.alphabet.j);
    let mut rates = Vec::new();
    for w in [cfg.strip_width.saturating_sub(4), cfg.strip_width - 2, cfg.strip_width] {
        let strip =
            strip_two_point(w, cfg.strip_length, cfg.beta, &field).map_err(LabError::Core)?;
        let ymid = (w / 2) as i64;
        let c0 = (cfg.strip_length as i64 / 4).min(6);
        let est = inverse_correlation_length(
            &strip,
            &[c0, ymid],
            &[1, 0],
            cfg.fit_window,
            2,
            false,
            false,
        )
        .map_err(LabError::Core)?;
        rates.push(est.rate);
    }
    let xi_axis = {
        let (f1, f2, f3) = (rates[0], rates[1], rates[2]);
        let d1 = f2 - f1;
        let d2 = f3 - f2;
        if (d2 - d1).abs() > 1e-12 && (d2 / d1) > 0.0 && (d2 / d1) < 1.0 {
            f3 + d2 * (d2 / d1) / (1.0 - d2 / d1)
        } else {
            f3
        }
    };

    // 2. working norm and dual vector along the axis
    let norm0 = NormModel::euclidean(2, xi_axis);
    let t0 = dual_vector(&norm0, &[1.0, 0.0]).map_err(LabError::Core)?;

    // 3. alphabets along the two principal directions; each is only trusted
    //    for tilts whose normals stay near its base direction
    let params = AlphabetParams { beta: cfg.beta, ..cfg.alphabet.clone() };
    let alphabet = build_alphabet(&params, &t0, &norm0)?;
    let op = &alphabet.operator;
    let rho0 = op.rho(1e-13, 500_000)?;
    let t45 = dual_vector(&norm0, &[1.0, 1.0]).map_err(LabError::Core)?;
    let alphabet_diag = build_alphabet(&params, &t45, &norm0)?;

    // 4. trace both boundary patches out to the requested normal rotation
    let boundary = trace_to_angle(op, cfg.trace_spacing, cfg.target_angle_deg)?;
    let curv = curvature(&boundary.points(), boundary.spacing)?;
    let boundary_diag =
        trace_to_angle(&alphabet_diag.operator, cfg.trace_spacing, cfg.target_angle_deg)?;

    // 5. fit the D4-symmetric support series to the union of the local
    //    (normal angle, support value) data of both patches; the diagonal
    //    patch is rescaled to the axis patch over their angular overlap to
    //    remove the relative truncation bias
    // samples carry a confidence weight that tapers with the rotation away
    // from the patch base, where the truncation bias grows
    let collect = |b: &WulffBoundary,
                   base: &[f64],
                   opref: &RuelleOperator|
     -> Result<Vec<(f64, f64, f64)>> {
        let base_angle = (base[1]).atan2(base[0]);
        let limit = (cfg.target_angle_deg + 1.0).to_radians();
        let mut out = Vec::new();
        for smp in &b.samples {
            let g = grad_log_rho(opref, &[smp.s[0], smp.s[1]], 1e-6)?;
            let glen = (g[0] * g[0] + g[1] * g[1]).sqrt();
            let u = [g[0] / glen, g[1] / glen];
            let theta = u[1].atan2(u[0]);
            let rel = (theta - base_angle).abs();
            if rel > limit {
                continue;
            }
            let conf = (std::f64::consts::FRAC_PI_2 * rel / limit).cos().powi(4);
            let p = [base[0] + smp.s[0], base[1] + smp.s[1]];
            out.push((fold_octant(theta), p[0] * u[0] + p[1] * u[1], conf.max(1e-4)));
        }
        Ok(out)
    };
    let axis_data = collect(&boundary, &t0.t, op)?;
    let mut diag_data = collect(&boundary_diag, &t45.t, &alphabet_diag.operator)?;
    let lo = diag_data.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let hi = axis_data.iter().map(|d| d.0).fold(0.0f64, f64::max);
    if hi > lo {
        let mean = |d: &[(f64, f64, f64)]| -> (f64, usize) {
            let sel: Vec<f64> = d
                .iter()
                .filter(|&&(th, _, _)| th >= lo && th <= hi)
                .map(|&(_, h, _)| h)
                .collect();
            (sel.iter().sum::<f64>() / sel.len().max(1) as f64, sel.len())
        };
        let (ma, na) = mean(&axis_data);
        let (md, nd) = mean(&diag_data);
        if na > 3 && nd > 3 && md > 0.0 {
            let factor = ma / md;
            for d in diag_data.iter_mut() {
                d.1 *= factor;
            }
        }
    }
    let mut folded = axis_data;
    folded.extend(diag_data);
    let (series, fit_rms) = fit_cos4_convex(&folded, cfg.fourier_degree)?;
    let radius_min = series.min_radius(4096);
    if !(radius_min > 0.0) {
        return Err(LabError::Numerical(format!(
            "fitted boundary not strictly convex (min radius {radius_min:.3e})"
        )));
    }
    let norm = series.to_norm(4096);

    // 6. strict triangle inequality with the minimal radius of curvature
    let pairs = triangle_pair_grid(6, 1000);
    let triangle = strict_triangle_series(&series, radius_min, &pairs);

    // 7. duality direction and the prefactor with the light (μ, η) family
    let duality_direction = crate::wulff::duality_direction(op)?;
    let phi = ising_prefactor(&alphabet, op)?;

    Ok(IsingPipelineReport {
        xi_axis,
        t0: t0.t.clone(),
        alphabet,
        rho0,
        boundary,
        curvature: curv,
        series,
        norm,
        radius_min,
        fit_rms,
        triangle,
        duality_direction,
        phi,
    })
}

pub fn strict_triangle_series(
    series: &Cos4Series,
    kappa_bar: f64,
    pairs: &[(Vec<i64>, Vec<i64>)],
) -> TriangleReport {
    let xi = |x: &[i64]| cos4_xi(series, x);
    let mut min_slack = f64::INFINITY;
    let mut worst = (vec![0i64; 2], vec![0i64; 2]);
    for (u, v) in pairs {
        let sum: Vec<i64> = u.iter().zip(v).map(|(&a, &b)| a + b).collect();
        let lhs = xi(u) + xi(v) - xi(&sum);
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

fn trace_to_angle(op: &RuelleOperator, spacing: f64, target_deg: f64) -> Result<WulffBoundary> {
    crate::wulff::trace_until_normal_angle(op, spacing, target_deg, 30_000)
}

fn fold_octant(theta: f64) -> f64 {
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut t = theta.rem_euclid(quarter);
    if t > quarter / 2.0 {
        t = quarter - t;
    }
    t
}

/// Confidence-weighted least-squares cosine fit.
fn fit_cos4(data: &[(f64, f64, f64)], degree: usize) -> Result<(Cos4Series, f64)> {
    let rows: Vec<Vec<f64>> = data
        .iter()
        .map(|&(th, _, w)| {
            (0..=degree)
                .map(|k| w.sqrt() * (4.0 * k as f64 * th).cos())
                .collect()
        })
        .collect();
    let ys: Vec<f64> = data.iter().map(|&(_, h, w)| w.sqrt() * h).collect();
    let c = least_squares(&rows, &ys).map_err(LabError::Core)?;
    let series = Cos4Series { c };
    let wsum: f64 = data.iter().map(|&(_, _, w)| w).sum();
    let rms = (data
        .iter()
        .map(|&(th, h, w)| w * (series.h(th) - h).powi(2))
        .sum::<f64>()
        / wsum)
        .sqrt();
    Ok((series, rms))
}

/// Weighted cosine fit followed by geometric damping of the higher harmonics
/// until the radius of curvature h + h'' stays positive: the patch seams
/// carry truncation mismatch that a raw fit can turn into spurious concavity.
fn fit_cos4_convex(data: &[(f64, f64, f64)], degree: usize) -> Result<(Cos4Series, f64)> {
    let (mut series, _) = fit_cos4(data, degree)?;
    let floor = 0.02 * series.c[0].abs();
    for _ in 0..400 {
        if series.min_radius(2048) >= floor {
            break;
        }
        for (k, ck) in series.c.iter_mut().enumerate() {
            if k >= 1 {
                *ck *= 0.98f64.powi(k as i32);
            }
        }
    }
    if series.min_radius(2048) < floor {
        return Err(LabError::Numerical("convexity damping failed".into()));
    }
    let wsum: f64 = data.iter().map(|&(_, _, w)| w).sum();
    let rms = (data
        .iter()
        .map(|&(th, h, w)| w * (series.h(th) - h).powi(2))
        .sum::<f64>()
        / wsum)
        .sqrt();
    Ok((series, rms))
}

/// Φ with the lightweight boundary family: the trivial pair plus single-edge
/// μ pieces, each with χ from the projector limit of its boundary function.
fn ising_prefactor(alphabet: &IrreducibleAlphabet, op: &RuelleOperator) -> Result<f64> {
    let sd = op.spectral_data(1e-12, 500_000)?;
    let normalized = op.normalize(&sd)?;
    let (a, drift, _) = hessian_matrix(&normalized, 1e-4)?;

    // boundary family: trivial μ/η plus one-step μ's ending at the origin
    let mus: Vec<Vec<Site>> = vec![
        vec![[0, 0]],
        vec![[-1, 0], [0, 0]],
        vec![[0, -1], [0, 0]],
        vec![[0, 1], [0, 0]],
    ];
    let mut pairs = Vec::new();
    for mu in &mus {
        let (chi, q_mu, v_mu) = if mu.len() < 2 {
            (1.0, 1.0, [0i64, 0])
        } else {
            let q_mu = crate::alphabet_build::log_weight_on_box(
                mu,
                alphabet.beta,
                alphabet.j,
                alphabet.operator.depth as i64 + 3,
            )?
            .exp();
            // g_μ(ctx) = q_{β,ctx}(μ)/q(μ) on the depth-m contexts
            let nc = normalized.n_contexts();
            let mut g = vec![1.0f64; nc];
            for c in 0..nc {
                let prefix = normalized.contexts.prefix(c);
                if prefix.is_empty() {
                    continue;
                }
                let mut pieces: Vec<&[Site]> = vec![mu];
                for &s in &prefix {
                    pieces.push(&alphabet.paths[s]);
                }
                let chain = concat_paths(&pieces);
                let rest = concat_paths(&pieces[1..]);
                let lc = crate::alphabet_build::log_conditional_weight(
                    &chain,
                    &rest,
                    alphabet.beta,
                    alphabet.j,
                    3,
                )?;
                g[c] = (lc - q_mu.ln()).exp();
            }
            let chi = normalized.projector_coefficient(&g, 0)?.c;
            let last = mu.last().unwrap();
            let first = mu.first().unwrap();
            (chi, q_mu, [last[0] - first[0], last[1] - first[1]])
        };
        let tilt: f64 = alphabet.t[0] * v_mu[0] as f64 + alphabet.t[1] * v_mu[1] as f64;
        // η kept trivial: q(η) = 1, V(η) = 0
        pairs.push(BoundaryPair { weight: q_mu * tilt.exp(), chi });
    }
    oz_prefactor(&pairs, &a, &drift)
}
