//! The transfer operator (Lf)(x) = Σ_z e^{ψ(z,x)} f(z,x) on depth-m cylinder
//! functions, its Perron data by two-sided power iteration (cross-checked
//! against a dense eigensolver), normalisation, truncation, tilting, Fourier
//! symbols and the off-axis spectral scan.

use crate::alphabet::{Alphabet, ContextSet, Potential};
use crate::{Result, RuelleError};
use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct RuelleOperator {
    pub alphabet: Alphabet,
    pub depth: usize,
    pub theta: f64,
    pub contexts: ContextSet,
    /// ψ(z | ctx), flattened [z * n_contexts + ctx]
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    pub rho: f64,
    /// right Perron eigenfunction on contexts, h(∅…∅) = 1
    pub h: Vec<f64>,
    /// left Perron vector, normalised to unit sum
    pub left: Vec<f64>,
    /// |λ₂| / ρ
    pub gap: f64,
    pub iterations: usize,
    /// ‖Lh − ρh‖∞
    pub residual: f64,
}

impl RuelleOperator {
    pub fn new(alphabet: Alphabet, potential: &Potential) -> Result<Self> {
        let contexts = ContextSet::new(alphabet.len(), potential.depth);
        if potential.table.len() != alphabet.len() * contexts.len() {
            return Err(RuelleError::Invalid("potential table size mismatch".into()));
        }
        Ok(RuelleOperator {
            depth: potential.depth,
            theta: potential.theta,
            contexts,
            psi: potential.table.clone(),
            alphabet,
        })
    }

    pub fn from_fn<F: Fn(usize, &[usize]) -> f64>(
        alphabet: Alphabet,
        depth: usize,
        theta: f64,
        psi: F,
    ) -> Result<Self> {
        let pot = Potential::from_fn(alphabet.len(), depth, theta, psi)?;
        RuelleOperator::new(alphabet, &pot)
    }

    /// i.i.d. weights: depth 0, ψ(z) = log w_z.
    pub fn iid(alphabet: Alphabet, weights: &[f64]) -> Result<Self> {
        if weights.len() != alphabet.len() || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(RuelleError::Invalid("need one positive weight per symbol".into()));
        }
        let w = weights.to_vec();
        RuelleOperator::from_fn(alphabet, 0, 0.5, move |z, _| w[z].ln())
    }

    pub fn n_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn n_contexts(&self) -> usize {
        self.contexts.len()
    }

    pub fn potential(&self) -> Potential {
        Potential { depth: self.depth, theta: self.theta, table: self.psi.clone() }
    }

    #[inline]
    pub fn weight(&self, z: usize, ctx: usize) -> f64 {
        self.psi[z * self.contexts.len() + ctx].exp()
    }

    /// (Lf)(ctx) for every context.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let nc = self.contexts.len();
        if f.len() != nc {
            return Err(RuelleError::Invalid("cylinder function depth mismatch".into()));
        }
        let mut out = vec![0.0; nc];
        for (c, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for z in 0..self.n_symbols() {
                acc += self.weight(z, c) * f[self.contexts.shift(z, c)];
            }
            *slot = acc;
        }
        Ok(out)
    }

    /// Pointwise evaluation (Lf)(ctx).
    pub fn apply_at(&self, f: &[f64], ctx: usize) -> Result<f64> {
        let nc = self.contexts.len();
        if f.len() != nc || ctx >= nc {
            return Err(RuelleError::Invalid("cylinder function depth mismatch".into()));
        }
        let mut acc = 0.0;
        for z in 0..self.n_symbols() {
            acc += self.weight(z, ctx) * f[self.contexts.shift(z, ctx)];
        }
        Ok(acc)
    }

    /// Application of the adjoint matrix: out[shift(z,c)] += w(z,c)·f[c].
    fn apply_transpose(&self, f: &[f64]) -> Vec<f64> {
        let nc = self.contexts.len();
        let mut out = vec![0.0; nc];
        for c in 0..nc {
            let fc = f[c];
            if fc == 0.0 {
                continue;
            }
            for z in 0..self.n_symbols() {
                out[self.contexts.shift(z, c)] += self.weight(z, c) * fc;
            }
        }
        out
    }

    /// Dense matrix of the operator on contexts: M[c, c'] = Σ_{z: shift(z,c)=c'} w(z,c).
    pub fn matrix(&self) -> DMatrix<f64> {
        let nc = self.contexts.len();
        let mut m = DMatrix::zeros(nc, nc);
        for c in 0..nc {
            for z in 0..self.n_symbols() {
                m[(c, self.contexts.shift(z, c))] += self.weight(z, c);
            }
        }
        m
    }

    /// All eigenvalues of the cylinder matrix (dense Schur oracle).
    /// Schur iterations are bounded: highly degenerate matrices may refuse.
    pub fn dense_eigenvalues(&self) -> Result<Vec<Complex64>> {
        let m = self.matrix();
        let schur = nalgebra::linalg::Schur::try_new(m, 1e-14, 100_000)
            .ok_or_else(|| RuelleError::NoConvergence { residual: f64::NAN, iterations: 100_000 })?;
        Ok(schur.complex_eigenvalues().iter().copied().collect())
    }

    /// Perron-root oracle independent of the power iteration: Gelfand's
    /// formula by renormalised repeated squaring of the (real) matrix.
    pub fn dense_perron_root(&self) -> f64 {
        let m = self.matrix().map(|x| Complex64::new(x, 0.0));
        spectral_radius_complex(&m)
    }

    /// Two-sided power iteration for the Perron data; the gap is the spectral
    /// radius of the deflated matrix.
    pub fn spectral_data(&self, tol: f64, max_iter: usize) -> Result<SpectralData> {
        let nc = self.contexts.len();
        let mut h = vec![1.0f64; nc];
        let mut left = vec![1.0f64; nc];
        let mut rho = 0.0f64;
        let mut residual = f64::INFINITY;
        let mut iterations = 0usize;
        for it in 0..max_iter {
            iterations = it + 1;
            let hn = self.apply(&h)?;
            let ln = self.apply_transpose(&left);
            // two-sided Rayleigh quotient: (w, Lv)/(w, v)
            let num: f64 = left.iter().zip(&hn).map(|(a, b)| a * b).sum();
            let den: f64 = left.iter().zip(&h).map(|(a, b)| a * b).sum();
            if den.abs() < 1e-300 {
                return Err(RuelleError::Degenerate("left/right collapse".into()));
            }
            rho = num / den;
            let mh = hn.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if mh == 0.0 {
                return Err(RuelleError::Degenerate("operator annihilates positives".into()));
            }
            residual = hn
                .iter()
                .zip(&h)
                .map(|(&a, &b)| (a - rho * b).abs())
                .fold(0.0f64, f64::max)
                / mh;
            h = hn.iter().map(|&x| x / mh).collect();
            let ml = ln.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            left = ln.iter().map(|&x| x / ml).collect();
            if residual <= tol {
                break;
            }
        }
        if residual > tol {
            return Err(RuelleError::NoConvergence { residual, iterations });
        }
        // normalise h(∅) = 1 and the left vector to unit sum
        let h0 = h[0];
        if !(h0 > 0.0) {
            return Err(RuelleError::Degenerate("eigenfunction vanishes at the empty context".into()));
        }
        let h: Vec<f64> = h.iter().map(|&x| x / h0).collect();
        if h.iter().any(|&x| !(x > 0.0)) {
            return Err(RuelleError::Degenerate("eigenfunction not strictly positive".into()));
        }
        let lsum: f64 = left.iter().sum();
        let left: Vec<f64> = left.iter().map(|&x| x / lsum).collect();

        // deflation: B = M − ρ h w^T / (w^T h); |λ₂| = ρ(B)
        let gap = if nc <= 600 {
            let m = self.matrix();
            let wh: f64 = left.iter().zip(&h).map(|(a, b)| a * b).sum();
            let mut b = m.map(|x| Complex64::new(x, 0.0));
            for r in 0..nc {
                for c in 0..nc {
                    b[(r, c)] -= Complex64::new(rho * h[r] * left[c] / wh, 0.0);
                }
            }
            spectral_radius_complex(&b) / rho
        } else {
            f64::NAN
        };
        Ok(SpectralData { rho, h, left, gap, iterations, residual })
    }

    /// Normalised operator: ψ' = ψ + log h∘shift − log h − log ρ, so that
    /// ρ' = 1 and L'1 ≡ 1.
    pub fn normalize(&self, spectral: &SpectralData) -> Result<RuelleOperator> {
        if spectral.h.iter().any(|&x| !(x > 0.0)) {
            return Err(RuelleError::Degenerate("eigenfunction touches zero".into()));
        }
        let nc = self.contexts.len();
        let mut psi = self.psi.clone();
        for z in 0..self.n_symbols() {
            for c in 0..nc {
                psi[z * nc + c] +=
                    spectral.h[self.contexts.shift(z, c)].ln() - spectral.h[c].ln()
                        - spectral.rho.ln();
            }
        }
        let out = RuelleOperator {
            alphabet: self.alphabet.clone(),
            depth: self.depth,
            theta: self.theta,
            contexts: self.contexts.clone(),
            psi,
        };
        let ones = vec![1.0; nc];
        let l1 = out.apply(&ones)?;
        let err = l1.iter().map(|&x| (x - 1.0).abs()).fold(0.0f64, f64::max);
        if err > 1e-10 {
            return Err(RuelleError::NoConvergence { residual: err, iterations: 0 });
        }
        Ok(out)
    }

    /// Restriction to the first `n` symbols (plus ∅).
    pub fn truncate(&self, n: usize) -> Result<RuelleOperator> {
        if n < 1 || n > self.n_symbols() {
            return Err(RuelleError::Invalid("truncation size out of range".into()));
        }
        let alphabet = Alphabet::new(self.alphabet.dimension, self.alphabet.v[..n].to_vec())?;
        let old_ctxs = self.contexts.clone();
        let old_nc = old_ctxs.len();
        let psi_old = self.psi.clone();
        RuelleOperator::from_fn(alphabet, self.depth, self.theta, move |z, prefix| {
            let c = old_ctxs.index(prefix);
            psi_old[z * old_nc + c]
        })
    }

    /// Exponential tilt: ψ_ξ = ψ + (ξ, V(z)).
    pub fn tilted(&self, xi: &[f64]) -> RuelleOperator {
        assert_eq!(xi.len(), self.alphabet.dimension);
        let nc = self.contexts.len();
        let mut psi = self.psi.clone();
        for z in 0..self.n_symbols() {
            let shift: f64 = xi
                .iter()
                .zip(&self.alphabet.v[z])
                .map(|(&a, &b)| a * b as f64)
                .sum();
            for c in 0..nc {
                psi[z * nc + c] += shift;
            }
        }
        RuelleOperator {
            alphabet: self.alphabet.clone(),
            depth: self.depth,
            theta: self.theta,
            contexts: self.contexts.clone(),
            psi,
        }
    }

    /// Spectral radius of the (real, nonnegative) operator: lean two-sided
    /// power iteration without the deflation pass of `spectral_data`.
    pub fn rho(&self, tol: f64, max_iter: usize) -> Result<f64> {
        let nc = self.contexts.len();
        let mut h = vec![1.0f64; nc];
        let mut left = vec![1.0f64; nc];
        let mut residual = f64::INFINITY;
        for _ in 0..max_iter {
            let hn = self.apply(&h)?;
            let ln = self.apply_transpose(&left);
            let num: f64 = left.iter().zip(&hn).map(|(a, b)| a * b).sum();
            let den: f64 = left.iter().zip(&h).map(|(a, b)| a * b).sum();
            if den.abs() < 1e-300 {
                return Err(RuelleError::Degenerate("left/right collapse".into()));
            }
            let rho = num / den;
            let mh = hn.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if mh == 0.0 {
                return Ok(0.0);
            }
            residual = hn
                .iter()
                .zip(&h)
                .map(|(&a, &b)| (a - rho * b).abs())
                .fold(0.0f64, f64::max)
                / mh;
            h = hn.iter().map(|&x| x / mh).collect();
            let ml = ln.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            left = ln.iter().map(|&x| x / ml).collect();
            if residual <= tol {
                return Ok(rho);
            }
        }
        Err(RuelleError::NoConvergence { residual, iterations: max_iter })
    }

    /// Complex Fourier symbol L_{iτ}: weights e^{ψ(z,x) + i(τ, V(z))}.
    pub fn fourier_symbol(&self, tau: &[f64]) -> FourierOperator {
        assert_eq!(tau.len(), self.alphabet.dimension);
        let phases: Vec<Complex64> = self
            .alphabet
            .v
            .iter()
            .map(|v| {
                let phi: f64 = tau.iter().zip(v).map(|(&t, &c)| t * c as f64).sum();
                Complex64::new(0.0, phi).exp()
            })
            .collect();
        FourierOperator { base: self.clone(), phases }
    }

    /// max |ρ(L_{iτ})| over the grid points with |τ|∞ ≥ δ.
    ///
    /// Requires a normalised operator and a truly d-dimensional observable.
    pub fn off_axis_scan(&self, delta: f64, grid_per_axis: usize) -> Result<ScanReport> {
        if !self.alphabet.truly_d_dimensional() {
            return Err(RuelleError::Degenerate(
                "observable not truly d-dimensional".into(),
            ));
        }
        if self.contexts.len() > 256 {
            return Err(RuelleError::Invalid("scan restricted to ≤ 256 contexts".into()));
        }
        let d = self.alphabet.dimension;
        let m = grid_per_axis;
        let mut max_rho = 0.0f64;
        let mut argmax = vec![0.0; d];
        let mut idx = vec![0usize; d];
        loop {
            let tau: Vec<f64> = idx
                .iter()
                .map(|&k| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / m as f64)
                .collect();
            if tau.iter().any(|&t| t.abs() >= delta) {
                let r = self.fourier_symbol(&tau).spectral_radius();
                if r > max_rho {
                    max_rho = r;
                    argmax = tau;
                }
            }
            // odometer
            let mut i = 0;
            loop {
                if i == d {
                    let eta = 1.0 - max_rho;
                    return Ok(ScanReport { max_rho, argmax, eta });
                }
                idx[i] += 1;
                if idx[i] < m {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    }

    /// c(g) = lim_n L^n g, for a normalised operator: the limit exists and is
    /// constant across contexts; returns the value at `ctx`, the spread over
    /// contexts and the measured geometric rate.
    pub fn projector_coefficient(&self, g: &[f64], ctx: usize) -> Result<ProjectorReport> {
        if g.iter().any(|&x| !(x > 0.0)) {
            return Err(RuelleError::Invalid("g must be strictly positive".into()));
        }
        let ones = vec![1.0; self.contexts.len()];
        let l1 = self.apply(&ones)?;
        if l1.iter().any(|&x| (x - 1.0).abs() > 1e-8) {
            return Err(RuelleError::Invalid("projector limit needs a normalised operator".into()));
        }
        let mut f = g.to_vec();
        let mut diffs = Vec::new();
        let mut prev_spread = f64::INFINITY;
        for it in 0..10_000 {
            let fnext = self.apply(&f)?;
            let diff = fnext
                .iter()
                .zip(&f)
                .map(|(&a, &b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            diffs.push(diff);
            f = fnext;
            let lo = f.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prev_spread = hi - lo;
            if diff < 1e-13 && it > self.depth {
                let rate = measured_rate(&diffs);
                return Ok(ProjectorReport {
                    c: f[ctx],
                    spread: prev_spread,
                    iterations: it + 1,
                    rate,
                });
            }
        }
        Err(RuelleError::NoConvergence { residual: prev_spread, iterations: 10_000 })
    }

    /// Σ over length-n symbol strings of sup_ctx e^{Ψ_n(z | ctx)}; bounded by
    /// 2e^{β̄θ} for normalised operators.
    pub fn theta_n_sum(&self, n: usize) -> f64 {
        let nc = self.contexts.len();
        let ns = self.n_symbols();
        // per string, the weight vector over boundary contexts; depth-first
        fn rec(op: &RuelleOperator, remaining: usize, weights: Vec<f64>) -> f64 {
            if remaining == 0 {
                return weights.iter().cloned().fold(0.0f64, f64::max);
            }
            let nc = op.contexts.len();
            let mut total = 0.0;
            for z in 0..op.n_symbols() {
                // prepend z: new weight per ctx = w(z, shifted-string-context)
                // evaluated along the existing chain
                let mut next = vec![0.0; nc];
                for c in 0..nc {
                    next[c] = op.weight(z, c) * weights[op.contexts.shift(z, c)];
                }
                total += rec(op, remaining - 1, next);
            }
            total
        }
        let _ = (nc, ns);
        rec(self, n, vec![1.0; nc])
    }
}

fn measured_rate(diffs: &[f64]) -> f64 {
    let usable: Vec<f64> = diffs.iter().copied().filter(|&d| d > 1e-300).collect();
    if usable.len() < 4 {
        return 0.0;
    }
    let k = usable.len();
    let a = usable[k - 4];
    let b = usable[k - 1];
    if a <= 0.0 {
        0.0
    } else {
        (b / a).powf(1.0 / 3.0)
    }
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub max_rho: f64,
    pub argmax: Vec<f64>,
    /// 1 − max |ρ(L_{iτ})| on the scanned region
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct ProjectorReport {
    pub c: f64,
    pub spread: f64,
    pub iterations: usize,
    pub rate: f64,
}

/// L_{iτ}: the complex-weighted operator.
pub struct FourierOperator {
    base: RuelleOperator,
    phases: Vec<Complex64>,
}

impl FourierOperator {
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let nc = self.base.contexts.len();
        let mut out = vec![Complex64::new(0.0, 0.0); nc];
        for (c, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for z in 0..self.base.n_symbols() {
                acc += self.base.weight(z, c)
                    * self.phases[z]
                    * f[self.base.contexts.shift(z, c)];
            }
            *slot = acc;
        }
        out
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let nc = self.base.contexts.len();
        let mut m = DMatrix::from_element(nc, nc, Complex64::new(0.0, 0.0));
        for c in 0..nc {
            for z in 0..self.base.n_symbols() {
                m[(c, self.base.contexts.shift(z, c))] +=
                    Complex64::new(self.base.weight(z, c), 0.0) * self.phases[z];
            }
        }
        m
    }

    /// Spectral radius by normalised repeated squaring (Gelfand's formula
    /// based on ‖A^{2^k}‖^{1/2^k}).
    pub fn spectral_radius(&self) -> f64 {
        spectral_radius_complex(&self.matrix())
    }
}

/// ρ(A) = lim ‖A^{2^k}‖^{1/2^k} with per-step renormalisation.
pub fn spectral_radius_complex(a: &DMatrix<Complex64>) -> f64 {
    let mut b = a.clone();
    let mut logrho = 0.0f64;
    let mut weight = 1.0f64;
    for _ in 0..48 {
        let norm = b.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if norm == 0.0 {
            return 0.0;
        }
        logrho += weight * norm.ln();
        weight *= 0.5;
        let scaled = b.map(|z| z / norm);
        b = &scaled * &scaled;
    }
    let norm = b.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if norm > 0.0 {
        logrho += weight * norm.ln();
    }
    logrho.exp()
}
