//! Alphabets S ∪ {∅}, depth-m cylinder contexts and Hölder potentials.
//!
//! A context is a string over S of length ≤ m, implicitly padded by the
//! absorbing empty symbol; once ∅ appears everything after it is ∅, so the
//! context set has Σ_{k=0}^m n^k elements.  Context 0 is the all-∅ string.

use crate::{Result, RuelleError};

/// The (truncated) alphabet with its Z^d displacement observable.
#[derive(Debug, Clone)]
pub struct Alphabet {
    pub dimension: usize,
    /// V(z) per symbol; V(∅) = 0 implicitly
    pub v: Vec<Vec<i64>>,
}

impl Alphabet {
    pub fn new(dimension: usize, v: Vec<Vec<i64>>) -> Result<Self> {
        if v.is_empty() {
            return Err(RuelleError::Invalid("alphabet must be nonempty".into()));
        }
        if v.iter().any(|x| x.len() != dimension) {
            return Err(RuelleError::Invalid("observable dimension mismatch".into()));
        }
        Ok(Alphabet { dimension, v })
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// A1: no ζ ≠ 0 with (ζ, V(·)) constant, i.e. the differences
    /// V(z) − V(z₀) span R^d.
    pub fn truly_d_dimensional(&self) -> bool {
        let d = self.dimension;
        if self.v.len() < d + 1 {
            return false;
        }
        let mut rows: Vec<Vec<f64>> = self.v[1..]
            .iter()
            .map(|x| {
                x.iter()
                    .zip(&self.v[0])
                    .map(|(&a, &b)| (a - b) as f64)
                    .collect()
            })
            .collect();
        // Gaussian elimination rank
        let mut rank = 0usize;
        for col in 0..d {
            let piv = (rank..rows.len())
                .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()));
            match piv {
                Some(p) if rows[p][col].abs() > 1e-12 => {
                    rows.swap(rank, p);
                    for r in (rank + 1)..rows.len() {
                        let f = rows[r][col] / rows[rank][col];
                        for c in col..d {
                            let v = rows[rank][c];
                            rows[r][c] -= f * v;
                        }
                    }
                    rank += 1;
                }
                _ => {}
            }
        }
        rank == d
    }
}

/// Index arithmetic for ∅-padded contexts of length ≤ depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextSet {
    pub n_symbols: usize,
    pub depth: usize,
    offsets: Vec<usize>,
    total: usize,
}

impl ContextSet {
    pub fn new(n_symbols: usize, depth: usize) -> Self {
        let mut offsets = Vec::with_capacity(depth + 2);
        let mut acc = 0usize;
        let mut pw = 1usize;
        for _ in 0..=depth {
            offsets.push(acc);
            acc += pw;
            pw = pw.saturating_mul(n_symbols);
        }
        offsets.push(acc);
        ContextSet { n_symbols, depth, offsets, total: acc }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// index of the context with the given non-∅ prefix
    pub fn index(&self, prefix: &[usize]) -> usize {
        let k = prefix.len();
        assert!(k <= self.depth, "prefix longer than depth");
        let mut idx = 0usize;
        for &s in prefix {
            debug_assert!(s < self.n_symbols);
            idx = idx * self.n_symbols + s;
        }
        self.offsets[k] + idx
    }

    /// non-∅ prefix of a context index
    pub fn prefix(&self, mut idx: usize) -> Vec<usize> {
        let k = (0..=self.depth)
            .find(|&k| idx < self.offsets[k + 1])
            .expect("index in range");
        idx -= self.offsets[k];
        let mut digits = vec![0usize; k];
        for slot in digits.iter_mut().rev() {
            *slot = idx % self.n_symbols;
            idx /= self.n_symbols;
        }
        digits
    }

    /// context obtained by prepending symbol z and truncating to depth
    pub fn shift(&self, z: usize, ctx: usize) -> usize {
        if self.depth == 0 {
            return 0;
        }
        let mut p = self.prefix(ctx);
        p.insert(0, z);
        p.truncate(self.depth);
        self.index(&p)
    }

    /// number of leading padded symbols two contexts share (0..=depth)
    pub fn agreement(&self, a: usize, b: usize) -> usize {
        let pa = self.prefix(a);
        let pb = self.prefix(b);
        let mut k = 0;
        while k < self.depth {
            let xa = pa.get(k);
            let xb = pb.get(k);
            if xa != xb {
                break;
            }
            k += 1;
        }
        k
    }
}

/// A depth-m potential table ψ(z | context) with its Hölder data.
#[derive(Debug, Clone)]
pub struct Potential {
    pub depth: usize,
    pub theta: f64,
    /// flattened [z * n_contexts + ctx]
    pub table: Vec<f64>,
}

impl Potential {
    pub fn from_fn<F: Fn(usize, &[usize]) -> f64>(
        n_symbols: usize,
        depth: usize,
        theta: f64,
        psi: F,
    ) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(RuelleError::Invalid("theta must lie in (0,1)".into()));
        }
        let ctxs = ContextSet::new(n_symbols, depth);
        let mut table = Vec::with_capacity(n_symbols * ctxs.len());
        for z in 0..n_symbols {
            for c in 0..ctxs.len() {
                let val = psi(z, &ctxs.prefix(c));
                if !val.is_finite() {
                    return Err(RuelleError::Invalid(format!(
                        "psi({z}, ctx {c}) is not finite"
                    )));
                }
                table.push(val);
            }
        }
        Ok(Potential { depth, theta, table })
    }

    /// var_k(ψ) for k = 2..=depth+1: sup over string pairs agreeing on the
    /// first k−1 coordinates of |ψ(u) − ψ(u')|.
    pub fn variations(&self, n_symbols: usize) -> Vec<f64> {
        let ctxs = ContextSet::new(n_symbols, self.depth);
        let nc = ctxs.len();
        let mut vars = Vec::new();
        for k in 2..=(self.depth + 1) {
            // group contexts by their first k−2 padded symbols
            let mut best = 0.0f64;
            let mut groups: std::collections::HashMap<(usize, Vec<Option<usize>>), (f64, f64)> =
                std::collections::HashMap::new();
            for z in 0..n_symbols {
                for c in 0..nc {
                    let p = ctxs.prefix(c);
                    let key: Vec<Option<usize>> =
                        (0..k - 2).map(|i| p.get(i).copied()).collect();
                    let v = self.table[z * nc + c];
                    let e = groups.entry((z, key)).or_insert((v, v));
                    e.0 = e.0.min(v);
                    e.1 = e.1.max(v);
                }
            }
            for (_, (lo, hi)) in groups {
                best = best.max(hi - lo);
            }
            vars.push(best);
        }
        vars
    }

    /// |ψ|_θ = sup_{k≥2} var_k / θ^k (finite table: k ≤ depth+1).
    pub fn seminorm(&self, n_symbols: usize) -> f64 {
        self.variations(n_symbols)
            .iter()
            .enumerate()
            .map(|(i, v)| v / self.theta.powi(i as i32 + 2))
            .fold(0.0, f64::max)
    }

    /// β(ψ) = |ψ|_θ / (1 − θ).
    pub fn beta_bar(&self, n_symbols: usize) -> f64 {
        self.seminorm(n_symbols) / (1.0 - self.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_indexing_roundtrip() {
        let ctxs = ContextSet::new(3, 2);
        assert_eq!(ctxs.len(), 1 + 3 + 9);
        for idx in 0..ctxs.len() {
            let p = ctxs.prefix(idx);
            assert_eq!(ctxs.index(&p), idx);
        }
        // shifting prepends and truncates
        let c = ctxs.index(&[1, 2]);
        let s = ctxs.shift(0, c);
        assert_eq!(ctxs.prefix(s), vec![0, 1]);
        // shifting the empty context grows it
        let s = ctxs.shift(2, 0);
        assert_eq!(ctxs.prefix(s), vec![2]);
    }

    #[test]
    fn depth_zero_has_single_context() {
        let ctxs = ContextSet::new(5, 0);
        assert_eq!(ctxs.len(), 1);
        assert_eq!(ctxs.shift(3, 0), 0);
    }

    #[test]
    fn a1_rank_check() {
        let good = Alphabet::new(2, vec![vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        assert!(good.truly_d_dimensional());
        // all V on a line: (ζ, V) constant for ζ = (1,1)
        let bad = Alphabet::new(2, vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert!(!bad.truly_d_dimensional());
        let const1 = Alphabet::new(1, vec![vec![1], vec![1]]).unwrap();
        assert!(!const1.truly_d_dimensional());
    }

    #[test]
    fn seminorm_of_depth1_table() {
        // ψ(z, x₁) = log M(z, x₁), variation over columns
        let m = [[0.6, 0.3], [0.2, 0.5]];
        let pot = Potential::from_fn(2, 1, 0.5, |z, ctx| {
            let x1 = ctx.first().copied().unwrap_or(0);
            (m[z][x1] as f64).ln()
        })
        .unwrap();
        let vars = pot.variations(2);
        assert_eq!(vars.len(), 1);
        let expect = (0.5f64 / 0.2).ln(); // row b varies the most
        assert!((vars[0] - expect).abs() < 1e-12);
        assert!((pot.seminorm(2) - expect / 0.25).abs() < 1e-12);
    }
}
