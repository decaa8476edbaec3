//! Closed-form toy walks: exact anchors for the OZ pipeline.
//!
//! The main one is the directed diagonal walk with steps (1,0) and (0,1) of
//! weight w each: G((n,n)) = C(2n,n) w^{2n}, decay rate −log(4w²)/√2 per unit
//! Euclidean length along the diagonal and OZ prefactor exponent 1/2.

use oz_core::gibbs::{CorrelationTable, Method};
use oz_ruelle::{Alphabet, RuelleOperator};

/// log C(n, k)
pub fn log_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut v = 0.0f64;
    for i in 1..=k {
        v += ((n - k + i) as f64).ln() - (i as f64).ln();
    }
    v
}

/// The untilted diagonal-walk operator: i.i.d. steps (1,0), (0,1), weight w.
pub fn diagonal_walk_op(w: f64) -> RuelleOperator {
    let alphabet = Alphabet::new(2, vec![vec![1, 0], vec![0, 1]]).unwrap();
    RuelleOperator::iid(alphabet, &[w, w]).unwrap()
}

/// Dual vector of the diagonal direction: ρ^t(0) = 2we^{τ} = 1.
pub fn diagonal_walk_dual(w: f64) -> Vec<f64> {
    let tau = (1.0 / (2.0 * w)).ln();
    vec![tau, tau]
}

/// G((n,n)) = C(2n,n) w^{2n} for n = 1..=n_max, tagged as a toy table.
pub fn diagonal_walk_table(w: f64, n_max: i64) -> CorrelationTable {
    let mut t = CorrelationTable::new(0.0, Method::ToyModel);
    for n in 1..=n_max {
        let g = (log_choose(2 * n as u64, n as u64) + 2.0 * n as f64 * w.ln()).exp();
        t.insert(&[0, 0], &[n, n], g, 0.0);
    }
    t
}

/// Exact decay rate of the diagonal walk per unit Euclidean length.
pub fn diagonal_walk_rate(w: f64) -> f64 {
    -(4.0 * w * w).ln() / 2f64.sqrt()
}

/// Exact OZ prefactor of the diagonal walk: G(x) e^{ξ|x|} |x|^{1/2} → (√2/π)^{1/2}.
pub fn diagonal_walk_prefactor() -> f64 {
    (2f64.sqrt() / std::f64::consts::PI).sqrt()
}

/// Binomial toy: V ∈ {0, 1} with weight 1/2 each.
pub fn binomial_op() -> RuelleOperator {
    let alphabet = Alphabet::new(1, vec![vec![0], vec![1]]).unwrap();
    RuelleOperator::iid(alphabet, &[0.5, 0.5]).unwrap()
}

/// The depth-1 reference model ψ(z, x₁) = log M(z, x₁) with
/// M = [[0.6, 0.3], [0.2, 0.5]] (∅-context column copies x₁ = a);
/// eigenvalues 0.8 and 0.3.
pub fn depth1_model(v: Vec<Vec<i64>>) -> RuelleOperator {
    let m = [[0.6, 0.3], [0.2, 0.5]];
    let alphabet = Alphabet::new(v[0].len(), v).unwrap();
    RuelleOperator::from_fn(alphabet, 1, 0.5, move |z, ctx| {
        let x1 = ctx.first().copied().unwrap_or(0);
        (m[z][x1] as f64).ln()
    })
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_walk_generating_identity() {
        // e^{(t,x)} G(x) = Q_{2n}(x) for the tilted normalised walk
        let w = 0.4;
        let op = diagonal_walk_op(w);
        let t = diagonal_walk_dual(w);
        let tilted = op.tilted(&t);
        let rho = tilted.rho(1e-13, 1000).unwrap();
        assert!((rho - 1.0).abs() < 1e-12);
        let n = 6i64;
        let q = oz_ruelle::llt::qn_distribution(&tilted, &[1.0], 2 * n as usize, 0).unwrap();
        let g = (log_choose(2 * n as u64, n as u64) + 2.0 * n as f64 * w.ln()).exp();
        let lhs = ((t[0] + t[1]) * n as f64).exp() * g;
        assert!((q.prob(&[n, n]) - lhs).abs() < 1e-12);
        // only the single step count contributes
        let q5 = oz_ruelle::llt::qn_distribution(&tilted, &[1.0], 2 * n as usize - 1, 0).unwrap();
        assert_eq!(q5.prob(&[n, n]), 0.0);
    }

    #[test]
    fn rate_value() {
        assert!((diagonal_walk_rate(0.4) - 0.31557263662465207).abs() < 1e-12);
    }
}
