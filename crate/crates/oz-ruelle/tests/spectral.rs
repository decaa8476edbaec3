//! Cross-cutting spectral properties: normalisation commutes with the
//! displacement statistics up to the exponential retilt, and the
//! summability surrogate holds on a geometric alphabet.

use oz_ruelle::llt::qn_distribution;
use oz_ruelle::{Alphabet, RuelleOperator};

fn geometric_op(n: usize) -> RuelleOperator {
    let alphabet = Alphabet::new(1, (1..=n).map(|z| vec![z as i64]).collect()).unwrap();
    let weights: Vec<f64> = (1..=n).map(|z| 0.5f64.powi(z as i32)).collect();
    RuelleOperator::iid(alphabet, &weights).unwrap()
}

#[test]
fn normalisation_preserves_qn_up_to_retilt() {
    // the normalised operator's Q_n equals ρ^{−n} times the original one
    // (the eigenfunction boundary factors are constant for i.i.d. weights)
    let op = geometric_op(6);
    let sd = op.spectral_data(1e-13, 100_000).unwrap();
    let norm = op.normalize(&sd).unwrap();
    let g0 = vec![1.0; op.n_contexts()];
    let n = 7;
    let q_raw = qn_distribution(&op, &g0, n, 0).unwrap();
    let q_norm = qn_distribution(&norm, &g0, n, 0).unwrap();
    let scale = sd.rho.powi(n as i32);
    for (r, p) in q_raw.support() {
        let expect = p / scale;
        assert!(
            (q_norm.prob(&r) - expect).abs() < 1e-13,
            "r = {r:?}: {} vs {expect}",
            q_norm.prob(&r)
        );
    }
    assert!((q_norm.total_mass - 1.0).abs() < 1e-12);
}

#[test]
fn string_weight_summability_surrogate() {
    // Σ over n-strings of sup-context weights ≤ 2 e^{β̄θ} for a normalised
    // operator (finite-table version of the summability lemma)
    let op = geometric_op(4);
    let sd = op.spectral_data(1e-13, 100_000).unwrap();
    let norm = op.normalize(&sd).unwrap();
    let bb = norm.potential().beta_bar(norm.n_symbols());
    let bound = 2.0 * (bb * norm.theta).exp();
    for n in 1..=6 {
        let s = norm.theta_n_sum(n);
        assert!(s <= bound + 1e-9, "n = {n}: {s} vs {bound}");
    }
}

#[test]
fn truncation_rho_increases_to_limit() {
    let op = geometric_op(12);
    let full = op.rho(1e-13, 10_000).unwrap();
    let mut prev = 0.0;
    for keep in 2..=12 {
        let rho = op.truncate(keep).unwrap().rho(1e-13, 10_000).unwrap();
        assert!(rho >= prev - 1e-14);
        assert!(rho <= full + 1e-12);
        prev = rho;
    }
    assert!((prev - full).abs() < 1e-13);
}
