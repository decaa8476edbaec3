//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured numbers (run with --show-output to see passing detail).
//!
//! Criterion 6 is split: 6a carries the exact identities and closed-form
//! anchors; 6b is the Gaussian-window relative-error check at the stated
//! ν = 0.3, n = 200, 5% combination, which is quantitatively unattainable
//! (the window edge sits at ≈ 5.8σ where the Gaussian local limit is off by
//! ~30–60%); it is implemented literally and left red, with the same check
//! at ν = 0.45 passing in criterion_06c as the attainable-window companion.

use ozlab::alphabet_build::AlphabetParams;
use ozlab::ozfit::{oz_fit, oz_prefactor, strict_triangle_check, triangle_pair_grid, BoundaryPair};
use ozlab::pipeline::{run_ising_pipeline, strict_triangle_series, IsingPipelineConfig};
use ozlab::toys;
use ozlab::wulff::{curvature, duality_direction, rho_at, trace_boundary};
use oz_core::decomp::verify_irreducible_representation;
use oz_core::gibbs::{exact_pair, exact_two_point};
use oz_core::lattice::{build_graph, CouplingField, LatticeGraph, Point};
use oz_core::line::{enumerate_lines, representation_sum};
use oz_core::norm::{dot_i, dual_vector, NormModel};
use oz_core::skeleton::{
    build_skeleton, random_admissible_skeleton, surcharge_checks, Skeleton,
};
use oz_core::wolff::{monte_carlo_two_point, McParams};
use oz_core::xi::{inverse_correlation_length, least_squares};
use oz_ruelle::llt::{self, hessian_at_zero, qn_by_enumeration, qn_distribution};
use oz_ruelle::{Alphabet, RuelleOperator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::time::Instant;

fn grid_2x3() -> LatticeGraph {
    let field = CouplingField::nearest_neighbour(2, 1.0);
    build_graph(&field, &[(0, 2), (0, 1)]).unwrap()
}

/// every connected edge-subset subgraph of the 2×3 grid
fn connected_subgraphs() -> Vec<LatticeGraph> {
    let g = grid_2x3();
    let m = g.edge_count();
    let mut out = Vec::new();
    for mask in 1u64..(1 << m) {
        let sub = g.subgraph(mask).unwrap();
        if sub.is_connected() {
            out.push(sub);
        }
    }
    out
}

fn calibrated_scale(graph: &LatticeGraph, beta: f64) -> f64 {
    let table = exact_two_point(graph, beta).unwrap();
    let mut scale = f64::INFINITY;
    for ((p, q), (g, _)) in table.iter() {
        if p != q && *g > 0.0 {
            let dist: f64 = p
                .iter()
                .zip(q)
                .map(|(&u, &v)| ((u - v) * (u - v)) as f64)
                .sum::<f64>()
                .sqrt();
            scale = scale.min(-g.ln() / dist);
        }
    }
    scale
}

#[test]
fn criterion_01_representation_identity() {
    let start = Instant::now();
    let graphs = connected_subgraphs();
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for beta in [0.1, 0.3, 0.5] {
        for g in &graphs {
            for x in 0..g.vertex_count() {
                for y in (x + 1)..g.vertex_count() {
                    let exact = exact_pair(g, x, y, beta).unwrap();
                    let rsum = representation_sum(g, x, y, beta).unwrap();
                    worst = worst.max((exact - rsum).abs());
                    checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-10 && elapsed.as_secs() < 60;
    println!(
        "[{}] criterion 1: representation identity on {} pair instances, worst defect {worst:.3e}, {elapsed:?}",
        if ok { "PASS" } else { "FAIL" },
        checked
    );
    assert!(ok);
}

#[test]
fn criterion_02_bk_inequality() {
    let graphs = connected_subgraphs();
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut checked = 0usize;
    for beta in [0.1, 0.3, 0.5] {
        for g in &graphs {
            let n = g.vertex_count();
            // cache grouped lines per ordered pair
            let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
            let mut rep = |a: usize, b: usize, cache: &mut HashMap<(usize, usize), f64>| {
                *cache
                    .entry((a.min(b), a.max(b)))
                    .or_insert_with(|| representation_sum(g, a, b, beta).unwrap())
            };
            for x in 0..n {
                for y in 0..n {
                    if x == y {
                        continue;
                    }
                    let lines = enumerate_lines(g, x, y, beta).unwrap();
                    for through in 0..n {
                        let lhs: f64 = lines
                            .iter()
                            .filter(|(l, _)| l.contains_vertex(through))
                            .map(|(_, q)| q)
                            .sum();
                        let rhs = if through == x || through == y {
                            rep(x, y, &mut cache)
                        } else {
                            rep(x, through, &mut cache) * rep(through, y, &mut cache)
                        };
                        worst = worst.max(lhs - rhs);
                        checked += 1;
                    }
                }
            }
        }
    }
    let ok = worst <= 1e-12;
    println!(
        "[{}] criterion 2: BK inequality on {checked} triples, worst violation {worst:.3e}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_03_skeleton_surcharge_suite() {
    // (a) grouping identity at K = 1 on the 2×3 grid
    let g = grid_2x3();
    let beta = 0.3;
    let scale = calibrated_scale(&g, beta);
    let norm = NormModel::euclidean(2, scale);
    let table = exact_two_point(&g, beta).unwrap();
    let mut worst_group = 0.0f64;
    let mut worst_weight_margin = f64::NEG_INFINITY;
    for x in 0..g.vertex_count() {
        for y in (x + 1)..g.vertex_count() {
            let mut groups: HashMap<Vec<Point>, f64> = HashMap::new();
            for (line, q) in enumerate_lines(&g, x, y, beta).unwrap() {
                let pts: Vec<Point> =
                    line.verts.iter().map(|&v| g.vertices[v].clone()).collect();
                let sk = build_skeleton(&pts, 1.0, &norm).unwrap();
                *groups.entry(sk.points).or_insert(0.0) += q;
            }
            let total: f64 = groups.values().sum();
            let exact = table.get(&g.vertices[x], &g.vertices[y]).unwrap().0;
            worst_group = worst_group.max((total - exact).abs());
            for (points, q) in &groups {
                let n = points.len() - 1;
                worst_weight_margin =
                    worst_weight_margin.max(q - (-(n as f64 - 1.0)).exp());
            }
        }
    }

    // (b) the δK/7 marked-point bound on 10^4 random admissible skeletons
    let k = 8.0;
    let delta = 0.25;
    let enorm = NormModel::euclidean(2, 1.0);
    let t = dual_vector(&enorm, &[1.0, 0.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut random_ok = true;
    for _ in 0..10_000 {
        let sk = random_admissible_skeleton(&mut rng, k, delta, 14, 0.3, &enorm, &t);
        let rep = surcharge_checks(&sk, &t, delta, 1.0, &enorm, None).unwrap();
        random_ok &= rep.marked_bound_ok && rep.backtrack_bound_ok;
    }

    // (c) the same bounds plus the weight bound on an enumerated instance
    let field = CouplingField::nearest_neighbour(2, 1.0);
    let strip = build_graph(&field, &[(0, 6), (0, 1)]).unwrap();
    let beta2 = 0.05;
    let scale2 = calibrated_scale(&strip, beta2);
    let norm2 = NormModel::euclidean(2, scale2);
    let t2 = dual_vector(&norm2, &[6.0, 1.0]).unwrap();
    let x = strip.vertex_index(&[0, 0]).unwrap();
    let y = strip.vertex_index(&[6, 1]).unwrap();
    let mut groups: HashMap<Vec<Point>, f64> = HashMap::new();
    for (line, q) in enumerate_lines(&strip, x, y, beta2).unwrap() {
        let pts: Vec<Point> =
            line.verts.iter().map(|&v| strip.vertices[v].clone()).collect();
        let sk = build_skeleton(&pts, k, &norm2).unwrap();
        *groups.entry(sk.points).or_insert(0.0) += q;
    }
    let mut enumerated_ok = true;
    for (points, q) in &groups {
        let sk = Skeleton { points: points.clone(), scale: k };
        let rep = surcharge_checks(&sk, &t2, delta, 1.0, &norm2, Some(*q)).unwrap();
        enumerated_ok &= rep.marked_bound_ok
            && rep.backtrack_bound_ok
            && rep.weight_bound_ok == Some(true);
        let n = sk.steps();
        enumerated_ok &= *q <= (-(n as f64 - 1.0) * k).exp() + 1e-12;
    }

    let ok = worst_group < 1e-10 && worst_weight_margin <= 1e-12 && random_ok && enumerated_ok;
    println!(
        "[{}] criterion 3: grouping defect {worst_group:.3e}, exp-bound margin {worst_weight_margin:.3e}, δK/7 on 10^4 random skeletons: {random_ok}, enumerated instance: {enumerated_ok}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_04_decomposition_regroup() {
    let field = CouplingField::nearest_neighbour(2, 1.0);
    let beta = 0.3f64;
    let norm = NormModel::euclidean(2, -(beta.tanh().ln()));
    let t = dual_vector(&norm, &[1.0, 0.0]).unwrap();

    // exact regrouping on the 2×3 grid, all pairs
    let g = grid_2x3();
    let mut worst = 0.0f64;
    for x in 0..g.vertex_count() {
        for y in 0..g.vertex_count() {
            if x == y {
                continue;
            }
            let rep =
                verify_irreducible_representation(&g, x, y, beta, &t, 1.0, 0.25, &norm)
                    .unwrap();
            worst = worst.max(rep.defect);
        }
    }

    // degenerate mass fraction monotone over strip lengths 3..6
    let mut fractions = Vec::new();
    for len in 3..=6i64 {
        let strip = build_graph(&field, &[(0, len - 1), (0, 1)]).unwrap();
        let x = strip.vertex_index(&[0, 0]).unwrap();
        let y = strip.vertex_index(&[len - 1, 0]).unwrap();
        let rep =
            verify_irreducible_representation(&strip, x, y, beta, &t, 1.0, 0.25, &norm)
                .unwrap();
        worst = worst.max(rep.defect);
        fractions.push(rep.degenerate_mass / rep.lhs);
    }
    let monotone = fractions.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let ok = worst < 1e-12 && monotone;
    println!(
        "[{}] criterion 4: regrouping defect {worst:.3e}, degenerate fractions over L=3..6: {fractions:?} (monotone: {monotone})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_05_ruelle_spectra() {
    // depth-1 reference model: ρ = 0.8, λ₂ = 0.3 to 1e−10
    let op = toys::depth1_model(vec![vec![1], vec![2]]);
    let sd = op.spectral_data(1e-13, 100_000).unwrap();
    let rho_err = (sd.rho - 0.8).abs();
    let lam2_err = (sd.gap * sd.rho - 0.3).abs();

    // power iteration vs dense Perron root on alphabets within 64 symbols,
    // depth within 2
    let mut dense_worst = 0.0f64;
    {
        // 64-symbol depth-1 with a structured positive table
        let n = 64usize;
        let alphabet = Alphabet::new(1, (0..n).map(|z| vec![z as i64 % 5]).collect()).unwrap();
        let op64 = RuelleOperator::from_fn(alphabet, 1, 0.5, |z, ctx| {
            let x = ctx.first().copied().unwrap_or(0);
            -2.0 - 0.05 * (z as f64) - 0.01 * ((x * 7 % 13) as f64)
        })
        .unwrap();
        let rho = op64.rho(1e-13, 200_000).unwrap();
        dense_worst = dense_worst.max((rho - op64.dense_perron_root()).abs());
        let eigs = op64.dense_eigenvalues().unwrap();
        let lead = eigs.iter().map(|e| e.norm()).fold(0.0f64, f64::max);
        dense_worst = dense_worst.max((rho - lead).abs());

        // 6-symbol depth-2
        let alphabet = Alphabet::new(1, (0..6).map(|z| vec![z as i64]).collect()).unwrap();
        let op62 = RuelleOperator::from_fn(alphabet, 2, 0.5, |z, ctx| {
            let a = ctx.first().copied().unwrap_or(0) as f64;
            let b = ctx.get(1).copied().unwrap_or(0) as f64;
            -1.8 - 0.1 * z as f64 - 0.03 * a + 0.02 * b
        })
        .unwrap();
        let rho = op62.rho(1e-13, 200_000).unwrap();
        dense_worst = dense_worst.max((rho - op62.dense_perron_root()).abs());
        let eigs = op62.dense_eigenvalues().unwrap();
        let lead = eigs.iter().map(|e| e.norm()).fold(0.0f64, f64::max);
        dense_worst = dense_worst.max((rho - lead).abs());
    }

    // normalisation and the eigenfunction bounds e^{±β̄}
    let norm_op = op.normalize(&sd).unwrap();
    let ones = vec![1.0; norm_op.n_contexts()];
    let l1 = norm_op.apply(&ones).unwrap();
    let l1_err = l1.iter().map(|&x| (x - 1.0).abs()).fold(0.0f64, f64::max);
    let bb = op.potential().beta_bar(op.n_symbols());
    let h_ok = sd
        .h
        .iter()
        .all(|&h| h >= (-bb).exp() - 1e-9 && h <= bb.exp() + 1e-9);

    let ok = rho_err < 1e-10 && lam2_err < 1e-10 && dense_worst < 1e-10 && l1_err <= 1e-10 && h_ok;
    println!(
        "[{}] criterion 5: ρ err {rho_err:.2e}, λ₂ err {lam2_err:.2e}, dense-oracle gap {dense_worst:.2e}, |L1−1| {l1_err:.2e}, h bounds: {h_ok}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

fn normalized_depth1() -> RuelleOperator {
    let op = toys::depth1_model(vec![vec![0], vec![1]]);
    let sd = op.spectral_data(1e-13, 100_000).unwrap();
    op.normalize(&sd).unwrap()
}

/// max over the window |r − nv| < n^{1−ν} of |Q/Q_gauss − 1|
fn window_rel_err(op: &RuelleOperator, n: usize, nu: f64) -> f64 {
    let g = vec![1.0; op.n_contexts()];
    let model = hessian_at_zero(op, &g, 1e-4).unwrap();
    let q = qn_distribution(op, &g, n, 0).unwrap();
    let v = q.running_mean();
    let radius = (n as f64).powf(1.0 - nu);
    let mut worst = 0.0f64;
    for (r, p) in q.support() {
        let dev = (r[0] as f64 - n as f64 * v[0]).abs();
        if dev < radius {
            let gauss = llt::gaussian_llt(&model, n, &r, &v);
            worst = worst.max((p / gauss - 1.0).abs());
        }
    }
    worst
}

#[test]
fn criterion_06a_local_limit_identities() {
    let binom = toys::binomial_op();
    let depth1 = normalized_depth1();

    // DP = enumeration for n ≤ 6 at 1e−12
    let mut worst_enum = 0.0f64;
    for op in [&binom, &depth1] {
        let g = vec![1.0; op.n_contexts()];
        for n in 1..=6 {
            let dp = qn_distribution(op, &g, n, 0).unwrap();
            for (r, p) in qn_by_enumeration(op, &g, n, 0) {
                worst_enum = worst_enum.max((dp.prob(&r) - p).abs());
            }
        }
    }

    // DP = Fourier inversion at 1e−10
    let mut worst_fourier = 0.0f64;
    for op in [&binom, &depth1] {
        let g = vec![1.0; op.n_contexts()];
        for n in [3usize, 8, 16] {
            let dp = qn_distribution(op, &g, n, 0).unwrap();
            for r in 0..=(n as i64) {
                let rep = llt::fourier_invert(op, &g, n, &[r], 0, n + 2, 0.1, 0.6).unwrap();
                worst_fourier = worst_fourier.max((rep.value - dp.prob(&[r])).abs());
            }
        }
    }

    // binomial closed forms
    let g1 = vec![1.0; binom.n_contexts()];
    let model = hessian_at_zero(&binom, &g1, 1e-4).unwrap();
    let gauss = llt::gaussian_llt(&model, 100, &[50], &[0.5]);
    let exact = {
        let mut v = 0.0f64;
        for i in 1..=50u64 {
            v += ((50 + i) as f64).ln() - (i as f64).ln();
        }
        (v - 100.0 * 2f64.ln()).exp()
    };
    let center_rel = (gauss / exact - 1.0).abs();
    let a_err = (model.a[0][0] - 0.25).abs();
    let xi = llt::tilt_solve(&binom, &g1, 30, &[0.75], 0).unwrap();
    let tilt_err = (xi[0] - 3.0f64.ln()).abs();

    let ok = worst_enum < 1e-12
        && worst_fourier < 1e-10
        && (exact - 0.0795892).abs() < 1e-7
        && center_rel < 0.003
        && a_err < 1e-6
        && tilt_err < 1e-8;
    println!(
        "[{}] criterion 6a: DP−enum {worst_enum:.2e}, DP−Fourier {worst_fourier:.2e}, binomial centre rel {center_rel:.4} (exact {exact:.7}), A−1/4 {a_err:.2e}, tilt−log3 {tilt_err:.2e}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_06b_gaussian_window_rel_err() {
    // Literal reading of the criterion: ν = 0.3, window |r−nv| < n^{0.7};
    // at n = 200 the edge sits at ≈ 5.8 standard deviations where the
    // Gaussian form is off by tens of percent, so the stated 5% cannot hold.
    // The check is implemented as specified and expected red; see
    // criterion_06c for the attainable-window companion.
    let binom = toys::binomial_op();
    let depth1 = normalized_depth1();
    let mut all: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, op) in [("binomial", &binom), ("depth1", &depth1)] {
        let errs: Vec<f64> =
            [50usize, 100, 200].iter().map(|&n| window_rel_err(op, n, 0.3)).collect();
        all.push((name.to_string(), errs));
    }
    let ok = all.iter().all(|(_, errs)| {
        errs[2] <= 0.05 && errs.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    });
    println!(
        "[{}] criterion 6b (ν=0.3 literal): max rel errors over n=50,100,200: {all:?} — requires ≤ 0.05 at n=200 and decreasing",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "unattainable as specified; see the decisions ledger");
}

#[test]
fn criterion_06c_gaussian_window_attainable() {
    // companion at ν = 0.45 (window ≈ n^{0.55}, still within the paper's
    // ν ∈ (0, 1/2)): the Gaussian window check passes and decreases
    let binom = toys::binomial_op();
    let depth1 = normalized_depth1();
    let mut all: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, op) in [("binomial", &binom), ("depth1", &depth1)] {
        let errs: Vec<f64> =
            [50usize, 100, 200].iter().map(|&n| window_rel_err(op, n, 0.45)).collect();
        all.push((name.to_string(), errs));
    }
    let ok = all.iter().all(|(_, errs)| {
        errs[2] <= 0.05 && errs.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    });
    println!(
        "[{}] criterion 6c (ν=0.45 companion): max rel errors over n=50,100,200: {all:?}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_07_off_axis_decay() {
    // δ chosen on the scan grid so the supremum is attained exactly
    let m = 360usize;
    let delta = 2.0 * std::f64::consts::PI * 23.0 / m as f64;
    let alphabet = Alphabet::new(1, vec![vec![1], vec![2]]).unwrap();
    let iid = RuelleOperator::iid(alphabet, &[0.5, 0.5]).unwrap();
    let scan = iid.off_axis_scan(delta, m).unwrap();
    let iid_err = (scan.max_rho - (delta / 2.0).cos()).abs();

    let depth1 = {
        let op = toys::depth1_model(vec![vec![1], vec![2]]);
        let sd = op.spectral_data(1e-13, 100_000).unwrap();
        op.normalize(&sd).unwrap()
    };
    let scan2 = depth1.off_axis_scan(0.3, 128).unwrap();

    let ok = iid_err < 1e-8 && scan2.max_rho < 1.0 && scan2.eta > 0.0;
    println!(
        "[{}] criterion 7: iid scan max − cos(δ/2) = {iid_err:.2e}; depth-1 scan max {:.6} (η = {:.6})",
        if ok { "PASS" } else { "FAIL" },
        scan2.max_rho,
        scan2.eta
    );
    assert!(ok);
}

#[test]
fn criterion_08_wulff_oz_toys() {
    // boundary of e^{s1}+e^{s2} = 2 to 1e−8 sup distance
    let op = toys::diagonal_walk_op(0.5);
    let b = trace_boundary(&op, 0.8, 0.02).unwrap();
    let mut sup_dist = 0.0f64;
    for smp in &b.samples {
        sup_dist = sup_dist.max((smp.s[1] - (2.0 - smp.s[0].exp()).ln()).abs());
        sup_dist = sup_dist.max(smp.residual);
    }
    // convexity: consecutive cross products all of one sign
    let pts = b.points();
    let crosses: Vec<f64> = pts
        .windows(3)
        .map(|w| {
            (w[1][0] - w[0][0]) * (w[2][1] - w[1][1])
                - (w[1][1] - w[0][1]) * (w[2][0] - w[1][0])
        })
        .collect();
    let convex =
        crosses.iter().all(|&c| c > 0.0) || crosses.iter().all(|&c| c < 0.0);

    // curvature at the base point within 1% of 1/√2
    let curv = curvature(&pts, b.spacing).unwrap();
    let mid = curv
        .kappas
        .iter()
        .min_by(|x, y| b.samples[x.0].a.abs().total_cmp(&b.samples[y.0].a.abs()))
        .unwrap();
    let kappa_rel = (mid.1 * 2f64.sqrt() - 1.0).abs();

    // diagonal walk: exponent and prefactor
    let w = 0.4;
    let table = toys::diagonal_walk_table(w, 60);
    let r2 = 2f64.sqrt();
    let xi = inverse_correlation_length(
        &table,
        &[0, 0],
        &[1, 1],
        (10.0 * r2, 50.0 * r2),
        2,
        true,
        false,
    )
    .unwrap();
    let fit = oz_fit(&table, &xi, &[0, 0], &[1, 1], (10.0 * r2, 40.0 * r2)).unwrap();
    let tilted = toys::diagonal_walk_op(w).tilted(&toys::diagonal_walk_dual(w));
    let (a, drift, _) = llt::hessian_matrix(&tilted, 1e-4).unwrap();
    let phi =
        oz_prefactor(&[BoundaryPair { weight: 1.0, chi: 1.0 }], &a, &drift).unwrap();
    let phi_rel = (fit.phi_hat / phi - 1.0).abs();

    // duality direction round trip
    let dir = duality_direction(&tilted).unwrap();
    let diag_err = (dir[0] - 1.0 / r2).abs().max((dir[1] - 1.0 / r2).abs());

    let ok = sup_dist < 1e-8
        && convex
        && kappa_rel < 0.01
        && fit.p_hat > 0.45
        && fit.p_hat < 0.55
        && phi_rel < 0.10
        && diag_err < 1e-5;
    println!(
        "[{}] criterion 8: boundary sup-dist {sup_dist:.2e}, convex {convex}, κ(0) rel err {kappa_rel:.4}, p̂ {:.4}, Φ̂/Φ−1 {phi_rel:.4}, duality err {diag_err:.2e}",
        if ok { "PASS" } else { "FAIL" },
        fit.p_hat
    );
    assert!(ok);
}

#[test]
fn criterion_09_ising_plane_monte_carlo() {
    let start = Instant::now();
    let mut phats = Vec::new();
    for seed in 0..8u64 {
        let p = McParams {
            side: 128,
            beta: 0.35,
            sweeps: 2_000_000,
            seed: 7_000 + seed,
            max_r: 26,
            chains: 1,
            threads: 1,
        };
        let t = monte_carlo_two_point(&p).unwrap();
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for r in 8..=24i64 {
            let (g, _) = t.get(&[0, 0], &[r, 0]).unwrap();
            if g > 0.0 {
                rows.push(vec![1.0, -(r as f64).ln(), -(r as f64)]);
                ys.push(g.ln());
            }
        }
        let c = least_squares(&rows, &ys).unwrap();
        phats.push(c[1]);
    }
    let mean = phats.iter().sum::<f64>() / phats.len() as f64;
    let sd = (phats.iter().map(|p| (p - mean).powi(2)).sum::<f64>()
        / (phats.len() - 1) as f64)
        .sqrt();
    let se = sd / (phats.len() as f64).sqrt();
    let elapsed = start.elapsed();
    // consistency with [0.3, 0.7] at three standard errors
    let ok = mean - 3.0 * se <= 0.7 && mean + 3.0 * se >= 0.3 && elapsed.as_secs() < 600;
    println!(
        "[{}] criterion 9: p̂ = {mean:.4} ± {se:.4} over 8 seeds (3σ window [{:.3}, {:.3}]), {elapsed:?}",
        if ok { "PASS" } else { "FAIL" },
        mean - 3.0 * se,
        mean + 3.0 * se
    );
    assert!(ok);
}

#[test]
fn criterion_10_strict_triangle() {
    // toy: Euclidean norm, boundary is the unit circle, κ̄ = radius = 1
    let circle: Vec<[f64; 2]> = (0..600)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 600.0;
            [th.cos(), th.sin()]
        })
        .collect();
    let c = curvature(&circle, 2.0 * std::f64::consts::PI / 600.0).unwrap();
    let pairs = triangle_pair_grid(6, 1000);
    let toy = strict_triangle_check(&NormModel::euclidean(2, 1.0), c.radius_min, &pairs);

    // Ising-derived norm from the two-patch pipeline
    let cfg = IsingPipelineConfig {
        beta: 0.3,
        alphabet: AlphabetParams { beta: 0.3, ..AlphabetParams::default() },
        ..IsingPipelineConfig::default()
    };
    let report = run_ising_pipeline(&cfg).unwrap();
    let ising = strict_triangle_series(&report.series, report.radius_min, &pairs);

    let ok = toy.min_slack >= -1e-6
        && ising.min_slack >= -1e-6
        && report.curvature.kappa_min > 0.0
        && report.radius_min > 0.0;
    println!(
        "[{}] criterion 10: toy min slack {:.3e} (κ̄ = {:.4}); Ising min slack {:.3e} (patch κ̄ = {:.4}, fitted R̄ = {:.4}, ρ₀ = {:.4})",
        if ok { "PASS" } else { "FAIL" },
        toy.min_slack,
        c.radius_min,
        ising.min_slack,
        report.curvature.kappa_min,
        report.radius_min,
        report.rho0
    );
    assert!(ok);
}

#[test]
fn wulff_root_residuals_within_tolerance() {
    // supporting check for the Wulff invariants: residuals ≤ 1e−8 and the
    // traced diagonal-walk boundary passes through the base point
    let op = toys::diagonal_walk_op(0.5);
    let b = trace_boundary(&op, 0.5, 0.05).unwrap();
    assert!(b.max_residual() <= 1e-8);
    let r0 = rho_at(&op, &[0.0, 0.0]).unwrap();
    assert!((r0 - 1.0).abs() < 1e-12);
}

#[test]
fn ising_alphabet_diagnostics() {
    // supporting check: sandwich constant, Cauchy difference and the
    // Hölder tail fit of the Ising alphabet
    let params = AlphabetParams::default();
    let norm0 = NormModel::euclidean(2, 0.66);
    let t0 = dual_vector(&norm0, &[1.0, 0.0]).unwrap();
    let alpha = ozlab::alphabet_build::build_alphabet(&params, &t0, &norm0).unwrap();
    assert!(!alpha.paths.is_empty());
    assert!(alpha.c2.is_finite() && alpha.c2 >= 1.0 && alpha.c2 < 10.0);
    assert!(alpha.cauchy_diff < 0.02);
    if let Some((c, theta)) = alpha.theta_fit {
        assert!(theta > 0.0 && theta < 1.0, "theta {theta}");
        assert!(c.is_finite());
    }
    // conditional/free ratios inside [1/c2, c2] by construction: spot check
    // that the tilted operator reproduces the free weights at ∅ context
    let op = &alpha.operator;
    for z in 0..op.n_symbols().min(6) {
        let psi0 = op.psi[z * op.n_contexts()];
        let expect = alpha.q_free[z].ln() + dot_i(&t0.t, &alpha.displacements[z]);
        assert!((psi0 - expect).abs() < 1e-12);
    }
}
