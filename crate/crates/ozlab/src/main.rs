//! ozlab: numerical laboratory for Ornstein-Zernike analysis of
//! high-temperature Ising correlations.

use clap::{Parser, Subcommand};
use ozlab::alphabet_build::AlphabetParams;
use ozlab::pipeline::{run_ising_pipeline, IsingPipelineConfig};
use ozlab::{ozfit, toys, wulff};
use oz_core::gibbs::{exact_two_point, CorrelationTable, Method};
use oz_core::lattice::build_graph;
use oz_core::line::{bk_check, enumerate_lines, representation_sum};
use oz_core::norm::{dual_vector, NormModel};
use oz_core::skeleton::{build_skeleton, surcharge_checks};
use oz_core::strip::strip_two_point;
use oz_core::wolff::{monte_carlo_two_point, McParams};
use oz_core::xi::inverse_correlation_length;
use oz_core::ModelConfig;
use oz_ruelle::llt;
use oz_ruelle::{Alphabet, Potential, RuelleOperator};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "ozlab", about = "Ornstein-Zernike laboratory for Ising two-point functions")]
struct Cli {
    /// model config file (key = value lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory for csv/json artifacts
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// worker threads for Monte Carlo chains
    #[arg(long, global = true, default_value_t = 4)]
    threads: usize,
    /// base random seed
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact spin-sum correlations on the config box (corr.csv)
    ExactCorr,
    /// Transfer-matrix strip correlations (corr.csv)
    Strip {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        length: usize,
    },
    /// Wolff cluster Monte Carlo on the torus (corr.csv)
    Mc {
        #[arg(long, default_value_t = 200_000)]
        sweeps: u64,
        #[arg(long, default_value_t = 64)]
        side: usize,
        #[arg(long, default_value_t = 24)]
        max_r: usize,
        #[arg(long, default_value_t = 8)]
        chains: usize,
        /// β < β_c asserted by the caller (0.44069… for 2d n.n.)
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Verify the random-line representation and BK inequality (json)
    VerifyRlr {
        /// vertex pair as x0,y0:x1,y1
        #[arg(long)]
        pair: String,
    },
    /// Skeletonise every line between a pair and report surcharge bounds (csv)
    Skeleton {
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = 8.0)]
        k: f64,
        #[arg(long, default_value = "1,0")]
        t_direction: String,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
    },
    /// Irreducible decomposition diagnostics for a pair (json)
    Decompose {
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
    },
    /// Spectral data of an alphabet file (json)
    RuelleSpec {
        #[arg(long)]
        alphabet: PathBuf,
        #[arg(long, default_value_t = 0)]
        depth: usize,
        /// tilt vector ξ, comma separated
        #[arg(long)]
        tilt: Option<String>,
        /// off-axis scan threshold δ
        #[arg(long)]
        tau_scan: Option<f64>,
    },
    /// DP vs Gaussian local limit table (llt.csv)
    LocalLimit {
        #[arg(long)]
        alphabet: PathBuf,
        #[arg(long, default_value_t = 0)]
        depth: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        nu: f64,
    },
    /// Trace a Wulff boundary patch (wulff.csv)
    Wulff {
        /// built-in toy: "diagonal" (w=0.5) or "diagonal04"
        #[arg(long)]
        toy: Option<String>,
        #[arg(long)]
        alphabet: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        depth: usize,
        #[arg(long, default_value_t = 0.6)]
        half_extent: f64,
        #[arg(long, default_value_t = 0.02)]
        spacing: f64,
    },
    /// OZ exponent/prefactor fit of a correlation table (ozfit.json)
    OzFit {
        /// read displacements from a corr.csv produced by this tool
        #[arg(long)]
        corr: Option<PathBuf>,
        /// or use the closed-form diagonal toy walk
        #[arg(long)]
        toy: Option<String>,
        #[arg(long, default_value = "1,0")]
        step: String,
        #[arg(long, default_value = "8,24")]
        window: String,
    },
    /// Full Ising pipeline: strip ξ, alphabet, Wulff patch, triangle check
    Pipeline,
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            std::process::exit(2);
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            std::process::exit(3);
        }
    }
}

fn validation<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

fn core_err(e: oz_core::CoreError) -> CliError {
    match e {
        oz_core::CoreError::Numerical(_) => CliError::Numerical(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    }
}

fn lab_err(e: ozlab::LabError) -> CliError {
    match e {
        ozlab::LabError::Numerical(_) => CliError::Numerical(e.to_string()),
        ozlab::LabError::Ruelle(oz_ruelle::RuelleError::NoConvergence { .. }) => {
            CliError::Numerical(e.to_string())
        }
        _ => CliError::Validation(e.to_string()),
    }
}

fn need_config(cli: &Cli) -> Result<ModelConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("--config is required here".into()))?;
    ModelConfig::parse_file(path).map_err(validation)
}

fn parse_pair(s: &str, d: usize) -> Result<(Vec<i64>, Vec<i64>), CliError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::Validation("pair must be x0,y0:x1,y1".into()))?;
    let parse = |t: &str| -> Result<Vec<i64>, CliError> {
        let v: Vec<i64> = t
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Validation("bad pair coordinates".into()))?;
        if v.len() != d {
            return Err(CliError::Validation("pair dimension mismatch".into()));
        }
        Ok(v)
    };
    Ok((parse(a)?, parse(b)?))
}

fn parse_vec(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Validation("bad vector".into()))
}

fn write_corr(out: &Path, table: &CorrelationTable) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(validation)?;
    let path = out.join("corr.csv");
    let mut buf = Vec::new();
    table.write_csv(&mut buf).map_err(validation)?;
    std::fs::write(&path, buf).map_err(validation)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(validation)?;
    let path = out.join(name);
    let text = serde_json::to_string_pretty(value).map_err(validation)?;
    std::fs::write(&path, text).map_err(validation)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Alphabet files: one line per symbol, `id : V components : ψ entries`,
/// where ψ has either one entry (context independent) or one per context.
fn load_alphabet(path: &Path, depth: usize) -> Result<RuelleOperator, CliError> {
    let text = std::fs::read_to_string(path).map_err(validation)?;
    let mut vs: Vec<Vec<i64>> = Vec::new();
    let mut entries: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Validation(format!(
                "alphabet line {}: expected `id : V : psi`",
                lineno + 1
            )));
        }
        let id: usize = parts[0]
            .trim()
            .parse()
            .map_err(|_| CliError::Validation("bad symbol id".into()))?;
        if id != vs.len() {
            return Err(CliError::Validation("symbol ids must be sequential from 0".into()));
        }
        let v: Vec<i64> = parts[1]
            .split_whitespace()
            .map(|c| c.parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Validation("bad V components".into()))?;
        let psi: Vec<f64> = parts[2]
            .split_whitespace()
            .map(|c| c.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Validation("bad psi entries".into()))?;
        vs.push(v);
        entries.push(psi);
    }
    if vs.is_empty() {
        return Err(CliError::Validation("empty alphabet file".into()));
    }
    let n = vs.len();
    let contexts = oz_ruelle::ContextSet::new(n, depth);
    let nc = contexts.len();
    let mut table = vec![0.0f64; n * nc];
    for (z, psi) in entries.iter().enumerate() {
        if psi.len() != 1 && psi.len() != nc {
            return Err(CliError::Validation(format!(
                "symbol {z}: need 1 or {nc} psi entries, got {}",
                psi.len()
            )));
        }
        for c in 0..nc {
            table[z * nc + c] = if psi.len() == 1 { psi[0] } else { psi[c] };
        }
    }
    let alphabet = Alphabet::new(vs[0].len(), vs).map_err(validation)?;
    let pot = Potential { depth, theta: 0.5, table };
    RuelleOperator::new(alphabet, &pot).map_err(validation)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::ExactCorr => {
            let cfg = need_config(&cli)?;
            let field = cfg.coupling_field().map_err(validation)?;
            let graph = build_graph(&field, &cfg.bounds).map_err(validation)?;
            let table = exact_two_point(&graph, cfg.beta).map_err(core_err)?;
            write_corr(&cli.out, &table)
        }
        Cmd::Strip { width, length } => {
            let cfg = need_config(&cli)?;
            let field = cfg.coupling_field().map_err(validation)?;
            let table =
                strip_two_point(*width, *length, cfg.beta, &field).map_err(core_err)?;
            write_corr(&cli.out, &table)
        }
        Cmd::Mc { sweeps, side, max_r, chains, beta } => {
            let beta = match beta {
                Some(b) => *b,
                None => need_config(&cli)?.beta,
            };
            let params = McParams {
                side: *side,
                beta,
                sweeps: *sweeps,
                seed: cli.seed,
                max_r: *max_r,
                chains: *chains,
                threads: cli.threads,
            };
            let table = monte_carlo_two_point(&params).map_err(core_err)?;
            write_corr(&cli.out, &table)
        }
        Cmd::VerifyRlr { pair } => {
            let cfg = need_config(&cli)?;
            let field = cfg.coupling_field().map_err(validation)?;
            let graph = build_graph(&field, &cfg.bounds).map_err(validation)?;
            let (a, b) = parse_pair(pair, cfg.dimension)?;
            let x = graph
                .vertex_index(&a)
                .ok_or_else(|| CliError::Validation("pair point outside box".into()))?;
            let y = graph
                .vertex_index(&b)
                .ok_or_else(|| CliError::Validation("pair point outside box".into()))?;
            let exact = oz_core::gibbs::exact_pair(&graph, x, y, cfg.beta).map_err(core_err)?;
            let rsum = representation_sum(&graph, x, y, cfg.beta).map_err(core_err)?;
            let mut max_violation = 0.0f64;
            for through in 0..graph.vertex_count() {
                if through == x || through == y {
                    continue;
                }
                let (lhs, rhs, _) = bk_check(&graph, x, y, through, cfg.beta).map_err(core_err)?;
                max_violation = max_violation.max(lhs - rhs);
            }
            #[derive(Serialize)]
            struct Out {
                exact: f64,
                representation_sum: f64,
                max_bk_violation: f64,
            }
            write_json(
                &cli.out,
                "verify_rlr.json",
                &Out { exact, representation_sum: rsum, max_bk_violation: max_violation },
            )
        }
        Cmd::Skeleton { pair, k, t_direction, delta } => {
            let cfg = need_config(&cli)?;
            let field = cfg.coupling_field().map_err(validation)?;
            let graph = build_graph(&field, &cfg.bounds).map_err(validation)?;
            let (a, b) = parse_pair(pair, cfg.dimension)?;
            let x = graph
                .vertex_index(&a)
                .ok_or_else(|| CliError::Validation("pair point outside box".into()))?;
            let y = graph
                .vertex_index(&b)
                .ok_or_else(|| CliError::Validation("pair point outside box".into()))?;
            // calibrated Euclidean norm: g ≤ e^{−ξ} on the instance
            let table = exact_two_point(&graph, cfg.beta).map_err(core_err)?;
            let mut scale = f64::INFINITY;
            for ((p, q), (g, _)) in table.iter() {
                if p != q && *g > 0.0 {
                    let dist: f64 =
                        p.iter().zip(q).map(|(&u, &v)| ((u - v) * (u - v)) as f64).sum::<f64>().sqrt();
                    scale = scale.min(-g.ln() / dist);
                }
            }
            let norm = NormModel::euclidean(cfg.dimension, scale);
            let tdir = parse_vec(t_direction)?;
            let t = dual_vector(&norm, &tdir).map_err(core_err)?;
            let lines = enumerate_lines(&graph, x, y, cfg.beta).map_err(core_err)?;
            std::fs::create_dir_all(&cli.out).map_err(validation)?;
            let path = cli.out.join("skeleton.csv");
            let mut rows = String::from("n,n_back,n_mark,surcharge,back_ok,mark_ok,weight_ok\n");
            for (line, q) in &lines {
                let pts: Vec<Vec<i64>> =
                    line.verts.iter().map(|&v| graph.vertices[v].clone()).collect();
                let sk = build_skeleton(&pts, *k, &norm).map_err(core_err)?;
                let rep = surcharge_checks(&sk, &t, *delta, field.range(), &norm, Some(*q))
                    .map_err(core_err)?;
                rows.push_str(&format!(
                    "{},{},{},{:.16e},{},{},{}\n",
                    sk.steps(),
                    rep.n_back,
                    rep.n_mark,
                    rep.surcharge,
                    rep.backtrack_bound_ok,
                    rep.marked_bound_ok,
                    rep.weight_bound_ok.unwrap_or(false),
                ));
            }
            std::fs::write(&path, rows).map_err(validation)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Cmd::Decompose { pair, k, delta } => {
            let cfg = need_config(&cli)?;
            let field = cfg.coupling_field().map_err(validation)?;
            let graph = build_graph(&field, &cfg.bounds).map_err(validation)?;
            let (a, b) = parse_pair(pair, cfg.dimension)?;
            let x = graph
                .vertex_index(&a)
                .ok_or_else(|| CliError::Validation("pair point outside box".into()))?;
            let y = graph
                .vertex_index(&b)
                .ok_or_else(|| CliError::Validation("pair point outside box".into()))?;
            let scale = -(cfg.beta.tanh().ln());
            let norm = NormModel::euclidean(cfg.dimension, scale);
            let disp = graph.displacement(x, y);
            let dirf: Vec<f64> = disp.iter().map(|&c| c as f64).collect();
            let t = dual_vector(&norm, &dirf).map_err(core_err)?;
            let rep = oz_core::decomp::verify_irreducible_representation(
                &graph, x, y, cfg.beta, &t, *k, *delta, &norm,
            )
            .map_err(core_err)?;
            #[derive(Serialize)]
            struct Out {
                lhs: f64,
                rhs: f64,
                degenerate_mass: f64,
                defect: f64,
                lines: usize,
                degenerate_lines: usize,
                forward_guard_ok: bool,
                gamma_displacements: Vec<(Vec<i64>, usize)>,
            }
            write_json(
                &cli.out,
                "decompose.json",
                &Out {
                    lhs: rep.lhs,
                    rhs: rep.rhs,
                    degenerate_mass: rep.degenerate_mass,
                    defect: rep.defect,
                    lines: rep.lines,
                    degenerate_lines: rep.degenerate_lines,
                    forward_guard_ok: rep.forward_guard_ok,
                    gamma_displacements: rep.gamma_displacements.into_iter().collect(),
                },
            )
        }
        Cmd::RuelleSpec { alphabet, depth, tilt, tau_scan } => {
            let mut op = load_alphabet(alphabet, *depth)?;
            if let Some(t) = tilt {
                op = op.tilted(&parse_vec(t)?);
            }
            let sd = op.spectral_data(1e-12, 500_000).map_err(numerical)?;
            let off_axis_max = match tau_scan {
                Some(d) => Some(
                    op.normalize(&sd)
                        .map_err(numerical)?
                        .off_axis_scan(*d, 128)
                        .map_err(numerical)?
                        .max_rho,
                ),
                None => None,
            };
            #[derive(Serialize)]
            struct Out {
                rho: f64,
                gap: f64,
                residual: f64,
                h_min: f64,
                h_max: f64,
                off_axis_max: Option<f64>,
            }
            let h_min = sd.h.iter().cloned().fold(f64::INFINITY, f64::min);
            let h_max = sd.h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            write_json(
                &cli.out,
                "ruelle_spec.json",
                &Out { rho: sd.rho, gap: sd.gap, residual: sd.residual, h_min, h_max, off_axis_max },
            )
        }
        Cmd::LocalLimit { alphabet, depth, n, nu } => {
            let op = load_alphabet(alphabet, *depth)?;
            let g = vec![1.0; op.n_contexts()];
            let q = llt::qn_distribution(&op, &g, *n, 0).map_err(numerical)?;
            let model = llt::hessian_at_zero(&op, &g, 1e-4).map_err(numerical)?;
            let v = q.running_mean();
            let d = op.alphabet.dimension;
            std::fs::create_dir_all(&cli.out).map_err(validation)?;
            let path = cli.out.join("llt.csv");
            let header: Vec<String> = (1..=d).map(|i| format!("r{i}")).collect();
            let mut rows = format!("{},q_exact,q_gauss,rel_err,in_window\n", header.join(","));
            let radius = (*n as f64).powf(1.0 - nu);
            for (r, p) in q.support() {
                let gauss = llt::gaussian_llt(&model, *n, &r, &v);
                let rel = if gauss != 0.0 { p / gauss - 1.0 } else { f64::NAN };
                let dev: f64 = r
                    .iter()
                    .zip(&v)
                    .map(|(&ri, &vi)| (ri as f64 - *n as f64 * vi).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let cols: Vec<String> = r.iter().map(|c| c.to_string()).collect();
                rows.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{}\n",
                    cols.join(","),
                    p,
                    gauss,
                    rel,
                    dev < radius
                ));
            }
            std::fs::write(&path, rows).map_err(validation)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Cmd::Wulff { toy, alphabet, depth, half_extent, spacing } => {
            let op = match (toy, alphabet) {
                (Some(name), None) => match name.as_str() {
                    "diagonal" => toys::diagonal_walk_op(0.5),
                    "diagonal04" => {
                        let w = 0.4;
                        toys::diagonal_walk_op(w).tilted(&toys::diagonal_walk_dual(w))
                    }
                    other => {
                        return Err(CliError::Validation(format!("unknown toy `{other}`")))
                    }
                },
                (None, Some(path)) => load_alphabet(path, *depth)?,
                _ => {
                    return Err(CliError::Validation(
                        "need exactly one of --toy / --alphabet".into(),
                    ))
                }
            };
            let b = wulff::trace_boundary(&op, *half_extent, *spacing).map_err(lab_err)?;
            let c = wulff::curvature(&b.points(), b.spacing).map_err(lab_err)?;
            std::fs::create_dir_all(&cli.out).map_err(validation)?;
            let path = cli.out.join("wulff.csv");
            let mut rows = String::from("angle,s1,s2,kappa,residual\n");
            let kmap: std::collections::HashMap<usize, f64> = c.kappas.iter().copied().collect();
            for (i, smp) in b.samples.iter().enumerate() {
                let angle = smp.s[1].atan2(smp.s[0]);
                rows.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    angle,
                    smp.s[0],
                    smp.s[1],
                    kmap.get(&i).copied().unwrap_or(f64::NAN),
                    smp.residual
                ));
            }
            std::fs::write(&path, rows).map_err(validation)?;
            println!("wrote {} (kappa_min {:.6}, radius_min {:.6})", path.display(), c.kappa_min, c.radius_min);
            Ok(())
        }
        Cmd::OzFit { corr, toy, step, window } => {
            let table = match (corr, toy) {
                (Some(path), None) => read_corr(path)?,
                (None, Some(name)) => match name.as_str() {
                    "diagonal" => toys::diagonal_walk_table(0.4, 60),
                    other => return Err(CliError::Validation(format!("unknown toy `{other}`"))),
                },
                _ => {
                    return Err(CliError::Validation(
                        "need exactly one of --corr / --toy".into(),
                    ))
                }
            };
            let stepv: Vec<i64> = step
                .split(',')
                .map(|c| c.trim().parse::<i64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Validation("bad step".into()))?;
            let w = parse_vec(window)?;
            if w.len() != 2 {
                return Err(CliError::Validation("window must be lo,hi".into()));
            }
            let d = stepv.len();
            let origin = vec![0i64; d];
            let xi = inverse_correlation_length(
                &table,
                &origin,
                &stepv,
                (w[0], w[1]),
                d,
                true,
                false,
            )
            .map_err(core_err)?;
            let fit = ozfit::oz_fit(&table, &xi, &origin, &stepv, (w[0], w[1]))
                .map_err(lab_err)?;
            #[derive(Serialize)]
            struct Out {
                xi: f64,
                p_hat: f64,
                phi_hat: f64,
                window: (f64, f64),
                residual: f64,
            }
            write_json(
                &cli.out,
                "ozfit.json",
                &Out {
                    xi: fit.xi,
                    p_hat: fit.p_hat,
                    phi_hat: fit.phi_hat,
                    window: fit.window,
                    residual: fit.residual,
                },
            )
        }
        Cmd::Pipeline => {
            let cfg = need_config(&cli)?;
            let pcfg = IsingPipelineConfig {
                beta: cfg.beta,
                alphabet: AlphabetParams { beta: cfg.beta, ..AlphabetParams::default() },
                ..IsingPipelineConfig::default()
            };
            let report = run_ising_pipeline(&pcfg).map_err(lab_err)?;
            // wulff.csv for the traced patch (absolute t-plane points)
            std::fs::create_dir_all(&cli.out).map_err(validation)?;
            let path = cli.out.join("wulff.csv");
            let mut rows = String::from("angle,s1,s2,kappa,residual\n");
            let kmap: std::collections::HashMap<usize, f64> =
                report.curvature.kappas.iter().copied().collect();
            for (i, smp) in report.boundary.samples.iter().enumerate() {
                let p = [report.t0[0] + smp.s[0], report.t0[1] + smp.s[1]];
                rows.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    p[1].atan2(p[0]),
                    p[0],
                    p[1],
                    kmap.get(&i).copied().unwrap_or(f64::NAN),
                    smp.residual
                ));
            }
            std::fs::write(&path, rows).map_err(validation)?;
            println!("wrote {}", path.display());
            #[derive(Serialize)]
            struct Out {
                xi_axis: f64,
                t0: Vec<f64>,
                n_symbols: usize,
                c2: f64,
                cauchy_diff: f64,
                dropped_weight: f64,
                theta_fit: Option<(f64, f64)>,
                rho0: f64,
                kappa_min: f64,
                kappa_max: f64,
                radius_min: f64,
                fit_rms: f64,
                min_triangle_slack: f64,
                duality_direction: Vec<f64>,
                phi: f64,
            }
            write_json(
                &cli.out,
                "pipeline.json",
                &Out {
                    xi_axis: report.xi_axis,
                    t0: report.t0.clone(),
                    n_symbols: report.alphabet.paths.len(),
                    c2: report.alphabet.c2,
                    cauchy_diff: report.alphabet.cauchy_diff,
                    dropped_weight: report.alphabet.dropped_weight,
                    theta_fit: report.alphabet.theta_fit,
                    rho0: report.rho0,
                    kappa_min: report.curvature.kappa_min,
                    kappa_max: report.curvature.kappa_max,
                    radius_min: report.radius_min,
                    fit_rms: report.fit_rms,
                    min_triangle_slack: report.triangle.min_slack,
                    duality_direction: report.duality_direction.clone(),
                    phi: report.phi,
                },
            )
        }
    }
}

/// Read a corr.csv back into a table (displacement rows from the origin).
fn read_corr(path: &Path) -> Result<CorrelationTable, CliError> {
    let text = std::fs::read_to_string(path).map_err(validation)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Validation("empty corr file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let d = cols.iter().filter(|c| c.starts_with('x')).count();
    if d == 0 {
        return Err(CliError::Validation("corr header must carry x1..xd".into()));
    }
    let mut table = CorrelationTable::new(0.0, Method::ToyModel);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() < d + 2 {
            return Err(CliError::Validation("short corr row".into()));
        }
        let x: Vec<i64> = parts[..d]
            .iter()
            .map(|c| c.trim().parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Validation("bad displacement".into()))?;
        let g: f64 = parts[d]
            .trim()
            .parse()
            .map_err(|_| CliError::Validation("bad g value".into()))?;
        let se: f64 = parts[d + 1]
            .trim()
            .parse()
            .map_err(|_| CliError::Validation("bad stderr".into()))?;
        table.insert(&vec![0i64; d], &x, g, se);
    }
    Ok(table)
}
