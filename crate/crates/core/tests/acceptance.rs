//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed even when an
//! earlier criterion fails; the process exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gflbs::dataio::{to_observation, write_results};
use gflbs::eval::{confusion, f_score, ConfusionCounts};
use gflbs::graphflow::{max_flow, tv_prox, FlowNetwork};
use gflbs::matrixkit::{frobenius_norm, soft_threshold, soft_threshold_matrix, DenseMatrix};
use gflbs::solver::{extract_mask, fista_lasso, lasso_objective, solve_uml_observed};
use gflbs::synth::{generate, SynthBlock, SynthData, SynthSpec};
use gflbs::{
    build_neighborhood, prox_gfl, prox_nuclear, solve_sml, solve_uml, DecompositionResult,
    EdgeWeights, GflParams, NeighborGraph, ObservationMatrix, SmlProblem, SolverConfig,
};

use common::{
    brute_force_min_cut, chain_tv_oracle, gfl_dual_oracle, lasso_cd_oracle, lasso_value,
    rpca_oracle, singular_subspaces, spectral_norm_eig,
};

/// Mask floor for the supervised run. The equality `D2 = D1 S + F2` forces
/// the sensor noise outside span(D1) into `F2`, so exact zeros cannot occur
/// there. Off-block magnitudes stay below 0.05 and on-block magnitudes above
/// 0.22 for block amplitude 0.25; 0.1 sits between them.
const SML_MASK_EPS: f64 = 0.1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn single_threaded<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

// ---------------------------------------------------------------------------
// Random instances shared by criteria 1, 2 and 11.

struct GflInstance {
    graph: NeighborGraph,
    m: Vec<f64>,
    w: EdgeWeights,
    lam1: f64,
    lam2: f64,
}

fn gfl_instances(count: usize, seed: u64) -> Vec<GflInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let width = rng.random_range(1..=5);
            let height = rng.random_range(1..=5);
            let graph = build_neighborhood(width, height).unwrap();
            let m = (0..width * height)
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect();
            let w = EdgeWeights(
                (0..graph.edge_count())
                    .map(|_| rng.random_range(0.0..=1.0))
                    .collect(),
            );
            GflInstance {
                graph,
                m,
                w,
                lam1: rng.random_range(0.0..=0.5),
                lam2: rng.random_range(0.0..=0.5),
            }
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_gap = 0.0f64;
    for inst in gfl_instances(200, 101) {
        let params = GflParams::new(inst.lam1, inst.lam2).unwrap();
        let ours = prox_gfl(&inst.m, &inst.graph, &inst.w, params).unwrap();
        let (oracle, gap) = gfl_dual_oracle(
            &inst.m,
            inst.graph.edges(),
            inst.w.as_slice(),
            inst.lam1,
            inst.lam2,
            1e-14,
            2_000_000,
        );
        worst = worst.max(max_abs_diff(&ours, &oracle));
        worst_gap = worst_gap.max(gap);
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-5 && within(elapsed, 60),
        format!(
            "200 instances, max |prox_gfl - dual oracle| = {worst:.2e} (oracle gap <= {worst_gap:.1e}), {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for inst in gfl_instances(100, 202) {
        let params = GflParams::new(inst.lam1, inst.lam2).unwrap();
        let ours = prox_gfl(&inst.m, &inst.graph, &inst.w, params).unwrap();
        let tv = tv_prox(&inst.m, inst.graph.edges(), inst.w.as_slice(), inst.lam2).unwrap();
        let composed = soft_threshold(&tv, inst.lam1).unwrap();
        worst = worst.max(max_abs_diff(&ours, &composed));
    }
    outcome(
        worst <= 1e-8,
        format!("100 instances, max |prox_gfl - soft_threshold(tv_prox)| = {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=200);
        let m: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let w: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.0..=1.0)).collect();
        let lam2 = rng.random_range(0.0..=2.0);
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let ours = tv_prox(&m, &edges, &w, lam2).unwrap();
        let caps: Vec<f64> = w.iter().map(|wi| lam2 * wi).collect();
        let oracle = chain_tv_oracle(&m, &caps);
        worst = worst.max(max_abs_diff(&ours, &oracle));
    }
    outcome(
        worst <= 1e-8,
        format!("100 chains (n <= 200), max |tv_prox - DP oracle| = {worst:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    let mut cut_mismatch = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=14);
        let mut net = FlowNetwork::new(n);
        let mut source = vec![0.0; n];
        let mut sink = vec![0.0; n];
        for i in 0..n {
            if rng.random_bool(0.6) {
                source[i] = rng.random_range(0.0..=1.0);
            }
            if rng.random_bool(0.6) {
                sink[i] = rng.random_range(0.0..=1.0);
            }
            net.set_terminals(i, source[i], sink[i]).unwrap();
        }
        let mut arcs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(0.35) {
                    let fwd = rng.random_range(0.0..=1.0);
                    let bwd = if rng.random_bool(0.5) {
                        rng.random_range(0.0..=1.0)
                    } else {
                        0.0
                    };
                    net.add_arc(a, b, fwd, bwd).unwrap();
                    arcs.push((a, b, fwd, bwd));
                }
            }
        }
        let cut = max_flow(&net);
        let exact = brute_force_min_cut(&source, &sink, &arcs);
        worst = worst.max((cut.flow_value - exact).abs());
        cut_mismatch = cut_mismatch.max((net.cut_capacity(&cut.source_side) - exact).abs());
    }
    outcome(
        worst <= 1e-9 && cut_mismatch <= 1e-9,
        format!(
            "100 networks (<= 14 nodes), max |flow - exhaustive min cut| = {worst:.2e}, returned cut off by {cut_mismatch:.2e}"
        ),
    )
}

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice())
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let rows = rng.random_range(1..=20);
        let cols = rng.random_range(1..=20);
        let m = DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0));
        let top = to_nalgebra(&m).singular_values().max();
        let tau = rng.random_range(0.0..=top);
        let b = prox_nuclear(&m, tau).unwrap();

        // (m - B) / tau must be a subgradient of the nuclear norm at B.
        let bn = to_nalgebra(&b);
        let (u1, v1) = singular_subspaces(&bn, 1e-6);
        let g = (to_nalgebra(&m) - &bn) / tau;
        let w = &g - &u1 * v1.transpose();
        let violation = spectral_norm_eig(&(u1.transpose() * &w))
            .max(spectral_norm_eig(&(&w * &v1)))
            .max(spectral_norm_eig(&w) - 1.0);
        worst = worst.max(violation);
    }

    let mut exact = true;
    for trial in 0..20 {
        let n = 1 + trial % 7;
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect();
        let tau = rng.random_range(0.0..=1.5);
        let b = prox_nuclear(&DenseMatrix::from_diag(&d), tau).unwrap();
        let expect: Vec<f64> = d
            .iter()
            .map(|&x| x.signum() * (x.abs() - tau).max(0.0))
            .collect();
        exact &= b == DenseMatrix::from_diag(&expect);
    }
    outcome(
        worst <= 1e-6 && exact,
        format!(
            "50 random matrices, worst subgradient violation {worst:.2e}; diagonal closed form {}",
            if exact { "exact" } else { "MISMATCH" }
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let iters = SolverConfig::default().fista_iters;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a = DenseMatrix::from_fn(30, 10, |_, _| rng.random_range(-1.0..=1.0));
        let m: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let tau = rng.random_range(0.01..=1.0);
        let s = fista_lasso(&a, &m, tau, iters).unwrap();
        let ours = lasso_objective(&a, &m, tau, &s);
        let an = to_nalgebra(&a);
        let oracle = lasso_value(&an, &m, tau, &lasso_cd_oracle(&an, &m, tau));
        worst = worst.max((ours - oracle).abs());
    }
    outcome(
        worst <= 1e-6,
        format!("50 problems 30x10, {iters} iterations, max |objective - CD oracle objective| = {worst:.2e}"),
    )
}

// ---------------------------------------------------------------------------
// Synthetic end-to-end problems.

fn blocks(frames: [usize; 3]) -> Vec<SynthBlock> {
    let spots = [(4, 4), (18, 10), (10, 20)];
    frames
        .iter()
        .zip(spots)
        .map(|(&frame, (x, y))| SynthBlock {
            frame,
            x,
            y,
            width: 8,
            height: 8,
            amplitude: 0.25,
        })
        .collect()
}

fn uml_spec() -> SynthSpec {
    SynthSpec {
        width: 32,
        height: 32,
        n_frames: 20,
        background_rank: 2,
        blocks: blocks([3, 9, 15]),
        noise_std: 0.005,
        seed: 20_240_615,
        training_frames: vec![],
    }
}

/// Even frames are the pure background dictionary, odd frames are mixed.
fn sml_spec() -> SynthSpec {
    SynthSpec {
        blocks: blocks([5, 11, 17]),
        training_frames: (0..20).step_by(2).collect(),
        ..uml_spec()
    }
}

fn score(
    data: &SynthData,
    names: &[String],
    foreground: &DenseMatrix,
    eps: f64,
) -> ConfusionCounts {
    let mut total = ConfusionCounts::default();
    for (j, name) in names.iter().enumerate() {
        let mask = extract_mask(foreground.col(j), eps).unwrap();
        total += confusion(&mask, data.ground_truth.get(name).unwrap()).unwrap();
    }
    total
}

struct UmlRun {
    data: SynthData,
    result: DecompositionResult,
    elapsed: Duration,
}

fn run_uml() -> UmlRun {
    let data = generate(&uml_spec()).unwrap();
    assert_eq!(data.clamped, 0, "synthetic data must not clip");
    let obs = to_observation(&data.sequence).unwrap();
    let start = Instant::now();
    let result = single_threaded(|| solve_uml(&obs, &SolverConfig::default())).unwrap();
    UmlRun {
        data,
        result,
        elapsed: start.elapsed(),
    }
}

struct SmlRun {
    data: SynthData,
    mixed_names: Vec<String>,
    result: DecompositionResult,
    elapsed: Duration,
}

fn run_sml() -> SmlRun {
    let data = generate(&sml_spec()).unwrap();
    assert_eq!(data.clamped, 0, "synthetic data must not clip");
    let train = data.training_frames.clone();
    let mixed: Vec<usize> = (0..data.sequence.len())
        .filter(|t| !train.contains(t))
        .collect();
    let d1 = to_observation(&data.sequence.select(&train)).unwrap();
    let mixed_seq = data.sequence.select(&mixed);
    let d2 = to_observation(&mixed_seq).unwrap();
    let problem = SmlProblem::new(d1, d2).unwrap();
    let start = Instant::now();
    let result = single_threaded(|| solve_sml(&problem, &SolverConfig::default())).unwrap();
    SmlRun {
        mixed_names: mixed_seq.source_names,
        data,
        result,
        elapsed: start.elapsed(),
    }
}

fn criterion_7(run: &UmlRun) -> Outcome {
    let counts = score(
        &run.data,
        &run.data.sequence.source_names,
        &run.result.foreground,
        0.0,
    );
    let f = f_score(&counts);
    let rel = frobenius_norm(
        &run.result
            .background
            .sub(&run.data.true_background)
            .unwrap(),
    ) / frobenius_norm(&run.data.true_background);
    let iters = run.result.iterations();
    outcome(
        run.result.converged && iters <= 60 && f >= 0.95 && rel <= 2e-2 && within(run.elapsed, 120),
        format!(
            "converged={} in {iters} iterations, F={f:.4}, |B-B*|/|B*|={rel:.3e}, {:.1}s single-threaded",
            run.result.converged,
            run.elapsed.as_secs_f64()
        ),
    )
}

fn criterion_8(run: &SmlRun) -> Outcome {
    let counts = score(
        &run.data,
        &run.mixed_names,
        &run.result.foreground,
        SML_MASK_EPS,
    );
    let f = f_score(&counts);
    let residual = run.result.final_residual().unwrap_or(f64::INFINITY);
    let tol = SolverConfig::default().tol;
    outcome(
        f >= 0.95 && residual <= tol && within(run.elapsed, 120),
        format!(
            "F={f:.4} at mask floor {SML_MASK_EPS}, residual {residual:.2e} (tol {tol:.0e}), {} iterations, {:.1}s",
            run.result.iterations(),
            run.elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9() -> Outcome {
    let data = generate(&uml_spec()).unwrap();
    let obs = to_observation(&data.sequence).unwrap();
    let cfg = SolverConfig {
        rho: 0.0,
        ..SolverConfig::default()
    };
    let mut updates = 0;
    let mut bit_exact = true;
    let ours = solve_uml_observed(&obs, &cfg, |view| {
        let expect = soft_threshold_matrix(view.foreground_target, view.params.lam1).unwrap();
        bit_exact &= view.foreground == &expect;
        updates += 1;
    })
    .unwrap();

    let d = to_nalgebra(obs.matrix());
    let oracle = rpca_oracle(&d, ours.lambda, cfg.beta, cfg.tol, cfg.max_outer_iters);
    let diff_b = (to_nalgebra(&ours.background) - &oracle.background).amax();
    let diff_f = (to_nalgebra(&ours.foreground) - &oracle.foreground).amax();
    let worst = diff_b.max(diff_f);
    outcome(
        bit_exact && worst <= 1e-6,
        format!(
            "{updates} F-updates bit-exact={bit_exact}; vs independent RPCA ({} vs {} iterations): max entry diff {worst:.2e}",
            ours.iterations(),
            oracle.iterations
        ),
    )
}

fn criterion_10(uml: &UmlRun, sml: &SmlRun) -> Outcome {
    let a = uml.result.iterations();
    let b = sml.result.iterations();
    let ok = |r: &DecompositionResult| r.converged && (10..=60).contains(&r.iterations());
    outcome(
        ok(&uml.result) && ok(&sml.result),
        format!("unsupervised {a} iterations, supervised {b} iterations (band 10..=60)"),
    )
}

fn criterion_11() -> Outcome {
    let mut worst_mean = 0.0f64;
    let mut nesting_violations = 0usize;
    let mut cuts_checked = 0usize;
    for inst in gfl_instances(200, 101) {
        let n = inst.m.len();
        let f = tv_prox(&inst.m, inst.graph.edges(), inst.w.as_slice(), inst.lam2).unwrap();
        let mean_in = inst.m.iter().sum::<f64>() / n as f64;
        let mean_out = f.iter().sum::<f64>() / n as f64;
        worst_mean = worst_mean.max((mean_in - mean_out).abs());

        // The minimal minimum cut of the thresholded problem at level alpha
        // must be bracketed by the level sets of the solution, and cuts at
        // increasing levels must be nested.
        let mut levels: Vec<f64> = f.clone();
        levels.extend(f.iter().map(|v| v + 1e-3));
        levels.extend(f.iter().map(|v| v - 1e-3));
        levels.sort_by(f64::total_cmp);
        let mut previous: Option<Vec<bool>> = None;
        for &alpha in &levels {
            let mut net = FlowNetwork::new(n);
            for i in 0..n {
                let d = inst.m[i] - alpha;
                net.set_terminals(i, d.max(0.0), (-d).max(0.0)).unwrap();
            }
            for (&(a, b), &w) in inst.graph.edges().iter().zip(inst.w.as_slice()) {
                let c = inst.lam2 * w;
                net.add_arc(a, b, c, c).unwrap();
            }
            let side = max_flow(&net).source_side;
            for i in 0..n {
                let above = f[i] > alpha + 1e-9;
                let below = f[i] < alpha - 1e-9;
                if (above && !side[i]) || (below && side[i]) {
                    nesting_violations += 1;
                }
            }
            if let Some(prev) = &previous {
                if side.iter().zip(prev).any(|(&now, &before)| now && !before) {
                    nesting_violations += 1;
                }
            }
            previous = Some(side);
            cuts_checked += 1;
        }
    }
    outcome(
        worst_mean <= 1e-6 && nesting_violations == 0,
        format!(
            "200 instances: max mean drift {worst_mean:.2e}; {cuts_checked} level cuts, {nesting_violations} nesting violations"
        ),
    )
}

fn file_bytes(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["mask", "."] {
        for entry in std::fs::read_dir(dir.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            if path.is_file() {
                let key = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn criterion_12(first: &UmlRun) -> Outcome {
    let data = &first.data;
    let obs: ObservationMatrix = to_observation(&data.sequence).unwrap();
    let rerun = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| solve_uml(&obs, &SolverConfig::default()))
        .unwrap();
    let names = &data.sequence.source_names;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (w, h) = (data.sequence.width, data.sequence.height);
    write_results(&first.result, w, h, names, a.path(), 0.0).unwrap();
    write_results(&rerun, w, h, names, b.path(), 0.0).unwrap();
    let fa = file_bytes(a.path());
    let fb = file_bytes(b.path());
    let same = fa == fb && fa.contains_key("trace.json");
    outcome(
        same,
        format!(
            "rerun on 3 threads vs 1: {} mask/trace files {}",
            fa.len(),
            if same { "byte-identical" } else { "DIFFER" }
        ),
    )
}

/// Not a criterion: how the unsupervised F-score at mask floor 0 varies with
/// the seed. Misses are low-magnitude fused patches on the image border,
/// where pixels have fewer neighbors and fusion is cheaper.
fn seed_sweep_note() -> String {
    let mut scores = Vec::new();
    for seed in 1..=12 {
        let data = generate(&SynthSpec { seed, ..uml_spec() }).unwrap();
        let obs = to_observation(&data.sequence).unwrap();
        let res = solve_uml(&obs, &SolverConfig::default()).unwrap();
        let counts = score(&data, &data.sequence.source_names, &res.foreground, 0.0);
        scores.push(f_score(&counts));
    }
    let passing = scores.iter().filter(|&&f| f >= 0.95).count();
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    format!(
        "unsupervised F at mask floor 0 over seeds 1..=12: {passing}/12 at >= 0.95, min {min:.3}"
    )
}

// ---------------------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".to_string());
            outcome(false, format!("panicked: {msg}"))
        }
    }
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful for this suite.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let names = [
        "GFL prox oracle equivalence",
        "prox_gfl = soft_threshold after tv_prox",
        "1D fused lasso vs exact DP",
        "max-flow vs exhaustive min cut",
        "singular value thresholding",
        "FISTA vs coordinate descent",
        "unsupervised end-to-end recovery",
        "supervised end-to-end recovery",
        "RPCA limit",
        "outer iteration band",
        "TV prox mean and level-set nesting",
        "determinism",
    ];
    let uml = catch_unwind(run_uml).ok();
    let sml = catch_unwind(run_sml).ok();
    let missing = || outcome(false, "synthetic run failed");

    let results = vec![
        guarded(criterion_1),
        guarded(criterion_2),
        guarded(criterion_3),
        guarded(criterion_4),
        guarded(criterion_5),
        guarded(criterion_6),
        uml.as_ref()
            .map_or_else(missing, |r| guarded(|| criterion_7(r))),
        sml.as_ref()
            .map_or_else(missing, |r| guarded(|| criterion_8(r))),
        guarded(criterion_9),
        match (&uml, &sml) {
            (Some(u), Some(s)) => guarded(|| criterion_10(u, s)),
            _ => missing(),
        },
        guarded(criterion_11),
        uml.as_ref()
            .map_or_else(missing, |r| guarded(|| criterion_12(r))),
    ];

    let mut failed = 0;
    for (k, (name, r)) in names.iter().zip(&results).enumerate() {
        let tag = if r.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {}", k + 1, r.detail);
        if !r.pass {
            failed += 1;
        }
    }
    if std::env::var_os("GFLBS_SEED_SWEEP").is_some() {
        println!("note: {}", seed_sweep_note());
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
