//! Acceptance suite. Prints one PASS/FAIL line per criterion on standard
//! output and exits nonzero if any criterion fails. Diagnostics go to
//! standard error.

mod common;
mod props;

use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as RunnerConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxmesh::config::{Config, Mode};
use voxmesh::geometry::PointCloud;
use voxmesh::halfedge::{HalfEdgeMesh, VertexClass};
use voxmesh::io::{write_obj, write_xyz, ReportDocument, RunMetadata};
use voxmesh::knn::NeighborIndex;
use voxmesh::optimizer::rebuild_internal_edges;
use voxmesh::pipeline::{self, PipelineOutput};
use voxmesh::preprocess::{edge_insert_count, mls_smooth, SmoothingParams};
use voxmesh::resample::{classify_edge_points, plan_allocation, resample};
use voxmesh::voxel::{adjacent, build_grid, round_color, scale_for_count, BoxIndex};

// Tolerances and fixture sizes.
const INPUT_POINTS: usize = 50_000;
const RUNTIME_LIMIT: Duration = Duration::from_secs(60);
const COUNT_TOLERANCE: f64 = 0.01;
const THETA_AVG_MIN: f64 = 50.0;
const Q_AVG_MIN: f64 = 0.88;
const MLS_AVG_MAX: f64 = 5e-3;
const MLS_MAX_MAX: f64 = 3e-2;
const DENOISE_RATIO_MAX: f64 = 0.5;
const Q_STEP_TOLERANCE: f64 = 0.01;
const Q_TOTAL_GAIN_MIN: f64 = 0.03;
const DETERMINISM_RUNS: usize = 5;

type Outcome = Result<String, String>;

fn config(points: usize) -> Config {
    let mut c = Config::default();
    c.resample.points = Some(points);
    c
}

fn run(cloud: &PointCloud, cfg: &Config) -> Result<PipelineOutput, String> {
    pipeline::run(cloud, cfg).map_err(|e| e.to_string())
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn exact_point_count() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut exact = 0;
    let mut slowest = Duration::ZERO;
    let mut failures = Vec::new();
    for case in 0..20 {
        let seed = rng.random::<u64>();
        let target = [1_000, 5_000, 10_000][rng.random_range(0..3)];
        let (name, cloud) = match case % 5 {
            0 => ("sphere", common::sphere(INPUT_POINTS, seed)),
            1 => ("cube", common::cube(INPUT_POINTS, 0.5, seed)),
            2 => ("torus", common::torus(INPUT_POINTS, 1.0, 0.35, seed)),
            3 => ("ellipsoid", common::ellipsoid(INPUT_POINTS, [1.6, 1.0, 0.6], seed)),
            _ => ("open sphere", common::open_sphere(INPUT_POINTS, 0.6, seed)),
        };
        let start = Instant::now();
        let out = run(&cloud, &config(target))?;
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        let v = out.mesh.n_vertices();
        let deficit = out.summary.remesh.deficit;
        eprintln!("  case {case:2}: {name:11} target {target:5} -> {v:5} vertices in {elapsed:.2?} (deficit {deficit})");
        if elapsed > RUNTIME_LIMIT {
            failures.push(format!("case {case} took {elapsed:.1?}"));
        }
        if deficit != v as i64 - target as i64 {
            failures.push(format!("case {case}: deficit {deficit} not logged for {v} vs {target}"));
        }
        if v == target {
            exact += 1;
        } else if (v as f64 - target as f64).abs() > COUNT_TOLERANCE * target as f64 {
            failures.push(format!("case {case}: {v} vertices for target {target}"));
        }
    }
    if failures.is_empty() {
        Ok(format!("20 cases, {exact} exact, rest within 1%; slowest {slowest:.2?}"))
    } else {
        Err(failures.join("; "))
    }
}

fn isotropy(out: &PipelineOutput) -> Outcome {
    let r = &out.report;
    let theta = r.theta_avg.value.ok_or("theta_avg missing")?;
    let q = r.q_avg.value.ok_or("q_avg missing")?;
    let chi = out.mesh.euler_characteristic();
    let closed = out.mesh.is_closed();
    let msg = format!(
        "theta_avg {theta:.2} (>= {THETA_AVG_MIN}), Q_avg {q:.4} (>= {Q_AVG_MIN}), closed {closed}, chi {chi}, V {}",
        out.mesh.n_vertices()
    );
    check(theta >= THETA_AVG_MIN && q >= Q_AVG_MIN && closed && chi == 2, msg.clone())?;
    Ok(msg)
}

/// Three boxes along x holding the given numbers of points.
fn row_of_boxes(pops: &[usize]) -> PointCloud {
    let mut pts = Vec::new();
    for (b, &n) in pops.iter().enumerate() {
        for j in 0..n {
            pts.push([b as f64 + 0.1 + 0.8 * j as f64 / n as f64, 0.5, 0.5]);
        }
    }
    PointCloud::from_slices(&pts).unwrap()
}

fn hand_largest_remainder(real: &[f64], total: usize) -> Vec<usize> {
    let mut out: Vec<usize> = real.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..real.len()).collect();
    order.sort_by(|&a, &b| (real[b] - real[b].floor()).total_cmp(&(real[a] - real[a].floor())).then(a.cmp(&b)));
    let short = total - out.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        out[i] += 1;
    }
    out
}

fn formulas() -> Outcome {
    // Up-sampling edge count: round-half-up of sqrt(2s + 1/2) - 1/sqrt(2).
    for (s, want) in [(6, 3), (0, 0), (12, 4)] {
        check(edge_insert_count(s) == want, format!("edge count for s={s} is {}", edge_insert_count(s)))?;
    }
    for s in 0..200usize {
        let oracle = ((2.0 * s as f64 + 0.5).sqrt() - 0.5f64.sqrt() + 0.5).floor() as usize;
        check(edge_insert_count(s) == oracle, format!("edge count for s={s}"))?;
    }
    // Box scale 2 l / cbrt(n).
    let s = scale_for_count(1.0, 50_000).map_err(|e| e.to_string())?;
    check((s - 0.054288).abs() < 1e-5, format!("scale for l=1, n=50000 is {s}"))?;
    check(scale_for_count(10.0, 1000).unwrap() == 2.0, "scale for l=10, n=1000")?;
    check(scale_for_count(4.0, 8).unwrap() == 4.0, "scale for l=4, n=8")?;
    // Largest-remainder allocation.
    for (pops, target) in [(vec![3, 3, 4], 5), (vec![5, 5, 5, 5], 6), (vec![1, 2, 7], 4)] {
        let cloud = row_of_boxes(&pops);
        let grid = build_grid(&cloud, 1.0).unwrap();
        let plan = plan_allocation(&grid, &vec![0; cloud.len()], target, &[1.0]).map_err(|e| e.to_string())?;
        let got: Vec<usize> = (0..pops.len()).map(|i| plan.quota(BoxIndex::new(i as i64, 0, 0), 0)).collect();
        let n: usize = pops.iter().sum();
        let real: Vec<f64> = pops.iter().map(|&p| target as f64 * p as f64 / n as f64).collect();
        let want = hand_largest_remainder(&real, target);
        check(got == want, format!("{pops:?} / {target}: got {got:?}, want {want:?}"))?;
    }
    check(hand_largest_remainder(&[1.5, 1.5, 2.0], 5) == vec![2, 1, 2], "oracle fixture")?;
    // Round colors and adjacency.
    let mut adjacent_count = 0;
    for i in -2..=2i64 {
        for j in -2..=2i64 {
            for k in -2..=2i64 {
                let b = BoxIndex::new(i, j, k);
                let parity = (i & 1) + 2 * (j & 1) + 4 * (k & 1);
                check(round_color(b) == parity as usize, format!("round color of {b:?}"))?;
                let near = i.abs() <= 1 && j.abs() <= 1 && k.abs() <= 1;
                check(adjacent(BoxIndex::new(0, 0, 0), b) == near, format!("adjacency of {b:?}"))?;
                if near && (i, j, k) != (0, 0, 0) {
                    adjacent_count += 1;
                    check(round_color(b) != round_color(BoxIndex::new(0, 0, 0)), "adjacent boxes share a round")?;
                }
            }
        }
    }
    check(adjacent_count == 26, format!("{adjacent_count} adjacent boxes"))?;
    Ok("edge counts, box scale, allocation, round colors and adjacency match".into())
}

fn face_set(m: &HalfEdgeMesh) -> Vec<[usize; 3]> {
    let mut f: Vec<[usize; 3]> = m
        .faces()
        .iter()
        .map(|t| {
            let r = (0..3).min_by_key(|&k| t[k]).unwrap();
            [t[r], t[(r + 1) % 3], t[(r + 2) % 3]]
        })
        .collect();
    f.sort_unstable();
    f
}

fn internal_edges() -> Outcome {
    let target = 5_000;
    let v_scale = scale_for_count(2.0, target).unwrap();
    // Caps whose rim circles have diameter 4 v_scale.
    let cap = (2.0 * v_scale).asin();
    let cloud = common::open_sphere(INPUT_POINTS, cap, 11);
    let mut cfg = config(target);
    cfg.grid.v_scale = Some(v_scale);
    cfg.remesh.keep_internal_edges = true;
    let kept = run(&cloud, &cfg)?;
    cfg.remesh.keep_internal_edges = false;
    let closed = run(&cloud, &cfg)?;
    let with_flag = kept.mesh.boundary_loops().len();
    let without = closed.mesh.boundary_loops().len();
    check(with_flag == 2, format!("{with_flag} boundary loops with the flag"))?;
    check(without == 0, format!("{without} boundary loops without the flag"))?;
    let mut idempotent = true;
    for m in [&kept.mesh, &closed.mesh] {
        let cloud = PointCloud::new(m.positions().to_vec()).unwrap();
        let grid = build_grid(&cloud, v_scale).unwrap();
        let once = rebuild_internal_edges(m, &grid).map_err(|e| e.to_string())?;
        let grid2 = build_grid(&PointCloud::new(once.positions().to_vec()).unwrap(), v_scale).unwrap();
        let twice = rebuild_internal_edges(&once, &grid2).map_err(|e| e.to_string())?;
        idempotent &= face_set(&once) == face_set(&twice) && once.positions() == twice.positions();
    }
    check(idempotent, "rebuilding internal edges twice changed the mesh")?;
    Ok(format!("hole diameter 4 v_scale: {with_flag} loops with the flag, {without} without; rebuild idempotent"))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn external_edges() -> Outcome {
    let half = 0.5;
    let cloud = common::cube(INPUT_POINTS, half, 5);
    let defaults = Config::default().resample;
    let input_labels = classify_edge_points(&cloud, defaults.feature_k, defaults.edge_threshold).map_err(|e| e.to_string())?;
    let index = NeighborIndex::from_cloud(&cloud);
    // Each output vertex takes the label of its nearest input point, so both
    // modes are scored with the same labeling.
    let transferred = |m: &HalfEdgeMesh| -> Vec<f64> {
        m.positions()
            .iter()
            .filter(|p| input_labels[index.knn(p, 1, None)[0].index] == 1)
            .map(|p| common::cube_edge_distance(p, half))
            .collect()
    };
    let mut cfg = config(10_000);
    cfg.resample.mode = Mode::Edges;
    cfg.resample.rates = Some("7:3".into());
    let edges = run(&cloud, &cfg)?;
    cfg.resample.mode = Mode::None;
    cfg.resample.rates = None;
    let none = run(&cloud, &cfg)?;
    let v_scale = edges.summary.v_scale;
    let m = &edges.mesh;
    let labeled: Vec<f64> = (0..m.n_vertices())
        .filter(|&i| m.classes()[i] == VertexClass::ExternalEdge)
        .map(|i| common::cube_edge_distance(&m.positions()[i], half))
        .collect();
    check(!labeled.is_empty(), "no external-edge vertices in edges mode")?;
    let (d_edges, d_none) = (transferred(&edges.mesh), transferred(&none.mesh));
    check(!d_none.is_empty(), "no edge-labeled vertices in none mode")?;
    let (a, b, c) = (mean(&labeled), mean(&d_edges), mean(&d_none));
    let msg = format!(
        "edges mode: {} labeled vertices at mean {a:.4} (<= v_scale/2 = {:.4}); nearest-label mean {b:.4} vs none mode {c:.4}",
        labeled.len(),
        v_scale / 2.0
    );
    check(a <= v_scale / 2.0 && b <= v_scale / 2.0 && b < c, msg.clone())?;
    Ok(msg)
}

fn mls_consistency(out: &PipelineOutput) -> Outcome {
    let mls = out.report.mls.ok_or("no MLS error computed")?;
    let msg = format!("avg {:.3e} (<= {MLS_AVG_MAX:.0e}), max {:.3e} (<= {MLS_MAX_MAX:.0e})", mls.avg, mls.max);
    check(mls.avg <= MLS_AVG_MAX && mls.max <= MLS_MAX_MAX, msg.clone())?;
    Ok(msg)
}

fn denoising() -> Outcome {
    let n = 5_000;
    let diag = common::sphere(n, 21).diag();
    let (noisy, _) = common::noisy_sphere(n, 0.01 * diag, 21);
    let smoothed = mls_smooth(&noisy, &SmoothingParams { k: 8, h: None }).map_err(|e| e.to_string())?;
    let (before, after) = (common::radial_rms(&noisy), common::radial_rms(&smoothed));
    let ratio = after / before;
    let msg = format!("radial RMS {before:.4} -> {after:.4}, ratio {ratio:.3} (<= {DENOISE_RATIO_MAX})");
    check(ratio <= DENOISE_RATIO_MAX, msg.clone())?;
    Ok(msg)
}

fn convergence(out: &PipelineOutput) -> Outcome {
    let stats = &out.summary.remesh;
    let mut q = vec![stats.initial_q_avg];
    q.extend(stats.iterations.iter().map(|s| s.q_avg));
    check(q.len() == 6, format!("{} iterations recorded", q.len() - 1))?;
    let steps_ok = q.windows(2).all(|w| w[1] >= w[0] - Q_STEP_TOLERANCE);
    let gain = q[5] - q[0];
    let trace: Vec<String> = q.iter().map(|v| format!("{v:.4}")).collect();
    let msg = format!("Q_avg by iteration {}; gain {gain:.4}", trace.join(" "));
    check(steps_ok && gain >= Q_TOTAL_GAIN_MIN, msg.clone())?;
    Ok(msg)
}

fn serialize(out: &PipelineOutput) -> Vec<u8> {
    let mut bytes = Vec::new();
    write_obj(&mut bytes, out.mesh.positions(), out.mesh.faces()).unwrap();
    write_xyz(&mut bytes, out.resampled.points()).unwrap();
    let doc = ReportDocument::new(&out.report, Some(&out.mesh), RunMetadata::default());
    bytes.extend(doc.to_json().into_bytes());
    bytes
}

fn determinism() -> Outcome {
    let cloud = common::cube(20_000, 0.5, 9);
    let mut cfg = config(3_000);
    cfg.resample.mode = Mode::Edges;
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let resample_bytes = || -> Vec<u8> {
        let grid = build_grid(&cloud, 0.1).unwrap();
        let labels = classify_edge_points(&cloud, 16, 0.02).unwrap();
        let plan = plan_allocation(&grid, &labels, 2_000, &[3.0, 7.0]).unwrap();
        let mut labelled = cloud.clone();
        labelled.set_labels(Some(labels)).unwrap();
        let out = resample(&labelled, &grid, &plan).unwrap();
        let mut bytes = Vec::new();
        write_xyz(&mut bytes, out.points()).unwrap();
        bytes.extend(out.labels().unwrap().iter().flat_map(|l| l.to_le_bytes()));
        bytes
    };
    let mut reference: Option<(Vec<u8>, Vec<u8>)> = None;
    for run_id in 0..DETERMINISM_RUNS {
        for threads in [1, workers] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let (r, p) = pool.install(|| (resample_bytes(), run(&cloud, &cfg).map(|o| serialize(&o))));
            let got = (r, p?);
            match &reference {
                None => reference = Some(got),
                Some(want) => {
                    check(want.0 == got.0, format!("resample output differs (run {run_id}, {threads} workers)"))?;
                    check(want.1 == got.1, format!("pipeline output differs (run {run_id}, {threads} workers)"))?;
                }
            }
        }
    }
    Ok(format!("{DETERMINISM_RUNS} runs each with 1 and {workers} workers byte-identical"))
}

fn run_property<S: Strategy>(
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> props::Check,
) -> Result<(), String> {
    let mut runner = TestRunner::new(RunnerConfig {
        cases,
        failure_persistence: None,
        ..RunnerConfig::default()
    });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn property_suites() -> Outcome {
    run_property(
        "kNN vs brute force",
        256,
        (props::point_set(1000), [-2.5f64..2.5, -2.5f64..2.5, -2.5f64..2.5], 1usize..24),
        |(c, q, k)| props::knn_matches_brute_force(&c, q, k),
    )?;
    run_property("Euler deltas (closed)", 64, any::<u64>(), |s| props::remesh_op_deltas(false, s, 200))?;
    run_property("Euler deltas (open)", 64, any::<u64>(), |s| props::remesh_op_deltas(true, s, 200))?;
    run_property("similarity invariance", 1000, (props::triangle(), props::similarity()), |(t, s)| {
        props::similarity_invariance(t, s)
    })?;
    run_property("intrinsic metric axioms", 256, props::grid_points(), |(c, s)| {
        props::intrinsic_metric_axioms(&c, s)
    })?;
    Ok("kNN (256), Euler deltas (2 x 64), similarity (1000), intrinsic metric (256) cases hold".into())
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |id, name, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        eprintln!("criterion {id} finished in {:.2?}", start.elapsed());
        let status = if outcome.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &outcome {
            Ok(s) | Err(s) => s.clone(),
        };
        println!("criterion {id:2} {status} {name}: {detail}");
        results.push((id, name, outcome));
    };

    record(1, "exact point count", &exact_point_count);
    let sphere = run(&common::sphere(INPUT_POINTS, 1), &config(10_000));
    let with_sphere = |f: fn(&PipelineOutput) -> Outcome| match &sphere {
        Ok(out) => f(out),
        Err(e) => Err(format!("sphere pipeline failed: {e}")),
    };
    record(2, "isotropy", &|| with_sphere(isotropy));
    record(3, "formulas", &formulas);
    record(4, "internal edges", &internal_edges);
    record(5, "external edges", &external_edges);
    record(6, "MLS consistency", &|| with_sphere(mls_consistency));
    record(7, "denoising", &denoising);
    record(8, "convergence", &|| with_sphere(convergence));
    record(9, "determinism", &determinism);
    record(10, "property suites", &property_suites);

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
