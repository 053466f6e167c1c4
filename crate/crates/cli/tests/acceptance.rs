//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits with status 0 even when a criterion fails so that the rest of the
//! workspace tests still run; set `BUQO_ACCEPTANCE_STRICT=1` to turn any
//! failure into a nonzero exit.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use buqo::credible_region::{compute_epsilon_bound, compute_tau_alpha, project_region};
use buqo::engine::{feasibility, prepare_region, run_pocs, BuqoSettings, Decision, ExactProjector, Mode, OuterSettings};
use buqo::map_solver::{solve_map, MapProblem, MapSettings};
use buqo::operators::{Db8Wavelet, Inpainting, LinearOperator, MaskSelect, MaskedDft, MultiCoil, ResidualMap, SamplingPattern};
use buqo::primal_dual::PdSettings;
use buqo::prox::{project_box, project_l1_levelset, project_l2_ball, IntervalBox, L1Levelset, L2Ball};
use buqo::scalar;
use buqo::sim::{
    add_noise, coil_sensitivities, derive_seed, gaussian_random_pattern, make_phantom, run_grid, ExperimentSpec, NamedStructure,
    PatternKind, PhantomKind,
};
use buqo::structure_sets::{build_background_set_with_mask, project_background, project_localized, StructureSpec};
use buqo::{Image, PixelMask};
use common::*;
use num_complex::Complex64;
use rand::Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Suite {
    failed: Vec<String>,
    lines: usize,
}

impl Suite {
    /// Runs one criterion; panics and overruns of `budget` count as failures.
    fn run(&mut self, id: &str, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(d), Some(b)) if elapsed > b => Err(format!("{d}; took {elapsed:.1?}, budget {b:?}")),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} [{id}] {name}: {detail} ({:.2} s)", elapsed.as_secs_f64());
        if outcome.is_err() {
            self.failed.push(id.to_string());
        }
        self.lines += 1;
    }
}

fn dot_gap<A: LinearOperator + ?Sized>(op: &A, u: &[f64], v: &[A::Output]) -> f64 {
    let lhs = scalar::dot(&op.forward(u), v);
    let rhs = scalar::dot(u, &op.adjoint(v));
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300)
}

fn c1_operators() -> Check {
    let mut r = rng(1);
    let (rows, cols) = (32, 32);
    let pattern = gaussian_random_pattern(rows, cols, 0.4, 3).unwrap().pattern;
    let dft = MaskedDft::new(pattern.clone()).unwrap();
    let coils = MultiCoil::new(vec![pattern; 4], coil_sensitivities(rows, cols, 4)).unwrap();
    let wavelet = Db8Wavelet::new(rows, cols, 4).unwrap();
    let mask = PixelMask::disk(rows, cols, (12, 20), 4.0);
    let inpaint = Arc::new(Inpainting::new(&mask, &[3, 7, 11]).unwrap());
    let residual = ResidualMap::new(&mask, inpaint.clone()).unwrap();
    let select = MaskSelect(mask);

    let mut worst: Vec<(&str, f64)> = Vec::new();
    let mut complex_case = |name, op: &dyn LinearOperator<Output = Complex64>| {
        let w = (0..20)
            .map(|_| dot_gap(op, &gaussian_vec(&mut r, op.in_dim()), &gaussian_complex(&mut r, op.out_dim())))
            .fold(0.0, f64::max);
        worst.push((name, w));
    };
    complex_case("dft", &dft);
    complex_case("multicoil", &coils);
    let mut r = rng(2);
    let real_ops: [(&str, &dyn LinearOperator<Output = f64>); 4] =
        [("db8", &wavelet), ("inpaint", &*inpaint), ("residual", &residual), ("select", &select)];
    for (name, op) in real_ops {
        let w = (0..20)
            .map(|_| dot_gap(op, &gaussian_vec(&mut r, op.in_dim()), &gaussian_vec(&mut r, op.out_dim())))
            .fold(0.0, f64::max);
        worst.push((name, w));
    }
    let mut pr: f64 = 0.0;
    for _ in 0..20 {
        let x = gaussian_vec(&mut r, rows * cols);
        let c = wavelet.forward(&x);
        let n = scalar::norm(&x);
        pr = pr.max((scalar::norm(&c) - n).abs() / n);
        pr = pr.max(scalar::distance(&wavelet.adjoint(&c), &x) / n);
    }
    let max_gap = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let detail = format!(
        "worst dot gap {max_gap:.1e} over {}; Db8 Parseval/reconstruction {pr:.1e}",
        worst.iter().map(|w| w.0).collect::<Vec<_>>().join("/")
    );
    ensure(max_gap <= 1e-10 && pr <= 1e-10, detail)
}

/// Idempotence, nonexpansiveness and the variational inequality on random data.
fn projection_checks(name: &str, p: &dyn Fn(&[f64]) -> Vec<f64>, points: &[Vec<f64>], feasible: &[Vec<f64>], tol: f64) -> Result<(), String> {
    for pair in points.windows(2) {
        let (x, y) = (&pair[0], &pair[1]);
        let (px, py) = (p(x), p(y));
        let scale = 1.0 + scalar::norm(&px);
        if scalar::distance(&p(&px), &px) > tol * scale {
            return Err(format!("{name}: not idempotent"));
        }
        if scalar::distance(&px, &py) > scalar::distance(x, y) + tol * scale {
            return Err(format!("{name}: expansive"));
        }
        let r = scalar::sub(x, &px);
        for v in feasible {
            let d = scalar::sub(v, &px);
            if scalar::dot(&r, &d) > tol * (1.0 + scalar::norm(&r) * scalar::norm(&d)) {
                return Err(format!("{name}: beaten by a feasible point"));
            }
        }
    }
    Ok(())
}

fn c2_projections() -> Check {
    let mut r = rng(20);
    let n = 16;
    let points: Vec<Vec<f64>> = (0..6).map(|_| uniform_vec(&mut r, n, -3.0, 3.0)).collect();

    let bx = IntervalBox::uniform(-0.5, 1.0).unwrap();
    let feas_box: Vec<Vec<f64>> = (0..10).map(|_| uniform_vec(&mut r, n, -0.5, 1.0)).collect();
    projection_checks("box", &|x| project_box(x, &bx), &points, &feas_box, 1e-12)?;

    let center = uniform_vec(&mut r, n, -1.0, 1.0);
    let ball = L2Ball::new(center.clone(), 1.5).unwrap();
    let feas_ball: Vec<Vec<f64>> = (0..10)
        .map(|_| {
            let d = gaussian_vec(&mut r, n);
            let s = 1.5 * r.random::<f64>() / scalar::norm(&d);
            center.iter().zip(&d).map(|(c, v)| c + s * v).collect()
        })
        .collect();
    projection_checks("l2 ball", &|x| project_l2_ball(x, &ball), &points, &feas_ball, 1e-10)?;

    let l1 = L1Levelset::new(2.0).unwrap();
    let feas_l1: Vec<Vec<f64>> = (0..10)
        .map(|_| {
            let d = gaussian_vec(&mut r, n);
            let s = 2.0 * r.random::<f64>() / scalar::norm_l1(&d);
            d.iter().map(|v| s * v).collect()
        })
        .collect();
    projection_checks("l1", &|x| project_l1_levelset(x, &l1), &points, &feas_l1, 1e-10)?;

    let x_map = Image::new(4, 4, uniform_vec(&mut r, n, 0.0, 1.0)).unwrap();
    let bmask = PixelMask::from_predicate(4, 4, |row, _| row == 0);
    let bset = build_background_set_with_mask(&x_map, &bmask, 0.5).unwrap();
    let hi = bset.interval.upper(0);
    let feas_bg: Vec<Vec<f64>> = (0..10)
        .map(|_| {
            let mut v = uniform_vec(&mut r, n, 0.0, 2.0);
            for &i in bmask.indices() {
                v[i] = hi * r.random::<f64>();
            }
            v
        })
        .collect();
    projection_checks("background", &|x| project_background(&bset, x).unwrap(), &points, &feas_bg, 1e-12)?;

    let settings = PdSettings::default();
    let region = small_region(3);
    let preg = |x: &[f64]| project_region(&region, &Image::new(4, 4, x.to_vec()).unwrap(), &settings).unwrap().point;
    let feas_reg: Vec<Vec<f64>> = (0..5).map(|_| preg(&uniform_vec(&mut r, n, -1.0, 2.0))).collect();
    projection_checks("region", &preg, &points[..3], &feas_reg, 1e-5)?;

    let set = small_localized(3);
    let ploc = |x: &[f64]| project_localized(&set, &Image::new(4, 4, x.to_vec()).unwrap(), &settings).unwrap().point;
    let feas_loc: Vec<Vec<f64>> = (0..5).map(|_| ploc(&uniform_vec(&mut r, n, -1.0, 2.0))).collect();
    projection_checks("localized", &ploc, &points[..3], &feas_loc, 1e-5)?;

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x = uniform_vec(&mut r, 10, -5.0, 5.0);
        let level = r.random_range(0.1..0.9) * scalar::norm_l1(&x);
        let got = project_l1_levelset(&x, &L1Levelset::new(level).unwrap());
        worst = worst.max(scalar::distance(&got, &l1_ball_bisection(&x, level)));
    }
    ensure(
        worst <= 1e-4,
        format!("box/l2/l1/background/region/localized properties hold; l1 vs oracle on 50 instances {worst:.1e}"),
    )
}

fn c3_disks() -> Check {
    let disk = |cx: f64, r: f64| {
        let ball = L2Ball::new(vec![cx, 0.0], r).unwrap();
        move |x: &[f64]| project_l2_ball(x, &ball)
    };
    let settings = OuterSettings { tol: 1e-12, max_iters: 1000 };
    let run = run_pocs(&mut ExactProjector(disk(0.0, 1.0)), &mut ExactProjector(disk(3.0, 1.0)), &[3.0, 0.7], &settings).unwrap();
    let e_dist = (run.distance - 1.0).abs();
    let e_pts = scalar::distance(&run.x_region, &[1.0, 0.0]).max(scalar::distance(&run.x_set, &[2.0, 0.0]));
    let meet = run_pocs(&mut ExactProjector(disk(0.0, 1.0)), &mut ExactProjector(disk(1.2, 1.0)), &[1.2, 0.9], &OuterSettings::default()).unwrap();
    ensure(
        e_dist <= 1e-6 && e_pts <= 1e-5 && meet.distance <= 1e-6,
        format!("disjoint: |d - 1| = {e_dist:.1e}, limit points off by {e_pts:.1e}; intersecting: delta = {:.1e}", meet.distance),
    )
}

fn c4_subsolvers() -> Check {
    let mut worst_region: f64 = 0.0;
    let mut worst_local: f64 = 0.0;
    let settings = PdSettings::default();
    for seed in 0..5 {
        let region = small_region(seed);
        let mut r = rng(100 + seed);
        let s = region.x_map.norm();
        let z: Vec<f64> = region.x_map.as_slice().iter().zip(gaussian_vec(&mut r, 16)).map(|(a, g)| a + s * g).collect();
        let got = project_region(&region, &Image::new(4, 4, z.clone()).unwrap(), &settings).unwrap();
        worst_region = worst_region.max(rel_err(&got.point, &region_oracle(&region, &z)));

        let set = small_localized(seed);
        let z: Vec<f64> = set.surrogate.as_slice().iter().zip(gaussian_vec(&mut r, 16)).map(|(a, g)| a + g).collect();
        let got = project_localized(&set, &Image::new(4, 4, z.clone()).unwrap(), &settings).unwrap();
        worst_local = worst_local.max(rel_err(&got.point, &localized_oracle(&set, &z)));
    }
    ensure(
        worst_region <= 1e-4 && worst_local <= 1e-4,
        format!("worst relative error vs Dykstra oracle: region {worst_region:.1e}, localized {worst_local:.1e}"),
    )
}

fn c5_tau() -> Check {
    let tau = compute_tau_alpha(0.01, 65536).unwrap();
    ensure((tau - 0.037318).abs() <= 1e-6, format!("tau = {tau:.10}, expected 0.037318 +- 1e-6, off by {:.2e}", (tau - 0.037318).abs()))
}

fn c5_epsilon() -> Check {
    let eps = compute_epsilon_bound(0.1, 32768).unwrap();
    ensure((eps - 25.741).abs() <= 1e-3, format!("epsilon = {eps:.6}"))
}

fn c5_eta() -> Check {
    let region = small_region(11);
    let problem = region.problem();
    let n = region.x_map.len();
    let l1: f64 = problem.psi().forward(region.x_map.as_slice()).iter().map(|v| v.abs()).sum();
    let lambda = n as f64 / l1;
    let tau = (16.0 * (3.0f64 / region.alpha).ln() / n as f64).sqrt();
    let eta = lambda * l1 + n as f64 * (tau + 1.0);
    ensure(
        region.eta_tilde == eta && region.lambda == lambda && region.tau_alpha == tau,
        format!("eta_tilde = {} vs recomputed {eta}", region.eta_tilde),
    )
}

fn c6_map() -> Check {
    let truth = small_truth(8, 8, 5);
    let phi = Arc::new(MaskedDft::new(SamplingPattern::full(8, 8)).unwrap());
    let psi = Arc::new(Db8Wavelet::new(8, 8, 2).unwrap());
    let y = phi.forward(truth.as_slice());
    let problem = MapProblem::new(phi, psi, y, 1e-6, 8, 8).unwrap();
    let est = solve_map(&problem, &MapSettings { max_iters: 50_000, ..MapSettings::default() }).unwrap();
    let recovery = scalar::distance(est.image.as_slice(), truth.as_slice());

    let mut worst_feas: f64 = 0.0;
    for (seed, ratio, sigma) in [(1, 0.3, 0.05), (2, 0.5, 0.1), (3, 0.8, 0.02), (4, 1.0, 0.05)] {
        let (p, _) = small_problem(16, 16, ratio, sigma, seed);
        let e = solve_map(&p, &MapSettings::default()).unwrap();
        worst_feas = worst_feas.max(p.data_residual(e.image.as_slice()) / p.epsilon());
    }
    worst_feas = worst_feas.max(problem.data_residual(est.image.as_slice()) / problem.epsilon());

    let (p, _) = small_problem(8, 8, 0.5, 0.05, 17);
    let solve = |weight| solve_map(&p, &MapSettings { tol: 1e-9, max_iters: 200_000, weight }).unwrap().image;
    let reference = solve(1.0);
    let invariance = [0.1, 10.0]
        .iter()
        .map(|&w| rel_err(solve(w).as_slice(), reference.as_slice()))
        .fold(0.0, f64::max);
    ensure(
        recovery <= 1e-4 && worst_feas <= 1.0 + 1e-6 && invariance <= 1e-3,
        format!("recovery error {recovery:.1e}; max residual/epsilon {worst_feas:.8}; weight invariance {invariance:.1e}"),
    )
}

struct Grid {
    bright: Vec<Vec<Option<f64>>>,
    empty: Vec<Vec<Option<f64>>>,
    bright_decision: Option<Decision>,
    empty_decision: Option<Decision>,
}

const RATIOS: [f64; 3] = [0.5, 0.75, 1.0];
const VARIANCES: [f64; 3] = [0.01, 0.02, 0.03];

fn qualitative_grid() -> Grid {
    let phantom = make_phantom(PhantomKind::CompactSources, 64, 64, 7).unwrap();
    let bright = *phantom.brightest().unwrap();
    let spec = ExperimentSpec {
        phantom: phantom.image.clone(),
        pattern_kind: PatternKind::GaussianRandom,
        sampling_ratios: RATIOS.to_vec(),
        noise_variances: VARIANCES.to_vec(),
        structures: vec![
            NamedStructure {
                name: "bright".into(),
                spec: StructureSpec::localized(phantom.source_mask(&bright)),
            },
            NamedStructure {
                name: "empty".into(),
                spec: StructureSpec::localized(phantom.empty_region_mask(3.0, 1e-3)),
            },
        ],
        settings: BuqoSettings::default(),
        seed: 7,
    };
    let report = run_grid(&spec).unwrap();
    let decision = |name: &str, ratio: f64, var: f64| {
        report
            .cells
            .iter()
            .find(|c| c.structure == name && c.ratio == ratio && c.sigma2 == var)
            .and_then(|c| c.outcome.as_ref().ok())
            .map(|s| s.decision)
    };
    Grid {
        bright: report.rho_matrix("bright"),
        empty: report.rho_matrix("empty"),
        bright_decision: decision("bright", 1.0, 0.01),
        empty_decision: decision("empty", 0.5, 0.03),
    }
}

fn fmt_matrix(m: &[Vec<Option<f64>>]) -> String {
    m.iter()
        .map(|row| row.iter().map(|v| v.map_or("-".into(), |x| format!("{x:.2}"))).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join(" | ")
}

fn c7a(g: &Grid) -> Check {
    let rho = g.bright[2][0];
    ensure(
        g.bright_decision == Some(Decision::Rejected) && rho.is_some_and(|r| r > 3.0),
        format!("bright source at (1, 0.01): rho = {rho:?}%, {:?}", g.bright_decision),
    )
}

fn c7b(g: &Grid) -> Check {
    let rho = g.empty[0][2];
    ensure(
        g.empty_decision == Some(Decision::NotRejected) && rho.is_some_and(|r| r <= 3.0),
        format!("empty region at (0.5, 0.03): rho = {rho:?}%, {:?}", g.empty_decision),
    )
}

fn c7c(g: &Grid) -> Check {
    let m = &g.bright;
    let mut violations = Vec::new();
    for i in 0..RATIOS.len() {
        for j in 0..VARIANCES.len() {
            let Some(v) = m[i][j] else {
                return Err(format!("cell ({}, {}) failed", RATIOS[i], VARIANCES[j]));
            };
            if i + 1 < RATIOS.len() && m[i + 1][j].is_some_and(|w| w < v) {
                violations.push(format!("M/N {}->{} at sigma2 {}", RATIOS[i], RATIOS[i + 1], VARIANCES[j]));
            }
            if j + 1 < VARIANCES.len() && m[i][j + 1].is_some_and(|w| w > v) {
                violations.push(format!("sigma2 {}->{} at M/N {}", VARIANCES[j], VARIANCES[j + 1], RATIOS[i]));
            }
        }
    }
    ensure(
        violations.len() <= 1,
        format!(
            "rho (%) rows M/N 0.5/0.75/1, cols sigma2 0.01/0.02/0.03: {}; {} adjacent violations{}",
            fmt_matrix(m),
            violations.len(),
            if violations.is_empty() { String::new() } else { format!(" ({})", violations.join(", ")) }
        ),
    )
}

fn c8_pocs_fb() -> Check {
    let mut worst: f64 = 0.0;
    let mut dists = Vec::new();
    for seed in [1, 2, 3] {
        let (problem, truth) = small_problem(16, 16, 1.0, 0.01, seed);
        let map = solve_map(&problem, &MapSettings::default()).unwrap();
        let region = prepare_region(&problem, &map.image, 0.01).unwrap();
        let peak = (0..256).max_by(|&a, &b| truth.as_slice()[a].total_cmp(&truth.as_slice()[b])).unwrap();
        let set = StructureSpec::localized(PixelMask::disk(16, 16, (peak / 16, peak % 16), 1.5)).build(&map.image).unwrap();
        let mut settings = BuqoSettings::default();
        let p = feasibility(&region, &set, &settings).unwrap().distance;
        settings.mode = Mode::Fb;
        settings.fb_gamma = 0.5;
        let f = feasibility(&region, &set, &settings).unwrap().distance;
        worst = worst.max((p - f).abs() / p.max(f));
        dists.push(format!("{p:.4}/{f:.4}"));
    }
    ensure(worst <= 1e-3, format!("pocs/fb distances {}; worst relative gap {worst:.1e}", dists.join(", ")))
}

fn c9_noise() -> Check {
    let (m, sigma2) = (2048, 0.01);
    let eps = compute_epsilon_bound(0.1, m).unwrap();
    let clean = vec![Complex64::default(); m];
    let inside = (0..1000)
        .filter(|&k| scalar::norm(&add_noise(&clean, sigma2, derive_seed(99, k)).unwrap()) <= eps)
        .count();
    ensure(inside >= 950, format!("{inside} of 1000 draws inside epsilon = {eps:.4}"))
}

fn c10_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |out: &str| {
        Command::new(env!("CARGO_BIN_EXE_buqo"))
            .args(["grid", "--seed", "7", "--out", out])
            .args(["--set", "experiment.rows=32", "--set", "experiment.cols=32"])
            .args(["--set", "experiment.sampling_ratios=[0.5, 1.0]", "--set", "experiment.noise_variances=[0.01, 0.03]"])
            .current_dir(tmp.path())
            .output()
            .expect("grid runs")
    };
    for out in ["a", "b"] {
        let o = run(out);
        if !o.status.success() {
            return Err(format!("grid failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
    }
    let files = list_files(&tmp.path().join("a"));
    let mut images = 0;
    for f in &files {
        let a = fs::read(tmp.path().join("a").join(f)).map_err(|e| e.to_string())?;
        let b = fs::read(tmp.path().join("b").join(f)).map_err(|e| format!("{f}: {e}"))?;
        if a != b {
            return Err(format!("{f} differs between runs"));
        }
        images += usize::from(f.ends_with(".buqo"));
    }
    ensure(
        images > 0 && files.len() == list_files(&tmp.path().join("b")).len(),
        format!("{} files identical across runs ({images} images)", files.len()),
    )
}

fn list_files(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            out.extend(list_files(&p).into_iter().map(|f| format!("{name}/{f}")));
        } else {
            out.push(p.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    out.sort();
    out
}

fn main() {
    let mut suite = Suite { failed: Vec::new(), lines: 0 };
    let secs = Duration::from_secs;
    suite.run("1", "operator correctness", Some(secs(10)), c1_operators);
    suite.run("2", "projection suite", Some(secs(30)), c2_projections);
    suite.run("3", "analytic alternating-projection oracle", Some(secs(1)), c3_disks);
    suite.run("4", "sub-solver oracle equivalence", Some(secs(120)), c4_subsolvers);
    suite.run("5a", "tau_alpha(0.01, 65536)", None, c5_tau);
    suite.run("5b", "epsilon(0.1, 32768)", None, c5_epsilon);
    suite.run("5c", "eta_tilde assembly", None, c5_eta);
    suite.run("6", "MAP solver", Some(secs(60)), c6_map);

    let start = Instant::now();
    let grid = catch_unwind(qualitative_grid).ok();
    let grid_time = start.elapsed();
    let budget = secs(20 * 60);
    let parts: [(&str, &str, fn(&Grid) -> Check); 3] = [
        ("7a", "bright source rejected", c7a),
        ("7b", "empty background not rejected", c7b),
        ("7c", "rho trends across the 3x3 grid", c7c),
    ];
    for (id, name, f) in parts {
        suite.run(id, name, None, || match &grid {
            None => Err("grid run panicked".into()),
            Some(_) if grid_time > budget => Err(format!("grid took {grid_time:.0?}, budget {budget:?}")),
            Some(g) => f(g).map(|d| format!("{d}; grid {:.0} s", grid_time.as_secs_f64())),
        });
    }

    suite.run("8", "POCS and FB agree", None, c8_pocs_fb);
    suite.run("9", "noise bound coverage", None, c9_noise);
    suite.run("10", "grid determinism", None, c10_determinism);

    println!(
        "acceptance: {} passed, {} failed{}",
        suite.lines - suite.failed.len(),
        suite.failed.len(),
        if suite.failed.is_empty() { String::new() } else { format!(" ({})", suite.failed.join(", ")) }
    );
    if !suite.failed.is_empty() && std::env::var_os("BUQO_ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
