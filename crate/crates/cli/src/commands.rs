//! The five subcommands. Each returns the text to print on stdout and writes
//! its files through [`Staging`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use buqo::credible_region::compute_epsilon_bound;
use buqo::engine::{run_buqo_from_map, PipelineError, Stage};
use buqo::io::{self, OutcomeRecord};
use buqo::map_solver::{compute_lambda, solve_map, MapProblem};
use buqo::sim::{
    cell_seeds, default_wavelet, make_phantom, measurement_pattern, operator_for_pattern, run_grid, simulate_problem,
    ExperimentSpec, NamedStructure, Phantom, PhantomKind, Source,
};
use buqo::structure_sets::StructureSpec;
use buqo::Image;
use serde::Serialize;

use crate::config::{CommandName, RunConfig};
use crate::output::Staging;
use crate::CliError;

/// Runs `command` and returns what should be printed.
pub fn run(cfg: &RunConfig, command: CommandName) -> Result<String, CliError> {
    match command {
        CommandName::Simulate => cmd_simulate(cfg),
        CommandName::Map => cmd_map(cfg),
        CommandName::Test => cmd_test(cfg),
        CommandName::Grid => cmd_grid(cfg),
        CommandName::Report => cmd_report(cfg),
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::Config(format!("`{key}` is required")))
}

fn stage(stage: Stage) -> impl FnOnce(buqo::BuqoError) -> CliError {
    move |source| CliError::Pipeline(PipelineError { stage, source })
}

fn image_bytes(img: &Image) -> buqo::Result<Vec<u8>> {
    let mut buf = Vec::new();
    io::write_image(&mut buf, img)?;
    Ok(buf)
}

/// Structures declared by a generated phantom, by name.
pub fn builtin_structure(name: &str, phantom: &Phantom) -> Option<StructureSpec> {
    let faintest = || phantom.sources.iter().min_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
    match name {
        "bright" => phantom.brightest().map(|s| StructureSpec::localized(phantom.source_mask(s))),
        "faint" => faintest().map(|s| StructureSpec::localized(phantom.source_mask(s))),
        "empty" => Some(StructureSpec::localized(phantom.empty_region_mask(3.0, 1e-3))),
        "background" => Some(StructureSpec::background()),
        _ => None,
    }
}

fn generated_phantom(cfg: &RunConfig) -> Result<Phantom, CliError> {
    let e = &cfg.experiment;
    Ok(make_phantom(e.phantom, e.rows, e.cols, cfg.seed)?)
}

#[derive(Serialize)]
struct TruthMetadata<'a> {
    seed: u64,
    phantom: PhantomKind,
    rows: usize,
    cols: usize,
    sigma2: f64,
    epsilon: f64,
    measurements: usize,
    requested_ratio: f64,
    achieved_ratio: f64,
    pattern_fallback: bool,
    sources: &'a [Source],
}

fn cmd_simulate(cfg: &RunConfig) -> Result<String, CliError> {
    let e = &cfg.experiment;
    let phantom = generated_phantom(cfg)?;
    let (pattern_seed, noise_seed) = cell_seeds(cfg.seed, 0);
    let generated = measurement_pattern(&e.pattern, e.rows, e.cols, e.sampling_ratio, pattern_seed)?;
    if generated.fallback {
        log::warn!("sampling pattern needed the deterministic fill-in");
    }
    let phi = operator_for_pattern(&e.pattern, generated.pattern.clone())?;
    let problem = simulate_problem(&phantom.image, phi, e.sigma2, noise_seed)?;

    let mut out = Staging::new();
    out.add("truth.buqo", image_bytes(&phantom.image)?);
    out.add_with("pattern.freq", |w| io::write_pattern(w, &generated.pattern))?;
    out.add_with("measurements.cplx", |w| io::write_measurements(w, problem.data()))?;
    let mut structures = Vec::new();
    for name in ["bright", "faint", "empty", "background"] {
        if let Some(spec) = builtin_structure(name, &phantom) {
            let file = format!("{name}.struct");
            out.add_with(file.clone(), |w| io::write_structure(w, &spec))?;
            structures.push(file);
        }
    }
    let meta = TruthMetadata {
        seed: cfg.seed,
        phantom: e.phantom,
        rows: e.rows,
        cols: e.cols,
        sigma2: e.sigma2,
        epsilon: problem.epsilon(),
        measurements: problem.data().len(),
        requested_ratio: e.sampling_ratio,
        achieved_ratio: generated.pattern.n_selected() as f64 / (e.rows * e.cols) as f64,
        pattern_fallback: generated.fallback,
        sources: &phantom.sources,
    };
    out.add(
        "truth.toml",
        toml::to_string(&meta).expect("metadata serializes").into_bytes(),
    );

    let mut next = cfg.clone();
    next.command = None;
    next.out = RunConfig::default().out;
    next.input = Default::default();
    next.input.truth = Some("truth.buqo".into());
    next.input.pattern = Some("pattern.freq".into());
    next.input.measurements = Some("measurements.cplx".into());
    next.input.structure = Some("bright.struct".into());
    out.add("run.toml", next.to_flat_toml().into_bytes());

    out.commit(&cfg.out, CommandName::Simulate, cfg.seed)?;
    Ok(format!(
        "simulated {}x{} phantom, {} measurements, epsilon = {:.6}; structures: {}\nwrote {}\n",
        e.rows,
        e.cols,
        meta.measurements,
        meta.epsilon,
        structures.join(", "),
        cfg.out.display()
    ))
}

/// Problem from the pattern and measurement files.
pub fn load_problem(cfg: &RunConfig) -> Result<MapProblem, CliError> {
    let pattern = io::load_pattern(required(&cfg.input.pattern, "input.pattern")?)?;
    let y = io::load_measurements(required(&cfg.input.measurements, "input.measurements")?)?;
    let (rows, cols) = (pattern.rows(), pattern.cols());
    let phi = operator_for_pattern(&cfg.experiment.pattern, pattern)?;
    let epsilon = match cfg.experiment.epsilon {
        Some(e) => e,
        None => compute_epsilon_bound(cfg.experiment.sigma2.sqrt(), y.len())?,
    };
    Ok(MapProblem::new(phi, default_wavelet(rows, cols)?, y, epsilon, rows, cols)?)
}

#[derive(Serialize)]
struct MapSummary {
    converged: bool,
    iterations: usize,
    epsilon: f64,
    data_residual: f64,
    feasibility_gap: f64,
    sparsity: f64,
    lambda: Option<f64>,
}

fn cmd_map(cfg: &RunConfig) -> Result<String, CliError> {
    let problem = load_problem(cfg)?;
    let settings = cfg.settings();
    let map = solve_map(&problem, &settings.map).map_err(stage(Stage::Map))?;
    if !map.converged {
        log::warn!("MAP solver stopped at the iteration cap");
    }
    let summary = MapSummary {
        converged: map.converged,
        iterations: map.diagnostics.iterations,
        epsilon: problem.epsilon(),
        data_residual: problem.data_residual(map.image.as_slice()),
        feasibility_gap: map.diagnostics.feasibility_gap,
        sparsity: problem.sparsity(map.image.as_slice()),
        lambda: compute_lambda(&map.image, &**problem.psi()).ok(),
    };
    let mut out = Staging::new();
    out.add("x_map.buqo", image_bytes(&map.image)?);
    let text = toml::to_string(&summary).expect("summary serializes");
    out.add("map.toml", text.clone().into_bytes());
    out.commit(&cfg.out, CommandName::Map, cfg.seed)?;
    Ok(text)
}

fn cmd_test(cfg: &RunConfig) -> Result<String, CliError> {
    let problem = load_problem(cfg)?;
    let spec = io::load_structure(required(&cfg.input.structure, "input.structure")?)?;
    let settings = cfg.settings();
    let (x_map, converged) = match &cfg.input.map {
        Some(p) => (io::load_image(p)?, true),
        None => {
            buqo::credible_region::compute_tau_alpha(settings.alpha, problem.n_pixels()).map_err(stage(Stage::Region))?;
            let map = solve_map(&problem, &settings.map).map_err(stage(Stage::Map))?;
            (map.image, map.converged)
        }
    };
    let outcome = run_buqo_from_map(&problem, &x_map, converged, &spec, &settings)?;
    let record = OutcomeRecord::from(&outcome);

    let mut out = Staging::new();
    out.add("x_map.buqo", image_bytes(&outcome.x_map)?);
    out.add("x_region.buqo", image_bytes(&outcome.x_region)?);
    out.add("x_set.buqo", image_bytes(&outcome.x_set)?);
    out.add("outcome.txt", record.to_text().into_bytes());
    let mut series = String::from("iteration\tdistance\n");
    for (k, d) in outcome.delta_series.iter().enumerate() {
        series.push_str(&format!("{k}\t{d:e}\n"));
    }
    out.add("distances.tsv", series.into_bytes());
    out.commit(&cfg.out, CommandName::Test, cfg.seed)?;
    Ok(verdict_text(&record))
}

fn verdict_text(r: &OutcomeRecord) -> String {
    format!(
        "{}\ndistance = {:.6e}, iterations = {}, stop = {}\n",
        r.narrative,
        r.distance,
        r.iterations,
        r.stop_reason.as_str()
    )
}

fn cmd_grid(cfg: &RunConfig) -> Result<String, CliError> {
    let e = &cfg.experiment;
    let generated = match &cfg.input.truth {
        Some(_) => None,
        None => Some(generated_phantom(cfg)?),
    };
    let phantom_image = match (&cfg.input.truth, &generated) {
        (Some(p), _) => io::load_image(p)?,
        (None, Some(g)) => g.image.clone(),
        (None, None) => unreachable!("phantom is generated when no truth file is given"),
    };
    let mut structures = Vec::new();
    for name in &e.structures {
        let spec = match generated.as_ref().and_then(|g| builtin_structure(name, g)) {
            Some(s) => s,
            None if name == "background" => StructureSpec::background(),
            None => io::load_structure(Path::new(name))
                .map_err(|err| CliError::Config(format!("structure `{name}` is neither built in nor a readable file: {err}")))?,
        };
        let short = Path::new(name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| name.clone());
        structures.push(NamedStructure { name: short, spec });
    }
    let spec = ExperimentSpec {
        phantom: phantom_image.clone(),
        pattern_kind: e.pattern,
        sampling_ratios: e.sampling_ratios.clone(),
        noise_variances: e.noise_variances.clone(),
        structures,
        settings: cfg.settings(),
        seed: cfg.seed,
    };
    spec.validate().map_err(|err| CliError::Config(err.to_string()))?;
    let report = run_grid(&spec)?;
    for c in &report.cells {
        log::info!("cell {} ratio {} sigma2 {}: {:.3} s", c.structure, c.ratio, c.sigma2, c.seconds);
    }

    let mut out = Staging::new();
    out.add("truth.buqo", image_bytes(&phantom_image)?);
    out.add("grid.tsv", report.to_tsv().into_bytes());
    let mut printed = String::new();
    for s in &spec.structures {
        let table = rho_table(&spec.sampling_ratios, &spec.noise_variances, &report.rho_matrix(&s.name));
        printed.push_str(&format!("rho_alpha (%) for `{}`\n{table}\n", s.name));
        out.add(format!("rho_{}.tsv", s.name), table.into_bytes());
    }
    let mut maps_done = Vec::new();
    for c in &report.cells {
        let Ok(summary) = &c.outcome else { continue };
        let tag = format!("r{}_s{}", c.ratio, c.sigma2);
        if !maps_done.contains(&tag) {
            out.add(format!("images/map_{tag}.buqo"), image_bytes(&summary.x_map)?);
            maps_done.push(tag.clone());
        }
        out.add(format!("images/{}_{tag}_region.buqo", c.structure), image_bytes(&summary.x_region)?);
        out.add(format!("images/{}_{tag}_set.buqo", c.structure), image_bytes(&summary.x_set)?);
    }
    out.commit(&cfg.out, CommandName::Grid, cfg.seed)?;
    Ok(printed)
}

/// Ratios down the rows, variances across the columns.
fn rho_table(ratios: &[f64], variances: &[f64], matrix: &[Vec<Option<f64>>]) -> String {
    let mut t = String::from("ratio\\sigma2");
    for v in variances {
        t.push_str(&format!("\t{v}"));
    }
    t.push('\n');
    for (r, row) in ratios.iter().zip(matrix) {
        t.push_str(&r.to_string());
        for cell in row {
            match cell {
                Some(v) => t.push_str(&format!("\t{v:.2}")),
                None => t.push_str("\t-"),
            }
        }
        t.push('\n');
    }
    t
}

/// `(structure, ratio, sigma2) -> rho in percent` from a grid table.
pub fn parse_grid_tsv(text: &str) -> Result<BTreeMap<String, Vec<(f64, f64, Option<f64>)>>, CliError> {
    let bad = |line: &str| CliError::Config(format!("malformed grid row `{line}`"));
    let mut out: BTreeMap<String, Vec<(f64, f64, Option<f64>)>> = BTreeMap::new();
    for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 4 {
            return Err(bad(line));
        }
        let ratio = f[1].parse().map_err(|_| bad(line))?;
        let sigma2 = f[2].parse().map_err(|_| bad(line))?;
        let rho = if f[3].is_empty() { None } else { Some(f[3].parse().map_err(|_| bad(line))?) };
        out.entry(f[0].to_string()).or_default().push((ratio, sigma2, rho));
    }
    Ok(out)
}

fn cmd_report(cfg: &RunConfig) -> Result<String, CliError> {
    if cfg.input.outcome.is_none() && cfg.input.grid.is_none() {
        return Err(CliError::Config("`report` needs `input.outcome` or `input.grid`".into()));
    }
    let mut out = Staging::new();
    let mut md = String::new();
    if let Some(p) = &cfg.input.outcome {
        let record = OutcomeRecord::from_text(&std::fs::read_to_string(p)?)?;
        md.push_str(&format!(
            "# Test outcome\n\n{}\n\n| quantity | value |\n|---|---|\n| rho_alpha | {:.2}% |\n| eta | {:.2}% |\n| alpha | {:.2}% |\n| decision | {} |\n| distance | {:.6e} |\n| iterations | {} |\n| stop reason | {} |\n| lambda | {:.6e} |\n| eta_tilde | {:.6e} |\n| tau_alpha | {:.6e} |\n",
            record.narrative,
            100.0 * record.rho_alpha,
            100.0 * record.eta,
            100.0 * record.alpha,
            record.decision.as_str(),
            record.distance,
            record.iterations,
            record.stop_reason.as_str(),
            record.lambda,
            record.eta_tilde,
            record.tau_alpha,
        ));
        out.add("outcome.txt", record.to_text().into_bytes());
    }
    if let Some(p) = &cfg.input.grid {
        let grid = parse_grid_tsv(&std::fs::read_to_string(p)?)?;
        for (name, cells) in &grid {
            let mut ratios: Vec<f64> = Vec::new();
            let mut vars: Vec<f64> = Vec::new();
            for &(r, v, _) in cells {
                if !ratios.contains(&r) {
                    ratios.push(r);
                }
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            md.push_str(&format!("\n# rho_alpha (%) for `{name}`\n\n| M/N \\ sigma2 |"));
            for v in &vars {
                md.push_str(&format!(" {v} |"));
            }
            md.push_str(&format!("\n|---|{}\n", "---|".repeat(vars.len())));
            for r in &ratios {
                md.push_str(&format!("| {r} |"));
                for v in &vars {
                    let cell = cells.iter().find(|c| c.0 == *r && c.1 == *v).and_then(|c| c.2);
                    match cell {
                        Some(x) => md.push_str(&format!(" {x:.2} |")),
                        None => md.push_str(" - |"),
                    }
                }
                md.push('\n');
            }
        }
    }
    out.add("report.md", md.clone().into_bytes());
    out.commit(&cfg.out, CommandName::Report, cfg.seed)?;
    Ok(md)
}
