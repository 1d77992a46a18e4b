//! The four subcommands: landscape, trajectory, abm, sweep.

use std::collections::HashSet;
use std::path::Path;
use std::time::Instant;

use normscape_core::abm::{run_simulation, SimConfig};
use normscape_core::export;
use normscape_core::meanfield::{compute_landscape, trajectory};
use normscape_core::sensitivity::{
    bootstrap_ci, row_outputs, run_sweep_jobs, saltelli_sample, sobol_indices, JobOutputs,
    SweepJobRecord, OUTPUT_NAMES,
};

use crate::config::{load_config, LandscapeConfig, SweepConfig, TrajectoryConfig};
use crate::manifest::RunManifest;
use crate::CliError;

fn write_file(out_dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = out_dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn prepare_out_dir(out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", out_dir.display())))
}

fn check_failure_budget(failures: u64, solves: u64, budget: f64) -> Result<(), CliError> {
    if solves == 0 {
        return Ok(());
    }
    let fraction = failures as f64 / solves as f64;
    if fraction > budget {
        return Err(CliError::FailureBudget(format!(
            "{failures}/{solves} QRE solves ({:.2}%) hit the iteration cap, budget {:.2}%",
            100.0 * fraction,
            100.0 * budget
        )));
    }
    Ok(())
}

pub fn cmd_landscape(
    config_path: &Path,
    seed: u64,
    out_dir: &Path,
    failure_budget: f64,
) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg: LandscapeConfig = load_config(config_path)?;
    let opts = cfg.landscape_options()?;
    let family = cfg.utility.to_family()?;
    prepare_out_dir(out_dir)?;

    let landscape = compute_landscape(cfg.grid, &cfg.traits, family, &opts);
    let solves = (cfg.grid.nu * cfg.grid.nv * cfg.nodes * cfg.nodes) as u64;

    write_file(out_dir, "landscape.csv", &export::landscape_csv(&landscape))?;
    write_file(out_dir, "attractors.json", &export::attractors_json(&landscape))?;
    write_file(
        out_dir,
        "games.csv",
        &export::game_grid_csv(&cfg.grid, opts.classify),
    )?;

    let mut manifest = RunManifest::new("landscape", seed, &cfg);
    manifest.outputs = vec![
        "landscape.csv".into(),
        "attractors.json".into(),
        "games.csv".into(),
    ];
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(out_dir)?;

    check_failure_budget(landscape.qre_failures as u64, solves, failure_budget)?;
    eprintln!(
        "landscape: {} attractors, top = {:?}",
        landscape.attractors.len(),
        landscape.attractors.first().map(|a| (a.game.u, a.game.v, a.class))
    );
    Ok(())
}

pub fn cmd_trajectory(
    config_path: &Path,
    seed: u64,
    out_dir: &Path,
    failure_budget: f64,
) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg: TrajectoryConfig = load_config(config_path)?;
    if cfg.waypoints.is_empty() {
        return Err(CliError::Config("waypoints must be non-empty".into()));
    }
    for (i, w) in cfg.waypoints.iter().enumerate() {
        if !w.0.is_finite() || !w.1.is_finite() {
            return Err(CliError::Config(format!("waypoint {i} is not finite")));
        }
    }
    let opts = cfg.landscape.landscape_options()?;
    let family = cfg.landscape.utility.to_family()?;
    prepare_out_dir(out_dir)?;

    let (points, failures) = trajectory(
        &cfg.waypoints,
        &cfg.landscape.traits,
        family,
        cfg.landscape.grid,
        &opts,
    )
    .map_err(|e| CliError::Config(format!("degenerate perception mapping: {e}")))?;
    let solves = (cfg.landscape.grid.nu
        * cfg.landscape.grid.nv
        * cfg.landscape.nodes
        * cfg.landscape.nodes
        * cfg.waypoints.len()) as u64;

    write_file(out_dir, "trajectory.csv", &export::trajectory_csv(&points))?;

    let mut manifest = RunManifest::new("trajectory", seed, &cfg);
    manifest.outputs = vec!["trajectory.csv".into()];
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(out_dir)?;

    check_failure_budget(failures as u64, solves, failure_budget)
}

pub fn cmd_abm(
    config_path: &Path,
    seed: Option<u64>,
    out_dir: &Path,
    failure_budget: f64,
) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg: SimConfig = load_config(config_path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    prepare_out_dir(out_dir)?;

    let replicates = run_simulation(&cfg).map_err(|e| CliError::Config(e.to_string()))?;

    let mut metrics = String::new();
    let mut agents = String::new();
    let mut failures = 0;
    let mut solves = 0;
    for rep in &replicates {
        let block = export::metrics_csv(&rep.metrics);
        if metrics.is_empty() {
            metrics.push_str(&block);
        } else {
            // drop the repeated header
            metrics.push_str(block.split_once('\n').map(|x| x.1).unwrap_or(""));
        }
        let block = export::agents_csv(rep.replicate, &rep.agents);
        if agents.is_empty() {
            agents.push_str(&block);
        } else {
            agents.push_str(block.split_once('\n').map(|x| x.1).unwrap_or(""));
        }
        failures += rep.diagnostics.qre_failures;
        solves += rep.diagnostics.qre_solves;
    }
    write_file(out_dir, "metrics.csv", &metrics)?;
    write_file(out_dir, "agents.csv", &agents)?;

    let mut manifest = RunManifest::new("abm", cfg.seed, &cfg);
    manifest.outputs = vec!["metrics.csv".into(), "agents.csv".into()];
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(out_dir)?;

    check_failure_budget(failures, solves, failure_budget)
}

/// Parses completed (row, replicate, outputs) entries from a partial
/// results CSV left by an interrupted sweep.
fn parse_existing_results(path: &Path, d: usize) -> Result<Vec<SweepJobRecord>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 5 {
            return Err(CliError::Io(format!(
                "{}:{}: expected {} fields, got {}",
                path.display(),
                lineno + 1,
                d + 5,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse()
                .map_err(|e| CliError::Io(format!("{}:{}: {e}", path.display(), lineno + 1)))
        };
        records.push(SweepJobRecord {
            row: fields[0]
                .parse()
                .map_err(|e| CliError::Io(format!("{}:{}: {e}", path.display(), lineno + 1)))?,
            replicate: fields[d + 1]
                .parse()
                .map_err(|e| CliError::Io(format!("{}:{}: {e}", path.display(), lineno + 1)))?,
            outputs: JobOutputs {
                gini: parse(fields[d + 2])?,
                recent_wealth: parse(fields[d + 3])?,
                zerosumness: parse(fields[d + 4])?,
            },
        });
    }
    Ok(records)
}

pub fn cmd_sweep(
    config_path: &Path,
    seed: u64,
    out_dir: &Path,
    resume: bool,
) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg: SweepConfig = load_config(config_path)?;
    cfg.sweep.validate().map_err(|e| CliError::Config(e.to_string()))?;
    cfg.base.validate().map_err(|e| CliError::Config(e.to_string()))?;
    prepare_out_dir(out_dir)?;

    let d = cfg.sweep.dimensions();
    let design = saltelli_sample(&cfg.sweep, seed);
    let results_path = out_dir.join("results.csv");

    let mut records: Vec<SweepJobRecord> = if resume && results_path.exists() {
        parse_existing_results(&results_path, d)?
    } else {
        Vec::new()
    };
    let completed: HashSet<(usize, usize)> =
        records.iter().map(|r| (r.row, r.replicate)).collect();
    let fresh = run_sweep_jobs(&cfg.base, &cfg.sweep, &design, seed, &completed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    records.extend(fresh);
    records.sort_by_key(|r| (r.row, r.replicate));

    write_file(
        out_dir,
        "results.csv",
        &export::sweep_results_csv(&cfg.sweep, &design, &records),
    )?;

    let per_output: Vec<_> = OUTPUT_NAMES
        .iter()
        .map(|&name| {
            let ys = row_outputs(&records, design.len(), name);
            let idx = sobol_indices(&ys, d, cfg.sweep.n_base);
            let ci = idx.as_ref().and_then(|_| {
                bootstrap_ci(
                    &ys,
                    d,
                    cfg.sweep.n_base,
                    cfg.sweep.bootstrap_resamples,
                    cfg.sweep.confidence,
                    seed,
                )
            });
            (name.to_string(), idx, ci)
        })
        .collect();
    write_file(out_dir, "indices.json", &export::indices_json(&cfg.sweep, &per_output))?;

    let mut manifest = RunManifest::new("sweep", seed, &cfg);
    manifest.outputs = vec!["results.csv".into(), "indices.json".into()];
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(out_dir)?;
    eprintln!(
        "sweep: {} design rows, {} jobs recorded",
        design.len(),
        records.len()
    );
    Ok(())
}
