//! Subcommand dispatch.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mpemba_core::ensembles::enumerate_monomial_cliffords;
use mpemba_core::markov::{
    channel_eigenvalues, channel_spectrum, evolve_markov, fixed_gate_channel, slow_mode_overlap, steady_state,
    tilted_product_density,
};
use mpemba_core::protocols::{detect_crossing_with, preheat_label, value_label, CrossingRule};
use mpemba_core::{run_qme, run_qpme, CrossingReport, Engine, Mode, TimeSeries};

use crate::config::{echo_experiment, echo_markov, experiment_from_keys, load_keys, markov_from_keys};
use crate::output::{crossings_csv, format_g12, series_file_name, series_svg, write_file, write_series_csv, RunManifest};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Qme,
    Qpme,
    Markov,
    EnumerateGates,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Qme => "qme",
            Command::Qpme => "qpme",
            Command::Markov => "markov",
            Command::EnumerateGates => "enumerate-gates",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    /// Overrides `master_seed` from the file.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// `key=value` assignments applied after the file.
    pub overrides: Vec<String>,
}

/// Runs `command` and writes its outputs and `manifest.txt` into `opts.out`.
pub fn run(command: Command, opts: &RunOptions) -> Result<RunManifest, CliError> {
    match opts.threads {
        Some(0) => Err(CliError::Config("threads: must be ≥ 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
            pool.install(|| run_in_pool(command, opts))
        }
        None => run_in_pool(command, opts),
    }
}

fn run_in_pool(command: Command, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let mut manifest = match command {
        Command::Qme => run_experiment(Mode::Qme, opts)?,
        Command::Qpme => run_experiment(Mode::Qpme, opts)?,
        Command::Markov => run_markov(opts)?,
        Command::EnumerateGates => run_enumerate(opts)?,
    };
    manifest.subcommand = command.name().into();
    manifest.threads = opts.threads;
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    let path = opts.out.join("manifest.txt");
    manifest.outputs.push(path.clone());
    manifest.write(&path)?;
    Ok(manifest)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn empty_manifest(config_echo: String, master_seed: Option<u64>) -> RunManifest {
    RunManifest {
        subcommand: String::new(),
        config_echo,
        master_seed,
        code_version: env!("CARGO_PKG_VERSION").into(),
        threads: None,
        wall_time_seconds: 0.0,
        outputs: Vec::new(),
        notes: Vec::new(),
    }
}

fn write_all_series(series: &[TimeSeries], out: &Path, manifest: &mut RunManifest) -> Result<(), CliError> {
    for s in series {
        let path = out.join(series_file_name(&s.label));
        write_series_csv(s, &path)?;
        manifest.outputs.push(path);
    }
    Ok(())
}

fn write_crossings(reports: &[CrossingReport], out: &Path, manifest: &mut RunManifest) -> Result<(), CliError> {
    let path = out.join("crossings.csv");
    write_file(&path, &crossings_csv(reports)?)?;
    manifest.outputs.push(path);
    Ok(())
}

fn write_svg(series: &[TimeSeries], title: &str, out: &Path, manifest: &mut RunManifest) -> Result<(), CliError> {
    let path = out.join("plot.svg");
    write_file(&path, &series_svg(series, title))?;
    manifest.outputs.push(path);
    Ok(())
}

fn all_pairs(series: &[TimeSeries], rule: CrossingRule) -> Result<Vec<CrossingReport>, CliError> {
    let mut reports = Vec::new();
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            reports.push(detect_crossing_with(&series[i], &series[j], rule)?);
        }
    }
    Ok(reports)
}

fn run_experiment(mode: Mode, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let mut kv = load_keys(opts.config.as_deref(), &opts.overrides)?;
    if let Some(seed) = opts.seed {
        kv.set(&format!("master_seed={seed}"))?;
    }
    let file = experiment_from_keys(&kv, mode)?;
    let cfg = &file.experiment;
    log::info!("resolved configuration:\n{}", echo_experiment(&file));
    let series = match mode {
        Mode::Qme => run_qme(cfg)?,
        Mode::Qpme => run_qpme(cfg)?,
    };
    let reports = match mode {
        Mode::Qme => all_pairs(&series, cfg.crossing)?,
        Mode::Qpme => {
            let baseline_label = preheat_label(0);
            let baseline = series
                .iter()
                .find(|s| s.label == baseline_label)
                .ok_or_else(|| CliError::Runtime("qpme run produced no T=0 baseline".into()))?;
            series
                .iter()
                .filter(|s| s.label != baseline_label)
                .map(|s| detect_crossing_with(s, baseline, cfg.crossing))
                .collect::<Result<_, _>>()?
        }
    };

    prepare_out(&opts.out)?;
    let mut manifest = empty_manifest(echo_experiment(&file), Some(cfg.master_seed));
    write_all_series(&series, &opts.out, &mut manifest)?;
    write_crossings(&reports, &opts.out, &mut manifest)?;
    if file.svg {
        let title = format!("{} {} N={} N_A={}", mode, cfg.resource, cfg.n_sites, cfg.region_size);
        write_svg(&series, &title, &opts.out, &mut manifest)?;
    }
    Ok(manifest)
}

fn run_markov(opts: &RunOptions) -> Result<RunManifest, CliError> {
    let kv = load_keys(opts.config.as_deref(), &opts.overrides)?;
    let cfg = markov_from_keys(&kv)?;
    log::info!("resolved configuration:\n{}", echo_markov(&cfg));
    let channel = fixed_gate_channel(cfg.n_sites, cfg.n_a, cfg.reunitarize)?;
    prepare_out(&opts.out)?;
    let mut manifest = empty_manifest(echo_markov(&cfg), opts.seed);

    let mut spectrum_text = String::from("index,mu_re,mu_im,modulus,lambda_re,lambda_im\n");
    for (k, mu) in channel_eigenvalues(&channel).iter().enumerate() {
        let lambda = mu.ln();
        writeln!(
            spectrum_text,
            "{},{},{},{},{},{}",
            k + 1,
            format_g12(mu.re),
            format_g12(mu.im),
            format_g12(mu.norm()),
            format_g12(lambda.re),
            format_g12(lambda.im)
        )
        .expect("write to string");
    }
    let path = opts.out.join("spectrum.csv");
    write_file(&path, &spectrum_text)?;
    manifest.outputs.push(path);
    manifest.notes.push(format!("trace_preservation_deviation: {:e}", channel.trace_preservation_deviation()));

    match steady_state(&channel) {
        Ok(ss) => {
            let d = ss.dim();
            let dev = (0..d)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let target = if i == j { 1.0 / d as f64 } else { 0.0 };
                    (ss.matrix()[(i, j)] - target).norm()
                })
                .fold(0.0, f64::max);
            manifest.notes.push(format!("steady_state_deviation_from_maximally_mixed: {dev:e}"));
        }
        Err(e) => manifest.notes.push(format!("steady state unavailable: {e}")),
    }

    match channel_spectrum(&channel) {
        Ok(spectrum) => {
            let mut text = String::from("theta,overlap\n");
            for &theta in &cfg.theta_values {
                let overlap = slow_mode_overlap(&spectrum, &tilted_product_density(cfg.n_a, theta)?)?;
                writeln!(text, "{theta},{}", format_g12(overlap)).expect("write to string");
            }
            let path = opts.out.join("overlaps.csv");
            write_file(&path, &text)?;
            manifest.outputs.push(path);
        }
        Err(e) => {
            log::warn!("slow-mode overlaps skipped: {e}");
            manifest.notes.push(format!("slow-mode overlaps unavailable: {e}"));
        }
    }

    let mut series = Vec::with_capacity(cfg.theta_values.len());
    for &theta in &cfg.theta_values {
        let trajectory = evolve_markov(&channel, &tilted_product_density(cfg.n_a, theta)?, cfg.steps)?;
        let c = trajectory.coherence;
        series.push(TimeSeries::new(value_label(Engine::Dense, theta), c.depths, c.mean, c.stderr, c.n_realizations)?);
    }
    write_all_series(&series, &opts.out, &mut manifest)?;
    write_crossings(&all_pairs(&series, cfg.crossing)?, &opts.out, &mut manifest)?;
    if cfg.svg {
        let title = format!("markov N={} N_A={}", cfg.n_sites, cfg.n_a);
        write_svg(&series, &title, &opts.out, &mut manifest)?;
    }
    Ok(manifest)
}

fn run_enumerate(opts: &RunOptions) -> Result<RunManifest, CliError> {
    if opts.config.is_some() || !opts.overrides.is_empty() {
        return Err(CliError::Config("enumerate-gates takes no configuration".into()));
    }
    let gates = enumerate_monomial_cliffords();
    let mut text = String::from("gate_index,row,col,re,im\n");
    for (idx, gate) in gates.iter().enumerate() {
        let m = gate.matrix();
        for row in 0..m.nrows() {
            for col in 0..m.ncols() {
                let z = m[(row, col)];
                if z.norm() > 0.0 {
                    writeln!(text, "{idx},{row},{col},{},{}", format_g12(z.re), format_g12(z.im)).expect("write to string");
                }
            }
        }
    }
    prepare_out(&opts.out)?;
    let mut manifest = empty_manifest(String::new(), None);
    let path = opts.out.join("gates.csv");
    write_file(&path, &text)?;
    manifest.outputs.push(path);
    manifest.notes.push(format!("gate_count: {}", gates.len()));
    Ok(manifest)
}
