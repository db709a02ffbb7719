//! Command implementations behind the `qotsim` binary.
//!
//! Every command resolves a [`RunConfig`] from an optional config file plus
//! flag overrides, then reads and writes plain files under `output_dir`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qot_core::config::RunConfig;
use qot_core::pipelines::{self, EvaluationReport, Framework, RunOutput};
use qot_core::{Dataset, SliceProfile};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] qot_core::Error),
    /// Outputs were written, but some training data was degenerate.
    #[error("warning: {0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(qot_core::Error::Io { .. }) => EXIT_IO,
            CliError::Core(_) => EXIT_VALIDATION,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "qotsim", version, about = "QoT dataset generation and classifier comparison")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate traffic and write dataset.csv plus one file per slice.
    Generate {
        #[command(flatten)]
        settings: Settings,
    },
    /// Train and evaluate one framework.
    Train {
        #[arg(value_enum)]
        mode: Mode,
        /// Dataset file(s); defaults to the files written by `generate`.
        #[arg(long = "dataset", value_name = "PATH")]
        datasets: Vec<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Compare evaluation reports written by `train`.
    Report {
        /// Report CSV files (at least two).
        reports: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Leave training times out, giving output that is identical across reruns.
        #[arg(long)]
        no_timing: bool,
        /// Also write the comparison to this file.
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Topology utilities.
    Topo {
        #[command(subcommand)]
        command: TopoCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum TopoCommand {
    /// Parse a topology file and print its statistics.
    Validate {
        /// Topology file; the bundled backbone when omitted.
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Centralized,
    Distributed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

/// Config file plus one override flag per config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Flat `key = value` config file.
    #[arg(long, short = 'c', value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub topology: Option<String>,
    #[arg(long)]
    pub requests: Option<String>,
    #[arg(long = "load-erlangs")]
    pub load_erlangs: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Comma-separated slice BER thresholds, increasing.
    #[arg(long = "bers", alias = "ber-thresholds")]
    pub ber_thresholds: Option<String>,
    #[arg(long = "bitrate-min")]
    pub bitrate_min: Option<String>,
    #[arg(long = "bitrate-max")]
    pub bitrate_max: Option<String>,
    #[arg(long = "slots-per-link")]
    pub slots_per_link: Option<String>,
    #[arg(long = "slot-width-ghz")]
    pub slot_width_ghz: Option<String>,
    #[arg(long = "baud-rate-gbaud")]
    pub baud_rate_gbaud: Option<String>,
    #[arg(long = "reach-table")]
    pub reach_table: Option<String>,
    #[arg(long = "span-length-km")]
    pub span_length_km: Option<String>,
    #[arg(long = "noise-figure-db")]
    pub noise_figure_db: Option<String>,
    #[arg(long = "fiber-loss-db-per-km")]
    pub fiber_loss_db_per_km: Option<String>,
    #[arg(long = "launch-power-dbm", allow_hyphen_values = true)]
    pub launch_power_dbm: Option<String>,
    #[arg(long = "reference-bandwidth-ghz")]
    pub reference_bandwidth_ghz: Option<String>,
    #[arg(long = "nonlinear-penalty-db-per-1000km")]
    pub nonlinear_penalty_db_per_1000km: Option<String>,
    #[arg(long = "hidden-units")]
    pub hidden_units: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long = "batch-size")]
    pub batch_size: Option<String>,
    #[arg(long = "learning-rate")]
    pub learning_rate: Option<String>,
    #[arg(long = "validation-fraction")]
    pub validation_fraction: Option<String>,
    #[arg(long)]
    pub folds: Option<String>,
    /// `strict` (v < j) or `inclusive` (v <= j).
    #[arg(long = "feasibility-rule")]
    pub feasibility_rule: Option<String>,
    #[arg(long = "out", alias = "output-dir")]
    pub output_dir: Option<String>,
    /// Parallel distributed trainings; defaults to the number of slices.
    #[arg(long)]
    pub jobs: Option<String>,
}

impl Settings {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let fields: [(&'static str, &Option<String>); 26] = [
            ("topology", &self.topology),
            ("requests", &self.requests),
            ("load_erlangs", &self.load_erlangs),
            ("seed", &self.seed),
            ("ber_thresholds", &self.ber_thresholds),
            ("bitrate_min", &self.bitrate_min),
            ("bitrate_max", &self.bitrate_max),
            ("slots_per_link", &self.slots_per_link),
            ("slot_width_ghz", &self.slot_width_ghz),
            ("baud_rate_gbaud", &self.baud_rate_gbaud),
            ("reach_table", &self.reach_table),
            ("span_length_km", &self.span_length_km),
            ("noise_figure_db", &self.noise_figure_db),
            ("fiber_loss_db_per_km", &self.fiber_loss_db_per_km),
            ("launch_power_dbm", &self.launch_power_dbm),
            ("reference_bandwidth_ghz", &self.reference_bandwidth_ghz),
            ("nonlinear_penalty_db_per_1000km", &self.nonlinear_penalty_db_per_1000km),
            ("hidden_units", &self.hidden_units),
            ("epochs", &self.epochs),
            ("batch_size", &self.batch_size),
            ("learning_rate", &self.learning_rate),
            ("validation_fraction", &self.validation_fraction),
            ("folds", &self.folds),
            ("feasibility_rule", &self.feasibility_rule),
            ("output_dir", &self.output_dir),
            ("jobs", &self.jobs),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }

    /// Config file values, then flag overrides, then validation.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| qot_core::Error::io(path, e))?;
                let mut c = RunConfig::default();
                for (k, v) in qot_core::config::parse_pairs(&text)? {
                    c.set(&k, &v)?;
                }
                c
            }
            None => RunConfig::default(),
        };
        for (key, value) in self.overrides() {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| qot_core::Error::io(path, e).into())
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| qot_core::Error::io(path, e).into())
}

pub fn dataset_path(dir: &Path) -> PathBuf {
    dir.join("dataset.csv")
}

pub fn slice_dataset_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("dataset_slice_{k}.csv"))
}

/// Runs one parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Generate { settings } => cmd_generate(&settings.resolve()?, out),
        Command::Train {
            mode,
            datasets,
            settings,
        } => cmd_train(mode, &datasets, &settings.resolve()?, out),
        Command::Report {
            reports,
            format,
            no_timing,
            output,
        } => cmd_report(&reports, format, !no_timing, output.as_deref(), out),
        Command::Topo {
            command: TopoCommand::Validate { path },
        } => cmd_topo_validate(path.as_deref(), out),
    }
}

fn say(out: &mut dyn Write, text: &str) {
    // Console output is best effort; files carry the results.
    let _ = out.write_all(text.as_bytes());
}

pub fn cmd_generate(config: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let dataset = pipelines::generate_dataset(config)?;
    let histogram = dataset.class_histogram();
    say(
        out,
        &format!(
            "{} lightpaths established from {} requests ({} blocked)\nclass histogram {:?}\n",
            dataset.len(),
            config.traffic.requests,
            config.traffic.requests - dataset.len(),
            histogram
        ),
    );
    pipelines::check_class_coverage(&dataset)?;
    create_dir(&config.output_dir)?;
    dataset.write_csv(&dataset_path(&config.output_dir))?;
    for (i, slice) in dataset.partition().iter().enumerate() {
        let k = i + 1;
        let feasible = slice.patterns.iter().filter(|p| p.binary == 1).count();
        say(
            out,
            &format!(
                "slice {k}: {} patterns, {feasible} feasible, {} infeasible\n",
                slice.len(),
                slice.len() - feasible
            ),
        );
        slice.write_csv(&slice_dataset_path(&config.output_dir, k))?;
    }
    say(out, &format!("wrote {}\n", config.output_dir.display()));
    Ok(())
}

fn load_dataset(path: &Path, profile: &SliceProfile) -> CliResult<Dataset> {
    let dataset = Dataset::read_csv(path)?;
    if dataset.profile == *profile {
        return Ok(dataset);
    }
    if dataset.profile.slice_count() != profile.slice_count() {
        return Err(qot_core::Error::Validation(format!(
            "{} was generated for {} slices but {} thresholds are configured; regenerate it with the same --bers",
            path.display(),
            dataset.profile.slice_count(),
            profile.slice_count()
        ))
        .into());
    }
    Ok(dataset.relabeled(profile.clone())?)
}

fn timing_csv(seconds: &[f64]) -> String {
    let mut s = String::from("repetition,seconds\n");
    for (i, t) in seconds.iter().enumerate() {
        s.push_str(&format!("{},{t:?}\n", i + 1));
    }
    s
}

/// Reads the `timing_<name>.csv` written next to `report_<name>.csv`.
pub fn read_timing(report_path: &Path) -> CliResult<Option<Vec<f64>>> {
    let Some(name) = report_path.file_name().and_then(|n| n.to_str()) else {
        return Ok(None);
    };
    let Some(stem) = name.strip_prefix("report_") else {
        return Ok(None);
    };
    let path = report_path.with_file_name(format!("timing_{stem}"));
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| qot_core::Error::io(&path, e))?;
    let seconds = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .nth(1)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| qot_core::Error::Validation(format!("{}: malformed timing row {l:?}", path.display())))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(Some(seconds))
}

fn save_run(dir: &Path, name: &str, output: &RunOutput) -> CliResult<()> {
    output.model.write(&dir.join(format!("model_{name}.txt")))?;
    write_file(&dir.join(format!("report_{name}.csv")), &output.report.to_csv())?;
    write_file(&dir.join(format!("report_{name}.txt")), &output.report.to_text())?;
    if let Some(seconds) = &output.report.training_seconds {
        write_file(&dir.join(format!("timing_{name}.csv")), &timing_csv(seconds))?;
    }
    Ok(())
}

pub fn cmd_train(mode: Mode, datasets: &[PathBuf], config: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let dir = &config.output_dir;
    let profile = &config.profile;
    let mut degenerate = Vec::new();
    match mode {
        Mode::Centralized => {
            let path = match datasets {
                [] => dataset_path(dir),
                [one] => one.clone(),
                _ => return Err(CliError::Usage("centralized training takes one --dataset".into())),
            };
            let dataset = load_dataset(&path, profile)?;
            if dataset.provenance.slice.is_some() {
                return Err(CliError::Usage(format!(
                    "{} is a slice dataset; centralized training needs the full dataset",
                    path.display()
                )));
            }
            let hash = config.training_hash(&dataset.provenance.config_hash);
            let output = pipelines::run_centralized(&dataset, &config.pipeline(&hash))?;
            create_dir(dir)?;
            save_run(dir, "centralized", &output)?;
            if output.report.degenerate {
                degenerate.push("centralized model".to_string());
            }
            say(out, &pipelines::centralized_table(std::slice::from_ref(&output.report)));
        }
        Mode::Distributed => {
            let paths: Vec<PathBuf> = if datasets.is_empty() {
                (1..=profile.slice_count()).map(|k| slice_dataset_path(dir, k)).collect()
            } else {
                datasets.to_vec()
            };
            let mut slices = Vec::with_capacity(paths.len());
            for path in &paths {
                let d = load_dataset(path, profile)?;
                if d.provenance.slice.is_some() {
                    slices.push(d);
                } else {
                    slices.extend(d.partition());
                }
            }
            let hashes: Vec<&str> = slices.iter().map(|d| d.provenance.config_hash.as_str()).collect();
            if hashes.windows(2).any(|w| w[0] != w[1]) {
                return Err(qot_core::Error::Mismatch("slice datasets come from different generation runs".into()).into());
            }
            let hash = config.training_hash(hashes.first().copied().unwrap_or_default());
            let jobs = config.jobs.unwrap_or(slices.len());
            let outputs = pipelines::run_distributed(&slices, &config.pipeline(&hash), jobs)?;
            create_dir(dir)?;
            for o in &outputs {
                let k = o.report.slice.expect("distributed reports carry a slice");
                save_run(dir, &format!("slice_{k}"), o)?;
                if o.report.degenerate {
                    degenerate.push(format!("slice {k} model"));
                }
            }
            let reports: Vec<EvaluationReport> = outputs.into_iter().map(|o| o.report).collect();
            let untimed: Vec<EvaluationReport> = reports
                .iter()
                .cloned()
                .map(|r| EvaluationReport {
                    training_seconds: None,
                    ..r
                })
                .collect();
            write_file(&dir.join("report_distributed.txt"), &pipelines::distributed_table(&untimed))?;
            say(out, &pipelines::distributed_table(&reports));
        }
    }
    say(out, &format!("wrote {}\n", dir.display()));
    if degenerate.is_empty() {
        Ok(())
    } else {
        Err(CliError::Degenerate(format!(
            "training data with fewer than two classes: {}",
            degenerate.join(", ")
        )))
    }
}

pub fn cmd_report(
    paths: &[PathBuf],
    format: Format,
    timing: bool,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    if paths.len() < 2 {
        return Err(CliError::Usage("report needs at least two report files".into()));
    }
    let mut reports = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(path).map_err(|e| qot_core::Error::io(path, e))?;
        let mut report = EvaluationReport::from_csv(&text).map_err(|e| match e {
            qot_core::Error::Parse { line, message } => qot_core::Error::Validation(format!(
                "{}: line {line}: {message}",
                path.display()
            )),
            other => other,
        })?;
        if timing {
            report.training_seconds = read_timing(path)?;
        }
        reports.push(report);
    }
    let (a, b): (Vec<_>, Vec<_>) = reports.iter().cloned().partition(|r| r.framework == Framework::Centralized);
    let (a, b) = if !a.is_empty() && !b.is_empty() {
        (a, b)
    } else if reports.len() == 2 {
        (vec![reports[0].clone()], vec![reports[1].clone()])
    } else {
        return Err(CliError::Usage(
            "give centralized and distributed reports, or exactly two reports to compare".into(),
        ));
    };
    let comparison = pipelines::compare(&a, &b)?;
    let text = match format {
        Format::Csv => comparison.to_csv(),
        Format::Text => {
            let mut t = String::new();
            let central: Vec<_> = reports.iter().filter(|r| r.framework == Framework::Centralized).cloned().collect();
            let distributed: Vec<_> = reports.iter().filter(|r| r.framework == Framework::Distributed).cloned().collect();
            if !central.is_empty() {
                t.push_str(&pipelines::centralized_table(&central));
                t.push('\n');
            }
            if !distributed.is_empty() {
                t.push_str(&pipelines::distributed_table(&distributed));
                t.push('\n');
            }
            t.push_str(&comparison.to_text());
            t
        }
    };
    if let Some(path) = output {
        write_file(path, &text)?;
    }
    say(out, &text);
    Ok(())
}

pub fn cmd_topo_validate(path: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| qot_core::Error::io(p, e))?,
        None => qot_core::topology::DEFAULT_TOPOLOGY.to_string(),
    };
    let topology = qot_core::load_topology(&text)?;
    let lengths: Vec<f64> = topology.links().iter().map(|l| l.length_km).collect();
    let degrees: Vec<usize> = (0..topology.node_count()).map(|n| topology.neighbors(n).len()).collect();
    let min = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let max = lengths.iter().copied().fold(0.0, f64::max);
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    say(
        out,
        &format!(
            "ok: {} nodes, {} links\nlink length km: min {min:.1}, mean {mean:.1}, max {max:.1}\nnode degree: min {}, max {}\n",
            topology.node_count(),
            topology.links().len(),
            degrees.iter().min().unwrap_or(&0),
            degrees.iter().max().unwrap_or(&0)
        ),
    );
    Ok(())
}
