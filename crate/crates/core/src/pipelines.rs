//! The two experimental frameworks and the reports they produce.
//!
//! A centralized run trains one `K + 1` class model on the whole dataset;
//! a distributed run trains `K` binary models, one per slice dataset. Both
//! go through [`cross_validate`] with the same seed so that every model sees
//! the same initialisation, shuffling and holdout streams.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::dataset::{Dataset, Provenance, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::metrics::{self, ConfusionMatrix};
use crate::neuralnet::{cross_validate, SavedModel, TrainConfig};
use crate::sim;
use crate::traffic::{self, SliceProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Framework {
    Centralized,
    Distributed,
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Framework::Centralized => "centralized",
            Framework::Distributed => "distributed",
        })
    }
}

impl FromStr for Framework {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centralized" => Ok(Framework::Centralized),
            "distributed" => Ok(Framework::Distributed),
            other => Err(Error::validation(format!("unknown framework {other:?}"))),
        }
    }
}

/// How a centralized class prediction `v` is turned into a decision for a
/// slice with requirement index `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeasibilityRule {
    /// Feasible iff `v < j`.
    #[default]
    Strict,
    /// Feasible iff `v <= j`, which matches the class definitions exactly.
    Inclusive,
}

impl fmt::Display for FeasibilityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeasibilityRule::Strict => "strict",
            FeasibilityRule::Inclusive => "inclusive",
        })
    }
}

impl FromStr for FeasibilityRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(FeasibilityRule::Strict),
            "inclusive" => Ok(FeasibilityRule::Inclusive),
            other => Err(Error::validation(format!(
                "feasibility rule must be strict or inclusive, found {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

/// Applies `rule` to a predicted class `v` in `1..=K+1` and a slice index
/// `j` in `1..=K`.
pub fn decide_feasibility(v: usize, j: usize, slices: usize, rule: FeasibilityRule) -> Result<Feasibility> {
    if v == 0 || v > slices + 1 {
        return Err(Error::validation(format!("class {v} outside 1..={}", slices + 1)));
    }
    if j == 0 || j > slices {
        return Err(Error::validation(format!("slice {j} outside 1..={slices}")));
    }
    let feasible = match rule {
        FeasibilityRule::Strict => v < j,
        FeasibilityRule::Inclusive => v <= j,
    };
    Ok(if feasible {
        Feasibility::Feasible
    } else {
        Feasibility::Infeasible
    })
}

/// Training settings shared by both frameworks.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub train: TrainConfig,
    pub seed: u64,
    pub rule: FeasibilityRule,
    pub config_hash: String,
}

/// Outcome of one trained model evaluated by repeated holdout.
///
/// Everything except `training_seconds` is a deterministic function of the
/// data and configuration; the CSV and text forms leave timing out so that
/// reruns produce identical files.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub framework: Framework,
    /// The slice `k` of a distributed model.
    pub slice: Option<usize>,
    pub profile: SliceProfile,
    /// Display name of each model output, in model index order.
    pub class_labels: Vec<String>,
    pub dataset_size: usize,
    /// Holdout confusion matrix of each repetition.
    pub fold_confusions: Vec<ConfusionMatrix>,
    /// Mean holdout accuracy over repetitions.
    pub overall: f64,
    /// Mean per-class holdout accuracy; `None` when a class never appeared
    /// in any holdout.
    pub per_class: Vec<Option<f64>>,
    /// Wall-clock seconds of each repetition's training, when measured.
    pub training_seconds: Option<Vec<f64>>,
    pub config_hash: String,
    pub seed: u64,
    pub rule: FeasibilityRule,
    pub validation_fraction: f64,
    /// Some training split held fewer than two classes.
    pub degenerate: bool,
}

/// Labels used for a binary model: index 0 is the feasible class.
pub const BINARY_LABELS: [&str; 2] = ["feasible", "infeasible"];

fn centralized_labels(classes: usize) -> Vec<String> {
    (1..=classes).map(|c| format!("class {c}")).collect()
}

fn fmt_option(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:?}"))
}

fn percent(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{:.2}%", 100.0 * x))
}

impl EvaluationReport {
    pub fn classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn folds(&self) -> usize {
        self.fold_confusions.len()
    }

    /// Confusion matrix summed over all repetitions.
    pub fn confusion(&self) -> ConfusionMatrix {
        let mut total = ConfusionMatrix::new(self.classes());
        for c in &self.fold_confusions {
            total.merge(c);
        }
        total
    }

    pub fn min_per_class(&self) -> Option<f64> {
        self.per_class.iter().flatten().copied().reduce(f64::min)
    }

    pub fn mean_fold_seconds(&self) -> Option<f64> {
        self.training_seconds
            .as_ref()
            .filter(|s| !s.is_empty())
            .map(|s| s.iter().sum::<f64>() / s.len() as f64)
    }

    pub fn total_seconds(&self) -> Option<f64> {
        self.training_seconds.as_ref().map(|s| s.iter().sum())
    }

    /// Recomputes the accuracies from the fold confusion matrices and checks
    /// them against the stored values.
    pub fn verify(&self) -> Result<()> {
        if self.fold_confusions.is_empty() {
            return Err(Error::validation("report has no repetitions"));
        }
        if self.fold_confusions.iter().any(|c| c.classes() != self.classes())
            || self.per_class.len() != self.classes()
        {
            return Err(Error::validation("report class count is inconsistent"));
        }
        let overall = self
            .fold_confusions
            .iter()
            .map(|c| c.accuracy().unwrap_or(0.0))
            .sum::<f64>()
            / self.folds() as f64;
        if overall != self.overall {
            return Err(Error::validation(format!(
                "overall accuracy {} does not match the confusion matrices ({overall})",
                self.overall
            )));
        }
        let per_fold: Vec<Vec<Option<f64>>> =
            self.fold_confusions.iter().map(ConfusionMatrix::per_class_accuracy).collect();
        for c in 0..self.classes() {
            let expected = metrics::mean_defined(per_fold.iter().map(|f| f[c]));
            if expected != self.per_class[c] {
                return Err(Error::validation(format!(
                    "class {} accuracy does not match the confusion matrices",
                    c + 1
                )));
            }
        }
        let in_range = |v: f64| (0.0..=1.0).contains(&v);
        if !in_range(self.overall) || !self.per_class.iter().flatten().all(|&v| in_range(v)) {
            return Err(Error::validation("accuracy outside [0, 1]"));
        }
        Ok(())
    }

    /// Machine-readable `key,value` rows without timing.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("framework".into(), self.framework.to_string()),
            ("slice".into(), self.slice.map_or(String::new(), |k| k.to_string())),
            ("ber_thresholds".into(), self.profile.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("config_hash".into(), self.config_hash.clone()),
            ("feasibility_rule".into(), self.rule.to_string()),
            ("validation_fraction".into(), format!("{:?}", self.validation_fraction)),
            ("folds".into(), self.folds().to_string()),
            ("dataset_size".into(), self.dataset_size.to_string()),
            ("class_labels".into(), self.class_labels.join(";")),
            ("degenerate".into(), self.degenerate.to_string()),
            ("overall_accuracy".into(), format!("{:?}", self.overall)),
        ];
        for (c, acc) in self.per_class.iter().enumerate() {
            rows.push((format!("class_{}_accuracy", c + 1), fmt_option(*acc)));
        }
        for (f, confusion) in self.fold_confusions.iter().enumerate() {
            let matrix: Vec<String> = (0..confusion.classes())
                .map(|t| {
                    confusion
                        .row(t)
                        .iter()
                        .map(u64::to_string)
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            rows.push((format!("fold_{}_confusion", f + 1), matrix.join(";")));
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["key", "value"]).expect("in-memory write");
        for (k, v) in rows {
            writer.write_record([k, v]).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let mut pairs = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != 2 {
                return Err(Error::parse(line, "expected key,value"));
            }
            pairs.push((record[0].to_string(), record[1].to_string(), line));
        }
        let get = |key: &str| -> Result<&str> {
            pairs
                .iter()
                .find(|(k, _, _)| k == key)
                .map(|(_, v, _)| v.as_str())
                .ok_or_else(|| Error::validation(format!("report is missing {key:?}")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| Error::validation(format!("report field {key:?} is not a number")))
        };
        let int = |key: &str| -> Result<u64> {
            get(key)?
                .parse()
                .map_err(|_| Error::validation(format!("report field {key:?} is not an integer")))
        };

        let class_labels: Vec<String> = get("class_labels")?.split(';').map(str::to_string).collect();
        let classes = class_labels.len();
        let folds = int("folds")? as usize;
        let per_class = (1..=classes)
            .map(|c| {
                let key = format!("class_{c}_accuracy");
                match get(&key)? {
                    "undefined" => Ok(None),
                    v => v
                        .parse()
                        .map(Some)
                        .map_err(|_| Error::validation(format!("report field {key:?} is not a number"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let fold_confusions = (1..=folds)
            .map(|f| {
                let key = format!("fold_{f}_confusion");
                let rows = get(&key)?
                    .split(';')
                    .map(|row| {
                        row.split_whitespace()
                            .map(|c| c.parse::<u64>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::validation(format!("report field {key:?} is malformed")))?;
                ConfusionMatrix::from_rows(rows)
                    .filter(|m| m.classes() == classes)
                    .ok_or_else(|| Error::validation(format!("report field {key:?} is not {classes}x{classes}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let slice = match get("slice")? {
            "" => None,
            s => Some(
                s.parse()
                    .map_err(|_| Error::validation("report field \"slice\" is not an integer"))?,
            ),
        };
        let degenerate = match get("degenerate")? {
            "true" => true,
            "false" => false,
            other => return Err(Error::validation(format!("degenerate must be true or false, found {other:?}"))),
        };
        let report = EvaluationReport {
            framework: get("framework")?.parse()?,
            slice,
            profile: SliceProfile::parse(get("ber_thresholds")?)?,
            class_labels,
            dataset_size: int("dataset_size")? as usize,
            fold_confusions,
            overall: num("overall_accuracy")?,
            per_class,
            training_seconds: None,
            config_hash: get("config_hash")?.to_string(),
            seed: int("seed")?,
            rule: get("feasibility_rule")?.parse()?,
            validation_fraction: num("validation_fraction")?,
            degenerate,
        };
        report.verify()?;
        Ok(report)
    }

    /// Human-readable summary of a single model.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let k = self.profile.slice_count();
        let _ = match self.slice {
            None => writeln!(out, "Centralized QoT classifier, K = {k} ({} classes)", self.classes()),
            Some(s) => writeln!(
                out,
                "Distributed QoT classifier, slice {s} of {k} (B = {:e})",
                self.profile.threshold(s)
            ),
        };
        let _ = writeln!(
            out,
            "patterns {}  seed {}  config {}  rule {}  {} x {:.0}/{:.0} holdout",
            self.dataset_size,
            self.seed,
            self.config_hash,
            self.rule,
            self.folds(),
            100.0 * (1.0 - self.validation_fraction),
            100.0 * self.validation_fraction
        );
        if self.degenerate {
            let _ = writeln!(out, "WARNING: a training split held fewer than two classes");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<28}{:>10}", "Model Acc.", percent(Some(self.overall)));
        for (c, acc) in self.per_class.iter().enumerate() {
            let name = format!("Class {} Acc. ({})", c + 1, self.class_labels[c]);
            let _ = writeln!(out, "{name:<28}{:>10}", percent(*acc));
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Confusion matrix summed over repetitions (rows truth, columns predicted)");
        let _ = write!(out, "{}", self.confusion());
        out
    }
}

/// Model trained for one report, kept from the first repetition.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: EvaluationReport,
    pub model: SavedModel,
}

fn run_one(
    dataset: &Dataset,
    targets: &[usize],
    framework: Framework,
    slice: Option<usize>,
    class_labels: Vec<String>,
    config: &PipelineConfig,
) -> Result<RunOutput> {
    let inputs: Vec<[f64; FEATURE_COUNT]> = dataset.features();
    let classes = class_labels.len();
    let cv = cross_validate(&inputs, targets, classes, &config.train, config.seed)?;
    let mut present = vec![false; classes];
    targets.iter().for_each(|&t| present[t] = true);
    let report = EvaluationReport {
        framework,
        slice,
        profile: dataset.profile.clone(),
        class_labels,
        dataset_size: dataset.len(),
        fold_confusions: cv.folds.iter().map(|f| f.confusion.clone()).collect(),
        overall: cv.mean_accuracy(),
        per_class: cv.mean_per_class(),
        training_seconds: Some(cv.fold_seconds()),
        config_hash: config.config_hash.clone(),
        seed: config.seed,
        rule: config.rule,
        validation_fraction: config.train.validation_fraction,
        degenerate: cv.degenerate() || present.iter().any(|p| !p),
    };
    let first = &cv.folds[0];
    let mut metadata = vec![
        ("framework".to_string(), framework.to_string()),
        ("ber_thresholds".to_string(), dataset.profile.to_string()),
        ("seed".to_string(), config.seed.to_string()),
        ("config_hash".to_string(), config.config_hash.clone()),
        ("repetition".to_string(), "1".to_string()),
        ("hidden_units".to_string(), config.train.hidden_units.to_string()),
        ("epochs".to_string(), config.train.epochs.to_string()),
        ("batch_size".to_string(), config.train.batch_size.to_string()),
        ("learning_rate".to_string(), format!("{:?}", config.train.learning_rate)),
        ("validation_fraction".to_string(), format!("{:?}", config.train.validation_fraction)),
        ("train_size".to_string(), first.train_size.to_string()),
    ];
    if let Some(k) = slice {
        metadata.insert(1, ("slice".to_string(), k.to_string()));
    }
    let model = SavedModel {
        model: first.train.model.clone(),
        normalizer: first.normalizer.clone(),
        metadata,
    };
    Ok(RunOutput { report, model })
}

/// Trains and evaluates the `K + 1` class model on the full dataset.
pub fn run_centralized(dataset: &Dataset, config: &PipelineConfig) -> Result<RunOutput> {
    if dataset.provenance.slice.is_some() {
        return Err(Error::validation("centralized training needs the full dataset, not a slice"));
    }
    let classes = dataset.profile.class_count();
    run_one(
        dataset,
        &dataset.multiclass_targets(),
        Framework::Centralized,
        None,
        centralized_labels(classes),
        config,
    )
}

/// Trains one binary model per slice dataset, using up to `jobs` threads.
/// Output order follows input order and does not depend on `jobs`.
pub fn run_distributed(datasets: &[Dataset], config: &PipelineConfig, jobs: usize) -> Result<Vec<RunOutput>> {
    if datasets.is_empty() {
        return Err(Error::validation("distributed training needs at least one slice dataset"));
    }
    let slices: Vec<usize> = datasets
        .iter()
        .enumerate()
        .map(|(i, d)| d.provenance.slice.unwrap_or(i + 1))
        .collect();
    let train_one = |(dataset, &k): (&Dataset, &usize)| {
        let labels = BINARY_LABELS.iter().map(|s| s.to_string()).collect();
        run_one(
            dataset,
            &dataset.binary_targets(),
            Framework::Distributed,
            Some(k),
            labels,
            config,
        )
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::validation(format!("cannot start training threads: {e}")))?;
    pool.install(|| datasets.par_iter().zip(slices.par_iter()).map(train_one).collect())
}

/// Simulates the configured traffic and labels every established
/// lightpath, returning the full dataset `D`.
pub fn generate_dataset(config: &RunConfig) -> Result<Dataset> {
    config.validate()?;
    let (topology, text) = config.load_topology()?;
    let events = traffic::generate_requests(&config.traffic, &config.profile, topology.node_count(), config.seed)?;
    let outcome = sim::run(&topology, &events, &config.sim())?;
    let provenance = Provenance {
        seed: config.seed,
        config_hash: config.config_hash(&text),
        slice: None,
    };
    Dataset::from_lightpaths(&outcome.lightpaths, &topology, &config.phy, config.profile.clone(), provenance)
}

/// Fails with the class histogram when some QoT class has no pattern.
pub fn check_class_coverage(dataset: &Dataset) -> Result<()> {
    let histogram = dataset.class_histogram();
    if histogram.contains(&0) {
        let listing: Vec<String> = histogram
            .iter()
            .enumerate()
            .map(|(c, n)| format!("class {}: {n}", c + 1))
            .collect();
        return Err(Error::validation(format!(
            "calibration failure, empty QoT class ({})",
            listing.join(", ")
        )));
    }
    Ok(())
}

/// Aggregate view of one framework's reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Side {
    pub framework: Framework,
    pub models: usize,
    pub min_per_class: Option<f64>,
    pub mean_overall: f64,
    /// Largest mean per-repetition training time over the models.
    pub max_seconds: Option<f64>,
    /// Sum over models of the mean per-repetition training time.
    pub sum_seconds: Option<f64>,
    /// Every repetition of every model.
    pub total_seconds: Option<f64>,
}

impl Side {
    fn of(reports: &[EvaluationReport]) -> Result<Side> {
        let first = reports
            .first()
            .ok_or_else(|| Error::validation("comparison side has no reports"))?;
        if reports.iter().any(|r| r.framework != first.framework) {
            return Err(Error::Mismatch("one comparison side mixes frameworks".into()));
        }
        let means: Option<Vec<f64>> = reports.iter().map(EvaluationReport::mean_fold_seconds).collect();
        let totals: Option<Vec<f64>> = reports.iter().map(EvaluationReport::total_seconds).collect();
        Ok(Side {
            framework: first.framework,
            models: reports.len(),
            min_per_class: reports.iter().filter_map(EvaluationReport::min_per_class).reduce(f64::min),
            mean_overall: reports.iter().map(|r| r.overall).sum::<f64>() / reports.len() as f64,
            max_seconds: means.as_ref().map(|m| m.iter().copied().fold(0.0, f64::max)),
            sum_seconds: means.map(|m| m.iter().sum()),
            total_seconds: totals.map(|t| t.iter().sum()),
        })
    }
}

/// Side-by-side summary of two runs; deltas are `b - a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: Side,
    pub b: Side,
    pub seed: u64,
    pub config_hash: String,
    pub profile: SliceProfile,
}

impl Comparison {
    pub fn delta_min_per_class(&self) -> Option<f64> {
        Some(self.b.min_per_class? - self.a.min_per_class?)
    }

    pub fn delta_overall(&self) -> f64 {
        self.b.mean_overall - self.a.mean_overall
    }

    /// `b.max_seconds / a.max_seconds`.
    pub fn time_ratio(&self) -> Option<f64> {
        let (a, b) = (self.a.max_seconds?, self.b.max_seconds?);
        (a > 0.0).then(|| b / a)
    }

    fn rows(&self) -> Vec<(String, String, String)> {
        let opt = |v: Option<f64>| fmt_option(v);
        let both = |f: fn(&Side) -> Option<f64>| (opt(f(&self.a)), opt(f(&self.b)));
        let mut rows = vec![
            ("framework".to_string(), self.a.framework.to_string(), self.b.framework.to_string()),
            ("models".to_string(), self.a.models.to_string(), self.b.models.to_string()),
        ];
        let (a, b) = both(|s| s.min_per_class);
        rows.push(("min_per_class_accuracy".into(), a, b));
        rows.push((
            "overall_accuracy".into(),
            format!("{:?}", self.a.mean_overall),
            format!("{:?}", self.b.mean_overall),
        ));
        let (a, b) = both(|s| s.max_seconds);
        rows.push(("max_model_seconds".into(), a, b));
        let (a, b) = both(|s| s.sum_seconds);
        rows.push(("sum_model_seconds".into(), a, b));
        let (a, b) = both(|s| s.total_seconds);
        rows.push(("total_seconds".into(), a, b));
        rows.push(("delta_min_per_class".into(), opt(self.delta_min_per_class()), String::new()));
        rows.push(("delta_overall".into(), format!("{:?}", self.delta_overall()), String::new()));
        rows.push(("time_ratio".into(), opt(self.time_ratio()), String::new()));
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let write = |w: &mut csv::Writer<Vec<u8>>, r: [&str; 3]| w.write_record(r).expect("in-memory write");
        write(&mut writer, ["metric", "a", "b"]);
        write(&mut writer, ["seed", &self.seed.to_string(), ""]);
        write(&mut writer, ["config_hash", &self.config_hash, ""]);
        write(&mut writer, ["ber_thresholds", &self.profile.to_string(), ""]);
        for (m, a, b) in self.rows() {
            write(&mut writer, [&m, &a, &b]);
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != 3 {
                let line = record.position().map_or(0, |p| p.line() as usize);
                return Err(Error::parse(line, "expected metric,a,b"));
            }
            rows.push((record[0].to_string(), record[1].to_string(), record[2].to_string()));
        }
        let find = |m: &str| {
            rows.iter()
                .find(|r| r.0 == m)
                .map(|r| (r.1.as_str(), r.2.as_str()))
                .ok_or_else(|| Error::validation(format!("comparison is missing {m:?}")))
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            match s {
                "undefined" => Ok(None),
                v => v
                    .parse()
                    .map(Some)
                    .map_err(|_| Error::validation(format!("{v:?} is not a number"))),
            }
        };
        let side = |second: bool| -> Result<Side> {
            let pick = |(a, b): (&'_ str, &'_ str)| if second { b.to_string() } else { a.to_string() };
            let num = |s: &str| -> Result<f64> { opt(s)?.ok_or_else(|| Error::validation("missing number")) };
            Ok(Side {
                framework: pick(find("framework")?).parse()?,
                models: pick(find("models")?)
                    .parse()
                    .map_err(|_| Error::validation("models is not an integer"))?,
                min_per_class: opt(&pick(find("min_per_class_accuracy")?))?,
                mean_overall: num(&pick(find("overall_accuracy")?))?,
                max_seconds: opt(&pick(find("max_model_seconds")?))?,
                sum_seconds: opt(&pick(find("sum_model_seconds")?))?,
                total_seconds: opt(&pick(find("total_seconds")?))?,
            })
        };
        Ok(Comparison {
            a: side(false)?,
            b: side(true)?,
            seed: find("seed")?
                .0
                .parse()
                .map_err(|_| Error::validation("seed is not an integer"))?,
            config_hash: find("config_hash")?.0.to_string(),
            profile: SliceProfile::parse(find("ber_thresholds")?.0)?,
        })
    }

    pub fn to_text(&self) -> String {
        let secs = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |s| format!("{s:.3} s"));
        let label = |s: &Side| format!("{} ({})", s.framework, s.models);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "K = {}  seed {}  config {}",
            self.profile.slice_count(),
            self.seed,
            self.config_hash
        );
        let _ = writeln!(out, "{:<30}{:>18}{:>18}", "", label(&self.a), label(&self.b));
        let mut line = |name: &str, a: String, b: String| {
            let _ = writeln!(out, "{name:<30}{a:>18}{b:>18}");
        };
        line("Min per-class Acc.", percent(self.a.min_per_class), percent(self.b.min_per_class));
        line("Model Acc. (mean)", percent(Some(self.a.mean_overall)), percent(Some(self.b.mean_overall)));
        line("Train. Time, max model", secs(self.a.max_seconds), secs(self.b.max_seconds));
        line("Train. Time, sum of models", secs(self.a.sum_seconds), secs(self.b.sum_seconds));
        line("Train. Time, all repetitions", secs(self.a.total_seconds), secs(self.b.total_seconds));
        let _ = writeln!(
            out,
            "Delta min per-class (b - a): {}",
            self.delta_min_per_class()
                .map_or("n/a".to_string(), |d| format!("{:+.2} points", 100.0 * d))
        );
        let _ = writeln!(out, "Delta model Acc. (b - a):    {:+.2} points", 100.0 * self.delta_overall());
        let _ = writeln!(
            out,
            "Time ratio (b max / a max):  {}",
            self.time_ratio().map_or("n/a".to_string(), |r| format!("{r:.3}"))
        );
        out
    }
}

/// Compares two runs after checking that they come from the same
/// configuration, seed and slice profile.
pub fn compare(a: &[EvaluationReport], b: &[EvaluationReport]) -> Result<Comparison> {
    let side_a = Side::of(a)?;
    let side_b = Side::of(b)?;
    let first = &a[0];
    for r in a.iter().chain(b) {
        if r.seed != first.seed {
            return Err(Error::Mismatch(format!("seeds differ: {} vs {}", first.seed, r.seed)));
        }
        if r.profile != first.profile {
            return Err(Error::Mismatch(format!(
                "slice profiles differ: {} vs {}",
                first.profile, r.profile
            )));
        }
        if r.config_hash != first.config_hash {
            return Err(Error::Mismatch(format!(
                "config hashes differ: {} vs {}",
                first.config_hash, r.config_hash
            )));
        }
    }
    Ok(Comparison {
        a: side_a,
        b: side_b,
        seed: first.seed,
        config_hash: first.config_hash.clone(),
        profile: first.profile.clone(),
    })
}

/// One row per centralized report, layout of a per-K accuracy table.
pub fn centralized_table(reports: &[EvaluationReport]) -> String {
    let width = reports.iter().map(EvaluationReport::classes).max().unwrap_or(0);
    let mut out = String::new();
    let _ = write!(out, "{:<22}", "");
    for r in reports {
        let _ = write!(out, "{:>20}", format!("{} Classes (K={})", r.classes(), r.profile.slice_count()));
    }
    let _ = writeln!(out);
    let _ = write!(out, "{:<22}", "Model Acc.");
    for r in reports {
        let _ = write!(out, "{:>20}", percent(Some(r.overall)));
    }
    let _ = writeln!(out);
    for c in 0..width {
        let _ = write!(out, "{:<22}", format!("Class {} Acc.", c + 1));
        for r in reports {
            let cell = if c < r.classes() { percent(r.per_class[c]) } else { "-".to_string() };
            let _ = write!(out, "{cell:>20}");
        }
        let _ = writeln!(out);
    }
    if reports.iter().all(|r| r.training_seconds.is_some()) {
        let _ = write!(out, "{:<22}", "Train. Time (sec)");
        for r in reports {
            let _ = write!(out, "{:>20}", format!("{:.2}", r.mean_fold_seconds().unwrap_or(0.0)));
        }
        let _ = writeln!(out);
    }
    out
}

/// One row per slice model. Class 1 is the infeasible class and Class 2
/// the feasible one, following the usual table layout.
pub fn distributed_table(reports: &[EvaluationReport]) -> String {
    let timed = reports.iter().all(|r| r.training_seconds.is_some());
    let mut out = String::new();
    let _ = write!(
        out,
        "{:<8}{:>10}{:>9}{:>13}{:>15}{:>15}",
        "Slice", "B_k", "N", "Model Acc.", "Class 1 Acc.", "Class 2 Acc."
    );
    if timed {
        let _ = write!(out, "{:>20}", "Train. Time (sec)");
    }
    let _ = writeln!(out);
    for r in reports {
        let k = r.slice.unwrap_or(0);
        let threshold = if k >= 1 && k <= r.profile.slice_count() {
            format!("{:e}", r.profile.threshold(k))
        } else {
            "-".to_string()
        };
        let infeasible = r.per_class.get(1).copied().flatten();
        let feasible = r.per_class.first().copied().flatten();
        let _ = write!(
            out,
            "{:<8}{:>10}{:>9}{:>13}{:>15}{:>15}",
            k,
            threshold,
            r.dataset_size,
            percent(Some(r.overall)),
            percent(infeasible),
            percent(feasible)
        );
        if timed {
            let _ = write!(out, "{:>20}", format!("{:.2}", r.mean_fold_seconds().unwrap_or(0.0)));
        }
        let _ = writeln!(out);
    }
    out
}
