//! Command implementations behind the `gesture` binary.
//!
//! Each `cmd_*` function takes its parsed arguments and a writer for
//! human-readable output, and returns a structured result so the commands
//! can be driven from tests without spawning a process.

pub mod model_file;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use gesture_core::data::{
    load_csv, save_csv, DataError, Manifest, ManifestEntry, Role, MANIFEST_VERSION,
};
use gesture_core::decoder::{map_decode, DecodeError, LabelPath, Recognition};
use gesture_core::eval::{
    render_sweep, score_sessions, AblationReport, EvalError, EvalReport, SweepRow,
};
use gesture_core::gradcheck::{gradient_check, random_instance, GradCheckReport};
use gesture_core::synth::{gen_dataset, DatasetSpec, GenConfig, SynthError, NUM_CLASSES};
use gesture_core::train::train_with_progress;
use gesture_core::{
    label_path, LstmError, Network, RecognizeError, SensorMask, SensorSequence, TrainConfig,
};
use serde::Serialize;
use thiserror::Error;

pub use model_file::{load_model, load_network, save_model, ModelError, ModelFile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Network(#[from] LstmError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("decode failed: {0}")]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("gradient check failed: {0}")]
    GradCheck(String),
}

impl From<RecognizeError> for CliError {
    fn from(e: RecognizeError) -> Self {
        match e {
            RecognizeError::Network(e) => CliError::Network(e),
            RecognizeError::Decode(e) => CliError::Decode(e),
        }
    }
}

impl CliError {
    /// 1 for usage errors, 2 for data and model errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_error(path))
}

/// Comma-separated list of 1-based classes, e.g. `4,2,5,6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassList(pub Vec<usize>);

impl FromStr for ClassList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let classes = s
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|c| (1..=NUM_CLASSES).contains(c))
                    .ok_or_else(|| format!("{c:?} is not a gesture class in 1..={NUM_CLASSES}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ClassList(classes))
    }
}

/// Comma-separated sensor masks, e.g. `accel,gyro,both`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskList(pub Vec<SensorMask>);

impl FromStr for MaskList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "all" {
            return Ok(MaskList(SensorMask::ALL.to_vec()));
        }
        s.split(',')
            .map(|m| m.parse::<SensorMask>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()
            .map(MaskList)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gesture",
    version,
    about = "Continuous gesture recognition from 6-axis IMU data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (CSV files plus manifest.json)
    Gen(GenArgs),
    /// Train a model on the training entries of a dataset
    Train(TrainArgs),
    /// Recognize the gestures in one CSV recording
    Infer(InferArgs),
    /// Score one or more models on the test entries of a dataset
    Eval(EvalArgs),
    /// Compare BPTT gradients with finite differences on random instances
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Single-gesture training sequences per class
    #[arg(long, default_value_t = 200)]
    pub per_class: usize,
    /// Random multi-gesture training sessions
    #[arg(long, default_value_t = 200)]
    pub train_sessions: usize,
    /// Single-gesture test sequences per class
    #[arg(long, default_value_t = 50)]
    pub test_per_class: usize,
    /// Random 2-4 gesture test sessions
    #[arg(long, default_value_t = 200)]
    pub test_sessions: usize,
    /// Extra test session with a fixed gesture order, e.g. "4,2,5,6" (repeatable)
    #[arg(long = "sessions")]
    pub sessions: Vec<ClassList>,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.2)]
    pub duration_jitter: f64,
    #[arg(long, default_value_t = 0.2)]
    pub amplitude_jitter: f64,
    /// Longest noise gap between consecutive gestures, in timesteps
    #[arg(long, default_value_t = 10)]
    pub gap_max: usize,
    #[arg(long, default_value = "both")]
    pub mask: SensorMask,
}

impl GenArgs {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            seed: 42,
            per_class: 200,
            train_sessions: 200,
            test_per_class: 50,
            test_sessions: 200,
            sessions: Vec::new(),
            noise: 0.1,
            duration_jitter: 0.2,
            amplitude_jitter: 0.2,
            gap_max: 10,
            mask: SensorMask::Both,
        }
    }

    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            seed: self.seed,
            duration_jitter: self.duration_jitter,
            amplitude_jitter: self.amplitude_jitter,
            noise_sigma: self.noise,
            gap_min: 0,
            gap_max: self.gap_max,
            mask: self.mask,
        }
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        DatasetSpec {
            train_per_class: self.per_class,
            train_sessions: self.train_sessions,
            test_per_class: self.test_per_class,
            test_sessions: self.test_sessions,
            fixed_sessions: self.sessions.iter().map(|s| s.0.clone()).collect(),
            ..DatasetSpec::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GenSummary {
    pub train: usize,
    pub test: usize,
    pub manifest: Manifest,
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<GenSummary, CliError> {
    if args.per_class == 0 {
        return Err(CliError::Usage("--per-class must be at least 1".into()));
    }
    let dataset = gen_dataset(&args.gen_config(), &args.dataset_spec())?;
    fs::create_dir_all(&args.data_dir).map_err(io_error(&args.data_dir))?;
    let mut entries = Vec::new();
    for (role, items) in [(Role::Train, &dataset.train), (Role::Test, &dataset.test)] {
        let prefix = match role {
            Role::Train => "train",
            Role::Test => "test",
        };
        for (i, item) in items.iter().enumerate() {
            let file = format!("{prefix}_{i:05}.csv");
            save_csv(&item.sequence, &args.data_dir.join(&file))?;
            entries.push(ManifestEntry {
                file,
                role,
                truth: item.truth.clone(),
            });
        }
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        classes: NUM_CLASSES,
        seed: args.seed,
        entries,
    };
    manifest.save(&args.data_dir)?;
    let _ = writeln!(
        out,
        "wrote {} training and {} test sequences to {}",
        dataset.train.len(),
        dataset.test.len(),
        args.data_dir.display()
    );
    Ok(GenSummary {
        train: dataset.train.len(),
        test: dataset.test.len(),
        manifest,
    })
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Output model file
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Sequences per Adam step
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    /// Global gradient-norm clipping threshold
    #[arg(long, default_value_t = 5.0)]
    pub clip: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl TrainArgs {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hidden: self.hidden,
            learning_rate: self.lr,
            epochs: self.epochs,
            batch_size: self.batch,
            seed: self.seed,
            clip_norm: self.clip,
            ..TrainConfig::default()
        }
    }
}

/// Loads every manifest entry with `role`, in manifest order.
pub fn load_split(
    data_dir: &Path,
    role: Role,
) -> Result<(Manifest, Vec<(ManifestEntry, SensorSequence)>), CliError> {
    let manifest = Manifest::load(data_dir)?;
    let mut items = Vec::new();
    for entry in manifest.entries(role) {
        let seq = load_csv(&data_dir.join(&entry.file))?;
        items.push((entry.clone(), seq));
    }
    Ok((manifest, items))
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<ModelFile, CliError> {
    let cfg = args.train_config();
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let (manifest, items) = load_split(&args.data_dir, Role::Train)?;
    if items.is_empty() {
        return Err(CliError::Data(DataError::Manifest {
            path: args.data_dir.join(gesture_core::data::MANIFEST_FILE),
            reason: "no training entries".into(),
        }));
    }
    let mut dataset = Vec::with_capacity(items.len());
    for (entry, seq) in &items {
        let seq = seq.to_training().map_err(|e| {
            CliError::Data(DataError::Manifest {
                path: args.data_dir.join(&entry.file),
                reason: e.to_string(),
            })
        })?;
        dataset.push(seq);
    }
    let _ = writeln!(
        out,
        "training H={} on {} sequences for {} epochs",
        cfg.hidden,
        dataset.len(),
        cfg.epochs
    );
    let outcome = train_with_progress(&dataset, manifest.classes, &cfg, |epoch, loss| {
        let _ = writeln!(out, "epoch {epoch:>3}/{}  loss {loss:.6}", cfg.epochs);
    })?;
    let model = ModelFile::from_network(&outcome.network, Some(cfg));
    save_model(&model, &args.model)?;
    let _ = writeln!(out, "saved {}", args.model.display());
    Ok(model)
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV recording to recognize
    #[arg(long)]
    pub input: PathBuf,
    /// Number of gestures in the recording
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Zero the other sensor before inference
    #[arg(long)]
    pub mask: Option<SensorMask>,
    /// Print the per-timestep label path
    #[arg(long)]
    pub dump_path: bool,
    /// Write the result as JSON to this file
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InferResult {
    pub outcome: Vec<usize>,
    pub posterior: f64,
    pub cardinalities: Vec<usize>,
    pub first_occurrence: Vec<Option<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<usize>>,
    #[serde(skip)]
    pub recognition: Option<Recognition>,
}

fn check_channels(net: &Network, seq: &SensorSequence, path: &Path) -> Result<(), CliError> {
    if net.inputs() != gesture_core::data::CHANNELS {
        return Err(CliError::Model(ModelError::Shape(format!(
            "model expects {} input channels, {} has {}",
            net.inputs(),
            path.display(),
            gesture_core::data::CHANNELS
        ))));
    }
    if seq.is_empty() {
        return Err(CliError::Data(DataError::NoSamples {
            path: path.to_path_buf(),
        }));
    }
    Ok(())
}

fn join(classes: &[usize]) -> String {
    classes
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn cmd_infer(args: &InferArgs, out: &mut dyn Write) -> Result<InferResult, CliError> {
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let (_, net) = load_network(&args.model)?;
    let mut seq = load_csv(&args.input)?;
    check_channels(&net, &seq, &args.input)?;
    if let Some(mask) = args.mask {
        seq.apply_mask(mask);
    }
    let path = label_path(&net, &seq.samples)?;
    let recognition = map_decode(&path, args.k)?;
    let classes = net.classes();
    let table = &recognition.spotting;
    let result = InferResult {
        outcome: recognition.outcome.clone(),
        posterior: recognition.posterior,
        cardinalities: (1..=classes).map(|c| table.cardinality(c)).collect(),
        first_occurrence: (1..=classes)
            .map(|c| {
                if c <= table.classes() {
                    table.first_occurrence(c)
                } else {
                    None
                }
            })
            .collect(),
        path: args.dump_path.then(|| path.as_slice().to_vec()),
        recognition: Some(recognition.clone()),
    };

    let _ = writeln!(out, "R = ({})", join(&result.outcome));
    let _ = writeln!(out, "posterior = {:.6e}", result.posterior);
    let cards: Vec<String> = result
        .cardinalities
        .iter()
        .enumerate()
        .map(|(i, n)| format!("|I_{}|={n}", i + 1))
        .collect();
    let _ = writeln!(out, "T = {}  {}", path.len(), cards.join(" "));
    if let Some(p) = &result.path {
        let _ = writeln!(
            out,
            "path: {}",
            p.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
        );
    }
    if let Some(report) = &args.report {
        write_file(
            report,
            &(serde_json::to_string_pretty(&result).expect("result serializes") + "\n"),
        )?;
    }
    Ok(result)
}

/// Decodes for scoring. When the path has fewer distinct labels than `k`,
/// the distinct labels come first (in path order) and the remaining slots are
/// filled with absent classes in ascending order, so the slot count always
/// matches the truth.
pub fn decode_for_scoring(
    path: &LabelPath,
    k: usize,
    classes: usize,
) -> Result<Vec<usize>, DecodeError> {
    match map_decode(path, k) {
        Ok(r) => Ok(r.outcome),
        Err(DecodeError::TooFewLabels { distinct, .. }) => {
            let mut outcome = map_decode(path, distinct)?.outcome;
            let absent: Vec<usize> = (1..=classes).filter(|c| !outcome.contains(c)).collect();
            outcome.extend(absent.into_iter().take(k - distinct));
            Ok(outcome)
        }
        Err(e) => Err(e),
    }
}

/// Recognizes every item with its true `k` after applying `mask`, then scores.
pub fn evaluate(
    net: &Network,
    items: &[(Vec<usize>, SensorSequence)],
    mask: SensorMask,
) -> Result<EvalReport, CliError> {
    let mut predictions = Vec::with_capacity(items.len());
    for (truth, seq) in items {
        let masked = seq.clone().with_mask(mask);
        let path = label_path(net, &masked.samples)?;
        predictions.push(decode_for_scoring(&path, truth.len(), net.classes())?);
    }
    let truths: Vec<&Vec<usize>> = items.iter().map(|(t, _)| t).collect();
    Ok(score_sessions(&predictions, &truths, net.classes())?)
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Model file(s); several models also produce a hidden-size comparison
    #[arg(long, required = true)]
    pub model: Vec<PathBuf>,
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Sensor sets to evaluate: accel, gyro, both, a comma list, or "all"
    #[arg(long, default_value = "both")]
    pub mask: MaskList,
    /// Output prefix; writes PREFIX.txt and PREFIX.json
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaskedReport {
    pub mask: SensorMask,
    #[serde(flatten)]
    pub report: EvalReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelEval {
    pub model: String,
    pub hidden: usize,
    pub reports: Vec<MaskedReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation: Option<AblationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalOutput {
    pub models: Vec<ModelEval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
    #[serde(skip)]
    pub text: String,
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<EvalOutput, CliError> {
    if args.mask.0.is_empty() {
        return Err(CliError::Usage(
            "--mask needs at least one sensor set".into(),
        ));
    }
    let (manifest, items) = load_split(&args.data_dir, Role::Test)?;
    let items: Vec<(Vec<usize>, SensorSequence)> =
        items.into_iter().map(|(e, s)| (e.truth, s)).collect();
    let mut text = String::new();
    let mut models = Vec::new();
    for model_path in &args.model {
        let (_, net) = load_network(model_path)?;
        if net.classes() != manifest.classes {
            return Err(CliError::Model(ModelError::Shape(format!(
                "{} predicts {} classes, dataset has {}",
                model_path.display(),
                net.classes(),
                manifest.classes
            ))));
        }
        if let Some((_, seq)) = items.first() {
            check_channels(&net, seq, model_path)?;
        }
        let mut reports = Vec::new();
        for &mask in &args.mask.0 {
            let report = evaluate(&net, &items, mask)?;
            text.push_str(&format!(
                "== {} (H={}, sensors: {mask}, {} test sequences)\n",
                model_path.display(),
                net.hidden(),
                items.len()
            ));
            text.push_str(&report.render());
            text.push('\n');
            reports.push(MaskedReport { mask, report });
        }
        let ablation = (reports.len() > 1).then(|| {
            let pairs: Vec<(SensorMask, EvalReport)> =
                reports.iter().map(|r| (r.mask, r.report.clone())).collect();
            AblationReport::from_reports(&pairs)
        });
        if let Some(a) = &ablation {
            text.push_str(&a.render());
            text.push('\n');
        }
        models.push(ModelEval {
            model: model_path.display().to_string(),
            hidden: net.hidden(),
            reports,
            ablation,
        });
    }
    let sweep = (models.len() > 1).then(|| {
        models
            .iter()
            .map(|m| SweepRow {
                hidden: m.hidden,
                accuracy: sweep_report(&m.reports).accuracy,
            })
            .collect::<Vec<_>>()
    });
    if let Some(rows) = &sweep {
        text.push_str(&render_sweep(rows));
    }
    let _ = out.write_all(text.as_bytes());
    let output = EvalOutput {
        models,
        sweep,
        text,
    };
    if let Some(prefix) = &args.report {
        write_file(&prefix.with_extension("txt"), &output.text)?;
        let json = serde_json::to_string_pretty(&output).expect("report serializes") + "\n";
        write_file(&prefix.with_extension("json"), &json)?;
    }
    Ok(output)
}

/// The sweep compares models on all sensors when that set was evaluated.
fn sweep_report(reports: &[MaskedReport]) -> &EvalReport {
    let r = reports
        .iter()
        .find(|r| r.mask == SensorMask::Both)
        .unwrap_or(&reports[0]);
    &r.report
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    /// Instance `i` is drawn from seed `seed + i`
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub instances: usize,
    #[arg(long, default_value_t = 3)]
    pub inputs: usize,
    #[arg(long, default_value_t = 4)]
    pub hidden: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    /// Sequence length
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
    /// Finite-difference step
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

impl Default for GradcheckArgs {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 10,
            inputs: 3,
            hidden: 4,
            classes: 3,
            steps: 5,
            step: 1e-5,
            tolerance: 1e-4,
        }
    }
}

pub fn cmd_gradcheck(
    args: &GradcheckArgs,
    out: &mut dyn Write,
) -> Result<Vec<GradCheckReport>, CliError> {
    if args.inputs == 0 || args.hidden == 0 || args.classes < 2 || args.steps == 0 {
        return Err(CliError::Usage(
            "need inputs >= 1, hidden >= 1, classes >= 2, steps >= 1".into(),
        ));
    }
    if !(args.step.is_finite()
        && args.step > 0.0
        && args.tolerance.is_finite()
        && args.tolerance > 0.0)
    {
        return Err(CliError::Usage(
            "--step and --tolerance must be positive".into(),
        ));
    }
    let mut reports = Vec::with_capacity(args.instances);
    let mut failures = Vec::new();
    for i in 0..args.instances {
        let inst = random_instance(
            args.inputs,
            args.hidden,
            args.classes,
            args.steps,
            args.seed.wrapping_add(i as u64),
        );
        let r = gradient_check(
            &inst.network,
            &inst.inputs,
            &inst.labels,
            args.step,
            args.tolerance,
        )?;
        let _ = writeln!(
            out,
            "instance {i:>2}: {} params, max relative error {:.3e} at {} -> {}",
            r.checked,
            r.max_relative_error,
            r.worst,
            if r.passed() { "ok" } else { "FAIL" }
        );
        if !r.passed() {
            failures.push(format!(
                "instance {i} ({} = {:.3e})",
                r.worst, r.max_relative_error
            ));
        }
        reports.push(r);
    }
    if failures.is_empty() {
        Ok(reports)
    } else {
        Err(CliError::GradCheck(failures.join(", ")))
    }
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, out).map(drop),
        Command::Train(a) => cmd_train(a, out).map(drop),
        Command::Infer(a) => cmd_infer(a, out).map(drop),
        Command::Eval(a) => cmd_eval(a, out).map(drop),
        Command::Gradcheck(a) => cmd_gradcheck(a, out).map(drop),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_and_mask_lists_parse() {
        assert_eq!(
            "4,2,5,6".parse::<ClassList>().unwrap(),
            ClassList(vec![4, 2, 5, 6])
        );
        assert!("4,7".parse::<ClassList>().is_err());
        assert!("".parse::<ClassList>().is_err());
        assert_eq!(
            "all".parse::<MaskList>().unwrap().0,
            SensorMask::ALL.to_vec()
        );
        assert_eq!(
            "gyro,both".parse::<MaskList>().unwrap().0,
            vec![SensorMask::Gyro, SensorMask::Both]
        );
        assert!("gyro,sonar".parse::<MaskList>().is_err());
    }

    #[test]
    fn scoring_fallback_pads_with_absent_classes() {
        let path = LabelPath::new(vec![3, 3, 1, 1, 1], 6).unwrap();
        assert_eq!(decode_for_scoring(&path, 2, 6).unwrap(), vec![3, 1]);
        assert_eq!(decode_for_scoring(&path, 4, 6).unwrap(), vec![3, 1, 2, 4]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Decode(DecodeError::ZeroK).exit_code(), 2);
    }

    #[test]
    fn cli_parses_documented_flags() {
        let cli = Cli::try_parse_from([
            "gesture",
            "eval",
            "--model",
            "a.json",
            "--model",
            "b.json",
            "--data-dir",
            "d",
            "--mask",
            "accel,gyro,both",
            "--report",
            "r",
        ])
        .unwrap();
        match cli.command {
            Command::Eval(a) => {
                assert_eq!(a.model.len(), 2);
                assert_eq!(a.mask.0.len(), 3);
            }
            other => panic!("{other:?}"),
        }
        let cli = Cli::try_parse_from([
            "gesture",
            "gen",
            "--data-dir",
            "d",
            "--sessions",
            "4,2,5,6",
            "--seed",
            "3",
        ])
        .unwrap();
        match cli.command {
            Command::Gen(a) => assert_eq!(a.sessions, vec![ClassList(vec![4, 2, 5, 6])]),
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["gesture", "infer", "--model", "m"]).is_err());
    }
}
