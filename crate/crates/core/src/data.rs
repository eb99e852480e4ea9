//! Sensor sequences, their CSV form, and the dataset manifest.
//!
//! CSV layout: header `ax,ay,az,gx,gy,gz` optionally followed by `,label`,
//! then one row per timestep. Values are decimal with nine significant
//! digits; labels are 1-based integers.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::train::TrainingSequence;

pub const CHANNELS: usize = 6;
pub const CHANNEL_NAMES: [&str; CHANNELS] = ["ax", "ay", "az", "gx", "gy", "gz"];
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("{path}: no samples")]
    NoSamples { path: PathBuf },
    #[error("{path}: unexpected header {found:?}, expected ax,ay,az,gx,gy,gz[,label]")]
    Header { path: PathBuf, found: String },
    #[error("{path}: invalid manifest: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("sequence has {labels} labels for {samples} samples")]
    LabelLength { labels: usize, samples: usize },
    #[error("sequence is unlabeled")]
    Unlabeled,
    #[error("invalid sensor mask {0:?}: expected accel, gyro or both")]
    Mask(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One timestep: three acceleration axes then three angular-rate axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensorSample(pub [f64; CHANNELS]);

impl SensorSample {
    pub fn ax(&self) -> f64 {
        self.0[0]
    }
    pub fn ay(&self) -> f64 {
        self.0[1]
    }
    pub fn az(&self) -> f64 {
        self.0[2]
    }
    pub fn gx(&self) -> f64 {
        self.0[3]
    }
    pub fn gy(&self) -> f64 {
        self.0[4]
    }
    pub fn gz(&self) -> f64 {
        self.0[5]
    }
}

impl AsRef<[f64]> for SensorSample {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Which sensor triples are kept; the others are zeroed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorMask {
    Accel,
    Gyro,
    #[default]
    Both,
}

impl SensorMask {
    pub const ALL: [SensorMask; 3] = [SensorMask::Accel, SensorMask::Gyro, SensorMask::Both];

    pub fn apply(self, sample: &mut SensorSample) {
        match self {
            SensorMask::Accel => sample.0[3..].fill(0.0),
            SensorMask::Gyro => sample.0[..3].fill(0.0),
            SensorMask::Both => {}
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorMask::Accel => "accel",
            SensorMask::Gyro => "gyro",
            SensorMask::Both => "both",
        }
    }
}

impl fmt::Display for SensorMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SensorMask {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "accel" | "accelerometer" => Ok(SensorMask::Accel),
            "gyro" | "gyroscope" => Ok(SensorMask::Gyro),
            "both" => Ok(SensorMask::Both),
            other => Err(DataError::Mask(other.to_string())),
        }
    }
}

/// A gesture occupying timesteps `start..end` (0-based, end exclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub class: usize,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SensorSequence {
    pub samples: Vec<SensorSample>,
    /// One 1-based class per sample, when known.
    pub labels: Option<Vec<usize>>,
    /// Gesture spans in order. Gaps between spans carry the preceding class.
    pub segments: Vec<Segment>,
}

impl SensorSequence {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Ordered classes of the segments.
    pub fn classes(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.class).collect()
    }

    pub fn with_mask(mut self, mask: SensorMask) -> Self {
        self.apply_mask(mask);
        self
    }

    pub fn apply_mask(&mut self, mask: SensorMask) {
        self.samples.iter_mut().for_each(|s| mask.apply(s));
    }

    pub fn to_training(&self) -> Result<TrainingSequence, DataError> {
        let labels = self.labels.clone().ok_or(DataError::Unlabeled)?;
        if labels.len() != self.samples.len() {
            return Err(DataError::LabelLength {
                labels: labels.len(),
                samples: self.samples.len(),
            });
        }
        Ok(TrainingSequence {
            inputs: self.samples.iter().map(|s| s.0.to_vec()).collect(),
            labels,
        })
    }
}

/// Expands segments to per-timestep labels over `len` steps. Each segment's
/// class extends up to the next segment's start (or `len` for the last).
pub fn expand_segments(segments: &[Segment], len: usize) -> Vec<usize> {
    let mut labels = Vec::with_capacity(len);
    for (i, seg) in segments.iter().enumerate() {
        let stop = segments.get(i + 1).map_or(len, |next| next.start);
        labels.resize(stop, seg.class);
    }
    labels
}

/// Nine significant digits in plain decimal, trailing zeros trimmed.
pub fn format_value(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() {
            "0".into()
        } else {
            v.to_string()
        };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

pub fn write_csv<W: Write>(seq: &SensorSequence, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let labeled = seq.labels.as_ref().filter(|l| l.len() == seq.samples.len());
    let mut header: Vec<&str> = CHANNEL_NAMES.to_vec();
    if labeled.is_some() {
        header.push("label");
    }
    w.write_record(&header)?;
    for (t, s) in seq.samples.iter().enumerate() {
        let mut row: Vec<String> = s.0.iter().map(|&v| format_value(v)).collect();
        if let Some(labels) = labeled {
            row.push(labels[t].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn save_csv(seq: &SensorSequence, path: &Path) -> Result<(), DataError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_csv(seq, std::io::BufWriter::new(file)).map_err(io_err(path))
}

pub fn load_csv(path: &Path) -> Result<SensorSequence, DataError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_csv(&text, path)
}

/// Parses CSV text; `path` is only used in error messages.
pub fn parse_csv(text: &str, path: &Path) -> Result<SensorSequence, DataError> {
    let malformed = |line: u64, reason: String| DataError::Malformed {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    let labeled = match names.as_slice() {
        [a, b, c, d, e, f] if [*a, *b, *c, *d, *e, *f] == CHANNEL_NAMES => false,
        [a, b, c, d, e, f, "label"] if [*a, *b, *c, *d, *e, *f] == CHANNEL_NAMES => true,
        _ => {
            return Err(DataError::Header {
                path: path.to_path_buf(),
                found: names.join(","),
            })
        }
    };
    let columns = if labeled { CHANNELS + 1 } else { CHANNELS };
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| malformed(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != columns {
            return Err(malformed(
                line,
                format!("expected {columns} columns, found {}", record.len()),
            ));
        }
        let mut sample = SensorSample::default();
        for (c, field) in record.iter().take(CHANNELS).enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                malformed(
                    line,
                    format!("{}: cannot parse {field:?} as a number", CHANNEL_NAMES[c]),
                )
            })?;
            if !v.is_finite() {
                return Err(malformed(
                    line,
                    format!("{}: non-finite value", CHANNEL_NAMES[c]),
                ));
            }
            sample.0[c] = v;
        }
        if labeled {
            let field = &record[CHANNELS];
            let label: usize = field.parse().ok().filter(|&l| l >= 1).ok_or_else(|| {
                malformed(line, format!("label {field:?} is not a positive integer"))
            })?;
            labels.push(label);
        }
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(DataError::NoSamples {
            path: path.to_path_buf(),
        });
    }
    Ok(SensorSequence {
        segments: label_runs(&labels),
        samples,
        labels: labeled.then_some(labels),
    })
}

/// One segment per run of equal labels. Inverts [`expand_segments`] when
/// consecutive gestures differ in class, which holds for generated sessions;
/// gap steps end up inside the preceding segment.
pub fn label_runs(labels: &[usize]) -> Vec<Segment> {
    let mut runs: Vec<Segment> = Vec::new();
    for (t, &class) in labels.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.class == class => run.end = t + 1,
            _ => runs.push(Segment {
                class,
                start: t,
                end: t + 1,
            }),
        }
    }
    runs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// File name relative to the dataset directory.
    pub file: String,
    pub role: Role,
    /// Ordered ground-truth gestures; its length is the session's `k`.
    pub truth: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub classes: usize,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn entries(&self, role: Role) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.role == role)
    }

    pub fn save(&self, dir: &Path) -> Result<(), DataError> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))
    }

    pub fn load(dir: &Path) -> Result<Self, DataError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let bad = |reason: String| DataError::Manifest {
            path: path.clone(),
            reason,
        };
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(bad(format!("unsupported version {}", manifest.version)));
        }
        for e in &manifest.entries {
            if e.truth.is_empty() {
                return Err(bad(format!("{}: empty truth", e.file)));
            }
            if let Some(c) = e.truth.iter().find(|&&c| c == 0 || c > manifest.classes) {
                return Err(bad(format!(
                    "{}: class {c} outside 1..={}",
                    e.file, manifest.classes
                )));
            }
        }
        Ok(manifest)
    }
}
