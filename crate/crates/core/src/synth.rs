//! Parametric 6-channel gesture waveforms and back-to-back sessions.
//!
//! Each of the six gesture classes is a fixed template: per channel, a sum
//! of sinusoids and gaussian pulses over normalized time `u ∈ (0, 1)`.
//! Rendering stretches the template to a jittered duration, scales each
//! channel by a jittered amplitude, and adds white noise. Everything is a
//! pure function of the config and the RNG state passed in.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{expand_segments, Segment, SensorMask, SensorSample, SensorSequence, CHANNELS};

pub const NUM_CLASSES: usize = 6;
pub const MAX_SESSION_GESTURES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("session needs at least one gesture")]
    EmptySession,
    #[error("session has {0} gestures, at most {MAX_SESSION_GESTURES} are supported")]
    SessionTooLong(usize),
    #[error("class {0} is outside 1..={NUM_CLASSES}")]
    UnknownClass(usize),
    #[error("invalid generator config: {0}")]
    Config(String),
}

/// One waveform component over normalized time `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Primitive {
    /// `amplitude · sin(2π · cycles · u + phase)`
    Sine {
        amplitude: f64,
        cycles: f64,
        phase: f64,
    },
    /// `amplitude · exp(−½ ((u − center) / width)²)`
    Pulse {
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

impl Primitive {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Primitive::Sine {
                amplitude,
                cycles,
                phase,
            } => amplitude * (TAU * cycles * u + phase).sin(),
            Primitive::Pulse {
                amplitude,
                center,
                width,
            } => {
                let z = (u - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Primitive::Sine { amplitude, .. } | Primitive::Pulse { amplitude, .. } => amplitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureTemplate {
    pub class: usize,
    /// Up to three primitives per channel, in `ax, ay, az, gx, gy, gz` order.
    pub channels: [Vec<Primitive>; CHANNELS],
    pub nominal_duration: usize,
}

impl GestureTemplate {
    /// Noise-free value of every channel at normalized time `u`.
    pub fn eval(&self, u: f64) -> [f64; CHANNELS] {
        let mut out = [0.0; CHANNELS];
        for (o, prims) in out.iter_mut().zip(&self.channels) {
            *o = prims.iter().map(|p| p.eval(u)).sum();
        }
        out
    }

    /// Noise-free rendering at `len` timesteps.
    pub fn render(&self, len: usize) -> Vec<SensorSample> {
        (0..len)
            .map(|t| SensorSample(self.eval(normalized_time(t, len))))
            .collect()
    }

    pub fn render_nominal(&self) -> Vec<SensorSample> {
        self.render(self.nominal_duration)
    }
}

fn normalized_time(t: usize, len: usize) -> f64 {
    (t as f64 + 0.5) / len as f64
}

pub const NOMINAL_DURATION: usize = 60;

/// The six built-in templates. Classes differ in which channels carry the
/// dominant motion and in the number and sign of their swings. Each class
/// opens with a distinct deflection of its dominant channel, so the first
/// few samples of a gesture already identify it.
pub fn default_templates() -> Vec<GestureTemplate> {
    use Primitive::{Pulse, Sine};
    let sine = |amplitude, cycles, phase| Sine {
        amplitude,
        cycles,
        phase,
    };
    let pulse = |amplitude, center, width| Pulse {
        amplitude,
        center,
        width,
    };
    let t = |class, channels| GestureTemplate {
        class,
        channels,
        nominal_duration: NOMINAL_DURATION,
    };
    vec![
        // 1: swing along ax starting from a +ax jolt, small twist about z
        t(
            1,
            [
                vec![sine(1.0, 1.0, FRAC_PI_2)],
                vec![],
                vec![],
                vec![],
                vec![],
                vec![pulse(0.6, 0.5, 0.15)],
            ],
        ),
        // 2: mirror image of 1
        t(
            2,
            [
                vec![sine(-1.0, 1.0, FRAC_PI_2)],
                vec![],
                vec![],
                vec![],
                vec![],
                vec![pulse(-0.6, 0.5, 0.15)],
            ],
        ),
        // 3: two swings along ay with a roll
        t(
            3,
            [
                vec![],
                vec![sine(1.0, 2.0, FRAC_PI_2)],
                vec![],
                vec![sine(0.6, 1.0, 0.0)],
                vec![],
                vec![],
            ],
        ),
        // 4: down-then-up jolt along ay, opposite roll
        t(
            4,
            [
                vec![],
                vec![pulse(-1.0, 0.05, 0.12), pulse(1.0, 0.6, 0.12)],
                vec![],
                vec![sine(-0.6, 1.0, 0.0)],
                vec![],
                vec![],
            ],
        ),
        // 5: one and a half swings along az with a pitch pulse
        t(
            5,
            [
                vec![],
                vec![],
                vec![sine(1.0, 1.5, FRAC_PI_2)],
                vec![],
                vec![pulse(0.8, 0.5, 0.2)],
                vec![],
            ],
        ),
        // 6: a pull along -az while rotating back and forth about y and z
        t(
            6,
            [
                vec![],
                vec![],
                vec![pulse(-0.9, 0.05, 0.12)],
                vec![],
                vec![sine(1.0, 2.0, 0.0)],
                vec![sine(0.4, 1.0, FRAC_PI_2)],
            ],
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    /// Durations are drawn uniformly from `nominal · (1 ± duration_jitter)`.
    pub duration_jitter: f64,
    /// Each channel's amplitude is scaled by `1 + U(−a, a)`.
    pub amplitude_jitter: f64,
    pub noise_sigma: f64,
    /// Inclusive range of gap lengths between consecutive gestures.
    pub gap_min: usize,
    pub gap_max: usize,
    pub mask: SensorMask,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            duration_jitter: 0.2,
            amplitude_jitter: 0.2,
            noise_sigma: 0.1,
            gap_min: 0,
            gap_max: 10,
            mask: SensorMask::Both,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, v) in [
            ("duration_jitter", self.duration_jitter),
            ("amplitude_jitter", self.amplitude_jitter),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(SynthError::Config(format!(
                    "{name} must lie in [0, 1), got {v}"
                )));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(SynthError::Config(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if self.gap_min > self.gap_max {
            return Err(SynthError::Config(format!(
                "gap range {}..={} is empty",
                self.gap_min, self.gap_max
            )));
        }
        Ok(())
    }

    /// Inclusive bounds on a gesture's rendered length.
    pub fn duration_bounds(&self, nominal: usize) -> (usize, usize) {
        let lo = (nominal as f64 * (1.0 - self.duration_jitter))
            .ceil()
            .max(2.0) as usize;
        let hi = (nominal as f64 * (1.0 + self.duration_jitter)).floor() as usize;
        (lo.min(hi.max(2)), hi.max(2))
    }
}

/// Renders one jittered, noisy instance of `template`, fully labeled.
pub fn gen_gesture(
    template: &GestureTemplate,
    cfg: &GenConfig,
    rng: &mut impl Rng,
) -> SensorSequence {
    let nominal = template.nominal_duration as f64;
    let stretch = 1.0 + cfg.duration_jitter * (2.0 * rng.random::<f64>() - 1.0);
    let (lo, hi) = cfg.duration_bounds(template.nominal_duration);
    let len = ((nominal * stretch).round() as usize).clamp(lo, hi);

    let mut gains = [1.0; CHANNELS];
    for g in &mut gains {
        *g = 1.0 + cfg.amplitude_jitter * (2.0 * rng.random::<f64>() - 1.0);
    }
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("sigma validated non-negative");

    let mut samples = Vec::with_capacity(len);
    for t in 0..len {
        let clean = template.eval(normalized_time(t, len));
        let mut s = SensorSample::default();
        for c in 0..CHANNELS {
            s.0[c] = gains[c] * clean[c] + noise.sample(rng);
        }
        cfg.mask.apply(&mut s);
        samples.push(s);
    }
    SensorSequence {
        samples,
        labels: Some(vec![template.class; len]),
        segments: vec![Segment {
            class: template.class,
            start: 0,
            end: len,
        }],
    }
}

fn template_for(
    templates: &[GestureTemplate],
    class: usize,
) -> Result<&GestureTemplate, SynthError> {
    templates
        .iter()
        .find(|t| t.class == class)
        .ok_or(SynthError::UnknownClass(class))
}

/// Gestures back to back, with a noise-only gap between consecutive ones.
/// Gap timesteps carry the preceding gesture's label.
pub fn gen_session(
    templates: &[GestureTemplate],
    classes: &[usize],
    cfg: &GenConfig,
    rng: &mut impl Rng,
) -> Result<SensorSequence, SynthError> {
    cfg.validate()?;
    if classes.is_empty() {
        return Err(SynthError::EmptySession);
    }
    if classes.len() > MAX_SESSION_GESTURES {
        return Err(SynthError::SessionTooLong(classes.len()));
    }
    let chosen = classes
        .iter()
        .map(|&c| template_for(templates, c))
        .collect::<Result<Vec<_>, _>>()?;
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("sigma validated non-negative");

    let mut session = SensorSequence::default();
    for (i, template) in chosen.iter().enumerate() {
        if i > 0 {
            let gap = rng.random_range(cfg.gap_min..=cfg.gap_max);
            for _ in 0..gap {
                let mut s = SensorSample::default();
                s.0.iter_mut().for_each(|v| *v = noise.sample(rng));
                cfg.mask.apply(&mut s);
                session.samples.push(s);
            }
        }
        let start = session.samples.len();
        let g = gen_gesture(template, cfg, rng);
        session.samples.extend(g.samples);
        session.segments.push(Segment {
            class: template.class,
            start,
            end: session.samples.len(),
        });
    }
    session.labels = Some(expand_segments(&session.segments, session.samples.len()));
    Ok(session)
}

/// Sizes of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    /// Single-gesture training sequences per class.
    pub train_per_class: usize,
    /// Random multi-gesture training sessions.
    pub train_sessions: usize,
    /// Single-gesture test sequences per class.
    pub test_per_class: usize,
    /// Random multi-gesture test sessions.
    pub test_sessions: usize,
    /// Inclusive gesture-count range of random sessions.
    pub session_min: usize,
    pub session_max: usize,
    /// Extra test sessions with a prescribed class order.
    pub fixed_sessions: Vec<Vec<usize>>,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            train_per_class: 200,
            train_sessions: 200,
            test_per_class: 50,
            test_sessions: 200,
            session_min: 2,
            session_max: 4,
            fixed_sessions: Vec::new(),
        }
    }
}

/// A generated sequence with its ordered ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledItem {
    pub truth: Vec<usize>,
    pub sequence: SensorSequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<LabeledItem>,
    pub test: Vec<LabeledItem>,
}

/// splitmix64 finalizer, used to derive independent stream seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const TRAIN_STREAM: u64 = 1;
pub const TEST_STREAM: u64 = 2;

/// Distinct classes in random order, count drawn from `min..=max`.
pub fn random_session_classes(rng: &mut impl Rng, min: usize, max: usize) -> Vec<usize> {
    let count = rng.random_range(min..=max).min(NUM_CLASSES);
    rand::seq::index::sample(rng, NUM_CLASSES, count)
        .into_iter()
        .map(|i| i + 1)
        .collect()
}

fn gen_split(
    templates: &[GestureTemplate],
    cfg: &GenConfig,
    rng: &mut ChaCha8Rng,
    per_class: usize,
    sessions: usize,
    spec: &DatasetSpec,
    fixed: &[Vec<usize>],
) -> Result<Vec<LabeledItem>, SynthError> {
    let mut items = Vec::new();
    for _ in 0..per_class {
        for template in templates {
            items.push(LabeledItem {
                truth: vec![template.class],
                sequence: gen_gesture(template, cfg, rng),
            });
        }
    }
    for _ in 0..sessions {
        let classes = random_session_classes(rng, spec.session_min, spec.session_max);
        items.push(LabeledItem {
            sequence: gen_session(templates, &classes, cfg, rng)?,
            truth: classes,
        });
    }
    for classes in fixed {
        items.push(LabeledItem {
            sequence: gen_session(templates, classes, cfg, rng)?,
            truth: classes.clone(),
        });
    }
    Ok(items)
}

/// Train and test splits drawn from disjoint seeded RNG streams.
pub fn gen_dataset(cfg: &GenConfig, spec: &DatasetSpec) -> Result<Dataset, SynthError> {
    cfg.validate()?;
    if spec.session_min == 0
        || spec.session_min > spec.session_max
        || spec.session_max > NUM_CLASSES
    {
        return Err(SynthError::Config(format!(
            "session size range {}..={} must lie within 1..={NUM_CLASSES}",
            spec.session_min, spec.session_max
        )));
    }
    let templates = default_templates();
    let mut train_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, TRAIN_STREAM));
    let mut test_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, TEST_STREAM));
    Ok(Dataset {
        train: gen_split(
            &templates,
            cfg,
            &mut train_rng,
            spec.train_per_class,
            spec.train_sessions,
            spec,
            &[],
        )?,
        test: gen_split(
            &templates,
            cfg,
            &mut test_rng,
            spec.test_per_class,
            spec.test_sessions,
            spec,
            &spec.fixed_sessions,
        )?,
    })
}
