//! Continuous gesture recognition from 6-axis inertial sensor sequences.
//!
//! A single-layer LSTM labels every timestep of a recording with one of `Q`
//! gesture classes. The resulting label path is decoded into an ordered list
//! of `k` distinct gestures by picking the `k` classes that occupy the most
//! timesteps and ordering them by first appearance.
//!
//! Modules:
//! - [`numerics`]: dense f64 vectors/matrices and activations
//! - [`lstm`]: the network, forward pass, loss and BPTT
//! - [`train`]: Adam and the training loop
//! - [`gradcheck`]: finite-difference verification of BPTT
//! - [`decoder`]: label paths, spotting and MAP decoding
//! - [`data`] / [`synth`]: sensor sequences, CSV, synthetic generator
//! - [`eval`]: confusion matrices and report tables

pub mod data;
pub mod decoder;
pub mod eval;
pub mod gradcheck;
pub mod lstm;
pub mod numerics;
pub mod synth;
pub mod train;

pub use data::{SensorMask, SensorSample, SensorSequence};
pub use decoder::{argmax_path, map_decode, DecodeError, LabelPath, Recognition};
pub use lstm::{LstmError, Network};
pub use train::{train, TrainConfig, TrainingSequence};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecognizeError {
    #[error(transparent)]
    Network(#[from] LstmError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Forward pass, argmax path, MAP decode. Returns the path with the result.
pub fn recognize<X: AsRef<[f64]>>(
    net: &Network,
    inputs: &[X],
    k: usize,
) -> Result<(LabelPath, Recognition), RecognizeError> {
    let path = label_path(net, inputs)?;
    let recognition = map_decode(&path, k)?;
    Ok((path, recognition))
}

/// Forward pass followed by the per-timestep argmax.
pub fn label_path<X: AsRef<[f64]>>(
    net: &Network,
    inputs: &[X],
) -> Result<LabelPath, RecognizeError> {
    let trace = net.forward(inputs)?;
    let outputs: Vec<&[f64]> = trace.outputs().collect();
    Ok(argmax_path(&outputs)?)
}
