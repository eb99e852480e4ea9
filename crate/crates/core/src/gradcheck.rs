//! Central finite-difference check of [`backward_bptt`].

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoder::LabelPath;
use crate::lstm::{backward_bptt, forward_sequence, sequence_loss, Gradients, LstmError, Network};

pub const TENSOR_NAMES: [&str; 5] = ["W_x", "W_h", "b", "W_y", "b_y"];

/// A single parameter entry: tensor (by [`TENSOR_NAMES`] index) and flat offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coordinate {
    pub tensor: usize,
    pub index: usize,
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", TENSOR_NAMES[self.tensor], self.index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst: Coordinate,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn loss_at<X: AsRef<[f64]>>(
    net: &Network,
    inputs: &[X],
    labels: &LabelPath,
) -> Result<f64, LstmError> {
    let trace = forward_sequence(&net.lstm, &net.output, inputs)?;
    sequence_loss(&trace, labels)
}

/// Compares `analytic` against central differences of the loss, coordinate by coordinate.
pub fn compare_gradients<X: AsRef<[f64]>>(
    net: &Network,
    inputs: &[X],
    labels: &LabelPath,
    analytic: &Gradients,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport, LstmError> {
    let mut probe = net.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: Coordinate {
            tensor: 0,
            index: 0,
        },
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
        tolerance,
    };
    let analytic_tensors = analytic.tensors();
    for (tensor, grads) in analytic_tensors.iter().enumerate() {
        for (index, &a) in grads.iter().enumerate() {
            let original = probe.tensors()[tensor][index];
            probe.tensors_mut()[tensor][index] = original + step;
            let plus = loss_at(&probe, inputs, labels)?;
            probe.tensors_mut()[tensor][index] = original - step;
            let minus = loss_at(&probe, inputs, labels)?;
            probe.tensors_mut()[tensor][index] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let err = relative_error(a, numeric);
            report.checked += 1;
            if err > report.max_relative_error || report.checked == 1 {
                report.max_relative_error = err;
                report.worst = Coordinate { tensor, index };
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}

/// Runs BPTT on `net` and checks it against finite differences.
pub fn gradient_check<X: AsRef<[f64]>>(
    net: &Network,
    inputs: &[X],
    labels: &LabelPath,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport, LstmError> {
    let trace = forward_sequence(&net.lstm, &net.output, inputs)?;
    let grads = backward_bptt(&net.lstm, &net.output, &trace, labels)?;
    compare_gradients(net, inputs, labels, &grads, step, tolerance)
}

/// A random instance for checking: network, inputs and labels.
#[derive(Debug, Clone)]
pub struct CheckInstance {
    pub network: Network,
    pub inputs: Vec<Vec<f64>>,
    pub labels: LabelPath,
}

/// Weights uniform in ±0.5·scale, biases uniform in ±0.1·scale, inputs in ±1.
pub fn random_instance(
    inputs: usize,
    hidden: usize,
    classes: usize,
    len: usize,
    seed: u64,
) -> CheckInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut network = Network::zeros(inputs, hidden, classes);
    for (k, t) in network.tensors_mut().into_iter().enumerate() {
        let s = if k == 2 || k == 4 { 0.1 } else { 0.5 };
        t.iter_mut().for_each(|v| *v = rng.random_range(-s..s));
    }
    let xs = (0..len)
        .map(|_| (0..inputs).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let labels = (0..len).map(|_| rng.random_range(1..=classes)).collect();
    CheckInstance {
        network,
        inputs: xs,
        labels: LabelPath::new(labels, classes).expect("labels drawn in range"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_small_instances_pass() {
        for seed in 0..10 {
            let inst = random_instance(3, 4, 3, 5, seed);
            let r = gradient_check(&inst.network, &inst.inputs, &inst.labels, 1e-5, 1e-4).unwrap();
            assert!(r.passed(), "seed {seed}: {r:?}");
            assert_eq!(r.checked, inst.network.num_params());
        }
    }

    #[test]
    fn zero_network_passes() {
        let net = Network::zeros(3, 4, 3);
        let labels = LabelPath::new(vec![1, 3, 2], 3).unwrap();
        let xs = vec![vec![0.5, -0.5, 1.0]; 3];
        let r = gradient_check(&net, &xs, &labels, 1e-5, 1e-4).unwrap();
        assert!(r.analytic.is_finite() && r.numeric.is_finite());
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let inst = random_instance(3, 4, 3, 5, 42);
        let trace = inst.network.forward(&inst.inputs).unwrap();
        let mut grads = backward_bptt(
            &inst.network.lstm,
            &inst.network.output,
            &trace,
            &inst.labels,
        )
        .unwrap();
        grads.lstm.w_h.as_mut_slice()[7] += 1.0;
        let r = compare_gradients(
            &inst.network,
            &inst.inputs,
            &inst.labels,
            &grads,
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(!r.passed());
        assert_eq!(
            r.worst,
            Coordinate {
                tensor: 1,
                index: 7
            }
        );
        assert_eq!(r.worst.to_string(), "W_h[7]");
    }
}
