//! End-to-end acceptance checks. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and fails if any criterion fails. Run with `--nocapture` to see
//! the lines and the generated reports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use gesture_cli::{
    cmd_eval, cmd_gen, cmd_gradcheck, cmd_train, evaluate, load_network, load_split, save_model,
    EvalArgs, GenArgs, GradcheckArgs, MaskList, ModelFile, TrainArgs,
};
use gesture_core::data::{load_csv, save_csv, Role};
use gesture_core::decoder::brute_force_decode;
use gesture_core::lstm::sequence_loss;
use gesture_core::numerics::{softmax, Vector};
use gesture_core::synth::{gen_dataset, DatasetSpec, GenConfig};
use gesture_core::{
    map_decode, recognize, train, LabelPath, Network, SensorMask, SensorSequence, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HIDDEN_SIZES: [usize; 3] = [16, 32, 64];
const FIXED_SESSION: [usize; 4] = [4, 2, 5, 6];

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn sink() -> Vec<u8> {
    Vec::new()
}

fn train_args(data: &Path, model: PathBuf, hidden: usize) -> TrainArgs {
    TrainArgs {
        data_dir: data.to_path_buf(),
        model,
        hidden,
        epochs: 30,
        lr: 3e-3,
        batch: 8,
        clip: 5.0,
        seed: 7,
    }
}

/// Default synthetic dataset on disk plus one trained model per hidden size.
struct Fixture {
    _dir: tempfile::TempDir,
    data: PathBuf,
    models: Vec<(usize, PathBuf, Duration)>,
    test: Vec<(Vec<usize>, SensorSequence)>,
}

impl Fixture {
    fn build() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let gen = GenArgs {
            sessions: vec!["4,2,5,6".parse().unwrap()],
            ..GenArgs::new(&data)
        };
        cmd_gen(&gen, &mut sink()).unwrap();
        let mut models = Vec::new();
        for h in HIDDEN_SIZES {
            let path = dir.path().join(format!("h{h}.json"));
            let start = Instant::now();
            cmd_train(&train_args(&data, path.clone(), h), &mut sink()).unwrap();
            models.push((h, path, start.elapsed()));
        }
        let (_, items) = load_split(&data, Role::Test).unwrap();
        let test = items.into_iter().map(|(e, s)| (e.truth, s)).collect();
        Fixture {
            _dir: dir,
            data,
            models,
            test,
        }
    }

    fn model(&self, h: usize) -> (Network, &Path, Duration) {
        let (_, path, took) = self.models.iter().find(|m| m.0 == h).unwrap();
        (load_network(path).unwrap().1, path, *took)
    }

    fn singles(&self) -> Vec<(Vec<usize>, SensorSequence)> {
        self.test
            .iter()
            .filter(|(t, _)| t.len() == 1)
            .cloned()
            .collect()
    }

    fn random_sessions(&self) -> Vec<(Vec<usize>, SensorSequence)> {
        let mut sessions: Vec<_> = self
            .test
            .iter()
            .filter(|(t, _)| t.len() > 1)
            .cloned()
            .collect();
        // The prescribed session is generated last; score it separately.
        assert_eq!(sessions.pop().unwrap().0, FIXED_SESSION);
        sessions
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let reports = cmd_gradcheck(&GradcheckArgs::default(), &mut sink());
    let took = start.elapsed();
    match reports {
        Ok(r) => {
            let worst = r.iter().map(|r| r.max_relative_error).fold(0.0, f64::max);
            check(
                r.len() == 10 && worst < 1e-4 && took < Duration::from_secs(10),
                format!(
                    "gradcheck 10 instances, max relative error {worst:.3e} < 1e-4, {}",
                    secs(took)
                ),
            )
        }
        Err(e) => check(false, format!("gradcheck: {e}")),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    let mut compared = 0;
    for _ in 0..1000 {
        let len = rng.random_range(5..=40);
        let labels: Vec<usize> = (0..len).map(|_| rng.random_range(1..=6)).collect();
        let path = LabelPath::new(labels, 6).unwrap();
        let k = rng.random_range(1..=3);
        match (map_decode(&path, k), brute_force_decode(&path, 6, k)) {
            (Ok(fast), Ok(slow)) => {
                compared += 1;
                let (a, b) = (
                    fast.posterior_ratio().unwrap(),
                    slow.posterior_ratio().unwrap(),
                );
                // Same denominator T^k, so equal numerators mean equal posteriors.
                if a.0 * b.1 != b.0 * a.1 {
                    mismatches += 1;
                }
            }
            (Err(_), Err(_)) => {}
            _ => mismatches += 1,
        }
    }
    let took = start.elapsed();
    check(
        mismatches == 0 && compared > 900 && took < Duration::from_secs(5),
        format!("map_decode == brute force on 1000 paths ({compared} decodable, {mismatches} mismatches), {}", secs(took)),
    )
}

fn criterion_3() -> Outcome {
    let path = LabelPath::new(vec![2, 2, 2, 2, 3, 3, 3, 3, 1, 1, 1, 6], 6).unwrap();
    let r = map_decode(&path, 3).unwrap();
    check(
        r.outcome == [2, 3, 1],
        format!(
            "path 2222 3333 111 6 with k=3 decodes to {:?} (expected [2, 3, 1])",
            r.outcome
        ),
    )
}

fn criterion_4(f: &Fixture) -> Outcome {
    let (net, _, took) = f.model(32);
    let singles = f.singles();
    let report = evaluate(&net, &singles, SensorMask::Both).unwrap();
    let per_class = singles.len() / 6;
    check(
        report.accuracy >= 0.95 && took < Duration::from_secs(600),
        format!(
            "H=32 held-out single-gesture accuracy {:.2}% >= 95% on {} sequences ({per_class}/class), training {}",
            100.0 * report.accuracy,
            singles.len(),
            secs(took)
        ),
    )
}

fn criterion_5(f: &Fixture) -> Outcome {
    let (net, _, _) = f.model(32);
    let sessions = f.random_sessions();
    let report = evaluate(&net, &sessions, SensorMask::Both).unwrap();
    let (_, fixed) = f.test.last().unwrap();
    let decoded = recognize(&net, &fixed.samples, 4).map(|(_, r)| r.outcome);
    let fixed_ok = decoded.as_deref() == Ok(&FIXED_SESSION[..]);
    check(
        report.session_exact_match >= 0.9 && sessions.len() == 200 && fixed_ok,
        format!(
            "exact-ordered match {:.2}% >= 90% on {} sessions; (4,2,5,6) decodes to {:?}",
            100.0 * report.session_exact_match,
            sessions.len(),
            decoded.map_err(|e| e.to_string())
        ),
    )
}

fn criterion_6_and_7(f: &Fixture, report_dir: &Path) -> (Outcome, Outcome) {
    let prefix = report_dir.join("eval");
    let args = EvalArgs {
        model: f.models.iter().map(|m| m.1.clone()).collect(),
        data_dir: f.data.clone(),
        mask: "accel,gyro,both".parse::<MaskList>().unwrap(),
        report: Some(prefix.clone()),
    };
    let mut text = sink();
    let out = match cmd_eval(&args, &mut text) {
        Ok(out) => out,
        Err(e) => {
            let fail = || check(false, format!("eval failed: {e}"));
            return (fail(), fail());
        }
    };
    println!("{}", String::from_utf8_lossy(&text));

    let singles = f.singles();
    let mut single_acc = Vec::new();
    for h in HIDDEN_SIZES {
        let (net, _, _) = f.model(h);
        single_acc.push(evaluate(&net, &singles, SensorMask::Both).unwrap().accuracy);
    }
    let sweep = out.sweep.clone().unwrap_or_default();
    let sweep_ok = sweep.iter().map(|r| r.hidden).eq(HIDDEN_SIZES)
        && sweep.iter().all(|r| r.accuracy >= 0.9)
        && single_acc.iter().all(|&a| a >= 0.9)
        && out.text.contains("Accuracy by hidden dimension");
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|a| format!("{:.2}%", 100.0 * a))
            .collect::<Vec<_>>()
            .join(" / ")
    };
    let six = check(
        sweep_ok,
        format!(
            "H=16/32/64 accuracy {} (all test slots), {} (singles), all >= 90%; sweep report emitted",
            fmt(&sweep.iter().map(|r| r.accuracy).collect::<Vec<_>>()),
            fmt(&single_acc)
        ),
    );

    let json: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(prefix.with_extension("json")).unwrap_or_default(),
    )
    .unwrap_or_default();
    let shaped = out.models.iter().all(|m| {
        let rows = m.ablation.as_ref().map_or(&[][..], |a| &a.rows[..]);
        rows.iter().map(|r| r.mask).eq(SensorMask::ALL)
            && rows.iter().all(|r| r.hit_rate.len() == 6)
            && m.reports.iter().all(|r| r.report.confusion_pct.len() == 6)
    });
    let keys = [
        "confusion_pct",
        "hit_rate",
        "accuracy",
        "session_exact_match",
    ]
    .iter()
    .all(|k| !json["models"][0]["reports"][0][k].is_null());
    let seven = check(
        shaped && keys && prefix.with_extension("txt").exists(),
        "eval --mask accel,gyro,both: 3x6 hit-rate table and 6x6 confusion per sensor set, text and JSON written",
    );
    (six, seven)
}

fn criterion_8(f: &Fixture, scratch: &Path) -> Outcome {
    let mut notes = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let softmax_err = (0..1000)
        .map(|_| {
            let n = rng.random_range(1..=20);
            let scale = [1.0, 10.0, 300.0][rng.random_range(0..3)];
            let v = Vector::new((0..n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap();
            (softmax(&v).iter().sum::<f64>() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let softmax_ok = softmax_err <= 1e-12;
    notes.push(format!("softmax |sum-1| {softmax_err:.1e}"));

    let xs: Vec<[f64; 6]> = (0..17)
        .map(|t| [t as f64, -1.0, 0.5, 2.0, 0.0, 3.0])
        .collect();
    let labels = LabelPath::new((0..17).map(|t| t % 6 + 1).collect(), 6).unwrap();
    let zero = Network::zeros(6, 8, 6);
    let loss = sequence_loss(&zero.forward(&xs).unwrap(), &labels).unwrap();
    let loss_ok = (loss - 6f64.ln()).abs() <= 1e-12;
    notes.push(format!("zero-param loss - ln 6 = {:.1e}", loss - 6f64.ln()));

    let subset: Vec<_> = f
        .test
        .iter()
        .take(120)
        .map(|(_, s)| s.to_training().unwrap())
        .collect();
    let cfg = TrainConfig {
        hidden: 8,
        epochs: 2,
        batch_size: 4,
        seed: 3,
        ..TrainConfig::default()
    };
    let a = train(&subset, 6, &cfg).unwrap();
    let b = train(&subset, 6, &cfg).unwrap();
    let repro_ok = a == b
        && a.network
            .tensors()
            .iter()
            .zip(b.network.tensors())
            .all(|(x, y)| {
                x.iter()
                    .zip(y.iter())
                    .all(|(p, q)| p.to_bits() == q.to_bits())
            });
    notes.push(format!("training reproducible: {repro_ok}"));

    let (net, path, _) = f.model(32);
    let copy = scratch.join("resaved.json");
    save_model(
        &ModelFile::from_network(&net, load_network(path).unwrap().0.train_config),
        &copy,
    )
    .unwrap();
    let model_ok = fs::read(path).unwrap() == fs::read(&copy).unwrap();
    notes.push(format!("model re-save byte-identical: {model_ok}"));

    // Freshly generated sequences carry full f64 precision.
    let spec = DatasetSpec {
        train_per_class: 5,
        train_sessions: 5,
        test_per_class: 0,
        test_sessions: 0,
        ..DatasetSpec::default()
    };
    let fresh = gen_dataset(&GenConfig::default(), &spec).unwrap().train;
    let mut csv_err: f64 = 0.0;
    for (i, seq) in fresh.iter().map(|item| &item.sequence).enumerate() {
        let p = scratch.join(format!("c{i}.csv"));
        save_csv(seq, &p).unwrap();
        let back = load_csv(&p).unwrap();
        assert_eq!(back.labels, seq.labels);
        for (x, y) in back.samples.iter().zip(&seq.samples) {
            for (u, v) in x.0.iter().zip(&y.0) {
                csv_err = csv_err.max((u - v).abs() / v.abs().max(1e-300));
            }
        }
    }
    // Nine significant digits: relative error at most half a unit in the ninth.
    let csv_ok = csv_err <= 5e-9;
    notes.push(format!("CSV max relative error {csv_err:.1e}"));

    check(
        softmax_ok && loss_ok && repro_ok && model_ok && csv_ok,
        notes.join("; "),
    )
}

#[test]
fn acceptance() {
    let scratch = tempfile::tempdir().unwrap();
    let mut results = vec![(1, criterion_1()), (2, criterion_2()), (3, criterion_3())];

    let start = Instant::now();
    let fixture = Fixture::build();
    println!(
        "fixture: {} test sequences, models H={HIDDEN_SIZES:?} trained in {}",
        fixture.test.len(),
        secs(start.elapsed())
    );
    results.push((4, criterion_4(&fixture)));
    results.push((5, criterion_5(&fixture)));
    let (six, seven) = criterion_6_and_7(&fixture, scratch.path());
    results.push((6, six));
    results.push((7, seven));
    results.push((8, criterion_8(&fixture, scratch.path())));

    // Written to stderr directly so the verdicts show without --nocapture.
    let mut err = std::io::stderr().lock();
    for (n, r) in &results {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(err, "[{verdict}] criterion {n}: {}", r.detail);
    }
    drop(err);
    let failed: Vec<_> = results
        .iter()
        .filter(|(_, r)| !r.passed)
        .map(|(n, _)| *n)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
