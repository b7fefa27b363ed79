use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tracenorm::audio::{write_wav, Corruption, MFCC_COLS};
use tracenorm::classifier::{accuracy, apg_fit, objective, ApgConfig, LinearMatrixModel, LipschitzBound};
use tracenorm::experiment::config::{CorruptionDomain, ExperimentConfig, Trainer};
use tracenorm::experiment::dataset::load_dataset;
use tracenorm::experiment::manifest::{Manifest, ManifestEntry, Split};
use tracenorm::experiment::synth::{generate, SynthParams};
use tracenorm::experiment::train::train;
use tracenorm::linalg::text::{read_matrix_file, write_matrix_file};
use tracenorm::linalg::{frobenius, numerical_rank};
use tracenorm::online::{online_fit, OnlineConfig, OnlineMode};
use tracenorm::rpca::{rpca_ialm, RpcaConfig};
use tracenorm::Matrix;

const RATE: u32 = 8000;

/// One second of a tone plus mild noise, as 16-bit PCM.
fn tone(freq: f64, rng: &mut ChaCha8Rng) -> Vec<i16> {
    let phase = rng.random::<f64>() * 2.0 * PI;
    (0..RATE as usize)
        .map(|k| {
            let s = (2.0 * PI * freq * k as f64 / RATE as f64 + phase).sin();
            let n: f64 = rng.sample(StandardNormal);
            ((s + 0.05 * n) * 8000.0) as i16
        })
        .collect()
}

/// Low tones are class +1, high tones class −1.
fn tone_manifest(dir: &std::path::Path) -> Manifest {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut entries = Vec::new();
    for (split, count) in [(Split::Train, 6), (Split::Test, 4)] {
        for i in 0..count {
            for (label, base) in [(1.0, 400.0), (-1.0, 2500.0)] {
                let name = format!("{split:?}_{label}_{i}.wav");
                write_wav(&dir.join(&name), &tone(base + 20.0 * i as f64, &mut rng), RATE).unwrap();
                entries.push(ManifestEntry { path: name.into(), label, split });
            }
        }
    }
    Manifest::new(entries, dir)
}

#[test]
fn wav_manifest_trains_to_separate_tones() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = tone_manifest(dir.path());
    manifest.save(&dir.path().join("manifest.csv")).unwrap();
    let manifest = Manifest::load(&dir.path().join("manifest.csv")).unwrap();

    let cfg = ExperimentConfig { lambda: 0.1, max_iter: Some(300), ..Default::default() };
    let data = load_dataset(&manifest, &cfg).unwrap();
    assert_eq!(data.train.len(), 12);
    assert_eq!(data.test.len(), 8);
    assert_eq!(data.train[0].dim(), (cfg.frames, MFCC_COLS));

    let out = train(&data, &cfg).unwrap();
    assert_eq!(accuracy(&out.model, &data.test).unwrap(), 1.0);
    let t: Vec<f64> = out.trace.iter().map(|r| r.objective).collect();
    assert!(t.last().unwrap() < &t[0]);
}

#[test]
fn corruption_domains_change_features_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = tone_manifest(dir.path());
    let clean = load_dataset(&manifest, &ExperimentConfig::default()).unwrap();
    for domain in [CorruptionDomain::Raw, CorruptionDomain::Features] {
        let cfg = ExperimentConfig {
            corruption: Corruption::Wgn { snr_db: 0.0 },
            corruption_domain: domain,
            ..Default::default()
        };
        let a = load_dataset(&manifest, &cfg).unwrap();
        let b = load_dataset(&manifest, &cfg).unwrap();
        assert_eq!(a.train, b.train);
        assert_ne!(a.train[0].x, clean.train[0].x);
    }
}

#[test]
fn online_trainers_approach_batch_objective() {
    let p = SynthParams { rows: 5, cols: 4, train_per_class: 30, test_per_class: 0, ..Default::default() };
    let train: Vec<_> = generate(&p).unwrap().into_iter().map(|s| s.sample).collect();
    let batch_cfg = ApgConfig { max_iter: 5000, lipschitz: LipschitzBound::Tight, ..ApgConfig::new(1.0) };
    let batch = apg_fit(&train, &batch_cfg, None).unwrap();
    let reference = objective(&train, &batch.model).unwrap();

    let exact = OnlineConfig {
        inner_max_iter: 20000,
        lipschitz: LipschitzBound::Tight,
        ..OnlineConfig::new(1.0, OnlineMode::Exact)
    };
    let fit = online_fit(train.clone(), &exact).unwrap();
    assert_eq!(fit.steps, train.len());
    let gap = objective(&train, &fit.model).unwrap() / reference - 1.0;
    assert_eq!(fit.capped_steps, 0);
    assert!(gap.abs() < 1e-6, "exact gap {gap}");

    let inexact = OnlineConfig { mode: OnlineMode::Inexact, ..exact };
    let fit = online_fit(train.clone(), &inexact).unwrap();
    assert_eq!(fit.svd_calls, 2 * train.len());
    let gap = objective(&train, &fit.model).unwrap() / reference - 1.0;
    assert!((-1e-6..0.25).contains(&gap), "inexact gap {gap}");
}

#[test]
fn trainers_share_a_model_format() {
    let dir = tempfile::tempdir().unwrap();
    let p = SynthParams { train_per_class: 20, test_per_class: 10, ..Default::default() };
    let mut data = tracenorm::experiment::dataset::Dataset::default();
    for s in generate(&p).unwrap() {
        match s.split {
            Split::Train => data.train.push(s.sample),
            Split::Test => {
                data.test_paths.push("synthetic".into());
                data.test.push(s.sample);
            }
        }
    }
    for trainer in Trainer::ALL {
        let cfg = ExperimentConfig { trainer, batch_size: 4, ..Default::default() };
        let out = train(&data, &cfg).unwrap();
        let path = dir.path().join(format!("{trainer}.txt"));
        out.model.save(&path).unwrap();
        let back = LinearMatrixModel::load(&path).unwrap();
        assert_eq!(back, out.model, "{trainer}");
        assert!(accuracy(&back, &data.test).unwrap() >= 0.9, "{trainer}");
    }
}

#[test]
fn rpca_from_matrix_file_separates_spikes() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u = Matrix::from_shape_fn((40, 1), |_| rng.sample(StandardNormal));
    let v = Matrix::from_shape_fn((1, 60), |_| rng.sample(StandardNormal));
    let low = u.dot(&v);
    let mut observed = low.clone();
    for k in 0..60 {
        observed[[(k * 7) % 40, k]] += 20.0;
    }
    let path = dir.path().join("d.txt");
    write_matrix_file(&path, &observed).unwrap();
    let d = read_matrix_file(&path).unwrap();
    assert_eq!(d, observed);

    let out = rpca_ialm(&d.view(), &RpcaConfig::for_shape(40, 60)).unwrap();
    assert!(out.converged);
    let err = frobenius(&(&out.low_rank - &low).view()) / frobenius(&low.view());
    assert!(err < 1e-5, "{err}");
    assert_eq!(numerical_rank(&out.low_rank.view(), 1e-6).unwrap(), 1);
}
