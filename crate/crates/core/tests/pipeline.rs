use std::fs;
use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use qkernel_core::data::idx::{encode_images, encode_labels};
use qkernel_core::data::{filter_binary, fit_pca, load_idx, split_indices, RawImageSet, DRESS, SHIRT};
use qkernel_core::krr::{fit, fitted_values, misclassification_rate, predict_rows, worst_hypothesis};
use qkernel_core::noise::{apply_depolarization, compose_depolarization, depolarize_block};
use qkernel_core::statevector::{cross_kernel, embed_all, gram_from_states};
use qkernel_core::{CircuitConfig, LabeledSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two well-separated blob classes plus a distractor class on 6x6 images.
fn fixture() -> RawImageSet {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (rows, cols) = (6, 6);
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..90 {
        let class = [DRESS, SHIRT, 0][i % 3];
        for r in 0..rows {
            for c in 0..cols {
                let lit = match class {
                    DRESS => c < 3,
                    SHIRT => r < 3,
                    _ => (r + c) % 2 == 0,
                };
                let base: i32 = if lit { 200 } else { 30 };
                pixels.push((base + rng.random_range(-25..=25)).clamp(0, 255) as u8);
            }
        }
        labels.push(class);
    }
    RawImageSet::new(rows, cols, pixels, labels).unwrap()
}

fn gzip(bytes: &[u8]) -> Vec<u8> {
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(bytes).unwrap();
    enc.finish().unwrap()
}

#[test]
fn idx_archive_to_trained_classifier() {
    let raw = fixture();
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("images.gz");
    let labels = dir.path().join("labels");
    fs::write(&images, gzip(&encode_images(&raw))).unwrap();
    fs::write(&labels, encode_labels(&raw)).unwrap();

    let loaded = load_idx(&images, &labels).unwrap();
    assert_eq!(loaded.len(), 90);
    assert_eq!(loaded.labels(), raw.labels());
    assert_eq!(loaded.image(17), raw.image(17));

    let sel = filter_binary(&loaded, DRESS, SHIRT).unwrap();
    assert_eq!(sel.len(), 60);
    let (tr, te) = split_indices(&sel.labels, 30, 20, 5, true).unwrap();
    let sum = |idx: &[usize]| idx.iter().map(|&i| sel.labels[i]).sum::<f64>();
    assert_eq!(sum(&tr), 0.0);
    assert_eq!(sum(&te), 0.0);

    let pick = |idx: &[usize]| idx.iter().map(|&i| sel.images[i].clone()).collect::<Vec<_>>();
    let pca = fit_pca(&pick(&tr), 2).unwrap();
    let train_x = pca.project_all(&pick(&tr)).unwrap();
    let test_x = pca.project_all(&pick(&te)).unwrap();
    for x in train_x.iter() {
        assert!(x.as_slice().iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    let cfg = CircuitConfig::new(2, 1).unwrap();
    let train_states = embed_all(&train_x, &cfg).unwrap();
    let test_states = embed_all(&test_x, &cfg).unwrap();
    let ideal = gram_from_states(&train_states).unwrap();
    let cross = cross_kernel(&test_states, &train_states).unwrap();
    let train_y: Vec<f64> = tr.iter().map(|&i| sel.labels[i]).collect();
    let test_y: Vec<f64> = te.iter().map(|&i| sel.labels[i]).collect();
    let sample = LabeledSample::new(train_x, train_y.clone()).unwrap();

    let noise = compose_depolarization(0.01, 2).unwrap();
    let noisy = apply_depolarization(&ideal, &noise).unwrap();
    let model = fit(&noisy, &sample, 0.05).unwrap();
    assert!(model.warning().is_none());
    let train_err = misclassification_rate(&fitted_values(&model, &noisy).unwrap(), &train_y).unwrap();
    let test_rows = depolarize_block(&cross, &noise, 4);
    let test_err = misclassification_rate(
        &predict_rows(&model, &test_rows, noisy.kind()).unwrap(),
        &test_y,
    )
    .unwrap();
    assert!(train_err <= 0.1, "train error {train_err}");
    assert!(test_err <= 0.2, "test error {test_err}");

    // balanced labels make the constant hypothesis exactly zero
    assert_eq!(worst_hypothesis(&sample, 0.05, 4).unwrap().constant_value, 0.0);
}
