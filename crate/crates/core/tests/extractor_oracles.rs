mod common;

use std::collections::BTreeSet;

use common::*;
use skbmlfx_core::data::{generate, SynthConfig};
use skbmlfx_core::extractor::{
    autoencoder_residual, classify, extract, train_extractor, train_intermediate,
    train_semantic_ae, train_visual_ae, ClassId, ExtractorError, FeatureLevel, SemanticPrototypes,
    TrainingSet,
};
use skbmlfx_core::linalg::{eigh_sym, row_space_projection, Matrix};

fn dataset(seed: u64) -> TrainingSet {
    let cfg = SynthConfig {
        c_total: 8 + (seed % 4) as usize,
        c_seen_tx: 6,
        c_seen_rx: 6,
        d_v: 10 + (seed % 5) as usize,
        d_s: 7,
        k_hint: 3,
        n_per_class: 3,
        noise_sigma: 0.1,
        seed,
    };
    generate(&cfg).unwrap().tx_train
}

/// `S·H·Sᵀ` built from the explicit projector.
fn energy_matrix(t: &TrainingSet) -> Matrix {
    let h = row_space_projection(t.visual()).unwrap();
    t.semantic().matmul(&h).matmul_t(t.semantic()).symmetrized()
}

fn trace_objective(u: &Matrix, m: &Matrix) -> f64 {
    u.matmul(m).matmul_t(u).trace()
}

#[test]
fn intermediate_map_is_optimal_on_twenty_datasets() {
    for seed in 0..20 {
        let t = dataset(seed);
        let m = energy_matrix(&t);
        let spectrum = eigh_sym(&m).unwrap().values;
        let mut g = rng(1000 + seed);
        for k in [1, 3, 5] {
            let sol = train_intermediate(&t, k).unwrap();
            let achieved = trace_objective(&sol.w_s, &m);
            let best: f64 = spectrum[..k].iter().sum();
            assert!((achieved - best).abs() <= 1e-8 * best.abs().max(1.0), "seed {seed} k {k}");
            for _ in 0..100 {
                let u = orthonormal_rows(&mut g, k, t.semantic_dim());
                assert!(trace_objective(&u, &m) <= achieved + 1e-8);
            }
        }
    }
}

#[test]
fn intermediate_features_follow_the_semantic_map() {
    let t = dataset(2);
    let sol = train_intermediate(&t, 3).unwrap();
    assert!(sol.f.sub(&sol.w_s.matmul(t.semantic())).max_abs() <= 1e-12);
    assert!(sol.w_s.gram().sub(&Matrix::identity(3)).max_abs() <= 1e-8);
    let mut g = rng(7);
    let m = energy_matrix(&t);
    for _ in 0..100 {
        let u = orthonormal_rows(&mut g, 3, t.semantic_dim());
        assert!(trace_objective(&u, &m) <= sol.objective() + 1e-8);
    }
}

#[test]
fn visual_projection_is_a_least_squares_minimiser() {
    let t = dataset(5);
    let sol = train_intermediate(&t, 4).unwrap();
    let residual = |w: &Matrix| w.matmul(t.visual()).sub(&sol.f).frobenius_norm();
    let base = residual(&sol.w_v);
    let mut g = rng(55);
    for _ in 0..200 {
        let delta = gaussian(&mut g, sol.w_v.rows(), sol.w_v.cols());
        let delta = delta.scale(1e-4 / delta.frobenius_norm());
        assert!(residual(&sol.w_v.add(&delta)) >= base - 1e-10);
    }
}

#[test]
fn diagonal_energy_selects_first_axis() {
    let protos = SemanticPrototypes::new(
        vec![ClassId(0), ClassId(1)],
        Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]).unwrap(),
    )
    .unwrap();
    let t = TrainingSet::new(Matrix::identity(2), vec![ClassId(0), ClassId(1)], &protos).unwrap();
    let sol = train_intermediate(&t, 1).unwrap();
    assert!(sol.w_s.sub(&Matrix::from_rows(&[[1.0, 0.0]]).unwrap()).max_abs() <= 1e-15);
    assert!((sol.objective() - 4.0).abs() <= 1e-12);
}

#[test]
fn full_basis_captures_all_energy() {
    let protos = SemanticPrototypes::new(
        (0..4).map(ClassId).collect(),
        gaussian(&mut rng(3), 3, 4),
    )
    .unwrap();
    // Square invertible V, so H = I.
    let v = gaussian(&mut rng(4), 4, 4);
    let t = TrainingSet::new(v, (0..4).map(ClassId).collect(), &protos).unwrap();
    let sol = train_intermediate(&t, 3).unwrap();
    let m = energy_matrix(&t);
    assert!((sol.objective() - m.trace()).abs() <= 1e-10 * m.trace());
}

#[test]
fn autoencoders_satisfy_stationarity_across_lambda_sweep() {
    for seed in 0..20 {
        let t = dataset(100 + seed);
        for lambda in [0.1, 1.0, 10.0] {
            let model = train_extractor(&t, 3, lambda).unwrap();
            let f = model.w_s().matmul(t.semantic());
            assert!(autoencoder_residual(model.p_v(), t.visual(), &f, lambda) <= 1e-8);
            assert!(autoencoder_residual(model.p_s(), t.semantic(), &f, lambda) <= 1e-8);
        }
    }
}

#[test]
fn seeded_autoencoder_instances() {
    let mut g = rng(3);
    let v = gaussian(&mut g, 6, 20);
    let f = gaussian(&mut g, 3, 20);
    let p = train_visual_ae(&v, &f, 1.0).unwrap();
    assert!(autoencoder_residual(&p, &v, &f, 1.0) <= 1e-8);
    let mut g = rng(4);
    let s = gaussian(&mut g, 5, 20);
    let f = gaussian(&mut g, 3, 20);
    let p = train_semantic_ae(&s, &f, 1.0).unwrap();
    assert!(autoencoder_residual(&p, &s, &f, 1.0) <= 1e-8);
}

#[test]
fn self_encoding_returns_identity() {
    let x = orthonormal_rows(&mut rng(9), 4, 4);
    for lambda in [0.1, 1.0, 10.0] {
        let p = train_visual_ae(&x, &x, lambda).unwrap();
        assert!(p.sub(&Matrix::identity(4)).max_abs() <= 1e-10);
        let p = train_semantic_ae(&x, &x, lambda).unwrap();
        assert!(p.sub(&Matrix::identity(4)).max_abs() <= 1e-10);
    }
}

#[test]
fn training_is_deterministic_and_checks_k() {
    let t = dataset(2);
    let a = train_extractor(&t, 3, 1.0).unwrap();
    let b = train_extractor(&t, 3, 1.0).unwrap();
    let bits = |m: &Matrix| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(a.p_v()), bits(b.p_v()));
    assert_eq!(bits(a.p_s()), bits(b.p_s()));
    assert_eq!(bits(a.w_s()), bits(b.w_s()));
    assert!(matches!(
        train_extractor(&t, 8, 1.0),
        Err(ExtractorError::DimensionMismatch(_))
    ));
    assert!(matches!(train_extractor(&t, 3, 0.0), Err(ExtractorError::InvalidLambda(_))));
}

#[test]
fn extraction_levels_compose() {
    let t = dataset(2);
    let model = train_extractor(&t, 3, 1.0).unwrap();
    let v = t.visual().column(0);
    assert_eq!(extract(&model, &v, FeatureLevel::Visual).unwrap(), v);
    let f = model.p_v().mul_vec(&v);
    assert_eq!(extract(&model, &v, FeatureLevel::Intermediate).unwrap(), f);
    let s = model.p_s().transpose().mul_vec(&f);
    let got = extract(&model, &v, FeatureLevel::Semantic).unwrap();
    assert!(got.iter().zip(&s).all(|(a, b)| (a - b).abs() <= 1e-12));
    assert!(extract(&model, &v[1..], FeatureLevel::Visual).is_err());
}

#[test]
fn classifier_agrees_with_expanded_distances() {
    let mut g = rng(77);
    let protos = SemanticPrototypes::new((0..9).map(ClassId).collect(), gaussian(&mut g, 5, 9)).unwrap();
    let all: BTreeSet<ClassId> = protos.class_ids().iter().copied().collect();
    for _ in 0..200 {
        let s = gaussian(&mut g, 5, 1).column(0);
        let (c, d) = classify(&s, &protos, &all).unwrap();
        let ss: f64 = s.iter().map(|x| x * x).sum();
        let expanded: Vec<f64> = (0..9)
            .map(|j| {
                let p = protos.vectors().column(j);
                let pp: f64 = p.iter().map(|x| x * x).sum();
                let ps: f64 = p.iter().zip(&s).map(|(a, b)| a * b).sum();
                pp - 2.0 * ps + ss
            })
            .collect();
        let best = (0..9).min_by(|&a, &b| expanded[a].total_cmp(&expanded[b])).unwrap();
        assert_eq!(c, ClassId(best as u32));
        assert!((d - expanded[best]).abs() <= 1e-10);
    }
}
