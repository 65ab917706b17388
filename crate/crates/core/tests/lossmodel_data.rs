use std::collections::BTreeSet;
use std::sync::Arc;

use skbmlfx_core::channel::{achievable_rate, latency, ChannelParams};
use skbmlfx_core::data::{generate, DataError, GeneratedWorld, SynthConfig, MIN_PROTOTYPE_DISTANCE};
use skbmlfx_core::extractor::{classify, train_extractor, ClassId, ExtractorModel, SemanticPrototypes};
use skbmlfx_core::linalg::{eigh_sym, pinv, Matrix};
use skbmlfx_core::lossmodel::{compute_menu, effective_decision, instance_from_menus, LossError, PartyContext};
use skbmlfx_core::planner::Level;
use skbmlfx_core::skb::{build_skb, SkbSelection};

fn link() -> (ChannelParams, f64) {
    let ch = ChannelParams::default();
    (ch, achievable_rate(&ch).unwrap())
}

/// Model that inverts the generating map exactly: `P_v = G†`, `P_s = I`.
fn perfect_model(world: &GeneratedWorld) -> ExtractorModel {
    let d_s = world.config.d_s;
    let g_inv = pinv(&world.mixing).unwrap();
    let i = Matrix::identity(d_s);
    ExtractorModel::from_parts(i.clone(), g_inv.clone(), g_inv, i, 1.0).unwrap()
}

#[test]
fn shared_party_levels_collapse() {
    let world = generate(&SynthConfig::default()).unwrap();
    let model = train_extractor(&world.tx_train, 8, 1.0).unwrap();
    let skb = build_skb(world.test_prototypes(), &SkbSelection::Full).unwrap();
    let party = PartyContext::new(&model, &skb).unwrap();
    let (ch, rate) = link();
    for sample in world.test.iter().take(50) {
        let menu = compute_menu(&sample.v, party, party, &ch, rate).unwrap();
        let l = menu.losses;
        assert!((l[0] - l[1]).abs() <= 1e-12 && (l[1] - l[2]).abs() <= 1e-12 && l[3] == l[2]);
        assert!(menu.decisions.iter().all(|&c| c == menu.decisions[0]));
        assert!(menu.rx_hit);
        assert_eq!(menu.latencies[3], latency(1, &ch, rate).unwrap());
    }
}

#[test]
fn latencies_scale_with_payload() {
    let world = generate(&SynthConfig::default()).unwrap();
    let model = train_extractor(&world.tx_train, 8, 1.0).unwrap();
    let protos = world.test_prototypes();
    let tx_skb = build_skb(protos.clone(), &SkbSelection::Full).unwrap();
    let rx_skb = build_skb(protos, &SkbSelection::RandomK { k: 4, seed: 3 }).unwrap();
    let tx = PartyContext::new(&model, &tx_skb).unwrap();
    let rx = PartyContext::new(&model, &rx_skb).unwrap();
    let (ch, rate) = link();
    let unit = latency(1, &ch, rate).unwrap();
    let (mut hits, mut misses) = (0, 0);
    for sample in &world.test {
        let menu = compute_menu(&sample.v, tx, rx, &ch, rate).unwrap();
        let t = menu.latencies;
        assert_eq!(t[0] / t[1], 64.0 / 8.0);
        assert_eq!(t[2] / t[1], 16.0 / 8.0);
        if menu.rx_hit {
            hits += 1;
            assert_eq!(t[3], unit);
        } else {
            misses += 1;
            assert_eq!(t[3], latency(16, &ch, rate).unwrap());
        }
        assert_eq!(menu.rx_hit, rx_skb.contains(menu.tx_estimate));
        assert_eq!(effective_decision(&menu, Level::Class), menu.tx_estimate);
        // Receiver decoding of the transmitted intermediate feature, recomputed by hand.
        let s = model.p_s().transpose().mul_vec(&model.p_v().mul_vec(&sample.v));
        let (c, l2) = classify(&s, rx_skb.prototypes(), rx_skb.class_ids()).unwrap();
        assert!((l2 - menu.losses[1]).abs() <= 1e-12);
        assert_eq!(c, effective_decision(&menu, Level::Intermediate));
        assert!(menu.losses.iter().all(|&l| l.is_finite() && l >= 0.0));
    }
    assert!(hits > 0 && misses > 0);
}

#[test]
fn hand_built_two_class_loss() {
    let protos = Arc::new(
        SemanticPrototypes::new(vec![ClassId(1), ClassId(2)], Matrix::identity(2)).unwrap(),
    );
    let i = Matrix::identity(2);
    let model = ExtractorModel::from_parts(i.clone(), i.clone(), i.clone(), i, 1.0).unwrap();
    let tx_skb = build_skb(protos.clone(), &SkbSelection::Full).unwrap();
    let rx_skb = build_skb(protos, &SkbSelection::Explicit(vec![ClassId(2)])).unwrap();
    let tx = PartyContext::new(&model, &tx_skb).unwrap();
    let rx = PartyContext::new(&model, &rx_skb).unwrap();
    let (ch, rate) = link();
    let menu = compute_menu(&[1.0, 0.0], tx, rx, &ch, rate).unwrap();
    assert_eq!(menu.losses, [2.0, 2.0, 2.0, 0.0]);
    assert_eq!(menu.decisions, [ClassId(2), ClassId(2), ClassId(2), ClassId(1)]);
    assert!(!menu.rx_hit);
    assert_eq!(effective_decision(&menu, Level::Class), ClassId(1));
    assert_eq!(menu.latencies[3], menu.latencies[2]);
}

#[test]
fn mismatched_parties_are_rejected() {
    let world = generate(&SynthConfig::default()).unwrap();
    let a = train_extractor(&world.tx_train, 8, 1.0).unwrap();
    let b = train_extractor(&world.tx_train, 4, 1.0).unwrap();
    let skb = build_skb(world.test_prototypes(), &SkbSelection::Full).unwrap();
    let (ch, rate) = link();
    let (pa, pb) = (PartyContext::new(&a, &skb).unwrap(), PartyContext::new(&b, &skb).unwrap());
    let v = &world.test[0].v;
    assert!(matches!(compute_menu(v, pa, pb, &ch, rate), Err(LossError::DimensionMismatch(_))));
    assert!(matches!(compute_menu(&v[1..], pa, pa, &ch, rate), Err(LossError::DimensionMismatch(_))));
}

#[test]
fn perfect_pipeline_recognises_every_unseen_sample() {
    let cfg = SynthConfig { noise_sigma: 0.0, ..Default::default() };
    let world = generate(&cfg).unwrap();
    let model = perfect_model(&world);
    let skb = build_skb(world.test_prototypes(), &SkbSelection::Full).unwrap();
    let party = PartyContext::new(&model, &skb).unwrap();
    let (ch, rate) = link();
    let menus: Vec<_> = world
        .test
        .iter()
        .map(|s| compute_menu(&s.v, party, party, &ch, rate).unwrap())
        .collect();
    for (menu, sample) in menus.iter().zip(&world.test) {
        for level in Level::ALL {
            assert_eq!(effective_decision(menu, level), sample.class);
        }
        assert!(menu.losses.iter().all(|&l| l <= 1e-20));
    }
    let inst = instance_from_menus(&menus, 1.0).unwrap();
    assert_eq!(inst.m(), world.test.len());
}

#[test]
fn generation_is_deterministic_and_zero_shot() {
    let cfg = SynthConfig { seed: 11, ..Default::default() };
    let a = generate(&cfg).unwrap();
    assert_eq!(a, generate(&cfg).unwrap());
    let unseen: BTreeSet<ClassId> = a.test_classes().into_iter().collect();
    assert_eq!(unseen.len(), 10);
    for label in a.tx_train.labels().iter().chain(a.rx_train.labels()) {
        assert!(!unseen.contains(label));
    }
    assert!(a.test.iter().all(|s| unseen.contains(&s.class)));
    assert_eq!(a.test.len(), 10 * cfg.n_per_class);
    assert!(a.shared_training());
}

#[test]
fn parties_can_see_different_classes() {
    let cfg = SynthConfig { c_total: 12, c_seen_tx: 6, c_seen_rx: 4, ..Default::default() };
    let w = generate(&cfg).unwrap();
    let tx: BTreeSet<_> = w.tx_train.labels().iter().copied().collect();
    let rx: BTreeSet<_> = w.rx_train.labels().iter().copied().collect();
    assert_eq!(tx, (0..6).map(ClassId).collect());
    assert_eq!(rx, (2..6).map(ClassId).collect());
    assert_eq!(w.test_classes(), (6..12).map(ClassId).collect::<Vec<_>>());
}

#[test]
fn prototypes_are_separated_unit_vectors() {
    for seed in 0..10 {
        let cfg = SynthConfig { c_total: 12, seed, ..Default::default() };
        let w = generate(&cfg).unwrap();
        let p = w.prototypes.vectors();
        for i in 0..p.cols() {
            let ci = p.column(i);
            assert!((ci.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() <= 1e-12);
            for j in 0..i {
                let d: f64 = ci.iter().zip(p.column(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                assert!(d.sqrt() >= MIN_PROTOTYPE_DISTANCE);
            }
        }
        // C = 12 ≤ D_s = 16: the Gram matrix has full rank C.
        let gram = p.t_matmul(p);
        let values = eigh_sym(&gram).unwrap().values;
        assert!(values.iter().all(|&v| v > 1e-8 * values[0]));
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let no_unseen = SynthConfig { c_total: 10, c_seen_tx: 10, c_seen_rx: 10, ..Default::default() };
    assert!(matches!(generate(&no_unseen), Err(DataError::ConfigInvalid(_))));
    let bad_noise = SynthConfig { noise_sigma: -1.0, ..Default::default() };
    assert!(matches!(generate(&bad_noise), Err(DataError::ConfigInvalid(_))));
    // Two antipodal points are the only way to fit many unit vectors in one dimension.
    let crowded = SynthConfig { c_total: 4, c_seen_tx: 1, c_seen_rx: 1, d_s: 1, k_hint: 1, ..Default::default() };
    assert!(matches!(generate(&crowded), Err(DataError::RejectionExhausted { .. })));
}
