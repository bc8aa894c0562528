mod common;

use std::time::Instant;

use common::*;
use fdlcp::{
    build_direction_set, classify_patches, make_phantom, train_bank, AnalysisOperator, ClassMap,
    DictionaryBank, DirectionMode, FrameCoefficients, Image64, PatchConfig, PhantomKind,
    SidwtFrame, TightFrame, TrainConfig, C64,
};
use proptest::prelude::*;

fn trained_bank(size: usize) -> (DictionaryBank<f64>, ClassMap) {
    let image: Image64 = make_phantom(size, PhantomKind::SheppLogan).unwrap();
    let cfg = PatchConfig::default();
    let ds = build_direction_set(cfg.size).unwrap();
    let map = classify_patches(&image, &cfg, &ds, DirectionMode::Complex).unwrap();
    let bank = train_bank(&image, &map, &cfg, &TrainConfig::default()).unwrap();
    (bank, map)
}

#[test]
fn trained_frame_is_tight_on_random_images() {
    let (bank, map) = trained_bank(64);
    assert!(bank.trained().len() > 1);
    let op = AnalysisOperator::new(&bank, &map, PatchConfig::default(), (64, 64)).unwrap();
    let mut r = rng(12);
    let clock = Instant::now();
    for _ in 0..100 {
        let x = random_image(&mut r, 64, 64);
        let a = op.analyze(&x).unwrap();
        let back = op.synthesize(&a).unwrap();
        assert!(dist(back.data(), x.data()) / norm(x.data()) < 1e-10);
        assert!((a.norm() - x.norm()).abs() <= 1e-10 * x.norm());
    }
    assert!(clock.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn analysis_is_a_projection_after_synthesis() {
    let (bank, map) = trained_bank(32);
    let op = AnalysisOperator::new(&bank, &map, PatchConfig::default(), (32, 32)).unwrap();
    let mut r = rng(13);
    let a = FrameCoefficients::new(random_vec(&mut r, op.coefficient_len()), 64).unwrap();
    let once = op.analyze(&op.synthesize(&a).unwrap()).unwrap();
    let twice = op.analyze(&op.synthesize(&once).unwrap()).unwrap();
    assert!(dist(once.data(), twice.data()) <= 1e-10 * norm(once.data()));
}

#[test]
fn sidwt_frame_is_tight_and_adjoint() {
    let mut r = rng(14);
    let frame = SidwtFrame::<f64>::new(48, 40, 3).unwrap();
    let x = random_image(&mut r, 48, 40);
    let a = frame.analyze(&x).unwrap();
    assert!(dist(frame.synthesize(&a).unwrap().data(), x.data()) < 1e-10 * norm(x.data()));
    let b = FrameCoefficients::new(random_vec(&mut r, a.len()), a.block_len()).unwrap();
    let lhs = inner(a.data(), b.data());
    let rhs = inner(x.data(), frame.synthesize(&b).unwrap().data());
    assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0) * 10.0);
}

fn random_bank_problem() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (
        prop_oneof![Just(2usize), Just(4)],
        4usize..14,
        4usize..14,
        any::<u64>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_bank_frames_are_tight_linear_and_adjoint((n, rows, cols, seed) in random_bank_problem()) {
        let mut r = rng(seed);
        let classes = 3;
        let dicts = (0..classes - 1).map(|w| (w, random_dictionary(&mut r, n * n))).collect();
        let bank = DictionaryBank::from_parts(n, classes, 0.0, dicts).unwrap();
        let labels = (0..rows * cols).map(|j| (j * 31 + seed as usize) % classes).collect();
        let map = ClassMap::new(labels, classes).unwrap();
        let op = AnalysisOperator::new(&bank, &map, PatchConfig::new(n, 1), (rows, cols)).unwrap();

        let x = random_image(&mut r, rows, cols);
        let y = random_image(&mut r, rows, cols);
        let ax = op.analyze(&x).unwrap();
        prop_assert!(dist(op.synthesize(&ax).unwrap().data(), x.data()) <= 1e-10 * norm(x.data()));
        prop_assert!((ax.norm() - x.norm()).abs() <= 1e-10 * x.norm());

        let b = FrameCoefficients::new(random_vec(&mut r, ax.len()), n * n).unwrap();
        let lhs = inner(ax.data(), b.data());
        let rhs = inner(x.data(), op.synthesize(&b).unwrap().data());
        prop_assert!((lhs - rhs).norm() <= 1e-12 * norm(x.data()) * norm(b.data()));

        let alpha = C64::new(0.3, -1.7);
        let combo = Image64::new(rows, cols, x.data().iter().zip(y.data()).map(|(p, q)| p * alpha + q).collect()).unwrap();
        let ay = op.analyze(&y).unwrap();
        let expect: Vec<C64> = ax.data().iter().zip(ay.data()).map(|(p, q)| p * alpha + q).collect();
        prop_assert!(dist(op.analyze(&combo).unwrap().data(), &expect) <= 1e-12 * norm(&expect));

        let zeros = FrameCoefficients::zeros(ax.len(), n * n);
        prop_assert!(op.synthesize(&zeros).unwrap().data().iter().all(|v| v.norm() == 0.0));
    }
}
