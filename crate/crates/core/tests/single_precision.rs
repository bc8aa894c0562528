use fdlcp::sampling::encode;
use fdlcp::{
    build_direction_set, classify_patches, make_cartesian_mask, make_phantom, rlne,
    sidwt_reference, train_bank, AnalysisOperator, DirectionMode, Image32, PatchConfig,
    PhantomKind, SidwtFrame, SolverConfig, TightFrame, TrainConfig,
};

#[test]
fn f32_frames_are_tight_to_single_precision() {
    let image: Image32 = make_phantom(32, PhantomKind::SheppLogan).unwrap();
    let cfg = PatchConfig::default();
    let ds = build_direction_set(8).unwrap();
    let map = classify_patches(&image, &cfg, &ds, DirectionMode::Complex).unwrap();
    let bank = train_bank(&image, &map, &cfg, &TrainConfig::default()).unwrap();
    for d in bank.trained().values() {
        assert!(d.orthogonality_error() < 1e-4);
    }
    let op = AnalysisOperator::new(&bank, &map, cfg, (32, 32)).unwrap();
    let back = op.synthesize(&op.analyze(&image).unwrap()).unwrap();
    assert!(rlne(&back, &image).unwrap() < 1e-5);

    let sidwt = SidwtFrame::<f32>::new(32, 32, 3).unwrap();
    let back = sidwt.synthesize(&sidwt.analyze(&image).unwrap()).unwrap();
    assert!(rlne(&back, &image).unwrap() < 1e-5);
}

#[test]
fn f32_reference_reconstruction_improves_on_zero_filling() {
    let truth: Image32 = make_phantom(64, PhantomKind::SheppLogan).unwrap();
    let mask = make_cartesian_mask(64, 64, 0.4, 0.06, 3).unwrap();
    let y = encode(&truth, &mask).unwrap();
    let zero_filled = fdlcp::sampling::adjoint(&y);
    let cfg = SolverConfig {
        max_iterations: 60,
        ..Default::default()
    };
    let (x, _) = sidwt_reference(&y, &mask, 3, &cfg).unwrap();
    assert!(rlne(&x, &truth).unwrap() < rlne(&zero_filled, &truth).unwrap());
}
