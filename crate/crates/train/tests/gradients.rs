use jpp_net::ModelKind;
use jpp_train::gradcheck::{check_gradients, tiny_config};
use jpp_train::LossMode;

#[test]
fn joint_mode_matches_finite_differences() {
    let r = check_gradients(tiny_config(8, ModelKind::Joint), LossMode::Joint, 250, 11, 1e-5).unwrap();
    assert_eq!(r.checked, 250);
    assert!(r.max_grad > 0.0);
    assert!(r.max_rel_error < 1e-3, "{r:?}");
}

#[test]
fn ss_mode_matches_finite_differences() {
    let r = check_gradients(tiny_config(8, ModelKind::ParsingOnly), LossMode::Ss, 250, 12, 1e-5).unwrap();
    assert!(r.l_joint.unwrap() > 0.0 && r.max_grad > 0.0, "{r:?}");
    assert!(r.max_rel_error < 1e-3, "{r:?}");
}

#[test]
fn larger_maps_match_too() {
    // a 3x3 output grid exercises resizing, padding and the GN path
    let mut cfg = tiny_config(24, ModelKind::Joint);
    cfg.norm_groups = 1;
    let r = check_gradients(cfg, LossMode::Joint, 120, 13, 1e-5).unwrap();
    assert!(r.max_rel_error < 1e-3, "{r:?}");
}
