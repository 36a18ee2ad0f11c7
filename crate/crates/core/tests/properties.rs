#[path = "support/invariants.rs"]
mod invariants;

#[test]
fn polarization_completeness() {
    invariants::polarization_completeness();
}

#[test]
fn flip_axis_swaps_and_is_involution() {
    invariants::flip_axis_swaps_and_is_involution();
}

#[test]
fn transverse_rotation_invariance() {
    invariants::transverse_rotation_invariance();
}

#[test]
fn contrast_bounded() {
    invariants::contrast_bounded();
}

#[test]
fn frame_time_monotone() {
    invariants::frame_time_monotone();
}

#[test]
fn dynamic_range_additive() {
    invariants::dynamic_range_additive();
}

#[test]
fn layer_average_second_order() {
    invariants::layer_average_second_order();
}

#[test]
fn strip_conserves_current() {
    invariants::strip_conserves_current();
}

#[test]
fn trap_matches_brute_force_argmin() {
    invariants::trap_matches_brute_force_argmin();
}

#[test]
fn superposition() {
    invariants::superposition();
}

#[test]
fn scaling_linearity() {
    invariants::scaling_linearity();
}

#[test]
fn translation_covariance() {
    invariants::translation_covariance();
}

#[test]
fn real_currents_give_real_fields() {
    invariants::real_currents_give_real_fields();
}

#[test]
fn stitch_cut_and_reassemble() {
    invariants::stitch_cut_and_reassemble();
}

#[test]
fn fit_frequency_scale_invariant() {
    invariants::fit_frequency_scale_invariant();
}

#[test]
fn suite_size() {
    let total: u32 = invariants::SUITE.iter().map(|s| s.2).sum();
    assert!(total >= 1000, "{total} cases");
}
