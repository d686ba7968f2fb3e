//! Cross-cutting properties of the study pipeline beyond the acceptance
//! criteria: rate orderings between the two error norms and the pointwise
//! norm domination carried through end to end.

use plapdg::experiments::{run_p_study, StudyConfig, StudyKind};

#[test]
fn p_version_norm_rates_stay_below_quasi_rates() {
    let config = StudyConfig {
        study: StudyKind::PVersion,
        example: 1,
        p_values: vec!["2.5".into(), "4".into(), "4.5".into()],
        r_values: (1..=4).collect(),
        timing: false,
        ..StudyConfig::default()
    };
    let report = run_p_study(&config).expect("p-study must converge");
    for p in ["2.5", "4", "4.5"] {
        let slope_of = |kind: &str| {
            report
                .slopes
                .iter()
                .find(|s| s.p == p && s.error_kind == kind)
                .expect("fit present")
                .slope
        };
        // Semi-log slopes are negative decay rates: the norm error decays no
        // faster than the quasi-norm error.
        let quasi = slope_of("quasi_norm");
        let broken = slope_of("broken_norm");
        assert!(
            broken.abs() <= quasi.abs() + 1e-9,
            "p = {p}: norm rate {broken:.3} exceeds quasi rate {quasi:.3}"
        );
    }

    // End-to-end counterpart of the pointwise bound: the broken p-norm power
    // never exceeds the squared quasi-norm on any solved cell.
    for cell in &report.cells {
        let lhs = cell.broken_norm_error.powf(cell.p_value);
        let rhs = cell.quasi_norm_error * cell.quasi_norm_error;
        assert!(
            lhs <= rhs * (1.0 + 1e-10),
            "p = {}, r = {}: broken^p = {lhs:.3e} > quasi^2 = {rhs:.3e}",
            cell.p,
            cell.r
        );
    }
}
