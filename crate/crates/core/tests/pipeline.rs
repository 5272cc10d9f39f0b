//! Public-API flows across modules.

use std::f64::consts::FRAC_PI_4;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use xxqst_core::chain::{boundary_profile, build_generator, perfect_profile, CouplingProfile, ProfileSpec};
use xxqst_core::heisenberg::{coefficient_trace, estimate_fidelity, mirror_propagate, propagate, trace_to_csv};
use xxqst_core::optimize::{cross_validate, optimize_in, refine_time, Range, DEFAULT_TOLERANCE};
use xxqst_core::oracle::{
    extract_mirror_string_coefficients, extract_string_coefficients, fidelity, reduced_state, Evolver, StateVector,
    DEFAULT_ORACLE_CAP,
};
use xxqst_core::protocol::{
    average_fidelity, branch_averaged_fidelity, run_protocol, run_protocol_branches, InputSampling, MediumSpec,
    ProtocolConfig,
};
use xxqst_core::Error;

#[test]
fn profile_round_trips_through_json_into_every_engine() {
    let p = boundary_profile(6, 0.77).unwrap();
    let q = CouplingProfile::from_json(&p.to_json().unwrap()).unwrap();
    assert_eq!(p, q);
    let a = propagate(&build_generator(&q), 1.4);
    let b = extract_string_coefficients(&q, 1.4).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert_abs_diff_eq!(x, y, epsilon = 1e-10);
    }
}

#[test]
fn single_excitation_reaches_the_far_end() {
    // |10000⟩ → |00001⟩ up to phase at the revival time.
    let p = perfect_profile(5).unwrap();
    let out = Evolver::new(&p, DEFAULT_ORACLE_CAP)
        .unwrap()
        .evolve(&StateVector::from_bits("10000").unwrap(), FRAC_PI_4)
        .unwrap();
    assert_abs_diff_eq!(out.amplitudes()[1].norm(), 1.0, epsilon = 1e-10);
}

#[test]
fn estimate_tracks_exact_average_on_the_boundary_family() {
    let p = boundary_profile(5, 0.815).unwrap();
    let (t, est) = refine_time(&p, Range::new(1.5, 2.5), 64, DEFAULT_TOLERANCE).unwrap();
    assert!(est > 0.999);
    let exact = average_fidelity(&p, t, InputSampling::Axial, 4, 1, DEFAULT_ORACLE_CAP).unwrap();
    assert!((exact.mean - est).abs() < 0.01);
}

#[test]
fn trace_csv_endpoint_matches_revival() {
    let tr = coefficient_trace(&perfect_profile(5).unwrap(), FRAC_PI_4, 200).unwrap();
    let csv = trace_to_csv(&tr);
    let last = csv.lines().last().unwrap();
    let alpha5: f64 = last.split(',').nth(5).unwrap().parse().unwrap();
    assert_abs_diff_eq!(alpha5, 1.0, epsilon = 1e-9);
}

#[test]
fn sampled_run_is_one_of_the_branches() {
    let c = ProtocolConfig::new(boundary_profile(4, 0.9).unwrap(), StateVector::qubit(0.4, 1.0).to_density())
        .with_time(1.2)
        .with_medium(MediumSpec::thermal(0.5))
        .with_seed(5);
    let r = run_protocol(&c).unwrap();
    let branches = run_protocol_branches(&c).unwrap();
    let hit = branches
        .iter()
        .find(|b| (b.result.outcome_pre, b.result.outcome_post) == (r.outcome_pre, r.outcome_post))
        .unwrap();
    assert_eq!(hit.result, r);
    assert_abs_diff_eq!(fidelity(&r.output_state, &c.input_state).unwrap(), r.fidelity, epsilon = 1e-12);
    assert!(branch_averaged_fidelity(&branches) < 1.0);
}

#[test]
fn oracle_cap_is_a_resource_error() {
    let c = ProtocolConfig::new(perfect_profile(6).unwrap(), StateVector::zero(1).to_density()).with_cap(5);
    assert!(matches!(run_protocol_branches(&c), Err(Error::ResourceLimit { sites: 6, cap: 5 })));
    assert!(matches!(
        cross_validate(&perfect_profile(6).unwrap(), FRAC_PI_4, 2, 0, 5),
        Err(Error::ResourceLimit { .. })
    ));
}

#[test]
fn optimizer_box_and_spec_strings() {
    let r = optimize_in(5, (Range::new(0.6, 1.1), Range::new(1.0, 3.0)), 40, DEFAULT_TOLERANCE).unwrap();
    assert!((0.80..=0.83).contains(&r.best_point.eta));
    let spec: ProfileSpec = format!("boundary:{}", r.best_point.eta).parse().unwrap();
    let p = spec.build(Some(5)).unwrap();
    assert_abs_diff_eq!(estimate_fidelity(&p, r.best_point.t), r.best_point.estimate, epsilon = 1e-12);
}

#[test]
fn reduced_state_of_product_is_the_factor() {
    let a = StateVector::qubit(0.8, 0.1);
    let b = StateVector::qubit(2.1, -0.7);
    let ab = a.tensor(&b);
    assert_abs_diff_eq!(fidelity(&reduced_state(&ab, &[2]).unwrap(), &b.to_density()).unwrap(), 1.0, epsilon = 1e-12);
}

fn profile_strategy() -> impl Strategy<Value = CouplingProfile> {
    (2usize..=7)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(0.2f64..2.0, n - 1)))
        .prop_map(|(n, c)| CouplingProfile::new(n, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn engines_agree_in_both_directions(p in profile_strategy(), t in -3.0f64..3.0) {
        let g = build_generator(&p);
        let fwd = extract_string_coefficients(&p, t).unwrap();
        let bwd = extract_mirror_string_coefficients(&p, t).unwrap();
        for (x, y) in fwd.values.iter().zip(&propagate(&g, t).values) {
            prop_assert!((x - y).abs() < 1e-8);
        }
        for (x, y) in bwd.values.iter().zip(&mirror_propagate(&g, t).values) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn medium_never_matters_on_perfect_chains(n in 2usize..=6, seed in any::<u64>(), theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..std::f64::consts::TAU) {
        let c = ProtocolConfig::new(perfect_profile(n).unwrap(), StateVector::qubit(theta, phi).to_density())
            .with_medium(MediumSpec::RandomPure)
            .with_seed(seed);
        for b in run_protocol_branches(&c).unwrap() {
            prop_assert!((b.result.fidelity - 1.0).abs() < 1e-9);
        }
    }
}
