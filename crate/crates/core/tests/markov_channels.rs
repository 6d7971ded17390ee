//! Reset channels of the fixed Floquet circuit.

use approx::assert_abs_diff_eq;
use mpemba_core::linalg::{max_abs_diff, unitarity_deviation, C64, CMatrix};
use mpemba_core::markov::{
    build_channel, build_floquet_unitary, channel_eigenvalues, evolve_markov, fixed_floquet_gate, fixed_gate_channel,
    steady_state, tilted_product_density, SPECTRAL_RADIUS_TOL,
};
use mpemba_core::protocols::detect_crossing;
use mpemba_core::{Error, Gate};

#[test]
fn raw_gate_floquet_unitary_within_truncation_bound() {
    let u = build_floquet_unitary(&fixed_floquet_gate(), 6).unwrap();
    assert!(unitarity_deviation(&u) < 2e-7);
}

#[test]
fn identity_and_swap_circuits() {
    let u = build_floquet_unitary(&Gate::identity(2, 2), 4).unwrap();
    assert!(max_abs_diff(&u, &CMatrix::identity(16, 16)) < 1e-15);
    let u = build_floquet_unitary(&Gate::swap(2), 4).unwrap();
    for col in 0..16 {
        let nonzero: Vec<C64> = u.column(col).iter().copied().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nonzero, vec![C64::new(1.0, 0.0)]);
    }
    let channel = build_channel(&CMatrix::identity(16, 16), 4, 2).unwrap();
    assert!(max_abs_diff(channel.matrix(), &CMatrix::identity(16, 16)) < 1e-14);
}

#[test]
fn fixed_channel_is_cptp_with_maximally_mixed_fixed_point() {
    let channel = fixed_gate_channel(6, 2, true).unwrap();
    assert!(channel.trace_preservation_deviation() < 1e-9);
    for mu in channel_eigenvalues(&channel) {
        assert!(mu.norm() <= 1.0 + SPECTRAL_RADIUS_TOL);
    }
    let ss = steady_state(&channel).unwrap();
    let target = CMatrix::identity(4, 4) * C64::new(0.25, 0.0);
    assert!(max_abs_diff(ss.matrix(), &target) < 1e-8);
    assert!(max_abs_diff(&channel.apply(&target), &target) < 1e-12);
}

#[test]
fn raw_gate_channel_violates_trace_preservation() {
    assert!(matches!(fixed_gate_channel(6, 2, false), Err(Error::ChannelInvariant(_))));
}

#[test]
fn coherence_relaxes_to_zero() {
    let channel = fixed_gate_channel(6, 2, true).unwrap();
    let rho0 = tilted_product_density(2, 1.1).unwrap();
    let trajectory = evolve_markov(&channel, &rho0, 40).unwrap();
    assert_eq!(trajectory.states.len(), 41);
    assert!(max_abs_diff(trajectory.states[0].matrix(), rho0.matrix()) == 0.0);
    assert_abs_diff_eq!(*trajectory.coherence.mean.last().unwrap(), 0.0, epsilon = 1e-6);
}

#[test]
fn tilted_pair_curves_cross() {
    let channel = fixed_gate_channel(6, 2, true).unwrap();
    let low = evolve_markov(&channel, &tilted_product_density(2, 0.6).unwrap(), 10).unwrap();
    let high = evolve_markov(&channel, &tilted_product_density(2, 1.4).unwrap(), 10).unwrap();
    assert!(high.coherence.mean[0] > low.coherence.mean[0]);
    let report = detect_crossing(&high.coherence, &low.coherence).unwrap();
    assert!(report.significant);
    let depth = report.crossing_depth.unwrap();
    assert!(depth > 0.0 && depth < 1.0);
}
