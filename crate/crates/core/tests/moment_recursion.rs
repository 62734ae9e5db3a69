mod common;

use common::{brute_force_beta, narayana, random_psd, rel_err, rng};
use proptest::prelude::*;
use rand::Rng;
use sscm_core::moments::{beta_to_gamma, enumerate_partitions, gamma_to_beta, MomentVector};
use sscm_core::psd::theta_to_moments;

#[test]
fn recursion_matches_box_enumeration() {
    let mut r = rng(11);
    for _ in 0..100 {
        let c = r.random_range(0.05..4.0);
        let mut g: Vec<f64> = (0..8).map(|_| r.random_range(0.3..3.0)).collect();
        g[0] = 1.0;
        let gamma = MomentVector::gamma(g.clone()).unwrap();
        let beta = gamma_to_beta(&gamma, c, 8).unwrap();
        for j in 2..=8 {
            let want = brute_force_beta(&g, c, j);
            assert!(rel_err(beta.get(j), want) < 1e-12, "j = {j}: {} vs {want}", beta.get(j));
        }
    }
}

#[test]
fn unit_spectrum_gives_narayana_moments() {
    for c in [0.1, 0.5, 1.0, 2.5] {
        let g = MomentVector::gamma(vec![1.0; 20]).unwrap();
        let b = gamma_to_beta(&g, c, 20).unwrap();
        for j in 1..=20 {
            assert!(rel_err(b.get(j), narayana(j, c)) < 1e-12, "j = {j}, c = {c}");
        }
    }
}

#[test]
fn partition_counts_follow_the_partition_function() {
    let p = [1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135, 176, 231, 297, 385, 490, 627];
    for (j, &count) in (1..=20).zip(&p) {
        assert_eq!(enumerate_partitions(j).unwrap().len(), count);
    }
    assert!(enumerate_partitions(21).is_err());
}

#[test]
fn round_trip_on_random_sequences() {
    let mut r = rng(12);
    for _ in 0..2000 {
        let c = [0.25, 1.0, 2.0][r.random_range(0..3)];
        let k = r.random_range(2..=8);
        let mut g: Vec<f64> = (0..k).map(|_| r.random_range(0.5..3.0)).collect();
        g[0] = 1.0;
        let gamma = MomentVector::gamma(g.clone()).unwrap();
        let back = beta_to_gamma(&gamma_to_beta(&gamma, c, k).unwrap(), c).unwrap();
        for j in 1..=k {
            assert!((back.get(j) - g[j - 1]).abs() < 1e-10, "j = {j}, c = {c}: {} vs {}", back.get(j), g[j - 1]);
        }
    }
}

#[test]
fn round_trip_on_population_moments() {
    let mut r = rng(13);
    for _ in 0..100 {
        let d = r.random_range(1..=4);
        let psd = random_psd(&mut r, d, 0.1);
        let c = r.random_range(0.05..2.0);
        let g = theta_to_moments(&psd, 8).unwrap();
        let back = beta_to_gamma(&gamma_to_beta(&g, c, 8).unwrap(), c).unwrap();
        for j in 1..=8 {
            assert!((back.get(j) - g.get(j)).abs() < 1e-10, "j = {j}, c = {c}");
        }
    }
}

proptest! {
    #[test]
    fn round_trip_on_arbitrary_sequences(
        tail in prop::collection::vec(0.2f64..5.0, 1..12),
        c in 0.01f64..5.0,
    ) {
        let mut g = vec![1.0];
        g.extend(tail);
        let k = g.len();
        let gamma = MomentVector::gamma(g.clone()).unwrap();
        let beta = gamma_to_beta(&gamma, c, k).unwrap();
        let back = beta_to_gamma(&beta, c).unwrap();
        for j in 1..=k {
            prop_assert!((back.get(j) - g[j - 1]).abs() <= 1e-10 * beta.get(j).abs().max(1.0));
        }
    }

    #[test]
    fn zero_ratio_is_identity(tail in prop::collection::vec(0.2f64..5.0, 1..10)) {
        let mut g = vec![1.0];
        g.extend(tail);
        let gamma = MomentVector::gamma(g.clone()).unwrap();
        let beta = gamma_to_beta(&gamma, 0.0, g.len()).unwrap();
        for (b, x) in beta.values().iter().zip(&g) {
            prop_assert!((b - x).abs() < 1e-14);
        }
    }
}
