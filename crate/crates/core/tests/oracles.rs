mod support;

use satloss::cubical::FilteredComplex;
use satloss::persistence::{betti_numbers, compute_persistence, diagram_of_image, diagram_of_mask};
use satloss::raster::pad_border;
use support::*;

#[test]
fn pairs_match_boundary_reduction_on_tied_images() {
    let mut rng = rng(11);
    for _ in 0..150 {
        let img = random_discrete_image(&mut rng, 7, 6, &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let d = compute_persistence(&FilteredComplex::new(&img));
        assert_eq!(raw_pairs(&d), reduce(&img));
    }
}

#[test]
fn pairs_match_boundary_reduction_on_distinct_values() {
    let mut rng = rng(12);
    for _ in 0..50 {
        let img = distinct_image(&mut rng, 9, 9, 1e-5);
        assert_eq!(raw_pairs(&diagram_of_image(&img, false)), reduce(&img));
    }
}

#[test]
fn padded_pairs_match_reduction_of_padded_image() {
    let mut rng = rng(13);
    for _ in 0..50 {
        let img = random_discrete_image(&mut rng, 6, 8, &[0.0, 0.3, 0.6, 1.0]);
        let padded = pad_border(&img, 1.0).unwrap();
        assert_eq!(raw_pairs(&diagram_of_image(&img, true)), reduce(&padded));
    }
}

#[test]
fn betti_numbers_match_flood_fill_and_euler() {
    let mut rng = rng(14);
    for _ in 0..200 {
        let mask = random_mask(&mut rng, 16, 16, 0.55);
        assert_eq!(betti_numbers(&mask), betti(&mask));
        let d = diagram_of_mask(&mask, false);
        assert_eq!(d.betti_at(1.0), betti(&mask));
    }
}

#[test]
fn threshold_consistency_on_larger_images() {
    let mut rng = rng(15);
    let levels = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    for _ in 0..40 {
        let img = random_discrete_image(&mut rng, 20, 13, &levels);
        let d = diagram_of_image(&img, false);
        for &t in &levels[1..] {
            let mask = satloss::raster::binarize(&img, t).unwrap();
            assert_eq!(d.betti_at(t), betti(&mask), "t = {t}");
        }
    }
}

#[test]
fn bottleneck_oracle_sanity() {
    assert!(bottleneck_within(&[(0.9, 0.1)], &[(0.9, 0.1)], 0.0));
    assert!(!bottleneck_within(&[(0.9, 0.1)], &[], 0.39));
    assert!(bottleneck_within(&[(0.9, 0.1)], &[], 0.4));
    assert!(bottleneck_within(&[(0.9, 0.1)], &[(0.8, 0.2)], 0.1));
}
