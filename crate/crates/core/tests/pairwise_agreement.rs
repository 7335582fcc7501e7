//! All-pairs p-values: re-splitting versus sampling the normal approximation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use steelrank::pairwise::{pairwise_test, PairwiseMethod};
use steelrank::randomization::MonteCarlo;
use steelrank::{Alternative, RankedSamples};

#[test]
fn randomization_and_mvn_agree_for_three_groups_of_fifty() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut compared = 0;
    for shift in [0.2, 0.3, 0.35, 0.4, 0.45, 0.5, 0.6] {
        let groups: Vec<Vec<f64>> = (0..3)
            .map(|g| (0..50).map(|_| rng.sample::<f64, _>(StandardNormal) + if g == 2 { shift } else { 0.0 }).collect())
            .collect();
        let samples = RankedSamples::new(&groups).unwrap();
        let mc = MonteCarlo::new(100_000, 9);
        for alt in [Alternative::Greater, Alternative::TwoSided] {
            let sim = pairwise_test(&samples, alt, PairwiseMethod::MonteCarlo, &mc).unwrap();
            let mvn = pairwise_test(&samples, alt, PairwiseMethod::MvnSample, &mc).unwrap();
            assert_eq!(sim.statistic, mvn.statistic);
            let (a, b) = (sim.p_value.estimate, mvn.p_value.estimate);
            if (0.01..=0.2).contains(&a) {
                compared += 1;
                assert!((a - b).abs() <= 0.015, "shift {shift} {alt}: {a} vs {b}");
            }
        }
    }
    assert!(compared >= 3, "only {compared} comparisons fell in [0.01, 0.2]");
}
