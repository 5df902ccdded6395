use geoslice::harness::{estimate_tv, BinSpec, Binning};
use geoslice::rng::stream;
use geoslice::{Point, Target};

fn exact_draws(target: &Target, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = stream(seed, 0);
    (0..n).map(|_| target.reference_sample(&mut rng).unwrap()).collect()
}

// Exact draws from the target must sit inside the null envelope `bias + 3 se`
// for every seed; a miss on more than one seed points at a miscalibrated
// bias or standard error rather than chance.
fn null_calibration(spec: &str, n: usize) {
    let target: Target = spec.parse().unwrap();
    let binning = Binning::for_target(&target, BinSpec::default()).unwrap();
    let mut misses = Vec::new();
    for seed in 0..20u64 {
        let pts = exact_draws(&target, n, 1_000 + seed);
        let est = estimate_tv(&pts, &binning, seed).unwrap();
        assert!(est.tv >= 0.0 && est.tv <= 1.0);
        if est.tv > est.bias + 3.0 * est.se {
            misses.push((seed, est.tv, est.bias, est.se));
        }
    }
    assert!(misses.len() <= 1, "{spec}: {misses:?}");
}

#[test]
fn null_tv_is_calibrated_on_the_circle() {
    null_calibration("uniform:sphere:1", 20_000);
}

#[test]
fn null_tv_is_calibrated_on_the_sphere() {
    null_calibration("uniform:sphere:2", 20_000);
}

#[test]
fn null_tv_is_calibrated_on_the_disk() {
    null_calibration("convex-uniform:ball:2:r=1", 20_000);
}

#[test]
fn null_tv_is_calibrated_for_von_mises_fisher() {
    null_calibration("vmf:sphere:2:kappa=3:mu=0,0,1", 20_000);
}

#[test]
fn shifted_law_is_detected() {
    // Draws from a cap of half the sphere are at TV 1/2 from the uniform law.
    let target: Target = "uniform:sphere:2".parse().unwrap();
    let cap: Target = "cap:sphere:2:colatitude=1.5707963267948966".parse().unwrap();
    let binning = Binning::for_target(&target, BinSpec::default()).unwrap();
    let pts = exact_draws(&cap, 20_000, 9);
    let est = estimate_tv(&pts, &binning, 9).unwrap();
    assert!((est.tv - 0.5).abs() < est.bias + 4.0 * est.se + 0.02, "{est:?}");
}
