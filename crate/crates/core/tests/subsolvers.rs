mod common;

use buqo::credible_region::project_region;
use buqo::primal_dual::PdSettings;
use buqo::scalar;
use buqo::structure_sets::project_localized;
use buqo::Image;
use common::*;

fn img(v: Vec<f64>) -> Image {
    Image::new(4, 4, v).unwrap()
}

#[test]
fn region_projection_matches_dykstra() {
    for seed in 0..5 {
        let region = small_region(seed);
        let mut r = rng(100 + seed);
        let scale = region.x_map.norm();
        let z: Vec<f64> = region
            .x_map
            .as_slice()
            .iter()
            .zip(gaussian_vec(&mut r, 16))
            .map(|(a, g)| a + scale * g)
            .collect();
        let got = project_region(&region, &img(z.clone()), &PdSettings::default()).unwrap();
        let want = region_oracle(&region, &z);
        let err = rel_err(&got.point, &want);
        assert!(err <= 1e-4, "seed {seed}: relative error {err:e}");
        assert!(region.contains(&got.point, 1e-6));
    }
}

#[test]
fn localized_projection_matches_dykstra() {
    for seed in 0..5 {
        let set = small_localized(seed);
        let mut r = rng(200 + seed);
        let z: Vec<f64> = set
            .surrogate
            .as_slice()
            .iter()
            .zip(gaussian_vec(&mut r, 16))
            .map(|(a, g)| a + g)
            .collect();
        let got = project_localized(&set, &img(z.clone()), &PdSettings::default()).unwrap();
        let want = localized_oracle(&set, &z);
        let err = rel_err(&got.point, &want);
        assert!(err <= 1e-4, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn primal_dual_projections_behave_like_projections() {
    let settings = PdSettings::default();
    let region = small_region(7);
    let set = small_localized(7);
    let mut r = rng(77);
    let pr = |v: &[f64]| project_region(&region, &img(v.to_vec()), &settings).unwrap().point;
    let ps = |v: &[f64]| project_localized(&set, &img(v.to_vec()), &settings).unwrap().point;
    let projections: [(&str, &dyn Fn(&[f64]) -> Vec<f64>); 2] = [("region", &pr), ("localized", &ps)];
    for (name, p) in projections {
        let x: Vec<f64> = gaussian_vec(&mut r, 16).iter().map(|v| v + 0.5).collect();
        let y: Vec<f64> = gaussian_vec(&mut r, 16).iter().map(|v| v + 0.5).collect();
        let (px, py) = (p(&x), p(&y));
        let tol = 1e-5 * (1.0 + scalar::norm(&px));
        assert!(scalar::distance(&p(&px), &px) <= tol, "{name}: idempotence");
        assert!(scalar::distance(&px, &py) <= scalar::distance(&x, &y) + tol, "{name}: nonexpansive");
        let residual = scalar::sub(&x, &px);
        for _ in 0..10 {
            let v = p(&gaussian_vec(&mut r, 16));
            let d = scalar::sub(&v, &px);
            assert!(
                scalar::dot(&residual, &d) <= tol * (1.0 + scalar::norm(&residual) * scalar::norm(&d)),
                "{name}: optimality"
            );
        }
    }
}
