use std::path::PathBuf;

use geoind_core::evaluation::*;
use geoind_core::mechanism::DOUBLE_PRECISION_DELTA_THETA;
use geoind_core::{Epsilon, MechanismMatrix, RngStream};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn pl_default() -> MechanismMatrix {
    pl_matrix(
        &RegionWorld::default_world(),
        Epsilon::new(16.2).unwrap(),
        DOUBLE_PRECISION_DELTA_THETA,
        KernelMode::Quadrature,
    )
    .unwrap()
    .matrix
}

#[test]
fn fixtures_match_named_priors() {
    let world: RegionWorld =
        serde_json::from_str(&std::fs::read_to_string(fixture("world_default.json")).unwrap()).unwrap();
    assert_eq!(world, RegionWorld::default_world());
    for p in NamedPrior::ALL {
        let text = std::fs::read_to_string(fixture(&format!("priors/{}.json", p.name()))).unwrap();
        let loaded: Prior = serde_json::from_str(&text).unwrap();
        assert_eq!(loaded, p.build(&world).unwrap(), "{}", p.name());
    }
}

#[test]
fn uniform_prior_remap_is_identity() {
    let w = RegionWorld::default_world();
    let u = Prior::uniform(81).unwrap();
    for k in [cloaking_matrix(&w).unwrap(), pl_default()] {
        let rep = lp(&u, &k, &w).unwrap();
        let s = sql(&u, &k, &w).unwrap();
        assert_eq!(rep.remap, (0..81).collect::<Vec<_>>());
        assert!((rep.lp - s).abs() < 1e-12, "{} vs {s}", rep.lp);
    }
}

#[test]
fn remap_is_optimal_by_brute_force() {
    let w = RegionWorld::default_world();
    let mechs = [cloaking_matrix(&w).unwrap(), pl_default()];
    for p in NamedPrior::ALL {
        let prior = p.build(&w).unwrap();
        for k in &mechs {
            let remap = optimal_remap(&prior, k, &w).unwrap();
            for z in 0..81 {
                let cost = |g: usize| -> f64 {
                    (0..81)
                        .map(|r| prior.weights()[r] * k.get(r, z) * w.distance(g, r))
                        .sum()
                };
                let chosen = cost(remap[z]);
                for g in 0..81 {
                    assert!(chosen <= cost(g), "{} z={z}: guess {g} beats {}", p.name(), remap[z]);
                }
            }
            let identity: Vec<usize> = (0..81).collect();
            let optimal = expected_error(&prior, k, &w, &remap).unwrap();
            assert!(optimal <= expected_error(&prior, k, &w, &identity).unwrap() + 1e-15);
        }
    }
}

#[test]
fn post_processing_preserves_geo_indistinguishability() {
    let w = RegionWorld::default_world();
    let e = Epsilon::new(16.2).unwrap();
    let k = pl_default();
    assert!(check_geoind(&k, &w, e).unwrap().passes);
    let mut rng = RngStream::new(4);
    for _ in 0..5 {
        let remap: Vec<usize> = (0..81).map(|_| rng.below(81)).collect();
        let post = k.remap_outputs(&remap).unwrap();
        assert!(check_geoind(&post, &w, e).unwrap().passes);
    }
    let subsets = spot_check_subsets(&k, |i, j| w.distance(i, j), 50, &mut rng);
    assert!(subsets <= e.value() * (1.0 + 1e-9));
}

#[test]
fn deterministic_mechanisms_fail_geo_indistinguishability() {
    let w = RegionWorld::default_world();
    for e in [1e-3, 1.0, 1e3, 1e9] {
        let e = Epsilon::new(e).unwrap();
        assert!(!check_geoind(&cloaking_matrix(&w).unwrap(), &w, e).unwrap().passes);
        assert!(!check_geoind(&MechanismMatrix::identity(81), &w, e).unwrap().passes);
    }
}

#[test]
fn comparison_table_has_every_cell() {
    let w = RegionWorld::default_world();
    let priors: Vec<(String, Prior)> = NamedPrior::ALL
        .iter()
        .map(|p| (p.name().to_string(), p.build(&w).unwrap()))
        .collect();
    let mechs = vec![
        ("cloaking".to_string(), cloaking_matrix(&w).unwrap()),
        ("planar-laplace".to_string(), pl_default()),
    ];
    let t = evaluate(&w, &priors, &mechs).unwrap();
    assert_eq!(t.rows.len(), 8);
    let mut out = Vec::new();
    t.write_wide_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("prior,cloaking,planar-laplace\n"));
    assert_eq!(text.lines().count(), 5);
    // concentrating the prior helps the adversary
    let uni = t.get("uniform", "planar-laplace").unwrap().lp_km;
    let center = t.get("center-block", "planar-laplace").unwrap().lp_km;
    assert!(center < uni);
}
