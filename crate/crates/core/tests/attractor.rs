mod common;

use common::load;
use tilefab::attractor::*;
use tilefab::geometry::{directed_hausdorff, PointIndex};
use tilefab::symbolic::omega;
use tilefab::system::{load_system, transfer_matrix};

#[test]
fn clouds_are_forward_invariant() {
    for name in ["binary", "two_vertex", "sierpinski", "golden_b"] {
        let sys = load(name);
        let cloud = sample_attractor(&sys, 20_000, 7);
        for e in sys.edges() {
            let img = cloud.vertex(e.to).subsample(2000).transformed(&e.map);
            let d = directed_hausdorff(&img, &PointIndex::new(cloud.vertex(e.from)));
            assert!(d <= cloud.resolution_of(e.from), "{name} edge {}: {d}", e.id);
        }
    }
}

#[test]
fn dimensions() {
    for (name, want) in [("binary", 1.0), ("fibonacci", 1.0), ("sierpinski", 3f64.ln() / 2f64.ln())] {
        let d = hausdorff_dimension(&load(name), 1e-12).unwrap();
        assert!((d - want).abs() < 1e-6, "{name}: {d}");
    }
}

#[test]
fn dimension_ignores_bracket_and_grows_with_s() {
    let base = r#"{"dimension":1,"s":SCALE,"vertices":["A"],"edges":[
        {"id":1,"from":"A","to":"A","a":1,"ortho":[[1]],"translate":[0]},
        {"id":2,"from":"A","to":"A","a":2,"ortho":[[1]],"translate":[0.7]}]}"#;
    let d1 = hausdorff_dimension(&load_system(&base.replace("SCALE", r#"{"poly":[-1,1,1],"bracket":[0.5,0.7]}"#)).unwrap(), 1e-12).unwrap();
    let d2 = hausdorff_dimension(&load_system(&base.replace("SCALE", r#"{"poly":[-1,1,1],"bracket":[0.6,0.65]}"#)).unwrap(), 1e-12).unwrap();
    assert!((d1 - d2).abs() < 1e-12);
    let mut prev = 0.0;
    for s in [0.3, 0.4, 0.5, 0.55] {
        let sys = tilefab::system::GraphIfs::parse_unchecked(&base.replace("SCALE", &s.to_string()).replace("0.7]", &format!("{}]", s))).unwrap();
        let d = hausdorff_dimension(&sys, 1e-12).unwrap();
        assert!(d > prev, "s={s}");
        prev = d;
    }
    assert!(spectral_radius(&transfer_matrix(&load("fibonacci"), 1.0)) - 1.0 < 1e-12);
}

#[test]
fn pi_regions_nest() {
    let sys = load("two_vertex");
    let cloud = cell_cloud_with(&sys, 2000);
    for sigma in omega(&sys, 6, Some(0)) {
        let inner = pi_region(&sys, &sigma, &cloud).unwrap();
        let ib = inner.bbox().unwrap().clone();
        for n in 0..sigma.len() {
            let outer = pi_region(&sys, &sigma.prefix(&sys, n), &cloud).unwrap();
            let ob = outer.bbox().unwrap().expanded(cloud.resolution());
            assert!(ib.lo.iter().zip(&ob.lo).all(|(a, b)| a >= b) && ib.hi.iter().zip(&ob.hi).all(|(a, b)| a <= b));
        }
    }
}

#[test]
fn chaos_game_bins_and_boxes() {
    let sys = load("binary");
    let cloud = sample_attractor(&sys, 100_000, 1);
    let mut bins = [false; 256];
    for p in cloud.vertex(0).points() {
        bins[((p[0] * 256.0) as usize).min(255)] = true;
    }
    assert!(bins.iter().filter(|b| **b).count() as f64 >= 0.99 * 256.0);
    let tv = load("two_vertex");
    let c = sample_attractor(&tv, 10_000, 1);
    for (v, (lo, hi)) in [(0.0, 1.0), (2.0, 3.0)].into_iter().enumerate() {
        assert!(c.vertex(v).points().all(|p| p[0] >= lo - 1e-9 && p[0] <= hi + 1e-9));
    }
}

#[test]
fn same_seed_same_cloud() {
    let sys = load("sierpinski");
    assert_eq!(sample_attractor(&sys, 1000, 9).vertex(0).coords(), sample_attractor(&sys, 1000, 9).vertex(0).coords());
}

#[test]
fn osc_passes_on_shipped_systems() {
    for name in ["binary", "fibonacci", "two_vertex", "sierpinski", "golden_b"] {
        let sys = load(name);
        let r = osc_heuristic(&sys, &cell_cloud_with(&sys, 3000), &neighbor_maps(&sys, 2));
        assert!(r.pass, "{name}: {r:?}");
    }
}
