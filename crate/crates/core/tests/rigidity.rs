mod common;

use common::{load, realizer};
use tilefab::rigidity::*;
use tilefab::symbolic::{lambda_set, parse_dagger};
use tilefab::tiling::{canonical_tiling, Group, GroupFilter};
use tilefab::Similitude;

#[test]
fn binary_translations_violated_by_half_shift() {
    let sys = load("binary");
    let geo = realizer(&sys, 4000);
    let r = check_rigidity(&sys, Group::Translations, 2, &geo).unwrap();
    let w = r.a1.witness().expect("A(i) violation");
    assert!(w.e.approx_eq(&Similitude::translation(&[0.5]), 1e-9));
    assert!(recheck_meets_witness(&sys, w, &geo).unwrap());
    assert_eq!(r.verdict(), "violated");
}

#[test]
fn mixed_scales_witness() {
    let sys = load("mixed_scales");
    let geo = realizer(&sys, 4000);
    let r = check_rigidity(&sys, Group::Translations, 1, &geo).unwrap();
    let w = r.a1.witness().expect("A(i) violation");
    assert_eq!((w.k, w.v, w.w), (1, 0, 1));
    assert!(w.e.approx_eq(&Similitude::translation(&[-0.5]), 1e-9));
    // E s T_0^2 lies inside T_0^1.
    let inner = canonical_tiling(&sys, 0, Some(1)).unwrap().map_by(&sys, &sys.scaling(1)).unwrap().transformed(&w.e);
    assert!(inner.is_subset_of(&canonical_tiling(&sys, 0, Some(0)).unwrap()));
    // A_2 = A_1 + 2.
    let w3 = r.a3.witness().expect("A(iii) violation");
    assert!(w3.e.approx_eq(&Similitude::translation(&[2.0]), 1e-6), "{:?}", w3.e);
}

#[test]
fn golden_b_is_rigid_under_euclidean_group() {
    let sys = load("golden_b");
    let geo = realizer(&sys, 6000);
    let r = check_rigidity(&sys, Group::Euclidean, 2, &geo).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn fibonacci_translations_violated() {
    let sys = load("fibonacci");
    let geo = realizer(&sys, 4000);
    let r = check_rigidity(&sys, Group::Translations, 1, &geo).unwrap();
    let w = r.a1.witness().expect("A(i) violation");
    assert_eq!(w.k, 1);
    assert!(w.e.approx_eq(&Similitude::translation(&[sys.s()]), 1e-9), "{:?}", w.e);
}

#[test]
fn binary_partner_ambiguity_refused() {
    let sys = load("binary");
    let filter = GroupFilter::new(&sys, Group::Translations);
    let t1 = canonical_tiling(&sys, 1, None).unwrap();
    let tile = t1.sorted_tiles()[1].clone();
    assert!(matches!(find_partners(&sys, &tile, &t1, &filter).unwrap(), Partners::Ambiguous(ref c) if c.len() == 2));
    assert!(matches!(
        deflate_tiling(&sys, &t1, &filter, DeflationGuard::Override),
        Err(RigidityError::Ambiguous { copies: 2, .. })
    ));
}

#[test]
fn audit_guard_blocks_nonrigid_deflation() {
    let sys = load("binary");
    let geo = realizer(&sys, 2000);
    let r = check_rigidity(&sys, Group::Translations, 1, &geo).unwrap();
    let filter = GroupFilter::new(&sys, Group::Translations);
    let t1 = canonical_tiling(&sys, 1, None).unwrap();
    assert_eq!(deflate_tiling(&sys, &t1, &filter, DeflationGuard::Audited(&r)).unwrap_err(), RigidityError::NotRigid);
}

#[test]
fn golden_b_geometric_round_trip() {
    let sys = load("golden_b");
    let filter = GroupFilter::new(&sys, Group::Euclidean);
    for k in 0..=5 {
        let t = canonical_tiling(&sys, k, None).unwrap();
        let up = inflate_tiling(&sys, &t).unwrap();
        assert!(up.set_eq(&canonical_tiling(&sys, k + 1, None).unwrap()), "k={k}");
        let down = deflate_tiling(&sys, &up, &filter, DeflationGuard::Override).unwrap();
        assert!(down.set_eq(&t), "k={k}");
    }
}

#[test]
fn fibonacci_copies_of_t0() {
    let sys = load("fibonacci");
    let copies = copies_of_t0(&sys, 3, 0, 0).unwrap();
    let labels: Vec<String> = copies.iter().map(|(w, _)| w.label(&sys)).collect();
    assert_eq!(labels, ["111", "12", "21"]);
}

#[test]
fn golden_b_copy_bijection() {
    let sys = load("golden_b");
    let filter = GroupFilter::new(&sys, Group::Euclidean);
    for k in 1..=6 {
        let n = lambda_set(&sys, k, 0, 0).len();
        assert_eq!(copies_of_t0(&sys, k, 0, 0).unwrap().len(), n);
        assert_eq!(count_copies_geometric(&sys, k, 0, 0, &filter).unwrap(), n, "k={k}");
    }
}

#[test]
fn equal_paths_give_identity() {
    let sys = load("fibonacci");
    let filter = GroupFilter::new(&sys, Group::Translations);
    let t = parse_dagger(&sys, "12(2)", 0).unwrap();
    let c = decide_equal(&sys, &t, &t, &filter, None).unwrap().unwrap();
    assert_eq!((c.p, c.q), (0, 0));
    assert!(c.e.approx_eq(&Similitude::identity(1), 1e-12));
    let psi = parse_dagger(&sys, "21(2)", 0).unwrap();
    let c = decide_equal(&sys, &t, &psi, &filter, None).unwrap().unwrap();
    assert_eq!((c.p, c.q), (2, 2));
    let finite = parse_dagger(&sys, "12", 0).unwrap();
    assert_eq!(decide_equal(&sys, &finite, &t, &filter, None).unwrap_err(), RigidityError::NotPeriodic);
}

#[test]
fn deflation_identities_hold() {
    for name in ["binary", "fibonacci", "two_vertex", "golden_b"] {
        let sys = load(name);
        let theta = common::random_dagger(&sys, &[3, 1, 4, 1, 5, 9, 2, 6, 5]);
        for k in 1..=6 {
            assert!(deflation_identity(&sys, &theta, k).unwrap(), "{name} k={k}");
        }
        for &n in sys.out_edges(theta.origin()) {
            assert!(inflation_identity(&sys, &theta, n, 4).unwrap(), "{name} n={n}");
        }
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;
    use tilefab::tiling::pi_tiling;
    use tilefab::{DaggerPath, GraphIfs};

    /// `θ` followed by the loop on edge 1, which golden-b always admits.
    fn periodic(sys: &GraphIfs, t: &DaggerPath) -> DaggerPath {
        DaggerPath::new(sys, t.prefix(), &[0], None).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn canonical_deflate_inflate_is_identity(k in 0i64..10, x in -5.0f64..5.0, y in -5.0f64..5.0, angle in 0.0f64..6.3) {
            let sys = load("golden_b");
            let (c, s) = (angle.cos(), angle.sin());
            let frame = Similitude::from_parts(&[c, -s, s, c], 1.0, &[x, y], Some(0)).unwrap();
            let h = CanonicalHandle { frame, k, v: 0 };
            let back = inflate_canonical(&sys, &deflate_canonical(&sys, &h).unwrap());
            prop_assert_eq!((back.k, back.v), (h.k, h.v));
            prop_assert!(back.frame.approx_eq(&h.frame, 1e-9));
        }

        #[test]
        fn rigid_tilings_have_no_translational_self_copies(choices in common::dagger_strategy(6..7), dx in -3i32..=3, dy in -3i32..=3) {
            prop_assume!(dx != 0 || dy != 0);
            let sys = load("golden_b");
            let theta = common::random_dagger(&sys, &choices);
            let cyc = periodic(&sys, &theta);
            let filter = GroupFilter::new(&sys, Group::Euclidean);
            let c = decide_equal(&sys, &cyc, &cyc, &filter, None).unwrap().unwrap();
            prop_assert_eq!((c.p, c.q), (0, 0));
            let t = pi_tiling(&sys, &cyc.truncate(5).unwrap()).unwrap();
            let e = Similitude::translation(&[dx as f64 * 0.25, dy as f64 * 0.25]);
            prop_assert!(!t.transformed(&e).set_eq(&t));
        }
    }

}
