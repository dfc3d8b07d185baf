use proptest::prelude::*;
use tilefab::geometry::*;

fn rotation(theta: f64, flip: bool) -> Vec<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    if flip {
        vec![c, s, s, -c]
    } else {
        vec![c, -s, s, c]
    }
}

fn sim() -> impl Strategy<Value = Similitude> {
    (0.0..std::f64::consts::TAU, any::<bool>(), 0.05f64..2.0, -5.0f64..5.0, -5.0f64..5.0)
        .prop_map(|(t, f, r, x, y)| Similitude::from_parts(&rotation(t, f), r, &[x, y], None).unwrap())
}

proptest! {
    #[test]
    fn composition_is_associative(f in sim(), g in sim(), h in sim()) {
        let a = &(&f * &g) * &h;
        let b = &f * &(&g * &h);
        prop_assert!(a.approx_eq(&b, 1e-9));
    }

    #[test]
    fn inverse_is_an_involution(f in sim()) {
        prop_assert!(f.inverse().inverse().approx_eq(&f, 1e-9));
        prop_assert!((&f * &f.inverse()).approx_eq(&Similitude::identity(2), 1e-9));
    }

    #[test]
    fn ratios_multiply(f in sim(), g in sim()) {
        let r = (&f * &g).ratio();
        prop_assert!((r - f.ratio() * g.ratio()).abs() <= 1e-12 * r);
    }

    #[test]
    fn application_matches_composition(f in sim(), g in sim(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let lhs = (&f * &g).apply(&[x, y]);
        let rhs = f.apply(&g.apply(&[x, y]));
        prop_assert!(distance(&lhs, &rhs) < 1e-9);
    }
}

#[test]
fn composing_mismatched_dimensions_fails() {
    assert!(Similitude::identity(1).compose(&Similitude::identity(2)).is_err());
}

#[test]
fn non_orthogonal_matrix_rejected() {
    assert!(Similitude::from_matrix(&[1.0, 0.5, 0.0, 1.0], &[0.0, 0.0]).is_err());
}

#[test]
fn point_index_agrees_with_brute_force() {
    let coords: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 1000) as f64 / 997.0).collect();
    let r = Region::new(2, coords);
    let idx = PointIndex::new(&r);
    for q in [[0.1, 0.2], [0.9, 0.05], [2.0, 2.0], [-1.0, 0.5]] {
        let brute = r.points().map(|p| distance(p, &q)).fold(f64::INFINITY, f64::min);
        assert!((idx.nearest_distance(&q) - brute).abs() < 1e-12);
    }
}
