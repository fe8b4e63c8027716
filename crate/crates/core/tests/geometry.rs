use std::f64::consts::{PI, TAU};

use fuchsian::hyperbolic::{hyp_distance, BoundaryPoint, DiskPoint, Isometry};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = DiskPoint> {
    (0.0..6.0f64, 0.0..TAU).prop_map(|(r, a)| DiskPoint::polar(r, a))
}

fn isometry() -> impl Strategy<Value = Isometry> {
    (0.0..5.0f64, 0.0..TAU, 0.0..TAU, prop::option::of(0.0..PI)).prop_map(|(len, dir, rot, refl)| {
        let g = Isometry::translation(len, dir).compose(&Isometry::rotation(rot));
        match refl {
            Some(angle) => g.compose(&Isometry::diameter_reflection(angle)),
            None => g,
        }
    })
}

proptest! {
    #[test]
    fn distance_is_invariant(g in isometry(), z in point(), w in point()) {
        let before = hyp_distance(z, w).unwrap();
        let after = hyp_distance(g.apply(z), g.apply(w)).unwrap();
        prop_assert!((before - after).abs() < 1e-9, "{} vs {}", before, after);
    }

    #[test]
    fn composition_is_associative(f in isometry(), g in isometry(), h in isometry()) {
        let left = f.compose(&g).compose(&h);
        let right = f.compose(&g.compose(&h));
        prop_assert!(left.distance_to(&right) < 1e-10 * (1.0 + left.a.norm()));
    }

    #[test]
    fn chain_rule(g in isometry(), h in isometry(), theta in 0.0..TAU) {
        let xi = BoundaryPoint::new(theta);
        let lhs = g.compose(&h).log_boundary_derivative(xi);
        let rhs = g.log_boundary_derivative(h.apply_boundary(xi)) + h.log_boundary_derivative(xi);
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn inverse_has_equal_displacement(g in isometry()) {
        prop_assert!((g.inverse().displacement() - g.displacement()).abs() < 1e-10);
        prop_assert!(g.compose(&g.inverse()).distance_from_identity() < 1e-10);
    }

    #[test]
    fn boundary_is_preserved(g in isometry(), theta in 0.0..TAU) {
        let image = g.apply_complex(BoundaryPoint::new(theta).z());
        prop_assert!((image.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn displacement_is_distance_to_image(g in isometry()) {
        let d = hyp_distance(DiskPoint::ORIGIN, g.apply(DiskPoint::ORIGIN)).unwrap();
        prop_assert!((d - g.displacement()).abs() < 1e-9);
    }
}
