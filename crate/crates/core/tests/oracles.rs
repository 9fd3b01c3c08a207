//! Closed-form oracles computed independently of the library code paths.

use koenigs::dsl::parse_map;
use koenigs::dynamics::{classify, step_sequences, DwKind, StepDecision, TypeLabel};
use koenigs::grid::SampleGrid;
use koenigs::linearize::{check_koenigs_ratio, commute_residual_at, slc_estimate, KoenigsApprox, KoenigsScheme, SlcMethod};
use koenigs::maps::{cayley_translate, slit, slit_translate};
use koenigs::metric::{dist_disc, dist_halfplane, v_membership};
use koenigs::semigroup::{build_family, RegisteredH};
use koenigs::{Error, HalfPlane, MapExpr, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn one() -> C64 {
    c(1.0, 0.0)
}

/// Hyperbolic distance in the curvature −4 normalization, from the `acosh` form.
fn rho_acosh(z: C64, w: C64) -> f64 {
    let num = 2.0 * (z - w).norm_sqr();
    let den = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr());
    0.5 * (1.0 + num / den).acosh()
}

#[test]
fn cayley_values() {
    let rh = MapExpr::cayley(one(), HalfPlane::Right).unwrap();
    let uh = MapExpr::cayley(one(), HalfPlane::Upper).unwrap();
    assert!((rh.eval(c(0.0, 0.0)).unwrap() - one()).norm() < 1e-15);
    assert!((uh.eval(c(0.0, 0.0)).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
    assert!((rh.eval(c(0.0, 1.0)).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
    assert!((rh.eval(c(0.5, 0.0)).unwrap() - c(3.0, 0.0)).norm() < 1e-14);
    let inv = MapExpr::cayley_inv(one(), HalfPlane::Upper).unwrap();
    for z in SampleGrid::default().points {
        assert!((inv.eval(uh.eval(z).unwrap()).unwrap() - z).norm() < 1e-13);
    }
}

#[test]
fn distance_matches_acosh_form() {
    for (z, w) in [(c(0.0, 0.0), c(0.5, 0.0)), (c(0.3, -0.4), c(-0.7, 0.1)), (c(0.9, 0.0), c(0.0, 0.95))] {
        let d = dist_disc(z, w).unwrap();
        assert!((d.hyperbolic - rho_acosh(z, w)).abs() < 1e-12 * d.hyperbolic.max(1.0));
    }
    let d = dist_disc(c(0.0, 0.0), c(0.5, 0.0)).unwrap();
    assert!((d.pseudo - 0.5).abs() < 1e-16);
    assert!((d.hyperbolic - 3f64.ln() / 2.0).abs() < 1e-15);
}

#[test]
fn halfplane_distance_closed_forms() {
    let (u, v) = (c(0.0, 1.0), c(0.0, 3.0));
    let d = dist_halfplane(u, v, HalfPlane::Upper).unwrap();
    assert!((d.pseudo - 0.5).abs() < 1e-15);
    let (u, v) = (c(2.0, 1.0), c(0.5, -3.0));
    let want = (v - u).norm() / (v + u.conj()).norm();
    assert!((dist_halfplane(u, v, HalfPlane::Right).unwrap().pseudo - want).abs() < 1e-15);
}

#[test]
fn v_set_examples() {
    let phi = cayley_translate(HalfPlane::Upper, one()).unwrap();
    let inv = MapExpr::cayley_inv(one(), HalfPlane::Upper).unwrap();
    let inside = v_membership(&phi, 1.0 / 3.0, inv.eval(c(0.0, 2.0)).unwrap()).unwrap();
    assert!((inside.rho - 1.0 / 17f64.sqrt()).abs() < 1e-12);
    assert!(inside.member);
    let outside = v_membership(&phi, 1.0 / 3.0, inv.eval(c(0.0, 1.0)).unwrap()).unwrap();
    assert!((outside.rho - 1.0 / 5f64.sqrt()).abs() < 1e-12);
    assert!(!outside.member);
    let id = v_membership(&MapExpr::identity(), 0.01, c(0.4, 0.4)).unwrap();
    assert_eq!(id.rho, 0.0);
    assert!(id.member);
}

#[test]
fn slit_conjugacy_is_exact() {
    let h = slit();
    for shift in [0.5, 1.0, 2.5] {
        let phi = slit_translate(shift);
        for z in SampleGrid::default().points {
            let lhs = h.eval(phi.eval(z).unwrap()).unwrap();
            let rhs = h.eval(z).unwrap() + shift;
            assert!((lhs - rhs).norm() < 1e-9 * rhs.norm().max(1.0));
        }
    }
}

#[test]
fn classification_oracles() {
    let half = classify(&parse_map("(z+1)/2").unwrap()).unwrap();
    assert_eq!(half.type_label, TypeLabel::Hyperbolic);
    assert!((half.location - one()).norm() < 1e-6);
    assert!((half.multiplier - 0.5).abs() < 1e-6);

    let a: f64 = 0.5;
    let auto = classify(&parse_map("(z+0.5)/(1+0.5*z)").unwrap()).unwrap();
    assert!(auto.automorphism);
    assert!((auto.multiplier - (1.0 - a) / (1.0 + a)).abs() < 1e-6);

    let ell = classify(&parse_map("z/(2-z)").unwrap()).unwrap();
    assert_eq!((ell.type_label, ell.kind), (TypeLabel::Elliptic, DwKind::Interior));
    assert!(ell.location.norm() < 1e-12);
    assert!((ell.multiplier - 0.5).abs() < 1e-12);

    let aff = classify(&parse_map("z/2+0.25").unwrap()).unwrap();
    assert!((aff.location - c(0.5, 0.0)).norm() < 1e-12);

    let rot = classify(&parse_map("(0.6+0.8i)*z").unwrap()).unwrap();
    assert_eq!(rot.type_label, TypeLabel::EllipticAutomorphism);

    let refl = classify(&parse_map("neg((1+z^2)/2)").unwrap()).unwrap();
    assert_eq!(refl.type_label, TypeLabel::Parabolic);
    assert!((refl.location + one()).norm() < 1e-6);

    let id = classify(&MapExpr::identity()).unwrap();
    assert_eq!(id.type_label, TypeLabel::Identity);
}

#[test]
fn step_sequence_matches_direct_orbit() {
    let quad = parse_map("(1+z^2)/2").unwrap();
    let z0 = c(0.3, 0.0);
    let r = step_sequences(&quad, z0, 64).unwrap();
    let mut z = z0;
    for k in 0..64 {
        let w = (1.0 + z * z) / 2.0;
        assert!((r.q_seq[k] - rho_acosh(z, w)).abs() < 1e-10, "k = {k}");
        z = w;
    }
    let long = step_sequences(&quad, z0, 4096).unwrap();
    assert_eq!(long.decision, StepDecision::Zero);
}

#[test]
fn koenigs_right_halfplane_closed_form() {
    let phi = cayley_translate(HalfPlane::Right, one()).unwrap();
    let b = KoenigsApprox::new(&phi, 1024, KoenigsScheme::default()).unwrap();
    for z in SampleGrid::default().points {
        let h = (1.0 + z) / (1.0 - z);
        assert!((b.eval(z).unwrap() - (h - 1.0)).norm() < 1e-6);
    }
}

#[test]
fn reflected_quadratic_does_not_commute() {
    let quad = parse_map("(1+z^2)/2").unwrap();
    let neg = parse_map("neg((1+z^2)/2)").unwrap();
    let r = commute_residual_at(&quad, &neg, c(0.0, 0.0)).unwrap();
    assert!((r - 1.25).abs() < 1e-15);
    assert!(matches!(slc_estimate(&quad, &neg, SlcMethod::Koenigs), Err(Error::Precondition(_))));
}

#[test]
fn ratio_needs_both_zero_step() {
    let phi = cayley_translate(HalfPlane::Right, one()).unwrap();
    let psi = cayley_translate(HalfPlane::Right, c(0.0, 1.0)).unwrap();
    let grid = SampleGrid::new(16, 0.9, 1);
    let r = check_koenigs_ratio(&phi, &psi, c(0.0, 1.0), 256, KoenigsScheme::default(), &grid);
    assert!(matches!(r, Err(Error::Precondition(_))), "{r:?}");
    let slc = slc_estimate(&phi, &psi, SlcMethod::Koenigs).unwrap();
    assert!((slc.c - c(0.0, 1.0)).norm() < 1e-5);
}

#[test]
fn slit_generator_closed_form() {
    let fam = build_family(RegisteredH::Slit, 0.0).unwrap();
    for z in SampleGrid::new(16, 0.8, 3).points {
        let want = (1.0 - z).powi(3) / (4.0 * (1.0 + z));
        assert!((fam.generator_closed_form(z).unwrap() - want).norm() < 1e-12 * want.norm().max(1.0));
    }
}

#[test]
fn halton_grid_first_points() {
    let g = SampleGrid::new(3, 0.9, 1);
    let want = [(0.5f64, 1.0 / 3.0), (0.25, 2.0 / 3.0), (0.75, 1.0 / 9.0)];
    for (z, (u, v)) in g.points.iter().zip(want) {
        let p = C64::from_polar(0.9 * u.sqrt(), std::f64::consts::TAU * v);
        assert!((z - p).norm() < 1e-15);
    }
}
