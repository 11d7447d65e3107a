use cheshire_core::analysis::weak_value;
use cheshire_core::hybrid::{
    centroid2d, photon_joint_state, strong_lobe_weights, InteractionSpec, DEFAULT_LOBE_RADIUS,
};
use cheshire_core::neutron::{detector_probabilities, Absorber, NeutronScenario, SpinRotation};
use cheshire_core::pointer::{gaussian, UniformGrid1D};
use cheshire_core::qstate::{
    apply, detection_probability, inner, projector, BasisLabel, DiscreteKet, DiscreteOperator,
    Family, Internal, Path,
};
use cheshire_core::Complex64 as C64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

fn ket() -> impl Strategy<Value = DiscreteKet> {
    (prop::bool::ANY, prop::array::uniform4(complex())).prop_map(|(circ, a)| {
        let family = if circ {
            Family::Circular
        } else {
            Family::Linear
        };
        let [s0, s1] = family.labels();
        let terms = [
            (BasisLabel::new(Path::I, s0), a[0]),
            (BasisLabel::new(Path::I, s1), a[1]),
            (BasisLabel::new(Path::II, s0), a[2]),
            (BasisLabel::new(Path::II, s1), a[3]),
        ];
        DiscreteKet::from_terms(&terms).unwrap()
    })
}

fn phase() -> impl Strategy<Value = C64> {
    (0.0f64..std::f64::consts::TAU).prop_map(|t| C64::from_polar(1.0, t))
}

proptest! {
    #[test]
    fn inner_is_hermitian(a in ket(), b in ket()) {
        prop_assert!((inner(&a, &b) - inner(&b, &a).conj()).norm() < 1e-14);
    }

    #[test]
    fn basis_change_is_unitary(a in ket(), b in ket()) {
        for f in [Family::Linear, Family::Circular] {
            let (a2, b2) = (a.in_family(f), b.in_family(f));
            prop_assert!((a2.norm2() - a.norm2()).abs() < 1e-14);
            prop_assert!((inner(&a2, &b2) - inner(&a, &b)).norm() < 1e-14);
            prop_assert!(a2.in_family(a.family()).distance(&a) < 1e-14);
        }
    }

    #[test]
    fn projectors_are_idempotent_and_hermitian(k in ket()) {
        prop_assume!(k.norm2() > 1e-3);
        let p = projector(&k).unwrap();
        prop_assert!(p.compose(&p).distance(&p) < 1e-14);
        prop_assert!(p.adjoint().distance(&p) < 1e-14);
        prop_assert!(apply(&p, &k).distance(&k) < 1e-14);
    }

    #[test]
    fn detection_ignores_global_phase(a in ket(), b in ket(), u in phase(), v in phase()) {
        prop_assume!(b.norm2() > 1e-3);
        let p = detection_probability(&a, &b).unwrap();
        let q = detection_probability(&a.scale(u), &b.scale(v)).unwrap();
        prop_assert!((p - q).abs() < 1e-14);
        prop_assert!(p <= a.norm2() + 1e-14);
    }

    #[test]
    fn weak_values_ignore_phase_and_scale(
        a in ket(), b in ket(), u in phase(), v in phase(), s in 0.1f64..10.0
    ) {
        prop_assume!(inner(&b, &a).norm() > 1e-2);
        let ops = [
            DiscreteOperator::path_projector(Path::I),
            DiscreteOperator::sigma(),
            DiscreteOperator::sigma().compose(&DiscreteOperator::path_projector(Path::II)),
        ];
        for op in ops {
            let w = weak_value(&a, &b, &op).unwrap();
            let w2 = weak_value(&a.scale(u * s), &b.scale(v), &op).unwrap();
            prop_assert!((w - w2).norm() < 1e-12 * (1.0 + w.norm()));
        }
        let sum = weak_value(&a, &b, &DiscreteOperator::path_projector(Path::I)).unwrap()
            + weak_value(&a, &b, &DiscreteOperator::path_projector(Path::II)).unwrap();
        prop_assert!((sum - C64::from(1.0)).norm() < 1e-12);
    }

    #[test]
    fn displacement_is_covariant(w in 0.5f64..2.0, c in -1.0f64..1.0, d in -1.0f64..1.0) {
        let g = gaussian(w, c).unwrap();
        let moved = g.displace(d).unwrap();
        prop_assert!((moved.centroid().unwrap() - (c + d)).abs() < 1e-14);
        prop_assert!((moved.norm2().unwrap() - g.norm2().unwrap()).abs() < 1e-14);

        let grid = UniformGrid1D::centered(0.0, 8.0 * w + 1.0, 512).unwrap();
        let s = g.sample(grid).unwrap();
        let sm = s.displace(d).unwrap();
        prop_assert!((sm.centroid().unwrap() - s.centroid().unwrap() - d).abs() < 1e-10);
        prop_assert!((sm.norm2().unwrap() - s.norm2().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn lobe_weights_ignore_global_factor(u in phase(), s in 0.01f64..100.0) {
        let j = photon_joint_state(&InteractionSpec::symmetric(5.0, 1.0).unwrap()).unwrap();
        let mut k = j.clone();
        k.terms.iter_mut().for_each(|t| t.coeff *= u * s);
        let a = strong_lobe_weights(&j, DEFAULT_LOBE_RADIUS).unwrap();
        let b = strong_lobe_weights(&k, DEFAULT_LOBE_RADIUS).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.weight - y.weight).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_close(
        chi in 0.0f64..std::f64::consts::TAU,
        theta in 0.0f64..std::f64::consts::PI,
        (pa, pb) in (0.0f64..6.3, 0.0f64..6.3),
        t in 0.0f64..=1.0,
        rot_path in prop::bool::ANY,
        abs_path in prop::bool::ANY,
    ) {
        let path = |b: bool| if b { Path::I } else { Path::II };
        let sc = NeutronScenario {
            chi,
            rotation: Some(SpinRotation::new(
                path(rot_path),
                C64::from_polar(theta.cos(), pa),
                C64::from_polar(theta.sin(), pb),
            ).unwrap()),
            absorber: Some(Absorber::new(path(abs_path), t).unwrap()),
        };
        let p = detector_probabilities(&sc).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-12);
        prop_assert!(p.as_array().iter().all(|&x| x >= -1e-15));
    }

    #[test]
    fn x_centroid_is_odd_in_dx(dx in 0.0f64..0.5, dy in 0.0f64..0.5) {
        let (cx, _) = centroid2d(&photon_joint_state(&InteractionSpec::new(dx, dy, 1.0).unwrap()).unwrap()).unwrap();
        prop_assert!(cx >= -1e-15);
        if dx == 0.0 {
            prop_assert!(cx.abs() < 1e-15);
        }
    }
}

#[test]
fn sigma_convention() {
    let h = DiscreteKet::basis(BasisLabel::new(Path::I, Internal::H));
    let out = apply(&DiscreteOperator::sigma(), &h);
    assert!((out.amplitude(BasisLabel::new(Path::I, Internal::V)) - C64::i()).norm() < 1e-15);
}
