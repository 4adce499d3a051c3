use nalgebra::Matrix4;
use proptest::prelude::*;
use steerscan::gaussian::{
    apply_beamsplitter, gaussian_steerable, is_entangled, output_cm, ppt_entangled, standard_to_sym,
    sym_to_standard, threshold_variance, CovarianceMatrix4, StandardForm, SymParams,
};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn params() -> impl Strategy<Value = SymParams> {
    (0.02f64..=1.0, 0.02f64..0.999, 0.0f64..=1.0).prop_map(|(g, m, a)| SymParams::new(g, m, a).unwrap())
}

/// Random physical CM: thermal diagonal conjugated by a random symplectic
/// built from local squeezers, rotations and a mixing beamsplitter.
fn physical_cm() -> impl Strategy<Value = CovarianceMatrix4> {
    (
        1.0f64..4.0,
        1.0f64..4.0,
        prop::array::uniform4(-1.0f64..1.0),
        prop::array::uniform2(0.0f64..std::f64::consts::TAU),
        0.05f64..0.95,
    )
        .prop_map(|(n1, n2, sq, rot, t)| {
            let local = |r: f64, phi: f64| {
                let (s, c) = phi.sin_cos();
                nalgebra::Matrix2::new(c, -s, s, c) * nalgebra::Matrix2::new(r.exp(), 0.0, 0.0, (-r).exp())
            };
            let mut s = Matrix4::zeros();
            s.fixed_view_mut::<2, 2>(0, 0).copy_from(&local(sq[0], rot[0]));
            s.fixed_view_mut::<2, 2>(2, 2).copy_from(&local(sq[1], rot[1]));
            let base = Matrix4::from_diagonal(&nalgebra::Vector4::new(
                n1 * sq[2].exp(),
                n1 * (-sq[2]).exp(),
                n2 * sq[3].exp(),
                n2 * (-sq[3]).exp(),
            ));
            let cm = CovarianceMatrix4::new(s * base * s.transpose()).unwrap();
            apply_beamsplitter(&cm, t).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn standard_form_round_trip(p in params()) {
        let sf = sym_to_standard(p).unwrap().canonical();
        let conv = standard_to_sym(&sf).unwrap();
        prop_assert!(!conv.degenerate);
        let back = sym_to_standard(conv.params).unwrap();
        for (x, y) in [(sf.p, back.p), (sf.m, back.m), (sf.n, back.n), (sf.u, back.u)] {
            prop_assert!(rel_close(x, y, 1e-9), "{sf:?} -> {back:?}");
        }
        // Entanglement measure read off the standard form.
        let x = (conv.params.gamma / conv.params.mu).powf(conv.params.alpha + 1.0);
        prop_assert!(rel_close(x, (sf.p - sf.m) * (sf.p + sf.n), 1e-9));
    }

    #[test]
    fn output_determinant(p in params()) {
        let det = output_cm(p).unwrap().determinant();
        prop_assert!(rel_close(det, p.mu.powf(-2.0 * (1.0 + p.alpha)), 1e-9));
    }

    #[test]
    fn beamsplitter_preserves_symplectic_spectrum(cm in physical_cm(), which in 0usize..3) {
        let t = [0.3, 0.5, 0.7][which];
        let before = cm.symplectic_eigenvalues().unwrap();
        let after = apply_beamsplitter(&cm, t).unwrap().symplectic_eigenvalues().unwrap();
        for k in 0..2 {
            prop_assert!((before[k] - after[k]).abs() < 1e-10 * before[k].max(1.0));
        }
    }

    #[test]
    fn entanglement_matches_ppt(p in params()) {
        prop_assert_eq!(is_entangled(p), ppt_entangled(&output_cm(p).unwrap()).unwrap());
    }
}

#[test]
fn entanglement_consistency_on_grid() {
    for alpha in [0.0, 0.5, 1.0] {
        for i in 0..21 {
            for j in 0..21 {
                let g = 0.05 + 0.95 * i as f64 / 20.0;
                let m = 0.05 + 0.95 * j as f64 / 20.0;
                let p = SymParams::new(g, m, alpha).unwrap();
                assert_eq!(is_entangled(p), ppt_entangled(&output_cm(p).unwrap()).unwrap(), "{p:?}");
            }
        }
    }
}

#[test]
fn below_threshold_is_steerable() {
    for alpha in [0.0, 0.5, 1.0] {
        let vth = threshold_variance(alpha).unwrap();
        for k in 1..=20 {
            let mu = 0.05 * k as f64;
            for ratio in [1e-3, 0.1, 0.5 * vth, vth - 1e-6] {
                let p = SymParams::new(ratio * mu, mu, alpha).unwrap();
                assert!(gaussian_steerable(&output_cm(p).unwrap()).margin > 0.0, "{p:?}");
            }
        }
    }
}

#[test]
fn standard_form_examples_convert() {
    let tmsv = standard_to_sym(&StandardForm::new(1.25, 0.75, -0.75, 1.0).unwrap()).unwrap();
    assert!((tmsv.params.gamma - 0.5).abs() < 1e-12);
    assert!((tmsv.params.mu - 1.0).abs() < 1e-12);
    assert!((tmsv.u - 1.0).abs() < 1e-12);
    let thermal = standard_to_sym(&StandardForm::new(2.0, 0.0, 0.0, 1.0).unwrap()).unwrap();
    assert!(!thermal.degenerate);
    assert!((thermal.params.mu - 0.5).abs() < 1e-12);
    assert!((thermal.params.alpha - 1.0).abs() < 1e-12);
    assert!((thermal.params.gamma - 1.0).abs() < 1e-12);
}
