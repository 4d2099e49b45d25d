use proptest::prelude::*;

use qnm_core::design::{delta_mass, gamma_from_profile, w02_functional, ProfileFamily};
use qnm_core::evolution::{ModalBasis, ModalCoefficients};
use qnm_core::jordan::build_block;
use qnm_core::model::{builtin_double_pole_model, double_pole_gamma, Kind, LeftBoundary, Segment, SystemModel};
use qnm_core::perturbation::{nongeneric_4x4_demo, split_block};
use qnm_core::spectral::{SearchBox, SpectrumOptions, Wronskian};
use qnm_core::C64;

fn two_layer(r1: f64, r2: f64, split: f64) -> SystemModel {
    SystemModel::new(
        Kind::Wave,
        LeftBoundary::Node,
        0.0,
        1.0,
        vec![Segment::new(0.0, split, r1), Segment::new(split, 1.0, r2)],
        vec![],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wronskian_is_position_independent(
        r1 in 1.5f64..6.0, r2 in 1.5f64..6.0, split in 0.2f64..0.8,
        re in -8.0f64..8.0, im in -1.5f64..-0.05,
    ) {
        let m = two_layer(r1, r2, split);
        let w = Wronskian::new(&m);
        let omega = C64::new(re, im);
        let w0 = w.eval(omega);
        for x in [0.0, 0.5 * split, split, 0.5 * (split + 1.0), 1.0] {
            prop_assert!((w.eval_at(omega, x) - w0).norm() <= 1e-10 * w0.norm());
        }
    }

    #[test]
    fn semigroup_of_block_coefficients(
        a0 in -2.0f64..2.0, a1 in -2.0f64..2.0, b0 in -2.0f64..2.0, b1 in -2.0f64..2.0,
        t1 in 0.0f64..3.0, t2 in 0.0f64..3.0,
    ) {
        let m = builtin_double_pole_model(1.0).unwrap();
        let blk = build_block(&m, C64::new(0.0, -double_pole_gamma(1.0)), 2).unwrap();
        let basis = ModalBasis::new(vec![blk]).unwrap();
        let a = ModalCoefficients { blocks: vec![vec![C64::new(a0, b0), C64::new(a1, b1)]] };
        let two = basis.advance(&basis.advance(&a, t1).unwrap(), t2).unwrap();
        let one = basis.advance(&a, t1 + t2).unwrap();
        for n in 0..2 {
            let scale = one.blocks[0].iter().map(|z| z.norm()).fold(1e-300, f64::max);
            prop_assert!((two.blocks[0][n] - one.blocks[0][n]).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn split_frequencies_solve_the_reduced_equation(lambda in -1e-2f64..1e-2, ar in -1.0f64..1.0, ai in -1.0f64..1.0) {
        prop_assume!(lambda.abs() > 1e-8 && ar.hypot(ai) > 1e-3);
        let m = builtin_double_pole_model(1.0).unwrap();
        let blk = build_block(&m, C64::new(0.0, -double_pole_gamma(1.0)), 2).unwrap();
        let alpha = C64::new(ar, ai);
        let rep = split_block(&blk, lambda, alpha).unwrap();
        for w in &rep.frequencies {
            let d = w - blk.omega();
            prop_assert!((d * d - lambda * alpha).norm() <= 1e-12 * (lambda * alpha).norm());
        }
        // The two levels are symmetric about ω_j.
        prop_assert!((rep.frequencies[0] + rep.frequencies[1] - 2.0 * blk.omega()).norm() < 1e-12);
    }

    #[test]
    fn nongeneric_polynomial_is_a_perfect_square(re in -3.0f64..3.0, im in -3.0f64..-0.1, ar in -1.0f64..1.0, lambda in 1e-4f64..1e-1) {
        let d = nongeneric_4x4_demo(C64::new(re, im), C64::new(ar, 0.3), lambda);
        let scale = d.expected_poly.iter().map(|c| c.norm()).fold(1.0, f64::max);
        for (a, b) in d.char_poly.iter().zip(&d.expected_poly) {
            prop_assert!((a - b).norm() <= 1e-12 * scale);
        }
        // Each eigenvalue carries a 2×2 Jordan block: rank 3 then 2.
        prop_assert_eq!(d.ranks.clone(), vec![(3, 2), (3, 2)]);
    }

    #[test]
    fn profile_functionals_scale_quadratically(alpha in 0.2f64..6.0, c in 0.1f64..10.0) {
        let f = ProfileFamily::Power { alpha, n: 5 };
        let g = ProfileFamily::Scaled { c, inner: Box::new(f.clone()) };
        let (gf, gg) = (gamma_from_profile(&f).unwrap(), gamma_from_profile(&g).unwrap());
        prop_assert!((gf - gg).abs() <= 1e-12 * gf);
        prop_assert!((delta_mass(&f, gf) - delta_mass(&g, gg)).abs() <= 1e-12);
        let (wf, wg) = (w02_functional(&f), w02_functional(&g));
        prop_assert!((wg - c * c * wf).abs() <= 1e-8 * (c * c).max(1.0) * wf.abs().max(1.0));
    }
}

#[test]
fn real_models_have_mirror_symmetric_spectra() {
    let m = two_layer(2.0, 5.0, 0.37);
    let rep = Wronskian::new(&m)
        .spectrum(&SearchBox::new(-12.0, 12.0, -3.0, -0.01).unwrap(), &SpectrumOptions::default())
        .unwrap();
    assert!(rep.zeros.len() >= 6);
    for z in &rep.zeros {
        assert!(z.omega.im < 0.0);
        let mirror = -z.omega.conj();
        assert!(rep.zeros.iter().any(|y| (y.omega - mirror).norm() < 1e-9));
    }
}
