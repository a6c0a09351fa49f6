use num_complex::Complex64;
use proptest::prelude::*;
use resolab_core::friedrichs::{
    find_pole, spectral_density, FriedrichsModel, RationalTerm, Side,
};
use resolab_core::testspace::{classify_hardy, HardyClass, HardyOptions, TestFunctionSpec};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

fn model() -> impl Strategy<Value = FriedrichsModel> {
    (0.5f64..2.0, 0.0f64..0.5).prop_map(|(w, l)| FriedrichsModel::lorentzian(w, l).unwrap())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn eta_is_real_symmetric(m in model(), x in -3.0f64..6.0, y in 0.05f64..3.0) {
        let z = Complex64::new(x, y);
        let a = m.eta(z).unwrap();
        let b = m.eta(z.conj()).unwrap();
        prop_assert!((a - b.conj()).norm() < 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn cut_jump_is_the_coupling(m in model(), e in 0.05f64..10.0) {
        let p = m.eta_boundary(e, Side::Plus).unwrap();
        let q = m.eta_boundary(e, Side::Minus).unwrap();
        let w = m.form_factor().w_real(e);
        prop_assert!((p - q - Complex64::new(0.0, 2.0 * std::f64::consts::PI * w)).norm() < 1e-9);
    }

    #[test]
    fn density_is_non_negative(m in model(), e in 0.0f64..15.0) {
        prop_assert!(spectral_density(&m, e).unwrap() >= 0.0);
    }

    #[test]
    fn poles_come_in_conjugate_pairs(w in 0.6f64..2.0, l in 0.02f64..0.3) {
        let m = FriedrichsModel::lorentzian(w, l).unwrap();
        let a = find_pole(&m, Side::Plus, None).unwrap();
        let b = find_pole(&m, Side::Minus, None).unwrap();
        prop_assert!((a.z1 - b.z1.conj()).norm() < 1e-10);
    }

    #[test]
    fn hardy_class_ignores_scaling(
        re in -2.0f64..2.0,
        im in 0.3f64..2.0,
        minus in any::<bool>(),
        mag in 0.1f64..10.0,
        arg in 0.0f64..std::f64::consts::TAU,
    ) {
        let pole = Complex64::new(re, if minus { im } else { -im });
        let spec = TestFunctionSpec::Rational {
            terms: vec![RationalTerm { coeff: Complex64::new(1.0, 0.0), pole, order: 1 }],
        };
        let o = HardyOptions::default();
        let a = classify_hardy(&spec, &o).unwrap();
        let b = classify_hardy(&spec.scaled(Complex64::from_polar(mag, arg)), &o).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert_eq!(a.verdict, if minus { HardyClass::H2Minus } else { HardyClass::H2Plus });
    }

    #[test]
    fn conjugation_swaps_classes(a in -3.0f64..3.0, len in 0.3f64..3.0, re in -2.0f64..2.0, im in 0.3f64..2.0) {
        let o = HardyOptions::default();
        let specs = [
            TestFunctionSpec::Bump { a, b: a + len, amplitude: Complex64::new(1.0, 0.5) },
            TestFunctionSpec::Rational {
                terms: vec![RationalTerm { coeff: Complex64::new(0.0, 1.0), pole: Complex64::new(re, im), order: 2 }],
            },
        ];
        for spec in &specs {
            let v = classify_hardy(spec, &o).unwrap().verdict;
            let w = classify_hardy(&spec.conj(), &o).unwrap().verdict;
            let swapped = match v {
                HardyClass::H2Plus => HardyClass::H2Minus,
                HardyClass::H2Minus => HardyClass::H2Plus,
                HardyClass::Neither => HardyClass::Neither,
            };
            prop_assert_eq!(w, swapped);
        }
    }
}
