use proptest::prelude::*;

use spectral_bounds::analytic::{box_spectrum, scale_spectrum};
use spectral_bounds::bounds;
use spectral_bounds::fourier::{self, GridSpec};
use spectral_bounds::geometry::{parse_mask, Mask2D};
use spectral_bounds::special;

fn mask() -> impl Strategy<Value = Mask2D> {
    (1usize..10, 1usize..10, 0.01f64..3.0, prop::collection::vec(any::<bool>(), 81)).prop_filter_map(
        "empty",
        |(w, h, s, bits)| Mask2D::new(w, h, s, bits[..w * h].to_vec()).ok(),
    )
}

proptest! {
    #[test]
    fn mask_text_round_trip(m in mask()) {
        let back = parse_mask(&m.to_text()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn power_inequality_holds(a in 0.0f64..1e3, b in 0.0f64..1e3, d in 1usize..=10) {
        let (x, y) = (a.max(b), a.min(b));
        let p = bounds::elementary_power_inequality(x, y, d).unwrap();
        prop_assert!(p.holds, "{} < {}", p.lhs, p.rhs);
    }

    #[test]
    fn lemma1_factor_at_least_one(eta in 0.0f64..=1.0, d in 1usize..=10) {
        let f = bounds::lemma1_factor(eta, d).unwrap();
        prop_assert!(f >= 1.0 - 1e-15);
        prop_assert!(f <= (d as f64 + 2.0) / d as f64 + 1e-15);
    }

    #[test]
    fn sharpness_is_dilation_invariant(
        lengths in prop::collection::vec(0.2f64..4.0, 1..=3),
        t in 0.1f64..10.0,
        n in 1usize..200,
    ) {
        let s = box_spectrum(&lengths, 200).unwrap();
        let st = scale_spectrum(&s, t).unwrap();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        let (a, b) = (bounds::eval_liyau_sum(&s, n).unwrap(), bounds::eval_liyau_sum(&st, n).unwrap());
        prop_assert!(rel(a.sharpness, b.sharpness) < 1e-12);
        let (a, b) = (bounds::eval_liyau_single(&s, n).unwrap(), bounds::eval_liyau_single(&st, n).unwrap());
        prop_assert!(rel(a.sharpness, b.sharpness) < 1e-12);
        let (a, b) = (bounds::eval_avg(&s, n).unwrap(), bounds::eval_avg(&st, n).unwrap());
        prop_assert!(rel(a.sharpness, b.sharpness) < 1e-12);
        prop_assert_eq!(bounds::thm1_best_k(&s, n).unwrap().0, bounds::thm1_best_k(&st, n).unwrap().0);
    }

    #[test]
    fn box_spectrum_is_complete(lengths in prop::collection::vec(0.2f64..4.0, 1..=3), n in 1usize..300) {
        let short = box_spectrum(&lengths, n).unwrap();
        let long = box_spectrum(&lengths, 2 * n).unwrap();
        prop_assert_eq!(short.eigenvalues(), &long.eigenvalues()[..n]);
    }

    #[test]
    fn thm2_threshold_is_sharp(n in 1usize..5000, d in 1usize..=6) {
        let t = bounds::thm2_threshold(n, d);
        prop_assert!(bounds::thm2_admissible(n, t, d));
        prop_assert!(t == 1 || !bounds::thm2_admissible(n, t - 1, d));
        prop_assert!(bounds::thm2_factor(n, t, d) > 2.0);
    }

    #[test]
    fn bessel_zeros_interlace(nu in 0.0f64..20.0, k in 1usize..60) {
        let a = special::bessel_zero(nu, k).unwrap();
        let b = special::bessel_zero(nu + 1.0, k).unwrap();
        let c = special::bessel_zero(nu, k + 1).unwrap();
        prop_assert!(a < b && b < c);
        prop_assert!(special::bessel_j(nu, a).unwrap().abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn spectral_mass_bounded_and_lemma1_holds(a in 0.5f64..2.0, b in 0.5f64..2.0, k in 1usize..=20) {
        let profile = fourier::box_profile(&[a, b], k, &GridSpec::default()).unwrap();
        prop_assert!(profile.max_value() <= 1.0 + 1e-6);
        let diag = fourier::eta(&profile).unwrap();
        prop_assert!((0.0..=1.0).contains(&diag.eta));
        prop_assert!(diag.lemma1_verified);
        let spectrum = box_spectrum(&[a, b], k).unwrap();
        let check = fourier::lemma1_check(&spectrum, &diag).unwrap();
        prop_assert!(check.sum.verified && check.single.verified);
    }
}
