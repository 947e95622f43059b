//! Property tests over random parameter points and phase-plane samples.

use guderley::fields::{psi, psi_inverse, sw_fields, tu_fields};
use guderley::num::{rel_diff, Mp};
use guderley::params::{r_max, ParamSet};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Round trip through every entry point reproduces the ratio.
    #[test]
    fn entry_point_round_trip(t in 1e-4f64..0.9999) {
        let prec = 192;
        let hi = r_max(prec).to_f64();
        let r = 1.0 + (hi - 1.0) * t;
        let p = ParamSet::from_r(prec, r).unwrap();
        let q = ParamSet::from_eigen_ratio_mp(p.eigen_ratio.clone()).unwrap();
        prop_assert!(rel_diff(&p.r, &q.r, 1e-30) < 1e-40);
        let via_a = ParamSet::from_a(prec, p.a.to_f64()).unwrap();
        prop_assert!((via_a.r.to_f64() - r).abs() < 1e-13);
    }

    /// Ψ-conjugacy of the fields at random points of the σ > 0 sheet.
    #[test]
    fn psi_conjugacy(alpha in 0.02f64..0.98, s in 1e-3f64..5.0, w in -1.0f64..2.0) {
        let prec = 192;
        let p = ParamSet::from_alpha(prec, alpha).unwrap();
        let sigma = Mp::new(prec, s);
        let ww = Mp::new(prec, w);
        let (tau, u) = psi(&p, &sigma, &ww);
        let swf = sw_fields(&p, &sigma, &ww);
        let tuf = tu_fields(&p, &tau, &u);
        let ap1 = 1.0 + &p.a;
        let rhs_t = -(ap1.powi(3) * &swf.delta1);
        let rhs_u = 2.0 * ap1.powi(4) * &sigma * &swf.delta2;
        prop_assert!(rel_diff(&tuf.delta_tau, &rhs_t, 1e-12) < 1e-12);
        prop_assert!(rel_diff(&tuf.delta_u, &rhs_u, 1e-12) < 1e-12);
        let (s2, w2) = psi_inverse(&p, &tau, &u).unwrap();
        prop_assert!(rel_diff(&s2, &sigma, 1e-30) < 1e-40);
        prop_assert!(rel_diff(&w2, &ww, 1e-30) < 1e-40);
    }

    /// The three real roots of the Δ₁ cubic annihilate it and obey the
    /// portrait ordering.
    #[test]
    fn delta1_roots(alpha in 0.02f64..0.98, s in 1e-3f64..20.0) {
        let prec = 192;
        let p = ParamSet::from_alpha(prec, alpha).unwrap();
        let sigma = Mp::new(prec, s);
        let (w1, w2, w3) = guderley::fields::root_curves_w(&p, &sigma).unwrap();
        let r = p.r.to_f64();
        prop_assert!(w1.to_f64() <= 1e-10);
        prop_assert!(w2.to_f64() > r - 1.0 - 1e-10 && w2.to_f64() <= 1.0 + 1e-10);
        prop_assert!(w3.to_f64() >= r - 1e-10);
        for w in [w1, w2, w3] {
            let f = sw_fields(&p, &sigma, &w);
            let scale = 1.0 + s * s * s;
            prop_assert!(f.delta1.to_f64().abs() / scale < 1e-30);
        }
    }

    /// Eigen-system residuals vanish and the ratio of eigenvalues is R,
    /// across the admissible α range.
    #[test]
    fn eigen_residuals(alpha in 1e-3f64..0.999) {
        let prec = 192;
        let p = ParamSet::from_alpha(prec, alpha).unwrap();
        let (lm, lp) = p.eigenvalues();
        prop_assert!(p.eigen_residual(&lm).abs().to_f64() < 1e-40);
        prop_assert!(p.eigen_residual(&lp).abs().to_f64() < 1e-40);
        prop_assert!(rel_diff(&(&lm / &lp), &p.eigen_ratio, 1e-30) < 1e-40);
    }

    /// Decimal serialization of working-precision values round-trips
    /// exactly.
    #[test]
    fn decimal_round_trip(x in -1e6f64..1e6, scale in -40i32..40) {
        let prec = 256;
        let v = Mp::new(prec, x) * Mp::new(prec, 2.0).powi(scale) / 3.0;
        let s = v.to_decimal_string();
        let back = Mp(rug::Float::with_val(prec, rug::Float::parse(&s).unwrap()));
        prop_assert_eq!(v, back);
    }
}
