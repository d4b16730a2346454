use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use picard::covering::{horoballs_meet, horoballs_meet_depth};
use picard::heisenberg::{cygan_dist4, translation_matrix, CuspGroup, CuspNormalForm, HeisPoint};
use picard::hermitian::{depth, herm_product, standard_lift, BoundaryPoint};
use picard::ring::{QuadField, RingParams};
use proptest::prelude::*;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn arb_point(d: u32) -> impl Strategy<Value = HeisPoint> {
    let p = RingParams::new(d).unwrap();
    (-40i64..40, -40i64..40, 1i64..12, -40i64..40, 1i64..12)
        .prop_map(move |(a, b, den, t, td)| HeisPoint::new(QuadField::new(r(a, den), r(b, den), p), r(t, td)))
}

fn finite(p: BoundaryPoint) -> HeisPoint {
    p.finite().cloned().expect("finite image")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distance_is_form_d11(a in arb_point(11), b in arb_point(11)) {
        let z = BigRational::zero();
        let h = herm_product(&standard_lift(&a.z, &a.t, &z), &standard_lift(&b.z, &b.t, &z)).scale(&r(2, 1));
        prop_assert_eq!(cygan_dist4(&a, &b), h.norm());
    }

    #[test]
    fn cusp_group_is_isometric(a in arb_point(2), b in arb_point(2), p in 0u8..2, n in -3i64..3, m in -3i64..3, l in -3i64..3) {
        let g = CuspGroup::new(2).unwrap();
        let mat = g.matrix(&CuspNormalForm::new(p, n, m, l));
        let ga = finite(mat.apply(&BoundaryPoint::Finite(a.clone())));
        let gb = finite(mat.apply(&BoundaryPoint::Finite(b.clone())));
        prop_assert_eq!(cygan_dist4(&ga, &gb), cygan_dist4(&a, &b));
    }

    #[test]
    fn translations_act_by_left_multiplication(a in arb_point(2), x in -4i64..4, y in -4i64..4, t in -4i64..4) {
        let params = RingParams::new(2).unwrap();
        let s = HeisPoint::new(QuadField::from_ints(x, y, params), r(t, 1));
        if let Some(m) = translation_matrix(&s) {
            prop_assert_eq!(finite(m.apply(&BoundaryPoint::Finite(a.clone()))), s.mul(&a));
        }
    }

    #[test]
    fn horoball_test_matches_depth(a in arb_point(2), un in 1i64..300, ud in 1i64..300) {
        let params = RingParams::new(2).unwrap();
        let u = r(un, ud);
        let p = BoundaryPoint::Finite(a);
        let k = depth(&p, params).unwrap();
        let lhs = horoballs_meet(&p, &u, params).unwrap();
        prop_assert_eq!(lhs, &u * &u * BigRational::from_integer(k) <= r(4, 1));
    }
}

#[test]
fn horoball_flip_is_exact() {
    for k in 1..=44u64 {
        // u² = 4/k exactly is only rational for some k; test the scaled inequality on both sides
        let u2 = r(4, k as i64);
        let kk = BigRational::from_integer(BigInt::from(k));
        let eps = r(1, 1_000_000_007);
        for (u2s, expect) in [(u2.clone() - &eps, true), (u2.clone(), true), (u2 + &eps, false)] {
            assert_eq!(&u2s * &kk <= r(4, 1), expect);
        }
        // rational heights straddling 2/√k
        let s = (4.0 / k as f64).sqrt();
        let below = r((s * 1e9).floor() as i64, 1_000_000_000);
        let above = r((s * 1e9).ceil() as i64 + 1, 1_000_000_000);
        assert!(horoballs_meet_depth(k, &below), "k={}", k);
        assert!(!horoballs_meet_depth(k, &above), "k={}", k);
        if matches!(k, 1 | 4 | 16) {
            let exact = r(2, (k as f64).sqrt() as i64);
            assert!(horoballs_meet_depth(k, &exact));
        }
    }
}
