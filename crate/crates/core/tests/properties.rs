//! Property tests for the algebraic and analytic invariants of each module.

use proptest::prelude::*;
use rug::{Integer, Rational};

use divlift::ball::{ComplexBall, PrecisionCtx, RealBall};
use divlift::borcherds::zagier_basis;
use divlift::hecke::{check_plus_support, hecke_prime, hecke_tn, mult_hecke, WeightedForm};
use divlift::lifts::{divisor_lift, divisor_solve};
use divlift::lvalues::{fundamental_unit, is_fundamental_discriminant, kronecker_symbol};
use divlift::numeval::{eval_eta, eval_j};
use divlift::qforms::{class_number, enumerate_forms, genus_character, BinaryQF, Sl2};
use divlift::series::{delta, eisenstein, faber_poly, j1_series, RSeries};
use divlift::traces::trace_of_one;

fn series(lead: i64, v: &[i64]) -> RSeries {
    RSeries::from_i64(lead, v).unwrap()
}

fn normalized(v: &[i64]) -> RSeries {
    let mut w = vec![1];
    w.extend_from_slice(v);
    series(0, &w)
}

fn small_coeffs(len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-20i64..=20, len)
}

fn sl2() -> impl Strategy<Value = Sl2> {
    // Products of the generators T^k and S keep the determinant at 1.
    prop::collection::vec((-3i64..=3, any::<bool>()), 1..5).prop_map(|steps| {
        let mut m: Sl2 = [[1, 0], [0, 1]];
        for (k, s) in steps {
            let t: Sl2 = [[1, k], [0, 1]];
            m = divlift::qforms::sl2_mul(&m, &t);
            if s {
                m = divlift::qforms::sl2_mul(&m, &[[0, -1], [1, 0]]);
            }
        }
        m
    })
}

fn upper_point(x: (i64, i64), y: (i64, i64), prec: u32) -> ComplexBall {
    ComplexBall::from_parts(
        &RealBall::from_rational(prec, &Rational::from(x)),
        &RealBall::from_rational(prec, &Rational::from(y)),
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn series_ring_laws(a in small_coeffs(10), b in small_coeffs(10), c in small_coeffs(10), la in -3i64..3, lb in -3i64..3) {
        let (f, g, h) = (series(la, &a), series(lb, &b), series(0, &c));
        prop_assert!(f.mul(&g).unwrap().eq_exact(&g.mul(&f).unwrap()));
        let lhs = f.mul(&g).unwrap().mul(&h).unwrap();
        let rhs = f.mul(&g.mul(&h).unwrap()).unwrap();
        prop_assert!(lhs.differences(&rhs, lhs.prec()).is_empty());
        let dist = f.mul(&g.add(&h).unwrap()).unwrap();
        let split = f.mul(&g).unwrap().add(&f.mul(&h).unwrap()).unwrap();
        prop_assert!(dist.differences(&split, dist.prec()).is_empty());
    }

    #[test]
    fn series_inverse_and_exp_log(a in small_coeffs(12)) {
        let f = normalized(&a);
        let one = f.mul(&f.inv().unwrap()).unwrap();
        prop_assert!(one.differences(&RSeries::one(&(), 13).unwrap(), one.prec()).is_empty());
        let back = f.log().unwrap().exp().unwrap();
        prop_assert!(back.differences(&f, back.prec()).is_empty());
    }

    #[test]
    fn theta_is_a_derivation(a in small_coeffs(10), b in small_coeffs(10), la in -2i64..2, lb in -2i64..2) {
        let (f, g) = (series(la, &a), series(lb, &b));
        let lhs = f.mul(&g).unwrap().theta();
        let rhs = f.theta().mul(&g).unwrap().add(&f.mul(&g.theta()).unwrap()).unwrap();
        prop_assert!(lhs.differences(&rhs, lhs.prec()).is_empty());
    }

    #[test]
    fn hecke_operators_commute(m in 1u64..5, n in 1u64..5) {
        let f = WeightedForm::new(j1_series(400).unwrap(), 0).unwrap();
        let fm = WeightedForm::new(hecke_tn(&f, m).unwrap(), 0).unwrap();
        let fnn = WeightedForm::new(hecke_tn(&f, n).unwrap(), 0).unwrap();
        let a = hecke_tn(&fm, n).unwrap();
        let b = hecke_tn(&fnn, m).unwrap();
        let top = a.prec().min(b.prec());
        prop_assert!(top > 0);
        prop_assert!(a.differences(&b, top).is_empty());
    }

    #[test]
    fn multiplicative_hecke_is_multiplicative(a in small_coeffs(30), b in small_coeffs(30), p in prop::sample::select(vec![2u64, 3])) {
        let (f, g) = (normalized(&a), normalized(&b));
        let lhs = mult_hecke(&f.mul(&g).unwrap(), p).unwrap();
        let rhs = mult_hecke(&f, p).unwrap().mul(&mult_hecke(&g, p).unwrap()).unwrap();
        prop_assert!(lhs.differences(&rhs, lhs.prec().min(rhs.prec())).is_empty());
    }

    #[test]
    fn divisor_lift_is_additive(x in 0usize..3, y in 0usize..3) {
        let forms = [(4u32, 4i64), (6, 6), (0, 12)];
        let make = |i: usize| {
            let (k, w) = forms[i];
            let s = if k == 0 { delta(30).unwrap() } else { eisenstein(k, 30).unwrap() };
            WeightedForm::new(s, w).unwrap()
        };
        let (f, g) = (make(x), make(y));
        let fg = WeightedForm::new(f.series.mul(&g.series).unwrap(), f.weight + g.weight).unwrap();
        let lhs = divisor_lift(&fg).unwrap();
        let rhs = divisor_lift(&f).unwrap().add(&divisor_lift(&g).unwrap()).unwrap();
        prop_assert!(lhs.differences(&rhs, lhs.prec().min(rhs.prec())).is_empty());
    }

    #[test]
    fn divisor_solve_round_trip(pts in prop::collection::btree_map(-3000i64..3000, 1i64..12, 1..4)) {
        // Points at integral j-values with multiplicities k/6.
        let total: Rational = pts.values().map(|k| Rational::from((*k, 6))).sum();
        let len = 2 * pts.len() + 3;
        let sums: Vec<Rational> = (1..=len as u64)
            .map(|n| {
                let f = faber_poly(n).unwrap();
                pts.iter().map(|(x, k)| Rational::from((f.eval_integer(&Integer::from(*x)), 6)) * Rational::from(*k)).sum()
            })
            .collect();
        let data = divisor_solve(&sums, &total).unwrap();
        // Points sharing a multiplicity are grouped into one factor.
        let degree: usize = data.entries.iter().map(|e| e.factor.degree().unwrap()).sum();
        prop_assert_eq!(degree, pts.len());
        for (x, k) in &pts {
            let hits: Vec<_> = data.entries.iter().filter(|e| e.factor.eval(&Rational::from(*x)) == 0).collect();
            prop_assert_eq!(hits.len(), 1);
            prop_assert_eq!(hits[0].multiplicity.clone(), Rational::from((*k, 6)));
        }
    }

    #[test]
    fn reduction_is_a_class_invariant(idx in 0usize..64, g in sl2(), disc in prop::sample::select(vec![-23i64, -47, -71, -84, -100, -119])) {
        let forms = enumerate_forms(disc).unwrap();
        let (q, _) = forms[idx % forms.len()];
        let moved = q.act(&g);
        prop_assert_eq!(moved.disc(), disc);
        let r = moved.reduce();
        prop_assert!(r.is_reduced());
        prop_assert_eq!(r, q);
        prop_assert_eq!(r.reduce(), r);
    }

    #[test]
    fn genus_character_is_a_class_function(g in sl2(), pick in 0usize..32) {
        for (delta, d) in [(5i64, 4i64), (5, 3), (8, 3), (12, 7), (13, 3)] {
            let forms = enumerate_forms(-delta * d).unwrap();
            let (q, _) = forms[pick % forms.len()];
            prop_assert_eq!(genus_character(delta, &q).unwrap(), genus_character(delta, &q.act(&g)).unwrap());
        }
    }

    #[test]
    fn kronecker_symbol_is_multiplicative(a in -200i64..200, b in -200i64..200, n in 1i64..300) {
        prop_assert_eq!(kronecker_symbol(a * b, n), kronecker_symbol(a, n) * kronecker_symbol(b, n));
    }

    #[test]
    fn kronecker_symbol_is_periodic_for_discriminants(k in -50i64..50, n in 1i64..100) {
        for d in [-4i64, -3, 5, 8, 12, -20, 13] {
            prop_assert_eq!(kronecker_symbol(d, n), kronecker_symbol(d, n + k.abs() * d.abs()));
        }
    }

    #[test]
    fn fundamental_unit_has_unit_norm(d in 2i64..400) {
        prop_assume!(is_fundamental_discriminant(d));
        let u = fundamental_unit(d).unwrap();
        let norm4 = Integer::from(&u.x * &u.x) - Integer::from(&u.y * &u.y) * d;
        prop_assert!(norm4 == 4 * u.norm);
        prop_assert!(u.y > 0);
    }

    #[test]
    fn class_number_matches_brute_force(n in 3i64..400) {
        let d = -n;
        prop_assume!(d.rem_euclid(4) == 0 || d.rem_euclid(4) == 1);
        // Count reduced primitive triples directly.
        let mut h = 0u64;
        for a in 1..=n {
            for b in -a..=a {
                let num = b * b - d;
                if num % (4 * a) != 0 { continue; }
                let c = num / (4 * a);
                if c < a { continue; }
                if b < 0 && (b == -a || a == c) { continue; }
                let g = Integer::from(a).gcd(&Integer::from(b)).gcd(&Integer::from(c));
                if g == 1 { h += 1; }
            }
        }
        prop_assert_eq!(class_number(d).unwrap(), h);
    }

    #[test]
    fn trace_of_one_vanishes(pick in 0usize..6) {
        let (delta, d) = [(5i64, 3i64), (5, 4), (8, 3), (12, 7), (13, 3), (8, 7)][pick];
        prop_assert_eq!(trace_of_one(delta, d).unwrap(), Rational::new());
    }

    #[test]
    fn plus_space_basis_support(d in prop::sample::select(vec![3u64, 4, 7, 8, 11, 12, 15, 16])) {
        let f = zagier_basis(d, d as usize + 40).unwrap();
        prop_assert!(check_plus_support(f.series()).is_ok());
        prop_assert!(f.series().is_integral());
        prop_assert_eq!(f.series().lead(), -(d as i64));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn j_is_modular(x in (-12i64..12, 5i64..6), y in (3i64..20, 10i64..11)) {
        let ctx = PrecisionCtx::new(30);
        let prec = ctx.bits();
        let tau = upper_point(x, y, prec);
        let a = eval_j(&tau, &ctx).unwrap();
        let shifted = eval_j(&tau.add(&ComplexBall::one(prec)), &ctx).unwrap();
        let inverted = eval_j(&tau.inv().unwrap().neg(), &ctx).unwrap();
        prop_assert!(a.overlaps(&shifted));
        prop_assert!(a.overlaps(&inverted));
    }

    #[test]
    fn eta_inversion_modulus(x in (-12i64..12, 5i64..6), y in (5i64..20, 10i64..11)) {
        // |eta(-1/tau)| = |tau|^(1/2) |eta(tau)|.
        let ctx = PrecisionCtx::new(30);
        let prec = ctx.bits();
        let tau = upper_point(x, y, prec);
        let lhs = eval_eta(&tau.inv().unwrap().neg(), &ctx).unwrap().abs();
        let rhs = eval_eta(&tau, &ctx).unwrap().abs().mul(&tau.abs().sqrt().unwrap());
        prop_assert!(lhs.overlaps(&rhs));
        prop_assert!(lhs.sub(&rhs).abs_upper().to_f64() < 1e-25);
    }

    #[test]
    fn ball_arithmetic_contains_exact_result(a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, e in 1i64..1000) {
        let prec = 80;
        let (x, y) = (Rational::from((a, b)), Rational::from((c, e)));
        let bx = RealBall::from_rational(prec, &x);
        let by = RealBall::from_rational(prec, &y);
        prop_assert!(bx.mul(&by).add(&bx).contains_rational(&(x.clone() * &y + &x)));
        if c != 0 {
            prop_assert!(bx.div(&by).unwrap().contains_rational(&(x.clone() / &y)));
        }
    }

    #[test]
    fn hecke_on_delta_is_eigen(p in prop::sample::select(vec![2u64, 3, 5, 7])) {
        // Under the p^(1-k/2) normalization, Delta|T_p = tau(p) p^-5 Delta.
        let d = delta(200).unwrap();
        let img = hecke_prime(&d, 12, p).unwrap();
        let tau_p = d.coeff(p as i64).unwrap() / Rational::from(p.pow(5));
        let expect = d.scale_rational(&tau_p);
        prop_assert!(img.differences(&expect, img.prec()).is_empty());
    }
}

#[test]
fn sl2_sanity() {
    let q = BinaryQF::new(2, 1, 3);
    assert_eq!(q.act(&[[1, 0], [0, 1]]), q);
}
