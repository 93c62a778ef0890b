//! Positive definite binary quadratic forms, CM points, genus characters and
//! reduction of points of the upper half-plane to the standard fundamental
//! domain.

use std::fmt;

use rug::{Complex, Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::ball::{ComplexBall, RealBall};
use crate::error::{Error, Result};
use crate::lvalues::{is_fundamental_discriminant, kronecker_symbol};

/// The form `a X^2 + b XY + c Y^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BinaryQF {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

/// The CM point `(-b + i sqrt|D|) / (2a)` of a positive definite form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeegnerPointExact {
    pub a: i64,
    pub b: i64,
    pub disc: i64,
}

/// An element `[[a, b], [c, d]]` of SL2(Z).
pub type Sl2 = [[i64; 2]; 2];

pub const IDENTITY: Sl2 = [[1, 0], [0, 1]];

pub fn sl2_mul(x: &Sl2, y: &Sl2) -> Sl2 {
    [
        [x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]],
        [x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]],
    ]
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

impl BinaryQF {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        BinaryQF { a, b, c }
    }

    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn content(&self) -> i64 {
        gcd(gcd(self.a, self.b), self.c)
    }

    pub fn is_primitive(&self) -> bool {
        self.content() == 1
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0 && self.disc() < 0
    }

    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && !((b.abs() == a || a == c) && b < 0)
    }

    /// Order of the stabilizer of the CM point in PSL2(Z), for a reduced form.
    pub fn omega(&self) -> u8 {
        if self.a == self.b && self.b == self.c {
            3
        } else if self.b == 0 && self.a == self.c {
            2
        } else {
            1
        }
    }

    /// `Q o gamma`, i.e. `(X, Y) -> Q(pX + qY, rX + sY)`.
    pub fn act(&self, g: &Sl2) -> BinaryQF {
        let [[p, q], [r, s]] = *g;
        BinaryQF {
            a: self.eval(p, r),
            b: 2 * self.a * p * q + self.b * (p * s + q * r) + 2 * self.c * r * s,
            c: self.eval(q, s),
        }
    }

    /// The reduced form properly equivalent to a positive definite form.
    pub fn reduce(&self) -> BinaryQF {
        assert!(self.is_positive_definite(), "reduction needs a positive definite form");
        let d = self.disc();
        let (mut a, mut b) = (self.a, self.b);
        let c = loop {
            // Translate b into (-a, a].
            let two_a = 2 * a;
            let mut nb = b.rem_euclid(two_a);
            if nb > a {
                nb -= two_a;
            }
            b = nb;
            let c = (b * b - d) / (4 * a);
            if a > c {
                a = c;
                b = -b;
                continue;
            }
            break c;
        };
        if (a == c || b.abs() == a) && b < 0 {
            b = -b;
        }
        BinaryQF { a, b, c }
    }

    pub fn cm_point(&self) -> HeegnerPointExact {
        HeegnerPointExact { a: self.a, b: self.b, disc: self.disc() }
    }
}

impl fmt::Display for BinaryQF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.a, self.b, self.c)
    }
}

/// `alpha_Q` for a positive definite form.
pub fn cm_point(q: &BinaryQF) -> HeegnerPointExact {
    q.cm_point()
}

impl HeegnerPointExact {
    pub fn to_ball(&self, prec: u32) -> ComplexBall {
        let re = RealBall::from_rational(prec, &Rational::from((-self.b, 2 * self.a)));
        let im = RealBall::from_int(prec, -self.disc).sqrt().expect("positive radicand").div_int(2 * self.a);
        ComplexBall::from_parts(&re, &im)
    }
}

fn check_negative_disc(d: i64) -> Result<()> {
    if d >= 0 {
        return Err(Error::BadDiscriminant(d, "must be negative".into()));
    }
    if !matches!(d.rem_euclid(4), 0 | 1) {
        return Err(Error::BadDiscriminant(d, "must be congruent to 0 or 1 mod 4".into()));
    }
    Ok(())
}

/// One reduced representative per class of discriminant `d`, imprimitive
/// classes included, with the stabilizer order of each CM point.
pub fn enumerate_forms(d: i64) -> Result<Vec<(BinaryQF, u8)>> {
    check_negative_disc(d)?;
    let n = -d;
    let mut out = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= n {
        for b in (-a + 1)..=a {
            if (b - d).rem_euclid(2) != 0 {
                continue;
            }
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a {
                continue;
            }
            let q = BinaryQF { a, b, c };
            if q.is_reduced() {
                out.push((q, q.omega()));
            }
        }
        a += 1;
    }
    out.sort();
    Ok(out)
}

/// Classical class number of primitive forms of discriminant `d < 0`.
pub fn class_number(d: i64) -> Result<u64> {
    Ok(enumerate_forms(d)?.iter().filter(|(q, _)| q.is_primitive()).count() as u64)
}

/// Search box for coprime representations, as a multiple of `Delta`.
pub const REPRESENTATION_SEARCH_FACTOR: i64 = 16;

/// The genus character `chi_Delta(Q)`.
///
/// Zero when `gcd(a, b, c, Delta) > 1`; otherwise `(Delta|n)` for integers
/// `n = Q(x, y)` coprime to `Delta`. At least three distinct such `n` are
/// found and compared, so an inconsistent answer is reported rather than
/// silently returned.
pub fn genus_character(delta: i64, q: &BinaryQF) -> Result<i32> {
    if delta < 1 || !is_fundamental_discriminant(delta) {
        return Err(Error::BadDiscriminant(delta, "genus characters need a positive fundamental discriminant".into()));
    }
    let disc = q.disc();
    if disc % delta != 0 {
        return Err(Error::BadDiscriminant(disc, format!("form discriminant is not divisible by {delta}")));
    }
    let rest = disc / delta;
    if !matches!(rest.rem_euclid(4), 0 | 1) {
        return Err(Error::BadDiscriminant(disc, format!("{disc}/{delta} is not a discriminant")));
    }
    if gcd(q.content(), delta) > 1 {
        return Ok(0);
    }
    if delta == 1 {
        return Ok(1);
    }
    let bound = REPRESENTATION_SEARCH_FACTOR * delta;
    let mut seen: Vec<(i64, i32)> = Vec::new();
    'outer: for r in 0..=bound {
        // Walk the boundary of the box max(|x|, |y|) = r.
        for x in -r..=r {
            for y in -r..=r {
                if x.abs().max(y.abs()) != r {
                    continue;
                }
                let n = q.eval(x, y);
                if n == 0 || gcd(n, delta) != 1 || seen.iter().any(|&(m, _)| m == n) {
                    continue;
                }
                seen.push((n, kronecker_symbol(delta, n)));
                if seen.len() >= 3 {
                    break 'outer;
                }
            }
        }
    }
    if seen.is_empty() {
        return Err(Error::NoCoprimeRepresentationFound(delta));
    }
    let v = seen[0].1;
    if seen.len() < 3 || seen.iter().any(|&(_, s)| s != v) {
        return Err(Error::InternalInconsistency(format!(
            "genus character of {q} for Delta = {delta} is not well defined on {seen:?}"
        )));
    }
    Ok(v)
}

/// Reduces `tau` into `|Re tau| <= 1/2`, `|tau| >= 1`.
///
/// Decisions are taken on the midpoint; the returned ball is `gamma tau`
/// recomputed in ball arithmetic from the input, so it is a rigorous
/// enclosure regardless of how boundary ties were broken.
pub fn reduce_to_fundamental_domain(tau: &ComplexBall) -> Result<(ComplexBall, Sl2)> {
    if tau.im().contains_zero() || tau.im().mid().is_sign_negative() {
        return Err(Error::PrecisionLoss("Im(tau) must be certifiably positive".into()));
    }
    let prec = tau.prec();
    let mut z: Complex = tau.mid().clone();
    let mut g: Sl2 = IDENTITY;
    for _ in 0..10_000 {
        let n = Float::with_val(prec, z.real().round_ref());
        let n_int = n.to_integer().and_then(|x| x.to_i64()).ok_or_else(|| {
            Error::PrecisionLoss("real part too large to reduce".into())
        })?;
        if n_int != 0 {
            *z.mut_real() -= &n;
            g = sl2_mul(&[[1, -n_int], [0, 1]], &g);
        }
        let norm = Float::with_val(prec, z.norm_ref());
        if norm < 1 {
            z = -Complex::with_val(prec, z.recip_ref());
            g = sl2_mul(&[[0, -1], [1, 0]], &g);
            continue;
        }
        break;
    }
    let [[a, b], [c, d]] = g;
    let num = tau.mul_int(a).add(&ComplexBall::from_int(prec, b));
    let den = tau.mul_int(c).add(&ComplexBall::from_int(prec, d));
    let reduced = num.div(&den)?;
    if reduced.im().abs_lower().is_zero() || reduced.rad_f64() > 1e-6 {
        return Err(Error::PrecisionLoss("ball too wide after reduction".into()));
    }
    Ok((reduced, g))
}

/// Applies a matrix to a point: `(a tau + b) / (c tau + d)`.
pub fn mobius(g: &Sl2, tau: &ComplexBall) -> Result<ComplexBall> {
    let prec = tau.prec();
    let [[a, b], [c, d]] = *g;
    let num = tau.mul_int(a).add(&ComplexBall::from_int(prec, b));
    let den = tau.mul_int(c).add(&ComplexBall::from_int(prec, d));
    num.div(&den)
}

/// Halves `|D|` bookkeeping: `sqrt(|D|)` as a real ball.
pub fn sqrt_abs_disc(d: i64, prec: u32) -> RealBall {
    RealBall::from_int(prec, Integer::from(d.unsigned_abs())).sqrt().expect("non-negative")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_discriminants() {
        assert_eq!(enumerate_forms(-3).unwrap(), vec![(BinaryQF::new(1, 1, 1), 3)]);
        assert_eq!(
            enumerate_forms(-20).unwrap(),
            vec![(BinaryQF::new(1, 0, 5), 1), (BinaryQF::new(2, 2, 3), 1)]
        );
        let f60: Vec<BinaryQF> = enumerate_forms(-60).unwrap().into_iter().map(|x| x.0).collect();
        assert_eq!(
            f60,
            vec![BinaryQF::new(1, 0, 15), BinaryQF::new(2, 2, 8), BinaryQF::new(3, 0, 5), BinaryQF::new(4, 2, 4)]
        );
        assert!(matches!(enumerate_forms(-5), Err(Error::BadDiscriminant(..))));
    }

    #[test]
    fn characters_for_delta_5() {
        assert_eq!(genus_character(5, &BinaryQF::new(1, 0, 5)).unwrap(), 1);
        assert_eq!(genus_character(5, &BinaryQF::new(2, 2, 3)).unwrap(), -1);
        assert_eq!(genus_character(5, &BinaryQF::new(5, 0, 5)).unwrap(), 0);
    }

    #[test]
    fn reduction_examples() {
        let tau = ComplexBall::from_parts(&RealBall::from_int(128, 5), &RealBall::from_int(128, 1));
        let (r, g) = reduce_to_fundamental_domain(&tau).unwrap();
        assert_eq!(g, [[1, -5], [0, 1]]);
        assert!(r.re().contains_zero());
        let tau = ComplexBall::from_parts(&RealBall::from_f64(128, 0.1), &RealBall::from_f64(128, 0.1));
        let (r, _) = reduce_to_fundamental_domain(&tau).unwrap();
        assert!(r.abs().mid().to_f64() >= 1.0 - 1e-12);
        assert!(r.re().mid().to_f64().abs() <= 0.5 + 1e-12);
    }

    #[test]
    fn cm_points() {
        let p = cm_point(&BinaryQF::new(2, 2, 3));
        let z = p.to_ball(128);
        assert!((z.re().to_f64() + 0.5).abs() < 1e-15);
        assert!((z.im().to_f64() - 5f64.sqrt() / 2.0).abs() < 1e-15);
        // a z^2 + b z + c vanishes at the CM point.
        let v = z.sqr().mul_int(2).add(&z.mul_int(2)).add(&ComplexBall::from_int(128, 3));
        assert!(v.abs().to_f64() < 1e-30);
    }
}
