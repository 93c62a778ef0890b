//! Kronecker symbols, fundamental discriminants, Dirichlet L-values at
//! `s = 1` for quadratic characters, fundamental units and regulators.

use std::collections::BTreeMap;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::ball::{mag_pow2, PrecisionCtx, RealBall, MAG_PREC};
use crate::error::{Error, Result};
use crate::qforms::class_number;

/// The Kronecker symbol `(a|n)`.
pub fn kronecker_symbol(a: i64, n: i64) -> i32 {
    const TAB2: [i32; 8] = [0, 1, 0, -1, 0, -1, 0, 1];
    let mut a = a as i128;
    let mut b = n as i128;
    if b == 0 {
        return if a.abs() == 1 { 1 } else { 0 };
    }
    if a % 2 == 0 && b % 2 == 0 {
        return 0;
    }
    let mut v = 0;
    while b % 2 == 0 {
        v += 1;
        b /= 2;
    }
    let mut k: i32 = if v % 2 == 0 { 1 } else { TAB2[a.rem_euclid(8) as usize] };
    if b < 0 {
        b = -b;
        if a < 0 {
            k = -k;
        }
    }
    // b is now odd and positive.
    loop {
        if a == 0 {
            return if b == 1 { k } else { 0 };
        }
        let mut v = 0;
        while a % 2 == 0 {
            v += 1;
            a /= 2;
        }
        if v % 2 == 1 {
            k *= TAB2[b.rem_euclid(8) as usize];
        }
        // Reciprocity; a negative a is read mod 4 as in two's complement.
        if a.rem_euclid(4) == 3 && b.rem_euclid(4) == 3 {
            k = -k;
        }
        let r = a.abs();
        a = b.rem_euclid(r);
        b = r;
    }
}

pub fn is_squarefree(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m % (p * p) == 0 {
            return false;
        }
        if m % p == 0 {
            m /= p;
        }
        p += 1;
    }
    true
}

/// True for fundamental discriminants; `1` counts as the trivial one.
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 1 {
        return true;
    }
    if d == 0 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => is_squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

/// Writes a discriminant as `D f^2` with `D` fundamental.
pub fn discriminant_decompose(disc: i64) -> Result<(i64, u64)> {
    if disc == 0 || !matches!(disc.rem_euclid(4), 0 | 1) {
        return Err(Error::BadDiscriminant(disc, "not a discriminant".into()));
    }
    let n = disc.unsigned_abs();
    let mut f = (n as f64).sqrt() as u64 + 1;
    while f >= 1 {
        if n % (f * f) == 0 {
            let d0 = disc / (f * f) as i64;
            if matches!(d0.rem_euclid(4), 0 | 1) && is_fundamental_discriminant(d0) {
                return Ok((d0, f));
            }
        }
        f -= 1;
    }
    Err(Error::BadDiscriminant(disc, "no fundamental part found".into()))
}

/// Number of units in the imaginary quadratic order of discriminant `d`.
pub fn unit_count(d: i64) -> u64 {
    match d {
        -3 => 6,
        -4 => 4,
        _ => 2,
    }
}

/// A value computed by several methods that must agree.
#[derive(Clone, Debug)]
pub struct LValueResult {
    pub value: RealBall,
    pub per_method: BTreeMap<String, RealBall>,
}

fn agree_all(per: &BTreeMap<String, RealBall>, what: &str) -> Result<()> {
    let items: Vec<_> = per.iter().collect();
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            if !items[i].1.overlaps(items[j].1) {
                return Err(Error::MethodDisagreement(format!(
                    "{what}: {} = {} vs {} = {}",
                    items[i].0, items[i].1, items[j].0, items[j].1
                )));
            }
        }
    }
    Ok(())
}

fn tightest(per: &BTreeMap<String, RealBall>) -> RealBall {
    per.values()
        .min_by(|a, b| a.rad().partial_cmp(b.rad()).unwrap_or(std::cmp::Ordering::Equal))
        .cloned()
        .expect("at least one method")
}

/// `-pi / |D|^(3/2) * sum_{a=1}^{|D|} chi(a) a`, for `D < 0`.
pub fn l1_character_sum_negative(d: i64, prec: u32) -> RealBall {
    let m = d.unsigned_abs() as i64;
    let s: i64 = (1..=m).map(|a| kronecker_symbol(d, a) as i64 * a).sum();
    let sq = RealBall::from_int(prec, m).sqrt().expect("positive");
    RealBall::pi(prec).mul_int(-s).div_int(m).div(&sq).expect("non-zero")
}

/// `-(1/sqrt D) sum_{a=1}^{D-1} chi(a) log sin(pi a / D)`, for `D > 0`.
pub fn l1_log_sine_sum(d: i64, prec: u32) -> Result<RealBall> {
    let pi = RealBall::pi(prec);
    let mut acc = RealBall::zero(prec);
    for a in 1..d {
        let chi = kronecker_symbol(d, a);
        if chi == 0 {
            continue;
        }
        let s = pi.mul_int(a).div_int(d).sin().ln()?;
        acc = if chi > 0 { acc.add(&s) } else { acc.sub(&s) };
    }
    let sq = RealBall::from_int(prec, d).sqrt()?;
    acc.neg().div(&sq)
}

/// Partial sums over whole periods with a moment expansion of the tail:
/// `sum_{k >= K} sum_a chi(a)/(km + a) = sum_j (-1)^j M_j m^-(j+1) zeta_K(j+1)`,
/// where `M_j = sum_a chi(a) a^j` and `zeta_K(s) = sum_{k >= K} k^-s`.
pub fn l1_direct_series(d: i64, prec: u32) -> Result<RealBall> {
    let m = d.unsigned_abs() as i64;
    let big_k: i64 = 32;
    // Remainder after J moments is at most (K/(K-1)) (K^-(J+2) + K^-(J+1)/(J+1)).
    let jmax = (prec as i64 + 16) / 5 + 2;
    let chi: Vec<i32> = (0..=m).map(|a| kronecker_symbol(d, a)).collect();
    let mut partial = Rational::new();
    for n in 1..big_k * m {
        let c = chi[(n % m) as usize];
        if c != 0 {
            partial += Rational::from((c as i64, n));
        }
    }
    let mut acc = RealBall::from_rational(prec, &partial);
    // Moments M_j as exact integers.
    let mut moments: Vec<Integer> = vec![Integer::new(); jmax as usize + 1];
    for a in 1..=m {
        let c = chi[a as usize];
        if c == 0 {
            continue;
        }
        let mut p = Integer::from(1);
        for mj in moments.iter_mut() {
            if c > 0 {
                *mj += &p;
            } else {
                *mj -= &p;
            }
            p *= a;
        }
    }
    for j in 1..=jmax {
        let s = (j + 1) as u32;
        let (z, ord) = Float::with_val_round(prec, Float::zeta_u(s), rug::float::Round::Nearest);
        let zball = if ord == std::cmp::Ordering::Equal {
            RealBall::new(z, Float::new(MAG_PREC))
        } else {
            RealBall::new(z.clone(), {
                let e = z.get_exp().unwrap_or(0);
                mag_pow2(e - prec as i32)
            })
        };
        let mut head = RealBall::zero(prec);
        for k in 1..big_k {
            head = head.add(&RealBall::from_int(prec, k).pow_u(s).inv()?);
        }
        let zk = zball.sub(&head);
        let mpow = Integer::from(m).pow(s);
        let coef = Rational::from((moments[j as usize].clone(), mpow));
        let term = zk.mul_rational(&coef);
        acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    // Truncation bound.
    let kf = big_k as f64;
    let l2k = kf.log2();
    let bound_log2 = -(jmax as f64 + 1.0) * l2k + 2.0;
    let err = mag_pow2(bound_log2.ceil() as i32);
    Ok(acc.add_error(&err))
}

/// A unit `(x + y sqrt(disc)) / 2` of the order of discriminant `disc`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuadUnit {
    #[serde(serialize_with = "ser_int")]
    pub x: Integer,
    #[serde(serialize_with = "ser_int")]
    pub y: Integer,
    pub disc: i64,
    /// Norm, `(x^2 - disc y^2)/4`, either 1 or -1.
    pub norm: i32,
}

fn ser_int<S: serde::Serializer>(v: &Integer, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl QuadUnit {
    /// `log((x + y sqrt(disc))/2)` as a real ball.
    pub fn log(&self, prec: u32) -> Result<RealBall> {
        let sq = RealBall::from_int(prec, self.disc).sqrt()?;
        let v = sq.mul(&RealBall::from_int(prec, self.y.clone())).add(&RealBall::from_int(prec, self.x.clone()));
        v.div_int(2).ln()
    }

    /// The square of the unit.
    pub fn square(&self) -> QuadUnit {
        // ((x + y s)/2)^2 = ((x^2 + D y^2)/2 + x y s)/2.
        let x2 = Integer::from(&self.x * &self.x) + Integer::from(&self.y * &self.y) * self.disc;
        QuadUnit {
            x: x2 / 2,
            y: Integer::from(&self.x * &self.y),
            disc: self.disc,
            norm: 1,
        }
    }
}

/// The fundamental unit of the order of discriminant `disc > 0`, from the
/// continued fraction of `(s + sqrt(disc))/2`.
pub fn fundamental_unit(disc: i64) -> Result<QuadUnit> {
    if disc <= 1 || !matches!(disc.rem_euclid(4), 0 | 1) {
        return Err(Error::BadDiscriminant(disc, "need a positive non-square discriminant".into()));
    }
    let r = Integer::from(disc).sqrt();
    if Integer::from(&r * &r) == disc {
        return Err(Error::BadDiscriminant(disc, "square discriminant".into()));
    }
    let s = disc.rem_euclid(2);
    // omega = (P + sqrt disc)/Q.
    let mut pp = Integer::from(s);
    let mut qq = Integer::from(2);
    let (mut p0, mut p1) = (Integer::from(0), Integer::from(1));
    let (mut q0, mut q1) = (Integer::from(1), Integer::from(0));
    let dd = Integer::from(disc);
    let four_n = |p: &Integer, q: &Integer| -> Integer {
        // 4 N(p - q omega') = (2p - qs)^2 - disc q^2.
        let x = Integer::from(p * 2) - Integer::from(q * s);
        Integer::from(&x * &x) - Integer::from(q * q) * disc
    };
    for _ in 0..100_000 {
        let a = Integer::from(&pp + &r).div_rem_floor(qq.clone()).0;
        let p2 = Integer::from(&a * &p1) + &p0;
        let q2 = Integer::from(&a * &q1) + &q0;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let n4 = four_n(&p1, &q1);
        if n4 == 4 || n4 == -4 {
            let x = Integer::from(&p1 * 2) - Integer::from(&q1 * s);
            return Ok(QuadUnit { x, y: q1, disc, norm: if n4 == 4 { 1 } else { -1 } });
        }
        // Next complete quotient.
        let np = Integer::from(&a * &qq) - &pp;
        let nq = (Integer::from(&dd - Integer::from(&np * &np))) / &qq;
        pp = np;
        qq = nq;
    }
    Err(Error::InternalInconsistency(format!("no unit found for discriminant {disc}")))
}

fn isqrt_i64(n: i64) -> i64 {
    Integer::from(n).sqrt().to_i64().expect("fits")
}

/// Narrow class number of primitive indefinite forms of a non-square
/// discriminant `disc > 0`, by counting cycles of reduced forms.
pub fn narrow_class_number(disc: i64) -> Result<u64> {
    if disc <= 1 || !matches!(disc.rem_euclid(4), 0 | 1) {
        return Err(Error::BadDiscriminant(disc, "need a positive non-square discriminant".into()));
    }
    let r = isqrt_i64(disc);
    if r * r == disc {
        return Err(Error::BadDiscriminant(disc, "square discriminant".into()));
    }
    let gcd3 = |a: i64, b: i64, c: i64| {
        let g = Integer::from(a).gcd(&Integer::from(b)).gcd(&Integer::from(c));
        g.to_i64().unwrap()
    };
    // Reduced: 0 < b < sqrt(D) and sqrt(D) - b < 2|a| < sqrt(D) + b.
    let is_red = |a: i64, b: i64| -> bool {
        if b <= 0 || b > r {
            return false;
        }
        let t = 2 * a.abs();
        let lo = (t + b) * (t + b) > disc;
        let hi = t - b < 0 || (t - b) * (t - b) < disc;
        lo && hi
    };
    let mut reduced: Vec<(i64, i64, i64)> = Vec::new();
    for b in 1..=r {
        if (b - disc).rem_euclid(2) != 0 {
            continue;
        }
        let ac = (b * b - disc) / 4;
        let m = ac.abs();
        for a0 in 1..=m {
            if m % a0 != 0 {
                continue;
            }
            for a in [a0, -a0] {
                let c = ac / a;
                if is_red(a, b) && gcd3(a, b, c) == 1 {
                    reduced.push((a, b, c));
                }
            }
        }
    }
    reduced.sort();
    let rho = |(_a, b, c): (i64, i64, i64)| -> (i64, i64, i64) {
        let m = 2 * c.abs();
        let nb = r - (r + b).rem_euclid(m);
        let na = c;
        let nc = (nb * nb - disc) / (4 * c);
        (na, nb, nc)
    };
    let mut seen = std::collections::BTreeSet::new();
    let mut cycles = 0u64;
    for &f in &reduced {
        if seen.contains(&f) {
            continue;
        }
        cycles += 1;
        let mut g = f;
        loop {
            if !seen.insert(g) {
                break;
            }
            g = rho(g);
            if !is_red(g.0, g.1) {
                return Err(Error::InternalInconsistency(format!("reduction cycle left the reduced set at {g:?}")));
            }
        }
        if g != f {
            return Err(Error::InternalInconsistency(format!("reduction cycle of {f:?} is not closed")));
        }
    }
    Ok(cycles)
}

/// Wide class number from the narrow one and the norm of the fundamental unit.
pub fn wide_class_number(disc: i64) -> Result<u64> {
    let hp = narrow_class_number(disc)?;
    let eps = fundamental_unit(disc)?;
    Ok(if eps.norm == -1 { hp } else { hp / 2 })
}

/// `L_D(1)` by every available method; methods must agree within radii.
pub fn dirichlet_l1(d: i64, ctx: &PrecisionCtx) -> Result<LValueResult> {
    if d == 1 || !is_fundamental_discriminant(d) {
        return Err(Error::BadDiscriminant(d, "need a non-trivial fundamental discriminant".into()));
    }
    let prec = ctx.bits();
    let mut per = BTreeMap::new();
    if d < 0 {
        let h = class_number(d)?;
        let w = unit_count(d);
        let sq = RealBall::from_int(prec, -d).sqrt()?;
        let cf = RealBall::pi(prec).mul_int(2 * h as i64).div_int(w as i64).div(&sq)?;
        per.insert("closed_form".to_string(), cf);
        per.insert("character_sum".to_string(), l1_character_sum_negative(d, prec));
    } else {
        let h = wide_class_number(d)?;
        let eps = fundamental_unit(d)?;
        let sq = RealBall::from_int(prec, d).sqrt()?;
        let cf = eps.log(prec)?.mul_int(2 * h as i64).div(&sq)?;
        per.insert("closed_form".to_string(), cf);
        per.insert("character_log_sum".to_string(), l1_log_sine_sum(d, prec)?);
    }
    per.insert("direct_series".to_string(), l1_direct_series(d, prec)?);
    agree_all(&per, &format!("L({d}, 1)"))?;
    let value = tightest(&per);
    let limit = mag_pow2(-(((ctx.digits.saturating_sub(10)) as f64) * std::f64::consts::LOG2_10) as i32);
    if value.rad() > &limit {
        return Err(Error::PrecisionLoss(format!("L({d}, 1) radius {} exceeds the tolerance", value.rad_string())));
    }
    Ok(LValueResult { value, per_method: per })
}

/// The regulator product `h log eps` under several class-number/unit conventions.
#[derive(Clone, Debug)]
pub struct RegulatorReport {
    pub disc: i64,
    pub unit: QuadUnit,
    pub narrow_class_number: u64,
    pub wide_class_number: u64,
    /// `h log eps` (wide class number, fundamental unit).
    pub wide: RealBall,
    /// `h+ log eps` (narrow class number, fundamental unit).
    pub narrow_ordinary_unit: RealBall,
    /// `h+ log eps+` (narrow class number, totally positive fundamental unit).
    pub narrow_totally_positive_unit: RealBall,
    /// `sqrt(disc) L_disc(1) / 2`, from the log-sine character sum.
    pub character_sum: RealBall,
    /// The factor in {1, 2} relating `narrow_ordinary_unit` to `character_sum`.
    pub convention_factor: u64,
}

/// `h(disc) log eps_disc` computed from the class number formula and, independently,
/// from the continued-fraction unit and the counted class number.
pub fn regulator_product(disc: i64, ctx: &PrecisionCtx) -> Result<RegulatorReport> {
    if disc <= 1 || !is_fundamental_discriminant(disc) {
        return Err(Error::BadDiscriminant(disc, "need a fundamental discriminant > 1".into()));
    }
    let prec = ctx.bits();
    let unit = fundamental_unit(disc)?;
    let hp = narrow_class_number(disc)?;
    let h = if unit.norm == -1 { hp } else { hp / 2 };
    let log_eps = unit.log(prec)?;
    let log_eps_plus = if unit.norm == 1 { log_eps.clone() } else { log_eps.mul_int(2) };
    let sq = RealBall::from_int(prec, disc).sqrt()?;
    let character_sum = l1_log_sine_sum(disc, prec)?.mul(&sq).div_int(2);
    let wide = log_eps.mul_int(h as i64);
    let narrow_ordinary_unit = log_eps.mul_int(hp as i64);
    let narrow_totally_positive_unit = log_eps_plus.mul_int(hp as i64);
    let convention_factor = if character_sum.overlaps(&narrow_ordinary_unit) {
        1
    } else if character_sum.mul_int(2).overlaps(&narrow_ordinary_unit) {
        2
    } else {
        return Err(Error::MethodDisagreement(format!(
            "regulator for {disc}: class number formula gives {character_sum}, units give {narrow_ordinary_unit}"
        )));
    };
    if !character_sum.overlaps(&wide) {
        return Err(Error::MethodDisagreement(format!(
            "regulator for {disc}: class number formula {character_sum} vs h log eps {wide}"
        )));
    }
    Ok(RegulatorReport {
        disc,
        unit,
        narrow_class_number: hp,
        wide_class_number: h,
        wide,
        narrow_ordinary_unit,
        narrow_totally_positive_unit,
        character_sum,
        convention_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_symbol(5, 3), -1);
        assert_eq!(kronecker_symbol(-4, 3), -1);
        assert_eq!(kronecker_symbol(-3, 2), -1);
        assert_eq!(kronecker_symbol(-4, 2), 0);
        assert_eq!(kronecker_symbol(17, 1), 1);
        assert_eq!(kronecker_symbol(-1, -1), -1);
    }

    #[test]
    fn decompositions() {
        assert_eq!(discriminant_decompose(-36).unwrap(), (-4, 3));
        assert_eq!(discriminant_decompose(-4).unwrap(), (-4, 1));
        assert_eq!(discriminant_decompose(-60).unwrap(), (-15, 2));
    }

    #[test]
    fn units() {
        let e5 = fundamental_unit(5).unwrap();
        assert_eq!((e5.x.to_i64(), e5.y.to_i64(), e5.norm), (Some(1), Some(1), -1));
        let e8 = fundamental_unit(8).unwrap();
        assert_eq!((e8.x.to_i64(), e8.y.to_i64(), e8.norm), (Some(2), Some(1), -1));
        let e12 = fundamental_unit(12).unwrap();
        assert_eq!((e12.x.to_i64(), e12.y.to_i64(), e12.norm), (Some(4), Some(1), 1));
    }

    #[test]
    fn narrow_class_numbers() {
        assert_eq!(narrow_class_number(5).unwrap(), 1);
        assert_eq!(narrow_class_number(12).unwrap(), 2);
        assert_eq!(wide_class_number(12).unwrap(), 1);
        assert_eq!(narrow_class_number(60).unwrap(), 4);
    }
}
