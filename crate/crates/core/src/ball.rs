//! Midpoint-radius real and complex balls.
//!
//! Midpoints are MPFR/MPC values at the working precision; radii are 64-bit
//! MPFR values that are always rounded upward, so every ball is a rigorous
//! enclosure of the exact value of the computation that produced it.

use std::cmp::Ordering;
use std::fmt;

use rug::float::{Constant, Round};
use rug::ops::{AssignRound, PowAssignRound};
use rug::{Complex, Float, Integer, Rational};

use crate::error::{Error, Result};

/// Precision of radius arithmetic.
pub const MAG_PREC: u32 = 64;

fn up<T>(v: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(MAG_PREC, v, Round::Up).0
}

fn down<T>(v: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(MAG_PREC, v, Round::Down).0
}

fn mag_zero() -> Float {
    Float::new(MAG_PREC)
}

fn mag_add(a: &Float, b: &Float) -> Float {
    up(a + b)
}

fn mag_mul(a: &Float, b: &Float) -> Float {
    up(a * b)
}

/// Upper bound for the rounding error of a value produced by a correctly
/// rounded operation with the given ternary result.
fn rounding_err(v: &Float, ord: Ordering) -> Float {
    if ord == Ordering::Equal || v.is_zero() {
        return mag_zero();
    }
    // One ulp of v is at most 2^(exp - prec).
    let e = v.get_exp().unwrap_or(0);
    let mut m = Float::with_val(MAG_PREC, 1u32);
    m <<= e - v.prec() as i32;
    m
}

/// Decimal precision policy for numerical evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecisionCtx {
    pub digits: u32,
    pub guard: u32,
    pub max_terms: usize,
}

impl PrecisionCtx {
    pub fn new(digits: u32) -> Self {
        PrecisionCtx { digits: digits.max(20), guard: 20, max_terms: 100_000 }
    }

    /// Working precision in bits, including guard digits.
    pub fn bits(&self) -> u32 {
        ((self.digits + self.guard) as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 16
    }

    /// Absolute tolerance targeted for truncation tails, as a power of two.
    pub fn tail_exponent(&self) -> i32 {
        -((self.bits() + 8) as i32)
    }

    pub fn with_digits(&self, digits: u32) -> Self {
        PrecisionCtx { digits: digits.max(20), ..self.clone() }
    }
}

impl Default for PrecisionCtx {
    fn default() -> Self {
        PrecisionCtx::new(50)
    }
}

/// A real interval `[mid - rad, mid + rad]`.
#[derive(Clone, Debug)]
pub struct RealBall {
    mid: Float,
    rad: Float,
}

impl RealBall {
    pub fn new(mid: Float, rad: Float) -> Self {
        RealBall { mid, rad: up(&rad) }
    }

    pub fn zero(prec: u32) -> Self {
        RealBall { mid: Float::new(prec), rad: mag_zero() }
    }

    pub fn from_int<T: Into<Integer>>(prec: u32, v: T) -> Self {
        let v: Integer = v.into();
        let (mid, ord) = Float::with_val_round(prec, &v, Round::Nearest);
        let rad = rounding_err(&mid, ord);
        RealBall { mid, rad }
    }

    pub fn from_rational(prec: u32, v: &Rational) -> Self {
        let (mid, ord) = Float::with_val_round(prec, v, Round::Nearest);
        let rad = rounding_err(&mid, ord);
        RealBall { mid, rad }
    }

    pub fn from_f64(prec: u32, v: f64) -> Self {
        RealBall { mid: Float::with_val(prec.max(53), v), rad: mag_zero() }
    }

    /// Parses a decimal string; the ball encloses the exact decimal value.
    pub fn parse_decimal(prec: u32, s: &str) -> Result<Self> {
        let parsed = Float::parse(s.trim()).map_err(|e| Error::Parse(format!("{s}: {e}")))?;
        let (mid, ord) = Float::with_val_round(prec, parsed, Round::Nearest);
        let rad = rounding_err(&mid, ord);
        Ok(RealBall { mid, rad })
    }

    pub fn pi(prec: u32) -> Self {
        let (mid, ord) = Float::with_val_round(prec, Constant::Pi, Round::Nearest);
        let rad = rounding_err(&mid, ord);
        RealBall { mid, rad }
    }

    pub fn mid(&self) -> &Float {
        &self.mid
    }

    pub fn rad(&self) -> &Float {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.mid.prec()
    }

    pub fn set_prec(&self, prec: u32) -> Self {
        let (mid, ord) = Float::with_val_round(prec, &self.mid, Round::Nearest);
        let rad = mag_add(&self.rad, &rounding_err(&mid, ord));
        RealBall { mid, rad }
    }

    pub fn add_error(&self, err: &Float) -> Self {
        RealBall { mid: self.mid.clone(), rad: mag_add(&self.rad, err) }
    }

    fn prec2(&self, other: &RealBall) -> u32 {
        self.prec().max(other.prec())
    }

    pub fn add(&self, other: &RealBall) -> RealBall {
        let (mid, ord) = Float::with_val_round(self.prec2(other), &self.mid + &other.mid, Round::Nearest);
        let rad = mag_add(&mag_add(&self.rad, &other.rad), &rounding_err(&mid, ord));
        RealBall { mid, rad }
    }

    pub fn sub(&self, other: &RealBall) -> RealBall {
        let (mid, ord) = Float::with_val_round(self.prec2(other), &self.mid - &other.mid, Round::Nearest);
        let rad = mag_add(&mag_add(&self.rad, &other.rad), &rounding_err(&mid, ord));
        RealBall { mid, rad }
    }

    pub fn neg(&self) -> RealBall {
        RealBall { mid: Float::with_val(self.prec(), -&self.mid), rad: self.rad.clone() }
    }

    pub fn mul(&self, other: &RealBall) -> RealBall {
        let (mid, ord) = Float::with_val_round(self.prec2(other), &self.mid * &other.mid, Round::Nearest);
        let a = mag_mul(&up(&*self.mid.as_abs()), &other.rad);
        let b = mag_mul(&up(&*other.mid.as_abs()), &self.rad);
        let c = mag_mul(&self.rad, &other.rad);
        let rad = mag_add(&mag_add(&a, &b), &mag_add(&c, &rounding_err(&mid, ord)));
        RealBall { mid, rad }
    }

    pub fn sqr(&self) -> RealBall {
        self.mul(self)
    }

    pub fn mul_int(&self, k: i64) -> RealBall {
        let (mid, ord) = Float::with_val_round(self.prec(), &self.mid * k, Round::Nearest);
        let rad = mag_add(&up(&self.rad * k.unsigned_abs()), &rounding_err(&mid, ord));
        RealBall { mid, rad }
    }

    pub fn mul_rational(&self, r: &Rational) -> RealBall {
        self.mul(&RealBall::from_rational(self.prec(), r))
    }

    pub fn div_int(&self, k: i64) -> RealBall {
        assert!(k != 0, "division by zero");
        let (mid, ord) = Float::with_val_round(self.prec(), &self.mid / k, Round::Nearest);
        let rad = mag_add(&up(&self.rad / k.unsigned_abs()), &rounding_err(&mid, ord));
        RealBall { mid, rad }
    }

    /// Lower bound of `|x|` over the ball (zero if the ball contains zero).
    pub fn abs_lower(&self) -> Float {
        let l = down(&*self.mid.as_abs() - &self.rad);
        if l.is_sign_negative() {
            mag_zero()
        } else {
            l
        }
    }

    /// Upper bound of `|x|` over the ball.
    pub fn abs_upper(&self) -> Float {
        up(&*self.mid.as_abs() + &self.rad)
    }

    pub fn inv(&self) -> Result<RealBall> {
        let l = self.abs_lower();
        if l.is_zero() {
            return Err(Error::PrecisionLoss("inverting a real ball that contains zero".into()));
        }
        let (mid, ord) = Float::with_val_round(self.prec(), self.mid.recip_ref(), Round::Nearest);
        let denom = down(down(&*self.mid.as_abs()) * &l);
        let rad = mag_add(&up(&self.rad / &denom), &rounding_err(&mid, ord));
        Ok(RealBall { mid, rad })
    }

    pub fn div(&self, other: &RealBall) -> Result<RealBall> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn abs(&self) -> RealBall {
        RealBall { mid: self.mid.clone().abs(), rad: self.rad.clone() }
    }

    pub fn sqrt(&self) -> Result<RealBall> {
        let lower = down(&self.mid - &self.rad);
        if lower.is_sign_negative() && !lower.is_zero() {
            return Err(Error::PrecisionLoss("square root of a ball reaching negative values".into()));
        }
        let (mid, ord) = Float::with_val_round(self.prec(), self.mid.sqrt_ref(), Round::Nearest);
        let prop = if self.rad.is_zero() {
            mag_zero()
        } else if lower.is_zero() {
            up(up(&self.mid + &self.rad).sqrt())
        } else {
            up(&self.rad / &down(lower.sqrt()))
        };
        let rad = mag_add(&prop, &rounding_err(&mid, ord));
        Ok(RealBall { mid, rad })
    }

    pub fn ln(&self) -> Result<RealBall> {
        let lower = down(&self.mid - &self.rad);
        if lower.is_sign_negative() || lower.is_zero() {
            return Err(Error::PrecisionLoss("logarithm of a ball reaching non-positive values".into()));
        }
        let (mid, ord) = Float::with_val_round(self.prec(), self.mid.ln_ref(), Round::Nearest);
        let rad = mag_add(&up(&self.rad / &lower), &rounding_err(&mid, ord));
        Ok(RealBall { mid, rad })
    }

    pub fn exp(&self) -> RealBall {
        let (mid, ord) = Float::with_val_round(self.prec(), self.mid.exp_ref(), Round::Nearest);
        let mut e_up = up(&self.mid);
        e_up.exp_round(Round::Up);
        let m1 = {
            let mut r = self.rad.clone();
            r.exp_m1_round(Round::Up);
            r
        };
        let rad = mag_add(&mag_mul(&e_up, &m1), &rounding_err(&mid, ord));
        RealBall { mid, rad }
    }

    pub fn sin(&self) -> RealBall {
        let (mid, ord) = Float::with_val_round(self.prec(), self.mid.sin_ref(), Round::Nearest);
        let rad = mag_add(&self.rad, &rounding_err(&mid, ord));
        RealBall { mid, rad }
    }

    pub fn cos(&self) -> RealBall {
        let (mid, ord) = Float::with_val_round(self.prec(), self.mid.cos_ref(), Round::Nearest);
        let rad = mag_add(&self.rad, &rounding_err(&mid, ord));
        RealBall { mid, rad }
    }

    pub fn pow_u(&self, n: u32) -> RealBall {
        let mut result = RealBall::from_int(self.prec(), 1);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.sqr();
            }
        }
        result
    }

    pub fn contains_zero(&self) -> bool {
        *self.mid.as_abs() <= self.rad
    }

    /// True when the two balls intersect.
    pub fn overlaps(&self, other: &RealBall) -> bool {
        let diff = up(Float::with_val(self.prec2(other), &self.mid - &other.mid).abs());
        diff <= mag_add(&self.rad, &other.rad)
    }

    /// True when `other` lies inside this ball.
    pub fn contains_rational(&self, v: &Rational) -> bool {
        let x = RealBall::from_rational(self.prec(), v);
        let diff = up(Float::with_val(self.prec(), &self.mid - &x.mid).abs());
        diff <= mag_add(&self.rad, &x.rad)
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    pub fn rad_f64(&self) -> f64 {
        self.rad.to_f64_round(Round::Up)
    }

    /// Midpoint rendered with `digits` significant decimal digits.
    pub fn mid_string(&self, digits: usize) -> String {
        format_float(&self.mid, digits)
    }

    pub fn rad_string(&self) -> String {
        format_float(&self.rad, 6)
    }
}

impl fmt::Display for RealBall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = ((self.prec() as f64) / std::f64::consts::LOG2_10) as usize;
        write!(f, "{} +/- {}", self.mid_string(digits.max(10)), self.rad_string())
    }
}

/// Formats a float in scientific notation with the given number of digits.
pub fn format_float(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".into();
    }
    x.to_string_radix(10, Some(digits.max(1)))
}

/// A complex disk with center `mid` and radius `rad`.
#[derive(Clone, Debug)]
pub struct ComplexBall {
    mid: Complex,
    rad: Float,
}

fn complex_err(z: &Complex, ord: (Ordering, Ordering)) -> Float {
    mag_add(&rounding_err(z.real(), ord.0), &rounding_err(z.imag(), ord.1))
}

const RN2: (Round, Round) = (Round::Nearest, Round::Nearest);

impl ComplexBall {
    pub fn new(mid: Complex, rad: Float) -> Self {
        ComplexBall { mid, rad: up(&rad) }
    }

    pub fn zero(prec: u32) -> Self {
        ComplexBall { mid: Complex::new(prec), rad: mag_zero() }
    }

    pub fn one(prec: u32) -> Self {
        ComplexBall::from_int(prec, 1)
    }

    pub fn from_int<T: Into<Integer>>(prec: u32, v: T) -> Self {
        ComplexBall::from_real(&RealBall::from_int(prec, v))
    }

    pub fn from_rational(prec: u32, v: &Rational) -> Self {
        ComplexBall::from_real(&RealBall::from_rational(prec, v))
    }

    pub fn from_real(r: &RealBall) -> Self {
        let mut mid = Complex::new(r.prec());
        mid.mut_real().assign_round(&r.mid, Round::Nearest);
        ComplexBall { mid, rad: r.rad.clone() }
    }

    pub fn from_parts(re: &RealBall, im: &RealBall) -> Self {
        let prec = re.prec().max(im.prec());
        let mid = Complex::with_val(prec, (&re.mid, &im.mid));
        ComplexBall { mid, rad: mag_add(&re.rad, &im.rad) }
    }

    /// The imaginary unit.
    pub fn i(prec: u32) -> Self {
        ComplexBall { mid: Complex::with_val(prec, (0, 1)), rad: mag_zero() }
    }

    pub fn mid(&self) -> &Complex {
        &self.mid
    }

    pub fn rad(&self) -> &Float {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.mid.prec().0
    }

    pub fn set_prec(&self, prec: u32) -> Self {
        let (mid, ord) = Complex::with_val_round(prec, &self.mid, RN2);
        let rad = mag_add(&self.rad, &complex_err(&mid, ord));
        ComplexBall { mid, rad }
    }

    pub fn add_error(&self, err: &Float) -> Self {
        ComplexBall { mid: self.mid.clone(), rad: mag_add(&self.rad, err) }
    }

    fn prec2(&self, other: &ComplexBall) -> u32 {
        self.prec().max(other.prec())
    }

    /// Real part as a real ball (radius is inherited from the disk).
    pub fn re(&self) -> RealBall {
        RealBall { mid: self.mid.real().clone(), rad: self.rad.clone() }
    }

    pub fn im(&self) -> RealBall {
        RealBall { mid: self.mid.imag().clone(), rad: self.rad.clone() }
    }

    pub fn add(&self, other: &ComplexBall) -> ComplexBall {
        let (mid, ord) = Complex::with_val_round(self.prec2(other), &self.mid + &other.mid, RN2);
        let rad = mag_add(&mag_add(&self.rad, &other.rad), &complex_err(&mid, ord));
        ComplexBall { mid, rad }
    }

    pub fn sub(&self, other: &ComplexBall) -> ComplexBall {
        let (mid, ord) = Complex::with_val_round(self.prec2(other), &self.mid - &other.mid, RN2);
        let rad = mag_add(&mag_add(&self.rad, &other.rad), &complex_err(&mid, ord));
        ComplexBall { mid, rad }
    }

    pub fn neg(&self) -> ComplexBall {
        ComplexBall { mid: Complex::with_val(self.prec(), -&self.mid), rad: self.rad.clone() }
    }

    pub fn conj(&self) -> ComplexBall {
        ComplexBall { mid: self.mid.clone().conj(), rad: self.rad.clone() }
    }

    /// Upper bound of `|z|` at the midpoint.
    fn mid_abs_up(&self) -> Float {
        up(self.mid.abs_ref())
    }

    /// Upper bound of `|z|` over the disk.
    pub fn abs_upper(&self) -> Float {
        mag_add(&self.mid_abs_up(), &self.rad)
    }

    /// Lower bound of `|z|` over the disk (zero when the disk contains 0).
    pub fn abs_lower(&self) -> Float {
        let m = down(self.mid.abs_ref());
        let l = down(m - &self.rad);
        if l.is_sign_negative() {
            mag_zero()
        } else {
            l
        }
    }

    pub fn mul(&self, other: &ComplexBall) -> ComplexBall {
        let (mid, ord) = Complex::with_val_round(self.prec2(other), &self.mid * &other.mid, RN2);
        let a = mag_mul(&self.mid_abs_up(), &other.rad);
        let b = mag_mul(&other.mid_abs_up(), &self.rad);
        let c = mag_mul(&self.rad, &other.rad);
        let rad = mag_add(&mag_add(&a, &b), &mag_add(&c, &complex_err(&mid, ord)));
        ComplexBall { mid, rad }
    }

    pub fn sqr(&self) -> ComplexBall {
        self.mul(self)
    }

    pub fn mul_real(&self, r: &RealBall) -> ComplexBall {
        self.mul(&ComplexBall::from_real(r))
    }

    pub fn mul_int(&self, k: i64) -> ComplexBall {
        let (mid, ord) = Complex::with_val_round(self.prec(), &self.mid * k, RN2);
        let rad = mag_add(&up(&self.rad * k.unsigned_abs()), &complex_err(&mid, ord));
        ComplexBall { mid, rad }
    }

    pub fn mul_integer(&self, k: &Integer) -> ComplexBall {
        self.mul(&ComplexBall::from_int(self.prec(), k.clone()))
    }

    pub fn mul_rational(&self, r: &Rational) -> ComplexBall {
        if r.denom() == &1 {
            if let Some(k) = r.numer().to_i64() {
                return self.mul_int(k);
            }
        }
        self.mul(&ComplexBall::from_rational(self.prec(), r))
    }

    pub fn div_int(&self, k: i64) -> ComplexBall {
        assert!(k != 0, "division by zero");
        let (mid, ord) = Complex::with_val_round(self.prec(), &self.mid / k, RN2);
        let rad = mag_add(&up(&self.rad / k.unsigned_abs()), &complex_err(&mid, ord));
        ComplexBall { mid, rad }
    }

    pub fn inv(&self) -> Result<ComplexBall> {
        let l = self.abs_lower();
        if l.is_zero() {
            return Err(Error::PrecisionLoss("inverting a complex ball that contains zero".into()));
        }
        let (mid, ord) = Complex::with_val_round(self.prec(), self.mid.recip_ref(), RN2);
        let denom = down(down(self.mid.abs_ref()) * &l);
        let rad = mag_add(&up(&self.rad / &denom), &complex_err(&mid, ord));
        Ok(ComplexBall { mid, rad })
    }

    pub fn div(&self, other: &ComplexBall) -> Result<ComplexBall> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn exp(&self) -> ComplexBall {
        let (mid, ord) = Complex::with_val_round(self.prec(), self.mid.exp_ref(), RN2);
        let e = mag_add(&self.mid_abs_from(&mid), &complex_err(&mid, ord));
        let mut m1 = self.rad.clone();
        m1.exp_m1_round(Round::Up);
        let rad = mag_add(&mag_mul(&e, &m1), &complex_err(&mid, ord));
        ComplexBall { mid, rad }
    }

    fn mid_abs_from(&self, z: &Complex) -> Float {
        up(z.abs_ref())
    }

    /// Principal logarithm; fails when the disk meets the branch cut or 0.
    pub fn ln(&self) -> Result<ComplexBall> {
        let l = self.abs_lower();
        if l.is_zero() {
            return Err(Error::PrecisionLoss("logarithm of a disk containing zero".into()));
        }
        if self.mid.real().is_sign_negative() && *self.mid.imag().as_abs() <= self.rad {
            return Err(Error::PrecisionLoss("logarithm of a disk meeting the branch cut".into()));
        }
        let (mid, ord) = Complex::with_val_round(self.prec(), self.mid.ln_ref(), RN2);
        let rad = mag_add(&up(&self.rad / &l), &complex_err(&mid, ord));
        Ok(ComplexBall { mid, rad })
    }

    /// `z^e` for a rational exponent via the principal logarithm; integral
    /// exponents use repeated multiplication.
    pub fn pow_rational(&self, e: &Rational) -> Result<ComplexBall> {
        if e.denom() == &1 {
            let n = e.numer().to_i64().ok_or_else(|| Error::InvalidArgument("exponent too large".into()))?;
            let p = self.pow_u(n.unsigned_abs() as u32);
            return if n < 0 { p.inv() } else { Ok(p) };
        }
        Ok(self.ln()?.mul_rational(e).exp())
    }

    pub fn pow_u(&self, n: u32) -> ComplexBall {
        let mut result = ComplexBall::one(self.prec());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.sqr();
            }
        }
        result
    }

    /// `|z|` as a real ball.
    pub fn abs(&self) -> RealBall {
        let (mid, ord) = Float::with_val_round(self.prec(), self.mid.abs_ref(), Round::Nearest);
        let rad = mag_add(&self.rad, &rounding_err(&mid, ord));
        RealBall { mid, rad }
    }

    /// `exp(2 pi i z)`.
    pub fn exp_2pi_i(&self) -> ComplexBall {
        let two_pi = RealBall::pi(self.prec()).mul_int(2);
        self.mul(&ComplexBall::i(self.prec())).mul_real(&two_pi).exp()
    }

    pub fn contains_zero(&self) -> bool {
        self.abs_lower().is_zero()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.mid.real().is_zero() && self.mid.imag().is_zero() && self.rad.is_zero()
    }

    pub fn overlaps(&self, other: &ComplexBall) -> bool {
        self.sub(other).contains_zero()
    }

    pub fn rad_f64(&self) -> f64 {
        self.rad.to_f64_round(Round::Up)
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.mid.real().to_f64(), self.mid.imag().to_f64())
    }
}

impl fmt::Display for ComplexBall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = (((self.prec() as f64) / std::f64::consts::LOG2_10) as usize).max(10);
        write!(
            f,
            "({}, {}) +/- {}",
            format_float(self.mid.real(), digits),
            format_float(self.mid.imag(), digits),
            format_float(&self.rad, 6)
        )
    }
}

/// Upper bound for `sum_{n > big_n} c * n^k * x^n`, valid when the ratio of
/// consecutive terms past `big_n` is below 1. Returns `None` otherwise.
pub fn poly_geometric_tail(x_up: &Float, big_n: u64, k: u32, c: f64) -> Option<Float> {
    let n1 = big_n + 1;
    let ratio_poly = up(Float::with_val(MAG_PREC, n1 + 1) / Float::with_val(MAG_PREC, n1));
    let ratio = mag_mul(&pow_up(&ratio_poly, k as u64), x_up);
    if ratio >= 1u32 {
        return None;
    }
    let first = mag_mul(
        &mag_mul(&up(c), &pow_up(&Float::with_val(MAG_PREC, n1), k as u64)),
        &pow_up(x_up, n1),
    );
    let denom = down(Float::with_val(MAG_PREC, 1u32) - &ratio);
    Some(up(first / denom))
}

/// `x^n` rounded upward, for non-negative `x`.
pub fn pow_up(x: &Float, n: u64) -> Float {
    let mut t = up(x);
    t.pow_assign_round(n, Round::Up);
    t
}

/// A power of two as a radius, `2^e`.
pub fn mag_pow2(e: i32) -> Float {
    let mut m = Float::with_val(MAG_PREC, 1u32);
    m <<= e;
    m
}

/// Converts a radius to a power-of-two exponent estimate (log2), or `i64::MIN`
/// for zero.
pub fn mag_log2(x: &Float) -> i64 {
    if x.is_zero() {
        i64::MIN
    } else {
        x.get_exp().unwrap_or(0) as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_ball_contains_pi() {
        let pi = RealBall::pi(200);
        let s = pi.mid_string(30);
        assert!(s.starts_with("3.14159265358979323846264338"), "{s}");
        assert!(pi.rad_f64() < 1e-55);
    }

    #[test]
    fn inverse_of_near_zero_fails() {
        let b = RealBall::new(Float::with_val(64, 1e-3), Float::with_val(64, 1e-2));
        assert!(b.inv().is_err());
    }

    #[test]
    fn exp_ln_roundtrip_encloses() {
        let x = RealBall::from_rational(256, &Rational::from((7, 3)));
        let y = x.ln().unwrap().exp();
        assert!(y.overlaps(&x));
        assert!(y.rad_f64() < 1e-70);
    }

    #[test]
    fn complex_mul_radius_covers_perturbation() {
        let a = ComplexBall::new(Complex::with_val(128, (1.5, -0.25)), Float::with_val(64, 1e-10));
        let b = ComplexBall::new(Complex::with_val(128, (0.5, 2.0)), Float::with_val(64, 1e-10));
        let c = a.mul(&b);
        let a2 = ComplexBall::from_parts(
            &RealBall::from_f64(128, 1.5 + 0.7e-10),
            &RealBall::from_f64(128, -0.25),
        );
        let b2 = ComplexBall::from_parts(&RealBall::from_f64(128, 0.5), &RealBall::from_f64(128, 2.0 - 0.7e-10));
        assert!(c.overlaps(&a2.mul(&b2)));
    }

    #[test]
    fn tail_bound_for_geometric_series() {
        let x = Float::with_val(MAG_PREC, 0.5);
        let t = poly_geometric_tail(&x, 10, 0, 1.0).unwrap();
        // Exact tail is 2^-10.
        assert!(t >= Float::with_val(64, 2f64.powi(-10)));
        assert!(t <= Float::with_val(64, 2f64.powi(-9)));
    }
}
