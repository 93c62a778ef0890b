//! Coefficient domains for q-series.
//!
//! A [`Coeff`] is a commutative ring element with enough structure for
//! truncated power-series arithmetic. Four domains are provided: exact
//! rationals, polynomials over the rationals in a formal variable `L`,
//! cyclotomic fields, and complex balls.

use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};
use std::collections::HashMap;

use rug::{Complex, Float, Integer, Rational};

use crate::ball::{ComplexBall, RealBall};
use crate::error::{Error, Result};

/// Ring operations needed by [`crate::series::QSeries`].
pub trait Coeff: Clone + fmt::Debug + Send + Sync + Sized + 'static {
    /// Runtime parameters of the domain (cyclotomic level, ball precision).
    type Ctx: Clone + fmt::Debug + PartialEq + Send + Sync;

    fn ctx(&self) -> Self::Ctx;
    fn domain_name(ctx: &Self::Ctx) -> String;
    fn zero(ctx: &Self::Ctx) -> Self;
    fn one(ctx: &Self::Ctx) -> Self;
    fn from_rational(ctx: &Self::Ctx, r: &Rational) -> Self;
    fn from_int(ctx: &Self::Ctx, k: i64) -> Self {
        Self::from_rational(ctx, &Rational::from(k))
    }
    /// Exact zero test (for balls: midpoint and radius both zero).
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn mul_rational(&self, r: &Rational) -> Self {
        self.mul(&Self::from_rational(&self.ctx(), r))
    }
    fn mul_int(&self, k: i64) -> Self {
        self.mul_rational(&Rational::from(k))
    }
    /// Multiplicative inverse, if the element is a unit.
    fn inv(&self) -> Option<Self>;
    /// True when `self` is exactly the rational `r`.
    fn is_rational(&self, r: &Rational) -> bool;
    /// Exact structural equality (balls compare midpoints and radii).
    fn eq_exact(&self, other: &Self) -> bool;
    fn to_json_string(&self) -> String;
    fn parse(_ctx: &Self::Ctx, s: &str) -> Result<Self> {
        Err(Error::Parse(format!("parsing is not supported in this domain: {s}")))
    }

    /// First `n` coefficients of the product of two power series.
    fn convolve(a: &[Self], b: &[Self], n: usize, ctx: &Self::Ctx) -> Vec<Self> {
        let mut out: Vec<Self> = (0..n).map(|_| Self::zero(ctx)).collect();
        for (i, x) in a.iter().enumerate().take(n) {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate().take(n - i) {
                if y.is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].add(&x.mul(y));
            }
        }
        out
    }

    /// First `n` coefficients of `1/b` for a power series with unit constant term.
    fn series_inverse(b: &[Self], n: usize, ctx: &Self::Ctx) -> Option<Vec<Self>> {
        let c0 = b.first()?.inv()?;
        let mut out: Vec<Self> = Vec::with_capacity(n);
        out.push(c0.clone());
        for m in 1..n {
            let mut acc = Self::zero(ctx);
            for k in 1..=m.min(b.len().saturating_sub(1)) {
                if b[k].is_zero() {
                    continue;
                }
                acc = acc.add(&b[k].mul(&out[m - k]));
            }
            out.push(acc.mul(&c0).neg());
        }
        Some(out)
    }
}

// ---------------------------------------------------------------------------
// Exact rationals

fn common_denominator(a: &[Rational]) -> Integer {
    let mut l = Integer::from(1);
    for x in a {
        if x.denom() != &1 {
            l.lcm_mut(x.denom());
        }
    }
    l
}

/// Scales `a` by a common denominator, returning integer numerators and the
/// denominator.
pub fn to_integer_vec(a: &[Rational]) -> (Vec<Integer>, Integer) {
    let l = common_denominator(a);
    let v = a
        .iter()
        .map(|x| {
            if l == 1 {
                x.numer().clone()
            } else {
                Integer::from(x.numer() * Integer::from(&l / x.denom()))
            }
        })
        .collect();
    (v, l)
}

/// Truncated integer convolution `sum_k a[k] b[i-k]` for `i < n`.
pub fn integer_convolve(a: &[Integer], b: &[Integer], n: usize) -> Vec<Integer> {
    let mut out = vec![Integer::new(); n];
    for (i, x) in a.iter().enumerate().take(n) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n - i) {
            if y.is_zero() {
                continue;
            }
            out[i + j] += x * y;
        }
    }
    out
}

impl Coeff for Rational {
    type Ctx = ();

    fn ctx(&self) {}

    fn domain_name(_: &()) -> String {
        "rational".into()
    }

    fn zero(_: &()) -> Self {
        Rational::new()
    }

    fn one(_: &()) -> Self {
        Rational::from(1)
    }

    fn from_rational(_: &(), r: &Rational) -> Self {
        r.clone()
    }

    fn from_int(_: &(), k: i64) -> Self {
        Rational::from(k)
    }

    fn is_zero(&self) -> bool {
        self.cmp0() == std::cmp::Ordering::Equal
    }

    fn add(&self, other: &Self) -> Self {
        Rational::from(self + other)
    }

    fn sub(&self, other: &Self) -> Self {
        Rational::from(self - other)
    }

    fn neg(&self) -> Self {
        Rational::from(-self)
    }

    fn mul(&self, other: &Self) -> Self {
        Rational::from(self * other)
    }

    fn mul_rational(&self, r: &Rational) -> Self {
        Rational::from(self * r)
    }

    fn mul_int(&self, k: i64) -> Self {
        Rational::from(self * k)
    }

    fn inv(&self) -> Option<Self> {
        if Coeff::is_zero(self) {
            None
        } else {
            Some(Rational::from(self.recip_ref()))
        }
    }

    fn is_rational(&self, r: &Rational) -> bool {
        self == r
    }

    fn eq_exact(&self, other: &Self) -> bool {
        self == other
    }

    fn to_json_string(&self) -> String {
        self.to_string()
    }

    fn parse(_: &(), s: &str) -> Result<Self> {
        let t = s.trim();
        Rational::parse(t)
            .map(Rational::from)
            .map_err(|e| Error::Parse(format!("not a rational number: {t} ({e})")))
    }

    fn convolve(a: &[Self], b: &[Self], n: usize, _: &()) -> Vec<Self> {
        let (ai, la) = to_integer_vec(&a[..a.len().min(n)]);
        let (bi, lb) = to_integer_vec(&b[..b.len().min(n)]);
        let prod = integer_convolve(&ai, &bi, n);
        let den = Integer::from(&la * &lb);
        prod.into_iter()
            .map(|x| if den == 1 { Rational::from(x) } else { Rational::from((x, den.clone())) })
            .collect()
    }

    fn series_inverse(b: &[Self], n: usize, ctx: &()) -> Option<Vec<Self>> {
        let b0 = b.first()?;
        let unit = b0 == &1 || b0 == &-1;
        if unit && b.iter().all(|x| x.denom() == &1) {
            let bi: Vec<Integer> = b.iter().map(|x| x.numer().clone()).collect();
            let s = if b0 == &1 { 1 } else { -1 };
            let mut out: Vec<Integer> = Vec::with_capacity(n);
            out.push(Integer::from(s));
            for m in 1..n {
                let mut acc = Integer::new();
                for k in 1..=m.min(bi.len().saturating_sub(1)) {
                    if bi[k].is_zero() {
                        continue;
                    }
                    acc += &bi[k] * &out[m - k];
                }
                if s == 1 {
                    acc = -acc;
                }
                out.push(acc);
            }
            return Some(out.into_iter().map(Rational::from).collect());
        }
        // Generic recurrence.
        let c0 = Coeff::inv(b0)?;
        let mut out: Vec<Rational> = vec![c0.clone()];
        for m in 1..n {
            let mut acc = Rational::new();
            for k in 1..=m.min(b.len().saturating_sub(1)) {
                acc += Rational::from(&b[k] * &out[m - k]);
            }
            out.push(Rational::from(-(acc * &c0)));
        }
        let _ = ctx;
        Some(out)
    }
}

// ---------------------------------------------------------------------------
// Polynomials over Q in a formal variable

/// A polynomial in the formal variable `L` with rational coefficients,
/// stored in ascending degree with trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PolyQ(Vec<Rational>);

impl PolyQ {
    pub fn new(mut c: Vec<Rational>) -> Self {
        while c.last().is_some_and(|x| x.cmp0() == std::cmp::Ordering::Equal) {
            c.pop();
        }
        PolyQ(c)
    }

    pub fn constant(r: Rational) -> Self {
        PolyQ::new(vec![r])
    }

    /// The variable `L`.
    pub fn var() -> Self {
        PolyQ(vec![Rational::new(), Rational::from(1)])
    }

    pub fn from_integers(c: &[Integer]) -> Self {
        PolyQ::new(c.iter().map(|x| Rational::from(x.clone())).collect())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn degree(&self) -> Option<usize> {
        if self.0.is_empty() {
            None
        } else {
            Some(self.0.len() - 1)
        }
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.0.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }
}

impl fmt::Display for PolyQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.0.iter().enumerate().rev() {
            if c.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let neg = c.cmp0() == std::cmp::Ordering::Less;
            let a = Rational::from(c.abs_ref());
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mono = match k {
                0 => String::new(),
                1 => "L".to_string(),
                _ => format!("L^{k}"),
            };
            if k == 0 {
                write!(f, "{a}")?;
            } else if a == 1 {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{a}*{mono}")?;
            }
        }
        Ok(())
    }
}

fn parse_poly(s: &str) -> Result<PolyQ> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut terms: Vec<String> = Vec::new();
    let mut cur = String::new();
    for (i, ch) in t.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('^') {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    let mut coeffs: Vec<Rational> = Vec::new();
    for term in terms {
        let (sign, body) = match term.strip_prefix('-') {
            Some(b) => (-1, b.to_string()),
            None => (1, term.trim_start_matches('+').to_string()),
        };
        let (cpart, deg) = if let Some(pos) = body.find('L') {
            let c = body[..pos].trim_end_matches('*');
            let rest = &body[pos + 1..];
            let deg: usize = if rest.is_empty() {
                1
            } else {
                rest.trim_start_matches('^')
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in {body}")))?
            };
            (if c.is_empty() { "1".to_string() } else { c.to_string() }, deg)
        } else {
            (body.clone(), 0)
        };
        let c = Rational::parse(&cpart)
            .map(Rational::from)
            .map_err(|_| Error::Parse(format!("bad coefficient in {body}")))?;
        if coeffs.len() <= deg {
            coeffs.resize(deg + 1, Rational::new());
        }
        coeffs[deg] += c * sign;
    }
    Ok(PolyQ::new(coeffs))
}

fn poly_add(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) => Rational::from(x + y),
            (Some(x), None) => x.clone(),
            (None, Some(y)) => y.clone(),
            (None, None) => Rational::new(),
        })
        .collect()
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.cmp0() == std::cmp::Ordering::Equal {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Rational::from(x * y);
        }
    }
    out
}

impl Coeff for PolyQ {
    type Ctx = ();

    fn ctx(&self) {}

    fn domain_name(_: &()) -> String {
        "poly_rational".into()
    }

    fn zero(_: &()) -> Self {
        PolyQ(Vec::new())
    }

    fn one(_: &()) -> Self {
        PolyQ(vec![Rational::from(1)])
    }

    fn from_rational(_: &(), r: &Rational) -> Self {
        PolyQ::constant(r.clone())
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn add(&self, other: &Self) -> Self {
        PolyQ::new(poly_add(&self.0, &other.0))
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    fn neg(&self) -> Self {
        PolyQ(self.0.iter().map(|x| Rational::from(-x)).collect())
    }

    fn mul(&self, other: &Self) -> Self {
        PolyQ::new(poly_mul(&self.0, &other.0))
    }

    fn mul_rational(&self, r: &Rational) -> Self {
        PolyQ::new(self.0.iter().map(|x| Rational::from(x * r)).collect())
    }

    fn inv(&self) -> Option<Self> {
        // Units of Q[L] are the non-zero constants.
        if self.0.len() == 1 {
            Some(PolyQ(vec![Rational::from(self.0[0].recip_ref())]))
        } else {
            None
        }
    }

    fn is_rational(&self, r: &Rational) -> bool {
        if r.cmp0() == std::cmp::Ordering::Equal {
            self.0.is_empty()
        } else {
            self.0.len() == 1 && &self.0[0] == r
        }
    }

    fn eq_exact(&self, other: &Self) -> bool {
        self == other
    }

    fn to_json_string(&self) -> String {
        self.to_string()
    }

    fn parse(_: &(), s: &str) -> Result<Self> {
        parse_poly(s)
    }
}

// ---------------------------------------------------------------------------
// Cyclotomic fields

/// The level `n` of a cyclotomic field together with its defining
/// polynomial `Phi_n`.
#[derive(Clone, Debug)]
pub struct CycloCtx {
    n: u32,
    phi: Arc<Vec<Integer>>,
}

impl PartialEq for CycloCtx {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

fn int_poly_divexact(num: &[Integer], den: &[Integer]) -> Vec<Integer> {
    // Both monic; exact division.
    let mut r: Vec<Integer> = num.to_vec();
    let dn = den.len() - 1;
    let qn = num.len() - 1 - dn;
    let mut q = vec![Integer::new(); qn + 1];
    for i in (0..=qn).rev() {
        let t = r[i + dn].clone();
        if t.is_zero() {
            continue;
        }
        for (j, c) in den.iter().enumerate() {
            r[i + j] -= Integer::from(&t * c);
        }
        q[i] = t;
    }
    debug_assert!(r.iter().all(|x| x.is_zero()));
    q
}

/// The `n`-th cyclotomic polynomial, ascending coefficients.
pub fn cyclotomic_polynomial(n: u32) -> Vec<Integer> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<Integer>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&n) {
        return p.as_ref().clone();
    }
    // x^n - 1 divided by Phi_d for every proper divisor d.
    let mut p = vec![Integer::new(); n as usize + 1];
    p[0] = Integer::from(-1);
    p[n as usize] = Integer::from(1);
    for d in 1..n {
        if n % d == 0 {
            let f = cyclotomic_polynomial(d);
            p = int_poly_divexact(&p, &f);
        }
    }
    cache.lock().unwrap().insert(n, Arc::new(p.clone()));
    p
}

impl CycloCtx {
    pub fn new(n: u32) -> Self {
        assert!(n >= 1, "cyclotomic level must be positive");
        CycloCtx { n, phi: Arc::new(cyclotomic_polynomial(n)) }
    }

    pub fn level(&self) -> u32 {
        self.n
    }

    /// Degree of the field, `phi(n)`.
    pub fn degree(&self) -> usize {
        self.phi.len() - 1
    }
}

/// An element of `Q(zeta_n)` written in the power basis `1, zeta, ..., zeta^(deg-1)`.
#[derive(Clone, Debug)]
pub struct Cyclo {
    ctx: CycloCtx,
    c: Vec<Rational>,
}

impl PartialEq for Cyclo {
    fn eq(&self, other: &Self) -> bool {
        self.ctx == other.ctx && self.c == other.c
    }
}

fn trim(mut c: Vec<Rational>) -> Vec<Rational> {
    while c.last().is_some_and(|x| x.cmp0() == std::cmp::Ordering::Equal) {
        c.pop();
    }
    c
}

impl Cyclo {
    fn reduce(ctx: &CycloCtx, mut c: Vec<Rational>) -> Cyclo {
        let deg = ctx.degree();
        if c.len() > deg {
            for i in (deg..c.len()).rev() {
                let t = c[i].clone();
                if t.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                for (j, p) in ctx.phi.iter().enumerate() {
                    c[i - deg + j] -= Rational::from(&t * p);
                }
            }
            c.truncate(deg);
        }
        Cyclo { ctx: ctx.clone(), c: trim(c) }
    }

    /// `zeta_n^k`.
    pub fn zeta_pow(ctx: &CycloCtx, k: i64) -> Cyclo {
        let n = ctx.n as i64;
        let e = k.rem_euclid(n) as usize;
        let mut c = vec![Rational::new(); e + 1];
        c[e] = Rational::from(1);
        Cyclo::reduce(ctx, c)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.c
    }

    /// Image under `zeta -> zeta^-1` (complex conjugation).
    pub fn conj(&self) -> Cyclo {
        let n = self.ctx.n as usize;
        let mut c = vec![Rational::new(); n];
        for (i, x) in self.c.iter().enumerate() {
            let j = (n - i % n) % n;
            c[j] += x;
        }
        Cyclo::reduce(&self.ctx, c)
    }

    pub fn is_real(&self) -> bool {
        self.conj() == *self
    }

    /// Numerical value with `zeta = exp(2 pi i / n)`.
    pub fn to_ball(&self, prec: u32) -> ComplexBall {
        let z = ComplexBall::from_rational(prec, &Rational::from((1, self.ctx.n))).exp_2pi_i();
        let mut acc = ComplexBall::zero(prec);
        for x in self.c.iter().rev() {
            acc = acc.mul(&z).add(&ComplexBall::from_rational(prec, x));
        }
        acc
    }

    /// Exact rational value, if the element lies in Q.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.c.len() {
            0 => Some(Rational::new()),
            1 => Some(self.c[0].clone()),
            _ => None,
        }
    }

    fn poly_divrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
        let mut r = a.to_vec();
        let db = b.len() - 1;
        if r.len() < b.len() {
            return (Vec::new(), trim(r));
        }
        let mut q = vec![Rational::new(); r.len() - db];
        let lead_inv = Rational::from(b[db].recip_ref());
        for i in (0..q.len()).rev() {
            let t = Rational::from(&r[i + db] * &lead_inv);
            if t.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            for (j, c) in b.iter().enumerate() {
                r[i + j] -= Rational::from(&t * c);
            }
            q[i] = t;
        }
        r.truncate(db);
        (trim(q), trim(r))
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, x)| x.cmp0() != std::cmp::Ordering::Equal)
            .map(|(i, x)| match i {
                0 => x.to_string(),
                1 => format!("{x}*z{}", self.ctx.n),
                _ => format!("{x}*z{}^{i}", self.ctx.n),
            })
            .collect();
        if parts.is_empty() {
            return write!(f, "0");
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl Coeff for Cyclo {
    type Ctx = CycloCtx;

    fn ctx(&self) -> CycloCtx {
        self.ctx.clone()
    }

    fn domain_name(ctx: &CycloCtx) -> String {
        format!("cyclotomic({})", ctx.n)
    }

    fn zero(ctx: &CycloCtx) -> Self {
        Cyclo { ctx: ctx.clone(), c: Vec::new() }
    }

    fn one(ctx: &CycloCtx) -> Self {
        Cyclo { ctx: ctx.clone(), c: vec![Rational::from(1)] }
    }

    fn from_rational(ctx: &CycloCtx, r: &Rational) -> Self {
        Cyclo { ctx: ctx.clone(), c: trim(vec![r.clone()]) }
    }

    fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    fn add(&self, other: &Self) -> Self {
        Cyclo { ctx: self.ctx.clone(), c: trim(poly_add(&self.c, &other.c)) }
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    fn neg(&self) -> Self {
        Cyclo { ctx: self.ctx.clone(), c: self.c.iter().map(|x| Rational::from(-x)).collect() }
    }

    fn mul(&self, other: &Self) -> Self {
        Cyclo::reduce(&self.ctx, poly_mul(&self.c, &other.c))
    }

    fn mul_rational(&self, r: &Rational) -> Self {
        Cyclo { ctx: self.ctx.clone(), c: trim(self.c.iter().map(|x| Rational::from(x * r)).collect()) }
    }

    fn inv(&self) -> Option<Self> {
        if self.c.is_empty() {
            return None;
        }
        // Extended Euclid in Q[x] against Phi_n.
        let phi: Vec<Rational> = self.ctx.phi.iter().map(|x| Rational::from(x.clone())).collect();
        let (mut r0, mut r1) = (phi, self.c.clone());
        let (mut t0, mut t1): (Vec<Rational>, Vec<Rational>) = (Vec::new(), vec![Rational::from(1)]);
        while !r1.is_empty() {
            let (q, r) = Cyclo::poly_divrem(&r0, &r1);
            let qt = poly_mul(&q, &t1);
            let t2 = trim(poly_add(&t0, &qt.iter().map(|x| Rational::from(-x)).collect::<Vec<_>>()));
            r0 = std::mem::replace(&mut r1, r);
            t0 = std::mem::replace(&mut t1, t2);
        }
        // r0 is a non-zero constant because Phi_n is irreducible.
        if r0.len() != 1 {
            return None;
        }
        let s = Rational::from(r0[0].recip_ref());
        let t: Vec<Rational> = t0.iter().map(|x| Rational::from(x * &s)).collect();
        Some(Cyclo::reduce(&self.ctx, t))
    }

    fn is_rational(&self, r: &Rational) -> bool {
        self.as_rational().is_some_and(|x| &x == r)
    }

    fn eq_exact(&self, other: &Self) -> bool {
        self == other
    }

    fn to_json_string(&self) -> String {
        self.to_string()
    }
}

// ---------------------------------------------------------------------------
// Complex balls

impl Coeff for ComplexBall {
    type Ctx = u32;

    fn ctx(&self) -> u32 {
        self.prec()
    }

    fn domain_name(ctx: &u32) -> String {
        format!("complex_ball({ctx})")
    }

    fn zero(ctx: &u32) -> Self {
        ComplexBall::zero(*ctx)
    }

    fn one(ctx: &u32) -> Self {
        ComplexBall::one(*ctx)
    }

    fn from_rational(ctx: &u32, r: &Rational) -> Self {
        ComplexBall::from_rational(*ctx, r)
    }

    fn is_zero(&self) -> bool {
        self.is_exact_zero()
    }

    fn add(&self, other: &Self) -> Self {
        ComplexBall::add(self, other)
    }

    fn sub(&self, other: &Self) -> Self {
        ComplexBall::sub(self, other)
    }

    fn neg(&self) -> Self {
        ComplexBall::neg(self)
    }

    fn mul(&self, other: &Self) -> Self {
        ComplexBall::mul(self, other)
    }

    fn mul_rational(&self, r: &Rational) -> Self {
        ComplexBall::mul_rational(self, r)
    }

    fn mul_int(&self, k: i64) -> Self {
        ComplexBall::mul_int(self, k)
    }

    fn inv(&self) -> Option<Self> {
        ComplexBall::inv(self).ok()
    }

    fn is_rational(&self, r: &Rational) -> bool {
        self.rad().is_zero() && self.mid().imag().is_zero() && {
            let x = Float::with_val(self.prec(), r);
            self.mid().real() == &x
        }
    }

    fn eq_exact(&self, other: &Self) -> bool {
        self.mid() == other.mid() && self.rad() == other.rad()
    }

    fn to_json_string(&self) -> String {
        self.to_string()
    }
}

/// Converts a float midpoint pair and radius into a [`ComplexBall`].
pub fn ball_from_parts(re: &Float, im: &Float, rad: &Float) -> ComplexBall {
    let prec = re.prec().max(im.prec());
    ComplexBall::new(Complex::with_val(prec, (re, im)), rad.clone())
}

/// Embeds an exact rational into a real ball.
pub fn rational_ball(prec: u32, r: &Rational) -> RealBall {
    RealBall::from_rational(prec, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polynomials() {
        let p = |n| cyclotomic_polynomial(n).iter().map(|x| x.to_i64().unwrap()).collect::<Vec<_>>();
        assert_eq!(p(1), vec![-1, 1]);
        assert_eq!(p(5), vec![1, 1, 1, 1, 1]);
        assert_eq!(p(8), vec![1, 0, 0, 0, 1]);
        assert_eq!(p(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn cyclotomic_inverse_roundtrip() {
        let ctx = CycloCtx::new(12);
        let a = Cyclo::zeta_pow(&ctx, 1).add(&Cyclo::from_int(&ctx, 3)).add(&Cyclo::zeta_pow(&ctx, 5));
        let b = a.inv().unwrap();
        assert!(a.mul(&b).is_rational(&Rational::from(1)));
    }

    #[test]
    fn gauss_sum_mod_five_is_sqrt_five() {
        let ctx = CycloCtx::new(5);
        let mut g = Cyclo::zero(&ctx);
        for (b, chi) in [(1, 1), (2, -1), (3, -1), (4, 1)] {
            g = g.add(&Cyclo::zeta_pow(&ctx, b).mul_int(chi));
        }
        assert!(g.is_real());
        assert!(g.mul(&g).is_rational(&Rational::from(5)));
        let v = g.to_ball(128);
        assert!((v.re().to_f64() - 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn poly_display_and_parse() {
        let p = PolyQ::new(vec![Rational::from(159768), Rational::from(-1488), Rational::from(1)]);
        let s = p.to_string();
        assert_eq!(s, "L^2 - 1488*L + 159768");
        assert_eq!(parse_poly(&s).unwrap(), p);
        assert_eq!(parse_poly("-1/2*L^3+L").unwrap().coeffs().len(), 4);
    }

    #[test]
    fn rational_convolution_matches_naive() {
        let a: Vec<Rational> = (1..8).map(|i| Rational::from((i, i + 1))).collect();
        let b: Vec<Rational> = (1..8).map(|i| Rational::from((2 * i - 5, 3))).collect();
        let fast = <Rational as Coeff>::convolve(&a, &b, 7, &());
        for n in 0..7 {
            let mut s = Rational::new();
            for k in 0..=n {
                s += Rational::from(&a[k] * &b[n - k]);
            }
            assert_eq!(fast[n], s);
        }
    }
}
