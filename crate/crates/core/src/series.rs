//! Truncated Laurent series in q with exact order tracking, the standard
//! expansions on the j-line, eta quotients and Faber polynomials.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::ball::ComplexBall;
use crate::domain::{Coeff, PolyQ};
use crate::error::{Error, Result};

/// A truncated Laurent series `sum_{i < order} coeffs[i] q^(lead + i) + O(q^(lead + order))`.
///
/// Non-zero series are kept in normal form: the first stored coefficient is
/// non-zero. The zero series keeps whatever lead it was built with, so that
/// its precision `lead + order` is preserved.
#[derive(Clone, Debug)]
pub struct QSeries<C: Coeff> {
    ctx: C::Ctx,
    lead: i64,
    coeffs: Vec<C>,
}

/// The JSON wire format of a series.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SeriesJson {
    pub domain: String,
    pub lead: i64,
    pub order: i64,
    pub coeffs: Vec<String>,
}

impl<C: Coeff> QSeries<C> {
    /// Builds a series from raw coefficients and restores normal form.
    pub fn new(ctx: C::Ctx, lead: i64, coeffs: Vec<C>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::OrderUnderflow(0));
        }
        let mut s = QSeries { ctx, lead, coeffs };
        s.normalize();
        Ok(s)
    }

    fn from_parts(ctx: C::Ctx, lead: i64, coeffs: Vec<C>) -> Self {
        let mut s = QSeries { ctx, lead, coeffs };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        let nz = self.coeffs.iter().position(|c| !c.is_zero());
        match nz {
            Some(0) | None => {}
            Some(k) => {
                self.coeffs.drain(..k);
                self.lead += k as i64;
            }
        }
    }

    /// The series `c q^e + O(q^(e + order))`.
    pub fn monomial(ctx: &C::Ctx, c: C, e: i64, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::OrderUnderflow(0));
        }
        let mut v: Vec<C> = (0..order).map(|_| C::zero(ctx)).collect();
        v[0] = c;
        QSeries::new(ctx.clone(), e, v)
    }

    pub fn one(ctx: &C::Ctx, order: usize) -> Result<Self> {
        Self::monomial(ctx, C::one(ctx), 0, order)
    }

    /// The zero series `O(q^prec)` represented with `order` stored zeros.
    pub fn zero(ctx: &C::Ctx, lead: i64, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::OrderUnderflow(0));
        }
        Ok(QSeries { ctx: ctx.clone(), lead, coeffs: (0..order).map(|_| C::zero(ctx)).collect() })
    }

    /// Builds `sum_{e = lead}^{prec - 1} f(e) q^e`.
    pub fn from_fn(ctx: &C::Ctx, lead: i64, prec: i64, mut f: impl FnMut(i64) -> C) -> Result<Self> {
        if prec <= lead {
            return Err(Error::OrderUnderflow(prec - lead));
        }
        let v = (lead..prec).map(&mut f).collect();
        QSeries::new(ctx.clone(), lead, v)
    }

    pub fn ctx(&self) -> &C::Ctx {
        &self.ctx
    }

    pub fn domain_name(&self) -> String {
        C::domain_name(&self.ctx)
    }

    pub fn lead(&self) -> i64 {
        self.lead
    }

    /// Number of stored (trusted) coefficients.
    pub fn order(&self) -> i64 {
        self.coeffs.len() as i64
    }

    /// Absolute precision: the series is exact modulo `q^prec()`.
    pub fn prec(&self) -> i64 {
        self.lead + self.order()
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Coefficient of `q^e`; zero below the lead, an error at or beyond the precision.
    pub fn coeff(&self, e: i64) -> Result<C> {
        if e >= self.prec() {
            return Err(Error::OrderUnderflow(self.prec() - e));
        }
        if e < self.lead {
            return Ok(C::zero(&self.ctx));
        }
        Ok(self.coeffs[(e - self.lead) as usize].clone())
    }

    /// Borrowed coefficient of `q^e` when it is stored.
    pub fn coeff_ref(&self, e: i64) -> Option<&C> {
        if e < self.lead || e >= self.prec() {
            None
        } else {
            Some(&self.coeffs[(e - self.lead) as usize])
        }
    }

    /// The leading coefficient (first stored coefficient).
    pub fn leading(&self) -> &C {
        &self.coeffs[0]
    }

    fn check_domain(&self, other: &Self) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::DomainMismatch(self.domain_name(), other.domain_name()));
        }
        Ok(())
    }

    /// Drops every coefficient at or beyond `q^prec`.
    pub fn truncate(&self, prec: i64) -> Result<Self> {
        if prec >= self.prec() {
            return Ok(self.clone());
        }
        if prec <= self.lead {
            if self.is_zero() && prec > self.lead - self.order() {
                return Err(Error::OrderUnderflow(prec - self.lead));
            }
            return Err(Error::OrderUnderflow(prec - self.lead));
        }
        let n = (prec - self.lead) as usize;
        Ok(QSeries::from_parts(self.ctx.clone(), self.lead, self.coeffs[..n].to_vec()))
    }

    /// Truncation to at most `order` stored coefficients.
    pub fn with_order(&self, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::OrderUnderflow(0));
        }
        if order as i64 >= self.order() {
            return Ok(self.clone());
        }
        Ok(QSeries::from_parts(self.ctx.clone(), self.lead, self.coeffs[..order].to_vec()))
    }

    fn add_sub(&self, other: &Self, negate: bool) -> Result<Self> {
        self.check_domain(other)?;
        let prec = self.prec().min(other.prec());
        let lead = self.lead.min(other.lead);
        if prec <= lead {
            return Err(Error::OrderUnderflow(prec - lead));
        }
        let v = (lead..prec)
            .map(|e| {
                let a = self.coeff_ref(e);
                let b = other.coeff_ref(e);
                match (a, b) {
                    (Some(x), Some(y)) => {
                        if negate {
                            x.sub(y)
                        } else {
                            x.add(y)
                        }
                    }
                    (Some(x), None) => x.clone(),
                    (None, Some(y)) => {
                        if negate {
                            y.neg()
                        } else {
                            y.clone()
                        }
                    }
                    (None, None) => C::zero(&self.ctx),
                }
            })
            .collect();
        Ok(QSeries::from_parts(self.ctx.clone(), lead, v))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_sub(other, false)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_sub(other, true)
    }

    pub fn neg(&self) -> Self {
        QSeries { ctx: self.ctx.clone(), lead: self.lead, coeffs: self.coeffs.iter().map(|c| c.neg()).collect() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        let n = self.coeffs.len().min(other.coeffs.len());
        let v = C::convolve(&self.coeffs, &other.coeffs, n, &self.ctx);
        Ok(QSeries::from_parts(self.ctx.clone(), self.lead + other.lead, v))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDivide);
        }
        let v = C::series_inverse(&self.coeffs, self.coeffs.len(), &self.ctx).ok_or(Error::NonInvertibleLeading)?;
        Ok(QSeries::from_parts(self.ctx.clone(), -self.lead, v))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        self.mul(&other.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut result = QSeries::one(&self.ctx, self.coeffs.len())?;
        if e == 0 {
            return Ok(result);
        }
        let mut base = self.clone();
        let mut k = e as u64;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    pub fn scale(&self, c: &C) -> Self {
        QSeries::from_parts(self.ctx.clone(), self.lead, self.coeffs.iter().map(|x| x.mul(c)).collect())
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        QSeries::from_parts(self.ctx.clone(), self.lead, self.coeffs.iter().map(|x| x.mul_rational(r)).collect())
    }

    /// Multiplication by `q^k`.
    pub fn shift(&self, k: i64) -> Self {
        QSeries { ctx: self.ctx.clone(), lead: self.lead + k, coeffs: self.coeffs.clone() }
    }

    /// Ramanujan's operator `q d/dq`.
    pub fn theta(&self) -> Self {
        let v = self.coeffs.iter().enumerate().map(|(i, c)| c.mul_int(self.lead + i as i64)).collect();
        QSeries::from_parts(self.ctx.clone(), self.lead, v)
    }

    /// `f(q^m)`.
    pub fn subs_power(&self, m: u64) -> Self {
        let m = m as usize;
        let mut v: Vec<C> = (0..self.coeffs.len() * m).map(|_| C::zero(&self.ctx)).collect();
        for (i, c) in self.coeffs.iter().enumerate() {
            v[i * m] = c.clone();
        }
        QSeries { ctx: self.ctx.clone(), lead: self.lead * m as i64, coeffs: v }
    }

    /// `exp(a)` for a series with vanishing constant term and no poles.
    pub fn exp(&self) -> Result<Self> {
        let prec = self.prec();
        if !self.is_zero() && self.lead < 1 {
            return Err(Error::BadConstantTerm("exp needs a series in q Q[[q]]".into()));
        }
        if prec < 1 {
            return Err(Error::OrderUnderflow(prec));
        }
        let n = prec as usize;
        let b: Vec<C> = (0..n as i64).map(|e| self.coeff(e).unwrap_or_else(|_| C::zero(&self.ctx))).collect();
        let mut out: Vec<C> = Vec::with_capacity(n);
        out.push(C::one(&self.ctx));
        for m in 1..n {
            let mut acc = C::zero(&self.ctx);
            for k in 1..=m {
                if b[k].is_zero() {
                    continue;
                }
                acc = acc.add(&b[k].mul_int(k as i64).mul(&out[m - k]));
            }
            out.push(acc.mul_rational(&Rational::from((1, m as u64))));
        }
        Ok(QSeries::from_parts(self.ctx.clone(), 0, out))
    }

    /// `log(a)` for a series with constant term exactly 1.
    pub fn log(&self) -> Result<Self> {
        if self.lead != 0 || !self.coeffs[0].is_rational(&Rational::from(1)) {
            return Err(Error::BadConstantTerm("log needs constant term 1 and no poles".into()));
        }
        let n = self.coeffs.len();
        let a = &self.coeffs;
        let mut l: Vec<C> = Vec::with_capacity(n);
        l.push(C::zero(&self.ctx));
        for m in 1..n {
            let mut acc = C::zero(&self.ctx);
            for k in 1..m {
                if l[k].is_zero() || a[m - k].is_zero() {
                    continue;
                }
                acc = acc.add(&l[k].mul_int(k as i64).mul(&a[m - k]));
            }
            let v = a[m].sub(&acc.mul_rational(&Rational::from((1, m as u64))));
            l.push(v);
        }
        Ok(QSeries::from_parts(self.ctx.clone(), 0, l))
    }

    /// Coefficientwise map into another domain.
    pub fn map<D: Coeff>(&self, ctx: &D::Ctx, f: impl Fn(&C) -> D) -> QSeries<D> {
        QSeries::from_parts(ctx.clone(), self.lead, self.coeffs.iter().map(f).collect())
    }

    /// Exact equality of two series, including their precisions.
    pub fn eq_exact(&self, other: &Self) -> bool {
        if self.ctx != other.ctx || self.prec() != other.prec() {
            return false;
        }
        let lead = self.lead.min(other.lead);
        (lead..self.prec()).all(|e| match (self.coeff_ref(e), other.coeff_ref(e)) {
            (Some(a), Some(b)) => a.eq_exact(b),
            (Some(a), None) | (None, Some(a)) => a.is_zero(),
            (None, None) => true,
        })
    }

    /// Exponents below `prec` (and below both precisions) where the series differ.
    pub fn differences(&self, other: &Self, prec: i64) -> Vec<i64> {
        let top = prec.min(self.prec()).min(other.prec());
        let lead = self.lead.min(other.lead);
        (lead..top)
            .filter(|&e| {
                let z = C::zero(&self.ctx);
                let a = self.coeff_ref(e).unwrap_or(&z);
                let b = other.coeff_ref(e).unwrap_or(&z);
                !a.eq_exact(b)
            })
            .collect()
    }

    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            domain: self.domain_name(),
            lead: self.lead,
            order: self.order(),
            coeffs: self.coeffs.iter().map(|c| c.to_json_string()).collect(),
        }
    }

    pub fn from_json(ctx: &C::Ctx, js: &SeriesJson) -> Result<Self> {
        let expected = C::domain_name(ctx);
        if js.domain != expected {
            return Err(Error::DomainMismatch(js.domain.clone(), expected));
        }
        if js.order < 1 || js.coeffs.len() as i64 != js.order {
            return Err(Error::Parse(format!(
                "order {} does not match {} coefficients",
                js.order,
                js.coeffs.len()
            )));
        }
        let v = js.coeffs.iter().map(|s| C::parse(ctx, s)).collect::<Result<Vec<_>>>()?;
        QSeries::new(ctx.clone(), js.lead, v)
    }
}

impl<C: Coeff> fmt::Display for QSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = self.lead + i as i64;
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let cs = c.to_json_string();
            match e {
                0 => write!(f, "{cs}")?,
                1 => write!(f, "({cs})*q")?,
                _ => write!(f, "({cs})*q^{e}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(q^{})", self.prec())
    }
}

/// Rational series, the workhorse domain.
pub type RSeries = QSeries<Rational>;

impl QSeries<Rational> {
    /// Builds an exact series from integer coefficients.
    pub fn from_integers(lead: i64, v: Vec<Integer>) -> Result<Self> {
        QSeries::new((), lead, v.into_iter().map(Rational::from).collect())
    }

    pub fn from_i64(lead: i64, v: &[i64]) -> Result<Self> {
        QSeries::new((), lead, v.iter().map(|&x| Rational::from(x)).collect())
    }

    /// True when every stored coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.denom() == &1)
    }

    /// Rational coefficient of `q^e` as an integer, if integral.
    pub fn int_coeff(&self, e: i64) -> Result<Integer> {
        let c = self.coeff(e)?;
        if c.denom() != &1 {
            return Err(Error::InvalidArgument(format!("coefficient of q^{e} is not an integer")));
        }
        Ok(c.numer().clone())
    }

    pub fn to_ball(&self, prec: u32) -> QSeries<ComplexBall> {
        self.map(&prec, |c| ComplexBall::from_rational(prec, c))
    }

    pub fn to_poly(&self) -> QSeries<PolyQ> {
        self.map(&(), |c| PolyQ::constant(c.clone()))
    }
}

// ---------------------------------------------------------------------------
// Sparse eta-product kernels on integer vectors

/// `prod (1 - q^n)` as a list of `(exponent, sign)` with exponent < len.
pub fn pentagonal_terms(len: usize) -> Vec<(usize, i64)> {
    let mut t = vec![(0usize, 1i64)];
    let mut k: usize = 1;
    loop {
        let e1 = k * (3 * k - 1) / 2;
        if e1 >= len {
            break;
        }
        let s = if k % 2 == 0 { 1 } else { -1 };
        t.push((e1, s));
        let e2 = k * (3 * k + 1) / 2;
        if e2 < len {
            t.push((e2, s));
        }
        k += 1;
    }
    t.sort();
    t
}

/// `prod (1 - q^n)^3 = sum (-1)^n (2n+1) q^(n(n+1)/2)`.
pub fn jacobi_cube_terms(len: usize) -> Vec<(usize, i64)> {
    let mut t = Vec::new();
    let mut n = 0usize;
    while n * (n + 1) / 2 < len {
        let s = if n % 2 == 0 { 1 } else { -1 };
        t.push((n * (n + 1) / 2, s * (2 * n as i64 + 1)));
        n += 1;
    }
    t
}

/// In place `v <- v * S(q^m)` for a sparse series `S` with `S(0) = 1`.
pub fn sparse_mul_in_place(v: &mut [Integer], terms: &[(usize, i64)], m: usize) {
    let len = v.len();
    for n in (0..len).rev() {
        let mut acc = Integer::new();
        for &(e, c) in &terms[1..] {
            let s = e * m;
            if s > n {
                break;
            }
            let src = &v[n - s];
            if src.is_zero() {
                continue;
            }
            if c == 1 {
                acc += src;
            } else if c == -1 {
                acc -= src;
            } else if c > 0 {
                acc += src * (c as u64);
            } else {
                acc -= src * ((-c) as u64);
            }
        }
        if !acc.is_zero() {
            v[n] += acc;
        }
    }
}

/// In place `v <- v / S(q^m)` for a sparse series `S` with `S(0) = 1`.
pub fn sparse_div_in_place(v: &mut [Integer], terms: &[(usize, i64)], m: usize) {
    let len = v.len();
    for n in 0..len {
        let mut acc = Integer::new();
        for &(e, c) in &terms[1..] {
            let s = e * m;
            if s > n {
                break;
            }
            let src = &v[n - s];
            if src.is_zero() {
                continue;
            }
            if c == 1 {
                acc += src;
            } else if c == -1 {
                acc -= src;
            } else if c > 0 {
                acc += src * (c as u64);
            } else {
                acc -= src * ((-c) as u64);
            }
        }
        if !acc.is_zero() {
            v[n] -= acc;
        }
    }
}

/// In place `v <- v * prod_n (1 - q^(m n))^r`.
pub fn eta_power_in_place(v: &mut [Integer], m: usize, r: i64) {
    if r == 0 || v.is_empty() {
        return;
    }
    let len = v.len();
    let span = len / m + 1;
    let cube = jacobi_cube_terms(span);
    let pent = pentagonal_terms(span);
    let a = r.unsigned_abs() / 3;
    let b = r.unsigned_abs() % 3;
    for _ in 0..a {
        if r > 0 {
            sparse_mul_in_place(v, &cube, m);
        } else {
            sparse_div_in_place(v, &cube, m);
        }
    }
    for _ in 0..b {
        if r > 0 {
            sparse_mul_in_place(v, &pent, m);
        } else {
            sparse_div_in_place(v, &pent, m);
        }
    }
}

/// Coefficients of `prod_{(m, r)} prod_n (1 - q^(m n))^r` below `q^len`.
pub fn eta_product_coeffs(spec: &[(u64, i64)], len: usize) -> Vec<Integer> {
    let mut v = vec![Integer::new(); len];
    if len > 0 {
        v[0] = Integer::from(1);
    }
    for &(m, r) in spec {
        eta_power_in_place(&mut v, m as usize, r);
    }
    v
}

/// `sigma_k(n)` for `0 <= n < len` (index 0 is unused and zero).
pub fn divisor_sums(k: u32, len: usize) -> Vec<Integer> {
    let mut s = vec![Integer::new(); len];
    for d in 1..len {
        let p = Integer::from(d).pow(k);
        let mut m = d;
        while m < len {
            s[m] += &p;
            m += d;
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Standard series

/// Named expansions available through [`standard_series`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StandardSeries {
    E2,
    E4,
    E6,
    Delta,
    J,
    Theta,
    /// `prod eta(m tau)^r` given as `(m, r)` pairs.
    EtaQuotient(Vec<(u64, i64)>),
}

impl StandardSeries {
    /// Parses `E2`, `E4`, `E6`, `delta`, `j`, `theta` (alias `theta4`) and
    /// eta quotients written `eta:1^8,4^-8`.
    pub fn parse(name: &str) -> Result<Self> {
        let t = name.trim();
        match t {
            "E2" | "e2" => return Ok(StandardSeries::E2),
            "E4" | "e4" => return Ok(StandardSeries::E4),
            "E6" | "e6" => return Ok(StandardSeries::E6),
            "delta" | "Delta" => return Ok(StandardSeries::Delta),
            "j" => return Ok(StandardSeries::J),
            "theta" | "theta4" => return Ok(StandardSeries::Theta),
            _ => {}
        }
        if let Some(rest) = t.strip_prefix("eta:") {
            let mut spec = Vec::new();
            for part in rest.split(',') {
                let (m, r) = part
                    .split_once('^')
                    .ok_or_else(|| Error::UnknownName(format!("eta factor '{part}' must look like m^r")))?;
                let m: u64 = m.trim().parse().map_err(|_| Error::UnknownName(format!("bad eta scale in '{part}'")))?;
                let r: i64 =
                    r.trim().parse().map_err(|_| Error::UnknownName(format!("bad eta exponent in '{part}'")))?;
                if m == 0 {
                    return Err(Error::UnknownName(format!("eta scale must be positive in '{part}'")));
                }
                spec.push((m, r));
            }
            return Ok(StandardSeries::EtaQuotient(spec));
        }
        Err(Error::UnknownName(t.to_string()))
    }
}

/// Exact expansion of a named series with `order` stored coefficients.
pub fn standard_series(name: &StandardSeries, order: usize) -> Result<RSeries> {
    if order == 0 {
        return Err(Error::OrderUnderflow(0));
    }
    match name {
        StandardSeries::E2 => eisenstein(2, order),
        StandardSeries::E4 => eisenstein(4, order),
        StandardSeries::E6 => eisenstein(6, order),
        StandardSeries::Delta => delta(order),
        StandardSeries::J => j_series(order),
        StandardSeries::Theta => theta_series(order),
        StandardSeries::EtaQuotient(spec) => eta_quotient(spec, order),
    }
}

/// `E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n` for `k` in {2, 4, 6}.
pub fn eisenstein(k: u32, order: usize) -> Result<RSeries> {
    let c: i64 = match k {
        2 => -24,
        4 => 240,
        6 => -504,
        _ => return Err(Error::InvalidArgument(format!("Eisenstein series E{k} is not provided"))),
    };
    let s = divisor_sums(k - 1, order);
    let mut v: Vec<Integer> = s.into_iter().map(|x| x * c).collect();
    v[0] = Integer::from(1);
    RSeries::from_integers(0, v)
}

/// `Delta = q prod (1 - q^n)^24`.
pub fn delta(order: usize) -> Result<RSeries> {
    RSeries::from_integers(1, eta_product_coeffs(&[(1, 24)], order))
}

/// `theta = sum_{n in Z} q^(n^2)`.
pub fn theta_series(order: usize) -> Result<RSeries> {
    let mut v = vec![Integer::new(); order];
    let mut n = 0usize;
    while n * n < order {
        v[n * n] = Integer::from(if n == 0 { 1 } else { 2 });
        n += 1;
    }
    RSeries::from_integers(0, v)
}

/// `prod eta(m tau)^r`; the total q-offset `sum m r / 24` must be integral.
pub fn eta_quotient(spec: &[(u64, i64)], order: usize) -> Result<RSeries> {
    let off: i64 = spec.iter().map(|&(m, r)| m as i64 * r).sum();
    if off % 24 != 0 {
        return Err(Error::FractionalLeadExponent(off));
    }
    RSeries::from_integers(off / 24, eta_product_coeffs(spec, order))
}

fn j_cache() -> &'static Mutex<Option<RSeries>> {
    static CACHE: OnceLock<Mutex<Option<RSeries>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(None))
}

/// `j = E4^3 / Delta` with `order` stored coefficients (from `q^-1`).
pub fn j_series(order: usize) -> Result<RSeries> {
    if let Some(j) = j_cache().lock().unwrap().as_ref() {
        if j.order() as usize >= order {
            return j.with_order(order);
        }
    }
    let e4 = eisenstein(4, order)?;
    let e4c = e4.pow(3)?;
    let mut v: Vec<Integer> = e4c.coeffs().iter().map(|c| c.numer().clone()).collect();
    v.resize(order, Integer::new());
    eta_power_in_place(&mut v, 1, -24);
    let j = RSeries::from_integers(-1, v)?;
    let mut guard = j_cache().lock().unwrap();
    if guard.as_ref().is_none_or(|c| c.order() < j.order()) {
        *guard = Some(j.clone());
    }
    Ok(j)
}

/// `J_1 = j - 744`.
pub fn j1_series(order: usize) -> Result<RSeries> {
    let j = j_series(order)?;
    let c = RSeries::monomial(&(), Rational::from(744), 0, order)?;
    j.sub(&c)
}

// ---------------------------------------------------------------------------
// Faber polynomials

/// The monic polynomial `F_n` with `F_n(j) = q^-n + O(q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaberPoly {
    pub n: u64,
    /// `coeffs[i]` multiplies `L^i`.
    #[serde(with = "integer_strings")]
    pub coeffs: Vec<Integer>,
}

mod integer_strings {
    use rug::Integer;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Integer], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Integer>, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        v.iter()
            .map(|s| Integer::from_str_radix(s, 10).map_err(serde::de::Error::custom))
            .collect()
    }
}

impl FaberPoly {
    pub fn eval_integer(&self, x: &Integer) -> Integer {
        let mut acc = Integer::new();
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn eval<C: Coeff>(&self, x: &C) -> C {
        let ctx = x.ctx();
        let mut acc = C::zero(&ctx);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(&C::from_rational(&ctx, &Rational::from(c.clone())));
        }
        acc
    }

    pub fn eval_ball(&self, x: &ComplexBall) -> ComplexBall {
        let mut acc = ComplexBall::zero(x.prec());
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(&ComplexBall::from_int(x.prec(), c.clone()));
        }
        acc
    }

    /// Composition `F_n(series)`, by Horner's rule.
    pub fn eval_series(&self, x: &RSeries) -> Result<RSeries> {
        let order = x.order() as usize;
        let mut acc = RSeries::zero(&(), 0, order)?;
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x)?;
            acc = acc.add(&RSeries::monomial(&(), Rational::from(c.clone()), 0, order)?)?;
        }
        Ok(acc)
    }

    pub fn to_poly(&self) -> PolyQ {
        PolyQ::from_integers(&self.coeffs)
    }
}

impl fmt::Display for FaberPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_poly())
    }
}

/// Series and polynomials `(J_0, ..., J_n)` by the multiply-by-`J_1` and
/// reduce recursion; each series has `order` stored coefficients.
pub fn faber_recursion(n: u64, order: usize) -> Result<Vec<(RSeries, FaberPoly)>> {
    let order = order.max(2);
    let j1 = j1_series(order)?;
    let one = RSeries::one(&(), order)?;
    let mut out = vec![(one, FaberPoly { n: 0, coeffs: vec![Integer::from(1)] })];
    if n == 0 {
        return Ok(out);
    }
    out.push((j1.clone(), FaberPoly { n: 1, coeffs: vec![Integer::from(-744), Integer::from(1)] }));
    for m in 1..n {
        let (jm, fm) = &out[m as usize];
        let mut g = jm.mul(&j1)?;
        let mut poly: Vec<Integer> = vec![Integer::new(); m as usize + 2];
        // F_m * (L - 744)
        for (i, c) in fm.coeffs.iter().enumerate() {
            poly[i + 1] += c;
            poly[i] -= Integer::from(c * 744);
        }
        for k in (0..=m).rev() {
            let c = g.coeff(-(k as i64))?;
            if c.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let (jk, fk) = &out[k as usize];
            g = g.sub(&jk.scale_rational(&c))?;
            let ci = c.numer().clone();
            for (i, x) in fk.coeffs.iter().enumerate() {
                poly[i] -= Integer::from(x * &ci);
            }
        }
        let g = g.with_order(order)?;
        out.push((g, FaberPoly { n: m + 1, coeffs: poly }));
    }
    Ok(out)
}

fn faber_cache() -> &'static Mutex<HashMap<u64, FaberPoly>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, FaberPoly>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The Faber polynomial `F_n` (memoized).
pub fn faber_poly(n: u64) -> Result<FaberPoly> {
    if let Some(p) = faber_cache().lock().unwrap().get(&n) {
        return Ok(p.clone());
    }
    let all = faber_recursion(n, n as usize + 3)?;
    let mut cache = faber_cache().lock().unwrap();
    for (_, p) in all {
        cache.entry(p.n).or_insert(p);
    }
    Ok(cache[&n].clone())
}

/// `J_n` with `order` stored coefficients together with `F_n`.
///
/// The series is built twice, once as `J_1 | T_n` and once by the
/// multiply-and-reduce recursion; any disagreement is reported as an
/// internal inconsistency.
pub fn faber(n: u64, order: usize) -> Result<(RSeries, FaberPoly)> {
    if order == 0 {
        return Err(Error::OrderUnderflow(0));
    }
    let rec = faber_recursion(n, order)?;
    let (series_b, poly) = rec[n as usize].clone();
    if n == 0 {
        return Ok((series_b.with_order(order)?, poly));
    }
    let need = n as usize * (order + 1) + 2;
    let j1 = j1_series(need)?;
    let series_a = crate::hecke::hecke_tn(&crate::hecke::WeightedForm::new(j1, 0)?, n)?;
    let series_a = series_a.with_order(order)?;
    let series_b = series_b.with_order(order)?;
    if !series_a.eq_exact(&series_b) {
        let diff = series_a.differences(&series_b, series_a.prec());
        return Err(Error::InternalInconsistency(format!(
            "J_{n}: Hecke and recursion constructions differ at exponents {diff:?}"
        )));
    }
    Ok((series_a, poly))
}

/// Splits a Laurent series into `c_0 + sum_n c_n J_n` plus a remainder
/// `O(q)`. Returns `(c_0, [(n, c_n)], remainder)`.
pub fn faber_decompose(f: &RSeries) -> Result<(Rational, Vec<(u64, Rational)>, RSeries)> {
    let mut terms = Vec::new();
    let mut rem = f.clone();
    let order = f.order() as usize;
    for e in f.lead()..0 {
        let c = f.coeff(e)?;
        if c.cmp0() == std::cmp::Ordering::Equal {
            continue;
        }
        let n = (-e) as u64;
        let need = (f.prec() + n as i64).max(1) as usize;
        let (jn, _) = faber(n, need.max(order))?;
        rem = rem.sub(&jn.scale_rational(&c))?;
        terms.push((n, c));
    }
    let c0 = f.coeff(0)?;
    rem = rem.sub(&RSeries::monomial(&(), c0.clone(), 0, f.prec().max(1) as usize)?)?;
    Ok((c0, terms, rem))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs_i64(s: &RSeries) -> Vec<i64> {
        s.coeffs().iter().map(|c| c.numer().to_i64().unwrap()).collect()
    }

    #[test]
    fn j_leading_coefficients() {
        let j = j_series(4).unwrap();
        assert_eq!(j.lead(), -1);
        assert_eq!(coeffs_i64(&j), vec![1, 744, 196884, 21493760]);
    }

    #[test]
    fn e2_coefficient_of_q2() {
        assert_eq!(eisenstein(2, 3).unwrap().coeff(2).unwrap(), -72);
    }

    #[test]
    fn normal_form_strips_zeros() {
        let s = RSeries::from_i64(-2, &[0, 0, 3, 4]).unwrap();
        assert_eq!(s.lead(), 0);
        assert_eq!(s.order(), 2);
        assert_eq!(s.prec(), 2);
    }

    #[test]
    fn mercator_log() {
        let s = RSeries::from_i64(0, &[1, 1, 0, 0, 0, 0]).unwrap();
        let l = s.log().unwrap();
        for m in 1..6i64 {
            let sign = if m % 2 == 1 { 1 } else { -1 };
            assert_eq!(l.coeff(m).unwrap(), Rational::from((sign, m)));
        }
    }

    #[test]
    fn underflow_is_reported() {
        let s = RSeries::from_i64(0, &[1]).unwrap();
        assert!(matches!(s.truncate(0), Err(Error::OrderUnderflow(_))));
        assert!(matches!(s.coeff(1), Err(Error::OrderUnderflow(_))));
    }

    #[test]
    fn fractional_eta_offset_is_rejected() {
        assert!(matches!(eta_quotient(&[(1, 1)], 5), Err(Error::FractionalLeadExponent(1))));
    }

    #[test]
    fn faber_small_cases() {
        let (s0, p0) = faber(0, 5).unwrap();
        assert_eq!(coeffs_i64(&s0), vec![1, 0, 0, 0, 0]);
        assert_eq!(p0.coeffs, vec![Integer::from(1)]);
        let (s1, p1) = faber(1, 4).unwrap();
        assert_eq!(coeffs_i64(&s1), vec![1, 0, 196884, 21493760]);
        assert_eq!(p1.coeffs, vec![Integer::from(-744), Integer::from(1)]);
        let (s2, p2) = faber(2, 5).unwrap();
        assert_eq!(s2.coeff(1).unwrap(), 42987520);
        assert_eq!(p2.to_string(), "L^2 - 1488*L + 159768");
    }

    #[test]
    fn json_roundtrip() {
        let s = RSeries::new((), -1, vec![Rational::from(1), Rational::from((1, 3)), Rational::from(-7)]).unwrap();
        let js = s.to_json();
        assert_eq!(js.coeffs, vec!["1", "1/3", "-7"]);
        let t = RSeries::from_json(&(), &js).unwrap();
        assert!(s.eq_exact(&t));
    }
}
