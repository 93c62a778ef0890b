//! Hecke operators on q-expansions: the normalized integral-weight `T_n`,
//! the multiplicative operator on normalized products, and the weight-1/2
//! operator `p T(p^2)` on the plus space.

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::borcherds::PlusForm;
use crate::domain::Coeff;
use crate::error::{Error, Result};
use crate::lvalues::kronecker_symbol;
use crate::series::QSeries;

/// A q-expansion together with its (even) weight.
#[derive(Clone, Debug)]
pub struct WeightedForm<C: Coeff> {
    pub series: QSeries<C>,
    pub weight: i64,
}

impl<C: Coeff> WeightedForm<C> {
    pub fn new(series: QSeries<C>, weight: i64) -> Result<Self> {
        if weight % 2 != 0 {
            return Err(Error::InvalidArgument(format!("weight must be even, got {weight}")));
        }
        Ok(WeightedForm { series, weight })
    }
}

/// Factorization by trial division, ascending primes with multiplicity.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == vec![(n, 1)]
}

fn rational_pow(p: u64, e: i64) -> Rational {
    let base = Integer::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Rational::from(base)
    } else {
        Rational::from((Integer::from(1), base))
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// `T_p` for a prime `p`: `b(m) = p^(1-k/2) a(pm) + p^(k/2) a(m/p)`.
pub fn hecke_prime<C: Coeff>(f: &QSeries<C>, k: i64, p: u64) -> Result<QSeries<C>> {
    if !is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not prime")));
    }
    let pi = p as i64;
    let la = f.lead();
    let pa = f.prec();
    let new_prec = (pa - 1).div_euclid(pi) + 1;
    let new_lead = ceil_div(la, pi).min(la * pi);
    if new_prec <= new_lead {
        return Err(Error::OrderUnderflow(new_prec - new_lead));
    }
    let ctx = f.ctx().clone();
    let c1 = C::from_rational(&ctx, &rational_pow(p, 1 - k / 2));
    let c2 = C::from_rational(&ctx, &rational_pow(p, k / 2));
    QSeries::from_fn(&ctx, new_lead, new_prec, |m| {
        let mut acc = C::zero(&ctx);
        if let Some(a) = f.coeff_ref(pi * m) {
            if !a.is_zero() {
                acc = acc.add(&a.mul(&c1));
            }
        }
        if m % pi == 0 {
            if let Some(a) = f.coeff_ref(m / pi) {
                if !a.is_zero() {
                    acc = acc.add(&a.mul(&c2));
                }
            }
        }
        acc
    })
}

/// `T_{p^r}` through `T_{p^(r+1)} = T_p T_{p^r} - p T_{p^(r-1)}`.
pub fn hecke_prime_power<C: Coeff>(f: &QSeries<C>, k: i64, p: u64, r: u32) -> Result<QSeries<C>> {
    if r == 0 {
        return Ok(f.clone());
    }
    let mut prev = f.clone();
    let mut cur = hecke_prime(f, k, p)?;
    for _ in 1..r {
        let next = hecke_prime(&cur, k, p)?.sub(&prev.scale_rational(&Rational::from(p)))?;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// The normalized Hecke operator `T_n`, multiplicative over coprime prime powers.
pub fn hecke_tn<C: Coeff>(f: &WeightedForm<C>, n: u64) -> Result<QSeries<C>> {
    if n == 0 {
        return Err(Error::NonPositiveIndex(0));
    }
    let mut g = f.series.clone();
    for (p, r) in factorize(n) {
        g = hecke_prime_power(&g, f.weight, p, r)?;
    }
    Ok(g)
}

/// The multiplicative Hecke operator on `f = q^h u` with `u(0) = 1`:
/// `q^((p+1)h) u(q^p) exp(p sum_m b(pm) q^m)` where `log u = sum b(m) q^m`.
pub fn mult_hecke<C: Coeff>(f: &QSeries<C>, p: u64) -> Result<QSeries<C>> {
    if !is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not prime")));
    }
    if f.is_zero() || !f.leading().is_rational(&Rational::from(1)) {
        return Err(Error::BadLeadingCoefficient("the multiplicative Hecke operator needs f = q^h(1 + ...)".into()));
    }
    let h = f.lead();
    let u = f.shift(-h);
    let l = u.log()?;
    let pi = p as i64;
    let b_prec = (l.prec() - 1).div_euclid(pi) + 1;
    let ctx = f.ctx().clone();
    let b = QSeries::from_fn(&ctx, 0, b_prec, |m| {
        if m == 0 {
            C::zero(&ctx)
        } else {
            l.coeff_ref(pi * m).map(|c| c.mul_int(pi)).unwrap_or_else(|| C::zero(&ctx))
        }
    })?;
    let e = b.exp()?;
    let up = u.subs_power(p);
    Ok(up.mul(&e)?.shift((pi + 1) * h))
}

/// Checks the plus-space support condition on a rational series.
pub fn check_plus_support(f: &QSeries<Rational>) -> Result<()> {
    for (i, c) in f.coeffs().iter().enumerate() {
        let e = f.lead() + i as i64;
        if c.cmp0() != std::cmp::Ordering::Equal && !matches!(e.rem_euclid(4), 0 | 1) {
            return Err(Error::PlusSpaceViolation(e));
        }
    }
    Ok(())
}

/// Coefficient rule of `p T(p^2)` in weight 1/2:
/// `b(n) = p a(p^2 n) + (n|p) a(n) + a(n/p^2)` for `n = 0, 1 mod 4`, and
/// `b(n) = 0` otherwise. For odd `p` the rule vanishes there by itself; for
/// `p = 2` the restriction is the plus-space operator.
pub fn half_integral_ptp2_series(f: &QSeries<Rational>, p: u64) -> Result<QSeries<Rational>> {
    if !is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not prime")));
    }
    check_plus_support(f)?;
    let pi = p as i64;
    let p2 = pi * pi;
    let la = f.lead();
    let pa = f.prec();
    let new_prec = (pa - 1).div_euclid(p2) + 1;
    let new_lead = ceil_div(la, p2).min(la).min(la * p2);
    if new_prec <= new_lead {
        return Err(Error::OrderUnderflow(new_prec - new_lead));
    }
    let out = QSeries::from_fn(&(), new_lead, new_prec, |n| {
        let mut acc = Rational::new();
        if !matches!(n.rem_euclid(4), 0 | 1) {
            return acc;
        }
        if let Some(a) = f.coeff_ref(p2 * n) {
            acc += Rational::from(a * pi);
        }
        if let Some(a) = f.coeff_ref(n) {
            let chi = kronecker_symbol(n, pi);
            if chi != 0 {
                acc += Rational::from(a * chi);
            }
        }
        if n % p2 == 0 {
            if let Some(a) = f.coeff_ref(n / p2) {
                acc += a;
            }
        }
        acc
    })?;
    check_plus_support(&out)?;
    Ok(out)
}

/// `p T(p^2)` on a plus-space form.
pub fn half_integral_ptp2(f: &PlusForm, p: u64) -> Result<PlusForm> {
    PlusForm::from_series(half_integral_ptp2_series(f.series(), p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{j1_series, RSeries};

    #[test]
    fn constant_eigenvalues() {
        for p in [2u64, 3, 5] {
            let one = RSeries::one(&(), 40).unwrap();
            let t = hecke_tn(&WeightedForm::new(one, 0).unwrap(), p).unwrap();
            assert!(t.coeff(0).unwrap() == p + 1);
        }
    }

    #[test]
    fn j1_under_t2() {
        let j1 = j1_series(20).unwrap();
        let t = hecke_tn(&WeightedForm::new(j1, 0).unwrap(), 2).unwrap();
        assert_eq!(t.lead(), -2);
        assert!(t.coeff(1).unwrap() == 2 * 21493760);
        assert!(t.coeff(0).unwrap() == 0);
        assert!(t.coeff(-1).unwrap() == 0);
    }

    #[test]
    fn zero_index_rejected() {
        let one = RSeries::one(&(), 4).unwrap();
        assert!(matches!(hecke_tn(&WeightedForm::new(one, 0).unwrap(), 0), Err(Error::NonPositiveIndex(0))));
    }

    #[test]
    fn factorization() {
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert!(is_prime(7) && !is_prime(1) && !is_prime(9));
    }
}
