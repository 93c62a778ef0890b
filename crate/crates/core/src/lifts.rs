//! The divisor lift `D(f) = -Theta(f)/f + k E_2/12`, the generating function
//! `-Theta(j)/(j - L)` of the `J_n`, recovery of a divisor from its Faber
//! power sums, and the Hecke-equivariance check `D(f|T(p)) = D(f)|T_p`.

use std::cmp::Ordering;
use std::fmt;

use rug::{Integer, Rational};
use serde::Serialize;

use crate::ball::RealBall;
use crate::domain::{Coeff, PolyQ};
use crate::error::{Error, Result};
use crate::hecke::{hecke_prime, mult_hecke, WeightedForm};
use crate::series::{delta, eisenstein, faber_poly, j_series, QSeries, RSeries, SeriesJson};

/// `D(f) = -Theta(f)/f + k E_2 / 12` for `f = q^h (1 + ...)`.
///
/// The constant term is `k/12 - h`, and for `n >= 1` the coefficient of
/// `q^n` is `sum_z ord_z(f)/omega_z F_n(j(z))`.
pub fn divisor_lift<C: Coeff>(f: &WeightedForm<C>) -> Result<QSeries<C>> {
    let s = &f.series;
    if s.is_zero() || !s.leading().is_rational(&Rational::from(1)) {
        return Err(Error::BadLeadingCoefficient("the divisor lift needs f = q^h(1 + ...)".into()));
    }
    let ld = s.theta().div(s)?.neg();
    let order = ld.prec().max(1) as usize;
    let ctx = s.ctx().clone();
    let e2 = eisenstein(2, order)?.map(&ctx, |c| C::from_rational(&ctx, c));
    ld.add(&e2.scale_rational(&Rational::from((f.weight, 12))))
}

/// `-Theta(j)/(j - L)` in `Q[L][[q]]`; the coefficient of `q^n` is `F_n(L)`
/// for every `n < order`.
pub fn akn_generating(order: usize) -> Result<QSeries<PolyQ>> {
    if order == 0 {
        return Err(Error::OrderUnderflow(0));
    }
    let j = j_series(order + 2)?.to_poly();
    let lam = QSeries::monomial(&(), PolyQ::var(), 0, order + 1)?;
    let g = j.theta().neg().div(&j.sub(&lam)?)?;
    g.truncate(order as i64)
}

/// One point group of a divisor: the `j`-values are the roots of `factor`,
/// each carrying `multiplicity = ord_z / omega_z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisorEntry {
    pub factor: PolyQ,
    pub multiplicity: Rational,
}

impl DivisorEntry {
    /// The `j`-value when the factor is linear.
    pub fn jvalue(&self) -> Option<Rational> {
        let c = self.factor.coeffs();
        if c.len() == 2 {
            Some(Rational::from(-&c[0]) / &c[1])
        } else {
            None
        }
    }
}

/// A divisor on `SL_2(Z) \ H`, grouped by multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DivisorData {
    pub entries: Vec<DivisorEntry>,
}

impl DivisorData {
    /// Sum of multiplicities, counting every root of every factor.
    pub fn total(&self) -> Rational {
        let mut t = Rational::new();
        for e in &self.entries {
            t += Rational::from(&e.multiplicity * e.factor.degree().unwrap_or(0) as u32);
        }
        t
    }

    pub fn to_json(&self) -> serde_json::Value {
        let v: Vec<_> = self
            .entries
            .iter()
            .map(|e| {
                serde_json::json!({
                    "factor": e.factor.to_string(),
                    "jvalue": e.jvalue().map(|r| r.to_string()),
                    "multiplicity": e.multiplicity.to_string(),
                })
            })
            .collect();
        serde_json::Value::Array(v)
    }
}

impl fmt::Display for DivisorData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|e| match e.jvalue() {
                Some(j) => format!("{}*[j={}]", e.multiplicity, j),
                None => format!("{}*[roots of {}]", e.multiplicity, e.factor),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

// Dense polynomials over Q in ascending order, trimmed.

fn ptrim(mut a: Vec<Rational>) -> Vec<Rational> {
    while a.last().is_some_and(|x| x.cmp0() == Ordering::Equal) {
        a.pop();
    }
    a
}

fn psub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    ptrim(
        (0..n)
            .map(|i| {
                let x = a.get(i).cloned().unwrap_or_default();
                let y = b.get(i).cloned().unwrap_or_default();
                x - y
            })
            .collect(),
    )
}

fn pmul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Rational::from(x * y);
        }
    }
    ptrim(out)
}

fn pdivrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut r = ptrim(a.to_vec());
    let db = b.len() - 1;
    let lc = b[db].clone();
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut q = vec![Rational::new(); r.len() - db];
    while r.len() > db && !r.is_empty() {
        let k = r.len() - 1 - db;
        let c = Rational::from(&r[r.len() - 1] / &lc);
        for (i, y) in b.iter().enumerate() {
            r[k + i] -= Rational::from(&c * y);
        }
        q[k] = c;
        r = ptrim(r);
    }
    (ptrim(q), r)
}

fn pmonic(a: Vec<Rational>) -> Vec<Rational> {
    match a.last().cloned() {
        Some(lc) => a.into_iter().map(|x| x / &lc).collect(),
        None => a,
    }
}

fn pgcd(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let (mut x, mut y) = (ptrim(a.to_vec()), ptrim(b.to_vec()));
    while !y.is_empty() {
        let r = pdivrem(&x, &y).1;
        x = y;
        y = r;
    }
    pmonic(x)
}

fn pderiv(a: &[Rational]) -> Vec<Rational> {
    ptrim(a.iter().enumerate().skip(1).map(|(i, c)| Rational::from(c * i as u32)).collect())
}

/// Inverse of `a` modulo a squarefree `m` coprime to it.
fn pinvmod(a: &[Rational], m: &[Rational]) -> Result<Vec<Rational>> {
    let (mut r0, mut r1) = (m.to_vec(), pdivrem(a, m).1);
    let (mut s0, mut s1) = (Vec::<Rational>::new(), vec![Rational::from(1)]);
    while !r1.is_empty() {
        let (q, r) = pdivrem(&r0, &r1);
        let s = psub(&s0, &pmul(&q, &s1));
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s;
    }
    if r0.len() != 1 {
        return Err(Error::InternalInconsistency("support polynomial is not squarefree".into()));
    }
    let inv = Rational::from(r0[0].recip_ref());
    Ok(pdivrem(&s0.iter().map(|x| Rational::from(x * &inv)).collect::<Vec<_>>(), m).1)
}

/// Berlekamp-Massey over `Q`: the shortest `c = 1 + c_1 t + ... + c_r t^r`
/// with `sum_i c_i s_(n-i) = 0` for `r <= n < len`.
fn berlekamp_massey(s: &[Rational]) -> (Vec<Rational>, usize) {
    let mut c = vec![Rational::from(1)];
    let mut b = vec![Rational::from(1)];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut bd = Rational::from(1);
    for n in 0..s.len() {
        let mut d = s[n].clone();
        for i in 1..=l.min(c.len() - 1) {
            d += Rational::from(&c[i] * &s[n - i]);
        }
        if d.cmp0() == Ordering::Equal {
            m += 1;
            continue;
        }
        let coef = Rational::from(&d / &bd);
        let mut t = c.clone();
        if t.len() < b.len() + m {
            t.resize(b.len() + m, Rational::new());
        }
        for (i, x) in b.iter().enumerate() {
            t[i + m] -= Rational::from(&coef * x);
        }
        if 2 * l <= n {
            b = c;
            l = n + 1 - l;
            bd = d;
            m = 1;
        } else {
            m += 1;
        }
        c = t;
    }
    c.resize(l + 1, Rational::new());
    (c, l)
}

/// Ordinary power sums `P_n = sum m_z j(z)^n` from the Faber sums
/// `s_n = sum m_z F_n(j(z))`, using that `F_n` is monic of degree `n`.
fn power_sums_from_faber(s: &[Rational], total: &Rational) -> Result<Vec<Rational>> {
    let mut p = vec![total.clone()];
    for n in 1..=s.len() {
        let f = faber_poly(n as u64)?;
        let mut v = s[n - 1].clone();
        for (k, c) in f.coeffs.iter().enumerate().take(n) {
            v -= Rational::from(c * &p[k]);
        }
        p.push(v);
    }
    Ok(p)
}

/// Multiplicity denominators never exceed 6.
const MAX_DENOM: i64 = 6;
/// Largest `|multiplicity|` searched for.
const MAX_MULT: i64 = 1000;

/// Recovers the divisor from `s[n-1] = sum_z (ord_z/omega_z) F_n(j(z))` for
/// `n = 1..m` and the total multiplicity. Identification needs
/// `m >= 2 r` where `r` is the number of distinct points.
pub fn divisor_solve(s: &[Rational], total: &Rational) -> Result<DivisorData> {
    let p = power_sums_from_faber(s, total)?;
    let (c, r) = berlekamp_massey(&p);
    if 2 * r + 1 > p.len() {
        return Err(Error::RankDeficient(format!(
            "{} power sums determine at most {} points; the sequence needs {r}",
            s.len(),
            s.len() / 2
        )));
    }
    if r == 0 {
        return Ok(DivisorData::default());
    }
    // Support polynomial C(x) = x^r c(1/x) and numerator R(x) of sum m/(x - x_z).
    let cx: Vec<Rational> = c.iter().rev().cloned().collect();
    let rx: Vec<Rational> = ptrim(
        (0..r)
            .map(|k| {
                let mut acc = Rational::new();
                for (n, pn) in p.iter().enumerate() {
                    if k + n + 1 > r {
                        break;
                    }
                    acc += Rational::from(&cx[k + n + 1] * pn);
                }
                acc
            })
            .collect(),
    );
    let mult = pdivrem(&pmul(&rx, &pinvmod(&pderiv(&cx), &cx)?), &cx).1;
    let mut remaining = cx.clone();
    let mut entries = Vec::new();
    'search: for num in 1..=MAX_MULT * MAX_DENOM {
        for sign in [1i64, -1] {
            let m = Rational::from((sign * num, MAX_DENOM));
            let g = pgcd(&remaining, &psub(&mult, &[m.clone()]));
            if g.len() > 1 {
                remaining = pdivrem(&remaining, &g).0;
                entries.push(DivisorEntry { factor: PolyQ::new(g), multiplicity: m });
                if remaining.len() == 1 {
                    break 'search;
                }
            }
        }
    }
    if remaining.len() != 1 {
        return Err(Error::InconsistentPowerSums(format!(
            "multiplicities at the roots of {} are not of the form k/{MAX_DENOM}",
            PolyQ::new(remaining)
        )));
    }
    entries.sort_by(|a, b| a.factor.coeffs().len().cmp(&b.factor.coeffs().len()).then(a.factor.to_string().cmp(&b.factor.to_string())));
    let out = DivisorData { entries };
    if out.total() != *total {
        return Err(Error::InconsistentPowerSums(format!("multiplicities sum to {}, expected {total}", out.total())));
    }
    Ok(out)
}

/// Numeric variant of [`divisor_solve`] for power sums of a form with
/// integral q-expansion and leading coefficient 1.
///
/// Such a divisor consists of algebraic-integer `j`-values with
/// multiplicities in `Z/6`, so each `6 P_n` is a rational integer. Every ball
/// must isolate a unique integer, which makes the result certified.
pub fn divisor_solve_ball(s: &[RealBall], total: &Rational) -> Result<DivisorData> {
    let prec = s.first().map(|b| b.prec()).unwrap_or(64);
    let mut p = vec![RealBall::from_rational(prec, total)];
    for n in 1..=s.len() {
        let f = faber_poly(n as u64)?;
        let mut v = s[n - 1].clone();
        for (k, c) in f.coeffs.iter().enumerate().take(n) {
            v = v.sub(&p[k].mul(&RealBall::from_int(prec, c.clone())));
        }
        p.push(v);
    }
    let mut exact = Vec::with_capacity(s.len());
    for (n, pn) in p.iter().enumerate().skip(1) {
        let v = pn.mul_int(MAX_DENOM);
        let lo = floor_mid(&v)?;
        let k = lo.clone() + 1u32;
        let candidates: Vec<Integer> =
            [lo, k].into_iter().filter(|z| v.contains_rational(&Rational::from(z.clone()))).collect();
        if candidates.len() != 1 {
            return Err(Error::PrecisionLoss(format!("power sum P_{n} = {pn} does not isolate a multiple of 1/{MAX_DENOM}")));
        }
        exact.push(Rational::from((candidates[0].clone(), MAX_DENOM)));
    }
    // Rebuild the Faber sums from the exact power sums.
    let mut s_exact = Vec::with_capacity(exact.len());
    let mut all = vec![total.clone()];
    all.extend(exact);
    for n in 1..all.len() {
        let f = faber_poly(n as u64)?;
        let mut v = Rational::new();
        for (k, c) in f.coeffs.iter().enumerate() {
            v += Rational::from(c * &all[k]);
        }
        s_exact.push(v);
    }
    divisor_solve(&s_exact, total)
}

fn floor_mid(v: &RealBall) -> Result<Integer> {
    if v.rad_f64() > 0.25 {
        return Err(Error::PrecisionLoss(format!("ball {v} is too wide to round")));
    }
    v.mid()
        .to_integer_round(rug::float::Round::Down)
        .map(|(z, _)| z)
        .ok_or_else(|| Error::PrecisionLoss("non-finite power sum".into()))
}

/// Both sides of `D(f|T(p)) = D(f)|T_p` through a common order.
#[derive(Clone, Debug, Serialize)]
pub struct EquivarianceReport {
    pub p: u64,
    pub weight: i64,
    pub order: i64,
    pub lhs: SeriesJson,
    pub rhs: SeriesJson,
    pub diff: SeriesJson,
    /// Set when `f` had a pole at infinity and the lift went through `f Delta^(-h)`.
    pub laurent_reduced: bool,
    pub pass: bool,
}

/// Compares `D(f|T(p))` with `D(f)|T_p` under the weight-2 rule
/// `b(n) = a(pn) + p a(n/p)` for every exponent below `order`.
///
/// For `f = q^h(1 + ...)` with `h < 0` the left side is also computed from
/// `g = f Delta^(-h)`, using `D(f) = D(g) + h D(Delta)` and `D(Delta) = 0`,
/// and both routes must agree.
pub fn dlift_equivariance_check(f: &WeightedForm<Rational>, p: u64, order: usize) -> Result<EquivarianceReport> {
    if order < 2 {
        return Err(Error::InvalidArgument("the equivariance check needs order >= 2".into()));
    }
    let n = order as i64;
    let h = f.series.lead();
    let lhs_direct = divisor_lift(&WeightedForm::new(mult_hecke(&f.series, p)?, f.weight * (p as i64 + 1))?)?;
    let mut laurent_reduced = false;
    if h < 0 {
        let dl = delta(f.series.order() as usize + 1)?;
        let g = f.series.mul(&dl.pow(-h)?)?;
        let gw = WeightedForm::new(g, f.weight - 12 * h)?;
        let via_g = divisor_lift(&WeightedForm::new(mult_hecke(&gw.series, p)?, gw.weight * (p as i64 + 1))?)?;
        let common = via_g.prec().min(lhs_direct.prec()).min(n);
        if !via_g.truncate(common)?.eq_exact(&lhs_direct.truncate(common)?) {
            return Err(Error::MethodDisagreement("the direct lift and the lift through f/Delta^h differ".into()));
        }
        laurent_reduced = true;
    }
    let rhs = hecke_prime(&divisor_lift(f)?, 2, p)?;
    if lhs_direct.prec() < n || rhs.prec() < n {
        return Err(Error::OrderUnderflow(lhs_direct.prec().min(rhs.prec()) - n));
    }
    let lhs = lhs_direct.truncate(n)?;
    let rhs = rhs.truncate(n)?;
    let diff: RSeries = lhs.sub(&rhs)?;
    let pass = diff.coeffs().iter().all(|c| c.cmp0() == Ordering::Equal);
    Ok(EquivarianceReport {
        p,
        weight: f.weight,
        order: n,
        lhs: lhs.to_json(),
        rhs: rhs.to_json(),
        diff: diff.to_json(),
        laurent_reduced,
        pass,
    })
}

/// Input order needed so that [`dlift_equivariance_check`] reaches `order`.
pub fn equivariance_input_order(p: u64, order: usize) -> usize {
    (p as usize) * (order + 2) + 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::faber;

    fn wf(s: RSeries, k: i64) -> WeightedForm<Rational> {
        WeightedForm::new(s, k).unwrap()
    }

    #[test]
    fn lift_of_delta_vanishes() {
        let d = divisor_lift(&wf(delta(41).unwrap(), 12)).unwrap();
        assert!(d.coeffs().iter().all(|c| *c == 0));
    }

    #[test]
    fn lift_of_e4_is_a_third_of_faber_at_zero() {
        let d = divisor_lift(&wf(eisenstein(4, 22).unwrap(), 4)).unwrap();
        assert_eq!(d.coeff(0).unwrap(), Rational::from((1, 3)));
        for n in 1..=20u64 {
            let fz = faber_poly(n).unwrap().eval_integer(&Integer::new());
            assert_eq!(d.coeff(n as i64).unwrap() * 3u32, fz);
        }
    }

    #[test]
    fn akn_low_terms() {
        let g = akn_generating(8).unwrap();
        assert_eq!(g.coeff(0).unwrap().to_string(), "1");
        assert_eq!(g.coeff(1).unwrap().to_string(), "L - 744");
        assert_eq!(g.coeff(2).unwrap(), faber(2, 4).unwrap().1.to_poly());
    }

    #[test]
    fn solve_known_divisors() {
        let lift = |s: RSeries, k| divisor_lift(&wf(s, k)).unwrap();
        let sums = |d: &RSeries, m: i64| (1..=m).map(|n| d.coeff(n).unwrap()).collect::<Vec<_>>();
        let e4 = lift(eisenstein(4, 12).unwrap(), 4);
        let div = divisor_solve(&sums(&e4, 6), &Rational::from((1, 3))).unwrap();
        assert_eq!(div.entries.len(), 1);
        assert_eq!(div.entries[0].jvalue(), Some(Rational::new()));
        let j = j_series(14).unwrap();
        let jm = j.sub(&RSeries::monomial(&(), Rational::from(1728), 0, 14).unwrap()).unwrap();
        let dj = lift(jm, 0);
        let div = divisor_solve(&sums(&dj, 6), &Rational::from(1)).unwrap();
        assert_eq!(div.to_string(), "1*[j=1728]");
        let zero = vec![Rational::new(); 4];
        assert!(divisor_solve(&zero, &Rational::new()).unwrap().entries.is_empty());
    }

    #[test]
    fn equivariance_e4() {
        let f = wf(eisenstein(4, equivariance_input_order(3, 40)).unwrap(), 4);
        assert!(dlift_equivariance_check(&f, 3, 40).unwrap().pass);
    }
}
