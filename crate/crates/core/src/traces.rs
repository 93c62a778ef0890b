//! Twisted traces `Tr_{Delta,d}(f) = sum_Q chi_Delta(Q)/omega_Q f(alpha_Q)`
//! over classes of discriminant `-d Delta`, the Hecke trace relations, and
//! the Kronecker-limit identity for `frak f = -log(y |eta|^4)`.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use rug::Rational;
use serde::Serialize;

use crate::ball::{ComplexBall, PrecisionCtx, RealBall};
use crate::error::{Error, Result};
use crate::hecke::is_prime;
use crate::lvalues::{dirichlet_l1, is_fundamental_discriminant, kronecker_symbol, regulator_product};
use crate::numeval::{eval_eta, eval_modular, ModularName};
use crate::qforms::{enumerate_forms, genus_character, mobius, BinaryQF};
use crate::series::RSeries;

/// Functions whose twisted traces can be evaluated.
#[derive(Clone, Debug)]
pub enum Traceable {
    One,
    /// `J_n`; `J_0 = 1`.
    J(u64),
    /// `log(y |eta|^4) + 1`.
    J0Bold,
    /// `-log(y |eta|^4)`.
    FrakF,
    /// A weight-0 weakly holomorphic series.
    UserSeries(RSeries),
}

impl Traceable {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match ModularName::parse(s)? {
            ModularName::One => Traceable::One,
            ModularName::Jn(n) => Traceable::J(n),
            ModularName::J => {
                return Err(Error::UnknownName("trace j - 744 as J1 instead of j".into()));
            }
            ModularName::J0Bold => Traceable::J0Bold,
            ModularName::FrakF => Traceable::FrakF,
            ModularName::Eta => return Err(Error::NotInvariant("eta is not invariant".into())),
            ModularName::UserSeries(f) => Traceable::UserSeries(f),
        })
    }

    fn name(&self) -> ModularName {
        match self {
            Traceable::One => ModularName::One,
            Traceable::J(n) => ModularName::Jn(*n),
            Traceable::J0Bold => ModularName::J0Bold,
            Traceable::FrakF => ModularName::FrakF,
            Traceable::UserSeries(f) => ModularName::UserSeries(f.clone()),
        }
    }
}

impl fmt::Display for Traceable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

fn check_pair(delta: i64, d: i64) -> Result<i64> {
    if delta < 1 || !is_fundamental_discriminant(delta) {
        return Err(Error::BadDiscriminant(delta, "Delta must be a positive fundamental discriminant".into()));
    }
    if d <= 0 || !matches!((-d).rem_euclid(4), 0 | 1) {
        return Err(Error::BadDiscriminant(-d, "-d must be a negative discriminant".into()));
    }
    Ok(-d * delta)
}

/// The classes entering `Tr_{Delta,d}` with their weights `chi/omega`.
pub fn trace_classes(delta: i64, d: i64) -> Result<Vec<(BinaryQF, u8, i32)>> {
    let disc = check_pair(delta, d)?;
    let mut out = Vec::new();
    for (q, w) in enumerate_forms(disc)? {
        let chi = genus_character(delta, &q)?;
        out.push((q, w, chi));
    }
    Ok(out)
}

/// `sum chi(Q)/omega_Q`, the exact value of `Tr_{Delta,d}(1)`.
pub fn trace_of_one(delta: i64, d: i64) -> Result<Rational> {
    let mut s = Rational::new();
    for (_, w, chi) in trace_classes(delta, d)? {
        s += Rational::from((chi, w as i32));
    }
    Ok(s)
}

/// `Tr_{Delta,d}(f)`; the imaginary part must vanish within the radius.
pub fn twisted_trace(delta: i64, d: i64, f: &Traceable, ctx: &PrecisionCtx) -> Result<RealBall> {
    let classes = trace_classes(delta, d)?;
    let ones = trace_of_one(delta, d)?;
    if delta > 1 && ones.cmp0() != std::cmp::Ordering::Equal {
        return Err(Error::InternalInconsistency(format!(
            "Tr_({delta},{d})(1) = {ones}, but a non-trivial genus character must sum to zero"
        )));
    }
    let prec = ctx.bits();
    if let Traceable::One = f {
        return Ok(RealBall::from_rational(prec, &ones));
    }
    let name = f.name();
    let terms: Vec<Result<ComplexBall>> = classes
        .par_iter()
        .filter(|(_, _, chi)| *chi != 0)
        .map(|(q, w, chi)| {
            let tau = q.cm_point().to_ball(prec);
            let v = eval_modular(&name, &tau, ctx)?;
            Ok(v.mul_rational(&Rational::from((*chi, *w as i32))))
        })
        .collect();
    let mut acc = ComplexBall::zero(prec);
    for t in terms {
        acc = acc.add(&t?);
    }
    if !acc.im().contains_zero() {
        return Err(Error::NonRealResult(format!("Tr_({delta},{d})({f}) = {acc}")));
    }
    Ok(acc.re())
}

/// `Tr_{Delta,d}(frak f)` by a second pipeline: each CM point is moved off
/// the fundamental domain by `z -> -1/(z + 1)` and `eta` is evaluated there
/// directly, so no code is shared with the reduced-point evaluator.
pub fn twisted_trace_frakf_unreduced(delta: i64, d: i64, ctx: &PrecisionCtx) -> Result<RealBall> {
    let prec = ctx.bits();
    let g = [[0, -1], [1, 1]];
    let mut acc = RealBall::zero(prec);
    for (q, w, chi) in trace_classes(delta, d)? {
        if chi == 0 {
            continue;
        }
        let z = mobius(&g, &q.cm_point().to_ball(prec))?;
        let eta = eval_eta(&z, ctx)?;
        let e2 = eta.abs().sqr();
        let v = z.im().mul(&e2.sqr()).ln()?.neg();
        acc = acc.add(&v.mul_rational(&Rational::from((chi, w as i32))));
    }
    Ok(acc)
}

/// Which side of a relation a term sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Lhs,
    Rhs,
}

/// One term `coeff * Tr_{delta,d}(f)`.
#[derive(Clone, Debug)]
pub struct TraceTerm {
    pub side: Side,
    pub coeff: Rational,
    pub delta: i64,
    pub d: i64,
    pub f: Traceable,
}

/// A formal linear relation between twisted traces.
#[derive(Clone, Debug)]
pub struct TraceRelation {
    pub terms: Vec<TraceTerm>,
    /// The traced functions are `J`-analogues of the Maass-form relation.
    pub j_analogue: bool,
}

impl fmt::Display for TraceRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: Side| -> String {
            let parts: Vec<String> = self
                .terms
                .iter()
                .filter(|t| t.side == s)
                .map(|t| format!("{}*Tr_({},{})({})", t.coeff, t.delta, t.d, t.f))
                .collect();
            if parts.is_empty() {
                "0".into()
            } else {
                parts.join(" + ")
            }
        };
        write!(f, "{} = {}", side(Side::Lhs), side(Side::Rhs))
    }
}

/// The evaluated relation.
#[derive(Clone, Debug)]
pub struct RelationCheck {
    pub lhs: RealBall,
    pub rhs: RealBall,
    pub difference: RealBall,
    pub pass: bool,
}

impl TraceRelation {
    pub fn evaluate(&self, ctx: &PrecisionCtx) -> Result<RelationCheck> {
        let prec = ctx.bits();
        let mut lhs = RealBall::zero(prec);
        let mut rhs = RealBall::zero(prec);
        for t in &self.terms {
            let v = twisted_trace(t.delta, t.d, &t.f, ctx)?.mul_rational(&t.coeff);
            match t.side {
                Side::Lhs => lhs = lhs.add(&v),
                Side::Rhs => rhs = rhs.add(&v),
            }
        }
        let difference = lhs.sub(&rhs);
        let pass = difference.contains_zero();
        Ok(RelationCheck { lhs, rhs, difference, pass })
    }
}

fn ord_p(mut n: u64, p: u64) -> u32 {
    let mut e = 0;
    while n > 0 && n % p == 0 {
        n /= p;
        e += 1;
    }
    e
}

/// Splits `d = p^(2u) d'` with `p^2` not dividing `d'`.
pub fn split_p_square(d: i64, p: u64) -> (u32, i64) {
    let p2 = (p * p) as i64;
    let mut u = 0;
    let mut dp = d;
    while dp % p2 == 0 {
        dp /= p2;
        u += 1;
    }
    (u, dp)
}

fn pow_i(p: u64, e: u32) -> i64 {
    (p as i64).pow(e)
}

/// The trace relation from the Hecke equivariance of the Borcherds lift,
/// with `J_n` in place of the sesquiharmonic functions (the `J`-analogue):
/// `sum_{t <= l} p^t Tr_{Delta,d}(J_{p^m n / p^(2t)})` equals the right-hand
/// side of the two cases `m < u` and `m >= u`, where `d = p^(2u) d'`.
pub fn trace_hecke_relation(delta: i64, d: i64, p: u64, m: u32, n: u64) -> Result<TraceRelation> {
    check_pair(delta, d)?;
    if delta <= 1 {
        return Err(Error::HypothesisViolated("Delta must exceed 1".into()));
    }
    if !is_prime(p) || delta % p as i64 == 0 {
        return Err(Error::HypothesisViolated(format!("p = {p} must be a prime not dividing Delta = {delta}")));
    }
    if n == 0 {
        return Err(Error::HypothesisViolated("n must be positive".into()));
    }
    let (u, dp) = split_p_square(d, p);
    let l = ord_p(n, p).min(m);
    let mut terms = Vec::new();
    for t in 0..=l {
        let idx = pow_i(p, m) as u64 * n / pow_i(p, 2 * t) as u64;
        terms.push(TraceTerm { side: Side::Lhs, coeff: Rational::from(pow_i(p, t)), delta, d, f: Traceable::J(idx) });
    }
    let (mi, ui) = (m as i64, u as i64);
    if mi < ui {
        for t in 0..=mi {
            let e = (2 * ui - 2 * mi + 4 * t) as u32;
            terms.push(TraceTerm {
                side: Side::Rhs,
                coeff: Rational::from(pow_i(p, (mi - t) as u32)),
                delta,
                d: pow_i(p, e) * dp,
                f: Traceable::J(n),
            });
        }
    } else {
        let chi = kronecker_symbol(-dp, p as i64) as i64;
        for t in 0..=(mi - ui) {
            let c = chi.pow((mi - ui - t) as u32) * pow_i(p, u);
            if c == 0 {
                continue;
            }
            terms.push(TraceTerm {
                side: Side::Rhs,
                coeff: Rational::from(c),
                delta,
                d: pow_i(p, (2 * t) as u32) * dp,
                f: Traceable::J(n),
            });
        }
        for t in 1..=ui {
            let e = (2 * mi - 2 * ui + 4 * t) as u32;
            terms.push(TraceTerm {
                side: Side::Rhs,
                coeff: Rational::from(pow_i(p, (ui - t) as u32)),
                delta,
                d: pow_i(p, e) * dp,
                f: Traceable::J(n),
            });
        }
    }
    Ok(TraceRelation { terms, j_analogue: true })
}

/// The `n = 0` specialization for a prime `p` not dividing `Delta d`:
/// `(p + 1) Tr_d(f) = (-d|p) Tr_d(f) + Tr_{p^2 d}(f)` for `f` in {1, J0},
/// and `Tr_{p^2 d}(frak f) = (p + 1 - (-d|p)) Tr_d(frak f)`.
pub fn trace_relation_psquare(delta: i64, d: i64, p: u64, f: &Traceable) -> Result<TraceRelation> {
    check_pair(delta, d)?;
    if delta <= 1 {
        return Err(Error::HypothesisViolated("Delta must exceed 1".into()));
    }
    if !is_prime(p) || (delta * d) % p as i64 == 0 {
        return Err(Error::HypothesisViolated(format!("p = {p} must be a prime not dividing Delta d = {}", delta * d)));
    }
    let chi = kronecker_symbol(-d, p as i64);
    let pp = p as i64;
    let d2 = pp * pp * d;
    let terms = match f {
        Traceable::One | Traceable::J(0) | Traceable::J0Bold => vec![
            TraceTerm { side: Side::Lhs, coeff: Rational::from(pp + 1), delta, d, f: f.clone() },
            TraceTerm { side: Side::Rhs, coeff: Rational::from(chi), delta, d, f: f.clone() },
            TraceTerm { side: Side::Rhs, coeff: Rational::from(1), delta, d: d2, f: f.clone() },
        ],
        Traceable::FrakF => vec![
            TraceTerm { side: Side::Lhs, coeff: Rational::from(1), delta, d: d2, f: f.clone() },
            TraceTerm { side: Side::Rhs, coeff: Rational::from(pp + 1 - chi as i64), delta, d, f: f.clone() },
        ],
        _ => {
            return Err(Error::HypothesisViolated(format!("the p-square specialization is stated for 1, J0 and frak f, not {f}")))
        }
    };
    Ok(TraceRelation { terms, j_analogue: false })
}

/// The ratio law `Tr_{Delta,p^2 d}(frak f) / Tr_{Delta,d}(frak f) = p + 1 - (-d|p)`.
#[derive(Clone, Debug)]
pub struct TraceRatioReport {
    pub delta: i64,
    pub d: i64,
    pub p: u64,
    pub factor: i64,
    pub trace_d: RealBall,
    pub trace_p2d: RealBall,
    pub residual: RealBall,
    pub pass: bool,
}

pub fn trace_ratio_check(delta: i64, d: i64, p: u64, ctx: &PrecisionCtx) -> Result<TraceRatioReport> {
    let rel = trace_relation_psquare(delta, d, p, &Traceable::FrakF)?;
    let factor = p as i64 + 1 - kronecker_symbol(-d, p as i64) as i64;
    let trace_d = twisted_trace(delta, d, &Traceable::FrakF, ctx)?;
    let trace_p2d = twisted_trace(delta, (p * p) as i64 * d, &Traceable::FrakF, ctx)?;
    let residual = trace_p2d.sub(&trace_d.mul_int(factor));
    let check = rel.evaluate(ctx)?;
    if check.pass != residual.contains_zero() {
        return Err(Error::InternalInconsistency("trace ratio evaluation is not reproducible".into()));
    }
    Ok(TraceRatioReport { delta, d, p, factor, pass: residual.contains_zero(), trace_d, trace_p2d, residual })
}

/// Both sides of `Tr_{Delta,d}(frak f) = sqrt(d) L_{-d}(1) h(Delta) log(eps_Delta) / pi`.
#[derive(Clone, Debug)]
pub struct KroneckerLimitReport {
    pub delta: i64,
    pub d: i64,
    /// Trace at reduced CM points.
    pub lhs: RealBall,
    /// Trace through unreduced points and direct `eta` evaluation.
    pub lhs_alt: RealBall,
    /// `-Tr(J0)`, which equals `lhs` because `Tr(1) = 0`.
    pub lhs_from_j0: RealBall,
    /// Right-hand side by convention, using the closed-form `L`-value and the
    /// continued-fraction unit with the counted class number.
    pub rhs: BTreeMap<String, RealBall>,
    /// Right-hand side from the character-sum `L`-values at both places.
    pub rhs_alt: RealBall,
    /// `lhs / rhs` per convention.
    pub ratio: BTreeMap<String, RealBall>,
    /// The convention under which the ratio is 1, if any.
    pub convention_with_ratio_one: Option<String>,
    pub internal_lhs_spread: f64,
    pub internal_rhs_spread: f64,
}

/// Names of the regulator conventions reported by [`kronecker_limit_check`].
pub const CONVENTIONS: [&str; 3] = ["wide", "narrow_ordinary_unit", "narrow_totally_positive_unit"];

pub fn kronecker_limit_check(delta: i64, d: i64, ctx: &PrecisionCtx) -> Result<KroneckerLimitReport> {
    if delta <= 1 || !is_fundamental_discriminant(delta) {
        return Err(Error::HypothesisViolated(format!("Delta = {delta} must be a fundamental discriminant > 1")));
    }
    if !is_fundamental_discriminant(-d) {
        return Err(Error::HypothesisViolated(format!("-d = {} must be a fundamental discriminant", -d)));
    }
    let prec = ctx.bits();
    let lhs = twisted_trace(delta, d, &Traceable::FrakF, ctx)?;
    let lhs_alt = twisted_trace_frakf_unreduced(delta, d, ctx)?;
    let lhs_from_j0 = twisted_trace(delta, d, &Traceable::J0Bold, ctx)?.neg();
    let l = dirichlet_l1(-d, ctx)?;
    let reg = regulator_product(delta, ctx)?;
    let sqrt_d = RealBall::from_int(prec, d).sqrt()?;
    let pi = RealBall::pi(prec);
    let scale = |lv: &RealBall, r: &RealBall| -> Result<RealBall> { sqrt_d.mul(lv).mul(r).div(&pi) };
    let l_closed = &l.per_method["closed_form"];
    let l_char = &l.per_method["character_sum"];
    let mut rhs = BTreeMap::new();
    rhs.insert(CONVENTIONS[0].to_string(), scale(l_closed, &reg.wide)?);
    rhs.insert(CONVENTIONS[1].to_string(), scale(l_closed, &reg.narrow_ordinary_unit)?);
    rhs.insert(CONVENTIONS[2].to_string(), scale(l_closed, &reg.narrow_totally_positive_unit)?);
    let rhs_alt = scale(l_char, &reg.character_sum)?;
    let mut ratio = BTreeMap::new();
    let mut one = None;
    for (k, v) in &rhs {
        let r = lhs.div(v)?;
        if r.contains_rational(&Rational::from(1)) && one.is_none() {
            one = Some(k.clone());
        }
        ratio.insert(k.clone(), r);
    }
    let spread = |a: &RealBall, b: &RealBall| a.sub(b).abs_upper().to_f64();
    let internal_lhs_spread = spread(&lhs, &lhs_alt).max(spread(&lhs, &lhs_from_j0));
    let internal_rhs_spread = spread(&rhs[CONVENTIONS[0]], &rhs_alt);
    Ok(KroneckerLimitReport {
        delta,
        d,
        lhs,
        lhs_alt,
        lhs_from_j0,
        rhs,
        rhs_alt,
        ratio,
        convention_with_ratio_one: one,
        internal_lhs_spread,
        internal_rhs_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_of_one_vanishes() {
        assert_eq!(trace_of_one(5, 4).unwrap(), 0);
        assert_eq!(trace_of_one(5, 3).unwrap(), 0);
        assert_eq!(trace_of_one(8, 3).unwrap(), 0);
    }

    #[test]
    fn untwisted_j1_trace_at_rho() {
        let ctx = PrecisionCtx::new(30);
        let t = twisted_trace(1, 3, &Traceable::J(1), &ctx).unwrap();
        assert!(t.contains_rational(&Rational::from(-248)) || t.sub(&RealBall::from_int(t.prec(), -248)).abs_upper() < 1e-25);
    }

    #[test]
    fn relation_shape() {
        let r = trace_hecke_relation(5, 3, 2, 1, 1).unwrap();
        assert_eq!(r.to_string(), "1*Tr_(5,3)(J2) = -1*Tr_(5,3)(J1) + 1*Tr_(5,12)(J1)");
        assert!(matches!(trace_relation_psquare(5, 3, 5, &Traceable::FrakF), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn kronecker_limit_5_4() {
        let ctx = PrecisionCtx::new(30);
        let r = kronecker_limit_check(5, 4, &ctx).unwrap();
        assert!(r.ratio["narrow_totally_positive_unit"].contains_rational(&Rational::from(1)));
        assert!(r.ratio["wide"].contains_rational(&Rational::from(2)));
        assert!(r.internal_lhs_spread < 1e-25);
    }

    #[test]
    fn j0_trace_scales_by_five() {
        let ctx = PrecisionCtx::new(30);
        let t4 = twisted_trace(5, 4, &Traceable::J0Bold, &ctx).unwrap();
        let t36 = twisted_trace(5, 36, &Traceable::J0Bold, &ctx).unwrap();
        assert!(t36.sub(&t4.mul_int(5)).contains_zero());
    }

    #[test]
    fn hecke_relation_holds() {
        let ctx = PrecisionCtx::new(40);
        for (p, m, n) in [(2, 1, 1), (2, 2, 2), (3, 1, 3)] {
            let r = trace_hecke_relation(5, 3, p, m, n).unwrap().evaluate(&ctx).unwrap();
            assert!(r.pass, "p={p} m={m} n={n}: {}", r.difference);
        }
    }
}
