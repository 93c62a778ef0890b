//! Certified evaluation on the upper half-plane: `eta`, `j`, `J_n`, the
//! weight-0 function `J0 = log(y |eta|^4) + 1`, its Kronecker-limit partner
//! `frak f = -log(y |eta|^4)`, pointwise Hecke sums and a finite-difference
//! hyperbolic Laplacian.

use std::fmt;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Rational};

use crate::ball::{mag_log2, poly_geometric_tail, pow_up, ComplexBall, PrecisionCtx, RealBall};
use crate::error::{Error, Result};
use crate::hecke::is_prime;
use crate::qforms::reduce_to_fundamental_domain;
use crate::series::{faber_decompose, faber_poly, pentagonal_terms, RSeries};

/// Functions that [`eval_modular`] can evaluate.
#[derive(Clone, Debug)]
pub enum ModularName {
    /// The constant function 1.
    One,
    /// Dedekind eta, `q^(1/24) prod (1 - q^n)`.
    Eta,
    J,
    /// `J_n = F_n(j)`; `J_0 = 1`.
    Jn(u64),
    /// `log(y |eta(tau)|^4) + 1`.
    J0Bold,
    /// `-log(y |eta(tau)|^4)`.
    FrakF,
    /// A weakly holomorphic weight-0 series, evaluated through its
    /// decomposition into `J_n`.
    UserSeries(RSeries),
}

impl ModularName {
    /// Parses `one`, `eta`, `j`, `J<n>` (or `Jn(<n>)`), `J0bold` and `frakf`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        match lower.as_str() {
            "one" | "1" => return Ok(ModularName::One),
            "eta" => return Ok(ModularName::Eta),
            "j" if t == "j" => return Ok(ModularName::J),
            "j0bold" | "bbj0" => return Ok(ModularName::J0Bold),
            "frakf" | "frak_f" => return Ok(ModularName::FrakF),
            _ => {}
        }
        let digits = lower
            .strip_prefix("jn(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| t.strip_prefix('J'))
            .ok_or_else(|| Error::UnknownName(t.to_string()))?;
        let n: u64 = digits.trim().parse().map_err(|_| Error::UnknownName(t.to_string()))?;
        Ok(ModularName::Jn(n))
    }

    /// True for the `SL_2(Z)`-invariant names (everything except `eta`).
    pub fn is_invariant(&self) -> bool {
        !matches!(self, ModularName::Eta)
    }
}

impl fmt::Display for ModularName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModularName::One => write!(f, "one"),
            ModularName::Eta => write!(f, "eta"),
            ModularName::J => write!(f, "j"),
            ModularName::Jn(n) => write!(f, "J{n}"),
            ModularName::J0Bold => write!(f, "J0bold"),
            ModularName::FrakF => write!(f, "frakf"),
            ModularName::UserSeries(_) => write!(f, "user_series"),
        }
    }
}

/// `q = e^(2 pi i tau)` and an upper bound for `|q|`.
fn nome(tau: &ComplexBall) -> (ComplexBall, Float) {
    let q = tau.exp_2pi_i();
    let a = q.abs_upper();
    (q, a)
}

fn check_upper(tau: &ComplexBall) -> Result<()> {
    let im = tau.im();
    if im.contains_zero() || im.mid().is_sign_negative() {
        return Err(Error::PrecisionLoss("Im(tau) must be certifiably positive".into()));
    }
    Ok(())
}

/// `prod_{n >= 1} (1 - q^n)` via Euler's pentagonal series, with the tail
/// `sum_{e > E} |q|^e <= |q|^(E+1) / (1 - |q|)` added to the radius.
pub fn euler_product(q: &ComplexBall, q_abs: &Float, ctx: &PrecisionCtx) -> Result<ComplexBall> {
    let prec = q.prec();
    if *q_abs >= 1u32 {
        return Err(Error::PrecisionLoss("|q| is not below 1".into()));
    }
    let l2 = -q_abs.to_f64().log2();
    let one_minus = 1.0 - q_abs.to_f64();
    let need = (-(ctx.tail_exponent() as f64) + (1.0 / one_minus).log2() + 2.0) / l2;
    let e_max = need.ceil() as usize + 1;
    if e_max > ctx.max_terms {
        return Err(Error::PrecisionLoss(format!("eta product needs {e_max} terms")));
    }
    let terms = pentagonal_terms(e_max + 1);
    let mut acc = ComplexBall::zero(prec);
    let mut pw = ComplexBall::one(prec);
    let mut cur = 0usize;
    let mut last = 0usize;
    for (e, s) in terms {
        if e > cur {
            pw = pw.mul(&q.pow_u((e - cur) as u32));
            cur = e;
        }
        acc = if s > 0 { acc.add(&pw) } else { acc.sub(&pw) };
        last = e;
    }
    // Every exponent above `last` contributes at most |q|^e.
    let tail = pow_up(q_abs, last as u64 + 1);
    let denom = Float::with_val(64, 1u32) - q_abs;
    let tail = Float::with_val_round(64, &tail / &denom, rug::float::Round::Up).0;
    Ok(acc.add_error(&tail))
}

/// `eta(tau)` evaluated directly, without reduction.
pub fn eval_eta(tau: &ComplexBall, ctx: &PrecisionCtx) -> Result<ComplexBall> {
    check_upper(tau)?;
    let tau = tau.set_prec(ctx.bits());
    let (q, qa) = nome(&tau);
    let p = euler_product(&q, &qa, ctx)?;
    let q24 = tau.div_int(24).exp_2pi_i();
    Ok(q24.mul(&p))
}

/// `sum_{n >= 1} sigma_k(n) q^n` with a polynomial-geometric tail bound,
/// using `sigma_k(n) <= zeta(k) n^k`.
fn divisor_lambert(q: &ComplexBall, q_abs: &Float, k: u32, ctx: &PrecisionCtx) -> Result<ComplexBall> {
    let prec = q.prec();
    let zeta_bound = match k {
        3 => 1.21,
        5 => 1.04,
        _ => return Err(Error::InvalidArgument(format!("no divisor bound for k = {k}"))),
    };
    let target = ctx.tail_exponent() as i64;
    let mut acc = ComplexBall::zero(prec);
    let mut pw = ComplexBall::one(prec);
    let mut n: u64 = 0;
    loop {
        n += 1;
        pw = pw.mul(q);
        let mut sigma = rug::Integer::new();
        for d in 1..=n {
            if n % d == 0 {
                sigma += rug::Integer::from(d).pow(k);
            }
        }
        acc = acc.add(&pw.mul_integer(&sigma));
        if n % 4 == 0 {
            if let Some(t) = poly_geometric_tail(q_abs, n, k, zeta_bound) {
                if mag_log2(&t) < target {
                    return Ok(acc.add_error(&t));
                }
            }
        }
        if n as usize > ctx.max_terms {
            return Err(Error::PrecisionLoss("Eisenstein series did not converge".into()));
        }
    }
}

/// Values at a reduced point shared by the invariant evaluators.
struct Reduced {
    tau: ComplexBall,
    q: ComplexBall,
    q_abs: Float,
}

fn reduce(tau: &ComplexBall, ctx: &PrecisionCtx) -> Result<Reduced> {
    check_upper(tau)?;
    let tau = tau.set_prec(ctx.bits());
    let (t, _) = reduce_to_fundamental_domain(&tau)?;
    let (q, q_abs) = nome(&t);
    Ok(Reduced { tau: t, q, q_abs })
}

/// `j(tau) = E4^3 / Delta` with `Delta = q prod (1 - q^n)^24`, cross-checked
/// against `1728 E4^3 / (E4^3 - E6^2)`.
pub fn eval_j(tau: &ComplexBall, ctx: &PrecisionCtx) -> Result<ComplexBall> {
    let r = reduce(tau, ctx)?;
    j_at_reduced(&r, ctx)
}

fn j_at_reduced(r: &Reduced, ctx: &PrecisionCtx) -> Result<ComplexBall> {
    let prec = r.q.prec();
    let e4 = ComplexBall::one(prec).add(&divisor_lambert(&r.q, &r.q_abs, 3, ctx)?.mul_int(240));
    let e6 = ComplexBall::one(prec).sub(&divisor_lambert(&r.q, &r.q_abs, 5, ctx)?.mul_int(504));
    let e4c = e4.sqr().mul(&e4);
    let p = euler_product(&r.q, &r.q_abs, ctx)?;
    let delta_eta = r.q.mul(&p.pow_u(24));
    let j_eta = e4c.div(&delta_eta)?;
    let delta_e = e4c.sub(&e6.sqr());
    let j_e = e4c.mul_int(1728).div(&delta_e)?;
    if !j_eta.overlaps(&j_e) {
        return Err(Error::MethodDisagreement(format!("j: eta route {j_eta} vs Eisenstein route {j_e}")));
    }
    Ok(if j_eta.rad() <= j_e.rad() { j_eta } else { j_e })
}

/// `log(y |eta(tau)|^4)` at a reduced point: `log y - pi y / 3 + 4 log |P(q)|`.
fn log_y_eta4(r: &Reduced, ctx: &PrecisionCtx) -> Result<RealBall> {
    let prec = r.q.prec();
    let y = r.tau.im();
    let p = euler_product(&r.q, &r.q_abs, ctx)?;
    let lp = p.abs().ln()?;
    let piy3 = RealBall::pi(prec).mul(&y).div_int(3);
    Ok(y.ln()?.sub(&piy3).add(&lp.mul_int(4)))
}

/// Evaluates a named function at `tau`. Invariant names are evaluated at the
/// reduction of `tau` into the standard fundamental domain.
pub fn eval_modular(name: &ModularName, tau: &ComplexBall, ctx: &PrecisionCtx) -> Result<ComplexBall> {
    eval_modular_with(name, tau, ctx, name.is_invariant())
}

/// As [`eval_modular`], with explicit control over reduction. Reduction of a
/// non-invariant function is refused.
pub fn eval_modular_with(
    name: &ModularName,
    tau: &ComplexBall,
    ctx: &PrecisionCtx,
    reduce_first: bool,
) -> Result<ComplexBall> {
    let prec = ctx.bits();
    if !name.is_invariant() && reduce_first {
        return Err(Error::NotInvariant(format!("{name} is not invariant under SL2(Z)")));
    }
    if let ModularName::Eta = name {
        return eval_eta(tau, ctx);
    }
    check_upper(tau)?;
    let r = if reduce_first {
        reduce(tau, ctx)?
    } else {
        let t = tau.set_prec(prec);
        let (q, q_abs) = nome(&t);
        Reduced { tau: t, q, q_abs }
    };
    match name {
        ModularName::One | ModularName::Jn(0) => Ok(ComplexBall::one(prec)),
        ModularName::Eta => unreachable!(),
        ModularName::J => j_at_reduced(&r, ctx),
        ModularName::Jn(n) => {
            let j = j_at_reduced(&r, ctx)?;
            Ok(faber_poly(*n)?.eval_ball(&j))
        }
        ModularName::J0Bold => {
            let v = log_y_eta4(&r, ctx)?.add(&RealBall::from_int(prec, 1));
            Ok(ComplexBall::from_real(&v))
        }
        ModularName::FrakF => Ok(ComplexBall::from_real(&log_y_eta4(&r, ctx)?.neg())),
        ModularName::UserSeries(f) => {
            let (c0, terms, rem) = faber_decompose(f)?;
            if !rem.is_zero() {
                return Err(Error::NotInvariant(format!(
                    "series is not a polynomial in j through its precision (remainder {rem})"
                )));
            }
            let j = j_at_reduced(&r, ctx)?;
            let mut acc = ComplexBall::from_rational(prec, &c0);
            for (n, c) in terms {
                acc = acc.add(&faber_poly(n)?.eval_ball(&j).mul_rational(&c));
            }
            Ok(acc)
        }
    }
}

/// `p^(-k/2) sum_{i < p} g((tau + i)/p) + p^(k/2) g(p tau)`, evaluated point by point.
pub fn pointwise_hecke(
    name: &ModularName,
    k: i64,
    p: u64,
    tau: &ComplexBall,
    ctx: &PrecisionCtx,
) -> Result<ComplexBall> {
    if !is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not prime")));
    }
    if k % 2 != 0 {
        return Err(Error::InvalidArgument(format!("weight must be even, got {k}")));
    }
    let prec = ctx.bits();
    let tau = tau.set_prec(prec);
    let mut points: Vec<ComplexBall> =
        (0..p).map(|i| tau.add(&ComplexBall::from_int(prec, i as i64)).div_int(p as i64)).collect();
    points.push(tau.mul_int(p as i64));
    let values: Vec<Result<ComplexBall>> = points.par_iter().map(|z| eval_modular(name, z, ctx)).collect();
    let mut values = values.into_iter().collect::<Result<Vec<_>>>()?;
    let last = values.pop().expect("p + 1 points");
    let mut acc = ComplexBall::zero(prec);
    for v in values {
        acc = acc.add(&v);
    }
    let half = k / 2;
    let pk = Rational::from(rug::Integer::from(p)).pow_i(half);
    let pk_inv = Rational::from(1) / pk.clone();
    Ok(acc.mul_rational(&pk_inv).add(&last.mul_rational(&pk)))
}

trait PowI {
    fn pow_i(self, e: i64) -> Rational;
}

impl PowI for Rational {
    fn pow_i(self, e: i64) -> Rational {
        let mut r = Rational::from(1);
        for _ in 0..e.unsigned_abs() {
            r *= &self;
        }
        if e < 0 {
            Rational::from(1) / r
        } else {
            r
        }
    }
}

/// `Delta_0 g = -y^2 (g_xx + g_yy)` by the fourth-order five-point stencil in
/// each variable. The discretization error is `O(h^4)` and is not part of the
/// returned radius.
pub fn laplacian0_fd(name: &ModularName, tau: &ComplexBall, h: &Rational, ctx: &PrecisionCtx) -> Result<ComplexBall> {
    let prec = ctx.bits();
    let tau = tau.set_prec(prec);
    let y = tau.im();
    let hb = RealBall::from_rational(prec, h);
    if h.cmp0() != std::cmp::Ordering::Greater {
        return Err(Error::StepTooLarge(h.to_string(), "step must be positive".into()));
    }
    let quarter = y.div_int(4);
    if hb.mid() >= quarter.mid() {
        return Err(Error::StepTooLarge(h.to_string(), format!("must be below Im(tau)/4 = {}", quarter.mid_string(8))));
    }
    let hx = ComplexBall::from_real(&hb);
    let hy = ComplexBall::from_real(&hb).mul(&ComplexBall::i(prec));
    let offsets: Vec<ComplexBall> = vec![
        ComplexBall::zero(prec),
        hx.mul_int(1),
        hx.mul_int(-1),
        hx.mul_int(2),
        hx.mul_int(-2),
        hy.mul_int(1),
        hy.mul_int(-1),
        hy.mul_int(2),
        hy.mul_int(-2),
    ];
    let vals: Vec<Result<ComplexBall>> =
        offsets.par_iter().map(|o| eval_modular(name, &tau.add(o), ctx)).collect();
    let v = vals.into_iter().collect::<Result<Vec<_>>>()?;
    // (-f(+2) + 16 f(+1) - 30 f(0) + 16 f(-1) - f(-2)) / (12 h^2), for each axis.
    let second = |p1: &ComplexBall, m1: &ComplexBall, p2: &ComplexBall, m2: &ComplexBall| -> ComplexBall {
        p1.add(m1).mul_int(16).sub(&p2.add(m2)).sub(&v[0].mul_int(30))
    };
    let sx = second(&v[1], &v[2], &v[3], &v[4]);
    let sy = second(&v[5], &v[6], &v[7], &v[8]);
    let h2 = hb.sqr().mul_int(12);
    let lap = ComplexBall::from_real(&y.sqr()).mul(&sx.add(&sy)).div(&ComplexBall::from_real(&h2))?;
    Ok(lap.neg())
}

/// Parses a point written `x,y` (decimal or rational components).
pub fn parse_tau(s: &str, prec: u32) -> Result<ComplexBall> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("point '{s}' must be written x,y")))?;
    let part = |t: &str| -> Result<RealBall> {
        let t = t.trim();
        if let Ok(r) = Rational::parse(t).map(Rational::from) {
            return Ok(RealBall::from_rational(prec, &r));
        }
        RealBall::parse_decimal(prec, t)
    };
    Ok(ComplexBall::from_parts(&part(x)?, &part(y)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(v: &RealBall, expected: &str) -> bool {
        let e = RealBall::parse_decimal(v.prec(), expected).unwrap();
        let tol = 10f64.powi(-(expected.len() as i32 - 4));
        v.sub(&e).abs_upper() < tol
    }

    fn pt(x: &str, y: &str, prec: u32) -> ComplexBall {
        parse_tau(&format!("{x},{y}"), prec).unwrap()
    }

    #[test]
    fn eta_at_i() {
        let ctx = PrecisionCtx::new(40);
        let v = eval_modular(&ModularName::Eta, &pt("0", "1", ctx.bits()), &ctx).unwrap();
        assert!(close(&v.re(), "0.76822542232605665900259417957618"), "{v}");
        assert!(v.im().abs_upper() < 1e-40);
    }

    #[test]
    fn j_at_i_is_1728() {
        let ctx = PrecisionCtx::new(60);
        let v = eval_modular(&ModularName::J, &pt("0", "1", ctx.bits()), &ctx).unwrap();
        assert!(v.overlaps(&ComplexBall::from_int(ctx.bits(), 1728)));
        assert!(v.rad_f64() < 1e-40);
    }

    #[test]
    fn j0bold_at_i() {
        let ctx = PrecisionCtx::new(30);
        let v = eval_modular(&ModularName::J0Bold, &pt("0", "1", ctx.bits()), &ctx).unwrap();
        assert!(close(&v.re(), "-0.054688280995671930616768779"), "{v}");
    }

    #[test]
    fn eta_reduction_refused() {
        let ctx = PrecisionCtx::new(20);
        let r = eval_modular_with(&ModularName::Eta, &pt("0", "1", ctx.bits()), &ctx, true);
        assert!(matches!(r, Err(Error::NotInvariant(_))));
    }

    #[test]
    fn names_parse() {
        assert!(matches!(ModularName::parse("J3").unwrap(), ModularName::Jn(3)));
        assert!(matches!(ModularName::parse("Jn(2)").unwrap(), ModularName::Jn(2)));
        assert!(matches!(ModularName::parse("j").unwrap(), ModularName::J));
        assert!(ModularName::parse("zeta").is_err());
    }
}
