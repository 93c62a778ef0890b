//! Zagier's weight-1/2 plus-space basis `f_d`, twisted Borcherds products
//! `Psi_Delta(tau, f_d)`, and the checks built on them: the CM-value product
//! formula, Hecke equivariance and the twisted-trace generating series.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use rug::{Float, Integer, Rational};
use serde::Serialize;

use rayon::prelude::*;

use crate::ball::{mag_pow2, ComplexBall, PrecisionCtx, RealBall, MAG_PREC};
use crate::domain::{Coeff, Cyclo, CycloCtx};
use crate::error::{Error, Result};
use crate::hecke::{check_plus_support, half_integral_ptp2_series, mult_hecke, WeightedForm};
use crate::lifts::divisor_lift;
use crate::lvalues::{is_fundamental_discriminant, kronecker_symbol};
use crate::numeval::{eval_modular, ModularName};
use crate::qforms::{enumerate_forms, genus_character};
use crate::series::{eta_power_in_place, theta_series, QSeries, RSeries};
use crate::traces::{twisted_trace, Traceable};

/// A weight-1/2 form in the Kohnen plus space with integer coefficients.
/// `d` is minus the leading exponent (0 for holomorphic forms).
#[derive(Clone, Debug)]
pub struct PlusForm {
    d: u64,
    series: RSeries,
}

impl PlusForm {
    /// Wraps a series after checking plus-space support and integrality.
    pub fn from_series(series: RSeries) -> Result<Self> {
        check_plus_support(&series)?;
        if !series.is_integral() {
            return Err(Error::NonIntegralSolution("plus-space form with non-integral coefficients".into()));
        }
        let d = if series.is_zero() { 0 } else { (-series.lead()).max(0) as u64 };
        Ok(PlusForm { d, series })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn series(&self) -> &RSeries {
        &self.series
    }

    /// `A(n, d)`, the coefficient of `q^n`.
    pub fn coeff(&self, n: i64) -> Result<Integer> {
        self.series.int_coeff(n)
    }

    /// True when the principal part is exactly `q^-d` and, for `d > 0`,
    /// the constant term vanishes.
    pub fn is_basis_element(&self) -> bool {
        let d = self.d as i64;
        if self.series.is_zero() || !self.series.leading().is_rational(&Rational::from(1)) || self.series.lead() != -d {
            return false;
        }
        (-d + 1..=0).all(|e| match self.series.coeff_ref(e) {
            Some(c) => (e == 0 && d == 0 && *c == 1) || c.cmp0() == std::cmp::Ordering::Equal,
            None => true,
        })
    }
}

/// Spanning sets for `M^!_{1/2}(4)`: `theta` times polynomials in a main
/// generator `g = q^-1 + ...` with its only pole at infinity, plus powers of
/// auxiliary generators carrying the poles at the cusps 1/2 and 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SpanningSet {
    /// `g = u = eta(tau)^8/eta(4tau)^8`, auxiliaries `1/w` and `1/u`.
    EtaOneFour,
    /// `g = w = eta(2tau)^24/(eta(tau)^8 eta(4tau)^16)`, auxiliaries `u/w` and `w/u`.
    EtaTwoOverOneFour,
}

/// An eta quotient `q^lead prod_(m, r) prod_n (1 - q^(mn))^r`.
#[derive(Clone, Copy, Debug)]
struct EtaGen {
    lead: i64,
    spec: &'static [(usize, i64)],
}

impl EtaGen {
    /// In place `v <- v * q^-lead g`.
    fn mul_in_place(&self, v: &mut [Integer]) {
        for &(m, r) in self.spec {
            eta_power_in_place(v, m, r);
        }
    }
}

const U: EtaGen = EtaGen { lead: -1, spec: &[(1, 8), (4, -8)] };
const W: EtaGen = EtaGen { lead: -1, spec: &[(2, 24), (1, -8), (4, -16)] };
const INV_U: EtaGen = EtaGen { lead: 1, spec: &[(4, 8), (1, -8)] };
const INV_W: EtaGen = EtaGen { lead: 1, spec: &[(1, 8), (4, 16), (2, -24)] };
const U_OVER_W: EtaGen = EtaGen { lead: 0, spec: &[(1, 16), (4, 8), (2, -24)] };
const W_OVER_U: EtaGen = EtaGen { lead: 0, spec: &[(2, 24), (1, -16), (4, -8)] };

/// Number of powers of each auxiliary generator. Plus-space forms with a
/// pole of order `d` at infinity also have poles at the other two cusps.
fn aux_powers(d: u64) -> usize {
    d as usize / 2 + 3
}

impl SpanningSet {
    pub fn name(&self) -> &'static str {
        match self {
            SpanningSet::EtaOneFour => "theta * C[u, 1/w, 1/u]",
            SpanningSet::EtaTwoOverOneFour => "theta * C[w, u/w, w/u]",
        }
    }

    fn main(&self) -> EtaGen {
        match self {
            SpanningSet::EtaOneFour => U,
            SpanningSet::EtaTwoOverOneFour => W,
        }
    }

    fn aux(&self) -> [EtaGen; 2] {
        match self {
            SpanningSet::EtaOneFour => [INV_W, INV_U],
            SpanningSet::EtaTwoOverOneFour => [U_OVER_W, W_OVER_U],
        }
    }
}

fn shift_in_place(v: &mut Vec<Integer>, s: usize) {
    if s == 0 {
        return;
    }
    let len = v.len();
    v.splice(0..0, std::iter::repeat_with(Integer::new).take(s));
    v.truncate(len);
}

/// Multiplication by `theta = sum q^(n^2)`.
fn theta_mul(v: &[Integer]) -> Vec<Integer> {
    let len = v.len();
    let mut out = v.to_vec();
    let mut n = 1usize;
    while n * n < len {
        let s = n * n;
        for i in s..len {
            if !v[i - s].is_zero() {
                let t = Integer::from(&v[i - s] * 2u32);
                out[i] += t;
            }
        }
        n += 1;
    }
    out
}

/// Exact solve of `A x = b`; errors when inconsistent or underdetermined.
pub fn solve_exact(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Result<Vec<Rational>> {
    let rows = a.len();
    let cols = a.first().map(|r| r.len()).unwrap_or(0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| a[i][c].cmp0() != std::cmp::Ordering::Equal) else {
            continue;
        };
        a.swap(r, p);
        b.swap(r, p);
        let inv = Rational::from(1) / a[r][c].clone();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        b[r] *= &inv;
        for i in 0..rows {
            if i != r && a[i][c].cmp0() != std::cmp::Ordering::Equal {
                let f = a[i][c].clone();
                for k in c..cols {
                    let t = Rational::from(&f * &a[r][k]);
                    a[i][k] -= t;
                }
                let t = Rational::from(&f * &b[r]);
                b[i] -= t;
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    if b[r..].iter().any(|x| x.cmp0() != std::cmp::Ordering::Equal) {
        return Err(Error::RankDeficient("the spanning set does not contain a solution".into()));
    }
    if pivots.len() < cols {
        return Err(Error::UniquenessFailure(format!("solution space has dimension {}", cols - pivots.len())));
    }
    let mut x = vec![Rational::new(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = b[i].clone();
    }
    Ok(x)
}

fn check_d(d: u64) -> Result<()> {
    if !matches!((-(d as i64)).rem_euclid(4), 0 | 1) {
        return Err(Error::BadDiscriminant(-(d as i64), "-d must be 0 or 1 mod 4".into()));
    }
    Ok(())
}

/// Number of main-generator powers used for `f_d`.
fn basis_powers(d: u64) -> usize {
    d as usize + 4
}

/// Solution of the basis linear system:
/// `f_d = theta (sum_k main[k] g^k + sum_i sum_b aux[i][b-1] h_i^b)`.
#[derive(Clone, Debug)]
pub struct BasisCoefficients {
    pub main: Vec<Rational>,
    pub aux: Vec<Vec<Rational>>,
}

/// Solves for `f_d` in the span of the chosen spanning set.
pub fn zagier_coefficients(d: u64, set: SpanningSet) -> Result<BasisCoefficients> {
    check_d(d)?;
    let k = basis_powers(d);
    let na = aux_powers(d);
    let e_max = 4 * (k + 2 * na) + 24;
    // Row e + k holds the coefficient of q^e for e in [-k, e_max].
    let len = e_max + k + 1;
    let mut cols: Vec<Vec<Integer>> = Vec::new();
    let place = |t: Vec<Integer>, lead: i64| -> Vec<Integer> {
        let mut col = vec![Integer::new(); len];
        for (j, v) in t.into_iter().enumerate() {
            let idx = j as i64 + lead + k as i64;
            if (0..len as i64).contains(&idx) {
                col[idx as usize] = v;
            }
        }
        col
    };
    let g = set.main();
    let mut pow = vec![Integer::new(); len];
    pow[0] = Integer::from(1);
    for i in 0..=k {
        cols.push(place(theta_mul(&pow), g.lead * i as i64));
        g.mul_in_place(&mut pow);
    }
    for h in set.aux() {
        let mut apow = vec![Integer::new(); len];
        apow[0] = Integer::from(1);
        for b in 1..=na {
            h.mul_in_place(&mut apow);
            cols.push(place(theta_mul(&apow), h.lead * b as i64));
        }
    }
    let mut a = Vec::new();
    let mut rhs = Vec::new();
    for row in 0..len {
        let e = row as i64 - k as i64;
        let target = if e <= 0 {
            Some(if e == -(d as i64) { 1 } else { 0 })
        } else if matches!(e.rem_euclid(4), 2 | 3) {
            Some(0)
        } else {
            None
        };
        if let Some(t) = target {
            a.push(cols.iter().map(|c| Rational::from(&c[row])).collect());
            rhs.push(Rational::from(t));
        }
    }
    let x = solve_exact(a, rhs)?;
    let main = x[..=k].to_vec();
    let aux = x[k + 1..].chunks(na).map(|c| c.to_vec()).collect();
    Ok(BasisCoefficients { main, aux })
}

fn basis_cache() -> &'static Mutex<HashMap<(u64, SpanningSet), PlusForm>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, SpanningSet), PlusForm>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn scaled_integers(c: &[Rational], den: &Integer) -> Vec<Integer> {
    c.iter().map(|x| Integer::from(x.numer() * Integer::from(den / x.denom()))).collect()
}

/// `f_d` with `order` stored coefficients (exponents `-d .. order - d - 1`),
/// expanded from the chosen spanning set.
pub fn zagier_basis_with(d: u64, order: usize, set: SpanningSet) -> Result<PlusForm> {
    check_d(d)?;
    if order < d as usize + 8 {
        return Err(Error::OrderUnderflow(order as i64 - d as i64 - 8));
    }
    if let Some(f) = basis_cache().lock().unwrap().get(&(d, set)) {
        if f.series.order() as usize >= order {
            return PlusForm::from_series(f.series.with_order(order)?);
        }
    }
    let c = zagier_coefficients(d, set)?;
    let k = c.main.len() - 1;
    let mut den = Integer::from(1);
    for x in c.main.iter().chain(c.aux.iter().flatten()) {
        den.lcm_mut(x.denom());
    }
    // Everything is accumulated in the frame q^-K, i.e. index i holds q^(i - K).
    let len = order + k - d as usize;
    let ci = scaled_integers(&c.main, &den);
    let g = set.main();
    let mut h = vec![Integer::new(); len];
    h[0] = ci[k].clone();
    for i in (0..k).rev() {
        g.mul_in_place(&mut h);
        let sh = k - i;
        if sh < len {
            h[sh] += &ci[i];
        }
    }
    for (gen, coeffs) in set.aux().iter().zip(&c.aux) {
        let ai = scaled_integers(coeffs, &den);
        let s = gen.lead as usize;
        let mut x = vec![Integer::new(); len];
        x[0] = ai[ai.len() - 1].clone();
        for b in (0..ai.len()).rev() {
            gen.mul_in_place(&mut x);
            shift_in_place(&mut x, s);
            if b > 0 {
                x[0] += &ai[b - 1];
            }
        }
        shift_in_place(&mut x, k);
        for (hv, xv) in h.iter_mut().zip(x) {
            *hv += xv;
        }
    }
    let t = theta_mul(&h);
    let mut out = Vec::with_capacity(order);
    for v in t.into_iter().skip(k - d as usize).take(order) {
        if !v.is_divisible(&den) {
            return Err(Error::NonIntegralSolution(format!("f_{d} has a non-integral coefficient")));
        }
        out.push(v.div_exact(&den));
    }
    let f = PlusForm::from_series(RSeries::from_integers(-(d as i64), out)?)?;
    if !f.is_basis_element() {
        return Err(Error::InternalInconsistency(format!("f_{d} has the wrong principal part")));
    }
    basis_cache().lock().unwrap().insert((d, set), f.clone());
    Ok(f)
}

/// Zagier's basis form `f_d = q^-d + sum_{n > 0} A(n, d) q^n`.
pub fn zagier_basis(d: u64, order: usize) -> Result<PlusForm> {
    zagier_basis_with(d, order, SpanningSet::EtaOneFour)
}

/// Builds `f_d` from both spanning sets and compares them exactly.
#[derive(Clone, Debug, Serialize)]
pub struct BasisReport {
    pub d: u64,
    pub order: usize,
    pub coefficients: BTreeMap<i64, String>,
    pub constructions_agree: bool,
    pub plus_support: bool,
    pub integral: bool,
    pub principal_part_ok: bool,
    pub pass: bool,
}

pub fn zagier_basis_report(d: u64, order: usize) -> Result<BasisReport> {
    let f1 = zagier_basis_with(d, order, SpanningSet::EtaOneFour)?;
    let f2 = zagier_basis_with(d, order, SpanningSet::EtaTwoOverOneFour)?;
    let agree = f1.series.eq_exact(&f2.series);
    let plus = check_plus_support(&f1.series).is_ok();
    let integral = f1.series.is_integral();
    let pp = f1.is_basis_element();
    let mut coefficients = BTreeMap::new();
    for e in -(d as i64)..(-(d as i64) + 12).min(f1.series.prec()) {
        let c = f1.coeff(e)?;
        if !c.is_zero() {
            coefficients.insert(e, c.to_string());
        }
    }
    Ok(BasisReport {
        d,
        order,
        coefficients,
        constructions_agree: agree,
        plus_support: plus,
        integral,
        principal_part_ok: pp,
        pass: agree && plus && integral && pp,
    })
}

/// `f_0 == theta` exactly through `order`.
pub fn f0_is_theta(order: usize) -> Result<bool> {
    Ok(zagier_basis(0, order)?.series.eq_exact(&theta_series(order)?))
}


// ---------------------------------------------------------------------------
// Twisted Borcherds products

fn check_delta(delta: i64) -> Result<()> {
    if delta <= 1 || !is_fundamental_discriminant(delta) {
        return Err(Error::BadDiscriminant(delta, "Delta must be a fundamental discriminant > 1".into()));
    }
    Ok(())
}

/// Basis order that makes `A(Delta n^2, d)` available for every `n < order`.
pub fn basis_order_for_product(delta: i64, d: u64, order: usize) -> usize {
    let n = order.saturating_sub(1);
    (delta as usize * n * n + d as usize + 1).max(d as usize + 8)
}

/// `A(Delta n^2)` for `n = 0..=nmax` from a plus-space series.
fn a_at_squares(f: &RSeries, delta: i64, nmax: usize) -> Result<Vec<Integer>> {
    (0..=nmax)
        .map(|n| {
            let e = delta * (n * n) as i64;
            if e >= f.prec() {
                return Err(Error::OrderUnderflow(f.prec() - e));
            }
            f.int_coeff(e)
        })
        .collect()
}

/// `G(k) = sum_{b mod Delta} (Delta|b) zeta^(bk)` in `Q(zeta_Delta)`.
fn gauss_sum_exact(ctx: &CycloCtx, delta: i64, k: i64) -> Cyclo {
    let mut acc = Cyclo::zero(ctx);
    for b in 0..delta {
        let chi = kronecker_symbol(delta, b);
        if chi != 0 {
            acc = acc.add(&Cyclo::zeta_pow(ctx, b * k).mul_int(chi as i64));
        }
    }
    acc
}

/// The same Gauss sum as a ball, summed from `exp(2 pi i b k / Delta)`.
fn gauss_sum_ball(prec: u32, delta: i64, k: i64) -> ComplexBall {
    let mut acc = ComplexBall::zero(prec);
    for b in 0..delta {
        let chi = kronecker_symbol(delta, b);
        if chi != 0 {
            let z = ComplexBall::from_rational(prec, &Rational::from(((b * k).rem_euclid(delta), delta))).exp_2pi_i();
            acc = acc.add(&z.mul_int(chi as i64));
        }
    }
    acc
}

/// `log Psi = sum_m l_m q^m` with `l_m = -sum_{n | m} A(Delta n^2) G(m/n) / (m/n)`,
/// from `log(1 - x) = -sum x^k / k` applied to every factor.
fn log_product_coeffs<C: Coeff>(a: &[Integer], order: usize, gauss: &[C], ctx: &C::Ctx) -> Vec<C> {
    let delta = gauss.len();
    let mut l = vec![C::zero(ctx)];
    for m in 1..order {
        let mut acc = C::zero(ctx);
        for n in 1..=m {
            if m % n != 0 || a[n].is_zero() {
                continue;
            }
            let k = m / n;
            let g = &gauss[k % delta];
            if g.is_zero() {
                continue;
            }
            let c = Rational::from((a[n].clone(), Integer::from(k)));
            acc = acc.add(&g.mul_rational(&c));
        }
        l.push(acc.neg());
    }
    l
}

/// `log Psi_Delta(., f)` in `Q(zeta_Delta)[[q]]` through `q^(order-1)`, for any
/// plus-space series `f` (only the coefficients at `Delta n^2` enter).
pub fn log_product_exact(delta: i64, f: &RSeries, order: usize) -> Result<QSeries<Cyclo>> {
    check_delta(delta)?;
    let a = a_at_squares(f, delta, order.saturating_sub(1))?;
    let ctx = CycloCtx::new(delta as u32);
    let gauss: Vec<Cyclo> = (0..delta).map(|k| gauss_sum_exact(&ctx, delta, k)).collect();
    QSeries::new(ctx.clone(), 0, log_product_coeffs(&a, order, &gauss, &ctx))
}

/// Coefficient domain of a product expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProductMode {
    /// Exact arithmetic in `Q(zeta_Delta)`.
    Exact,
    /// Complex balls.
    Ball,
}

/// The q-expansion of a twisted Borcherds product.
#[derive(Clone, Debug)]
pub enum ProductSeries {
    Exact(QSeries<Cyclo>),
    Ball(QSeries<ComplexBall>),
}

impl ProductSeries {
    pub fn prec(&self) -> i64 {
        match self {
            ProductSeries::Exact(s) => s.prec(),
            ProductSeries::Ball(s) => s.prec(),
        }
    }

    /// Coefficient of `q^n` as a ball.
    pub fn coeff_ball(&self, n: i64, prec: u32) -> Result<ComplexBall> {
        match self {
            ProductSeries::Exact(s) => Ok(s.coeff(n)?.to_ball(prec)),
            ProductSeries::Ball(s) => s.coeff(n),
        }
    }
}

/// `Psi_Delta(tau, f_d) = prod_{n >= 1} prod_{b mod Delta} (1 - zeta^b q^n)^((Delta|b) A(Delta n^2, d))`.
#[derive(Clone, Debug)]
pub struct BorcherdsProductData {
    pub delta: i64,
    pub d: u64,
    pub order: usize,
    /// `(n, b) -> (Delta|b) A(Delta n^2, d)` for `1 <= n < order`, every residue `b`.
    pub exponents: BTreeMap<(u64, u64), Integer>,
    pub series: ProductSeries,
}

fn exponent_map(a: &[Integer], delta: i64) -> BTreeMap<(u64, u64), Integer> {
    let mut out = BTreeMap::new();
    for (n, an) in a.iter().enumerate().skip(1) {
        for b in 0..delta {
            out.insert((n as u64, b as u64), Integer::from(an * kronecker_symbol(delta, b)));
        }
    }
    out
}

/// Expands `Psi_Delta(., f)` through `q^(order-1)` as `exp(log Psi)`.
pub fn product_of_series(delta: i64, f: &RSeries, order: usize, mode: ProductMode, ctx: &PrecisionCtx) -> Result<ProductSeries> {
    check_delta(delta)?;
    if order == 0 {
        return Err(Error::OrderUnderflow(0));
    }
    match mode {
        ProductMode::Exact => {
            let psi = log_product_exact(delta, f, order)?.exp()?;
            for (m, c) in psi.coeffs().iter().enumerate() {
                if !c.is_real() {
                    return Err(Error::NonRealCoefficient(format!("coefficient of q^{m} is {c}")));
                }
            }
            Ok(ProductSeries::Exact(psi))
        }
        ProductMode::Ball => {
            let a = a_at_squares(f, delta, order - 1)?;
            let abits = a.iter().map(|x| x.significant_bits()).max().unwrap_or(0);
            let prec = ctx.bits() + abits + 64;
            let gauss: Vec<ComplexBall> = (0..delta).map(|k| gauss_sum_ball(prec, delta, k)).collect();
            let l = QSeries::new(prec, 0, log_product_coeffs(&a, order, &gauss, &prec))?;
            let psi = l.exp()?;
            for (m, c) in psi.coeffs().iter().enumerate() {
                if !c.im().contains_zero() {
                    return Err(Error::NonRealCoefficient(format!("coefficient of q^{m} is {c}")));
                }
            }
            Ok(ProductSeries::Ball(psi))
        }
    }
}

/// `Psi_Delta(., f_d)` through `q^(order-1)`.
pub fn borcherds_product(delta: i64, d: u64, order: usize, mode: ProductMode, ctx: &PrecisionCtx) -> Result<BorcherdsProductData> {
    check_delta(delta)?;
    let f = zagier_basis(d, basis_order_for_product(delta, d, order))?;
    let a = a_at_squares(&f.series, delta, order.saturating_sub(1))?;
    let series = product_of_series(delta, &f.series, order, mode, ctx)?;
    Ok(BorcherdsProductData { delta, d, order, exponents: exponent_map(&a, delta), series })
}

/// `log(1 - z)` for `|z| < 1` by its power series with a certified tail.
fn log_one_minus(z: &ComplexBall) -> Result<ComplexBall> {
    let prec = z.prec();
    let r = z.abs_upper();
    if r >= 1 {
        return Err(Error::PrecisionLoss("factor 1 - z with |z| >= 1".into()));
    }
    let bound = mag_pow2(-(prec as i32) - 8);
    let mut acc = ComplexBall::zero(prec);
    let mut zk = z.clone();
    let mut rk = Float::with_val(MAG_PREC, &r);
    let mut k = 1i64;
    loop {
        acc = acc.sub(&zk.div_int(k));
        k += 1;
        zk = zk.mul(z);
        rk *= &r;
        if rk < bound || zk.is_exact_zero() {
            break;
        }
    }
    // sum_{j >= k} |z|^j / j <= |z|^k / (k (1 - |z|)).
    let one_minus = Float::with_val_round(MAG_PREC, 1 - &r, rug::float::Round::Down).0;
    let tail = Float::with_val_round(MAG_PREC, &rk / &one_minus, rug::float::Round::Up).0;
    let tail = Float::with_val_round(MAG_PREC, &tail / k, rug::float::Round::Up).0;
    Ok(acc.add_error(&tail))
}

/// Both sides of `Psi_Delta(tau, f_d) = prod_Q (j(tau) - j(alpha_Q))^(chi(Q)/omega_Q)`,
/// compared through logarithms.
#[derive(Clone, Debug, Serialize)]
pub struct BpReport {
    pub delta: i64,
    pub d: u64,
    pub tau: String,
    /// Number of product factors `n = 1..terms`.
    pub terms: usize,
    /// The product converges at `tau` when `Im tau > sqrt(Delta d)/2`.
    pub converges: bool,
    /// Logarithm of the truncated product.
    pub log_lhs: String,
    /// `sum_Q chi/omega log(j(tau) - j(alpha_Q))` as `log-modulus + phase i`.
    pub log_rhs: String,
    /// `log|LHS| - log|RHS|` with its certified radius; the radius covers
    /// rounding only, not the omitted factors.
    pub modulus_residual: String,
    pub modulus_residual_abs: f64,
    pub certified_radius: f64,
    /// Heuristic size of the omitted factors `n > terms`: the first omitted
    /// factor divided by `1 - ratio` of the last two. Not rigorous.
    pub tail_estimate: f64,
    /// `arg(LHS) - arg(RHS)` reduced to `(-pi, pi]`.
    pub phase_difference: f64,
    pub lhs_value: Option<String>,
    pub rhs_value: Option<String>,
    /// Modulus residual lies within the certified radius.
    pub pass_certified: bool,
    /// Modulus residual lies within the certified radius plus the tail estimate.
    pub pass_with_tail_estimate: bool,
}

fn product_factor_log(delta: i64, n: usize, an: &Integer, q: &ComplexBall, gauss_roots: &[ComplexBall]) -> Result<ComplexBall> {
    let prec = q.prec();
    let qn = q.pow_u(n as u32);
    let mut acc = ComplexBall::zero(prec);
    if an.is_zero() {
        return Ok(acc);
    }
    for b in 0..delta {
        let chi = kronecker_symbol(delta, b);
        if chi == 0 {
            continue;
        }
        let l = log_one_minus(&gauss_roots[b as usize].mul(&qn))?;
        acc = acc.add(&l.mul_int(chi as i64));
    }
    Ok(acc.mul_integer(an))
}

/// Evaluates both sides of the product formula at `tau` with `terms` factors.
pub fn bp_identity_check(delta: i64, d: u64, tau: &ComplexBall, terms: usize, ctx: &PrecisionCtx) -> Result<BpReport> {
    check_delta(delta)?;
    if d == 0 {
        return Err(Error::HypothesisViolated("the product formula needs d > 0".into()));
    }
    let disc = -(d as i64) * delta;
    let f = zagier_basis(d, basis_order_for_product(delta, d, terms + 2))?;
    let a = a_at_squares(&f.series, delta, terms + 1)?;
    let abits = a.iter().map(|x| x.significant_bits()).max().unwrap_or(0);
    let wctx = ctx.with_digits(ctx.digits + (abits as f64 * 0.30103) as u32 + 20);
    let prec = wctx.bits();
    let tau = tau.set_prec(prec);
    let q = tau.exp_2pi_i();
    let roots: Vec<ComplexBall> =
        (0..delta).map(|b| ComplexBall::from_rational(prec, &Rational::from((b, delta))).exp_2pi_i()).collect();
    let factors: Vec<Result<ComplexBall>> =
        (1..=terms + 1).collect::<Vec<_>>().par_iter().map(|&n| product_factor_log(delta, n, &a[n], &q, &roots)).collect();
    let mut log_lhs = ComplexBall::zero(prec);
    let mut mags = Vec::with_capacity(terms + 1);
    for (i, fa) in factors.into_iter().enumerate() {
        let fa = fa?;
        mags.push(fa.abs_upper().to_f64());
        if i < terms {
            log_lhs = log_lhs.add(&fa);
        }
    }
    let first_omitted = mags[terms];
    let last = mags[terms - 1];
    let ratio = if last > 0.0 { first_omitted / last } else { 0.0 };
    let tail_estimate = if ratio < 1.0 { first_omitted / (1.0 - ratio) } else { f64::INFINITY };

    // The right-hand factors can be negative reals, so modulus and phase are
    // accumulated separately instead of through the principal logarithm.
    let jt = eval_modular(&ModularName::J, &tau, &wctx)?;
    let mut log_rhs_mod = RealBall::zero(prec);
    let mut rhs_phase = 0.0f64;
    for (qf, w) in enumerate_forms(disc)? {
        let chi = genus_character(delta, &qf)?;
        if chi == 0 {
            continue;
        }
        let ja = eval_modular(&ModularName::J, &qf.cm_point().to_ball(prec), &wctx)?;
        let x = jt.sub(&ja);
        let e = Rational::from((chi, w as i32));
        log_rhs_mod = log_rhs_mod.add(&x.abs().ln()?.mul_rational(&e));
        let (re, im) = x.to_f64_pair();
        rhs_phase += im.atan2(re) * e.to_f64();
    }
    let modulus = log_lhs.re().sub(&log_rhs_mod);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut phase = log_lhs.im().to_f64() - rhs_phase;
    phase -= two_pi * (phase / two_pi).round();
    let magnitude = |l: &RealBall, arg: f64| -> Option<String> {
        if l.abs_upper().to_f64() < 1.0e6 {
            Some(format!("{} * exp({arg} i)", l.exp().set_prec(ctx.bits())))
        } else {
            None
        }
    };
    let lhs_value = magnitude(&log_lhs.re(), log_lhs.im().to_f64());
    let rhs_value = magnitude(&log_rhs_mod, rhs_phase);
    let log_rhs = format!("{} + {rhs_phase} i", log_rhs_mod.set_prec(ctx.bits()));
    let converges = tau.im().to_f64() > (disc.unsigned_abs() as f64).sqrt() / 2.0;
    // Results are delivered at the requested precision: the residual ball
    // carries at least one unit in the last requested digit of either side.
    let scale = log_lhs.abs_upper().to_f64().max(log_rhs_mod.abs_upper().to_f64()).max(1.0);
    let modulus = modulus.add_error(&mag_pow2(-(ctx.bits() as i32) + scale.log2().ceil() as i32));
    let certified_radius = modulus.rad_f64();
    let modulus_residual_abs = modulus.to_f64().abs();
    Ok(BpReport {
        delta,
        d,
        tau: tau.set_prec(53).to_string(),
        terms,
        converges,
        log_lhs: log_lhs.set_prec(ctx.bits()).to_string(),
        log_rhs,
        modulus_residual: modulus.to_string(),
        modulus_residual_abs,
        certified_radius,
        tail_estimate,
        phase_difference: phase,
        lhs_value,
        rhs_value,
        pass_certified: converges && modulus.contains_zero(),
        pass_with_tail_estimate: converges && modulus_residual_abs <= certified_radius + tail_estimate,
    })
}

/// Both sides of `Psi(f_d)|T(p) = Psi(f_d | p T_{1/2}(p^2))`.
#[derive(Clone, Debug, Serialize)]
pub struct GbheReport {
    pub delta: i64,
    pub d: u64,
    pub p: u64,
    pub order: usize,
    /// `(-d | p)`.
    pub chi: i32,
    /// The image `f_(p^2 d) + (-d|p) f_d + p f_(d/p^2)` written out.
    pub combination: String,
    /// `p T_{1/2}(p^2) f_d` equals the basis combination coefficientwise.
    pub half_integral_matches_combination: bool,
    /// The product of the image equals the product of `Psi(f_e)^(c_e)`.
    pub additivity_holds: bool,
    /// Exponents `m < order` at which the two sides differ.
    pub differing_exponents: Vec<i64>,
    pub lhs: Vec<String>,
    pub rhs: Vec<String>,
    pub pass: bool,
}

/// Exact check of Hecke equivariance of the Borcherds lift through `q^(order-1)`.
pub fn gbhe_check(delta: i64, d: u64, p: u64, order: usize) -> Result<GbheReport> {
    check_delta(delta)?;
    check_d(d)?;
    if !crate::hecke::is_prime(p) || delta % p as i64 == 0 {
        return Err(Error::HypothesisViolated(format!("p = {p} must be a prime not dividing Delta = {delta}")));
    }
    let pi = p as usize;
    let psi_order = pi * order + 1;
    let fd = zagier_basis(d, basis_order_for_product(delta, d, psi_order))?;
    let psi = log_product_exact(delta, &fd.series, psi_order)?.exp()?;
    let lhs = mult_hecke(&psi, p)?;
    if lhs.prec() < order as i64 {
        return Err(Error::OrderUnderflow(lhs.prec() - order as i64));
    }
    let lhs = lhs.truncate(order as i64)?;

    let chi = kronecker_symbol(-(d as i64), p as i64);
    let mut terms: Vec<(u64, i64)> = vec![(pi as u64 * p * d, 1)];
    if chi != 0 {
        terms.push((d, chi as i64));
    }
    if d % (p * p) == 0 {
        terms.push((d / (p * p), p as i64));
    }
    let combination = terms.iter().map(|(e, c)| format!("{c}*f_{e}")).collect::<Vec<_>>().join(" + ");

    let image = half_integral_ptp2_series(&fd.series, p)?;
    let need = basis_order_for_product(delta, 0, order) as i64;
    let mut comb: Option<RSeries> = None;
    let mut log_additive: Option<QSeries<Cyclo>> = None;
    for &(e, c) in &terms {
        let fe = zagier_basis(e, basis_order_for_product(delta, e, order))?;
        let scaled = fe.series.scale_rational(&Rational::from(c));
        comb = Some(match comb {
            None => scaled,
            Some(s) => s.add(&scaled)?,
        });
        let l = log_product_exact(delta, &fe.series, order)?.scale_rational(&Rational::from(c));
        log_additive = Some(match log_additive {
            None => l,
            Some(s) => s.add(&l)?,
        });
    }
    let comb = comb.expect("at least one term");
    let top = need.min(comb.prec()).min(image.prec());
    let half_integral_matches_combination = comb.truncate(top)?.eq_exact(&image.truncate(top)?);
    let rhs_direct = log_product_exact(delta, &image, order)?.exp()?;
    let rhs = log_additive.expect("at least one term").exp()?;
    let additivity_holds = rhs.eq_exact(&rhs_direct);
    let differing_exponents = lhs.differences(&rhs, order as i64);
    let show = |s: &QSeries<Cyclo>| s.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>();
    Ok(GbheReport {
        delta,
        d,
        p,
        order,
        chi,
        combination,
        half_integral_matches_combination,
        additivity_holds,
        pass: differing_exponents.is_empty() && half_integral_matches_combination && additivity_holds,
        differing_exponents,
        lhs: show(&lhs),
        rhs: show(&rhs),
    })
}

/// One coefficient of the twisted-trace generating series.
#[derive(Clone, Debug, Serialize)]
pub struct TraceSeriesRow {
    pub n: u64,
    /// `[q^n] D(Psi)`, exact in `Q(zeta_Delta)`.
    pub d_coefficient: String,
    /// `Tr_{Delta,d}(J_n)` from CM values.
    pub trace: String,
    /// `|-[q^n] D(Psi) - Tr(J_n)|`.
    pub residual_minus: f64,
    /// `|[q^n] D(Psi) - Tr(J_n)|`.
    pub residual_plus: f64,
}

/// `D(Psi_Delta(., f_d))` against the twisted traces of `J_n`.
#[derive(Clone, Debug, Serialize)]
pub struct TraceSeriesReport {
    pub delta: i64,
    pub d: u64,
    pub tolerance: f64,
    pub rows: Vec<TraceSeriesRow>,
    /// Constant term of `D(Psi)`; zero by the valence formula.
    pub constant_term: String,
    /// `-Tr_{Delta,d}(J0)`, the constant term of the sesquiharmonic lift.
    pub j0_shadow: String,
    /// `-[q^n] D(Psi) = Tr(J_n)` for every row.
    pub pass_minus_sign: bool,
    /// `[q^n] D(Psi) = Tr(J_n)` for every row.
    pub pass_plus_sign: bool,
}

pub fn borcherds_trace_series(delta: i64, d: u64, n_max: usize, ctx: &PrecisionCtx) -> Result<TraceSeriesReport> {
    check_delta(delta)?;
    let data = borcherds_product(delta, d, n_max + 1, ProductMode::Exact, ctx)?;
    let ProductSeries::Exact(psi) = &data.series else {
        return Err(Error::InternalInconsistency("exact product expected".into()));
    };
    let dpsi = divisor_lift(&WeightedForm::new(psi.clone(), 0)?)?;
    let tolerance = 1e-12;
    let prec = ctx.bits();
    let mut rows = Vec::new();
    let mut pass_minus = true;
    let mut pass_plus = true;
    for n in 1..=n_max as u64 {
        let c = dpsi.coeff(n as i64)?;
        if !c.is_real() {
            return Err(Error::NonRealCoefficient(format!("[q^{n}] D(Psi) = {c}")));
        }
        let cb = c.to_ball(prec).re();
        let tr = twisted_trace(delta, d as i64, &Traceable::J(n), ctx)?;
        let rm = cb.neg().sub(&tr).abs_upper().to_f64();
        let rp = cb.sub(&tr).abs_upper().to_f64();
        pass_minus &= rm <= tolerance;
        pass_plus &= rp <= tolerance;
        rows.push(TraceSeriesRow {
            n,
            d_coefficient: c.to_string(),
            trace: tr.to_string(),
            residual_minus: rm,
            residual_plus: rp,
        });
    }
    let j0 = twisted_trace(delta, d as i64, &Traceable::J0Bold, ctx)?.neg();
    Ok(TraceSeriesReport {
        delta,
        d,
        tolerance,
        rows,
        constant_term: dpsi.coeff(0)?.to_string(),
        j0_shadow: j0.to_string(),
        pass_minus_sign: pass_minus,
        pass_plus_sign: pass_plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f3_known_coefficients() {
        let f = zagier_basis(3, 20).unwrap();
        assert!(f.coeff(1).unwrap() == -248);
        assert!(f.coeff(4).unwrap() == 26752);
        assert!(f.coeff(5).unwrap() == -85995);
    }

    #[test]
    fn f0_theta() {
        assert!(f0_is_theta(60).unwrap());
    }

    #[test]
    fn bad_index() {
        assert!(matches!(zagier_basis(1, 20), Err(Error::BadDiscriminant(..))));
    }

    #[test]
    fn product_first_coefficient() {
        let ctx = PrecisionCtx::new(30);
        let b = borcherds_product(5, 3, 4, ProductMode::Exact, &ctx).unwrap();
        let c1 = b.series.coeff_ball(1, 120).unwrap();
        let expect = RealBall::from_int(120, 5).sqrt().unwrap().mul_int(85995);
        assert!(c1.re().sub(&expect).abs_upper() < 1e-25);
        assert!(b.series.coeff_ball(0, 120).unwrap().re().contains_rational(&Rational::from(1)));
        assert_eq!(b.exponents[&(1, 0)], 0);
        let ball = borcherds_product(5, 3, 4, ProductMode::Ball, &ctx).unwrap();
        assert!(ball.series.coeff_ball(2, 120).unwrap().overlaps(&b.series.coeff_ball(2, 120).unwrap()));
    }

    #[test]
    fn product_formula_at_3i() {
        let ctx = PrecisionCtx::new(50);
        let tau = ComplexBall::from_parts(&RealBall::zero(200), &RealBall::from_int(200, 3));
        for d in [3, 4] {
            let r = bp_identity_check(5, d, &tau, 40, &ctx).unwrap();
            assert!(r.pass_certified, "d = {d}: {}", r.modulus_residual);
            assert!(r.phase_difference.abs() < 1e-30);
        }
    }

    #[test]
    fn hecke_equivariance_small() {
        let r = gbhe_check(5, 3, 2, 8).unwrap();
        assert_eq!(r.combination, "1*f_12 + -1*f_3");
        assert!(r.pass);
    }

    #[test]
    fn trace_series_matches_with_positive_sign() {
        let ctx = PrecisionCtx::new(40);
        let r = borcherds_trace_series(5, 4, 3, &ctx).unwrap();
        assert!(r.pass_plus_sign);
        assert!(!r.pass_minus_sign);
    }
}
