//! Singularity transformation by the convolution L_β and removal of a
//! square-root branch point by composition with φ₀, φ₁ or φ₂.
//!
//! L_β F(ω) = ω^{−β} ∫₀^ω (ω−s)^β F(s) ds acts on coefficients by
//! a_k ω^k ↦ Γ(β+1)Γ(k+1)/Γ(β+k+2) a_k ω^{k+1}.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rug::{Complete, Float, Integer};
use thiserror::Error;

use crate::numerics::{bits_to_digits, digits_to_bits, BigComplex, NumericsError, Scalar, SpougeGamma};
use crate::reconstruct::{linear_fit, ln_abs};
use crate::series::{Series, SeriesError, TruncatedSeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EliminationError {
    #[error("Re β must exceed −1, got {0}")]
    Range(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("plan does not match the singularity: {0}")]
    PlanMismatch(String),
    #[error("unsupported local data: {0}")]
    UnsupportedCase(String),
    #[error("need at least {need} coefficients, got {got}")]
    Order { need: usize, got: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// The elimination maps: φ₀ = 2z−z², φ₁ = 4z/(1+z)², φ₂ = 2z/(1+z²).
/// Each sends z = 1 to ω = 1 with vanishing derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElimMap {
    Phi0,
    Phi1,
    Phi2,
}

impl ElimMap {
    pub const ALL: [ElimMap; 3] = [ElimMap::Phi0, ElimMap::Phi1, ElimMap::Phi2];

    pub fn name(&self) -> &'static str {
        match self {
            ElimMap::Phi0 => "phi0",
            ElimMap::Phi1 => "phi1",
            ElimMap::Phi2 => "phi2",
        }
    }

    pub fn eval(&self, z: &BigComplex) -> BigComplex {
        let b = z.prec();
        let one = BigComplex::from_int(b, 1);
        match self {
            ElimMap::Phi0 => z.mul_int(2).sub_s(&z.square()),
            ElimMap::Phi1 => z.mul_int(4).div_s(&(&one + z).square()),
            ElimMap::Phi2 => z.mul_int(2).div_s(&(&one + &z.square())),
        }
    }
}

impl fmt::Display for ElimMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElimMap {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "phi0" | "0" => Ok(ElimMap::Phi0),
            "phi1" | "1" => Ok(ElimMap::Phi1),
            "phi2" | "2" => Ok(ElimMap::Phi2),
            _ => Err(format!("unknown elimination map '{s}' (phi0, phi1, phi2)")),
        }
    }
}

fn check_beta(beta: &BigComplex) -> Result<(), EliminationError> {
    if beta.re <= -1i32 {
        return Err(EliminationError::Range(beta.to_string_digits(10)));
    }
    Ok(())
}

/// Γ(β+1)Γ(k+1)/Γ(β+k+2) for k = 0..n, by the product 1/(β+1) · Π j/(β+j+1).
fn l_beta_weights<T: Scalar>(beta: &T, n: usize) -> Vec<T> {
    let one = beta.one_like();
    let mut w = Vec::with_capacity(n);
    let mut r = one.div_s(&beta.add_s(&one));
    for k in 0..n {
        if k > 0 {
            let kk = beta.from_int_like(k as i64);
            r = r.mul_s(&kk).div_s(&beta.add_s(&kk).add_s(&one));
        }
        w.push(r.clone());
    }
    w
}

/// L_β on coefficients. Generic so that rational-mode linearity is exact.
pub fn l_beta_generic<T: Scalar>(p: &TruncatedSeries<T>, beta: &T) -> TruncatedSeries<T> {
    let w = l_beta_weights(beta, p.order());
    let mut c = Vec::with_capacity(p.order() + 1);
    c.push(beta.zero_like());
    c.extend(p.coeffs.iter().zip(&w).map(|(a, r)| a.mul_s(r)));
    TruncatedSeries { coeffs: c, label: p.label.clone() }
}

pub fn l_beta(p: &Series, beta: &BigComplex) -> Result<Series, EliminationError> {
    check_beta(beta)?;
    Ok(l_beta_generic(p, &beta.with_prec(p.prec())))
}

pub fn l_beta_inverse(q: &Series, beta: &BigComplex) -> Result<Series, EliminationError> {
    check_beta(beta)?;
    if !q.coeffs[0].is_zero() {
        return Err(SeriesError::NonzeroConstantTerm.into());
    }
    if q.order() < 2 {
        return Err(EliminationError::Order { need: 2, got: q.order() });
    }
    let w = l_beta_weights(&beta.with_prec(q.prec()), q.order() - 1);
    let c = q.coeffs[1..].iter().zip(&w).map(|(a, r)| a / r).collect();
    Ok(TruncatedSeries { coeffs: c, label: q.label.clone() })
}

/// Local data at ω₀ of (ω₀−ω)^α A + B, or (ω₀−ω)^α ln(ω₀−ω) A + B when
/// `log_order` is 1. A and B are expansions in powers of (ω₀−ω).
#[derive(Debug, Clone)]
pub struct LocalSingularData {
    pub location: BigComplex,
    pub alpha: BigComplex,
    pub log_order: u32,
    pub a_coeffs: Series,
    pub b_coeffs: Series,
    /// B is only known up to an added analytic function.
    pub b_modulo_analytic: bool,
}

impl LocalSingularData {
    /// A = [1], B = 0.
    pub fn simple(location: BigComplex, alpha: BigComplex, log_order: u32) -> Self {
        let b = location.prec();
        LocalSingularData {
            location,
            alpha,
            log_order,
            a_coeffs: Series::from_f64(b, &[1.0]),
            b_coeffs: Series::from_f64(b, &[0.0]),
            b_modulo_analytic: true,
        }
    }

    /// The exponent produced by the log term under L_β, or α itself.
    fn effective_alpha(&self) -> BigComplex {
        self.alpha.clone()
    }
}

fn near_integer(z: &BigComplex) -> Option<i64> {
    let b = z.prec().min(z.re.prec()).max(64);
    let tol = Float::with_val(b, Float::i_exp(1, -(b as i32) / 2));
    let r = z.re.clone().round();
    let d = Float::with_val(b, &z.re - &r).abs();
    if d <= tol && Float::with_val(b, z.im.abs_ref()) <= tol {
        r.to_i32_saturating().map(|v| v as i64)
    } else {
        None
    }
}

/// 1/Γ(z), zero at the poles.
fn rgamma(g: &SpougeGamma, z: &BigComplex) -> Result<BigComplex, NumericsError> {
    if let Some(m) = near_integer(z) {
        if m <= 0 {
            return Ok(BigComplex::zero(z.prec()));
        }
    }
    Ok(g.gamma(z)?.recip())
}

fn factorial(bits: u32, n: u64) -> Float {
    Float::with_val(bits, Integer::factorial(n as u32).complete())
}

/// Local data of L_β F at 1 from that of F at 1.
///
/// Power case: (1−ω)^{α+k} contributes Γ(β+1)Γ(−α−k−β−1)/Γ(−α−k)·(1−ω)^{α+β+1+k},
/// times the ω^{−β} prefactor re-expanded at 1. When α+β+1 is a non-negative
/// integer N the power turns into (1−ω)^N ln(1−ω). Log case (α = m ∈ ℕ):
/// ln(1−ω)(1−ω)^{m+k} contributes (−1)^{m+k+1}(m+k)!Γ(β+1)Γ(−m−k−β−1)·(1−ω)^{m+β+1+k}.
pub fn transform_local_data(d: &LocalSingularData, beta: &BigComplex) -> Result<LocalSingularData, EliminationError> {
    check_beta(beta)?;
    let bits = d.a_coeffs.prec();
    let one = BigComplex::from_int(bits, 1);
    if d.location.dist(&one) > Float::with_val(64, Float::i_exp(1, -(bits as i32) / 2)) {
        return Err(EliminationError::PlanMismatch("local data must be rescaled to ω₀ = 1".into()));
    }
    let beta = beta.with_prec(bits);
    let alpha = d.alpha.with_prec(bits);
    let g = SpougeGamma::for_bits(bits);
    let gb1 = g.gamma(&(&beta + &one))?;
    let n = d.a_coeffs.order();
    let (new_alpha, log_order, coeffs) = match d.log_order {
        0 => {
            let s = &(&alpha + &beta) + &one;
            match near_integer(&s) {
                Some(n0) if n0 >= 0 => {
                    let mut c = Vec::with_capacity(n);
                    for (k, a) in d.a_coeffs.coeffs.iter().enumerate() {
                        let nn = n0 as u64 + k as u64;
                        let sign = if nn % 2 == 0 { -1 } else { 1 };
                        let r = rgamma(&g, &(-&(&alpha + &BigComplex::from_int(bits, k as i64))))?;
                        let v = (&gb1 * &r).scale(&factorial(bits, nn).recip()).mul_int(sign);
                        c.push(&v * a);
                    }
                    (BigComplex::from_int(bits, n0), 1, c)
                }
                Some(n0) => {
                    return Err(EliminationError::UnsupportedCase(format!(
                        "α+β+1 = {n0} is a negative integer; power and log terms mix"
                    )))
                }
                None => {
                    let mut c = Vec::with_capacity(n);
                    for (k, a) in d.a_coeffs.coeffs.iter().enumerate() {
                        let kk = BigComplex::from_int(bits, k as i64);
                        let num = g.gamma(&(-&(&s + &kk)))?;
                        let r = rgamma(&g, &(-&(&alpha + &kk)))?;
                        c.push(&(&(&gb1 * &num) * &r) * a);
                    }
                    (s, 0, c)
                }
            }
        }
        1 => {
            let m = near_integer(&alpha).filter(|m| *m >= 0).ok_or_else(|| {
                EliminationError::UnsupportedCase("log term needs a non-negative integer exponent".into())
            })?;
            if near_integer(&beta).is_some() {
                return Err(EliminationError::UnsupportedCase("log term with integer β keeps its log".into()));
            }
            let mut c = Vec::with_capacity(n);
            for (k, a) in d.a_coeffs.coeffs.iter().enumerate() {
                let nn = m as u64 + k as u64;
                let sign = if nn % 2 == 0 { -1 } else { 1 };
                let arg = -&(&beta + &BigComplex::from_int(bits, nn as i64 + 1));
                let v = (&gb1 * &g.gamma(&arg)?).scale(&factorial(bits, nn)).mul_int(sign);
                c.push(&v * a);
            }
            (&(&beta + &one) + &BigComplex::from_int(bits, m), 0, c)
        }
        k => return Err(EliminationError::UnsupportedCase(format!("log order {k}"))),
    };
    if coeffs.first().map_or(true, |c| c.is_zero()) {
        return Err(EliminationError::UnsupportedCase("no singular part survives".into()));
    }
    // ω^{−β} = (1−ε)^{−β} in powers of ε = 1−ω
    let mut pre = Vec::with_capacity(n);
    let mut t = one.clone();
    for k in 0..n {
        if k > 0 {
            let kk = BigComplex::from_int(bits, k as i64 - 1);
            t = (&t * &(&beta + &kk)).div_int(k as i64);
        }
        pre.push(t.clone());
    }
    let a = TruncatedSeries::new(coeffs)?.mul(&TruncatedSeries::new(pre)?);
    Ok(LocalSingularData {
        location: d.location.clone(),
        alpha: new_alpha,
        log_order,
        a_coeffs: a,
        b_coeffs: d.b_coeffs.clone(),
        b_modulo_analytic: true,
    })
}

/// Integer coefficients of U_k(x), lowest power first.
pub fn chebyshev_u(k: usize) -> Vec<Integer> {
    let mut prev = vec![Integer::from(1)];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![Integer::new(), Integer::from(2)];
    for _ in 1..k {
        let mut next = vec![Integer::new(); cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += Integer::from(c * 2u32);
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Row m holds [y^{j−1}] of [z^m] Σ_j y^{j−1} φ(z)^j, i.e. [z^m] φ^j at index j−1.
///
/// φ₂: Σ_j y^{j−1}φ₂^j = 2z/(1−2yz+z²), so row k+1 is 2U_k(y).
/// φ₁: the same with 4z and x = 2y−1.
/// φ₀: (2z−z²)/(1−2yz+yz²) with G_k = y^{k/2}U_k(√y), G_{k+1} = y(2G_k − G_{k−1}).
fn power_table(map: ElimMap, n: usize) -> Vec<Vec<Integer>> {
    let mut rows = vec![Vec::new(); n];
    if n < 2 {
        return rows;
    }
    let poly_step = |cur: &[Integer], prev: &[Integer], mul: &dyn Fn(&[Integer]) -> Vec<Integer>| {
        let mut next = mul(cur);
        for (i, c) in prev.iter().enumerate() {
            if i >= next.len() {
                next.push(Integer::new());
            }
            next[i] -= c;
        }
        next
    };
    match map {
        ElimMap::Phi2 | ElimMap::Phi1 => {
            // x-multiplier: 2y for U_k(y), 2(2y−1) for U_k(2y−1)
            let twox = |v: &[Integer]| -> Vec<Integer> {
                let mut out = vec![Integer::new(); v.len() + 1];
                for (i, c) in v.iter().enumerate() {
                    match map {
                        ElimMap::Phi2 => out[i + 1] += Integer::from(c * 2u32),
                        _ => {
                            out[i + 1] += Integer::from(c * 4u32);
                            out[i] -= Integer::from(c * 2u32);
                        }
                    }
                }
                out
            };
            let scale = if map == ElimMap::Phi2 { 2u32 } else { 4u32 };
            let mut prev: Vec<Integer> = Vec::new();
            let mut cur = vec![Integer::from(1)];
            for k in 0..n - 1 {
                rows[k + 1] = cur.iter().map(|c| Integer::from(c * scale)).collect();
                let next = poly_step(&cur, &prev, &twox);
                prev = std::mem::replace(&mut cur, next);
            }
        }
        ElimMap::Phi0 => {
            let ytwice = |v: &[Integer]| -> Vec<Integer> {
                let mut out = vec![Integer::new(); v.len() + 1];
                for (i, c) in v.iter().enumerate() {
                    out[i + 1] += Integer::from(c * 2u32);
                }
                out
            };
            let shift = |v: Vec<Integer>| -> Vec<Integer> {
                let mut out = vec![Integer::new()];
                out.extend(v);
                out
            };
            let mut g: Vec<Vec<Integer>> = Vec::with_capacity(n);
            g.push(vec![Integer::from(1)]);
            if n > 1 {
                g.push(vec![Integer::new(), Integer::from(2)]);
            }
            while g.len() < n {
                let k = g.len();
                // y(2G_{k−1} − G_{k−2})
                let mut t = ytwice(&g[k - 1]);
                t.remove(0);
                for (i, c) in g[k - 2].iter().enumerate() {
                    t[i] -= c;
                }
                g.push(shift(t));
            }
            for m in 1..n {
                let mut row: Vec<Integer> = g[m - 1].iter().map(|c| Integer::from(c * 2u32)).collect();
                if m >= 2 {
                    for (i, c) in g[m - 2].iter().enumerate() {
                        row[i] -= c;
                    }
                }
                rows[m] = row;
            }
        }
    }
    rows
}

/// Digits lost to cancellation in the coefficient sums, about 0.77 per order.
fn cancellation_digits(n: usize) -> u32 {
    (n as f64 * 2.0 * (1.0 + std::f64::consts::SQRT_2).log10()).ceil() as u32
}

/// p∘φ to p.order() terms from the integer power tables.
pub fn chebyshev_compose(p: &Series, map: ElimMap) -> Series {
    let n = p.order();
    let bits = p.prec();
    let work = digits_to_bits(bits_to_digits(bits) + cancellation_digits(n)).max(bits);
    let table = power_table(map, n);
    let a: Vec<BigComplex> = p.coeffs.iter().map(|c| c.with_prec(work)).collect();
    let mut out = Vec::with_capacity(n);
    out.push(p.coeffs[0].clone());
    for row in table.iter().skip(1) {
        let mut re = Float::new(work);
        let mut im = Float::new(work);
        for (l, t) in row.iter().enumerate() {
            if *t == 0 {
                continue;
            }
            let aj = &a[l + 1];
            re += Float::with_val(work, &aj.re * t);
            im += Float::with_val(work, &aj.im * t);
        }
        out.push(BigComplex::new(re, im).with_prec(bits));
    }
    TruncatedSeries { coeffs: out, label: p.label.clone() }
}

/// β and elimination map sending the singularity to a square-root branch point.
#[derive(Debug, Clone)]
pub struct EliminationPlan {
    pub beta: BigComplex,
    /// odd k with α+β+1 = k/2
    pub target_k: i64,
    pub map: ElimMap,
}

impl EliminationPlan {
    /// Smallest odd k with Re β > −1.
    pub fn canonical(d: &LocalSingularData, map: ElimMap) -> Result<Self, EliminationError> {
        let bits = d.alpha.prec();
        let alpha = d.effective_alpha();
        if d.log_order == 1 && near_integer(&alpha).filter(|m| *m >= 0).is_none() {
            return Err(EliminationError::UnsupportedCase("log term needs a non-negative integer exponent".into()));
        }
        let mut k = 1i64;
        loop {
            let beta = &(&BigComplex::from_f64(bits, k as f64 / 2.0, 0.0) - &BigComplex::from_int(bits, 1)) - &alpha;
            if beta.re > -1i32 {
                return Ok(EliminationPlan { beta, target_k: k, map });
            }
            k += 2;
        }
    }

    fn check(&self, d: &LocalSingularData) -> Result<(), EliminationError> {
        check_beta(&self.beta)?;
        if self.target_k % 2 == 0 {
            return Err(EliminationError::PlanMismatch(format!("k = {} is even", self.target_k)));
        }
        let bits = self.beta.prec();
        let s = &(&d.effective_alpha().with_prec(bits) + &self.beta) + &BigComplex::from_int(bits, 1);
        let want = BigComplex::from_f64(bits, self.target_k as f64 / 2.0, 0.0);
        if s.dist(&want) > Float::with_val(64, Float::i_exp(1, -(bits as i32) / 2)) {
            return Err(EliminationError::PlanMismatch(format!(
                "α+β+1 = {} but the plan targets {}/2",
                s.to_string_digits(12),
                self.target_k
            )));
        }
        if d.log_order == 1 && near_integer(&self.beta).is_some() {
            return Err(EliminationError::PlanMismatch("log singularity needs non-integer β".into()));
        }
        let one = BigComplex::from_int(d.location.prec(), 1);
        if d.location.dist(&one) > Float::with_val(64, Float::i_exp(1, -(bits as i32) / 2)) {
            return Err(EliminationError::PlanMismatch("singularity must be rescaled to ω₀ = 1".into()));
        }
        Ok(())
    }
}

/// chebyshev_compose(L_β p, φ): order n+1, analytic at z = 1 when the plan fits.
pub fn eliminate(p: &Series, d: &LocalSingularData, plan: &EliminationPlan) -> Result<Series, EliminationError> {
    plan.check(d)?;
    Ok(chebyshev_compose(&l_beta(p, &plan.beta)?, plan.map))
}

/// p(ω₀ω): puts a singularity at ω₀ onto ω = 1.
pub fn rescale(p: &Series, omega0: &BigComplex) -> Series {
    let mut t = BigComplex::from_int(p.prec(), 1);
    let w = omega0.with_prec(p.prec());
    let c = p
        .coeffs
        .iter()
        .map(|a| {
            let v = a * &t;
            t = &t * &w;
            v
        })
        .collect();
    TruncatedSeries { coeffs: c, label: p.label.clone() }
}

#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub omega0: BigComplex,
    pub alpha: BigComplex,
    /// (1−ω/ω₀)^α ln(1−ω/ω₀) rather than a pure power
    pub log: bool,
}

#[derive(Debug, Clone)]
pub struct ProbeScore {
    pub hypothesis: Hypothesis,
    pub beta: BigComplex,
    /// log10 of the radius gain (negated) plus the RMS scatter, in decades
    pub score: f64,
    pub analytic: bool,
    pub radius_before: f64,
    pub radius_after: f64,
}

/// Radius-gain threshold (decades) below which a hypothesis counts as eliminated.
pub const ANALYTIC_THRESHOLD: f64 = -0.1;

/// Slope and RMS residual of log10|b_k| over the top quartile, noise skipped.
/// `lost` digits of the input are already gone to amplification.
fn tail_fit(b: &Series, lost: f64) -> Option<(f64, f64)> {
    let n = b.order();
    let digits = bits_to_digits(b.prec()) as f64 - lost;
    let logs: Vec<f64> = b.coeffs.iter().map(|c| ln_abs(c) / std::f64::consts::LN_10).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = top - (digits - 5.0);
    let idx: Vec<usize> = (n - n / 4..n).filter(|&k| logs[k].is_finite() && logs[k] > floor).collect();
    if idx.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = idx.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = idx.iter().map(|&k| logs[k]).collect();
    let (s, c) = linear_fit(&xs, &ys);
    let rms = (xs.iter().zip(&ys).map(|(x, y)| (y - s * x - c).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
    Some((s, rms))
}

/// Heuristic scan: for each hypothesis, eliminate with the canonical φ₀ plan and
/// compare the tail decay before and after. Sorted by score, lowest first.
pub fn probe(p: &Series, grid: &[Hypothesis]) -> Result<Vec<ProbeScore>, EliminationError> {
    if p.order() < 20 {
        return Err(EliminationError::Order { need: 20, got: p.order() });
    }
    let digits = bits_to_digits(p.prec()) as f64;
    if digits <= cancellation_digits(p.order() + 1) as f64 + 10.0 {
        return Err(EliminationError::UnsupportedCase(format!(
            "{digits} digits cannot carry {} terms through the composition",
            p.order()
        )));
    }
    let mut scored: Vec<(usize, ProbeScore)> = grid
        .par_iter()
        .enumerate()
        .map(|(i, h)| -> Result<(usize, ProbeScore), EliminationError> {
            let bits = p.prec();
            let d = LocalSingularData::simple(BigComplex::from_int(bits, 1), h.alpha.with_prec(bits), h.log as u32);
            let plan = EliminationPlan::canonical(&d, ElimMap::Phi0)?;
            let pr = rescale(p, &h.omega0);
            // input rounding grows like (1+√2)^{2k} through the composition
            let lost = cancellation_digits(p.order() + 1) as f64;
            let before = tail_fit(&chebyshev_compose(&pr, plan.map), lost);
            let after = tail_fit(&eliminate(&pr, &d, &plan)?, lost);
            let vanished = -digits;
            let (score, rb, ra) = match (before, after) {
                (Some((sb, _)), Some((sa, dev))) => (sa - sb + dev, 10f64.powf(-sb), 10f64.powf(-sa)),
                (Some((sb, _)), None) => (vanished, 10f64.powf(-sb), f64::INFINITY),
                (None, Some((sa, dev))) => (dev.max(0.0) + 1.0, f64::INFINITY, 10f64.powf(-sa)),
                (None, None) => (0.0, f64::INFINITY, f64::INFINITY),
            };
            Ok((
                i,
                ProbeScore {
                    hypothesis: h.clone(),
                    beta: plan.beta,
                    score,
                    analytic: score < ANALYTIC_THRESHOLD,
                    radius_before: rb,
                    radius_after: ra,
                },
            ))
        })
        .collect::<Result<_, _>>()?;
    scored.sort_by(|a, b| a.1.score.total_cmp(&b.1.score).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().map(|x| x.1).collect())
}
