//! Complete elliptic integral K, the elliptic nome, its inverse (the modular
//! lambda function) and the theta constants θ₂, θ₃.
//!
//! Conventions: parameter m = k², K(m) = (π/2)·₂F₁(½,½;1;m),
//! q(m) = exp(−πK(1−m)/K(m)), θ₂(q) = 2q^{1/4}Σ_{n≥0} q^{n(n+1)}, θ₃(q) = 1 + 2Σ_{n≥1} q^{n²}.

use rug::Float;
use thiserror::Error;

use crate::numerics::{BigComplex, PrecisionContext, Scalar};
use crate::series::TruncatedSeries;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("argument {0} lies on a branch cut")]
    BranchCut(String),
    #[error("argument {0} outside the domain (|q| < 1 required)")]
    Domain(String),
}

fn tiny(bits: u32) -> Float {
    Float::with_val(bits, Float::i_exp(1, -(bits as i32)))
}

/// K(m) by the arithmetic-geometric mean, principal branch (cut [1, ∞)).
pub fn elliptic_k(m: &BigComplex) -> Result<BigComplex, SpecialError> {
    let p = m.prec();
    if m.im.is_zero() && m.re >= 1 {
        return Err(SpecialError::BranchCut(m.to_string_digits(12)));
    }
    let one = BigComplex::from_int(p + 16, 1);
    let mw = m.with_prec(p + 16);
    let b0 = (&one - &mw).sqrt();
    Ok(agm_k(&b0, p))
}

/// Limit of K(m) on the cut m > 1 from above (`above = true`) or below.
pub fn elliptic_k_side(m: &Float, above: bool) -> BigComplex {
    let p = m.prec();
    let one = Float::with_val(p + 16, 1);
    // sqrt(1 - m ∓ i0) = ∓ i sqrt(m - 1)
    let s = Float::with_val(p + 16, m - &one).sqrt();
    let b0 = if above { BigComplex::new(Float::new(p + 16), -s) } else { BigComplex::new(Float::new(p + 16), s) };
    agm_k(&b0, p)
}

fn agm_k(b0: &BigComplex, p: u32) -> BigComplex {
    let w = b0.prec();
    let mut a = BigComplex::from_int(w, 1);
    let mut b = b0.clone();
    let eps = tiny(w - 4);
    for _ in 0..10_000 {
        let a1 = (&a + &b).scale(&Float::with_val(w, 0.5));
        let mut b1 = (&a * &b).sqrt();
        // right choice: |a1 - b1| <= |a1 + b1|
        let dm = (&a1 - &b1).abs();
        let dp = (&a1 + &b1).abs();
        if dm > dp {
            b1 = -&b1;
        }
        let done = (&a1 - &b1).abs() <= Float::with_val(w, &eps * a1.abs());
        a = a1;
        b = b1;
        if done {
            break;
        }
    }
    let pi = BigComplex::pi(w);
    let two_a = a.scale(&Float::with_val(w, 2));
    (pi / two_a).with_prec(p)
}

/// Maclaurin coefficients ((1/2)_j / j!)² of ₂F₁(½,½;1;m), exact-ready scalars.
pub fn k_hyper_coeffs<T: Scalar>(order: usize, like: &T) -> Vec<T> {
    let mut out = Vec::with_capacity(order);
    let mut a = like.one_like();
    for j in 0..order {
        out.push(a.clone());
        // a_{j+1} = a_j ((2j+1)/(2j+2))²
        let num = (2 * j + 1) as i64;
        let den = (2 * j + 2) as i64;
        a = a.mul_int(num * num).div_int(den * den);
    }
    out
}

/// Maclaurin series of K(m), `order` terms.
pub fn elliptic_k_series(order: usize, bits: u32) -> TruncatedSeries<BigComplex> {
    let like = BigComplex::zero(bits);
    let half_pi = BigComplex::pi(bits).scale(&Float::with_val(bits, 0.5));
    let c = k_hyper_coeffs(order, &like).into_iter().map(|a| &a * &half_pi).collect();
    TruncatedSeries::new(c).expect("order >= 1").labeled("K")
}

fn nome_direct(m: &BigComplex) -> Result<BigComplex, SpecialError> {
    let p = m.prec();
    let w = p + 32;
    let mw = m.with_prec(w);
    let one = BigComplex::from_int(w, 1);
    let k = elliptic_k(&mw)?;
    let kp = elliptic_k(&(&one - &mw))?;
    let pi = BigComplex::pi(w);
    let e = -&(&(&pi * &kp) / &k);
    Ok(e.exp().with_prec(p))
}

/// Elliptic nome q(m) = exp(−πK(1−m)/K(m)), analytic on ℂ∖[1,∞).
pub fn nome(m: &BigComplex) -> Result<BigComplex, SpecialError> {
    let p = m.prec();
    if m.is_zero() {
        return Ok(BigComplex::zero(p));
    }
    if m.im.is_zero() && m.re >= 1 {
        return Err(SpecialError::BranchCut(m.to_string_digits(12)));
    }
    if m.re.is_sign_negative() {
        // q(m/(m−1)) = −q(m)
        let w = p + 16;
        let mw = m.with_prec(w);
        let t = &mw / &(&mw - &BigComplex::from_int(w, 1));
        let q = nome_direct(&t)?;
        return Ok((-&q).with_prec(p));
    }
    nome_direct(m)
}

fn check_disk(q: &BigComplex) -> Result<(), SpecialError> {
    if q.abs() >= 1 {
        return Err(SpecialError::Domain(q.to_string_digits(12)));
    }
    Ok(())
}

fn term_cutoff(bits: u32) -> Float {
    tiny(bits + 8)
}

/// Σ_{n≥0} q^{n(n+1)} (θ₂ without its 2q^{1/4} prefactor).
fn theta2_core(q: &BigComplex) -> BigComplex {
    let p = q.prec();
    let mut sum = BigComplex::from_int(p, 1);
    // q^{n(n+1)} = q^{(n-1)n} · q^{2n}
    let mut term = BigComplex::from_int(p, 1);
    let q2 = q.square();
    let mut ratio = q2.clone();
    let cut = term_cutoff(p);
    loop {
        term = &term * &ratio;
        ratio = &ratio * &q2;
        if term.abs() < cut {
            break;
        }
        sum = &sum + &term;
    }
    sum
}

pub fn theta3(q: &BigComplex) -> Result<BigComplex, SpecialError> {
    check_disk(q)?;
    let p = q.prec();
    let mut sum = BigComplex::zero(p);
    // q^{n²} = q^{(n-1)²} · q^{2n-1}
    let mut term = BigComplex::from_int(p, 1);
    let q2 = q.square();
    let mut ratio = q.clone();
    let cut = term_cutoff(p);
    loop {
        term = &term * &ratio;
        ratio = &ratio * &q2;
        if term.abs() < cut {
            break;
        }
        sum = &sum + &term;
    }
    Ok(&BigComplex::from_int(p, 1) + &sum.scale(&Float::with_val(p, 2)))
}

pub fn theta2(q: &BigComplex) -> Result<BigComplex, SpecialError> {
    check_disk(q)?;
    let p = q.prec();
    if q.is_zero() {
        return Ok(BigComplex::zero(p));
    }
    let quarter = Float::with_val(p, 0.25);
    let pre = q.powf(&quarter).scale(&Float::with_val(p, 2));
    Ok(&pre * &theta2_core(q))
}

/// Modular lambda as a function of the nome: θ₂⁴/θ₃⁴ = 16q(Σq^{n(n+1)})⁴/θ₃⁴.
pub fn inverse_nome(q: &BigComplex) -> Result<BigComplex, SpecialError> {
    check_disk(q)?;
    let p = q.prec();
    let w = p + 16;
    let qw = q.with_prec(w);
    let c = theta2_core(&qw);
    let t3 = theta3(&qw)?;
    let r = (&c / &t3).square().square();
    Ok((&qw * &r).scale(&Float::with_val(w, 16)).with_prec(p))
}

/// Value and derivative of the inverse nome.
pub fn inverse_nome_with_derivative(q: &BigComplex) -> Result<(BigComplex, BigComplex), SpecialError> {
    check_disk(q)?;
    let p = q.prec();
    let w = p + 16;
    let qw = q.with_prec(w);
    // A = Σ q^{n(n+1)}, B = θ₃, with derivatives
    let cut = term_cutoff(w);
    let mut a = BigComplex::zero(w);
    let mut da = BigComplex::zero(w);
    let mut n: i64 = 0;
    loop {
        let e = n * (n + 1);
        let t = qw.powi(e);
        if n > 0 && t.abs() < cut {
            break;
        }
        a = &a + &t;
        if e > 0 {
            da = &da + &(&qw.powi(e - 1)).mul_int(e);
        }
        n += 1;
    }
    let mut b = BigComplex::from_int(w, 1);
    let mut db = BigComplex::zero(w);
    let mut n: i64 = 1;
    loop {
        let e = n * n;
        let t = qw.powi(e);
        if t.abs() < cut {
            break;
        }
        b = &b + &t.mul_int(2);
        db = &db + &(&qw.powi(e - 1)).mul_int(2 * e);
        n += 1;
    }
    // λ = 16 q A⁴ / B⁴
    let r = &a / &b;
    let r4 = r.square().square();
    let lam = (&qw * &r4).mul_int(16);
    // dλ/λ = 1/q + 4 A'/A − 4 B'/B
    let logd = &(&qw.recip() + &(&da / &a).mul_int(4)) - &(&db / &b).mul_int(4);
    let dlam = &lam * &logd;
    Ok((lam.with_prec(p), dlam.with_prec(p)))
}

/// λ(τ) = inverse_nome(e^{iπτ}) for Im τ > 0.
pub fn modular_lambda(tau: &BigComplex) -> Result<BigComplex, SpecialError> {
    let p = tau.prec();
    let w = p + 16;
    let pi = BigComplex::pi(w);
    let q = (&tau.with_prec(w) * &pi).mul_i().exp();
    Ok(inverse_nome(&q)?.with_prec(p))
}

/// Series of θ₂⁴/θ₃⁴ in q, exact when `T` is exact.
pub fn inverse_nome_series<T: Scalar>(order: usize, like: &T) -> TruncatedSeries<T> {
    let z = like.zero_like();
    let one = like.one_like();
    let mut a = vec![z.clone(); order];
    let mut b = vec![z.clone(); order];
    let mut n = 0usize;
    while n * (n + 1) < order {
        a[n * (n + 1)] = one.clone();
        n += 1;
    }
    b[0] = one.clone();
    let mut n = 1usize;
    while n * n < order {
        b[n * n] = like.from_int_like(2);
        n += 1;
    }
    let a = TruncatedSeries::new(a).expect("order >= 1");
    let b = TruncatedSeries::new(b).expect("order >= 1");
    let r = a.div(&b).expect("θ₃(0) = 1");
    let r4 = r.mul(&r);
    let r4 = r4.mul(&r4);
    r4.shift_up(1, order).scale(&like.from_int_like(16)).labeled("inverse nome")
}

/// Series of the nome q(m) = (m/16)·exp(−2R(m)) with
/// R = Σ a_j e_j m^j / Σ a_j m^j, a_j = ((½)_j/j!)², e_j = H_j − Σ_{i≤j} 2/(2i−1).
pub fn nome_series<T: Scalar>(order: usize, like: &T) -> TruncatedSeries<T> {
    let a = k_hyper_coeffs(order, like);
    let mut e = like.zero_like();
    let mut num = Vec::with_capacity(order);
    for (j, aj) in a.iter().enumerate() {
        if j > 0 {
            let jj = j as i64;
            e = e.add_s(&like.ratio_like(1, jj)).sub_s(&like.ratio_like(2, 2 * jj - 1));
        }
        num.push(aj.mul_s(&e));
    }
    let num = TruncatedSeries::new(num).expect("order >= 1");
    let den = TruncatedSeries::new(a).expect("order >= 1");
    let r = num.div(&den).expect("a_0 = 1");
    let ex = r.scale(&like.from_int_like(-2)).exp().expect("R(0) = 0");
    ex.shift_up(1, order).scale(&like.ratio_like(1, 16)).labeled("nome")
}

/// Convenience: context-precision K.
pub fn elliptic_k_ctx(m: &BigComplex, ctx: &PrecisionContext) -> Result<BigComplex, SpecialError> {
    elliptic_k(&m.with_prec(ctx.bits()))
}
