//! Multiprecision real/complex arithmetic and the complex gamma function.
//!
//! Reals are MPFR floats (`rug::Float`); complex numbers are pairs of them.
//! Every value carries its own binary precision, and binary operations
//! produce results at the precision of the left operand.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::{Constant, Round};
use rug::ops::Pow;
use rug::{Assign, Float, Integer, Rational};
use thiserror::Error;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("precision must be at least 15 digits, got {0}")]
    Range(u32),
    #[error("gamma has a pole at {0}")]
    Pole(String),
    #[error("cannot parse number {0:?}")]
    Parse(String),
}

/// Working precision: `digits` are reported, `digits + guard_digits` are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrecisionContext {
    pub digits: u32,
    pub guard_digits: u32,
}

pub fn with_precision(digits: u32) -> Result<PrecisionContext, NumericsError> {
    PrecisionContext::new(digits)
}

impl PrecisionContext {
    pub fn new(digits: u32) -> Result<Self, NumericsError> {
        if digits < 15 {
            return Err(NumericsError::Range(digits));
        }
        let guard = std::cmp::max(10, digits.div_ceil(10));
        Ok(PrecisionContext { digits, guard_digits: guard })
    }

    /// Same context with `extra` more reported digits (guard recomputed).
    pub fn elevated(&self, extra: u32) -> Self {
        PrecisionContext::new(self.digits + extra).expect("digits only grow")
    }

    /// Binary precision used for arithmetic.
    pub fn bits(&self) -> u32 {
        digits_to_bits(self.digits + self.guard_digits)
    }

    /// 10^{-digits}, handy as a tolerance.
    pub fn eps(&self) -> f64 {
        10f64.powi(-(self.digits as i32))
    }

    pub fn zero(&self) -> BigComplex {
        BigComplex::zero(self.bits())
    }

    pub fn real(&self, x: f64) -> BigComplex {
        BigComplex::from_f64(self.bits(), x, 0.0)
    }

    pub fn int(&self, n: i64) -> BigComplex {
        BigComplex::from_int(self.bits(), n)
    }

    pub fn pi(&self) -> Float {
        Float::with_val(self.bits(), Constant::Pi)
    }

    pub fn float(&self, x: f64) -> Float {
        Float::with_val(self.bits(), x)
    }

    pub fn parse(&self, s: &str) -> Result<BigComplex, NumericsError> {
        BigComplex::parse(s, self.bits())
    }
}

pub fn digits_to_bits(digits: u32) -> u32 {
    (digits as f64 * LOG2_10).ceil() as u32 + 8
}

pub fn bits_to_digits(bits: u32) -> u32 {
    (bits as f64 / LOG2_10).floor() as u32
}

/// Number of decimal digits that make a float round-trip bit-exactly.
pub fn roundtrip_digits(bits: u32) -> usize {
    (bits as f64 / LOG2_10).ceil() as usize + 2
}

/// Decimal scientific string with `digits` significant digits, nearest-even.
pub fn format_float(x: &Float, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x.is_sign_negative() { "-inf".into() } else { "inf".into() };
    }
    if x.is_zero() {
        return if x.is_sign_negative() { "-0e0".into() } else { "0e0".into() };
    }
    let (neg, mant, exp) = x.to_sign_string_exp_round(10, Some(digits.max(1)), Round::Nearest);
    let exp = exp.expect("finite nonzero float has an exponent") - 1;
    let mant = mant.trim_end_matches('0');
    let mut out = String::with_capacity(mant.len() + 8);
    if neg {
        out.push('-');
    }
    out.push_str(&mant[..1]);
    if mant.len() > 1 {
        out.push('.');
        out.push_str(&mant[1..]);
    }
    out.push('e');
    out.push_str(&exp.to_string());
    out
}

pub fn parse_float(s: &str, bits: u32) -> Result<Float, NumericsError> {
    let t = s.trim();
    match Float::parse(t) {
        Ok(v) => Ok(Float::with_val(bits, v)),
        Err(_) => {
            // exact rationals "p/q"
            match Rational::from_str_radix(t, 10) {
                Ok(q) => Ok(Float::with_val(bits, &q)),
                Err(_) => Err(NumericsError::Parse(s.to_string())),
            }
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct BigComplex {
    pub re: Float,
    pub im: Float,
}

impl fmt::Debug for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_digits(20))
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = f.precision().unwrap_or(bits_to_digits(self.prec()) as usize);
        write!(f, "{}", self.to_string_digits(d))
    }
}

impl BigComplex {
    pub fn new(re: Float, im: Float) -> Self {
        BigComplex { re, im }
    }

    pub fn zero(bits: u32) -> Self {
        BigComplex { re: Float::new(bits), im: Float::new(bits) }
    }

    pub fn from_f64(bits: u32, re: f64, im: f64) -> Self {
        BigComplex { re: Float::with_val(bits, re), im: Float::with_val(bits, im) }
    }

    pub fn from_int(bits: u32, n: i64) -> Self {
        BigComplex { re: Float::with_val(bits, n), im: Float::new(bits) }
    }

    pub fn from_real(re: Float) -> Self {
        let im = Float::new(re.prec());
        BigComplex { re, im }
    }

    pub fn from_rational(bits: u32, q: &Rational) -> Self {
        BigComplex { re: Float::with_val(bits, q), im: Float::new(bits) }
    }

    pub fn i(bits: u32) -> Self {
        BigComplex::from_f64(bits, 0.0, 1.0)
    }

    pub fn pi(bits: u32) -> Self {
        BigComplex::from_real(Float::with_val(bits, Constant::Pi))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn with_prec(&self, bits: u32) -> Self {
        BigComplex { re: Float::with_val(bits, &self.re), im: Float::with_val(bits, &self.im) }
    }

    pub fn set_prec(&mut self, bits: u32) {
        self.re.set_prec(bits);
        self.im.set_prec(bits);
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn from_c64(bits: u32, z: num_complex::Complex64) -> Self {
        BigComplex::from_f64(bits, z.re, z.im)
    }

    pub fn conj(&self) -> Self {
        BigComplex { re: self.re.clone(), im: Float::with_val(self.prec(), -&self.im) }
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        let mut s = Float::with_val(p, self.re.square_ref());
        s += &self.im * &self.im;
        s
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    pub fn arg(&self) -> Float {
        Float::with_val(self.prec(), self.im.atan2_ref(&self.re))
    }

    pub fn scale(&self, s: &Float) -> Self {
        let p = self.prec();
        BigComplex { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn mul_i(&self) -> Self {
        BigComplex { re: Float::with_val(self.prec(), -&self.im), im: self.re.clone() }
    }

    pub fn recip(&self) -> Self {
        let p = self.prec();
        let n = self.norm_sqr();
        BigComplex { re: Float::with_val(p, &self.re / &n), im: Float::with_val(p, -&self.im) / &n }
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// `self += a * b` without temporaries beyond two floats.
    pub fn add_mul(&mut self, a: &BigComplex, b: &BigComplex) {
        self.re += &a.re * &b.re;
        self.re -= &a.im * &b.im;
        self.im += &a.re * &b.im;
        self.im += &a.im * &b.re;
    }

    pub fn exp(&self) -> Self {
        let p = self.prec();
        let m = Float::with_val(p, self.re.exp_ref());
        let (s, c) = self.im.clone().sin_cos(Float::new(p));
        BigComplex { re: Float::with_val(p, &m * &c), im: m * s }
    }

    /// Principal logarithm, arg in (-pi, pi].
    pub fn ln(&self) -> Self {
        let p = self.prec();
        BigComplex { re: Float::with_val(p, self.abs().ln_ref()), im: self.arg() }
    }

    /// Principal square root (cut on the negative real axis, sign of im respected).
    pub fn sqrt(&self) -> Self {
        let p = self.prec();
        if self.is_zero() {
            return BigComplex::zero(p);
        }
        let r = self.abs();
        if !self.re.is_sign_negative() {
            let t = (Float::with_val(p, &r + &self.re) / 2u32).sqrt();
            let im = Float::with_val(p, &self.im / &t) / 2u32;
            BigComplex { re: t, im }
        } else {
            let mut t = (Float::with_val(p, &r - &self.re) / 2u32).sqrt();
            if self.im.is_sign_negative() {
                t = -t;
            }
            let re = Float::with_val(p, &self.im / &t) / 2u32;
            BigComplex { re, im: t }
        }
    }

    pub fn powc(&self, w: &BigComplex) -> Self {
        if self.is_zero() {
            if w.is_zero() {
                return BigComplex::from_int(self.prec(), 1);
            }
            return BigComplex::zero(self.prec());
        }
        (&self.ln() * w).exp()
    }

    pub fn powf(&self, w: &Float) -> Self {
        if self.is_zero() {
            return BigComplex::zero(self.prec());
        }
        self.ln().scale(w).exp()
    }

    pub fn powi(&self, n: i64) -> Self {
        let p = self.prec();
        let mut base = if n < 0 { self.recip() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = BigComplex::from_int(p, 1);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = base.square();
            e >>= 1;
        }
        acc
    }

    pub fn sin(&self) -> Self {
        let p = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(p));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(p));
        BigComplex { re: s * ch, im: c * sh }
    }

    pub fn cos(&self) -> Self {
        let p = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(p));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(p));
        BigComplex { re: c * ch, im: -(s * sh) }
    }

    pub fn dist(&self, o: &BigComplex) -> Float {
        (self - o).abs()
    }

    pub fn to_string_digits(&self, digits: usize) -> String {
        let re = format_float(&self.re, digits);
        if self.im.is_zero() {
            return re;
        }
        let im = format_float(&self.im, digits);
        if im.starts_with('-') {
            format!("{re}{im}i")
        } else {
            format!("{re}+{im}i")
        }
    }

    /// Parses "x", "x+yi", "x-yi", "yi", "i", "-i"; also "p/q" real parts.
    pub fn parse(s: &str, bits: u32) -> Result<Self, NumericsError> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(NumericsError::Parse(s.to_string()));
        }
        let bad = || NumericsError::Parse(s.to_string());
        if let Some(body) = t.strip_suffix('i') {
            // find the split between real and imaginary part: last +/- not after 'e'
            let bytes = body.as_bytes();
            let mut split = None;
            for k in (1..bytes.len()).rev() {
                let c = bytes[k];
                if (c == b'+' || c == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                    split = Some(k);
                    break;
                }
            }
            let (re_s, im_s) = match split {
                Some(k) => (&body[..k], &body[k..]),
                None => ("0", body),
            };
            let im_s = match im_s {
                "" | "+" => "1",
                "-" => "-1",
                x => x,
            };
            let re = parse_float(re_s, bits).map_err(|_| bad())?;
            let im = parse_float(im_s.trim_start_matches('+'), bits).map_err(|_| bad())?;
            Ok(BigComplex { re, im })
        } else {
            let re = parse_float(&t, bits).map_err(|_| bad())?;
            Ok(BigComplex::from_real(re))
        }
    }
}

impl<'a> Add<&'a BigComplex> for &'a BigComplex {
    type Output = BigComplex;
    fn add(self, o: &BigComplex) -> BigComplex {
        let p = self.prec();
        BigComplex { re: Float::with_val(p, &self.re + &o.re), im: Float::with_val(p, &self.im + &o.im) }
    }
}

impl<'a> Sub<&'a BigComplex> for &'a BigComplex {
    type Output = BigComplex;
    fn sub(self, o: &BigComplex) -> BigComplex {
        let p = self.prec();
        BigComplex { re: Float::with_val(p, &self.re - &o.re), im: Float::with_val(p, &self.im - &o.im) }
    }
}

impl<'a> Mul<&'a BigComplex> for &'a BigComplex {
    type Output = BigComplex;
    fn mul(self, o: &BigComplex) -> BigComplex {
        let p = self.prec();
        if self.im.is_zero() && o.im.is_zero() {
            return BigComplex { re: Float::with_val(p, &self.re * &o.re), im: Float::new(p) };
        }
        let mut re = Float::with_val(p, &self.re * &o.re);
        re -= &self.im * &o.im;
        let mut im = Float::with_val(p, &self.re * &o.im);
        im += &self.im * &o.re;
        BigComplex { re, im }
    }
}

impl<'a> Div<&'a BigComplex> for &'a BigComplex {
    type Output = BigComplex;
    fn div(self, o: &BigComplex) -> BigComplex {
        let p = self.prec();
        if o.im.is_zero() {
            return BigComplex { re: Float::with_val(p, &self.re / &o.re), im: Float::with_val(p, &self.im / &o.re) };
        }
        let n = o.norm_sqr();
        let mut re = Float::with_val(p, &self.re * &o.re);
        re += &self.im * &o.im;
        let mut im = Float::with_val(p, &self.im * &o.re);
        im -= &self.re * &o.im;
        BigComplex { re: re / &n, im: im / &n }
    }
}

impl Neg for &BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        let p = self.prec();
        BigComplex { re: Float::with_val(p, -&self.re), im: Float::with_val(p, -&self.im) }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr<BigComplex> for BigComplex {
            type Output = BigComplex;
            fn $m(self, o: BigComplex) -> BigComplex {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a BigComplex> for BigComplex {
            type Output = BigComplex;
            fn $m(self, o: &BigComplex) -> BigComplex {
                (&self).$m(o)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);
owned_ops!(Div, div);

/// Exact complex rational, used for the "rational mode" of series algebra.
#[derive(Clone, PartialEq, Eq)]
pub struct RatComplex {
    pub re: Rational,
    pub im: Rational,
}

impl fmt::Debug for RatComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im == 0 {
            write!(f, "{}", self.re)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl RatComplex {
    pub fn real(q: Rational) -> Self {
        RatComplex { re: q, im: Rational::new() }
    }

    pub fn int(n: i64) -> Self {
        RatComplex::real(Rational::from(n))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        RatComplex::real(Rational::from((p, q)))
    }

    pub fn to_big(&self, bits: u32) -> BigComplex {
        BigComplex { re: Float::with_val(bits, &self.re), im: Float::with_val(bits, &self.im) }
    }
}

/// Field operations shared by the float and exact scalar types.
pub trait Scalar: Clone + fmt::Debug + Send + Sync {
    fn zero_like(&self) -> Self;
    fn from_int_like(&self, n: i64) -> Self;
    fn add_s(&self, o: &Self) -> Self;
    fn sub_s(&self, o: &Self) -> Self;
    fn mul_s(&self, o: &Self) -> Self;
    fn div_s(&self, o: &Self) -> Self;
    fn neg_s(&self) -> Self;
    fn is_zero_s(&self) -> bool;
    fn magnitude(&self) -> f64;
    /// acc += a*b
    fn add_mul_s(acc: &mut Self, a: &Self, b: &Self) {
        *acc = acc.add_s(&a.mul_s(b));
    }
    fn one_like(&self) -> Self {
        self.from_int_like(1)
    }
    fn ratio_like(&self, p: i64, q: i64) -> Self {
        self.from_int_like(p).div_s(&self.from_int_like(q))
    }
    fn div_int(&self, n: i64) -> Self {
        self.div_s(&self.from_int_like(n))
    }
    fn mul_int(&self, n: i64) -> Self {
        self.mul_s(&self.from_int_like(n))
    }
}

impl Scalar for BigComplex {
    fn zero_like(&self) -> Self {
        BigComplex::zero(self.prec())
    }
    fn from_int_like(&self, n: i64) -> Self {
        BigComplex::from_int(self.prec(), n)
    }
    fn add_s(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_s(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_s(&self, o: &Self) -> Self {
        self * o
    }
    fn div_s(&self, o: &Self) -> Self {
        self / o
    }
    fn neg_s(&self) -> Self {
        -self
    }
    fn is_zero_s(&self) -> bool {
        self.is_zero()
    }
    fn magnitude(&self) -> f64 {
        self.abs_f64()
    }
    fn add_mul_s(acc: &mut Self, a: &Self, b: &Self) {
        acc.add_mul(a, b);
    }
    fn div_int(&self, n: i64) -> Self {
        let p = self.prec();
        if let Ok(n32) = i32::try_from(n) {
            BigComplex { re: Float::with_val(p, &self.re / n32), im: Float::with_val(p, &self.im / n32) }
        } else {
            self / &BigComplex::from_int(p, n)
        }
    }
    fn mul_int(&self, n: i64) -> Self {
        let p = self.prec();
        if let Ok(n32) = i32::try_from(n) {
            BigComplex { re: Float::with_val(p, &self.re * n32), im: Float::with_val(p, &self.im * n32) }
        } else {
            self * &BigComplex::from_int(p, n)
        }
    }
}

impl Scalar for RatComplex {
    fn zero_like(&self) -> Self {
        RatComplex::int(0)
    }
    fn from_int_like(&self, n: i64) -> Self {
        RatComplex::int(n)
    }
    fn add_s(&self, o: &Self) -> Self {
        RatComplex { re: Rational::from(&self.re + &o.re), im: Rational::from(&self.im + &o.im) }
    }
    fn sub_s(&self, o: &Self) -> Self {
        RatComplex { re: Rational::from(&self.re - &o.re), im: Rational::from(&self.im - &o.im) }
    }
    fn mul_s(&self, o: &Self) -> Self {
        if self.im == 0 && o.im == 0 {
            return RatComplex::real(Rational::from(&self.re * &o.re));
        }
        let re = Rational::from(&self.re * &o.re) - Rational::from(&self.im * &o.im);
        let im = Rational::from(&self.re * &o.im) + Rational::from(&self.im * &o.re);
        RatComplex { re, im }
    }
    fn div_s(&self, o: &Self) -> Self {
        if o.im == 0 {
            return RatComplex { re: Rational::from(&self.re / &o.re), im: Rational::from(&self.im / &o.re) };
        }
        let n = Rational::from(o.re.square_ref()) + Rational::from(o.im.square_ref());
        let re = Rational::from(&self.re * &o.re) + Rational::from(&self.im * &o.im);
        let im = Rational::from(&self.im * &o.re) - Rational::from(&self.re * &o.im);
        RatComplex { re: re / &n, im: im / n }
    }
    fn neg_s(&self) -> Self {
        RatComplex { re: Rational::from(-&self.re), im: Rational::from(-&self.im) }
    }
    fn is_zero_s(&self) -> bool {
        self.re == 0 && self.im == 0
    }
    fn magnitude(&self) -> f64 {
        self.re.to_f64().hypot(self.im.to_f64())
    }
}

/// Coefficients of Spouge's approximation, reusable across calls at one precision.
#[derive(Debug, Clone)]
pub struct SpougeGamma {
    a: u32,
    bits: u32,
    work: u32,
    coeffs: Vec<Float>,
}

impl SpougeGamma {
    pub fn new(ctx: &PrecisionContext) -> Self {
        Self::for_bits(ctx.bits())
    }

    pub fn for_bits(bits: u32) -> Self {
        // relative error < a^{-1/2} (2 pi)^{-(a+1/2)}
        let target = bits as f64 * std::f64::consts::LN_2;
        let a = (target / (2.0 * std::f64::consts::PI).ln()).ceil() as u32 + 2;
        // coefficients alternate and reach ~ (2 pi)^a, so the sum cancels that much
        let work = bits * 2 + 64;
        let mut coeffs = Vec::with_capacity(a as usize);
        let two_pi = Float::with_val(work, Constant::Pi) * 2u32;
        coeffs.push(two_pi.sqrt());
        let mut fact = Integer::from(1);
        for k in 1..a {
            if k > 1 {
                fact *= k - 1;
            }
            let base = Float::with_val(work, a - k);
            let pw = base.clone().pow(Float::with_val(work, k) - 0.5f64);
            let ex = Float::with_val(work, a - k).exp();
            let mut c = pw * ex / Float::with_val(work, &fact);
            if k % 2 == 0 {
                c = -c;
            }
            coeffs.push(c);
        }
        SpougeGamma { a, bits, work, coeffs }
    }

    fn gamma_shifted(&self, z: &BigComplex) -> BigComplex {
        // Gamma(z+1) for Re z > -a
        let w = self.work;
        let zw = z.with_prec(w);
        let mut sum = BigComplex::from_real(self.coeffs[0].clone());
        for k in 1..self.a {
            let d = &zw + &BigComplex::from_int(w, k as i64);
            let t = BigComplex::from_real(self.coeffs[k as usize].clone()) / d;
            sum = sum + t;
        }
        let za = &zw + &BigComplex::from_int(w, self.a as i64);
        let half = BigComplex::from_f64(w, 0.5, 0.0);
        let pw = za.powc(&(&zw + &half));
        let ex = (-&za).exp();
        let r = pw * ex * sum;
        r.with_prec(self.bits)
    }

    pub fn gamma(&self, z: &BigComplex) -> Result<BigComplex, NumericsError> {
        if z.im.is_zero() && z.re.is_integer() && !z.re.is_sign_positive() || z.is_zero() {
            return Err(NumericsError::Pole(format_float(&z.re, 10)));
        }
        let half = Float::with_val(z.prec(), 0.5);
        if z.re < half {
            // reflection
            let w = self.work;
            let zw = z.with_prec(w);
            let pi = BigComplex::pi(w);
            let s = (&pi * &zw).sin();
            let one_minus = &BigComplex::from_int(w, 1) - &zw;
            let g = self.gamma_shifted(&(&one_minus - &BigComplex::from_int(w, 1))).with_prec(w);
            let r = pi / (s * g);
            return Ok(r.with_prec(self.bits));
        }
        let zm1 = z - &BigComplex::from_int(z.prec(), 1);
        Ok(self.gamma_shifted(&zm1))
    }
}

/// Complex gamma to `ctx` precision.
pub fn gamma(z: &BigComplex, ctx: &PrecisionContext) -> Result<BigComplex, NumericsError> {
    SpougeGamma::new(ctx).gamma(&z.with_prec(ctx.bits()))
}

/// Real helper: `x` rounded to f64 for logging and diagnostics.
pub fn f(x: &Float) -> f64 {
    x.to_f64()
}

pub fn float_from_rational(bits: u32, q: &Rational) -> Float {
    let mut f = Float::new(bits);
    f.assign(q);
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(d: u32) -> PrecisionContext {
        with_precision(d).unwrap()
    }

    #[test]
    fn context_guard_policy() {
        assert_eq!(with_precision(50).unwrap(), PrecisionContext { digits: 50, guard_digits: 10 });
        assert_eq!(with_precision(300).unwrap(), PrecisionContext { digits: 300, guard_digits: 30 });
        assert_eq!(with_precision(5), Err(NumericsError::Range(5)));
        assert_eq!(with_precision(15).unwrap().guard_digits, 10);
        assert_eq!(with_precision(101).unwrap().guard_digits, 11);
    }

    #[test]
    fn gamma_one_and_half() {
        let c = ctx(50);
        let g1 = gamma(&c.int(1), &c).unwrap();
        assert!((&g1 - &c.int(1)).abs_f64() < 1e-55);
        let g = gamma(&c.real(0.5), &c).unwrap();
        let sqrt_pi = c.pi().sqrt();
        let err = Float::with_val(c.bits(), &g.re - &sqrt_pi).abs();
        assert!(err < 1e-55, "{}", err);
        assert!(g.to_string_digits(11).starts_with("1.7724538509"));
    }

    #[test]
    fn gamma_nine_and_half_matches_product() {
        let c = ctx(60);
        let g = gamma(&c.real(9.5), &c).unwrap();
        let mut prod = c.pi().sqrt();
        for k in 0..9 {
            prod *= Float::with_val(c.bits(), 0.5) + k;
        }
        let rel = (Float::with_val(c.bits(), &g.re - &prod) / &prod).abs();
        assert!(rel < 1e-58, "{}", rel);
    }

    #[test]
    fn gamma_matches_mpfr_real_gamma() {
        let c = ctx(80);
        for &x in &[0.1, 0.75, 3.3, 17.25, -0.5, -3.7, 40.0] {
            let g = gamma(&c.real(x), &c).unwrap();
            let r = Float::with_val(c.bits(), x).gamma();
            let rel = (Float::with_val(c.bits(), &g.re - &r) / &r).abs();
            assert!(rel < 1e-78, "x={x} rel={rel}");
            assert!(g.im.clone().abs() < 1e-70 * r.clone().abs());
        }
    }

    #[test]
    fn gamma_poles() {
        let c = ctx(20);
        for n in [0i64, -1, -7] {
            assert!(matches!(gamma(&c.int(n), &c), Err(NumericsError::Pole(_))));
        }
    }

    #[test]
    fn gamma_conjugate_symmetry_and_abs_on_imaginary_axis() {
        // |Gamma(i y)|^2 = pi / (y sinh(pi y))
        let c = ctx(40);
        let y = 1.3;
        let z = BigComplex::from_f64(c.bits(), 0.0, y);
        let g = gamma(&z, &c).unwrap();
        let gc = gamma(&z.conj(), &c).unwrap();
        assert!((&g.conj() - &gc).abs_f64() < 1e-40);
        let pi = c.pi();
        let yy = c.float(y);
        let expect = Float::with_val(c.bits(), &pi / (Float::with_val(c.bits(), &yy * &pi).sinh() * &yy));
        let rel = Float::with_val(c.bits(), (g.norm_sqr() - &expect) / &expect).abs();
        assert!(rel < 1e-40, "{rel}");
    }

    #[test]
    fn format_examples() {
        let c = ctx(40);
        let x = parse_float("-2.3841687695688166392991458524487671904", c.bits()).unwrap();
        assert_eq!(format_float(&x, 38), "-2.3841687695688166392991458524487671904e0");
        assert_eq!(format_float(&c.float(1.0), 10), "1e0");
        assert_eq!(format_float(&c.float(-0.00125), 10), "-1.25e-3");
        assert_eq!(format_float(&Float::with_val(64, 0), 5), "0e0");
        // round to nearest even on the last kept digit
        let h = parse_float("1.25", 200).unwrap();
        assert_eq!(format_float(&h, 2), "1.2e0");
        let h = parse_float("1.35", 200).unwrap();
        assert_eq!(format_float(&h, 2), "1.4e0");
    }

    #[test]
    fn complex_parse_forms() {
        let b = 128;
        let z = BigComplex::parse("3+0.1i", b).unwrap();
        assert_eq!((z.re.to_f64(), z.im.to_f64()), (3.0, 0.1));
        let z = BigComplex::parse("1.05-2e-3i", b).unwrap();
        assert_eq!((z.re.to_f64(), z.im.to_f64()), (1.05, -0.002));
        let z = BigComplex::parse("-i", b).unwrap();
        assert_eq!((z.re.to_f64(), z.im.to_f64()), (0.0, -1.0));
        let z = BigComplex::parse("2.5e1i", b).unwrap();
        assert_eq!((z.re.to_f64(), z.im.to_f64()), (0.0, 25.0));
        let z = BigComplex::parse("1/3", b).unwrap();
        assert!((z.re.to_f64() - 1.0 / 3.0).abs() < 1e-16);
        assert!(BigComplex::parse("abc", b).is_err());
    }

    #[test]
    fn elementary_functions() {
        let c = ctx(30);
        let z = BigComplex::from_f64(c.bits(), 0.3, -1.2);
        let e = z.ln().exp();
        assert!((&e - &z).abs_f64() < 1e-35);
        let s = z.sqrt();
        assert!((&s.square() - &z).abs_f64() < 1e-35);
        assert!(s.re > 0);
        let neg = BigComplex::from_f64(c.bits(), -4.0, 0.0);
        let r = neg.sqrt();
        assert_eq!((r.re.to_f64(), r.im.to_f64()), (0.0, 2.0));
        let sc = &z.sin().square() + &z.cos().square();
        assert!((&sc - &c.int(1)).abs_f64() < 1e-35);
        assert!((&z.powi(-3) * &z.powi(3) - c.int(1)).abs_f64() < 1e-35);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]
            #[test]
            fn gamma_recurrence(re in -10.0f64..10.0, im in -3.0f64..3.0) {
                prop_assume!(im.abs() > 1e-3 || (re - re.round()).abs() > 1e-3 || re > 0.5);
                let c = with_precision(30).unwrap();
                let z = BigComplex::from_f64(c.bits(), re, im);
                let g = gamma(&z, &c).unwrap();
                let g1 = gamma(&(&z + &c.int(1)), &c).unwrap();
                let rel = (&g1 - &(&z * &g)).abs_f64() / g1.abs_f64();
                prop_assert!(rel < 1e-28, "rel={}", rel);
            }

            #[test]
            fn decimal_roundtrip_is_bit_exact(m in -1.0e300f64..1.0e300, e in -50i32..50) {
                let bits = 200;
                let x = Float::with_val(bits, m) * Float::with_val(bits, 10).pow(e) / 3u32;
                let s = format_float(&x, roundtrip_digits(bits));
                let y = parse_float(&s, bits).unwrap();
                prop_assert_eq!(x, y);
            }
        }
    }
}
