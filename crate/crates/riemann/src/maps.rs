//! Conformal and uniformizing maps φ: 𝔻 → Ω with inverses ψ = φ⁻¹.
//!
//! Every catalog map is normalized so that φ(0) = 0 and c₁ = φ'(0) > 0
//! (the disk automorphism is the one exception: it moves the origin).
//! ψ is only ever evaluated on the principal sheet, i.e. the point reached by
//! the straight segment from 0; other sheets are addressed from the disk side.

use std::fmt;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};
use thiserror::Error;

use crate::numerics::{BigComplex, PrecisionContext, Scalar};
use crate::series::{Series, SeriesError, TruncatedSeries};
use crate::special::{self, SpecialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("point {0} outside the domain")]
    Domain(String),
    #[error("point {0} on a branch cut")]
    BranchCut(String),
    #[error("branch tracking failed at {0}")]
    Branch(String),
    #[error("inversion did not converge at {0}")]
    NoConvergence(String),
    #[error("invalid map parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

impl From<SpecialError> for MapError {
    fn from(e: SpecialError) -> Self {
        match e {
            SpecialError::BranchCut(s) => MapError::BranchCut(s),
            SpecialError::Domain(s) => MapError::Domain(s),
        }
    }
}

/// A real parameter kept exactly so that it can be re-rounded at any precision.
#[derive(Debug, Clone, PartialEq)]
pub enum Real {
    Exact(Rational),
    /// value = r·π
    PiTimes(Rational),
    Decimal(String),
}

impl Real {
    pub fn int(n: i64) -> Real {
        Real::Exact(Rational::from(n))
    }

    pub fn pi_times(p: i64, q: i64) -> Real {
        Real::PiTimes(Rational::from((p, q)))
    }

    pub fn to_float(&self, bits: u32) -> Float {
        match self {
            Real::Exact(q) => Float::with_val(bits, q),
            Real::PiTimes(q) => Float::with_val(bits, Constant::Pi) * Float::with_val(bits, q),
            Real::Decimal(s) => Float::with_val(bits, Float::parse(s).expect("validated decimal")),
        }
    }

    /// Accepts "1/3", "0.25", "pi/3", "2pi/5", "pi".
    pub fn parse(s: &str) -> Result<Real, MapError> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || MapError::Params(format!("cannot parse parameter {s:?}"));
        if let Some(idx) = t.find("pi") {
            let (coef, rest) = (&t[..idx], &t[idx + 2..]);
            let mut r = match coef.trim_end_matches('*') {
                "" => Rational::from(1),
                "-" => Rational::from(-1),
                c => Rational::from_str_radix(c, 10).map_err(|_| bad())?,
            };
            if let Some(d) = rest.strip_prefix('/') {
                let d = Rational::from_str_radix(d, 10).map_err(|_| bad())?;
                if d == 0 {
                    return Err(bad());
                }
                r /= d;
            } else if !rest.is_empty() {
                return Err(bad());
            }
            return Ok(Real::PiTimes(r));
        }
        if let Ok(q) = Rational::from_str_radix(&t, 10) {
            return Ok(Real::Exact(q));
        }
        Float::parse(&t).map_err(|_| bad())?;
        Ok(Real::Decimal(t))
    }

    pub fn to_f64(&self) -> f64 {
        self.to_float(64).to_f64()
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(q) => write!(f, "{q}"),
            Real::PiTimes(q) => write!(f, "{q}*pi"),
            Real::Decimal(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    OneCut,
    TwoCut,
    CutAB { a: Real, b: Real },
    NCut { n: u32 },
    PairedConjugateCuts { theta: Real, n: u32 },
    Nome,
    TwoPuncture,
    ConjugatePuncture { theta: Real },
    OmegaZ,
    LandenComposite { k: u32 },
    OmegaZPartial { k: u32 },
    Symmetrized { base: Box<MapInstance>, n: u32 },
    DiskAutomorphism { re: Real, im: Real },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapInstance {
    pub kind: MapKind,
    pub ctx: PrecisionContext,
}

fn dstr(z: &BigComplex) -> String {
    z.to_string_digits(12)
}

fn half(bits: u32) -> Float {
    Float::with_val(bits, 0.5)
}

fn c(bits: u32, x: f64) -> BigComplex {
    BigComplex::from_f64(bits, x, 0.0)
}

fn one(bits: u32) -> BigComplex {
    BigComplex::from_int(bits, 1)
}

fn two_pi_i(bits: u32) -> BigComplex {
    BigComplex::new(Float::new(bits), Float::with_val(bits, Constant::Pi) * 2u32)
}

/// log g(t·z) continued along t ∈ [0,1] from the principal value at t = 0.
fn ray_log<F>(g: F, z: &BigComplex) -> Result<BigComplex, MapError>
where
    F: Fn(&BigComplex) -> Result<BigComplex, MapError>,
{
    let bits = z.prec();
    let g0 = g(&BigComplex::zero(bits))?;
    if g0.is_zero() {
        return Err(MapError::Branch(dstr(z)));
    }
    let mut log = g0.ln();
    let mut prev = g0;
    let mut t = Float::with_val(bits, 0);
    let mut h = Float::with_val(bits, 0.125);
    let limit = Float::with_val(bits, 0.5);
    let min_h = Float::with_val(bits, 1e-12);
    while t < 1 {
        let mut tn = Float::with_val(bits, &t + &h);
        if tn > 1 {
            tn = Float::with_val(bits, 1);
        }
        let w = g(&z.scale(&tn))?;
        if w.is_zero() {
            return Err(MapError::Branch(dstr(z)));
        }
        let step = (&w / &prev).ln();
        if step.im.clone().abs() > limit {
            h /= 2u32;
            if h < min_h {
                return Err(MapError::Branch(dstr(z)));
            }
            continue;
        }
        log = &log + &step;
        prev = w;
        t = tn;
        if step.im.clone().abs() < 0.1 {
            h *= 2u32;
            if h > 0.25 {
                h = Float::with_val(bits, 0.25);
            }
        }
    }
    Ok(log)
}

/// Series of λ(q) with q = exp(L(z)): 16 e^L (Σ_{n≥0} e^{n(n+1)L})⁴ / (1 + 2Σ_{n≥1} e^{n²L})⁴.
fn lambda_of_log_nome_series(l: &Series) -> Series {
    let bits = l.prec();
    let n_ord = l.order();
    let extra = n_ord as u32 + 64;
    let w = bits + extra;
    let lw = l.with_prec(w);
    let tiny = Float::with_val(w, Float::i_exp(1, -(w as i32)));
    let sum_terms = |start: i64, exponent: &dyn Fn(i64) -> i64, weight: i64| -> Series {
        let mut acc: Option<Series> = None;
        let mut prev_mag = f64::INFINITY;
        let mut n = start;
        loop {
            let e = exponent(n);
            let term = if e == 0 {
                Series::constant(one(w), n_ord)
            } else {
                lw.scale(&BigComplex::from_int(w, e)).exp_any()
            };
            let term = term.scale(&BigComplex::from_int(w, weight));
            let mag = term.max_magnitude();
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term),
            });
            let scale = acc.as_ref().map(|a| a.max_magnitude()).unwrap_or(1.0).max(1.0);
            if n > start + 2 && mag < prev_mag && Float::with_val(w, mag) < Float::with_val(w, &tiny * scale) {
                break;
            }
            if mag == 0.0 && n > start + 2 {
                break;
            }
            prev_mag = mag;
            n += 1;
        }
        acc.expect("at least one term")
    };
    let a = sum_terms(0, &|n| n * (n + 1), 1);
    let b = sum_terms(1, &|n| n * n, 2).add(&Series::constant(one(w), n_ord));
    let r = a.div(&b).expect("θ₃ constant term nonzero");
    let r2 = r.mul(&r);
    let r4 = r2.mul(&r2);
    let el = lw.exp_any();
    el.mul(&r4).scale(&BigComplex::from_int(w, 16)).with_prec(bits)
}

/// Series of the Möbius map (α + βz)/(γ + δz).
fn mobius_series(alpha: &BigComplex, beta: &BigComplex, gamma: &BigComplex, delta: &BigComplex, order: usize) -> Series {
    let bits = alpha.prec();
    let mut num = vec![BigComplex::zero(bits); order.max(2)];
    num[0] = alpha.clone();
    num[1] = beta.clone();
    let mut den = vec![BigComplex::zero(bits); order.max(2)];
    den[0] = gamma.clone();
    den[1] = delta.clone();
    let num = TruncatedSeries::new(num).unwrap().truncate(order);
    let den = TruncatedSeries::new(den).unwrap().truncate(order);
    num.div(&den).expect("γ ≠ 0")
}

impl MapInstance {
    pub fn new(kind: MapKind, ctx: PrecisionContext) -> Result<Self, MapError> {
        let bad = |m: &str| Err(MapError::Params(m.to_string()));
        match &kind {
            MapKind::CutAB { a, b } => {
                if a.to_f64() <= 0.0 || b.to_f64() <= 0.0 {
                    return bad("CutAB needs a, b > 0");
                }
            }
            MapKind::NCut { n } if *n == 0 => return bad("NCut needs n ≥ 1"),
            MapKind::PairedConjugateCuts { theta, n } => {
                let t = theta.to_f64() / std::f64::consts::PI;
                if *n == 0 || t <= 0.0 || t * (*n as f64) >= 1.0 {
                    return bad("PairedConjugateCuts needs n ≥ 1 and 0 < nθ < π");
                }
            }
            MapKind::ConjugatePuncture { theta } => {
                let t = theta.to_f64();
                if t <= 0.0 || t > std::f64::consts::FRAC_PI_2 + 1e-15 {
                    return bad("ConjugatePuncture needs 0 < θ ≤ π/2");
                }
            }
            MapKind::LandenComposite { k } | MapKind::OmegaZPartial { k } if *k == 0 => {
                return bad("Landen composite needs k ≥ 1");
            }
            MapKind::Symmetrized { base, n } => {
                if *n == 0 {
                    return bad("Symmetrized needs n ≥ 1");
                }
                if matches!(base.kind, MapKind::DiskAutomorphism { .. }) {
                    return bad("Symmetrized needs a base with φ(0) = 0 and φ'(0) > 0");
                }
            }
            MapKind::DiskAutomorphism { re, im } => {
                if re.to_f64().hypot(im.to_f64()) >= 1.0 {
                    return bad("DiskAutomorphism needs |a| < 1");
                }
            }
            _ => {}
        }
        Ok(MapInstance { kind, ctx })
    }

    pub fn simple(kind: MapKind, ctx: PrecisionContext) -> Self {
        Self::new(kind, ctx).expect("valid parameters")
    }

    pub fn with_ctx(&self, ctx: PrecisionContext) -> Self {
        let kind = match &self.kind {
            MapKind::Symmetrized { base, n } => MapKind::Symmetrized { base: Box::new(base.with_ctx(ctx)), n: *n },
            k => k.clone(),
        };
        MapInstance { kind, ctx }
    }

    pub fn bits(&self) -> u32 {
        self.ctx.bits()
    }

    pub fn name(&self) -> String {
        match &self.kind {
            MapKind::OneCut => "one-cut".into(),
            MapKind::TwoCut => "two-cut".into(),
            MapKind::CutAB { a, b } => format!("cut-ab(a={a},b={b})"),
            MapKind::NCut { n } => format!("n-cut(n={n})"),
            MapKind::PairedConjugateCuts { theta, n } => format!("paired-cuts(theta={theta},n={n})"),
            MapKind::Nome => "nome".into(),
            MapKind::TwoPuncture => "two-puncture".into(),
            MapKind::ConjugatePuncture { theta } => format!("conjugate-puncture(theta={theta})"),
            MapKind::OmegaZ => "omega-z".into(),
            MapKind::LandenComposite { k } => format!("landen(k={k})"),
            MapKind::OmegaZPartial { k } => format!("omega-z-partial(k={k})"),
            MapKind::Symmetrized { base, n } => format!("symmetrized({},n={n})", base.name()),
            MapKind::DiskAutomorphism { re, im } => format!("disk-automorphism(a={re}+{im}i)"),
        }
    }

    /// True for maps whose image is a Riemann surface rather than a plane domain.
    pub fn is_uniformizing(&self) -> bool {
        match &self.kind {
            MapKind::Nome
            | MapKind::TwoPuncture
            | MapKind::ConjugatePuncture { .. }
            | MapKind::OmegaZ
            | MapKind::LandenComposite { .. }
            | MapKind::OmegaZPartial { .. } => true,
            MapKind::Symmetrized { base, .. } => base.is_uniformizing(),
            _ => false,
        }
    }

    fn theta(&self, theta: &Real, bits: u32) -> Float {
        theta.to_float(bits)
    }

    /// K(½ ± (i/2)cot θ) at `bits`.
    fn k_pm(&self, theta: &Real, bits: u32) -> (BigComplex, BigComplex) {
        let th = self.theta(theta, bits);
        let cot = Float::with_val(bits, th.tan_ref()).recip();
        let hp = BigComplex::new(half(bits), Float::with_val(bits, &cot / 2u32));
        let hm = hp.conj();
        let kp = special::elliptic_k(&hp).expect("off the cut");
        let km = special::elliptic_k(&hm).expect("off the cut");
        (kp, km)
    }

    fn landen_factors(k: u32) -> Vec<u32> {
        (0..=k).map(|j| 1u32 << j).collect()
    }

    /// c₁ = φ'(0) from closed forms.
    pub fn c1(&self) -> Float {
        let bits = self.bits();
        let pi = Float::with_val(bits, Constant::Pi);
        match &self.kind {
            MapKind::OneCut => Float::with_val(bits, 4),
            MapKind::TwoCut => Float::with_val(bits, 2),
            MapKind::CutAB { a, b } => {
                let a = a.to_float(bits);
                let b = b.to_float(bits);
                Float::with_val(bits, &a * &b) * 4u32 / (a + b)
            }
            MapKind::NCut { n } => Float::with_val(bits, 4).pow(Float::with_val(bits, 1) / *n),
            MapKind::PairedConjugateCuts { theta, n } => self.paired_c(theta, *n, bits),
            MapKind::Nome => Float::with_val(bits, 16),
            MapKind::TwoPuncture => {
                let g = Float::with_val(bits, 0.75).gamma();
                Float::with_val(bits, pi.square_ref()) / g.pow(4u32)
            }
            MapKind::ConjugatePuncture { theta } => {
                let (kp, km) = self.k_pm(theta, bits);
                let th = self.theta(theta, bits);
                // 1/|a_u| = |K₊² + K₋²| / ((π/2) sin θ)
                let num = (&kp.square() + &km.square()).abs();
                num / (pi / 2u32 * th.sin())
            }
            MapKind::OmegaZ => Float::with_val(bits, 8) / pi,
            MapKind::LandenComposite { k } => Self::landen_c1(*k, bits),
            MapKind::OmegaZPartial { k } => Self::landen_c1(*k, bits) / (pi * 2u32),
            MapKind::Symmetrized { base, n } => base.c1().pow(Float::with_val(bits, 1) / *n),
            MapKind::DiskAutomorphism { re, im } => {
                let a = BigComplex::new(re.to_float(bits), im.to_float(bits));
                Float::with_val(bits, 1) - a.norm_sqr()
            }
        }
    }

    fn landen_c1(k: u32, bits: u32) -> Float {
        let mut e = Rational::from(0);
        for n in Self::landen_factors(k) {
            e += Rational::from((1, n));
        }
        Float::with_val(bits, 4).pow(Float::with_val(bits, &e))
    }

    fn paired_c(&self, theta: &Real, n: u32, bits: u32) -> Float {
        let pi = Float::with_val(bits, Constant::Pi);
        let t = Float::with_val(bits, self.theta(theta, bits) / &pi);
        let nt = Float::with_val(bits, &t * n);
        let two_n = Float::with_val(bits, 4).pow(Float::with_val(bits, 1) / n);
        let f1 = nt.clone().pow(&t);
        let ex = Float::with_val(bits, 1) / n - &t;
        let f2 = (Float::with_val(bits, 1) - nt).pow(ex);
        two_n * f1 * f2
    }

    /// Acceleration modulus |ψ'(0)| = 1/c₁.
    pub fn acceleration_modulus(&self) -> Float {
        self.c1().recip()
    }

    fn check_disk(&self, z: &BigComplex) -> Result<(), MapError> {
        if z.abs() >= 1 {
            return Err(MapError::Domain(dstr(z)));
        }
        Ok(())
    }

    /// φ(z) for z ∈ 𝔻.
    pub fn phi(&self, z: &BigComplex) -> Result<BigComplex, MapError> {
        Ok(self.phi_with_derivative(z)?.0)
    }

    /// (φ(z), φ'(z)).
    pub fn phi_with_derivative(&self, z: &BigComplex) -> Result<(BigComplex, BigComplex), MapError> {
        let bits = self.bits();
        let z = z.with_prec(bits);
        self.check_disk(&z)?;
        let o = one(bits);
        match &self.kind {
            MapKind::OneCut => {
                let zp = &o + &z;
                let f = (&z / &zp.square()).mul_int(4);
                let d = (&(&o - &z) / &zp.powi(3)).mul_int(4);
                Ok((f, d))
            }
            MapKind::TwoCut => {
                let den = &o + &z.square();
                let f = (&z / &den).mul_int(2);
                let d = (&(&o - &z.square()) / &den.square()).mul_int(2);
                Ok((f, d))
            }
            MapKind::CutAB { a, b } => {
                let a = BigComplex::from_real(a.to_float(bits));
                let b = BigComplex::from_real(b.to_float(bits));
                let zp = &o + &z;
                let zm = &o - &z;
                let den = &(&a * &zp.square()) + &(&b * &zm.square());
                let ab4 = (&a * &b).mul_int(4);
                let f = &(&ab4 * &z) / &den;
                // d/dz: 4ab (den − z den') / den², den' = 2a(1+z) − 2b(1−z)
                let dden = (&(&a * &zp) - &(&b * &zm)).mul_int(2);
                let d = &(&ab4 * &(&den - &(&z * &dden))) / &den.square();
                Ok((f, d))
            }
            MapKind::NCut { n } => Ok(ncut_phi(&z, *n)),
            MapKind::PairedConjugateCuts { theta, n } => {
                let n = *n;
                let cst = BigComplex::from_real(self.paired_c(theta, n, bits));
                let pi = Float::with_val(bits, Constant::Pi);
                let ex = Float::with_val(bits, self.theta(theta, bits) * 2u32) / &pi;
                let u = z.powi(n as i64);
                let up = &o + &u;
                let um = &o - &u;
                let p1 = up.powf(&Float::with_val(bits, Float::with_val(bits, -2) / n));
                let p2 = (&up / &um).powf(&ex);
                let f = &(&(&cst * &z) * &p1) * &p2;
                if z.is_zero() {
                    return Ok((f, cst));
                }
                // φ'/φ = 1/z − 2z^{n−1}/(1+u) + ex·n z^{n−1}(1/(1+u) + 1/(1−u))
                let zn1 = z.powi(n as i64 - 1);
                let t1 = z.recip();
                let t2 = (&zn1 / &up).mul_int(2);
                let t3 = (&zn1 * &(&up.recip() + &um.recip())).mul_int(n as i64).scale(&ex);
                let ld = &(&t1 - &t2) + &t3;
                let d = &f * &ld;
                Ok((f, d))
            }
            MapKind::Nome => Ok(special::inverse_nome_with_derivative(&z)?),
            MapKind::TwoPuncture => {
                // q = exp(−π(1−z)/(1+z)), dq/dz = q·2π/(1+z)²
                let pi = BigComplex::pi(bits);
                let zp = &o + &z;
                let l = -&(&pi * &(&(&o - &z) / &zp));
                let q = l.exp();
                let (lam, dlam) = special::inverse_nome_with_derivative(&q)?;
                let dq = &(&q * &pi.mul_int(2)) / &zp.square();
                let f = &lam.mul_int(2) - &o;
                let d = (&dlam * &dq).mul_int(2);
                Ok((f, d))
            }
            MapKind::ConjugatePuncture { theta } => {
                // normalized: φ(z) = Φ(i z), Φ(w) = e^{iθ} − 2i sinθ λ(q(w)),
                // q = exp(L), L = −π(K₊ − K₋w)/(K₋ + K₊w), L' = π(K₊² + K₋²)/(K₋ + K₊w)²
                let (kp, km) = self.k_pm(theta, bits);
                let th = self.theta(theta, bits);
                let w = z.mul_i();
                let pi = BigComplex::pi(bits);
                let den = &km + &(&kp * &w);
                let l = -&(&(&pi * &(&kp - &(&km * &w))) / &den);
                let q = l.exp();
                let (lam, dlam) = special::inverse_nome_with_derivative(&q)?;
                let dl = &(&pi * &(&kp.square() + &km.square())) / &den.square();
                let (s, cth) = th.sin_cos(Float::new(bits));
                let eith = BigComplex::new(cth, s.clone());
                let two_i_s = BigComplex::new(Float::new(bits), s * 2u32);
                let f = &eith - &(&two_i_s * &lam);
                // dΦ/dw = −2i sinθ λ'(q) q L'; dφ/dz = i dΦ/dw
                let dphi_dw = -&(&(&two_i_s * &dlam) * &(&q * &dl));
                Ok((f, dphi_dw.mul_i()))
            }
            MapKind::OmegaZ => {
                // φ(z) = (1/2πi) ln(1 − λ(−iz)), φ' = λ'(−iz)/(2π(1 − λ))
                let lam_at = |t: &BigComplex| -> Result<BigComplex, MapError> {
                    let w = (-t).mul_i();
                    Ok(&o - &special::inverse_nome(&w)?)
                };
                let log = ray_log(lam_at, &z)?;
                let f = &log / &two_pi_i(bits);
                let w = (-&z).mul_i();
                let (lam, dlam) = special::inverse_nome_with_derivative(&w)?;
                let pi2 = BigComplex::pi(bits).mul_int(2);
                let d = &dlam / &(&pi2 * &(&o - &lam));
                Ok((f, d))
            }
            MapKind::LandenComposite { k } => landen_phi(&z, *k),
            MapKind::OmegaZPartial { k } => {
                let k = *k;
                let g = |t: &BigComplex| -> Result<BigComplex, MapError> {
                    let w = (-t).mul_i();
                    Ok(&o - &landen_phi(&w, k)?.0)
                };
                let log = ray_log(g, &z)?;
                let f = &log / &two_pi_i(bits);
                let w = (-&z).mul_i();
                let (lv, ld) = landen_phi(&w, k)?;
                let pi2 = BigComplex::pi(bits).mul_int(2);
                let d = &ld / &(&pi2 * &(&o - &lv));
                Ok((f, d))
            }
            MapKind::Symmetrized { base, n } => {
                let n = *n as i64;
                if n == 1 {
                    return base.phi_with_derivative(&z);
                }
                let c1 = BigComplex::from_real(base.c1());
                // φ(z) = z·(Φ(z^n)/z^n)^{1/n}, continued along the ray
                let g = |t: &BigComplex| -> Result<BigComplex, MapError> {
                    if t.is_zero() {
                        return Ok(c1.clone());
                    }
                    let u = t.powi(n);
                    Ok(&base.phi(&u)? / &u)
                };
                let log = ray_log(g, &z)?;
                let root = log.div_int(n).exp();
                let f = &z * &root;
                if z.is_zero() {
                    return Ok((f, root));
                }
                let u = z.powi(n);
                let (pv, pd) = base.phi_with_derivative(&u)?;
                // φ'/φ = z^{n−1} Φ'(u)/Φ(u)
                let d = &f * &(&(&z.powi(n - 1) * &pd) / &pv);
                Ok((f, d))
            }
            MapKind::DiskAutomorphism { re, im } => {
                let a = BigComplex::new(re.to_float(bits), im.to_float(bits));
                let den = &o - &(&a.conj() * &z);
                let f = &(&z - &a) / &den;
                let d = &(&o - &(&a.conj() * &a)) / &den.square();
                Ok((f, d))
            }
        }
    }

    /// ψ(ω) on the principal sheet.
    pub fn psi(&self, omega: &BigComplex) -> Result<BigComplex, MapError> {
        let bits = self.bits();
        let w = omega.with_prec(bits);
        let o = one(bits);
        if !w.is_finite() {
            return Err(MapError::Domain(dstr(&w)));
        }
        let on_real_ray = |lo: f64, hi: f64| -> bool { w.im.is_zero() && (w.re >= lo && w.re <= hi) };
        match &self.kind {
            MapKind::OneCut => {
                if on_real_ray(1.0, f64::INFINITY) {
                    return Err(MapError::BranchCut(dstr(&w)));
                }
                let s = (&o - &w).sqrt();
                Ok(&w / &(&o + &s).square())
            }
            MapKind::TwoCut => {
                if on_real_ray(1.0, f64::INFINITY) || on_real_ray(f64::NEG_INFINITY, -1.0) {
                    return Err(MapError::BranchCut(dstr(&w)));
                }
                let s = (&o - &w.square()).sqrt();
                Ok(&w / &(&o + &s))
            }
            MapKind::CutAB { a, b } => {
                let af = a.to_float(bits);
                let bf = b.to_float(bits);
                if w.im.is_zero() && (w.re >= bf || w.re <= Float::with_val(bits, -&af)) {
                    return Err(MapError::BranchCut(dstr(&w)));
                }
                let a = BigComplex::from_real(af);
                let b = BigComplex::from_real(bf);
                let r = (&(&a * &(&b - &w)) / &(&b * &(&a + &w))).sqrt();
                Ok(&(&o - &r) / &(&o + &r))
            }
            MapKind::NCut { n } => {
                let u = w.powi(*n as i64);
                if u.im.clone().abs() < Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 4)) && u.re >= 1 {
                    return Err(MapError::BranchCut(dstr(&w)));
                }
                let s = (&o - &u).sqrt();
                let p = (&o + &s).powf(&Float::with_val(bits, Float::with_val(bits, -2) / *n));
                Ok(&w * &p)
            }
            MapKind::Nome => Ok(special::nome(&w)?),
            MapKind::PairedConjugateCuts { .. } => self.psi_by_continuation(&w),
            MapKind::TwoPuncture => {
                if on_real_ray(1.0, f64::INFINITY) || on_real_ray(f64::NEG_INFINITY, -1.0) {
                    return Err(MapError::BranchCut(dstr(&w)));
                }
                let h = half(bits);
                let kp = special::elliptic_k(&(&o + &w).scale(&h))?;
                let km = special::elliptic_k(&(&o - &w).scale(&h))?;
                Ok(&(&kp - &km) / &(&kp + &km))
            }
            MapKind::ConjugatePuncture { theta } => {
                let th = self.theta(theta, bits);
                let (s, cth) = th.sin_cos(Float::new(bits));
                let cot = Float::with_val(bits, &cth / &s);
                let z_of = |x: &BigComplex| -> Result<BigComplex, MapError> {
                    // i(x/sinθ − cotθ), then the two-puncture ψ
                    let arg = (&x.scale(&Float::with_val(bits, s.recip_ref())) - &BigComplex::from_real(cot.clone())).mul_i();
                    let h = half(bits);
                    if arg.im.is_zero() && arg.re.clone().abs() >= 1 {
                        return Err(MapError::BranchCut(dstr(x)));
                    }
                    let kp = special::elliptic_k(&(&o + &arg).scale(&h))?;
                    let km = special::elliptic_k(&(&o - &arg).scale(&h))?;
                    Ok(&(&kp - &km) / &(&kp + &km))
                };
                let zw = z_of(&w)?;
                let z0 = z_of(&BigComplex::zero(bits))?;
                let v = &(&zw - &z0) / &(&o - &(&z0.conj() * &zw));
                // normalization rotation: −i
                Ok((-&v).mul_i())
            }
            MapKind::OmegaZ => {
                if w.re.clone().abs() < 0.5 {
                    let e = (&w * &two_pi_i(bits)).exp();
                    let q = special::nome(&(&o - &e))?;
                    Ok(q.mul_i())
                } else {
                    self.psi_by_continuation(&w)
                }
            }
            MapKind::LandenComposite { k } => landen_psi(&w, *k),
            MapKind::OmegaZPartial { k } => {
                if w.re.clone().abs() < 0.5 {
                    let e = (&w * &two_pi_i(bits)).exp();
                    let q = landen_psi(&(&o - &e), *k)?;
                    Ok(q.mul_i())
                } else {
                    self.psi_by_continuation(&w)
                }
            }
            MapKind::Symmetrized { base, n } => {
                let n = *n as i64;
                if n == 1 {
                    return base.psi(&w);
                }
                let inv_c1 = BigComplex::from_real(base.c1().recip());
                let g = |t: &BigComplex| -> Result<BigComplex, MapError> {
                    if t.is_zero() {
                        return Ok(inv_c1.clone());
                    }
                    let u = t.powi(n);
                    Ok(&base.psi(&u)? / &u)
                };
                let log = ray_log(g, &w)?;
                Ok(&w * &log.div_int(n).exp())
            }
            MapKind::DiskAutomorphism { re, im } => {
                let a = BigComplex::new(re.to_float(bits), im.to_float(bits));
                Ok(&(&w + &a) / &(&o + &(&a.conj() * &w)))
            }
        }
        .and_then(|z| {
            if z.abs() >= 1 {
                Err(MapError::Domain(dstr(&w)))
            } else {
                Ok(z)
            }
        })
    }

    /// ψ(ω) by lifting the segment [0, ω] through φ with Newton's method.
    pub fn psi_by_continuation(&self, omega: &BigComplex) -> Result<BigComplex, MapError> {
        let bits = self.bits();
        let w = omega.with_prec(bits);
        let c1 = BigComplex::from_real(self.c1());
        let tol = Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 12)) * (w.abs() + 1u32);
        let mut t = Float::with_val(bits, 0);
        let mut h = Float::with_val(bits, 1.0 / 16.0);
        let mut z = BigComplex::zero(bits);
        let min_h = 1e-9;
        while t < 1 {
            let mut tn = Float::with_val(bits, &t + &h);
            if tn > 1 {
                tn = Float::with_val(bits, 1);
            }
            let target = w.scale(&tn);
            // predictor: first-order step using φ'
            let mut zt = if z.is_zero() {
                &target / &c1
            } else {
                match self.phi_with_derivative(&z) {
                    Ok((_, d)) => &z + &(&(&target - &w.scale(&t)) / &d),
                    Err(e) => return Err(e),
                }
            };
            let mut ok = false;
            for _ in 0..60 {
                if zt.abs() >= 1 {
                    break;
                }
                let (f, d) = match self.phi_with_derivative(&zt) {
                    Ok(v) => v,
                    Err(_) => break,
                };
                let r = &f - &target;
                let dz = &r / &d;
                zt = &zt - &dz;
                if r.abs() <= tol || dz.abs() <= Float::with_val(bits, &tol * 1e-3) {
                    ok = true;
                    break;
                }
                if dz.abs() > Float::with_val(bits, &h * 4u32) * (w.abs() + 1u32) {
                    break;
                }
            }
            if ok && zt.abs() < 1 && (&zt - &z).abs() < Float::with_val(bits, 0.25) {
                z = zt;
                t = tn;
                h *= 1.5f64;
                if h > 0.125 {
                    h = Float::with_val(bits, 0.125);
                }
            } else {
                h /= 2u32;
                if h < min_h {
                    return Err(MapError::NoConvergence(dstr(&w)));
                }
            }
        }
        // final polish
        for _ in 0..8 {
            let (f, d) = self.phi_with_derivative(&z)?;
            let r = &f - &w;
            z = &z - &(&r / &d);
            if r.abs() <= tol {
                break;
            }
        }
        Ok(z)
    }

    /// Maclaurin series of φ to `order` terms at this map's precision.
    pub fn phi_series(&self, order: usize) -> Result<Series, MapError> {
        let bits = self.bits();
        let order = order.max(2);
        let zero = BigComplex::zero(bits);
        let o = one(bits);
        let s = match &self.kind {
            MapKind::OneCut => {
                let c = (0..order)
                    .map(|k| if k == 0 { zero.clone() } else { BigComplex::from_int(bits, 4 * k as i64 * if k % 2 == 1 { 1 } else { -1 }) })
                    .collect();
                TruncatedSeries::new(c)?
            }
            MapKind::TwoCut => {
                let c = (0..order)
                    .map(|k| {
                        if k % 2 == 0 {
                            zero.clone()
                        } else {
                            BigComplex::from_int(bits, if (k / 2) % 2 == 0 { 2 } else { -2 })
                        }
                    })
                    .collect();
                TruncatedSeries::new(c)?
            }
            MapKind::CutAB { a, b } => {
                let a = BigComplex::from_real(a.to_float(bits));
                let b = BigComplex::from_real(b.to_float(bits));
                // 4ab z / ((a+b) + 2(a−b) z + (a+b) z²)
                let mut den = vec![zero.clone(); order];
                den[0] = &a + &b;
                den[1] = (&a - &b).mul_int(2);
                if order > 2 {
                    den[2] = &a + &b;
                }
                let mut num = vec![zero.clone(); order];
                num[1] = (&a * &b).mul_int(4);
                TruncatedSeries::new(num)?.div(&TruncatedSeries::new(den)?)?
            }
            MapKind::NCut { n } => ncut_phi_series(*n, order, bits),
            MapKind::PairedConjugateCuts { theta, n } => {
                let n = *n as usize;
                let pi = Float::with_val(bits, Constant::Pi);
                let ex = BigComplex::from_real(Float::with_val(bits, self.theta(theta, bits) * 2u32) / &pi);
                let m = order.div_ceil(n) + 1;
                let mut up = vec![zero.clone(); m];
                up[0] = o.clone();
                if m > 1 {
                    up[1] = o.clone();
                }
                let up = TruncatedSeries::new(up)?;
                let mut um = vec![zero.clone(); m];
                um[0] = o.clone();
                if m > 1 {
                    um[1] = -&o;
                }
                let um = TruncatedSeries::new(um)?;
                let p1 = up.pow(&BigComplex::from_real(Float::with_val(bits, Float::with_val(bits, -2) / n as u32)))?;
                let p2 = up.div(&um)?.pow(&ex)?;
                let g = p1.mul(&p2).substitute_power(n, order);
                g.shift_up(1, order).scale(&BigComplex::from_real(self.paired_c(theta, n as u32, bits)))
            }
            MapKind::Nome => special::inverse_nome_series(order, &zero),
            MapKind::TwoPuncture => {
                // L(z) = −π(1−z)/(1+z)
                let pi = BigComplex::pi(bits + 32);
                let l = mobius_series(&-&pi, &pi, &one(bits + 32), &one(bits + 32), order);
                let lam = lambda_of_log_nome_series(&l);
                let mut s = lam.scale(&BigComplex::from_int(bits + 32, 2));
                s.coeffs[0] = &s.coeffs[0] - &one(bits + 32);
                s.coeffs[0] = BigComplex::zero(bits + 32);
                s.with_prec(bits)
            }
            MapKind::ConjugatePuncture { theta } => {
                let wb = bits + 32;
                let (kp, km) = self.k_pm(theta, wb);
                let th = self.theta(theta, wb);
                let pi = BigComplex::pi(wb);
                // argument w = i z; L(w) = −π(K₊ − K₋ w)/(K₋ + K₊ w)
                let i = BigComplex::i(wb);
                let alpha = -&(&pi * &kp);
                let beta = &(&pi * &km) * &i;
                let gamma = km.clone();
                let delta = &kp * &i;
                let l = mobius_series(&alpha, &beta, &gamma, &delta, order);
                let lam = lambda_of_log_nome_series(&l);
                let (s, cth) = th.sin_cos(Float::new(wb));
                let two_i_s = BigComplex::new(Float::new(wb), s.clone() * 2u32);
                let mut out = lam.scale(&-&two_i_s);
                out.coeffs[0] = BigComplex::zero(wb);
                let _ = cth;
                out.with_prec(bits)
            }
            MapKind::OmegaZ => {
                // (1/2πi) ln(1 − λ(−iz))
                let lam = special::inverse_nome_series(order, &zero);
                let rot = lam.coeffs.iter().enumerate().map(|(k, c)| c * &neg_i_pow(k, bits)).collect();
                let lam = TruncatedSeries::new(rot)?;
                let g = Series::constant(o.clone(), order).sub(&lam);
                g.log()?.scale(&two_pi_i(bits).recip())
            }
            MapKind::LandenComposite { k } => landen_phi_series(*k, order, bits)?,
            MapKind::OmegaZPartial { k } => {
                let lam = landen_phi_series(*k, order, bits)?;
                let rot = lam.coeffs.iter().enumerate().map(|(k, c)| c * &neg_i_pow(k, bits)).collect();
                let lam = TruncatedSeries::new(rot)?;
                let g = Series::constant(o.clone(), order).sub(&lam);
                g.log()?.scale(&two_pi_i(bits).recip())
            }
            MapKind::Symmetrized { base, n } => {
                let n = *n as usize;
                let m = order.div_ceil(n) + 1;
                let b = base.phi_series(m + 1)?;
                let c1 = b.coeffs[1].clone();
                // Φ(u)/u normalized to 1 at 0, to the power 1/n
                let g = TruncatedSeries::new(b.coeffs[1..].iter().map(|x| x / &c1).collect())?;
                let inv_n = BigComplex::from_real(Float::with_val(bits, 1) / n as u32);
                let p = g.pow(&inv_n)?;
                let scale = c1.powf(&(Float::with_val(bits, 1) / n as u32));
                p.substitute_power(n, order).shift_up(1, order).scale(&scale)
            }
            MapKind::DiskAutomorphism { re, im } => {
                let a = BigComplex::new(re.to_float(bits), im.to_float(bits));
                mobius_series(&-&a, &o, &o, &-&a.conj(), order)
            }
        };
        Ok(s.truncate(order).extend_zero(order).labeled(format!("phi {}", self.name())))
    }

    /// Maclaurin series of ψ to `order` terms.
    pub fn psi_series(&self, order: usize) -> Result<Series, MapError> {
        let bits = self.bits();
        let order = order.max(2);
        let zero = BigComplex::zero(bits);
        let o = one(bits);
        let s = match &self.kind {
            MapKind::OneCut => ncut_psi_series(1, order, bits),
            MapKind::NCut { n } => ncut_psi_series(*n, order, bits),
            MapKind::TwoCut => {
                // ω/(1 + sqrt(1 − ω²))
                let m = order + 1;
                let mut u = vec![zero.clone(); m];
                u[0] = o.clone();
                if m > 2 {
                    u[2] = -&o;
                }
                let s = TruncatedSeries::new(u)?.pow(&BigComplex::from_real(half(bits)))?;
                let den = s.add(&Series::constant(o.clone(), m));
                den.reciprocal()?.shift_up(1, order)
            }
            MapKind::CutAB { a, b } => {
                let a = BigComplex::from_real(a.to_float(bits));
                let b = BigComplex::from_real(b.to_float(bits));
                // r = sqrt((1 − ω/b)/(1 + ω/a)), z = (1 − r)/(1 + r)
                let mut n1 = vec![zero.clone(); order];
                n1[0] = o.clone();
                n1[1] = -&b.recip();
                let mut d1 = vec![zero.clone(); order];
                d1[0] = o.clone();
                d1[1] = a.recip();
                let ratio = TruncatedSeries::new(n1)?.div(&TruncatedSeries::new(d1)?)?;
                let r = ratio.pow(&BigComplex::from_real(half(bits)))?;
                let one_s = Series::constant(o.clone(), order);
                one_s.sub(&r).div(&one_s.add(&r))?
            }
            MapKind::Nome => special::nome_series(order, &zero),
            MapKind::OmegaZ => {
                // i·q(1 − e^{2πiζ})
                let e = Series::identity(order, &zero).scale(&two_pi_i(bits)).exp()?;
                let inner = Series::constant(o.clone(), order).sub(&e);
                let q = special::nome_series(order, &zero);
                TruncatedSeries::compose(&q, &inner)?.scale(&BigComplex::i(bits))
            }
            MapKind::LandenComposite { k } => landen_psi_series(*k, order, bits)?,
            MapKind::OmegaZPartial { k } => {
                let e = Series::identity(order, &zero).scale(&two_pi_i(bits)).exp()?;
                let inner = Series::constant(o.clone(), order).sub(&e);
                let q = landen_psi_series(*k, order, bits)?;
                TruncatedSeries::compose(&q, &inner)?.scale(&BigComplex::i(bits))
            }
            MapKind::Symmetrized { base, n } => {
                let n = *n as usize;
                let m = order.div_ceil(n) + 1;
                let b = base.psi_series(m + 1)?;
                let c1 = b.coeffs[1].clone();
                let g = TruncatedSeries::new(b.coeffs[1..].iter().map(|x| x / &c1).collect())?;
                let inv_n = BigComplex::from_real(Float::with_val(bits, 1) / n as u32);
                let p = g.pow(&inv_n)?;
                let scale = c1.powf(&(Float::with_val(bits, 1) / n as u32));
                p.substitute_power(n, order).shift_up(1, order).scale(&scale)
            }
            MapKind::DiskAutomorphism { re, im } => {
                let a = BigComplex::new(re.to_float(bits), im.to_float(bits));
                mobius_series(&a, &o, &o, &a.conj(), order)
            }
            MapKind::PairedConjugateCuts { .. } | MapKind::TwoPuncture | MapKind::ConjugatePuncture { .. } => {
                self.phi_series(order)?.revert()?
            }
        };
        Ok(s.truncate(order).extend_zero(order).labeled(format!("psi {}", self.name())))
    }
}

fn neg_i_pow(k: usize, bits: u32) -> BigComplex {
    match k % 4 {
        0 => BigComplex::from_f64(bits, 1.0, 0.0),
        1 => BigComplex::from_f64(bits, 0.0, -1.0),
        2 => BigComplex::from_f64(bits, -1.0, 0.0),
        _ => BigComplex::from_f64(bits, 0.0, 1.0),
    }
}

/// φ_n(z) = 4^{1/n} z (1+z^n)^{−2/n} and its derivative.
fn ncut_phi(z: &BigComplex, n: u32) -> (BigComplex, BigComplex) {
    let bits = z.prec();
    let o = one(bits);
    let c = BigComplex::from_real(Float::with_val(bits, 4).pow(Float::with_val(bits, 1) / n));
    let u = z.powi(n as i64);
    let up = &o + &u;
    let p = up.powf(&(Float::with_val(bits, -2) / n));
    let f = &(&c * z) * &p;
    // φ' = c (1+u)^{−2/n} (1 − 2u/(1+u)) = c (1+u)^{−2/n−1} (1 − u)
    let d = &(&c * &p) * &(&(&o - &u) / &up);
    (f, d)
}

fn ncut_phi_series(n: u32, order: usize, bits: u32) -> Series {
    let n_us = n as usize;
    let m = order.div_ceil(n_us) + 1;
    let zero = BigComplex::zero(bits);
    let o = one(bits);
    let mut up = vec![zero; m.max(2)];
    up[0] = o.clone();
    up[1] = o;
    let up = TruncatedSeries::new(up).unwrap();
    let p = up.pow(&BigComplex::from_real(Float::with_val(bits, -2) / n)).expect("constant term 1");
    let c = BigComplex::from_real(Float::with_val(bits, 4).pow(Float::with_val(bits, 1) / n));
    p.substitute_power(n_us, order).shift_up(1, order).scale(&c)
}

fn ncut_psi_series(n: u32, order: usize, bits: u32) -> Series {
    // ψ_n(ω) = ω (1 + sqrt(1 − ω^n))^{−2/n}
    let n_us = n as usize;
    let m = order.div_ceil(n_us) + 1;
    let zero = BigComplex::zero(bits);
    let o = one(bits);
    let mut u = vec![zero; m.max(2)];
    u[0] = o.clone();
    u[1] = -&o;
    let s = TruncatedSeries::new(u).unwrap().pow(&BigComplex::from_real(half(bits))).unwrap();
    let sp = s.add(&Series::constant(o, m.max(2)));
    let p = sp.pow_any(&BigComplex::from_real(Float::with_val(bits, -2) / n)).unwrap();
    p.substitute_power(n_us, order).shift_up(1, order)
}

fn landen_phi(z: &BigComplex, k: u32) -> Result<(BigComplex, BigComplex), MapError> {
    landen_track(z, k, false)
}

fn landen_psi(w: &BigComplex, k: u32) -> Result<BigComplex, MapError> {
    let v = landen_track(w, k, true)?.0;
    if v.abs() >= 1 {
        return Err(MapError::Domain(dstr(w)));
    }
    Ok(v)
}

/// Runs the Landen stages along the segment [0, w], keeping every square root and
/// logarithm on the branch nearest to its value at the previous point.
/// φ side: v ↦ 4^{1/n} v (1+v^n)^{−2/n}, n = 2^k, …, 1.
/// ψ side: v ↦ v (1+√(1−v^n))^{−2/n}, n = 1, …, 2^k.
fn landen_track(w: &BigComplex, k: u32, psi_side: bool) -> Result<(BigComplex, BigComplex), MapError> {
    let bits = w.prec();
    let o = one(bits);
    let mut factors = MapInstance::landen_factors(k);
    if !psi_side {
        factors.reverse();
    }
    let two_pi = Float::with_val(bits, Constant::Pi) * 2u32;
    let pi = Float::with_val(bits, Constant::Pi);
    let base0 = if psi_side { BigComplex::from_int(bits, 2) } else { o.clone() };
    let mut s_prev = vec![o.clone(); factors.len()];
    let mut b_prev = vec![base0.clone(); factors.len()];
    let mut l_prev = vec![base0.ln(); factors.len()];
    let consts: Vec<BigComplex> = factors
        .iter()
        .map(|&n| if psi_side { o.clone() } else { BigComplex::from_real(Float::with_val(bits, 4).pow(Float::with_val(bits, 1) / n)) })
        .collect();
    let mut t = Float::with_val(bits, 0);
    let mut h = Float::with_val(bits, 1.0 / 32.0);
    let min_h = Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 16));
    let mut result = (BigComplex::zero(bits), consts.iter().fold(o.clone(), |a, c| &a * c));
    if w.is_zero() {
        return Ok(result);
    }
    while t < 1 {
        let mut tn = Float::with_val(bits, &t + &h);
        if tn > 1 {
            tn = Float::with_val(bits, 1);
        }
        let mut v = w.scale(&tn);
        let mut d = o.clone();
        let mut s_new = s_prev.clone();
        let mut b_new = b_prev.clone();
        let mut l_new = l_prev.clone();
        let mut ok = true;
        for (j, &n) in factors.iter().enumerate() {
            let u = v.powi(n as i64);
            let base = if psi_side {
                let mut s = (&o - &u).sqrt();
                if (&s - &s_prev[j]).abs() > (&s + &s_prev[j]).abs() {
                    s = -&s;
                }
                if (&s - &s_prev[j]).abs() > (&s + &s_prev[j]).abs() / 2u32 {
                    ok = false;
                    break;
                }
                s_new[j] = s.clone();
                &o + &s
            } else {
                &o + &u
            };
            if base.is_zero() || (&(&base / &b_prev[j]) - &o).abs() > 0.5 {
                ok = false;
                break;
            }
            let mut l = base.ln();
            while Float::with_val(bits, &l.im - &l_prev[j].im) > pi {
                l.im -= &two_pi;
            }
            while Float::with_val(bits, &l_prev[j].im - &l.im) > pi {
                l.im += &two_pi;
            }
            let factor = l.scale(&(Float::with_val(bits, -2) / n)).exp();
            if !psi_side {
                d = &d * &(&(&consts[j] * &factor) * &(&(&o - &u) / &base));
            }
            b_new[j] = base;
            l_new[j] = l;
            v = &(&consts[j] * &v) * &factor;
        }
        if ok {
            s_prev = s_new;
            b_prev = b_new;
            l_prev = l_new;
            t = tn;
            result = (v, d);
            h *= 2u32;
            if h > 0.125 {
                h = Float::with_val(bits, 0.125);
            }
        } else {
            h /= 2u32;
            if h < min_h {
                return Err(MapError::Branch(dstr(w)));
            }
        }
    }
    Ok(result)
}

fn landen_phi_series(k: u32, order: usize, bits: u32) -> Result<Series, MapError> {
    let factors = MapInstance::landen_factors(k);
    let mut s = ncut_phi_series(*factors.last().unwrap(), order, bits);
    for &n in factors.iter().rev().skip(1) {
        let outer = ncut_phi_series(n, order, bits);
        s = TruncatedSeries::compose(&outer, &s)?;
    }
    Ok(s)
}

fn landen_psi_series(k: u32, order: usize, bits: u32) -> Result<Series, MapError> {
    let factors = MapInstance::landen_factors(k);
    let mut s = ncut_psi_series(factors[0], order, bits);
    for &n in factors.iter().skip(1) {
        let outer = ncut_psi_series(n, order, bits);
        s = TruncatedSeries::compose(&outer, &s)?;
    }
    Ok(s)
}

/// The catalog used by `maps list`, at the given precision.
pub fn catalog(ctx: PrecisionContext) -> Vec<MapInstance> {
    let mk = |k| MapInstance::simple(k, ctx);
    vec![
        mk(MapKind::OneCut),
        mk(MapKind::TwoCut),
        mk(MapKind::CutAB { a: Real::int(1), b: Real::int(2) }),
        mk(MapKind::NCut { n: 3 }),
        mk(MapKind::PairedConjugateCuts { theta: Real::pi_times(1, 3), n: 1 }),
        mk(MapKind::Nome),
        mk(MapKind::TwoPuncture),
        mk(MapKind::ConjugatePuncture { theta: Real::pi_times(1, 3) }),
        mk(MapKind::OmegaZ),
        mk(MapKind::LandenComposite { k: 6 }),
        mk(MapKind::OmegaZPartial { k: 6 }),
        mk(MapKind::Symmetrized { base: Box::new(mk(MapKind::OneCut)), n: 2 }),
        mk(MapKind::DiskAutomorphism { re: Real::Exact(Rational::from((1, 2))), im: Real::int(0) }),
    ]
}

/// Parses a map name plus "key=value" parameters.
pub fn parse_map(name: &str, params: &[(String, String)], ctx: PrecisionContext) -> Result<MapInstance, MapError> {
    let get = |key: &str| -> Result<Real, MapError> {
        params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| Real::parse(v))
            .unwrap_or_else(|| Err(MapError::Params(format!("missing parameter {key}"))))
    };
    let get_u = |key: &str, default: Option<u32>| -> Result<u32, MapError> {
        match params.iter().find(|(k, _)| k == key) {
            Some((_, v)) => v.parse::<u32>().map_err(|_| MapError::Params(format!("{key} must be a positive integer"))),
            None => default.ok_or_else(|| MapError::Params(format!("missing parameter {key}"))),
        }
    };
    let kind = match name {
        "one-cut" | "onecut" | "phi1" => MapKind::OneCut,
        "two-cut" | "twocut" | "phi2" => MapKind::TwoCut,
        "cut-ab" => MapKind::CutAB { a: get("a")?, b: get("b")? },
        "n-cut" | "ncut" => MapKind::NCut { n: get_u("n", None)? },
        "paired-cuts" => MapKind::PairedConjugateCuts { theta: get("theta")?, n: get_u("n", Some(1))? },
        "nome" => MapKind::Nome,
        "two-puncture" => MapKind::TwoPuncture,
        "conjugate-puncture" => MapKind::ConjugatePuncture { theta: get("theta")? },
        "omega-z" | "omegaz" => MapKind::OmegaZ,
        "landen" => MapKind::LandenComposite { k: get_u("k", None)? },
        "omega-z-partial" => MapKind::OmegaZPartial { k: get_u("k", None)? },
        "symmetrized" => {
            let base_name = params
                .iter()
                .find(|(k, _)| k == "base")
                .map(|(_, v)| v.clone())
                .ok_or_else(|| MapError::Params("missing parameter base".into()))?;
            let rest: Vec<(String, String)> = params.iter().filter(|(k, _)| k != "base" && k != "n").cloned().collect();
            let base = parse_map(&base_name, &rest, ctx)?;
            MapKind::Symmetrized { base: Box::new(base), n: get_u("n", None)? }
        }
        "disk-automorphism" => MapKind::DiskAutomorphism {
            re: get("re")?,
            im: params.iter().find(|(k, _)| k == "im").map(|(_, v)| Real::parse(v)).transpose()?.unwrap_or(Real::int(0)),
        },
        other => return Err(MapError::Params(format!("unknown map {other:?}"))),
    };
    MapInstance::new(kind, ctx)
}

#[allow(dead_code)]
fn approx(x: f64) -> BigComplex {
    c(128, x)
}
