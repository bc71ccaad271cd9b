//! Truncated power series at the origin.
//!
//! A `TruncatedSeries<T>` of order n holds c_0..c_{n-1}. Binary operations keep
//! the smaller order; nothing beyond the stored order is ever invented.

use rug::Float;
use thiserror::Error;

use crate::numerics::{BigComplex, RatComplex, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series must have at least one coefficient")]
    EmptySeries,
    #[error("inner series of a composition must vanish at the origin")]
    NonzeroConstantTerm,
    #[error("series is not invertible at the origin (needs c0 = 0, c1 != 0)")]
    NotInvertibleAtOrigin,
    #[error("reciprocal of a series with zero constant term")]
    ZeroConstantTerm,
    #[error("operation needs constant term {0}")]
    ConstantTerm(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<T> {
    pub coeffs: Vec<T>,
    pub label: Option<String>,
}

pub type Series = TruncatedSeries<BigComplex>;
pub type RatSeries = TruncatedSeries<RatComplex>;

impl<T: Scalar> TruncatedSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Result<Self, SeriesError> {
        if coeffs.is_empty() {
            return Err(SeriesError::EmptySeries);
        }
        Ok(TruncatedSeries { coeffs, label: None })
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    fn zero(&self) -> T {
        self.coeffs[0].zero_like()
    }

    /// The series `z` of the given order, scalars shaped like `like`.
    pub fn identity(order: usize, like: &T) -> Self {
        let mut c = vec![like.zero_like(); order.max(1)];
        if order > 1 {
            c[1] = like.one_like();
        }
        TruncatedSeries { coeffs: c, label: None }
    }

    pub fn constant(c: T, order: usize) -> Self {
        let mut v = vec![c.zero_like(); order.max(1)];
        v[0] = c;
        TruncatedSeries { coeffs: v, label: None }
    }

    pub fn truncate(&self, m: usize) -> Self {
        let m = m.clamp(1, self.order());
        TruncatedSeries { coeffs: self.coeffs[..m].to_vec(), label: self.label.clone() }
    }

    /// Pads with zeros (the caller asserts the extra coefficients are known to vanish).
    pub fn extend_zero(&self, m: usize) -> Self {
        let mut c = self.coeffs.clone();
        let z = self.zero();
        c.resize(m.max(c.len()), z);
        TruncatedSeries { coeffs: c, label: self.label.clone() }
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        let c = (0..n).map(|k| self.coeffs[k].add_s(&o.coeffs[k])).collect();
        TruncatedSeries { coeffs: c, label: None }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        let c = (0..n).map(|k| self.coeffs[k].sub_s(&o.coeffs[k])).collect();
        TruncatedSeries { coeffs: c, label: None }
    }

    pub fn neg(&self) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| c.neg_s()).collect(), label: None }
    }

    pub fn scale(&self, s: &T) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| c.mul_s(s)).collect(), label: None }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        self.mul_to(o, n)
    }

    /// Product truncated to `n` terms (n ≤ both orders is not required; missing terms count as unknown).
    pub fn mul_to(&self, o: &Self, n: usize) -> Self {
        let n = n.min(self.order()).min(o.order()).max(1);
        let a = &self.coeffs;
        let b = &o.coeffs;
        // skip leading zeros of b, common for inner series
        let vb = b.iter().take(n).position(|x| !x.is_zero_s()).unwrap_or(n);
        let mut c = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = self.zero();
            if k >= vb {
                for j in vb..=k {
                    if !a[k - j].is_zero_s() {
                        T::add_mul_s(&mut acc, &a[k - j], &b[j]);
                    }
                }
            }
            c.push(acc);
        }
        TruncatedSeries { coeffs: c, label: None }
    }

    pub fn differentiate(&self) -> Self {
        if self.order() == 1 {
            return TruncatedSeries { coeffs: vec![self.zero()], label: None };
        }
        let c = (1..self.order()).map(|k| self.coeffs[k].mul_int(k as i64)).collect();
        TruncatedSeries { coeffs: c, label: None }
    }

    pub fn integrate(&self) -> Self {
        let mut c = Vec::with_capacity(self.order() + 1);
        c.push(self.zero());
        for (k, a) in self.coeffs.iter().enumerate() {
            c.push(a.div_int(k as i64 + 1));
        }
        TruncatedSeries { coeffs: c, label: None }
    }

    pub fn evaluate(&self, z: &T) -> T {
        let mut acc = self.coeffs[self.order() - 1].clone();
        for k in (0..self.order() - 1).rev() {
            acc = acc.mul_s(z).add_s(&self.coeffs[k]);
        }
        acc
    }

    /// outer ∘ inner, truncated to min(outer.order, inner.order).
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self, SeriesError> {
        if !inner.coeffs[0].is_zero_s() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let n = outer.order().min(inner.order());
        let a = &outer.coeffs;
        // Horner; the partial sum for index k only matters to order n - k
        let mut h = TruncatedSeries::constant(a[n - 1].clone(), 1);
        for k in (0..n - 1).rev() {
            let m = n - k;
            let hz = h.extend_zero(m);
            let mut next = hz.mul_to(&inner.truncate(m), m);
            if next.order() < m {
                next = next.extend_zero(m);
            }
            next.coeffs[0] = next.coeffs[0].add_s(&a[k]);
            h = next;
        }
        Ok(h.extend_zero(n))
    }

    /// outer ∘ inner with `outer` read as an exact polynomial, to min(order, inner.order) terms.
    /// Costs deg(outer)·order² instead of order³.
    pub fn compose_poly(outer: &Self, inner: &Self, order: usize) -> Result<Self, SeriesError> {
        if !inner.coeffs[0].is_zero_s() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let n = order.min(inner.order()).max(1);
        let a = &outer.coeffs;
        let inner = inner.truncate(n);
        let mut h = TruncatedSeries::constant(a[a.len() - 1].clone(), n);
        for k in (0..a.len() - 1).rev() {
            h = h.mul_to(&inner, n).extend_zero(n);
            h.coeffs[0] = h.coeffs[0].add_s(&a[k]);
        }
        Ok(h)
    }

    pub fn compose_with(&self, inner: &Self) -> Result<Self, SeriesError> {
        Self::compose(self, inner)
    }

    /// 1/s for s_0 != 0.
    pub fn reciprocal(&self) -> Result<Self, SeriesError> {
        let a = &self.coeffs;
        if a[0].is_zero_s() {
            return Err(SeriesError::ZeroConstantTerm);
        }
        let n = self.order();
        let inv0 = a[0].one_like().div_s(&a[0]);
        let mut b: Vec<T> = Vec::with_capacity(n);
        b.push(inv0.clone());
        for k in 1..n {
            let mut acc = self.zero();
            for j in 1..=k {
                if !a[j].is_zero_s() {
                    T::add_mul_s(&mut acc, &a[j], &b[k - j]);
                }
            }
            b.push(acc.mul_s(&inv0).neg_s());
        }
        Ok(TruncatedSeries { coeffs: b, label: None })
    }

    pub fn div(&self, o: &Self) -> Result<Self, SeriesError> {
        Ok(self.mul(&o.reciprocal()?))
    }

    /// exp(s) for s_0 = 0.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero_s() {
            return Err(SeriesError::ConstantTerm("0"));
        }
        let n = self.order();
        let g = &self.coeffs;
        let mut f: Vec<T> = Vec::with_capacity(n);
        f.push(g[0].one_like());
        for k in 1..n {
            let mut acc = self.zero();
            for j in 1..=k {
                if !g[j].is_zero_s() {
                    T::add_mul_s(&mut acc, &g[j].mul_int(j as i64), &f[k - j]);
                }
            }
            f.push(acc.div_int(k as i64));
        }
        Ok(TruncatedSeries { coeffs: f, label: None })
    }

    /// log(s) for s_0 = 1.
    pub fn log(&self) -> Result<Self, SeriesError> {
        let one = self.coeffs[0].one_like();
        if !self.coeffs[0].sub_s(&one).is_zero_s() {
            return Err(SeriesError::ConstantTerm("1"));
        }
        let n = self.order();
        let g = &self.coeffs;
        let mut l: Vec<T> = Vec::with_capacity(n);
        l.push(self.zero());
        for k in 1..n {
            // k l_k = k g_k - sum_{j=1}^{k-1} j l_j g_{k-j}
            let mut acc = g[k].mul_int(k as i64);
            for j in 1..k {
                if !g[k - j].is_zero_s() {
                    acc = acc.sub_s(&l[j].mul_int(j as i64).mul_s(&g[k - j]));
                }
            }
            l.push(acc.div_int(k as i64));
        }
        Ok(TruncatedSeries { coeffs: l, label: None })
    }

    /// s^alpha for s_0 = 1 (J.C.P. Miller recurrence).
    pub fn pow(&self, alpha: &T) -> Result<Self, SeriesError> {
        let one = self.coeffs[0].one_like();
        if !self.coeffs[0].sub_s(&one).is_zero_s() {
            return Err(SeriesError::ConstantTerm("1"));
        }
        let n = self.order();
        let g = &self.coeffs;
        let mut f: Vec<T> = Vec::with_capacity(n);
        f.push(one.clone());
        let a1 = alpha.add_s(&one);
        for k in 1..n {
            let mut acc = self.zero();
            for j in 1..=k {
                if g[j].is_zero_s() {
                    continue;
                }
                // ((alpha+1) j - k) g_j f_{k-j}
                let w = a1.mul_int(j as i64).sub_s(&one.mul_int(k as i64));
                T::add_mul_s(&mut acc, &w.mul_s(&g[j]), &f[k - j]);
            }
            f.push(acc.div_int(k as i64));
        }
        Ok(TruncatedSeries { coeffs: f, label: None })
    }

    /// s(z^m), truncated to `order` terms.
    pub fn substitute_power(&self, m: usize, order: usize) -> Self {
        let z = self.zero();
        let mut c = vec![z; order.max(1)];
        for (k, a) in self.coeffs.iter().enumerate() {
            let idx = k * m;
            if idx < order {
                c[idx] = a.clone();
            }
        }
        TruncatedSeries { coeffs: c, label: None }
    }

    /// z^m s(z), truncated to `order` terms.
    pub fn shift_up(&self, m: usize, order: usize) -> Self {
        let z = self.zero();
        let mut c = vec![z; order.max(1)];
        for (k, a) in self.coeffs.iter().enumerate() {
            if k + m < order {
                c[k + m] = a.clone();
            }
        }
        TruncatedSeries { coeffs: c, label: None }
    }

    /// Compositional inverse by Newton iteration on series with doubling order.
    pub fn revert(&self) -> Result<Self, SeriesError> {
        let n = self.order();
        if n < 2 || !self.coeffs[0].is_zero_s() || self.coeffs[1].is_zero_s() {
            return Err(SeriesError::NotInvertibleAtOrigin);
        }
        let like = &self.coeffs[0];
        let mut t = TruncatedSeries::identity(2, like);
        t.coeffs[1] = like.one_like().div_s(&self.coeffs[1]);
        let ds = self.differentiate();
        let mut m = 2;
        while m < n {
            m = (2 * m).min(n);
            let tm = t.extend_zero(m);
            let s_t = Self::compose(&self.truncate(m), &tm)?;
            let ds_t = Self::compose(&ds.extend_zero(m).truncate(m), &tm)?;
            let resid = s_t.sub(&TruncatedSeries::identity(m, like));
            let corr = resid.div(&ds_t)?;
            t = tm.sub(&corr);
        }
        Ok(t.truncate(n))
    }

    /// Largest coefficient magnitude, as f64.
    pub fn max_magnitude(&self) -> f64 {
        self.coeffs.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }
}

impl Series {
    pub fn from_f64(bits: u32, c: &[f64]) -> Series {
        TruncatedSeries::new(c.iter().map(|&x| BigComplex::from_f64(bits, x, 0.0)).collect())
            .expect("nonempty coefficient slice")
    }

    pub fn prec(&self) -> u32 {
        self.coeffs[0].prec()
    }

    pub fn with_prec(&self, bits: u32) -> Series {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| c.with_prec(bits)).collect(), label: self.label.clone() }
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, z: &BigComplex) -> BigComplex {
        let p = self.prec().max(z.prec());
        let mut acc = self.coeffs[self.order() - 1].with_prec(p);
        for k in (0..self.order() - 1).rev() {
            acc = &acc * z;
            acc.re += &self.coeffs[k].re;
            acc.im += &self.coeffs[k].im;
        }
        acc
    }

    /// Value and derivative at z.
    pub fn eval_with_derivative(&self, z: &BigComplex) -> (BigComplex, BigComplex) {
        let p = self.prec().max(z.prec());
        let n = self.order();
        let mut f = self.coeffs[n - 1].with_prec(p);
        let mut d = BigComplex::zero(p);
        for k in (0..n - 1).rev() {
            d = &(&d * z) + &f;
            f = &(&f * z) + &self.coeffs[k];
        }
        (f, d)
    }

    /// exp of a series with arbitrary constant term.
    pub fn exp_any(&self) -> Series {
        let c0 = self.coeffs[0].clone();
        let mut s = self.clone();
        s.coeffs[0] = c0.zero_like();
        let e = s.exp().expect("constant term removed");
        e.scale(&c0.exp())
    }

    /// Principal log of a series with nonzero constant term.
    pub fn log_any(&self) -> Result<Series, SeriesError> {
        let c0 = self.coeffs[0].clone();
        if c0.is_zero() {
            return Err(SeriesError::ZeroConstantTerm);
        }
        let s = self.scale(&c0.recip());
        let mut s = s;
        s.coeffs[0] = c0.one_like();
        let mut l = s.log()?;
        l.coeffs[0] = c0.ln();
        Ok(l)
    }

    /// s^alpha with the principal power of the constant term.
    pub fn pow_any(&self, alpha: &BigComplex) -> Result<Series, SeriesError> {
        let c0 = self.coeffs[0].clone();
        if c0.is_zero() {
            return Err(SeriesError::ZeroConstantTerm);
        }
        let mut s = self.scale(&c0.recip());
        s.coeffs[0] = c0.one_like();
        Ok(s.pow(alpha)?.scale(&c0.powc(alpha)))
    }

    pub fn scale_real(&self, s: &Float) -> Series {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(), label: None }
    }

    /// Maximum |a_k - b_k| over the common order.
    pub fn max_abs_diff(&self, o: &Series) -> f64 {
        let n = self.order().min(o.order());
        (0..n).map(|k| (&self.coeffs[k] - &o.coeffs[k]).abs_f64()).fold(0.0, f64::max)
    }
}

impl RatSeries {
    pub fn from_ints(c: &[i64]) -> RatSeries {
        TruncatedSeries::new(c.iter().map(|&x| RatComplex::int(x)).collect()).expect("nonempty")
    }

    pub fn to_big(&self, bits: u32) -> Series {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| c.to_big(bits)).collect(), label: self.label.clone() }
    }
}
