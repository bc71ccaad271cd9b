//! Optimal reconstruction R̂_n = (P_n∘φ)_n∘ψ, error bounds, coefficient
//! extrapolation and empirical probes.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::Float;
use thiserror::Error;

use crate::maps::{MapError, MapInstance};
use crate::numerics::{bits_to_digits, BigComplex, PrecisionContext};
use crate::pade::{self, PadeApproximant, PadeError};
use crate::series::{Series, SeriesError, TruncatedSeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Pade(#[from] PadeError),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
}

#[derive(Debug, Clone)]
pub struct PointValue {
    /// the query point (ω, or z for disk queries)
    pub at: BigComplex,
    /// its disk address z = ψ(ω)
    pub disk_point: BigComplex,
    pub value: BigComplex,
    /// |z|ⁿ/(1−|z|), the bound for ‖F∘φ‖∞ = 1
    pub bound: Float,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub map_name: String,
    pub n: usize,
    pub points: Vec<Result<PointValue, MapError>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Unit,
    /// W(r) = (1−r)^p
    Power(f64),
    /// W(r) = exp(−c/(1−r)^a)
    Exponential { c: f64, a: f64 },
    /// samples (r, W(r)), r increasing; log-linear interpolation, constant past the ends
    Tabulated(Vec<(f64, f64)>),
}

impl WeightSpec {
    fn ln_w(&self, r: f64) -> f64 {
        match self {
            WeightSpec::Unit => 0.0,
            WeightSpec::Power(p) => p * (1.0 - r).ln(),
            WeightSpec::Exponential { c, a } => -c / (1.0 - r).powf(*a),
            WeightSpec::Tabulated(s) => {
                if s.is_empty() {
                    return 0.0;
                }
                if r <= s[0].0 {
                    return s[0].1.ln();
                }
                for w in s.windows(2) {
                    let ((r0, w0), (r1, w1)) = (w[0], w[1]);
                    if r <= r1 {
                        let t = (r - r0) / (r1 - r0);
                        return (1.0 - t) * w0.ln() + t * w1.ln();
                    }
                }
                s[s.len() - 1].1.ln()
            }
        }
    }
}

fn map_digits(p: &Series, map: &MapInstance) -> u32 {
    bits_to_digits(p.prec()).max(map.ctx.digits)
}

fn elevated_map(map: &MapInstance, digits: u32) -> MapInstance {
    map.with_ctx(PrecisionContext::new(digits).expect("digits ≥ 15"))
}

fn amplification_digits(order: usize, c1: f64) -> u32 {
    (order as f64 * c1.max(1.0).log10()).ceil() as u32 + 10
}

/// Q_n = (P_n∘φ)_n, computed at digits + n·log10(c₁) + 10 and returned at p's precision.
pub fn build_qn(p: &Series, map: &MapInstance) -> Result<Series, ReconstructError> {
    let n = p.order();
    if n == 1 {
        return Ok(p.clone());
    }
    let digits = map_digits(p, map);
    let ed = digits + amplification_digits(n, map.c1().to_f64());
    let me = elevated_map(map, ed);
    let phi = me.phi_series(n)?;
    let pe = p.with_prec(me.bits());
    let q = TruncatedSeries::compose(&pe, &phi)?;
    Ok(q.truncate(n).with_prec(p.prec()).labeled(format!("Q_{n} {}", map.name())))
}

/// R̂_n(ω) = Q_n(ψ(ω)) with per-point bounds; off-sheet points fail individually.
pub fn reconstruct_at(p: &Series, map: &MapInstance, points: &[BigComplex]) -> Result<ReconstructionResult, ReconstructError> {
    let q = build_qn(p, map)?;
    let n = p.order();
    let points = points
        .par_iter()
        .map(|w| {
            let z = map.psi(w)?;
            let value = q.eval(&z.with_prec(q.prec()));
            let bound = error_bound(n, &z.abs(), &WeightSpec::Unit).expect("|ψ| < 1");
            Ok(PointValue { at: w.clone(), disk_point: z, value, bound })
        })
        .collect();
    Ok(ReconstructionResult { map_name: map.name(), n, points })
}

/// Q_n(z) at disk addresses, reaching sheets other than the principal one.
pub fn reconstruct_at_disk(p: &Series, map: &MapInstance, zs: &[BigComplex]) -> Result<ReconstructionResult, ReconstructError> {
    let q = build_qn(p, map)?;
    let n = p.order();
    let points = zs
        .par_iter()
        .map(|z| {
            if z.abs() >= 1 {
                return Err(MapError::Domain(z.to_string_digits(12)));
            }
            let value = q.eval(&z.with_prec(q.prec()));
            let bound = error_bound(n, &z.abs(), &WeightSpec::Unit).expect("|z| < 1");
            Ok(PointValue { at: z.clone(), disk_point: z.clone(), value, bound })
        })
        .collect();
    Ok(ReconstructionResult { map_name: map.name(), n, points })
}

/// Upper error bound: |z|ⁿ/(1−|z|) for W ≡ 1, otherwise
/// |z|ⁿ·inf_{r∈(|z|,1)} 1/(W(r) r^{n−1}(r−|z|)), minimized numerically and inflated by 1%.
pub fn error_bound(n: usize, absz: &Float, w: &WeightSpec) -> Result<Float, ReconstructError> {
    let bits = absz.prec().max(64);
    if *absz < 0 || *absz >= 1 || absz.is_nan() {
        return Err(ReconstructError::Range(format!("|z| = {absz} not in [0,1)")));
    }
    if absz.is_zero() {
        return Ok(Float::with_val(bits, 0));
    }
    let a = Float::with_val(bits, absz);
    let zn = Float::with_val(bits, (&a).pow(n as u32));
    if *w == WeightSpec::Unit {
        return Ok(zn / (Float::with_val(bits, 1) - a));
    }
    let af = a.to_f64();
    // g(s) = −ln W(r) − (n−1) ln r − ln(r − |z|), with r = |z| + (1−|z|)·σ(s)
    let g = |s: f64| -> f64 {
        let sig = 1.0 / (1.0 + (-s).exp());
        let r = af + (1.0 - af) * sig;
        let rm = (1.0 - af) * sig;
        if r >= 1.0 || rm <= 0.0 {
            return f64::INFINITY;
        }
        -w.ln_w(r) - (n as f64 - 1.0) * r.ln() - rm.ln()
    };
    let (mut best_s, mut best) = (0.0, f64::INFINITY);
    let mut s = -40.0;
    while s <= 40.0 {
        let v = g(s);
        if v < best {
            best = v;
            best_s = s;
        }
        s += 0.25;
    }
    let (mut lo, mut hi) = (best_s - 0.25, best_s + 0.25);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    while hi - lo > 1e-4 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = g(x2);
        }
    }
    let min = best.min(f1).min(f2);
    if !min.is_finite() {
        return Err(ReconstructError::Range("weight vanishes on (|z|, 1)".into()));
    }
    Ok(zn * Float::with_val(bits, min).exp() * Float::with_val(bits, 1.01))
}

/// Coefficients n..m−1 of (Q_n∘ψ), computed at digits + m·log10(c₁) + 10; the
/// first n coefficients are p's own.
pub fn extrapolate_coefficients(p: &Series, map: &MapInstance, m: usize) -> Result<Series, ReconstructError> {
    let n = p.order();
    if m <= n {
        return Err(ReconstructError::Range(format!("target order {m} must exceed {n}")));
    }
    let digits = map_digits(p, map);
    let ed = digits + amplification_digits(m, map.c1().to_f64());
    let me = elevated_map(map, ed);
    let q = build_qn(&p.with_prec(me.bits()), &me)?;
    let psi = me.psi_series(m)?;
    let r = TruncatedSeries::compose_poly(&q, &psi, m)?;
    let mut coeffs = p.coeffs.clone();
    coeffs.extend(r.coeffs[n..].iter().map(|c| c.with_prec(p.prec())));
    Ok(TruncatedSeries::new(coeffs)?.labeled(format!("extrapolated {}", map.name())))
}

#[derive(Debug, Clone)]
pub struct RootTest {
    pub radius: f64,
    /// exponent γ of the fitted algebraic factor k^γ
    pub algebraic_exponent: f64,
    /// (θ, normalized |Σ a_k R^k k^{−γ} e^{ikθ}|) over the top half of indices
    pub boundary_profile: Vec<(f64, f64)>,
    pub fitted_indices: usize,
}

pub(crate) fn ln_abs(c: &BigComplex) -> f64 {
    let a = c.abs();
    if a.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = a.to_f64_exp();
    m.abs().ln() + e as f64 * std::f64::consts::LN_2
}

pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Empirical n-th root test over the top half of the coefficients.
pub fn root_test(p: &Series) -> Result<RootTest, ReconstructError> {
    let n = p.order();
    if n < 10 {
        return Err(ReconstructError::DegenerateSeries(format!("need at least 10 coefficients, got {n}")));
    }
    let digits = bits_to_digits(p.prec()) as f64;
    let logs: Vec<f64> = p.coeffs.iter().map(ln_abs).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = top - (digits - 5.0) * std::f64::consts::LN_10;
    let idx: Vec<usize> = (n / 2..n).filter(|&k| logs[k].is_finite() && logs[k] > floor).collect();
    let half = n - n / 2;
    if idx.len() * 2 < half || idx.len() < 2 {
        return Err(ReconstructError::DegenerateSeries(format!("{} of {half} top coefficients vanish", half - idx.len())));
    }
    let xs: Vec<f64> = idx.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = idx.iter().map(|&k| logs[k]).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    let radius = (-slope).exp();
    let lnr = radius.ln();
    let lk: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let resid: Vec<f64> = idx.iter().map(|&k| logs[k] + k as f64 * lnr).collect();
    let (gamma, _) = linear_fit(&lk, &resid);
    // normalized b_k as f64 complex
    let shift = resid.iter().zip(&lk).map(|(r, l)| r - gamma * l).fold(f64::NEG_INFINITY, f64::max);
    let b: Vec<(usize, num_complex::Complex64)> = idx
        .iter()
        .map(|&k| {
            let c = &p.coeffs[k];
            let mag = (logs[k] + k as f64 * lnr - gamma * (k as f64).ln() - shift).exp();
            let arg = c.arg().to_f64();
            (k, num_complex::Complex64::from_polar(mag, arg))
        })
        .collect();
    let samples = 720;
    let mut profile: Vec<(f64, f64)> = (0..samples)
        .map(|j| {
            let th = std::f64::consts::TAU * j as f64 / samples as f64 - std::f64::consts::PI;
            let s: num_complex::Complex64 = b.iter().map(|(k, v)| v * num_complex::Complex64::from_polar(1.0, *k as f64 * th)).sum();
            (th, s.norm())
        })
        .collect();
    let mx = profile.iter().map(|x| x.1).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for x in profile.iter_mut() {
        x.1 /= mx;
    }
    Ok(RootTest { radius, algebraic_exponent: gamma, boundary_profile: profile, fitted_indices: idx.len() })
}

/// Padé of Q_n, to be evaluated at ψ(ω).
#[derive(Debug, Clone)]
pub struct ConformalPade {
    pub pade: PadeApproximant,
    pub map: MapInstance,
}

impl ConformalPade {
    pub fn eval(&self, w: &BigComplex) -> Result<BigComplex, MapError> {
        Ok(self.pade.eval(&self.map.psi(w)?))
    }

    pub fn eval_disk(&self, z: &BigComplex) -> BigComplex {
        self.pade.eval(z)
    }
}

pub fn conformal_pade(p: &Series, map: &MapInstance, m: usize, k: usize) -> Result<ConformalPade, ReconstructError> {
    let q = build_qn(p, map)?;
    let pa = pade::pade(&q, m, k)?;
    Ok(ConformalPade { pade: pa, map: map.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{MapKind, Real};
    use crate::numerics::with_precision;
    use crate::special;
    use rug::float::Constant;

    fn ctx(d: u32) -> PrecisionContext {
        with_precision(d).unwrap()
    }

    fn k_series(n: usize, c: PrecisionContext) -> Series {
        special::elliptic_k_series(n, c.bits())
    }

    fn nome(c: PrecisionContext) -> MapInstance {
        MapInstance::simple(MapKind::Nome, c)
    }

    /// r₂(k): ordered representations k = a² + b² over ℤ², by enumeration.
    fn r2(k: i64) -> i64 {
        let mut c = 0;
        for a in -10i64..=10 {
            for b in -10i64..=10 {
                if a * a + b * b == k {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn qn_of_psi_is_identity() {
        let c = ctx(30);
        for kind in [MapKind::OneCut, MapKind::Nome, MapKind::TwoCut] {
            let map = MapInstance::simple(kind, c);
            let q = build_qn(&map.psi_series(12).unwrap(), &map).unwrap();
            let id = Series::identity(12, &BigComplex::zero(c.bits()));
            assert!(q.max_abs_diff(&id) < 1e-30, "{}", map.name());
        }
        let constant = Series::constant(BigComplex::from_f64(c.bits(), 2.5, -1.0), 1);
        assert_eq!(build_qn(&constant, &nome(c)).unwrap().coeffs, constant.coeffs);
    }

    #[test]
    fn lacunary_law_for_k_through_nome() {
        let c = ctx(30);
        let q = build_qn(&k_series(9, c), &nome(c)).unwrap();
        let half_pi = Float::with_val(c.bits(), Constant::Pi) / 2u32;
        for k in 0..9 {
            let want = BigComplex::from_real(Float::with_val(c.bits(), &half_pi * r2(k as i64)));
            assert!((&q.coeffs[k] - &want).abs_f64() < 1e-28, "k={k}");
        }
    }

    #[test]
    fn truncation_discards_exactly_a_n_c1_pow_n() {
        let c = ctx(40);
        let map = nome(c);
        for n in [5usize, 10] {
            let phi = map.phi_series(n + 1).unwrap();
            let full = k_series(n + 1, c);
            let truncated = k_series(n, c).extend_zero(n + 1);
            let a = TruncatedSeries::compose(&full, &phi).unwrap();
            let b = TruncatedSeries::compose(&truncated, &phi).unwrap();
            let diff = &a.coeffs[n] - &b.coeffs[n];
            let want = &full.coeffs[n] * &BigComplex::from_int(c.bits(), 16).powi(n as i64);
            assert!((&diff - &want).abs_f64() / want.abs_f64() < 1e-35);
        }
    }

    #[test]
    fn k_at_point_nine_from_nine_terms() {
        let c = ctx(30);
        let w = BigComplex::from_f64(c.bits(), 0.9, 0.0);
        let r = reconstruct_at(&k_series(9, c), &nome(c), &[w.clone()]).unwrap();
        let v = r.points[0].as_ref().unwrap();
        let k = special::elliptic_k(&w).unwrap();
        assert!((&v.value - &k).abs_f64() < 1e-2);
    }

    #[test]
    fn reconstructing_psi_respects_the_bound() {
        let c = ctx(30);
        let map = MapInstance::simple(MapKind::OneCut, c);
        let p = map.psi_series(15).unwrap();
        let pts: Vec<BigComplex> = [(0.9, 0.0), (-3.0, 1.0), (2.0, 0.5), (5.0, 0.0)].iter().map(|&(a, b)| BigComplex::from_f64(c.bits(), a, b)).collect();
        let r = reconstruct_at(&p, &map, &pts).unwrap();
        for (i, res) in r.points.iter().enumerate() {
            if i == 3 {
                // on the cut [1, ∞)
                assert!(res.is_err());
                continue;
            }
            let v = res.as_ref().unwrap();
            let exact = map.psi(&v.at).unwrap();
            assert!((&v.value - &exact).abs() <= v.bound);
        }
    }

    #[test]
    fn disk_queries() {
        let c = ctx(30);
        let p = k_series(9, c);
        let r = reconstruct_at_disk(&p, &nome(c), &[BigComplex::zero(c.bits()), BigComplex::from_f64(c.bits(), 1.0, 0.0)]).unwrap();
        assert_eq!(r.points[0].as_ref().unwrap().value, p.coeffs[0]);
        assert!(r.points[1].is_err());
    }

    #[test]
    fn error_bound_examples() {
        let a = Float::with_val(64, 0.9);
        let b = error_bound(50, &a, &WeightSpec::Unit).unwrap().to_f64();
        assert!((b - 0.9f64.powi(50) / 0.1).abs() < 1e-12);
        assert!((b - 5.15e-2).abs() < 1e-4);
        assert_eq!(error_bound(3, &Float::with_val(64, 0), &WeightSpec::Unit).unwrap(), 0);
        assert!(error_bound(3, &Float::with_val(64, 1), &WeightSpec::Unit).is_err());
        for &(n, z) in &[(10usize, 0.5), (50, 0.9), (200, 0.3)] {
            let z = Float::with_val(64, z);
            let u = error_bound(n, &z, &WeightSpec::Unit).unwrap();
            let p = error_bound(n, &z, &WeightSpec::Power(1.0)).unwrap();
            let e = error_bound(n, &z, &WeightSpec::Exponential { c: 0.1, a: 1.0 }).unwrap();
            assert!(p >= u && e >= u);
        }
        // unit weight through the numeric path matches the closed form within the 1% inflation
        let t = WeightSpec::Tabulated(vec![(0.0, 1.0), (1.0, 1.0)]);
        let z = Float::with_val(64, 0.7);
        let num = error_bound(20, &z, &t).unwrap().to_f64();
        let exact = error_bound(20, &z, &WeightSpec::Unit).unwrap().to_f64();
        assert!(num >= exact && num <= exact * 1.0102, "{num} {exact}");
    }

    #[test]
    fn error_bound_decreases_in_n() {
        for &z in &[0.1, 0.5, 0.99] {
            let z = Float::with_val(64, z);
            let mut last = error_bound(1, &z, &WeightSpec::Unit).unwrap();
            for n in 2..60 {
                let b = error_bound(n, &z, &WeightSpec::Unit).unwrap();
                assert!(b < last);
                last = b;
            }
        }
    }

    #[test]
    fn extrapolate_first_coefficient() {
        let c = ctx(60);
        let p = k_series(9, c);
        let e = extrapolate_coefficients(&p, &nome(c), 10).unwrap();
        let truth = k_series(10, c);
        let rel = (&e.coeffs[9] - &truth.coeffs[9]).abs_f64() / truth.coeffs[9].abs_f64();
        assert!(rel <= 5e-9, "{rel}");
        assert_eq!(e.truncate(9).coeffs, p.coeffs);
    }

    #[test]
    fn root_test_radii() {
        let c = ctx(30);
        let g = Series::from_f64(c.bits(), &[1.0; 40]);
        assert!((root_test(&g).unwrap().radius - 1.0).abs() < 0.02);
        let h: Vec<f64> = (0..40).map(|k| 0.5f64.powi(k)).collect();
        assert!((root_test(&Series::from_f64(c.bits(), &h)).unwrap().radius - 2.0).abs() < 0.04);
        // singularity direction from the profile: 1/(1 − ω e^{−iπ/3})
        let th0 = std::f64::consts::FRAC_PI_3;
        let coeffs: Vec<BigComplex> = (0..60).map(|k| BigComplex::from_f64(c.bits(), (-(k as f64) * th0).cos(), (-(k as f64) * th0).sin())).collect();
        let rt = root_test(&TruncatedSeries::new(coeffs).unwrap()).unwrap();
        let peak = rt.boundary_profile.iter().cloned().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert!((peak.0 - th0).abs() < 0.02, "{peak:?}");
        assert!(root_test(&Series::from_f64(c.bits(), &[1.0; 5])).is_err());
    }

    #[test]
    fn conformal_pade_beats_plain_pade_near_singularity() {
        let c = ctx(30);
        let p = k_series(9, c);
        let one_cut = MapInstance::simple(MapKind::OneCut, c);
        let cp = conformal_pade(&p, &one_cut, 4, 4).unwrap();
        let plain = pade::pade(&p, 4, 4).unwrap();
        let w = BigComplex::from_f64(c.bits(), 0.95, 0.0);
        let k = special::elliptic_k(&w).unwrap();
        let e_cp = (&cp.eval(&w).unwrap() - &k).abs_f64();
        let e_pl = (&plain.eval(&w) - &k).abs_f64();
        assert!(e_cp * 10.0 <= e_pl, "cp {e_cp} plain {e_pl}");
        // rational input through the identity automorphism is recovered exactly
        let id = MapInstance::simple(MapKind::DiskAutomorphism { re: Real::int(0), im: Real::int(0) }, c);
        let r = Series::from_f64(c.bits(), &[1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0]);
        let x = conformal_pade(&r, &id, 1, 1).unwrap();
        let w = BigComplex::from_f64(c.bits(), 0.3, 0.4);
        let o = BigComplex::from_int(c.bits(), 1);
        assert!((&x.eval(&w).unwrap() - &(&(&o + &w) / &(&o - &w))).abs_f64() < 1e-28);
    }
}
