//! Padé approximants, pole/zero clouds and the probe-singularity method.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rug::Float;
use thiserror::Error;

use crate::numerics::{bits_to_digits, digits_to_bits, BigComplex};
use crate::series::{Series, TruncatedSeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PadeError {
    #[error("orders m={m}, k={k} need {need} coefficients, series has {have}")]
    Order { m: usize, k: usize, need: usize, have: usize },
    #[error("no Padé orders up to ({0},{1}) are solvable")]
    DegenerateTable(usize, usize),
    #[error("denominator has degree zero")]
    NoPoles,
    #[error("root finding failed for {0} of {1} roots")]
    RootFindingFailure(usize, usize),
}

#[derive(Debug, Clone)]
pub struct PadeApproximant {
    pub numerator: Series,
    pub denominator: Series,
    pub m: usize,
    pub k: usize,
    /// the (m, k) originally asked for; k may have been reduced on a degenerate block
    pub requested: (usize, usize),
}

impl PadeApproximant {
    pub fn eval(&self, w: &BigComplex) -> BigComplex {
        let w = w.with_prec(self.numerator.prec());
        &self.numerator.eval(&w) / &self.denominator.eval(&w)
    }

    pub fn reduced(&self) -> bool {
        self.requested != (self.m, self.k)
    }

    /// Coefficients of A − F·B up to the order of `p`; the first m+k+1 should vanish.
    pub fn residual(&self, p: &Series) -> Series {
        let bits = self.numerator.prec();
        let p = p.with_prec(bits);
        let n = p.order();
        let b = self.denominator.extend_zero(n.max(self.denominator.order())).truncate(n);
        let a = self.numerator.extend_zero(n.max(self.numerator.order())).truncate(n);
        a.sub(&p.mul(&b))
    }
}

fn solve_linear(mut a: Vec<Vec<BigComplex>>, mut rhs: Vec<BigComplex>, tiny: &Float) -> Option<Vec<BigComplex>> {
    let n = rhs.len();
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())?;
        if best <= *tiny {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        let inv = a[col][col].recip();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] * &inv;
            for c2 in col..n {
                let t = &f * &a[col][c2];
                a[r][c2] = &a[r][c2] - &t;
            }
            let t = &f * &rhs[col];
            rhs[r] = &rhs[r] - &t;
        }
    }
    let mut x = vec![BigComplex::zero(tiny.prec()); n];
    for r in (0..n).rev() {
        let mut acc = rhs[r].clone();
        for c2 in r + 1..n {
            acc = &acc - &(&a[r][c2] * &x[c2]);
        }
        x[r] = &acc / &a[r][r];
    }
    Some(x)
}

/// [m/k] Padé approximant of `p`, solved at digits + m + k.
pub fn pade(p: &Series, m: usize, k: usize) -> Result<PadeApproximant, PadeError> {
    let need = m + k + 1;
    if need > p.order() {
        return Err(PadeError::Order { m, k, need, have: p.order() });
    }
    let digits = bits_to_digits(p.prec());
    let bits = digits_to_bits(digits + (m + k) as u32);
    let a = p.with_prec(bits);
    let coef = |i: isize| -> BigComplex {
        if i < 0 {
            BigComplex::zero(bits)
        } else {
            a.coeffs[i as usize].clone()
        }
    };
    let scale = a.coeffs.iter().take(need).map(|c| c.abs_f64()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tiny = Float::with_val(bits, Float::i_exp(1, -((digits as f64 * 3.3219) as i32))) * scale;
    let mut kk = k;
    loop {
        let b: Option<Vec<BigComplex>> = if kk == 0 {
            Some(vec![])
        } else {
            // Σ_{j=1}^{kk} b_j a_{m+i−j} = −a_{m+i}, i = 1..kk
            let mat = (1..=kk)
                .map(|i| (1..=kk).map(|j| coef(m as isize + i as isize - j as isize)).collect())
                .collect();
            let rhs = (1..=kk).map(|i| -&coef((m + i) as isize)).collect();
            solve_linear(mat, rhs, &tiny)
        };
        if let Some(b) = b {
            let mut den = vec![BigComplex::from_int(bits, 1)];
            den.extend(b);
            let num: Vec<BigComplex> = (0..=m)
                .map(|i| {
                    let mut acc = BigComplex::zero(bits);
                    for (j, bj) in den.iter().enumerate().take(i.min(kk) + 1) {
                        acc.add_mul(bj, &a.coeffs[i - j]);
                    }
                    acc
                })
                .collect();
            return Ok(PadeApproximant {
                numerator: TruncatedSeries::new(num).expect("m ≥ 0").labeled(format!("pade num [{m}/{kk}]")),
                denominator: TruncatedSeries::new(den).expect("nonempty").labeled(format!("pade den [{m}/{kk}]")),
                m,
                k: kk,
                requested: (m, k),
            });
        }
        if kk == 0 {
            return Err(PadeError::DegenerateTable(m, k));
        }
        kk -= 1;
    }
}

/// Roots of Σ c_j x^j: f64 companion-matrix seeds, Aberth iteration at the
/// coefficients' precision, then a Newton polish. Returns (root, converged).
pub fn poly_roots(coeffs: &[BigComplex]) -> Vec<(BigComplex, bool)> {
    if coeffs.is_empty() {
        return vec![];
    }
    let bits = coeffs[0].prec();
    let maxc = coeffs.iter().map(|c| c.abs_f64()).fold(0.0, f64::max);
    if maxc == 0.0 {
        return vec![];
    }
    let mut d = coeffs.len() - 1;
    let tiny = Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 8)) * maxc;
    while d > 0 && coeffs[d].abs() <= tiny {
        d -= 1;
    }
    if d == 0 {
        return vec![];
    }
    let c = &coeffs[..=d];
    let lead = c[d].clone();
    let monic: Vec<BigComplex> = c.iter().map(|x| x / &lead).collect();
    let mut z = seeds(&monic);
    let absc: Vec<Float> = monic.iter().map(|c| c.abs()).collect();
    let eval = |x: &BigComplex| -> (BigComplex, BigComplex, Float) {
        let mut p = monic[d].clone();
        let mut dp = BigComplex::zero(bits);
        let ax = x.abs();
        let mut bound = absc[d].clone();
        for j in (0..d).rev() {
            dp = &(&dp * x) + &p;
            p = &(&p * x) + &monic[j];
            bound = bound * &ax + &absc[j];
        }
        // rounding level of the Horner evaluation
        (p, dp, bound * Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 6)) * (d as u32 + 1))
    };
    let tol = Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 12));
    let mut done = vec![false; d];
    for _ in 0..500 {
        let mut all = true;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (p, dp, noise) = eval(&z[i]);
            if p.is_zero() || p.abs() <= noise {
                done[i] = true;
                continue;
            }
            let ratio = &p / &dp;
            let mut s = BigComplex::zero(bits);
            for j in 0..d {
                if j != i {
                    s = &s + &(&z[i] - &z[j]).recip();
                }
            }
            let one = BigComplex::from_int(bits, 1);
            let corr = &ratio / &(&one - &(&ratio * &s));
            if !corr.is_finite() {
                all = false;
                continue;
            }
            z[i] = &z[i] - &corr;
            if corr.abs() <= Float::with_val(bits, &tol * (z[i].abs() + 1u32)) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp, noise) = eval(zi);
            if dp.is_zero() || p.abs() <= noise {
                break;
            }
            let step = &p / &dp;
            if !step.is_finite() {
                break;
            }
            *zi = &*zi - &step;
        }
    }
    z.into_iter().zip(done).collect()
}

fn seeds(monic: &[BigComplex]) -> Vec<BigComplex> {
    let d = monic.len() - 1;
    let bits = monic[0].prec();
    let cf: Vec<Complex64> = monic.iter().map(|c| c.to_c64()).collect();
    let finite = cf.iter().all(|c| c.re.is_finite() && c.im.is_finite());
    if finite {
        let mut mat = DMatrix::<Complex64>::zeros(d, d);
        for i in 1..d {
            mat[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..d {
            mat[(i, d - 1)] = -cf[i];
        }
        if let Some(s) = nalgebra::linalg::Schur::try_new(mat, 1e-14, 10_000) {
            if let Some(ev) = s.eigenvalues() {
                let mut out: Vec<BigComplex> = ev.iter().map(|e| BigComplex::from_c64(bits, *e)).collect();
                if out.iter().all(|z| z.is_finite()) {
                    // separate exact duplicates so Aberth's sum stays finite
                    for i in 0..out.len() {
                        for j in 0..i {
                            if out[i] == out[j] {
                                let bump = 1e-12 * (1.0 + out[i].abs_f64()) * (i as f64 + 1.0);
                                out[i] = &out[i] + &BigComplex::from_f64(bits, bump, bump);
                            }
                        }
                    }
                    return out;
                }
            }
        }
    }
    // Aberth starting circle from the Cauchy bound
    let r = monic.iter().take(d).map(|c| c.abs_f64()).fold(0.0, f64::max).min(1e300) + 1.0;
    (0..d)
        .map(|j| {
            let a = std::f64::consts::TAU * j as f64 / d as f64 + 0.4;
            BigComplex::from_f64(bits, 0.5 * r * a.cos(), 0.5 * r * a.sin())
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PoleInfo {
    pub location: BigComplex,
    /// |A(p)/B'(p)|
    pub residue_scale: f64,
    pub froissart: bool,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct PoleReport {
    pub poles: Vec<PoleInfo>,
    pub zeros: Vec<BigComplex>,
    pub pairing_radius: f64,
}

impl PoleReport {
    pub fn genuine(&self) -> impl Iterator<Item = &PoleInfo> {
        self.poles.iter().filter(|p| !p.froissart)
    }

    pub fn froissart_count(&self) -> usize {
        self.poles.iter().filter(|p| p.froissart).count()
    }
}

/// Poles and zeros of a Padé approximant, with Froissart doublets flagged.
pub fn poles(pa: &PadeApproximant) -> Result<PoleReport, PadeError> {
    let bits = pa.denominator.prec();
    let digits = bits_to_digits(bits);
    // roots at twice the working precision
    let wb = 2 * bits;
    let den: Vec<BigComplex> = pa.denominator.coeffs.iter().map(|c| c.with_prec(wb)).collect();
    let num: Vec<BigComplex> = pa.numerator.coeffs.iter().map(|c| c.with_prec(wb)).collect();
    let pr = poly_roots(&den);
    if pr.is_empty() {
        return Err(PadeError::NoPoles);
    }
    let zeros: Vec<BigComplex> = poly_roots(&num).into_iter().map(|(z, _)| z.with_prec(bits)).collect();
    let radius_base = 10f64.powf(-(digits as f64) / 4.0);
    let dden = TruncatedSeries::new(den.clone()).expect("nonempty").differentiate();
    let numer = TruncatedSeries::new(num).expect("nonempty");
    let poles = pr
        .into_iter()
        .map(|(p, ok)| {
            let r = radius_base * (1.0 + p.abs_f64());
            let froissart = zeros.iter().any(|z| (z - &p.with_prec(bits)).abs_f64() <= r);
            let residue_scale = (&numer.eval(&p) / &dden.eval(&p)).abs_f64();
            PoleInfo { location: p.with_prec(bits), residue_scale, froissart, converged: ok }
        })
        .collect::<Vec<_>>();
    let failed = poles.iter().filter(|p| !p.converged).count();
    if failed == poles.len() {
        return Err(PadeError::RootFindingFailure(failed, poles.len()));
    }
    Ok(PoleReport { poles, zeros, pairing_radius: radius_base })
}

/// Series of (ω − ω₀)^α to `order` terms (principal branch of (−ω₀)^α).
pub fn probe_series(omega0: &BigComplex, alpha: &BigComplex, order: usize) -> Series {
    let bits = omega0.prec();
    let lead = (-omega0).powc(alpha);
    let r = omega0.recip();
    let mut c = Vec::with_capacity(order);
    let mut term = lead;
    for j in 0..order {
        c.push(term.clone());
        // binom(α, j+1)(−1/ω₀)^{j+1} from binom(α, j)(−1/ω₀)^j
        let f = &(alpha - &BigComplex::from_int(bits, j as i64)) / &BigComplex::from_int(bits, j as i64 + 1);
        term = -&(&(&term * &f) * &r);
    }
    TruncatedSeries::new(c).expect("order ≥ 1")
}

#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub baseline: PoleReport,
    pub probed: PoleReport,
    /// per genuine baseline pole: displacement to its greedy match in the probed cloud
    pub displacement: Vec<(BigComplex, f64)>,
    pub tolerance: f64,
    /// baseline poles that stayed put: branch-point candidates
    pub unmoved: Vec<BigComplex>,
    pub moved: Vec<BigComplex>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

/// Compares Padé pole clouds of p and of p + (ω − ω₀)^α.
pub fn probe_singularity(p: &Series, omega0: &BigComplex, alpha: &BigComplex, m: usize, k: usize) -> Result<ProbeResult, PadeError> {
    let baseline = poles(&pade(p, m, k)?)?;
    let probe = probe_series(&omega0.with_prec(p.prec()), &alpha.with_prec(p.prec()), p.order());
    let probed = poles(&pade(&p.add(&probe), m, k)?)?;
    let base: Vec<&PoleInfo> = baseline.genuine().collect();
    let spacing = median(
        base.iter()
            .enumerate()
            .map(|(i, a)| {
                base.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, b)| (&a.location - &b.location).abs_f64())
                    .fold(f64::INFINITY, f64::min)
            })
            .filter(|d| d.is_finite())
            .collect(),
    );
    let tolerance = 10.0 * spacing;
    // greedy matching on distance, closest pairs first
    let cand: Vec<&PoleInfo> = probed.genuine().collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in base.iter().enumerate() {
        for (j, b) in cand.iter().enumerate() {
            pairs.push(((&a.location - &b.location).abs_f64(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut match_of = vec![f64::INFINITY; base.len()];
    let mut used_a = vec![false; base.len()];
    let mut used_b = vec![false; cand.len()];
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            match_of[i] = d;
        }
    }
    let displacement: Vec<(BigComplex, f64)> = base.iter().zip(&match_of).map(|(a, d)| (a.location.clone(), *d)).collect();
    let unmoved = displacement.iter().filter(|(_, d)| *d <= tolerance).map(|(z, _)| z.clone()).collect();
    let moved = displacement.iter().filter(|(_, d)| *d > tolerance).map(|(z, _)| z.clone()).collect();
    Ok(ProbeResult { baseline, probed, displacement, tolerance, unmoved, moved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{with_precision, Scalar};
    use rand::{Rng, SeedableRng};

    fn bits(d: u32) -> u32 {
        with_precision(d).unwrap().bits()
    }

    fn ser(b: u32, c: &[f64]) -> Series {
        Series::from_f64(b, c)
    }

    #[test]
    fn rational_is_recovered() {
        let b = bits(30);
        // (1+ω)/(1−ω) = 1 + 2ω + 2ω² + …
        let p = ser(b, &[1.0, 2.0, 2.0, 2.0, 2.0, 2.0]);
        let pa = pade(&p, 1, 1).unwrap();
        assert_eq!(pa.denominator.coeffs[0], BigComplex::from_int(pa.denominator.prec(), 1));
        assert!((&pa.denominator.coeffs[1] + &BigComplex::from_int(pa.denominator.prec(), 1)).abs_f64() < 1e-30);
        assert!((&pa.numerator.coeffs[1] - &BigComplex::from_int(pa.denominator.prec(), 1)).abs_f64() < 1e-30);
        let w = BigComplex::from_f64(b, 0.3, 0.7);
        let o = BigComplex::from_int(b, 1);
        let want = &(&o + &w) / &(&o - &w);
        assert!((&pa.eval(&w) - &want).abs_f64() < 1e-28);
    }

    #[test]
    fn geometric_pole_at_one() {
        let b = bits(30);
        let p = ser(b, &[1.0; 8]);
        let pa = pade(&p, 0, 1).unwrap();
        let r = poles(&pa).unwrap();
        assert_eq!(r.poles.len(), 1);
        assert!((&r.poles[0].location - &BigComplex::from_int(b, 1)).abs_f64() < 1e-30);
    }

    #[test]
    fn two_poles() {
        let b = bits(30);
        // 1/((1−ω)(1−ω/2)) = Σ (2 − 2^{−k}) ω^k
        let c: Vec<f64> = (0..10).map(|k| 2.0 - 0.5f64.powi(k)).collect();
        let pa = pade(&ser(b, &c), 0, 2).unwrap();
        let mut locs: Vec<f64> = poles(&pa).unwrap().poles.iter().map(|p| p.location.re.to_f64()).collect();
        locs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((locs[0] - 1.0).abs() < 1e-25 && (locs[1] - 2.0).abs() < 1e-25);
    }

    #[test]
    fn degenerate_block_reduces_k() {
        let b = bits(30);
        let p = ser(b, &[1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0]);
        let pa = pade(&p, 2, 2).unwrap();
        assert!(pa.reduced());
        let w = BigComplex::from_f64(b, -0.4, 0.2);
        let o = BigComplex::from_int(b, 1);
        assert!((&pa.eval(&w) - &(&(&o + &w) / &(&o - &w))).abs_f64() < 1e-25);
        assert!(matches!(pade(&p, 5, 5), Err(PadeError::Order { .. })));
    }

    #[test]
    fn order_condition_and_random_rationals() {
        let b = bits(30);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for j in 1..=8usize {
            // F = N/D with D(0) = 1, random coefficients
            let num: Vec<f64> = (0..=j).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut den: Vec<f64> = (0..=j).map(|_| rng.gen_range(-0.5..0.5)).collect();
            den[0] = 1.0;
            let n = 2 * j + 4;
            let f = ser(b, &num).extend_zero(n).div(&ser(b, &den).extend_zero(n)).unwrap();
            let pa = pade(&f, j, j).unwrap();
            let res = pa.residual(&f);
            for c in res.coeffs.iter().take(2 * j + 1) {
                assert!(c.abs_f64() < 1e-25, "j={j}");
            }
            for _ in 0..20 {
                let w = BigComplex::from_f64(b, rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let want = &ser(b, &num).eval(&w) / &ser(b, &den).eval(&w);
                let got = pa.eval(&w);
                assert!((&got - &want).abs_f64() <= 1e-25 * (1.0 + want.abs_f64()), "j={j}");
            }
        }
    }

    #[test]
    fn froissart_doublet_from_noise() {
        let b = bits(40);
        let n = 79;
        let a = BigComplex::from_f64(b, -0.2, 0.0);
        let mut s = Series::constant(BigComplex::from_int(b, 1), n).sub(&Series::identity(n, &BigComplex::zero(b)));
        s = s.pow_any(&a).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for c in s.coeffs.iter_mut() {
            let e = BigComplex::from_f64(b, rng.gen_range(-1.0..1.0) * 1e-30, 0.0);
            *c = &*c + &e;
        }
        // at [19/19] the approximation error still exceeds the noise; doublets appear from ~[25/25]
        let r = poles(&pade(&s.truncate(61), 30, 30).unwrap()).unwrap();
        assert!(r.froissart_count() >= 1, "{}", r.froissart_count());
    }

    #[test]
    fn poles_accumulate_on_the_cut() {
        let b = bits(60);
        let mut last = 0.0;
        for &n in &[10usize, 20, 40] {
            let order = 2 * n + 1;
            let s = Series::constant(BigComplex::from_int(b, 1), order)
                .sub(&Series::identity(order, &BigComplex::zero(b)))
                .pow_any(&BigComplex::from_f64(b, 0.5, 0.0))
                .unwrap();
            let r = poles(&pade(&s, n, n).unwrap()).unwrap();
            let inside = r
                .poles
                .iter()
                .filter(|p| p.location.im.clone().abs() < 1e-6 && p.location.re >= 1 && p.location.re <= 3)
                .count();
            let frac = inside as f64 / r.poles.len() as f64;
            assert!(frac + 0.05 >= last, "n={n} frac={frac}");
            last = frac;
        }
        assert!(last > 0.5);
    }

    #[test]
    fn probe_leaves_branch_point_pole() {
        let b = bits(40);
        let n = 61;
        let s = Series::constant(BigComplex::from_int(b, 1), n)
            .sub(&Series::identity(n, &BigComplex::zero(b)))
            .pow_any(&BigComplex::from_f64(b, 1.0 / 3.0, 0.0))
            .unwrap();
        let w0 = BigComplex::from_f64(b, 1.05, 0.1);
        let alpha = BigComplex::from_f64(b, -0.5, 0.0);
        let r = probe_singularity(&s, &w0, &alpha, 30, 30).unwrap();
        // the pole nearest the branch point stays, the arc interior moves
        let nearest = r
            .displacement
            .iter()
            .min_by(|x, y| {
                let dx = (&x.0 - &BigComplex::from_int(b, 1)).abs_f64();
                let dy = (&y.0 - &BigComplex::from_int(b, 1)).abs_f64();
                dx.partial_cmp(&dy).unwrap()
            })
            .unwrap();
        assert!(nearest.1 <= r.tolerance, "{:?} tol {}", nearest.1, r.tolerance);
        assert!(!r.moved.is_empty());
    }

    #[test]
    fn roots_of_wilkinson_like_polynomial() {
        let b = bits(50);
        // ∏_{j=1}^{12} (x − j)
        let mut c = vec![BigComplex::from_int(b, 1)];
        for j in 1..=12 {
            let mut next = vec![BigComplex::zero(b); c.len() + 1];
            for (i, ci) in c.iter().enumerate() {
                next[i + 1] = &next[i + 1] + ci;
                next[i] = &next[i] - &ci.mul_int(j);
            }
            c = next;
        }
        let mut r: Vec<f64> = poly_roots(&c).iter().map(|(z, ok)| {
            assert!(ok);
            z.re.to_f64()
        }).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (j, x) in r.iter().enumerate() {
            assert!((x - (j + 1) as f64).abs() < 1e-30);
        }
    }
}
