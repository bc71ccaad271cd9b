//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Failures are reported but do not change the exit status unless
//! RC_ACCEPTANCE_STRICT=1. RC_SKIP_EXTENDED=1 skips the Painlevé run.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riemann::elimination::{chebyshev_compose, l_beta, l_beta_inverse, ElimMap};
use riemann::maps::{catalog, MapInstance, MapKind};
use riemann::numerics::{with_precision, BigComplex, RatComplex, Scalar};
use riemann::pade;
use riemann::painleve::{p1_benchmark, P1Run};
use riemann::reconstruct::{build_qn, error_bound, extrapolate_coefficients, reconstruct_at, WeightSpec};
use riemann::series::{RatSeries, Series};
use riemann::special;
use rug::ops::Pow;
use rug::Float;

const X1: &str = "-2.38416876956881663929914585244876719041040881473785051267725";
const H1: &str = "0.0621357392261776408964901416400624601977407713738296636635333";

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: &BigComplex, b: &BigComplex) -> f64 {
    (a - b).abs_f64() / b.abs_f64()
}

fn pt(bits: u32, re: f64, im: f64) -> BigComplex {
    BigComplex::from_f64(bits, re, im)
}

fn crit1() -> Outcome {
    let s = special::inverse_nome_series(4, &RatComplex::int(0));
    let want: Vec<RatComplex> = [16, -128, 704].iter().map(|&x| RatComplex::int(x)).collect();
    let got = &s.coeffs[1..4];
    check(got == want.as_slice(), format!("{} {} {}", got[0].re, got[1].re, got[2].re))
}

fn crit2() -> Outcome {
    let c = with_precision(40).unwrap();
    let b = c.bits();
    let one = MapInstance::simple(MapKind::OneCut, c).acceleration_modulus();
    let two = MapInstance::simple(MapKind::TwoCut, c).acceleration_modulus();
    let tp = MapInstance::simple(MapKind::TwoPuncture, c).acceleration_modulus();
    let want = Float::with_val(b, 0.75).gamma().pow(4u32) / Float::with_val(b, rug::float::Constant::Pi).square();
    // second route: ψ(ω)/ω at ω = 10⁻⁴⁰, from the map's own ψ at 90 digits
    let fine = MapInstance::simple(MapKind::TwoPuncture, with_precision(90).unwrap());
    let eps = BigComplex::from_real(Float::with_val(fine.bits(), Float::parse("1e-40").unwrap()));
    let slope = fine.psi(&eps).unwrap().re / &eps.re;
    let d1 = Float::with_val(b, &one - 0.25).abs().to_f64();
    let d2 = Float::with_val(b, &two - 0.5).abs().to_f64();
    let d3 = Float::with_val(b, &tp - &want).abs().to_f64() / want.to_f64();
    let d4 = Float::with_val(b, &slope - &want).abs().to_f64() / want.to_f64();
    let prefix = (tp.to_f64() - 0.2285).abs() < 5e-5;
    check(
        d1 < 1e-35 && d2 < 1e-35 && d3 < 1e-30 && d4 < 1e-30 && prefix,
        format!("one-cut err {d1:.1e}, two-cut err {d2:.1e}, two-puncture {:.12} rel {d3:.1e}, ψ(ε)/ε rel {d4:.1e}", tp.to_f64()),
    )
}

fn crit3() -> Outcome {
    let c = with_precision(60).unwrap();
    let p = special::elliptic_k_series(9, c.bits());
    let map = MapInstance::simple(MapKind::Nome, c);
    let e = extrapolate_coefficients(&p, &map, 481).unwrap();
    let truth = special::elliptic_k_series(481, c.bits());
    let a9 = rel(&e.coeffs[9], &truth.coeffs[9]);
    let worst = (9..481).map(|k| rel(&e.coeffs[k], &truth.coeffs[k])).fold(0.0, f64::max);
    check(a9 <= 5e-9 && worst <= 3e-3, format!("a9 rel {a9:.2e}, max rel a9..a480 {worst:.2e}"))
}

/// log(1 + ω/2 + ω²/3 + …) in exact rationals, the ω-dependent part of log(ω⁻¹log(1−ω))
fn log_example(order: usize) -> RatSeries {
    let g: Vec<RatComplex> = (0..order).map(|k| RatComplex::ratio(1, k as i64 + 1)).collect();
    RatSeries::new(g).unwrap().log().unwrap()
}

fn crit4() -> Outcome {
    let c = with_precision(150).unwrap();
    let map = MapInstance::simple(MapKind::Nome, c);
    // inputs carry the n·log10(16) digits that rounding would otherwise lose
    let input = c.elevated(80).bits();
    let k_truth = special::elliptic_k_series(61, input);
    let k_err = {
        let e = extrapolate_coefficients(&k_truth.truncate(60), &map, 61).unwrap();
        rel(&e.coeffs[60], &k_truth.coeffs[60])
    };
    let l = log_example(62);
    let l_err = |n: usize| {
        let e = extrapolate_coefficients(&l.truncate(n).to_big(input), &map, n + 1).unwrap();
        rel(&e.coeffs[n], &l.coeffs[n].to_big(input))
    };
    let (l60, l61) = (l_err(60), l_err(61));
    check(
        k_err <= 1e-70 && l60 <= 1e-72,
        format!("K a60 rel {k_err:.2e} (≤1e-70), log a60 rel {l60:.2e} (≤1e-72); a61 from 61 terms {l61:.2e}"),
    )
}

fn crit5() -> Outcome {
    let c = with_precision(30).unwrap();
    let p = special::elliptic_k_series(9, c.bits());
    let map = MapInstance::simple(MapKind::Nome, c);
    let pts: Vec<BigComplex> = (0..24)
        .map(|j| {
            let th = 0.2 + j as f64 * (2.0 * std::f64::consts::PI - 0.4) / 23.0;
            pt(c.bits(), 3.0 * th.cos(), 3.0 * th.sin())
        })
        .collect();
    let r = reconstruct_at(&p, &map, &pts).unwrap();
    let mut worst: f64 = 0.0;
    for v in r.points {
        let v = v.unwrap();
        worst = worst.max((&v.value - &special::elliptic_k(&v.at).unwrap()).abs_f64());
    }
    let pa = pade::pade(&p, 4, 4).unwrap();
    let k = special::elliptic_k_side(&Float::with_val(c.bits(), 1.2), true);
    let pade_rel = rel(&pa.eval(&pt(c.bits(), 1.2, 0.0)), &k);
    check(worst < 1e-5 && pade_rel >= 0.3, format!("max abs err on |ω|=3 {worst:.2e}, plain Padé [4/4] rel err at 1.2 {pade_rel:.2}"))
}

fn crit6() -> Outcome {
    let c = with_precision(50).unwrap();
    let b = c.bits();
    let q = l_beta(&special::elliptic_k_series(101, b), &BigComplex::from_f64(b, -0.5, 0.0)).unwrap();
    let sqrt_pi = Float::with_val(b, rug::float::Constant::Pi).sqrt();
    let half = |x: f64| Float::with_val(b, x).gamma();
    let mut worst = Float::with_val(b, 0);
    let mut ratio = 0.0;
    for k in 0..=100usize {
        let kf = k as f64;
        let g = half(kf + 0.5);
        let want = Float::with_val(b, &sqrt_pi / 4u32) * g.square() / (half(kf + 1.0) * half(kf + 1.5));
        let got = &q.coeffs[k + 1].re;
        let d = Float::with_val(b, got - &want).abs() / &want;
        ratio = Float::with_val(b, got / &want).to_f64();
        worst.max_mut(&d);
    }
    let tol = 10f64.powi(-47);
    check(worst.to_f64() <= tol, format!("max rel dev {:.2e} (tol 1e-47), coefficient ratio {ratio}", worst.to_f64()))
}

fn crit7() -> Outcome {
    let c = with_precision(40).unwrap();
    let (b, hi) = (c.bits(), c.elevated(40).bits());
    let one = Series::from_f64(hi, &[1.0]).extend_zero(31);
    let z = Series::from_f64(hi, &[0.0, 1.0]).extend_zero(31);
    let inner = |m: ElimMap| -> Series {
        match m {
            ElimMap::Phi0 => Series::from_f64(hi, &[0.0, 2.0, -1.0]).extend_zero(31),
            ElimMap::Phi1 => z.scale_real(&Float::with_val(hi, 4)).div(&one.add(&z).mul(&one.add(&z))).unwrap(),
            ElimMap::Phi2 => z.scale_real(&Float::with_val(hi, 2)).div(&one.add(&z.mul(&z))).unwrap(),
        }
    };
    let inners: Vec<(ElimMap, Series)> = ElimMap::ALL.iter().map(|&m| (m, inner(m))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let v: Vec<f64> = (0..31).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = Series::from_f64(b, &v);
        for (m, phi) in &inners {
            let fast = chebyshev_compose(&p, *m);
            let direct = Series::compose(&p.with_prec(hi), phi).unwrap();
            for (x, y) in fast.coeffs.iter().zip(&direct.coeffs) {
                worst = worst.max(x.dist(&y.with_prec(b)).to_f64() / y.abs_f64().max(1.0));
            }
        }
    }
    check(worst <= 1e-35, format!("max scaled deviation {worst:.2e} over 150 compositions (tol 1e-35)"))
}

fn crit8() -> Outcome {
    let c = with_precision(40).unwrap();
    let b = c.bits();
    let k6 = MapInstance::simple(MapKind::LandenComposite { k: 6 }, c);
    let c1 = k6.phi_series(2).unwrap().coeffs[1].re.to_f64();
    let edge = Float::with_val(b, 1) - Float::with_val(b, 1e-33);
    let w = k6.psi(&BigComplex::from_real(edge)).unwrap().re.to_f64();
    let mut sups = Vec::new();
    for k in 1..=6 {
        let map = MapInstance::simple(MapKind::LandenComposite { k }, c);
        let mut sup = Float::with_val(b, 0);
        for j in 0..24 {
            let th = j as f64 * std::f64::consts::PI / 12.0;
            let z = pt(b, 0.9 * th.cos(), 0.9 * th.sin());
            sup.max_mut(&(&map.phi(&z).unwrap() - &special::inverse_nome(&z).unwrap()).abs());
        }
        sups.push(sup);
    }
    let monotone = sups.windows(2).all(|w| w[1] < w[0]);
    // the supremum sits at z = −0.9 where |λ| ≈ 3·10³⁹, so the decrease shows in late digits
    let shown: Vec<String> = sups.iter().map(|s| s.to_string_radix(10, Some(14))).collect();
    check(
        (15.7..=15.9).contains(&c1) && (0.85..=0.95).contains(&w) && monotone,
        format!("φ'(0) = {c1:.5} (want [15.7, 15.9]), ψ(1−1e−33) = {w:.5}, sup distances k=1..6 {} (decreasing: {monotone})", shown.join(" ")),
    )
}

fn crit9() -> Outcome {
    let c = with_precision(30).unwrap();
    let input = c.elevated((200.0 * 16f64.log10()).ceil() as u32);
    let p = special::elliptic_k_series(200, input.bits());
    let q = build_qn(&p, &MapInstance::simple(MapKind::Nome, c)).unwrap();
    let tol = 10f64.powi(-(c.digits as i32 - 5));
    let two_squares = |k: usize| (0..=k).any(|a| (0..=k).any(|b| a * a + b * b == k));
    let wrong: Vec<usize> = (0..=50).filter(|&k| (q.coeffs[k].abs_f64() < tol) == two_squares(k)).collect();
    let zeros = (0..=50).filter(|&k| !two_squares(k)).count();
    check(wrong.is_empty(), format!("{zeros} vanishing indices ≤ 50, mismatches {wrong:?}"))
}

fn crit10(run: &P1Run) -> Outcome {
    let Some(p) = run.poles.first() else {
        return check(false, "no pole found");
    };
    let b = p.x.prec();
    let x1 = BigComplex::parse(X1, b).unwrap();
    let h1 = BigComplex::parse(H1, b).unwrap();
    let ex = rel(&p.x, &x1);
    let eh = rel(&p.h, &h1);
    let fit_tol = 1e-15;
    let l2 = (&p.laurent[4] - &p.x.div_int(10)).abs_f64();
    let l3 = (&p.laurent[5] - &BigComplex::from_int(b, 1).div_int(6)).abs_f64();
    check(
        ex <= 1e-8 && eh <= 1e-6 && l2 <= fit_tol && l3 <= fit_tol,
        format!(
            "x1 rel {ex:.2e}, h1 = {} rel {eh:.2e}, l2 err {l2:.1e}, l3 err {l3:.1e}, fit residual {:.1e}",
            p.h.to_string_digits(20),
            p.residual
        ),
    )
}

fn crit11() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let c = with_precision(25).unwrap();
    // map roundtrips and Schwarz samples
    for map in catalog(c) {
        if matches!(map.kind, MapKind::DiskAutomorphism { .. }) {
            continue;
        }
        let b = map.bits();
        for _ in 0..4 {
            let (r, a): (f64, f64) = (rng.gen_range(0.05..0.95), rng.gen_range(0.0..std::f64::consts::TAU));
            let w = pt(b, r * a.cos(), r * a.sin());
            let z = map.psi(&w).unwrap();
            if z.abs() >= w.abs() {
                failures.push(format!("Schwarz {}", map.name()));
            }
            if (&map.phi(&z).unwrap() - &w).abs_f64() > 1e-20 {
                failures.push(format!("φ∘ψ {}", map.name()));
            }
            if !map.is_uniformizing() {
                let z = pt(b, 0.9 * a.cos(), 0.9 * a.sin());
                if (&map.psi(&map.phi(&z).unwrap()).unwrap() - &z).abs_f64() > 1e-20 {
                    failures.push(format!("ψ∘φ {}", map.name()));
                }
            }
        }
    }
    // L_β invertibility
    let c40 = with_precision(40).unwrap();
    let b = c40.bits();
    for _ in 0..10 {
        let v: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = Series::from_f64(b, &v);
        let beta = pt(b, rng.gen_range(-0.9..2.0), 0.0);
        let back = l_beta_inverse(&l_beta(&p, &beta).unwrap(), &beta).unwrap();
        if back.max_abs_diff(&p) > 1e-33 {
            failures.push(format!("L_β roundtrip at β = {}", beta.re.to_f64()));
        }
    }
    // Padé order condition
    for j in 1..=8usize {
        let num: Vec<f64> = (0..=j).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut den: Vec<f64> = (0..=j).map(|_| rng.gen_range(-0.5..0.5)).collect();
        den[0] = 1.0;
        let n = 2 * j + 4;
        let f = Series::from_f64(b, &num).extend_zero(n).div(&Series::from_f64(b, &den).extend_zero(n)).unwrap();
        let pa = pade::pade(&f, j, j).unwrap();
        if pa.residual(&f).coeffs.iter().take(2 * j + 1).any(|c| c.abs_f64() > 1e-35) {
            failures.push(format!("Padé order condition [{j}/{j}]"));
        }
    }
    // error bounds decrease in n and increase in |z|
    for w in [WeightSpec::Unit, WeightSpec::Power(1.0), WeightSpec::Exponential { c: 0.1, a: 1.0 }] {
        for &z in &[0.1, 0.5, 0.9] {
            let zf = Float::with_val(64, z);
            let bounds: Vec<Float> = (1..40).map(|n| error_bound(n, &zf, &w).unwrap()).collect();
            if bounds.windows(2).any(|p| p[1] >= p[0]) {
                failures.push(format!("bound not decreasing in n at |z| = {z}"));
            }
        }
        let by_z: Vec<Float> = [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|&z| error_bound(20, &Float::with_val(64, z), &w).unwrap()).collect();
        if by_z.windows(2).any(|p| p[1] <= p[0]) {
            failures.push("bound not increasing in |z|".into());
        }
    }
    let detail = if failures.is_empty() { "maps, Schwarz, L_β, Padé, error bounds".to_string() } else { failures.join("; ") };
    check(failures.is_empty(), detail)
}

fn main() {
    let extended = std::env::var("RC_SKIP_EXTENDED").map_or(true, |v| v != "1");
    let strict = std::env::var("RC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut failed = 0;
    let mut report = |n: u32, budget: Duration, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let dt = t.elapsed();
        let in_time = dt <= budget;
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        let late = if in_time { String::new() } else { format!(", over the {budget:?} budget") };
        println!("{} criterion {n:>2}: {} [{:.2?}{late}]", if pass { "PASS" } else { "FAIL" }, o.detail, dt);
    };
    let s = Duration::from_secs;
    report(1, s(1), &crit1);
    report(2, s(1), &crit2);
    report(3, s(60), &crit3);
    report(4, s(300), &crit4);
    report(5, s(10), &crit5);
    report(6, s(5), &crit6);
    report(7, s(30), &crit7);
    report(8, s(60), &crit8);
    report(9, s(30), &crit9);
    if extended {
        report(10, s(900), &|| {
            let ctx = with_precision(300).unwrap();
            let map = MapInstance::simple(MapKind::OmegaZ, ctx);
            match p1_benchmark(200, &map, 10.0, 1, &ctx) {
                Ok(run) => crit10(&run),
                Err(e) => check(false, e.to_string()),
            }
        });
    } else {
        println!("SKIP criterion 10: extended run disabled by RC_SKIP_EXTENDED");
    }
    report(11, s(120), &crit11);
    println!("{failed} criteria failed");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
