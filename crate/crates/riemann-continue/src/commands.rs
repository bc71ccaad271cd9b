use std::path::{Path, PathBuf};

use rayon::prelude::*;
use riemann::elimination::{self, ElimMap, EliminationPlan, Hypothesis, LocalSingularData};
use riemann::maps::{self, MapInstance};
use riemann::numerics::{format_float, BigComplex, PrecisionContext, Scalar};
use riemann::pade::{self, PoleReport};
use riemann::painleve;
use riemann::reconstruct;
use riemann::series::Series;
use serde_json::{json, Value};

use crate::io::{self, num, Provenance};
use crate::{Cli, Command, Failure, MapArgs, MapsAction};

struct Run<'a> {
    cli: &'a Cli,
    ctx: PrecisionContext,
    digits: usize,
    prov: Provenance,
}

impl Run<'_> {
    fn bits(&self) -> u32 {
        self.ctx.bits()
    }

    fn series(&mut self, path: &Path) -> Result<Series, Failure> {
        let s = io::read_series(path, self.bits())?;
        self.prov.inputs.push((path.to_path_buf(), s.clone()));
        Ok(s)
    }

    fn map(&self, m: &MapArgs) -> Result<MapInstance, Failure> {
        maps::parse_map(&m.map, &m.params, self.ctx).map_err(|e| Failure::fatal(e.to_string()))
    }

    fn point(&self, s: &str) -> Result<BigComplex, Failure> {
        BigComplex::parse(s, self.bits()).map_err(|e| Failure::fatal(format!("{s:?}: {e}")))
    }

    fn n(&self, z: &BigComplex) -> Value {
        num(z, self.digits)
    }

    fn emit(&self, result: Value) -> Result<(), Failure> {
        io::write_json(self.cli.out.as_deref(), &self.prov.envelope(result))
    }

    fn emit_csv(&self, path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
        io::write_csv(path, header, rows)
    }
}

fn fatal<E: std::fmt::Display>(e: E) -> Failure {
    Failure::fatal(e.to_string())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Maps { .. } => "maps",
        Command::Continue { .. } => "continue",
        Command::Extrapolate { .. } => "extrapolate",
        Command::ScanCircle { .. } => "scan-circle",
        Command::Pade { .. } => "pade",
        Command::ProbePade { .. } => "probe-pade",
        Command::Eliminate { .. } => "eliminate",
        Command::Probe { .. } => "probe",
        Command::PainleveP1 { .. } => "painleve-p1",
        Command::RootTest { .. } => "root-test",
    }
}

pub fn run(cli: &Cli, arguments: Vec<String>) -> Result<(), Failure> {
    let ctx = PrecisionContext::new(cli.precision).map_err(fatal)?;
    let prov = Provenance { command: command_name(&cli.command).into(), arguments, digits: cli.precision, inputs: vec![] };
    let mut r = Run { cli, ctx, digits: io::digits_for(ctx.bits()), prov };
    match &cli.command {
        Command::Maps { action } => maps_cmd(&mut r, action),
        Command::Continue { coeffs, map, at, disk } => continue_cmd(&mut r, coeffs, map, at, *disk),
        Command::Extrapolate { coeffs, map, order } => {
            let p = r.series(coeffs)?;
            let m = r.map(map)?;
            let q = reconstruct::extrapolate_coefficients(&p, &m, *order).map_err(fatal)?;
            r.emit(json!({"map": m.name(), "series": io::series_json(&q, r.digits)}))
        }
        Command::ScanCircle { coeffs, map, radius, samples } => scan_cmd(&mut r, coeffs, map, radius, *samples),
        Command::Pade { coeffs, m, n, poles } => pade_cmd(&mut r, coeffs, *m, *n, *poles),
        Command::ProbePade { coeffs, omega0, alpha, m, n } => probe_pade_cmd(&mut r, coeffs, omega0, alpha, *m, *n),
        Command::Eliminate { coeffs, omega0, alpha, beta, map, log } => eliminate_cmd(&mut r, coeffs, omega0, alpha, beta, map, *log),
        Command::Probe { coeffs, omega0_grid, alpha_grid, with_log } => probe_cmd(&mut r, coeffs, omega0_grid, alpha_grid, *with_log),
        Command::PainleveP1 { terms, map, params, poles, x0, borel } => p1_cmd(&mut r, *terms, map, params, *poles, *x0, borel.as_ref()),
        Command::RootTest { coeffs } => {
            let p = r.series(coeffs)?;
            let t = reconstruct::root_test(&p).map_err(fatal)?;
            r.emit(json!({
                "radius": t.radius,
                "algebraic_exponent": t.algebraic_exponent,
                "fitted_indices": t.fitted_indices,
                "boundary_profile": t.boundary_profile.iter().map(|(th, v)| json!([th, v])).collect::<Vec<_>>(),
            }))
        }
    }
}

fn maps_cmd(r: &mut Run, action: &MapsAction) -> Result<(), Failure> {
    match action {
        MapsAction::List => {
            let d = r.digits.min(30);
            let list: Vec<Value> = maps::catalog(r.ctx)
                .iter()
                .map(|m| {
                    json!({
                        "name": m.name(),
                        "uniformizing": m.is_uniformizing(),
                        "phi_prime_0": format_float(&m.c1(), d),
                        "acceleration_modulus": format_float(&m.acceleration_modulus(), d),
                    })
                })
                .collect();
            r.emit(json!({"maps": list}))
        }
        MapsAction::Series { map, order, psi } => {
            let m = r.map(map)?;
            let s = if *psi { m.psi_series(*order) } else { m.phi_series(*order) }.map_err(fatal)?;
            let s = s.labeled(format!("{} of {}", if *psi { "psi" } else { "phi" }, m.name()));
            r.emit(json!({"map": m.name(), "series": io::series_json(&s, r.digits)}))
        }
    }
}

fn continue_cmd(r: &mut Run, coeffs: &Path, map: &MapArgs, at: &[String], disk: bool) -> Result<(), Failure> {
    let p = r.series(coeffs)?;
    let m = r.map(map)?;
    let pts = at.iter().map(|s| r.point(s)).collect::<Result<Vec<_>, _>>()?;
    let res = if disk { reconstruct::reconstruct_at_disk(&p, &m, &pts) } else { reconstruct::reconstruct_at(&p, &m, &pts) }.map_err(fatal)?;
    let mut failed = 0;
    let points: Vec<Value> = res
        .points
        .iter()
        .zip(&pts)
        .map(|(v, z)| match v {
            Ok(pv) => json!({
                "at": r.n(&pv.at),
                "disk_point": r.n(&pv.disk_point),
                "value": r.n(&pv.value),
                "bound": format_float(&pv.bound, 6),
            }),
            Err(e) => {
                failed += 1;
                json!({"at": r.n(z), "error": e.to_string()})
            }
        })
        .collect();
    r.emit(json!({"map": res.map_name, "n": res.n, "points": points, "failed": failed}))?;
    partial(failed, pts.len())
}

fn partial(failed: usize, total: usize) -> Result<(), Failure> {
    if failed > 0 {
        return Err(Failure { code: 2, message: format!("{failed} of {total} points failed; see the report") });
    }
    Ok(())
}

fn scan_cmd(r: &mut Run, coeffs: &Path, map: &MapArgs, radius: &str, samples: usize) -> Result<(), Failure> {
    let p = r.series(coeffs)?;
    let m = r.map(map)?;
    let rad = r.point(radius)?;
    if samples == 0 {
        return Err(Failure::fatal("--samples must be positive"));
    }
    let bits = r.bits();
    let pts: Vec<BigComplex> = (0..samples)
        .map(|j| (BigComplex::pi(bits).mul_i().mul_int(2 * j as i64).div_int(samples as i64)).exp().scale(&rad.re))
        .collect();
    let res = reconstruct::reconstruct_at(&p, &m, &pts).map_err(fatal)?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (j, v) in res.points.iter().enumerate() {
        let theta = std::f64::consts::TAU * j as f64 / samples as f64;
        match v {
            Ok(pv) => rows.push(vec![format!("{theta:.17e}"), format_float(&pv.value.abs(), r.digits)]),
            Err(e) => errors.push(json!({"theta": theta, "error": e.to_string()})),
        }
    }
    r.emit_csv(r.cli.csv.as_deref().or(r.cli.out.as_deref()), &["theta", "abs_value"], &rows)?;
    if !errors.is_empty() {
        // stdout may already hold the CSV
        let report = r.prov.envelope(json!({"map": m.name(), "failed": errors.len(), "errors": errors}));
        eprintln!("{}", serde_json::to_string_pretty(&report).expect("json values serialize"));
    }
    partial(errors.len(), samples)
}

fn pole_report(r: &Run, rep: &PoleReport) -> Value {
    json!({
        "poles": rep.poles.iter().map(|p| json!({
            "location": r.n(&p.location),
            "residue_scale": p.residue_scale,
            "froissart": p.froissart,
            "converged": p.converged,
        })).collect::<Vec<_>>(),
        "zeros": rep.zeros.iter().map(|z| r.n(z)).collect::<Vec<_>>(),
        "pairing_radius": rep.pairing_radius,
        "froissart_count": rep.froissart_count(),
    })
}

fn pade_cmd(r: &mut Run, coeffs: &Path, m: usize, n: usize, with_poles: bool) -> Result<(), Failure> {
    let p = r.series(coeffs)?;
    let pa = pade::pade(&p, m, n).map_err(fatal)?;
    let mut out = json!({
        "m": pa.m,
        "n": pa.k,
        "requested": [pa.requested.0, pa.requested.1],
        "numerator": io::series_json(&pa.numerator, r.digits),
        "denominator": io::series_json(&pa.denominator, r.digits),
    });
    if with_poles {
        let rep = pade::poles(&pa).map_err(fatal)?;
        out["pole_report"] = pole_report(r, &rep);
        if let Some(path) = r.cli.csv.as_deref() {
            let rows: Vec<Vec<String>> = rep
                .poles
                .iter()
                .map(|q| vec![format_float(&q.location.re, 20), format_float(&q.location.im, 20), (q.froissart as u8).to_string()])
                .collect();
            r.emit_csv(Some(path), &["re", "im", "froissart"], &rows)?;
        }
    }
    r.emit(out)
}

fn probe_pade_cmd(r: &mut Run, coeffs: &Path, omega0: &str, alpha: &str, m: Option<usize>, n: Option<usize>) -> Result<(), Failure> {
    let p = r.series(coeffs)?;
    let w0 = r.point(omega0)?;
    let a = r.point(alpha)?;
    let half = (p.order().saturating_sub(1)) / 2;
    let res = pade::probe_singularity(&p, &w0, &a, m.unwrap_or(half), n.unwrap_or(half)).map_err(fatal)?;
    r.emit(json!({
        "omega0": r.n(&w0),
        "alpha": r.n(&a),
        "tolerance": res.tolerance,
        "unmoved": res.unmoved.iter().map(|z| r.n(z)).collect::<Vec<_>>(),
        "moved": res.moved.iter().map(|z| r.n(z)).collect::<Vec<_>>(),
        "displacement": res.displacement.iter().map(|(z, d)| json!({"pole": r.n(z), "shift": d})).collect::<Vec<_>>(),
        "baseline": pole_report(r, &res.baseline),
        "probed": pole_report(r, &res.probed),
    }))
}

fn eliminate_cmd(r: &mut Run, coeffs: &Path, omega0: &str, alpha: &str, beta: &str, map: &str, log: bool) -> Result<(), Failure> {
    let p = r.series(coeffs)?;
    let w0 = r.point(omega0)?;
    let a = r.point(alpha)?;
    let emap: ElimMap = map.parse().map_err(fatal)?;
    let bits = r.bits();
    let d = LocalSingularData::simple(BigComplex::from_int(bits, 1), a.clone(), log as u32);
    let plan = if beta == "auto" {
        EliminationPlan::canonical(&d, emap).map_err(fatal)?
    } else {
        let b = r.point(beta)?;
        let s = &(&a + &b) + &BigComplex::from_int(bits, 1);
        let k = (2.0 * s.re.to_f64()).round() as i64;
        EliminationPlan { beta: b, target_k: k, map: emap }
    };
    let scaled = elimination::rescale(&p, &w0);
    let out = elimination::eliminate(&scaled, &d, &plan).map_err(fatal)?;
    let local = elimination::transform_local_data(&d, &plan.beta).map_err(fatal)?;
    let rt = |s: &Series| reconstruct::root_test(s).ok().map(|t| t.radius);
    r.emit(json!({
        "omega0": r.n(&w0),
        "alpha": r.n(&a),
        "log": log,
        "beta": r.n(&plan.beta),
        "target_k": plan.target_k,
        "map": emap.name(),
        "transformed_alpha": r.n(&local.alpha),
        "transformed_log_order": local.log_order,
        "radius_before": rt(&scaled),
        "radius_after": rt(&out),
        "series": io::series_json(&out, r.digits),
    }))
}

fn probe_cmd(r: &mut Run, coeffs: &Path, omegas: &[String], alphas: &[String], with_log: bool) -> Result<(), Failure> {
    let p = r.series(coeffs)?;
    if omegas.is_empty() || alphas.is_empty() {
        return Err(Failure::fatal("--omega0-grid and --alpha-grid must be non-empty"));
    }
    let mut grid = Vec::new();
    for w in omegas {
        let w = r.point(w)?;
        for a in alphas {
            let a = r.point(a)?;
            grid.push(Hypothesis { omega0: w.clone(), alpha: a.clone(), log: false });
            // logs pair only with exponents 0, 1, 2, …
            let whole = a.im.is_zero() && a.re.is_integer() && a.re >= 0;
            if with_log && whole {
                grid.push(Hypothesis { omega0: w.clone(), alpha: a, log: true });
            }
        }
    }
    let scores = elimination::probe(&p, &grid).map_err(fatal)?;
    let list: Vec<Value> = scores
        .iter()
        .map(|s| {
            json!({
                "omega0": r.n(&s.hypothesis.omega0),
                "alpha": r.n(&s.hypothesis.alpha),
                "log": s.hypothesis.log,
                "beta": r.n(&s.beta),
                "score": s.score,
                "analytic": s.analytic,
                "radius_before": s.radius_before,
                "radius_after": s.radius_after,
            })
        })
        .collect();
    r.emit(json!({
        "heuristic": "score = log10(R_before/R_after) + RMS scatter of log10|b_k| over the top quartile; analytic when below the threshold",
        "threshold": elimination::ANALYTIC_THRESHOLD,
        "hypotheses": list,
    }))
}

fn p1_cmd(r: &mut Run, terms: usize, map: &str, params: &[(String, String)], poles: usize, x0: f64, borel: Option<&PathBuf>) -> Result<(), Failure> {
    if !(x0 > 0.0) {
        return Err(Failure::fatal("--x0 must be positive"));
    }
    let m = maps::parse_map(map, params, r.ctx).map_err(fatal)?;
    let run = painleve::p1_benchmark(terms, &m, x0, poles, &r.ctx).map_err(fatal)?;
    if let Some(path) = borel {
        let b = painleve::borel(&painleve::p1_series(terms, r.bits()).map_err(fatal)?).map_err(fatal)?;
        let v = r.prov.envelope(json!({"normalization": painleve::BOREL_NORMALIZATION, "series": io::series_json(&b, r.digits)}));
        io::write_json(Some(path), &v)?;
    }
    let list: Vec<Value> = run
        .poles
        .par_iter()
        .map(|p| {
            json!({
                "x": num(&p.x, r.digits),
                "h": num(&p.h, r.digits),
                "laurent": p.laurent.iter().map(|c| num(c, 30)).collect::<Vec<_>>(),
                "fit_residual": p.residual,
                "newton_iterations": p.iterations,
            })
        })
        .collect();
    if let Some(path) = r.cli.csv.as_deref() {
        let rows: Vec<Vec<String>> = run.poles.iter().map(|p| vec![format_float(&p.x.re, 30), format_float(&p.x.im, 30)]).collect();
        r.emit_csv(Some(path), &["re", "im"], &rows)?;
    }
    r.emit(json!({
        "equation": "y'' = 6 y^2 - x",
        "laurent_form": "y = (x-x_j)^-2 + x_j/10 (x-x_j)^2 + 1/6 (x-x_j)^3 + h_j (x-x_j)^4 + ...",
        "normalization": painleve::BOREL_NORMALIZATION,
        "map": run.map_name,
        "terms": run.terms,
        "x0": run.x0,
        "y_x0": num(&run.initial.y, r.digits),
        "dy_x0": num(&run.initial.dy, r.digits),
        "poles": list,
    }))
}
