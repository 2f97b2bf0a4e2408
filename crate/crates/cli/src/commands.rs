//! Subcommand bodies.

use std::collections::HashSet;
use std::path::Path;

use bohmnl_core::measures::{
    eta_ensemble, find_peak, find_revivals, fwhm as curve_fwhm, CurveAnalytics, EtaCurve, DEFAULT_REVIVAL_PROMINENCE,
};
use bohmnl_core::trajectories::{
    integrate, integrate_validated, non_crossing_check, sample_initial, velocity_field, Trajectory,
};
use bohmnl_core::validation::{run_all, ValidationOptions};
use bohmnl_core::{make_params, Error, Model};
use rayon::prelude::*;

use crate::output::{emit, g15, read_numeric_csv, svg_plot, NumericCsv, Table};
use crate::settings::{Settings, DEFAULT_GAMMA, DEFAULT_N, DEFAULT_SEED, DEFAULT_TEMP};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Method {
    Closed,
    Engine,
    Ensemble,
}

fn method(s: &Settings, allow_ensemble: bool) -> Result<Method, CliError> {
    match s.raw("method").unwrap_or("closed") {
        "closed" => Ok(Method::Closed),
        "engine" => Ok(Method::Engine),
        "ensemble" if allow_ensemble => Ok(Method::Ensemble),
        other => Err(CliError::usage(format!("--method: unknown method '{other}'"))),
    }
}

fn curve(model: &Model, t_end: f64, dt: f64, m: Method) -> Result<EtaCurve, Error> {
    match m {
        Method::Engine => EtaCurve::engine(model, t_end, dt),
        _ => EtaCurve::closed_form(model, t_end, dt),
    }
}

fn seed_and_n(s: &Settings) -> Result<(u64, usize), CliError> {
    let seed = s.u64_or("seed", DEFAULT_SEED)?;
    let n = s.u64_or("n", DEFAULT_N as u64)? as usize;
    Ok((seed, n))
}

/// Re-reads the formatted table so an SVG drawn now matches `plot` on the file.
fn table_as_numbers(t: &Table) -> Result<NumericCsv, CliError> {
    let mut columns = vec![Vec::with_capacity(t.rows.len()); t.header.len()];
    for r in &t.rows {
        for (c, v) in columns.iter_mut().zip(r) {
            c.push(v.parse().map_err(|_| CliError::numerical(format!("unparsable value {v}")))?);
        }
    }
    Ok(NumericCsv { header: t.header.clone(), columns })
}

fn emit_with_svg(s: &Settings, table: &Table) -> Result<(), CliError> {
    emit(&table.to_csv()?, s.path("out").as_deref())?;
    if let Some(svg) = s.path("svg") {
        let plot = svg_plot(&table_as_numbers(table)?)?;
        emit(plot.as_bytes(), Some(&svg))?;
    }
    Ok(())
}

fn reject_svg(s: &Settings, cmd: &str) -> Result<(), CliError> {
    if s.raw("svg").is_some() {
        return Err(CliError::usage(format!("--svg is not supported by {cmd}; use plot")));
    }
    Ok(())
}

pub fn eta(s: &Settings) -> Result<(), CliError> {
    let model = s.model()?;
    let (t_end, dt) = (s.t_end()?, s.dt()?);
    let (times, values) = match method(s, true)? {
        Method::Ensemble => {
            let (seed, n) = seed_and_n(s)?;
            let times = bohmnl_core::trajectories::time_grid(t_end, dt)?;
            let values = times
                .iter()
                .map(|&t| Ok(eta_ensemble(&model, t, n, seed)?.mean))
                .collect::<Result<Vec<_>, Error>>()?;
            (times, values)
        }
        m => {
            let c = curve(&model, t_end, dt, m)?;
            (c.times, c.values)
        }
    };
    let mut table = Table::new(&["t", "eta"]);
    table.rows = times.iter().zip(&values).map(|(&t, &v)| vec![g15(t), g15(v)]).collect();
    emit_with_svg(s, &table)
}

pub fn traj(s: &Settings, validate: bool) -> Result<(), CliError> {
    let model = s.model()?;
    let (t_end, dt) = (s.t_end()?, s.dt()?);
    let mut points = s.points()?;
    if points.is_empty() {
        if s.raw("n").is_none() {
            return Err(CliError::usage("traj needs at least one --point X10,X20 or --n to sample".into()));
        }
        let (seed, n) = seed_and_n(s)?;
        points = sample_initial(model.mu(), n, seed)?.pairs;
    }
    let field = velocity_field(&model, t_end, dt)?;
    let trajs: Vec<Trajectory> = points
        .par_iter()
        .map(|&(a, b)| {
            if validate {
                integrate_validated(field.as_ref(), a, b, t_end, dt)
            } else {
                integrate(field.as_ref(), a, b, t_end, dt)
            }
        })
        .collect::<Result<_, Error>>()?;
    let report = non_crossing_check(&trajs)?;
    for v in &report.violations {
        eprintln!(
            "warning: trajectories {} and {} meet at t = {} (distance {:e})",
            v.first, v.second, v.t, v.distance
        );
    }
    let mut header = vec!["t".to_string()];
    for k in 0..trajs.len() {
        header.push(format!("x1_{k}"));
        header.push(format!("x2_{k}"));
    }
    let mut table = Table { header, rows: Vec::new() };
    for (i, &t) in trajs[0].times.iter().enumerate() {
        let mut row = vec![g15(t)];
        for tr in &trajs {
            row.push(g15(tr.points[i].0));
            row.push(g15(tr.points[i].1));
        }
        table.rows.push(row);
    }
    emit_with_svg(s, &table)
}

fn prominence(s: &Settings) -> Result<f64, CliError> {
    let p = s.f64_or("prominence", DEFAULT_REVIVAL_PROMINENCE)?;
    if !(p >= 0.0) {
        return Err(CliError::usage(format!("--prominence must be >= 0, got {p}")));
    }
    Ok(p)
}

/// The cartesian grid of the list-valued flags, duplicates removed.
fn grid(s: &Settings) -> Result<Vec<Model>, CliError> {
    let scenarios = s.scenarios()?;
    let gammas = s.f64_list("gamma")?.unwrap_or(vec![DEFAULT_GAMMA]);
    let temps = s.f64_list("temp")?.unwrap_or(vec![DEFAULT_TEMP]);
    let mus = s.f64_list("mu")?.ok_or_else(|| CliError::missing("mu"))?;
    if scenarios.is_empty() || gammas.is_empty() || temps.is_empty() || mus.is_empty() {
        return Err(CliError::usage("empty parameter grid".into()));
    }
    let mut seen = HashSet::new();
    let mut models = Vec::new();
    for &sc in &scenarios {
        for &g in &gammas {
            for &temp in &temps {
                for &mu in &mus {
                    let key = (sc, g.to_bits(), temp.to_bits(), mu.to_bits());
                    if !seen.insert(key) {
                        eprintln!("warning: duplicate point {sc} gamma={g} T={temp} mu={mu} skipped");
                        continue;
                    }
                    models.push(Model::new(sc, make_params(g, temp, mu)?));
                }
            }
        }
    }
    Ok(models)
}

fn model_fields(m: &Model) -> Vec<String> {
    let p = &m.params;
    vec![m.scenario.to_string(), g15(p.gamma()), g15(p.temperature()), g15(p.mu())]
}

pub fn fwhm(s: &Settings) -> Result<(), CliError> {
    reject_svg(s, "fwhm")?;
    let prom = prominence(s)?;
    let mut table =
        Table::new(&["scenario", "gamma", "T", "mu", "t_peak", "peak", "fwhm", "revivals", "flag"]);
    if let Some(input) = s.path("input") {
        let data = read_numeric_csv(&input)?;
        if data.columns.len() < 2 {
            return Err(CliError::usage(format!("{}: expected columns t,eta", input.display())));
        }
        let c = EtaCurve::from_samples(data.columns[0].clone(), data.columns[1].clone())?;
        let mut row = vec!["input".to_string(), String::new(), String::new(), String::new()];
        row.extend(analytics_fields(&c, prom)?);
        table.rows.push(row);
    } else {
        let (t_end, dt, m) = (s.t_end()?, s.dt()?, method(s, false)?);
        let models = grid(s)?;
        let rows: Vec<Vec<String>> = models
            .par_iter()
            .map(|md| {
                let mut row = model_fields(md);
                row.extend(analytics_fields(&curve(md, t_end, dt, m)?, prom)?);
                Ok(row)
            })
            .collect::<Result<_, CliError>>()?;
        for (md, row) in models.iter().zip(&rows) {
            if row[8] == "no-peak" {
                eprintln!("warning: no interior peak for {} mu={}", md.scenario, g15(md.mu()));
            }
        }
        table.rows = rows;
    }
    let bytes = table.to_csv()?;
    emit(&bytes, None)?;
    if let Some(out) = s.path("out") {
        emit(&bytes, Some(&out))?;
    }
    Ok(())
}

/// `t_peak, peak, fwhm, revivals, flag`; a missing peak is a flagged row,
/// any other failure propagates.
fn analytics_fields(c: &EtaCurve, prom: f64) -> Result<Vec<String>, CliError> {
    let peak = match find_peak(c) {
        Ok(p) => p,
        Err(Error::NoPeak(_)) => {
            return Ok(vec![String::new(), String::new(), String::new(), String::new(), "no-peak".into()])
        }
        Err(e) => return Err(e.into()),
    };
    let w = curve_fwhm(c)?;
    let r = find_revivals(c, prom)?;
    Ok(vec![g15(peak.t), g15(peak.value), g15(w.width), r.len().to_string(), String::new()])
}

fn sweep_fields(c: &EtaCurve, prom: f64) -> Result<Vec<String>, Error> {
    let a: CurveAnalytics = c.analyze(prom)?;
    let first = a.revivals.revivals.first();
    Ok(vec![
        g15(a.peak.t),
        g15(a.peak.value),
        g15(a.fwhm.t_left),
        g15(a.fwhm.t_right),
        g15(a.fwhm.width),
        a.revivals.len().to_string(),
        first.map(|r| g15(r.t)).unwrap_or_default(),
        first.map(|r| g15(r.value)).unwrap_or_default(),
    ])
}

pub fn sweep(s: &Settings) -> Result<(), CliError> {
    reject_svg(s, "sweep")?;
    let prom = prominence(s)?;
    let (t_end, dt, m) = (s.t_end()?, s.dt()?, method(s, false)?);
    let models = grid(s)?;
    let results: Vec<Result<Vec<String>, Error>> =
        models.par_iter().map(|md| curve(md, t_end, dt, m).and_then(|c| sweep_fields(&c, prom))).collect();
    let mut table = Table::new(&[
        "scenario",
        "gamma",
        "T",
        "mu",
        "t_peak",
        "peak",
        "t_left",
        "t_right",
        "fwhm",
        "revivals",
        "first_revival_t",
        "first_revival",
        "error",
    ]);
    let mut ok = 0;
    for (md, r) in models.iter().zip(results) {
        let mut row = model_fields(md);
        match r {
            Ok(fields) => {
                ok += 1;
                row.extend(fields);
                row.push(String::new());
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 8));
                row.push(e.to_string());
            }
        }
        table.rows.push(row);
    }
    emit(&table.to_csv()?, s.path("out").as_deref())?;
    if ok == 0 {
        return Err(CliError::numerical("every sweep point failed; see the error column".into()));
    }
    Ok(())
}

pub fn validate(seed: u64, diffusion_scale: f64) -> Result<(), CliError> {
    if !(diffusion_scale > 0.0 && diffusion_scale.is_finite()) {
        return Err(CliError::usage(format!("--diffusion-scale must be positive, got {diffusion_scale}")));
    }
    let opts = ValidationOptions { diffusion_scale, seed };
    let mut failed = 0;
    let results = run_all(&opts);
    let total = results.len();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rep) => {
                print!("{rep}");
                if !rep.passed() {
                    failed += 1;
                }
            }
            Err(e) => {
                println!("criterion {:>2} FAIL raised an error: {e}", i + 1);
                failed += 1;
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {total} criteria failed");
        return Err(CliError::validation(format!("{failed} of {total} criteria failed")));
    }
    println!("all {total} criteria passed");
    Ok(())
}

pub fn plot(input: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let data = read_numeric_csv(input)?;
    emit(svg_plot(&data)?.as_bytes(), out)
}
