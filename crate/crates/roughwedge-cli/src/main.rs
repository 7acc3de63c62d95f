//! Experiment front end: reads a JSON config, runs one pipeline, writes a
//! CSV table or JSON report.
//!
//! Exit codes: 0 success, 1 usage error (bad flags or config), 2
//! certification failure under `--certified strict`.

mod config;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, ValueEnum};
use config::{Command, ExperimentConfig, FieldsSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roughwedge::field::ScalarField;
use roughwedge::germ::{germ_bound_check2, germ_bound_check3, strat_germ, FormTriple};
use roughwedge::integrate::{integrate_domain, integrate_polygon, integrate_simplex, Scheme};
use roughwedge::irregular::{
    chain_rule_residual, composed_strat_germ, degree_identity_check, ComposedIntegrand, SmoothMap2,
};
use roughwedge::sewing::{dyadic_sum, side_corrector, SewingParams};
use roughwedge::simplex::{point, Point2, Simplex2, Simplex3};
use roughwedge::young::young_integral;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CertMode {
    /// Report certification failures in the output only.
    Warn,
    /// Exit with code 2 when a certification check fails.
    Strict,
}

#[derive(Parser, Debug)]
#[command(name = "roughwedge", version, about = "Discrete Stratonovich/Itô integration of rough 2-forms")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output path; overrides the config's `output`; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format for `convergence-table` (reports are always JSON).
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker thread cap. Values are identical for every setting (the
    /// reduction tree is fixed); with 1 the output is byte-reproducible
    /// because timing fields are reported as 0. 0 = all cores.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = CertMode::Warn)]
    certified: CertMode,
    /// Seed for randomized audits.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(certified_ok) => {
            if !certified_ok && cli.certified == CertMode::Strict {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let text = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading config {}", cli.config.display()))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing config")?;
    let timer = Timer { hide: cli.threads == 1 };

    let (body, certified_ok) = match cfg.command {
        Command::IntegrateSimplex => cmd_integrate_simplex(&cfg)?,
        Command::IntegratePolygon => cmd_integrate_polygon(&cfg)?,
        Command::IntegrateDomain => cmd_integrate_domain(&cfg)?,
        Command::ConvergenceTable => {
            let (out, ok) = cmd_convergence_table(&cfg, cli.format, &timer)?;
            write_output(cli, &cfg, Output::Raw(out))?;
            return Ok(ok);
        }
        Command::StokesCheck => cmd_stokes(&cfg)?,
        Command::ChainRuleCheck => cmd_chain_rule(&cfg)?,
        Command::DegreeCheck => cmd_degree(&cfg)?,
        Command::VanishingCheck => cmd_vanishing(&cfg)?,
        Command::BoundsAudit => cmd_bounds_audit(&cfg, cli.seed)?,
    };
    let report = json!({
        "config": serde_json::to_value(&cfg)?,
        "report": body,
        "certified_ok": certified_ok,
    });
    write_output(cli, &cfg, Output::Json(report))?;
    Ok(certified_ok)
}

enum Output {
    Json(Value),
    Raw(String),
}

fn write_output(cli: &Cli, cfg: &ExperimentConfig, out: Output) -> Result<()> {
    let text = match out {
        Output::Json(v) => format!("{}\n", serde_json::to_string_pretty(&v)?),
        Output::Raw(s) => s,
    };
    let path = cli.out.clone().or_else(|| cfg.output.clone());
    match path {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

struct Timer {
    hide: bool,
}

impl Timer {
    fn ms(&self, start: Instant) -> f64 {
        if self.hide {
            0.0
        } else {
            start.elapsed().as_secs_f64() * 1e3
        }
    }
}

fn build_triple(fields: &FieldsSpec) -> Result<FormTriple> {
    let f = match &fields.f {
        Some(spec) => ScalarField::from_spec(spec)?,
        None => ScalarField::constant(1.0),
    };
    Ok(FormTriple::new(
        f,
        ScalarField::from_spec(&fields.g1)?,
        ScalarField::from_spec(&fields.g2)?,
    ))
}

fn need_fields(cfg: &ExperimentConfig) -> Result<FormTriple> {
    let fields = cfg.fields.as_ref().ok_or_else(|| anyhow!("config needs `fields`"))?;
    Ok(build_triple(fields)?)
}

fn need_simplex(cfg: &ExperimentConfig) -> Result<Simplex2> {
    let v = cfg
        .geometry
        .simplex
        .ok_or_else(|| anyhow!("config needs `geometry.simplex`"))?;
    Ok(Simplex2::new(
        point(v[0][0], v[0][1]),
        point(v[1][0], v[1][1]),
        point(v[2][0], v[2][1]),
    ))
}

fn need_integrand(cfg: &ExperimentConfig) -> Result<ComposedIntegrand> {
    let name = cfg.integrand.as_deref().unwrap_or("one");
    ComposedIntegrand::builtin(name).ok_or_else(|| anyhow!("unknown integrand `{name}`"))
}

fn result_json(r: &roughwedge::integrate::IntegralResult) -> Value {
    serde_json::to_value(r).unwrap()
}

fn cmd_integrate_simplex(cfg: &ExperimentConfig) -> Result<(Value, bool)> {
    let t = need_fields(cfg)?;
    let s = need_simplex(cfg)?;
    let r = integrate_simplex(&t, &s, cfg.scheme, cfg.levels.max)?;
    let ok = r.certified;
    Ok((result_json(&r), ok))
}

fn cmd_integrate_polygon(cfg: &ExperimentConfig) -> Result<(Value, bool)> {
    let t = need_fields(cfg)?;
    let poly = cfg
        .geometry
        .polygon
        .clone()
        .ok_or_else(|| anyhow!("config needs `geometry.polygon`"))?;
    let apex = match cfg.geometry.apex {
        Some([a, b]) => point(a, b),
        None => {
            let n = poly.vertices().len() as f64;
            let (sx, sy) = poly
                .vertices()
                .iter()
                .fold((0.0, 0.0), |acc, p| (acc.0 + p.x1, acc.1 + p.x2));
            point(sx / n, sy / n)
        }
    };
    let r = integrate_polygon(&t, &poly, apex, cfg.scheme, cfg.levels.max)?;
    let ok = r.certified;
    Ok((
        json!({ "apex": [apex.x1, apex.x2], "result": result_json(&r) }),
        ok,
    ))
}

fn cmd_integrate_domain(cfg: &ExperimentConfig) -> Result<(Value, bool)> {
    let t = need_fields(cfg)?;
    let spec = cfg
        .geometry
        .domain
        .clone()
        .ok_or_else(|| anyhow!("config needs `geometry.domain`"))?;
    let dom = spec.build()?;
    let k_min = cfg.geometry.k_min.unwrap_or(2);
    let k_max = cfg.geometry.k_max.unwrap_or(6);
    let out = integrate_domain(&t, &dom, k_min, k_max, cfg.scheme, cfg.levels.max)?;
    let ok = out.result.certified;
    Ok((
        json!({
            "result": result_json(&out.result),
            "trace": serde_json::to_value(&out.trace)?,
            "boundary_dim_estimate": dom.boundary_dim_estimate,
        }),
        ok,
    ))
}

fn cmd_convergence_table(cfg: &ExperimentConfig, format: Format, timer: &Timer) -> Result<(String, bool)> {
    let t = need_fields(cfg)?;
    let s = need_simplex(cfg)?;
    let strat = strat_germ(&t);
    let ito = roughwedge::germ::ito_germ(&t);
    let b = strat.bounds().unwrap();
    let params = SewingParams::from_bounds(b, cfg.levels.max, cfg.tolerances.target);
    let sides = s.sides();
    let mut rows = Vec::new();
    for n in cfg.levels.min..=cfg.levels.max {
        let start = Instant::now();
        let strat_sum = dyadic_sum(&strat, &s, n)?;
        let ito_sum = dyadic_sum(&ito, &s, n)?;
        let corr = [
            side_corrector(&strat, &sides[0], n),
            side_corrector(&strat, &sides[1], n),
            side_corrector(&strat, &sides[2], n),
        ];
        let side_norm = corr.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        rows.push((
            n,
            strat_sum,
            ito_sum,
            (ito_sum - strat_sum).abs(),
            side_norm,
            params.tail_bound(s.diam(), n),
            timer.ms(start),
        ));
    }
    let ok = params.certified_exponents();
    let header = [
        ("alpha", t.f.exponent()),
        ("beta1", t.g1.exponent()),
        ("beta2", t.g2.exponent()),
        ("gamma1", b.gamma1),
        ("c1", b.c1),
        ("gamma2", b.gamma2),
        ("c2", b.c2),
        ("target_tol", cfg.tolerances.target),
        ("diam", s.diam()),
    ];
    match format {
        Format::Csv => {
            let mut out = String::from("# roughwedge convergence-table\n");
            for (k, v) in header {
                out.push_str(&format!("# {k} = {v}\n"));
            }
            out.push_str("n,strat_sum,ito_sum,ito_strat_gap,side_corrector_norm,error_bound,wall_time_ms\n");
            for r in &rows {
                out.push_str(&format!("{},{},{},{},{},{},{}\n", r.0, r.1, r.2, r.3, r.4, r.5, r.6));
            }
            Ok((out, ok))
        }
        Format::Json => {
            let v = json!({
                "header": header.iter().map(|(k, v)| (k.to_string(), *v)).collect::<std::collections::BTreeMap<_, _>>(),
                "rows": rows.iter().map(|r| json!({
                    "n": r.0, "strat_sum": r.1, "ito_sum": r.2, "ito_strat_gap": r.3,
                    "side_corrector_norm": r.4, "error_bound": r.5, "wall_time_ms": r.6,
                })).collect::<Vec<_>>(),
                "certified": ok,
            });
            Ok((format!("{}\n", serde_json::to_string_pretty(&v)?), ok))
        }
    }
}

fn cmd_stokes(cfg: &ExperimentConfig) -> Result<(Value, bool)> {
    // ∫_Δ dg¹∧dg² against ∮_∂Δ g¹ dg²: f is forced to 1
    let fields = cfg.fields.as_ref().ok_or_else(|| anyhow!("config needs `fields`"))?;
    let t = FormTriple::new(
        ScalarField::constant(1.0),
        ScalarField::from_spec(&fields.g1)?,
        ScalarField::from_spec(&fields.g2)?,
    );
    let s = need_simplex(cfg)?;
    let lhs = integrate_simplex(&t, &s, Scheme::Strat, cfg.levels.max)?;
    let young_level = cfg.levels.max + 4;
    let boundary = |e: &roughwedge::simplex::Simplex1| young_integral(&t.g1, &t.g2, e, young_level).value;
    let rhs = roughwedge::germ::coboundary1(&boundary, &s);
    let gap = (lhs.value - rhs).abs();
    let pass = gap <= cfg.tolerances.target;
    Ok((
        json!({
            "two_dimensional": lhs.value,
            "boundary_young": rhs,
            "gap": gap,
            "tolerance": cfg.tolerances.target,
            "young_level": young_level,
            "pass": pass,
        }),
        pass,
    ))
}

fn cmd_chain_rule(cfg: &ExperimentConfig) -> Result<(Value, bool)> {
    let c = need_integrand(cfg)?;
    let map_name = cfg.map.as_deref().unwrap_or("identity");
    let psi = SmoothMap2::builtin(map_name).ok_or_else(|| anyhow!("unknown map `{map_name}`"))?;
    let fields = cfg.fields.as_ref().ok_or_else(|| anyhow!("config needs `fields` (h pair in g1/g2)"))?;
    let h1 = ScalarField::from_spec(&fields.g1)?;
    let h2 = ScalarField::from_spec(&fields.g2)?;
    let s = need_simplex(cfg)?;
    let rep = chain_rule_residual(&c, &psi, &h1, &h2, &s, cfg.levels.max)?;
    let pass = rep.certified && rep.residual <= rep.combined_bound.max(cfg.tolerances.target);
    Ok((
        json!({
            "lhs": rep.lhs,
            "rhs": rep.rhs,
            "residual": rep.residual,
            "combined_bound": rep.combined_bound,
            "certified": rep.certified,
            "pass": pass,
        }),
        pass,
    ))
}

fn cmd_degree(cfg: &ExperimentConfig) -> Result<(Value, bool)> {
    let phi = need_integrand(cfg)?;
    let fields = cfg.fields.as_ref().ok_or_else(|| anyhow!("config needs `fields` (h pair in g1/g2)"))?;
    let h1 = ScalarField::from_spec(&fields.g1)?;
    let h2 = ScalarField::from_spec(&fields.g2)?;
    let s = need_simplex(cfg)?;
    let rep = degree_identity_check(&phi, &h1, &h2, &s, cfg.levels.max, cfg.levels.max)?;

    // dual-route probe: the angle-sum winding number at the image of the
    // centroid, with its distance guard
    let c = s.centroid();
    let probe = point(h1.value(c), h2.value(c));
    let winding_probe = roughwedge::irregular::winding_number(&h1, &h2, &s.boundary(), probe, cfg.levels.max);
    let (guard_violation, probe_json) = match &winding_probe {
        Ok(w) => (false, json!({ "point": [probe.x1, probe.x2], "winding": w })),
        Err(e) => (true, json!({ "point": [probe.x1, probe.x2], "guard": e.to_string() })),
    };

    let guard_ok = !guard_violation && rep.excluded_mass <= cfg.tolerances.excluded_mass;
    let pass = guard_ok && rep.gap <= cfg.tolerances.target;
    Ok((
        json!({
            "lhs": rep.lhs,
            "rhs": rep.rhs,
            "gap": rep.gap,
            "excluded_mass": rep.excluded_mass,
            "excluded_mass_tolerance": cfg.tolerances.excluded_mass,
            "cells": rep.cells,
            "near_cells": rep.near_cells,
            "winding_probe": probe_json,
            "guard_ok": guard_ok,
            "pass": pass,
        }),
        pass,
    ))
}

fn cmd_vanishing(cfg: &ExperimentConfig) -> Result<(Value, bool)> {
    let t = need_fields(cfg)?;
    let s = need_simplex(cfg)?;
    let w = strat_germ(&t);
    let germ_scale = w.value(&s).abs();
    let value = dyadic_sum(&w, &s, cfg.levels.max)?.abs();
    let params = SewingParams::from_bounds(w.bounds().unwrap(), cfg.levels.max, 0.0);
    let bound = params.tail_bound(s.diam(), cfg.levels.max);
    let pass = value <= 10.0 * bound && value <= 1e-2 * germ_scale.max(f64::MIN_POSITIVE);
    Ok((
        json!({
            "value": value,
            "bound": bound,
            "germ_scale": germ_scale,
            "level": cfg.levels.max,
            "pass": pass,
        }),
        pass,
    ))
}

fn cmd_bounds_audit(cfg: &ExperimentConfig, seed: u64) -> Result<(Value, bool)> {
    let t = need_fields(cfg)?;
    let samples = cfg.tolerances.samples;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pt = |rng: &mut ChaCha8Rng| -> Point2 {
        point(rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..1.5))
    };
    let mut violations = 0usize;
    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let (a, b, c, d) = (pt(&mut rng), pt(&mut rng), pt(&mut rng), pt(&mut rng));
        let tri = Simplex2::new(a, b, c);
        for check in germ_bound_check2(&t, &tri) {
            if check.bound > 0.0 {
                max_ratio = max_ratio.max(check.value / check.bound);
            }
            if !check.holds() {
                violations += 1;
            }
        }
        let quad = Simplex3::new(a, b, c, d);
        let c3 = germ_bound_check3(&t, &quad);
        if c3.bound > 0.0 {
            max_ratio = max_ratio.max(c3.value / c3.bound);
        }
        if !c3.holds() {
            violations += 1;
        }
    }

    // composed-germ coboundary audit when an integrand is named
    let mut composed = Value::Null;
    if let Some(name) = cfg.integrand.as_deref() {
        let c = ComposedIntegrand::builtin(name).ok_or_else(|| anyhow!("unknown integrand `{name}`"))?;
        let (germ, cert) = composed_strat_germ(&c, &t.g1, &t.g2, 3.0);
        let gb = germ.bounds().unwrap();
        let mut cviol = 0usize;
        let mut cmax: f64 = 0.0;
        for _ in 0..samples {
            let (a, b, cc, d) = (pt(&mut rng), pt(&mut rng), pt(&mut rng), pt(&mut rng));
            let quad = Simplex3::new(a, b, cc, d);
            let val = roughwedge::germ::coboundary2(&|x: &Simplex2| germ.value(x), &quad).abs();
            let bound = gb.c2 * quad.diam().powf(gb.gamma2);
            if bound > 0.0 {
                cmax = cmax.max(val / bound);
            }
            if val > bound * (1.0 + 1e-9) {
                cviol += 1;
            }
        }
        violations += cviol;
        composed = json!({
            "integrand": name,
            "d_exponent": cert.d_exponent(),
            "violations": cviol,
            "max_ratio": cmax,
        });
    }

    let pass = violations == 0;
    Ok((
        json!({
            "samples": samples,
            "violations": violations,
            "max_ratio": max_ratio,
            "composed": composed,
            "seed": seed,
            "pass": pass,
        }),
        pass,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_and_round_trips() {
        let text = r#"{
            "command": "convergence-table",
            "fields": {
                "f": {"kind": "affine", "params": {"c0": 1.0, "c1": 0.0, "c2": 0.0}},
                "g1": {"kind": "affine", "params": {"c0": 0.0, "c1": 1.0, "c2": 0.0}},
                "g2": {"kind": "affine", "params": {"c0": 0.0, "c1": 0.0, "c2": 1.0}}
            },
            "geometry": {"simplex": [[0,0],[1,0],[0,1]]},
            "levels": {"min": 0, "max": 4}
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        let echoed = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&echoed).unwrap();
        assert_eq!(back.levels.max, 4);
        assert!(matches!(back.command, Command::ConvergenceTable));
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        let text = r#"{"command": "stokes-check", "geometry": {"simplexx": []}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }
}
