use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use hyperrcm::asymptotics::{
    boolean_expected_degree_expansion, boolean_lambda_c_expansion, general_expansion, heat_expansion, Quantity,
};
use hyperrcm::diagrams::diagram_report;
use hyperrcm::estimator::{estimate_lambda_c_with, EstimateOptions};
use hyperrcm::models::{default_heat_amplitude, norm_1to1, Family};
use hyperrcm::quad::QuadOptions;
use hyperrcm::rcm::{build_graph, cluster_labels, Configuration};
use hyperrcm::sampler::{add_origin, sample_ppp, Seed};
use hyperrcm::transform::{
    spectral_grid, sph_inverse_d3, sph_transform_d3, ConvOptions, ConvPowers, Radial,
};
use hyperrcm::{AdjacencySpec64, ExpansionReport64};

use crate::config::{
    invalid, load, DiagramsConfig, EstimateConfig, ExpansionConfig, Failure, RenderConfig, SimulateConfig,
    TransformConfig,
};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub struct Ctx {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub format: Format,
}

/// Tail mass cut for profiles of unbounded support before transforming.
const TRUNC_EPS: f64 = 1e-16;

fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn write_file(ctx: &Ctx, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    fs::create_dir_all(&ctx.out).map_err(|e| io(&ctx.out, e))?;
    let path = ctx.out.join(name);
    fs::write(&path, bytes).map_err(|e| io(&path, e))?;
    Ok(path)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Failure::Numerical(e.to_string()))
}

/// Output envelope: every JSON result carries the resolved config that produced it.
#[derive(Serialize, Deserialize)]
struct Envelope<C, R> {
    command: String,
    config: C,
    result: R,
}

fn write_json<C: Serialize, R: Serialize>(ctx: &Ctx, command: &str, config: &C, result: &R) -> Result<(), Failure> {
    let env = Envelope { command: command.to_string(), config, result };
    let path = write_file(ctx, &format!("{command}.json"), to_json(&env)?.as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}

/// CSV table plus `<command>.config.json` with the resolved config.
fn write_csv<C: Serialize>(
    ctx: &Ctx,
    command: &str,
    config: &C,
    tables: &[(&str, Vec<String>, Vec<Vec<String>>)],
) -> Result<(), Failure> {
    let meta = json!({ "command": command, "config": config });
    let path = write_file(ctx, &format!("{command}.config.json"), to_json(&meta)?.as_bytes())?;
    println!("wrote {}", path.display());
    for (name, header, rows) in tables {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Failure::Io(e.to_string());
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
        let path = write_file(ctx, &format!("{name}.csv"), &bytes)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn strings<const N: usize>(xs: [&str; N]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn resolve_seed(ctx: &Ctx, from_config: Option<u64>) -> u64 {
    ctx.seed.or(from_config).unwrap_or(0)
}

// simulate / render

pub fn simulate(ctx: &Ctx) -> Result<(), Failure> {
    let mut cfg: SimulateConfig = load(&ctx.config)?;
    let seed = resolve_seed(ctx, cfg.seed);
    cfg.seed = Some(seed);
    let d = cfg.spec.d;
    let lambda = match (cfg.lambda, cfg.expected_degree) {
        (Some(l), None) => l,
        (None, Some(k)) => k / norm_1to1(&cfg.spec)?,
        _ => return invalid("give exactly one of `lambda` and `expected_degree`"),
    };
    let draw = cfg.svg.unwrap_or(d == 2);
    if draw && d != 2 {
        return invalid(format!("`svg` needs d = 2, got d = {d}"));
    }
    let rho = cfg.vertex_radius.unwrap_or(svg::unit_area_radius() / 2.0);
    if !(rho > 0.0 && rho.is_finite()) {
        return invalid("`vertex_radius` must be positive");
    }
    let mut cloud = sample_ppp(d, lambda, cfg.r_ball, Seed::new(seed, 0))?;
    if cfg.palm_origin {
        add_origin(&mut cloud);
    }
    let conf = build_graph(&cloud, &cfg.spec, Seed::new(seed, 1))?;
    let labels = cluster_labels(conf.cloud.len(), &conf.edges)?;
    let largest = labels.sizes.iter().copied().max().unwrap_or(0);
    println!(
        "points {}  edges {}  clusters {}  largest {}  lambda {}",
        conf.cloud.len(),
        conf.edges.len(),
        labels.sizes.len(),
        largest,
        lambda
    );
    match ctx.format {
        Format::Json => write_json(ctx, "simulate", &cfg, &conf)?,
        Format::Csv => {
            let mut header = strings(["index", "r"]);
            header.extend((0..d).map(|k| format!("x{k}")));
            let points = (0..conf.cloud.len())
                .map(|i| {
                    let mut row = vec![i.to_string(), num(conf.cloud.radius(i))];
                    row.extend(conf.cloud.ball_coords(i).into_iter().map(num));
                    row
                })
                .collect();
            let edges = conf.edges.iter().map(|&(i, j)| vec![i.to_string(), j.to_string()]).collect();
            write_csv(
                ctx,
                "simulate",
                &cfg,
                &[("points", header, points), ("edges", strings(["i", "j"]), edges)],
            )?;
        }
    }
    if draw {
        let meta = serde_json::to_string(&json!({ "command": "simulate", "config": cfg })).unwrap_or_default();
        let path = write_file(ctx, "simulate.svg", svg::render(&conf, rho, &meta).as_bytes())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn render(ctx: &Ctx) -> Result<(), Failure> {
    let cfg: RenderConfig = load(&ctx.config)?;
    let input = if cfg.input.is_absolute() {
        cfg.input.clone()
    } else {
        ctx.config.parent().unwrap_or(Path::new(".")).join(&cfg.input)
    };
    let text = fs::read_to_string(&input).map_err(|e| Failure::Validation(format!("{}: {e}", input.display())))?;
    let (conf, origin): (Configuration, Value) =
        match serde_json::from_str::<Envelope<SimulateConfig, Configuration>>(&text) {
            Ok(env) => {
                let origin = json!({ "command": env.command, "config": env.config });
                let rho = env.config.vertex_radius;
                (env.result, json!({ "source": origin, "vertex_radius": rho }))
            }
            Err(_) => {
                let c = crate::config::parse::<Configuration>(&text)
                    .map_err(|m| Failure::Validation(format!("{}: {m}", input.display())))?;
                (c, Value::Null)
            }
        };
    if conf.cloud.d != 2 {
        return invalid(format!("render needs d = 2, got d = {}", conf.cloud.d));
    }
    let rho = cfg
        .vertex_radius
        .or_else(|| origin.get("vertex_radius").and_then(Value::as_f64))
        .unwrap_or(svg::unit_area_radius() / 2.0);
    if !(rho > 0.0 && rho.is_finite()) {
        return invalid("`vertex_radius` must be positive");
    }
    let meta = json!({ "command": "render", "config": cfg, "source": origin.get("source") });
    let svg = svg::render(&conf, rho, &serde_json::to_string(&meta).unwrap_or_default());
    let path = write_file(ctx, "render.svg", svg.as_bytes())?;
    println!("points {}  edges {}", conf.cloud.len(), conf.edges.len());
    println!("wrote {}", path.display());
    Ok(())
}

// diagrams / expansion

pub fn diagrams(ctx: &Ctx) -> Result<(), Failure> {
    let cfg: DiagramsConfig = load(&ctx.config)?;
    let rep = diagram_report(&cfg.spec, cfg.c)?;
    let mut rows: Vec<(String, f64)> = vec![("norm1".into(), rep.norm1), ("norm2".into(), rep.norm2)];
    rows.extend(rep.loops.iter().map(|(n, v)| (format!("loop{n}"), *v)));
    rows.extend(rep.mixed.iter().map(|m| {
        let [a, b, c] = m.orders;
        (format!("mixed({a},{b},{c})"), m.value)
    }));
    rows.push(("beta".into(), rep.beta));
    rows.push(("omega".into(), rep.omega));
    rows.push(("errE".into(), rep.err_e));
    rows.push(("errEstar".into(), rep.err_e_star));
    println!("{}", cfg.spec.describe());
    for (k, v) in &rows {
        println!("  {k:<14} {v:.10e}");
    }
    match ctx.format {
        Format::Json => write_json(ctx, "diagrams", &cfg, &rep),
        Format::Csv => {
            let body = rows.into_iter().map(|(k, v)| vec![k, num(v)]).collect();
            write_csv(ctx, "diagrams", &cfg, &[("diagrams", strings(["quantity", "value"]), body)])
        }
    }
}

fn expansion_report(cfg: &ExpansionConfig) -> Result<ExpansionReport64, Failure> {
    Ok(match cfg {
        ExpansionConfig::Boolean { d, l, quantity } => match quantity {
            Quantity::LambdaC => boolean_lambda_c_expansion(*d, *l)?,
            Quantity::ExpectedDegree => boolean_expected_degree_expansion(*d, *l)?,
        },
        ExpansionConfig::Heat3 { l, amplitude } => {
            heat_expansion(*l, amplitude.unwrap_or_else(|| default_heat_amplitude(*l)))?
        }
        ExpansionConfig::General { spec, c, n } => general_expansion(spec, *c, *n)?,
    })
}

fn term_rows(rep: &ExpansionReport64) -> Vec<Vec<String>> {
    let sections = [
        ("correction", &rep.correction_terms),
        ("envelope", &rep.error_envelope),
        ("diagram_asymptotics", &rep.diagram_asymptotics),
    ];
    sections
        .iter()
        .flat_map(|(sec, terms)| {
            terms.iter().map(move |t| {
                vec![sec.to_string(), t.name.clone(), t.formula.clone(), num(t.value), t.note.clone().unwrap_or_default()]
            })
        })
        .collect()
}

pub fn expansion(ctx: &Ctx) -> Result<(), Failure> {
    let cfg: ExpansionConfig = load(&ctx.config)?;
    let rep = expansion_report(&cfg)?;
    println!("{}  ({:?})", rep.model, rep.quantity);
    println!("  leading                 {:.10e}", rep.leading);
    let rows = term_rows(&rep);
    for r in &rows {
        println!("  {:<10} {:<22} {:>18}  {}", r[0], r[1], r[3], r[2]);
    }
    println!("  predicted lambda_c      {:.10e}", rep.predicted_lambda_c);
    println!("  predicted degree        {:.10e}", rep.predicted_expected_degree);
    match ctx.format {
        Format::Json => write_json(ctx, "expansion", &cfg, &rep),
        Format::Csv => write_csv(
            ctx,
            "expansion",
            &cfg,
            &[("expansion", strings(["section", "name", "formula", "value", "note"]), rows)],
        ),
    }
}

// estimate

/// Expansion prediction for `lambda_c * norm1` where one is available.
fn predicted_degree(spec: &AdjacencySpec64) -> Result<Option<ExpansionReport64>, Failure> {
    Ok(match &spec.family {
        Family::BooleanDisc { l } => Some(boolean_lambda_c_expansion(spec.d, *l)?),
        Family::HeatKernel3 { l, amplitude } => Some(heat_expansion(*l, *amplitude)?),
        Family::CustomRadial { .. } => None,
    })
}

pub fn estimate(ctx: &Ctx) -> Result<(), Failure> {
    let mut cfg: EstimateConfig = load(&ctx.config)?;
    let seed = resolve_seed(ctx, cfg.seed);
    cfg.seed = Some(seed);
    let n1 = norm_1to1(&cfg.spec)?;
    let [lo, hi] = cfg.bracket;
    let opts = EstimateOptions { shell_margin: cfg.shell_margin, grid_points: cfg.grid_points };
    let est = estimate_lambda_c_with(&cfg.spec, &cfg.r_list, cfg.replicas, (lo / n1, hi / n1), seed, &opts)?;
    let pred = predicted_degree(&cfg.spec)?;
    let comparison = json!({
        "expected_degree_hat": est.expected_degree,
        "ci": [est.ci_low * n1, est.ci_high * n1],
        "predicted_expected_degree": pred.as_ref().map(|p| p.predicted_expected_degree),
        "prediction_envelope": pred.as_ref().map(|p| p.envelope_sum() * p.predicted_expected_degree),
    });
    println!("{}  norm1 {:.6e}", cfg.spec.describe(), n1);
    println!("  {:>8} {:>8} {:>12} {:>12} {:>12}", "R", "shell", "deg_half", "ci_low", "ci_high");
    let mut rows = Vec::new();
    for t in &est.per_r_crossings {
        println!(
            "  {:>8.3} {:>8.3} {:>12.5} {:>12.5} {:>12.5}",
            t.r_ball,
            t.shell,
            t.lambda_half * n1,
            t.ci_low * n1,
            t.ci_high * n1
        );
        rows.push(vec![
            num(t.r_ball),
            num(t.shell),
            num(t.lambda_half * n1),
            num(t.ci_low * n1),
            num(t.ci_high * n1),
        ]);
    }
    println!(
        "  {:>8} {:>8} {:>12.5} {:>12.5} {:>12.5}",
        "inf",
        "",
        est.expected_degree,
        est.ci_low * n1,
        est.ci_high * n1
    );
    rows.push(vec!["inf".into(), String::new(), num(est.expected_degree), num(est.ci_low * n1), num(est.ci_high * n1)]);
    if let Some(p) = &pred {
        println!("  expansion predicts lambda_c * norm1 = {:.5}", p.predicted_expected_degree);
    }
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    match ctx.format {
        Format::Json => write_json(ctx, "estimate", &cfg, &json!({ "estimate": est, "comparison": comparison })),
        Format::Csv => write_csv(
            ctx,
            "estimate",
            &cfg,
            &[("estimate", strings(["R", "shell", "degree_half", "ci_low", "ci_high"]), rows)],
        ),
    }
}

// transform

fn transform_quad() -> QuadOptions<f64> {
    QuadOptions::with_tol(1e-12, 1e-10)
}

fn need_d3(spec: &AdjacencySpec64) -> Result<(), Failure> {
    if spec.d != 3 {
        return invalid(format!("the spherical transform is implemented for d = 3, got d = {}", spec.d));
    }
    Ok(())
}

fn check_grid(what: &str, max: f64, points: usize) -> Result<(), Failure> {
    if !(max > 0.0 && max.is_finite()) || points < 2 {
        return invalid(format!("{what} grid needs a positive finite end and at least 2 points"));
    }
    Ok(())
}

pub fn transform(ctx: &Ctx) -> Result<(), Failure> {
    let cfg: TransformConfig = load(&ctx.config)?;
    let (header, rows): (Vec<String>, Vec<Vec<f64>>) = match &cfg {
        TransformConfig::Forward { spec, s_max, points } => {
            need_d3(spec)?;
            check_grid("s", *s_max, *points)?;
            let f = spec.truncated(TRUNC_EPS)?;
            let big = sph_transform_d3(&f, &spectral_grid(*s_max, *points), &transform_quad())?;
            let rows = big.s_grid.iter().zip(&big.values).map(|(s, v)| vec![*s, *v]).collect();
            (strings(["s", "F"]), rows)
        }
        TransformConfig::RoundTrip { spec, s_max, points, r_max, r_points } => {
            need_d3(spec)?;
            check_grid("s", *s_max, *points)?;
            check_grid("r", *r_max, *r_points)?;
            let q = transform_quad();
            let f = spec.truncated(TRUNC_EPS)?;
            let big = sph_transform_d3(&f, &spectral_grid(*s_max, *points), &q)?;
            let r_grid: Vec<f64> = (0..*r_points).map(|k| r_max * k as f64 / (*r_points - 1) as f64).collect();
            let back = sph_inverse_d3(&big, &r_grid, &q)?;
            let rows = r_grid.iter().map(|&r| vec![r, spec.phi(r), back.eval(r)]).collect();
            (strings(["r", "phi", "recovered"]), rows)
        }
        TransformConfig::Convolve { spec, power, r_points, nodes } => {
            if *power < 1 {
                return invalid("`power` must be at least 1");
            }
            if *r_points < 2 {
                return invalid("`r_points` must be at least 2");
            }
            let opts = ConvOptions { nodes: nodes.unwrap_or(2048), ..ConvOptions::default() };
            let f = spec.truncated(TRUNC_EPS)?;
            let powers = ConvPowers::new(&f, spec.d, *power, &opts)?;
            let p = powers.power(*power);
            let end = p.support();
            let rows = (0..*r_points)
                .map(|k| {
                    let r = end * k as f64 / (*r_points - 1) as f64;
                    vec![r, p.eval(r)]
                })
                .collect();
            (strings(["r", "value"]), rows)
        }
    };
    println!("{} rows", rows.len());
    match ctx.format {
        Format::Json => {
            let table: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(header.iter().cloned().zip(r.iter().map(|&x| json!(x))).collect()))
                .collect();
            write_json(ctx, "transform", &cfg, &table)
        }
        Format::Csv => {
            let body = rows.into_iter().map(|r| r.into_iter().map(num).collect()).collect();
            write_csv(ctx, "transform", &cfg, &[("transform", header, body)])
        }
    }
}
