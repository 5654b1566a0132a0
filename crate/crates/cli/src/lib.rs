//! Front end for the star-product engine: expression parsing, job
//! configuration, the subcommands and their JSON output.

pub mod config;
pub mod expr;
pub mod output;

use serde_json::{json, Map, Value};

use kstar::calculus::left_mult_symbol;
use kstar::star::{star, tensor_t, StarMeta};
use kstar::verify::verify_all_at;
use kstar::{GeometryCache, NuSeries};

use config::Job;

/// What a command produced: a JSON document and whether all checks passed.
pub struct Outcome {
    pub json: Value,
    pub ok: bool,
}

fn done(json: Value) -> Result<Outcome, String> {
    Ok(Outcome { json, ok: true })
}

fn geometry(job: &Job) -> Result<GeometryCache, String> {
    GeometryCache::from_source(job.potential.as_ref(), job.phi_order).map_err(|e| format!("potential: {e}"))
}

fn meta(job: &Job) -> Value {
    serde_json::to_value(StarMeta {
        potential: job.potential.label(),
        phi_order: job.phi_order,
        base_point: "origin".into(),
        nu_order: job.nu_order,
        jet_order: job.jet_order,
    })
    .expect("meta serializes")
}

fn err(e: kstar::Error) -> String {
    e.to_string()
}

pub fn run_star(job: &Job) -> Result<Outcome, String> {
    let g = geometry(job)?;
    let input = job.jet_order + job.nu_order as u32;
    let f = job.require("f", &job.f)?.jet(job.n, input)?;
    let h = job.require("g", &job.g)?.jet(job.n, input)?;
    let r = star(&g, &f, &h, job.nu_order, job.jet_order).map_err(err)?;
    done(json!({
        "meta": meta(job),
        "series": output::series(&r.series, output::jet),
    }))
}

pub fn run_lsymbol(job: &Job) -> Result<Outcome, String> {
    let g = geometry(job)?;
    let f = job.require("f", &job.f)?.jet(job.n, job.jet_order + job.nu_order as u32)?;
    let mut comps = vec![f.clone()];
    comps.resize(job.nu_order + 1, kstar::Jet::zero(job.n, f.order()));
    let s = left_mult_symbol(&g, &NuSeries::new(comps)).map_err(err)?;
    let s = s.map(|c| c.truncated(job.jet_order));
    done(json!({
        "meta": meta(job),
        "symbol": output::series(&s, output::symbol),
    }))
}

pub fn run_tensor_t(job: &Job, at_origin: bool) -> Result<Outcome, String> {
    let g = geometry(job)?;
    let mut t = tensor_t(&g, job.nu_order, job.jet_order).map_err(err)?;
    if at_origin {
        t = t.at_origin();
    }
    done(json!({
        "meta": meta(job),
        "at_origin": at_origin,
        "tensor": output::series(&t.series, output::symbol),
    }))
}

pub fn run_geom(job: &Job) -> Result<Outcome, String> {
    let g = geometry(job)?;
    let (n, m) = (job.n, job.jet_order);
    let mut metric = Map::new();
    let mut inverse = Map::new();
    let mut christoffel = Map::new();
    let mut curvature = Map::new();
    for k in 0..n {
        for l in 0..n {
            let gkl = g.metric(k, l).and_then(|j| j.truncate(m)).map_err(err)?;
            metric.insert(format!("{},{}bar", k + 1, l + 1), output::jet(&gkl));
            let inv = g.inverse_metric(l, k, m).map_err(err)?;
            inverse.insert(format!("{}bar,{}", l + 1, k + 1), output::jet(&inv));
        }
    }
    for t in 0..n {
        for l in 0..n {
            for q in l..n {
                let c = g.christoffel_bar(t, l, q, m).map_err(err)?;
                christoffel.insert(format!("{}bar;{}bar,{}bar", t + 1, l + 1, q + 1), output::jet(&c));
            }
        }
    }
    for k in 0..n {
        for p in k..n {
            for l in 0..n {
                for q in l..n {
                    let r = g.curvature_low(k, p, l, q, m).map_err(err)?;
                    curvature.insert(
                        format!("{},{},{}bar,{}bar", k + 1, p + 1, l + 1, q + 1),
                        output::jet(&r),
                    );
                }
            }
        }
    }
    let rho = g.rho(2, 2, m).map_err(err)?;
    let gamma = g.gamma(m).map_err(err)?;
    done(json!({
        "meta": meta(job),
        "metric": metric,
        "inverse_metric": inverse,
        "christoffel_bar": christoffel,
        "curvature": curvature,
        "rho_2_2": output::symbol(&rho),
        "gamma": output::symbol(&gamma),
    }))
}

pub fn run_verify(job: &Job) -> Result<Outcome, String> {
    let report = verify_all_at(job.potential.as_ref(), job.nu_order, job.jet_order, job.seed, job.phi_order)
        .map_err(err)?;
    let ok = report.passed();
    let json = serde_json::to_value(&report).expect("report serializes");
    Ok(Outcome { json, ok })
}
