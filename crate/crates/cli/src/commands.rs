//! One function per subcommand. Each returns the report body and, when a
//! certificate check fails, the reason; the caller turns that into exit 4.

use serde_json::{json, Value};

use krnorm::beckmann::{grid_network, solve_beckmann, FlowNetwork};
use krnorm::density::{export, rasterize_plan, rasterize_vector_measure, ExportFormat};
use krnorm::genplan::{to_vector_measure, verify_projection};
use krnorm::matchnorm::{dual_potential, flat_norm, minimal_connection, Convention};
use krnorm::measures::Atom;
use krnorm::sharpspace::{decompose, modulus};
use krnorm::{Distribution, Grid, SignedAtomMeasure, TestFunction};

use crate::document::Document;
use crate::error::CliError;
use crate::{Format, Tolerances};

pub enum Body {
    Json(Value),
    Raw(Vec<u8>),
}

pub struct Output {
    pub body: Body,
    pub failure: Option<String>,
}

impl Output {
    fn json(v: Value) -> Self {
        Output {
            body: Body::Json(v),
            failure: None,
        }
    }

    fn check(mut self, ok: bool, reason: impl FnOnce() -> String) -> Self {
        if !ok && self.failure.is_none() {
            self.failure = Some(reason());
        }
        self
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

pub fn connect(doc: &Document, tol: &Tolerances) -> Result<Output, CliError> {
    let f = doc.balanced_measure()?;
    let m = minimal_connection(&f)?;
    let (_, dual) = dual_potential(&f)?;
    let bound = tol.bound(m.cost);
    let gap = (m.cost - dual).abs();
    let potential_gap = (m.potential.pair(&f) - m.cost).abs();
    let edges: Vec<Value> = m
        .edges
        .iter()
        .map(|e| json!({"source": e.source, "target": e.target, "mass": e.mass, "length": e.length()}))
        .collect();
    let lip = m.potential.lip_bound;
    Ok(Output::json(json!({
        "value": m.cost,
        "edges": edges,
        "potential": {"points": m.potential.points, "values": m.potential.values},
        "certificates": {
            "dual_lp_value": dual,
            "duality_gap": gap,
            "potential_value": m.potential.pair(&f),
            "potential_lipschitz": lip,
            "tolerance": bound,
        },
    }))
    .check(gap <= bound && potential_gap <= bound, || {
        format!("duality gap {gap:e} or potential gap {potential_gap:e} exceeds {bound:e}")
    })
    .check(lip <= 1.0 + tol.rel, || {
        format!("potential Lipschitz constant {lip} exceeds 1")
    }))
}

pub fn dual(doc: &Document, tol: &Tolerances) -> Result<Output, CliError> {
    let f = doc.balanced_measure()?;
    let (u, value) = dual_potential(&f)?;
    let primal = minimal_connection(&f)?.cost;
    let bound = tol.bound(primal);
    let gap = (value - primal).abs();
    let slack = u.min_slack();
    Ok(Output::json(json!({
        "value": value,
        "potential": {"points": u.points, "values": u.values},
        "certificates": {
            "matching_value": primal,
            "duality_gap": gap,
            "potential_lipschitz": u.lip_bound,
            "min_slack": if slack.is_finite() { json!(slack) } else { Value::Null },
            "tolerance": bound,
        },
    }))
    .check(gap <= bound, || {
        format!("duality gap {gap:e} exceeds {bound:e}")
    })
    .check(!(slack < -tol.abs), || {
        format!("potential violates the Lipschitz bound by {:e}", -slack)
    }))
}

pub fn flatnorm(
    doc: &Document,
    convention: Convention,
    tol: &Tolerances,
) -> Result<Output, CliError> {
    let f = doc.measure()?;
    if f.is_empty() {
        return Err(CliError::Validation("the document holds no atoms".into()));
    }
    let sol = flat_norm(&f, convention)?;
    let sup = sol
        .potential
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let lip = sol.potential.lip_bound;
    let feasible = match convention {
        Convention::Max => sup <= 1.0 + tol.abs && lip <= 1.0 + tol.abs,
        Convention::Sum => sup + lip <= 1.0 + tol.abs,
    };
    let mut v = to_value(&sol);
    v["certificates"] =
        json!({"sup_norm": sup, "lipschitz": lip, "potential_value": sol.potential.pair(&f)});
    Ok(Output::json(v).check(feasible, || {
        format!("potential with sup {sup} and Lipschitz constant {lip} is not admissible")
    }))
}

pub fn beckmann(
    doc: &Document,
    grid: Option<&[usize]>,
    diagonals: bool,
    tol: &Tolerances,
) -> Result<Output, CliError> {
    let f = doc.balanced_measure()?;
    let net = match grid {
        Some(res) => grid_network(&doc.domain()?, res, &f, diagonals)?,
        None if diagonals => {
            return Err(CliError::Validation("--diagonals needs --grid".into()));
        }
        None => FlowNetwork::complete(&f)?,
    };
    let flow = solve_beckmann(&net)?;
    let residual = flow.balance_residual(&net);
    // the matching route on the measure the network actually carries
    let carried = SignedAtomMeasure::new(
        net.nodes
            .iter()
            .zip(&net.supply)
            .filter(|(_, s)| **s != 0.0)
            .map(|(p, s)| Atom::new(p.clone(), *s))
            .collect(),
    )?;
    let w = minimal_connection(&carried)?.cost;
    let bound = tol.bound(w);
    let flows: Vec<Value> = net
        .edges
        .iter()
        .zip(&flow.edge_flows)
        .filter(|(_, m)| **m != 0.0)
        .map(|(e, m)| json!({"from": net.nodes[e.i], "to": net.nodes[e.j], "i": e.i, "j": e.j, "flow": m}))
        .collect();
    let within_distortion =
        flow.cost >= w - bound && flow.cost <= net.metric_distortion * w + bound;
    Ok(Output::json(json!({
        "cost": flow.cost,
        "flows": flows,
        "potentials": flow.potentials,
        "anisotropy_bound": net.metric_distortion,
        "nodes": net.nodes.len(),
        "edges": net.edges.len(),
        "certificates": {
            "balance_residual": residual,
            "matching_value": w,
            "ratio": if w > 0.0 { json!(flow.cost / w) } else { Value::Null },
        },
    }))
    .check(residual <= tol.bound(f.total_variation()), || {
        format!("flow balance residual {residual:e} exceeds tolerance")
    })
    .check(within_distortion, || {
        format!(
            "flow cost {} outside [W, anisotropy·W] with W = {w}",
            flow.cost
        )
    }))
}

pub fn plan_check(doc: &Document, tol: &Tolerances) -> Result<Output, CliError> {
    let sigma = doc.plan()?;
    if sigma.is_empty() {
        return Err(CliError::Validation("the document holds no plan".into()));
    }
    if let Some(d) = &doc.domain {
        sigma.check_inside(d)?;
    }
    let f = Distribution {
        measure_part: doc.measure()?,
        divergence_part: doc.vector_measure()?,
    };
    let dim = sigma.atoms()[0].base.dim();
    let family = if doc.test_functions.is_empty() {
        TestFunction::polynomial_family(dim, 3)
    } else {
        doc.test_functions.clone()
    };
    let t = tol.bound(sigma.total_variation());
    let report = verify_projection(&sigma, &f, &family, t)?;
    let passed = report.passed;
    let max = report.max_residual;
    let mut v = to_value(&report);
    v["plan_total_variation"] = json!(sigma.total_variation());
    v["family_size"] = json!(family.len());
    Ok(Output::json(v).check(passed, || {
        format!("max residual {max:e} exceeds tolerance {t:e}")
    }))
}

pub fn density(
    doc: &Document,
    res: &[usize],
    format: Format,
    parallel: bool,
) -> Result<Output, CliError> {
    let grid = Grid::new(doc.domain()?, res.to_vec())?;
    let d = if doc.has_vector_measure() {
        rasterize_vector_measure(&doc.vector_measure()?, &grid, parallel)?
    } else if !doc.plan.is_empty() {
        rasterize_vector_measure(&to_vector_measure(&doc.plan()?)?, &grid, parallel)?
    } else {
        let gamma = minimal_connection(&doc.balanced_measure()?)?;
        rasterize_plan(&gamma, &grid, parallel)?
    };
    let body = match format {
        Format::Json => Body::Json(json!({"grid": d.grid, "mass": d.mass, "total": d.total()})),
        Format::Csv => Body::Raw(export(&d, ExportFormat::Csv)?),
        Format::Svg => Body::Raw(export(&d, ExportFormat::Svg)?),
        Format::Ascii => Body::Raw(export(&d, ExportFormat::Ascii)?),
    };
    Ok(Output {
        body,
        failure: None,
    })
}

pub fn decompose_cmd(doc: &Document) -> Result<Output, CliError> {
    if !doc.has_vector_measure() {
        return Err(CliError::Validation(
            "the document holds no vector measure".into(),
        ));
    }
    let nu = doc.vector_measure()?;
    let d = decompose(&nu, doc.options.radius);
    let f_t = match &d.f_t_atoms {
        Some(m) => json!({"atoms": m}),
        None => json!({"divergence_of": d.split.tangential}),
    };
    Ok(Output::json(json!({
        "normal_mass": d.split.normal_mass,
        "f_T": f_t,
        "f_N": {"divergence_of": d.split.normal},
        "certified": d.certified,
        "uncertified_reason": d.uncertified_reason,
        "upper_bound": nu.total_variation(),
        "witness_value": d.witness.as_ref().map(|w| w.value),
        "tangential_norm": d.witness.as_ref().map(|w| w.tangential_norm),
        "bump_radius": d.witness.as_ref().map(|w| w.radius),
    })))
}

pub fn modulus_cmd(doc: &Document, eps: &[f64], format: Format) -> Result<Output, CliError> {
    let chain = doc
        .dipoles
        .as_ref()
        .ok_or_else(|| CliError::Validation("the document holds no dipole chain".into()))?;
    let eps = if eps.is_empty() {
        &doc.options.epsilons[..]
    } else {
        eps
    };
    if eps.is_empty() {
        return Err(CliError::Validation("no epsilon values given".into()));
    }
    let curve = modulus(chain, eps)?;
    let body = match format {
        Format::Json => Body::Json(to_value(&curve)),
        Format::Csv => {
            let mut s = String::from("epsilon,c_epsilon,k,tail\n");
            for r in &curve.samples {
                s.push_str(&format!(
                    "{:?},{:?},{},{:?}\n",
                    r.epsilon, r.c_epsilon, r.k, r.tail
                ));
            }
            Body::Raw(s.into_bytes())
        }
        other => {
            return Err(CliError::Validation(format!(
                "modulus cannot be written as {other:?}"
            )));
        }
    };
    Ok(Output {
        body,
        failure: None,
    })
}
