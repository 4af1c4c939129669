use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use lowk_core::coeffgen::{terms, DEFAULT_MAX_ORDER};
use lowk_core::potential::catalog_with;
use lowk_core::{
    classify_case, closed_form_g, eval_bracket_with_error, generic_expansion, green_exact,
    green_exact_detailed, green_series, log_form_value, max_valid_order, remainder_scaling_fit,
    BracketSpec, EndpointKind, Error, ExpansionResult, Family, PotentialModel, Route, Side,
    TermTable, ValidOrder,
};

use crate::opts::{Format, Kind, RunSpec};
use crate::table::Table;
use crate::{CliError, Context};

pub fn execute(spec: &RunSpec) -> Result<String, CliError> {
    let model = catalog_with(&spec.potential, &spec.params)
        .context(|| format!("potential {}", spec.potential))?;
    match spec.kind {
        Kind::Expand => expand(spec, &model),
        Kind::Compare => compare(spec, &model),
        Kind::Brackets => brackets(spec, &model),
        Kind::Scaling => scaling(spec, &model),
        Kind::Oracle => oracle(spec, &model),
    }
}

fn valid_text(v: ValidOrder) -> String {
    match v {
        ValidOrder::Finite(n) => n.to_string(),
        ValidOrder::Unbounded => "unbounded".into(),
    }
}

fn header(spec: &RunSpec, model: &PotentialModel) -> Result<Map<String, Value>, CliError> {
    let class = classify_case(model);
    let valid = max_valid_order(model).context(|| format!("validity order of {}", spec.potential))?;
    let mut m = Map::new();
    m.insert("potential".into(), json!(spec.potential));
    for (k, v) in &spec.params {
        m.insert((*k).into(), json!(v));
    }
    m.insert("case".into(), json!(class.tag.name()));
    m.insert("reflected".into(), json!(class.reflected));
    m.insert("valid_order".into(), json!(valid_text(valid)));
    Ok(m)
}

fn points(m: &mut Map<String, Value>, spec: &RunSpec) {
    m.insert("x".into(), json!(spec.x));
    m.insert("y".into(), json!(spec.y));
}

fn render(spec: &RunSpec, table: &Table, extra: Option<Value>) -> String {
    match spec.format {
        Format::Csv => table.csv(),
        Format::Json => table.json(extra),
    }
}

fn expansion(spec: &RunSpec, model: &PotentialModel) -> Result<ExpansionResult, CliError> {
    let at = || format!("{} at (x, y) = ({}, {})", spec.potential, spec.x, spec.y);
    if spec.generic || !model.is_fokker_planck() {
        generic_expansion(model, spec.x, spec.y, spec.order, &spec.solver, &spec.quad)
            .context(|| format!("zero-energy expansion of {}", at()))
    } else {
        green_series(model, spec.x, spec.y, spec.order, &spec.quad)
            .context(|| format!("bracket series of {}", at()))
    }
}

fn family(kind: EndpointKind) -> Family {
    match kind {
        EndpointKind::FiniteLimit => Family::A,
        EndpointKind::PlusInfinity => Family::B,
        EndpointKind::MinusInfinity => Family::Btilde,
    }
}

/// Term tables entering `S` at the requested order.
fn term_tables(model: &PotentialModel, order: i32) -> Vec<TermTable> {
    let class = classify_case(model);
    let m = if class.reflected { model.reflected() } else { model.clone() };
    let (r, l) = (family(m.left.kind), family(m.right.kind));
    let m0 = if r == Family::Btilde || l == Family::Btilde {
        -1
    } else if r == Family::A || l == Family::A {
        0
    } else {
        1
    };
    let s_max = (order + 2 * m0 + 1).clamp(0, DEFAULT_MAX_ORDER as i32) as usize;
    let mut out = Vec::new();
    for (fam, side) in [(r, Side::Right), (l, Side::Left)] {
        for n in 0..=s_max {
            let t = terms(fam, n, side);
            if !t.terms.is_empty() {
                out.push(t);
            }
        }
    }
    out
}

fn table_json(t: &TermTable) -> Value {
    let rows: Vec<Value> = t
        .terms
        .iter()
        .map(|term| {
            json!({
                "coeff": term.coeff.to_string(),
                "limit_exponent": term.limit_exponent,
                "kind": format!("{:?}", term.kind),
                "signs": term.sign_string(),
            })
        })
        .collect();
    json!({
        "family": format!("{:?}", t.family),
        "side": format!("{:?}", t.side),
        "n": t.n,
        "point_factor": format!("{:?}", t.point_factor),
        "terms": rows,
    })
}

fn table_note(t: &TermTable) -> String {
    let body: Vec<String> = t
        .terms
        .iter()
        .map(|x| {
            let damp = match x.limit_exponent {
                0 => String::new(),
                l => format!("*exp(-{l}V_lim)"),
            };
            format!("{}{damp}*{:?}[{}]", x.coeff, x.kind, x.sign_string())
        })
        .collect();
    format!("terms {:?} {:?} n={}: {}", t.family, t.side, t.n, body.join(" + "))
}

fn expand(spec: &RunSpec, model: &PotentialModel) -> Result<String, CliError> {
    let r = expansion(spec, model)?;
    let mut meta = header(spec, model)?;
    points(&mut meta, spec);
    meta.insert("order".into(), json!(spec.order));
    meta.insert("route".into(), json!(format!("{:?}", r.diagnostics.route)));
    meta.insert("quadrature_error".into(), json!(r.diagnostics.quadrature_error));
    if let Some(c) = r.diagnostics.cross_check {
        meta.insert("zero_energy_cross_check".into(), json!(c));
    }
    let mut t = Table::new(meta, vec!["n".into(), "g".into(), "closed_form".into(), "residual".into()]);
    for n in r.g.min_order()..=r.order {
        let g = r.coeff(n);
        let closed = if r.diagnostics.route == Route::Brackets {
            match closed_form_g(model, spec.x, spec.y, r.case_tag, n, &spec.quad) {
                Ok(v) => Some(v),
                Err(Error::NoClosedForm { .. }) => None,
                Err(e) => {
                    return Err(e).context(|| format!("closed form g_{n} of case {}", r.case_tag))
                }
            }
        } else {
            None
        };
        let residual = closed.map(|c| ((g - c) / c).abs());
        t.push(vec![Some(n as f64), Some(g), closed, residual]);
    }
    for w in &r.diagnostics.warnings {
        t.notes.push(format!("warning: {w}"));
    }
    let tables = if spec.show_terms { term_tables(model, spec.order) } else { Vec::new() };
    if spec.format == Format::Csv {
        t.notes.extend(tables.iter().map(table_note));
    }
    let mut extra = Map::new();
    extra.insert("warnings".into(), json!(r.diagnostics.warnings));
    extra.insert("q".into(), json!(r.q));
    if spec.show_terms {
        extra.insert("terms".into(), Value::Array(tables.iter().map(table_json).collect()));
    }
    Ok(render(spec, &t, Some(Value::Object(extra))))
}

fn orders(r: &ExpansionResult) -> Vec<i32> {
    let step = if r.case_tag.even_only() { 2 } else { 1 };
    (r.g.min_order()..=r.order).step_by(step).collect()
}

fn compare(spec: &RunSpec, model: &PotentialModel) -> Result<String, CliError> {
    let r = expansion(spec, model)?;
    let exact: Vec<C> = spec
        .ks
        .par_iter()
        .map(|&k| {
            green_exact(model, spec.x, spec.y, C::new(k, 0.0), &spec.solver)
                .map(|s| s.value)
                .context(|| format!("exact Green function at k = {k}"))
        })
        .collect::<Result<_, _>>()?;
    let ms = orders(&r);
    let mut cols = vec!["k".to_string(), "re_exact".into(), "im_exact".into()];
    for m in &ms {
        cols.push(format!("re_sum_{m}"));
        cols.push(format!("im_sum_{m}"));
    }
    if spec.log_form {
        cols.push("re_log_form".into());
        cols.push("im_log_form".into());
    }
    for m in &ms {
        cols.push(format!("residual_sum_{m}"));
    }
    if spec.log_form {
        cols.push("residual_log_form".into());
    }
    let mut meta = header(spec, model)?;
    points(&mut meta, spec);
    meta.insert("order".into(), json!(spec.order));
    meta.insert("route".into(), json!(format!("{:?}", r.diagnostics.route)));
    let mut t = Table::new(meta, cols);
    for (&k, &g) in spec.ks.iter().zip(&exact) {
        let kc = C::new(k, 0.0);
        let sums: Vec<C> = ms.iter().map(|&m| r.partial_sum(m, kc)).collect();
        let log = if spec.log_form {
            Some(log_form_value(&r, kc).context(|| format!("log form at k = {k}"))?)
        } else {
            None
        };
        let mut row = vec![Some(k), Some(g.re), Some(g.im)];
        for s in &sums {
            row.push(Some(s.re));
            row.push(Some(s.im));
        }
        if let Some(l) = log {
            row.push(Some(l.re));
            row.push(Some(l.im));
        }
        row.extend(sums.iter().map(|s| Some((s - g).norm())));
        if let Some(l) = log {
            row.push(Some((l - g).norm()));
        }
        t.push(row);
    }
    Ok(render(spec, &t, None))
}

fn brackets(spec: &RunSpec, model: &PotentialModel) -> Result<String, CliError> {
    let (kind, signs) = spec.bracket.clone().ok_or_else(|| CliError::usage("no bracket given"))?;
    let b = BracketSpec::parse(kind, &signs, spec.lower, spec.upper)
        .context(|| format!("bracket {signs:?}"))?;
    let v = eval_bracket_with_error(&b, model, &spec.quad)
        .context(|| format!("{:?}[{signs}] on [{}, {}]", kind, spec.lower, spec.upper))?;
    let mut meta = header(spec, model)?;
    meta.insert("kind".into(), json!(format!("{kind:?}")));
    meta.insert("signs".into(), json!(signs));
    meta.insert("lower".into(), json!(spec.lower.to_string()));
    meta.insert("upper".into(), json!(spec.upper.to_string()));
    let mut t = Table::new(meta, vec!["value".into(), "error_estimate".into()]);
    t.push(vec![Some(v.value), Some(v.error_estimate)]);
    Ok(render(spec, &t, None))
}

/// Remainder exponent `α - 1` for the marginal logarithmic step, when `N + 1 < α < N + 2`.
fn expected_slope(spec: &RunSpec, model: &PotentialModel) -> Option<f64> {
    if spec.expect_slope.is_some() {
        return spec.expect_slope;
    }
    let alpha = *model.params.get("alpha")?;
    let n = spec.order as f64;
    (spec.potential == "logstep" && n + 1.0 < alpha && alpha < n + 2.0).then_some(alpha - 1.0)
}

fn scaling(spec: &RunSpec, model: &PotentialModel) -> Result<String, CliError> {
    let mut ks = spec.ks.clone();
    ks.sort_by(|a, b| b.total_cmp(a));
    ks.dedup();
    let fit = remainder_scaling_fit(model, spec.x, spec.y, spec.order, &ks, &spec.solver, &spec.quad)
        .context(|| format!("remainder scaling of {} at order {}", spec.potential, spec.order))?;
    let mut meta = header(spec, model)?;
    points(&mut meta, spec);
    meta.insert("order".into(), json!(spec.order));
    meta.insert("slope".into(), json!(fit.slope));
    meta.insert("intercept".into(), json!(fit.intercept));
    if let Some(e) = expected_slope(spec, model) {
        let pass = (fit.slope - e).abs() <= 0.1;
        meta.insert("expected_slope".into(), json!(e));
        meta.insert("verdict".into(), json!(if pass { "pass" } else { "fail" }));
    }
    let cols = ["k", "residual", "noise", "re_exact", "im_exact", "re_partial", "im_partial"];
    let mut t = Table::new(meta, cols.iter().map(|c| c.to_string()).collect());
    for p in &fit.points {
        t.push(
            [p.k, p.residual, p.noise, p.exact.re, p.exact.im, p.partial_sum.re, p.partial_sum.im]
                .map(Some)
                .to_vec(),
        );
    }
    Ok(render(spec, &t, None))
}

fn oracle(spec: &RunSpec, model: &PotentialModel) -> Result<String, CliError> {
    let details: Vec<_> = spec
        .ks
        .par_iter()
        .map(|&k| {
            green_exact_detailed(model, spec.x, spec.y, C::new(k, 0.0), &spec.solver)
                .context(|| format!("exact Green function at k = {k}"))
        })
        .collect::<Result<_, _>>()?;
    let mut meta = header(spec, model)?;
    points(&mut meta, spec);
    let cols = [
        "k",
        "re_g",
        "im_g",
        "re_d_dx",
        "im_d_dx",
        "re_d_dy",
        "im_d_dy",
        "wronskian_drift",
        "epsilon_sensitivity",
        "cutoff_left",
        "cutoff_right",
    ];
    let mut t = Table::new(meta, cols.iter().map(|c| c.to_string()).collect());
    for d in &details {
        let g = d.sample.value;
        t.push(
            [
                d.sample.k.re,
                g.re,
                g.im,
                d.d_dx.re,
                d.d_dx.im,
                d.d_dy.re,
                d.d_dy.im,
                d.wronskian_drift,
                d.epsilon_sensitivity,
                d.cutoffs.0,
                d.cutoffs.1,
            ]
            .map(Some)
            .to_vec(),
        );
    }
    Ok(render(spec, &t, None))
}
