//! Task execution and artifact output.

use std::cell::RefCell;
use std::path::{Path, PathBuf};

use anticoncentration::engine::{
    certified_bound_b, certified_product_bound, certified_rho_s_with, decoupling_check,
};
use anticoncentration::lab::{
    erdos_scaling_sweep, forward1_check, forward2_profile, inverse_constant, inverse_exponent,
    js_bound_check, rho_from_rho_s, sign_steps,
};
use anticoncentration::miner::{bad_set_finite, count_grid_edges, find_ap, find_grid, max_ap_length};
use anticoncentration::scalar::{int, parse_rational, pow, ratio};
use anticoncentration::selfdim::{selfdim_search, verify_certificate};
use anticoncentration::{Element, ElementSet, ExactDist, GroupSpec, SetPredicate};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::scenario::{Resolved, Scenario, Steps, Task};
use crate::table::{Row, Table};

/// Result of one scenario: the table, the resolved scenario, side artifacts
/// and the outcome flags.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub name: String,
    pub table: Table,
    pub resolved: Value,
    pub extras: Vec<(String, Value)>,
    /// Failed holds/sound flags. Any entry means exit code 1.
    pub violations: Vec<String>,
    /// Rejected inputs (for instance a certificate that does not verify).
    /// Any entry, absent violations, means exit code 2.
    pub rejections: Vec<String>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if !self.violations.is_empty() {
            1
        } else if !self.rejections.is_empty() {
            2
        } else {
            0
        }
    }

    /// Writes `<name>.csv`, `<name>.scenario.json` and any extras into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let io = |p: &Path, e: std::io::Error| CliError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut files = vec![(format!("{}.csv", self.name), self.table.to_csv())];
        files.push((format!("{}.scenario.json", self.name), pretty(&self.resolved)));
        for (suffix, v) in &self.extras {
            files.push((format!("{}.{suffix}.json", self.name), pretty(v)));
        }
        let mut written = Vec::new();
        for (file, text) in files {
            let path = dir.join(file);
            std::fs::write(&path, text).map_err(|e| io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn need<'a, T>(x: Option<&'a T>, field: &str, task: &str) -> Result<&'a T, CliError> {
    x.ok_or_else(|| CliError::Field {
        field: field.to_string(),
        message: format!("required by `{task}`"),
    })
}

fn laws(steps: &Steps, group: &GroupSpec) -> Result<Vec<ExactDist>, CliError> {
    match steps {
        Steps::Laws(ls) => Ok(ls.clone()),
        Steps::Signs(gs) => Ok(sign_steps(gs, group)?),
    }
}

fn signs<'a>(steps: &'a Steps, task: &str) -> Result<&'a [Element], CliError> {
    match steps {
        Steps::Signs(gs) => Ok(gs),
        Steps::Laws(_) => Err(CliError::Field {
            field: "steps".into(),
            message: format!("`{task}` needs the sign model {{\"model\": \"signs\", \"gs\": [...]}}"),
        }),
    }
}

fn set_json(g: &GroupSpec, s: &ElementSet) -> String {
    g.set_to_json(s).to_string()
}

/// Runs a scenario. `Err` is a misconfiguration (exit code 2).
pub fn run_scenario(sc: &Scenario) -> Result<RunOutput, CliError> {
    let resolved = sc.resolve()?;
    let mut out = RunOutput {
        name: sc.name.clone(),
        table: Table::default(),
        resolved: sc.echo(&resolved),
        extras: Vec::new(),
        violations: Vec::new(),
        rejections: Vec::new(),
    };
    let task = format!("{} {}", sc.task, sc.mode);
    match (sc.task, sc.mode.as_str()) {
        (Task::Bound, "walk") => bound_walk(sc, &resolved, &task, &mut out)?,
        (Task::Bound, "product") => bound_product(sc, &resolved, &task, &mut out)?,
        (Task::Bound, "decoupling") => bound_decoupling(sc, &resolved, &task, &mut out)?,
        (Task::Selfdim, "verify") => selfdim_verify(sc, &resolved, &task, &mut out)?,
        (Task::Selfdim, "search") => selfdim_find(sc, &resolved, &task, &mut out)?,
        (Task::Mine, mode) => mine(sc, &resolved, mode, &task, &mut out)?,
        (Task::Baseline, "js") => baseline_js(sc, &resolved, &task, &mut out)?,
        (Task::Baseline, "forward1") | (Task::Forward1, _) => forward1(sc, &resolved, &task, &mut out)?,
        (Task::Baseline, "forward2") => forward2(sc, &resolved, &task, &mut out)?,
        (Task::Sweep, "erdos") => sweep_erdos(sc, &mut out)?,
        (Task::Sweep, "inverse") => sweep_inverse(sc, &mut out)?,
        (t, m) => unreachable!("mode {m} validated for {t}"),
    }
    Ok(out)
}

fn bound_walk(sc: &Scenario, r: &Resolved, task: &str, out: &mut RunOutput) -> Result<(), CliError> {
    let mus = laws(need(r.steps.as_ref(), "steps", task)?, &sc.group)?;
    let set = need(r.set.as_ref(), "set", task)?;
    let cert = need(r.certificate.as_ref(), "certificate", task)?;
    let res = certified_rho_s_with(
        &mus,
        cert,
        &SetPredicate::Explicit(set.clone()),
        sc.lambdas.as_deref(),
    )?;
    let k = cert.dimension();
    let c = cert.complexity();
    let lower = rho_from_rho_s(&res.exact, &res.p0, k, c);
    let consistent = lower <= res.rho;
    out.table = Table::single(
        Row::new()
            .text("n", mus.len())
            .text("k", k)
            .text("C", c)
            .q("p0", &res.p0)
            .q("rho", &res.rho)
            .qs("lambdas", &res.lambdas)
            .text("intervals", res.partition.intervals_label())
            .qs("block_rhos", &res.partition.block_rhos)
            .q("rho_s", &res.exact)
            .q("bound", &res.bound.value)
            .text("sound", res.sound)
            .q("rho_lower", &lower)
            .text("inverse_consistent", consistent),
    );
    let trace: Vec<Value> = res
        .bound
        .trace
        .levels
        .iter()
        .map(|l| {
            json!({
                "level": l.level,
                "rho": crate::table::exact(&l.rho),
                "inner": l.inner.as_ref().map(crate::table::exact),
                "sqrt_inner": l.sqrt_inner.as_ref().map(crate::table::exact),
                "value": crate::table::exact(&l.value),
            })
        })
        .collect();
    out.extras.push(("trace".into(), Value::Array(trace)));
    if !res.sound {
        out.violations.push(format!("rho_S = {} > bound {}", res.exact, res.bound.value));
    }
    if !consistent {
        out.violations.push(format!("implied lower bound {lower} exceeds rho = {}", res.rho));
    }
    Ok(())
}

fn bound_product(sc: &Scenario, r: &Resolved, task: &str, out: &mut RunOutput) -> Result<(), CliError> {
    let mus = laws(need(r.steps.as_ref(), "steps", task)?, &sc.group)?;
    let set = need(r.set.as_ref(), "set", task)?;
    let cert = need(r.certificate.as_ref(), "certificate", task)?;
    let v = verify_certificate(set, cert, &sc.group)?;
    if let Some(f) = v.failure {
        return Err(anticoncentration::Error::CertificateRejected(f.reason).into());
    }
    let res = certified_product_bound(&mus, cert, &SetPredicate::Explicit(set.clone()))?;
    out.table = Table::single(
        Row::new()
            .text("k", cert.dimension())
            .text("C", cert.complexity())
            .qs("rhos", &res.block_rhos)
            .q("probability", &res.exact)
            .q("bound", &res.bound.value)
            .text("sound", res.sound),
    );
    if !res.sound {
        out.violations.push(format!("P = {} > bound {}", res.exact, res.bound.value));
    }
    Ok(())
}

fn bound_decoupling(sc: &Scenario, r: &Resolved, task: &str, out: &mut RunOutput) -> Result<(), CliError> {
    let mus = laws(need(r.steps.as_ref(), "steps", task)?, &sc.group)?;
    let set = need(r.set.as_ref(), "set", task)?;
    let [y, z] = mus.as_slice() else {
        return Err(CliError::Field {
            field: "steps".into(),
            message: format!("`{task}` needs exactly two laws, Y then Z"),
        });
    };
    let g = &sc.group;
    let failure = RefCell::new(None);
    let rep = decoupling_check(y, z, |a, b| match g.mul(a, b) {
        Ok(p) => set.contains(&p),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            false
        }
    });
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    out.table = Table::single(
        Row::new()
            .q("p_e", &rep.p_e)
            .q("mu", &rep.mu)
            .q("lambda", &rep.lambda)
            .text("holds", rep.holds),
    );
    if !rep.holds {
        out.violations.push(format!("P(E) = {} exceeds sqrt(lambda) + 2 mu", rep.p_e));
    }
    Ok(())
}

fn selfdim_verify(sc: &Scenario, r: &Resolved, task: &str, out: &mut RunOutput) -> Result<(), CliError> {
    let set = need(r.set.as_ref(), "set", task)?;
    let cert = need(r.certificate.as_ref(), "certificate", task)?;
    let v = verify_certificate(set, cert, &sc.group)?;
    let (path, reason) = match &v.failure {
        Some(f) => {
            let steps: Vec<String> = f
                .path
                .iter()
                .map(|s| format!("{}@{}", s.part, sc.group.element_to_json(&s.translate)))
                .collect();
            (steps.join("/"), f.reason.clone())
        }
        None => (String::new(), String::new()),
    };
    out.table = Table::single(
        Row::new()
            .text("set_size", set.len())
            .text("C", cert.complexity())
            .text("k", cert.dimension())
            .text("ok", v.ok)
            .text("failure_path", path)
            .text("reason", &reason),
    );
    if !v.ok {
        out.rejections.push(format!("certificate rejected: {reason}"));
    }
    Ok(())
}

fn selfdim_find(sc: &Scenario, r: &Resolved, task: &str, out: &mut RunOutput) -> Result<(), CliError> {
    let set = need(r.set.as_ref(), "set", task)?;
    let c = sc.param_u64("C")?.unwrap_or(2) as u32;
    let k_max = sc.param_u64("k_max")?.unwrap_or(2) as u32;
    let found = selfdim_search(set, c, k_max, &sc.group)?;
    let k = found.as_ref().map(|(k, _)| k.to_string()).unwrap_or_default();
    out.table = Table::single(
        Row::new()
            .text("set_size", set.len())
            .text("C", c)
            .text("k_max", k_max)
            .text("found", found.is_some())
            .text("k", k),
    );
    if let Some((_, cert)) = found {
        let v = verify_certificate(set, &cert, &sc.group)?;
        if !v.ok {
            out.violations.push("search returned a certificate that does not verify".into());
        }
        out.extras.push(("certificate".into(), cert.to_json(&sc.group)));
    }
    Ok(())
}

fn factor_sets(sc: &Scenario) -> Result<Vec<ElementSet>, CliError> {
    let v = sc.params.get("factors").ok_or_else(|| CliError::Field {
        field: "params.factors".into(),
        message: "required by `mine count`".into(),
    })?;
    let list = v.as_array().ok_or_else(|| CliError::Field {
        field: "params.factors".into(),
        message: "must be a list of element lists".into(),
    })?;
    list.iter()
        .enumerate()
        .map(|(i, f)| {
            sc.group.set_from_json(f).map_err(|e| CliError::Field {
                field: format!("params.factors[{i}]"),
                message: e.to_string(),
            })
        })
        .collect()
}

fn mine(sc: &Scenario, r: &Resolved, mode: &str, task: &str, out: &mut RunOutput) -> Result<(), CliError> {
    let g = &sc.group;
    let set = need(r.set.as_ref(), "set", task)?;
    match mode {
        "ap" => {
            let m = sc.param_u64("m")?.unwrap_or(3) as usize;
            let cap = sc.param_u64("cap")?.map_or(set.len(), |c| c as usize);
            let w = find_ap(set, m, g)?;
            if let Some(w) = &w {
                if !w.verify(set, g)? {
                    out.violations.push("progression witness fails re-verification".into());
                }
            }
            out.table = Table::single(
                Row::new()
                    .text("m", m)
                    .text("found", w.is_some())
                    .text("g", w.as_ref().map(|w| g.element_to_json(&w.g).to_string()).unwrap_or_default())
                    .text("h", w.as_ref().map(|w| g.element_to_json(&w.h).to_string()).unwrap_or_default())
                    .text("max_length", max_ap_length(set, cap, g)?),
            );
        }
        "grid" => {
            let rr = sc.require_u64("r")? as usize;
            let c = sc.require_u64("C")? as usize;
            let res = find_grid(set, rr, c, g)?;
            let factors = match &res.witness {
                Some(w) => {
                    if !w.verify(set, c, g)? {
                        out.violations.push("grid witness fails re-verification".into());
                    }
                    let fs: Vec<Value> = w.factors.iter().map(|f| g.set_to_json(f)).collect();
                    Value::Array(fs).to_string()
                }
                None => String::new(),
            };
            out.table = Table::single(
                Row::new()
                    .text("r", rr)
                    .text("C", c)
                    .text("found", res.witness.is_some())
                    .text("explored", res.explored)
                    .text("factors", factors),
            );
        }
        "bad" => {
            let t = sc.require_u64("t")? as usize;
            let bad = bad_set_finite(set, t, g)?;
            out.table = Table::single(
                Row::new()
                    .text("t", t)
                    .text("count", bad.len())
                    .text("elements", set_json(g, &bad)),
            );
        }
        "count" => {
            let factors = factor_sets(sc)?;
            let edges = count_grid_edges(set, &factors, g)?;
            let tuples: u64 = factors.iter().map(|f| f.len() as u64).product();
            let mut row = Row::new()
                .text("factors", factors.len())
                .text("edges", edges)
                .text("tuples", tuples);
            match &r.certificate {
                Some(cert) => {
                    let v = verify_certificate(set, cert, g)?;
                    if let Some(f) = v.failure {
                        return Err(anticoncentration::Error::CertificateRejected(f.reason).into());
                    }
                    let k = cert.dimension() as usize;
                    let n = factors.first().map_or(0, ElementSet::len);
                    if factors.len() != k + 1 || n == 0 || factors.iter().any(|f| f.len() != n) {
                        return Err(CliError::Field {
                            field: "params.factors".into(),
                            message: format!("need k + 1 = {} factors of one common positive size", k + 1),
                        });
                    }
                    let rhos = vec![ratio(1, n as i64); k + 1];
                    let bound = pow(&int(n as i64), (k + 1) as u32)
                        * certified_bound_b(cert.complexity(), &rhos).value;
                    let holds = int(edges as i64) <= bound;
                    row = row.q("bound", &bound).text("holds", holds);
                    if !holds {
                        out.violations.push(format!("{edges} grid edges exceed {bound}"));
                    }
                }
                None => row = row.opt_q("bound", None).text("holds", ""),
            }
            out.table = Table::single(row);
        }
        m => unreachable!("mine mode {m}"),
    }
    Ok(())
}

fn baseline_js(sc: &Scenario, r: &Resolved, task: &str, out: &mut RunOutput) -> Result<(), CliError> {
    let gs = signs(need(r.steps.as_ref(), "steps", task)?, task)?;
    let rep = js_bound_check(gs, &sc.group)?;
    let holds = rep.baseline_holds();
    out.table = Table::single(
        Row::new()
            .text("n", rep.n)
            .text("s", rep.s)
            .q("p0", &rep.p0)
            .q("rho", &rep.rho)
            .q("baseline_bound", &rep.baseline_bound)
            .text("holds", holds),
    );
    if !holds {
        out.violations.push(format!("rho = {} exceeds 3 max(1/s, n^-1/2)", rep.rho));
    }
    Ok(())
}

fn forward1(sc: &Scenario, r: &Resolved, task: &str, out: &mut RunOutput) -> Result<(), CliError> {
    let gs = signs(need(r.steps.as_ref(), "steps", task)?, task)?;
    let set = need(r.set.as_ref(), "set", task)?;
    let cert = need(r.certificate.as_ref(), "certificate", task)?;
    let rep = forward1_check(gs, &SetPredicate::Explicit(set.clone()), cert, &sc.group)?;
    let holds = rep.certified_holds().unwrap_or(false);
    let bound = rep.certified_bound.as_ref().map(|b| b.value.clone());
    out.table = Table::single(
        Row::new()
            .text("n", rep.n)
            .text("s", rep.s)
            .text("k", cert.dimension())
            .text("C", cert.complexity())
            .q("rho", &rep.rho)
            .q("baseline_bound", &rep.baseline_bound)
            .qs("block_bounds", &rep.block_bounds)
            .opt_q("rho_s", rep.rho_s.as_ref())
            .opt_q("certified_bound", bound.as_ref())
            .text("holds", holds),
    );
    if !holds {
        out.violations.push("rho_S exceeds the equipartition bound".into());
    }
    Ok(())
}

fn forward2(sc: &Scenario, r: &Resolved, task: &str, out: &mut RunOutput) -> Result<(), CliError> {
    let gs = signs(need(r.steps.as_ref(), "steps", task)?, task)?;
    let k = match &r.certificate {
        Some(c) => c.dimension(),
        None => sc.param_u64("k")?.unwrap_or(1) as u32,
    };
    let delta = match sc.params.get("delta") {
        Some(v) => crate::scenario::rational_value(v).map_err(|e| CliError::Field {
            field: "params.delta".into(),
            message: e.to_string(),
        })?,
        None => parse_rational("1/100")?,
    };
    let s = anticoncentration::lab::min_torsion(gs, &sc.group)?;
    let delta_f = anticoncentration::Probability::to_f64(&delta);
    for (i, v) in forward2_profile(gs.len(), s, k, delta_f).into_iter().enumerate() {
        out.table.push(
            Row::new()
                .text("block", i)
                .text("k", k)
                .text("s", s)
                .text("delta", crate::table::exact(&delta))
                .text("profile_approx", format!("{v:.12}")),
        );
    }
    Ok(())
}

fn sweep_erdos(sc: &Scenario, out: &mut RunOutput) -> Result<(), CliError> {
    let ns: Vec<usize> = match sc.params.get("n_list") {
        None => (4..=64).step_by(2).collect(),
        Some(v) => v
            .as_array()
            .and_then(|xs| xs.iter().map(|x| x.as_u64().map(|n| n as usize)).collect())
            .ok_or_else(|| CliError::Field {
                field: "params.n_list".into(),
                message: "must be a list of even positive integers".into(),
            })?,
    };
    for row in erdos_scaling_sweep(&ns)? {
        out.table.push(
            Row::new()
                .text("n", row.n)
                .q("rho", &row.rho)
                .text("rho_sqrt_n_approx", format!("{:.12}", row.scaled))
                .text("within", row.within),
        );
        if !row.within {
            out.violations.push(format!("n = {}: rho sqrt(n) outside [1/2, 1]", row.n));
        }
    }
    Ok(())
}

fn sweep_inverse(sc: &Scenario, out: &mut RunOutput) -> Result<(), CliError> {
    let k_max = sc.param_u64("k_max")?.unwrap_or(4) as u32;
    let c = sc.param_u64("C")?.unwrap_or(1) as u32;
    let a_max = sc.param_u64("A_max")?.unwrap_or(5) as i64;
    for k in 0..=k_max {
        let kc = inverse_constant(c, k);
        for a in 1..=a_max {
            out.table.push(
                Row::new()
                    .text("k", k)
                    .text("A", a)
                    .q("exponent", &inverse_exponent(k, &int(a)))
                    .text("C", c)
                    .q("K", &kc),
            );
        }
    }
    Ok(())
}

/// Loads and runs one scenario file, writing artifacts into `out_dir`.
pub fn run_file(path: &Path, out_dir: &Path) -> Result<RunOutput, CliError> {
    let sc = Scenario::load(path)?;
    let output = run_scenario(&sc).map_err(|e| e.in_file(path))?;
    output.write(out_dir)?;
    Ok(output)
}
