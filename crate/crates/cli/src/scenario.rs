//! Scenario files: parsing, validation and resolution of generated objects.

use std::fmt;
use std::path::{Path, PathBuf};

use anticoncentration::sample::{random_distribution, random_set, strictly_convex_polygon};
use anticoncentration::scalar::{format_rational, parse_rational};
use anticoncentration::selfdim::selfdim_search;
use anticoncentration::{Certificate, Element, ElementSet, ExactDist, GroupSpec, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Bound,
    Selfdim,
    Mine,
    Baseline,
    Forward1,
    Sweep,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Bound,
        Task::Selfdim,
        Task::Mine,
        Task::Baseline,
        Task::Forward1,
        Task::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Bound => "bound",
            Task::Selfdim => "selfdim",
            Task::Mine => "mine",
            Task::Baseline => "baseline",
            Task::Forward1 => "forward1",
            Task::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Modes accepted by the task; the first is the default.
    pub fn modes(self) -> &'static [&'static str] {
        match self {
            Task::Bound => &["walk", "product", "decoupling"],
            Task::Selfdim => &["verify", "search"],
            Task::Mine => &["ap", "grid", "bad", "count"],
            Task::Baseline => &["js", "forward1", "forward2"],
            Task::Forward1 => &["forward1"],
            Task::Sweep => &["erdos", "inverse"],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const TOP_LEVEL: [&str; 10] = [
    "name",
    "task",
    "mode",
    "group",
    "seed",
    "steps",
    "set",
    "certificate",
    "lambdas",
    "params",
];

/// A validated scenario. Generated objects are materialized by [`Scenario::resolve`].
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub task: Task,
    pub mode: String,
    pub group_text: String,
    pub group: GroupSpec,
    pub seed: u64,
    pub steps: Option<Value>,
    pub set: Option<Value>,
    pub certificate: Option<Value>,
    pub lambdas: Option<Vec<Rational>>,
    pub params: Map<String, Value>,
    /// Directory against which relative paths in the scenario resolve.
    pub base_dir: PathBuf,
}

/// How the steps were specified, after generation.
#[derive(Clone, Debug)]
pub enum Steps {
    Laws(Vec<ExactDist>),
    /// Sign model: step `i` is uniform on `{g_i, g_i^-1}`.
    Signs(Vec<Element>),
}

/// Everything the task needs, with generators already run.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub steps: Option<Steps>,
    pub set: Option<ElementSet>,
    pub certificate: Option<Certificate>,
}

fn field_err(field: &str, msg: impl fmt::Display) -> CliError {
    CliError::Field {
        field: field.to_string(),
        message: msg.to_string(),
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|e| e.in_file(path))
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Scenario, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_value(value, base_dir)
    }

    pub fn from_value(value: Value, base_dir: &Path) -> Result<Scenario, CliError> {
        let Value::Object(mut obj) = value else {
            return Err(field_err("<root>", "scenario must be a JSON object"));
        };
        if let Some(k) = obj.keys().find(|k| !TOP_LEVEL.contains(&k.as_str())) {
            return Err(field_err(k, format!("unknown field; expected one of {TOP_LEVEL:?}")));
        }
        let task_text = obj
            .get("task")
            .and_then(Value::as_str)
            .ok_or_else(|| field_err("task", "missing or not a string"))?;
        let task = Task::parse(task_text).ok_or_else(|| {
            field_err(
                "task",
                format!(
                    "`{task_text}` is not one of {:?}",
                    Task::ALL.map(Task::name)
                ),
            )
        })?;
        let mode = match obj.get("mode") {
            None => task.modes()[0].to_string(),
            Some(Value::String(m)) if task.modes().contains(&m.as_str()) => m.clone(),
            Some(m) => {
                return Err(field_err(
                    "mode",
                    format!("{m} is not a mode of `{task}`; expected one of {:?}", task.modes()),
                ))
            }
        };
        let name = match obj.get("name") {
            None => task.name().to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(field_err("name", "must be a string")),
        };
        let seed = match obj.get("seed") {
            None => 0,
            Some(v) => v.as_u64().ok_or_else(|| field_err("seed", "must be a 64-bit unsigned integer"))?,
        };
        let group_text = match task {
            Task::Sweep => obj
                .get("group")
                .and_then(Value::as_str)
                .unwrap_or("Z")
                .to_string(),
            _ => obj
                .get("group")
                .and_then(Value::as_str)
                .ok_or_else(|| field_err("group", "missing or not a string"))?
                .to_string(),
        };
        let group = parse_group(&group_text, base_dir).map_err(|e| field_err("group", e))?;
        let lambdas = match obj.get("lambdas") {
            None => None,
            Some(Value::Array(xs)) => Some(
                xs.iter()
                    .enumerate()
                    .map(|(i, x)| rational_value(x).map_err(|e| field_err(&format!("lambdas[{i}]"), e)))
                    .collect::<Result<_, _>>()?,
            ),
            Some(_) => return Err(field_err("lambdas", "must be a list of rationals")),
        };
        let params = match obj.remove("params") {
            None => Map::new(),
            Some(Value::Object(m)) => m,
            Some(_) => return Err(field_err("params", "must be an object")),
        };
        Ok(Scenario {
            name,
            task,
            mode,
            group_text,
            group,
            seed,
            steps: obj.remove("steps"),
            set: obj.remove("set"),
            certificate: obj.remove("certificate"),
            lambdas,
            params,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn param_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(Some)
                .ok_or_else(|| field_err(&format!("params.{key}"), "must be a non-negative integer")),
        }
    }

    pub fn require_u64(&self, key: &str) -> Result<u64, CliError> {
        self.param_u64(key)?
            .ok_or_else(|| field_err(&format!("params.{key}"), "required for this task"))
    }

    pub fn param_rational(&self, key: &str) -> Result<Option<Rational>, CliError> {
        self.params
            .get(key)
            .map(|v| rational_value(v).map_err(|e| field_err(&format!("params.{key}"), e)))
            .transpose()
    }

    /// Runs every generator with a single seeded stream, in the fixed order
    /// steps, set, certificate.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let steps = self
            .steps
            .as_ref()
            .map(|v| self.resolve_steps(v, &mut rng))
            .transpose()?;
        let set = self
            .set
            .as_ref()
            .map(|v| self.resolve_set(v, &mut rng))
            .transpose()?;
        let certificate = self
            .certificate
            .as_ref()
            .map(|v| self.resolve_certificate(v, set.as_ref()))
            .transpose()?;
        Ok(Resolved {
            steps,
            set,
            certificate,
        })
    }

    fn resolve_steps(&self, v: &Value, rng: &mut ChaCha8Rng) -> Result<Steps, CliError> {
        let g = &self.group;
        match v {
            Value::Array(xs) => Ok(Steps::Laws(
                xs.iter()
                    .enumerate()
                    .map(|(i, d)| {
                        ExactDist::from_json(d, Some(g)).map_err(|e| field_err(&format!("steps[{i}]"), e))
                    })
                    .collect::<Result<_, _>>()?,
            )),
            Value::Object(o) => {
                let model = o
                    .get("model")
                    .and_then(Value::as_str)
                    .ok_or_else(|| field_err("steps.model", "missing or not a string"))?;
                match model {
                    "signs" => {
                        let gs = o.get("gs").ok_or_else(|| field_err("steps.gs", "missing"))?;
                        let gs = element_list(g, gs).map_err(|e| field_err("steps.gs", e))?;
                        Ok(Steps::Signs(gs))
                    }
                    "uniform-support" => {
                        let supports = o
                            .get("supports")
                            .and_then(Value::as_array)
                            .ok_or_else(|| field_err("steps.supports", "missing or not a list"))?;
                        let laws = supports
                            .iter()
                            .enumerate()
                            .map(|(i, s)| {
                                let at = format!("steps.supports[{i}]");
                                let set = g.set_from_json(s).map_err(|e| field_err(&at, e))?;
                                ExactDist::uniform(g.clone(), set).map_err(|e| field_err(&at, e))
                            })
                            .collect::<Result<_, _>>()?;
                        Ok(Steps::Laws(laws))
                    }
                    "random" => {
                        let get = |k: &str, default: u64| -> Result<u64, CliError> {
                            match o.get(k) {
                                None => Ok(default),
                                Some(v) => v.as_u64().ok_or_else(|| {
                                    field_err(&format!("steps.{k}"), "must be a non-negative integer")
                                }),
                            }
                        };
                        let n = get("n", 0)?;
                        if n == 0 {
                            return Err(field_err("steps.n", "must be a positive integer"));
                        }
                        let support = get("support", 2)? as usize;
                        let radius = get("radius", 2)? as i64;
                        let uniform = match o.get("uniform") {
                            None => false,
                            Some(v) => v
                                .as_bool()
                                .ok_or_else(|| field_err("steps.uniform", "must be a boolean"))?,
                        };
                        let laws = (0..n)
                            .map(|_| {
                                if uniform {
                                    ExactDist::uniform(g.clone(), random_set(g, support, radius, rng))
                                } else {
                                    random_distribution(g, support, radius, rng)
                                }
                            })
                            .collect::<Result<_, _>>()
                            .map_err(|e| field_err("steps", e))?;
                        Ok(Steps::Laws(laws))
                    }
                    other => Err(field_err(
                        "steps.model",
                        format!("`{other}` is not one of [\"signs\", \"uniform-support\", \"random\"]"),
                    )),
                }
            }
            _ => Err(field_err("steps", "must be a list of distributions or a generator object")),
        }
    }

    fn resolve_set(&self, v: &Value, rng: &mut ChaCha8Rng) -> Result<ElementSet, CliError> {
        let g = &self.group;
        match v {
            Value::Array(_) => g.set_from_json(v).map_err(|e| field_err("set", e)),
            Value::Object(o) => {
                let generator = o
                    .get("generator")
                    .and_then(Value::as_str)
                    .ok_or_else(|| field_err("set.generator", "missing or not a string"))?;
                let get = |k: &str| {
                    o.get(k)
                        .and_then(Value::as_u64)
                        .ok_or_else(|| field_err(&format!("set.{k}"), "missing or not an integer"))
                };
                match generator {
                    "convex-polygon" => {
                        if *g != GroupSpec::FreeAbelian(2) {
                            return Err(field_err("set.generator", "convex-polygon needs group Z^2"));
                        }
                        strictly_convex_polygon(get("vertices")? as usize, rng)
                            .map_err(|e| field_err("set.vertices", e))
                    }
                    "random" => {
                        let radius = o.get("radius").and_then(Value::as_u64).unwrap_or(3) as i64;
                        Ok(random_set(g, get("size")? as usize, radius, rng))
                    }
                    other => Err(field_err(
                        "set.generator",
                        format!("`{other}` is not one of [\"convex-polygon\", \"random\"]"),
                    )),
                }
            }
            _ => Err(field_err("set", "must be an element list or a generator object")),
        }
    }

    fn resolve_certificate(&self, v: &Value, set: Option<&ElementSet>) -> Result<Certificate, CliError> {
        let g = &self.group;
        if let Some(p) = v.get("path") {
            let p = p.as_str().ok_or_else(|| field_err("certificate.path", "must be a string"))?;
            let path = self.base_dir.join(p);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Syntax {
                line: e.line(),
                column: e.column(),
                message: format!("{}: {e}", path.display()),
            })?;
            return Certificate::from_json(&value, g).map_err(|e| field_err("certificate.path", e));
        }
        if let Some(s) = v.get("search") {
            let set = set.ok_or_else(|| field_err("certificate.search", "needs a `set`"))?;
            let c = s.get("C").and_then(Value::as_u64).unwrap_or(2) as u32;
            let k_max = s.get("k_max").and_then(Value::as_u64).unwrap_or(2) as u32;
            return match selfdim_search(set, c, k_max, g).map_err(CliError::Core)? {
                Some((_, cert)) => Ok(cert),
                None => Err(field_err(
                    "certificate.search",
                    format!("no certificate with C = {c} and k <= {k_max}"),
                )),
            };
        }
        if let Some(w) = v.get("wrap") {
            let set = set.ok_or_else(|| field_err("certificate.wrap", "needs a `set`"))?;
            let c = w
                .get("C")
                .and_then(Value::as_u64)
                .ok_or_else(|| field_err("certificate.wrap.C", "missing or not an integer"))?;
            let child = match w.get("child") {
                Some(ch) => Certificate::from_json(ch, g).map_err(|e| field_err("certificate.wrap.child", e))?,
                None => Certificate::leaf(c as u32),
            };
            return Ok(Certificate::node(c as u32, vec![set.clone()], child));
        }
        Certificate::from_json(v, g).map_err(|e| field_err("certificate", e))
    }

    /// The scenario with every generated object replaced by its value.
    pub fn echo(&self, resolved: &Resolved) -> Value {
        let g = &self.group;
        let mut out = Map::new();
        out.insert("name".into(), json!(self.name));
        out.insert("task".into(), json!(self.task.name()));
        out.insert("mode".into(), json!(self.mode));
        out.insert("group".into(), json!(self.group_text));
        out.insert("seed".into(), json!(self.seed));
        match &resolved.steps {
            Some(Steps::Laws(laws)) => {
                let list = laws.iter().map(|d| json!({ "entries": d.to_json()["entries"] }));
                out.insert("steps".into(), Value::Array(list.collect()));
            }
            Some(Steps::Signs(gs)) => {
                let gs: Vec<Value> = gs.iter().map(|x| g.element_to_json(x)).collect();
                out.insert("steps".into(), json!({ "model": "signs", "gs": gs }));
            }
            None => {}
        }
        if let Some(s) = &resolved.set {
            out.insert("set".into(), g.set_to_json(s));
        }
        if let Some(c) = &resolved.certificate {
            out.insert("certificate".into(), c.to_json(g));
        }
        if let Some(ls) = &self.lambdas {
            let ls: Vec<Value> = ls.iter().map(|l| json!(format_rational(l))).collect();
            out.insert("lambdas".into(), Value::Array(ls));
        }
        if !self.params.is_empty() {
            out.insert("params".into(), Value::Object(self.params.clone()));
        }
        Value::Object(out)
    }
}

fn parse_group(text: &str, base_dir: &Path) -> anticoncentration::Result<GroupSpec> {
    // table paths are relative to the scenario file
    if let Some(p) = text.trim().strip_prefix("cayley:") {
        let path = base_dir.join(p.trim());
        return GroupSpec::parse(&format!("cayley:{}", path.display()));
    }
    GroupSpec::parse(text)
}

fn element_list(g: &GroupSpec, v: &Value) -> anticoncentration::Result<Vec<Element>> {
    v.as_array()
        .ok_or_else(|| anticoncentration::Error::Json(format!("expected a list, found {v}")))?
        .iter()
        .map(|x| g.element_from_json(x))
        .collect()
}

pub fn rational_value(v: &Value) -> anticoncentration::Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) => parse_rational(&n.to_string()),
        other => Err(anticoncentration::Error::Json(format!("{other} is not a rational"))),
    }
}
