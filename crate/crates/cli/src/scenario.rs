//! Scenario files: TOML with embedded expression strings.
//!
//! ```toml
//! kind = "contact"                  # contact | cosymplectic | complex | riemannian | frame | group
//! description = "standard contact form on R3"
//! checks = ["integrability"]        # optional; all checks of the kind by default
//!
//! [chart]                           # base chart; the fibre coordinate is appended
//! coords = ["x", "u", "p"]
//! fibre = "mu"                      # default "mu"
//! branch = "full"                   # full (μ ≠ 0) | positive (μ > 0)
//! constraints = ["x > 0"]           # var > c, var < c, var != c
//!
//! [policy]                          # optional overrides
//! seed = 0
//! samples = 20
//! tolerance = 1e-9
//!
//! [objects]                         # kind-specific
//! theta = { du = "1", dx = "-p" }   # forms: keys are dx or dx^dy, values are expressions
//!
//! [expect]                          # optional "<check>.<fact>" = value
//! "integrability.integrable" = true
//! ```
//!
//! Objects by kind:
//!
//! | kind | keys |
//! |------|------|
//! | contact | `theta` (1-form), `upsilon` (2-form, default 0), `chart` (expressions on the total space) |
//! | cosymplectic | `Omega` (2-form), `eta` (1-form) |
//! | complex | `frame` (columns over the total coordinates) |
//! | riemannian | `g` (symmetric matrix rows) and `eta` (1-form, default 0), or `sphere = n` |
//! | frame | `frame`, `group` (`Sp(k)`, `GLC(k)`, `O(m)`, `GL(m)`) |
//! | group | `group`, `elements` (rational matrices), `values` (quotient values), `random` (count, default 50) |

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use homogeom::calculus::{Chart, KForm};
use homogeom::exprcore::{parse, Constraint, Expr, Symbol, Q};
use homogeom::groups::{GroupId, QMatrix, QuotientValue};
use homogeom::linebundle::{Branch, LineBundle};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::InputError;
use crate::report::Fact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Contact,
    Cosymplectic,
    Complex,
    Riemannian,
    Frame,
    Group,
}

impl Kind {
    /// Checks in execution order.
    pub fn checks(self) -> &'static [&'static str] {
        match self {
            Kind::Contact => &["homogeneity", "round_trip", "nondegeneracy", "integrability", "darboux_chart"],
            Kind::Cosymplectic => &["homogeneity", "round_trip", "dictionary", "integrability"],
            Kind::Complex => &["homogeneity", "torsion"],
            Kind::Riemannian => &["homogeneity", "round_trip", "connection", "rd_formulas", "tensors", "integrability", "sphere_chart"],
            Kind::Frame => &["transition", "homomorphism", "degree"],
            Kind::Group => &["membership", "splitting", "exact_sequence"],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Contact => "contact",
            Kind::Cosymplectic => "cosymplectic",
            Kind::Complex => "complex",
            Kind::Riemannian => "riemannian",
            Kind::Frame => "frame",
            Kind::Group => "group",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BranchSpec {
    #[default]
    Full,
    Positive,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChartSpec {
    coords: Vec<String>,
    #[serde(default = "default_fibre")]
    fibre: String,
    #[serde(default)]
    branch: BranchSpec,
    #[serde(default)]
    constraints: Vec<String>,
}

fn default_fibre() -> String {
    "mu".into()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tolerance: Option<f64>,
}

impl PolicySpec {
    /// `self` wins over `base`.
    pub fn over(self, base: PolicySpec) -> PolicySpec {
        PolicySpec { seed: self.seed.or(base.seed), samples: self.samples.or(base.samples), tolerance: self.tolerance.or(base.tolerance) }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    kind: Kind,
    description: Option<String>,
    chart: Option<ChartSpec>,
    #[serde(default)]
    policy: PolicySpec,
    checks: Option<Vec<String>>,
    #[serde(default)]
    objects: toml::Table,
    #[serde(default)]
    expect: BTreeMap<String, toml::Value>,
}

/// An expression given as a string or an integer literal.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Text(String),
}

impl Scalar {
    fn text(&self) -> String {
        match self {
            Scalar::Int(i) => i.to_string(),
            Scalar::Text(s) => s.clone(),
        }
    }
}

type FormSpec = BTreeMap<String, Scalar>;
type Columns = Vec<Vec<Scalar>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContactSpec {
    theta: FormSpec,
    #[serde(default)]
    upsilon: FormSpec,
    chart: Option<Vec<Scalar>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CosymplecticSpec {
    #[serde(rename = "Omega")]
    big_omega: FormSpec,
    eta: FormSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexSpec {
    frame: Columns,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RiemannianSpec {
    g: Option<Columns>,
    #[serde(default)]
    eta: FormSpec,
    sphere: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameSpec {
    frame: Columns,
    group: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupSpec {
    group: String,
    #[serde(default)]
    elements: Vec<Columns>,
    #[serde(default)]
    values: Vec<Scalar>,
    #[serde(default = "default_random")]
    random: usize,
}

fn default_random() -> usize {
    50
}

#[derive(Debug, Clone)]
pub enum Body {
    Contact { lb: LineBundle, theta: KForm, upsilon: KForm, chart: Option<Vec<Expr>> },
    Cosymplectic { lb: LineBundle, big_omega: KForm, eta: KForm },
    Complex { lb: LineBundle, frame: Vec<Vec<Expr>> },
    Riemannian { lb: LineBundle, g: Vec<Vec<Expr>>, eta: KForm },
    Sphere { n: usize },
    Frame { lb: LineBundle, frame: Vec<Vec<Expr>>, group: GroupId },
    Group { group: GroupId, elements: Vec<QMatrix>, values: Vec<QuotientValue>, random: usize },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub description: Option<String>,
    pub policy: PolicySpec,
    pub checks: Vec<&'static str>,
    pub expect: BTreeMap<String, Fact>,
    /// The objects table as written, echoed into reports.
    pub input: toml::Table,
    pub body: Body,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, InputError> {
        let text = std::fs::read_to_string(path).map_err(|source| InputError::Io { path: path.to_path_buf(), source })?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        Scenario::parse(&text, stem)
    }

    /// Parses a scenario; `default_name` is used when the file has no `name`.
    pub fn parse(text: &str, default_name: &str) -> Result<Scenario, InputError> {
        let raw: RawScenario = toml::from_str(text)?;
        let kind = raw.kind;
        let checks = select_checks(kind, raw.checks.as_deref())?;
        let mut expect = BTreeMap::new();
        for (key, v) in raw.expect {
            let pointer = format!("expect.{key}");
            let Some((check, _fact)) = key.split_once('.') else {
                return Err(InputError::schema(pointer, "keys have the form \"<check>.<fact>\""));
            };
            if !kind.checks().contains(&check) {
                return Err(InputError::schema(pointer, format!("`{check}` is not a {kind} check")));
            }
            let fact = match v {
                toml::Value::Boolean(b) => Fact::Bool(b),
                toml::Value::Integer(i) => Fact::Int(i),
                toml::Value::String(s) => Fact::Text(s),
                other => return Err(InputError::schema(pointer, format!("expected a boolean, integer or string, found {}", other.type_str()))),
            };
            expect.insert(key, fact);
        }
        let body = build_body(kind, raw.chart, &raw.objects)?;
        Ok(Scenario {
            name: raw.name.unwrap_or_else(|| default_name.to_string()),
            kind,
            description: raw.description,
            policy: raw.policy,
            checks,
            expect,
            input: raw.objects,
            body,
        })
    }
}

fn select_checks(kind: Kind, requested: Option<&[String]>) -> Result<Vec<&'static str>, InputError> {
    let all = kind.checks();
    let Some(req) = requested else { return Ok(all.to_vec()) };
    for (i, c) in req.iter().enumerate() {
        if !all.contains(&c.as_str()) {
            return Err(InputError::schema(format!("checks[{i}]"), format!("unknown {kind} check `{c}`; known: {}", all.join(", "))));
        }
    }
    Ok(all.iter().copied().filter(|c| req.iter().any(|r| r == c)).collect())
}

fn objects<T: DeserializeOwned>(table: &toml::Table) -> Result<T, InputError> {
    let value = toml::Value::Table(table.clone());
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let pointer = if path == "." { "objects".to_string() } else { format!("objects.{path}") };
        InputError::schema(pointer, e.into_inner().to_string())
    })
}

fn build_body(kind: Kind, chart: Option<ChartSpec>, table: &toml::Table) -> Result<Body, InputError> {
    let need_bundle = |chart: Option<ChartSpec>| chart.ok_or_else(|| InputError::schema("chart", format!("a {kind} scenario needs a [chart] table"))).and_then(bundle);
    Ok(match kind {
        Kind::Contact => {
            let s: ContactSpec = objects(table)?;
            let lb = need_bundle(chart)?;
            let theta = form(lb.base(), 1, &s.theta, "objects.theta")?;
            let upsilon = form(lb.base(), 2, &s.upsilon, "objects.upsilon")?;
            let chart = match s.chart {
                Some(cs) => Some(cs.iter().enumerate().map(|(i, c)| expr(lb.total(), &c.text(), &format!("objects.chart[{i}]"))).collect::<Result<_, _>>()?),
                None => None,
            };
            Body::Contact { lb, theta, upsilon, chart }
        }
        Kind::Cosymplectic => {
            let s: CosymplecticSpec = objects(table)?;
            let lb = need_bundle(chart)?;
            let big_omega = form(lb.base(), 2, &s.big_omega, "objects.Omega")?;
            let eta = form(lb.base(), 1, &s.eta, "objects.eta")?;
            Body::Cosymplectic { lb, big_omega, eta }
        }
        Kind::Complex => {
            let s: ComplexSpec = objects(table)?;
            let lb = need_bundle(chart)?;
            let frame = columns(lb.total(), &s.frame, "objects.frame", Some(lb.total().dim()))?;
            Body::Complex { lb, frame }
        }
        Kind::Riemannian => {
            let s: RiemannianSpec = objects(table)?;
            match (s.sphere, s.g) {
                (Some(n), None) => {
                    if chart.is_some() || !s.eta.is_empty() {
                        return Err(InputError::schema("objects.sphere", "sphere scenarios bring their own chart and have η = 0"));
                    }
                    Body::Sphere { n }
                }
                (None, Some(rows)) => {
                    let lb = need_bundle(chart)?;
                    let n = lb.base().dim();
                    let g = columns(lb.base(), &rows, "objects.g", Some(n))?;
                    if g.len() != n {
                        return Err(InputError::schema("objects.g", format!("expected {n} rows, found {}", g.len())));
                    }
                    for i in 0..n {
                        for j in i + 1..n {
                            if g[i][j] != g[j][i] {
                                return Err(InputError::schema(format!("objects.g[{i}][{j}]"), "the metric matrix is not symmetric"));
                            }
                        }
                    }
                    let eta = form(lb.base(), 1, &s.eta, "objects.eta")?;
                    Body::Riemannian { lb, g, eta }
                }
                _ => return Err(InputError::schema("objects", "give exactly one of `g` or `sphere`")),
            }
        }
        Kind::Frame => {
            let s: FrameSpec = objects(table)?;
            let lb = need_bundle(chart)?;
            let frame = columns(lb.total(), &s.frame, "objects.frame", Some(lb.total().dim()))?;
            let group = group_id(&s.group, "objects.group")?;
            Body::Frame { lb, frame, group }
        }
        Kind::Group => {
            if chart.is_some() {
                return Err(InputError::schema("chart", "group scenarios take no chart"));
            }
            let s: GroupSpec = objects(table)?;
            let group = group_id(&s.group, "objects.group")?;
            let n = group.ambient();
            let mut elements = Vec::new();
            for (k, m) in s.elements.iter().enumerate() {
                let pointer = format!("objects.elements[{k}]");
                let rows = m
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        if row.len() != n {
                            return Err(InputError::schema(format!("{pointer}[{i}]"), format!("expected {n} entries, found {}", row.len())));
                        }
                        row.iter().enumerate().map(|(j, c)| rational(&c.text(), &format!("{pointer}[{i}][{j}]"))).collect()
                    })
                    .collect::<Result<Vec<Vec<Q>>, _>>()?;
                if rows.len() != n {
                    return Err(InputError::schema(pointer, format!("expected {n} rows, found {}", rows.len())));
                }
                elements.push(QMatrix::from_rows(rows).map_err(InputError::invalid)?);
            }
            let values = s.values.iter().enumerate().map(|(i, v)| quotient_value(group, &v.text(), &format!("objects.values[{i}]"))).collect::<Result<_, _>>()?;
            Body::Group { group, elements, values, random: s.random }
        }
    })
}

fn bundle(spec: ChartSpec) -> Result<LineBundle, InputError> {
    if spec.coords.is_empty() {
        return Err(InputError::schema("chart.coords", "at least one coordinate is needed"));
    }
    if spec.coords.contains(&spec.fibre) {
        return Err(InputError::schema("chart.fibre", format!("`{}` is already a base coordinate", spec.fibre)));
    }
    let mut cons = Vec::new();
    for (i, c) in spec.constraints.iter().enumerate() {
        cons.push(constraint(c, &spec.coords, &format!("chart.constraints[{i}]"))?);
    }
    let syms = spec.coords.iter().map(|c| Symbol::real(c)).collect();
    let base = Chart::with_constraints("U", syms, cons).map_err(|e| InputError::schema("chart.coords", e.to_string()))?;
    let branch = match spec.branch {
        BranchSpec::Full => Branch::Full,
        BranchSpec::Positive => Branch::Positive,
    };
    LineBundle::with_fibre(&base, branch, &spec.fibre).map_err(|e| InputError::schema("chart", e.to_string()))
}

fn constraint(text: &str, coords: &[String], pointer: &str) -> Result<Constraint, InputError> {
    for (op, build) in [("!=", Constraint::ne as fn(&str, Q) -> Constraint), (">", Constraint::gt), ("<", Constraint::lt)] {
        if let Some((lhs, rhs)) = text.split_once(op) {
            let var = lhs.trim();
            if !coords.iter().any(|c| c == var) {
                return Err(InputError::schema(pointer, format!("`{var}` is not a declared coordinate")));
            }
            return Ok(build(var, rational(rhs.trim(), pointer)?));
        }
    }
    Err(InputError::schema(pointer, "expected `var > c`, `var < c` or `var != c`"))
}

fn expr(chart: &Chart, text: &str, pointer: &str) -> Result<Expr, InputError> {
    chart.parse(text).map_err(|source| InputError::Dsl { pointer: pointer.to_string(), text: text.to_string(), source })
}

fn rational(text: &str, pointer: &str) -> Result<Q, InputError> {
    let e = parse(text, &[]).map_err(|source| InputError::Dsl { pointer: pointer.to_string(), text: text.to_string(), source })?;
    e.as_const().cloned().ok_or_else(|| InputError::schema(pointer, format!("`{text}` is not a rational constant")))
}

/// Keys `dx`, `dx^dy`, … with expression values.
fn form(chart: &Arc<Chart>, degree: usize, spec: &FormSpec, pointer: &str) -> Result<KForm, InputError> {
    let mut terms = Vec::new();
    for (key, value) in spec {
        let p = format!("{pointer}.{key}");
        let idx = key
            .split('^')
            .map(|d| {
                let name = d.trim().strip_prefix('d').ok_or_else(|| InputError::schema(&p, format!("`{d}` is not a differential dx")))?;
                chart.index_of(name).ok_or_else(|| InputError::schema(&p, format!("`{name}` is not a coordinate of {chart}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if idx.len() != degree {
            return Err(InputError::schema(&p, format!("expected a {degree}-form component")));
        }
        terms.push((idx, expr(chart, &value.text(), &p)?));
    }
    KForm::from_terms(chart, degree, terms).map_err(|e| InputError::schema(pointer, e.to_string()))
}

fn columns(chart: &Chart, cols: &Columns, pointer: &str, len: Option<usize>) -> Result<Vec<Vec<Expr>>, InputError> {
    cols.iter()
        .enumerate()
        .map(|(i, col)| {
            if let Some(n) = len {
                if col.len() != n {
                    return Err(InputError::schema(format!("{pointer}[{i}]"), format!("expected {n} entries, found {}", col.len())));
                }
            }
            col.iter().enumerate().map(|(j, c)| expr(chart, &c.text(), &format!("{pointer}[{i}][{j}]"))).collect()
        })
        .collect()
}

/// `Sp(k)`, `GLC(k)`, `O(m)` or `GL(m)`.
pub fn group_id(text: &str, pointer: &str) -> Result<GroupId, InputError> {
    let bad = || InputError::schema(pointer, format!("unknown group `{text}`; expected Sp(k), GLC(k), O(m) or GL(m)"));
    let (name, rest) = text.trim().split_once('(').ok_or_else(bad)?;
    let size: usize = rest.strip_suffix(')').ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    if size == 0 {
        return Err(bad());
    }
    Ok(match name.trim() {
        "Sp" => GroupId::Sp(size),
        "GLC" => GroupId::Glc(size),
        "O" => GroupId::O(size),
        "GL" => GroupId::Gl(size),
        _ => return Err(bad()),
    })
}

fn quotient_value(group: GroupId, text: &str, pointer: &str) -> Result<QuotientValue, InputError> {
    Ok(match group {
        GroupId::Sp(_) | GroupId::O(_) => QuotientValue::Scalar(rational(text, pointer)?),
        GroupId::Glc(_) => match text.trim() {
            "0" => QuotientValue::Parity(false),
            "1" => QuotientValue::Parity(true),
            _ => return Err(InputError::schema(pointer, "GLC quotient values are 0 or 1")),
        },
        GroupId::Gl(_) => match text.trim() {
            "trivial" => QuotientValue::Trivial,
            _ => return Err(InputError::schema(pointer, "the GL quotient has the single value `trivial`")),
        },
    })
}
