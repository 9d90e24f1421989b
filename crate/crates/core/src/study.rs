//! Convergence studies: a list of methods marched at several step counts
//! against one reference solution, with fitted orders, timings and
//! CSV/JSON output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrators::{method_label, Formulation, Method};
use crate::operators::{max_norm, State};
use crate::problems::{
    discretize, preset, reference_solution, terminal_error, Discretized, ProblemError, ProblemName,
    ProblemOverrides, ReferenceMethod, ReferenceSolution, DEFAULT_REFERENCE_TOL,
};
use crate::quadrule::{node_set, NodeFamily, NodeSet, QuadError};

pub const CSV_HEADER: &str = "method,formulation,nodes,N,error,seconds";

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid study: {0}")]
    Config(String),
    #[error("cannot fit an order: {0}")]
    Fit(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Collocation points either by family or listed explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeSpec {
    Family { family: NodeFamily, nu: usize },
    Points { points: Vec<f64> },
}

impl NodeSpec {
    pub fn build(&self) -> Result<NodeSet, QuadError> {
        match self {
            NodeSpec::Family { family, nu } => node_set(*family, *nu),
            NodeSpec::Points { points } => NodeSet::custom(points.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum MethodSpec {
    Eqrf1 {
        c1: f64,
    },
    Eqrf {
        nodes: NodeSpec,
        #[serde(default)]
        formulation: Formulation,
    },
    Ceqr2 {
        nodes: NodeSpec,
    },
}

impl MethodSpec {
    pub fn build(&self) -> Result<Method, StudyError> {
        let method = match self {
            MethodSpec::Eqrf1 { c1 } => {
                if !(0.0..=1.0).contains(c1) {
                    return Err(StudyError::Config(format!("c1 = {c1} outside [0, 1]")));
                }
                Method::Eqrf1 { c1: *c1 }
            }
            MethodSpec::Eqrf { nodes, formulation } => {
                if let Formulation::Integral { n_quad, .. } = formulation {
                    if *n_quad == 0 {
                        return Err(StudyError::Config("n_quad must be positive".into()));
                    }
                }
                Method::Eqrf {
                    nodes: nodes.build()?,
                    formulation: *formulation,
                }
            }
            MethodSpec::Ceqr2 { nodes } => {
                let nodes = nodes.build()?;
                if nodes.nu() != 2 {
                    return Err(StudyError::Config(format!(
                        "CEQR2 needs two nodes, got {}",
                        nodes.nu()
                    )));
                }
                Method::Ceqr2 { nodes }
            }
        };
        Ok(method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub spec: MethodSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderExpectation {
    pub method: String,
    pub order: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpotExpectation {
    pub method: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub error: f64,
    pub rel_tol: f64,
}

/// Every row of `method` has error at most `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundExpectation {
    pub method: String,
    pub error: f64,
}

/// `method` is strictly faster than `than` at every shared N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FasterExpectation {
    pub method: String,
    pub than: String,
}

/// Terminal states of `a` and `b` agree to `tol` relative in max norm at every N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgreeExpectation {
    pub a: String,
    pub b: String,
    pub tol: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orders: Vec<OrderExpectation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spots: Vec<SpotExpectation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub max_error: Vec<BoundExpectation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faster: Vec<FasterExpectation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agree: Vec<AgreeExpectation>,
}

impl Expectations {
    fn is_empty(&self) -> bool {
        self == &Expectations::default()
    }
}

/// How the study's reference terminal state is obtained.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// Closed form or per-mode quadrature, checked against `reference_tol`.
    #[default]
    Exact,
    /// A single march with many steps; no error estimate.
    March {
        method: MethodSpec,
        #[serde(rename = "N")]
        steps: usize,
    },
}

impl ReferenceSpec {
    fn is_exact(&self) -> bool {
        self == &ReferenceSpec::Exact
    }
}

fn default_repetitions() -> usize {
    1
}

fn default_reference_tol() -> f64 {
    DEFAULT_REFERENCE_TOL
}

/// One convergence study, the unit stored in a study file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub name: String,
    pub problem: ProblemName,
    #[serde(default)]
    pub overrides: ProblemOverrides,
    pub methods: Vec<MethodEntry>,
    #[serde(rename = "N")]
    pub steps: Vec<usize>,
    /// Timed marches per cell; the median is reported.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
    #[serde(default, skip_serializing_if = "ReferenceSpec::is_exact")]
    pub reference: ReferenceSpec,
    /// File stem for the CSV and JSON outputs; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Expectations::is_empty")]
    pub expect: Expectations,
}

impl StudySpec {
    /// Labels and built methods, in spec order.
    pub fn methods(&self) -> Result<Vec<(String, Method)>, StudyError> {
        self.methods
            .iter()
            .map(|e| {
                let m = e.spec.build()?;
                Ok((e.label.clone().unwrap_or_else(|| method_label(&m)), m))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |msg: String| Err(StudyError::Config(format!("{}: {msg}", self.name)));
        if self.name.is_empty() {
            return Err(StudyError::Config("study name is empty".into()));
        }
        if self.steps.is_empty() {
            return bad("N list is empty".into());
        }
        if self.steps[0] == 0 || self.steps.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "N list {:?} must be positive and strictly increasing",
                self.steps
            ));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.reference_tol.is_nan() || self.reference_tol <= 0.0 {
            return bad(format!(
                "reference tolerance {} must be positive",
                self.reference_tol
            ));
        }
        let methods = self.methods()?;
        if methods.is_empty() {
            return bad("no methods".into());
        }
        let mut labels: Vec<&str> = methods.iter().map(|(l, _)| l.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("duplicate method label '{}'", w[0]));
        }
        let known = |l: &str| labels.binary_search(&l).is_ok();
        let e = &self.expect;
        let referenced = e
            .orders
            .iter()
            .map(|x| &x.method)
            .chain(e.spots.iter().map(|x| &x.method))
            .chain(e.max_error.iter().map(|x| &x.method))
            .chain(e.faster.iter().flat_map(|x| [&x.method, &x.than]))
            .chain(e.agree.iter().flat_map(|x| [&x.a, &x.b]));
        for l in referenced {
            if !known(l) {
                return bad(format!("expectation names unknown method '{l}'"));
            }
        }
        if let ReferenceSpec::March { method, steps } = &self.reference {
            method.build()?;
            if *steps == 0 {
                return bad("reference march needs at least one step".into());
            }
        }
        if let Some(s) = e.spots.iter().find(|s| !self.steps.contains(&s.n)) {
            return bad(format!("spot value at N = {} not in the N list", s.n));
        }
        preset(self.problem).with_overrides(&self.overrides)?;
        Ok(())
    }
}

/// Parses a study file holding one study or an array of studies.
pub fn parse_studies(text: &str) -> Result<Vec<StudySpec>, StudyError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let specs: Vec<StudySpec> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub method: String,
    pub formulation: String,
    pub nodes: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub error: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodFit {
    pub method: String,
    /// Observed order `p` in `error ∝ N^{-p}`; absent below three points.
    pub order: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub a: String,
    pub b: String,
    pub max_rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub method: ReferenceMethod,
    pub est_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub study: String,
    pub reference: Option<ReferenceInfo>,
    pub rows: Vec<Row>,
    pub fits: Vec<MethodFit>,
    pub agreements: Vec<Agreement>,
}

/// Least-squares slope of `ln error` against `ln N`, returned as the
/// positive order together with the RMS deviation of the fit.
pub fn fit_order(points: &[(usize, f64)]) -> Result<(f64, f64), StudyError> {
    if points.len() < 3 {
        return Err(StudyError::Fit(format!(
            "{} points, need at least 3",
            points.len()
        )));
    }
    if let Some(&(n, e)) = points
        .iter()
        .find(|(n, e)| *n == 0 || !(*e > 0.0 && e.is_finite()))
    {
        return Err(StudyError::Fit(format!(
            "invalid point N = {n}, error = {e}"
        )));
    }
    let x: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(StudyError::Fit("all N are equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let ss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    Ok((-slope + 0.0, (ss / m).sqrt()))
}

fn fits_from_rows(rows: &[Row]) -> Vec<MethodFit> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for r in rows {
        if !groups.contains_key(r.method.as_str()) {
            order.push(&r.method);
        }
        groups.entry(&r.method).or_default().push((r.n, r.error));
    }
    order
        .into_iter()
        .map(|m| {
            let fit = fit_order(&groups[m]).ok();
            MethodFit {
                method: m.to_string(),
                order: fit.map(|f| f.0),
                residual: fit.map(|f| f.1),
            }
        })
        .collect()
}

impl ConvergenceReport {
    /// A report whose fits are recomputed from `rows`.
    pub fn from_rows(study: &str, rows: Vec<Row>) -> Self {
        Self {
            study: study.to_string(),
            reference: None,
            fits: fits_from_rows(&rows),
            rows,
            agreements: Vec::new(),
        }
    }

    pub fn rows_for<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.method == method)
    }

    pub fn error_at(&self, method: &str, n: usize) -> Option<f64> {
        self.rows_for(method).find(|r| r.n == n).map(|r| r.error)
    }

    pub fn fit(&self, method: &str) -> Option<&MethodFit> {
        self.fits.iter().find(|f| f.method == method)
    }

    pub fn to_csv(&self) -> Result<String, StudyError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| StudyError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(study: &str, text: &str) -> Result<Self, StudyError> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != CSV_HEADER {
            return Err(StudyError::Config(format!(
                "unexpected CSV header '{}'",
                header.join(",")
            )));
        }
        let rows = rd.deserialize().collect::<Result<Vec<Row>, _>>()?;
        Ok(Self::from_rows(study, rows))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Methods the check is about.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<String>,
}

/// A study whose problem is discretized and whose reference is computed.
pub struct Prepared {
    pub discretized: Discretized,
    pub reference: ReferenceSolution,
}

pub fn prepare(spec: &StudySpec) -> Result<Prepared, StudyError> {
    spec.validate()?;
    let problem = preset(spec.problem).with_overrides(&spec.overrides)?;
    let discretized = discretize(&problem)?;
    let reference = match &spec.reference {
        ReferenceSpec::Exact => reference_solution(&discretized, spec.reference_tol)?,
        ReferenceSpec::March { method, steps } => ReferenceSolution {
            state: discretized.march(*steps, &method.build()?)?,
            method: ReferenceMethod::FineMarch,
            est_error: f64::NAN,
        },
    };
    Ok(Prepared {
        discretized,
        reference,
    })
}

pub fn run_study(spec: &StudySpec) -> Result<ConvergenceReport, StudyError> {
    run_prepared(spec, &prepare(spec)?)
}

fn columns(m: &Method) -> (String, String) {
    match m {
        Method::Eqrf1 { c1 } => ("-".into(), format!("c({c1})")),
        Method::Eqrf { nodes, formulation } => (formulation.short_label().into(), nodes.label()),
        Method::Ceqr2 { nodes } => ("-".into(), nodes.label()),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Marches every (method, N) cell against an already prepared reference.
/// Only the march is timed; operator construction and the reference are not.
pub fn run_prepared(spec: &StudySpec, prep: &Prepared) -> Result<ConvergenceReport, StudyError> {
    spec.validate()?;
    let d = &prep.discretized;
    let keep: Vec<&str> = spec
        .expect
        .agree
        .iter()
        .flat_map(|a| [a.a.as_str(), a.b.as_str()])
        .collect();
    let mut states: BTreeMap<(String, usize), State> = BTreeMap::new();
    let mut rows = Vec::new();
    for (label, method) in spec.methods()? {
        let (formulation, nodes) = columns(&method);
        for &n in &spec.steps {
            let mut times = Vec::with_capacity(spec.repetitions);
            let mut y = None;
            for _ in 0..spec.repetitions {
                let start = Instant::now();
                let out = d.march(n, &method)?;
                times.push(start.elapsed().as_secs_f64());
                y = Some(out);
            }
            let y = y.expect("at least one repetition");
            rows.push(Row {
                method: label.clone(),
                formulation: formulation.clone(),
                nodes: nodes.clone(),
                n,
                error: terminal_error(&y, &prep.reference)?,
                seconds: median(times),
            });
            if keep.contains(&label.as_str()) {
                states.insert((label.clone(), n), y);
            }
        }
    }
    let agreements = spec
        .expect
        .agree
        .iter()
        .map(|ag| {
            let worst = spec
                .steps
                .iter()
                .map(|&n| {
                    let ya = &states[&(ag.a.clone(), n)].values;
                    let yb = &states[&(ag.b.clone(), n)].values;
                    let diff: Vec<_> = ya.iter().zip(yb).map(|(p, q)| p - q).collect();
                    max_norm(&diff) / max_norm(yb).max(f64::MIN_POSITIVE)
                })
                .fold(0.0, f64::max);
            Agreement {
                a: ag.a.clone(),
                b: ag.b.clone(),
                max_rel_diff: worst,
            }
        })
        .collect();
    let mut report = ConvergenceReport::from_rows(&spec.name, rows);
    report.reference = Some(ReferenceInfo {
        method: prep.reference.method,
        est_error: prep.reference.est_error,
    });
    report.agreements = agreements;
    Ok(report)
}

/// Checks the report against the study's `expect` block.
pub fn evaluate(spec: &StudySpec, report: &ConvergenceReport) -> Vec<Check> {
    let e = &spec.expect;
    let s = &spec.name;
    let mut out = Vec::new();
    for o in &e.orders {
        let fit = report.fit(&o.method);
        let (pass, detail) = match fit.and_then(|f| f.order.zip(f.residual)) {
            Some((p, res)) => (
                (p - o.order).abs() <= o.tol,
                format!(
                    "order {p:.3} (expected {} ± {}, residual {res:.3})",
                    o.order, o.tol
                ),
            ),
            None => (false, "no fitted order".into()),
        };
        out.push(Check {
            name: format!("{s}: order of {}", o.method),
            pass,
            detail,
            methods: vec![o.method.clone()],
        });
    }
    for sp in &e.spots {
        let (pass, detail) = match report.error_at(&sp.method, sp.n) {
            Some(err) => {
                let rel = err / sp.error - 1.0;
                (
                    rel.abs() <= sp.rel_tol,
                    format!(
                        "error {err:.6e} vs {:.6e} ({:+.2}%, allowed ±{}%)",
                        sp.error,
                        100.0 * rel,
                        100.0 * sp.rel_tol
                    ),
                )
            }
            None => (false, "missing row".into()),
        };
        out.push(Check {
            name: format!("{s}: error of {} at N={}", sp.method, sp.n),
            pass,
            detail,
            methods: vec![sp.method.clone()],
        });
    }
    for b in &e.max_error {
        let worst = report
            .rows_for(&b.method)
            .map(|r| r.error)
            .fold(0.0, f64::max);
        out.push(Check {
            name: format!("{s}: {} error bound", b.method),
            pass: worst <= b.error,
            detail: format!("max error {worst:.3e} (bound {:.0e})", b.error),
            methods: vec![b.method.clone()],
        });
    }
    for f in &e.faster {
        let mut pass = true;
        let mut parts = Vec::new();
        for r in report.rows_for(&f.method) {
            if let Some(o) = report.rows_for(&f.than).find(|o| o.n == r.n) {
                pass &= r.seconds < o.seconds;
                parts.push(format!(
                    "N={}: {:.2e}s vs {:.2e}s",
                    r.n, r.seconds, o.seconds
                ));
            }
        }
        if parts.is_empty() {
            pass = false;
        }
        out.push(Check {
            name: format!("{s}: {} faster than {}", f.method, f.than),
            pass,
            detail: parts.join(", "),
            methods: vec![f.method.clone(), f.than.clone()],
        });
    }
    for ag in &e.agree {
        let found = report
            .agreements
            .iter()
            .find(|x| x.a == ag.a && x.b == ag.b);
        let (pass, detail) = match found {
            Some(x) => (
                x.max_rel_diff <= ag.tol,
                format!(
                    "max relative difference {:.3e} (bound {:.0e})",
                    x.max_rel_diff, ag.tol
                ),
            ),
            None => (false, "not computed".into()),
        };
        out.push(Check {
            name: format!("{s}: {} agrees with {}", ag.a, ag.b),
            pass,
            detail,
            methods: vec![ag.a.clone(), ag.b.clone()],
        });
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MethodSummary {
    order: Option<f64>,
    residual: Option<f64>,
    /// Whether every check about this method passed; absent without checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pass: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Summary {
    study: String,
    reference: Option<ReferenceInfo>,
    methods: BTreeMap<String, MethodSummary>,
    agreements: Vec<Agreement>,
    checks: Vec<Check>,
}

pub fn summary_json(report: &ConvergenceReport, checks: &[Check]) -> Result<String, StudyError> {
    let methods = report
        .fits
        .iter()
        .map(|f| {
            let mine: Vec<bool> = checks
                .iter()
                .filter(|c| c.methods.contains(&f.method))
                .map(|c| c.pass)
                .collect();
            let pass = (!mine.is_empty()).then(|| mine.iter().all(|&p| p));
            (
                f.method.clone(),
                MethodSummary {
                    order: f.order,
                    residual: f.residual,
                    pass,
                },
            )
        })
        .collect();
    let summary = Summary {
        study: report.study.clone(),
        reference: report.reference.clone(),
        methods,
        agreements: report.agreements.clone(),
        checks: checks.to_vec(),
    };
    Ok(serde_json::to_string_pretty(&summary)?)
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
pub fn write_outputs(
    dir: &Path,
    spec: &StudySpec,
    report: &ConvergenceReport,
    checks: &[Check],
) -> Result<(PathBuf, PathBuf), StudyError> {
    std::fs::create_dir_all(dir)?;
    let stem = spec.output.as_deref().unwrap_or(&spec.name);
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&csv_path, report.to_csv()?)?;
    std::fs::write(&json_path, summary_json(report, checks)?)?;
    Ok((csv_path, json_path))
}
