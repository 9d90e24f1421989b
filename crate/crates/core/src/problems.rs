//! Benchmark problems, their semidiscretizations, and reference solutions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrators::{
    kernel_weight_with, march, Formulation, FractionalSource, IntegratorError, Method, TimeGrid,
};
use crate::operators::{max_norm, DiagonalizableOperator, OperatorError, OperatorKind, State};
use crate::quadrule::{gauss_legendre, node_set, NodeFamily, QuadError, QuadRule};
use crate::specialfun::{FracPhi, PhiOrder, SpecialFunError};

/// Oscillation budget `|Im λ| T` above which a mode's reference is summed
/// from the exponential series of the source instead of by quadrature.
pub const OSCILLATION_LIMIT: f64 = 400.0;
pub const DEFAULT_REFERENCE_TOL: f64 = 1e-12;
pub const DEFAULT_FINE_STEPS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("reference estimate {achieved:e} exceeds tolerance {tol:e}")]
    ReferenceTolerance { achieved: f64, tol: f64 },
    #[error("states have lengths {0} and {1}")]
    Dimension(usize, usize),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Special(#[from] SpecialFunError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemName {
    ScalarIntro,
    Perbc,
    Per,
    Perrad,
    Heat,
}

impl ProblemName {
    pub const ALL: [ProblemName; 5] = [
        ProblemName::ScalarIntro,
        ProblemName::Perbc,
        ProblemName::Per,
        ProblemName::Perrad,
        ProblemName::Heat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemName::ScalarIntro => "scalar_intro",
            ProblemName::Perbc => "perbc",
            ProblemName::Per => "per",
            ProblemName::Perrad => "perrad",
            ProblemName::Heat => "heat",
        }
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemName {
    type Err = ProblemError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProblemName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ProblemError::UnknownProblem(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    /// `(1 + x^2) / 10`
    HeatQuadratic,
    Constant(f64),
}

impl Coefficient {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Coefficient::HeatQuadratic => (1.0 + x * x) / 10.0,
            Coefficient::Constant(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OperatorSpec {
    /// `y' = λ y`.
    Scalar { lambda: Complex64 },
    /// `ζ ∂_xx`, periodic, Fourier pseudospectral.
    Periodic { n_modes: usize, zeta: Complex64 },
    /// `a(x) ∂_xx`, homogeneous Dirichlet, second-order differences.
    Dirichlet {
        n_inner: usize,
        coefficient: Coefficient,
    },
}

/// The scalar time factor `f(t) = h(t^r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeProfile {
    /// `f(t) = t^r`, i.e. `h(x) = x`.
    Power,
    /// `f(t) = e^{t^r}`, i.e. `h(x) = e^x`.
    ExpPower,
}

impl TimeProfile {
    pub fn h(self, x: f64) -> f64 {
        match self {
            TimeProfile::Power => x,
            TimeProfile::ExpPower => x.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialProfile {
    One,
    /// `1 / (2 + cos 2πx)`
    InvTwoPlusCos,
    /// `x` (not periodic)
    Identity,
    /// `sin 2πx`
    Sin2Pi,
    /// `x (1 - x)`
    Parabola,
    /// `4 x (1 - x)`
    ScaledParabola,
}

impl SpatialProfile {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            SpatialProfile::One => 1.0,
            SpatialProfile::InvTwoPlusCos => 1.0 / (2.0 + (2.0 * PI * x).cos()),
            SpatialProfile::Identity => x,
            SpatialProfile::Sin2Pi => (2.0 * PI * x).sin(),
            SpatialProfile::Parabola => x * (1.0 - x),
            SpatialProfile::ScaledParabola => 4.0 * x * (1.0 - x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub r: f64,
    pub time: TimeProfile,
    pub profile: SpatialProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkProblem {
    pub name: ProblemName,
    pub operator: OperatorSpec,
    pub source: SourceSpec,
    pub initial: SpatialProfile,
    pub t_final: f64,
}

/// Named preset with its default parameters (`r = 3/4`; perbc with `ζ = i`
/// and `v = 1/(2 + cos 2πx)`).
pub fn preset(name: ProblemName) -> BenchmarkProblem {
    let i = Complex64::new(0.0, 1.0);
    let periodic = |zeta| OperatorSpec::Periodic { n_modes: 500, zeta };
    let src = |time, profile| SourceSpec {
        r: 0.75,
        time,
        profile,
    };
    match name {
        ProblemName::ScalarIntro => BenchmarkProblem {
            name,
            operator: OperatorSpec::Scalar {
                lambda: Complex64::new(-1.0, 0.0),
            },
            source: src(TimeProfile::Power, SpatialProfile::One),
            initial: SpatialProfile::One,
            t_final: 0.1,
        },
        ProblemName::Perbc => BenchmarkProblem {
            name,
            operator: periodic(i),
            source: src(TimeProfile::Power, SpatialProfile::InvTwoPlusCos),
            initial: SpatialProfile::Sin2Pi,
            t_final: 3.0,
        },
        ProblemName::Per => BenchmarkProblem {
            name,
            operator: periodic(i),
            source: src(TimeProfile::Power, SpatialProfile::InvTwoPlusCos),
            initial: SpatialProfile::Sin2Pi,
            t_final: 1.0,
        },
        ProblemName::Perrad => BenchmarkProblem {
            name,
            operator: periodic(i),
            source: src(TimeProfile::ExpPower, SpatialProfile::InvTwoPlusCos),
            initial: SpatialProfile::Sin2Pi,
            t_final: 2.0,
        },
        ProblemName::Heat => BenchmarkProblem {
            name,
            operator: OperatorSpec::Dirichlet {
                n_inner: 1000,
                coefficient: Coefficient::HeatQuadratic,
            },
            source: src(TimeProfile::ExpPower, SpatialProfile::Parabola),
            initial: SpatialProfile::ScaledParabola,
            t_final: 2.0,
        },
    }
}

/// Field overrides applied to a preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// Number of Fourier modes or inner grid points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<SpatialProfile>,
}

impl BenchmarkProblem {
    pub fn with_overrides(mut self, o: &ProblemOverrides) -> Result<Self, ProblemError> {
        if let Some(r) = o.r {
            self.source.r = r;
        }
        if let Some(t) = o.t_final {
            self.t_final = t;
        }
        if let Some(p) = o.profile {
            self.source.profile = p;
        }
        match &mut self.operator {
            OperatorSpec::Scalar { .. } => {
                if o.size.is_some() || o.zeta.is_some() {
                    return Err(ProblemError::Parameter(
                        "scalar problem has no size or zeta".into(),
                    ));
                }
            }
            OperatorSpec::Periodic { n_modes, zeta } => {
                if let Some(n) = o.size {
                    *n_modes = n;
                }
                if let Some(z) = o.zeta {
                    *zeta = z;
                }
            }
            OperatorSpec::Dirichlet { n_inner, .. } => {
                if let Some(n) = o.size {
                    *n_inner = n;
                }
                if o.zeta.is_some() {
                    return Err(ProblemError::Parameter(
                        "Dirichlet problem has no zeta".into(),
                    ));
                }
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let r = self.source.r;
        if !(r > 0.0 && r < 1.0) {
            return Err(ProblemError::Parameter(format!(
                "r must lie in (0, 1), got {r}"
            )));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(ProblemError::Parameter(format!(
                "final time must be positive, got {}",
                self.t_final
            )));
        }
        Ok(())
    }
}

/// A problem turned into an operator, a source and an initial state.
#[derive(Debug, Clone)]
pub struct Discretized {
    pub problem: BenchmarkProblem,
    pub operator: DiagonalizableOperator,
    pub source: FractionalSource,
    pub initial: State,
}

impl Discretized {
    pub fn t_final(&self) -> f64 {
        self.problem.t_final
    }

    pub fn grid(&self, steps: usize) -> Result<TimeGrid, ProblemError> {
        Ok(TimeGrid::new(self.t_final(), steps)?)
    }

    pub fn march(&self, steps: usize, method: &Method) -> Result<State, ProblemError> {
        Ok(march(
            &self.initial,
            &self.operator,
            &self.source,
            &self.grid(steps)?,
            method,
        )?)
    }
}

pub fn discretize(problem: &BenchmarkProblem) -> Result<Discretized, ProblemError> {
    problem.validate()?;
    let operator = match problem.operator {
        OperatorSpec::Scalar { lambda } => DiagonalizableOperator::diagonal(vec![lambda])?,
        OperatorSpec::Periodic { n_modes, zeta } => {
            DiagonalizableOperator::periodic_spectral_second_derivative(n_modes, zeta)?
        }
        OperatorSpec::Dirichlet {
            n_inner,
            coefficient,
        } => DiagonalizableOperator::dirichlet_fd_variable_coefficient(n_inner, |x| {
            coefficient.eval(x)
        })?,
    };
    let grid = match operator.kind() {
        OperatorKind::Diagonal => vec![0.0; operator.dim()],
        _ => operator.grid(),
    };
    let sample = |p: SpatialProfile| -> Vec<Complex64> {
        grid.iter()
            .map(|&x| Complex64::new(p.eval(x), 0.0))
            .collect()
    };
    let time = problem.source.time;
    let source = FractionalSource::new(
        problem.source.r,
        move |x| Complex64::new(time.h(x), 0.0),
        sample(problem.source.profile),
    )?;
    let initial = State::new(sample(problem.initial), 0.0)?;
    Ok(Discretized {
        problem: problem.clone(),
        operator,
        source,
        initial,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMethod {
    ClosedForm,
    PerModeQuadrature,
    FineMarch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub state: State,
    pub method: ReferenceMethod,
    /// Estimated max-norm error (absolute).
    pub est_error: f64,
}

/// Reference terminal state through the variation-of-constants formula per
/// mode: closed form for `f(t) = t^r`, adaptive quadrature (or, for very
/// oscillatory modes, the exponential series of the source) for
/// `f(t) = e^{t^r}`.
pub fn reference_solution(d: &Discretized, tol: f64) -> Result<ReferenceSolution, ProblemError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(ProblemError::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let op = &d.operator;
    let t = d.t_final();
    let r = d.source.r();
    let y0 = op.to_modal(&d.initial.values)?;
    let v = op.to_modal(d.source.profile())?;
    let eig = op.eigenvalues();
    let mut out = Vec::with_capacity(eig.len());
    let mut err_bound = 0.0;
    let method = match d.problem.source.time {
        TimeProfile::Power => {
            let phi = FracPhi::new(PhiOrder::new(1.0 + r)?)?;
            for ((&l, &a), &b) in eig.iter().zip(&y0).zip(&v) {
                let w = kernel_weight_with(&phi, 0.0, t, l)?;
                out.push((t * l).exp() * a + w * b);
                err_bound += 4.0 * f64::EPSILON * (1.0 + (t * l).norm()) * (w * b).norm();
            }
            ReferenceMethod::ClosedForm
        }
        TimeProfile::ExpPower => {
            let mut integrator = ExpSourceIntegral::new(t, r, tol)?;
            for ((&l, &a), &b) in eig.iter().zip(&y0).zip(&v) {
                let (w, e) = integrator.mode(l)?;
                out.push((t * l).exp() * a + w * b);
                err_bound += e * b.norm();
            }
            ReferenceMethod::PerModeQuadrature
        }
    };
    let values = op.from_modal(&out)?;
    let est_error = err_bound * op.modal_bound();
    let scale = max_norm(&values).max(f64::MIN_POSITIVE);
    if est_error > tol * scale {
        return Err(ProblemError::ReferenceTolerance {
            achieved: est_error / scale,
            tol,
        });
    }
    Ok(ReferenceSolution {
        state: State::new(values, t)?,
        method,
        est_error,
    })
}

/// Reference by a fine EQRF3 Gauss–Lobatto march.
pub fn fine_march_reference(
    d: &Discretized,
    steps: usize,
) -> Result<ReferenceSolution, ProblemError> {
    let method = Method::Eqrf {
        nodes: node_set(NodeFamily::GaussLobatto, 3)?,
        formulation: Formulation::FractionalPhi,
    };
    let state = d.march(steps, &method)?;
    Ok(ReferenceSolution {
        state,
        method: ReferenceMethod::FineMarch,
        est_error: f64::NAN,
    })
}

pub fn terminal_error(y: &State, reference: &ReferenceSolution) -> Result<f64, ProblemError> {
    if y.dim() != reference.state.dim() {
        return Err(ProblemError::Dimension(y.dim(), reference.state.dim()));
    }
    Ok(y.values
        .iter()
        .zip(&reference.state.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// `int_0^T e^{λ(T-s)} e^{s^r} ds` for a sequence of eigenvalues.
pub struct ExpSourceIntegral {
    t_final: f64,
    r: f64,
    tol: f64,
    low: QuadRule,
    high: QuadRule,
    /// φ evaluators of orders `1 + j r`, grown on demand.
    series: Vec<FracPhi>,
}

impl ExpSourceIntegral {
    pub fn new(t_final: f64, r: f64, tol: f64) -> Result<Self, ProblemError> {
        Ok(Self {
            t_final,
            r,
            tol,
            low: gauss_legendre(20)?,
            high: gauss_legendre(40)?,
            series: Vec::new(),
        })
    }

    /// Value and absolute error estimate for eigenvalue `lam`.
    pub fn mode(&mut self, lam: Complex64) -> Result<(Complex64, f64), ProblemError> {
        if lam.im.abs() * self.t_final > OSCILLATION_LIMIT {
            self.by_series(lam)
        } else {
            Ok(self.by_quadrature(lam))
        }
    }

    /// `sum_j Γ(1+jr) T^{1+jr} φ_{1+jr}(λT) / j!`.
    pub fn by_series(&mut self, lam: Complex64) -> Result<(Complex64, f64), ProblemError> {
        let t = self.t_final;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut size = 0.0;
        let mut inv_fact = 1.0;
        for j in 0..200usize {
            if j == self.series.len() {
                self.series
                    .push(FracPhi::new(PhiOrder::new(1.0 + j as f64 * self.r)?)?);
            }
            let term = kernel_weight_with(&self.series[j], 0.0, t, lam)? * inv_fact;
            sum += term;
            size += term.norm();
            inv_fact /= (j + 1) as f64;
            if j > 2 && term.norm() <= 0.25 * f64::EPSILON * sum.norm() {
                break;
            }
        }
        Ok((
            sum,
            8.0 * f64::EPSILON * (1.0 + (lam * t).norm().sqrt()) * size,
        ))
    }

    fn breakpoints(&self, lam: Complex64) -> Vec<f64> {
        let t = self.t_final;
        let mut pts = vec![0.0, t];
        // grading toward 0, where s^r is not smooth
        let mut s = 0.5 * t;
        for _ in 0..60 {
            pts.push(s);
            s *= 0.5;
        }
        // boundary layer of width 1/|Re λ| at s = T
        let decay = -lam.re;
        if decay * t > 1.0 {
            let mut d = 1.0 / decay;
            while d < 0.5 * t {
                pts.push(t - d);
                d *= 2.0;
            }
        }
        // panels no wider than half an oscillation period
        let freq = lam.im.abs();
        if freq * t > 1.0 {
            let m = (freq * t / PI).ceil() as usize;
            pts.extend((1..m).map(|i| t * i as f64 / m as f64));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * t);
        pts
    }

    pub fn by_quadrature(&self, lam: Complex64) -> (Complex64, f64) {
        let (t, r) = (self.t_final, self.r);
        let f = |s: f64| ((t - s) * lam).exp() * (s.powf(r)).exp();
        let panel = |rule: &QuadRule, a: f64, b: f64| -> (Complex64, f64) {
            let h = b - a;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut size = 0.0;
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                let v = w * f(a + h * x);
                acc += v;
                size += v.norm();
            }
            (acc * h, size * h)
        };
        let pts = self.breakpoints(lam);
        let l1: f64 = pts
            .windows(2)
            .map(|p| panel(&self.high, p[0], p[1]).1)
            .sum();
        let mut total = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        let mut stack: Vec<(f64, f64, u32)> =
            pts.windows(2).rev().map(|p| (p[0], p[1], 0)).collect();
        while let Some((a, b, depth)) = stack.pop() {
            let (fine, size) = panel(&self.high, a, b);
            let (coarse, _) = panel(&self.low, a, b);
            let diff = (fine - coarse).norm();
            let target = (self.tol * 1e-2 * l1 * (b - a) / t).max(64.0 * f64::EPSILON * size);
            if diff <= target || depth >= 30 {
                total += fine;
                err += diff.max(4.0 * f64::EPSILON * size);
            } else {
                let m = 0.5 * (a + b);
                stack.push((m, b, depth + 1));
                stack.push((a, m, depth + 1));
            }
        }
        (total, err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specialfun::phi_frac;

    #[test]
    fn preset_parameters() {
        assert_eq!(preset(ProblemName::ScalarIntro).t_final, 0.1);
        assert_eq!(preset(ProblemName::Perrad).t_final, 2.0);
        match preset(ProblemName::Heat).operator {
            OperatorSpec::Dirichlet { n_inner, .. } => assert_eq!(n_inner, 1000),
            _ => panic!("heat is a Dirichlet problem"),
        }
        assert!("nope".parse::<ProblemName>().is_err());
        assert_eq!("perbc".parse::<ProblemName>().unwrap(), ProblemName::Perbc);
    }

    #[test]
    fn preset_round_trip() {
        for name in ProblemName::ALL {
            let p = preset(name);
            let text = serde_json::to_string(&p).unwrap();
            let back: BenchmarkProblem = serde_json::from_str(&text).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn scalar_closed_form() {
        let d = discretize(&preset(ProblemName::ScalarIntro)).unwrap();
        let r = reference_solution(&d, 1e-13).unwrap();
        let order = PhiOrder::new(1.75).unwrap();
        let want = (-0.1f64).exp()
            + crate::specialfun::gamma_real(1.75).unwrap()
                * 0.1f64.powf(1.75)
                * phi_frac(order, Complex64::new(-0.1, 0.0)).unwrap().re;
        assert!((r.state.values[0].re - want).abs() < 1e-15);
        assert!((want - 0.9146391518388399).abs() < 1e-15);
    }

    #[test]
    fn series_matches_quadrature_on_moderate_modes() {
        let mut q = ExpSourceIntegral::new(2.0, 0.5, 1e-13).unwrap();
        for &lam in &[
            Complex64::new(0.0, -39.47),
            Complex64::new(0.0, -157.9),
            Complex64::new(-3.0, 0.0),
            Complex64::new(-250.0, -10.0),
        ] {
            let (a, _) = q.by_series(lam).unwrap();
            let (b, _) = q.by_quadrature(lam);
            assert!((a - b).norm() <= 1e-12 * b.norm(), "{lam}: {a} vs {b}");
        }
    }

    #[test]
    fn overrides_are_validated() {
        let p = preset(ProblemName::Per);
        let o = ProblemOverrides {
            r: Some(1.0),
            ..Default::default()
        };
        assert!(p.clone().with_overrides(&o).is_err());
        let o = ProblemOverrides {
            size: Some(32),
            r: Some(0.5),
            ..Default::default()
        };
        let q = p.with_overrides(&o).unwrap();
        assert_eq!(q.source.r, 0.5);
        assert!(preset(ProblemName::Heat)
            .with_overrides(&ProblemOverrides {
                zeta: Some(Complex64::new(1.0, 0.0)),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn terminal_error_is_max_norm() {
        let a = State::from_real(&[1.0, 2.0, 3.0], 1.0).unwrap();
        let b = ReferenceSolution {
            state: State::from_real(&[1.0, 2.5, 2.0], 1.0).unwrap(),
            method: ReferenceMethod::ClosedForm,
            est_error: 0.0,
        };
        assert_eq!(terminal_error(&a, &b).unwrap(), 1.0);
        let c = ReferenceSolution {
            state: a.clone(),
            ..b.clone()
        };
        assert_eq!(terminal_error(&a, &c).unwrap(), 0.0);
    }
}
