//! Exponential quadrature rules for `y' = A y + h(t^r) v` on a constant grid.
//!
//! All schemes march in modal coordinates of the operator: the profile `v` and
//! the initial state are transformed once, each step is a per-mode scalar
//! update, and the result is transformed back at the end.
//!
//! EQRFν interpolates the source in the variable `w = (t_n + s)^r`,
//! `h((t_n+s)^r) ≈ sum_j a_j (t_n+s)^{jr}`, and integrates
//! `int_0^τ e^{(τ-s)λ} (t_n+s)^{jr} ds` exactly, either through fractional φ
//! functions ([`kernel_weight`]) or through a fixed Gauss rule on `[0, τ]`
//! with the propagators `e^{(τ-σ_i)λ}` tabulated once per run.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::{DiagonalizableOperator, OperatorError, State};
use crate::quadrule::{gauss_legendre, jacobi_rule, NodeFamily, NodeSet, QuadError, QuadRule};
use crate::specialfun::{
    phi_classical, FracPhi, PhiOrder, SpecialFunError, ASYMPTOTIC_RADIUS, MAX_ASYMPTOTIC_TERMS,
};

pub const DEFAULT_QUADRATURE_POINTS: usize = 16;
const INTERPOLATION_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("final time must be positive and finite, got {0}")]
    FinalTime(f64),
    #[error("number of steps must be positive")]
    Steps,
    #[error("step size must be positive and finite, got {0}")]
    StepSize(f64),
    #[error("fractional exponent must lie in (0, 1), got {0}")]
    Exponent(f64),
    #[error("collocation point must lie in [0, 1], got {0}")]
    Collocation(f64),
    #[error("{method} needs {expected} nodes, got {got}")]
    NodeCount {
        method: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("interpolation residual {residual:e} exceeds tolerance")]
    Interpolation { residual: f64 },
    #[error("singular interpolation system")]
    Singular,
    #[error("non-finite state after step {step}")]
    NonFinite { step: usize },
    #[error("source profile has length {got}, operator dimension is {expected}")]
    Profile { expected: usize, got: usize },
    #[error("state time {got} does not match requested start {expected}")]
    StartTime { expected: f64, got: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Special(#[from] SpecialFunError),
}

/// Uniform grid `t_n = n τ`, `τ = T / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self, IntegratorError> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(IntegratorError::FinalTime(t_final));
        }
        if steps == 0 {
            return Err(IntegratorError::Steps);
        }
        Ok(Self { t_final, steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.t_final
        } else {
            n as f64 * self.tau()
        }
    }
}

type SourceFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// `g(t) = h(t^r) v`.
#[derive(Clone)]
pub struct FractionalSource {
    r: f64,
    h: SourceFn,
    profile: Vec<Complex64>,
}

impl fmt::Debug for FractionalSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FractionalSource")
            .field("r", &self.r)
            .field("dim", &self.profile.len())
            .finish_non_exhaustive()
    }
}

impl FractionalSource {
    pub fn new(
        r: f64,
        h: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        profile: Vec<Complex64>,
    ) -> Result<Self, IntegratorError> {
        if !(r > 0.0 && r < 1.0) {
            return Err(IntegratorError::Exponent(r));
        }
        Ok(Self {
            r,
            h: Arc::new(h),
            profile,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn profile(&self) -> &[Complex64] {
        &self.profile
    }

    /// `h(x)`.
    pub fn h(&self, x: f64) -> Complex64 {
        (self.h)(x)
    }

    /// `h(t^r)`.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        self.h(t.powf(self.r))
    }

    pub fn eval(&self, t: f64) -> Vec<Complex64> {
        let a = self.amplitude(t);
        self.profile.iter().map(|v| v * a).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Formulation {
    #[default]
    FractionalPhi,
    /// Kernel integrals by `n_quad`-point quadrature; accurate only while the
    /// rule resolves `e^{(τ-s)λ}` or the unresolved modes are damped.
    Integral {
        #[serde(default = "default_quadrature_points")]
        n_quad: usize,
        #[serde(default)]
        first_step: FirstStepRule,
    },
}

/// Rule for `int_0^τ e^{(τ-s)λ} s^{jr} ds` on the step starting at `t = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstStepRule {
    /// Gauss–Jacobi for the weight `s^{jr}`.
    #[default]
    GaussJacobi,
    /// Gauss–Legendre applied to the whole integrand, singular factor
    /// included; only first order in the node count.
    GaussLegendre,
}

fn default_quadrature_points() -> usize {
    DEFAULT_QUADRATURE_POINTS
}

impl Formulation {
    pub fn integral() -> Self {
        Formulation::Integral {
            n_quad: DEFAULT_QUADRATURE_POINTS,
            first_step: FirstStepRule::GaussJacobi,
        }
    }

    pub fn short_label(&self) -> &'static str {
        match self {
            Formulation::FractionalPhi => "F",
            Formulation::Integral { .. } => "I",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Eqrf1 {
        c1: f64,
    },
    Eqrf {
        nodes: NodeSet,
        formulation: Formulation,
    },
    Ceqr2 {
        nodes: NodeSet,
    },
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Eqrf1 { .. } => "EQRF1".into(),
            Method::Eqrf { nodes, .. } => format!("EQRF{}", nodes.nu()),
            Method::Ceqr2 { .. } => "CEQR2".into(),
        }
    }
}

/// `Γ(λ) ((t+τ)^λ φ_λ((t+τ)z) - t^λ e^{τz} φ_λ(tz)) = int_0^τ e^{(τ-s)z} (t+s)^{λ-1} ds`.
pub fn kernel_weight(
    lambda: PhiOrder,
    t_n: f64,
    tau: f64,
    z: Complex64,
) -> Result<Complex64, IntegratorError> {
    kernel_weight_with(&FracPhi::new(lambda)?, t_n, tau, z)
}

/// [`kernel_weight`] with a prepared evaluator.
pub fn kernel_weight_with(
    phi: &FracPhi,
    t_n: f64,
    tau: f64,
    z: Complex64,
) -> Result<Complex64, IntegratorError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(IntegratorError::StepSize(tau));
    }
    if !(t_n >= 0.0 && t_n.is_finite()) {
        return Err(OperatorError::Time(t_n).into());
    }
    let lam = phi.lambda();
    let gamma = phi.gamma_lambda();
    let t1 = t_n + tau;
    if t_n == 0.0 {
        return Ok(gamma * t1.powf(lam) * phi.eval(tau * z)?);
    }
    let zn = z.norm();
    if t_n * zn > ASYMPTOTIC_RADIUS && z.re < 0.5 * ASYMPTOTIC_RADIUS / t1 {
        // Both arguments are in the asymptotic regime: the z^{-λ} e^{(t+τ)z}
        // parts cancel exactly and only the algebraic tails remain.
        return Ok(-gamma * tail_difference(phi, t_n, tau, z));
    }
    if t_n * z.re > GROWTH_LIMIT {
        // The direct form subtracts two terms of size e^{(t+τ) Re z}.
        if tau * zn <= 1.0 {
            // Here t >= 2τ, so the integrand is smooth on [0, τ].
            return Ok(legendre_weight(lam, t_n, tau, z));
        }
        // With h(w) = e^w w^{-λ} Γ(λ, w) the exponentials cancel analytically.
        if let (Some((h0, _)), Some((h1, _))) = (
            phi.incomplete_gamma_fraction(t_n * z),
            phi.incomplete_gamma_fraction(t1 * z),
        ) {
            return Ok((tau * z).exp() * t_n.powf(lam) * h0 - t1.powf(lam) * h1);
        }
    }
    let a = phi.eval(t1 * z)?;
    let b = phi.eval(t_n * z)?;
    Ok(gamma * (t1.powf(lam) * a - t_n.powf(lam) * (tau * z).exp() * b))
}

/// `t Re z` above which the direct two-term kernel weight loses accuracy.
const GROWTH_LIMIT: f64 = 2.0;

fn legendre_weight(lam: f64, t_n: f64, tau: f64, z: Complex64) -> Complex64 {
    static RULE: OnceLock<QuadRule> = OnceLock::new();
    let rule = RULE.get_or_init(|| gauss_legendre(24).expect("fixed rule"));
    tau * rule.integrate(|u| ((tau * (1.0 - u)) * z).exp() * (t_n + tau * u).powf(lam - 1.0))
}

/// `sum_k z^{-k} ((t+τ)^{λ-k} - e^{τz} t^{λ-k}) / Γ(1+λ-k)`, the algebraic
/// tails of both asymptotic expansions, with each bracket formed as
/// `t^{λ-k} (expm1((λ-k) log1p(τ/t)) - expm1(τz))`.
fn tail_difference(phi: &FracPhi, t: f64, tau: f64, z: Complex64) -> Complex64 {
    let lam = phi.lambda();
    let w = z.inv();
    let log_ratio = (tau / t).ln_1p();
    let em1 = complex_expm1(tau * z);
    let mut coef = 1.0 / phi.gamma_lambda();
    let mut power = w;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut prev = f64::INFINITY;
    for k in 1..=MAX_ASYMPTOTIC_TERMS {
        if coef == 0.0 {
            break;
        }
        let e = lam - k as f64;
        let tk = t.powf(e);
        // size of the term in the slower of the two asymptotic series
        let size = (coef * tk).abs() * power.norm();
        if size > prev {
            break;
        }
        prev = size;
        let bracket = tk * (Complex64::new((e * log_ratio).exp_m1(), 0.0) - em1);
        let term = power * bracket * coef;
        sum += term;
        if term.norm() <= 0.5 * f64::EPSILON * sum.norm() {
            break;
        }
        coef *= e;
        power *= w;
    }
    sum
}

/// `e^w - 1` without cancellation for small `|w|`.
pub fn complex_expm1(w: Complex64) -> Complex64 {
    let (s, c) = w.im.sin_cos();
    let half = (0.5 * w.im).sin();
    Complex64::new(w.re.exp_m1() * c - 2.0 * half * half, w.re.exp() * s)
}

/// Coefficients `a_j` of `sum_j a_j w^j` interpolating `h(w_i)` at
/// `w_i = (t_n + c_i τ)^r`. The vector coefficients are `a_j v`.
pub fn interp_coefficients(
    nodes: &NodeSet,
    source: &FractionalSource,
    t_n: f64,
    tau: f64,
) -> Result<Vec<Complex64>, IntegratorError> {
    let r = source.r();
    let w: Vec<f64> = nodes
        .points()
        .iter()
        .map(|c| (t_n + c * tau).powf(r))
        .collect();
    let h: Vec<Complex64> = w.iter().map(|&x| source.h(x)).collect();
    solve_interpolation(&w, &h)
}

fn solve_interpolation(w: &[f64], h: &[Complex64]) -> Result<Vec<Complex64>, IntegratorError> {
    let nu = w.len();
    let coeffs = match nu {
        1 => vec![h[0]],
        2 => {
            let a1 = (h[1] - h[0]) / (w[1] - w[0]);
            vec![h[0] - a1 * w[0], a1]
        }
        _ => vandermonde_solve(w, h)?,
    };
    let scale = h.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let residual = w
        .iter()
        .zip(h)
        .map(|(&x, &hi)| (horner(&coeffs, x) - hi).norm())
        .fold(0.0, f64::max);
    if !coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        return Err(IntegratorError::Singular);
    }
    if residual > INTERPOLATION_RESIDUAL * scale.max(f64::MIN_POSITIVE) {
        return Err(IntegratorError::Interpolation { residual });
    }
    Ok(coeffs)
}

fn horner(coeffs: &[Complex64], x: f64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Gaussian elimination with scaled partial pivoting on `V a = h`,
/// `V_ij = w_i^j`.
fn vandermonde_solve(w: &[f64], h: &[Complex64]) -> Result<Vec<Complex64>, IntegratorError> {
    let n = w.len();
    let mut m: Vec<Vec<f64>> = w
        .iter()
        .map(|&x| (0..n).map(|j| x.powi(j as i32)).collect())
        .collect();
    let mut rhs = h.to_vec();
    let scale: Vec<f64> = m
        .iter()
        .map(|row| row.iter().fold(0.0f64, |a, b| a.max(b.abs())))
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| {
                let ra = m[perm[a]][col].abs() / scale[perm[a]];
                let rb = m[perm[b]][col].abs() / scale[perm[b]];
                ra.total_cmp(&rb)
            })
            .unwrap_or(col);
        perm.swap(col, pivot);
        let p = perm[col];
        let d = m[p][col];
        if d == 0.0 {
            return Err(IntegratorError::Singular);
        }
        let pivot_row = m[p][col..].to_vec();
        for &q in &perm[col + 1..] {
            let f = m[q][col] / d;
            if f != 0.0 {
                for (a, b) in m[q][col..].iter_mut().zip(&pivot_row) {
                    *a -= f * b;
                }
                let rp = rhs[p];
                rhs[q] -= rp * f;
            }
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for col in (0..n).rev() {
        let p = perm[col];
        let mut acc = rhs[p];
        for k in col + 1..n {
            acc -= x[k] * m[p][k];
        }
        x[col] = acc / m[p][col];
    }
    Ok(x)
}

enum WeightRule {
    /// Kernel weights through fractional φ functions, orders `1 + j r`.
    Phi(Vec<FracPhi>),
    Integral {
        interior: TabulatedRule,
        /// Per `j >= 1`: Gauss–Jacobi rule with weight `s^{jr}` for the first step.
        first: Vec<TabulatedRule>,
    },
}

/// A rule on `[0, τ]` with the propagators `e^{(τ-σ_i)λ_k}` stored per node.
struct TabulatedRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    propagators: Vec<Vec<Complex64>>,
}

impl TabulatedRule {
    fn new(nodes01: &[f64], weights: Vec<f64>, tau: f64, eig: &[Complex64]) -> Self {
        let nodes: Vec<f64> = nodes01.iter().map(|s| s * tau).collect();
        let propagators = nodes
            .iter()
            .map(|&s| eig.iter().map(|&l| ((tau - s) * l).exp()).collect())
            .collect();
        Self {
            nodes,
            weights,
            propagators,
        }
    }

    fn accumulate(&self, factors: &[f64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for (p, &f) in self.propagators.iter().zip(factors) {
            for (o, e) in out.iter_mut().zip(p) {
                *o += e * f;
            }
        }
    }
}

enum Plan {
    Eqrf {
        c: Vec<f64>,
        rule: WeightRule,
    },
    Ceqr2 {
        c: [f64; 2],
        weights: [Vec<Complex64>; 2],
    },
}

/// Precomputed data for marching one method with a fixed step size.
pub struct Stepper<'a> {
    op: &'a DiagonalizableOperator,
    source: &'a FractionalSource,
    tau: f64,
    plan: Plan,
    propagator: Vec<Complex64>,
    phi1: Vec<Complex64>,
    profile: Vec<Complex64>,
    scratch: Vec<Vec<Complex64>>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        op: &'a DiagonalizableOperator,
        source: &'a FractionalSource,
        tau: f64,
        method: &Method,
    ) -> Result<Self, IntegratorError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(IntegratorError::StepSize(tau));
        }
        if source.profile().len() != op.dim() {
            return Err(IntegratorError::Profile {
                expected: op.dim(),
                got: source.profile().len(),
            });
        }
        let eig = op.eigenvalues();
        let propagator: Vec<Complex64> = eig.iter().map(|&l| (tau * l).exp()).collect();
        let phi1 = eig
            .iter()
            .map(|&l| Ok(tau * phi_classical(1, tau * l)?))
            .collect::<Result<Vec<_>, SpecialFunError>>()?;
        let r = source.r();
        let plan = match method {
            Method::Eqrf1 { c1 } => {
                if !(0.0..=1.0).contains(c1) {
                    return Err(IntegratorError::Collocation(*c1));
                }
                Plan::Eqrf {
                    c: vec![*c1],
                    rule: WeightRule::Phi(Vec::new()),
                }
            }
            Method::Eqrf { nodes, formulation } => {
                let nu = nodes.nu();
                let rule = match formulation {
                    Formulation::FractionalPhi => WeightRule::Phi(
                        (1..nu)
                            .map(|j| FracPhi::new(PhiOrder::new(1.0 + j as f64 * r)?))
                            .collect::<Result<_, _>>()?,
                    ),
                    Formulation::Integral { n_quad, first_step } => {
                        let gl = gauss_legendre(*n_quad)?;
                        let interior = TabulatedRule::new(
                            &gl.nodes,
                            gl.weights.iter().map(|w| w * tau).collect(),
                            tau,
                            eig,
                        );
                        let first = (1..nu)
                            .map(|j| {
                                let e = j as f64 * r;
                                let rule = match first_step {
                                    FirstStepRule::GaussJacobi => jacobi_rule(*n_quad, e)?,
                                    FirstStepRule::GaussLegendre => QuadRule {
                                        weights: gl
                                            .nodes
                                            .iter()
                                            .zip(&gl.weights)
                                            .map(|(s, w)| w * s.powf(e))
                                            .collect(),
                                        ..gl.clone()
                                    },
                                };
                                let scale = tau.powf(1.0 + e);
                                Ok(TabulatedRule::new(
                                    &rule.nodes,
                                    rule.weights.iter().map(|w| w * scale).collect(),
                                    tau,
                                    eig,
                                ))
                            })
                            .collect::<Result<_, QuadError>>()?;
                        WeightRule::Integral { interior, first }
                    }
                };
                Plan::Eqrf {
                    c: nodes.points().to_vec(),
                    rule,
                }
            }
            Method::Ceqr2 { nodes } => {
                if nodes.nu() != 2 {
                    return Err(IntegratorError::NodeCount {
                        method: "CEQR2",
                        expected: 2,
                        got: nodes.nu(),
                    });
                }
                let (c1, c2) = (nodes.points()[0], nodes.points()[1]);
                let d = c2 - c1;
                let mut w1 = Vec::with_capacity(eig.len());
                let mut w2 = Vec::with_capacity(eig.len());
                for &l in eig {
                    let p1 = phi_classical(1, tau * l)?;
                    let p2 = phi_classical(2, tau * l)?;
                    w1.push(tau * (c2 / d * p1 - p2 / d));
                    w2.push(tau * (-c1 / d * p1 + p2 / d));
                }
                Plan::Ceqr2 {
                    c: [c1, c2],
                    weights: [w1, w2],
                }
            }
        };
        let slots = match &plan {
            Plan::Eqrf { c, .. } => c.len().saturating_sub(1),
            Plan::Ceqr2 { .. } => 0,
        };
        Ok(Self {
            op,
            source,
            tau,
            plan,
            propagator,
            phi1,
            profile: op.to_modal(source.profile())?,
            scratch: vec![vec![Complex64::new(0.0, 0.0); eig.len()]; slots],
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Advances modal coefficients `y` from `t_n` to `t_n + τ`.
    pub fn step_modal(&mut self, y: &mut [Complex64], t_n: f64) -> Result<(), IntegratorError> {
        let tau = self.tau;
        let r = self.source.r();
        let eig = self.op.eigenvalues();
        match &self.plan {
            Plan::Eqrf { c, rule } => {
                let w: Vec<f64> = c.iter().map(|ci| (t_n + ci * tau).powf(r)).collect();
                let h: Vec<Complex64> = w.iter().map(|&x| self.source.h(x)).collect();
                let a = solve_interpolation(&w, &h)?;
                match rule {
                    WeightRule::Phi(kernels) => {
                        for (slot, phi) in self.scratch.iter_mut().zip(kernels) {
                            for (s, &l) in slot.iter_mut().zip(eig) {
                                *s = kernel_weight_with(phi, t_n, tau, l)?;
                            }
                        }
                    }
                    WeightRule::Integral { interior, first } => {
                        for (j, slot) in self.scratch.iter_mut().enumerate() {
                            let e = (j + 1) as f64 * r;
                            if t_n == 0.0 {
                                first[j].accumulate(&first[j].weights, slot);
                            } else {
                                let factors: Vec<f64> = interior
                                    .nodes
                                    .iter()
                                    .zip(&interior.weights)
                                    .map(|(&s, &wt)| wt * (t_n + s).powf(e))
                                    .collect();
                                interior.accumulate(&factors, slot);
                            }
                        }
                    }
                }
                for k in 0..y.len() {
                    let mut acc = a[0] * self.phi1[k];
                    for (aj, slot) in a[1..].iter().zip(&self.scratch) {
                        acc += aj * slot[k];
                    }
                    y[k] = self.propagator[k] * y[k] + acc * self.profile[k];
                }
            }
            Plan::Ceqr2 { c, weights } => {
                let g1 = self.source.amplitude(t_n + c[0] * tau);
                let g2 = self.source.amplitude(t_n + c[1] * tau);
                for k in 0..y.len() {
                    let acc = g1 * weights[0][k] + g2 * weights[1][k];
                    y[k] = self.propagator[k] * y[k] + acc * self.profile[k];
                }
            }
        }
        Ok(())
    }

    /// Marches `initial` (at time 0) over `grid`, returning the state at `T`.
    pub fn run(&mut self, initial: &State, grid: &TimeGrid) -> Result<State, IntegratorError> {
        if initial.time != 0.0 {
            return Err(IntegratorError::StartTime {
                expected: 0.0,
                got: initial.time,
            });
        }
        let mut y = self.op.to_modal(&initial.values)?;
        for n in 0..grid.steps() {
            self.step_modal(&mut y, grid.time(n))?;
            if y.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
                return Err(IntegratorError::NonFinite { step: n + 1 });
            }
        }
        Ok(State::new(self.op.from_modal(&y)?, grid.t_final())?)
    }

    /// One step from `state` (at time `state.time`).
    pub fn step(&mut self, state: &State) -> Result<State, IntegratorError> {
        let mut y = self.op.to_modal(&state.values)?;
        self.step_modal(&mut y, state.time)?;
        Ok(State::new(self.op.from_modal(&y)?, state.time + self.tau)?)
    }
}

fn require_nu(
    nodes: &NodeSet,
    method: &'static str,
    expected: usize,
) -> Result<(), IntegratorError> {
    if nodes.nu() == expected {
        Ok(())
    } else {
        Err(IntegratorError::NodeCount {
            method,
            expected,
            got: nodes.nu(),
        })
    }
}

pub fn eqrf1_step(
    state: &State,
    op: &DiagonalizableOperator,
    source: &FractionalSource,
    c1: f64,
    tau: f64,
) -> Result<State, IntegratorError> {
    Stepper::new(op, source, tau, &Method::Eqrf1 { c1 })?.step(state)
}

pub fn eqrf2_step_phi(
    state: &State,
    op: &DiagonalizableOperator,
    source: &FractionalSource,
    nodes: &NodeSet,
    tau: f64,
) -> Result<State, IntegratorError> {
    require_nu(nodes, "EQRF2", 2)?;
    eqrfnu_step(state, op, source, nodes, tau)
}

pub fn eqrf2_step_integral(
    state: &State,
    op: &DiagonalizableOperator,
    source: &FractionalSource,
    nodes: &NodeSet,
    tau: f64,
    n_quad: usize,
) -> Result<State, IntegratorError> {
    require_nu(nodes, "EQRF2", 2)?;
    let method = Method::Eqrf {
        nodes: nodes.clone(),
        formulation: Formulation::Integral {
            n_quad,
            first_step: FirstStepRule::GaussJacobi,
        },
    };
    Stepper::new(op, source, tau, &method)?.step(state)
}

pub fn eqrfnu_step(
    state: &State,
    op: &DiagonalizableOperator,
    source: &FractionalSource,
    nodes: &NodeSet,
    tau: f64,
) -> Result<State, IntegratorError> {
    let method = Method::Eqrf {
        nodes: nodes.clone(),
        formulation: Formulation::FractionalPhi,
    };
    Stepper::new(op, source, tau, &method)?.step(state)
}

pub fn ceqr2_step(
    state: &State,
    op: &DiagonalizableOperator,
    source: &FractionalSource,
    nodes: &NodeSet,
    tau: f64,
) -> Result<State, IntegratorError> {
    Stepper::new(
        op,
        source,
        tau,
        &Method::Ceqr2 {
            nodes: nodes.clone(),
        },
    )?
    .step(state)
}

pub fn march(
    initial: &State,
    op: &DiagonalizableOperator,
    source: &FractionalSource,
    grid: &TimeGrid,
    method: &Method,
) -> Result<State, IntegratorError> {
    Stepper::new(op, source, grid.tau(), method)?.run(initial, grid)
}

/// Short method label such as `EQRF2-GR` or `CEQR2-T`.
pub fn method_label(method: &Method) -> String {
    match method {
        Method::Eqrf1 { c1 } => format!("EQRF1(c1={c1})"),
        Method::Eqrf { nodes, formulation } => {
            let base = format!("EQRF{}-{}", nodes.nu(), nodes.label());
            match (nodes.family(), formulation) {
                (NodeFamily::Single, _) => base,
                (_, Formulation::FractionalPhi) => base,
                (_, f) => format!("{base}({})", f.short_label()),
            }
        }
        Method::Ceqr2 { nodes } => format!("CEQR2-{}", nodes.label()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrule::node_set;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kernel_weight_closed_forms() {
        let lam = PhiOrder::new(1.75).unwrap();
        let w = kernel_weight(lam, 0.3, 0.2, c(0.0, 0.0)).unwrap();
        let want = (0.5f64.powf(1.75) - 0.3f64.powf(1.75)) / 1.75;
        assert!((w.re - want).abs() < 1e-15 && w.im == 0.0);

        let one = PhiOrder::new(1.0).unwrap();
        for &z in &[c(-3.0, 1.0), c(-500.0, 0.0), c(0.0, 2e4)] {
            let w = kernel_weight(one, 0.7, 0.05, z).unwrap();
            let want = 0.05 * phi_classical(1, 0.05 * z).unwrap();
            assert!(
                (w - want).norm() <= 1e-13 * want.norm(),
                "{z}: {w} vs {want}"
            );
        }
        // Growing modes at late times: t Re z = 20, small and large τ|z|.
        for &(tau, z) in &[
            (0.05, c(10.0, 3.0)),
            (0.2, c(10.0, 3.0)),
            (0.01, c(10.0, -726.5)),
        ] {
            let w = kernel_weight(one, 2.0, tau, z).unwrap();
            let want = tau * phi_classical(1, tau * z).unwrap();
            assert!(
                (w - want).norm() <= 1e-13 * want.norm(),
                "{z}: {w} vs {want}"
            );
        }
    }

    #[test]
    fn kernel_weight_fixture() {
        // adaptive quadrature of int_0^0.1 e^{-20(0.1-s)} (0.5+s)^{3/4} ds
        let w = kernel_weight(PhiOrder::new(1.75).unwrap(), 0.5, 0.1, c(-20.0, 0.0)).unwrap();
        let want = 0.0281929512755967;
        assert!((w.re - want).abs() < 1e-14 * want && w.im == 0.0);
    }

    #[test]
    fn interpolation_examples() {
        let nodes = node_set(NodeFamily::Trapezoid, 2).unwrap();
        let src = FractionalSource::new(0.5, |x| c(x.exp(), 0.0), vec![c(1.0, 0.0)]).unwrap();
        let a = interp_coefficients(&nodes, &src, 0.0, 1.0).unwrap();
        assert!((a[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((a[1] - c(std::f64::consts::E - 1.0, 0.0)).norm() < 1e-15);

        let lob = node_set(NodeFamily::GaussLobatto, 4).unwrap();
        let src = FractionalSource::new(
            0.25,
            |x| c(2.0 - x + 3.0 * x * x * x, 0.0),
            vec![c(1.0, 0.0)],
        )
        .unwrap();
        let a = interp_coefficients(&lob, &src, 0.0, 0.5).unwrap();
        for (got, want) in a.iter().zip([2.0, -1.0, 0.0, 3.0]) {
            assert!((got.re - want).abs() < 1e-10, "{a:?}");
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = TimeGrid::new(0.1, 3).unwrap();
        assert_eq!(g.time(3), 0.1);
        assert_eq!(g.time(0), 0.0);
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn source_exponent_validation() {
        assert!(FractionalSource::new(1.0, |_| c(1.0, 0.0), vec![]).is_err());
        assert!(FractionalSource::new(0.0, |_| c(1.0, 0.0), vec![]).is_err());
    }
}
