//! Stiff linear operators held through a diagonalizing similarity
//! `A = P Λ P^{-1}`, so every matrix function reduces to scalar work on the
//! eigenvalues.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specialfun::{phi_classical, FracPhi, PhiOrder, SpecialFunError};
use crate::tridiag::{symmetric_tridiagonal_eigen, EigenError, Vectors};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("number of Fourier modes must be even and at least 2, got {0}")]
    Modes(usize),
    #[error("operator dimension must be positive")]
    EmptyGrid,
    #[error("coefficient must be positive and finite, got a({x}) = {value}")]
    Coefficient { x: f64, value: f64 },
    #[error("vector has length {got}, operator dimension is {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("time must be nonnegative and finite, got {0}")]
    Time(f64),
    #[error("state has non-finite entries")]
    NonFiniteState,
    #[error("non-finite eigenvalue")]
    NonFiniteEigenvalue,
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Special(#[from] SpecialFunError),
}

/// A point of the semidiscrete trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl State {
    pub fn new(values: Vec<Complex64>, time: f64) -> Result<Self, OperatorError> {
        if !(time >= 0.0 && time.is_finite()) {
            return Err(OperatorError::Time(time));
        }
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(OperatorError::NonFiniteState);
        }
        Ok(Self { values, time })
    }

    pub fn from_real(values: &[f64], time: f64) -> Result<Self, OperatorError> {
        Self::new(
            values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            time,
        )
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm_inf(&self) -> f64 {
        max_norm(&self.values)
    }
}

pub fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// Already diagonal: modal and physical coordinates coincide.
    Diagonal,
    FourierDiagonal,
    SymmetricEig,
}

#[derive(Clone)]
enum Backend {
    Identity,
    Fourier {
        zeta: Complex64,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
    Symmetric {
        coeff: Vec<f64>,
        /// D = diag(a^{1/2}).
        scale: Vec<f64>,
        /// Row-major orthonormal eigenvectors of D^{-1} A D.
        basis: Vec<f64>,
        inv_dx2: f64,
    },
}

/// `A = P Λ P^{-1}` with `to_modal = P^{-1}`, `from_modal = P`.
#[derive(Clone)]
pub struct DiagonalizableOperator {
    eigenvalues: Vec<Complex64>,
    kind: OperatorKind,
    backend: Backend,
}

impl fmt::Debug for DiagonalizableOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiagonalizableOperator")
            .field("kind", &self.kind)
            .field("dim", &self.dim())
            .finish_non_exhaustive()
    }
}

/// Signed wavenumber of FFT output slot `j` for `n` modes.
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl DiagonalizableOperator {
    /// A diagonal operator (e.g. a scalar ODE when `eigenvalues.len() == 1`).
    pub fn diagonal(eigenvalues: Vec<Complex64>) -> Result<Self, OperatorError> {
        if eigenvalues.is_empty() {
            return Err(OperatorError::EmptyGrid);
        }
        if eigenvalues
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(OperatorError::NonFiniteEigenvalue);
        }
        Ok(Self {
            eigenvalues,
            kind: OperatorKind::Diagonal,
            backend: Backend::Identity,
        })
    }

    /// `ζ ∂_xx` on (0, 1) with periodic boundary conditions, Fourier
    /// pseudospectral on `x_j = j / n`.
    pub fn periodic_spectral_second_derivative(
        n_modes: usize,
        zeta: Complex64,
    ) -> Result<Self, OperatorError> {
        if n_modes < 2 || !n_modes.is_multiple_of(2) {
            return Err(OperatorError::Modes(n_modes));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_modes);
        let inverse = planner.plan_fft_inverse(n_modes);
        let eigenvalues = (0..n_modes)
            .map(|j| {
                let k = 2.0 * PI * wavenumber(j, n_modes) as f64;
                -zeta * k * k
            })
            .collect();
        Ok(Self {
            eigenvalues,
            kind: OperatorKind::FourierDiagonal,
            backend: Backend::Fourier {
                zeta,
                forward,
                inverse,
            },
        })
    }

    /// `a(x) ∂_xx` on (0, 1) with homogeneous Dirichlet conditions, second-order
    /// differences on `x_i = i / (n + 1)`. Diagonalized through the symmetric
    /// matrix `D^{-1} A D`, `D = diag(a(x_i)^{1/2})`.
    pub fn dirichlet_fd_variable_coefficient(
        n_inner: usize,
        a: impl Fn(f64) -> f64,
    ) -> Result<Self, OperatorError> {
        if n_inner == 0 {
            return Err(OperatorError::EmptyGrid);
        }
        let dx = 1.0 / (n_inner as f64 + 1.0);
        let inv_dx2 = 1.0 / (dx * dx);
        let mut coeff = Vec::with_capacity(n_inner);
        for i in 1..=n_inner {
            let x = i as f64 * dx;
            let value = a(x);
            if !(value > 0.0 && value.is_finite()) {
                return Err(OperatorError::Coefficient { x, value });
            }
            coeff.push(value);
        }
        let scale: Vec<f64> = coeff.iter().map(|c| c.sqrt()).collect();
        let diag: Vec<f64> = coeff.iter().map(|c| -2.0 * c * inv_dx2).collect();
        let off: Vec<f64> = scale.windows(2).map(|w| w[0] * w[1] * inv_dx2).collect();
        let eig = symmetric_tridiagonal_eigen(&diag, &off, Vectors::Full)?;
        Ok(Self {
            eigenvalues: eig.values.iter().map(|&l| Complex64::new(l, 0.0)).collect(),
            kind: OperatorKind::SymmetricEig,
            backend: Backend::Symmetric {
                coeff,
                scale,
                basis: eig.vectors,
                inv_dx2,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Spatial grid the operator acts on (empty for [`OperatorKind::Diagonal`]).
    pub fn grid(&self) -> Vec<f64> {
        let n = self.dim();
        match self.kind {
            OperatorKind::Diagonal => Vec::new(),
            OperatorKind::FourierDiagonal => (0..n).map(|j| j as f64 / n as f64).collect(),
            OperatorKind::SymmetricEig => (1..=n).map(|i| i as f64 / (n as f64 + 1.0)).collect(),
        }
    }

    /// Upper bound on `|from_modal(e_k)|_∞` over unit modal vectors.
    pub fn modal_bound(&self) -> f64 {
        match &self.backend {
            Backend::Identity | Backend::Fourier { .. } => 1.0,
            Backend::Symmetric { scale, .. } => scale.iter().cloned().fold(0.0, f64::max),
        }
    }

    fn check_len(&self, len: usize) -> Result<(), OperatorError> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(OperatorError::Dimension {
                expected: self.dim(),
                got: len,
            })
        }
    }

    pub fn to_modal(&self, v: &[Complex64]) -> Result<Vec<Complex64>, OperatorError> {
        self.check_len(v.len())?;
        Ok(match &self.backend {
            Backend::Identity => v.to_vec(),
            Backend::Fourier { forward, .. } => {
                let mut buf = v.to_vec();
                forward.process(&mut buf);
                let inv_n = 1.0 / v.len() as f64;
                buf.iter_mut().for_each(|x| *x *= inv_n);
                buf
            }
            Backend::Symmetric { scale, basis, .. } => {
                let n = v.len();
                let u: Vec<Complex64> = v.iter().zip(scale).map(|(x, s)| x / s).collect();
                (0..n)
                    .map(|j| {
                        let row = &basis[j * n..(j + 1) * n];
                        let (mut re, mut im) = (0.0, 0.0);
                        for (b, x) in row.iter().zip(&u) {
                            re += b * x.re;
                            im += b * x.im;
                        }
                        Complex64::new(re, im)
                    })
                    .collect()
            }
        })
    }

    pub fn from_modal(&self, w: &[Complex64]) -> Result<Vec<Complex64>, OperatorError> {
        self.check_len(w.len())?;
        Ok(match &self.backend {
            Backend::Identity => w.to_vec(),
            Backend::Fourier { inverse, .. } => {
                let mut buf = w.to_vec();
                inverse.process(&mut buf);
                buf
            }
            Backend::Symmetric { scale, basis, .. } => {
                let n = w.len();
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for (j, wj) in w.iter().enumerate() {
                    let row = &basis[j * n..(j + 1) * n];
                    for (o, b) in out.iter_mut().zip(row) {
                        *o += wj * b;
                    }
                }
                out.iter_mut().zip(scale).for_each(|(o, s)| *o *= s);
                out
            }
        })
    }

    /// Applies a scalar function of the eigenvalues: `P f(Λ) P^{-1} v`.
    pub fn apply_modal_fn(
        &self,
        v: &State,
        mut f: impl FnMut(Complex64) -> Result<Complex64, OperatorError>,
    ) -> Result<State, OperatorError> {
        let mut w = self.to_modal(&v.values)?;
        for (x, &lam) in w.iter_mut().zip(&self.eigenvalues) {
            *x *= f(lam)?;
        }
        State::new(self.from_modal(&w)?, v.time)
    }

    /// `A v` through the diagonalization.
    pub fn apply(&self, v: &State) -> Result<State, OperatorError> {
        self.apply_modal_fn(v, Ok)
    }

    /// `A v` from the defining formula: the finite-difference stencil, or the
    /// Fourier symbol applied with a direct (non-FFT) transform.
    pub fn apply_definition(&self, v: &State) -> Result<State, OperatorError> {
        self.check_len(v.dim())?;
        let n = v.dim();
        let values = match &self.backend {
            Backend::Identity => v
                .values
                .iter()
                .zip(&self.eigenvalues)
                .map(|(x, l)| x * l)
                .collect(),
            Backend::Fourier { zeta, .. } => {
                let roots: Vec<Complex64> = (0..n)
                    .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64))
                    .collect();
                let mut modal = vec![Complex64::new(0.0, 0.0); n];
                for (j, slot) in modal.iter_mut().enumerate() {
                    let k = wavenumber(j, n);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, x) in v.values.iter().enumerate() {
                        let m = (i as i64 * k).rem_euclid(n as i64) as usize;
                        acc += x * roots[m].conj();
                    }
                    let kk = 2.0 * PI * k as f64;
                    *slot = -zeta * kk * kk * acc / n as f64;
                }
                (0..n)
                    .map(|i| {
                        modal
                            .iter()
                            .enumerate()
                            .map(|(j, c)| {
                                let m = (i as i64 * wavenumber(j, n)).rem_euclid(n as i64);
                                c * roots[m as usize]
                            })
                            .sum()
                    })
                    .collect()
            }
            Backend::Symmetric { coeff, inv_dx2, .. } => {
                let zero = Complex64::new(0.0, 0.0);
                (0..n)
                    .map(|i| {
                        let left = if i > 0 { v.values[i - 1] } else { zero };
                        let right = if i + 1 < n { v.values[i + 1] } else { zero };
                        (left - 2.0 * v.values[i] + right) * coeff[i] * *inv_dx2
                    })
                    .collect()
            }
        };
        State::new(values, v.time)
    }

    /// `φ_λ(tA) v`.
    pub fn apply_phi(&self, order: PhiOrder, t: f64, v: &State) -> Result<State, OperatorError> {
        check_time(t)?;
        let phi = FracPhi::new(order)?;
        if t == 0.0 {
            let c = phi.at_zero();
            self.check_len(v.dim())?;
            return State::new(v.values.iter().map(|x| x * c).collect(), v.time);
        }
        self.apply_modal_fn(v, |lam| Ok(phi.eval(t * lam)?))
    }

    /// `φ_ℓ(tA) v` for the classical kernels (ℓ = 0 is the exponential).
    pub fn apply_phi_classical(&self, ell: u32, t: f64, v: &State) -> Result<State, OperatorError> {
        check_time(t)?;
        self.apply_modal_fn(v, |lam| Ok(phi_classical(ell, t * lam)?))
    }

    /// `e^{tA} v`.
    pub fn apply_expm(&self, t: f64, v: &State) -> Result<State, OperatorError> {
        self.apply_phi_classical(0, t, v)
    }
}

fn check_time(t: f64) -> Result<(), OperatorError> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(OperatorError::Time(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_state(f: impl Fn(f64) -> f64, grid: &[f64]) -> State {
        State::from_real(&grid.iter().map(|&x| f(x)).collect::<Vec<_>>(), 0.0).unwrap()
    }

    fn rel_diff(a: &State, b: &State) -> f64 {
        let d: Vec<Complex64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
        max_norm(&d) / b.norm_inf()
    }

    #[test]
    fn fourier_eigenfunction() {
        let op = DiagonalizableOperator::periodic_spectral_second_derivative(
            64,
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let v = real_state(|x| (2.0 * PI * x).sin(), &op.grid());
        let av = op.apply(&v).unwrap();
        let want = State::new(
            v.values.iter().map(|x| x * -(2.0 * PI).powi(2)).collect(),
            0.0,
        )
        .unwrap();
        assert!(rel_diff(&av, &want) < 1e-12);
        assert_eq!(op.eigenvalues()[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn fourier_largest_eigenvalue() {
        let op = DiagonalizableOperator::periodic_spectral_second_derivative(
            500,
            Complex64::new(0.0, 1.0),
        )
        .unwrap();
        let biggest = op
            .eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let want = (2.0 * PI * 250.0).powi(2);
        assert!((biggest - want).abs() <= 1e-15 * want);
        assert!((want - 2.467e6).abs() < 1e3);
    }

    #[test]
    fn fourier_rejects_odd_modes() {
        assert!(matches!(
            DiagonalizableOperator::periodic_spectral_second_derivative(
                7,
                Complex64::new(1.0, 0.0)
            ),
            Err(OperatorError::Modes(7))
        ));
    }

    #[test]
    fn dirichlet_constant_coefficient_spectrum() {
        let op = DiagonalizableOperator::dirichlet_fd_variable_coefficient(3, |_| 1.0).unwrap();
        let s2 = 2f64.sqrt();
        let want = [(-2.0 - s2) * 16.0, -32.0, (-2.0 + s2) * 16.0];
        for (z, w) in op.eigenvalues().iter().zip(want) {
            assert!((z.re - w).abs() < 1e-13 && z.im == 0.0);
        }
    }

    #[test]
    fn dirichlet_heat_coefficient_negative_spectrum() {
        let op = DiagonalizableOperator::dirichlet_fd_variable_coefficient(1000, |x| {
            (1.0 + x * x) / 10.0
        })
        .unwrap();
        assert!(op.eigenvalues().iter().all(|z| z.re < 0.0 && z.im == 0.0));
        let op =
            DiagonalizableOperator::dirichlet_fd_variable_coefficient(16, |x| (1.0 + x * x) / 10.0)
                .unwrap();
        let v = real_state(|x| x * (1.0 - x), &op.grid());
        let a = op.apply(&v).unwrap();
        let b = op.apply_definition(&v).unwrap();
        let d = rel_diff(&a, &b);
        assert!(d < 1e-12, "{d:e}");
    }

    #[test]
    fn dirichlet_eigendecomposition_reproduces_stencil() {
        for n in [1, 2, 3, 8, 33, 64] {
            let op = DiagonalizableOperator::dirichlet_fd_variable_coefficient(n, |x| {
                1.0 + 0.5 * (5.0 * x).sin()
            })
            .unwrap();
            let v = real_state(|x| x * (1.0 - x) + 0.1 * (13.0 * x).cos(), &op.grid());
            let d = rel_diff(&op.apply(&v).unwrap(), &op.apply_definition(&v).unwrap());
            assert!(d < 1e-10, "n={n}: {d:e}");
        }
    }

    #[test]
    fn dirichlet_rejects_nonpositive_coefficient() {
        assert!(matches!(
            DiagonalizableOperator::dirichlet_fd_variable_coefficient(4, |x| x - 0.5),
            Err(OperatorError::Coefficient { .. })
        ));
    }

    #[test]
    fn phi_at_zero_time_and_zero_operator() {
        let op = DiagonalizableOperator::diagonal(vec![Complex64::new(0.0, 0.0); 3]).unwrap();
        let v = State::from_real(&[1.0, -2.0, 3.0], 0.0).unwrap();
        let order = PhiOrder::new(1.5).unwrap();
        let g = crate::specialfun::rgamma(2.5);
        for t in [0.0, 0.7] {
            let out = op.apply_phi(order, t, &v).unwrap();
            for (o, x) in out.values.iter().zip(&v.values) {
                assert!((o - x * g).norm() < 1e-15);
            }
        }
        let id = op.apply_expm(0.0, &v).unwrap();
        assert_eq!(id, v);
    }

    #[test]
    fn semigroup() {
        let op =
            DiagonalizableOperator::dirichlet_fd_variable_coefficient(40, |x| 1.0 + x).unwrap();
        let v = real_state(|x| x * (1.0 - x) * (3.0 * x).cos(), &op.grid());
        let a = op
            .apply_expm(0.003, &op.apply_expm(0.002, &v).unwrap())
            .unwrap();
        let b = op.apply_expm(0.005, &v).unwrap();
        assert!(rel_diff(&a, &b) < 1e-11);
    }

    #[test]
    fn dimension_mismatch() {
        let op = DiagonalizableOperator::diagonal(vec![Complex64::new(-1.0, 0.0); 2]).unwrap();
        let v = State::from_real(&[1.0], 0.0).unwrap();
        assert!(matches!(op.apply(&v), Err(OperatorError::Dimension { .. })));
    }
}
