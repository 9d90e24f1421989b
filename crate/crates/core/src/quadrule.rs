//! Gaussian quadrature on [0, 1] and collocation node families.
//!
//! All rules are built by the Golub–Welsch route: the Jacobi recurrence
//! coefficients for the weight `(1 - s)^alpha * s^beta` are assembled into a
//! symmetric tridiagonal matrix whose eigenvalues are the nodes and whose
//! squared leading eigenvector components, scaled by the zeroth moment, are
//! the weights.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specialfun::gamma_real;
use crate::tridiag::{symmetric_tridiagonal_eigen, EigenError, Vectors};

pub const MAX_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("number of points {0} outside 1..={MAX_POINTS}")]
    PointCount(usize),
    #[error("weight exponent {0} outside the admissible range")]
    Exponent(f64),
    #[error("node family {family:?} does not support nu = {nu}")]
    Unsupported { family: NodeFamily, nu: usize },
    #[error("nodes {0} and {1} are confluent")]
    Confluent(f64, f64),
    #[error("node {0} lies outside [0, 1]")]
    OutOfRange(f64),
    #[error("empty node list")]
    Empty,
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// A quadrature rule on [0, 1] for the weight `s^weight_exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub weight_exponent: f64,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i f(s_i)`, approximating `int_0^1 s^r f(s) ds`.
    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: std::iter::Sum<T>,
        F: FnMut(f64) -> T,
        f64: std::ops::Mul<T, Output = T>,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(s))
            .sum()
    }

    /// Nodes and weights affinely mapped to `[a, b]` (only meaningful for the
    /// unweighted Legendre rule).
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let h = b - a;
        (
            self.nodes.iter().map(|&s| a + h * s).collect(),
            self.weights.iter().map(|&w| h * w).collect(),
        )
    }
}

/// n-point Gauss–Legendre rule on [0, 1].
pub fn gauss_legendre(n: usize) -> Result<QuadRule, QuadError> {
    check_count(n)?;
    let (nodes, weights) = jacobi_nodes_weights(n, 0.0, 0.0)?;
    Ok(QuadRule {
        nodes,
        weights,
        weight_exponent: 0.0,
    })
}

/// n-point Gauss–Jacobi rule on [0, 1] for the weight `s^r`, `0 < r < 1`.
pub fn gauss_jacobi(n: usize, r: f64) -> Result<QuadRule, QuadError> {
    check_count(n)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(QuadError::Exponent(r));
    }
    jacobi_rule(n, r)
}

/// Gauss rule for the weight `s^exponent` with any `exponent > -1`. Unlike
/// [`gauss_jacobi`] the point count is not capped.
pub(crate) fn jacobi_rule(n: usize, exponent: f64) -> Result<QuadRule, QuadError> {
    if n == 0 {
        return Err(QuadError::PointCount(n));
    }
    if !(exponent > -1.0 && exponent.is_finite()) {
        return Err(QuadError::Exponent(exponent));
    }
    let (nodes, weights) = jacobi_nodes_weights(n, 0.0, exponent)?;
    Ok(QuadRule {
        nodes,
        weights,
        weight_exponent: exponent,
    })
}

fn check_count(n: usize) -> Result<(), QuadError> {
    if n == 0 || n > MAX_POINTS {
        Err(QuadError::PointCount(n))
    } else {
        Ok(())
    }
}

/// Golub–Welsch for the weight `(1 - s)^alpha s^beta` on [0, 1].
fn jacobi_nodes_weights(
    n: usize,
    alpha: f64,
    beta: f64,
) -> Result<(Vec<f64>, Vec<f64>), QuadError> {
    // Recurrence of the monic Jacobi polynomials on [-1, 1] with weight
    // (1 - x)^alpha (1 + x)^beta, then mapped through x = 2s - 1.
    let ab = alpha + beta;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let kf = k as f64;
        let a_k = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        diag.push(0.5 * (a_k + 1.0));
        if k + 1 < n {
            let j = kf + 1.0;
            let b2 = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                let s = 2.0 * j + ab;
                4.0 * j * (j + alpha) * (j + beta) * (j + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            off.push(0.5 * b2.sqrt());
        }
    }
    let moment0 = if alpha == 0.0 {
        1.0 / (1.0 + beta)
    } else {
        let g = |x| gamma_real(x).map_err(|_| QuadError::Exponent(x));
        g(alpha + 1.0)? * g(beta + 1.0)? / g(ab + 2.0)?
    };
    let eig = symmetric_tridiagonal_eigen(&diag, &off, Vectors::FirstComponents)?;
    let weights = eig.first.iter().map(|v| moment0 * v * v).collect();
    Ok((eig.values, weights))
}

/// Named collocation-node families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeFamily {
    Single,
    Trapezoid,
    Gauss,
    /// Left endpoint 0 is the fixed node.
    GaussRadau,
    GaussLobatto,
    Custom,
}

impl NodeFamily {
    pub fn short_label(self) -> &'static str {
        match self {
            NodeFamily::Single => "single",
            NodeFamily::Trapezoid => "T",
            NodeFamily::Gauss => "G",
            NodeFamily::GaussRadau => "GR",
            NodeFamily::GaussLobatto => "GL",
            NodeFamily::Custom => "custom",
        }
    }
}

/// Non-confluent collocation points `c_1 < ... < c_nu` in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    c: Vec<f64>,
    family: NodeFamily,
    relation_residual: f64,
}

impl NodeSet {
    /// One collocation point (the EQRF1 / classical one-point rule).
    pub fn single(c1: f64) -> Result<Self, QuadError> {
        Self::build(vec![c1], NodeFamily::Single)
    }

    pub fn custom(c: Vec<f64>) -> Result<Self, QuadError> {
        Self::build(c, NodeFamily::Custom)
    }

    fn build(mut c: Vec<f64>, family: NodeFamily) -> Result<Self, QuadError> {
        if c.is_empty() {
            return Err(QuadError::Empty);
        }
        if let Some(&bad) = c.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(QuadError::OutOfRange(bad));
        }
        c.sort_by(f64::total_cmp);
        let relation_residual = node_relation_residual(&c)?;
        Ok(Self {
            c,
            family,
            relation_residual,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.c
    }

    pub fn nu(&self) -> usize {
        self.c.len()
    }

    pub fn family(&self) -> NodeFamily {
        self.family
    }

    /// `int_0^1 prod_i (s - c_i) ds`; zero iff the points satisfy the node
    /// relation that lifts EQRF-nu to order `1 + nu r`.
    pub fn relation_residual(&self) -> f64 {
        self.relation_residual
    }

    pub fn label(&self) -> String {
        match self.family {
            NodeFamily::Custom | NodeFamily::Single => {
                let pts: Vec<String> = self
                    .c
                    .iter()
                    .map(|x| {
                        format!("{:.3}", x)
                            .trim_end_matches('0')
                            .trim_end_matches('.')
                            .to_string()
                    })
                    .collect();
                format!("c({})", pts.join("|"))
            }
            f => f.short_label().to_string(),
        }
    }
}

/// Nodes of a named family with `nu` points.
pub fn node_set(family: NodeFamily, nu: usize) -> Result<NodeSet, QuadError> {
    let unsupported = || QuadError::Unsupported { family, nu };
    let c = match family {
        NodeFamily::Trapezoid if nu == 2 => vec![0.0, 1.0],
        NodeFamily::Gauss if (1..=MAX_POINTS).contains(&nu) => gauss_legendre(nu)?.nodes,
        NodeFamily::GaussRadau if (2..=MAX_POINTS).contains(&nu) => {
            let mut c = vec![0.0];
            c.extend(jacobi_nodes_weights(nu - 1, 0.0, 1.0)?.0);
            c
        }
        NodeFamily::GaussLobatto if (3..=MAX_POINTS).contains(&nu) => {
            let mut c = vec![0.0];
            c.extend(jacobi_nodes_weights(nu - 2, 1.0, 1.0)?.0);
            c.push(1.0);
            c
        }
        _ => return Err(unsupported()),
    };
    NodeSet::build(c, family)
}

/// `1/(nu+1) - e_1/nu + e_2/(nu-1) - ... + (-1)^nu e_nu`, with `e_k` the
/// elementary symmetric polynomials of the points.
pub fn node_relation_residual(c: &[f64]) -> Result<f64, QuadError> {
    if c.is_empty() {
        return Err(QuadError::Empty);
    }
    for (i, &a) in c.iter().enumerate() {
        for &b in &c[i + 1..] {
            if (a - b).abs() <= 1e-14 {
                return Err(QuadError::Confluent(a, b));
            }
        }
    }
    let nu = c.len();
    // e[k] after processing every point: coefficients of prod (1 + c_i x).
    let mut e = vec![0.0; nu + 1];
    e[0] = 1.0;
    for (i, &ci) in c.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += ci * e[k - 1];
        }
    }
    Ok(e.iter()
        .enumerate()
        .map(|(k, ek)| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * ek / (nu + 1 - k) as f64
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_small_rules() {
        let g1 = gauss_legendre(1).unwrap();
        assert!((g1.nodes[0] - 0.5).abs() < 1e-16 && (g1.weights[0] - 1.0).abs() < 1e-15);
        let g2 = gauss_legendre(2).unwrap();
        let s3 = 3f64.sqrt();
        assert!((g2.nodes[0] - (3.0 - s3) / 6.0).abs() < 1e-15);
        assert!((g2.nodes[1] - (3.0 + s3) / 6.0).abs() < 1e-15);
        assert!(g2.weights.iter().all(|w| (w - 0.5).abs() < 1e-15));
    }

    #[test]
    fn legendre_degree_31() {
        let rule = gauss_legendre(16).unwrap();
        let q: f64 = rule.integrate(|s| s.powi(31));
        assert!((q - 1.0 / 32.0).abs() < 1e-13 / 32.0);
    }

    #[test]
    fn jacobi_one_point_from_moments() {
        let rule = gauss_jacobi(1, 0.5).unwrap();
        assert!((rule.nodes[0] - 0.6).abs() < 1e-15);
        assert!((rule.weights[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_exactness_example() {
        let rule = gauss_jacobi(16, 0.75).unwrap();
        let q: f64 = rule.integrate(|s| s.powi(20));
        assert!((q - 4.0 / 87.0).abs() < 1e-12);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 1.0 / 1.75).abs() < 1e-14);
    }

    #[test]
    fn range_errors() {
        assert!(matches!(gauss_legendre(0), Err(QuadError::PointCount(0))));
        assert!(matches!(gauss_legendre(65), Err(QuadError::PointCount(65))));
        assert!(matches!(gauss_jacobi(4, 1.0), Err(QuadError::Exponent(_))));
        assert!(matches!(gauss_jacobi(4, 0.0), Err(QuadError::Exponent(_))));
    }

    #[test]
    fn named_node_sets() {
        let gr = node_set(NodeFamily::GaussRadau, 2).unwrap();
        assert_eq!(gr.points()[0], 0.0);
        assert!((gr.points()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(gr.relation_residual().abs() < 1e-15);

        let t = node_set(NodeFamily::Trapezoid, 2).unwrap();
        assert_eq!(t.points(), &[0.0, 1.0]);
        assert!((t.relation_residual() + 1.0 / 6.0).abs() < 1e-16);

        let gl = node_set(NodeFamily::GaussLobatto, 3).unwrap();
        assert!((gl.points()[1] - 0.5).abs() < 1e-15);
        assert!(gl.relation_residual().abs() < 1e-16);

        let nc = NodeSet::custom(vec![0.0, 1.0 / 3.0, 1.0]).unwrap();
        assert!(nc.relation_residual().abs() > 1e-3);
    }

    #[test]
    fn unsupported_combinations() {
        assert!(node_set(NodeFamily::Trapezoid, 3).is_err());
        assert!(node_set(NodeFamily::GaussRadau, 1).is_err());
        assert!(node_set(NodeFamily::GaussLobatto, 2).is_err());
        assert!(node_set(NodeFamily::Single, 1).is_err());
        assert!(node_set(NodeFamily::Custom, 2).is_err());
        assert!(matches!(
            NodeSet::custom(vec![0.2, 0.5, 0.2]),
            Err(QuadError::Confluent(..))
        ));
        assert!(matches!(
            NodeSet::custom(vec![1.5]),
            Err(QuadError::OutOfRange(_))
        ));
    }

    #[test]
    fn residual_examples() {
        assert!(node_relation_residual(&[0.0, 2.0 / 3.0]).unwrap().abs() < 1e-16);
        let s3 = 3f64.sqrt();
        let g = [(3.0 - s3) / 6.0, (3.0 + s3) / 6.0];
        assert!(node_relation_residual(&g).unwrap().abs() < 1e-16);
        assert!((node_relation_residual(&[0.0, 1.0]).unwrap() + 1.0 / 6.0).abs() < 1e-16);
    }
}
