//! In-browser views of the fractional φ functions and of EQRF convergence.
//!
//! Every export returns a JSON string so the page needs no glue code beyond
//! `JSON.parse`. The plain `*_json` functions carry the logic and are what the
//! native tests exercise.

use eqrf::problems::ProblemOverrides;
use eqrf::study::fit_order;
use eqrf::{
    discretize, node_set, phi_frac, preset, reference_solution, terminal_error, Formulation,
    Method, NodeFamily, NodeSet, PhiOrder, ProblemName,
};
use num_complex::Complex64;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Step counts of the scalar study.
pub const SCALAR_STEPS: [usize; 5] = [4, 16, 64, 256, 1024];
/// Step counts of the radiation study.
pub const RADIATION_STEPS: [usize; 5] = [20, 40, 60, 80, 100];
/// Largest spatial resolution the page may request.
pub const MAX_MODES: usize = 256;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// φ_λ along the ray `z = m e^{iθ}`, `m ∈ [0, max_modulus]`.
pub fn phi_ray_json(
    lambda: f64,
    arg_deg: f64,
    max_modulus: f64,
    points: usize,
) -> Result<String, String> {
    if !(max_modulus > 0.0 && max_modulus.is_finite()) || !(2..=2000).contains(&points) {
        return Err(format!(
            "need max_modulus > 0 and 2..=2000 points, got {max_modulus}, {points}"
        ));
    }
    let order = PhiOrder::new(lambda).map_err(err)?;
    let dir = Complex64::from_polar(1.0, arg_deg.to_radians());
    let mut m = Vec::with_capacity(points);
    let mut re = Vec::with_capacity(points);
    let mut im = Vec::with_capacity(points);
    for k in 0..points {
        let t = max_modulus * k as f64 / (points - 1) as f64;
        let v = phi_frac(order, t * dir).map_err(err)?;
        m.push(t);
        re.push(v.re);
        im.push(v.im);
    }
    Ok(json!({ "modulus": m, "re": re, "im": im }).to_string())
}

fn series_json(steps: &[usize], errors: &[f64]) -> serde_json::Value {
    let pts: Vec<(usize, f64)> = steps.iter().copied().zip(errors.iter().copied()).collect();
    let order = fit_order(&pts).ok().map(|(p, _)| p);
    json!({ "N": steps, "error": errors, "order": order })
}

/// EQRF1 on the scalar model problem for one `(r, c1)`.
pub fn scalar_convergence_json(r: f64, c1: f64) -> Result<String, String> {
    let problem = preset(ProblemName::ScalarIntro)
        .with_overrides(&ProblemOverrides {
            r: Some(r),
            ..Default::default()
        })
        .map_err(err)?;
    let d = discretize(&problem).map_err(err)?;
    let reference = reference_solution(&d, 1e-12).map_err(err)?;
    let method = Method::Eqrf1 { c1 };
    let errors = SCALAR_STEPS
        .iter()
        .map(|&n| terminal_error(&d.march(n, &method).map_err(err)?, &reference).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(series_json(&SCALAR_STEPS, &errors).to_string())
}

/// `nodes` is `trapezoid`, `gauss`, `gauss_radau` or `gauss_lobatto` (with `nu`),
/// or `nc` for the equispaced points {0, 1/3, 1}.
pub fn nodes_from_name(nodes: &str, nu: usize) -> Result<NodeSet, String> {
    if nodes == "nc" {
        return NodeSet::custom(vec![0.0, 1.0 / 3.0, 1.0]).map_err(err);
    }
    let family: NodeFamily =
        serde_json::from_value(json!(nodes)).map_err(|_| format!("unknown node family {nodes}"))?;
    node_set(family, nu).map_err(err)
}

/// EQRFν on the radiation problem at a reduced Fourier resolution.
pub fn radiation_convergence_json(
    r: f64,
    nodes: &str,
    nu: usize,
    modes: usize,
) -> Result<String, String> {
    if !(8..=MAX_MODES).contains(&modes) {
        return Err(format!("modes must lie in 8..={MAX_MODES}, got {modes}"));
    }
    let nodes = nodes_from_name(nodes, nu)?;
    let problem = preset(ProblemName::Perrad)
        .with_overrides(&ProblemOverrides {
            r: Some(r),
            size: Some(modes),
            ..Default::default()
        })
        .map_err(err)?;
    let d = discretize(&problem).map_err(err)?;
    let reference = reference_solution(&d, 1e-12).map_err(err)?;
    let label = format!("EQRF{}-{}", nodes.nu(), nodes.label());
    let method = Method::Eqrf {
        nodes,
        formulation: Formulation::FractionalPhi,
    };
    let errors = RADIATION_STEPS
        .iter()
        .map(|&n| terminal_error(&d.march(n, &method).map_err(err)?, &reference).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = series_json(&RADIATION_STEPS, &errors);
    out["method"] = json!(label);
    Ok(out.to_string())
}

#[wasm_bindgen]
pub fn phi_ray(
    lambda: f64,
    arg_deg: f64,
    max_modulus: f64,
    points: usize,
) -> Result<String, JsError> {
    phi_ray_json(lambda, arg_deg, max_modulus, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn scalar_convergence(r: f64, c1: f64) -> Result<String, JsError> {
    scalar_convergence_json(r, c1).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn radiation_convergence(
    r: f64,
    nodes: &str,
    nu: usize,
    modes: usize,
) -> Result<String, JsError> {
    radiation_convergence_json(r, nodes, nu, modes).map_err(|e| JsError::new(&e))
}
