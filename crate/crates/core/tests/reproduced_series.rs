//! Published error series re-derived through the study runner.
//!
//! These tables were produced with a different reference than the acceptance
//! suite uses: the radiation problem was scored against a 2000-step EQRF2-GR
//! march, and the integral form of the heat run used a Gauss-Legendre first
//! step. With those choices restored most series agree to printed precision.

use eqrf::study::{parse_studies, run_study, ConvergenceReport};

const STEPS: [usize; 5] = [20, 40, 60, 80, 100];

fn report(json: &str) -> ConvergenceReport {
    let specs = parse_studies(json).unwrap();
    assert_eq!(specs.len(), 1);
    run_study(&specs[0]).unwrap()
}

fn assert_series(
    report: &ConvergenceReport,
    method: &str,
    expected: &[f64; 5],
    rel_tol: f64,
    abs_tol: f64,
) {
    for (&n, &want) in STEPS.iter().zip(expected) {
        let got = report.error_at(method, n).unwrap();
        let rel = (got / want - 1.0).abs();
        assert!(
            (got - want).abs() <= rel_tol * want + abs_tol,
            "{method} N={n}: got {got:.6e}, want {want:.6e} (rel {rel:.2e})"
        );
    }
}

fn radiation_study(r: f64) -> String {
    format!(
        r#"{{
      "name": "radiation_r{r}",
      "problem": "perrad",
      "overrides": {{ "r": {r} }},
      "reference": {{
        "kind": "march",
        "N": 2000,
        "method": {{ "scheme": "eqrf", "nodes": {{ "family": "gauss_radau", "nu": 2 }} }}
      }},
      "methods": [
        {{ "label": "T", "scheme": "eqrf", "nodes": {{ "family": "trapezoid", "nu": 2 }} }},
        {{ "label": "GR", "scheme": "eqrf", "nodes": {{ "family": "gauss_radau", "nu": 2 }} }},
        {{ "label": "GL", "scheme": "eqrf", "nodes": {{ "family": "gauss_lobatto", "nu": 3 }} }},
        {{ "label": "NC", "scheme": "eqrf", "nodes": {{ "points": [0.0, 0.3333333333333333, 1.0] }} }}
      ],
      "N": [20, 40, 60, 80, 100]
    }}"#
    )
}

#[test]
fn radiation_series_against_fine_radau_march() {
    #[rustfmt::skip]
    let table: &[(f64, [[f64; 5]; 4])] = &[
        (0.75, [
            [1.719779e-03, 4.334639e-04, 1.937546e-04, 1.090570e-04, 6.983502e-05],
            [6.785426e-05, 9.515721e-06, 3.707473e-06, 1.683765e-06, 9.340849e-07],
            [1.426923e-06, 1.322824e-07, 3.446345e-08, 1.277084e-08, 6.537259e-09],
            [8.164277e-06, 9.950953e-07, 3.028095e-07, 1.311776e-07, 6.777293e-08],
        ]),
        (0.5, [
            [1.466884e-03, 4.144982e-04, 1.965618e-04, 1.142866e-04, 7.485570e-05],
            [2.894974e-04, 6.505076e-05, 3.056639e-05, 1.625805e-05, 1.000102e-05],
            [1.161883e-05, 1.934242e-06, 6.929727e-07, 3.307094e-07, 1.915691e-07],
            [7.928692e-06, 8.938790e-07, 3.165327e-07, 1.597511e-07, 8.844689e-08],
        ]),
        (0.25, [
            [2.472772e-03, 9.509496e-04, 5.295839e-04, 3.443297e-04, 2.450165e-04],
            [1.165184e-03, 3.890009e-04, 2.128362e-04, 1.323921e-04, 9.107387e-05],
            [6.739405e-05, 1.959700e-05, 9.701120e-06, 5.985709e-06, 4.219319e-06],
            [3.332128e-05, 8.631923e-06, 4.199497e-06, 2.625912e-06, 1.945626e-06],
        ]),
    ];
    for (r, series) in table {
        let rep = report(&radiation_study(*r));
        // The two-point rows match to printed precision. The three-point rows sit
        // within 1% or 1e-9 of this reference; no other fine-march reference
        // brings them closer.
        assert_series(&rep, "T", &series[0], 1e-5, 0.0);
        assert_series(&rep, "GR", &series[1], 1e-5, 0.0);
        assert_series(&rep, "GL", &series[2], 1e-2, 1e-9);
        assert_series(&rep, "NC", &series[3], 1e-2, 1e-9);
    }
}

#[test]
fn heat_integral_form_with_legendre_first_step() {
    let rep = report(
        r#"{
      "name": "heat_legendre_first_step",
      "problem": "heat",
      "methods": [
        { "label": "CEQR2 G", "scheme": "ceqr2", "nodes": { "family": "gauss", "nu": 2 } },
        { "label": "I", "scheme": "eqrf", "nodes": { "family": "gauss", "nu": 2 },
          "formulation": { "kind": "integral", "n_quad": 16, "first_step": "gauss_legendre" } },
        { "label": "F", "scheme": "eqrf", "nodes": { "family": "gauss", "nu": 2 } }
      ],
      "N": [20, 40, 60, 80, 100]
    }"#,
    );
    #[rustfmt::skip]
    let ceqr2 = [1.0024703346323e-06, 3.19085029620858e-07, 1.59602859817198e-07, 9.7213336380797e-08, 6.60789259976369e-08];
    #[rustfmt::skip]
    let integral = [2.19619727737096e-07, 3.20239492701546e-08, 1.098343171968e-08, 5.20906517920139e-09, 2.93394386563506e-09];
    #[rustfmt::skip]
    let fractional = [2.21060592831002e-07, 3.24374891391699e-08, 1.11837348271138e-08, 5.32910504613683e-09, 3.0147286889104e-09];
    assert_series(&rep, "CEQR2 G", &ceqr2, 1e-3, 0.0);
    assert_series(&rep, "I", &integral, 1e-3, 0.0);
    assert_series(&rep, "F", &fractional, 1e-3, 0.0);
}
