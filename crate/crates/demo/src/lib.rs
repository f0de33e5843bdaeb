//! Browser bindings for the demo page. Every entry point returns a JSON
//! string; failures come back as `{"error": kind, "message": text}`.

use faer::c64;
use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use gudisc::closedform2d::{closed_form_pe, closed_form_povm, ClosedFormPovm, RotationExampleParams};
use gudisc::ensemble::{ppm_ensemble, GuEnsemble};
use gudisc::operators::{eigenstructure, EigenStructure, Tolerances};
use gudisc::povm::{
    expand_povm, reference_success_probability, solve_and_recover, srm_reference, verify_optimality, RecoveryOptions,
};
use gudisc::sdp::{count_variables, solve_dp3, BlockSpec, ProblemKind, SolverOptions};
use gudisc::{Error, Result};

/// Largest PPM dimension the page will solve in the browser.
const PPM_DIM_LIMIT: usize = 64;
const VERIFY_TOL: f64 = 1e-6;

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.kind(), "message": e.to_string() }).to_string(),
    }
}

fn eig(e: &GuEnsemble) -> Result<EigenStructure> {
    eigenstructure(e.symmetry(), Tolerances::default().grouping)
}

#[derive(Serialize)]
struct Entry {
    re: f64,
    im: f64,
}

fn entries(m: faer::MatRef<'_, c64>) -> Vec<Vec<Entry>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Entry { re: m[(i, j)].re, im: m[(i, j)].im }).collect()).collect()
}

fn rotation(m: usize, alpha: f64, beta: f64) -> Result<Value> {
    let p = RotationExampleParams::new(m, alpha, beta)?;
    let e = p.ensemble()?;
    let eig = eig(&e)?;
    let (x, report, rec) = solve_and_recover(&e, &eig, &SolverOptions::default(), &RecoveryOptions::default())?;
    let povm = expand_povm(&rec.pi0, e.symmetry(), m)?;
    let check = verify_optimality(&e, &povm, &x, VERIFY_TOL)?;
    let srm_pe = 1.0 - reference_success_probability(&e, &srm_reference(&e)?);
    let closed_pi0 = match closed_form_povm(&p) {
        ClosedFormPovm::Reference(pi) => Some(entries(pi.as_ref())),
        ClosedFormPovm::NoClosedForm => None,
    };
    Ok(json!({
        "M": m,
        "alpha": alpha,
        "beta": beta,
        "closed_form_pe": closed_form_pe(&p),
        "numerical_pe": report.p_error,
        "srm_pe": srm_pe,
        "pi0": entries(rec.pi0.as_ref()),
        "closed_form_pi0": closed_pi0,
        "iterations": report.iterations,
        "newton_steps": report.newton_steps,
        "verdict": check.verdict,
    }))
}

/// Solves the 2×2 rotation example and compares it with its closed form.
#[wasm_bindgen]
pub fn rotation_example(m: usize, alpha: f64, beta: f64) -> String {
    respond(rotation(m, alpha, beta))
}

fn curve(m: usize, beta: f64, points: usize) -> Result<Value> {
    if points < 2 {
        return Err(Error::InvalidInput("at least two points are needed".into()));
    }
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let alpha = k as f64 / (points - 1) as f64;
        // skip α where β leaves the Bloch disc
        let Ok(p) = RotationExampleParams::new(m, alpha, beta) else { continue };
        let e = p.ensemble()?;
        let (_, report) = solve_dp3(&e, &eig(&e)?, &SolverOptions::default())?;
        let srm_pe = 1.0 - reference_success_probability(&e, &srm_reference(&e)?);
        rows.push(json!({
            "alpha": alpha,
            "closed_form_pe": closed_form_pe(&p),
            "numerical_pe": report.p_error,
            "srm_pe": srm_pe,
        }));
    }
    Ok(json!({ "M": m, "beta": beta, "points": rows }))
}

/// Error probability of the rotation example along α for fixed M and β.
#[wasm_bindgen]
pub fn error_curve(m: usize, beta: f64, points: usize) -> String {
    respond(curve(m, beta, points))
}

fn reduction(m: usize, theta: f64) -> Result<Value> {
    let pulse = [c64::new(1.0, 0.0), c64::new(0.0, 0.0)];
    let idle = [c64::new(theta.cos(), 0.0), c64::new(theta.sin(), 0.0)];
    let e = ppm_ensemble(2, m, &pulse, &idle, PPM_DIM_LIMIT)?;
    let eig = eig(&e)?;
    let spec = BlockSpec::new(eig.multiplicities().to_vec())?;
    let n = e.dim();
    let counts = ProblemKind::ALL
        .iter()
        .map(|&kind| {
            let s = (kind == ProblemKind::DP3).then_some(&spec);
            count_variables(kind, n, m, s).map(|c| json!({ "kind": kind.name(), "d": c.d, "Ce": c.ce, "Ci": c.ci }))
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, report) = solve_dp3(&e, &eig, &SolverOptions::default())?;
    let srm_pe = 1.0 - reference_success_probability(&e, &srm_reference(&e)?);
    Ok(json!({
        "N": n,
        "M": m,
        "block_sizes": eig.multiplicities(),
        "counts": counts,
        "pe": report.p_error,
        "srm_pe": srm_pe,
        "warnings": e.warnings(),
    }))
}

/// Block structure, variable counts and error probability of a binary PPM
/// ensemble with M slots and pulse/idle overlap cos θ.
#[wasm_bindgen]
pub fn ppm_reduction(m: usize, theta: f64) -> String {
    respond(reduction(m, theta))
}
