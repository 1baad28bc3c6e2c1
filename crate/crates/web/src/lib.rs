//! wasm-bindgen bindings behind `www/index.html`.
//!
//! Each export returns plain numbers or a JSON string so the page needs no
//! glue beyond the generated module.

use serde_json::json;
use stablegw::analysis::beta_value;
use stablegw::discrete::{reduce, sample_conditioned, DEFAULT_NODE_CAP};
use stablegw::offspring::{coupled_sample, shared_theta, OffspringDist};
use stablegw::rde::{cdf_tail, fit_shape_on_12, solve_gamma, SolveOptions};
use stablegw::streams::{substream, Tag};
use wasm_bindgen::prelude::*;

const MAX_POOL: usize = 200_000;
const MAX_LEVEL: u32 = 40;
const RETRY_BUDGET: u64 = 1_000_000;

fn js_err(e: stablegw::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Solve for the conductance law and summarise it: iteration count, stop
/// rule, moments, the shape fit on [1, 2], the β point estimate and the
/// tail `P(C ≥ t)` on `points` log-spaced values of t in [1, t_max].
#[wasm_bindgen]
pub fn solve(alpha: f64, pool_size: usize, seed: u64, points: usize, t_max: f64) -> Result<String, JsError> {
    if !(2..=MAX_POOL).contains(&pool_size) {
        return Err(JsError::new(&format!("pool size must be in 2..={MAX_POOL}")));
    }
    if points < 2 || !(t_max > 1.0) {
        return Err(JsError::new("need at least 2 points and t_max > 1"));
    }
    let pool = solve_gamma(alpha, &SolveOptions { pool_size, seed, ..Default::default() }).map_err(js_err)?;
    let fit = fit_shape_on_12(&pool);
    let beta = beta_value(&pool, seed);
    let tail: Vec<[f64; 2]> = (0..points)
        .map(|i| {
            let t = t_max.powf(i as f64 / (points - 1) as f64);
            [t, cdf_tail(&pool, t)]
        })
        .collect();
    Ok(json!({
        "alpha": alpha,
        "iterations": pool.iterations,
        "stop_rule": pool.stop_rule,
        "mean": pool.mean(),
        "min": pool.min(),
        "max": pool.max(),
        "d": fit.d,
        "sup_err": fit.sup_err,
        "beta": beta.point,
        "beta_ci": [beta.ci_low, beta.ci_high],
        "tail": tail,
    })
    .to_string())
}

/// θ_α probabilities for k = 0..=k_max.
#[wasm_bindgen]
pub fn theta_pmf(alpha: f64, k_max: u32) -> Result<Vec<f64>, JsError> {
    let d = shared_theta(alpha).map_err(js_err)?;
    Ok((0..=k_max as u64).map(|k| d.pmf(k)).collect())
}

/// Coupled offspring counts: the θ quantile at `u_i = (i + 1/2)/n` for
/// each α in `alphas`, one row per `u_i`, row-major. Counts saturate at
/// `u32::MAX`.
#[wasm_bindgen]
pub fn coupled_quantiles(alphas: Vec<f64>, n: usize) -> Result<Vec<u32>, JsError> {
    let mut out = Vec::with_capacity(n * alphas.len());
    for i in 0..n {
        let u = (i as f64 + 0.5) / n as f64;
        for &a in &alphas {
            let k = coupled_sample(u, a).map_err(js_err)?;
            out.push(k.min(u32::MAX as u64) as u32);
        }
    }
    Ok(out)
}

/// A ρ_α tree conditioned to reach level `n`, reduced to its vertices with
/// descendants at level `n`. JSON with the parent, generation and harmonic
/// mass of every vertex, plus the conductance and the number of attempts.
#[wasm_bindgen]
pub fn harmonic_tree(alpha: f64, n: u32, seed: u64) -> Result<String, JsError> {
    if !(1..=MAX_LEVEL).contains(&n) {
        return Err(JsError::new(&format!("level must be in 1..={MAX_LEVEL}")));
    }
    let rho = OffspringDist::rho_canonical(alpha).map_err(js_err)?;
    let mut rng = substream(seed, Tag::Discrete, n as u64, 0);
    let c = sample_conditioned(&rho, n, DEFAULT_NODE_CAP, RETRY_BUDGET, &mut rng).map_err(js_err)?;
    let t = reduce(&c.tree, n).map_err(js_err)?;
    let nodes: Vec<_> = t.nodes.iter().enumerate().map(|(i, v)| json!([if i == 0 { -1 } else { v.parent as i64 }, v.generation, v.log_mu.exp()])).collect();
    Ok(json!({
        "n": n,
        "conductance": t.conductance_n(),
        "entropy": t.entropy(),
        "attempts": c.attempts,
        "full_size": c.tree.len(),
        "nodes": nodes,
    })
    .to_string())
}
