//! Generating Hamiltonians of parallel transport and their scaling in a
//! deformation parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibration::{lift_from_fiber, ContactFibration};
use crate::jet::{constants, values};
use crate::ode::IntegratorSettings;
use crate::paths::BasePath;

/// `sup |H_t|` along lifts of `path` from the given fiber points, where
/// `H_t = α(X_vertical)` is the generating Hamiltonian of the transport.
pub fn sup_holonomy_hamiltonian(fib: &ContactFibration, path: &BasePath, fiber_points: &[Vec<f64>], settings: &IntegratorSettings) -> Result<f64> {
    let zero_base = vec![0.0; fib.base_coords().len()];
    let mut sup: f64 = 0.0;
    for v0 in fiber_points {
        let traj = lift_from_fiber(fib, path, v0, settings)?;
        if let Some(d) = &traj.diagnostic {
            return Err(Error::Precondition(format!("lift from {v0:?} stopped: {d}")));
        }
        for (t, x) in traj.checkpoints(settings.checkpoint_every) {
            let u = path.velocity(t);
            let lift = values(&fib.horizontal_lift_jet(&constants(&x), &constants(&u))?);
            let (vert, _) = fib.split(&lift);
            let v = fib.assemble_raw(&vert, &zero_base);
            sup = sup.max(fib.total().alpha_on(&x, &v).abs());
        }
    }
    Ok(sup)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomyFit {
    pub params: Vec<f64>,
    pub sup_h: Vec<f64>,
    /// Least-squares slope of `sup|H|` against `|param|` through the origin.
    pub slope: f64,
    /// `‖residual‖ / ‖sup|H|‖`.
    pub relative_residual: f64,
    pub linear: bool,
}

/// Fits `sup|H| ≈ M |param|` through the origin.
pub fn fit_linear(params: &[f64], sup_h: &[f64], max_residual: f64) -> Result<HolonomyFit> {
    if params.len() != sup_h.len() || params.len() < 2 {
        return Err(Error::InvalidParameter("need at least two matching sweep points".into()));
    }
    let sxx: f64 = params.iter().map(|p| p * p).sum();
    let sxy: f64 = params.iter().zip(sup_h).map(|(p, h)| p.abs() * h).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all sweep parameters are zero".into()));
    }
    let slope = sxy / sxx;
    let res: f64 = params
        .iter()
        .zip(sup_h)
        .map(|(p, h)| (h - slope * p.abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = sup_h.iter().map(|h| h * h).sum::<f64>().sqrt();
    let relative_residual = if norm > 0.0 { res / norm } else { 0.0 };
    Ok(HolonomyFit {
        params: params.to_vec(),
        sup_h: sup_h.to_vec(),
        slope,
        relative_residual,
        linear: relative_residual <= max_residual && slope.is_finite(),
    })
}

/// Sweeps a parameter, building one fibration per value, and fits the
/// holonomy bound.
pub fn estimate_holonomy_bound<B>(
    params: &[f64],
    build: B,
    path: &BasePath,
    fiber_points: &[Vec<f64>],
    settings: &IntegratorSettings,
    max_residual: f64,
) -> Result<HolonomyFit>
where
    B: Fn(f64) -> Result<ContactFibration>,
{
    let mut sup = Vec::with_capacity(params.len());
    for &p in params {
        let fib = build(p)?;
        sup.push(sup_holonomy_hamiltonian(&fib, path, fiber_points, settings)?);
    }
    fit_linear(params, &sup, max_residual)
}
