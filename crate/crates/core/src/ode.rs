//! Fixed-step RK4 over jet-valued states, so sensitivities ride along with
//! the trajectory.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::ChartManifold;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::form::SmoothMap;
use crate::jet::{constants, values, Jet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    /// Total RK4 steps over the unit parameter interval.
    pub steps: usize,
    /// Record a checkpoint every this many steps.
    pub checkpoint_every: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            steps: 2000,
            checkpoint_every: 20,
        }
    }
}

impl IntegratorSettings {
    pub fn with_steps(steps: usize) -> Self {
        IntegratorSettings {
            steps,
            checkpoint_every: (steps / 100).max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.checkpoint_every == 0 {
            return Err(Error::InvalidParameter(
                "integrator needs at least one step".to_string(),
            ));
        }
        Ok(())
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` in `steps` equal steps.
/// `observe` sees every accepted state (including the initial one) and may
/// abort the integration by returning an error.
pub fn rk4<F, O>(mut f: F, t0: Jet, t1: Jet, y0: Vec<Jet>, steps: usize, mut observe: O) -> Result<Vec<Jet>>
where
    F: FnMut(Jet, &[Jet]) -> Result<Vec<Jet>>,
    O: FnMut(usize, Jet, &[Jet]) -> Result<()>,
{
    let n = y0.len();
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    observe(0, t0, &y)?;
    let mut tmp = vec![Jet::zero(); n];
    for k in 0..steps {
        let t = t0 + h * k as f64;
        let k1 = f(t, &y)?;
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * h * 0.5;
        }
        let k2 = f(t + h * 0.5, &tmp)?;
        for i in 0..n {
            tmp[i] = y[i] + k2[i] * h * 0.5;
        }
        let k3 = f(t + h * 0.5, &tmp)?;
        for i in 0..n {
            tmp[i] = y[i] + k3[i] * h;
        }
        let k4 = f(t + h, &tmp)?;
        for i in 0..n {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        observe(k + 1, t0 + h * (k + 1) as f64, &y)?;
    }
    Ok(y)
}

fn domain_guard(chart: &ChartManifold, t: Jet, y: &[Jet]) -> Result<()> {
    let mut x = values(y);
    chart.normalize(&mut x);
    chart.check(&x).map_err(|e| Error::LeftDomain {
        t: t.value(),
        reason: e.to_string(),
    })
}

/// Time-`time` flow of an autonomous field on jets.
pub fn flow_jet(field: &VectorField, x0: &[Jet], time: Jet, steps: usize) -> Result<Vec<Jet>> {
    let chart = Arc::clone(field.chart());
    rk4(
        |_, y| Ok(field.eval_jet(y)),
        Jet::zero(),
        time,
        x0.to_vec(),
        steps,
        |_, t, y| domain_guard(&chart, t, y),
    )
}

pub fn flow(field: &VectorField, x0: &[f64], time: f64, steps: usize) -> Result<Vec<f64>> {
    Ok(values(&flow_jet(field, &constants(x0), Jet::constant(time), steps)?))
}

/// The flow as a smooth map; its differential comes from jets pushed
/// through the integrator. Points leaving the domain map to NaN.
pub fn flow_map(field: &VectorField, time: f64, steps: usize) -> SmoothMap {
    let field = field.clone();
    let chart = Arc::clone(field.chart());
    SmoothMap::new(&chart, &chart, move |x| {
        flow_jet(&field, x, Jet::constant(time), steps)
            .unwrap_or_else(|_| vec![Jet::constant(f64::NAN); x.len()])
    })
}
