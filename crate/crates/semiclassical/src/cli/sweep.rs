use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::scenarios::{harmonic_expansion_errors, propagator_mismatch, squeeze_flow_error, vector_field_residual};
use crate::error::{Error, Result};
use crate::quadrature::loglog_slope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    /// Semiclassical parameter: expansion error on the harmonic orbit.
    Lambda,
    /// RK4 step: squeeze flow against its closed form.
    Dt,
    /// Finite-difference step: su(1,1) vector-field algebra residual.
    H,
    /// Fock cutoff: Gaussian against direct propagation of squeezed vacuum.
    N,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Lambda => "lambda",
            SweepParam::Dt => "dt",
            SweepParam::H => "h",
            SweepParam::N => "N",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" | "λ" => Ok(SweepParam::Lambda),
            "dt" => Ok(SweepParam::Dt),
            "h" => Ok(SweepParam::H),
            "N" | "n" => Ok(SweepParam::N),
            other => Err(Error::Config(format!("unknown sweep parameter {other:?}; expected lambda, dt, h or N"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepTable {
    pub parameter: String,
    pub grid: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of log residual against log parameter.
    pub slope: f64,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Config(format!("writing table: {e}"));
        out.write_record([self.parameter.as_str(), "residual"]).map_err(io)?;
        for (p, r) in self.grid.iter().zip(&self.residuals) {
            out.write_record([format!("{p:e}"), format!("{r:e}")]).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Config(format!("writing table: {e}")))
    }
}

/// Residual of one configured check at each grid value, with its log-log slope.
pub fn sweep(cfg: &ScenarioConfig, param: SweepParam, grid: &[f64]) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    if grid.len() < 3 {
        return Err(Error::Config(format!("sweep needs at least 3 grid points to fit a slope, got {}", grid.len())));
    }
    if grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Config("sweep grid values must be positive".into()));
    }
    let (kappa, t, dt) = (cfg.model.kappa, cfg.run.t, cfg.run.dt);
    let residuals = match param {
        SweepParam::Lambda => harmonic_expansion_errors(grid)?.0,
        SweepParam::Dt => grid.par_iter().map(|s| squeeze_flow_error(kappa, t, *s)).collect::<Result<Vec<_>>>()?,
        SweepParam::H => grid.par_iter().map(|h| vector_field_residual(*h, dt)).collect::<Result<Vec<_>>>()?,
        SweepParam::N => {
            if grid.iter().any(|n| n.fract() != 0.0) {
                return Err(Error::Config("N grid values must be integers".into()));
            }
            grid.par_iter().map(|n| Ok(propagator_mismatch(kappa, t, dt, *n as usize)?.0)).collect::<Result<Vec<_>>>()?
        }
    };
    let slope = loglog_slope(grid, &residuals)
        .ok_or_else(|| Error::NonConvergent("slope fit is degenerate (residuals at rounding level or grid repeated)".into()))?;
    Ok(SweepTable { parameter: param.name().into(), grid: grid.to_vec(), residuals, slope })
}
