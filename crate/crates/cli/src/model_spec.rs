//! Textual model specifications: `cusp`, `cusp:alpha=0.2,epsilon=0.3` or
//! `bimodal-unistable`.

use landscaper::sim::{cusp_model, custom_bimodal_unistable, CuspParams, SdeModel};

use crate::error::{CliError, CliResult};

/// Cusp parameters used when a specification leaves them out.
pub const DEFAULT_CUSP: CuspParams = CuspParams { alpha: 0.0, beta: 1.0, lambda: 0.0, r: 1.0, epsilon: 0.5 };

pub const DEFAULT_MODEL: &str = "cusp";

pub fn parse_model(spec: &str) -> CliResult<SdeModel> {
    let (name, params) = match spec.split_once(':') {
        Some((n, p)) => (n.trim(), Some(p)),
        None => (spec.trim(), None),
    };
    match name {
        "cusp" => {
            let mut p = DEFAULT_CUSP;
            for token in params.unwrap_or("").split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let (key, value) = token
                    .split_once('=')
                    .ok_or_else(|| CliError::parse(format!("model parameter `{token}` is not of the form key=value")))?;
                let v: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| CliError::parse(format!("model parameter `{token}` has a non-numeric value")))?;
                match key.trim() {
                    "alpha" => p.alpha = v,
                    "beta" => p.beta = v,
                    "lambda" => p.lambda = v,
                    "r" => p.r = v,
                    "epsilon" => p.epsilon = v,
                    other => return Err(CliError::parse(format!("unknown cusp parameter `{other}`"))),
                }
            }
            p.validate().map_err(|e| CliError::parse(format!("model `{spec}`: {e}")))?;
            Ok(cusp_model(p))
        }
        "bimodal-unistable" => match params {
            Some(p) if !p.trim().is_empty() => {
                Err(CliError::parse(format!("model `bimodal-unistable` takes no parameters, got `{p}`")))
            }
            _ => Ok(custom_bimodal_unistable()),
        },
        other => Err(CliError::parse(format!("unknown model `{other}` (expected `cusp` or `bimodal-unistable`)"))),
    }
}
