//! Split-chain potential scale reduction and effective sample size.

use serde::{Deserialize, Serialize};

use super::InferenceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostic {
    pub name: String,
    pub rhat: f64,
    pub ess: f64,
}

fn check(chains: &[Vec<f64>]) -> Result<usize, InferenceError> {
    if chains.len() < 2 {
        return Err(InferenceError::InsufficientDraws(format!("{} chain(s), at least 2 required", chains.len())));
    }
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < 4 {
        return Err(InferenceError::InsufficientDraws(format!("{n} draws per chain, at least 4 required")));
    }
    Ok(n)
}

/// Each chain cut to the common length and halved.
fn split(chains: &[Vec<f64>], n: usize) -> Vec<&[f64]> {
    let half = n / 2;
    chains.iter().flat_map(|c| [&c[..half], &c[n - half..n]]).collect()
}

struct Moments {
    means: Vec<f64>,
    within: f64,
    var_plus: f64,
    between: f64,
}

fn moments(parts: &[&[f64]]) -> Moments {
    let m = parts.len() as f64;
    let n = parts[0].len() as f64;
    let means: Vec<f64> = parts.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let between = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let within = parts
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    let var_plus = (n - 1.0) / n * within + between / n;
    Moments { means, within, var_plus, between }
}

/// Split R̂ for one scalar parameter. Constant identical chains give 1;
/// constant but different chains give infinity.
pub fn rhat(chains: &[Vec<f64>]) -> Result<f64, InferenceError> {
    let n = check(chains)?;
    let mo = moments(&split(chains, n));
    if mo.within <= 0.0 {
        return Ok(if mo.between <= 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok((mo.var_plus / mo.within).sqrt())
}

/// Multi-chain effective sample size on split chains, with Geyer's initial
/// monotone sequence truncation of the autocorrelation sum.
pub fn ess(chains: &[Vec<f64>]) -> Result<f64, InferenceError> {
    let n = check(chains)?;
    let parts = split(chains, n);
    let m = parts.len();
    let len = parts[0].len();
    let total = (m * len) as f64;
    let mo = moments(&parts);
    if mo.within <= 0.0 || mo.var_plus <= 0.0 {
        return Ok(total);
    }

    // Biased autocovariance at `lag`, averaged over split chains.
    let acov = |lag: usize| -> f64 {
        parts
            .iter()
            .zip(&mo.means)
            .map(|(c, mu)| (0..len - lag).map(|i| (c[i] - mu) * (c[i + lag] - mu)).sum::<f64>() / len as f64)
            .sum::<f64>()
            / m as f64
    };
    let acov0 = acov(0);
    let rho = |lag: usize| 1.0 - (acov0 - acov(lag)) * (len as f64 / (len as f64 - 1.0)) / mo.var_plus;
    let rho = |lag: usize| if lag == 0 { 1.0 } else { rho(lag) };

    let mut sum_pairs = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < len {
        let mut pair = rho(t) + rho(t + 1);
        if pair < 0.0 {
            break;
        }
        pair = pair.min(prev_pair);
        sum_pairs += pair;
        prev_pair = pair;
        t += 2;
    }
    let tau = (-1.0 + 2.0 * sum_pairs).max(1.0 / total.log10().max(1.0));
    Ok((total / tau).min(total * total.log10().max(1.0)))
}
