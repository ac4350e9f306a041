use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reliability, maintainability and logistics figures, all in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityInputs {
    /// Mean time between failures.
    pub mtbf: f64,
    /// Mean time to repair.
    pub mttr: f64,
    /// Mean time for spares.
    pub mtfs: f64,
}

/// `A = MTBF / (MTBF + MTTR + MTFS)`.
pub fn availability(inputs: &AvailabilityInputs) -> Result<f64> {
    let AvailabilityInputs { mtbf, mttr, mtfs } = *inputs;
    for (name, v) in [("mtbf", mtbf), ("mttr", mttr), ("mtfs", mtfs)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidArgument(format!("{name} must be finite and ≥ 0, got {v}")));
        }
    }
    let denominator = mtbf + mttr + mtfs;
    if denominator <= 0.0 {
        return Err(Error::InvalidArgument("MTBF + MTTR + MTFS must be positive".into()));
    }
    Ok(mtbf / denominator)
}

/// Formats with six significant digits, the way the CLI prints availability.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{:.*}", digits.saturating_sub(1), value);
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{value:.decimals$}");
    // rounding may carry into a new digit (0.9999996 → 1.000000)
    let rounded: f64 = s.parse().unwrap_or(value);
    if rounded != 0.0 && (rounded.abs().log10().floor() as i32) > magnitude {
        let decimals = (digits as i32 - 2 - magnitude).max(0) as usize;
        return format!("{value:.decimals$}");
    }
    s
}
