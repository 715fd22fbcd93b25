//! Phase-transition window extraction from a success curve.

use crate::error::{HarnessError, Result};

/// Transition window of a success curve sampled on a query grid.
///
/// Returns `(m_10, m_90)`: the smallest grid `m` whose rate reaches 0.1 and
/// the smallest whose rate reaches 0.9. The curve is read literally at its
/// grid points (a step function has width zero), so widths are quantized to
/// the grid spacing; comparisons between curves should share one grid.
pub fn transition_window(curve: &[(usize, f64)]) -> Result<(f64, f64)> {
    if curve.is_empty() {
        return Err(HarnessError::Window("empty curve".into()));
    }
    for window in curve.windows(2) {
        if window[1].0 <= window[0].0 {
            return Err(HarnessError::Window(format!(
                "grid must be strictly increasing, got {} then {}",
                window[0].0, window[1].0
            )));
        }
    }
    for &(m, rate) in curve {
        if !(0.0..=1.0).contains(&rate) {
            return Err(HarnessError::Window(format!(
                "rate {rate} at m = {m} outside [0, 1]"
            )));
        }
    }
    let first_at = |level: f64| curve.iter().find(|&&(_, r)| r >= level).map(|&(m, _)| m as f64);
    let m90 = first_at(0.9).ok_or_else(|| {
        HarnessError::Window("curve never reaches a success rate of 0.9".into())
    })?;
    let m10 = first_at(0.1).expect("0.9 was reached, so 0.1 is too");
    Ok((m10, m90))
}
