use crate::error::{Error, Result};
use crate::graph::{EdgeMatrix, WeightMatrix};

/// `η_t = e^{−t}(η₀ + ∫₀ᵗ eˢ ω_s ds)` at every grid time, with `ω` sampled on
/// the grid.
///
/// The integral is taken with `ω` linear between samples and `eˢ` integrated
/// exactly, so a constant `ω` is reproduced to rounding and the error is
/// `O(dt²)` otherwise.
pub fn eta_exact_all(
    eta0: &WeightMatrix,
    times: &[f64],
    omega_samples: &[WeightMatrix],
) -> Result<Vec<WeightMatrix>> {
    if times.len() != omega_samples.len() {
        return Err(Error::Dimension {
            context: "weight-target samples",
            expected: times.len(),
            found: omega_samples.len(),
        });
    }
    if times.first().is_some_and(|&t0| t0 != 0.0) {
        return Err(Error::Validation("time grid must start at 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Validation(
            "time grid must be strictly increasing".into(),
        ));
    }
    let n = eta0.n();
    if let Some(w) = omega_samples.iter().find(|w| w.n() != n) {
        return Err(Error::Dimension {
            context: "weight-target samples",
            expected: n,
            found: w.n(),
        });
    }

    let mut out = Vec::with_capacity(times.len());
    let mut eta = eta0.clone();
    out.push(eta.clone());
    for k in 1..times.len() {
        let h = times[k] - times[k - 1];
        let em1 = (-h).exp_m1();
        let decay = 1.0 + em1;
        // weights of ω_{k−1} and ω_k in e^{−h}∫₀ʰ e^u ω(u) du
        let a = (-em1 - h * decay) / h;
        let b = (h + em1) / h;
        let (w0, w1) = (&omega_samples[k - 1], &omega_samples[k]);
        let v = (0..n * n)
            .map(|p| decay * eta.as_slice()[p] + a * w0.as_slice()[p] + b * w1.as_slice()[p])
            .collect();
        eta = EdgeMatrix::from_row_major(n, v)?;
        out.push(eta.clone());
    }
    Ok(out)
}

/// `η` at grid index `t_index`; see [`eta_exact_all`].
pub fn eta_exact(
    eta0: &WeightMatrix,
    times: &[f64],
    omega_samples: &[WeightMatrix],
    t_index: usize,
) -> Result<WeightMatrix> {
    if t_index >= times.len() {
        return Err(Error::Validation(format!(
            "time index {t_index} out of range for {} samples",
            times.len()
        )));
    }
    let k = t_index + 1;
    let mut all = eta_exact_all(
        eta0,
        &times[..k],
        &omega_samples[..k.min(omega_samples.len())],
    )?;
    Ok(all.pop().expect("non-empty"))
}

/// Whether `min η₀ ≥ ‖ω₋‖_∞ (e^T − 1)`, the condition under which the
/// weights stay nonnegative on `[0, T]`.
pub fn eta_nonnegativity_gate(eta0: &WeightMatrix, omega_negative_sup: f64, horizon: f64) -> bool {
    eta0.min_off_diagonal() >= omega_negative_sup * horizon.exp_m1()
}
