//! Extrapolation of `lim_{p -> inf} f(p)` from samples on a geometric grid.

use crate::error::{Error, Result};
use crate::kernels::ExtendedReal;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct LimitOptions {
    /// Grid points per decade of `p`.
    pub per_decade: usize,
    /// Agreement required between successive extrapolants.
    pub rel_tol: f64,
    /// Growth per decade at the top of the grid that counts as divergence.
    pub divergence_ratio: f64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            per_decade: 4,
            rel_tol: 1e-4,
            divergence_ratio: 1.1,
        }
    }
}

fn aitken<T: Real>(v0: T, v1: T, v2: T) -> T {
    let d1 = v1 - v0;
    let d2 = v2 - v1;
    let den = d2 - d1;
    // second differences below round-off of the triple itself carry no information
    let local = v0.abs().max(v1.abs()).max(v2.abs());
    if den.abs() <= T::lit(16.0) * T::epsilon() * local {
        v2
    } else {
        v2 - d2 * d2 / den
    }
}

/// Samples `f` at `p_min * 10^(k / per_decade)` up to `p_max` and decides
/// whether the sequence converges (Aitken-accelerated), diverges to `+inf`
/// (monotone growth above `divergence_ratio` per decade), or neither.
///
/// Limits below `1e-9` of the sampled magnitude are reported as exactly zero.
pub fn geometric_limit<T, F>(mut f: F, p_min: T, p_max: T, opts: &LimitOptions) -> Result<ExtendedReal<T>>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let per = opts.per_decade.max(2);
    let decades = (p_max / p_min).log10().to_f64().unwrap_or(0.0);
    let steps = (decades * per as f64).round() as usize;
    if steps < 2 * per + 2 {
        return Err(Error::Input(format!(
            "limit grid needs more than two decades, got [{p_min}, {p_max}]"
        )));
    }
    let ratio = T::lit(10f64.powf(1.0 / per as f64));
    let mut values = Vec::with_capacity(steps + 1);
    let mut p = p_min;
    for _ in 0..=steps {
        let v = f(p)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "limit extrapolation",
                at: p.to_f64().unwrap_or(f64::NAN),
            });
        }
        values.push(v);
        p *= ratio;
    }
    let n = values.len();
    let scale = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return Ok(ExtendedReal::Finite(T::zero()));
    }

    let top = &values[n - per - 1..];
    let increasing = top.windows(2).all(|w| w[1] > w[0]);
    let growth = top[per] / top[0];
    if increasing && top[0] > T::zero() && growth > T::lit(opts.divergence_ratio) {
        return Ok(ExtendedReal::Infinite);
    }

    // Aitken on decade-spaced triples, at the last and second-to-last point
    let tol = T::lit(opts.rel_tol);
    let floor = T::lit(1e-9).max(T::lit(16.0) * T::epsilon()) * scale;
    let triple = |end: usize| (values[end - 2 * per], values[end - per], values[end]);
    let (x0, x1, x2) = triple(n - 1);
    let (y0, y1, y2) = triple(n - 2);
    let contracting = (x2 - x1).abs() <= (x1 - x0).abs() && (y2 - y1).abs() <= (y1 - y0).abs();
    if contracting && n > 2 * per + 1 {
        let a = aitken(x0, x1, x2);
        let b = aitken(y0, y1, y2);
        if (a - b).abs() <= (tol * a.abs()).max(floor) {
            let limit = if a.abs() <= floor { T::zero() } else { a };
            if limit < T::zero() {
                return Err(Error::Indeterminate(format!(
                    "extrapolated limit {limit} is negative"
                )));
            }
            return Ok(ExtendedReal::Finite(limit));
        }
    }
    // a flat top decade is accepted as converged even when round-off keeps
    // the increments from contracting
    let last = values[n - 1];
    let flat = top.iter().all(|&v| (v - last).abs() <= tol * last.abs().max(floor));
    if flat {
        let limit = if last.abs() <= floor { T::zero() } else { last };
        if limit >= T::zero() {
            return Ok(ExtendedReal::Finite(limit));
        }
    }
    Err(Error::Indeterminate(format!(
        "neither convergence nor growth detected up to p = {p_max} (last values {}, {})",
        values[n - 2],
        values[n - 1]
    )))
}
