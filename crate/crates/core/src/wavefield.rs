//! Green's function `u(t, x)` of the viscoelastic wave equation with an
//! impulsive velocity source, by quadrature along a Bromwich line.
//!
//! With `F(p) = e^(p t - kappa(p) |x|) / (Q(p) kappa(p))` the field is
//! `u = rho / (4 pi i) int F(p) dp` over `Re p = sigma`. Conjugate symmetry
//! reduces this to `rho / (2 pi) Re int_0^inf F(sigma + i y) dy`.
//!
//! The abscissa `sigma` minimises the real-axis envelope
//! `Phi(sigma) = sigma t - kappa(sigma) |x|` (convex, since `kappa` is concave
//! on the positive axis), bounded below by `shift_factor / |t|`. Where `Phi`
//! keeps decreasing (`t < 0`, or outside a finite-speed cone) the line is
//! pushed right until the envelope has dropped by `e^-600`: this is the
//! numerical form of closing the contour to the right. The factor `e^Phi` is
//! taken out of the integrand, so values far below the underflow threshold of
//! the raw integrand remain resolvable.
//!
//! For finite wavefront speed the `1/p` tail
//! `(c / G0) e^(p (t - |x|/c) - b |x|) / p` is subtracted and added back in
//! closed form as `e^(-b |x|) H(t - |x|/c) / (2 c)`. The remaining oscillatory
//! tail is summed in half-period panels and accelerated with Wynn's epsilon
//! algorithm.

use std::cell::RefCell;
use std::io::Write;

use num_complex::Complex;
use serde::Serialize;

use crate::dispersion::{bounded_attenuation_limit, c_infinity, wavenumber};
use crate::duality::fmt12;
use crate::error::{Error, Result};
use crate::kernels::{ExtendedReal, MaterialModel};
use crate::quad::{integrate_complex, QuadOptions};
use crate::scalar::Real;

/// Integration controls for [`green_point`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenControls {
    /// Lower bound of the Bromwich abscissa in units of `1/|t|`.
    pub shift_factor: f64,
    /// Relative accuracy requested from the accelerated tail sum.
    pub tail_tol: f64,
    /// Relative tolerance of each quadrature panel.
    pub quad_rel_tol: f64,
    /// Upper bound on the number of tail panels.
    pub max_panels: usize,
    /// Subtract the closed-form `1/p` tail of finite-speed models.
    pub subtract_asymptote: bool,
}

impl Default for GreenControls {
    fn default() -> Self {
        Self {
            shift_factor: 1.0,
            tail_tol: 1e-10,
            quad_rel_tol: 1e-10,
            max_panels: 4000,
            subtract_asymptote: true,
        }
    }
}

/// Envelope drop after which a still-decreasing `Phi` stops being followed;
/// `e^-600` is below every resolvable amplitude in double precision.
const PUSH_DECAY: f64 = 600.0;
/// Relative half-width of the band around a finite-speed front that is
/// flagged as low confidence.
pub const FRONT_BAND: f64 = 0.01;

/// One evaluation of the field with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub t: f64,
    pub x: f64,
    pub u: f64,
    /// Estimated absolute error of `u`.
    pub error: f64,
    /// Abscissa of the Bromwich line.
    pub sigma: f64,
    /// Within [`FRONT_BAND`] of a finite-speed front.
    pub low_confidence: bool,
}

/// Incremental Wynn epsilon table keeping only the latest diagonal.
struct Wynn<T> {
    diagonal: Vec<T>,
}

const WYNN_DEPTH: usize = 24;

impl<T: Real> Wynn<T> {
    fn new() -> Self {
        Self { diagonal: Vec::new() }
    }

    /// Adds the next partial sum and returns the current best estimate.
    fn push(&mut self, s: T) -> T {
        let prev = std::mem::take(&mut self.diagonal);
        let mut next = Vec::with_capacity((prev.len() + 1).min(WYNN_DEPTH));
        next.push(s);
        for k in 1..=prev.len() {
            if k >= WYNN_DEPTH {
                break;
            }
            let diff = next[k - 1] - prev[k - 1];
            if diff == T::zero() || !diff.is_finite() {
                break;
            }
            let before = if k >= 2 { prev[k - 2] } else { T::zero() };
            let v = before + diff.recip();
            if !v.is_finite() {
                break;
            }
            next.push(v);
        }
        self.diagonal = next;
        let top = (self.diagonal.len() - 1) & !1;
        self.diagonal[top]
    }
}

/// Data shared by every evaluation at a fixed `(t, |x|)`.
struct Setup<'a, T> {
    model: &'a MaterialModel<T>,
    t: T,
    ax: T,
    sigma: T,
    phi: T,
    /// `(c / G0) e^(-b |x|)` and `tau = t - |x| / c` of the subtracted tail.
    asymptote: Option<(T, T)>,
}

impl<T: Real> Setup<'_, T> {
    /// `e^-Phi (F(p) - A(p))` at `p = sigma + i y`.
    fn integrand(&self, y: T) -> Result<Complex<T>> {
        let p = Complex::new(self.sigma, y);
        let kappa = wavenumber(self.model, p)?;
        let q = self.model.q_function(p)?;
        let expo = p * self.t - kappa * self.ax - self.phi;
        let mut v = expo.exp() / (q * kappa);
        if let Some((k, tau)) = self.asymptote {
            let e = (p * tau - self.phi).exp() * k / p;
            v -= e;
        }
        Ok(v)
    }
}

fn real_kappa<T: Real>(model: &MaterialModel<T>, sigma: T) -> Result<T> {
    Ok(wavenumber(model, Complex::new(sigma, T::zero()))?.re)
}

/// Minimiser of the convex envelope `Phi(sigma) = sigma t - kappa(sigma) |x|`
/// on `[lo, inf)`, or the point where it has dropped by [`PUSH_DECAY`].
fn choose_sigma<T: Real>(model: &MaterialModel<T>, t: T, ax: T, lo: T) -> Result<T> {
    let phi = |s: T| -> Result<T> { Ok(s * t - real_kappa(model, s)? * ax) };
    let phi_lo = phi(lo)?;
    let step = T::lit(1.0 + 1e-6);
    if phi(lo * step)? >= phi_lo {
        return Ok(lo);
    }
    // bracket the minimum by doubling
    let floor = phi_lo - T::lit(PUSH_DECAY);
    let mut a = lo;
    let mut b = lo + lo;
    let mut fb = phi(b)?;
    for _ in 0..200 {
        if fb <= floor {
            // envelope keeps falling: stop at the first point below the floor
            let (mut l, mut r) = (a, b);
            for _ in 0..60 {
                let m = (l + r) * T::lit(0.5);
                if phi(m)? <= floor {
                    r = m;
                } else {
                    l = m;
                }
            }
            return Ok(r);
        }
        if phi(b * step)? >= fb {
            break;
        }
        a = b;
        b = b + b;
        fb = phi(b)?;
    }
    if !fb.is_finite() {
        return Err(Error::Integration("Bromwich abscissa search diverged".into()));
    }
    // golden section in log sigma on [a/2, b]
    let (mut l, mut r) = ((a * T::lit(0.5)).max(lo).ln(), b.ln());
    let g = T::lit(0.618_033_988_749_895);
    let mut x1 = r - g * (r - l);
    let mut x2 = l + g * (r - l);
    let mut f1 = phi(x1.exp())?;
    let mut f2 = phi(x2.exp())?;
    for _ in 0..80 {
        if f1 <= f2 {
            r = x2;
            x2 = x1;
            f2 = f1;
            x1 = r - g * (r - l);
            f1 = phi(x1.exp())?;
        } else {
            l = x1;
            x1 = x2;
            f1 = f2;
            x2 = l + g * (r - l);
            f2 = phi(x2.exp())?;
        }
        if r - l < T::lit(1e-10) {
            break;
        }
    }
    Ok(((l + r) * T::lit(0.5)).exp().max(lo))
}

/// `u(t, x)` with diagnostics; see the module documentation for the method.
pub fn green_sample<T: Real>(model: &MaterialModel<T>, t: T, x: T, ctl: &GreenControls) -> Result<FieldSample> {
    let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
    if !(t.is_finite() && x.is_finite()) {
        return Err(Error::Input(format!("green's function needs finite (t, x), got ({t}, {x})")));
    }
    let ax = x.abs();
    if t == T::zero() && ax == T::zero() {
        return Err(Error::Input("green's function is singular at (t, x) = (0, 0)".into()));
    }
    if !(ctl.shift_factor > 0.0 && ctl.tail_tol > 0.0 && ctl.quad_rel_tol > 0.0 && ctl.max_panels > 0) {
        return Err(Error::Input(format!("invalid integration controls {ctl:?}")));
    }
    let rho = model.rho();
    let c_inf = c_infinity(model);
    let time_scale = if t != T::zero() { t.abs() } else { ax / c_inf.as_finite().unwrap_or(T::one()) };
    let lo = T::lit(ctl.shift_factor) / time_scale;
    let sigma = choose_sigma(model, t, ax, lo)?;
    let phi = sigma * t - real_kappa(model, sigma)? * ax;

    let mut closed_form = T::zero();
    let mut asymptote = None;
    let mut low_confidence = false;
    let mut slowness = T::zero();
    if let ExtendedReal::Finite(c) = c_inf {
        slowness = c.recip();
        let tau = t - ax / c;
        low_confidence = t > T::zero() && (ax - c * t).abs() <= T::lit(FRONT_BAND) * c * t;
        // b |x|, with b = inf for kernels whose attenuation is unbounded
        let damping = match bounded_attenuation_limit(model) {
            Some(b) => Some(b * ax),
            None if ax == T::zero() => Some(T::zero()),
            None => None,
        };
        if let (true, Some(bx)) = (ctl.subtract_asymptote, damping) {
            let g0 = rho * c * c;
            asymptote = Some((c / g0 * (-bx).exp(), tau));
            let heaviside = if tau > T::zero() {
                T::one()
            } else if tau == T::zero() {
                T::lit(0.5)
            } else {
                T::zero()
            };
            closed_form = (-bx).exp() * heaviside / (c + c);
        }
    }
    let setup = Setup {
        model,
        t,
        ax,
        sigma,
        phi,
        asymptote,
    };

    // branch sanity: F(conj p) = conj F(p) on the line
    let probe = sigma.max(T::one());
    let up = setup.integrand(probe)?;
    let down = {
        let p = Complex::new(sigma, -probe);
        let kappa = wavenumber(model, p)?;
        let q = model.q_function(p)?;
        let mut v = (p * t - kappa * ax - phi).exp() / (q * kappa);
        if let Some((k, tau)) = asymptote {
            v -= (p * tau - phi).exp() * k / p;
        }
        v
    };
    if (down - up.conj()).norm() > T::lit(1e-8) * up.norm().max(T::min_positive_value()) {
        return Err(Error::Invariant(format!(
            "Bromwich integrand is not conjugate-symmetric at p = {sigma} +/- {probe}i"
        )));
    }

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let g = |y: T| -> Complex<T> {
        match setup.integrand(y) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Complex::new(T::nan(), T::nan())
            }
        }
    };
    let take_failure = |e: Error| failure.borrow_mut().take().unwrap_or(e);

    // oscillation rate of the factored integrand at large y
    let omega_osc = (t - ax * slowness).abs();
    let half_period = if omega_osc > T::zero() { Some(T::PI() / omega_osc) } else { None };
    let y0 = T::lit(4.0) * sigma + half_period.map_or(T::zero(), |h| h + h);
    let opts = QuadOptions::rel(ctl.quad_rel_tol);
    let head = integrate_complex(g, T::zero(), y0, opts).map_err(take_failure)?;
    let mut sum = head.value;
    let mut error = T::lit(head.abs_error);
    // magnitude of the unsubtracted integrand, so that a tail that cancels
    // exactly against the asymptote is measured against something meaningful
    let factor = rho / (T::lit(2.0) * T::PI()) * phi.exp();
    let raw = {
        let p = Complex::new(sigma, sigma);
        let kappa = wavenumber(model, p)?;
        ((p * t - kappa * ax - phi).exp() / (model.q_function(p)? * kappa)).norm() * sigma
    };
    let mut scale = sum.norm().max(raw).max(closed_form.abs() / factor);

    let tol = T::lit(ctl.tail_tol);
    let mut wynn = Wynn::new();
    let mut estimate = wynn.push(sum.re);
    let mut stable = 0;
    let mut y = y0;
    let mut converged = false;
    for _ in 0..ctl.max_panels {
        let width = half_period.map_or(y, |h| h.min(y));
        let panel_opts = opts.with_abs((tol * scale).to_f64().unwrap_or(0.0) * 1e-2);
        let r = integrate_complex(g, y, y + width, panel_opts).map_err(take_failure)?;
        y += width;
        sum += r.value;
        error += T::lit(r.abs_error);
        scale = scale.max(sum.norm());
        let next = wynn.push(sum.re);
        let change = (next - estimate).abs();
        estimate = next;
        if change <= tol * scale.max(T::min_positive_value()) {
            stable += 1;
            if stable >= 3 {
                error += change;
                converged = true;
                break;
            }
        } else {
            stable = 0;
        }
    }
    if !converged {
        return Err(Error::Integration(format!(
            "Bromwich tail did not converge by |Im p| = {y:e} at t = {t}, x = {x}"
        )));
    }
    let u = factor * estimate + closed_form;
    let error = factor * error;
    Ok(FieldSample {
        t: f(t),
        x: f(x),
        u: f(u),
        error: f(error),
        sigma: f(sigma),
        low_confidence,
    })
}

/// `u(t, x)`; `t < 0` is allowed and yields a value that vanishes to
/// quadrature accuracy.
pub fn green_point<T: Real>(model: &MaterialModel<T>, t: T, x: T, ctl: &GreenControls) -> Result<T> {
    Ok(T::lit(green_sample(model, t, x, ctl)?.u))
}

/// `u(t, x)` for every `x` in `x_grid`.
pub fn snapshot<T: Real>(model: &MaterialModel<T>, t: T, x_grid: &[T], ctl: &GreenControls) -> Result<Vec<FieldSample>> {
    x_grid.iter().map(|&x| green_sample(model, t, x, ctl)).collect()
}

/// `u(t, x)` for every `t` in `t_grid`.
pub fn seismogram<T: Real>(model: &MaterialModel<T>, x: T, t_grid: &[T], ctl: &GreenControls) -> Result<Vec<FieldSample>> {
    t_grid.iter().map(|&t| green_sample(model, t, x, ctl)).collect()
}

/// Writes samples as `x,u` (snapshot) or `t,u` (seismogram) after `# ` comments.
pub fn write_field_csv<W: Write>(samples: &[FieldSample], by_time: bool, mut w: W, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{},u", if by_time { "t" } else { "x" })?;
    for s in samples {
        let coord = if by_time { s.t } else { s.x };
        writeln!(w, "{},{}", fmt12(coord), fmt12(s.u))?;
    }
    Ok(())
}

/// Outcome of [`causality_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalityReport {
    /// Largest `|u|` over the permitted part of the grid.
    pub peak: f64,
    /// Largest `|u|` over `t < 0`.
    pub max_past: f64,
    /// Largest `|u|` outside the widened cone `|x| <= 1.01 c_inf t`.
    pub max_exterior: Option<f64>,
    pub forbidden_checked: usize,
    /// Samples exceeding their tolerance.
    pub violations: Vec<FieldSample>,
    /// Spreading probe for `N > 0`: the sample and whether it was resolved.
    pub spreading: Option<(FieldSample, bool)>,
    pub passed: bool,
}

/// Tolerances of [`causality_check`], relative to the peak amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalityTolerances {
    pub past: f64,
    pub exterior: f64,
    /// Cone widening factor for finite-speed models.
    pub cone_margin: f64,
}

impl Default for CausalityTolerances {
    fn default() -> Self {
        Self {
            past: 1e-5,
            exterior: 1e-4,
            cone_margin: 1.01,
        }
    }
}

/// Samples the field on `t_grid x x_grid` and checks that it vanishes for
/// `t < 0` and, for finite wavefront speed, outside the light cone. With a
/// Newtonian term it also probes the point of smallest positive `t` and
/// largest `|x|` and requires a resolved, positive value there.
pub fn causality_check<T: Real>(
    model: &MaterialModel<T>,
    t_grid: &[T],
    x_grid: &[T],
    tols: &CausalityTolerances,
    ctl: &GreenControls,
) -> Result<CausalityReport> {
    if t_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::Input("causality check needs non-empty grids".into()));
    }
    let c_inf = c_infinity(model).as_finite().and_then(|c| c.to_f64());
    let mut samples = Vec::new();
    for &t in t_grid {
        for &x in x_grid {
            if t == T::zero() && x == T::zero() {
                continue;
            }
            samples.push(green_sample(model, t, x, ctl)?);
        }
    }
    let exterior = |s: &FieldSample| c_inf.is_some_and(|c| s.t >= 0.0 && s.x.abs() > tols.cone_margin * c * s.t);
    let past = |s: &FieldSample| s.t < 0.0;
    let peak = samples
        .iter()
        .filter(|s| !past(s) && !exterior(s))
        .fold(0.0f64, |m, s| m.max(s.u.abs()));
    let mut violations = Vec::new();
    let mut max_past = 0.0f64;
    let mut max_exterior = c_inf.map(|_| 0.0f64);
    let mut forbidden_checked = 0;
    for s in &samples {
        if past(s) {
            forbidden_checked += 1;
            max_past = max_past.max(s.u.abs());
            if s.u.abs() >= tols.past * peak {
                violations.push(*s);
            }
        } else if exterior(s) {
            forbidden_checked += 1;
            max_exterior = max_exterior.map(|m| m.max(s.u.abs()));
            if s.u.abs() >= tols.exterior * peak {
                violations.push(*s);
            }
        }
    }
    let spreading = if model.newtonian() > T::zero() {
        let t = t_grid.iter().copied().filter(|&t| t > T::zero()).fold(T::infinity(), T::min);
        let x = x_grid.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        if t.is_finite() && x > T::zero() {
            let s = green_sample(model, t, x, ctl)?;
            Some((s, s.u > 0.0 && s.error < 1e-3 * s.u))
        } else {
            None
        }
    } else {
        None
    };
    let passed = violations.is_empty() && peak > 0.0 && spreading.map_or(true, |(_, ok)| ok);
    Ok(CausalityReport {
        peak,
        max_past,
        max_exterior,
        forbidden_checked,
        violations,
        spreading,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::RelaxationKernel;

    fn model(n: f64, k: RelaxationKernel<f64>) -> MaterialModel<f64> {
        MaterialModel::new(1.0, n, k).unwrap()
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut w = Wynn::new();
        let mut s = 0.0;
        let mut est = 0.0;
        for k in 1..=20 {
            s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            est = w.push(s);
        }
        assert!((est - 2f64.ln()).abs() < 1e-12, "{est}");
    }

    #[test]
    fn elastic_boxcar_with_and_without_subtraction() {
        let m = model(0.0, RelaxationKernel::prony([(1.0, 0.0)]).unwrap());
        let ctl = GreenControls::default();
        assert!((green_point(&m, 2.0, 1.0, &ctl).unwrap() - 0.5).abs() < 1e-9);
        assert!(green_point(&m, 0.5, 1.0, &ctl).unwrap().abs() < 1e-9);
        let raw = GreenControls {
            subtract_asymptote: false,
            ..ctl
        };
        assert!((green_point(&m, 2.0, 1.0, &raw).unwrap() - 0.5).abs() < 1e-6);
        assert!(green_point(&m, 0.5, 1.0, &raw).unwrap().abs() < 1e-6);
    }

    #[test]
    fn past_is_silent() {
        let m = model(1.0, RelaxationKernel::Zero);
        let ctl = GreenControls::default();
        assert!(green_point(&m, -1.0, 1.0, &ctl).unwrap().abs() < 1e-6);
    }

    #[test]
    fn origin_is_rejected() {
        let m = model(1.0, RelaxationKernel::Zero);
        assert!(green_point(&m, 0.0, 0.0, &GreenControls::default()).is_err());
    }

    #[test]
    fn field_csv_header() {
        let s = FieldSample {
            t: 1.0,
            x: 0.5,
            u: 0.25,
            error: 0.0,
            sigma: 1.0,
            low_confidence: false,
        };
        let mut buf = Vec::new();
        write_field_csv(&[s], true, &mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,u\n1.00000000000e0,2.50000000000e-1\n");
    }
}
