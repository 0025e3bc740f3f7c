//! Relaxation kernels, material models and the CBF denominator
//! `Q(p) = N p + p G~(p)`.

use std::fmt;

use num_complex::Complex;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::limits::{geometric_limit, LimitOptions};
use crate::quad::{integrate_complex, integrate_complex_to_infinity, QuadOptions};
use crate::scalar::{arg, gamma, principal_powf, Real};

/// A non-negative real number or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> ExtendedReal<T> {
    pub fn finite(value: T) -> Result<Self> {
        if value >= T::zero() && value.is_finite() {
            Ok(Self::Finite(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "extended real must be finite and >= 0 or +inf, got {value}"
            )))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }

    pub fn as_finite(&self) -> Option<T> {
        match self {
            Self::Finite(v) => Some(*v),
            Self::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Finite(v) => v.to_f64().unwrap_or(f64::NAN),
            Self::Infinite => f64::INFINITY,
        }
    }
}

impl<T: Real> fmt::Display for ExtendedReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::Infinite => write!(f, "inf"),
        }
    }
}

impl<T: Real> Serialize for ExtendedReal<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => s.serialize_f64(v.to_f64().unwrap_or(f64::NAN)),
            Self::Infinite => s.serialize_str("inf"),
        }
    }
}

/// One `g e^{-r t}` term of a Prony series; `rate = 0` is an elastic plateau.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PronyTerm<T> {
    pub modulus: T,
    pub rate: T,
}

/// Completely monotone relaxation kernel `G(t)`.
///
/// The set of families is closed: the inversion and dispersion code relies on
/// knowing where each family puts its branch cuts and poles.
#[derive(Debug, Clone, PartialEq)]
pub enum RelaxationKernel<T> {
    /// `G(t) = sum g_i exp(-r_i t)`.
    Prony(Vec<PronyTerm<T>>),
    /// `G(t) = A t^-alpha / Gamma(1 - alpha)`, `0 < alpha < 1`.
    PowerLaw { amplitude: T, alpha: T },
    /// `G(t) = exp(-(t / tau)^alpha)`, `0 < alpha < 1`.
    StretchedExponential { alpha: T, tau: T },
    /// `G = 0`; only meaningful together with a Newtonian term.
    Zero,
    /// Superposition; transforms add.
    Sum(Vec<RelaxationKernel<T>>),
}

impl<T: Real> RelaxationKernel<T> {
    pub fn prony(terms: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let k = Self::Prony(
            terms
                .into_iter()
                .map(|(modulus, rate)| PronyTerm { modulus, rate })
                .collect(),
        );
        k.validate()?;
        Ok(k)
    }

    pub fn power_law(amplitude: T, alpha: T) -> Result<Self> {
        let k = Self::PowerLaw { amplitude, alpha };
        k.validate()?;
        Ok(k)
    }

    pub fn stretched_exponential(alpha: T, tau: T) -> Result<Self> {
        let k = Self::StretchedExponential { alpha, tau };
        k.validate()?;
        Ok(k)
    }

    pub fn sum(components: Vec<RelaxationKernel<T>>) -> Result<Self> {
        let k = Self::Sum(components);
        k.validate()?;
        Ok(k)
    }

    /// Checks every parameter range; error messages name the violated invariant.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Self::Prony(terms) => {
                if terms.is_empty() {
                    return bad("prony series must have at least one term".into());
                }
                for (i, t) in terms.iter().enumerate() {
                    if !(t.modulus >= T::zero() && t.modulus.is_finite()) {
                        return bad(format!("prony term {i}: modulus must be >= 0, got {}", t.modulus));
                    }
                    if !(t.rate >= T::zero() && t.rate.is_finite()) {
                        return bad(format!("prony term {i}: rate must be >= 0, got {}", t.rate));
                    }
                }
                if terms.iter().all(|t| t.modulus == T::zero()) {
                    return bad("prony series must have a positive modulus (use kernel zero instead)".into());
                }
                Ok(())
            }
            Self::PowerLaw { amplitude, alpha } => {
                if !(*amplitude > T::zero() && amplitude.is_finite()) {
                    return bad(format!("power law: amplitude must be > 0, got {amplitude}"));
                }
                if !(*alpha > T::zero() && *alpha < T::one()) {
                    return bad(format!("power law: alpha must lie in (0, 1), got {alpha}"));
                }
                Ok(())
            }
            Self::StretchedExponential { alpha, tau } => {
                if !(*alpha > T::zero() && *alpha < T::one()) {
                    return bad(format!("stretched exponential: alpha must lie in (0, 1), got {alpha}"));
                }
                if !(*tau > T::zero() && tau.is_finite()) {
                    return bad(format!("stretched exponential: tau must be > 0, got {tau}"));
                }
                Ok(())
            }
            Self::Zero => Ok(()),
            Self::Sum(parts) => {
                if parts.is_empty() {
                    return bad("kernel sum must have at least one component".into());
                }
                parts.iter().try_for_each(|k| k.validate())
            }
        }
    }

    /// Leaf kernels with nested sums flattened.
    pub fn components(&self) -> Vec<&RelaxationKernel<T>> {
        let mut out = Vec::new();
        self.collect_into(&mut out);
        out
    }

    fn collect_into<'a>(&'a self, out: &mut Vec<&'a RelaxationKernel<T>>) {
        match self {
            Self::Sum(parts) => parts.iter().for_each(|k| k.collect_into(out)),
            k => out.push(k),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components().iter().all(|k| matches!(k, Self::Zero))
    }

    /// True when the transform is a rational function (Prony terms only).
    pub fn is_rational(&self) -> bool {
        self.components()
            .iter()
            .all(|k| matches!(k, Self::Prony(_) | Self::Zero))
    }

    /// All Prony terms across components.
    pub fn prony_terms(&self) -> Vec<PronyTerm<T>> {
        self.components()
            .iter()
            .filter_map(|k| match k {
                Self::Prony(t) => Some(t.clone()),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// Largest power-law exponent, i.e. the leading `t^-alpha` singularity of an
    /// unbounded kernel.
    pub fn strong_singularity_exponent(&self) -> Option<T> {
        self.components()
            .iter()
            .filter_map(|k| match k {
                Self::PowerLaw { alpha, .. } => Some(*alpha),
                _ => None,
            })
            .fold(None, |acc: Option<T>, a| Some(acc.map_or(a, |b| b.max(a))))
    }

    /// Smallest stretched-exponential exponent: `G(0) - G(t) ~ t^alpha`, so
    /// `G'(t) ~ t^(alpha - 1)` is integrably singular.
    pub fn weak_singularity_exponent(&self) -> Option<T> {
        self.components()
            .iter()
            .filter_map(|k| match k {
                Self::StretchedExponential { alpha, .. } => Some(*alpha),
                _ => None,
            })
            .fold(None, |acc: Option<T>, a| Some(acc.map_or(a, |b| b.min(a))))
    }

    /// Whether `int_0^inf G(t) dt` diverges (power law or elastic plateau).
    pub fn integral_is_infinite(&self) -> bool {
        self.components().iter().any(|k| match k {
            Self::PowerLaw { .. } => true,
            Self::Prony(terms) => terms.iter().any(|t| t.rate == T::zero() && t.modulus > T::zero()),
            _ => false,
        })
    }

    /// `G(t)` for `t > 0`.
    pub fn eval_g(&self, t: T) -> Result<T> {
        if !(t > T::zero()) {
            return Err(Error::Domain(format!("G(t) requires t > 0, got {t}")));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: T) -> T {
        match self {
            Self::Prony(terms) => terms.iter().map(|k| k.modulus * (-k.rate * t).exp()).sum(),
            Self::PowerLaw { amplitude, alpha } => {
                *amplitude * t.powf(-*alpha) / gamma(T::one() - *alpha)
            }
            Self::StretchedExponential { alpha, tau } => (-(t / *tau).powf(*alpha)).exp(),
            Self::Zero => T::zero(),
            Self::Sum(parts) => parts.iter().map(|k| k.eval_unchecked(t)).sum(),
        }
    }

    /// Laplace transform `G~(p)`.
    ///
    /// Rejects `p = 0` and points on the negative real axis. Off the axis the
    /// value is the analytic continuation into the cut plane, which includes
    /// the left half-plane.
    pub fn laplace_g(&self, p: Complex<T>) -> Result<Complex<T>> {
        if p.im == T::zero() && p.re <= T::zero() {
            return Err(Error::Domain(format!(
                "G~(p) is undefined at p = {} (branch cut or origin)",
                p.re
            )));
        }
        self.laplace_on_cut_plane(p)
    }

    /// Like [`laplace_g`](Self::laplace_g) but accepts the lips of the negative
    /// real axis, selected by the sign of a zero imaginary part.
    pub(crate) fn laplace_on_cut_plane(&self, p: Complex<T>) -> Result<Complex<T>> {
        if p.re == T::zero() && p.im == T::zero() {
            return Err(Error::Domain("G~(p) is undefined at p = 0".into()));
        }
        let v = match self {
            Self::Prony(terms) => terms.iter().fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                acc + Complex::new(k.modulus, T::zero()) / (p + k.rate)
            }),
            Self::PowerLaw { amplitude, alpha } => principal_powf(p, *alpha - T::one()) * *amplitude,
            Self::StretchedExponential { alpha, tau } => stretched_exponential_laplace(*alpha, *tau, p)?,
            Self::Zero => Complex::new(T::zero(), T::zero()),
            Self::Sum(parts) => {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in parts {
                    acc += k.laplace_on_cut_plane(p)?;
                }
                acc
            }
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                context: "relaxation kernel transform",
                at: p.re.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    /// `G(0)` from the closed forms: `+inf` for unbounded kernels.
    pub fn g0_closed_form(&self) -> ExtendedReal<T> {
        let mut total = T::zero();
        for k in self.components() {
            match k {
                Self::Prony(terms) => total += terms.iter().map(|t| t.modulus).sum(),
                Self::PowerLaw { .. } => return ExtendedReal::Infinite,
                Self::StretchedExponential { .. } => total += T::one(),
                Self::Zero | Self::Sum(_) => {}
            }
        }
        ExtendedReal::Finite(total)
    }

    /// `G(0) = lim p G~(p)` estimated numerically on a geometric grid up to `p_max`.
    pub fn tauberian_g0(&self, p_max: T) -> Result<ExtendedReal<T>> {
        if !(p_max >= T::lit(1e3)) {
            return Err(Error::Input(format!("tauberian_g0 needs p_max >= 1e3, got {p_max}")));
        }
        geometric_limit(
            |p| Ok(p * self.laplace_g(Complex::new(p, T::zero()))?.re),
            T::one(),
            p_max,
            &LimitOptions::default(),
        )
        .map_err(|e| match e {
            Error::Indeterminate(msg) => Error::Indeterminate(format!("G(0) via p G~(p): {msg}")),
            other => other,
        })
    }

    /// Sampled complete-monotonicity test; see [`cm_check_fn`].
    pub fn cm_check(&self, max_order: usize, grid: &[T]) -> Result<CmReport<T>> {
        cm_check_fn(|t| self.eval_unchecked(t), max_order, grid)
    }
}

/// `int_0^inf exp(-p t) exp(-(t/tau)^alpha) dt` by adaptive quadrature in
/// `u = (t/tau)^alpha` along a ray `t = s e^{i phi}`.
///
/// For real positive `p` the ray is the real axis and this is the defining
/// integral. For complex `p` the ray is rotated by `phi = -arg(p) / (1 + alpha)`,
/// which keeps both exponentials decaying and continues the transform into
/// the whole cut plane.
fn stretched_exponential_laplace<T: Real>(alpha: T, tau: T, p: Complex<T>) -> Result<Complex<T>> {
    let theta = arg(p);
    let phi = -theta / (T::one() + alpha);
    let rot = Complex::from_polar(T::one(), phi);
    let rot_alpha = Complex::from_polar(T::one(), alpha * phi);
    let c1 = p * rot * tau;
    let inv_alpha = T::one() / alpha;
    let integrand = move |u: T| {
        if u <= T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        let s = u.powf(inv_alpha);
        let w = (-(c1 * s) - rot_alpha * u).exp();
        w * (s / u)
    };

    // Both exponentials are negligible beyond these cut-offs.
    let decay1 = c1.re;
    let decay2 = rot_alpha.re;
    let horizon = T::lit(40.0);
    let mut cut = horizon / decay2;
    if decay1 > T::zero() {
        cut = cut.min((horizon / decay1).powf(alpha));
    }
    let opts = QuadOptions::rel(1e-10);
    // one break point at the scale where exp(-c1 s) turns over
    let knee = if decay1 > T::zero() {
        (T::one() / decay1).powf(alpha).min(cut)
    } else {
        cut
    };
    let head = integrate_complex(integrand, T::zero(), knee, opts)?;
    let body = integrate_complex(integrand, knee, cut, opts.with_abs(1e-13 * head.value.norm().to_f64().unwrap_or(0.0)))?;
    let main = head.value + body.value;
    let tail = integrate_complex_to_infinity(
        integrand,
        cut,
        QuadOptions::rel(1e-6).with_abs(1e-14 * main.norm().to_f64().unwrap_or(0.0)),
    )?;
    if !(head.converged && body.converged) {
        return Err(Error::Quadrature {
            context: "stretched exponential transform",
            abs_error: head.abs_error + body.abs_error,
        });
    }
    Ok((main + tail.value) * rot * (tau / alpha))
}

/// Outcome of a sampled complete-monotonicity test.
#[derive(Debug, Clone)]
pub struct CmReport<T> {
    pub max_order: usize,
    pub points_checked: usize,
    /// `(order n, t, (-1)^n D^n G(t))` for every failing sample.
    pub violations: Vec<(usize, T, T)>,
}

impl<T> CmReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Checks `(-1)^n D^n g(t) >= -tol` for `n = 0..=max_order` at the interior
/// points of `grid`, using centred differences with step `h = t / 100`.
///
/// The tolerance is `1e-6 max(1, |g(t)|)` plus a round-off allowance of
/// `64 * 2^n * eps * max|g| / h^n` over the stencil.
pub fn cm_check_fn<T, F>(g: F, max_order: usize, grid: &[T]) -> Result<CmReport<T>>
where
    T: Real,
    F: Fn(T) -> T,
{
    if max_order > 4 {
        return Err(Error::Input(format!("cm_check supports orders up to 4, got {max_order}")));
    }
    if grid.len() < 16 {
        return Err(Error::Input(format!("cm_check needs at least 16 grid points, got {}", grid.len())));
    }
    if grid.iter().any(|&t| !(t > T::zero())) {
        return Err(Error::Input("cm_check grid must be strictly positive".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("cm_check grid must be strictly increasing".into()));
    }
    let mut violations = Vec::new();
    let mut checked = 0;
    for &t in &grid[1..grid.len() - 1] {
        let h = t / T::lit(100.0);
        let gt = g(t);
        for n in 0..=max_order {
            let mut diff = T::zero();
            let mut stencil_max = T::zero();
            for k in 0..=n {
                let offset = T::lit(n as f64 / 2.0 - k as f64) * h;
                let v = g(t + offset);
                stencil_max = stencil_max.max(v.abs());
                let c = T::lit(binomial(n, k));
                if k % 2 == 0 {
                    diff += c * v;
                } else {
                    diff -= c * v;
                }
            }
            let hn = h.powi(n as i32);
            let derivative = diff / hn;
            let signed = if n % 2 == 0 { derivative } else { -derivative };
            let roundoff = T::lit(64.0 * 2f64.powi(n as i32)) * T::epsilon() * stencil_max / hn;
            let tol = T::lit(1e-6) * gt.abs().max(T::one()) + roundoff;
            if !(signed >= -tol) {
                violations.push((n, t, signed));
            }
            checked += 1;
        }
    }
    Ok(CmReport {
        max_order,
        points_checked: checked,
        violations,
    })
}

/// Density, Newtonian coefficient and relaxation kernel of a 1-D medium.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel<T> {
    rho: T,
    newtonian: T,
    kernel: RelaxationKernel<T>,
}

impl<T: Real> MaterialModel<T> {
    pub fn new(rho: T, newtonian: T, kernel: RelaxationKernel<T>) -> Result<Self> {
        if !(rho > T::zero() && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be > 0, got {rho}")));
        }
        if !(newtonian >= T::zero() && newtonian.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "newtonian_N must be >= 0, got {newtonian}"
            )));
        }
        kernel.validate()?;
        if newtonian == T::zero() && kernel.is_zero() {
            return Err(Error::InvalidParameter(
                "newtonian_N = 0 with a zero kernel describes no medium".into(),
            ));
        }
        Ok(Self { rho, newtonian, kernel })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn newtonian(&self) -> T {
        self.newtonian
    }

    pub fn kernel(&self) -> &RelaxationKernel<T> {
        &self.kernel
    }

    /// `Q(p) = N p + p G~(p)`.
    pub fn q_function(&self, p: Complex<T>) -> Result<Complex<T>> {
        let g = self.kernel.laplace_g(p)?;
        Ok(p * self.newtonian + p * g)
    }

    pub(crate) fn q_on_cut_plane(&self, p: Complex<T>) -> Result<Complex<T>> {
        let g = self.kernel.laplace_on_cut_plane(p)?;
        Ok(p * self.newtonian + p * g)
    }

    /// Exponent `beta` of the leading `C(t) - C(0) ~ t^beta` behaviour of the
    /// creep compliance at small `t`.
    pub fn creep_onset_exponent(&self) -> T {
        if self.newtonian > T::zero() {
            return T::one();
        }
        if let Some(a) = self.kernel.strong_singularity_exponent() {
            return a;
        }
        self.kernel.weak_singularity_exponent().unwrap_or(T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn eval_g_examples() {
        let prony = RelaxationKernel::<f64>::prony([(1.0, 1.0)]).unwrap();
        assert!((prony.eval_g(1.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        let pl = RelaxationKernel::<f64>::power_law(1.0, 0.5).unwrap();
        assert!((pl.eval_g(1.0).unwrap() - 0.564_189_583_547_756_3).abs() < 1e-14);
        let kww = RelaxationKernel::<f64>::stretched_exponential(0.5, 1.0).unwrap();
        assert!((kww.eval_g(4.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!(pl.eval_g(0.0).is_err());
        assert!(prony.eval_g(-1.0).is_err());
    }

    #[test]
    fn laplace_examples() {
        let prony = RelaxationKernel::<f64>::prony([(1.0, 1.0)]).unwrap();
        let v = prony.laplace_g(Complex::new(1.0, 0.0)).unwrap();
        assert!((v - Complex::new(0.5, 0.0)).norm() < 1e-15);
        let pl = RelaxationKernel::<f64>::power_law(1.0, 0.5).unwrap();
        let v = pl.laplace_g(Complex::new(4.0, 0.0)).unwrap();
        assert!((v.re - 0.5).abs() < 1e-15 && v.im.abs() < 1e-15);
        assert!(pl.laplace_g(Complex::new(0.0, 0.0)).is_err());
        assert!(pl.laplace_g(Complex::new(-2.0, 0.0)).is_err());
        assert!(pl.laplace_g(Complex::new(-2.0, -0.0)).is_err());
    }

    #[test]
    fn q_function_examples() {
        let m = MaterialModel::<f64>::new(1.0, 1.0, RelaxationKernel::Zero).unwrap();
        assert_eq!(m.q_function(Complex::new(3.0, 0.0)).unwrap(), Complex::new(3.0, 0.0));
        let m = MaterialModel::<f64>::new(1.0, 0.0, RelaxationKernel::<f64>::prony([(1.0, 1.0)]).unwrap()).unwrap();
        assert!((m.q_function(Complex::new(1.0, 0.0)).unwrap().re - 0.5).abs() < 1e-15);
        let m = MaterialModel::<f64>::new(1.0, 1.0, RelaxationKernel::<f64>::power_law(1.0, 0.5).unwrap()).unwrap();
        assert!((m.q_function(Complex::new(4.0, 0.0)).unwrap().re - 6.0).abs() < 1e-14);
    }

    #[test]
    fn g0_closed_forms() {
        let k = RelaxationKernel::<f64>::prony([(2.0, 1.0), (3.0, 5.0)]).unwrap();
        assert_eq!(k.g0_closed_form(), ExtendedReal::Finite(5.0));
        let k = RelaxationKernel::<f64>::power_law(2.0, 0.3).unwrap();
        assert_eq!(k.g0_closed_form(), ExtendedReal::Infinite);
        let k = RelaxationKernel::<f64>::stretched_exponential(0.3, 2.0).unwrap();
        assert_eq!(k.g0_closed_form(), ExtendedReal::Finite(1.0));
        assert_eq!(RelaxationKernel::<f64>::Zero.g0_closed_form(), ExtendedReal::Finite(0.0));
    }

    #[test]
    fn tauberian_examples() {
        let k = RelaxationKernel::<f64>::prony([(1.0, 1.0)]).unwrap();
        let g0 = k.tauberian_g0(1e6).unwrap().as_finite().unwrap();
        assert!((g0 - 1.0).abs() < 1e-4);
        let k = RelaxationKernel::<f64>::power_law(1.0, 0.5).unwrap();
        assert!(k.tauberian_g0(1e6).unwrap().is_infinite());
        let k = RelaxationKernel::<f64>::stretched_exponential(0.5, 1.0).unwrap();
        let g0 = k.tauberian_g0(1e8).unwrap().as_finite().unwrap();
        assert!((g0 - 1.0).abs() < 1e-3, "{g0}");
        assert!(k.tauberian_g0(10.0).is_err());
    }

    #[test]
    fn tauberian_weak_growth_is_indeterminate() {
        let k = RelaxationKernel::<f64>::power_law(1.0, 0.01).unwrap();
        assert!(matches!(k.tauberian_g0(1e6), Err(Error::Indeterminate(_))));
    }

    #[test]
    fn cm_check_examples() {
        let grid = log_grid(0.01, 10.0, 40);
        let k = RelaxationKernel::<f64>::prony([(1.0, 1.0), (2.0, 3.0)]).unwrap();
        assert!(k.cm_check(3, &grid).unwrap().passed());
        let k = RelaxationKernel::<f64>::stretched_exponential(0.5, 1.0).unwrap();
        assert!(k.cm_check(3, &grid).unwrap().passed());
        let k = RelaxationKernel::<f64>::power_law(1.0, 0.5).unwrap();
        assert!(k.cm_check(4, &grid).unwrap().passed());
        let bad = cm_check_fn(|t: f64| (-t).exp() * (5.0 * t).cos(), 2, &grid).unwrap();
        assert!(!bad.passed());
        assert!(bad.violations.iter().any(|v| v.0 >= 1));
    }

    #[test]
    fn cm_check_rejects_bad_grids() {
        let k = RelaxationKernel::<f64>::prony([(1.0, 1.0)]).unwrap();
        assert!(k.cm_check(2, &log_grid(0.1, 1.0, 8)).is_err());
        let mut g = log_grid(0.1, 1.0, 20);
        g[0] = -1.0;
        assert!(k.cm_check(2, &g).is_err());
        assert!(k.cm_check(5, &log_grid(0.1, 1.0, 20)).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(RelaxationKernel::<f64>::power_law(1.0, 1.0).is_err());
        assert!(RelaxationKernel::<f64>::power_law(0.0, 0.5).is_err());
        assert!(RelaxationKernel::<f64>::stretched_exponential(0.5, -1.0).is_err());
        assert!(RelaxationKernel::<f64>::prony([]).is_err());
        assert!(RelaxationKernel::<f64>::prony([(-1.0, 1.0)]).is_err());
        assert!(MaterialModel::<f64>::new(1.0, 0.0, RelaxationKernel::Zero).is_err());
        assert!(MaterialModel::<f64>::new(0.0, 1.0, RelaxationKernel::Zero).is_err());
        assert!(MaterialModel::<f64>::new(1.0, -1.0, RelaxationKernel::Zero).is_err());
    }

    #[test]
    fn sum_kernel_adds_transforms() {
        let a = RelaxationKernel::<f64>::prony([(1.0, 2.0)]).unwrap();
        let b = RelaxationKernel::<f64>::power_law(0.5, 0.3).unwrap();
        let s = RelaxationKernel::<f64>::sum(vec![a.clone(), b.clone()]).unwrap();
        let p = Complex::new(0.7, 1.3);
        let lhs = s.laplace_g(p).unwrap();
        let rhs = a.laplace_g(p).unwrap() + b.laplace_g(p).unwrap();
        assert!((lhs - rhs).norm() < 1e-15);
        assert_eq!(s.g0_closed_form(), ExtendedReal::Infinite);
        assert!(s.integral_is_infinite());
    }

    #[test]
    fn f32_kernels_evaluate() {
        let k = RelaxationKernel::prony([(1.0f32, 1.0f32)]).unwrap();
        let v = k.laplace_g(Complex::new(1.0f32, 0.0)).unwrap();
        assert!((v.re - 0.5).abs() < 1e-6);
        let k = RelaxationKernel::stretched_exponential(0.5f32, 1.0).unwrap();
        assert!(k.laplace_g(Complex::new(2.0f32, 1.0)).unwrap().re > 0.0);
    }
}
