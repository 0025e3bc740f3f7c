//! Numerical inverse Laplace transform: fixed Talbot contour, branch-cut
//! integration along the negative real axis, and residue sums for rational
//! transforms.

use std::fmt;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{integrate_complex, integrate_complex_to_infinity, QuadOptions};
use crate::scalar::Real;

/// Default number of Talbot nodes.
///
/// Round-off grows like `exp(0.4 M) * eps` while truncation error falls like
/// `10^(-0.6 M)`, so in double precision the two balance near `M = 24`.
pub const DEFAULT_TALBOT_NODES: usize = 24;

/// Default relative tolerance of the branch-cut quadrature.
pub const DEFAULT_BRANCH_CUT_TOL: f64 = 1e-9;

type Eval<'a, T> = Box<dyn Fn(Complex<T>) -> Result<Complex<T>> + Send + Sync + 'a>;

/// Polynomial ratio `P(p) / D(p)` with real coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Rational<T> {
    pub numerator: Vec<T>,
    pub denominator: Vec<T>,
}

fn trim<T: Real>(mut c: Vec<T>) -> Vec<T> {
    while c.len() > 1 && *c.last().unwrap() == T::zero() {
        c.pop();
    }
    c
}

pub(crate) fn horner<T: Real>(coeffs: &[T], p: Complex<T>) -> Complex<T> {
    coeffs
        .iter()
        .rev()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * p + c)
}

fn derivative<T: Real>(coeffs: &[T]) -> Vec<T> {
    if coeffs.len() <= 1 {
        return vec![T::zero()];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * T::from_count(k))
        .collect()
}

/// Polynomial product of ascending coefficient vectors.
pub(crate) fn poly_mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// All complex roots of a real polynomial (Durand-Kerner, then Newton polish).
pub fn polynomial_roots<T: Real>(coeffs: &[T]) -> Result<Vec<Complex<T>>> {
    let c = trim(coeffs.to_vec());
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = c[n];
    let monic: Vec<T> = c.iter().map(|&x| x / lead).collect();
    // Cauchy bound on root modulus
    let bound = T::one() + monic[..n].iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let seed = Complex::new(T::lit(0.4), T::lit(0.9));
    let mut roots: Vec<Complex<T>> = (0..n)
        .map(|k| seed.powu(k as u32) * (bound * T::lit(0.5)))
        .collect();
    let tol = T::epsilon() * T::lit(16.0) * bound;
    for _ in 0..500 {
        let mut delta = T::zero();
        for i in 0..n {
            let zi = roots[i];
            let mut den = Complex::new(T::one(), T::zero());
            for (j, &zj) in roots.iter().enumerate() {
                if j != i {
                    den *= zi - zj;
                }
            }
            if den.norm() == T::zero() {
                den = Complex::new(tol, tol);
            }
            let step = horner(&monic, zi) / den;
            roots[i] = zi - step;
            delta = delta.max(step.norm());
        }
        if delta <= tol {
            break;
        }
    }
    let d = derivative(&monic);
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let dz = horner(&d, *z);
            if dz.norm() == T::zero() {
                break;
            }
            *z -= horner(&monic, *z) / dz;
        }
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "polynomial roots",
                at: f64::NAN,
            });
        }
    }
    Ok(roots)
}

impl<T: Real> Rational<T> {
    pub fn new(numerator: Vec<T>, denominator: Vec<T>) -> Result<Self> {
        let numerator = trim(numerator);
        let denominator = trim(denominator);
        if denominator.iter().all(|&c| c == T::zero()) {
            return Err(Error::InvalidParameter("rational transform: zero denominator".into()));
        }
        Ok(Self { numerator, denominator })
    }

    pub fn eval(&self, p: Complex<T>) -> Complex<T> {
        horner(&self.numerator, p) / horner(&self.denominator, p)
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.numerator.len() < self.denominator.len()
            || self.numerator.iter().all(|&c| c == T::zero())
    }

    pub fn poles(&self) -> Result<Vec<Complex<T>>> {
        polynomial_roots(&self.denominator)
    }

    /// `(pole, residue)` pairs when every pole is simple; `None` otherwise.
    pub fn simple_residues(&self) -> Result<Option<Vec<(Complex<T>, Complex<T>)>>> {
        let poles = self.poles()?;
        let scale = poles.iter().fold(T::one(), |m, z| m.max(z.norm()));
        for i in 0..poles.len() {
            for j in 0..i {
                if (poles[i] - poles[j]).norm() <= T::lit(1e-6) * scale {
                    return Ok(None);
                }
            }
        }
        let d = derivative(&self.denominator);
        Ok(Some(
            poles
                .into_iter()
                .map(|z| (z, horner(&self.numerator, z) / horner(&d, z)))
                .collect(),
        ))
    }
}

/// Singularity structure declared for a transform.
#[derive(Debug, Clone, PartialEq)]
pub enum Analyticity<T> {
    /// Analytic on the plane cut along `(-inf, 0]`.
    BranchCut,
    /// Isolated poles only (all with `Re p <= 0`), optionally with an exact
    /// rational representation.
    Meromorphic {
        poles: Vec<Complex<T>>,
        rational: Option<Rational<T>>,
    },
}

/// Transform `F(p)` of a real-valued original, with analyticity metadata.
///
/// The evaluator must be callable from several threads at once.
pub struct TransformFunction<'a, T> {
    eval: Eval<'a, T>,
    analyticity: Analyticity<T>,
}

impl<T: Real> fmt::Debug for TransformFunction<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformFunction")
            .field("analyticity", &self.analyticity)
            .finish_non_exhaustive()
    }
}

impl<'a, T: Real> TransformFunction<'a, T> {
    /// Transform analytic off the closed negative real axis. The lower lip is
    /// addressed as `-r - 0i`; the evaluator must honour the zero's sign.
    pub fn branch_cut<F>(f: F) -> Self
    where
        F: Fn(Complex<T>) -> Result<Complex<T>> + Send + Sync + 'a,
    {
        Self {
            eval: Box::new(f),
            analyticity: Analyticity::BranchCut,
        }
    }

    pub fn meromorphic<F>(f: F, poles: Vec<Complex<T>>) -> Result<Self>
    where
        F: Fn(Complex<T>) -> Result<Complex<T>> + Send + Sync + 'a,
    {
        check_poles(&poles)?;
        Ok(Self {
            eval: Box::new(f),
            analyticity: Analyticity::Meromorphic { poles, rational: None },
        })
    }

    pub fn rational(r: Rational<T>) -> Result<Self> {
        let poles = r.poles()?;
        check_poles(&poles)?;
        let eval_r = r.clone();
        Ok(Self {
            eval: Box::new(move |p| Ok(eval_r.eval(p))),
            analyticity: Analyticity::Meromorphic {
                poles,
                rational: Some(r),
            },
        })
    }

    pub fn analyticity(&self) -> &Analyticity<T> {
        &self.analyticity
    }

    pub fn eval(&self, p: Complex<T>) -> Result<Complex<T>> {
        (self.eval)(p)
    }
}

fn check_poles<T: Real>(poles: &[Complex<T>]) -> Result<()> {
    // tolerate round-off in computed roots of rational transforms
    let slack = T::lit(1e-10) * poles.iter().fold(T::one(), |m, z| m.max(z.norm()));
    match poles.iter().find(|z| z.re > slack) {
        Some(z) => Err(Error::InvalidParameter(format!(
            "transform has a pole at {}{:+}i in the right half-plane",
            z.re, z.im
        ))),
        None => Ok(()),
    }
}

/// Inversion strategy actually used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InversionMethod {
    Talbot,
    BranchCut,
    Residue,
}

impl InversionMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Talbot => "talbot",
            Self::BranchCut => "branch-cut",
            Self::Residue => "residue",
        }
    }
}

impl fmt::Display for InversionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

fn check_time<T: Real>(method: &'static str, t: T) -> Result<()> {
    if t > T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Inversion {
            method,
            t: t.to_f64().unwrap_or(f64::NAN),
            reason: "t must be positive and finite".into(),
        })
    }
}

fn finite_or<T: Real>(method: &'static str, t: T, p: Complex<T>, v: Complex<T>) -> Result<Complex<T>> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Inversion {
            method,
            t: t.to_f64().unwrap_or(f64::NAN),
            reason: format!("non-finite transform value at node p = {}{:+}i", p.re, p.im),
        })
    }
}

/// Fixed Talbot contour `p(theta) = r theta (cot theta + i)`, `r = 2M / (5t)`.
///
/// Requires every singularity of `F` on the closed negative real axis or
/// close to it. `nodes` must be even and in `16..=128`.
pub fn invert_talbot<T: Real>(f: &TransformFunction<'_, T>, t: T, nodes: usize) -> Result<T> {
    const METHOD: &str = "talbot";
    check_time(METHOD, t)?;
    if nodes % 2 != 0 || !(16..=128).contains(&nodes) {
        return Err(Error::Input(format!(
            "talbot node count must be even and in [16, 128], got {nodes}"
        )));
    }
    let m = T::from_count(nodes);
    let r = T::lit(0.4) * m / t;
    let mut sum = {
        let p = Complex::new(r, T::zero());
        let v = finite_or(METHOD, t, p, f.eval(p)?)?;
        (v * (r * t).exp()) * T::lit(0.5)
    };
    for k in 1..nodes {
        let theta = T::from_count(k) * T::PI() / m;
        let cot = theta.cos() / theta.sin();
        let p = Complex::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - T::one()) * cot;
        let v = finite_or(METHOD, t, p, f.eval(p)?)?;
        let term = (p * t).exp() * v * Complex::new(T::one(), sigma);
        if k == 1 {
            check_conjugate_symmetry(f, p, v, t, METHOD)?;
        }
        sum += Complex::new(term.re, T::zero());
    }
    let value = sum.re * r / m;
    if !value.is_finite() {
        return Err(Error::Inversion {
            method: METHOD,
            t: t.to_f64().unwrap_or(f64::NAN),
            reason: "non-finite result".into(),
        });
    }
    Ok(value)
}

fn check_conjugate_symmetry<T: Real>(
    f: &TransformFunction<'_, T>,
    p: Complex<T>,
    v: Complex<T>,
    t: T,
    method: &'static str,
) -> Result<()> {
    let vc = f.eval(p.conj())?;
    if (vc - v.conj()).norm() > T::attainable(1e-10) * v.norm().max(T::min_positive_value()) {
        return Err(Error::Inversion {
            method,
            t: t.to_f64().unwrap_or(f64::NAN),
            reason: "transform is not conjugate-symmetric; the original would not be real".into(),
        });
    }
    Ok(())
}

/// `f(t) = (1/pi) int_0^inf exp(-r t) Im F(r e^{-i pi}) dr`, the Bromwich
/// integral folded onto the two lips of the negative real axis.
///
/// The integral is split at `r = 1` and each half is mapped through
/// `r = e^u`. Requires `r |F(-r)| -> 0` as `r -> 0` so that the small circle
/// around the origin contributes nothing.
pub fn invert_branchcut<T: Real>(f: &TransformFunction<'_, T>, t: T, quad_tol: f64) -> Result<T> {
    const METHOD: &str = "branch-cut";
    check_time(METHOD, t)?;
    let fail = |reason: String| Error::Inversion {
        method: METHOD,
        t: t.to_f64().unwrap_or(f64::NAN),
        reason,
    };
    let lower = |r: T| Complex::new(-r, -T::zero());

    let r1 = T::lit(1e-8);
    let r2 = T::lit(1e-12);
    let m1 = f.eval(lower(r1))?.norm() * r1;
    let m2 = f.eval(lower(r2))?.norm() * r2;
    if !(m2.is_finite() && m1.is_finite()) || m2 > T::lit(1e-3) || m2 > m1 {
        return Err(fail(format!(
            "r |F(-r)| does not vanish at the origin ({m2:e} at r = 1e-12): pole or non-integrable singularity at p = 0"
        )));
    }

    let fail_ref = &fail;
    let integrand = |r: T| -> Complex<T> {
        if r < T::lit(1e-300) {
            // below this the vanishing small-circle check bounds the contribution
            return Complex::new(T::zero(), T::zero());
        }
        match f.eval(lower(r)) {
            Ok(v) => Complex::new(v.im * (-r * t).exp() * r, T::zero()),
            Err(_) => Complex::new(T::nan(), T::zero()),
        }
    };
    let opts = QuadOptions::rel(quad_tol);
    let head = integrate_complex_to_infinity(|s: T| integrand((-s).exp()), T::zero(), opts)
        .map_err(|e| fail_ref(format!("integrand on r < 1: {e}")))?;
    let u_max = (T::lit(745.0) / t).max(T::one()).ln();
    let body = integrate_complex(|u: T| integrand(u.exp()), T::zero(), u_max, opts.with_abs(
        quad_tol * 1e-3 * head.value.norm().to_f64().unwrap_or(0.0),
    ))
    .map_err(|e| fail_ref(format!("integrand on r > 1: {e}")))?;
    if !(head.converged && body.converged) {
        return Err(fail(format!(
            "quadrature did not converge (error estimate {:e})",
            head.abs_error + body.abs_error
        )));
    }
    Ok((head.value.re + body.value.re) / T::PI())
}

/// `f(t) = sum_k Res_k exp(p_k t)` for a strictly proper rational transform
/// with simple poles.
pub fn invert_residues<T: Real>(r: &Rational<T>, t: T) -> Result<T> {
    const METHOD: &str = "residue";
    check_time(METHOD, t)?;
    let residues = residue_table(r, t)?;
    let sum = residues
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, (z, res)| acc + *res * (*z * t).exp());
    realness(METHOD, t, sum, residues.iter().map(|(z, res)| (*res * (*z * t).exp()).norm()).sum())
}

pub(crate) fn residue_table<T: Real>(r: &Rational<T>, t: T) -> Result<Vec<(Complex<T>, Complex<T>)>> {
    let fail = |reason: &str| Error::Inversion {
        method: "residue",
        t: t.to_f64().unwrap_or(f64::NAN),
        reason: reason.into(),
    };
    if !r.is_strictly_proper() {
        return Err(fail("transform is not strictly proper"));
    }
    r.simple_residues()?.ok_or_else(|| fail("repeated pole"))
}

fn realness<T: Real>(method: &'static str, t: T, sum: Complex<T>, magnitude: T) -> Result<T> {
    if sum.im.abs() > T::attainable(1e-10) * magnitude.max(sum.norm()) {
        return Err(Error::Inversion {
            method,
            t: t.to_f64().unwrap_or(f64::NAN),
            reason: format!("imaginary residue {:e} in a real original", sum.im.to_f64().unwrap_or(f64::NAN)),
        });
    }
    Ok(sum.re)
}

/// Chooses a method from the declared analyticity: branch cut -> cut
/// integral; rational with at most four simple poles -> residues; anything
/// else -> Talbot.
pub fn invert_auto<T: Real>(f: &TransformFunction<'_, T>, t: T) -> Result<(T, InversionMethod)> {
    match &f.analyticity {
        Analyticity::BranchCut => Ok((
            invert_branchcut(f, t, DEFAULT_BRANCH_CUT_TOL)?,
            InversionMethod::BranchCut,
        )),
        Analyticity::Meromorphic {
            poles,
            rational: Some(r),
        } if poles.len() <= 4 && r.is_strictly_proper() && r.simple_residues()?.is_some() => {
            Ok((invert_residues(r, t)?, InversionMethod::Residue))
        }
        Analyticity::Meromorphic { .. } => Ok((
            invert_talbot(f, t, DEFAULT_TALBOT_NODES)?,
            InversionMethod::Talbot,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::principal_powf;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn talbot_known_pairs() {
        let f = TransformFunction::meromorphic(|p: Complex<f64>| Ok(1.0 / (p + 1.0)), vec![c(-1.0, 0.0)]).unwrap();
        let v = invert_talbot(&f, 1.0, DEFAULT_TALBOT_NODES).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-10, "{v}");
        let f = TransformFunction::meromorphic(|p: Complex<f64>| Ok(1.0 / (p * p)), vec![c(0.0, 0.0)]).unwrap();
        let v = invert_talbot(&f, 2.5, DEFAULT_TALBOT_NODES).unwrap();
        assert!((v - 2.5).abs() < 1e-10, "{v}");
    }

    #[test]
    fn talbot_rejects_bad_node_counts() {
        let f = TransformFunction::meromorphic(|p: Complex<f64>| Ok(1.0 / (p + 1.0)), vec![]).unwrap();
        assert!(invert_talbot(&f, 1.0, 15).is_err());
        assert!(invert_talbot(&f, 1.0, 130).is_err());
        assert!(invert_talbot(&f, 0.0, 24).is_err());
    }

    #[test]
    fn talbot_reports_non_finite_nodes() {
        let f = TransformFunction::branch_cut(|_p: Complex<f64>| Ok(c(f64::NAN, 0.0)));
        assert!(matches!(invert_talbot(&f, 1.0, 24), Err(Error::Inversion { .. })));
    }

    #[test]
    fn talbot_detects_non_real_original() {
        let f = TransformFunction::branch_cut(|p: Complex<f64>| Ok(c(0.0, 1.0) / (p + 1.0)));
        assert!(invert_talbot(&f, 1.0, 24).is_err());
    }

    #[test]
    fn branchcut_inverse_sqrt() {
        let f = TransformFunction::branch_cut(|p: Complex<f64>| Ok(principal_powf(p, -0.5)));
        let v = invert_branchcut(&f, 1.0, 1e-10).unwrap();
        assert!((v - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-9, "{v}");
    }

    #[test]
    fn branchcut_rejects_pole_at_origin() {
        let f = TransformFunction::branch_cut(|p: Complex<f64>| Ok(1.0 / p));
        assert!(matches!(invert_branchcut(&f, 1.0, 1e-9), Err(Error::Inversion { .. })));
    }

    #[test]
    fn roots_of_quadratic_and_quartic() {
        let r = polynomial_roots(&[2.0, -3.0, 1.0]).unwrap();
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((re[0] - 1.0).abs() < 1e-12 && (re[1] - 2.0).abs() < 1e-12);
        // (p^2 + 1)(p + 1)(p + 3)
        let r = polynomial_roots(&poly_mul(&poly_mul(&[1.0, 0.0, 1.0], &[1.0, 1.0]), &[3.0, 1.0])).unwrap();
        assert_eq!(r.len(), 4);
        for target in [c(0.0, 1.0), c(0.0, -1.0), c(-1.0, 0.0), c(-3.0, 0.0)] {
            assert!(r.iter().any(|z| (z - target).norm() < 1e-10));
        }
    }

    #[test]
    fn residue_inversion_of_partial_fractions() {
        // 1/((p+1)(p+2)) -> e^-t - e^-2t
        let r = Rational::new(vec![1.0], vec![2.0, 3.0, 1.0]).unwrap();
        let f = TransformFunction::rational(r).unwrap();
        let (v, m) = invert_auto(&f, 0.7).unwrap();
        assert_eq!(m, InversionMethod::Residue);
        assert!((v - ((-0.7f64).exp() - (-1.4f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn right_half_plane_poles_are_rejected() {
        let r = Rational::new(vec![1.0], vec![-1.0, 1.0]).unwrap();
        assert!(TransformFunction::rational(r).is_err());
    }

    #[test]
    fn repeated_poles_fall_back_to_talbot() {
        let r = Rational::new(vec![1.0], vec![1.0, 2.0, 1.0]).unwrap();
        let f = TransformFunction::rational(r).unwrap();
        let (v, m) = invert_auto(&f, 1.5).unwrap();
        assert_eq!(m, InversionMethod::Talbot);
        assert!((v - 1.5 * (-1.5f64).exp()).abs() < 1e-10);
    }
}
