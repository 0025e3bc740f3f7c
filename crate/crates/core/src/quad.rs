//! Globally adaptive Gauss–Kronrod (7/15) quadrature for real- and
//! complex-valued integrands.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits for [`integrate_complex`] and friends.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<V> {
    pub value: V,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Segment<T: Real> {
    a: T,
    b: T,
    value: Complex<T>,
    error: T,
}

fn kronrod<T, F>(f: &mut F, a: T, b: T) -> Result<(Complex<T>, T)>
where
    T: Real,
    F: FnMut(T) -> Complex<T>,
{
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = eval(f, center)?;
    let mut res_k = fc * T::lit(WGK[7]);
    let mut res_g = fc * T::lit(WG[3]);
    let mut res_abs = fc.norm() * T::lit(WGK[7]);
    let mut values = [(Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero())); 7];
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        values[j] = (f1, f2);
        let w = T::lit(WGK[j]);
        res_k += (f1 + f2) * w;
        res_abs += (f1.norm() + f2.norm()) * w;
        if j % 2 == 1 {
            res_g += (f1 + f2) * T::lit(WG[j / 2]);
        }
    }
    let mean = res_k * half;
    let mut res_asc = (fc - mean).norm() * T::lit(WGK[7]);
    for (j, (f1, f2)) in values.iter().enumerate() {
        res_asc += ((*f1 - mean).norm() + (*f2 - mean).norm()) * T::lit(WGK[j]);
    }
    let scale = half_len.abs();
    let result = res_k * half_len;
    res_abs = res_abs * scale;
    res_asc = res_asc * scale;
    let mut err = ((res_k - res_g) * half_len).norm();
    if res_asc != T::zero() && err != T::zero() {
        let ratio = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
        err = res_asc * ratio.min(T::one());
    }
    let roundoff = T::lit(50.0) * T::epsilon() * res_abs;
    if res_abs > T::min_positive_value() / (T::lit(50.0) * T::epsilon()) {
        err = err.max(roundoff);
    }
    Ok((result, err))
}

#[inline]
fn eval<T, F>(f: &mut F, x: T) -> Result<Complex<T>>
where
    T: Real,
    F: FnMut(T) -> Complex<T>,
{
    let v = f(x);
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            context: "quadrature integrand",
            at: x.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Integrates a complex-valued `f` over `[a, b]` (finite bounds).
///
/// Returns the best estimate even when the interval budget is exhausted;
/// check `converged` or use [`QuadResult::require`].
pub fn integrate_complex<T, F>(mut f: F, a: T, b: T, opts: QuadOptions) -> Result<QuadResult<Complex<T>>>
where
    T: Real,
    F: FnMut(T) -> Complex<T>,
{
    let rel = T::attainable(opts.rel_tol);
    let abs = T::lit(opts.abs_tol);
    if a == b {
        return Ok(QuadResult {
            value: Complex::new(T::zero(), T::zero()),
            abs_error: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    let (v0, e0) = kronrod(&mut f, a, b)?;
    let mut evaluations = 15;
    let mut segments = vec![Segment {
        a,
        b,
        value: v0,
        error: e0,
    }];
    let mut total = v0;
    let mut total_err = e0;
    let mut converged = total_err <= abs.max(rel * total.norm());
    while !converged && segments.len() < opts.max_intervals {
        let (idx, _) = segments
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, s)| {
                if s.error > acc.1 {
                    (i, s.error)
                } else {
                    acc
                }
            });
        let seg = segments.swap_remove(idx);
        let mid = T::lit(0.5) * (seg.a + seg.b);
        if mid <= seg.a.min(seg.b) || mid >= seg.a.max(seg.b) {
            // interval cannot be split further in this precision
            segments.push(seg);
            break;
        }
        let (vl, el) = kronrod(&mut f, seg.a, mid)?;
        let (vr, er) = kronrod(&mut f, mid, seg.b)?;
        evaluations += 30;
        total = total - seg.value + vl + vr;
        total_err = total_err - seg.error + el + er;
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: vl,
            error: el,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: vr,
            error: er,
        });
        // resum periodically to avoid drift in the running error total
        if segments.len() % 64 == 0 {
            total = segments.iter().fold(Complex::new(T::zero(), T::zero()), |acc, s| acc + s.value);
            total_err = segments.iter().map(|s| s.error).sum();
        }
        converged = total_err <= abs.max(rel * total.norm());
    }
    total = segments.iter().fold(Complex::new(T::zero(), T::zero()), |acc, s| acc + s.value);
    total_err = segments.iter().map(|s| s.error).sum();
    converged = converged || total_err <= abs.max(rel * total.norm());
    Ok(QuadResult {
        value: total,
        abs_error: total_err.to_f64().unwrap_or(f64::INFINITY),
        evaluations,
        converged,
    })
}

/// Single 15-point Kronrod rule on `[a, b]`, for smooth integrands only.
pub(crate) fn kronrod15<T, F>(mut f: F, a: T, b: T) -> T
where
    T: Real,
    F: FnMut(T) -> T,
{
    let center = T::lit(0.5) * (a + b);
    let half_len = T::lit(0.5) * (b - a);
    let mut acc = f(center) * T::lit(WGK[7]);
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        acc += (f(center - dx) + f(center + dx)) * T::lit(WGK[j]);
    }
    acc * half_len
}

/// Real-valued counterpart of [`integrate_complex`].
pub fn integrate<T, F>(mut f: F, a: T, b: T, opts: QuadOptions) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let r = integrate_complex(|x| Complex::new(f(x), T::zero()), a, b, opts)?;
    Ok(QuadResult {
        value: r.value.re,
        abs_error: r.abs_error,
        evaluations: r.evaluations,
        converged: r.converged,
    })
}

/// Integrates over `[a, inf)` through the map `x = a + (1 - s) / s`.
pub fn integrate_complex_to_infinity<T, F>(mut f: F, a: T, opts: QuadOptions) -> Result<QuadResult<Complex<T>>>
where
    T: Real,
    F: FnMut(T) -> Complex<T>,
{
    integrate_complex(
        |s: T| {
            let x = a + (T::one() - s) / s;
            let v = f(x);
            if v.re == T::zero() && v.im == T::zero() {
                v
            } else {
                v / (s * s)
            }
        },
        T::zero(),
        T::one(),
        opts,
    )
}

impl<V> QuadResult<V> {
    /// Converts a non-converged result into [`Error::Quadrature`].
    pub fn require(self, context: &'static str) -> Result<V> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Quadrature {
                context,
                abs_error: self.abs_error,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| x.powi(5) - 3.0 * x * x, 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, QuadOptions::rel(1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate_complex_to_infinity(
            |x: f64| Complex::new((-x).exp(), (-2.0 * x).exp()),
            0.0,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value - Complex::new(1.0, 0.5)).norm() < 1e-11);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|x: f64| 1.0 / (x - 0.5), 0.0, 1.0, QuadOptions::default());
        assert!(err.is_err() || !err.unwrap().converged);
    }

    #[test]
    fn single_precision_terminates() {
        let r = integrate(|x: f32| x.exp(), 0.0, 1.0, QuadOptions::rel(1e-12)).unwrap();
        assert!((r.value - (std::f32::consts::E - 1.0)).abs() < 1e-5);
    }
}
