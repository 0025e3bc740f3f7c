//! Shared models and closed-form oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use statrs::function::erf::erfc;
use viscowave_core::kernels::{MaterialModel, RelaxationKernel};

pub fn model(n: f64, k: RelaxationKernel<f64>) -> MaterialModel<f64> {
    MaterialModel::new(1.0, n, k).unwrap()
}

pub fn prony() -> RelaxationKernel<f64> {
    RelaxationKernel::prony([(1.0, 1.0)]).unwrap()
}

pub fn power(alpha: f64) -> RelaxationKernel<f64> {
    RelaxationKernel::power_law(1.0, alpha).unwrap()
}

pub fn kww(alpha: f64) -> RelaxationKernel<f64> {
    RelaxationKernel::stretched_exponential(alpha, 1.0).unwrap()
}

/// The nine canonical models: three kernel families times `N in {0, 0.5, 2}`.
pub fn canonical() -> Vec<(String, MaterialModel<f64>)> {
    let mut out = Vec::new();
    for (name, k) in [("prony", prony()), ("power", power(0.5)), ("kww", kww(0.5))] {
        for n in [0.0, 0.5, 2.0] {
            out.push((format!("{name} N={n}"), model(n, k.clone())));
        }
    }
    out
}

/// Regime row the canonical model should land in.
pub fn expected_row(m: &MaterialModel<f64>) -> usize {
    if m.newtonian() > 0.0 {
        3
    } else if m.kernel().strong_singularity_exponent().is_some() {
        2
    } else {
        1
    }
}

pub fn uniform(h: f64, len: usize) -> Vec<f64> {
    (1..=len).map(|k| k as f64 * h).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Creep rate of `N C + e^-t * C = t` by partial fractions:
/// `1/(N+1) + e^(-Pt) / (N (N+1))`, `P = (N+1)/N`.
pub fn prony_creep_rate(n: f64, t: f64) -> f64 {
    let p = (n + 1.0) / n;
    1.0 / (n + 1.0) + (-p * t).exp() / (n * (n + 1.0))
}

/// Inverse of `1/(N p + sqrt p)` in closed form: `e^(t/N^2) erfc(sqrt t / N) / N`.
pub fn sqrt_kernel_creep_closed_form(n: f64, t: f64) -> f64 {
    let z = t.sqrt() / n;
    // e^(z^2) erfc(z) loses nothing for the moderate z used here
    (z * z).exp() * erfc(z) / n
}

/// The same function by direct quadrature of its cut integral
/// `(1/pi) int_0^inf e^(-rt) r^(-1/2) / (1 + N^2 r) dr`, mapped by
/// `r = tan^2(theta) / N^2` onto a finite smooth integrand.
pub fn sqrt_kernel_creep_quadrature(n: f64, t: f64) -> f64 {
    let f = |th: f64| {
        if th >= PI / 2.0 {
            0.0
        } else {
            let s = th.tan() / n;
            (-t * s * s).exp()
        }
    };
    2.0 / (PI * n) * simpson(f, 0.0, PI / 2.0, 40_000)
}

/// Displacement of `rho u_tt = N u_xxt` with `u_t(0) = delta`: the time
/// integral of the heat kernel with diffusivity `D = N / rho`.
pub fn newtonian_green(n: f64, rho: f64, t: f64, x: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let d = n / rho;
    let x = x.abs();
    (t / (PI * d)).sqrt() * (-x * x / (4.0 * d * t)).exp() - x / (2.0 * d) * erfc(x / (2.0 * (d * t).sqrt()))
}

/// Modified Bessel function `I_0` by its power series (small arguments).
pub fn bessel_i0(z: f64) -> f64 {
    let q = z * z / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Maxwell model (`rho = G0 = 1`, relaxation rate 1) at the source point:
/// `u(t, 0) = [e^(-t/2) I0(t/2) + int_0^t e^(-s/2) I0(s/2) ds] / 2`.
pub fn maxwell_green_at_origin(t: f64) -> f64 {
    let g = |s: f64| (-s / 2.0).exp() * bessel_i0(s / 2.0);
    0.5 * (g(t) + simpson(g, 0.0, t, 2000))
}
