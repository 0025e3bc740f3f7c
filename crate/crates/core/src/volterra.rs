//! Product-integration discretisation of `N C(t) + (G * C)(t) = t` on a
//! uniform grid `t_n = n h`.
//!
//! The unknown is split as `C = S + R` with
//! `S(s) = c0 + (C_1 - c0) (s / h)^beta`, where `beta` is the model's creep
//! onset exponent. The convolution with `S` is done exactly (or by adaptive
//! quadrature), and the remainder `R`, which vanishes at the first two grid
//! points and is much smoother, is interpolated linearly cell by cell with
//! exact kernel moments.

use crate::error::{Error, Result};
use crate::kernels::{MaterialModel, RelaxationKernel};
use crate::quad::{integrate, kronrod15, QuadOptions};
use crate::scalar::{gamma, Real};

/// Kernel moments on the cells `[j h, (j + 1) h]`:
/// `a_j = int G(u) du` and `b_j = int G(u) (u - j h) / h du`.
pub(crate) struct CellMoments<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
}

fn prony_moments<T: Real>(g: T, r: T, h: T, j: usize) -> (T, T) {
    let x = r * h;
    let decay = (-r * h * T::from_count(j)).exp();
    // int_0^1 e^{-x w} dw and int_0^1 e^{-x w} w dw
    let (m0, m1) = if x < T::lit(0.1) {
        let mut m0 = T::zero();
        let mut m1 = T::zero();
        let mut term = T::one();
        for k in 0..14 {
            let kf = T::from_count(k);
            m0 += term / (kf + T::one());
            m1 += term / (kf + T::lit(2.0));
            term = term * (-x) / (kf + T::one());
        }
        (m0, m1)
    } else {
        let e = (-x).exp();
        ((T::one() - e) / x, (T::one() - e * (T::one() + x)) / (x * x))
    };
    (g * decay * h * m0, g * decay * h * m1)
}

fn power_law_moments<T: Real>(amp: T, alpha: T, h: T, j: usize) -> (T, T) {
    let scale = amp * h.powf(T::one() - alpha) / gamma(T::one() - alpha);
    let jf = T::from_count(j);
    if j < 16 {
        let e1 = T::one() - alpha;
        let e2 = T::lit(2.0) - alpha;
        let p1 = ((jf + T::one()).powf(e1) - jf.powf(e1)) / e1;
        let p2 = ((jf + T::one()).powf(e2) - jf.powf(e2)) / e2;
        (scale * p1, scale * (p2 - jf * p1))
    } else {
        let m0 = kronrod15(|v: T| (jf + v).powf(-alpha), T::zero(), T::one());
        let m1 = kronrod15(|v: T| (jf + v).powf(-alpha) * v, T::zero(), T::one());
        (scale * m0, scale * m1)
    }
}

fn quadrature_moments<T: Real>(k: &RelaxationKernel<T>, h: T, j: usize) -> Result<(T, T)> {
    let lo = h * T::from_count(j);
    let hi = lo + h;
    if j == 0 {
        let opts = QuadOptions::rel(1e-13);
        let a = integrate(|u| k.eval_unchecked(u.max(T::min_positive_value())), lo, hi, opts)?
            .require("kernel cell moment")?;
        let b = integrate(|u| k.eval_unchecked(u.max(T::min_positive_value())) * (u - lo) / h, lo, hi, opts)?
            .require("kernel cell moment")?;
        Ok((a, b))
    } else {
        Ok((
            kronrod15(|u| k.eval_unchecked(u), lo, hi),
            kronrod15(|u| k.eval_unchecked(u) * (u - lo) / h, lo, hi),
        ))
    }
}

fn leaf_moments<T: Real>(k: &RelaxationKernel<T>, h: T, j: usize) -> Result<(T, T)> {
    Ok(match k {
        RelaxationKernel::Prony(terms) => terms.iter().fold((T::zero(), T::zero()), |acc, t| {
            let (a, b) = prony_moments(t.modulus, t.rate, h, j);
            (acc.0 + a, acc.1 + b)
        }),
        RelaxationKernel::PowerLaw { amplitude, alpha } => power_law_moments(*amplitude, *alpha, h, j),
        RelaxationKernel::StretchedExponential { .. } => quadrature_moments(k, h, j)?,
        RelaxationKernel::Zero | RelaxationKernel::Sum(_) => (T::zero(), T::zero()),
    })
}

impl<T: Real> CellMoments<T> {
    pub fn new(kernel: &RelaxationKernel<T>, h: T, cells: usize) -> Result<Self> {
        let mut a = vec![T::zero(); cells];
        let mut b = vec![T::zero(); cells];
        for leaf in kernel.components() {
            for j in 0..cells {
                let (aj, bj) = leaf_moments(leaf, h, j)?;
                a[j] += aj;
                b[j] += bj;
            }
        }
        Ok(Self { a, b })
    }
}

/// `J(t) = int_0^t G(t - s) s^beta ds`.
fn singular_moment<T: Real>(kernel: &RelaxationKernel<T>, beta: T, t: T) -> Result<T> {
    let mut total = T::zero();
    for leaf in kernel.components() {
        total += match leaf {
            RelaxationKernel::PowerLaw { amplitude, alpha } => {
                *amplitude * t.powf(T::one() - *alpha + beta) * gamma(beta + T::one())
                    / gamma(T::lit(2.0) - *alpha + beta)
            }
            RelaxationKernel::Zero | RelaxationKernel::Sum(_) => T::zero(),
            k => {
                // substitute s = t w^(1/beta) to remove the s^beta endpoint behaviour
                let inv = T::one() / beta;
                let f = |w: T| {
                    if w <= T::zero() {
                        return T::zero();
                    }
                    let s = t * w.powf(inv);
                    let u = (t - s).max(T::min_positive_value());
                    k.eval_unchecked(u) * w.powf(inv)
                };
                let v = integrate(f, T::zero(), T::one(), QuadOptions::rel(1e-12))?
                    .require("singular convolution moment")?;
                v * t.powf(T::one() + beta) / beta
            }
        };
    }
    Ok(total)
}

/// Exponents of the three leading terms of `C(t) - C(0)` at small `t`.
pub(crate) fn onset_exponents<T: Real>(model: &MaterialModel<T>) -> [T; START] {
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    if model.newtonian() > T::zero() {
        // C = t/N - (1/N^2) int_0^t (t - s) G(s) ds + ...
        let kernel = model.kernel();
        if let Some(alpha) = kernel.strong_singularity_exponent() {
            [one, two - alpha, three - two * alpha]
        } else if let Some(alpha) = kernel.weak_singularity_exponent() {
            [one, two, two + alpha]
        } else {
            [one, two, three]
        }
    } else {
        let beta = model.creep_onset_exponent();
        [beta, two * beta, three * beta]
    }
}

/// Number of start-up cells solved as one block.
pub(crate) const START: usize = 3;

/// Discretised convolution operator on a uniform grid.
pub(crate) struct Discretisation<T> {
    pub h: T,
    pub newtonian: T,
    pub c0: T,
    pub beta: [T; START],
    pub moments: CellMoments<T>,
    /// `int_0^{t_n} G` for `n = 0..=len`.
    pub cumulative: Vec<T>,
    /// `h^-beta J_beta(t_n)` per start-up exponent, `n = 0..=len`.
    pub singular: [Vec<T>; START],
}

/// Gaussian elimination with partial pivoting.
fn solve_small<T: Real>(mut a: [[T; START]; START], mut b: [T; START]) -> Option<[T; START]> {
    for col in 0..START {
        let piv = (col..START).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if !(a[piv][col].abs() > T::zero()) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..START {
            let f = a[row][col] / a[col][col];
            for k in col..START {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = [T::zero(); START];
    for row in (0..START).rev() {
        let mut acc = b[row];
        for k in row + 1..START {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

impl<T: Real> Discretisation<T> {
    pub fn new(model: &MaterialModel<T>, h: T, len: usize, c0: T) -> Result<Self> {
        if len < START {
            return Err(Error::Input(format!("volterra grid needs at least {START} points")));
        }
        let beta = onset_exponents(model);
        let moments = CellMoments::new(model.kernel(), h, len)?;
        let mut cumulative = vec![T::zero(); len + 1];
        for n in 1..=len {
            cumulative[n] = cumulative[n - 1] + moments.a[n - 1];
        }
        let mut singular: [Vec<T>; START] = std::array::from_fn(|_| vec![T::zero(); len + 1]);
        for (b, s) in beta.iter().zip(singular.iter_mut()) {
            for n in 1..=len {
                let t = h * T::from_count(n);
                s[n] = singular_moment(model.kernel(), *b, t)? / h.powf(*b);
            }
        }
        Ok(Self {
            h,
            newtonian: model.newtonian(),
            c0,
            beta,
            moments,
            cumulative,
            singular,
        })
    }

    fn basis(&self, n: usize) -> [T; START] {
        let x = T::from_count(n);
        self.beta.map(|b| x.powf(b))
    }

    /// Coefficients of `S(s) = c0 + sum_k d_k (s/h)^beta_k` through the first
    /// `START` samples.
    fn start_coefficients(&self, c: &[T]) -> [T; START] {
        let a: [[T; START]; START] = std::array::from_fn(|i| self.basis(i + 1));
        let b: [T; START] = std::array::from_fn(|i| c[i] - self.c0);
        solve_small(a, b).unwrap_or([T::zero(); START])
    }

    fn s_at(&self, d: &[T; START], n: usize) -> T {
        self.basis(n).iter().zip(d).fold(self.c0, |acc, (x, d)| acc + *d * *x)
    }

    fn start_convolution(&self, d: &[T; START], n: usize) -> T {
        self.singular
            .iter()
            .zip(d)
            .fold(self.c0 * self.cumulative[n], |acc, (s, d)| acc + *d * s[n])
    }

    /// `C'(t_1)` from the start-up basis.
    pub fn first_rate(&self, c: &[T]) -> T {
        let d = self.start_coefficients(c);
        self.beta.iter().zip(&d).fold(T::zero(), |acc, (b, d)| acc + *b * *d) / self.h
    }

    /// `N C_n + (G * C)(t_n)` for every `n = 1..=len`, given `c[k] = C(t_{k+1})`.
    pub fn apply(&self, c: &[T]) -> Vec<T> {
        let len = c.len();
        let d = self.start_coefficients(c);
        let r: Vec<T> = (0..=len)
            .map(|k| if k <= START { T::zero() } else { c[k - 1] - self.s_at(&d, k) })
            .collect();
        (1..=len)
            .map(|n| {
                let mut conv = self.start_convolution(&d, n);
                for k in 0..n {
                    let j = n - k - 1;
                    conv += self.moments.b[j] * r[k] + (self.moments.a[j] - self.moments.b[j]) * r[k + 1];
                }
                self.newtonian * c[n - 1] + conv
            })
            .collect()
    }

    /// Time-steps the equation for `C_1, ..., C_len`.
    pub fn solve(&self, len: usize) -> Result<Vec<T>> {
        let h = self.h;
        let nn = self.newtonian;
        // the first START steps involve only the start-up basis (R_n = 0)
        let a: [[T; START]; START] = std::array::from_fn(|i| {
            let x = self.basis(i + 1);
            std::array::from_fn(|k| nn * x[k] + self.singular[k][i + 1])
        });
        let b: [T; START] = std::array::from_fn(|i| {
            h * T::from_count(i + 1) - self.c0 * self.cumulative[i + 1] - nn * self.c0
        });
        let d = solve_small(a, b).ok_or_else(|| Error::Input("volterra start-up system is singular".into()))?;
        let mut c = vec![T::zero(); len];
        for n in 1..=START {
            c[n - 1] = self.s_at(&d, n);
        }
        let mut r = vec![T::zero(); len + 1];
        let diag = nn + self.moments.a[0] - self.moments.b[0];
        if !(diag > T::zero()) {
            return Err(Error::Input("volterra system has a vanishing diagonal".into()));
        }
        for n in START + 1..=len {
            let s_n = self.s_at(&d, n);
            let mut known = self.start_convolution(&d, n);
            for k in 0..n - 1 {
                let j = n - k - 1;
                known += self.moments.b[j] * r[k] + (self.moments.a[j] - self.moments.b[j]) * r[k + 1];
            }
            // the R_{n-1} term of cell n-1 uses b_0
            known += self.moments.b[0] * r[n - 1];
            let t_n = h * T::from_count(n);
            r[n] = (t_n - known - nn * s_n) / diag;
            c[n - 1] = r[n] + s_n;
        }
        Ok(c)
    }

    /// `||L||_1 ||L^-1||_1` of the lower-triangular Toeplitz matrix acting on `R`.
    pub fn condition_estimate(&self, len: usize) -> T {
        if len < 2 {
            return T::one();
        }
        let m = len - 1;
        let a = &self.moments.a;
        let b = &self.moments.b;
        let mut col = vec![T::zero(); m];
        col[0] = self.newtonian + a[0] - b[0];
        for i in 1..m {
            col[i] = b[i - 1] + a[i] - b[i];
        }
        let mut inv = vec![T::zero(); m];
        inv[0] = T::one() / col[0];
        for i in 1..m {
            let mut acc = T::zero();
            for k in 1..=i {
                acc += col[k] * inv[i - k];
            }
            inv[i] = -acc / col[0];
        }
        let n1: T = col.iter().map(|v| v.abs()).sum();
        let n2: T = inv.iter().map(|v| v.abs()).sum();
        n1 * n2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prony_moments_match_quadrature() {
        let k = RelaxationKernel::prony([(2.0f64, 3.0)]).unwrap();
        for &h in &[1e-3, 0.1, 0.7] {
            for j in [0usize, 1, 5, 40] {
                let (a, b) = leaf_moments(&k, h, j).unwrap();
                let (qa, qb) = quadrature_moments(&k, h, j).unwrap();
                assert!((a - qa).abs() <= 1e-13 * qa.abs().max(1e-300), "h {h} j {j}");
                assert!((b - qb).abs() <= 1e-13 * qb.abs().max(1e-300), "h {h} j {j}");
            }
        }
    }

    #[test]
    fn power_law_moments_are_continuous_across_switch() {
        let (a15, b15) = power_law_moments(1.0f64, 0.5, 0.01, 15);
        let (a16, b16) = power_law_moments(1.0f64, 0.5, 0.01, 16);
        // a_j decreases slowly with j; b_j is close to a_j / 2
        assert!(a16 < a15 && a15 / a16 < 1.04);
        assert!((b15 / a15 - 0.5).abs() < 0.01 && (b16 / a16 - 0.5).abs() < 0.01);
    }

    #[test]
    fn singular_moment_power_law_closed_form() {
        let pl = RelaxationKernel::power_law(1.0f64, 0.5).unwrap();
        // int_0^t (t-s)^-1/2 / Gamma(1/2) * s^1/2 ds = t Gamma(3/2) / Gamma(2)
        let v = singular_moment(&pl, 0.5, 2.0).unwrap();
        assert!((v - 2.0 * gamma(1.5f64)).abs() < 1e-13);
        let pr = RelaxationKernel::prony([(1.0f64, 1.0)]).unwrap();
        let v = singular_moment(&pr, 1.0, 1.0).unwrap();
        // int_0^1 e^-(1-s) s ds = e^-1
        assert!((v - (-1.0f64).exp()).abs() < 1e-12, "{v}");
    }
}
