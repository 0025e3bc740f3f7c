//! Creep compliance from a material model, both through the Laplace-domain
//! relation `Q(p) p C~(p) = 1` and through the time-domain relation
//! `N C(t) + (G * C)(t) = t`, plus the inverse problem of reading `N` off a
//! creep curve.

use std::io::{Read, Write};

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{ExtendedReal, MaterialModel};
use crate::laplace::{
    invert_branchcut, invert_residues, invert_talbot, poly_mul, residue_table, InversionMethod, Rational,
    TransformFunction, DEFAULT_BRANCH_CUT_TOL, DEFAULT_TALBOT_NODES,
};
use crate::limits::{geometric_limit, LimitOptions};
use crate::scalar::Real;
use crate::volterra::Discretisation;

/// Upper end of the `p` grid used for the `p -> inf` limits.
pub const LIMIT_P_MAX: f64 = 1e8;

/// How a creep curve was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum CreepSource {
    Transform {
        compliance: InversionMethod,
        rate: InversionMethod,
    },
    VolterraSecondKind,
    VolterraFirstKind,
    Data,
}

impl CreepSource {
    pub fn describe(&self) -> String {
        match self {
            Self::Transform { compliance, rate } => format!("transform (C: {compliance}, C': {rate})"),
            Self::VolterraSecondKind => "volterra second kind".into(),
            Self::VolterraFirstKind => "volterra first kind".into(),
            Self::Data => "data".into(),
        }
    }
}

/// Sampled creep compliance `C(t)` and its rate `C'(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CreepCurve<T> {
    pub t: Vec<T>,
    pub c: Vec<T>,
    pub c_rate: Vec<T>,
    /// `C(0+)` when known from the model.
    pub c0: Option<T>,
    /// `C'(0+)` when known from the model.
    pub c_rate0: Option<ExtendedReal<T>>,
    pub source: CreepSource,
}

/// Failed shape test of a creep curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeViolation<T> {
    pub index: usize,
    pub t: T,
    pub what: &'static str,
}

impl<T: Real> CreepCurve<T> {
    /// Curve from measured or externally computed samples.
    pub fn from_samples(t: Vec<T>, c: Vec<T>, c_rate: Vec<T>) -> Result<Self> {
        if t.len() != c.len() || t.len() != c_rate.len() {
            return Err(Error::Input("creep curve columns have different lengths".into()));
        }
        if t.len() < 2 {
            return Err(Error::Input("creep curve needs at least two samples".into()));
        }
        if t.iter().any(|&x| !(x > T::zero() && x.is_finite())) {
            return Err(Error::Input("creep curve times must be positive and finite".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("creep curve times must be strictly increasing".into()));
        }
        if c.iter().chain(c_rate.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Input("creep curve contains non-finite values".into()));
        }
        Ok(Self {
            t,
            c,
            c_rate,
            c0: None,
            c_rate0: None,
            source: CreepSource::Data,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Checks the Bernstein shape: `C >= 0` non-decreasing and concave,
    /// `C' >= 0` non-increasing, each up to relative tolerance `rel_tol`.
    pub fn shape_violations(&self, rel_tol: f64) -> Vec<ShapeViolation<T>> {
        let tol = T::lit(rel_tol);
        let n = self.len();
        let c_scale = self.c.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let r_scale = self.c_rate.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut out = Vec::new();
        let mut push = |index: usize, what| {
            out.push(ShapeViolation {
                index,
                t: self.t[index],
                what,
            })
        };
        for i in 0..n {
            if self.c[i] < -tol * c_scale {
                push(i, "C negative");
            }
            if self.c_rate[i] < -tol * r_scale {
                push(i, "C' negative");
            }
        }
        for i in 1..n {
            if self.c[i] < self.c[i - 1] - tol * c_scale {
                push(i, "C decreasing");
            }
            if self.c_rate[i] > self.c_rate[i - 1] + tol * r_scale {
                push(i, "C' increasing");
            }
        }
        let slopes: Vec<T> = (1..n)
            .map(|i| (self.c[i] - self.c[i - 1]) / (self.t[i] - self.t[i - 1]))
            .collect();
        let s_scale = slopes.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        for i in 1..slopes.len() {
            let dt = (self.t[i + 1] - self.t[i]).min(self.t[i] - self.t[i - 1]);
            let roundoff = T::lit(8.0) * T::epsilon() * c_scale / dt;
            if slopes[i] > slopes[i - 1] + tol * s_scale + roundoff {
                push(i, "C not concave");
            }
        }
        out
    }

    pub fn check_shape(&self, rel_tol: f64) -> Result<()> {
        match self.shape_violations(rel_tol).first() {
            None => Ok(()),
            Some(v) => Err(Error::Input(format!(
                "creep curve is not a Bernstein function: {} at t = {} (sample {})",
                v.what, v.t, v.index
            ))),
        }
    }

    /// Writes `t,C,C_rate` CSV. `comments` become leading `# ` lines.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        for line in comments {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "t,C,C_rate")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{}",
                fmt12(self.t[i]),
                fmt12(self.c[i]),
                fmt12(self.c_rate[i])
            )?;
        }
        Ok(())
    }

    /// Reads `t,C,C_rate` CSV (lines starting with `#` are ignored) and
    /// validates the sampling and the Bernstein shape.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(r);
        let headers = reader.headers()?.clone();
        let expected = ["t", "C", "C_rate"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(a, b)| a != b) {
            return Err(Error::Input(format!(
                "creep CSV header must be t,C,C_rate, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut t, mut c, mut rate) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize| -> Result<T> {
                let s = rec.get(k).unwrap_or("");
                s.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Input(format!("creep CSV row {}: cannot parse '{s}'", line + 1)))
            };
            t.push(parse(0)?);
            c.push(parse(1)?);
            rate.push(parse(2)?);
        }
        let curve = Self::from_samples(t, c, rate)?;
        curve.check_shape(1e-6)?;
        Ok(curve)
    }
}

/// Twelve significant digits in scientific notation.
pub fn fmt12<T: Real>(x: T) -> String {
    format!("{:.11e}", x.to_f64().unwrap_or(f64::NAN))
}

/// `(C(0+), C'(0+))` from the `p -> inf` behaviour of `1/Q(p)`.
///
/// `C(0) = lim 1/Q(p)` and `C'(0) = lim p (1/Q(p) - C(0))`, both extrapolated
/// from a geometric grid. The numerical `C(0)` is cross-checked against
/// `1/G(0)` from the closed forms.
pub fn limits_c0_cprime0<T: Real>(model: &MaterialModel<T>) -> Result<(T, ExtendedReal<T>)> {
    let opts = LimitOptions::default();
    let p_max = T::lit(LIMIT_P_MAX);
    let q = |p: T| -> Result<T> { Ok(model.q_function(Complex::new(p, T::zero()))?.re) };

    let c0_numeric = geometric_limit(|p| Ok(T::one() / q(p)?), T::one(), p_max, &opts)
        .map_err(|e| indeterminate("C(0) = lim 1/Q(p)", e))?;
    let c0_exact = if model.newtonian() > T::zero() {
        T::zero()
    } else {
        match model.kernel().g0_closed_form() {
            ExtendedReal::Infinite => T::zero(),
            ExtendedReal::Finite(g0) => T::one() / g0,
        }
    };
    let c0 = match c0_numeric {
        ExtendedReal::Finite(v) if (v - c0_exact).abs() <= T::lit(1e-3) * c0_exact.max(T::lit(1e-6)) => c0_exact,
        other => {
            return Err(Error::Indeterminate(format!(
                "C(0) extrapolated to {other} but the closed form gives {c0_exact}"
            )))
        }
    };

    // the rational form cancels the leading term exactly; 1/Q - c0 would
    // leave p eps c0 of noise
    let rational = if model.kernel().is_rational() {
        Some(rational_rate_transform(model, c0)?)
    } else {
        None
    };
    let rate_sample = |p: T| -> Result<T> {
        match &rational {
            Some(r) => Ok(p * r.eval(Complex::new(p, T::zero())).re),
            None => Ok(p * (T::one() / q(p)? - c0)),
        }
    };
    let rate = geometric_limit(rate_sample, T::one(), p_max, &opts)
        .map_err(|e| indeterminate("C'(0) = lim p (1/Q(p) - C(0))", e))?;
    Ok((c0, rate))
}

fn indeterminate(what: &str, e: Error) -> Error {
    match e {
        Error::Indeterminate(msg) => Error::Indeterminate(format!("{what}: {msg}")),
        other => other,
    }
}

/// `1/Q(p)` as an exact rational function for models whose kernel is a Prony
/// series (or zero), with `c0` subtracted so that the result is strictly proper.
fn rational_rate_transform<T: Real>(model: &MaterialModel<T>, c0: T) -> Result<Rational<T>> {
    // merge equal rates and drop empty terms
    let mut terms: Vec<(T, T)> = Vec::new();
    for t in model.kernel().prony_terms() {
        if t.modulus == T::zero() {
            continue;
        }
        match terms.iter_mut().find(|(_, r)| *r == t.rate) {
            Some(entry) => entry.0 += t.modulus,
            None => terms.push((t.modulus, t.rate)),
        }
    }
    // Q(p) = p E(p) / P(p), P = prod (p + r_i), E = N P + sum g_i prod_{j != i} (p + r_j)
    let mut pi = vec![T::one()];
    for &(_, r) in &terms {
        pi = poly_mul(&pi, &[r, T::one()]);
    }
    let mut e: Vec<T> = pi.iter().map(|&c| c * model.newtonian()).collect();
    for (i, &(g, _)) in terms.iter().enumerate() {
        let mut part = vec![g];
        for (j, &(_, r)) in terms.iter().enumerate() {
            if j != i {
                part = poly_mul(&part, &[r, T::one()]);
            }
        }
        for (k, c) in part.into_iter().enumerate() {
            e[k] += c;
        }
    }
    let den = poly_mul(&[T::zero(), T::one()], &e);
    // numerator P - c0 p E; the leading coefficients cancel exactly when c0 > 0
    let pe = den.clone();
    let mut num: Vec<T> = (0..den.len())
        .map(|k| pi.get(k).copied().unwrap_or(T::zero()) - c0 * pe[k])
        .collect();
    if c0 > T::zero() {
        // cancel at the true degree: with N = 0 the top coefficient of p E is zero
        if let Some(deg) = den.iter().rposition(|&c| c != T::zero()) {
            num[deg] = T::zero();
        }
    }
    Rational::new(num, den)
}

fn compute_at_grid<T: Real>(t_grid: &[T], mut f: impl FnMut(T) -> Result<T>) -> Result<Vec<T>> {
    t_grid.iter().map(|&t| f(t)).collect()
}

fn check_grid<T: Real>(t_grid: &[T]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Input("time grid is empty".into()));
    }
    if t_grid.iter().any(|&t| !(t > T::zero() && t.is_finite())) {
        return Err(Error::Input("time grid must be positive and finite".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Creep compliance and rate by Laplace inversion of `1/(p Q(p))` and
/// `1/Q(p) - C(0)`.
///
/// Method choice per model: Prony kernels with at most four poles use exact
/// residues; kernels containing a power law invert the rate along the branch
/// cut; everything else uses the Talbot contour. The curve is checked for the
/// Bernstein shape before it is returned.
pub fn creep_from_model<T: Real>(model: &MaterialModel<T>, t_grid: &[T]) -> Result<CreepCurve<T>> {
    check_grid(t_grid)?;
    let (c0, c_rate0) = limits_c0_cprime0(model)?;
    let kernel = model.kernel();

    let (c, c_rate, source) = if kernel.is_rational() {
        let rate_tf = rational_rate_transform(model, c0)?;
        let poles = rate_tf.poles()?;
        let simple = rate_tf.simple_residues()?.is_some();
        if poles.len() <= 4 && simple {
            let residues = residue_table(&rate_tf, T::one())?;
            let c = compute_at_grid(t_grid, |t| {
                let mut acc = Complex::new(c0, T::zero());
                for (z, res) in &residues {
                    if z.norm() <= T::lit(1e-12) {
                        acc += *res * t;
                    } else {
                        acc += *res * ((*z * t).exp() - T::one()) / *z;
                    }
                }
                Ok(acc.re)
            })?;
            let rate = compute_at_grid(t_grid, |t| invert_residues(&rate_tf, t))?;
            let method = InversionMethod::Residue;
            (c, rate, CreepSource::Transform { compliance: method, rate: method })
        } else {
            let tf_c = TransformFunction::meromorphic(
                move |p| Ok((p * model.q_function(p)?).inv()),
                Vec::new(),
            )?;
            let c = compute_at_grid(t_grid, |t| invert_talbot(&tf_c, t, DEFAULT_TALBOT_NODES))?;
            let tf_r = TransformFunction::rational(rate_tf)?;
            let rate = compute_at_grid(t_grid, |t| invert_talbot(&tf_r, t, DEFAULT_TALBOT_NODES))?;
            let method = InversionMethod::Talbot;
            (c, rate, CreepSource::Transform { compliance: method, rate: method })
        }
    } else {
        let tf_c = TransformFunction::branch_cut(move |p| {
            Ok((p * model.q_on_cut_plane(p)?).inv())
        });
        let c = compute_at_grid(t_grid, |t| invert_talbot(&tf_c, t, DEFAULT_TALBOT_NODES))?;
        let rate_eval = move |p: Complex<T>| Ok(model.q_on_cut_plane(p)?.inv() - c0);
        let (rate, rate_method) = if kernel.strong_singularity_exponent().is_some() {
            let tf = TransformFunction::branch_cut(rate_eval);
            (
                compute_at_grid(t_grid, |t| invert_branchcut(&tf, t, DEFAULT_BRANCH_CUT_TOL))?,
                InversionMethod::BranchCut,
            )
        } else {
            let tf = TransformFunction::branch_cut(rate_eval);
            (
                compute_at_grid(t_grid, |t| invert_talbot(&tf, t, DEFAULT_TALBOT_NODES))?,
                InversionMethod::Talbot,
            )
        };
        (
            c,
            rate,
            CreepSource::Transform {
                compliance: InversionMethod::Talbot,
                rate: rate_method,
            },
        )
    };

    let curve = CreepCurve {
        t: t_grid.to_vec(),
        c,
        c_rate,
        c0: Some(c0),
        c_rate0: Some(c_rate0),
        source,
    };
    if let Some(v) = curve.shape_violations(1e-6).first() {
        return Err(Error::Invariant(format!(
            "computed creep curve violates the Bernstein shape: {} at t = {}",
            v.what, v.t
        )));
    }
    Ok(curve)
}

/// Grid step of a uniform grid `t_k = (k + 1) h`.
pub fn uniform_step<T: Real>(t_grid: &[T]) -> Result<T> {
    check_grid(t_grid)?;
    if t_grid.len() < 2 {
        return Err(Error::Input("uniform grid needs at least two points".into()));
    }
    let h = t_grid[0];
    let tol = T::lit(1e-9) * t_grid[t_grid.len() - 1];
    for (k, &t) in t_grid.iter().enumerate() {
        if (t - h * T::from_count(k + 1)).abs() > tol {
            return Err(Error::Input(format!(
                "grid must be uniform and start at its step (t_k = (k + 1) h); sample {k} is {t}"
            )));
        }
    }
    Ok(h)
}

/// Largest acceptable condition estimate of a first-kind discretisation.
pub const MAX_FIRST_KIND_CONDITION: f64 = 1e12;

/// Solves `N C + G * C = t` directly in time on the uniform grid
/// `t_k = (k + 1) h`.
///
/// Sequential in `t` by construction. With `N > 0` this is a second-kind
/// equation; with `N = 0` it is of the first kind and is rejected when the
/// discretisation is too ill-conditioned. `C'` is obtained by differentiating
/// the solution's interpolant.
pub fn volterra_solve_creep<T: Real>(model: &MaterialModel<T>, t_grid: &[T]) -> Result<CreepCurve<T>> {
    let h = uniform_step(t_grid)?;
    let len = t_grid.len();
    let first_kind = model.newtonian() == T::zero();
    if first_kind && model.kernel().is_zero() {
        return Err(Error::InvalidParameter("N = 0 with a zero kernel gives no equation".into()));
    }
    let (c0, c_rate0) = limits_c0_cprime0(model)?;
    let disc = Discretisation::new(model, h, len, c0)?;
    if first_kind {
        let cond = disc.condition_estimate(len);
        if !(cond <= T::lit(MAX_FIRST_KIND_CONDITION)) {
            return Err(Error::IllConditioned {
                condition: cond.to_f64().unwrap_or(f64::INFINITY),
            });
        }
    }
    let c = disc.solve(len)?;
    let c_rate = differentiate(&c, h, disc.first_rate(&c));
    Ok(CreepCurve {
        t: t_grid.to_vec(),
        c,
        c_rate,
        c0: Some(c0),
        c_rate0: Some(c_rate0),
        source: if first_kind {
            CreepSource::VolterraFirstKind
        } else {
            CreepSource::VolterraSecondKind
        },
    })
}

/// Derivative of samples `c[k] = C((k + 1) h)`: the start-up law at the first
/// point, centred differences inside, a one-sided second-order formula at the end.
fn differentiate<T: Real>(c: &[T], h: T, first: T) -> Vec<T> {
    let n = c.len();
    let mut d = vec![T::zero(); n];
    d[0] = first;
    let two = T::lit(2.0);
    for k in 1..n - 1 {
        d[k] = (c[k + 1] - c[k - 1]) / (two * h);
    }
    d[n - 1] = if n >= 3 {
        (T::lit(3.0) * c[n - 1] - T::lit(4.0) * c[n - 2] + c[n - 3]) / (two * h)
    } else {
        (c[n - 1] - c[n - 2]) / h
    };
    d
}

/// `max_n |N C(t_n) + (G * C)(t_n) - t_n|` with the same product-integration
/// weights as [`volterra_solve_creep`].
pub fn duality_residual<T: Real>(model: &MaterialModel<T>, curve: &CreepCurve<T>) -> Result<T> {
    let h = uniform_step(&curve.t)?;
    if curve.c.len() != curve.t.len() {
        return Err(Error::Input("creep curve columns have different lengths".into()));
    }
    let c0 = match curve.c0 {
        Some(v) => v,
        None => limits_c0_cprime0(model)?.0,
    };
    let disc = Discretisation::new(model, h, curve.len(), c0)?;
    let lhs = disc.apply(&curve.c);
    Ok(lhs
        .iter()
        .zip(&curve.t)
        .fold(T::zero(), |m, (l, t)| m.max((*l - *t).abs())))
}

/// Which creep regime a curve exhibits near `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CreepRegime {
    /// `C(0) > 0`.
    JumpCompliance,
    /// `C(0) = 0`, `C'(0) = inf`.
    InfiniteInitialSlope,
    /// `C(0) = 0`, `C'(0) < inf`, so `N = 1/C'(0)`.
    NewtonianPresent,
}

impl CreepRegime {
    pub fn label(&self) -> &'static str {
        match self {
            Self::JumpCompliance => "jump compliance",
            Self::InfiniteInitialSlope => "infinite initial slope",
            Self::NewtonianPresent => "Newtonian present",
        }
    }
}

/// Tunable thresholds of [`newtonian_from_creep`].
#[derive(Debug, Clone, Copy)]
pub struct CreepAnalysisOptions {
    /// A jump is declared when `C(0)` exceeds this fraction of `C(t_max)`.
    pub tol_c0: f64,
    /// Relative tolerance of the Bernstein shape test on input curves.
    pub shape_tol: f64,
    /// Log-slope of `C(t)/t` above which the initial slope counts as infinite.
    pub divergence_slope: f64,
}

impl Default for CreepAnalysisOptions {
    fn default() -> Self {
        Self {
            tol_c0: 1e-6,
            shape_tol: 1e-6,
            divergence_slope: 0.05,
        }
    }
}

/// Estimate of the Newtonian coefficient from a creep curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonianEstimate {
    pub n: f64,
    pub regime: CreepRegime,
    pub c0: f64,
    pub c_rate0: ExtendedReal<f64>,
    /// Exponent of `C(t) - C(0) ~ t^beta` fitted at the smallest times.
    pub onset_exponent: f64,
}

/// Reads `N` off a creep curve via `N C'(0) = 1`.
///
/// `C(0)` is extrapolated from the first two samples assuming
/// `C - C(0) ~ t^beta` with `beta` taken from the log-slope of `C'`. Without a
/// jump, `C(t)/t` is extrapolated to `t = 0` by Neville's scheme in the
/// variable `sqrt(t)` on four nodes `t_0, 2 t_0, 4 t_0, 8 t_0` (three
/// Richardson levels); a persistent power-law growth of `C(t)/t` as `t` shrinks
/// marks an infinite initial slope.
pub fn newtonian_from_creep<T: Real>(
    curve: &CreepCurve<T>,
    opts: &CreepAnalysisOptions,
) -> Result<NewtonianEstimate> {
    curve.check_shape(opts.shape_tol)?;
    let n = curve.len();
    let t_max = curve.t[n - 1];
    if n < 8 || curve.t[0] > T::lit(0.01) * t_max {
        return Err(Error::Input(format!(
            "creep curve needs at least 8 samples and t_min <= 0.01 t_max (have {n} samples, t_min = {})",
            curve.t[0]
        )));
    }
    let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
    let (t0, t1) = (f(curve.t[0]), f(curve.t[1]));
    let (r0, r1) = (f(curve.c_rate[0]), f(curve.c_rate[1]));
    let beta = if r0 > 0.0 && r1 > 0.0 {
        (1.0 + (r1 / r0).ln() / (t1 / t0).ln()).clamp(1e-3, 1.0)
    } else {
        1.0
    };
    let c0_hat = f(curve.c[0]) - t0 * r0 / beta;
    let c_end = f(curve.c[n - 1]);
    if c0_hat > opts.tol_c0 * c_end.abs() {
        return Ok(NewtonianEstimate {
            n: 0.0,
            regime: CreepRegime::JumpCompliance,
            c0: c0_hat,
            c_rate0: ExtendedReal::Finite(r0.max(0.0)),
            onset_exponent: beta,
        });
    }

    // secant slopes C(t)/t on nodes t0 * 2^j, taken from the nearest samples
    let times: Vec<f64> = curve.t.iter().map(|&x| f(x)).collect();
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for j in 0..4 {
        let target = t0 * 2f64.powi(j);
        let k = times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        if nodes.last().map_or(true, |last| times[k] > last.0) {
            nodes.push((times[k], f(curve.c[k]) / times[k]));
        }
    }
    if nodes.len() < 4 {
        return Err(Error::Input("creep curve is too coarse near t = 0 for slope extrapolation".into()));
    }
    let growth = |a: (f64, f64), b: (f64, f64)| (a.1 / b.1).ln() / (b.0 / a.0).ln();
    let g01 = growth(nodes[0], nodes[1]);
    let g12 = growth(nodes[1], nodes[2]);
    let g23 = growth(nodes[2], nodes[3]);
    let diverging = g01 > opts.divergence_slope
        && g12 > opts.divergence_slope
        && g01 >= 0.7 * g12
        && g12 >= 0.7 * g23;
    if diverging {
        return Ok(NewtonianEstimate {
            n: 0.0,
            regime: CreepRegime::InfiniteInitialSlope,
            c0: c0_hat.max(0.0),
            c_rate0: ExtendedReal::Infinite,
            onset_exponent: beta,
        });
    }
    let slope0 = neville_at_zero(&nodes.iter().map(|&(t, d)| (t.sqrt(), d)).collect::<Vec<_>>());
    if !(slope0 > 0.0 && slope0.is_finite()) {
        return Err(Error::Input(format!(
            "extrapolated initial slope {slope0:e} is not positive; curve is not a Bernstein function"
        )));
    }
    Ok(NewtonianEstimate {
        n: 1.0 / slope0,
        regime: CreepRegime::NewtonianPresent,
        c0: c0_hat.max(0.0),
        c_rate0: ExtendedReal::Finite(slope0),
        onset_exponent: beta,
    })
}

/// Value at `x = 0` of the interpolating polynomial through `points`.
fn neville_at_zero(points: &[(f64, f64)]) -> f64 {
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut p: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (x[i], x[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::RelaxationKernel;

    fn model(n: f64, k: RelaxationKernel<f64>) -> MaterialModel<f64> {
        MaterialModel::new(1.0, n, k).unwrap()
    }

    fn uniform(h: f64, len: usize) -> Vec<f64> {
        (1..=len).map(|k| k as f64 * h).collect()
    }

    #[test]
    fn rational_transform_of_viscous_maxwell() {
        let m = model(1.0, RelaxationKernel::prony([(1.0, 1.0)]).unwrap());
        let r = rational_rate_transform(&m, 0.0).unwrap();
        // (p + 1) / (p (N p + N + 1)) with N = 1
        let p = Complex::new(0.3, 0.4);
        let expected = (p + 1.0) / (p * (p + 2.0));
        assert!((r.eval(p) - expected).norm() < 1e-14);
    }

    #[test]
    fn pure_newtonian_creep() {
        let m = model(1.0, RelaxationKernel::Zero);
        let grid = uniform(0.1, 100);
        let c = creep_from_model(&m, &grid).unwrap();
        for (t, v) in grid.iter().zip(&c.c) {
            assert!((v - t).abs() < 1e-9);
        }
        let v = volterra_solve_creep(&m, &grid).unwrap();
        for (t, c) in grid.iter().zip(&v.c) {
            assert!((c - t).abs() < 1e-12);
        }
        assert!(duality_residual(&m, &c).unwrap() < 1e-12);
    }

    #[test]
    fn maxwell_creep_is_linear() {
        let m = model(0.0, RelaxationKernel::prony([(1.0, 1.0)]).unwrap());
        let grid = uniform(1e-3, 1000);
        let c = creep_from_model(&m, &grid).unwrap();
        for (t, v) in grid.iter().zip(&c.c) {
            assert!((v - (1.0 + t)).abs() < 1e-8);
        }
        let v = volterra_solve_creep(&m, &grid).unwrap();
        for (t, c) in grid.iter().zip(&v.c) {
            assert!((c - (1.0 + t)).abs() < 1e-6, "t {t}: {c}");
        }
    }

    #[test]
    fn limits_examples() {
        let (c0, r) = limits_c0_cprime0(&model(2.0, RelaxationKernel::prony([(1.0, 1.0)]).unwrap())).unwrap();
        assert_eq!(c0, 0.0);
        assert!((r.as_finite().unwrap() - 0.5).abs() < 1e-7);
        let (c0, r) = limits_c0_cprime0(&model(0.0, RelaxationKernel::power_law(1.0, 0.5).unwrap())).unwrap();
        assert_eq!(c0, 0.0);
        assert!(r.is_infinite());
        let (c0, r) =
            limits_c0_cprime0(&model(0.0, RelaxationKernel::stretched_exponential(0.5, 1.0).unwrap())).unwrap();
        assert_eq!(c0, 1.0);
        assert!(r.is_infinite());
    }

    #[test]
    fn repeated_elastic_terms_give_constant_creep() {
        let m = model(0.0, RelaxationKernel::prony([(0.21871476916091157, 0.0), (0.06526165672395925, 0.0)]).unwrap());
        let c = creep_from_model(&m, &uniform(0.1, 10)).unwrap();
        let want = 1.0 / (0.21871476916091157 + 0.06526165672395925);
        for (v, r) in c.c.iter().zip(&c.c_rate) {
            assert!((v - want).abs() < 1e-14 * want && r.abs() < 1e-14);
        }
    }

    #[test]
    fn elastic_plateau_has_zero_initial_rate() {
        let m = model(0.0, RelaxationKernel::prony([(8.4, 0.0), (9.1, 0.0)]).unwrap());
        let (c0, r) = limits_c0_cprime0(&m).unwrap();
        assert!((c0 - 1.0 / 17.5).abs() < 1e-15);
        assert_eq!(r, ExtendedReal::Finite(0.0));
    }

    #[test]
    fn corrupted_curve_has_visible_residual() {
        let m = model(0.0, RelaxationKernel::prony([(1.0, 1.0)]).unwrap());
        let grid = uniform(0.01, 200);
        let mut c = creep_from_model(&m, &grid).unwrap();
        assert!(duality_residual(&m, &c).unwrap() < 1e-6);
        c.c.iter_mut().for_each(|v| *v *= 1.01);
        // a jump inconsistent with C(0) is caught too
        assert!(duality_residual(&m, &c).unwrap() > 0.01);
        c.c0 = c.c0.map(|v| v * 1.01);
        let r = duality_residual(&m, &c).unwrap();
        assert!((r - 0.01 * 2.0).abs() < 1e-6, "{r}");
    }

    #[test]
    fn newtonian_estimates() {
        let grid = uniform(1e-3, 2000);
        let m = model(1.0, RelaxationKernel::prony([(1.0, 1.0)]).unwrap());
        let est = newtonian_from_creep(&creep_from_model(&m, &grid).unwrap(), &Default::default()).unwrap();
        assert_eq!(est.regime, CreepRegime::NewtonianPresent);
        assert!((est.n - 1.0).abs() < 1e-3);

        let c: Vec<f64> = grid.iter().map(|t| 1.0 + t).collect();
        let curve = CreepCurve::from_samples(grid.clone(), c, vec![1.0; grid.len()]).unwrap();
        let est = newtonian_from_creep(&curve, &Default::default()).unwrap();
        assert_eq!(est.regime, CreepRegime::JumpCompliance);
        assert_eq!(est.n, 0.0);

        let g = crate::scalar::gamma(1.5f64);
        let c: Vec<f64> = grid.iter().map(|t| t.sqrt() / g).collect();
        let r: Vec<f64> = grid.iter().map(|t| 0.5 / (t.sqrt() * g)).collect();
        let curve = CreepCurve::from_samples(grid.clone(), c, r).unwrap();
        let est = newtonian_from_creep(&curve, &Default::default()).unwrap();
        assert_eq!(est.regime, CreepRegime::InfiniteInitialSlope);
    }

    #[test]
    fn csv_round_trip() {
        let grid = uniform(0.5, 8);
        let c: Vec<f64> = grid.iter().map(|t| 1.0 + t).collect();
        let curve = CreepCurve::from_samples(grid.clone(), c, vec![1.0; 8]).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf, &["generated".to_string()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# generated\nt,C,C_rate\n"));
        let back = CreepCurve::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.t, curve.t);
        assert_eq!(back.c, curve.c);
    }

    #[test]
    fn csv_rejects_non_bernstein_data() {
        let text = "t,C,C_rate\n1,1,1\n2,0.5,1\n3,3,1\n";
        assert!(CreepCurve::<f64>::read_csv(text.as_bytes()).is_err());
        let text = "t,C\n1,1\n";
        assert!(CreepCurve::<f64>::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn non_uniform_grid_is_rejected() {
        let m = model(1.0, RelaxationKernel::Zero);
        assert!(volterra_solve_creep(&m, &[0.1, 0.2, 0.35]).is_err());
    }
}
