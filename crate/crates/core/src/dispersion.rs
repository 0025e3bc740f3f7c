//! Complex wavenumber, attenuation and phase velocity, and the classification
//! of models into high-frequency regimes.

use std::io::Write;

use num_complex::Complex;
use serde::Serialize;

use crate::duality::{fmt12, newtonian_from_creep, CreepAnalysisOptions, CreepCurve, CreepRegime};
use crate::error::{Error, Result};
use crate::kernels::{ExtendedReal, MaterialModel, RelaxationKernel};
use crate::scalar::{principal_sqrt, Real};

/// One point of a dispersion curve at `p = -i omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSample<T> {
    pub omega: T,
    pub kappa: Complex<T>,
    pub attenuation: T,
    pub phase_velocity: T,
}

/// `kappa(p) = p sqrt(rho) / sqrt(Q(p))` on the branch with `Re kappa >= 0`
/// for `Re p >= 0`.
///
/// The square root is split as `sqrt(p) / sqrt(N + G~(p))`. Both factors have
/// arguments in `[-pi/4, pi/4]` on the closed right half-plane, so the product
/// already satisfies the sign contract and is continuous up to the imaginary
/// axis, where `p = -i omega` is evaluated directly.
pub fn wavenumber<T: Real>(model: &MaterialModel<T>, p: Complex<T>) -> Result<Complex<T>> {
    if p.re < T::zero() {
        return Err(Error::Domain(format!("kappa(p) needs Re p >= 0, got {p}")));
    }
    if p.re == T::zero() && p.im == T::zero() {
        return Err(Error::Domain("kappa(p) is undefined at p = 0".into()));
    }
    let w = model.kernel().laplace_g(p)? + model.newtonian();
    let scale = model.newtonian() + model.kernel().laplace_g(Complex::new(p.norm(), T::zero()))?.re;
    if w.norm() <= T::epsilon() * scale {
        return Err(Error::SingularMedium {
            re: p.re.to_f64().unwrap_or(f64::NAN),
            im: p.im.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut kappa = principal_sqrt(p) / principal_sqrt(w) * model.rho().sqrt();
    // the split keeps the contract; only round-off on the axis can break it
    if kappa.re < -T::lit(64.0) * T::epsilon() * kappa.norm() {
        kappa = -kappa;
    }
    if !(kappa.re.is_finite() && kappa.im.is_finite()) {
        return Err(Error::NonFinite {
            context: "wavenumber",
            at: p.im.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(kappa)
}

fn check_omega<T: Real>(omega: T) -> Result<()> {
    if omega > T::zero() && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("omega must be > 0, got {omega}")))
    }
}

/// Full dispersion sample at `p = -i omega`.
pub fn dispersion_sample<T: Real>(model: &MaterialModel<T>, omega: T) -> Result<DispersionSample<T>> {
    check_omega(omega)?;
    let kappa = wavenumber(model, Complex::new(T::zero(), -omega))?;
    // Im kappa(-i omega) < 0 with this sign convention; the speed uses |Im|
    let phase_velocity = omega / kappa.im.abs();
    Ok(DispersionSample {
        omega,
        kappa,
        attenuation: kappa.re.max(T::zero()),
        phase_velocity,
    })
}

/// `a(omega) = Re kappa(-i omega)`.
pub fn attenuation<T: Real>(model: &MaterialModel<T>, omega: T) -> Result<T> {
    Ok(dispersion_sample(model, omega)?.attenuation)
}

/// `omega / |Im kappa(-i omega)|`.
pub fn phase_velocity<T: Real>(model: &MaterialModel<T>, omega: T) -> Result<T> {
    Ok(dispersion_sample(model, omega)?.phase_velocity)
}

/// Relative difference between `kappa(-i omega)` and `kappa(eps - i omega)`
/// with `eps = 1e-8 omega`; guards the direct evaluation on the axis.
pub fn axis_offset_discrepancy<T: Real>(model: &MaterialModel<T>, omega: T) -> Result<T> {
    check_omega(omega)?;
    let on = wavenumber(model, Complex::new(T::zero(), -omega))?;
    let off = wavenumber(model, Complex::new(T::lit(1e-8) * omega, -omega))?;
    Ok((on - off).norm() / on.norm())
}

/// Wavefront speed: `sqrt(G(0) / rho)` when `N = 0` and `G(0)` is finite,
/// otherwise infinite.
pub fn c_infinity<T: Real>(model: &MaterialModel<T>) -> ExtendedReal<T> {
    if model.newtonian() > T::zero() {
        return ExtendedReal::Infinite;
    }
    match model.kernel().g0_closed_form() {
        ExtendedReal::Finite(g0) => ExtendedReal::Finite((g0 / model.rho()).sqrt()),
        ExtendedReal::Infinite => ExtendedReal::Infinite,
    }
}

/// Geometric grid of `n` points from `lo` to `hi`.
pub fn geometric_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let ratio = (hi / lo).ln();
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo * (ratio * T::from_count(i) / T::from_count(n - 1)).exp()
            }
        })
        .collect()
}

/// Dispersion samples over `omegas`.
pub fn dispersion_curve<T: Real>(model: &MaterialModel<T>, omegas: &[T]) -> Result<Vec<DispersionSample<T>>> {
    omegas.iter().map(|&w| dispersion_sample(model, w)).collect()
}

/// Writes `omega,attenuation,phase_velocity,re_kappa,im_kappa` after `# `
/// comment lines.
pub fn write_dispersion_csv<T: Real, W: Write>(
    samples: &[DispersionSample<T>],
    mut w: W,
    comments: &[String],
) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "omega,attenuation,phase_velocity,re_kappa,im_kappa")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt12(s.omega),
            fmt12(s.attenuation),
            fmt12(s.phase_velocity),
            fmt12(s.kappa.re),
            fmt12(s.kappa.im)
        )?;
    }
    Ok(())
}

/// Least-squares fit of `log a = slope log omega + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    /// Largest absolute residual of the fit in `log a`.
    pub max_residual: f64,
}

/// Fits the high-frequency power law of the attenuation on a geometric grid.
pub fn high_freq_exponent<T: Real>(
    model: &MaterialModel<T>,
    omega_min: T,
    omega_max: T,
    n_points: usize,
) -> Result<ExponentFit> {
    check_omega(omega_min)?;
    if !(omega_max >= T::lit(100.0) * omega_min) || !omega_max.is_finite() {
        return Err(Error::Input(format!(
            "exponent fit needs omega_max / omega_min >= 100, got [{omega_min}, {omega_max}]"
        )));
    }
    if n_points < 16 {
        return Err(Error::Input(format!("exponent fit needs at least 16 points, got {n_points}")));
    }
    let mut xs = Vec::with_capacity(n_points);
    let mut ys = Vec::with_capacity(n_points);
    for w in geometric_grid(omega_min, omega_max, n_points) {
        let a = attenuation(model, w)?;
        if !(a > T::zero()) {
            return Err(Error::Domain(format!(
                "attenuation {a} at omega = {w} is not positive; no power law to fit"
            )));
        }
        xs.push(w.to_f64().unwrap_or(f64::NAN).ln());
        ys.push(a.to_f64().unwrap_or(f64::NAN).ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - slope * x - intercept).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(ExponentFit {
        slope,
        stderr: (sse / (n - 2.0) / sxx).sqrt(),
        intercept,
        omega_min: omega_min.to_f64().unwrap_or(f64::NAN),
        omega_max: omega_max.to_f64().unwrap_or(f64::NAN),
        points: n_points,
        max_residual: residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
    })
}

/// Row of the creep/attenuation correspondence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `N = 0`, bounded `G`: finite wavefront speed, `C(0) > 0`.
    WeaklySingularFiniteSpeed,
    /// `N = 0`, `G(t) ~ A t^-alpha`: `C(0) = 0`, `C'(0) = inf`.
    StronglySingular,
    /// `N > 0`: `C(0) = 0`, `C'(0) = 1/N`, `a(omega) ~ omega^(1/2)`.
    Newtonian,
}

impl Regime {
    pub fn row(&self) -> usize {
        match self {
            Self::WeaklySingularFiniteSpeed => 1,
            Self::StronglySingular => 2,
            Self::Newtonian => 3,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::WeaklySingularFiniteSpeed => "weakly singular, finite speed",
            Self::StronglySingular => "strongly singular",
            Self::Newtonian => "Newtonian",
        }
    }
}

/// Supporting numbers behind a [`RegimeReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Evidence {
    pub fit: Option<ExponentFit>,
    /// `lim a(omega)` for smooth kernels, where attenuation stays bounded.
    pub attenuation_limit: Option<f64>,
    /// `(omega, a(omega))` at the top of the checked range for bounded cases.
    pub attenuation_probe: Option<(f64, f64)>,
    /// Creep-side quantities when classifying from data.
    pub creep_c0: Option<f64>,
    pub creep_c_rate0: Option<ExtendedReal<f64>>,
    pub creep_onset_exponent: Option<f64>,
    pub newtonian_n: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub row: usize,
    pub c_inf: ExtendedReal<f64>,
    pub fitted_exponent: Option<f64>,
    pub expected_exponent: Option<f64>,
    pub evidence: Evidence,
}

impl RegimeReport {
    fn new(regime: Regime, c_inf: ExtendedReal<f64>, expected: Option<f64>) -> Self {
        Self {
            regime,
            row: regime.row(),
            c_inf,
            fitted_exponent: None,
            expected_exponent: expected,
            evidence: Evidence::default(),
        }
    }

    /// Human-readable multi-line summary.
    pub fn to_text(&self) -> String {
        let mut s = format!("regime: {} (row {})\n", self.regime.label(), self.row);
        s += &format!("c_inf: {}\n", self.c_inf);
        if let Some(e) = self.expected_exponent {
            s += &format!("expected exponent: {e}\n");
        }
        if let Some(fit) = &self.evidence.fit {
            s += &format!(
                "fitted exponent: {:.6} +/- {:.2e} on omega in [{:e}, {:e}] ({} points)\n",
                fit.slope, fit.stderr, fit.omega_min, fit.omega_max, fit.points
            );
        }
        if let Some(l) = self.evidence.attenuation_limit {
            s += &format!("bounded attenuation, limit {l}\n");
        }
        if let Some((w, a)) = self.evidence.attenuation_probe {
            s += &format!("a({w:e}) = {a}\n");
        }
        if let Some(n) = self.evidence.newtonian_n {
            s += &format!("N = {n}\n");
        }
        for note in &self.evidence.notes {
            s += &format!("note: {note}\n");
        }
        s
    }
}

/// Default fit windows: weakly singular kernels converge slowly, so their
/// window sits one decade lower.
pub const STRONG_FIT_WINDOW: (f64, f64) = (1e3, 1e6);
pub const WEAK_FIT_WINDOW: (f64, f64) = (1e2, 1e5);
pub const FIT_POINTS: usize = 32;
const BOUNDED_PROBE_OMEGA: f64 = 1e4;

/// `lim a(omega)` when it is finite: `N = 0` and a pure Prony kernel, where
/// `kappa = p / c + sqrt(rho) sum g r / (2 G0^(3/2)) + O(1/p)`.
pub fn bounded_attenuation_limit<T: Real>(model: &MaterialModel<T>) -> Option<T> {
    if model.newtonian() > T::zero() {
        return None;
    }
    let leaves = model.kernel().components();
    if !leaves.iter().all(|k| matches!(k, RelaxationKernel::Prony(_) | RelaxationKernel::Zero)) {
        return None;
    }
    let terms = model.kernel().prony_terms();
    let g0: T = terms.iter().map(|t| t.modulus).sum();
    let gr: T = terms.iter().map(|t| t.modulus * t.rate).sum();
    Some(model.rho().sqrt() * gr / (T::lit(2.0) * g0 * g0.sqrt()))
}

/// Regime of a model from its parameters, with the high-frequency exponent
/// fitted where a power law is expected.
pub fn classify_model<T: Real>(model: &MaterialModel<T>) -> Result<RegimeReport> {
    let c_inf = c_infinity(model);
    let c_inf = match c_inf {
        ExtendedReal::Finite(c) => ExtendedReal::Finite(c.to_f64().unwrap_or(f64::NAN)),
        ExtendedReal::Infinite => ExtendedReal::Infinite,
    };
    let kernel = model.kernel();
    let (mut report, window) = if model.newtonian() > T::zero() {
        (RegimeReport::new(Regime::Newtonian, c_inf, Some(0.5)), Some(STRONG_FIT_WINDOW))
    } else if let Some(alpha) = kernel.strong_singularity_exponent() {
        let gamma = 1.0 - alpha.to_f64().unwrap_or(f64::NAN) / 2.0;
        (RegimeReport::new(Regime::StronglySingular, c_inf, Some(gamma)), Some(STRONG_FIT_WINDOW))
    } else if let Some(alpha) = kernel.weak_singularity_exponent() {
        // G = 1 - t^alpha + ... gives kappa = p / c + O(p^(1 - alpha))
        let beta = 1.0 - alpha.to_f64().unwrap_or(f64::NAN);
        (
            RegimeReport::new(Regime::WeaklySingularFiniteSpeed, c_inf, Some(beta)),
            Some(WEAK_FIT_WINDOW),
        )
    } else {
        let mut r = RegimeReport::new(Regime::WeaklySingularFiniteSpeed, c_inf, None);
        r.evidence.attenuation_limit = bounded_attenuation_limit(model).and_then(|v| v.to_f64());
        let w = T::lit(BOUNDED_PROBE_OMEGA);
        r.evidence.attenuation_probe = Some((BOUNDED_PROBE_OMEGA, attenuation(model, w)?.to_f64().unwrap_or(f64::NAN)));
        r.evidence
            .notes
            .push("smooth kernel: attenuation is bounded, no exponent fitted".into());
        (r, None)
    };
    if let Some((lo, hi)) = window {
        let fit = high_freq_exponent(model, T::lit(lo), T::lit(hi), FIT_POINTS)?;
        report.fitted_exponent = Some(fit.slope);
        report.evidence.fit = Some(fit);
    }
    if matches!(kernel, RelaxationKernel::Zero) {
        report.evidence.notes.push("purely viscous medium".into());
    }
    Ok(report)
}

/// Regime of a sampled creep curve from its behaviour near `t = 0`, using
/// the thresholds of [`newtonian_from_creep`]. The density `rho` enters only
/// the wavefront speed of a jump-compliance curve, `c_inf = 1 / sqrt(rho C(0))`.
pub fn classify_from_creep<T: Real>(
    curve: &CreepCurve<T>,
    rho: f64,
    opts: &CreepAnalysisOptions,
) -> Result<RegimeReport> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("rho must be > 0, got {rho}")));
    }
    let est = newtonian_from_creep(curve, opts)?;
    let mut report = match est.regime {
        CreepRegime::JumpCompliance => RegimeReport::new(
            Regime::WeaklySingularFiniteSpeed,
            ExtendedReal::Finite(1.0 / (rho * est.c0).sqrt()),
            Some(est.onset_exponent),
        ),
        CreepRegime::InfiniteInitialSlope => RegimeReport::new(
            Regime::StronglySingular,
            ExtendedReal::Infinite,
            Some(1.0 - est.onset_exponent / 2.0),
        ),
        CreepRegime::NewtonianPresent => {
            let mut r = RegimeReport::new(Regime::Newtonian, ExtendedReal::Infinite, Some(0.5));
            r.evidence.newtonian_n = Some(est.n);
            r
        }
    };
    report.evidence.creep_c0 = Some(est.c0);
    report.evidence.creep_c_rate0 = Some(est.c_rate0);
    report.evidence.creep_onset_exponent = Some(est.onset_exponent);
    report.evidence.notes.push(format!("creep regime: {}", est.regime.label()));
    Ok(report)
}
