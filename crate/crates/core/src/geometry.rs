//! Spherically symmetric example geometries.
//!
//! A non-negative shell density `rho` supported in `[r_inner, r_outer]`
//! produces the Newtonian potential `U` with `-Laplace U = 4 pi rho`. `U` is
//! constant (`nu`) inside the shell and `mu / r` outside, so every metric
//! built from it is exactly flat near the origin. Three conformal families
//! are derived from `U`:
//!
//! * `ExpNewton`: `h = Omega^2 delta`, `Omega = exp(nu - U) >= 1`, `R <= 0`.
//! * `AffineNewton`: `h = Omega^2 delta`, `Omega = 1/2 + U/(2 nu)`, `R >= 0`.
//! * `QuarticShell`: `h = U^4 delta`, `R = 32 pi U^-5 rho >= 0`; compactifies
//!   to a sphere through `y = mu^2 x / |x|^2`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, PI};

/// Minimum number of samples inside `[r_inner, r_outer]` for a curvature field.
pub const DEFAULT_MIN_SHELL_POINTS: usize = 16;

/// Radial profile of the shell density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShellProfile {
    /// Constant on `[r_inner, r_outer]`. Closed-form moments, only `C^0`.
    Uniform,
    /// `amplitude * (4 t (1 - t))^4` with `t = (r - r_inner)/(r_outer - r_inner)`.
    /// `C^3` at the seams; moments are exact polynomial integrals.
    SmoothBump,
}

/// Polynomial in one variable, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq)]
struct Poly(Vec<f64>);

impl Poly {
    fn mul(&self, other: &Poly) -> Poly {
        let mut out = alloc::vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// Antiderivative vanishing at zero.
    fn integral(&self) -> Poly {
        let mut out = alloc::vec![0.0; self.0.len() + 1];
        for (i, a) in self.0.iter().enumerate() {
            out[i + 1] = a / (i + 1) as f64;
        }
        Poly(out)
    }

    fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

/// Spherically symmetric, non-negative density supported on a shell.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellDensity {
    r_inner: f64,
    r_outer: f64,
    amplitude: f64,
    profile: ShellProfile,
    // Per unit amplitude, as functions of t in [0, 1]:
    // mass_poly(t) = int_0^t b(s) (r_inner + w s)^2 w ds
    // moment_poly(t) = int_0^t b(s) (r_inner + w s) w ds
    mass_poly: Poly,
    moment_poly: Poly,
}

impl ShellDensity {
    pub fn new(r_inner: f64, r_outer: f64, amplitude: f64, profile: ShellProfile) -> Result<Self> {
        if !(r_inner > 0.0) || !r_inner.is_finite() {
            return Err(Error::invalid("r_inner", "must be positive"));
        }
        if !(r_outer > r_inner) || !r_outer.is_finite() {
            return Err(Error::invalid("r_outer", "must exceed r_inner"));
        }
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::invalid("amplitude", "density must be non-trivial and non-negative"));
        }
        let w = r_outer - r_inner;
        let bump = match profile {
            ShellProfile::Uniform => Poly(alloc::vec![1.0]),
            ShellProfile::SmoothBump => {
                let q = Poly(alloc::vec![0.0, 4.0, -4.0]);
                let q2 = q.mul(&q);
                q2.mul(&q2)
            }
        };
        let radius = Poly(alloc::vec![r_inner, w]);
        let mass_poly = bump.mul(&radius).mul(&radius).integral();
        let moment_poly = bump.mul(&radius).integral();
        let scale = |p: Poly| Poly(p.0.into_iter().map(|c| c * w).collect());
        Ok(ShellDensity {
            r_inner,
            r_outer,
            amplitude,
            profile,
            mass_poly: scale(mass_poly),
            moment_poly: scale(moment_poly),
        })
    }

    pub fn uniform(r_inner: f64, r_outer: f64, amplitude: f64) -> Result<Self> {
        Self::new(r_inner, r_outer, amplitude, ShellProfile::Uniform)
    }

    pub fn smooth(r_inner: f64, r_outer: f64, amplitude: f64) -> Result<Self> {
        Self::new(r_inner, r_outer, amplitude, ShellProfile::SmoothBump)
    }

    /// Shell with the amplitude chosen so that `int rho = mu`.
    pub fn with_total_mass(r_inner: f64, r_outer: f64, mu: f64, profile: ShellProfile) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::invalid("mu", "total mass must be positive"));
        }
        let unit = Self::new(r_inner, r_outer, 1.0, profile)?;
        let (unit_mu, _) = shell_moments(&unit);
        Self::new(r_inner, r_outer, mu / unit_mu, profile)
    }

    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }

    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn profile(&self) -> ShellProfile {
        self.profile
    }

    fn param(&self, r: f64) -> f64 {
        ((r - self.r_inner) / (self.r_outer - self.r_inner)).clamp(0.0, 1.0)
    }

    /// `rho(r)`.
    pub fn density(&self, r: f64) -> f64 {
        if r < self.r_inner || r > self.r_outer {
            return 0.0;
        }
        match self.profile {
            ShellProfile::Uniform => self.amplitude,
            ShellProfile::SmoothBump => {
                let t = self.param(r);
                let q = 4.0 * t * (1.0 - t);
                self.amplitude * q * q * q * q
            }
        }
    }

    /// `4 pi int_0^r rho(s) s^2 ds`.
    pub fn enclosed_mass(&self, r: f64) -> f64 {
        if r <= self.r_inner {
            return 0.0;
        }
        match self.profile {
            ShellProfile::Uniform => {
                let rc = r.min(self.r_outer);
                4.0 * PI / 3.0 * self.amplitude * (rc * rc * rc - math::powi(self.r_inner, 3))
            }
            ShellProfile::SmoothBump => 4.0 * PI * self.amplitude * self.mass_poly.eval(self.param(r)),
        }
    }

    /// `4 pi int_r^inf rho(s) s ds`.
    pub fn outer_moment(&self, r: f64) -> f64 {
        if r >= self.r_outer {
            return 0.0;
        }
        match self.profile {
            ShellProfile::Uniform => {
                let rc = r.max(self.r_inner);
                2.0 * PI * self.amplitude * (self.r_outer * self.r_outer - rc * rc)
            }
            ShellProfile::SmoothBump => {
                let total = self.moment_poly.eval(1.0);
                4.0 * PI * self.amplitude * (total - self.moment_poly.eval(self.param(r)))
            }
        }
    }
}

/// `(mu, nu) = (int rho, int rho / |x|)`.
pub fn shell_moments(density: &ShellDensity) -> (f64, f64) {
    (density.enclosed_mass(density.r_outer), density.outer_moment(0.0))
}

/// Newtonian potential of a shell density.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellPotential {
    density: ShellDensity,
    mu: f64,
    nu: f64,
}

impl ShellPotential {
    pub fn new(density: ShellDensity) -> Self {
        let (mu, nu) = shell_moments(&density);
        ShellPotential { density, mu, nu }
    }

    pub fn density(&self) -> &ShellDensity {
        &self.density
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `U(r)`; exactly `nu` for `r <= r_inner` and `mu / r` for `r >= r_outer`.
    pub fn eval(&self, r: f64) -> f64 {
        shell_potential_eval(self, r)
    }

    /// `dU/dr = -M(r)/r^2`.
    pub fn derivative(&self, r: f64) -> f64 {
        if r <= self.density.r_inner {
            0.0
        } else if r >= self.density.r_outer {
            -self.mu / (r * r)
        } else {
            -self.density.enclosed_mass(r) / (r * r)
        }
    }

    /// `Laplace U = -4 pi rho`.
    pub fn laplacian(&self, r: f64) -> f64 {
        -4.0 * PI * self.density.density(r)
    }
}

pub fn shell_potential_eval(potential: &ShellPotential, r: f64) -> f64 {
    let d = &potential.density;
    if r <= d.r_inner {
        potential.nu
    } else if r >= d.r_outer {
        potential.mu / r
    } else {
        d.enclosed_mass(r) / r + d.outer_moment(r)
    }
}

/// Which metric family is built from the shell potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConformalVariant {
    Unit,
    ExpNewton,
    AffineNewton,
    QuarticShell,
}

impl ConformalVariant {
    pub fn name(self) -> &'static str {
        match self {
            ConformalVariant::Unit => "unit",
            ConformalVariant::ExpNewton => "exp_newton",
            ConformalVariant::AffineNewton => "affine_newton",
            ConformalVariant::QuarticShell => "quartic_shell",
        }
    }
}

/// A conformally flat spatial metric `h = Omega^2 delta` built from a shell potential.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactorModel {
    variant: ConformalVariant,
    potential: ShellPotential,
}

impl ConformalFactorModel {
    pub fn new(variant: ConformalVariant, potential: ShellPotential) -> Self {
        ConformalFactorModel { variant, potential }
    }

    pub fn variant(&self) -> ConformalVariant {
        self.variant
    }

    pub fn potential(&self) -> &ShellPotential {
        &self.potential
    }

    /// `Omega(r)` with `h = Omega^2 delta` (for `QuarticShell`, `Omega = U^2`).
    pub fn omega(&self, r: f64) -> f64 {
        let u = self.potential.eval(r);
        let nu = self.potential.nu;
        match self.variant {
            ConformalVariant::Unit => 1.0,
            ConformalVariant::ExpNewton => {
                if r <= self.potential.density.r_inner {
                    1.0
                } else {
                    math::exp(nu - u)
                }
            }
            ConformalVariant::AffineNewton => 0.5 + u / (2.0 * nu),
            ConformalVariant::QuarticShell => u * u,
        }
    }

    /// Analytic scalar curvature of the spatial metric.
    pub fn scalar_curvature(&self, r: f64) -> f64 {
        let p = &self.potential;
        let rho = p.density.density(r);
        let du = p.derivative(r);
        match self.variant {
            ConformalVariant::Unit => 0.0,
            ConformalVariant::ExpNewton => {
                // ln Omega = nu - U, Laplace ln Omega = 4 pi rho, grad ln Omega = -U'.
                let om = self.omega(r);
                -(16.0 * PI * rho + 2.0 * du * du) / (om * om)
            }
            ConformalVariant::AffineNewton => {
                // Laplace Omega = -2 pi rho / nu, Omega' = U' / (2 nu).
                let om = self.omega(r);
                let nu = p.nu;
                8.0 * PI * rho / (nu * om * om * om) + du * du / (2.0 * nu * nu * math::powi(om, 4))
            }
            ConformalVariant::QuarticShell => 32.0 * PI * rho / math::powi(p.eval(r), 5),
        }
    }

    /// `R = 0` and the metric is Riemann-flat at `r` (analytically).
    pub fn is_flat_at(&self, r: f64) -> bool {
        let d = &self.potential.density;
        match self.variant {
            ConformalVariant::Unit => true,
            ConformalVariant::ExpNewton | ConformalVariant::AffineNewton => r <= d.r_inner,
            ConformalVariant::QuarticShell => r <= d.r_inner || r >= d.r_outer,
        }
    }
}

/// Radial sample positions with their nominal spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSamples {
    pub spacing: f64,
    pub radii: Vec<f64>,
}

impl RadialSamples {
    /// `r_i = i h` for `i = 0..=n` with `h = r_max / n`.
    pub fn uniform(r_max: f64, n: usize) -> Self {
        let spacing = r_max / n as f64;
        RadialSamples {
            spacing,
            radii: (0..=n).map(|i| i as f64 * spacing).collect(),
        }
    }
}

/// Scalar curvature sampled on radial points.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub radii: Vec<f64>,
    pub samples: Vec<f64>,
    /// Sample indices where `R = 0` and the metric is flat, at least two
    /// spacings away from the shell support.
    pub flat_region: Vec<usize>,
}

impl CurvatureField {
    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, r| m.max(math::abs(*r)))
    }
}

/// Indices of samples at least two spacings away from the curved region.
pub fn flat_region(model: &ConformalFactorModel, samples: &RadialSamples) -> Vec<usize> {
    let d = model.potential.density();
    let margin = 2.0 * samples.spacing;
    samples
        .radii
        .iter()
        .enumerate()
        .filter(|(_, &r)| match model.variant {
            ConformalVariant::Unit => true,
            ConformalVariant::ExpNewton | ConformalVariant::AffineNewton => r < d.r_inner - margin,
            ConformalVariant::QuarticShell => r < d.r_inner - margin || r > d.r_outer + margin,
        })
        .map(|(i, _)| i)
        .collect()
}

/// Curvature of any model on the given samples.
pub fn curvature_field(
    model: &ConformalFactorModel,
    samples: &RadialSamples,
    min_shell_points: usize,
) -> Result<CurvatureField> {
    let d = model.potential.density();
    if model.variant != ConformalVariant::Unit {
        let found = samples
            .radii
            .iter()
            .filter(|&&r| r >= d.r_inner && r <= d.r_outer)
            .count();
        if found < min_shell_points {
            return Err(Error::UnresolvedShell {
                found,
                required: min_shell_points,
            });
        }
    }
    Ok(CurvatureField {
        radii: samples.radii.clone(),
        samples: samples.radii.iter().map(|&r| model.scalar_curvature(r)).collect(),
        flat_region: flat_region(model, samples),
    })
}

fn expect_variant(model: &ConformalFactorModel, allowed: &[ConformalVariant]) -> Result<()> {
    if allowed.contains(&model.variant) {
        Ok(())
    } else {
        Err(Error::invalid("model", "curvature formula does not apply to this variant"))
    }
}

/// `R = -4 Omega^-2 Laplace(ln Omega) - 2 Omega^-2 |grad ln Omega|^2` for `Omega = exp(nu - U)`.
pub fn curvature_log_conformal(model: &ConformalFactorModel, samples: &RadialSamples) -> Result<CurvatureField> {
    expect_variant(model, &[ConformalVariant::ExpNewton, ConformalVariant::Unit])?;
    curvature_field(model, samples, DEFAULT_MIN_SHELL_POINTS)
}

/// `R = -4 Omega^-3 Laplace Omega + 2 Omega^-4 |grad Omega|^2` for `Omega = 1/2 + U/(2 nu)`.
pub fn curvature_affine_conformal(model: &ConformalFactorModel, samples: &RadialSamples) -> Result<CurvatureField> {
    expect_variant(model, &[ConformalVariant::AffineNewton, ConformalVariant::Unit])?;
    curvature_field(model, samples, DEFAULT_MIN_SHELL_POINTS)
}

/// `R = -8 U^-5 Laplace U = 32 pi U^-5 rho` for `h = U^4 delta`.
pub fn curvature_quartic(model: &ConformalFactorModel, samples: &RadialSamples) -> Result<CurvatureField> {
    expect_variant(model, &[ConformalVariant::QuarticShell])?;
    curvature_field(model, samples, DEFAULT_MIN_SHELL_POINTS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_mass_uniform() -> ShellPotential {
        ShellPotential::new(ShellDensity::uniform(1.0, 2.0, 3.0 / (28.0 * PI)).unwrap())
    }

    fn smooth_potential() -> ShellPotential {
        ShellPotential::new(ShellDensity::with_total_mass(1.0, 2.0, 1.0, ShellProfile::SmoothBump).unwrap())
    }

    /// Composite Simpson rule, used as an independent radial quadrature.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = if n % 2 == 1 { n + 1 } else { n };
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn uniform_shell_moments_match_quadrature() {
        let d = ShellDensity::uniform(1.0, 2.0, 3.0 / (28.0 * PI)).unwrap();
        let (mu, nu) = shell_moments(&d);
        let mu_q = simpson(|r| 4.0 * PI * r * r * d.density(r), 1.0, 2.0, 2000);
        let nu_q = simpson(|r| 4.0 * PI * r * d.density(r), 1.0, 2.0, 2000);
        assert!((mu - 1.0).abs() < 1e-14, "{mu}");
        assert!((nu - 9.0 / 14.0).abs() < 1e-14, "{nu}");
        assert!((mu - mu_q).abs() < 1e-12);
        assert!((nu - nu_q).abs() < 1e-12);
        assert!(nu > mu / 2.0);
    }

    #[test]
    fn smooth_shell_moments_match_quadrature() {
        let d = ShellDensity::smooth(1.0, 2.0, 0.3).unwrap();
        let (mu, nu) = shell_moments(&d);
        let mu_q = simpson(|r| 4.0 * PI * r * r * d.density(r), 1.0, 2.0, 4000);
        let nu_q = simpson(|r| 4.0 * PI * r * d.density(r), 1.0, 2.0, 4000);
        assert!((mu - mu_q).abs() < 1e-12 * mu);
        assert!((nu - nu_q).abs() < 1e-12 * nu);
        let half = simpson(|r| 4.0 * PI * r * r * d.density(r), 1.0, 1.3, 4000);
        assert!((d.enclosed_mass(1.3) - half).abs() < 1e-12);
    }

    #[test]
    fn invalid_densities_are_rejected() {
        assert!(ShellDensity::uniform(1.0, 2.0, 0.0).is_err());
        assert!(ShellDensity::uniform(0.0, 2.0, 1.0).is_err());
        assert!(ShellDensity::uniform(2.0, 2.0, 1.0).is_err());
        assert!(ShellDensity::smooth(-1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn potential_examples_and_seams() {
        let p = unit_mass_uniform();
        assert!((p.eval(0.5) - 9.0 / 14.0).abs() < 1e-15);
        assert!((p.eval(3.0) - 1.0 / 3.0).abs() < 1e-15);
        for pot in [unit_mass_uniform(), smooth_potential()] {
            for seam in [1.0, 2.0] {
                let e = 1e-9;
                assert!((pot.eval(seam - e) - pot.eval(seam + e)).abs() < 1e-8);
                assert!((pot.derivative(seam - e) - pot.derivative(seam + e)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn potential_solves_poisson() {
        let p = smooth_potential();
        let h = 1e-4;
        for &r in &[0.5, 1.2, 1.5, 1.8, 2.5] {
            let lap = (p.eval(r + h) - 2.0 * p.eval(r) + p.eval(r - h)) / (h * h)
                + (p.eval(r + h) - p.eval(r - h)) / (h * r);
            assert!((lap - p.laplacian(r)).abs() < 1e-5, "r={r}: {lap} vs {}", p.laplacian(r));
        }
    }

    #[test]
    fn potential_is_positive_and_non_increasing() {
        for p in [unit_mass_uniform(), smooth_potential()] {
            let mut prev = f64::INFINITY;
            for i in 0..4000 {
                let r = i as f64 * 0.001;
                let u = p.eval(r);
                assert!(u > 0.0);
                assert!(u <= prev + 1e-15);
                prev = u;
            }
        }
    }

    /// Curvature of `Omega^2 delta` from centred differences of `Omega(r)`.
    fn fd_curvature(model: &ConformalFactorModel, r: f64, h: f64) -> f64 {
        let om = |r: f64| model.omega(r);
        let d1 = (om(r + h) - om(r - h)) / (2.0 * h);
        let d2 = (om(r + h) - 2.0 * om(r) + om(r - h)) / (h * h);
        let lap = d2 + 2.0 * d1 / r;
        let o = om(r);
        -4.0 * lap / (o * o * o) + 2.0 * d1 * d1 / (o * o * o * o)
    }

    #[test]
    fn curvature_signs_and_flat_interior() {
        let samples = RadialSamples::uniform(6.0, 600);
        let exp = ConformalFactorModel::new(ConformalVariant::ExpNewton, smooth_potential());
        let aff = ConformalFactorModel::new(ConformalVariant::AffineNewton, smooth_potential());
        let quart = ConformalFactorModel::new(ConformalVariant::QuarticShell, smooth_potential());
        let fe = curvature_log_conformal(&exp, &samples).unwrap();
        let fa = curvature_affine_conformal(&aff, &samples).unwrap();
        let fq = curvature_quartic(&quart, &samples).unwrap();
        for (i, &r) in samples.radii.iter().enumerate() {
            assert!(fe.samples[i] <= 0.0);
            assert!(fa.samples[i] >= 0.0);
            assert!(fq.samples[i] >= 0.0);
            if r <= 1.0 {
                assert_eq!(fe.samples[i], 0.0);
                assert_eq!(fa.samples[i], 0.0);
                assert_eq!(fq.samples[i], 0.0);
            }
            if r >= 2.0 {
                assert_eq!(fq.samples[i], 0.0);
            }
        }
        assert!(fe.samples[150] < 0.0);
        assert!(fa.samples[150] > 0.0);
        assert!(fe.flat_region.iter().all(|&i| samples.radii[i] < 1.0));
        assert!(fq.flat_region.iter().any(|&i| samples.radii[i] > 2.0));
    }

    #[test]
    fn exp_newton_curvature_closed_form() {
        let p = smooth_potential();
        let exp = ConformalFactorModel::new(ConformalVariant::ExpNewton, p.clone());
        for &r in &[1.1, 1.5, 1.9, 3.0] {
            let om = exp.omega(r);
            let want = -(16.0 * PI * p.density().density(r) + 2.0 * p.derivative(r).powi(2)) / (om * om);
            assert!((exp.scalar_curvature(r) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn curvature_formulas_agree_with_finite_differences() {
        for variant in [ConformalVariant::ExpNewton, ConformalVariant::AffineNewton] {
            let model = ConformalFactorModel::new(variant, smooth_potential());
            for &r in &[0.5, 1.25, 1.5, 1.75, 2.5] {
                let scale = model.scalar_curvature(r).abs().max(1.0);
                let coarse = (fd_curvature(&model, r, 2e-3) - model.scalar_curvature(r)).abs() / scale;
                let fine = (fd_curvature(&model, r, 1e-3) - model.scalar_curvature(r)).abs() / scale;
                assert!(fine < 1e-5, "{variant:?} r={r}: {fine}");
                if coarse > 1e-9 {
                    // Second order: halving the step cuts the error by ~4.
                    assert!(coarse / fine > 3.0, "{variant:?} r={r}: ratio {}", coarse / fine);
                }
            }
        }
        let aff = ConformalFactorModel::new(ConformalVariant::AffineNewton, smooth_potential());
        assert!(fd_curvature(&aff, 0.5, 1e-3).abs() < 1e-9);
    }

    #[test]
    fn quartic_curvature_matches_laplacian_form() {
        let p = smooth_potential();
        let model = ConformalFactorModel::new(ConformalVariant::QuarticShell, p.clone());
        let lap = |r: f64, h: f64| {
            (p.eval(r + h) - 2.0 * p.eval(r) + p.eval(r - h)) / (h * h) + (p.eval(r + h) - p.eval(r - h)) / (h * r)
        };
        for &r in &[1.3, 1.5, 1.7] {
            let exact = model.scalar_curvature(r);
            let e1 = (-8.0 * lap(r, 4e-3) / p.eval(r).powi(5) - exact).abs() / exact;
            let e2 = (-8.0 * lap(r, 2e-3) / p.eval(r).powi(5) - exact).abs() / exact;
            assert!(e2 < 1e-4, "r={r}: {e2}");
            assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "order ratio {}", e1 / e2);
        }
        assert_eq!(model.scalar_curvature(0.5), 0.0);
        assert_eq!(model.scalar_curvature(2.5), 0.0);
    }

    #[test]
    fn unit_factor_has_zero_curvature() {
        let model = ConformalFactorModel::new(ConformalVariant::Unit, smooth_potential());
        let f = curvature_log_conformal(&model, &RadialSamples::uniform(4.0, 100)).unwrap();
        assert_eq!(f.max_abs(), 0.0);
        let f = curvature_affine_conformal(&model, &RadialSamples::uniform(4.0, 100)).unwrap();
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn coarse_grids_and_wrong_variants_are_rejected() {
        let exp = ConformalFactorModel::new(ConformalVariant::ExpNewton, smooth_potential());
        assert!(matches!(
            curvature_log_conformal(&exp, &RadialSamples::uniform(4.0, 40)),
            Err(Error::UnresolvedShell { .. })
        ));
        assert!(curvature_affine_conformal(&exp, &RadialSamples::uniform(4.0, 400)).is_err());
        assert!(curvature_quartic(&exp, &RadialSamples::uniform(4.0, 400)).is_err());
    }

    /// Ricci tensor of `e^{2f} delta` in three dimensions from finite
    /// differences of `f = 2 ln U` at a Cartesian point.
    fn fd_ricci(p: &ShellPotential, x: [f64; 3], h: f64) -> [[f64; 3]; 3] {
        let f = |y: [f64; 3]| {
            let r = math::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
            2.0 * math::ln(p.eval(r))
        };
        let shift = |y: [f64; 3], i: usize, s: f64| {
            let mut z = y;
            z[i] += s;
            z
        };
        let mut grad = [0.0; 3];
        let mut hess = [[0.0; 3]; 3];
        for i in 0..3 {
            grad[i] = (f(shift(x, i, h)) - f(shift(x, i, -h))) / (2.0 * h);
            for j in 0..3 {
                let pp = f(shift(shift(x, i, h), j, h));
                let pm = f(shift(shift(x, i, h), j, -h));
                let mp = f(shift(shift(x, i, -h), j, h));
                let mm = f(shift(shift(x, i, -h), j, -h));
                hess[i][j] = (pp - pm - mp + mm) / (4.0 * h * h);
            }
        }
        let lap = hess[0][0] + hess[1][1] + hess[2][2];
        let g2 = grad.iter().map(|g| g * g).sum::<f64>();
        let mut ric = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                ric[i][j] = -(hess[i][j] - grad[i] * grad[j]) - if i == j { lap + g2 } else { 0.0 };
            }
        }
        ric
    }

    #[test]
    fn quartic_metric_is_riemann_flat_near_origin() {
        // In three dimensions Riemann is determined by Ricci.
        let p = smooth_potential();
        for x in [[0.1, 0.2, -0.3], [0.5, 0.1, 0.2], [0.0, 0.0, 0.8]] {
            let ric = fd_ricci(&p, x, 1e-3);
            for row in ric {
                for v in row {
                    assert!(v.abs() < 1e-8, "{v}");
                }
            }
        }
        let ric = fd_ricci(&p, [0.0, 0.0, 1.5], 1e-3);
        assert!(ric.iter().flatten().any(|v| v.abs() > 1e-3));
    }
}
