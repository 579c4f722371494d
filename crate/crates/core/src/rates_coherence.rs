//! Spin-flip rates, line shifts and the spatial coherence of a two-site
//! superposition.
//!
//! Rates follow from contracting the imaginary part of the magnetic kernel
//! with the spin matrix elements, Gamma = 2 C s^dag Im[H] s with
//! C = (mu_B g_S)^2 / (c^2 eps0 hbar), where Im acts entry-wise. The
//! coherence S(l) is the same contraction at lateral separation l divided
//! by its value at l = 0; the off-diagonal density-matrix element relaxes
//! from 1 towards S at the rate Gamma.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::atomics::{thermal_photon_number, PhysicalConstants, SpinVector};
use crate::error::{Error, Result};
use crate::green_kernel::{assemble, KernelMode, KernelPlan, SeparationAxis, Tensor3};
use crate::layered_media::{LayerStack, StackResponse};
use crate::numerics::{
    bessel_j012, bisect, integrate_with_breakpoints, loglog_slope, second_derivative, Bracket, Interval,
    QuadratureReport, ToleranceSpec,
};

/// Populations of the two sites; the trace of the reduced density matrix
/// is 1 by construction.
pub const RHO11: f64 = 1.0;
pub const RHO22: f64 = 1.0;

const SMALL_L_STEP: f64 = 1.0 / 200.0;
const HALF_LENGTH_TOL: f64 = 1e-4;
const MAX_BRACKET: f64 = 32.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    /// Spin-flip rate including the thermal factor, 1/s.
    pub gamma12: f64,
    /// Line shift, rad/s. Reported only; never fed back into the transition frequency.
    pub delta_omega: f64,
    /// n_th + 1.
    pub thermal_factor: f64,
    pub report: QuadratureReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceResult {
    pub s: f64,
    pub l: f64,
    pub d: f64,
    pub axis: SeparationAxis,
    /// (t, rho12(t)).
    pub rho12_samples: Vec<(f64, f64)>,
    /// c2 in S = 1 - c2 l^2 + O(l^4), 1/m^2.
    pub small_l_coeff: f64,
    pub report: QuadratureReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit {
    /// n in Gamma ~ d^-n.
    pub exponent: f64,
    /// RMS of the log residuals.
    pub residual: f64,
}

/// Settings shared by every rate and coherence evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Engine {
    pub constants: PhysicalConstants,
    pub tol: ToleranceSpec,
    pub mode: KernelMode,
    pub axis: SeparationAxis,
}

impl Default for Engine {
    fn default() -> Self {
        Self {
            constants: PhysicalConstants::CODATA_2018,
            tol: ToleranceSpec::default(),
            mode: KernelMode::QuasiStatic,
            axis: SeparationAxis::X,
        }
    }
}

/// sum conj(s_q) Im(H_qk) s_k with the imaginary part taken entry-wise.
fn contract_imag(s: &SpinVector, h: &Tensor3) -> Complex64 {
    s.contract_real(&h.map(|r| r.map(|v| v.im)))
}

fn contract_real(s: &SpinVector, h: &Tensor3) -> Complex64 {
    s.contract_real(&h.map(|r| r.map(|v| v.re)))
}

fn check_distance(d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::domain(format!("distance must be positive (got {d} m)")));
    }
    Ok(())
}

/// The full kernel tensor at separation l from six radial components.
fn kernel_tensor(c: [Complex64; 6], axis: SeparationAxis) -> Tensor3 {
    let (te, tm) = assemble(c, axis);
    crate::green_kernel::add(&te, &tm)
}

impl Engine {
    pub fn with_tolerance(mut self, rel: f64) -> Self {
        self.tol = ToleranceSpec::relative(rel);
        self
    }

    /// Zero-temperature rate from the azimuthally integrated radial formula
    /// Gamma = (mu_B g_S)^2/(8 c^2 eps0 hbar) * 3 pi int K^2/(2 pi)^2
    /// e^{-2Kd}/2 Im r_TE dK, which keeps the TE polarization only and
    /// assumes |<S_y>| = |<S_z>| = 1/4.
    pub fn gamma12_closed_form(&self, d: f64, omega: f64, stack: &LayerStack) -> Result<(f64, QuadratureReport)> {
        check_distance(d)?;
        let response = StackResponse::new(stack, omega)?;
        let failure = RefCell::new(None);
        let integrand = |k: f64| -> f64 {
            match response.reflection(k) {
                Ok(r) => k * k / (4.0 * PI * PI) * 0.5 * (-2.0 * k * d).exp() * r.te.im,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        let mut breakpoints = vec![0.5 / d, 2.0 / d];
        breakpoints.extend(stack.length_scales().iter().map(|s| 1.0 / s));
        let q = integrate_with_breakpoints(integrand, Interval::semi_infinite(0.0, 2.0 * d)?, &breakpoints, &self.tol);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let (integral, report) = q.into_result()?;
        let c = &self.constants;
        let m = c.mu_b * c.g_s;
        let prefactor = m * m / (8.0 * c.c * c.c * c.eps0 * c.hbar);
        Ok((prefactor * 3.0 * PI * integral, report))
    }

    fn plan<'a>(&self, d: f64, omega: f64, stack: &'a LayerStack) -> Result<KernelPlan<'a>> {
        KernelPlan::new(d, omega, stack, self.mode)
    }

    /// Zero-temperature rate from the full kernel contraction at l = 0.
    pub fn gamma_general(
        &self,
        d: f64,
        omega: f64,
        stack: &LayerStack,
        spin: &SpinVector,
    ) -> Result<(f64, QuadratureReport)> {
        check_distance(d)?;
        if spin.is_zero() {
            return Ok((0.0, QuadratureReport { converged: true, ..Default::default() }));
        }
        let (kernel, report) = self.plan(d, omega, stack)?.kernel(0.0, self.axis, &self.tol)?;
        let gamma = 2.0 * self.constants.magnetic_coupling() * contract_imag(spin, &kernel.total()).re;
        Ok((gamma, report))
    }

    /// delta_omega = C s^dag Re[H] s at l = 0.
    pub fn line_shift(
        &self,
        d: f64,
        omega: f64,
        stack: &LayerStack,
        spin: &SpinVector,
    ) -> Result<(f64, QuadratureReport)> {
        check_distance(d)?;
        if spin.is_zero() {
            return Ok((0.0, QuadratureReport { converged: true, ..Default::default() }));
        }
        let (kernel, report) = self.plan(d, omega, stack)?.kernel(0.0, self.axis, &self.tol)?;
        let shift = self.constants.magnetic_coupling() * contract_real(spin, &kernel.total()).re;
        Ok((shift, report))
    }

    /// Rate, shift and thermal factor at temperature `t_kelvin`, from one
    /// kernel evaluation.
    pub fn rate(
        &self,
        d: f64,
        omega: f64,
        stack: &LayerStack,
        spin: &SpinVector,
        t_kelvin: f64,
    ) -> Result<RateResult> {
        check_distance(d)?;
        let thermal_factor = thermal_photon_number(omega, t_kelvin, &self.constants)? + 1.0;
        let (kernel, report) = self.plan(d, omega, stack)?.kernel(0.0, self.axis, &self.tol)?;
        let h = kernel.total();
        let c = self.constants.magnetic_coupling();
        let gamma0 = 2.0 * c * contract_imag(spin, &h).re;
        Ok(RateResult {
            gamma12: apply_thermal(gamma0, omega, t_kelvin, &self.constants)?,
            delta_omega: c * contract_real(spin, &h).re,
            thermal_factor,
            report,
        })
    }

    /// S(l) as a complex number; its imaginary part is a diagnostic that
    /// vanishes when the spin contraction is real.
    ///
    /// Numerator and denominator are integrated on shared nodes, so S(0) = 1
    /// exactly and quadrature errors are correlated.
    pub fn coherence_s_complex(
        &self,
        l: f64,
        d: f64,
        omega: f64,
        stack: &LayerStack,
        spin: &SpinVector,
    ) -> Result<(Complex64, QuadratureReport)> {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::domain(format!("separation must be >= 0 (got {l} m)")));
        }
        check_distance(d)?;
        let plan = self.plan(d, omega, stack)?;
        let axis = self.axis;
        let j_zero = bessel_j012(0.0);
        let (v, report) = plan.integrate(
            |k, w| {
                let at_l = kernel_tensor(w.components(bessel_j012(k * l)), axis);
                let at_0 = kernel_tensor(w.components(j_zero), axis);
                [contract_imag(spin, &at_l), contract_imag(spin, &at_0)]
            },
            &self.tol,
        )?;
        let [num, den] = v;
        if !(den.re > 0.0) {
            return Err(Error::Degenerate(format!(
                "spin-flip rate vanishes (contraction {den}); coherence is undefined"
            )));
        }
        Ok((num / den.re, report))
    }

    pub fn coherence_s(
        &self,
        l: f64,
        d: f64,
        omega: f64,
        stack: &LayerStack,
        spin: &SpinVector,
    ) -> Result<f64> {
        Ok(self.coherence_s_complex(l, d, omega, stack, spin)?.0.re)
    }

    /// c2 = (5/96) Gamma''(d) / Gamma(d), by central differences of the
    /// closed-form rate with step d/200 and one Richardson level.
    pub fn small_l_coefficient(&self, d: f64, omega: f64, stack: &LayerStack) -> Result<f64> {
        check_distance(d)?;
        let tight = Engine {
            tol: ToleranceSpec::relative(self.tol.rel.min(1e-12)),
            ..*self
        };
        let gamma = tight.gamma12_closed_form(d, omega, stack)?.0;
        if !(gamma > 0.0) {
            return Err(Error::Degenerate(format!("rate at d = {d} m is {gamma}")));
        }
        let failure = RefCell::new(None);
        let g = |x: f64| match tight.gamma12_closed_form(x, omega, stack) {
            Ok((v, _)) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let curvature = second_derivative(g, d, SMALL_L_STEP * d, true);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(small_l_from_curvature(curvature, gamma))
    }

    /// Separation at which S falls to 1/2, by bisection on a bracket grown
    /// from [0, d] by doubling up to [0, 32 d].
    pub fn half_coherence_length(
        &self,
        d: f64,
        omega: f64,
        stack: &LayerStack,
        spin: &SpinVector,
    ) -> Result<f64> {
        check_distance(d)?;
        let plan = self.plan(d, omega, stack)?;
        let axis = self.axis;
        let failure = RefCell::new(None);
        let s_minus_half = |l: f64| -> f64 {
            let j_zero = bessel_j012(0.0);
            let r = plan.integrate(
                |k, w| {
                    let at_l = kernel_tensor(w.components(bessel_j012(k * l)), axis);
                    let at_0 = kernel_tensor(w.components(j_zero), axis);
                    [contract_imag(spin, &at_l).re, contract_imag(spin, &at_0).re]
                },
                &self.tol,
            );
            match r {
                Ok(([num, den], _)) if den > 0.0 => num / den - 0.5,
                Ok(_) => {
                    failure
                        .borrow_mut()
                        .get_or_insert(Error::Degenerate("spin-flip rate vanishes".into()));
                    f64::NAN
                }
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };

        let mut lo = 0.0;
        let mut hi = d;
        let mut f_hi = s_minus_half(hi);
        while f_hi > 0.0 && hi < MAX_BRACKET * d {
            lo = hi;
            hi *= 2.0;
            f_hi = s_minus_half(hi);
        }
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        if f_hi > 0.0 {
            return Err(Error::Bracket {
                lo: 0.0,
                hi,
                f_lo: 0.5,
                f_hi,
            });
        }
        let root = bisect(&s_minus_half, Bracket::new(lo, hi), HALF_LENGTH_TOL);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        root
    }

    /// S, rho12 at the requested times and the small-l coefficient.
    #[allow(clippy::too_many_arguments)]
    pub fn coherence(
        &self,
        l: f64,
        d: f64,
        omega: f64,
        stack: &LayerStack,
        spin: &SpinVector,
        t_kelvin: f64,
        times: &[f64],
    ) -> Result<CoherenceResult> {
        let (s, report) = self.coherence_s_complex(l, d, omega, stack, spin)?;
        let (gamma0, rate_report) = self.gamma_general(d, omega, stack, spin)?;
        let gamma = apply_thermal(gamma0, omega, t_kelvin, &self.constants)?;
        let rho12_samples = times
            .iter()
            .map(|&t| Ok((t, rho12_from_parts(t, gamma, s.re)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoherenceResult {
            s: s.re,
            l,
            d,
            axis: self.axis,
            rho12_samples,
            small_l_coeff: self.small_l_coefficient(d, omega, stack)?,
            report: report.merge(rate_report),
        })
    }

    /// rho12(t) with the thermally scaled rate.
    #[allow(clippy::too_many_arguments)]
    pub fn rho12(
        &self,
        t: f64,
        l: f64,
        d: f64,
        omega: f64,
        stack: &LayerStack,
        spin: &SpinVector,
        t_kelvin: f64,
    ) -> Result<f64> {
        let s = self.coherence_s(l, d, omega, stack, spin)?;
        let gamma = apply_thermal(self.gamma_general(d, omega, stack, spin)?.0, omega, t_kelvin, &self.constants)?;
        rho12_from_parts(t, gamma, s)
    }
}

/// (5/96) Gamma'' / Gamma.
pub fn small_l_from_curvature(curvature: f64, gamma: f64) -> f64 {
    5.0 / 96.0 * curvature / gamma
}

/// Rate multiplied by n_th(omega, T) + 1.
pub fn apply_thermal(rate: f64, omega: f64, t_kelvin: f64, constants: &PhysicalConstants) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(Error::domain(format!("rate must be >= 0 (got {rate})")));
    }
    Ok(rate * (thermal_photon_number(omega, t_kelvin, constants)? + 1.0))
}

/// rho12(t) = S + (1 - S) e^{-Gamma t}.
pub fn rho12_from_parts(t: f64, gamma: f64, s: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0 (got {t} s)")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::domain(format!("rate must be >= 0 (got {gamma})")));
    }
    Ok(s + (1.0 - s) * (-gamma * t).exp())
}

/// Linearized loss of coherence 5 alpha l^2/(48 d^2) * Gamma t, valid for
/// t below a tenth of the lifetime.
pub fn short_time_decoherence(t: f64, l: f64, d: f64, gamma12: f64, alpha: f64) -> f64 {
    5.0 * alpha * l * l / (48.0 * d * d) * t * gamma12
}

/// alpha in the short-time law from c2: alpha = 48 d^2 c2 / 5.
pub fn alpha_from_small_l(c2: f64, d: f64) -> f64 {
    48.0 * d * d * c2 / 5.0
}

/// Rate shared by two positions with different individual rates.
pub fn two_position_rate(gamma1: f64, gamma2: f64) -> f64 {
    0.5 * (gamma1 + gamma2)
}

/// Power-law exponent n of Gamma ~ d^-n by least squares in log-log space.
pub fn fit_asymptotic_exponent(ds: &[f64], gammas: &[f64]) -> Result<AsymptoticFit> {
    if ds.len() < 3 {
        return Err(Error::domain(format!(
            "exponent fit needs at least 3 points (got {})",
            ds.len()
        )));
    }
    let fit = loglog_slope(ds, gammas)?;
    Ok(AsymptoticFit {
        exponent: -fit.slope,
        residual: fit.residual,
    })
}

// Free-function forms with default settings.

pub fn gamma12_closed_form(d: f64, omega: f64, stack: &LayerStack, constants: &PhysicalConstants) -> Result<(f64, QuadratureReport)> {
    Engine { constants: *constants, ..Default::default() }.gamma12_closed_form(d, omega, stack)
}

pub fn gamma_general(
    d: f64,
    omega: f64,
    stack: &LayerStack,
    spin: &SpinVector,
    constants: &PhysicalConstants,
) -> Result<(f64, QuadratureReport)> {
    Engine { constants: *constants, ..Default::default() }.gamma_general(d, omega, stack, spin)
}

pub fn line_shift(
    d: f64,
    omega: f64,
    stack: &LayerStack,
    spin: &SpinVector,
    constants: &PhysicalConstants,
) -> Result<(f64, QuadratureReport)> {
    Engine { constants: *constants, ..Default::default() }.line_shift(d, omega, stack, spin)
}

pub fn coherence_s(
    l: f64,
    d: f64,
    omega: f64,
    stack: &LayerStack,
    spin: &SpinVector,
    constants: &PhysicalConstants,
) -> Result<f64> {
    Engine { constants: *constants, ..Default::default() }.coherence_s(l, d, omega, stack, spin)
}

pub fn small_l_coefficient(d: f64, omega: f64, stack: &LayerStack, constants: &PhysicalConstants) -> Result<f64> {
    Engine { constants: *constants, ..Default::default() }.small_l_coefficient(d, omega, stack)
}

pub fn half_coherence_length(
    d: f64,
    omega: f64,
    stack: &LayerStack,
    spin: &SpinVector,
    constants: &PhysicalConstants,
) -> Result<f64> {
    Engine { constants: *constants, ..Default::default() }.half_coherence_length(d, omega, stack, spin)
}

#[allow(clippy::too_many_arguments)]
pub fn rho12(
    t: f64,
    l: f64,
    d: f64,
    omega: f64,
    stack: &LayerStack,
    spin: &SpinVector,
    t_kelvin: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    Engine { constants: *constants, ..Default::default() }.rho12(t, l, d, omega, stack, spin, t_kelvin)
}
