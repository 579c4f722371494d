//! Permittivity models and Fresnel reflection for planar multilayer stacks.
//!
//! Region 1 is the vacuum half-space holding the atom; the stack's layers
//! follow downwards and the last one is semi-infinite. Generalized reflection
//! coefficients are built by folding the three-layer formula from the bottom
//! interface upwards.

use num_complex::Complex64;

use crate::atomics::PhysicalConstants;
use crate::error::{Error, Result};

const C_LIGHT: f64 = PhysicalConstants::CODATA_2018.c;

/// Relative size below which a reflection denominator is treated as a pole.
pub const SINGULARITY_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PermittivityModel {
    Vacuum,
    /// Frequency-independent complex permittivity with Im >= 0.
    Constant(Complex64),
    /// Low-frequency metal, eps = 2 i c^2 / (omega^2 delta^2).
    Drude { skin_depth: f64 },
}

impl PermittivityModel {
    pub fn constant(eps: Complex64) -> Result<Self> {
        if !(eps.im >= 0.0) || !eps.re.is_finite() || !eps.im.is_finite() {
            return Err(Error::domain(format!(
                "constant permittivity must be finite with Im >= 0 (got {eps})"
            )));
        }
        Ok(Self::Constant(eps))
    }

    pub fn drude(skin_depth: f64) -> Result<Self> {
        if !(skin_depth > 0.0) || !skin_depth.is_finite() {
            return Err(Error::domain(format!(
                "skin depth must be positive (got {skin_depth} m)"
            )));
        }
        Ok(Self::Drude { skin_depth })
    }

    pub fn evaluate(&self, omega: f64) -> Result<Complex64> {
        evaluate_permittivity(self, omega)
    }
}

pub fn evaluate_permittivity(model: &PermittivityModel, omega: f64) -> Result<Complex64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::domain(format!(
            "permittivity needs omega > 0 (got {omega} rad/s)"
        )));
    }
    Ok(match *model {
        PermittivityModel::Vacuum => Complex64::new(1.0, 0.0),
        PermittivityModel::Constant(eps) => eps,
        PermittivityModel::Drude { skin_depth } => {
            Complex64::new(0.0, 2.0 * C_LIGHT * C_LIGHT / (omega * omega * skin_depth * skin_depth))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thickness {
    Finite(f64),
    SemiInfinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub model: PermittivityModel,
    pub thickness: Thickness,
}

impl Layer {
    pub fn film(model: PermittivityModel, thickness: f64) -> Self {
        Self {
            model,
            thickness: Thickness::Finite(thickness),
        }
    }

    pub fn substrate(model: PermittivityModel) -> Self {
        Self {
            model,
            thickness: Thickness::SemiInfinite,
        }
    }
}

/// Ordered layers below the vacuum half-space.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::domain("layer stack is empty"));
        };
        if last.thickness != Thickness::SemiInfinite {
            return Err(Error::domain("the last layer must be semi-infinite"));
        }
        for (idx, layer) in layers[..layers.len() - 1].iter().enumerate() {
            match layer.thickness {
                Thickness::Finite(h) if h > 0.0 && h.is_finite() => {}
                Thickness::Finite(h) => {
                    return Err(Error::domain(format!(
                        "layer {idx} has non-positive thickness {h} m"
                    )))
                }
                Thickness::SemiInfinite => {
                    return Err(Error::domain(format!(
                        "only the last layer may be semi-infinite (layer {idx} is)"
                    )))
                }
            }
        }
        for layer in &layers {
            match layer.model {
                PermittivityModel::Constant(eps) => {
                    PermittivityModel::constant(eps)?;
                }
                PermittivityModel::Drude { skin_depth } => {
                    PermittivityModel::drude(skin_depth)?;
                }
                PermittivityModel::Vacuum => {}
            }
        }
        Ok(Self { layers })
    }

    /// Nothing below the atom but more vacuum.
    pub fn vacuum() -> Self {
        Self {
            layers: vec![Layer::substrate(PermittivityModel::Vacuum)],
        }
    }

    pub fn half_space(model: PermittivityModel) -> Self {
        Self {
            layers: vec![Layer::substrate(model)],
        }
    }

    /// A film of thickness `h` on a semi-infinite substrate.
    pub fn film_on_substrate(film: PermittivityModel, h: f64, substrate: PermittivityModel) -> Result<Self> {
        Self::new(vec![Layer::film(film, h), Layer::substrate(substrate)])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Smallest length scale that shapes the reflection coefficient as a
    /// function of K: skin depths and film thicknesses.
    pub fn length_scales(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            if let PermittivityModel::Drude { skin_depth } = layer.model {
                out.push(skin_depth);
            }
            if let Thickness::Finite(h) = layer.thickness {
                out.push(h);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    Te,
    Tm,
}

/// Normal wavenumber sqrt(eps omega^2/c^2 - K^2) on the branch Im >= 0
/// (Re >= 0 when the root is real).
pub fn normal_wavenumber(omega: f64, k_par: f64, eps: Complex64) -> Complex64 {
    let k0 = omega / C_LIGHT;
    kz_from_square(eps * (k0 * k0) - k_par * k_par)
}

fn kz_from_square(sq: Complex64) -> Complex64 {
    let mut kz = sq.sqrt();
    if kz.im < 0.0 || (kz.im == 0.0 && kz.re < 0.0) {
        kz = -kz;
    }
    kz
}

/// Normal wavenumbers of every region at a fixed frequency and in-plane
/// wavenumber; index 0 is the vacuum half-space.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveContext {
    pub omega: f64,
    pub k_par: f64,
    pub eps: Vec<Complex64>,
    pub kz: Vec<Complex64>,
}

fn check_singular(den: Complex64, scale: f64, context: &str) -> Result<()> {
    let magnitude = den.norm();
    if !(magnitude > SINGULARITY_THRESHOLD * scale) {
        return Err(Error::Singularity {
            context: context.to_string(),
            magnitude,
        });
    }
    Ok(())
}

/// TE coefficient from region (eps_i, kz_i) onto (eps_j, kz_j), written as
/// (k_i^2 - k_j^2)/(kz_i + kz_j)^2 so that nearly equal normal wavenumbers
/// do not cancel.
fn te_coefficient(k0_sq: f64, eps_i: Complex64, kz_i: Complex64, eps_j: Complex64, kz_j: Complex64) -> Result<Complex64> {
    let den = kz_i + kz_j;
    check_singular(den, kz_i.norm() + kz_j.norm(), "TE Fresnel coefficient")?;
    Ok((eps_i - eps_j) * k0_sq / (den * den))
}

/// Sign of the eps_i kz_j term in the TM denominator. `Minus` reproduces a
/// degenerate form that is identically one; it exists for mutation tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmDenominator {
    Plus,
    Minus,
}

fn tm_coefficient(
    k0_sq: f64,
    k_par: f64,
    eps_i: Complex64,
    kz_i: Complex64,
    eps_j: Complex64,
    kz_j: Complex64,
    sign: TmDenominator,
) -> Result<Complex64> {
    let a = eps_j * kz_i;
    let b = eps_i * kz_j;
    match sign {
        TmDenominator::Plus => {
            let den = a + b;
            check_singular(den, a.norm() + b.norm(), "TM Fresnel coefficient")?;
            // (a - b)(a + b) = (eps_j - eps_i)(eps_i eps_j k0^2 - (eps_i + eps_j) K^2)
            let num = (eps_j - eps_i) * (eps_i * eps_j * k0_sq - (eps_i + eps_j) * (k_par * k_par));
            Ok(num / (den * den))
        }
        TmDenominator::Minus => {
            let den = a - b;
            check_singular(den, a.norm() + b.norm(), "TM Fresnel coefficient")?;
            Ok((a - b) / den)
        }
    }
}

fn k0_sq(omega: f64) -> f64 {
    let k0 = omega / C_LIGHT;
    k0 * k0
}

fn check_wave_args(omega: f64, k_par: f64) -> Result<()> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::domain(format!("omega must be positive (got {omega})")));
    }
    if !(k_par >= 0.0) || !k_par.is_finite() {
        return Err(Error::domain(format!("K must be >= 0 (got {k_par})")));
    }
    Ok(())
}

/// r^TE = (k1z - k2z)/(k1z + k2z).
pub fn fresnel_te(omega: f64, k_par: f64, eps1: Complex64, eps2: Complex64) -> Result<Complex64> {
    check_wave_args(omega, k_par)?;
    let k1z = normal_wavenumber(omega, k_par, eps1);
    let k2z = normal_wavenumber(omega, k_par, eps2);
    te_coefficient(k0_sq(omega), eps1, k1z, eps2, k2z)
}

/// r^TM = (eps2 k1z - eps1 k2z)/(eps2 k1z + eps1 k2z).
pub fn fresnel_tm(omega: f64, k_par: f64, eps1: Complex64, eps2: Complex64) -> Result<Complex64> {
    fresnel_tm_with(omega, k_par, eps1, eps2, TmDenominator::Plus)
}

pub fn fresnel_tm_with(
    omega: f64,
    k_par: f64,
    eps1: Complex64,
    eps2: Complex64,
    sign: TmDenominator,
) -> Result<Complex64> {
    check_wave_args(omega, k_par)?;
    let k1z = normal_wavenumber(omega, k_par, eps1);
    let k2z = normal_wavenumber(omega, k_par, eps2);
    tm_coefficient(k0_sq(omega), k_par, eps1, k1z, eps2, k2z, sign)
}

/// Generalized coefficient of a film of thickness `h`:
/// (r12 + r23 e^{2 i k2z h}) / (1 - r21 r23 e^{2 i k2z h}).
pub fn three_layer_fresnel(r12: Complex64, r21: Complex64, r23: Complex64, k2z: Complex64, h: f64) -> Result<Complex64> {
    if !(h >= 0.0) {
        return Err(Error::domain(format!("film thickness must be >= 0 (got {h})")));
    }
    let phase = if h.is_infinite() {
        Complex64::new(0.0, 0.0)
    } else {
        (Complex64::new(0.0, 2.0 * h) * k2z).exp()
    };
    let round_trip = r23 * phase;
    let den = Complex64::new(1.0, 0.0) - r21 * round_trip;
    check_singular(den, 1.0, "three-layer denominator")?;
    Ok((r12 + round_trip) / den)
}

/// Both polarizations of the generalized reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    pub te: Complex64,
    pub tm: Complex64,
}

impl Reflection {
    pub fn get(&self, pol: Polarization) -> Complex64 {
        match pol {
            Polarization::Te => self.te,
            Polarization::Tm => self.tm,
        }
    }
}

/// A stack with its permittivities evaluated at one frequency, for repeated
/// reflection queries at many in-plane wavenumbers.
#[derive(Debug, Clone)]
pub struct StackResponse<'a> {
    stack: &'a LayerStack,
    omega: f64,
    k0_sq: f64,
    /// eps of region 0 (vacuum) followed by each layer.
    eps: Vec<Complex64>,
}

impl<'a> StackResponse<'a> {
    pub fn new(stack: &'a LayerStack, omega: f64) -> Result<Self> {
        let mut eps = Vec::with_capacity(stack.layers.len() + 1);
        eps.push(Complex64::new(1.0, 0.0));
        for layer in &stack.layers {
            eps.push(layer.model.evaluate(omega)?);
        }
        Ok(Self {
            stack,
            omega,
            k0_sq: k0_sq(omega),
            eps,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn stack(&self) -> &LayerStack {
        self.stack
    }

    pub fn wave_context(&self, k_par: f64) -> WaveContext {
        WaveContext {
            omega: self.omega,
            k_par,
            eps: self.eps.clone(),
            kz: self.eps.iter().map(|&e| self.kz(e, k_par)).collect(),
        }
    }

    fn kz(&self, eps: Complex64, k_par: f64) -> Complex64 {
        kz_from_square(eps * self.k0_sq - k_par * k_par)
    }

    pub fn reflection(&self, k_par: f64) -> Result<Reflection> {
        self.reflection_with(k_par, TmDenominator::Plus)
    }

    pub fn reflection_with(&self, k_par: f64, sign: TmDenominator) -> Result<Reflection> {
        if !(k_par >= 0.0) || !k_par.is_finite() {
            return Err(Error::domain(format!("K must be >= 0 (got {k_par})")));
        }
        let n = self.eps.len() - 1;
        let mut kz_below = self.kz(self.eps[n], k_par);
        let mut kz_above = self.kz(self.eps[n - 1], k_par);
        let mut te = te_coefficient(self.k0_sq, self.eps[n - 1], kz_above, self.eps[n], kz_below)?;
        let mut tm = tm_coefficient(self.k0_sq, k_par, self.eps[n - 1], kz_above, self.eps[n], kz_below, sign)?;
        for i in (1..n).rev() {
            // Region i is the film layers[i - 1]; fold its lower response upwards.
            let h = match self.stack.layers[i - 1].thickness {
                Thickness::Finite(h) => h,
                Thickness::SemiInfinite => unreachable!("validated stack"),
            };
            kz_below = kz_above;
            kz_above = self.kz(self.eps[i - 1], k_par);
            let r_te = te_coefficient(self.k0_sq, self.eps[i - 1], kz_above, self.eps[i], kz_below)?;
            let r_tm = tm_coefficient(self.k0_sq, k_par, self.eps[i - 1], kz_above, self.eps[i], kz_below, sign)?;
            te = three_layer_fresnel(r_te, -r_te, te, kz_below, h)?;
            tm = three_layer_fresnel(r_tm, -r_tm, tm, kz_below, h)?;
        }
        Ok(Reflection { te, tm })
    }
}

/// Generalized reflection coefficient seen from the vacuum half-space.
pub fn stack_reflection(stack: &LayerStack, omega: f64, k_par: f64, pol: Polarization) -> Result<Complex64> {
    check_wave_args(omega, k_par)?;
    Ok(StackResponse::new(stack, omega)?.reflection(k_par)?.get(pol))
}
