//! Reflected part of the electric Green tensor above a planar stack, and its
//! curl-curl magnetic kernel H = curl G curl' at two points a height `d`
//! above the surface, separated laterally by `l`.
//!
//! In the Weyl representation the curls act as cross products with
//! a = (k_par, k1z) on the field side and b = (-k_par, k1z) on the source
//! side, H_qk = [a]x R [b]x. For the TE part R ~ s (x) s this gives
//! (a x s) (x) (s x b); for the TM part the transversal polarization vectors
//! collapse to k1^2 s (x) s. Both are coded in that closed form: expanding
//! the TM product numerically cancels terms of relative size (K/k1)^2.
//!
//! The azimuthal integral at separation l along x yields Bessel kernels:
//!
//! ```text
//! H_zz = 1/(2pi) int K dK  p r_TE K^2 J0
//! H_zx = i/(2pi) int K dK  p r_TE K k1z J1        H_xz = -H_zx
//! H_xx = 1/(4pi) int K dK  p [-r_TE k1z^2 (J0 - J2) + r_TM k1^2 (J0 + J2)]
//! H_yy = 1/(4pi) int K dK  p [-r_TE k1z^2 (J0 + J2) + r_TM k1^2 (J0 - J2)]
//! ```
//!
//! with p = i/(2 k1z) exp(2 i k1z d) and J_n = J_n(K l); all other entries
//! vanish. The quasi-static mode sets k1z = iK, so p = exp(-2Kd)/(2K) and the
//! TM part drops out.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::atomics::PhysicalConstants;
use crate::error::{Error, Result};
use crate::layered_media::{LayerStack, PermittivityModel, Reflection, StackResponse};
use crate::numerics::{
    bessel_j012, gauss_legendre, integrate_with_breakpoints, Interval, QuadValue, QuadratureReport,
    ToleranceSpec,
};

const C_LIGHT: f64 = PhysicalConstants::CODATA_2018.c;

pub type Tensor3 = [[Complex64; 3]; 3];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn zero_tensor() -> Tensor3 {
    [[ZERO; 3]; 3]
}

pub fn transpose(m: &Tensor3) -> Tensor3 {
    let mut t = zero_tensor();
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t[j][i] = *v;
        }
    }
    t
}

pub fn add(a: &Tensor3, b: &Tensor3) -> Tensor3 {
    let mut t = *a;
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] += b[i][j];
        }
    }
    t
}

/// Max-abs norm over real and imaginary parts of all entries.
pub fn max_norm(m: &Tensor3) -> f64 {
    let mut n: f64 = 0.0;
    for row in m {
        for v in row {
            n = n.max(v.re.abs()).max(v.im.abs());
        }
    }
    n
}

/// max_norm(a - b) / max_norm(b).
pub fn relative_deviation(a: &Tensor3, b: &Tensor3) -> f64 {
    let mut diff = zero_tensor();
    for i in 0..3 {
        for j in 0..3 {
            diff[i][j] = a[i][j] - b[i][j];
        }
    }
    max_norm(&diff) / max_norm(b)
}

fn outer(u: [Complex64; 3], v: [Complex64; 3], scale: Complex64) -> Tensor3 {
    let mut t = zero_tensor();
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = scale * u[i] * v[j];
        }
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum KernelMode {
    /// k1z -> iK throughout; the regime of interest, d << wavelength.
    #[default]
    QuasiStatic,
    /// Full retarded Weyl factors; kept for validation.
    Exact,
}

/// In-plane direction of the separation between the two atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum SeparationAxis {
    #[default]
    X,
    Y,
}

/// Reflection tensor R(K, phi; z, z') split by polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionComponents {
    pub te: Tensor3,
    pub tm: Tensor3,
}

impl ReflectionComponents {
    pub fn total(&self) -> Tensor3 {
        add(&self.te, &self.tm)
    }
}

fn vacuum_k1_sq(omega: f64) -> f64 {
    let k = omega / C_LIGHT;
    k * k
}

fn exact_k1z(k1_sq: f64, k_par: f64) -> Complex64 {
    let sq = k1_sq - k_par * k_par;
    if sq >= 0.0 {
        Complex64::new(sq.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-sq).sqrt())
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("{name} must be positive (got {v})")));
    }
    Ok(())
}

/// R = i/(2 k1z) e^{i k1z (z + z')} [r_TE s (x) s - r_TM p_up (x) p_down]
/// with s = z x k_hat, p_up = (k1z k_hat - K z)/k1, p_down = (k1z k_hat + K z)/k1.
///
/// The xz entry is -r_TM k1z k_x/k1^2 times the prefactor, the sign that
/// keeps the reflected field transverse to its wave vector.
pub fn reflection_components(
    k_par: f64,
    phi: f64,
    omega: f64,
    z: f64,
    z_prime: f64,
    stack: &LayerStack,
) -> Result<ReflectionComponents> {
    check_positive("z", z)?;
    check_positive("z'", z_prime)?;
    let response = StackResponse::new(stack, omega)?;
    let refl = response.reflection(k_par)?;
    let k1_sq = vacuum_k1_sq(omega);
    let k1z = exact_k1z(k1_sq, k_par);
    if k1z.norm() == 0.0 {
        return Err(Error::Singularity {
            context: "reflection prefactor i/(2 k1z) at K = k1".into(),
            magnitude: 0.0,
        });
    }
    let pref = I / (2.0 * k1z) * (I * k1z * (z + z_prime)).exp();
    let (c, s) = (phi.cos(), phi.sin());
    let k1 = k1_sq.sqrt();
    let s_vec = [Complex64::new(-s, 0.0), Complex64::new(c, 0.0), ZERO];
    let p_up = [k1z * c / k1, k1z * s / k1, Complex64::new(-k_par / k1, 0.0)];
    let p_down = [k1z * c / k1, k1z * s / k1, Complex64::new(k_par / k1, 0.0)];
    Ok(ReflectionComponents {
        te: outer(s_vec, s_vec, pref * refl.te),
        tm: outer(p_up, p_down, -pref * refl.tm),
    })
}

/// Geometry-dependent factors shared by the integrands.
struct WeylFactors {
    /// Normal wavenumber in the vacuum region (iK when quasi-static).
    k1z: Complex64,
    /// i/(2 k1z) e^{2 i k1z d}.
    pref: Complex64,
    /// k1^2 as it enters the TM magnetic term (0 when quasi-static).
    k1_sq: f64,
}

fn weyl_factors(k_par: f64, d: f64, k1_sq: f64, mode: KernelMode) -> Result<WeylFactors> {
    match mode {
        KernelMode::QuasiStatic => {
            if k_par == 0.0 {
                return Err(Error::Singularity {
                    context: "quasi-static prefactor 1/(2K) at K = 0".into(),
                    magnitude: 0.0,
                });
            }
            Ok(WeylFactors {
                k1z: Complex64::new(0.0, k_par),
                pref: Complex64::new((-2.0 * k_par * d).exp() / (2.0 * k_par), 0.0),
                k1_sq: 0.0,
            })
        }
        KernelMode::Exact => {
            let k1z = exact_k1z(k1_sq, k_par);
            if k1z.norm() == 0.0 {
                return Err(Error::Singularity {
                    context: "reflection prefactor i/(2 k1z) at K = k1".into(),
                    magnitude: 0.0,
                });
            }
            Ok(WeylFactors {
                k1z,
                pref: I / (2.0 * k1z) * (2.0 * I * k1z * d).exp(),
                k1_sq,
            })
        }
    }
}

fn weyl_integrand_split(k_par: f64, phi: f64, f: &WeylFactors, refl: Reflection) -> (Tensor3, Tensor3) {
    let (c, s) = (phi.cos(), phi.sin());
    let k = Complex64::new(k_par, 0.0);
    // a x s and s x b for a = (K k_hat, k1z), b = (-K k_hat, k1z).
    let field = [-f.k1z * c, -f.k1z * s, k];
    let source = [f.k1z * c, f.k1z * s, k];
    let te = outer(field, source, f.pref * refl.te);
    let s_vec = [Complex64::new(-s, 0.0), Complex64::new(c, 0.0), ZERO];
    let tm = outer(s_vec, s_vec, f.pref * refl.tm * f.k1_sq);
    (te, tm)
}

/// curl G curl' of one Weyl component at coincident height d, without the
/// lateral phase factor e^{i k_par . (rho - rho')}.
pub fn magnetic_weyl_integrand(
    k_par: f64,
    phi: f64,
    omega: f64,
    d: f64,
    stack: &LayerStack,
    mode: KernelMode,
) -> Result<Tensor3> {
    check_positive("d", d)?;
    let response = StackResponse::new(stack, omega)?;
    let f = weyl_factors(k_par, d, vacuum_k1_sq(omega), mode)?;
    let (te, tm) = weyl_integrand_split(k_par, phi, &f, response.reflection(k_par)?);
    Ok(add(&te, &tm))
}

/// Magnetic kernel at separation `l`, split by polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticKernel {
    pub l: f64,
    pub d: f64,
    pub omega: f64,
    pub mode: KernelMode,
    pub axis: SeparationAxis,
    pub te: Tensor3,
    pub tm: Tensor3,
}

impl MagneticKernel {
    pub fn total(&self) -> Tensor3 {
        add(&self.te, &self.tm)
    }

    /// Share of the TM polarization in the kernel, max_norm(tm)/max_norm(total).
    pub fn tm_fraction(&self) -> f64 {
        let total = max_norm(&self.total());
        if total == 0.0 {
            0.0
        } else {
            max_norm(&self.tm) / total
        }
    }

    /// Entry-wise imaginary part.
    pub fn imag(&self) -> [[f64; 3]; 3] {
        self.total().map(|row| row.map(|v| v.im))
    }

    /// Entry-wise real part.
    pub fn real(&self) -> [[f64; 3]; 3] {
        self.total().map(|row| row.map(|v| v.re))
    }
}

/// Bessel-free radial coefficients at one K; see the module table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialWeights {
    /// Coefficient of J0 in H_zz.
    pub zz: Complex64,
    /// Coefficient of J1 in H_zx.
    pub zx: Complex64,
    /// TE transverse coefficient: H_xx = t (J0 - J2), H_yy = t (J0 + J2).
    pub te_t: Complex64,
    /// TM transverse coefficient: H_xx = t (J0 + J2), H_yy = t (J0 - J2).
    pub tm_t: Complex64,
}

impl RadialWeights {
    /// [zz, zx, xx_te, yy_te, xx_tm, yy_tm] for Bessel values j = J_{0,1,2}(K l).
    pub fn components(&self, j: [f64; 3]) -> [Complex64; 6] {
        let minus = j[0] - j[2];
        let plus = j[0] + j[2];
        [
            self.zz * j[0],
            self.zx * j[1],
            self.te_t * minus,
            self.te_t * plus,
            self.tm_t * plus,
            self.tm_t * minus,
        ]
    }
}

/// Place the six independent components into (te, tm) tensors.
pub fn assemble(c: [Complex64; 6], axis: SeparationAxis) -> (Tensor3, Tensor3) {
    let mut te = zero_tensor();
    let mut tm = zero_tensor();
    match axis {
        SeparationAxis::X => {
            te[2][2] = c[0];
            te[2][0] = c[1];
            te[0][2] = -c[1];
            te[0][0] = c[2];
            te[1][1] = c[3];
            tm[0][0] = c[4];
            tm[1][1] = c[5];
        }
        SeparationAxis::Y => {
            // Rotate the x-separated kernel by +90 degrees about z.
            te[2][2] = c[0];
            te[2][1] = c[1];
            te[1][2] = -c[1];
            te[1][1] = c[2];
            te[0][0] = c[3];
            tm[1][1] = c[4];
            tm[0][0] = c[5];
        }
    }
    (te, tm)
}

/// Everything needed to integrate radial kernels for one (d, omega, stack).
#[derive(Debug, Clone)]
pub struct KernelPlan<'a> {
    response: StackResponse<'a>,
    d: f64,
    k1_sq: f64,
    mode: KernelMode,
    k_max: f64,
    breakpoints: Vec<f64>,
}

impl<'a> KernelPlan<'a> {
    pub fn new(d: f64, omega: f64, stack: &'a LayerStack, mode: KernelMode) -> Result<Self> {
        check_positive("d", d)?;
        check_positive("omega", omega)?;
        let response = StackResponse::new(stack, omega)?;
        let k1_sq = vacuum_k1_sq(omega);

        let skin: Vec<f64> = stack
            .layers()
            .iter()
            .filter_map(|l| match l.model {
                PermittivityModel::Drude { skin_depth } => Some(skin_depth),
                _ => None,
            })
            .collect();
        let mut k_max = 30.0 / d;
        for &delta in &skin {
            k_max = k_max.max(20.0 / delta);
        }

        let mut breakpoints = vec![0.5 / d, 2.0 / d, 8.0 / d];
        for s in stack.length_scales() {
            breakpoints.push(1.0 / s);
        }
        if mode == KernelMode::Exact {
            breakpoints.push(k1_sq.sqrt());
        }
        breakpoints.retain(|&b| b > 0.0 && b < k_max);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();

        Ok(Self {
            response,
            d,
            k1_sq,
            mode,
            k_max,
            breakpoints,
        })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn omega(&self) -> f64 {
        self.response.omega()
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn weights(&self, k_par: f64) -> Result<RadialWeights> {
        let f = weyl_factors(k_par, self.d, self.k1_sq, self.mode)?;
        let r = self.response.reflection(k_par)?;
        let kp = f.pref * k_par;
        Ok(RadialWeights {
            zz: kp * r.te * (k_par * k_par) / (2.0 * PI),
            zx: I * kp * r.te * k_par * f.k1z / (2.0 * PI),
            te_t: -kp * r.te * f.k1z * f.k1z / (4.0 * PI),
            tm_t: kp * r.tm * f.k1_sq / (4.0 * PI),
        })
    }

    /// Bound on the part of any radial kernel integral beyond `k_max`, from
    /// |integrand| <= sup|r| K^2 e^{-2Kd} / (2 pi) and the incomplete gamma
    /// function Gamma(3, x) = e^{-x} (x^2 + 2x + 2). Beyond the largest
    /// inverse skin depth |r| decays monotonically (TE) or saturates (TM,
    /// which carries the extra factor k1^2/K^2), so twice the larger of two
    /// samples serves as sup|r|. The quasi-static TM part vanishes.
    pub fn tail_bound(&self) -> Result<f64> {
        let tm_weight = match self.mode {
            KernelMode::QuasiStatic => 0.0,
            KernelMode::Exact => self.k1_sq / (self.k_max * self.k_max),
        };
        let mut sup_r: f64 = 0.0;
        for k in [self.k_max, 2.0 * self.k_max] {
            let r = self.response.reflection(k)?;
            sup_r = sup_r.max(2.0 * r.te.norm()).max(2.0 * tm_weight * r.tm.norm());
        }
        let x = 2.0 * self.d * self.k_max;
        let gamma3 = (-x).exp() * (x * x + 2.0 * x + 2.0);
        Ok(2.0 * sup_r * gamma3 / (2.0 * PI * (2.0 * self.d).powi(3)))
    }

    /// Integrate `f(K, weights)` over K in (0, infinity). Errors inside the
    /// integrand (singular denominators) abort the integration.
    pub fn integrate<V, F>(&self, f: F, tol: &ToleranceSpec) -> Result<(V, QuadratureReport)>
    where
        V: QuadValue,
        F: Fn(f64, &RadialWeights) -> V,
    {
        let failure = std::cell::RefCell::new(None);
        let integrand = |k: f64| -> V {
            match self.weights(k) {
                Ok(w) => f(k, &w),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    V::zero()
                }
            }
        };
        let q = integrate_with_breakpoints(
            integrand,
            Interval::new(0.0, self.k_max)?,
            &self.breakpoints,
            tol,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let tail = self.tail_bound()?;
        let mut report = q.report;
        report.abs_error += tail;
        let norm = q.value.norm();
        report.rel_error = if norm > 0.0 { report.abs_error / norm } else { report.abs_error };
        if tail > tol.abs.max(tol.rel * norm) {
            report.converged = false;
        }
        if !report.converged {
            return Err(Error::Quadrature {
                partial: norm,
                report,
            });
        }
        Ok((q.value, report))
    }

    /// The kernel at separation `l` along `axis`.
    pub fn kernel(&self, l: f64, axis: SeparationAxis, tol: &ToleranceSpec) -> Result<(MagneticKernel, QuadratureReport)> {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::domain(format!("separation must be >= 0 (got {l})")));
        }
        let (c, report) = self.integrate(|k, w| w.components(bessel_j012(k * l)), tol)?;
        let (te, tm) = assemble(c, axis);
        Ok((
            MagneticKernel {
                l,
                d: self.d,
                omega: self.omega(),
                mode: self.mode,
                axis,
                te,
                tm,
            },
            report,
        ))
    }
}

/// H(l, d, omega) for separation along x.
pub fn magnetic_kernel(
    l: f64,
    d: f64,
    omega: f64,
    stack: &LayerStack,
    tol: &ToleranceSpec,
    mode: KernelMode,
) -> Result<(MagneticKernel, QuadratureReport)> {
    KernelPlan::new(d, omega, stack, mode)?.kernel(l, SeparationAxis::X, tol)
}

/// Resolution of the tensor-product oracle grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceGrid {
    /// Gauss–Legendre points per panel and axis.
    pub order: usize,
    /// Panels per unit of 1/d in the uniform region.
    pub panels_per_inverse_d: f64,
    /// Half-width of the (k_x, k_y) square in units of 1/d.
    pub extent: f64,
    /// Graded panels towards K = 0 end at this multiple of the smallest
    /// inverse length scale.
    pub grading_floor: f64,
}

impl Default for BruteForceGrid {
    fn default() -> Self {
        Self {
            order: 16,
            panels_per_inverse_d: 2.0,
            extent: 18.0,
            grading_floor: 1e-3,
        }
    }
}

impl BruteForceGrid {
    /// Every panel count doubled.
    pub fn refined(self) -> Self {
        Self {
            panels_per_inverse_d: 2.0 * self.panels_per_inverse_d,
            grading_floor: 0.5 * self.grading_floor,
            ..self
        }
    }

    /// Nodes and weights on [0, extent/d].
    fn half_axis(&self, d: f64, stack: &LayerStack) -> (Vec<f64>, Vec<f64>) {
        let (gx, gw) = gauss_legendre(self.order);
        let inner = 0.5 / d;
        let mut smallest = 1.0 / d;
        for s in stack.length_scales() {
            smallest = smallest.min(1.0 / s);
        }
        let floor = self.grading_floor * smallest;

        let mut edges = vec![0.0];
        let mut e = floor.min(inner);
        let mut graded = Vec::new();
        while e < inner {
            graded.push(e);
            e *= 2.0;
        }
        edges.extend(graded);
        let n_uniform = ((self.extent - 0.5) * self.panels_per_inverse_d).ceil().max(1.0) as usize;
        let width = (self.extent / d - inner) / n_uniform as f64;
        for i in 0..=n_uniform {
            edges.push(inner + i as f64 * width);
        }

        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, wt) in gx.iter().zip(&gw) {
                nodes.push(m + h * x);
                weights.push(h * wt);
            }
        }
        (nodes, weights)
    }
}

/// Direct tensor-product quadrature of the Weyl integral over (k_x, k_y),
/// independent of the azimuthal reduction. `l` is the signed separation
/// along x. Quadratic in grid size; meant for tests and verification.
pub fn brute_force_kernel(
    l: f64,
    d: f64,
    omega: f64,
    stack: &LayerStack,
    grid: &BruteForceGrid,
    mode: KernelMode,
) -> Result<Tensor3> {
    check_positive("d", d)?;
    if !l.is_finite() {
        return Err(Error::domain("separation must be finite"));
    }
    let response = StackResponse::new(stack, omega)?;
    let k1_sq = vacuum_k1_sq(omega);
    let (half_nodes, half_weights) = grid.half_axis(d, stack);
    let mut nodes: Vec<f64> = half_nodes.iter().rev().map(|x| -x).collect();
    nodes.extend(&half_nodes);
    let mut weights: Vec<f64> = half_weights.iter().rev().copied().collect();
    weights.extend(&half_weights);

    let mut acc = zero_tensor();
    for (&kx, &wx) in nodes.iter().zip(&weights) {
        let phase = (I * kx * l).exp();
        let mut row = zero_tensor();
        for (&ky, &wy) in nodes.iter().zip(&weights) {
            let k_par = kx.hypot(ky);
            let phi = ky.atan2(kx);
            let f = weyl_factors(k_par, d, k1_sq, mode)?;
            let (te, tm) = weyl_integrand_split(k_par, phi, &f, response.reflection(k_par)?);
            for i in 0..3 {
                for j in 0..3 {
                    row[i][j] += (te[i][j] + tm[i][j]) * wy;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                acc[i][j] += row[i][j] * phase * wx;
            }
        }
    }
    let norm = 1.0 / (4.0 * PI * PI);
    Ok(acc.map(|r| r.map(|v| v * norm)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layered_media::PermittivityModel;
    use proptest::prelude::*;

    const OMEGA: f64 = 2.0 * PI * 560e3;

    fn half_space(delta: f64) -> LayerStack {
        LayerStack::half_space(PermittivityModel::drude(delta).unwrap())
    }

    #[test]
    fn reflection_examples() {
        let stack = half_space(110e-6);
        let r = reflection_components(1e5, PI / 2.0, OMEGA, 5e-6, 7e-6, &stack).unwrap().total();
        assert!(r[0][2].norm() < 1e-15 * max_norm(&r));
        assert!(r[0][1].norm() < 1e-15 * max_norm(&r));
        let r = reflection_components(1e5, PI / 4.0, OMEGA, 5e-6, 5e-6, &stack).unwrap().total();
        assert!((r[0][0] - r[1][1]).norm() < 1e-12 * max_norm(&r));
        let r = reflection_components(1e5, 0.3, OMEGA, 5e-6, 5e-6, &LayerStack::vacuum()).unwrap().total();
        assert_eq!(max_norm(&r), 0.0);
    }

    #[test]
    fn reflection_is_transverse_and_reciprocal() {
        // Moderate K/k1 keeps the TM products well conditioned.
        let omega = 2.0 * PI * 1e9;
        let k1 = omega / C_LIGHT;
        let stack = LayerStack::half_space(PermittivityModel::Constant(Complex64::new(4.0, 1.0)));
        for (kf, phi) in [(0.3, 0.4), (2.0, 2.0), (5.0, -1.1)] {
            let k = kf * k1;
            let r = reflection_components(k, phi, omega, 0.02, 0.03, &stack).unwrap().total();
            let kz = exact_k1z(k1 * k1, k);
            let up = [Complex64::new(k * phi.cos(), 0.0), Complex64::new(k * phi.sin(), 0.0), kz];
            let down = [up[0], up[1], -kz];
            for j in 0..3 {
                let row: Complex64 = (0..3).map(|i| up[i] * r[i][j]).sum();
                let col: Complex64 = (0..3).map(|i| r[j][i] * down[i]).sum();
                assert!(row.norm() < 1e-12 * k * max_norm(&r), "k . R = {row}");
                assert!(col.norm() < 1e-12 * k * max_norm(&r), "R . k' = {col}");
            }
            let rev = reflection_components(k, phi + PI, omega, 0.03, 0.02, &stack).unwrap().total();
            assert!(relative_deviation(&transpose(&rev), &r) < 1e-12);
        }
    }

    #[test]
    fn vacuum_kernel_vanishes() {
        let h = magnetic_weyl_integrand(1e5, 0.2, OMEGA, 5e-6, &LayerStack::vacuum(), KernelMode::QuasiStatic).unwrap();
        assert_eq!(max_norm(&h), 0.0);
        let (k, _) = magnetic_kernel(3e-6, 5e-6, OMEGA, &LayerStack::vacuum(), &ToleranceSpec::default(), KernelMode::QuasiStatic).unwrap();
        assert_eq!(max_norm(&k.total()), 0.0);
        let b = brute_force_kernel(0.0, 5e-6, OMEGA, &LayerStack::vacuum(), &BruteForceGrid { order: 4, ..Default::default() }, KernelMode::QuasiStatic).unwrap();
        assert_eq!(max_norm(&b), 0.0);
    }

    #[test]
    fn quasi_static_integrand_matches_exact_deep_in_near_field() {
        let stack = half_space(110e-6);
        let k1 = OMEGA / C_LIGHT;
        for k in [1e3, 1e5, 1e6] {
            assert!(k > 1e4 * k1);
            let a = magnetic_weyl_integrand(k, 0.7, OMEGA, 10e-6, &stack, KernelMode::QuasiStatic).unwrap();
            let b = magnetic_weyl_integrand(k, 0.7, OMEGA, 10e-6, &stack, KernelMode::Exact).unwrap();
            assert!(relative_deviation(&a, &b) < 1e-8);
        }
    }

    #[test]
    fn coincident_kernel_is_diagonal_and_tm_free_when_quasi_static() {
        let stack = half_space(110e-6);
        let (k, report) = magnetic_kernel(0.0, 10e-6, OMEGA, &stack, &ToleranceSpec::default(), KernelMode::QuasiStatic).unwrap();
        assert!(report.converged && report.rel_error <= 1e-8);
        let h = k.total();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(h[i][j], ZERO);
                }
            }
        }
        assert_eq!(k.tm_fraction(), 0.0);
        // H_zz = 2 H_xx = 2 H_yy at l = 0 (TE only, isotropic in plane).
        assert!((h[2][2] - 2.0 * h[0][0]).norm() < 1e-12 * h[2][2].norm());
        assert!((h[0][0] - h[1][1]).norm() < 1e-12 * h[2][2].norm());
        assert!(h[2][2].im > 0.0);
    }

    #[test]
    fn exact_mode_reports_small_tm_share() {
        let stack = half_space(110e-6);
        let (k, _) = magnetic_kernel(0.0, 10e-6, OMEGA, &stack, &ToleranceSpec::relative(1e-7), KernelMode::Exact).unwrap();
        let f = k.tm_fraction();
        assert!(f > 0.0 && f < 1e-10, "TM fraction {f}");
    }

    #[test]
    fn y_axis_is_rotated_x_axis() {
        let stack = half_space(60e-6);
        let plan = KernelPlan::new(10e-6, OMEGA, &stack, KernelMode::QuasiStatic).unwrap();
        let tol = ToleranceSpec::relative(1e-10);
        let (x, _) = plan.kernel(7e-6, SeparationAxis::X, &tol).unwrap();
        let (y, _) = plan.kernel(7e-6, SeparationAxis::Y, &tol).unwrap();
        let (hx, hy) = (x.total(), y.total());
        assert_eq!(hy[1][1], hx[0][0]);
        assert_eq!(hy[0][0], hx[1][1]);
        assert_eq!(hy[2][1], hx[2][0]);
        assert_eq!(hy[1][2], hx[0][2]);
        assert_eq!(hy[2][2], hx[2][2]);
    }

    #[test]
    fn tail_beyond_cutoff_is_negligible() {
        let stack = half_space(110e-6);
        let plan = KernelPlan::new(5e-6, OMEGA, &stack, KernelMode::QuasiStatic).unwrap();
        let (k, _) = plan.kernel(0.0, SeparationAxis::X, &ToleranceSpec::default()).unwrap();
        assert!(plan.tail_bound().unwrap() < 1e-15 * max_norm(&k.total()));
    }

    #[test]
    fn rejects_bad_geometry() {
        let stack = half_space(110e-6);
        let tol = ToleranceSpec::default();
        assert!(magnetic_kernel(-1e-6, 5e-6, OMEGA, &stack, &tol, KernelMode::QuasiStatic).is_err());
        assert!(magnetic_kernel(1e-6, 0.0, OMEGA, &stack, &tol, KernelMode::QuasiStatic).is_err());
        assert!(reflection_components(1e5, 0.0, OMEGA, -1.0, 1.0, &stack).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn coincident_im_kernel_positive(
            d in 1e-6f64..100e-6,
            delta in 5e-6f64..500e-6,
            f in 1e5f64..1e7,
            sy in (-1.0f64..1.0, -1.0f64..1.0),
            sz in (-1.0f64..1.0, -1.0f64..1.0),
            sx in (-1.0f64..1.0, -1.0f64..1.0),
        ) {
            let omega = 2.0 * PI * f;
            let (k, _) = magnetic_kernel(0.0, d, omega, &half_space(delta), &ToleranceSpec::relative(1e-8), KernelMode::QuasiStatic).unwrap();
            let im = k.imag();
            let s = [Complex64::new(sx.0, sx.1), Complex64::new(sy.0, sy.1), Complex64::new(sz.0, sz.1)];
            let mut c = ZERO;
            for q in 0..3 {
                for p in 0..3 {
                    c += s[q].conj() * im[q][p] * s[p];
                }
            }
            prop_assert!(c.re >= 0.0);
            prop_assert!(c.im.abs() <= 1e-12 * c.re.abs().max(f64::MIN_POSITIVE));
        }
    }
}
