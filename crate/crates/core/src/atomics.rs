//! Physical constants, the two-level spin transition and thermal photon
//! statistics.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fundamental constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Bohr magneton, J/T.
    pub mu_b: f64,
    /// Electron g-factor magnitude.
    pub g_s: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Vacuum permittivity, F/m.
    pub eps0: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

impl PhysicalConstants {
    /// CODATA 2018 recommended values.
    pub const CODATA_2018: Self = Self {
        mu_b: 9.274_010_078_3e-24,
        g_s: 2.002_319_304_362_56,
        hbar: 1.054_571_817e-34,
        eps0: 8.854_187_812_8e-12,
        c: 299_792_458.0,
        k_b: 1.380_649e-23,
    };

    /// (mu_B g_S)^2 / (c^2 eps0 hbar): converts a spin-contracted magnetic
    /// Green-tensor element (1/m^3) into an angular frequency.
    pub fn magnetic_coupling(&self) -> f64 {
        let m = self.mu_b * self.g_s;
        m * m / (self.c * self.c * self.eps0 * self.hbar)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

/// Spin matrix elements <i|S_q|f>, q = x, y, z, in units of hbar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinVector(pub [Complex64; 3]);

impl SpinVector {
    pub fn new(x: Complex64, y: Complex64, z: Complex64) -> Self {
        Self([x, y, z])
    }

    /// 87Rb |2,2> -> |2,1> with the bias field along the surface x axis:
    /// (0, i/4, 1/4) in the surface frame.
    pub fn rb87_trapped() -> Self {
        Self([
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.25),
            Complex64::new(0.25, 0.0),
        ])
    }

    pub fn zero() -> Self {
        Self([Complex64::new(0.0, 0.0); 3])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.map(|c| c * s))
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|c| c.conj()))
    }

    /// Rotate elements computed with the quantization axis as z into the
    /// surface frame where the bias field lies along the surface x axis
    /// (spin x -> surface y, spin y -> surface z, spin z -> surface x).
    pub fn spin_frame_to_surface(&self) -> Self {
        let [sx, sy, sz] = self.0;
        Self([sz, sx, sy])
    }

    /// sum_{q,k} conj(s_q) M_{qk} s_k for a real 3x3 matrix.
    pub fn contract_real(&self, m: &[[f64; 3]; 3]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for q in 0..3 {
            for k in 0..3 {
                acc += self.0[q].conj() * m[q][k] * self.0[k];
            }
        }
        acc
    }
}

/// The two-level spin transition driven by the fluctuating field.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomTransition {
    omega_a: f64,
    spin_elements: SpinVector,
    pub label: String,
}

impl AtomTransition {
    pub fn new(omega_a: f64, spin_elements: SpinVector, label: impl Into<String>) -> Result<Self> {
        if !(omega_a > 0.0) || !omega_a.is_finite() {
            return Err(Error::domain(format!(
                "transition frequency must be positive (got {omega_a} rad/s)"
            )));
        }
        if spin_elements.is_zero() {
            return Err(Error::domain("spin matrix elements are all zero"));
        }
        Ok(Self {
            omega_a,
            spin_elements,
            label: label.into(),
        })
    }

    /// Transition at frequency `f_hz` with the default 87Rb elements.
    pub fn rb87(f_hz: f64) -> Result<Self> {
        Self::new(
            2.0 * std::f64::consts::PI * f_hz,
            SpinVector::rb87_trapped(),
            "87Rb |2,2> -> |2,1>",
        )
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn spin_elements(&self) -> &SpinVector {
        &self.spin_elements
    }
}

/// Bias magnetic field at the trap centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapField {
    b0: f64,
}

impl TrapField {
    pub fn new(b0: f64) -> Result<Self> {
        if !(b0 >= 0.0) || !b0.is_finite() {
            return Err(Error::domain(format!("bias field must be >= 0 (got {b0} T)")));
        }
        Ok(Self { b0 })
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }
}

/// Zeeman splitting omega_L = g_S mu_B B0 / hbar.
pub fn larmor_frequency(field: TrapField, constants: &PhysicalConstants) -> f64 {
    constants.g_s * constants.mu_b * field.b0() / constants.hbar
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalState {
    pub temperature: f64,
    pub n_bar: f64,
}

impl ThermalState {
    pub fn new(omega: f64, temperature: f64, constants: &PhysicalConstants) -> Result<Self> {
        let n_bar = thermal_photon_number(omega, temperature, constants)?;
        Ok(Self { temperature, n_bar })
    }
}

/// Bose occupation 1 / (exp(hbar omega / k_B T) - 1); exactly 0 at T = 0.
pub fn thermal_photon_number(omega: f64, temperature: f64, constants: &PhysicalConstants) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::domain(format!(
            "photon number needs omega > 0 (got {omega} rad/s)"
        )));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::domain(format!(
            "temperature must be >= 0 (got {temperature} K)"
        )));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = constants.hbar * omega / (constants.k_b * temperature);
    Ok(1.0 / x.exp_m1())
}

// ---------------------------------------------------------------------------
// Clebsch-Gordan coefficients and hyperfine spin matrix elements.
//
// Angular momenta are handled as doubled integers (2j, 2m) so half-integers
// are exact.

fn doubled(v: f64, what: &str) -> Result<i32> {
    let d = 2.0 * v;
    if !v.is_finite() || (d - d.round()).abs() > 1e-9 || d.abs() > 200.0 {
        return Err(Error::domain(format!("{what} = {v} is not a half-integer")));
    }
    Ok(d.round() as i32)
}

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// <j1 m1; j2 m2 | J M> in the Condon-Shortley convention, all arguments doubled.
pub(crate) fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if j < (j1 - j2).abs() || j > j1 + j2 || (j1 + j2 + j) % 2 != 0 {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j + m) % 2 != 0 {
        return 0.0;
    }
    // Undoubled integer combinations.
    let h = |x: i32| x / 2;
    let a = h(j + j1 - j2);
    let b = h(j - j1 + j2);
    let c = h(j1 + j2 - j);
    let d = h(j1 + j2 + j) + 1;
    let pre = ((j + 1) as f64 * factorial(a) * factorial(b) * factorial(c) / factorial(d)).sqrt()
        * (factorial(h(j + m))
            * factorial(h(j - m))
            * factorial(h(j1 - m1))
            * factorial(h(j1 + m1))
            * factorial(h(j2 - m2))
            * factorial(h(j2 + m2)))
        .sqrt();
    let mut sum = 0.0;
    for k in 0..=c {
        let t = [
            c - k,
            h(j1 - m1) - k,
            h(j2 + m2) - k,
            h(j - j2 + m1) + k,
            h(j - j1 - m2) + k,
        ];
        if t.iter().any(|&x| x < 0) {
            continue;
        }
        let denom = factorial(k) * t.iter().map(|&x| factorial(x)).product::<f64>();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
    }
    pre * sum
}

/// Hyperfine state |F, m_F> of an electron spin `s` coupled to a nuclear spin `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperfineState {
    pub f: f64,
    pub m_f: f64,
}

impl HyperfineState {
    pub fn new(f: f64, m_f: f64) -> Self {
        Self { f, m_f }
    }
}

/// Expansion coefficients of |F, m_F> over the product basis |m_S, m_I>,
/// as (2 m_S, 2 m_I, coefficient).
fn product_expansion(state: HyperfineState, s: i32, i: i32) -> Result<Vec<(i32, i32, f64)>> {
    let f = doubled(state.f, "F")?;
    let m = doubled(state.m_f, "m_F")?;
    if f < (s - i).abs() || f > s + i || (f + s + i) % 2 != 0 {
        return Err(Error::domain(format!(
            "F = {} cannot be formed from S = {} and I = {}",
            state.f,
            s as f64 / 2.0,
            i as f64 / 2.0
        )));
    }
    if m.abs() > f || (f + m) % 2 != 0 {
        return Err(Error::domain(format!(
            "m_F = {} is not a projection of F = {}",
            state.m_f, state.f
        )));
    }
    let mut terms = Vec::new();
    for ms in (-s..=s).step_by(2) {
        let mi = m - ms;
        if mi.abs() > i {
            continue;
        }
        let c = clebsch_gordan(s, ms, i, mi, f, m);
        if c != 0.0 {
            terms.push((ms, mi, c));
        }
    }
    Ok(terms)
}

/// <m_S'| S_q |m_S> for q = x, y, z (doubled projections).
fn spin_operator(s: i32, ms_bra: i32, ms_ket: i32) -> [Complex64; 3] {
    let sf = s as f64 / 2.0;
    let mk = ms_ket as f64 / 2.0;
    let zero = Complex64::new(0.0, 0.0);
    let mut out = [zero; 3];
    if ms_bra == ms_ket {
        out[2] = Complex64::new(mk, 0.0);
    } else if ms_bra == ms_ket + 2 {
        // S_+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>
        let up = (sf * (sf + 1.0) - mk * (mk + 1.0)).sqrt();
        out[0] = Complex64::new(0.5 * up, 0.0);
        out[1] = Complex64::new(0.0, -0.5 * up);
    } else if ms_bra + 2 == ms_ket {
        let down = (sf * (sf + 1.0) - mk * (mk - 1.0)).sqrt();
        out[0] = Complex64::new(0.5 * down, 0.0);
        out[1] = Complex64::new(0.0, 0.5 * down);
    }
    out
}

/// <initial| S_{x,y,z} |final> for the electron spin `s` in hyperfine states
/// built from `s` and nuclear spin `i`, with the quantization axis as z.
pub fn spin_matrix_elements(
    initial: HyperfineState,
    final_state: HyperfineState,
    s: f64,
    i: f64,
) -> Result<SpinVector> {
    let s2 = doubled(s, "S")?;
    let i2 = doubled(i, "I")?;
    if s2 <= 0 || i2 < 0 {
        return Err(Error::domain(format!("invalid spins S = {s}, I = {i}")));
    }
    let bra = product_expansion(initial, s2, i2)?;
    let ket = product_expansion(final_state, s2, i2)?;
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for &(ms_b, mi_b, cb) in &bra {
        for &(ms_k, mi_k, ck) in &ket {
            if mi_b != mi_k {
                continue;
            }
            let op = spin_operator(s2, ms_b, ms_k);
            for q in 0..3 {
                out[q] += cb * ck * op[q];
            }
        }
    }
    Ok(SpinVector(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: PhysicalConstants = PhysicalConstants::CODATA_2018;

    #[test]
    fn larmor_zero_and_linear() {
        assert_eq!(larmor_frequency(TrapField::new(0.0).unwrap(), &C), 0.0);
        let a = larmor_frequency(TrapField::new(1.3e-4).unwrap(), &C);
        let b = larmor_frequency(TrapField::new(2.6e-4).unwrap(), &C);
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn larmor_hand_evaluation() {
        // 2.00231930436256 * 9.2740100783e-24 * 2e-5 / 1.054571817e-34
        let expected = 3.521_719_262_602_5e6;
        let got = larmor_frequency(TrapField::new(2.0e-5).unwrap(), &C);
        assert!((got - expected).abs() / expected < 1e-6, "{got}");
        assert!(TrapField::new(-1.0).is_err());
    }

    #[test]
    fn photon_number_limits() {
        let w = 2.0 * std::f64::consts::PI * 560e3;
        assert_eq!(thermal_photon_number(w, 0.0, &C).unwrap(), 0.0);
        let t_ln2 = C.hbar * w / (C.k_b * std::f64::consts::LN_2);
        let n = thermal_photon_number(w, t_ln2, &C).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(thermal_photon_number(0.0, 300.0, &C).is_err());
        assert!(thermal_photon_number(-w, 300.0, &C).is_err());
        assert!(thermal_photon_number(w, -1.0, &C).is_err());
    }

    #[test]
    fn photon_number_high_temperature() {
        let w = 1.0e6;
        let t = 1e4 * C.hbar * w / C.k_b;
        let direct = 1.0 / ((C.hbar * w / (C.k_b * t)).exp() - 1.0);
        let series = C.k_b * t / (C.hbar * w);
        let n = thermal_photon_number(w, t, &C).unwrap();
        assert!((n - direct).abs() / direct < 1e-8);
        assert!((n - series).abs() / series < 1e-4);
    }

    #[test]
    fn photon_number_monotone() {
        let mut last = 0.0;
        for k in 1..50 {
            let n = thermal_photon_number(1e7, k as f64 * 7.0, &C).unwrap();
            assert!(n > last);
            last = n;
        }
        let mut last = f64::INFINITY;
        for k in 1..50 {
            let n = thermal_photon_number(k as f64 * 1e9, 4.2, &C).unwrap();
            assert!(n < last);
            last = n;
        }
    }

    #[test]
    fn clebsch_gordan_known_values() {
        // <1/2 1/2; 3/2 1/2 | 2 1> = sqrt(3)/2, <1/2 -1/2; 3/2 3/2 | 2 1> = 1/2
        assert!((clebsch_gordan(1, 1, 3, 1, 4, 2) - 0.75f64.sqrt()).abs() < 1e-14);
        assert!((clebsch_gordan(1, -1, 3, 3, 4, 2) - 0.5).abs() < 1e-14);
        // <1/2 1/2; 1/2 -1/2 | 0 0> = 1/sqrt(2), <1/2 -1/2; 1/2 1/2 | 0 0> = -1/sqrt(2)
        assert!((clebsch_gordan(1, 1, 1, -1, 0, 0) - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((clebsch_gordan(1, -1, 1, 1, 0, 0) + 0.5f64.sqrt()).abs() < 1e-14);
        assert_eq!(clebsch_gordan(1, 1, 3, 3, 4, 2), 0.0);
    }

    #[test]
    fn rb87_trapped_transition() {
        let v = spin_matrix_elements(
            HyperfineState::new(2.0, 2.0),
            HyperfineState::new(2.0, 1.0),
            0.5,
            1.5,
        )
        .unwrap();
        // Quantization-axis frame: transverse elements of magnitude 1/4.
        assert!((v.0[0].norm() - 0.25).abs() < 1e-14);
        assert!((v.0[1].norm() - 0.25).abs() < 1e-14);
        assert!(v.0[2].norm() < 1e-15);
        let surface = v.spin_frame_to_surface();
        assert!(surface.0[0].norm() < 1e-15);
        assert!((surface.0[1].norm() - 0.25).abs() < 1e-14);
        assert!((surface.0[2].norm() - 0.25).abs() < 1e-14);
        // Same up to a global phase as the stored default.
        let d = SpinVector::rb87_trapped();
        let overlap: Complex64 = (0..3).map(|q| d.0[q].conj() * surface.0[q]).sum();
        assert!((overlap.norm() - 0.125).abs() < 1e-14);
    }

    #[test]
    fn selection_rules() {
        let same = spin_matrix_elements(HyperfineState::new(2.0, 2.0), HyperfineState::new(2.0, 2.0), 0.5, 1.5)
            .unwrap();
        assert_eq!(same.0[0].norm(), 0.0);
        assert_eq!(same.0[1].norm(), 0.0);
        assert!((same.0[2].re - 0.5).abs() < 1e-14);
        let skip = spin_matrix_elements(HyperfineState::new(2.0, 2.0), HyperfineState::new(2.0, 0.0), 0.5, 1.5)
            .unwrap();
        assert!(skip.is_zero());
    }

    #[test]
    fn invalid_quantum_numbers() {
        let bad = [
            (HyperfineState::new(3.0, 2.0), HyperfineState::new(2.0, 1.0)),
            (HyperfineState::new(2.0, 2.5), HyperfineState::new(2.0, 1.0)),
            (HyperfineState::new(2.0, 3.0), HyperfineState::new(2.0, 1.0)),
            (HyperfineState::new(2.0, 0.3), HyperfineState::new(2.0, 1.0)),
        ];
        for (i, f) in bad {
            assert!(spin_matrix_elements(i, f, 0.5, 1.5).is_err(), "{i:?} {f:?}");
        }
    }

    fn manifold(s: f64, i: f64) -> Vec<HyperfineState> {
        let mut states = Vec::new();
        let mut f = (s - i).abs();
        while f <= s + i + 1e-9 {
            let mut m = -f;
            while m <= f + 1e-9 {
                states.push(HyperfineState::new(f, m));
                m += 1.0;
            }
            f += 1.0;
        }
        states
    }

    #[test]
    fn hermiticity_and_sum_rule() {
        for (s, i) in [(0.5, 1.5), (0.5, 2.5), (0.5, 1.0), (0.5, 0.5)] {
            let states = manifold(s, i);
            for a in &states {
                let mut total = 0.0;
                for b in &states {
                    let ab = spin_matrix_elements(*a, *b, s, i).unwrap();
                    let ba = spin_matrix_elements(*b, *a, s, i).unwrap();
                    for q in 0..3 {
                        assert!((ab.0[q] - ba.0[q].conj()).norm() < 1e-14);
                        total += ab.0[q].norm_sqr();
                    }
                }
                assert!((total - 0.75).abs() < 1e-13, "S={s} I={i} {a:?}: {total}");
            }
        }
    }

    #[test]
    fn transition_invariants() {
        assert!(AtomTransition::new(0.0, SpinVector::rb87_trapped(), "x").is_err());
        assert!(AtomTransition::new(1.0, SpinVector::zero(), "x").is_err());
        let t = AtomTransition::rb87(560e3).unwrap();
        assert!((t.omega_a() - 2.0 * std::f64::consts::PI * 560e3).abs() < 1e-6);
    }
}
