//! Built-in self-checks: oracles, identities and known limits, run at a
//! chosen relative tolerance.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use spinflip_core::atomics::SpinVector;
use spinflip_core::green_kernel::{
    brute_force_kernel, magnetic_kernel, relative_deviation, BruteForceGrid, KernelMode, KernelPlan,
};
use spinflip_core::layered_media::{
    fresnel_te, fresnel_tm_with, normal_wavenumber, three_layer_fresnel, LayerStack, PermittivityModel,
    StackResponse, TmDenominator,
};
use spinflip_core::numerics::ToleranceSpec;
use spinflip_core::rates_coherence::{fit_asymptotic_exponent, Engine};

use crate::error::{CliError, Result};

const UM: f64 = 1e-6;
const C_LIGHT: f64 = 299_792_458.0;

/// Deliberate defects for checking that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign in the TM Fresnel denominator.
    TmSign,
}

impl Fault {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "tm-sign" => Ok(Self::TmSign),
            other => Err(CliError::config(format!("unknown fault `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tolerance: f64,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag}  {} ({:.2} s): {}\n", c.name, c.seconds, c.detail));
        }
        let failed = self.failed();
        out.push_str(&format!(
            "{} of {} checks passed at rel_tol {:e}\n",
            self.checks.len() - failed.len(),
            self.checks.len(),
            self.tolerance
        ));
        out
    }

    /// Exit status of the whole suite.
    pub fn status(&self) -> Result<()> {
        let failed = self.failed();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(CliError::Verification(format!(
                "{} of {} checks failed: {}",
                failed.len(),
                self.checks.len(),
                failed.join(", ")
            )))
        }
    }
}

type Outcome = std::result::Result<(bool, String), spinflip_core::Error>;

struct Suite {
    tol: f64,
    sign: TmDenominator,
    omega: f64,
}

fn metal(delta: f64) -> spinflip_core::Result<LayerStack> {
    Ok(LayerStack::half_space(PermittivityModel::drude(delta)?))
}

fn film(h: f64, delta: f64) -> spinflip_core::Result<LayerStack> {
    LayerStack::film_on_substrate(
        PermittivityModel::drude(delta)?,
        h,
        PermittivityModel::constant(Complex64::new(3.9, 0.0))?,
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

impl Suite {
    fn engine(&self) -> Engine {
        Engine::default().with_tolerance(self.tol)
    }

    fn tm(&self, omega: f64, k: f64, a: Complex64, b: Complex64) -> spinflip_core::Result<Complex64> {
        fresnel_tm_with(omega, k, a, b, self.sign)
    }

    fn single_interface(&self) -> Outcome {
        let one = Complex64::new(1.0, 0.0);
        let four = Complex64::new(4.0, 0.0);
        let te = fresnel_te(self.omega, 0.0, one, four)?;
        let tm = self.tm(self.omega, 0.0, one, four)?;
        let dev = (te + 1.0 / 3.0).norm().max((tm - 1.0 / 3.0).norm());
        Ok((dev <= 1e-12, format!("normal incidence 1 -> 4: r_TE = {te:.6}, r_TM = {tm:.6}")))
    }

    fn zero_thickness(&self) -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_0001);
        let eps1 = Complex64::new(1.0, 0.0);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let omega = 2.0 * PI * 10f64.powf(rng.gen_range(5.0..10.0));
            let k1 = omega / C_LIGHT;
            let eps2 = Complex64::new(10f64.powf(rng.gen_range(-0.5..2.0)), rng.gen_range(0.0..5.0));
            let eps3 = Complex64::new(10f64.powf(rng.gen_range(-0.5..2.0)), rng.gen_range(0.0..5.0));
            let k = k1 * rng.gen_range(0.0..20.0);
            let k2z = normal_wavenumber(omega, k, eps2);
            for tm in [false, true] {
                let f = |a, b| if tm { self.tm(omega, k, a, b) } else { fresnel_te(omega, k, a, b) };
                let composite = three_layer_fresnel(f(eps1, eps2)?, f(eps2, eps1)?, f(eps2, eps3)?, k2z, 0.0)?;
                let direct = f(eps1, eps3)?;
                worst = worst.max((composite - direct).norm() / direct.norm());
            }
        }
        Ok((worst <= 1e-12, format!("h = 0 film vs direct interface, 200 random cases: worst {worst:.2e}")))
    }

    fn thick_film(&self) -> Outcome {
        let mut worst: f64 = 0.0;
        for delta in [10e-6, 110e-6, 1e-3] {
            let (thick, bulk) = (film(10.0 * delta, delta)?, metal(delta)?);
            let a = StackResponse::new(&thick, self.omega)?;
            let b = StackResponse::new(&bulk, self.omega)?;
            for j in 0..50 {
                let k = 10f64.powf(-2.0 + 4.0 * j as f64 / 49.0) / delta;
                let (ra, rb) = (a.reflection_with(k, self.sign)?, b.reflection_with(k, self.sign)?);
                worst = worst
                    .max((ra.te - rb.te).norm() / rb.te.norm())
                    .max((ra.tm - rb.tm).norm() / rb.tm.norm());
            }
        }
        Ok((worst <= 1e-6, format!("h = 10 delta vs half-space: worst {worst:.2e}")))
    }

    fn radial_vs_grid(&self) -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_0002);
        let bound = (10.0 * self.tol).max(1e-6);
        let mut worst: f64 = 0.0;
        for _ in 0..4 {
            let d = rng.gen_range(1e-6..100e-6);
            let l = rng.gen_range(0.0..5.0) * d;
            let stack = metal(rng.gen_range(10e-6..200e-6))?;
            let omega = 2.0 * PI * rng.gen_range(0.1e6..10e6);
            let (k, _) = magnetic_kernel(l, d, omega, &stack, &ToleranceSpec::relative(self.tol), KernelMode::QuasiStatic)?;
            let brute = brute_force_kernel(l, d, omega, &stack, &BruteForceGrid::default(), KernelMode::QuasiStatic)?;
            worst = worst.max(relative_deviation(&k.total(), &brute));
        }
        Ok((worst <= bound, format!("4 random sets: worst {worst:.2e} (bound {bound:.0e})")))
    }

    fn closed_form(&self) -> Outcome {
        let e = self.engine();
        let stack = metal(110e-6)?;
        let bound = (100.0 * self.tol).max(1e-5);
        let mut worst: f64 = 0.0;
        for d in [5.0, 10.0, 20.0] {
            let closed = e.gamma12_closed_form(d * UM, self.omega, &stack)?.0;
            let general = e.gamma_general(d * UM, self.omega, &stack, &SpinVector::rb87_trapped())?.0;
            worst = worst.max(rel(general, closed));
        }
        Ok((worst <= bound, format!("d = 5, 10, 20 um: worst {worst:.2e} (bound {bound:.0e})")))
    }

    fn moment_identity(&self) -> Outcome {
        let stack = metal(110e-6)?;
        let tol = ToleranceSpec::relative(self.tol.min(1e-12));
        let moment = |d: f64, power: i32| -> spinflip_core::Result<f64> {
            let plan = KernelPlan::new(d, self.omega, &stack, KernelMode::QuasiStatic)?;
            Ok(plan.integrate(|k, w| w.zz.im * k.powi(power), &tol)?.0)
        };
        let d = 10e-6;
        let h = d / 50.0;
        let f = |x| moment(x, 0);
        let second = (-f(d + 2.0 * h)? + 16.0 * f(d + h)? - 30.0 * f(d)? + 16.0 * f(d - h)? - f(d - 2.0 * h)?) / (12.0 * h * h);
        let dev = rel(0.25 * second, moment(d, 2)?);
        Ok((dev <= 1e-5, format!("K^2 moment vs d^2/4 dd^2 at d = 10 um: {dev:.2e}")))
    }

    fn slopes(&self) -> Outcome {
        let e = self.engine();
        let exponent = |stack: &LayerStack, ds: &[f64]| -> spinflip_core::Result<f64> {
            let ds: Vec<f64> = ds.iter().map(|d| d * UM).collect();
            let gammas = ds
                .iter()
                .map(|&d| Ok(e.gamma12_closed_form(d, self.omega, stack)?.0))
                .collect::<spinflip_core::Result<Vec<_>>>()?;
            Ok(fit_asymptotic_exponent(&ds, &gammas)?.exponent)
        };
        let thick = exponent(&metal(1e-3)?, &[2.0, 4.0, 6.0, 8.0, 10.0])?;
        let thin = exponent(&film(1e-6, 110e-6)?, &[10.0, 20.0, 30.0, 40.0, 50.0])?;
        let ok = (thick - 1.0).abs() <= 0.05 && (thin - 2.0).abs() <= 0.05;
        Ok((ok, format!("thick metal n = {thick:.3} (1), thin film n = {thin:.3} (2)")))
    }

    fn coherence_limits(&self) -> Outcome {
        let e = self.engine();
        let stack = metal(110e-6)?;
        let spin = SpinVector::rb87_trapped();
        let d = 10e-6;
        let s0 = e.coherence_s(0.0, d, self.omega, &stack, &spin)?;
        let s_far = e.coherence_s(10.0 * d, d, self.omega, &stack, &spin)?;
        let ok = s0 == 1.0 && s_far.abs() < 1.0 && s_far < s0;
        Ok((ok, format!("S(0) = {s0}, S(10 d) = {s_far:.4}")))
    }
}

type CheckFn = fn(&Suite) -> Outcome;

const CHECKS: [(&str, CheckFn); 8] = [
    ("fresnel single interface", Suite::single_interface),
    ("fresnel zero-thickness film", Suite::zero_thickness),
    ("fresnel thick film", Suite::thick_film),
    ("kernel radial vs 2D grid", Suite::radial_vs_grid),
    ("rate closed form vs general", Suite::closed_form),
    ("kernel K^2 moment identity", Suite::moment_identity),
    ("rate asymptotic exponents", Suite::slopes),
    ("coherence limits", Suite::coherence_limits),
];

pub fn run(tol: f64, fault: Option<Fault>) -> Result<Report> {
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(CliError::config(format!("--tol must lie in (0, 1e-2] (got {tol})")));
    }
    let suite = Suite {
        tol,
        sign: match fault {
            Some(Fault::TmSign) => TmDenominator::Minus,
            None => TmDenominator::Plus,
        },
        omega: 2.0 * PI * 560e3,
    };
    let checks = CHECKS
        .iter()
        .map(|&(name, f)| {
            let start = Instant::now();
            let (passed, detail) = match f(&suite) {
                Ok(v) => v,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckResult {
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    Ok(Report { tolerance: tol, checks })
}
