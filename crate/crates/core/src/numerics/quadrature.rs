//! Globally adaptive Gauss–Kronrod quadrature.
//!
//! The integrator bisects the interval with the largest error estimate until
//! the summed estimate meets `max(abs, rel * |I|)`. Values may be scalars,
//! complex numbers or fixed-size arrays of either, so that several
//! components sharing an integration variable are integrated on one set of
//! nodes. Semi-infinite intervals are truncated where the supplied
//! exponential decay makes the remaining tail negligible; the tail bound is
//! added to the reported error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Kronrod abscissae of the 15-point rule on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Weights of the embedded 7-point Gauss rule (odd Kronrod nodes and centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Anything the integrator can accumulate.
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    /// Max-abs norm over all components.
    fn norm(&self) -> f64;

    fn sub(self, other: Self) -> Self {
        self.add(other.scale(-1.0))
    }
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
}

impl<T: QuadValue, const N: usize> QuadValue for [T; N] {
    fn zero() -> Self {
        [T::zero(); N]
    }
    fn add(mut self, other: Self) -> Self {
        for (a, b) in self.iter_mut().zip(other) {
            *a = a.add(b);
        }
        self
    }
    fn scale(mut self, s: f64) -> Self {
        for a in self.iter_mut() {
            *a = a.scale(s);
        }
        self
    }
    fn norm(&self) -> f64 {
        self.iter().map(QuadValue::norm).fold(0.0, f64::max)
    }
}

/// Integration range. `hi` may be `f64::INFINITY` when a decay rate is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Exponential decay rate of the integrand, required when `hi` is infinite.
    pub decay_rate: Option<f64>,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || hi.is_nan() {
            return Err(Error::domain(format!("invalid interval [{lo}, {hi}]")));
        }
        if hi.is_infinite() {
            return Err(Error::domain(
                "semi-infinite interval needs a decay rate (use Interval::semi_infinite)",
            ));
        }
        Ok(Self {
            lo,
            hi,
            decay_rate: None,
        })
    }

    pub fn semi_infinite(lo: f64, decay_rate: f64) -> Result<Self> {
        if !lo.is_finite() || !(decay_rate > 0.0) || !decay_rate.is_finite() {
            return Err(Error::domain(format!(
                "invalid semi-infinite interval from {lo} with decay rate {decay_rate}"
            )));
        }
        Ok(Self {
            lo,
            hi: f64::INFINITY,
            decay_rate: Some(decay_rate),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSpec {
    pub rel: f64,
    pub abs: f64,
    pub max_evals: usize,
}

impl ToleranceSpec {
    pub fn new(rel: f64, abs: f64, max_evals: usize) -> Result<Self> {
        if !(rel > 0.0 || abs > 0.0) || rel < 0.0 || abs < 0.0 || max_evals == 0 {
            return Err(Error::domain(format!(
                "invalid tolerance: rel = {rel}, abs = {abs}, max_evals = {max_evals}"
            )));
        }
        Ok(Self { rel, abs, max_evals })
    }

    pub fn relative(rel: f64) -> Self {
        Self {
            rel,
            abs: 0.0,
            max_evals: 2_000_000,
        }
    }
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self::relative(1e-8)
    }
}

/// Diagnostics attached to every quadrature result.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadratureReport {
    /// Estimated error relative to the magnitude of the result.
    pub rel_error: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub subdivisions: usize,
    pub converged: bool,
}

impl QuadratureReport {
    /// Combine reports of independent integrals whose results are used together.
    pub fn merge(self, other: Self) -> Self {
        Self {
            rel_error: self.rel_error.max(other.rel_error),
            abs_error: self.abs_error.max(other.abs_error),
            evaluations: self.evaluations + other.evaluations,
            subdivisions: self.subdivisions + other.subdivisions,
            converged: self.converged && other.converged,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature<V> {
    pub value: V,
    pub report: QuadratureReport,
}

impl<V: QuadValue> Quadrature<V> {
    /// Turn a non-converged result into [`Error::Quadrature`].
    pub fn into_result(self) -> Result<(V, QuadratureReport)> {
        if self.report.converged {
            Ok((self.value, self.report))
        } else {
            Err(Error::Quadrature {
                partial: self.value.norm(),
                report: self.report,
            })
        }
    }
}

struct Segment<V> {
    lo: f64,
    hi: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

/// One 15-point Kronrod panel with the QUADPACK error rescaling.
fn kronrod_panel<V, F>(f: &F, lo: f64, hi: f64) -> Segment<V>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let f_centre = f(centre);
    let mut fv = [V::zero(); 15];
    fv[7] = f_centre;
    for j in 0..7 {
        let dx = half * XGK[j];
        fv[j] = f(centre - dx);
        fv[14 - j] = f(centre + dx);
    }

    let mut kronrod = f_centre.scale(WGK[7]);
    let mut gauss = f_centre.scale(WG[3]);
    let mut res_abs = f_centre.norm() * WGK[7];
    for j in 0..7 {
        let pair = fv[j].add(fv[14 - j]);
        kronrod = kronrod.add(pair.scale(WGK[j]));
        res_abs += WGK[j] * (fv[j].norm() + fv[14 - j].norm());
        if j % 2 == 1 {
            gauss = gauss.add(pair.scale(WG[j / 2]));
        }
    }

    let mean = kronrod.scale(0.5);
    let mut res_asc = WGK[7] * f_centre.sub(mean).norm();
    for j in 0..7 {
        res_asc += WGK[j] * (fv[j].sub(mean).norm() + fv[14 - j].sub(mean).norm());
    }

    let value = kronrod.scale(half);
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = kronrod.sub(gauss).scale(half).norm();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }

    Segment {
        lo,
        hi,
        value,
        error,
    }
}

/// Integrate `f` over `[lo, hi]` split at `breakpoints` (those outside the
/// open interval are ignored), with an externally supplied tail error.
fn adaptive_finite<V, F>(
    f: &F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    tol: &ToleranceSpec,
    extra_error: f64,
) -> Quadrature<V>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi && b.is_finite())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in edges.windows(2) {
        heap.push(kronrod_panel(f, w[0], w[1]));
        evaluations += 15;
    }
    let mut subdivisions = heap.len();

    let total = |heap: &BinaryHeap<Segment<V>>| -> (V, f64) {
        // Sum in interval order so the result does not depend on heap layout.
        let mut segs: Vec<&Segment<V>> = heap.iter().collect();
        segs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut value = V::zero();
        let mut err = 0.0;
        for s in segs {
            value = value.add(s.value);
            err += s.error;
        }
        (value, err)
    };

    let (mut value, mut err) = total(&heap);
    loop {
        let target = tol.abs.max(tol.rel * value.norm());
        if err + extra_error <= target {
            break;
        }
        if evaluations + 30 > tol.max_evals {
            let norm = value.norm();
            return Quadrature {
                value,
                report: QuadratureReport {
                    rel_error: rel(err + extra_error, norm),
                    abs_error: err + extra_error,
                    evaluations,
                    subdivisions,
                    converged: false,
                },
            };
        }
        let worst = heap.pop().expect("at least one segment");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            // Interval cannot be split further in double precision.
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            let (v, e) = total(&heap);
            value = v;
            err = e;
            if heap.iter().all(|s| s.error == 0.0) {
                break;
            }
            continue;
        }
        let left = kronrod_panel(f, worst.lo, mid);
        let right = kronrod_panel(f, mid, worst.hi);
        evaluations += 30;
        subdivisions += 1;
        // Incremental update; the final value is re-summed in order below.
        value = value.sub(worst.value).add(left.value).add(right.value);
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    let (value, err) = total(&heap);
    let abs_error = err + extra_error;
    Quadrature {
        value,
        report: QuadratureReport {
            rel_error: rel(abs_error, value.norm()),
            abs_error,
            evaluations,
            subdivisions,
            converged: true,
        },
    }
}

fn rel(err: f64, norm: f64) -> f64 {
    if norm > 0.0 {
        err / norm
    } else if err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Adaptive quadrature of `f` over `interval`.
///
/// Non-convergence is reported through `report.converged = false` together
/// with the partial estimate; see [`Quadrature::into_result`].
pub fn integrate_adaptive<V, F>(f: F, interval: Interval, tol: &ToleranceSpec) -> Quadrature<V>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    integrate_with_breakpoints(f, interval, &[], tol)
}

/// As [`integrate_adaptive`], with initial subdivision points where the
/// integrand is known to change character.
pub fn integrate_with_breakpoints<V, F>(
    f: F,
    interval: Interval,
    breakpoints: &[f64],
    tol: &ToleranceSpec,
) -> Quadrature<V>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    if interval.hi.is_finite() {
        return adaptive_finite(&f, interval.lo, interval.hi, breakpoints, tol, 0.0);
    }

    let rate = interval
        .decay_rate
        .expect("semi-infinite Interval always carries a decay rate");
    let mut cut = interval.lo + 40.0 / rate;
    let mut bps: Vec<f64> = breakpoints.to_vec();
    loop {
        // Tail of an integrand decaying at least like exp(-rate x) beyond the
        // cut, measured from the local decay between cut and 1.25 cut.
        let probe = cut + 0.25 * (cut - interval.lo);
        let f_cut = f(cut).norm();
        let f_probe = f(probe).norm();
        let local_rate = if f_cut > 0.0 && f_probe > 0.0 && f_probe < f_cut {
            ((f_cut / f_probe).ln() / (probe - cut)).min(rate)
        } else if f_cut == 0.0 {
            rate
        } else {
            0.0
        };
        let tail = if local_rate > 0.0 {
            2.0 * f_cut / local_rate
        } else {
            f64::INFINITY
        };

        let mut q = adaptive_finite(&f, interval.lo, cut, &bps, tol, 0.0);
        q.report.evaluations += 2;
        let target = tol.abs.max(tol.rel * q.value.norm());
        if tail <= 0.1 * target || !q.report.converged || cut > interval.lo + 1e4 / rate {
            let mut report = q.report;
            report.abs_error += tail;
            report.rel_error = rel(report.abs_error, q.value.norm());
            if tail > target {
                report.converged = false;
            }
            return Quadrature {
                value: q.value,
                report,
            };
        }
        bps.push(cut);
        cut = interval.lo + 2.0 * (cut - interval.lo);
    }
}
