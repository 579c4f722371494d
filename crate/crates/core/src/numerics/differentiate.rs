/// Second derivative by the three-point central stencil with step `h`.
///
/// With `richardson` set, the O(h^2) error is eliminated by combining the
/// steps h and h/2: (4 D(h/2) - D(h)) / 3.
pub fn second_derivative<F>(f: F, x: f64, h: f64, richardson: bool) -> f64
where
    F: Fn(f64) -> f64,
{
    let centre = f(x);
    let stencil = |step: f64| (f(x + step) - 2.0 * centre + f(x - step)) / (step * step);
    let coarse = stencil(h);
    if !richardson {
        return coarse;
    }
    let fine = stencil(0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic() {
        let d2 = second_derivative(|x| x.powi(3), 2.0, 1e-2, true);
        assert!((d2 - 12.0).abs() < 1e-8 * 12.0);
    }

    #[test]
    fn quadratic_exact_without_extrapolation() {
        let d2 = second_derivative(|x| 3.0 * x * x - x + 5.0, 0.7, 1e-2, false);
        assert!((d2 - 6.0).abs() < 1e-10 * 6.0);
    }

    #[test]
    fn extrapolation_reduces_error() {
        let f = |x: f64| (-x).exp();
        let plain = (second_derivative(f, 1.0, 0.1, false) - f(1.0)).abs();
        let rich = (second_derivative(f, 1.0, 0.1, true) - f(1.0)).abs();
        assert!(rich < 1e-2 * plain);
    }
}
