//! Gauss-Legendre quadrature on [0, 1], used for the homotopy integrals in
//! the fundamental-theorem and Poincaré checks. The integrands there are
//! analytic in the homotopy parameter, where Gauss nodes converge
//! exponentially.

/// Nodes and weights of the n-point Gauss-Legendre rule on [0, 1].
///
/// Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
/// iteration from the Chebyshev initial guess; weights from the standard
/// `w = 2 / ((1-x²) P_n'(x)²)` formula, then mapped from [-1, 1].
pub fn gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Roots come in symmetric pairs; iterate each from its own guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrate `f` over [0, 1] with the n-point rule.
pub fn integrate_01(n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    gauss_legendre_01(n).iter().map(|&(x, w)| w * f(x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for n in [1, 2, 5, 8, 16, 33] {
            let s: f64 = gauss_legendre_01(n).iter().map(|&(_, w)| w).sum();
            assert!((s - 1.0).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn exact_for_low_degree_polynomials() {
        // n-point Gauss is exact through degree 2n-1.
        for n in [2usize, 4, 8] {
            let deg = 2 * n - 1;
            let got = integrate_01(n, |t| t.powi(deg as i32));
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((got - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn converges_exponentially_on_analytic_integrands() {
        // ∫₀¹ e^{3t} dt = (e³ - 1)/3.
        let exact = (3f64.exp() - 1.0) / 3.0;
        let e8 = (integrate_01(8, |t| (3.0 * t).exp()) - exact).abs();
        let e16 = (integrate_01(16, |t| (3.0 * t).exp()) - exact).abs();
        assert!(e8 < 1e-10);
        assert!(e16 <= e8);
    }
}
