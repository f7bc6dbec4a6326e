//! Integral identities of the variational calculus: the fundamental theorem
//! of calculus for functionals, the two Poincaré identities relating the
//! vertical Euler field to the Euler-Lagrange density, the Euler-Lagrange
//! representation of the gradient, and exactness of total derivatives.
//!
//! On the circle every exact form integrates to zero, so the identities are
//! checked in their integrated form; the boundary-current term drops out.

use crate::engine::{gateaux, gradient, DerivativeConfig};
use crate::error::{Error, Result};
use crate::expr::JetExpr;
use crate::grid::{Field, SupportWindow};
use crate::jet::derivative_stack;
use crate::quadrature::gauss_legendre_01;
use crate::zoo::{make_local, Functional};

/// `∫ f(j^k_x ψ) dx` — quadrature of a density along the jets of ψ.
pub fn integrate_density(f: &JetExpr, psi: &Field) -> Result<f64> {
    if let Some(g) = f.grid() {
        if g != psi.grid() {
            return Err(Error::GridMismatch(g.n_points(), psi.grid().n_points()));
        }
    }
    let stack = derivative_stack(psi, f.jet_order())?;
    let grid = psi.grid();
    let mut acc = 0.0;
    for (i, x) in grid.points().enumerate() {
        acc += f.evaluate_at_node(i, x, &stack);
    }
    Ok(acc * grid.spacing())
}

/// Pointwise field `x ↦ f(j^k_x ψ)`.
pub fn density_field(f: &JetExpr, psi: &Field) -> Result<Field> {
    let stack = derivative_stack(psi, f.jet_order())?;
    let grid = psi.grid();
    let samples: Vec<f64> = grid
        .points()
        .enumerate()
        .map(|(i, x)| f.evaluate_at_node(i, x, &stack))
        .collect();
    Field::from_samples(grid, samples)
}

/// Fundamental theorem of calculus for functionals:
/// `|F(φ+ψ) - F(φ) - ∫₀¹ DF_{φ+tψ}(ψ) dt|` with Gauss-Legendre quadrature
/// in the homotopy parameter.
pub fn check_ftc(
    f: &Functional,
    phi: &Field,
    psi: &Field,
    n_quad: usize,
    cfg: &DerivativeConfig,
) -> Result<f64> {
    if n_quad < 8 {
        return Err(Error::Config("check_ftc needs n_quad >= 8".into()));
    }
    let lhs = f.eval(&(phi + psi))? - f.eval(phi)?;
    let mut integral = 0.0;
    for (t, w) in gauss_legendre_01(n_quad) {
        let base = phi + &psi.scale(t);
        integral += w * gateaux(f, &base, &[psi], cfg)?;
    }
    Ok((lhs - integral).abs())
}

/// First Poincaré identity, integrated over the circle:
/// `∫ (ρf)(j^k ψ) dx = ∫ ψ·EL(f)(j^{2k} ψ) dx` (the exact boundary term
/// integrates to zero). Returns the worst residual over the samples.
pub fn check_poincare_first(f: &JetExpr, psi_samples: &[Field]) -> Result<f64> {
    let rho = f.vertical_euler();
    let el = f.euler_lagrange();
    let mut worst = 0.0f64;
    for psi in psi_samples {
        let lhs = integrate_density(&rho, psi)?;
        let el_density = density_field(&el.expr, psi)?;
        let rhs = el_density.inner(psi);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Second Poincaré identity, integrated over the circle:
/// `∫ f(j^k(ψ₁+ψ₂)) = ∫ f(j^k ψ₁) + ∫₀¹ dt ∫ ψ₂·EL(f)(j^{2k}(ψ₁+tψ₂)) dx`.
pub fn check_poincare_second(
    f: &JetExpr,
    psi1: &Field,
    psi2: &Field,
    n_quad: usize,
) -> Result<f64> {
    if n_quad < 8 {
        return Err(Error::Config("check_poincare_second needs n_quad >= 8".into()));
    }
    let el = f.euler_lagrange();
    let lhs = integrate_density(f, &(psi1 + psi2))?;
    let base = integrate_density(f, psi1)?;
    let mut homotopy = 0.0;
    for (t, w) in gauss_legendre_01(n_quad) {
        let field = psi1 + &psi2.scale(t);
        let el_density = density_field(&el.expr, &field)?;
        homotopy += w * el_density.inner(psi2);
    }
    Ok((lhs - base - homotopy).abs())
}

/// Euler-Lagrange representation of the gradient: the engine gradient of
/// `make_local(f)` must match `EL(f)` evaluated along the jets of φ.
/// Returns the worst relative L² distance over the samples.
pub fn check_el_gradient(
    f: &JetExpr,
    phi_samples: &[Field],
    cfg: &DerivativeConfig,
) -> Result<f64> {
    let functional = make_local(f.clone(), SupportWindow::full())?;
    let el = f.euler_lagrange();
    let mut worst = 0.0f64;
    for phi in phi_samples {
        let numeric = gradient(&functional, phi, cfg)?.field;
        let symbolic = density_field(&el.expr, phi)?;
        let diff = &numeric - &symbolic;
        let num = diff.hadamard(&diff).integrate().sqrt();
        let den = symbolic.hadamard(&symbolic).integrate().sqrt();
        worst = worst.max(num / den.max(1e-12));
    }
    Ok(worst)
}

/// Exactness of total derivatives on the circle: for `t` with no bare
/// coordinate dependence, `∫ D_x t (j ψ) dx = 0` and the induced functional
/// `F_{D_x t}` is constant. Expressions containing the bare coordinate x are
/// rejected: x is not periodic.
pub fn check_exactness(t: &JetExpr, psi_samples: &[Field]) -> Result<f64> {
    if t.contains_x() {
        return Err(Error::NonPeriodicCoordinate);
    }
    let dt = t.total_derivative();
    let mut worst = 0.0f64;
    let at_zero = match psi_samples.first() {
        Some(psi) => integrate_density(&dt, &Field::zero(psi.grid()))?,
        None => 0.0,
    };
    for psi in psi_samples {
        let integral = integrate_density(&dt, psi)?;
        worst = worst.max(integral.abs());
        // Constancy of the induced functional.
        worst = worst.max((integral - at_zero).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::zoo::{find, zoo};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn grid() -> GridSpec {
        GridSpec::new(256).unwrap()
    }

    fn cfg() -> DerivativeConfig {
        DerivativeConfig::default()
    }

    fn el_example_density(g: GridSpec) -> JetExpr {
        let h = Field::from_fn(g, |x| 0.5 + 0.3 * x.sin());
        let gg = Field::from_fn(g, |x| 1.0 + 0.4 * x.cos());
        JetExpr::coeff("h", h)
            .unwrap()
            .mul(JetExpr::u(0).powi(4))
            .unwrap()
            .add(
                JetExpr::coeff("g", gg)
                    .unwrap()
                    .mul(JetExpr::u(1).powi(2))
                    .unwrap(),
            )
            .unwrap()
    }

    #[test]
    fn ftc_is_exact_for_linear_functionals() {
        let g = grid();
        let f = make_local(JetExpr::u(0), SupportWindow::full()).unwrap();
        let phi = Field::random(g, 1, 8, 0.7).unwrap();
        let psi = Field::random(g, 2, 8, 0.7).unwrap();
        let r = check_ftc(&f, &phi, &psi, 8, &cfg()).unwrap();
        assert!(r < 1e-12, "{r:e}");
        // ψ = 0 gives zero exactly.
        let r = check_ftc(&f, &phi, &Field::zero(g), 8, &cfg()).unwrap();
        assert_eq!(r, 0.0);
        assert!(check_ftc(&f, &phi, &psi, 4, &cfg()).is_err());
    }

    #[test]
    fn ftc_for_quartic_functional() {
        let g = grid();
        let f = make_local(JetExpr::u(0).powi(4), SupportWindow::full()).unwrap();
        let phi = Field::zero(g);
        let psi = Field::from_fn(g, f64::sin);
        let r = check_ftc(&f, &phi, &psi, 16, &cfg()).unwrap();
        assert!(r < 1e-7, "{r:e}");
    }

    #[test]
    fn ftc_residual_decays_at_quadrature_rate() {
        // K with a large direction makes the homotopy integrand genuinely
        // non-polynomial; the Gauss error then dominates the FD floor at
        // n=8 and collapses by n=16.
        let g = grid();
        let z = zoo(g).unwrap();
        let k = find(&z, "K").unwrap();
        let phi = Field::zero(g);
        let psi = Field::from_fn(g, f64::sin).scale(7.0);
        let e8 = check_ftc(k, &phi, &psi, 8, &cfg()).unwrap();
        let e16 = check_ftc(k, &phi, &psi, 16, &cfg()).unwrap();
        assert!(
            e8 > 16.0 * e16.max(1e-12),
            "observed order < 4: e8={e8:e} e16={e16:e}"
        );
    }

    #[test]
    fn poincare_first_for_quadratic_density() {
        // ρ(u₀²) = 2u₀², EL = 2u₀: both sides are 2∫ψ².
        let g = grid();
        let f = JetExpr::u(0).powi(2);
        let psi = Field::from_fn(g, f64::sin);
        let r = check_poincare_first(&f, &[psi]).unwrap();
        assert!(r < 1e-10, "{r:e}");
    }

    #[test]
    fn poincare_first_for_el_example() {
        let g = grid();
        let f = el_example_density(g);
        let samples: Vec<Field> = (0..20)
            .map(|s| Field::random(g, 100 + s, 10, 0.75).unwrap())
            .collect();
        let r = check_poincare_first(&f, &samples).unwrap();
        assert!(r < 1e-8, "{r:e}");
    }

    #[test]
    fn poincare_first_trivial_for_horizontal_densities() {
        let g = grid();
        let w = Field::from_fn(g, |x| 0.3 + 0.1 * x.cos());
        let f = JetExpr::coeff("w", w).unwrap();
        let psi = Field::random(g, 5, 8, 0.7).unwrap();
        let r = check_poincare_first(&f, &[psi]).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn poincare_second_reference_values() {
        let g = grid();
        let f = JetExpr::u(0).powi(2);
        let sin = Field::from_fn(g, f64::sin);
        let cos = Field::from_fn(g, f64::cos);
        // ∫(sin+cos)² = 2π; the homotopy term supplies the cross terms.
        let lhs = integrate_density(&f, &(&sin + &cos)).unwrap();
        assert!((lhs - TAU).abs() < 1e-10);
        let r = check_poincare_second(&f, &sin, &cos, 8).unwrap();
        assert!(r < 1e-8, "{r:e}");
        // ψ₂ = 0 collapses the identity to 0 = 0.
        let r = check_poincare_second(&f, &sin, &Field::zero(g), 8).unwrap();
        assert!(r < 1e-14);
    }

    #[test]
    fn poincare_second_for_el_example() {
        let g = grid();
        let f = el_example_density(g);
        let psi1 = Field::random(g, 41, 10, 0.75).unwrap();
        let psi2 = Field::random(g, 42, 10, 0.75).unwrap();
        let r = check_poincare_second(&f, &psi1, &psi2, 16).unwrap();
        assert!(r < 1e-7, "{r:e}");
    }

    #[test]
    fn el_gradient_for_simple_densities() {
        let g = grid();
        let phi = Field::random(g, 7, 10, 0.75).unwrap();
        // f = u₀² → ∇F = 2φ.
        let r = check_el_gradient(&JetExpr::u(0).powi(2), &[phi.clone()], &cfg()).unwrap();
        assert!(r < 1e-6, "{r:e}");
        // f = u₀ → ∇F ≡ 1.
        let r = check_el_gradient(&JetExpr::u(0), &[phi], &cfg()).unwrap();
        assert!(r < 1e-8, "{r:e}");
    }

    #[test]
    fn el_gradient_for_el_example() {
        let g = grid();
        let f = el_example_density(g);
        let samples: Vec<Field> = (0..3)
            .map(|s| Field::random(g, 200 + s, 8, 0.7).unwrap())
            .collect();
        let r = check_el_gradient(&f, &samples, &cfg()).unwrap();
        assert!(r < 1e-5, "{r:e}");
    }

    #[test]
    fn exactness_of_total_derivatives() {
        let g = grid();
        let samples: Vec<Field> = (0..5)
            .map(|s| Field::random(g, 300 + s, 10, 0.75).unwrap())
            .collect();
        // t = u₀²: ∫ 2ψψ′ = 0.
        let r = check_exactness(&JetExpr::u(0).powi(2), &samples).unwrap();
        assert!(r < 1e-10, "{r:e}");
        // t = sin(u₀): ∫ cos(ψ)ψ′ = 0 by periodicity.
        let r = check_exactness(&JetExpr::u(0).sin(), &samples).unwrap();
        assert!(r < 1e-9, "{r:e}");
        // Bare coordinate: rejected, x is not periodic.
        let t = JetExpr::x().mul(JetExpr::u(0)).unwrap();
        assert!(matches!(
            check_exactness(&t, &samples),
            Err(Error::NonPeriodicCoordinate)
        ));
    }

    #[test]
    fn exactness_for_random_expressions() {
        // The "only if" content of the global Poincaré statement at desk
        // scale: induced functionals of total derivatives are constant.
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        // Gentle amplitudes: nested sin/cos of large second derivatives
        // would spread the spectrum past Nyquist and break the quadrature.
        let samples: Vec<Field> = (0..4)
            .map(|s| Field::random(g, 400 + s, 4, 0.5).unwrap().scale(0.5))
            .collect();
        for _ in 0..30 {
            let t = crate::expr::testgen::random_expr(&mut rng, g, 2, 3);
            let scale = samples
                .iter()
                .map(|psi| integrate_density(&t, psi).map(f64::abs))
                .collect::<Result<Vec<_>>>()
                .unwrap()
                .into_iter()
                .fold(1.0f64, f64::max);
            let r = check_exactness(&t, &samples).unwrap();
            assert!(r < 1e-8 * scale, "{}: {r:e} vs scale {scale:e}", t.print());
        }
    }

    #[test]
    fn el_annihilates_total_derivatives_numerically() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..50 {
            let t = crate::expr::testgen::random_expr(&mut rng, g, 2, 3);
            let el = t.total_derivative().euler_lagrange().expr;
            for _ in 0..4 {
                let order = el.jet_order().max(1);
                let base = g.point(rng.random_range(0..g.n_points()));
                let jet = crate::jet::Jet::new(
                    base,
                    (0..=order).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
                .unwrap();
                let value = el.evaluate(&jet).unwrap();
                // Normalize by the magnitude of the summands: cancellation
                // of large terms is exactly what is being verified.
                let scale = match &el {
                    JetExpr::Sum(terms) => terms
                        .iter()
                        .map(|e| e.evaluate(&jet).unwrap().abs())
                        .sum::<f64>(),
                    e => e.evaluate(&jet).unwrap().abs(),
                };
                assert!(
                    value.abs() <= 1e-8 * (1.0 + scale),
                    "{}: residual {value:e} scale {scale:e}",
                    t.print()
                );
            }
        }
    }
}
