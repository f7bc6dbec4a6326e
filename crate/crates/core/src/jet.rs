//! k-jets of fields at grid nodes, and the polynomial section that realizes
//! a prescribed jet as a genuine smooth field.

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::grid::{arc_displacement, Field, GridSpec};

/// The tuple `(ψ(x), ψ′(x), …, ψ^{(k)}(x))` of derivative values at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    base_point: f64,
    values: Vec<f64>,
}

/// Default absolute + relative tolerance for jet comparisons; discrete jets
/// are never bit-equal.
pub const JET_EQ_TOL: f64 = 1e-9;

impl Jet {
    pub fn new(base_point: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteJet);
        }
        Ok(Self { base_point, values })
    }

    pub fn base_point(&self) -> f64 {
        self.base_point
    }

    /// Jet order k; the jet carries k+1 values.
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    /// Derivative values `ψ(x), ψ′(x), …`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Componentwise comparison at the given absolute + relative tolerance,
    /// at the same base point.
    pub fn approx_eq(&self, other: &Jet, tol: f64) -> bool {
        if (self.base_point - other.base_point).abs() > tol
            || self.values.len() != other.values.len()
        {
            return false;
        }
        self.values
            .iter()
            .zip(other.values.iter())
            .all(|(a, b)| (a - b).abs() <= tol + tol * a.abs().max(b.abs()))
    }

    /// Truncate to a lower order.
    pub fn truncated(&self, k: usize) -> Jet {
        Jet {
            base_point: self.base_point,
            values: self.values[..=k.min(self.order())].to_vec(),
        }
    }
}

/// The fields `f, f′, …, f^{(k)}`, shared by jet extraction and by
/// expression evaluation over whole grids.
pub(crate) fn derivative_stack(f: &Field, k: usize) -> Result<Vec<Field>> {
    let mut stack = Vec::with_capacity(k + 1);
    stack.push(f.clone());
    for _ in 0..k {
        let next = stack.last().unwrap().derivative(1)?;
        stack.push(next);
    }
    Ok(stack)
}

/// Jet of `f` at the grid node `x`: `values[j] = f^{(j)}(x)` via spectral
/// derivatives. `x` must be a grid node; there is no interpolation.
pub fn extract_jet(f: &Field, x: f64, k: usize) -> Result<Jet> {
    let idx = f.grid().node_index(x)?;
    let guard = f.grid().aliasing_guard();
    if k > guard {
        return Err(Error::AliasingGuard { order: k, guard });
    }
    let stack = derivative_stack(f, k)?;
    Jet::new(x, stack.iter().map(|d| d.value_at_node(idx)).collect())
}

/// Realize a jet as a smooth field: the Taylor polynomial of the jet around
/// its base point, multiplied by a plateau cutoff that equals 1 within
/// `cutoff_radius / 2` of the base point and 0 beyond `cutoff_radius`.
/// The plateau fraction 1/2 is a free choice; it leaves half the radius for
/// the smooth transition.
///
/// The polynomial coefficients are preconditioned against the discrete
/// section defect: realize-then-extract is linear in the jet values, so the
/// defect matrix (measured on unit jets) can be solved away exactly. Without
/// this step the spectral tail of the cutoff, amplified by `k^order` in
/// extraction, dominates the round trip.
///
/// `extract_jet(realize_jet(j, …), j.base_point, j.order)` reproduces `j`.
/// The residual floor is the FFT noise amplified by `(n/2)^order`: with
/// `cutoff_radius = 1.4`, orders ≤ 4 land near 1e-9 on a 128-point grid and
/// near 1e-8 on 256 points; order 6 reaches about 1e-4 on 256 points.
/// The base point must be a grid node.
pub fn realize_jet(jet: &Jet, cutoff_radius: f64, grid: GridSpec) -> Result<Field> {
    let k = jet.order();
    let base = jet.base_point();
    // Defect matrix: column j is the extracted jet of the unit-jet field.
    let mut matrix = vec![vec![0.0; k + 1]; k + 1];
    for j in 0..=k {
        let mut unit = vec![0.0; k + 1];
        unit[j] = 1.0;
        let col = extract_jet(
            &realize_taylor(base, &unit, cutoff_radius, grid)?,
            base,
            k,
        )?;
        for (i, row) in matrix.iter_mut().enumerate() {
            row[j] = col.value(i);
        }
    }
    let corrected = solve_dense(matrix, jet.values().to_vec(), 1e-8)?;
    realize_taylor(base, &corrected, cutoff_radius, grid)
}

/// Plain Taylor-times-cutoff realization, without defect preconditioning.
fn realize_taylor(
    base: f64,
    values: &[f64],
    cutoff_radius: f64,
    grid: GridSpec,
) -> Result<Field> {
    if !(cutoff_radius > 0.0) || cutoff_radius >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::BadWindowRadius(cutoff_radius));
    }
    let cutoff = Field::plateau(base, cutoff_radius / 2.0, cutoff_radius, grid)?;
    let taylor = Field::from_fn(grid, |x| {
        let d = arc_displacement(base, x);
        let mut acc = 0.0;
        let mut fact = 1.0;
        let mut pow = 1.0;
        for (i, &v) in values.iter().enumerate() {
            if i > 0 {
                fact *= i as f64;
                pow *= d;
            }
            acc += v * pow / fact;
        }
        acc
    });
    Ok(taylor.hadamard(&cutoff))
}
