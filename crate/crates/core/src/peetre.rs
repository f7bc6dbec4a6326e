//! The mollifier family around point sets, its quantitative seminorm
//! estimate, jet-determination probes for field-to-field maps, and k-local
//! map testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{arc_distance, convolve_gaussian, Field, GridSpec, SupportWindow};
use crate::jet::{extract_jet, realize_jet};
use crate::report::ProbeReport;

/// A nonempty set of distinct grid points.
#[derive(Debug, Clone)]
pub struct PointSet {
    points: Vec<f64>,
}

impl PointSet {
    pub fn new(grid: GridSpec, points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::BadPointSet);
        }
        let mut snapped = Vec::with_capacity(points.len());
        for &p in &points {
            let idx = grid.node_index(p)?;
            let x = grid.point(idx);
            if snapped.iter().any(|&q: &f64| q == x) {
                return Err(Error::BadPointSet);
            }
            snapped.push(x);
        }
        Ok(Self { points: snapped })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arc distance from `x` to the set.
    pub fn distance(&self, x: f64) -> f64 {
        self.points
            .iter()
            .map(|&p| arc_distance(x, p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest pairwise separation (π for a single point).
    pub fn min_separation(&self) -> f64 {
        let mut best = std::f64::consts::PI;
        for (i, &a) in self.points.iter().enumerate() {
            for &b in &self.points[i + 1..] {
                best = best.min(arc_distance(a, b));
            }
        }
        best
    }

    /// Grid nodes within distance `r` of the set.
    pub fn nodes_within(&self, grid: GridSpec, r: f64) -> Vec<usize> {
        (0..grid.n_points())
            .filter(|&i| self.distance(grid.point(i)) <= r)
            .collect()
    }
}

/// Mollifier `χ_λ = φ_λ ∗ 1_{d(·,X) ≤ λ/2}`: the discrete circular
/// convolution of the indicator with a unit-mass kernel supported in
/// `3λ/8`. The result is exactly 1 where `d(x,X) ≤ λ/8` and exactly 0
/// where `d(x,X) ≥ λ`, by the support geometry.
///
/// The kernel is a truncated Gaussian (σ = support/12): among unit-mass
/// kernels with the prescribed support it keeps the spectral tail smallest,
/// which the seminorm estimates depend on.
pub fn mollifier(x_set: &PointSet, lambda: f64, grid: GridSpec) -> Result<Field> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::BadMollifierWidth(lambda));
    }
    let min = 16.0 * grid.spacing();
    if lambda < min {
        return Err(Error::UnresolvableMollifier { lambda, min });
    }
    let half_cells = (3.0 * lambda / 8.0 / grid.spacing()).floor() as i64;
    let xs = x_set.clone();
    Ok(convolve_gaussian(grid, half_cells, move |x| {
        if xs.distance(x) <= lambda / 2.0 {
            1.0
        } else {
            0.0
        }
    }))
}

/// One row of the cutoff-estimate table.
#[derive(Debug, Clone)]
pub struct PeetreRatioRow {
    pub lambda: f64,
    /// max over trial functions of `π_{m}(χ_λ φ) / (λ π_{m+1, d≤λ}(φ))`.
    pub max_ratio: f64,
}

/// Quantitative mollifier estimate: for trial functions vanishing to order
/// m+1 on X, the ratio `π_{m,K}(χ_λ φ) / (λ · π_{m+1, K∩{d≤λ}}(φ))` stays
/// bounded as λ shrinks. Returns one row per λ and the overall maximum.
pub fn check_peetre_estimate(
    x_set: &PointSet,
    m: usize,
    lambdas: &[f64],
    trials: &[Field],
    grid: GridSpec,
) -> Result<(Vec<PeetreRatioRow>, f64)> {
    for phi in trials {
        check_vanishing(x_set, m, phi)?;
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut overall = 0.0f64;
    for &lambda in lambdas {
        let chi = mollifier(x_set, lambda, grid)?;
        let near = x_set.nodes_within(grid, lambda);
        let mut max_ratio = 0.0f64;
        for phi in trials {
            let numerator = chi
                .hadamard(phi)
                .seminorm(m, &SupportWindow::full())?;
            let denominator = lambda * phi.seminorm_on_nodes(m + 1, &near)?;
            if denominator > 0.0 {
                max_ratio = max_ratio.max(numerator / denominator);
            }
        }
        overall = overall.max(max_ratio);
        rows.push(PeetreRatioRow { lambda, max_ratio });
    }
    Ok((rows, overall))
}

/// Verify that `phi` vanishes to order m+1 on X: all derivatives of order
/// ≤ m at each point below 1e-9 (relative to the field's sup norm).
fn check_vanishing(x_set: &PointSet, m: usize, phi: &Field) -> Result<()> {
    let tol = 1e-9 * (1.0 + phi.sup_norm());
    for &p in x_set.points() {
        let jet = extract_jet(phi, p, m)?;
        for j in 0..=m {
            if jet.value(j).abs() > tol {
                return Err(Error::VanishingPrecondition {
                    order: m + 1,
                    residual: jet.value(j).abs(),
                    at: p,
                });
            }
        }
    }
    Ok(())
}

/// A trial function vanishing to exactly order m+1 on X: the product of
/// `sin^{m+1}(x - x_i)` over the set (2π-periodic, extra zeros at the
/// antipodes are harmless) times a positive random smooth factor.
pub fn vanishing_trial(x_set: &PointSet, m: usize, grid: GridSpec, seed: u64) -> Result<Field> {
    let rough = Field::random(grid, seed, 6, 0.6)?;
    let points = x_set.points().to_vec();
    let power = (m + 1) as i32;
    Ok(Field::from_fn(grid, |x| {
        let mut v = 1.0;
        for &p in &points {
            v *= (x - p).sin().powi(power);
        }
        v
    })
    .hadamard(&rough.map(|r| 1.0 + 0.5 * r)))
}

/// Outcome of the jet-determination probe.
#[derive(Debug, Clone)]
pub enum JetDetermination {
    /// The map is determined by p-jets at the probed points; the witness
    /// pair shows it is not determined by (p-1)-jets when p > 0.
    Determined {
        order: usize,
        witness: Option<DeterminationWitness>,
    },
    /// No candidate order determined the map.
    NotDetermined { up_to: usize },
}

/// Explicit pair of fields with matching (order)-jets on X whose densities
/// nevertheless differ at some probed point.
#[derive(Debug, Clone)]
pub struct DeterminationWitness {
    pub order: usize,
    pub phi1: Field,
    pub phi2: Field,
    pub at: f64,
    pub density_gap: f64,
}

/// Map from fields to fields, evaluated pointwise at grid nodes.
pub type FieldMap<'a> = dyn Fn(&Field) -> Result<Field> + 'a;

/// Tolerance for density equality after unit-sup normalization.
pub const DETERMINATION_TOL: f64 = 1e-7;

/// Probe which jet order determines a field-to-field map at the points of
/// X: for each candidate p, build pairs with identical p-jets on X (via
/// realize-jet differences) that differ elsewhere, and compare densities at
/// the points.
pub fn test_jet_determination(
    map: &FieldMap<'_>,
    candidates: &[usize],
    x_set: &PointSet,
    grid: GridSpec,
    trials: u32,
    seed: u64,
) -> Result<JetDetermination> {
    let radius = (x_set.min_separation() / 2.0 * 0.9)
        .min(1.4)
        .min(std::f64::consts::FRAC_PI_2 * 0.95);
    let mut witness_for: Vec<Option<DeterminationWitness>> = vec![None; candidates.len()];
    let mut determined: Option<usize> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (ci, &p) in candidates.iter().enumerate() {
        let mut max_gap = 0.0f64;
        let mut worst: Option<DeterminationWitness> = None;
        for _ in 0..trials {
            let phi1 = Field::random(grid, rng.random_range(0..u64::MAX / 2), 8, 0.7)?;
            let eta = Field::random(grid, rng.random_range(0..u64::MAX / 2), 8, 0.7)?;
            // δ = η - Σ realize(j^p_{x_i} η): zero p-jets on X, alive elsewhere.
            let mut delta = eta.clone();
            for &xp in x_set.points() {
                let jet = extract_jet(&eta, xp, p)?;
                delta = &delta - &realize_jet(&jet, radius, grid)?;
            }
            let phi2 = &phi1 + &delta;
            let d1 = map(&phi1)?;
            let d2 = map(&phi2)?;
            let norm = d1.sup_norm().max(d2.sup_norm()).max(1e-12);
            for &xp in x_set.points() {
                let gap = (d1.value_at(xp)? - d2.value_at(xp)?).abs() / norm;
                if gap > max_gap {
                    max_gap = gap;
                    worst = Some(DeterminationWitness {
                        order: p,
                        phi1: phi1.clone(),
                        phi2: phi2.clone(),
                        at: xp,
                        density_gap: gap,
                    });
                }
            }
        }
        witness_for[ci] = worst;
        if max_gap <= DETERMINATION_TOL {
            determined = Some(ci);
            break;
        }
    }
    match determined {
        Some(ci) => Ok(JetDetermination::Determined {
            order: candidates[ci],
            witness: if ci > 0 {
                witness_for[ci - 1].clone()
            } else {
                None
            },
        }),
        None => Ok(JetDetermination::NotDetermined {
            up_to: *candidates.last().unwrap_or(&0),
        }),
    }
}

/// Map from a field and k points to a value.
pub type MultiPointMap<'a> = dyn Fn(&Field, &[f64]) -> Result<f64> + 'a;

/// k-locality probe: perturbing φ away from the neighborhoods of the k
/// points must leave the output unchanged.
pub fn test_k_local(
    map: &MultiPointMap<'_>,
    k: usize,
    grid: GridSpec,
    trials: u32,
    seed: u64,
) -> Result<ProbeReport> {
    if k == 0 || k > 3 {
        return Err(Error::Config("k-local probing supports 1 <= k <= 3".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residuals = Vec::with_capacity(trials as usize);
    let mut scale = 0.0f64;
    // Points live in one arc, the perturbation in the complementary arc,
    // with at least 0.9 rad between them.
    let bump_window = SupportWindow::new(5.3, 0.55)?;
    for _ in 0..trials {
        let mut points = Vec::with_capacity(k);
        while points.len() < k {
            let idx = rng.random_range(0..grid.n_points());
            let x = grid.point(idx);
            if x < 3.5 && points.iter().all(|&p: &f64| arc_distance(p, x) > 0.2) {
                points.push(x);
            }
        }
        let phi = Field::random(grid, rng.random_range(0..u64::MAX / 2), 8, 0.7)?;
        let bump = Field::gauss_bump(&bump_window, grid)?
            .scale(rng.random_range(0.5..1.5));
        let base = map(&phi, &points)?;
        let perturbed = map(&(&phi + &bump), &points)?;
        scale = scale.max(base.abs()).max(perturbed.abs());
        residuals.push((base - perturbed).abs());
    }
    Ok(ProbeReport::from_residuals(
        "k_local_map",
        &format!("k_local(k={k})"),
        residuals,
        scale.max(1e-12),
        1e-8,
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::JetExpr;
    use crate::identities::density_field;
    use crate::report::Verdict;
    use std::f64::consts::PI;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn point_set(grid: GridSpec, xs: &[f64]) -> PointSet {
        let snapped: Vec<f64> = xs.iter().map(|&x| grid.point(grid.nearest_node(x))).collect();
        PointSet::new(grid, snapped).unwrap()
    }

    #[test]
    fn point_set_validation() {
        let g = grid(256);
        assert!(PointSet::new(g, vec![]).is_err());
        let x = g.point(10);
        assert!(PointSet::new(g, vec![x, x]).is_err());
        assert!(PointSet::new(g, vec![0.1234]).is_err());
        let xs = PointSet::new(g, vec![g.point(0), g.point(128)]).unwrap();
        assert!((xs.min_separation() - PI).abs() < 1e-12);
    }

    #[test]
    fn mollifier_plateau_and_support_are_exact() {
        for n in [2048usize, 4096] {
            let g = grid(n);
            for &lambda in &[0.25f64, 0.125, 0.0625] {
                for xs in [
                    point_set(g, &[1.0]),
                    point_set(g, &[1.0, 3.0]),
                    point_set(g, &[0.5, 2.5, 4.5]),
                ] {
                    let chi = mollifier(&xs, lambda, g).unwrap();
                    for (i, x) in g.points().enumerate() {
                        let d = xs.distance(x);
                        if d <= lambda / 8.0 {
                            assert!(
                                (chi.value_at_node(i) - 1.0).abs() < 1e-12,
                                "plateau at d={d}, λ={lambda}"
                            );
                        } else if d >= lambda {
                            assert!(
                                chi.value_at_node(i).abs() < 1e-12,
                                "support at d={d}, λ={lambda}"
                            );
                        } else {
                            assert!((0.0..=1.0 + 1e-12).contains(&chi.value_at_node(i)));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mollifier_mass_bounds() {
        let g = grid(2048);
        let xs = point_set(g, &[1.0, 3.0, 5.0]);
        let lambda = 0.25;
        let chi = mollifier(&xs, lambda, g).unwrap();
        let mass = chi.integrate();
        let k = xs.len() as f64;
        assert!(mass >= k * lambda / 4.0 * 0.9, "mass {mass}");
        assert!(mass <= k * 2.0 * lambda, "mass {mass}");
    }

    #[test]
    fn mollifier_rejects_bad_widths() {
        let g = grid(256);
        let xs = point_set(g, &[1.0]);
        assert!(matches!(
            mollifier(&xs, 1.5, g),
            Err(Error::BadMollifierWidth(_))
        ));
        assert!(matches!(
            mollifier(&xs, 0.1, g),
            Err(Error::UnresolvableMollifier { .. })
        ));
        // Antipode of a single point with λ = 1/4 is far outside the
        // support (λ = 1/4 needs at least 512 points to resolve).
        let g = grid(512);
        let xs = point_set(g, &[1.0]);
        let chi = mollifier(&xs, 0.25, g).unwrap();
        let anti = g.point(g.nearest_node(1.0 + PI));
        assert_eq!(chi.value_at(anti).unwrap(), 0.0);
    }

    #[test]
    fn vanishing_trials_satisfy_the_precondition() {
        let g = grid(2048);
        let xs = point_set(g, &[1.0, 4.0]);
        for m in 0..=2 {
            let phi = vanishing_trial(&xs, m, g, 7).unwrap();
            assert!(check_vanishing(&xs, m, &phi).is_ok(), "m={m}");
        }
        // A generic field fails the precondition.
        let generic = Field::random(g, 3, 8, 0.7).unwrap();
        assert!(matches!(
            check_vanishing(&xs, 1, &generic),
            Err(Error::VanishingPrecondition { .. })
        ));
    }

    #[test]
    fn zero_trial_gives_zero_ratios() {
        let g = grid(2048);
        let xs = point_set(g, &[2.0]);
        let zero = Field::zero(g);
        let (rows, overall) =
            check_peetre_estimate(&xs, 1, &[0.25, 0.125], &[zero], g).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(overall, 0.0);
    }

    #[test]
    fn peetre_ratios_stay_bounded_as_lambda_shrinks() {
        let g = grid(4096);
        let xs = point_set(g, &[1.0]);
        let m = 1;
        let trials: Vec<Field> = (0..3)
            .map(|s| vanishing_trial(&xs, m, g, 50 + s).unwrap())
            .collect();
        let lambdas = [0.25, 0.125, 0.0625];
        let (rows, overall) = check_peetre_estimate(&xs, m, &lambdas, &trials, g).unwrap();
        let largest = rows[0].max_ratio;
        assert!(overall <= 3.0 * largest, "{overall} vs largest-λ {largest}");
        assert!(overall.is_finite() && overall > 0.0);
    }

    #[test]
    fn pointwise_square_density_is_determined_by_zero_jets() {
        let g = grid(256);
        let xs = point_set(g, &[1.0, 4.0]);
        let map = |phi: &Field| Ok(phi.hadamard(phi));
        let r = test_jet_determination(&map, &[0, 1], &xs, g, 4, 3).unwrap();
        match r {
            JetDetermination::Determined { order: 0, witness } => assert!(witness.is_none()),
            other => panic!("expected determination at order 0, got {other:?}"),
        }
    }

    #[test]
    fn el_density_is_determined_by_two_jets_not_one() {
        // 512 points: the realized witness fields must be spectrally clean
        // enough that their second derivatives do not leak across points.
        let g = grid(512);
        let h = Field::from_fn(g, |x| 0.5 + 0.3 * x.sin());
        let gg = Field::from_fn(g, |x| 1.0 + 0.4 * x.cos());
        let density = JetExpr::coeff("h", h)
            .unwrap()
            .mul(JetExpr::u(0).powi(4))
            .unwrap()
            .add(
                JetExpr::coeff("g", gg)
                    .unwrap()
                    .mul(JetExpr::u(1).powi(2))
                    .unwrap(),
            )
            .unwrap();
        let el = density.euler_lagrange().expr;
        let map = move |phi: &Field| density_field(&el, phi);
        let xs = point_set(g, &[1.5, 4.2]);
        let r = test_jet_determination(&map, &[0, 1, 2, 3], &xs, g, 4, 9).unwrap();
        match r {
            JetDetermination::Determined { order: 2, witness } => {
                let w = witness.expect("witness for failure at order 1");
                assert_eq!(w.order, 1);
                assert!(w.density_gap > DETERMINATION_TOL * 10.0);
                // The witness pair really does share 1-jets at the points.
                for &xp in xs.points() {
                    let j1 = extract_jet(&w.phi1, xp, 1).unwrap();
                    let j2 = extract_jet(&w.phi2, xp, 1).unwrap();
                    assert!(j1.approx_eq(&j2, 1e-7));
                }
            }
            other => panic!("expected determination at order 2, got {other:?}"),
        }
    }

    #[test]
    fn integral_map_is_not_jet_determined() {
        let g = grid(256);
        let xs = point_set(g, &[2.0]);
        let map = |phi: &Field| Ok(Field::constant(phi.grid(), phi.integrate()));
        let r = test_jet_determination(&map, &[0, 1, 2, 3, 4], &xs, g, 3, 5).unwrap();
        assert!(matches!(r, JetDetermination::NotDetermined { up_to: 4 }));
    }

    #[test]
    fn jet_determination_is_monotone() {
        // If order p determines, p+1 does too (same witness construction).
        let g = grid(256);
        let xs = point_set(g, &[1.0]);
        let map = |phi: &Field| phi.derivative(1);
        for candidates in [&[1usize, 2][..], &[2][..]] {
            let r = test_jet_determination(&map, candidates, &xs, g, 4, 11).unwrap();
            match r {
                JetDetermination::Determined { order, .. } => {
                    assert_eq!(order, candidates[0]);
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn product_of_local_densities_is_two_local() {
        let g = grid(256);
        // (φ; x₁, x₂) ↦ density(φ)(x₁)·density(φ)(x₂) with density = g_H φ².
        let weight = Field::from_fn(g, |x| 1.0 + 0.3 * x.cos());
        let map = move |phi: &Field, pts: &[f64]| {
            let d = weight.hadamard(&phi.hadamard(phi));
            let mut acc = 1.0;
            for &p in pts {
                acc *= d.value_at(p)?;
            }
            Ok(acc)
        };
        let r = test_k_local(&map, 2, g, 8, 13).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "max {:e}", r.max_residual);

        // A far-field term breaks k-locality.
        let bad = |phi: &Field, pts: &[f64]| Ok(phi.value_at(pts[0])? * phi.integrate());
        let r = test_k_local(&bad, 1, g, 8, 13).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);

        // Constant maps are trivially k-local.
        let constant = |_: &Field, _: &[f64]| Ok(2.5);
        let r = test_k_local(&constant, 3, g, 8, 13).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);

        assert!(test_k_local(&constant, 4, g, 2, 13).is_err());
    }
}
