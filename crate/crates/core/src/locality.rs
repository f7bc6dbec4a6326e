//! The locality verification harness: Hammerstein additivity tests,
//! partial-additivity tests, diagonal-support probes of the second
//! derivative, and the combined locality verdict.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{gradient, kernel_probe2, DerivativeConfig};
use crate::error::Result;
use crate::grid::{Field, GridSpec, SupportWindow};
use crate::report::{ProbeReport, Verdict};
use crate::zoo::{counterexample_chi, embedding_constant, Functional};

/// Tolerances and geometry of the locality probes.
#[derive(Debug, Clone)]
pub struct LocalityLab {
    pub grid: GridSpec,
    pub deriv: DerivativeConfig,
    /// Residual tolerance (relative to scale) for the additivity tests.
    pub additivity_tol: f64,
    /// Normalized-residual tolerance for the diagonal-support probe; the
    /// probe itself is finite-difference limited.
    pub diagonal_tol: f64,
    /// Spectral tail fraction accepted by the gradient-smoothness proxy.
    pub smoothness_tail_tol: f64,
    /// Window gap in grid cells for "disjoint" (stricter than the grid
    /// module's default: these residuals are the primary claim).
    pub gap_cells: usize,
}

impl LocalityLab {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            deriv: DerivativeConfig::default(),
            additivity_tol: 1e-9,
            diagonal_tol: 1e-6,
            smoothness_tail_tol: 1e-8,
            gap_cells: 8,
        }
    }

    fn gap(&self) -> f64 {
        self.gap_cells as f64 * self.grid.spacing()
    }

    /// A pair of windows separated by at least the gap on both sides.
    fn disjoint_windows(&self, rng: &mut ChaCha8Rng) -> (SupportWindow, SupportWindow) {
        // Probe bumps are Gaussian with σ = radius/12; the radius floor
        // keeps σ resolved so that spectral leakage stays near round-off.
        let r_min = (240.0 / self.grid.n_points() as f64).max(0.45);
        let r_max = (r_min * 1.25).min(1.2);
        let r1 = rng.random_range(r_min..=r_max);
        let r2 = rng.random_range(r_min..=r_max);
        let c1 = rng.random_range(0.0..std::f64::consts::TAU);
        let lo = r1 + r2 + self.gap();
        let hi = std::f64::consts::TAU - lo;
        let delta = rng.random_range(lo..=hi);
        (
            SupportWindow::new(c1, r1).unwrap(),
            SupportWindow::new(c1 + delta, r2).unwrap(),
        )
    }

    fn random_bump(&self, rng: &mut ChaCha8Rng, window: &SupportWindow) -> Field {
        let amp = rng.random_range(-2.0..2.0);
        Field::gauss_bump(window, self.grid)
            .expect("probe window fits the circle")
            .scale(amp)
    }

    fn random_background(&self, rng: &mut ChaCha8Rng) -> Field {
        let band = (self.grid.aliasing_guard() / 2).min(8);
        let seed = rng.random_range(0..u64::MAX / 2);
        Field::random(self.grid, seed, band, 0.7)
            .expect("band within guard")
            .scale(rng.random_range(0.2..1.5))
    }

    /// Hammerstein additivity:
    /// `F(φ₁+φ₂+φ₃) = F(φ₁+φ₂) + F(φ₂+φ₃) - F(φ₂)` for disjoint φ₁, φ₃.
    /// Per trial, φ₂ is a random band-limited background and φ₁, φ₃ are
    /// bumps in gap-separated windows.
    pub fn test_additivity(&self, f: &Functional, trials: u32, seed: u64) -> Result<ProbeReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut residuals = Vec::with_capacity(trials as usize);
        let mut scale = 0.0f64;
        for _ in 0..trials {
            let (w1, w3) = self.disjoint_windows(&mut rng);
            let b1 = self.random_bump(&mut rng, &w1);
            let b3 = self.random_bump(&mut rng, &w3);
            let p2 = self.random_background(&mut rng);
            let f123 = f.eval(&(&(&b1 + &p2) + &b3))?;
            let f12 = f.eval(&(&b1 + &p2))?;
            let f23 = f.eval(&(&p2 + &b3))?;
            let f2 = f.eval(&p2)?;
            for v in [f123, f12, f23, f2] {
                scale = scale.max(v.abs());
            }
            residuals.push((f123 - f12 - f23 + f2).abs());
        }
        Ok(ProbeReport::from_residuals(
            f.name(),
            "additivity",
            residuals,
            scale.max(1e-12),
            self.additivity_tol,
            seed,
        )
        .with_parameter("gap_cells", self.gap_cells.to_string()))
    }

    /// Partial additivity `F(φ₁+φ₂) = F(φ₁) + F(φ₂)` over disjoint bump
    /// pairs, with `F(0)` subtracted as the normalization.
    pub fn test_partial_additivity(
        &self,
        f: &Functional,
        trials: u32,
        seed: u64,
    ) -> Result<ProbeReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut residuals = Vec::with_capacity(trials as usize);
        let mut scale = 0.0f64;
        let f0 = f.eval(&Field::zero(self.grid))?;
        for _ in 0..trials {
            let (w1, w2) = self.disjoint_windows(&mut rng);
            let b1 = self.random_bump(&mut rng, &w1);
            let b2 = self.random_bump(&mut rng, &w2);
            let f12 = f.eval(&(&b1 + &b2))?;
            let f1 = f.eval(&b1)?;
            let f2 = f.eval(&b2)?;
            for v in [f12, f1, f2, f0] {
                scale = scale.max(v.abs());
            }
            residuals.push((f12 - f1 - f2 + f0).abs());
        }
        Ok(ProbeReport::from_residuals(
            f.name(),
            "partial_additivity",
            residuals,
            scale.max(1e-12),
            self.additivity_tol,
            seed,
        ))
    }

    /// Diagonal support of the second derivative: probes with disjoint
    /// direction pairs must vanish, normalized by an overlapping-pair probe.
    pub fn test_diagonal_support(
        &self,
        f: &Functional,
        phi: &Field,
        trials: u32,
        seed: u64,
    ) -> Result<ProbeReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut disjoint = Vec::with_capacity(trials as usize);
        let mut normalizer = 0.0f64;
        let mut normalizer_noise = 0.0f64;
        for _ in 0..trials {
            let (w1, w2) = self.disjoint_windows(&mut rng);
            let psi = self.random_bump(&mut rng, &w1);
            let chi = self.random_bump(&mut rng, &w2);
            disjoint.push(kernel_probe2(f, phi, &psi, &chi, &self.deriv)?.abs());
            // Overlapping pair in the first window.
            let half = SupportWindow::new(w1.center(), w1.radius() * 0.6).unwrap();
            let chi_over = self.random_bump(&mut rng, &half);
            let (value, err) =
                crate::engine::gateaux_detailed(f, phi, &[&psi, &chi_over], &self.deriv)?;
            if value.abs() > normalizer {
                normalizer = value.abs();
                normalizer_noise = err;
            }
        }
        // A normalizer at the probe's own noise floor means the second
        // derivative vanishes identically.
        if normalizer < 1e-13_f64.max(10.0 * normalizer_noise) {
            return Ok(ProbeReport::inconclusive(
                f.name(),
                "diagonal_support",
                seed,
                "second derivative vanishes identically",
            ));
        }
        let residuals: Vec<f64> = disjoint.iter().map(|d| d / normalizer).collect();
        Ok(ProbeReport::from_residuals(
            f.name(),
            "diagonal_support",
            residuals,
            1.0,
            self.diagonal_tol,
            seed,
        )
        .with_parameter("normalizer", format!("{normalizer:e}")))
    }

    /// Gradient smoothness proxy: the gradient density exists and its
    /// spectrum decays (tail fraction beyond 3/4 of the probe band below the
    /// threshold). A stand-in for "empty wave front set", which no finite
    /// probe set can decide.
    pub fn test_gradient_smoothness(
        &self,
        f: &Functional,
        phi: &Field,
        seed: u64,
    ) -> Result<ProbeReport> {
        let grad = match gradient(f, phi, &self.deriv) {
            Ok(g) => g,
            Err(e) => {
                return Ok(ProbeReport::inconclusive(
                    f.name(),
                    "gradient_smoothness",
                    seed,
                    &format!("gradient probe failed: {e}"),
                ))
            }
        };
        // A gradient at the probe noise floor is the zero density; its tail
        // fraction would be noise over noise.
        let l2 = grad.field.hadamard(&grad.field).integrate().sqrt();
        let tail = if l2 < 1e-8 {
            0.0
        } else {
            grad.field.tail_energy_fraction(grad.band * 3 / 4)
        };
        Ok(ProbeReport::from_residuals(
            f.name(),
            "gradient_smoothness",
            vec![tail],
            1.0,
            self.smoothness_tail_tol,
            seed,
        )
        .with_parameter("band", grad.band.to_string())
        .with_parameter("gradient_l2", format!("{l2:e}"))
        .with_parameter("proxy", "spectral tail fraction, not a wave-front certificate".into()))
    }

    /// Gradient continuity proxy: the difference quotient
    /// `‖∇F_{φ+sδ} - ∇F_φ‖₂ / s` must not blow up as s halves. A stand-in
    /// for Bastiani smoothness of φ ↦ ∇F_φ, which has no finite certificate.
    pub fn test_gradient_continuity(
        &self,
        f: &Functional,
        phi: &Field,
        seed: u64,
    ) -> Result<ProbeReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        let delta = self.random_background(&mut rng);
        let s = 1e-2;
        let base = match gradient(f, phi, &self.deriv) {
            Ok(g) => g,
            Err(e) => {
                return Ok(ProbeReport::inconclusive(
                    f.name(),
                    "gradient_continuity",
                    seed,
                    &format!("gradient probe failed: {e}"),
                ))
            }
        };
        let mut ratios = Vec::new();
        for step in [s, s / 2.0] {
            let shifted = gradient(f, &(&phi.clone() + &delta.scale(step)), &self.deriv)?;
            let diff = (&shifted.field - &base.field).hadamard(
                &(&shifted.field - &base.field),
            );
            ratios.push(diff.integrate().sqrt() / step);
        }
        let grad_scale = base.field.hadamard(&base.field).integrate().sqrt();
        // Bounded Lipschitz proxy: the halved step must not grow the ratio
        // beyond a factor 4, and the ratio itself stays commensurate with
        // the gradient magnitude.
        let blowup = ratios[1] / (4.0 * ratios[0] + 1e-9 * (1.0 + grad_scale));
        Ok(ProbeReport::from_residuals(
            f.name(),
            "gradient_continuity",
            vec![blowup.max(0.0)],
            1.0,
            1.0,
            seed,
        )
        .with_parameter("ratio_s", format!("{:e}", ratios[0]))
        .with_parameter("ratio_s_half", format!("{:e}", ratios[1]))
        .with_parameter("proxy", "finite-difference Lipschitz ratio".into()))
    }

    /// Combined verdict over Theorem-style conditions: additivity, diagonal
    /// support at each φ-sample, gradient smoothness, and gradient
    /// continuity. Local iff every condition passes; nonlocal when any
    /// fails; inconclusive otherwise.
    pub fn locality_verdict(
        &self,
        f: &Functional,
        phi_samples: &[Field],
        trials: u32,
        seed: u64,
    ) -> Result<LocalityReport> {
        let mut conditions = Vec::new();
        conditions.push(self.test_additivity(f, trials, seed)?);
        for (i, phi) in phi_samples.iter().enumerate() {
            let sub_seed = seed.wrapping_add(1 + i as u64);
            conditions.push(
                self.test_diagonal_support(f, phi, trials, sub_seed)?
                    .with_parameter("phi_sample", i.to_string()),
            );
            conditions.push(
                self.test_gradient_smoothness(f, phi, sub_seed)?
                    .with_parameter("phi_sample", i.to_string()),
            );
            conditions.push(
                self.test_gradient_continuity(f, phi, sub_seed)?
                    .with_parameter("phi_sample", i.to_string()),
            );
        }
        let mut verdict = LocalityVerdict::Local;
        let mut failing = Vec::new();
        for c in &conditions {
            match c.verdict {
                Verdict::Fail => {
                    failing.push(format!("{} ({})", c.test, c.functional));
                    verdict = LocalityVerdict::Nonlocal;
                }
                Verdict::Inconclusive if verdict == LocalityVerdict::Local => {
                    // A vanishing second derivative does not impugn locality;
                    // other inconclusive probes do.
                    if !c
                        .parameters
                        .iter()
                        .any(|(k, v)| k == "reason" && v.contains("vanishes identically"))
                    {
                        verdict = LocalityVerdict::Inconclusive;
                    }
                }
                _ => {}
            }
        }
        Ok(LocalityReport {
            functional: f.name().to_string(),
            verdict,
            failing_conditions: failing,
            conditions,
        })
    }

    /// The explicit Hammerstein failure witness for the counterexample:
    /// background φ₂ = 1 with bumps sized so each perturbation alone stays
    /// in the glued functional's nonlinear neighborhood while the pair
    /// escapes it. Returns (report, oracle residual from the binomial
    /// expansion).
    pub fn counterexample_witness(
        &self,
        f_nl: &Functional,
        power: u32,
    ) -> Result<(ProbeReport, f64)> {
        let grid = self.grid;
        let (b1, b3) = self.witness_bumps()?;
        let one = Field::constant(grid, 1.0);
        let sum13 = &b1 + &b3;

        let op123 = &one + &sum13;
        let op12 = &one + &b1;
        let op23 = &one + &b3;
        let f123 = f_nl.eval(&op123)?;
        let f12 = f_nl.eval(&op12)?;
        let f23 = f_nl.eval(&op23)?;
        let f2 = f_nl.eval(&one)?;
        let residual = (f123 - f12 - f23 + f2).abs();
        let scale = f123.abs().max(f12.abs()).max(f23.abs()).max(f2.abs());

        // Binomial-expansion oracle: with χ = 1 on the single-bump operands
        // and χ = 0 on the pair, the functional evaluates to S + A + B
        // against (S+A)^N + (S+B)^N - S^N.
        let s = one.integrate();
        let a = b1.integrate();
        let b = b3.integrate();
        let n = power as i32;
        let oracle =
            ((s + a + b) - (s + a).powi(n) - (s + b).powi(n) + s.powi(n)).abs();
        debug_assert!(counterexample_chi(&op123) < 1e-12);
        debug_assert!((counterexample_chi(&op12) - 1.0).abs() < 1e-12);

        let report = ProbeReport::from_residuals(
            f_nl.name(),
            "hammerstein_witness",
            vec![residual],
            scale,
            self.additivity_tol,
            0,
        )
        .with_parameter("phi2", "constant 1".into())
        .with_parameter("bump_integrals", format!("{a:.6e},{b:.6e}"))
        .with_parameter("oracle_residual", format!("{oracle:.6e}"));
        Ok((report, oracle))
    }

    /// Two disjoint bumps, each with `‖b‖²_{H²} = 0.85/(3C²)` so that a
    /// single bump keeps `χ = 1` while the pair (norms adding for disjoint
    /// supports) crosses the upper threshold `1/(2C²)` and forces `χ = 0`.
    pub fn witness_bumps(&self) -> Result<(Field, Field)> {
        let c = embedding_constant(self.grid);
        let a_threshold = 1.0 / (3.0 * c * c);
        let target = 0.85 * a_threshold;
        let w1 = SupportWindow::new(1.2, 1.1)?;
        let w3 = SupportWindow::new(4.6, 1.1)?;
        let mut out = Vec::new();
        for w in [w1, w3] {
            let raw = Field::gauss_bump(&w, self.grid)?;
            let norm2 = raw.sobolev_norm(1).powi(2);
            out.push(raw.scale((target / norm2).sqrt()));
        }
        let b3 = out.pop().unwrap();
        let b1 = out.pop().unwrap();
        Ok((b1, b3))
    }
}

/// Overall locality classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalityVerdict {
    Local,
    Nonlocal,
    Inconclusive,
}

impl LocalityVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            LocalityVerdict::Local => "local",
            LocalityVerdict::Nonlocal => "nonlocal",
            LocalityVerdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for LocalityVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Verdict plus per-condition sub-reports.
#[derive(Debug, Clone)]
pub struct LocalityReport {
    pub functional: String,
    pub verdict: LocalityVerdict,
    pub failing_conditions: Vec<String>,
    pub conditions: Vec<ProbeReport>,
}

/// φ-samples used by the verdict suites: smooth random fields plus the
/// constant function 1, where the counterexample's glued regime is active.
pub fn standard_phi_samples(grid: GridSpec, seed: u64) -> Vec<Field> {
    vec![
        Field::random(grid, seed.wrapping_mul(31).wrapping_add(7), 8, 0.7)
            .expect("band within guard"),
        Field::random(grid, seed.wrapping_mul(37).wrapping_add(11), 6, 0.6)
            .expect("band within guard")
            .scale(0.8),
        Field::constant(grid, 1.0),
    ]
}
