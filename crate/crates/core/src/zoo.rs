//! The evaluable functional abstraction and the built-in functionals:
//! the local family F, H, I, K, the bilocal kernel functional G, the
//! exponential-of-integral J, the partially-additive-but-not-local
//! counterexample, and the unbounded-order functional.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::JetExpr;
use crate::grid::{bump_profile, smooth_step, Field, GridSpec, SupportWindow};
use crate::jet::derivative_stack;

/// How a functional evaluates; the tag doubles as metadata for reports.
#[derive(Clone)]
pub enum Kind {
    /// `F(ψ) = ∫ f(j^k_x ψ) χ(x) dx` with the window factor folded in.
    Local {
        density: JetExpr,
        window: SupportWindow,
    },
    /// `G(φ) = ∫∫ g(x,y) φ(x) φ(y) dx dy` for a separable-sum kernel.
    BilinearKernel { kernel: Kernel2 },
    /// Closure-form evaluation.
    Analytic {
        eval: Arc<dyn Fn(&Field) -> Result<f64> + Send + Sync>,
    },
    /// The glued functional `(1-χ(f))∫f + χ(f)(∫f)^N`.
    Counterexample { power: u32 },
    /// `Σ_n ∫ χ_n(φ(x)) φ^{(|n|)}(x) g(x) dx` with a bump partition of
    /// unity χ_n on value space.
    UnboundedOrder { weight: Field },
}

type DerivRule = Arc<dyn Fn(&Field, &[&Field]) -> Option<Result<f64>> + Send + Sync>;

/// An evaluable map `Field -> R` with metadata and an optional analytic
/// derivative rule.
#[derive(Clone)]
pub struct Functional {
    name: String,
    kind: Kind,
    deriv: Option<DerivRule>,
}

impl std::fmt::Debug for Functional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Functional({})", self.name)
    }
}

impl Functional {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// Kind tag plus the local jet order, for report headers.
    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Local { density, window } => {
                if window.covers_circle() {
                    format!("local(order {})", density.jet_order())
                } else {
                    format!(
                        "local(order {}, window center {:.3} radius {:.3})",
                        density.jet_order(),
                        window.center(),
                        window.radius()
                    )
                }
            }
            Kind::BilinearKernel { .. } => "bilinear_kernel".to_string(),
            Kind::Analytic { .. } => "analytic".to_string(),
            Kind::Counterexample { power } => format!("counterexample(N={power})"),
            Kind::UnboundedOrder { .. } => "unbounded_order".to_string(),
        }
    }

    /// Density and window for local functionals.
    pub fn local_density(&self) -> Option<(&JetExpr, &SupportWindow)> {
        match &self.kind {
            Kind::Local { density, window } => Some((density, window)),
            _ => None,
        }
    }

    /// The bilinear kernel, when this functional has one.
    pub fn bilinear_kernel(&self) -> Option<&Kernel2> {
        match &self.kind {
            Kind::BilinearKernel { kernel } => Some(kernel),
            _ => None,
        }
    }

    /// Evaluate the functional. Deterministic and pure.
    pub fn eval(&self, phi: &Field) -> Result<f64> {
        match &self.kind {
            Kind::Local { density, .. } => eval_local(density, phi),
            Kind::BilinearKernel { kernel } => kernel.eval(phi),
            Kind::Analytic { eval } => eval(phi),
            Kind::Counterexample { power } => eval_counterexample(*power, phi),
            Kind::UnboundedOrder { weight } => eval_unbounded(weight, phi),
        }
    }

    /// Analytic k-th directional derivative, when a rule is attached for
    /// that order. `None` means "no rule"; numerical engines still apply.
    pub fn analytic_derivative(&self, phi: &Field, dirs: &[&Field]) -> Option<Result<f64>> {
        self.deriv.as_ref().and_then(|rule| rule(phi, dirs))
    }
}

/// Symmetric kernel `g(x,y) = Σ_i a_i(x) b_i(y)` stored as separable terms.
/// Terms must come in symmetric pairs (or be of the form a⊗a).
#[derive(Clone)]
pub struct Kernel2 {
    terms: Vec<(Field, Field)>,
}

impl Kernel2 {
    pub fn new(terms: Vec<(Field, Field)>) -> Self {
        Self { terms }
    }

    pub fn value_at_nodes(&self, ix: usize, iy: usize) -> f64 {
        self.terms
            .iter()
            .map(|(a, b)| a.value_at_node(ix) * b.value_at_node(iy))
            .sum()
    }

    /// `∫∫ g(x,y) ψ(x) χ(y) dx dy`.
    pub fn pair(&self, psi: &Field, chi: &Field) -> f64 {
        self.terms
            .iter()
            .map(|(a, b)| a.inner(psi) * b.inner(chi))
            .sum()
    }

    fn eval(&self, phi: &Field) -> Result<f64> {
        Ok(self.pair(phi, phi))
    }
}

/// Build `F(ψ) = ∫ f(j^k_x ψ) χ_window(x) dx`. A full-circle window needs no
/// factor; otherwise a smooth plateau (1 inside half the radius, 0 outside)
/// is folded into the density as a coefficient field.
pub fn make_local(density: JetExpr, window: SupportWindow) -> Result<Functional> {
    make_local_named("local", density, window)
}

/// [`make_local`] with an explicit report name.
pub fn make_local_named(
    name: &str,
    density: JetExpr,
    window: SupportWindow,
) -> Result<Functional> {
    let folded = if window.covers_circle() {
        density
    } else {
        let grid = density.grid().ok_or_else(|| {
            Error::Config(
                "windowed local functionals need a coefficient field to fix the grid".into(),
            )
        })?;
        let chi = Field::plateau(window.center(), window.radius() / 2.0, window.radius(), grid)?;
        JetExpr::coeff("window_factor", chi)?.mul(density)?
    };
    Ok(Functional {
        name: name.to_string(),
        kind: Kind::Local {
            density: folded,
            window,
        },
        deriv: None,
    })
}

fn eval_local(density: &JetExpr, phi: &Field) -> Result<f64> {
    if let Some(g) = density.grid() {
        if g != phi.grid() {
            return Err(Error::GridMismatch(g.n_points(), phi.grid().n_points()));
        }
    }
    let k = density.jet_order();
    let stack = derivative_stack(phi, k)?;
    let grid = phi.grid();
    let mut acc = 0.0;
    for (i, x) in grid.points().enumerate() {
        acc += density.evaluate_at_node(i, x, &stack);
    }
    Ok(acc * grid.spacing())
}

/// Sobolev embedding constant for this crate's Fourier convention:
/// `C = (1/2π) (Σ_{|n| ≤ Nyquist} (1+n²)^{-2})^{1/2}`, the Cauchy-Schwarz
/// bound giving `‖f‖_{C⁰} ≤ C ‖f‖_{H²}`.
pub fn embedding_constant(grid: GridSpec) -> f64 {
    let sum: f64 = (0..grid.n_points())
        .map(|i| {
            let n = grid.frequency(i) as f64;
            (1.0 + n * n).powi(-2)
        })
        .sum();
    sum.sqrt() / GridSpec::CIRCUMFERENCE
}

fn eval_counterexample(power: u32, phi: &Field) -> Result<f64> {
    let chi = counterexample_chi(phi);
    let total = phi.integrate();
    Ok((1.0 - chi) * total + chi * total.powi(power as i32))
}

/// `χ(f) = step(‖1-f‖²_{H²})`, equal to 1 near the constant function 1 and
/// 0 once `‖1-f‖_{C⁰} ≥ 1`; thresholds 1/(3C²) and 1/(2C²) from the
/// embedding constant.
pub fn counterexample_chi(phi: &Field) -> f64 {
    let c = embedding_constant(phi.grid());
    let a = 1.0 / (3.0 * c * c);
    let b = 1.0 / (2.0 * c * c);
    let diff = &Field::constant(phi.grid(), 1.0) - phi;
    let t = diff.sobolev_norm(1).powi(2);
    smooth_step((t - a) / (b - a))
}

/// The non-local partially additive functional
/// `F_nl(f) = (1-χ(f)) ∫f + χ(f) (∫f)^N`.
pub fn make_counterexample(power: u32) -> Result<Functional> {
    if power < 2 {
        return Err(Error::Config("counterexample needs N >= 2".into()));
    }
    Ok(Functional {
        name: "F_nl".to_string(),
        kind: Kind::Counterexample { power },
        deriv: None,
    })
}

/// Value-space partition of unity: `χ_n(t) = β(t-n) / Σ_m β(t-m)` with β the
/// standard bump on (-1, 1); only the two neighbouring integers contribute.
pub fn value_partition(n: i64, t: f64) -> f64 {
    let num = bump_profile(t - n as f64);
    if num == 0.0 {
        return 0.0;
    }
    num / value_partition_denominator(t)
}

fn value_partition_denominator(t: f64) -> f64 {
    let lo = t.floor() as i64;
    bump_profile(t - lo as f64) + bump_profile(t - (lo + 1) as f64)
}

/// d/dt of `χ_n(t)`.
pub fn value_partition_derivative(n: i64, t: f64) -> f64 {
    fn beta_prime(s: f64) -> f64 {
        if s.abs() < 1.0 {
            let d = 1.0 - s * s;
            bump_profile(s) * (-2.0 * s) / (d * d)
        } else {
            0.0
        }
    }
    let num = bump_profile(t - n as f64);
    let dnum = beta_prime(t - n as f64);
    if num == 0.0 && dnum == 0.0 {
        return 0.0;
    }
    let lo = t.floor() as i64;
    let den = bump_profile(t - lo as f64) + bump_profile(t - (lo + 1) as f64);
    let dden = beta_prime(t - lo as f64) + beta_prime(t - (lo + 1) as f64);
    (dnum * den - num * dden) / (den * den)
}

fn eval_unbounded(weight: &Field, phi: &Field) -> Result<f64> {
    if weight.grid() != phi.grid() {
        return Err(Error::GridMismatch(
            weight.grid().n_points(),
            phi.grid().n_points(),
        ));
    }
    let stack = unbounded_stack(phi)?;
    let grid = phi.grid();
    let mut acc = 0.0;
    for i in 0..grid.n_points() {
        let t = phi.value_at_node(i);
        let lo = t.floor() as i64;
        for n in [lo, lo + 1] {
            let w = value_partition(n, t);
            if w != 0.0 {
                let order = n.unsigned_abs() as usize;
                acc += w * stack[order].value_at_node(i) * weight.value_at_node(i);
            }
        }
    }
    Ok(acc * grid.spacing())
}

/// Derivative stack tall enough for every band the field's range can touch.
fn unbounded_stack(phi: &Field) -> Result<Vec<Field>> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in phi.samples() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let max_band = (lo.floor().abs()).max(hi.ceil().abs()) as usize + 1;
    let guard = phi.grid().aliasing_guard();
    if max_band > guard {
        return Err(Error::RangeBeyondGuard { lo, hi, guard });
    }
    derivative_stack(phi, max_band)
}

/// The built-in functional zoo on the given grid:
///
/// * `F(φ) = ∫ w φ³ dx` — local, order 0;
/// * `G(φ) = ∫∫ g(x,y) φ(x) φ(y)` — bilocal kernel, not local;
/// * `H(φ) = ∫ g_H (φ′)² dx` — local, order 1;
/// * `I(φ) = ∫ w e^φ dx` — local, order 0;
/// * `J(φ) = exp(∫ w φ dx)` — not local;
/// * `K(φ) = ∫ w sin(φ) dx` — local, order 0;
/// * `unbounded_order` — local in the generalized sense, with no uniform
///   distribution order.
///
/// Each carries its analytic derivative rules (orders 1-3) where closed
/// forms exist; the unbounded-order functional carries its first-order rule.
pub fn zoo(grid: GridSpec) -> Result<Vec<Functional>> {
    let w = zoo_weight(grid);
    let gh = Field::from_fn(grid, |x| 1.0 + 0.4 * x.cos());

    let mut out = Vec::new();

    // F(φ) = ∫ w φ³.
    {
        let density = JetExpr::coeff("w", w.clone())?.mul(JetExpr::u(0).powi(3))?;
        let mut f = make_local_named("F", density, SupportWindow::full())?;
        let w_ = w.clone();
        f.deriv = Some(Arc::new(move |phi, dirs| {
            // D^k F = 3!/(3-k)! ∫ w φ^{3-k} v₁…v_k, zero beyond k = 3.
            if dirs.len() > 3 {
                return Some(Ok(0.0));
            }
            let k = dirs.len() as i32;
            let coef = match k {
                1 => 3.0,
                2 => 6.0,
                3 => 6.0,
                _ => unreachable!(),
            };
            let mut integrand = w_.hadamard(&phi.map(|v| v.powi(3 - k)));
            for d in dirs {
                integrand = integrand.hadamard(d);
            }
            Some(Ok(coef * integrand.integrate()))
        }));
        out.push(f);
    }

    // G(φ) = ∫∫ g(x,y) φ(x)φ(y) with g = b₁⊗b₂ + b₂⊗b₁ + s⊗s.
    {
        let kernel = zoo_kernel(grid)?;
        let k2 = kernel.clone();
        let deriv: DerivRule = Arc::new(move |phi, dirs| match dirs {
            [v] => Some(Ok(2.0 * k2.pair(phi, v))),
            [v, u] => Some(Ok(k2.pair(v, u) + k2.pair(u, v))),
            [_, _, _] => Some(Ok(0.0)),
            _ => Some(Ok(0.0)),
        });
        out.push(Functional {
            name: "G".to_string(),
            kind: Kind::BilinearKernel { kernel },
            deriv: Some(deriv),
        });
    }

    // H(φ) = ∫ g_H (φ′)².
    {
        let density = JetExpr::coeff("g_H", gh.clone())?.mul(JetExpr::u(1).powi(2))?;
        let mut f = make_local_named("H", density, SupportWindow::full())?;
        let gh_ = gh.clone();
        f.deriv = Some(Arc::new(move |phi, dirs| {
            let dp = |f: &Field| f.derivative(1);
            let res = (|| match dirs {
                [v] => Ok(2.0 * gh_.hadamard(&dp(phi)?).inner(&dp(v)?)),
                [v, u] => Ok(2.0 * gh_.hadamard(&dp(v)?).inner(&dp(u)?)),
                _ => Ok(0.0),
            })();
            Some(res)
        }));
        out.push(f);
    }

    // I(φ) = ∫ w e^φ.
    {
        let density = JetExpr::coeff("w", w.clone())?.mul(JetExpr::u(0).exp())?;
        let mut f = make_local_named("I", density, SupportWindow::full())?;
        let w_ = w.clone();
        f.deriv = Some(Arc::new(move |phi, dirs| {
            let mut integrand = w_.hadamard(&phi.map(f64::exp));
            for d in dirs {
                integrand = integrand.hadamard(d);
            }
            Some(Ok(integrand.integrate()))
        }));
        out.push(f);
    }

    // J(φ) = exp(∫ w φ).
    {
        let w_eval = w.clone();
        let eval = Arc::new(move |phi: &Field| Ok(w_eval.inner(phi).exp()));
        let w_ = w.clone();
        let deriv: DerivRule = Arc::new(move |phi, dirs| {
            let mut acc = w_.inner(phi).exp();
            for d in dirs {
                acc *= w_.inner(d);
            }
            Some(Ok(acc))
        });
        out.push(Functional {
            name: "J".to_string(),
            kind: Kind::Analytic { eval },
            deriv: Some(deriv),
        });
    }

    // K(φ) = ∫ w sin(φ).
    {
        let density = JetExpr::coeff("w", w.clone())?.mul(JetExpr::u(0).sin())?;
        let mut f = make_local_named("K", density, SupportWindow::full())?;
        let w_ = w.clone();
        f.deriv = Some(Arc::new(move |phi, dirs| {
            // Derivatives cycle through cos, -sin, -cos.
            let base = match dirs.len() {
                1 => phi.map(f64::cos),
                2 => phi.map(|v| -v.sin()),
                3 => phi.map(|v| -v.cos()),
                _ => return None,
            };
            let mut integrand = w_.hadamard(&base);
            for d in dirs {
                integrand = integrand.hadamard(d);
            }
            Some(Ok(integrand.integrate()))
        }));
        out.push(f);
    }

    // Unbounded-order functional.
    {
        let weight = unbounded_weight(grid)?;
        let w_ = weight.clone();
        let deriv: DerivRule = Arc::new(move |phi, dirs| {
            let [v] = dirs else { return None };
            let res = (|| {
                let stack = unbounded_stack(phi)?;
                let vstack = derivative_stack(v, stack.len() - 1)?;
                let grid = phi.grid();
                let mut acc = 0.0;
                for i in 0..grid.n_points() {
                    let t = phi.value_at_node(i);
                    let lo = t.floor() as i64;
                    for n in [lo, lo + 1] {
                        let order = n.unsigned_abs() as usize;
                        let chi = value_partition(n, t);
                        let dchi = value_partition_derivative(n, t);
                        if chi != 0.0 || dchi != 0.0 {
                            acc += (chi * vstack[order].value_at_node(i)
                                + dchi * v.value_at_node(i) * stack[order].value_at_node(i))
                                * w_.value_at_node(i);
                        }
                    }
                }
                Ok(acc * grid.spacing())
            })();
            Some(res)
        });
        out.push(Functional {
            name: "unbounded_order".to_string(),
            kind: Kind::UnboundedOrder { weight },
            deriv: Some(deriv),
        });
    }

    Ok(out)
}

/// Shared smooth weight for F, I, J, K: a strictly positive trigonometric
/// polynomial, exactly band-limited.
pub fn zoo_weight(grid: GridSpec) -> Field {
    Field::from_fn(grid, |x| 0.7 + 0.3 * x.sin() + 0.15 * (2.0 * x).cos())
}

/// Weight of the unbounded-order functional: Poisson-kernel-like spectrum
/// `ĝ(n) = r^|n|` so that oscillatory pairings decay slowly enough to
/// measure order growth, band-limited within the guard.
pub fn unbounded_weight(grid: GridSpec) -> Result<Field> {
    let r = 0.85f64;
    let band = (grid.aliasing_guard() / 2).min(40);
    let coeffs: Vec<num_complex::Complex64> = (-(band as i64)..=band as i64)
        .map(|n| num_complex::Complex64::new(r.powi(n.unsigned_abs() as i32), 0.0))
        .collect();
    Field::from_spectrum(grid, band, &coeffs)
}

fn zoo_kernel(grid: GridSpec) -> Result<Kernel2> {
    let w1 = SupportWindow::new(1.0, 0.9)?;
    let w2 = SupportWindow::new(4.0, 0.9)?;
    let b1 = Field::gauss_bump(&w1, grid)?;
    let b2 = Field::gauss_bump(&w2, grid)?;
    let s = Field::from_fn(grid, |x| 0.5 + 0.2 * x.cos());
    Ok(Kernel2::new(vec![
        (b1.clone(), b2.clone()),
        (b2, b1),
        (s.clone(), s),
    ]))
}

/// Find a zoo member by name.
pub fn find<'z>(zoo: &'z [Functional], name: &str) -> Option<&'z Functional> {
    zoo.iter().find(|f| f.name() == name)
}

#[cfg(test)]
impl Functional {
    /// A constant functional, for exercising degenerate engine paths.
    pub(crate) fn constant_for_tests(v: f64) -> Functional {
        Functional {
            name: "const".to_string(),
            kind: Kind::Analytic {
                eval: Arc::new(move |_| Ok(v)),
            },
            deriv: None,
        }
    }
}
