//! The five verification suites behind the subcommands. Each writes one CSV
//! artifact into the output directory and reports whether every scientific
//! expectation held.

use std::fmt::Write as _;
use std::fs;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fieldlab::engine::{gateaux, DerivativeConfig};
use fieldlab::expr::JetExpr;
use fieldlab::identities::{
    check_el_gradient, check_exactness, check_ftc, check_poincare_first, check_poincare_second,
    density_field, integrate_density,
};
use fieldlab::locality::{standard_phi_samples, LocalityLab, LocalityVerdict};
use fieldlab::peetre::{
    check_peetre_estimate, mollifier, test_jet_determination, test_k_local, vanishing_trial,
    JetDetermination, PointSet,
};
use fieldlab::report::{ProbeReport, Verdict};
use fieldlab::zoo::{make_counterexample, zoo, zoo_weight, Functional};
use fieldlab::{Error, Field, GridSpec, Result};

use crate::config::RunConfig;

/// Outcome of a suite: `clean == true` when every expectation held.
pub struct SuiteOutcome {
    pub clean: bool,
}

fn write_artifact(cfg: &RunConfig, name: &str, body: &str) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join(name), body)?;
    Ok(())
}

fn suite_header(cfg: &RunConfig, command: &str) -> String {
    format!(
        "# command={command}\n# grid={}\n# seed={}\n# tolerances: {}\n",
        cfg.grid.n_points(),
        cfg.seed,
        cfg.tol.describe()
    )
}

/// Filter by suite selection; errors on names that match nothing.
fn select<'a>(
    cfg: &RunConfig,
    available: impl Iterator<Item = &'a str>,
) -> Result<Option<Vec<String>>> {
    let Some(wanted) = &cfg.suite else {
        return Ok(None);
    };
    let names: Vec<String> = available.map(str::to_string).collect();
    for w in wanted {
        if !names.contains(w) {
            return Err(Error::Config(format!(
                "unknown suite entry {w:?}; available: {}",
                names.join(",")
            )));
        }
    }
    Ok(Some(wanted.clone()))
}

fn included(selection: &Option<Vec<String>>, name: &str) -> bool {
    match selection {
        None => true,
        Some(list) => list.iter().any(|s| s == name),
    }
}

/// Analytic-vs-numeric derivative suite over the zoo, orders 1-3.
pub fn cmd_derivatives(cfg: &RunConfig) -> Result<SuiteOutcome> {
    let z = zoo(cfg.grid)?;
    let selection = select(cfg, z.iter().map(|f| f.name()))?;
    let deriv = DerivativeConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trials = 5u32;

    let mut body = suite_header(cfg, "derivatives");
    body.push_str("functional,order,trial,numeric,analytic,residual\n");
    let mut clean = true;
    for f in &z {
        if !included(&selection, f.name()) {
            continue;
        }
        // Keep the unbounded-order functional's range within its guard.
        let amp = if f.name() == "unbounded_order" { 0.8 } else { 1.0 };
        for order in 1..=3usize {
            let mut rows = Vec::new();
            let mut scale = 0.0f64;
            for trial in 0..trials {
                let phi = random_field(cfg.grid, &mut rng).scale(amp);
                let dirs: Vec<Field> = (0..order)
                    .map(|_| random_field(cfg.grid, &mut rng).scale(amp))
                    .collect();
                let dir_refs: Vec<&Field> = dirs.iter().collect();
                let Some(analytic) = f.analytic_derivative(&phi, &dir_refs) else {
                    continue;
                };
                let analytic = analytic?;
                let numeric = gateaux(f, &phi, &dir_refs, &deriv)?;
                scale = scale.max(analytic.abs());
                rows.push((trial, numeric, analytic, (numeric - analytic).abs()));
            }
            let scale = scale.max(1e-12);
            for (trial, numeric, analytic, residual) in rows {
                if residual > cfg.tol.derivatives * scale {
                    clean = false;
                }
                writeln!(
                    body,
                    "{},{order},{trial},{numeric},{analytic},{residual}",
                    f.name()
                )
                .unwrap();
            }
        }
    }
    write_artifact(cfg, "derivatives.csv", &body)?;
    Ok(SuiteOutcome { clean })
}

fn random_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> Field {
    let seed = rng.random_range(0..u64::MAX / 2);
    Field::random(grid, seed, 6, 0.7).expect("band within guard")
}

/// Expected classification of the built-in functionals.
pub fn expected_classification() -> &'static [(&'static str, LocalityVerdict)] {
    &[
        ("F", LocalityVerdict::Local),
        ("G", LocalityVerdict::Nonlocal),
        ("H", LocalityVerdict::Local),
        ("I", LocalityVerdict::Local),
        ("J", LocalityVerdict::Nonlocal),
        ("K", LocalityVerdict::Local),
        ("unbounded_order", LocalityVerdict::Local),
        ("F_nl", LocalityVerdict::Nonlocal),
    ]
}

/// Locality verdicts over the zoo plus the counterexample, checked against
/// the expected classification table.
pub fn cmd_locality(cfg: &RunConfig) -> Result<SuiteOutcome> {
    if cfg.grid.n_points() < 256 {
        return Err(Error::Config(
            "locality probes need a grid of at least 256 points".into(),
        ));
    }
    let mut functionals: Vec<Functional> = zoo(cfg.grid)?;
    functionals.push(make_counterexample(cfg.n_power)?);
    let selection = select(cfg, functionals.iter().map(|f| f.name()))?;

    let mut lab = LocalityLab::new(cfg.grid);
    lab.additivity_tol = cfg.tol.additivity;
    lab.diagonal_tol = cfg.tol.diagonal;
    lab.smoothness_tail_tol = cfg.tol.smoothness_tail;
    let samples = standard_phi_samples(cfg.grid, cfg.seed);

    let mut body = suite_header(cfg, "locality");
    let mut clean = true;
    let mut rows = String::new();
    rows.push_str(ProbeReport::csv_header());
    rows.push('\n');
    let mut summary = String::new();
    summary.push_str("functional,verdict,expected,matches,failing_conditions\n");
    for f in &functionals {
        if !included(&selection, f.name()) {
            continue;
        }
        body.push_str(&format!("# {} : {}\n", f.name(), f.describe()));
        let report = lab.locality_verdict(f, &samples, 8, cfg.seed)?;
        for c in &report.conditions {
            for row in c.csv_rows() {
                rows.push_str(&row);
                rows.push('\n');
            }
        }
        let expected = expected_classification()
            .iter()
            .find(|(n, _)| *n == f.name())
            .map(|(_, v)| *v);
        let matches = expected.map(|e| e == report.verdict).unwrap_or(true);
        if !matches {
            clean = false;
        }
        writeln!(
            summary,
            "{},{},{},{},{}",
            f.name(),
            report.verdict,
            expected.map(|e| e.as_str()).unwrap_or("unspecified"),
            matches,
            report.failing_conditions.join(";")
        )
        .unwrap();
    }
    body.push_str(&rows);
    body.push_str(&summary);
    write_artifact(cfg, "locality.csv", &body)?;
    Ok(SuiteOutcome { clean })
}

/// Named densities used by the identity suites.
fn builtin_densities(grid: GridSpec) -> Result<Vec<(String, JetExpr)>> {
    let h = Field::from_fn(grid, |x| 0.5 + 0.3 * x.sin());
    let g = Field::from_fn(grid, |x| 1.0 + 0.4 * x.cos());
    let w = zoo_weight(grid);
    Ok(vec![
        ("quadratic".into(), JetExpr::u(0).powi(2)),
        (
            "kinetic".into(),
            JetExpr::coeff("g", g.clone())?.mul(JetExpr::u(1).powi(2))?,
        ),
        (
            "phi4_kinetic".into(),
            JetExpr::coeff("h", h)?
                .mul(JetExpr::u(0).powi(4))?
                .add(JetExpr::coeff("g", g)?.mul(JetExpr::u(1).powi(2))?)?,
        ),
        (
            "sine".into(),
            JetExpr::coeff("w", w)?.mul(JetExpr::u(0).sin())?,
        ),
    ])
}

/// Integral identities: FTC over the zoo, the two Poincaré identities and
/// the Euler-Lagrange gradient over the built-in densities, and exactness
/// of total derivatives.
pub fn cmd_identities(cfg: &RunConfig) -> Result<SuiteOutcome> {
    let available = ["ftc", "poincare1", "poincare2", "el_gradient", "exactness"];
    let selection = select(cfg, available.iter().copied())?;
    let deriv = DerivativeConfig::default();
    let densities = builtin_densities(cfg.grid)?;
    let mut body = suite_header(cfg, "identities");
    body.push_str("identity,case,residual,tolerance,pass\n");
    let mut clean = true;
    let mut push_row = |body: &mut String,
                        clean: &mut bool,
                        identity: &str,
                        case: &str,
                        residual: f64,
                        tol: f64| {
        let pass = residual <= tol;
        if !pass {
            *clean = false;
        }
        writeln!(body, "{identity},{case},{residual},{tol},{pass}").unwrap();
    };

    if included(&selection, "ftc") {
        let z = zoo(cfg.grid)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for f in &z {
            let amp = if f.name() == "unbounded_order" { 0.6 } else { 1.0 };
            let phi = random_field(cfg.grid, &mut rng).scale(amp);
            let psi = random_field(cfg.grid, &mut rng).scale(amp);
            let r = check_ftc(f, &phi, &psi, 16, &deriv)?;
            push_row(&mut body, &mut clean, "ftc", f.name(), r, cfg.tol.ftc);
        }
    }
    if included(&selection, "poincare1") {
        for (name, density) in &densities {
            let samples: Vec<Field> = (0..10)
                .map(|i| Field::random(cfg.grid, cfg.seed.wrapping_add(i), 10, 0.75))
                .collect::<Result<_>>()?;
            let r = check_poincare_first(density, &samples)?;
            push_row(&mut body, &mut clean, "poincare1", name, r, cfg.tol.poincare1);
        }
    }
    if included(&selection, "poincare2") {
        for (name, density) in &densities {
            let mut worst = 0.0f64;
            for i in 0..5u64 {
                let psi1 = Field::random(cfg.grid, cfg.seed.wrapping_add(2 * i), 10, 0.75)?;
                let psi2 = Field::random(cfg.grid, cfg.seed.wrapping_add(2 * i + 1), 10, 0.75)?;
                worst = worst.max(check_poincare_second(density, &psi1, &psi2, 16)?);
            }
            push_row(&mut body, &mut clean, "poincare2", name, worst, cfg.tol.poincare2);
        }
    }
    if included(&selection, "el_gradient") {
        for (name, density) in &densities {
            let samples: Vec<Field> = (0..2)
                .map(|i| Field::random(cfg.grid, cfg.seed.wrapping_add(50 + i), 8, 0.7))
                .collect::<Result<_>>()?;
            let r = check_el_gradient(density, &samples, &deriv)?;
            push_row(&mut body, &mut clean, "el_gradient", name, r, cfg.tol.el_gradient);
        }
    }
    if included(&selection, "exactness") {
        let w = zoo_weight(cfg.grid);
        let cases: Vec<(&str, JetExpr)> = vec![
            ("u0_sq", JetExpr::u(0).powi(2)),
            ("sin_u0", JetExpr::u(0).sin()),
            ("w_u0_cubed", JetExpr::coeff("w", w)?.mul(JetExpr::u(0).powi(3))?),
            ("u0_u1", JetExpr::u(0).mul(JetExpr::u(1))?),
        ];
        let samples: Vec<Field> = (0..5)
            .map(|i| {
                Field::random(cfg.grid, cfg.seed.wrapping_add(80 + i), 6, 0.6)
                    .map(|f| f.scale(0.6))
            })
            .collect::<Result<_>>()?;
        for (name, t) in &cases {
            let scale = samples
                .iter()
                .map(|psi| integrate_density(t, psi).map(f64::abs))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(1.0f64, f64::max);
            let r = check_exactness(t, &samples)?;
            push_row(
                &mut body,
                &mut clean,
                "exactness",
                name,
                r / scale,
                cfg.tol.exactness,
            );
        }
    }
    write_artifact(cfg, "identities.csv", &body)?;
    Ok(SuiteOutcome { clean })
}

/// Mollifier geometry, the quantitative cutoff estimate, jet determination
/// of the Euler-Lagrange density, and k-local map probes.
pub fn cmd_peetre(cfg: &RunConfig) -> Result<SuiteOutcome> {
    let available = ["mollifier", "ratio", "determination", "k_local"];
    let selection = select(cfg, available.iter().copied())?;
    let grid = cfg.grid;
    let lambdas: Vec<f64> = match &cfg.lambda {
        Some(list) => list.clone(),
        None => (1..=6)
            .map(|j| 0.5f64.powi(j))
            .filter(|&l| l >= 16.0 * grid.spacing())
            .collect(),
    };
    if lambdas.is_empty() {
        return Err(Error::Config(
            "no workable lambda values for this grid; pass --lambda or enlarge --grid".into(),
        ));
    }
    let mut body = suite_header(cfg, "peetre");
    body.push_str("check,case,value,bound,pass\n");
    let mut clean = true;

    if included(&selection, "mollifier") {
        for points in [vec![1.0], vec![1.0, 4.0]] {
            let snapped: Vec<f64> = points
                .iter()
                .map(|&p| grid.point(grid.nearest_node(p)))
                .collect();
            let xs = PointSet::new(grid, snapped)?;
            for &lambda in &lambdas {
                let chi = mollifier(&xs, lambda, grid)?;
                let mut worst = 0.0f64;
                for (i, x) in grid.points().enumerate() {
                    let d = xs.distance(x);
                    if d <= lambda / 8.0 {
                        worst = worst.max((chi.value_at_node(i) - 1.0).abs());
                    } else if d >= lambda {
                        worst = worst.max(chi.value_at_node(i).abs());
                    }
                }
                let pass = worst <= 1e-12;
                if !pass {
                    clean = false;
                }
                writeln!(
                    body,
                    "mollifier,|X|={} lambda={lambda},{worst},1e-12,{pass}",
                    xs.len()
                )
                .unwrap();
            }
        }
    }
    if included(&selection, "ratio") {
        let xs = PointSet::new(grid, vec![grid.point(grid.nearest_node(1.0))])?;
        for m in 0..=2usize {
            let trials: Vec<Field> = (0..3)
                .map(|i| vanishing_trial(&xs, m, grid, cfg.seed.wrapping_add(i)))
                .collect::<Result<_>>()?;
            let (table, overall) = check_peetre_estimate(&xs, m, &lambdas, &trials, grid)?;
            for row in &table {
                writeln!(
                    body,
                    "ratio,m={m} lambda={},{},,",
                    row.lambda, row.max_ratio
                )
                .unwrap();
            }
            let bound = cfg.tol.peetre_factor * table[0].max_ratio.max(1e-300);
            let pass = overall <= bound;
            if !pass {
                clean = false;
            }
            writeln!(body, "ratio,m={m} overall,{overall},{bound},{pass}").unwrap();
        }
    }
    if included(&selection, "determination") {
        // Spectrally clean witness fields need at least 512 points.
        let det_grid = if grid.n_points() >= 512 {
            grid
        } else {
            GridSpec::new(512)?
        };
        let densities = builtin_densities(det_grid)?;
        let el = densities
            .iter()
            .find(|(n, _)| n == "phi4_kinetic")
            .unwrap()
            .1
            .euler_lagrange()
            .expr;
        let map = move |phi: &Field| density_field(&el, phi);
        let xs = PointSet::new(
            det_grid,
            vec![
                det_grid.point(det_grid.nearest_node(1.5)),
                det_grid.point(det_grid.nearest_node(4.2)),
            ],
        )?;
        let outcome = test_jet_determination(&map, &[0, 1, 2, 3], &xs, det_grid, 3, cfg.seed)?;
        let (desc, pass) = match &outcome {
            JetDetermination::Determined { order: 2, witness } => {
                if let Some(w) = witness {
                    writeln!(
                        body,
                        "determination,witness order=1 at x={} gap,{},,",
                        w.at, w.density_gap
                    )
                    .unwrap();
                }
                ("determined at 2".to_string(), true)
            }
            JetDetermination::Determined { order, .. } => (format!("determined at {order}"), false),
            JetDetermination::NotDetermined { up_to } => {
                (format!("not determined up to {up_to}"), false)
            }
        };
        if !pass {
            clean = false;
        }
        writeln!(body, "determination,el_density,{desc},determined at 2,{pass}").unwrap();

        let integral_map =
            |phi: &Field| Ok(Field::constant(phi.grid(), phi.integrate()));
        let outcome =
            test_jet_determination(&integral_map, &[0, 1, 2], &xs, det_grid, 3, cfg.seed)?;
        let pass = matches!(outcome, JetDetermination::NotDetermined { .. });
        if !pass {
            clean = false;
        }
        writeln!(
            body,
            "determination,integral_map,not jet-determined,{pass},{pass}"
        )
        .unwrap();
    }
    if included(&selection, "k_local") {
        let weight = Field::from_fn(grid, |x| 1.0 + 0.3 * x.cos());
        let product_map = move |phi: &Field, pts: &[f64]| {
            let d = weight.hadamard(&phi.hadamard(phi));
            let mut acc = 1.0;
            for &p in pts {
                acc *= d.value_at(p)?;
            }
            Ok(acc)
        };
        let r = test_k_local(&product_map, 2, grid, 8, cfg.seed)?;
        let pass = r.verdict == Verdict::Pass;
        if !pass {
            clean = false;
        }
        writeln!(
            body,
            "k_local,product_of_densities,{},pass,{pass}",
            r.max_residual
        )
        .unwrap();
        let bad = |phi: &Field, pts: &[f64]| Ok(phi.value_at(pts[0])? * phi.integrate());
        let r = test_k_local(&bad, 1, grid, 8, cfg.seed)?;
        let pass = r.verdict == Verdict::Fail;
        if !pass {
            clean = false;
        }
        writeln!(
            body,
            "k_local,far_field_term,{},fail,{pass}",
            r.max_residual
        )
        .unwrap();
    }
    write_artifact(cfg, "peetre.csv", &body)?;
    Ok(SuiteOutcome { clean })
}

/// The counterexample suite: partial additivity passes, the Hammerstein
/// witness at φ₂ = 1 fails loudly, and the glued value at the constant
/// function matches (2π)^N. The witness is printed to stdout.
pub fn cmd_counterexample(cfg: &RunConfig) -> Result<SuiteOutcome> {
    if cfg.grid.n_points() < 256 {
        return Err(Error::Config(
            "counterexample probes need a grid of at least 256 points".into(),
        ));
    }
    let f_nl = make_counterexample(cfg.n_power)?;
    let mut lab = LocalityLab::new(cfg.grid);
    lab.additivity_tol = cfg.tol.additivity;
    let mut body = suite_header(cfg, "counterexample");
    body.push_str("check,value,expected,pass\n");
    let mut clean = true;

    let partial = lab.test_partial_additivity(&f_nl, 50, cfg.seed)?;
    let pass = partial.verdict == Verdict::Pass;
    if !pass {
        clean = false;
    }
    writeln!(
        body,
        "partial_additivity,{},residual<= {}*scale,{pass}",
        partial.max_residual,
        cfg.tol.additivity
    )
    .unwrap();

    let (witness, oracle) = lab.counterexample_witness(&f_nl, cfg.n_power)?;
    let pass = witness.verdict == Verdict::Fail
        && witness.max_residual >= 0.1 * witness.scale;
    if !pass {
        clean = false;
    }
    writeln!(
        body,
        "hammerstein_witness,{},>=0.1*scale={},{pass}",
        witness.max_residual,
        0.1 * witness.scale
    )
    .unwrap();
    println!("Hammerstein failure witness (N = {}):", cfg.n_power);
    for (k, v) in &witness.parameters {
        println!("  {k} = {v}");
    }
    println!(
        "  residual = {:.6e} (scale {:.6e}, binomial oracle {:.6e})",
        witness.max_residual, witness.scale, oracle
    );

    let one = Field::constant(cfg.grid, 1.0);
    let value = f_nl.eval(&one)?;
    let expected = TAU.powi(cfg.n_power as i32);
    let rel = (value - expected).abs() / expected;
    let pass = rel <= cfg.tol.counterexample_value;
    if !pass {
        clean = false;
    }
    writeln!(body, "value_at_one,{value},{expected},{pass}").unwrap();
    println!("F_nl(1) = {value} (expected (2*pi)^{} = {expected})", cfg.n_power);

    write_artifact(cfg, "counterexample.csv", &body)?;
    Ok(SuiteOutcome { clean })
}
