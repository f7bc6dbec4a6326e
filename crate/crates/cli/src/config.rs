//! Run configuration: defaults, the flat key=value config file, and flag
//! precedence (flags override file entries, which override defaults).

use std::path::PathBuf;

use fieldlab::{Error, GridSpec, Result};

/// Named tolerances, overridable with `--tol NAME=VALUE`.
#[derive(Debug, Clone)]
pub struct Tolerances {
    pub derivatives: f64,
    pub additivity: f64,
    pub diagonal: f64,
    pub ftc: f64,
    pub poincare1: f64,
    pub poincare2: f64,
    pub exactness: f64,
    pub el_gradient: f64,
    pub smoothness_tail: f64,
    pub counterexample_value: f64,
    pub peetre_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            derivatives: 1e-6,
            additivity: 1e-9,
            diagonal: 1e-6,
            ftc: 1e-7,
            poincare1: 1e-8,
            poincare2: 1e-7,
            exactness: 1e-8,
            el_gradient: 1e-5,
            smoothness_tail: 1e-8,
            counterexample_value: 1e-8,
            peetre_factor: 3.0,
        }
    }
}

impl Tolerances {
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0) {
            return Err(Error::Config(format!("tolerance {name} must be positive")));
        }
        match name {
            "derivatives" => self.derivatives = value,
            "additivity" => self.additivity = value,
            "diagonal" => self.diagonal = value,
            "ftc" => self.ftc = value,
            "poincare1" => self.poincare1 = value,
            "poincare2" => self.poincare2 = value,
            "exactness" => self.exactness = value,
            "el_gradient" => self.el_gradient = value,
            "smoothness_tail" => self.smoothness_tail = value,
            "counterexample_value" => self.counterexample_value = value,
            "peetre_factor" => self.peetre_factor = value,
            _ => return Err(Error::Config(format!("unknown tolerance {name:?}"))),
        }
        Ok(())
    }

    /// Deterministic listing for report headers.
    pub fn describe(&self) -> String {
        format!(
            "derivatives={} additivity={} diagonal={} ftc={} poincare1={} \
             poincare2={} exactness={} el_gradient={} smoothness_tail={} \
             counterexample_value={} peetre_factor={}",
            self.derivatives,
            self.additivity,
            self.diagonal,
            self.ftc,
            self.poincare1,
            self.poincare2,
            self.exactness,
            self.el_gradient,
            self.smoothness_tail,
            self.counterexample_value,
            self.peetre_factor
        )
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub seed: u64,
    pub out: PathBuf,
    /// Suite selection; `None` means everything.
    pub suite: Option<Vec<String>>,
    pub tol: Tolerances,
    pub n_power: u32,
    pub lambda: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(256).expect("default grid size"),
            seed: 42,
            out: PathBuf::from("out"),
            suite: None,
            tol: Tolerances::default(),
            n_power: 2,
            lambda: None,
        }
    }
}

/// Unresolved overrides collected from the config file and the flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub suite: Option<String>,
    pub tol: Vec<(String, f64)>,
    pub n_power: Option<u32>,
    pub lambda: Option<String>,
}

impl Overrides {
    /// Apply on top of `cfg`; later application wins, so apply the file
    /// first and the flags second.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(n) = self.grid {
            cfg.grid = GridSpec::new(n)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = &self.out {
            cfg.out = p.clone();
        }
        if let Some(raw) = &self.suite {
            let list: Vec<String> = raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            if list.is_empty() {
                return Err(Error::Config("empty suite selection".into()));
            }
            cfg.suite = Some(list);
        }
        for (name, value) in &self.tol {
            cfg.tol.set(name, *value)?;
        }
        if let Some(n) = self.n_power {
            if n < 2 {
                return Err(Error::Config("n_power must be at least 2".into()));
            }
            cfg.n_power = n;
        }
        if let Some(raw) = &self.lambda {
            let mut list = Vec::new();
            for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let v: f64 = part
                    .parse()
                    .map_err(|_| Error::Config(format!("malformed lambda {part:?}")))?;
                list.push(v);
            }
            if list.is_empty() {
                return Err(Error::Config("empty lambda list".into()));
            }
            cfg.lambda = Some(list);
        }
        Ok(())
    }
}

/// Parse `--tol NAME=VALUE` arguments.
pub fn parse_tol_flags(raw: &[String]) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for item in raw {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--tol needs NAME=VALUE, got {item:?}")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("malformed tolerance value {value:?}")))?;
        out.push((name.trim().to_string(), v));
    }
    Ok(out)
}

/// Parse the plain-text config file: `key = value` lines, `#` comments.
/// Unknown keys are rejected.
pub fn parse_config_file(text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("config line {}: {what}", lineno + 1));
        match key {
            "grid" => o.grid = Some(value.parse().map_err(|_| bad("malformed grid"))?),
            "seed" => o.seed = Some(value.parse().map_err(|_| bad("malformed seed"))?),
            "out" => o.out = Some(PathBuf::from(value)),
            "suite" => o.suite = Some(value.to_string()),
            "n_power" => o.n_power = Some(value.parse().map_err(|_| bad("malformed n_power"))?),
            "lambda" => o.lambda = Some(value.to_string()),
            _ => {
                if let Some(tol_name) = key.strip_prefix("tol.") {
                    let v: f64 = value.parse().map_err(|_| bad("malformed tolerance"))?;
                    o.tol.push((tol_name.to_string(), v));
                } else {
                    return Err(Error::Config(format!(
                        "config line {}: unknown key {key:?}",
                        lineno + 1
                    )));
                }
            }
        }
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_round_trip() {
        let text = "\
# comment
grid = 512
seed = 7
suite = F, G
tol.additivity = 1e-8
n_power = 3
";
        let o = parse_config_file(text).unwrap();
        let mut cfg = RunConfig::default();
        o.apply(&mut cfg).unwrap();
        assert_eq!(cfg.grid.n_points(), 512);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.suite.as_deref(), Some(&["F".to_string(), "G".to_string()][..]));
        assert_eq!(cfg.tol.additivity, 1e-8);
        assert_eq!(cfg.n_power, 3);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(parse_config_file("bogus = 1").is_err());
        assert!(parse_config_file("grid = twelve").is_err());
        assert!(parse_config_file("tol.nonsense = 1e-3")
            .and_then(|o| {
                let mut cfg = RunConfig::default();
                o.apply(&mut cfg)
            })
            .is_err());
        let o = parse_config_file("suite = ,").unwrap();
        let mut cfg = RunConfig::default();
        assert!(o.apply(&mut cfg).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_file("seed = 1\ngrid = 512").unwrap();
        let flags = Overrides {
            seed: Some(99),
            ..Default::default()
        };
        let mut cfg = RunConfig::default();
        file.apply(&mut cfg).unwrap();
        flags.apply(&mut cfg).unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.grid.n_points(), 512);
    }
}
