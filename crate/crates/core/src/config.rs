//! Flat key-value configuration files: one `key = value` per line,
//! `#` comments, unknown and missing keys are errors. Keys match the
//! configuration field names exactly; `default-config` emits a fully
//! commented file that parses back to the built-in defaults.

use crate::model::{
    AlphaForm, CrossDiffusion, EpidemicParams, InitialConditions, LockdownSignal, SigmaForm,
    SimulationConfig, TwoRegionGrid,
};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigFileError {
    Io(String),
    ParseError { line: usize, reason: String },
    UnknownKey { line: usize, key: String },
    MissingKey { key: &'static str },
    DuplicateKey { line: usize, key: String },
    Invalid(crate::model::ConfigError),
}

impl fmt::Display for ConfigFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigFileError::Io(e) => write!(f, "io error: {}", e),
            ConfigFileError::ParseError { line, reason } => {
                write!(f, "parse error at line {}: {}", line, reason)
            }
            ConfigFileError::UnknownKey { line, key } => {
                write!(f, "unknown key \"{}\" at line {}", key, line)
            }
            ConfigFileError::MissingKey { key } => write!(f, "missing key \"{}\"", key),
            ConfigFileError::DuplicateKey { line, key } => {
                write!(f, "duplicate key \"{}\" at line {}", key, line)
            }
            ConfigFileError::Invalid(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for ConfigFileError {}

pub const ALL_KEYS: [&str; 42] = [
    "x_left",
    "x_interface",
    "x_right",
    "n_cells_per_region",
    "beta_1",
    "beta_2",
    "beta_12",
    "beta_21",
    "gamma_1",
    "gamma_2",
    "lambda_1",
    "lambda_2",
    "big_lambda_1",
    "big_lambda_2",
    "mu_s",
    "mu_i",
    "mu_r",
    "sigma_a",
    "sigma_t_a",
    "i_threshold_1",
    "i_threshold_2",
    "dt",
    "t_final",
    "coupling_sweeps",
    "output_stride",
    "probe_cell",
    "s0_1",
    "i0_1",
    "r0_1",
    "s0_2",
    "i0_2",
    "r0_2",
    "population_scale",
    "alpha_form",
    "lockdown_trigger",
    "alpha_floor",
    "reopen_delay",
    "lockdown_signal",
    "sigma_form",
    "sigma_constant",
    "cross_diffusion",
    "enforce_positivity",
];

struct RawConfig {
    values: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigFileError> {
        let mut values = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigFileError::ParseError {
                line: line_no,
                reason: "expected `key = value`".to_string(),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !ALL_KEYS.contains(&key.as_str()) {
                return Err(ConfigFileError::UnknownKey { line: line_no, key });
            }
            if values.contains_key(&key) {
                return Err(ConfigFileError::DuplicateKey { line: line_no, key });
            }
            values.insert(key, (line_no, value));
        }
        Ok(RawConfig { values })
    }

    fn take(&self, key: &'static str) -> Result<(usize, &str), ConfigFileError> {
        self.values
            .get(key)
            .map(|(line, v)| (*line, v.as_str()))
            .ok_or(ConfigFileError::MissingKey { key })
    }

    fn f64(&self, key: &'static str) -> Result<f64, ConfigFileError> {
        let (line, v) = self.take(key)?;
        v.parse::<f64>().map_err(|e| ConfigFileError::ParseError {
            line,
            reason: format!("{}: {}", key, e),
        })
    }

    fn usize(&self, key: &'static str) -> Result<usize, ConfigFileError> {
        let (line, v) = self.take(key)?;
        v.parse::<usize>().map_err(|e| ConfigFileError::ParseError {
            line,
            reason: format!("{}: {}", key, e),
        })
    }

    fn bool(&self, key: &'static str) -> Result<bool, ConfigFileError> {
        let (line, v) = self.take(key)?;
        match v {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(ConfigFileError::ParseError {
                line,
                reason: format!("{}: expected true or false, got {}", key, other),
            }),
        }
    }
}

/// Parses configuration text; the result has passed full validation.
pub fn parse_config_str(text: &str) -> Result<SimulationConfig, ConfigFileError> {
    let raw = RawConfig::parse(text)?;

    let grid = TwoRegionGrid::new(
        raw.f64("x_left")?,
        raw.f64("x_interface")?,
        raw.f64("x_right")?,
        raw.usize("n_cells_per_region")?,
    )
    .map_err(ConfigFileError::Invalid)?;

    let params = EpidemicParams {
        beta_1: raw.f64("beta_1")?,
        beta_2: raw.f64("beta_2")?,
        beta_12: raw.f64("beta_12")?,
        beta_21: raw.f64("beta_21")?,
        gamma_1: raw.f64("gamma_1")?,
        gamma_2: raw.f64("gamma_2")?,
        lambda_1: raw.f64("lambda_1")?,
        lambda_2: raw.f64("lambda_2")?,
        big_lambda_1: raw.f64("big_lambda_1")?,
        big_lambda_2: raw.f64("big_lambda_2")?,
        mu_s: raw.f64("mu_s")?,
        mu_i: raw.f64("mu_i")?,
        mu_r: raw.f64("mu_r")?,
        sigma_a: raw.f64("sigma_a")?,
        sigma_t_a: raw.f64("sigma_t_a")?,
        i_threshold_1: raw.f64("i_threshold_1")?,
        i_threshold_2: raw.f64("i_threshold_2")?,
    };

    let initial = InitialConditions {
        s0_1: raw.f64("s0_1")?,
        i0_1: raw.f64("i0_1")?,
        r0_1: raw.f64("r0_1")?,
        s0_2: raw.f64("s0_2")?,
        i0_2: raw.f64("i0_2")?,
        r0_2: raw.f64("r0_2")?,
        population_scale: raw.f64("population_scale")?,
    };

    let alpha_form = {
        let (line, v) = raw.take("alpha_form")?;
        match v {
            "rational_decay" => AlphaForm::RationalDecay,
            "exponential_decay" => AlphaForm::ExponentialDecay,
            other => {
                return Err(ConfigFileError::ParseError {
                    line,
                    reason: format!(
                        "alpha_form must be rational_decay or exponential_decay, got {}",
                        other
                    ),
                })
            }
        }
    };
    let lockdown_signal = {
        let (line, v) = raw.take("lockdown_signal")?;
        match v {
            "interface" => LockdownSignal::Interface,
            "regional_total" => LockdownSignal::RegionalTotal,
            other => {
                return Err(ConfigFileError::ParseError {
                    line,
                    reason: format!(
                        "lockdown_signal must be interface or regional_total, got {}",
                        other
                    ),
                })
            }
        }
    };
    let sigma_form = {
        let (line, v) = raw.take("sigma_form")?;
        match v {
            "parabolic" => SigmaForm::Parabolic,
            "parabolic_fixed" => SigmaForm::ParabolicFixed(raw.f64("sigma_constant")?),
            "constant" => SigmaForm::Constant(raw.f64("sigma_constant")?),
            other => {
                return Err(ConfigFileError::ParseError {
                    line,
                    reason: format!(
                        "sigma_form must be parabolic, parabolic_fixed or constant, got {}",
                        other
                    ),
                })
            }
        }
    };
    // sigma_constant is always present; consume it even in parabolic form
    // so the round-trip stays total.
    let _ = raw.f64("sigma_constant")?;
    let cross_diffusion = {
        let (line, v) = raw.take("cross_diffusion")?;
        match v {
            "off" => CrossDiffusion::Off,
            "paired" => CrossDiffusion::Paired,
            other => {
                return Err(ConfigFileError::ParseError {
                    line,
                    reason: format!("cross_diffusion must be off or paired, got {}", other),
                })
            }
        }
    };

    let cfg = SimulationConfig {
        grid,
        params,
        dt: raw.f64("dt")?,
        t_final: raw.f64("t_final")?,
        initial,
        alpha_form,
        coupling_sweeps: raw.usize("coupling_sweeps")?,
        lockdown_trigger: raw.f64("lockdown_trigger")?,
        alpha_floor: raw.f64("alpha_floor")?,
        reopen_delay: raw.f64("reopen_delay")?,
        lockdown_signal,
        sigma_form,
        cross_diffusion,
        clamp_tol_rel: 1e-10,
        enforce_positivity: raw.bool("enforce_positivity")?,
        output_stride: raw.usize("output_stride")?,
        probe_cell: raw.usize("probe_cell")?,
    };
    crate::model::validate_config(&cfg).map_err(ConfigFileError::Invalid)?;
    Ok(cfg)
}

/// Parses a configuration file from disk.
pub fn parse_config(path: &Path) -> Result<SimulationConfig, ConfigFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigFileError::Io(format!("{}: {}", path.display(), e)))?;
    parse_config_str(&text)
}

fn fmt_value(v: f64) -> String {
    // Shortest representation that round-trips exactly.
    let plain = format!("{}", v);
    let sci = format!("{:e}", v);
    let s = if sci.len() < plain.len() { sci } else { plain };
    if s.parse::<f64>() == Ok(v) {
        s
    } else {
        format!("{:.17e}", v)
    }
}

/// Serializes a configuration in the key-value format; parsing the
/// output reproduces the configuration exactly.
pub fn serialize_config(cfg: &SimulationConfig) -> String {
    let mut out = String::new();
    fn kv_line(out: &mut String, key: &str, val: String) {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&val);
        out.push('\n');
    }
    macro_rules! kv {
        ($key:expr, $val:expr $(,)?) => {
            kv_line(&mut out, $key, $val)
        };
    }

    out.push_str("# Two-region SIR simulation configuration.\n");
    out.push_str("# One `key = value` per line; `#` starts a comment.\n\n");

    out.push_str("# --- grid ---\n");
    kv!("x_left", fmt_value(cfg.grid.x_left));
    kv!("x_interface", fmt_value(cfg.grid.x_interface));
    kv!("x_right", fmt_value(cfg.grid.x_right));
    kv!(
        "n_cells_per_region",
        cfg.grid.n_cells_per_region.to_string()
    );

    out.push_str("\n# --- rates (per day) ---\n");
    kv!("beta_1", fmt_value(cfg.params.beta_1));
    kv!("beta_2", fmt_value(cfg.params.beta_2));
    kv!("beta_12", fmt_value(cfg.params.beta_12));
    kv!("beta_21", fmt_value(cfg.params.beta_21));
    kv!("gamma_1", fmt_value(cfg.params.gamma_1));
    kv!("gamma_2", fmt_value(cfg.params.gamma_2));
    kv!("lambda_1", fmt_value(cfg.params.lambda_1));
    kv!("lambda_2", fmt_value(cfg.params.lambda_2));
    kv!("big_lambda_1", fmt_value(cfg.params.big_lambda_1));
    kv!("big_lambda_2", fmt_value(cfg.params.big_lambda_2));
    kv!("mu_s", fmt_value(cfg.params.mu_s));
    kv!("mu_i", fmt_value(cfg.params.mu_i));
    kv!("mu_r", fmt_value(cfg.params.mu_r));

    out.push_str("\n# --- diffusion coefficient shape ---\n");
    kv!("sigma_a", fmt_value(cfg.params.sigma_a));
    kv!("sigma_t_a", fmt_value(cfg.params.sigma_t_a));
    kv!(
        "sigma_form",
        match cfg.sigma_form {
            SigmaForm::Parabolic => "parabolic".to_string(),
            SigmaForm::ParabolicFixed(_) => "parabolic_fixed".to_string(),
            SigmaForm::Constant(_) => "constant".to_string(),
        },
    );
    kv!(
        "sigma_constant",
        fmt_value(match cfg.sigma_form {
            SigmaForm::Parabolic => 0.0,
            SigmaForm::ParabolicFixed(c) | SigmaForm::Constant(c) => c,
        }),
    );

    out.push_str("\n# --- interface policy ---\n");
    kv!(
        "alpha_form",
        match cfg.alpha_form {
            AlphaForm::RationalDecay => "rational_decay".to_string(),
            AlphaForm::ExponentialDecay => "exponential_decay".to_string(),
        },
    );
    kv!("i_threshold_1", fmt_value(cfg.params.i_threshold_1));
    kv!("i_threshold_2", fmt_value(cfg.params.i_threshold_2));
    kv!("lockdown_trigger", fmt_value(cfg.lockdown_trigger));
    kv!("alpha_floor", fmt_value(cfg.alpha_floor));
    kv!("reopen_delay", fmt_value(cfg.reopen_delay));
    kv!(
        "lockdown_signal",
        match cfg.lockdown_signal {
            LockdownSignal::Interface => "interface".to_string(),
            LockdownSignal::RegionalTotal => "regional_total".to_string(),
        },
    );

    out.push_str("\n# --- time stepping ---\n");
    kv!("dt", fmt_value(cfg.dt));
    kv!("t_final", fmt_value(cfg.t_final));
    kv!("coupling_sweeps", cfg.coupling_sweeps.to_string());
    kv!("enforce_positivity", cfg.enforce_positivity.to_string());
    kv!(
        "cross_diffusion",
        match cfg.cross_diffusion {
            CrossDiffusion::Off => "off".to_string(),
            CrossDiffusion::Paired => "paired".to_string(),
        },
    );

    out.push_str("\n# --- initial densities and reporting scale ---\n");
    kv!("s0_1", fmt_value(cfg.initial.s0_1));
    kv!("i0_1", fmt_value(cfg.initial.i0_1));
    kv!("r0_1", fmt_value(cfg.initial.r0_1));
    kv!("s0_2", fmt_value(cfg.initial.s0_2));
    kv!("i0_2", fmt_value(cfg.initial.i0_2));
    kv!("r0_2", fmt_value(cfg.initial.r0_2));
    kv!("population_scale", fmt_value(cfg.initial.population_scale));

    out.push_str("\n# --- output ---\n");
    kv!("output_stride", cfg.output_stride.to_string());
    kv!("probe_cell", cfg.probe_cell.to_string());

    out
}

/// The generated default configuration text (the built-in baseline).
pub fn default_config_text() -> String {
    serialize_config(&SimulationConfig::baseline())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SimulationConfig;
    use proptest::prelude::*;

    #[test]
    fn default_text_parses_to_baseline() {
        let text = default_config_text();
        let cfg = parse_config_str(&text).unwrap();
        assert_eq!(cfg, SimulationConfig::baseline());
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = default_config_text();
        let cfg = parse_config_str(&text).unwrap();
        let text2 = serialize_config(&cfg);
        assert_eq!(text, text2);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut text = default_config_text();
        text.push_str("betta_1 = 0.05\n");
        match parse_config_str(&text) {
            Err(ConfigFileError::UnknownKey { key, .. }) => assert_eq!(key, "betta_1"),
            other => panic!("expected UnknownKey, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn missing_key_is_rejected() {
        let text: String = default_config_text()
            .lines()
            .filter(|l| !l.starts_with("mu_i"))
            .map(|l| format!("{}\n", l))
            .collect();
        match parse_config_str(&text) {
            Err(ConfigFileError::MissingKey { key }) => assert_eq!(key, "mu_i"),
            other => panic!("expected MissingKey, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn invalid_value_is_surfaced_with_key() {
        let text = default_config_text().replace("dt = 0.0125", "dt = -1");
        match parse_config_str(&text) {
            Err(ConfigFileError::Invalid(e)) => {
                assert!(e.violations.iter().any(|v| v.field() == "dt"));
            }
            other => panic!("expected Invalid, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let mut text = String::from("\n# comment\nnot a key value pair\n");
        text.push_str(&default_config_text());
        match parse_config_str(&text) {
            Err(ConfigFileError::ParseError { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected ParseError, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let mut text = default_config_text();
        text.push_str("dt = 0.0125\n");
        assert!(matches!(
            parse_config_str(&text),
            Err(ConfigFileError::DuplicateKey { .. })
        ));
    }

    proptest! {
        /// Valid perturbed configs survive the serialize -> parse ->
        /// serialize round trip byte-identically.
        #[test]
        fn round_trip_random_valid_configs(
            beta in 0.0..0.5f64,
            lambda in 0.0..=1.0f64,
            dt_steps in 1usize..200,
            scale in 1.0..1000.0f64,
        ) {
            let mut cfg = SimulationConfig::baseline();
            cfg.params.beta_1 = beta;
            cfg.params.lambda_1 = lambda;
            cfg.dt = 0.0125;
            cfg.t_final = 0.0125 * dt_steps as f64;
            cfg.initial.population_scale = scale;
            let text = serialize_config(&cfg);
            let parsed = parse_config_str(&text).unwrap();
            prop_assert_eq!(&parsed, &cfg);
            prop_assert_eq!(serialize_config(&parsed), text);
        }

        /// Invalid perturbations of a valid config are rejected.
        #[test]
        fn invalid_perturbations_rejected(which in 0usize..6, magnitude in 0.1..10.0f64) {
            let mut cfg = SimulationConfig::baseline();
            match which {
                0 => cfg.dt = -magnitude,
                1 => cfg.params.lambda_1 = 1.0 + magnitude,
                2 => cfg.params.mu_s = -magnitude,
                3 => cfg.params.i_threshold_2 = 0.0,
                4 => cfg.initial.s0_1 = -magnitude,
                5 => cfg.lockdown_trigger = -magnitude,
                _ => unreachable!(),
            }
            let text = serialize_config(&cfg);
            prop_assert!(parse_config_str(&text).is_err());
        }
    }
}
