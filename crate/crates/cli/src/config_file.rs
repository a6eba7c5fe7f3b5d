//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Omitted keys keep their defaults; unknown or repeated keys are errors.

use std::collections::HashMap;
use std::str::FromStr;

use ehwake::SimConfig;

use crate::error::CliError;

/// Every accepted key with a one-line description, in file order.
pub const KEYS: [(&str, &str); 21] = [
    ("area_width", "deployment area width, m"),
    ("area_height", "deployment area height, m"),
    ("n_devices", "number of devices"),
    ("alpha", "event probability per TTI"),
    ("eta", "sensing decay rate, 1/m"),
    ("psi", "information of a report from the epicenter"),
    ("i_min", "minimum information per event"),
    ("e_max", "battery capacity, units"),
    ("e_tx", "transmission cost, units"),
    ("e_idle", "sensing cost per ON TTI, units"),
    ("e_h", "units harvested when the source is active"),
    ("lambda_tau", "source rate times TTI length"),
    ("d_max", "cluster radius and wake-up range, m"),
    ("k_neighbors", "neighbors consulted by the clustering vote"),
    ("policy", "random | grid-search | knn-cluster | genie"),
    ("wakeup_sensing", "deterministic | bernoulli"),
    ("geometry_mode", "oracle-geometry | estimated"),
    ("tti_count", "metered TTIs per run"),
    ("burn_in", "unmetered TTIs before metering, or auto"),
    ("n_runs", "Monte Carlo runs per experiment"),
    ("base_seed", "seed of the first run's stream"),
];

fn parse_value<T: FromStr>(key: &str, line: usize, raw: &str, what: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::config(Some(line), Some(key), format!("expected {what}, got `{raw}`")))
}

fn assign(cfg: &mut SimConfig, key: &str, raw: &str, line: usize) -> Result<(), CliError> {
    let number = "a number";
    let count = "a non-negative integer";
    match key {
        "area_width" => cfg.area_width = parse_value(key, line, raw, number)?,
        "area_height" => cfg.area_height = parse_value(key, line, raw, number)?,
        "n_devices" => cfg.n_devices = parse_value(key, line, raw, count)?,
        "alpha" => cfg.alpha = parse_value(key, line, raw, number)?,
        "eta" => cfg.eta = parse_value(key, line, raw, number)?,
        "psi" => cfg.psi = parse_value(key, line, raw, number)?,
        "i_min" => cfg.i_min = parse_value(key, line, raw, number)?,
        "e_max" => cfg.e_max = parse_value(key, line, raw, count)?,
        "e_tx" => cfg.e_tx = parse_value(key, line, raw, count)?,
        "e_idle" => cfg.e_idle = parse_value(key, line, raw, count)?,
        "e_h" => cfg.e_h = parse_value(key, line, raw, count)?,
        "lambda_tau" => cfg.lambda_tau = parse_value(key, line, raw, number)?,
        "d_max" => cfg.d_max = parse_value(key, line, raw, number)?,
        "k_neighbors" => cfg.k_neighbors = parse_value(key, line, raw, count)?,
        "policy" => cfg.policy = raw.parse().map_err(|e| CliError::config(Some(line), Some(key), e))?,
        "wakeup_sensing" => cfg.wakeup_sensing = raw.parse().map_err(|e| CliError::config(Some(line), Some(key), e))?,
        "geometry_mode" => cfg.geometry_mode = raw.parse().map_err(|e| CliError::config(Some(line), Some(key), e))?,
        "tti_count" => cfg.tti_count = parse_value(key, line, raw, count)?,
        "burn_in" => {
            cfg.burn_in = if raw == "auto" {
                None
            } else {
                Some(parse_value(key, line, raw, "a non-negative integer or `auto`")?)
            }
        }
        "n_runs" => cfg.n_runs = parse_value(key, line, raw, count)?,
        "base_seed" => cfg.base_seed = parse_value(key, line, raw, count)?,
        _ => return Err(CliError::config(Some(line), Some(key), "unknown key")),
    }
    Ok(())
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, CliError> {
    let mut cfg = SimConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::config(
                Some(line),
                None,
                format!("expected `key = value`, got `{content}`"),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(CliError::config(Some(line), None, "missing key before `=`"));
        }
        if value.is_empty() {
            return Err(CliError::config(Some(line), Some(key), "missing value"));
        }
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(CliError::config(
                Some(line),
                Some(key),
                format!("already set on line {first}"),
            ));
        }
        assign(&mut cfg, key, value, line)?;
    }
    if let Err(err) = cfg.validate() {
        let message = err.to_string();
        let key = KEYS
            .iter()
            .map(|(k, _)| *k)
            .find(|k| message.contains(&format!("`{k}`")));
        let line = key.and_then(|k| seen.get(k).copied());
        return Err(CliError::config(line, key, message));
    }
    Ok(cfg)
}

fn value_of(cfg: &SimConfig, key: &str) -> String {
    match key {
        "area_width" => cfg.area_width.to_string(),
        "area_height" => cfg.area_height.to_string(),
        "n_devices" => cfg.n_devices.to_string(),
        "alpha" => cfg.alpha.to_string(),
        "eta" => cfg.eta.to_string(),
        "psi" => cfg.psi.to_string(),
        "i_min" => cfg.i_min.to_string(),
        "e_max" => cfg.e_max.to_string(),
        "e_tx" => cfg.e_tx.to_string(),
        "e_idle" => cfg.e_idle.to_string(),
        "e_h" => cfg.e_h.to_string(),
        "lambda_tau" => cfg.lambda_tau.to_string(),
        "d_max" => cfg.d_max.to_string(),
        "k_neighbors" => cfg.k_neighbors.to_string(),
        "policy" => cfg.policy.to_string(),
        "wakeup_sensing" => cfg.wakeup_sensing.to_string(),
        "geometry_mode" => cfg.geometry_mode.to_string(),
        "tti_count" => cfg.tti_count.to_string(),
        "burn_in" => cfg.burn_in.map_or_else(|| "auto".to_string(), |b| b.to_string()),
        "n_runs" => cfg.n_runs.to_string(),
        "base_seed" => cfg.base_seed.to_string(),
        _ => unreachable!("KEYS lists every field"),
    }
}

/// Writes every key, each preceded by its description. Floats use the
/// shortest representation that parses back to the same value.
pub fn serialize_config(cfg: &SimConfig) -> String {
    let mut out = String::new();
    for (key, doc) in KEYS {
        out.push_str(&format!("# {doc}\n{key} = {}\n", value_of(cfg, key)));
    }
    out
}

/// Key reference for `--help`.
pub fn key_reference() -> String {
    let defaults = SimConfig::default();
    let mut out = String::from("Configuration keys (default in brackets):\n");
    for (key, doc) in KEYS {
        out.push_str(&format!("  {key:<15} {doc} [{}]\n", value_of(&defaults, key)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ehwake::PolicyKind;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), SimConfig::default());
        assert_eq!(parse_config("# nothing\n\n   \n").unwrap(), SimConfig::default());
    }

    #[test]
    fn values_and_comments() {
        let cfg =
            parse_config("e_tx = 10\ne_idle = 1 # per TTI\neta=1\nd_max = 4\npolicy = genie\nburn_in = 7").unwrap();
        assert_eq!((cfg.e_tx, cfg.e_idle, cfg.eta, cfg.d_max), (10, 1, 1.0, 4.0));
        assert_eq!(cfg.policy, PolicyKind::Genie);
        assert_eq!(cfg.burn_in, Some(7));
        assert_eq!(parse_config("burn_in = auto").unwrap().burn_in, None);
    }

    #[test]
    fn errors_name_key_and_line() {
        let e = parse_config("\nalpha = 1.5\n").unwrap_err();
        assert_eq!(e.line(), Some(2));
        assert_eq!(e.key(), Some("alpha"));
        assert!(e.to_string().contains("[0, 1]"), "{e}");

        let e = parse_config("n_devices = 5\nfoo = 1").unwrap_err();
        assert_eq!((e.line(), e.key()), (Some(2), Some("foo")));
        assert!(e.to_string().contains("unknown key"));

        let e = parse_config("e_tx = ten").unwrap_err();
        assert_eq!((e.line(), e.key()), (Some(1), Some("e_tx")));

        let e = parse_config("alpha = 0.1\nalpha = 0.2").unwrap_err();
        assert_eq!(e.line(), Some(2));

        assert_eq!(parse_config("just words").unwrap_err().line(), Some(1));
        assert_eq!(parse_config("policy = best").unwrap_err().key(), Some("policy"));
        assert_eq!(parse_config("n_devices = -3").unwrap_err().key(), Some("n_devices"));
    }

    #[test]
    fn defaults_round_trip() {
        let text = serialize_config(&SimConfig::default());
        assert_eq!(parse_config(&text).unwrap(), SimConfig::default());
    }
}
