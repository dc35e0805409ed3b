//! TOML run configuration: parsing, validation, defaults.
//!
//! Unknown keys are rejected rather than ignored — a typo like `taulist`
//! silently falling back to defaults would burn hours of compute on the
//! wrong sweep. Physical coherence checks distinguish hard errors (the
//! radial solver cannot run at all) from advisories (the detectability
//! margin is violated, so the indicator will shrink instead of grow);
//! strict mode promotes the advisories to errors.

use crate::error::{CoreError, Result};
use crate::geometry::{check_constraint, dist, BodySpec, Discretization, ProbeBall};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    probe: RawProbe,
    body: RawBody,
    run: RawRun,
    #[serde(default)]
    mode: RawMode,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbe {
    p: [f64; 3],
    eta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBody {
    r_omega: f64,
    r_cavity: f64,
    #[serde(default)]
    center: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    t_final: f64,
    n_r: usize,
    n_t: usize,
    tau_list: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    #[serde(default = "default_true")]
    strict: bool,
    #[serde(default = "default_true")]
    radial: bool,
}

fn default_true() -> bool {
    true
}

impl Default for RawMode {
    fn default() -> Self {
        RawMode {
            strict: true,
            radial: true,
        }
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub probe: ProbeBall,
    pub body: BodySpec,
    pub disc: Discretization,
    pub tau_list: Vec<f64>,
    pub strict: bool,
    pub radial: bool,
}

/// Parse and validate a TOML configuration string. Returns the config and
/// any advisories that did not rise to errors.
pub fn parse_config(text: &str) -> Result<(RunConfig, Vec<String>)> {
    parse_config_with(text, None)
}

/// Like [`parse_config`], but lets a caller (the command line) override the
/// file's strict-mode flag before validation runs.
pub fn parse_config_with(
    text: &str,
    strict_override: Option<bool>,
) -> Result<(RunConfig, Vec<String>)> {
    let mut raw: RawConfig = toml::from_str(text)
        .map_err(|e| CoreError::Config(format!("cannot parse configuration: {e}")))?;
    if let Some(s) = strict_override {
        raw.mode.strict = s;
    }
    validate(raw)
}

/// Load a configuration from a TOML file.
pub fn load_config(path: &Path) -> Result<(RunConfig, Vec<String>)> {
    load_config_with(path, None)
}

/// Load a configuration from a TOML file with an optional strict-mode
/// override.
pub fn load_config_with(
    path: &Path,
    strict_override: Option<bool>,
) -> Result<(RunConfig, Vec<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CoreError::Config(format!("cannot read configuration {}: {e}", path.display()))
    })?;
    parse_config_with(&text, strict_override)
}

fn validate(raw: RawConfig) -> Result<(RunConfig, Vec<String>)> {
    let mut warnings = Vec::new();
    let probe = ProbeBall::new(raw.probe.p, raw.probe.eta)?;
    let body = BodySpec::new(raw.body.r_omega, raw.body.r_cavity, raw.body.center)?;
    let disc = Discretization::new(raw.run.n_r, raw.run.n_t, raw.run.t_final)?;
    let mode = raw.mode;

    if mode.radial && dist(&probe.p, &body.center) > 1e-12 {
        return Err(CoreError::Config(
            "radial mode requires the probe center to coincide with the body center; \
             move probe.p or disable mode.radial"
                .into(),
        ));
    }
    if !mode.radial {
        warnings.push(
            "mode.radial = false: only the wave-side operations support general geometry; \
             the forward solver and indicator run in radial mode"
                .to_string(),
        );
    }

    // detectability margin: the probe shell must reach deep enough that the
    // refocused wave feels the cavity ahead of the boundary reflection
    let margin_ok = check_constraint(probe.eta, body.r_cavity, body.r_omega)?;
    if !margin_ok {
        let msg = format!(
            "detectability margin violated: eta + 2 r_cavity = {:.4} must exceed r_omega = {:.4} \
             for the cavity signal to dominate the boundary reflection",
            probe.eta + 2.0 * body.r_cavity,
            body.r_omega
        );
        if mode.strict {
            return Err(CoreError::Config(format!("{msg} (strict mode)")));
        }
        warnings.push(msg);
    }

    if raw.run.tau_list.is_empty() {
        return Err(CoreError::Config("run.tau_list must not be empty".into()));
    }
    let reach = body.r_omega + probe.eta;
    let tau_min = (reach / disc.t_final).powi(2);
    let tau_max = (crate::heat::MAX_SCALED_EXPONENT / reach).powi(2);
    let mut tau_list = Vec::with_capacity(raw.run.tau_list.len());
    for &tau in &raw.run.tau_list {
        if !tau.is_finite() || tau <= tau_min {
            return Err(CoreError::Config(format!(
                "tau = {tau} is unusable: the collapsed pulse must clear the body within the \
                 observation window, which needs tau > {tau_min:.4}"
            )));
        }
        if tau > tau_max {
            return Err(CoreError::NumericRange(format!(
                "tau = {tau} overflows the scaled transforms; largest admissible tau is \
                 {tau_max:.3e}"
            )));
        }
        tau_list.push(tau);
    }
    let mut sorted = tau_list.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() != tau_list.len() {
        warnings.push("run.tau_list contains duplicates; they were merged".to_string());
    }
    if sorted != tau_list {
        warnings.push("run.tau_list was not ascending; it was sorted".to_string());
    }

    Ok((
        RunConfig {
            probe,
            body,
            disc,
            tau_list: sorted,
            strict: mode.strict,
            radial: mode.radial,
        },
        warnings,
    ))
}

/// The reference laboratory setup used throughout the verification suites:
/// unit ball, cavity radius 0.4, probe shell 0.5, unit observation window,
/// and a tau sweep spanning one decade.
pub fn reference_config() -> RunConfig {
    RunConfig {
        probe: ProbeBall::new([0.0; 3], 0.5).expect("reference probe"),
        body: BodySpec::new(1.0, 0.4, [0.0; 3]).expect("reference body"),
        disc: Discretization::new(200, 400, 1.0).expect("reference grids"),
        tau_list: vec![50.0, 75.0, 110.0, 160.0, 220.0, 290.0, 360.0, 400.0],
        strict: true,
        radial: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
        [probe]
        p = [0.0, 0.0, 0.0]
        eta = 0.5

        [body]
        r_omega = 1.0
        r_cavity = 0.4

        [run]
        t_final = 1.0
        n_r = 200
        n_t = 400
        tau_list = [50.0, 75.0, 110.0]
    "#;

    #[test]
    fn parses_reference_setup() {
        let (cfg, warnings) = parse_config(GOOD).unwrap();
        assert_eq!(cfg.tau_list, vec![50.0, 75.0, 110.0]);
        assert!(cfg.strict && cfg.radial);
        assert_eq!(cfg.body.center, [0.0; 3]);
        assert!(warnings.is_empty(), "{warnings:?}");
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = GOOD.replace("tau_list", "taulist");
        let err = parse_config(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, CoreError::Config(_)));
        assert!(msg.contains("taulist") || msg.contains("unknown"), "{msg}");
    }

    #[test]
    fn rejects_off_center_probe_in_radial_mode() {
        let bad = GOOD.replace("p = [0.0, 0.0, 0.0]", "p = [0.3, 0.0, 0.0]");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.to_string().contains("radial"), "{err}");
    }

    #[test]
    fn detectability_margin_strict_vs_advisory() {
        let bad = GOOD.replace("r_cavity = 0.4", "r_cavity = 0.2");
        // strict (default): hard error citing the margin
        let err = parse_config(&bad).unwrap_err();
        assert!(err.to_string().contains("eta + 2 r_cavity"), "{err}");
        // advisory mode: warning instead
        let relaxed = format!("{bad}\n[mode]\nstrict = false\n");
        let (cfg, warnings) = parse_config(&relaxed).unwrap();
        assert!(!cfg.strict);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("detectability"));
    }

    #[test]
    fn rejects_out_of_range_tau() {
        let low = GOOD.replace("tau_list = [50.0, 75.0, 110.0]", "tau_list = [1.0]");
        let err = parse_config(&low).unwrap_err();
        assert!(err.to_string().contains("clear the body"), "{err}");
        let high = GOOD.replace("tau_list = [50.0, 75.0, 110.0]", "tau_list = [1e7]");
        assert!(matches!(
            parse_config(&high).unwrap_err(),
            CoreError::NumericRange(_)
        ));
        let empty = GOOD.replace("tau_list = [50.0, 75.0, 110.0]", "tau_list = []");
        assert!(parse_config(&empty).is_err());
    }

    #[test]
    fn unsorted_tau_list_is_sorted_with_warning() {
        let shuffled = GOOD.replace("[50.0, 75.0, 110.0]", "[110.0, 50.0, 75.0]");
        let (cfg, warnings) = parse_config(&shuffled).unwrap();
        assert_eq!(cfg.tau_list, vec![50.0, 75.0, 110.0]);
        assert!(warnings.iter().any(|w| w.contains("ascending")));
    }

    #[test]
    fn reference_config_is_self_consistent() {
        let cfg = reference_config();
        assert!(check_constraint(cfg.probe.eta, cfg.body.r_cavity, cfg.body.r_omega).unwrap());
        assert!(cfg.tau_list.windows(2).all(|w| w[0] < w[1]));
    }
}
