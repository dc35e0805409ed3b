//! Indicator sweeps over tau and the artifacts they produce.
//!
//! The per-tau computations are embarrassingly parallel and are dispatched
//! through a work-stealing pool; results are re-sorted by tau afterwards so
//! the artifacts are byte-identical no matter how many workers ran (the
//! wall-time column is the one sanctioned exception — consumers comparing
//! runs must ignore it). Files are written to a temporary sibling and
//! renamed into place, so a crash never leaves a half-written artifact.

use crate::config::RunConfig;
use crate::error::{CoreError, Result};
use crate::extract::{
    classify_terminal, estimate_enclosure, naive_estimator, rate_check, EnclosureFit, RateCheck,
    TerminalBehavior, CLASSIFIER_GUARD,
};
use crate::transform::{indicator_auto, IndicatorOptions, IndicatorSample};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// Exact header of the indicator CSV.
pub const CSV_HEADER: [&str; 8] = [
    "tau",
    "I_scaled",
    "log_I_scaled",
    "J",
    "E",
    "Rh",
    "residual",
    "wall_time",
];

/// Run the indicator at every configured tau. `jobs` bounds the worker
/// count (None = library default). Results come back ascending in tau.
pub fn run_sweep(
    cfg: &RunConfig,
    jobs: Option<usize>,
    opts: &IndicatorOptions,
) -> Result<Vec<IndicatorSample>> {
    let work = || -> Vec<Result<IndicatorSample>> {
        cfg.tau_list
            .par_iter()
            .map(|&tau| indicator_auto(&cfg.body, &cfg.probe, &cfg.disc, tau, opts))
            .collect()
    };
    let results = match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CoreError::Config(format!("cannot build a {n}-thread pool: {e}")))?;
            pool.install(work)
        }
        None => work(),
    };
    let mut samples = results.into_iter().collect::<Result<Vec<_>>>()?;
    samples.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    Ok(samples)
}

/// Write bytes to `path` atomically (temporary sibling + rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Serialize the sweep into the indicator CSV.
pub fn indicator_csv(samples: &[IndicatorSample]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)
        .map_err(|e| CoreError::Io(std::io::Error::other(e)))?;
    for s in samples {
        let d = s.decomposition;
        w.write_record([
            format!("{}", s.tau),
            format!("{}", s.i_scaled),
            opt_cell(s.log_i_scaled),
            opt_cell(d.map(|d| d.j)),
            opt_cell(d.map(|d| d.e)),
            opt_cell(d.map(|d| d.rh)),
            opt_cell(d.map(|d| d.residual)),
            format!("{}", s.wall_time_s),
        ])
        .map_err(|e| CoreError::Io(std::io::Error::other(e)))?;
    }
    w.into_inner()
        .map_err(|e| CoreError::Io(std::io::Error::other(e)))
}

pub fn write_indicator_csv(samples: &[IndicatorSample], path: &Path) -> Result<()> {
    atomic_write(path, &indicator_csv(samples)?)
}

/// Read (tau, I_scaled) pairs back from an indicator CSV.
pub fn read_indicator_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CoreError::Config(format!("cannot open {}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| CoreError::Config(format!("bad CSV header: {e}")))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CoreError::Config(format!("CSV is missing the `{name}` column")))
    };
    let (ct, ci) = (col("tau")?, col("I_scaled")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CoreError::Config(format!("bad CSV record: {e}")))?;
        let parse = |idx: usize| -> Result<f64> {
            rec.get(idx)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| CoreError::Config(format!("bad CSV number in row: {e}")))
        };
        out.push((parse(ct)?, parse(ci)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepManifest<'a> {
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub samples: &'a [IndicatorSample],
    pub outputs: Vec<String>,
    pub warnings: &'a [String],
    pub status: &'static str,
}

/// Write the JSON manifest describing a sweep run. The manifest is only
/// produced once every sample is in hand, so its status is always complete;
/// an aborted run leaves no manifest behind.
pub fn write_manifest(
    cfg: &RunConfig,
    samples: &[IndicatorSample],
    outputs: Vec<String>,
    warnings: &[String],
    path: &Path,
) -> Result<()> {
    let manifest = SweepManifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        samples,
        outputs,
        warnings,
        status: "complete",
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| CoreError::Io(std::io::Error::other(e)))?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationRow {
    pub t_hyp: f64,
    pub verdict: TerminalBehavior,
}

/// Post-processing summary of a sweep: the three-parameter rate fit, the
/// one-point reading at the largest tau, terminal classifications at the
/// hypothesis times, and the convergence diagnostic of the one-point
/// reading against the fitted rate.
#[derive(Debug, Clone, Serialize)]
pub struct ExtractReport {
    pub fit: Option<EnclosureFit>,
    pub fit_error: Option<String>,
    pub naive_tau: f64,
    pub naive_estimate: Option<f64>,
    pub classifications: Vec<ClassificationRow>,
    pub rate: Option<RateCheck>,
}

/// Build the extraction report from (tau, I_scaled) pairs.
pub fn build_extract_report(pairs: &[(f64, f64)], eta: f64, t_hyps: &[f64]) -> ExtractReport {
    let (fit, fit_error) = match estimate_enclosure(pairs, eta) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let last = pairs
        .iter()
        .fold(None::<(f64, f64)>, |acc, &(t, i)| match acc {
            Some((bt, _)) if bt >= t => acc,
            _ => Some((t, i)),
        });
    let (naive_tau, naive_estimate) = match last {
        Some((t, i)) => (t, naive_estimator(t, i).ok()),
        None => (f64::NAN, None),
    };
    let classifications = t_hyps
        .iter()
        .filter_map(|&t_hyp| {
            classify_terminal(pairs, t_hyp, CLASSIFIER_GUARD)
                .ok()
                .map(|verdict| ClassificationRow { t_hyp, verdict })
        })
        .collect();
    let rate = fit
        .as_ref()
        .and_then(|f| rate_check(pairs, f.l_hat).ok());
    ExtractReport {
        fit,
        fit_error,
        naive_tau,
        naive_estimate,
        classifications,
        rate,
    }
}

pub fn write_extract_report(report: &ExtractReport, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(report)
        .map_err(|e| CoreError::Io(std::io::Error::other(e)))?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{DecompositionParts, GridReport};

    fn sample(tau: f64, i: f64) -> IndicatorSample {
        IndicatorSample {
            tau,
            i_scaled: i,
            log_i_scaled: (i > 0.0).then(|| i.ln()),
            positive: i > 0.0,
            bracket: i,
            dn_star: 1.0,
            err_estimate: 1e-9,
            converged: true,
            flux_l2_time: 0.1,
            decomposition: Some(DecompositionParts {
                j: 0.6 * i,
                e: 0.3 * i,
                rh: 0.1 * i,
                residual: 1e-3,
            }),
            grid: GridReport {
                n_r: 128,
                n_steps: 256,
                dt_min: 1e-3,
                resolution: 0.02,
            },
            wall_time_s: 0.123,
        }
    }

    #[test]
    fn csv_roundtrip_and_layout() {
        let samples = vec![sample(50.0, 2.0e-3), sample(75.0, 8.0e-3)];
        let bytes = indicator_csv(&samples).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "tau,I_scaled,log_I_scaled,J,E,Rh,residual,wall_time"
        );
        assert_eq!(text.lines().count(), 3);
        // identical samples serialize identically (wall time is data here)
        assert_eq!(bytes, indicator_csv(&samples).unwrap());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("indicator.csv");
        write_indicator_csv(&samples, &path).unwrap();
        let pairs = read_indicator_csv(&path).unwrap();
        assert_eq!(pairs, vec![(50.0, 2.0e-3), (75.0, 8.0e-3)]);
        // no temporary sibling left behind
        assert!(!dir.path().join("indicator.tmp").exists());
    }

    #[test]
    fn negative_indicator_leaves_log_cell_empty() {
        let s = sample(50.0, -1.0e-3);
        let text = String::from_utf8(indicator_csv(&[s]).unwrap()).unwrap();
        let row = text.lines().nth(1).unwrap();
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[2], "", "log cell must be empty: {row}");
    }

    #[test]
    fn extract_report_from_model_data() {
        let pairs: Vec<(f64, f64)> = [50.0, 75.0, 110.0, 160.0, 220.0, 290.0, 360.0, 400.0]
            .iter()
            .map(|&t: &f64| (t, (2.0 * t.sqrt() * 0.9 - 3.0 * t.ln() - 6.5).exp()))
            .collect();
        let report = build_extract_report(&pairs, 0.5, &[1.0, 4.0]);
        let fit = report.fit.as_ref().unwrap();
        assert!((fit.l_hat - 0.9).abs() < 1e-8);
        assert_eq!(report.naive_tau, 400.0);
        assert!(report.naive_estimate.unwrap() < 0.9);
        assert_eq!(report.classifications.len(), 2);
        assert_eq!(
            report.classifications[0].verdict,
            TerminalBehavior::GrowthToInfinity
        );
        assert_eq!(
            report.classifications[1].verdict,
            TerminalBehavior::DecayToZero
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("extract.json");
        write_extract_report(&report, &path).unwrap();
        let parsed: serde_json::Value =
            serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        assert!(parsed["fit"]["l_hat"].as_f64().is_some());
    }

    #[test]
    fn manifest_embeds_config_and_version() {
        let cfg = crate::config::reference_config();
        let samples = vec![sample(50.0, 2e-3)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        write_manifest(&cfg, &samples, vec!["indicator.csv".into()], &[], &path).unwrap();
        let parsed: serde_json::Value =
            serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(
            parsed["version"].as_str().unwrap(),
            env!("CARGO_PKG_VERSION")
        );
        assert_eq!(parsed["config"]["body"]["r_cavity"].as_f64().unwrap(), 0.4);
        assert_eq!(parsed["samples"][0]["tau"].as_f64().unwrap(), 50.0);
    }
}
