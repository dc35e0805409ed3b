//! Command-line front end for the cavity-enclosure laboratory.
//!
//! The binary exposes the pipeline stages as subcommands: tabulating the
//! radial wave pulse, emitting the time-reversed boundary flux, running the
//! forward heat solve, sweeping the indicator over tau, re-analyzing a sweep
//! into an enclosure-radius estimate, and the oracle verification suites.
//!
//! Exit codes: 0 on success, 1 when a verification suite fails (or a solve
//! breaks down), 2 for configuration problems, 3 when a requested tau would
//! push the scaled transforms outside floating-point range.

use std::error::Error;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use enclosure_core::config::load_config_with;
use enclosure_core::forms::wave_potential_check;
use enclosure_core::heat::{solve_radial_heat, CnOptions};
use enclosure_core::sweep::{
    atomic_write, build_extract_report, run_sweep, write_extract_report, write_indicator_csv,
    write_manifest,
};
use enclosure_core::transform::IndicatorOptions;
use enclosure_core::verify::{self, SuiteReport};
use enclosure_core::wave::{flux_trace, kirchhoff_radial};
use enclosure_core::{CoreError, RunConfig};

#[derive(Parser)]
#[command(
    name = "enclosure",
    version,
    about = "Numerical laboratory for cavity detection by boundary heat measurements"
)]
struct Cli {
    /// Run configuration (TOML)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory that receives generated artifacts
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Worker count for the tau sweep (default: one per core)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Treat a violated detectability margin as an error
    #[arg(long, global = true, overrides_with = "no_strict")]
    strict: bool,

    /// Downgrade a violated detectability margin to a warning
    #[arg(long, global = true, overrides_with = "strict")]
    no_strict: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the radial wave pulse v(d, s) and its derivatives as CSV
    WaveProbe {
        /// Probe shell radius
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        /// Samples per axis
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Largest distance from the probe center
        #[arg(long, default_value_t = 1.6)]
        d_max: f64,
        /// Largest pseudo-time
        #[arg(long, default_value_t = 1.6)]
        s_max: f64,
    },
    /// Emit the time-reversed boundary flux series for one tau as CSV
    FluxGen {
        #[arg(long)]
        tau: f64,
    },
    /// Run the forward heat solve for one tau; write the boundary trace CSV
    /// and optionally the full space-time field as a binary dump
    Forward {
        #[arg(long)]
        tau: f64,
        /// Also write the space-time temperature field (see README for the
        /// binary layout)
        #[arg(long)]
        field: bool,
    },
    /// Run the configured tau sweep: indicator CSV, run manifest, and the
    /// extraction report
    IndicatorSweep,
    /// Re-analyze an existing sweep CSV into an extraction report
    Extract {
        /// Sweep CSV to read (default: <out>/indicator_sweep.csv)
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        /// Observation-time hypotheses for the terminal classifier
        /// (default: the configured window and four times it)
        #[arg(long, value_delimiter = ',', value_name = "T,...")]
        t_hyp: Vec<f64>,
    },
    /// Check the wave-potential reciprocity identity and emit its table
    VerifyPotential,
    /// Run oracle verification suites and print a pass/fail table
    VerifyAll {
        #[arg(long, value_enum, default_value_t = SuiteSel::All)]
        suite: SuiteSel,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteSel {
    Potential,
    Forms,
    Kirchhoff,
    Mms,
    Decomposition,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.as_ref()))
        }
    }
}

/// Map an error to the documented exit codes. Anything that is not a library
/// error (missing files, malformed flags) counts as a configuration problem.
fn exit_code(e: &(dyn Error + 'static)) -> u8 {
    match e.downcast_ref::<CoreError>() {
        Some(CoreError::NumericRange(_)) => 3,
        Some(CoreError::Solver(_)) | Some(CoreError::Estimation(_)) => 1,
        Some(_) | None => 2,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn Error>> {
    std::fs::create_dir_all(&cli.out)?;
    let strict_override = if cli.strict {
        Some(true)
    } else if cli.no_strict {
        Some(false)
    } else {
        None
    };

    match &cli.cmd {
        Cmd::WaveProbe {
            eta,
            n,
            d_max,
            s_max,
        } => wave_probe(&cli.out, *eta, *n, *d_max, *s_max),
        Cmd::FluxGen { tau } => {
            let (cfg, warns) = need_config(&cli, strict_override)?;
            report_warnings(&warns);
            flux_gen(&cli.out, &cfg, *tau)
        }
        Cmd::Forward { tau, field } => {
            let (cfg, warns) = need_config(&cli, strict_override)?;
            report_warnings(&warns);
            forward(&cli.out, &cfg, *tau, *field)
        }
        Cmd::IndicatorSweep => {
            let (cfg, warns) = need_config(&cli, strict_override)?;
            report_warnings(&warns);
            indicator_sweep(&cli.out, &cfg, cli.jobs, &warns)
        }
        Cmd::Extract { csv, t_hyp } => {
            let (cfg, warns) = need_config(&cli, strict_override)?;
            report_warnings(&warns);
            let csv_path = csv
                .clone()
                .unwrap_or_else(|| cli.out.join("indicator_sweep.csv"));
            extract(&cli.out, &cfg, &csv_path, t_hyp)
        }
        Cmd::VerifyPotential => verify_potential_cmd(&cli.out),
        Cmd::VerifyAll { suite } => verify_all_cmd(*suite),
    }
}

fn need_config(
    cli: &Cli,
    strict_override: Option<bool>,
) -> Result<(RunConfig, Vec<String>), Box<dyn Error>> {
    let path = cli
        .config
        .as_ref()
        .ok_or("this subcommand needs --config <PATH>")?;
    Ok(load_config_with(path, strict_override)?)
}

fn report_warnings(warns: &[String]) {
    for w in warns {
        eprintln!("warning: {w}");
    }
}

fn wave_probe(
    out: &Path,
    eta: f64,
    n: usize,
    d_max: f64,
    s_max: f64,
) -> Result<ExitCode, Box<dyn Error>> {
    if eta <= 0.0 || n < 2 || d_max <= 0.0 || s_max <= 0.0 {
        return Err(CoreError::Config(
            "wave-probe needs eta > 0, n >= 2, and positive ranges".into(),
        )
        .into());
    }
    let mut body = String::from("d,s,v,dv_ds\n");
    for i in 0..n {
        let d = d_max * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let s = s_max * j as f64 / (n - 1) as f64;
            let e = kirchhoff_radial(d, s, eta);
            writeln!(body, "{d},{s},{},{}", e.v, e.dv_ds)?;
        }
    }
    let path = out.join("wave_probe.csv");
    atomic_write(&path, body.as_bytes())?;
    println!("wrote {} ({} rows)", path.display(), n * n);
    Ok(ExitCode::SUCCESS)
}

fn flux_gen(out: &Path, cfg: &RunConfig, tau: f64) -> Result<ExitCode, Box<dyn Error>> {
    check_tau(cfg, tau)?;
    let t_final = cfg.disc.t_final;
    let c = cfg.body.center;
    let x = [c[0] + cfg.body.r_omega, c[1], c[2]];
    let nrm = [1.0, 0.0, 0.0];
    let n_t = cfg.disc.n_t;
    let mut body = String::from("t,f\n");
    for i in 0..=n_t {
        let t = t_final * i as f64 / n_t as f64;
        let f = flux_trace(&x, &nrm, t, t_final, tau, &cfg.probe);
        writeln!(body, "{t},{f}")?;
    }
    let path = out.join("flux.csv");
    atomic_write(&path, body.as_bytes())?;
    println!("wrote {} ({} samples)", path.display(), n_t + 1);
    Ok(ExitCode::SUCCESS)
}

fn forward(out: &Path, cfg: &RunConfig, tau: f64, field: bool) -> Result<ExitCode, Box<dyn Error>> {
    check_tau(cfg, tau)?;
    let t0 = Instant::now();
    let sol = solve_radial_heat(
        &cfg.body,
        &cfg.probe,
        &cfg.disc,
        tau,
        CnOptions {
            want_profile: false,
            want_field: field,
        },
    )?;
    let t_final = cfg.disc.t_final;
    let c = cfg.body.center;
    let x = [c[0] + cfg.body.r_omega, c[1], c[2]];
    let nrm = [1.0, 0.0, 0.0];

    let mut body = String::from("t,u,f\n");
    for (i, &t) in sol.ts.iter().enumerate() {
        let f = flux_trace(&x, &nrm, t, t_final, tau, &cfg.probe);
        writeln!(body, "{t},{},{f}", sol.boundary_trace[i])?;
    }
    let trace_path = out.join("forward_trace.csv");
    atomic_write(&trace_path, body.as_bytes())?;
    println!(
        "wrote {} ({} steps from t = {:.6}; solve took {:.2} s)",
        trace_path.display(),
        sol.n_steps,
        sol.ts[0],
        t0.elapsed().as_secs_f64()
    );
    println!(
        "boundary max |u| = {:.6e}, final heat content = {:.6e}, flux time-integral = {:.6e}",
        sol.max_abs_boundary, sol.heat_content_final, sol.flux_time_integral
    );

    if let Some(data) = &sol.field {
        let path = out.join("forward_field.bin");
        atomic_write(&path, &encode_field(&sol.r, &sol.ts, data))?;
        println!(
            "wrote {} ({} x {} field samples)",
            path.display(),
            sol.ts.len(),
            sol.r.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}

/// Binary field layout: the 8-byte magic `ENCLFLD1`, the node counts n_r and
/// n_t as little-endian u64, the radial grid (n_r doubles), the time grid
/// (n_t doubles), then the temperature samples as n_t rows of n_r doubles
/// (time-major), all little-endian.
fn encode_field(r: &[f64], ts: &[f64], data: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(24 + 8 * (r.len() + ts.len() + data.len()));
    bytes.extend_from_slice(b"ENCLFLD1");
    bytes.extend_from_slice(&(r.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&(ts.len() as u64).to_le_bytes());
    for v in r.iter().chain(ts).chain(data) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Validate a one-off tau against the same window/overflow rules the
/// configured sweep list obeys.
fn check_tau(cfg: &RunConfig, tau: f64) -> Result<(), Box<dyn Error>> {
    let reach = cfg.body.r_omega + cfg.probe.eta;
    let tau_min = (reach / cfg.disc.t_final).powi(2);
    let tau_max = (enclosure_core::heat::MAX_SCALED_EXPONENT / reach).powi(2);
    if !tau.is_finite() || tau <= tau_min {
        return Err(CoreError::Config(format!(
            "tau = {tau} is unusable: the collapsed pulse must clear the body within the \
             observation window, which needs tau > {tau_min:.4}"
        ))
        .into());
    }
    if tau > tau_max {
        return Err(CoreError::NumericRange(format!(
            "tau = {tau} overflows the scaled transforms; largest admissible tau is {tau_max:.3e}"
        ))
        .into());
    }
    Ok(())
}

/// Default observation-time hypotheses for the terminal classifier: the
/// configured window itself and a clearly-longer alternative.
fn default_t_hyps(t_final: f64) -> Vec<f64> {
    let mut v = vec![t_final, 4.0 * t_final];
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn indicator_sweep(
    out: &Path,
    cfg: &RunConfig,
    jobs: Option<usize>,
    warns: &[String],
) -> Result<ExitCode, Box<dyn Error>> {
    let t0 = Instant::now();
    let opts = IndicatorOptions {
        with_decomposition: true,
        ..IndicatorOptions::default()
    };
    let samples = run_sweep(cfg, jobs, &opts)?;
    for s in &samples {
        let flag = if s.converged { "" } else { " [unconverged]" };
        println!(
            "tau = {:>8}: I_scaled = {:+.6e}{flag} ({:.2} s, {} x {} grid)",
            s.tau, s.i_scaled, s.wall_time_s, s.grid.n_r, s.grid.n_steps
        );
    }

    let csv_path = out.join("indicator_sweep.csv");
    write_indicator_csv(&samples, &csv_path)?;

    let pairs: Vec<(f64, f64)> = samples.iter().map(|s| (s.tau, s.i_scaled)).collect();
    let report = build_extract_report(&pairs, cfg.probe.eta, &default_t_hyps(cfg.disc.t_final));
    let report_path = out.join("extract_report.json");
    write_extract_report(&report, &report_path)?;
    print_report_summary(&report);

    let manifest_path = out.join("run_manifest.json");
    let outputs = vec![
        csv_path.display().to_string(),
        report_path.display().to_string(),
        manifest_path.display().to_string(),
    ];
    write_manifest(cfg, &samples, outputs, warns, &manifest_path)?;

    println!(
        "wrote {}, {}, {} in {:.1} s",
        csv_path.display(),
        report_path.display(),
        manifest_path.display(),
        t0.elapsed().as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}

fn extract(
    out: &Path,
    cfg: &RunConfig,
    csv_path: &Path,
    t_hyp: &[f64],
) -> Result<ExitCode, Box<dyn Error>> {
    let pairs = enclosure_core::sweep::read_indicator_csv(csv_path)?;
    let t_hyps = if t_hyp.is_empty() {
        default_t_hyps(cfg.disc.t_final)
    } else {
        t_hyp.to_vec()
    };
    let report = build_extract_report(&pairs, cfg.probe.eta, &t_hyps);
    let report_path = out.join("extract_report.json");
    write_extract_report(&report, &report_path)?;
    print_report_summary(&report);
    println!("wrote {}", report_path.display());
    Ok(ExitCode::SUCCESS)
}

fn print_report_summary(report: &enclosure_core::sweep::ExtractReport) {
    match (&report.fit, &report.fit_error) {
        (Some(fit), _) => {
            println!(
                "fit over {} points: L_hat = {:.4}, cavity reach R_D_hat = {:.4} \
                 (prefactor power {:.2}, residual rms {:.2e})",
                fit.n_used, fit.l_hat, fit.r_d_hat, fit.prefactor_power, fit.residual_rms
            );
        }
        (None, Some(err)) => println!("fit unavailable: {err}"),
        (None, None) => {}
    }
    if let Some(naive) = report.naive_estimate {
        println!(
            "one-point reading at tau = {}: L = {:.4}",
            report.naive_tau, naive
        );
    }
    for c in &report.classifications {
        println!("window T = {}: terminal behavior {:?}", c.t_hyp, c.verdict);
    }
    if let Some(rate) = &report.rate {
        println!(
            "rate diagnostic: residual slope {:.4}, log-log exponent {:.2}, non-converging: {}",
            rate.slope, rate.exponent, rate.non_converging
        );
    }
}

fn verify_potential_cmd(out: &Path) -> Result<ExitCode, Box<dyn Error>> {
    let t0 = Instant::now();
    let mut body = String::from("d,tau_hat,t_hat,eta,lhs,rhs,rel_err\n");
    let mut max_err: f64 = 0.0;
    let mut all_converged = true;
    for &(tau_hat, t_hat, eta, d) in verify::POTENTIAL_POINTS.iter() {
        let chk = wave_potential_check(d, tau_hat, t_hat, eta, 80)?;
        writeln!(
            body,
            "{d},{tau_hat},{t_hat},{eta},{},{},{}",
            chk.lhs, chk.rhs, chk.rel_err
        )?;
        max_err = max_err.max(chk.rel_err);
        all_converged &= chk.converged;
    }
    let path = out.join("potential_identity.csv");
    atomic_write(&path, body.as_bytes())?;

    let passed = max_err <= verify::TOL_POTENTIAL_REL && all_converged;
    let report = SuiteReport {
        name: "wave-potential reciprocity".into(),
        passed,
        max_err,
        tolerance: verify::TOL_POTENTIAL_REL,
        detail: format!(
            "{} points, quadrature self-converged: {all_converged}",
            verify::POTENTIAL_POINTS.len()
        ),
    };
    println!("{}", report.line());
    println!(
        "wrote {} ({:.1} s)",
        path.display(),
        t0.elapsed().as_secs_f64()
    );
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn verify_all_cmd(suite: SuiteSel) -> Result<ExitCode, Box<dyn Error>> {
    let reports: Vec<SuiteReport> = match suite {
        SuiteSel::Potential => vec![verify::verify_potential()?],
        SuiteSel::Forms => vec![verify::verify_forms()?],
        SuiteSel::Kirchhoff => vec![verify::verify_kirchhoff()?],
        SuiteSel::Mms => vec![verify::verify_mms()?],
        SuiteSel::Decomposition => vec![verify::verify_decomposition()?],
        SuiteSel::All => verify::verify_all()?,
    };
    let mut all_ok = true;
    for r in &reports {
        println!("{}", r.line());
        all_ok &= r.passed;
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
