//! `qhyst`: dimer and box tunnelling-hysteresis experiments from the
//! command line. Every command writes CSV (and optionally SVG) outputs plus a
//! JSON manifest that `qhyst replay` can rerun byte for byte.
//!
//! Exit codes: 0 success, 2 invalid flags or parameters, 3 runtime failure.

mod commands;
mod output;
mod params;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qhyst_core::hysteresis::CalibrationRecord;

use commands::Command;
use output::{Outputs, RunManifest};
use params::{read_config, usage, ParamSet, UsageError};

#[derive(Parser)]
#[command(name = "qhyst", version, about = "Tunnelling hysteresis in self-trapping dimer and box models")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dimer ground-state asymmetry over a t/U grid (closed form and annealed).
    DimerGround(Common),
    /// Dimer bias sweep with switching thresholds in the footer.
    DimerHysteresis(Common),
    /// Annealed box ground state and its Fourier coefficients.
    BoxAnneal(Common),
    /// Energy and <x>/a of a coefficient dump written by box-anneal.
    BoxEval(Common),
    /// Full field cycle over the box model.
    BoxHysteresis(Common),
    /// The same field cycle for several nonlinear coefficients.
    BetaScan(Common),
    /// Scan beta for the bistable working point and write a calibration file.
    Calibrate(Common),
    /// Rerun a command from its manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $QHYST_OUT_DIR, then the working directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Comma-separated list of nonlinear coefficients.
    #[arg(long, allow_hyphen_values = true)]
    betas: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    v_max: Option<String>,
    /// Static field for box-anneal and box-eval.
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<String>,
    #[arg(long)]
    box_a: Option<String>,
    #[arg(long)]
    n_grid: Option<String>,
    /// Coefficients per family (cosine and sine).
    #[arg(long)]
    n_coeffs: Option<String>,
    /// Temperature count for a linear 1 -> 0 ladder, or a comma-separated list.
    #[arg(long)]
    temps: Option<String>,
    #[arg(long)]
    cycles_per_temp: Option<String>,
    #[arg(long)]
    sigma0: Option<String>,
    #[arg(long)]
    sigma_floor: Option<String>,
    #[arg(long)]
    t0: Option<String>,
    #[arg(long)]
    steps_per_leg: Option<String>,
    #[arg(long)]
    sweeps_per_step: Option<String>,
    /// Cycle waypoints in units of v-max, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pattern: Option<String>,
    #[arg(long)]
    jump_min: Option<String>,
    #[arg(long)]
    start_side: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    area_floor: Option<String>,
    /// Dimer hopping.
    #[arg(long)]
    t: Option<String>,
    /// Dimer self-trapping strength.
    #[arg(long)]
    u: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps1: Option<String>,
    #[arg(long)]
    eps2_max: Option<String>,
    #[arg(long)]
    eps2_step: Option<String>,
    /// Comma-separated t/U grid.
    #[arg(long)]
    ratios: Option<String>,
    /// Coefficient dump to evaluate.
    #[arg(long)]
    coeffs: Option<String>,
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    doubling: bool,
    #[arg(long)]
    mirrored: bool,
}

impl Common {
    fn flag_layer(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let opts: [(&str, &Option<String>); 28] = [
            ("gamma", &self.gamma),
            ("beta", &self.beta),
            ("betas", &self.betas),
            ("v-max", &self.v_max),
            ("v0", &self.v0),
            ("box-a", &self.box_a),
            ("n-grid", &self.n_grid),
            ("n-coeffs", &self.n_coeffs),
            ("temps", &self.temps),
            ("cycles-per-temp", &self.cycles_per_temp),
            ("sigma0", &self.sigma0),
            ("sigma-floor", &self.sigma_floor),
            ("t0", &self.t0),
            ("steps-per-leg", &self.steps_per_leg),
            ("sweeps-per-step", &self.sweeps_per_step),
            ("pattern", &self.pattern),
            ("jump-min", &self.jump_min),
            ("start-side", &self.start_side),
            ("seed", &self.seed),
            ("seeds", &self.seeds),
            ("area-floor", &self.area_floor),
            ("t", &self.t),
            ("u", &self.u),
            ("eps1", &self.eps1),
            ("eps2-max", &self.eps2_max),
            ("eps2-step", &self.eps2_step),
            ("ratios", &self.ratios),
            ("coeffs", &self.coeffs),
        ];
        for (k, v) in opts {
            if let Some(v) = v {
                m.insert(k.to_string(), v.clone());
            }
        }
        for (k, on) in [("svg", self.svg), ("doubling", self.doubling), ("mirrored", self.mirrored)] {
            if on {
                m.insert(k.to_string(), "true".to_string());
            }
        }
        m
    }
}

fn out_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os("QHYST_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn resolve(cmd: Command, args: &Common) -> anyhow::Result<ParamSet> {
    let mut p = cmd.defaults();
    if let Some(name) = &args.preset {
        p.overlay(&cmd.preset(name)?, "--preset")?;
    }
    if let Some(path) = &args.config {
        p.overlay(&read_config(path)?, "--config")?;
    }
    p.overlay(&args.flag_layer(), "flags")?;
    Ok(p)
}

fn run_resolved(cmd: Command, p: &ParamSet, dir: &Path) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut out = Outputs::new(dir.to_path_buf());
    cmd.execute(p, &mut out)?;
    let seed = if p.as_map().contains_key("seed") { p.get("seed")? } else { 0 };
    let manifest = RunManifest {
        command: cmd.name().to_string(),
        params: p.as_map().clone(),
        seed,
        calibration_version: CalibrationRecord::bundled()?.version,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs: out.written.clone(),
    };
    let name = RunManifest::file_name(cmd.name());
    output::write_atomic(&dir.join(&name), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    for f in out.written.iter().chain(std::iter::once(&name)) {
        eprintln!("wrote {}", dir.join(f).display());
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (cmd, args) = match cli.command {
        Cmd::Replay { manifest, out_dir: dir } => {
            let m = RunManifest::read(&manifest).map_err(|e| usage(format!("{e:#}")))?;
            let cmd = Command::from_name(&m.command)
                .ok_or_else(|| usage(format!("manifest names unknown command `{}`", m.command)))?;
            let mut p = cmd.defaults();
            p.overlay(&m.params, "manifest")?;
            let dir = dir.unwrap_or_else(|| manifest.parent().map(Path::to_path_buf).unwrap_or_default());
            return run_resolved(cmd, &p, &dir);
        }
        Cmd::DimerGround(a) => (Command::DimerGround, a),
        Cmd::DimerHysteresis(a) => (Command::DimerHysteresis, a),
        Cmd::BoxAnneal(a) => (Command::BoxAnneal, a),
        Cmd::BoxEval(a) => (Command::BoxEval, a),
        Cmd::BoxHysteresis(a) => (Command::BoxHysteresis, a),
        Cmd::BetaScan(a) => (Command::BetaScan, a),
        Cmd::Calibrate(a) => (Command::Calibrate, a),
    };
    let p = resolve(cmd, &args)?;
    run_resolved(cmd, &p, &out_dir(args.out_dir.clone()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let invalid = e.downcast_ref::<UsageError>().is_some()
                || matches!(e.downcast_ref::<qhyst_core::Error>(), Some(qhyst_core::Error::Validation { .. }));
            ExitCode::from(if invalid { 2 } else { 3 })
        }
    }
}
