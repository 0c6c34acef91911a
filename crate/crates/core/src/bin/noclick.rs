use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use noclick_core::run::{
    run_crossing, run_sweep, run_timeseries, to_json, write_csv, write_sweep_csv, ParamSet, ProtocolKind, RunConfig,
};
use noclick_core::{Error, Result};

#[derive(Parser)]
#[command(name = "noclick", version, about = "Entanglement asymmetry under no-click monitored quenches")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// S_n(t) and ΔS_n(t) for one initial state.
    Timeseries(Common),
    /// Two initial states, their crossing and the slow-mode criterion.
    Crossing {
        #[command(flatten)]
        common: Common,
        /// Second parameter set, `k=v,...`; unset keys inherit from --params.
        #[arg(long = "params-b", value_name = "K=V,...")]
        params_b: Option<String>,
    },
    /// One time series per grid point.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Grid point overriding --params; repeat for each point.
        #[arg(long = "point", value_name = "K=V,...", required = true)]
        points: Vec<String>,
    },
    /// Gaussian engine versus exact diagonalization on a small ring.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Largest accepted deviation in S_n and ΔS_n.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["xy", "ssh"])]
    protocol: Option<String>,
    #[arg(long, value_name = "K=V,...")]
    params: Option<String>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    nk: Option<usize>,
    #[arg(long)]
    nalpha: Option<usize>,
    #[arg(long = "finite-L", value_name = "L")]
    finite_l: Option<usize>,
    #[arg(long)]
    oracle: bool,
    /// Quasiparticle charged-moment columns (JSON output only).
    #[arg(long)]
    qp_overlay: bool,
    /// Destination file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads; output does not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str::<RunConfig>(&text)?
            }
            None => {
                let protocol: ProtocolKind = self
                    .protocol
                    .as_deref()
                    .ok_or_else(|| Error::config("protocol", "required without --config"))?
                    .parse()?;
                let ell = self.ell.ok_or_else(|| Error::config("ell", "required without --config"))?;
                RunConfig::new(protocol, ParamSet::default(), ell)
            }
        };
        if let Some(p) = &self.protocol {
            c.protocol = p.parse()?;
        }
        if let Some(spec) = &self.params {
            c.params = c.params.merge_str(spec)?;
        }
        if let Some(v) = self.ell {
            c.ell = v;
        }
        if let Some(v) = self.n {
            c.n = v;
        }
        if self.tmax.is_some() {
            c.t_max = self.tmax;
        }
        if let Some(v) = self.dt {
            c.dt = v;
        }
        if let Some(v) = self.nk {
            c.nk = v;
        }
        if self.nalpha.is_some() {
            c.n_alpha = self.nalpha;
        }
        if self.finite_l.is_some() {
            c.finite_l = self.finite_l;
        }
        c.oracle |= self.oracle;
        c.qp_overlay |= self.qp_overlay;
        Ok(c)
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{suffix}.{ext}"),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

fn emit_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut w = sink(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn execute(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Timeseries(common) => {
            let c = common.config()?;
            let rec = run_timeseries(&c)?;
            match common.format {
                Format::Csv => write_csv(&rec.rows, sink(common.out.as_deref())?)?,
                Format::Json => emit_text(common.out.as_deref(), &to_json(&rec)?)?,
            }
            for note in &rec.analysis.notes {
                eprintln!("note: {note}");
            }
            Ok(true)
        }
        Cmd::Crossing { common, params_b } => {
            let mut c = common.config()?;
            if let Some(spec) = params_b {
                c.params_b = Some(c.params.merge_str(&spec)?);
            }
            let rec = run_crossing(&c)?;
            match common.format {
                Format::Csv => {
                    let out = common
                        .out
                        .as_deref()
                        .ok_or_else(|| Error::config("out", "CSV crossing output writes two files and needs --out"))?;
                    write_csv(&rec.rows, sink(Some(out))?)?;
                    write_csv(rec.rows_b.as_deref().unwrap_or(&[]), sink(Some(&sibling(out, "b")))?)?;
                    emit_text(Some(&sibling(out, "crossing").with_extension("json")), &to_json(&rec.crossing)?)?;
                }
                Format::Json => emit_text(common.out.as_deref(), &to_json(&rec)?)?,
            }
            if let Some(x) = &rec.crossing {
                eprintln!(
                    "crossed: {} ({:?}), t_M = {:?}, predicted {:?}, verdict {:?}",
                    x.report.crossed, x.report.kind, x.report.t_m, x.predicted, x.report.criterion_verdict
                );
                for note in &x.notes {
                    eprintln!("note: {note}");
                }
            }
            Ok(true)
        }
        Cmd::Sweep { common, points } => {
            let c = common.config()?;
            let grid = points.iter().map(|s| ParamSet::default().merge_str(s)).collect::<Result<Vec<_>>>()?;
            let rec = run_sweep(&c, &grid)?;
            match common.format {
                Format::Csv => write_sweep_csv(&rec.summary, sink(common.out.as_deref())?)?,
                Format::Json => emit_text(common.out.as_deref(), &to_json(&rec)?)?,
            }
            let failed = rec.summary.iter().filter(|s| s.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} of {} grid points failed", rec.summary.len());
            }
            Ok(true)
        }
        Cmd::OracleCheck { common, tol } => {
            let mut c = common.config()?;
            c.oracle = true;
            c.finite_l.get_or_insert(8);
            let rec = run_timeseries(&c)?;
            let dev = rec.analysis.oracle_max_deviation.unwrap_or(f64::INFINITY);
            match common.format {
                Format::Csv => write_csv(&rec.rows, sink(common.out.as_deref())?)?,
                Format::Json => emit_text(common.out.as_deref(), &to_json(&rec)?)?,
            }
            let ok = dev <= tol;
            eprintln!("oracle max deviation {dev:.3e} (tol {tol:.1e}): {}", if ok { "ok" } else { "FAILED" });
            Ok(ok)
        }
    }
}

fn threads_of(cmd: &Cmd) -> Option<usize> {
    match cmd {
        Cmd::Timeseries(c) => c.threads,
        Cmd::Crossing { common, .. } | Cmd::Sweep { common, .. } | Cmd::OracleCheck { common, .. } => common.threads,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match threads_of(&cli.cmd) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))
            .and_then(|pool| pool.install(|| execute(cli.cmd))),
        None => execute(cli.cmd),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
