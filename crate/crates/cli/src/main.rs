use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use spinflip_cli::commands::{self, Context};
use spinflip_cli::config::{RunConfig, TEMPLATES};
use spinflip_cli::table::Table;
use spinflip_cli::verify::{self, Fault};
use spinflip_cli::{CliError, Result};

/// Magnetic spin-flip rates and spatial coherence of atoms above layered
/// conducting surfaces.
#[derive(Parser)]
#[command(name = "spinflip", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration; the fig1 template is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `geometry.d_um=[5, 10]` or `stack.layers.0.skin_depth_um=50`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory, overriding output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write JSON next to each CSV; for verify, print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Leave the generation time out of the output, for byte-identical reruns.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Relative quadrature tolerance, overriding numerics.rel_tol.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Spin-flip rate, line shift and thermal factor over the d, h, delta grid.
    Rate,
    /// S(l), its small-l form and rho12(t), one file per distance.
    Coherence,
    /// Half-coherence length against film thickness, one file per skin depth.
    Halfwidth,
    /// Run the built-in oracle and identity checks.
    Verify {
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Write a configuration template.
    Init {
        #[arg(long, default_value = "fig1", value_parser = clap::builder::PossibleValuesParser::new(TEMPLATES))]
        template: String,
        /// Destination; printed to stdout when omitted.
        path: Option<PathBuf>,
    },
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut overrides = g.set.clone();
    if let Some(tol) = g.tol {
        overrides.push(format!("numerics.rel_tol={tol:e}"));
    }
    if let Some(out) = &g.out {
        overrides.push(format!("output.dir={}", toml::Value::String(out.display().to_string())));
    }
    RunConfig::load(g.config.as_deref(), &overrides)
}

fn write_tables(g: &Global, config: &RunConfig, tables: &[Table]) -> Result<()> {
    let timestamp = (!g.no_timestamp).then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    let dir = PathBuf::from(&config.output.dir);
    for t in tables {
        for path in t.write(&dir, timestamp.as_deref(), g.json)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Rate | Command::Coherence | Command::Halfwidth => {
            let config = load_config(g)?;
            let ctx = Context::new(config.clone(), g.jobs)?;
            let tables = match cli.command {
                Command::Rate => commands::rate(&ctx)?,
                Command::Coherence => commands::coherence(&ctx)?,
                _ => commands::halfwidth(&ctx)?,
            };
            write_tables(g, &config, &tables)
        }
        Command::Verify { inject_fault } => {
            let fault = inject_fault.as_deref().map(Fault::parse).transpose()?;
            let tol = match g.tol {
                Some(t) => t,
                None => load_config(g)?.numerics.rel_tol,
            };
            let report = verify::run(tol, fault)?;
            if g.json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print!("{}", report.to_text());
            }
            report.status()
        }
        Command::Init { template, path } => {
            let text = RunConfig::template(template)?.to_template_text();
            match path {
                Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
                    path: p.display().to_string(),
                    source,
                }),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("spinflip: {e}");
        std::process::exit(e.exit_code());
    }
}
