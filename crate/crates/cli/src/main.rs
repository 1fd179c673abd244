use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vtomo::experiment::{
    cmd_assemble, cmd_evaluate, cmd_mesh_gen, cmd_plot, cmd_reconstruct, cmd_simulate,
};
use vtomo::plot::PlotStyle;
use vtomo::{Config, Error, Mesh};

/// Vector field tomography of dipole electric fields in a conductive disk.
#[derive(Debug, Parser)]
#[command(name = "vtomo", version)]
struct Cli {
    /// Experiment configuration (`key = value` lines).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base noise seed; overrides `seed` from the config.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the fine and coarse disk meshes.
    MeshGen,
    /// Print statistics of a mesh file.
    MeshInfo { mesh: PathBuf },
    /// Forward solve, true field and noisy measurements.
    Simulate,
    /// Write the coarse-mesh ray matrices in triplet format.
    Assemble,
    /// Reconstruct the field for every noise realization.
    Reconstruct,
    /// Compare reconstructions with the true field.
    Evaluate,
    /// Render a field CSV as SVG.
    Plot {
        field: PathBuf,
        /// Output file; defaults to the field file with an `.svg` extension
        /// inside the output directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "both", value_parser = ["magnitude", "quiver", "both"])]
        style: String,
    },
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn config(cli: &Cli) -> Result<Config, Failure> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Usage("this command needs --config <file>".into()))?;
    let mut cfg = Config::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn list(quiet: bool, files: &[PathBuf]) {
    if !quiet {
        for f in files {
            println!("wrote {}", f.display());
        }
    }
}

fn mesh_info(path: &Path) -> Result<(), Failure> {
    let mesh: Mesh = vtomo::io::load_mesh(path)?;
    println!("nodes {}", mesh.num_nodes());
    println!("elements {}", mesh.num_elements());
    println!("boundary_nodes {}", mesh.boundary_nodes().len());
    println!("area {}", mesh.total_area());
    println!("max_edge {}", mesh.max_edge_length());
    println!("mean_edge {}", mesh.mean_edge_length());
    println!("connected {}", mesh.is_connected());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let quiet = cli.quiet;
    match &cli.command {
        Command::MeshGen => list(quiet, &cmd_mesh_gen(&config(cli)?)?),
        Command::MeshInfo { mesh } => mesh_info(mesh)?,
        Command::Simulate => list(quiet, &cmd_simulate(&config(cli)?)?),
        Command::Assemble => list(quiet, &cmd_assemble(&config(cli)?)?),
        Command::Reconstruct => {
            let reports = cmd_reconstruct(&config(cli)?)?;
            if !quiet {
                for (k, r) in reports.iter().enumerate() {
                    println!(
                        "realization {k}: objective {:.6e} fidelity {:.6e} iters {} ({:.1} s)",
                        r.objective, r.fidelity, r.iterations, r.seconds
                    );
                }
            }
        }
        Command::Evaluate => {
            let results = cmd_evaluate(&config(cli)?)?;
            if !quiet {
                println!("{}", vtomo::experiment::EVALUATION_HEADER);
                for (k, r) in results.iter().enumerate() {
                    let label = if k + 1 == results.len() {
                        "mean".into()
                    } else {
                        k.to_string()
                    };
                    println!(
                        "{label},{:.6},{:.6},{},{:.6},{:.6}",
                        r.mr, r.cs, r.loc_node, r.loc_error, r.max_mag_ratio
                    );
                }
            }
        }
        Command::Plot {
            field,
            output,
            style,
        } => {
            let style: PlotStyle = style.parse()?;
            let out = match output {
                Some(o) => o.clone(),
                None => {
                    let name = field.with_extension("svg");
                    let name = name
                        .file_name()
                        .ok_or_else(|| Failure::Usage("invalid field path".into()))?;
                    cli.out
                        .clone()
                        .unwrap_or_else(|| field.parent().unwrap_or(Path::new(".")).to_path_buf())
                        .join(name)
                }
            };
            cmd_plot::<f64>(field, &out, style)?;
            list(quiet, &[out]);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
