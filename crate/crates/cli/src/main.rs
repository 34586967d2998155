mod commands;
mod output;
mod watch;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Compiler, runner and live-preview server for CGui modules.
#[derive(Debug, Parser)]
#[command(name = "cgui", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and analyze files, printing diagnostics.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long = "search", value_name = "DIR")]
        search: Vec<PathBuf>,
    },
    /// Compile a file and run a code generator on it.
    Build {
        file: PathBuf,
        #[arg(long)]
        target: String,
        /// Output file, or directory for multi-file targets.
        #[arg(short = 'o', value_name = "PATH")]
        output: PathBuf,
        #[arg(long = "search", value_name = "DIR")]
        search: Vec<PathBuf>,
    },
    /// Run a conformance script against a module.
    Eval {
        file: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value = "400x300", value_parser = commands::parse_viewport)]
        viewport: (f64, f64),
        #[arg(long = "search", value_name = "DIR")]
        search: Vec<PathBuf>,
    },
    /// Render a module's scene to SVG.
    Render {
        file: PathBuf,
        /// Source assignment applied after instantiation, as var=value.
        #[arg(long = "set", value_name = "VAR=VALUE")]
        sets: Vec<String>,
        #[arg(short = 'o', value_name = "OUT.svg")]
        output: PathBuf,
        #[arg(long, default_value = "400x300", value_parser = commands::parse_viewport)]
        viewport: (f64, f64),
        #[arg(long = "search", value_name = "DIR")]
        search: Vec<PathBuf>,
    },
    /// Serve a live preview of a directory, pushing recompiles to clients.
    Watch {
        dir: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value_t = 200)]
        poll_ms: u64,
        /// The module to preview, relative to DIR. Defaults to the only
        /// `.cgui` file, or `main.cgui`, or the first one alphabetically.
        #[arg(long)]
        entry: Option<PathBuf>,
        #[arg(long = "search", value_name = "DIR")]
        search: Vec<PathBuf>,
    },
}

/// `--search` directories followed by those in `CGUI_SEARCH_PATH`.
fn search_path(flags: Vec<PathBuf>) -> Vec<PathBuf> {
    let mut dirs = flags;
    if let Some(env) = std::env::var_os("CGUI_SEARCH_PATH") {
        dirs.extend(std::env::split_paths(&env).filter(|p| !p.as_os_str().is_empty()));
    }
    dirs
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Check { files, search } => commands::check(&files, &search_path(search)),
        Command::Build {
            file,
            target,
            output,
            search,
        } => commands::build(&file, &target, &output, &search_path(search)),
        Command::Eval {
            file,
            script,
            viewport,
            search,
        } => commands::eval(&file, &script, viewport, &search_path(search)),
        Command::Render {
            file,
            sets,
            output,
            viewport,
            search,
        } => commands::render(&file, &sets, &output, viewport, &search_path(search)),
        Command::Watch {
            dir,
            port,
            poll_ms,
            entry,
            search,
        } => watch::run(watch::Options {
            dir,
            port,
            poll_ms,
            entry,
            search: search_path(search),
        }),
    };
    ExitCode::from(code)
}
