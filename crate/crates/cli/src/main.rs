//! `bohmnl`: Bohmian trajectories and the nonlocality measure for a squeezed
//! two-particle state, unitary or in Caldeira-Leggett baths.

mod commands;
mod output;
mod settings;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use settings::Settings;

/// An error carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
    pub usage: bool,
}

impl CliError {
    pub fn usage(msg: String) -> Self {
        Self { code: 2, msg, usage: false }
    }

    pub fn missing(key: &str) -> Self {
        Self { code: 2, msg: format!("missing required --{key} (flag or config key)"), usage: true }
    }

    pub fn numerical(msg: String) -> Self {
        Self { code: 3, msg, usage: false }
    }

    pub fn validation(msg: String) -> Self {
        Self { code: 4, msg, usage: false }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<bohmnl_core::Error> for CliError {
    fn from(e: bohmnl_core::Error) -> Self {
        if e.is_parameter_error() {
            Self::usage(e.to_string())
        } else {
            Self::numerical(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(name = "bohmnl", version, about = "Bohmian trajectories and nonlocality measure in Caldeira-Leggett baths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the model-driven subcommands. Any of them may also come
/// from `--config`; flags win.
#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// sch, distinct or common (comma list for fwhm/sweep) [default: sch]
    #[arg(long)]
    scenario: Option<String>,
    /// Relaxation rate γ [default: 0.1]
    #[arg(long)]
    gamma: Option<String>,
    /// Bath temperature T; D = 2γT [default: 10]
    #[arg(long)]
    temp: Option<String>,
    /// Squeezing factor μ in (0, 1] (required)
    #[arg(long)]
    mu: Option<String>,
    /// End of the time window [default: 6]
    #[arg(long = "t-end")]
    t_end: Option<String>,
    /// Time step [default: 0.001]
    #[arg(long)]
    dt: Option<String>,
    /// Seed for Born-rule sampling [default: 1]
    #[arg(long)]
    seed: Option<String>,
    /// Number of sampled initial points [default: 1000]
    #[arg(long)]
    n: Option<String>,
    /// Output CSV path [default: standard output]
    #[arg(long)]
    out: Option<String>,
    /// Flat key = value file with the same keys as the long flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write an SVG plot (eta, traj)
    #[arg(long)]
    svg: Option<String>,
}

impl ModelArgs {
    fn settings(self) -> Result<Settings, CliError> {
        let mut s = Settings::load(self.config.as_deref())?;
        for (key, value) in [
            ("scenario", self.scenario),
            ("gamma", self.gamma),
            ("temp", self.temp),
            ("mu", self.mu),
            ("t-end", self.t_end),
            ("dt", self.dt),
            ("seed", self.seed),
            ("n", self.n),
            ("out", self.out),
            ("svg", self.svg),
        ] {
            s.set_flag(key, value);
        }
        Ok(s)
    }
}

#[derive(Subcommand)]
enum Command {
    /// η(t) on the time grid as CSV `t,eta`
    Eta {
        #[command(flatten)]
        model: ModelArgs,
        /// closed, engine or ensemble [default: closed]
        #[arg(long)]
        method: Option<String>,
    },
    /// Trajectories as CSV `t,x1_0,x2_0,x1_1,...`
    Traj {
        #[command(flatten)]
        model: ModelArgs,
        /// Initial point X10,X20 (repeatable); without any, --n points are sampled
        #[arg(long, allow_hyphen_values = true)]
        point: Vec<String>,
        /// Rerun with dt/2 and fail unless the runs agree to 1e-8
        #[arg(long)]
        validate: bool,
    },
    /// Peak, FWHM and revival count per parameter point
    Fwhm {
        #[command(flatten)]
        model: ModelArgs,
        /// Analyse an existing `t,eta` CSV instead of a model
        #[arg(long)]
        input: Option<String>,
        /// Revival prominence as a fraction of the peak [default: 0.02]
        #[arg(long)]
        prominence: Option<String>,
        /// closed or engine [default: closed]
        #[arg(long)]
        method: Option<String>,
    },
    /// Full analytics over the cartesian grid of the list-valued flags
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        /// Revival prominence as a fraction of the peak [default: 0.02]
        #[arg(long)]
        prominence: Option<String>,
        /// closed or engine [default: closed]
        #[arg(long)]
        method: Option<String>,
    },
    /// Run the acceptance suite; exit 4 unless every criterion passes
    Validate {
        #[arg(long, default_value_t = 20_250_101)]
        seed: u64,
        /// Scale every bath temperature (and D) before checking
        #[arg(long, default_value_t = 1.0)]
        diffusion_scale: f64,
    },
    /// Render a CSV written by eta or traj as SVG
    Plot {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eta { model, method } => {
            let mut s = model.settings()?;
            s.set_flag("method", method);
            commands::eta(&s)
        }
        Command::Traj { model, point, validate } => {
            let mut s = model.settings()?;
            s.set_flag_list("point", point);
            commands::traj(&s, validate)
        }
        Command::Fwhm { model, input, prominence, method } => {
            let mut s = model.settings()?;
            s.set_flag("input", input);
            s.set_flag("prominence", prominence);
            s.set_flag("method", method);
            commands::fwhm(&s)
        }
        Command::Sweep { model, prominence, method } => {
            let mut s = model.settings()?;
            s.set_flag("prominence", prominence);
            s.set_flag("method", method);
            commands::sweep(&s)
        }
        Command::Validate { seed, diffusion_scale } => commands::validate(seed, diffusion_scale),
        Command::Plot { input, out } => commands::plot(&input, out.as_deref()),
    }
}

fn subcommand_usage(name: &str) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    match cmd.find_subcommand_mut(name) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let name = matches.subcommand_name().unwrap_or_default().to_string();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.usage {
                eprintln!("\n{}", subcommand_usage(&name));
            }
            ExitCode::from(e.code)
        }
    }
}
