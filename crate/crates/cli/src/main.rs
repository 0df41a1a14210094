//! `cwl`: experiment driver for cone-wise linear dynamics.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Common;
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(
    name = "cwl",
    version,
    about = "Random cone-wise linear systems: simulations and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One recorded trajectory of a random matrix pair.
    Trajectory {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::TrajectoryArgs,
    },
    /// Persistence of the Gaussian surrogate process.
    GpPersistence {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::GpArgs,
    },
    /// Persistence of the first component under finite-N matrix dynamics.
    MatrixPersistence {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::MatrixPersistenceArgs,
    },
    /// Distribution of the Lyapunov exponent over random pairs.
    Lyapunov {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::LyapunovArgs,
    },
    /// Finite-size scaling collapse of matrix persistence curves.
    Collapse {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::CollapseArgs,
    },
    /// Lyapunov exponents of the alternating renewal model.
    Renewal {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::RenewalArgs,
    },
    /// Tabulated Lamperti density and distribution function.
    LampertiPdf {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::LampertiArgs,
    },
    /// Stieltjes transform of the Lamperti law, quadrature against closed form.
    StieltjesCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::StieltjesArgs,
    },
    /// Convergence of the renewal exponent for finite-mean intervals.
    SelfAveraging {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::SelfAveragingArgs,
    },
    /// Persistence for non-symmetric (elliptic) matrix pairs.
    Elliptic {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::EllipticArgs,
    },
    /// Persistence in the starting cone of a 2^p-cone system.
    Multicone {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::MulticoneArgs,
    },
    /// Spectral moments against their edge asymptotics.
    Spectral {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: commands::SpectralArgs,
    },
    /// Run the acceptance checks and report pass/fail per criterion.
    Verify {
        #[command(flatten)]
        args: commands::VerifyArgs,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn set_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Trajectory { common, args } => {
            set_threads(common.threads)?;
            commands::trajectory(&common, &args)
        }
        Command::GpPersistence { common, args } => {
            set_threads(common.threads)?;
            commands::gp_persistence(&common, &args)
        }
        Command::MatrixPersistence { common, args } => {
            set_threads(common.threads)?;
            commands::matrix_persistence(&common, &args)
        }
        Command::Lyapunov { common, args } => {
            set_threads(common.threads)?;
            commands::lyapunov(&common, &args)
        }
        Command::Collapse { common, args } => {
            set_threads(common.threads)?;
            commands::collapse(&common, &args)
        }
        Command::Renewal { common, args } => {
            set_threads(common.threads)?;
            commands::renewal(&common, &args)
        }
        Command::LampertiPdf { common, args } => {
            set_threads(common.threads)?;
            commands::lamperti_pdf_cmd(&common, &args)
        }
        Command::StieltjesCheck { common, args } => {
            set_threads(common.threads)?;
            commands::stieltjes_check(&common, &args)
        }
        Command::SelfAveraging { common, args } => {
            set_threads(common.threads)?;
            commands::self_averaging(&common, &args)
        }
        Command::Elliptic { common, args } => {
            set_threads(common.threads)?;
            commands::elliptic(&common, &args)
        }
        Command::Multicone { common, args } => {
            set_threads(common.threads)?;
            commands::multicone(&common, &args)
        }
        Command::Spectral { common, args } => {
            set_threads(common.threads)?;
            commands::spectral_cmd(&common, &args)
        }
        Command::Verify { args, threads } => {
            set_threads(threads)?;
            commands::verify(&args)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cwl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
