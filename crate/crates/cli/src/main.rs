use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use salamander_cli::{
    cmd_eval, cmd_rollout, cmd_train, cmd_transition, CliError, CommandSpec, CommonArgs, EvalArgs, RolloutArgs,
    TrainArgs, TransitionArgs,
};

#[derive(Parser)]
#[command(name = "salamander", version, about = "Amphibious salamander-robot locomotion: train, evaluate, record")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Shipped preset (desk-flat, desk-rough-{easy,medium,hard}, desk-transition).
    #[arg(long)]
    preset: Option<String>,
    /// Run configuration TOML ([env], [train], optional [arena]).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-path override, e.g. `train.total_steps=200000`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $SALAMANDER_OUT/<command>-<preset>-seed<N>, or ./runs/...).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl From<Common> for CommonArgs {
    fn from(c: Common) -> Self {
        CommonArgs {
            preset: c.preset,
            config: c.config,
            overrides: c.overrides,
            seed: c.seed,
            out: c.out,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a policy with PPO.
    Train {
        #[command(flatten)]
        common: Common,
        /// Intermediate checkpoint every N iterations (0: final only).
        #[arg(long, default_value_t = 0)]
        checkpoint_every: u64,
    },
    /// Forward-velocity statistics over evaluation episodes.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Policy checkpoint; the posture-holding zero policy when absent.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// `random`, `v_x` or `v_x,v_y,omega_z`.
        #[arg(long, default_value = "0.3")]
        command: CommandSpec,
        #[arg(long, default_value_t = 3)]
        episodes: usize,
        /// Episode length, s.
        #[arg(long, default_value_t = 20.0)]
        duration: f64,
    },
    /// Record one 50 Hz trajectory.
    Rollout {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        command: Option<CommandSpec>,
        #[arg(long, default_value_t = 20.0)]
        duration: f64,
    },
    /// Land-to-water run with traveling-wave analysis.
    Transition {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Constant forward command, m/s.
        #[arg(long, default_value_t = 0.2)]
        v_cmd: f64,
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Train { common, checkpoint_every } => {
            let o = cmd_train(&TrainArgs {
                common: common.into(),
                checkpoint_every,
            })?;
            println!("trained {} env steps -> {}", o.env_steps, o.checkpoint.display());
        }
        Cmd::Eval {
            common,
            checkpoint,
            command,
            episodes,
            duration,
        } => {
            let o = cmd_eval(&EvalArgs {
                common: common.into(),
                checkpoint,
                command,
                episodes,
                duration,
            })?;
            let s = &o.summary;
            println!(
                "{}: v_b,x = {} m/s over {} episodes (fall rate {:.2}) -> {}",
                s.terrain,
                s.v_bx,
                s.episodes,
                s.fall_rate,
                o.out_dir.display()
            );
        }
        Cmd::Rollout {
            common,
            checkpoint,
            command,
            duration,
        } => {
            let o = cmd_rollout(&RolloutArgs {
                common: common.into(),
                checkpoint,
                command,
                duration,
            })?;
            println!(
                "{} rows, distance {:.3} m, fell {} -> {}",
                o.summary.rows,
                o.summary.distance,
                o.summary.fell,
                o.out_dir.display()
            );
        }
        Cmd::Transition {
            common,
            checkpoint,
            v_cmd,
            duration,
        } => {
            let o = cmd_transition(&TransitionArgs {
                common: common.into(),
                checkpoint,
                v_cmd,
                duration,
            })?;
            let r = &o.report;
            println!(
                "water entries {}, entry {:?} s, contacts gone {:?} s, traveling wave {:?} -> {}",
                r.sigma_entries,
                r.entry_time,
                r.contacts_zero_time,
                r.wave.as_ref().map(|w| w.traveling_wave),
                o.out_dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
