use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{commands, AppError};
use crate::data::{ChannelGroup, ChannelLayout, Population};
use crate::runtime::Pacing;
use crate::train::Profile;

const CONFIG_HELP: &str = "\
TRAINING CONFIG KEYS (--config, key=value lines or a JSON object; desk / full defaults)
  learning_rate   AdamW step size                         3e-4 / 1e-4
  finetune_learning_rate  step size when fine-tuning      1e-4 / 1e-4
  batch_size      windows per optimizer step              32 / 32
  pretrain_epochs passes over the healthy training split  40 / 80
  finetune_epochs passes over the fine-tuning split       30 / 80
  alpha           loss-balancing EMA smoothing, [0,1]     0.9 / 0.9
  seed            init, shuffling and dropout seed        0 / 0
  split_ratio     leading fraction of each trial trained  0.9 / 0.9
  heads           single-output | dual-output             dual-output
  num_blocks      residual blocks                         3 / 3
  channels        hidden channels per convolution         16 / 128
  kernel_size     convolution taps                        5 / 5
  dropout         dropout rate after each activation      0.1 / 0.1
  weight_decay    decoupled weight decay                  0.01 / 0.01
  window_chunk    consecutive windows per batch chunk     16 / 1

CONTROLLER CONFIG KEYS (--controller)
  mass_kg          participant mass, kg                   70
  gain_fraction    gain as a fraction of mass, [0,1]      0.2
  saturation_nm    command limit, Nm                      30
  ramp_in_s        gain ramp after (re)start, s           1.0
  gap_timeout_ms   input gap that forces a hold, ms       100
  filter_cutoff_hz estimate low-pass cutoff, Hz           7
  sample_hz        frame rate, Hz                         100
  fault_recovery   auto | latch                           auto

EXIT CODES
  0 success, 1 usage or config error, 2 data or model error, 3 runtime fault";

#[derive(Debug, Parser)]
#[command(name = "ankle-tcn", version, about = "Ankle torque estimation from wearable IMU data", after_long_help = CONFIG_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Desk,
    Full,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Full => Profile::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PopulationArg {
    Healthy,
    PostStroke,
}

impl From<PopulationArg> for Population {
    fn from(p: PopulationArg) -> Self {
        match p {
            PopulationArg::Healthy => Population::Healthy,
            PopulationArg::PostStroke => Population::PostStroke,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    /// The 16 streamed channels.
    Reduced,
    /// All 27 IMU channels (needed for feature importance).
    Full,
}

impl From<LayoutArg> for ChannelLayout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Reduced => ChannelLayout::Reduced16,
            LayoutArg::Full => ChannelLayout::Full27,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Angles,
    Accelerations,
    Gyros,
    All,
}

impl GroupArg {
    pub fn groups(self) -> Vec<ChannelGroup> {
        match self {
            GroupArg::Angles => vec![ChannelGroup::Angles],
            GroupArg::Accelerations => vec![ChannelGroup::Accelerations],
            GroupArg::Gyros => vec![ChannelGroup::Gyros],
            GroupArg::All => ChannelGroup::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PacingArg {
    /// Release frames on their timestamps.
    Timestamps,
    /// Forward frames as they arrive, dropping the oldest on overflow.
    Live,
    /// As fast as possible without dropping.
    Lossless,
}

impl From<PacingArg> for Pacing {
    fn from(p: PacingArg) -> Self {
        match p {
            PacingArg::Timestamps => Pacing::Timestamps,
            PacingArg::Live => Pacing::Live,
            PacingArg::Lossless => Pacing::Lossless,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of trial CSV files.
    #[arg(long)]
    pub data: PathBuf,
    /// Training config file; its keys override the profile.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base hyperparameters.
    #[arg(long, value_enum, default_value = "desk")]
    pub profile: ProfileArg,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic participant population as trial CSVs.
    Gen {
        /// Population spec file; overrides --population.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Built-in population preset.
        #[arg(long, value_enum, default_value = "healthy")]
        population: PopulationArg,
        /// Generator seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Input channel layout written to the CSVs.
        #[arg(long, value_enum, default_value = "reduced")]
        layout: LayoutArg,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on (healthy) trials.
    Pretrain {
        #[command(flatten)]
        train: TrainArgs,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fine-tune a pretrained model on new trials.
    Finetune {
        #[command(flatten)]
        train: TrainArgs,
        /// Pretrained model file.
        #[arg(long)]
        pretrained: PathBuf,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Leave-one-participant-out evaluation, fine-tuned or from scratch.
    Loocv {
        #[command(flatten)]
        train: TrainArgs,
        /// Pretrained model to fine-tune per fold; trains from scratch if absent.
        #[arg(long)]
        pretrained: Option<PathBuf>,
        /// Report CSV (a .curves.csv and .txt summary are written beside it).
        #[arg(long, default_value = "loocv.csv")]
        out: PathBuf,
    },
    /// Change in test metrics when a channel group is randomized.
    Importance {
        /// Directory of 27-channel trial CSVs.
        #[arg(long)]
        data: PathBuf,
        /// Model file with its standardizer.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        group: GroupArg,
        /// Permutation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV.
        #[arg(long, default_value = "importance.csv")]
        out: PathBuf,
    },
    /// Evaluate a model on trials: regression metrics and peak errors.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Metrics CSV.
        #[arg(long, default_value = "eval.csv")]
        out: PathBuf,
        /// Per-stride peak CSV.
        #[arg(long)]
        peaks: Option<PathBuf>,
    },
    /// Stream one 16-channel trial CSV through the runtime.
    Replay {
        /// Trial CSV.
        #[arg(long)]
        trial: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Controller config file.
        #[arg(long)]
        controller: Option<PathBuf>,
        /// Output command frames (19 bytes each, concatenated).
        #[arg(long)]
        out: PathBuf,
        /// Session report JSON [default: <out>.report.json].
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "lossless")]
        pacing: PacingArg,
    },
    /// Run the runtime on a live frame stream.
    Run {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
        /// Sensor frames: a file path, '-' for stdin, or udp:HOST:PORT to bind.
        #[arg(long, default_value = "-")]
        input: String,
        /// Command frames: a file path, '-' for stdout, or udp:HOST:PORT to send to.
        #[arg(long, default_value = "-")]
        output: String,
        /// Session report JSON.
        #[arg(long, default_value = "session.json")]
        report: PathBuf,
        #[arg(long, value_enum, default_value = "live")]
        pacing: PacingArg,
        /// UDP input ends after this long without a datagram, ms.
        #[arg(long, default_value_t = 1000)]
        idle_timeout_ms: u64,
    },
}

/// Parses `args` and runs the subcommand; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let AppError::Usage(_) = e {
                eprintln!("run with --help for usage");
            }
            e.exit_code()
        }
    }
}
