//! Command-line interface and flat config-file handling. Flags win over the
//! config file; the file holds the same keys as the long flag names.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qfqs::{BlockType, Connectivity, InitPolicy};

#[derive(Parser, Debug)]
#[command(
    name = "qfqs",
    version,
    about = "Sequential analytic optimization of quaternion-gate circuits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// VQE on the mixed-field Ising chain.
    VqeIsing(VqeIsingArgs),
    /// VQE on a Pauli-sum Hamiltonian loaded from a file.
    VqeFile(VqeFileArgs),
    /// Fidelity maximization toward a reference state.
    Fidelity(FidelityArgs),
    /// Compile exp(-iHt) into the ansatz via the Hilbert-Schmidt test.
    Compile(CompileArgs),
    /// Evolve a state by repeated application of a compiled circuit and record
    /// the infidelity against exact evolution.
    Dynamics(DynamicsArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fqs,
    Cfqs,
    ScfCfqs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BlockArg {
    Fqs,
    Cfqs,
    Scf,
    NumberPreserving,
}

impl From<BlockArg> for BlockType {
    fn from(b: BlockArg) -> BlockType {
        match b {
            BlockArg::Fqs => BlockType::Fqs,
            BlockArg::Cfqs => BlockType::Cfqs,
            BlockArg::Scf => BlockType::Scf,
            BlockArg::NumberPreserving => BlockType::NumberPreserving,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConnectivityArg {
    NearestNeighbor,
    AllToAll,
    SpinPreserving,
}

impl From<ConnectivityArg> for Connectivity {
    fn from(c: ConnectivityArg) -> Connectivity {
        match c {
            ConnectivityArg::NearestNeighbor => Connectivity::NearestNeighbor,
            ConnectivityArg::AllToAll => Connectivity::AllToAll,
            ConnectivityArg::SpinPreserving => Connectivity::SpinPreserving,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Zipping,
    Ascending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroundCheckArg {
    /// Check when the register is small enough for a quick eigensolve.
    Auto,
    Always,
    Off,
}

/// Options shared by every optimization experiment.
#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Flat key = value config file; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Number of ansatz layers.
    #[arg(long, short = 'L')]
    pub layers: Option<usize>,

    /// Optimization method; determines the gate block unless --block is given.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,

    /// Gate block type (defaults to the block matching --method).
    #[arg(long, value_enum)]
    pub block: Option<BlockArg>,

    #[arg(long, value_enum)]
    pub connectivity: Option<ConnectivityArg>,

    /// Update order over the blocks of a layer.
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,

    /// Sweeps over the full schedule.
    #[arg(long)]
    pub sweeps: Option<usize>,

    /// Seeds: `7`, `0,1,4` or `0..4` (inclusive).
    #[arg(long)]
    pub seeds: Option<String>,

    /// Initialization policy: random | cz | warm | warm:<max-angle-rad>.
    #[arg(long)]
    pub init: Option<String>,

    /// Emulate shot noise with this many shots per cost evaluation.
    #[arg(long)]
    pub shots: Option<u64>,

    /// Append one general single-qubit gate per qubit at the end of the circuit.
    #[arg(long)]
    pub final_singles: Option<bool>,

    /// User-supplied tomography stencil file (14 rows of 4 or 35 rows of 8).
    #[arg(long)]
    pub param_config: Option<PathBuf>,

    /// Output directory for trajectory and summary files.
    #[arg(long, short = 'o')]
    pub out_dir: Option<PathBuf>,

    /// Parallel seed jobs (default: env QFQS_JOBS, then all cores).
    #[arg(long)]
    pub jobs: Option<usize>,

    /// SCF inner-iteration improvement threshold.
    #[arg(long)]
    pub scf_threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct VqeIsingArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of spins.
    #[arg(long, short = 'n')]
    pub n: Option<usize>,
    /// ZZ coupling J.
    #[arg(long)]
    pub coupling: Option<f64>,
    /// Transverse and longitudinal field h.
    #[arg(long)]
    pub field: Option<f64>,
    /// Periodic boundary conditions.
    #[arg(long)]
    pub periodic: Option<bool>,
    /// Assert that the trajectory never dips below the exact ground energy.
    #[arg(long, value_enum)]
    pub check_ground: Option<GroundCheckArg>,
}

#[derive(Args, Debug)]
pub struct VqeFileArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Pauli-sum Hamiltonian file.
    #[arg(long)]
    pub hamiltonian: PathBuf,
    #[arg(long, value_enum)]
    pub check_ground: Option<GroundCheckArg>,
}

#[derive(Args, Debug)]
pub struct FidelityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Register size for a per-seed random reference state.
    #[arg(long, short = 'n')]
    pub n: Option<usize>,
    /// Reference state file (`index re im` per line) instead of random ones.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Pauli-sum Hamiltonian file defining the target exp(-iHt).
    #[arg(long)]
    pub hamiltonian: PathBuf,
    /// Evolution time of the compilation target.
    #[arg(long)]
    pub t: Option<f64>,
    /// Sweeps optimized with the local cost before switching to the global one.
    #[arg(long)]
    pub switch: Option<usize>,
    /// Input restriction: full | weight=K | spin=NA:NB | file=PATH.
    #[arg(long)]
    pub subspace: Option<String>,
    /// Write the best seed's compiled circuit here.
    #[arg(long)]
    pub export_circuit: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DynamicsArgs {
    /// Compiled circuit file (see `compile --export-circuit`).
    #[arg(long)]
    pub compiled: PathBuf,
    /// Pauli-sum Hamiltonian file for the exact reference evolution.
    #[arg(long)]
    pub hamiltonian: PathBuf,
    #[arg(long)]
    pub t_max: f64,
    /// Time step; must match the compilation target's t.
    #[arg(long)]
    pub dt: f64,
    /// Initial computational basis state as a bitstring (msb first).
    #[arg(long)]
    pub initial: String,
    /// Output CSV path (default: dynamics.csv in the working directory).
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

/// Fully resolved optimization options after merging flags, the config file and
/// defaults.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub layers: usize,
    pub method: MethodArg,
    pub block: BlockType,
    pub connectivity: Connectivity,
    pub schedule: ScheduleArg,
    pub sweeps: usize,
    pub seeds: Vec<u64>,
    pub init: InitPolicy,
    pub shots: Option<u64>,
    pub final_singles: bool,
    pub param_config: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub scf_threshold: f64,
}

struct FileConfig(std::collections::HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&PathBuf>) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .with_context(|| format!("config line {}: expected key = value", lineno + 1))?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileConfig(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key '{key}': {e}"),
            },
        }
    }
}

pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let lo: u64 = a.trim().parse().context("seed range start")?;
        let hi: u64 = b.trim().parse().context("seed range end")?;
        if hi < lo {
            bail!("empty seed range {text}");
        }
        return Ok((lo..=hi).collect());
    }
    let seeds: Result<Vec<u64>, _> = text.split(',').map(|s| s.trim().parse()).collect();
    let seeds = seeds.context("seed list")?;
    if seeds.is_empty() {
        bail!("no seeds given");
    }
    Ok(seeds)
}

pub fn parse_init(text: &str) -> Result<InitPolicy> {
    match text {
        "random" => Ok(InitPolicy::Random),
        "cz" => Ok(InitPolicy::CzInit),
        "warm" => Ok(InitPolicy::warm_start_default()),
        other => {
            if let Some(angle) = other.strip_prefix("warm:") {
                let max_angle: f64 = angle.parse().context("warm-start angle")?;
                Ok(InitPolicy::WarmStart { max_angle })
            } else {
                bail!("unknown init policy '{other}' (random | cz | warm | warm:<rad>)")
            }
        }
    }
}

fn default_block(method: MethodArg) -> BlockType {
    match method {
        MethodArg::Fqs => BlockType::Fqs,
        MethodArg::Cfqs => BlockType::Cfqs,
        MethodArg::ScfCfqs => BlockType::Scf,
    }
}

fn check_compatibility(method: MethodArg, block: BlockType) -> Result<()> {
    let ok = match method {
        MethodArg::Fqs => block == BlockType::Fqs,
        MethodArg::Cfqs => block == BlockType::Cfqs || block == BlockType::NumberPreserving,
        MethodArg::ScfCfqs => block == BlockType::Scf,
    };
    if !ok {
        bail!("method {method:?} is not compatible with block {block:?}");
    }
    Ok(())
}

pub fn resolve(common: &CommonArgs, default_init: &str) -> Result<Resolved> {
    let file = FileConfig::load(common.config.as_ref())?;

    let layers = match common.layers {
        Some(v) => v,
        None => file.get("layers")?.unwrap_or(1),
    };
    let method = match common.method {
        Some(m) => m,
        None => match file.0.get("method").map(String::as_str) {
            Some("fqs") => MethodArg::Fqs,
            Some("cfqs") => MethodArg::Cfqs,
            Some("scf-cfqs") => MethodArg::ScfCfqs,
            Some(other) => bail!("config key 'method': unknown value '{other}'"),
            None => MethodArg::Cfqs,
        },
    };
    let block = match common.block {
        Some(b) => b.into(),
        None => match file.0.get("block").map(String::as_str) {
            Some("fqs") => BlockType::Fqs,
            Some("cfqs") => BlockType::Cfqs,
            Some("scf") => BlockType::Scf,
            Some("number-preserving") => BlockType::NumberPreserving,
            Some(other) => bail!("config key 'block': unknown value '{other}'"),
            None => default_block(method),
        },
    };
    check_compatibility(method, block)?;
    let connectivity = match common.connectivity {
        Some(c) => c.into(),
        None => match file.0.get("connectivity").map(String::as_str) {
            Some("nearest-neighbor") => Connectivity::NearestNeighbor,
            Some("all-to-all") => Connectivity::AllToAll,
            Some("spin-preserving") => Connectivity::SpinPreserving,
            Some(other) => bail!("config key 'connectivity': unknown value '{other}'"),
            None => Connectivity::NearestNeighbor,
        },
    };
    let schedule = match common.schedule {
        Some(s) => s,
        None => match file.0.get("schedule").map(String::as_str) {
            Some("zipping") => ScheduleArg::Zipping,
            Some("ascending") => ScheduleArg::Ascending,
            Some(other) => bail!("config key 'schedule': unknown value '{other}'"),
            None => ScheduleArg::Zipping,
        },
    };
    let sweeps = match common.sweeps {
        Some(v) => v,
        None => file.get("sweeps")?.unwrap_or(100),
    };
    let seeds_text = match &common.seeds {
        Some(s) => s.clone(),
        None => file
            .0
            .get("seeds")
            .cloned()
            .unwrap_or_else(|| "0".to_string()),
    };
    let seeds = parse_seeds(&seeds_text)?;
    let init_text = match &common.init {
        Some(s) => s.clone(),
        None => file
            .0
            .get("init")
            .cloned()
            .unwrap_or_else(|| default_init.to_string()),
    };
    let init = parse_init(&init_text)?;
    let shots = match common.shots {
        Some(v) => Some(v),
        None => file.get("shots")?,
    };
    let final_singles = match common.final_singles {
        Some(v) => v,
        None => file.get("final-singles")?.unwrap_or(false),
    };
    let out_dir = match &common.out_dir {
        Some(p) => p.clone(),
        None => file
            .get::<String>("out-dir")?
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let jobs = match common.jobs {
        Some(v) => v,
        None => match file.get("jobs")? {
            Some(v) => v,
            None => std::env::var("QFQS_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
                .unwrap_or(0),
        },
    };
    let scf_threshold = match common.scf_threshold {
        Some(v) => v,
        None => file.get("scf-threshold")?.unwrap_or(1e-10),
    };
    Ok(Resolved {
        layers,
        method,
        block,
        connectivity,
        schedule,
        sweeps,
        seeds,
        init,
        shots,
        final_singles,
        param_config: common.param_config.clone(),
        out_dir,
        jobs,
        scf_threshold,
    })
}
