//! Experiment orchestration: per-seed pipelines, parallel execution, artifacts.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use qfqs::ansatz::{
    append_final_singles, ascending_schedule, build_alt_ansatz, initialize, parse_circuit,
    Circuit,
};
use qfqs::costs::{CompileCost, CompiledStep, EvalMode, FidelityCost, SubspaceBasis, VqeCost};
use qfqs::hamiltonian::{ising_hamiltonian, parse_pauli_sum, PauliSum};
use qfqs::landscape::parse_configuration;
use qfqs::optimizer::{run_sweeps, CostFunction, SweepOptions, TomographyConfigs, Trajectory};
use qfqs::simulator::Statevector;
use qfqs::{dynamics_infidelity, export_circuit};

use crate::config::{
    self, Cli, Command, CompileArgs, DynamicsArgs, FidelityArgs, GroundCheckArg, Resolved,
    ScheduleArg, VqeFileArgs, VqeIsingArgs,
};
use crate::output;
use crate::selftest;

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::VqeIsing(args) => vqe_ising(args),
        Command::VqeFile(args) => vqe_file(args),
        Command::Fidelity(args) => fidelity(args),
        Command::Compile(args) => compile(args),
        Command::Dynamics(args) => dynamics(args),
        Command::Selftest => selftest::run(),
    }
}

struct SeedOutcome {
    seed: u64,
    trajectory: Trajectory,
    circuit: Circuit,
}

fn tomography_configs(resolved: &Resolved) -> Result<TomographyConfigs> {
    let mut configs = TomographyConfigs::default();
    if let Some(path) = &resolved.param_config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading parameter configuration {}", path.display()))?;
        let (controlled, pair) = parse_configuration(&text)?;
        if let Some(c) = controlled {
            configs.controlled = c;
        }
        if let Some(p) = pair {
            configs.pair = p;
        }
    }
    Ok(configs)
}

fn build_circuit(resolved: &Resolved, n: usize) -> Result<Circuit> {
    let mut circuit = build_alt_ansatz(n, resolved.layers, resolved.block, resolved.connectivity)?;
    if resolved.final_singles && resolved.block != qfqs::BlockType::Fqs {
        append_final_singles(&mut circuit);
    }
    if resolved.schedule == ScheduleArg::Ascending {
        let schedule = ascending_schedule(&circuit)?;
        circuit.set_schedule(schedule);
    }
    Ok(circuit)
}

/// Runs the per-seed pipelines, in parallel up to the `--jobs` bound, and writes
/// one trajectory CSV per seed plus a summary file.
fn run_seeds(
    resolved: &Resolved,
    n: usize,
    experiment: &str,
    make_cost: impl Fn(u64) -> Result<Box<dyn CostFunction>> + Sync,
) -> Result<Vec<SeedOutcome>> {
    let configs = tomography_configs(resolved)?;
    let opts = SweepOptions {
        sweeps: resolved.sweeps,
        scf_threshold: resolved.scf_threshold,
        maximize: false,
    };
    let run_one = |&seed: &u64| -> Result<SeedOutcome> {
        let mut circuit = build_circuit(resolved, n)?;
        initialize(&mut circuit, resolved.init, seed);
        let mut cost = make_cost(seed)?;
        let trajectory = run_sweeps(&mut circuit, cost.as_mut(), &configs, &opts)
            .with_context(|| format!("seed {seed}"))?;
        Ok(SeedOutcome {
            seed,
            trajectory,
            circuit,
        })
    };
    let outcomes: Result<Vec<SeedOutcome>> = if resolved.jobs == 1 {
        resolved.seeds.iter().map(run_one).collect()
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if resolved.jobs > 0 {
            builder = builder.num_threads(resolved.jobs);
        }
        let pool = builder.build().context("building thread pool")?;
        pool.install(|| {
            use rayon::prelude::*;
            resolved.seeds.par_iter().map(run_one).collect()
        })
    };
    let outcomes = outcomes?;

    std::fs::create_dir_all(&resolved.out_dir)
        .with_context(|| format!("creating {}", resolved.out_dir.display()))?;
    for outcome in &outcomes {
        let path = resolved
            .out_dir
            .join(format!("{experiment}_seed{}.csv", outcome.seed));
        output::write_trajectory(&path, &outcome.trajectory)?;
    }
    let summary_path = resolved.out_dir.join(format!("{experiment}_summary.csv"));
    output::write_summary(
        &summary_path,
        outcomes
            .iter()
            .map(|o| (o.seed, o.trajectory.final_cost(), o.trajectory.total_evaluations())),
    )?;
    for outcome in &outcomes {
        println!(
            "{experiment} seed {}: final cost {} after {} evaluations",
            outcome.seed,
            outcome.trajectory.final_cost(),
            outcome.trajectory.total_evaluations()
        );
    }
    Ok(outcomes)
}

fn assert_ground_bound(
    outcomes: &[SeedOutcome],
    h: &PauliSum,
    mode: GroundCheckArg,
    exact: bool,
) -> Result<()> {
    let check = match mode {
        GroundCheckArg::Off => false,
        GroundCheckArg::Always => true,
        GroundCheckArg::Auto => h.n_qubits() <= 10,
    };
    if !check || !exact {
        return Ok(());
    }
    let ground = h.ground_energy()?;
    for outcome in outcomes {
        for record in &outcome.trajectory.records {
            if record.cost < ground - 1e-9 {
                bail!(
                    "seed {}: trajectory cost {} undercuts the exact ground energy {ground}",
                    outcome.seed,
                    record.cost
                );
            }
        }
    }
    println!("ground-energy bound checked: E0 = {ground}");
    Ok(())
}

fn vqe_cost_factory(
    h: &PauliSum,
    shots: Option<u64>,
) -> impl Fn(u64) -> Result<Box<dyn CostFunction>> + Sync + '_ {
    move |seed| {
        let mode = match shots {
            None => EvalMode::Exact,
            // Decorrelate seed streams: each evaluation already advances a
            // counter; distinct seeds get widely separated bases.
            Some(shots) => EvalMode::shots(shots, seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
        };
        Ok(Box::new(VqeCost {
            hamiltonian: h.clone(),
            mode,
        }))
    }
}

fn vqe_ising(args: VqeIsingArgs) -> Result<()> {
    let resolved = config::resolve(&args.common, "random")?;
    let n = args.n.unwrap_or(8);
    let coupling = args.coupling.unwrap_or(1.0);
    let field = args.field.unwrap_or(std::f64::consts::FRAC_1_SQRT_2);
    let periodic = args.periodic.unwrap_or(true);
    let h = ising_hamiltonian(n, coupling, field, periodic)?;
    let outcomes = run_seeds(&resolved, n, "vqe_ising", vqe_cost_factory(&h, resolved.shots))?;
    assert_ground_bound(
        &outcomes,
        &h,
        args.check_ground.unwrap_or(GroundCheckArg::Auto),
        resolved.shots.is_none(),
    )
}

fn vqe_file(args: VqeFileArgs) -> Result<()> {
    let resolved = config::resolve(&args.common, "random")?;
    let text = std::fs::read_to_string(&args.hamiltonian)
        .with_context(|| format!("reading {}", args.hamiltonian.display()))?;
    let h = parse_pauli_sum(&text)?;
    let outcomes = run_seeds(
        &resolved,
        h.n_qubits(),
        "vqe_file",
        vqe_cost_factory(&h, resolved.shots),
    )?;
    assert_ground_bound(
        &outcomes,
        &h,
        args.check_ground.unwrap_or(GroundCheckArg::Auto),
        resolved.shots.is_none(),
    )
}

/// Parses a reference-state file: one `index re im` triple per line.
fn parse_reference(text: &str, n: usize) -> Result<Statevector> {
    let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            bail!("reference line {}: expected `index re im`", lineno + 1);
        }
        let idx: usize = fields[0]
            .parse()
            .with_context(|| format!("reference line {}", lineno + 1))?;
        if idx >= amps.len() {
            bail!("reference line {}: index {idx} out of range", lineno + 1);
        }
        let re: f64 = fields[1].parse()?;
        let im: f64 = fields[2].parse()?;
        amps[idx] = Complex64::new(re, im);
    }
    Ok(Statevector::from_amplitudes(n, amps)?)
}

fn random_reference(n: usize, seed: u64) -> Statevector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_5eed_5eed);
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    Statevector::from_amplitudes(n, amps).expect("random state has positive norm")
}

fn fidelity(args: FidelityArgs) -> Result<()> {
    let resolved = config::resolve(&args.common, "random")?;
    if resolved.shots.is_some() {
        bail!("shot emulation applies to observable expectations; fidelity runs exactly");
    }
    let (n, fixed_reference) = match &args.reference {
        Some(path) => {
            let n = args
                .n
                .context("--n is required to size the reference state")?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            (n, Some(parse_reference(&text, n)?))
        }
        None => (args.n.unwrap_or(8), None),
    };
    run_seeds(&resolved, n, "fidelity", |seed| {
        let reference = match &fixed_reference {
            Some(r) => r.clone(),
            None => random_reference(n, seed),
        };
        Ok(Box::new(FidelityCost { reference }))
    })?;
    Ok(())
}

fn parse_subspace(text: &str, n: usize) -> Result<SubspaceBasis> {
    if text == "full" {
        return Ok(SubspaceBasis::full(n));
    }
    if let Some(k) = text.strip_prefix("weight=") {
        return Ok(SubspaceBasis::hamming_weight(n, k.parse()?)?);
    }
    if let Some(spec) = text.strip_prefix("spin=") {
        let (na, nb) = spec
            .split_once(':')
            .context("spin subspace needs NA:NB")?;
        if n % 2 != 0 {
            bail!("spin restriction needs an even register, got {n} qubits");
        }
        return Ok(SubspaceBasis::spin_product(
            n / 2,
            na.parse()?,
            nb.parse()?,
        )?);
    }
    if let Some(path) = text.strip_prefix("file=") {
        let content = std::fs::read_to_string(path)
            .with_context(|| format!("reading subspace file {path}"))?;
        return Ok(SubspaceBasis::from_lines(&content, n)?);
    }
    bail!("unknown subspace '{text}' (full | weight=K | spin=NA:NB | file=PATH)")
}

fn compile(args: CompileArgs) -> Result<()> {
    let resolved = config::resolve(&args.common, "warm")?;
    if resolved.shots.is_some() {
        bail!("shot emulation applies to observable expectations; compilation runs exactly");
    }
    let text = std::fs::read_to_string(&args.hamiltonian)
        .with_context(|| format!("reading {}", args.hamiltonian.display()))?;
    let h = parse_pauli_sum(&text)?;
    let n = h.n_qubits();
    let t = args.t.unwrap_or(1.0 / 16.0);
    let switch = args.switch.unwrap_or(5);
    let target = h.time_evolution(t)?;
    let basis = parse_subspace(args.subspace.as_deref().unwrap_or("full"), n)?;

    let outcomes = run_seeds(&resolved, n, "compile", |_| {
        Ok(Box::new(CompileCost::new(
            target.clone(),
            basis.clone(),
            switch,
        )))
    })?;

    let best = outcomes
        .iter()
        .min_by(|a, b| a.trajectory.final_cost().total_cmp(&b.trajectory.final_cost()))
        .context("no seeds ran")?;
    println!(
        "best seed {} with final global cost {}",
        best.seed,
        best.trajectory.final_cost()
    );
    if let Some(path) = &args.export_circuit {
        std::fs::write(path, export_circuit(&best.circuit))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("compiled circuit written to {}", path.display());
    }
    Ok(())
}

fn dynamics(args: DynamicsArgs) -> Result<()> {
    let circuit_text = std::fs::read_to_string(&args.compiled)
        .with_context(|| format!("reading {}", args.compiled.display()))?;
    let circuit = parse_circuit(&circuit_text)?;
    let h_text = std::fs::read_to_string(&args.hamiltonian)
        .with_context(|| format!("reading {}", args.hamiltonian.display()))?;
    let h = parse_pauli_sum(&h_text)?;
    let n = h.n_qubits();
    if circuit.n_qubits() != n {
        bail!(
            "compiled circuit acts on {} qubits, Hamiltonian on {n}",
            circuit.n_qubits()
        );
    }
    if args.initial.len() != n || !args.initial.bytes().all(|b| b == b'0' || b == b'1') {
        bail!("--initial must be an {n}-character bitstring");
    }
    let index = usize::from_str_radix(&args.initial, 2).expect("validated binary");
    let psi = Statevector::basis_state(n, index);
    let series = dynamics_infidelity(&CompiledStep::Circuit(&circuit), &h, args.t_max, args.dt, &psi)?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("dynamics.csv"));
    output::write_series(&out, &series)?;
    let worst = series.iter().map(|(_, inf)| *inf).fold(0.0, f64::max);
    println!(
        "dynamics series with {} points written to {}; max infidelity {worst}",
        series.len(),
        out.display()
    );
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
