use std::path::{Path, PathBuf};

use pagexplain::fci::{fci_run, fci_run_dataset, FciConfig, FciOutput};
use pagexplain::sim::{simulate_explanation_data, truth_dag_with_target, PredictorMode};
use pagexplain::stability::{run_stability, Resampling, StabilityConfig};
use pagexplain::{BackgroundKnowledge, CiOracle, Dataset, GraphKind, MixedGraph, Schema};
use serde::Serialize;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::manifest::{with_suffix, Run, RunManifest};

/// Runs `command` without touching the file system except for reading
/// inputs. Returns the staged run and where its manifest belongs.
pub fn execute(command: &Command) -> CliResult<(Run, PathBuf)> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Discover(a) => discover(a),
        Command::Stability(a) => stability(a),
        Command::Oracle(a) => oracle(a),
        Command::Replay(_) => Err(CliError::Usage("replay cannot be nested".into())),
    }
}

pub fn run(command: &Command) -> CliResult<RunManifest> {
    if let Command::Replay(a) = command {
        return replay(&a.manifest);
    }
    let (run, manifest_path) = execute(command)?;
    run.commit(command, &manifest_path)
}

fn simulate(a: &SimulateArgs) -> CliResult<(Run, PathBuf)> {
    let mode = match a.predictor {
        PredictorArg::Perfect => PredictorMode::Perfect,
        PredictorArg::Logistic => PredictorMode::Logistic { seed: a.seed },
    };
    let sim = simulate_explanation_data(a.n, a.seed, a.include_c, mode, &a.target)?;
    if let Some(acc) = sim.heldout_accuracy {
        log::info!("surrogate held-out accuracy {acc:.4}");
    }
    let mut csv = Vec::new();
    sim.dataset.write_csv(&mut csv)?;
    let mut run = Run::default();
    run.seeds.insert("seed".into(), a.seed);
    run.emit(a.out.clone(), csv);
    run.emit(with_suffix(&a.out, ".schema"), sim.dataset.schema().to_text());
    Ok((run, with_suffix(&a.out, ".manifest.json")))
}

fn load_data(run: &mut Run, input: &DataArgs) -> CliResult<(Dataset, BackgroundKnowledge)> {
    let schema_path = input.schema.clone().unwrap_or_else(|| with_suffix(&input.data, ".schema"));
    let schema = Schema::parse(&run.read_text(&schema_path)?)?;
    let bytes = run.read(&input.data)?;
    let data = Dataset::read_csv(bytes.as_slice(), &schema)?;
    let knowledge = load_knowledge(run, input.knowledge.as_deref(), &data.names())?;
    Ok((data, knowledge))
}

fn load_knowledge(run: &mut Run, path: Option<&Path>, names: &[String]) -> CliResult<BackgroundKnowledge> {
    match path {
        Some(p) => Ok(BackgroundKnowledge::parse(&run.read_text(p)?, names)?),
        None => Ok(BackgroundKnowledge::new()),
    }
}

fn add_target(k: &mut BackgroundKnowledge, names: &[String], target: Option<&str>) -> CliResult<()> {
    if let Some(t) = target {
        let i = names
            .iter()
            .position(|n| n == t)
            .ok_or_else(|| CliError::Core(pagexplain::Error::Input(format!("unknown target `{t}`"))))?;
        k.add_non_ancestor_of_all(i, names.len())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SepSetJson<'a> {
    a: &'a str,
    b: &'a str,
    set: Vec<&'a str>,
}

#[derive(Serialize)]
struct DiagnosticsFile<'a> {
    diagnostics: &'a pagexplain::Diagnostics,
    sepsets: Vec<SepSetJson<'a>>,
}

fn emit_graph(run: &mut Run, out: &Path, format: GraphFormat, result: &FciOutput) {
    let g = &result.pag;
    let text = match format {
        GraphFormat::Dot => g.to_dot(),
        GraphFormat::Json => g.to_json(),
    };
    run.emit(out.to_path_buf(), text);
    let sepsets = result
        .sepsets
        .iter()
        .map(|((a, b), s)| SepSetJson { a: g.name(a), b: g.name(b), set: s.iter().map(|&v| g.name(v)).collect() })
        .collect();
    let diag = DiagnosticsFile { diagnostics: &result.diagnostics, sepsets };
    run.emit(
        with_suffix(out, ".diagnostics.json"),
        serde_json::to_string_pretty(&diag).expect("diagnostics JSON") + "\n",
    );
}

fn discover(a: &DiscoverArgs) -> CliResult<(Run, PathBuf)> {
    let mut run = Run::default();
    let (data, mut knowledge) = load_data(&mut run, &a.input)?;
    add_target(&mut knowledge, &data.names(), a.target.as_deref())?;
    let result = fci_run_dataset(&data, &knowledge, &a.fci.config())?;
    emit_graph(&mut run, &a.out, a.format, &result);
    Ok((run, with_suffix(&a.out, ".manifest.json")))
}

fn stability(a: &StabilityArgs) -> CliResult<(Run, PathBuf)> {
    let mut run = Run::default();
    let (data, knowledge) = load_data(&mut run, &a.input)?;
    let cfg = StabilityConfig {
        replicates: a.replicates,
        base_seed: a.base_seed,
        fci: a.fci.config(),
        target: a.target.clone(),
        resampling: match a.subsample {
            Some(fraction) => Resampling::Subsample { fraction },
            None => Resampling::Bootstrap,
        },
    };
    let report = run_stability(&data, &knowledge, &cfg)?;
    run.seeds.insert("base_seed".into(), a.base_seed);
    run.emit(with_suffix(&a.out_prefix, ".json"), report.to_json());
    run.emit(with_suffix(&a.out_prefix, ".csv"), report.to_csv());
    Ok((run, with_suffix(&a.out_prefix, ".manifest.json")))
}

fn oracle(a: &OracleArgs) -> CliResult<(Run, PathBuf)> {
    let mut run = Run::default();
    let truth = if a.truth == "fig4a" {
        truth_dag_with_target("Yhat")
    } else {
        let g = MixedGraph::from_json(&run.read_text(Path::new(&a.truth))?)?;
        if g.kind() != GraphKind::Dag {
            return Err(pagexplain::Error::Input(format!("{}: truth graph must be a DAG", a.truth)).into());
        }
        g
    };
    let observed: Vec<String> = a.observe.clone().unwrap_or_else(|| truth.names().to_vec());
    let test = CiOracle::new(truth, &observed)?;
    let mut knowledge = load_knowledge(&mut run, a.knowledge.as_deref(), &observed)?;
    add_target(&mut knowledge, &observed, a.target.as_deref())?;
    let cfg = FciConfig { enable_possible_dsep: !a.no_possible_dsep, ..FciConfig::default() };
    let result = fci_run(&test, &knowledge, &cfg)?;
    emit_graph(&mut run, &a.out, a.format, &result);
    Ok((run, with_suffix(&a.out, ".manifest.json")))
}

fn replay(path: &Path) -> CliResult<RunManifest> {
    let recorded = RunManifest::load(path)?;
    let (run, manifest_path) = execute(&recorded.command)?;
    if run.inputs != recorded.inputs {
        return Err(CliError::Usage("inputs differ from those recorded in the manifest".into()));
    }
    let fresh = run.manifest(&recorded.command);
    if fresh.outputs != recorded.outputs {
        let differing: Vec<&str> = fresh
            .outputs
            .iter()
            .filter(|(p, d)| recorded.outputs.get(*p) != Some(*d))
            .map(|(p, _)| p.as_str())
            .collect();
        return Err(CliError::Mismatch(differing.join(", ")));
    }
    run.commit(&recorded.command, &manifest_path)
}
