use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use slimtune::cost::{emissions, model_size};
use slimtune::oracle::{build_indicator, EffectivenessOracle, IndicatorError, Sample};
use slimtune::prune::{prune, PruneReport, SizeConstraint};
use slimtune::seed::derive_seed;
use slimtune::space::{encode, parse_space, validate, Configuration, ConfigurationSpace};
use slimtune::surrogate::SurrogateModel;
use slimtune::tuner::{deployment_index, tune, FittedIndicator, GenerationRecord, TunerParams};

use crate::error::CliError;
use crate::front::{read, read_front, sibling, sort_front, to_jsonl, write, FrontRecord};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn load_space(path: &Path) -> Result<ConfigurationSpace, CliError> {
    parse_space(&read(path)?)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn cmd_prune(space_file: &Path, budget_mb: f64, partitions: usize, out: &Path) -> Result<(), CliError> {
    let space = load_space(space_file)?;
    let constraint = SizeConstraint::new(budget_mb)?;
    let pruned = prune(&space, &constraint, partitions)?;
    let report = PruneReport::new(&space, &pruned, &constraint);

    write(out, pruned.to_json_pretty())?;
    let report_path = sibling(out, "report.json");
    write(
        &report_path,
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    )?;

    println!("budget: {budget_mb} MB, partitions: {partitions}");
    for d in &report.dimensions {
        let mark = if d.pruned { "pruned" } else { "kept" };
        println!("  {:<30} {:<6} {}", d.name, mark, d.retained);
    }
    println!(
        "cardinality: {:.4e} -> {:.4e} (ratio {:.4})",
        report.original_cardinality as f64, report.pruned_cardinality as f64, report.ratio
    );
    println!("wrote {} and {}", out.display(), report_path.display());
    Ok(())
}

/// Sidecar written next to a model so later steps can record how it was made.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitManifest {
    pub tool_version: String,
    pub space_file: PathBuf,
    pub space_checksum: String,
    pub oracle: String,
    pub samples: usize,
    pub seed: u64,
    pub table_file: PathBuf,
    pub r_squared: Option<f64>,
}

fn table_rows(rows: &[Sample]) -> Vec<Json> {
    rows.iter()
        .enumerate()
        .map(|(id, s)| json!({"id": id, "config": Json::Object(s.config.to_json()), "effectiveness": s.effectiveness}))
        .collect()
}

pub fn cmd_fit(space_file: &Path, oracle_spec: &str, samples: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    let space = load_space(space_file)?;
    let oracle = EffectivenessOracle::parse_spec(oracle_spec, &space, derive_seed(seed, "fit/oracle"))?;
    if samples == 2 {
        eprintln!("warning: fitting on 2 samples; the indicator will be nearly uninformative");
    }
    let table_path = sibling(out, "table.jsonl");
    let ind = match build_indicator(&space, &oracle, samples, derive_seed(seed, "fit/sample")) {
        Ok(ind) => ind,
        Err(IndicatorError::Oracle { source, partial }) => {
            write(&table_path, to_jsonl(&table_rows(&partial)))?;
            eprintln!(
                "oracle failed after {} of {samples} evaluations; partial table in {}",
                partial.len(),
                table_path.display()
            );
            return Err(source.into());
        }
        Err(e) => return Err(e.into()),
    };

    let features = ind
        .table
        .iter()
        .map(|s| encode(&s.config, &space, false))
        .collect::<Result<Vec<_>, _>>()?;
    let targets = ind.table.iter().map(|s| s.effectiveness).collect();
    let r_squared = slimtune::TrainingSet::new(features, targets)
        .ok()
        .and_then(|t| ind.model.r_squared(&t).ok())
        .filter(|r| r.is_finite());

    write(out, ind.model.to_json() + "\n")?;
    write(&table_path, to_jsonl(&table_rows(&ind.table)))?;
    let manifest = FitManifest {
        tool_version: VERSION.into(),
        space_file: space_file.to_path_buf(),
        space_checksum: space.checksum(),
        oracle: oracle_spec.into(),
        samples,
        seed,
        table_file: table_path.clone(),
        r_squared,
    };
    write(
        &sibling(out, "fit.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;
    match r_squared {
        Some(r) => println!("fitted on {samples} samples, training R² = {r:.4}"),
        None => println!("fitted on {samples} samples"),
    }
    println!("wrote {} and {}", out.display(), table_path.display());
    Ok(())
}

/// Everything needed to repeat a tuning run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub space_file: PathBuf,
    pub space_checksum: String,
    pub budget_mb: f64,
    pub model_file: PathBuf,
    pub fit: Option<FitManifest>,
    pub seed: u64,
    pub tuner: TunerParams,
    pub front_file: PathBuf,
    pub run_log: PathBuf,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub struct TuneArgs<'a> {
    pub space_file: &'a Path,
    pub model_file: &'a Path,
    pub budget_mb: f64,
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub seed: u64,
    pub out: &'a Path,
}

pub fn cmd_tune(a: &TuneArgs) -> Result<(), CliError> {
    let started_unix = unix_now();
    let space = load_space(a.space_file)?;
    let model = SurrogateModel::from_json(&read(a.model_file)?)
        .map_err(|e| CliError::Parse(format!("{}: {e}", a.model_file.display())))?;
    let indicator = FittedIndicator::new(model, &space)?;
    let params = TunerParams {
        population_size: a.population,
        generations: a.generations,
        crossover_rate: a.crossover_rate,
        mutation_rate: a.mutation_rate,
        seed: derive_seed(a.seed, "tune"),
        size_budget_mb: Some(a.budget_mb),
        ..Default::default()
    };
    let run = tune(&space, &indicator, &params)?;

    let mut records: Vec<FrontRecord> = run
        .archive
        .members()
        .iter()
        .map(|m| {
            let shape = m.config.shape().expect("archive members are valid");
            let x = encode(&m.config, &space, false).expect("archive members are valid");
            let variance = indicator.model().predict(&x).map(|p| p.variance).unwrap_or(f64::NAN);
            FrontRecord {
                config: m.config.to_json(),
                size_bytes: model_size(&shape).total_bytes() as u64,
                size_mb: m.objectives.size_mb,
                gflops: m.objectives.gflops,
                effectiveness: m.objectives.effectiveness(),
                effectiveness_variance: variance,
            }
        })
        .collect();
    sort_front(&mut records);

    let log_path = sibling(a.out, "log.jsonl");
    write(a.out, to_jsonl(&records))?;
    write(&log_path, to_jsonl::<GenerationRecord>(&run.generations))?;

    let fit = read(&sibling(a.model_file, "fit.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    let manifest = RunManifest {
        tool_version: VERSION.into(),
        space_file: a.space_file.to_path_buf(),
        space_checksum: space.checksum(),
        budget_mb: a.budget_mb,
        model_file: a.model_file.to_path_buf(),
        fit,
        seed: a.seed,
        tuner: params,
        front_file: a.out.to_path_buf(),
        run_log: log_path.clone(),
        started_unix,
        finished_unix: unix_now(),
    };
    write(
        &sibling(a.out, "manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;

    let last = run.generations.last().expect("generation 0 is always recorded");
    println!(
        "{} generations, {} distinct configurations scored, {} on the front (hypervolume {:.6e})",
        a.generations,
        run.evaluated.len(),
        records.len(),
        last.hypervolume
    );
    println!("wrote {} and {}", a.out.display(), log_path.display());
    Ok(())
}

pub struct ReportArgs<'a> {
    pub front_file: &'a Path,
    pub target_mb: f64,
    pub runtime_hours: f64,
    pub power_kw: f64,
    pub carbon_intensity: f64,
    pub space_file: Option<&'a Path>,
}

fn field(r: &FrontRecord, name: &str) -> String {
    match r.config.get(name) {
        Some(Json::String(s)) => s.clone(),
        Some(v) => v.to_string(),
        None => "-".into(),
    }
}

pub fn cmd_report(a: &ReportArgs) -> Result<(), CliError> {
    let mut records = read_front(a.front_file)?;
    if records.is_empty() {
        return Err(CliError::Constraint(format!(
            "no solutions in {}",
            a.front_file.display()
        )));
    }
    if let Some(space_file) = a.space_file {
        let space = load_space(space_file)?;
        for (n, r) in records.iter().enumerate() {
            let c = Configuration::from_json(&r.config, &space)?;
            let verdict = validate(&c, &space);
            if !verdict.is_valid() {
                let why: Vec<String> = verdict.violations.iter().map(|v| v.to_string()).collect();
                return Err(CliError::Parse(format!("member {n}: {}", why.join("; "))));
            }
            let bytes = model_size(&c.shape()?).total_bytes();
            if bytes as u64 != r.size_bytes || model_size(&c.shape()?).total_mb() != r.size_mb {
                return Err(CliError::Parse(format!("member {n}: stored size does not match")));
            }
        }
    }
    sort_front(&mut records);
    let objectives: Vec<_> = records.iter().map(FrontRecord::objectives).collect();
    let pick = deployment_index(&objectives, a.target_mb).expect("non-empty front");

    println!(
        "{:>3}  {:>9} {:>9} {:>7}  {:<18} {:>6} {:>3} {:>4} {:>5} {:>3} {:>4}",
        "#", "size_mb", "gflops", "effect.", "tokenizer", "vocab", "l", "h", "i", "a", "seq"
    );
    for (n, r) in records.iter().enumerate() {
        let mark = if n == pick { '*' } else { ' ' };
        println!(
            "{mark}{n:>2}  {:>9.4} {:>9.4} {:>7.4}  {:<18} {:>6} {:>3} {:>4} {:>5} {:>3} {:>4}",
            r.size_mb,
            r.gflops,
            r.effectiveness,
            field(r, "tokenizer"),
            field(r, "vocab_size"),
            field(r, "num_hidden_layers"),
            field(r, "hidden_size"),
            field(r, "intermediate_size"),
            field(r, "num_attention_heads"),
            field(r, "max_sequence_length"),
        );
    }
    let p = &records[pick];
    println!();
    println!(
        "deployment pick (closest to {} MB): #{pick}, {:.4} MB, {:.4} GFLOPs, effectiveness {:.4}",
        a.target_mb, p.size_mb, p.gflops, p.effectiveness
    );
    println!("  {}", Json::Object(p.config.clone()));
    let e = emissions(a.runtime_hours, a.power_kw, a.carbon_intensity)
        .map_err(|e| CliError::Parse(e.to_string()))?;
    println!(
        "workload: {} h at {} kW = {:.4} kWh -> {:.4} kg CO2 at {} kg/kWh",
        a.runtime_hours, a.power_kw, e.energy_kwh, e.co2_kg, a.carbon_intensity
    );
    Ok(())
}
