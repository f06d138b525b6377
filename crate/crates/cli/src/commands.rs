use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use taskcomp_core::harness::{
    compare, evaluate, model_rng, read_results_csv, run_experiment, step_trace, write_plot_csv, write_results_csv,
    write_summary_csv, ExperimentConfig, Regime, ResultsTable,
};
use taskcomp_core::networks::{Hyperparams, Model, ModelSpec, NetworkKind};
use taskcomp_core::path_composer::{
    generate_dataset, parse, serialize, Dataset, DisruptionKind, GenConfig, StimulusLayout, TestCounts,
};

use crate::{CliError, EvalArgs, ExperimentArgs, GenFlags, GenerateArgs, ReportArgs, TrainArgs};

type Result<T> = std::result::Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn read_input(path: &Path) -> Result<String> {
    if !path.is_file() {
        return Err(usage(format!("input file not found: {}", path.display())));
    }
    fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn out_file(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn echo<T: Serialize>(command: &str, config: &T) {
    let json = serde_json::to_string(config).expect("config serializes");
    println!("config {command}: {json}");
}

/// Reads a dataset as JSON, or as the text layout when the file ends in `.txt`.
fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = read_input(path)?;
    let parsed = if path.extension().is_some_and(|e| e == "txt") {
        parse(&text)
    } else {
        Dataset::from_json(&text)
    };
    parsed.map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn single(values: &[usize], flag: &str) -> Result<Option<usize>> {
    match values {
        [] => Ok(None),
        [v] => Ok(Some(*v)),
        _ => Err(usage(format!("--{flag} takes one value here"))),
    }
}

fn apply_gen_flags(gen: &mut GenConfig, f: &GenFlags) -> Result<()> {
    if let Some(v) = single(&f.base_length, "base-length")? {
        gen.base_length = v;
    }
    if let Some(v) = single(&f.modules, "modules")? {
        gen.num_modules = v;
    }
    if let Some(v) = f.module_min {
        gen.module_length_min = v;
    }
    if let Some(v) = f.module_max {
        gen.module_length_max = v;
    }
    if let Some(v) = f.tests_per_type {
        gen.tests_per_type = TestCounts::uniform(v);
    }
    if let Some(v) = f.alphabet {
        gen.alphabet = v;
    }
    Ok(())
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let mut gen = match &a.config {
        Some(p) => serde_json::from_str::<GenConfig>(&read_input(p)?)
            .map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => GenConfig::default(),
    };
    gen.seed = a.seed;
    apply_gen_flags(&mut gen, &a.gen)?;
    gen.validate().map_err(usage)?;
    echo("generate", &gen);

    let ds = generate_dataset(&gen).map_err(runtime)?;
    let txt = out_file(&a.out_dir, "dataset.txt")?;
    let json = out_file(&a.out_dir, "dataset.json")?;
    write_text(&txt, &serialize(&ds))?;
    write_text(&json, &ds.to_json())?;

    println!("base path: {} steps", ds.base().len());
    for m in ds.modules() {
        println!("module {}: {} steps", m.id, m.len());
    }
    for kind in DisruptionKind::ALL {
        let lens: Vec<String> = ds.tests_of(kind).map(|c| c.path.len().to_string()).collect();
        println!("{kind} tests: {} (lengths {})", lens.len(), lens.join(" "));
    }
    println!("wrote {} and {}", txt.display(), json.display());
    Ok(())
}

#[derive(Serialize)]
struct TrainEcho<'a> {
    data: &'a Path,
    network: NetworkKind,
    regime: Regime,
    epochs: usize,
    seed: u64,
    checkpoint: &'a Path,
    spec: &'a ModelSpec,
}

pub fn train(a: TrainArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let mut hp = match &a.config {
        Some(p) => serde_json::from_str::<Hyperparams>(&read_input(p)?)
            .map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => Hyperparams::default(),
    };
    if let Some(s) = a.skew {
        hp.skew = s;
    }
    let spec = ModelSpec::for_dataset(a.network, &ds.config, &hp);
    spec.validate().map_err(usage)?;
    let checkpoint = match &a.checkpoint {
        Some(p) => p.clone(),
        None => out_file(&a.out_dir, &format!("{}-{}.ckpt.json", a.network, a.regime))?,
    };
    echo(
        "train",
        &TrainEcho {
            data: &a.data,
            network: a.network,
            regime: a.regime,
            epochs: a.epochs,
            seed: a.seed,
            checkpoint: &checkpoint,
            spec: &spec,
        },
    );

    let mut model = Model::build(spec, &mut model_rng(a.seed)).map_err(runtime)?;
    let batch = model.encode(&a.regime.training_paths(&ds)).map_err(runtime)?;
    let targets = batch.target_responses();
    let train_error = |m: &Model| -> Result<f64> {
        let pred = m.predict_batch(&batch).map_err(runtime)?;
        let (mut wrong, mut total) = (0usize, 0usize);
        for (p, t) in pred.iter().zip(&targets) {
            wrong += p.iter().zip(t).filter(|(a, b)| a != b).count();
            total += t.len();
        }
        Ok(wrong as f64 / total as f64)
    };

    let mut log = String::from("epoch,loss,train_error\n");
    let mut failure = None;
    for epoch in 0..a.epochs {
        match model.train_step(&batch) {
            Ok(loss) => {
                // Scoring every epoch would add a forward pass per step; sample it.
                let err = if epoch % 10 == 0 || epoch + 1 == a.epochs {
                    train_error(&model)?.to_string()
                } else {
                    String::new()
                };
                log.push_str(&format!("{epoch},{loss},{err}\n"));
            }
            Err(e) => {
                failure = Some(format!("training diverged at epoch {epoch}: {e}"));
                break;
            }
        }
    }
    let log_path = checkpoint.with_extension("log.csv");
    write_text(&log_path, &log)?;
    if let Some(f) = failure {
        return Err(runtime(f));
    }
    model.save(&checkpoint).map_err(runtime)?;
    println!(
        "trained {} on {} path(s) for {} epochs: train error {:.4}",
        a.network,
        batch.num_paths(),
        a.epochs,
        train_error(&model)?
    );
    println!("wrote {} and {}", checkpoint.display(), log_path.display());
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    network: NetworkKind,
    regime: Regime,
    train_error: Option<f64>,
    test_error_overall: Option<f64>,
    test_error_insertion: Option<f64>,
    test_error_substitution: Option<f64>,
    test_error_deletion: Option<f64>,
    evaluation: taskcomp_core::harness::Evaluation,
}

/// Compact per-step marks plus the steps where tracking is lost and regained.
fn describe_trace(trace: &[taskcomp_core::harness::StepTrace]) -> String {
    let marks: String = trace.iter().map(|s| if s.correct { '.' } else { 'x' }).collect();
    let mut events = Vec::new();
    let mut tracking = true;
    for s in trace {
        if tracking && !s.correct {
            events.push(format!("lost@{}", s.step));
        } else if !tracking && s.correct {
            events.push(format!("regained@{}", s.step));
        }
        tracking = s.correct;
    }
    if events.is_empty() {
        marks
    } else {
        format!("{marks} {}", events.join(" "))
    }
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    if !a.checkpoint.is_file() {
        return Err(usage(format!("input file not found: {}", a.checkpoint.display())));
    }
    let model = Model::load(&a.checkpoint).map_err(runtime)?;
    let layout = StimulusLayout::new(ds.config.num_modules, ds.config.alphabet);
    if model.spec().layout != layout {
        return Err(runtime(format!(
            "checkpoint expects {} modules / alphabet {}, dataset has {} / {}",
            model.spec().layout.num_modules,
            model.spec().layout.alphabet,
            layout.num_modules,
            layout.alphabet
        )));
    }
    echo(
        "eval",
        &serde_json::json!({
            "data": a.data, "checkpoint": a.checkpoint, "regime": a.regime,
            "trace": a.trace, "spec": model.spec(),
        }),
    );

    let ev = evaluate(&model, &ds, a.regime).map_err(runtime)?;
    let overall = ev.overall();
    let line = |name: &str, t: taskcomp_core::harness::KindTally| {
        let rate = t.rate().map(|r| format!("{r:.4}")).unwrap_or_else(|| "n/a".into());
        println!("{name}: errors={} steps={} rate={rate} failed_paths={}/{}", t.errors, t.steps, t.failed_paths, t.paths);
    };
    line("train", ev.train);
    for kind in DisruptionKind::ALL {
        line(kind.name(), ev.kind(kind));
    }
    line("overall", overall);

    let report = EvalReport {
        network: model.kind(),
        regime: a.regime,
        train_error: ev.train.rate(),
        test_error_overall: overall.rate(),
        test_error_insertion: ev.kind(DisruptionKind::Insertion).rate(),
        test_error_substitution: ev.kind(DisruptionKind::Substitution).rate(),
        test_error_deletion: ev.kind(DisruptionKind::Deletion).rate(),
        evaluation: ev,
    };
    let report_path = out_file(&a.out_dir, "eval.json")?;
    write_text(&report_path, &serde_json::to_string_pretty(&report).expect("report serializes"))?;

    if a.trace {
        let mut csv = String::from("test,kind,module,position,step,stimulus,target,predicted,correct\n");
        for (i, case) in ds.test.iter().enumerate() {
            let trace = step_trace(&model, &case.path).map_err(runtime)?;
            let module = case.module_id.map(|m| m.to_string()).unwrap_or_default();
            println!(
                "trace {i} {} module={} position={}: {}",
                case.kind,
                if module.is_empty() { "-" } else { &module },
                case.position,
                describe_trace(&trace)
            );
            for s in &trace {
                csv.push_str(&format!(
                    "{i},{},{module},{},{},{},{},{},{}\n",
                    case.kind, case.position, s.step, s.stimulus, s.target, s.predicted, s.correct
                ));
            }
        }
        let trace_path = out_file(&a.out_dir, "trace.csv")?;
        write_text(&trace_path, &csv)?;
        println!("wrote {}", trace_path.display());
    }
    println!("wrote {}", report_path.display());
    Ok(())
}

fn print_findings(table: &ResultsTable) {
    match compare(table) {
        Ok(f) => {
            for l in f.lines() {
                println!("finding {l}");
            }
        }
        Err(e) => eprintln!("warning: partial results, comparison skipped: {e}"),
    }
}

fn write_tables(table: &ResultsTable, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let summary = out_file(dir, "summary.csv")?;
    let plot = out_file(dir, "plot.csv")?;
    write_summary_csv(table, create(&summary)?).map_err(runtime)?;
    write_plot_csv(table, create(&plot)?).map_err(runtime)?;
    Ok((summary, plot))
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str::<ExperimentConfig>(&read_input(p)?)
            .map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => ExperimentConfig::default(),
    };
    if !a.gen.base_length.is_empty() {
        cfg.base_lengths = a.gen.base_length.clone();
    }
    if !a.gen.modules.is_empty() {
        cfg.num_modules = a.gen.modules.clone();
    }
    if let Some(v) = a.gen.module_min {
        cfg.module_length_min = v;
    }
    if let Some(v) = a.gen.module_max {
        cfg.module_length_max = v;
    }
    if let Some(v) = a.gen.tests_per_type {
        cfg.tests_per_type = TestCounts::uniform(v);
    }
    if let Some(v) = a.gen.alphabet {
        cfg.alphabet = v;
    }
    if !a.networks.is_empty() {
        cfg.networks = a.networks.clone();
    }
    if !a.regimes.is_empty() {
        cfg.regimes = a.regimes.clone();
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.runs {
        cfg.runs = v;
    }
    if let Some(v) = a.master_seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.skew {
        cfg.hyperparams.skew = v;
    }
    if let Some(v) = a.jobs {
        cfg.jobs = v;
    }
    cfg.validate().map_err(usage)?;
    for gen in cfg.gen_configs() {
        for &kind in &cfg.networks {
            ModelSpec::for_dataset(kind, &gen, &cfg.hyperparams).validate().map_err(usage)?;
        }
    }
    echo("experiment", &cfg);

    let table = run_experiment(&cfg).map_err(runtime)?;
    let results = out_file(&a.out_dir, "results.csv")?;
    write_results_csv(&table.rows, create(&results)?).map_err(runtime)?;
    let records = out_file(&a.out_dir, "records.json")?;
    write_text(&records, &serde_json::to_string_pretty(&table.records).expect("records serialize"))?;
    let (summary, plot) = write_tables(&table, &a.out_dir)?;

    println!("runs: {} failed: {}", table.rows.len(), table.failed_runs());
    print_findings(&table);
    for p in [&results, &summary, &plot, &records] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<()> {
    let path = a.results.clone().unwrap_or_else(|| a.out_dir.join("results.csv"));
    let text = read_input(&path)?;
    let rows = read_results_csv(text.as_bytes()).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    echo("report", &serde_json::json!({ "results": path, "out_dir": a.out_dir }));
    let table = ResultsTable::from_rows(rows);

    let counts: Vec<usize> = table.groups.iter().map(|g| g.count).collect();
    let expected = counts.iter().copied().max().unwrap_or(0);
    for g in table.groups.iter().filter(|g| g.metric == taskcomp_core::harness::Metric::TrainError) {
        if g.count < expected {
            eprintln!("warning: partial results: {} has {} runs, expected {expected}", g.key, g.count);
        }
    }
    if table.failed_runs() > 0 {
        eprintln!("warning: {} failed run(s) excluded from means", table.failed_runs());
    }
    let (summary, plot) = write_tables(&table, &a.out_dir)?;
    println!("runs: {} groups: {}", table.rows.len(), table.keys().len());
    print_findings(&table);
    println!("wrote {}", summary.display());
    println!("wrote {}", plot.display());
    Ok(())
}
