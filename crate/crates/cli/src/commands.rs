use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use qgk_core::bench::{
    classical_growth, cost_report, quantum_growth, scaling_experiment, standard_cost_log, GrowthSeries,
};
use qgk_core::estimator::{estimate_distance_sq, estimate_dot, estimate_z};
use qgk_core::io::{fmt_f64, read_dataset, write_matrix_csv, write_table_csv, CsvOptions, Dataset};
use qgk_core::kernels::{classical_gram, kernel_matrix, min_eigenvalue, KernelReport};
use qgk_core::qram::QramStore;
use qgk_core::svm::{train, LssvmModel};
use serde::Serialize;
use serde_json::json;

use crate::config::{FileConfig, Resolved};
use crate::{BenchCommand, CliError, DataArgs, GrowthChoice, SvmCommand};

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Z,
    DistanceSq,
    Dot,
}

fn load(data: &DataArgs, has_labels: bool) -> Result<Dataset, CliError> {
    let opts = CsvOptions {
        has_header: data.header,
        has_labels,
    };
    read_dataset(&data.data, opts).map_err(|e| match CliError::from(e) {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", data.data.display())),
        other => other,
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    println!("{text}");
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Writes to `out` when given, else to stdout.
fn with_output<F>(out: Option<&Path>, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    match out {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn config_comment(resolved: &Resolved) -> String {
    format!("config: {}", resolved.to_json())
}

pub fn estimate(
    data: &DataArgs,
    quantity: Quantity,
    i: usize,
    j: usize,
    est: &crate::config::EstimatorArgs,
) -> Result<(), CliError> {
    let file = FileConfig::load(est.config.as_deref())?;
    let resolved = Resolved::new(est, &file)?;
    let cfg = resolved.require_estimator("estimate")?;
    let ds = load(data, false)?;
    let store = QramStore::load_dataset(&ds.rows)?;
    let result = match quantity {
        Quantity::Z => estimate_z(&store, i, j, &cfg)?,
        Quantity::DistanceSq => estimate_distance_sq(&store, i, j, &cfg)?,
        Quantity::Dot => estimate_dot(&store, i, j, &cfg)?,
    };
    print_json(&json!({
        "command": "estimate",
        "quantity": quantity,
        "i": i,
        "j": j,
        "n": store.dim(),
        "config": resolved,
        "result": result,
    }))
}

pub fn gram(
    data: &DataArgs,
    out: &Path,
    report_path: Option<&Path>,
    repair: bool,
    est: &crate::config::EstimatorArgs,
    kernel: &crate::config::KernelArgs,
) -> Result<(), CliError> {
    let file = FileConfig::load(est.config.as_deref())?;
    let resolved = Resolved::new(est, &file)?.with_kernel(kernel, &file)?;
    let spec = resolved.kernel_spec();
    let ds = load(data, false)?;
    let store = QramStore::load_dataset(&ds.rows)?;
    let (k, report) = match resolved.estimator() {
        Some(cfg) => kernel_matrix(&store, &spec, &cfg, repair)?,
        None => {
            let k = classical_gram(&ds.rows, &spec);
            let min = min_eigenvalue(&k);
            let report = KernelReport {
                min_eigenvalue: min,
                repaired: false,
                min_eigenvalue_after: min,
                pair_estimates: 0,
                total_shots: 0,
                total_queries: 0,
                total_steps: 0,
                clamped: 0,
                truncation: None,
                entries: Vec::new(),
            };
            (k, report)
        }
    };
    let mut w = create(out)?;
    write_matrix_csv(&mut w, &k, &["qgk gram".into(), config_comment(&resolved)])?;
    w.flush()?;
    let record = json!({
        "command": "gram",
        "m": k.nrows(),
        "config": resolved,
        "report": report,
    });
    if let Some(p) = report_path {
        let mut w = create(p)?;
        serde_json::to_writer_pretty(&mut w, &record).expect("serializable");
        writeln!(w)?;
        w.flush()?;
    }
    print_json(&record)
}

fn read_model(path: &Path) -> Result<LssvmModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    LssvmModel::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn svm(cmd: SvmCommand) -> Result<(), CliError> {
    match cmd {
        SvmCommand::Train {
            data,
            out,
            gamma,
            est,
            kernel,
        } => {
            let file = FileConfig::load(est.config.as_deref())?;
            let resolved = Resolved::new(&est, &file)?
                .with_kernel(&kernel, &file)?
                .with_gamma(gamma, &file);
            let labeled = load(&data, true)?.into_labeled()?;
            let model = train(
                &labeled,
                &resolved.kernel_spec(),
                &resolved.kernel_source(),
                resolved.gamma.expect("gamma resolved"),
            )?;
            let mut w = create(&out)?;
            w.write_all(model.to_json()?.as_bytes())?;
            writeln!(w)?;
            w.flush()?;
            let training = model.evaluate(&labeled)?;
            print_json(&json!({
                "command": "svm train",
                "m": labeled.len(),
                "config": resolved,
                "bias": model.bias,
                "training_accuracy": training.accuracy,
                "confusion": training.confusion,
            }))
        }
        SvmCommand::Predict {
            data,
            model,
            labels,
            out,
        } => {
            let model = read_model(&model)?;
            let ds = load(&data, labels)?;
            let preds = model.predict_batch(&ds.rows)?;
            let rows: Vec<Vec<String>> = preds
                .iter()
                .enumerate()
                .map(|(k, p)| vec![k.to_string(), fmt_f64(p.score), format!("{}", p.label as i64)])
                .collect();
            let comments = [format!(
                "model: {}",
                serde_json::to_string(&json!({"spec": model.spec, "source": model.kernel_source, "gamma": model.gamma}))
                    .expect("serializable")
            )];
            with_output(out.as_deref(), |w| {
                Ok(write_table_csv(w, &["index", "score", "label"], &rows, &comments)?)
            })
        }
        SvmCommand::Eval { data, model } => {
            let model = read_model(&model)?;
            let labeled = load(&data, true)?.into_labeled()?;
            let ev = model.evaluate(&labeled)?;
            print_json(&json!({
                "command": "svm eval",
                "m": labeled.len(),
                "spec": model.spec,
                "source": model.kernel_source,
                "gamma": model.gamma,
                "accuracy": ev.accuracy,
                "confusion": ev.confusion,
            }))
        }
    }
}

fn growth_table(series: &GrowthSeries) -> Vec<Vec<String>> {
    series
        .terms
        .iter()
        .map(|t| {
            vec![
                t.d.to_string(),
                t.value.map_or_else(|| "inf".to_string(), fmt_f64),
                fmt_f64(t.log_value),
            ]
        })
        .collect()
}

pub fn bench(cmd: BenchCommand) -> Result<(), CliError> {
    match cmd {
        BenchCommand::Growth { kind, n, d_max, out } => {
            let series = match kind {
                GrowthChoice::Classical => classical_growth(n, d_max)?,
                GrowthChoice::Quantum => quantum_growth(n, d_max)?,
            };
            let summary = json!({
                "command": "bench growth",
                "kind": series.kind,
                "n": n,
                "d_max": d_max,
                "peak_d": series.peak_d,
                "peak_set": series.peak_set(),
                "vanish_d": series.vanish_d,
                "partial_sum": series.partial_sum(),
            });
            let comments = [format!("summary: {summary}")];
            with_output(out.as_deref(), |w| {
                Ok(write_table_csv(w, &["d", "value", "log_value"], &growth_table(&series), &comments)?)
            })?;
            if out.is_some() {
                print_json(&summary)?;
            }
            Ok(())
        }
        BenchCommand::Scaling {
            data,
            i,
            j,
            shot_grid,
            seeds,
            out,
            est,
        } => {
            let file = FileConfig::load(est.config.as_deref())?;
            let resolved = Resolved::new(&est, &file)?;
            let cfg = resolved.require_estimator("bench scaling")?;
            let ds = load(&data, false)?;
            let store = QramStore::load_dataset(&ds.rows)?;
            let fit = scaling_experiment(&store, (i, j), cfg.backend, &shot_grid, seeds, cfg.seed)?;
            let rows: Vec<Vec<String>> = fit
                .xs
                .iter()
                .zip(&fit.ys)
                .zip(&fit.stderrs)
                .map(|((x, y), s)| vec![x.to_string(), fmt_f64(*y), fmt_f64(*s)])
                .collect();
            let comments = [
                config_comment(&resolved),
                format!("fit: slope={} intercept={} r2={}", fmt_f64(fit.slope), fmt_f64(fit.intercept), fmt_f64(fit.r2)),
            ];
            if let Some(p) = out.as_deref() {
                let mut w = create(p)?;
                write_table_csv(&mut w, &["shots", "rmse", "stderr"], &rows, &comments)?;
                w.flush()?;
            }
            print_json(&json!({
                "command": "bench scaling",
                "pair": [i, j],
                "config": resolved,
                "fit": fit,
            }))
        }
        BenchCommand::Cost {
            data,
            i,
            j,
            degree,
            sigma,
            out,
            est,
        } => {
            let file = FileConfig::load(est.config.as_deref())?;
            let resolved = Resolved::new(&est, &file)?;
            let cfg = resolved.require_estimator("bench cost")?;
            let ds = load(&data, false)?;
            let store = QramStore::load_dataset(&ds.rows)?;
            let table = cost_report(&standard_cost_log(&store, (i, j), degree, sigma, &cfg)?);
            let rows: Vec<Vec<String>> = table
                .iter()
                .map(|r| {
                    vec![
                        r.operation.clone(),
                        r.n.to_string(),
                        r.shots.to_string(),
                        r.queries_per_shot.to_string(),
                        r.steps_per_query.to_string(),
                        r.qram_queries.to_string(),
                        r.total_steps.to_string(),
                        r.model_steps.to_string(),
                        r.matches.to_string(),
                    ]
                })
                .collect();
            let header = [
                "operation",
                "n",
                "shots",
                "queries_per_shot",
                "steps_per_query",
                "qram_queries",
                "total_steps",
                "model_steps",
                "matches",
            ];
            let comments = [config_comment(&resolved), format!("degree={degree} sigma={sigma}")];
            with_output(out.as_deref(), |w| Ok(write_table_csv(w, &header, &rows, &comments)?))?;
            if out.is_some() {
                print_json(&json!({
                    "command": "bench cost",
                    "config": resolved,
                    "records": table.len(),
                    "all_match": table.iter().all(|r| r.matches),
                }))?;
            }
            Ok(())
        }
    }
}
