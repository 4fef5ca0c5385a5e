use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::info;
use serde::Serialize;
use siftmatch_core::agreement::{self, AgreementReport};
use siftmatch_core::cordic::accuracy_sweep;
use siftmatch_core::descriptors::{generate_synthetic, load_descriptor_set, save_descriptor_set};
use siftmatch_core::perf::{
    effective_throughput_with_blocking, roofline_sweep, write_roofline_csv,
};
use siftmatch_core::pipeline::{predict_cycles, run_pipeline};
use siftmatch_core::reference::{match_all, DEFAULT_THRESHOLD};
use siftmatch_core::{
    CordicConfig, DescriptorSet, FileFormat, LoadOptions, PipelineConfig, RooflineConfig,
};

use crate::error::CliError;
use crate::report::{
    accuracy_summary, write_accuracy_csv, write_matches_csv, Engine, MatchReport, SetInfo, Timing,
};
use crate::{
    BenchArgs, CharacterizeArgs, CompareArgs, GenerateArgs, MatchArgs, OutputFormat,
    PipelineOptions, RooflineArgs, SetFormat,
};

/// Reference hardware run times at n = 1021 under the default configuration.
const TARGET_TIMES_MS: [(usize, f64); 4] = [(579, 6.08), (638, 6.75), (882, 9.11), (1021, 10.46)];

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            let file = File::create(p)
                .map_err(|e| CliError::from(e).context(format!("cannot create {}", p.display())))?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut out = open_output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn load(path: &Path) -> Result<DescriptorSet, CliError> {
    let format = FileFormat::from_path(path).ok_or_else(|| {
        CliError::usage(format!(
            "{}: expected a .siftd (text) or .siftdb (binary) file",
            path.display()
        ))
    })?;
    let set = load_descriptor_set(path, format, LoadOptions::default())?;
    info!("loaded {} descriptors from {}", set.len(), path.display());
    Ok(set)
}

fn pipeline_config(opts: &PipelineOptions, mode: crate::Mode) -> Result<PipelineConfig, CliError> {
    let cfg = PipelineConfig {
        block_size: opts.block_size,
        clock_hz: opts.clock_hz,
        threshold_mode: mode.into(),
        ..PipelineConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn generate(a: GenerateArgs) -> Result<(), CliError> {
    if a.count == 0 {
        return Err(CliError::usage("descriptor count must be >= 1"));
    }
    let pair = generate_synthetic(a.count, a.seed, a.match_fraction, a.noise_sigma)?;
    fs::create_dir_all(&a.out_dir)
        .map_err(|e| CliError::from(e).context(format!("cannot create {}", a.out_dir.display())))?;
    let (format, ext) = match a.format {
        SetFormat::Binary => (FileFormat::Binary, "siftdb"),
        SetFormat::Text => (FileFormat::Text, "siftd"),
    };
    let queries = a.out_dir.join(format!("queries.{ext}"));
    let database = a.out_dir.join(format!("database.{ext}"));
    let truth = a.out_dir.join("ground_truth.csv");
    save_descriptor_set(&pair.queries, &queries, format)?;
    save_descriptor_set(&pair.database, &database, format)?;

    let mut out = open_output(Some(&truth))?;
    writeln!(out, "query_index,database_index")?;
    for (q, d) in &pair.ground_truth {
        writeln!(out, "{q},{d}")?;
    }
    out.flush()?;

    for p in [&queries, &database, &truth] {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn match_files(a: MatchArgs) -> Result<(), CliError> {
    let queries = load(&a.queries)?;
    let database = load(&a.database)?;
    let start = Instant::now();
    let (matches, threshold_mode, timing) = match a.engine {
        Engine::Reference => (match_all(&queries, &database, a.threshold)?, None, None),
        Engine::Pipeline => {
            if a.threshold != DEFAULT_THRESHOLD {
                return Err(CliError::usage(format!(
                    "the pipeline engine only implements threshold {DEFAULT_THRESHOLD}; use --threshold-mode to pick its encoding"
                )));
            }
            let cfg = pipeline_config(&a.pipeline, a.threshold_mode)?;
            let run = run_pipeline(&queries, &database, &cfg)?;
            let predicted = predict_cycles(queries.len(), database.len(), &cfg);
            info!(
                "{} cycles, {:.3} ms at {} MHz",
                run.total_cycles,
                run.elapsed_ms(),
                cfg.clock_hz / 1e6
            );
            let timing = Timing::new(&run, predicted, cfg.block_size);
            (run.matches, Some(cfg.threshold_mode), Some(timing))
        }
    };
    info!(
        "matched in {:.3} s wall clock",
        start.elapsed().as_secs_f64()
    );

    let report = MatchReport {
        engine: a.engine,
        queries: SetInfo::new(&a.queries, &queries),
        database: SetInfo::new(&a.database, &database),
        threshold: a.threshold,
        threshold_mode,
        matched_count: matches.iter().filter(|m| m.matched).count(),
        timing,
        matches,
    };
    match a.output_format {
        OutputFormat::Json => write_json(a.output.as_deref(), &report),
        OutputFormat::Csv => {
            let mut out = open_output(a.output.as_deref())?;
            write_matches_csv(&mut out, &report.matches)?;
            out.flush()?;
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct CompareReport {
    left: String,
    right: String,
    #[serde(flatten)]
    agreement: AgreementReport,
}

fn read_report(path: &Path) -> Result<MatchReport, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::from(e).context(format!("cannot open {}", path.display())))?;
    serde_json::from_reader(io::BufReader::new(file))
        .map_err(|e| CliError::from(e).context(format!("{} is not a match report", path.display())))
}

pub fn compare(a: CompareArgs) -> Result<(), CliError> {
    let report = match (&a.queries, &a.database, &a.left, &a.right) {
        (Some(qp), Some(dp), None, None) => {
            let queries = load(qp)?;
            let database = load(dp)?;
            let cfg = pipeline_config(&a.pipeline, a.threshold_mode)?;
            let float = match_all(&queries, &database, DEFAULT_THRESHOLD)?;
            let fixed = run_pipeline(&queries, &database, &cfg)?;
            let mut agreement = agreement::compare(&float, &fixed.matches, DEFAULT_THRESHOLD)?;
            agreement::explain(&mut agreement, &queries, &database, &cfg.cordic)?;
            CompareReport {
                left: "reference".into(),
                right: "pipeline".into(),
                agreement,
            }
        }
        (None, None, Some(lp), Some(rp)) => {
            let left = read_report(lp)?;
            let right = read_report(rp)?;
            CompareReport {
                left: lp.display().to_string(),
                right: rp.display().to_string(),
                agreement: agreement::compare(&left.matches, &right.matches, left.threshold)?,
            }
        }
        _ => {
            return Err(CliError::usage(
                "give either --queries and --database, or --left and --right",
            ))
        }
    };
    info!(
        "{:.2}% agreement, {} disagreements",
        report.agreement.agreement_percent,
        report.agreement.disagreements.len()
    );
    write_json(a.output.as_deref(), &report)
}

fn bandwidth_list(a: &RooflineArgs) -> Result<Vec<f64>, CliError> {
    if let (Some(from), Some(to), Some(step)) = (a.from, a.to, a.step) {
        if !(step.is_finite() && step > 0.0) {
            return Err(CliError::usage("--step must be positive"));
        }
        let count = if to >= from {
            ((to - from) / step + 1e-9).floor() as usize + 1
        } else {
            0
        };
        if count == 0 {
            return Err(CliError::usage(format!(
                "empty bandwidth range {from}..{to}"
            )));
        }
        return Ok((0..count).map(|i| from + i as f64 * step).collect());
    }
    if a.bandwidths.is_empty() {
        return Ok([0.8e9, 1.6e9, 3.2e9, 6.4e9, 12.8e9, 25.6e9, 51.2e9].to_vec());
    }
    Ok(a.bandwidths.clone())
}

pub fn roofline(a: RooflineArgs) -> Result<(), CliError> {
    let cfg = RooflineConfig {
        clock_hz: a.clock_hz,
        descriptor_bytes: a.descriptor_bytes,
        ..RooflineConfig::default()
    };
    let bandwidths = bandwidth_list(&a)?;
    let points = roofline_sweep(&cfg, &bandwidths)?;
    match a.output_format {
        OutputFormat::Json => write_json(a.output.as_deref(), &points),
        OutputFormat::Csv => {
            let mut out = open_output(a.output.as_deref())?;
            write_roofline_csv(&mut out, &points)?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn characterize(a: CharacterizeArgs) -> Result<(), CliError> {
    let cfg = CordicConfig {
        sqrt_iterations: a.sqrt_iterations,
        polar_iterations: a.polar_iterations,
        ..CordicConfig::default()
    };
    cfg.validate()?;
    let sweep = accuracy_sweep(&cfg);
    let mut out = open_output(a.output.as_deref())?;
    write_accuracy_csv(&mut out, &sweep)?;
    out.flush()?;
    eprintln!("{}", accuracy_summary(&sweep));
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchRow {
    queries: usize,
    database: usize,
    total_cycles: u64,
    predicted_cycles: u64,
    elapsed_ms: f64,
    target_ms: Option<f64>,
    deviation_percent: Option<f64>,
    modeled_ops_per_s: f64,
    blocking_model_ops_per_s: f64,
    wall_seconds: f64,
}

pub fn bench(a: BenchArgs) -> Result<(), CliError> {
    if a.sizes.is_empty() || a.sizes.contains(&0) || a.database_size == 0 {
        return Err(CliError::usage("sizes must be >= 1"));
    }
    let cfg = pipeline_config(&a.pipeline, crate::Mode::Binary10011)?;
    let largest = a
        .sizes
        .iter()
        .copied()
        .max()
        .unwrap_or(1)
        .max(a.database_size);
    let pair = generate_synthetic(largest, a.seed, 1.0, 0.0)?;
    let database = pair.database.truncated(a.database_size);
    let target_scale = a.database_size == 1021 && cfg == PipelineConfig::default();
    let blocking = effective_throughput_with_blocking(
        &RooflineConfig {
            clock_hz: cfg.clock_hz,
            ..RooflineConfig::default()
        },
        cfg.block_size,
        cfg.fetch_cycles_per_descriptor,
    )?;

    let mut rows = Vec::new();
    for &m in &a.sizes {
        let queries = pair.queries.truncated(m);
        let start = Instant::now();
        let run = run_pipeline(&queries, &database, &cfg)?;
        let wall_seconds = start.elapsed().as_secs_f64();
        let target_ms = target_scale
            .then(|| {
                TARGET_TIMES_MS
                    .iter()
                    .find(|(size, _)| *size == m)
                    .map(|(_, t)| *t)
            })
            .flatten();
        info!(
            "m={m}: {:.3} ms modeled, {wall_seconds:.3} s wall",
            run.elapsed_ms()
        );
        rows.push(BenchRow {
            queries: m,
            database: a.database_size,
            total_cycles: run.total_cycles,
            predicted_cycles: predict_cycles(m, a.database_size, &cfg),
            elapsed_ms: run.elapsed_ms(),
            target_ms,
            deviation_percent: target_ms.map(|p| 100.0 * (run.elapsed_ms() - p) / p),
            modeled_ops_per_s: run.throughput(),
            blocking_model_ops_per_s: blocking,
            wall_seconds,
        });
    }
    write_json(a.output.as_deref(), &rows)
}
