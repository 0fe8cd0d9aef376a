use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use eegattn::dataio::{
    generate_raw_recording, generate_synthetic, read_recording, read_trialset, write_recording, write_trialset,
    TrialSet,
};
use eegattn::dsp::{preprocess, PassThrough};
use eegattn::nn::gradcheck::run_suite;
use eegattn::nn::weights::{read_weights, write_weights};
use eegattn::nn::describe;
use eegattn::stats::{compare_conditions, CompareUnit, ALPHA};
use eegattn::training::{
    confusion_csv, cross_validate, evaluate, CvSummary, DatasetInfo, ResultsDocument, SubjectResult,
};
use eegattn::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::config::{set, RunConfig};
use crate::{Cli, Command, DescribeArgs, EvalArgs, GradcheckArgs, PreprocessArgs, StatsArgs, SynthArgs, TrainArgs, UnitArg};

pub fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    set(&mut cfg.seed, cli.seed.map(Some));
    match cli.command {
        Command::Synth(a) => synth(cfg, a),
        Command::Preprocess(a) => preprocess_cmd(cfg, a),
        Command::Train(a) => train(cfg, a),
        Command::Eval(a) => eval(cfg, a),
        Command::Stats(a) => stats(cfg, a),
        Command::Gradcheck(a) => gradcheck(cfg, a),
        Command::Describe(a) => describe_cmd(cfg, a),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.into(),
        source,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

/// `<path>.json`: the resolved configuration and a summary of what a
/// file-producing command wrote.
fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// File stems, disambiguated with a numeric suffix where they collide.
fn subject_names(paths: &[PathBuf]) -> Vec<String> {
    let mut seen = HashSet::new();
    paths
        .iter()
        .map(|p| {
            let base = stem(p);
            let mut name = base.clone();
            let mut k = 2;
            while !seen.insert(name.clone()) {
                name = format!("{base}-{k}");
                k += 1;
            }
            name
        })
        .collect()
}

fn print_dataset(t: &TrialSet) {
    println!(
        "{} trials, {} channels x {} samples at {} Hz, {} classes",
        t.n_trials(),
        t.n_channels(),
        t.n_samples,
        t.sampling_rate,
        t.n_classes
    );
    println!("class counts: {:?}", t.class_counts());
}

fn synth(mut cfg: RunConfig, a: SynthArgs) -> Result<()> {
    if a.raw {
        if a.trials_per_class.is_some() || a.channels.is_some() || a.samples.is_some() {
            return Err(Error::Config(
                "--trials-per-class, --channels and --samples do not apply to --raw".into(),
            ));
        }
        let s = &mut cfg.raw_synth;
        set(&mut s.seed, cfg.seed);
        set(&mut s.n_classes, a.classes);
        set(&mut s.fs, a.fs);
        set(&mut s.snr_db, a.snr);
        set(&mut s.n_markers, a.markers);
        set(&mut s.duration_s, a.duration);
        set(&mut s.first_marker_s, a.first_marker);
        let rec = generate_raw_recording(s)?;
        write_recording(&rec, &a.out)?;
        println!(
            "{}: {} channels x {} samples at {} Hz, {} markers",
            a.out.display(),
            rec.n_channels(),
            rec.n_samples,
            rec.sampling_rate,
            rec.markers.len()
        );
        let summary = json!({
            "n_channels": rec.n_channels(),
            "n_samples": rec.n_samples,
            "sampling_rate": rec.sampling_rate,
            "n_markers": rec.markers.len(),
        });
        return write_json(
            &sidecar_path(&a.out),
            &json!({"command": "synth", "raw": true, "config": cfg.to_value(), "summary": summary}),
        );
    }
    if a.markers.is_some() || a.duration.is_some() || a.first_marker.is_some() {
        return Err(Error::Config("--markers, --duration and --first-marker need --raw".into()));
    }
    let s = &mut cfg.synth;
    set(&mut s.seed, cfg.seed);
    set(&mut s.n_classes, a.classes);
    set(&mut s.trials_per_class, a.trials_per_class);
    set(&mut s.n_channels, a.channels);
    set(&mut s.n_samples, a.samples);
    set(&mut s.fs, a.fs);
    set(&mut s.snr_db, a.snr);
    s.validate()?;
    let t = generate_synthetic(s)?;
    write_trialset(&t, &a.out)?;
    print!("{}: ", a.out.display());
    print_dataset(&t);
    write_json(
        &sidecar_path(&a.out),
        &json!({"command": "synth", "raw": false, "config": cfg.to_value(), "dataset": DatasetInfo::of(&t, &a.out.display().to_string())}),
    )
}

fn preprocess_cmd(mut cfg: RunConfig, a: PreprocessArgs) -> Result<()> {
    let p = &mut cfg.preprocess;
    if a.no_filter {
        p.bandpass = None;
    }
    set(&mut p.target_fs, a.target_fs);
    set(&mut p.n_classes, a.classes);
    set(&mut p.channels, a.channels);
    let rec = read_recording(&a.input)?;
    let out = preprocess(&rec, p, &PassThrough)?;
    for s in &out.stages {
        println!("{:<16} {:?} @ {} Hz", s.stage, s.shape, s.sampling_rate);
    }
    for r in &out.rejected {
        println!(
            "rejected marker {} (sample {}, label {}): {}",
            r.marker_index, r.sample, r.label, r.reason
        );
    }
    println!("{} trials kept, {} rejected", out.trials.n_trials(), out.rejected.len());
    write_trialset(&out.trials, &a.out)?;
    write_json(
        &sidecar_path(&a.out),
        &json!({
            "command": "preprocess",
            "input": a.input.display().to_string(),
            "config": cfg.to_value(),
            "stages": out.stages,
            "rejected": out.rejected,
            "dataset": DatasetInfo::of(&out.trials, &a.out.display().to_string()),
        }),
    )
}

fn train(mut cfg: RunConfig, a: TrainArgs) -> Result<()> {
    let tc = &mut cfg.train;
    set(&mut tc.seed, cfg.seed);
    set(&mut tc.epochs, a.epochs);
    set(&mut tc.folds, a.folds);
    set(&mut tc.batch_size, a.batch_size);
    set(&mut tc.learning_rate, a.lr);
    tc.validate()?;
    if a.parallel_folds == 0 {
        return Err(Error::Config("--parallel-folds must be positive".into()));
    }
    if a.no_positional_embeddings {
        cfg.model.use_positional_embeddings = false;
    }

    let datasets = a.data.iter().map(|p| read_trialset(p)).collect::<Result<Vec<_>>>()?;
    // The input dimensions of the model follow the data.
    let first = &datasets[0];
    for (t, p) in datasets.iter().zip(&a.data).skip(1) {
        if (t.n_channels(), t.n_samples, t.n_classes) != (first.n_channels(), first.n_samples, first.n_classes)
            || t.sampling_rate != first.sampling_rate
        {
            return Err(Error::Data(format!(
                "{} has different dimensions from {}",
                p.display(),
                a.data[0].display()
            )));
        }
    }
    let m = &mut cfg.model;
    m.n_channels = first.n_channels();
    m.n_samples = first.n_samples;
    m.n_classes = first.n_classes;
    m.sampling_rate = first.sampling_rate;
    m.validate()?;

    let names = subject_names(&a.data);
    let start = Instant::now();
    let mut subjects = Vec::new();
    let mut timings = Vec::new();
    for ((t, path), name) in datasets.iter().zip(&a.data).zip(&names) {
        let cv = cross_validate(t, &cfg.model, &cfg.train, a.parallel_folds)?;
        println!(
            "{name}: accuracy {:.4} ± {:.4} over {} folds (chance {:.4})",
            cv.summary.mean_accuracy,
            cv.summary.std_accuracy,
            cv.folds.len(),
            cv.summary.chance_level
        );
        if let Some(dir) = &a.weights_out {
            create_dir(dir)?;
            for (k, p) in cv.fold_params.iter().enumerate() {
                write_weights(p, &dir.join(format!("{name}.fold{k}.eatw")))?;
            }
        }
        if let Some(dir) = &a.confusion_out {
            for f in &cv.folds {
                write_text(&dir.join(format!("{name}.fold{}.csv", f.fold_index)), &confusion_csv(&f.confusion))?;
            }
        }
        timings.push(json!({"subject": name, "fold_seconds": cv.fold_seconds}));
        subjects.push(SubjectResult {
            subject: name.clone(),
            dataset: DatasetInfo::of(t, &path.display().to_string()),
            folds: cv.folds,
            summary: cv.summary,
        });
    }
    let doc = ResultsDocument::new(cfg.to_value(), subjects);
    if names.len() > 1 {
        let s: &CvSummary = &doc.summary;
        println!(
            "over {} subjects: accuracy {:.4} ± {:.4} (chance {:.4})",
            names.len(),
            s.mean_accuracy,
            s.std_accuracy,
            s.chance_level
        );
    }
    write_text(&a.out, &doc.to_json()?)?;
    // Wall-clock data lives beside the results so that the results document
    // itself is reproducible.
    let mut timing_path = a.out.as_os_str().to_owned();
    timing_path.push(".timings.json");
    write_json(
        Path::new(&timing_path),
        &json!({
            "parallel_folds": a.parallel_folds,
            "total_seconds": start.elapsed().as_secs_f64(),
            "subjects": timings,
        }),
    )
}

fn eval(cfg: RunConfig, a: EvalArgs) -> Result<()> {
    let params = read_weights(&a.weights)?;
    let data = read_trialset(&a.data)?;
    let e = evaluate(&params, &data)?;
    let chance = 1.0 / data.n_classes as f64;
    println!("accuracy {:.4} on {} trials (chance {:.4})", e.accuracy, data.n_trials(), chance);
    if let Some(path) = &a.confusion_out {
        write_text(path, &confusion_csv(&e.confusion))?;
    }
    if let Some(path) = &a.out {
        write_json(
            path,
            &json!({
                "format": "eegattn-eval",
                "version": 1,
                "config": cfg.to_value(),
                "model": params.config,
                "weights": a.weights.display().to_string(),
                "dataset": DatasetInfo::of(&data, &a.data.display().to_string()),
                "accuracy": e.accuracy,
                "chance_level": chance,
                "confusion": e.confusion,
                "predictions": e.predictions,
            }),
        )?;
    }
    Ok(())
}

fn stats(mut cfg: RunConfig, a: StatsArgs) -> Result<()> {
    let s = &mut cfg.stats;
    set(&mut s.seed, cfg.seed);
    set(&mut s.n_perm, a.n_perm);
    set(
        &mut s.unit,
        a.unit.map(|u| match u {
            UnitArg::Subject => CompareUnit::Subject,
            UnitArg::Fold => CompareUnit::Fold,
        }),
    );
    let doc_a = ResultsDocument::read(&a.a)?;
    let doc_b = ResultsDocument::read(&a.b)?;
    let (mut la, mut lb) = (stem(&a.a), stem(&a.b));
    if la == lb {
        la.push_str(" (a)");
        lb.push_str(" (b)");
    }
    let c = compare_conditions(&la, &doc_a, &lb, &doc_b, s.options())?;
    print!("{}", c.table());
    println!(
        "{}",
        if c.significant(ALPHA) {
            format!("conditions differ (both p < {ALPHA})")
        } else {
            format!("no significant difference under both tests at p < {ALPHA}")
        }
    );
    if let Some(path) = &a.out {
        write_json(
            path,
            &json!({
                "format": "eegattn-comparison",
                "version": 1,
                "config": cfg.to_value(),
                "a": a.a.display().to_string(),
                "b": a.b.display().to_string(),
                "comparison": c,
            }),
        )?;
    }
    Ok(())
}

fn gradcheck(mut cfg: RunConfig, a: GradcheckArgs) -> Result<()> {
    let g = &mut cfg.gradcheck;
    set(&mut g.first_seed, cfg.seed);
    set(&mut g.seeds, a.seeds);
    set(&mut g.tol, a.tol);
    let report = run_suite(&g.options())?;
    println!("{:<40} {:>14} {:>8}  result", "op", "max_rel_error", "checked");
    for r in &report.ops {
        println!(
            "{:<40} {:>14.3e} {:>8}  {}",
            r.op_name,
            r.max_rel_error,
            r.checked,
            if r.passed { "pass" } else { "FAIL" }
        );
    }
    if let Some(path) = &a.out {
        write_json(path, &json!({"config": cfg.to_value(), "report": report, "passed": report.passed()}))?;
    }
    let failed = report.ops.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Error::Numeric(format!(
            "{failed} of {} gradient checks exceed tolerance {}",
            report.ops.len(),
            report.tol
        )));
    }
    println!("all {} checks pass over {} seeds at tol {}", report.ops.len(), report.seeds, report.tol);
    Ok(())
}

fn describe_cmd(cfg: RunConfig, a: DescribeArgs) -> Result<()> {
    let s = describe(&cfg.model)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&s)?);
        return Ok(());
    }
    println!("parameters: {}", s.param_count);
    println!("buffers:    {}", s.buffer_count);
    println!();
    println!("{:<24} shape (batch of 1)", "stage");
    for st in &s.stages {
        println!("{:<24} {:?}", st.stage, st.shape);
    }
    println!();
    println!("{:<32} {:>8}  shape", "parameter", "count");
    for p in &s.params {
        println!("{:<32} {:>8}  {:?}", p.name, p.count, p.shape);
    }
    Ok(())
}
