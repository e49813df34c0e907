use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, BufWriter, Cursor};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::cli::{Command, TrainArgs};
use super::{load_controller_config, load_train_config, suffixed, AppError, RunManifest};
use crate::data::{
    ingest, load_trial_csv, load_trial_dir, save_trial_csv, synth_generate, GaitTrial, IngestOptions, PopulationSpec,
};
use crate::metrics::{peak_errors, write_peak_csv};
use crate::nn::io::{model_load, model_save};
use crate::runtime::{
    run_loop, trial_frames, ControllerConfig, FrameSink, FrameSource, Runtime, SessionReport, StreamSink, StreamSource,
    UdpSink, UdpSource,
};
use crate::textcfg::{merge_config_text, read_config_file};
use crate::train::{
    evaluate, feature_importance, finetune, loocv, peak_comparison, pretrain, EpochLog, TrainConfig, TrainedModel,
};

pub(super) fn dispatch(cmd: Command) -> Result<(), AppError> {
    let started = Instant::now();
    match cmd {
        Command::Gen { spec, population, seed, layout, out } => {
            let pspec = match &spec {
                Some(p) => PopulationSpec::parse(&read_config_file(p)?)?,
                None => PopulationSpec::for_population(population.into()),
            };
            fs::create_dir_all(&out).map_err(|e| AppError::Data(format!("cannot create {}: {e}", out.display())))?;
            let opts = IngestOptions { layout: Some(layout.into()), ..IngestOptions::default() };
            let raws = synth_generate(&pspec, seed)?;
            for raw in &raws {
                let trial = ingest(raw, &opts)?;
                save_trial_csv(&trial, out.join(format!("{}.csv", trial.meta.trial_id)))?;
            }
            log::info!("wrote {} trials to {}", raws.len(), out.display());
            let mut m = RunManifest::new("gen").with_config(&pspec);
            m.seed = Some(seed);
            if let Some(p) = &spec {
                m.input(p)?;
            }
            m.output(&out)?;
            m.write_beside(&out, started)?;
        }
        Command::Pretrain { train, out } => {
            let (cfg, trials, mut m) = prepare("pretrain", &train)?;
            let outcome = pretrain(&trials, &cfg)?;
            save_model(&outcome.trained, &out)?;
            let curves = suffixed(&out, ".curves.csv");
            write_text(&curves, &curves_csv(&outcome.curves))?;
            m.output(&out)?;
            m.output(&curves)?;
            m.write_beside(&out, started)?;
        }
        Command::Finetune { train, pretrained, out } => {
            let (cfg, trials, mut m) = prepare("finetune", &train)?;
            let base = model_load(&pretrained)?;
            m.input(&pretrained)?;
            let outcome = finetune(&base.model, &trials, &cfg)?;
            save_model(&outcome.trained, &out)?;
            let curves = suffixed(&out, ".curves.csv");
            write_text(&curves, &curves_csv(&outcome.curves))?;
            m.output(&out)?;
            m.output(&curves)?;
            m.write_beside(&out, started)?;
        }
        Command::Loocv { train, pretrained, out } => {
            let (cfg, trials, mut m) = prepare("loocv", &train)?;
            let base = match &pretrained {
                Some(p) => {
                    m.input(p)?;
                    Some(model_load(p)?.model)
                }
                None => None,
            };
            let report = loocv(&trials, &cfg, base.as_ref())?;
            report.write(&out)?;
            println!("{}", report.summary_table());
            m.output(&out)?;
            m.write_beside(&out, started)?;
        }
        Command::Importance { data, model, group, seed, out } => {
            let trained = load_trained(&model)?;
            let trials = load_dir(&data)?;
            let mut csv = String::from("group,baseline_mae,baseline_rmse,baseline_r2,randomized_mae,randomized_rmse,randomized_r2,delta_mae,delta_rmse,delta_r2\n");
            for g in group.groups() {
                let r = feature_importance(&trained, &trials, g, seed)?;
                let _ = writeln!(
                    csv,
                    "{:?},{},{},{},{},{},{},{},{},{}",
                    g,
                    r.baseline.mae.0,
                    r.baseline.rmse.0,
                    r.baseline.r2,
                    r.randomized.mae.0,
                    r.randomized.rmse.0,
                    r.randomized.r2,
                    r.delta_mae,
                    r.delta_rmse,
                    r.delta_r2
                );
                println!("{g:?}: delta R2 {:+.4}, delta RMSE {:+.4} Nm/kg", r.delta_r2, r.delta_rmse);
            }
            write_text(&out, &csv)?;
            let mut m = RunManifest::new("importance");
            m.seed = Some(seed);
            m.input(&data)?;
            m.input(&model)?;
            m.output(&out)?;
            m.write_beside(&out, started)?;
        }
        Command::Eval { data, model, out, peaks } => {
            let trained = load_trained(&model)?;
            let trials = load_dir(&data)?;
            let ev = evaluate(&trained, &trials)?;
            let reg = ev.regression()?;
            let ss = ev.stance_swing()?;
            let (pred_rows, true_rows) = peak_comparison(&trained, &trials)?;
            let mut csv = String::from("windows,mae,rmse,r2,stance_rmse,swing_rmse,phase_accuracy,strides,df_timing_err_pct,pf_timing_err_pct,df_mag_err,pf_mag_err\n");
            let pe = if pred_rows.is_empty() { None } else { Some(peak_errors(&pred_rows, &true_rows)?) };
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                ev.torque_pred.len(),
                reg.mae.0,
                reg.rmse.0,
                reg.r2,
                ss.stance.map_or(f64::NAN, |s| s.0),
                ss.swing.map_or(f64::NAN, |s| s.0),
                ev.phase_accuracy().unwrap_or(f64::NAN),
                pred_rows.len(),
                pe.as_ref().map_or(f64::NAN, |p| p.df_timing.mean),
                pe.as_ref().map_or(f64::NAN, |p| p.pf_timing.mean),
                pe.as_ref().map_or(f64::NAN, |p| p.df_magnitude.mean),
                pe.as_ref().map_or(f64::NAN, |p| p.pf_magnitude.mean),
            );
            print!("{csv}");
            write_text(&out, &csv)?;
            let mut m = RunManifest::new("eval");
            m.input(&data)?;
            m.input(&model)?;
            m.output(&out)?;
            if let Some(p) = &peaks {
                write_peak_csv(&pred_rows, p)?;
                m.output(p)?;
            }
            m.write_beside(&out, started)?;
        }
        Command::Replay { trial, model, controller, out, report, pacing } => {
            let trained = Arc::new(load_trained(&model)?);
            let t = load_trial_csv(&trial)?;
            let base = ControllerConfig { mass_kg: t.meta.mass_kg, ..ControllerConfig::default() };
            let cfg = match &controller {
                Some(p) => merge_config_text(&base, &read_config_file(p)?)?,
                None => base,
            };
            cfg.validate().map_err(|e| crate::textcfg::ConfigError::Invalid(e.to_string()))?;
            let bytes: Vec<u8> = trial_frames(&t)?.iter().flat_map(|f| f.encode()).collect();
            let mut source = StreamSource::new(Cursor::new(bytes));
            let mut sink = StreamSink::new(BufWriter::new(create(&out)?));
            let mut rt = Runtime::new(trained, cfg.clone())?;
            let rep = run_loop(&mut source, &mut sink, &mut rt, pacing.into())?;
            drop(sink);
            let report = report.unwrap_or_else(|| suffixed(&out, ".report.json"));
            finish_session("replay", &cfg, &rep, &report, &[&trial, &model], &out, started)?;
        }
        Command::Run { model, controller, input, output, report, pacing, idle_timeout_ms } => {
            let trained = Arc::new(load_trained(&model)?);
            let cfg = load_controller_config(controller.as_deref())?;
            let mut source = open_source(&input, Duration::from_millis(idle_timeout_ms))?;
            let mut sink = open_sink(&output)?;
            let mut rt = Runtime::new(trained, cfg.clone())?;
            let rep = run_loop(source.as_mut(), sink.as_mut(), &mut rt, pacing.into())?;
            drop(sink);
            finish_session("run", &cfg, &rep, &report, &[&model], &report, started)?;
        }
    }
    Ok(())
}

fn prepare(name: &str, a: &TrainArgs) -> Result<(TrainConfig, Vec<GaitTrial>, RunManifest), AppError> {
    let mut cfg = load_train_config(a.profile.into(), a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    log::info!("{name} config: {}", serde_json::to_string(&cfg).expect("config serializes"));
    let trials = load_dir(&a.data)?;
    let mut m = RunManifest::new(name).with_config(&cfg);
    m.profile = Some(format!("{:?}", a.profile).to_lowercase());
    m.seed = Some(cfg.seed);
    m.input(&a.data)?;
    if let Some(c) = &a.config {
        m.input(c)?;
    }
    Ok((cfg, trials, m))
}

fn load_dir(dir: &Path) -> Result<Vec<GaitTrial>, AppError> {
    let trials = load_trial_dir(dir)?;
    if trials.is_empty() {
        return Err(AppError::Data(format!("no trial CSVs in {}", dir.display())));
    }
    Ok(trials)
}

fn load_trained(path: &Path) -> Result<TrainedModel, AppError> {
    let ck = model_load(path)?;
    let standardizer =
        ck.standardizer.ok_or_else(|| AppError::Data(format!("{} has no input standardizer", path.display())))?;
    Ok(TrainedModel { model: ck.model, standardizer })
}

fn save_model(t: &TrainedModel, path: &Path) -> Result<(), AppError> {
    Ok(model_save(&t.model, Some(&t.standardizer), path)?)
}

fn create(path: &Path) -> Result<fs::File, AppError> {
    fs::File::create(path).map_err(|e| AppError::Data(format!("cannot create {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|e| AppError::Data(format!("cannot write {}: {e}", path.display())))
}

fn curves_csv(curves: &[EpochLog]) -> String {
    let mut s = String::from("epoch,train_torque_mse,train_stance_ce,val_torque_mse,val_stance_ce,val_r2,max_stance_loss_ratio,guarded_steps\n");
    for c in curves {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            c.epoch,
            c.train_torque_mse,
            c.train_stance_ce,
            c.val_torque_mse,
            c.val_stance_ce,
            c.val_r2,
            c.max_stance_loss_ratio,
            c.guarded_steps
        );
    }
    s
}

fn udp_addr(spec: &str) -> Result<Option<SocketAddr>, AppError> {
    match spec.strip_prefix("udp:") {
        Some(a) => a.parse().map(Some).map_err(|e| AppError::Usage(format!("bad UDP address '{a}': {e}"))),
        None => Ok(None),
    }
}

fn open_source(spec: &str, idle: Duration) -> Result<Box<dyn FrameSource + Send>, AppError> {
    let io = |e: std::io::Error| AppError::Data(format!("cannot open input '{spec}': {e}"));
    Ok(match (spec, udp_addr(spec)?) {
        (_, Some(addr)) => Box::new(UdpSource::bind(addr, idle).map_err(io)?),
        ("-", None) => Box::new(StreamSource::new(std::io::stdin())),
        (path, None) => Box::new(StreamSource::new(BufReader::new(fs::File::open(path).map_err(io)?))),
    })
}

fn open_sink(spec: &str) -> Result<Box<dyn FrameSink + Send>, AppError> {
    let io = |e: std::io::Error| AppError::Data(format!("cannot open output '{spec}': {e}"));
    Ok(match (spec, udp_addr(spec)?) {
        (_, Some(addr)) => Box::new(UdpSink::connect(addr).map_err(io)?),
        ("-", None) => Box::new(StreamSink::new(std::io::stdout())),
        (path, None) => Box::new(StreamSink::new(BufWriter::new(fs::File::create(path).map_err(io)?))),
    })
}

fn finish_session(
    name: &str,
    cfg: &ControllerConfig,
    rep: &SessionReport,
    report_path: &Path,
    inputs: &[&Path],
    primary: &Path,
    started: Instant,
) -> Result<(), AppError> {
    write_text(report_path, &(rep.to_json() + "\n"))?;
    eprintln!(
        "{} frames, {} commands, {} dropped, latency p50 {:.0} us p99 {:.0} us",
        rep.frames_received, rep.commands_emitted, rep.dropped_frames, rep.latency_us.p50, rep.latency_us.p99
    );
    let mut m = RunManifest::new(name).with_config(cfg);
    for p in inputs {
        m.input(p)?;
    }
    if primary != report_path && primary.is_file() {
        m.output(primary)?;
    }
    m.output(report_path)?;
    m.write_beside(primary, started)?;
    if rep.fault_frames > 0 {
        return Err(AppError::Fault(format!(
            "{} frames commanded under fault ({} timing faults, {} bad inputs, {} bad outputs)",
            rep.fault_frames, rep.timing_faults, rep.nonfinite_inputs, rep.nonfinite_outputs
        )));
    }
    Ok(())
}
