//! Subcommand implementations.

use crate::config::{resolve, resolve_opt, write_manifest, FileConfig};
use crate::{
    EffortStatsArgs, EvaluateArgs, ExtractArgs, GenCorpusArgs, GradcheckArgs, HyperArgs,
    PredictArgs, RepairArgs, TrainArgs,
};
use fixloc_core::baselines::ForestConfig;
use fixloc_core::corpus::{self, MutationKind};
use fixloc_core::diff::{self, enumerate_operation_paths, PatchRecord};
use fixloc_core::eval::{self, MatchMode, Scenario};
use fixloc_core::model::{
    self, gradient_check, load_checkpoint, predict_ranked, save_checkpoint, AblationFlags,
    PredictScope, TrainConfig,
};
use fixloc_core::pipeline::{self, CvConfig, System};
use fixloc_core::repair::{
    generate_and_validate, perfect_prediction, CommandValidator, OracleValidator, RepairStatus,
    Validate,
};
use fixloc_core::{lang, HyperParams};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::error::Error;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

type CmdResult = Result<(), Box<dyn Error>>;

fn read_records(path: &Path) -> Result<Vec<PatchRecord>, Box<dyn Error>> {
    let file = File::open(path).map_err(|e| format!("cannot open {}: {}", path.display(), e))?;
    Ok(diff::read_jsonl(BufReader::new(file))?)
}

fn resolve_hyper(args: &HyperArgs, cfg: &FileConfig) -> Result<HyperParams, Box<dyn Error>> {
    let defaults = HyperParams::default();
    let ablation_raw = resolve(
        args.ablation.clone(),
        cfg,
        "ablation",
        String::new(),
    )?;
    let mut ablation = AblationFlags::default();
    for flag in ablation_raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match flag {
            "no_token_split" => ablation.no_token_split = true,
            "whole_path_embedding" => ablation.whole_path_embedding = true,
            "no_fc_layer" => ablation.no_fc_layer = true,
            other => return Err(format!("unknown ablation flag '{}'", other).into()),
        }
    }
    Ok(HyperParams {
        d_t: resolve(args.d_t, cfg, "d_t", defaults.d_t)?,
        d_p: resolve(args.d_p, cfg, "d_p", defaults.d_p)?,
        d_o: resolve(args.d_o, cfg, "d_o", defaults.d_o)?,
        d_hidden: resolve(args.d_hidden, cfg, "d_hidden", defaults.d_hidden)?,
        max_l: resolve(args.max_l, cfg, "max_l", defaults.max_l)?,
        max_k: resolve(args.max_k, cfg, "max_k", defaults.max_k)?,
        lr: resolve(args.lr, cfg, "lr", defaults.lr)?,
        epochs: resolve(args.epochs, cfg, "epochs", defaults.epochs)?,
        batch_size: resolve(args.batch_size, cfg, "batch_size", defaults.batch_size)?,
        ablation,
    })
}

fn hyper_settings(hp: &HyperParams, settings: &mut BTreeMap<String, String>) {
    settings.insert("d_t".into(), hp.d_t.to_string());
    settings.insert("d_p".into(), hp.d_p.to_string());
    settings.insert("d_o".into(), hp.d_o.to_string());
    settings.insert("d_hidden".into(), hp.d_hidden.to_string());
    settings.insert("max_l".into(), hp.max_l.to_string());
    settings.insert("max_k".into(), hp.max_k.to_string());
    settings.insert("lr".into(), hp.lr.to_string());
    settings.insert("epochs".into(), hp.epochs.to_string());
    settings.insert("batch_size".into(), hp.batch_size.to_string());
    settings.insert(
        "ablation".into(),
        format!(
            "no_token_split={},whole_path_embedding={},no_fc_layer={}",
            hp.ablation.no_token_split, hp.ablation.whole_path_embedding, hp.ablation.no_fc_layer
        ),
    );
}

pub fn extract(args: ExtractArgs, _cfg: &FileConfig) -> CmdResult {
    #[derive(Deserialize)]
    struct Pair {
        id: String,
        buggy_src: String,
        fixed_src: String,
    }
    let file = File::open(&args.input)
        .map_err(|e| format!("cannot open {}: {}", args.input.display(), e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut skipped = 0usize;
    use std::io::BufRead;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: Pair = serde_json::from_str(&line)?;
        let buggy = match lang::parse(&pair.buggy_src) {
            Ok(a) => a,
            Err(e) => {
                eprintln!("skipping {}: buggy side: {}", pair.id, e);
                skipped += 1;
                continue;
            }
        };
        let fixed = match lang::parse(&pair.fixed_src) {
            Ok(a) => a,
            Err(e) => {
                eprintln!("skipping {}: fixed side: {}", pair.id, e);
                skipped += 1;
                continue;
            }
        };
        match diff::extract_oracle(&buggy, &fixed) {
            Ok(oracle) => records.push(PatchRecord {
                id: pair.id,
                buggy_src: pair.buggy_src,
                fixed_src: pair.fixed_src,
                oracle,
            }),
            Err(e) => {
                eprintln!("skipping {}: {}", pair.id, e);
                skipped += 1;
            }
        }
    }
    let out = File::create(&args.output)?;
    diff::write_jsonl(BufWriter::new(out), &records)?;
    let mut settings = BTreeMap::new();
    settings.insert("input".into(), args.input.display().to_string());
    settings.insert("extracted".into(), records.len().to_string());
    settings.insert("skipped".into(), skipped.to_string());
    write_manifest(&args.output, "extract", &settings)?;
    println!("extracted {} records ({} skipped) -> {}", records.len(), skipped, args.output.display());
    Ok(())
}

fn parse_mix(raw: &str) -> Result<Vec<(MutationKind, f64)>, Box<dyn Error>> {
    let mut mix = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, weight) = part
            .split_once('=')
            .ok_or_else(|| format!("mix entry '{}' is not Kind=weight", part))?;
        let kind = MutationKind::ALL
            .into_iter()
            .find(|k| k.to_string() == name.trim())
            .ok_or_else(|| format!("unknown mutation kind '{}'", name))?;
        mix.push((kind, weight.trim().parse::<f64>()?));
    }
    if mix.is_empty() {
        return Err("empty mix".into());
    }
    Ok(mix)
}

pub fn gen_corpus(args: GenCorpusArgs, cfg: &FileConfig) -> CmdResult {
    let n = resolve(args.n, cfg, "n", 1000)?;
    let seed = resolve(args.seed, cfg, "seed", 42)?;
    let mix = match resolve_opt(args.mix, cfg, "mix")? {
        Some(raw) => parse_mix(&raw)?,
        None => corpus::default_mix(),
    };
    let methods: Vec<String> = match &args.seed_methods {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            text.split("\n\n")
                .map(str::trim)
                .filter(|b| !b.is_empty())
                .map(str::to_string)
                .collect()
        }
        None => {
            let count = resolve(args.synthesize, cfg, "synthesize", 200)?;
            corpus::synth_seed_methods(count, fixloc_core::rng::derive_seed(seed, "seed-methods"))
        }
    };
    let (records, manifest) = corpus::generate_corpus(&methods, n, &mix, seed)?;
    let out = File::create(&args.out)?;
    let mut writer = BufWriter::new(out);
    for record in &records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    let mut settings = BTreeMap::new();
    settings.insert("n".into(), n.to_string());
    settings.insert("seed".into(), seed.to_string());
    settings.insert("seed_methods".into(), manifest.seed_method_count.to_string());
    settings.insert("grammar_version".into(), manifest.grammar_version.to_string());
    let mix_str: Vec<String> = mix.iter().map(|(k, w)| format!("{k}={w}")).collect();
    settings.insert("mix".into(), mix_str.join(","));
    write_manifest(&args.out, "gen-corpus", &settings)?;
    println!("wrote {} mutants -> {}", records.len(), args.out.display());
    Ok(())
}

pub fn train(args: TrainArgs, cfg: &FileConfig) -> CmdResult {
    let hp = resolve_hyper(&args.hyper, cfg)?;
    let seed = resolve(args.seed, cfg, "seed", 42)?;
    let stop = resolve_opt(args.stop_at_recall1, cfg, "stop_at_recall1")?;
    let records = read_records(&args.data)?;
    let train_cfg = TrainConfig {
        seed,
        stop_at_train_recall1: stop,
    };
    let (params, vocab, stats) = model::train_with_config(&records, &hp, &train_cfg)?;
    let out = File::create(&args.out)?;
    save_checkpoint(BufWriter::new(out), &params, &hp, &vocab)?;
    if let Some(log_path) = &args.log {
        let mut log = BufWriter::new(File::create(log_path)?);
        writeln!(log, "epoch,mean_loss,train_recall1")?;
        for s in &stats {
            writeln!(log, "{},{},{}", s.epoch, s.mean_loss, s.train_recall1)?;
        }
    }
    let mut settings = BTreeMap::new();
    hyper_settings(&hp, &mut settings);
    settings.insert("seed".into(), seed.to_string());
    settings.insert("data".into(), args.data.display().to_string());
    settings.insert("records".into(), records.len().to_string());
    write_manifest(&args.out, "train", &settings)?;
    if let Some(last) = stats.last() {
        println!(
            "trained {} epochs: mean_loss {:.6}, train_recall1 {:.4} -> {}",
            stats.len(),
            last.mean_loss,
            last.train_recall1,
            args.out.display()
        );
    }
    Ok(())
}

pub fn predict(args: PredictArgs, _cfg: &FileConfig) -> CmdResult {
    let file = File::open(&args.model)
        .map_err(|e| format!("cannot open {}: {}", args.model.display(), e))?;
    let (params, hp, vocab) = load_checkpoint(BufReader::new(file))?;
    let source = std::fs::read_to_string(&args.method)?;
    let scope = match args.line {
        Some(line) => PredictScope::Line(line),
        None => PredictScope::WholeMethod,
    };
    let pred = predict_ranked(&source, &params, &vocab, &hp, scope)?;
    let ast = lang::parse(&source)?;
    for (i, entry) in pred.entries.iter().take(args.top).enumerate() {
        let (line, col) = ast.leaf_pos(entry.op.leaf_index());
        println!(
            "{} {:.6} {} {} @{}:{} {}",
            i + 1,
            entry.probability,
            entry.op.operator,
            entry.op.token,
            line,
            col,
            entry.op.path
        );
    }
    Ok(())
}

fn parse_scenario(raw: &str) -> Result<Scenario, Box<dyn Error>> {
    match raw {
        "method" => Ok(Scenario::Method),
        "line" => Ok(Scenario::Line),
        other => Err(format!("unknown scenario '{}'", other).into()),
    }
}

fn parse_match_mode(raw: &str) -> Result<MatchMode, Box<dyn Error>> {
    match raw {
        "token" => Ok(MatchMode::TokenOnly),
        "token-operator" => Ok(MatchMode::TokenAndOperator),
        other => Err(format!("unknown match mode '{}'", other).into()),
    }
}

pub fn evaluate(args: EvaluateArgs, cfg: &FileConfig) -> CmdResult {
    let mut records = read_records(&args.data)?;
    if args.dedup {
        records = eval::dedup(&records);
    }
    let scenario = parse_scenario(&resolve(args.scenario.clone(), cfg, "scenario", "method".to_string())?)?;
    let mode = parse_match_mode(&resolve(args.match_mode.clone(), cfg, "match", "token".to_string())?)?;
    let seed = resolve(args.seed, cfg, "seed", 42)?;
    let hp = resolve_hyper(&args.hyper, cfg)?;

    let mut reports: BTreeMap<String, eval::EvalReport> = BTreeMap::new();
    let mut settings = BTreeMap::new();
    if let Some(model_path) = &args.model {
        let file = File::open(model_path)
            .map_err(|e| format!("cannot open {}: {}", model_path.display(), e))?;
        let (params, model_hp, vocab) = load_checkpoint(BufReader::new(file))?;
        let report =
            pipeline::evaluate_model(&records, &params, &vocab, &model_hp, scenario, mode)?;
        reports.insert("pointer".to_string(), report);
        settings.insert("model".into(), model_path.display().to_string());
    } else {
        let folds = resolve(args.folds, cfg, "folds", 10)?;
        let systems_raw =
            resolve(args.systems.clone(), cfg, "systems", "pointer,stat,forest".to_string())?;
        let systems: Vec<System> = systems_raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| System::from_id(s).ok_or_else(|| format!("unknown system '{}'", s)))
            .collect::<Result<_, _>>()?;
        let cv = pipeline::cross_validate(
            &records,
            &CvConfig {
                folds,
                seed,
                hp: hp.clone(),
                scenario,
                match_mode: mode,
                systems,
                forest: ForestConfig::default(),
            },
        )?;
        for (system, report) in cv.reports {
            reports.insert(system.to_string(), report);
        }
        settings.insert("folds".into(), folds.to_string());
        settings.insert("systems".into(), systems_raw);
        hyper_settings(&hp, &mut settings);
    }

    println!("{}", eval::EvalReport::table_header());
    for (system, report) in &reports {
        println!("{}", report.table_row(system));
    }
    for (system, report) in &reports {
        if report.unlocalized > 0 {
            println!(
                "note: {} has {} bugs unlocalized at any rank (counted as misses, excluded from MFR)",
                system, report.unlocalized
            );
        }
    }

    settings.insert("scenario".into(), scenario.to_string());
    settings.insert(
        "match".into(),
        match mode {
            MatchMode::TokenOnly => "token".to_string(),
            MatchMode::TokenAndOperator => "token-operator".to_string(),
        },
    );
    settings.insert("seed".into(), seed.to_string());
    settings.insert("data".into(), args.data.display().to_string());
    settings.insert("records".into(), records.len().to_string());

    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(&reports)?;
        std::fs::write(out, json)?;
        write_manifest(out, "evaluate", &settings)?;
        println!("report -> {}", out.display());
    }
    Ok(())
}

pub fn repair(args: RepairArgs, cfg: &FileConfig) -> CmdResult {
    let records = read_records(&args.data)?;
    let width = resolve(args.width, cfg, "width", 20)?;
    let model = match (&args.model, args.perfect) {
        (Some(path), false) => {
            let file = File::open(path)
                .map_err(|e| format!("cannot open {}: {}", path.display(), e))?;
            Some(load_checkpoint(BufReader::new(file))?)
        }
        (None, true) => None,
        (Some(_), true) => return Err("--model and --perfect are mutually exclusive".into()),
        (None, false) => return Err("one of --model or --perfect is required".into()),
    };

    let mut outcomes = Vec::with_capacity(records.len());
    let mut plausible = 0usize;
    let mut npcs: Vec<usize> = Vec::new();
    for record in &records {
        let buggy = lang::parse(&record.buggy_src)?;
        let pred = match &model {
            Some((params, hp, vocab)) => predict_ranked(
                &record.buggy_src,
                params,
                vocab,
                hp,
                PredictScope::WholeMethod,
            )?,
            None => {
                let cands = enumerate_operation_paths(&buggy);
                perfect_prediction(&cands, &record.oracle)
            }
        };
        let mut validator: Box<dyn Validate> = match &args.command {
            Some(template) => Box::new(CommandValidator::new(template)),
            None => Box::new(OracleValidator::new(&record.fixed_src)?),
        };
        let outcome = generate_and_validate(&record.buggy_src, &pred, validator.as_mut(), width)?;
        if outcome.status == RepairStatus::Plausible {
            plausible += 1;
            npcs.push(outcome.npc);
        }
        outcomes.push((record.id.clone(), outcome));
    }

    if let Some(out) = &args.out {
        let mut writer = BufWriter::new(File::create(out)?);
        for (id, outcome) in &outcomes {
            let mut value = serde_json::to_value(outcome)?;
            value["id"] = serde_json::Value::String(id.clone());
            serde_json::to_writer(&mut writer, &value)?;
            writer.write_all(b"\n")?;
        }
        writer.flush()?;
        let mut settings = BTreeMap::new();
        settings.insert("width".into(), width.to_string());
        settings.insert("records".into(), records.len().to_string());
        settings.insert(
            "ranking".into(),
            if model.is_some() { "model".into() } else { "perfect".into() },
        );
        settings.insert(
            "validator".into(),
            args.command.clone().unwrap_or_else(|| "oracle".into()),
        );
        write_manifest(out, "repair", &settings)?;
    }

    npcs.sort_unstable();
    let median_npc = if npcs.is_empty() {
        "n/a".to_string()
    } else {
        format!("{}", npcs[npcs.len() / 2])
    };
    let only: Vec<fixloc_core::repair::RepairOutcome> =
        outcomes.iter().map(|(_, o)| o.clone()).collect();
    let cr = match fixloc_core::repair::correctness_ratio(&only) {
        Ok(Some(r)) => format!("{:.1}%", r * 100.0),
        Ok(None) => "n/a (no plausible patches)".to_string(),
        Err(_) => "n/a (unassessed)".to_string(),
    };
    println!(
        "repaired {}/{} (plausible), correctness ratio {}, median NPC {}",
        plausible,
        records.len(),
        cr,
        median_npc
    );
    Ok(())
}

pub fn gradcheck(args: GradcheckArgs, cfg: &FileConfig) -> CmdResult {
    let dims = resolve(args.dims, cfg, "dims", 4)?;
    let seed = resolve(args.seed, cfg, "seed", 7)?;
    let max_l = resolve(args.max_l, cfg, "max_l", 6)?;
    let hp = HyperParams {
        d_t: dims,
        d_p: dims,
        d_o: dims,
        d_hidden: dims,
        max_l,
        max_k: 150,
        lr: 0.001,
        epochs: 1,
        batch_size: 1,
        ablation: AblationFlags::default(),
    };
    let report = gradient_check(&hp, seed)?;
    for (name, err) in &report.per_tensor {
        println!("{:<16} {:.3e}", name, err);
    }
    println!(
        "checked {} scalars, loss {:.6}, max relative error {:.3e}",
        report.scalar_count, report.loss, report.max_rel_err
    );
    if report.max_rel_err < 1e-4 {
        println!("gradcheck: PASS");
        Ok(())
    } else {
        Err(format!("gradcheck failed: max relative error {:.3e} >= 1e-4", report.max_rel_err).into())
    }
}

pub fn effort_stats(args: EffortStatsArgs, _cfg: &FileConfig) -> CmdResult {
    let records = read_records(&args.data)?;
    let stats = eval::effort_stats(&records)?;
    let show = |label: &str, s: &eval::FiveNumber| {
        println!(
            "{:<14} min {:>6.1}  q1 {:>6.1}  median {:>6.1}  q3 {:>6.1}  max {:>6.1}",
            label, s.min, s.q1, s.median, s.q3, s.max
        );
    };
    println!("non-keyword token counts over {} records", records.len());
    show("per method", &stats.method_summary);
    show("per buggy line", &stats.line_summary);
    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&stats)?)?;
        let mut settings = BTreeMap::new();
        settings.insert("data".into(), args.data.display().to_string());
        settings.insert("records".into(), records.len().to_string());
        write_manifest(out, "effort-stats", &settings)?;
    }
    Ok(())
}
