use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use fuzzeraid_core::baselines::run_baseline;
use fuzzeraid_core::corpus::{
    explore, label_with_patches, load_corpus, load_labels, save_corpus, save_labels, score,
    score_partition, ExploreConfig, Metrics,
};
use fuzzeraid_core::minilang::{execute, parse_executable, Program};
use fuzzeraid_core::pipeline::{load_fixtures, run_fixture, SuiteReport};
use fuzzeraid_core::siggen::{check_one_minimal, load_signatures, save_signatures};
use fuzzeraid_core::triage::{
    group_crashes, group_entries, merge_groups, read_groups, write_json, DistanceUnit,
    MissedCrash, TriageConfig,
};

use super::{
    BaselineArgs, Command, ExploreArgs, Format, GroupArgs, LabelArgs, ReportArgs, SuiteArgs,
    TriageArgs, Unit, ValidateArgs,
};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Explore(a) => cmd_explore(a),
        Command::Label(a) => cmd_label(a),
        Command::Group(a) => cmd_group(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Report(a) => cmd_report(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Suite(a) => cmd_suite(a),
    }
}

fn rng_seed(flag: u64) -> Result<u64> {
    match std::env::var("FUZZERAID_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("FUZZERAID_SEED={v:?} is not an unsigned integer")),
        Err(_) => Ok(flag),
    }
}

fn load_program(path: &Path) -> Result<Program> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_executable(&src).with_context(|| format!("parsing {}", path.display()))
}

fn triage_config(a: &TriageArgs) -> Result<TriageConfig> {
    if !(0.0..=1.0).contains(&a.threshold) {
        bail!("threshold must be within [0, 1]");
    }
    Ok(TriageConfig {
        threshold: a.threshold,
        step_budget: a.budget.step_budget,
        retries: a.retries,
        max_oracle_runs: a.max_oracle_runs,
        distance_unit: match a.distance {
            Unit::Lines => DistanceUnit::Lines,
            Unit::Chars => DistanceUnit::Chars,
        },
        ..TriageConfig::default()
    })
}

fn cmd_explore(a: ExploreArgs) -> Result<()> {
    let program = load_program(&a.program)?;
    let seed = fs::read(&a.seed_input).with_context(|| format!("reading {}", a.seed_input.display()))?;
    let cfg = ExploreConfig {
        iterations: a.iters,
        rng_seed: rng_seed(a.rng)?,
        step_budget: a.budget.step_budget,
        max_len: a.max_len,
    };
    let corpus = explore(&program, &seed, &cfg).map_err(|_| anyhow::anyhow!("seed input does not crash program"))?;
    save_corpus(&a.out, &corpus).with_context(|| format!("writing {}", a.out.display()))?;
    println!("{} crashes written to {}", corpus.len(), a.out.display());
    Ok(())
}

fn cmd_label(a: LabelArgs) -> Result<()> {
    let program = load_program(&a.program)?;
    let corpus = load_corpus(&a.corpus).with_context(|| format!("reading corpus {}", a.corpus.display()))?;
    let mut patches = BTreeMap::new();
    for spec in &a.patches {
        let Some((bug, file)) = spec.split_once('=') else {
            bail!("--patch expects BUG=FILE, got {spec:?}");
        };
        patches.insert(bug.to_string(), load_program(Path::new(file))?);
    }
    let labels = label_with_patches(&corpus, &program, &patches, a.budget.step_budget);
    save_labels(&a.out, &labels)?;
    let unknown = labels.iter().filter(|l| l.bug.is_none()).count();
    println!("{} crashes labelled, {unknown} unknown", labels.len());
    Ok(())
}

fn cmd_group(a: GroupArgs) -> Result<()> {
    let config = triage_config(&a.triage)?;
    let program = load_program(&a.program)?;
    let corpus = load_corpus(&a.corpus).with_context(|| format!("reading corpus {}", a.corpus.display()))?;
    for c in &corpus {
        if !execute(&program, &c.input, config.step_budget).is_crash() {
            bail!("corpus crash {} does not crash the program", c.id);
        }
    }
    let seeds = match &a.seed_signatures {
        Some(dir) => load_signatures(dir).with_context(|| format!("reading {}", dir.display()))?,
        None => Vec::new(),
    };
    let seeded = seeds.len();
    let grouping = group_crashes(&corpus, seeds, &program, &config);
    let groups = merge_groups(&grouping.signatures, &config);

    fs::create_dir_all(&a.out)?;
    let sig_dir = a.out.join("signatures");
    if sig_dir.exists() {
        fs::remove_dir_all(&sig_dir)?;
    }
    save_signatures(&sig_dir, &grouping.signatures)?;
    let ids: BTreeSet<String> = corpus.iter().map(|c| c.id.clone()).collect();
    write_json(&a.out.join("groups.json"), &group_entries(&groups, Some(&ids)))?;
    write_json(&a.out.join("missed.json"), &grouping.missed)?;
    println!(
        "{} crashes, {} new signatures, {} groups, {} missed",
        corpus.len(),
        grouping.signatures.len() - seeded,
        groups.len(),
        grouping.missed.len()
    );
    Ok(())
}

fn cmd_baseline(a: BaselineArgs) -> Result<()> {
    let program = load_program(&a.program)?;
    let corpus = load_corpus(&a.corpus).with_context(|| format!("reading corpus {}", a.corpus.display()))?;
    let report = run_baseline(a.mode, &corpus, &program, a.budget.step_budget);
    match &a.out {
        Some(p) => {
            write_json(p, &report)?;
            println!("{}: {} groups", report.strategy, report.group_count);
        }
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

#[derive(Serialize)]
struct Row {
    bug: String,
    crashes: usize,
    fault_sigs: usize,
    groups: usize,
    correct: usize,
    incorrect: usize,
    missed: usize,
}

fn rows(m: &Metrics) -> Vec<Row> {
    let row = |bug: &str, b: &fuzzeraid_core::corpus::BugMetrics| Row {
        bug: bug.to_string(),
        crashes: b.crashes,
        fault_sigs: b.fault_sig_count,
        groups: b.group_count,
        correct: b.correct,
        incorrect: b.incorrect,
        missed: b.missed,
    };
    let mut out: Vec<Row> = m.per_bug.iter().map(|(k, b)| row(k, b)).collect();
    out.push(row("unknown", &m.unknown));
    out.push(row("total", &m.totals));
    out
}

fn render_rows(rows: &[Row], format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(rows)? + "\n",
        Format::Csv => {
            let mut s = String::from("bug,crashes,fault_sigs,groups,correct,incorrect,missed\n");
            for r in rows {
                s += &format!(
                    "{},{},{},{},{},{},{}\n",
                    r.bug, r.crashes, r.fault_sigs, r.groups, r.correct, r.incorrect, r.missed
                );
            }
            s
        }
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let groups = read_groups(&a.groups).with_context(|| format!("reading {}", a.groups.display()))?;
    let labels = load_labels(&a.labels).with_context(|| format!("reading {}", a.labels.display()))?;
    let missed: Vec<String> = match &a.missed {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<Vec<MissedCrash>>(&text)?
                .into_iter()
                .map(|m| m.crash_id)
                .collect()
        }
        None => Vec::new(),
    };
    let metrics = match &a.signatures {
        Some(dir) => {
            let sigs = load_signatures(dir)?;
            let groups: Vec<fuzzeraid_core::triage::FaultGroup> = groups
                .into_iter()
                .map(|g| fuzzeraid_core::triage::FaultGroup {
                    id: g.group_id,
                    signatures: g.signature_ids,
                    members: g.crash_ids,
                })
                .collect();
            score(&groups, &sigs, &labels, &missed)?
        }
        None => {
            let sets: Vec<&[String]> = groups.iter().map(|g| g.crash_ids.as_slice()).collect();
            score_partition(&sets, &labels, &missed)?
        }
    };
    emit(&render_rows(&rows(&metrics), a.format)?, a.out.as_deref())
}

fn cmd_validate(a: ValidateArgs) -> Result<()> {
    let sigs = load_signatures(&a.signatures).with_context(|| format!("reading {}", a.signatures.display()))?;
    let mut bad = 0;
    for s in &sigs {
        let mut problems = Vec::new();
        let out = execute(&s.program, &s.origin_input, a.budget.step_budget);
        if out.fingerprint() != Some(&s.reference_fingerprint) {
            problems.push("origin input does not reproduce the reference failure".to_string());
        } else {
            for v in check_one_minimal(&s.program, &s.origin_input, &s.reference_fingerprint, a.budget.step_budget) {
                problems.push(format!("not 1-minimal: {v:?}"));
            }
        }
        if !s.members.contains(&s.origin_crash) {
            problems.push("origin crash is not a member".to_string());
        }
        if problems.is_empty() {
            println!("sig {}: ok", s.id);
        } else {
            bad += 1;
            for p in problems {
                println!("sig {}: {p}", s.id);
            }
        }
    }
    if bad > 0 {
        bail!("{bad} of {} signatures failed validation", sigs.len());
    }
    Ok(())
}

fn cmd_suite(a: SuiteArgs) -> Result<()> {
    let config = triage_config(&a.triage)?;
    let seed = rng_seed(a.rng)?;
    let fixtures: Vec<_> = load_fixtures(&a.fixtures)?
        .into_iter()
        .filter(|f| if a.only.is_empty() { f.suite } else { a.only.contains(&f.name) })
        .collect();
    if fixtures.is_empty() {
        bail!("no fixtures selected under {}", a.fixtures.display());
    }
    fs::create_dir_all(&a.out)?;
    let mut reports = Vec::new();
    for f in &fixtures {
        let run = run_fixture(f, seed, &config)?;
        let dir = a.out.join(&f.name);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        save_corpus(&dir.join("corpus"), &run.corpus)?;
        save_signatures(&dir.join("signatures"), &run.grouping.signatures)?;
        write_json(&dir.join("groups.json"), &group_entries(&run.groups, None))?;
        write_json(&dir.join("missed.json"), &run.grouping.missed)?;
        let labels: Vec<_> = run
            .corpus
            .iter()
            .map(|c| fuzzeraid_core::corpus::GroundTruthLabel {
                crash_id: c.id.clone(),
                bug: c.label.clone(),
            })
            .collect();
        save_labels(&dir.join("labels.json"), &labels)?;
        fs::write(dir.join("report.csv"), render_rows(&rows(&run.report.metrics), Format::Csv)?)?;
        let r = &run.report;
        println!(
            "{:<12} bugs {:>2}  crashes {:>4}  sigs {:>3}  groups {:>3}  correct {:>4}  incorrect {:>3}  missed {:>3}  | afl {:>4}  stack:1 {:>3}  stack:5 {:>3}  site {:>3}",
            r.name,
            r.bugs,
            r.crashes,
            r.signatures,
            r.groups,
            r.metrics.totals.correct,
            r.metrics.totals.incorrect,
            r.metrics.totals.missed,
            r.baselines.afl,
            r.baselines.stack1,
            r.baselines.stack5,
            r.baselines.site
        );
        reports.push(run.report);
    }
    let suite = SuiteReport::new(reports);
    let t = &suite.totals;
    println!(
        "{:<12} bugs {:>2}  crashes {:>4}  sigs {:>3}  groups {:>3}  correct {:>4}  incorrect {:>3}  missed {:>3}  | afl {:>4}  stack:1 {:>3}  stack:5 {:>3}  site {:>3}",
        "TOTAL", t.bugs, t.crashes, t.signatures, t.groups, t.correct, t.incorrect, t.missed, t.afl, t.stack1, t.stack5, t.site
    );
    match a.format {
        Format::Json => write_json(&a.out.join("report.json"), &suite)?,
        Format::Csv => {
            let mut s = String::from("fixture,bugs,crashes,signatures,groups,correct,incorrect,missed,unknown,afl,stack1,stack5,site\n");
            for f in &suite.fixtures {
                s += &format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    f.name,
                    f.bugs,
                    f.crashes,
                    f.signatures,
                    f.groups,
                    f.metrics.totals.correct,
                    f.metrics.totals.incorrect,
                    f.metrics.totals.missed,
                    f.metrics.unknown.crashes,
                    f.baselines.afl,
                    f.baselines.stack1,
                    f.baselines.stack5,
                    f.baselines.site
                );
            }
            fs::write(a.out.join("report.csv"), s)?;
        }
    }
    Ok(())
}
