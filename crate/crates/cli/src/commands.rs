use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use vacuity_core::forge::{
    generate_evidence_population, generate_toy_classification, PopulationParams,
};
use vacuity_core::lab::{
    audit_cardinality, run_detection, run_expansion_experiment, run_restriction_experiment,
    AuditReport, ExpansionMode, ExpansionSpec, ExpansionTable, MismatchWarning, Verdict,
};
use vacuity_core::losses::train_toy;
use vacuity_core::Group;

use crate::config::{
    self, EvidenceArg, MetricArg, ModeArg, OrientationArg, SimulateConfig, TrainToyConfig,
};
use crate::error::{CliError, Result};
use crate::records::{load_group, to_jsonl};
use crate::report::{emit_table, fixed3, load_tables, write_file, Format, TableDoc};

/// Evidential-uncertainty OOD evaluation with class-cardinality auditing.
#[derive(Debug, Parser)]
#[command(name = "vacuity", version)]
pub struct Cli {
    /// Overrides the seed in simulate / train-toy configs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Md)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Scoring {
    #[arg(long, value_enum, default_value_t = MetricArg::Vacuity)]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value_t = OrientationArg::IdPos)]
    pub orientation: OrientationArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that ID and OOD records share one class count (exit 2 if not).
    Audit { id: PathBuf, ood: PathBuf },
    /// AUROC / AUPR of one uncertainty score.
    Metrics {
        id: PathBuf,
        ood: PathBuf,
        #[command(flatten)]
        scoring: Scoring,
        /// Score even when class counts differ; writes warnings.jsonl.
        #[arg(long)]
        allow_mismatch: bool,
    },
    /// Append synthetic classes and re-score up to --k-max.
    Expand {
        id: PathBuf,
        ood: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        k_max: usize,
        /// Evidence per appended class: a number or "invariant".
        #[arg(long, default_value = "0")]
        evidence: EvidenceArg,
        #[command(flatten)]
        scoring: Scoring,
    },
    /// Drop one class from the OOD records and re-score.
    Restrict {
        id: PathBuf,
        ood: PathBuf,
        #[arg(long)]
        remove_class: usize,
        #[command(flatten)]
        scoring: Scoring,
    },
    /// Generate a synthetic population and run the expansion sweeps.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train the two-dimensional toy model.
    TrainToy {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-render every table JSON found in a results directory.
    Report { dir: PathBuf },
}

/// Runs a parsed command and returns the process exit status.
pub fn run(cli: Cli) -> Result<u8> {
    let ctx = Ctx {
        out: cli.out,
        format: cli.format,
    };
    match cli.command {
        Command::Audit { id, ood } => audit(&ctx, &id, &ood),
        Command::Metrics {
            id,
            ood,
            scoring,
            allow_mismatch,
        } => metrics(&ctx, &id, &ood, &scoring, allow_mismatch),
        Command::Expand {
            id,
            ood,
            mode,
            k_max,
            evidence,
            scoring,
        } => expand(&ctx, &id, &ood, mode, k_max, evidence, &scoring),
        Command::Restrict {
            id,
            ood,
            remove_class,
            scoring,
        } => restrict(&ctx, &id, &ood, remove_class, &scoring),
        Command::Simulate { config } => {
            let mut cfg: SimulateConfig = config
                .as_deref()
                .map(config::load)
                .transpose()?
                .unwrap_or_default();
            if let Some(seed) = cli.seed {
                cfg.population.seed = seed;
            }
            simulate(&ctx, &cfg)
        }
        Command::TrainToy { config } => {
            let mut cfg: TrainToyConfig = config
                .as_deref()
                .map(config::load)
                .transpose()?
                .unwrap_or_default();
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            train(&ctx, &cfg)
        }
        Command::Report { dir } => report(&ctx, &dir),
    }
}

struct Ctx {
    out: PathBuf,
    format: Format,
}

impl Ctx {
    fn table(&self, doc: &TableDoc) -> Result<()> {
        print!("{}", doc.markdown());
        for p in emit_table(doc, &self.out, self.format)? {
            eprintln!("wrote {}", p.display());
        }
        Ok(())
    }

    fn warnings(&self, warnings: &[MismatchWarning]) -> Result<()> {
        if warnings.is_empty() {
            return Ok(());
        }
        let mut text = String::new();
        for w in warnings {
            eprintln!("warning: {}", w.message);
            text.push_str(&serde_json::to_string(&WarningLine::from(w))?);
            text.push('\n');
        }
        let path = write_file(&self.out.join("warnings.jsonl"), &text)?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }
}

#[derive(Serialize)]
struct WarningLine<'a> {
    experiment: &'a str,
    condition: &'a str,
    k_id: String,
    k_ood: String,
    message: &'a str,
}

impl<'a> From<&'a MismatchWarning> for WarningLine<'a> {
    fn from(w: &'a MismatchWarning) -> Self {
        WarningLine {
            experiment: &w.experiment,
            condition: &w.condition,
            k_id: w.k_id.to_string(),
            k_ood: w.k_ood.to_string(),
            message: &w.message,
        }
    }
}

fn load_pair(
    id: &Path,
    ood: &Path,
) -> Result<(
    Vec<vacuity_core::EvidenceRecord>,
    Vec<vacuity_core::EvidenceRecord>,
)> {
    Ok((load_group(id, Group::Id)?, load_group(ood, Group::Ood)?))
}

#[derive(Serialize)]
struct AuditDoc {
    verdict: &'static str,
    k_id: String,
    k_ood: String,
    reference_k: usize,
    offenders: Vec<OffenderLine>,
}

#[derive(Serialize)]
struct OffenderLine {
    id: String,
    group: &'static str,
    k: usize,
}

impl From<&AuditReport> for AuditDoc {
    fn from(a: &AuditReport) -> Self {
        AuditDoc {
            verdict: if a.passed() { "PASS" } else { "FAIL" },
            k_id: a.k_id.to_string(),
            k_ood: a.k_ood.to_string(),
            reference_k: a.reference_k,
            offenders: a
                .offenders
                .iter()
                .map(|o| OffenderLine {
                    id: o.id.clone(),
                    group: o.group.as_str(),
                    k: o.k,
                })
                .collect(),
        }
    }
}

fn audit_markdown(doc: &AuditDoc) -> String {
    let mut s = format!(
        "## Cardinality audit: {}\n\nK_ID = {}, K_OOD = {}, reference K = {}\n",
        doc.verdict, doc.k_id, doc.k_ood, doc.reference_k
    );
    if !doc.offenders.is_empty() {
        s.push_str("\n| id | group | K |\n|---|---|---|\n");
        for o in &doc.offenders {
            let _ = writeln!(s, "| {} | {} | {} |", o.id, o.group, o.k);
        }
    }
    s
}

fn audit(ctx: &Ctx, id: &Path, ood: &Path) -> Result<u8> {
    let (id, ood) = load_pair(id, ood)?;
    let report = audit_cardinality(&id, &ood)?;
    let doc = AuditDoc::from(&report);
    let md = audit_markdown(&doc);
    print!("{md}");
    let body = match ctx.format {
        Format::Md => md,
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "group", "k"])?;
            for o in &doc.offenders {
                w.write_record([o.id.as_str(), o.group, &o.k.to_string()])?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?)
                .expect("utf-8")
        }
    };
    let path = write_file(
        &ctx.out.join(format!("audit.{}", ctx.format.extension())),
        &body,
    )?;
    eprintln!("wrote {}", path.display());
    Ok(if report.verdict == Verdict::Pass {
        0
    } else {
        2
    })
}

fn metrics(
    ctx: &Ctx,
    id: &Path,
    ood: &Path,
    scoring: &Scoring,
    allow_mismatch: bool,
) -> Result<u8> {
    let (id, ood) = load_pair(id, ood)?;
    let (result, warning) = run_detection(
        &id,
        &ood,
        scoring.metric.into(),
        scoring.orientation.into(),
        allow_mismatch,
    )?;
    let name = format!("metrics_{}", result.metric_name.replace(':', "_"));
    ctx.table(&TableDoc::detection(&name, &result))?;
    ctx.warnings(warning.as_slice())?;
    Ok(0)
}

fn sweep_warnings(table: &ExpansionTable) -> Vec<MismatchWarning> {
    table
        .rows
        .iter()
        .filter(|r| r.k_id != r.k_ood)
        .map(|r| MismatchWarning {
            experiment: "expand".into(),
            condition: format!("{} K_OOD={}", r.condition.label(), r.k_ood),
            k_id: r.result.k_id,
            k_ood: r.result.k_ood,
            message: format!(
                "OOD-only expansion scores K_ID={} against K_OOD={}; the change is a class-count artefact",
                r.k_id, r.k_ood
            ),
        })
        .collect()
}

fn sweep_name(table: &ExpansionTable) -> String {
    format!(
        "expand_{}_{}_{}",
        table.metric.as_str(),
        table.orientation.as_str(),
        table.mode.as_str()
    )
}

fn expand(
    ctx: &Ctx,
    id: &Path,
    ood: &Path,
    mode: ModeArg,
    k_max: usize,
    evidence: EvidenceArg,
    scoring: &Scoring,
) -> Result<u8> {
    let (id, ood) = load_pair(id, ood)?;
    let base_k = audit_cardinality(&id, &ood)?.reference_k;
    if k_max <= base_k {
        return Err(CliError::Usage(format!(
            "--k-max {k_max} must exceed the baseline K = {base_k}"
        )));
    }
    let spec = ExpansionSpec::up_to(mode.into(), base_k, k_max, evidence.into());
    let table = run_expansion_experiment(
        &id,
        &ood,
        &spec,
        scoring.metric.into(),
        scoring.orientation.into(),
    )?;
    ctx.table(&TableDoc::expansion(&sweep_name(&table), &[&table]))?;
    ctx.warnings(&sweep_warnings(&table))?;
    Ok(0)
}

fn restrict(
    ctx: &Ctx,
    id: &Path,
    ood: &Path,
    remove_class: usize,
    scoring: &Scoring,
) -> Result<u8> {
    let (id, ood) = load_pair(id, ood)?;
    let out = run_restriction_experiment(
        &ood,
        remove_class,
        &id,
        scoring.metric.into(),
        scoring.orientation.into(),
    )?;
    let name = format!("restrict_{}", out.as_is.metric_name.replace(':', "_"));
    ctx.table(&TableDoc::restriction(&name, &out))?;
    ctx.warnings(&out.warnings)?;
    Ok(0)
}

fn simulate(ctx: &Ctx, cfg: &SimulateConfig) -> Result<u8> {
    let params = PopulationParams::from(&cfg.population);
    let pop = generate_evidence_population(&params)?;
    if cfg.write_records {
        for (name, records) in [("id.jsonl", &pop.id), ("ood.jsonl", &pop.ood)] {
            let path = write_file(&ctx.out.join(name), &to_jsonl(records)?)?;
            eprintln!("wrote {}", path.display());
        }
    }
    let k_max = cfg.k_max.unwrap_or(params.k + 4);
    if k_max <= params.k {
        return Err(CliError::Usage(format!(
            "k_max {k_max} must exceed k = {}",
            params.k
        )));
    }
    let mut tables = Vec::new();
    for &mode in &cfg.modes {
        let spec = ExpansionSpec::up_to(mode.into(), params.k, k_max, cfg.evidence.into());
        tables.push(run_expansion_experiment(
            &pop.id,
            &pop.ood,
            &spec,
            cfg.metric.into(),
            cfg.orientation.into(),
        )?);
    }
    if tables.is_empty() {
        return Err(CliError::Usage(
            "modes must list at least one expansion mode".into(),
        ));
    }
    let first = &tables[0];
    let name = format!(
        "simulate_{}_{}",
        first.metric.as_str(),
        first.orientation.as_str()
    );
    let refs: Vec<&ExpansionTable> = tables.iter().collect();
    ctx.table(&TableDoc::expansion(&name, &refs))?;
    let warnings: Vec<MismatchWarning> = tables
        .iter()
        .filter(|t| t.mode == ExpansionMode::OodOnly)
        .flat_map(sweep_warnings)
        .collect();
    ctx.warnings(&warnings)?;
    Ok(0)
}

#[derive(Serialize)]
struct TrainDoc<'a> {
    config: &'a TrainToyConfig,
    steps: usize,
    train_accuracy: f64,
    mean_id_vacuity: f64,
    mean_far_vacuity: f64,
    final_mse: f64,
    final_kl: f64,
    final_ib_info: Option<f64>,
    final_total: f64,
}

fn train(ctx: &Ctx, cfg: &TrainToyConfig) -> Result<u8> {
    let data = generate_toy_classification(cfg.data.n_per_class, cfg.data.separation, cfg.seed)?;
    let model = train_toy(&cfg.trainer(), &data)?;
    let s = &model.summary;
    let doc = TrainDoc {
        config: cfg,
        steps: s.steps,
        train_accuracy: s.train_accuracy,
        mean_id_vacuity: s.mean_id_vacuity,
        mean_far_vacuity: s.mean_far_vacuity,
        final_mse: s.final_loss.mse_term,
        final_kl: s.final_loss.kl_term,
        final_ib_info: s.final_loss.ib_info_term,
        final_total: s.final_loss.total,
    };
    let mut md = String::from("## Toy training\n\n| quantity | value |\n|---|---|\n");
    for (k, v) in [
        ("steps", doc.steps.to_string()),
        ("train accuracy", fixed3(doc.train_accuracy)),
        ("mean ID vacuity", fixed3(doc.mean_id_vacuity)),
        ("mean far-probe vacuity", fixed3(doc.mean_far_vacuity)),
        ("final loss", fixed3(doc.final_total)),
    ] {
        let _ = writeln!(md, "| {k} | {v} |");
    }
    print!("{md}");
    let body = match ctx.format {
        Format::Md => md,
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "steps",
                "train_accuracy",
                "mean_id_vacuity",
                "mean_far_vacuity",
                "final_total",
            ])?;
            w.write_record([
                doc.steps.to_string(),
                crate::report::full(doc.train_accuracy),
                crate::report::full(doc.mean_id_vacuity),
                crate::report::full(doc.mean_far_vacuity),
                crate::report::full(doc.final_total),
            ])?;
            String::from_utf8(w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?)
                .expect("utf-8")
        }
    };
    let path = write_file(
        &ctx.out
            .join(format!("train_toy.{}", ctx.format.extension())),
        &body,
    )?;
    eprintln!("wrote {}", path.display());
    Ok(0)
}

fn report(ctx: &Ctx, dir: &Path) -> Result<u8> {
    let docs = load_tables(dir)?;
    if docs.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no result tables found",
            dir.display()
        )));
    }
    let mut combined = String::new();
    for doc in &docs {
        emit_table(doc, &ctx.out, ctx.format)?;
        combined.push_str(&doc.markdown());
        combined.push('\n');
    }
    print!("{combined}");
    let path = write_file(&ctx.out.join("report.md"), &combined)?;
    eprintln!("wrote {} ({} tables)", path.display(), docs.len());
    Ok(0)
}
