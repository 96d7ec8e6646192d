use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::Utc;
use cultura_core::audit::{
    collect_answers, compute_report, emit_report, AnswerArchive, AuditError, RepresentationReport,
};
use cultura_core::generation::{generate_pairs, GenerationError, GenerationPair};
use cultura_core::kb::Extractor;
use cultura_core::localization::{
    export_translation_jobs, import_community_records, import_translations, ingest_community, read_jobs,
    write_jobs, Direction, RowError,
};
use cultura_core::net::{CustomSearchClient, HttpChatModel, RateLimiter};
use cultura_core::triage::{triage_store, untriaged, PopularityCache, TriageError};
use cultura_core::validation::{
    apply_outcomes, build_tasks, collect_outcomes, AnnotatorRegistry, TaskBoard, ValidationService, VerdictLog,
};
use cultura_core::{ConceptId, CountryCode, CulturalArtifact, Prong, Source, Status, Store, UpsertOutcome};

use crate::config::{existing, PipelineConfig};
use crate::error::CliError;
use crate::manifest::Manifest;
use crate::{Cli, Command, DirectionArg};

struct Ctx {
    config: PipelineConfig,
    dry_run: bool,
    manifest: Manifest,
}

impl Ctx {
    fn store_path(&self) -> PathBuf {
        self.config.store_path()
    }

    fn load_store(&mut self) -> Result<Store, CliError> {
        let path = self.store_path();
        self.manifest.input(&path)?;
        Ok(Store::load(&path)?)
    }

    fn save_store(&mut self, store: &Store) -> Result<(), CliError> {
        if self.dry_run {
            return Ok(());
        }
        let path = self.store_path();
        store.save(&path)?;
        self.manifest.output(&path)
    }

    fn finish(self) -> Result<(), CliError> {
        if self.dry_run {
            return Ok(());
        }
        let path = self.manifest.write(&self.config.manifests_dir())?;
        log::info!("manifest {}", path.display());
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = PipelineConfig::load(cli.global.config.as_deref())?;
    if let Some(s) = cli.global.store {
        config.override_store(s);
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = command_name(&cli.command);
    let mut manifest = Manifest::new(name, args, &config.hash);
    if let Some(src) = &config.source {
        manifest.input(src)?;
    }
    let mut ctx = Ctx {
        config,
        dry_run: cli.global.dry_run,
        manifest,
    };
    match cli.command {
        Command::Extract {
            dump,
            schemas,
            workers,
            summary,
        } => extract(&mut ctx, &dump, schemas.as_deref(), workers, summary)?,
        Command::Generate { country, concept } => generate(&mut ctx, &country, &concept)?,
        Command::Triage { fraction } => triage(&mut ctx, fraction)?,
        Command::ServeValidation { bind } => return serve_validation(ctx, bind),
        Command::Aggregate => aggregate(&mut ctx)?,
        Command::IngestCommunity { file } => ingest(&mut ctx, &file)?,
        Command::TranslateExport { direction, out } => translate_export(&mut ctx, direction, &out)?,
        Command::TranslateImport { jobs } => translate_import(&mut ctx, &jobs)?,
        Command::Audit { model, score_only } => audit(&mut ctx, &model, score_only)?,
        Command::Report { inputs, out } => report(&mut ctx, &inputs, out)?,
    }
    ctx.finish()
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Extract { .. } => "extract",
        Command::Generate { .. } => "generate",
        Command::Triage { .. } => "triage",
        Command::ServeValidation { .. } => "serve-validation",
        Command::Aggregate => "aggregate",
        Command::IngestCommunity { .. } => "ingest-community",
        Command::TranslateExport { .. } => "translate-export",
        Command::TranslateImport { .. } => "translate-import",
        Command::Audit { .. } => "audit",
        Command::Report { .. } => "report",
    }
}

fn limiter(rps: Option<f64>) -> Arc<RateLimiter> {
    Arc::new(match rps {
        Some(r) if r > 0.0 => RateLimiter::per_second(r),
        _ => RateLimiter::unlimited(),
    })
}

fn warn_rows(what: &str, errors: &[RowError]) {
    for e in errors {
        log::warn!("{what} row {}: {}", e.row, e.message);
    }
}

fn extract(
    ctx: &mut Ctx,
    dump: &Path,
    schemas: Option<&Path>,
    workers: usize,
    summary: Option<PathBuf>,
) -> Result<(), CliError> {
    let (schemas, schema_path) = ctx.config.schemas(schemas)?;
    if let Some(p) = &schema_path {
        ctx.manifest.input(p)?;
    }
    let (profiles, _) = ctx.config.profiles()?;

    // the extractor reads the dump twice, so stdin is spooled to disk first
    let spooled;
    let dump_path: &Path = if dump == Path::new("-") {
        let mut tmp = tempfile::NamedTempFile::new().map_err(|e| CliError::io("<tempfile>", e))?;
        std::io::copy(&mut std::io::stdin().lock(), &mut tmp).map_err(|e| CliError::io("<stdin>", e))?;
        tmp.flush().map_err(|e| CliError::io(tmp.path(), e))?;
        spooled = tmp;
        spooled.path()
    } else {
        existing(dump.to_path_buf())?;
        ctx.manifest.input(dump)?;
        dump
    };
    let extraction = Extractor::new(&schemas, &profiles).workers(workers).extract_path(dump_path)?;
    if extraction.summary.dump.entities == 0 {
        log::warn!("dump contained no item entities");
    }

    let mut store = ctx.load_store()?;
    let (mut inserted, mut merged) = (0usize, 0usize);
    for a in extraction.artifacts {
        match store.upsert(a)? {
            UpsertOutcome::Inserted => inserted += 1,
            UpsertOutcome::Merged | UpsertOutcome::Unchanged => merged += 1,
        }
    }
    let summary_json = serde_json::to_string_pretty(&extraction.summary).expect("summary serializes");
    println!("{summary_json}");
    println!("{inserted} artifacts inserted, {merged} already present");
    ctx.manifest.count("artifacts", extraction.summary.artifacts);
    ctx.manifest.count("matches", extraction.summary.matches);
    ctx.manifest.count("inserted", inserted);
    ctx.manifest.count("workers", workers);
    ctx.save_store(&store)?;
    if !ctx.dry_run {
        let path = summary.unwrap_or_else(|| sibling(&ctx.store_path(), "extract-summary.json"));
        cultura_core::repository::write_atomic(&path, format!("{summary_json}\n").as_bytes())?;
        ctx.manifest.output(&path)?;
    }
    Ok(())
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().map(|p| p.join(name)).unwrap_or_else(|| PathBuf::from(name))
}

fn parse_countries(raw: &[String]) -> Result<Vec<CountryCode>, CliError> {
    raw.iter()
        .map(|c| CountryCode::new(c).map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

fn parse_concepts(raw: &[String]) -> Result<Vec<ConceptId>, CliError> {
    raw.iter()
        .map(|c| c.parse::<ConceptId>().map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

fn generate(ctx: &mut Ctx, countries: &[String], concepts: &[String]) -> Result<(), CliError> {
    let countries = parse_countries(countries)?;
    let concepts = parse_concepts(concepts)?;
    let section = ctx.config.generation.clone().ok_or(CliError::MissingKey("generation"))?;
    let endpoint = ctx.config.generation_endpoint()?.clone();
    section.loop_config.validate()?;
    let (profiles, _) = ctx.config.profiles()?;
    let mut store = ctx.load_store()?;
    if !store.iter().any(|a| a.source == Source::KnowledgeBase) {
        log::warn!("store holds no knowledge-base records; exclusion lists start empty (run extract first?)");
    }

    let mut jobs: Vec<(GenerationPair, Vec<String>)> = Vec::new();
    for p in profiles.with_prong(Prong::Llm) {
        if !countries.is_empty() && !countries.contains(&p.country) {
            continue;
        }
        for concept in ConceptId::ALL {
            if !concepts.is_empty() && !concepts.contains(&concept) {
                continue;
            }
            let mut kb: Vec<String> = store
                .filter(Some(&p.country), Some(concept), None)
                .into_iter()
                .filter(|a| a.source == Source::KnowledgeBase && !a.name_en.is_empty())
                .map(|a| a.name_en.clone())
                .collect();
            kb.sort();
            jobs.push((
                GenerationPair {
                    country: p.country.clone(),
                    country_name: p.name.clone(),
                    language: p.language.clone(),
                    concept,
                },
                kb,
            ));
        }
    }
    if jobs.is_empty() {
        return Err(CliError::Config("no (country, concept) pairs selected for generation".into()));
    }
    ctx.manifest.count("pairs", jobs.len());
    if ctx.dry_run {
        println!(
            "{} pairs, up to {} model calls",
            jobs.len(),
            jobs.len() * section.loop_config.max_cycles as usize
        );
        return Ok(());
    }

    let model = HttpChatModel::new(endpoint, limiter(section.requests_per_second))
        .map_err(|e| CliError::Endpoint(e.to_string()))?;
    let runs_dir = ctx.config.runs_dir();
    let results = generate_pairs(&jobs, &model, &section.loop_config, &runs_dir, section.workers)?;

    let mut first_err = None;
    let mut inserted = 0usize;
    let mut aborted = 0usize;
    for ((pair, _), result) in jobs.iter().zip(results) {
        let candidates = match result {
            Ok(run) => run.candidates,
            Err(GenerationError::Aborted { cycle, completed, source }) => {
                log::error!("{} {}: aborted at cycle {cycle}: {source}", pair.country, pair.concept);
                aborted += 1;
                let c = completed.candidates.clone();
                first_err.get_or_insert(GenerationError::Aborted { cycle, completed, source });
                c
            }
            Err(e) => {
                log::error!("{} {}: {e}", pair.country, pair.concept);
                first_err.get_or_insert(e);
                continue;
            }
        };
        for c in candidates {
            if store.upsert(c)? == UpsertOutcome::Inserted {
                inserted += 1;
            }
        }
    }
    println!("{inserted} candidates added from {} pairs ({aborted} aborted)", jobs.len());
    ctx.manifest.count("inserted", inserted);
    ctx.manifest.count("aborted", aborted);
    ctx.save_store(&store)?;
    ctx.manifest.output(&runs_dir)?;
    match first_err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn triage(ctx: &mut Ctx, fraction: Option<f64>) -> Result<(), CliError> {
    let mut config = ctx.config.triage.clone();
    if let Some(f) = fraction {
        config.fraction = f;
    }
    cultura_core::triage::selection_size(1, config.fraction).map_err(TriageError::from)?;
    let (profiles, _) = ctx.config.profiles()?;
    let mut store = ctx.load_store()?;
    if !store.iter().any(|a| a.source == Source::LlmGenerated) {
        return Err(CliError::StageOrder("store holds no llm_generated records; run generate first".into()));
    }
    let pending = untriaged(&store).len();
    ctx.manifest.count("untriaged", pending);
    if pending == 0 {
        println!("0 candidates to triage");
        return Ok(());
    }
    if ctx.dry_run {
        println!("{pending} candidates to triage");
        return Ok(());
    }
    let search = ctx.config.search_endpoint()?.clone();
    let engine = CustomSearchClient::new(search.endpoint, limiter(search.requests_per_second))
        .map_err(|e| CliError::Endpoint(e.to_string()))?;
    let cache_path = ctx.config.popularity_cache();
    let cache = Mutex::new(PopularityCache::load(&cache_path)?);
    let result = triage_store(&mut store, &profiles, &engine, &cache, &config, Utc::now());
    // the cache is kept even on pause so a rerun skips finished lookups
    cache.into_inner().expect("cache lock").save(&cache_path)?;
    ctx.manifest.output(&cache_path)?;
    let report = result?;
    println!(
        "{} lookups ({} cached, {} unavailable); {} of {pending} selected for validation",
        report.lookups,
        report.cache_hits,
        report.unavailable,
        report.selected_total()
    );
    ctx.manifest.count("lookups", report.lookups);
    ctx.manifest.count("selected", report.selected_total());
    ctx.save_store(&store)
}

/// Candidates awaiting a human verdict: generated, triaged, still pending.
fn awaiting_validation(store: &Store) -> Vec<&CulturalArtifact> {
    store
        .filter(None, None, Some(&[Status::PendingValidation]))
        .into_iter()
        .filter(|a| a.source == Source::LlmGenerated && a.popularity.is_some())
        .collect()
}

fn board(ctx: &mut Ctx, store: &Store, registry: AnnotatorRegistry) -> TaskBoard {
    let tasks = build_tasks(&awaiting_validation(store), ctx.config.validation.required_verdicts);
    TaskBoard::new(
        tasks,
        registry,
        chrono::Duration::minutes(ctx.config.validation.lease_minutes.max(1)),
    )
}

fn serve_validation(mut ctx: Ctx, bind: Option<String>) -> Result<(), CliError> {
    let store = ctx.load_store()?;
    if awaiting_validation(&store).is_empty() {
        let msg = if untriaged(&store).is_empty() {
            "no triaged candidates await validation"
        } else {
            "candidates are not triaged yet; run triage first"
        };
        return Err(CliError::StageOrder(msg.into()));
    }
    let registry_path = ctx.config.annotators()?;
    let registry = AnnotatorRegistry::load(&registry_path)?;
    let board = board(&mut ctx, &store, registry);
    println!("{} tasks", board.len());
    if ctx.dry_run {
        return Ok(());
    }
    let log = VerdictLog::new(ctx.config.verdict_log());
    let service = ValidationService::open(board, log)?;
    let addr = bind.unwrap_or_else(|| ctx.config.validation.bind.clone());
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Server(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Server(format!("bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::Server(e.to_string()))?;
        println!("listening on http://{local}");
        axum::serve(listener, service.router())
            .await
            .map_err(|e| CliError::Server(e.to_string()))
    })
}

fn aggregate(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut store = ctx.load_store()?;
    // the registry only gates submissions, which aggregation never takes
    let registry = match ctx.config.annotators() {
        Ok(p) => AnnotatorRegistry::load(&p)?,
        Err(_) => AnnotatorRegistry::default(),
    };
    let mut board = board(ctx, &store, registry);
    let log_path = ctx.config.verdict_log();
    ctx.manifest.input(&log_path)?;
    board.replay(VerdictLog::new(&log_path).read_all()?);
    let outcomes = collect_outcomes(&board)?;
    let applied = if outcomes.is_empty() { 0 } else { apply_outcomes(&mut store, &outcomes)? };
    let accepted = outcomes
        .iter()
        .filter(|o| o.decision == cultura_core::validation::Decision::Accepted)
        .count();
    println!("{applied} outcomes applied");
    log::info!("{accepted} accepted, {} rejected, {} tasks open", applied - accepted, board.len() - applied);
    ctx.manifest.count("applied", applied);
    ctx.manifest.count("accepted", accepted);
    if applied > 0 {
        ctx.save_store(&store)?;
    }
    Ok(())
}

fn ingest(ctx: &mut Ctx, file: &Path) -> Result<(), CliError> {
    let file = existing(file.to_path_buf())?;
    ctx.manifest.input(&file)?;
    let (profiles, _) = ctx.config.profiles()?;
    let reader = BufReader::new(File::open(&file).map_err(|e| CliError::io(&file, e))?);
    let import = import_community_records(reader, &profiles)?;
    warn_rows(&file.display().to_string(), &import.errors);
    let mut store = ctx.load_store()?;
    let report = ingest_community(&mut store, import.artifacts)?;
    println!(
        "{} novel, {} already known, {} rows rejected",
        report.novel,
        report.already_known,
        import.errors.len()
    );
    ctx.manifest.count("novel", report.novel);
    ctx.manifest.count("already_known", report.already_known);
    ctx.manifest.count("rejected_rows", import.errors.len());
    ctx.save_store(&store)
}

fn translate_export(ctx: &mut Ctx, direction: DirectionArg, out: &Path) -> Result<(), CliError> {
    let (profiles, _) = ctx.config.profiles()?;
    let store = ctx.load_store()?;
    let direction = match direction {
        DirectionArg::ToEnglish => Some(Direction::ToEnglish),
        DirectionArg::ToLocal => Some(Direction::ToLocal),
        DirectionArg::Both => None,
    };
    let jobs = export_translation_jobs(&store, &profiles, direction);
    let mut per: BTreeMap<&str, usize> = BTreeMap::new();
    for j in &jobs {
        *per.entry(match j.direction {
            Direction::ToEnglish => "to_english",
            Direction::ToLocal => "to_local",
        })
        .or_default() += 1;
    }
    println!("{} jobs {per:?}", jobs.len());
    ctx.manifest.count("jobs", jobs.len());
    if !ctx.dry_run {
        write_jobs(out, &jobs)?;
        ctx.manifest.output(out)?;
    }
    Ok(())
}

fn translate_import(ctx: &mut Ctx, jobs: &Path) -> Result<(), CliError> {
    let jobs = existing(jobs.to_path_buf())?;
    ctx.manifest.input(&jobs)?;
    let (parsed, parse_errors) = read_jobs(&jobs)?;
    warn_rows(&jobs.display().to_string(), &parse_errors);
    let mut store = ctx.load_store()?;
    let report = import_translations(&mut store, &parsed)?;
    warn_rows(&jobs.display().to_string(), &report.errors);
    let failed = parse_errors.len() + report.errors.len();
    println!("{} applied, {} unchanged, {failed} rows rejected", report.applied, report.unchanged);
    ctx.manifest.count("applied", report.applied);
    ctx.manifest.count("rejected_rows", failed);
    ctx.save_store(&store)
}

fn audit(ctx: &mut Ctx, tags: &[String], score_only: bool) -> Result<(), CliError> {
    let models: Vec<_> = if tags.is_empty() {
        ctx.config.audit.models.clone()
    } else {
        tags.iter()
            .map(|t| {
                ctx.config
                    .audit
                    .models
                    .iter()
                    .find(|m| &m.tag == t)
                    .cloned()
                    .ok_or_else(|| CliError::Config(format!("model {t:?} is not listed under [[audit.models]]")))
            })
            .collect::<Result<_, _>>()?
    };
    if models.is_empty() {
        return Err(CliError::MissingKey("audit.models"));
    }
    let (battery, battery_path) = ctx.config.battery()?;
    if let Some(p) = &battery_path {
        ctx.manifest.input(p)?;
    }
    let (profiles, _) = ctx.config.profiles()?;
    let store = ctx.load_store()?;
    if store.is_empty() {
        return Err(CliError::StageOrder("store is empty; build the repository before auditing".into()));
    }
    let samples = ctx.config.audit.samples_per_prompt;
    let archive = AnswerArchive::new(ctx.config.answers_dir());
    let reports_dir = ctx.config.reports_dir();
    let mut reports = Vec::new();
    for m in &models {
        cultura_core::audit::check_model_tag(&m.tag)?;
        if ctx.dry_run {
            println!("{}: {} prompts x {samples} samples", m.tag, battery.len());
            continue;
        }
        if !score_only {
            let model = HttpChatModel::new(m.endpoint.clone(), limiter(ctx.config.audit.requests_per_second))
                .map_err(|e| CliError::Endpoint(e.to_string()))?;
            let c = collect_answers(&battery, &model, &m.tag, samples, &archive, ctx.config.audit.workers)?;
            println!("{}: {} answers ({} already archived)", m.tag, c.total, c.already_present);
        }
        let answers = archive.load_all(&battery, &m.tag, samples)?;
        let report = compute_report(&m.tag, samples, &answers, &store, &profiles)?;
        for (country, concept) in report.coverage_gaps() {
            log::warn!("{}: no usable artifacts for {country} {concept}", m.tag);
        }
        let path = reports_dir.join(format!("{}.report.json", m.tag));
        report.save(&path)?;
        ctx.manifest.output(&path)?;
        reports.push(report);
    }
    if !reports.is_empty() {
        ctx.manifest.output(archive.root())?;
        for p in emit_report(&reports, &profiles, &reports_dir)? {
            ctx.manifest.output(&p)?;
        }
        ctx.manifest.count("models", reports.len());
    }
    Ok(())
}

fn report(ctx: &mut Ctx, inputs: &[PathBuf], out: Option<PathBuf>) -> Result<(), CliError> {
    let (profiles, _) = ctx.config.profiles()?;
    let mut reports: Vec<RepresentationReport> = Vec::new();
    for p in inputs {
        let p = existing(p.clone())?;
        ctx.manifest.input(&p)?;
        let r = RepresentationReport::load(&p)?;
        if reports.iter().any(|o| o.model_tag == r.model_tag) {
            return Err(AuditError::Report(format!("model {} appears twice", r.model_tag)).into());
        }
        reports.push(r);
    }
    let out = out.unwrap_or_else(|| ctx.config.reports_dir());
    if ctx.dry_run {
        println!("{} reports", reports.len());
        return Ok(());
    }
    let written = emit_report(&reports, &profiles, &out)?;
    for p in &written {
        println!("{}", p.display());
        ctx.manifest.output(p)?;
    }
    ctx.manifest.count("reports", reports.len());
    Ok(())
}
