//! Command implementations. Every artifact lands under `--out`:
//!
//! ```text
//! out/
//!   model.json              endpoint-model document
//!   odg.json                operation dependency graph
//!   scopes.json             per-endpoint reachability scopes
//!   universe.json           coverage universe of the provider
//!   endpoint_run.jsonl      endpoint pipeline run log
//!   scenario_run.jsonl      scenario pipeline run log
//!   scenarios.json          scenario document (raw text + blocks)
//!   exchanges_*.jsonl       prompt/response logs per stage
//!   patterns.tsv            fault pattern library
//!   tests/...               emitted test files (package layout)
//!   report.json, report.txt consolidated report
//! ```

use crate::{CommonArgs, Mode};
use std::collections::BTreeMap;
use std::error::Error;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use testweaver_core::coverage::{build_scopes, CoverageProvider, HttpCoverageProvider, Universe};
use testweaver_core::endpoint_gen::{
    emit_endpoint_tests, run_endpoint_pipeline, AgentConfig, PipelineConfig,
};
use testweaver_core::faults::FaultDetector;
use testweaver_core::gateway::{
    Gateway, LiveConfig, LiveProvider, PriceTable, RecordingFile, StubScript, TemplateCatalog,
};
use testweaver_core::harness::{Executor, HttpTransport, InProcessTransport};
use testweaver_core::ingest::{analyze_application, load_source_dir, AnalyzeOptions, SourceUnit};
use testweaver_core::model::EndpointModelDocument;
use testweaver_core::odg::{build_graph, OdgDocument};
use testweaver_core::report::{consolidate, load_exchanges, ReportError, ReportInputs};
use testweaver_core::runlog::{RunLog, RunRecord};
use testweaver_core::scenario_gen::{
    run_scenario_pipeline, BlockStatus, ScenarioAgentConfig, ScenarioDocument,
    ScenarioPipelineConfig,
};
use testweaver_core::toyservice::{serve, ToyService};

pub enum Outcome {
    Success,
    Partial(String),
}

type CmdResult = Result<Outcome, Box<dyn Error>>;

fn core_dir() -> PathBuf {
    // Bundled data ships with the core crate sources.
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core")
}

pub fn template_dir() -> PathBuf {
    core_dir().join("templates")
}

fn validate_args(args: &CommonArgs, need_input: bool) -> Result<(), Box<dyn Error>> {
    if !(0.0..=2.0).contains(&args.temperature) {
        return Err(format!("temperature {} outside [0, 2]", args.temperature).into());
    }
    if args.source.is_some() && args.descriptor.is_some() {
        return Err("exactly one of --source/--descriptor may be given".into());
    }
    if need_input && args.source.is_none() && args.descriptor.is_none() {
        return Err("one of --source/--descriptor is required".into());
    }
    Ok(())
}

fn build_gateway(args: &CommonArgs) -> Result<Gateway, Box<dyn Error>> {
    let catalog = TemplateCatalog::bundled()?;
    let gateway = match args.mode {
        Mode::Stub => {
            let script_path = args
                .stub_script
                .clone()
                .unwrap_or_else(|| core_dir().join("fixtures/stub/pipeline.json"));
            Gateway::stub(catalog, StubScript::load(&script_path)?)
        }
        Mode::Replay => {
            let path = args
                .recording
                .as_ref()
                .ok_or("replay mode requires --recording")?;
            Gateway::replay(catalog, RecordingFile::load(path)?)
        }
        Mode::Live => {
            let config = LiveConfig::from_env()
                .ok_or("live mode requires TESTWEAVER_PROVIDER_URL (and TESTWEAVER_API_KEY)")?;
            Gateway::live(catalog, LiveProvider::new(config)?, args.record.clone())
        }
    };
    Ok(gateway.with_temperature(args.temperature))
}

struct ServiceWiring {
    executor: Executor,
    provider: Box<dyn CoverageProvider>,
}

fn wire_service(args: &CommonArgs) -> Result<ServiceWiring, Box<dyn Error>> {
    let timeout = std::time::Duration::from_secs(args.timeout);
    if args.base_url == "toy:" {
        let toy = Arc::new(ToyService::bundled()?);
        let provider = toy.coverage();
        let executor =
            Executor::new(Box::new(InProcessTransport::new(toy))).with_timeout(timeout);
        Ok(ServiceWiring {
            executor,
            provider: Box::new(ArcProvider(provider)),
        })
    } else {
        let transport = HttpTransport::new(&args.base_url, timeout)
            .map_err(|e| format!("base url {}: {}", args.base_url, e.0))?;
        let executor = Executor::new(Box::new(transport)).with_timeout(timeout);
        let coverage_url = args
            .coverage_url
            .clone()
            .unwrap_or_else(|| format!("{}/__coverage", args.base_url.trim_end_matches('/')));
        let provider = HttpCoverageProvider::new(&coverage_url)?;
        Ok(ServiceWiring {
            executor,
            provider: Box::new(provider),
        })
    }
}

// Arc<ToyCoverage> is itself a provider; adapt it to the boxed trait.
struct ArcProvider(Arc<testweaver_core::toyservice::ToyCoverage>);

impl CoverageProvider for ArcProvider {
    fn snapshot(
        &self,
    ) -> Result<testweaver_core::coverage::CoverageSnapshot, testweaver_core::coverage::CoverageError>
    {
        self.0.snapshot()
    }
    fn universe(&self) -> Universe {
        self.0.universe()
    }
}

fn load_units(args: &CommonArgs) -> Result<Vec<SourceUnit>, Box<dyn Error>> {
    match &args.source {
        Some(dir) => Ok(load_source_dir(dir)?),
        None => Ok(Vec::new()),
    }
}

/// Build (or load) the endpoint model. The descriptor path bypasses parsing
/// entirely.
fn ensure_model(
    args: &CommonArgs,
    gateway: &Gateway,
    units: &[SourceUnit],
) -> Result<EndpointModelDocument, Box<dyn Error>> {
    let model_path = args.out.join("model.json");
    if let Some(descriptor) = &args.descriptor {
        let doc = EndpointModelDocument::load(descriptor)?;
        doc.save(&model_path)?;
        return Ok(doc);
    }
    if args.source.is_some() {
        let opts = AnalyzeOptions {
            application: args.app.clone(),
            call_depth: testweaver_core::ingest::DEFAULT_CALL_DEPTH,
        };
        let doc = analyze_application(units, gateway, &opts)?;
        doc.save(&model_path)?;
        return Ok(doc);
    }
    if model_path.exists() {
        return Ok(EndpointModelDocument::load(&model_path)?);
    }
    Err("no --source/--descriptor given and no model.json in --out".into())
}

fn ensure_graph(
    args: &CommonArgs,
    gateway: &Gateway,
    model: &EndpointModelDocument,
) -> Result<OdgDocument, Box<dyn Error>> {
    let odg_path = args.out.join("odg.json");
    if args.source.is_none() && args.descriptor.is_none() && odg_path.exists() {
        return Ok(OdgDocument::load(&odg_path)?);
    }
    let (graph, diagnostics) = build_graph(&model.endpoints, gateway)?;
    let mut doc = OdgDocument::new(model.application.clone(), graph);
    doc.diagnostics = diagnostics;
    doc.save(&odg_path)?;
    Ok(doc)
}

pub fn analyze(args: &CommonArgs) -> CmdResult {
    validate_args(args, true)?;
    std::fs::create_dir_all(&args.out)?;
    let gateway = build_gateway(args)?;
    let units = load_units(args)?;
    let model = ensure_model(args, &gateway, &units)?;
    gateway.save_exchange_log(&args.out.join("exchanges_analyze.jsonl"))?;

    let mut per_class: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &model.endpoints {
        *per_class.entry(e.class_name.as_str()).or_insert(0) += 1;
    }
    println!("endpoints: {}", model.endpoints.len());
    for (class, n) in &per_class {
        println!("  {class}: {n}");
    }
    for e in &model.endpoints {
        println!("  {}", e.label());
    }
    if model.endpoints.is_empty() {
        return Ok(Outcome::Partial("no endpoints discovered".into()));
    }
    Ok(Outcome::Success)
}

pub fn build_odg(args: &CommonArgs) -> CmdResult {
    validate_args(args, false)?;
    std::fs::create_dir_all(&args.out)?;
    let gateway = build_gateway(args)?;
    let units = load_units(args)?;
    let model = ensure_model(args, &gateway, &units)?;
    let doc = ensure_graph(args, &gateway, &model)?;
    gateway.save_exchange_log(&args.out.join("exchanges_odg.jsonl"))?;
    println!(
        "nodes: {}  edges: {}",
        doc.graph.nodes.len(),
        doc.graph.edges.len()
    );
    Ok(Outcome::Success)
}

fn persist_scopes_and_universe(
    out: &Path,
    model: &EndpointModelDocument,
    units: &[SourceUnit],
    provider: &dyn CoverageProvider,
) -> Result<Vec<testweaver_core::coverage::ReachabilityScope>, Box<dyn Error>> {
    let scopes = if units.is_empty() {
        Vec::new()
    } else {
        build_scopes(&model.endpoints, units)?
    };
    std::fs::write(
        out.join("scopes.json"),
        serde_json::to_string_pretty(&scopes)? + "\n",
    )?;
    std::fs::write(
        out.join("universe.json"),
        serde_json::to_string_pretty(&provider.universe())? + "\n",
    )?;
    Ok(scopes)
}

fn partial_reason(log: &RunLog, scenario_doc: Option<&ScenarioDocument>) -> Option<String> {
    for record in &log.records {
        if let RunRecord::Note { text } = record {
            if text.contains("failed:") {
                return Some(text.clone());
            }
        }
    }
    if let Some(doc) = scenario_doc {
        for outcome in &doc.scenarios {
            if outcome.blocks.iter().any(|b| b.status == BlockStatus::Failed) {
                return Some(format!(
                    "scenario '{}' has failed blocks",
                    outcome.scenario.name
                ));
            }
        }
    }
    None
}

pub fn gen_endpoint_tests(args: &CommonArgs) -> CmdResult {
    validate_args(args, false)?;
    std::fs::create_dir_all(&args.out)?;
    let gateway = build_gateway(args)?;
    let units = load_units(args)?;
    let model = ensure_model(args, &gateway, &units)?;
    let odg = ensure_graph(args, &gateway, &model)?;
    let wiring = wire_service(args)?;
    let scopes_vec = persist_scopes_and_universe(&args.out, &model, &units, &*wiring.provider)?;
    let scopes: BTreeMap<_, _> = scopes_vec
        .iter()
        .map(|s| (s.endpoint_id.clone(), s.clone()))
        .collect();

    let config = PipelineConfig {
        application: model.application.clone(),
        agent: AgentConfig {
            max_iterations: args.max_iter,
        },
    };
    let output = run_endpoint_pipeline(
        &odg.graph,
        &scopes,
        &gateway,
        &wiring.executor,
        &*wiring.provider,
        &units,
        &config,
    )?;
    output.log.save(&args.out.join("endpoint_run.jsonl"))?;
    output.faults.save_library(&args.out.join("patterns.tsv"))?;
    gateway.save_exchange_log(&args.out.join("exchanges_endpoint.jsonl"))?;

    let written = emit_endpoint_tests(
        &output.log,
        &model.endpoints,
        &template_dir(),
        &args.out.join("tests"),
    )?;
    println!(
        "executed {} requests; emitted {} test files",
        output
            .log
            .records
            .iter()
            .filter(|r| matches!(r, RunRecord::RequestExecuted { .. }))
            .count(),
        written.len()
    );
    for path in &written {
        println!("  {}", path.display());
    }
    match partial_reason(&output.log, None) {
        Some(reason) => Ok(Outcome::Partial(reason)),
        None => Ok(Outcome::Success),
    }
}

pub fn gen_scenario_tests(args: &CommonArgs) -> CmdResult {
    validate_args(args, false)?;
    std::fs::create_dir_all(&args.out)?;
    let gateway = build_gateway(args)?;
    let units = load_units(args)?;
    let model = ensure_model(args, &gateway, &units)?;
    let odg = ensure_graph(args, &gateway, &model)?;
    let wiring = wire_service(args)?;
    persist_scopes_and_universe(&args.out, &model, &units, &*wiring.provider)?;

    let config = ScenarioPipelineConfig {
        application: model.application.clone(),
        scenario_target: args.scenarios,
        agent: ScenarioAgentConfig {
            max_iterations_per_block: args.max_iter.min(4),
            ..ScenarioAgentConfig::default()
        },
    };
    let output = run_scenario_pipeline(
        &odg.graph,
        &gateway,
        &wiring.executor,
        &*wiring.provider,
        &units,
        &template_dir(),
        &args.out.join("tests"),
        &config,
    )?;
    output.log.save(&args.out.join("scenario_run.jsonl"))?;
    output.document.save(&args.out.join("scenarios.json"))?;
    output.faults.save_library(&args.out.join("patterns.tsv"))?;
    gateway.save_exchange_log(&args.out.join("exchanges_scenario.jsonl"))?;

    println!(
        "scenarios: {}; emitted {} test files",
        output.document.scenarios.len(),
        output.emitted.len()
    );
    for path in &output.emitted {
        println!("  {}", path.display());
    }
    match partial_reason(&output.log, Some(&output.document)) {
        Some(reason) => Ok(Outcome::Partial(reason)),
        None => Ok(Outcome::Success),
    }
}

pub fn report(out: &Path) -> CmdResult {
    let model_path = out.join("model.json");
    if !model_path.exists() {
        return Err(Box::new(ReportError::MissingLog(format!(
            "{} not found",
            model_path.display()
        ))));
    }
    let model = EndpointModelDocument::load(&model_path)?;

    let endpoint_log = out.join("endpoint_run.jsonl");
    let scenario_log = out.join("scenario_run.jsonl");
    let mut log = RunLog::new();
    let mut found = false;
    for path in [&endpoint_log, &scenario_log] {
        if path.exists() {
            let part = RunLog::load(path)?;
            log.records.extend(part.records);
            found = true;
        }
    }
    if !found {
        return Err(Box::new(ReportError::MissingLog(format!(
            "no run log in {}",
            out.display()
        ))));
    }

    let scenario_doc_path = out.join("scenarios.json");
    let scenario_doc = scenario_doc_path
        .exists()
        .then(|| ScenarioDocument::load(&scenario_doc_path))
        .transpose()?;

    let mut exchanges = Vec::new();
    for name in [
        "exchanges_analyze.jsonl",
        "exchanges_odg.jsonl",
        "exchanges_endpoint.jsonl",
        "exchanges_scenario.jsonl",
    ] {
        exchanges.extend(load_exchanges(&out.join(name))?);
    }

    let scopes = {
        let path = out.join("scopes.json");
        if path.exists() {
            serde_json::from_str(&std::fs::read_to_string(&path)?)?
        } else {
            Vec::new()
        }
    };
    let universe: Universe = {
        let path = out.join("universe.json");
        if path.exists() {
            serde_json::from_str(&std::fs::read_to_string(&path)?)?
        } else {
            Universe::default()
        }
    };
    let fault_detector = FaultDetector::new();

    let inputs = ReportInputs {
        model,
        log,
        scenario_doc,
        exchanges,
        scopes,
        universe,
        fault_detector,
    };
    let report = consolidate(&inputs, &PriceTable::default());
    std::fs::write(out.join("report.json"), report.to_json() + "\n")?;
    std::fs::write(out.join("report.txt"), report.to_table())?;
    print!("{}", report.to_table());
    Ok(Outcome::Success)
}

pub fn serve_toy(addr: &str) -> CmdResult {
    let service = Arc::new(ToyService::bundled()?);
    let bound = serve(service, addr)?;
    println!("toy service listening on http://{bound} (coverage at /__coverage)");
    loop {
        std::thread::sleep(std::time::Duration::from_secs(3600));
    }
}
