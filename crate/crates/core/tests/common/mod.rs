//! Shared fixture plumbing for the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use testweaver_core::coverage::{build_scopes, ReachabilityScope};
use testweaver_core::endpoint_gen::{run_endpoint_pipeline, EndpointRunOutput, PipelineConfig};
use testweaver_core::gateway::{Gateway, StubScript, TemplateCatalog};
use testweaver_core::harness::{Executor, InProcessTransport};
use testweaver_core::ingest::{analyze_application, load_source_dir, AnalyzeOptions, SourceUnit};
use testweaver_core::model::{EndpointId, EndpointModelDocument};
use testweaver_core::odg::{build_graph, OperationDependencyGraph};
use testweaver_core::toyservice::{ToyCoverage, ToyService};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn template_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("templates")
}

pub fn manifest() -> serde_json::Value {
    let text = std::fs::read_to_string(fixture_dir().join("clinic_manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn clinic_units() -> Vec<SourceUnit> {
    load_source_dir(&fixture_dir().join("clinic_app")).unwrap()
}

pub fn servlet_units() -> Vec<SourceUnit> {
    load_source_dir(&fixture_dir().join("servlet_app")).unwrap()
}

pub fn stub_gateway(script_name: &str) -> Gateway {
    let catalog = TemplateCatalog::bundled().unwrap();
    let script = StubScript::load(&fixture_dir().join("stub").join(script_name)).unwrap();
    Gateway::stub(catalog, script)
}

pub fn analyzed_model(gateway: &Gateway) -> EndpointModelDocument {
    let units = clinic_units();
    let opts = AnalyzeOptions {
        application: "clinic".to_string(),
        ..AnalyzeOptions::default()
    };
    analyze_application(&units, gateway, &opts).unwrap()
}

pub struct PipelineFixture {
    pub model: EndpointModelDocument,
    pub graph: OperationDependencyGraph,
    pub scopes: BTreeMap<EndpointId, ReachabilityScope>,
    pub units: Vec<SourceUnit>,
    pub service: Arc<ToyService>,
    pub provider: Arc<ToyCoverage>,
    pub executor: Executor,
    pub gateway: Gateway,
}

impl PipelineFixture {
    pub fn new() -> Self {
        let gateway = stub_gateway("pipeline.json");
        let model = analyzed_model(&gateway);
        let (graph, _) = build_graph(&model.endpoints, &gateway).unwrap();
        let units = clinic_units();
        let scopes: BTreeMap<EndpointId, ReachabilityScope> = build_scopes(&model.endpoints, &units)
            .unwrap()
            .into_iter()
            .map(|s| (s.endpoint_id.clone(), s))
            .collect();
        let service = Arc::new(ToyService::bundled().unwrap());
        let provider = service.coverage();
        let executor = Executor::new(Box::new(InProcessTransport::new(Arc::clone(&service) as _)));
        Self {
            model,
            graph,
            scopes,
            units,
            service,
            provider,
            executor,
            gateway,
        }
    }

    pub fn run_endpoint_pipeline(&self) -> EndpointRunOutput {
        run_endpoint_pipeline(
            &self.graph,
            &self.scopes,
            &self.gateway,
            &self.executor,
            &*self.provider,
            &self.units,
            &PipelineConfig {
                application: "clinic".to_string(),
                ..PipelineConfig::default()
            },
        )
        .unwrap()
    }

    pub fn endpoint_by_label(&self, label: &str) -> &testweaver_core::model::Endpoint {
        self.model
            .endpoints
            .iter()
            .find(|e| e.label() == label)
            .unwrap_or_else(|| panic!("no endpoint labelled {label}"))
    }
}
