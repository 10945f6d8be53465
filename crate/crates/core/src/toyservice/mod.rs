//! The bundled toy service: a deterministic in-process pet-clinic-style
//! application (owners, pets, visits) used as the hermetic test target.
//!
//! Behavior, validations, and the coverage line map are defined by a fixture
//! spec (`fixtures/toy_service.json`). Coverage is a pure function of the
//! executed (route, input-class) multiset: each handled request records the
//! lines and branches its input class executes according to the line map, so
//! repeated runs reproduce coverage exactly.

mod serve;

pub use serve::serve;

use crate::coverage::{BranchKey, CoverageError, CoverageProvider, CoverageSnapshot, LineKey, Universe};
use crate::harness::{HttpRequestSpec, RawResponse, ServiceHandler};
use crate::model::HttpMethod;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ClassCoverage {
    pub lines: Vec<LineKey>,
    pub branches: Vec<BranchKey>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct UniverseSpec {
    pub lines: Vec<LineKey>,
    pub branches: Vec<BranchKey>,
}

/// The fixture spec defining the toy service.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToySpec {
    pub schema: String,
    pub application: String,
    /// The service's fixed notion of "today" (dates are compared as strings).
    pub today: String,
    pub universe: UniverseSpec,
    /// route label -> input class -> covered lines/branches.
    pub line_map: BTreeMap<String, BTreeMap<String, ClassCoverage>>,
}

impl ToySpec {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Load the spec bundled with this crate.
    pub fn bundled() -> std::io::Result<Self> {
        Self::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy_service.json"))
    }

    pub fn universe(&self) -> Universe {
        Universe {
            lines: self.universe.lines.iter().cloned().collect(),
            branches: self.universe.branches.iter().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone)]
struct ToyOwner {
    name: String,
    telephone: String,
}

#[derive(Debug, Clone)]
struct ToyPet {
    owner_id: i64,
    name: String,
    pet_type: String,
}

#[derive(Debug, Clone)]
struct ToyVisit {
    pet_id: i64,
    date: String,
    description: String,
}

struct ToyState {
    owners: BTreeMap<i64, ToyOwner>,
    pets: BTreeMap<i64, ToyPet>,
    visits: BTreeMap<i64, ToyVisit>,
    next_owner: i64,
    next_pet: i64,
    next_visit: i64,
    fault_seq: u64,
}

impl ToyState {
    fn seeded() -> Self {
        let mut owners = BTreeMap::new();
        owners.insert(
            1,
            ToyOwner {
                name: "George".to_string(),
                telephone: "6085551023".to_string(),
            },
        );
        let mut pets = BTreeMap::new();
        pets.insert(
            1,
            ToyPet {
                owner_id: 1,
                name: "Leo".to_string(),
                pet_type: "cat".to_string(),
            },
        );
        Self {
            owners,
            pets,
            visits: BTreeMap::new(),
            next_owner: 2,
            next_pet: 2,
            next_visit: 1,
            fault_seq: 0,
        }
    }
}

struct CoverageInner {
    lines: BTreeSet<LineKey>,
    branches: BTreeSet<BranchKey>,
    tick: u64,
}

/// Accumulated simulated coverage; shared between the service and its
/// provider handle.
pub struct ToyCoverage {
    inner: Mutex<CoverageInner>,
    universe: Universe,
}

impl ToyCoverage {
    fn record(&self, coverage: &ClassCoverage) {
        let mut inner = self.inner.lock().expect("toy coverage lock");
        inner.lines.extend(coverage.lines.iter().cloned());
        inner.branches.extend(coverage.branches.iter().cloned());
    }
}

impl CoverageProvider for ToyCoverage {
    fn snapshot(&self) -> Result<CoverageSnapshot, CoverageError> {
        let mut inner = self.inner.lock().expect("toy coverage lock");
        inner.tick += 1;
        Ok(CoverageSnapshot {
            covered_lines: inner.lines.clone(),
            covered_branches: inner.branches.clone(),
            taken_at: inner.tick,
        })
    }

    fn universe(&self) -> Universe {
        self.universe.clone()
    }
}

/// The deterministic in-process service.
pub struct ToyService {
    spec: ToySpec,
    state: Mutex<ToyState>,
    coverage: Arc<ToyCoverage>,
}

impl ToyService {
    pub fn new(spec: ToySpec) -> Self {
        let universe = spec.universe();
        Self {
            spec,
            state: Mutex::new(ToyState::seeded()),
            coverage: Arc::new(ToyCoverage {
                inner: Mutex::new(CoverageInner {
                    lines: BTreeSet::new(),
                    branches: BTreeSet::new(),
                    tick: 0,
                }),
                universe,
            }),
        }
    }

    pub fn bundled() -> std::io::Result<Self> {
        Ok(Self::new(ToySpec::bundled()?))
    }

    /// Handle to the simulated coverage provider.
    pub fn coverage(&self) -> Arc<ToyCoverage> {
        Arc::clone(&self.coverage)
    }

    /// Reset state and coverage to the seeded baseline.
    pub fn reset(&self) {
        *self.state.lock().expect("toy state lock") = ToyState::seeded();
        let mut inner = self.coverage.inner.lock().expect("toy coverage lock");
        inner.lines.clear();
        inner.branches.clear();
        inner.tick = 0;
    }

    /// Current coverage as the JSON document served on `/__coverage`.
    pub fn coverage_json(&self) -> serde_json::Value {
        let inner = self.coverage.inner.lock().expect("toy coverage lock");
        json!({
            "lines": inner.lines.iter().collect::<Vec<_>>(),
            "branches": inner.branches.iter().collect::<Vec<_>>(),
            "tick": inner.tick,
            "universe": {
                "lines": self.coverage.universe.lines.iter().collect::<Vec<_>>(),
                "branches": self.coverage.universe.branches.iter().collect::<Vec<_>>(),
            },
        })
    }

    fn respond(&self, label: &str, class: &str, status: u16, body: serde_json::Value) -> RawResponse {
        if let Some(coverage) = self
            .spec
            .line_map
            .get(label)
            .and_then(|classes| classes.get(class))
        {
            self.coverage.record(coverage);
        } else {
            debug_assert!(
                label == "unknown",
                "line map has no entry for ({label}, {class})"
            );
        }
        let body_text = match body {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        };
        RawResponse {
            status,
            headers: vec![("content-type".to_string(), "application/json".to_string())],
            body: body_text,
            latency_ms: 0.0,
        }
    }
}

/// All request parameters: query pairs plus a parsed form or JSON body.
fn params_of(request: &HttpRequestSpec) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, String> = request.query.iter().cloned().collect();
    if let Some(body) = &request.body {
        if body.content_type.contains("json") {
            if let Ok(serde_json::Value::Object(map)) = serde_json::from_str(&body.content) {
                for (k, v) in map {
                    if let Some(s) = v.as_str() {
                        out.entry(k).or_insert_with(|| s.to_string());
                    }
                }
            }
        } else {
            for pair in body.content.split('&') {
                if let Some((k, v)) = pair.split_once('=') {
                    out.entry(percent_decode(k)).or_insert_with(|| percent_decode(v));
                }
            }
        }
    }
    out
}

fn percent_decode(input: &str) -> String {
    let bytes = input.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if let (Some(h), Some(l)) = (
                bytes.get(i + 1).and_then(|b| (*b as char).to_digit(16)),
                bytes.get(i + 2).and_then(|b| (*b as char).to_digit(16)),
            ) {
                out.push((h * 16 + l) as u8);
                i += 3;
                continue;
            }
        }
        out.push(if bytes[i] == b'+' { b' ' } else { bytes[i] });
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

enum Segment {
    Int(i64),
    BadInt,
}

fn parse_id(segment: &str) -> Segment {
    match segment.parse::<i64>() {
        Ok(v) => Segment::Int(v),
        Err(_) => Segment::BadInt,
    }
}

impl ServiceHandler for ToyService {
    fn handle(&self, request: &HttpRequestSpec) -> RawResponse {
        let segments: Vec<&str> = request
            .resolved_path
            .split('/')
            .filter(|s| !s.is_empty())
            .collect();
        let params = params_of(request);
        let method = request.method;

        match (method, segments.as_slice()) {
            (HttpMethod::Get, ["ping"]) => {
                self.respond("GET /ping", "ok", 200, json!("pong"))
            }
            (HttpMethod::Get, ["vets"]) => self.respond(
                "GET /vets",
                "ok",
                200,
                json!({"vets": [{"vetId": 1, "name": "Helen"}, {"vetId": 2, "name": "Rafael"}]}),
            ),
            (HttpMethod::Get, ["owners"]) => {
                let state = self.state.lock().expect("toy state lock");
                let owners: Vec<_> = state
                    .owners
                    .iter()
                    .map(|(id, o)| json!({"ownerId": id, "name": o.name}))
                    .collect();
                drop(state);
                self.respond("GET /owners", "ok", 200, json!({ "owners": owners }))
            }
            (HttpMethod::Post, ["owners", "new"]) => self.create_owner(&params),
            (HttpMethod::Get, ["owners", owner_id]) => self.show_owner(owner_id),
            (HttpMethod::Post, ["owners", owner_id, "pets", "new"]) => {
                self.create_pet(owner_id, &params)
            }
            (HttpMethod::Get, ["owners", owner_id, "pets", pet_id]) => {
                self.show_pet(owner_id, pet_id)
            }
            (HttpMethod::Post, ["owners", owner_id, "pets", pet_id, "visits", "new"]) => {
                self.create_visit(owner_id, pet_id, &params)
            }
            (HttpMethod::Get, ["owners", owner_id, "pets", pet_id, "visits"]) => {
                self.list_visits(owner_id, pet_id)
            }
            _ => self.respond(
                "unknown",
                "unknown",
                404,
                json!({"error": format!("no route for {} {}", method, request.resolved_path)}),
            ),
        }
    }
}

impl ToyService {
    fn create_owner(&self, params: &BTreeMap<String, String>) -> RawResponse {
        const LABEL: &str = "POST /owners/new";
        for required in ["name", "telephone"] {
            if params.get(required).map(|v| v.is_empty()).unwrap_or(true) {
                return self.respond(
                    LABEL,
                    "missing_param",
                    400,
                    json!({"error": format!("missing required parameter '{required}'")}),
                );
            }
        }
        let mut state = self.state.lock().expect("toy state lock");
        let id = state.next_owner;
        state.next_owner += 1;
        state.owners.insert(
            id,
            ToyOwner {
                name: params["name"].clone(),
                telephone: params["telephone"].clone(),
            },
        );
        drop(state);
        self.respond(
            LABEL,
            "created",
            201,
            json!({"ownerId": id, "name": params["name"]}),
        )
    }

    fn show_owner(&self, owner_id: &str) -> RawResponse {
        const LABEL: &str = "GET /owners/{ownerId}";
        let Segment::Int(id) = parse_id(owner_id) else {
            return self.respond(
                LABEL,
                "bad_id",
                400,
                json!({"error": "parameter 'ownerId' must be an integer"}),
            );
        };
        let state = self.state.lock().expect("toy state lock");
        match state.owners.get(&id) {
            Some(owner) => {
                let pets: Vec<i64> = state
                    .pets
                    .iter()
                    .filter(|(_, p)| p.owner_id == id)
                    .map(|(pid, _)| *pid)
                    .collect();
                let body = json!({
                    "ownerId": id,
                    "name": owner.name,
                    "telephone": owner.telephone,
                    "pets": pets,
                });
                drop(state);
                self.respond(LABEL, "found", 200, body)
            }
            None => {
                drop(state);
                self.respond(
                    LABEL,
                    "not_found",
                    404,
                    json!({"error": format!("owner {id} not found")}),
                )
            }
        }
    }

    fn create_pet(&self, owner_id: &str, params: &BTreeMap<String, String>) -> RawResponse {
        const LABEL: &str = "POST /owners/{ownerId}/pets/new";
        let Segment::Int(oid) = parse_id(owner_id) else {
            return self.respond(
                LABEL,
                "bad_id",
                400,
                json!({"error": "parameter 'ownerId' must be an integer"}),
            );
        };
        for required in ["name", "type"] {
            if params.get(required).map(|v| v.is_empty()).unwrap_or(true) {
                return self.respond(
                    LABEL,
                    "missing_param",
                    400,
                    json!({"error": format!("missing required parameter '{required}'")}),
                );
            }
        }
        let mut state = self.state.lock().expect("toy state lock");
        if !state.owners.contains_key(&oid) {
            drop(state);
            return self.respond(
                LABEL,
                "owner_not_found",
                404,
                json!({"error": format!("owner {oid} not found")}),
            );
        }
        let pet_type = params["type"].clone();
        if !["cat", "dog", "bird"].contains(&pet_type.as_str()) {
            drop(state);
            return self.respond(
                LABEL,
                "invalid_type",
                400,
                json!({"error": format!("unsupported pet type '{pet_type}'"), "allowed": ["cat", "dog", "bird"]}),
            );
        }
        let id = state.next_pet;
        state.next_pet += 1;
        state.pets.insert(
            id,
            ToyPet {
                owner_id: oid,
                name: params["name"].clone(),
                pet_type: pet_type.clone(),
            },
        );
        drop(state);
        self.respond(
            LABEL,
            "created",
            201,
            json!({"petId": id, "ownerId": oid, "name": params["name"], "type": pet_type}),
        )
    }

    fn show_pet(&self, owner_id: &str, pet_id: &str) -> RawResponse {
        const LABEL: &str = "GET /owners/{ownerId}/pets/{petId}";
        let (Segment::Int(oid), Segment::Int(pid)) = (parse_id(owner_id), parse_id(pet_id)) else {
            return self.respond(
                LABEL,
                "bad_id",
                400,
                json!({"error": "path parameters must be integers"}),
            );
        };
        let state = self.state.lock().expect("toy state lock");
        if !state.owners.contains_key(&oid) {
            drop(state);
            return self.respond(
                LABEL,
                "owner_not_found",
                404,
                json!({"error": format!("owner {oid} not found")}),
            );
        }
        match state.pets.get(&pid).filter(|p| p.owner_id == oid) {
            Some(pet) => {
                let body = json!({"petId": pid, "ownerId": oid, "name": pet.name, "type": pet.pet_type});
                drop(state);
                self.respond(LABEL, "found", 200, body)
            }
            None => {
                drop(state);
                self.respond(
                    LABEL,
                    "pet_not_found",
                    404,
                    json!({"error": format!("pet {pid} not found for owner {oid}")}),
                )
            }
        }
    }

    fn create_visit(
        &self,
        owner_id: &str,
        pet_id: &str,
        params: &BTreeMap<String, String>,
    ) -> RawResponse {
        const LABEL: &str = "POST /owners/{ownerId}/pets/{petId}/visits/new";
        let (Segment::Int(oid), Segment::Int(pid)) = (parse_id(owner_id), parse_id(pet_id)) else {
            return self.respond(
                LABEL,
                "bad_id",
                400,
                json!({"error": "path parameters must be integers"}),
            );
        };
        for required in ["date", "description"] {
            if params.get(required).map(|v| v.is_empty()).unwrap_or(true) {
                return self.respond(
                    LABEL,
                    "missing_param",
                    400,
                    json!({"error": format!("missing required parameter '{required}'")}),
                );
            }
        }
        let mut state = self.state.lock().expect("toy state lock");
        if !state.owners.contains_key(&oid) {
            drop(state);
            return self.respond(
                LABEL,
                "owner_not_found",
                404,
                json!({"error": format!("owner {oid} not found")}),
            );
        }
        if state.pets.get(&pid).filter(|p| p.owner_id == oid).is_none() {
            drop(state);
            return self.respond(
                LABEL,
                "pet_not_found",
                404,
                json!({"error": format!("pet {pid} not found for owner {oid}")}),
            );
        }
        let date = params["date"].clone();
        let description = params["description"].clone();
        if date.as_str() < self.spec.today.as_str() {
            drop(state);
            return self.respond(
                LABEL,
                "past_date",
                400,
                json!({"error": format!("visit date {date} is in the past")}),
            );
        }
        let emergency = description.contains("emergency");
        if emergency && date != self.spec.today {
            drop(state);
            return self.respond(
                LABEL,
                "emergency_window",
                400,
                json!({"error": "emergency visits must be scheduled for today"}),
            );
        }
        if description.contains("boom") {
            state.fault_seq += 1;
            let token = 0x8f3a_9c21u64 + state.fault_seq;
            drop(state);
            let trace = format!(
                "java.lang.IllegalStateException: visit ledger write failed for token {token:08x}\n\
                 \tat org.acme.clinic.ClinicService.createVisit(ClinicService.java:20)\n\
                 \tat org.acme.clinic.VisitController.createVisit(VisitController.java:23)\n"
            );
            return self.respond(LABEL, "fault", 500, json!(trace));
        }
        let id = state.next_visit;
        state.next_visit += 1;
        state.visits.insert(
            id,
            ToyVisit {
                pet_id: pid,
                date: date.clone(),
                description: description.clone(),
            },
        );
        drop(state);
        let class = if emergency { "created_emergency" } else { "created" };
        self.respond(
            LABEL,
            class,
            201,
            json!({"visitId": id, "petId": pid, "date": date, "description": description}),
        )
    }

    fn list_visits(&self, owner_id: &str, pet_id: &str) -> RawResponse {
        const LABEL: &str = "GET /owners/{ownerId}/pets/{petId}/visits";
        let (Segment::Int(oid), Segment::Int(pid)) = (parse_id(owner_id), parse_id(pet_id)) else {
            return self.respond(
                LABEL,
                "bad_id",
                400,
                json!({"error": "path parameters must be integers"}),
            );
        };
        let state = self.state.lock().expect("toy state lock");
        if !state.owners.contains_key(&oid) {
            drop(state);
            return self.respond(
                LABEL,
                "owner_not_found",
                404,
                json!({"error": format!("owner {oid} not found")}),
            );
        }
        if state.pets.get(&pid).filter(|p| p.owner_id == oid).is_none() {
            drop(state);
            return self.respond(
                LABEL,
                "pet_not_found",
                404,
                json!({"error": format!("pet {pid} not found for owner {oid}")}),
            );
        }
        let visits: Vec<_> = state
            .visits
            .iter()
            .filter(|(_, v)| v.pet_id == pid)
            .map(|(id, v)| json!({"visitId": id, "date": v.date, "description": v.description}))
            .collect();
        drop(state);
        self.respond(LABEL, "listed", 200, json!({ "visits": visits }))
    }
}
