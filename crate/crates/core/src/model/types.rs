//! Core data types of the endpoint model.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;

/// Supported HTTP verbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HttpMethod {
    Get,
    Post,
    Put,
    Delete,
    Patch,
}

impl HttpMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            HttpMethod::Get => "GET",
            HttpMethod::Post => "POST",
            HttpMethod::Put => "PUT",
            HttpMethod::Delete => "DELETE",
            HttpMethod::Patch => "PATCH",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GET" => Some(HttpMethod::Get),
            "POST" => Some(HttpMethod::Post),
            "PUT" => Some(HttpMethod::Put),
            "DELETE" => Some(HttpMethod::Delete),
            "PATCH" => Some(HttpMethod::Patch),
            _ => None,
        }
    }
}

impl fmt::Display for HttpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a parameter travels in the request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Query,
    Path,
    Body,
    Header,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParamKind::Query => "query",
            ParamKind::Path => "path",
            ParamKind::Body => "body",
            ParamKind::Header => "header",
        };
        f.write_str(s)
    }
}

/// Shape of a value constraint attached to a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Enumeration,
    Range,
    Pattern,
    FreeText,
}

/// One constraint on the values a single parameter may take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueConstraint {
    pub kind: ConstraintKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regex: Option<String>,
    /// Natural-language form of the constraint as extracted from code.
    #[serde(default)]
    pub note: String,
}

impl ValueConstraint {
    pub fn enumeration<I: IntoIterator<Item = S>, S: Into<String>>(values: I) -> Self {
        Self {
            kind: ConstraintKind::Enumeration,
            allowed_values: Some(values.into_iter().map(Into::into).collect()),
            min: None,
            max: None,
            regex: None,
            note: String::new(),
        }
    }

    pub fn range(min: Option<f64>, max: Option<f64>) -> Self {
        Self {
            kind: ConstraintKind::Range,
            allowed_values: None,
            min,
            max,
            regex: None,
            note: String::new(),
        }
    }

    pub fn pattern(regex: impl Into<String>) -> Self {
        Self {
            kind: ConstraintKind::Pattern,
            allowed_values: None,
            min: None,
            max: None,
            regex: Some(regex.into()),
            note: String::new(),
        }
    }

    pub fn free_text(note: impl Into<String>) -> Self {
        Self {
            kind: ConstraintKind::FreeText,
            allowed_values: None,
            min: None,
            max: None,
            regex: None,
            note: note.into(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// One endpoint parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    /// Semantic type tag ("string", "int", "date", ...). Not a type system,
    /// just what extraction produced.
    pub datatype: String,
    pub kind: ParamKind,
    #[serde(default)]
    pub value_constraints: Vec<ValueConstraint>,
    #[serde(default)]
    pub enclosing_method: String,
    #[serde(default)]
    pub enclosing_class: String,
    #[serde(default)]
    pub annotations: Vec<String>,
}

impl Parameter {
    pub fn new(name: impl Into<String>, datatype: impl Into<String>, kind: ParamKind) -> Self {
        Self {
            name: name.into(),
            datatype: datatype.into(),
            kind,
            value_constraints: Vec::new(),
            enclosing_method: String::new(),
            enclosing_class: String::new(),
            annotations: Vec::new(),
        }
    }

    pub fn with_constraint(mut self, vc: ValueConstraint) -> Self {
        self.value_constraints.push(vc);
        self
    }

    pub fn with_annotation(mut self, a: impl Into<String>) -> Self {
        self.annotations.push(a.into());
        self
    }

    pub fn located(mut self, class: impl Into<String>, method: impl Into<String>) -> Self {
        self.enclosing_class = class.into();
        self.enclosing_method = method.into();
        self
    }
}

/// The seven inter-parameter dependency relation types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IpdRelation {
    AllOrNone,
    Requires,
    OnlyOne,
    Or,
    ZeroOrOne,
    Arithmetic,
    Complex,
}

impl IpdRelation {
    pub const ALL: [IpdRelation; 7] = [
        IpdRelation::AllOrNone,
        IpdRelation::Requires,
        IpdRelation::OnlyOne,
        IpdRelation::Or,
        IpdRelation::ZeroOrOne,
        IpdRelation::Arithmetic,
        IpdRelation::Complex,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "AllOrNone" => Some(IpdRelation::AllOrNone),
            "Requires" => Some(IpdRelation::Requires),
            "OnlyOne" => Some(IpdRelation::OnlyOne),
            "Or" => Some(IpdRelation::Or),
            "ZeroOrOne" => Some(IpdRelation::ZeroOrOne),
            "Arithmetic" => Some(IpdRelation::Arithmetic),
            "Complex" => Some(IpdRelation::Complex),
            _ => None,
        }
    }
}

/// A constraint restricting which parameter combinations form a valid request.
///
/// For `Requires` the first entry of `parameters` is the antecedent; the rest
/// are consequents. `constraint_logic` carries the expression evaluated for
/// `Arithmetic` and `Complex` relations (see the constraint-language doc).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterParamDependency {
    pub relation: IpdRelation,
    pub parameters: Vec<String>,
    #[serde(default)]
    pub constraint_logic: String,
}

impl InterParamDependency {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(
        relation: IpdRelation,
        parameters: I,
    ) -> Self {
        Self {
            relation,
            parameters: parameters.into_iter().map(Into::into).collect(),
            constraint_logic: String::new(),
        }
    }

    pub fn with_logic(mut self, logic: impl Into<String>) -> Self {
        self.constraint_logic = logic.into();
        self
    }
}

/// CRUD classification of a database call site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CrudKind {
    Create,
    Read,
    Update,
    Delete,
}

impl CrudKind {
    pub fn is_write(&self) -> bool {
        !matches!(self, CrudKind::Read)
    }
}

/// One database interaction point reachable from an endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseOperation {
    /// Persistence framework tag ("jpa", "jdbc", ...).
    pub framework: String,
    pub enclosing_class: String,
    pub method_signature: String,
    /// 1-based line of the call site in its source file.
    pub line: u32,
    pub crud: CrudKind,
}

/// Response shape: either a bare type reference or a field map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResponseSchema {
    Text(String),
    Fields(BTreeMap<String, String>),
}

impl ResponseSchema {
    pub fn empty() -> Self {
        ResponseSchema::Text(String::new())
    }

    pub fn is_empty(&self) -> bool {
        match self {
            ResponseSchema::Text(s) => s.is_empty(),
            ResponseSchema::Fields(m) => m.is_empty(),
        }
    }

    /// True when the schema mentions `field` (by key or inside the text form).
    pub fn mentions(&self, field: &str) -> bool {
        match self {
            ResponseSchema::Text(s) => s.to_ascii_lowercase().contains(&field.to_ascii_lowercase()),
            ResponseSchema::Fields(m) => m.keys().any(|k| k.eq_ignore_ascii_case(field)),
        }
    }
}

impl Default for ResponseSchema {
    fn default() -> Self {
        ResponseSchema::empty()
    }
}

/// Stable identifier for an endpoint, deterministic from (path, verb).
///
/// Derived as the SHA-256 of `<lowercase verb>:<normalized path with
/// placeholders canonicalized to {}>`, truncated to 16 hex characters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EndpointId(String);

impl EndpointId {
    pub fn derive(method: HttpMethod, path: &str) -> Self {
        let canonical = canonical_path(&normalize_path(path));
        let key = format!("{}:{}", method.as_str().to_ascii_lowercase(), canonical);
        let digest = Sha256::digest(key.as_bytes());
        let mut hex = String::with_capacity(16);
        for b in digest.iter().take(8) {
            hex.push_str(&format!("{:02x}", b));
        }
        EndpointId(hex)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Wrap a raw id read from a persisted document. No validation; use
    /// [`validate_endpoint`](super::validate_endpoint) to cross-check.
    pub fn from_raw(raw: impl Into<String>) -> Self {
        EndpointId(raw.into())
    }
}

impl fmt::Display for EndpointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Normalize a resource path: leading slash, duplicate slashes collapsed,
/// trailing slash stripped (except for the root path).
pub fn normalize_path(path: &str) -> String {
    let mut out = String::with_capacity(path.len() + 1);
    out.push('/');
    for segment in path.split('/').filter(|s| !s.is_empty()) {
        if !out.ends_with('/') {
            out.push('/');
        }
        out.push_str(segment);
    }
    out
}

/// The same path with every `{name}` placeholder replaced by `{}`.
fn canonical_path(path: &str) -> String {
    let mut out = String::with_capacity(path.len());
    let mut in_placeholder = false;
    for c in path.chars() {
        match c {
            '{' => {
                in_placeholder = true;
                out.push('{');
            }
            '}' => {
                in_placeholder = false;
                out.push('}');
            }
            _ if in_placeholder => {}
            _ => out.push(c),
        }
    }
    out
}

/// Placeholder names appearing in a path, in order of appearance.
pub fn path_placeholders(path: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = path;
    while let Some(start) = rest.find('{') {
        let Some(len) = rest[start + 1..].find('}') else {
            break;
        };
        out.push(rest[start + 1..start + 1 + len].to_string());
        rest = &rest[start + 1 + len + 1..];
    }
    out
}

/// One service operation: the endpoint model 8-tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    /// Fully qualified name of the class containing the handler method.
    pub class_name: String,
    /// Signature of the handler method.
    pub method_signature: String,
    /// Resource path with `{name}` placeholders, normalized.
    pub path: String,
    pub http_method: HttpMethod,
    pub parameters: Vec<Parameter>,
    #[serde(default)]
    pub ipds: Vec<InterParamDependency>,
    #[serde(default)]
    pub db_ops: Vec<DatabaseOperation>,
    #[serde(default)]
    pub response_schema: ResponseSchema,
    pub endpoint_id: EndpointId,
}

impl Endpoint {
    pub fn new(
        class_name: impl Into<String>,
        method_signature: impl Into<String>,
        path: &str,
        http_method: HttpMethod,
    ) -> Self {
        let path = normalize_path(path);
        let endpoint_id = EndpointId::derive(http_method, &path);
        Self {
            class_name: class_name.into(),
            method_signature: method_signature.into(),
            path,
            http_method,
            parameters: Vec::new(),
            ipds: Vec::new(),
            db_ops: Vec::new(),
            response_schema: ResponseSchema::empty(),
            endpoint_id,
        }
    }

    pub fn with_parameter(mut self, p: Parameter) -> Self {
        self.parameters.push(p);
        self
    }

    pub fn with_ipd(mut self, ipd: InterParamDependency) -> Self {
        self.ipds.push(ipd);
        self
    }

    pub fn parameter(&self, name: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn path_parameters(&self) -> impl Iterator<Item = &Parameter> {
        self.parameters.iter().filter(|p| p.kind == ParamKind::Path)
    }

    /// Short human-readable label, e.g. `POST /owners/new`.
    pub fn label(&self) -> String {
        format!("{} {}", self.http_method, self.path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_id_deterministic_and_canonical() {
        let a = EndpointId::derive(HttpMethod::Get, "/owners/{ownerId}");
        let b = EndpointId::derive(HttpMethod::Get, "/owners/{id}");
        let c = EndpointId::derive(HttpMethod::Get, "owners/{ownerId}/");
        assert_eq!(a, b, "placeholder names do not affect the id");
        assert_eq!(a, c, "normalization applies before hashing");
        let d = EndpointId::derive(HttpMethod::Post, "/owners/{ownerId}");
        assert_ne!(a, d);
        assert_eq!(a.as_str().len(), 16);
    }

    #[test]
    fn path_normalization() {
        assert_eq!(normalize_path("owners//pets/"), "/owners/pets");
        assert_eq!(normalize_path("/"), "/");
        assert_eq!(normalize_path(""), "/");
    }

    #[test]
    fn placeholders_in_order() {
        assert_eq!(
            path_placeholders("/owners/{ownerId}/pets/{petId}/visits/new"),
            vec!["ownerId".to_string(), "petId".to_string()]
        );
        assert!(path_placeholders("/vets").is_empty());
    }

    #[test]
    fn response_schema_mentions() {
        let text = ResponseSchema::Text("OwnerCreated{ownerId}".into());
        assert!(text.mentions("ownerid"));
        let mut m = BTreeMap::new();
        m.insert("petId".to_string(), "int".to_string());
        let fields = ResponseSchema::Fields(m);
        assert!(fields.mentions("petId"));
        assert!(!fields.mentions("ownerId"));
    }
}
