//! Property tests over the endpoint model: serialization round-trips for
//! arbitrary valid endpoints, and purity of validation.

use proptest::prelude::*;
use testweaver_core::model::{
    validate_endpoint, ConstraintKind, Endpoint, HttpMethod, InterParamDependency, IpdRelation,
    ParamKind, Parameter, ValueConstraint,
};

fn method_strategy() -> impl Strategy<Value = HttpMethod> {
    prop_oneof![
        Just(HttpMethod::Get),
        Just(HttpMethod::Post),
        Just(HttpMethod::Put),
        Just(HttpMethod::Delete),
        Just(HttpMethod::Patch),
    ]
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-zA-Z0-9]{0,8}"
}

fn constraint_strategy() -> impl Strategy<Value = ValueConstraint> {
    prop_oneof![
        proptest::collection::vec("[a-z]{1,6}", 1..4)
            .prop_map(ValueConstraint::enumeration),
        (proptest::option::of(-100.0..100.0f64), proptest::option::of(100.0..200.0f64))
            .prop_map(|(min, max)| ValueConstraint::range(min, max)),
        Just(ValueConstraint::pattern("^[a-z]+$")),
        "[ -~]{0,20}".prop_map(ValueConstraint::free_text),
    ]
}

fn parameter_strategy(kind: ParamKind) -> impl Strategy<Value = Parameter> {
    (ident(), proptest::collection::vec(constraint_strategy(), 0..3)).prop_map(move |(name, constraints)| {
        let mut p = Parameter::new(name, "string", kind);
        p.value_constraints = constraints;
        p
    })
}

/// Arbitrary structurally valid endpoints: path placeholders generated from
/// the path parameters themselves.
fn endpoint_strategy() -> impl Strategy<Value = Endpoint> {
    (
        method_strategy(),
        proptest::collection::vec(ident(), 1..3),  // static segments
        proptest::collection::vec(ident(), 0..3).prop_map(|names| {
            let mut unique = names;
            unique.sort();
            unique.dedup();
            unique
        }),  // path params
        proptest::collection::vec(parameter_strategy(ParamKind::Query), 0..3),
    )
        .prop_map(|(method, segments, path_params, mut query_params)| {
            let mut path = String::new();
            for s in &segments {
                path.push('/');
                path.push_str(s);
            }
            for p in &path_params {
                path.push_str(&format!("/{{{p}}}"));
            }
            let mut e = Endpoint::new("org.acme.App", "handler()", &path, method);
            for p in &path_params {
                e.parameters.push(Parameter::new(p, "int", ParamKind::Path));
            }
            // De-duplicate query parameter names against everything else.
            query_params.retain(|q| !path_params.contains(&q.name));
            let mut seen = std::collections::BTreeSet::new();
            for q in query_params {
                if seen.insert(q.name.clone()) {
                    e.parameters.push(q);
                }
            }
            // One IPD over two existing parameters when possible.
            if e.parameters.len() >= 2 {
                e.ipds.push(InterParamDependency::new(
                    IpdRelation::ZeroOrOne,
                    [e.parameters[0].name.clone(), e.parameters[1].name.clone()],
                ));
            }
            e
        })
}

proptest! {
    #[test]
    fn serialization_round_trip(e in endpoint_strategy()) {
        let json = serde_json::to_string(&e).unwrap();
        let back: Endpoint = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&e, &back);
    }

    #[test]
    fn validation_is_pure_and_generated_endpoints_are_clean(e in endpoint_strategy()) {
        let first = validate_endpoint(&e);
        let second = validate_endpoint(&e);
        prop_assert_eq!(&first, &second);
        // Generated endpoints satisfy the invariants except for enumeration
        // constraints that proptest may have emptied (it cannot).
        for violation in &first {
            prop_assert!(
                violation.code != testweaver_core::model::ViolationCode::PathParamUnbound,
                "generated endpoints bind every placeholder: {:?}", violation
            );
        }
    }

    #[test]
    fn document_round_trip(e in proptest::collection::vec(endpoint_strategy(), 0..4)) {
        let doc = testweaver_core::model::EndpointModelDocument::new("app", e);
        let back = testweaver_core::model::EndpointModelDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(doc, back);
    }
}

#[test]
fn constraint_kinds_serialize_stably() {
    let vc = ValueConstraint::enumeration(["x"]);
    let json = serde_json::to_string(&vc).unwrap();
    assert!(json.contains("\"enumeration\""));
    assert_eq!(vc.kind, ConstraintKind::Enumeration);
}
