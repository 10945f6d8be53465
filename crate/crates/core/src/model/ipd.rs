//! Satisfiability of inter-parameter dependencies and value constraints
//! over a concrete parameter assignment.

use super::expr::{eval_arithmetic, eval_complex};
use super::types::{ConstraintKind, Endpoint, InterParamDependency, IpdRelation, ValueConstraint};
use super::ModelError;
use std::collections::BTreeMap;

/// A request assignment: parameter name to value.
///
/// Absence means the parameter is omitted from the request — either the key
/// is missing or it maps to `None`. An empty string is a present value.
pub type Assignment = BTreeMap<String, Option<String>>;

fn present(assignment: &Assignment, name: &str) -> bool {
    matches!(assignment.get(name), Some(Some(_)))
}

/// Does `assignment` satisfy one inter-parameter dependency?
///
/// - `AllOrNone`: all named parameters present, or none of them.
/// - `Requires`: if the antecedent (first entry) is present, every consequent
///   is present too.
/// - `OnlyOne`: exactly one present.
/// - `Or`: at least one present.
/// - `ZeroOrOne`: at most one present.
/// - `Arithmetic`: `constraint_logic` holds over numeric values; any absent
///   or non-numeric referenced parameter makes the relation unsatisfied.
/// - `Complex`: `constraint_logic` (a boolean expression over presence and
///   value predicates) evaluates to true.
pub fn ipd_satisfied(
    ipd: &InterParamDependency,
    assignment: &Assignment,
) -> Result<bool, ModelError> {
    let names = &ipd.parameters;
    let count = names.iter().filter(|n| present(assignment, n)).count();
    let ok = match ipd.relation {
        IpdRelation::AllOrNone => count == 0 || count == names.len(),
        IpdRelation::Requires => {
            let antecedent = names.first().map(|n| present(assignment, n)).unwrap_or(false);
            !antecedent || names.iter().skip(1).all(|n| present(assignment, n))
        }
        IpdRelation::OnlyOne => count == 1,
        IpdRelation::Or => count >= 1,
        IpdRelation::ZeroOrOne => count <= 1,
        IpdRelation::Arithmetic => {
            eval_arithmetic(&ipd.constraint_logic, assignment)?.satisfied
        }
        IpdRelation::Complex => eval_complex(&ipd.constraint_logic, assignment)?.satisfied,
    };
    Ok(ok)
}

/// Does a present value meet one value constraint?
///
/// Free-text constraints are informational and always pass. A pattern
/// constraint whose regex does not compile is unsatisfiable (validation
/// reports it separately).
pub fn check_constraint(vc: &ValueConstraint, value: &str) -> bool {
    match vc.kind {
        ConstraintKind::Enumeration => vc
            .allowed_values
            .as_ref()
            .map(|vals| vals.iter().any(|v| v == value))
            .unwrap_or(false),
        ConstraintKind::Range => {
            let Ok(n) = value.trim().parse::<f64>() else {
                return false;
            };
            vc.min.map(|m| n >= m).unwrap_or(true) && vc.max.map(|m| n <= m).unwrap_or(true)
        }
        ConstraintKind::Pattern => match vc.regex.as_deref().map(regex::Regex::new) {
            Some(Ok(re)) => re.is_match(value),
            _ => false,
        },
        ConstraintKind::FreeText => true,
    }
}

/// True iff every IPD on the endpoint is satisfied and every present value
/// meets all of its parameter's constraints.
pub fn request_satisfies_all(e: &Endpoint, assignment: &Assignment) -> Result<bool, ModelError> {
    for ipd in &e.ipds {
        if !ipd_satisfied(ipd, assignment)? {
            return Ok(false);
        }
    }
    for param in &e.parameters {
        if let Some(Some(value)) = assignment.get(&param.name) {
            for vc in &param.value_constraints {
                if !check_constraint(vc, value) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HttpMethod, ParamKind, Parameter};

    fn assign(pairs: &[(&str, Option<&str>)]) -> Assignment {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.map(|s| s.to_string())))
            .collect()
    }

    #[test]
    fn only_one_exactly_one_present() {
        let ipd = InterParamDependency::new(IpdRelation::OnlyOne, ["a", "b"]);
        assert!(ipd_satisfied(&ipd, &assign(&[("a", Some("1")), ("b", None)])).unwrap());
        assert!(!ipd_satisfied(&ipd, &assign(&[("a", Some("1")), ("b", Some("2"))])).unwrap());
        assert!(!ipd_satisfied(&ipd, &assign(&[("a", None), ("b", None)])).unwrap());
    }

    #[test]
    fn all_or_none_mixed_presence_fails() {
        let ipd = InterParamDependency::new(IpdRelation::AllOrNone, ["a", "b"]);
        assert!(!ipd_satisfied(&ipd, &assign(&[("a", Some("1")), ("b", None)])).unwrap());
        assert!(ipd_satisfied(&ipd, &assign(&[("a", Some("1")), ("b", Some(""))])).unwrap());
        assert!(ipd_satisfied(&ipd, &assign(&[("a", None), ("b", None)])).unwrap());
    }

    // Hand-enumerated truth tables over the four presence combinations of
    // two parameters (a, b), in order: (absent,absent), (absent,present),
    // (present,absent), (present,present).
    #[test]
    fn two_parameter_presence_truth_tables() {
        let cases: [(IpdRelation, [bool; 4]); 5] = [
            (IpdRelation::AllOrNone, [true, false, false, true]),
            (IpdRelation::Requires, [true, true, false, true]),
            (IpdRelation::OnlyOne, [false, true, true, false]),
            (IpdRelation::Or, [false, true, true, true]),
            (IpdRelation::ZeroOrOne, [true, true, true, false]),
        ];
        let patterns = [(false, false), (false, true), (true, false), (true, true)];
        for (relation, expected) in cases {
            let ipd = InterParamDependency::new(relation, ["a", "b"]);
            for (i, (pa, pb)) in patterns.iter().enumerate() {
                let a = assign(&[
                    ("a", pa.then_some("1")),
                    ("b", pb.then_some("2")),
                ]);
                assert_eq!(
                    ipd_satisfied(&ipd, &a).unwrap(),
                    expected[i],
                    "{relation:?} pattern {i}"
                );
            }
        }
    }

    #[test]
    fn empty_string_counts_as_present() {
        let ipd = InterParamDependency::new(IpdRelation::Or, ["a"]);
        assert!(ipd_satisfied(&ipd, &assign(&[("a", Some(""))])).unwrap());
        assert!(!ipd_satisfied(&ipd, &assign(&[("a", None)])).unwrap());
    }

    #[test]
    fn malformed_logic_propagates() {
        let ipd =
            InterParamDependency::new(IpdRelation::Complex, ["a"]).with_logic("present(a) &&");
        let err = ipd_satisfied(&ipd, &assign(&[("a", Some("1"))])).unwrap_err();
        assert_eq!(err.code(), "MALFORMED_LOGIC");
    }

    #[test]
    fn enumeration_constraint_rejects_outside_value() {
        let vc = ValueConstraint::enumeration(["buy", "sell"]);
        assert!(check_constraint(&vc, "buy"));
        assert!(!check_constraint(&vc, "hold"));
    }

    #[test]
    fn range_and_pattern_constraints() {
        let range = ValueConstraint::range(Some(1.0), Some(10.0));
        assert!(check_constraint(&range, "5"));
        assert!(!check_constraint(&range, "11"));
        assert!(!check_constraint(&range, "abc"));
        let pat = ValueConstraint::pattern(r"^\d{4}-\d{2}-\d{2}$");
        assert!(check_constraint(&pat, "2025-01-01"));
        assert!(!check_constraint(&pat, "Jan 1"));
    }

    #[test]
    fn request_satisfies_all_vacuous_and_constraint_paths() {
        let e = Endpoint::new("com.example.TradeController", "trade(String)", "/trade", HttpMethod::Post)
            .with_parameter(
                Parameter::new("action", "string", ParamKind::Query)
                    .with_constraint(ValueConstraint::enumeration(["buy", "sell"])),
            );
        assert!(request_satisfies_all(&e, &assign(&[("action", Some("buy"))])).unwrap());
        assert!(!request_satisfies_all(&e, &assign(&[("action", Some("hold"))])).unwrap());
        // Absent value: constraints only apply to present values.
        assert!(request_satisfies_all(&e, &assign(&[("action", None)])).unwrap());
    }

    #[test]
    fn requires_ipd_on_endpoint() {
        let e = Endpoint::new("c", "m()", "/x", HttpMethod::Get)
            .with_parameter(Parameter::new("petId", "int", ParamKind::Query))
            .with_parameter(Parameter::new("ownerId", "int", ParamKind::Query))
            .with_ipd(InterParamDependency::new(
                IpdRelation::Requires,
                ["petId", "ownerId"],
            ));
        assert!(
            !request_satisfies_all(&e, &assign(&[("petId", Some("1")), ("ownerId", None)]))
                .unwrap()
        );
        assert!(request_satisfies_all(
            &e,
            &assign(&[("petId", Some("1")), ("ownerId", Some("1"))])
        )
        .unwrap());
    }
}
