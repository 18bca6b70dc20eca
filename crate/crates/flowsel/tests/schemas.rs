//! The shipped schema files must accept every document this crate produces
//! and reject shape violations. Semantic rules the schemas cannot express
//! (unique ids, acyclicity, row sums) stay with the loaders.

use jsonschema::Validator;
use serde_json::{json, Value};

use flowsel::bench::{synthesize_instance, BenchSpec};
use flowsel::{generate_policy, serialize_policy};

fn validator(name: &str) -> Validator {
    let text = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name),
    )
    .expect("schema file exists");
    let schema: Value = serde_json::from_str(&text).expect("schema file is JSON");
    jsonschema::validator_for(&schema).expect("schema file is a valid schema")
}

fn check(validator: &Validator, doc: &str) -> Result<(), String> {
    let value: Value = serde_json::from_str(doc).expect("document is JSON");
    validator
        .validate(&value)
        .map_err(|e| format!("{e} at {}", e.instance_path()))
}

#[test]
fn fixtures_conform_to_their_schemas() {
    for (schema, doc) in [
        ("registry.schema.json", include_str!("../fixtures/smart_home_registry.json")),
        ("workflow.schema.json", include_str!("../fixtures/morning_workflow.json")),
        ("model.schema.json", include_str!("../fixtures/morning_model.json")),
    ] {
        check(&validator(schema), doc).unwrap_or_else(|e| panic!("{schema}: {e}"));
    }
}

#[test]
fn every_produced_document_conforms() {
    let registry = validator("registry.schema.json");
    let workflow = validator("workflow.schema.json");
    let model = validator("model.schema.json");
    let policy = validator("policy.schema.json");
    for f_count in [2usize, 5] {
        for seed in 0..3 {
            let inst = synthesize_instance(&BenchSpec::default(), f_count, seed).unwrap();
            check(&registry, &inst.network.to_json_string()).unwrap();
            check(&workflow, &inst.workflow.to_json_string()).unwrap();
            check(&model, &inst.model.to_json_string()).unwrap();
            let doc = generate_policy(&inst.network, &inst.workflow, &inst.planted).unwrap();
            check(&policy, &serialize_policy(&doc)).unwrap();
        }
    }
}

#[test]
fn schemas_reject_shape_violations() {
    let bad_registry = json!({
        "devices": [{
            "id": "cm1",
            "address": "10.0.0.1",
            "capabilities": ["brew"],
            "net_requirements": {
                "brew": [{"direction": "sideways", "dest_port": 443, "tp_proto": "tcp"}]
            }
        }]
    });
    assert!(check(&validator("registry.schema.json"), &bad_registry.to_string()).is_err());

    let bad_port = json!({
        "devices": [{
            "id": "cm1",
            "address": "10.0.0.1",
            "capabilities": ["brew"],
            "net_requirements": {
                "brew": [{"direction": "outbound", "dest_port": 70000, "tp_proto": "tcp"}]
            }
        }]
    });
    assert!(check(&validator("registry.schema.json"), &bad_port.to_string()).is_err());

    let bad_edge = json!({
        "functions": ["a", "b"],
        "edges": [["a", "b", "c"]]
    });
    assert!(check(&validator("workflow.schema.json"), &bad_edge.to_string()).is_err());

    let bad_prob = json!({
        "nodes": [{
            "name": "a",
            "values": ["x"],
            "cpt": [{"parent_values": [], "probs": [1.5]}]
        }]
    });
    assert!(check(&validator("model.schema.json"), &bad_prob.to_string()).is_err());

    let deny_rule = json!({
        "header": {"workflow_id": "w", "assignment": {}, "note": ""},
        "rules": [{
            "action": "deny",
            "src_ip": "10.0.0.1",
            "dest_ip": "10.0.0.2",
            "dest_port": 80,
            "tp_proto": "tcp",
            "provenance": {"kind": "trigger", "edge": ["a", "b"], "requirement": 0}
        }],
        "default": "deny"
    });
    assert!(check(&validator("policy.schema.json"), &deny_rule.to_string()).is_err());

    let wrong_default = json!({
        "header": {"workflow_id": "w", "assignment": {}, "note": ""},
        "rules": [],
        "default": "allow"
    });
    assert!(check(&validator("policy.schema.json"), &wrong_default.to_string()).is_err());
}
