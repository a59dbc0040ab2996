use std::path::PathBuf;

use std::collections::BTreeSet;

use rvv_backport::corpus::{entries, run_corpus, Kind};
use rvv_backport::report::EmitOptions;
use rvv_backport::rewriter::{self, DiagnosticCode};
use rvv_backport::translate;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

#[test]
fn corpus_cases_pass() {
    let summary = run_corpus(&root()).unwrap();
    let failures: Vec<String> = summary
        .failures()
        .map(|c| format!("{}/{}: {}", c.kind, c.name, c.detail))
        .collect();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
    for kind in Kind::ALL {
        assert!(
            summary.cases.iter().any(|c| c.kind == kind),
            "no {kind} cases"
        );
    }
}

/// Golden cases alone fire every rule and reject cases alone raise every
/// diagnostic code.
#[test]
fn golden_and_reject_coverage() {
    let mut rules = BTreeSet::new();
    let mut codes = BTreeSet::new();
    for e in entries(&root()).unwrap() {
        let t = translate(&e.text, &e.name, &e.options, &EmitOptions::default());
        match e.kind {
            Kind::Golden => rules.extend(t.report.rules.keys().cloned()),
            Kind::Reject => codes.extend(t.report.errors.iter().map(|d| d.code.clone())),
            _ => {}
        }
    }
    let want_rules: BTreeSet<String> = rewriter::rules::ALL.iter().map(|r| r.to_string()).collect();
    let want_codes: BTreeSet<String> = DiagnosticCode::ALL
        .iter()
        .map(|c| c.id().to_string())
        .collect();
    assert_eq!(rules, want_rules);
    assert_eq!(codes, want_codes);
}
