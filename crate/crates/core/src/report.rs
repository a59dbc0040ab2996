//! Translation reports and assembly emission.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::asm_model::{canonical_text, LineContent};
use crate::parser::AssemblyDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScratchUse {
    pub line: usize,
    pub register: String,
}

/// Per-file outcome. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationReport {
    pub source: String,
    pub status: Status,
    pub rules: BTreeMap<String, u64>,
    pub warnings: Vec<Diagnostic>,
    pub errors: Vec<Diagnostic>,
    pub scratch_uses: Vec<ScratchUse>,
}

impl TranslationReport {
    pub fn new(source: &str) -> Self {
        TranslationReport {
            source: source.to_string(),
            status: Status::Ok,
            rules: BTreeMap::new(),
            warnings: Vec::new(),
            errors: Vec::new(),
            scratch_uses: Vec::new(),
        }
    }

    pub fn count_rule(&mut self, rule: &str) {
        *self.rules.entry(rule.to_string()).or_default() += 1;
    }

    pub fn warn(&mut self, line: usize, code: &str, message: impl Into<String>) {
        self.warnings.push(Diagnostic {
            line,
            code: code.to_string(),
            message: message.into(),
        });
    }

    pub fn error(&mut self, line: usize, code: &str, message: impl Into<String>) {
        self.errors.push(Diagnostic {
            line,
            code: code.to_string(),
            message: message.into(),
        });
        self.status = Status::Failed;
    }

    pub fn scratch(&mut self, line: usize, register: &str) {
        self.scratch_uses.push(ScratchUse {
            line,
            register: register.to_string(),
        });
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    pub fn rules_fired(&self) -> u64 {
        self.rules.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    HumanText,
}

pub fn emit_report(report: &TranslationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string(report).expect("report serialization is infallible")
        }
        ReportFormat::HumanText => {
            let status = match report.status {
                Status::Ok => "ok",
                Status::Failed => "failed",
            };
            let mut out = format!(
                "{}: {} ({} rewrites, {} warnings, {} errors)\n",
                report.source,
                status,
                report.rules_fired(),
                report.warnings.len(),
                report.errors.len()
            );
            for d in report.warnings.iter().chain(&report.errors) {
                out.push_str(&format!("{}:{}: {}\n", d.line, d.code, d.message));
            }
            out
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitOptions {
    /// Tag the first line of multi-line expansions with the rule id.
    pub annotate: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions { annotate: true }
    }
}

pub const ANNOTATION_PREFIX: &str = "# rvv-backport:";

pub fn emit_assembly(doc: &AssemblyDocument) -> String {
    emit_assembly_with(doc, &EmitOptions::default())
}

pub fn emit_assembly_with(doc: &AssemblyDocument, opts: &EmitOptions) -> String {
    let newline = if doc.crlf { "\r\n" } else { "\n" };
    let mut out = String::new();
    for line in &doc.lines {
        match &line.content {
            LineContent::Opaque | LineContent::Decoded(_) => out.push_str(&line.raw_text),
            LineContent::ArchAttribute { retarget, .. } => {
                if *retarget {
                    out.push_str(&line.raw_text.replace("v1p0", "v0p7"));
                } else {
                    out.push_str(&line.raw_text);
                }
            }
            LineContent::Replaced {
                replacement, rule, ..
            } => {
                let indent = line.indentation();
                for (i, instr) in replacement.iter().enumerate() {
                    if i > 0 {
                        out.push_str(newline);
                    }
                    out.push_str(indent);
                    if i == 0 && opts.annotate && replacement.len() > 1 {
                        let mut tagged = instr.clone();
                        tagged.comment_suffix = Some(format!("{ANNOTATION_PREFIX} {rule}"));
                        out.push_str(&canonical_text(&tagged));
                    } else {
                        out.push_str(&canonical_text(instr));
                    }
                }
            }
            LineContent::Flagged { note } => {
                out.push_str(&line.raw_text);
                out.push(' ');
                out.push_str(note);
            }
        }
        out.push_str(newline);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm_model::{Instruction, Mode, Operand};
    use crate::parser::parse_document;

    #[test]
    fn empty_report_json() {
        let r = TranslationReport::new("f.s");
        assert_eq!(
            emit_report(&r, ReportFormat::Json),
            r#"{"source":"f.s","status":"ok","rules":{},"warnings":[],"errors":[],"scratch_uses":[]}"#
        );
    }

    #[test]
    fn error_marks_failed() {
        let mut r = TranslationReport::new("f.s");
        r.error(12, "fractional-lmul", "no fractional LMUL");
        let v: serde_json::Value =
            serde_json::from_str(&emit_report(&r, ReportFormat::Json)).unwrap();
        assert_eq!(v["status"], "failed");
        assert_eq!(v["errors"][0]["line"], 12);
        assert_eq!(v["errors"][0]["code"], "fractional-lmul");
    }

    #[test]
    fn rule_counts_serialized() {
        let mut r = TranslationReport::new("f.s");
        for _ in 0..3 {
            r.count_rule("strip-policy");
        }
        let json = emit_report(&r, ReportFormat::Json);
        assert!(json.contains(r#""rules":{"strip-policy":3}"#), "{json}");
    }

    #[test]
    fn human_text_lines() {
        let mut r = TranslationReport::new("k.s");
        r.warn(3, "unknown-state", "assumed EEW == SEW");
        r.error(7, "vcsr-access", "vcsr does not exist");
        let text = emit_report(&r, ReportFormat::HumanText);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k.s: failed (0 rewrites, 1 warnings, 1 errors)");
        assert_eq!(lines[1], "3:unknown-state: assumed EEW == SEW");
        assert_eq!(lines[2], "7:vcsr-access: vcsr does not exist");
    }

    #[test]
    fn untouched_text_round_trips() {
        for text in ["", "a\n", "\tvadd.vv v1, v2, v3\n# c\n\n", "x\r\ny\r\n"] {
            let doc = parse_document(text, "t", Mode::Strict).unwrap();
            assert_eq!(emit_assembly(&doc), text);
        }
        let doc = parse_document("no newline", "t", Mode::Strict).unwrap();
        assert_eq!(emit_assembly(&doc), "no newline\n");
    }

    #[test]
    fn replacement_lines_reuse_indentation() {
        let mut doc = parse_document("\tvsetivli x0, 16, e8, m1\n", "t", Mode::Strict).unwrap();
        let original = doc.lines[0].instruction().unwrap().clone();
        doc.lines[0].content = LineContent::Replaced {
            original,
            replacement: vec![
                Instruction::new("li", vec![Operand::scalar("t5"), Operand::Immediate(16)]),
                Instruction::new("nop", vec![]),
            ],
            rule: "vsetivli-expand",
        };
        assert_eq!(
            emit_assembly(&doc),
            "\tli t5, 16 # rvv-backport: vsetivli-expand\n\tnop\n"
        );
        assert_eq!(
            emit_assembly_with(&doc, &EmitOptions { annotate: false }),
            "\tli t5, 16\n\tnop\n"
        );
    }

    #[test]
    fn arch_attribute_retarget() {
        let text = "\t.attribute\tarch, \"rv64i2p1_m2p0_v1p0_zve32x1p0\"\n";
        let mut doc = parse_document(text, "t", Mode::Strict).unwrap();
        assert_eq!(emit_assembly(&doc), text);
        if let LineContent::ArchAttribute { retarget, .. } = &mut doc.lines[0].content {
            *retarget = true;
        }
        assert_eq!(
            emit_assembly(&doc),
            "\t.attribute\tarch, \"rv64i2p1_m2p0_v0p7_zve32x1p0\"\n"
        );
    }
}
