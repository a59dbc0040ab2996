//! Backports RISC-V Vector v1.0 assembly to the v0.7.1 dialect.
//!
//! The pipeline is parse → track → rewrite → emit. A dual-dialect
//! interpreter for the supported subset ([`emulator`]) runs a source file
//! under v1.0 semantics and its translation under v0.7.1 semantics to check
//! that the two agree.

pub mod asm_model;
pub mod cli;
pub mod corpus;
pub mod emulator;
pub mod isa;
pub mod parser;
pub mod report;
pub mod rewriter;
pub mod selftest;
pub mod vconfig;

pub use asm_model::{Dialect, Instruction, Mode, Operand, VConfig};
pub use parser::{parse_document, AssemblyDocument};
pub use report::{emit_assembly, emit_report, ReportFormat, TranslationReport};
pub use rewriter::{rewrite_document, rewrite_instruction, RewriteOptions, RewriteResult};
pub use vconfig::{track, VConfigState};

use rewriter::DiagnosticCode;

/// Output of translating one file.
#[derive(Debug, Clone)]
pub struct Translation {
    /// Translated text; `None` when parsing aborted in strict mode.
    pub output: Option<String>,
    pub report: TranslationReport,
}

impl Translation {
    pub fn is_ok(&self) -> bool {
        self.report.is_ok()
    }
}

/// Runs the full pipeline on one file's text.
pub fn translate(
    text: &str,
    source_name: &str,
    opts: &RewriteOptions,
    emit: &report::EmitOptions,
) -> Translation {
    let doc = match parse_document(text, source_name, opts.mode) {
        Ok(doc) => doc,
        Err(e) => {
            let mut report = TranslationReport::new(source_name);
            report.error(
                e.line(),
                DiagnosticCode::MalformedInstruction.id(),
                e.reason(),
            );
            return Translation {
                output: None,
                report,
            };
        }
    };
    let annotation = track(&doc);
    let (rewritten, report) = rewrite_document(&doc, &annotation, opts);
    Translation {
        output: Some(report::emit_assembly_with(&rewritten, emit)),
        report,
    }
}
