//! Runs a v1.0 source and its translation side by side.

use std::collections::BTreeSet;
use std::fmt;

use crate::asm_model::{scalar_reg_index, Dialect, Mode};
use crate::parser::parse_document;
use crate::report::EmitOptions;
use crate::rewriter::RewriteOptions;
use crate::translate;

use super::program::{load_program, Op, Program};
use super::{InitState, Machine, MachineConfig, DEFAULT_MEM_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffConfig {
    pub vlen: u32,
    pub mem_size: usize,
    pub max_steps: u64,
}

impl DiffConfig {
    pub fn new(vlen: u32) -> Self {
        DiffConfig {
            vlen,
            mem_size: DEFAULT_MEM_SIZE,
            max_steps: 1_000_000,
        }
    }
}

/// Which part of a differential run failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Translation,
    Source,
    Translated,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Translation => "translation",
            Side::Source => "source",
            Side::Translated => "translated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Match {
        source_steps: u64,
        translated_steps: u64,
    },
    Mismatch(Vec<String>),
    Error {
        side: Side,
        message: String,
    },
}

impl Verdict {
    pub fn is_match(&self) -> bool {
        matches!(self, Verdict::Match { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Match { .. } => f.write_str("MATCH"),
            Verdict::Mismatch(diffs) => write!(f, "MISMATCH: {}", diffs.join("; ")),
            Verdict::Error { side, message } => write!(f, "ERROR ({side}): {message}"),
        }
    }
}

fn vset_destinations(program: &Program, out: &mut BTreeSet<u8>) {
    for op in &program.ops {
        if let Op::Vsetvli { rd, .. } | Op::Vsetvl { rd, .. } = op {
            out.insert(*rd);
        }
    }
}

fn run(
    program: &Program,
    dialect: Dialect,
    init: &InitState,
    cfg: &DiffConfig,
) -> Result<(Machine, u64), String> {
    let config =
        MachineConfig::with_memory(cfg.vlen, cfg.mem_size, dialect).map_err(|e| e.to_string())?;
    let mut machine = Machine::new(config);
    init.apply(&mut machine.state)
        .map_err(|t| format!("initial state: {t}"))?;
    let steps = machine
        .run(program, cfg.max_steps)
        .map_err(|e| e.to_string())?;
    Ok((machine, steps))
}

/// Translates `source_text`, runs the source under v1.0 semantics and the
/// translation under v0.7.1 semantics from `init`, and compares final
/// memory and integer registers. Scratch registers and registers written
/// by vset* instructions are left out of the comparison.
pub fn differential_check(
    source_text: &str,
    source_name: &str,
    opts: &RewriteOptions,
    init: &InitState,
    cfg: &DiffConfig,
) -> Verdict {
    let translation = translate(source_text, source_name, opts, &EmitOptions::default());
    let output = match (&translation.output, translation.is_ok()) {
        (Some(out), true) => out.clone(),
        _ => {
            let message = translation
                .report
                .errors
                .iter()
                .map(|d| format!("line {}: {}: {}", d.line, d.code, d.message))
                .collect::<Vec<_>>()
                .join("; ");
            return Verdict::Error {
                side: Side::Translation,
                message,
            };
        }
    };
    let load = |text: &str, dialect: Dialect, side: Side| {
        parse_document(text, source_name, Mode::Lenient)
            .map_err(|e| e.to_string())
            .and_then(|doc| load_program(&doc, dialect).map_err(|e| e.to_string()))
            .map_err(|message| Verdict::Error { side, message })
    };
    let source = match load(source_text, Dialect::V1p0, Side::Source) {
        Ok(p) => p,
        Err(v) => return v,
    };
    let translated = match load(&output, Dialect::V0p7, Side::Translated) {
        Ok(p) => p,
        Err(v) => return v,
    };

    let (a, source_steps) = match run(&source, Dialect::V1p0, init, cfg) {
        Ok(r) => r,
        Err(message) => {
            return Verdict::Error {
                side: Side::Source,
                message,
            }
        }
    };
    let (b, translated_steps) = match run(&translated, Dialect::V0p7, init, cfg) {
        Ok(r) => r,
        Err(message) => {
            return Verdict::Error {
                side: Side::Translated,
                message,
            }
        }
    };

    let mut excluded = BTreeSet::new();
    if !translation.report.scratch_uses.is_empty() {
        excluded.extend(
            opts.scratch_regs
                .iter()
                .filter_map(|r| scalar_reg_index(r))
                .map(|i| i as u8),
        );
    }
    vset_destinations(&source, &mut excluded);
    vset_destinations(&translated, &mut excluded);

    let mut diffs = Vec::new();
    for r in 1..32u8 {
        if excluded.contains(&r) {
            continue;
        }
        let (x, y) = (a.state.read_x(r), b.state.read_x(r));
        if x != y {
            diffs.push(format!("x{r}: {x:#x} (v1.0) vs {y:#x} (v0.7.1)"));
        }
    }
    if let Some(at) = a
        .state
        .memory
        .iter()
        .zip(&b.state.memory)
        .position(|(x, y)| x != y)
    {
        let count = a
            .state
            .memory
            .iter()
            .zip(&b.state.memory)
            .filter(|(x, y)| x != y)
            .count();
        diffs.push(format!(
            "memory differs in {count} bytes, first at {at:#x}: {:#04x} (v1.0) vs {:#04x} (v0.7.1)",
            a.state.memory[at], b.state.memory[at]
        ));
    }
    if diffs.is_empty() {
        Verdict::Match {
            source_steps,
            translated_steps,
        }
    } else {
        Verdict::Mismatch(diffs)
    }
}
