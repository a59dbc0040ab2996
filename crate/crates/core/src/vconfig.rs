//! Forward scan computing the statically known vector configuration before
//! every line.
//!
//! No control-flow graph is built. Labels are treated as join points and
//! reset the state; calls reset it after the call; conditional branches do
//! not affect fall-through state.

use crate::asm_model::{Instruction, LineContent, Operand, SourceLine, VConfig};
use crate::parser::{decode_any, label_definitions, AssemblyDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VConfigState {
    #[default]
    Unknown,
    Known(VConfig),
}

impl VConfigState {
    pub fn known(&self) -> Option<VConfig> {
        match self {
            VConfigState::Known(c) => Some(*c),
            VConfigState::Unknown => None,
        }
    }
}

/// State in effect before each line, indexed by 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateAnnotation {
    before: Vec<VConfigState>,
}

impl StateAnnotation {
    pub fn before(&self, line: usize) -> VConfigState {
        line.checked_sub(1)
            .and_then(|i| self.before.get(i))
            .copied()
            .unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.before.len()
    }

    pub fn is_empty(&self) -> bool {
        self.before.is_empty()
    }
}

const VECTOR_CSRS: [&str; 6] = ["vl", "vtype", "vstart", "vcsr", "vxrm", "vxsat"];
const CSR_WRITES: [&str; 11] = [
    "csrw", "csrrw", "csrrs", "csrrc", "csrs", "csrc", "csrwi", "csrsi", "csrci", "csrrwi",
    "csrrsi",
];

fn is_call(instr: &Instruction) -> bool {
    match instr.mnemonic.as_str() {
        "call" | "tail" | "jalr" => true,
        // `jal label` links through ra; `jal x0, label` is a plain jump.
        "jal" => match instr.operands.as_slice() {
            [Operand::ScalarReg(rd), _] => rd != "zero" && rd != "x0",
            _ => true,
        },
        _ => false,
    }
}

fn writes_vector_csr(instr: &Instruction) -> bool {
    CSR_WRITES.contains(&instr.mnemonic.as_str())
        && instr.operands.iter().any(|op| match op {
            Operand::CsrName(n) | Operand::Symbol(n) => VECTOR_CSRS.contains(&n.as_str()),
            _ => false,
        })
}

/// State after executing a decoded or opaque instruction.
fn transfer(state: VConfigState, instr: &Instruction) -> VConfigState {
    match instr.mnemonic.as_str() {
        "vsetvli" | "vsetivli" => match instr.operands.get(2) {
            Some(Operand::Vtype(vt)) => VConfigState::Known(vt.config()),
            _ => VConfigState::Unknown,
        },
        "vsetvl" => VConfigState::Unknown,
        _ if is_call(instr) || writes_vector_csr(instr) => VConfigState::Unknown,
        _ => state,
    }
}

fn has_label(line: &SourceLine) -> bool {
    if let LineContent::Decoded(i) = &line.content {
        if i.label_prefix.is_some() {
            return true;
        }
    }
    !label_definitions(&line.raw_text).is_empty()
}

/// Computes the configuration state before every line of `doc`.
pub fn track(doc: &AssemblyDocument) -> StateAnnotation {
    let mut state = VConfigState::Unknown;
    let mut before = Vec::with_capacity(doc.lines.len());
    for line in &doc.lines {
        if has_label(line) {
            state = VConfigState::Unknown;
        }
        before.push(state);
        state = match &line.content {
            LineContent::Decoded(instr) => transfer(state, instr),
            LineContent::Opaque => match decode_any(&line.raw_text) {
                Ok(Some(instr)) => transfer(state, &instr),
                Ok(None) => state,
                // Undecodable text: assume the worst.
                Err(_) => VConfigState::Unknown,
            },
            _ => state,
        };
    }
    StateAnnotation { before }
}
