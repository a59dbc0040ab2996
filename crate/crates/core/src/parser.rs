//! GAS-syntax line classifier.
//!
//! Only vector instructions, the `vset*` family, CSR accesses and `li` are
//! decoded. Every other line (scalar code, directives, comments, blank
//! lines) is kept as opaque raw text so that emission can reproduce it
//! byte for byte.

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::asm_model::{
    float_reg_index, scalar_reg_index, vector_reg_index, Instruction, LineContent, Lmul, Mode,
    Operand, Policy, Sew, SourceLine, VtypeTokens,
};
use crate::isa::{self, Kind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{source_name}:{line}: malformed instruction: {reason}")]
    MalformedInstruction {
        source_name: String,
        line: usize,
        reason: String,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::MalformedInstruction { line, .. } => *line,
        }
    }

    pub fn reason(&self) -> &str {
        match self {
            ParseError::MalformedInstruction { reason, .. } => reason,
        }
    }
}

/// A malformed recognized line that was degraded to opaque in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssemblyDocument {
    pub source_name: String,
    pub lines: Vec<SourceLine>,
    /// Every line break in the input was CRLF.
    pub crlf: bool,
    pub malformed: Vec<ParseDiagnostic>,
}

impl AssemblyDocument {
    pub fn line(&self, index: usize) -> Option<&SourceLine> {
        index.checked_sub(1).and_then(|i| self.lines.get(i))
    }
}

/// Result of classifying a single line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Instruction(Instruction),
    ArchAttribute(String),
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineError {
    #[error("{0}")]
    Malformed(String),
    /// An integer literal outside the signed 64-bit range.
    #[error("literal out of range")]
    LiteralTooLarge,
}

static LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*([A-Za-z_.$0-9][A-Za-z0-9_.$]*):").unwrap());
static ARCH_ATTR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"^\.attribute\s+(arch|5)\s*,\s*"([^"]*)"\s*$"#).unwrap());
static INT_LITERAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^([+-])?(0x[0-9a-f]+|0b[01]+|[0-9]+)$").unwrap());
static MEM_REF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(.*)\(\s*([A-Za-z0-9]+)\s*\)$").unwrap());

/// Label definitions (`name:`) at the start of a raw line, in order.
pub fn label_definitions(raw: &str) -> Vec<String> {
    let mut labels = Vec::new();
    let mut rest = raw;
    while let Some(cap) = LABEL.captures(rest) {
        labels.push(cap[1].to_string());
        rest = &rest[cap.get(0).unwrap().end()..];
    }
    labels
}

/// Splits a line into (label prefix, body, trailing comment).
fn split_line(raw: &str) -> (Option<String>, &str, Option<String>) {
    let line = raw.strip_suffix('\r').unwrap_or(raw);
    let (code, comment) = match line.find('#') {
        Some(pos) => (&line[..pos], Some(line[pos..].trim_end().to_string())),
        None => (line, None),
    };
    let mut rest = code;
    let mut labels: Vec<&str> = Vec::new();
    while let Some(cap) = LABEL.captures(rest) {
        let m = cap.get(0).unwrap();
        labels.push(rest[..m.end()].trim());
        rest = &rest[m.end()..];
    }
    let label = (!labels.is_empty()).then(|| labels.join(" "));
    (label, rest.trim(), comment)
}

fn split_operands(text: &str) -> Vec<&str> {
    if text.trim().is_empty() {
        return Vec::new();
    }
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(text[start..].trim());
    parts
}

/// Parses an integer literal; `Ok(None)` when the token is not a literal.
pub fn parse_int(token: &str) -> Result<Option<i64>, LineError> {
    let Some(cap) = INT_LITERAL.captures(token) else {
        return Ok(None);
    };
    let negative = cap.get(1).is_some_and(|s| s.as_str() == "-");
    let digits = cap[2].to_ascii_lowercase();
    let magnitude = if let Some(hex) = digits.strip_prefix("0x") {
        u128::from_str_radix(hex, 16)
    } else if let Some(bin) = digits.strip_prefix("0b") {
        u128::from_str_radix(bin, 2)
    } else {
        digits.parse::<u128>()
    }
    .map_err(|_| LineError::LiteralTooLarge)?;
    let value = if negative {
        -(i128::try_from(magnitude).map_err(|_| LineError::LiteralTooLarge)?)
    } else {
        i128::try_from(magnitude).map_err(|_| LineError::LiteralTooLarge)?
    };
    i64::try_from(value)
        .map(Some)
        .map_err(|_| LineError::LiteralTooLarge)
}

/// Context-free operand classification.
fn classify(token: &str) -> Result<Operand, LineError> {
    let lower = token.to_ascii_lowercase();
    if let Some(v) = parse_int(token)? {
        return Ok(Operand::Immediate(v));
    }
    if scalar_reg_index(&lower).is_some() {
        return Ok(Operand::ScalarReg(lower));
    }
    if vector_reg_index(&lower).is_some() {
        return Ok(Operand::VectorReg(lower));
    }
    if float_reg_index(&lower).is_some() {
        return Ok(Operand::FloatReg(lower));
    }
    if let Some(cap) = MEM_REF.captures(token) {
        let base = cap[2].to_ascii_lowercase();
        if scalar_reg_index(&base).is_some() {
            let disp = cap[1].trim();
            if disp.is_empty() {
                return Ok(Operand::MemRef {
                    base,
                    displacement: 0,
                });
            }
            if let Some(d) = parse_int(disp)? {
                return Ok(Operand::MemRef {
                    base,
                    displacement: d,
                });
            }
        }
    }
    if lower.len() > 1 && lower.starts_with('v') && lower[1..].bytes().all(|b| b.is_ascii_digit()) {
        return Err(LineError::Malformed(format!(
            "vector register out of range: {token}"
        )));
    }
    Ok(Operand::Symbol(token.to_string()))
}

fn parse_vtype(tokens: &[&str]) -> Result<VtypeTokens, LineError> {
    let bad = |msg: String| Err(LineError::Malformed(msg));
    let [sew, lmul, policies @ ..] = tokens else {
        return bad("vtype needs an element width and an LMUL".into());
    };
    let sew_l = sew.to_ascii_lowercase();
    let Some(sew) = Sew::from_token(&sew_l) else {
        return bad(format!("invalid element width `{sew}`"));
    };
    let lmul_l = lmul.to_ascii_lowercase();
    let Some(lmul) = Lmul::from_token(&lmul_l) else {
        return bad(format!("invalid LMUL `{lmul}`"));
    };
    let mut pol = Vec::with_capacity(policies.len());
    for p in policies {
        match Policy::from_token(&p.to_ascii_lowercase()) {
            Some(p) => pol.push(p),
            None => return bad(format!("invalid policy token `{p}`")),
        }
    }
    VtypeTokens::new(sew, lmul, pol).map_err(LineError::Malformed)
}

fn check_kind(kind: Kind, op: &Operand, raw: &str) -> Result<(), LineError> {
    let ok = match kind {
        Kind::V => matches!(op, Operand::VectorReg(_)),
        Kind::V0 => matches!(op, Operand::VectorReg(r) if r == "v0"),
        Kind::X => matches!(op, Operand::ScalarReg(_)),
        Kind::F => matches!(op, Operand::FloatReg(_)),
        Kind::I => matches!(op, Operand::Immediate(_)),
        Kind::M => matches!(
            op,
            Operand::MemRef {
                displacement: 0,
                ..
            }
        ),
        Kind::Mem => matches!(op, Operand::MemRef { .. }),
        Kind::T => matches!(op, Operand::Vtype(_)),
        Kind::C => matches!(op, Operand::CsrName(_)),
        Kind::ImmOrSym => matches!(op, Operand::Immediate(_) | Operand::Symbol(_)),
        Kind::MergeSrc => matches!(
            op,
            Operand::VectorReg(_)
                | Operand::ScalarReg(_)
                | Operand::Immediate(_)
                | Operand::FloatReg(_)
        ),
    };
    if ok {
        Ok(())
    } else {
        Err(LineError::Malformed(format!(
            "operand `{raw}` is not a valid {kind:?} operand"
        )))
    }
}

/// Tokenizes `mnemonic operands...` into an instruction, validating it
/// against `shape` when given.
fn decode_body(
    mnemonic: &str,
    operand_text: &str,
    shape: Option<&isa::Shape>,
    vector: bool,
) -> Result<Instruction, LineError> {
    let mut raw_ops = split_operands(operand_text);
    if raw_ops.iter().any(|o| o.is_empty()) {
        return Err(LineError::Malformed("empty operand".into()));
    }
    let mut mask = false;
    if raw_ops
        .last()
        .is_some_and(|o| o.eq_ignore_ascii_case("v0.t"))
    {
        raw_ops.pop();
        mask = true;
    }
    if raw_ops.iter().any(|o| o.eq_ignore_ascii_case("v0.t")) {
        return Err(LineError::Malformed(
            "mask operand must be the last operand".into(),
        ));
    }

    let mut operands = Vec::with_capacity(raw_ops.len());
    let is_vtype_insn = mnemonic == "vsetvli" || mnemonic == "vsetivli";
    let csr_pos = match mnemonic {
        "csrr" | "csrrw" | "csrrs" | "csrrc" => Some(1),
        "csrw" => Some(0),
        _ => None,
    };
    for (i, tok) in raw_ops.iter().enumerate() {
        if is_vtype_insn && i == 2 {
            operands.push(Operand::Vtype(parse_vtype(&raw_ops[2..])?));
            break;
        }
        if csr_pos == Some(i) {
            let ok = tok.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_');
            if !ok || tok.is_empty() {
                return Err(LineError::Malformed(format!("invalid CSR name `{tok}`")));
            }
            operands.push(Operand::CsrName(tok.to_ascii_lowercase()));
            continue;
        }
        operands.push(classify(tok)?);
    }

    if let Some(shape) = shape {
        if mask && !shape.maskable {
            return Err(LineError::Malformed(format!(
                "`{mnemonic}` does not take a mask operand"
            )));
        }
        if operands.len() != shape.kinds.len() {
            return Err(LineError::Malformed(format!(
                "`{mnemonic}` expects {} operands, found {}",
                shape.kinds.len(),
                operands.len()
            )));
        }
        for ((kind, op), raw) in shape.kinds.iter().zip(&operands).zip(&raw_ops) {
            check_kind(*kind, op, raw)?;
        }
    } else if vector {
        for (op, raw) in operands.iter().zip(&raw_ops) {
            if matches!(
                op,
                Operand::Symbol(_) | Operand::CsrName(_) | Operand::Vtype(_)
            ) {
                return Err(LineError::Malformed(format!(
                    "unexpected operand `{raw}` for `{mnemonic}`"
                )));
            }
        }
    }

    Ok(Instruction {
        mnemonic: mnemonic.to_string(),
        operands,
        mask,
        label_prefix: None,
        comment_suffix: None,
    })
}

/// Classifies a single line (no newline).
pub fn parse_instruction(line_text: &str) -> Result<Parsed, LineError> {
    let trimmed = line_text.trim_start();
    if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("//") {
        return Ok(Parsed::Opaque);
    }
    let (label, body, comment) = split_line(line_text);
    if body.is_empty() {
        return Ok(Parsed::Opaque);
    }
    if body.starts_with('.') {
        if label.is_none() {
            if let Some(cap) = ARCH_ATTR.captures(body) {
                return Ok(Parsed::ArchAttribute(cap[2].to_string()));
            }
        }
        return Ok(Parsed::Opaque);
    }
    let (mnemonic, operand_text) = match body.find(char::is_whitespace) {
        Some(pos) => (&body[..pos], &body[pos..]),
        None => (body, ""),
    };
    let mnemonic = mnemonic.to_ascii_lowercase();
    if !isa::is_recognized(&mnemonic) {
        return Ok(Parsed::Opaque);
    }
    let shape = isa::shape_of(&mnemonic);
    let vector = isa::is_vector_mnemonic(&mnemonic);
    match decode_body(&mnemonic, operand_text, shape.as_ref(), vector) {
        Ok(mut instr) => {
            instr.label_prefix = label;
            instr.comment_suffix = comment;
            Ok(Parsed::Instruction(instr))
        }
        Err(LineError::LiteralTooLarge) => Ok(Parsed::Opaque),
        Err(e) => Err(e),
    }
}

/// Decodes any instruction line regardless of mnemonic, without shape
/// checks. Used by the interpreter for scalar code the translator leaves
/// opaque. Returns `Ok(None)` for lines holding no instruction.
pub fn decode_any(line_text: &str) -> Result<Option<Instruction>, LineError> {
    let trimmed = line_text.trim_start();
    if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("//") {
        return Ok(None);
    }
    let (label, body, comment) = split_line(line_text);
    if body.is_empty() || body.starts_with('.') {
        return Ok(None);
    }
    let (mnemonic, operand_text) = match body.find(char::is_whitespace) {
        Some(pos) => (&body[..pos], &body[pos..]),
        None => (body, ""),
    };
    let mnemonic = mnemonic.to_ascii_lowercase();
    let mut instr = decode_body(&mnemonic, operand_text, None, false)?;
    instr.label_prefix = label;
    instr.comment_suffix = comment;
    Ok(Some(instr))
}

/// Splits `text` into lines and classifies each.
pub fn parse_document(
    text: &str,
    source_name: &str,
    mode: Mode,
) -> Result<AssemblyDocument, ParseError> {
    let newlines = text.matches('\n').count();
    let crlf = newlines > 0 && text.matches("\r\n").count() == newlines;
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = Vec::new();
    let mut malformed = Vec::new();
    if !text.is_empty() {
        for (i, piece) in body.split('\n').enumerate() {
            let index = i + 1;
            let raw = if crlf {
                piece.strip_suffix('\r').unwrap_or(piece)
            } else {
                piece
            };
            let content = match parse_instruction(raw) {
                Ok(Parsed::Instruction(instr)) => LineContent::Decoded(instr),
                Ok(Parsed::ArchAttribute(value)) => LineContent::ArchAttribute {
                    value,
                    retarget: false,
                },
                Ok(Parsed::Opaque) | Err(LineError::LiteralTooLarge) => LineContent::Opaque,
                Err(LineError::Malformed(reason)) => match mode {
                    Mode::Strict => {
                        return Err(ParseError::MalformedInstruction {
                            source_name: source_name.to_string(),
                            line: index,
                            reason,
                        })
                    }
                    Mode::Lenient => {
                        malformed.push(ParseDiagnostic {
                            line: index,
                            reason,
                        });
                        LineContent::Opaque
                    }
                },
            };
            lines.push(SourceLine {
                index,
                raw_text: raw.to_string(),
                content,
            });
        }
    }
    Ok(AssemblyDocument {
        source_name: source_name.to_string(),
        lines,
        crlf,
        malformed,
    })
}
