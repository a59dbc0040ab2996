//! Shared data model: source lines, instructions, operands and vector
//! configuration descriptors.

use std::fmt;

/// The two incompatible RVV assembly dialects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dialect {
    V0p7,
    V1p0,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dialect::V0p7 => f.write_str("v0.7.1"),
            Dialect::V1p0 => f.write_str("v1.0"),
        }
    }
}

/// Strict mode refuses anything it cannot translate exactly; lenient mode
/// degrades to warnings and keeps going.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Strict,
    Lenient,
}

/// Selected element width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sew {
    E8,
    E16,
    E32,
    E64,
}

impl Sew {
    pub const ALL: [Sew; 4] = [Sew::E8, Sew::E16, Sew::E32, Sew::E64];

    pub fn bits(self) -> u32 {
        match self {
            Sew::E8 => 8,
            Sew::E16 => 16,
            Sew::E32 => 32,
            Sew::E64 => 64,
        }
    }

    pub fn bytes(self) -> usize {
        self.bits() as usize / 8
    }

    pub fn from_bits(bits: u32) -> Option<Sew> {
        match bits {
            8 => Some(Sew::E8),
            16 => Some(Sew::E16),
            32 => Some(Sew::E32),
            64 => Some(Sew::E64),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Sew::E8 => "e8",
            Sew::E16 => "e16",
            Sew::E32 => "e32",
            Sew::E64 => "e64",
        }
    }

    pub fn from_token(tok: &str) -> Option<Sew> {
        Sew::ALL.into_iter().find(|s| s.token() == tok)
    }
}

/// Register-group multiplier, integral or fractional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lmul {
    M1,
    M2,
    M4,
    M8,
    Mf2,
    Mf4,
    Mf8,
}

impl Lmul {
    pub const ALL: [Lmul; 7] = [
        Lmul::M1,
        Lmul::M2,
        Lmul::M4,
        Lmul::M8,
        Lmul::Mf2,
        Lmul::Mf4,
        Lmul::Mf8,
    ];

    pub const INTEGRAL: [Lmul; 4] = [Lmul::M1, Lmul::M2, Lmul::M4, Lmul::M8];

    pub fn token(self) -> &'static str {
        match self {
            Lmul::M1 => "m1",
            Lmul::M2 => "m2",
            Lmul::M4 => "m4",
            Lmul::M8 => "m8",
            Lmul::Mf2 => "mf2",
            Lmul::Mf4 => "mf4",
            Lmul::Mf8 => "mf8",
        }
    }

    pub fn from_token(tok: &str) -> Option<Lmul> {
        Lmul::ALL.into_iter().find(|l| l.token() == tok)
    }

    pub fn is_fractional(self) -> bool {
        matches!(self, Lmul::Mf2 | Lmul::Mf4 | Lmul::Mf8)
    }

    /// Multiplier as a (numerator, denominator) pair.
    pub fn ratio(self) -> (u32, u32) {
        match self {
            Lmul::M1 => (1, 1),
            Lmul::M2 => (2, 1),
            Lmul::M4 => (4, 1),
            Lmul::M8 => (8, 1),
            Lmul::Mf2 => (1, 2),
            Lmul::Mf4 => (1, 4),
            Lmul::Mf8 => (1, 8),
        }
    }

    /// Number of architectural registers a group occupies.
    pub fn registers(self) -> usize {
        let (num, _) = self.ratio();
        num as usize
    }
}

/// Tail and mask policy flags of the v1.0 dialect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Ta,
    Tu,
    Ma,
    Mu,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Ta, Policy::Tu, Policy::Ma, Policy::Mu];

    pub fn token(self) -> &'static str {
        match self {
            Policy::Ta => "ta",
            Policy::Tu => "tu",
            Policy::Ma => "ma",
            Policy::Mu => "mu",
        }
    }

    pub fn from_token(tok: &str) -> Option<Policy> {
        Policy::ALL.into_iter().find(|p| p.token() == tok)
    }

    fn is_tail(self) -> bool {
        matches!(self, Policy::Ta | Policy::Tu)
    }
}

/// Element width and grouping in effect for vector instructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VConfig {
    pub sew: Sew,
    pub lmul: Lmul,
}

impl VConfig {
    pub fn new(sew: Sew, lmul: Lmul) -> Self {
        VConfig { sew, lmul }
    }

    pub fn fractional(&self) -> bool {
        self.lmul.is_fractional()
    }

    /// Fractional LMUL has no encoding in the v0.7.1 dialect.
    pub fn supported_in(&self, dialect: Dialect) -> bool {
        dialect == Dialect::V1p0 || !self.fractional()
    }

    /// `VLEN / SEW * LMUL`, rounded down.
    pub fn vlmax(&self, vlen: u32) -> u32 {
        let (num, den) = self.lmul.ratio();
        vlen / self.sew.bits() * num / den
    }
}

impl fmt::Display for VConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}", self.sew.token(), self.lmul.token())
    }
}

/// The vtype operand list of `vsetvli`/`vsetivli`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VtypeTokens {
    pub sew: Sew,
    pub lmul: Lmul,
    pub policies: Vec<Policy>,
}

impl VtypeTokens {
    /// Validates the policy list: at most one tail and one mask policy.
    pub fn new(sew: Sew, lmul: Lmul, policies: Vec<Policy>) -> Result<Self, String> {
        let tails = policies.iter().filter(|p| p.is_tail()).count();
        let masks = policies.len() - tails;
        if tails > 1 || masks > 1 {
            return Err("conflicting or repeated policy tokens".to_string());
        }
        Ok(VtypeTokens {
            sew,
            lmul,
            policies,
        })
    }

    pub fn config(&self) -> VConfig {
        VConfig::new(self.sew, self.lmul)
    }

    pub fn tail_agnostic(&self) -> bool {
        self.policies.contains(&Policy::Ta)
    }

    pub fn mask_agnostic(&self) -> bool {
        self.policies.contains(&Policy::Ma)
    }

    pub fn without_policies(&self) -> VtypeTokens {
        VtypeTokens {
            sew: self.sew,
            lmul: self.lmul,
            policies: Vec::new(),
        }
    }
}

impl fmt::Display for VtypeTokens {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}", self.sew.token(), self.lmul.token())?;
        for p in &self.policies {
            write!(f, ", {}", p.token())?;
        }
        Ok(())
    }
}

pub const SCALAR_ABI_NAMES: [&str; 32] = [
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3", "a4",
    "a5", "a6", "a7", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "t3", "t4",
    "t5", "t6",
];

const FLOAT_ABI_NAMES: [&str; 32] = [
    "ft0", "ft1", "ft2", "ft3", "ft4", "ft5", "ft6", "ft7", "fs0", "fs1", "fa0", "fa1", "fa2",
    "fa3", "fa4", "fa5", "fa6", "fa7", "fs2", "fs3", "fs4", "fs5", "fs6", "fs7", "fs8", "fs9",
    "fs10", "fs11", "ft8", "ft9", "ft10", "ft11",
];

fn numbered(name: &str, prefix: char) -> Option<usize> {
    let digits = name.strip_prefix(prefix)?;
    if digits.is_empty() || digits.len() > 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.len() == 2 && digits.starts_with('0') {
        return None;
    }
    let n: usize = digits.parse().ok()?;
    (n < 32).then_some(n)
}

/// Architectural number of an integer register name (`x5`, `t0`, `fp`, ...).
pub fn scalar_reg_index(name: &str) -> Option<usize> {
    if name == "fp" {
        return Some(8);
    }
    numbered(name, 'x').or_else(|| SCALAR_ABI_NAMES.iter().position(|n| *n == name))
}

pub fn float_reg_index(name: &str) -> Option<usize> {
    numbered(name, 'f').or_else(|| FLOAT_ABI_NAMES.iter().position(|n| *n == name))
}

pub fn vector_reg_index(name: &str) -> Option<usize> {
    numbered(name, 'v')
}

/// A single decoded operand.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    ScalarReg(String),
    FloatReg(String),
    VectorReg(String),
    CsrName(String),
    Immediate(i64),
    MemRef { base: String, displacement: i64 },
    Vtype(VtypeTokens),
    Symbol(String),
}

impl Operand {
    pub fn scalar(name: &str) -> Operand {
        Operand::ScalarReg(name.to_string())
    }

    pub fn vector(name: &str) -> Operand {
        Operand::VectorReg(name.to_string())
    }

    pub fn mem(base: &str) -> Operand {
        Operand::MemRef {
            base: base.to_string(),
            displacement: 0,
        }
    }

    /// Integer register named by this operand, if any (including a memory base).
    pub fn scalar_name(&self) -> Option<&str> {
        match self {
            Operand::ScalarReg(r) => Some(r),
            Operand::MemRef { base, .. } => Some(base),
            _ => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::ScalarReg(r)
            | Operand::FloatReg(r)
            | Operand::VectorReg(r)
            | Operand::CsrName(r)
            | Operand::Symbol(r) => f.write_str(r),
            Operand::Immediate(v) => write!(f, "{v}"),
            Operand::MemRef { base, displacement } => {
                if *displacement == 0 {
                    write!(f, "({base})")
                } else {
                    write!(f, "{displacement}({base})")
                }
            }
            Operand::Vtype(v) => write!(f, "{v}"),
        }
    }
}

/// A decoded instruction. `mask` records a trailing `v0.t` operand.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub mnemonic: String,
    pub operands: Vec<Operand>,
    pub mask: bool,
    pub label_prefix: Option<String>,
    pub comment_suffix: Option<String>,
}

impl Instruction {
    pub fn new(mnemonic: &str, operands: Vec<Operand>) -> Self {
        Instruction {
            mnemonic: mnemonic.to_string(),
            operands,
            mask: false,
            label_prefix: None,
            comment_suffix: None,
        }
    }

    pub fn masked(mut self, mask: bool) -> Self {
        self.mask = mask;
        self
    }

    /// Same operands and mask under another mnemonic, without label or comment.
    pub fn renamed(&self, mnemonic: &str) -> Instruction {
        Instruction {
            mnemonic: mnemonic.to_string(),
            operands: self.operands.clone(),
            mask: self.mask,
            label_prefix: None,
            comment_suffix: None,
        }
    }

    /// Integer registers read or written by this instruction.
    pub fn scalar_registers(&self) -> impl Iterator<Item = &str> {
        self.operands.iter().filter_map(Operand::scalar_name)
    }

    /// Renders `mnemonic op1, op2, ...` without label or comment.
    pub fn body_text(&self) -> String {
        let mut out = self.mnemonic.clone();
        for (i, op) in self.operands.iter().enumerate() {
            out.push_str(if i == 0 { " " } else { ", " });
            out.push_str(&op.to_string());
        }
        if self.mask {
            out.push_str(if self.operands.is_empty() {
                " v0.t"
            } else {
                ", v0.t"
            });
        }
        out
    }
}

/// Deterministic rendering of an instruction, with its label prefix and
/// trailing comment when present.
pub fn canonical_text(instr: &Instruction) -> String {
    let mut out = String::new();
    if let Some(label) = &instr.label_prefix {
        out.push_str(label);
        out.push(' ');
    }
    out.push_str(&instr.body_text());
    if let Some(comment) = &instr.comment_suffix {
        out.push(' ');
        out.push_str(comment);
    }
    out
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&canonical_text(self))
    }
}

/// Rule identifier attached to a rewritten line.
pub type RuleId = &'static str;

/// Classification of one source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineContent {
    Opaque,
    /// An `.attribute arch, "..."` directive. `retarget` is set by the
    /// rewriter when the emitter should swap the vector version token.
    ArchAttribute {
        value: String,
        retarget: bool,
    },
    Decoded(Instruction),
    /// Replacement produced by the rewriter for a decoded line.
    Replaced {
        original: Instruction,
        replacement: Vec<Instruction>,
        rule: RuleId,
    },
    /// A rejected line kept verbatim with a diagnostic comment appended.
    Flagged {
        note: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceLine {
    pub index: usize,
    pub raw_text: String,
    pub content: LineContent,
}

impl SourceLine {
    pub fn instruction(&self) -> Option<&Instruction> {
        match &self.content {
            LineContent::Decoded(i) => Some(i),
            _ => None,
        }
    }

    /// Leading whitespace of the raw line.
    pub fn indentation(&self) -> &str {
        let trimmed = self.raw_text.trim_start_matches([' ', '\t']);
        &self.raw_text[..self.raw_text.len() - trimmed.len()]
    }
}
