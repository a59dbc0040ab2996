//! The v1.0 to v0.7.1 rule table.
//!
//! Rule classes are tried in a fixed order for every decoded instruction:
//! configuration, renames, EEW-typed memory, pseudo-instruction expansion,
//! whole-register operations, known rejections, and finally pass-through.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::asm_model::{
    scalar_reg_index, Instruction, LineContent, Mode, Operand, RuleId, SourceLine, VtypeTokens,
};
use crate::parser::AssemblyDocument;
use crate::report::TranslationReport;
use crate::vconfig::{StateAnnotation, VConfigState};

pub mod rules {
    pub const STRIP_POLICY: &str = "strip-policy";
    pub const VSETIVLI_EXPAND: &str = "vsetivli-expand";
    pub const RENAME_MASK_QUERY: &str = "rename-mask-query";
    pub const RENAME_MASK_LOGICAL: &str = "rename-mask-logical";
    pub const RENAME_FP_REDUCTION: &str = "rename-fp-reduction";
    pub const RENAME_NARROWING: &str = "rename-narrowing";
    pub const RENAME_FP_NARROWING_CONVERT: &str = "rename-fp-narrowing-convert";
    pub const FAULT_ONLY_FIRST: &str = "fault-only-first";
    pub const UNIT_STRIDE_MEMORY: &str = "unit-stride-memory";
    pub const STRIDED_MEMORY: &str = "strided-memory";
    pub const INDEXED_MEMORY: &str = "indexed-memory";
    pub const SEGMENT_MEMORY: &str = "segment-memory";
    pub const PSEUDO_VNEG: &str = "pseudo-vneg";
    pub const PSEUDO_VNCVT: &str = "pseudo-vncvt";
    pub const PSEUDO_VMMV: &str = "pseudo-vmmv";
    pub const WHOLE_REGISTER_MOVE: &str = "whole-register-move";
    pub const WHOLE_REGISTER_LOAD: &str = "whole-register-load";
    pub const WHOLE_REGISTER_STORE: &str = "whole-register-store";
    pub const ARCH_ATTRIBUTE: &str = "arch-attribute";

    /// Every rule id the translator can report.
    pub const ALL: [&str; 19] = [
        STRIP_POLICY,
        VSETIVLI_EXPAND,
        RENAME_MASK_QUERY,
        RENAME_MASK_LOGICAL,
        RENAME_FP_REDUCTION,
        RENAME_NARROWING,
        RENAME_FP_NARROWING_CONVERT,
        FAULT_ONLY_FIRST,
        UNIT_STRIDE_MEMORY,
        STRIDED_MEMORY,
        INDEXED_MEMORY,
        SEGMENT_MEMORY,
        PSEUDO_VNEG,
        PSEUDO_VNCVT,
        PSEUDO_VMMV,
        WHOLE_REGISTER_MOVE,
        WHOLE_REGISTER_LOAD,
        WHOLE_REGISTER_STORE,
        ARCH_ATTRIBUTE,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagnosticCode {
    FractionalLmul,
    EewSewMismatch,
    UnknownStateStrict,
    NoV07Equivalent,
    WholeRegisterNeedsFlag,
    VcsrAccess,
    MalformedInstruction,
    ScratchConflict,
}

impl DiagnosticCode {
    pub const ALL: [DiagnosticCode; 8] = [
        DiagnosticCode::FractionalLmul,
        DiagnosticCode::EewSewMismatch,
        DiagnosticCode::UnknownStateStrict,
        DiagnosticCode::NoV07Equivalent,
        DiagnosticCode::WholeRegisterNeedsFlag,
        DiagnosticCode::VcsrAccess,
        DiagnosticCode::MalformedInstruction,
        DiagnosticCode::ScratchConflict,
    ];

    /// Stable identifier used in reports.
    pub fn id(self) -> &'static str {
        match self {
            DiagnosticCode::FractionalLmul => "fractional-lmul",
            DiagnosticCode::EewSewMismatch => "eew-sew-mismatch",
            DiagnosticCode::UnknownStateStrict => "unknown-state",
            DiagnosticCode::NoV07Equivalent => "no-v07-equivalent",
            DiagnosticCode::WholeRegisterNeedsFlag => "whole-register-needs-flag",
            DiagnosticCode::VcsrAccess => "vcsr-access",
            DiagnosticCode::MalformedInstruction => "malformed",
            DiagnosticCode::ScratchConflict => "scratch-conflict",
        }
    }

    pub fn from_id(id: &str) -> Option<DiagnosticCode> {
        DiagnosticCode::ALL.into_iter().find(|c| c.id() == id)
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Warning code for a translation made without a known configuration.
pub const WARN_UNKNOWN_STATE: &str = "unknown-state";
/// Warning code for an arch attribute naming an unexpected vector version.
pub const WARN_ARCH_VERSION: &str = "arch-version";
/// Warning code for `vsetvli x0, x0, ...`, which keeps vl in v1.0 but sets
/// vl to VLMAX in v0.7.1.
pub const WARN_VL_RESET: &str = "vl-reset";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptionsError {
    #[error("expected two scratch registers, got {0}")]
    ScratchCount(usize),
    #[error("`{0}` is not an integer register")]
    NotARegister(String),
    #[error("scratch register cannot be x0")]
    ZeroRegister,
    #[error("scratch registers must be distinct")]
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteOptions {
    pub mode: Mode,
    pub scratch_regs: [String; 2],
    pub expand_whole_register: bool,
    pub assume_eew_matches_sew: bool,
}

impl Default for RewriteOptions {
    fn default() -> Self {
        RewriteOptions {
            mode: Mode::Strict,
            scratch_regs: ["t5".to_string(), "t6".to_string()],
            expand_whole_register: false,
            assume_eew_matches_sew: false,
        }
    }
}

impl RewriteOptions {
    pub fn lenient() -> Self {
        RewriteOptions {
            mode: Mode::Lenient,
            ..Default::default()
        }
    }

    /// Parses a `r1,r2` scratch register list.
    pub fn parse_scratch(list: &str) -> Result<[String; 2], OptionsError> {
        let regs: Vec<String> = list
            .split(',')
            .map(|r| r.trim().to_ascii_lowercase())
            .collect();
        let [a, b]: [String; 2] = regs
            .clone()
            .try_into()
            .map_err(|_| OptionsError::ScratchCount(regs.len()))?;
        let scratch = [a, b];
        Self::check_scratch(&scratch)?;
        Ok(scratch)
    }

    fn check_scratch(regs: &[String; 2]) -> Result<(), OptionsError> {
        let mut idx = [0usize; 2];
        for (slot, r) in idx.iter_mut().zip(regs) {
            *slot = scalar_reg_index(r).ok_or_else(|| OptionsError::NotARegister(r.clone()))?;
            if *slot == 0 {
                return Err(OptionsError::ZeroRegister);
            }
        }
        if idx[0] == idx[1] {
            return Err(OptionsError::Duplicate);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), OptionsError> {
        Self::check_scratch(&self.scratch_regs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RewriteResult {
    PassThrough,
    Replace {
        instructions: Vec<Instruction>,
        rule: RuleId,
        /// Set when the translation relied on an assumption.
        warning: Option<String>,
    },
    Reject {
        code: DiagnosticCode,
        message: String,
    },
}

fn reject(code: DiagnosticCode, message: impl Into<String>) -> RewriteResult {
    RewriteResult::Reject {
        code,
        message: message.into(),
    }
}

fn replace(instructions: Vec<Instruction>, rule: RuleId) -> RewriteResult {
    RewriteResult::Replace {
        instructions,
        rule,
        warning: None,
    }
}

fn is_zero_reg(op: &Operand) -> bool {
    matches!(op, Operand::ScalarReg(r) if scalar_reg_index(r) == Some(0))
}

// ---- rule class B: renames ----

fn rename_target(mnemonic: &str) -> Option<(String, RuleId)> {
    let direct = match mnemonic {
        "vcpop.m" => Some(("vpopc.m", rules::RENAME_MASK_QUERY)),
        "vfirst.m" => Some(("vmfirst.m", rules::RENAME_MASK_QUERY)),
        "vmandn.mm" => Some(("vmandnot.mm", rules::RENAME_MASK_LOGICAL)),
        "vmorn.mm" => Some(("vmornot.mm", rules::RENAME_MASK_LOGICAL)),
        "vfredusum.vs" => Some(("vfredsum.vs", rules::RENAME_FP_REDUCTION)),
        "vfwredusum.vs" => Some(("vfwredsum.vs", rules::RENAME_FP_REDUCTION)),
        _ => None,
    };
    if let Some((target, rule)) = direct {
        return Some((target.to_string(), rule));
    }
    if let Some((base, suffix)) = mnemonic.split_once('.') {
        if matches!(base, "vnsrl" | "vnsra" | "vnclip" | "vnclipu") {
            let new_suffix = match suffix {
                "wv" => "vv",
                "wx" => "vx",
                "wi" => "vi",
                _ => return None,
            };
            return Some((format!("{base}.{new_suffix}"), rules::RENAME_NARROWING));
        }
    }
    if mnemonic.starts_with("vfncvt.") && !NO_EQUIVALENT.is_match(mnemonic) {
        if let Some(stem) = mnemonic.strip_suffix(".w") {
            return Some((format!("{stem}.v"), rules::RENAME_FP_NARROWING_CONVERT));
        }
    }
    None
}

// ---- rule class C: EEW-typed memory ----

struct MemoryRule {
    pattern: Regex,
    rule: RuleId,
    target: fn(&regex::Captures) -> String,
}

static MEMORY_RULES: LazyLock<Vec<MemoryRule>> = LazyLock::new(|| {
    let r = |p: &str| Regex::new(p).unwrap();
    vec![
        MemoryRule {
            pattern: r(r"^v(l|s)e(8|16|32|64)\.v$"),
            rule: rules::UNIT_STRIDE_MEMORY,
            target: |c| format!("v{}e.v", &c[1]),
        },
        MemoryRule {
            pattern: r(r"^vle(8|16|32|64)ff\.v$"),
            rule: rules::FAULT_ONLY_FIRST,
            target: |_| "vleff.v".to_string(),
        },
        MemoryRule {
            pattern: r(r"^v(l|s)se(8|16|32|64)\.v$"),
            rule: rules::STRIDED_MEMORY,
            target: |c| format!("v{}se.v", &c[1]),
        },
        MemoryRule {
            pattern: r(r"^vl(u|o)xei(8|16|32|64)\.v$"),
            rule: rules::INDEXED_MEMORY,
            target: |_| "vlxe.v".to_string(),
        },
        MemoryRule {
            pattern: r(r"^vs(u|o)xei(8|16|32|64)\.v$"),
            rule: rules::INDEXED_MEMORY,
            target: |c| {
                if &c[1] == "u" {
                    "vsuxe.v".to_string()
                } else {
                    "vsxe.v".to_string()
                }
            },
        },
        MemoryRule {
            pattern: r(r"^v(l|s)(s?)seg([2-8])e(8|16|32|64)\.v$"),
            rule: rules::SEGMENT_MEMORY,
            target: |c| format!("v{}{}seg{}e.v", &c[1], &c[2], &c[3]),
        },
    ]
});

static EEW_DIGITS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"e(?:i)?(8|16|32|64)(?:ff)?\.v$").unwrap());

fn memory_target(mnemonic: &str) -> Option<(String, RuleId, u32)> {
    for rule in MEMORY_RULES.iter() {
        if let Some(c) = rule.pattern.captures(mnemonic) {
            let eew = EEW_DIGITS.captures(mnemonic)?[1].parse().ok()?;
            return Some(((rule.target)(&c), rule.rule, eew));
        }
    }
    None
}

// ---- rule class E: whole-register operations ----

static WHOLE_MOVE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^vmv([1248])r\.v$").unwrap());
static WHOLE_LOAD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^vl([1248])re?(8|16|32|64)?\.v$").unwrap());
static WHOLE_STORE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^vs([1248])r\.v$").unwrap());

enum WholeKind {
    Move,
    Load,
    Store,
}

fn whole_register(mnemonic: &str) -> Option<(WholeKind, u32)> {
    let (kind, caps) = if let Some(c) = WHOLE_MOVE.captures(mnemonic) {
        (WholeKind::Move, c)
    } else if let Some(c) = WHOLE_LOAD.captures(mnemonic) {
        (WholeKind::Load, c)
    } else {
        (WholeKind::Store, WHOLE_STORE.captures(mnemonic)?)
    };
    Some((kind, caps[1].parse().ok()?))
}

// ---- rule class F: no equivalent ----

static NO_EQUIVALENT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(v[zs]ext\.vf[248]|vrgatherei16\.vv|v[ls]m\.v|v[ls]e1\.v|vlseg[2-8]e(8|16|32|64)ff\.v|v[ls][uo]xseg[2-8]ei(8|16|32|64)\.v|vf[wn]?cvt\.(rtz|rod)\..*|vfrsqrt7\.v|vfrec7\.v)$",
    )
    .unwrap()
});

/// True when `mnemonic` only exists in the v1.0 dialect, i.e. the rewriter
/// would translate or reject it.
pub fn is_v1_only_mnemonic(mnemonic: &str) -> bool {
    matches!(mnemonic, "vsetivli" | "vneg.v" | "vncvt.x.x.w" | "vmmv.m")
        || rename_target(mnemonic).is_some()
        || memory_target(mnemonic).is_some()
        || whole_register(mnemonic).is_some()
        || NO_EQUIVALENT.is_match(mnemonic)
}

/// Attaches the original label to the first replacement and the original
/// comment to the last.
fn carry_decorations(original: &Instruction, mut seq: Vec<Instruction>) -> Vec<Instruction> {
    if let Some(first) = seq.first_mut() {
        first.label_prefix = original.label_prefix.clone();
    }
    if let Some(last) = seq.last_mut() {
        last.comment_suffix = original.comment_suffix.clone();
    }
    seq
}

fn uses_scratch(instr: &Instruction, opts: &RewriteOptions) -> Option<String> {
    let scratch: Vec<usize> = opts
        .scratch_regs
        .iter()
        .filter_map(|r| scalar_reg_index(r))
        .collect();
    instr
        .scalar_registers()
        .find(|r| scalar_reg_index(r).is_some_and(|i| scratch.contains(&i)))
        .map(str::to_string)
}

fn rewrite_config(instr: &Instruction, opts: &RewriteOptions) -> RewriteResult {
    let (Some(rd), Some(src), Some(Operand::Vtype(vtype))) = (
        instr.operands.first(),
        instr.operands.get(1),
        instr.operands.get(2),
    ) else {
        return reject(DiagnosticCode::MalformedInstruction, "bad vsetvli operands");
    };
    if vtype.lmul.is_fractional() {
        return reject(
            DiagnosticCode::FractionalLmul,
            format!(
                "fractional LMUL `{}` has no v0.7.1 encoding",
                vtype.lmul.token()
            ),
        );
    }
    let stripped = Operand::Vtype(VtypeTokens::without_policies(vtype));
    if instr.mnemonic == "vsetvli" {
        if vtype.policies.is_empty() {
            return RewriteResult::PassThrough;
        }
        let out = Instruction::new("vsetvli", vec![rd.clone(), src.clone(), stripped]);
        return replace(carry_decorations(instr, vec![out]), rules::STRIP_POLICY);
    }

    // vsetivli: materialize the immediate AVL in a register.
    let avl_reg = if is_zero_reg(rd) {
        if let Some(r) = uses_scratch(instr, opts) {
            return reject(
                DiagnosticCode::ScratchConflict,
                format!("scratch register `{r}` is an operand of the instruction"),
            );
        }
        Operand::ScalarReg(opts.scratch_regs[0].clone())
    } else {
        rd.clone()
    };
    let seq = vec![
        Instruction::new("li", vec![avl_reg.clone(), src.clone()]),
        Instruction::new("vsetvli", vec![rd.clone(), avl_reg, stripped]),
    ];
    replace(carry_decorations(instr, seq), rules::VSETIVLI_EXPAND)
}

fn rewrite_memory(
    instr: &Instruction,
    target: String,
    rule: RuleId,
    eew: u32,
    state: VConfigState,
    opts: &RewriteOptions,
) -> RewriteResult {
    let warning = match state {
        VConfigState::Known(cfg) if cfg.sew.bits() == eew => None,
        VConfigState::Known(cfg) => {
            return reject(
                DiagnosticCode::EewSewMismatch,
                format!(
                    "`{}` uses EEW={eew} but SEW={} is in effect",
                    instr.mnemonic,
                    cfg.sew.bits()
                ),
            )
        }
        VConfigState::Unknown => {
            if opts.mode == Mode::Strict && !opts.assume_eew_matches_sew {
                return reject(
                    DiagnosticCode::UnknownStateStrict,
                    format!(
                        "vector configuration unknown before `{}`; cannot confirm EEW={eew} matches SEW",
                        instr.mnemonic
                    ),
                );
            }
            Some(format!(
                "vector configuration unknown before `{}`; assumed SEW={eew}",
                instr.mnemonic
            ))
        }
    };
    RewriteResult::Replace {
        instructions: carry_decorations(instr, vec![instr.renamed(&target)]),
        rule,
        warning,
    }
}

fn rewrite_pseudo(instr: &Instruction) -> Option<RewriteResult> {
    let [vd, vs] = instr.operands.as_slice() else {
        return None;
    };
    let zero = Operand::scalar("x0");
    let (out, rule) = match instr.mnemonic.as_str() {
        "vneg.v" => (
            Instruction::new("vrsub.vx", vec![vd.clone(), vs.clone(), zero]),
            rules::PSEUDO_VNEG,
        ),
        "vncvt.x.x.w" => (
            Instruction::new("vnsrl.vx", vec![vd.clone(), vs.clone(), zero]),
            rules::PSEUDO_VNCVT,
        ),
        "vmmv.m" => (
            Instruction::new("vmand.mm", vec![vd.clone(), vs.clone(), vs.clone()]),
            rules::PSEUDO_VMMV,
        ),
        _ => return None,
    };
    Some(replace(
        carry_decorations(instr, vec![out.masked(instr.mask)]),
        rule,
    ))
}

fn rewrite_whole_register(
    instr: &Instruction,
    kind: WholeKind,
    group: u32,
    opts: &RewriteOptions,
) -> RewriteResult {
    if group != 1 {
        return reject(
            DiagnosticCode::NoV07Equivalent,
            format!(
                "`{}` moves a {group}-register group; no v0.7.1 form",
                instr.mnemonic
            ),
        );
    }
    if !opts.expand_whole_register {
        return reject(
            DiagnosticCode::WholeRegisterNeedsFlag,
            format!(
                "`{}` needs --expand-whole-register to be expanded",
                instr.mnemonic
            ),
        );
    }
    if let Some(r) = uses_scratch(instr, opts) {
        return reject(
            DiagnosticCode::ScratchConflict,
            format!("scratch register `{r}` is an operand of the instruction"),
        );
    }
    let [a, b] = instr.operands.as_slice() else {
        return reject(DiagnosticCode::MalformedInstruction, "bad operands");
    };
    let (body, rule) = match kind {
        WholeKind::Move => (
            Instruction::new("vmv.v.v", vec![a.clone(), b.clone()]),
            rules::WHOLE_REGISTER_MOVE,
        ),
        WholeKind::Load => (
            Instruction::new("vle.v", vec![a.clone(), b.clone()]),
            rules::WHOLE_REGISTER_LOAD,
        ),
        WholeKind::Store => (
            Instruction::new("vse.v", vec![a.clone(), b.clone()]),
            rules::WHOLE_REGISTER_STORE,
        ),
    };
    let saved_vl = Operand::ScalarReg(opts.scratch_regs[0].clone());
    let saved_vtype = Operand::ScalarReg(opts.scratch_regs[1].clone());
    let zero = Operand::scalar("x0");
    let byte_config = VtypeTokens::new(
        crate::asm_model::Sew::E8,
        crate::asm_model::Lmul::M1,
        Vec::new(),
    )
    .expect("no policies");
    let seq = vec![
        Instruction::new(
            "csrr",
            vec![saved_vl.clone(), Operand::CsrName("vl".into())],
        ),
        Instruction::new(
            "csrr",
            vec![saved_vtype.clone(), Operand::CsrName("vtype".into())],
        ),
        Instruction::new(
            "vsetvli",
            vec![zero.clone(), zero.clone(), Operand::Vtype(byte_config)],
        ),
        body,
        Instruction::new("vsetvl", vec![zero, saved_vl, saved_vtype]),
    ];
    replace(carry_decorations(instr, seq), rule)
}

/// Translates one decoded instruction.
pub fn rewrite_instruction(
    instr: &Instruction,
    state: VConfigState,
    opts: &RewriteOptions,
) -> RewriteResult {
    let m = instr.mnemonic.as_str();

    // A. configuration
    if m == "vsetvli" || m == "vsetivli" {
        return rewrite_config(instr, opts);
    }

    // B. renames (fault-only-first goes through the memory check below)
    if let Some((target, rule)) = rename_target(m) {
        return replace(carry_decorations(instr, vec![instr.renamed(&target)]), rule);
    }

    // C. EEW-typed memory
    if let Some((target, rule, eew)) = memory_target(m) {
        return rewrite_memory(instr, target, rule, eew, state, opts);
    }

    // D. pseudo-instructions
    if let Some(result) = rewrite_pseudo(instr) {
        return result;
    }

    // E. whole-register operations
    if let Some((kind, group)) = whole_register(m) {
        return rewrite_whole_register(instr, kind, group, opts);
    }

    // F. no equivalent
    if NO_EQUIVALENT.is_match(m) {
        return reject(
            DiagnosticCode::NoV07Equivalent,
            format!("`{m}` has no v0.7.1 equivalent"),
        );
    }
    if m.starts_with("csr")
        && instr
            .operands
            .iter()
            .any(|op| matches!(op, Operand::CsrName(n) if n == "vcsr"))
    {
        return reject(
            DiagnosticCode::VcsrAccess,
            "the vcsr CSR does not exist in v0.7.1",
        );
    }

    // G. everything else
    RewriteResult::PassThrough
}

/// Checks the vector version inside an arch string. Returns `Some(true)`
/// when it names v1.0, `Some(false)` for v0.7, and an error string for any
/// other version.
fn arch_vector_version(value: &str) -> Result<bool, String> {
    static VERSION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^v(\d+)p(\d+)$").unwrap());
    let mut retarget = value.contains("v1p0");
    for part in value.split('_') {
        if let Some(c) = VERSION.captures(part) {
            match (&c[1], &c[2]) {
                ("1", "0") => retarget = true,
                ("0", "7") => {}
                (major, minor) => {
                    return Err(format!(
                        "arch attribute names vector version {major}p{minor}; left unchanged"
                    ))
                }
            }
        }
    }
    Ok(retarget)
}

fn keeps_vl(instr: &Instruction) -> bool {
    instr.mnemonic == "vsetvli"
        && instr.operands.len() == 3
        && is_zero_reg(&instr.operands[0])
        && is_zero_reg(&instr.operands[1])
}

fn flag_note(code: DiagnosticCode, message: &str) -> String {
    format!("# rvv-backport error: {}: {message}", code.id())
}

/// Applies the rule table to every decoded line of `doc`.
pub fn rewrite_document(
    doc: &AssemblyDocument,
    annotation: &StateAnnotation,
    opts: &RewriteOptions,
) -> (AssemblyDocument, TranslationReport) {
    let mut report = TranslationReport::new(&doc.source_name);
    for d in &doc.malformed {
        report.warn(d.line, DiagnosticCode::MalformedInstruction.id(), &d.reason);
    }
    let mut lines = Vec::with_capacity(doc.lines.len());
    for line in &doc.lines {
        let content = match &line.content {
            LineContent::Decoded(instr) => {
                if keeps_vl(instr) {
                    report.warn(
                        line.index,
                        WARN_VL_RESET,
                        "`vsetvli x0, x0` keeps vl in v1.0 but sets vl to VLMAX in v0.7.1",
                    );
                }
                match rewrite_instruction(instr, annotation.before(line.index), opts) {
                    RewriteResult::PassThrough => line.content.clone(),
                    RewriteResult::Replace {
                        instructions,
                        rule,
                        warning,
                    } => {
                        report.count_rule(rule);
                        if let Some(w) = warning {
                            report.warn(line.index, WARN_UNKNOWN_STATE, w);
                        }
                        let original_regs: Vec<usize> = instr
                            .scalar_registers()
                            .filter_map(scalar_reg_index)
                            .collect();
                        for reg in &opts.scratch_regs {
                            let idx = scalar_reg_index(reg);
                            let used = instructions
                                .iter()
                                .flat_map(Instruction::scalar_registers)
                                .any(|r| scalar_reg_index(r) == idx);
                            if used && !idx.is_some_and(|i| original_regs.contains(&i)) {
                                report.scratch(line.index, reg);
                            }
                        }
                        LineContent::Replaced {
                            original: instr.clone(),
                            replacement: instructions,
                            rule,
                        }
                    }
                    RewriteResult::Reject { code, message } => {
                        report.error(line.index, code.id(), &message);
                        LineContent::Flagged {
                            note: flag_note(code, &message),
                        }
                    }
                }
            }
            LineContent::ArchAttribute { value, .. } => match arch_vector_version(value) {
                Ok(true) => {
                    report.count_rule(rules::ARCH_ATTRIBUTE);
                    LineContent::ArchAttribute {
                        value: value.clone(),
                        retarget: true,
                    }
                }
                Ok(false) => line.content.clone(),
                Err(msg) => {
                    report.warn(line.index, WARN_ARCH_VERSION, msg);
                    line.content.clone()
                }
            },
            other => other.clone(),
        };
        lines.push(SourceLine {
            index: line.index,
            raw_text: line.raw_text.clone(),
            content,
        });
    }
    let out = AssemblyDocument {
        source_name: doc.source_name.clone(),
        lines,
        crlf: doc.crlf,
        malformed: doc.malformed.clone(),
    };
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm_model::{canonical_text, Lmul, Sew, VConfig};
    use crate::parser::{parse_instruction, Parsed};

    fn decode(text: &str) -> Instruction {
        match parse_instruction(text).unwrap() {
            Parsed::Instruction(i) => i,
            other => panic!("{other:?}"),
        }
    }

    fn known(sew: Sew, lmul: Lmul) -> VConfigState {
        VConfigState::Known(VConfig::new(sew, lmul))
    }

    fn rewrite(text: &str, state: VConfigState, opts: &RewriteOptions) -> RewriteResult {
        rewrite_instruction(&decode(text), state, opts)
    }

    fn texts(result: &RewriteResult) -> Vec<String> {
        match result {
            RewriteResult::Replace { instructions, .. } => {
                instructions.iter().map(canonical_text).collect()
            }
            other => panic!("expected replacement, got {other:?}"),
        }
    }

    fn code(result: &RewriteResult) -> DiagnosticCode {
        match result {
            RewriteResult::Reject { code, .. } => *code,
            other => panic!("expected reject, got {other:?}"),
        }
    }

    #[test]
    fn strips_policies() {
        let o = RewriteOptions::default();
        let r = rewrite("vsetvli t0, a0, e32, m2, ta, ma", VConfigState::Unknown, &o);
        assert_eq!(texts(&r), vec!["vsetvli t0, a0, e32, m2"]);
        assert_eq!(
            rewrite("vsetvli t0, a0, e32, m2", VConfigState::Unknown, &o),
            RewriteResult::PassThrough
        );
    }

    #[test]
    fn unit_stride_with_known_state() {
        let o = RewriteOptions::default();
        let r = rewrite("vle32.v v8, (a1)", known(Sew::E32, Lmul::M2), &o);
        assert_eq!(texts(&r), vec!["vle.v v8, (a1)"]);
        let r = rewrite("vse8.v v8, (a1), v0.t", known(Sew::E8, Lmul::M1), &o);
        assert_eq!(texts(&r), vec!["vse.v v8, (a1), v0.t"]);
    }

    #[test]
    fn renames() {
        let o = RewriteOptions::default();
        let s = VConfigState::Unknown;
        for (from, to) in [
            ("vcpop.m a0, v0", "vpopc.m a0, v0"),
            ("vfirst.m a0, v4, v0.t", "vmfirst.m a0, v4, v0.t"),
            ("vmandn.mm v1, v2, v3", "vmandnot.mm v1, v2, v3"),
            ("vmorn.mm v1, v2, v3", "vmornot.mm v1, v2, v3"),
            ("vfredusum.vs v1, v2, v3", "vfredsum.vs v1, v2, v3"),
            ("vfwredusum.vs v1, v2, v3", "vfwredsum.vs v1, v2, v3"),
            ("vnsrl.wv v1, v2, v3", "vnsrl.vv v1, v2, v3"),
            ("vnsra.wx v1, v2, a0", "vnsra.vx v1, v2, a0"),
            ("vnclip.wi v1, v2, 3", "vnclip.vi v1, v2, 3"),
            ("vnclipu.wv v1, v2, v3", "vnclipu.vv v1, v2, v3"),
            ("vfncvt.f.f.w v1, v2", "vfncvt.f.f.v v1, v2"),
            ("vfncvt.xu.f.w v1, v2", "vfncvt.xu.f.v v1, v2"),
        ] {
            assert_eq!(texts(&rewrite(from, s, &o)), vec![to], "{from}");
        }
    }

    #[test]
    fn memory_family() {
        let o = RewriteOptions::default();
        let s = known(Sew::E16, Lmul::M1);
        for (from, to) in [
            ("vlse16.v v1, (a0), a1", "vlse.v v1, (a0), a1"),
            ("vsse16.v v1, (a0), a1", "vsse.v v1, (a0), a1"),
            ("vluxei16.v v1, (a0), v2", "vlxe.v v1, (a0), v2"),
            ("vloxei16.v v1, (a0), v2", "vlxe.v v1, (a0), v2"),
            ("vsuxei16.v v1, (a0), v2", "vsuxe.v v1, (a0), v2"),
            ("vsoxei16.v v1, (a0), v2", "vsxe.v v1, (a0), v2"),
            ("vlseg3e16.v v1, (a0)", "vlseg3e.v v1, (a0)"),
            ("vsseg2e16.v v1, (a0)", "vsseg2e.v v1, (a0)"),
            ("vlsseg2e16.v v1, (a0), a1", "vlsseg2e.v v1, (a0), a1"),
            ("vle16ff.v v1, (a0)", "vleff.v v1, (a0)"),
        ] {
            assert_eq!(texts(&rewrite(from, s, &o)), vec![to], "{from}");
        }
    }

    #[test]
    fn eew_mismatch_and_unknown_state() {
        let o = RewriteOptions::default();
        let r = rewrite("vle32.v v8, (a1)", known(Sew::E16, Lmul::M1), &o);
        assert_eq!(code(&r), DiagnosticCode::EewSewMismatch);
        let r = rewrite("vle32.v v8, (a1)", VConfigState::Unknown, &o);
        assert_eq!(code(&r), DiagnosticCode::UnknownStateStrict);
        let r = rewrite("vle16ff.v v8, (a1)", known(Sew::E32, Lmul::M1), &o);
        assert_eq!(code(&r), DiagnosticCode::EewSewMismatch);

        let lenient = RewriteOptions::lenient();
        let r = rewrite("vle32.v v8, (a1)", VConfigState::Unknown, &lenient);
        assert!(matches!(
            r,
            RewriteResult::Replace {
                warning: Some(_),
                ..
            }
        ));
        let assume = RewriteOptions {
            assume_eew_matches_sew: true,
            ..Default::default()
        };
        let r = rewrite("vle32.v v8, (a1)", VConfigState::Unknown, &assume);
        assert_eq!(texts(&r), vec!["vle.v v8, (a1)"]);
        let r = rewrite("vle32.v v8, (a1)", known(Sew::E8, Lmul::M1), &assume);
        assert_eq!(code(&r), DiagnosticCode::EewSewMismatch);
    }

    #[test]
    fn fractional_rejected() {
        let o = RewriteOptions::default();
        let r = rewrite(
            "vsetvli t0, a0, e32, mf2, ta, ma",
            VConfigState::Unknown,
            &o,
        );
        assert_eq!(code(&r), DiagnosticCode::FractionalLmul);
        let r = rewrite("vsetivli t0, 3, e8, mf8", VConfigState::Unknown, &o);
        assert_eq!(code(&r), DiagnosticCode::FractionalLmul);
    }

    #[test]
    fn scalar_passes_through() {
        let o = RewriteOptions::default();
        assert_eq!(
            rewrite("li a0, 5", VConfigState::Unknown, &o),
            RewriteResult::PassThrough
        );
        assert_eq!(
            rewrite("csrr a0, vl", VConfigState::Unknown, &o),
            RewriteResult::PassThrough
        );
        assert_eq!(
            rewrite("vadd.vv v1, v2, v3", VConfigState::Unknown, &o),
            RewriteResult::PassThrough
        );
        assert_eq!(
            rewrite("vle.v v1, (a0)", VConfigState::Unknown, &o),
            RewriteResult::PassThrough
        );
    }

    #[test]
    fn vsetivli_expansion() {
        let o = RewriteOptions::default();
        let r = rewrite("vsetivli x0, 16, e8, m1", VConfigState::Unknown, &o);
        assert_eq!(texts(&r), vec!["li t5, 16", "vsetvli x0, t5, e8, m1"]);
        let r = rewrite("vsetivli a2, 7, e64, m4, ta, mu", VConfigState::Unknown, &o);
        assert_eq!(texts(&r), vec!["li a2, 7", "vsetvli a2, a2, e64, m4"]);
        let custom = RewriteOptions {
            scratch_regs: ["s2".into(), "s3".into()],
            ..Default::default()
        };
        let r = rewrite("vsetivli zero, 4, e32, m1", VConfigState::Unknown, &custom);
        assert_eq!(texts(&r), vec!["li s2, 4", "vsetvli zero, s2, e32, m1"]);
    }

    #[test]
    fn pseudo_expansions() {
        let o = RewriteOptions::default();
        let s = VConfigState::Unknown;
        assert_eq!(
            texts(&rewrite("vneg.v v1, v2", s, &o)),
            vec!["vrsub.vx v1, v2, x0"]
        );
        assert_eq!(
            texts(&rewrite("vneg.v v1, v2, v0.t", s, &o)),
            vec!["vrsub.vx v1, v2, x0, v0.t"]
        );
        assert_eq!(
            texts(&rewrite("vncvt.x.x.w v1, v2", s, &o)),
            vec!["vnsrl.vx v1, v2, x0"]
        );
        assert_eq!(
            texts(&rewrite("vmmv.m v1, v2", s, &o)),
            vec!["vmand.mm v1, v2, v2"]
        );
    }

    #[test]
    fn whole_register() {
        let o = RewriteOptions::default();
        let s = VConfigState::Unknown;
        assert_eq!(
            code(&rewrite("vmv1r.v v1, v2", s, &o)),
            DiagnosticCode::WholeRegisterNeedsFlag
        );
        let e = RewriteOptions {
            expand_whole_register: true,
            ..Default::default()
        };
        assert_eq!(
            texts(&rewrite("vmv1r.v v1, v2", s, &e)),
            vec![
                "csrr t5, vl",
                "csrr t6, vtype",
                "vsetvli x0, x0, e8, m1",
                "vmv.v.v v1, v2",
                "vsetvl x0, t5, t6"
            ]
        );
        assert_eq!(
            texts(&rewrite("vl1re32.v v4, (a0)", s, &e))[3],
            "vle.v v4, (a0)"
        );
        assert_eq!(
            texts(&rewrite("vs1r.v v4, (a0)", s, &e))[3],
            "vse.v v4, (a0)"
        );
        for m in ["vmv2r.v v2, v4", "vl4re8.v v4, (a0)", "vs8r.v v8, (a0)"] {
            assert_eq!(code(&rewrite(m, s, &e)), DiagnosticCode::NoV07Equivalent);
            assert_eq!(code(&rewrite(m, s, &o)), DiagnosticCode::NoV07Equivalent);
        }
        assert_eq!(
            code(&rewrite("vl1r.v v4, (t5)", s, &e)),
            DiagnosticCode::ScratchConflict
        );
    }

    #[test]
    fn no_equivalent_rejects() {
        let o = RewriteOptions::default();
        let s = VConfigState::Unknown;
        for m in [
            "vzext.vf2 v1, v2",
            "vsext.vf8 v1, v2",
            "vrgatherei16.vv v1, v2, v3",
            "vlm.v v0, (a0)",
            "vfncvt.rtz.x.f.w v1, v2",
            "vfcvt.rtz.xu.f.v v1, v2",
            "vfrec7.v v1, v2",
        ] {
            assert_eq!(
                code(&rewrite(m, s, &o)),
                DiagnosticCode::NoV07Equivalent,
                "{m}"
            );
        }
        assert_eq!(
            code(&rewrite("csrr a0, vcsr", s, &o)),
            DiagnosticCode::VcsrAccess
        );
        assert_eq!(
            code(&rewrite("csrw vcsr, a0", s, &o)),
            DiagnosticCode::VcsrAccess
        );
    }

    #[test]
    fn decorations_follow_first_and_last() {
        let o = RewriteOptions::default();
        let r = rewrite(
            "L1: vsetivli x0, 4, e8, m1 # setup",
            VConfigState::Unknown,
            &o,
        );
        assert_eq!(
            texts(&r),
            vec!["L1: li t5, 4", "vsetvli x0, t5, e8, m1 # setup"]
        );
    }

    #[test]
    fn v1_only_list() {
        for m in [
            "vle32.v",
            "vsetivli",
            "vcpop.m",
            "vnsrl.wx",
            "vmv1r.v",
            "vzext.vf2",
            "vneg.v",
            "vluxei8.v",
        ] {
            assert!(is_v1_only_mnemonic(m), "{m}");
        }
        for m in [
            "vle.v", "vsetvli", "vpopc.m", "vnsrl.vx", "vadd.vv", "vlxe.v", "vrsub.vx",
        ] {
            assert!(!is_v1_only_mnemonic(m), "{m}");
        }
    }

    #[test]
    fn scratch_option_parsing() {
        assert_eq!(
            RewriteOptions::parse_scratch("s2, s3").unwrap(),
            ["s2".to_string(), "s3".to_string()]
        );
        assert_eq!(
            RewriteOptions::parse_scratch("t5"),
            Err(OptionsError::ScratchCount(1))
        );
        assert_eq!(
            RewriteOptions::parse_scratch("x0,t6"),
            Err(OptionsError::ZeroRegister)
        );
        assert_eq!(
            RewriteOptions::parse_scratch("t6,x31"),
            Err(OptionsError::Duplicate)
        );
        assert!(matches!(
            RewriteOptions::parse_scratch("t5,q1"),
            Err(OptionsError::NotARegister(_))
        ));
    }

    #[test]
    fn arch_versions() {
        assert_eq!(arch_vector_version("rv64i2p1_m2p0_v1p0"), Ok(true));
        assert_eq!(arch_vector_version("rv64gcv1p0"), Ok(true));
        assert_eq!(arch_vector_version("rv64i2p1_m2p0_v0p7"), Ok(false));
        assert_eq!(arch_vector_version("rv64i2p1_m2p0"), Ok(false));
        assert!(arch_vector_version("rv64i2p1_v0p10").is_err());
    }
}
