//! Decoding of parsed assembly into executable operations.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::asm_model::{
    scalar_reg_index, vector_reg_index, Dialect, Instruction, LineContent, Operand, Sew,
    VtypeTokens,
};
use crate::isa;
use crate::parser::{decode_any, label_definitions, AssemblyDocument};

pub type XReg = u8;
pub type VReg = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AluOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Sll,
    Srl,
    Sra,
    Slt,
    Sltu,
    Min,
    Max,
    Minu,
    Maxu,
    AddW,
    SubW,
    MulW,
    SllW,
    SrlW,
    SraW,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarSrc {
    Reg(XReg),
    Imm(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cond {
    Eq,
    Ne,
    Lt,
    Ge,
    Ltu,
    Geu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Csr {
    Vl,
    Vtype,
    Vlenb,
}

/// Second source of a vector operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VSrc {
    V(VReg),
    X(XReg),
    I(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VBinOp {
    Add,
    Sub,
    Rsub,
    Mul,
    And,
    Or,
    Xor,
    Sll,
    Srl,
    Sra,
    Min,
    Max,
    Minu,
    Maxu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MulAddOp {
    /// vd = a * b + vd
    Macc,
    /// vd = -(a * b) + vd
    Nmsac,
    /// vd = a * vd + b
    Madd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Ltu,
    Le,
    Leu,
    Gt,
    Gtu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RedOp {
    Sum,
    And,
    Or,
    Xor,
    Max,
    Maxu,
    Min,
    Minu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskOp {
    And,
    Nand,
    Andn,
    Or,
    Nor,
    Orn,
    Xor,
    Xnor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Addressing {
    Unit,
    Strided(XReg),
    /// Byte offsets taken from a vector register; `index_eew` of `None`
    /// means the offsets are SEW wide.
    Indexed {
        index: VReg,
        index_eew: Option<Sew>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Avl {
    Reg(XReg),
    Imm(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Nop,
    Halt,
    Li {
        rd: XReg,
        imm: i64,
    },
    Alu {
        op: AluOp,
        rd: XReg,
        rs1: XReg,
        src: ScalarSrc,
    },
    Load {
        rd: XReg,
        base: XReg,
        disp: i64,
        bytes: usize,
        signed: bool,
    },
    Store {
        rs: XReg,
        base: XReg,
        disp: i64,
        bytes: usize,
    },
    Branch {
        cond: Cond,
        rs1: XReg,
        rs2: XReg,
        target: usize,
    },
    Jump {
        target: usize,
    },
    Csrr {
        rd: XReg,
        csr: Csr,
    },
    Vsetvli {
        rd: XReg,
        avl: Avl,
        vtype: VtypeTokens,
    },
    Vsetvl {
        rd: XReg,
        rs1: XReg,
        rs2: XReg,
    },
    VMem {
        store: bool,
        vreg: VReg,
        base: XReg,
        addressing: Addressing,
        /// Data element width; `None` means SEW.
        eew: Option<Sew>,
        masked: bool,
        fault_first: bool,
    },
    WholeLoad {
        vd: VReg,
        base: XReg,
        nregs: usize,
        eew: Sew,
    },
    WholeStore {
        vs: VReg,
        base: XReg,
        nregs: usize,
    },
    WholeMove {
        vd: VReg,
        vs: VReg,
        nregs: usize,
    },
    VBin {
        op: VBinOp,
        vd: VReg,
        vs2: VReg,
        src: VSrc,
        masked: bool,
    },
    VMulAdd {
        op: MulAddOp,
        vd: VReg,
        src: VSrc,
        vs2: VReg,
        masked: bool,
    },
    VCmp {
        op: CmpOp,
        vd: VReg,
        vs2: VReg,
        src: VSrc,
        masked: bool,
    },
    VMerge {
        vd: VReg,
        vs2: VReg,
        src: VSrc,
    },
    VMv {
        vd: VReg,
        src: VSrc,
    },
    VRed {
        op: RedOp,
        vd: VReg,
        vs2: VReg,
        vs1: VReg,
        masked: bool,
    },
    VPopc {
        rd: XReg,
        vs2: VReg,
        masked: bool,
    },
    VFirst {
        rd: XReg,
        vs2: VReg,
        masked: bool,
    },
    VId {
        vd: VReg,
        masked: bool,
    },
    VMvXS {
        rd: XReg,
        vs2: VReg,
    },
    VMvSX {
        vd: VReg,
        rs1: XReg,
    },
    VMaskLogic {
        op: MaskOp,
        vd: VReg,
        vs2: VReg,
        vs1: VReg,
    },
    VNarrowShift {
        arithmetic: bool,
        vd: VReg,
        vs2: VReg,
        src: VSrc,
        masked: bool,
    },
}

/// An executable program for one dialect.
#[derive(Debug, Clone)]
pub struct Program {
    pub dialect: Dialect,
    pub ops: Vec<Op>,
    /// Source line of each op.
    pub lines: Vec<usize>,
    pub labels: HashMap<String, usize>,
}

impl Program {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("line {line}: unsupported instruction `{mnemonic}`")]
    UnsupportedInstruction { line: usize, mnemonic: String },
    #[error("line {line}: invalid operands for `{mnemonic}`: {reason}")]
    InvalidOperands {
        line: usize,
        mnemonic: String,
        reason: String,
    },
    #[error("unresolved label `{0}`")]
    UnresolvedLabel(String),
    #[error("label `{0}` defined twice")]
    DuplicateLabel(String),
    #[error("line {line}: {reason}")]
    Unparseable { line: usize, reason: String },
}

impl LoadError {
    pub fn mnemonic(&self) -> Option<&str> {
        match self {
            LoadError::UnsupportedInstruction { mnemonic, .. }
            | LoadError::InvalidOperands { mnemonic, .. } => Some(mnemonic),
            _ => None,
        }
    }
}

type DecodeResult = Result<Op, Fail>;

enum Fail {
    Unsupported,
    Operands(String),
}

/// An op whose branch target is still a label name.
enum Pending {
    Ready(Op),
    Branch {
        cond: Cond,
        rs1: XReg,
        rs2: XReg,
        label: String,
    },
    Jump(String),
}

fn xreg(op: &Operand) -> Result<XReg, Fail> {
    match op {
        Operand::ScalarReg(r) => scalar_reg_index(r)
            .map(|i| i as XReg)
            .ok_or_else(|| Fail::Operands(format!("bad register {r}"))),
        other => Err(Fail::Operands(format!(
            "expected integer register, got `{other}`"
        ))),
    }
}

fn vreg(op: &Operand) -> Result<VReg, Fail> {
    match op {
        Operand::VectorReg(r) => vector_reg_index(r)
            .map(|i| i as VReg)
            .ok_or_else(|| Fail::Operands(format!("bad register {r}"))),
        other => Err(Fail::Operands(format!(
            "expected vector register, got `{other}`"
        ))),
    }
}

fn imm(op: &Operand) -> Result<i64, Fail> {
    match op {
        Operand::Immediate(v) => Ok(*v),
        other => Err(Fail::Operands(format!("expected immediate, got `{other}`"))),
    }
}

fn mem(op: &Operand) -> Result<(XReg, i64), Fail> {
    match op {
        Operand::MemRef { base, displacement } => Ok((
            scalar_reg_index(base)
                .map(|i| i as XReg)
                .ok_or_else(|| Fail::Operands(format!("bad base {base}")))?,
            *displacement,
        )),
        other => Err(Fail::Operands(format!(
            "expected memory operand, got `{other}`"
        ))),
    }
}

fn label(op: &Operand) -> Result<String, Fail> {
    match op {
        Operand::Symbol(s) => Ok(s.clone()),
        other => Err(Fail::Operands(format!("expected label, got `{other}`"))),
    }
}

fn simm5(v: i64) -> Result<i64, Fail> {
    if (-16..=15).contains(&v) {
        Ok(v)
    } else {
        Err(Fail::Operands(format!("immediate {v} outside simm5")))
    }
}

fn uimm5(v: i64) -> Result<i64, Fail> {
    if (0..=31).contains(&v) {
        Ok(v)
    } else {
        Err(Fail::Operands(format!("immediate {v} outside uimm5")))
    }
}

fn shape_check(instr: &Instruction, shape: &isa::Shape) -> Result<(), Fail> {
    if instr.operands.len() != shape.kinds.len() {
        return Err(Fail::Operands(format!(
            "expected {} operands, found {}",
            shape.kinds.len(),
            instr.operands.len()
        )));
    }
    if instr.mask && !shape.maskable {
        return Err(Fail::Operands("mask not allowed".into()));
    }
    Ok(())
}

fn decode_scalar(instr: &Instruction) -> Result<Pending, Fail> {
    let m = instr.mnemonic.as_str();
    let shape = isa::scalar_shape(m).ok_or(Fail::Unsupported)?;
    shape_check(instr, &shape)?;
    let ops = &instr.operands;
    let alu = |op: AluOp, src: ScalarSrc| -> Result<Pending, Fail> {
        Ok(Pending::Ready(Op::Alu {
            op,
            rd: xreg(&ops[0])?,
            rs1: xreg(&ops[1])?,
            src,
        }))
    };
    let reg2 = || xreg(&ops[2]).map(ScalarSrc::Reg);
    let imm2 = || imm(&ops[2]).map(ScalarSrc::Imm);
    let branch = |cond: Cond, a: &Operand, b: &Operand, l: &Operand| -> Result<Pending, Fail> {
        Ok(Pending::Branch {
            cond,
            rs1: xreg(a)?,
            rs2: xreg(b)?,
            label: label(l)?,
        })
    };
    let zero = Operand::scalar("x0");
    let pending = match m {
        "nop" => Pending::Ready(Op::Nop),
        "ret" => Pending::Ready(Op::Halt),
        "li" => Pending::Ready(Op::Li {
            rd: xreg(&ops[0])?,
            imm: imm(&ops[1])?,
        }),
        "mv" => alu(AluOp::Add, ScalarSrc::Imm(0))?,
        "sext.w" => alu(AluOp::AddW, ScalarSrc::Imm(0))?,
        "neg" | "negw" | "not" => {
            let rd = xreg(&ops[0])?;
            let rs = xreg(&ops[1])?;
            Pending::Ready(match m {
                "not" => Op::Alu {
                    op: AluOp::Xor,
                    rd,
                    rs1: rs,
                    src: ScalarSrc::Imm(-1),
                },
                _ => Op::Alu {
                    op: if m == "neg" { AluOp::Sub } else { AluOp::SubW },
                    rd,
                    rs1: 0,
                    src: ScalarSrc::Reg(rs),
                },
            })
        }
        "add" => alu(AluOp::Add, reg2()?)?,
        "sub" => alu(AluOp::Sub, reg2()?)?,
        "mul" => alu(AluOp::Mul, reg2()?)?,
        "and" => alu(AluOp::And, reg2()?)?,
        "or" => alu(AluOp::Or, reg2()?)?,
        "xor" => alu(AluOp::Xor, reg2()?)?,
        "sll" => alu(AluOp::Sll, reg2()?)?,
        "srl" => alu(AluOp::Srl, reg2()?)?,
        "sra" => alu(AluOp::Sra, reg2()?)?,
        "slt" => alu(AluOp::Slt, reg2()?)?,
        "sltu" => alu(AluOp::Sltu, reg2()?)?,
        "min" => alu(AluOp::Min, reg2()?)?,
        "max" => alu(AluOp::Max, reg2()?)?,
        "minu" => alu(AluOp::Minu, reg2()?)?,
        "maxu" => alu(AluOp::Maxu, reg2()?)?,
        "addw" => alu(AluOp::AddW, reg2()?)?,
        "subw" => alu(AluOp::SubW, reg2()?)?,
        "mulw" => alu(AluOp::MulW, reg2()?)?,
        "addi" => alu(AluOp::Add, imm2()?)?,
        "andi" => alu(AluOp::And, imm2()?)?,
        "ori" => alu(AluOp::Or, imm2()?)?,
        "xori" => alu(AluOp::Xor, imm2()?)?,
        "slti" => alu(AluOp::Slt, imm2()?)?,
        "sltiu" => alu(AluOp::Sltu, imm2()?)?,
        "addiw" => alu(AluOp::AddW, imm2()?)?,
        "slli" => alu(AluOp::Sll, imm(&ops[2]).and_then(shamt64)?)?,
        "srli" => alu(AluOp::Srl, imm(&ops[2]).and_then(shamt64)?)?,
        "srai" => alu(AluOp::Sra, imm(&ops[2]).and_then(shamt64)?)?,
        "slliw" => alu(AluOp::SllW, imm(&ops[2]).and_then(shamt32)?)?,
        "srliw" => alu(AluOp::SrlW, imm(&ops[2]).and_then(shamt32)?)?,
        "sraiw" => alu(AluOp::SraW, imm(&ops[2]).and_then(shamt32)?)?,
        "lb" | "lbu" | "lh" | "lhu" | "lw" | "lwu" | "ld" => {
            let (base, disp) = mem(&ops[1])?;
            let bytes = match &m[1..2] {
                "b" => 1,
                "h" => 2,
                "w" => 4,
                _ => 8,
            };
            Pending::Ready(Op::Load {
                rd: xreg(&ops[0])?,
                base,
                disp,
                bytes,
                signed: !m.ends_with('u'),
            })
        }
        "sb" | "sh" | "sw" | "sd" => {
            let (base, disp) = mem(&ops[1])?;
            let bytes = match m {
                "sb" => 1,
                "sh" => 2,
                "sw" => 4,
                _ => 8,
            };
            Pending::Ready(Op::Store {
                rs: xreg(&ops[0])?,
                base,
                disp,
                bytes,
            })
        }
        "beq" => branch(Cond::Eq, &ops[0], &ops[1], &ops[2])?,
        "bne" => branch(Cond::Ne, &ops[0], &ops[1], &ops[2])?,
        "blt" => branch(Cond::Lt, &ops[0], &ops[1], &ops[2])?,
        "bge" => branch(Cond::Ge, &ops[0], &ops[1], &ops[2])?,
        "bltu" => branch(Cond::Ltu, &ops[0], &ops[1], &ops[2])?,
        "bgeu" => branch(Cond::Geu, &ops[0], &ops[1], &ops[2])?,
        "bgt" => branch(Cond::Lt, &ops[1], &ops[0], &ops[2])?,
        "ble" => branch(Cond::Ge, &ops[1], &ops[0], &ops[2])?,
        "bgtu" => branch(Cond::Ltu, &ops[1], &ops[0], &ops[2])?,
        "bleu" => branch(Cond::Geu, &ops[1], &ops[0], &ops[2])?,
        "beqz" => branch(Cond::Eq, &ops[0], &zero, &ops[1])?,
        "bnez" => branch(Cond::Ne, &ops[0], &zero, &ops[1])?,
        "blez" => branch(Cond::Ge, &zero, &ops[0], &ops[1])?,
        "bgez" => branch(Cond::Ge, &ops[0], &zero, &ops[1])?,
        "bltz" => branch(Cond::Lt, &ops[0], &zero, &ops[1])?,
        "bgtz" => branch(Cond::Lt, &zero, &ops[0], &ops[1])?,
        "j" => Pending::Jump(label(&ops[0])?),
        _ => return Err(Fail::Unsupported),
    };
    Ok(pending)
}

fn shamt64(v: i64) -> Result<ScalarSrc, Fail> {
    if (0..64).contains(&v) {
        Ok(ScalarSrc::Imm(v))
    } else {
        Err(Fail::Operands(format!("shift amount {v} out of range")))
    }
}

fn shamt32(v: i64) -> Result<ScalarSrc, Fail> {
    if (0..32).contains(&v) {
        Ok(ScalarSrc::Imm(v))
    } else {
        Err(Fail::Operands(format!("shift amount {v} out of range")))
    }
}

static V1_MEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^v(l|s)(e|se|uxei|oxei)(8|16|32|64)(ff)?\.v$").unwrap());
static V07_MEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^v(l|s)(e|se|xe|uxe)(ff)?\.v$").unwrap());
static WHOLE_MEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^v(l|s)([1248])r(?:e(8|16|32|64))?\.v$").unwrap());
static WHOLE_MOVE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^vmv([1248])r\.v$").unwrap());

fn decode_memory(instr: &Instruction, dialect: Dialect) -> Option<DecodeResult> {
    let m = instr.mnemonic.as_str();
    let (store, kind, eew, ff) = if let Some(c) = V1_MEM.captures(m) {
        if dialect != Dialect::V1p0 {
            return Some(Err(Fail::Unsupported));
        }
        let eew = Sew::from_bits(c[3].parse().ok()?)?;
        (
            &c[1] == "s",
            c[2].to_string(),
            Some(eew),
            c.get(4).is_some(),
        )
    } else {
        let c = V07_MEM.captures(m)?;
        if dialect != Dialect::V0p7 {
            return Some(Err(Fail::Unsupported));
        }
        (&c[1] == "s", c[2].to_string(), None, c.get(3).is_some())
    };
    Some((|| {
        if ff && (store || kind != "e") {
            return Err(Fail::Unsupported);
        }
        if kind == "uxe" && !store {
            return Err(Fail::Unsupported);
        }
        let ops = &instr.operands;
        let want = if kind == "e" { 2 } else { 3 };
        if ops.len() != want {
            return Err(Fail::Operands(format!("expected {want} operands")));
        }
        let vr = vreg(&ops[0])?;
        let (base, disp) = mem(&ops[1])?;
        if disp != 0 {
            return Err(Fail::Operands("vector memory offset must be zero".into()));
        }
        let (addressing, data_eew) = match kind.as_str() {
            "e" => (Addressing::Unit, eew),
            "se" => (Addressing::Strided(xreg(&ops[2])?), eew),
            // Indexed: mnemonic width names the index, data is SEW.
            _ => (
                Addressing::Indexed {
                    index: vreg(&ops[2])?,
                    index_eew: eew,
                },
                None,
            ),
        };
        Ok(Op::VMem {
            store,
            vreg: vr,
            base,
            addressing,
            eew: data_eew,
            masked: instr.mask,
            fault_first: ff,
        })
    })())
}

fn vsrc(op: &Operand, suffix: &str, unsigned_imm: bool) -> Result<VSrc, Fail> {
    match suffix.chars().last() {
        Some('v') | Some('s') => vreg(op).map(VSrc::V),
        Some('x') => xreg(op).map(VSrc::X),
        Some('i') => {
            let v = imm(op)?;
            if unsigned_imm {
                uimm5(v).map(VSrc::I)
            } else {
                simm5(v).map(VSrc::I)
            }
        }
        _ => Err(Fail::Unsupported),
    }
}

fn decode_vector(instr: &Instruction, dialect: Dialect) -> DecodeResult {
    use Dialect::*;
    let m = instr.mnemonic.as_str();
    if let Some(r) = decode_memory(instr, dialect) {
        return r;
    }
    let v1 = dialect == V1p0;
    if let Some(c) = WHOLE_MEM.captures(m) {
        if !v1 {
            return Err(Fail::Unsupported);
        }
        let nregs: usize = c[2].parse().unwrap();
        let (vr, (base, _)) = (vreg(&instr.operands[0])?, mem(&instr.operands[1])?);
        return Ok(if &c[1] == "l" {
            let eew = c
                .get(3)
                .and_then(|e| Sew::from_bits(e.as_str().parse().ok()?))
                .unwrap_or(Sew::E8);
            Op::WholeLoad {
                vd: vr,
                base,
                nregs,
                eew,
            }
        } else {
            if c.get(3).is_some() {
                return Err(Fail::Unsupported);
            }
            Op::WholeStore {
                vs: vr,
                base,
                nregs,
            }
        });
    }
    if let Some(c) = WHOLE_MOVE.captures(m) {
        if !v1 {
            return Err(Fail::Unsupported);
        }
        return Ok(Op::WholeMove {
            vd: vreg(&instr.operands[0])?,
            vs: vreg(&instr.operands[1])?,
            nregs: c[1].parse().unwrap(),
        });
    }

    let ops = &instr.operands;
    let masked = instr.mask;
    let (base, suffix) = m.split_once('.').ok_or(Fail::Unsupported)?;
    let op = match (base, suffix) {
        ("vsetvli", _) | ("vsetivli", _) | ("vsetvl", _) => unreachable!(),
        ("vmv", "v.v") | ("vmv", "v.x") | ("vmv", "v.i") => Op::VMv {
            vd: vreg(&ops[0])?,
            src: vsrc(&ops[1], suffix, false)?,
        },
        ("vmv", "x.s") => Op::VMvXS {
            rd: xreg(&ops[0])?,
            vs2: vreg(&ops[1])?,
        },
        ("vmv", "s.x") => Op::VMvSX {
            vd: vreg(&ops[0])?,
            rs1: xreg(&ops[1])?,
        },
        ("vid", "v") => Op::VId {
            vd: vreg(&ops[0])?,
            masked,
        },
        ("vcpop", "m") | ("vpopc", "m") => {
            if (base == "vcpop") != v1 {
                return Err(Fail::Unsupported);
            }
            Op::VPopc {
                rd: xreg(&ops[0])?,
                vs2: vreg(&ops[1])?,
                masked,
            }
        }
        ("vfirst", "m") | ("vmfirst", "m") => {
            if (base == "vfirst") != v1 {
                return Err(Fail::Unsupported);
            }
            Op::VFirst {
                rd: xreg(&ops[0])?,
                vs2: vreg(&ops[1])?,
                masked,
            }
        }
        ("vneg", "v") if v1 => Op::VBin {
            op: VBinOp::Rsub,
            vd: vreg(&ops[0])?,
            vs2: vreg(&ops[1])?,
            src: VSrc::X(0),
            masked,
        },
        ("vncvt", "x.x.w") if v1 => Op::VNarrowShift {
            arithmetic: false,
            vd: vreg(&ops[0])?,
            vs2: vreg(&ops[1])?,
            src: VSrc::X(0),
            masked,
        },
        ("vmmv", "m") if v1 => {
            let vs = vreg(&ops[1])?;
            Op::VMaskLogic {
                op: MaskOp::And,
                vd: vreg(&ops[0])?,
                vs2: vs,
                vs1: vs,
            }
        }
        ("vmerge", "vvm") | ("vmerge", "vxm") | ("vmerge", "vim") => Op::VMerge {
            vd: vreg(&ops[0])?,
            vs2: vreg(&ops[1])?,
            src: vsrc(&ops[2], &suffix[..2], false)?,
        },
        (_, "mm") => {
            let op = match base {
                "vmand" => MaskOp::And,
                "vmnand" => MaskOp::Nand,
                "vmandn" if v1 => MaskOp::Andn,
                "vmandnot" if !v1 => MaskOp::Andn,
                "vmor" => MaskOp::Or,
                "vmnor" => MaskOp::Nor,
                "vmorn" if v1 => MaskOp::Orn,
                "vmornot" if !v1 => MaskOp::Orn,
                "vmxor" => MaskOp::Xor,
                "vmxnor" => MaskOp::Xnor,
                _ => return Err(Fail::Unsupported),
            };
            Op::VMaskLogic {
                op,
                vd: vreg(&ops[0])?,
                vs2: vreg(&ops[1])?,
                vs1: vreg(&ops[2])?,
            }
        }
        (_, "vs") => {
            let op = match base {
                "vredsum" => RedOp::Sum,
                "vredand" => RedOp::And,
                "vredor" => RedOp::Or,
                "vredxor" => RedOp::Xor,
                "vredmax" => RedOp::Max,
                "vredmaxu" => RedOp::Maxu,
                "vredmin" => RedOp::Min,
                "vredminu" => RedOp::Minu,
                _ => return Err(Fail::Unsupported),
            };
            Op::VRed {
                op,
                vd: vreg(&ops[0])?,
                vs2: vreg(&ops[1])?,
                vs1: vreg(&ops[2])?,
                masked,
            }
        }
        ("vmacc" | "vnmsac" | "vmadd", "vv" | "vx") => Op::VMulAdd {
            op: match base {
                "vmacc" => MulAddOp::Macc,
                "vnmsac" => MulAddOp::Nmsac,
                _ => MulAddOp::Madd,
            },
            vd: vreg(&ops[0])?,
            src: vsrc(&ops[1], suffix, false)?,
            vs2: vreg(&ops[2])?,
            masked,
        },
        ("vnsrl" | "vnsra", "wv" | "wx" | "wi" | "vv" | "vx" | "vi") => {
            if suffix.starts_with('w') != v1 {
                return Err(Fail::Unsupported);
            }
            Op::VNarrowShift {
                arithmetic: base == "vnsra",
                vd: vreg(&ops[0])?,
                vs2: vreg(&ops[1])?,
                src: vsrc(&ops[2], suffix, true)?,
                masked,
            }
        }
        (b, "vv" | "vx" | "vi") if b.starts_with("vms") => {
            let op = match b {
                "vmseq" => CmpOp::Eq,
                "vmsne" => CmpOp::Ne,
                "vmslt" if suffix != "vi" => CmpOp::Lt,
                "vmsltu" if suffix != "vi" => CmpOp::Ltu,
                "vmsle" => CmpOp::Le,
                "vmsleu" => CmpOp::Leu,
                "vmsgt" if suffix != "vv" => CmpOp::Gt,
                "vmsgtu" if suffix != "vv" => CmpOp::Gtu,
                _ => return Err(Fail::Unsupported),
            };
            Op::VCmp {
                op,
                vd: vreg(&ops[0])?,
                vs2: vreg(&ops[1])?,
                src: vsrc(&ops[2], suffix, false)?,
                masked,
            }
        }
        (b, "vv" | "vx" | "vi") => {
            let (op, vi_ok, vv_ok) = match b {
                "vadd" => (VBinOp::Add, true, true),
                "vsub" => (VBinOp::Sub, false, true),
                "vrsub" => (VBinOp::Rsub, true, false),
                "vmul" => (VBinOp::Mul, false, true),
                "vand" => (VBinOp::And, true, true),
                "vor" => (VBinOp::Or, true, true),
                "vxor" => (VBinOp::Xor, true, true),
                "vsll" => (VBinOp::Sll, true, true),
                "vsrl" => (VBinOp::Srl, true, true),
                "vsra" => (VBinOp::Sra, true, true),
                "vmin" => (VBinOp::Min, false, true),
                "vmax" => (VBinOp::Max, false, true),
                "vminu" => (VBinOp::Minu, false, true),
                "vmaxu" => (VBinOp::Maxu, false, true),
                _ => return Err(Fail::Unsupported),
            };
            if (suffix == "vi" && !vi_ok) || (suffix == "vv" && !vv_ok) {
                return Err(Fail::Unsupported);
            }
            let shift = matches!(op, VBinOp::Sll | VBinOp::Srl | VBinOp::Sra);
            Op::VBin {
                op,
                vd: vreg(&ops[0])?,
                vs2: vreg(&ops[1])?,
                src: vsrc(&ops[2], suffix, shift)?,
                masked,
            }
        }
        _ => return Err(Fail::Unsupported),
    };
    Ok(op)
}

fn decode_decoded(instr: &Instruction, dialect: Dialect) -> Result<Pending, Fail> {
    let m = instr.mnemonic.as_str();
    let ops = &instr.operands;
    let op = match m {
        "li" => Op::Li {
            rd: xreg(&ops[0])?,
            imm: imm(&ops[1])?,
        },
        "csrr" => {
            let Operand::CsrName(name) = &ops[1] else {
                return Err(Fail::Operands("expected CSR".into()));
            };
            let csr = match name.as_str() {
                "vl" => Csr::Vl,
                "vtype" => Csr::Vtype,
                "vlenb" if dialect == Dialect::V1p0 => Csr::Vlenb,
                _ => return Err(Fail::Unsupported),
            };
            Op::Csrr {
                rd: xreg(&ops[0])?,
                csr,
            }
        }
        "vsetvli" | "vsetivli" => {
            let Operand::Vtype(vt) = &ops[2] else {
                return Err(Fail::Operands("expected vtype".into()));
            };
            if dialect == Dialect::V0p7
                && (m == "vsetivli" || !vt.policies.is_empty() || vt.lmul.is_fractional())
            {
                return Err(Fail::Unsupported);
            }
            let avl = if m == "vsetivli" {
                let v = imm(&ops[1])?;
                if !(0..=31).contains(&v) {
                    return Err(Fail::Operands(format!("AVL {v} outside uimm5")));
                }
                Avl::Imm(v as u64)
            } else {
                Avl::Reg(xreg(&ops[1])?)
            };
            Op::Vsetvli {
                rd: xreg(&ops[0])?,
                avl,
                vtype: vt.clone(),
            }
        }
        "vsetvl" => Op::Vsetvl {
            rd: xreg(&ops[0])?,
            rs1: xreg(&ops[1])?,
            rs2: xreg(&ops[2])?,
        },
        _ if isa::is_vector_mnemonic(m) => decode_vector(instr, dialect)?,
        _ => return Err(Fail::Unsupported),
    };
    Ok(Pending::Ready(op))
}

/// Builds an executable program from a parsed document for `dialect`.
pub fn load_program(doc: &AssemblyDocument, dialect: Dialect) -> Result<Program, LoadError> {
    let mut pending: Vec<Pending> = Vec::new();
    let mut lines = Vec::new();
    let mut labels: HashMap<String, usize> = HashMap::new();
    // GAS numeric local labels may be redefined; references use `Nb`/`Nf`.
    let mut local: HashMap<String, Vec<usize>> = HashMap::new();

    for line in &doc.lines {
        for name in label_definitions(&line.raw_text) {
            let at = pending.len();
            if name.bytes().all(|b| b.is_ascii_digit()) {
                local.entry(name).or_default().push(at);
            } else if labels.insert(name.clone(), at).is_some() {
                return Err(LoadError::DuplicateLabel(name));
            }
        }
        let decoded: Vec<(Instruction, bool)> = match &line.content {
            LineContent::Decoded(i) => vec![(i.clone(), true)],
            LineContent::Replaced { replacement, .. } => {
                replacement.iter().map(|i| (i.clone(), true)).collect()
            }
            LineContent::ArchAttribute { .. } => Vec::new(),
            LineContent::Opaque => match decode_any(&line.raw_text) {
                Ok(Some(i)) => vec![(i, false)],
                Ok(None) => Vec::new(),
                Err(e) => {
                    return Err(LoadError::Unparseable {
                        line: line.index,
                        reason: e.to_string(),
                    })
                }
            },
            LineContent::Flagged { note } => {
                return Err(LoadError::Unparseable {
                    line: line.index,
                    reason: note.clone(),
                })
            }
        };
        for (instr, recognized) in decoded {
            let result = if recognized {
                decode_decoded(&instr, dialect)
            } else {
                decode_scalar(&instr)
            };
            match result {
                Ok(p) => {
                    pending.push(p);
                    lines.push(line.index);
                }
                Err(Fail::Unsupported) => {
                    return Err(LoadError::UnsupportedInstruction {
                        line: line.index,
                        mnemonic: instr.mnemonic.clone(),
                    })
                }
                Err(Fail::Operands(reason)) => {
                    return Err(LoadError::InvalidOperands {
                        line: line.index,
                        mnemonic: instr.mnemonic.clone(),
                        reason,
                    })
                }
            }
        }
    }

    let resolve = |name: &str, from: usize| {
        let numeric = name
            .strip_suffix(['b', 'f'])
            .filter(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()));
        let found = match numeric {
            Some(n) => local.get(n).and_then(|defs| {
                if name.ends_with('b') {
                    defs.iter().rev().find(|&&d| d <= from).copied()
                } else {
                    defs.iter().find(|&&d| d > from).copied()
                }
            }),
            None => labels.get(name).copied(),
        };
        found.ok_or_else(|| LoadError::UnresolvedLabel(name.to_string()))
    };
    let mut ops = Vec::with_capacity(pending.len());
    for (at, p) in pending.into_iter().enumerate() {
        ops.push(match p {
            Pending::Ready(op) => op,
            Pending::Branch {
                cond,
                rs1,
                rs2,
                label,
            } => Op::Branch {
                cond,
                rs1,
                rs2,
                target: resolve(&label, at)?,
            },
            Pending::Jump(label) => Op::Jump {
                target: resolve(&label, at)?,
            },
        });
    }
    Ok(Program {
        dialect,
        ops,
        lines,
        labels,
    })
}
