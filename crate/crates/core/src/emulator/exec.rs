//! Instruction semantics.

use crate::asm_model::{Dialect, Sew};

use super::program::{
    Addressing, AluOp, Avl, CmpOp, Cond, Csr, MaskOp, MulAddOp, Op, RedOp, ScalarSrc, VBinOp, VReg,
    VSrc, XReg,
};
use super::{MachineConfig, MachineState, Trap, VType, ELEN};

const VILL: u64 = 1 << 63;

fn sext(value: u64, bits: u32) -> i64 {
    if bits >= 64 {
        value as i64
    } else {
        let shift = 64 - bits;
        ((value << shift) as i64) >> shift
    }
}

fn trunc(value: u64, bits: u32) -> u64 {
    if bits >= 64 {
        value
    } else {
        value & ((1u64 << bits) - 1)
    }
}

fn check_access(
    config: &MachineConfig,
    addr: u64,
    size: usize,
    align: bool,
) -> Result<usize, Trap> {
    let end = addr.checked_add(size as u64);
    if end.is_none_or(|e| e > config.mem_size as u64) {
        return Err(Trap::OutOfBounds { addr, size });
    }
    if align && !addr.is_multiple_of(size as u64) {
        return Err(Trap::Misaligned { addr, size });
    }
    Ok(addr as usize)
}

fn mem_read(
    config: &MachineConfig,
    state: &MachineState,
    addr: u64,
    size: usize,
) -> Result<u64, Trap> {
    let at = check_access(config, addr, size, true)?;
    let mut buf = [0u8; 8];
    buf[..size].copy_from_slice(&state.memory[at..at + size]);
    Ok(u64::from_le_bytes(buf))
}

fn mem_write(
    config: &MachineConfig,
    state: &mut MachineState,
    addr: u64,
    size: usize,
    value: u64,
) -> Result<(), Trap> {
    let at = check_access(config, addr, size, true)?;
    state.memory[at..at + size].copy_from_slice(&value.to_le_bytes()[..size]);
    Ok(())
}

/// Element `i` of the register group starting at `reg`.
fn velem(config: &MachineConfig, state: &MachineState, reg: VReg, eew: Sew, i: usize) -> u64 {
    let n = eew.bytes();
    let at = reg as usize * config.vlenb() + i * n;
    let mut buf = [0u8; 8];
    buf[..n].copy_from_slice(&state.vregs[at..at + n]);
    u64::from_le_bytes(buf)
}

fn set_velem(
    config: &MachineConfig,
    state: &mut MachineState,
    reg: VReg,
    eew: Sew,
    i: usize,
    v: u64,
) {
    let n = eew.bytes();
    let at = reg as usize * config.vlenb() + i * n;
    state.vregs[at..at + n].copy_from_slice(&v.to_le_bytes()[..n]);
}

fn reg_bit(config: &MachineConfig, state: &MachineState, reg: VReg, bit: usize) -> bool {
    let byte = state.vregs[reg as usize * config.vlenb() + bit / 8];
    byte >> (bit % 8) & 1 != 0
}

fn set_reg_bit(config: &MachineConfig, state: &mut MachineState, reg: VReg, bit: usize, on: bool) {
    let at = reg as usize * config.vlenb() + bit / 8;
    if on {
        state.vregs[at] |= 1 << (bit % 8);
    } else {
        state.vregs[at] &= !(1 << (bit % 8));
    }
}

/// Effective multiplier `num/den` of an operand with element width `eew`.
#[derive(Clone, Copy)]
struct Emul {
    num: u32,
    den: u32,
}

impl Emul {
    fn registers(self) -> usize {
        (self.num / self.den).max(1) as usize
    }
}

/// Execution context of a vector instruction under a legal vtype.
struct Ctx<'a> {
    config: &'a MachineConfig,
    vt: VType,
    vl: usize,
}

impl Ctx<'_> {
    fn sew(&self) -> Sew {
        self.vt.config.sew
    }

    fn bits(&self) -> u32 {
        self.vt.config.sew.bits()
    }

    fn lmul(&self) -> Emul {
        let (num, den) = self.vt.config.lmul.ratio();
        Emul { num, den }
    }

    fn emul(&self, eew: Sew) -> Result<Emul, Trap> {
        let (num, den) = self.vt.config.lmul.ratio();
        let (mut num, mut den) = (num * eew.bits(), den * self.bits());
        let g = gcd(num, den);
        num /= g;
        den /= g;
        if num > 8 * den || 8 * num < den {
            return Err(Trap::IllegalRegisterGroup(format!(
                "EEW={} gives EMUL {num}/{den}",
                eew.bits()
            )));
        }
        Ok(Emul { num, den })
    }

    /// Bit position of mask element `i` in a mask register.
    fn mask_pos(&self, i: usize) -> usize {
        match self.config.dialect {
            Dialect::V1p0 => i,
            Dialect::V0p7 => i * self.mlen(),
        }
    }

    fn mlen(&self) -> usize {
        let (num, den) = self.vt.config.lmul.ratio();
        (self.bits() * den / num) as usize
    }

    fn mask(&self, state: &MachineState, reg: VReg, i: usize) -> bool {
        reg_bit(self.config, state, reg, self.mask_pos(i))
    }

    /// Writes mask element `i`; v0.7.1 clears the rest of the MLEN field.
    fn set_mask(&self, state: &mut MachineState, reg: VReg, i: usize, on: bool) {
        let pos = self.mask_pos(i);
        set_reg_bit(self.config, state, reg, pos, on);
        if self.config.dialect == Dialect::V0p7 {
            for b in pos + 1..pos + self.mlen() {
                set_reg_bit(self.config, state, reg, b, false);
            }
        }
    }

    fn active(&self, state: &MachineState, masked: bool, i: usize) -> bool {
        !masked || self.mask(state, 0, i)
    }

    fn scalar(&self, state: &MachineState, src: VSrc, i: usize) -> u64 {
        match src {
            VSrc::V(r) => velem(self.config, state, r, self.sew(), i),
            VSrc::X(r) => trunc(state.read_x(r), self.bits()),
            VSrc::I(v) => trunc(v as u64, self.bits()),
        }
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn aligned(reg: VReg, emul: Emul) -> Result<(), Trap> {
    let n = emul.registers();
    if !(reg as usize).is_multiple_of(n) || reg as usize + n > 32 {
        return Err(Trap::IllegalRegisterGroup(format!(
            "v{reg} is not a valid base for a {n}-register group"
        )));
    }
    Ok(())
}

fn vtype_or_trap(state: &MachineState) -> Result<VType, Trap> {
    state.vtype.ok_or(Trap::IllegalVtype)
}

fn set_vtype(
    config: &MachineConfig,
    state: &mut MachineState,
    rd: XReg,
    vt: Option<VType>,
    avl: AvlChoice,
) {
    match vt.filter(|v| v.is_legal(config.vlen, config.dialect)) {
        None => {
            state.vtype = None;
            state.vl = 0;
        }
        Some(vt) => {
            let vlmax = vt.config.vlmax(config.vlen) as u64;
            state.vl = match avl {
                AvlChoice::Value(v) => v.min(vlmax),
                AvlChoice::Max => vlmax,
                AvlChoice::Keep => state.vl.min(vlmax),
            };
            state.vtype = Some(vt);
        }
    }
    state.write_x(rd, state.vl);
}

enum AvlChoice {
    Value(u64),
    Max,
    Keep,
}

fn avl_choice(dialect: Dialect, rd: XReg, rs1: XReg, state: &MachineState) -> AvlChoice {
    if rs1 != 0 {
        return AvlChoice::Value(state.read_x(rs1));
    }
    match dialect {
        Dialect::V0p7 => AvlChoice::Max,
        Dialect::V1p0 if rd != 0 => AvlChoice::Max,
        Dialect::V1p0 => AvlChoice::Keep,
    }
}

fn alu(op: AluOp, a: u64, b: u64) -> u64 {
    let w = |v: u64| sext(v, 32) as u64;
    match op {
        AluOp::Add => a.wrapping_add(b),
        AluOp::Sub => a.wrapping_sub(b),
        AluOp::Mul => a.wrapping_mul(b),
        AluOp::And => a & b,
        AluOp::Or => a | b,
        AluOp::Xor => a ^ b,
        AluOp::Sll => a << (b & 63),
        AluOp::Srl => a >> (b & 63),
        AluOp::Sra => ((a as i64) >> (b & 63)) as u64,
        AluOp::Slt => ((a as i64) < (b as i64)) as u64,
        AluOp::Sltu => (a < b) as u64,
        AluOp::Min => (a as i64).min(b as i64) as u64,
        AluOp::Max => (a as i64).max(b as i64) as u64,
        AluOp::Minu => a.min(b),
        AluOp::Maxu => a.max(b),
        AluOp::AddW => w(a.wrapping_add(b)),
        AluOp::SubW => w(a.wrapping_sub(b)),
        AluOp::MulW => w(a.wrapping_mul(b)),
        AluOp::SllW => w(((a as u32) << (b & 31)) as u64),
        AluOp::SrlW => w(((a as u32) >> (b & 31)) as u64),
        AluOp::SraW => (((a as i32) >> (b & 31)) as i64) as u64,
    }
}

fn vbin(op: VBinOp, a: u64, b: u64, bits: u32) -> u64 {
    let (sa, sb) = (sext(a, bits), sext(b, bits));
    let sh = b & (bits as u64 - 1);
    let r = match op {
        VBinOp::Add => a.wrapping_add(b),
        VBinOp::Sub => a.wrapping_sub(b),
        VBinOp::Rsub => b.wrapping_sub(a),
        VBinOp::Mul => a.wrapping_mul(b),
        VBinOp::And => a & b,
        VBinOp::Or => a | b,
        VBinOp::Xor => a ^ b,
        VBinOp::Sll => a << sh,
        VBinOp::Srl => a >> sh,
        VBinOp::Sra => (sa >> sh) as u64,
        VBinOp::Min => sa.min(sb) as u64,
        VBinOp::Max => sa.max(sb) as u64,
        VBinOp::Minu => a.min(b),
        VBinOp::Maxu => a.max(b),
    };
    trunc(r, bits)
}

fn vcmp(op: CmpOp, a: u64, b: u64, bits: u32) -> bool {
    let (sa, sb) = (sext(a, bits), sext(b, bits));
    match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        CmpOp::Lt => sa < sb,
        CmpOp::Ltu => a < b,
        CmpOp::Le => sa <= sb,
        CmpOp::Leu => a <= b,
        CmpOp::Gt => sa > sb,
        CmpOp::Gtu => a > b,
    }
}

fn vred(op: RedOp, acc: u64, x: u64, bits: u32) -> u64 {
    let (sa, sx) = (sext(acc, bits), sext(x, bits));
    let r = match op {
        RedOp::Sum => acc.wrapping_add(x),
        RedOp::And => acc & x,
        RedOp::Or => acc | x,
        RedOp::Xor => acc ^ x,
        RedOp::Max => sa.max(sx) as u64,
        RedOp::Min => sa.min(sx) as u64,
        RedOp::Maxu => acc.max(x),
        RedOp::Minu => acc.min(x),
    };
    trunc(r, bits)
}

fn mask_logic(op: MaskOp, a: bool, b: bool) -> bool {
    match op {
        MaskOp::And => a & b,
        MaskOp::Nand => !(a & b),
        MaskOp::Andn => a & !b,
        MaskOp::Or => a | b,
        MaskOp::Nor => !(a | b),
        MaskOp::Orn => a | !b,
        MaskOp::Xor => a ^ b,
        MaskOp::Xnor => !(a ^ b),
    }
}

pub(super) fn execute(
    config: &MachineConfig,
    state: &mut MachineState,
    op: &Op,
) -> Result<(), Trap> {
    let mut next = state.pc + 1;
    match op {
        Op::Nop => {}
        Op::Halt => next = usize::MAX,
        Op::Li { rd, imm } => state.write_x(*rd, *imm as u64),
        Op::Alu { op, rd, rs1, src } => {
            let b = match src {
                ScalarSrc::Reg(r) => state.read_x(*r),
                ScalarSrc::Imm(v) => *v as u64,
            };
            let v = alu(*op, state.read_x(*rs1), b);
            state.write_x(*rd, v);
        }
        Op::Load {
            rd,
            base,
            disp,
            bytes,
            signed,
        } => {
            let addr = state.read_x(*base).wrapping_add(*disp as u64);
            let raw = mem_read(config, state, addr, *bytes)?;
            let v = if *signed {
                sext(raw, *bytes as u32 * 8) as u64
            } else {
                raw
            };
            state.write_x(*rd, v);
        }
        Op::Store {
            rs,
            base,
            disp,
            bytes,
        } => {
            let addr = state.read_x(*base).wrapping_add(*disp as u64);
            mem_write(config, state, addr, *bytes, state.read_x(*rs))?;
        }
        Op::Branch {
            cond,
            rs1,
            rs2,
            target,
        } => {
            let (a, b) = (state.read_x(*rs1), state.read_x(*rs2));
            let taken = match cond {
                Cond::Eq => a == b,
                Cond::Ne => a != b,
                Cond::Lt => (a as i64) < (b as i64),
                Cond::Ge => (a as i64) >= (b as i64),
                Cond::Ltu => a < b,
                Cond::Geu => a >= b,
            };
            if taken {
                next = *target;
            }
        }
        Op::Jump { target } => next = *target,
        Op::Csrr { rd, csr } => {
            let v = match csr {
                Csr::Vl => state.vl,
                Csr::Vtype => state.vtype.map_or(VILL, |vt| vt.encode(config.dialect)),
                Csr::Vlenb => config.vlenb() as u64,
            };
            state.write_x(*rd, v);
        }
        Op::Vsetvli { rd, avl, vtype } => {
            let choice = match avl {
                Avl::Imm(v) => AvlChoice::Value(*v),
                Avl::Reg(rs1) => avl_choice(config.dialect, *rd, *rs1, state),
            };
            let vt = VType {
                config: vtype.config(),
                tail_agnostic: vtype.tail_agnostic(),
                mask_agnostic: vtype.mask_agnostic(),
            };
            set_vtype(config, state, *rd, Some(vt), choice);
        }
        Op::Vsetvl { rd, rs1, rs2 } => {
            let choice = avl_choice(config.dialect, *rd, *rs1, state);
            let vt = VType::decode(state.read_x(*rs2), config.dialect);
            set_vtype(config, state, *rd, vt, choice);
        }
        Op::WholeLoad {
            vd, base, nregs, ..
        } => {
            whole_group(*vd, *nregs)?;
            let len = nregs * config.vlenb();
            let at = check_access(config, state.read_x(*base), len, false)?;
            let dst = *vd as usize * config.vlenb();
            let (mem, regs) = (&state.memory, &mut state.vregs);
            regs[dst..dst + len].copy_from_slice(&mem[at..at + len]);
        }
        Op::WholeStore { vs, base, nregs } => {
            whole_group(*vs, *nregs)?;
            let len = nregs * config.vlenb();
            let at = check_access(config, state.read_x(*base), len, false)?;
            let src = *vs as usize * config.vlenb();
            let (mem, regs) = (&mut state.memory, &state.vregs);
            mem[at..at + len].copy_from_slice(&regs[src..src + len]);
        }
        Op::WholeMove { vd, vs, nregs } => {
            whole_group(*vd, *nregs)?;
            whole_group(*vs, *nregs)?;
            let len = nregs * config.vlenb();
            let (d, s) = (*vd as usize * config.vlenb(), *vs as usize * config.vlenb());
            state.vregs.copy_within(s..s + len, d);
        }
        other => {
            let ctx = Ctx {
                config,
                vt: vtype_or_trap(state)?,
                vl: state.vl as usize,
            };
            vector(&ctx, state, other)?;
        }
    }
    state.pc = next;
    Ok(())
}

fn whole_group(reg: VReg, nregs: usize) -> Result<(), Trap> {
    aligned(
        reg,
        Emul {
            num: nregs as u32,
            den: 1,
        },
    )
}

fn vector(ctx: &Ctx, state: &mut MachineState, op: &Op) -> Result<(), Trap> {
    let config = ctx.config;
    let sew = ctx.sew();
    let bits = ctx.bits();
    let lmul = ctx.lmul();
    let vl = ctx.vl;
    match *op {
        Op::VMem {
            store,
            vreg,
            base,
            addressing,
            eew,
            masked,
            fault_first,
        } => {
            let eew = eew.unwrap_or(sew);
            let emul = ctx.emul(eew)?;
            aligned(vreg, emul)?;
            if masked && !store && vreg == 0 {
                return Err(Trap::IllegalRegisterGroup(
                    "masked load overwrites v0".into(),
                ));
            }
            let index = match addressing {
                Addressing::Indexed { index, index_eew } => {
                    let ieew = index_eew.unwrap_or(sew);
                    aligned(index, ctx.emul(ieew)?)?;
                    Some((index, ieew))
                }
                _ => None,
            };
            let base_addr = state.read_x(base);
            let size = eew.bytes();
            for i in 0..vl {
                if !ctx.active(state, masked, i) {
                    continue;
                }
                let addr = match addressing {
                    Addressing::Unit => base_addr.wrapping_add((i * size) as u64),
                    Addressing::Strided(rs2) => {
                        base_addr.wrapping_add(state.read_x(rs2).wrapping_mul(i as u64))
                    }
                    Addressing::Indexed { .. } => {
                        let (index, ieew) = index.expect("indexed");
                        let raw = velem(config, state, index, ieew, i);
                        // v1.0 offsets are unsigned; v0.7.1 sign-extends them.
                        let off = match config.dialect {
                            Dialect::V1p0 => raw,
                            Dialect::V0p7 => sext(raw, ieew.bits()) as u64,
                        };
                        base_addr.wrapping_add(off)
                    }
                };
                if store {
                    let v = velem(config, state, vreg, eew, i);
                    mem_write(config, state, addr, size, v)?;
                } else {
                    match mem_read(config, state, addr, size) {
                        Ok(v) => set_velem(config, state, vreg, eew, i, v),
                        Err(Trap::OutOfBounds { .. }) if fault_first && i > 0 => {
                            state.vl = i as u64;
                            break;
                        }
                        Err(t) => return Err(t),
                    }
                }
            }
        }
        Op::VBin {
            op,
            vd,
            vs2,
            src,
            masked,
        } => {
            check_groups(ctx, &[vd, vs2], src)?;
            for i in 0..vl {
                if ctx.active(state, masked, i) {
                    let a = velem(config, state, vs2, sew, i);
                    let b = ctx.scalar(state, src, i);
                    set_velem(config, state, vd, sew, i, vbin(op, a, b, bits));
                }
            }
        }
        Op::VMulAdd {
            op,
            vd,
            src,
            vs2,
            masked,
        } => {
            check_groups(ctx, &[vd, vs2], src)?;
            for i in 0..vl {
                if ctx.active(state, masked, i) {
                    let s = ctx.scalar(state, src, i);
                    let b = velem(config, state, vs2, sew, i);
                    let d = velem(config, state, vd, sew, i);
                    let r = match op {
                        MulAddOp::Macc => s.wrapping_mul(b).wrapping_add(d),
                        MulAddOp::Nmsac => d.wrapping_sub(s.wrapping_mul(b)),
                        MulAddOp::Madd => s.wrapping_mul(d).wrapping_add(b),
                    };
                    set_velem(config, state, vd, sew, i, trunc(r, bits));
                }
            }
        }
        Op::VCmp {
            op,
            vd,
            vs2,
            src,
            masked,
        } => {
            check_groups(ctx, &[vs2], src)?;
            let results: Vec<Option<bool>> = (0..vl)
                .map(|i| {
                    ctx.active(state, masked, i).then(|| {
                        vcmp(
                            op,
                            velem(config, state, vs2, sew, i),
                            ctx.scalar(state, src, i),
                            bits,
                        )
                    })
                })
                .collect();
            for (i, r) in results.into_iter().enumerate() {
                if let Some(r) = r {
                    ctx.set_mask(state, vd, i, r);
                }
            }
        }
        Op::VMerge { vd, vs2, src } => {
            check_groups(ctx, &[vd, vs2], src)?;
            for i in 0..vl {
                let v = if ctx.mask(state, 0, i) {
                    ctx.scalar(state, src, i)
                } else {
                    velem(config, state, vs2, sew, i)
                };
                set_velem(config, state, vd, sew, i, v);
            }
        }
        Op::VMv { vd, src } => {
            check_groups(ctx, &[vd], src)?;
            for i in 0..vl {
                let v = ctx.scalar(state, src, i);
                set_velem(config, state, vd, sew, i, v);
            }
        }
        Op::VRed {
            op,
            vd,
            vs2,
            vs1,
            masked,
        } => {
            aligned(vs2, lmul)?;
            if vl == 0 {
                return Ok(());
            }
            let mut acc = velem(config, state, vs1, sew, 0);
            for i in 0..vl {
                if ctx.active(state, masked, i) {
                    acc = vred(op, acc, velem(config, state, vs2, sew, i), bits);
                }
            }
            set_velem(config, state, vd, sew, 0, acc);
        }
        Op::VPopc { rd, vs2, masked } => {
            let n = (0..vl)
                .filter(|&i| ctx.active(state, masked, i) && ctx.mask(state, vs2, i))
                .count();
            state.write_x(rd, n as u64);
        }
        Op::VFirst { rd, vs2, masked } => {
            let first = (0..vl).find(|&i| ctx.active(state, masked, i) && ctx.mask(state, vs2, i));
            state.write_x(rd, first.map_or(u64::MAX, |i| i as u64));
        }
        Op::VId { vd, masked } => {
            aligned(vd, lmul)?;
            for i in 0..vl {
                if ctx.active(state, masked, i) {
                    set_velem(config, state, vd, sew, i, trunc(i as u64, bits));
                }
            }
        }
        Op::VMvXS { rd, vs2 } => {
            let v = velem(config, state, vs2, sew, 0);
            state.write_x(rd, sext(v, bits) as u64);
        }
        Op::VMvSX { vd, rs1 } => {
            if vl > 0 {
                let v = trunc(state.read_x(rs1), bits);
                set_velem(config, state, vd, sew, 0, v);
            }
        }
        Op::VMaskLogic { op, vd, vs2, vs1 } => {
            let results: Vec<bool> = (0..vl)
                .map(|i| mask_logic(op, ctx.mask(state, vs2, i), ctx.mask(state, vs1, i)))
                .collect();
            for (i, r) in results.into_iter().enumerate() {
                ctx.set_mask(state, vd, i, r);
            }
        }
        Op::VNarrowShift {
            arithmetic,
            vd,
            vs2,
            src,
            masked,
        } => {
            let wide = Sew::from_bits(bits * 2)
                .filter(|w| w.bits() <= ELEN)
                .ok_or_else(|| Trap::Invalid(format!("no widened element for SEW={bits}")))?;
            aligned(vd, lmul)?;
            aligned(vs2, ctx.emul(wide)?)?;
            if let VSrc::V(r) = src {
                aligned(r, lmul)?;
            }
            for i in 0..vl {
                if ctx.active(state, masked, i) {
                    let a = velem(config, state, vs2, wide, i);
                    let sh = ctx.scalar(state, src, i) & (wide.bits() as u64 - 1);
                    let r = if arithmetic {
                        (sext(a, wide.bits()) >> sh) as u64
                    } else {
                        a >> sh
                    };
                    set_velem(config, state, vd, sew, i, trunc(r, bits));
                }
            }
        }
        _ => unreachable!("scalar op routed to vector execution"),
    }
    Ok(())
}

fn check_groups(ctx: &Ctx, regs: &[VReg], src: VSrc) -> Result<(), Trap> {
    let lmul = ctx.lmul();
    for &r in regs {
        aligned(r, lmul)?;
    }
    if let VSrc::V(r) = src {
        aligned(r, lmul)?;
    }
    Ok(())
}
