//! Operand shapes of the vector mnemonics the parser decodes.

use std::sync::LazyLock;

use regex::Regex;

/// What an operand position accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    V,
    /// The literal `v0` carry/merge operand.
    V0,
    X,
    F,
    I,
    /// Memory reference with zero displacement.
    M,
    /// Scalar memory reference, any displacement.
    Mem,
    /// vtype token list (`vsetvli`/`vsetivli` only).
    T,
    C,
    /// Immediate or assembler symbol (`li`).
    ImmOrSym,
    /// Any vector merge source: register, scalar, immediate or float.
    MergeSrc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub kinds: Vec<Kind>,
    pub maskable: bool,
}

impl Shape {
    fn new(kinds: &[Kind], maskable: bool) -> Shape {
        Shape {
            kinds: kinds.to_vec(),
            maskable,
        }
    }
}

pub const VSET_MNEMONICS: [&str; 3] = ["vsetvli", "vsetivli", "vsetvl"];
pub const CSR_MNEMONICS: [&str; 5] = ["csrr", "csrw", "csrrw", "csrrs", "csrrc"];

/// Mnemonics the parser decodes; everything else is passed through opaquely.
pub fn is_recognized(mnemonic: &str) -> bool {
    is_vector_mnemonic(mnemonic) || CSR_MNEMONICS.contains(&mnemonic) || mnemonic == "li"
}

pub fn is_vector_mnemonic(mnemonic: &str) -> bool {
    mnemonic.starts_with('v')
        && (mnemonic.contains('.') || VSET_MNEMONICS.contains(&mnemonic))
        && mnemonic
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'.')
}

static WHOLE_MOVE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^vmv[1248]r\.v$").unwrap());
static WHOLE_MEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^v[ls][1248]r(e(8|16|32|64))?\.v$").unwrap());
static UNIT_MEM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^v[ls](seg[2-8])?e(8|16|32|64|1)?(ff)?\.v$|^v[ls]m\.v$").unwrap()
});
static STRIDED_MEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^v[ls]s(seg[2-8])?e(8|16|32|64)?\.v$").unwrap());
static INDEXED_MEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^v[ls](ux|ox|x|ux?)(seg[2-8])?ei?(8|16|32|64)?\.v$").unwrap());

const MULADD_BASES: [&str; 22] = [
    "vmacc", "vnmsac", "vmadd", "vnmsub", "vwmacc", "vwmaccu", "vwmaccsu", "vwmaccus", "vfmacc",
    "vfnmacc", "vfmsac", "vfnmsac", "vfmadd", "vfnmadd", "vfmsub", "vfnmsub", "vfwmacc",
    "vfwnmacc", "vfwmsac", "vfwnmsac", "vqmacc", "vqmaccu",
];

/// Expected operand shape for a vector, CSR or `li` mnemonic. `None` means
/// the mnemonic is decoded but only checked generically.
pub fn shape_of(mnemonic: &str) -> Option<Shape> {
    use Kind::*;
    let shape = match mnemonic {
        "vsetvli" => Shape::new(&[X, X, T], false),
        "vsetivli" => Shape::new(&[X, I, T], false),
        "vsetvl" => Shape::new(&[X, X, X], false),
        "li" => Shape::new(&[X, ImmOrSym], false),
        "csrr" => Shape::new(&[X, C], false),
        "csrw" => Shape::new(&[C, X], false),
        "csrrw" | "csrrs" | "csrrc" => Shape::new(&[X, C, X], false),
        "vmv.v.v" => Shape::new(&[V, V], false),
        "vmv.v.x" => Shape::new(&[V, X], false),
        "vmv.v.i" => Shape::new(&[V, I], false),
        "vfmv.v.f" | "vfmv.s.f" => Shape::new(&[V, F], false),
        "vmv.x.s" => Shape::new(&[X, V], false),
        "vmv.s.x" => Shape::new(&[V, X], false),
        "vfmv.f.s" => Shape::new(&[F, V], false),
        "vcpop.m" | "vpopc.m" | "vfirst.m" | "vmfirst.m" => Shape::new(&[X, V], true),
        "vmsbf.m" | "vmsif.m" | "vmsof.m" | "viota.m" => Shape::new(&[V, V], true),
        "vmmv.m" | "vmnot.m" | "vmcpy.m" => Shape::new(&[V, V], false),
        "vmclr.m" | "vmset.m" => Shape::new(&[V], false),
        "vid.v" => Shape::new(&[V], true),
        "vneg.v" | "vnot.v" | "vncvt.x.x.w" | "vwcvt.x.x.v" | "vwcvtu.x.x.v" => {
            Shape::new(&[V, V], true)
        }
        m if WHOLE_MOVE.is_match(m) => Shape::new(&[V, V], false),
        m if WHOLE_MEM.is_match(m) => Shape::new(&[V, M], false),
        m if UNIT_MEM.is_match(m) => Shape::new(&[V, M], m != "vlm.v" && m != "vsm.v"),
        m if STRIDED_MEM.is_match(m) => Shape::new(&[V, M, X], true),
        m if INDEXED_MEM.is_match(m) => Shape::new(&[V, M, V], true),
        m if m.starts_with("vzext.vf")
            || m.starts_with("vsext.vf")
            || m.starts_with("vfcvt.")
            || m.starts_with("vfwcvt.")
            || m.starts_with("vfncvt.")
            || m == "vfsqrt.v"
            || m == "vfclass.v"
            || m == "vfrsqrt7.v"
            || m == "vfrec7.v" =>
        {
            Shape::new(&[V, V], true)
        }
        m => {
            let (base, suffix) = m.split_once('.')?;
            if MULADD_BASES.contains(&base) {
                match suffix {
                    "vv" => Shape::new(&[V, V, V], true),
                    "vx" => Shape::new(&[V, X, V], true),
                    "vf" => Shape::new(&[V, F, V], true),
                    _ => return None,
                }
            } else {
                match suffix {
                    "vvm" | "vxm" | "vim" | "vfm" => Shape::new(&[V, V, MergeSrc, V0], false),
                    "vv" | "wv" | "vs" => Shape::new(&[V, V, V], true),
                    "vx" | "wx" => Shape::new(&[V, V, X], true),
                    "vi" | "wi" => Shape::new(&[V, V, I], true),
                    "vf" | "wf" => Shape::new(&[V, V, F], true),
                    "mm" => Shape::new(&[V, V, V], false),
                    _ => return None,
                }
            }
        }
    };
    Some(shape)
}

/// Scalar-side shape used by the emulator's loader.
pub fn scalar_shape(mnemonic: &str) -> Option<Shape> {
    use Kind::*;
    let kinds: &[Kind] = match mnemonic {
        "nop" | "ret" => &[],
        "li" => &[X, I],
        "mv" | "neg" | "not" | "sext.w" | "negw" => &[X, X],
        "add" | "sub" | "mul" | "and" | "or" | "xor" | "sll" | "srl" | "sra" | "addw" | "subw"
        | "mulw" | "slt" | "sltu" | "min" | "max" | "minu" | "maxu" => &[X, X, X],
        "addi" | "andi" | "ori" | "xori" | "slli" | "srli" | "srai" | "addiw" | "slliw"
        | "srliw" | "sraiw" | "slti" | "sltiu" => &[X, X, I],
        "lb" | "lbu" | "lh" | "lhu" | "lw" | "lwu" | "ld" | "sb" | "sh" | "sw" | "sd" => &[X, Mem],
        "beq" | "bne" | "blt" | "bge" | "bltu" | "bgeu" | "bgt" | "ble" | "bgtu" | "bleu" => {
            &[X, X, ImmOrSym]
        }
        "beqz" | "bnez" | "blez" | "bgez" | "bltz" | "bgtz" => &[X, ImmOrSym],
        "j" => &[ImmOrSym],
        _ => return None,
    };
    Some(Shape::new(kinds, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recognition() {
        assert!(is_recognized("vadd.vv"));
        assert!(is_recognized("vsetvli"));
        assert!(is_recognized("csrr"));
        assert!(is_recognized("li"));
        assert!(!is_recognized("add"));
        assert!(!is_recognized("vfoo"));
    }

    #[test]
    fn memory_shapes() {
        use Kind::*;
        assert_eq!(shape_of("vle32.v").unwrap().kinds, vec![V, M]);
        assert_eq!(shape_of("vle.v").unwrap().kinds, vec![V, M]);
        assert_eq!(shape_of("vle16ff.v").unwrap().kinds, vec![V, M]);
        assert_eq!(shape_of("vlseg3e8.v").unwrap().kinds, vec![V, M]);
        assert_eq!(shape_of("vlse64.v").unwrap().kinds, vec![V, M, X]);
        assert_eq!(shape_of("vsse.v").unwrap().kinds, vec![V, M, X]);
        assert_eq!(shape_of("vluxei32.v").unwrap().kinds, vec![V, M, V]);
        assert_eq!(shape_of("vlxe.v").unwrap().kinds, vec![V, M, V]);
        assert_eq!(shape_of("vsuxe.v").unwrap().kinds, vec![V, M, V]);
        assert_eq!(shape_of("vl1re32.v").unwrap().kinds, vec![V, M]);
        assert!(!shape_of("vl1r.v").unwrap().maskable);
    }

    #[test]
    fn arithmetic_shapes() {
        use Kind::*;
        assert_eq!(shape_of("vmacc.vx").unwrap().kinds, vec![V, X, V]);
        assert_eq!(shape_of("vadd.vx").unwrap().kinds, vec![V, V, X]);
        assert_eq!(
            shape_of("vmerge.vvm").unwrap().kinds,
            vec![V, V, MergeSrc, V0]
        );
        assert_eq!(shape_of("vnsrl.wi").unwrap().kinds, vec![V, V, I]);
        assert!(shape_of("vfoo.bar").is_none());
    }
}
