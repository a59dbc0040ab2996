use proptest::prelude::*;

use super::*;
use crate::asm_model::Mode;
use crate::parser::parse_document;
use crate::rewriter::RewriteOptions;

fn program(text: &str, dialect: Dialect) -> Program {
    let doc = parse_document(text, "t.s", Mode::Lenient).unwrap();
    load_program(&doc, dialect).unwrap()
}

fn machine(text: &str, dialect: Dialect, vlen: u32, regs: &[(u8, u64)]) -> Machine {
    let p = program(text, dialect);
    let mut m = Machine::new(MachineConfig::with_memory(vlen, 4096, dialect).unwrap());
    for &(r, v) in regs {
        m.state.write_x(r, v);
    }
    m.run(&p, 10_000).unwrap();
    m
}

const A0: u8 = 10;
const A1: u8 = 11;
const T0: u8 = 5;

#[test]
fn vlmax_example() {
    let m = machine("vsetvli t0, a0, e32, m1\n", Dialect::V1p0, 128, &[(A0, 5)]);
    assert_eq!(m.state.vl, 4);
    assert_eq!(m.state.read_x(T0), 4);
    let m = machine("vsetvli t0, a0, e32, m1\n", Dialect::V0p7, 128, &[(A0, 3)]);
    assert_eq!(m.state.vl, 3);
}

#[test]
fn rs1_zero_rules_differ_by_dialect() {
    let text = "vsetvli t0, a0, e32, m1\nvsetvli x0, x0, e32, m1\n";
    let v1 = machine(text, Dialect::V1p0, 128, &[(A0, 2)]);
    assert_eq!(v1.state.vl, 2);
    let v07 = machine(text, Dialect::V0p7, 128, &[(A0, 2)]);
    assert_eq!(v07.state.vl, 4);
    let v1 = machine("vsetvli t0, x0, e8, m2\n", Dialect::V1p0, 128, &[]);
    assert_eq!(v1.state.vl, 32);
}

#[test]
fn vsetivli_is_v1_only() {
    let m = machine("vsetivli t0, 16, e8, m1\n", Dialect::V1p0, 64, &[]);
    assert_eq!(m.state.vl, 8);
    let doc = parse_document("vsetivli t0, 16, e8, m1\n", "t.s", Mode::Strict).unwrap();
    assert!(matches!(
        load_program(&doc, Dialect::V0p7),
        Err(LoadError::UnsupportedInstruction { .. })
    ));
}

#[test]
fn tail_elements_preserved() {
    let text = "\
vsetvli t0, x0, e32, m1
vmv.v.i v2, 7
vmv.v.i v1, 1
vsetvli t0, a0, e32, m1, ta, ma
vadd.vv v2, v1, v1
";
    for dialect in [Dialect::V1p0, Dialect::V0p7] {
        let text = if dialect == Dialect::V0p7 {
            text.replace(", ta, ma", "")
        } else {
            text.to_string()
        };
        let m = machine(&text, dialect, 128, &[(A0, 2)]);
        let cfg = m.config;
        let elems: Vec<u64> = (0..4).map(|i| exec_elem(&m, &cfg, 2, i)).collect();
        assert_eq!(elems, vec![2, 2, 7, 7]);
    }
}

fn exec_elem(m: &Machine, cfg: &MachineConfig, reg: usize, i: usize) -> u64 {
    let at = reg * cfg.vlenb() + i * 4;
    u32::from_le_bytes(m.state.vregs[at..at + 4].try_into().unwrap()) as u64
}

#[test]
fn x0_is_hardwired() {
    let m = machine(
        "vsetvli t0, a0, e8, m1\ncsrr x0, vl\nli zero, 5\n",
        Dialect::V1p0,
        128,
        &[(A0, 3)],
    );
    assert_eq!(m.state.read_x(0), 0);
    assert_eq!(m.state.vl, 3);
}

#[test]
fn step_counts() {
    let empty = program("", Dialect::V1p0);
    let mut m = Machine::new(MachineConfig::new(128, Dialect::V1p0).unwrap());
    assert_eq!(m.run(&empty, 10).unwrap(), 0);

    let ten = "addi a0, a0, 1\n".repeat(10);
    let p = program(&ten, Dialect::V1p0);
    let mut m = Machine::new(MachineConfig::new(128, Dialect::V1p0).unwrap());
    assert_eq!(m.run(&p, 100).unwrap(), 10);
    assert_eq!(m.state.read_x(A0), 10);

    let spin = program("loop:\n\tj loop\n", Dialect::V1p0);
    let mut m = Machine::new(MachineConfig::new(128, Dialect::V1p0).unwrap());
    assert_eq!(m.run(&spin, 50), Err(RunError::StepLimitExceeded(50)));
}

#[test]
fn load_errors() {
    let doc = parse_document("vle32.v v1, (a0)\n", "t.s", Mode::Strict).unwrap();
    assert_eq!(
        load_program(&doc, Dialect::V0p7).unwrap_err(),
        LoadError::UnsupportedInstruction {
            line: 1,
            mnemonic: "vle32.v".into()
        }
    );
    let doc = parse_document("bnez t0, missing\n", "t.s", Mode::Strict).unwrap();
    assert_eq!(
        load_program(&doc, Dialect::V1p0).unwrap_err(),
        LoadError::UnresolvedLabel("missing".into())
    );
    let doc = parse_document("vle.v v1, (a0)\n", "t.s", Mode::Strict).unwrap();
    assert!(load_program(&doc, Dialect::V1p0).is_err());
    assert!(load_program(&doc, Dialect::V0p7).is_ok());
}

#[test]
fn numeric_local_labels() {
    let text =
        "li a0, 3\n1:\naddi a1, a1, 1\naddi a0, a0, -1\nbnez a0, 1b\nj 1f\nli a1, 100\n1:\nret\n";
    let m = machine(text, Dialect::V1p0, 128, &[]);
    assert_eq!(m.state.read_x(A1), 3);
}

#[test]
fn memory_bounds_trap() {
    let p = program("vsetvli t0, a0, e32, m1\nvle32.v v1, (a1)\n", Dialect::V1p0);
    let mut m = Machine::new(MachineConfig::with_memory(128, 64, Dialect::V1p0).unwrap());
    m.state.write_x(A0, 4);
    m.state.write_x(A1, 56);
    assert!(matches!(
        m.run(&p, 10),
        Err(RunError::Trap {
            line: 2,
            trap: Trap::OutOfBounds { addr: 64, .. }
        })
    ));
}

#[test]
fn fault_only_first_truncates() {
    let p = program(
        "vsetvli t0, a0, e32, m1\nvle32ff.v v1, (a1)\ncsrr a2, vl\n",
        Dialect::V1p0,
    );
    let mut m = Machine::new(MachineConfig::with_memory(128, 64, Dialect::V1p0).unwrap());
    m.state.write_x(A0, 4);
    m.state.write_x(A1, 56);
    m.run(&p, 10).unwrap();
    assert_eq!(m.state.read_x(12), 2);
}

#[test]
fn mask_layout_follows_dialect() {
    // Compare then count: same answer in both dialects, different bit layout.
    let text = |pop: &str| {
        format!("vsetvli t0, a0, e16, m1\nvid.v v1\nvmsgtu.vi v0, v1, 2\n{pop} a2, v0\n")
    };
    let v1 = machine(&text("vcpop.m"), Dialect::V1p0, 128, &[(A0, 8)]);
    let v07 = machine(&text("vpopc.m"), Dialect::V0p7, 128, &[(A0, 8)]);
    assert_eq!(v1.state.read_x(12), 5);
    assert_eq!(v07.state.read_x(12), 5);
    // v1.0 packs mask bits; v0.7.1 spaces them MLEN = 16 bits apart.
    assert_eq!(v1.state.vregs[0], 0b1111_1000);
    assert_eq!(&v07.state.vregs[0..2], &[0, 0]);
    assert_eq!(v07.state.vregs[6], 1);
}

#[test]
fn vtype_encodings_round_trip() {
    for dialect in [Dialect::V1p0, Dialect::V0p7] {
        for sew in crate::asm_model::Sew::ALL {
            for lmul in crate::asm_model::Lmul::ALL {
                let cfg = VConfig::new(sew, lmul);
                if !cfg.supported_in(dialect) {
                    continue;
                }
                let vt = VType::plain(cfg);
                assert_eq!(VType::decode(vt.encode(dialect), dialect), Some(vt));
            }
        }
    }
    assert_eq!(VType::decode(1 << 5, Dialect::V0p7), None);
    assert_eq!(VType::decode(4, Dialect::V1p0), None);
}

#[test]
fn illegal_vtype_sets_vill() {
    let m = machine(
        "vsetvli t0, a0, e64, mf2\ncsrr a2, vtype\n",
        Dialect::V1p0,
        128,
        &[(A0, 3)],
    );
    assert_eq!(m.state.vtype, None);
    assert_eq!(m.state.vl, 0);
    assert_eq!(m.state.read_x(12), 1 << 63);
}

const AXPY: &str = "\
axpy:
\tbeqz\ta0, .Ldone
.Lloop:
\tvsetvli\tt0, a0, e32, m1, ta, ma
\tvle32.v\tv8, (a2)
\tvle32.v\tv9, (a3)
\tvmacc.vx\tv9, a1, v8
\tvse32.v\tv9, (a3)
\tsub\ta0, a0, t0
\tslli\tt1, t0, 2
\tadd\ta2, a2, t1
\tadd\ta3, a3, t1
\tbnez\ta0, .Lloop
.Ldone:
\tret
";

#[test]
fn axpy_differential_match() {
    let spec = DiffSpec::parse(
        "reg a0 rand 0 64\nreg a1 rand -50 50\nreg a2 0x100\nreg a3 0x300\nmem 0x100 e32 64 -1000 1000\nmem 0x300 e32 64 -1000 1000\n",
    )
    .unwrap();
    for seed in 0..8 {
        let init = spec.generate(seed);
        for vlen in [128, 256] {
            let cfg = DiffConfig {
                vlen,
                mem_size: 4096,
                max_steps: 100_000,
            };
            let v = differential_check(AXPY, "axpy.s", &RewriteOptions::default(), &init, &cfg);
            assert!(v.is_match(), "seed {seed} vlen {vlen}: {v}");
        }
    }
}

#[test]
fn rejected_source_is_translation_error() {
    let v = differential_check(
        "vsetvli t0, a0, e32, mf2\n",
        "f.s",
        &RewriteOptions::default(),
        &InitState::default(),
        &DiffConfig::new(128),
    );
    assert!(
        matches!(
            v,
            Verdict::Error {
                side: Side::Translation,
                ..
            }
        ),
        "{v}"
    );
}

#[test]
fn init_state_text_round_trip() {
    let init = InitState::parse("# c\na0=0x10\nmem 0x20 00ff\n").unwrap();
    assert_eq!(init.regs, vec![(10, 16)]);
    assert_eq!(init.memory, vec![(32, vec![0, 255])]);
    assert_eq!(InitState::parse(&init.to_text()).unwrap(), init);
    assert!(InitState::parse("x0=1\n").is_err());
}

#[test]
fn spec_generation_is_deterministic() {
    let spec = DiffSpec::parse("reg a0 rand 0 100\nmem 0 bytes 16\n").unwrap();
    assert_eq!(spec.generate(3), spec.generate(3));
    assert_ne!(spec.generate(3), spec.generate(4));
}

fn lmul_strategy() -> impl Strategy<Value = crate::asm_model::Lmul> {
    prop::sample::select(crate::asm_model::Lmul::ALL.to_vec())
}

fn sew_strategy() -> impl Strategy<Value = crate::asm_model::Sew> {
    prop::sample::select(crate::asm_model::Sew::ALL.to_vec())
}

proptest! {
    #[test]
    fn vl_is_min_of_avl_and_vlmax(
        sew in sew_strategy(),
        lmul in lmul_strategy(),
        avl in 0u64..600,
        vlen in prop::sample::select(SUPPORTED_VLENS.to_vec()),
        v1 in any::<bool>(),
    ) {
        let dialect = if v1 { Dialect::V1p0 } else { Dialect::V0p7 };
        let cfg = VConfig::new(sew, lmul);
        prop_assume!(cfg.supported_in(dialect));
        let text = format!("vsetvli t0, a0, {}, {}\n", sew.token(), lmul.token());
        let m = machine(&text, dialect, vlen, &[(A0, avl)]);
        let vt = VType::plain(cfg);
        if vt.is_legal(vlen, dialect) {
            let vlmax = cfg.vlmax(vlen) as u64;
            prop_assert_eq!(m.state.vl, avl.min(vlmax));
            prop_assert_eq!(m.state.read_x(T0), avl.min(vlmax));
        } else {
            prop_assert_eq!(m.state.vtype, None);
            prop_assert_eq!(m.state.vl, 0);
        }
    }
}
