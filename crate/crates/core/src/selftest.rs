//! Built-in golden rule-table suite run by `rvv-backport selftest`.

use crate::report::EmitOptions;
use crate::rewriter::RewriteOptions;
use crate::translate;

pub enum Expect {
    Output(&'static str),
    Code(&'static str),
}

pub struct Case {
    pub name: &'static str,
    pub input: &'static str,
    pub options: fn() -> RewriteOptions,
    pub expect: Expect,
}

fn strict() -> RewriteOptions {
    RewriteOptions::default()
}

fn lenient() -> RewriteOptions {
    RewriteOptions::lenient()
}

fn expand() -> RewriteOptions {
    RewriteOptions {
        expand_whole_register: true,
        ..RewriteOptions::default()
    }
}

macro_rules! with_config {
    ($body:literal) => {
        concat!("vsetvli t0, a0, e32, m2\n", $body)
    };
}

pub const CASES: &[Case] = &[
    Case {
        name: "strip-policy",
        input: "vsetvli t0, a0, e32, m2, ta, ma\n",
        options: strict,
        expect: Expect::Output("vsetvli t0, a0, e32, m2\n"),
    },
    Case {
        name: "vsetivli-expand",
        input: "vsetivli x0, 16, e8, m1\n",
        options: strict,
        expect: Expect::Output("li t5, 16 # rvv-backport: vsetivli-expand\nvsetvli x0, t5, e8, m1\n"),
    },
    Case {
        name: "vsetivli-expand-rd",
        input: "vsetivli a5, 3, e16, m1, tu, mu\n",
        options: strict,
        expect: Expect::Output("li a5, 3 # rvv-backport: vsetivli-expand\nvsetvli a5, a5, e16, m1\n"),
    },
    Case {
        name: "rename-mask-query",
        input: "vcpop.m a0, v4\n",
        options: strict,
        expect: Expect::Output("vpopc.m a0, v4\n"),
    },
    Case {
        name: "rename-mask-logical",
        input: "vmandn.mm v1, v2, v3\n",
        options: strict,
        expect: Expect::Output("vmandnot.mm v1, v2, v3\n"),
    },
    Case {
        name: "rename-fp-reduction",
        input: "vfredusum.vs v1, v2, v3\n",
        options: strict,
        expect: Expect::Output("vfredsum.vs v1, v2, v3\n"),
    },
    Case {
        name: "rename-narrowing",
        input: "vnsrl.wi v1, v2, 3\n",
        options: strict,
        expect: Expect::Output("vnsrl.vi v1, v2, 3\n"),
    },
    Case {
        name: "rename-fp-narrowing-convert",
        input: "vfncvt.f.f.w v1, v2\n",
        options: strict,
        expect: Expect::Output("vfncvt.f.f.v v1, v2\n"),
    },
    Case {
        name: "unit-stride-memory",
        input: with_config!("vle32.v v8, (a1)\n"),
        options: strict,
        expect: Expect::Output(with_config!("vle.v v8, (a1)\n")),
    },
    Case {
        name: "fault-only-first",
        input: with_config!("vle32ff.v v8, (a1)\n"),
        options: strict,
        expect: Expect::Output(with_config!("vleff.v v8, (a1)\n")),
    },
    Case {
        name: "strided-memory",
        input: with_config!("vsse32.v v8, (a1), t1\n"),
        options: strict,
        expect: Expect::Output(with_config!("vsse.v v8, (a1), t1\n")),
    },
    Case {
        name: "indexed-memory",
        input: with_config!("vloxei32.v v8, (a1), v4\n"),
        options: strict,
        expect: Expect::Output(with_config!("vlxe.v v8, (a1), v4\n")),
    },
    Case {
        name: "segment-memory",
        input: with_config!("vlseg2e32.v v8, (a1)\n"),
        options: strict,
        expect: Expect::Output(with_config!("vlseg2e.v v8, (a1)\n")),
    },
    Case {
        name: "pseudo-vneg",
        input: "vneg.v v1, v2, v0.t\n",
        options: strict,
        expect: Expect::Output("vrsub.vx v1, v2, x0, v0.t\n"),
    },
    Case {
        name: "pseudo-vncvt",
        input: "vncvt.x.x.w v1, v2\n",
        options: strict,
        expect: Expect::Output("vnsrl.vx v1, v2, x0\n"),
    },
    Case {
        name: "pseudo-vmmv",
        input: "vmmv.m v1, v2\n",
        options: strict,
        expect: Expect::Output("vmand.mm v1, v2, v2\n"),
    },
    Case {
        name: "whole-register-move",
        input: "vmv1r.v v1, v2\n",
        options: expand,
        expect: Expect::Output(
            "csrr t5, vl # rvv-backport: whole-register-move\ncsrr t6, vtype\nvsetvli x0, x0, e8, m1\nvmv.v.v v1, v2\nvsetvl x0, t5, t6\n",
        ),
    },
    Case {
        name: "whole-register-load",
        input: "vl1re32.v v1, (a0)\n",
        options: expand,
        expect: Expect::Output(
            "csrr t5, vl # rvv-backport: whole-register-load\ncsrr t6, vtype\nvsetvli x0, x0, e8, m1\nvle.v v1, (a0)\nvsetvl x0, t5, t6\n",
        ),
    },
    Case {
        name: "whole-register-store",
        input: "vs1r.v v1, (a0)\n",
        options: expand,
        expect: Expect::Output(
            "csrr t5, vl # rvv-backport: whole-register-store\ncsrr t6, vtype\nvsetvli x0, x0, e8, m1\nvse.v v1, (a0)\nvsetvl x0, t5, t6\n",
        ),
    },
    Case {
        name: "arch-attribute",
        input: ".attribute arch, \"rv64i2p1_m2p0_v1p0\"\n",
        options: strict,
        expect: Expect::Output(".attribute arch, \"rv64i2p1_m2p0_v0p7\"\n"),
    },
    Case {
        name: "pass-through",
        input: "add a0, a1, a2\nvadd.vv v1, v2, v3\n",
        options: strict,
        expect: Expect::Output("add a0, a1, a2\nvadd.vv v1, v2, v3\n"),
    },
    Case {
        name: "lenient-unknown-state",
        input: "vle32.v v8, (a1)\n",
        options: lenient,
        expect: Expect::Output("vle.v v8, (a1)\n"),
    },
    Case {
        name: "fractional-lmul",
        input: "vsetvli t0, a0, e32, mf2\n",
        options: strict,
        expect: Expect::Code("fractional-lmul"),
    },
    Case {
        name: "eew-sew-mismatch",
        input: with_config!("vle16.v v8, (a1)\n"),
        options: strict,
        expect: Expect::Code("eew-sew-mismatch"),
    },
    Case {
        name: "unknown-state",
        input: "vle32.v v8, (a1)\n",
        options: strict,
        expect: Expect::Code("unknown-state"),
    },
    Case {
        name: "no-v07-equivalent",
        input: "vzext.vf2 v1, v2\n",
        options: strict,
        expect: Expect::Code("no-v07-equivalent"),
    },
    Case {
        name: "whole-register-group",
        input: "vmv2r.v v2, v4\n",
        options: expand,
        expect: Expect::Code("no-v07-equivalent"),
    },
    Case {
        name: "whole-register-needs-flag",
        input: "vmv1r.v v1, v2\n",
        options: strict,
        expect: Expect::Code("whole-register-needs-flag"),
    },
    Case {
        name: "vcsr-access",
        input: "csrr a0, vcsr\n",
        options: strict,
        expect: Expect::Code("vcsr-access"),
    },
    Case {
        name: "malformed",
        input: "vadd.vv v1, v2\n",
        options: strict,
        expect: Expect::Code("malformed"),
    },
    Case {
        name: "scratch-conflict",
        input: "vl1r.v v1, (t5)\n",
        options: expand,
        expect: Expect::Code("scratch-conflict"),
    },
];

#[derive(Debug, Default)]
pub struct Summary {
    pub passed: usize,
    pub failures: Vec<String>,
}

impl Summary {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks one case; `Err` describes the difference.
pub fn check(case: &Case) -> Result<(), String> {
    let t = translate(
        case.input,
        case.name,
        &(case.options)(),
        &EmitOptions::default(),
    );
    match case.expect {
        Expect::Output(want) => match (&t.output, t.is_ok()) {
            (Some(got), true) if got == want => Ok(()),
            (Some(got), true) => Err(format!("expected {want:?}, got {got:?}")),
            _ => Err(format!("unexpected failure: {:?}", t.report.errors)),
        },
        Expect::Code(code) => {
            if t.report.errors.iter().any(|e| e.code == code) {
                Ok(())
            } else {
                Err(format!("expected code {code}, got {:?}", t.report.errors))
            }
        }
    }
}

pub fn run() -> Summary {
    let mut summary = Summary::default();
    for case in CASES {
        match check(case) {
            Ok(()) => summary.passed += 1,
            Err(e) => summary.failures.push(format!("{}: {e}", case.name)),
        }
    }
    summary
}
