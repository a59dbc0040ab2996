//! Initial machine states and the randomized state specs used by
//! differential runs.
//!
//! Init files hold one item per line:
//!
//! ```text
//! # comment
//! a0=0x1000
//! mem 0x1000 00ff10ab
//! ```
//!
//! Spec files describe how to draw an init state from a seed:
//!
//! ```text
//! vlen 128 256
//! seeds 100
//! flags expand-whole-register
//! reg a0 0x1000
//! reg a2 rand 0 64
//! mem 0x1000 e32 64 -1000 1000
//! mem 0x2000 bytes 256
//! mem 0x3000 hex 01020304
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::asm_model::{scalar_reg_index, Sew};
use crate::parser::parse_int;

use super::{MachineState, Trap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct InitError {
    pub line: usize,
    pub reason: String,
}

fn err(line: usize, reason: impl Into<String>) -> InitError {
    InitError {
        line,
        reason: reason.into(),
    }
}

fn int(tok: &str, line: usize) -> Result<i64, InitError> {
    match parse_int(tok) {
        Ok(Some(v)) => Ok(v),
        Ok(None) => Err(err(line, format!("expected a number, found `{tok}`"))),
        // Allow full-width unsigned hex such as 0xffffffffffffffff.
        Err(_) => tok
            .strip_prefix("0x")
            .and_then(|h| u64::from_str_radix(h, 16).ok())
            .map(|v| v as i64)
            .ok_or_else(|| err(line, format!("number out of range: `{tok}`"))),
    }
}

fn reg(tok: &str, line: usize) -> Result<u8, InitError> {
    match scalar_reg_index(&tok.to_ascii_lowercase()) {
        Some(0) => Err(err(line, "x0 cannot be initialized")),
        Some(i) => Ok(i as u8),
        None => Err(err(line, format!("unknown register `{tok}`"))),
    }
}

fn hex_bytes(tok: &str, line: usize) -> Result<Vec<u8>, InitError> {
    if !tok.len().is_multiple_of(2) {
        return Err(err(line, "hex byte string has odd length"));
    }
    (0..tok.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&tok[i..i + 2], 16)
                .map_err(|_| err(line, format!("invalid hex byte string `{tok}`")))
        })
        .collect()
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

/// Register and memory contents to load before a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InitState {
    pub regs: Vec<(u8, u64)>,
    pub memory: Vec<(u64, Vec<u8>)>,
}

impl InitState {
    pub fn parse(text: &str) -> Result<InitState, InitError> {
        let mut init = InitState::default();
        for (n, line) in content_lines(text) {
            if let Some(rest) = line.strip_prefix("mem ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [offset, bytes] = parts.as_slice() else {
                    return Err(err(n, "expected `mem OFFSET HEXBYTES`"));
                };
                init.memory
                    .push((int(offset, n)? as u64, hex_bytes(bytes, n)?));
            } else if let Some((name, value)) = line.split_once('=') {
                init.regs
                    .push((reg(name.trim(), n)?, int(value.trim(), n)? as u64));
            } else {
                return Err(err(n, format!("unrecognized line `{line}`")));
            }
        }
        Ok(init)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (r, v) in &self.regs {
            out.push_str(&format!("x{r}={v:#x}\n"));
        }
        for (off, bytes) in &self.memory {
            let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
            out.push_str(&format!("mem {off:#x} {hex}\n"));
        }
        out
    }

    pub fn apply(&self, state: &mut MachineState) -> Result<(), Trap> {
        for &(r, v) in &self.regs {
            state.write_x(r, v);
        }
        for (off, bytes) in &self.memory {
            let end = off
                .checked_add(bytes.len() as u64)
                .filter(|&e| e <= state.memory.len() as u64)
                .ok_or(Trap::OutOfBounds {
                    addr: *off,
                    size: bytes.len(),
                })?;
            state.memory[*off as usize..end as usize].copy_from_slice(bytes);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum RegInit {
    Fixed(u64),
    Range(i64, i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum MemInit {
    Bytes(usize),
    Elements {
        width: Sew,
        count: usize,
        lo: i64,
        hi: i64,
    },
    Hex(Vec<u8>),
}

/// Randomized initial-state description for a differential case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffSpec {
    pub vlens: Vec<u32>,
    pub seeds: u64,
    pub mem_size: Option<usize>,
    pub max_steps: Option<u64>,
    pub flags: Vec<String>,
    regs: Vec<(u8, RegInit)>,
    memory: Vec<(u64, MemInit)>,
}

impl Default for DiffSpec {
    fn default() -> Self {
        DiffSpec {
            vlens: vec![128, 256],
            seeds: 100,
            mem_size: None,
            max_steps: None,
            flags: Vec::new(),
            regs: Vec::new(),
            memory: Vec::new(),
        }
    }
}

pub const SPEC_FLAGS: [&str; 3] = ["expand-whole-register", "assume-eew-matches-sew", "lenient"];

impl DiffSpec {
    pub fn parse(text: &str) -> Result<DiffSpec, InitError> {
        let mut spec = DiffSpec::default();
        for (n, line) in content_lines(text) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["vlen", rest @ ..] if !rest.is_empty() => {
                    spec.vlens = rest
                        .iter()
                        .map(|t| {
                            int(t, n).and_then(|v| {
                                u32::try_from(v)
                                    .ok()
                                    .filter(|v| super::SUPPORTED_VLENS.contains(v))
                                    .ok_or_else(|| err(n, format!("unsupported VLEN {v}")))
                            })
                        })
                        .collect::<Result<_, _>>()?;
                }
                ["seeds", v] => spec.seeds = int(v, n)?.max(0) as u64,
                ["mem_size", v] => spec.mem_size = Some(int(v, n)?.max(0) as usize),
                ["max_steps", v] => spec.max_steps = Some(int(v, n)?.max(0) as u64),
                ["flags", rest @ ..] => {
                    for f in rest {
                        if !SPEC_FLAGS.contains(f) {
                            return Err(err(n, format!("unknown flag `{f}`")));
                        }
                        spec.flags.push(f.to_string());
                    }
                }
                ["reg", r, "rand", lo, hi] => {
                    let (lo, hi) = (int(lo, n)?, int(hi, n)?);
                    if lo > hi {
                        return Err(err(n, "empty range"));
                    }
                    spec.regs.push((reg(r, n)?, RegInit::Range(lo, hi)));
                }
                ["reg", r, v] => spec
                    .regs
                    .push((reg(r, n)?, RegInit::Fixed(int(v, n)? as u64))),
                ["mem", off, "bytes", len] => spec.memory.push((
                    int(off, n)? as u64,
                    MemInit::Bytes(int(len, n)?.max(0) as usize),
                )),
                ["mem", off, "hex", bytes] => spec
                    .memory
                    .push((int(off, n)? as u64, MemInit::Hex(hex_bytes(bytes, n)?))),
                ["mem", off, width, count, lo, hi] => {
                    let width = width
                        .strip_prefix('e')
                        .and_then(|w| w.parse().ok())
                        .and_then(Sew::from_bits)
                        .ok_or_else(|| err(n, format!("bad element width `{width}`")))?;
                    let (lo, hi) = (int(lo, n)?, int(hi, n)?);
                    if lo > hi {
                        return Err(err(n, "empty range"));
                    }
                    spec.memory.push((
                        int(off, n)? as u64,
                        MemInit::Elements {
                            width,
                            count: int(count, n)?.max(0) as usize,
                            lo,
                            hi,
                        },
                    ));
                }
                _ => return Err(err(n, format!("unrecognized line `{line}`"))),
            }
        }
        Ok(spec)
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    /// Draws the initial state for `seed`. Identical seeds give identical states.
    pub fn generate(&self, seed: u64) -> InitState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let regs = self
            .regs
            .iter()
            .map(|(r, init)| {
                let v = match init {
                    RegInit::Fixed(v) => *v,
                    RegInit::Range(lo, hi) => rng.gen_range(*lo..=*hi) as u64,
                };
                (*r, v)
            })
            .collect();
        let memory = self
            .memory
            .iter()
            .map(|(off, init)| {
                let bytes = match init {
                    MemInit::Bytes(len) => (0..*len).map(|_| rng.gen()).collect(),
                    MemInit::Hex(b) => b.clone(),
                    MemInit::Elements {
                        width,
                        count,
                        lo,
                        hi,
                    } => {
                        let mut out = Vec::with_capacity(count * width.bytes());
                        for _ in 0..*count {
                            let v = rng.gen_range(*lo..=*hi);
                            out.extend_from_slice(&v.to_le_bytes()[..width.bytes()]);
                        }
                        out
                    }
                };
                (*off, bytes)
            })
            .collect();
        InitState { regs, memory }
    }
}
