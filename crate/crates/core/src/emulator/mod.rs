//! Dual-dialect interpreter for the RVV subset the translator handles.
//!
//! Tail and masked-off destination elements are always left undisturbed,
//! which is the v0.7.1 behaviour and a legal implementation of the v1.0
//! agnostic policies. `vstart` is fixed at zero.

pub mod differential;
mod exec;
pub mod init;
pub mod program;

use thiserror::Error;

use crate::asm_model::{Dialect, Lmul, Sew, VConfig};

pub use differential::{differential_check, DiffConfig, Side, Verdict};
pub use init::{DiffSpec, InitState};
pub use program::{load_program, LoadError, Program};

pub const ELEN: u32 = 64;
pub const DEFAULT_MEM_SIZE: usize = 1 << 20;
pub const SUPPORTED_VLENS: [u32; 4] = [64, 128, 256, 512];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MachineConfig {
    pub vlen: u32,
    pub mem_size: usize,
    pub dialect: Dialect,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("VLEN {0} is not one of 64, 128, 256, 512")]
    Vlen(u32),
    #[error("memory size must be positive")]
    EmptyMemory,
}

impl MachineConfig {
    pub fn new(vlen: u32, dialect: Dialect) -> Result<Self, ConfigError> {
        Self::with_memory(vlen, DEFAULT_MEM_SIZE, dialect)
    }

    pub fn with_memory(vlen: u32, mem_size: usize, dialect: Dialect) -> Result<Self, ConfigError> {
        if !SUPPORTED_VLENS.contains(&vlen) {
            return Err(ConfigError::Vlen(vlen));
        }
        if mem_size == 0 {
            return Err(ConfigError::EmptyMemory);
        }
        Ok(MachineConfig {
            vlen,
            mem_size,
            dialect,
        })
    }

    pub fn vlenb(&self) -> usize {
        self.vlen as usize / 8
    }
}

/// A legal vtype value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VType {
    pub config: VConfig,
    pub tail_agnostic: bool,
    pub mask_agnostic: bool,
}

fn lmul_bits_v1(l: Lmul) -> u64 {
    match l {
        Lmul::M1 => 0,
        Lmul::M2 => 1,
        Lmul::M4 => 2,
        Lmul::M8 => 3,
        Lmul::Mf8 => 5,
        Lmul::Mf4 => 6,
        Lmul::Mf2 => 7,
    }
}

fn sew_bits(s: Sew) -> u64 {
    match s {
        Sew::E8 => 0,
        Sew::E16 => 1,
        Sew::E32 => 2,
        Sew::E64 => 3,
    }
}

impl VType {
    pub fn plain(config: VConfig) -> VType {
        VType {
            config,
            tail_agnostic: false,
            mask_agnostic: false,
        }
    }

    /// Encodes the vtype CSR value for `dialect`.
    pub fn encode(&self, dialect: Dialect) -> u64 {
        match dialect {
            Dialect::V1p0 => {
                lmul_bits_v1(self.config.lmul)
                    | sew_bits(self.config.sew) << 3
                    | (self.tail_agnostic as u64) << 6
                    | (self.mask_agnostic as u64) << 7
            }
            Dialect::V0p7 => lmul_bits_v1(self.config.lmul) | sew_bits(self.config.sew) << 2,
        }
    }

    /// Decodes a vtype CSR value; `None` for reserved or illegal encodings.
    pub fn decode(raw: u64, dialect: Dialect) -> Option<VType> {
        let sew_of = |b: u64| Sew::ALL.get(b as usize).copied();
        let vt = match dialect {
            Dialect::V1p0 => {
                if raw >> 8 != 0 {
                    return None;
                }
                let lmul = match raw & 7 {
                    0 => Lmul::M1,
                    1 => Lmul::M2,
                    2 => Lmul::M4,
                    3 => Lmul::M8,
                    5 => Lmul::Mf8,
                    6 => Lmul::Mf4,
                    7 => Lmul::Mf2,
                    _ => return None,
                };
                let sew = sew_of((raw >> 3) & 7)?;
                VType {
                    config: VConfig::new(sew, lmul),
                    tail_agnostic: raw & (1 << 6) != 0,
                    mask_agnostic: raw & (1 << 7) != 0,
                }
            }
            Dialect::V0p7 => {
                // vediv (bits 6:5) must be zero; no fractional LMUL.
                if raw >> 5 != 0 {
                    return None;
                }
                let lmul = Lmul::INTEGRAL[(raw & 3) as usize];
                let sew = sew_of((raw >> 2) & 7)?;
                VType::plain(VConfig::new(sew, lmul))
            }
        };
        Some(vt)
    }

    /// Whether this configuration is usable on a machine with `vlen`.
    pub fn is_legal(&self, vlen: u32, dialect: Dialect) -> bool {
        if !self.config.supported_in(dialect) {
            return false;
        }
        let (_, den) = self.config.lmul.ratio();
        // LMUL >= SEW / ELEN
        if self.config.sew.bits() * den > ELEN {
            return false;
        }
        self.config.vlmax(vlen) >= 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    pub x: [u64; 32],
    /// 32 registers of VLEN bits, register `n` at `n * vlenb`.
    pub vregs: Vec<u8>,
    pub vl: u64,
    /// `None` when vtype holds the illegal sentinel.
    pub vtype: Option<VType>,
    pub memory: Vec<u8>,
    pub pc: usize,
}

impl MachineState {
    pub fn new(config: &MachineConfig) -> Self {
        MachineState {
            x: [0; 32],
            vregs: vec![0; 32 * config.vlenb()],
            vl: 0,
            vtype: None,
            memory: vec![0; config.mem_size],
            pc: 0,
        }
    }

    pub fn write_x(&mut self, reg: u8, value: u64) {
        if reg != 0 {
            self.x[reg as usize] = value;
        }
    }

    pub fn read_x(&self, reg: u8) -> u64 {
        self.x[reg as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Trap {
    #[error("memory access of {size} bytes at {addr:#x} is out of bounds")]
    OutOfBounds { addr: u64, size: usize },
    #[error("misaligned {size}-byte access at {addr:#x}")]
    Misaligned { addr: u64, size: usize },
    #[error("vector instruction executed with illegal vtype")]
    IllegalVtype,
    #[error("illegal register group: {0}")]
    IllegalRegisterGroup(String),
    #[error("invalid operation: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("trap at line {line}: {trap}")]
    Trap { line: usize, trap: Trap },
    #[error("step limit of {0} exceeded")]
    StepLimitExceeded(u64),
    #[error("program was loaded for {program} but the machine runs {machine}")]
    DialectMismatch { program: Dialect, machine: Dialect },
}

/// A machine bound to one configuration.
#[derive(Debug, Clone)]
pub struct Machine {
    pub config: MachineConfig,
    pub state: MachineState,
}

impl Machine {
    pub fn new(config: MachineConfig) -> Self {
        let state = MachineState::new(&config);
        Machine { config, state }
    }

    /// Executes one instruction. Returns `false` once the program has
    /// finished.
    pub fn step(&mut self, program: &Program) -> Result<bool, RunError> {
        if program.dialect != self.config.dialect {
            return Err(RunError::DialectMismatch {
                program: program.dialect,
                machine: self.config.dialect,
            });
        }
        let Some(op) = program.ops.get(self.state.pc) else {
            return Ok(false);
        };
        let line = program.lines[self.state.pc];
        exec::execute(&self.config, &mut self.state, op)
            .map_err(|trap| RunError::Trap { line, trap })?;
        Ok(true)
    }

    /// Runs until the program counter leaves the program. Returns the
    /// number of executed instructions.
    pub fn run(&mut self, program: &Program, max_steps: u64) -> Result<u64, RunError> {
        let mut steps = 0;
        while self.state.pc < program.ops.len() {
            if steps >= max_steps {
                return Err(RunError::StepLimitExceeded(max_steps));
            }
            self.step(program)?;
            steps += 1;
        }
        Ok(steps)
    }

    pub fn current_vconfig(&self) -> Option<VConfig> {
        self.state.vtype.map(|v| v.config)
    }
}

#[cfg(test)]
mod tests;
