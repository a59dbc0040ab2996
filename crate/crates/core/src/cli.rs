//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::asm_model::Mode;
use crate::emulator::{differential_check, DiffConfig, DiffSpec, InitState, Verdict};
use crate::report::{emit_report, EmitOptions, ReportFormat, TranslationReport};
use crate::rewriter::RewriteOptions;
use crate::{selftest, translate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "rvv-backport",
    version,
    about = "Rewrite RISC-V Vector v1.0 assembly for v0.7.1 hardware"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Translate files, writing NAME.v07.s beside each input.
    Translate(TranslateArgs),
    /// Run each file under v1.0 semantics and its translation under v0.7.1
    /// semantics, and compare the results.
    Check(CheckArgs),
    /// Run the built-in rule table tests.
    Selftest,
}

#[derive(Debug, Args)]
struct RuleArgs {
    /// Translate what can be translated and report the rest.
    #[arg(long)]
    lenient: bool,
    /// Treat the EEW of memory instructions as matching an unknown SEW.
    #[arg(long)]
    assume_eew_matches_sew: bool,
    /// Expand single whole-register moves, loads and stores.
    #[arg(long)]
    expand_whole_register: bool,
    /// Two scratch registers for multi-instruction expansions.
    #[arg(long, value_name = "R1,R2", default_value = "t5,t6")]
    scratch: String,
}

impl RuleArgs {
    fn options(&self) -> Result<RewriteOptions, String> {
        Ok(RewriteOptions {
            mode: if self.lenient {
                Mode::Lenient
            } else {
                Mode::Strict
            },
            scratch_regs: RewriteOptions::parse_scratch(&self.scratch)
                .map_err(|e| e.to_string())?,
            expand_whole_register: self.expand_whole_register,
            assume_eew_matches_sew: self.assume_eew_matches_sew,
        })
    }
}

#[derive(Debug, Args)]
struct TranslateArgs {
    #[arg(required = true, value_name = "FILE")]
    inputs: Vec<PathBuf>,
    /// Output path, or `-` for standard output. Single input only.
    #[arg(short, long, value_name = "PATH")]
    output: Option<String>,
    /// Write the JSON report here (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    report: Option<String>,
    /// Omit the rule annotation on multi-line expansions.
    #[arg(long)]
    no_annotate: bool,
    #[command(flatten)]
    rules: RuleArgs,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(required = true, value_name = "FILE")]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 128)]
    vlen: u32,
    /// Seed for the randomized initial state drawn from NAME.diffspec.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial register and memory contents; overrides NAME.diffspec.
    #[arg(long, value_name = "FILE")]
    init: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: u64,
    #[command(flatten)]
    rules: RuleArgs,
}

/// Runs the tool with explicit streams. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{e}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{e}");
                EXIT_OK
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Translate(a) => run_translate(&a, out, err),
        Command::Check(a) => run_check(&a, out, err),
        Command::Selftest => Ok(run_selftest(out)),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "rvv-backport: {msg}");
            EXIT_USAGE
        }
    }
}

fn default_output(input: &Path) -> PathBuf {
    let name = input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = name
        .strip_suffix(".s")
        .or_else(|| name.strip_suffix(".S"))
        .unwrap_or(&name);
    input.with_file_name(format!("{stem}.v07.s"))
}

/// Writes through a temporary file in the target directory so readers
/// never see a partial file.
fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn read_input(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn run_translate(
    a: &TranslateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, String> {
    let opts = a.rules.options()?;
    if a.output.is_some() && a.inputs.len() > 1 {
        return Err("-o/--output needs exactly one input".into());
    }
    let emit = EmitOptions {
        annotate: !a.no_annotate,
    };
    let mut texts = Vec::with_capacity(a.inputs.len());
    for input in &a.inputs {
        texts.push(read_input(input)?);
    }
    let mut reports: Vec<TranslationReport> = Vec::new();
    let mut failed = false;
    for (input, text) in a.inputs.iter().zip(&texts) {
        let name = input.display().to_string();
        let t = translate(text, &name, &opts, &emit);
        if !t.report.warnings.is_empty() || !t.report.errors.is_empty() {
            let _ = write!(err, "{}", emit_report(&t.report, ReportFormat::HumanText));
        }
        failed |= !t.is_ok();
        let writable = t.is_ok() || opts.mode == Mode::Lenient;
        if let (Some(output), true) = (&t.output, writable) {
            match a.output.as_deref() {
                Some("-") => out
                    .write_all(output.as_bytes())
                    .map_err(|e| e.to_string())?,
                Some(path) => {
                    write_atomic(Path::new(path), output).map_err(|e| format!("{path}: {e}"))?
                }
                None => {
                    let path = default_output(input);
                    write_atomic(&path, output).map_err(|e| format!("{}: {e}", path.display()))?;
                }
            }
        }
        reports.push(t.report);
    }
    if let Some(path) = &a.report {
        let json = if reports.len() == 1 {
            emit_report(&reports[0], ReportFormat::Json)
        } else {
            serde_json::to_string(&reports).map_err(|e| e.to_string())?
        };
        if path == "-" {
            writeln!(out, "{json}").map_err(|e| e.to_string())?;
        } else {
            write_atomic(Path::new(path), &format!("{json}\n"))
                .map_err(|e| format!("{path}: {e}"))?;
        }
    }
    Ok(if failed { EXIT_FAILED } else { EXIT_OK })
}

fn initial_state(a: &CheckArgs, input: &Path) -> Result<InitState, String> {
    if let Some(path) = &a.init {
        return InitState::parse(&read_input(path)?)
            .map_err(|e| format!("{}: {e}", path.display()));
    }
    let spec_path = input.with_extension("diffspec");
    if spec_path.is_file() {
        let spec = DiffSpec::parse(&read_input(&spec_path)?)
            .map_err(|e| format!("{}: {e}", spec_path.display()))?;
        return Ok(spec.generate(a.seed));
    }
    Ok(InitState::default())
}

fn run_check(a: &CheckArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32, String> {
    let opts = a.rules.options()?;
    if !crate::emulator::SUPPORTED_VLENS.contains(&a.vlen) {
        return Err(format!("unsupported VLEN {}", a.vlen));
    }
    let cfg = DiffConfig {
        max_steps: a.max_steps,
        ..DiffConfig::new(a.vlen)
    };
    let mut all_match = true;
    for input in &a.inputs {
        let text = read_input(input)?;
        let init = initial_state(a, input)?;
        let verdict = differential_check(&text, &input.display().to_string(), &opts, &init, &cfg);
        all_match &= matches!(verdict, Verdict::Match { .. });
        let line = if a.inputs.len() == 1 {
            verdict.to_string()
        } else {
            format!("{}: {verdict}", input.display())
        };
        writeln!(out, "{line}").map_err(|e| e.to_string())?;
    }
    Ok(if all_match { EXIT_OK } else { EXIT_FAILED })
}

fn run_selftest(out: &mut dyn Write) -> i32 {
    let summary = selftest::run();
    for f in &summary.failures {
        let _ = writeln!(out, "FAIL {f}");
    }
    let _ = writeln!(
        out,
        "{} passed, {} failed",
        summary.passed,
        summary.failures.len()
    );
    if summary.ok() {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_output_names() {
        assert_eq!(
            default_output(Path::new("a/b.s")),
            PathBuf::from("a/b.v07.s")
        );
        assert_eq!(
            default_output(Path::new("k.asm")),
            PathBuf::from("k.asm.v07.s")
        );
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["rvv-backport", "bogus"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(
            run(
                ["rvv-backport", "translate", "--scratch", "t5", "x.s"],
                &mut o,
                &mut e
            ),
            EXIT_USAGE
        );
    }

    #[test]
    fn selftest_passes() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["rvv-backport", "selftest"], &mut o, &mut e), EXIT_OK);
    }
}
