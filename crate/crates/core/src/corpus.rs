//! The on-disk test corpus.
//!
//! ```text
//! golden/NAME.s           input
//! golden/NAME.expected.s  expected translation, byte for byte
//! reject/NAME.s           input
//! reject/NAME.code        expected diagnostic code
//! diff/NAME.s             v1.0 kernel
//! diff/NAME.diffspec      randomized initial state (see emulator::init)
//! passthrough/NAME.s      must translate to itself with no rule fired
//! ```
//!
//! Any `NAME.flags` file next to a golden or reject input lists options,
//! whitespace separated: `lenient`, `assume-eew-matches-sew`,
//! `expand-whole-register`.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::asm_model::Mode;
use crate::emulator::{differential_check, DiffConfig, DiffSpec, Verdict};
use crate::report::EmitOptions;
use crate::rewriter::RewriteOptions;
use crate::translate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Golden,
    Reject,
    Diff,
    PassThrough,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Golden, Kind::Reject, Kind::Diff, Kind::PassThrough];

    pub fn dir(self) -> &'static str {
        match self {
            Kind::Golden => "golden",
            Kind::Reject => "reject",
            Kind::Diff => "diff",
            Kind::PassThrough => "passthrough",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir())
    }
}

/// One corpus input with the options it is translated under.
#[derive(Debug, Clone)]
pub struct Entry {
    pub kind: Kind,
    pub name: String,
    pub path: PathBuf,
    pub text: String,
    pub options: RewriteOptions,
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

pub fn options_from_flags<'a>(
    flags: impl IntoIterator<Item = &'a str>,
) -> Result<RewriteOptions, String> {
    let mut opts = RewriteOptions::default();
    for f in flags {
        match f {
            "lenient" => opts.mode = Mode::Lenient,
            "assume-eew-matches-sew" => opts.assume_eew_matches_sew = true,
            "expand-whole-register" => opts.expand_whole_register = true,
            other => return Err(format!("unknown flag `{other}`")),
        }
    }
    Ok(opts)
}

fn is_input(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".s") && !name.ends_with(".expected.s") && !name.ends_with(".v07.s")
}

/// Lists corpus inputs under `root`, sorted by kind then name.
pub fn entries(root: &Path) -> io::Result<Vec<Entry>> {
    let mut out = Vec::new();
    for kind in Kind::ALL {
        let dir = root.join(kind.dir());
        if !dir.is_dir() {
            continue;
        }
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<io::Result<_>>()?;
        paths.retain(|p| is_input(p));
        paths.sort();
        for path in paths {
            let text = fs::read_to_string(&path)?;
            let name = path.file_stem().unwrap().to_string_lossy().into_owned();
            let options = if kind == Kind::Diff {
                let spec = read_spec(&path)?;
                options_from_flags(spec.flags.iter().map(String::as_str))
            } else {
                let flags = match fs::read_to_string(sidecar(&path, "flags")) {
                    Ok(t) => t,
                    Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
                    Err(e) => return Err(e),
                };
                options_from_flags(flags.split_whitespace())
            }
            .map_err(|e| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{}: {e}", path.display()),
                )
            })?;
            out.push(Entry {
                kind,
                name,
                path,
                text,
                options,
            });
        }
    }
    Ok(out)
}

fn read_spec(path: &Path) -> io::Result<DiffSpec> {
    let spec_path = sidecar(path, "diffspec");
    let text = fs::read_to_string(&spec_path)?;
    DiffSpec::parse(&text).map_err(|e| {
        io::Error::new(
            io::ErrorKind::InvalidData,
            format!("{}: {e}", spec_path.display()),
        )
    })
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub kind: Kind,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct DiffStats {
    pub kernel: String,
    pub runs: u64,
    pub matches: u64,
    pub vlens: Vec<u32>,
    pub seeds: u64,
}

#[derive(Debug, Clone, Default)]
pub struct CorpusSummary {
    pub cases: Vec<CaseResult>,
    pub rules_seen: BTreeSet<String>,
    pub codes_seen: BTreeSet<String>,
    pub diff: Vec<DiffStats>,
}

impl CorpusSummary {
    pub fn all_passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.passed)
    }
}

/// Runs one differential kernel over every seed and VLEN of its spec.
pub fn run_diff(entry: &Entry, spec: &DiffSpec) -> (DiffStats, Option<String>) {
    let mut stats = DiffStats {
        kernel: entry.name.clone(),
        vlens: spec.vlens.clone(),
        seeds: spec.seeds,
        ..DiffStats::default()
    };
    let mut first_failure = None;
    for seed in 0..spec.seeds {
        let init = spec.generate(seed);
        for &vlen in &spec.vlens {
            let mut cfg = DiffConfig::new(vlen);
            if let Some(m) = spec.mem_size {
                cfg.mem_size = m;
            }
            if let Some(s) = spec.max_steps {
                cfg.max_steps = s;
            }
            let verdict = differential_check(&entry.text, &entry.name, &entry.options, &init, &cfg);
            stats.runs += 1;
            match verdict {
                Verdict::Match { .. } => stats.matches += 1,
                other => {
                    first_failure
                        .get_or_insert_with(|| format!("seed {seed}, VLEN {vlen}: {other}"));
                }
            }
        }
    }
    (stats, first_failure)
}

/// Runs every case under `root`.
pub fn run_corpus(root: &Path) -> io::Result<CorpusSummary> {
    let mut summary = CorpusSummary::default();
    for entry in entries(root)? {
        let t = translate(
            &entry.text,
            &entry.name,
            &entry.options,
            &EmitOptions::default(),
        );
        summary.rules_seen.extend(t.report.rules.keys().cloned());
        summary
            .codes_seen
            .extend(t.report.errors.iter().map(|d| d.code.clone()));
        let (passed, detail) = match entry.kind {
            Kind::Golden => {
                let expected = fs::read_to_string(golden_path(&entry.path))?;
                match (&t.output, t.is_ok()) {
                    (Some(out), true) if *out == expected => (true, String::new()),
                    (Some(out), true) => (false, format!("output differs:\n{out}")),
                    _ => (false, format!("translation failed: {:?}", t.report.errors)),
                }
            }
            Kind::Reject => {
                let want = fs::read_to_string(sidecar(&entry.path, "code"))?;
                let want = want.trim();
                let codes: Vec<&str> = t.report.errors.iter().map(|d| d.code.as_str()).collect();
                if !t.is_ok() && codes.contains(&want) {
                    (true, String::new())
                } else {
                    (false, format!("expected {want}, got {codes:?}"))
                }
            }
            Kind::PassThrough => {
                let ok = t.is_ok()
                    && t.report.rules.is_empty()
                    && t.output.as_deref() == Some(entry.text.as_str());
                (
                    ok,
                    if ok {
                        String::new()
                    } else {
                        "output is not identical".into()
                    },
                )
            }
            Kind::Diff => {
                let spec = read_spec(&entry.path)?;
                let (stats, failure) = run_diff(&entry, &spec);
                let passed = failure.is_none() && stats.runs > 0;
                summary.diff.push(stats);
                (passed, failure.unwrap_or_default())
            }
        };
        summary.cases.push(CaseResult {
            kind: entry.kind,
            name: entry.name,
            passed,
            detail,
        });
    }
    Ok(summary)
}

fn golden_path(input: &Path) -> PathBuf {
    let stem = input.file_stem().unwrap().to_string_lossy();
    input.with_file_name(format!("{stem}.expected.s"))
}
