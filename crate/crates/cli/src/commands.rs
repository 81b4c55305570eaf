use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use polarization::corpus::{random_config, random_orthogonal, rng_for};
use polarization::{
    conjecture_search, estimate_l, full_report, grid_oracle, sup_product, threshold, BoundReport,
    Certificate, Configuration, OptimizerSettings,
};

use crate::document::{
    self, Format, LconstDocument, PropertyCount, ReportDocument, ReportTimings, SearchDocument,
    VerifyDocument, SCHEMA_VERSION,
};
use crate::error::CliError;

/// Where a command's document goes.
#[derive(Clone, Debug)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub format: Format,
}

impl Output {
    /// `--output` (relative paths resolved against the output directory),
    /// else `<out_dir>/<default_name>`, else standard output.
    fn destination(&self, default_name: &str) -> Option<PathBuf> {
        let ext = match self.format {
            Format::Json => "json",
            Format::Csv => "csv",
        };
        match (&self.path, &self.out_dir) {
            (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
            (Some(p), _) => Some(p.clone()),
            (None, Some(dir)) => Some(dir.join(format!("{default_name}.{ext}"))),
            (None, None) => None,
        }
    }

    fn emit<T: serde::Serialize>(&self, doc: &T, default_name: &str) -> Result<Option<PathBuf>, CliError> {
        let text = document::render(doc, self.format)?;
        match self.destination(default_name) {
            Some(path) => {
                write_file(&path, &text)?;
                Ok(Some(path))
            }
            None => {
                print!("{text}");
                Ok(None)
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    fs::write(path, text).map_err(CliError::io(path))
}

/// `<dir>/<stem><suffix>` next to `path`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn optimizer_settings(seed: u64, restarts: Option<usize>) -> OptimizerSettings {
    OptimizerSettings {
        restarts,
        ..OptimizerSettings::with_seed(seed)
    }
}

pub struct ReportArgs {
    pub n: Option<usize>,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub ortho: bool,
    pub sup: bool,
    pub restarts: Option<usize>,
}

pub fn load_instance(path: &Path) -> Result<Configuration, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    Configuration::parse(&text).map_err(|source| CliError::Instance {
        path: path.to_path_buf(),
        source,
    })
}

pub fn report(args: &ReportArgs, out: &Output) -> Result<ReportDocument, CliError> {
    let (config, generated) = match (&args.input, args.n) {
        (Some(path), _) => (load_instance(path)?, false),
        (None, Some(n)) if n >= 1 => {
            let config = if args.ortho {
                Configuration::orthonormal(n)
            } else {
                random_config(n, args.seed, 0)
            };
            (config, true)
        }
        (None, _) => return Err(CliError::Input("report needs --input or --n >= 1".into())),
    };
    let start = Instant::now();
    let report = full_report(&config, None)?;
    let bounds_ms = millis(start);
    let (report, sup_ms) = if args.sup {
        let start = Instant::now();
        let settings = optimizer_settings(args.seed, args.restarts);
        let report = full_report(&config, Some(&settings))?;
        (report, Some(millis(start)))
    } else {
        (report, None)
    };
    let doc = ReportDocument::new(args.seed, &config, &report, ReportTimings { bounds_ms, sup_ms });
    let name = format!("report-n{}-seed{}", config.dim(), args.seed);
    if let Some(path) = out.emit(&doc, &name)? {
        if generated {
            write_file(&sidecar(&path, ".instance.txt"), &config.to_text())?;
        }
    }
    Ok(doc)
}

/// Parses `a`, `a..b` or `a..=b`; both range forms include `b`.
pub fn parse_range(s: &str) -> Result<Vec<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("invalid dimension `{t}`: {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let n = num(s)?;
            (n, n)
        }
    };
    if lo == 0 || lo > hi {
        return Err(format!("empty or invalid dimension range `{s}`"));
    }
    Ok((lo..=hi).collect())
}

pub struct VerifyArgs {
    pub dims: Vec<usize>,
    pub count: usize,
    pub seed: u64,
    pub thm2_threshold: bool,
    pub oracle: bool,
}

struct Tally {
    counts: Vec<PropertyCount>,
    dump: Vec<String>,
}

impl Tally {
    fn record(&mut self, property: &str, ok: bool, n: usize, index: usize, detail: impl FnOnce() -> String, config: &Configuration) {
        let entry = match self.counts.iter_mut().find(|c| c.property == property) {
            Some(e) => e,
            None => {
                self.counts.push(PropertyCount {
                    property: property.to_string(),
                    checked: 0,
                    failed: 0,
                });
                self.counts.last_mut().unwrap()
            }
        };
        entry.checked += 1;
        if !ok {
            entry.failed += 1;
            self.dump.push(format!("# {property} n={n} index={index}: {}\n{}\n", detail(), config.to_text()));
        }
    }

    /// Writes the failing instances, if any, to `<dir>/verify-failures-seed<seed>.txt`.
    fn write_dump(&self, dir: &Path, seed: u64) -> Result<Option<PathBuf>, CliError> {
        if self.dump.is_empty() {
            return Ok(None);
        }
        let path = dir.join(format!("verify-failures-seed{seed}.txt"));
        write_file(&path, &self.dump.join("\n"))?;
        Ok(Some(path))
    }
}

const BOUND_TOL: f64 = 1e-12;
const SLACK_TOL: f64 = 1e-10;
const ROTATION_TOL: f64 = 1e-9;
const PERMUTATION_TOL: f64 = 1e-12;
const THM2_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-4;

fn bounds_agree(a: &BoundReport, b: &BoundReport, tol: f64) -> Result<(), String> {
    let (a, b) = (a.defined_bounds(), b.defined_bounds());
    if a.len() != b.len() {
        return Err(format!("defined bounds differ: {a:?} vs {b:?}"));
    }
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        if (x - y).abs() > tol {
            return Err(format!("{name}: {x:e} vs {y:e}"));
        }
    }
    Ok(())
}

pub fn verify(args: &VerifyArgs, out: &Output) -> Result<VerifyDocument, CliError> {
    if args.oracle {
        if let Some(n) = args.dims.iter().find(|&&n| n != 2 && n != 3) {
            return Err(CliError::Input(format!("--oracle supports n = 2 and n = 3 only, got n = {n}")));
        }
    }
    let mut tally = Tally {
        counts: Vec::new(),
        dump: Vec::new(),
    };
    for &n in &args.dims {
        for i in 0..args.count {
            let config = random_config(n, args.seed, i);
            let report = full_report(&config, None)?;

            let v = report.ordering_violations(BOUND_TOL);
            tally.record("ordering", v.is_empty(), n, i, || v.join("; "), &config);
            let v = report.witness_violations(BOUND_TOL);
            tally.record("witness", v.is_empty(), n, i, || v.join("; "), &config);
            for t in report.theorems() {
                if let Certificate::Bang(s) = &t.certificate {
                    let slack = s.min_slack();
                    tally.record("bang-certificate", slack >= -SLACK_TOL, n, i, || format!("{} slack {slack:e}", t.witness.construction), &config);
                }
            }

            let q = random_orthogonal(n, &mut rng_for(args.seed ^ 0x726f_7461_7465, n, i));
            let rotated = full_report(&config.rotated(&q)?, None)?;
            let r = bounds_agree(&report, &rotated, ROTATION_TOL);
            tally.record("rotation-invariance", r.is_ok(), n, i, || r.clone().unwrap_err(), &config);
            let perm: Vec<usize> = (0..n).rev().collect();
            let permuted = full_report(&config.permuted(&perm), None)?;
            let r = bounds_agree(&report, &permuted, PERMUTATION_TOL);
            tally.record("permutation-invariance", r.is_ok(), n, i, || r.clone().unwrap_err(), &config);

            if args.thm2_threshold {
                let t = threshold(n);
                let achieved = report.thm2.as_ref().map(|b| b.witness.achieved);
                let ok = achieved.is_some_and(|a| a >= t - THM2_TOL);
                tally.record("thm2-threshold", ok, n, i, || format!("achieved {achieved:?}, threshold {t:e}"), &config);
            }
            if args.oracle {
                let sup = sup_product(&config, &OptimizerSettings::with_seed(args.seed))?.best_value;
                let grid = grid_oracle(&config, None)?;
                let ok = sup >= grid - BOUND_TOL && sup - grid <= ORACLE_TOL;
                tally.record("oracle", ok, n, i, || format!("sup {sup:e}, grid {grid:e}"), &config);
            }
        }
    }

    let failures: usize = tally.counts.iter().map(|c| c.failed).sum();
    let dir = out.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let failure_dump = tally.write_dump(&dir, args.seed)?.map(|p| p.display().to_string());
    for c in &tally.counts {
        eprintln!("{:<24} {:>8} checked {:>6} failed", c.property, c.checked, c.failed);
    }
    if let Some(p) = &failure_dump {
        eprintln!("failing instances written to {p}");
    }
    let doc = VerifyDocument {
        schema_version: SCHEMA_VERSION,
        seed: args.seed,
        dimensions: args.dims.clone(),
        count: args.count,
        properties: tally.counts,
        failures,
        failure_dump,
    };
    out.emit(&doc, &format!("verify-seed{}", args.seed))?;
    Ok(doc)
}

pub struct SearchArgs {
    pub n: usize,
    pub budget: usize,
    pub seed: u64,
    pub trace: Option<PathBuf>,
}

pub fn search(args: &SearchArgs, out: &Output) -> Result<SearchDocument, CliError> {
    let start = Instant::now();
    let result = conjecture_search(args.n, args.budget, args.seed)?;
    let doc = SearchDocument::new(args.seed, args.budget, &result, millis(start));
    let name = format!("search-n{}-seed{}", args.n, args.seed);
    let written = out.emit(&doc, &name)?;
    let trace_path = args.trace.clone().or_else(|| written.as_ref().map(|p| sidecar(p, ".trace.csv")));
    if let Some(path) = trace_path {
        let mut buf = Vec::new();
        document::write_trace(&doc.trace, &mut buf)?;
        write_file(&path, &String::from_utf8(buf).expect("utf-8"))?;
    }
    if let Some(path) = written {
        write_file(&sidecar(&path, ".worst.txt"), &result.worst_config.to_text())?;
    }
    Ok(doc)
}

pub fn inspect(path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let doc: ReportDocument = document::parse(&text)?;
    println!("n = {}, seed = {}, threshold = {:.12e}", doc.n, doc.seed, doc.threshold);
    for (name, v) in doc.bounds() {
        println!("{name:<10} {v:.12e}");
    }
    if let Some(s) = doc.sup_estimate {
        println!("{:<10} {s:.12e}", "sup");
    }
    for a in &doc.absent {
        println!("{:<10} absent: {}", a.field, a.reason);
    }
    Ok(())
}

pub fn lconst(n: usize, samples: usize, seed: u64, out: &Output) -> Result<LconstDocument, CliError> {
    let start = Instant::now();
    let est = estimate_l(n, samples, seed)?;
    let doc = LconstDocument::new(seed, &est, millis(start));
    out.emit(&doc, &format!("lconst-n{n}-seed{seed}"))?;
    Ok(doc)
}
