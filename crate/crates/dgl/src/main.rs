//! Command-line interface: model checking, homology, product / power /
//! diagonal / fat-wedge constructions, and sectional-category certification.
//!
//! Exit codes: 0 = check passed / certificate found; 1 = check failed or no
//! certificate; 2 = input error; 3 = internal invariant violation.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use dgl::dgl::{homology_dims, tensor_string, Dgl, Report};
use dgl::error::Result;
use dgl::lie::lie_string;
use dgl::modelfile::{parse_model, serialize_model};
use dgl::models::{
    binary_product, diagonal_model, fat_wedge_model, power_model, ProductModel,
};
use dgl::secat::{find_alpha, secat_upper_bound, verify_certificate, Outcome, SearchOptions};

#[derive(Parser)]
#[command(name = "dgl", version, about = "Differential graded Lie algebra toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Emit a machine-readable JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Include wall-clock timings in reports (off by default so that equal
    /// inputs give byte-identical output).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify d^2 = 0, minimality and the cone-length stages of a model.
    Check {
        file: PathBuf,
        #[arg(long)]
        max_degree: usize,
    },
    /// Degree-wise homology dimensions.
    Homology {
        file: PathBuf,
        #[arg(long)]
        max_degree: usize,
    },
    /// Binary product model of two models.
    Product {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        max_degree: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// n-fold power model.
    Power {
        file: PathBuf,
        #[arg(long)]
        copies: usize,
        #[arg(long)]
        max_degree: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Diagonal map into the power model.
    Diagonal {
        file: PathBuf,
        #[arg(long, default_value_t = 2)]
        copies: usize,
        #[arg(long)]
        max_degree: usize,
    },
    /// Fat-wedge sub-model of a map model.
    Fatwedge {
        file: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        max_degree: usize,
    },
    /// Sectional-category certification of a map model.
    Secat {
        file: PathBuf,
        /// Certify one specific level; without it levels 0..=max-n are tried.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        max_degree: usize,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
    },
    /// LS category of a model (sectional category of the base-point
    /// inclusion).
    Cat {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        #[arg(long)]
        max_degree: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
    },
    /// Topological complexity (sectional category of the diagonal).
    Tc {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        #[arg(long)]
        max_degree: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli) {
        Ok((code, mut report, human)) => {
            if cli.json {
                if cli.timings {
                    if let Value::Object(m) = &mut report {
                        m.insert(
                            "timings".to_string(),
                            json!({ "total_ms": started.elapsed().as_millis() as u64 }),
                        );
                    }
                }
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                println!("{}", human);
                if cli.timings {
                    println!("elapsed: {} ms", started.elapsed().as_millis());
                }
            }
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(e.exit_code());
        }
    }
}

fn load(path: &PathBuf) -> Result<Dgl> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text)
}

fn report_lines(r: &Report) -> String {
    let mut out = format!(
        "{} (up to degree {}): {}\n",
        r.title,
        r.bound,
        if r.passed { "pass" } else { "FAIL" }
    );
    for item in r.failures() {
        out.push_str(&format!("  FAIL {}: {}\n", item.label, item.detail));
    }
    out
}

fn status(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

fn product_reports(p: &ProductModel, nmax: usize) -> Result<(Vec<Report>, bool)> {
    let mut reports = vec![p.dgl.check_d_squared(nmax)];
    reports.push(p.check_quasi_iso(nmax.saturating_sub(1))?);
    reports.push(p.check_properties());
    if p.roles.is_some() {
        reports.push(p.check_stage_containment());
    }
    let passed = reports.iter().all(|r| r.passed);
    Ok((reports, passed))
}

fn run(cli: &Cli) -> Result<(i32, Value, String)> {
    match &cli.cmd {
        Cmd::Check { file, max_degree } => {
            let m = load(file)?;
            let d2 = m.check_d_squared(*max_degree);
            let minimal = m.is_minimal();
            let stages = m.stages();
            let mut human = report_lines(&d2);
            human.push_str(&format!(
                "minimal: {}\n",
                if minimal {
                    "yes".to_string()
                } else {
                    format!("no ({})", m.minimality_violations().join(", "))
                }
            ));
            for (g, info) in m.gens().iter() {
                human.push_str(&format!(
                    "generator {} degree {} stage {}{}\n",
                    info.id,
                    info.degree,
                    stages[g as usize],
                    if info.domain { " domain" } else { "" }
                ));
            }
            let report = json!({
                "command": "check",
                "inputs": { "file": file.display().to_string(), "model": m.name },
                "bound": max_degree,
                "status": status(d2.passed),
                "d_squared": d2,
                "minimal": minimal,
                "minimality_violations": m.minimality_violations(),
                "stages": m.gens().iter()
                    .map(|(g, info)| json!({ "generator": info.id, "degree": info.degree,
                        "stage": stages[g as usize], "domain": info.domain }))
                    .collect::<Vec<_>>(),
            });
            Ok((if d2.passed { 0 } else { 1 }, report, human))
        }
        Cmd::Homology { file, max_degree } => {
            let m = load(file)?;
            let dims = homology_dims(&m, *max_degree)?;
            let mut human = format!("homology of {} up to degree {}:\n", m.name, max_degree);
            for (d, k) in &dims {
                human.push_str(&format!("  H_{} has dimension {}\n", d, k));
            }
            let report = json!({
                "command": "homology",
                "inputs": { "file": file.display().to_string(), "model": m.name },
                "bound": max_degree,
                "status": "pass",
                "dimensions": dims,
            });
            Ok((0, report, human))
        }
        Cmd::Product {
            a,
            b,
            max_degree,
            out,
        } => {
            let la = load(a)?;
            let lb = load(b)?;
            let p = binary_product(&la, &lb, *max_degree)?;
            let (reports, passed) = product_reports(&p, *max_degree)?;
            if let Some(path) = out {
                std::fs::write(path, serialize_model(&p.dgl))?;
            }
            let mut human = format!(
                "product model {} with {} generators\n",
                p.dgl.name,
                p.dgl.gens().len()
            );
            if !p.omitted.is_empty() {
                human.push_str(&format!(
                    "omitted above the degree cap: {}\n",
                    p.omitted.join(", ")
                ));
            }
            for r in &reports {
                human.push_str(&report_lines(r));
            }
            let report = json!({
                "command": "product",
                "inputs": {
                    "a": a.display().to_string(), "b": b.display().to_string(),
                    "models": [la.name, lb.name],
                },
                "bound": max_degree,
                "status": status(passed),
                "generators": p.dgl.gens().iter().map(|(_, g)| g.id.clone()).collect::<Vec<_>>(),
                "omitted": p.omitted,
                "reports": reports,
                "model": serialize_model(&p.dgl),
            });
            Ok((if passed { 0 } else { 1 }, report, human))
        }
        Cmd::Power {
            file,
            copies,
            max_degree,
            out,
        } => {
            let l = load(file)?;
            let p = power_model(&l, *copies, *max_degree)?;
            let (reports, passed) = product_reports(&p, *max_degree)?;
            if let Some(path) = out {
                std::fs::write(path, serialize_model(&p.dgl))?;
            }
            let mut human = format!(
                "power model {} with {} generators\n",
                p.dgl.name,
                p.dgl.gens().len()
            );
            if !p.omitted.is_empty() {
                human.push_str(&format!(
                    "omitted above the degree cap: {}\n",
                    p.omitted.join(", ")
                ));
            }
            for r in &reports {
                human.push_str(&report_lines(r));
            }
            let report = json!({
                "command": "power",
                "inputs": { "file": file.display().to_string(), "model": l.name, "copies": copies },
                "bound": max_degree,
                "status": status(passed),
                "generators": p.dgl.gens().iter().map(|(_, g)| g.id.clone()).collect::<Vec<_>>(),
                "omitted": p.omitted,
                "reports": reports,
                "model": serialize_model(&p.dgl),
            });
            Ok((if passed { 0 } else { 1 }, report, human))
        }
        Cmd::Diagonal {
            file,
            copies,
            max_degree,
        } => {
            let l = load(file)?;
            let (delta, power) = diagonal_model(&l, *copies, *max_degree)?;
            let chain = delta.check_chain_map(*max_degree);
            let mut human = format!(
                "diagonal of {} into its {}-fold power model\n",
                l.name, copies
            );
            let mut images = serde_json::Map::new();
            for (g, info) in l.gens().iter() {
                let t = &delta.assign[g as usize];
                let s = lie_string(t, power.dgl.gens())
                    .unwrap_or_else(|| tensor_string(t, power.dgl.gens()));
                human.push_str(&format!("  delta({}) = {}\n", info.id, s));
                images.insert(info.id.clone(), Value::String(s));
            }
            human.push_str(&report_lines(&chain));
            let report = json!({
                "command": "diagonal",
                "inputs": { "file": file.display().to_string(), "model": l.name, "copies": copies },
                "bound": max_degree,
                "status": status(chain.passed),
                "delta": images,
                "reports": [chain.clone()],
            });
            Ok((if chain.passed { 0 } else { 1 }, report, human))
        }
        Cmd::Fatwedge {
            file,
            n,
            max_degree,
        } => {
            let m = load(file)?;
            let fw = fat_wedge_model(&m, *n, *max_degree)?;
            let d2 = fw.sub.check_d_squared(*max_degree);
            let mut human = format!(
                "fat wedge {} over {} copies: {} generators kept, {} removed\n",
                fw.sub.name,
                fw.copies,
                fw.sub.gens().len(),
                fw.removed.len()
            );
            let u_ids: Vec<String> = fw
                .u_gens
                .iter()
                .map(|&g| fw.sub.gens().id(g).to_string())
                .collect();
            human.push_str(&format!("relative generators U: {}\n", u_ids.join(", ")));
            if !fw.removed.is_empty() {
                human.push_str(&format!("removed: {}\n", fw.removed.join(", ")));
            }
            human.push_str(&report_lines(&d2));
            let report = json!({
                "command": "fatwedge",
                "inputs": { "file": file.display().to_string(), "model": m.name, "n": n },
                "bound": max_degree,
                "status": status(d2.passed),
                "kept": fw.sub.gens().iter().map(|(_, g)| g.id.clone()).collect::<Vec<_>>(),
                "removed": fw.removed,
                "u_generators": u_ids,
                "reports": [d2.clone()],
                "model": serialize_model(&fw.sub),
            });
            Ok((if d2.passed { 0 } else { 1 }, report, human))
        }
        Cmd::Secat {
            file,
            n,
            max_degree,
            max_n,
            seed,
            budget,
        } => {
            let m = load(file)?;
            let opts = SearchOptions {
                seed: *seed,
                budget: *budget,
            };
            if let Some(level) = n {
                let outcome = find_alpha(&m, *level, *max_degree, &opts)?;
                return secat_single_level(&m, *level, *max_degree, outcome, file);
            }
            let r = secat_upper_bound(&m, *max_n, *max_degree, &opts)?;
            secat_table("secat", &m, file, *max_degree, r)
        }
        Cmd::Cat {
            file,
            max_n,
            max_degree,
            seed,
            budget,
        } => {
            let l = load(file)?;
            let opts = SearchOptions {
                seed: *seed,
                budget: *budget,
            };
            let r = dgl::secat::cat(&l, *max_n, *max_degree, &opts)?;
            secat_table("cat", &l, file, *max_degree, r)
        }
        Cmd::Tc {
            file,
            max_n,
            max_degree,
            seed,
            budget,
        } => {
            let l = load(file)?;
            let opts = SearchOptions {
                seed: *seed,
                budget: *budget,
            };
            let r = dgl::secat::tc(&l, *max_n, *max_degree, &opts)?;
            secat_table("tc", &l, file, *max_degree, r)
        }
    }
}

fn secat_single_level(
    m: &Dgl,
    level: usize,
    nmax: usize,
    outcome: Outcome,
    file: &PathBuf,
) -> Result<(i32, Value, String)> {
    match outcome {
        Outcome::Found(cert) => {
            let fw = fat_wedge_model(m, level, nmax)?;
            let verification = verify_certificate(m, &fw, &cert, nmax);
            let mut human = format!("certificate found at level {}\n", level);
            for (g, s) in cert.alpha_strings() {
                human.push_str(&format!("  alpha({}) = {}\n", g, s));
            }
            human.push_str(&report_lines(&verification));
            let code = if verification.passed { 0 } else { 1 };
            let report = json!({
                "command": "secat",
                "inputs": { "file": file.display().to_string(), "model": m.name, "n": level },
                "bound": nmax,
                "status": if verification.passed { "certificate" } else { "fail" },
                "certificate": cert.alpha_strings(),
                "transcript": cert.transcript,
                "verification": verification,
            });
            Ok((code, report, human))
        }
        Outcome::NoCertificate {
            reason,
            exhaustive,
            transcript,
        } => {
            let human = format!(
                "no certificate at level {} ({}): {}\n",
                level,
                if exhaustive {
                    "exhaustive"
                } else {
                    "inconclusive"
                },
                reason
            );
            let report = json!({
                "command": "secat",
                "inputs": { "file": file.display().to_string(), "model": m.name, "n": level },
                "bound": nmax,
                "status": "no-certificate",
                "exhaustive": exhaustive,
                "reason": reason,
                "transcript": transcript,
            });
            Ok((1, report, human))
        }
    }
}

fn secat_table(
    command: &str,
    m: &Dgl,
    file: &PathBuf,
    nmax: usize,
    r: dgl::secat::SecatResult,
) -> Result<(i32, Value, String)> {
    let mut human = String::new();
    for level in &r.levels {
        if level.found {
            human.push_str(&format!(
                "level {}: certificate found (verified: {})\n",
                level.n,
                level.verified.unwrap_or(false)
            ));
        } else {
            human.push_str(&format!(
                "level {}: no certificate ({}) — {}\n",
                level.n,
                if level.exhaustive {
                    "exhaustive"
                } else {
                    "inconclusive"
                },
                level.reason
            ));
        }
    }
    match r.value {
        Some(v) => human.push_str(&format!("{} <= {} (certified)\n", command, v)),
        None => human.push_str(&format!(
            "no certificate up to the explored levels; no upper bound claimed\n"
        )),
    }
    let certificate = r
        .certificate
        .as_ref()
        .map(|c| serde_json::to_value(c.alpha_strings()).unwrap())
        .unwrap_or(Value::Null);
    let report = json!({
        "command": command,
        "inputs": { "file": file.display().to_string(), "model": m.name },
        "bound": nmax,
        "status": if r.value.is_some() { "certificate" } else { "no-certificate" },
        "value": r.value,
        "levels": r.levels,
        "certificate": certificate,
    });
    Ok((if r.value.is_some() { 0 } else { 1 }, report, human))
}
