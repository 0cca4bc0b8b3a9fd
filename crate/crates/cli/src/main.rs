use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use henon_core::cells::{enclose_julia, Enclosure};
use henon_core::certify::{
    emit_plot_data, parse_window, read_records, write_records, CampaignConfig, Certifier, Classification, Evidence,
    PlotData, Verdict,
};
use henon_core::crossed::{check_cmc_family_with, family_status, CheckStatus};
use henon_core::krawczyk::{certify_nonreal_periodic, find_candidate};
use henon_core::params::{interpolate_data, Family, FamilyRegion};
use henon_core::{Interval, ParamBox};

#[derive(Parser)]
#[command(name = "henon-certify", version, about = "Validated classification of Hénon parameters")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value = "plus")]
    family: Family,
    /// `aRe:aRe,bRe:bRe[,aIm,bIm]`
    #[arg(long)]
    window: Option<String>,
    /// BCC refinement depth, or grid depth for `enclose` and `tgc`.
    #[arg(long)]
    depth: Option<u32>,
    /// Anchor file or directory (bundled anchors by default).
    #[arg(long)]
    anchors: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify the window as one parameter box.
    Classify(Common),
    /// Subdivide the window and classify every piece.
    Campaign {
        #[command(flatten)]
        common: Common,
        /// Caps `Re a,Im a,Re b,Im b` (family defaults otherwise).
        #[arg(long)]
        caps: Option<String>,
    },
    /// Boundary compatibility check of every transition.
    Bcc(Common),
    /// Search and certify a non-real periodic orbit.
    Periodic {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 7)]
        period: usize,
        #[arg(long, default_value_t = 2000)]
        seeds: usize,
    },
    /// Julia set enclosure in the enclosure text format.
    Enclose(Common),
    /// Tangency brackets at fixed `b`.
    Tgc {
        #[command(flatten)]
        common: Common,
        #[arg(long = "b", required = true, value_delimiter = ',')]
        bs: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Plot tables from a record or enclosure file.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        what: What,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    TrichotomyMap,
    TgcCurve,
    Enclosure,
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn window(c: &Common) -> Result<Option<ParamBox>> {
    c.window.as_deref().map(parse_window).transpose().map_err(Into::into)
}

fn required_window(c: &Common) -> Result<ParamBox> {
    window(c)?.context("--window is required")
}

fn config(c: &Common) -> Result<CampaignConfig> {
    let mut cfg = CampaignConfig::new(c.family);
    cfg.window = window(c)?;
    cfg.anchors = c.anchors.clone();
    cfg.output = c.out.clone();
    cfg.workers = c.workers;
    if let Some(d) = c.depth {
        cfg.bcc.max_depth = d;
        cfg.count.depth = d.max(cfg.count.depth);
    }
    Ok(cfg)
}

fn parse_caps(s: &str, cfg: &mut CampaignConfig) -> Result<()> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>()?;
    if v.len() != 4 {
        bail!("--caps needs four values");
    }
    cfg.caps.re_a = v[0];
    cfg.caps.im_a = v[1];
    cfg.caps.re_b = v[2];
    cfg.caps.im_b = v[3];
    Ok(())
}

fn exit_for(records: &[Verdict]) -> u8 {
    if records.iter().any(|r| r.classification == Classification::Unknown) {
        2
    } else {
        0
    }
}

fn emit(c: &Common, family: Family, win: Option<ParamBox>, records: &[Verdict]) -> Result<()> {
    let mut w = sink(&c.out)?;
    write_records(&mut w, family, win, records)?;
    w.flush()?;
    Ok(())
}

/// `[a_aprx − χ, a_aprx + χ] × {b}`, or the line `a = 0` outside the table.
fn tgc_window(family: Family, b: f64) -> ParamBox {
    let region = FamilyRegion::new(family);
    let bi = Interval::point(b);
    match (region.a_aprx(bi), region.chi(bi)) {
        (Ok(c), Ok(chi)) => ParamBox::real(Interval::new((c - chi).lo(), (c + chi).hi()), bi),
        _ => ParamBox::point(0.0, b),
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Classify(c) => {
            let p = required_window(&c)?;
            let cert = Certifier::new(config(&c)?)?;
            let v = cert.classify(&p);
            eprintln!("{} ({:.2} s)", v.classification, v.wall_time);
            emit(&c, c.family, Some(p), std::slice::from_ref(&v))?;
            Ok(exit_for(&[v]))
        }
        Cmd::Campaign { common: c, caps } => {
            let mut cfg = config(&c)?;
            if let Some(s) = caps {
                parse_caps(&s, &mut cfg)?;
            }
            // The record file is written by the campaign itself.
            let to_stdout = cfg.output.is_none();
            let cert = Certifier::new(cfg)?;
            let summary = cert.run_campaign()?;
            if to_stdout {
                emit(&c, c.family, cert.config().window, &summary.records)?;
            }
            for (class, n) in &summary.counts {
                eprintln!("{class}: {n}");
            }
            if !summary.contradictions().is_empty() {
                bail!("contradictory verdicts: {:?}", summary.contradictions());
            }
            Ok(exit_for(&summary.records))
        }
        Cmd::Bcc(c) => {
            let p = required_window(&c)?;
            let cfg = config(&c)?;
            cfg.validate()?;
            let anchors = match &cfg.anchors {
                Some(path) => henon_core::params::load_anchors(path)?,
                None => henon_core::certify::bundled_anchors(),
            };
            let (a, b) = p.mid();
            let data = interpolate_data(cfg.family, a, b, &anchors)?;
            let sys = data.build()?;
            let verdicts = check_cmc_family_with(&p, &sys, &cfg.bcc);
            let mut w = sink(&c.out)?;
            for v in &verdicts {
                writeln!(w, "{}", serde_json::to_string(v)?)?;
            }
            w.flush()?;
            let status = family_status(&verdicts);
            eprintln!("{}: {:?}", data.file_name(), status);
            Ok(if status == CheckStatus::Verified { 0 } else { 2 })
        }
        Cmd::Periodic { common: c, period, seeds } => {
            let p = required_window(&c)?;
            let t0 = Instant::now();
            let (a, b) = (Complex64::new(p.a.re.mid(), p.a.im.mid()), Complex64::new(p.b.re.mid(), p.b.im.mid()));
            let cands = find_candidate(a, b, period, seeds, 7);
            let mut w = sink(&c.out)?;
            let mut found = false;
            for o in &cands {
                let cert = certify_nonreal_periodic(&p, period, o);
                found |= cert.is_nonreal_primitive();
                writeln!(w, "{}", serde_json::to_string(&cert)?)?;
            }
            w.flush()?;
            eprintln!("{} orbits of period {period}, non-real certified: {found} ({:.2} s)", cands.len(), t0.elapsed().as_secs_f64());
            Ok(if found { 0 } else { 2 })
        }
        Cmd::Enclose(c) => {
            let p = required_window(&c)?;
            let enc = enclose_julia(&p, None, c.depth)?;
            let mut w = sink(&c.out)?;
            emit_plot_data(PlotData::Enclosure(&enc), &mut w)?;
            w.flush()?;
            eprintln!("{} cells", enc.len());
            Ok(0)
        }
        Cmd::Tgc { common: c, bs, tol } => {
            let cert = Certifier::new(config(&c)?)?;
            let mut records = Vec::new();
            for b in bs {
                let t0 = Instant::now();
                match cert.bracket_tangency(b, tol) {
                    Ok(br) => {
                        if let Some(wn) = &br.warning {
                            eprintln!("warning at b = {b}: {wn}");
                        }
                        records.push(br.to_verdict(c.family, t0.elapsed().as_secs_f64()));
                    }
                    Err(e) => {
                        eprintln!("{e}");
                        records.push(Verdict {
                            family: c.family,
                            param_box: tgc_window(c.family, b),
                            classification: Classification::Unknown,
                            evidence: vec![Evidence {
                                check: "special_count".into(),
                                inputs: format!("b={b:e}"),
                                status: CheckStatus::Unknown,
                                detail: Some(e.to_string()),
                                seconds: t0.elapsed().as_secs_f64(),
                            }],
                            wall_time: t0.elapsed().as_secs_f64(),
                        });
                    }
                }
            }
            emit(&c, c.family, None, &records)?;
            Ok(exit_for(&records))
        }
        Cmd::Plot { input, what, out } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let mut w = sink(&out)?;
            let report = match what {
                What::Enclosure => {
                    let enc = Enclosure::from_text(&text)?;
                    emit_plot_data(PlotData::Enclosure(&enc), &mut w)?
                }
                What::TrichotomyMap => emit_plot_data(PlotData::TrichotomyMap(&read_records(&text)?.1), &mut w)?,
                What::TgcCurve => emit_plot_data(PlotData::TgcCurve(&read_records(&text)?.1), &mut w)?,
            };
            w.flush()?;
            for n in report.notes {
                eprintln!("{n}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
