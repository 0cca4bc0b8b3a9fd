//! Classification of parameter boxes, tangency brackets, campaigns and plot
//! tables.
//!
//! Every classification other than `Unknown` is backed by evidence entries
//! with status `Verified`; [`Verdict::is_supported`] re-checks this.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::Enclosure;
use crate::complex::ComplexRect;
use crate::crossed::{check_cmc_family_with, family_status, BccOptions, CheckStatus};
use crate::henon::{closed_form_criteria, ParamBox};
use crate::interval::Interval;
use crate::krawczyk::{certify_nonreal_periodic, find_candidate};
use crate::params::{
    interpolate_data, load_anchors, subdivide, reference_anchor, AnchorBoxData, Family, FamilyRegion, MaxSizes,
    ParamError, RegionPosition,
};
use crate::special::{count_special_intersections, CountOptions, SpecialCount};

pub const RECORD_FORMAT: &str = "henon-certify-records";
pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Anchors(#[from] ParamError),
    #[error("no certified bracket at b = {b}: {detail}")]
    NoBracket { b: f64, detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad record: {0}")]
    Record(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Classification {
    HorseshoeClosedForm,
    HorseshoeCertified,
    NonMaximalEntropy,
    CMCVerified,
    TangencyBracket,
    Unknown,
}

impl Classification {
    pub const ALL: [Classification; 6] = [
        Classification::HorseshoeClosedForm,
        Classification::HorseshoeCertified,
        Classification::NonMaximalEntropy,
        Classification::CMCVerified,
        Classification::TangencyBracket,
        Classification::Unknown,
    ];

    pub fn is_horseshoe(self) -> bool {
        matches!(self, Classification::HorseshoeClosedForm | Classification::HorseshoeCertified)
    }

    /// Checks that must be `Verified` for this class.
    fn required(self) -> &'static [&'static str] {
        match self {
            Classification::HorseshoeClosedForm => &["region_above", "closed_form_horseshoe"],
            Classification::HorseshoeCertified => &["region_inside", "cmc_family", "special_count_two"],
            Classification::NonMaximalEntropy => &["region_below", "nonreal_periodic"],
            Classification::CMCVerified => &["region_inside", "cmc_family"],
            Classification::TangencyBracket => &["special_count_zero", "special_count_two"],
            Classification::Unknown => &[],
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for Classification {
    type Err = CertifyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Classification::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| CertifyError::Record(format!("unknown classification {s}")))
    }
}

/// One check that contributed to a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub check: String,
    pub inputs: String,
    pub status: CheckStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub seconds: f64,
}

impl Evidence {
    fn new(check: &str, inputs: String, status: CheckStatus, detail: Option<String>, t0: Instant) -> Self {
        Evidence { check: check.into(), inputs, status, detail, seconds: t0.elapsed().as_secs_f64() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub family: Family,
    pub param_box: ParamBox,
    pub classification: Classification,
    pub evidence: Vec<Evidence>,
    pub wall_time: f64,
}

impl Verdict {
    fn verified(&self, check: &str) -> bool {
        self.evidence.iter().any(|e| e.check == check && e.status == CheckStatus::Verified)
    }

    /// Whether the evidence carries every check the classification needs.
    pub fn is_supported(&self) -> bool {
        self.classification.required().iter().all(|c| self.verified(c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub family: Family,
    /// `None` covers the whole family region.
    pub window: Option<ParamBox>,
    pub caps: MaxSizes,
    pub bcc: BccOptions,
    pub count: CountOptions,
    /// Periods tried, in order, for the non-real orbit test.
    pub periods: Vec<usize>,
    pub seeds: usize,
    pub rng_seed: u64,
    /// Anchor file or directory; the bundled anchors when `None`.
    pub anchors: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub workers: usize,
    /// Also count special intersections on CMC-verified real boxes.
    pub count_on_cmc: bool,
}

impl CampaignConfig {
    pub fn new(family: Family) -> Self {
        CampaignConfig {
            family,
            window: None,
            caps: family.default_caps(),
            bcc: BccOptions { max_depth: 6, ..BccOptions::default() },
            count: CountOptions::default(),
            periods: vec![7, 5, 6, 8],
            seeds: 2000,
            rng_seed: 7,
            anchors: None,
            output: None,
            workers: 1,
            count_on_cmc: false,
        }
    }

    pub fn validate(&self) -> Result<(), CertifyError> {
        let bad = |m: &str| Err(CertifyError::InvalidConfig(m.into()));
        let c = &self.caps;
        if !(c.re_a > 0.0 && c.im_a > 0.0 && c.re_b > 0.0 && c.im_b > 0.0) {
            return bad("subdivision caps must be positive");
        }
        if self.workers == 0 {
            return bad("worker count must be positive");
        }
        if self.periods.is_empty() || self.periods.contains(&0) {
            return bad("periods must be positive");
        }
        if self.bcc.arc_segments == 0 || self.bcc.transverse_cells.0 == 0 || self.bcc.transverse_cells.1 == 0 {
            return bad("BCC granularity must be positive");
        }
        if let Some(w) = &self.window {
            if !window_is_empty(w) && subdivide(FamilyRegion::new(self.family), self.caps, Some(*w)).is_empty() {
                return bad("window does not meet the family region");
            }
        }
        Ok(())
    }
}

fn window_is_empty(w: &ParamBox) -> bool {
    w.a.is_empty() || w.b.is_empty()
}

/// Anchors shipped with the crate.
pub fn bundled_anchors() -> Vec<AnchorBoxData> {
    vec![reference_anchor()]
}

/// Parses `aRe:aRe,bRe:bRe[,aIm,bIm]`; each part is `lo:hi` or a single value.
pub fn parse_window(s: &str) -> Result<ParamBox, CertifyError> {
    let bad = || CertifyError::InvalidConfig(format!("bad window {s:?}"));
    let part = |p: &str| -> Result<Interval, CertifyError> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let iv = match p.split_once(':') {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Ok(Interval::EMPTY);
                }
                Interval::new(lo, hi)
            }
            None => Interval::point(num(p)?),
        };
        Ok(iv)
    };
    let parts: Vec<&str> = s.split(',').collect();
    let (re_a, re_b) = match parts.len() {
        2 | 4 => (part(parts[0])?, part(parts[1])?),
        _ => return Err(bad()),
    };
    let (im_a, im_b) = if parts.len() == 4 { (part(parts[2])?, part(parts[3])?) } else { (Interval::ZERO, Interval::ZERO) };
    Ok(ParamBox::new(ComplexRect::new(re_a, im_a), ComplexRect::new(re_b, im_b)))
}

fn fmt_box(p: &ParamBox) -> String {
    let iv = |i: Interval| format!("[{:e}, {:e}]", i.lo(), i.hi());
    if p.is_real() {
        format!("a={} b={}", iv(p.a.re), iv(p.b.re))
    } else {
        format!("a={}+i{} b={}+i{}", iv(p.a.re), iv(p.a.im), iv(p.b.re), iv(p.b.im))
    }
}

/// A certified tangency bracket at fixed `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangencyBracket {
    pub b: f64,
    pub a_lo: f64,
    pub a_hi: f64,
    pub warning: Option<String>,
    pub evidence: Vec<Evidence>,
}

impl TangencyBracket {
    pub fn width(&self) -> f64 {
        self.a_hi - self.a_lo
    }

    pub fn to_verdict(&self, family: Family, wall_time: f64) -> Verdict {
        Verdict {
            family,
            param_box: ParamBox::real(Interval::new(self.a_lo, self.a_hi), Interval::point(self.b)),
            classification: Classification::TangencyBracket,
            evidence: self.evidence.clone(),
            wall_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub format: String,
    pub version: u32,
    pub family: Family,
    pub window: Option<ParamBox>,
    pub boxes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub records: Vec<Verdict>,
    pub counts: BTreeMap<Classification, usize>,
}

impl CampaignSummary {
    pub fn unknown(&self) -> usize {
        self.counts.get(&Classification::Unknown).copied().unwrap_or(0)
    }

    /// Pairs of records whose boxes overlap with one non-maximal-entropy and
    /// one horseshoe verdict.
    pub fn contradictions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            if r.classification != Classification::NonMaximalEntropy {
                continue;
            }
            for (j, s) in self.records.iter().enumerate() {
                if s.classification.is_horseshoe() && interiors_meet(&r.param_box, &s.param_box) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn interiors_meet(p: &ParamBox, q: &ParamBox) -> bool {
    let meet = |x: Interval, y: Interval| {
        let z = x.intersect(&y);
        !z.is_empty() && (z.width() > 0.0 || (x.width() == 0.0 || y.width() == 0.0))
    };
    meet(p.a.re, q.a.re) && meet(p.a.im, q.a.im) && meet(p.b.re, q.b.re) && meet(p.b.im, q.b.im)
}

/// Anchors and configuration, validated once.
pub struct Certifier {
    cfg: CampaignConfig,
    anchors: Vec<AnchorBoxData>,
    region: FamilyRegion,
}

impl Certifier {
    pub fn new(cfg: CampaignConfig) -> Result<Self, CertifyError> {
        cfg.validate()?;
        let anchors = match &cfg.anchors {
            Some(path) => load_anchors(path)?,
            None => bundled_anchors(),
        };
        let region = FamilyRegion::new(cfg.family);
        Ok(Certifier { cfg, anchors, region })
    }

    pub fn with_anchors(cfg: CampaignConfig, anchors: Vec<AnchorBoxData>) -> Result<Self, CertifyError> {
        cfg.validate()?;
        let region = FamilyRegion::new(cfg.family);
        Ok(Certifier { cfg, anchors, region })
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.cfg
    }

    pub fn classify(&self, p: &ParamBox) -> Verdict {
        let start = Instant::now();
        let mut evidence = Vec::new();
        let class = self.decide(p, &mut evidence);
        let v = Verdict {
            family: self.cfg.family,
            param_box: *p,
            classification: class,
            evidence,
            wall_time: start.elapsed().as_secs_f64(),
        };
        debug_assert!(v.is_supported());
        v
    }

    fn decide(&self, p: &ParamBox, ev: &mut Vec<Evidence>) -> Classification {
        let t0 = Instant::now();
        let pos = self.region.position(p);
        let inputs = format!("family={} {}", self.cfg.family, fmt_box(p));
        let check = match pos {
            RegionPosition::Above => "region_above",
            RegionPosition::Below => "region_below",
            RegionPosition::Inside => "region_inside",
            RegionPosition::Undecided => "region",
        };
        let status = if pos == RegionPosition::Undecided { CheckStatus::Unknown } else { CheckStatus::Verified };
        ev.push(Evidence::new(check, inputs, status, None, t0));
        match pos {
            RegionPosition::Above => self.closed_form(p, ev),
            RegionPosition::Below => self.nonreal_periodic(p, ev),
            RegionPosition::Inside => self.cmc(p, ev),
            RegionPosition::Undecided => Classification::Unknown,
        }
    }

    fn closed_form(&self, p: &ParamBox, ev: &mut Vec<Evidence>) -> Classification {
        let t0 = Instant::now();
        let inputs = format!("a > 2(1+|b|)^2 on {}", fmt_box(p));
        if !p.is_real() {
            ev.push(Evidence::new("closed_form_horseshoe", inputs, CheckStatus::Unknown, Some("complex box".into()), t0));
            return Classification::Unknown;
        }
        let cf = closed_form_criteria(p.a.re, p.b.re);
        let status = if cf.horseshoe_bound { CheckStatus::Verified } else { CheckStatus::Unknown };
        ev.push(Evidence::new("closed_form_horseshoe", inputs, status, None, t0));
        if cf.horseshoe_bound {
            Classification::HorseshoeClosedForm
        } else {
            Classification::Unknown
        }
    }

    fn nonreal_periodic(&self, p: &ParamBox, ev: &mut Vec<Evidence>) -> Classification {
        let (a, b) = (Complex64::new(p.a.re.mid(), p.a.im.mid()), Complex64::new(p.b.re.mid(), p.b.im.mid()));
        for &k in &self.cfg.periods {
            let t0 = Instant::now();
            let cands = find_candidate(a, b, k, self.cfg.seeds, self.cfg.rng_seed);
            let mut tried = 0;
            for orbit in cands.iter().filter(|o| o.iter().any(|z| z.0.im.abs() > 1e-6 || z.1.im.abs() > 1e-6)) {
                tried += 1;
                let cert = certify_nonreal_periodic(p, k, orbit);
                if cert.is_nonreal_primitive() {
                    let x = cert.orbit[0].x;
                    let detail = format!(
                        "orbit point x ∈ [{:e}, {:e}] + i[{:e}, {:e}], {} Krawczyk iterations",
                        x.re.lo(),
                        x.re.hi(),
                        x.im.lo(),
                        x.im.hi(),
                        cert.outcome.iterations
                    );
                    let inputs = format!("period {k}, {} seeds, rng {}", self.cfg.seeds, self.cfg.rng_seed);
                    ev.push(Evidence::new("nonreal_periodic", inputs, CheckStatus::Verified, Some(detail), t0));
                    return Classification::NonMaximalEntropy;
                }
            }
            let inputs = format!("period {k}, {} seeds, rng {}", self.cfg.seeds, self.cfg.rng_seed);
            let detail = format!("{} orbits, {tried} non-real, none certified", cands.len());
            ev.push(Evidence::new("nonreal_periodic", inputs, CheckStatus::Unknown, Some(detail), t0));
        }
        Classification::Unknown
    }

    fn cmc(&self, p: &ParamBox, ev: &mut Vec<Evidence>) -> Classification {
        let t0 = Instant::now();
        let (a, b) = p.mid();
        let data = match interpolate_data(self.cfg.family, a, b, &self.anchors) {
            Ok(d) => d,
            Err(e) => {
                ev.push(Evidence::new("cmc_family", format!("anchors at ({a}, {b})"), CheckStatus::Unknown, Some(e.to_string()), t0));
                return Classification::Unknown;
            }
        };
        let sys = match data.build() {
            Ok(s) => s,
            Err(e) => {
                ev.push(Evidence::new("cmc_family", data.file_name(), CheckStatus::Unknown, Some(e.to_string()), t0));
                return Classification::Unknown;
            }
        };
        let o = &self.cfg.bcc;
        let opts = format!("{:?} mode, {} arcs, {}x{} cells, depth {}", o.mode, o.arc_segments, o.transverse_cells.0, o.transverse_cells.1, o.max_depth);
        let verdicts = check_cmc_family_with(p, &sys, o);
        for v in &verdicts {
            let (i, j) = v.transition;
            let detail = v.diagnostic.clone().or_else(|| Some(format!("depth {}", v.refinement_depth)));
            ev.push(Evidence {
                check: format!("bcc({i},{j})"),
                inputs: format!("{} {opts}", data.file_name()),
                status: v.status,
                detail,
                seconds: 0.0,
            });
        }
        let status = family_status(&verdicts);
        ev.push(Evidence::new("cmc_family", format!("{} {opts}", data.file_name()), status, None, t0));
        if status != CheckStatus::Verified {
            return Classification::Unknown;
        }
        if !(self.cfg.count_on_cmc && p.is_real()) {
            return Classification::CMCVerified;
        }
        let t1 = Instant::now();
        let rep = count_special_intersections(p, Some(&sys), self.cfg.family, &self.cfg.count);
        let inputs = format!("depth {}, {}", self.cfg.count.depth, fmt_box(p));
        let detail = Some(rep.notes.join("; "));
        match rep.count {
            SpecialCount::Two => {
                ev.push(Evidence::new("special_count_two", inputs, CheckStatus::Verified, detail, t1));
                Classification::HorseshoeCertified
            }
            SpecialCount::Zero => {
                ev.push(Evidence::new("special_count_zero", inputs, CheckStatus::Verified, detail, t1));
                Classification::CMCVerified
            }
            _ => {
                ev.push(Evidence::new("special_count", inputs, CheckStatus::Unknown, detail, t1));
                Classification::CMCVerified
            }
        }
    }

    /// Panics inside the checks become `Unknown` verdicts.
    pub fn classify_guarded(&self, p: &ParamBox) -> Verdict {
        let start = Instant::now();
        catch_unwind(AssertUnwindSafe(|| self.classify(p))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Verdict {
                family: self.cfg.family,
                param_box: *p,
                classification: Classification::Unknown,
                evidence: vec![Evidence::new("panic", fmt_box(p), CheckStatus::Unknown, Some(msg), start)],
                wall_time: start.elapsed().as_secs_f64(),
            }
        })
    }

    fn count_at(&self, a: f64, b: f64) -> (SpecialCount, Evidence) {
        let t0 = Instant::now();
        let p = ParamBox::point(a, b);
        let data = if b == 0.0 { None } else { interpolate_data(self.cfg.family, a, b, &self.anchors).ok() };
        let sys = data.as_ref().and_then(|d| d.build().ok());
        let rep = count_special_intersections(&p, sys.as_ref(), self.cfg.family, &self.cfg.count);
        let (check, status) = match rep.count {
            SpecialCount::Zero => ("special_count_zero", CheckStatus::Verified),
            SpecialCount::Two => ("special_count_two", CheckStatus::Verified),
            _ => ("special_count", CheckStatus::Unknown),
        };
        let inputs = format!("a={a:e} b={b:e} depth {}", self.cfg.count.depth);
        (rep.count, Evidence::new(check, inputs, status, Some(rep.notes.join("; ")), t0))
    }

    /// Bisection in `a` between a certified `Zero` and a certified `Two`.
    pub fn bracket_tangency(&self, b: f64, tol: f64) -> Result<TangencyBracket, CertifyError> {
        if !(tol > 0.0) {
            return Err(CertifyError::InvalidConfig("tolerance must be positive".into()));
        }
        let bi = Interval::point(b);
        let center = self.region.a_aprx(bi)?.mid();
        let chi = self.region.chi(bi)?.mid();
        let mut evidence = Vec::new();
        let eval = |a: f64, ev: &mut Vec<Evidence>| {
            let (c, e) = self.count_at(a, b);
            ev.push(e);
            c
        };
        let n = 8;
        let grid: Vec<f64> = (0..=n).map(|k| center - chi + 2.0 * chi * k as f64 / n as f64).collect();
        let counts: Vec<SpecialCount> = grid.iter().map(|&a| eval(a, &mut evidence)).collect();
        let first_two = counts.iter().position(|&c| c == SpecialCount::Two);
        let last_zero = counts
            .iter()
            .enumerate()
            .filter(|(k, &c)| c == SpecialCount::Zero && first_two.is_none_or(|t| *k < t))
            .map(|(k, _)| k)
            .next_back();
        let (Some(lo), Some(hi)) = (last_zero, first_two) else {
            let detail = format!(
                "counts on [{:.4}, {:.4}]: {:?}",
                grid[0],
                grid[n],
                counts
            );
            return Err(CertifyError::NoBracket { b, detail });
        };
        let (mut a_lo, mut a_hi) = (grid[lo], grid[hi]);
        let floor = tol / 8.0;
        // Push a_lo up towards the first uncertain point, then a_hi down.
        let mut target = a_hi;
        while target - a_lo > floor && a_hi - a_lo > tol {
            let m = 0.5 * (a_lo + target);
            if m <= a_lo || m >= target {
                break;
            }
            match eval(m, &mut evidence) {
                SpecialCount::Zero => a_lo = m,
                SpecialCount::Two => {
                    a_hi = m;
                    target = m;
                }
                _ => target = m,
            }
        }
        let mut target = a_lo.max(target);
        while a_hi - target > floor && a_hi - a_lo > tol {
            let m = 0.5 * (target + a_hi);
            if m <= target || m >= a_hi {
                break;
            }
            match eval(m, &mut evidence) {
                SpecialCount::Two => a_hi = m,
                SpecialCount::Zero => {
                    a_lo = m;
                    target = m;
                }
                _ => target = m,
            }
        }
        let warning = (a_hi - a_lo > tol)
            .then(|| format!("tolerance {tol:e} not reached; smallest certified bracket has width {:e}", a_hi - a_lo));
        // Keep only the evidence for the two endpoints.
        let keep = |a: f64| format!("a={a:e} b={b:e}");
        let evidence: Vec<Evidence> = evidence
            .into_iter()
            .filter(|e| e.inputs.starts_with(&keep(a_lo)) || e.inputs.starts_with(&keep(a_hi)))
            .collect();
        Ok(TangencyBracket { b, a_lo, a_hi, warning, evidence })
    }

    /// Boxes of the configured window, classified in parallel; `Unknown`
    /// boxes are split once and retried.
    pub fn run_campaign(&self) -> Result<CampaignSummary, CertifyError> {
        let boxes: Vec<ParamBox> = match &self.cfg.window {
            Some(w) if window_is_empty(w) => Vec::new(),
            w => subdivide(self.region, self.cfg.caps, *w).iter().collect(),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()
            .map_err(|e| CertifyError::InvalidConfig(e.to_string()))?;
        let records: Vec<Verdict> = pool.install(|| {
            boxes
                .par_iter()
                .flat_map_iter(|p| {
                    let v = self.classify_guarded(p);
                    if v.classification != Classification::Unknown {
                        return vec![v];
                    }
                    split_once(p).iter().map(|c| self.classify_guarded(c)).collect()
                })
                .collect()
        });
        let mut counts = BTreeMap::new();
        for r in &records {
            *counts.entry(r.classification).or_insert(0) += 1;
        }
        if let Some(path) = &self.cfg.output {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            write_records(&mut f, self.cfg.family, self.cfg.window, &records)?;
            f.flush()?;
        }
        Ok(CampaignSummary { records, counts })
    }
}

/// Halves every real extent of positive width.
fn split_once(p: &ParamBox) -> Vec<ParamBox> {
    let halves = |i: Interval| if i.width() > 0.0 { let (l, h) = i.bisect(); vec![l, h] } else { vec![i] };
    let mut out = Vec::new();
    for ar in halves(p.a.re) {
        for ai in halves(p.a.im) {
            for br in halves(p.b.re) {
                for bi in halves(p.b.im) {
                    out.push(ParamBox::new(ComplexRect::new(ar, ai), ComplexRect::new(br, bi)));
                }
            }
        }
    }
    out
}

pub fn classify(p: &ParamBox, cfg: &CampaignConfig) -> Result<Verdict, CertifyError> {
    Ok(Certifier::new(cfg.clone())?.classify(p))
}

pub fn bracket_tangency(b: f64, tol: f64, cfg: &CampaignConfig) -> Result<TangencyBracket, CertifyError> {
    Certifier::new(cfg.clone())?.bracket_tangency(b, tol)
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignSummary, CertifyError> {
    Certifier::new(cfg.clone())?.run_campaign()
}

/// Header line followed by one JSON record per line.
pub fn write_records(
    w: &mut dyn Write,
    family: Family,
    window: Option<ParamBox>,
    records: &[Verdict],
) -> Result<(), CertifyError> {
    let header = RecordHeader {
        format: RECORD_FORMAT.into(),
        version: RECORD_VERSION,
        family,
        window: window.filter(|w| !window_is_empty(w)),
        boxes: records.len(),
    };
    writeln!(w, "{}", json(&header)?)?;
    for r in records {
        writeln!(w, "{}", json(r)?)?;
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<String, CertifyError> {
    serde_json::to_string(v).map_err(|e| CertifyError::Record(e.to_string()))
}

pub fn read_records(text: &str) -> Result<(RecordHeader, Vec<Verdict>), CertifyError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines.next().ok_or_else(|| CertifyError::Record("empty file".into()))?;
    let header: RecordHeader = serde_json::from_str(head).map_err(|e| CertifyError::Record(e.to_string()))?;
    if header.format != RECORD_FORMAT || header.version != RECORD_VERSION {
        return Err(CertifyError::Record(format!("unsupported format {} v{}", header.format, header.version)));
    }
    let records = lines
        .map(|l| serde_json::from_str(l).map_err(|e| CertifyError::Record(e.to_string())))
        .collect::<Result<Vec<Verdict>, _>>()?;
    Ok((header, records))
}

pub enum PlotData<'a> {
    /// `(b, a, class)` at box midpoints.
    TrichotomyMap(&'a [Verdict]),
    /// `(b, a_lo, a_hi)` from `TangencyBracket` records.
    TgcCurve(&'a [Verdict]),
    /// Cell rectangles in the enclosure text format.
    Enclosure(&'a Enclosure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotReport {
    pub rows: usize,
    /// Informational only.
    pub notes: Vec<String>,
}

pub const TRICHOTOMY_HEADER: &str = "# b a class";
pub const TGC_HEADER: &str = "# b a_lo a_hi";

pub fn emit_plot_data(data: PlotData<'_>, w: &mut dyn Write) -> std::io::Result<PlotReport> {
    match data {
        PlotData::TrichotomyMap(records) => {
            writeln!(w, "{TRICHOTOMY_HEADER}")?;
            for r in records {
                let (a, b) = r.param_box.mid();
                writeln!(w, "{b:?} {a:?} {}", r.classification)?;
            }
            Ok(PlotReport { rows: records.len(), notes: vec![] })
        }
        PlotData::TgcCurve(records) => {
            writeln!(w, "{TGC_HEADER}")?;
            let mut rows: Vec<(f64, f64, f64)> = records
                .iter()
                .filter(|r| r.classification == Classification::TangencyBracket)
                .map(|r| (r.param_box.b.re.mid(), r.param_box.a.re.lo(), r.param_box.a.re.hi()))
                .collect();
            rows.sort_by(|x, y| x.0.total_cmp(&y.0));
            for (b, lo, hi) in &rows {
                writeln!(w, "{b:?} {lo:?} {hi:?}")?;
            }
            let mut notes = Vec::new();
            if rows.len() >= 2 {
                // Monotonicity of the tangency curve is not known; report it only.
                let up = rows.windows(2).all(|p| p[1].1 >= p[0].2);
                let down = rows.windows(2).all(|p| p[1].2 <= p[0].1);
                let shape = if up {
                    "brackets increase with b"
                } else if down {
                    "brackets decrease with b"
                } else {
                    "brackets not separated monotonically in b"
                };
                notes.push(format!("informational: {shape}"));
            }
            Ok(PlotReport { rows: rows.len(), notes })
        }
        PlotData::Enclosure(enc) => {
            w.write_all(enc.to_text().as_bytes())?;
            Ok(PlotReport { rows: enc.len(), notes: vec![] })
        }
    }
}
