//! Parameter regions, the `a_aprx` interpolant, parameter subdivision and
//! interpolated box systems.

use std::cmp::Ordering;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::ComplexRect;
use crate::geometry::{
    build_box, quad_to_coords, BoxShape, GeometryError, GlobalCuts, ProjectiveBox, Quadrilateral,
};
use crate::henon::ParamBox;
use crate::interval::Interval;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("no anchor grid brackets (a, b) = ({a}, {b})")]
    MissingAnchor { a: f64, b: f64 },
    #[error("{file}:{line}: {msg}")]
    ParseError {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("io error on {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Plus,
    Minus,
}

impl Family {
    pub fn n_boxes(self) -> usize {
        match self {
            Family::Plus => 4,
            Family::Minus => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Plus => "plus",
            Family::Minus => "minus",
        }
    }

    /// Default subdivision caps `(Re a, Im a, Re b)`.
    pub fn default_caps(self) -> MaxSizes {
        match self {
            Family::Plus => MaxSizes {
                re_a: 0.005,
                im_a: 0.01,
                re_b: 0.001,
                im_b: 0.001,
            },
            Family::Minus => MaxSizes {
                re_a: 0.001875,
                im_a: 0.01,
                re_b: 0.0005,
                im_b: 0.0005,
            },
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "plus" | "+" => Ok(Family::Plus),
            "minus" | "-" => Ok(Family::Minus),
            _ => Err(format!("unknown family {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub degree: u8,
}

pub fn transitions(family: Family) -> Vec<Transition> {
    let (list, double): (&[(usize, usize)], &[(usize, usize)]) = match family {
        Family::Plus => (
            &[(0, 0), (0, 2), (0, 3), (1, 0), (2, 2), (2, 3), (3, 1)],
            &[(0, 3), (2, 3)],
        ),
        Family::Minus => (
            &[(0, 0), (0, 2), (1, 0), (1, 2), (2, 4), (3, 4), (4, 1), (4, 3)],
            &[(2, 4), (3, 4)],
        ),
    };
    list.iter()
        .map(|&(from, to)| Transition {
            from,
            to,
            degree: if double.contains(&(from, to)) { 2 } else { 1 },
        })
        .collect()
}

// Table 1 as exact decimals: (10·b, 100·a).
const APRX_DATA: [(i64, i64); 21] = [
    (-10, 620),
    (-9, 560),
    (-8, 504),
    (-7, 452),
    (-6, 404),
    (-5, 361),
    (-4, 321),
    (-3, 285),
    (-2, 253),
    (-1, 225),
    (0, 200),
    (1, 221),
    (2, 245),
    (3, 272),
    (4, 303),
    (5, 337),
    (6, 376),
    (7, 418),
    (8, 465),
    (9, 515),
    (10, 570),
];

/// Piecewise-affine table `b ↦ a`, evaluated in exact rational arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct AprxTable {
    nodes: Vec<(BigRational, BigRational)>,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn exact(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite float")
}

/// Tightest interval of doubles containing `r`.
fn enclose(r: &BigRational) -> Interval {
    let approx = r.to_f64().unwrap_or(0.0);
    let mut lo = approx;
    while exact(lo) > *r {
        lo = lo.next_down();
    }
    let mut hi = approx;
    while exact(hi) < *r {
        hi = hi.next_up();
    }
    Interval::new(lo, hi)
}

impl AprxTable {
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self, ParamError> {
        let nodes: Vec<_> = pairs.iter().map(|&(b, a)| (exact(b), exact(a))).collect();
        Self::from_nodes(nodes)
    }

    fn from_nodes(nodes: Vec<(BigRational, BigRational)>) -> Result<Self, ParamError> {
        if nodes.len() < 2 || nodes.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(ParamError::OutOfRange(
                "table must have >= 2 strictly increasing b nodes".into(),
            ));
        }
        Ok(AprxTable { nodes })
    }

    /// The bundled 21-node table.
    pub fn standard() -> &'static AprxTable {
        static TABLE: OnceLock<AprxTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let nodes = APRX_DATA
                .iter()
                .map(|&(b, a)| (ratio(b, 10), ratio(a, 100)))
                .collect();
            AprxTable::from_nodes(nodes).expect("static table is valid")
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(b, a)` nodes rounded to the nearest double.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.nodes
            .iter()
            .map(|(b, a)| (b.to_f64().unwrap(), a.to_f64().unwrap()))
            .collect()
    }

    /// Node abscissae as intervals, each enclosing the exact decimal.
    pub fn node_bs(&self) -> Vec<Interval> {
        self.nodes.iter().map(|(b, _)| enclose(b)).collect()
    }

    fn segment(&self, b: &BigRational) -> usize {
        let k = self.nodes.partition_point(|(nb, _)| nb <= b);
        k.clamp(1, self.nodes.len() - 1) - 1
    }

    fn eval_exact(&self, b: &BigRational) -> BigRational {
        let k = self.segment(b);
        let (b0, a0) = &self.nodes[k];
        let (b1, a1) = &self.nodes[k + 1];
        a0 + (a1 - a0) * (b - b0) / (b1 - b0)
    }

    /// Slope of the affine piece containing `b`.
    pub fn slope_at(&self, b: f64) -> Interval {
        let k = self.segment(&exact(b));
        let (b0, a0) = &self.nodes[k];
        let (b1, a1) = &self.nodes[k + 1];
        enclose(&((a1 - a0) / (b1 - b0)))
    }

    /// Value at the exact decimal `num / den`, e.g. `(6, 10)` for `b = 0.60`.
    pub fn eval_decimal(&self, num: i64, den: i64) -> Result<Interval, ParamError> {
        if den == 0 {
            return Err(ParamError::OutOfRange("zero denominator".into()));
        }
        let b = ratio(num, den);
        let (first, last) = (&self.nodes[0].0, &self.nodes[self.nodes.len() - 1].0);
        if b < *first || b > *last {
            return Err(ParamError::OutOfRange(format!("b = {num}/{den} outside the table")));
        }
        Ok(enclose(&self.eval_exact(&b)))
    }

    /// Range of the interpolant over `b` (end segments extended by `eps`).
    pub fn eval(&self, b: Interval, eps: f64) -> Result<Interval, ParamError> {
        let first = self.nodes[0].0.to_f64().unwrap() - eps;
        let last = self.nodes[self.nodes.len() - 1].0.to_f64().unwrap() + eps;
        if b.is_empty() || b.lo() < first || b.hi() > last {
            return Err(ParamError::OutOfRange(format!(
                "b = {b:?} outside [{first}, {last}]"
            )));
        }
        let lo = exact(b.lo());
        let hi = exact(b.hi());
        let mut vmin = self.eval_exact(&lo);
        let mut vmax = vmin.clone();
        let mut consider = |v: BigRational| {
            if v < vmin {
                vmin = v.clone();
            }
            if v > vmax {
                vmax = v;
            }
        };
        consider(self.eval_exact(&hi));
        for (nb, na) in &self.nodes {
            if *nb > lo && *nb < hi {
                consider(na.clone());
            }
        }
        Ok(enclose(&vmin).hull(&enclose(&vmax)))
    }
}

/// `a_aprx(Re b)` over the bundled table with `ε = 0`.
pub fn a_aprx(b: Interval) -> Result<Interval, ParamError> {
    AprxTable::standard().eval(b, 0.0)
}

/// `χ±` over `Re b` with `ε = 0`.
pub fn chi(re_b: Interval, family: Family) -> Result<Interval, ParamError> {
    FamilyRegion::new(family).chi(re_b)
}

/// `F± = {(a, b) : b ∈ I±, |a − a_aprx(b)| ≤ χ±(b)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyRegion {
    pub family: Family,
    pub eps: f64,
    pub delta: f64,
}

/// Where a parameter box sits relative to `a_aprx ± χ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionPosition {
    /// Inside `F±`.
    Inside,
    /// Real `a ≤ a_aprx − χ`.
    Below,
    /// Real `a ≥ a_aprx + χ`.
    Above,
    /// Not decidable from the enclosures, or `b ∉ I±`.
    Undecided,
}

impl FamilyRegion {
    pub fn new(family: Family) -> Self {
        FamilyRegion {
            family,
            eps: 0.0,
            delta: 0.0,
        }
    }

    /// `Re b` range of `I±`.
    pub fn b_range(&self) -> Interval {
        match self.family {
            Family::Plus => Interval::new(-self.eps, 1.0 + self.eps),
            Family::Minus => Interval::new(-1.0 - self.eps, self.eps),
        }
    }

    pub fn contains_b(&self, b: &ComplexRect) -> bool {
        b.re.subset(&self.b_range()) && b.im.mag() <= self.delta
    }

    pub fn chi(&self, re_b: Interval) -> Result<Interval, ParamError> {
        if !re_b.subset(&self.b_range()) {
            return Err(ParamError::OutOfRange(format!(
                "Re b = {re_b:?} not in I{}",
                if self.family == Family::Plus { "+" } else { "-" }
            )));
        }
        Ok(match self.family {
            Family::Plus => enclose(&ratio(1, 10)),
            Family::Minus => {
                Interval::point(7.0 / 128.0) + (re_b.abs() * 5.0).div(&Interval::point(16.0)).unwrap()
            }
        })
    }

    pub fn a_aprx(&self, re_b: Interval) -> Result<Interval, ParamError> {
        AprxTable::standard().eval(re_b, self.eps)
    }

    /// Rigorous position of `p` relative to the region.
    pub fn position(&self, p: &ParamBox) -> RegionPosition {
        if !self.contains_b(&p.b) {
            return RegionPosition::Undecided;
        }
        let (Ok(center), Ok(chi)) = (self.a_aprx(p.b.re), self.chi(p.b.re)) else {
            return RegionPosition::Undecided;
        };
        let d = p.a - ComplexRect::real(center);
        if d.norm_sqr().hi() <= chi.sqr().lo() {
            return RegionPosition::Inside;
        }
        if p.a.is_real() {
            if d.re.hi() <= -chi.hi() {
                return RegionPosition::Below;
            }
            if d.re.lo() >= chi.hi() {
                return RegionPosition::Above;
            }
        }
        RegionPosition::Undecided
    }

    /// Non-rigorous point membership.
    pub fn contains_point(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        let r = self.b_range();
        if b.0 < r.lo() || b.0 > r.hi() || b.1.abs() > self.delta {
            return false;
        }
        let center = self.a_aprx(Interval::point(b.0)).unwrap().mid();
        let chi = self.chi(Interval::point(b.0)).unwrap().mid();
        (a.0 - center).hypot(a.1) <= chi
    }
}

/// Subdivision caps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxSizes {
    pub re_a: f64,
    pub im_a: f64,
    pub re_b: f64,
    pub im_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Slice {
    b: Interval,
    a_center: Interval,
    chi: f64,
    ds: f64,
    n_s: usize,
}

/// Covering of `region ∩ window` by parameter boxes.
#[derive(Debug, Clone)]
pub struct Subdivision {
    region: FamilyRegion,
    window: Option<ParamBox>,
    slices: Vec<Slice>,
    im_a: Vec<Interval>,
    im_b: Vec<Interval>,
    single: Option<ParamBox>,
}

/// Splits the real `b` range into slices aligned with the table nodes, then
/// each slice into parallelograms along the graph of `a_aprx`, then takes
/// bounding rectangles and crosses with `Im a`, `Im b` grids.
pub fn subdivide(region: FamilyRegion, caps: MaxSizes, window: Option<ParamBox>) -> Subdivision {
    assert!(caps.re_a > 0.0 && caps.im_a > 0.0 && caps.re_b > 0.0 && caps.im_b > 0.0);
    let b_range = region.b_range();
    let empty = Subdivision {
        region,
        window,
        slices: Vec::new(),
        im_a: Vec::new(),
        im_b: Vec::new(),
        single: None,
    };
    let mut b_span = b_range;
    if let Some(w) = &window {
        b_span = b_span.intersect(&w.b.re);
        if b_span.is_empty() {
            return empty;
        }
        // A window no larger than the caps is its own single piece.
        if w.a.re.width() <= caps.re_a
            && w.a.im.width() <= caps.im_a
            && w.b.re.width() <= caps.re_b
            && w.b.im.width() <= caps.im_b
        {
            return Subdivision {
                single: Some(*w),
                ..empty
            };
        }
    }

    let mut cuts = vec![b_span.lo()];
    for nb in AprxTable::standard().pairs().into_iter().map(|(b, _)| b) {
        if nb > b_span.lo() && nb < b_span.hi() {
            cuts.push(nb);
        }
    }
    cuts.push(b_span.hi());

    let mut slices = Vec::new();
    let mut chi_max: f64 = 0.0;
    for w in cuts.windows(2) {
        let (b0, b1) = (w[0], w[1]);
        let slope = AprxTable::standard().slope_at(0.5 * (b0 + b1)).mag();
        let mut db = caps.re_b;
        if slope * db >= caps.re_a {
            db = 0.5 * caps.re_a / slope;
        }
        let n = if b1 > b0 { ((b1 - b0) / db).ceil().max(1.0) as usize } else { 1 };
        let pieces = if b1 > b0 {
            Interval::new(b0, b1).split(n)
        } else {
            vec![Interval::point(b0)]
        };
        for b in pieces {
            let a_center = region.a_aprx(b).expect("b inside table range");
            let chi = region.chi(b).expect("b inside region").hi();
            chi_max = chi_max.max(chi);
            let ds = caps.re_a - a_center.width();
            let ds = ds - 4.0 * f64::EPSILON * (a_center.mag() + chi);
            let n_s = ((2.0 * chi) / ds).ceil().max(1.0) as usize;
            slices.push(Slice {
                b,
                a_center,
                chi,
                ds: 2.0 * chi / n_s as f64,
                n_s,
            });
        }
    }

    let mut im_a_span = Interval::new(-chi_max, chi_max);
    let mut im_b_span = Interval::new(-region.delta, region.delta);
    if let Some(w) = &window {
        im_a_span = im_a_span.intersect(&w.a.im);
        im_b_span = im_b_span.intersect(&w.b.im);
        if im_a_span.is_empty() || im_b_span.is_empty() {
            return empty;
        }
    }
    let grid = |span: Interval, cap: f64| {
        if span.width() == 0.0 {
            vec![span]
        } else {
            span.split((span.width() / cap).ceil().max(1.0) as usize)
        }
    };
    Subdivision {
        region,
        window,
        slices,
        im_a: grid(im_a_span, caps.im_a),
        im_b: grid(im_b_span, caps.im_b),
        single: None,
    }
}

impl Subdivision {
    pub fn iter(&self) -> impl Iterator<Item = ParamBox> + '_ {
        let single = self.single.into_iter();
        let pieces = self.slices.iter().flat_map(move |sl| {
            (0..sl.n_s).flat_map(move |k| {
                let s0 = -sl.chi + sl.ds * k as f64;
                let s1 = if k + 1 == sl.n_s { sl.chi } else { -sl.chi + sl.ds * (k + 1) as f64 };
                let re_a = Interval::new(
                    (Interval::point(sl.a_center.lo()) + s0).lo(),
                    (Interval::point(sl.a_center.hi()) + s1).hi(),
                );
                self.im_a.iter().flat_map(move |&im_a| {
                    self.im_b.iter().filter_map(move |&im_b| {
                        self.make_piece(sl, s0, s1, re_a, im_a, im_b)
                    })
                })
            })
        });
        single.chain(pieces)
    }

    fn make_piece(
        &self,
        sl: &Slice,
        s0: f64,
        s1: f64,
        re_a: Interval,
        im_a: Interval,
        im_b: Interval,
    ) -> Option<ParamBox> {
        // Drop pieces that miss the disk |a − a_aprx| ≤ χ entirely.
        let s = Interval::new(s0, s1);
        if (s.sqr() + im_a.sqr()).lo() > sl.chi * sl.chi * (1.0 + 1e-12) {
            return None;
        }
        let mut p = ParamBox::new(ComplexRect::new(re_a, im_a), ComplexRect::new(sl.b, im_b));
        if let Some(w) = &self.window {
            let a = p.a.intersect(&w.a);
            let b = p.b.intersect(&w.b);
            if a.is_empty() || b.is_empty() {
                return None;
            }
            p = ParamBox::new(a, b);
        }
        Some(p)
    }

    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.iter().next().is_none()
    }

    pub fn region(&self) -> &FamilyRegion {
        &self.region
    }
}

/// One anchor file: trellis points, shapes and cut offsets at a real parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorBoxData {
    pub family: Family,
    pub a: f64,
    pub b: f64,
    pub tx: Vec<f64>,
    pub ty: Vec<f64>,
    pub ax: Vec<f64>,
    pub bx: Vec<f64>,
    pub ay: Vec<f64>,
    pub by: Vec<f64>,
    pub delta_px: Vec<f64>,
    pub delta_qx: Vec<f64>,
    pub delta_py: Vec<f64>,
    pub delta_qy: Vec<f64>,
    /// Optional explicit global cuts `(P_X, Q_X, P_Y, Q_Y)`.
    pub cuts: Option<[f64; 4]>,
}

const ARRAY_KEYS: [&str; 10] = [
    "tx", "ty", "ax", "bx", "ay", "by", "delta_Px", "delta_Qx", "delta_Py", "delta_Qy",
];
const CUT_KEYS: [&str; 4] = ["P_X", "Q_X", "P_Y", "Q_Y"];

impl AnchorBoxData {
    fn arrays(&self) -> [&Vec<f64>; 10] {
        [
            &self.tx,
            &self.ty,
            &self.ax,
            &self.bx,
            &self.ay,
            &self.by,
            &self.delta_px,
            &self.delta_qx,
            &self.delta_py,
            &self.delta_qy,
        ]
    }

    fn arrays_mut(&mut self) -> [&mut Vec<f64>; 10] {
        [
            &mut self.tx,
            &mut self.ty,
            &mut self.ax,
            &mut self.bx,
            &mut self.ay,
            &mut self.by,
            &mut self.delta_px,
            &mut self.delta_qx,
            &mut self.delta_py,
            &mut self.delta_qy,
        ]
    }

    pub fn file_name(&self) -> String {
        format!("boxes_{}_a{:.2}_b{:.2}.txt", self.family, self.a, self.b)
    }

    /// Parses the `key[index] = value` body.
    pub fn parse(family: Family, a: f64, b: f64, text: &str, file: &str) -> Result<Self, ParamError> {
        let err = |line: usize, msg: String| ParamError::ParseError {
            file: file.to_string(),
            line,
            msg,
        };
        let mut data = AnchorBoxData {
            family,
            a,
            b,
            tx: vec![],
            ty: vec![],
            ax: vec![],
            bx: vec![],
            ay: vec![],
            by: vec![],
            delta_px: vec![],
            delta_qx: vec![],
            delta_py: vec![],
            delta_qy: vec![],
            cuts: None,
        };
        let mut raw: Vec<Vec<Option<f64>>> = vec![Vec::new(); 10];
        let mut cuts = [None; 4];
        for (n, line) in text.lines().enumerate() {
            let n = n + 1;
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line
                .split_once('=')
                .ok_or_else(|| err(n, format!("expected `key = value`, got {line:?}")))?;
            let value: f64 = rhs
                .trim()
                .parse()
                .map_err(|e| err(n, format!("bad number {:?}: {e}", rhs.trim())))?;
            let lhs = lhs.trim();
            if let Some(k) = CUT_KEYS.iter().position(|&c| c == lhs) {
                cuts[k] = Some(value);
                continue;
            }
            let (key, idx) = lhs
                .strip_suffix(']')
                .and_then(|s| s.split_once('['))
                .ok_or_else(|| err(n, format!("expected `key[index]`, got {lhs:?}")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|e| err(n, format!("bad index {idx:?}: {e}")))?;
            let k = ARRAY_KEYS
                .iter()
                .position(|&c| c == key.trim())
                .ok_or_else(|| err(n, format!("unknown key {key:?}")))?;
            let v = &mut raw[k];
            if v.len() <= idx {
                v.resize(idx + 1, None);
            }
            if v[idx].replace(value).is_some() {
                return Err(err(n, format!("duplicate {key}[{idx}]")));
            }
        }
        let nb = family.n_boxes();
        for (k, (slot, vals)) in data.arrays_mut().into_iter().zip(raw).enumerate() {
            let want = if k < 2 { 4 * nb } else { nb };
            if vals.len() != want || vals.iter().any(Option::is_none) {
                return Err(err(
                    0,
                    format!("{} needs exactly {want} entries", ARRAY_KEYS[k]),
                ));
            }
            *slot = vals.into_iter().map(Option::unwrap).collect();
        }
        match cuts {
            [None, None, None, None] => {}
            [Some(px), Some(qx), Some(py), Some(qy)] => data.cuts = Some([px, qx, py, qy]),
            _ => return Err(err(0, "P_X, Q_X, P_Y, Q_Y must be given together".into())),
        }
        Ok(data)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, vals) in ARRAY_KEYS.iter().zip(self.arrays()) {
            for (i, v) in vals.iter().enumerate() {
                out.push_str(&format!("{key}[{i}] = {v}\n"));
            }
        }
        if let Some(c) = self.cuts {
            for (key, v) in CUT_KEYS.iter().zip(c) {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        out
    }

    pub fn quadrilaterals(&self) -> Vec<Quadrilateral> {
        (0..self.family.n_boxes())
            .map(|i| {
                let t = |k: usize| (self.tx[4 * i + k], self.ty[4 * i + k]);
                Quadrilateral::from_trellis([t(0), t(1), t(2), t(3)])
            })
            .collect()
    }

    pub fn shape(&self, i: usize) -> BoxShape {
        BoxShape {
            ax: self.ax[i],
            bx: self.bx[i],
            ay: self.ay[i],
            by: self.by[i],
            delta_px: self.delta_px[i],
            delta_qx: self.delta_qx[i],
            delta_py: self.delta_py[i],
            delta_qy: self.delta_qy[i],
        }
    }

    /// `P_X` from the first box, the other three cuts from the last box,
    /// unless given explicitly.
    pub fn global_cuts(&self) -> Result<GlobalCuts, GeometryError> {
        if let Some([px, qx, py, qy]) = self.cuts {
            return Ok(GlobalCuts { px, qx, py, qy });
        }
        let quads = self.quadrilaterals();
        let last = quads.len() - 1;
        let first = quad_to_coords(&quads[0])?;
        let lastc = quad_to_coords(&quads[last])?;
        Ok(GlobalCuts {
            px: first.p_x + self.delta_px[0],
            qx: lastc.q_x + self.delta_qx[last],
            py: lastc.p_y + self.delta_py[last],
            qy: lastc.q_y + self.delta_qy[last],
        })
    }

    pub fn build(&self) -> Result<BoxSystem, ParamError> {
        let cuts = self.global_cuts()?;
        let boxes = self
            .quadrilaterals()
            .iter()
            .enumerate()
            .map(|(i, q)| build_box(q, &self.shape(i), &cuts, i, self.family))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BoxSystem {
            family: self.family,
            boxes,
            transitions: transitions(self.family),
            cuts,
            quads: self.quadrilaterals(),
        })
    }

    fn lerp(&self, other: &AnchorBoxData, t: f64, a: f64, b: f64) -> AnchorBoxData {
        if t == 0.0 {
            return AnchorBoxData { a, b, ..self.clone() };
        }
        if t == 1.0 {
            return AnchorBoxData { a, b, ..other.clone() };
        }
        let mix = |x: f64, y: f64| x + t * (y - x);
        let mut out = self.clone();
        out.a = a;
        out.b = b;
        for (dst, src) in out.arrays_mut().into_iter().zip(other.arrays()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = mix(*d, *s);
            }
        }
        out.cuts = match (self.cuts, other.cuts) {
            (Some(c0), Some(c1)) => Some(std::array::from_fn(|k| mix(c0[k], c1[k]))),
            _ => None,
        };
        out
    }
}

/// Parses `boxes_<family>_a<val>_b<val>.txt`.
pub fn parse_anchor_name(name: &str) -> Option<(Family, f64, f64)> {
    let stem = name.strip_prefix("boxes_")?.strip_suffix(".txt")?;
    let (family, rest) = stem.split_once("_a")?;
    let (a, b) = rest.split_once("_b")?;
    Some((family.parse().ok()?, a.parse().ok()?, b.parse().ok()?))
}

/// Loads one anchor file, or every anchor file in a directory.
pub fn load_anchors(path: &Path) -> Result<Vec<AnchorBoxData>, ParamError> {
    let io = |e| ParamError::Io(path.to_path_buf(), e);
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| parse_anchor_name(n).is_some())
            })
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let mut out = Vec::new();
    for f in files {
        let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let (family, a, b) = parse_anchor_name(&name).ok_or_else(|| ParamError::ParseError {
            file: name.clone(),
            line: 0,
            msg: "file name must look like boxes_<family>_a<val>_b<val>.txt".into(),
        })?;
        let text = std::fs::read_to_string(&f).map_err(|e| ParamError::Io(f.clone(), e))?;
        out.push(AnchorBoxData::parse(family, a, b, &text, &name)?);
    }
    Ok(out)
}

fn bracket<T>(items: &[T], key: impl Fn(&T) -> f64, x: f64) -> Option<(usize, usize, f64)> {
    let tol = 1e-9;
    if let Some(i) = items.iter().position(|it| (key(it) - x).abs() <= tol) {
        return Some((i, i, 0.0));
    }
    let mut below: Option<usize> = None;
    let mut above: Option<usize> = None;
    for (i, it) in items.iter().enumerate() {
        let k = key(it);
        if k < x && below.is_none_or(|j| k > key(&items[j])) {
            below = Some(i);
        }
        if k > x && above.is_none_or(|j| k < key(&items[j])) {
            above = Some(i);
        }
    }
    let (lo, hi) = (below?, above?);
    let t = (x - key(&items[lo])) / (key(&items[hi]) - key(&items[lo]));
    Some((lo, hi, t))
}

/// Interpolated anchor data at `(a, b)`: linear in `a` within each bracketing
/// `b` row, then linear in `b`.
pub fn interpolate_data(
    family: Family,
    a: f64,
    b: f64,
    anchors: &[AnchorBoxData],
) -> Result<AnchorBoxData, ParamError> {
    let missing = || ParamError::MissingAnchor { a, b };
    let fam: Vec<&AnchorBoxData> = anchors.iter().filter(|d| d.family == family).collect();
    let mut rows: Vec<f64> = fam.iter().map(|d| d.b).collect();
    rows.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    rows.dedup_by(|x, y| (*x - *y).abs() <= 1e-9);
    let (r0, r1, tb) = bracket(&rows, |&r| r, b).ok_or_else(missing)?;
    let along_row = |row: f64| -> Result<AnchorBoxData, ParamError> {
        let in_row: Vec<&AnchorBoxData> = fam
            .iter()
            .copied()
            .filter(|d| (d.b - row).abs() <= 1e-9)
            .collect();
        let (i0, i1, ta) = bracket(&in_row, |d| d.a, a).ok_or_else(missing)?;
        Ok(in_row[i0].lerp(in_row[i1], ta, a, row))
    };
    let d0 = along_row(rows[r0])?;
    if r0 == r1 {
        return Ok(AnchorBoxData { b, ..d0 });
    }
    let d1 = along_row(rows[r1])?;
    Ok(d0.lerp(&d1, tb, a, b))
}

/// Box system for the whole parameter box, built at the real midpoint.
pub fn interpolate_system(
    p: &ParamBox,
    family: Family,
    anchors: &[AnchorBoxData],
) -> Result<BoxSystem, ParamError> {
    let (a, b) = p.mid();
    interpolate_data(family, a, b, anchors)?.build()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSystem {
    pub family: Family,
    pub boxes: Vec<ProjectiveBox>,
    pub transitions: Vec<Transition>,
    pub cuts: GlobalCuts,
    pub quads: Vec<Quadrilateral>,
}

impl BoxSystem {
    pub fn transition(&self, from: usize, to: usize) -> Option<Transition> {
        self.transitions
            .iter()
            .copied()
            .find(|t| t.from == from && t.to == to)
    }
}

/// Box data at `(a, b) = (5.7, 1.0)`, bundled.
pub const PLUS_A570_B100: &str = include_str!("../data/boxes_plus_a5.70_b1.00.txt");

pub fn reference_anchor() -> AnchorBoxData {
    AnchorBoxData::parse(
        Family::Plus,
        5.7,
        1.0,
        PLUS_A570_B100,
        "boxes_plus_a5.70_b1.00.txt",
    )
    .expect("bundled anchor parses")
}

/// Tightest double interval around the fraction `num / den`.
pub fn enclose_decimal(num: i64, den: i64) -> Interval {
    enclose(&ratio(num, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_nodes() {
        assert_eq!(AprxTable::standard().len(), 21);
        assert!(a_aprx(Interval::point(0.0)).unwrap().contains(2.0));
        assert!(a_aprx(Interval::point(1.0)).unwrap().contains(5.7));
        assert!(a_aprx(Interval::point(-1.0)).unwrap().contains(6.2));
        assert!(a_aprx(Interval::point(1.01)).is_err());
    }

    #[test]
    fn enclosure_is_tight() {
        let v = a_aprx(Interval::point(1.0)).unwrap();
        assert!(v.hi() <= v.lo().next_up());
        let c = enclose_decimal(1, 10);
        assert!(c.contains(0.1) && c.width() <= 2e-17);
    }

    #[test]
    fn decimal_nodes_are_exact() {
        let t = AprxTable::standard();
        let v = t.eval_decimal(6, 10).unwrap();
        assert!(v.contains(3.76) && v.hi() <= v.lo().next_up());
        assert!(t.eval_decimal(101, 100).is_err());
        assert!(t.eval_decimal(1, 0).is_err());
    }

    #[test]
    fn range_over_a_node() {
        let v = a_aprx(Interval::new(-0.05, 0.05)).unwrap();
        assert!(v.contains(2.0));
        assert!(v.contains(2.105) && v.contains(2.125));
    }

    #[test]
    fn transition_sets() {
        let plus = transitions(Family::Plus);
        assert_eq!(plus.len(), 7);
        assert_eq!(plus.iter().filter(|t| t.degree == 2).count(), 2);
        assert_eq!(transitions(Family::Minus).len(), 8);
    }

    #[test]
    fn anchor_names() {
        assert_eq!(
            parse_anchor_name("boxes_minus_a2.25_b-0.10.txt"),
            Some((Family::Minus, 2.25, -0.1))
        );
        assert_eq!(parse_anchor_name("notes.txt"), None);
    }

    #[test]
    fn parse_rejects_garbage() {
        let e = AnchorBoxData::parse(Family::Plus, 1.0, 1.0, "tx[0] = abc\n", "f");
        assert!(matches!(e, Err(ParamError::ParseError { line: 1, .. })));
        let e = AnchorBoxData::parse(Family::Plus, 1.0, 1.0, "tx[0] = 1\n", "f");
        assert!(matches!(e, Err(ParamError::ParseError { .. })));
    }

    #[test]
    fn reference_round_trip_text() {
        let d = reference_anchor();
        assert_eq!(d.tx[0], 3.58844);
        let again = AnchorBoxData::parse(Family::Plus, 5.7, 1.0, &d.to_text(), "x").unwrap();
        assert_eq!(again, d);
    }
}
