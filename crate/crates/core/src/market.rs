//! Market primitives: segments, densities, interval sets and mechanisms.

use crate::error::{Error, Result};
use crate::rational::{half, int, parse_rational, Rational};
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde_json::Value;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Firm {
    A,
    B,
}

impl Firm {
    pub const BOTH: [Firm; 2] = [Firm::A, Firm::B];

    /// Location on the unit interval: `A` at 0, `B` at 1.
    pub fn location(self) -> Rational {
        match self {
            Firm::A => Rational::zero(),
            Firm::B => Rational::one(),
        }
    }

    pub fn rival(self) -> Firm {
        match self {
            Firm::A => Firm::B,
            Firm::B => Firm::A,
        }
    }

    pub fn distance(self, theta: &Rational) -> Rational {
        (theta - self.location()).abs()
    }
}

impl fmt::Display for Firm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Firm::A => "A",
            Firm::B => "B",
        })
    }
}

/// A value per firm.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ByFirm<T> {
    pub a: T,
    pub b: T,
}

impl<T> ByFirm<T> {
    pub fn new(a: T, b: T) -> Self {
        ByFirm { a, b }
    }
}

impl<T> Index<Firm> for ByFirm<T> {
    type Output = T;
    fn index(&self, firm: Firm) -> &T {
        match firm {
            Firm::A => &self.a,
            Firm::B => &self.b,
        }
    }
}

impl<T> IndexMut<Firm> for ByFirm<T> {
    fn index_mut(&mut self, firm: Firm) -> &mut T {
        match firm {
            Firm::A => &mut self.a,
            Firm::B => &mut self.b,
        }
    }
}

/// Which firm natively knows the locations of a segment's consumers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SegmentKind {
    /// `S_A`: only firm A knows.
    AOnly,
    /// `S_B`: only firm B knows.
    BOnly,
    /// `S_∅`: nobody knows.
    Neither,
    /// `S_AB`: both firms know.
    Both,
}

impl SegmentKind {
    pub const ALL: [SegmentKind; 4] = [
        SegmentKind::AOnly,
        SegmentKind::BOnly,
        SegmentKind::Neither,
        SegmentKind::Both,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::AOnly => "A-only",
            SegmentKind::BOnly => "B-only",
            SegmentKind::Neither => "neither",
            SegmentKind::Both => "both",
        }
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SegmentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A-only" | "A" | "a-only" => Ok(SegmentKind::AOnly),
            "B-only" | "B" | "b-only" => Ok(SegmentKind::BOnly),
            "neither" | "none" => Ok(SegmentKind::Neither),
            "both" | "AB" => Ok(SegmentKind::Both),
            other => Err(Error::parse("kind", format!("unknown segment kind `{other}`"))),
        }
    }
}

/// One value per segment, indexed by [`SegmentKind`].
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct PerSegment<T>(pub [T; 4]);

impl<T> PerSegment<T> {
    pub fn from_fn(mut f: impl FnMut(SegmentKind) -> T) -> Self {
        PerSegment(SegmentKind::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (SegmentKind, &T)> {
        SegmentKind::ALL.into_iter().zip(self.0.iter())
    }

    pub fn map<U>(&self, mut f: impl FnMut(SegmentKind, &T) -> U) -> PerSegment<U> {
        PerSegment::from_fn(|k| f(k, &self[k]))
    }
}

impl<T> Index<SegmentKind> for PerSegment<T> {
    type Output = T;
    fn index(&self, kind: SegmentKind) -> &T {
        &self.0[kind.index()]
    }
}

impl<T> IndexMut<SegmentKind> for PerSegment<T> {
    fn index_mut(&mut self, kind: SegmentKind) -> &mut T {
        &mut self.0[kind.index()]
    }
}

/// Finite union of intervals `[a, b)` inside `[0, 1]`, kept sorted, disjoint
/// and with touching pieces merged. An interval ending at 1 also contains 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct IntervalSet {
    spans: Vec<(Rational, Rational)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { spans: Vec::new() }
    }

    pub fn full() -> Self {
        IntervalSet {
            spans: vec![(Rational::zero(), Rational::one())],
        }
    }

    /// Builds a canonical set from arbitrary (unsorted, overlapping) input.
    pub fn new(spans: impl IntoIterator<Item = (Rational, Rational)>) -> Result<Self> {
        let mut raw: Vec<(Rational, Rational)> = Vec::new();
        for (a, b) in spans {
            if a.is_negative() || b > Rational::one() || a >= b {
                return Err(Error::IntervalViolation(format!(
                    "interval [{a}, {b}) must satisfy 0 <= a < b <= 1"
                )));
            }
            raw.push((a, b));
        }
        Ok(Self::normalized(raw))
    }

    /// Single interval `[a, b)`.
    pub fn interval(a: Rational, b: Rational) -> Result<Self> {
        Self::new([(a, b)])
    }

    fn normalized(mut raw: Vec<(Rational, Rational)>) -> Self {
        raw.retain(|(a, b)| a < b);
        raw.sort();
        let mut spans: Vec<(Rational, Rational)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match spans.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => spans.push((a, b)),
            }
        }
        IntervalSet { spans }
    }

    pub fn spans(&self) -> &[(Rational, Rational)] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn contains(&self, theta: &Rational) -> bool {
        self.spans
            .iter()
            .any(|(a, b)| a <= theta && (theta < b || (theta == b && b.is_one())))
    }

    pub fn measure(&self) -> Rational {
        self.spans.iter().map(|(a, b)| b - a).sum()
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cursor = Rational::zero();
        for (a, b) in &self.spans {
            if *a > cursor {
                out.push((cursor, *a));
            }
            cursor = *b;
        }
        if cursor < Rational::one() {
            out.push((cursor, Rational::one()));
        }
        IntervalSet { spans: out }
    }

    /// Reflection `x ↦ 1 − x`, re-expressed in half-open form.
    pub fn mirror(&self) -> Self {
        let one = Rational::one();
        Self::normalized(self.spans.iter().map(|(a, b)| (one - b, one - a)).collect())
    }

    pub fn union(&self, other: &IntervalSet) -> Self {
        Self::normalized(self.spans.iter().chain(&other.spans).cloned().collect())
    }

    pub fn intersection(&self, other: &IntervalSet) -> Self {
        let mut out = Vec::new();
        for (a, b) in &self.spans {
            for (c, d) in &other.spans {
                let lo = a.max(c);
                let hi = b.min(d);
                if lo < hi {
                    out.push((*lo, *hi));
                }
            }
        }
        Self::normalized(out)
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.spans.is_empty() {
            return f.write_str("∅");
        }
        for (i, (a, b)) in self.spans.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∪ ")?;
            }
            let close = if b.is_one() { ']' } else { ')' };
            write!(f, "[{a},{b}{close}")?;
        }
        Ok(())
    }
}

/// Constant-density piece `[lo, hi)` with the given level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DensityPiece {
    pub lo: Rational,
    pub hi: Rational,
    pub level: Rational,
}

static UNIFORM_PIECES: [DensityPiece; 1] = [DensityPiece {
    lo: Ratio::new_raw(0, 1),
    hi: Ratio::new_raw(1, 1),
    level: Ratio::new_raw(1, 1),
}];

/// Consumer density over `[0, 1]` within a segment. Integrates to one; the
/// segment's share of the population lives in [`SegmentSpec::mass`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum DensitySpec {
    #[default]
    Uniform,
    PiecewiseConstant(Vec<DensityPiece>),
}

impl DensitySpec {
    /// Breakpoints `0 = x₀ < … < x_k = 1` with one level per piece.
    pub fn piecewise(breakpoints: &[Rational], levels: &[Rational]) -> Result<Self> {
        let err = |reason: String| Error::DensityViolation {
            segment: SegmentKind::Neither,
            reason,
        };
        if breakpoints.len() != levels.len() + 1 || levels.is_empty() {
            return Err(err(format!(
                "{} breakpoints need {} levels, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                levels.len()
            )));
        }
        let pieces = breakpoints
            .windows(2)
            .zip(levels)
            .map(|(w, level)| DensityPiece {
                lo: w[0],
                hi: w[1],
                level: *level,
            })
            .collect();
        Ok(DensitySpec::PiecewiseConstant(pieces))
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        match self {
            DensitySpec::Uniform => &UNIFORM_PIECES,
            DensitySpec::PiecewiseConstant(p) => p,
        }
    }

    pub fn level_at(&self, theta: &Rational) -> Rational {
        let pieces = self.pieces();
        pieces
            .iter()
            .find(|p| p.lo <= *theta && *theta < p.hi)
            .or_else(|| pieces.last().filter(|p| p.hi == *theta))
            .map(|p| p.level)
            .unwrap_or_else(Rational::zero)
    }

    pub fn mirror(&self) -> Self {
        match self {
            DensitySpec::Uniform => DensitySpec::Uniform,
            DensitySpec::PiecewiseConstant(pieces) => {
                let one = Rational::one();
                DensitySpec::PiecewiseConstant(
                    pieces
                        .iter()
                        .rev()
                        .map(|p| DensityPiece {
                            lo: one - p.hi,
                            hi: one - p.lo,
                            level: p.level,
                        })
                        .collect(),
                )
            }
        }
    }

    pub fn total(&self) -> Rational {
        self.pieces().iter().map(|p| p.level * (p.hi - p.lo)).sum()
    }

    /// `∫_lo^hi (intercept + slope·θ) f(θ) dθ`.
    pub fn integrate_linear(&self, lo: &Rational, hi: &Rational, intercept: &Rational, slope: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for p in self.pieces() {
            let a = *lo.max(&p.lo);
            let b = *hi.min(&p.hi);
            if a >= b || p.level.is_zero() {
                continue;
            }
            let linear = intercept * (b - a) + slope * (b * b - a * a) * half();
            acc += p.level * linear;
        }
        acc
    }

    fn validate(&self, segment: SegmentKind) -> Result<()> {
        let err = |reason: String| Error::DensityViolation { segment, reason };
        let DensitySpec::PiecewiseConstant(pieces) = self else {
            return Ok(());
        };
        if pieces.is_empty() {
            return Err(err("no pieces".into()));
        }
        if !pieces[0].lo.is_zero() || !pieces[pieces.len() - 1].hi.is_one() {
            return Err(err("breakpoints must run from 0 to 1".into()));
        }
        for w in pieces.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(err("pieces must be contiguous".into()));
            }
        }
        for p in pieces {
            if p.lo >= p.hi {
                return Err(err(format!(
                    "breakpoints must increase strictly ({} >= {})",
                    p.lo, p.hi
                )));
            }
            if p.level.is_negative() {
                return Err(err(format!("negative level {}", p.level)));
            }
        }
        let total = self.total();
        if !total.is_one() {
            return Err(err(format!("density integrates to {total}, not 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SegmentSpec {
    pub kind: SegmentKind,
    pub mass: Rational,
    pub density: DensitySpec,
}

/// Valuation, transport cost and the four consumer segments. Firms sit at 0 and 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarketConfig {
    pub v: Rational,
    pub t: Rational,
    pub segments: PerSegment<SegmentSpec>,
}

impl MarketConfig {
    /// Uniform densities with masses ordered `(q_A, q_B, q_∅, q_AB)`.
    pub fn uniform(v: Rational, t: Rational, masses: [Rational; 4]) -> Result<Self> {
        let segments = PerSegment::from_fn(|kind| SegmentSpec {
            kind,
            mass: masses[kind as usize],
            density: DensitySpec::Uniform,
        });
        validate_market(MarketConfig { v, t, segments })
    }

    /// Everyone on `S_B`: B knows all locations, A knows none.
    pub fn one_segment(v: Rational, t: Rational) -> Result<Self> {
        let z = Rational::zero();
        Self::uniform(v, t, [z, Rational::one(), z, z])
    }

    /// Half the consumers on `S_A`, half on `S_B`.
    pub fn two_segment(v: Rational, t: Rational) -> Result<Self> {
        let z = Rational::zero();
        Self::uniform(v, t, [half(), half(), z, z])
    }

    /// A quarter of the consumers on each segment.
    pub fn four_segment(v: Rational, t: Rational) -> Result<Self> {
        let q = Ratio::new(1, 4);
        Self::uniform(v, t, [q, q, q, q])
    }

    pub fn mass(&self, kind: SegmentKind) -> Rational {
        self.segments[kind].mass
    }

    pub fn density(&self, kind: SegmentKind) -> &DensitySpec {
        &self.segments[kind].density
    }

    /// Same segments with a different transport cost (not re-validated).
    pub fn with_t(&self, t: Rational) -> Self {
        MarketConfig {
            v: self.v,
            t,
            segments: self.segments.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t.is_positive() {
            return Err(Error::NonPositiveTransportCost(self.t));
        }
        if self.v <= self.t * int(2) {
            return Err(Error::CoverageViolation { v: self.v, t: self.t });
        }
        let mut total = Rational::zero();
        for (kind, seg) in self.segments.iter() {
            if seg.kind != kind {
                return Err(Error::MassViolation(format!(
                    "segment slot {kind} holds a {} segment",
                    seg.kind
                )));
            }
            if seg.mass.is_negative() {
                return Err(Error::MassViolation(format!(
                    "segment {kind} has negative mass {}",
                    seg.mass
                )));
            }
            total += seg.mass;
            seg.density.validate(kind)?;
        }
        if !total.is_one() {
            return Err(Error::MassViolation(format!("segment masses sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// Returns the config unchanged if every invariant holds.
pub fn validate_market(config: MarketConfig) -> Result<MarketConfig> {
    config.validate()?;
    Ok(config)
}

/// `v − price − t·|θ − θ_firm|`.
pub fn consumer_utility(theta: &Rational, firm: Firm, price: &Rational, config: &MarketConfig) -> Result<Rational> {
    if theta.is_negative() || *theta > Rational::one() {
        return Err(Error::DomainError(format!("location {theta} outside [0, 1]")));
    }
    if price.is_negative() {
        return Err(Error::DomainError(format!("negative price {price}")));
    }
    Ok(config.v - price - config.t * firm.distance(theta))
}

/// `B` reveals `share_b_to_a` of `S_B` to `A`; `A` reveals `share_a_to_b` of `S_A` to `B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct SharingMechanism {
    pub share_b_to_a: IntervalSet,
    pub share_a_to_b: IntervalSet,
}

impl SharingMechanism {
    pub fn new(share_b_to_a: IntervalSet, share_a_to_b: IntervalSet) -> Self {
        SharingMechanism {
            share_b_to_a,
            share_a_to_b,
        }
    }

    pub fn no_sharing() -> Self {
        Self::default()
    }

    pub fn full_sharing() -> Self {
        Self::new(IntervalSet::full(), IntervalSet::full())
    }

    /// Mirror image with the firms' roles swapped.
    pub fn swapped(&self) -> Self {
        Self::new(self.share_a_to_b.mirror(), self.share_b_to_a.mirror())
    }
}

impl fmt::Display for SharingMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "B→A on S_B: {}; A→B on S_A: {}",
            self.share_b_to_a, self.share_a_to_b
        )
    }
}

/// Who knows a consumer's location on a stretch of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KnownBy {
    Both,
    AOnly,
    BOnly,
    Neither,
}

/// Locations known to each firm on one segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Knowledge {
    pub a_knows: IntervalSet,
    pub b_knows: IntervalSet,
}

impl Knowledge {
    /// Ordered cover of `[0, 1]` by maximal stretches with constant knowledge.
    pub fn spans(&self) -> Vec<(Rational, Rational, KnownBy)> {
        let mut cuts = vec![Rational::zero(), Rational::one()];
        for (a, b) in self.a_knows.spans().iter().chain(self.b_knows.spans()) {
            cuts.push(*a);
            cuts.push(*b);
        }
        cuts.sort();
        cuts.dedup();
        let mut out: Vec<(Rational, Rational, KnownBy)> = Vec::new();
        for w in cuts.windows(2) {
            let probe = (w[0] + w[1]) * half();
            let known = match (self.a_knows.contains(&probe), self.b_knows.contains(&probe)) {
                (true, true) => KnownBy::Both,
                (true, false) => KnownBy::AOnly,
                (false, true) => KnownBy::BOnly,
                (false, false) => KnownBy::Neither,
            };
            match out.last_mut() {
                Some(last) if last.2 == known => last.1 = w[1],
                _ => out.push((w[0], w[1], known)),
            }
        }
        out
    }
}

/// Native knowledge plus whatever the mechanism reveals.
pub fn knowledge_partition(mechanism: &SharingMechanism) -> PerSegment<Knowledge> {
    PerSegment::from_fn(|kind| match kind {
        SegmentKind::Both => Knowledge {
            a_knows: IntervalSet::full(),
            b_knows: IntervalSet::full(),
        },
        SegmentKind::Neither => Knowledge {
            a_knows: IntervalSet::empty(),
            b_knows: IntervalSet::empty(),
        },
        SegmentKind::BOnly => Knowledge {
            a_knows: mechanism.share_b_to_a.clone(),
            b_knows: IntervalSet::full(),
        },
        SegmentKind::AOnly => Knowledge {
            a_knows: IntervalSet::full(),
            b_knows: mechanism.share_a_to_b.clone(),
        },
    })
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

fn number(value: &Value, field: &str) -> Result<Rational> {
    match value {
        Value::Number(n) => {
            parse_rational(&n.to_string()).map_err(|_| Error::parse(field, format!("cannot read number {n}")))
        }
        Value::String(s) => {
            parse_rational(s).map_err(|_| Error::parse(field, format!("cannot read `{s}` as a rational")))
        }
        other => Err(Error::parse(
            field,
            format!("expected a number or \"p/q\" string, got {other}"),
        )),
    }
}

fn intervals(value: &Value, field: &str) -> Result<IntervalSet> {
    let Value::Array(items) = value else {
        return Err(Error::parse(field, "expected a list of [a, b] pairs"));
    };
    let mut spans = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let path = format!("{field}[{i}]");
        match item.as_array().map(Vec::as_slice) {
            Some([a, b]) => spans.push((number(a, &path)?, number(b, &path)?)),
            _ => return Err(Error::parse(path, "expected a pair [a, b]")),
        }
    }
    IntervalSet::new(spans).map_err(|e| Error::parse(field, e.to_string()))
}

fn density(value: Option<&Value>, field: &str) -> Result<DensitySpec> {
    match value {
        None | Some(Value::Null) => Ok(DensitySpec::Uniform),
        Some(Value::String(s)) if s == "uniform" => Ok(DensitySpec::Uniform),
        Some(Value::Object(map)) => {
            let list = |key: &str| -> Result<Vec<Rational>> {
                let path = format!("{field}.{key}");
                map.get(key)
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::parse(&path, "missing list"))?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| number(x, &format!("{path}[{i}]")))
                    .collect()
            };
            DensitySpec::piecewise(&list("breakpoints")?, &list("levels")?)
                .map_err(|e| Error::parse(field, e.to_string()))
        }
        Some(other) => Err(Error::parse(
            field,
            format!("expected \"uniform\" or {{breakpoints, levels}}, got {other}"),
        )),
    }
}

/// Parses a mechanism object `{share_B_to_A: [[a,b],…], share_A_to_B: […]}`.
/// Missing keys mean "share nothing".
pub fn mechanism_from_json(value: &Value) -> Result<SharingMechanism> {
    let Value::Object(map) = value else {
        return Err(Error::parse("mechanism", "expected an object"));
    };
    for key in map.keys() {
        if key != "share_B_to_A" && key != "share_A_to_B" {
            return Err(Error::parse(format!("mechanism.{key}"), "unknown key"));
        }
    }
    let side = |key: &str| match map.get(key) {
        Some(v) => intervals(v, &format!("mechanism.{key}")),
        None => Ok(IntervalSet::empty()),
    };
    Ok(SharingMechanism::new(side("share_B_to_A")?, side("share_A_to_B")?))
}

/// A market document: the config plus an optional embedded mechanism.
#[derive(Debug, Clone)]
pub struct MarketDocument {
    pub config: MarketConfig,
    pub mechanism: Option<SharingMechanism>,
}

/// Parses and validates a market document. Segments not listed get mass 0.
pub fn market_from_json(value: &Value) -> Result<MarketDocument> {
    let Value::Object(map) = value else {
        return Err(Error::parse("<root>", "expected an object"));
    };
    let v = number(map.get("v").ok_or_else(|| Error::parse("v", "missing"))?, "v")?;
    let t = number(map.get("t").ok_or_else(|| Error::parse("t", "missing"))?, "t")?;
    let list = map
        .get("segments")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("segments", "missing list"))?;
    let mut segments = PerSegment::from_fn(|kind| SegmentSpec {
        kind,
        mass: Rational::zero(),
        density: DensitySpec::Uniform,
    });
    let mut seen = Vec::new();
    for (i, seg) in list.iter().enumerate() {
        let path = format!("segments[{i}]");
        let kind: SegmentKind = seg
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::parse(format!("{path}.kind"), "missing"))?
            .parse()
            .map_err(|e: Error| Error::parse(format!("{path}.kind"), e.to_string()))?;
        if seen.contains(&kind) {
            return Err(Error::parse(
                format!("{path}.kind"),
                format!("duplicate segment {kind}"),
            ));
        }
        seen.push(kind);
        let mass = number(
            seg.get("mass")
                .ok_or_else(|| Error::parse(format!("{path}.mass"), "missing"))?,
            &format!("{path}.mass"),
        )?;
        let density = density(seg.get("density"), &format!("{path}.density"))?;
        segments[kind] = SegmentSpec { kind, mass, density };
    }
    let config = validate_market(MarketConfig { v, t, segments })?;
    let mechanism = map.get("mechanism").map(mechanism_from_json).transpose()?;
    Ok(MarketDocument { config, mechanism })
}

/// Parses document text; syntax errors carry line and column.
pub fn market_from_str(text: &str) -> Result<MarketDocument> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    market_from_json(&value)
}

/// Mechanism text: either a bare mechanism object or a document with a `mechanism` key.
pub fn mechanism_from_str(text: &str) -> Result<SharingMechanism> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    match value.get("mechanism") {
        Some(inner) => mechanism_from_json(inner),
        None => mechanism_from_json(&value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn q(n: i128, d: i128) -> Rational {
        rat(n, d)
    }

    #[test]
    fn validates_reference_worlds() {
        assert!(MarketConfig::four_segment(int(3), int(1)).is_ok());
        assert!(MarketConfig::two_segment(int(3), int(1)).is_ok());
        assert!(MarketConfig::one_segment(int(3), int(1)).is_ok());
    }

    #[test]
    fn rejects_uncovered_market() {
        let err = MarketConfig::four_segment(int(2), int(1)).unwrap_err();
        assert!(matches!(err, Error::CoverageViolation { .. }));
        let err = MarketConfig::four_segment(q(3, 2), int(1)).unwrap_err();
        assert!(matches!(err, Error::CoverageViolation { .. }));
    }

    #[test]
    fn rejects_bad_masses() {
        let z = Rational::zero();
        let err = MarketConfig::uniform(int(3), int(1), [q(1, 2), q(1, 4), z, z]).unwrap_err();
        assert!(matches!(err, Error::MassViolation(_)));
        let err = MarketConfig::uniform(int(3), int(1), [q(3, 2), q(-1, 2), z, z]).unwrap_err();
        assert!(matches!(err, Error::MassViolation(_)));
    }

    #[test]
    fn rejects_density_not_integrating_to_one() {
        let mut cfg = MarketConfig::four_segment(int(3), int(1)).unwrap();
        cfg.segments[SegmentKind::BOnly].density =
            DensitySpec::piecewise(&[int(0), q(1, 2), int(1)], &[int(1), q(1, 2)]).unwrap();
        assert!(matches!(
            validate_market(cfg.clone()),
            Err(Error::DensityViolation {
                segment: SegmentKind::BOnly,
                ..
            })
        ));
        cfg.segments[SegmentKind::BOnly].density =
            DensitySpec::piecewise(&[int(0), q(1, 2), int(1)], &[q(3, 2), q(1, 2)]).unwrap();
        assert!(validate_market(cfg).is_ok());
    }

    #[test]
    fn utility_examples() {
        let cfg = MarketConfig::four_segment(int(3), int(1)).unwrap();
        assert_eq!(consumer_utility(&int(0), Firm::A, &q(1, 2), &cfg).unwrap(), q(5, 2));
        assert_eq!(consumer_utility(&q(1, 4), Firm::B, &int(0), &cfg).unwrap(), q(9, 4));
        // Indifference between B at a matched price of 0 and A at t/2.
        assert_eq!(consumer_utility(&q(1, 4), Firm::A, &q(1, 2), &cfg).unwrap(), q(9, 4));
        assert!(consumer_utility(&q(3, 2), Firm::A, &int(0), &cfg).is_err());
        assert!(consumer_utility(&q(1, 2), Firm::A, &int(-1), &cfg).is_err());
    }

    #[test]
    fn knowledge_of_canonical_mechanisms() {
        let none = knowledge_partition(&SharingMechanism::no_sharing());
        assert!(none[SegmentKind::BOnly].a_knows.is_empty());
        assert_eq!(none[SegmentKind::BOnly].b_knows, IntervalSet::full());
        assert!(none[SegmentKind::Neither].b_knows.is_empty());
        assert_eq!(none[SegmentKind::Both].a_knows, IntervalSet::full());

        let full = knowledge_partition(&SharingMechanism::full_sharing());
        assert_eq!(full[SegmentKind::BOnly].a_knows, IntervalSet::full());
        assert_eq!(full[SegmentKind::AOnly].b_knows, IntervalSet::full());

        let m = SharingMechanism::new(IntervalSet::interval(q(1, 4), q(1, 2)).unwrap(), IntervalSet::empty());
        let k = knowledge_partition(&m);
        assert_eq!(k[SegmentKind::BOnly].a_knows.spans(), &[(q(1, 4), q(1, 2))]);
        assert_eq!(
            k[SegmentKind::BOnly].spans(),
            vec![
                (int(0), q(1, 4), KnownBy::BOnly),
                (q(1, 4), q(1, 2), KnownBy::Both),
                (q(1, 2), int(1), KnownBy::BOnly)
            ]
        );
    }

    #[test]
    fn interval_algebra() {
        let s = IntervalSet::new([(q(1, 2), q(3, 4)), (q(1, 4), q(1, 2)), (q(1, 8), q(1, 5))]).unwrap();
        assert_eq!(s.spans(), &[(q(1, 8), q(1, 5)), (q(1, 4), q(3, 4))]);
        assert!(s.contains(&q(1, 4)));
        assert!(!s.contains(&q(3, 4)));
        assert_eq!(s.measure(), q(3, 40) + q(1, 2));
        assert_eq!(s.mirror().spans(), &[(q(1, 4), q(3, 4)), (q(4, 5), q(7, 8))]);
        assert_eq!(s.complement().complement(), s);
        assert!(IntervalSet::full().contains(&int(1)));
        assert!(IntervalSet::interval(q(1, 2), q(1, 2)).is_err());
        assert!(IntervalSet::interval(q(-1, 2), q(1, 2)).is_err());
        assert!(IntervalSet::interval(q(1, 2), q(3, 2)).is_err());
    }

    #[test]
    fn json_document_round_trip() {
        let text = r#"{
            "v": 3, "t": "1",
            "segments": [
                {"kind": "A-only", "mass": "1/4"},
                {"kind": "B-only", "mass": 0.25, "density": "uniform"},
                {"kind": "neither", "mass": "1/4",
                 "density": {"breakpoints": [0, "1/2", 1], "levels": ["3/2", "1/2"]}},
                {"kind": "both", "mass": "1/4"}
            ],
            "mechanism": {"share_B_to_A": [["1/6", "1/3"]], "share_A_to_B": [["2/3", "5/6"]]}
        }"#;
        let doc = market_from_str(text).unwrap();
        assert_eq!(doc.config.mass(SegmentKind::BOnly), q(1, 4));
        assert_eq!(doc.config.density(SegmentKind::Neither).level_at(&q(1, 4)), q(3, 2));
        let m = doc.mechanism.unwrap();
        assert_eq!(m.share_b_to_a.spans(), &[(q(1, 6), q(1, 3))]);
        assert_eq!(mechanism_from_str(text).unwrap(), m);
    }

    #[test]
    fn json_errors_name_the_field() {
        let err = market_from_str(r#"{"v": 3, "t": 1, "segments": [{"kind": "B-only", "mass": "x"}]}"#).unwrap_err();
        assert!(
            matches!(&err, Error::Parse { field, .. } if field == "segments[0].mass"),
            "{err}"
        );
        let err = market_from_str("{\"v\": 3,").unwrap_err();
        assert!(
            matches!(&err, Error::Parse { field, .. } if field.starts_with("line")),
            "{err}"
        );
        let err = market_from_str(r#"{"v": "3/2", "t": 1, "segments": [{"kind": "B-only", "mass": 1}]}"#).unwrap_err();
        assert!(matches!(err, Error::CoverageViolation { .. }));
    }

    fn arb_spans() -> impl Strategy<Value = Vec<(Rational, Rational)>> {
        prop::collection::vec((0i128..48, 1i128..48), 0..6).prop_map(|raw| {
            raw.into_iter()
                .map(|(a, len)| {
                    let b = (a + len).min(48);
                    (rat(a, 48), rat(b.max(a + 1).min(48), 48))
                })
                .filter(|(a, b)| a < b)
                .collect()
        })
    }

    proptest! {
        #[test]
        fn normalization_is_canonical_and_idempotent(spans in arb_spans()) {
            let set = IntervalSet::new(spans.clone()).unwrap();
            for w in set.spans().windows(2) {
                prop_assert!(w[0].1 < w[1].0);
            }
            let again = IntervalSet::new(set.spans().to_vec()).unwrap();
            prop_assert_eq!(&again, &set);
            for k in 0..=96 {
                let x = rat(k, 96);
                let inside = spans.iter().any(|(a, b)| *a <= x && (x < *b || (x == *b && b.is_one())));
                prop_assert_eq!(set.contains(&x), inside);
            }
            prop_assert_eq!(set.mirror().mirror(), set.clone());
            prop_assert_eq!(set.measure() + set.complement().measure(), Rational::one());
        }
    }
}
