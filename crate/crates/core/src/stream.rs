//! Stream model: updates, configuration, the text stream format and the
//! report record every estimator returns.
//!
//! Indices are 1-based. An update `(i, v)` adds `v` to coordinate `i` of the
//! frequency vector; updates with `|v| > 1` are kept as one event rather than
//! expanded into unit updates. All logarithms are natural; conversion to bits
//! happens only when a report is formatted.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{invalid, Error, ParseErrorKind, Result};

/// One turnstile update: `A[index] += delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UpdateEvent {
    pub index: u64,
    pub delta: i64,
}

impl UpdateEvent {
    pub fn new(index: u64, delta: i64) -> Self {
        Self { index, delta }
    }

    pub fn insert(index: u64) -> Self {
        Self { index, delta: 1 }
    }

    pub fn delete(index: u64) -> Self {
        Self { index, delta: -1 }
    }
}

/// Which final-vector promise the stream makes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamModel {
    /// Every coordinate is nonnegative once the stream ends.
    StrictTurnstile,
    /// No sign promise; `||A||_1` is not available exactly.
    GeneralUpdate,
}

impl StreamModel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::StrictTurnstile => "strict",
            Self::GeneralUpdate => "general",
        }
    }
}

impl FromStr for StreamModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" | "strict-turnstile" => Ok(Self::StrictTurnstile),
            "general" | "general-update" => Ok(Self::GeneralUpdate),
            other => Err(invalid("model", format!("unknown model `{other}`"))),
        }
    }
}

impl fmt::Display for StreamModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters shared by every estimator run over one stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamConfig {
    pub universe_size: u64,
    /// Upper bound on the stream length `m`; the analysis needs `m >= n`.
    pub stream_bound: u64,
    pub model: StreamModel,
    pub epsilon: f64,
    pub delta_fail: f64,
    pub seed: u64,
}

impl StreamConfig {
    pub fn new(
        universe_size: u64,
        stream_bound: u64,
        model: StreamModel,
        epsilon: f64,
        delta_fail: f64,
        seed: u64,
    ) -> Result<Self> {
        if universe_size == 0 {
            return Err(invalid("n", "universe size must be positive"));
        }
        if stream_bound < universe_size {
            return Err(invalid(
                "m",
                format!("stream bound {stream_bound} is below universe size {universe_size}"),
            ));
        }
        check_open_unit("epsilon", epsilon)?;
        check_open_unit("delta", delta_fail)?;
        Ok(Self {
            universe_size,
            stream_bound,
            model,
            epsilon,
            delta_fail,
            seed,
        })
    }
}

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("{value} is not inside (0, 1)")))
    }
}

/// Parses one `"<index> <delta>"` line against a universe of size `n`.
///
/// `line_no` is only used to position errors.
pub fn parse_update_line(line: &str, n: u64, line_no: usize) -> Result<UpdateEvent> {
    let err = |kind| Error::Parse {
        line: line_no,
        kind,
    };
    let mut fields = line.split_whitespace();
    let (Some(index), Some(delta), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(err(ParseErrorKind::Malformed(line.trim().to_string())));
    };
    let index: i64 = index
        .parse()
        .map_err(|_| err(ParseErrorKind::Malformed(line.trim().to_string())))?;
    let delta: i64 = delta
        .parse()
        .map_err(|_| err(ParseErrorKind::Malformed(line.trim().to_string())))?;
    if index < 1 || index as u64 > n {
        return Err(err(ParseErrorKind::IndexOutOfRange { index, universe: n }));
    }
    if delta == 0 {
        return Err(err(ParseErrorKind::ZeroDelta));
    }
    Ok(UpdateEvent::new(index as u64, delta))
}

/// True iff replaying `events` leaves every coordinate of `[1, n]`
/// nonnegative. Events outside the universe make the stream invalid.
pub fn validate_strict_turnstile(events: &[UpdateEvent], n: u64) -> bool {
    let mut net = std::collections::HashMap::<u64, i128>::new();
    for e in events {
        if e.index < 1 || e.index > n {
            return false;
        }
        *net.entry(e.index).or_default() += e.delta as i128;
    }
    net.values().all(|&v| v >= 0)
}

/// `||A||_1` of the net vector the events end at. Unlike `sum |delta|` it
/// does not depend on the order or churn of the updates.
pub fn net_l1(events: &[UpdateEvent]) -> u64 {
    let mut net = std::collections::HashMap::<u64, i128>::new();
    for e in events {
        *net.entry(e.index).or_default() += e.delta as i128;
    }
    net.values().map(|v| v.unsigned_abs() as u64).sum()
}

/// A parsed stream file: header plus updates.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFile {
    pub universe_size: u64,
    pub model: StreamModel,
    pub events: Vec<UpdateEvent>,
}

impl StreamFile {
    /// Reads the text format: a `n=<int> model=<strict|general>` header,
    /// `#` comment lines, then one `index delta` pair per line.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut header: Option<(u64, StreamModel)> = None;
        let mut events = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                kind: ParseErrorKind::Malformed(e.to_string()),
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match header {
                None => header = Some(parse_header(trimmed, line_no)?),
                Some((n, _)) => events.push(parse_update_line(trimmed, n, line_no)?),
            }
        }
        let (universe_size, model) = header.ok_or(Error::Parse {
            line: 0,
            kind: ParseErrorKind::BadHeader("missing header".into()),
        })?;
        Ok(Self {
            universe_size,
            model,
            events,
        })
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n={} model={}", self.universe_size, self.model)?;
        for e in &self.events {
            writeln!(out, "{} {}", e.index, e.delta)?;
        }
        Ok(())
    }
}

fn parse_header(line: &str, line_no: usize) -> Result<(u64, StreamModel)> {
    let bad = || Error::Parse {
        line: line_no,
        kind: ParseErrorKind::BadHeader(line.to_string()),
    };
    let mut n = None;
    let mut model = None;
    for field in line.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(bad)?;
        match key {
            "n" => n = Some(value.parse::<u64>().map_err(|_| bad())?),
            "model" => model = Some(value.parse::<StreamModel>().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    match (n, model) {
        (Some(n), Some(model)) if n > 0 => Ok((n, model)),
        _ => Err(bad()),
    }
}

/// The quantity a report estimates. Exponents are the `alpha` of the moment
/// or entropy order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    Shannon,
    Renyi(f64),
    Tsallis(f64),
    Moment(f64),
    ResidualMoment(f64),
}

impl Quantity {
    pub fn alpha(&self) -> f64 {
        match *self {
            Self::Shannon => 1.0,
            Self::Renyi(a) | Self::Tsallis(a) | Self::Moment(a) | Self::ResidualMoment(a) => a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Shannon => "shannon",
            Self::Renyi(_) => "renyi",
            Self::Tsallis(_) => "tsallis",
            Self::Moment(_) => "moment",
            Self::ResidualMoment(_) => "residual_moment",
        }
    }

    pub fn from_name(name: &str, alpha: f64) -> Result<Self> {
        Ok(match name {
            "shannon" => Self::Shannon,
            "renyi" => Self::Renyi(alpha),
            "tsallis" => Self::Tsallis(alpha),
            "moment" => Self::Moment(alpha),
            "residual_moment" | "residual" => Self::ResidualMoment(alpha),
            other => return Err(invalid("quantity", format!("unknown quantity `{other}`"))),
        })
    }

    /// Entropies are measured in nats and may be shown in bits.
    pub fn is_entropy(&self) -> bool {
        matches!(self, Self::Shannon | Self::Renyi(_) | Self::Tsallis(_))
    }
}

/// The accuracy promise attached to an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Guarantee {
    Additive(f64),
    Multiplicative(f64),
    /// Computed from exact counts.
    Exact,
}

impl Guarantee {
    pub fn epsilon(&self) -> f64 {
        match *self {
            Self::Additive(e) | Self::Multiplicative(e) => e,
            Self::Exact => 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Additive(_) => "additive",
            Self::Multiplicative(_) => "multiplicative",
            Self::Exact => "exact",
        }
    }

    pub fn from_name(name: &str, epsilon: f64) -> Result<Self> {
        Ok(match name {
            "additive" => Self::Additive(epsilon),
            "multiplicative" => Self::Multiplicative(epsilon),
            "exact" => Self::Exact,
            other => return Err(invalid("guarantee", format!("unknown guarantee `{other}`"))),
        })
    }

    /// Whether `estimate` meets this guarantee against the true `value`.
    pub fn holds(&self, estimate: f64, value: f64) -> bool {
        match *self {
            Self::Additive(e) => (estimate - value).abs() <= e,
            Self::Multiplicative(e) => (estimate - value).abs() <= e * value.abs(),
            Self::Exact => estimate == value,
        }
    }
}

/// Base used when an entropy is displayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" | "nats" => Ok(Self::Nats),
            "2" | "bits" => Ok(Self::Bits),
            other => Err(invalid("base", format!("unknown base `{other}`"))),
        }
    }
}

/// Result record of every estimator and of the exact oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    /// Entropies are in nats.
    pub value: f64,
    pub quantity: Quantity,
    pub guarantee: Guarantee,
    pub success_prob: f64,
    pub seed: u64,
    pub space_words_used: u64,
    /// The stream held a single distinct element and the value was
    /// short-circuited to zero.
    pub degenerate: bool,
    /// Some sub-sketch was capped below the size its precision formula asks
    /// for; the guarantee is then nominal.
    pub budget_capped: bool,
    /// A heavy element was detected but could not be certified, twice; the
    /// value comes from the no-heavy-element path.
    pub weak_certification: bool,
}

impl EstimateReport {
    pub fn exact(value: f64, quantity: Quantity) -> Self {
        Self {
            value,
            quantity,
            guarantee: Guarantee::Exact,
            success_prob: 1.0,
            seed: 0,
            space_words_used: 0,
            degenerate: false,
            budget_capped: false,
            weak_certification: false,
        }
    }

    /// The value in the requested base. Only entropies are rescaled.
    pub fn value_in(&self, base: LogBase) -> f64 {
        match base {
            LogBase::Bits if self.quantity.is_entropy() => self.value / std::f64::consts::LN_2,
            _ => self.value,
        }
    }

    /// Flat `key=value` record, one line.
    pub fn to_record(&self, base: LogBase) -> String {
        format!(
            "quantity={} alpha={} guarantee={} epsilon={} value={} base={} seed={} success_prob={} space_words_used={} degenerate={} budget_capped={} weak_certification={}",
            self.quantity.name(),
            self.quantity.alpha(),
            self.guarantee.name(),
            self.guarantee.epsilon(),
            self.value_in(base),
            match base {
                LogBase::Nats => "e",
                LogBase::Bits => "2",
            },
            self.seed,
            self.success_prob,
            self.space_words_used,
            self.degenerate,
            self.budget_capped,
            self.weak_certification,
        )
    }
}

impl FromStr for EstimateReport {
    type Err = Error;

    /// Parses a record written by [`EstimateReport::to_record`]; values in
    /// bits are converted back to nats.
    fn from_str(s: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for field in s.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| invalid("record", format!("field `{field}` lacks `=`")))?;
            fields.insert(k, v);
        }
        let get = |k: &'static str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| invalid("record", format!("missing `{k}`")))
        };
        let num = |k: &'static str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| invalid("record", format!("`{k}` is not a number")))
        };
        let int = |k: &'static str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|_| invalid("record", format!("`{k}` is not an integer")))
        };
        let flag = |k: &'static str| -> Result<bool> {
            get(k)?
                .parse()
                .map_err(|_| invalid("record", format!("`{k}` is not a bool")))
        };
        let quantity = Quantity::from_name(get("quantity")?, num("alpha")?)?;
        let base: LogBase = get("base")?.parse()?;
        let mut value = num("value")?;
        if base == LogBase::Bits && quantity.is_entropy() {
            value *= std::f64::consts::LN_2;
        }
        Ok(Self {
            value,
            quantity,
            guarantee: Guarantee::from_name(get("guarantee")?, num("epsilon")?)?,
            success_prob: num("success_prob")?,
            seed: int("seed")?,
            space_words_used: int("space_words_used")?,
            degenerate: flag("degenerate")?,
            budget_capped: flag("budget_capped")?,
            weak_certification: flag("weak_certification")?,
        })
    }
}
