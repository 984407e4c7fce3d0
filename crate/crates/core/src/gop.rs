//! Coding schedules for low-delay P, low-delay B and random-access modes.
//!
//! References never cross an intra frame: a frame only predicts from
//! decoded frames of its own intra period (the period's leading intra frame
//! included). Within a random-access period the two anchors are coded first
//! and the remaining frames follow a depth-first hierarchical midpoint order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_INTRA_PERIOD: usize = 12;
pub const DEFAULT_N_REFS: usize = 3;
pub const DEFAULT_WARP_REFS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GopMode {
    Ldp,
    Ldb,
    Ra,
}

impl FromStr for GopMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ldp" => Ok(GopMode::Ldp),
            "ldb" => Ok(GopMode::Ldb),
            "ra" => Ok(GopMode::Ra),
            other => Err(Error::Parse(format!("unknown GOP mode {other:?}"))),
        }
    }
}

impl fmt::Display for GopMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GopMode::Ldp => "ldp",
            GopMode::Ldb => "ldb",
            GopMode::Ra => "ra",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GopConfig {
    pub mode: GopMode,
    pub intra_period: usize,
    pub n_refs: usize,
    pub warp_refs: usize,
    pub sequence_length: usize,
}

impl GopConfig {
    pub fn new(mode: GopMode, sequence_length: usize) -> Self {
        Self {
            mode,
            intra_period: DEFAULT_INTRA_PERIOD,
            n_refs: DEFAULT_N_REFS,
            warp_refs: DEFAULT_WARP_REFS,
            sequence_length,
        }
    }

    /// Checks the invariants and returns the effective configuration
    /// (low-delay P always uses a single reference).
    pub fn validated(&self) -> Result<GopConfig> {
        let mut cfg = *self;
        if cfg.mode == GopMode::Ldp {
            cfg.n_refs = 1;
            cfg.warp_refs = 1;
        }
        if cfg.intra_period == 0 {
            return Err(Error::InvalidConfig("intra_period must be >= 1".into()));
        }
        if cfg.sequence_length == 0 {
            return Err(Error::InvalidConfig("sequence_length must be >= 1".into()));
        }
        if cfg.n_refs == 0 || cfg.warp_refs == 0 {
            return Err(Error::InvalidConfig(
                "n_refs and warp_refs must be >= 1".into(),
            ));
        }
        if cfg.warp_refs > cfg.n_refs {
            return Err(Error::InvalidConfig(format!(
                "warp_refs ({}) exceeds n_refs ({})",
                cfg.warp_refs, cfg.n_refs
            )));
        }
        Ok(cfg)
    }
}

/// One frame of the schedule. Reference lists are in ascending display
/// order; for `warp_refs` that is also the depth order of the stacked volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GopEntry {
    pub display: usize,
    pub order: usize,
    pub is_intra: bool,
    pub pred_refs: Vec<usize>,
    pub warp_refs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GopPlan {
    pub mode: GopMode,
    pub intra_period: usize,
    /// Entries in coding order.
    pub entries: Vec<GopEntry>,
}

impl GopPlan {
    pub fn entry(&self, display: usize) -> Option<&GopEntry> {
        self.entries.iter().find(|e| e.display == display)
    }

    pub fn coding_order(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.display).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Line-oriented text form; a header comment carries the mode and period.
    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = format!(
            "# gop mode={} intra_period={} length={}\n",
            self.mode,
            self.intra_period,
            self.entries.len()
        );
        for e in &self.entries {
            s.push_str(&format!(
                "{} {} {} refs={} warp={}\n",
                e.order,
                e.display,
                u8::from(e.is_intra),
                join(&e.pred_refs),
                join(&e.warp_refs)
            ));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<GopPlan> {
        let mut header: Option<(GopMode, usize)> = None;
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let bad = |msg: &str| Error::Parse(format!("plan line {}: {msg}", lineno + 1));
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut toks = rest.split_whitespace();
                if toks.next() != Some("gop") {
                    continue;
                }
                let (mut mode, mut period) = (None, None);
                for tok in toks {
                    match tok.split_once('=') {
                        Some(("mode", v)) => mode = Some(v.parse::<GopMode>()?),
                        Some(("intra_period", v)) => {
                            period = Some(v.parse::<usize>().map_err(|_| bad("bad intra_period"))?)
                        }
                        _ => {}
                    }
                }
                header = Some((
                    mode.ok_or_else(|| bad("header without mode"))?,
                    period.ok_or_else(|| bad("header without intra_period"))?,
                ));
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 5 {
                return Err(bad("expected `order display intra refs=.. warp=..`"));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad integer"));
            let list = |s: &str, key: &str| -> Result<Vec<usize>> {
                let v = s
                    .strip_prefix(key)
                    .and_then(|r| r.strip_prefix('='))
                    .ok_or_else(|| bad(&format!("expected {key}=")))?;
                if v.is_empty() {
                    return Ok(Vec::new());
                }
                v.split(',').map(num).collect()
            };
            let is_intra = match toks[2] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("intra flag must be 0 or 1")),
            };
            entries.push(GopEntry {
                order: num(toks[0])?,
                display: num(toks[1])?,
                is_intra,
                pred_refs: list(toks[3], "refs")?,
                warp_refs: list(toks[4], "warp")?,
            });
        }
        let (mode, intra_period) =
            header.ok_or_else(|| Error::Parse("plan is missing the `# gop` header".into()))?;
        entries.sort_by_key(|e| e.order);
        Ok(GopPlan {
            mode,
            intra_period,
            entries,
        })
    }
}

/// Picks up to `n` references from `decoded` by priority (`bounding` first,
/// then nearest to `t`, past-preferred on ties), and the first `r` of those
/// for warping. Both lists are returned in ascending display order.
fn select_refs(
    t: usize,
    decoded: &[usize],
    bounding: &[usize],
    n: usize,
    r: usize,
) -> (Vec<usize>, Vec<usize>) {
    let dist = |a: usize| (a as i64 - t as i64).unsigned_abs();
    let mut bound: Vec<usize> = bounding.to_vec();
    bound.sort_by_key(|&a| (dist(a), a));
    let mut rest: Vec<usize> = decoded
        .iter()
        .copied()
        .filter(|a| !bounding.contains(a))
        .collect();
    rest.sort_by_key(|&a| (dist(a), a));
    let priority: Vec<usize> = bound.into_iter().chain(rest).take(n).collect();
    let mut warp: Vec<usize> = priority.iter().copied().take(r).collect();
    let mut pred = priority;
    pred.sort_unstable();
    warp.sort_unstable();
    (pred, warp)
}

pub fn plan_gop(cfg: &GopConfig) -> Result<GopPlan> {
    let cfg = cfg.validated()?;
    let (len, period) = (cfg.sequence_length, cfg.intra_period);
    let mut entries: Vec<GopEntry> = Vec::with_capacity(len);
    let push = |entries: &mut Vec<GopEntry>, display: usize, pred: Vec<usize>, warp: Vec<usize>| {
        let order = entries.len();
        entries.push(GopEntry {
            display,
            order,
            is_intra: display % period == 0,
            pred_refs: pred,
            warp_refs: warp,
        });
    };
    match cfg.mode {
        GopMode::Ldp | GopMode::Ldb => {
            for t in 0..len {
                if t % period == 0 {
                    push(&mut entries, t, vec![], vec![]);
                    continue;
                }
                let start = t - t % period;
                let decoded: Vec<usize> = (start..t).collect();
                let (pred, warp) = select_refs(t, &decoded, &[], cfg.n_refs, cfg.warp_refs);
                push(&mut entries, t, pred, warp);
            }
        }
        GopMode::Ra => {
            push(&mut entries, 0, vec![], vec![]);
            let mut start = 0;
            while start + 1 < len {
                let end = (start + period).min(len - 1);
                let mut decoded = vec![start];
                if end % period == 0 {
                    push(&mut entries, end, vec![], vec![]);
                } else {
                    let (pred, warp) = select_refs(end, &decoded, &[], cfg.n_refs, cfg.warp_refs);
                    push(&mut entries, end, pred, warp);
                }
                decoded.push(end);
                // depth-first midpoint recursion over decoded-bounded intervals
                let mut stack = vec![(start, end)];
                while let Some((a, b)) = stack.pop() {
                    if b - a < 2 {
                        continue;
                    }
                    let mid = (a + b) / 2;
                    let (pred, warp) =
                        select_refs(mid, &decoded, &[a, b], cfg.n_refs, cfg.warp_refs);
                    push(&mut entries, mid, pred, warp);
                    decoded.push(mid);
                    stack.push((mid, b));
                    stack.push((a, mid));
                }
                start = end;
            }
        }
    }
    Ok(GopPlan {
        mode: cfg.mode,
        intra_period: period,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Coding positions or display indices are not a permutation of `0..N`.
    NotPermutation(String),
    /// `display` references `reference`, which is not coded before it.
    Undecodable {
        display: usize,
        reference: usize,
    },
    /// A multiple of the intra period is not coded intra.
    MissingIntra {
        display: usize,
    },
    IntraWithReferences {
        display: usize,
    },
    NoReferences {
        display: usize,
    },
    EmptyWarpSet {
        display: usize,
    },
    WarpNotSubset {
        display: usize,
        reference: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotPermutation(msg) => write!(f, "not a permutation: {msg}"),
            Violation::Undecodable { display, reference } => {
                write!(
                    f,
                    "frame {display} references {reference}, which is not decoded before it"
                )
            }
            Violation::MissingIntra { display } => write!(f, "frame {display} must be intra"),
            Violation::IntraWithReferences { display } => {
                write!(f, "intra frame {display} lists references")
            }
            Violation::NoReferences { display } => {
                write!(f, "inter frame {display} has no references")
            }
            Violation::EmptyWarpSet { display } => {
                write!(f, "inter frame {display} has no warp references")
            }
            Violation::WarpNotSubset { display, reference } => write!(
                f,
                "frame {display} warps from {reference}, which is not a prediction reference"
            ),
        }
    }
}

/// Checks a plan; an empty result means the plan is valid.
pub fn validate_plan(plan: &GopPlan) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = plan.entries.len();
    let mut order_of = vec![None; n];
    let mut seen_order = vec![false; n];
    for e in &plan.entries {
        if e.display >= n || order_of[e.display].is_some() {
            out.push(Violation::NotPermutation(format!(
                "display index {}",
                e.display
            )));
        } else {
            order_of[e.display] = Some(e.order);
        }
        if e.order >= n || seen_order[e.order] {
            out.push(Violation::NotPermutation(format!(
                "coding position {}",
                e.order
            )));
        } else {
            seen_order[e.order] = true;
        }
    }
    for e in &plan.entries {
        for &r in &e.pred_refs {
            let decodable = order_of
                .get(r)
                .copied()
                .flatten()
                .is_some_and(|o| o < e.order);
            if !decodable {
                out.push(Violation::Undecodable {
                    display: e.display,
                    reference: r,
                });
            }
        }
        if plan.intra_period > 0 && e.display % plan.intra_period == 0 && !e.is_intra {
            out.push(Violation::MissingIntra { display: e.display });
        }
        if e.is_intra {
            if !e.pred_refs.is_empty() || !e.warp_refs.is_empty() {
                out.push(Violation::IntraWithReferences { display: e.display });
            }
            continue;
        }
        if e.pred_refs.is_empty() {
            out.push(Violation::NoReferences { display: e.display });
        } else if e.warp_refs.is_empty() {
            out.push(Violation::EmptyWarpSet { display: e.display });
        }
        for &r in &e.warp_refs {
            if !e.pred_refs.contains(&r) {
                out.push(Violation::WarpNotSubset {
                    display: e.display,
                    reference: r,
                });
            }
        }
    }
    out
}
