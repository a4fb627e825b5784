//! Forward-in-time deposition dynamics.
//!
//! A non-sticky block stacks on its own column; a sticky block lands on the
//! highest of the three columns `x-1, x, x+1` (first point of contact), which
//! can leave an overhang. Quantitative runs use a free window whose edges are
//! inert; the torus exists for interface snapshots.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::cone::Cone;
use crate::error::{check_positive, check_probability, Error, Result};
use crate::field::{DepositionEvent, EventField, FieldSeed};
use crate::heavy_tail::HeightDistribution;
use crate::output::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    /// Sites `0..len` with periodic neighbours.
    Torus { len: usize },
    /// Sites `lo..=hi`; sites outside the window never grow.
    Window { lo: i64, hi: i64 },
}

impl Geometry {
    pub fn window(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::Degenerate(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Self::Window { lo, hi })
    }

    pub fn torus(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Degenerate("torus with zero sites".into()));
        }
        Ok(Self::Torus { len })
    }

    pub fn num_sites(&self) -> usize {
        match *self {
            Self::Torus { len } => len,
            Self::Window { lo, hi } => (hi - lo + 1) as usize,
        }
    }

    /// Lowest site label in the geometry.
    pub fn first_site(&self) -> i64 {
        match *self {
            Self::Torus { .. } => 0,
            Self::Window { lo, .. } => lo,
        }
    }

    fn index(&self, site: i64) -> Result<usize> {
        match *self {
            Self::Torus { len } => Ok(site.rem_euclid(len as i64) as usize),
            Self::Window { lo, hi } => {
                if site < lo || site > hi {
                    Err(Error::SiteOutOfRange { site, lo, hi })
                } else {
                    Ok((site - lo) as usize)
                }
            }
        }
    }

    /// Storage indices of the nearest neighbours that exist in this geometry.
    fn neighbours(&self, idx: usize) -> [Option<usize>; 2] {
        match *self {
            Self::Torus { len } => [Some((idx + len - 1) % len), Some((idx + 1) % len)],
            Self::Window { .. } => {
                let n = self.num_sites();
                [idx.checked_sub(1), (idx + 1 < n).then_some(idx + 1)]
            }
        }
    }
}

/// Height profile `h(., t)` on a finite geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub geometry: Geometry,
    heights: Vec<f64>,
    pub clock: f64,
}

impl Interface {
    /// Flat initial condition `h(., 0) = 0`.
    pub fn flat(geometry: Geometry) -> Self {
        Self {
            geometry,
            heights: vec![0.0; geometry.num_sites()],
            clock: 0.0,
        }
    }

    pub fn from_heights(geometry: Geometry, heights: Vec<f64>) -> Result<Self> {
        if heights.len() != geometry.num_sites() {
            return Err(Error::Degenerate(format!(
                "{} heights for {} sites",
                heights.len(),
                geometry.num_sites()
            )));
        }
        if heights.iter().any(|h| h.is_nan() || *h < 0.0) {
            return Err(Error::Degenerate("negative height".into()));
        }
        Ok(Self {
            geometry,
            heights,
            clock: 0.0,
        })
    }

    pub fn height(&self, site: i64) -> Result<f64> {
        Ok(self.heights[self.geometry.index(site)?])
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Drops one block of height `eta` on `site`; returns `(base, top)`.
    pub fn apply_event(&mut self, site: i64, eta: f64, sticky: bool) -> Result<(f64, f64)> {
        let idx = self.geometry.index(site)?;
        let mut base = self.heights[idx];
        if sticky {
            for n in self.geometry.neighbours(idx).into_iter().flatten() {
                base = base.max(self.heights[n]);
            }
        }
        let top = base + eta;
        if top.is_infinite() {
            return Err(Error::Overflow {
                site,
                time: self.clock,
            });
        }
        self.heights[idx] = top;
        Ok((base, top))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub site: i64,
    pub time: f64,
    pub base: f64,
    pub top: f64,
    pub sticky: bool,
}

/// Every deposited block, in processing order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockLog {
    pub records: Vec<BlockRecord>,
}

pub const BLOCKLOG_CSV_HEADER: &str = "site,time,base,top,sticky";

impl BlockLog {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{BLOCKLOG_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.site,
                fmt_f64(r.time),
                fmt_f64(r.base),
                fmt_f64(r.top),
                u8::from(r.sticky)
            )?;
        }
        Ok(())
    }
}

/// Replays a list of events, already in processing order, onto `intf`.
pub fn replay(
    intf: &mut Interface,
    events: &[DepositionEvent],
    p: f64,
    dist: &HeightDistribution,
    log: Option<&mut BlockLog>,
) -> Result<()> {
    let mut log = log;
    for ev in events {
        let (sticky, eta) = ev.resolve_marks(p, dist);
        intf.clock = ev.time;
        let (base, top) = intf.apply_event(ev.site, eta, sticky)?;
        if let Some(log) = log.as_deref_mut() {
            log.records.push(BlockRecord {
                site: ev.site,
                time: ev.time,
                base,
                top,
                sticky,
            });
        }
    }
    Ok(())
}

/// Runs the dynamics from a flat start up to `horizon` on every site of
/// `geometry`, using the field of `seed`.
pub fn run(
    seed: FieldSeed,
    geometry: Geometry,
    horizon: f64,
    p: f64,
    dist: &HeightDistribution,
) -> Result<(Interface, BlockLog)> {
    check_positive("T", horizon)?;
    check_probability("p", p)?;
    let mut field = EventField::new(seed, horizon);
    let lo = geometry.first_site();
    let hi = lo + geometry.num_sites() as i64 - 1;
    let events = field.events_in(lo, hi);
    let mut intf = Interface::flat(geometry);
    let mut log = BlockLog {
        records: Vec::with_capacity(events.len()),
    };
    replay(&mut intf, &events, p, dist, Some(&mut log))?;
    intf.clock = horizon;
    Ok((intf, log))
}

/// True iff the cone's site range lies strictly inside a window geometry, in
/// which case `h(0, T)` from [`run`] equals the infinite-lattice value.
/// Exactness is never claimed on a torus.
pub fn window_is_exact(geometry: &Geometry, cone: &Cone) -> bool {
    match *geometry {
        Geometry::Torus { .. } => false,
        Geometry::Window { lo, hi } => lo < cone.min_site() && cone.max_site() < hi,
    }
}
