//! Backward evaluation of `h(0, T)` as a last-passage problem.
//!
//! A compatible path ends at `(0, T)`, is piecewise constant with
//! nearest-neighbour jumps, and may jump onto `(x, t)` only when that event is
//! sticky. Read backwards from `(0, T)`, a path sitting on a sticky event may
//! move to either neighbour for all earlier times. The rightmost and leftmost
//! such paths bound the propagation cone; every event between them is
//! attainable, and `h(0, T)` is the largest total height collected by a
//! compatible path (flat start).
//!
//! Jump times are stored as forward times, so membership tests compare the
//! exact event timestamps without `T - t` rounding.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Result};
use crate::field::{event_order, EventField, FieldSeed, SiteStream};
use crate::heavy_tail::HeightDistribution;
use crate::output::fmt_f64;

/// The region between the rightmost and leftmost compatible paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    horizon: f64,
    p: f64,
    /// Forward times of the right-boundary jumps, decreasing. Jump `j` moves
    /// the boundary from `j` to `j + 1` for earlier times.
    right: Vec<f64>,
    /// Same for the left boundary, which moves from `-j` to `-j - 1`.
    left: Vec<f64>,
}

impl Cone {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn min_site(&self) -> i64 {
        -(self.left.len() as i64)
    }

    pub fn max_site(&self) -> i64 {
        self.right.len() as i64
    }

    /// Backward times `T - t` of the right-boundary jumps, increasing.
    pub fn right_jumps(&self) -> Vec<f64> {
        self.right.iter().map(|t| self.horizon - t).collect()
    }

    pub fn left_jumps(&self) -> Vec<f64> {
        self.left.iter().map(|t| self.horizon - t).collect()
    }

    pub fn num_right_jumps(&self) -> usize {
        self.right.len()
    }

    /// Backward time at which the two boundaries separate, `T` if they never do.
    pub fn split_time(&self) -> f64 {
        match self.right.first() {
            Some(t) => self.horizon - t,
            None => self.horizon,
        }
    }

    /// Position of the rightmost compatible path at forward time `t`.
    pub fn right_at(&self, t: f64) -> i64 {
        self.right.partition_point(|tj| *tj > t) as i64
    }

    /// Position of the leftmost compatible path at forward time `t`.
    pub fn left_at(&self, t: f64) -> i64 {
        -(self.left.partition_point(|tj| *tj > t) as i64)
    }

    pub fn contains(&self, site: i64, t: f64) -> bool {
        (0.0..=self.horizon).contains(&t) && self.left_at(t) <= site && site <= self.right_at(t)
    }

    pub fn on_boundary(&self, site: i64, t: f64) -> bool {
        site == self.left_at(t) || site == self.right_at(t)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CONE_CSV_HEADER}")?;
        for s in self.right_jumps() {
            writeln!(w, "{},right", fmt_f64(s))?;
        }
        for s in self.left_jumps() {
            writeln!(w, "{},left", fmt_f64(s))?;
        }
        Ok(())
    }
}

pub const CONE_CSV_HEADER: &str = "backward_time,side";
pub const ATTAINABLE_CSV_HEADER: &str = "site,time,sticky,eta,is_boundary";

/// Latest sticky event on `stream` strictly before forward time `before`.
fn latest_sticky_before(stream: &SiteStream, before: f64, p: f64) -> Option<f64> {
    stream
        .events
        .iter()
        .rev()
        .skip_while(|e| e.time >= before)
        .find(|e| e.is_sticky(p))
        .map(|e| e.time)
}

/// Explores the field backwards from `(0, T)` to find the cone boundaries.
///
/// Until the first sticky event at the origin both boundaries sit at 0 and
/// that event moves them together; afterwards each boundary advances on the
/// sticky events of its own current site, independently of the other.
pub fn build_cone(field: &mut EventField, p: f64) -> Result<Cone> {
    check_probability("p", p)?;
    let horizon = field.horizon();
    let mut cone = Cone {
        horizon,
        p,
        right: Vec::new(),
        left: Vec::new(),
    };
    let Some(first) = latest_sticky_before(field.site(0), f64::INFINITY, p) else {
        return Ok(cone);
    };
    cone.right.push(first);
    cone.left.push(first);
    for (dir, jumps) in [(1i64, &mut cone.right), (-1i64, &mut cone.left)] {
        let mut site = dir;
        while let Some(t) = latest_sticky_before(field.site(site), *jumps.last().unwrap(), p) {
            jumps.push(t);
            site += dir;
        }
    }
    Ok(cone)
}

/// An event inside the cone with its resolved marks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LppPoint {
    pub site: i64,
    pub time: f64,
    pub sticky: bool,
    pub eta: f64,
    pub on_boundary: bool,
}

/// The attainable events, in forward processing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttainableSet {
    pub points: Vec<LppPoint>,
    pub n_boundary: usize,
    pub n_interior: usize,
}

impl AttainableSet {
    /// Wraps hand-built points; they are sorted by time, then site.
    pub fn from_points(mut points: Vec<LppPoint>) -> Self {
        points.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.site.cmp(&b.site)));
        let n_boundary = points.iter().filter(|p| p.on_boundary).count();
        let n_interior = points.len() - n_boundary;
        Self {
            points,
            n_boundary,
            n_interior,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{ATTAINABLE_CSV_HEADER}")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{},{}",
                p.site,
                fmt_f64(p.time),
                u8::from(p.sticky),
                fmt_f64(p.eta),
                u8::from(p.on_boundary)
            )?;
        }
        Ok(())
    }
}

/// Collects every event inside `cone`, with marks resolved against `p` and `dist`.
pub fn attainable(
    cone: &Cone,
    field: &mut EventField,
    p: f64,
    dist: &HeightDistribution,
) -> AttainableSet {
    let mut events = Vec::new();
    for site in cone.min_site()..=cone.max_site() {
        // Forward time after which the cone no longer covers `site`.
        let entry = match site {
            0 => f64::INFINITY,
            x if x > 0 => cone.right[(x - 1) as usize],
            x => cone.left[(-x - 1) as usize],
        };
        events.extend(field.site(site).events.iter().filter(|e| e.time < entry).copied());
    }
    events.sort_by(event_order);
    let points: Vec<LppPoint> = events
        .iter()
        .map(|e| {
            let (sticky, eta) = e.resolve_marks(p, dist);
            LppPoint {
                site: e.site,
                time: e.time,
                sticky,
                eta,
                on_boundary: cone.on_boundary(e.site, e.time),
            }
        })
        .collect();
    let n_boundary = points.iter().filter(|p| p.on_boundary).count();
    AttainableSet {
        n_interior: points.len() - n_boundary,
        n_boundary,
        points,
    }
}

/// Reversed dynamic program over a point list in forward processing order.
///
/// `best[x]` is the largest weight collected by a reversed path currently at
/// `x`; unreachable sites hold `-inf`. Visiting `(x, t)` collects its weight,
/// and a sticky point then lets the path continue from either neighbour.
fn reversed_dp<F>(points: &[LppPoint], weight: F) -> f64
where
    F: Fn(usize, &LppPoint) -> f64,
{
    let (lo, hi) = points
        .iter()
        .fold((0i64, 0i64), |(lo, hi), p| (lo.min(p.site), hi.max(p.site)));
    // One padding cell on each side for the neighbour update.
    let offset = 1 - lo;
    let mut best = vec![f64::NEG_INFINITY; (hi - lo + 3) as usize];
    best[offset as usize] = 0.0;
    for (i, pt) in points.iter().enumerate().rev() {
        let x = (pt.site + offset) as usize;
        if best[x] == f64::NEG_INFINITY {
            continue;
        }
        best[x] += weight(i, pt);
        if pt.sticky {
            let v = best[x];
            best[x - 1] = best[x - 1].max(v);
            best[x + 1] = best[x + 1].max(v);
        }
    }
    best.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// `h(0, T)` as the maximal `eta`-weight of a compatible path.
pub fn lpp_height(att: &AttainableSet) -> f64 {
    reversed_dp(&att.points, |_, p| p.eta)
}

/// Largest number of `selected` points collected by one compatible path.
/// `selected` is indexed like `att.points`.
pub fn max_collect_count(att: &AttainableSet, selected: &[bool]) -> usize {
    assert_eq!(selected.len(), att.points.len(), "selection mask length");
    reversed_dp(&att.points, |i, _| if selected[i] { 1.0 } else { 0.0 }) as usize
}

/// Cone and attainable set of one realization.
#[derive(Debug, Clone)]
pub struct ConeSample {
    pub cone: Cone,
    pub attainable: AttainableSet,
}

impl ConeSample {
    pub fn generate(seed: FieldSeed, horizon: f64, p: f64, dist: &HeightDistribution) -> Result<Self> {
        check_positive("T", horizon)?;
        let mut field = EventField::new(seed, horizon);
        let cone = build_cone(&mut field, p)?;
        let attainable = attainable(&cone, &mut field, p, dist);
        Ok(Self { cone, attainable })
    }

    pub fn height(&self) -> f64 {
        lpp_height(&self.attainable)
    }
}

/// `h(0, T)` for the field of `seed`, through the backward representation.
pub fn height_at_origin(seed: FieldSeed, horizon: f64, p: f64, dist: &HeightDistribution) -> Result<f64> {
    Ok(ConeSample::generate(seed, horizon, p, dist)?.height())
}
