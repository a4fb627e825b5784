//! The marked Poisson field of falling blocks on `Z x [0, T]`.
//!
//! Every site carries an independent unit-rate Poisson stream. A stream is a
//! pure function of `(master_seed, site)`: the per-site generator is a ChaCha
//! keystream keyed by the master seed with the site as stream id, so sites
//! can be materialized lazily and in any order and the forward simulation and
//! the backward exploration see bit-identical events. Event marks are kept
//! as raw uniforms and resolved against `p` and `F` on demand, which couples
//! all sticking parameters and all height laws on one realization.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01};
use serde::{Deserialize, Serialize};

use crate::heavy_tail::HeightDistribution;
use crate::output::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSeed(pub u64);

impl FieldSeed {
    fn site_rng(self, site: i64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(site as u64);
        rng
    }
}

/// One falling block with its retained mark uniforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepositionEvent {
    pub site: i64,
    pub time: f64,
    /// The block sticks iff `u_sticky < p`.
    pub u_sticky: f64,
    /// The block height is `F^{-1}(u_height)`.
    pub u_height: f64,
}

impl DepositionEvent {
    pub fn is_sticky(&self, p: f64) -> bool {
        self.u_sticky < p
    }

    pub fn eta(&self, dist: &HeightDistribution) -> f64 {
        dist.quantile(self.u_height)
    }

    pub fn resolve_marks(&self, p: f64, dist: &HeightDistribution) -> (bool, f64) {
        (self.is_sticky(p), self.eta(dist))
    }
}

/// Global processing order: time, then site.
pub fn event_order(a: &DepositionEvent, b: &DepositionEvent) -> Ordering {
    a.time.total_cmp(&b.time).then(a.site.cmp(&b.site))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteStream {
    pub site: i64,
    pub horizon: f64,
    /// Strictly increasing in time.
    pub events: Vec<DepositionEvent>,
}

/// Materializes the events of `site` on `[0, horizon]`.
///
/// Streams for a shorter horizon are prefixes of streams for a longer one.
pub fn site_stream(seed: FieldSeed, site: i64, horizon: f64) -> SiteStream {
    let mut rng = seed.site_rng(site);
    let mut events = Vec::with_capacity((horizon.max(0.0) * 1.2) as usize + 4);
    let mut t = 0.0_f64;
    loop {
        let gap: f64 = rng.sample(Exp1);
        let u_sticky: f64 = rng.sample(Open01);
        let u_height: f64 = rng.sample(Open01);
        let next = t + gap;
        // A zero gap at float resolution would give two blocks the same time.
        if next <= t {
            continue;
        }
        if next > horizon {
            break;
        }
        t = next;
        events.push(DepositionEvent {
            site,
            time: t,
            u_sticky,
            u_height,
        });
    }
    SiteStream {
        site,
        horizon,
        events,
    }
}

/// Lazily materialized view of the field over a fixed horizon.
#[derive(Debug, Clone)]
pub struct EventField {
    seed: FieldSeed,
    horizon: f64,
    sites: HashMap<i64, SiteStream>,
}

impl EventField {
    pub fn new(seed: FieldSeed, horizon: f64) -> Self {
        Self {
            seed,
            horizon,
            sites: HashMap::new(),
        }
    }

    pub fn seed(&self) -> FieldSeed {
        self.seed
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn site(&mut self, site: i64) -> &SiteStream {
        let (seed, horizon) = (self.seed, self.horizon);
        self.sites
            .entry(site)
            .or_insert_with(|| site_stream(seed, site, horizon))
    }

    /// All events on the sites `lo..=hi`, in global processing order.
    pub fn events_in(&mut self, lo: i64, hi: i64) -> Vec<DepositionEvent> {
        let mut all = Vec::new();
        for x in lo..=hi {
            all.extend_from_slice(&self.site(x).events);
        }
        all.sort_by(event_order);
        all
    }

    pub fn materialized_sites(&self) -> usize {
        self.sites.len()
    }
}

pub const EVENTS_CSV_HEADER: &str = "site,time,u_sticky,u_height";

pub fn write_events_csv<W: Write>(mut w: W, events: &[DepositionEvent]) -> io::Result<()> {
    writeln!(w, "{EVENTS_CSV_HEADER}")?;
    for e in events {
        writeln!(
            w,
            "{},{},{},{}",
            e.site,
            fmt_f64(e.time),
            fmt_f64(e.u_sticky),
            fmt_f64(e.u_height)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Moments;
    use proptest::prelude::*;

    #[test]
    fn streams_are_pure() {
        let a = site_stream(FieldSeed(42), 7, 10.0);
        let b = site_stream(FieldSeed(42), 7, 10.0);
        assert_eq!(a, b);
        assert_ne!(a, site_stream(FieldSeed(43), 7, 10.0));
        assert_ne!(a, site_stream(FieldSeed(42), 8, 10.0));
    }

    #[test]
    fn shorter_horizon_is_a_prefix() {
        let long = site_stream(FieldSeed(1), -3, 50.0);
        let short = site_stream(FieldSeed(1), -3, 20.0);
        assert!(short.events.len() < long.events.len());
        assert_eq!(short.events[..], long.events[..short.events.len()]);
    }

    #[test]
    fn mean_count_is_horizon() {
        let m: Moments = (0..100_000u64)
            .map(|s| site_stream(FieldSeed(s), 0, 10.0).events.len() as f64)
            .collect();
        assert!((m.mean() - 10.0).abs() < 3.0 * m.std_error(), "mean {}", m.mean());
        // Poisson: variance equals the mean.
        assert!((m.variance() - 10.0).abs() < 0.2);
    }

    #[test]
    fn neighbouring_sites_are_uncorrelated() {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for s in 0..10_000u64 {
            a.push(site_stream(FieldSeed(s), 0, 10.0).events.len() as f64);
            b.push(site_stream(FieldSeed(s), 1, 10.0).events.len() as f64);
        }
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n;
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 0.03, "corr = {corr}");
    }

    #[test]
    fn superposed_window_is_poisson() {
        // 5 sites over T = 10: counts ~ Poisson(50). Chi-square over binned counts.
        let reps = 10_000;
        let mut field_counts = Vec::with_capacity(reps);
        for s in 0..reps as u64 {
            let mut f = EventField::new(FieldSeed(s), 10.0);
            field_counts.push(f.events_in(0, 4).len());
        }
        let lambda = 50.0_f64;
        let pmf = |k: usize| {
            let lk = k as f64 * lambda.ln() - lambda - (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
            lk.exp()
        };
        // Bins: <=40, 41..=59 individually, >=60.
        let mut expected = vec![0.0; 21];
        let mut observed = [0.0; 21];
        let bin = |k: usize| k.clamp(40, 60) - 40;
        for k in 0..200 {
            expected[bin(k)] += pmf(k) * reps as f64;
        }
        for &c in &field_counts {
            observed[bin(c)] += 1.0;
        }
        let chi2: f64 = observed
            .iter()
            .zip(&expected)
            .map(|(o, e)| (o - e).powi(2) / e)
            .sum();
        // 20 degrees of freedom; 99.9% quantile is about 45.3.
        assert!(chi2 < 45.3, "chi2 = {chi2}");
    }

    #[test]
    fn marks_resolve() {
        let d = HeightDistribution::pareto(1.0, 1.0).unwrap();
        let ev = DepositionEvent {
            site: 0,
            time: 1.0,
            u_sticky: 0.4,
            u_height: 0.75,
        };
        assert_eq!(ev.resolve_marks(0.5, &d), (true, 4.0));
        assert_eq!(ev.resolve_marks(0.3, &d), (false, 4.0));
        assert!(!ev.is_sticky(0.0));
    }

    #[test]
    fn p_zero_never_sticks() {
        for s in 0..50 {
            assert!(site_stream(FieldSeed(s), 0, 20.0)
                .events
                .iter()
                .all(|e| !e.is_sticky(0.0)));
        }
    }

    #[test]
    fn events_csv_layout() {
        let mut buf = Vec::new();
        let evs = site_stream(FieldSeed(3), 2, 2.0).events;
        write_events_csv(&mut buf, &evs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(EVENTS_CSV_HEADER));
        assert_eq!(lines.count(), evs.len());
    }

    proptest! {
        #[test]
        fn stream_invariants(seed in any::<u64>(), site in -1000i64..1000, horizon in 0.1..30.0f64) {
            let s = site_stream(FieldSeed(seed), site, horizon);
            prop_assert!(s.events.windows(2).all(|w| w[0].time < w[1].time));
            for e in &s.events {
                prop_assert_eq!(e.site, site);
                prop_assert!(e.time > 0.0 && e.time <= horizon);
                prop_assert!(e.u_sticky > 0.0 && e.u_sticky < 1.0);
                prop_assert!(e.u_height > 0.0 && e.u_height < 1.0);
            }
        }

        #[test]
        fn sticky_sets_are_nested(seed in any::<u64>(), p1 in 0.0..1.0f64, p2 in 0.0..1.0f64) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            for e in site_stream(FieldSeed(seed), 0, 20.0).events {
                prop_assert!(!e.is_sticky(lo) || e.is_sticky(hi));
            }
        }
    }
}
