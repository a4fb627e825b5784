//! The continuous limit: Poisson weights `M_i` placed uniformly on the
//! triangle `{(x, t) : 0 <= t <= 1, |x| <= 1 - t}` and collected by
//! 1-Lipschitz paths ending at the apex `(0, 1)`.
//!
//! Restricting to the `k` largest weights turns the supremum over paths into
//! a maximum-weight chain problem: a set of points is collected by one path
//! iff it is pairwise Lipschitz-compatible, and sorted by time it suffices to
//! check consecutive pairs.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, Error, Result};
use crate::heavy_tail::weight_sequence;
use crate::output::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub x: f64,
    pub t: f64,
    pub m: f64,
}

impl WeightedPoint {
    pub fn in_triangle(&self) -> bool {
        (0.0..=1.0).contains(&self.t) && self.x.abs() <= 1.0 - self.t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub value: f64,
    /// Indices into the input, in increasing time.
    pub argset: Vec<usize>,
}

/// Uniform point on the triangle: `t` has density `2(1 - t)`, then `x` is
/// uniform on `[-(1 - t), 1 - t]`.
fn uniform_on_triangle<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u: f64 = rng.random();
    let t = 1.0 - (1.0 - u).sqrt();
    let half = 1.0 - t;
    let x = rng.random_range(-1.0..=1.0) * half;
    (x, t)
}

/// The `k` largest atoms of the limit point measure, in decreasing weight.
pub fn sample_points<R: Rng + ?Sized>(k: usize, alpha: f64, rng: &mut R) -> Result<Vec<WeightedPoint>> {
    let weights = weight_sequence(k, alpha, rng)?;
    Ok(weights
        .as_slice()
        .iter()
        .map(|&m| {
            let (x, t) = uniform_on_triangle(rng);
            WeightedPoint { x, t, m }
        })
        .collect())
}

/// Absolute slack on `|dx| <= |dt|`, so that decimal inputs on the light
/// cone such as `(0, 0.5)` and `(0.2, 0.7)` are not split by rounding.
const LIGHT_CONE_SLACK: f64 = 8.0 * f64::EPSILON;

/// Whether one 1-Lipschitz path can pass through both points. Distinct
/// points at equal times are incompatible; a point is compatible with itself.
pub fn compatible(a: &WeightedPoint, b: &WeightedPoint) -> bool {
    if a.t == b.t {
        return a.x == b.x;
    }
    (a.x - b.x).abs() <= (a.t - b.t).abs() + LIGHT_CONE_SLACK
}

/// Affine map sending the triangle onto half of the unit square, under
/// which compatibility becomes coordinatewise dominance.
pub fn rotate(x: f64, t: f64) -> (f64, f64) {
    ((1.0 - x - t) / 2.0, (1.0 + x - t) / 2.0)
}

/// Maximum total weight of a pairwise compatible subset.
pub fn h_k(points: &[WeightedPoint]) -> Result<ChainResult> {
    if let Some(p) = points.iter().find(|p| !p.in_triangle()) {
        return Err(Error::Degenerate(format!("point ({}, {}) outside the triangle", p.x, p.t)));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].t.total_cmp(&points[j].t));
    if let Some(w) = order.windows(2).find(|w| points[w[0]].t == points[w[1]].t) {
        return Err(Error::Degenerate(format!(
            "points {} and {} share time {}",
            w[0], w[1], points[w[0]].t
        )));
    }
    let n = order.len();
    let mut best = vec![0.0_f64; n];
    let mut prev = vec![usize::MAX; n];
    for a in 0..n {
        let pa = &points[order[a]];
        let mut carry = 0.0;
        for b in 0..a {
            if best[b] > carry && compatible(pa, &points[order[b]]) {
                carry = best[b];
                prev[a] = b;
            }
        }
        best[a] = pa.m + carry;
    }
    let Some(end) = (0..n).max_by(|&a, &b| best[a].total_cmp(&best[b])) else {
        return Ok(ChainResult {
            value: 0.0,
            argset: Vec::new(),
        });
    };
    let mut argset = Vec::new();
    let mut cur = end;
    while cur != usize::MAX {
        argset.push(order[cur]);
        cur = prev[cur];
    }
    argset.reverse();
    Ok(ChainResult {
        value: best[end],
        argset,
    })
}

/// Chain value of the atoms with (1-based) weight rank in `k..=sample_size`:
/// a truncated lower estimate of the remainder `R_k`. `k = 1` gives
/// `H_{sample_size}`; `k > sample_size` gives 0.
pub fn remainder_estimate<R: Rng + ?Sized>(alpha: f64, k: usize, sample_size: usize, rng: &mut R) -> Result<f64> {
    check_alpha(alpha)?;
    if k == 0 {
        return Err(Error::Domain {
            name: "k",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    if k > sample_size {
        return Ok(0.0);
    }
    let points = sample_points(sample_size, alpha, rng)?;
    Ok(h_k(&points[k - 1..])?.value)
}

pub const SAMPLE_CSV_HEADER: &str = "x,t,m";
pub const HK_CSV_HEADER: &str = "replicate,k,value";

pub fn write_points_csv<W: Write>(mut w: W, points: &[WeightedPoint]) -> io::Result<()> {
    writeln!(w, "{SAMPLE_CSV_HEADER}")?;
    for p in points {
        writeln!(w, "{},{},{}", fmt_f64(p.x), fmt_f64(p.t), fmt_f64(p.m))?;
    }
    Ok(())
}

pub fn write_hk_csv<W: Write>(mut w: W, k: usize, values: &[f64]) -> io::Result<()> {
    writeln!(w, "{HK_CSV_HEADER}")?;
    for (r, v) in values.iter().enumerate() {
        writeln!(w, "{r},{k},{}", fmt_f64(*v))?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::stats::{ks_to_cdf, median_in_place, Ecdf, Moments};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wp(x: f64, t: f64, m: f64) -> WeightedPoint {
        WeightedPoint { x, t, m }
    }

    /// Best pairwise-compatible subset by exhaustive enumeration.
    pub(crate) fn brute_force_chain(points: &[WeightedPoint]) -> f64 {
        let n = points.len();
        let mut best: f64 = 0.0;
        for mask in 0u32..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let ok = members
                .iter()
                .all(|&i| members.iter().all(|&j| compatible(&points[i], &points[j])));
            if ok {
                best = best.max(members.iter().map(|&i| points[i].m).sum());
            }
        }
        best
    }

    #[test]
    fn compatibility_examples() {
        assert!(compatible(&wp(0.0, 0.5, 1.0), &wp(0.2, 0.7, 1.0)));
        assert!(!compatible(&wp(-0.9, 0.05, 1.0), &wp(0.0, 0.5, 1.0)));
        assert!(!compatible(&wp(0.1, 0.3, 1.0), &wp(0.4, 0.3, 1.0)));
        assert!(compatible(&wp(0.1, 0.3, 1.0), &wp(0.1, 0.3, 2.0)));
    }

    #[test]
    fn rotation_corners() {
        assert_eq!(rotate(0.0, 1.0), (0.0, 0.0));
        assert_eq!(rotate(1.0, 0.0), (0.0, 1.0));
        assert_eq!(rotate(-1.0, 0.0), (1.0, 0.0));
        assert_eq!(rotate(0.0, 0.0), (0.5, 0.5));
    }

    #[test]
    fn rotation_turns_compatibility_into_dominance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100_000 {
            let (xp, tp) = uniform_on_triangle(&mut rng);
            let (xq, tq) = uniform_on_triangle(&mut rng);
            let (p, q) = if tq <= tp {
                (wp(xp, tp, 1.0), wp(xq, tq, 1.0))
            } else {
                (wp(xq, tq, 1.0), wp(xp, tp, 1.0))
            };
            let (pa, pb) = rotate(p.x, p.t);
            let (qa, qb) = rotate(q.x, q.t);
            // Compare in the unrotated frame with exact arithmetic slack.
            let dominance = qa - pa >= -1e-15 && qb - pb >= -1e-15;
            let slack = ((p.x - q.x).abs() - (p.t - q.t).abs()).abs();
            if slack > 1e-12 {
                assert_eq!(compatible(&p, &q), dominance);
            }
        }
    }

    #[test]
    fn chain_example() {
        let pts = [wp(0.0, 0.5, 2.0), wp(0.2, 0.7, 1.5), wp(-0.9, 0.05, 5.0)];
        let r = h_k(&pts).unwrap();
        assert_eq!(r.value, 5.0);
        assert_eq!(r.argset, vec![2]);
        assert_eq!(brute_force_chain(&pts), 5.0);
        let only_two = h_k(&pts[..2]).unwrap();
        assert_eq!(only_two.value, 3.5);
        assert_eq!(only_two.argset, vec![0, 1]);
    }

    #[test]
    fn chain_edge_cases() {
        assert_eq!(h_k(&[wp(0.3, 0.2, 1.25)]).unwrap().value, 1.25);
        let vertical: Vec<WeightedPoint> = (1..10).map(|i| wp(0.0, i as f64 / 10.0, 1.0 / i as f64)).collect();
        let total: f64 = vertical.iter().map(|p| p.m).sum();
        assert!((h_k(&vertical).unwrap().value - total).abs() < 1e-12);
        assert!(h_k(&[wp(0.0, 0.5, 1.0), wp(0.1, 0.5, 2.0)]).is_err());
        assert!(h_k(&[wp(0.9, 0.5, 1.0)]).is_err());
        assert_eq!(h_k(&[]).unwrap().value, 0.0);
    }

    #[test]
    fn triangle_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m = Moments::default();
        let mut mx = Moments::default();
        for _ in 0..10_000 {
            for p in sample_points(10, 1.5, &mut rng).unwrap() {
                assert!(p.in_triangle());
                m.push(p.t);
                mx.push(p.x);
            }
        }
        assert!((m.mean() - 1.0 / 3.0).abs() < 3.0 * m.std_error(), "mean t {}", m.mean());
        assert!(mx.mean().abs() < 3.0 * mx.std_error());
    }

    #[test]
    fn single_point_weight_is_frechet() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let draws: Vec<f64> = (0..50_000)
            .map(|_| sample_points(1, 0.8, &mut rng).unwrap()[0].m)
            .collect();
        let ks = ks_to_cdf(&Ecdf::new(draws).unwrap(), |m| (-m.powf(-0.8)).exp());
        assert!(ks < 0.012, "ks {ks}");
    }

    #[test]
    fn remainder_edges() {
        let mut a = ChaCha8Rng::seed_from_u64(10);
        let mut b = ChaCha8Rng::seed_from_u64(10);
        let full = h_k(&sample_points(40, 1.5, &mut b).unwrap()).unwrap().value;
        assert_eq!(remainder_estimate(1.5, 1, 40, &mut a).unwrap(), full);
        assert_eq!(remainder_estimate(1.5, 41, 40, &mut a).unwrap(), 0.0);
        let mut c = ChaCha8Rng::seed_from_u64(10);
        let pts = sample_points(40, 1.5, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        assert_eq!(remainder_estimate(1.5, 40, 40, &mut c).unwrap(), pts[39].m);
        assert!(remainder_estimate(1.5, 0, 40, &mut c).is_err());
    }

    #[test]
    fn remainder_median_shrinks_with_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut medians = Vec::new();
        for k in [8usize, 16, 32, 64] {
            let mut v: Vec<f64> = (0..200)
                .map(|_| remainder_estimate(1.5, k, 512, &mut rng).unwrap())
                .collect();
            medians.push(median_in_place(&mut v).unwrap());
        }
        assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn chain_dp_is_exact(seed in any::<u64>(), k in 1usize..=10) {
            let pts = sample_points(k, 1.5, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let r = h_k(&pts).unwrap();
            prop_assert!((r.value - brute_force_chain(&pts)).abs() <= 1e-12 * r.value.max(1.0));
            // The witness is pairwise compatible and realizes the value.
            let sum: f64 = r.argset.iter().map(|&i| pts[i].m).sum();
            prop_assert!((sum - r.value).abs() <= 1e-12 * r.value.max(1.0));
            for &i in &r.argset {
                for &j in &r.argset {
                    prop_assert!(compatible(&pts[i], &pts[j]));
                }
            }
        }

        #[test]
        fn chain_value_bounds_and_growth(seed in any::<u64>(), k in 2usize..60) {
            let pts = sample_points(k, 1.2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let mut last = 0.0;
            for j in 1..=k {
                let v = h_k(&pts[..j]).unwrap().value;
                prop_assert!(v >= last);
                let cap: f64 = pts[..j].iter().map(|p| p.m).sum();
                prop_assert!(v >= 0.0 && v <= cap * (1.0 + 1e-12));
                last = v;
            }
        }

        #[test]
        fn sup_is_monotone_under_inclusion(seed in any::<u64>(), k in 2usize..30, drop in any::<u32>()) {
            // Removing candidate points can only lower the optimum.
            let pts = sample_points(k, 1.5, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let kept: Vec<WeightedPoint> = pts.iter().enumerate()
                .filter(|(i, _)| drop >> (i % 32) & 1 == 0)
                .map(|(_, p)| *p)
                .collect();
            prop_assert!(h_k(&kept).unwrap().value <= h_k(&pts).unwrap().value);
        }
    }
}
