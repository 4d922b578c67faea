//! Assembly of the sampled latents into the MLP input.
//!
//! Latents arrive in point-of-interest order `(x, S_1..S_L, C_1..C_L)`.
//! Concatenation keeps everything. The pink aggregator keeps the origin
//! latent whole and, for frequency `i`, only `a_i = max(1, floor(d / f_i^alpha))`
//! channels of `l^{S_i}` and `l^{C_i}`, read as circular slices shifted by
//! the running allocation total `G_i` so that every channel of a shared
//! encoder is reached. The two sum variants are the additive ablations.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::numerics::ColumnMap;
use crate::projection::FrequencySchedule;

/// How sampled latents are combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AggregatorKind {
    /// Flat concatenation in point order.
    Concat,
    /// Frequency-proportional circular slices; `alpha = 0` reduces to concatenation.
    Pink {
        /// Exponent of the allocation law (1 = pink, 2 = brownian).
        alpha: f64,
    },
    /// Elementwise sum of all latents.
    SumAll,
    /// Origin followed by `l^{S_i} + l^{C_i}` per frequency.
    SumPerFrequency,
}

impl AggregatorKind {
    /// Config spelling.
    pub fn name(&self) -> &'static str {
        match self {
            AggregatorKind::Concat => "concat",
            AggregatorKind::Pink { .. } => "pink",
            AggregatorKind::SumAll => "sum_all",
            AggregatorKind::SumPerFrequency => "sum_per_frequency",
        }
    }
}

/// Per-frequency channel budget `a_n` and its running totals `G_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PinkAllocation {
    d_lat: usize,
    a: Vec<usize>,
    g: Vec<usize>,
}

fn allocation(d_lat: usize, half_cycles: f64, alpha: f64) -> usize {
    let raw = libm::floor(d_lat as f64 / libm::pow(half_cycles, alpha));
    // `as` saturates and maps NaN to 0; the clamp keeps 1 <= a_n <= d.
    (raw as usize).clamp(1, d_lat.max(1))
}

impl PinkAllocation {
    /// Allocation for latents of length `d_lat` over `schedule`.
    pub fn new(d_lat: usize, schedule: &FrequencySchedule, alpha: f64) -> Result<Self> {
        if d_lat == 0 {
            bail!(Config, "latent dimension must be positive");
        }
        if !alpha.is_finite() || alpha < 0.0 {
            bail!(Config, "alpha must be finite and non-negative, got {}", alpha);
        }
        let mut a = vec![0];
        a.extend((1..=schedule.len()).map(|n| allocation(d_lat, schedule.half_cycles(n), alpha)));
        let g = a
            .iter()
            .scan(0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        Ok(Self { d_lat, a, g })
    }

    /// `a_0 = 0, a_1, .., a_L`.
    pub fn a(&self) -> &[usize] {
        &self.a
    }

    /// `G_0 = 0, G_1, .., G_L`.
    pub fn g(&self) -> &[usize] {
        &self.g
    }

    #[allow(missing_docs)]
    pub fn d_lat(&self) -> usize {
        self.d_lat
    }

    /// Number of frequencies `L`.
    pub fn levels(&self) -> usize {
        self.a.len() - 1
    }

    /// Start channel of the `l^{S_i}` slice, `-G_i mod d`.
    pub fn sin_start(&self, i: usize) -> usize {
        (self.d_lat - self.g[i] % self.d_lat) % self.d_lat
    }

    /// Start channel of the `l^{C_i}` slice, `G_{i-1} mod d`.
    pub fn cos_start(&self, i: usize) -> usize {
        self.g[i - 1] % self.d_lat
    }
}

/// Output length of pink aggregation with the origin included.
pub fn pink_dims(d_lat: usize, schedule: &FrequencySchedule, alpha: f64) -> usize {
    d_lat + 2 * (1..=schedule.len()).map(|n| allocation(d_lat, schedule.half_cycles(n), alpha)).sum::<usize>()
}

/// `(v[i mod d], v[(i+1) mod d], .., v[(j-1) mod d])`; `i` and `j` may be negative.
pub fn circular_slice(v: &[f64], i: isize, j: isize) -> Result<Vec<f64>> {
    if j <= i {
        bail!(Range, "circular slice needs j > i, got [{}, {})", i, j);
    }
    if v.is_empty() {
        bail!(Range, "circular slice of an empty vector");
    }
    let d = v.len() as isize;
    Ok((i..j).map(|k| v[k.rem_euclid(d) as usize]).collect())
}

/// Pink aggregation, in loop order: origin, then `S_i` slice and `C_i` slice per frequency.
pub fn pink_aggregate(origin: &[f64], sins: &[&[f64]], coss: &[&[f64]], alloc: &PinkAllocation) -> Result<Vec<f64>> {
    let d = alloc.d_lat();
    let levels = alloc.levels();
    if sins.len() != levels || coss.len() != levels {
        bail!(Config, "pink allocation covers {} frequencies, got {} sin and {} cos latents", levels, sins.len(), coss.len());
    }
    if origin.len() != d || sins.iter().chain(coss).any(|l| l.len() != d) {
        bail!(Config, "every latent must have length {}", d);
    }
    let g = alloc.g();
    let mut out = origin.to_vec();
    for i in 1..=levels {
        out.extend(circular_slice(sins[i - 1], -(g[i] as isize), -(g[i - 1] as isize))?);
        out.extend(circular_slice(coss[i - 1], g[i - 1] as isize, g[i] as isize)?);
    }
    Ok(out)
}

/// One contiguous block of the aggregated output.
///
/// `out[offset + t] = sum over (p, c) in sources of latent_p[(c + t) mod d]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSegment {
    /// Block length.
    pub len: usize,
    /// `(point index, start channel)` pairs summed into this block.
    pub sources: Vec<(usize, usize)>,
}

/// Aggregator bound to a latent size and schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorSpec {
    kind: AggregatorKind,
    d_lat: usize,
    schedule: FrequencySchedule,
    include_origin: bool,
    pink: Option<PinkAllocation>,
}

impl AggregatorSpec {
    /// Validate and bind an aggregator.
    pub fn new(kind: AggregatorKind, d_lat: usize, schedule: FrequencySchedule, include_origin: bool) -> Result<Self> {
        if d_lat == 0 {
            bail!(Config, "latent dimension must be positive");
        }
        if !include_origin && schedule.is_empty() {
            bail!(Config, "without the origin at least one frequency is required");
        }
        let pink = match kind {
            AggregatorKind::Pink { alpha } => Some(PinkAllocation::new(d_lat, &schedule, alpha)?),
            _ => None,
        };
        Ok(Self {
            kind,
            d_lat,
            schedule,
            include_origin,
            pink,
        })
    }

    #[allow(missing_docs)]
    pub fn kind(&self) -> AggregatorKind {
        self.kind
    }

    #[allow(missing_docs)]
    pub fn d_lat(&self) -> usize {
        self.d_lat
    }

    #[allow(missing_docs)]
    pub fn schedule(&self) -> &FrequencySchedule {
        &self.schedule
    }

    #[allow(missing_docs)]
    pub fn include_origin(&self) -> bool {
        self.include_origin
    }

    /// Pink allocation, when the kind is pink.
    pub fn allocation(&self) -> Option<&PinkAllocation> {
        self.pink.as_ref()
    }

    /// Number of latents expected, `2L+1` or `2L` without the origin.
    pub fn points(&self) -> usize {
        2 * self.schedule.len() + usize::from(self.include_origin)
    }

    fn sin_point(&self, i: usize) -> usize {
        i - 1 + usize::from(self.include_origin)
    }

    fn cos_point(&self, i: usize) -> usize {
        self.schedule.len() + i - 1 + usize::from(self.include_origin)
    }

    /// Length of the aggregated vector.
    pub fn output_dim(&self) -> usize {
        self.plan().iter().map(|s| s.len).sum()
    }

    /// Output layout as blocks of (possibly summed) circular latent slices.
    pub fn plan(&self) -> Vec<OutputSegment> {
        let d = self.d_lat;
        let levels = self.schedule.len();
        let whole = |p: usize| OutputSegment {
            len: d,
            sources: vec![(p, 0)],
        };
        let mut out = Vec::new();
        match self.kind {
            AggregatorKind::Concat => out.extend((0..self.points()).map(whole)),
            AggregatorKind::SumAll => out.push(OutputSegment {
                len: d,
                sources: (0..self.points()).map(|p| (p, 0)).collect(),
            }),
            AggregatorKind::SumPerFrequency => {
                if self.include_origin {
                    out.push(whole(0));
                }
                out.extend((1..=levels).map(|i| OutputSegment {
                    len: d,
                    sources: vec![(self.sin_point(i), 0), (self.cos_point(i), 0)],
                }));
            }
            AggregatorKind::Pink { .. } => {
                let alloc = self.pink.as_ref().expect("pink allocation is built in new");
                if self.include_origin {
                    out.push(whole(0));
                }
                for i in 1..=levels {
                    let a = alloc.a()[i];
                    out.push(OutputSegment {
                        len: a,
                        sources: vec![(self.sin_point(i), alloc.sin_start(i))],
                    });
                    out.push(OutputSegment {
                        len: a,
                        sources: vec![(self.cos_point(i), alloc.cos_start(i))],
                    });
                }
            }
        }
        out
    }

    /// The plan as a column map over the point-major flat latent row.
    pub fn column_map(&self) -> ColumnMap {
        let d = self.d_lat;
        let plan = self.plan();
        ColumnMap::new(plan.iter().flat_map(|seg| {
            (0..seg.len).map(move |t| {
                seg.sources
                    .iter()
                    .map(move |&(p, c)| p * d + (c + t) % d)
                    .collect::<Vec<_>>()
            })
        }))
    }

    /// Aggregate latents given in point order.
    pub fn aggregate(&self, latents: &[&[f64]]) -> Result<Vec<f64>> {
        if latents.len() != self.points() {
            bail!(Config, "expected {} latents, got {}", self.points(), latents.len());
        }
        if latents.iter().any(|l| l.len() != self.d_lat) {
            bail!(Config, "every latent must have length {}", self.d_lat);
        }
        let mut out = Vec::with_capacity(self.output_dim());
        for seg in self.plan() {
            for t in 0..seg.len {
                out.push(seg.sources.iter().map(|&(p, c)| latents[p][(c + t) % self.d_lat]).sum());
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`AggregatorSpec::aggregate`].
pub fn aggregate(spec: &AggregatorSpec, latents: &[&[f64]]) -> Result<Vec<f64>> {
    spec.aggregate(latents)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule(l: usize) -> FrequencySchedule {
        FrequencySchedule::power_of_two(l)
    }

    #[test]
    fn circular_slice_examples() {
        let v = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(circular_slice(&v, 1, 3).unwrap(), [1.0, 2.0]);
        assert_eq!(circular_slice(&v, 3, 5).unwrap(), [3.0, 0.0]);
        assert_eq!(circular_slice(&v, -2, 0).unwrap(), [2.0, 3.0]);
        assert!(circular_slice(&v, 2, 2).is_err());
        assert!(circular_slice(&v, 3, 1).is_err());
    }

    #[test]
    fn pink_dimension_examples() {
        assert_eq!(pink_dims(8, &schedule(3), 1.0), 22);
        assert_eq!(pink_dims(8, &schedule(3), 0.0), 56);
        assert_eq!(pink_dims(8, &schedule(3), 2.0), 16);
        let alloc = PinkAllocation::new(8, &schedule(3), 1.0).unwrap();
        assert_eq!(alloc.a(), &[0, 4, 2, 1]);
        assert_eq!(alloc.g(), &[0, 4, 6, 7]);
    }

    #[test]
    fn allocation_never_drops_below_one() {
        let alloc = PinkAllocation::new(3, &schedule(6), 1.0).unwrap();
        assert_eq!(alloc.a(), &[0, 1, 1, 1, 1, 1, 1]);
        assert!(PinkAllocation::new(3, &schedule(2), -1.0).is_err());
    }

    #[test]
    fn pink_d8_l3_example() {
        let lat = |base: f64| -> Vec<f64> { (0..8).map(|j| base + j as f64).collect() };
        let (o, s, c) = (lat(0.0), [lat(10.0), lat(20.0), lat(30.0)], [lat(40.0), lat(50.0), lat(60.0)]);
        let alloc = PinkAllocation::new(8, &schedule(3), 1.0).unwrap();
        let out = pink_aggregate(&o, &[&s[0], &s[1], &s[2]], &[&c[0], &c[1], &c[2]], &alloc).unwrap();
        assert_eq!(out.len(), 22);
        // S_1: [-4, 0) -> channels 4..8, C_1: [0, 4)
        assert_eq!(&out[8..12], &[14.0, 15.0, 16.0, 17.0]);
        assert_eq!(&out[12..16], &[40.0, 41.0, 42.0, 43.0]);
        // S_2: [-6, -4) -> channels 2,3; C_2: [4, 6)
        assert_eq!(&out[16..18], &[22.0, 23.0]);
        assert_eq!(&out[18..20], &[54.0, 55.0]);
        // S_3: [-7, -6) -> channel 1; C_3: [6, 7)
        assert_eq!(&out[20..22], &[31.0, 66.0]);
    }

    #[test]
    fn alpha_zero_equals_concat() {
        let sched = schedule(3);
        let lats: Vec<Vec<f64>> = (0..7).map(|p| (0..5).map(|j| (p * 10 + j) as f64).collect()).collect();
        let refs: Vec<&[f64]> = lats.iter().map(Vec::as_slice).collect();
        let pink = AggregatorSpec::new(AggregatorKind::Pink { alpha: 0.0 }, 5, sched.clone(), true).unwrap();
        let concat = AggregatorSpec::new(AggregatorKind::Concat, 5, sched, true).unwrap();
        let a = pink.aggregate(&refs).unwrap();
        let b = concat.aggregate(&refs).unwrap();
        // Same multiset per frequency block; the first block (origin) is identical.
        assert_eq!(a.len(), b.len());
        assert_eq!(&a[..5], &b[..5]);
        let mut sa = a.clone();
        let mut sb = b.clone();
        sa.sort_by(f64::total_cmp);
        sb.sort_by(f64::total_cmp);
        assert_eq!(sa, sb);
    }

    #[test]
    fn aggregate_examples() {
        let sched = schedule(3);
        let concat = AggregatorSpec::new(AggregatorKind::Concat, 17, sched.clone(), true).unwrap();
        assert_eq!(concat.output_dim(), 119);
        let e1: &[f64] = &[1.0, 0.0, 0.0];
        let sum = AggregatorSpec::new(AggregatorKind::SumAll, 3, sched.clone(), true).unwrap();
        assert_eq!(sum.aggregate(&[e1; 7]).unwrap(), [7.0, 0.0, 0.0]);
        let per = AggregatorSpec::new(AggregatorKind::SumPerFrequency, 8, sched.clone(), true).unwrap();
        assert_eq!(per.output_dim(), 32);
        let zeros: &[f64] = &[0.0; 8];
        let pink = AggregatorSpec::new(AggregatorKind::Pink { alpha: 1.0 }, 8, sched, true).unwrap();
        assert_eq!(pink.aggregate(&[zeros; 7]).unwrap(), [0.0; 22]);
        assert!(pink.aggregate(&[zeros; 6]).is_err());
    }

    #[test]
    fn output_length_non_increasing_in_alpha() {
        for d in [1, 5, 8, 17, 64] {
            let mut last = usize::MAX;
            for k in 0..12 {
                let n = pink_dims(d, &schedule(4), k as f64 * 0.25);
                assert!(n <= last);
                last = n;
            }
        }
    }
}
