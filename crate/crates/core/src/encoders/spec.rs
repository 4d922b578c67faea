use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::grid::{validate_lattice, Boundary, FeatureGrid};
use super::hash::{HashGrid, HashIndexing};
use super::lpe::{lpe_default_frequencies, LocalPeGrid};
use super::multires::{Level, MultiRes};
use super::ntc::{tiled_schedule, NtcEncoder};
use super::peps::PepsEncoder;
use super::Encoder;
use crate::aggregators::{AggregatorKind, AggregatorSpec};
use crate::error::{bail, Result};
use crate::kv::Section;
use crate::numerics::ParamStore;
use crate::projection::FrequencySchedule;

/// Description of an encoder, independent of any parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum EncoderSpec {
    /// Raw coordinates.
    Identity {
        #[allow(missing_docs)]
        dims: usize,
    },
    /// Raw sin/cos encoding.
    Pe {
        #[allow(missing_docs)]
        dims: usize,
        #[allow(missing_docs)]
        schedule: FrequencySchedule,
    },
    /// Dense grid, bilinear in 2-D and trilinear in 3-D.
    Grid {
        #[allow(missing_docs)]
        resolution: Vec<usize>,
        #[allow(missing_docs)]
        feat_dim: usize,
        #[allow(missing_docs)]
        boundary: Boundary,
    },
    /// Dense grid returning its `2^d` corner latents.
    ConcatGrid {
        #[allow(missing_docs)]
        resolution: Vec<usize>,
        #[allow(missing_docs)]
        feat_dim: usize,
    },
    /// Hashed grid with a `(table_size, feat_dim)` table.
    Hash {
        #[allow(missing_docs)]
        resolution: Vec<usize>,
        #[allow(missing_docs)]
        table_size: usize,
        #[allow(missing_docs)]
        feat_dim: usize,
    },
    /// Isotropic dense grids, one per resolution.
    MultiGrid {
        #[allow(missing_docs)]
        dims: usize,
        #[allow(missing_docs)]
        resolutions: Vec<usize>,
        #[allow(missing_docs)]
        feat_dim: usize,
    },
    /// Isotropic hash grids; level `l` uses `min(max_table_size, r_l^d)` rows.
    MultiHash {
        #[allow(missing_docs)]
        dims: usize,
        #[allow(missing_docs)]
        resolutions: Vec<usize>,
        #[allow(missing_docs)]
        feat_dim: usize,
        #[allow(missing_docs)]
        max_table_size: usize,
    },
    /// Grid with local positional encoding; `local_frequencies = 0` picks
    /// `ceil(k / 2d)`.
    Lpe {
        #[allow(missing_docs)]
        resolution: Vec<usize>,
        #[allow(missing_docs)]
        feat_dim: usize,
        #[allow(missing_docs)]
        local_frequencies: usize,
    },
    /// Fine and coarse encoders plus raw encoding at the top frequencies of the image.
    Ntc {
        #[allow(missing_docs)]
        fine: Box<EncoderSpec>,
        #[allow(missing_docs)]
        coarse: Box<EncoderSpec>,
        /// Largest image side in pixels.
        image_size: usize,
        #[allow(missing_docs)]
        tiled_frequencies: usize,
    },
    /// Shared inner encoder sampled at the points of interest.
    Peps {
        #[allow(missing_docs)]
        inner: Box<EncoderSpec>,
        #[allow(missing_docs)]
        schedule: FrequencySchedule,
        #[allow(missing_docs)]
        aggregator: AggregatorKind,
        #[allow(missing_docs)]
        include_origin: bool,
    },
}

fn multi_table(r: usize, dims: usize, max_table: usize) -> usize {
    r.checked_pow(dims as u32).unwrap_or(usize::MAX).min(max_table)
}

fn check_multi(dims: usize, resolutions: &[usize], feat_dim: usize) -> Result<()> {
    if resolutions.is_empty() {
        bail!(Config, "a multi-resolution stack needs at least one level");
    }
    for &r in resolutions {
        validate_lattice(&alloc::vec![r; dims], feat_dim)?;
    }
    Ok(())
}

impl EncoderSpec {
    /// Plain grid with clamped boundaries.
    pub fn grid(resolution: &[usize], feat_dim: usize) -> Self {
        EncoderSpec::Grid {
            resolution: resolution.to_vec(),
            feat_dim,
            boundary: Boundary::Clamp,
        }
    }

    /// Wrap `inner` in PEPS over the power-of-two schedule with `levels` frequencies.
    pub fn peps(inner: EncoderSpec, levels: usize, aggregator: AggregatorKind) -> Self {
        EncoderSpec::Peps {
            inner: Box::new(inner),
            schedule: FrequencySchedule::power_of_two(levels),
            aggregator,
            include_origin: true,
        }
    }

    /// Config spelling of the kind.
    pub fn kind_name(&self) -> &'static str {
        match self {
            EncoderSpec::Identity { .. } => "identity",
            EncoderSpec::Pe { .. } => "pe",
            EncoderSpec::Grid { resolution, .. } => match resolution.len() {
                2 => "bi_grid",
                3 => "ti_grid",
                _ => "grid",
            },
            EncoderSpec::ConcatGrid { .. } => "concat_grid",
            EncoderSpec::Hash { .. } => "hash_grid",
            EncoderSpec::MultiGrid { .. } => "multi_grid",
            EncoderSpec::MultiHash { .. } => "multi_hash",
            EncoderSpec::Lpe { .. } => "lpe",
            EncoderSpec::Ntc { .. } => "ntc",
            EncoderSpec::Peps { .. } => "peps",
        }
    }

    /// Input dimensionality.
    pub fn dims(&self) -> usize {
        match self {
            EncoderSpec::Identity { dims }
            | EncoderSpec::Pe { dims, .. }
            | EncoderSpec::MultiGrid { dims, .. }
            | EncoderSpec::MultiHash { dims, .. } => *dims,
            EncoderSpec::Grid { resolution, .. }
            | EncoderSpec::ConcatGrid { resolution, .. }
            | EncoderSpec::Hash { resolution, .. }
            | EncoderSpec::Lpe { resolution, .. } => resolution.len(),
            EncoderSpec::Ntc { fine, .. } => fine.dims(),
            EncoderSpec::Peps { inner, .. } => inner.dims(),
        }
    }

    /// Check the description without allocating parameters.
    pub fn validate(&self) -> Result<()> {
        self.output_dim().map(|_| ())
    }

    /// Feature length per coordinate; validates on the way.
    pub fn output_dim(&self) -> Result<usize> {
        Ok(match self {
            EncoderSpec::Identity { dims } => {
                if *dims == 0 {
                    bail!(Config, "identity encoder needs at least one dimension");
                }
                *dims
            }
            EncoderSpec::Pe { dims, schedule } => {
                if *dims == 0 {
                    bail!(Config, "positional encoding needs at least one dimension");
                }
                2 * schedule.len() * dims
            }
            EncoderSpec::Grid { resolution, feat_dim, .. } | EncoderSpec::Hash { resolution, feat_dim, .. } => {
                validate_lattice(resolution, *feat_dim)?;
                if let EncoderSpec::Hash { table_size, .. } = self {
                    if *table_size == 0 || *table_size > u32::MAX as usize {
                        bail!(Config, "hash table size must be in 1..=2^32-1, got {}", table_size);
                    }
                }
                *feat_dim
            }
            EncoderSpec::ConcatGrid { resolution, feat_dim } => {
                validate_lattice(resolution, *feat_dim)?;
                (1 << resolution.len()) * feat_dim
            }
            EncoderSpec::MultiGrid { dims, resolutions, feat_dim } => {
                check_multi(*dims, resolutions, *feat_dim)?;
                resolutions.len() * feat_dim
            }
            EncoderSpec::MultiHash {
                dims,
                resolutions,
                feat_dim,
                max_table_size,
            } => {
                check_multi(*dims, resolutions, *feat_dim)?;
                if *max_table_size == 0 || *max_table_size > u32::MAX as usize {
                    bail!(Config, "hash table size must be in 1..=2^32-1, got {}", max_table_size);
                }
                resolutions.len() * feat_dim
            }
            EncoderSpec::Lpe { resolution, feat_dim, .. } => {
                validate_lattice(resolution, *feat_dim)?;
                *feat_dim
            }
            EncoderSpec::Ntc {
                fine,
                coarse,
                image_size,
                tiled_frequencies,
            } => {
                if fine.dims() != coarse.dims() {
                    bail!(Config, "fine and coarse encoders disagree on dimensionality");
                }
                let tiled = if *tiled_frequencies == 0 {
                    0
                } else {
                    tiled_schedule(*image_size, *tiled_frequencies)?.len()
                };
                fine.output_dim()? + coarse.output_dim()? + 2 * tiled * fine.dims()
            }
            EncoderSpec::Peps {
                inner,
                schedule,
                aggregator,
                include_origin,
            } => AggregatorSpec::new(*aggregator, inner.output_dim()?, schedule.clone(), *include_origin)?.output_dim(),
        })
    }

    /// Number of learnable scalars the encoder will allocate.
    pub fn param_count(&self) -> Result<usize> {
        self.validate()?;
        Ok(match self {
            EncoderSpec::Identity { .. } | EncoderSpec::Pe { .. } => 0,
            EncoderSpec::Grid { resolution, feat_dim, .. }
            | EncoderSpec::ConcatGrid { resolution, feat_dim }
            | EncoderSpec::Lpe { resolution, feat_dim, .. } => resolution.iter().product::<usize>() * feat_dim,
            EncoderSpec::Hash { table_size, feat_dim, .. } => table_size * feat_dim,
            EncoderSpec::MultiGrid { dims, resolutions, feat_dim } => {
                resolutions.iter().map(|&r| multi_table(r, *dims, usize::MAX)).sum::<usize>() * feat_dim
            }
            EncoderSpec::MultiHash {
                dims,
                resolutions,
                feat_dim,
                max_table_size,
            } => resolutions.iter().map(|&r| multi_table(r, *dims, *max_table_size)).sum::<usize>() * feat_dim,
            EncoderSpec::Ntc { fine, coarse, .. } => fine.param_count()? + coarse.param_count()?,
            EncoderSpec::Peps { inner, .. } => inner.param_count()?,
        })
    }

    /// Allocate parameters and build the encoder.
    pub fn build(&self, store: &mut ParamStore, rng: &mut impl Rng) -> Result<Encoder> {
        self.validate()?;
        Ok(match self {
            EncoderSpec::Identity { dims } => Encoder::Identity { dims: *dims },
            EncoderSpec::Pe { dims, schedule } => Encoder::Pe {
                dims: *dims,
                schedule: schedule.clone(),
            },
            EncoderSpec::Grid {
                resolution,
                feat_dim,
                boundary,
            } => Encoder::Grid(FeatureGrid::new(store, resolution, *feat_dim, *boundary, rng)?),
            EncoderSpec::ConcatGrid { resolution, feat_dim } => {
                Encoder::ConcatGrid(FeatureGrid::new(store, resolution, *feat_dim, Boundary::Clamp, rng)?)
            }
            EncoderSpec::Hash {
                resolution,
                table_size,
                feat_dim,
            } => Encoder::Hash(HashGrid::new(store, resolution, *table_size, *feat_dim, HashIndexing::Auto, rng)?),
            EncoderSpec::MultiGrid { dims, resolutions, feat_dim } => {
                let levels = resolutions
                    .iter()
                    .map(|&r| FeatureGrid::new(store, &alloc::vec![r; *dims], *feat_dim, Boundary::Clamp, rng).map(Level::Grid))
                    .collect::<Result<Vec<_>>>()?;
                Encoder::Multi(MultiRes::new(levels)?)
            }
            EncoderSpec::MultiHash {
                dims,
                resolutions,
                feat_dim,
                max_table_size,
            } => {
                let levels = resolutions
                    .iter()
                    .map(|&r| {
                        let t = multi_table(r, *dims, *max_table_size);
                        HashGrid::new(store, &alloc::vec![r; *dims], t, *feat_dim, HashIndexing::Auto, rng).map(Level::Hash)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Encoder::Multi(MultiRes::new(levels)?)
            }
            EncoderSpec::Lpe {
                resolution,
                feat_dim,
                local_frequencies,
            } => {
                let grid = FeatureGrid::new(store, resolution, *feat_dim, Boundary::Clamp, rng)?;
                let l = match *local_frequencies {
                    0 => lpe_default_frequencies(*feat_dim, resolution.len()),
                    n => n,
                };
                Encoder::Lpe(LocalPeGrid::new(grid, FrequencySchedule::power_of_two(l)))
            }
            EncoderSpec::Ntc {
                fine,
                coarse,
                image_size,
                tiled_frequencies,
            } => {
                let fine = fine.build(store, rng)?;
                let coarse = coarse.build(store, rng)?;
                let tiled = if *tiled_frequencies == 0 {
                    FrequencySchedule::power_of_two(0)
                } else {
                    tiled_schedule(*image_size, *tiled_frequencies)?
                };
                Encoder::Ntc(NtcEncoder::new(fine, coarse, tiled)?)
            }
            EncoderSpec::Peps {
                inner,
                schedule,
                aggregator,
                include_origin,
            } => {
                let inner = inner.build(store, rng)?;
                let agg = AggregatorSpec::new(*aggregator, inner.output_dim(), schedule.clone(), *include_origin)?;
                Encoder::Peps(PepsEncoder::new(inner, agg)?)
            }
        })
    }

    /// Write as `prefix`-qualified keys.
    pub fn write_kv(&self, section: &mut Section, prefix: &str) {
        let key = |k: &str| format!("{prefix}{k}");
        section.set(&key("kind"), self.kind_name());
        match self {
            EncoderSpec::Identity { dims } => section.set(&key("dims"), dims),
            EncoderSpec::Pe { dims, schedule } => {
                section.set(&key("dims"), dims);
                write_schedule(section, prefix, schedule);
            }
            EncoderSpec::Grid {
                resolution,
                feat_dim,
                boundary,
            } => {
                section.set_list(&key("resolution"), resolution);
                section.set(&key("feat_dim"), feat_dim);
                section.set(&key("boundary"), boundary.name());
            }
            EncoderSpec::ConcatGrid { resolution, feat_dim } => {
                section.set_list(&key("resolution"), resolution);
                section.set(&key("feat_dim"), feat_dim);
            }
            EncoderSpec::Hash {
                resolution,
                table_size,
                feat_dim,
            } => {
                section.set_list(&key("resolution"), resolution);
                section.set(&key("table_size"), table_size);
                section.set(&key("feat_dim"), feat_dim);
            }
            EncoderSpec::MultiGrid { dims, resolutions, feat_dim } => {
                section.set(&key("dims"), dims);
                section.set_list(&key("resolutions"), resolutions);
                section.set(&key("feat_dim"), feat_dim);
            }
            EncoderSpec::MultiHash {
                dims,
                resolutions,
                feat_dim,
                max_table_size,
            } => {
                section.set(&key("dims"), dims);
                section.set_list(&key("resolutions"), resolutions);
                section.set(&key("feat_dim"), feat_dim);
                section.set(&key("max_table_size"), max_table_size);
            }
            EncoderSpec::Lpe {
                resolution,
                feat_dim,
                local_frequencies,
            } => {
                section.set_list(&key("resolution"), resolution);
                section.set(&key("feat_dim"), feat_dim);
                section.set(&key("local_frequencies"), local_frequencies);
            }
            EncoderSpec::Ntc {
                fine,
                coarse,
                image_size,
                tiled_frequencies,
            } => {
                section.set(&key("image_size"), image_size);
                section.set(&key("tiled_frequencies"), tiled_frequencies);
                fine.write_kv(section, &key("fine."));
                coarse.write_kv(section, &key("coarse."));
            }
            EncoderSpec::Peps {
                inner,
                schedule,
                aggregator,
                include_origin,
            } => {
                write_schedule(section, prefix, schedule);
                section.set(&key("aggregator"), aggregator.name());
                if let AggregatorKind::Pink { alpha } = aggregator {
                    section.set(&key("alpha"), alpha);
                }
                section.set(&key("include_origin"), include_origin);
                inner.write_kv(section, &key("inner."));
            }
        }
    }

    /// Read `prefix`-qualified keys written by [`Self::write_kv`] or by hand.
    pub fn read_kv(section: &Section, prefix: &str) -> Result<Self> {
        let key = |k: &str| format!("{prefix}{k}");
        let kind: String = section.require(&key("kind"))?;
        let resolution = || section.require_list::<usize>(&key("resolution"));
        let feat_dim = || section.require::<usize>(&key("feat_dim"));
        let spec = match kind.as_str() {
            "identity" => EncoderSpec::Identity {
                dims: section.require(&key("dims"))?,
            },
            "pe" => EncoderSpec::Pe {
                dims: section.require(&key("dims"))?,
                schedule: read_schedule(section, prefix)?,
            },
            "grid" | "bi_grid" | "ti_grid" => {
                let resolution = resolution()?;
                let want = match kind.as_str() {
                    "bi_grid" => Some(2),
                    "ti_grid" => Some(3),
                    _ => None,
                };
                if want.is_some_and(|w| w != resolution.len()) {
                    return Err(section.error(&key("resolution"), format!("{kind} needs {} axes", want.unwrap_or(0))));
                }
                let boundary = match section.get(&key("boundary")).unwrap_or("clamp") {
                    "clamp" => Boundary::Clamp,
                    "wrap" => Boundary::Wrap,
                    other => return Err(section.error(&key("boundary"), format!("unknown boundary `{other}`"))),
                };
                EncoderSpec::Grid {
                    resolution,
                    feat_dim: feat_dim()?,
                    boundary,
                }
            }
            "concat_grid" => EncoderSpec::ConcatGrid {
                resolution: resolution()?,
                feat_dim: feat_dim()?,
            },
            "hash_grid" => EncoderSpec::Hash {
                resolution: resolution()?,
                table_size: section.require(&key("table_size"))?,
                feat_dim: feat_dim()?,
            },
            "multi_grid" => EncoderSpec::MultiGrid {
                dims: section.require(&key("dims"))?,
                resolutions: section.require_list(&key("resolutions"))?,
                feat_dim: feat_dim()?,
            },
            "multi_hash" => EncoderSpec::MultiHash {
                dims: section.require(&key("dims"))?,
                resolutions: section.require_list(&key("resolutions"))?,
                feat_dim: feat_dim()?,
                max_table_size: section.parse_or(&key("max_table_size"), 1 << 17)?,
            },
            "lpe" => EncoderSpec::Lpe {
                resolution: resolution()?,
                feat_dim: feat_dim()?,
                local_frequencies: section.parse_or(&key("local_frequencies"), 0)?,
            },
            "ntc" => EncoderSpec::Ntc {
                fine: Box::new(Self::read_kv(section, &key("fine."))?),
                coarse: Box::new(Self::read_kv(section, &key("coarse."))?),
                image_size: section.require(&key("image_size"))?,
                tiled_frequencies: section.parse_or(&key("tiled_frequencies"), 3)?,
            },
            "peps" => {
                let aggregator = read_aggregator(section, prefix)?;
                EncoderSpec::Peps {
                    inner: Box::new(Self::read_kv(section, &key("inner."))?),
                    schedule: read_schedule(section, prefix)?,
                    aggregator,
                    include_origin: section.parse_or(&key("include_origin"), true)?,
                }
            }
            other => return Err(section.error(&key("kind"), format!("unknown encoder kind `{other}`"))),
        };
        spec.validate().map_err(|e| section.error(&key("kind"), e))?;
        Ok(spec)
    }
}

/// Write `frequencies = L` for the default schedule, an explicit `phi` list otherwise.
pub(crate) fn write_schedule(section: &mut Section, prefix: &str, schedule: &FrequencySchedule) {
    if schedule.is_power_of_two() {
        section.set(&format!("{prefix}frequencies"), schedule.len());
    } else {
        section.set_list(&format!("{prefix}phi"), schedule.phi());
    }
}

pub(crate) fn read_schedule(section: &Section, prefix: &str) -> Result<FrequencySchedule> {
    let phi_key = format!("{prefix}phi");
    if let Some(phi) = section.list::<f64>(&phi_key)? {
        return FrequencySchedule::custom(phi).map_err(|e| section.error(&phi_key, e));
    }
    Ok(FrequencySchedule::power_of_two(section.require(&format!("{prefix}frequencies"))?))
}

/// `aggregator = concat|pink|sum_all|sum_per_frequency`, with `alpha` for pink (default 1).
pub(crate) fn read_aggregator(section: &Section, prefix: &str) -> Result<AggregatorKind> {
    let key = format!("{prefix}aggregator");
    let name: String = section.parse_or(&key, String::from("concat"))?;
    Ok(match name.as_str() {
        "concat" => AggregatorKind::Concat,
        "pink" => {
            let alpha_key = format!("{prefix}alpha");
            let alpha: f64 = section.parse_or(&alpha_key, 1.0)?;
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(section.error(&alpha_key, "alpha must be finite and non-negative"));
            }
            AggregatorKind::Pink { alpha }
        }
        "sum_all" => AggregatorKind::SumAll,
        "sum_per_frequency" => AggregatorKind::SumPerFrequency,
        other => return Err(section.error(&key, format!("unknown aggregator `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kv::Document;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn samples() -> Vec<EncoderSpec> {
        let grid = EncoderSpec::grid(&[8, 6], 4);
        vec![
            EncoderSpec::Identity { dims: 3 },
            EncoderSpec::Pe {
                dims: 2,
                schedule: FrequencySchedule::power_of_two(4),
            },
            EncoderSpec::Pe {
                dims: 1,
                schedule: FrequencySchedule::custom(vec![1.0, 2.5]).unwrap(),
            },
            grid.clone(),
            EncoderSpec::Grid {
                resolution: vec![4, 4, 4],
                feat_dim: 2,
                boundary: Boundary::Wrap,
            },
            EncoderSpec::ConcatGrid {
                resolution: vec![5, 5],
                feat_dim: 3,
            },
            EncoderSpec::Hash {
                resolution: vec![16, 16, 16],
                table_size: 512,
                feat_dim: 2,
            },
            EncoderSpec::MultiGrid {
                dims: 2,
                resolutions: vec![4, 8, 16],
                feat_dim: 2,
            },
            EncoderSpec::MultiHash {
                dims: 3,
                resolutions: vec![4, 8, 16],
                feat_dim: 2,
                max_table_size: 1024,
            },
            EncoderSpec::Lpe {
                resolution: vec![6, 6],
                feat_dim: 16,
                local_frequencies: 0,
            },
            EncoderSpec::Ntc {
                fine: Box::new(EncoderSpec::peps(
                    EncoderSpec::ConcatGrid {
                        resolution: vec![12, 8],
                        feat_dim: 3,
                    },
                    2,
                    AggregatorKind::Concat,
                )),
                coarse: Box::new(EncoderSpec::grid(&[6, 4], 5)),
                image_size: 96,
                tiled_frequencies: 3,
            },
            EncoderSpec::peps(grid.clone(), 3, AggregatorKind::Pink { alpha: 1.0 }),
            EncoderSpec::peps(grid, 2, AggregatorKind::SumPerFrequency),
        ]
    }

    #[test]
    fn reported_dims_and_counts_match_built_encoders() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for spec in samples() {
            let mut store = ParamStore::new();
            let enc = spec.build(&mut store, &mut rng).unwrap();
            assert_eq!(enc.output_dim(), spec.output_dim().unwrap(), "{spec:?}");
            assert_eq!(store.scalar_count(), spec.param_count().unwrap(), "{spec:?}");
            let x = vec![0.3; spec.dims()];
            assert_eq!(enc.encode(&store, &x).unwrap().len(), enc.output_dim(), "{spec:?}");
        }
    }

    #[test]
    fn text_round_trip() {
        for spec in samples() {
            let mut doc = Document::new();
            spec.write_kv(doc.section_mut("encoder"), "");
            let text = doc.to_text();
            let parsed = Document::parse(&text).unwrap();
            let back = EncoderSpec::read_kv(parsed.require("encoder").unwrap(), "").unwrap();
            assert_eq!(back, spec, "{text}");
            parsed.check_all_used(&["encoder"]).unwrap();
        }
    }

    #[test]
    fn bad_configs_are_rejected_with_lines() {
        let doc = Document::parse("[encoder]\nkind = bi_grid\nresolution = 4,4,4\nfeat_dim = 2\n").unwrap();
        let err = EncoderSpec::read_kv(doc.require("encoder").unwrap(), "").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let doc = Document::parse("[encoder]\nkind = spline\n").unwrap();
        let err = EncoderSpec::read_kv(doc.require("encoder").unwrap(), "").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let doc = Document::parse("[encoder]\nkind = grid\nresolution = 4,4\nfeat_dim = 0\n").unwrap();
        assert!(EncoderSpec::read_kv(doc.require("encoder").unwrap(), "").is_err());
    }

    #[test]
    fn ntc_paper_dimension() {
        let spec = EncoderSpec::Ntc {
            fine: Box::new(EncoderSpec::ConcatGrid {
                resolution: vec![1024, 1024],
                feat_dim: 12,
            }),
            coarse: Box::new(EncoderSpec::grid(&[512, 512], 20)),
            image_size: 4096,
            tiled_frequencies: 3,
        };
        assert_eq!(spec.output_dim().unwrap(), 80);
    }
}
