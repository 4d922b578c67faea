use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{bail, Result};

/// Row-major `height x width x channels` float image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Wrap `data`; its length must be `width * height * channels`.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            bail!(Input, "image dimensions must be positive, got {}x{}x{}", width, height, channels);
        }
        if data.len() != width * height * channels {
            bail!(
                Input,
                "image {}x{}x{} needs {} values, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            );
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Image with every value equal to `v`.
    pub fn filled(width: usize, height: usize, channels: usize, v: f64) -> Result<Self> {
        Self::new(width, height, channels, alloc::vec![v; width * height * channels])
    }

    #[allow(missing_docs)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[allow(missing_docs)]
    pub fn height(&self) -> usize {
        self.height
    }

    #[allow(missing_docs)]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Pixel count.
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    #[allow(missing_docs)]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[allow(missing_docs)]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[allow(missing_docs)]
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Channels of pixel `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[allow(missing_docs)]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[allow(missing_docs)]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// One channel as a row-major plane.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(self.channels).copied().collect()
    }

    /// Average of the channels as a single-channel image.
    pub fn mean_channel(&self) -> Image {
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|p| p.iter().sum::<f64>() / self.channels as f64)
            .collect();
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Same shape as `other`.
    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Input error unless the shapes agree.
    pub fn check_same_shape(&self, other: &Image) -> Result<()> {
        if !self.same_shape(other) {
            bail!(
                Input,
                "image shapes differ: {}x{}x{} vs {}x{}x{}",
                self.width,
                self.height,
                self.channels,
                other.width,
                other.height,
                other.channels
            );
        }
        Ok(())
    }

    /// Elementwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Clamp every value into `[0, 1]`.
    pub fn clamped(&self) -> Image {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Input error unless the image is RGB with values in `[0, 1]`.
    pub fn check_rgb_unit(&self) -> Result<()> {
        if self.channels != 3 {
            bail!(Input, "expected 3 channels, got {}", self.channels);
        }
        if let Some(v) = self.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            bail!(Input, "image value {} outside [0, 1]", v);
        }
        Ok(())
    }

    /// Stack images of equal size along the channel axis.
    pub fn stack(images: &[&Image]) -> Result<Image> {
        let Some(first) = images.first() else {
            bail!(Input, "nothing to stack");
        };
        if images.iter().any(|i| i.width != first.width || i.height != first.height) {
            bail!(Input, "stacked images must share a resolution");
        }
        let channels: usize = images.iter().map(|i| i.channels).sum();
        let mut data = Vec::with_capacity(first.pixels() * channels);
        for p in 0..first.pixels() {
            for img in images {
                data.extend_from_slice(&img.data[p * img.channels..(p + 1) * img.channels]);
            }
        }
        Image::new(first.width, first.height, channels, data)
    }

    /// Channels `start..start+count` as a new image.
    pub fn channel_range(&self, start: usize, count: usize) -> Result<Image> {
        if start + count > self.channels || count == 0 {
            bail!(Input, "channel range {}..{} outside {} channels", start, start + count, self.channels);
        }
        let data = self
            .data
            .chunks_exact(self.channels)
            .flat_map(|p| p[start..start + count].iter().copied())
            .collect();
        Image::new(self.width, self.height, count, data)
    }
}

/// `k` named RGB layers of one resolution, ordered by name.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureSet {
    names: Vec<String>,
    layers: Vec<Image>,
}

impl TextureSet {
    /// Sort layers by name and check they are RGB and equally sized.
    pub fn new(mut layers: Vec<(String, Image)>) -> Result<Self> {
        if layers.is_empty() {
            bail!(Input, "a texture set needs at least one layer");
        }
        layers.sort_by(|a, b| a.0.cmp(&b.0));
        if layers.windows(2).any(|w| w[0].0 == w[1].0) {
            bail!(Input, "texture layer names must be unique");
        }
        let (w, h) = (layers[0].1.width(), layers[0].1.height());
        for (name, img) in &layers {
            img.check_rgb_unit().map_err(|e| crate::Error::Input(alloc::format!("layer `{name}`: {e}")))?;
            if img.width() != w || img.height() != h {
                bail!(Input, "layer `{}` is {}x{}, expected {}x{}", name, img.width(), img.height(), w, h);
            }
        }
        let (names, layers) = layers.into_iter().unzip();
        Ok(Self { names, layers })
    }

    /// Layer names in output order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[allow(missing_docs)]
    pub fn layers(&self) -> &[Image] {
        &self.layers
    }

    #[allow(missing_docs)]
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    #[allow(missing_docs)]
    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// All layers as one `3k`-channel image.
    pub fn stacked(&self) -> Image {
        let refs: Vec<&Image> = self.layers.iter().collect();
        Image::stack(&refs).expect("layers validated on construction")
    }
}
