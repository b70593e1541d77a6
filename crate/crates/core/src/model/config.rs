use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Output stride of every pathway (feature map = input / 8).
pub const FEATURE_STRIDE: usize = 8;

/// One layer of a pathway stack.
///
/// Text form: `conv3x3:16`, `conv3x3:64:d2` (dilation 2), `conv3x3:32:s2`
/// (stride 2), `relu`, `pool2` (2×2 max pool, stride 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Layer {
    Conv {
        kernel: usize,
        channels: usize,
        stride: usize,
        dilation: usize,
    },
    Relu,
    Pool {
        size: usize,
    },
}

impl Layer {
    pub fn conv(kernel: usize, channels: usize) -> Self {
        Layer::Conv {
            kernel,
            channels,
            stride: 1,
            dilation: 1,
        }
    }

    pub fn dilated(kernel: usize, channels: usize, dilation: usize) -> Self {
        Layer::Conv {
            kernel,
            channels,
            stride: 1,
            dilation,
        }
    }

    pub fn stride(&self) -> usize {
        match *self {
            Layer::Conv { stride, .. } => stride,
            Layer::Relu => 1,
            Layer::Pool { size } => size,
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Layer::Conv {
                kernel,
                channels,
                stride,
                dilation,
            } => {
                write!(f, "conv{kernel}x{kernel}:{channels}")?;
                if dilation != 1 {
                    write!(f, ":d{dilation}")?;
                }
                if stride != 1 {
                    write!(f, ":s{stride}")?;
                }
                Ok(())
            }
            Layer::Relu => write!(f, "relu"),
            Layer::Pool { size } => write!(f, "pool{size}"),
        }
    }
}

impl FromStr for Layer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("layer", format!("cannot parse {s:?}"));
        let s = s.trim();
        if s == "relu" {
            return Ok(Layer::Relu);
        }
        if let Some(size) = s.strip_prefix("pool") {
            let size: usize = size.parse().map_err(|_| bad())?;
            return if size >= 1 { Ok(Layer::Pool { size }) } else { Err(bad()) };
        }
        let rest = s.strip_prefix("conv").ok_or_else(bad)?;
        let mut parts = rest.split(':');
        let kernel_part = parts.next().ok_or_else(bad)?;
        let (k1, k2) = kernel_part.split_once('x').ok_or_else(bad)?;
        let kernel: usize = k1.parse().map_err(|_| bad())?;
        if k2.parse::<usize>().map_err(|_| bad())? != kernel || kernel % 2 == 0 {
            return Err(Error::invalid("layer", format!("{s:?}: kernels must be square and odd")));
        }
        let channels: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let (mut stride, mut dilation) = (1, 1);
        for p in parts {
            if let Some(d) = p.strip_prefix('d') {
                dilation = d.parse().map_err(|_| bad())?;
            } else if let Some(st) = p.strip_prefix('s') {
                stride = st.parse().map_err(|_| bad())?;
            } else {
                return Err(bad());
            }
        }
        if channels == 0 || stride == 0 || dilation == 0 {
            return Err(bad());
        }
        Ok(Layer::Conv {
            kernel,
            channels,
            stride,
            dilation,
        })
    }
}

impl TryFrom<String> for Layer {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Layer> for String {
    fn from(l: Layer) -> String {
        l.to_string()
    }
}

/// Network topology and regularization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoNetConfig {
    pub input_height: usize,
    pub input_width: usize,
    pub rgb_layers: Vec<Layer>,
    pub dhg_layers: Vec<Layer>,
    /// Channels of each pathway's final feature map.
    pub feature_channels: usize,
    pub embed_channels: usize,
    pub blend_channels: usize,
    pub dropout_rate: f64,
}

fn default_pathway(widths: [usize; 4]) -> Vec<Layer> {
    vec![
        Layer::conv(3, widths[0]),
        Layer::Relu,
        Layer::Pool { size: 2 },
        Layer::conv(3, widths[1]),
        Layer::Relu,
        Layer::Pool { size: 2 },
        Layer::conv(3, widths[2]),
        Layer::Relu,
        Layer::Pool { size: 2 },
        Layer::dilated(3, widths[3], 2),
        Layer::Relu,
    ]
}

impl Default for EgoNetConfig {
    /// Desk-scale topology: three conv/pool stages and a dilated conv per
    /// pathway, 64 feature channels.
    fn default() -> Self {
        Self::with_widths(64, 64, [16, 32, 64, 64], 64, 64)
    }
}

impl EgoNetConfig {
    pub fn with_widths(
        input_height: usize,
        input_width: usize,
        pathway: [usize; 4],
        embed_channels: usize,
        blend_channels: usize,
    ) -> Self {
        EgoNetConfig {
            input_height,
            input_width,
            rgb_layers: default_pathway(pathway),
            dhg_layers: default_pathway(pathway),
            feature_channels: pathway[3],
            embed_channels,
            blend_channels,
            dropout_rate: 0.5,
        }
    }

    /// 312×312 input, giving the 39×39 feature grid.
    pub fn reference_resolution() -> Self {
        EgoNetConfig {
            input_height: 312,
            input_width: 312,
            ..Self::default()
        }
    }

    pub fn feature_size(&self) -> (usize, usize) {
        (self.input_height / FEATURE_STRIDE, self.input_width / FEATURE_STRIDE)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_height == 0
            || self.input_width == 0
            || self.input_height % FEATURE_STRIDE != 0
            || self.input_width % FEATURE_STRIDE != 0
        {
            return Err(Error::invalid(
                "config",
                format!(
                    "input {}x{} must be a positive multiple of {FEATURE_STRIDE}",
                    self.input_height, self.input_width
                ),
            ));
        }
        for (name, layers) in [("rgb_layers", &self.rgb_layers), ("dhg_layers", &self.dhg_layers)] {
            let stride: usize = layers.iter().map(Layer::stride).product();
            if stride != FEATURE_STRIDE {
                return Err(Error::invalid(
                    "config",
                    format!("{name} has composed stride {stride}, expected {FEATURE_STRIDE}"),
                ));
            }
            let last = layers.iter().rev().find_map(|l| match l {
                Layer::Conv { channels, .. } => Some(*channels),
                _ => None,
            });
            if last != Some(self.feature_channels) {
                return Err(Error::invalid(
                    "config",
                    format!(
                        "{name} ends with {last:?} channels, feature_channels is {}",
                        self.feature_channels
                    ),
                ));
            }
        }
        if self.embed_channels == 0 || self.blend_channels == 0 {
            return Err(Error::invalid("config", "joint pathway widths must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::invalid(
                "config",
                format!("dropout_rate {} outside [0, 1)", self.dropout_rate),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: EgoNetConfig = toml::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical text form.
    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.to_toml().as_bytes()).into()
    }
}
