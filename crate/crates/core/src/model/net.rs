use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use egonet_tensor::ops::{self, Conv2dSpec, PoolSpec};
use egonet_tensor::{Mode, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{EgoNetConfig, Layer, FEATURE_STRIDE};
use super::coords::{build_coord_grids, CoordGrids};
use super::params::EgoNetParams;
use super::ProbabilityMap;
use crate::{Error, Plane, Result};

/// Architecture ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// RGB and DHG pathways, coordinate embedding, blend layer.
    Full,
    /// One pathway over RGB + DHG + full-resolution X/Y input channels.
    #[serde(rename = "single")]
    SingleStream,
    /// Full network without the X/Y channels in the joint pathway.
    NoCoords,
    /// Full network without the blend layer before the classifier.
    NoEmbed,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::SingleStream, Variant::NoCoords, Variant::NoEmbed];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::SingleStream => "single",
            Variant::NoCoords => "nocoords",
            Variant::NoEmbed => "noembed",
        }
    }

    /// Recovers the variant whose parameter layout matches `params`.
    pub fn infer(config: &EgoNetConfig, params: &EgoNetParams) -> Result<Variant> {
        for v in Variant::ALL {
            let net = EgoNet::new(config.clone(), v)?;
            let shapes = net.param_shapes();
            if shapes.len() == params.len()
                && shapes
                    .iter()
                    .all(|(n, s)| params.get(n).is_some_and(|t| t.shape() == s.as_slice()))
            {
                return Ok(v);
            }
        }
        Err(Error::invalid("parameters", "layout matches no model variant for this config"))
    }

    fn joint_coords(self) -> bool {
        matches!(self, Variant::Full | Variant::NoEmbed)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "single" | "singlestream" => Ok(Variant::SingleStream),
            "nocoords" => Ok(Variant::NoCoords),
            "noembed" => Ok(Variant::NoEmbed),
            _ => Err(Error::invalid(
                "variant",
                format!("unknown kind {s:?} (expected full, single, nocoords or noembed)"),
            )),
        }
    }
}

/// Parameters registered on a tape, by name.
pub type ParamVars = BTreeMap<String, Var>;

/// An EgoNet variant bound to a validated configuration.
#[derive(Debug, Clone)]
pub struct EgoNet {
    config: EgoNetConfig,
    variant: Variant,
    coords: CoordGrids,
    input_coords: CoordGrids,
    dropout_rate: f64,
}

fn param<'a>(vars: &'a ParamVars, name: &str) -> Result<Var> {
    vars.get(name)
        .copied()
        .ok_or_else(|| Error::invalid("parameters", format!("missing tensor {name:?}")))
}

impl EgoNet {
    pub fn new(config: EgoNetConfig, variant: Variant) -> Result<Self> {
        config.validate()?;
        let coords = build_coord_grids(config.input_height, config.input_width, FEATURE_STRIDE)?;
        let input_coords = build_coord_grids(config.input_height, config.input_width, 1)?;
        Ok(EgoNet {
            dropout_rate: config.dropout_rate,
            config,
            variant,
            coords,
            input_coords,
        })
    }

    /// Builds a variant from its name (`full`, `single`, `nocoords`, `noembed`).
    pub fn build_variant(kind: &str, config: EgoNetConfig) -> Result<Self> {
        Self::new(config, kind.parse()?)
    }

    pub fn config(&self) -> &EgoNetConfig {
        &self.config
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    /// Overrides the training-time dropout rate of the config.
    pub fn set_dropout_rate(&mut self, rate: f64) -> Result<()> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid("dropout rate", format!("{rate} outside [0, 1)")));
        }
        self.dropout_rate = rate;
        Ok(())
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn coords(&self) -> &CoordGrids {
        &self.coords
    }

    /// Channels entering the first pathway convolution.
    pub fn pathway_input_channels(&self) -> usize {
        match self.variant {
            Variant::SingleStream => 3 + 3 + 2,
            _ => 3,
        }
    }

    /// Channels entering the embedding convolution.
    pub fn joint_input_channels(&self) -> usize {
        let f = self.config.feature_channels;
        match self.variant {
            Variant::Full | Variant::NoEmbed => 2 * f + 2,
            Variant::NoCoords => 2 * f,
            Variant::SingleStream => f,
        }
    }

    fn pathways(&self) -> Vec<(&'static str, &[Layer])> {
        match self.variant {
            Variant::SingleStream => vec![("stream", &self.config.rgb_layers)],
            _ => vec![("rgb", &self.config.rgb_layers), ("dhg", &self.config.dhg_layers)],
        }
    }

    fn has_blend(&self) -> bool {
        self.variant != Variant::NoEmbed
    }

    /// Names and shapes of every learnable tensor, in initialization order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut shapes = Vec::new();
        for (prefix, layers) in self.pathways() {
            let mut c = self.pathway_input_channels();
            for (i, layer) in layers.iter().enumerate() {
                if let Layer::Conv { kernel, channels, .. } = *layer {
                    shapes.push((format!("{prefix}.conv{i}.weight"), vec![channels, c, kernel, kernel]));
                    shapes.push((format!("{prefix}.conv{i}.bias"), vec![channels]));
                    c = channels;
                }
            }
        }
        let e = self.config.embed_channels;
        shapes.push(("joint.embed.weight".into(), vec![e, self.joint_input_channels(), 3, 3]));
        shapes.push(("joint.embed.bias".into(), vec![e]));
        let mut c = e;
        if self.has_blend() {
            let b = self.config.blend_channels;
            shapes.push(("joint.blend.weight".into(), vec![b, e, 3, 3]));
            shapes.push(("joint.blend.bias".into(), vec![b]));
            c = b;
        }
        shapes.push(("joint.classifier.weight".into(), vec![2, c, 1, 1]));
        shapes.push(("joint.classifier.bias".into(), vec![2]));
        shapes
    }

    /// He-normal weights, zero biases, drawn from a seeded stream.
    pub fn init_params(&self, seed: u64) -> EgoNetParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = EgoNetParams::new();
        for (name, shape) in self.param_shapes() {
            let t = if name.ends_with(".weight") {
                let fan_in: usize = shape[1..].iter().product();
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("finite std");
                Tensor::from_fn(shape, |_| normal.sample(&mut rng))
            } else {
                Tensor::zeros(shape)
            };
            params.insert(name, t);
        }
        params
    }

    /// Registers every parameter on the tape after checking its shape.
    pub fn register(&self, tape: &mut Tape, params: &EgoNetParams) -> Result<ParamVars> {
        let mut vars = ParamVars::new();
        for (name, shape) in self.param_shapes() {
            let t = params
                .get(&name)
                .ok_or_else(|| Error::invalid("parameters", format!("missing tensor {name:?}")))?;
            if t.shape() != shape.as_slice() {
                return Err(Error::invalid(
                    "parameters",
                    format!("{name} has shape {:?}, expected {shape:?}", t.shape()),
                ));
            }
            vars.insert(name, tape.param(t.clone()));
        }
        Ok(vars)
    }

    /// Conv/relu/pool stack of one pathway; output is `B×F×(H/8)×(W/8)`.
    pub fn pathway_forward(&self, tape: &mut Tape, vars: &ParamVars, prefix: &str, input: Var) -> Result<Var> {
        let layers = match prefix {
            "dhg" => &self.config.dhg_layers,
            _ => &self.config.rgb_layers,
        };
        let (_, c, h, w) = tape.value(input).dims4("pathway input")?;
        if c != self.pathway_input_channels() || h % FEATURE_STRIDE != 0 || w % FEATURE_STRIDE != 0 {
            return Err(Error::invalid(
                "pathway input",
                format!(
                    "expected {} channels with sides divisible by {FEATURE_STRIDE}, got {:?}",
                    self.pathway_input_channels(),
                    tape.value(input).shape()
                ),
            ));
        }
        let mut x = input;
        for (i, layer) in layers.iter().enumerate() {
            x = match *layer {
                Layer::Conv {
                    kernel,
                    stride,
                    dilation,
                    ..
                } => {
                    let w = param(vars, &format!("{prefix}.conv{i}.weight"))?;
                    let b = param(vars, &format!("{prefix}.conv{i}.bias"))?;
                    let spec = Conv2dSpec {
                        stride,
                        ..Conv2dSpec::same(kernel, dilation)
                    };
                    tape.conv2d(x, w, b, spec)?
                }
                Layer::Relu => tape.relu(x)?,
                Layer::Pool { size } => tape.maxpool2d(x, PoolSpec::new(size, size, 0))?,
            };
        }
        Ok(x)
    }

    /// Joint pathway over already computed pathway features. `coords` is used
    /// only by variants that embed coordinates; passing zero grids there
    /// removes positional information without changing the topology.
    pub fn joint_forward<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        vars: &ParamVars,
        features: &[Var],
        coords: &CoordGrids,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        let first = features
            .first()
            .ok_or_else(|| Error::invalid("joint input", "no pathway features"))?;
        let (batch, _, h, w) = tape.value(*first).dims4("joint input")?;
        for f in features {
            let (_, _, fh, fw) = tape.value(*f).dims4("joint input")?;
            if (fh, fw) != coords.size() {
                return Err(Error::invalid(
                    "joint input",
                    format!("features are {fh}x{fw}, coordinate grid is {:?}", coords.size()),
                ));
            }
        }
        let mut inputs = features.to_vec();
        if self.variant.joint_coords() {
            inputs.push(tape.constant(coords.to_tensor(batch)));
        }
        let joined = if inputs.len() == 1 {
            inputs[0]
        } else {
            tape.concat_channels(&inputs)?
        };
        debug_assert_eq!(tape.value(joined).shape(), [batch, self.joint_input_channels(), h, w]);

        let same3 = Conv2dSpec::same(3, 1);
        let rate = self.dropout_rate;
        let embed = tape.conv2d(
            joined,
            param(vars, "joint.embed.weight")?,
            param(vars, "joint.embed.bias")?,
            same3,
        )?;
        let mut x = tape.relu(embed)?;
        x = tape.dropout(x, rate, mode, rng)?;
        if self.has_blend() {
            let blend = tape.conv2d(
                x,
                param(vars, "joint.blend.weight")?,
                param(vars, "joint.blend.bias")?,
                same3,
            )?;
            x = tape.relu(blend)?;
            x = tape.dropout(x, rate, mode, rng)?;
        }
        Ok(tape.conv2d(
            x,
            param(vars, "joint.classifier.weight")?,
            param(vars, "joint.classifier.bias")?,
            Conv2dSpec::default(),
        )?)
    }

    /// Two-class logits at feature resolution, `B×2×(H/8)×(W/8)`.
    pub fn logits<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        vars: &ParamVars,
        rgb: Var,
        dhg: Var,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        let (rs, ds) = (tape.value(rgb).shape().to_vec(), tape.value(dhg).shape().to_vec());
        let expected = [self.config.input_height, self.config.input_width];
        if rs.len() != 4 || rs != ds || rs[1] != 3 || rs[2..] != expected {
            return Err(Error::invalid(
                "network input",
                format!("rgb {rs:?} and dhg {ds:?} must both be Bx3x{}x{}", expected[0], expected[1]),
            ));
        }
        let features = match self.variant {
            Variant::SingleStream => {
                let coords = tape.constant(self.input_coords.to_tensor(rs[0]));
                let stacked = tape.concat_channels(&[rgb, dhg, coords])?;
                vec![self.pathway_forward(tape, vars, "stream", stacked)?]
            }
            _ => vec![
                self.pathway_forward(tape, vars, "rgb", rgb)?,
                self.pathway_forward(tape, vars, "dhg", dhg)?,
            ],
        };
        self.joint_forward(tape, vars, &features, &self.coords, mode, rng)
    }

    /// Logits upsampled back to input resolution.
    pub fn full_logits<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        vars: &ParamVars,
        rgb: Var,
        dhg: Var,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        let logits = self.logits(tape, vars, rgb, dhg, mode, rng)?;
        Ok(tape.upsample_bilinear(logits, FEATURE_STRIDE)?)
    }

    /// Mean per-pixel softmax loss against `labels` (`B×H×W` of 0/1).
    #[allow(clippy::too_many_arguments)]
    pub fn loss<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        vars: &ParamVars,
        rgb: &Tensor,
        dhg: &Tensor,
        labels: &Tensor,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Var, Tensor)> {
        let rgb = tape.constant(rgb.clone());
        let dhg = tape.constant(dhg.clone());
        let logits = self.full_logits(tape, vars, rgb, dhg, mode, rng)?;
        Ok(tape.softmax_ce(logits, labels)?)
    }

    /// Inference-mode class probabilities, `B×2×H×W`.
    pub fn probabilities(&self, params: &EgoNetParams, rgb: &Tensor, dhg: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, params)?;
        let rgb = tape.constant(rgb.clone());
        let dhg = tape.constant(dhg.clone());
        // inference never draws from the stream
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let logits = self.full_logits(&mut tape, &vars, rgb, dhg, Mode::Inference, &mut rng)?;
        let (b, _, h, w) = tape.value(logits).dims4("logits")?;
        let (_, probs) = ops::softmax_ce(tape.value(logits), &Tensor::zeros([b, h, w]))?;
        Ok(probs)
    }

    /// Action-object probability map per batch item.
    pub fn forward(&self, params: &EgoNetParams, rgb: &Tensor, dhg: &Tensor) -> Result<Vec<ProbabilityMap>> {
        let probs = self.probabilities(params, rgb, dhg)?;
        let (b, _, h, w) = probs.dims4("probabilities")?;
        let plane = h * w;
        (0..b)
            .map(|bi| {
                let start = (bi * 2 + 1) * plane;
                Plane::new(w, h, probs.data()[start..start + plane].to_vec())
            })
            .collect()
    }
}
