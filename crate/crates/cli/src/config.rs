use std::fs;
use std::path::Path;

use egonet_core::data::{default_scene_specs, SynthSpec};
use egonet_core::model::EgoNetConfig;
use egonet_core::train::{Preset, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::{usage, CliResult};

pub const RUN_RECORD: &str = "run.json";

/// Resolved model and training settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: EgoNetConfig,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    model: Option<EgoNetConfig>,
    train: Option<TrainConfig>,
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Reads the `model`/`train` keys of a run record, ignoring the rest.
fn from_run_record(path: &Path, text: &str) -> CliResult<ConfigFile> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let field = |key: &str| -> CliResult<Option<serde_json::Value>> { Ok(value.get(key).cloned()) };
    let bad = |e: serde_json::Error| usage(format!("{}: {e}", path.display()));
    Ok(ConfigFile {
        model: field("model")?.map(serde_json::from_value).transpose().map_err(bad)?,
        train: field("train")?.map(serde_json::from_value).transpose().map_err(bad)?,
    })
}

/// Combines a config file, preset and seed override. The file's `[train]`
/// table and `--preset` are mutually exclusive; `--seed` always wins.
pub fn resolve_experiment(
    config: Option<&Path>,
    preset: Option<Preset>,
    seed: Option<u64>,
) -> CliResult<ExperimentConfig> {
    let file = match config {
        None => ConfigFile::default(),
        Some(path) => {
            let text = read_text(path)?;
            if is_json(path) {
                from_run_record(path, &text)?
            } else {
                toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
            }
        }
    };
    if file.train.is_some() && preset.is_some() {
        return Err(usage("--preset conflicts with the [train] table of --config"));
    }
    let model = file.model.unwrap_or_default();
    let mut train = file
        .train
        .unwrap_or_else(|| TrainConfig::preset(preset.unwrap_or(Preset::Toy)));
    if let Some(seed) = seed {
        train.seed = seed;
    }
    model.validate().map_err(|e| usage(e.to_string()))?;
    train.validate().map_err(|e| usage(e.to_string()))?;
    Ok(ExperimentConfig { model, train })
}

/// A synth spec from JSON, TOML or the `spec` key of a run record; the
/// built-in four-scene, 60-frame spec when `path` is `None`.
pub fn load_synth_spec(path: Option<&Path>, seed: Option<u64>) -> CliResult<SynthSpec> {
    let Some(path) = path else {
        return Ok(default_scene_specs(seed.unwrap_or(0), 4, 60));
    };
    if seed.is_some() {
        return Err(usage("--seed applies to the built-in spec only; set seeds inside --config"));
    }
    let text = read_text(path)?;
    let bad = |e: &dyn std::fmt::Display| usage(format!("{}: {e}", path.display()));
    let spec: SynthSpec = if is_json(path) {
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
        let inner = value.get("spec").cloned().unwrap_or(value);
        serde_json::from_value(inner).map_err(|e| bad(&e))?
    } else {
        toml::from_str(&text).map_err(|e| bad(&e))?
    };
    for scene in &spec.scenes {
        scene.validate().map_err(|e| bad(&e))?;
    }
    Ok(spec)
}
