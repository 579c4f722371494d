//! Run configuration: a TOML file in laboratory units (Hz, um, K, s),
//! `--set section.key=value` overrides, named presets, and conversion to
//! SI once at the boundary.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use spinflip_core::atomics::SpinVector;
use spinflip_core::green_kernel::{KernelMode, SeparationAxis};
use spinflip_core::layered_media::{Layer, LayerStack, PermittivityModel, Thickness};
use spinflip_core::numerics::ToleranceSpec;
use spinflip_core::rates_coherence::Engine;

use crate::error::{CliError, Result};

const UM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub atom: AtomConfig,
    pub stack: StackConfig,
    pub geometry: GeometryConfig,
    pub numerics: NumericsConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub frequency_hz: f64,
    pub temperature_k: f64,
    /// "rb87" or three [re, im] pairs <i|S_q|f> in the surface frame.
    pub spin_elements: SpinSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpinSpec {
    Named(String),
    Explicit([[f64; 2]; 3]),
}

/// Either a named preset or an explicit list of layers below the vacuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<LayerConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    /// "vacuum", "constant" or "drude".
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_im: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skin_depth_um: Option<f64>,
    /// Omitted for the semi-infinite bottom layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness_um: Option<f64>,
}

/// Sweep axes. `h_um` and `delta_um` override the thickness and skin depth
/// of the top layer; empty lists leave the stack as configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub d_um: Vec<f64>,
    #[serde(default)]
    pub l_um: Vec<f64>,
    #[serde(default)]
    pub h_um: Vec<f64>,
    #[serde(default)]
    pub delta_um: Vec<f64>,
    #[serde(default)]
    pub t_s: Vec<f64>,
    /// "x" or "y".
    #[serde(default = "default_axis")]
    pub axis: String,
}

fn default_axis() -> String {
    "x".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    pub rel_tol: f64,
    /// "quasi-static" or "exact".
    pub mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

/// Stack presets: name, skin depth in um, and a short description.
pub const STACK_PRESETS: &[(&str, Option<f64>, &str)] = &[
    ("aluminium", Some(110.0), "aluminium half-space at room temperature, delta = 110 um at 560 kHz"),
    ("niobium-9K", Some(15.0), "pure niobium just above Tc, delta = 15 um"),
    ("vacuum", None, "no surface at all"),
];

pub const TEMPLATES: &[&str] = &["fig1", "fig2", "rates", "small-l"];

impl Default for RunConfig {
    fn default() -> Self {
        Self::template("fig1").expect("built-in template")
    }
}

fn drude_layer(delta_um: f64, thickness_um: Option<f64>) -> LayerConfig {
    LayerConfig {
        model: "drude".into(),
        eps_re: None,
        eps_im: None,
        skin_depth_um: Some(delta_um),
        thickness_um,
    }
}

fn dielectric_layer(eps_re: f64) -> LayerConfig {
    LayerConfig {
        model: "constant".into(),
        eps_re: Some(eps_re),
        eps_im: Some(0.0),
        skin_depth_um: None,
        thickness_um: None,
    }
}

impl RunConfig {
    /// Built-in starting points: the coherence curves at three distances,
    /// the half-coherence length against film thickness, a rate table, and
    /// a small-separation check.
    pub fn template(name: &str) -> Result<Self> {
        let base = RunConfig {
            atom: AtomConfig {
                frequency_hz: 560e3,
                temperature_k: 0.0,
                spin_elements: SpinSpec::Named("rb87".into()),
            },
            stack: StackConfig {
                preset: Some("aluminium".into()),
                layers: Vec::new(),
            },
            geometry: GeometryConfig {
                d_um: vec![20.0, 10.0, 5.0],
                l_um: (0..=50).map(|k| 2.0 * k as f64).collect(),
                h_um: Vec::new(),
                delta_um: Vec::new(),
                t_s: Vec::new(),
                axis: default_axis(),
            },
            numerics: NumericsConfig {
                rel_tol: 1e-8,
                mode: "quasi-static".into(),
            },
            output: OutputConfig { dir: ".".into() },
        };
        match name {
            "fig1" => Ok(base),
            "fig2" => Ok(RunConfig {
                stack: StackConfig {
                    preset: None,
                    layers: vec![drude_layer(100.0, Some(1.0)), dielectric_layer(3.9)],
                },
                geometry: GeometryConfig {
                    d_um: vec![50.0],
                    l_um: Vec::new(),
                    h_um: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0],
                    delta_um: vec![100.0, 50.0, 10.0],
                    ..base.geometry.clone()
                },
                ..base
            }),
            "rates" => Ok(RunConfig {
                geometry: GeometryConfig {
                    d_um: vec![2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
                    l_um: Vec::new(),
                    ..base.geometry.clone()
                },
                atom: AtomConfig {
                    temperature_k: 300.0,
                    ..base.atom.clone()
                },
                ..base
            }),
            "small-l" => Ok(RunConfig {
                geometry: GeometryConfig {
                    d_um: vec![10.0],
                    l_um: vec![0.0, 0.25, 0.5, 1.0],
                    t_s: vec![0.0, 1.0, 10.0],
                    ..base.geometry.clone()
                },
                ..base
            }),
            other => Err(CliError::config(format!(
                "unknown template '{other}' (available: {})",
                TEMPLATES.join(", ")
            ))),
        }
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Value =
            toml::from_str(text).map_err(|e| CliError::config(format!("cannot parse configuration: {e}")))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let config: RunConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(format!("invalid configuration: {}", e.message())))?;
        config.validate()?;
        Ok(config)
    }

    /// Load `path`, or start from the default template when none is given.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.display().to_string(),
                source,
            })?,
            None => RunConfig::default().to_toml(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Template text written by `init`, with a units reminder on top.
    pub fn to_template_text(&self) -> String {
        format!(
            "# spinflip run configuration\n\
             # units: frequency Hz, lengths um, temperature K, times s\n\
             # stack presets: {}\n\n{}",
            STACK_PRESETS.iter().map(|p| p.0).collect::<Vec<_>>().join(", "),
            self.to_toml()
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.atom.frequency_hz > 0.0) || !self.atom.frequency_hz.is_finite() {
            return bad(format!("atom.frequency_hz must be > 0 (got {})", self.atom.frequency_hz));
        }
        if !(self.atom.temperature_k >= 0.0) || !self.atom.temperature_k.is_finite() {
            return bad(format!("atom.temperature_k must be >= 0 (got {})", self.atom.temperature_k));
        }
        let g = &self.geometry;
        for (name, list, allow_zero) in [
            ("geometry.d_um", &g.d_um, false),
            ("geometry.l_um", &g.l_um, true),
            ("geometry.h_um", &g.h_um, false),
            ("geometry.delta_um", &g.delta_um, false),
            ("geometry.t_s", &g.t_s, true),
        ] {
            for &v in list.iter() {
                let ok = v.is_finite() && if allow_zero { v >= 0.0 } else { v > 0.0 };
                if !ok {
                    return bad(format!(
                        "{name} entries must be {} (got {v})",
                        if allow_zero { ">= 0" } else { "> 0" }
                    ));
                }
            }
        }
        if g.d_um.is_empty() {
            return bad("geometry.d_um must not be empty".into());
        }
        if !(self.numerics.rel_tol > 0.0) || self.numerics.rel_tol >= 1.0 {
            return bad(format!("numerics.rel_tol must lie in (0, 1) (got {})", self.numerics.rel_tol));
        }
        self.axis()?;
        self.mode()?;
        self.spin()?;
        self.base_stack()?;
        if !g.h_um.is_empty() || !g.delta_um.is_empty() {
            self.stack_for(g.h_um.first().map(|h| h * UM), g.delta_um.first().map(|d| d * UM))?;
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.atom.frequency_hz
    }

    pub fn axis(&self) -> Result<SeparationAxis> {
        match self.geometry.axis.as_str() {
            "x" => Ok(SeparationAxis::X),
            "y" => Ok(SeparationAxis::Y),
            other => Err(CliError::config(format!("geometry.axis must be \"x\" or \"y\" (got \"{other}\")"))),
        }
    }

    pub fn mode(&self) -> Result<KernelMode> {
        match self.numerics.mode.as_str() {
            "quasi-static" => Ok(KernelMode::QuasiStatic),
            "exact" => Ok(KernelMode::Exact),
            other => Err(CliError::config(format!(
                "numerics.mode must be \"quasi-static\" or \"exact\" (got \"{other}\")"
            ))),
        }
    }

    pub fn spin(&self) -> Result<SpinVector> {
        let v = match &self.atom.spin_elements {
            SpinSpec::Named(name) if name == "rb87" => SpinVector::rb87_trapped(),
            SpinSpec::Named(name) => {
                return Err(CliError::config(format!(
                    "atom.spin_elements: unknown name \"{name}\" (use \"rb87\" or three [re, im] pairs)"
                )))
            }
            SpinSpec::Explicit(pairs) => SpinVector(pairs.map(|[re, im]| Complex64::new(re, im))),
        };
        if v.0.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(CliError::config("atom.spin_elements must be finite"));
        }
        Ok(v)
    }

    pub fn engine(&self) -> Result<Engine> {
        Ok(Engine {
            tol: ToleranceSpec::relative(self.numerics.rel_tol),
            mode: self.mode()?,
            axis: self.axis()?,
            ..Engine::default()
        })
    }

    /// The stack as configured, before any sweep overrides.
    pub fn base_stack(&self) -> Result<LayerStack> {
        match (&self.stack.preset, self.stack.layers.is_empty()) {
            (Some(_), false) => Err(CliError::config("stack: give either a preset or layers, not both")),
            (None, true) => Err(CliError::config("stack: give a preset or at least one layer")),
            (Some(name), true) => preset_stack(name),
            (None, false) => {
                let layers = self
                    .stack
                    .layers
                    .iter()
                    .enumerate()
                    .map(|(i, l)| layer_from_config(i, l))
                    .collect::<Result<Vec<_>>>()?;
                LayerStack::new(layers).map_err(|e| CliError::config(format!("stack: {e}")))
            }
        }
    }

    /// The stack with the top layer's thickness and/or skin depth replaced
    /// (both in metres).
    pub fn stack_for(&self, h: Option<f64>, delta: Option<f64>) -> Result<LayerStack> {
        let base = self.base_stack()?;
        if h.is_none() && delta.is_none() {
            return Ok(base);
        }
        let mut layers = base.layers().to_vec();
        let top = &mut layers[0];
        if let Some(h) = h {
            if top.thickness == Thickness::SemiInfinite {
                return Err(CliError::config(
                    "geometry.h_um sweeps the top layer's thickness, but the top layer is semi-infinite; \
                     add a substrate layer below it",
                ));
            }
            top.thickness = Thickness::Finite(h);
        }
        if let Some(delta) = delta {
            if !matches!(top.model, PermittivityModel::Drude { .. }) {
                return Err(CliError::config(
                    "geometry.delta_um sweeps the top layer's skin depth, but the top layer is not a drude layer",
                ));
            }
            top.model = PermittivityModel::drude(delta).map_err(|e| CliError::config(e.to_string()))?;
        }
        LayerStack::new(layers).map_err(|e| CliError::config(format!("stack: {e}")))
    }
}

fn preset_stack(name: &str) -> Result<LayerStack> {
    match STACK_PRESETS.iter().find(|p| p.0 == name) {
        Some((_, Some(delta_um), _)) => Ok(LayerStack::half_space(
            PermittivityModel::drude(delta_um * UM).expect("preset skin depth is positive"),
        )),
        Some((_, None, _)) => Ok(LayerStack::vacuum()),
        None => Err(CliError::config(format!(
            "unknown stack preset \"{name}\" (available: {})",
            STACK_PRESETS.iter().map(|p| p.0).collect::<Vec<_>>().join(", ")
        ))),
    }
}

fn layer_from_config(index: usize, l: &LayerConfig) -> Result<Layer> {
    let ctx = |msg: String| CliError::config(format!("stack.layers[{index}]: {msg}"));
    let model = match l.model.as_str() {
        "vacuum" => PermittivityModel::Vacuum,
        "constant" => {
            let re = l.eps_re.ok_or_else(|| ctx("constant model needs eps_re".into()))?;
            let eps = Complex64::new(re, l.eps_im.unwrap_or(0.0));
            PermittivityModel::constant(eps).map_err(|e| ctx(e.to_string()))?
        }
        "drude" => {
            let delta = l.skin_depth_um.ok_or_else(|| ctx("drude model needs skin_depth_um".into()))?;
            PermittivityModel::drude(delta * UM).map_err(|e| ctx(e.to_string()))?
        }
        other => return Err(ctx(format!("unknown model \"{other}\" (vacuum, constant, drude)"))),
    };
    Ok(match l.thickness_um {
        Some(h) => Layer::film(model, h * UM),
        None => Layer::substrate(model),
    })
}

/// Parse a `--set` value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    #[derive(Deserialize)]
    struct Wrapper {
        v: toml::Value,
    }
    match toml::from_str::<Wrapper>(&format!("v = {raw}")) {
        Ok(w) => w.v,
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Apply `section.key=value` (array elements addressed by index, e.g.
/// `stack.layers.0.skin_depth_um=50`).
pub fn apply_override(root: &mut toml::Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("--set expects KEY=VALUE (got \"{assignment}\")")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::config(format!("--set: malformed key \"{path}\"")));
    }
    let value = parse_value(raw.trim());
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        node = match node {
            toml::Value::Table(t) => {
                if last {
                    t.insert(key.to_string(), value);
                    return Ok(());
                }
                t.entry(key.to_string())
                    .or_insert_with(|| toml::Value::Table(Default::default()))
            }
            toml::Value::Array(a) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| CliError::config(format!("--set {path}: \"{key}\" is not an array index")))?;
                let len = a.len();
                let slot = a
                    .get_mut(idx)
                    .ok_or_else(|| CliError::config(format!("--set {path}: index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::config(format!("--set {path}: \"{key}\" is not a section"))),
        };
    }
    unreachable!("loop returns at the last key")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_round_trip() {
        for name in TEMPLATES {
            let c = RunConfig::template(name).unwrap();
            let back = RunConfig::from_toml_str(&c.to_template_text(), &[]).unwrap();
            assert_eq!(back, c, "{name}");
        }
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = RunConfig::load(
            None,
            &[
                "atom.temperature_k=4.2".into(),
                "geometry.d_um=[1.5, 3]".into(),
                "stack.preset=niobium-9K".into(),
                "geometry.axis=y".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.atom.temperature_k, 4.2);
        assert_eq!(c.geometry.d_um, vec![1.5, 3.0]);
        assert_eq!(c.stack.preset.as_deref(), Some("niobium-9K"));
        assert_eq!(c.axis().unwrap(), SeparationAxis::Y);
    }

    #[test]
    fn array_index_overrides() {
        let text = RunConfig::template("fig2").unwrap().to_toml();
        let c = RunConfig::from_toml_str(&text, &["stack.layers.1.eps_re=11.7".into()]).unwrap();
        assert_eq!(c.stack.layers[1].eps_re, Some(11.7));
        assert!(RunConfig::from_toml_str(&text, &["stack.layers.7.eps_re=1".into()]).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            "atom.frequency_hz=0",
            "atom.temperature_k=-1",
            "geometry.d_um=[]",
            "geometry.d_um=[5, -1]",
            "geometry.axis=z",
            "numerics.mode=fast",
            "numerics.rel_tol=0",
            "stack.preset=copper",
            "atom.spin_elements=cs133",
            "atom.colour=3",
            "geometry.h_um=[1]",
            "nonsense",
        ] {
            let r = RunConfig::load(None, &[bad.into()]);
            assert!(matches!(r, Err(CliError::Config(_))), "{bad}: {r:?}");
        }
    }

    #[test]
    fn preset_and_layers_are_exclusive() {
        let text = RunConfig::template("fig2").unwrap().to_toml();
        assert!(RunConfig::from_toml_str(&text, &["stack.preset=aluminium".into()]).is_err());
    }

    #[test]
    fn lengths_become_metres() {
        let c = RunConfig::template("fig2").unwrap();
        let s = c.stack_for(Some(5.0 * UM), Some(10.0 * UM)).unwrap();
        assert_eq!(s.layers()[0].thickness, Thickness::Finite(5.0 * UM));
        assert_eq!(s.layers()[0].model, PermittivityModel::Drude { skin_depth: 10.0 * UM });
        assert_eq!(c.omega(), 2.0 * PI * 560e3);
    }

    #[test]
    fn explicit_spin_elements() {
        let c = RunConfig::load(None, &["atom.spin_elements=[[0, 0], [0, 0.5], [0.5, 0]]".into()]).unwrap();
        assert_eq!(c.spin().unwrap().0[1], Complex64::new(0.0, 0.5));
    }
}
