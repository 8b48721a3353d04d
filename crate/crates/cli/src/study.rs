//! The study-file schema for the `mc` subcommand.
//!
//! The JSON document mirrors the Monte Carlo configuration field for field;
//! unknown keys are an error so typos cannot silently change a study.

use rdd_core::{
    DGPSpec, Bandwidth, ForestConfig, KernelShape, KernelSpec, MCConfig, MethodEntry,
    RDMethodConfig, RidgeLambda, ScorePoint, SplitRule,
    error::{Error, Result},
    presets,
};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DgpRef {
    Preset(String),
    Inline(Box<DGPSpec>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum NumOrWord {
    Num(f64),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodFile {
    #[serde(default)]
    name: Option<String>,
    method: String,
    // Forest knobs.
    #[serde(default)]
    trees: Option<usize>,
    #[serde(default)]
    mtry: Option<usize>,
    #[serde(default)]
    min_node_size: Option<usize>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    honesty_fraction: Option<f64>,
    #[serde(default)]
    c_scale: Option<f64>,
    #[serde(default)]
    split_rule: Option<String>,
    #[serde(default)]
    lambda: Option<NumOrWord>,
    #[serde(default)]
    ci_group_size: Option<usize>,
    // Kernel knobs.
    #[serde(default)]
    kernel: Option<String>,
    #[serde(default)]
    bandwidth: Option<NumOrWord>,
    // Shared.
    #[serde(default)]
    buffer_epsilon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub dgp: DgpRef,
    pub boundary_point: Vec<f64>,
    pub methods: Vec<MethodFile>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_level() -> f64 {
    0.95
}

pub fn parse_kernel_shape(name: &str) -> Result<KernelShape> {
    match name {
        "triangular" => Ok(KernelShape::Triangular),
        "epanechnikov" => Ok(KernelShape::Epanechnikov),
        "uniform" => Ok(KernelShape::Uniform),
        other => Err(Error::Config(format!(
            "unknown kernel '{other}' (triangular|epanechnikov|uniform)"
        ))),
    }
}

pub fn parse_split_rule(name: &str) -> Result<SplitRule> {
    match name {
        "cart" => Ok(SplitRule::Cart),
        "ridge-residual" | "ridge_residual" => Ok(SplitRule::RidgeResidual),
        other => Err(Error::Config(format!(
            "unknown split rule '{other}' (cart|ridge-residual)"
        ))),
    }
}

impl MethodFile {
    fn reject_kernel_fields(&self) -> Result<()> {
        if self.kernel.is_some() || self.bandwidth.is_some() {
            return Err(Error::Config(format!(
                "method '{}' does not accept kernel/bandwidth fields",
                self.method
            )));
        }
        Ok(())
    }

    fn reject_forest_fields(&self) -> Result<()> {
        if self.trees.is_some()
            || self.mtry.is_some()
            || self.min_node_size.is_some()
            || self.alpha.is_some()
            || self.honesty_fraction.is_some()
            || self.c_scale.is_some()
            || self.split_rule.is_some()
            || self.lambda.is_some()
            || self.ci_group_size.is_some()
        {
            return Err(Error::Config(format!(
                "method '{}' does not accept forest fields",
                self.method
            )));
        }
        Ok(())
    }

    fn forest_config(&self, base: ForestConfig) -> Result<ForestConfig> {
        let mut cfg = base;
        if let Some(v) = self.trees {
            cfg.num_trees = v;
        }
        if let Some(v) = self.mtry {
            cfg.mtry = v;
        }
        if let Some(v) = self.min_node_size {
            cfg.min_node_size = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.honesty_fraction {
            cfg.honesty_fraction = v;
        }
        if let Some(v) = self.c_scale {
            cfg.c_scale = v;
        }
        if let Some(rule) = &self.split_rule {
            cfg.split_rule = parse_split_rule(rule)?;
        }
        match &self.lambda {
            Some(NumOrWord::Num(v)) => cfg.ridge_lambda = RidgeLambda::Fixed(*v),
            Some(NumOrWord::Word(w)) if w == "auto" => cfg.ridge_lambda = RidgeLambda::Auto,
            Some(NumOrWord::Word(w)) => {
                return Err(Error::Config(format!("lambda must be a number or \"auto\", got '{w}'")))
            }
            None => {}
        }
        if let Some(v) = self.ci_group_size {
            cfg.ci_group_size = v;
        }
        Ok(cfg)
    }

    fn kernel_spec(&self) -> Result<KernelSpec> {
        let mut spec = KernelSpec::default();
        if let Some(kernel) = &self.kernel {
            spec.shape = parse_kernel_shape(kernel)?;
        }
        match &self.bandwidth {
            Some(NumOrWord::Num(h)) => spec.bandwidth = Bandwidth::Fixed(*h),
            Some(NumOrWord::Word(w)) if w == "rot" => spec.bandwidth = Bandwidth::RuleOfThumb,
            Some(NumOrWord::Word(w)) => {
                return Err(Error::Config(format!(
                    "bandwidth must be a number or \"rot\", got '{w}'"
                )))
            }
            None => {}
        }
        Ok(spec)
    }

    pub fn to_entry(&self, level: f64) -> Result<MethodEntry> {
        let mut config = match self.method.as_str() {
            "rf" => {
                self.reject_kernel_fields()?;
                RDMethodConfig::rf(self.forest_config(ForestConfig::default())?)
            }
            "llf" => {
                self.reject_kernel_fields()?;
                RDMethodConfig::llf(self.forest_config(ForestConfig::llf_default())?)
            }
            "llr" => {
                self.reject_forest_fields()?;
                RDMethodConfig::llr(self.kernel_spec()?)
            }
            other => {
                return Err(Error::Config(format!("unknown method '{other}' (rf|llf|llr)")))
            }
        };
        if let Some(buffer) = self.buffer_epsilon {
            config.buffer_epsilon = buffer;
        }
        config.level = level;
        let name = self.name.clone().unwrap_or_else(|| self.method.clone());
        Ok(MethodEntry::new(name, config))
    }
}

pub fn resolve_dgp(reference: &DgpRef) -> Result<DGPSpec> {
    match reference {
        DgpRef::Preset(name) => Ok(presets::by_name(name)?.spec),
        DgpRef::Inline(spec) => {
            spec.validate()?;
            Ok((**spec).clone())
        }
    }
}

impl StudyFile {
    pub fn into_mc_config(self, record_timing: bool) -> Result<MCConfig> {
        let dgp = resolve_dgp(&self.dgp)?;
        let methods: Vec<MethodEntry> =
            self.methods.iter().map(|m| m.to_entry(self.level)).collect::<Result<_>>()?;
        Ok(MCConfig {
            dgp,
            boundary_point: ScorePoint::new(self.boundary_point)?,
            methods,
            sample_sizes: self.sample_sizes,
            replications: self.replications,
            master_seed: self.seed,
            level: self.level,
            record_timing,
        })
    }
}
