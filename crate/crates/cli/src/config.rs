//! Configuration layering: defaults, then the config file, then environment
//! variables, then command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use lomo_core::pipeline::PipelineConfig;
use lomo_core::render::{RenderConfig, LATEX_CMD_ENV};

pub const WORKERS_ENV: &str = "LOMO_WORKERS";

/// Renderer flags shared by `curate` and `eval-render`.
#[derive(Debug, Default, Args)]
pub struct RenderArgs {
    /// Body text size in pixels per em
    #[arg(long)]
    pub font_size: Option<f32>,
    /// Line advance in pixels
    #[arg(long)]
    pub line_height: Option<f32>,
    /// Math size for the LaTeX route
    #[arg(long)]
    pub math_font_size: Option<f32>,
    /// Wrap width of the text area in pixels
    #[arg(long)]
    pub max_line_width: Option<u32>,
    /// Maximum image area in pixels
    #[arg(long)]
    pub pixel_cap: Option<u64>,
    /// LaTeX command template (see README for placeholders)
    #[arg(long)]
    pub latex_cmd: Option<String>,
    /// Seconds before a LaTeX subprocess is killed
    #[arg(long)]
    pub latex_timeout: Option<f64>,
}

impl RenderArgs {
    pub fn apply(&self, cfg: &mut RenderConfig) {
        if let Some(v) = self.font_size {
            cfg.font_size = v;
        }
        if let Some(v) = self.line_height {
            cfg.line_height = v;
        }
        if let Some(v) = self.math_font_size {
            cfg.math_font_size = v;
        }
        if let Some(v) = self.max_line_width {
            cfg.max_line_width = v;
        }
        if let Some(v) = self.pixel_cap {
            cfg.pixel_cap = v;
        }
        if let Some(v) = &self.latex_cmd {
            cfg.latex_command_template = Some(v.clone());
        }
        if let Some(v) = self.latex_timeout {
            cfg.latex_timeout_secs = v;
        }
    }
}

/// Reads the optional TOML config file and applies environment overrides.
pub fn load(path: Option<&Path>) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => PipelineConfig::default(),
    };
    apply_env(&mut cfg, |k| std::env::var(k).ok())?;
    Ok(cfg)
}

fn apply_env(cfg: &mut PipelineConfig, var: impl Fn(&str) -> Option<String>) -> Result<()> {
    if let Some(cmd) = var(LATEX_CMD_ENV).filter(|c| !c.trim().is_empty()) {
        cfg.render.latex_command_template = Some(cmd);
    }
    if let Some(w) = var(WORKERS_ENV).filter(|w| !w.trim().is_empty()) {
        match w.trim().parse::<usize>() {
            Ok(n) if n > 0 => cfg.workers = n,
            _ => bail!("{WORKERS_ENV}={w:?} is not a positive integer"),
        }
    }
    Ok(())
}
