//! External LaTeX route: one subprocess per span, bounded by a timeout.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use image::{Rgb, RgbImage};
use thiserror::Error;

use super::{RenderConfig, RenderedCarrier, Route};

/// Environment variable that supplies the command template.
pub const LATEX_CMD_ENV: &str = "LOMO_LATEX_CMD";

#[derive(Debug, Error)]
pub enum LatexError {
    #[error("renderer unavailable: no LaTeX command template configured")]
    Unavailable,
    #[error("renderer i/o: {0}")]
    Io(#[from] io::Error),
    #[error("renderer exited with status {code:?}: {stderr}")]
    NonZeroExit { code: Option<i32>, stderr: String },
    #[error("renderer timed out after {0:?}")]
    Timeout(Duration),
    #[error("renderer produced no output at {}", .0.display())]
    MissingOutput(PathBuf),
    #[error("renderer output is not a decodable image: {0}")]
    Undecodable(String),
}

/// Counting semaphore bounding concurrent renderer processes.
#[derive(Debug)]
pub struct ProcessGate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl ProcessGate {
    pub fn new(permits: usize) -> Self {
        Self {
            free: Mutex::new(permits.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GatePermit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        GatePermit { gate: self }
    }
}

struct GatePermit<'a> {
    gate: &'a ProcessGate,
}

impl Drop for GatePermit<'_> {
    fn drop(&mut self) {
        let mut free = self.gate.free.lock().unwrap_or_else(|e| e.into_inner());
        *free += 1;
        self.gate.cv.notify_one();
    }
}

/// Standalone document wrapped around a span. Body text is set at
/// `font_size`/`line_height` and math at `math_font_size`.
pub fn latex_document(span: &str, config: &RenderConfig) -> String {
    let text = config.font_size.round() as u32;
    let lead = config.line_height.round() as u32;
    let math = config.math_font_size.round() as u32;
    let script = (config.math_font_size * 0.7).round() as u32;
    let scriptscript = (config.math_font_size * 0.5).round() as u32;
    format!(
        "\\documentclass[border={pad}pt,varwidth={width}pt]{{standalone}}\n\
         \\usepackage{{amsmath,amssymb}}\n\
         \\usepackage{{lmodern}}\n\
         \\DeclareMathSizes{{{text}}}{{{math}}}{{{script}}}{{{scriptscript}}}\n\
         \\begin{{document}}\n\
         \\fontsize{{{text}}}{{{lead}}}\\selectfont\n\
         {span}\n\
         \\end{{document}}\n",
        pad = config.trim_padding,
        width = config.max_line_width,
    )
}

fn shell_quote(path: &Path) -> String {
    let s = path.to_string_lossy();
    format!("'{}'", s.replace('\'', r"'\''"))
}

/// Fills the template placeholders `{input_tex}`, `{input_txt}`,
/// `{output_png}`, `{workdir}`, `{font_size}` and `{math_font_size}`.
pub fn expand_template(template: &str, workdir: &Path, config: &RenderConfig) -> String {
    template
        .replace("{input_tex}", &shell_quote(&workdir.join("span.tex")))
        .replace("{input_txt}", &shell_quote(&workdir.join("span.txt")))
        .replace("{output_png}", &shell_quote(&workdir.join("span.png")))
        .replace("{workdir}", &shell_quote(workdir))
        .replace("{font_size}", &config.font_size.to_string())
        .replace("{math_font_size}", &config.math_font_size.to_string())
}

/// Renders `span` through the configured external command.
pub fn render_latex(span: &str, config: &RenderConfig) -> Result<RenderedCarrier, LatexError> {
    render_latex_gated(span, config, None)
}

pub fn render_latex_gated(
    span: &str,
    config: &RenderConfig,
    gate: Option<&ProcessGate>,
) -> Result<RenderedCarrier, LatexError> {
    let template = config
        .latex_command_template
        .as_deref()
        .filter(|t| !t.trim().is_empty())
        .ok_or(LatexError::Unavailable)?;
    let workdir = tempfile::Builder::new().prefix("lomo-latex-").tempdir()?;
    let dir = workdir.path();
    fs::write(dir.join("span.tex"), latex_document(span, config))?;
    fs::write(dir.join("span.txt"), span)?;
    let command = expand_template(template, dir, config);

    let _permit = gate.map(ProcessGate::acquire);
    run_with_timeout(&command, dir, config.latex_timeout())?;

    let output = dir.join("span.png");
    if !output.is_file() {
        return Err(LatexError::MissingOutput(output));
    }
    let decoded = image::open(&output).map_err(|e| LatexError::Undecodable(e.to_string()))?;
    if decoded.width() == 0 || decoded.height() == 0 {
        return Err(LatexError::Undecodable("empty image".into()));
    }
    Ok(RenderedCarrier::new(flatten_on_white(&decoded.to_rgba8()), Route::Latex, span))
}

fn flatten_on_white(rgba: &image::RgbaImage) -> RgbImage {
    RgbImage::from_fn(rgba.width(), rgba.height(), |x, y| {
        let p = rgba.get_pixel(x, y).0;
        let a = u32::from(p[3]);
        let blend = |c: u8| ((u32::from(c) * a + 255 * (255 - a) + 127) / 255) as u8;
        Rgb([blend(p[0]), blend(p[1]), blend(p[2])])
    })
}

fn run_with_timeout(command: &str, workdir: &Path, timeout: Duration) -> Result<(), LatexError> {
    let stderr_path = workdir.join("stderr.log");
    let stderr_file = fs::File::create(&stderr_path)?;
    let mut cmd = Command::new("sh");
    cmd.arg("-c")
        .arg(command)
        .current_dir(workdir)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::from(stderr_file));
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn()?;
    let started = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if started.elapsed() >= timeout {
            kill_tree(&mut child);
            return Err(LatexError::Timeout(timeout));
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    if status.success() {
        return Ok(());
    }
    let stderr = fs::read_to_string(&stderr_path).unwrap_or_default();
    let tail: String = stderr
        .chars()
        .rev()
        .take(2000)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    Err(LatexError::NonZeroExit {
        code: status.code(),
        stderr: tail.trim().to_string(),
    })
}

fn kill_tree(child: &mut std::process::Child) {
    #[cfg(unix)]
    {
        // The child leads its own process group; take down everything in it.
        let pgid = child.id() as libc::pid_t;
        unsafe {
            libc::kill(-pgid, libc::SIGKILL);
        }
    }
    let _ = child.kill();
    let _ = child.wait();
}
