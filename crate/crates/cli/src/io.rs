//! File loading and result emission.

use std::fs;
use std::path::Path;

use formctl_core::{Configuration, Digraph, Error, GraphSchedule, Result};

use crate::{Format, OutputArgs, ScheduleArgs};

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_graph(path: &Path) -> Result<Digraph> {
    Digraph::parse_text(&read(path)?).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// JSON by default, CSV when the extension says so.
pub fn load_config(path: &Path) -> Result<Configuration> {
    let text = read(path)?;
    let parsed = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        Configuration::from_csv(&text)
    } else {
        Configuration::from_json(&text)
    };
    parsed.map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn load_schedule(args: &ScheduleArgs) -> Result<GraphSchedule> {
    match (&args.graph, &args.schedule) {
        (Some(g), _) => GraphSchedule::constant(load_graph(g)?, args.horizon),
        (None, Some(s)) => GraphSchedule::from_json(&read(s)?, args.horizon, s.parent()),
        (None, None) => Err(Error::InvalidArgument(
            "either --graph or --schedule is required".into(),
        )),
    }
}

/// Result of a command in every format it supports.
pub struct Report {
    pub text: String,
    pub json: Option<String>,
    pub csv: Option<String>,
    /// Plain-text artifact, such as a graph in edge-list form.
    pub artifact: Option<String>,
    pub default_format: Format,
}

impl Report {
    pub fn new(text: String, default_format: Format) -> Self {
        Report {
            text,
            json: None,
            csv: None,
            artifact: None,
            default_format,
        }
    }

    fn render(&self, format: Format) -> Result<String> {
        let body = match format {
            Format::Json => self.json.clone(),
            Format::Csv => self.csv.clone(),
            Format::Text => Some(self.artifact.clone().unwrap_or_else(|| self.text.clone())),
        };
        body.ok_or_else(|| {
            Error::Parse(format!(
                "{} output is not available for this command",
                name(format)
            ))
        })
    }

    /// Text report to stdout; the machine-readable form goes to `--out`, or
    /// replaces the text report when only `--format` is given.
    pub fn emit(&self, output: &OutputArgs) -> Result<()> {
        match (&output.out, output.format) {
            (Some(path), format) => {
                let body = self.render(format.unwrap_or(self.default_format))?;
                fs::write(path, ensure_newline(body))
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                print!("{}", ensure_newline(self.text.clone()));
            }
            (None, Some(format)) => print!("{}", ensure_newline(self.render(format)?)),
            (None, None) => print!("{}", ensure_newline(self.text.clone())),
        }
        Ok(())
    }
}

fn ensure_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn name(format: Format) -> &'static str {
    match format {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Text => "text",
    }
}
