//! JSON persistence of control limits.
//!
//! Floats are written with 17 significant digits and parsed with exact
//! rounding, so a write/read cycle reproduces every limit bit for bit.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use driftwatch_core::{ControlLimits, WindowConfig};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsFile {
    format_version: u32,
    alpha: f64,
    w: usize,
    l0: usize,
    limits: Vec<f64>,
    tail_limit: f64,
    estimated_through: usize,
    replications: usize,
    survivor_floor: usize,
    seed: u64,
}

/// Pretty JSON with every float printed as `d.dddddddddddddddde±x`.
struct ExactFloats(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(writer $(, $arg)*)
        })*
    };
}

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    delegate! {
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    }
}

pub fn limits_to_json(limits: &ControlLimits) -> String {
    let cfg = limits.config();
    let doc = LimitsFile {
        format_version: FORMAT_VERSION,
        alpha: limits.alpha(),
        w: cfg.w(),
        l0: cfg.l0(),
        limits: limits.limits().to_vec(),
        tail_limit: limits.tail_limit(),
        estimated_through: limits.estimated_through(),
        replications: limits.replications(),
        survivor_floor: limits.survivor_floor(),
        seed: limits.seed(),
    };
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ExactFloats(PrettyFormatter::new()));
    doc.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// Parses and validates a limits document. `origin` names the source in
/// error messages.
pub fn limits_from_json(text: &str, origin: &Path) -> Result<ControlLimits> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::format(origin, e))?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(v) => {
            return Err(CliError::format(
                origin,
                format!("unsupported format_version {v} (expected {FORMAT_VERSION})"),
            ))
        }
        None => return Err(CliError::format(origin, "missing or non-integer format_version")),
    }
    let doc: LimitsFile = serde_json::from_value(value).map_err(|e| CliError::format(origin, e))?;
    if doc.estimated_through != doc.limits.len() {
        return Err(CliError::format(
            origin,
            format!("estimated_through is {} but {} limits are listed", doc.estimated_through, doc.limits.len()),
        ));
    }
    let cfg = WindowConfig::new(doc.w, doc.l0)?;
    let limits = ControlLimits::from_parts(
        doc.alpha,
        cfg,
        doc.limits,
        doc.tail_limit,
        doc.replications,
        doc.seed,
        doc.survivor_floor,
    )?;
    limits.check_range()?;
    Ok(limits)
}

pub fn write_limits(limits: &ControlLimits, path: &Path) -> Result<()> {
    fs::write(path, limits_to_json(limits)).map_err(|e| CliError::io(path, e))
}

pub fn read_limits(path: &Path) -> Result<ControlLimits> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    limits_from_json(&text, path)
}
