//! JSON serialization with full-precision floats.
//!
//! `serde_json` prints floats with the shortest round-trippable form; for
//! numeric artifacts we instead pin a fixed scientific format with 17
//! significant digits so files are stable, diffable, and lossless.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};

/// A `serde_json` formatter that writes every f64 as `{:.16e}`.
///
/// Note: the upstream serializer replaces NaN/infinite floats with `null`
/// before the formatter runs, so exporters must validate finiteness
/// themselves; [`expect_finite`] is the shared guard for that.
#[derive(Debug, Default, Clone)]
pub struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if !value.is_finite() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("non-finite float {value} cannot be serialized"),
            ));
        }
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize `value` as JSON with full-precision floats.
pub fn to_writer_sci<W: io::Write, T: Serialize>(writer: W, value: &T) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, SciFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(format!("JSON serialization failed: {e}")))
}

/// Serialize `value` to a JSON string with full-precision floats.
pub fn to_string_sci<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    to_writer_sci(&mut buf, value)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(format!("invalid UTF-8 in JSON: {e}")))
}

/// Reject non-finite values before they reach a serializer (which would
/// silently emit `null`).
pub fn expect_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain(format!("{what} is not finite ({value})")))
    }
}
