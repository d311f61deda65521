//! JSON emission with fixed-width float formatting.
//!
//! Artifacts written by the CLI must be byte-identical across reruns, so
//! every float is rendered with exactly nine significant digits in
//! scientific notation (`{:.8e}`, e.g. `5.00000000e-1`) instead of the
//! shortest round-trip form. Integers and strings are unchanged.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, Serializer};

struct NineDigitFormatter;

impl Formatter for NineDigitFormatter {
    // Only ever called for finite values; serde_json turns non-finite
    // floats into null before reaching the formatter.
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.8e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, value as f64)
    }

    // Everything else keeps the compact default behavior.
    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        CompactFormatter.begin_array_value(writer, first)
    }
}

/// Serializes a value as compact JSON with nine-significant-digit floats
/// and a trailing newline.
pub fn to_string<T: Serialize>(value: &T) -> crate::Result<String> {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, NineDigitFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| crate::Error::Format(format!("JSON serialization failed: {e}")))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| crate::Error::Format(format!("non-UTF-8 JSON: {e}")))
}
