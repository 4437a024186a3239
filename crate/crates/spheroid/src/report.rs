//! Machine-readable output: JSON summaries and CSV columns.
//!
//! Numbers are written with 17 significant digits so every 64-bit float
//! round-trips exactly; CSV uses a header row and `.` as the decimal
//! separator regardless of locale.

use std::io;

use serde::Serialize;

/// 17-significant-digit scientific notation, round-trip exact for `f64`.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize any summary to a JSON string with round-trip-exact floats.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    value
        .serialize(&mut ser)
        .expect("summary types serialize infallibly");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}
