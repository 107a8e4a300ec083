//! Small helpers shared by the SVG and GraphML writers.

/// Comment placed on the second line of every SVG; the only line that may
/// differ between tool versions.
pub(crate) fn version_comment() -> String {
    format!("<!-- {} {} -->", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}
