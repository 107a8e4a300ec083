#!/usr/bin/env python3
"""Regenerate crates/core/src/emoji/tables.rs.

Input is a `property_bool.rs` produced by `ucd-generate property-bool --chars`
(for example the copy vendored in the regex-syntax crate). Usage:

    tools/gen_emoji_tables.py path/to/property_bool.rs > crates/core/src/emoji/tables.rs
"""
import re
import sys

WANTED = ["EMOJI", "EMOJI_PRESENTATION", "EMOJI_MODIFIER_BASE"]


def parse_char(tok):
    if tok.startswith("\\u{"):
        return int(tok[3:-1], 16)
    if tok.startswith("\\"):
        return ord({"\\'": "'", "\\\\": "\\", "\\t": "\t", "\\n": "\n", "\\r": "\r"}[tok])
    assert len(tok) == 1, tok
    return ord(tok)


def main():
    src = open(sys.argv[1], encoding="utf-8").read()
    version = re.search(r"Unicode version: ([0-9.]+?)\.?$", src, re.M).group(1)
    out = [
        "// GENERATED CODE DO NOT MANUALLY EDIT",
        "// tools/gen_emoji_tables.py from ucd-generate property-bool output",
        "",
        "/// Unicode version the emoji property ranges below were taken from.",
        f'pub const UNICODE_VERSION: &str = "{version}";',
    ]
    for name in WANTED:
        m = re.search(r"pub const %s: &'static \[\(char, char\)\] = &\[(.*?)\];" % name, src, re.S)
        pairs = re.findall(r"\('((?:\\u\{[0-9a-fA-F]+\}|\\.|[^'\\]))', '((?:\\u\{[0-9a-fA-F]+\}|\\.|[^'\\]))'\)", m.group(1))
        out.append("")
        out.append(f"pub const {name}: &[(u32, u32)] = &[")
        for lo, hi in pairs:
            out.append(f"    (0x{parse_char(lo):05X}, 0x{parse_char(hi):05X}),")
        out.append("];")
    print("\n".join(out))


if __name__ == "__main__":
    main()
