"""Regenerate src/mtlforge/data/emoji.tsv from the Unicode character names
bundled with the running Python's ``unicodedata``.

Usage: python scripts/build_emoji_table.py [OUTPUT]
"""
import sys
import unicodedata
from pathlib import Path

BLOCKS = [
    (0x1F300, 0x1F5FF),  # misc symbols and pictographs
    (0x1F600, 0x1F64F),  # emoticons
    (0x1F680, 0x1F6FF),  # transport and map
    (0x1F900, 0x1F9FF),  # supplemental symbols and pictographs
    (0x1FA70, 0x1FAFF),
]
# frequent emoji that live outside the pictograph blocks
EXTRA = [0x2600, 0x2601, 0x2614, 0x2615, 0x2639, 0x263A, 0x2640, 0x2642, 0x2648, 0x2660,
         0x2663, 0x2665, 0x2666, 0x267B, 0x26A0, 0x26A1, 0x26BD, 0x26C4, 0x26D4, 0x26EA,
         0x2705, 0x270A, 0x270B, 0x270C, 0x270D, 0x2714, 0x2716, 0x2728, 0x2733, 0x2744,
         0x274C, 0x2753, 0x2757, 0x2763, 0x2764, 0x2795, 0x27A1, 0x2B50, 0x2B55]
# skin-tone modifiers carry no lexical content
SKIP = set(range(0x1F3FB, 0x1F400))


def rows():
    codepoints = [cp for lo, hi in BLOCKS for cp in range(lo, hi + 1)] + EXTRA
    for cp in codepoints:
        if cp in SKIP:
            continue
        name = unicodedata.name(chr(cp), "")
        if not name:
            continue
        yield chr(cp), name.lower().replace("-", " ")


def main(out: Path) -> None:
    lines = [f"{e}\t{phrase}" for e, phrase in rows()]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} entries to {out}")


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "mtlforge" / "data" / "emoji.tsv"
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else default)
