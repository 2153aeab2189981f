"""Minimal text-only PDF writer plus a self-parsing validator.

Output is plain PDF 1.4 with one base-14 Courier font, one uncompressed
content stream per page and a classic xref table. Identical text gives
identical bytes.
"""
from __future__ import annotations

import re
import textwrap
from pathlib import Path

PAGE_WIDTH = 612
PAGE_HEIGHT = 792
MARGIN_LEFT = 54
MARGIN_TOP = 54
FONT_SIZE = 9
LEADING = 12.5
LINES_PER_PAGE = 54
WRAP_COLUMNS = 90


def wrap_text(text: str, width: int = WRAP_COLUMNS) -> list[str]:
    out: list[str] = []
    for line in text.splitlines():
        if len(line) <= width:
            out.append(line)
            continue
        indent = len(line) - len(line.lstrip(" "))
        out.extend(textwrap.wrap(line, width, subsequent_indent=" " * (indent + 2),
                                 break_long_words=True, break_on_hyphens=False) or [""])
    return out


def paginate(lines: list[str], per_page: int = LINES_PER_PAGE) -> list[list[str]]:
    if not lines:
        return [[]]
    return [lines[i:i + per_page] for i in range(0, len(lines), per_page)]


def escape(s: str) -> str:
    s = s.encode("ascii", "replace").decode("ascii")
    return s.replace("\\", "\\\\").replace("(", "\\(").replace(")", "\\)")


def _content_stream(lines: list[str]) -> bytes:
    y = PAGE_HEIGHT - MARGIN_TOP
    ops = ["BT", f"/F1 {FONT_SIZE} Tf", f"{LEADING} TL", f"{MARGIN_LEFT} {y} Td"]
    for line in lines:
        ops.append(f"({escape(line)}) Tj T*")
    ops.append("ET")
    return ("\n".join(ops) + "\n").encode("ascii")


def build_pdf(text: str) -> bytes:
    pages = paginate(wrap_text(text))
    n_pages = len(pages)
    # object numbers: 1 catalog, 2 page tree, 3 font, then (page, content) pairs
    page_ids = [4 + 2 * k for k in range(n_pages)]
    objects: list[bytes] = [
        b"<< /Type /Catalog /Pages 2 0 R >>",
        ("<< /Type /Pages /Kids [" + " ".join(f"{p} 0 R" for p in page_ids)
         + f"] /Count {n_pages} >>").encode("ascii"),
        b"<< /Type /Font /Subtype /Type1 /BaseFont /Courier /Encoding /WinAnsiEncoding >>",
    ]
    for k, lines in enumerate(pages):
        content_id = page_ids[k] + 1
        objects.append((f"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 {PAGE_WIDTH} {PAGE_HEIGHT}] "
                        f"/Resources << /Font << /F1 3 0 R >> >> /Contents {content_id} 0 R >>").encode("ascii"))
        stream = _content_stream(lines)
        objects.append(b"<< /Length " + str(len(stream)).encode("ascii") + b" >>\nstream\n"
                       + stream + b"endstream")

    out = bytearray(b"%PDF-1.4\n%\xe2\xe3\xcf\xd3\n")
    offsets = []
    for num, body in enumerate(objects, 1):
        offsets.append(len(out))
        out += f"{num} 0 obj\n".encode("ascii") + body + b"\nendobj\n"
    xref_at = len(out)
    out += f"xref\n0 {len(objects) + 1}\n".encode("ascii")
    out += b"0000000000 65535 f \n"
    for off in offsets:
        out += f"{off:010d} 00000 n \n".encode("ascii")
    out += (f"trailer\n<< /Size {len(objects) + 1} /Root 1 0 R >>\n"
            f"startxref\n{xref_at}\n%%EOF\n").encode("ascii")
    return bytes(out)


def export_pdf(text: str, path) -> Path:
    path = Path(path)
    try:
        path.write_bytes(build_pdf(text))
    except OSError as exc:
        raise OSError(f"cannot write PDF to {path}: {exc}") from exc
    return path


class PdfError(ValueError):
    pass


def validate_pdf(data: bytes) -> dict:
    """Re-read a file produced by :func:`build_pdf` and check its structure.

    Returns {"objects": n, "pages": n}; raises PdfError on any inconsistency.
    """
    if not data.startswith(b"%PDF-"):
        raise PdfError("missing %PDF- header")
    m = re.search(rb"startxref\s+(\d+)\s+%%EOF\s*$", data)
    if not m:
        raise PdfError("missing startxref / %%EOF")
    xref_at = int(m.group(1))
    if data[xref_at:xref_at + 4] != b"xref":
        raise PdfError("startxref does not point at the xref table")
    head = re.match(rb"xref\s+0\s+(\d+)\s+", data[xref_at:])
    if not head:
        raise PdfError("malformed xref header")
    count = int(head.group(1))
    pos = xref_at + head.end()
    entries = []
    for _ in range(count):
        entry = data[pos:pos + 20]
        em = re.match(rb"(\d{10}) (\d{5}) ([nf]) ?\r?\n", entry)
        if not em:
            raise PdfError(f"bad xref entry at byte {pos}")
        entries.append((int(em.group(1)), em.group(3)))
        pos += 20
    trailer = re.search(rb"trailer\s*<<(.*?)>>", data[pos:], re.S)
    if not trailer:
        raise PdfError("missing trailer")
    size = re.search(rb"/Size (\d+)", trailer.group(1))
    if not size or int(size.group(1)) != count:
        raise PdfError("trailer /Size disagrees with xref")
    for num, (off, kind) in enumerate(entries):
        if kind == b"f":
            continue
        if not data.startswith(f"{num} 0 obj".encode("ascii"), off):
            raise PdfError(f"xref offset for object {num} does not point at its obj keyword")
    pages_decl = re.search(rb"/Type /Pages /Kids \[([^\]]*)\] /Count (\d+)", data)
    if not pages_decl:
        raise PdfError("missing page tree")
    kids = re.findall(rb"(\d+) 0 R", pages_decl.group(1))
    n_pages = int(pages_decl.group(2))
    if len(kids) != n_pages or len(re.findall(rb"/Type /Page\b(?!s)", data)) != n_pages:
        raise PdfError("page count mismatch")
    for sm in re.finditer(rb"<< /Length (\d+) >>\nstream\n", data):
        length = int(sm.group(1))
        if data[sm.end() + length:sm.end() + length + 9] != b"endstream":
            raise PdfError("stream /Length is wrong")
    return {"objects": count - 1, "pages": n_pages}
