"""Main-content extraction with structural character accounting.

Readability-style density heuristic: strip obvious boilerplate elements,
score candidate blocks by text_length x (1 - link_density)^2, take the best
subtree plus strong siblings, then emit block-level text as paragraphs while
counting how many characters sit inside links, list items, and table cells.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field

from .errors import EncodingError
from .htmldom import Element, parse_html

STRIP_TAGS = {
    "script", "style", "noscript", "template", "nav", "header", "footer",
    "aside", "form", "iframe", "svg", "canvas", "button", "select", "label",
}

BLOCK_TAGS = {
    "p", "div", "section", "article", "main", "body", "ul", "ol", "dl",
    "li", "dt", "dd", "table", "thead", "tbody", "tfoot", "tr", "td", "th",
    "h1", "h2", "h3", "h4", "h5", "h6", "blockquote", "pre", "figure",
    "figcaption", "caption", "address", "hr",
}

CANDIDATE_TAGS = {
    "body", "main", "article", "section", "div", "td", "blockquote",
    "ul", "ol", "table",
}

_SIBLING_TAGS = CANDIDATE_TAGS | {"p", "h1", "h2", "h3", "h4", "h5", "h6", "pre"}

_LIST_TAGS = {"li", "dt", "dd"}
_CELL_TAGS = {"td", "th"}

_ZERO_WIDTH = {"\u200b", "\u200c", "\u200d", "\u2060", "\ufeff"}

_CHARSET_RE = re.compile(rb"""charset\s*=\s*["']?\s*([A-Za-z0-9_\-]+)""", re.I)


@dataclass
class ExtractedContent:
    main_text: str
    paragraphs: list[str]
    total_chars: int
    link_chars: int
    list_chars: int
    table_chars: int
    word_count: int
    title: str | None = None
    lang_hint: str | None = None

    def to_dict(self) -> dict:
        return {
            "main_text": self.main_text,
            "paragraphs": self.paragraphs,
            "total_chars": self.total_chars,
            "link_chars": self.link_chars,
            "list_chars": self.list_chars,
            "table_chars": self.table_chars,
            "word_count": self.word_count,
            "title": self.title,
            "lang_hint": self.lang_hint,
        }


def decode_html(raw: bytes) -> str:
    """Decode page bytes: UTF-8 first, then the meta-declared charset."""
    if raw.startswith(b"\xff\xfe") or raw.startswith(b"\xfe\xff"):
        try:
            return raw.decode("utf-16")
        except UnicodeDecodeError as e:
            raise EncodingError(str(e)) from e
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError:
        pass
    m = _CHARSET_RE.search(raw[:4096])
    if m:
        codec = m.group(1).decode("ascii", errors="replace")
        try:
            return raw.decode(codec)
        except (UnicodeDecodeError, LookupError):
            pass
    raise EncodingError("bytes are not UTF-8 and no workable charset declared")


def _clean_fragment(s: str) -> str:
    """NFC-normalize and drop zero-width and non-whitespace control chars."""
    s = unicodedata.normalize("NFC", s)
    return "".join(
        ch for ch in s
        if ch not in _ZERO_WIDTH and (ch.isspace() or unicodedata.category(ch) not in ("Cc", "Cf"))
    )


def normalize_text(raw: str) -> str:
    """Collapse whitespace within paragraphs, join paragraphs with blank lines."""
    cleaned = _clean_fragment(raw)
    paragraphs = re.split(r"\n\s*\n", cleaned)
    out = [" ".join(p.split()) for p in paragraphs]
    return "\n\n".join(p for p in out if p)


# --- scoring ---

def _subtree_text_stats(el: Element, in_link: bool = False) -> tuple[int, int]:
    """(text_chars, link_text_chars) of the subtree, boilerplate stripped."""
    total = 0
    link = 0
    for node in el.children:
        if isinstance(node, str):
            n = len("".join(node.split()))
            total += n
            if in_link:
                link += n
        elif node.tag not in STRIP_TAGS:
            t, l = _subtree_text_stats(node, in_link or node.tag == "a")
            total += t
            link += l
    return total, link


def _score(el: Element) -> float:
    total, link = _subtree_text_stats(el)
    if total == 0:
        return 0.0
    density = link / total
    return total * (1.0 - density) ** 2


def _select_content_roots(doc: Element) -> list[Element]:
    bodies = doc.find_all("body")
    body = bodies[0] if bodies else doc
    landmarks = [el for el in body.iter() if el.tag in ("article", "main")]
    scope = landmarks if landmarks else [body]

    candidates = []
    for root in scope:
        candidates.extend(el for el in root.iter() if el.tag in CANDIDATE_TAGS)
    if not candidates:
        candidates = scope
    scored = [(_score(el), el) for el in candidates]
    best_score = max(s for s, _ in scored)
    if best_score == 0:
        return scope
    winner = next(el for s, el in scored if s == best_score)

    # pull in strong siblings of the winner (0.2 of the winning score)
    roots = [winner]
    if winner.parent is not None:
        threshold = 0.2 * best_score
        roots = []
        for sib in winner.parent.children:
            if sib is winner:
                roots.append(sib)
            elif isinstance(sib, Element) and sib.tag in _SIBLING_TAGS and _score(sib) >= threshold:
                roots.append(sib)
    return roots


# --- paragraph emission with structural accounting ---

class _ParagraphBuilder:
    def __init__(self):
        self.paragraphs: list[str] = []
        self.link_chars = 0
        self.list_chars = 0
        self.table_chars = 0
        self._buf: list[tuple[str, bool, bool, bool]] = []

    def add_text(self, text: str, in_link: bool, in_list: bool, in_table: bool):
        cleaned = _clean_fragment(text)
        for ch in cleaned:
            self._buf.append((ch, in_link, in_list, in_table))

    def flush(self):
        # collapse whitespace runs; flags of retained chars drive the counters
        out: list[tuple[str, bool, bool, bool]] = []
        pending_space = False
        for ch, a, b, c in self._buf:
            if ch.isspace():
                pending_space = bool(out)
                continue
            if pending_space:
                prev = out[-1]
                out.append((" ", prev[1] and a, prev[2] and b, prev[3] and c))
                pending_space = False
            out.append((ch, a, b, c))
        self._buf = []
        if not out:
            return
        self.paragraphs.append("".join(item[0] for item in out))
        self.link_chars += sum(1 for item in out if item[1])
        self.list_chars += sum(1 for item in out if item[2])
        self.table_chars += sum(1 for item in out if item[3])


def _walk(el: Element, builder: _ParagraphBuilder,
          in_link: bool, in_list: bool, in_table: bool):
    for node in el.children:
        if isinstance(node, str):
            builder.add_text(node, in_link, in_list, in_table)
            continue
        tag = node.tag
        if tag in STRIP_TAGS:
            continue
        if tag == "br":
            builder.add_text(" ", in_link, in_list, in_table)
            continue
        flags = (
            in_link or tag == "a",
            in_list or tag in _LIST_TAGS,
            in_table or tag in _CELL_TAGS,
        )
        if tag in BLOCK_TAGS:
            builder.flush()
            _walk(node, builder, *flags)
            builder.flush()
        else:
            _walk(node, builder, *flags)


def _emit_paragraphs(roots: list[Element]) -> _ParagraphBuilder:
    builder = _ParagraphBuilder()
    for root in roots:
        builder.flush()
        _walk(root, builder,
              in_link=False,
              in_list=root.tag in _LIST_TAGS,
              in_table=root.tag in _CELL_TAGS)
        builder.flush()
    return builder


def _page_title(doc: Element) -> str | None:
    for tag in ("title", "h1"):
        for el in doc.find_all(tag):
            text = " ".join(el.text().split())
            if text:
                return text
    return None


def _lang_hint(doc: Element) -> str | None:
    for el in doc.find_all("html"):
        lang = el.attrs.get("lang")
        if lang:
            return lang.strip() or None
    return None


def extract(html: bytes, base_url: str = "") -> ExtractedContent:
    """Extract main textual content and structural character counts.

    A character inside a link inside a list cell counts toward every
    applicable counter independently. total_chars is the sum of paragraph
    lengths; main_text joins paragraphs with blank lines.
    """
    text = decode_html(html)
    doc = parse_html(text)
    roots = _select_content_roots(doc)
    built = _emit_paragraphs(roots)
    main_text = "\n\n".join(built.paragraphs)
    total = sum(len(p) for p in built.paragraphs)
    return ExtractedContent(
        main_text=main_text,
        paragraphs=built.paragraphs,
        total_chars=total,
        link_chars=built.link_chars,
        list_chars=built.list_chars,
        table_chars=built.table_chars,
        word_count=len(main_text.split()),
        title=_page_title(doc),
        lang_hint=_lang_hint(doc),
    )


def ratios(c: ExtractedContent) -> tuple[float, float, float]:
    """(link_ratio, list_ratio, table_ratio); all zero for empty content."""
    if c.total_chars == 0:
        return (0.0, 0.0, 0.0)
    t = float(c.total_chars)
    return (c.link_chars / t, c.list_chars / t, c.table_chars / t)
