"""Minimal error-tolerant DOM built on html.parser.

Handles the tag-soup cases that matter for text extraction: void elements,
unclosed <p>/<li>/<td> and friends, and stray end tags. Not a spec-complete
HTML5 tree builder.
"""
from __future__ import annotations

from html.parser import HTMLParser

VOID_TAGS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
}

# tag -> set of open tags it implicitly closes
_IMPLIED_END = {
    "p": {"p"},
    "li": {"li"},
    "dt": {"dt", "dd"},
    "dd": {"dt", "dd"},
    "td": {"td", "th"},
    "th": {"td", "th"},
    "tr": {"tr", "td", "th"},
    "option": {"option"},
    "thead": {"tr", "td", "th"},
    "tbody": {"tr", "td", "th", "thead"},
    "h1": {"p"}, "h2": {"p"}, "h3": {"p"},
    "h4": {"p"}, "h5": {"p"}, "h6": {"p"},
    "div": {"p"}, "ul": {"p"}, "ol": {"p"}, "table": {"p"},
    "blockquote": {"p"}, "pre": {"p"}, "section": {"p"},
    "article": {"p"}, "aside": {"p"}, "header": {"p"}, "footer": {"p"},
}


class Element:
    __slots__ = ("tag", "attrs", "children", "parent")

    def __init__(self, tag, attrs=None, parent=None):
        self.tag = tag
        self.attrs = dict(attrs or {})
        self.children = []
        self.parent = parent

    def append(self, node):
        if isinstance(node, Element):
            node.parent = self
        self.children.append(node)

    def iter(self):
        yield self
        for child in self.children:
            if isinstance(child, Element):
                yield from child.iter()

    def find_all(self, *tags):
        return [el for el in self.iter() if el.tag in tags]

    def text(self) -> str:
        parts = []
        for node in self.children:
            if isinstance(node, str):
                parts.append(node)
            else:
                parts.append(node.text())
        return "".join(parts)

    def __repr__(self):
        return f"<Element {self.tag} children={len(self.children)}>"


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = Element("#document")
        self.stack = [self.root]

    def handle_starttag(self, tag, attrs):
        implied = _IMPLIED_END.get(tag)
        if implied:
            while len(self.stack) > 1 and self.stack[-1].tag in implied:
                self.stack.pop()
        el = Element(tag, attrs)
        self.stack[-1].append(el)
        if tag not in VOID_TAGS:
            self.stack.append(el)

    def handle_startendtag(self, tag, attrs):
        self.stack[-1].append(Element(tag, attrs))

    def handle_endtag(self, tag):
        if tag in VOID_TAGS:
            return
        # close up to the nearest matching open element; ignore stray end tags
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return

    def handle_data(self, data):
        if data:
            self.stack[-1].append(data)


def parse_html(text: str) -> Element:
    builder = _TreeBuilder()
    try:
        builder.feed(text)
        builder.close()
    except Exception:
        # html.parser is robust, but guard against pathological inputs:
        # keep whatever tree was built so far.
        pass
    return builder.root
