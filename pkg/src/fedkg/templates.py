"""Request templates: literal text with `{ queryInputs | filter() }` placeholders.

A placeholder names the reserved source ``queryInputs`` and may pipe it
through a chain of filter calls. Everything outside placeholders is kept
verbatim, including percent escapes and punctuation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator, Union

from .errors import TemplateSyntax

PLACEHOLDER_SOURCE = "queryInputs"

# Filters the executor knows how to apply.
KNOWN_FILTERS = ("rmPrefix", "wrapPrefix")

_FILTER_CALL = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\((.*)\)$", re.DOTALL)


@dataclass(frozen=True)
class FilterCall:
    name: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class Placeholder:
    raw: str  # original "{...}" text, kept so serialization reproduces the source
    filters: tuple[FilterCall, ...] = ()


Segment = Union[Literal, Placeholder]


@dataclass(frozen=True)
class Template:
    """A parsed template.

    A template that failed to parse keeps its raw text and carries the
    failure on ``error``; rendering such a template is an error, but holding
    one is fine so document validation can report every problem at once.
    """

    raw: str
    segments: tuple[Segment, ...] = ()
    error: str | None = None
    error_position: int = 0

    @property
    def has_placeholder(self) -> bool:
        return any(isinstance(s, Placeholder) for s in self.segments)

    def filter_calls(self) -> Iterator[FilterCall]:
        for seg in self.segments:
            if isinstance(seg, Placeholder):
                yield from seg.filters

    def source_text(self) -> str:
        """Reconstruct the original template string from the parse."""
        if self.error is not None:
            return self.raw
        return "".join(
            seg.text if isinstance(seg, Literal) else seg.raw for seg in self.segments
        )


def parse_template(raw: str) -> Template:
    """Parse leniently: problems are recorded on the result, not raised."""
    segments: list[Segment] = []
    buf: list[str] = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "}":
            return Template(raw, error="unmatched '}'", error_position=i)
        if ch != "{":
            buf.append(ch)
            i += 1
            continue
        end = raw.find("}", i)
        if end < 0:
            return Template(raw, error="unterminated '{'", error_position=i)
        filters, problem = _parse_placeholder_body(raw[i + 1 : end])
        if problem is not None:
            return Template(raw, error=problem, error_position=i)
        if buf:
            segments.append(Literal("".join(buf)))
            buf = []
        segments.append(Placeholder(raw=raw[i : end + 1], filters=tuple(filters)))
        i = end + 1
    if buf:
        segments.append(Literal("".join(buf)))
    return Template(raw, tuple(segments))


def compile_template(raw: str) -> Template:
    """Parse a template, raising TemplateSyntax if it is malformed."""
    template = parse_template(raw)
    if template.error is not None:
        raise TemplateSyntax(template.error_position, template.error)
    return template


def _parse_placeholder_body(body: str) -> tuple[list[FilterCall], str | None]:
    parts = body.split("|")
    source = parts[0].strip()
    if source != PLACEHOLDER_SOURCE:
        return [], f"unknown placeholder source {source!r}"
    filters: list[FilterCall] = []
    for part in parts[1:]:
        text = part.strip()
        m = _FILTER_CALL.match(text)
        if m is None:
            return [], f"malformed filter call {text!r}"
        inner = m.group(2)
        args = tuple(a.strip().strip("'\"") for a in inner.split(",") if a.strip())
        filters.append(FilterCall(m.group(1), args))
    return filters, None


def render_template(template: Template, fill: Callable[[Placeholder], str]) -> str:
    """Substitute every placeholder with ``fill(placeholder)``."""
    if template.error is not None:
        raise ValueError(f"cannot render malformed template: {template.error}")
    out: list[str] = []
    for seg in template.segments:
        out.append(seg.text if isinstance(seg, Literal) else fill(seg))
    return "".join(out)
