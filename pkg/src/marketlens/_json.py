"""Locating JSON objects inside model output that may carry prose or fences."""

from __future__ import annotations

import json
import re

from .errors import ParseError

_FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_-]*)\n?(.*?)```", re.DOTALL)


def find_json_object(text: str) -> tuple[dict, int]:
    """First decodable JSON object in ``text``, fenced blocks tried first.

    Returns (object, offset of its opening brace). Raises ParseError when no
    candidate decodes to a dict.
    """
    decoder = json.JSONDecoder()
    candidates: list[tuple[int, str]] = []
    for match in _FENCE_RE.finditer(text):
        candidates.append((match.start(1), match.group(1)))
    candidates.append((0, text))

    for base, chunk in candidates:
        for brace in re.finditer(r"\{", chunk):
            try:
                obj, _ = decoder.raw_decode(chunk[brace.start():])
            except json.JSONDecodeError:
                continue
            if isinstance(obj, dict):
                return obj, base + brace.start()
    raise ParseError("no decodable JSON object in response", offset=None)
