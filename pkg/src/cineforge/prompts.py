"""Analysis prompts and generation prompt templates.

The analysis listings and the two generation templates are stored verbatim
under ``data/prompts``. The few-shot example outputs under ``data/few_shot``
are our own and are not part of the verbatim text.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .descriptors import Feature
from .errors import EmptyKeywords

DESCRIPTION_LIMIT = 900

LISTING: dict[Feature, str] = {
    Feature.PARTICLES: "particles",
    Feature.OBJECTS: "objects",
    Feature.TEXTURES: "contexts",
    Feature.CHARACTERS: "characters",
    Feature.BODY: "body",
    Feature.WINDOW: "contexts",
    Feature.LIGHTING: "lighting",
    Feature.EFFECTIVE_LIGHT: "effective_light",
}


@lru_cache(maxsize=None)
def _data(*parts: str) -> str:
    return resources.files("cineforge").joinpath("data", *parts).read_text(encoding="utf-8")


def listing(name: str) -> str:
    return _data("prompts", f"{name}.txt")


@dataclass(frozen=True)
class PromptBundle:
    feature: Feature
    common_rules: str
    feature_prompt: str
    few_shot_examples: tuple[str, ...]

    def text(self) -> str:
        """The full request prompt."""
        parts = [self.common_rules, self.feature_prompt]
        if self.few_shot_examples:
            parts.append("Example Outputs:\n" + "\n\n".join(self.few_shot_examples))
        return "\n\n".join(parts) + "\n"

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text().encode("utf-8")).hexdigest()


def assemble_prompt(feature: Feature | str) -> PromptBundle:
    feature = Feature(feature)
    name = LISTING[feature]
    return PromptBundle(
        feature,
        listing("common_rules"),
        listing(name),
        (_data("few_shot", f"{name}.json").strip(),),
    )


# --------------------------------------------------------------------------
# generation prompts


def build_texture_prompt(surface_kind: str, keywords=()) -> str:
    """Seamless-texture prompt for a floor, wall or ceiling (or hand skin)."""
    prompt = listing("texture_template").replace("{surface type}", surface_kind)
    keywords = [k for k in keywords if k]
    if keywords:
        prompt += "\nKeywords: " + ", ".join(keywords)
    return prompt


def _entity_template() -> str:
    text = listing("entity_template")
    # the stored listing is a string literal body: an escaped newline and a
    # closing quote that are not part of the prompt itself
    if text.endswith("'"):
        text = text[:-1]
    return text.replace("\\n", "\n")


def build_entity_prompt(kind: str, keywords: str, movie_name: str) -> str:
    """Prompt asking a describer model for an image-generation description."""
    if kind not in ("object", "character"):
        raise ValueError(f"entity kind must be 'object' or 'character', not {kind!r}")
    if not keywords or not keywords.strip():
        raise EmptyKeywords(f"no keywords for {kind}")
    return (
        _entity_template()
        .replace("{object | character}", kind)
        .replace("{keywords}", keywords.strip())
        .replace("{movie name}", movie_name)
    )


_SENTENCE_END = re.compile(r"[.!?](?=\s|$)")


def limit_description(text: str, limit: int = DESCRIPTION_LIMIT) -> str:
    """Trim a generated description to fewer than ``limit`` characters.

    Cuts at the last sentence end that fits; falls back to the last word
    boundary when a single sentence is too long.
    """
    text = text.strip()
    if len(text) < limit:
        return text
    head = text[: limit - 1]
    ends = [m.end() for m in _SENTENCE_END.finditer(head)]
    if ends:
        return head[: ends[-1]].rstrip()
    cut = head.rfind(" ")
    return (head[:cut] if cut > 0 else head).rstrip()
