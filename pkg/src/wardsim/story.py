"""The learner-facing story text, with optional scenario hints.

A story template is a plain-text file in two parts separated by a line
holding only "---". The header declares anchors, one per line:

    # anchor <id>: <sentence>

and may hold "# note:" comment lines. The part after the separator is
the story body; at hint level 0 it is returned byte for byte. Higher
hint levels insert scenario-specific sentences immediately after their
anchor sentence, which must appear in the body exactly once and exactly
as declared; anything else raises TemplateIntegrityError.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from wardsim.errors import ConfigurationError, TemplateIntegrityError
from wardsim.scenario import ScenarioKind

ANCHOR_RESTAURANT = "restaurant-usage"
ANCHOR_CO_LOCATION = "infection-co-location"
ANCHOR_COURSE = "state-course"
ANCHOR_PROBABILITY = "infection-probability"

# level -> hints newly added at that level; rendering is cumulative
HINTS: dict[ScenarioKind, dict[int, list[tuple[str, str]]]] = {
    ScenarioKind.MEDIATOR: {
        1: [(
            ANCHOR_RESTAURANT,
            "Before you trust any age pattern, look at how often people of "
            "each age actually sit in those restaurants.",
        )],
        2: [(
            ANCHOR_PROBABILITY,
            "In this season the chance of catching the illness does not "
            "depend on a person's age at all, so any age pattern you see "
            "must arrive through something people of different ages do "
            "differently.",
        )],
    },
    ScenarioKind.CONFOUNDER: {
        1: [(
            ANCHOR_CO_LOCATION,
            "Households share rooms every night, so before crediting a rule "
            "about restaurants, ask who else in the household could be "
            "bringing the illness home.",
        )],
        2: [(
            ANCHOR_RESTAURANT,
            "Neighborhoods that trimmed restaurant hours also moved their "
            "schools online at the same time, so compare households only "
            "within the same school arrangement.",
        )],
    },
    ScenarioKind.COLLIDER: {
        1: [(
            ANCHOR_COURSE,
            "If you study only the people who fell ill, remember that "
            "everyone who never caught it is missing from your table.",
        )],
        2: [(
            ANCHOR_PROBABILITY,
            "Vaccination cuts the hourly chance of infection to a tenth, so "
            "among the infected the vaccinated are a picked sample, and "
            "comparisons inside that sample mislead.",
        )],
    },
    ScenarioKind.CUSTOM: {},
}

QUESTIONS: dict[ScenarioKind, str] = {
    ScenarioKind.MEDIATOR: (
        "Question: infection rates fall with age in this ward. Is growing "
        "older itself protective here, or is something older residents do "
        "differently carrying the whole pattern?"
    ),
    ScenarioKind.CONFOUNDER: (
        "Question: households near restaurants that kept short hours were "
        "infected less often. Did the short hours protect them, or did "
        "something else in those neighborhoods do the work?"
    ),
    ScenarioKind.COLLIDER: (
        "Question: among residents who caught the illness, vaccination "
        "looks surprisingly common. Does that mean the vaccine failed, or "
        "is the comparison itself broken?"
    ),
    ScenarioKind.CUSTOM: (
        "Question: pick one pattern in these tables and argue, from the "
        "data alone, whether it is a cause at work or an artifact of how "
        "the records were made."
    ),
}


@dataclass(frozen=True)
class StoryTemplate:
    anchors: dict[str, str]
    body: str


def default_template_path() -> Path:
    return Path(resources.files("wardsim") / "data" / "story_template.txt")


def load_template(path: str | Path | None = None) -> StoryTemplate:
    p = Path(path) if path is not None else default_template_path()
    if not p.exists():
        raise TemplateIntegrityError(f"story template not found: {p}")
    text = p.read_text(encoding="utf-8")
    if "\n---\n" not in text:
        raise TemplateIntegrityError(
            f"story template {p}: no '---' line between header and body"
        )
    header, body = text.split("\n---\n", 1)
    anchors: dict[str, str] = {}
    for line in header.splitlines():
        if line.startswith("# anchor "):
            rest = line[len("# anchor "):]
            if ": " not in rest:
                raise TemplateIntegrityError(
                    f"story template {p}: malformed anchor line {line!r}"
                )
            anchor_id, sentence = rest.split(": ", 1)
            anchors[anchor_id.strip()] = sentence
        elif line.startswith("#") or not line.strip():
            continue
        else:
            raise TemplateIntegrityError(
                f"story template {p}: unexpected header line {line!r}"
            )
    return StoryTemplate(anchors=anchors, body=body)


def hint_sentences(kind: ScenarioKind, hint_level: int) -> list[tuple[str, str]]:
    """All (anchor id, sentence) pairs active at the given level."""
    per_level = HINTS[kind]
    out: list[tuple[str, str]] = []
    for level in range(1, hint_level + 1):
        out.extend(per_level.get(level, []))
    return out


def render_story(
    kind: ScenarioKind | str,
    hint_level: int = 0,
    include_question: bool = False,
    template_path: str | Path | None = None,
) -> str:
    kind = ScenarioKind(kind)
    if hint_level not in (0, 1, 2):
        raise ConfigurationError(f"story.hint_level: {hint_level} not in 0..2")
    template = load_template(template_path)
    body = template.body
    for anchor_id, hint in hint_sentences(kind, hint_level):
        if anchor_id not in template.anchors:
            raise TemplateIntegrityError(
                f"story template: anchor {anchor_id!r} is not declared"
            )
        sentence = template.anchors[anchor_id]
        n = body.count(sentence)
        if n != 1:
            raise TemplateIntegrityError(
                f"story template: anchor {anchor_id!r} sentence appears "
                f"{n} times in the body, need exactly 1"
            )
        body = body.replace(sentence, sentence + " " + hint, 1)
    if include_question:
        body = body.rstrip("\n") + "\n\n" + QUESTIONS[kind] + "\n"
    return body
