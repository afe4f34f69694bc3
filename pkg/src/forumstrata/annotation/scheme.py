"""Coding scheme: the ordered class list guiding annotation.

A scheme file is a JSON document with an ordered ``classes`` array (id,
name, description, anonymized_example) and an optional ``merge_map`` folding
rare classes into a main class.  The shipped default covers the seven
crime-type classes used for underground-forum post annotation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping

from ..errors import ValidationError


@dataclass(frozen=True)
class SchemeClass:
    id: str
    name: str
    description: str
    anonymized_example: str = ""


@dataclass(frozen=True)
class CodingScheme:
    classes: tuple[SchemeClass, ...]
    merge_map: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        ids = [c.id for c in self.classes]
        if len(set(ids)) != len(ids):
            raise ValidationError("scheme class ids must be unique")
        for src, dst in self.merge_map.items():
            if src not in ids or dst not in ids:
                raise ValidationError(
                    f"merge_map entry {src!r} -> {dst!r} references unknown class"
                )

    def class_ids(self) -> list[str]:
        return [c.id for c in self.classes]

    def effective_class_ids(self) -> list[str]:
        """Class ids after applying the merge map, original order kept."""
        merged_away = set(self.merge_map)
        return [c.id for c in self.classes if c.id not in merged_away]

    def merge(self, class_id: str) -> str:
        return self.merge_map.get(class_id, class_id)

    def has_class(self, class_id: str) -> bool:
        return any(c.id == class_id for c in self.classes)

    def to_json(self) -> dict:
        return {
            "classes": [
                {
                    "id": c.id,
                    "name": c.name,
                    "description": c.description,
                    "anonymized_example": c.anonymized_example,
                }
                for c in self.classes
            ],
            "merge_map": dict(self.merge_map),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "CodingScheme":
        return cls(
            classes=tuple(
                SchemeClass(
                    id=c["id"],
                    name=c["name"],
                    description=c.get("description", ""),
                    anonymized_example=c.get("anonymized_example", ""),
                )
                for c in data["classes"]
            ),
            merge_map=dict(data.get("merge_map", {})),
        )

    @classmethod
    def load(cls, path) -> "CodingScheme":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def load_default_scheme() -> CodingScheme:
    text = (
        resources.files("forumstrata.data")
        .joinpath("coding_scheme.json")
        .read_text(encoding="utf-8")
    )
    return CodingScheme.from_json(json.loads(text))
