"""Shared plumbing for the experiment scripts: dataclass configs overridable
from the command line, and an output directory."""
from __future__ import annotations

import argparse
import dataclasses
import logging
from pathlib import Path
from typing import TypeVar

T = TypeVar("T")


def _parser_for(field: dataclasses.Field):
    kind = field.type if not isinstance(field.type, str) else eval(field.type)  # noqa: S307 - own annotations
    if kind is bool:
        return lambda s: s.lower() in ("1", "true", "yes")
    if getattr(kind, "__origin__", None) is tuple:
        inner = kind.__args__[0]
        return lambda s: tuple(inner(v) for v in s.replace(",", " ").split())
    return kind


def parse_config(cls: type[T], description: str) -> T:
    """Every dataclass field becomes ``--field-name``; defaults come from the class."""
    ap = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cls):
        ap.add_argument("--" + f.name.replace("_", "-"), type=_parser_for(f), default=f.default,
                        help=f"default: {f.default}")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = vars(ap.parse_args())
    logging.basicConfig(level=logging.INFO if args.pop("verbose") else logging.ERROR)
    return cls(**args)


def out_dir(path: str) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d
