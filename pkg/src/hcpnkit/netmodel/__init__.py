"""Hierarchical net models: parsing, validation and flattening."""
from .flatten import flatten
from .model import (ArcDef, Diagnostic, FlatArc, FlatNet, FlatPlace, FlatTransition,
                    ModelDef, ModelError, PageDef, PlaceDef, SubstitutionDef, TransitionDef)
from .parser import parse_model
from .validate import validate_model


def load_model(text: str) -> FlatNet:
    """Parse, validate and flatten in one go."""
    return flatten(parse_model(text))


__all__ = [
    "ArcDef", "Diagnostic", "FlatArc", "FlatNet", "FlatPlace", "FlatTransition", "ModelDef",
    "ModelError", "PageDef", "PlaceDef", "SubstitutionDef", "TransitionDef", "flatten",
    "load_model", "parse_model", "validate_model",
]
