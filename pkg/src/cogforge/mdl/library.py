"""Model programs shipped with the package."""
from functools import lru_cache
from importlib import resources

from ..dataset import ParadigmKind
from ..errors import UnknownModel

_TEMPLATES = {
    ParadigmKind.DECISION: "template_decision",
    ParadigmKind.LEARNING_PARTIAL: "template_learning",
    ParadigmKind.LEARNING_FULL: "template_learning",
    ParadigmKind.PLANNING: "template_planning",
    ParadigmKind.WORKING_MEMORY: "template_wm",
}


def library_names():
    files = resources.files(__package__).joinpath("library").iterdir()
    return sorted(f.name[:-4] for f in files if f.name.endswith(".mdl"))


def library_source(name):
    f = resources.files(__package__).joinpath("library", f"{name}.mdl")
    if not f.is_file():
        raise UnknownModel(f"no shipped model named {name!r}; have {', '.join(library_names())}")
    return f.read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def load_library(name):
    """Parse a shipped ``.mdl`` program by name (e.g. ``"rw_pm"``)."""
    from .runtime import parse
    return parse(library_source(name), name=name)


def template_for(kind):
    return library_source(_TEMPLATES[ParadigmKind.parse(kind)])
