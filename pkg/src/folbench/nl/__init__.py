"""Natural-language realization of logic skeletons."""

from .backends import (
    Backend,
    BackendConfigError,
    BackendError,
    ChatCompletionClient,
    OfflineBackend,
    SchemaError,
    first_json_object,
    make_backend,
)
from .realize import (
    ForbiddenPredicate,
    Lexicon,
    LexiconEntry,
    QcError,
    Realization,
    RuleRendering,
    StoryContext,
    generate_story,
    instantiate_predicates,
    qc_translation,
    realize,
    select_rule_version,
    translate_fact,
)

__all__ = [
    "Backend",
    "BackendConfigError",
    "BackendError",
    "ChatCompletionClient",
    "ForbiddenPredicate",
    "Lexicon",
    "LexiconEntry",
    "OfflineBackend",
    "QcError",
    "Realization",
    "RuleRendering",
    "SchemaError",
    "StoryContext",
    "first_json_object",
    "generate_story",
    "instantiate_predicates",
    "make_backend",
    "qc_translation",
    "realize",
    "select_rule_version",
    "translate_fact",
]
