"""
Hiérarchie des exceptions de poskit.
Chaque module lève une sous-classe de PoskitError pour que la CLI puisse choisir le bon code de sortie.
"""


class PoskitError(Exception):
    """Erreur de base de poskit."""


class ConfigError(PoskitError):
    """Configuration invalide ou incomplète (code de sortie 1)."""


# core-tasks
class OutOfRange(PoskitError):
    """La position résolue tombe hors de [1, L]."""


class TargetNotFound(PoskitError):
    """L'élément cible est absent de la séquence."""


# sequence-gen
class PoolTooSmall(PoskitError):
    """Le pool ne contient pas assez d'éléments pour la longueur demandée."""


# prompting
class IncompatibleVariant(PoskitError):
    """La formulation choisie ne correspond pas à l'ancre ou à la direction de la requête."""


# corpus-adapters
class SourceExhausted(PoskitError):
    """Une source ne peut pas fournir le nombre d'exemples demandé."""


# pyindex
class IndexOutOfRange(PoskitError):
    pass


class ValueNotFound(PoskitError):
    pass


class DivisionByZero(PoskitError):
    pass


class UnsupportedNode(PoskitError):
    pass


class GenerationExhausted(PoskitError):
    pass


# eval-runner
class BackendUnavailable(PoskitError):
    """Le backend reste injoignable après toutes les tentatives."""


class MalformedResponse(PoskitError):
    """La réponse HTTP ne respecte pas le schéma chat-completion."""


# scoring-report
class EmptySubset(PoskitError):
    pass


class MixedConditions(PoskitError):
    pass


class MissingDirection(PoskitError):
    pass


# sft-export
class SpanMismatch(PoskitError):
    """Le span ne découpe pas exactement le texte de la réponse."""
