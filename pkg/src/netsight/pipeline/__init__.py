"""Topic bus, chain configuration, identity binding, composition and the chain runner."""

from .bus import Message, Subscription, TopicBus, UnknownTopic
from .compose import ATTRIBUTES, AttributeClaim, MissingAccuracy, Resolution, resolve_all, resolve_attribute, score_chains
from .config import (
    BASE_TOPICS,
    ChainConfig,
    CompositionMode,
    CompositionStrategy,
    ConfigError,
    EngineDescriptor,
    EngineKind,
    default_chain_config,
    load_chain_config,
    parse_chain_config,
    validate_chain,
)
from .identity import DeviceIdentity, Epoch, IdentityBinder, IdentityResolver, bind_identity
from .profiles import DeviceProfile, export_profiles, load_profiles

_LAZY = {"run_pipeline", "RunResult", "RunStats", "EventLog", "RunContext"}


def __getattr__(name):
    # the runner imports the analyzers, which import this package; load it on first use
    if name in _LAZY:
        from . import run

        return getattr(run, name)
    raise AttributeError(name)
