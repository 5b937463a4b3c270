from .app import ServiceState, create_app, load_service_state
from .schemas import (
    ClassifyRequest,
    ClassifyResponse,
    FeaturePayload,
    HealthResponse,
    SystemInfo,
    SystemScore,
    SystemsResponse,
)

__all__ = [
    "ClassifyRequest",
    "ClassifyResponse",
    "FeaturePayload",
    "HealthResponse",
    "ServiceState",
    "SystemInfo",
    "SystemScore",
    "SystemsResponse",
    "create_app",
    "load_service_state",
]
