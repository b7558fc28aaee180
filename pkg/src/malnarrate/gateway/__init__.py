from .client import (
    AuthFailed,
    BadResponse,
    ChatExchange,
    ContextOverflow,
    EmbeddingProvider,
    EmbeddingVector,
    EndpointUnreachable,
    Gateway,
    GatewayError,
    InvalidInput,
    ModelProfile,
    RetriesExhausted,
    RetryPolicy,
)
from .mock import CONNECT_ERROR, TIMEOUT, MockBackend, digest_embedding, synthetic_completion

__all__ = [
    "AuthFailed",
    "BadResponse",
    "CONNECT_ERROR",
    "ChatExchange",
    "ContextOverflow",
    "EmbeddingProvider",
    "EmbeddingVector",
    "EndpointUnreachable",
    "Gateway",
    "GatewayError",
    "InvalidInput",
    "MockBackend",
    "ModelProfile",
    "RetriesExhausted",
    "RetryPolicy",
    "TIMEOUT",
    "digest_embedding",
    "synthetic_completion",
]
