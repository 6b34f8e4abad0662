from .store import (
    LeaseExpiredError,
    ProgressSnapshot,
    RefinementTask,
    TaskStateError,
    TaskStore,
    TaskStoreError,
    UnknownTaskError,
    WrongClaimantError,
)

__all__ = [
    "LeaseExpiredError",
    "ProgressSnapshot",
    "RefinementTask",
    "TaskStateError",
    "TaskStore",
    "TaskStoreError",
    "UnknownTaskError",
    "WrongClaimantError",
]
