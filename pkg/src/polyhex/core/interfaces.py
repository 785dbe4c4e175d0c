"""Core interfaces for PolyHex.

Pipeline stages implement `PipelineStage`; the service layer runs them in
order against a shared context object.
"""

from abc import ABC, abstractmethod
from typing import Any


class PipelineStage(ABC):
    """Base interface for all pipeline stages."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Get the stage name."""
        pass

    @abstractmethod
    def run(self, context: Any) -> None:
        """Execute the stage, reading and updating the pipeline context."""
        pass

    def describe(self, context: Any) -> str:
        """One-line summary of the stage result, used in logs."""
        return self.name
