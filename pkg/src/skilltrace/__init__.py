"""Permission-to-policy traceability and skill squatting analysis for voice app marketplaces."""
from .corpus import PermissionClass, SkillRecord
from .traceability import Verdict, vet_skill

__version__ = "0.1.0"

__all__ = ["PermissionClass", "SkillRecord", "Verdict", "vet_skill", "__version__"]
