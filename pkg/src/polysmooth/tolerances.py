"""Numerical tolerances shared by the analysis and verification stages."""

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    #: |theta - 2 pi| above this marks a triangulation edge as singular (rad)
    angle: float = 1e-9
    #: link-area check of the suspension test
    area: float = 1e-6
    #: pole-to-pole link distance check of the suspension test (rad)
    dist: float = 1e-3
    #: absolute tolerance for curvature sign checks
    curv: float = 1e-8
    #: subdivision levels of the link graph used for geodesic distances
    link_levels: int = 3

    def override(self, mapping):
        """Return a copy with the given fields replaced; unknown keys raise."""
        known = {f.name for f in fields(self)}
        unknown = set(mapping) - known
        if unknown:
            raise KeyError(f"unknown tolerance fields: {sorted(unknown)}")
        cast = {k: type(getattr(self, k))(v) for k, v in mapping.items()}
        return replace(self, **cast)

    def as_dict(self):
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()
