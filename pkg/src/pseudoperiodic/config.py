"""Pipeline configuration and its flat ``key = value`` file format.

Blank lines and lines starting with ``#`` are ignored. Unknown keys are an
error so that typos do not silently fall back to defaults.
"""

import hashlib
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from ._io import fmt_num
from .classify import CLASSIFIERS
from .errors import ContractError, ParseError

BASELINES = ("fv", "angle", "valley")
SIL_SPACES = ("feature", "raw")


@dataclass(frozen=True)
class PipelineConfig:
    epsilon: float = 1.0
    lam: float = 10.0
    t_scale: float = 1.0
    v_scale: float = 1.0
    k_min: int = 2
    k_max: int = 8
    eta: float = 0.4
    xi: float = 0.8
    classifier: str = "forest"
    cv_folds: int = 10
    seed: int = 0
    baseline: str = "fv"
    u0: float = 50.0
    alpha: float = 1.1
    n_trees: int = 100
    restarts: int = 8
    workers: int = 1
    standardize: bool = True
    sil_space: str = "feature"

    def __post_init__(self):
        def need(ok, msg):
            if not ok:
                raise ContractError(msg)

        need(0 < self.epsilon <= math.pi, f"epsilon must lie in (0, pi], got {self.epsilon}")
        need(self.lam >= 0 and math.isfinite(self.lam), f"lambda must be finite and >= 0, got {self.lam}")
        need(self.t_scale > 0 and self.v_scale > 0, "axis scales must be positive")
        need(2 <= self.k_min <= self.k_max, f"need 2 <= k_min <= k_max, got {self.k_min}..{self.k_max}")
        need(-1 <= self.eta <= 1, f"eta must lie in [-1, 1], got {self.eta}")
        need(-1 <= self.xi <= 1, f"xi must lie in [-1, 1], got {self.xi}")
        need(self.classifier in CLASSIFIERS, f"classifier must be one of {CLASSIFIERS}")
        need(self.cv_folds >= 2, f"cv_folds must be at least 2, got {self.cv_folds}")
        need(self.seed >= 0, "seed must be non-negative")
        need(self.baseline in BASELINES, f"baseline must be one of {BASELINES}")
        need(self.alpha > 0 and math.isfinite(self.u0), "valley parameters need alpha > 0 and a finite u0")
        need(self.sil_space in SIL_SPACES, f"sil_space must be one of {SIL_SPACES}")
        need(self.n_trees >= 1 and self.restarts >= 1 and self.workers >= 1, "counts must be positive")

    @property
    def scale(self):
        return (self.t_scale, self.v_scale)

    @property
    def k_range(self):
        return range(self.k_min, self.k_max + 1)

    def with_overrides(self, **values):
        """Copy with every non-``None`` value replaced."""
        return replace(self, **{k: v for k, v in values.items() if v is not None})

    def to_text(self):
        """Canonical file form; parsing it gives back an equal config."""
        lines = []
        for k, v in asdict(self).items():
            key = "lambda" if k == "lam" else k
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = fmt_num(v)
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"

    def digest(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()


_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _convert(key, raw, lineno):
    kind = _TYPES[key]
    if kind is str:
        return raw
    if kind is bool:
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ParseError(f"{key} expects true or false, got {raw!r}", line=lineno)
    try:
        if kind is int:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ParseError(f"{key} expects {kind.__name__}, got {raw!r}", line=lineno) from None


def parse_config(text):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {line!r}", line=lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        key = "lam" if key == "lambda" else key
        if key not in _TYPES:
            raise ParseError(f"unknown key {key!r}", line=lineno)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", line=lineno)
        values[key] = _convert(key, raw, lineno)
    return PipelineConfig(**values)


def load_config(path):
    return parse_config(Path(path).read_text())
