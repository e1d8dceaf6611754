"""
Run configuration (validated before any computation) and the model-set file read by compare/preq.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from scorelab.errors import SchemaError, SpecificationError
from scorelab.numerics.quadrature import Grid1D
from scorelab.numerics.rng import SeedSpec

Command = Literal["score", "estimate", "gmrf-fit", "wishart-fit", "compare", "preq", "simulate", "check-propriety"]
Study = Literal["sandwich", "unbiased", "gmrf-equivalence", "prequential"]

COMMANDS = ("score", "estimate", "gmrf-fit", "wishart-fit", "compare", "preq", "simulate", "check-propriety")
STUDIES = ("sandwich", "unbiased", "gmrf-equivalence", "prequential")

# options each command cannot run without
REQUIRED: Dict[str, tuple] = {
    "score": ("rule", "data"),
    "estimate": ("rule", "family", "data"),
    "gmrf-fit": ("data",),
    "wishart-fit": ("data",),
    "compare": ("rule", "models", "data"),
    "preq": ("models", "data"),
    "simulate": ("study", "seed"),
    "check-propriety": ("rule",),
}

STUDY_REQUIRED: Dict[str, tuple] = {
    "sandwich": ("rule", "family", "theta"),
    "unbiased": ("rule", "family", "theta"),
    "gmrf-equivalence": ("theta",),
    "prequential": (),
}

# excluded from the report echo: they never change results
NOT_ECHOED = {"jobs", "out"}


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Command
    rule: Optional[str] = None
    gamma: Optional[float] = None
    psi: Optional[str] = None
    family: Optional[str] = None
    theta: Optional[List[float]] = None
    start: Optional[List[float]] = None

    data: Optional[Path] = None
    distribution: Optional[Path] = None
    models: Optional[Path] = None

    nu: Optional[int] = Field(None, ge=1)
    sigma2: float = Field(1.0, gt=0)
    seed: Optional[int] = Field(None, ge=0, lt=2 ** 64)
    replicates: int = Field(1, ge=1)
    size: int = Field(100, ge=1)
    study: Optional[Study] = None
    out: Optional[Path] = None
    jobs: Optional[int] = Field(None, ge=1)

    grid_lo: Optional[float] = None
    grid_hi: Optional[float] = None
    grid_points: Optional[int] = Field(None, ge=3)

    support_size: int = Field(2, ge=2, le=4)
    grid_step: float = Field(0.01, gt=0, le=0.05)
    restrict_tridiagonal: bool = False
    constrain: bool = False
    from_chain: bool = False
    oracles: bool = False

    @field_validator("data", "distribution", "models")
    @classmethod
    def _file_exists(cls, value: Optional[Path]) -> Optional[Path]:
        if value is not None and not value.is_file():
            raise ValueError(f"file not found: {value}")
        return value

    @model_validator(mode="after")
    def _check_command(self) -> "RunConfig":
        missing = [name for name in REQUIRED[self.command] if getattr(self, name) is None]
        if self.command == "simulate" and self.study is not None:
            missing += [name for name in STUDY_REQUIRED[self.study] if getattr(self, name) is None]
        if missing:
            flags = ", ".join("--" + m.replace("_", "-") for m in missing)
            raise ValueError(f"{self.command} needs {flags}")
        if self.command == "score" and self.distribution is None and (self.family is None or self.theta is None):
            raise ValueError("score needs --distribution, or --family with --theta")
        if self.command == "wishart-fit" and self.nu is None and not self.from_chain:
            raise ValueError("wishart-fit needs --nu unless --from-chain is given")
        given = [v is not None for v in (self.grid_lo, self.grid_hi)]
        if any(given) and not all(given):
            raise ValueError("--grid-lo and --grid-hi go together")
        if all(given) and not self.grid_lo < self.grid_hi:
            raise ValueError(f"--grid-lo {self.grid_lo} must be below --grid-hi {self.grid_hi}")
        return self

    @classmethod
    def build(cls, **values: Any) -> "RunConfig":
        """Validate, turning pydantic's error into a SpecificationError."""
        try:
            return cls(**values)
        except ValidationError as e:
            raise SpecificationError(_describe(e))

    def grid(self, default_points: int = 1601) -> Optional[Grid1D]:
        if self.grid_lo is None:
            return None
        return Grid1D(self.grid_lo, self.grid_hi, self.grid_points or default_points)

    def seed_spec(self) -> SeedSpec:
        if self.seed is None:
            raise SpecificationError(f"{self.command} needs --seed or SCORELAB_SEED")
        return SeedSpec(self.seed)

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude=NOT_ECHOED)


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        where = ".".join(str(p) for p in item.get("loc", ()))
        message = str(item.get("msg", "invalid value"))
        parts.append(f"{where}: {message}" if where else message)
    return "; ".join(parts)


# model families a design-matrix entry can name
MODEL_FAMILIES = ("normal-linear",)


class ModelEntrySpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str = Field(min_length=1)
    design: Path
    family: str = "normal-linear"
    prior: Union[str, Dict[str, Any]] = "flat"
    sigma2: Optional[float] = Field(None, gt=0)

    @field_validator("family")
    @classmethod
    def _known_family(cls, value: str) -> str:
        name = value.strip().lower().replace("_", "-")
        if name not in MODEL_FAMILIES:
            raise ValueError(f"unknown model family {value!r}, expected one of {list(MODEL_FAMILIES)}")
        return name


class ModelSetFile(BaseModel):
    """
    {"models": [{"id": "m1", "family": "normal-linear", "design": "x1.csv", "prior": "flat", "sigma2": 1.0}, ...]}

    Design paths are relative to the model-set file. `family` defaults to normal-linear, the only
    family with a design matrix. `prior` is "flat",
    {"normal": {"mean": [...], "cov": [[...]]}} or {"point": [...]}.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    models: List[ModelEntrySpec] = Field(min_length=1)

    @field_validator("models")
    @classmethod
    def _unique_ids(cls, models: List[ModelEntrySpec]) -> List[ModelEntrySpec]:
        seen = set()
        for m in models:
            if m.id in seen:
                raise ValueError(f"duplicate model id {m.id!r}")
            seen.add(m.id)
        return models

    @classmethod
    def load(cls, path: Path) -> "ModelSetFile":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError) as e:
            raise SchemaError(f"{path}: cannot read model set ({e})")
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: not valid JSON ({e.msg})", row=e.lineno)
        try:
            parsed = cls.model_validate(raw)
        except ValidationError as e:
            raise SchemaError(f"{path}: {_describe(e)}")
        resolved = []
        for m in parsed.models:
            design = m.design if m.design.is_absolute() else path.parent / m.design
            if not design.is_file():
                raise SchemaError(f"{path}: design file for model {m.id!r} not found: {design}")
            resolved.append(m.model_copy(update={"design": design}))
        return cls(models=resolved)
