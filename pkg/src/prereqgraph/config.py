"""Run configuration: a flat text file of 'key = value' lines.

Lines starting with '#' are comments. Paths are resolved relative to the
config file's directory so a run directory can carry a self-contained
snapshot.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from pathlib import Path

from prereqgraph.errors import ParseError, ValidationError

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


@dataclass(frozen=True)
class RunConfig:
    concepts: str = ""
    annotations: str = ""
    resources: str = ""
    embeddings: str = ""
    out_dir: str = "runs"
    feature: str = "tfidf"          # tfidf | dense
    encoder: str = "rgcn"           # rgcn | gcn
    variational: bool = True
    mode: str = "unsupervised"      # unsupervised | semisupervised
    supervision_fraction: float = 0.0
    hidden_dim: int = 32
    latent_dim: int = 16
    epochs: int = 200
    lr: float = 0.01
    edge_threshold: float = 0.0
    train_fraction: float = 0.9
    eval_threshold: float = 0.5
    diagonal_decoder: bool = False
    symmetric_normalize: bool = True
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)

    def validate(self):
        if self.feature not in ("tfidf", "dense"):
            raise ValidationError(f"feature must be tfidf or dense, got {self.feature!r}")
        if self.feature == "dense" and not self.embeddings:
            raise ValidationError("dense features require an embeddings path")
        if self.mode not in ("unsupervised", "semisupervised"):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.mode == "unsupervised" and self.supervision_fraction > 0:
            raise ValidationError(
                "unsupervised mode forbids supervision_fraction > 0"
            )
        if self.encoder not in ("rgcn", "gcn"):
            raise ValidationError(f"unknown encoder {self.encoder!r}")
        if not self.seeds:
            raise ValidationError("at least one seed is required")
        return self


def _parse_value(key: str, raw: str):
    field_types = RunConfig.__dataclass_fields__
    if key not in field_types:
        raise ParseError(f"unknown config key {key!r}")
    kind = field_types[key].type
    if kind == "bool":
        if raw.lower() not in _BOOL:
            raise ParseError(f"{key}: expected a boolean, got {raw!r}")
        return _BOOL[raw.lower()]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if key == "seeds":
        return tuple(int(s) for s in raw.replace(",", " ").split())
    return raw


def load_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file {path} does not exist")
    values: dict = {}
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(f"{path}:{line_no}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        try:
            values[key] = _parse_value(key, raw)
        except (ValueError, ParseError) as exc:
            raise ParseError(f"{path}:{line_no}: {exc}") from exc
    config = RunConfig(**values)
    if overrides:
        config = replace(config, **overrides)

    # resolve paths relative to the config file location
    def resolve(p: str) -> str:
        return str((path.parent / p).resolve()) if p else p

    config = replace(
        config,
        concepts=resolve(config.concepts),
        annotations=resolve(config.annotations),
        resources=resolve(config.resources),
        embeddings=resolve(config.embeddings),
        out_dir=resolve(config.out_dir),
    )
    return config.validate()


def save_config(config: RunConfig, path):
    lines = []
    for key, value in asdict(config).items():
        if key == "seeds":
            value = ",".join(str(s) for s in value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
