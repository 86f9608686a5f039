"""Manifest files describing a (2,3) structure on one chart.

Format (INI-style, '#' starts a comment line)::

    [manifold]
    name = heisenberg
    coords = x1, x2, x3
    seed = 24301          # optional
    tol = 1e-9            # optional

    [frame]
    X1 = 1, 0, -(1/2)*x2
    X2 = 0, 1, (1/2)*x1

    [domain]
    x1 = -1..1
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import expr as ex
from .geometry import Chart, SubRiemannianStructure, VectorField, build_structure

SECTIONS = ("manifold", "frame", "domain")
BUNDLED_DIR = "manifests"


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class Manifest:
    name: str
    coords: tuple[str, str, str]
    X1: tuple[str, str, str]
    X2: tuple[str, str, str]
    domain: tuple[tuple[float, float], ...]
    seed: int = ex.DEFAULT_SEED
    tol: float = ex.DEFAULT_TOL
    source: str = "<string>"

    def chart(self) -> Chart:
        return Chart(self.coords, self.domain)

    def build(self, seed: int | None = None, tol: float | None = None) -> SubRiemannianStructure:
        chart = self.chart()
        try:
            X1 = VectorField(tuple(chart.parse(t) for t in self.X1))
            X2 = VectorField(tuple(chart.parse(t) for t in self.X2))
        except ex.ParseError as exc:
            raise ManifestError(f"{self.source}: [frame]: {exc}") from exc
        return build_structure(chart, X1, X2, name=self.name,
                               seed=self.seed if seed is None else seed,
                               tol=self.tol if tol is None else tol)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
        empty_lines_in_values=False,
        strict=True,
    )
    cp.optionxform = str  # X1 and x1 are different keys
    return cp


def _triple(text: str, what: str) -> tuple[str, str, str]:
    parts = tuple(t.strip() for t in text.split(","))
    if len(parts) != 3 or not all(parts):
        raise ManifestError(f"{what} needs three comma-separated entries, got {text!r}")
    return parts


def _interval(text: str, coord: str) -> tuple[float, float]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise ManifestError(f"domain for {coord} must look like lo..hi, got {text!r}")
    try:
        a, b = float(lo), float(hi)
    except ValueError:
        raise ManifestError(f"domain for {coord} has non-numeric bounds: {text!r}") from None
    if not a < b:
        raise ManifestError(f"domain for {coord} is empty: {text!r}")
    return a, b


def parse_manifest(text: str, source: str = "<string>") -> Manifest:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ManifestError(str(exc)) from exc
    unknown = [s for s in cp.sections() if s not in SECTIONS]
    if unknown:
        raise ManifestError(f"{source}: unknown section(s) {unknown}")
    for s in ("manifold", "frame"):
        if not cp.has_section(s):
            raise ManifestError(f"{source}: missing [{s}] section")
    m = cp["manifold"]
    extra = set(m) - {"name", "coords", "seed", "tol"}
    if extra:
        raise ManifestError(f"{source}: unknown [manifold] key(s) {sorted(extra)}")
    if "coords" not in m:
        raise ManifestError(f"{source}: [manifold] needs coords")
    coords = _triple(m["coords"], "coords")
    for c in coords:
        if not c.isidentifier() or c in ex.FUNCTIONS:
            raise ManifestError(f"{source}: bad coordinate name {c!r}")
    if len(set(coords)) != 3:
        raise ManifestError(f"{source}: coordinate names must be distinct")
    f = cp["frame"]
    if set(f) != {"X1", "X2"}:
        raise ManifestError(f"{source}: [frame] must define exactly X1 and X2, got {sorted(f)}")
    domain = {c: (-1.0, 1.0) for c in coords}
    if cp.has_section("domain"):
        for key, value in cp["domain"].items():
            if key not in domain:
                raise ManifestError(f"{source}: [domain] names unknown coordinate {key!r}")
            domain[key] = _interval(value, key)
    try:
        seed = int(m.get("seed", str(ex.DEFAULT_SEED)), 0)
        tol = float(m.get("tol", str(ex.DEFAULT_TOL)))
    except ValueError as exc:
        raise ManifestError(f"{source}: {exc}") from None
    if tol <= 0:
        raise ManifestError(f"{source}: tol must be positive")
    man = Manifest(
        name=m.get("name", "manifold").strip(),
        coords=coords,
        X1=_triple(f["X1"], "X1"),
        X2=_triple(f["X2"], "X2"),
        domain=tuple(domain[c] for c in coords),
        seed=seed,
        tol=tol,
        source=source,
    )
    # surface expression errors at load time
    chart = man.chart()
    for key in ("X1", "X2"):
        for t in getattr(man, key):
            try:
                chart.parse(t)
            except ex.ParseError as exc:
                raise ManifestError(f"{source}: [frame] {key}: {exc}") from exc
    return man


def bundled_names() -> list[str]:
    root = resources.files(__package__) / BUNDLED_DIR
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def load_manifest(path_or_name: str | Path) -> Manifest:
    """Read a manifest file, or a bundled one by name (e.g. ``heisenberg``)."""
    p = Path(path_or_name)
    if p.is_file():
        try:
            text = p.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ManifestError(f"cannot read {p}: {exc}") from exc
        return parse_manifest(text, source=str(p))
    name = str(path_or_name)
    if name in bundled_names():
        res = resources.files(__package__) / BUNDLED_DIR / f"{name}.ini"
        return parse_manifest(res.read_text(encoding="utf-8"), source=f"bundled:{name}")
    raise ManifestError(f"no manifest file or bundled manifold named {name!r} "
                        f"(bundled: {', '.join(bundled_names())})")
