"""Command-line front end.

Every stage reads its inputs from files written by earlier stages, so a
later stage can be rerun alone (e.g. ``analyze`` after editing spring
stiffness, without repeating ``formfind``)::

    tforge all --config run.json --out build/
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import clearance, export, formfind, scaffold, structural
from .model import Configuration, MaterialError, TopologyError, load_material, load_topology

log = logging.getLogger("tforge")

STAGES = ("formfind", "analyze", "modes", "clearance", "scaffold", "export")


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"stage '{stage}' failed: {exc}")
        self.stage = stage


@dataclass
class RunConfig:
    topology: Path
    material: Path
    out: Path
    seed: int = 0
    formfind: dict = field(default_factory=dict)
    supports: list[int] | None = None
    modal_supports: list[int] = field(default_factory=list)
    clearance_threshold: float = 0.5
    scaffold: dict = field(default_factory=dict)
    modes: dict = field(default_factory=dict)
    export: dict = field(default_factory=dict)
    max_sag_in: float | None = None
    frequency_range_hz: list[float] | None = None


def _parse_supports(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--supports expects comma-separated vertex labels, got {text!r}") from exc


def load_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    base = Path.cwd()
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        base = path.parent
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    def resolve(key: str) -> Path:
        if key not in data:
            raise ConfigError(f"config is missing '{key}'")
        p = Path(data[key])
        return p if p.is_absolute() else base / p

    out = args.out or (str(resolve("out")) if "out" in data else None) or os.environ.get("TFORGE_OUT")
    if not out:
        raise ConfigError("no output directory: pass --out, set 'out' in the config, or set TFORGE_OUT")
    cfg = RunConfig(
        topology=resolve("topology"),
        material=resolve("material"),
        out=Path(out),
        **{k: v for k, v in data.items() if k not in ("topology", "material", "out")},
    )
    for p in (cfg.topology, cfg.material):
        if not p.is_file():
            raise ConfigError(f"input file not found: {p}")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.supports is not None:
        cfg.supports = _parse_supports(args.supports)
    if args.threshold is not None:
        cfg.clearance_threshold = args.threshold
    if args.roll_scan:
        cfg.scaffold = {**cfg.scaffold, "roll_scan": True}
    if args.exhaustive_budget is not None:
        cfg.scaffold = {**cfg.scaffold, "exhaustive_budget": args.exhaustive_budget}
    if args.tension_only:
        cfg.formfind = {**cfg.formfind, "tension_only": True}
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {cfg.out}: {exc}") from exc
    if not os.access(cfg.out, os.W_OK):
        raise ConfigError(f"output directory is not writable: {cfg.out}")
    return cfg


class Pipeline:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        try:
            self.topo = load_topology(cfg.topology)
            self.mat = load_material(cfg.material)
        except (TopologyError, MaterialError) as exc:
            raise ConfigError(str(exc)) from exc

    def path(self, name: str) -> Path:
        return self.cfg.out / name

    def _write(self, name: str, text: str) -> None:
        self.path(name).write_text(text)
        log.info("wrote %s", self.path(name))

    def _write_json(self, name: str, obj) -> None:
        self._write(name, json.dumps(obj, indent=2) + "\n")

    def load_equilibrium(self) -> Configuration:
        p = self.path("equilibrium.json")
        if not p.is_file():
            raise FileNotFoundError(f"{p} not found; run 'formfind' first")
        return Configuration(np.array(json.loads(p.read_text())["coords"], dtype=float))

    def formfind(self) -> None:
        ff = self.cfg.formfind
        opts = formfind.FormFindOptions(
            restarts=int(ff.get("restarts", 8)),
            max_iters=int(ff.get("max_iters", 10000)),
            grad_tol=ff.get("grad_tol"),
            seed=self.cfg.seed,
            tension_only=bool(ff.get("tension_only", False)),
        )
        res = formfind.find_equilibrium(self.topo, self.mat, opts)
        self._write_json("equilibrium.json", res.to_dict())

    def default_supports(self, config: Configuration) -> list[int]:
        """Three lowest vertices (non-collinear) in the scaffold orientation."""
        axis = scaffold.longitudinal_axis(scaffold.centroids(config, self.topo))
        X = scaffold.reorient(config, self.topo, axis, roll_scan=bool(self.cfg.scaffold.get("roll_scan", False)))
        order = [int(i) + 1 for i in np.argsort(X.coords[:, 2], kind="stable")]
        chosen = order[:2]
        for v in order[2:]:
            pts = X.coords[np.array(chosen + [v]) - 1]
            if np.linalg.matrix_rank(pts - pts[0], tol=1e-9 * self.mat.strut_length) == 2:
                return chosen + [v]
        raise structural.SingularStructureError("all vertices are collinear")

    def analyze(self) -> None:
        config = self.load_equilibrium()
        supports = self.cfg.supports or self.default_supports(config)
        sag = structural.static_sag(config, self.topo, self.mat, supports)
        sag_out = sag.to_dict()
        if self.cfg.max_sag_in is not None:
            sag_out["max_sag_limit_in"] = self.cfg.max_sag_in
            sag_out["acceptable"] = bool(sag.max_sag <= self.cfg.max_sag_in)
        self._write_json("sag.json", sag_out)
        modal = structural.natural_frequencies(config, self.topo, self.mat, self.cfg.modal_supports)
        self._write_json("modal.json", modal.to_list())
        rng = self.cfg.frequency_range_hz
        if rng is not None:
            elastic = modal.frequencies[modal.frequencies > 0]
            inside = (elastic >= rng[0]) & (elastic <= rng[1])
            log.warning("%d of %d elastic modes fall inside the motor range %s Hz",
                        int(inside.sum()), elastic.size, rng)

    def modes(self) -> None:
        config = self.load_equilibrium()
        modal = structural.natural_frequencies(config, self.topo, self.mat, self.cfg.modal_supports)
        m = self.cfg.modes
        idx = m.get("mode")
        if idx is None:
            nz = np.flatnonzero(modal.frequencies > 0)
            idx = int(nz[0]) if nz.size else 0
        frames = structural.mode_frames(config, modal, int(idx), float(m.get("amplitude", 0.5)),
                                        int(m.get("n_frames", 24)))
        self._write("modes.csv", structural.frames_csv(frames))

    def clearance(self) -> None:
        config = self.load_equilibrium()
        rep = clearance.clearance_report(config, self.topo, self.cfg.clearance_threshold)
        for v in rep.violations:
            log.warning("struts %d and %d are %.4f in apart (threshold %.4f)",
                        v.i, v.j, v.distance, rep.threshold)
        self._write("clearance.csv", rep.to_csv())

    def scaffold(self) -> None:
        config = self.load_equilibrium()
        s = self.cfg.scaffold
        opts = scaffold.ScaffoldOptions(
            roll_scan=bool(s.get("roll_scan", False)),
            margin=float(s.get("margin", 0.5)),
            exhaustive_budget=int(s.get("exhaustive_budget", 3 ** 13)),
            restarts=int(s.get("restarts", 20)),
            seed=self.cfg.seed,
            attach_from=s.get("attach_from", "low"),
        )
        plan = scaffold.build_plan(config, self.topo, opts)
        self._write_json("plan.json", plan.to_dict())
        self._write("report.txt", export.write_report(plan))

    def export(self) -> None:
        p = self.path("plan.json")
        if not p.is_file():
            raise FileNotFoundError(f"{p} not found; run 'scaffold' first")
        plan = scaffold.ScaffoldPlan.from_dict(json.loads(p.read_text()))
        e = self.cfg.export
        base = export.BasePlateSpec.from_plan(plan, margin=float(e.get("base_margin", 1.0)))
        self._write("base.dxf", export.base_dxf(base))
        prof = export.StrutProfileSpec(self.mat.strut_length, body_width=float(e.get("strut_body_width", 0.5)))
        self._write("strut.dxf", export.strut_dxf(prof))
        self._write("posts.csv", export.post_cutlist(plan))

    def run(self, stage: str) -> None:
        stages = STAGES if stage == "all" else (stage,)
        for name in stages:
            log.info("running %s", name)
            try:
                getattr(self, name)()
            except Exception as exc:  # noqa: BLE001 - reported with the stage name
                raise StageError(name, exc) from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration JSON")
    common.add_argument("--out", help="output directory (fallback: $TFORGE_OUT)")
    common.add_argument("--seed", type=int, help="seed for all randomized stages")
    common.add_argument("--supports", help="comma-separated vertex labels held fixed for sag")
    common.add_argument("--threshold", type=float, help="strut clearance threshold, inches")
    common.add_argument("--roll-scan", action="store_true", help="roll about the long axis to minimize height")
    common.add_argument("--exhaustive-budget", type=int, help="max 3^n assignments searched exactly")
    common.add_argument("--tension-only", action="store_true", help="springs carry no compression")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tforge", description="Tensegrity form-finding and scaffold planning")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "formfind": "find the equilibrium shape (equilibrium.json)",
        "analyze": "static sag and natural frequencies (sag.json, modal.json)",
        "modes": "mode-shape animation frames (modes.csv)",
        "clearance": "strut-to-strut distances (clearance.csv)",
        "scaffold": "post layout and strut angles (plan.json, report.txt)",
        "export": "laser-cut files and post cut list (base.dxf, strut.dxf, posts.csv)",
        "all": "every stage in order",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        pipe = Pipeline(cfg)
    except (ConfigError, TypeError) as exc:
        print(f"tforge: config error: {exc}", file=sys.stderr)
        return 2
    try:
        pipe.run(args.command)
    except StageError as exc:
        print(f"tforge: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
