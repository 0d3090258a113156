"""Assembly report, laser-cut DXF files and the post cut list."""
from __future__ import annotations

import io
from dataclasses import dataclass

from .scaffold import FRACTIONS, POST_ALLOWANCE, ScaffoldPlan

REPORT_FIELDS = ("pt1", "pt2", "maxdis", "xpost", "ypost", "zpost", "thetael", "thetaaz", "jsave")

POST_HOLE_DIAMETER = 0.25
STRUT_HOLE_DIAMETER = 0.125
STRUT_END_SIZE = 0.25
DRILL_FROM_TOP = 0.25


class ExportError(ValueError):
    pass


def _f4(x: float) -> str:
    s = f"{x:.4f}"
    return "0.0000" if s == "-0.0000" else s


def write_report(plan: ScaffoldPlan) -> str:
    """Plain-text report, one value per line, sections in a fixed order."""
    cols = {
        "xpost": [_f4(v) for v in plan.column("xpost")],
        "ypost": [_f4(v) for v in plan.column("ypost")],
        "zpost": [_f4(v) for v in plan.column("zpost")],
        "thetael": [_f4(v) for v in plan.column("theta_el")],
        "thetaaz": [_f4(v) for v in plan.column("theta_az")],
        "jsave": [str(v) for v in plan.column("jsave")],
    }
    out = [f"pt1 =\n{plan.axis.pt1}\n", f"pt2 =\n{plan.axis.pt2}\n", f"maxdis =\n{_f4(plan.axis.maxdis)}\n"]
    for name in REPORT_FIELDS[3:]:
        out.append(f"{name} =\n" + "".join(v + "\n" for v in cols[name]))
    table = ["endpoint z =", "strut low_vertex z_low high_vertex z_high"]
    for p in plan.placements:
        table.append(f"{p.strut} {p.low_vertex} {_f4(p.endpoint_z[0])} {p.high_vertex} {_f4(p.endpoint_z[1])}")
    out.append("\n".join(table) + "\n")
    return "\n".join(out)


def parse_report(text: str) -> dict:
    """Inverse of :func:`write_report`: section name -> list of numbers (or table rows)."""
    sections: dict = {}
    for block in text.strip().split("\n\n"):
        lines = block.strip().splitlines()
        name = lines[0].rstrip(" =")
        if name == "endpoint z":
            sections[name] = [tuple(float(x) for x in ln.split()) for ln in lines[2:]]
        else:
            sections[name] = [int(v) if name in ("pt1", "pt2", "jsave") else float(v) for v in lines[1:]]
    return sections


# -- DXF -------------------------------------------------------------------

def _pair(code: int, value) -> str:
    return f"{code:>3}\n{value}\n"


def _dxf_document(entities: list[str]) -> str:
    out = [
        _pair(0, "SECTION"), _pair(2, "HEADER"),
        _pair(9, "$ACADVER"), _pair(1, "AC1009"),
        _pair(9, "$INSUNITS"), _pair(70, 1),
        _pair(0, "ENDSEC"),
        _pair(0, "SECTION"), _pair(2, "ENTITIES"),
    ]
    out += entities
    out += [_pair(0, "ENDSEC"), _pair(0, "EOF")]
    return "".join(out)


def _polyline(points: list[tuple[float, float]], layer: str = "CUT") -> str:
    parts = [_pair(0, "POLYLINE"), _pair(8, layer), _pair(66, 1), _pair(70, 1),
             _pair(10, _f4(0.0)), _pair(20, _f4(0.0)), _pair(30, _f4(0.0))]
    for x, y in points:
        parts += [_pair(0, "VERTEX"), _pair(8, layer), _pair(10, _f4(x)), _pair(20, _f4(y)), _pair(30, _f4(0.0))]
    parts.append(_pair(0, "SEQEND"))
    return "".join(parts)


def _circle(x: float, y: float, diameter: float, layer: str = "CUT") -> str:
    return "".join([_pair(0, "CIRCLE"), _pair(8, layer), _pair(10, _f4(x)), _pair(20, _f4(y)),
                    _pair(30, _f4(0.0)), _pair(40, f"{diameter / 2:.6f}")])


@dataclass(frozen=True)
class BasePlateSpec:
    """Rectangular plate with one through hole per post.

    ``origin`` is the lower-left corner in plan coordinates, so hole
    positions equal the post (x, y) directly.
    """

    width: float
    height: float
    holes: tuple[tuple[float, float, float], ...]
    origin: tuple[float, float] = (0.0, 0.0)
    thickness: float = 0.25

    @classmethod
    def from_plan(cls, plan: ScaffoldPlan, margin: float = 1.0,
                  hole_diameter: float = POST_HOLE_DIAMETER) -> "BasePlateSpec":
        xs, ys = plan.column("xpost"), plan.column("ypost")
        x0, y0 = min(xs) - margin, min(ys) - margin
        return cls(
            width=max(xs) - min(xs) + 2 * margin,
            height=max(ys) - min(ys) + 2 * margin,
            holes=tuple((x, y, hole_diameter) for x, y in zip(xs, ys)),
            origin=(x0, y0),
        )


def base_dxf(base: BasePlateSpec) -> str:
    x0, y0 = base.origin
    x1, y1 = x0 + base.width, y0 + base.height
    for x, y, dia in base.holes:
        if not (x0 < x < x1 and y0 < y < y1):
            raise ExportError(f"hole at ({x:.4f}, {y:.4f}) lies outside the base outline")
    ents = [_polyline([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])]
    ents += [_circle(x, y, dia) for x, y, dia in base.holes]
    return _dxf_document(ents)


@dataclass(frozen=True)
class StrutProfileSpec:
    length: float
    body_width: float = 0.5
    end_size: float = STRUT_END_SIZE
    hole_diameter: float = STRUT_HOLE_DIAMETER

    def __post_init__(self):
        if self.length <= 2 * self.end_size:
            raise ExportError("strut is too short for its square ends")
        if self.body_width <= max(self.end_size, self.hole_diameter):
            raise ExportError("strut body must be wider than its ends and holes")

    def outline(self) -> list[tuple[float, float]]:
        L, e, hw, he = self.length, self.end_size, self.body_width / 2, self.end_size / 2
        return [(0, -he), (e, -he), (e, -hw), (L - e, -hw), (L - e, -he), (L, -he),
                (L, he), (L - e, he), (L - e, hw), (e, hw), (e, he), (0, he)]

    def hole_centers(self) -> list[tuple[float, float]]:
        return [(f * self.length, 0.0) for f in FRACTIONS]


def strut_dxf(profile: StrutProfileSpec) -> str:
    ents = [_polyline(profile.outline())]
    ents += [_circle(x, y, profile.hole_diameter) for x, y in profile.hole_centers()]
    return _dxf_document(ents)


def scan_dxf(text: str) -> dict:
    """Minimal reader for the files written here: circles and polyline vertices."""
    lines = text.splitlines()
    pairs = [(int(lines[i]), lines[i + 1].strip()) for i in range(0, len(lines) - 1, 2)]
    circles, polylines, sections = [], [], []
    cur = None
    for idx, (code, val) in enumerate(pairs):
        if code != 0:
            continue
        if val in ("SECTION", "ENDSEC", "EOF"):
            sections.append(val)
        group = {}
        for c2, v2 in pairs[idx + 1:]:
            if c2 == 0:
                break
            group.setdefault(c2, v2)
        if val == "CIRCLE":
            circles.append((float(group[10]), float(group[20]), float(group[40])))
        elif val == "POLYLINE":
            cur = []
            polylines.append(cur)
        elif val == "VERTEX" and cur is not None:
            cur.append((float(group[10]), float(group[20])))
        elif val == "SEQEND":
            cur = None
    return {"circles": circles, "polylines": polylines, "sections": sections}


def post_cutlist(plan: ScaffoldPlan) -> str:
    buf = io.StringIO()
    buf.write("strut,length_in,drill_from_top_in,azimuth_deg\n")
    for p in plan.placements:
        buf.write(f"{p.strut},{_f4(p.zpost + POST_ALLOWANCE)},{_f4(DRILL_FROM_TOP)},{_f4(p.theta_az)}\n")
    return buf.getvalue()
