"""JSON serialisation of instances, mechanisms and profile instances.

Floats are written with Python's shortest round-trip repr, so a load after a
dump reproduces every value bit for bit.  Tuple signals are stored as lists.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .auctions import MultiBidderInstance, MultiMechanism
from .core import Mode, SignalPricingInstance, ValueGrid
from .errors import InvalidConfig
from .mechanisms import Mechanism, _dense


def _signal_out(s):
    return list(s) if isinstance(s, tuple) else s


def _signal_in(s):
    return tuple(s) if isinstance(s, list) else s


def instance_to_dict(inst: SignalPricingInstance) -> dict:
    return {
        "kind": "signal_instance",
        "mode": inst.mode.value,
        "values": inst.values.tolist(),
        "widths": inst.grid.widths.tolist(),
        "signals": [_signal_out(s) for s in inst.signals],
        "pmf": inst.mass.tolist(),
        "meta": dict(inst.meta),
    }


def instance_from_dict(d: dict) -> SignalPricingInstance:
    try:
        grid = ValueGrid(np.asarray(d["values"], float), np.asarray(d["widths"], float))
        signals = [_signal_in(s) for s in d["signals"]]
        pmf = np.asarray(d["pmf"], float).reshape(len(grid), len(signals))
        return SignalPricingInstance(grid, tuple(signals), pmf, Mode(d.get("mode", "mass")),
                                     meta=d.get("meta", {}))
    except KeyError as exc:
        raise InvalidConfig(f"instance JSON is missing {exc}") from None


def mechanism_to_dict(mech: Mechanism) -> dict:
    return {"kind": "mechanism", "x": _dense(mech.x).tolist(), "p": _dense(mech.p).tolist()}


def mechanism_from_dict(d: dict) -> Mechanism:
    return Mechanism(np.asarray(d["x"], float), np.asarray(d["p"], float))


def profile_instance_to_dict(minst: MultiBidderInstance) -> dict:
    """``pmf`` is flattened in C order: bidder 1's index varies slowest."""
    return {
        "kind": "profile_instance",
        "n": minst.n,
        "mode": minst.mode.value,
        "grids": [{"values": g.points.tolist(), "widths": g.widths.tolist()} for g in minst.grids],
        "pmf": minst.pmf.ravel().tolist(),
        "meta": dict(minst.meta),
    }


def profile_instance_from_dict(d: dict) -> MultiBidderInstance:
    grids = tuple(ValueGrid(np.asarray(g["values"], float), np.asarray(g["widths"], float)) for g in d["grids"])
    if int(d.get("n", len(grids))) != len(grids):
        raise InvalidConfig("'n' disagrees with the number of grids")
    pmf = np.asarray(d["pmf"], float).reshape(tuple(len(g) for g in grids))
    return MultiBidderInstance(grids, pmf, Mode(d.get("mode", "mass")), meta=d.get("meta", {}))


def multi_mechanism_to_dict(mech: MultiMechanism) -> dict:
    return {"kind": "multi_mechanism", "x": mech.x.tolist(), "p": mech.p.tolist()}


def multi_mechanism_from_dict(d: dict) -> MultiMechanism:
    return MultiMechanism(np.asarray(d["x"], float), np.asarray(d["p"], float))


def load_any(path: str | Path):
    """Load an instance, profile instance or mechanism by its ``kind`` tag."""
    d = json.loads(Path(path).read_text())
    kind = d.get("kind")
    if kind == "profile_instance" or (kind is None and "grids" in d):
        return profile_instance_from_dict(d)
    if kind == "signal_instance" or (kind is None and "signals" in d):
        return instance_from_dict(d)
    if kind == "multi_mechanism":
        return multi_mechanism_from_dict(d)
    if kind == "mechanism" or (kind is None and "x" in d):
        return mechanism_from_dict(d)
    raise InvalidConfig(f"{path}: unrecognised JSON document")


def dump_json(obj: dict, path: str | Path | None) -> str:
    text = json.dumps(obj, indent=2, default=_default)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")
