import json
import logging
from fractions import Fraction
from pathlib import Path

from src.bounds_examples import make_example_map
from src.errors import ConfigError, InvalidMapSpec
from src.map_core import Branch, PiecewiseMap
from src.numeric import DEFAULT_BITS, Enclosure, interval_context, parse_scalar
from src.observables import PiecewiseSmooth
from src.orbits import DEFAULT_DEPTH
from src.polynomial import Polynomial, RationalFunction
from src.transfer import Weight

BUILTIN_MAPS = ("doubling", "tent", "beta:<p/q>", "beta:golden", "example:<m>:<itinerary>", "two-orbit")
TWO_ORBIT_WEIGHTS = ("1/3", "1/3", "1/2", "1/2")


def _doubling():
    return PiecewiseMap.from_breakpoints(
        [Fraction(0), Fraction(1, 2), Fraction(1)], [[0, 2], [-1, 2]], name="doubling"
    )


def _tent():
    return PiecewiseMap.from_breakpoints(
        [Fraction(0), Fraction(1, 2), Fraction(1)], [[0, 2], [2, -2]], name="tent"
    )


def beta_map(beta) -> PiecewiseMap:
    """x -> beta x mod 1 for rational beta > 1."""
    beta = Fraction(beta)
    if beta <= 1:
        raise InvalidMapSpec(f"a beta-map needs beta > 1, got {beta}", beta=beta)
    full = int(beta) if beta.denominator == 1 else int(beta) + 1
    breakpoints = [Fraction(i) / beta for i in range(full)] + [Fraction(1)]
    polys = [Polynomial([-i, beta]) for i in range(full)]
    return PiecewiseMap.from_breakpoints(breakpoints, polys, [1] * full, name=f"beta={beta}")


def golden_beta_map(bits: int = DEFAULT_BITS) -> PiecewiseMap:
    """
    x -> beta x mod 1 with beta the golden mean, in interval mode. Orbit points
    that agree to within 2^(-bits/2) are identified, which is how the orbit of
    1 is seen to close.
    """
    ctx = interval_context(bits)
    beta = Enclosure((1 + ctx.sqrt(5)) / 2, bits)
    c = 1 / beta
    branches = (
        Branch(Fraction(0), c, Polynomial([0, beta]), 1),
        Branch(c, Fraction(1), Polynomial([-1, beta]), 1, local=Polynomial([0, beta])),
    )
    return PiecewiseMap(branches, name="beta=golden", coincidence_width=Fraction(1, 2 ** (bits // 2)))


def two_orbit_map() -> PiecewiseMap:
    """
    Two copies of the 3/2 beta-map on [0,1/2] and [1/2,1]. The orbits of 1/2^-
    and 1^- never meet, so distinct weights on the halves give distinct Lambdas.
    """
    h = Fraction(1, 2)
    breakpoints = [Fraction(0), Fraction(1, 3), h, Fraction(5, 6), Fraction(1)]
    slope = Fraction(3, 2)
    polys = [
        Polynomial([0, slope]),
        Polynomial([-h, slope]),
        Polynomial([h - slope * h, slope]),
        Polynomial([h - slope * Fraction(5, 6), slope]),
    ]
    return PiecewiseMap.from_breakpoints(breakpoints, polys, [1, 1, 1, 1], name="two-orbit")


def load_builtin(name: str, precision_bits: int | None = None, depth: int = DEFAULT_DEPTH) -> PiecewiseMap:
    parts = name.split(":", 2)
    kind = parts[0]
    if kind == "doubling":
        return _doubling()
    if kind == "tent":
        return _tent()
    if kind == "two-orbit":
        return two_orbit_map()
    if kind == "beta":
        if len(parts) < 2:
            raise ConfigError("builtin beta needs a value, e.g. builtin:beta:3/2")
        if parts[1] == "golden":
            return golden_beta_map(precision_bits or DEFAULT_BITS)
        try:
            return beta_map(Fraction(parts[1]))
        except ValueError as e:
            raise ConfigError(f"cannot read beta '{parts[1]}': {e}") from e
    if kind == "example":
        if len(parts) < 2:
            raise ConfigError("builtin example needs m, e.g. builtin:example:10:thue-morse")
        itinerary = parts[2] if len(parts) > 2 else "thue-morse"
        return make_example_map(int(parts[1]), itinerary, precision_bits, depth).map
    raise ConfigError(f"unknown builtin map '{name}'; available: {', '.join(BUILTIN_MAPS)}")


def map_from_spec(spec: dict, name: str = "map", max_degree: int = 8) -> PiecewiseMap:
    """{"breakpoints": [...], "branches": [{"coeffs": [...], "orientation": 1}, ...]}"""
    try:
        breakpoints = [parse_scalar(b) for b in spec["breakpoints"]]
        branches = spec["branches"]
        polys = [Polynomial([parse_scalar(c) for c in br["coeffs"]]) for br in branches]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise InvalidMapSpec(f"malformed map specification: {e}") from e
    orientations = None
    if all("orientation" in br for br in branches):
        orientations = [int(br["orientation"]) for br in branches]
    return PiecewiseMap.from_breakpoints(
        breakpoints, polys, orientations, name=spec.get("name", name), max_degree=max_degree
    )


def load_map(source: str, precision_bits: int | None = None, max_degree: int = 8,
             depth: int = DEFAULT_DEPTH) -> PiecewiseMap:
    """A map from 'builtin:<name>' or from a JSON file path; depth sizes the example family."""
    if source.startswith("builtin:"):
        map_ = load_builtin(source[len("builtin:"):], precision_bits, depth)
    else:
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"map file '{source}' not found; pass a JSON file or builtin:<name>")
        with open(path, "r") as f:
            try:
                spec = json.load(f)
            except json.JSONDecodeError as e:
                raise InvalidMapSpec(f"map file '{source}' is not valid JSON: {e}") from e
        map_ = map_from_spec(spec, name=path.stem, max_degree=max_degree)
    logging.info(f"Loaded map {map_.name} with {len(map_.branches)} branches")
    return map_


def _rational_piece(piece) -> RationalFunction:
    if isinstance(piece, dict):
        num = Polynomial([parse_scalar(c) for c in piece.get("num", [1])])
        den = Polynomial([parse_scalar(c) for c in piece.get("den", [1])])
        return RationalFunction(num, den)
    return RationalFunction.of(parse_scalar(piece))


def load_weight(map_: PiecewiseMap, mode: str) -> Weight:
    """
    'srb' (1/|T'|), 'constant:<c>', 'pieces:<c0>,<c1>,...' (one constant per
    branch) or 'custom:<file.json>' with {"pieces": [{"num": [...], "den": [...]}, ...]}.
    """
    if mode in ("srb", "inverse_derivative"):
        weight = Weight.srb(map_)
    elif mode.startswith("constant:"):
        weight = Weight.constant(map_, parse_scalar(mode.split(":", 1)[1]))
    elif mode.startswith("pieces:"):
        values = mode.split(":", 1)[1].split(",")
        weight = Weight.custom(map_, [_rational_piece(v) for v in values], label=mode)
    elif mode == "two-orbit":
        weight = Weight.custom(map_, [_rational_piece(v) for v in TWO_ORBIT_WEIGHTS],
                               label="pieces:" + ",".join(TWO_ORBIT_WEIGHTS))
    elif mode.startswith("custom:"):
        path = Path(mode.split(":", 1)[1])
        if not path.exists():
            raise ConfigError(f"weight file '{path}' not found")
        with open(path, "r") as f:
            spec = json.load(f)
        weight = Weight.custom(map_, [_rational_piece(p) for p in spec["pieces"]], label=f"custom:{path.stem}")
    else:
        raise ConfigError(f"unknown weight mode '{mode}'; use srb, constant:<c>, pieces:<...> or custom:<file>")
    weight.check_nonvanishing(map_)
    return weight


def observable_from_spec(spec: dict, table=None) -> PiecewiseSmooth:
    """
    {"breakpoints": [...], "pieces": [{"coeffs": [...]}, ...], "tags": [...]}.
    Declared tags are checked against the orbit table when one is given.
    """
    try:
        breakpoints = tuple(parse_scalar(b) for b in spec["breakpoints"])
        pieces = tuple(Polynomial([parse_scalar(c) for c in p["coeffs"]]) for p in spec["pieces"])
        h = PiecewiseSmooth(breakpoints, pieces)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"malformed observable specification: {e}") from e
    if table is not None:
        for tag in spec.get("tags", []):
            point = parse_scalar(tag["point"])
            j, k = tag["orbit"]
            found = table.tag(point)
            if found != ("a", j, k):
                raise ConfigError(f"observable tags {point} as a_({j},{k}) but the orbit table has {found}")
    return h


def load_observable(path, table=None) -> PiecewiseSmooth:
    with open(path, "r") as f:
        return observable_from_spec(json.load(f), table)


def observable_to_spec(h: PiecewiseSmooth, table=None) -> dict:
    spec = {
        "breakpoints": [str(b) for b in h.breakpoints],
        "pieces": [{"coeffs": [str(c) for c in p.coeffs]} for p in h.pieces],
    }
    if table is not None:
        tags = []
        for b in h.breakpoints:
            tag = table.tag(b)
            if tag is not None and tag[0] == "a":
                tags.append({"point": str(b), "orbit": [tag[1], tag[2]]})
        spec["tags"] = tags
    return spec
