from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from src.errors import ConfigError
from src.orbits import parse_range

COMMANDS = ("orbits", "lambda", "bv-radius", "example-gap", "verify", "ulam", "report")
VERIFY_SUITES = ("jump-shift", "deriv-identity", "super-da", "dual-eigen", "ly", "all")


# Run configuration
@dataclass
class RunConfig:
    command: str
    map_source: str = "builtin:beta:3/2"
    weight_mode: str = "srb"
    depth: int = 64
    n_range: tuple = tuple(range(1, 65))
    m_list: tuple = (64, 256, 1024)
    bin_policy: str = "gamma_aligned"
    precision_bits: int | None = None
    output_dir: str | None = None
    formats: tuple = ("md", "json", "csv")
    seed: int = 20240229
    suite: str | None = None
    k_range: str | None = None
    m: int | None = None
    c: str | None = None
    itinerary: str = "thue-morse"
    bv_n: int = 20
    max_degree: int = 8
    tail_fraction: float = 0.25

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command '{self.command}'; choose one of {', '.join(COMMANDS)}")
        if self.command == "verify" and self.suite not in VERIFY_SUITES:
            raise ConfigError(f"unknown verify suite '{self.suite}'; choose one of {', '.join(VERIFY_SUITES)}")
        if self.depth < 1:
            raise ConfigError(f"orbit depth must be positive, got {self.depth}; set orbits.depth or --depth")
        if len(self.n_range) < 2 or min(self.n_range) < 1:
            raise ConfigError(f"n_range needs at least two positive integers, got {self.n_range}")
        if any(M < 2 for M in self.m_list):
            raise ConfigError(f"every Ulam size must be at least 2, got {self.m_list}")
        if self.precision_bits is not None and self.precision_bits < 53:
            raise ConfigError(f"precision_bits must be at least 53, got {self.precision_bits}")
        if not 0 < self.tail_fraction <= 1:
            raise ConfigError(f"orbits.tail_fraction must lie in (0, 1], got {self.tail_fraction}")
        if self.bv_n < 1:
            raise ConfigError(f"bv_n must be positive, got {self.bv_n}")
        if self.m is not None and self.m < 4:
            raise ConfigError(f"the example family needs m >= 4, got {self.m}")
        if self.c is not None and not 0 <= Fraction(self.c) < 1:
            raise ConfigError(f"the gap target c must lie in [0, 1), got {self.c}")
        return self

    @classmethod
    def from_settings(cls, command: str, settings: dict, **overrides) -> "RunConfig":
        """Builds a config from the YAML sections; overrides that are not None win."""
        run_settings = settings.get("run_settings", {})
        numerics = settings.get("numerics", {})
        orbits = settings.get("orbits", {})
        bounds = settings.get("bounds", {})
        verify = settings.get("verify", {})
        ulam = settings.get("ulam", {})
        values = {
            "command": command,
            "map_source": run_settings.get("map", "builtin:beta:3/2"),
            "weight_mode": run_settings.get("weight", "srb"),
            "depth": int(orbits.get("depth", 64)),
            "n_range": str(orbits.get("n_range", "1..64")),
            "m_list": ulam.get("m_list", [64, 256, 1024]),
            "bin_policy": ulam.get("bin_policy", "gamma_aligned"),
            "precision_bits": numerics.get("precision_bits"),
            "output_dir": None,
            "formats": tuple(run_settings.get("formats", ["md", "json", "csv"])),
            "seed": int(run_settings.get("seed", 20240229)),
            "k_range": str(verify.get("k_range", "1..32")),
            "m": bounds.get("m"),
            "itinerary": bounds.get("itinerary", "thue-morse"),
            "bv_n": int(bounds.get("bv_n", 20)),
            "max_degree": int(numerics.get("max_degree", 8)),
            "tail_fraction": float(orbits.get("tail_fraction", 0.25)),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        try:
            values["n_range"] = parse_range(values["n_range"])
            values["m_list"] = tuple(int(M) for M in (
                values["m_list"].split(",") if isinstance(values["m_list"], str) else values["m_list"]
            ))
            if values["precision_bits"] is not None:
                values["precision_bits"] = int(values["precision_bits"])
            if values["m"] is not None:
                values["m"] = int(values["m"])
            if values.get("c") is not None:
                values["c"] = str(values["c"])
                Fraction(values["c"])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid setting: {e}") from e
        return cls(**values).validate()

    def as_options(self) -> dict:
        """The flat option dict the runner reads."""
        return {
            "map": self.map_source,
            "weight": self.weight_mode,
            "depth": self.depth,
            "n_range": self.n_range,
            "m_list": self.m_list,
            "bin_policy": self.bin_policy,
            "precision_bits": self.precision_bits,
            "output_dir": self.output_dir,
            "formats": self.formats,
            "seed": self.seed,
            "suite": self.suite,
            "k_range": self.k_range,
            "m": self.m,
            "c": self.c,
            "itinerary": self.itinerary,
            "bv_n": self.bv_n,
            "max_degree": self.max_degree,
            "tail_fraction": self.tail_fraction,
        }


# Spectral report
@dataclass(frozen=True)
class SpectralReport:
    map_name: str
    weight_label: str
    lambda_inf: object
    lambda_sup: object
    bv_radius: object
    bv_n: int
    markov: bool
    depth: int
    k0: int | None
    spectra: tuple = ()
    consistency_errors: dict = field(default_factory=dict)
    consistency_slope: float | None = None

    @property
    def bv_dominates(self) -> bool:
        """The BV radius is never below Lambda^sup."""
        return float(self.bv_radius) >= float(self.lambda_sup) - 1e-12

    @property
    def radius_gap(self):
        return self.bv_radius - self.lambda_inf
