"""Flat key=value run configuration.

Zero-dependency format: one ``key = value`` per line, ``#`` starts a
comment line, blank lines ignored.  Keys are namespaced (driver.*,
flp.*, floup.*, model.*, ensemble.*, output.*, verify.*); unknown keys
are rejected, and every numeric parse is checked.
"""

from __future__ import annotations

from pathlib import Path

from .drivers import LevyDriverSpec
from .errors import ConfigError
from .floup import FloupParams, choose_past_cutoff
from .fractional import FlpParams

_STR_KEYS = {"driver.kind", "driver.jumps", "model.id", "ensemble.times", "ensemble.lags"}
_INT_KEYS = {"flp.n", "ensemble.seed", "ensemble.replicates", "verify.bias_replicates"}
_FLOAT_KEYS = {
    "driver.theta",
    "flp.d",
    "flp.window_exponent",
    "floup.lambda",
    "floup.cutoff",
    "floup.cutoff_tol",
    "model.gamma",
    "model.alpha",
    "model.beta",
    "model.sigma0",
    "model.sigma",
    "model.sigma1",
    "model.sigma2",
    "model.delta",
    "model.lambda",
    "model.z",
    "model.tau",
    "ensemble.lag_base",
    "output.t_min",
    "output.t_max",
    "output.dt",
    "verify.analytic_d",
}
KNOWN_KEYS = _STR_KEYS | _INT_KEYS | _FLOAT_KEYS

MODEL_PARAM_KEYS = {
    "model.gamma": "gamma",
    "model.alpha": "alpha",
    "model.beta": "beta",
    "model.sigma0": "sigma0",
    "model.sigma": "sigma",
    "model.sigma1": "sigma1",
    "model.sigma2": "sigma2",
    "model.delta": "delta",
    "model.lambda": "lam",
}


def parse_config(path: str | Path) -> dict:
    """Parse and type-check a configuration file into a flat dict."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = _convert(key, value, f"{path}:{lineno}")
    return out


def _convert(key: str, value: str, where: str):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            x = float(value)
            if x != x:
                raise ValueError("nan")
            return x
    except ValueError as exc:
        raise ConfigError(f"{where}: bad numeric value for {key}: {value!r}") from exc
    return value


def parse_float_list(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"bad {what} list: {text!r}") from exc


def build_driver(cfg: dict, seed_override: int | None = None) -> LevyDriverSpec:
    kind = cfg.get("driver.kind", "compensated_poisson")
    theta = cfg.get("driver.theta")
    if theta is None:
        raise ConfigError("driver.theta is required")
    seed = seed_override if seed_override is not None else cfg.get("ensemble.seed")
    if seed is None:
        raise ConfigError("ensemble.seed is required (simulation must be reproducible)")
    if kind == "compensated_poisson":
        return LevyDriverSpec(theta=theta, seed=seed)
    if kind == "compound_poisson":
        text = cfg.get("driver.jumps")
        if not text:
            raise ConfigError("driver.jumps is required for the compound driver")
        jumps = []
        for atom in text.split(","):
            try:
                v, p = atom.split(":")
                jumps.append((float(v), float(p)))
            except ValueError as exc:
                raise ConfigError(f"bad driver.jumps atom {atom!r} (want value:prob)") from exc
        return LevyDriverSpec(theta=theta, jumps=tuple(jumps), seed=seed)
    raise ConfigError(f"unknown driver.kind {kind!r}")


def build_flp(cfg: dict) -> FlpParams:
    if "flp.d" not in cfg or "flp.n" not in cfg:
        raise ConfigError("flp.d and flp.n are required")
    return FlpParams(
        d=cfg["flp.d"],
        n=cfg["flp.n"],
        past_window_exponent=cfg.get("flp.window_exponent", 2.0),
    )


def build_floup(cfg: dict, d: float, t_min: float = 0.0) -> FloupParams:
    if "floup.lambda" not in cfg:
        raise ConfigError("floup.lambda is required")
    lam = cfg["floup.lambda"]
    tol = cfg.get("floup.cutoff_tol", 1e-8)
    cutoff = cfg.get("floup.cutoff")
    if cutoff is None:
        cutoff = choose_past_cutoff(lam, d, tol=tol, t_min=min(t_min, 0.0))
    return FloupParams(lam=lam, past_cutoff=cutoff, cutoff_tol=tol)


def model_params_from(cfg: dict) -> dict:
    return {short: cfg[key] for key, short in MODEL_PARAM_KEYS.items() if key in cfg}
