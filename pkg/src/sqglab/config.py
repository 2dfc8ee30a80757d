import os
from dataclasses import dataclass


def _get_bool(name: str, default: bool = False) -> bool:
    val = os.getenv(name)
    if val is None:
        return default
    return str(val).strip().lower() not in ("0", "false", "no", "off", "")


def _get_int(name: str, default: int) -> int:
    val = os.getenv(name)
    if val is None or not val.strip():
        return default
    return int(val)


def _get_float(name: str, default: float) -> float:
    val = os.getenv(name)
    if val is None or not val.strip():
        return default
    return float(val)


def _load_dotenv_if_present() -> None:
    path = os.path.join(os.getcwd(), ".env")
    if not os.path.exists(path):
        return
    try:
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#") or "=" not in line:
                    continue
                key, val = line.split("=", 1)
                key = key.strip()
                if key.startswith("export "):
                    key = key[len("export "):].strip()
                val = val.strip().strip('"').strip("'")
                if key and key not in os.environ:
                    os.environ[key] = val
    except OSError:
        # Unreadable .env: fall back to the exported environment
        pass


@dataclass
class Config:
    out_dir: str
    threads: int
    log_level: str
    debug: bool
    default_seed: int
    # Local-time functional parameters
    eta: float
    rate_c: float


def load_config() -> Config:
    _load_dotenv_if_present()
    debug = _get_bool("SQGLAB_DEBUG", False)
    return Config(
        out_dir=os.getenv("SQGLAB_OUT_DIR", os.path.join("data", "out")),
        threads=max(1, _get_int("SQGLAB_THREADS", 1)),
        log_level="DEBUG" if debug else os.getenv("SQGLAB_LOG_LEVEL", "INFO").upper(),
        debug=debug,
        default_seed=_get_int("SQGLAB_SEED", 20240611),
        eta=_get_float("SQGLAB_ETA", 0.05),
        rate_c=_get_float("SQGLAB_RATE_C", 1.0),
    )
