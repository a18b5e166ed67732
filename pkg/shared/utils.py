from __future__ import annotations
import hashlib
import math
from pathlib import Path
from datetime import datetime, timezone

SEED_MASK = (1 << 63) - 1

def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as f:
        for chunk in iter(lambda: f.read(1024 * 1024), b""):
            h.update(chunk)
    return h.hexdigest()

def utcnow_iso() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()

def ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path

def derive_seed(master: int, *keys: object) -> int:
    """Child seed for (master, *keys); stable across processes and worker counts."""
    h = hashlib.sha256(str(int(master)).encode())
    for key in keys:
        h.update(b"/")
        h.update(str(key).encode())
    return int.from_bytes(h.digest()[:8], "big") & SEED_MASK

def format_sig(value: float | None, digits: int = 6) -> str:
    # undefined report cells render as "-"
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return "-"
    return f"{value:.{digits}g}"
