"""Validity checking through an external SMT-LIB solver or bounded enumeration."""
from __future__ import annotations

import enum
import logging
import os
import shutil
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Optional

from ..core.errors import SolverUnavailable
from ..core.expr import BoolLit, evaluate, free_vars
from . import enumerate as enum_mod
from .formula import Formula, parse_sexprs, smt_query, smt_value

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 5000
DEFAULT_BOUND = 64


class Verdict(str, enum.Enum):
    VALID = "valid"
    INVALID = "invalid"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ValidityResult:
    verdict: Verdict
    model: Optional[dict] = None
    reason: str = ""

    @property
    def valid(self) -> bool:
        return self.verdict is Verdict.VALID

    def __bool__(self) -> bool:
        # Unknown counts as failure everywhere.
        return self.valid


VALID = ValidityResult(Verdict.VALID)


def solver_command(path: str, timeout_ms: int) -> list[str]:
    name = os.path.basename(path).lower()
    if "z3" in name:
        return [path, "-in", "-smt2", f"-t:{timeout_ms}"]
    if "cvc" in name:
        return [path, "--lang=smt2", "--produce-models", f"--tlimit-per={timeout_ms}"]
    return [path]


def find_solver(path: Optional[str] = None) -> Optional[str]:
    cand = path or os.environ.get("RMPST_SOLVER") or "z3"
    if os.path.sep in cand:
        return cand if os.access(cand, os.X_OK) else None
    return shutil.which(cand)


@dataclass
class Checker:
    """Decides validity of formulas; results are cached by canonical query text."""

    mode: str = "solver"
    solver: Optional[str] = None
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    bound: int = DEFAULT_BOUND
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    calls: int = 0

    def __post_init__(self):
        if self.mode not in ("solver", "enumerate"):
            raise ValueError(f"unknown validity mode {self.mode}")

    def check(self, f: Formula) -> ValidityResult:
        quick = _trivial(f)
        if quick is not None:
            return quick
        canon, m = f.canonical()
        key = (self.mode, self.bound if self.mode == "enumerate" else None, canon)
        with self._lock:
            hit = self._cache.get(key)
        if hit is None:
            hit = self._solve(canon) if self.mode == "solver" else self._enumerate(canon)
            with self._lock:
                self._cache[key] = hit
        if hit.model is None:
            return hit
        back = {v: k for k, v in m.items()}
        return ValidityResult(hit.verdict, {back[k]: v for k, v in hit.model.items() if k in back}, hit.reason)

    def _enumerate(self, f: Formula) -> ValidityResult:
        try:
            cex = enum_mod.find_counterexample(f, self.bound)
        except OverflowError as e:
            return ValidityResult(Verdict.UNKNOWN, None, str(e))
        if cex is None:
            return VALID
        return ValidityResult(Verdict.INVALID, cex)

    def _solve(self, f: Formula) -> ValidityResult:
        path = find_solver(self.solver)
        if path is None:
            raise SolverUnavailable(
                f"SMT solver {self.solver or os.environ.get('RMPST_SOLVER') or 'z3'} not found; "
                "install z3 or use enumeration mode")
        self.calls += 1
        query = smt_query(f)
        try:
            proc = subprocess.run(solver_command(path, self.timeout_ms), input=query, capture_output=True,
                                  text=True, timeout=self.timeout_ms / 1000 + 2)
        except subprocess.TimeoutExpired:
            return ValidityResult(Verdict.UNKNOWN, None, "solver timed out")
        except OSError as e:
            raise SolverUnavailable(f"cannot run solver {path}: {e}") from e
        out = proc.stdout.strip().splitlines()
        head = out[0].strip() if out else ""
        if head == "unsat":
            return VALID
        if head == "sat":
            model = {}
            try:
                rest = parse_sexprs("\n".join(out[1:]))
                for pair in (rest[0] if rest else []):
                    model[pair[0]] = smt_value(pair[1])
            except (ValueError, IndexError, TypeError) as e:
                log.debug("could not read solver model: %s", e)
            sorts = dict(f.sorts)
            for n, s in sorts.items():
                if s.value == "unit":
                    model[n] = None
            return ValidityResult(Verdict.INVALID, model)
        reason = head or proc.stderr.strip() or "no answer"
        return ValidityResult(Verdict.UNKNOWN, None, f"solver answered {reason}")


def _trivial(f: Formula) -> Optional[ValidityResult]:
    if isinstance(f.expr, BoolLit):
        return VALID if f.expr.value else ValidityResult(Verdict.INVALID, {})
    if not free_vars(f.expr):
        return VALID if evaluate(f.expr, {}) else ValidityResult(Verdict.INVALID, {})
    return None


_default: Optional[Checker] = None


def default_checker() -> Checker:
    """Solver mode when a solver is installed, bounded enumeration otherwise."""
    global _default
    if _default is None:
        mode = "solver" if find_solver() else "enumerate"
        if mode == "enumerate":
            log.warning("no SMT solver found; falling back to bounded enumeration")
        timeout = int(os.environ.get("RMPST_SOLVER_TIMEOUT", DEFAULT_TIMEOUT_MS))
        _default = Checker(mode=mode, timeout_ms=timeout)
    return _default


def set_default_checker(checker: Optional[Checker]) -> None:
    global _default
    _default = checker


def check_validity(f: Formula, mode: str = "solver", *, bound: int = DEFAULT_BOUND,
                   solver: Optional[str] = None, timeout_ms: int = DEFAULT_TIMEOUT_MS) -> ValidityResult:
    """One-off validity query; `mode` is `solver` or `enumerate`."""
    if mode == "solver" and solver is None and timeout_ms == DEFAULT_TIMEOUT_MS:
        c = default_checker()
        if c.mode == "solver":
            return c.check(f)
    return Checker(mode=mode, solver=solver, timeout_ms=timeout_ms, bound=bound).check(f)
