"""Value oracles: in-memory tables, synthetic games and external model processes.

Every oracle answers ``evaluate(mask)`` with the model output v(x_S) on the
input whose players outside S are masked. How masking is realised (baseline
values, log-odds of a class, ...) is the oracle's business; the core only
ever sees coalition masks and scalar outputs.
"""
from __future__ import annotations

import json
import logging
import math
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import serialization
from .errors import (
    FormatError,
    NonFiniteValueError,
    OracleError,
    OracleProcessError,
    OracleProtocolError,
    PreconditionError,
    RangeError,
)
from .subset_algebra import MAX_N, all_masks, as_lattice, check_mask, check_n, lattice_n

logger = logging.getLogger(__name__)

VALUE_TABLE_FORMAT = "harsanyi-vt/1"


class ValueTable:
    """Outputs v(x_S) for every coalition S, indexed by mask.

    ``values[0]`` is the output on the fully masked input and serves as the
    baseline; utilities are ``values - values[0]``.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        self.values = as_lattice(values)

    @property
    def n(self) -> int:
        return lattice_n(self.values)

    @property
    def baseline(self) -> float:
        return float(self.values[0])

    def utilities(self) -> np.ndarray:
        u = self.values - self.values[0]
        u[0] = 0.0
        return u

    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.values))))

    def __eq__(self, other):
        if not isinstance(other, ValueTable):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"ValueTable(n={self.n}, baseline={self.baseline!r})"


def save_value_table(table: ValueTable, path) -> None:
    serialization.write_json(
        path, {"format": VALUE_TABLE_FORMAT, "n": table.n, "values": table.values}
    )


def value_table_from_document(doc: dict, source: str = "value table") -> ValueTable:
    serialization.check_format(doc, VALUE_TABLE_FORMAT, source)
    n = serialization.require(doc, "n", source)
    if isinstance(n, bool) or not isinstance(n, int) or not 1 <= n <= MAX_N:
        raise FormatError(f"{source}: key 'n' must be an integer in [1, {MAX_N}], got {n!r}")
    values = serialization.number_array(serialization.require(doc, "values", source), "values", source)
    if values.shape[0] != 1 << n:
        raise FormatError(
            f"{source}: key 'values' has {values.shape[0]} entries, expected 2**{n} = {1 << n}"
        )
    return ValueTable(values)


def load_value_table(path) -> ValueTable:
    return value_table_from_document(serialization.read_json(path), str(path))


class Oracle:
    """Base class. Subclasses implement ``_evaluate`` and optionally ``_evaluate_all``."""

    def __init__(self, n: int):
        self.n = check_n(n)
        self._tabulated: ValueTable | None = None

    def evaluate(self, mask: int) -> float:
        mask = check_mask(mask, self.n)
        value = float(self._evaluate(mask))
        if not math.isfinite(value):
            raise NonFiniteValueError(f"oracle returned non-finite value {value!r}", mask)
        return value

    def _evaluate(self, mask: int) -> float:
        raise NotImplementedError

    def _evaluate_all(self) -> np.ndarray | None:
        """Vectorized tabulation; ``None`` means fall back to per-mask calls."""
        return None

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class TableOracle(Oracle):
    def __init__(self, table: ValueTable):
        super().__init__(table.n)
        self.table = table

    def _evaluate(self, mask):
        return self.table.values[mask]

    def _evaluate_all(self):
        return self.table.values


class FunctionOracle(Oracle):
    """Wraps ``fn(mask) -> float``; ``vectorized(masks) -> array`` is an optional fast path."""

    def __init__(
        self,
        n: int,
        fn: Callable[[int], float],
        vectorized: Callable[[np.ndarray], np.ndarray] | None = None,
        spec: Any = None,
    ):
        super().__init__(n)
        self.fn = fn
        self.vectorized = vectorized
        self.spec = spec

    def _evaluate(self, mask):
        return self.fn(mask)

    def _evaluate_all(self):
        if self.vectorized is None:
            return None
        return np.asarray(self.vectorized(all_masks(self.n)), dtype=np.float64)


def tabulate(oracle: Oracle) -> ValueTable:
    """Evaluate every coalition once, in ascending mask order, and cache the table."""
    if oracle._tabulated is not None:
        return oracle._tabulated
    if oracle.n > MAX_N:
        raise RangeError(f"cannot tabulate n={oracle.n} > {MAX_N}")
    values = oracle._evaluate_all()
    if values is None:
        values = np.empty(1 << oracle.n, dtype=np.float64)
        for mask in range(1 << oracle.n):
            try:
                values[mask] = oracle.evaluate(mask)
            except OracleError:
                raise
            except Exception as exc:
                raise OracleError(f"oracle evaluation failed: {exc}", mask) from exc
    else:
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise NonFiniteValueError("oracle returned non-finite value", int(bad[0]))
    oracle._tabulated = ValueTable(values)
    return oracle._tabulated


class ExternalOracle(Oracle):
    """Model runner in a child process speaking newline-delimited JSON.

    Each request ``{"id": k, "n": n, "mask": m}`` written to the child's stdin
    must be answered on stdout by ``{"id": k, "value": x}`` before the next one
    is sent. The child is started on construction and probed with the
    handshake request ``{"id": 0, "n": n, "mask": 0}``, whose answer is the
    baseline output. Lines the child writes to stderr are logged as-is.
    """

    def __init__(self, command, n: int, timeout: float | None = None):
        super().__init__(n)
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self._lock = threading.Lock()
        self._cache: dict[int, float] = {}
        self._next_id = 0
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise OracleProcessError(f"cannot start model process {self.command!r}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        threading.Thread(target=self._pump_stdout, daemon=True).start()
        threading.Thread(target=self._pump_stderr, daemon=True).start()
        try:
            self.baseline = self.evaluate(0)
        except OracleError:
            self.close()
            raise

    def _pump_stdout(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _pump_stderr(self):
        for line in self._proc.stderr:
            logger.warning("%s", line.rstrip("\n"))

    def _evaluate(self, mask):
        with self._lock:
            if mask in self._cache:
                return self._cache[mask]
            value = self._request(mask)
            self._cache[mask] = value
            return value

    def _request(self, mask: int) -> float:
        request_id = self._next_id
        self._next_id += 1
        line = json.dumps({"id": request_id, "n": self.n, "mask": mask})
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise OracleProcessError(f"model process is not accepting requests: {exc}", mask) from exc
        try:
            reply = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise OracleProcessError(f"no reply within {self.timeout} s", mask) from None
        if reply is None:
            code = self._proc.wait()
            raise OracleProcessError(f"model process exited with code {code} before replying", mask)
        try:
            doc = json.loads(reply)
        except json.JSONDecodeError:
            raise OracleProtocolError(f"reply is not JSON: {reply.strip()!r}", mask) from None
        if not isinstance(doc, dict) or "id" not in doc or "value" not in doc:
            raise OracleProtocolError(f"reply must be an object with 'id' and 'value': {reply.strip()!r}", mask)
        if doc["id"] != request_id:
            raise OracleProtocolError(f"reply id {doc['id']!r} does not match request id {request_id}", mask)
        value = doc["value"]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise OracleProtocolError(f"reply value {value!r} is not a number", mask)
        return float(value)

    def close(self):
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


@dataclass
class OracleDescriptor:
    """Declarative oracle: ``kind`` is ``table``, ``synthetic`` or ``external``.

    ``config`` holds ``path`` or ``values`` for tables, ``spec`` (a GameSpec or
    its JSON document) for synthetic games, and ``command`` (plus optional
    ``timeout``) for external processes.
    """

    kind: str
    n: int
    config: dict = field(default_factory=dict)


def open_oracle(descriptor: OracleDescriptor) -> Oracle:
    kind, config = descriptor.kind, descriptor.config
    if kind == "table":
        if "values" in config:
            table = ValueTable(config["values"])
        else:
            table = load_value_table(config["path"])
        oracle: Oracle = TableOracle(table)
    elif kind == "synthetic":
        from .synthetic import game_from_spec, spec_from_document

        spec = config["spec"]
        if isinstance(spec, dict):
            spec = spec_from_document(spec)
        oracle = game_from_spec(spec)
    elif kind == "external":
        oracle = ExternalOracle(config["command"], descriptor.n, timeout=config.get("timeout"))
    else:
        raise PreconditionError(f"unknown oracle kind {kind!r}")
    if oracle.n != descriptor.n:
        oracle.close()
        raise PreconditionError(f"descriptor declares n={descriptor.n} but the oracle has n={oracle.n}")
    return oracle


def evaluate(oracle: Oracle, mask: int) -> float:
    return oracle.evaluate(mask)
