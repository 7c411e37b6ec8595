"""The hard-label query channel, with exact accounting and a wire protocol.

The attack may touch nothing but ``query(x) -> label``.  ``ModelOracle``
adapts a local classifier to that interface, ``CountingOracle`` adds a
linearizable query counter with an optional hard budget, and the
serve/client pair speaks a line-delimited text protocol::

    QUERY <dim> <v1> ... <vdim>\\n   ->  LABEL <c>\\n  |  ERR <reason>\\n
    PING\\n                          ->  PONG\\n

Error reasons are ``cmd`` (unknown command), ``parse`` (malformed number),
``dim`` (dimension mismatch), and ``value`` (non-finite coordinate).
Floats on the wire carry 17 significant digits.
"""

from __future__ import annotations

import socket
import socketserver
import threading

import numpy as np

from .core import check_matrix, check_vector
from .errors import (
    BudgetExhaustedError,
    NondeterministicOracleError,
    ProtocolError,
    ValidationError,
)
from .jsonio import format_float
from .models.classifiers import hard_label

__all__ = [
    "CountingOracle",
    "FunctionOracle",
    "ModelOracle",
    "OracleServer",
    "RemoteOracle",
    "check_oracle_determinism",
    "process_request_line",
    "serve_oracle",
]


class ModelOracle:
    """Hard labels of a local classifier; reveals nothing else."""

    def __init__(self, model):
        self._model = model
        self.input_dim = int(model.n_features_in_)

    def query(self, x) -> int:
        x = check_vector(x, dim=self.input_dim, name="x")
        return hard_label(self._model, x)

    def query_batch(self, X) -> np.ndarray:
        X = check_matrix(X, shape=(None, self.input_dim), name="X")
        return np.asarray(self._model.predict(X), dtype=np.int64)


class FunctionOracle:
    """Adapt a plain ``x -> label`` callable to the oracle interface."""

    def __init__(self, fn, input_dim: int):
        self._fn = fn
        self.input_dim = int(input_dim)

    def query(self, x) -> int:
        x = check_vector(x, dim=self.input_dim, name="x")
        return int(self._fn(x))

    def query_batch(self, X) -> np.ndarray:
        X = check_matrix(X, shape=(None, self.input_dim), name="X")
        return np.asarray([int(self._fn(row)) for row in X], dtype=np.int64)


class CountingOracle:
    """Wrap an oracle with an atomic query counter and optional budget.

    A query that would push the count past the budget is refused with
    :class:`BudgetExhaustedError` before it executes.  Batch queries
    reserve budget under the same lock: when the batch does not fit, the
    remaining budget is consumed, the answered prefix is thrown away, and
    the refusal is raised — callers must not use partial batches.
    """

    def __init__(self, inner, budget: int | None = None):
        if budget is not None and int(budget) < 1:
            raise ValidationError(f"budget must be >= 1 or None, got {budget}")
        self.inner = inner
        self.budget = None if budget is None else int(budget)
        self.input_dim = getattr(inner, "input_dim", None)
        self._count = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        with self._lock:
            return self._count

    def _reserve(self, n: int) -> int:
        """Atomically claim up to ``n`` queries; returns how many fit."""
        with self._lock:
            if self.budget is None:
                self._count += n
                return n
            take = min(n, self.budget - self._count)
            self._count += take
            return take

    def query(self, x) -> int:
        if self._reserve(1) < 1:
            raise BudgetExhaustedError(self._count, self.budget)
        return self.inner.query(x)

    def query_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        take = self._reserve(n)
        if take < n:
            if take > 0:
                self._batch(X[:take])  # answered, then discarded
            raise BudgetExhaustedError(self._count, self.budget)
        return self._batch(X)

    def _batch(self, X) -> np.ndarray:
        batch = getattr(self.inner, "query_batch", None)
        if batch is not None:
            return batch(X)
        return np.asarray([self.inner.query(row) for row in X], dtype=np.int64)


def check_oracle_determinism(oracle, probe, repeats: int = 10) -> int:
    """Query ``probe`` repeatedly and insist on one label; returns it."""
    if repeats < 2:
        raise ValidationError("repeats must be >= 2")
    labels = {int(oracle.query(probe)) for _ in range(repeats)}
    if len(labels) != 1:
        raise NondeterministicOracleError(
            f"probe produced {len(labels)} distinct labels: {sorted(labels)}"
        )
    return labels.pop()


# --------------------------------------------------------------------------
# Wire protocol


def process_request_line(line: str, model) -> str:
    """Answer one protocol request line (no trailing newline in or out)."""
    tokens = line.strip("\r\n").split()
    if not tokens:
        return "ERR cmd"
    if tokens[0] == "PING":
        return "PONG" if len(tokens) == 1 else "ERR cmd"
    if tokens[0] != "QUERY":
        return "ERR cmd"
    if len(tokens) < 2:
        return "ERR parse"
    try:
        dim = int(tokens[1])
    except ValueError:
        return "ERR parse"
    values = tokens[2:]
    if dim != len(values) or dim != int(model.n_features_in_):
        return "ERR dim"
    try:
        x = np.array([float(v) for v in values], dtype=np.float64)
    except ValueError:
        return "ERR parse"
    if not np.all(np.isfinite(x)):
        return "ERR value"
    return f"LABEL {hard_label(model, x)}"


class _RequestHandler(socketserver.StreamRequestHandler):
    def handle(self):
        while True:
            raw = self.rfile.readline()
            if not raw:
                return
            try:
                line = raw.decode("ascii")
            except UnicodeDecodeError:
                reply = "ERR parse"
            else:
                reply = process_request_line(line, self.server.model)
            if reply.startswith("LABEL"):
                with self.server.served_lock:
                    self.server.served_count += 1
            self.wfile.write((reply + "\n").encode("ascii"))
            self.wfile.flush()


class _ThreadingServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class OracleServer:
    """A TCP server answering protocol requests with a model's hard labels."""

    def __init__(self, model, host: str = "127.0.0.1", port: int = 0):
        try:
            self._server = _ThreadingServer((host, port), _RequestHandler)
        except OSError as exc:
            raise ProtocolError(f"cannot bind {host}:{port}: {exc}") from exc
        self._server.model = model
        self._server.served_count = 0
        self._server.served_lock = threading.Lock()
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address

    @property
    def served_count(self) -> int:
        with self._server.served_lock:
            return self._server.served_count

    def serve_forever(self):
        self._server.serve_forever()

    def start_background(self) -> "OracleServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def shutdown(self):
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "OracleServer":
        return self.start_background()

    def __exit__(self, *exc_info):
        self.shutdown()


def serve_oracle(model, host: str = "127.0.0.1", port: int = 0) -> OracleServer:
    """Bind an :class:`OracleServer`; call ``serve_forever`` or use as a context."""
    return OracleServer(model, host, port)


class RemoteOracle:
    """Client for :class:`OracleServer`; one in-flight request per connection."""

    def __init__(self, host: str, port: int, input_dim: int | None = None,
                 timeout: float = 10.0):
        self.input_dim = input_dim
        self._count = 0
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
            self._reader = self._sock.makefile("rb")
        except OSError as exc:
            raise ProtocolError(f"cannot connect to {host}:{port}: {exc}") from exc

    @property
    def count(self) -> int:
        return self._count

    def _round_trip(self, request: str) -> str:
        try:
            self._sock.sendall((request + "\n").encode("ascii"))
            raw = self._reader.readline()
        except OSError as exc:
            raise ProtocolError(f"transport failure: {exc}") from exc
        if not raw:
            raise ProtocolError("server closed the connection")
        return raw.decode("ascii", errors="replace").rstrip("\r\n")

    def ping(self) -> None:
        reply = self._round_trip("PING")
        if reply != "PONG":
            raise ProtocolError(f"expected PONG, got {reply!r}")

    def query(self, x) -> int:
        x = check_vector(x, dim=self.input_dim, name="x")
        payload = " ".join(format_float(v) for v in x)
        reply = self._round_trip(f"QUERY {x.shape[0]} {payload}")
        tokens = reply.split()
        if len(tokens) == 2 and tokens[0] == "LABEL":
            try:
                label = int(tokens[1])
            except ValueError:
                raise ProtocolError(f"malformed label in {reply!r}") from None
            self._count += 1
            return label
        if tokens and tokens[0] == "ERR":
            raise ProtocolError(f"server refused query: {reply!r}")
        raise ProtocolError(f"unexpected response {reply!r}")

    def query_batch(self, X) -> np.ndarray:
        X = check_matrix(X, shape=(None, self.input_dim), name="X")
        return np.asarray([self.query(row) for row in X], dtype=np.int64)

    def close(self):
        try:
            self._reader.close()
            self._sock.close()
        except OSError:
            pass

    def __enter__(self) -> "RemoteOracle":
        return self

    def __exit__(self, *exc_info):
        self.close()
