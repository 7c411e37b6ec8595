"""Tests for query accounting and the wire protocol, including golden bytes."""

import socket
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from labelinv.errors import (
    BudgetExhaustedError,
    NondeterministicOracleError,
    ProtocolError,
    ValidationError,
)
from labelinv.models import LinearSoftmaxClassifier
from labelinv.oracle import (
    CountingOracle,
    FunctionOracle,
    ModelOracle,
    OracleServer,
    RemoteOracle,
    check_oracle_determinism,
    process_request_line,
    serve_oracle,
)


def halfspace_model():
    return LinearSoftmaxClassifier.from_parameters(
        weights=[[1.0, 0.0], [-1.0, 0.0]], biases=[0.0, 0.0]
    )


def test_model_oracle_labels():
    oracle = ModelOracle(halfspace_model())
    assert oracle.query([2.0, 0.0]) == 0
    assert oracle.query([-2.0, 0.0]) == 1


def test_counting_oracle_budget_refusal():
    oracle = CountingOracle(ModelOracle(halfspace_model()), budget=3)
    for _ in range(3):
        oracle.query([1.0, 0.0])
    assert oracle.count == 3
    with pytest.raises(BudgetExhaustedError) as exc_info:
        oracle.query([1.0, 0.0])
    assert exc_info.value.count == 3
    assert exc_info.value.budget == 3
    assert oracle.count == 3


def test_counting_oracle_repeat_query_counts_both():
    oracle = CountingOracle(ModelOracle(halfspace_model()))
    x = [0.5, 1.0]
    assert oracle.query(x) == oracle.query(x)
    assert oracle.count == 2


def test_counting_oracle_batch_accounting():
    oracle = CountingOracle(ModelOracle(halfspace_model()), budget=10)
    labels = oracle.query_batch(np.tile([2.0, 0.0], (4, 1)))
    assert labels.tolist() == [0, 0, 0, 0]
    assert oracle.count == 4
    # The next batch does not fit: remaining budget is consumed, answered
    # prefix discarded, refusal raised.
    with pytest.raises(BudgetExhaustedError):
        oracle.query_batch(np.tile([2.0, 0.0], (8, 1)))
    assert oracle.count == 10
    with pytest.raises(BudgetExhaustedError):
        oracle.query([2.0, 0.0])


def test_counting_oracle_concurrent_batches_never_overcount():
    oracle = CountingOracle(ModelOracle(halfspace_model()), budget=100)
    X = np.tile([1.0, 0.5], (5, 1))

    def worker(_):
        done = 0
        try:
            for _ in range(10):
                oracle.query_batch(X)
                done += 5
        except BudgetExhaustedError:
            pass
        return done

    with ThreadPoolExecutor(max_workers=8) as pool:
        completed = sum(pool.map(worker, range(8)))
    assert oracle.count == 100
    assert completed <= 100


def test_counting_oracle_rejects_bad_budget():
    with pytest.raises(ValidationError):
        CountingOracle(ModelOracle(halfspace_model()), budget=0)


def test_determinism_probe_passes_and_fails():
    oracle = ModelOracle(halfspace_model())
    assert check_oracle_determinism(oracle, [1.0, 0.0]) == 0

    state = {"flip": 0}

    def flaky(_x):
        state["flip"] ^= 1
        return state["flip"]

    with pytest.raises(NondeterministicOracleError):
        check_oracle_determinism(FunctionOracle(flaky, 2), [0.0, 0.0])


GOLDEN_TRANSCRIPT = [
    ("QUERY 2 2.0 0.0", "LABEL 0"),
    ("QUERY 2 -2.0 0.0", "LABEL 1"),
    ("QUERY 3 1.0 2.0", "ERR dim"),
    ("QUERY 3 1.0 2.0 3.0", "ERR dim"),
    ("QUERY 2 1.0 abc", "ERR parse"),
    ("QUERY x 1.0 2.0", "ERR parse"),
    ("QUERY", "ERR parse"),
    ("QUERY 2 nan 0.0", "ERR value"),
    ("QUERY 2 inf 0.0", "ERR value"),
    ("PING", "PONG"),
    ("PING extra", "ERR cmd"),
    ("HELLO", "ERR cmd"),
    ("", "ERR cmd"),
]


def test_protocol_golden_lines():
    model = halfspace_model()
    for request, expected in GOLDEN_TRANSCRIPT:
        assert process_request_line(request, model) == expected


def test_protocol_golden_bytes_over_socket():
    with serve_oracle(halfspace_model()) as server:
        host, port = server.address
        with socket.create_connection((host, port), timeout=5) as sock:
            reader = sock.makefile("rb")
            for request, expected in GOLDEN_TRANSCRIPT:
                sock.sendall(request.encode("ascii") + b"\n")
                assert reader.readline() == expected.encode("ascii") + b"\n"
        # Errors must not have closed the connection mid-transcript, and
        # only LABEL responses count as served queries.
        assert server.served_count == 2


def test_remote_client_round_trip():
    with serve_oracle(halfspace_model()) as server:
        host, port = server.address
        with RemoteOracle(host, port, input_dim=2) as client:
            client.ping()
            assert client.query([2.0, 0.0]) == 0
            assert client.query([-0.25, 3.5]) == 1
            assert client.count == 2


def test_remote_client_thousand_queries_reconcile():
    rng = np.random.default_rng(17)
    X = rng.normal(size=(1000, 2))
    model = halfspace_model()
    local = ModelOracle(model)
    with serve_oracle(model) as server:
        host, port = server.address
        with RemoteOracle(host, port, input_dim=2) as client:
            labels = client.query_batch(X)
            assert client.count == 1000
            assert server.served_count == 1000
    assert labels.tolist() == local.query_batch(X).tolist()


def test_remote_client_17_digit_floats_survive_the_wire():
    # A coordinate chosen adversarially close to the boundary: the label is
    # decided by bits far below short-decimal precision.
    model = halfspace_model()
    x = np.array([1e-16, 0.75])
    with serve_oracle(model) as server:
        host, port = server.address
        with RemoteOracle(host, port, input_dim=2) as client:
            assert client.query(x) == ModelOracle(model).query(x)
            assert client.query(-x) == ModelOracle(model).query(-x)


def test_remote_client_rejects_malformed_response():
    listener = socket.create_server(("127.0.0.1", 0))
    host, port = listener.getsockname()

    def fake_server():
        conn, _ = listener.accept()
        with conn:
            conn.recv(4096)
            conn.sendall(b"LABEL x\n")

    import threading

    thread = threading.Thread(target=fake_server, daemon=True)
    thread.start()
    try:
        client = RemoteOracle(host, port, input_dim=2)
        with pytest.raises(ProtocolError):
            client.query([1.0, 2.0])
        client.close()
    finally:
        thread.join(timeout=5)
        listener.close()


def test_remote_client_surfaces_err_as_protocol_error():
    with serve_oracle(halfspace_model()) as server:
        host, port = server.address
        client = RemoteOracle(host, port)  # no dim pin: server must refuse
        try:
            with pytest.raises(ProtocolError):
                client.query([1.0, 2.0, 3.0])
            assert client.count == 0
        finally:
            client.close()


def test_connect_failure_is_protocol_error():
    with pytest.raises(ProtocolError):
        RemoteOracle("127.0.0.1", 1, timeout=0.2)
