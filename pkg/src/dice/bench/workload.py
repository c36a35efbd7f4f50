"""Concurrent order-processing workload, a small stand-in for TPC-C.

Each client loops a transaction mix over its own session:

* new-order: BEGIN; INSERT ORDERS; INSERT ORDERLINES x k; COMMIT
* payment: UPDATE CUSTOMERS SET INCOME = ... WHERE CUSTOMERID = ...
* order-status: join of CUSTOMERS and ORDERS for one customer

Transactions finishing inside the ramp-up phase are not counted.

While clients run, the interpreter's thread switch interval is shortened:
with the default 5 ms a client whose service slot has ended waits behind
CPU-bound proxies for the GIL, which adds jitter to every statement.
"""
from __future__ import annotations

import random
import sys
import threading
import time
from dataclasses import asdict, dataclass, field

from dice.backend import LocalConnector
from dice.backend.engine import Database
from dice.errors import DiceError, WorkloadError
from dice.rewrite import EncryptionPolicy, encrypt_database, load_policy
from dice.session import Session, SessionConfig

from .datagen import DatasetSpec, generate
from .policies import POLICY_DOCS, bench_policy

SWITCH_INTERVAL_S = 0.0002
ORDER_ID_BASE = 10_000_000
CLIENT_ID_SPAN = 1_000_000


@dataclass
class WorkloadConfig:
    clients: int = 1
    duration_s: float = 10.0  # measured interval
    ramp_up_s: float = 1.0
    policy: object = "plain"  # bench policy name, path, or EncryptionPolicy
    scale: int = 1_000
    seed: int = 42
    latency_ms: float = 0
    service_ms: float = 2  # backend time per statement in the shared slot
    mix: tuple = (0.5, 0.35, 0.15)  # new-order, payment, order-status
    max_lines: int = 5


@dataclass
class ClientStats:
    client: int
    transactions: int = 0
    new_orders: int = 0
    statements: int = 0
    busy_s: float = 0.0

    @property
    def mean_latency_ms(self) -> float:
        return 1000 * self.busy_s / self.transactions if self.transactions else 0.0


@dataclass
class WorkloadResult:
    clients: int
    policy: str
    measured_s: float
    new_orders: int
    orders_per_minute: float
    transactions: int
    statements: int
    mean_tx_latency_ms: float
    mean_statement_latency_ms: float
    per_client_latency_ms: list
    committed_orders: int  # all new-orders, ramp-up included
    orders_inserted: int  # ORDERS row growth seen by the backend
    errors: list = field(default_factory=list)

    @property
    def conserved(self) -> bool:
        return self.committed_orders == self.orders_inserted

    def to_doc(self) -> dict:
        d = asdict(self)
        d["conserved"] = self.conserved
        return d


def _resolve_policy(p) -> tuple[str, EncryptionPolicy]:
    if isinstance(p, EncryptionPolicy):
        return p.source, p
    if isinstance(p, str) and p in POLICY_DOCS:
        return p, bench_policy(p)
    return str(p), load_policy(p)


class _Client(threading.Thread):
    def __init__(self, idx, run, session, customers, rng):
        super().__init__(name=f"workload-{idx}", daemon=True)
        self.idx = idx
        self.run_state = run
        self.session = session
        self.customers = customers
        self.rng = rng
        self.stats = ClientStats(idx)
        self.committed = 0
        self.error: BaseException | None = None
        self._next_order = ORDER_ID_BASE + idx * CLIENT_ID_SPAN
        self._next_line = ORDER_ID_BASE + idx * CLIENT_ID_SPAN * 8

    def _new_order(self) -> int:
        r = self.rng
        self._next_order += 1
        oid = self._next_order
        cid = r.choice(self.customers)
        date = r.choice((20121201, 20121215, 20121231))
        stmts = ["BEGIN", f"INSERT INTO ORDERS VALUES ({oid}, '{cid}', {date})"]
        for _ in range(r.randint(1, self.run_state.config.max_lines)):
            self._next_line += 1
            stmts.append(f"INSERT INTO ORDERLINES VALUES ({self._next_line}, {oid}, "
                         f"{r.randint(1, 100)}, {r.randint(1, 10)}, {date})")
        stmts.append("COMMIT")
        return self._run(stmts)

    def _payment(self) -> int:
        cid = self.rng.choice(self.customers)
        return self._run([f"UPDATE CUSTOMERS SET INCOME = {self.rng.randint(20001, 150000)} "
                          f"WHERE CUSTOMERID = '{cid}'"])

    def _order_status(self) -> int:
        cid = self.rng.choice(self.customers)
        return self._run(["SELECT O.ORDERID, O.ORDERDATE FROM CUSTOMERS C INNER JOIN ORDERS O "
                          f"ON C.CUSTOMERID = O.CUSTOMERID WHERE C.CUSTOMERID = '{cid}'"])

    def _run(self, stmts) -> int:
        for sql in stmts:
            self.session.execute(sql)
        return len(stmts)

    def run(self):
        st = self.run_state
        cfg = st.config
        p_new, p_pay, _ = cfg.mix
        st.start.wait()
        try:
            while not st.stop.is_set() and time.perf_counter() < st.deadline:
                u = self.rng.random()
                t0 = time.perf_counter()
                if u < p_new:
                    kind, n = "new", self._new_order()
                    self.committed += 1
                elif u < p_new + p_pay:
                    kind, n = "pay", self._payment()
                else:
                    kind, n = "status", self._order_status()
                t1 = time.perf_counter()
                if st.ramp_end <= t1 <= st.deadline:
                    self.stats.transactions += 1
                    self.stats.statements += n
                    self.stats.busy_s += t1 - t0
                    if kind == "new":
                        self.stats.new_orders += 1
        except BaseException as exc:  # abort everyone, report below
            self.error = exc
            st.stop.set()
            if self.session.in_transaction:
                try:
                    self.session.connector.execute("ROLLBACK")
                except DiceError:
                    pass


class _RunState:
    def __init__(self, config):
        self.config = config
        self.start = threading.Event()
        self.stop = threading.Event()
        self.ramp_end = 0.0
        self.deadline = 0.0


def prepare_backend(policy: EncryptionPolicy, dataset: Database) -> Database:
    """The database the backend holds for ``policy``: a ciphertext copy, or plaintext."""
    if policy.is_null:
        return Database.from_doc(dataset.to_doc())
    return encrypt_database(policy, dataset)[0]


def run_workload(config: WorkloadConfig, dataset: Database | None = None,
                 backend: Database | None = None) -> WorkloadResult:
    if config.clients < 1:
        raise ValueError("clients must be at least 1")
    name, policy = _resolve_policy(config.policy)
    if dataset is None:
        dataset = generate(DatasetSpec(seed=config.seed, customers=config.scale))
    db = backend if backend is not None else prepare_backend(policy, dataset)
    customers = [r[0] for r in dataset.table("CUSTOMERS").rows]
    st = _RunState(config)

    def session():
        return Session(SessionConfig(LocalConnector(db, config.latency_ms, config.service_ms),
                                     policy, "strict"))

    with session() as probe:
        before = probe.query("SELECT COUNT(*) FROM ORDERS").rows[0][0]
    clients = [_Client(i, st, session(), customers, random.Random(config.seed * 1000 + i))
               for i in range(config.clients)]
    previous = sys.getswitchinterval()
    sys.setswitchinterval(min(previous, SWITCH_INTERVAL_S))
    try:
        for c in clients:
            c.start()
        t = time.perf_counter()
        st.ramp_end = t + config.ramp_up_s
        st.deadline = st.ramp_end + config.duration_s
        st.start.set()
        for c in clients:
            c.join()
            c.session.close()
    finally:
        sys.setswitchinterval(previous)
    errors = [f"client {c.idx}: {type(c.error).__name__}: {c.error}" for c in clients if c.error]
    if errors:
        raise WorkloadError("workload aborted; " + "; ".join(errors))
    with session() as probe:
        after = probe.query("SELECT COUNT(*) FROM ORDERS").rows[0][0]

    stats = [c.stats for c in clients]
    new_orders = sum(s.new_orders for s in stats)
    tx = sum(s.transactions for s in stats)
    stmts = sum(s.statements for s in stats)
    busy = sum(s.busy_s for s in stats)
    return WorkloadResult(
        clients=config.clients, policy=name, measured_s=config.duration_s,
        new_orders=new_orders, orders_per_minute=new_orders * 60.0 / config.duration_s,
        transactions=tx, statements=stmts,
        mean_tx_latency_ms=1000 * busy / tx if tx else 0.0,
        mean_statement_latency_ms=1000 * busy / stmts if stmts else 0.0,
        per_client_latency_ms=[round(s.mean_latency_ms, 3) for s in stats],
        committed_orders=sum(c.committed for c in clients),
        orders_inserted=after - before,
    )


def overhead_ratio(dice: WorkloadResult, plain: WorkloadResult) -> float:
    """Per-statement latency of the encrypted run relative to the plaintext run."""
    return dice.mean_statement_latency_ms / max(plain.mean_statement_latency_ms, 1e-9)
