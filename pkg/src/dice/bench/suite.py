"""Query suite in three modes: plain, dice (rewritten on ciphertext) and naive.

Results of every (query, mode, cipher) run are checked against plain mode
before any timing is kept.
"""
from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import asdict, dataclass, field

from dice.backend.engine import Database
from dice.errors import BenchMismatch, CapabilityError
from dice.rewrite import encrypt_database, load_policy
from dice.session import Session, SessionConfig

from .datagen import DatasetSpec, digest, generate
from .policies import CIPHERS, bench_policy
from .queries import QUERIES, query

MODES = ("plain", "dice", "naive")


@dataclass
class SuiteConfig:
    scale: int = 10_000
    seed: int = 42
    ciphers: tuple = CIPHERS
    modes: tuple = MODES
    queries: tuple = tuple(q.name for q in QUERIES)
    repetitions: int = 3
    latency_ms: float = 0
    policy_path: str | None = None  # custom policy replaces the built-in cipher list

    def validate(self):
        if self.repetitions < 3:
            raise ValueError("repetitions must be at least 3")
        bad = set(self.modes) - set(MODES)
        if bad:
            raise ValueError(f"unknown mode(s): {', '.join(sorted(bad))}")
        for q in self.queries:
            query(q)


@dataclass
class SuiteEntry:
    query: str
    mode: str
    cipher: str
    status: str  # ok | skipped
    reason: str | None = None
    strategy: str | None = None
    wall_micros: dict = field(default_factory=dict)  # min / mean / max
    samples: list = field(default_factory=list)
    rows_transferred: int = 0
    encrypt_ops: int = 0
    decrypt_ops: int = 0
    result_rows: int = 0


def results_equal(a: list, b: list, ordered: bool) -> bool:
    return a == b if ordered else Counter(a) == Counter(b)


def _timed(fn, reps: int):
    """Run ``fn`` ``reps`` times; returns (first result, first report, wall samples)."""
    first = None
    samples = []
    for _ in range(reps):
        rs, rep = fn()
        samples.append(rep.wall_micros)
        if first is None:
            first = (rs, rep)
        elif (rep.rows_transferred, rep.encrypt_ops, rep.decrypt_ops) != \
                (first[1].rows_transferred, first[1].encrypt_ops, first[1].decrypt_ops):
            raise BenchMismatch("operation counts changed between repetitions")
    return first[0], first[1], samples


def _entry(q, mode, cipher, rs, rep, samples) -> SuiteEntry:
    return SuiteEntry(q, mode, cipher, "ok", rep.reason, rep.strategy,
                      {"min": min(samples), "mean": round(statistics.fmean(samples)),
                       "max": max(samples)}, samples,
                      rep.rows_transferred, rep.encrypt_ops, rep.decrypt_ops, len(rs.rows))


class Suite:
    def __init__(self, config: SuiteConfig, dataset: Database | None = None):
        config.validate()
        self.config = config
        self.plain_db = dataset if dataset is not None else generate(
            DatasetSpec(seed=config.seed, customers=config.scale))
        self._cipher_dbs: dict = {}

    def policies(self) -> list:
        if self.config.policy_path:
            return [("custom", load_policy(self.config.policy_path))]
        return [(name, bench_policy(name)) for name in self.config.ciphers]

    def cipher_db(self, name, policy) -> Database:
        if name not in self._cipher_dbs:
            self._cipher_dbs[name] = encrypt_database(policy, self.plain_db)[0]
        return self._cipher_dbs[name]

    def _session(self, db, policy=None, plain=False, mode="strict") -> Session:
        return Session(SessionConfig(db, policy, mode, plain=plain,
                                     latency_ms=self.config.latency_ms))

    def run(self) -> dict:
        cfg = self.config
        reps = cfg.repetitions
        entries = []
        expected = {}
        with self._session(self.plain_db, plain=True) as plain:
            for name in cfg.queries:
                q = query(name)
                rs, rep, samples = _timed(lambda: plain.execute(q.sql), reps)
                expected[name] = rs.rows
                if "plain" in cfg.modes:
                    entries.append(_entry(name, "plain", "none", rs, rep, samples))
        for cname, policy in self.policies():
            db = self.cipher_db(cname, policy)
            with self._session(db, policy, mode="strict") as s:
                for name in cfg.queries:
                    q = query(name)
                    for mode in ("dice", "naive"):
                        if mode not in cfg.modes:
                            continue
                        if mode == "dice":
                            try:
                                rs, rep, samples = _timed(lambda: s.execute(q.sql), reps)
                            except CapabilityError as exc:
                                entries.append(SuiteEntry(name, mode, cname, "skipped",
                                                          str(exc).split(";")[0]))
                                continue
                        else:
                            rs, rep, samples = _timed(lambda: s.naive_execute(q.sql), reps)
                        if not results_equal(rs.rows, expected[name], q.ordered):
                            raise BenchMismatch(
                                f"{name} under {cname}/{mode} returned {len(rs.rows)} rows "
                                f"that differ from plain mode ({len(expected[name])} rows)")
                        entries.append(_entry(name, mode, cname, rs, rep, samples))
        return {
            "config": asdict(cfg),
            "dataset": {"digest": digest(self.plain_db),
                        "rows": {t.name: len(t.rows) for t in self.plain_db.tables.values()}},
            "results": [asdict(e) for e in entries],
        }


def run_suite(config: SuiteConfig | None = None, dataset: Database | None = None) -> dict:
    return Suite(config or SuiteConfig(), dataset).run()


def ratio(report: dict, query_name: str, num: tuple, den: tuple, stat: str = "mean") -> float:
    """Wall-time ratio of two (mode, cipher) entries of one query."""
    def find(mode, cipher):
        for e in report["results"]:
            if (e["query"], e["mode"], e["cipher"]) == (query_name, mode, cipher) \
                    and e["status"] == "ok":
                return e["wall_micros"][stat]
        raise KeyError(f"no {mode}/{cipher} result for {query_name}")
    return find(*num) / max(1, find(*den))
