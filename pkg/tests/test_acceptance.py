"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line (collected again in
the terminal summary) before asserting, so a failing run still says which
measurement missed and by how much.
"""
import random
import string
import time
from collections import Counter
from fractions import Fraction
from math import comb

import pytest

from conftest import K0
from dice.bench import QUERIES, DatasetSpec, SuiteConfig, generate, run_workload
from dice.bench.datagen import SCHEMA_DOC
from dice.bench.policies import CIPHERS, bench_policy
from dice.bench.suite import Suite
from dice.bench.workload import WorkloadConfig, overhead_ratio, prepare_backend
from dice.cipherkit import (FF1, UPPER_DIGITS, CipherSpec, ColumnContext, hgd_inverse_cdf,
                            hgd_sample, make_cipher)
from dice.rewrite import decrypt_identifier, encrypt_identifier
from dice.session import connect
from dice.sqlkit import parse, random_statement, render
from dice.trace import MemorySink, Tracer
from oracles import NIST_FF1, FixedCoins, hgd_pmf_bruteforce

CTX = ColumnContext("T", "C")


@pytest.fixture
def report(request):
    def _report(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        request.config.acceptance_lines.append(line)
        assert ok, line
    return _report


def majority(trial, runs=3):
    """Run ``trial`` ``runs`` times; returns (passed, list of per-run details)."""
    results = [trial() for _ in range(runs)]
    return sum(ok for ok, _ in results) * 2 > runs, [d for _, d in results]


# -- 1: round trips ----------------------------------------------------------------

def _values(kind, rng, n):
    def text(alphabet, lo=1, hi=16):
        return "".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi)))
    if kind == "ope":
        return [rng.randrange(1 << 32) for _ in range(n)]
    if kind == "ff1":
        return [text(string.digits, 6, 12) for _ in range(n)]
    if kind in ("caesar", "substitution"):
        return [text(UPPER_DIGITS) for _ in range(n)]
    printable = string.ascii_letters + string.digits + " '%_-"
    return [rng.randint(-(1 << 63), (1 << 63) - 1) if rng.random() < 0.5 else text(printable, 0)
            for _ in range(n)]


def test_criterion_1_cipher_round_trips(report):
    rng = random.Random(1)
    specs = [CipherSpec("null"), CipherSpec("caesar", shift=11, alphabet=UPPER_DIGITS),
             CipherSpec("substitution", key=K0, alphabet=UPPER_DIGITS), CipherSpec("ope", key=K0),
             CipherSpec("ff1", key=K0), CipherSpec("detblock", key=K0)]
    t0 = time.perf_counter()
    failures = Counter()
    for spec in specs:
        c = make_cipher(spec)
        for v in _values(spec.kind, rng, 10_000):
            if c.decrypt(c.encrypt(v, CTX), CTX) != v:
                failures[spec.kind] += 1
    elapsed = time.perf_counter() - t0
    report(1, not failures and elapsed < 60,
           f"6 kinds x 10^4 values, failures={dict(failures) or 0}, {elapsed:.1f}s (< 60s)")


# -- 2: OPE order and the exact sampler ---------------------------------------------

def test_criterion_2_ope_monotone_and_exact_hgd(report):
    rng = random.Random(2)
    c = make_cipher(CipherSpec("ope", key=K0, domain_bits=16, range_bits=32))
    violations = 0
    for _ in range(10_000):
        a, b = sorted(rng.sample(range(1 << 16), 2))
        if not c.encrypt(a, CTX) < c.encrypt(b, CTX):
            violations += 1

    mismatched = []
    instances = 0
    for N in range(1, 13):
        for K in range(N + 1):
            for n in range(N + 1):
                instances += 1
                pmf = hgd_pmf_bruteforce(N, K, n)
                total = comb(N, n)
                # inverse CDF over every coin value, then the sampler with its own coin bound
                cdf = Counter(hgd_inverse_cdf(N, K, n, u) for u in range(total))
                law = {k: Fraction(cnt, total) for k, cnt in cdf.items()}
                probe = FixedCoins(0)
                hgd_sample(N, K, n, probe)
                if probe.bounds:
                    (bound,) = probe.bounds
                    drawn = Counter(hgd_sample(N, K, n, FixedCoins(u)) for u in range(bound))
                    sampled = {k: Fraction(cnt, bound) for k, cnt in drawn.items()}
                else:
                    sampled = {hgd_sample(N, K, n, None): 1}
                if law != pmf or sampled != pmf:
                    mismatched.append((N, K, n))
    report(2, violations == 0 and not mismatched,
           f"ordering violations={violations}/10^4, HGD mismatches={len(mismatched)}"
           f"/{instances} instances with N <= 12")


# -- 3: FF1 samples ----------------------------------------------------------------

def test_criterion_3_ff1_samples(report):
    bad = []
    for i, (key, radix, tweak, pt, ct) in enumerate(NIST_FF1, 1):
        f = FF1(bytes.fromhex(key), radix)
        t = bytes.fromhex(tweak)
        if f.encrypt(pt, t) != ct or f.decrypt(ct, t) != pt:
            bad.append(i)
    report(3, not bad, f"{len(NIST_FF1) - len(bad)}/{len(NIST_FF1)} published samples match")


# -- 4: parser round trip ----------------------------------------------------------

def test_criterion_4_parser_round_trip(report):
    rng = random.Random(4)
    stmts = [random_statement(rng) for _ in range(1500)]
    sources = [render(s) for s in stmts] + [q.sql for q in QUERIES]
    bad = [sql for sql in sources if parse(render(parse(sql))) != parse(sql)]
    report(4, not bad, f"{len(sources) - len(bad)}/{len(sources)} statements "
                       f"(1500 generated + {len(QUERIES)} benchmark queries)")


# -- 5: transparency -----------------------------------------------------------------

def test_criterion_5_transparency(report, dataset_1k):
    checked, bad = 0, []
    for cipher in CIPHERS:
        policy = bench_policy(cipher)
        backend = prepare_backend(policy, dataset_1k)
        with connect(backend, policy=policy, mode="fallback") as s:
            for q in QUERIES:
                stmt = parse(q.sql)
                got = s.query(q.sql)
                want = dataset_1k.execute(stmt)
                same = got.rows == want.rows if stmt.order_by else \
                    Counter(got.rows) == Counter(want.rows)
                checked += 1
                if not same or got.columns != want.columns:
                    bad.append(f"{q.name}/{cipher}")
    report(5, not bad, f"{checked - len(bad)}/{checked} (query, policy) pairs equal plaintext"
                       + (f"; differing: {', '.join(bad)}" if bad else ""))


# -- 6: naive penalty ----------------------------------------------------------------

def test_criterion_6_naive_penalty(report):
    dataset = generate(DatasetSpec(seed=42, customers=10_000))
    policy = bench_policy("ope")
    backend = prepare_backend(policy, dataset)
    sql = next(q.sql for q in QUERIES if q.name == "where")
    with connect(backend, policy=policy, mode="strict") as s:
        rs, rewritten = s.execute(sql)
        assert rewritten.strategy == "rewritten"
        naive_rs, naive = s.naive_execute(sql)
        assert Counter(rs.rows) == Counter(naive_rs.rows)
        transfer = naive.rows_transferred / max(rewritten.rows_transferred, 1)
        slower = 0
        for _ in range(10):
            r = s.execute(sql)[1].wall_micros
            n = s.naive_execute(sql)[1].wall_micros
            slower += n > r
    report(6, transfer >= 26 and slower >= 9,
           f"rows {naive.rows_transferred}/{rewritten.rows_transferred} = {transfer:.0f}x "
           f"(>= 26), naive slower in {slower}/10 (>= 9)")


# -- 7: parallel amortization ----------------------------------------------------------

def test_criterion_7_parallel_amortization(report, dataset_1k):
    def ratio_at(clients):
        runs = {}
        for policy in ("plain", "ope"):
            cfg = WorkloadConfig(clients=clients, duration_s=2.0, ramp_up_s=0.3, policy=policy,
                                 scale=1000, seed=42)
            res = run_workload(cfg, dataset_1k)
            assert res.conserved
            runs[policy] = res
        return overhead_ratio(runs["ope"], runs["plain"])

    def trial():
        one, ten = ratio_at(1), ratio_at(10)
        return ten < one, f"{one:.3f}->{ten:.3f}"

    ok, details = majority(trial)
    report(7, ok, "ope/plain statement latency ratio, 1 -> 10 clients: " + ", ".join(details))


# -- 8: network dominance --------------------------------------------------------------

def _dice_plain_ratios(doc):
    """Per cipher: summed mean wall time of rewritten queries over plain mode's."""
    plain = {e["query"]: e["wall_micros"]["mean"] for e in doc["results"] if e["mode"] == "plain"}
    out = {}
    for cipher in CIPHERS:
        ok = [e for e in doc["results"]
              if e["cipher"] == cipher and e["mode"] == "dice" and e["status"] == "ok"]
        out[cipher] = sum(e["wall_micros"]["mean"] for e in ok) / \
            sum(plain[e["query"]] for e in ok)
    return out


def test_criterion_8_network_dominance(report):
    suite = Suite(SuiteConfig(scale=10_000, seed=42, modes=("plain", "dice"), latency_ms=50))

    def trial():
        ratios = _dice_plain_ratios(suite.run())
        worst = max(ratios.values())
        return worst < 1.25, f"worst {worst:.3f} ({max(ratios, key=ratios.get)})"

    ok, details = majority(trial)
    report(8, ok, "dice/plain wall ratio at 50 ms latency (< 1.25): " + ", ".join(details))


# -- 9: metadata encryption ------------------------------------------------------------

def test_criterion_9_metadata_encryption(report, small_dataset):
    names = sorted(set(SCHEMA_DOC) | {c for cols in SCHEMA_DOC.values() for c in cols})
    problems = []
    for cipher in CIPHERS:
        policy = bench_policy(cipher)
        enc = [encrypt_identifier(policy, n) for n in names]
        if len(set(enc)) != len(names):
            problems.append(f"{cipher}: collision")
        if [decrypt_identifier(policy, e) for e in enc] != names:
            problems.append(f"{cipher}: not invertible")
        snapshot = repr(prepare_backend(policy, small_dataset).to_doc())
        leaked = [n for n in names if n in snapshot]
        if leaked:
            problems.append(f"{cipher}: snapshot contains {', '.join(leaked)}")
    report(9, not problems, f"{len(names)} schema names under {len(CIPHERS)} identifier ciphers"
                            + (f"; {'; '.join(problems)}" if problems else ""))


# -- 10: trace accounting --------------------------------------------------------------

SCRIPT = ("SELECT C.FIRSTNAME, C.LASTNAME FROM CUSTOMERS C WHERE C.CUSTOMERID = '000000042'",
          "SELECT * FROM CUSTOMERS C WHERE C.INCOME < 20001",
          "SELECT count(*) FROM CUSTOMERS C WHERE C.INCOME BETWEEN 30000 AND 40000",
          "SELECT * FROM CUSTOMERS C WHERE C.LASTNAME LIKE 'S%'",
          "SELECT FIRSTNAME, AGE FROM CUSTOMERS C ORDER BY C.AGE LIMIT 5")


def test_criterion_10_trace_accounting(report, small_dataset):
    policy = bench_policy("ope")
    backend = prepare_backend(policy, small_dataset)
    sink = MemorySink()
    tracer = Tracer(sink)
    reports = []
    with connect(backend, policy=policy, mode="fallback", trace=tracer) as s:
        for sql in SCRIPT:
            reports.append(s.execute(sql)[1])
    tracer.flush()
    events = sink.events()
    tracer.close()
    kinds = Counter(e.kind for e in events)
    want = {"query": len(SCRIPT), "result": len(SCRIPT),
            "encrypt": sum(r.encrypt_ops for r in reports),
            "decrypt": sum(r.decrypt_ops for r in reports)}
    got = {k: kinds[k] for k in want}
    queries = [e for e in events if e.kind == "query"]
    both = sum(bool(e.plaintext and e.ciphertext) for e in queries)
    strategies = sorted({r.strategy for r in reports})
    report(10, got == want and both == len(SCRIPT) and tracer.dropped == 0,
           f"events {got} vs reports {want}, {both}/{len(SCRIPT)} query events carry both SQL "
           f"forms (strategies: {', '.join(strategies)})")
