"""``dice``: command-line entry point.

Subcommands: init-policy, serve, exec, repl, import, explain, bench, monitor.
Data goes to stdout, diagnostics to stderr.  Failures exit with the code of
the error class (``dice.errors.EXIT_CODES``); usage errors exit with 2.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import secrets
import signal
import sys
import threading
import time
from pathlib import Path

import yaml

from dice import __version__
from dice.backend import load_snapshot, save_snapshot, serve
from dice.backend.engine import Database
from dice.errors import EXIT_CODES, DiceError, IoError, SchemaError, exit_code_for
from dice.sqlkit import ast, parse, quote, split_statements
from dice.trace import monitor

log = logging.getLogger("dice.cli")

FORMATS = ("table", "csv", "json")


# -- output helpers ----------------------------------------------------------

def _cell(v) -> str:
    return "NULL" if v is None else str(v)


def format_table(columns, rows) -> str:
    cells = [[str(c) for c in columns]] + [[_cell(v) for v in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    lines = [" | ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    lines.append(f"({len(rows)} row{'s' if len(rows) != 1 else ''})")
    return "\n".join(lines)


def print_result(rs, fmt: str, out=None):
    out = out or sys.stdout
    if not rs.columns:
        print(f"{rs.affected} row{'s' if rs.affected != 1 else ''} affected", file=out)
        return
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(rs.columns)
        w.writerows([["" if v is None else v for v in r] for r in rs.rows])
    elif fmt == "json":
        print(json.dumps({"columns": list(rs.columns), "rows": [list(r) for r in rs.rows]}),
              file=out)
    else:
        print(format_table(rs.columns, rs.rows), file=out)


def _report_line(rep) -> str:
    line = (f"strategy={rep.strategy} rows_transferred={rep.rows_transferred} "
            f"wall_ms={rep.wall_micros / 1000:.3f} encrypt_ops={rep.encrypt_ops} "
            f"decrypt_ops={rep.decrypt_ops}")
    return line + (f" reason={rep.reason!r}" if rep.reason else "")


def _err(msg: str):
    print(msg, file=sys.stderr)


# -- sessions ----------------------------------------------------------------

def _add_session_args(p: argparse.ArgumentParser):
    p.add_argument("--connect", "-c", default=os.environ.get("DICE_CONNECT", "dice:mem:"),
                   help="dice:<backend> or plain:<backend>; backend is mem:, mem:<snapshot> "
                        "or host:port (default: $DICE_CONNECT or dice:mem:)")
    p.add_argument("--policy", "-p", help="policy file (default: $DICE_POLICY)")
    p.add_argument("--mode", choices=("strict", "fallback"),
                   help="strict refuses statements that need naive evaluation "
                        "(default: $DICE_MODE or strict)")
    p.add_argument("--trace", help="trace sink: file path, '-' for stderr, or tcp://host:port")
    p.add_argument("--log-sensitive", action="store_true",
                   help="write plaintext values and SQL literals into the trace")
    p.add_argument("--latency-ms", type=float, default=0,
                   help="simulated delay per request to an in-process backend")
    p.add_argument("--save", metavar="SNAPSHOT",
                   help="write the backend's (ciphertext) contents here afterwards")


def _open(args):
    from dice.session import connect
    return connect(args.connect, args.policy, args.mode, args.trace,
                   latency_ms=args.latency_ms, log_sensitive=args.log_sensitive)


def _finish(session, args):
    if args.save:
        save_snapshot(session.connector.snapshot(), args.save)
        _err(f"saved backend snapshot to {args.save}")


# -- init-policy -------------------------------------------------------------

def _tables_from_ddl(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    stmts, rest = split_statements(text)
    if rest:
        stmts.append(rest)
    tables = {}
    for sql in stmts:
        stmt = parse(sql)
        if not isinstance(stmt, ast.CreateTable):
            raise SchemaError(f"{path}: only CREATE TABLE statements are allowed, got {sql[:40]!r}")
        tables[stmt.name] = {c.name: c.type.sql() for c in stmt.columns}
    return tables


def cmd_init_policy(args) -> int:
    if args.bench:
        from dice.bench import policy_doc
        doc = policy_doc(args.bench)
    else:
        doc = {"master_key": secrets.token_hex(32),
               "identifier_cipher": {"kind": args.identifier_cipher or args.cipher}}
        if args.int_cipher:
            doc["defaults"] = {"text": {"kind": args.cipher}, "int": {"kind": args.int_cipher}}
        else:
            doc["default"] = {"kind": args.cipher}
        if args.ddl:
            doc["tables"] = _tables_from_ddl(args.ddl)
    from dice.rewrite import policy_from_doc
    policy_from_doc(doc, "<init-policy>")  # refuse to write a policy that does not load
    text = yaml.safe_dump(doc, sort_keys=False)
    if not args.out or args.out == "-":
        sys.stdout.write(text)
        return 0
    out = Path(args.out)
    if out.exists() and not args.force:
        _err(f"{out} exists; use --force to overwrite")
        return 2
    try:
        out.write_text(text, encoding="utf-8")
        os.chmod(out, 0o600)  # holds the master key
    except OSError as exc:
        raise IoError(f"cannot write {out}: {exc}") from exc
    _err(f"wrote policy to {out}")
    return 0


# -- serve -------------------------------------------------------------------

def cmd_serve(args) -> int:
    db = load_snapshot(args.data) if args.data else Database()
    server = serve(db, args.listen, args.latency_ms)
    stop = threading.Event()
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    print(f"listening on {server.address}", flush=True)
    try:
        while not stop.wait(0.5):
            pass
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        if args.save:
            save_snapshot(db, args.save)
            _err(f"saved snapshot to {args.save}")
    _err("server stopped")
    return 0


# -- exec / explain / repl ---------------------------------------------------

def _script(args) -> list:
    if args.file:
        try:
            text = sys.stdin.read() if args.file == "-" else Path(args.file).read_text("utf-8")
        except OSError as exc:
            raise IoError(f"cannot read {args.file}: {exc}") from exc
    elif args.sql:
        text = ";\n".join(args.sql)
    else:
        text = sys.stdin.read()
    stmts, rest = split_statements(text)
    if rest:
        stmts.append(rest)
    return stmts


def cmd_exec(args) -> int:
    stmts = _script(args)
    if not stmts:
        _err("no statements given")
        return 2
    with _open(args) as s:
        for sql in stmts:
            rs, rep = s.execute(sql)
            print_result(rs, args.format)
            if args.report:
                _err(_report_line(rep))
        _finish(s, args)
    return 0


def cmd_explain(args) -> int:
    stmts = _script(args)
    with _open(args) as s:
        for i, sql in enumerate(stmts):
            if i:
                print()
            print(s.explain(sql))
    return 0


def _repl_line(s, sql: str, fmt: str):
    """Run one REPL input; connection failures propagate, everything else is reported."""
    try:
        if sql.lower().startswith("\\explain"):
            print(s.explain(sql[len("\\explain"):].strip()))
            return
        rs, rep = s.execute(sql)
        print_result(rs, fmt)
        _err(_report_line(rep))
    except IoError:
        raise
    except DiceError as exc:
        _err(f"{type(exc).__name__}: {exc}")


def cmd_repl(args) -> int:
    interactive = sys.stdin.isatty()
    with _open(args) as s:
        if interactive:
            _err(f"dice {__version__}; end statements with ';', \\explain <sql>; for the plan, "
                 f"\\quit to leave")
        buf = ""
        while True:
            if interactive:
                sys.stderr.write("dice> " if not buf else "  ... ")
                sys.stderr.flush()
            line = sys.stdin.readline()
            if not line:
                break
            if not buf and line.strip().lower() in ("\\quit", "\\q", "quit", "exit"):
                break
            if not buf and line.strip().lower() == "\\tables":
                print("\n".join(s.tables()))
                continue
            stmts, buf = split_statements(buf + "\n" + line if buf else line)
            for sql in stmts:
                if sql.strip().lower() in ("\\quit", "\\q"):
                    _finish(s, args)
                    return 0
                _repl_line(s, sql, args.format)
        if buf.strip():
            _err("discarding unterminated input (missing ';')")
        _finish(s, args)
    return 0


# -- import ------------------------------------------------------------------

def _column_types(s, table: str) -> dict:
    if s.schema.has_table(table):
        return {c.name.upper(): c.plain_type for c in s.schema.table(table).columns}
    if s.passthrough:
        for t in s.connector.snapshot()["tables"]:
            if t["name"].upper() == table.upper():
                from dice.backend.engine import parse_column_type
                return {c["name"].upper(): parse_column_type(c["type"]) for c in t["columns"]}
    raise SchemaError(f"unknown table {table}; declare it in the policy or create it first")


def _literal(value: str, ctype):
    if value == "":
        return "NULL"
    if ctype.is_text:
        return quote(value)
    try:
        return str(int(value))
    except ValueError:
        raise SchemaError(f"{value!r} is not an integer") from None


def cmd_import(args) -> int:
    try:
        f = open(args.csv, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot open {args.csv}: {exc}") from exc
    t0 = time.perf_counter()
    n = 0
    with f, _open(args) as s:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header:
            raise SchemaError(f"{args.csv} has no header row")
        types = _column_types(s, args.table)
        header = [h.strip() for h in header]
        missing = set(types) - {h.upper() for h in header}
        extra = [h for h in header if h.upper() not in types]
        if missing or extra:
            raise SchemaError(f"CSV header does not match {args.table}: "
                              f"missing {sorted(missing) or '-'}, unknown {extra or '-'}")
        cols = ", ".join(header)
        batch = args.batch
        open_txn = False
        try:
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise SchemaError(f"{args.csv}:{lineno}: expected {len(header)} fields, "
                                      f"got {len(row)}")
                if batch and not open_txn:
                    s.execute("BEGIN")
                    open_txn = True
                try:
                    vals = ", ".join(_literal(v, types[h.upper()]) for h, v in zip(header, row))
                except SchemaError as exc:
                    raise SchemaError(f"{args.csv}:{lineno}: {exc}") from None
                s.execute(f"INSERT INTO {args.table} ({cols}) VALUES ({vals})")
                n += 1
                if batch and n % batch == 0:
                    s.execute("COMMIT")
                    open_txn = False
            if open_txn:
                s.execute("COMMIT")
                open_txn = False
        finally:
            if open_txn:
                s.execute("ROLLBACK")
        _finish(s, args)
    print(n)
    _err(f"imported {n} rows into {args.table} in {time.perf_counter() - t0:.3f} s")
    return 0


# -- bench -------------------------------------------------------------------

def _emit_report(doc: dict, out):
    from dice.bench import summary_text, write_report
    sys.stdout.write(summary_text(doc))
    if out:
        for p in write_report(out, doc):
            _err(f"wrote {p}")


def cmd_bench_gen(args) -> int:
    from dice.bench import CIPHERS, DatasetSpec, gen_data
    policies = args.policy or list(CIPHERS)
    manifest = gen_data(DatasetSpec(seed=args.seed, customers=args.scale), args.out, policies)
    print(json.dumps(manifest, indent=2))
    return 0


def cmd_bench_suite(args) -> int:
    from dice.bench import CIPHERS, SuiteConfig, run_suite
    from dice.bench.policies import POLICY_DOCS
    ciphers, path = CIPHERS, None
    if args.policy:
        names = [p for p in args.policy if p in POLICY_DOCS and p != "plain"]
        files = [p for p in args.policy if p not in POLICY_DOCS]
        if len(files) > 1 or (files and names):
            _err("--policy takes bench policy names, or a single policy file")
            return 2
        ciphers, path = tuple(names), (files[0] if files else None)
    cfg = SuiteConfig(scale=args.scale, seed=args.seed, ciphers=ciphers,
                      modes=tuple(args.mode or ("plain", "dice", "naive")),
                      queries=tuple(args.query) if args.query else SuiteConfig.queries,
                      repetitions=args.repetitions, latency_ms=args.latency_ms,
                      policy_path=path)
    try:
        cfg.validate()
    except (ValueError, KeyError) as exc:
        _err(str(exc).strip("'\""))
        return 2
    _emit_report({"suite": run_suite(cfg)}, args.out)
    return 0


def cmd_bench_workload(args) -> int:
    from dice.bench import DatasetSpec, WorkloadConfig, generate, run_workload
    dataset = generate(DatasetSpec(seed=args.seed, customers=args.scale))
    runs = []
    for policy in args.policy or ["plain", "ope"]:
        for clients in args.clients or [1, 10]:
            cfg = WorkloadConfig(clients=clients, duration_s=args.duration,
                                 ramp_up_s=args.ramp_up, policy=policy, scale=args.scale,
                                 seed=args.seed, latency_ms=args.latency_ms,
                                 service_ms=args.service_ms)
            _err(f"workload: policy={policy} clients={clients} ...")
            runs.append(run_workload(cfg, dataset).to_doc())
    _emit_report({"workload": {"runs": runs}}, args.out)
    return 0


# -- monitor -----------------------------------------------------------------

def cmd_monitor(args) -> int:
    try:
        for line in monitor(args.source, follow=args.follow):
            print(line, flush=True)
    except KeyboardInterrupt:
        pass
    return 0


# -- parser ------------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dice", description="Transparent SQL encryption proxy.",
                                epilog="exit codes: 0 ok, 2 usage, " + ", ".join(
                                    f"{c} {n}" for n, c in sorted(EXIT_CODES.items(),
                                                                  key=lambda kv: kv[1])))
    p.add_argument("--version", action="version", version=f"dice {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    q = sub.add_parser("init-policy", help="write a policy file with a fresh master key")
    q.add_argument("--out", "-o", help="policy file to write (default: stdout)")
    q.add_argument("--cipher", default="caesar", help="default cipher kind (default: caesar)")
    q.add_argument("--int-cipher", help="cipher kind for integer columns (default: --cipher)")
    q.add_argument("--identifier-cipher", help="cipher for table/column names "
                                               "(default: --cipher)")
    q.add_argument("--ddl", help="file of CREATE TABLE statements to declare in the policy")
    q.add_argument("--bench", help="write a benchmark policy (plain, caesar, substitution, ope, "
                                   "ff1, detblock) instead")
    q.add_argument("--force", action="store_true", help="overwrite an existing file")
    q.set_defaults(func=cmd_init_policy)

    q = sub.add_parser("serve", help="run the backend server")
    q.add_argument("--listen", default="127.0.0.1:5433", help="host:port (port 0 picks one)")
    q.add_argument("--latency-ms", type=int, default=0, help="delay before each response")
    q.add_argument("--data", help="snapshot file to load")
    q.add_argument("--save", help="write the database to this snapshot on shutdown")
    q.set_defaults(func=cmd_serve)

    for name, func, text in (("exec", cmd_exec, "execute SQL through a session"),
                             ("explain", cmd_explain, "show how statements would run")):
        q = sub.add_parser(name, help=text)
        _add_session_args(q)
        q.add_argument("sql", nargs="*", help="statements (default: read stdin)")
        q.add_argument("--file", "-f", help="SQL script ('-' for stdin)")
        if name == "exec":
            q.add_argument("--format", choices=FORMATS, default="table")
            q.add_argument("--report", action="store_true",
                           help="print each statement's execution report on stderr")
        q.set_defaults(func=func)

    q = sub.add_parser("repl", help="interactive SQL shell")
    _add_session_args(q)
    q.add_argument("--format", choices=FORMATS, default="table")
    q.set_defaults(func=cmd_repl)

    q = sub.add_parser("import", help="load a CSV file into a table through a session")
    _add_session_args(q)
    q.add_argument("--table", "-t", required=True)
    q.add_argument("--csv", required=True, help="UTF-8 CSV with a header row")
    q.add_argument("--batch", type=_positive_int, help="rows per transaction")
    q.set_defaults(func=cmd_import)

    q = sub.add_parser("bench", help="benchmark harness")
    bsub = q.add_subparsers(dest="bench_command", required=True, metavar="BENCH")

    b = bsub.add_parser("gen", help="write plaintext and ciphertext snapshots")
    b.add_argument("--scale", type=_positive_int, default=10_000, help="customers")
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--policy", action="append", help="bench policy name (repeatable)")
    b.add_argument("--out", required=True, help="output directory")
    b.set_defaults(func=cmd_bench_gen)

    b = bsub.add_parser("suite", help="run the nine-query suite")
    b.add_argument("--scale", type=_positive_int, default=10_000, help="customers")
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--policy", action="append",
                   help="bench policy name (repeatable) or one policy file")
    b.add_argument("--mode", action="append", choices=("plain", "dice", "naive"))
    b.add_argument("--query", action="append", help="query name (repeatable)")
    b.add_argument("--repetitions", type=int, default=3)
    b.add_argument("--latency-ms", type=float, default=0, help="simulated backend delay")
    b.add_argument("--out", help="report.json (CSV, text and PNG files are written next to it)")
    b.set_defaults(func=cmd_bench_suite)

    b = bsub.add_parser("workload", help="concurrent order-processing workload")
    b.add_argument("--clients", type=_positive_int, action="append",
                   help="client count (repeatable; default 1 and 10)")
    b.add_argument("--duration", type=float, default=10, help="measured seconds per run")
    b.add_argument("--ramp-up", type=float, default=1, help="uncounted seconds first")
    b.add_argument("--policy", action="append",
                   help="bench policy name or file (repeatable; default plain and ope)")
    b.add_argument("--scale", type=_positive_int, default=1_000, help="customers")
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--latency-ms", type=float, default=0, help="simulated backend delay")
    b.add_argument("--service-ms", type=float, default=2,
                   help="backend time per statement in its single service slot")
    b.add_argument("--out", help="report.json (CSV, text and PNG files are written next to it)")
    b.set_defaults(func=cmd_bench_workload)

    q = sub.add_parser("monitor", help="render a trace file or live trace stream")
    q.add_argument("--source", required=True, help="trace file, or tcp://host:port to listen on")
    q.add_argument("--follow", action="store_true", help="keep reading as the file grows")
    q.set_defaults(func=cmd_monitor)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DiceError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return exit_code_for(exc)
    except KeyboardInterrupt:
        return 130
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
