"""Desk-scale benchmark: dataset, query suite, concurrent workload and reports."""
from .datagen import DatasetSpec, digest, generate
from .policies import BENCH_MASTER_KEY, CIPHERS, bench_policy, policy_doc
from .queries import QUERIES, BenchQuery, query
from .report import summary_text, write_report
from .snapshots import gen_data
from .suite import MODES, Suite, SuiteConfig, ratio, results_equal, run_suite
from .workload import WorkloadConfig, WorkloadResult, overhead_ratio, run_workload

__all__ = ["BENCH_MASTER_KEY", "BenchQuery", "CIPHERS", "DatasetSpec", "MODES", "QUERIES",
           "Suite", "SuiteConfig", "WorkloadConfig", "WorkloadResult", "bench_policy", "digest",
           "gen_data", "generate", "overhead_ratio", "policy_doc", "query", "ratio",
           "results_equal", "run_suite", "run_workload", "summary_text", "write_report"]
