"""Snapshot files for the benchmark: plaintext plus one ciphertext copy per policy."""
from __future__ import annotations

import json
from pathlib import Path

import yaml

from dice.backend import save_snapshot
from dice.errors import IoError
from dice.rewrite import encrypt_database

from .datagen import DatasetSpec, digest, generate, spec_doc
from .policies import CIPHERS, bench_policy, policy_doc


def gen_data(spec: DatasetSpec, out_dir, policies=CIPHERS) -> dict:
    """Write ``plain.json``, ``<policy>.json`` and ``<policy>.policy.yaml`` files.

    Returns a manifest (also written as ``manifest.json``) with the digest of
    every snapshot.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc
    db = generate(spec)
    save_snapshot(db, out / "plain.json")
    manifest = {"spec": spec_doc(spec), "plain": {"file": "plain.json", "digest": digest(db)},
                "policies": {}}
    for name in policies:
        cipher_db, _ = encrypt_database(bench_policy(name), db)
        snap, pol = out / f"{name}.json", out / f"{name}.policy.yaml"
        save_snapshot(cipher_db, snap)
        try:
            pol.write_text(yaml.safe_dump(policy_doc(name), sort_keys=False), encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {pol}: {exc}") from exc
        manifest["policies"][name] = {"file": snap.name, "policy": pol.name,
                                      "digest": digest(cipher_db)}
    try:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                           encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write manifest: {exc}") from exc
    return manifest
