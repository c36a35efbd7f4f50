"""Policy-driven rewriting of plaintext SQL into SQL over ciphertext."""
from .identifiers import decrypt_identifier, encrypt_identifier, escape, is_identifier, unescape
from .policy import (ALPHABETS, IDENTIFIER_KINDS, EncryptionPolicy, load_policy, null_policy,
                     policy_from_doc, policy_from_text, policy_to_doc, spec_from_doc, spec_to_doc)
from .rewriter import (Bindings, NeedsNaive, OpLog, OutputCol, Rewritten, Scope,
                       UnsupportedOutcome, analyze, bind_literals, decrypt_result, decrypt_rows, decrypt_with_plan,
                       output_plan, rewrite_statement, table_output_plan)
from .schema import ColumnInfo, SchemaMap, TableInfo, build_schema, widen_type
from .snapshot import decrypt_database, encrypt_database

__all__ = [
    "ALPHABETS", "Bindings", "ColumnInfo", "EncryptionPolicy", "IDENTIFIER_KINDS", "NeedsNaive",
    "OpLog", "OutputCol", "Rewritten", "SchemaMap", "Scope", "TableInfo", "UnsupportedOutcome",
    "analyze", "bind_literals", "build_schema", "decrypt_database", "decrypt_identifier",
    "decrypt_result", "decrypt_rows", "decrypt_with_plan", "encrypt_database", "encrypt_identifier", "escape",
    "is_identifier", "load_policy", "null_policy", "output_plan", "policy_from_doc",
    "policy_from_text", "policy_to_doc", "rewrite_statement", "spec_from_doc", "spec_to_doc",
    "table_output_plan", "unescape", "widen_type",
]
