"""Parser, renderer and rewriter for the supported SQL subset."""
from . import ast
from .generate import random_query, random_statement
from .lexer import KEYWORDS, Token, split_statements, tokenize
from .parser import parse, parse_expression
from .render import default_label, quote, render, render_expr, render_literal
from .transform import Visitor, transform

__all__ = [
    "ast", "KEYWORDS", "Token", "tokenize", "split_statements", "parse", "parse_expression", "render",
    "render_expr", "render_literal", "default_label", "quote", "Visitor", "transform",
    "random_statement", "random_query",
]
