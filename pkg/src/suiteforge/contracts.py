"""Program contracts: precondition assertions injected into ground truth.

Contracts are host-language ``assert`` statements over the entry point's
parameters, stored verbatim in the dataset.  Instrumentation inserts them
at function entry (after the docstring); running the instrumented ground
truth on a candidate input classifies it as in-domain or rejected.
"""

from __future__ import annotations

import ast
import builtins
import enum
from typing import Sequence

from .errors import MalformedContract, ProgramLoadError
from .backend import ExecutionResult, STATUS_ASSERTION, STATUS_OK, STATUS_TIMEOUT

MARKER = "__contract_checked__"

# Names an assertion may reference besides the entry point's parameters.
_ALLOWED_BUILTINS = frozenset(
    name for name in dir(builtins) if not name.startswith("_")
)


class Verdict(str, enum.Enum):
    """Classification of one executed input."""

    VALID = "valid"
    CONTRACT_VIOLATION = "contract-violation"
    CRASH_ON_VALID_PATH = "crash-on-valid-path"
    TIMEOUT = "timeout"


def entry_params(program: str, entry_point: str) -> list[str]:
    try:
        tree = ast.parse(program)
    except SyntaxError as exc:
        raise ProgramLoadError(f"ground truth does not parse: {exc}") from exc
    fn = find_function(tree, entry_point)
    if fn is None:
        raise ProgramLoadError(f"entry point {entry_point!r} not defined")
    args = fn.args
    names = [a.arg for a in args.posonlyargs + args.args + args.kwonlyargs]
    if args.vararg:
        names.append(args.vararg.arg)
    if args.kwarg:
        names.append(args.kwarg.arg)
    return names


def find_function(tree: ast.Module, name: str) -> ast.FunctionDef | None:
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)) and node.name == name:
            return node
    return None


def _bound_names(node: ast.AST) -> set[str]:
    bound: set[str] = set()
    for sub in ast.walk(node):
        if isinstance(sub, ast.comprehension):
            for target in ast.walk(sub.target):
                if isinstance(target, ast.Name):
                    bound.add(target.id)
        elif isinstance(sub, ast.NamedExpr) and isinstance(sub.target, ast.Name):
            bound.add(sub.target.id)
    return bound


def parse_assertion(text: str) -> ast.Assert:
    """Parse one assertion; it must be a single ``assert`` statement."""
    try:
        tree = ast.parse(text.strip())
    except SyntaxError as exc:
        raise MalformedContract(f"assertion does not parse: {text!r}") from exc
    if len(tree.body) != 1 or not isinstance(tree.body[0], ast.Assert):
        raise MalformedContract(f"contract entry is not a single assert: {text!r}")
    return tree.body[0]


def check_contract(assertions: Sequence[str], params: Sequence[str]) -> None:
    """Pre-check assertion syntax and names against the entry signature.

    Raises :class:`MalformedContract` if an assertion is not a lone
    ``assert`` or references a name that is neither a parameter, a
    builtin, nor bound inside the expression itself.
    """
    allowed = set(params) | _ALLOWED_BUILTINS
    for text in assertions:
        node = parse_assertion(text)
        usable = allowed | _bound_names(node)
        for sub in ast.walk(node):
            if isinstance(sub, ast.Name) and isinstance(sub.ctx, ast.Load):
                if sub.id not in usable:
                    raise MalformedContract(
                        f"assertion references unknown name {sub.id!r}: {text!r}",
                        field="contract",
                    )


def instrument(program: str, entry_point: str, assertions: Sequence[str]) -> str:
    """Ground truth with contract assertions injected at function entry.

    An empty contract returns the program byte-identical.  Instrumenting an
    already-instrumented program is a no-op (guarded by a marker binding).
    """
    if not assertions:
        return program
    params = entry_params(program, entry_point)
    check_contract(assertions, params)
    tree = ast.parse(program)
    fn = find_function(tree, entry_point)
    assert fn is not None  # entry_params verified it
    body = fn.body
    insert_at = 0
    if body and isinstance(body[0], ast.Expr) and isinstance(body[0].value, ast.Constant) \
            and isinstance(body[0].value.value, str):
        insert_at = 1
    head = body[insert_at] if len(body) > insert_at else None
    if isinstance(head, ast.Assign) and any(
        isinstance(t, ast.Name) and t.id == MARKER for t in head.targets
    ):
        return program
    marker = ast.parse(f"{MARKER} = True").body[0]
    injected = [marker] + [parse_assertion(text) for text in assertions]
    fn.body[insert_at:insert_at] = injected
    return ast.unparse(ast.fix_missing_locations(tree))


def classify_validity(result: ExecutionResult) -> Verdict:
    """Map an execution outcome of the instrumented ground truth."""
    if result.status == STATUS_OK:
        return Verdict.VALID
    if result.status == STATUS_ASSERTION:
        return Verdict.CONTRACT_VIOLATION
    if result.status == STATUS_TIMEOUT:
        return Verdict.TIMEOUT
    return Verdict.CRASH_ON_VALID_PATH
