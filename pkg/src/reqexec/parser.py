"""Parser for the .rqm requirements DSL.

The surface syntax is documented in docs/grammar.md. A model may span multiple
source files; declarations are merged in file order. Both `allInstance()` and
`allInstances()` are accepted and normalized to the plural spelling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .model import (
    AllInstances, And, Any_, Arith, AssociationEnd, AtPre, BoolLit, Compare,
    ConceptualClass, Contract, ExternalCall, Excludes, ForAll, Includes, IntLit,
    Invariant, IsEmpty, IsUnique, LetIn, Loc, Nav, Not, NullLit, OclExpr,
    OclIsNew, OclIsTypeOf, OclIsUndefined, OperationSignature, Or,
    RealLit, RequirementsModel, ResultRef, Select, SelfRef, Size, StrLit,
    UseCase, VarRef,
)

TOP_KEYWORDS = ("actor", "class", "assoc", "usecase", "inv", "contract")
RESERVED = TOP_KEYWORDS + (
    "extends", "on", "let", "in", "and", "or", "not",
    "true", "false", "null", "self", "result",
    "definition", "precondition", "postcondition",
)

PUNCT = ["->", "::", "<=", ">=", "<>", "@pre",
         "{", "}", "(", ")", "[", "]", ":", ";", ",", ".", "|",
         "=", "<", ">", "+", "-", "*", "/"]


@dataclass(frozen=True)
class SourceFile:
    path: str
    content: str


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # 'error' | 'warning'
    loc: Loc
    message: str
    path: str = ""

    def __str__(self) -> str:
        where = f"{self.path}:" if self.path else ""
        return f"{where}{self.loc}: {self.severity}: {self.message}"


@dataclass
class ParseResult:
    model: Optional[RequirementsModel]
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.model is not None


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'int' | 'real' | 'string' | punct | 'eof'
    text: str
    loc: Loc


class _ParseError(Exception):
    def __init__(self, loc: Loc, message: str):
        super().__init__(message)
        self.loc = loc
        self.message = message


def tokenize(content: str, path: str = "") -> tuple[list[Token], list[ParseDiagnostic]]:
    toks: list[Token] = []
    diags: list[ParseDiagnostic] = []
    i, line, col = 0, 1, 1
    n = len(content)

    def loc() -> Loc:
        return Loc(line, col)

    while i < n:
        ch = content[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if content.startswith("//", i):
            while i < n and content[i] != "\n":
                i += 1
                col += 1
            continue
        if content.startswith("/*", i):
            start = loc()
            i += 2
            col += 2
            while i < n and not content.startswith("*/", i):
                if content[i] == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
                i += 1
            if i >= n:
                diags.append(ParseDiagnostic("error", start, "unterminated comment", path))
                break
            i += 2
            col += 2
            continue
        if ch == '"':
            start = loc()
            i += 1
            col += 1
            buf = []
            closed = False
            while i < n:
                c = content[i]
                if c == "\\" and i + 1 < n:
                    esc = content[i + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    i += 2
                    col += 2
                    continue
                if c == '"':
                    i += 1
                    col += 1
                    closed = True
                    break
                if c == "\n":
                    break
                buf.append(c)
                i += 1
                col += 1
            if not closed:
                diags.append(ParseDiagnostic("error", start, "unterminated string literal", path))
            toks.append(Token("string", "".join(buf), start))
            continue
        if ch.isdigit():
            start = loc()
            j = i
            while j < n and content[j].isdigit():
                j += 1
            is_real = False
            if j < n and content[j] == "." and j + 1 < n and content[j + 1].isdigit():
                is_real = True
                j += 1
                while j < n and content[j].isdigit():
                    j += 1
            if j < n and content[j] in "eE":
                k = j + 1
                if k < n and content[k] in "+-":
                    k += 1
                if k < n and content[k].isdigit():
                    is_real = True
                    j = k
                    while j < n and content[j].isdigit():
                        j += 1
            toks.append(Token("real" if is_real else "int", content[i:j], start))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            start = loc()
            j = i
            while j < n and (content[j].isalnum() or content[j] == "_"):
                j += 1
            toks.append(Token("ident", content[i:j], start))
            col += j - i
            i = j
            continue
        for p in PUNCT:
            if content.startswith(p, i):
                toks.append(Token(p, p, loc()))
                i += len(p)
                col += len(p)
                break
        else:
            diags.append(ParseDiagnostic("error", loc(), f"unexpected character {ch!r}", path))
            i += 1
            col += 1
    toks.append(Token("eof", "", loc()))
    return toks, diags


class _Parser:
    def __init__(self, tokens: list[Token], path: str, diags: list[ParseDiagnostic]):
        self.toks = tokens
        self.pos = 0
        self.path = path
        self.diags = diags

    # -- token helpers -----------------------------------------------------
    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def at_ident(self, text: str) -> bool:
        return self.at("ident", text)

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind: str, what: str = "") -> Token:
        t = self.peek()
        if t.kind != kind:
            raise _ParseError(t.loc, f"expected {what or kind}, found {t.text or t.kind!r}")
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise _ParseError(t.loc, f"expected {what}, found {t.text or t.kind!r}")
        if t.text in RESERVED:
            raise _ParseError(t.loc, f"reserved word {t.text!r} cannot be used as {what}")
        return self.next()

    def error(self, message: str, loc: Optional[Loc] = None) -> None:
        self.diags.append(ParseDiagnostic("error", loc or self.peek().loc, message, self.path))

    def recover_to_top(self) -> None:
        depth = 0
        while not self.at("eof"):
            t = self.peek()
            if depth == 0 and t.kind == "ident" and t.text in TOP_KEYWORDS:
                return
            if t.kind == "{":
                depth += 1
            elif t.kind == "}":
                depth = max(0, depth - 1)
                self.next()
                if depth == 0:
                    return
                continue
            self.next()

    # -- declarations ------------------------------------------------------
    def parse_declarations(self, acc: "_Acc") -> None:
        while not self.at("eof"):
            t = self.peek()
            try:
                if self.at_ident("actor"):
                    self.next()
                    acc.actors.append(self.expect_ident("actor name").text)
                elif self.at_ident("class"):
                    acc.classes.append(self.parse_class())
                elif self.at_ident("assoc"):
                    acc.associations.append(self.parse_assoc())
                elif self.at_ident("usecase"):
                    acc.use_cases.append(self.parse_usecase())
                elif self.at_ident("inv"):
                    acc.invariants.append(self.parse_invariant())
                elif self.at_ident("contract"):
                    acc.contracts.append(self.parse_contract())
                else:
                    raise _ParseError(t.loc, f"expected a declaration, found {t.text or t.kind!r}")
            except _ParseError as err:
                self.diags.append(ParseDiagnostic("error", err.loc, err.message, self.path))
                self.recover_to_top()

    def parse_class(self) -> ConceptualClass:
        start = self.next().loc  # 'class'
        name = self.expect_ident("class name").text
        super_class = None
        if self.at_ident("extends"):
            self.next()
            super_class = self.expect_ident("superclass name").text
        crud = False
        if self.at("["):
            self.next()
            marker = self.expect("ident", "marker").text
            if marker != "crud":
                raise _ParseError(self.peek().loc, f"unknown class marker {marker!r}")
            crud = True
            self.expect("]")
        self.expect("{")
        attrs: list[tuple[str, str]] = []
        while not self.at("}"):
            an = self.expect_ident("attribute name").text
            self.expect(":")
            at = self.parse_prim_type()
            attrs.append((an, at))
            if self.at(";"):
                self.next()
        self.expect("}")
        return ConceptualClass(name, super_class, tuple(attrs), crud, loc=start)

    def parse_prim_type(self) -> str:
        t = self.expect("ident", "type name")
        if t.text not in ("Integer", "Real", "Boolean", "String"):
            raise _ParseError(t.loc, f"expected a primitive type, found {t.text!r}")
        return t.text

    def parse_assoc(self) -> AssociationEnd:
        start = self.next().loc  # 'assoc'
        owner = self.expect_ident("owning class").text
        self.expect(".")
        role = self.expect_ident("role name").text
        self.expect("->")
        target = self.expect_ident("target class").text
        self.expect("[")
        mult = self.expect("ident", "multiplicity").text
        if mult not in ("one", "many"):
            raise _ParseError(self.peek().loc, f"multiplicity must be one or many, found {mult!r}")
        self.expect("]")
        return AssociationEnd(owner, role, target, mult, loc=start)

    def parse_usecase(self) -> UseCase:
        start = self.next().loc  # 'usecase'
        name = self.expect_ident("use case name").text
        if not self.at_ident("actor"):
            raise _ParseError(self.peek().loc, "expected 'actor'")
        self.next()
        actor = self.expect_ident("actor name").text
        self.expect("{")
        ops: list[str] = []
        while not self.at("}"):
            ops.append(self.expect_ident("operation name").text)
            if self.at(";"):
                self.next()
        self.expect("}")
        return UseCase(name, actor, tuple(ops), loc=start)

    def parse_invariant(self) -> Invariant:
        start = self.next().loc  # 'inv'
        name = self.expect_ident("invariant name").text
        ctx = None
        if self.at_ident("on"):
            self.next()
            ctx = self.expect_ident("context class").text
        self.expect(":")
        expr = self.parse_expr()
        return Invariant(name, ctx, expr, loc=start)

    def parse_contract(self) -> Contract:
        start = self.next().loc  # 'contract'
        uc = self.expect_ident("use case name").text
        self.expect("::")
        op = self.expect_ident("operation name").text
        self.expect("(")
        params: list[tuple[str, str]] = []
        while not self.at(")"):
            pn = self.expect_ident("parameter name").text
            self.expect(":")
            pt = self.parse_prim_type()
            params.append((pn, pt))
            if self.at(","):
                self.next()
        self.expect(")")
        ret: Optional[str] = None
        if self.at(":"):
            self.next()
            ret = self.parse_return_type()
        self.expect("{")
        definitions: list[tuple[str, str, OclExpr]] = []
        pre: Optional[OclExpr] = None
        post: Optional[OclExpr] = None
        saw_section = False
        while not self.at("}"):
            if self.at_ident("definition"):
                self.next()
                self.expect(":")
                saw_section = True
                while self.peek().kind == "ident" and self.peek().text not in RESERVED and self.peek(1).kind == ":":
                    dn = self.expect_ident("definition name").text
                    self.expect(":")
                    dt = self.parse_def_type()
                    self.expect("=")
                    de = self.parse_expr()
                    definitions.append((dn, dt, de))
            elif self.at_ident("precondition"):
                self.next()
                self.expect(":")
                saw_section = True
                pre = self.parse_expr()
            elif self.at_ident("postcondition"):
                self.next()
                self.expect(":")
                saw_section = True
                post = self.parse_expr()
            else:
                t = self.peek()
                raise _ParseError(t.loc, f"expected a contract section keyword, found {t.text or t.kind!r}")
        self.expect("}")
        if not saw_section:
            self.error(f"contract {uc}::{op} has no sections", start)
        sig = OperationSignature(op, tuple(params), ret)
        return Contract(uc, sig, tuple(definitions), pre, post, loc=start)

    def parse_return_type(self) -> str:
        t = self.expect("ident", "return type")
        if t.text == "Set":
            self.expect("(")
            inner = self.expect_ident("class name").text
            self.expect(")")
            return f"Set({inner})"
        return t.text

    def parse_def_type(self) -> str:
        return self.parse_return_type()

    # -- expressions ---------------------------------------------------------
    def parse_expr(self) -> OclExpr:
        return self.parse_or()

    def parse_or(self) -> OclExpr:
        left = self.parse_and()
        while self.at_ident("or"):
            loc = self.next().loc
            right = self.parse_and()
            left = Or(left, right, loc=loc)
        return left

    def parse_and(self) -> OclExpr:
        left = self.parse_cmp()
        while self.at_ident("and"):
            loc = self.next().loc
            right = self.parse_cmp()
            left = And(left, right, loc=loc)
        return left

    def parse_cmp(self) -> OclExpr:
        left = self.parse_add()
        t = self.peek()
        if t.kind in ("=", "<>", "<", "<=", ">", ">="):
            self.next()
            right = self.parse_add()
            return Compare(t.kind, left, right, loc=t.loc)
        return left

    def parse_add(self) -> OclExpr:
        left = self.parse_mul()
        while self.peek().kind in ("+", "-"):
            t = self.next()
            right = self.parse_mul()
            left = Arith(t.kind, left, right, loc=t.loc)
        return left

    def parse_mul(self) -> OclExpr:
        left = self.parse_unary()
        while self.peek().kind in ("*", "/"):
            t = self.next()
            right = self.parse_unary()
            left = Arith(t.kind, left, right, loc=t.loc)
        return left

    def parse_unary(self) -> OclExpr:
        if self.at_ident("not"):
            loc = self.next().loc
            return Not(self.parse_unary(), loc=loc)
        if self.at("-"):
            loc = self.next().loc
            t = self.peek()
            if t.kind == "int":
                self.next()
                return IntLit(-int(t.text), loc=loc)
            if t.kind == "real":
                self.next()
                return RealLit(-float(t.text), loc=loc)
            raise _ParseError(loc, "unary minus is only allowed before a numeric literal")
        return self.parse_postfix()

    def parse_postfix(self) -> OclExpr:
        e = self.parse_primary()
        while True:
            if self.at("."):
                self.next()
                name_tok = self.expect("ident", "member name")
                e = self.parse_dot_member(e, name_tok)
            elif self.at("@pre"):
                loc = self.next().loc
                e = AtPre(e, loc=loc)
            elif self.at("->"):
                self.next()
                e = self.parse_arrow_op(e)
            else:
                return e

    def parse_dot_member(self, recv: OclExpr, name_tok: Token) -> OclExpr:
        name = name_tok.text
        loc = name_tok.loc
        if self.at("("):
            self.next()
            if name in ("allInstances", "allInstance"):
                self.expect(")")
                if not isinstance(recv, (VarRef, Nav)):
                    raise _ParseError(loc, "allInstances() applies to a class name")
                if isinstance(recv, Nav):
                    raise _ParseError(loc, "allInstances() applies to a class name")
                return AllInstances(recv.name, loc=loc)
            if name == "oclIsNew":
                self.expect(")")
                return OclIsNew(recv, loc=loc)
            if name == "oclIsUndefined":
                self.expect(")")
                return OclIsUndefined(recv, loc=loc)
            if name == "oclIsTypeOf":
                t = self.expect("ident", "type name")
                self.expect(")")
                return OclIsTypeOf(recv, t.text, loc=loc)
            if name == "size":
                self.expect(")")
                return Size(recv, loc=loc)
            if name == "isEmpty":
                self.expect(")")
                return IsEmpty(recv, loc=loc)
            raise _ParseError(loc, f"unknown operation {name!r}")
        return Nav(recv, name, loc=loc)

    def parse_arrow_op(self, recv: OclExpr) -> OclExpr:
        name_tok = self.expect("ident", "collection operation")
        name = name_tok.text
        loc = name_tok.loc
        self.expect("(")
        if name in ("any", "select", "forAll"):
            var = self.expect_ident("binder variable").text
            btype = None
            if self.at(":"):
                self.next()
                btype = self.expect_ident("binder type").text
            self.expect("|")
            body = self.parse_expr()
            self.expect(")")
            if name == "any":
                return Any_(recv, var, btype, body, loc=loc)
            if name == "select":
                return Select(recv, var, btype, body, loc=loc)
            return ForAll(recv, var, btype, body, loc=loc)
        if name in ("includes", "excludes"):
            arg = self.parse_expr()
            self.expect(")")
            return (Includes if name == "includes" else Excludes)(recv, arg, loc=loc)
        if name == "size":
            self.expect(")")
            return Size(recv, loc=loc)
        if name == "isEmpty":
            self.expect(")")
            return IsEmpty(recv, loc=loc)
        if name == "isUnique":
            var = self.expect_ident("binder variable").text
            if self.at(":"):
                self.next()
                self.expect_ident("binder type")
            self.expect("|")
            body = self.parse_expr()
            self.expect(")")
            if not isinstance(recv, AllInstances):
                raise _ParseError(loc, "isUnique applies to ClassName.allInstances()")
            if not (isinstance(body, Nav) and isinstance(body.obj, VarRef) and body.obj.name == var):
                raise _ParseError(loc, "isUnique body must be <binder>.<attribute>")
            return IsUnique(recv.class_name, var, body.name, loc=loc)
        raise _ParseError(loc, f"unknown collection operation {name!r}")

    def parse_primary(self) -> OclExpr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return IntLit(int(t.text), loc=t.loc)
        if t.kind == "real":
            self.next()
            return RealLit(float(t.text), loc=t.loc)
        if t.kind == "string":
            self.next()
            return StrLit(t.text, loc=t.loc)
        if t.kind == "(":
            self.next()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            if t.text == "true":
                self.next()
                return BoolLit(True, loc=t.loc)
            if t.text == "false":
                self.next()
                return BoolLit(False, loc=t.loc)
            if t.text == "null":
                self.next()
                return NullLit(loc=t.loc)
            if t.text == "self":
                self.next()
                return SelfRef(loc=t.loc)
            if t.text == "result":
                self.next()
                return ResultRef(loc=t.loc)
            if t.text == "let":
                self.next()
                name = self.expect_ident("let variable").text
                self.expect(":")
                cls = self.expect_ident("class name").text
                if not self.at_ident("in"):
                    raise _ParseError(self.peek().loc, "expected 'in'")
                self.next()
                body = self.parse_or()
                return LetIn(name, cls, body, loc=t.loc)
            if t.text in RESERVED:
                raise _ParseError(t.loc, f"unexpected keyword {t.text!r} in expression")
            if self.peek(1).kind == "::":
                self.next()
                self.next()  # '::'
                op = self.expect_ident("service operation").text
                self.expect("(")
                args: list[OclExpr] = []
                while not self.at(")"):
                    args.append(self.parse_expr())
                    if self.at(","):
                        self.next()
                self.expect(")")
                return ExternalCall(t.text, op, tuple(args), loc=t.loc)
            self.next()
            return VarRef(t.text, loc=t.loc)
        raise _ParseError(t.loc, f"expected an expression, found {t.text or t.kind!r}")


@dataclass
class _Acc:
    actors: list[str] = field(default_factory=list)
    classes: list[ConceptualClass] = field(default_factory=list)
    associations: list[AssociationEnd] = field(default_factory=list)
    use_cases: list[UseCase] = field(default_factory=list)
    contracts: list[Contract] = field(default_factory=list)
    invariants: list[Invariant] = field(default_factory=list)


def parse_model(sources: list[SourceFile]) -> ParseResult:
    """Parse one or more .rqm sources into a single RequirementsModel.

    Any error diagnostic prevents model construction; the parser recovers to
    the next top-level declaration so several errors can be reported at once.
    """
    acc = _Acc()
    diags: list[ParseDiagnostic] = []
    for src in sources:
        toks, tok_diags = tokenize(src.content, src.path)
        diags.extend(tok_diags)
        _Parser(toks, src.path, diags).parse_declarations(acc)
    if any(d.severity == "error" for d in diags):
        return ParseResult(None, diags)
    model = RequirementsModel(
        tuple(acc.actors), tuple(acc.classes), tuple(acc.associations),
        tuple(acc.use_cases), tuple(acc.contracts), tuple(acc.invariants),
    )
    return ParseResult(model, diags)


def parse_ocl_expr(text: str) -> OclExpr:
    """Parse a standalone expression; raises OclSyntaxError on bad input."""
    toks, diags = tokenize(text)
    if diags:
        raise OclSyntaxError(diags[0])
    diags2: list[ParseDiagnostic] = []
    p = _Parser(toks, "", diags2)
    try:
        e = p.parse_expr()
    except _ParseError as err:
        raise OclSyntaxError(ParseDiagnostic("error", err.loc, err.message)) from None
    if not p.at("eof"):
        t = p.peek()
        raise OclSyntaxError(ParseDiagnostic("error", t.loc, f"unexpected trailing input {t.text!r}"))
    return e


class OclSyntaxError(Exception):
    def __init__(self, diagnostic: ParseDiagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic
