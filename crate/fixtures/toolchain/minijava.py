#!/usr/bin/env python3
"""Stand-in build tool for the fixture projects.

Understands a small Java subset. `compile` checks the syntax of the main
sources and reports problems in the Maven/javac format; `test` checks all
sources and then interprets JUnit 4 style tests, printing a surefire style
report. Output carries no timings so logs are reproducible.

usage: minijava.py compile
       minijava.py test [-Dtest=Name[,Name...]]
"""

import os
import sys

MAIN_ROOT = os.path.join("src", "main", "java")
TEST_ROOT = os.path.join("src", "test", "java")
STEP_LIMIT = 2_000_000


# --------------------------------------------------------------------- lexer

class Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind, self.text, self.line, self.col = kind, text, line, col

    def __repr__(self):
        return f"{self.kind}:{self.text}@{self.line}:{self.col}"


class CompileError(Exception):
    def __init__(self, line, col, message):
        super().__init__(message)
        self.line, self.col, self.message = line, col, message


OPS3 = (">>>=", "<<=", ">>=", "...", "->")
OPS2 = ("&&", "||", "==", "!=", "<=", ">=", "++", "--", "+=", "-=", "*=", "/=", "%=", "::", "<<")
OPS1 = "{}()[];,.@=<>!~?:+-*/&|^%"


def tokenize(text):
    toks = []
    i, line, col, n = 0, 1, 1, len(text)

    def adv(k):
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c.isspace():
            adv(1)
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                adv(1)
            continue
        if text.startswith("/*", i):
            sl, sc = line, col
            end = text.find("*/", i + 2)
            if end < 0:
                raise CompileError(sl, sc, "unclosed comment")
            adv(end + 2 - i)
            continue
        sl, sc, start = line, col, i
        if c == '"' or c == "'":
            adv(1)
            while True:
                if i >= n or text[i] == "\n":
                    raise CompileError(sl, sc, "unclosed string literal" if c == '"' else "unclosed character literal")
                if text[i] == "\\":
                    adv(2)
                    continue
                if text[i] == c:
                    adv(1)
                    break
                adv(1)
            toks.append(Tok("str" if c == '"' else "char", text[start:i], sl, sc))
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            while i < n and (text[i].isalnum() or text[i] in "._"):
                if text[i] == "." and not (i + 1 < n and text[i + 1].isdigit()):
                    break
                adv(1)
            toks.append(Tok("num", text[start:i], sl, sc))
            continue
        if c.isalpha() or c in "_$":
            while i < n and (text[i].isalnum() or text[i] in "_$"):
                adv(1)
            toks.append(Tok("id", text[start:i], sl, sc))
            continue
        for op in OPS3 + OPS2:
            if text.startswith(op, i) and op not in (">>>=", ">>="):
                adv(len(op))
                toks.append(Tok("op", op, sl, sc))
                break
        else:
            if c in OPS1:
                adv(1)
                toks.append(Tok("op", c, sl, sc))
            else:
                raise CompileError(sl, sc, f"illegal character: '{c}'")
    toks.append(Tok("eof", "", line, col))
    return toks


def check_delimiters(toks):
    pairs = {")": "(", "]": "[", "}": "{"}
    stack = []
    for t in toks:
        if t.kind != "op":
            continue
        if t.text in "([{":
            stack.append(t)
        elif t.text in ")]}":
            if not stack or stack[-1].text != pairs[t.text]:
                raise CompileError(t.line, t.col, "illegal start of type" if t.text == "}" else "illegal start of expression")
            stack.pop()
    if stack:
        last = toks[-1]
        raise CompileError(last.line, last.col, "reached end of file while parsing")


# -------------------------------------------------------------------- parser

MODIFIERS = {"public", "private", "protected", "static", "final", "abstract", "native",
             "synchronized", "transient", "volatile", "strictfp", "default"}
PRIMS = {"int", "long", "short", "byte", "double", "float", "boolean", "char", "void"}
ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%="}
BINARY_PREC = [
    ("||",), ("&&",), ("|",), ("^",), ("&",), ("==", "!="),
    ("<", ">", "<=", ">=", "instanceof"), ("+", "-"), ("*", "/", "%"),
]


class Node:
    def __init__(self, kind, line, **kw):
        self.kind = kind
        self.line = line
        self.__dict__.update(kw)

    def __repr__(self):
        return f"Node({self.kind})"


class TypeDecl:
    def __init__(self, name, kind, line):
        self.name = name
        self.fqn = name
        self.kind = kind
        self.line = line
        self.superclass = None
        self.fields = []  # (name, type, static, init expr)
        self.methods = {}  # name -> [method nodes]
        self.ctors = []
        self.enum_constants = []
        self.inits = []  # (static, block)
        self.nested = []
        self.path = ""


class Parser:
    def __init__(self, toks, path):
        self.toks, self.pos, self.path = toks, 0, path

    # helpers
    @property
    def t(self):
        return self.toks[self.pos]

    def peek(self, k=1):
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text):
        return self.t.kind in ("op", "id") and self.t.text == text

    def next(self):
        t = self.t
        self.pos += 1
        return t

    def accept(self, text):
        if self.at(text):
            return self.next()
        return None

    def expect(self, text):
        if self.at(text):
            return self.next()
        if text in (";", ")", "]", "}") and self.pos > 0:
            prev = self.toks[self.pos - 1]
            raise CompileError(prev.line, prev.col + len(prev.text), f"'{text}' expected")
        raise CompileError(self.t.line, self.t.col, f"'{text}' expected")

    def ident(self):
        if self.t.kind != "id":
            raise CompileError(self.t.line, self.t.col, "<identifier> expected")
        return self.next().text

    def qname(self):
        parts = [self.ident()]
        while self.at(".") and self.peek().kind == "id":
            self.next()
            parts.append(self.ident())
        return ".".join(parts)

    def skip_annotation(self):
        self.expect("@")
        self.qname()
        if self.at("("):
            self.skip_balanced("(", ")")

    def skip_balanced(self, open_, close):
        depth = 0
        while True:
            if self.at(open_):
                depth += 1
            elif self.at(close):
                depth -= 1
                if depth == 0:
                    self.next()
                    return
            elif self.t.kind == "eof":
                raise CompileError(self.t.line, self.t.col, "reached end of file while parsing")
            self.next()

    def modifiers(self):
        mods, annos = set(), set()
        while True:
            if self.at("@") and not (self.peek().text == "interface"):
                self.next()
                name = self.qname()
                annos.add(name.split(".")[-1])
                if self.at("("):
                    self.skip_balanced("(", ")")
            elif self.t.kind == "id" and self.t.text in MODIFIERS:
                mods.add(self.next().text)
            else:
                return mods, annos

    def type_args(self):
        if not self.at("<"):
            return
        depth = 0
        while True:
            if self.at("<"):
                depth += 1
            elif self.at(">"):
                depth -= 1
                if depth == 0:
                    self.next()
                    return
            elif self.t.kind == "eof" or self.at(";") or self.at("{"):
                raise CompileError(self.t.line, self.t.col, "'>' expected")
            self.next()

    def parse_type(self):
        if self.t.kind != "id":
            raise CompileError(self.t.line, self.t.col, "<identifier> expected")
        name = self.qname()
        self.type_args()
        while self.at(".") and self.peek().kind == "id":
            self.next()
            name += "." + self.ident()
            self.type_args()
        dims = 0
        while self.at("[") and self.peek().text == "]":
            self.next()
            self.next()
            dims += 1
        if self.at("..."):
            self.next()
            dims += 1
        return name + "[]" * dims

    # compilation unit
    def unit(self):
        package = ""
        self.modifiers()
        if self.accept("package"):
            package = self.qname()
            self.expect(";")
        while self.at("import"):
            self.next()
            self.accept("static")
            self.qname()
            if self.accept("."):
                self.expect("*")
            self.expect(";")
        types = []
        while self.t.kind != "eof":
            if self.accept(";"):
                continue
            types.extend(self.type_decl(package, None))
        return package, types

    def type_decl(self, package, outer):
        mods, _ = self.modifiers()
        line = self.t.line
        if self.accept("class"):
            kind = "class"
        elif self.accept("interface"):
            kind = "interface"
        elif self.accept("enum"):
            kind = "enum"
        else:
            raise CompileError(self.t.line, self.t.col, "class, interface, enum, or record expected")
        name = self.ident()
        td = TypeDecl(name, kind, line)
        td.path = self.path
        td.fqn = f"{outer.fqn}.{name}" if outer else (f"{package}.{name}" if package else name)
        td.static_nested = "static" in mods or kind != "class"
        self.type_args()
        if self.accept("extends"):
            td.superclass = self.parse_type()
            while self.accept(","):
                self.parse_type()
        if self.accept("implements"):
            self.parse_type()
            while self.accept(","):
                self.parse_type()
        self.class_body(td, package)
        out = [td]
        for n in td.nested:
            out.append(n)
        return out

    def class_body(self, td, package):
        self.expect("{")
        if td.kind == "enum":
            while self.t.kind == "id":
                td.enum_constants.append(self.ident())
                if self.at("("):
                    self.skip_balanced("(", ")")
                if not self.accept(","):
                    break
            if not self.accept(";") and not self.at("}"):
                raise CompileError(self.t.line, self.t.col, "';' expected")
        while not self.accept("}"):
            if self.t.kind == "eof":
                raise CompileError(self.t.line, self.t.col, "reached end of file while parsing")
            self.member(td, package)

    def member(self, td, package):
        if self.accept(";"):
            return
        start = self.pos
        mods, annos = self.modifiers()
        if self.at("{"):
            td.inits.append(("static" in mods, self.block()))
            return
        if self.at("class") or self.at("interface") or self.at("enum"):
            self.pos = start
            for n in self.type_decl(package, td):
                td.nested.append(n)
            return
        line = self.t.line
        if self.at("<"):
            self.type_args()
        # constructor
        if self.t.kind == "id" and self.t.text == td.name and self.peek().text == "(":
            self.next()
            params = self.params()
            self.throws()
            body = self.block()
            td.ctors.append(Node("method", line, name="<init>", params=params, body=body,
                                 static=False, annos=annos, mods=mods))
            return
        ty = self.parse_type()
        name_tok = self.t
        name = self.ident()
        if self.at("("):
            params = self.params()
            while self.at("[") and self.peek().text == "]":
                self.next()
                self.next()
            self.throws()
            if self.accept("default"):
                self.expression()
                self.expect(";")
                body = None
            elif self.at("{"):
                body = self.block()
            else:
                self.expect(";")
                body = None
            m = Node("method", line, name=name, params=params, body=body, ret=ty,
                     static="static" in mods, annos=annos, mods=mods, owner=td.fqn)
            td.methods.setdefault(name, []).append(m)
            return
        # field(s)
        static = "static" in mods or td.kind == "interface"
        while True:
            fty = ty
            while self.at("[") and self.peek().text == "]":
                self.next()
                self.next()
                fty += "[]"
            init = None
            if self.accept("="):
                init = self.array_init() if self.at("{") else self.expression()
            td.fields.append((name, fty, static, init, name_tok.line))
            if not self.accept(","):
                break
            name_tok = self.t
            name = self.ident()
        self.expect(";")

    def throws(self):
        if self.accept("throws"):
            self.qname()
            while self.accept(","):
                self.qname()

    def params(self):
        self.expect("(")
        out = []
        if self.accept(")"):
            return out
        while True:
            self.modifiers()
            ty = self.parse_type()
            name = self.ident()
            while self.at("[") and self.peek().text == "]":
                self.next()
                self.next()
                ty += "[]"
            out.append((name, ty))
            if self.accept(")"):
                return out
            self.expect(",")

    # statements
    def block(self):
        line = self.expect("{").line
        stmts = []
        while not self.accept("}"):
            if self.t.kind == "eof":
                raise CompileError(self.t.line, self.t.col, "reached end of file while parsing")
            stmts.append(self.statement())
        return Node("block", line, stmts=stmts)

    def is_local_decl(self):
        save = self.pos
        try:
            self.modifiers()
            if self.t.kind != "id" or self.t.text in ("return", "new", "this", "super", "throw"):
                return False
            self.parse_type()
            if self.t.kind != "id":
                return False
            self.next()
            return self.t.text in ("=", ";", ",", ":", "[")
        except CompileError:
            return False
        finally:
            self.pos = save

    def local_decl(self, need_semi=True):
        line = self.t.line
        self.modifiers()
        ty = self.parse_type()
        decls = []
        while True:
            name = self.ident()
            vty = ty
            while self.at("[") and self.peek().text == "]":
                self.next()
                self.next()
                vty += "[]"
            init = None
            if self.accept("="):
                init = self.array_init() if self.at("{") else self.expression()
            decls.append((name, vty, init))
            if not self.accept(","):
                break
        if need_semi:
            self.expect(";")
        return Node("local", line, decls=decls)

    def array_init(self):
        line = self.expect("{").line
        items = []
        while not self.accept("}"):
            items.append(self.array_init() if self.at("{") else self.expression())
            if not self.accept(","):
                self.expect("}")
                break
        return Node("arraylit", line, items=items)

    def statement(self):
        t = self.t
        line = t.line
        if self.at("{"):
            return self.block()
        if self.accept(";"):
            return Node("empty", line)
        if t.kind == "id" and self.peek().text == ":" and t.text not in ("default", "case"):
            self.next()
            self.next()
            return self.statement()
        if self.accept("if"):
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            then = self.statement()
            other = self.statement() if self.accept("else") else None
            return Node("if", line, cond=cond, then=then, other=other)
        if self.accept("while"):
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            return Node("while", line, cond=cond, body=self.statement())
        if self.accept("do"):
            body = self.statement()
            self.expect("while")
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            self.expect(";")
            return Node("dowhile", line, cond=cond, body=body)
        if self.accept("for"):
            self.expect("(")
            if self.is_local_decl():
                save = self.pos
                self.modifiers()
                ty = self.parse_type()
                name = self.ident()
                if self.accept(":"):
                    it = self.expression()
                    self.expect(")")
                    return Node("foreach", line, name=name, ty=ty, iter=it, body=self.statement())
                self.pos = save
                init = [self.local_decl(need_semi=False)]
            else:
                init = []
                while not self.at(";"):
                    init.append(Node("expr", line, expr=self.expression()))
                    if not self.accept(","):
                        break
            self.expect(";")
            cond = None if self.at(";") else self.expression()
            self.expect(";")
            update = []
            while not self.at(")"):
                update.append(self.expression())
                if not self.accept(","):
                    break
            self.expect(")")
            return Node("for", line, init=init, cond=cond, update=update, body=self.statement())
        if self.accept("return"):
            value = None if self.at(";") else self.expression()
            self.expect(";")
            return Node("return", line, value=value)
        if self.accept("break"):
            if self.t.kind == "id":
                self.next()
            self.expect(";")
            return Node("break", line)
        if self.accept("continue"):
            if self.t.kind == "id":
                self.next()
            self.expect(";")
            return Node("continue", line)
        if self.accept("throw"):
            value = self.expression()
            self.expect(";")
            return Node("throw", line, value=value)
        if self.accept("try"):
            body = self.block()
            catches = []
            while self.accept("catch"):
                self.expect("(")
                self.modifiers()
                types = [self.parse_type()]
                while self.accept("|"):
                    types.append(self.parse_type())
                name = self.ident()
                self.expect(")")
                catches.append((types, name, self.block()))
            fin = self.block() if self.accept("finally") else None
            if not catches and fin is None:
                raise CompileError(self.t.line, self.t.col, "'catch' or 'finally' expected")
            return Node("try", line, body=body, catches=catches, fin=fin)
        if self.accept("switch"):
            self.expect("(")
            subject = self.expression()
            self.expect(")")
            self.expect("{")
            cases = []  # (labels or None for default, stmts)
            while not self.accept("}"):
                if self.accept("case"):
                    labels = [self.expression()]
                    while self.accept(","):
                        labels.append(self.expression())
                    self.expect(":")
                    cases.append((labels, []))
                elif self.accept("default"):
                    self.expect(":")
                    cases.append((None, []))
                else:
                    if not cases:
                        raise CompileError(self.t.line, self.t.col, "'case', 'default', or '}' expected")
                    cases[-1][1].append(self.statement())
            return Node("switch", line, subject=subject, cases=cases)
        if self.is_local_decl():
            return self.local_decl()
        expr = self.expression()
        self.expect(";")
        return Node("expr", line, expr=expr)

    # expressions
    def expression(self):
        return self.assignment()

    def assignment(self):
        lhs = self.ternary()
        if self.t.kind == "op" and self.t.text in ASSIGN_OPS:
            op = self.next()
            if lhs.kind not in ("name", "field", "index"):
                raise CompileError(op.line, op.col, "unexpected type")
            rhs = self.assignment()
            return Node("assign", op.line, op=op.text, target=lhs, value=rhs)
        return lhs

    def ternary(self):
        cond = self.binary(0)
        if self.at("?"):
            line = self.next().line
            a = self.ternary()
            self.expect(":")
            b = self.ternary()
            return Node("cond", line, cond=cond, a=a, b=b)
        return cond

    def binary(self, level):
        if level == len(BINARY_PREC):
            return self.unary()
        lhs = self.binary(level + 1)
        while self.t.kind in ("op", "id") and self.t.text in BINARY_PREC[level]:
            op = self.next()
            if op.text == "instanceof":
                rhs = Node("typename", op.line, name=self.parse_type())
            else:
                rhs = self.binary(level + 1)
            lhs = Node("bin", op.line, op=op.text, a=lhs, b=rhs)
        return lhs

    def unary(self):
        t = self.t
        if t.kind == "op" and t.text in ("-", "+", "!", "~"):
            self.next()
            return Node("unary", t.line, op=t.text, a=self.unary())
        if t.kind == "op" and t.text in ("++", "--"):
            self.next()
            target = self.unary()
            return Node("incdec", t.line, op=t.text, target=target, prefix=True)
        if self.at("(") and self.is_cast():
            self.next()
            ty = self.parse_type()
            self.expect(")")
            return Node("cast", t.line, ty=ty, a=self.unary())
        return self.postfix(self.primary())

    def is_cast(self):
        nxt = self.peek()
        after = self.peek(2)
        if nxt.kind == "id" and nxt.text in PRIMS and after.text in (")", "["):
            return True
        if nxt.kind == "id" and nxt.text[:1].isupper() and after.text == ")":
            follow = self.peek(3)
            return follow.kind in ("id", "num", "str", "char") or follow.text == "("
        return False

    def args(self):
        self.expect("(")
        out = []
        if self.accept(")"):
            return out
        while True:
            out.append(self.expression())
            if self.accept(")"):
                return out
            self.expect(",")

    def postfix(self, e):
        while True:
            t = self.t
            if self.at("."):
                self.next()
                if self.at("<"):
                    self.type_args()
                name = self.ident()
                if self.at("("):
                    e = Node("call", t.line, target=e, name=name, args=self.args())
                else:
                    e = Node("field", t.line, target=e, name=name)
            elif self.at("["):
                self.next()
                idx = self.expression()
                self.expect("]")
                e = Node("index", t.line, target=e, idx=idx)
            elif t.kind == "op" and t.text in ("++", "--"):
                self.next()
                e = Node("incdec", t.line, op=t.text, target=e, prefix=False)
            else:
                return e

    def primary(self):
        t = self.t
        line = t.line
        if t.kind == "num":
            self.next()
            return Node("lit", line, value=parse_number(t.text))
        if t.kind == "str":
            self.next()
            return Node("lit", line, value=unescape(t.text[1:-1]))
        if t.kind == "char":
            self.next()
            return Node("lit", line, value=unescape(t.text[1:-1]))
        if self.accept("("):
            e = self.expression()
            self.expect(")")
            return e
        if t.kind == "id":
            if t.text in ("true", "false"):
                self.next()
                return Node("lit", line, value=t.text == "true")
            if t.text == "null":
                self.next()
                return Node("lit", line, value=None)
            if t.text == "this":
                self.next()
                if self.at("("):
                    return Node("ctorcall", line, which="this", args=self.args())
                return Node("this", line)
            if t.text == "super":
                self.next()
                if self.at("("):
                    return Node("ctorcall", line, which="super", args=self.args())
                self.expect(".")
                name = self.ident()
                return Node("supercall", line, name=name, args=self.args())
            if t.text == "new":
                self.next()
                ty = self.qname()
                self.type_args()
                if self.at("["):
                    dims = []
                    while self.accept("["):
                        dims.append(None if self.at("]") else self.expression())
                        self.expect("]")
                    init = self.array_init() if self.at("{") else None
                    return Node("newarray", line, ty=ty, dims=dims, init=init)
                args = self.args()
                if self.at("{"):
                    raise CompileError(self.t.line, self.t.col, "anonymous classes are not supported")
                return Node("new", line, ty=ty, args=args)
            if t.text in PRIMS or t.text in MODIFIERS or t.text in ("class", "if", "else", "for", "while", "return"):
                raise CompileError(t.line, t.col, "illegal start of expression")
            self.next()
            if self.at("("):
                return Node("call", line, target=None, name=t.text, args=self.args())
            return Node("name", line, name=t.text)
        raise CompileError(t.line, t.col, "illegal start of expression")


def parse_number(text):
    s = text.replace("_", "").lower()
    if s.startswith("0x"):
        return int(s[2:].rstrip("l"), 16)
    if s.startswith("0b"):
        return int(s[2:].rstrip("l"), 2)
    if any(c in s for c in ".e") or (s.endswith(("f", "d")) and not s.startswith("0x")):
        return float(s.rstrip("fd"))
    return int(s.rstrip("l"))


def unescape(s):
    out, i = [], 0
    table = {"n": "\n", "t": "\t", "r": "\r", "0": "\0", "\\": "\\", "'": "'", '"': '"', "b": "\b", "f": "\f"}
    while i < len(s):
        if s[i] == "\\" and i + 1 < len(s):
            out.append(table.get(s[i + 1], s[i + 1]))
            i += 2
        else:
            out.append(s[i])
            i += 1
    return "".join(out)


# ------------------------------------------------------------------- runtime

class JavaThrow(Exception):
    def __init__(self, exc):
        super().__init__(exc.message)
        self.exc = exc


class JException:
    def __init__(self, cls, message):
        self.cls, self.message = cls, message


class AssertionFailed(Exception):
    pass


class Return(Exception):
    def __init__(self, value):
        self.value = value


class Break(Exception):
    pass


class Continue(Exception):
    pass


class JObject:
    def __init__(self, cls):
        self.cls = cls
        self.fields = {}


class EnumValue:
    def __init__(self, cls, name, ordinal):
        self.cls, self.name, self.ordinal = cls, name, ordinal


class JArray(list):
    pass


BUILTIN_EXC_PARENTS = {
    "Throwable": None, "Exception": "Throwable", "Error": "Throwable", "AssertionError": "Error",
    "RuntimeException": "Exception", "IllegalArgumentException": "RuntimeException",
    "IllegalStateException": "RuntimeException", "ArithmeticException": "RuntimeException",
    "NullPointerException": "RuntimeException", "UnsupportedOperationException": "RuntimeException",
    "IndexOutOfBoundsException": "RuntimeException", "ArrayIndexOutOfBoundsException": "IndexOutOfBoundsException",
    "NumberFormatException": "IllegalArgumentException", "NoSuchMethodError": "Error",
}


def jstr(v):
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, float):
        if v == int(v) and abs(v) < 1e7:
            return f"{v:.1f}"
        return repr(v)
    if isinstance(v, EnumValue):
        return v.name
    if isinstance(v, JException):
        return f"java.lang.{v.cls}: {v.message}" if v.message is not None else f"java.lang.{v.cls}"
    if isinstance(v, JObject):
        return f"{v.cls.fqn}@{id(v) % 0xffff:x}"
    if isinstance(v, list):
        return "[" + ", ".join(jstr(x) for x in v) + "]"
    return str(v)


def coerce(ty, v):
    base = ty.split("<")[0]
    if base in ("int", "long", "short", "byte") and isinstance(v, float):
        return int(v)
    if base in ("double", "float", "Double", "Float") and isinstance(v, int) and not isinstance(v, bool):
        return float(v)
    if base in ("int", "long") and isinstance(v, str) and len(v) == 1:
        return ord(v)
    if base == "char" and isinstance(v, int) and not isinstance(v, bool):
        return chr(v)
    return v


def default_value(ty):
    if ty in ("int", "long", "short", "byte"):
        return 0
    if ty in ("double", "float"):
        return 0.0
    if ty == "boolean":
        return False
    if ty == "char":
        return "\0"
    return None


class Frame:
    def __init__(self, this, cls):
        self.this = this
        self.cls = cls
        self.scopes = [{}]

    def lookup(self, name):
        for s in reversed(self.scopes):
            if name in s:
                return s
        return None


class Interp:
    def __init__(self, types):
        self.types = {t.fqn: t for t in types}
        self.by_simple = {}
        for t in types:
            self.by_simple.setdefault(t.name, t)
        self.statics = {}
        self.steps = 0
        self.line = 0
        for t in types:
            self.statics[t.fqn] = {}
        for t in types:
            for i, c in enumerate(t.enum_constants):
                self.statics[t.fqn][c] = EnumValue(t, c, i)
        for t in types:
            for (name, ty, static, init, _line) in t.fields:
                if static:
                    self.statics[t.fqn][name] = coerce(ty, self.eval(init, Frame(None, t))) if init else default_value(ty)
            for static, block in t.inits:
                if static:
                    self.exec_block(block, Frame(None, t))

    def find_type(self, name, ctx=None):
        if name in self.types:
            return self.types[name]
        if ctx is not None:
            nested = f"{ctx.fqn}.{name}"
            if nested in self.types:
                return self.types[nested]
        return self.by_simple.get(name.split(".")[-1])

    def superclass(self, cls):
        return self.find_type(cls.superclass, cls) if cls.superclass else None

    def is_subclass(self, cls, name):
        while cls is not None:
            if cls.name == name or cls.fqn == name:
                return True
            cls = self.superclass(cls)
        return False

    def tick(self, line):
        self.steps += 1
        self.line = line
        if self.steps > STEP_LIMIT:
            raise JavaThrow(JException("Error", "execution step limit exceeded"))

    def throw(self, cls, message):
        raise JavaThrow(JException(cls, message))

    # objects
    def instantiate(self, cls, args):
        if cls.kind != "class":
            self.throw("InstantiationError", cls.fqn)
        obj = JObject(cls)
        self.construct(obj, cls, args)
        return obj

    def init_fields(self, obj, cls):
        for (name, ty, static, init, _line) in cls.fields:
            if not static:
                obj.fields[name] = default_value(ty)
        for (name, ty, static, init, _line) in cls.fields:
            if not static and init is not None:
                obj.fields[name] = coerce(ty, self.eval(init, Frame(obj, cls)))
        for static, block in cls.inits:
            if not static:
                self.exec_block(block, Frame(obj, cls))

    def construct(self, obj, cls, args):
        ctor = self.pick(cls.ctors, args)
        if ctor is None and (cls.ctors or args):
            self.throw("NoSuchMethodError", f"{cls.fqn}.<init> with {len(args)} arguments")
        body = ctor.body.stmts if ctor else []
        explicit = body[0] if body and body[0].kind == "expr" and body[0].expr.kind == "ctorcall" else None
        frame = Frame(obj, cls)
        if ctor:
            for (pname, pty), a in zip(ctor.params, args):
                frame.scopes[0][pname] = coerce(pty, a)
        if explicit is not None and explicit.expr.which == "this":
            self.construct(obj, cls, [self.eval(a, frame) for a in explicit.expr.args])
            rest = body[1:]
        else:
            sup = self.superclass(cls)
            if sup is not None:
                sargs = [self.eval(a, frame) for a in explicit.expr.args] if explicit is not None else []
                self.construct(obj, sup, sargs)
            self.init_fields(obj, cls)
            rest = body[1:] if explicit is not None else body
        try:
            for s in rest:
                self.exec(s, frame)
        except Return:
            pass

    def pick(self, candidates, args):
        same = [m for m in candidates if len(m.params) == len(args)]
        if len(same) <= 1:
            return same[0] if same else None
        for m in same:
            if all(self.arg_fits(pty, a) for (_, pty), a in zip(m.params, args)):
                return m
        return same[0]

    @staticmethod
    def arg_fits(ty, v):
        if ty in ("int", "long", "short", "byte", "Integer", "Long"):
            return isinstance(v, int) and not isinstance(v, bool)
        if ty in ("double", "float", "Double", "Float"):
            return isinstance(v, (int, float)) and not isinstance(v, bool)
        if ty in ("boolean", "Boolean"):
            return isinstance(v, bool)
        if ty == "String":
            return isinstance(v, str) or v is None
        return True

    def find_method(self, cls, name, args):
        c = cls
        while c is not None:
            m = self.pick(c.methods.get(name, []), args)
            if m is not None and m.body is not None:
                return c, m
            c = self.superclass(c)
        return None, None

    def invoke(self, cls, method, this, args):
        frame = Frame(this, cls)
        for (pname, pty), a in zip(method.params, args):
            frame.scopes[0][pname] = coerce(pty, a)
        try:
            self.exec_block(method.body, frame)
        except Return as r:
            return coerce(method.ret, r.value)
        return None

    # statements
    def exec_block(self, block, frame):
        frame.scopes.append({})
        try:
            for s in block.stmts:
                self.exec(s, frame)
        finally:
            frame.scopes.pop()

    def exec(self, s, frame):
        self.tick(s.line)
        k = s.kind
        if k == "block":
            self.exec_block(s, frame)
        elif k == "expr":
            self.eval(s.expr, frame)
        elif k == "local":
            for name, ty, init in s.decls:
                frame.scopes[-1][name] = coerce(ty, self.eval(init, frame)) if init is not None else default_value(ty)
        elif k == "if":
            if self.truth(self.eval(s.cond, frame)):
                self.exec(s.then, frame)
            elif s.other is not None:
                self.exec(s.other, frame)
        elif k == "while":
            while self.truth(self.eval(s.cond, frame)):
                try:
                    self.exec(s.body, frame)
                except Break:
                    break
                except Continue:
                    continue
        elif k == "dowhile":
            while True:
                try:
                    self.exec(s.body, frame)
                except Break:
                    break
                except Continue:
                    pass
                if not self.truth(self.eval(s.cond, frame)):
                    break
        elif k == "for":
            frame.scopes.append({})
            try:
                for i in s.init:
                    self.exec(i, frame)
                while s.cond is None or self.truth(self.eval(s.cond, frame)):
                    try:
                        self.exec(s.body, frame)
                    except Break:
                        break
                    except Continue:
                        pass
                    for u in s.update:
                        self.eval(u, frame)
            finally:
                frame.scopes.pop()
        elif k == "foreach":
            items = self.eval(s.iter, frame)
            if items is None:
                self.throw("NullPointerException", None)
            for item in list(items):
                frame.scopes.append({s.name: item})
                try:
                    self.exec(s.body, frame)
                except Break:
                    frame.scopes.pop()
                    break
                except Continue:
                    pass
                frame.scopes.pop()
        elif k == "return":
            raise Return(None if s.value is None else self.eval(s.value, frame))
        elif k == "break":
            raise Break()
        elif k == "continue":
            raise Continue()
        elif k == "throw":
            v = self.eval(s.value, frame)
            if not isinstance(v, JException):
                self.throw("NullPointerException", None)
            raise JavaThrow(v)
        elif k == "try":
            try:
                try:
                    self.exec_block(s.body, frame)
                except JavaThrow as jt:
                    for types, name, block in s.catches:
                        if any(self.exc_matches(jt.exc, t) for t in types):
                            frame.scopes.append({name: jt.exc})
                            try:
                                self.exec_block(block, frame)
                            finally:
                                frame.scopes.pop()
                            break
                    else:
                        raise
            finally:
                if s.fin is not None:
                    self.exec_block(s.fin, frame)
        elif k == "switch":
            v = self.eval(s.subject, frame)
            start = None
            for i, (labels, _) in enumerate(s.cases):
                if labels is not None and any(self.case_value(l, frame, v) == v for l in labels):
                    start = i
                    break
            if start is None:
                start = next((i for i, (labels, _) in enumerate(s.cases) if labels is None), None)
            if start is not None:
                try:
                    for _, stmts in s.cases[start:]:
                        for st in stmts:
                            self.exec(st, frame)
                except Break:
                    pass
        elif k == "empty":
            pass
        else:
            raise RuntimeError(f"unsupported statement {k}")

    def case_value(self, label, frame, subject):
        if isinstance(subject, EnumValue) and label.kind == "name":
            return self.statics[subject.cls.fqn].get(label.name)
        return self.eval(label, frame)

    def exc_matches(self, exc, tyname):
        name = tyname.split(".")[-1]
        if name in ("Throwable",) or (name == "Exception" and exc.cls not in ("Error", "AssertionError")):
            return True
        c = exc.cls
        while c is not None:
            if c == name:
                return True
            if c in BUILTIN_EXC_PARENTS:
                c = BUILTIN_EXC_PARENTS[c]
            else:
                t = self.find_type(c)
                c = t.superclass.split(".")[-1] if t and t.superclass else None
        return False

    @staticmethod
    def truth(v):
        if not isinstance(v, bool):
            raise JavaThrow(JException("ClassCastException", "condition is not boolean"))
        return v

    # expressions
    def eval(self, e, frame):
        k = e.kind
        if k == "lit":
            return e.value
        if k == "name":
            return self.load_name(e.name, frame, e)
        if k == "this":
            return frame.this
        if k == "field":
            return self.load_field(e, frame)
        if k == "index":
            arr = self.eval(e.target, frame)
            i = self.eval(e.idx, frame)
            if arr is None:
                self.throw("NullPointerException", None)
            if not 0 <= i < len(arr):
                self.throw("ArrayIndexOutOfBoundsException", f"Index {i} out of bounds for length {len(arr)}")
            return arr[i]
        if k == "assign":
            return self.assign(e, frame)
        if k == "incdec":
            old = self.eval(e.target, frame)
            new = old + 1 if e.op == "++" else old - 1
            self.store(e.target, new, frame)
            return new if e.prefix else old
        if k == "cond":
            return self.eval(e.a if self.truth(self.eval(e.cond, frame)) else e.b, frame)
        if k == "unary":
            v = self.eval(e.a, frame)
            if e.op == "-":
                return -v
            if e.op == "+":
                return v
            if e.op == "!":
                return not self.truth(v)
            return ~v
        if k == "bin":
            return self.binop(e, frame)
        if k == "cast":
            v = self.eval(e.a, frame)
            if e.ty in ("int", "long", "short", "byte"):
                return ord(v) if isinstance(v, str) else int(v)
            if e.ty in ("double", "float"):
                return float(v)
            if e.ty == "char":
                return chr(v) if isinstance(v, int) else v
            return v
        if k == "new":
            return self.new_object(e, frame)
        if k == "newarray":
            if e.init is not None:
                return self.eval(e.init, frame)
            size = self.eval(e.dims[0], frame)
            return JArray([default_value(e.ty)] * size)
        if k == "arraylit":
            return JArray([self.eval(x, frame) for x in e.items])
        if k == "call":
            return self.call(e, frame)
        if k == "supercall":
            sup = self.superclass(frame.cls)
            args = [self.eval(a, frame) for a in e.args]
            owner, m = self.find_method(sup, e.name, args) if sup else (None, None)
            if m is None:
                self.throw("NoSuchMethodError", f"super.{e.name}")
            return self.invoke(owner, m, frame.this, args)
        if k == "ctorcall":
            return None
        raise RuntimeError(f"unsupported expression {k}")

    def load_name(self, name, frame, e):
        scope = frame.lookup(name)
        if scope is not None:
            return scope[name]
        if frame.this is not None and name in frame.this.fields:
            return frame.this.fields[name]
        c = frame.cls
        while c is not None:
            if name in self.statics.get(c.fqn, {}):
                return self.statics[c.fqn][name]
            c = self.superclass(c)
        t = self.find_type(name, frame.cls)
        if t is not None:
            return ("type", t)
        if name in ("Math", "String", "Integer", "Double", "Long", "Boolean", "System", "Objects", "Character", "Arrays"):
            return ("builtin", name)
        self.throw("NoSuchFieldError", name)

    def load_field(self, e, frame):
        if e.target.kind == "name" and frame.lookup(e.target.name) is None and \
                not (frame.this is not None and e.target.name in frame.this.fields):
            qualified = self.qualified_type(e)
            if qualified is not None:
                return ("type", qualified)
        target = self.eval(e.target, frame)
        if isinstance(target, tuple) and target[0] == "type":
            t = target[1]
            c = t
            while c is not None:
                if e.name in self.statics.get(c.fqn, {}):
                    return self.statics[c.fqn][e.name]
                c = self.superclass(c)
            nested = self.find_type(f"{t.fqn}.{e.name}")
            if nested is not None:
                return ("type", nested)
            self.throw("NoSuchFieldError", f"{t.fqn}.{e.name}")
        if isinstance(target, tuple) and target[0] == "builtin":
            consts = {("Integer", "MAX_VALUE"): 2**31 - 1, ("Integer", "MIN_VALUE"): -2**31,
                      ("Long", "MAX_VALUE"): 2**63 - 1, ("Math", "PI"): 3.141592653589793,
                      ("System", "out"): ("builtin", "System.out"), ("System", "err"): ("builtin", "System.out")}
            if (target[1], e.name) in consts:
                return consts[(target[1], e.name)]
            self.throw("NoSuchFieldError", f"{target[1]}.{e.name}")
        if isinstance(target, list) and e.name == "length":
            return len(target)
        if isinstance(target, JObject):
            if e.name in target.fields:
                return target.fields[e.name]
            self.throw("NoSuchFieldError", e.name)
        if target is None:
            self.throw("NullPointerException", f"reading field {e.name}")
        self.throw("NoSuchFieldError", e.name)

    def qualified_type(self, e):
        parts = []
        n = e
        while n.kind == "field":
            parts.append(n.name)
            n = n.target
        if n.kind != "name":
            return None
        parts.append(n.name)
        name = ".".join(reversed(parts))
        return self.types.get(name)

    def store(self, target, value, frame):
        if target.kind == "name":
            scope = frame.lookup(target.name)
            if scope is not None:
                scope[target.name] = value
                return
            if frame.this is not None and target.name in frame.this.fields:
                frame.this.fields[target.name] = value
                return
            c = frame.cls
            while c is not None:
                if target.name in self.statics.get(c.fqn, {}):
                    self.statics[c.fqn][target.name] = value
                    return
                c = self.superclass(c)
            self.throw("NoSuchFieldError", target.name)
        elif target.kind == "field":
            obj = self.eval(target.target, frame)
            if isinstance(obj, JObject):
                obj.fields[target.name] = value
            elif isinstance(obj, tuple) and obj[0] == "type":
                self.statics[obj[1].fqn][target.name] = value
            else:
                self.throw("NullPointerException", f"writing field {target.name}")
        elif target.kind == "index":
            arr = self.eval(target.target, frame)
            i = self.eval(target.idx, frame)
            if not 0 <= i < len(arr):
                self.throw("ArrayIndexOutOfBoundsException", f"Index {i} out of bounds for length {len(arr)}")
            arr[i] = value

    def field_type(self, target, frame):
        if target.kind == "name" and frame.lookup(target.name) is None:
            c = frame.cls
            while c is not None:
                for (name, ty, *_rest) in c.fields:
                    if name == target.name:
                        return ty
                c = self.superclass(c)
        return ""

    def assign(self, e, frame):
        v = self.eval(e.value, frame)
        if e.op != "=":
            old = self.eval(e.target, frame)
            v = self.arith(e.op[0], old, v, e)
        ty = self.field_type(e.target, frame)
        if ty:
            v = coerce(ty, v)
        self.store(e.target, v, frame)
        return v

    def binop(self, e, frame):
        op = e.op
        if op == "&&":
            return self.truth(self.eval(e.a, frame)) and self.truth(self.eval(e.b, frame))
        if op == "||":
            return self.truth(self.eval(e.a, frame)) or self.truth(self.eval(e.b, frame))
        a = self.eval(e.a, frame)
        if op == "instanceof":
            name = e.b.name
            if isinstance(a, JObject):
                return self.is_subclass(a.cls, name)
            if isinstance(a, JException):
                return self.exc_matches(a, name)
            return isinstance(a, str) and name == "String"
        b = self.eval(e.b, frame)
        if op == "==":
            if isinstance(a, (JObject, EnumValue)) or isinstance(b, (JObject, EnumValue)):
                return a is b
            return a == b
        if op == "!=":
            if isinstance(a, (JObject, EnumValue)) or isinstance(b, (JObject, EnumValue)):
                return a is not b
            return a != b
        if op in ("<", ">", "<=", ">="):
            a, b = num(a), num(b)
            return {"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b}[op]
        return self.arith(op, a, b, e)

    def arith(self, op, a, b, e):
        if op == "+" and (isinstance(a, str) and not is_char(a) or isinstance(b, str) and not is_char(b)):
            return jstr(a) + jstr(b)
        if op == "&":
            return a & b
        if op == "|":
            return a | b
        if op == "^":
            return a ^ b
        a, b = num(a), num(b)
        if a is None or b is None:
            self.throw("NullPointerException", None)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        both_int = isinstance(a, int) and isinstance(b, int)
        if op == "/":
            if both_int:
                if b == 0:
                    self.throw("ArithmeticException", "/ by zero")
                q = abs(a) // abs(b)
                return q if (a >= 0) == (b >= 0) else -q
            if b == 0:
                return float("inf") if a > 0 else float("-inf") if a < 0 else float("nan")
            return a / b
        if op == "%":
            if both_int:
                if b == 0:
                    self.throw("ArithmeticException", "/ by zero")
                r = abs(a) % abs(b)
                return r if a >= 0 else -r
            return float(__import__("math").fmod(a, b))
        raise RuntimeError(f"operator {op}")

    def new_object(self, e, frame):
        args = [self.eval(a, frame) for a in e.args]
        name = e.ty.split(".")[-1]
        t = self.find_type(e.ty, frame.cls)
        if t is not None:
            return self.instantiate(t, args)
        if name in ("ArrayList", "LinkedList"):
            return list(args[0]) if args and isinstance(args[0], list) else []
        if name in ("HashMap", "TreeMap", "LinkedHashMap"):
            return {}
        if name == "StringBuilder":
            return JBuilder(args[0] if args else "")
        if name in BUILTIN_EXC_PARENTS or name.endswith("Exception") or name.endswith("Error"):
            return JException(name, args[0] if args else None)
        self.throw("NoClassDefFoundError", e.ty)

    def call(self, e, frame):
        args = [self.eval(a, frame) for a in e.args]
        if e.target is None:
            if e.name in ASSERTS:
                return ASSERTS[e.name](*args)
            c = frame.cls
            while c is not None:
                owner, m = self.find_method(c, e.name, args)
                if m is not None:
                    if m.static:
                        return self.invoke(owner, m, None, args)
                    this = frame.this
                    if this is not None:
                        owner, m = self.find_method(this.cls, e.name, args)
                    return self.invoke(owner, m, this, args)
                outer = c.fqn.rsplit(".", 1)[0]
                c = self.types.get(outer) if outer != c.fqn else None
            self.throw("NoSuchMethodError", f"{frame.cls.fqn}.{e.name}")
        if e.target.kind == "name" and frame.lookup(e.target.name) is None and \
                not (frame.this is not None and e.target.name in frame.this.fields):
            t = self.find_type(e.target.name, frame.cls)
            if t is not None:
                return self.call_static(t, e.name, args)
        target = self.eval(e.target, frame)
        if isinstance(target, tuple):
            if target[0] == "type":
                return self.call_static(target[1], e.name, args)
            return builtin_static(self, target[1], e.name, args)
        if target is None:
            self.throw("NullPointerException", f"invoking {e.name}")
        if isinstance(target, JObject):
            owner, m = self.find_method(target.cls, e.name, args)
            if m is None:
                if e.name == "equals" and len(args) == 1:
                    return target is args[0]
                if e.name == "toString" and not args:
                    return jstr(target)
                if e.name == "hashCode" and not args:
                    return id(target) % (2**31)
                self.throw("NoSuchMethodError", f"{target.cls.fqn}.{e.name}")
            return self.invoke(owner, m, target, args)
        return builtin_method(self, target, e.name, args)

    def call_static(self, t, name, args):
        owner, m = self.find_method(t, name, args)
        if m is None:
            if t.kind == "enum" and name == "values":
                return JArray(self.statics[t.fqn][c] for c in t.enum_constants)
            self.throw("NoSuchMethodError", f"{t.fqn}.{name}")
        return self.invoke(owner, m, None, args)


def is_char(v):
    return False


def num(v):
    if isinstance(v, str) and len(v) == 1:
        return ord(v)
    return v


class JBuilder:
    def __init__(self, s):
        self.s = s


def builtin_static(interp, cls, name, args):
    import math
    table = {
        ("Math", "max"): lambda a, b: max(a, b),
        ("Math", "min"): lambda a, b: min(a, b),
        ("Math", "abs"): abs,
        ("Math", "sqrt"): math.sqrt,
        ("Math", "pow"): lambda a, b: float(a) ** float(b),
        ("Math", "round"): lambda a: int(math.floor(a + 0.5)),
        ("Math", "floor"): lambda a: float(math.floor(a)),
        ("Math", "ceil"): lambda a: float(math.ceil(a)),
        ("String", "valueOf"): jstr,
        ("String", "format"): lambda f, *a: java_format(f, a),
        ("Integer", "parseInt"): lambda s: parse_int(interp, s),
        ("Integer", "valueOf"): lambda s: parse_int(interp, s) if isinstance(s, str) else s,
        ("Integer", "compare"): lambda a, b: (a > b) - (a < b),
        ("Double", "parseDouble"): float,
        ("Double", "compare"): lambda a, b: (a > b) - (a < b),
        ("Objects", "equals"): lambda a, b: a == b,
        ("Objects", "requireNonNull"): lambda a, *m: a if a is not None else interp.throw("NullPointerException", m[0] if m else None),
        ("Character", "isDigit"): lambda c: c.isdigit(),
        ("Character", "isLetter"): lambda c: c.isalpha(),
        ("System.out", "println"): lambda *a: None,
        ("System.out", "print"): lambda *a: None,
        ("Arrays", "asList"): lambda *a: list(a),
    }
    fn = table.get((cls, name))
    if fn is None:
        interp.throw("NoSuchMethodError", f"{cls}.{name}")
    return fn(*args)


def parse_int(interp, s):
    try:
        return int(s)
    except (TypeError, ValueError):
        interp.throw("NumberFormatException", f'For input string: "{s}"')


def java_format(fmt, args):
    out = fmt.replace("%n", "\n")
    for a in args:
        for spec in ("%d", "%s", "%.2f", "%f"):
            if spec in out:
                rendered = (f"{a:.2f}" if spec == "%.2f" else f"{a:f}" if spec == "%f" else jstr(a))
                out = out.replace(spec, rendered, 1)
                break
    return out


def builtin_method(interp, target, name, args):
    if isinstance(target, str):
        table = {
            "length": lambda: len(target),
            "charAt": lambda i: target[i],
            "equals": lambda o: target == o,
            "isEmpty": lambda: len(target) == 0,
            "substring": lambda a, b=None: target[a:b] if b is not None else target[a:],
            "toUpperCase": target.upper,
            "toLowerCase": target.lower,
            "trim": target.strip,
            "contains": lambda s: s in target,
            "startsWith": lambda s: target.startswith(s),
            "endsWith": lambda s: target.endswith(s),
            "indexOf": lambda s: target.find(s),
            "equalsIgnoreCase": lambda o: o is not None and target.lower() == o.lower(),
            "hashCode": lambda: sum(ord(c) * 31 ** i for i, c in enumerate(reversed(target))) % (2**31),
            "toString": lambda: target,
            "compareTo": lambda o: (target > o) - (target < o),
        }
    elif isinstance(target, JBuilder):
        def append(x):
            target.s += jstr(x)
            return target
        table = {"append": append, "toString": lambda: target.s, "length": lambda: len(target.s)}
    elif isinstance(target, list):
        def remove(i):
            if isinstance(i, int) and not isinstance(i, bool):
                return target.pop(i)
            if i in target:
                target.remove(i)
                return True
            return False

        def get(i):
            if not 0 <= i < len(target):
                interp.throw("IndexOutOfBoundsException", f"Index {i} out of bounds for length {len(target)}")
            return target[i]
        table = {
            "add": lambda *a: target.insert(a[0], a[1]) if len(a) == 2 else (target.append(a[0]) or True),
            "get": get,
            "size": lambda: len(target),
            "isEmpty": lambda: not target,
            "contains": lambda x: x in target,
            "remove": remove,
            "clear": target.clear,
            "set": lambda i, v: target.__setitem__(i, v),
            "indexOf": lambda x: target.index(x) if x in target else -1,
            "addAll": lambda xs: target.extend(xs) or True,
        }
    elif isinstance(target, dict):
        table = {
            "put": lambda k, v: target.__setitem__(k, v),
            "get": lambda k: target.get(k),
            "getOrDefault": lambda k, d: target.get(k, d),
            "containsKey": lambda k: k in target,
            "size": lambda: len(target),
            "isEmpty": lambda: not target,
            "keySet": lambda: list(target.keys()),
            "values": lambda: list(target.values()),
            "remove": lambda k: target.pop(k, None),
        }
    elif isinstance(target, EnumValue):
        table = {"name": lambda: target.name, "ordinal": lambda: target.ordinal,
                 "equals": lambda o: target is o, "toString": lambda: target.name}
    elif isinstance(target, JException):
        table = {"getMessage": lambda: target.message}
    elif isinstance(target, (int, float)):
        table = {"equals": lambda o: target == o, "intValue": lambda: int(target),
                 "doubleValue": lambda: float(target), "toString": lambda: jstr(target)}
    else:
        table = {}
    fn = table.get(name)
    if fn is None:
        interp.throw("NoSuchMethodError", f"{type(target).__name__}.{name}")
    return fn(*args)


def _fail(msg=None):
    raise AssertionFailed(msg)


def _assert_equals(*args):
    if len(args) == 3 and isinstance(args[0], str) and not all(isinstance(a, (int, float)) for a in args):
        msg, expected, actual = args
        delta = None
    elif len(args) == 3:
        expected, actual, delta = args
        msg = None
    elif len(args) == 4:
        msg, expected, actual, delta = args
    else:
        expected, actual = args
        msg, delta = None, None
    if delta is not None:
        ok = abs(expected - actual) <= delta
    elif isinstance(expected, JObject) or isinstance(actual, JObject):
        ok = expected is actual
    else:
        ok = expected == actual and type(expected) is type(actual) or \
            (isinstance(expected, (int, float)) and isinstance(actual, (int, float))
             and not isinstance(expected, bool) and not isinstance(actual, bool) and expected == actual)
    if not ok:
        prefix = f"{msg} " if msg else ""
        raise AssertionFailed(f"{prefix}expected:<{jstr(expected)}> but was:<{jstr(actual)}>")


def _assert_bool(want):
    def check(*args):
        msg, cond = (args[0], args[1]) if len(args) == 2 else (None, args[0])
        if cond is not want:
            raise AssertionFailed(msg)
    return check


def _assert_null(want_null):
    def check(*args):
        msg, v = (args[0], args[1]) if len(args) == 2 else (None, args[0])
        if (v is None) != want_null:
            raise AssertionFailed(msg or (f"expected null, but was:<{jstr(v)}>" if want_null else None))
    return check


ASSERTS = {
    "assertEquals": _assert_equals,
    "assertTrue": _assert_bool(True),
    "assertFalse": _assert_bool(False),
    "assertNull": _assert_null(True),
    "assertNotNull": _assert_null(False),
    "fail": _fail,
}


# ---------------------------------------------------------------------- driver

def java_files(root):
    out = []
    for base, dirs, files in os.walk(root):
        dirs.sort()
        for f in sorted(files):
            if f.endswith(".java"):
                out.append(os.path.join(base, f))
    return out


def parse_files(paths):
    types, errors = [], []
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            text = fh.read()
        try:
            toks = tokenize(text)
            check_delimiters(toks)
            _, decls = Parser(toks, p).unit()
            types.extend(decls)
        except CompileError as e:
            errors.append((os.path.abspath(p), e))
    return types, errors


def print_compile_failure(errors, goal):
    print("[INFO] -------------------------------------------------------------")
    print("[ERROR] COMPILATION ERROR : ")
    print("[INFO] -------------------------------------------------------------")
    for path, e in errors:
        print(f"[ERROR] {path}:[{e.line},{e.col}] {e.message}")
    print(f"[INFO] {len(errors)} error{'s' if len(errors) != 1 else ''}")
    print("[INFO] -------------------------------------------------------------")
    print("[INFO] BUILD FAILURE")
    print(f"[ERROR] Failed to execute goal org.apache.maven.plugins:maven-compiler-plugin:3.11.0:{goal} "
          f"(default-{goal}) on project fixture: Compilation failure")
    for path, e in errors:
        print(f"[ERROR] {path}:[{e.line},{e.col}] {e.message}")


def cmd_compile():
    files = java_files(MAIN_ROOT)
    _, errors = parse_files(files)
    if errors:
        print_compile_failure(errors, "compile")
        return 1
    print(f"[INFO] Compiling {len(files)} source files to target/classes")
    print("[INFO] BUILD SUCCESS")
    return 0


def test_selected(fqn, filters):
    if not filters:
        return True
    simple = fqn.split(".")[-1]
    return any(f in (fqn, simple) for f in filters)


def cmd_test(filters):
    main_types, main_errors = parse_files(java_files(MAIN_ROOT))
    if main_errors:
        print_compile_failure(main_errors, "compile")
        return 1
    test_types, test_errors = parse_files(java_files(TEST_ROOT))
    if test_errors:
        print_compile_failure(test_errors, "testCompile")
        return 1
    interp = Interp(main_types + test_types)
    print("[INFO] -------------------------------------------------------")
    print("[INFO]  T E S T S")
    print("[INFO] -------------------------------------------------------")
    totals = [0, 0, 0, 0]
    failures = []
    test_classes = [t for t in test_types if any("Test" in m.annos for ms in t.methods.values() for m in ms)]
    for cls in sorted(test_classes, key=lambda t: t.fqn):
        if not test_selected(cls.fqn, filters):
            continue
        print(f"[INFO] Running {cls.fqn}")
        run = fail = err = skip = 0
        lines = []
        methods = sorted((m for ms in cls.methods.values() for m in ms if "Test" in m.annos), key=lambda m: m.line)
        befores = [m for ms in cls.methods.values() for m in ms if "Before" in m.annos or "BeforeEach" in m.annos]
        for m in methods:
            run += 1
            if "Ignore" in m.annos or "Disabled" in m.annos:
                skip += 1
                continue
            interp.steps = 0
            try:
                obj = interp.instantiate(cls, [])
                for b in befores:
                    interp.invoke(cls, b, obj, [])
                interp.invoke(cls, m, obj, [])
            except AssertionFailed as a:
                fail += 1
                msg = a.args[0] if a.args and a.args[0] is not None else None
                lines.append((m.name, "FAILURE", "java.lang.AssertionError" + (f": {msg}" if msg else ""), interp.line))
                failures.append(("Failures", cls, m.name, msg or "", interp.line))
            except JavaThrow as jt:
                err += 1
                lines.append((m.name, "ERROR", jstr(jt.exc), interp.line))
                failures.append(("Errors", cls, m.name, jstr(jt.exc), interp.line))
            except RecursionError:
                err += 1
                lines.append((m.name, "ERROR", "java.lang.StackOverflowError", interp.line))
                failures.append(("Errors", cls, m.name, "java.lang.StackOverflowError", interp.line))
        summary = f"Tests run: {run}, Failures: {fail}, Errors: {err}, Skipped: {skip}"
        if fail or err:
            print(f"[ERROR] {summary} <<< FAILURE! - in {cls.fqn}")
        else:
            print(f"[INFO] {summary}")
        simple_file = os.path.basename(cls.path)
        for name, kind, message, line in lines:
            print(f"[ERROR] {name}({cls.fqn})  <<< {kind}!")
            print(message)
            print(f"\tat {cls.fqn}.{name}({simple_file}:{line})")
        for i, v in enumerate((run, fail, err, skip)):
            totals[i] += v
    print("[INFO] ")
    print("[INFO] Results:")
    print("[INFO] ")
    for section in ("Failures", "Errors"):
        rows = [f for f in failures if f[0] == section]
        if rows:
            print(f"[ERROR] {section}: ")
            for _, cls, name, msg, line in rows:
                print(f"[ERROR]   {cls.name}.{name}:{line} {msg}".rstrip())
    summary = f"Tests run: {totals[0]}, Failures: {totals[1]}, Errors: {totals[2]}, Skipped: {totals[3]}"
    bad = totals[1] or totals[2]
    print(f"[{'ERROR' if bad else 'INFO'}] {summary}")
    print("[INFO] ")
    if totals[0] == 0 and filters:
        print("[ERROR] No tests were executed!")
        print("[INFO] BUILD FAILURE")
        return 1
    print("[INFO] BUILD FAILURE" if bad else "[INFO] BUILD SUCCESS")
    return 1 if bad else 0


def main(argv):
    sys.setrecursionlimit(5000)
    if not os.path.exists("pom.xml"):
        print("[ERROR] The goal you specified requires a project to execute but there is no POM in this directory")
        return 1
    if len(argv) < 1 or argv[0] not in ("compile", "test"):
        print(__doc__.strip(), file=sys.stderr)
        return 2
    if argv[0] == "compile":
        return cmd_compile()
    filters = []
    for a in argv[1:]:
        if a.startswith("-Dtest="):
            filters.extend(x for x in a[len("-Dtest="):].split(",") if x)
    return cmd_test(filters)


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
