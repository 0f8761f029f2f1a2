use std::collections::BTreeSet;
use std::path::Path;

use super::lexer::{literal_value, tokenize, Token, TokenKind};
use super::{
    BodyStats, FieldDecl, Import, LineRange, MethodDecl, Modifier, Modifiers, NumericLiteral, Param, ParseError,
    SourceUnit, TypeDecl, TypeKind, TypeRef,
};

const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
    "true",
    "false",
    "null",
    "yield",
    "record",
    "var",
];

const TYPE_KEYWORDS: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "var",
];

fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Parses one compilation unit of the supported Java subset.
pub fn parse_source(text: &str, path: &Path) -> Result<SourceUnit, ParseError> {
    let tokens = tokenize(text)?;
    let line_count = text.lines().count() as u32;
    let code_lines: BTreeSet<u32> = tokens.iter().map(|t| t.line).collect();
    let mut p = Parser {
        toks: &tokens,
        pos: 0,
        code_lines: &code_lines,
        last_line: line_count.max(1),
    };

    p.skip_annotations()?;
    let mut package = String::new();
    if p.peek_is("package") {
        p.bump();
        package = p.qualified_name()?;
        p.expect(";")?;
    }

    let mut imports = Vec::new();
    while p.peek_is("import") {
        p.bump();
        let is_static = p.eat("static");
        let mut name = p.ident()?;
        let mut wildcard = false;
        while p.eat(".") {
            if p.eat("*") {
                wildcard = true;
                break;
            }
            name.push('.');
            name.push_str(&p.ident()?);
        }
        p.expect(";")?;
        imports.push(Import {
            name,
            is_static,
            wildcard,
        });
    }

    let mut types = Vec::new();
    while !p.at_end() {
        if p.eat(";") {
            continue;
        }
        p.type_declaration(&package, None, &mut types)?;
    }

    let mut seen = BTreeSet::new();
    for t in &types {
        if !seen.insert(t.fqn.clone()) {
            return Err(ParseError::new(t.line_range.start, format!("duplicate type {}", t.fqn)));
        }
    }

    Ok(SourceUnit {
        path: path.to_path_buf(),
        package,
        imports,
        types,
        raw_text: text.to_string(),
        line_count,
        is_test: false,
    })
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    code_lines: &'a BTreeSet<u32>,
    last_line: u32,
}

/// A member whose body analysis waits until all fields of the type are known.
struct PendingMethod {
    decl: MethodDecl,
    body: Option<(usize, usize)>,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + offset)
    }

    fn peek_is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(text))
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.peek_is(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn line(&self) -> u32 {
        self.peek()
            .or_else(|| self.toks.last())
            .map_or(self.last_line, |t| t.line)
    }

    fn error(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::new(t.line, format!("expected {expected}, found '{}'", t.text)),
            None => ParseError::new(self.line(), format!("expected {expected}, found end of file")),
        }
    }

    fn expect(&mut self, text: &str) -> Result<&'a Token, ParseError> {
        if self.peek_is(text) {
            Ok(self.bump().unwrap())
        } else {
            Err(self.error(&format!("'{text}'")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(t) if t.is_ident() && !is_keyword(&t.text) => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn qualified_name(&mut self) -> Result<String, ParseError> {
        let mut name = self.ident()?;
        while self.peek_is(".") && self.peek_at(1).is_some_and(|t| t.is_ident()) {
            self.bump();
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    /// Skips a balanced region starting at the current opening token and
    /// returns the index of the matching closing token.
    fn skip_balanced(&mut self, open: &str, close: &str) -> Result<usize, ParseError> {
        let start_line = self.line();
        self.expect(open)?;
        let mut depth = 1usize;
        while let Some(t) = self.bump() {
            if t.is(open) {
                depth += 1;
            } else if t.is(close) {
                depth -= 1;
                if depth == 0 {
                    return Ok(self.pos - 1);
                }
            }
        }
        Err(ParseError::new(start_line, format!("unbalanced '{open}'")))
    }

    fn skip_type_params(&mut self) -> Result<(), ParseError> {
        if self.peek_is("<") {
            self.skip_balanced("<", ">")?;
        }
        Ok(())
    }

    fn skip_annotations(&mut self) -> Result<(), ParseError> {
        while self.peek_is("@") && !self.peek_at(1).is_some_and(|t| t.is("interface")) {
            self.bump();
            self.qualified_name()?;
            if self.peek_is("(") {
                self.skip_balanced("(", ")")?;
            }
        }
        Ok(())
    }

    fn modifiers(&mut self) -> Result<Modifiers, ParseError> {
        let mut mods = Modifiers::new();
        loop {
            self.skip_annotations()?;
            let Some(t) = self.peek() else { break };
            if t.is("non")
                && self.peek_at(1).is_some_and(|t| t.is("-"))
                && self.peek_at(2).is_some_and(|t| t.is("sealed"))
            {
                self.pos += 3;
                mods.insert(Modifier::NonSealed);
                continue;
            }
            // `default` in a switch never reaches here; inside type bodies it
            // is the interface default-method modifier.
            match Modifier::from_keyword(&t.text) {
                Some(m) if t.is_ident() => {
                    self.pos += 1;
                    mods.insert(m);
                }
                _ => break,
            }
        }
        Ok(mods)
    }

    fn type_ref(&mut self) -> Result<TypeRef, ParseError> {
        self.skip_annotations()?;
        let first = match self.peek() {
            Some(t)
                if t.is_ident()
                    && (TYPE_KEYWORDS.contains(&t.text.as_str()) || t.is("void") || !is_keyword(&t.text)) =>
            {
                self.pos += 1;
                t.text.clone()
            }
            _ => return Err(self.error("type")),
        };
        let mut name = first;
        self.skip_type_params()?;
        while self.peek_is(".") && self.peek_at(1).is_some_and(|t| t.is_ident() || t.is("@")) {
            self.bump();
            self.skip_annotations()?;
            name.push('.');
            name.push_str(&self.ident()?);
            self.skip_type_params()?;
        }
        let mut dims = 0u8;
        while self.peek_is("[") && self.peek_at(1).is_some_and(|t| t.is("]")) {
            self.pos += 2;
            dims += 1;
        }
        Ok(TypeRef::new(name, dims))
    }

    fn type_list(&mut self) -> Result<Vec<TypeRef>, ParseError> {
        let mut list = vec![self.type_ref()?];
        while self.eat(",") {
            list.push(self.type_ref()?);
        }
        Ok(list)
    }

    fn type_declaration(
        &mut self,
        package: &str,
        enclosing: Option<&str>,
        out: &mut Vec<TypeDecl>,
    ) -> Result<(), ParseError> {
        let start_line = self.line();
        let mut modifiers = self.modifiers()?;
        let kind = match self.peek() {
            Some(t) if t.is("class") => TypeKind::Class,
            Some(t) if t.is("interface") => TypeKind::Interface,
            Some(t) if t.is("enum") => TypeKind::Enum,
            Some(t) if t.is("record") => return Err(ParseError::new(t.line, "record declarations are not supported")),
            Some(t) if t.is("@") => {
                return Err(ParseError::new(
                    t.line,
                    "annotation type declarations are not supported",
                ))
            }
            _ => return Err(self.error("type declaration")),
        };
        self.bump();
        let name = self.ident()?;
        let fqn = match enclosing {
            Some(outer) => format!("{outer}.{name}"),
            None if package.is_empty() => name.clone(),
            None => format!("{package}.{name}"),
        };
        self.skip_type_params()?;

        let mut supertype = None;
        let mut interfaces = Vec::new();
        loop {
            if self.eat("extends") {
                if kind == TypeKind::Interface {
                    interfaces.extend(self.type_list()?);
                } else {
                    supertype = Some(self.type_ref()?);
                }
            } else if self.eat("implements") {
                interfaces.extend(self.type_list()?);
            } else if self.eat("permits") {
                self.type_list()?;
            } else {
                break;
            }
        }

        if kind == TypeKind::Interface {
            modifiers.insert(Modifier::Abstract);
        }

        // Reserve the slot so outer types precede their nested types.
        let slot = out.len();
        out.push(TypeDecl {
            fqn: fqn.clone(),
            kind,
            supertype,
            interfaces,
            fields: Vec::new(),
            methods: Vec::new(),
            modifiers,
            line_range: LineRange::new(start_line, start_line),
            loc: 0,
            enclosing: enclosing.map(str::to_string),
        });

        self.expect("{")?;
        let mut fields: Vec<FieldDecl> = Vec::new();
        let mut pending: Vec<PendingMethod> = Vec::new();
        let mut field_names = BTreeSet::new();

        if kind == TypeKind::Enum {
            self.enum_constants()?;
        }

        let end_line = loop {
            let Some(t) = self.peek() else {
                return Err(ParseError::new(start_line, format!("unterminated body of {name}")));
            };
            if t.is("}") {
                self.bump();
                break t.line;
            }
            if self.eat(";") {
                continue;
            }
            if t.is("{") || (t.is("static") && self.peek_at(1).is_some_and(|n| n.is("{"))) {
                self.eat("static");
                self.skip_balanced("{", "}")?;
                continue;
            }

            let member_start = self.pos;
            let mut mods = self.modifiers()?;
            let member_line = self.declaration_line(member_start);
            let Some(t) = self.peek() else {
                return Err(self.error("member"));
            };
            if t.is("class") || t.is("interface") || t.is("enum") || t.is("record") || t.is("@") {
                self.pos = member_start;
                self.type_declaration(package, Some(&fqn), out)?;
                continue;
            }

            self.skip_type_params()?;

            let is_ctor = self.peek().is_some_and(|t| t.text == name) && self.peek_at(1).is_some_and(|t| t.is("("));
            if is_ctor {
                self.bump();
                let params = self.params()?;
                self.skip_throws()?;
                let body_line = self.line();
                let body = self.method_body(body_line)?;
                let end = body.map_or(body_line, |(_, close)| self.toks[close].line);
                pending.push(PendingMethod {
                    decl: self.method_decl(name.clone(), params, None, true, mods, member_line, end),
                    body,
                });
                continue;
            }

            let ty = self.type_ref()?;
            let member_name = self.ident()?;
            if self.peek_is("(") {
                let params = self.params()?;
                let mut dims = ty.array_dims;
                while self.peek_is("[") {
                    self.expect("[")?;
                    self.expect("]")?;
                    dims += 1;
                }
                let ret = TypeRef { array_dims: dims, ..ty };
                self.skip_throws()?;
                if self.eat("default") {
                    // annotation element default; skip to ';'
                    while !self.at_end() && !self.peek_is(";") {
                        self.bump();
                    }
                }
                let body_line = self.line();
                let body = self.method_body(body_line)?;
                let end = body.map_or(body_line, |(_, close)| self.toks[close].line);
                if kind == TypeKind::Interface {
                    if body.is_none() && !mods.contains(&Modifier::Static) {
                        mods.insert(Modifier::Abstract);
                    }
                    if !mods.contains(&Modifier::Private) {
                        mods.insert(Modifier::Public);
                    }
                }
                pending.push(PendingMethod {
                    decl: self.method_decl(member_name, params, Some(ret), false, mods, member_line, end),
                    body,
                });
                continue;
            }

            // field declarators
            if kind == TypeKind::Interface {
                mods.extend([Modifier::Public, Modifier::Static, Modifier::Final]);
            }
            let mut declarator = member_name;
            loop {
                let decl_line = self.toks[self.pos - 1].line;
                let mut dims = ty.array_dims;
                while self.peek_is("[") {
                    self.expect("[")?;
                    self.expect("]")?;
                    dims += 1;
                }
                let mut init_literals = Vec::new();
                let mut init_types = BTreeSet::new();
                if self.eat("=") {
                    let start = self.pos;
                    let end = self.initializer_end()?;
                    let none = BTreeSet::new();
                    let scan = BodyScan::new(&self.toks[start..end], &none);
                    init_literals = scan.literals();
                    init_types = scan.invoked_types(&none);
                    self.pos = end;
                }
                if !field_names.insert(declarator.clone()) {
                    return Err(ParseError::new(decl_line, format!("duplicate field {declarator}")));
                }
                let is_constant = mods.contains(&Modifier::Static) && mods.contains(&Modifier::Final);
                fields.push(FieldDecl {
                    name: declarator,
                    ty: TypeRef {
                        array_dims: dims,
                        ..ty.clone()
                    },
                    modifiers: mods.clone(),
                    is_constant,
                    line: decl_line,
                    initializer_literals: init_literals,
                    initializer_types: init_types,
                });
                if self.eat(",") {
                    declarator = self.ident()?;
                    continue;
                }
                self.expect(";")?;
                break;
            }
        };

        let mut methods = Vec::with_capacity(pending.len());
        let mut signatures = BTreeSet::new();
        for PendingMethod { mut decl, body } in pending {
            if !signatures.insert(decl.signature.clone()) {
                return Err(ParseError::new(
                    decl.line_range.start,
                    format!("duplicate method {}", decl.signature),
                ));
            }
            let params: BTreeSet<String> = decl.params.iter().map(|p| p.name.clone()).collect();
            if let Some((open, close)) = body {
                let scan = BodyScan::new(&self.toks[open + 1..close], &field_names);
                let mut locals = scan.local_names();
                locals.extend(params.iter().cloned());
                decl.body_stats.decision_points = scan.decision_points();
                decl.body_stats.accessed_fields = scan.accessed_fields(&locals);
                decl.body_stats.invoked_types = scan.invoked_types(&locals);
                decl.body_stats.literals = scan.literals();
                decl.body_stats.local_names = locals;
            } else {
                decl.body_stats.local_names = params;
            }
            methods.push(decl);
        }

        let decl = &mut out[slot];
        decl.fields = fields;
        decl.methods = methods;
        decl.line_range = LineRange::new(start_line, end_line);
        decl.loc = self.count_code_lines(start_line, end_line);
        Ok(())
    }

    fn enum_constants(&mut self) -> Result<(), ParseError> {
        loop {
            self.skip_annotations()?;
            if self.eat(";") || self.peek_is("}") {
                return Ok(());
            }
            self.ident()?;
            if self.peek_is("(") {
                self.skip_balanced("(", ")")?;
            }
            if self.peek_is("{") {
                self.skip_balanced("{", "}")?;
            }
            if !self.eat(",") {
                if self.eat(";") || self.peek_is("}") {
                    return Ok(());
                }
                return Err(self.error("',' or ';' after enum constant"));
            }
        }
    }

    fn params(&mut self) -> Result<Vec<Param>, ParseError> {
        self.expect("(")?;
        let mut params = Vec::new();
        if self.eat(")") {
            return Ok(params);
        }
        loop {
            self.modifiers()?;
            let mut ty = self.type_ref()?;
            if self.eat("...") {
                ty.array_dims += 1;
            }
            if self.peek_is("this") {
                // receiver parameter
                self.bump();
            } else {
                let name = self.ident()?;
                while self.peek_is("[") {
                    self.expect("[")?;
                    self.expect("]")?;
                    ty.array_dims += 1;
                }
                params.push(Param { name, ty });
            }
            if self.eat(")") {
                return Ok(params);
            }
            self.expect(",")?;
        }
    }

    fn skip_throws(&mut self) -> Result<(), ParseError> {
        if self.eat("throws") {
            self.type_list()?;
        }
        Ok(())
    }

    /// Returns the (open, close) brace indices of a body, or `None` for `;`.
    fn method_body(&mut self, line: u32) -> Result<Option<(usize, usize)>, ParseError> {
        if self.eat(";") {
            return Ok(None);
        }
        if !self.peek_is("{") {
            return Err(ParseError::new(line, "expected method body or ';'"));
        }
        let open = self.pos;
        let close = self.skip_balanced("{", "}")?;
        Ok(Some((open, close)))
    }

    /// Index of the `,` or `;` terminating a field initializer.
    fn initializer_end(&self) -> Result<usize, ParseError> {
        let mut depth = 0i32;
        let mut i = self.pos;
        while let Some(t) = self.toks.get(i) {
            if t.kind == TokenKind::Punct {
                match t.text.as_str() {
                    "(" | "{" | "[" => depth += 1,
                    ")" | "}" | "]" => depth -= 1,
                    "," | ";" if depth == 0 => return Ok(i),
                    _ => {}
                }
            }
            if depth < 0 {
                return Err(ParseError::new(t.line, "unbalanced initializer"));
            }
            i += 1;
        }
        Err(ParseError::new(self.line(), "unterminated field initializer"))
    }

    /// Line of the first token of a member declaration after its annotations.
    fn declaration_line(&self, from: usize) -> u32 {
        let mut i = from;
        while i < self.pos {
            if !self.toks[i].is("@") {
                return self.toks[i].line;
            }
            i += 1;
            while i < self.pos && (self.toks[i].is_ident() || self.toks[i].is(".")) {
                i += 1;
            }
            if i < self.pos && self.toks[i].is("(") {
                let mut depth = 0;
                while i < self.pos {
                    if self.toks[i].is("(") {
                        depth += 1;
                    } else if self.toks[i].is(")") {
                        depth -= 1;
                        if depth == 0 {
                            i += 1;
                            break;
                        }
                    }
                    i += 1;
                }
            }
        }
        self.line()
    }

    fn count_code_lines(&self, start: u32, end: u32) -> u32 {
        self.code_lines.range(start..=end).count() as u32
    }

    #[allow(clippy::too_many_arguments)]
    fn method_decl(
        &self,
        name: String,
        params: Vec<Param>,
        return_type: Option<TypeRef>,
        is_constructor: bool,
        modifiers: Modifiers,
        start: u32,
        end: u32,
    ) -> MethodDecl {
        let signature = format!(
            "{}({})",
            name,
            params.iter().map(|p| p.ty.display()).collect::<Vec<_>>().join(",")
        );
        MethodDecl {
            name,
            signature,
            params,
            return_type,
            is_constructor,
            modifiers,
            body_stats: BodyStats {
                loc: self.count_code_lines(start, end),
                ..BodyStats::default()
            },
            line_range: LineRange::new(start, end),
        }
    }
}

/// Token-level scan of a method body or initializer expression.
struct BodyScan<'a> {
    toks: &'a [Token],
    fields: &'a BTreeSet<String>,
}

impl<'a> BodyScan<'a> {
    fn new(toks: &'a [Token], fields: &'a BTreeSet<String>) -> Self {
        Self { toks, fields }
    }

    fn at(&self, i: isize) -> Option<&'a Token> {
        if i < 0 {
            None
        } else {
            self.toks.get(i as usize)
        }
    }

    fn decision_points(&self) -> u32 {
        let mut count = 0;
        for (i, t) in self.toks.iter().enumerate() {
            let i = i as isize;
            let hit = match t.kind {
                TokenKind::Ident => matches!(t.text.as_str(), "if" | "for" | "while" | "case" | "catch"),
                TokenKind::Punct => match t.text.as_str() {
                    "&&" | "||" => true,
                    "?" => !self.is_wildcard(i),
                    _ => false,
                },
                _ => false,
            };
            if hit {
                count += 1;
            }
        }
        count
    }

    fn is_wildcard(&self, i: isize) -> bool {
        let prev = self.at(i - 1);
        let next = self.at(i + 1);
        prev.is_some_and(|t| t.is("<"))
            || next.is_some_and(|t| t.is(">") || t.is(",") || t.is("extends") || t.is("super"))
    }

    /// Whether the `>` at `i` closes a generic argument list of a type.
    fn closes_type_args(&self, i: isize) -> bool {
        let mut depth = 0;
        let mut j = i;
        while let Some(t) = self.at(j) {
            if t.is(">") {
                depth += 1;
            } else if t.is("<") {
                depth -= 1;
                if depth == 0 {
                    return self.at(j - 1).is_some_and(|p| p.is_ident() && !is_keyword(&p.text));
                }
            } else if !(t.is_ident() || t.is(",") || t.is(".") || t.is("?") || t.is("[") || t.is("]")) {
                return false;
            }
            j -= 1;
        }
        false
    }

    fn local_names(&self) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        for (i, t) in self.toks.iter().enumerate() {
            let i = i as isize;
            if !t.is_ident() || is_keyword(&t.text) {
                continue;
            }
            let Some(next) = self.at(i + 1) else { continue };
            if !(next.is("=") || next.is(";") || next.is(",") || next.is(":") || next.is(")")) {
                continue;
            }
            let Some(prev) = self.at(i - 1) else { continue };
            let declares = if prev.is_ident() {
                !is_keyword(&prev.text) || TYPE_KEYWORDS.contains(&prev.text.as_str())
            } else if prev.is("]") {
                self.at(i - 2).is_some_and(|t| t.is("["))
            } else if prev.is(">") {
                self.closes_type_args(i - 1)
            } else {
                false
            };
            // `a.b c` is still a declaration; `x.y` followed by `=` is not,
            // because then prev is "." rather than an identifier.
            if declares && !(prev.is_ident() && self.at(i - 2).is_some_and(|t| t.is("new"))) {
                names.insert(t.text.clone());
            }
        }
        // lambda parameters: `x ->` and `(a, b) ->`
        for (i, t) in self.toks.iter().enumerate() {
            if !t.is("->") {
                continue;
            }
            let i = i as isize;
            match self.at(i - 1) {
                Some(p) if p.is_ident() => {
                    names.insert(p.text.clone());
                }
                Some(p) if p.is(")") => {
                    let mut j = i - 2;
                    while let Some(t) = self.at(j) {
                        if t.is("(") {
                            break;
                        }
                        if t.is_ident() && self.at(j + 1).is_some_and(|n| n.is(",") || n.is(")")) {
                            names.insert(t.text.clone());
                        }
                        j -= 1;
                    }
                }
                _ => {}
            }
        }
        names
    }

    fn accessed_fields(&self, locals: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (i, t) in self.toks.iter().enumerate() {
            let i = i as isize;
            if !t.is_ident() || !self.fields.contains(&t.text) {
                continue;
            }
            let prev = self.at(i - 1);
            if prev.is_some_and(|p| p.is(".")) {
                if self.at(i - 2).is_some_and(|p| p.is("this")) {
                    out.insert(t.text.clone());
                }
                continue;
            }
            if self.at(i + 1).is_some_and(|n| n.is("(")) || locals.contains(&t.text) {
                continue;
            }
            out.insert(t.text.clone());
        }
        out
    }

    fn invoked_types(&self, locals: &BTreeSet<String>) -> BTreeSet<TypeRef> {
        let mut out = BTreeSet::new();
        let mut i = 0usize;
        while i < self.toks.len() {
            let t = &self.toks[i];
            if (t.is("new") || t.is("instanceof")) && i + 1 < self.toks.len() {
                let mut j = i + 1;
                while self.toks.get(j).is_some_and(|t| t.is("@")) {
                    j += 2;
                }
                if let Some(first) = self.toks.get(j).filter(|t| t.is_ident()) {
                    let mut name = first.text.clone();
                    j += 1;
                    while self.toks.get(j).is_some_and(|t| t.is("."))
                        && self.toks.get(j + 1).is_some_and(|t| t.is_ident())
                    {
                        name.push('.');
                        name.push_str(&self.toks[j + 1].text);
                        j += 2;
                    }
                    let ty = TypeRef::new(name, 0);
                    if ty.resolution != super::Resolution::Primitive && !is_keyword(ty.simple_name()) {
                        out.insert(ty);
                    }
                }
            } else if t.is_ident()
                && !is_keyword(&t.text)
                && t.text.starts_with(|c: char| c.is_ascii_uppercase())
                && !self.at(i as isize - 1).is_some_and(|p| p.is("."))
                && !locals.contains(&t.text)
                && !self.fields.contains(&t.text)
            {
                let next = self.toks.get(i + 1);
                let static_access =
                    next.is_some_and(|n| n.is(".")) && self.toks.get(i + 2).is_some_and(|n| n.is_ident());
                let method_ref = next.is_some_and(|n| n.is("::"));
                if static_access || method_ref {
                    out.insert(TypeRef::new(t.text.clone(), 0));
                }
            }
            i += 1;
        }
        out
    }

    fn literals(&self) -> Vec<NumericLiteral> {
        let mut out = Vec::new();
        for (i, t) in self.toks.iter().enumerate() {
            if t.kind != TokenKind::Number {
                continue;
            }
            let i = i as isize;
            let negated = self.at(i - 1).is_some_and(|p| p.is("-"))
                && match self.at(i - 2) {
                    None => true,
                    Some(pp) => {
                        !(pp.kind == TokenKind::Number
                            || pp.kind == TokenKind::Str
                            || pp.kind == TokenKind::Char
                            || (pp.is_ident() && !is_keyword(&pp.text))
                            || pp.is(")")
                            || pp.is("]")
                            || pp.is("this"))
                    }
                };
            out.push(NumericLiteral {
                text: t.text.clone(),
                value: literal_value(&t.text).unwrap_or(f64::NAN),
                negated,
                line: t.line,
            });
        }
        out
    }
}
