//! Tokenizer for the supported Java subset.
//!
//! Comments and whitespace are dropped; every token keeps its 1-based line
//! and column. `>` is always emitted as a single-character token so that
//! nested generic closers (`>>`, `>>>`) need no special casing in the
//! parser.

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub col: u32,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.kind != TokenKind::Str && self.kind != TokenKind::Char && self.text == text
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Ident
    }
}

const PUNCT2: &[&str] = &[
    "&&", "||", "->", "::", "==", "!=", "<=", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<",
];

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let start_line = line;
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(ParseError::new(start_line, "unterminated block comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }

        let (tok_line, tok_col) = (line, col);
        let start = i;

        if c == '"' {
            // text block
            if chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"') {
                bump!();
                bump!();
                bump!();
                loop {
                    if i >= chars.len() {
                        return Err(ParseError::new(tok_line, "unterminated text block"));
                    }
                    if chars[i] == '\\' {
                        bump!();
                        if i < chars.len() {
                            bump!();
                        }
                        continue;
                    }
                    if chars[i] == '"' && chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"') {
                        bump!();
                        bump!();
                        bump!();
                        break;
                    }
                    bump!();
                }
            } else {
                bump!();
                loop {
                    if i >= chars.len() || chars[i] == '\n' {
                        return Err(ParseError::new(tok_line, "unterminated string literal"));
                    }
                    if chars[i] == '\\' {
                        bump!();
                        if i < chars.len() {
                            bump!();
                        }
                        continue;
                    }
                    if chars[i] == '"' {
                        bump!();
                        break;
                    }
                    bump!();
                }
            }
            tokens.push(Token {
                kind: TokenKind::Str,
                text: chars[start..i].iter().collect(),
                line: tok_line,
                col: tok_col,
            });
            continue;
        }

        if c == '\'' {
            bump!();
            loop {
                if i >= chars.len() || chars[i] == '\n' {
                    return Err(ParseError::new(tok_line, "unterminated character literal"));
                }
                if chars[i] == '\\' {
                    bump!();
                    if i < chars.len() {
                        bump!();
                    }
                    continue;
                }
                if chars[i] == '\'' {
                    bump!();
                    break;
                }
                bump!();
            }
            tokens.push(Token {
                kind: TokenKind::Char,
                text: chars[start..i].iter().collect(),
                line: tok_line,
                col: tok_col,
            });
            continue;
        }

        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let is_hex = c == '0' && matches!(chars.get(i + 1), Some('x') | Some('X'));
            let is_bin = c == '0' && matches!(chars.get(i + 1), Some('b') | Some('B'));
            if is_hex || is_bin {
                bump!();
                bump!();
            }
            while i < chars.len() {
                let d = chars[i];
                let exponent_sign =
                    !is_hex && (d == '+' || d == '-') && matches!(chars.get(i.wrapping_sub(1)), Some('e') | Some('E'));
                let fraction_dot = d == '.' && !is_hex && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
                if d.is_ascii_alphanumeric() || d == '_' || exponent_sign || fraction_dot {
                    bump!();
                } else {
                    break;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Number,
                text: chars[start..i].iter().collect(),
                line: tok_line,
                col: tok_col,
            });
            continue;
        }

        if c.is_alphabetic() || c == '_' || c == '$' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                bump!();
            }
            tokens.push(Token {
                kind: TokenKind::Ident,
                text: chars[start..i].iter().collect(),
                line: tok_line,
                col: tok_col,
            });
            continue;
        }

        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let width = if rest.starts_with("...") {
            3
        } else if PUNCT2.iter().any(|p| rest.starts_with(p)) {
            2
        } else if "{}()[];,.@=<>!~?:+-*/&|^%".contains(c) {
            1
        } else {
            return Err(ParseError::new(line, format!("unexpected character '{c}'")));
        };
        for _ in 0..width {
            bump!();
        }
        tokens.push(Token {
            kind: TokenKind::Punct,
            text: chars[start..i].iter().collect(),
            line: tok_line,
            col: tok_col,
        });
    }
    Ok(tokens)
}

/// Numeric value of a Java literal, ignoring suffixes and underscores.
pub fn literal_value(text: &str) -> Option<f64> {
    let cleaned: String = text.chars().filter(|c| *c != '_').collect();
    let lower = cleaned.to_ascii_lowercase();
    if let Some(hex) = lower.strip_prefix("0x") {
        let hex = hex.trim_end_matches('l');
        return u64::from_str_radix(hex, 16).ok().map(|v| v as f64);
    }
    if let Some(bin) = lower.strip_prefix("0b") {
        let bin = bin.trim_end_matches('l');
        return u64::from_str_radix(bin, 2).ok().map(|v| v as f64);
    }
    let trimmed = lower.trim_end_matches(['l', 'f', 'd']);
    if trimmed.len() > 1 && trimmed.starts_with('0') && trimmed.chars().all(|c| c.is_ascii_digit()) {
        return u64::from_str_radix(&trimmed[1..], 8).ok().map(|v| v as f64);
    }
    trimmed.parse::<f64>().ok()
}
