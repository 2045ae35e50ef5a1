//! Fixed separator and keyword inventories per language.

use crate::corpus::Language;

/// Operator and punctuation tokens, longest first within each family.
const SEPARATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "=>", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", ".", ",", ";", ":", "(", ")", "[", "]", "{", "}", "+", "-", "*",
    "/", "%", "=", "<", ">", "!", "~", "?", "&", "|", "^", "@", "\"", "'", "\\",
];

const PYTHON_SEPARATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=",
    "&=", "|=", "^=", "<<", ">>", ".", ",", ";", ":", "(", ")", "[", "]", "{", "}", "+", "-", "*", "/", "%", "=", "<",
    ">", "~", "&", "|", "^", "@", "#", "\"", "'", "\\",
];

const JAVA: &[&str] = &[
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
];

const PYTHON: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

const JAVASCRIPT: &[&str] = &[
    "await",
    "break",
    "case",
    "catch",
    "class",
    "const",
    "continue",
    "debugger",
    "default",
    "delete",
    "do",
    "else",
    "export",
    "extends",
    "false",
    "finally",
    "for",
    "function",
    "if",
    "import",
    "in",
    "instanceof",
    "let",
    "new",
    "null",
    "return",
    "super",
    "switch",
    "this",
    "throw",
    "true",
    "try",
    "typeof",
    "var",
    "void",
    "while",
    "with",
    "yield",
];

const TYPESCRIPT_EXTRA: &[&str] = &[
    "any",
    "enum",
    "implements",
    "interface",
    "keyof",
    "namespace",
    "private",
    "protected",
    "public",
    "readonly",
    "type",
];

const C: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum", "extern", "float",
    "for", "goto", "if", "inline", "int", "long", "register", "restrict", "return", "short", "signed", "sizeof",
    "static", "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while",
];

const CPP_EXTRA: &[&str] = &[
    "bool",
    "catch",
    "class",
    "constexpr",
    "delete",
    "explicit",
    "false",
    "friend",
    "namespace",
    "new",
    "nullptr",
    "operator",
    "private",
    "protected",
    "public",
    "template",
    "this",
    "throw",
    "true",
    "try",
    "typename",
    "using",
    "virtual",
];

const CSHARP: &[&str] = &[
    "abstract",
    "as",
    "base",
    "bool",
    "break",
    "case",
    "catch",
    "class",
    "const",
    "continue",
    "default",
    "delegate",
    "do",
    "double",
    "else",
    "enum",
    "event",
    "false",
    "finally",
    "for",
    "foreach",
    "if",
    "in",
    "int",
    "interface",
    "internal",
    "is",
    "namespace",
    "new",
    "null",
    "out",
    "override",
    "private",
    "protected",
    "public",
    "readonly",
    "ref",
    "return",
    "sealed",
    "static",
    "string",
    "struct",
    "switch",
    "this",
    "throw",
    "true",
    "try",
    "using",
    "var",
    "virtual",
    "void",
    "while",
];

const GO: &[&str] = &[
    "break",
    "case",
    "chan",
    "const",
    "continue",
    "default",
    "defer",
    "else",
    "fallthrough",
    "for",
    "func",
    "go",
    "goto",
    "if",
    "import",
    "interface",
    "map",
    "package",
    "range",
    "return",
    "select",
    "struct",
    "switch",
    "type",
    "var",
];

const RUST: &[&str] = &[
    "as", "async", "await", "break", "const", "continue", "crate", "dyn", "else", "enum", "extern", "false", "fn",
    "for", "if", "impl", "in", "let", "loop", "match", "mod", "move", "mut", "pub", "ref", "return", "self", "Self",
    "static", "struct", "super", "trait", "true", "type", "unsafe", "use", "where", "while",
];

pub fn separators(language: Language) -> Vec<String> {
    let list = match language {
        Language::Python => PYTHON_SEPARATORS,
        _ => SEPARATORS,
    };
    list.iter().map(|s| s.to_string()).collect()
}

pub fn keywords(language: Language) -> Vec<String> {
    let mut out: Vec<&str> = match language {
        Language::Java => JAVA.to_vec(),
        Language::Python => PYTHON.to_vec(),
        Language::Javascript => JAVASCRIPT.to_vec(),
        Language::Typescript => [JAVASCRIPT, TYPESCRIPT_EXTRA].concat(),
        Language::C => C.to_vec(),
        Language::Cpp => [C, CPP_EXTRA].concat(),
        Language::Csharp => CSHARP.to_vec(),
        Language::Go => GO.to_vec(),
        Language::Rust => RUST.to_vec(),
        Language::Other => Vec::new(),
    };
    out.sort_unstable();
    out.dedup();
    out.into_iter().map(String::from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventories_have_no_duplicates() {
        for lang in Language::ALL {
            let seps = separators(lang);
            let mut s = seps.clone();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), seps.len(), "{lang}");
        }
        assert_eq!(keywords(Language::Java).len(), 50);
    }
}
