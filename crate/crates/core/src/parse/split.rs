//! Top-level SQL statement splitting that never divides inside quotes,
//! comments, or dollar-quoted bodies.

/// A piece of a split file: one SQL statement or one client meta line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub kind: ChunkKind,
    pub text: String,
    /// 1-based line of the first content character.
    pub line: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChunkKind {
    Sql,
    /// A backslash-prefixed client line (psql meta-command).
    Meta,
}

#[derive(Debug, Clone, Copy)]
pub struct SplitOptions {
    /// `--` opens a line comment.
    pub dash_comments: bool,
    /// `#` opens a line comment.
    pub hash_comments: bool,
    /// `$tag$ ... $tag$` bodies are opaque.
    pub dollar_quotes: bool,
    /// Backslash escapes the next character inside quoted strings
    /// (always on inside PostgreSQL `E'...'` strings).
    pub backslash_escapes: bool,
    /// Lines starting with `\` at a statement boundary become meta chunks.
    pub meta_lines: bool,
}

impl SplitOptions {
    pub fn postgres() -> Self {
        SplitOptions {
            dash_comments: true,
            hash_comments: false,
            dollar_quotes: true,
            backslash_escapes: false,
            meta_lines: true,
        }
    }

    pub fn mysql() -> Self {
        SplitOptions {
            dash_comments: false,
            hash_comments: true,
            dollar_quotes: false,
            backslash_escapes: true,
            meta_lines: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum State {
    Normal,
    LineComment,
    /// PostgreSQL block comments nest.
    BlockComment(u32),
    Single { estring: bool },
    Double,
    Backtick,
    Dollar(String),
}

/// Streaming splitter; feed text, collect finished chunks, then call
/// [`Splitter::finish`] for any unterminated tail.
pub struct Splitter {
    options: SplitOptions,
    state: State,
    buf: String,
    line: u32,
    content_start: Option<(usize, u32)>,
    prev: Option<char>,
    prev_prev: Option<char>,
    chunks: Vec<Chunk>,
    line_only_ws: bool,
}

impl Splitter {
    pub fn new(options: SplitOptions) -> Self {
        Splitter {
            options,
            state: State::Normal,
            buf: String::new(),
            line: 1,
            content_start: None,
            prev: None,
            prev_prev: None,
            chunks: Vec::new(),
            line_only_ws: true,
        }
    }

    /// True when no statement is in progress.
    pub fn at_boundary(&self) -> bool {
        self.state == State::Normal && self.content_start.is_none()
    }

    pub fn feed(&mut self, text: &str) {
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            let peek = chars.peek().copied();
            self.step(c, peek, &mut chars);
        }
    }

    fn step(
        &mut self,
        c: char,
        peek: Option<char>,
        chars: &mut std::iter::Peekable<std::str::Chars<'_>>,
    ) {
        // Meta lines are recognized before any buffering so the backslash
        // never enters the SQL buffer.
        if self.options.meta_lines
            && self.state == State::Normal
            && self.at_boundary()
            && self.line_only_ws
            && c == '\\'
        {
            let mut meta = String::from('\\');
            let line = self.line;
            for mc in chars.by_ref() {
                if mc == '\n' {
                    break;
                }
                meta.push(mc);
            }
            self.chunks.push(Chunk {
                kind: ChunkKind::Meta,
                text: meta.trim_end().to_string(),
                line,
            });
            self.line += 1;
            self.line_only_ws = true;
            self.buf.clear();
            self.prev = None;
            self.prev_prev = None;
            return;
        }
        if c == '\n' {
            self.line_only_ws = true;
        } else if !c.is_whitespace() {
            self.line_only_ws = false;
        }

        match &self.state {
            State::Normal => match c {
                '-' if self.options.dash_comments && peek == Some('-') => {
                    self.push_raw(c);
                    self.push_next(chars);
                    self.state = State::LineComment;
                }
                '#' if self.options.hash_comments => {
                    self.push_raw(c);
                    self.state = State::LineComment;
                }
                '/' if peek == Some('*') => {
                    self.push_raw(c);
                    self.push_next(chars);
                    self.state = State::BlockComment(1);
                }
                '\'' => {
                    let estring = self.prev.is_some_and(|p| p == 'e' || p == 'E')
                        && !self
                            .prev_prev
                            .is_some_and(|p| p.is_alphanumeric() || p == '_');
                    self.push_content(c);
                    self.state = State::Single { estring };
                }
                '"' => {
                    self.push_content(c);
                    self.state = State::Double;
                }
                '`' if self.options.backslash_escapes => {
                    self.push_content(c);
                    self.state = State::Backtick;
                }
                '$' if self.options.dollar_quotes => {
                    if let Some(tag) = scan_dollar_tag(chars) {
                        self.push_content(c);
                        for tc in tag.chars() {
                            self.push_content(tc);
                        }
                        self.push_content('$');
                        self.state = State::Dollar(tag);
                    } else {
                        self.push_content(c);
                    }
                }
                ';' => {
                    self.push_raw(c);
                    self.end_statement();
                }
                _ => {
                    if c.is_whitespace() {
                        self.push_raw(c);
                    } else {
                        self.push_content(c);
                    }
                }
            },
            State::LineComment => {
                self.push_raw(c);
                if c == '\n' {
                    self.state = State::Normal;
                }
            }
            State::BlockComment(depth) => {
                let depth = *depth;
                self.push_raw(c);
                if c == '*' && peek == Some('/') {
                    self.push_next(chars);
                    self.state = if depth <= 1 {
                        State::Normal
                    } else {
                        State::BlockComment(depth - 1)
                    };
                } else if c == '/' && peek == Some('*') {
                    self.push_next(chars);
                    self.state = State::BlockComment(depth + 1);
                }
            }
            State::Single { estring } => {
                let estring = *estring;
                self.push_content(c);
                if c == '\\' && (estring || self.options.backslash_escapes) {
                    if peek.is_some() {
                        self.push_next_content(chars);
                    }
                } else if c == '\'' {
                    if peek == Some('\'') {
                        self.push_next_content(chars);
                    } else {
                        self.state = State::Normal;
                    }
                }
            }
            State::Double => {
                self.push_content(c);
                if c == '\\' && self.options.backslash_escapes {
                    if peek.is_some() {
                        self.push_next_content(chars);
                    }
                } else if c == '"' {
                    if peek == Some('"') {
                        self.push_next_content(chars);
                    } else {
                        self.state = State::Normal;
                    }
                }
            }
            State::Backtick => {
                self.push_content(c);
                if c == '`' {
                    self.state = State::Normal;
                }
            }
            State::Dollar(tag) => {
                let tag = tag.clone();
                self.push_content(c);
                if c == '$' {
                    let closer: String = format!("{tag}$");
                    let mut matched = true;
                    let mut taken = String::new();
                    for want in closer.chars() {
                        match chars.peek() {
                            Some(&got) if got == want => {
                                taken.push(got);
                                chars.next();
                            }
                            _ => {
                                matched = false;
                                break;
                            }
                        }
                    }
                    for tc in taken.chars() {
                        self.push_content(tc);
                    }
                    if matched {
                        self.state = State::Normal;
                    }
                }
            }
        }
    }

    fn push_next(&mut self, chars: &mut std::iter::Peekable<std::str::Chars<'_>>) {
        if let Some(c) = chars.next() {
            self.push_raw(c);
        }
    }

    fn push_next_content(&mut self, chars: &mut std::iter::Peekable<std::str::Chars<'_>>) {
        if let Some(c) = chars.next() {
            self.push_content(c);
        }
    }

    /// Buffers a character that does not count as statement content
    /// (whitespace, comments, terminators).
    fn push_raw(&mut self, c: char) {
        self.buf.push(c);
        if c == '\n' {
            self.line += 1;
        }
        self.prev_prev = self.prev;
        self.prev = Some(c);
    }

    fn push_content(&mut self, c: char) {
        if self.content_start.is_none() {
            self.content_start = Some((self.buf.len(), self.line));
        }
        self.push_raw(c);
    }

    fn end_statement(&mut self) {
        if let Some((offset, line)) = self.content_start.take() {
            let text = self.buf[offset..].trim().to_string();
            if !text.is_empty() {
                self.chunks.push(Chunk {
                    kind: ChunkKind::Sql,
                    text,
                    line,
                });
            }
        }
        self.buf.clear();
    }

    pub fn finish(mut self) -> Vec<Chunk> {
        self.end_statement();
        self.chunks
    }
}

/// Peeks whether the characters after a `$` form `tag$`; consumes them
/// only on a match.
fn scan_dollar_tag(chars: &mut std::iter::Peekable<std::str::Chars<'_>>) -> Option<String> {
    // Clone the iterator to look ahead without consuming.
    let mut ahead = chars.clone();
    let mut tag = String::new();
    loop {
        match ahead.next() {
            Some('$') => break,
            Some(c) if tag.is_empty() && (c.is_alphabetic() || c == '_') => tag.push(c),
            Some(c) if !tag.is_empty() && (c.is_alphanumeric() || c == '_') => tag.push(c),
            _ => return None,
        }
        if tag.len() > 64 {
            return None;
        }
    }
    // Consume tag plus the closing '$' of the opener.
    for _ in 0..=tag.len() {
        chars.next();
    }
    Some(tag)
}

/// Splits a whole file into top-level statements and meta lines.
pub fn split_statements(text: &str, options: SplitOptions) -> Vec<Chunk> {
    let mut splitter = Splitter::new(options);
    splitter.feed(text);
    splitter.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sql_texts(text: &str) -> Vec<String> {
        split_statements(text, SplitOptions::postgres())
            .into_iter()
            .filter(|c| c.kind == ChunkKind::Sql)
            .map(|c| c.text)
            .collect()
    }

    #[test]
    fn splits_on_top_level_semicolons_only() {
        let stmts = sql_texts("SELECT 1; SELECT ';' ; SELECT \"a;b\";");
        assert_eq!(stmts.len(), 3);
        assert_eq!(stmts[1], "SELECT ';' ;");
    }

    #[test]
    fn respects_comments() {
        let stmts = sql_texts("SELECT 1 -- not a split ;\n+ 1;\n/* ; */ SELECT 2;");
        assert_eq!(stmts.len(), 2);
        assert!(stmts[0].contains("+ 1"));
        assert_eq!(stmts[1], "SELECT 2;");
    }

    #[test]
    fn nested_block_comments() {
        let stmts = sql_texts("SELECT /* a /* b ; */ c ; */ 1;");
        assert_eq!(stmts.len(), 1);
    }

    #[test]
    fn dollar_quoted_bodies_are_opaque() {
        let stmts = sql_texts("CREATE FUNCTION f() AS $body$ SELECT 1; $body$ LANGUAGE sql; SELECT $$x;y$$;");
        assert_eq!(stmts.len(), 2);
        assert!(stmts[0].contains("$body$ SELECT 1; $body$"));
    }

    #[test]
    fn escaped_quotes_inside_strings() {
        let stmts = sql_texts("SELECT 'it''s; fine'; SELECT E'\\'; still one';");
        assert_eq!(stmts.len(), 2);
    }

    #[test]
    fn meta_lines_become_meta_chunks() {
        let chunks = split_statements(
            "\\set regresslib '/lib/regress.so'\nSELECT 1;\n\\dt\n",
            SplitOptions::postgres(),
        );
        assert_eq!(chunks.len(), 3);
        assert_eq!(chunks[0].kind, ChunkKind::Meta);
        assert_eq!(chunks[0].text, "\\set regresslib '/lib/regress.so'");
        assert_eq!(chunks[1].kind, ChunkKind::Sql);
        assert_eq!(chunks[2].kind, ChunkKind::Meta);
        assert_eq!(chunks[2].line, 3);
    }

    #[test]
    fn leading_comments_are_not_statement_content() {
        let chunks = split_statements(
            "-- header comment\n\n-- more\nSELECT 1;\n-- trailing only\n",
            SplitOptions::postgres(),
        );
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].text, "SELECT 1;");
        assert_eq!(chunks[0].line, 4);
    }

    #[test]
    fn unterminated_tail_is_kept() {
        let stmts = sql_texts("SELECT 1;\nSELECT 2");
        assert_eq!(stmts, vec!["SELECT 1;", "SELECT 2"]);
    }

    #[test]
    fn mysql_hash_comments_and_backslash_escapes() {
        let stmts: Vec<String> = split_statements(
            "# comment ; here\nSELECT 'a\\'; b';\nSELECT 2;",
            SplitOptions::mysql(),
        )
        .into_iter()
        .map(|c| c.text)
        .collect();
        assert_eq!(stmts.len(), 2);
    }
}
