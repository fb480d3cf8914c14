//! Interactive and scripted sessions over one engine.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rxo_core::oo::parser;
use rxo_core::{Engine, Error};

use crate::format::{format_relation, OutputMode};

pub struct Session {
    pub engine: Engine,
    pub db_path: Option<PathBuf>,
    pub mode: OutputMode,
    pub echo: bool,
    pub keep_going: bool,
    pub errors: u64,
}

impl Session {
    pub fn new(db_path: Option<PathBuf>) -> Result<Session, Error> {
        let engine = match &db_path {
            Some(dir) if dir.join("catalog.txt").exists() => Engine::load(dir)?,
            _ => Engine::new(),
        };
        Ok(Session {
            engine,
            db_path,
            mode: OutputMode::Aligned,
            echo: false,
            keep_going: false,
            errors: 0,
        })
    }

    /// Execute a command text: parse everything, then run command by
    /// command, printing query results. Returns false when an error stopped
    /// the run.
    pub fn execute_text(&mut self, text: &str, out: &mut dyn Write) -> bool {
        let cmds = match parser::parse_commands(text) {
            Ok(cmds) => cmds,
            Err(e) => {
                self.errors += 1;
                let _ = writeln!(out, "error: {e}");
                return false;
            }
        };
        for (i, cmd) in cmds.iter().enumerate() {
            if self.echo {
                let _ = writeln!(out, ">> {cmd}");
            }
            match self.engine.execute_command(cmd) {
                Ok(rels) => {
                    for rel in rels {
                        let _ = write!(out, "{}", format_relation(&rel, self.mode));
                        let _ = writeln!(out);
                    }
                }
                Err(e) => {
                    self.errors += 1;
                    let _ = writeln!(out, "error at command {}: {e}", i + 1);
                    if !self.keep_going {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn run_script(&mut self, path: &Path, out: &mut dyn Write) -> bool {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                self.errors += 1;
                let _ = writeln!(out, "error: cannot read {}: {e}", path.display());
                return false;
            }
        };
        self.execute_text(&text, out)
    }

    /// One meta command (`\…`). Returns false to quit the session.
    pub fn meta(&mut self, line: &str, out: &mut dyn Write) -> bool {
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap_or("");
        let arg = parts.next();
        match head {
            "\\quit" | "\\q" => return false,
            "\\save" => {
                let target = arg.map(PathBuf::from).or_else(|| self.db_path.clone());
                match target {
                    None => {
                        self.errors += 1;
                        let _ = writeln!(
                            out,
                            "error: in-memory session; \\save needs an explicit path"
                        );
                    }
                    Some(dir) => match self.engine.save(&dir) {
                        Ok(()) => {
                            let _ = writeln!(out, "saved to {}", dir.display());
                        }
                        Err(e) => {
                            self.errors += 1;
                            let _ = writeln!(out, "error: {e}");
                        }
                    },
                }
            }
            "\\load" => match arg {
                None => {
                    self.errors += 1;
                    let _ = writeln!(out, "error: \\load needs a path");
                }
                Some(dir) => match Engine::load(Path::new(dir)) {
                    Ok(engine) => {
                        self.engine = engine;
                        let _ = writeln!(out, "loaded {dir}");
                    }
                    Err(e) => {
                        self.errors += 1;
                        let _ = writeln!(out, "error: {e}");
                    }
                },
            },
            "\\classes" => {
                for c in self.engine.catalog().classes() {
                    let _ = writeln!(out, "{}", c.name);
                }
            }
            "\\relvars" => {
                for d in self.engine.db().relvars() {
                    let kind = if d.is_virtual() { "virtual" } else { "real" };
                    let _ = writeln!(out, "{}  ({kind})", d.name);
                }
            }
            "\\schema" => match arg {
                None => {
                    self.errors += 1;
                    let _ = writeln!(out, "error: \\schema needs a relvar name");
                }
                Some(name) => match self.engine.db().relvar(name) {
                    None => {
                        self.errors += 1;
                        let _ = writeln!(out, "error: unknown relvar `{name}`");
                    }
                    Some(d) => {
                        for a in d.schema.attrs() {
                            let _ = writeln!(out, "{}: {}", a.name, a.domain);
                        }
                        for key in &d.keys {
                            let names: Vec<String> = key.iter().map(|a| a.to_string()).collect();
                            let _ = writeln!(out, "KEY({})", names.join(", "));
                        }
                        for fk in &d.fkeys {
                            let names: Vec<String> =
                                fk.attrs.iter().map(|a| a.to_string()).collect();
                            let _ = writeln!(out, "FKEY({}) ON {}", names.join(", "), fk.target);
                        }
                    }
                },
            },
            "\\echo" => match arg {
                Some("on") => self.echo = true,
                Some("off") => self.echo = false,
                _ => {
                    self.errors += 1;
                    let _ = writeln!(out, "error: \\echo on|off");
                }
            },
            other => {
                self.errors += 1;
                let _ = writeln!(out, "error: unknown meta command `{other}`");
            }
        }
        true
    }

    /// Prompt / read / execute / print until EOF or `\quit`. Commands may
    /// span lines; a buffer is executed once it parses completely.
    pub fn repl(&mut self, input: &mut dyn BufRead, out: &mut dyn Write) {
        let mut buffer = String::new();
        loop {
            let prompt = if buffer.is_empty() { "rxo> " } else { "...> " };
            let _ = write!(out, "{prompt}");
            let _ = out.flush();
            let mut line = String::new();
            match input.read_line(&mut line) {
                Ok(0) => break,
                Ok(_) => {}
                Err(e) => {
                    let _ = writeln!(out, "error: {e}");
                    break;
                }
            }
            let trimmed = line.trim();
            if buffer.is_empty() && trimmed.starts_with('\\') {
                if !self.meta(trimmed, out) {
                    break;
                }
                continue;
            }
            buffer.push_str(&line);
            if buffer.trim().is_empty() {
                buffer.clear();
                continue;
            }
            // a buffer is complete once its last token is a `;`
            match rxo_core::lex::lex(&buffer) {
                Err(e) => {
                    self.errors += 1;
                    let _ = writeln!(out, "error: {e}");
                    buffer.clear();
                }
                Ok(toks) => {
                    if toks.last().map(|t| t.is_sym(";")).unwrap_or(false) {
                        let text = std::mem::take(&mut buffer);
                        self.execute_text(&text, out);
                    }
                }
            }
        }
    }
}
