//! Human-readable dataset format:
//!
//! ```text
//! Training paths:
//! Base path:
//! stimuli: 0:8 0:9 0:6
//! responses: 3 10 6
//! Modular paths:
//! stimuli: 1:12 1:12
//! responses: 2 11
//! Test paths:
//! Insertion:
//! stimuli: ...
//! responses: ...
//! Substitution:
//! Deletion:
//! ```
//!
//! Blank lines are ignored and a line made only of tokens continues the
//! previous `stimuli:` or `responses:` line. The format carries no module ids
//! or positions for test paths, so [`parse`] recovers them from the paths
//! themselves (leftmost position for ambiguous deletions).

use std::fmt::Write as _;

use super::dataset::{Dataset, DisruptionKind, GenConfig, TestCase, TestCounts, DEFAULT_ALPHABET};
use super::path::{delete, insert, substitute, Path, Stimulus};
use super::ComposeError;

pub fn serialize(ds: &Dataset) -> String {
    let mut out = String::new();
    out.push_str("Training paths:\nBase path:\n");
    write_path(&mut out, ds.base());
    out.push_str("Modular paths:\n");
    for m in ds.modules() {
        write_path(&mut out, m);
    }
    out.push_str("Test paths:\n");
    for kind in DisruptionKind::ALL {
        let _ = writeln!(out, "{}:", header_name(kind));
        for t in ds.tests_of(kind) {
            write_path(&mut out, &t.path);
        }
    }
    out
}

fn header_name(kind: DisruptionKind) -> &'static str {
    match kind {
        DisruptionKind::Insertion => "Insertion",
        DisruptionKind::Substitution => "Substitution",
        DisruptionKind::Deletion => "Deletion",
    }
}

fn write_path(out: &mut String, p: &Path) {
    out.push_str("stimuli:");
    for s in &p.stimuli {
        let _ = write!(out, " {s}");
    }
    out.push_str("\nresponses:");
    for r in &p.responses {
        let _ = write!(out, " {r}");
    }
    out.push('\n');
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    Start,
    Training,
    Base,
    Modular,
    Test,
    Kind(DisruptionKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Stimuli,
    Responses,
}

#[derive(Default)]
struct Pending {
    stimuli: Vec<Stimulus>,
    responses: Vec<usize>,
    stimuli_line: usize,
    responses_line: Option<usize>,
}

struct Parser {
    section: Section,
    field: Option<Field>,
    pending: Option<Pending>,
    base: Vec<Path>,
    modules: Vec<Path>,
    tests: Vec<(DisruptionKind, Path, usize)>,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> ComposeError {
    ComposeError::Parse {
        line,
        column,
        message: message.into(),
    }
}

impl Parser {
    fn finish_pending(&mut self) -> Result<(), ComposeError> {
        let Some(p) = self.pending.take() else {
            return Ok(());
        };
        self.field = None;
        let Some(resp_line) = p.responses_line else {
            return Err(err(p.stimuli_line, 1, "stimuli line has no matching responses line"));
        };
        if p.stimuli.len() != p.responses.len() {
            return Err(err(
                resp_line,
                1,
                format!(
                    "{} responses for {} stimuli",
                    p.responses.len(),
                    p.stimuli.len()
                ),
            ));
        }
        // Disrupted test paths keep the base path's id.
        let id = match self.section {
            Section::Kind(_) => 0,
            _ => p.stimuli.first().map(|s| s.path_id).unwrap_or(0),
        };
        let path = Path::new(id, p.stimuli, p.responses).map_err(|e| err(p.stimuli_line, 1, e.to_string()))?;
        match self.section {
            Section::Base => self.base.push(path),
            Section::Modular => self.modules.push(path),
            Section::Kind(k) => self.tests.push((k, path, p.stimuli_line)),
            _ => return Err(err(p.stimuli_line, 1, "path outside a path section")),
        }
        Ok(())
    }

    fn tokens(&mut self, line_no: usize, line: &str, offset: usize) -> Result<(), ComposeError> {
        let field = self.field.ok_or_else(|| err(line_no, 1, "tokens outside a stimuli/responses line"))?;
        let pending = self.pending.as_mut().expect("field implies pending path");
        for (col, tok) in token_columns(line) {
            let col = col + offset;
            match field {
                Field::Stimuli => {
                    let (p, v) = tok
                        .split_once(':')
                        .ok_or_else(|| err(line_no, col, format!("expected `path:value`, found `{tok}`")))?;
                    let p = p
                        .parse()
                        .map_err(|_| err(line_no, col, format!("bad path id in `{tok}`")))?;
                    let v = v
                        .parse()
                        .map_err(|_| err(line_no, col + p_len(tok) + 1, format!("bad value in `{tok}`")))?;
                    pending.stimuli.push(Stimulus::new(p, v));
                }
                Field::Responses => {
                    let r = tok
                        .parse()
                        .map_err(|_| err(line_no, col, format!("expected a response number, found `{tok}`")))?;
                    pending.responses.push(r);
                }
            }
        }
        Ok(())
    }
}

fn p_len(tok: &str) -> usize {
    tok.find(':').unwrap_or(0)
}

/// Whitespace-separated tokens with their 1-based columns.
fn token_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut consumed = 0;
    std::iter::from_fn(move || {
        let skip = rest.len() - rest.trim_start().len();
        consumed += skip;
        rest = &rest[skip..];
        if rest.is_empty() {
            return None;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let tok = &rest[..end];
        let col = consumed + 1;
        consumed += end;
        rest = &rest[end..];
        Some((col, tok))
    })
}

pub fn parse(text: &str) -> Result<Dataset, ComposeError> {
    let mut ps = Parser {
        section: Section::Start,
        field: None,
        pending: None,
        base: Vec::new(),
        modules: Vec::new(),
        tests: Vec::new(),
    };
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim_end();
        let indent = line.len() - line.trim_start().len();
        let body = line.trim_start();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix("stimuli:") {
            if !matches!(ps.section, Section::Base | Section::Modular | Section::Kind(_)) {
                return Err(err(line_no, indent + 1, "stimuli outside a path section"));
            }
            ps.finish_pending()?;
            ps.pending = Some(Pending {
                stimuli_line: line_no,
                ..Pending::default()
            });
            ps.field = Some(Field::Stimuli);
            ps.tokens(line_no, rest, indent + "stimuli:".len())?;
        } else if let Some(rest) = body.strip_prefix("responses:") {
            match ps.pending.as_mut() {
                Some(p) if p.responses_line.is_none() => p.responses_line = Some(line_no),
                _ => return Err(err(line_no, indent + 1, "responses line without a preceding stimuli line")),
            }
            ps.field = Some(Field::Responses);
            ps.tokens(line_no, rest, indent + "responses:".len())?;
        } else if let Some(name) = body.strip_suffix(':') {
            let next = match name {
                "Training paths" => Section::Training,
                "Base path" => Section::Base,
                "Modular paths" => Section::Modular,
                "Test paths" => Section::Test,
                "Insertion" => Section::Kind(DisruptionKind::Insertion),
                "Substitution" => Section::Kind(DisruptionKind::Substitution),
                "Deletion" => Section::Kind(DisruptionKind::Deletion),
                other => return Err(err(line_no, indent + 1, format!("unknown section header `{other}:`"))),
            };
            ps.finish_pending()?;
            ps.section = next;
        } else if body.starts_with(|c: char| c.is_ascii_digit()) {
            ps.tokens(line_no, line, 0)?;
        } else {
            return Err(err(line_no, indent + 1, format!("unrecognized line `{body}`")));
        }
    }
    ps.finish_pending()?;
    assemble(ps, last_line)
}

fn assemble(ps: Parser, last_line: usize) -> Result<Dataset, ComposeError> {
    let mut base_paths = ps.base;
    if base_paths.len() != 1 {
        return Err(err(last_line.max(1), 1, format!("expected one base path, found {}", base_paths.len())));
    }
    let base = base_paths.remove(0);
    if ps.modules.is_empty() {
        return Err(err(last_line.max(1), 1, "no modular paths"));
    }
    let mut train = vec![base];
    train.extend(ps.modules);

    let max_value = train
        .iter()
        .chain(ps.tests.iter().map(|(_, p, _)| p))
        .flat_map(|p| p.stimuli.iter().map(|s| s.value).chain(p.responses.iter().copied()))
        .max()
        .unwrap_or(0);
    let lens: Vec<usize> = train[1..].iter().map(Path::len).collect();
    let count = |k| ps.tests.iter().filter(|(kind, _, _)| *kind == k).count();
    let config = GenConfig {
        seed: 0,
        base_length: train[0].len(),
        num_modules: train.len() - 1,
        module_length_min: *lens.iter().min().unwrap(),
        module_length_max: *lens.iter().max().unwrap(),
        alphabet: DEFAULT_ALPHABET.max(max_value + 1),
        tests_per_type: TestCounts {
            insertion: count(DisruptionKind::Insertion),
            substitution: count(DisruptionKind::Substitution),
            deletion: count(DisruptionKind::Deletion),
        },
    };

    let mut test = Vec::with_capacity(ps.tests.len());
    for (kind, path, line) in ps.tests {
        test.push(recover_case(&train, kind, path).map_err(|m| err(line, 1, m))?);
    }
    let ds = Dataset { config, train, test };
    ds.validate()
        .map_err(|e| err(1, 1, e.to_string()))?;
    Ok(ds)
}

/// Infers the module and position that turn the base path into `path`.
fn recover_case(train: &[Path], kind: DisruptionKind, path: Path) -> Result<TestCase, String> {
    let base = &train[0];
    match kind {
        DisruptionKind::Insertion | DisruptionKind::Substitution => {
            let pos = path
                .stimuli
                .iter()
                .position(|s| s.path_id != 0)
                .ok_or_else(|| format!("{kind} path contains no module steps"))?;
            let id = path.stimuli[pos].path_id;
            let module = train.get(id).ok_or_else(|| format!("unknown module {id}"))?;
            let rebuilt = if kind == DisruptionKind::Insertion {
                insert(base, module, pos)
            } else {
                substitute(base, module, pos)
            }
            .map_err(|e| e.to_string())?;
            if rebuilt != path {
                return Err(format!("{kind} path is not module {id} applied at position {pos}"));
            }
            Ok(TestCase {
                kind,
                module_id: Some(id),
                position: pos,
                path,
            })
        }
        DisruptionKind::Deletion => {
            let len = base
                .len()
                .checked_sub(path.len())
                .filter(|&l| l > 0)
                .ok_or("deletion path is not shorter than the base path")?;
            let pos = (0..=base.len() - len)
                .find(|&p| delete(base, len, p).is_ok_and(|d| d == path))
                .ok_or("deletion path is not a contiguous deletion of the base path")?;
            Ok(TestCase {
                kind,
                module_id: None,
                position: pos,
                path,
            })
        }
    }
}
