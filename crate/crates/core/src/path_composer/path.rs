use std::fmt;

use serde::{Deserialize, Serialize};

use super::ComposeError;

/// One stimulus token, written `path_id:value` in the text format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Stimulus {
    pub path_id: usize,
    pub value: usize,
}

impl Stimulus {
    pub fn new(path_id: usize, value: usize) -> Self {
        Self { path_id, value }
    }
}

impl From<(usize, usize)> for Stimulus {
    fn from((path_id, value): (usize, usize)) -> Self {
        Self { path_id, value }
    }
}

impl From<Stimulus> for (usize, usize) {
    fn from(s: Stimulus) -> Self {
        (s.path_id, s.value)
    }
}

impl fmt::Display for Stimulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.path_id, self.value)
    }
}

/// A stimulus/response sequence. Stimuli and responses always have equal, nonzero length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub id: usize,
    pub stimuli: Vec<Stimulus>,
    pub responses: Vec<usize>,
}

impl Path {
    pub fn new(id: usize, stimuli: Vec<Stimulus>, responses: Vec<usize>) -> Result<Self, ComposeError> {
        if stimuli.len() != responses.len() {
            return Err(ComposeError::LengthMismatch {
                stimuli: stimuli.len(),
                responses: responses.len(),
            });
        }
        if stimuli.is_empty() {
            return Err(ComposeError::EmptyPath);
        }
        Ok(Self { id, stimuli, responses })
    }

    /// Builds a pure path whose every stimulus carries `id`.
    pub fn pure(id: usize, values: &[usize], responses: &[usize]) -> Result<Self, ComposeError> {
        let stimuli = values.iter().map(|&v| Stimulus::new(id, v)).collect();
        Self::new(id, stimuli, responses.to_vec())
    }

    pub fn len(&self) -> usize {
        self.stimuli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stimuli.is_empty()
    }

    /// `(stimulus, response)` pairs in order.
    pub fn steps(&self) -> impl Iterator<Item = (Stimulus, usize)> + '_ {
        self.stimuli.iter().copied().zip(self.responses.iter().copied())
    }
}

/// `base[..pos] ++ module ++ base[pos..]`.
pub fn insert(base: &Path, module: &Path, pos: usize) -> Result<Path, ComposeError> {
    if pos > base.len() {
        return Err(ComposeError::Position {
            pos,
            max: base.len(),
        });
    }
    if module.is_empty() {
        return Err(ComposeError::EmptyPath);
    }
    let mut stimuli = Vec::with_capacity(base.len() + module.len());
    stimuli.extend_from_slice(&base.stimuli[..pos]);
    stimuli.extend_from_slice(&module.stimuli);
    stimuli.extend_from_slice(&base.stimuli[pos..]);
    let mut responses = Vec::with_capacity(stimuli.len());
    responses.extend_from_slice(&base.responses[..pos]);
    responses.extend_from_slice(&module.responses);
    responses.extend_from_slice(&base.responses[pos..]);
    Path::new(base.id, stimuli, responses)
}

/// Overwrites `base[pos..pos+|module|]` with the module's steps.
pub fn substitute(base: &Path, module: &Path, pos: usize) -> Result<Path, ComposeError> {
    if module.is_empty() {
        return Err(ComposeError::EmptyPath);
    }
    if module.len() > base.len() {
        return Err(ComposeError::SegmentLength {
            length: module.len(),
            base: base.len(),
        });
    }
    let max = base.len() - module.len();
    if pos > max {
        return Err(ComposeError::Position { pos, max });
    }
    let mut out = base.clone();
    out.stimuli[pos..pos + module.len()].copy_from_slice(&module.stimuli);
    out.responses[pos..pos + module.len()].copy_from_slice(&module.responses);
    Ok(out)
}

/// Removes `base[pos..pos+length]`; at least one step must remain.
pub fn delete(base: &Path, length: usize, pos: usize) -> Result<Path, ComposeError> {
    if length == 0 || length >= base.len() {
        return Err(ComposeError::SegmentLength {
            length,
            base: base.len(),
        });
    }
    let max = base.len() - length;
    if pos > max {
        return Err(ComposeError::Position { pos, max });
    }
    let mut out = base.clone();
    out.stimuli.drain(pos..pos + length);
    out.responses.drain(pos..pos + length);
    Ok(out)
}
