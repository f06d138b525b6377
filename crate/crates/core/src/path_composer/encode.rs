use serde::{Deserialize, Serialize};

use super::path::{Path, Stimulus};
use super::ComposeError;
use crate::numerics::Tensor;

/// One-hot layout of stimuli and responses for a given module count and alphabet.
///
/// A stimulus row is `one_hot(path_id, num_modules + 1) ++ one_hot(value, alphabet)`;
/// a target row is `one_hot(response, alphabet)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusLayout {
    pub num_modules: usize,
    pub alphabet: usize,
}

impl StimulusLayout {
    pub fn new(num_modules: usize, alphabet: usize) -> Self {
        Self { num_modules, alphabet }
    }

    pub fn stimulus_width(&self) -> usize {
        self.num_modules + 1 + self.alphabet
    }

    pub fn response_width(&self) -> usize {
        self.alphabet
    }

    /// Writes the one-hot stimulus into `row`, which must be zeroed and `stimulus_width` long.
    pub fn write_stimulus(&self, s: Stimulus, row: &mut [f64]) -> Result<(), ComposeError> {
        if s.path_id > self.num_modules || s.value >= self.alphabet {
            return Err(ComposeError::Encode(format!(
                "stimulus {s} outside {} modules / alphabet {}",
                self.num_modules, self.alphabet
            )));
        }
        row[s.path_id] = 1.0;
        row[self.num_modules + 1 + s.value] = 1.0;
        Ok(())
    }

    pub fn write_response(&self, response: usize, row: &mut [f64]) -> Result<(), ComposeError> {
        if response >= self.alphabet {
            return Err(ComposeError::Encode(format!(
                "response {response} outside alphabet {}",
                self.alphabet
            )));
        }
        row[response] = 1.0;
        Ok(())
    }
}

/// Per-step `(input row, target row)` pairs for one path.
pub fn encode_one_hot(
    path: &Path,
    num_modules: usize,
    alphabet: usize,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>, ComposeError> {
    let layout = StimulusLayout::new(num_modules, alphabet);
    path.steps()
        .map(|(s, r)| {
            let mut input = vec![0.0; layout.stimulus_width()];
            let mut target = vec![0.0; layout.response_width()];
            layout.write_stimulus(s, &mut input)?;
            layout.write_response(r, &mut target)?;
            Ok((input, target))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchLayout {
    /// `[paths × max_len × width]`, zero-padded past each path's end.
    Sequence,
    /// `[Σ lengths × window·width]`, one sliding-window row per step.
    Window { window: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedBatch {
    pub inputs: Tensor,
    pub targets: Tensor,
    /// One flag per row of the `[rows × width]` view of `targets`.
    pub mask: Vec<bool>,
    pub layout: BatchLayout,
    /// True length of each path, in batch order.
    pub lengths: Vec<usize>,
}

impl EncodedBatch {
    pub fn num_paths(&self) -> usize {
        self.lengths.len()
    }

    pub fn max_len(&self) -> usize {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    /// Row of `targets` holding step `t` of path `p`.
    pub fn row_index(&self, p: usize, t: usize) -> usize {
        match self.layout {
            BatchLayout::Sequence => p * self.max_len() + t,
            BatchLayout::Window { .. } => self.lengths[..p].iter().sum::<usize>() + t,
        }
    }

    /// Target response (argmax of the one-hot target) for every valid row, path by path.
    pub fn target_responses(&self) -> Vec<Vec<usize>> {
        (0..self.num_paths())
            .map(|p| {
                (0..self.lengths[p])
                    .map(|t| argmax(self.targets.row(self.row_index(p, t))))
                    .collect()
            })
            .collect()
    }
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn to_sequence_batch(paths: &[Path], layout: StimulusLayout) -> Result<EncodedBatch, ComposeError> {
    if paths.is_empty() {
        return Err(ComposeError::Encode("batch needs at least one path".into()));
    }
    let s = layout.stimulus_width();
    let v = layout.response_width();
    let max_len = paths.iter().map(Path::len).max().unwrap_or(0);
    let mut inputs = Tensor::zeros(&[paths.len(), max_len, s]);
    let mut targets = Tensor::zeros(&[paths.len(), max_len, v]);
    let mut mask = vec![false; paths.len() * max_len];
    for (p, path) in paths.iter().enumerate() {
        for (t, (stim, resp)) in path.steps().enumerate() {
            let r = p * max_len + t;
            layout.write_stimulus(stim, inputs.row_mut(r))?;
            layout.write_response(resp, targets.row_mut(r))?;
            mask[r] = true;
        }
    }
    Ok(EncodedBatch {
        inputs,
        targets,
        mask,
        layout: BatchLayout::Sequence,
        lengths: paths.iter().map(Path::len).collect(),
    })
}

/// Sliding-window rows: slot `window−1` holds the current stimulus, slot
/// `window−2` the previous one, and so on; slots before the path start stay zero.
pub fn to_window_batch(paths: &[Path], layout: StimulusLayout, window: usize) -> Result<EncodedBatch, ComposeError> {
    if paths.is_empty() {
        return Err(ComposeError::Encode("batch needs at least one path".into()));
    }
    let longest = paths.iter().map(Path::len).max().unwrap_or(0);
    if window < longest {
        return Err(ComposeError::Encode(format!(
            "window {window} is shorter than the longest path ({longest})"
        )));
    }
    let s = layout.stimulus_width();
    let v = layout.response_width();
    let rows: usize = paths.iter().map(Path::len).sum();
    let mut inputs = Tensor::zeros(&[rows, window * s]);
    let mut targets = Tensor::zeros(&[rows, v]);
    let mut r = 0;
    for path in paths {
        for t in 0..path.len() {
            let row = inputs.row_mut(r);
            // Step t−k lands in slot window−1−k.
            for k in 0..=t {
                let slot = window - 1 - k;
                layout.write_stimulus(path.stimuli[t - k], &mut row[slot * s..(slot + 1) * s])?;
            }
            layout.write_response(path.responses[t], targets.row_mut(r))?;
            r += 1;
        }
    }
    Ok(EncodedBatch {
        inputs,
        targets,
        mask: vec![true; rows],
        layout: BatchLayout::Window { window },
        lengths: paths.iter().map(Path::len).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(id: usize, values: &[usize]) -> Path {
        Path::pure(id, values, &vec![1; values.len()]).unwrap()
    }

    #[test]
    fn sample_dataset_tokens() {
        let layout = StimulusLayout::new(5, 15);
        let mut row = vec![0.0; 21];
        layout.write_stimulus(Stimulus::new(0, 8), &mut row).unwrap();
        let ones: Vec<usize> = (0..21).filter(|&i| row[i] == 1.0).collect();
        assert_eq!(ones, vec![0, 14]);

        let mut row = vec![0.0; 21];
        layout.write_stimulus(Stimulus::new(5, 7), &mut row).unwrap();
        let ones: Vec<usize> = (0..21).filter(|&i| row[i] == 1.0).collect();
        assert_eq!(ones, vec![5, 13]);

        let enc = encode_one_hot(&path(0, &[1]), 5, 15).unwrap();
        assert_eq!(enc[0].1.iter().position(|&x| x == 1.0), Some(1));
        assert_eq!(enc[0].1.len(), 15);
    }

    #[test]
    fn out_of_range_tokens_are_rejected() {
        assert!(encode_one_hot(&path(6, &[1]), 5, 15).is_err());
        assert!(encode_one_hot(&path(0, &[15]), 5, 15).is_err());
        let p = Path::pure(0, &[1], &[15]).unwrap();
        assert!(encode_one_hot(&p, 5, 15).is_err());
    }

    #[test]
    fn sequence_batch_pads_and_masks() {
        let layout = StimulusLayout::new(2, 4);
        let b = to_sequence_batch(&[path(0, &[0, 1, 2]), path(1, &[3, 3, 3, 0, 1])], layout).unwrap();
        assert_eq!(b.inputs.shape(), &[2, 5, 7]);
        assert_eq!(b.targets.shape(), &[2, 5, 4]);
        assert_eq!(b.mask.iter().filter(|m| !**m).count(), 2);
        assert_eq!(&b.mask[..5], &[true, true, true, false, false]);
        assert!(b.inputs.row(3).iter().all(|&x| x == 0.0));

        let single = to_sequence_batch(&[path(0, &[0, 1, 2])], layout).unwrap();
        assert_eq!(single.inputs.shape(), &[1, 3, 7]);
        assert!(single.mask.iter().all(|&m| m));
    }

    #[test]
    fn window_rows_put_current_step_last() {
        let layout = StimulusLayout::new(1, 3);
        let s = layout.stimulus_width();
        let p = path(0, &[0, 1, 2]);
        let b = to_window_batch(&[p], layout, 4).unwrap();
        assert_eq!(b.inputs.shape(), &[3, 4 * s]);
        // step 0: only the last slot is set
        let r0 = b.inputs.row(0);
        assert!(r0[..3 * s].iter().all(|&x| x == 0.0));
        assert_eq!(r0[3 * s..].iter().sum::<f64>(), 2.0);
        // step 2: slots 1,2,3 hold values 0,1,2
        let r2 = b.inputs.row(2);
        assert_eq!(r2[s + 2], 1.0);
        assert_eq!(r2[2 * s + 3], 1.0);
        assert_eq!(r2[3 * s + 4], 1.0);
        assert!(r2[..s].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn window_too_small_is_rejected() {
        let layout = StimulusLayout::new(1, 3);
        assert!(to_window_batch(&[path(0, &[0, 1, 2])], layout, 2).is_err());
    }

    #[test]
    fn row_index_maps_steps() {
        let layout = StimulusLayout::new(2, 4);
        let paths = [path(0, &[0, 1]), path(1, &[2, 3, 0])];
        let seq = to_sequence_batch(&paths, layout).unwrap();
        assert_eq!(seq.row_index(1, 2), 5);
        let win = to_window_batch(&paths, layout, 3).unwrap();
        assert_eq!(win.row_index(1, 2), 4);
        assert_eq!(win.target_responses(), vec![vec![1, 1], vec![1, 1, 1]]);
    }
}
