#![allow(dead_code)]

use taskcomp_core::networks::{Architecture, Model, ModelSpec, NetworkKind};
use taskcomp_core::numerics::{finite_difference_grad, max_relative_error, NumericsError, SeededRng, Tensor};
use taskcomp_core::path_composer::{
    delete, generate_dataset, insert, parse, serialize, substitute, to_sequence_batch, to_window_batch, Dataset,
    DisruptionKind, EncodedBatch, GenConfig, Path, Stimulus, StimulusLayout, TestCounts,
};

/// A random tiny model spec for `kind`: at most 2 modules, alphabet ≤ 3, paths ≤ 5 steps.
pub fn micro_spec(kind: NetworkKind, rng: &mut SeededRng) -> ModelSpec {
    let layout = StimulusLayout::new(rng.uniform_int(1, 2), rng.uniform_int(2, 3));
    let max_len = rng.uniform_int(2, 5);
    let arch = match kind {
        NetworkKind::Tdnn => Architecture::Tdnn {
            window: max_len,
            hidden: vec![rng.uniform_int(2, 4), rng.uniform_int(2, 4)],
        },
        NetworkKind::Morphognosis => Architecture::Morphognosis {
            window: max_len,
            hidden: vec![rng.uniform_int(2, 4)],
            skew: rng.uniform(),
        },
        NetworkKind::Lstm => Architecture::Lstm {
            units: rng.uniform_int(2, 4),
        },
        NetworkKind::Tcn => Architecture::Tcn {
            kernel: rng.uniform_int(2, 3),
            dilations: vec![1, 2],
            filters: rng.uniform_int(2, 4),
        },
    };
    ModelSpec {
        layout,
        max_len,
        learning_rate: 1e-3,
        arch,
    }
}

/// Two or three random paths of mixed lengths that fit `spec`.
pub fn micro_paths(spec: &ModelSpec, rng: &mut SeededRng) -> Vec<Path> {
    let n = rng.uniform_int(2, 3);
    (0..n)
        .map(|i| {
            let len = if i == 0 { spec.max_len } else { rng.uniform_int(1, spec.max_len) };
            let stimuli = (0..len)
                .map(|_| {
                    Stimulus::new(
                        rng.uniform_int(0, spec.layout.num_modules),
                        rng.uniform_int(0, spec.layout.alphabet - 1),
                    )
                })
                .collect();
            let responses = (0..len).map(|_| rng.uniform_int(0, spec.layout.alphabet - 1)).collect();
            Path::new(i, stimuli, responses).unwrap()
        })
        .collect()
}

/// Replaces every parameter with a uniform draw so no pre-activation sits on a relu kink.
pub fn randomize(model: &mut Model, rng: &mut SeededRng, scale: f64) {
    for p in model.params_mut() {
        p.data_mut().iter_mut().for_each(|v| *v = rng.uniform_range(-scale, scale));
    }
}

/// Worst relative error between analytic and central-difference gradients over all parameters.
pub fn gradient_check(model: &Model, batch: &EncodedBatch, h: f64) -> (f64, String) {
    let (_, grads) = model.loss_and_grads(batch).unwrap();
    let names = model.param_names();
    let mut worst = (0.0, String::new());
    for (i, analytic) in grads.iter().enumerate() {
        let x = model.params()[i].clone();
        let numeric = finite_difference_grad(
            |p: &Tensor| {
                let mut m = model.clone();
                *m.params_mut()[i] = p.clone();
                m.loss_and_grads(batch)
                    .map(|(l, _)| l)
                    .map_err(|e| NumericsError::NonFinite(e.to_string()))
            },
            &x,
            h,
        )
        .unwrap();
        let err = max_relative_error(analytic, &numeric);
        if err > worst.0 {
            worst = (err, names[i].clone());
        }
    }
    worst
}

/// A random valid generator config; deletion tests always fit.
pub fn random_gen_config(rng: &mut SeededRng) -> GenConfig {
    let module_length_min = rng.uniform_int(1, 4);
    let module_length_max = module_length_min + rng.uniform_int(0, 3);
    GenConfig {
        seed: rng.next_u64(),
        base_length: module_length_max + rng.uniform_int(1, 20),
        num_modules: rng.uniform_int(1, 10),
        module_length_min,
        module_length_max,
        alphabet: rng.uniform_int(1, 20),
        tests_per_type: TestCounts {
            insertion: rng.uniform_int(0, 3),
            substitution: rng.uniform_int(0, 3),
            deletion: rng.uniform_int(0, 3),
        },
    }
}

fn check_rows(batch: &EncodedBatch, what: &str) -> Result<(), String> {
    let in_width = batch.inputs.len() / batch.mask.len();
    let out_width = batch.targets.len() / batch.mask.len();
    for (r, &valid) in batch.mask.iter().enumerate() {
        let input: f64 = batch.inputs.data()[r * in_width..(r + 1) * in_width].iter().sum();
        let target: f64 = batch.targets.data()[r * out_width..(r + 1) * out_width].iter().sum();
        let want = if valid { (2.0, 1.0) } else { (0.0, 0.0) };
        if (input, target) != want {
            return Err(format!("{what} row {r}: input sum {input}, target sum {target}"));
        }
    }
    Ok(())
}

/// Determinism, length algebra, splice preservation, provenance runs, one-hot
/// row sums and serialization round trips for the dataset of `cfg`.
pub fn check_dataset_properties(cfg: &GenConfig) -> Result<(), String> {
    let ds = generate_dataset(cfg).map_err(|e| e.to_string())?;
    let again = generate_dataset(cfg).map_err(|e| e.to_string())?;
    if ds != again || ds.to_json() != again.to_json() {
        return Err("generation is not deterministic".into());
    }
    let base = ds.base();
    if base.len() != cfg.base_length || ds.modules().len() != cfg.num_modules {
        return Err("training set shape".into());
    }
    for m in ds.modules() {
        if !(cfg.module_length_min..=cfg.module_length_max).contains(&m.len()) {
            return Err(format!("module {} has length {}", m.id, m.len()));
        }
    }
    for kind in DisruptionKind::ALL {
        if ds.tests_of(kind).count() != cfg.tests_per_type.get(kind) {
            return Err(format!("{kind} test count"));
        }
    }

    for (i, case) in ds.test.iter().enumerate() {
        let p = &case.path;
        let pos = case.position;
        let steps: Vec<(Stimulus, usize)> = p.steps().collect();
        let base_steps: Vec<(Stimulus, usize)> = base.steps().collect();
        let module_run: Vec<usize> = (0..p.len()).filter(|&t| steps[t].0.path_id != 0).collect();
        let (expected_len, kept_prefix, suffix_from, module_len) = match case.kind {
            DisruptionKind::Insertion => {
                let m = ds.module(case.module_id.ok_or("insertion without module")?).ok_or("unknown module")?;
                if insert(base, m, pos).as_ref() != Ok(p) {
                    return Err(format!("test {i}: insertion does not re-apply"));
                }
                (base.len() + m.len(), pos, pos, m.len())
            }
            DisruptionKind::Substitution => {
                let m = ds.module(case.module_id.ok_or("substitution without module")?).ok_or("unknown module")?;
                if substitute(base, m, pos).as_ref() != Ok(p) {
                    return Err(format!("test {i}: substitution does not re-apply"));
                }
                (base.len(), pos, pos + m.len(), m.len())
            }
            DisruptionKind::Deletion => {
                let len = case.deleted_length(base).ok_or("deletion length")?;
                if delete(base, len, pos).as_ref() != Ok(p) {
                    return Err(format!("test {i}: deletion does not re-apply"));
                }
                (base.len() - len, pos, pos + len, 0)
            }
        };
        if p.len() != expected_len {
            return Err(format!("test {i}: length {} != {expected_len}", p.len()));
        }
        if steps[..kept_prefix] != base_steps[..kept_prefix] {
            return Err(format!("test {i}: prefix changed"));
        }
        let tail = &steps[p.len() - (base.len() - suffix_from)..];
        if tail != &base_steps[suffix_from..] {
            return Err(format!("test {i}: suffix changed"));
        }
        let contiguous = match module_run.first() {
            None => module_len == 0,
            Some(&first) => {
                module_run.len() == module_len && module_run.last() == Some(&(first + module_len - 1))
            }
        };
        if !contiguous || (module_len > 0 && module_run.first() != Some(&pos)) {
            return Err(format!("test {i}: module steps are not one run at {pos}"));
        }
    }

    let layout = StimulusLayout::new(cfg.num_modules, cfg.alphabet);
    let mut all = ds.train.clone();
    all.extend(ds.test.iter().map(|c| c.path.clone()));
    let seq = to_sequence_batch(&all, layout).map_err(|e| e.to_string())?;
    check_rows(&seq, "sequence")?;
    let win = to_window_batch(&all, layout, cfg.max_path_len()).map_err(|e| e.to_string())?;
    let rows = win.mask.len();
    let steps: usize = all.iter().map(|p| p.len()).sum();
    if rows != steps || win.inputs.len() != rows * cfg.max_path_len() * layout.stimulus_width() {
        return Err("window batch shape".into());
    }
    // The newest slot of every window row is the current step.
    let w = layout.stimulus_width();
    let row_width = cfg.max_path_len() * w;
    for r in 0..rows {
        let newest: f64 = win.inputs.data()[(r + 1) * row_width - w..(r + 1) * row_width].iter().sum();
        let target: f64 = win.targets.data()[r * layout.response_width()..(r + 1) * layout.response_width()]
            .iter()
            .sum();
        if newest != 2.0 || target != 1.0 {
            return Err(format!("window row {r}: current slot sum {newest}, target sum {target}"));
        }
    }

    let from_json = Dataset::from_json(&ds.to_json()).map_err(|e| e.to_string())?;
    if from_json != ds {
        return Err("JSON round trip changed the dataset".into());
    }
    let text = serialize(&ds);
    let parsed = parse(&text).map_err(|e| format!("text round trip: {e}"))?;
    if serialize(&parsed) != text || parsed.train != ds.train {
        return Err("text round trip changed the dataset".into());
    }
    for (a, b) in parsed.test.iter().zip(&ds.test) {
        if a.path != b.path || a.kind != b.kind {
            return Err("text round trip changed a test path".into());
        }
        if a.kind != DisruptionKind::Deletion && (a.position, a.module_id) != (b.position, b.module_id) {
            return Err("text round trip lost a test path's module or position".into());
        }
    }
    Ok(())
}
