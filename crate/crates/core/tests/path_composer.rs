mod common;

use common::{check_dataset_properties, random_gen_config};
use proptest::prelude::*;
use taskcomp_core::numerics::SeededRng;
use taskcomp_core::path_composer::{
    delete, insert, parse, serialize, substitute, to_sequence_batch, DisruptionKind, Path, StimulusLayout,
};

const SAMPLE: &str = include_str!("fixtures/sample_dataset.txt");

/// (kind, module, position, deleted length) that rebuild each sample test path.
const SAMPLE_CHOICES: [(DisruptionKind, usize, usize, usize); 6] = [
    (DisruptionKind::Insertion, 2, 15, 0),
    (DisruptionKind::Insertion, 5, 4, 0),
    (DisruptionKind::Substitution, 2, 11, 0),
    (DisruptionKind::Substitution, 5, 12, 0),
    (DisruptionKind::Deletion, 0, 0, 3),
    (DisruptionKind::Deletion, 0, 3, 4),
];

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[test]
fn sample_dataset_parses_and_rebuilds_every_test_path() {
    let ds = parse(SAMPLE).unwrap();
    assert_eq!(ds.base().len(), 15);
    assert_eq!(ds.modules().iter().map(Path::len).collect::<Vec<_>>(), vec![2, 3, 4, 3, 3]);
    assert_eq!(ds.test.len(), 6);
    for (case, &(kind, module, pos, len)) in ds.test.iter().zip(&SAMPLE_CHOICES) {
        assert_eq!(case.kind, kind);
        let rebuilt = match kind {
            DisruptionKind::Insertion => insert(ds.base(), ds.module(module).unwrap(), pos),
            DisruptionKind::Substitution => substitute(ds.base(), ds.module(module).unwrap(), pos),
            DisruptionKind::Deletion => delete(ds.base(), len, pos),
        }
        .unwrap();
        assert_eq!(rebuilt, case.path, "{kind} at {pos}");
        assert_eq!(case.position, pos);
    }
    assert_eq!(normalize(&serialize(&ds)), normalize(SAMPLE));
}

#[test]
fn sample_dataset_encodes_to_expected_shapes() {
    let ds = parse(SAMPLE).unwrap();
    let layout = StimulusLayout::new(5, 15);
    let batch = to_sequence_batch(&ds.train, layout).unwrap();
    assert_eq!(batch.inputs.shape(), &[6, 15, 21]);
    // First token 0:8 sets the path-id bit 0 and value bit 6 + 8.
    let row = batch.inputs.row(0);
    let ones: Vec<usize> = (0..21).filter(|&i| row[i] == 1.0).collect();
    assert_eq!(ones, vec![0, 14]);
}

#[test]
fn generated_datasets_survive_text_round_trip() {
    let mut rng = SeededRng::new(77);
    for _ in 0..200 {
        let cfg = random_gen_config(&mut rng);
        check_dataset_properties(&cfg).unwrap_or_else(|e| panic!("{cfg:?}: {e}"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dataset_properties_hold(seed in any::<u64>()) {
        let cfg = random_gen_config(&mut SeededRng::new(seed));
        prop_assert_eq!(check_dataset_properties(&cfg), Ok(()), "{:?}", cfg);
    }

    #[test]
    fn operators_obey_length_algebra(
        base_len in 2usize..20,
        module_len in 1usize..6,
        pos_frac in 0.0f64..=1.0,
    ) {
        let base = Path::pure(0, &vec![1; base_len], &(0..base_len).collect::<Vec<_>>()).unwrap();
        let module = Path::pure(1, &vec![2; module_len], &vec![0; module_len]).unwrap();
        let at = |max: usize| (pos_frac * max as f64).floor() as usize;
        prop_assert_eq!(insert(&base, &module, at(base_len)).unwrap().len(), base_len + module_len);
        if module_len <= base_len {
            let s = substitute(&base, &module, at(base_len - module_len)).unwrap();
            prop_assert_eq!(s.len(), base_len);
        }
        if module_len < base_len {
            let d = delete(&base, module_len, at(base_len - module_len)).unwrap();
            prop_assert_eq!(d.len(), base_len - module_len);
        }
    }
}
