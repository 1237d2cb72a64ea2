//! On-disk case bundles: one directory per case holding every second's
//! input tensors in a single tensor file plus the truth bits as text. The
//! bridge between the preprocessing and training commands.

use std::path::Path;

use coact_nn::checkpoint::{read_tensor_file, write_tensor_file};
use coact_nn::{Scalar, Tensor};

use crate::error::{data_err, CoactError};
use crate::model::Modality;
use crate::preprocess::formats::{read_labels, write_labels};
use crate::training::CaseSequence;

const TENSOR_FILE: &str = "seconds.ckpt";
const LABEL_FILE: &str = "labels.txt";

fn modality_by_name(name: &str) -> Option<Modality> {
    match name {
        "depth" => Some(Modality::Depth),
        "audio" => Some(Modality::Audio),
        "rss" => Some(Modality::Rss),
        "rgb" => Some(Modality::Rgb),
        "tiles" => Some(Modality::Tiles),
        _ => None,
    }
}

/// Write `dir/<id>/seconds.ckpt` + `labels.txt`. The directory name is the
/// case id.
pub fn save_case<T: Scalar>(root: &Path, case: &CaseSequence<T>) -> Result<(), CoactError> {
    if case.inputs.len() != case.truth.len() {
        return Err(data_err(format!(
            "case {}: {} input seconds vs {} truth rows",
            case.case_id,
            case.inputs.len(),
            case.truth.len()
        )));
    }
    let dir = root.join(&case.case_id);
    std::fs::create_dir_all(&dir)?;
    let mut entries: Vec<(String, &Tensor<T>)> = Vec::new();
    for (second, inputs) in case.inputs.iter().enumerate() {
        for modality in [
            Modality::Depth,
            Modality::Audio,
            Modality::Rss,
            Modality::Rgb,
            Modality::Tiles,
        ] {
            if let Some(tensor) = inputs.get(modality) {
                entries.push((format!("{second:05}.{}", modality.name()), tensor));
            }
        }
    }
    write_tensor_file(&dir.join(TENSOR_FILE), &entries)?;
    write_labels(&dir.join(LABEL_FILE), &case.truth)?;
    Ok(())
}

pub fn load_case<T: Scalar>(
    dir: &Path,
    activity_count: usize,
) -> Result<CaseSequence<T>, CoactError> {
    let case_id = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| data_err(format!("{}: not a case directory", dir.display())))?
        .to_string();
    let truth = read_labels(&dir.join(LABEL_FILE), activity_count)?;
    let mut case = CaseSequence {
        case_id,
        inputs: vec![Default::default(); truth.len()],
        truth,
    };
    for (name, tensor) in read_tensor_file::<T>(&dir.join(TENSOR_FILE))? {
        let (second, modality) = name
            .split_once('.')
            .and_then(|(s, m)| Some((s.parse::<usize>().ok()?, modality_by_name(m)?)))
            .ok_or_else(|| {
                data_err(format!("{}: unrecognized tensor name {name:?}", dir.display()))
            })?;
        if second >= case.inputs.len() {
            return Err(data_err(format!(
                "{}: tensor {name:?} beyond the {}-second label file",
                dir.display(),
                case.inputs.len()
            )));
        }
        case.inputs[second].set(modality, tensor);
    }
    Ok(case)
}

pub fn save_cases<T: Scalar>(
    root: &Path,
    cases: &[CaseSequence<T>],
) -> Result<(), CoactError> {
    for case in cases {
        save_case(root, case)?;
    }
    Ok(())
}

/// Load every case directory under `root`, ordered by case id so downstream
/// splits are reproducible.
pub fn load_cases<T: Scalar>(
    root: &Path,
    activity_count: usize,
) -> Result<Vec<CaseSequence<T>>, CoactError> {
    let mut dirs: Vec<std::path::PathBuf> = std::fs::read_dir(root)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(data_err(format!("{}: no case directories", root.display())));
    }
    dirs.iter()
        .map(|dir| load_case(dir, activity_count))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::synth::{synth_case, tiny_spec};

    fn sample_cases() -> Vec<CaseSequence<f64>> {
        let spec = tiny_spec(3, 6);
        let config = presets::tiny_multimodal(3);
        vec![
            synth_case("caseB", &spec, &config, 1).unwrap(),
            synth_case("caseA", &spec, &config, 2).unwrap(),
        ]
    }

    #[test]
    fn cases_round_trip_losslessly() {
        let cases = sample_cases();
        let dir = tempfile::tempdir().unwrap();
        save_cases(dir.path(), &cases).unwrap();
        let loaded: Vec<CaseSequence<f64>> = load_cases(dir.path(), 3).unwrap();
        // Sorted by id: caseA first even though it was saved second.
        assert_eq!(loaded[0].case_id, "caseA");
        assert_eq!(loaded[1].case_id, "caseB");
        let original = &cases[0];
        let reread = &loaded[1];
        assert_eq!(original.truth, reread.truth);
        for (a, b) in original.inputs.iter().zip(&reread.inputs) {
            for m in [Modality::Depth, Modality::Audio, Modality::Rss] {
                assert_eq!(a.get(m).unwrap().data(), b.get(m).unwrap().data());
                assert_eq!(a.get(m).unwrap().shape(), b.get(m).unwrap().shape());
            }
            assert!(a.get(Modality::Rgb).is_none() && b.get(Modality::Rgb).is_none());
        }
    }

    #[test]
    fn loaded_cases_train_like_the_originals() {
        let cases = sample_cases();
        let dir = tempfile::tempdir().unwrap();
        save_cases(dir.path(), &cases).unwrap();
        let loaded: Vec<CaseSequence<f64>> = load_cases(dir.path(), 3).unwrap();
        for case in &loaded {
            case.validate(3).unwrap();
        }
    }

    #[test]
    fn missing_label_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let case_dir = dir.path().join("caseX");
        std::fs::create_dir_all(&case_dir).unwrap();
        assert!(load_case::<f64>(&case_dir, 3).is_err());
    }

    #[test]
    fn stray_tensor_names_are_rejected() {
        let cases = sample_cases();
        let dir = tempfile::tempdir().unwrap();
        save_case(dir.path(), &cases[0]).unwrap();
        let case_dir = dir.path().join("caseB");
        // Rewrite the tensor file with a second index past the label rows.
        let entries_owned = read_tensor_file::<f64>(&case_dir.join(TENSOR_FILE)).unwrap();
        let mut entries: Vec<(String, &Tensor<f64>)> = entries_owned
            .iter()
            .map(|(n, t)| (n.clone(), t))
            .collect();
        entries[0].0 = "99999.depth".into();
        write_tensor_file(&case_dir.join(TENSOR_FILE), &entries).unwrap();
        assert!(load_case::<f64>(&case_dir, 3).is_err());
    }
}
