//! Structure catalogue of the 104-class TotalSegmentator v1 release and the
//! default abdominal target selection.

use indexmap::IndexMap;

const HEAD: &[&str] = &[
    "spleen",
    "kidney_right",
    "kidney_left",
    "gallbladder",
    "liver",
    "stomach",
    "aorta",
    "inferior_vena_cava",
    "portal_vein_and_splenic_vein",
    "pancreas",
    "adrenal_gland_right",
    "adrenal_gland_left",
    "lung_upper_lobe_left",
    "lung_lower_lobe_left",
    "lung_upper_lobe_right",
    "lung_middle_lobe_right",
    "lung_lower_lobe_right",
];

const VERTEBRAE: &[&str] = &[
    "L5", "L4", "L3", "L2", "L1", "T12", "T11", "T10", "T9", "T8", "T7", "T6", "T5", "T4", "T3",
    "T2", "T1", "C7", "C6", "C5", "C4", "C3", "C2", "C1",
];

const MIDDLE: &[&str] = &[
    "esophagus",
    "trachea",
    "heart_myocardium",
    "heart_atrium_left",
    "heart_ventricle_left",
    "heart_atrium_right",
    "heart_ventricle_right",
    "pulmonary_artery",
    "brain",
    "iliac_artery_left",
    "iliac_artery_right",
    "iliac_vena_left",
    "iliac_vena_right",
    "small_bowel",
    "duodenum",
    "colon",
];

const TAIL: &[&str] = &[
    "humerus_left",
    "humerus_right",
    "scapula_left",
    "scapula_right",
    "clavicula_left",
    "clavicula_right",
    "femur_left",
    "femur_right",
    "hip_left",
    "hip_right",
    "sacrum",
    "face",
    "gluteus_maximus_left",
    "gluteus_maximus_right",
    "gluteus_medius_left",
    "gluteus_medius_right",
    "gluteus_minimus_left",
    "gluteus_minimus_right",
    "autochthon_left",
    "autochthon_right",
    "iliopsoas_left",
    "iliopsoas_right",
    "urinary_bladder",
];

/// `(name, label id)` for every structure of the v1 label scheme, ids 1..=104.
pub fn totalsegmentator_v1() -> Vec<(String, u32)> {
    let mut names: Vec<String> = HEAD.iter().map(|s| s.to_string()).collect();
    names.extend(VERTEBRAE.iter().map(|v| format!("vertebrae_{v}")));
    names.extend(MIDDLE.iter().map(|s| s.to_string()));
    names.extend((1..=12).map(|i| format!("rib_left_{i}")));
    names.extend((1..=12).map(|i| format!("rib_right_{i}")));
    names.extend(TAIL.iter().map(|s| s.to_string()));
    names
        .into_iter()
        .enumerate()
        .map(|(i, n)| (n, i as u32 + 1))
        .collect()
}

/// Vertebrae merged into the single "vertebrae" target. The sacrum is a
/// target of its own and is not part of this set.
pub const ABDOMINAL_VERTEBRAE: &[&str] = &[
    "vertebrae_T10",
    "vertebrae_T11",
    "vertebrae_T12",
    "vertebrae_L1",
    "vertebrae_L2",
    "vertebrae_L3",
    "vertebrae_L4",
    "vertebrae_L5",
];

const ONE_TO_ONE: &[&str] = &[
    "liver",
    "spleen",
    "kidney_right",
    "kidney_left",
    "stomach",
    "duodenum",
    "pancreas",
    "gallbladder",
    "small_bowel",
    "colon",
    "adrenal_gland_right",
    "adrenal_gland_left",
    "sacrum",
    "hip_right",
    "hip_left",
    "gluteus_maximus_right",
    "gluteus_maximus_left",
    "gluteus_medius_right",
    "gluteus_medius_left",
    "gluteus_minimus_right",
    "gluteus_minimus_left",
    "autochthon_right",
    "autochthon_left",
    "iliopsoas_right",
    "iliopsoas_left",
];

/// The 26 abdominal targets, in target-id order (ids start at 1).
pub fn default_targets() -> IndexMap<String, Vec<String>> {
    let mut t: IndexMap<String, Vec<String>> = ONE_TO_ONE
        .iter()
        .map(|&n| (n.to_string(), vec![n.to_string()]))
        .collect();
    t.insert(
        "vertebrae".to_string(),
        ABDOMINAL_VERTEBRAE.iter().map(|s| s.to_string()).collect(),
    );
    t
}
