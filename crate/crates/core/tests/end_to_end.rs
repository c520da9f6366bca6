use std::collections::BTreeMap;
use std::fs::File;

use proptest::prelude::*;
use wasabi::labelmap::io::read_label_map;
use wasabi::labelmap::{clean, CleanupConfig};
use wasabi::matching::{image_distance, ImageDescriptor, MatchConfig};
use wasabi::pipeline::{describe_all, PipelineConfig};
use wasabi::retrieval::csv_io::read_poses;
use wasabi::retrieval::{Pose, RetrievalDatabase};
use wasabi::synth::{
    generate_scene, perturb_scene, query_perturbation, render_scene, write_corpus, CorpusSpec,
    PerturbationSpec,
};
use wasabi::wavelet::EdgeDescriptor;

const SMALL_CORPUS: &str = r#"
pose_spacing = 4.0
format = "png"

[generate]
seed = 11
count = 5
width = 120
height = 90

[queries]
seed = 3
max_translation = 3.0
jitter_sigma = 0.5
"#;

#[test]
fn corpus_files_match_in_memory_rendering() {
    let spec = CorpusSpec::from_toml(SMALL_CORPUS).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = write_corpus(&spec, dir.path()).unwrap();
    assert_eq!(summary.database.len(), 5);
    assert_eq!(summary.queries.len(), 5);

    let q = spec.queries.as_ref().unwrap();
    for (i, scene) in spec.scenes().iter().enumerate() {
        let db_map = read_label_map(&summary.database[i]).unwrap();
        assert_eq!(db_map, render_scene(scene).unwrap());
        let q_map = read_label_map(&summary.queries[i]).unwrap();
        assert_eq!(
            q_map,
            perturb_scene(scene, &query_perturbation(q, i)).unwrap()
        );
    }

    let poses = read_poses(File::open(dir.path().join("db_poses.csv")).unwrap()).unwrap();
    assert_eq!(poses["scene_0003"], Pose::new(12.0, 0.0, 0.0));
    let qposes = read_poses(File::open(dir.path().join("query_poses.csv")).unwrap()).unwrap();
    assert_eq!(qposes["query_0003"], poses["scene_0003"]);
}

#[test]
fn saved_database_ranks_each_image_first() {
    let maps: Vec<_> = (0..6)
        .map(|i| {
            (
                format!("img{i}"),
                render_scene(&generate_scene(100 + i, 160, 120)).unwrap(),
            )
        })
        .collect();
    let images: Vec<ImageDescriptor> = describe_all(&maps, &PipelineConfig::default())
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let poses: BTreeMap<String, Pose> = (0..6)
        .map(|i| (format!("img{i}"), Pose::new(i as f64, 0.0, 0.0)))
        .collect();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("db.wsbi");
    RetrievalDatabase::build(images.clone(), Some(&poses))
        .unwrap()
        .save(&path)
        .unwrap();
    let db = RetrievalDatabase::load(&path).unwrap();
    assert_eq!(db.poses(), poses);

    for img in &images {
        let top = db.query(img, 2, &MatchConfig::default());
        assert_eq!(top[0].image_id, img.image_id);
        assert_eq!(top[0].distance.value, Some(0.0));
        assert!(top[1].distance.value.unwrap() > 0.0);
    }
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
    v.into_iter().map(|x| x / n).collect()
}

fn arb_image(id: &'static str) -> impl Strategy<Value = ImageDescriptor> {
    proptest::collection::vec((0u16..4, proptest::collection::vec(-1.0f64..1.0, 8)), 1..10)
        .prop_map(move |edges| {
            ImageDescriptor::new(
                id,
                edges.into_iter().map(|(class_id, c)| EdgeDescriptor {
                    class_id,
                    coeffs: unit(c),
                }),
            )
        })
}

proptest! {
    #[test]
    fn image_distance_is_a_symmetric_premetric(a in arb_image("a"), b in arb_image("b"), penalty in 0.0f64..2.0) {
        let cfg = MatchConfig { unmatched_penalty: penalty };
        let ab = image_distance(&a, &b, &cfg);
        let ba = image_distance(&b, &a, &cfg);
        prop_assert_eq!(ab.matched_pairs, ba.matched_pairs);
        match (ab.value, ba.value) {
            (Some(x), Some(y)) => {
                prop_assert!(x >= 0.0);
                prop_assert!((x - y).abs() <= 1e-12);
            }
            (None, None) => {}
            other => prop_assert!(false, "comparability differs: {:?}", other),
        }
        prop_assert_eq!(image_distance(&a, &a, &cfg).value, Some(0.0));
    }

    #[test]
    fn cleanup_is_idempotent(seed in any::<u64>(), dropout in 0.0f64..0.5, sigma in 0.0f64..1.5) {
        let scene = generate_scene(seed, 96, 72);
        let p = PerturbationSpec {
            translation: [0.0, 0.0],
            boundary_jitter_sigma: sigma,
            class_dropout_prob: dropout,
            seed,
        };
        let map = perturb_scene(&scene, &p).unwrap();
        let cfg = CleanupConfig::default();
        let once = clean(&map, &cfg).unwrap();
        prop_assert_eq!(clean(&once, &cfg).unwrap(), once);
    }
}
