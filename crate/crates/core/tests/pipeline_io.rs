use mgspool::media::{load_frame_sequence, save_frame_sequence, synthetic_video};
use mgspool::okm::{masks_from_assignments, okm_cluster, ClusterMasks};
use mgspool::pipeline::{tokenize, write_artifacts, PipelineConfig, RunReport, ARTIFACTS};
use mgspool::pooling::{FeatureGrid, TokenSet};
use mgspool::superpixels::{load_precomputed_map, pixel_features, superpixel_means, SuperpixelConfig};
use mgspool::tensor::{read_tensor, write_tensor};
use mgspool::{Matrix, VideoTensor};

fn small_config() -> PipelineConfig {
    let mut cfg = PipelineConfig {
        k: 10,
        v: 3,
        grid: (2, 4, 4),
        seed: 5,
        ..Default::default()
    };
    cfg.superpixel.regions_per_frame = 16;
    cfg
}

#[test]
fn frames_on_disk_to_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    let video = synthetic_video(4, 32, 32, 21);
    save_frame_sequence(&video, &frames, "img_%03d.png").unwrap();
    let loaded = load_frame_sequence(&frames, "img_%03d.png").unwrap();

    let cfg = small_config();
    let out = tokenize(&loaded, None, &cfg).unwrap();
    let arts = dir.path().join("out");
    write_artifacts(&out, &arts).unwrap();

    let tokens = Matrix::from_tensor(&read_tensor(arts.join("tokens.vten")).unwrap()).unwrap();
    assert_eq!(tokens, out.projected);
    let spatial = Matrix::from_tensor(&read_tensor(arts.join("spatial.vten")).unwrap()).unwrap();
    let temporal = Matrix::from_tensor(&read_tensor(arts.join("temporal.vten")).unwrap()).unwrap();
    let mgs = Matrix::from_tensor(&read_tensor(arts.join("mgs.vten")).unwrap()).unwrap();
    assert_eq!((spatial.rows, temporal.rows, mgs.rows), (2, 16, 10));
    let empty = read_tensor(arts.join("mgs_empty.vten")).unwrap();
    assert_eq!(empty.dims(), &[10]);

    let masks = ClusterMasks::from_tensor(&read_tensor(arts.join("masks.vten")).unwrap()).unwrap();
    assert_eq!(masks, out.masks);
    let report: RunReport = serde_json::from_slice(&std::fs::read(arts.join("report.json")).unwrap()).unwrap();
    assert_eq!((report.k, report.v, report.seed), (10, 3, 5));
    assert_eq!(report.tokens, [2 + 10 + 16, 6]);
    assert_eq!(ARTIFACTS.len(), 7);
}

#[test]
fn precomputed_map_feeds_clustering() {
    let dir = tempfile::tempdir().unwrap();
    let video = synthetic_video(2, 24, 24, 8);
    let out = tokenize(&video, None, &small_config()).unwrap();
    let path = dir.path().join("map.vten");
    write_tensor(&out.map.to_tensor(), &path).unwrap();

    let map = load_precomputed_map(&path).unwrap();
    assert_eq!(map.count, out.map.count);
    let feats = superpixel_means(&pixel_features(&video, &SuperpixelConfig::default()), &map).unwrap();
    let res = okm_cluster(&feats, 10, 3, 100, 5).unwrap();
    let masks = masks_from_assignments(&res, &map).unwrap();
    assert!((0..masks.pixels()).all(|p| masks.multiplicity(p) == 3));
}

#[test]
fn external_features_from_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let video = VideoTensor::from_tensor(&synthetic_video(4, 16, 16, 2).to_tensor()).unwrap();
    let data: Vec<f32> = (0..2 * 2 * 2 * 8).map(|i| (i % 7) as f32 / 7.0).collect();
    let grid = FeatureGrid::new(2, 2, 2, 8, data).unwrap();
    let path = dir.path().join("grid.vten");
    write_tensor(&grid.to_tensor(), &path).unwrap();
    let grid = FeatureGrid::from_tensor(&read_tensor(&path).unwrap()).unwrap();

    let out = tokenize(&video, Some(grid.clone()), &small_config()).unwrap();
    assert_eq!((out.projected.rows, out.projected.cols), (2 + 10 + 4, 8));
    let again = TokenSet::pool(&out.masks, &grid, small_config().normalization).unwrap();
    assert_eq!(again, out.tokens);
}
