use hierqec::geometry::{build_layout, Basis};
use hierqec::harness::{decode_batch, LocalChoice};
use hierqec::matching::{build_graph, GlobalDecoder};
use hierqec::persist::{generate_batch, ShotBatch};
use hierqec::pipeline::decode_global_only;
use hierqec::sparsify::{Direction, Sparsifier};

#[test]
fn stored_batch_decodes_like_fresh_shots() {
    let batch = generate_batch(5, 5, 5, 0.006, 400, 77).unwrap();
    let path = std::env::temp_dir().join(format!("hierqec-e2e-{}.bin", std::process::id()));
    batch.save(&path).unwrap();
    let loaded = ShotBatch::load(&path).unwrap();
    std::fs::remove_file(&path).ok();
    std::fs::remove_file(path.with_extension("bin.json")).ok();
    assert_eq!(loaded.to_bytes().unwrap(), batch.to_bytes().unwrap());

    let res = decode_batch(&loaded, &LocalChoice::None, Sparsifier::None, GlobalDecoder::Mwpm).unwrap();
    let row = &res.rows[0];

    let layout = build_layout(5, 5).unwrap();
    let gx = build_graph(&layout, Basis::X, 5, false).unwrap();
    let gz = build_graph(&layout, Basis::Z, 5, false).unwrap();
    let (mut fx, mut fz) = (0, 0);
    for s in &loaded.shots {
        let (x, z) = decode_global_only(&layout, [&gx, &gz], GlobalDecoder::Mwpm, &s.errors, &s.syndromes).unwrap();
        fx += x as u64;
        fz += z as u64;
    }
    assert_eq!((row.x.failures, row.z.failures), (fx, fz));
    assert_eq!(row.shots, 400);
}

#[test]
fn oracle_cleanup_thins_stored_syndromes() {
    let batch = generate_batch(7, 7, 7, 0.003, 300, 5).unwrap();
    let local = LocalChoice::Oracle;
    let up = decode_batch(&batch, &local, Sparsifier::Cleanup { direction: Direction::Up }, GlobalDecoder::Mwpm).unwrap();
    let uf = decode_batch(&batch, &local, Sparsifier::Cleanup { direction: Direction::Up }, GlobalDecoder::UnionFind).unwrap();
    let row = &up.rows[0];
    assert!(row.mean_raw_highlights > 1.0);
    assert!(row.r_a < 0.1, "r_a = {}", row.r_a);
    // the sparsified volume does not depend on the global decoder
    assert_eq!(row.mean_sparse_highlights, uf.rows[0].mean_sparse_highlights);
}
