#![no_main]

use geometa::eval::SimilarityDataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = SimilarityDataset::parse_bytes("fuzz", data);
});
