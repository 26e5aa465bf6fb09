#![no_main]

use geometa::eval::AnalogyDataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = AnalogyDataset::parse_bytes("fuzz", data, false);
    let _ = AnalogyDataset::parse_bytes("fuzz", data, true);
});
