#![no_main]

use geometa::embio::{parse_embeddings, write_embeddings};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for limit in [None, Some(3)] {
        if let Ok((table, _)) = parse_embeddings(data, limit) {
            // Anything accepted must survive a write/read cycle.
            let mut buf = Vec::new();
            write_embeddings(&table, &mut buf, true).unwrap();
            let (back, _) = parse_embeddings(&buf, None).unwrap();
            assert_eq!(back.words(), table.words());
        }
    }
});
