#![no_main]

use geometa::ParamsFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(params) = ParamsFile::parse_bytes(data) {
        let again = ParamsFile::parse(&params.to_text()).unwrap();
        assert_eq!(again.point, params.point);
    }
});
