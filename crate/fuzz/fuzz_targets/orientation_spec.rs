#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = deaorient::cli::parse_orientation_spec(text);
        let _ = deaorient::cli::parse_rts_spec(text);
    }
});
