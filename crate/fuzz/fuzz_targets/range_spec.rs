#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = std::str::from_utf8(data) {
        if let Ok(grid) = qmeter_cli::parse_range(spec) {
            assert!(!grid.is_empty() && grid.len() <= qmeter_cli::args::MAX_GRID_POINTS);
            assert!(grid.iter().all(|v| v.is_finite()));
            assert!(grid.windows(2).all(|w| w[0] <= w[1]));
        }
    }
});
