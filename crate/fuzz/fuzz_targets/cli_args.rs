#![no_main]

use libfuzzer_sys::fuzz_target;

// First line is the config file handed to --config, the rest is argv, one
// argument per line.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (file, args) = text.split_once('\n').unwrap_or(("", text));
    let file = file.replace(';', "\n");
    let loader = move |_: &str| Ok(file.clone());
    let argv = std::iter::once("qmeter").chain(args.lines());
    if let Err(err) = qmeter_cli::parse_args_with(argv, &loader, None) {
        if err.exit_code() == 2 {
            assert_eq!(err.to_string().lines().count(), 1);
        }
    }
});
