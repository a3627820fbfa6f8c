//! The shipped scenario files must stay in lockstep with the built-ins:
//! each parses to exactly the builtin of the same name, and each builtin
//! serializes to exactly the shipped bytes.

use std::path::Path;

use gptpsim::scenario::{builtin, parse_scenario, serialize_scenario, BUILTIN_NAMES};

fn scenarios_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios"))
}

#[test]
fn shipped_files_parse_to_builtins() {
    for name in BUILTIN_NAMES {
        let path = scenarios_dir().join(format!("{name}.conf"));
        let text =
            std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let parsed = parse_scenario(&text).unwrap_or_else(|errs| {
            panic!("{}: {:?}", path.display(), errs);
        });
        assert_eq!(
            parsed,
            builtin(name).unwrap(),
            "{name}.conf drifted from builtin"
        );
    }
}

#[test]
fn builtins_serialize_to_shipped_bytes() {
    for name in BUILTIN_NAMES {
        let path = scenarios_dir().join(format!("{name}.conf"));
        let shipped = std::fs::read_to_string(&path).unwrap();
        let generated = serialize_scenario(&builtin(name).unwrap());
        assert_eq!(
            generated, shipped,
            "{name}.conf bytes drifted; regenerate the file"
        );
    }
}
