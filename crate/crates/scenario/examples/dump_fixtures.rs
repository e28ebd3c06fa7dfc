//! Regenerates the JSON fixture files from their in-code definitions.
//!
//! Run with `cargo run -p smslab-scenario --example dump_fixtures`.

use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir).expect("fixture dir");
    for (name, scenario) in smslab_scenario::fixtures::all() {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, scenario.to_json()).expect("write fixture");
        println!("wrote {}", path.display());
    }
}
