//! Every bundled config reproduces its checked-in output byte for byte.
//!
//! Regenerate with `trialkit run configs/<name>.toml > configs/golden/<name>.txt`.

use std::path::Path;
use std::process::Command;

#[test]
fn bundled_configs_match_goldens() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut checked = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        let golden = dir.join("golden").join(format!("{name}.txt"));
        let expected = std::fs::read(&golden).unwrap_or_else(|e| panic!("{}: {e}", golden.display()));
        let out = Command::new(env!("CARGO_BIN_EXE_trialkit"))
            .env_remove("TRIALKIT_OUTPUT_DIR")
            .arg("run")
            .arg(&path)
            .output()
            .unwrap();
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(
            out.stdout == expected,
            "{name} differs from golden:\n{}",
            String::from_utf8_lossy(&out.stdout)
        );
        checked += 1;
    }
    assert_eq!(checked, 7);
}
