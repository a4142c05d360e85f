//! Loads the compiled extension into a Python interpreter and runs the smoke
//! script against it.

use std::path::PathBuf;
use std::process::Command;

fn built_library() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let name = if cfg!(target_os = "macos") {
        "libabpole_py.dylib"
    } else if cfg!(windows) {
        "abpole_py.dll"
    } else {
        "libabpole_py.so"
    };
    let p = profile_dir.join(name);
    p.is_file().then_some(p)
}

#[test]
fn extension_imports_and_passes_smoke_script() {
    if Command::new("python3").arg("--version").output().is_err() {
        eprintln!("python3 not available; skipping");
        return;
    }
    let lib = built_library().expect("cdylib next to the test binary");
    let dir = tempfile::tempdir().unwrap();
    let ext = if cfg!(windows) { "abpole_py.pyd" } else { "abpole_py.so" };
    std::fs::copy(&lib, dir.path().join(ext)).unwrap();
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../python/smoke_test.py");
    let out = Command::new("python3")
        .arg(&script)
        .env("PYTHONPATH", dir.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "smoke script failed:\n{stdout}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains("ok"));
}
