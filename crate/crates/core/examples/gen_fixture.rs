//! Regenerates the bundled demo fixture under fixtures/vault.

use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/vault");
    relam_core::fixtures::write_vault_fixture(&dir).unwrap();
    println!("wrote {}", dir.display());
}
