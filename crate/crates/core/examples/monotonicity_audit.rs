//! Classifies every catalog instance by the sign of its monotonicity bracket.

use fbdsde::audit::audit_monotonicity;
use fbdsde::model::{catalog_lookup, CATALOG};

fn main() -> fbdsde::Result<()> {
    for name in CATALOG {
        let spec = catalog_lookup(name)?;
        let r = audit_monotonicity(&spec, 10_000, 1);
        println!(
            "{name:>22}: {:<12} mu1 {:.4}  mu2 {:.4}  {}",
            r.regime.label(),
            r.mu1_hat,
            r.mu2_hat,
            r.note
        );
    }
    Ok(())
}
