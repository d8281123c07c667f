//! Partial entanglement breaking: probe tests on a local channel and a
//! threshold scan of the depolarizing family.

use sepent::breaking::{eb_threshold_scan, r_peb_test, schmidt_report, PebOptions, ScanOptions, SchmidtSearchOptions};
use sepent::channels::families;
use sepent::state::named;

fn main() -> sepent::Result<()> {
    let peb = PebOptions { probes: 10, ..PebOptions::default() };
    for p in [0.5, 0.7] {
        let rep = r_peb_test(&families::depolarizing(p)?, 1, &peb)?;
        println!("depolarizing p={p}: verdict {:?}, probes agree {}", rep.verdict, rep.agreement());
    }

    let scan = eb_threshold_scan(families::depolarizing, 1, &ScanOptions::default())?;
    println!("depolarizing threshold {:?} ({:?}), bracket {:?}", scan.threshold, scan.status, scan.bracket);

    let scan = eb_threshold_scan(families::amplitude_damping, 1, &ScanOptions::default())?;
    println!("amplitude damping threshold {:?} ({:?})", scan.threshold, scan.status);

    for p in [0.2, 0.6] {
        let rep = schmidt_report(&named::werner(p)?.into(), &SchmidtSearchOptions::default())?;
        println!("werner p={p}: Schmidt number ≤ {:?}, separable {:?} via {:?}", rep.number_upper, rep.separable, rep.method);
    }
    Ok(())
}
