//! Loading channel and state files and running experiments programmatically.
//! The same runs are available from the `sepent` binary, e.g.
//! `sepent verify --channel data/bitflip.json --state data/bell.json`.

use std::path::Path;

use sepent::cli::{parse_config, render, run, Format};

fn main() -> sepent::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let channel = sepent::io::read_channel(&data.join("bitflip.json"))?;
    println!("loaded {} Kraus operators on dims {}", channel.ops().len(), channel.dims());
    println!("{}", sepent::io::state_to_string(&sepent::io::read_state(&data.join("bell.json"))?));

    let args = ["sepent", "sweep", "--family", "amplitude-damping", "--range", "0:1:0.25", "--emit", "decay"];
    let config = parse_config(args)?;
    let report = run(&config)?;
    print!("{}", render(&report, Format::Csv)?);
    println!("all checks passed: {}", report.passed);
    Ok(())
}
