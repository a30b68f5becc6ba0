//! The file-driven interface: a flat key = value description resolves into
//! a validated run, executes, and lands as a self-describing table. The
//! same machinery backs the `tcsim` binary's run/validate/sweep/report
//! subcommands.

use tcsim::runner::{self, Overrides};

fn main() -> tcsim::Result<()> {
    let text = "\
experiment = cat
n_atoms = 25
g = 0.1
gamma = 1.2
phi = 0.6
t_end = 12.0
n_points = 30
";
    let cfg = runner::resolve(text)?;
    println!("resolved '{}' experiment, {} points", cfg.experiment.slug(), cfg.grid.n_points);
    for w in &cfg.warnings {
        println!("warning: {w}");
    }

    let artifact = runner::execute(&cfg)?;
    for (k, v) in artifact.metadata.iter().filter(|(k, _)| k.starts_with("diag.")) {
        println!("{k} = {v}");
    }
    for s in &artifact.summaries {
        println!(
            "{} {} vs {}: max_abs = {:.3e}",
            s.observable,
            s.left.as_str(),
            s.right.as_str(),
            s.max_abs
        );
    }

    // A bad config reports everything wrong with it at once.
    let bad = "experiment = coherent\ngamma = 2\nn_points = 1\n";
    match runner::resolve(bad) {
        Err(e) => println!("\nrejected config:\n{e}"),
        Ok(_) => unreachable!("the config above is invalid"),
    }

    // Overrides mirror the binary's --format/--out/--threads flags.
    let _ = Overrides::default();
    Ok(())
}
