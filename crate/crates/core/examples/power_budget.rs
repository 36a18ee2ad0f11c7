//! On-chip power and insertion loss for a driven line, and the dynamic range
//! between the smallest and largest measurable fields.

use nvscope::analysis::{dynamic_range_db, insertion_loss_db};

fn main() -> nvscope::Result<()> {
    for (p_in, current) in [(22.6, 0.050), (22.6, 0.045), (10.0, 0.010)] {
        let r = insertion_loss_db(p_in, current, 50.0)?;
        println!(
            "{p_in:5.1} dBm in, {:4.0} mA on chip: {:6.2} dBm delivered, {:5.2} dB lost",
            current * 1e3,
            r.p_sim_dbm,
            r.loss_db
        );
    }
    for (lo, hi) in [(1.0, 251.2), (0.13, 3000.0)] {
        println!("{lo} µT to {hi} µT: {:.1} dB", dynamic_range_db(lo, hi)?);
    }
    Ok(())
}
