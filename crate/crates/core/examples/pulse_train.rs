//! Time-resolved iso-B imaging of a pulsed drive: camera timing from two
//! readout observations, then a frame stream over an on/off schedule.

use nvscope::acquisition::{frame_time, simulate_stream, CameraTiming, DecayParams, PulseParams, ScheduleStep};
use nvscope::fieldcore::Vec3;
use nvscope::nearfield::{Component, GridSpec, PolarizedFieldMap};

fn main() -> nvscope::Result<()> {
    let timing = CameraTiming::calibrate((200, 2.2), (50, 0.7))?;
    let pulse = PulseParams {
        wait_ns: 500.0,
        n_shots: 50,
        counts_ref: 1e6,
        ..Default::default()
    };
    println!(
        "row time {:.2} µs, overhead {:.0} µs",
        timing.row_time_us, timing.overhead_us
    );
    for rows in [200, 100, 50] {
        println!(
            "{rows:>4} rows: {:.3} ms per frame",
            frame_time(&timing, rows, &pulse, 30.0)?
        );
    }

    let map = PolarizedFieldMap::uniform(GridSpec::xy(Vec3::ZERO, 16, 16, 1e-6), Component::SigmaMinus, 400e-6);
    let schedule: Vec<ScheduleStep> = (0..4)
        .map(|k| {
            if k % 2 == 0 {
                ScheduleStep::off(5.0)
            } else {
                ScheduleStep::on(5.0)
            }
        })
        .collect();
    let frames = simulate_stream(
        &map,
        30.0,
        &pulse,
        &DecayParams::default(),
        &schedule,
        &timing,
        200,
        Some(3),
    )?;
    for f in &frames {
        let bar = "#".repeat((f.contrast.mean().max(0.0) * 1000.0) as usize);
        println!(
            "{:6.2} ms  {}  {bar}",
            f.timestamp_ms,
            if f.mw_on { "on " } else { "off" }
        );
    }
    Ok(())
}
