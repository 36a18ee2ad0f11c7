//! Splits a linearly and a circularly polarized phasor into the NV frame
//! components, and shows the σ± swap under an axis flip.

use num_complex::Complex64;
use nvscope::fieldcore::{
    bias_field_for_frequency, decompose_polarization, flip_axis, nv_frame_from_tilt, AxisPair, BiasConfig, ComplexVec3,
    Transition,
};

fn main() -> nvscope::Result<()> {
    let frame = nv_frame_from_tilt(29.5, AxisPair::XZ)?;
    let i = Complex64::i();
    let one = Complex64::new(1e-6, 0.0);
    let zero = Complex64::new(0.0, 0.0);

    let fields = [
        ("linear along x", ComplexVec3::new(one, zero, zero)),
        ("rotating in e1-e2", {
            let (e1, e2) = (frame.e1(), frame.e2());
            let b = |k: usize| [e1.x, e1.y, e1.z][k] * one + [e2.x, e2.y, e2.z][k] * one * i;
            ComplexVec3::new(b(0), b(1), b(2))
        }),
    ];
    for (name, b) in fields {
        let p = decompose_polarization(&b, &frame);
        let q = decompose_polarization(&b, &flip_axis(&frame));
        println!(
            "{name:>18}: B∥ {:.3} µT  B+ {:.3} µT  B− {:.3} µT | flipped B+ {:.3} B− {:.3}",
            p.parallel * 1e6,
            p.plus * 1e6,
            p.minus * 1e6,
            q.plus * 1e6,
            q.minus * 1e6
        );
    }

    let cfg = BiasConfig::default();
    for (f, t) in [(2.77e9, Transition::SigmaMinus), (2.9674e9, Transition::SigmaPlus)] {
        let b = bias_field_for_frequency(f, t, &cfg)?;
        println!("{t:?} at {:.4} GHz needs B_dc = {:.2} mT", f * 1e-9, b * 1e3);
    }
    Ok(())
}
