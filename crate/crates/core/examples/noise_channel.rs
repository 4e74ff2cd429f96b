//! The noise channel on its own: table entries, forward sampling, and the
//! closed-form posterior over true labels given an observed one.

use nem::em::e_step;
use nem::noise_channel::flip_noise;
use nem::{LabelVector, NoiseChannel, RelationCatalog};

fn main() -> nem::Result<()> {
    let catalog = RelationCatalog::synthetic(3)?;
    let ch = NoiseChannel::distant_supervision_default(&catalog);
    println!("distant-supervision channel over {:?}", catalog.names());
    for r in 0..catalog.len() {
        println!(
            "  {:<3} p(z=1|y=0) = {:.2}   p(z=1|y=1) = {:.2}",
            catalog.name(r),
            ch.prob(r, false, true),
            ch.prob(r, true, true)
        );
    }

    // With a 0.9 chance of dropping a true label, an observed label is weak
    // evidence and an unobserved one is almost no evidence at all.
    let z = LabelVector::from_names(&catalog, &["R0"])?;
    let prior = vec![0.5; catalog.len()];
    let q = e_step(&ch, &prior, &z)?;
    println!("z = {:?}, prior 0.5 everywhere -> Q(y=1) = {q:.3?}", z.names(&catalog));

    let y = LabelVector::from_names(&catalog, &["R1"])?;
    let sym = NoiseChannel::uniform(catalog.len(), 0.1, 0.1)?;
    let n = 100_000u64;
    let mut flips = [0usize; 2];
    for s in 0..n {
        flips[0] += y.hamming(&flip_noise(&y, 0.1, s)?)?;
        flips[1] += y.hamming(&sym.sample(&y, s)?)?;
    }
    let bits = n as f64 * catalog.len() as f64;
    println!(
        "per-bit flip rate over {n} draws: flip_noise {:.4}, symmetric channel {:.4}",
        flips[0] as f64 / bits,
        flips[1] as f64 / bits
    );
    Ok(())
}
