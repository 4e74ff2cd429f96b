//! Checks the factorized E-step and bound against brute-force enumeration
//! over all 2^R label vectors.

use nem::em::{bag_bound, bag_log_likelihood, e_step};
use nem::{seed, LabelVector, NoiseChannel};
use nem_oracle::{exact_marginal, exact_posterior, posterior_marginals, EnumerationBudget, RawChannel};
use rand::Rng;

fn main() -> nem::Result<()> {
    let mut rng = seed::rng(1);
    let budget = EnumerationBudget::default();
    let (mut worst_q, mut worst_bound) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=8);
        let mut draw = || (0..n).map(|_| rng.gen_range(0.01..0.99)).collect::<Vec<f64>>();
        let ch = NoiseChannel::new(draw(), draw())?;
        let prior = draw();
        let z = LabelVector::from_bits((0..n).map(|_| rng.gen_bool(0.5)).collect());
        let raw = RawChannel {
            phi0: &ch.phi0,
            phi1: &ch.phi1,
        };

        let q = e_step(&ch, &prior, &z)?;
        let joint = exact_posterior(&raw, &prior, z.bits(), budget).expect("within budget");
        for (a, b) in q.iter().zip(posterior_marginals(&joint, n)) {
            worst_q = worst_q.max((a - b).abs());
        }
        let ll = exact_marginal(&raw, &prior, z.bits(), budget).expect("within budget").ln();
        worst_bound = worst_bound.max((bag_bound(&q, &prior, &ch, &z) - ll).abs());
        assert!((bag_log_likelihood(&prior, &ch, &z) - ll).abs() < 1e-9);
    }
    println!("1000 random instances with up to 8 relations");
    println!("  max |factorized Q - enumerated marginal| = {worst_q:.2e}");
    println!("  max |bound at Q - log p(z|x)|            = {worst_bound:.2e}");
    Ok(())
}
