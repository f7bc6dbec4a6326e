use fieldlab::engine::*;
use fieldlab::grid::*;
use fieldlab::zoo::*;

fn main() {
    for n in [256usize, 512] {
        let g = GridSpec::new(n).unwrap();
        let z = zoo(g).unwrap();
        let u = find(&z, "unbounded_order").unwrap();
        let cfg = DerivativeConfig::default();
        for amp in [0.3f64, 0.4, 0.5] {
            let phi = Field::random(g, 42 * 31 + 7, 8, 0.7).unwrap().scale(amp);
            let grad = gradient(u, &phi, &cfg).unwrap();
            let band = grad.band;
            let l2 = grad.field.hadamard(&grad.field).integrate().sqrt();
            println!(
                "n={n} amp={amp}: band={band} l2={l2:.2e} tail(3/4band={})={:.3e} tail(7/8band)={:.3e}",
                band * 3 / 4,
                grad.field.tail_energy_fraction(band * 3 / 4),
                grad.field.tail_energy_fraction(band * 7 / 8)
            );
            for &k in &[64i64, 80, 96, 112, 128] {
                print!("  |c({k})|={:.1e}", grad.field.spectrum_at(k).norm());
            }
            println!();
        }
    }
}
