//! Bookkeeping of the 1/N expansion that maps the collective spin onto a
//! boson: each order n >= 1 contributes -q_n g N^(-(n-1/2)) (a† (b†b)^n b + h.c.)
//! with q = 1/2, 1/8, 1/16, ... This example recovers q_n from the matrix
//! elements themselves and shows how fast the tower shrinks at fixed drive.

use num_complex::Complex64 as C64;
use tcsim::exact::ModelParams;
use tcsim::fock::FockSpace;
use tcsim::hp::{hp_term, hp_validity};

fn main() {
    let params = ModelParams::resonant(1.0, 0.1, 64);
    let fock = FockSpace::new(8);
    let space = fock.space().tensor(&fock.space());

    println!("N = {}, g = {}", params.n_atoms, params.g);
    println!();
    println!("{:>3}  {:>10}  {:>12}  {:>12}", "n", "q_n", "prefactor", "recovered");

    for n in 1..=3 {
        let term = hp_term(n, &params, &fock, &fock).matrix;
        // <1,1| a†(b†b)^n b |0,2> = sqrt(2) * 1^n: the occupation power
        // collapses to 1, so this element reads q_n back directly.
        let bra = space.ravel(&[1, 1]);
        let ket = space.ravel(&[0, 2]);
        let element = term.matrix()[(bra, ket)];
        let scale = -params.g * (params.n_atoms as f64).powf(0.5 - n as f64);
        let recovered = (element / C64::new(scale * 2.0_f64.sqrt(), 0.0)).re;
        let q = [0.5, 0.125, 0.0625][n - 1];
        println!("{n:>3}  {q:>10}  {scale:>12.3e}  {recovered:>12.8}");
        assert!((recovered - q).abs() < 1e-12);
    }

    println!();
    println!("peak atomic excitation fraction at various drives:");
    for alpha in [0.5, 1.0, 2.0, 4.0] {
        let ratio = hp_validity(C64::new(alpha, 0.0), &params);
        let verdict = if ratio <= 0.1 { "well inside" } else { "strained" };
        println!("  alpha = {alpha:3}:  |alpha|^2 / (N/2) = {ratio:.4}  ({verdict})");
    }
}
