//! Regenerates the frozen reference posterior used by the test suites.
//!
//! cargo run --release -p pgglmm --example bootstrap_goldens

use pgglmm::oracles::{quadrature_posterior_mean, TinyModel};

fn main() {
    let tiny = TinyModel::reference();
    match quadrature_posterior_mean(&tiny) {
        Ok(m) => println!("{}", serde_json::to_string_pretty(&m).expect("serializable")),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    }
}
