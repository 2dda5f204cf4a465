//! Regenerates the committed zoo instances under `tests/data/`.
//!
//! Usage: `cargo run -p saddle-core --release --example export_zoo [out_dir]`

use std::path::PathBuf;

use saddle_core::geometry::Geometry;
use saddle_core::{ProblemDoc, ZooSpec};

pub fn specs() -> Vec<(&'static str, ZooSpec)> {
    vec![
        ("quadratic_game", ZooSpec::QuadraticGame { n: 20, m: 15, mu: 0.5, seed: 1 }),
        ("lasso", ZooSpec::Lasso { n: 20, m: 15, lambda_reg: 0.1, mu_f: 0.0, seed: 2 }),
        (
            "matrix_game_euclidean",
            ZooSpec::MatrixGame {
                n: 5,
                m: 4,
                seed: 3,
                primal_geometry: Geometry::Euclidean,
                dual_geometry: Geometry::Euclidean,
            },
        ),
        (
            "matrix_game_entropy",
            ZooSpec::MatrixGame {
                n: 5,
                m: 4,
                seed: 3,
                primal_geometry: Geometry::Entropy,
                dual_geometry: Geometry::Entropy,
            },
        ),
        ("constrained_qp", ZooSpec::ConstrainedQp { n: 20, m: 8, mu_f: 1.0, seed: 4 }),
    ]
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("crates/core/tests/data"));
    std::fs::create_dir_all(&out)?;
    let mut index = serde_json::Map::new();
    for (name, spec) in specs() {
        let problem = spec.build()?;
        let doc = ProblemDoc::from_problem(name, &problem)?;
        std::fs::write(out.join(format!("{name}.json")), doc.to_json()? + "\n")?;
        index.insert(name.to_string(), serde_json::to_value(&spec)?);
        println!("wrote {name}");
    }
    std::fs::write(out.join("specs.json"), serde_json::to_string_pretty(&index)? + "\n")?;
    Ok(())
}
