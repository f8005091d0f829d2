//! Parses a constraint file, prints its canonical form and any diagnostics.
//!
//!     cargo run --example parse_and_render
//!     cargo run --example parse_and_render -- my_constraints.fcl

use fclloop::fcl::{parse_constraints, render_constraints, Catalog, BUNDLED_CONSTRAINTS};

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).unwrap_or_else(|e| {
            eprintln!("{path}: {e}");
            std::process::exit(2);
        }),
        None => BUNDLED_CONSTRAINTS.to_string(),
    };
    match parse_constraints(&text, &Catalog::dragon_hunt()) {
        Ok(cs) => {
            print!("{}", render_constraints(&cs));
            for c in &cs {
                println!("# {}: depth {}, sets {:?}", c.name, c.formula.depth(), c.formula.referenced_sets());
            }
        }
        Err(diags) => {
            for d in diags {
                eprintln!("{d} [{:?}]", d.kind);
            }
            std::process::exit(2);
        }
    }

    // G and P are shorthand; the printer shows what they mean.
    let catalog = Catalog::dragon_hunt();
    for src in ["G[3](count(Farm) >= 1)", "P[>=1, 5](count(Attack) > 0)"] {
        let f = fclloop::fcl::parse_formula(src, &catalog).expect("valid formula");
        println!("{src}  =>  {f}");
    }
}
