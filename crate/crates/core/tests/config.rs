use std::io::Write;

use heatwalk::terminal::{catalog, from_json_str, from_toml_str, load, resolve};
use heatwalk::Error;

const INDICATOR_TOML: &str = r#"
family = "gbv"
components = [{ kind = "point_mass", mass = 1.0, at = 0.0 }]
jumps = [{ alpha = 1.0, at = 0.0 }]
"#;

#[test]
fn toml_indicator_matches_catalog() {
    let g = from_toml_str(INDICATOR_TOML).unwrap();
    let c = catalog("indicator").unwrap();
    for x in [-2.0, -1e-9, 0.0, 1e-9, 0.5, 3.0] {
        assert_eq!(g.evaluate(x), c.evaluate(x), "{x}");
    }
}

#[test]
fn json_density_piece_without_upper_limit() {
    // x -> integral of 2 y over [0, x] for x > 0, i.e. x^2 on the right half-line.
    let g =
        from_json_str(r#"{"family": "gbv", "beta": 1.0, "components": [{"kind": "density", "coeffs": [0.0, 2.0], "a": 0.0}]}"#)
            .unwrap();
    assert!((g.evaluate(1.5) - 2.25).abs() < 1e-12);
    assert_eq!(g.evaluate(-1.0), 0.0);
}

#[test]
fn holder_and_eb_families() {
    let h = from_toml_str("family = \"holder\"\ncatalog = \"abs_power\"\nparams = [0.25, 0.5]\nalpha = 0.5\nA = 1.0\n").unwrap();
    assert!((h.evaluate(1.25) - 1.0).abs() < 1e-15);
    let e = from_toml_str("family = \"eb\"\ncatalog = \"polynomial\"\nparams = [1.0, 0.0, 1.0]\nA = 2.0\nb = 1.0\n").unwrap();
    assert_eq!(e.evaluate(2.0), 5.0);
}

#[test]
fn malformed_configs_are_rejected() {
    let cases = [
        "family = \"gbv\"\nunknown_key = 1\n",
        "family = \"nope\"\n",
        "family = \"holder\"\ncatalog = \"sin\"\nparams = [1.0]\nA = 1.0\n",
        "family = \"holder\"\ncatalog = \"abs_power\"\nparams = [0.0]\nalpha = 0.5\nA = 1.0\n",
        "family = \"eb\"\ncatalog = \"exp\"\nparams = [1.0]\nA = -1.0\nb = 1.0\n",
        "family = \"gbv\"\ncomponents = [{ kind = \"spike\", at = 0.0 }]\n",
    ];
    for text in cases {
        assert!(matches!(from_toml_str(text), Err(Error::Config(_)) | Err(Error::InvalidParameter(_))), "{text}");
    }
}

#[test]
fn files_load_by_extension_and_resolve_by_path() {
    let dir = tempfile::tempdir().unwrap();
    let toml_path = dir.path().join("ind.toml");
    std::fs::write(&toml_path, INDICATOR_TOML).unwrap();
    let json_path = dir.path().join("sin.json");
    let mut f = std::fs::File::create(&json_path).unwrap();
    writeln!(f, r#"{{"family": "holder", "catalog": "sin", "params": [2.0], "alpha": 1.0, "A": 2.0}}"#).unwrap();

    assert_eq!(load(&toml_path).unwrap().evaluate(0.0), 1.0);
    let s = resolve(json_path.to_str().unwrap()).unwrap();
    assert!((s.evaluate(0.25) - 0.5f64.sin()).abs() < 1e-15);
    assert!(matches!(resolve("definitely_not_a_catalog_entry"), Err(Error::Config(_))));
}
