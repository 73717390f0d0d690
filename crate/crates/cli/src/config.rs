//! Flat JSON experiment configuration.

use std::path::{Path, PathBuf};

use rdrs::gf::Field;
use rdrs::patterns::{gmd_set, sed_set};
use rdrs::pipeline::Scheme;
use rdrs::rscodec::RsCode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub q: u32,
    pub primitive_poly: u32,
    pub ebno_db: Vec<f64>,
    /// Scheme names such as "GMD", "SED(12,12)", "mBM-2(11)", "mBM-HM74(11)".
    pub schemes: Vec<String>,
    pub tau: usize,
    pub frames: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut schemes = vec!["BM".to_string(), "GMD".into(), "SED(12,12)".into()];
        for l in 1..=3 {
            for r in [4, 7, 11] {
                schemes.push(format!("mBM-{l}({r})"));
            }
        }
        schemes.extend(
            ["mBM-HM74(4)", "mBM-HM74(11)", "m-b-ASD(11)", "mASD-2(11)", "mASD-2a(11)", "mASD-3(11)"]
                .map(String::from),
        );
        ExperimentConfig {
            n: 255,
            k: 239,
            q: 8,
            primitive_poly: 0x11D,
            ebno_db: (0..=8).map(|i| 4.6 + 0.2 * i as f64).map(|v| (v * 10.0).round() / 10.0).collect(),
            schemes,
            tau: 1000,
            frames: 1000,
            seed: 1,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// The (15,11) preset over GF(16).
    pub fn small() -> Self {
        ExperimentConfig {
            n: 15,
            k: 11,
            q: 4,
            primitive_poly: 0b10011,
            ebno_db: vec![4.0, 5.0, 6.0],
            schemes: ["BM", "GMD", "SED(4,4)", "mBM-1(3)", "mBM-2(3)", "mBM-2(5)", "mBM-HM74(5)", "m-b-ASD(4)"]
                .map(String::from)
                .to_vec(),
            tau: 500,
            frames: 2000,
            ..Self::default()
        }
    }

    /// Loads a config file; keys missing from the file keep the values of `base`.
    pub fn load(path: &Path, base: ExperimentConfig) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        let patch: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let serde_json::Value::Object(patch) = patch else {
            return Err(CliError::Config(format!("{}: expected a JSON object", path.display())));
        };
        let mut merged = serde_json::to_value(base).expect("config serializes");
        let obj = merged.as_object_mut().expect("config is an object");
        for (key, v) in patch {
            obj.insert(key, v);
        }
        serde_json::from_value(merged).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn code(&self) -> Result<RsCode, CliError> {
        let field = Field::new(self.q, self.primitive_poly).map_err(|e| CliError::Config(e.to_string()))?;
        RsCode::new(field, self.n, self.k).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn parsed_schemes(&self) -> Result<Vec<Scheme>, CliError> {
        self.schemes
            .iter()
            .map(|s| s.parse::<Scheme>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    /// Checks every field against the code, including measure preconditions.
    pub fn validate(&self) -> Result<(), CliError> {
        let code = self.code()?;
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.ebno_db.is_empty() {
            return bad("ebno_db must list at least one value".into());
        }
        if self.ebno_db.iter().any(|v| !v.is_finite()) {
            return bad("ebno_db values must be finite".into());
        }
        if self.tau == 0 {
            return bad("tau must be at least 1".into());
        }
        if self.frames == 0 {
            return bad("frames must be at least 1".into());
        }
        for scheme in self.parsed_schemes()? {
            scheme
                .measure(code.n(), code.k())
                .map_err(|e| CliError::Config(format!("{scheme}: {e}")))?;
            let fixed = match scheme {
                Scheme::Gmd => gmd_set(code.n(), code.d_min()).map(|_| ()),
                Scheme::Sed { l, f } => sed_set(l, f, code.n()).map(|_| ()),
                Scheme::Mbm { l, .. } if l == 0 || l >= 1 << code.q() => {
                    return bad(format!("{scheme}: l outside 1..{}", 1 << code.q()));
                }
                Scheme::MbmHm74 { rate } if rate < 4 || code.n() <= 7 => {
                    return bad(format!("{scheme}: needs R >= 4 and n > 7"));
                }
                _ => Ok(()),
            };
            fixed.map_err(|e| CliError::Config(format!("{scheme}: {e}")))?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut keyed = self.clone();
        keyed.out = PathBuf::new();
        let json = serde_json::to_string(&keyed).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    pub fn profile_path(&self, ebno_db: f64) -> PathBuf {
        self.out.join(format!(
            "profile_n{}_k{}_q{}_eb{:.2}_tau{}_seed{}.json",
            self.n, self.k, self.q, ebno_db, self.tau, self.seed
        ))
    }
}
