//! On-disk formats: tuple JSON, dataset binary with JSON sidecar, run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::Num;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::construct::{build_polynomial, spacing, BaTuple, ConstructionTrace, InvariantReport};
use crate::diophantine::{cf_audit, CfAuditEntry};
use crate::error::{Error, Result};
use crate::model::{restore_design, ChannelDesign, Dataset, DesignKind, KernelProfile};
use crate::precision::{parse_rational, rational_string, BigReal, Real};

pub const SCHEMA_VERSION: u32 = 1;

/// Significant digits never drop below this in persisted reals.
pub const MIN_DIGITS: usize = 60;

pub const DATASET_MAGIC: &[u8; 8] = b"BADCDS01";

/// Header bytes: magic, M (u32), N (u64), seed (u64), design digest (32 bytes).
pub const DATASET_HEADER_LEN: usize = 8 + 4 + 8 + 8 + 32;

fn digits_for(precision: u32) -> usize {
    BigReal::roundtrip_digits(precision).max(MIN_DIGITS)
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::Artifact {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| malformed(path, e.to_string()))
}

/// Persisted BA tuple.
///
/// Only `M` and `beta` are needed to verify a tuple; the remaining fields let the
/// full construction be restored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleFile {
    pub schema_version: u32,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(default = "default_precision_bits")]
    pub precision_bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub xi: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residuals: Vec<String>,
    /// Decimal or exact `p/q` strings.
    pub beta: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cf_audit: Vec<CfAuditEntry>,
}

fn default_precision_bits() -> u32 {
    512
}

impl TupleFile {
    pub fn from_tuple(t: &BaTuple) -> Self {
        let tr = &t.trace;
        let digits = digits_for(tr.precision_bits);
        let render = |xs: &[BigReal]| xs.iter().map(|x| x.to_decimal(digits)).collect::<Vec<_>>();
        TupleFile {
            schema_version: SCHEMA_VERSION,
            m: t.m,
            q: Some(tr.q),
            a: Some(rational_string(&t.a)),
            b: Some(rational_string(&t.b)),
            precision_bits: tr.precision_bits,
            z: Some(tr.z.to_string()),
            alpha: render(&tr.alpha),
            xi: render(&tr.xi),
            // residuals sit near 2^-precision, so render them in scientific form
            residuals: render(&tr.residuals),
            beta: render(&t.beta),
            invariants: Some(t.check_invariants()),
            cf_audit: t.audit.clone(),
        }
    }

    /// Coordinates as reals; `p/q` entries stay exact.
    pub fn beta_reals(&self, path: &Path) -> Result<Vec<Real>> {
        if self.beta.len() != self.m {
            return Err(malformed(
                path,
                format!("M = {} but beta has {} entries", self.m, self.beta.len()),
            ));
        }
        if self.m == 0 {
            return Err(malformed(path, "M must be positive"));
        }
        self.beta
            .iter()
            .map(|s| Real::parse(s, self.precision_bits).map_err(|e| malformed(path, e.to_string())))
            .collect()
    }

    /// Restore the full construction; needs every trace field.
    pub fn to_tuple(&self, path: &Path) -> Result<BaTuple> {
        let bad = |r: String| malformed(path, r);
        let need = |f: &Option<String>, name: &str| f.clone().ok_or_else(|| bad(format!("missing field {name}")));
        let prec = self.precision_bits;
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!("unsupported schema_version {}", self.schema_version)));
        }
        let m = self.m;
        if m == 0 {
            return Err(bad("M must be positive".into()));
        }
        let q = self.q.ok_or_else(|| bad("missing field Q".into()))?;
        if q != spacing(m) {
            return Err(bad(format!("Q = {q} does not match M = {m}")));
        }
        let a = parse_rational(&need(&self.a, "a")?).map_err(|e| bad(e.to_string()))?;
        let b = parse_rational(&need(&self.b, "b")?).map_err(|e| bad(e.to_string()))?;
        let z = BigInt::from_str_radix(&need(&self.z, "z")?, 10).map_err(|e| bad(e.to_string()))?;
        let parse_all = |xs: &[String], len: usize, name: &str| -> Result<Vec<BigReal>> {
            if xs.len() != len {
                return Err(bad(format!("{name} has {} entries, expected {len}", xs.len())));
            }
            xs.iter()
                .map(|s| BigReal::parse(s, prec).map_err(|e| bad(e.to_string())))
                .collect()
        };
        let alpha = parse_all(&self.alpha, m, "alpha")?;
        let xi = parse_all(&self.xi, m + 1, "xi")?;
        let residuals = parse_all(&self.residuals, m + 1, "residuals")?;
        let beta = parse_all(&self.beta, m, "beta")?;
        let polynomial = build_polynomial(m + 1, q)?;
        let audit = if self.cf_audit.len() == m {
            self.cf_audit.clone()
        } else {
            cf_audit(&beta.iter().cloned().map(Real::Approx).collect::<Vec<_>>(), 64)?
        };
        let trace = ConstructionTrace {
            m,
            q,
            polynomial,
            xi,
            residuals,
            alpha,
            z,
            precision_bits: prec,
        };
        Ok(BaTuple {
            m,
            a,
            b,
            beta,
            trace,
            audit,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// JSON sidecar that accompanies a dataset binary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub schema_version: u32,
    pub binary: String,
    pub design: DesignRecord,
    pub profile: KernelProfile,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n_per_channel: usize,
    pub n: u64,
    pub noise_sd: f64,
    pub seed: u64,
    pub signal_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub kind: DesignKind,
    pub a: String,
    pub b: String,
    /// Exact `p/q` or decimal strings.
    pub u: Vec<String>,
    /// Precision at which decimal entries of `u` are read back.
    pub precision_bits: u32,
    pub source: Option<String>,
    pub digest: String,
}

impl DesignRecord {
    pub fn from_design(d: &ChannelDesign) -> Self {
        DesignRecord {
            kind: d.kind,
            a: rational_string(&d.a),
            b: rational_string(&d.b),
            u: d.channels.iter().map(|c| c.u.to_string()).collect(),
            precision_bits: d
                .channels
                .iter()
                .filter_map(|c| match &c.u {
                    Real::Approx(x) => Some(x.precision()),
                    Real::Exact(_) => None,
                })
                .max()
                .unwrap_or(default_precision_bits()),
            source: d.source.clone(),
            digest: d.digest(),
        }
    }

    pub fn to_design(&self, path: &Path) -> Result<ChannelDesign> {
        let a = parse_rational(&self.a).map_err(|e| malformed(path, e.to_string()))?;
        let b = parse_rational(&self.b).map_err(|e| malformed(path, e.to_string()))?;
        let u = self
            .u
            .iter()
            .map(|s| Real::parse(s, self.precision_bits).map_err(|e| malformed(path, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let d = restore_design(self.kind, u, &a, &b, self.source.clone())?;
        if d.digest() != self.digest {
            return Err(malformed(path, "design digest mismatch"));
        }
        Ok(d)
    }
}

/// Path of the sidecar for a dataset binary: `data.bin` → `data.json`.
pub fn sidecar_path(binary: &Path) -> PathBuf {
    binary.with_extension("json")
}

/// Write `binary` and its sidecar; returns the sidecar path.
pub fn save_dataset(data: &Dataset, binary: &Path) -> Result<PathBuf> {
    let digest = data.design.digest();
    let raw_digest = hex::decode(&digest).expect("design digest is hex");
    let mut bytes = Vec::with_capacity(DATASET_HEADER_LEN + 8 * data.samples.len());
    bytes.extend_from_slice(DATASET_MAGIC);
    bytes.extend_from_slice(&(data.design.m() as u32).to_le_bytes());
    bytes.extend_from_slice(&(data.n_per_channel as u64).to_le_bytes());
    bytes.extend_from_slice(&data.seed.to_le_bytes());
    bytes.extend_from_slice(&raw_digest);
    for v in &data.samples {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(binary, bytes).map_err(|e| Error::io(binary, e))?;
    let sidecar = DatasetSidecar {
        schema_version: SCHEMA_VERSION,
        binary: binary
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        design: DesignRecord::from_design(&data.design),
        profile: data.profile,
        m: data.design.m(),
        n_per_channel: data.n_per_channel,
        n: data.n(),
        noise_sd: data.noise_sd,
        seed: data.seed,
        signal_id: data.signal_id.clone(),
    };
    let side = sidecar_path(binary);
    write_json(&side, &sidecar)?;
    Ok(side)
}

pub fn load_dataset(binary: &Path) -> Result<Dataset> {
    let side = sidecar_path(binary);
    let meta: DatasetSidecar = read_json(&side)?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(malformed(
            &side,
            format!("unsupported schema_version {}", meta.schema_version),
        ));
    }
    let bytes = fs::read(binary).map_err(|e| Error::io(binary, e))?;
    if bytes.len() < DATASET_HEADER_LEN || &bytes[..8] != DATASET_MAGIC {
        return Err(malformed(binary, "bad magic"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let m = u32_at(8) as usize;
    let n = u64_at(12) as usize;
    let seed = u64_at(20);
    let digest = hex::encode(&bytes[28..60]);
    if m != meta.m || n != meta.n_per_channel || seed != meta.seed || digest != meta.design.digest {
        return Err(malformed(binary, "header disagrees with sidecar"));
    }
    let payload = &bytes[DATASET_HEADER_LEN..];
    if payload.len() != 8 * m * n {
        return Err(malformed(
            binary,
            format!("payload holds {} bytes, expected {}", payload.len(), 8 * m * n),
        ));
    }
    let samples = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Dataset {
        design: meta.design.to_design(&side)?,
        profile: meta.profile,
        n_per_channel: n,
        samples,
        noise_sd: meta.noise_sd,
        seed,
        signal_id: meta.signal_id,
    })
}

/// Everything needed to rerun a command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub tool_version: String,
    pub params: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, params: serde_json::Value) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            params,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            duration_secs: 0.0,
        }
    }
}

/// Manifest location for an output file (`tuple.json` → `tuple.manifest.json`)
/// or an output directory (`dir/manifest.json`).
pub fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("manifest.json")
    } else {
        out.with_extension("manifest.json")
    }
}
