//! Diagram and summary serialization. CSV and JSON outputs are plain text
//! with shortest round-trip float formatting, so they are byte-stable.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::{classify_pair, PairType, TextureSummary};
use crate::cubical::{Diagram, DiagramMeta, PersistencePair};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "dim,birth,death,type,bx,by,bz,dx,dy,dz";

/// Versions of the stages that produced an artifact.
pub fn module_versions() -> BTreeMap<String, String> {
    let v = env!("CARGO_PKG_VERSION");
    [
        "grid", "sdt", "cubical", "classify", "synth", "metrics", "cli",
    ]
    .into_iter()
    .map(|m| (m.to_string(), v.to_string()))
    .collect()
}

pub fn hash_hex(hash: u64) -> String {
    format!("{hash:016x}")
}

fn parse_hash(s: &str) -> Result<u64> {
    u64::from_str_radix(s, 16).map_err(|e| Error::Format {
        format: "diagram json",
        reason: format!("bad source_hash {s:?}: {e}"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: serde_json::Value,
    pub source_hash: Option<String>,
    pub modules: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(config: serde_json::Value, source_hash: Option<u64>) -> Self {
        Provenance {
            config,
            source_hash: source_hash.map(hash_hex),
            modules: module_versions(),
        }
    }
}

fn type_literal(p: &PersistencePair) -> &'static str {
    classify_pair(p).map(PairType::as_str).unwrap_or("")
}

pub fn diagram_to_csv(dgm: &Diagram, prov: Option<&Provenance>) -> String {
    let mut out = String::with_capacity(64 * (dgm.pairs.len() + 2));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let coords = |v: Option<[usize; 3]>| match v {
        Some([x, y, z]) => format!("{x},{y},{z}"),
        None => "-1,-1,-1".to_string(),
    };
    for p in &dgm.pairs {
        let death = if p.is_essential() {
            "inf".to_string()
        } else {
            p.death.to_string()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.dim,
            p.birth,
            death,
            type_literal(p),
            coords(p.birth_voxel),
            coords(p.death_voxel)
        );
    }
    if let Some(prov) = prov {
        let _ = writeln!(out, "# provenance {}", serde_json::to_string(prov).unwrap());
    }
    out
}

fn csv_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        format: "diagram csv",
        reason: format!("line {line}: {}", reason.into()),
    }
}

/// Parses diagram CSV. A `# provenance` line restores `source_hash`; other
/// `#` lines are ignored. The `type` column is not trusted.
pub fn diagram_from_csv(text: &str) -> Result<Diagram> {
    let mut meta = DiagramMeta::default();
    if let Some(json) = text.lines().find_map(|l| l.strip_prefix("# provenance ")) {
        let prov: Provenance = serde_json::from_str(json).map_err(|e| csv_err(0, e.to_string()))?;
        meta.source_hash = prov.source_hash.as_deref().map(parse_hash).transpose()?;
    }
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(csv_err(1, "missing header")),
    }
    let mut pairs = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 10 {
            return Err(csv_err(
                i + 1,
                format!("expected 10 fields, got {}", f.len()),
            ));
        }
        let num = |s: &str| -> Result<f64> {
            if s == "inf" {
                return Ok(f64::INFINITY);
            }
            s.parse::<f64>()
                .map_err(|e| csv_err(i + 1, format!("{s:?}: {e}")))
        };
        let voxel = |s: &[&str]| -> Result<Option<[usize; 3]>> {
            let v: Vec<i64> = s
                .iter()
                .map(|t| t.parse().map_err(|e| csv_err(i + 1, format!("{t:?}: {e}"))))
                .collect::<Result<_>>()?;
            Ok(if v.iter().any(|&c| c < 0) {
                None
            } else {
                Some([v[0] as usize, v[1] as usize, v[2] as usize])
            })
        };
        let dim: u8 = f[0]
            .parse()
            .ok()
            .filter(|&d| d <= 2)
            .ok_or_else(|| csv_err(i + 1, format!("bad dim {:?}", f[0])))?;
        let mut p = PersistencePair::finite(dim, num(f[1])?, num(f[2])?);
        p.birth_voxel = voxel(&f[4..7])?;
        p.death_voxel = voxel(&f[7..10])?;
        pairs.push(p);
    }
    Ok(Diagram::new(pairs, meta))
}

#[derive(Serialize, Deserialize)]
struct MetaJson {
    source_hash: Option<String>,
    spacing: f64,
    transform: String,
    tie_rule: String,
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    dim: u8,
    birth: f64,
    /// `null` for essential pairs.
    death: Option<f64>,
    #[serde(rename = "type")]
    ty: Option<PairType>,
    birth_voxel: Option<[usize; 3]>,
    death_voxel: Option<[usize; 3]>,
}

#[derive(Serialize, Deserialize)]
struct DiagramJson {
    meta: MetaJson,
    pairs: Vec<PairJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

pub fn diagram_to_json(dgm: &Diagram, prov: Option<&Provenance>) -> String {
    let doc = DiagramJson {
        meta: MetaJson {
            source_hash: dgm.meta.source_hash.map(hash_hex),
            spacing: dgm.meta.spacing,
            transform: dgm.meta.transform.clone(),
            tie_rule: dgm.meta.tie_rule.clone(),
        },
        pairs: dgm
            .pairs
            .iter()
            .map(|p| PairJson {
                dim: p.dim,
                birth: p.birth,
                death: (!p.is_essential()).then_some(p.death),
                ty: classify_pair(p).ok(),
                birth_voxel: p.birth_voxel,
                death_voxel: p.death_voxel,
            })
            .collect(),
        provenance: prov.cloned(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("diagram serializes");
    s.push('\n');
    s
}

pub fn diagram_from_json(text: &str) -> Result<Diagram> {
    let doc: DiagramJson = serde_json::from_str(text).map_err(|e| Error::Format {
        format: "diagram json",
        reason: e.to_string(),
    })?;
    let pairs = doc
        .pairs
        .into_iter()
        .map(|p| {
            let mut q = PersistencePair::finite(p.dim, p.birth, p.death.unwrap_or(f64::INFINITY));
            q.birth_voxel = p.birth_voxel;
            q.death_voxel = p.death_voxel;
            q
        })
        .collect();
    let meta = DiagramMeta {
        source_hash: doc
            .meta
            .source_hash
            .as_deref()
            .map(parse_hash)
            .transpose()?,
        spacing: doc.meta.spacing,
        transform: doc.meta.transform,
        tie_rule: doc.meta.tie_rule,
    };
    Ok(Diagram::new(pairs, meta))
}

/// Reads a diagram from `.json` or (otherwise) CSV.
pub fn read_diagram(path: &Path) -> Result<Diagram> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        diagram_from_json(&text)
    } else {
        diagram_from_csv(&text)
    }
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    #[serde(flatten)]
    summary: &'a TextureSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<&'a Provenance>,
}

pub fn summary_to_json(summary: &TextureSummary, prov: Option<&Provenance>) -> String {
    let mut s = serde_json::to_string_pretty(&SummaryJson {
        summary,
        provenance: prov,
    })
    .expect("summary serializes");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Diagram {
        let mut a = PersistencePair::essential(0, -19.5);
        a.birth_voxel = Some([32, 32, 32]);
        let mut b = PersistencePair::finite(2, -2.5, 9.5);
        b.birth_voxel = Some([1, 2, 3]);
        b.death_voxel = Some([4, 5, 6]);
        let c = PersistencePair::finite(1, -0.1 - 0.2, 1.0 / 3.0);
        Diagram::new(
            vec![a, b, c],
            DiagramMeta {
                source_hash: Some(0xdead_beef_0000_0001),
                ..DiagramMeta::default()
            },
        )
    }

    #[test]
    fn csv_layout() {
        let csv = diagram_to_csv(&sample(), None);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0,-19.5,inf,ESS,32,32,32,-1,-1,-1");
        assert!(lines.contains(&"2,-2.5,9.5,VI,1,2,3,4,5,6"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = sample();
        let prov = Provenance::new(serde_json::json!({"seed": 3}), Some(7));
        let back = diagram_from_csv(&diagram_to_csv(&d, Some(&prov))).unwrap();
        assert_eq!(back.intervals(), d.intervals());
        assert_eq!(back.pairs[1].death_voxel, d.pairs[1].death_voxel);
        assert_eq!(back.meta.source_hash, Some(7));
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(diagram_from_csv("dim,birth\n").is_err());
        assert!(diagram_from_csv(&format!("{CSV_HEADER}\n0,1,2\n")).is_err());
        assert!(diagram_from_csv(&format!("{CSV_HEADER}\n7,1,2,,0,0,0,0,0,0\n")).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = sample();
        let text = diagram_to_json(&d, None);
        assert!(text.contains("\"death\": null"));
        assert!(text.contains("\"source_hash\": \"deadbeef00000001\""));
        assert!(text.contains("\"tie_rule\": \"value,dim,linear-index\""));
        let back = diagram_from_json(&text).unwrap();
        assert_eq!(back.intervals(), d.intervals());
        assert_eq!(back.meta, d.meta);
    }

    #[test]
    fn summary_json_has_provenance() {
        let s = crate::classify::summarize(&sample(), 0.5).unwrap();
        let prov = Provenance::new(serde_json::json!({}), Some(1));
        let text = summary_to_json(&s, Some(&prov));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["counts"]["VI"], 1);
        assert_eq!(v["provenance"]["source_hash"], "0000000000000001");
        assert_eq!(v["provenance"]["modules"]["sdt"], env!("CARGO_PKG_VERSION"));
    }
}
