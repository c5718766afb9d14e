//! Built-in corpus of stratified sets with ground-truth annotations.

use std::sync::Arc;

use lkcurv::implicit::{Clause, ImplicitSet};
use lkcurv::pl::PlComplex;
use lkcurv::regularity::Verdict;
use lkcurv::set::DefinableSet;
use lkcurv::strata::{StratifiedSet, Stratum};
use lkcurv::family::SetFamily;
use lkcurv::{Error, Result};
use serde::{Deserialize, Serialize};

/// Where an annotated value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Closed form by inspection.
    Elementary,
    /// A normalization or vanishing statement of the theory.
    Theorem,
    /// Computed by a named independent oracle.
    Oracle,
    /// Established in the stratification literature, confirmed by an oracle.
    ExternalLiterature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub basis: Basis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpectedVerdicts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Annotation {
    /// Θ_d at a point, d the declared dimension.
    Density { point: Vec<f64>, value: f64, tol: f64, source: Source },
    /// Λ_k^loc at a point.
    Curvature { point: Vec<f64>, k: usize, value: f64, tol: f64, source: Source },
    /// Λ_k(A ∩ B(center, radius)).
    GlobalCurvature { center: Vec<f64>, radius: f64, k: usize, value: f64, rel_tol: f64, source: Source },
    Regularity {
        x: String,
        y: String,
        at: Vec<f64>,
        expect: ExpectedVerdicts,
        /// Both strata are open pieces of affine subspaces.
        #[serde(default)]
        linear: bool,
        source: Source,
    },
}

impl Annotation {
    pub fn source(&self) -> &Source {
        match self {
            Annotation::Density { source, .. }
            | Annotation::Curvature { source, .. }
            | Annotation::GlobalCurvature { source, .. }
            | Annotation::Regularity { source, .. } => source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub stratum: String,
    pub k: usize,
    pub range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetractSpec {
    pub r0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StratumSpec {
    Pl { label: String, simplices: Vec<Vec<usize>> },
    Implicit { label: String, clauses: Vec<Clause>, declared_dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Implicit,
    Pl,
}

/// On-disk form of a corpus entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub id: String,
    #[serde(default)]
    pub notes: String,
    pub kind: Kind,
    pub ambient_dim: usize,
    #[serde(default)]
    pub clauses: Vec<Clause>,
    #[serde(default)]
    pub declared_dim: Option<usize>,
    #[serde(default)]
    pub vertices: Vec<Vec<f64>>,
    #[serde(default)]
    pub simplices: Vec<Vec<usize>>,
    #[serde(default)]
    pub strata: Vec<StratumSpec>,
    #[serde(default)]
    pub frontier: Vec<(String, String)>,
    #[serde(default)]
    pub family_split: Option<usize>,
    #[serde(default = "default_probe_radius")]
    pub probe_radius: f64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub retract: Option<RetractSpec>,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
}

fn default_probe_radius() -> f64 {
    0.5
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: String,
    pub notes: String,
    pub set: DefinableSet,
    pub stratified: StratifiedSet,
    pub family: Option<SetFamily>,
    pub sweep: Option<SweepSpec>,
    pub retract: Option<RetractSpec>,
    pub annotations: Vec<Annotation>,
}

impl CorpusEntry {
    pub fn from_file(f: CorpusFile) -> Result<Self> {
        for a in &f.annotations {
            let s = a.source();
            if matches!(s.basis, Basis::Oracle | Basis::ExternalLiterature) && s.oracle.is_none() {
                return Err(Error::Invalid(format!("{}: oracle-backed annotation without an oracle name", f.id)));
            }
        }
        let (set, strata) = match f.kind {
            Kind::Pl => {
                let c = Arc::new(PlComplex::new_closed(f.ambient_dim, f.vertices.clone(), &f.simplices)?);
                let mut strata = Vec::new();
                for s in &f.strata {
                    let StratumSpec::Pl { label, simplices } = s else {
                        return Err(Error::Invalid(format!("{}: implicit stratum in a PL entry", f.id)));
                    };
                    let ids = simplices
                        .iter()
                        .map(|v| {
                            let mut v = v.clone();
                            v.sort_unstable();
                            c.find(&v).ok_or_else(|| Error::Invalid(format!("{}: unknown simplex {v:?}", f.id)))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    strata.push(Stratum::pl(label.clone(), c.clone(), ids)?);
                }
                (DefinableSet::Pl(c), strata)
            }
            Kind::Implicit => {
                let dim = f
                    .declared_dim
                    .ok_or_else(|| Error::Invalid(format!("{}: implicit entry without declared_dim", f.id)))?;
                let set = ImplicitSet::new(f.ambient_dim, f.clauses.clone(), dim)?;
                let mut strata = Vec::new();
                for s in &f.strata {
                    let StratumSpec::Implicit { label, clauses, declared_dim } = s else {
                        return Err(Error::Invalid(format!("{}: PL stratum in an implicit entry", f.id)));
                    };
                    let st = ImplicitSet::new(f.ambient_dim, clauses.clone(), *declared_dim)?;
                    strata.push(Stratum::implicit(label.clone(), st));
                }
                (DefinableSet::Implicit(set), strata)
            }
        };
        let index = |l: &str| {
            strata
                .iter()
                .position(|s| s.label == l)
                .ok_or_else(|| Error::Invalid(format!("{}: unknown stratum {l}", f.id)))
        };
        let frontier = f
            .frontier
            .iter()
            .map(|(a, b)| Ok((index(a)?, index(b)?)))
            .collect::<Result<Vec<_>>>()?;
        if let Some(sw) = &f.sweep {
            index(&sw.stratum)?;
        }
        for a in &f.annotations {
            if let Annotation::Regularity { x, y, .. } = a {
                index(x)?;
                index(y)?;
            }
        }
        let family = f.family_split.map(|k| SetFamily::new(set.clone(), k)).transpose()?;
        let stratified = StratifiedSet {
            set: set.clone(),
            strata,
            frontier,
            probe_radius: f.probe_radius,
        };
        Ok(Self {
            id: f.id,
            notes: f.notes,
            set,
            stratified,
            family,
            sweep: f.sweep,
            retract: f.retract,
            annotations: f.annotations,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CorpusFile = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("corpus parse error: {e}")))?;
        Self::from_file(f)
    }

    /// Base points of the local annotations, deduplicated in order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for a in &self.annotations {
            let p = match a {
                Annotation::Density { point, .. } | Annotation::Curvature { point, .. } => point,
                _ => continue,
            };
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
        out
    }

    pub fn declared_dim(&self) -> usize {
        self.set.declared_dim()
    }
}

const BUILTIN: &[(&str, &str)] = &[
    ("circle", include_str!("../corpus/circle.json")),
    ("cone-surface", include_str!("../corpus/cone-surface.json")),
    ("cusp", include_str!("../corpus/cusp.json")),
    ("disc", include_str!("../corpus/disc.json")),
    ("fan", include_str!("../corpus/fan.json")),
    ("half-disc", include_str!("../corpus/half-disc.json")),
    ("half-line", include_str!("../corpus/half-line.json")),
    ("half-plane-pair", include_str!("../corpus/half-plane-pair.json")),
    ("half-space-stack", include_str!("../corpus/half-space-stack.json")),
    ("line", include_str!("../corpus/line.json")),
    ("parabola", include_str!("../corpus/parabola.json")),
    ("ray-cone", include_str!("../corpus/ray-cone.json")),
    ("sector-270", include_str!("../corpus/sector-270.json")),
    ("sector-60", include_str!("../corpus/sector-60.json")),
    ("square-boundary", include_str!("../corpus/square-boundary.json")),
    ("star-2", include_str!("../corpus/star-2.json")),
    ("star-3", include_str!("../corpus/star-3.json")),
    ("star-4", include_str!("../corpus/star-4.json")),
    ("whitney-cusp", include_str!("../corpus/whitney-cusp.json")),
];

pub fn ids() -> Vec<&'static str> {
    BUILTIN.iter().map(|(id, _)| *id).collect()
}

/// JSON text of a built-in entry, or of a corpus file when `id` is a path.
pub fn source(id: &str) -> Result<String> {
    if let Some((_, text)) = BUILTIN.iter().find(|(i, _)| *i == id) {
        return Ok(text.to_string());
    }
    let path = std::path::Path::new(id);
    if path.is_file() {
        return std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{id}: {e}")));
    }
    Err(Error::Invalid(format!("no corpus entry named {id}")))
}

pub fn load(id: &str) -> Result<CorpusEntry> {
    CorpusEntry::from_json(&source(id)?)
}

pub fn load_all() -> Result<Vec<CorpusEntry>> {
    ids().into_iter().map(load).collect()
}
